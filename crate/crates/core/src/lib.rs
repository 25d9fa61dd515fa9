pub mod convolution;
pub mod dataview;
pub mod descriptors;
pub mod error;
pub mod evaluation;
pub mod featfile;
pub mod raster;
pub mod svm;
pub mod synth;
pub mod textio;

pub use error::{Error, Result};
