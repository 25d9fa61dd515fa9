//! Kernel support vector machines trained by gradient ascent on the dual.

pub mod kernel;
pub mod model;
pub mod multiclass;
pub mod train;

pub use kernel::{gram_psd_check, GramCache, KernelSpec};
pub use model::{BinarySvmModel, MulticlassModel, SupportVector};
pub use multiclass::{train_multiclass, MulticlassOutcome};
pub use train::{
    dual_objective, feasibility_gap, train_binary, train_problem, EpochRecord, Gram, Problem, Terminator, TrainConfig,
    TrainOutcome,
};
