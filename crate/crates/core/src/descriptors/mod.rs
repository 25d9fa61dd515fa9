//! Image descriptors and their concatenation into one feature vector.
//!
//! Segment order is fixed: scalable color (256), color structure (256),
//! color layout (20), homogeneous texture (`2·S·K`), visual texture (5).

pub mod color;
pub mod gabor;
pub mod layout;
pub mod ngtdm;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convolution::Convolver;
use crate::error::Result;
use crate::raster::{to_gray, RasterImage, HSV_BINS};

pub use color::{color_structure, scalable_color, subsample_params, SubsampleParams};
pub use gabor::{gabor_bank, homogeneous_texture, sigma_over_lambda, GaborBankConfig, GaborFilter, GaborParams};
pub use layout::{color_layout, Zigzag, COLOR_LAYOUT_LEN};
pub use ngtdm::{
    busyness, busyness_parts, coarseness, complexity, contrast, ngtdm, ngtdm_incremental_abar, strength,
    visual_texture, AbarGrid, Ngtdm, NgtdmConfig,
};

/// A named, contiguous run of values inside a feature vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub len: usize,
}

/// Segment layout shared by every vector extracted with one configuration.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub segments: Vec<Segment>,
}

impl FeatureLayout {
    pub fn for_config(cfg: &ExtractConfig) -> Self {
        let seg = |name: &str, len| Segment {
            name: name.to_string(),
            len,
        };
        Self {
            segments: vec![
                seg("scalable_color", HSV_BINS),
                seg("color_structure", HSV_BINS),
                seg("color_layout", COLOR_LAYOUT_LEN),
                seg("homogeneous_texture", cfg.gabor.descriptor_len()),
                seg("visual_texture", 5),
            ],
        }
    }

    pub fn total_len(&self) -> usize {
        self.segments.iter().map(|s| s.len).sum()
    }

    /// Index range of the named segment.
    pub fn range_of(&self, name: &str) -> Option<std::ops::Range<usize>> {
        let mut start = 0;
        for s in &self.segments {
            if s.name == name {
                return Some(start..start + s.len);
            }
            start += s.len;
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ExtractConfig {
    pub gabor: GaborBankConfig,
    pub ngtdm: NgtdmConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout: FeatureLayout,
}

impl FeatureVector {
    pub fn segment(&self, name: &str) -> Option<&[f64]> {
        self.layout.range_of(name).map(|r| &self.values[r])
    }
}

/// Runs every descriptor on `img` and concatenates the results.
pub fn extract_all(img: &RasterImage, cfg: &ExtractConfig) -> Result<FeatureVector> {
    extract_all_with(img, cfg, &Convolver::new())
}

pub fn extract_all_with(img: &RasterImage, cfg: &ExtractConfig, convolver: &Convolver) -> Result<FeatureVector> {
    let layout = FeatureLayout::for_config(cfg);
    let mut values = Vec::with_capacity(layout.total_len());
    values.extend(scalable_color(img));
    values.extend(color_structure(img).map_err(|e| e.in_descriptor("color_structure"))?);
    values.extend(color_layout(img).map_err(|e| e.in_descriptor("color_layout"))?);
    let gray = to_gray(img);
    values.extend(
        gabor::homogeneous_texture_with(&gray, &cfg.gabor, convolver)
            .map_err(|e| e.in_descriptor("homogeneous_texture"))?,
    );
    values.extend(visual_texture(&gray, &cfg.ngtdm).map_err(|e| e.in_descriptor("visual_texture"))?);
    debug_assert_eq!(values.len(), layout.total_len());
    Ok(FeatureVector { values, layout })
}

/// Extracts many images in parallel; results keep the input order.
pub fn extract_batch(images: &[RasterImage], cfg: &ExtractConfig) -> Vec<Result<FeatureVector>> {
    let convolver = Convolver::new();
    images.par_iter().map(|img| extract_all_with(img, cfg, &convolver)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn layout_lengths() {
        let layout = FeatureLayout::for_config(&ExtractConfig::default());
        assert_eq!(layout.total_len(), 256 + 256 + 20 + 60 + 5);
        assert_eq!(layout.range_of("color_layout"), Some(512..532));
        assert_eq!(layout.range_of("nope"), None);
    }

    #[test]
    fn random_image_vector_is_finite_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(139);
        let img = RasterImage::from_fn(139, 139, |_, _| rng.random()).unwrap();
        let cfg = ExtractConfig::default();
        let a = extract_all(&img, &cfg).unwrap();
        let b = extract_all(&img.clone(), &cfg).unwrap();
        assert_eq!(a.values.len(), 597);
        assert!(a.values.iter().all(|v| v.is_finite()));
        assert_eq!(
            a.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn black_image_composes_trivial_cases() {
        let img = RasterImage::filled(64, 64, [0, 0, 0]).unwrap();
        let cfg = ExtractConfig::default();
        let fv = extract_all(&img, &cfg).unwrap();
        let sc = fv.segment("scalable_color").unwrap();
        assert_eq!(sc[0], 1.0);
        let vt = fv.segment("visual_texture").unwrap();
        assert_eq!(vt, &[1.0 / cfg.ngtdm.epsilon, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn failing_descriptor_is_named() {
        let img = RasterImage::filled(7, 7, [1, 2, 3]).unwrap();
        let err = extract_all(&img, &ExtractConfig::default()).unwrap_err();
        assert!(err.to_string().starts_with("color_structure:"), "{err}");
    }

    #[test]
    fn batch_preserves_order() {
        let imgs: Vec<_> = (0..4u8)
            .map(|i| RasterImage::filled(16 + i as usize, 16, [i * 60, 0, 0]).unwrap())
            .collect();
        let cfg = ExtractConfig::default();
        let batch = extract_batch(&imgs, &cfg);
        for (img, got) in imgs.iter().zip(batch) {
            assert_eq!(got.unwrap(), extract_all(img, &cfg).unwrap());
        }
    }
}
