//! Global color histogram and the color-structure histogram.

use crate::error::{Error, Result};
use crate::raster::{quantize_rgb, RasterImage, HSV_BINS};

/// Side of the square structuring element before subsampling is applied.
pub const STRUCTURING_ELEMENT: usize = 8;

/// Relative frequency of each quantized HSV color over all pixels.
pub fn scalable_color(img: &RasterImage) -> Vec<f64> {
    let mut hist = vec![0usize; HSV_BINS];
    for &p in img.pixels() {
        hist[quantize_rgb(p)] += 1;
    }
    let total = (img.width() * img.height()) as f64;
    hist.into_iter().map(|c| c as f64 / total).collect()
}

/// Subsampling parameters for an image of `w × h` pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubsampleParams {
    /// Exponent `p`.
    pub exponent: u32,
    /// Subsampling factor `2^p`.
    pub factor: usize,
    /// Spatial extent of the structuring element in original pixels.
    pub extent: usize,
}

pub fn subsample_params(w: usize, h: usize) -> SubsampleParams {
    let raw = 0.5 * ((w * h) as f64).log2() - 8.0;
    // f64::round rounds half away from zero
    let exponent = raw.round().max(0.0) as u32;
    let factor = 1usize << exponent;
    SubsampleParams {
        exponent,
        factor,
        extent: STRUCTURING_ELEMENT * factor,
    }
}

/// Color-structure histogram.
///
/// The image is replacement-subsampled by the factor from
/// [`subsample_params`], then an 8×8 element slides one pixel at a time over
/// the subsampled grid. Each element position adds one to every color bin
/// present in it; the result is divided by the number of positions.
pub fn color_structure(img: &RasterImage) -> Result<Vec<f64>> {
    let params = subsample_params(img.width(), img.height());
    let k = params.factor;
    let sub_w = img.width().div_ceil(k);
    let sub_h = img.height().div_ceil(k);
    if sub_w < STRUCTURING_ELEMENT || sub_h < STRUCTURING_ELEMENT {
        return Err(Error::TooSmallForColorStructure {
            width: img.width(),
            height: img.height(),
            sub_width: sub_w,
            sub_height: sub_h,
        });
    }

    let bins: Vec<u16> = (0..sub_h)
        .flat_map(|y| (0..sub_w).map(move |x| (x, y)))
        .map(|(x, y)| quantize_rgb(img.get(x * k, y * k)) as u16)
        .collect();

    let positions_x = sub_w - STRUCTURING_ELEMENT + 1;
    let positions_y = sub_h - STRUCTURING_ELEMENT + 1;
    let mut hist = vec![0usize; HSV_BINS];
    let mut stamp = vec![usize::MAX; HSV_BINS];
    for wy in 0..positions_y {
        for wx in 0..positions_x {
            let window = wy * positions_x + wx;
            for y in wy..wy + STRUCTURING_ELEMENT {
                let row = &bins[y * sub_w + wx..y * sub_w + wx + STRUCTURING_ELEMENT];
                for &b in row {
                    let b = b as usize;
                    if stamp[b] != window {
                        stamp[b] = window;
                        hist[b] += 1;
                    }
                }
            }
        }
    }
    let positions = (positions_x * positions_y) as f64;
    Ok(hist.into_iter().map(|c| c as f64 / positions).collect())
}
