//! Neighborhood gray-tone difference matrix and the five perceptual texture
//! measures derived from it: coarseness, contrast, busyness, complexity and
//! strength.
//!
//! Only the interior of the image (pixels at least `d` away from every
//! border) contributes, so the region of interest may be rectangular.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{GrayImage, MAX_GRAY};

const TONES: usize = MAX_GRAY as usize + 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NgtdmConfig {
    /// Neighborhood radius.
    pub d: usize,
    /// Guard added to denominators of coarseness and strength.
    pub epsilon: f64,
}

impl Default for NgtdmConfig {
    fn default() -> Self {
        Self { d: 1, epsilon: 1e-8 }
    }
}

impl NgtdmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || !(self.epsilon > 0.0) {
            return Err(Error::Config(format!(
                "NGTDM needs d >= 1 and epsilon > 0; got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Neighborhood sums over the interior, excluding each center pixel.
///
/// `sums[row * width + col]` is the integer sum of the `(2d+1)² − 1`
/// neighbors of interior pixel `(d + col, d + row)`; the neighborhood mean is
/// that sum divided by [`AbarGrid::divisor`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbarGrid {
    pub width: usize,
    pub height: usize,
    pub d: usize,
    pub divisor: u32,
    pub sums: Vec<u32>,
}

impl AbarGrid {
    pub fn mean(&self, col: usize, row: usize) -> f64 {
        f64::from(self.sums[row * self.width + col]) / f64::from(self.divisor)
    }
}

fn interior(img: &GrayImage, d: usize) -> Result<(usize, usize)> {
    let (w, h) = (img.width(), img.height());
    if d == 0 || w <= 2 * d || h <= 2 * d {
        return Err(Error::TooSmallForNgtdm { width: w, height: h, d });
    }
    Ok((w - 2 * d, h - 2 * d))
}

/// Neighborhood sums computed by sliding the window: the first interior
/// pixel is summed in full, every later pixel of the first interior row
/// reuses its left neighbor's window, and every later row reuses the window
/// above. Each step adds and removes one line of `2d + 1` pixels.
pub fn ngtdm_incremental_abar(img: &GrayImage, d: usize) -> Result<AbarGrid> {
    let (iw, ih) = interior(img, d)?;
    let w = img.width();
    let tones = img.tones();
    let px = |x: usize, y: usize| u32::from(tones[y * w + x]);
    let side = 2 * d + 1;

    // full-window sums including the center, indexed by interior coordinate
    let mut full = vec![0u32; iw * ih];
    full[0] = (0..side).flat_map(|y| (0..side).map(move |x| (x, y))).map(|(x, y)| px(x, y)).sum();
    for col in 1..iw {
        let cx = d + col;
        let entering: u32 = (0..side).map(|y| px(cx + d, y)).sum();
        let leaving: u32 = (0..side).map(|y| px(cx - d - 1, y)).sum();
        full[col] = full[col - 1] + entering - leaving;
    }
    for row in 1..ih {
        let cy = d + row;
        for col in 0..iw {
            let cx = d + col;
            let entering: u32 = (cx - d..=cx + d).map(|x| px(x, cy + d)).sum();
            let leaving: u32 = (cx - d..=cx + d).map(|x| px(x, cy - d - 1)).sum();
            full[row * iw + col] = full[(row - 1) * iw + col] + entering - leaving;
        }
    }

    for row in 0..ih {
        for col in 0..iw {
            full[row * iw + col] -= px(d + col, d + row);
        }
    }
    Ok(AbarGrid {
        width: iw,
        height: ih,
        d,
        divisor: (side * side - 1) as u32,
        sums: full,
    })
}

/// Neighborhood gray-tone difference matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Ngtdm {
    /// Accumulated absolute deviation `s(i)` per tone.
    pub s: Vec<f64>,
    /// Relative frequency `p_i` of each tone over the interior.
    pub p: Vec<f64>,
    /// Number of tones present in the interior.
    pub n_g: usize,
    /// Interior pixel count.
    pub n: usize,
}

pub fn ngtdm(img: &GrayImage, cfg: &NgtdmConfig) -> Result<Ngtdm> {
    cfg.validate()?;
    let abar = ngtdm_incremental_abar(img, cfg.d)?;
    Ok(ngtdm_from_abar(img, &abar))
}

pub(crate) fn ngtdm_from_abar(img: &GrayImage, abar: &AbarGrid) -> Ngtdm {
    let d = abar.d;
    let mut s = vec![0.0; TONES];
    let mut counts = vec![0usize; TONES];
    for row in 0..abar.height {
        for col in 0..abar.width {
            let tone = img.get(d + col, d + row) as usize;
            counts[tone] += 1;
            s[tone] += (tone as f64 - abar.mean(col, row)).abs();
        }
    }
    let n = abar.width * abar.height;
    let p: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let n_g = counts.iter().filter(|&&c| c > 0).count();
    Ngtdm { s, p, n_g, n }
}

impl Ngtdm {
    fn present(&self) -> impl Iterator<Item = (usize, f64, f64)> + Clone + '_ {
        self.p
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0.0)
            .map(|(i, &p)| (i, p, self.s[i]))
    }

    fn weighted_deviation(&self) -> f64 {
        self.present().map(|(_, p, s)| p * s).sum()
    }
}

pub fn coarseness(n: &Ngtdm, cfg: &NgtdmConfig) -> f64 {
    1.0 / (cfg.epsilon + n.weighted_deviation())
}

/// Zero when fewer than two tones are present.
pub fn contrast(n: &Ngtdm, _cfg: &NgtdmConfig) -> f64 {
    if n.n_g < 2 {
        return 0.0;
    }
    let mut spread = 0.0;
    for (i, pi, _) in n.present() {
        for (j, pj, _) in n.present() {
            let diff = i as f64 - j as f64;
            spread += pi * pj * diff * diff;
        }
    }
    let ng = n.n_g as f64;
    let variation: f64 = n.s.iter().sum::<f64>() / n.n as f64;
    spread / (ng * (ng - 1.0)) * variation
}

/// Numerator and denominator of busyness.
///
/// The denominator sums `|i·p_i − j·p_j|` over present tone pairs with
/// `j >= i`.
pub fn busyness_parts(n: &Ngtdm) -> (f64, f64) {
    let numerator = n.weighted_deviation();
    let mut denominator = 0.0;
    for (i, pi, _) in n.present() {
        for (j, pj, _) in n.present().filter(|&(j, _, _)| j >= i) {
            denominator += (i as f64 * pi - j as f64 * pj).abs();
        }
    }
    (numerator, denominator)
}

/// Zero when the denominator vanishes (single-tone interior).
pub fn busyness(n: &Ngtdm, _cfg: &NgtdmConfig) -> f64 {
    let (num, den) = busyness_parts(n);
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn complexity(n: &Ngtdm, _cfg: &NgtdmConfig) -> f64 {
    let mut total = 0.0;
    for (i, pi, si) in n.present() {
        for (j, pj, sj) in n.present() {
            let diff = (i as f64 - j as f64).abs();
            total += diff / (n.n as f64 * (pi + pj)) * (pi * si + pj * sj);
        }
    }
    total
}

pub fn strength(n: &Ngtdm, cfg: &NgtdmConfig) -> f64 {
    let mut numerator = 0.0;
    for (i, pi, _) in n.present() {
        for (j, pj, _) in n.present() {
            let diff = i as f64 - j as f64;
            numerator += (pi + pj) * diff * diff;
        }
    }
    numerator / (cfg.epsilon + n.s.iter().sum::<f64>())
}

/// `[coarseness, contrast, busyness, complexity, strength]` of an image.
pub fn visual_texture(img: &GrayImage, cfg: &NgtdmConfig) -> Result<[f64; 5]> {
    let m = ngtdm(img, cfg)?;
    Ok([
        coarseness(&m, cfg),
        contrast(&m, cfg),
        busyness(&m, cfg),
        complexity(&m, cfg),
        strength(&m, cfg),
    ])
}
