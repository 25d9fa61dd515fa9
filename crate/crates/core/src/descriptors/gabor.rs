//! Gabor wavelet bank with half-peak aligned filters, and the homogeneous
//! texture descriptor built from it.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::convolution::{Convolver, Kernel2D};
use crate::error::{Error, Result};
use crate::raster::GrayImage;

/// Largest kernel side the bank will generate.
pub const MAX_KERNEL_SIZE: usize = 91;

/// Half-width of a kernel in units of the (unscaled) spatial sigma.
const TRUNCATION_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaborBankConfig {
    /// Lower center frequency of interest, cycles/pixel.
    pub u_lo: f64,
    /// Upper center frequency of interest, cycles/pixel.
    pub u_hi: f64,
    pub scales: usize,
    pub orientations: usize,
}

impl Default for GaborBankConfig {
    fn default() -> Self {
        Self {
            u_lo: 0.05,
            u_hi: 0.4,
            scales: 5,
            orientations: 6,
        }
    }
}

/// Derived bank constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaborParams {
    /// Scale factor between neighboring scales.
    pub a: f64,
    pub sigma_u: f64,
    pub sigma_v: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
}

impl GaborBankConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.u_lo > 0.0
            && self.u_lo < self.u_hi
            && self.u_hi < 0.5
            && self.scales >= 2
            && self.orientations >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "Gabor bank needs 0 < U_lo < U_hi < 0.5, S >= 2, K >= 1; got {self:?}"
            )))
        }
    }

    /// Number of reals the homogeneous texture descriptor emits.
    pub fn descriptor_len(&self) -> usize {
        2 * self.scales * self.orientations
    }

    pub fn params(&self) -> Result<GaborParams> {
        self.validate()?;
        let a = (self.u_hi / self.u_lo).powf(1.0 / (self.scales - 1) as f64);
        let sigma_u = (a - 1.0) * self.u_hi / ((a + 1.0) * (2.0 * LN_2).sqrt());
        let two_ln2 = 2.0 * LN_2;
        let first = self.u_hi - two_ln2 * (sigma_u * sigma_u / self.u_hi);
        let second = (two_ln2 - (two_ln2 * sigma_u / self.u_hi).powi(2)).sqrt();
        let sigma_v = (PI / (2.0 * self.orientations as f64)).tan() * first * second;
        if !(sigma_v > 0.0) {
            return Err(Error::Config(format!("non-positive sigma_v {sigma_v} for {self:?}")));
        }
        Ok(GaborParams {
            a,
            sigma_u,
            sigma_v,
            sigma_x: 1.0 / (2.0 * PI * sigma_u),
            sigma_y: 1.0 / (2.0 * PI * sigma_v),
        })
    }
}

/// Ratio of spatial sigma to wavelength for a filter of bandwidth `octaves`.
pub fn sigma_over_lambda(octaves: f64) -> f64 {
    let two_b = 2f64.powf(octaves);
    (LN_2 / 2.0).sqrt() / PI * (two_b + 1.0) / (two_b - 1.0)
}

#[derive(Debug, Clone)]
pub struct GaborFilter {
    pub scale: usize,
    pub orientation: usize,
    pub kernel: Kernel2D,
}

/// The `S·K` bank kernels, scale-major, each at most [`MAX_KERNEL_SIZE`].
pub fn gabor_bank(cfg: &GaborBankConfig) -> Result<Vec<GaborFilter>> {
    gabor_bank_capped(cfg, MAX_KERNEL_SIZE)
}

/// As [`gabor_bank`] with an explicit odd upper bound on kernel size.
pub fn gabor_bank_capped(cfg: &GaborBankConfig, max_size: usize) -> Result<Vec<GaborFilter>> {
    if max_size == 0 || max_size % 2 == 0 {
        return Err(Error::KernelSize(max_size));
    }
    let params = cfg.params()?;
    let mut bank = Vec::with_capacity(cfg.scales * cfg.orientations);
    for m in 0..cfg.scales {
        for n in 0..cfg.orientations {
            let kernel = gabor_kernel(cfg, &params, m, n, max_size)?;
            bank.push(GaborFilter {
                scale: m,
                orientation: n,
                kernel,
            });
        }
    }
    Ok(bank)
}

fn gabor_kernel(
    cfg: &GaborBankConfig,
    p: &GaborParams,
    m: usize,
    n: usize,
    max_size: usize,
) -> Result<Kernel2D> {
    let scale = p.a.powi(-(m as i32));
    let theta = n as f64 * PI / cfg.orientations as f64;
    let (sin, cos) = theta.sin_cos();
    let half_wanted = (TRUNCATION_SIGMAS * p.sigma_x / scale).ceil() as usize;
    let half = half_wanted.min(max_size / 2);
    let size = 2 * half + 1;
    let norm = scale / (2.0 * PI * p.sigma_x * p.sigma_y);
    let mut taps = Vec::with_capacity(size * size);
    for row in 0..size {
        let y = row as f64 - half as f64;
        for col in 0..size {
            let x = col as f64 - half as f64;
            let xr = scale * (x * cos + y * sin);
            let yr = scale * (-x * sin + y * cos);
            let envelope = (-0.5 * (xr * xr / (p.sigma_x * p.sigma_x) + yr * yr / (p.sigma_y * p.sigma_y))).exp();
            let phase = 2.0 * PI * cfg.u_hi * xr;
            taps.push(Complex64::from_polar(norm * envelope, phase));
        }
    }
    Kernel2D::new(size, taps)
}

/// Largest odd number not above `n`.
fn odd_floor(n: usize) -> usize {
    if n % 2 == 1 {
        n
    } else {
        n.saturating_sub(1)
    }
}

/// Mean and standard deviation of the response magnitude of every bank
/// filter, scale-major, `[mean, std]` per filter.
///
/// Kernels are additionally capped at the largest odd size that fits the
/// image.
pub fn homogeneous_texture(img: &GrayImage, cfg: &GaborBankConfig) -> Result<Vec<f64>> {
    homogeneous_texture_with(img, cfg, &Convolver::new())
}

pub fn homogeneous_texture_with(
    img: &GrayImage,
    cfg: &GaborBankConfig,
    convolver: &Convolver,
) -> Result<Vec<f64>> {
    let cap = odd_floor(img.width().min(img.height())).min(MAX_KERNEL_SIZE);
    let bank = gabor_bank_capped(cfg, cap)?;
    let kernels: Vec<&Kernel2D> = bank.iter().map(|f| &f.kernel).collect();
    let responses = convolver.convolve_many(&img.to_real(), img.width(), img.height(), &kernels)?;
    let mut out = Vec::with_capacity(cfg.descriptor_len());
    for response in responses {
        let (mean, std) = magnitude_stats(&response);
        out.push(mean);
        out.push(std);
    }
    Ok(out)
}

fn magnitude_stats(response: &[Complex64]) -> (f64, f64) {
    let n = response.len() as f64;
    let mean = response.iter().map(|c| c.norm()).sum::<f64>() / n;
    let var = response.iter().map(|c| (c.norm() - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_bank_constants() {
        let p = GaborBankConfig::default().params().unwrap();
        assert!((p.a - 8f64.powf(0.25)).abs() < 1e-12);
        assert!((p.a - 1.681_792_830_507_429).abs() < 1e-9);
        assert!(p.sigma_u > 0.0 && p.sigma_v > 0.0);
        assert!((p.sigma_x * 2.0 * PI * p.sigma_u - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_octave_bandwidth() {
        assert!((sigma_over_lambda(1.0) - 0.5622).abs() < 1e-3);
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            GaborBankConfig { u_lo: 0.0, ..Default::default() },
            GaborBankConfig { u_lo: 0.4, u_hi: 0.3, ..Default::default() },
            GaborBankConfig { u_hi: 0.5, ..Default::default() },
            GaborBankConfig { scales: 1, ..Default::default() },
            GaborBankConfig { orientations: 0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(gabor_bank(&cfg).is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn bank_shape() {
        let cfg = GaborBankConfig::default();
        let bank = gabor_bank(&cfg).unwrap();
        assert_eq!(bank.len(), 30);
        assert_eq!((bank[7].scale, bank[7].orientation), (1, 1));
        let largest = bank.iter().map(|f| f.kernel.size()).max().unwrap();
        assert_eq!(largest, MAX_KERNEL_SIZE);
        assert!(bank.iter().all(|f| f.kernel.size() % 2 == 1));
        // coarser scales never get smaller kernels
        for w in bank.windows(2) {
            if w[1].scale > w[0].scale {
                assert!(w[1].kernel.size() >= w[0].kernel.size());
            }
        }
    }

    #[test]
    fn zero_orientation_symmetry() {
        let bank = gabor_bank(&GaborBankConfig::default()).unwrap();
        let k = &bank[0].kernel;
        assert_eq!(bank[0].orientation, 0);
        let s = k.size();
        for r in 0..s {
            for c in 0..s {
                let here = k.tap(r, c).im;
                let mirror_x = k.tap(r, s - 1 - c).im;
                let mirror_y = k.tap(s - 1 - r, c).im;
                assert!((here + mirror_x).abs() < 1e-15, "imag not odd in x");
                assert!((here - mirror_y).abs() < 1e-15, "imag not even in y");
            }
        }
    }

    #[test]
    fn constant_image_has_zero_spread() {
        let img = GrayImage::new(40, 40, vec![90; 1600]).unwrap();
        let cfg = GaborBankConfig::default();
        let ht = homogeneous_texture(&img, &cfg).unwrap();
        assert_eq!(ht.len(), 60);
        for (i, v) in ht.iter().enumerate() {
            if i % 2 == 1 {
                assert!(v.abs() < 1e-9, "std {i} = {v}");
            }
        }
    }
}
