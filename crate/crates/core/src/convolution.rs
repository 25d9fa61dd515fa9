//! Circular 2D convolution through the discrete Fourier transform.
//!
//! The kernel is laid out in an image-sized grid with its center tap on the
//! origin and the four quadrants wrapped to the corners; the product of the
//! two forward transforms is transformed back and divided by `W·H`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Square convolution kernel of odd size with complex taps, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    size: usize,
    taps: Vec<Complex64>,
}

impl Kernel2D {
    pub fn new(size: usize, taps: Vec<Complex64>) -> Result<Self> {
        if size == 0 || size % 2 == 0 {
            return Err(Error::KernelSize(size));
        }
        if taps.len() != size * size {
            return Err(Error::PixelCount {
                expected: size * size,
                actual: taps.len(),
            });
        }
        Ok(Self { size, taps })
    }

    pub fn from_real(size: usize, taps: &[f64]) -> Result<Self> {
        Self::new(size, taps.iter().map(|&t| Complex64::new(t, 0.0)).collect())
    }

    /// Single center tap equal to one.
    pub fn delta(size: usize) -> Result<Self> {
        let mut taps = vec![Complex64::new(0.0, 0.0); size * size];
        if size % 2 == 1 {
            taps[size * size / 2] = Complex64::new(1.0, 0.0);
        }
        Self::new(size, taps)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    /// Tap at `(row, col)` in kernel coordinates.
    pub fn tap(&self, row: usize, col: usize) -> Complex64 {
        self.taps[row * self.size + col]
    }

    fn check_fits(&self, width: usize, height: usize) -> Result<()> {
        if self.size > width || self.size > height {
            return Err(Error::KernelExceedsImage {
                size: self.size,
                width,
                height,
            });
        }
        Ok(())
    }
}

/// Places `kernel` in an `out_h × out_w` row-major grid so that its center
/// tap sits at `(0, 0)` and the remaining quadrants wrap to the corners.
pub fn wrap_kernel(kernel: &Kernel2D, out_w: usize, out_h: usize) -> Result<Vec<Complex64>> {
    kernel.check_fits(out_w, out_h)?;
    let half = kernel.size / 2;
    let mut grid = vec![Complex64::new(0.0, 0.0); out_w * out_h];
    for r in 0..kernel.size {
        let y = (r + out_h - half) % out_h;
        for c in 0..kernel.size {
            let x = (c + out_w - half) % out_w;
            grid[y * out_w + x] = kernel.tap(r, c);
        }
    }
    Ok(grid)
}

struct Plans {
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

/// Convolution engine that caches transform plans per image size.
///
/// Safe to share between threads; the plan cache is behind a mutex and the
/// transforms themselves run outside it.
pub struct Convolver {
    planner: Mutex<FftPlanner<f64>>,
    plans: Mutex<HashMap<(usize, usize), Arc<Plans>>>,
}

impl std::fmt::Debug for Convolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Convolver").finish_non_exhaustive()
    }
}

impl Default for Convolver {
    fn default() -> Self {
        Self {
            planner: Mutex::new(FftPlanner::new()),
            plans: Mutex::new(HashMap::new()),
        }
    }
}

impl Convolver {
    pub fn new() -> Self {
        Self::default()
    }

    fn plans(&self, width: usize, height: usize) -> Arc<Plans> {
        let mut cache = self.plans.lock().expect("plan cache poisoned");
        cache
            .entry((width, height))
            .or_insert_with(|| {
                let mut planner = self.planner.lock().expect("planner poisoned");
                Arc::new(Plans {
                    row_fwd: planner.plan_fft_forward(width),
                    row_inv: planner.plan_fft_inverse(width),
                    col_fwd: planner.plan_fft_forward(height),
                    col_inv: planner.plan_fft_inverse(height),
                })
            })
            .clone()
    }

    /// Circular convolution of a real `width × height` grid with `kernel`.
    pub fn convolve(
        &self,
        image: &[f64],
        width: usize,
        height: usize,
        kernel: &Kernel2D,
    ) -> Result<Vec<Complex64>> {
        if image.len() != width * height {
            return Err(Error::PixelCount {
                expected: width * height,
                actual: image.len(),
            });
        }
        let spectrum_k = {
            let mut k = wrap_kernel(kernel, width, height)?;
            self.forward(&mut k, width, height);
            k
        };
        let mut data: Vec<Complex64> = image.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut data, width, height);
        for (d, k) in data.iter_mut().zip(&spectrum_k) {
            *d *= k;
        }
        self.inverse(&mut data, width, height);
        Ok(data)
    }

    /// Convolves one image with several kernels, transforming the image once.
    pub fn convolve_many(
        &self,
        image: &[f64],
        width: usize,
        height: usize,
        kernels: &[&Kernel2D],
    ) -> Result<Vec<Vec<Complex64>>> {
        if image.len() != width * height {
            return Err(Error::PixelCount {
                expected: width * height,
                actual: image.len(),
            });
        }
        let mut spectrum: Vec<Complex64> = image.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut spectrum, width, height);
        kernels
            .iter()
            .map(|kernel| {
                let mut k = wrap_kernel(kernel, width, height)?;
                self.forward(&mut k, width, height);
                for (kv, s) in k.iter_mut().zip(&spectrum) {
                    *kv *= s;
                }
                self.inverse(&mut k, width, height);
                Ok(k)
            })
            .collect()
    }

    fn forward(&self, data: &mut [Complex64], width: usize, height: usize) {
        let plans = self.plans(width, height);
        transform_2d(data, width, height, &plans.row_fwd, &plans.col_fwd);
    }

    fn inverse(&self, data: &mut [Complex64], width: usize, height: usize) {
        let plans = self.plans(width, height);
        transform_2d(data, width, height, &plans.row_inv, &plans.col_inv);
        let norm = 1.0 / (width * height) as f64;
        for v in data.iter_mut() {
            *v *= norm;
        }
    }
}

fn transform_2d(
    data: &mut [Complex64],
    width: usize,
    height: usize,
    row: &Arc<dyn Fft<f64>>,
    col: &Arc<dyn Fft<f64>>,
) {
    row.process(data);
    let mut column = vec![Complex64::new(0.0, 0.0); height];
    for x in 0..width {
        for (y, c) in column.iter_mut().enumerate() {
            *c = data[y * width + x];
        }
        col.process(&mut column);
        for (y, c) in column.iter().enumerate() {
            data[y * width + x] = *c;
        }
    }
}

/// One-shot circular convolution; see [`Convolver::convolve`].
pub fn convolve_fft(
    image: &[f64],
    width: usize,
    height: usize,
    kernel: &Kernel2D,
) -> Result<Vec<Complex64>> {
    Convolver::new().convolve(image, width, height, kernel)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct circular convolution, O(K²) per output pixel.
    pub(crate) fn spatial_oracle(
        image: &[f64],
        width: usize,
        height: usize,
        kernel: &Kernel2D,
    ) -> Vec<Complex64> {
        let k = kernel.size() as isize;
        let half = k / 2;
        let (w, h) = (width as isize, height as isize);
        let mut out = vec![Complex64::new(0.0, 0.0); width * height];
        for y in 0..h {
            for x in 0..w {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..k {
                    for c in 0..k {
                        let sy = (y - (r - half)).rem_euclid(h);
                        let sx = (x - (c - half)).rem_euclid(w);
                        acc += kernel.tap(r as usize, c as usize) * image[(sy * w + sx) as usize];
                    }
                }
                out[(y * w + x) as usize] = acc;
            }
        }
        out
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Vec<f64> {
        (0..w * h).map(|_| f64::from(rng.random_range(0u8..=255))).collect()
    }

    fn numbered_kernel(size: usize) -> Kernel2D {
        let taps: Vec<f64> = (0..size * size)
            .map(|i| ((i / size + 1) * 10 + i % size + 1) as f64)
            .collect();
        Kernel2D::from_real(size, &taps).unwrap()
    }

    #[test]
    fn wrap_single_tap() {
        let k = Kernel2D::from_real(1, &[7.0]).unwrap();
        let g = wrap_kernel(&k, 4, 4).unwrap();
        assert_eq!(g[0].re, 7.0);
        assert!(g[1..].iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn wrap_three_by_three() {
        let g = wrap_kernel(&numbered_kernel(3), 8, 8).unwrap();
        let at = |y: usize, x: usize| g[y * 8 + x].re;
        assert_eq!(at(0, 0), 22.0);
        assert_eq!(at(1, 1), 33.0);
        assert_eq!(at(7, 7), 11.0);
        assert_eq!(at(7, 1), 13.0);
        assert_eq!(g.iter().filter(|v| v.norm() != 0.0).count(), 9);
    }

    #[test]
    fn wrap_five_by_five_matches_layout_figure() {
        let n = 9;
        let g = wrap_kernel(&numbered_kernel(5), n, n).unwrap();
        let at = |y: usize, x: usize| g[y * n + x].re;
        let expected_rows: [(usize, [f64; 5]); 5] = [
            (0, [33.0, 34.0, 35.0, 31.0, 32.0]),
            (1, [43.0, 44.0, 45.0, 41.0, 42.0]),
            (2, [53.0, 54.0, 55.0, 51.0, 52.0]),
            (n - 2, [13.0, 14.0, 15.0, 11.0, 12.0]),
            (n - 1, [23.0, 24.0, 25.0, 21.0, 22.0]),
        ];
        let cols = [0, 1, 2, n - 2, n - 1];
        for (row, values) in expected_rows {
            for (&col, &v) in cols.iter().zip(&values) {
                assert_eq!(at(row, col), v, "row {row} col {col}");
            }
        }
        for y in 3..n - 2 {
            for x in 0..n {
                assert_eq!(at(y, x), 0.0);
            }
        }
        for y in 0..n {
            for x in 3..n - 2 {
                assert_eq!(at(y, x), 0.0);
            }
        }
    }

    #[test]
    fn kernel_larger_than_image_is_rejected() {
        let err = wrap_kernel(&numbered_kernel(5), 4, 8).unwrap_err();
        assert!(err.to_string().contains("kernel exceeds image"));
        assert!(convolve_fft(&[0.0; 16], 4, 4, &numbered_kernel(5)).is_err());
        assert!(Kernel2D::from_real(2, &[0.0; 4]).is_err());
    }

    #[test]
    fn delta_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let img = random_image(&mut rng, 23, 17);
        let out = convolve_fft(&img, 23, 17, &Kernel2D::delta(5).unwrap()).unwrap();
        for (o, i) in out.iter().zip(&img) {
            assert!((o.re - i).abs() < 1e-9 && o.im.abs() < 1e-9);
        }
    }

    #[test]
    fn constant_image_gives_dc_response() {
        let taps: Vec<f64> = (0..9).map(|i| i as f64 * 0.25 - 0.5).collect();
        let sum: f64 = taps.iter().sum();
        let out = convolve_fft(&[3.0; 100], 10, 10, &Kernel2D::from_real(3, &taps).unwrap()).unwrap();
        for o in out {
            assert!((o.re - 3.0 * sum).abs() < 1e-9);
        }
    }

    #[test]
    fn matches_spatial_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let img = random_image(&mut rng, 64, 64);
        let taps: Vec<f64> = (0..81).map(|_| rng.random_range(-1.0..1.0)).collect();
        let k = Kernel2D::from_real(9, &taps).unwrap();
        let fast = convolve_fft(&img, 64, 64, &k).unwrap();
        let slow = spatial_oracle(&img, 64, 64, &k);
        assert!(max_diff(&fast, &slow) < 1e-6);
    }

    #[test]
    fn complex_kernel_non_square_image() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let img = random_image(&mut rng, 31, 20);
        let taps = (0..49)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let k = Kernel2D::new(7, taps).unwrap();
        let fast = convolve_fft(&img, 31, 20, &k).unwrap();
        assert!(max_diff(&fast, &spatial_oracle(&img, 31, 20, &k)) < 1e-6);
    }

    #[test]
    fn linear_in_the_image() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_image(&mut rng, 16, 12);
        let g = random_image(&mut rng, 16, 12);
        let taps: Vec<f64> = (0..25).map(|_| rng.random_range(-1.0..1.0)).collect();
        let k = Kernel2D::from_real(5, &taps).unwrap();
        let (a, b) = (1.5, -0.75);
        let mix: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
        let conv = Convolver::new();
        let lhs = conv.convolve(&mix, 16, 12, &k).unwrap();
        let cf = conv.convolve(&f, 16, 12, &k).unwrap();
        let cg = conv.convolve(&g, 16, 12, &k).unwrap();
        for i in 0..lhs.len() {
            let rhs = cf[i] * a + cg[i] * b;
            assert!((lhs[i] - rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn shift_commutes() {
        let (w, h) = (12, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let img = random_image(&mut rng, w, h);
        let taps: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let k = Kernel2D::from_real(3, &taps).unwrap();
        let (dx, dy) = (3, 4);
        let shifted: Vec<f64> = (0..w * h)
            .map(|i| {
                let (x, y) = (i % w, i / w);
                img[((y + h - dy) % h) * w + (x + w - dx) % w]
            })
            .collect();
        let conv = Convolver::new();
        let out = conv.convolve(&img, w, h, &k).unwrap();
        let out_shifted = conv.convolve(&shifted, w, h, &k).unwrap();
        for y in 0..h {
            for x in 0..w {
                let expect = out[((y + h - dy) % h) * w + (x + w - dx) % w];
                assert!((out_shifted[y * w + x] - expect).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn convolve_many_matches_single() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let img = random_image(&mut rng, 20, 20);
        let k1 = Kernel2D::delta(3).unwrap();
        let k2 = numbered_kernel(5);
        let conv = Convolver::new();
        let many = conv.convolve_many(&img, 20, 20, &[&k1, &k2]).unwrap();
        assert!(max_diff(&many[1], &conv.convolve(&img, 20, 20, &k2).unwrap()) < 1e-9);
    }
}
