//! Seeded synthetic images in a few visually distinct texture and color
//! classes, for smoke tests and demos of the full pipeline.
//!
//! Each class has its own texture and draws its colors from its own band of
//! hues 100 degrees wide, so both the color and the texture descriptors carry
//! class information.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::raster::{hsv_to_rgb, RasterImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthClass {
    /// One color with slight per-pixel noise.
    Flat,
    /// Two colors in square cells of 2 to 6 pixels.
    Checkerboard,
    /// Sinusoidal stripes between two colors at a random angle.
    Grating,
}

impl SynthClass {
    pub const ALL: [SynthClass; 3] = [SynthClass::Flat, SynthClass::Checkerboard, SynthClass::Grating];

    pub fn label(self) -> i64 {
        self as i64
    }

    /// Center of the class's hue band, in degrees.
    fn hue(self) -> f64 {
        120.0 * self as i64 as f64
    }
}

/// Random color of the class's hue band with value drawn from `value`.
fn band_color(rng: &mut ChaCha8Rng, class: SynthClass, value: std::ops::Range<f64>) -> [f64; 3] {
    let h = class.hue() + rng.random_range(-50.0..50.0);
    let (r, g, b) = hsv_to_rgb(h, rng.random_range(0.5..1.0), rng.random_range(value));
    [f64::from(r), f64::from(g), f64::from(b)]
}

fn mix(a: [f64; 3], b: [f64; 3], t: f64, noise: f64) -> [u8; 3] {
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = (a[c] * (1.0 - t) + b[c] * t + noise).round().clamp(0.0, 255.0) as u8;
    }
    out
}

/// A `size`×`size` image of `class`, fully determined by `seed`.
pub fn synth_image(class: SynthClass, seed: u64, size: usize) -> RasterImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // a dark and a light tone, so patterns always have contrast
    let a = band_color(&mut rng, class, 0.15..0.45);
    let b = band_color(&mut rng, class, 0.7..1.0);
    let img = match class {
        SynthClass::Flat => {
            let noise: Vec<f64> = (0..size * size).map(|_| rng.random_range(-3.0..3.0)).collect();
            RasterImage::from_fn(size, size, |x, y| mix(a, b, 0.5, noise[y * size + x]))
        }
        SynthClass::Checkerboard => {
            let cell = rng.random_range(2..=6);
            let (ox, oy) = (rng.random_range(0..cell), rng.random_range(0..cell));
            RasterImage::from_fn(size, size, |x, y| {
                let t = if ((x + ox) / cell + (y + oy) / cell) % 2 == 0 { 0.0 } else { 1.0 };
                mix(a, b, t, 0.0)
            })
        }
        SynthClass::Grating => {
            let period = rng.random_range(6.0..16.0);
            let theta = rng.random_range(0.0..std::f64::consts::PI);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let (c, s) = (theta.cos(), theta.sin());
            RasterImage::from_fn(size, size, |x, y| {
                let u = x as f64 * c + y as f64 * s;
                let t = 0.5 + 0.5 * (std::f64::consts::TAU * u / period + phase).sin();
                mix(a, b, t, 0.0)
            })
        }
    };
    img.expect("synthetic image dimensions are positive")
}

/// `per_class` images of every class, interleaved by class, with labels.
pub fn synth_dataset(per_class: usize, size: usize, seed: u64) -> Vec<(SynthClass, RasterImage)> {
    let mut out = Vec::with_capacity(per_class * SynthClass::ALL.len());
    for k in 0..per_class {
        for (c, class) in SynthClass::ALL.iter().enumerate() {
            let s = seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add((k * SynthClass::ALL.len() + c) as u64);
            out.push((*class, synth_image(*class, s, size)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        for class in SynthClass::ALL {
            assert_eq!(synth_image(class, 5, 32), synth_image(class, 5, 32));
            assert_ne!(synth_image(class, 5, 32), synth_image(class, 6, 32));
        }
    }

    #[test]
    fn checkerboard_uses_two_colors() {
        let img = synth_image(SynthClass::Checkerboard, 1, 32);
        let mut colors: Vec<[u8; 3]> = (0..32).flat_map(|y| (0..32).map(move |x| (x, y))).map(|(x, y)| img.get(x, y)).collect();
        colors.sort_unstable();
        colors.dedup();
        assert_eq!(colors.len(), 2);
    }

    #[test]
    fn dataset_interleaves_classes() {
        let set = synth_dataset(2, 16, 0);
        let labels: Vec<i64> = set.iter().map(|(c, _)| c.label()).collect();
        assert_eq!(labels, vec![0, 1, 2, 0, 1, 2]);
    }
}
