//! Pixel storage, color-space conversions and channel quantization.
//!
//! Every descriptor consumes either a [`RasterImage`] (8-bit RGB) or the
//! [`GrayImage`] obtained from it by BT.601 luma.

use std::path::Path;

use crate::error::{Error, Result};

/// Largest gray-tone; gray images use 256 tones.
pub const MAX_GRAY: u8 = 255;

/// Number of bins produced by [`quantize_hsv`].
pub const HSV_BINS: usize = 256;

const HUE_LEVELS: usize = 16;
const SAT_LEVELS: usize = 4;
const VAL_LEVELS: usize = 4;

/// Row-major 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if pixels.len() != width * height {
            return Err(Error::PixelCount {
                expected: width * height,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        Self::new(width, height, vec![rgb; width * height])
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    /// Decodes a PNG or JPEG file. Alpha is dropped.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let decoded = ::image::open(path).map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let rgb = decoded.to_rgb8();
        let (width, height) = (rgb.width() as usize, rgb.height() as usize);
        let pixels = rgb.pixels().map(|p| p.0).collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn crop(&self, left: usize, top: usize, width: usize, height: usize) -> Result<Self> {
        let fits = width > 0
            && height > 0
            && left.checked_add(width).is_some_and(|r| r <= self.width)
            && top.checked_add(height).is_some_and(|b| b <= self.height);
        if !fits {
            return Err(Error::CropOutOfBounds {
                left,
                top,
                width,
                height,
                image_width: self.width,
                image_height: self.height,
            });
        }
        Self::from_fn(width, height, |x, y| self.get(left + x, top + y))
    }
}

/// Row-major gray-tone image with tones in `0..=MAX_GRAY`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    tones: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, tones: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if tones.len() != width * height {
            return Err(Error::PixelCount {
                expected: width * height,
                actual: tones.len(),
            });
        }
        Ok(Self {
            width,
            height,
            tones,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut tones = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                tones.push(f(x, y));
            }
        }
        Self::new(width, height, tones)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn tones(&self) -> &[u8] {
        &self.tones
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.tones[y * self.width + x]
    }

    /// Tones as reals, row-major; the input form for convolution.
    pub fn to_real(&self) -> Vec<f64> {
        self.tones.iter().map(|&t| f64::from(t)).collect()
    }
}

/// Hexcone HSV: hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
pub fn rgb_to_hsv(r: u8, g: u8, b: u8) -> (f64, f64, f64) {
    let (rf, gf, bf) = (f64::from(r), f64::from(g), f64::from(b));
    let max = rf.max(gf).max(bf);
    let min = rf.min(gf).min(bf);
    let v = max / 255.0;
    if max == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let delta = max - min;
    let s = delta / max;
    if delta == 0.0 {
        return (0.0, s, v);
    }
    let sector = if max == rf {
        (gf - bf) / delta
    } else if max == gf {
        (bf - rf) / delta + 2.0
    } else {
        (rf - gf) / delta + 4.0
    };
    let mut h = 60.0 * sector;
    if h < 0.0 {
        h += 360.0;
    }
    if h >= 360.0 {
        h -= 360.0;
    }
    (h, s, v)
}

/// Inverse of [`rgb_to_hsv`], rounding each channel to the nearest integer.
pub fn hsv_to_rgb(h: f64, s: f64, v: f64) -> (u8, u8, u8) {
    let c = v * s;
    let hp = (h.rem_euclid(360.0)) / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r1, g1, b1) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let to_u8 = |ch: f64| ((ch + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    (to_u8(r1), to_u8(g1), to_u8(b1))
}

/// BT.601 luma and color-difference signals; U and V are offset by 128 and
/// clamped to `[0, 255]`.
pub fn rgb_to_yuv(r: u8, g: u8, b: u8) -> (f64, f64, f64) {
    let (rf, gf, bf) = (f64::from(r), f64::from(g), f64::from(b));
    let y = luma(rf, gf, bf);
    let u = (0.492 * (bf - y) + 128.0).clamp(0.0, 255.0);
    let v = (0.877 * (rf - y) + 128.0).clamp(0.0, 255.0);
    (y, u, v)
}

fn luma(r: f64, g: f64, b: f64) -> f64 {
    0.299 * r + 0.587 * g + 0.114 * b
}

pub fn gray_tone(rgb: [u8; 3]) -> u8 {
    let y = luma(f64::from(rgb[0]), f64::from(rgb[1]), f64::from(rgb[2]));
    y.round().clamp(0.0, 255.0) as u8
}

pub fn to_gray(img: &RasterImage) -> GrayImage {
    GrayImage {
        width: img.width,
        height: img.height,
        tones: img.pixels.iter().map(|&p| gray_tone(p)).collect(),
    }
}

fn level(value: f64, span: f64, levels: usize) -> usize {
    let l = (value / span * levels as f64).floor();
    if l <= 0.0 {
        0
    } else {
        (l as usize).min(levels - 1)
    }
}

/// Uniform 16x4x4 quantization of HSV into a bin index in `0..256`.
///
/// Level intervals are half-open; a value on the top boundary (s or v of
/// exactly 1.0) falls in the last level.
pub fn quantize_hsv(h: f64, s: f64, v: f64) -> usize {
    let hl = level(h, 360.0, HUE_LEVELS);
    let sl = level(s, 1.0, SAT_LEVELS);
    let vl = level(v, 1.0, VAL_LEVELS);
    hl * SAT_LEVELS * VAL_LEVELS + sl * VAL_LEVELS + vl
}

pub fn quantize_rgb(rgb: [u8; 3]) -> usize {
    let (h, s, v) = rgb_to_hsv(rgb[0], rgb[1], rgb[2]);
    quantize_hsv(h, s, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn hsv_of_primaries_and_grays() {
        assert_eq!(rgb_to_hsv(255, 0, 0), (0.0, 1.0, 1.0));
        assert_eq!(rgb_to_hsv(0, 0, 0), (0.0, 0.0, 0.0));
        let (h, s, v) = rgb_to_hsv(128, 128, 128);
        assert_eq!((h, s), (0.0, 0.0));
        assert!(close(v, 128.0 / 255.0, 1e-15));
        let (h, _, _) = rgb_to_hsv(0, 255, 0);
        assert!(close(h, 120.0, 1e-12));
        let (h, _, _) = rgb_to_hsv(0, 0, 255);
        assert!(close(h, 240.0, 1e-12));
    }

    #[test]
    fn yuv_black_white_red() {
        assert_eq!(rgb_to_yuv(0, 0, 0), (0.0, 128.0, 128.0));
        let (y, u, v) = rgb_to_yuv(255, 255, 255);
        assert!(close(y, 255.0, 1e-9) && close(u, 128.0, 1e-9) && close(v, 128.0, 1e-9));
        // Y = 0.299*255; U = 0.492*(0 - Y) + 128; V clamps at 255.
        let (y, u, v) = rgb_to_yuv(255, 0, 0);
        assert!(close(y, 76.245, 1e-9));
        assert!(close(u, 128.0 - 0.492 * 76.245, 1e-9));
        assert_eq!(v, 255.0);
    }

    #[test]
    fn gray_conversion() {
        let black = RasterImage::filled(3, 2, [0, 0, 0]).unwrap();
        assert!(to_gray(&black).tones().iter().all(|&t| t == 0));
        let white = RasterImage::filled(3, 2, [255, 255, 255]).unwrap();
        assert!(to_gray(&white).tones().iter().all(|&t| t == 255));
        let red = RasterImage::filled(1, 1, [255, 0, 0]).unwrap();
        assert_eq!(to_gray(&red).tones(), &[76]);
    }

    #[test]
    fn quantizer_examples() {
        assert_eq!(quantize_hsv(0.0, 0.0, 0.0), 0);
        assert_eq!(quantize_hsv(359.9, 1.0, 1.0), 255);
        assert_eq!(quantize_hsv(90.0, 0.5, 0.5), 74);
        assert_eq!(quantize_rgb([255, 0, 0]), 15);
    }

    #[test]
    fn quantizer_is_surjective() {
        let mut seen = [false; HSV_BINS];
        for hl in 0..16 {
            for sl in 0..4 {
                for vl in 0..4 {
                    let h = (hl as f64 + 0.5) * 22.5;
                    let s = (sl as f64 + 0.5) / 4.0;
                    let v = (vl as f64 + 0.5) / 4.0;
                    seen[quantize_hsv(h, s, v)] = true;
                }
            }
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn hsv_round_trip_on_stride_grid() {
        for r in (0..=255u16).step_by(17) {
            for g in (0..=255u16).step_by(17) {
                for b in (0..=255u16).step_by(17) {
                    let (r, g, b) = (r as u8, g as u8, b as u8);
                    let (h, s, v) = rgb_to_hsv(r, g, b);
                    let back = hsv_to_rgb(h, s, v);
                    assert!(
                        (i16::from(back.0) - i16::from(r)).abs() <= 1
                            && (i16::from(back.1) - i16::from(g)).abs() <= 1
                            && (i16::from(back.2) - i16::from(b)).abs() <= 1,
                        "({r},{g},{b}) -> {back:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn gray_is_pixelwise() {
        let img = RasterImage::from_fn(5, 4, |x, y| [(x * 50) as u8, (y * 60) as u8, 7]).unwrap();
        let gray = to_gray(&img);
        for y in 0..4 {
            for x in 0..5 {
                let single = RasterImage::filled(1, 1, img.get(x, y)).unwrap();
                assert_eq!(to_gray(&single).tones()[0], gray.get(x, y));
            }
        }
    }

    #[test]
    fn rejects_bad_buffers() {
        assert!(RasterImage::new(0, 3, vec![]).is_err());
        assert!(RasterImage::new(2, 2, vec![[0; 3]; 3]).is_err());
    }

    #[test]
    fn crop_bounds() {
        let img = RasterImage::from_fn(10, 6, |x, y| [x as u8, y as u8, 0]).unwrap();
        let c = img.crop(2, 1, 3, 4).unwrap();
        assert_eq!((c.width(), c.height()), (3, 4));
        assert_eq!(c.get(0, 0), [2, 1, 0]);
        assert!(img.crop(8, 0, 3, 1).is_err());
        assert!(img.crop(0, 0, 0, 1).is_err());
    }
}
