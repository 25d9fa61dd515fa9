//! Color layout: 8×8 block means per YUV channel, DCT-II, zigzag selection.

use crate::error::{Error, Result};
use crate::raster::{rgb_to_yuv, RasterImage};

const GRID: usize = 8;

pub const Y_COEFFICIENTS: usize = 10;
pub const U_COEFFICIENTS: usize = 5;
pub const V_COEFFICIENTS: usize = 5;
pub const COLOR_LAYOUT_LEN: usize = Y_COEFFICIENTS + U_COEFFICIENTS + V_COEFFICIENTS;

/// Zigzag traversal of a `length × length` matrix.
///
/// Yields `(row, col)` pairs starting at the origin and moving down first:
/// the order on a 5×5 matrix is
///
/// ```text
///  1  3  4 10 11
///  2  5  9 12 19
///  6  8 13 18 20
///  7 14 17 21 24
/// 15 16 22 23 25
/// ```
#[derive(Debug, Clone)]
pub struct Zigzag {
    length: usize,
    row: isize,
    col: isize,
    forward: bool,
    remaining: usize,
}

impl Zigzag {
    pub fn new(length: usize) -> Self {
        Self {
            length,
            row: 0,
            col: 0,
            forward: true,
            remaining: length * length,
        }
    }

    fn advance(&mut self) {
        let last = self.length as isize - 1;
        if self.forward {
            if self.row < last {
                self.row += 1;
                self.col -= 1;
                if self.col < 0 {
                    self.col = 0;
                    self.forward = false;
                }
            } else {
                self.col += 1;
                self.forward = false;
            }
        } else if self.col < last {
            self.col += 1;
            self.row -= 1;
            if self.row < 0 {
                self.row = 0;
                self.forward = true;
            }
        } else {
            self.row += 1;
            self.forward = true;
        }
    }
}

impl Iterator for Zigzag {
    type Item = (usize, usize);

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        let current = (self.row as usize, self.col as usize);
        self.remaining -= 1;
        if self.remaining > 0 {
            self.advance();
        }
        Some(current)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for Zigzag {}

/// Area-weighted overlap of each of the 8 blocks with each pixel along one
/// axis; block `b` spans `[b·n/8, (b+1)·n/8)` in continuous coordinates.
fn block_weights(n: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = n as f64 / GRID as f64;
    (0..GRID)
        .map(|b| {
            let lo = b as f64 * scale;
            let hi = (b + 1) as f64 * scale;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(n);
            (first..last)
                .filter_map(|p| {
                    let overlap = (hi.min(p as f64 + 1.0) - lo.max(p as f64)).max(0.0);
                    (overlap > 0.0).then_some((p, overlap / scale))
                })
                .collect()
        })
        .collect()
}

/// Block means of one channel over the 8×8 grid, row-major.
fn pool(values: &[f64], width: usize, height: usize) -> [f64; GRID * GRID] {
    let wx = block_weights(width);
    let wy = block_weights(height);
    let mut out = [0.0; GRID * GRID];
    for (by, rows) in wy.iter().enumerate() {
        for (bx, cols) in wx.iter().enumerate() {
            let mut acc = 0.0;
            for &(y, fy) in rows {
                for &(x, fx) in cols {
                    acc += fy * fx * values[y * width + x];
                }
            }
            out[by * GRID + bx] = acc;
        }
    }
    out
}

/// Orthonormal 2D DCT-II of an 8×8 block, row-major in and out.
pub fn dct2_8x8(block: &[f64; GRID * GRID]) -> [f64; GRID * GRID] {
    let n = GRID as f64;
    let basis = |k: usize, i: usize| {
        let norm = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
        norm * (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2.0 * n)).cos()
    };
    let mut rows = [0.0; GRID * GRID];
    for y in 0..GRID {
        for u in 0..GRID {
            rows[y * GRID + u] = (0..GRID).map(|x| basis(u, x) * block[y * GRID + x]).sum();
        }
    }
    let mut out = [0.0; GRID * GRID];
    for v in 0..GRID {
        for u in 0..GRID {
            out[v * GRID + u] = (0..GRID).map(|y| basis(v, y) * rows[y * GRID + u]).sum();
        }
    }
    out
}

fn leading_zigzag(coeffs: &[f64; GRID * GRID], count: usize) -> impl Iterator<Item = f64> + '_ {
    Zigzag::new(GRID).take(count).map(move |(r, c)| coeffs[r * GRID + c])
}

/// Color layout descriptor: the first 10 Y, 5 U and 5 V zigzag coefficients.
pub fn color_layout(img: &RasterImage) -> Result<Vec<f64>> {
    let (w, h) = (img.width(), img.height());
    if w < GRID || h < GRID {
        return Err(Error::TooSmallForColorLayout { width: w, height: h });
    }
    let mut channels = [Vec::with_capacity(w * h), Vec::with_capacity(w * h), Vec::with_capacity(w * h)];
    for &[r, g, b] in img.pixels() {
        let (y, u, v) = rgb_to_yuv(r, g, b);
        channels[0].push(y);
        channels[1].push(u);
        channels[2].push(v);
    }
    let mut out = Vec::with_capacity(COLOR_LAYOUT_LEN);
    for (channel, count) in channels.iter().zip([Y_COEFFICIENTS, U_COEFFICIENTS, V_COEFFICIENTS]) {
        let coeffs = dct2_8x8(&pool(channel, w, h));
        out.extend(leading_zigzag(&coeffs, count));
    }
    Ok(out)
}
