use std::collections::VecDeque;
use std::f64::consts::TAU;

use super::{GrayImage, PixelMask, NEIGHBORS_8};

/// Largest gradient, in intensity units, still treated as a flat image.
const FLAT_GRADIENT: f64 = 1e-6;

/// Central-difference gradient magnitude, rescaled so the maximum is 255.
///
/// Border pixels use one-sided differences. A map whose maximum is at or
/// below rounding noise is returned as all zeros.
pub fn gradient_magnitude(img: &GrayImage) -> GrayImage {
    let mut mag = raw_gradient_magnitude(img);
    let max = mag.max();
    if max <= FLAT_GRADIENT {
        // rounding noise on a flat image must not be stretched to full range
        mag.data_mut().iter_mut().for_each(|v| *v = 0.0);
    } else {
        let s = 255.0 / max;
        mag.data_mut().iter_mut().for_each(|v| *v *= s);
    }
    mag
}

pub(crate) fn raw_gradient_magnitude(img: &GrayImage) -> GrayImage {
    let (w, h) = img.dims();
    let diff = |len: usize, i: usize, at: &dyn Fn(usize) -> f64| -> f64 {
        if len < 2 {
            0.0
        } else if i == 0 {
            at(1) - at(0)
        } else if i == len - 1 {
            at(i) - at(i - 1)
        } else {
            (at(i + 1) - at(i - 1)) / 2.0
        }
    };
    GrayImage::from_fn(w, h, |x, y| {
        let gx = diff(w, x, &|xx| img.get(xx, y));
        let gy = diff(h, y, &|yy| img.get(x, yy));
        gx.hypot(gy)
    })
}

/// 3×3 Sobel derivatives with replicated borders. `y` grows downwards.
pub fn sobel(img: &GrayImage) -> (GrayImage, GrayImage) {
    let (w, h) = img.dims();
    let p = |x: usize, y: usize, dx: isize, dy: isize| img.get_clamped(x as isize + dx, y as isize + dy);
    let gx = GrayImage::from_fn(w, h, |x, y| {
        (p(x, y, 1, -1) + 2.0 * p(x, y, 1, 0) + p(x, y, 1, 1))
            - (p(x, y, -1, -1) + 2.0 * p(x, y, -1, 0) + p(x, y, -1, 1))
    });
    let gy = GrayImage::from_fn(w, h, |x, y| {
        (p(x, y, -1, 1) + 2.0 * p(x, y, 0, 1) + p(x, y, 1, 1))
            - (p(x, y, -1, -1) + 2.0 * p(x, y, 0, -1) + p(x, y, 1, -1))
    });
    (gx, gy)
}

/// Otsu threshold over `bins` equal-width bins spanning `[0, max(values)]`.
///
/// Returns the upper edge of the bin that maximizes between-class variance.
/// Returns 0 when every value is 0.
pub fn otsu_threshold(values: &[f64], bins: usize) -> f64 {
    let max = values.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 || bins < 2 {
        return 0.0;
    }
    let mut hist = vec![0usize; bins];
    for &v in values {
        let b = ((v / max) * bins as f64) as usize;
        hist[b.min(bins - 1)] += 1;
    }
    let total = values.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let (mut best, mut best_var) = (0, -1.0);
    for (i, &c) in hist.iter().enumerate().take(bins - 1) {
        w0 += c as f64;
        sum0 += i as f64 * c as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let var = w0 * w1 * (m0 - m1) * (m0 - m1);
        if var > best_var {
            best_var = var;
            best = i;
        }
    }
    (best + 1) as f64 * max / bins as f64
}

/// Output of [`canny_edges`].
#[derive(Clone, Debug)]
pub struct CannyEdges {
    pub mask: PixelMask,
    /// Edge normal in `[0, 2π)` pointing from the brighter side towards the
    /// darker side, in image axes (`x` right, `y` down). Zero off-edge.
    pub theta: GrayImage,
    /// Unscaled Sobel magnitude.
    pub magnitude: GrayImage,
}

impl CannyEdges {
    pub fn orientation(&self, x: usize, y: usize) -> Option<f64> {
        self.mask.get(x, y).then(|| self.theta.get(x, y))
    }
}

/// Canny edge detection on Sobel derivatives with hysteresis thresholds on
/// the unscaled Sobel magnitude.
///
/// Non-maximum suppression keeps a pixel when it is `>=` its neighbour in the
/// ascending gradient direction and `>` its neighbour in the descending one,
/// so plateaus two pixels wide thin to their darker pixel. The rule is
/// symmetric under a half-turn of the image.
pub fn canny_edges(img: &GrayImage, low: f64, high: f64) -> CannyEdges {
    let (w, h) = img.dims();
    let (gx, gy) = sobel(img);
    let magnitude = GrayImage::from_fn(w, h, |x, y| gx.get(x, y).hypot(gy.get(x, y)));

    let mut state = vec![0u8; w * h]; // 0 none, 1 weak, 2 strong
    for y in 0..h {
        for x in 0..w {
            let m = magnitude.get(x, y);
            if m <= 0.0 || m < low {
                continue;
            }
            let (dx, dy) = quantize_direction(gx.get(x, y), gy.get(x, y));
            let ahead = mag_at(&magnitude, x as isize + dx, y as isize + dy);
            let behind = mag_at(&magnitude, x as isize - dx, y as isize - dy);
            if m >= ahead && m > behind {
                state[y * w + x] = if m >= high { 2 } else { 1 };
            }
        }
    }

    let mut mask = PixelMask::new(w, h);
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            if state[y * w + x] == 2 {
                mask.set(x, y, true);
                queue.push_back((x, y));
            }
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        for (dx, dy) in NEIGHBORS_8 {
            let nx = x as isize + dx;
            let ny = y as isize + dy;
            if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            if state[ny * w + nx] == 1 && !mask.get(nx, ny) {
                mask.set(nx, ny, true);
                queue.push_back((nx, ny));
            }
        }
    }

    let theta = GrayImage::from_fn(w, h, |x, y| {
        if mask.get(x, y) {
            descent_angle(gx.get(x, y), gy.get(x, y))
        } else {
            0.0
        }
    });
    CannyEdges {
        mask,
        theta,
        magnitude,
    }
}

/// Canny with the high threshold picked by Otsu over the Sobel magnitudes
/// and the low one at `low_ratio` of it.
pub fn auto_canny(img: &GrayImage, low_ratio: f64, otsu_bins: usize) -> CannyEdges {
    let (gx, gy) = sobel(img);
    let mags: Vec<f64> = gx.data().iter().zip(gy.data()).map(|(a, b)| a.hypot(*b)).collect();
    let high = otsu_threshold(&mags, otsu_bins);
    canny_edges(img, low_ratio * high, high)
}

fn mag_at(m: &GrayImage, x: isize, y: isize) -> f64 {
    if x < 0 || y < 0 || x as usize >= m.width() || y as usize >= m.height() {
        0.0
    } else {
        m.get(x as usize, y as usize)
    }
}

/// Angle of `-(gx, gy)` in `[0, 2π)`.
fn descent_angle(gx: f64, gy: f64) -> f64 {
    let a = (-gy).atan2(-gx);
    let a = if a < 0.0 { a + TAU } else { a };
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// Signed 8-way step along the gradient, decided by exact comparisons so that
/// negating the gradient negates the step.
fn quantize_direction(gx: f64, gy: f64) -> (isize, isize) {
    const TAN_22_5: f64 = 0.414_213_562_373_095_03;
    let (ax, ay) = (gx.abs(), gy.abs());
    let sx = if gx > 0.0 { 1 } else if gx < 0.0 { -1 } else { 0 };
    let sy = if gy > 0.0 { 1 } else if gy < 0.0 { -1 } else { 0 };
    if ay <= ax * TAN_22_5 {
        (sx, 0)
    } else if ax <= ay * TAN_22_5 {
        (0, sy)
    } else {
        (sx, sy)
    }
}
