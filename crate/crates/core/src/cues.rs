//! Per-region characterness cues and pairwise region divergences.
//!
//! * SW: normalized variance of the stroke width sampled on the skeleton.
//! * PD: colour-histogram KL divergence between a region and the rest of its
//!   bounding box, summed over R, G and B.
//! * eHOG: imbalance between opposing edge-orientation counts.
//!
//! SWD, CD and UD compare two regions and feed the pairwise MRF term.

use crate::error::{Error, Result};
use crate::imgcore::{auto_canny, distance_transform, skeletonize, CannyEdges, ColorImage, GrayImage, PixelMask};
use crate::regions::Region;

/// Stroke-width samples summarized over a region's skeleton.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrokeWidthStats {
    pub mean: f64,
    /// Population variance.
    pub variance: f64,
    pub samples: usize,
}

impl StrokeWidthStats {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::DegenerateRegion("empty skeleton"));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let variance = samples.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / n;
        Ok(Self {
            mean,
            variance,
            samples: samples.len(),
        })
    }
}

/// The three characterness cues of one region.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CueVector {
    pub sw: f64,
    pub pd: f64,
    pub ehog: f64,
}

impl CueVector {
    pub fn new(sw: f64, pd: f64, ehog: f64) -> Self {
        Self { sw, pd, ehog }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.sw, self.pd, self.ehog]
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

/// Distance-transform values sampled on the region skeleton.
pub fn stroke_width_stats(region: &Region) -> Result<StrokeWidthStats> {
    let (mask, _) = region.local_mask(1);
    let dist = distance_transform(&mask);
    let skel = skeletonize(&mask);
    let samples: Vec<f64> = skel.iter_set().map(|(x, y)| dist.get(x, y)).collect();
    StrokeWidthStats::from_samples(&samples)
}

/// `Var(l) / E(l)²`.
pub fn cue_sw(stats: &StrokeWidthStats) -> Result<f64> {
    if !(stats.mean > 0.0) {
        return Err(Error::DegenerateRegion("zero mean stroke width"));
    }
    Ok(stats.variance / (stats.mean * stats.mean))
}

/// Turns raw bin counts into a distribution with no empty bin.
///
/// Each normalized frequency gets `ε = 1 / (N + b)` added before
/// renormalizing, where `N` is the total count and `b` the bin count.
pub fn smoothed_distribution(counts: &[f64]) -> Vec<f64> {
    let total: f64 = counts.iter().sum();
    smooth_with(counts, 1.0 / (total + counts.len() as f64))
}

/// Smooths two histograms with one shared `ε = 1 / (N_a + N_b + b)`, so equal
/// frequency profiles stay equal whatever their sample counts.
pub fn smoothed_pair(a: &[f64], b: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.len() != b.len() {
        return Err(Error::BinMismatch(a.len(), b.len()));
    }
    let total: f64 = a.iter().chain(b).sum();
    let eps = 1.0 / (total + a.len() as f64);
    Ok((smooth_with(a, eps), smooth_with(b, eps)))
}

fn smooth_with(counts: &[f64], eps: f64) -> Vec<f64> {
    let b = counts.len() as f64;
    let total: f64 = counts.iter().sum();
    let z = 1.0 + b * eps;
    if total <= 0.0 {
        // nothing observed: the uniform distribution
        return vec![1.0 / b; counts.len()];
    }
    counts.iter().map(|&c| (c / total + eps) / z).collect()
}

/// Discrete Kullback–Leibler divergence `Σ p log(p/q)`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::BinMismatch(p.len(), q.len()));
    }
    Ok(p.iter()
        .zip(q)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| a * (a / b).ln())
        .sum())
}

/// KL divergence of two raw count histograms after pairwise smoothing.
pub fn smoothed_kl(a: &[f64], b: &[f64]) -> Result<f64> {
    let (p, q) = smoothed_pair(a, b)?;
    kl_divergence(&p, &q)
}

/// Per-channel colour histogram (raw counts).
#[derive(Clone, Debug, PartialEq)]
pub struct ColorHistogram {
    pub bins: usize,
    pub counts: [Vec<f64>; 3],
}

impl ColorHistogram {
    pub fn from_pixels<'a>(pixels: impl IntoIterator<Item = &'a [u8; 3]>, bins: usize) -> Self {
        let mut counts = [vec![0.0; bins], vec![0.0; bins], vec![0.0; bins]];
        for px in pixels {
            for c in 0..3 {
                counts[c][px[c] as usize * bins / 256] += 1.0;
            }
        }
        Self { bins, counts }
    }

    /// Per-channel smoothed distributions, each summing to 1.
    pub fn smoothed(&self) -> [Vec<f64>; 3] {
        [0, 1, 2].map(|c| smoothed_distribution(&self.counts[c]))
    }

    /// Sum over channels of `KL(self ‖ other)` on pairwise-smoothed channels.
    pub fn divergence(&self, other: &ColorHistogram) -> Result<f64> {
        let mut sum = 0.0;
        for c in 0..3 {
            sum += smoothed_kl(&self.counts[c], &other.counts[c])?;
        }
        Ok(sum)
    }
}

/// Perceptual divergence of a region against the rest of its bounding box.
///
/// When the region fills its box, the surround is taken from the box grown by
/// one pixel.
pub fn cue_pd(img: &ColorImage, region: &Region, bins: usize) -> Result<f64> {
    if bins == 0 || bins > 256 {
        return Err(Error::InvalidParameter(format!("pd bins {bins} outside 1..=256")));
    }
    let inside: Vec<[u8; 3]> = region.pixels().iter().map(|&(x, y)| img.get(x, y)).collect();
    let mut surround = surround_pixels(img, region, 0);
    if surround.is_empty() {
        surround = surround_pixels(img, region, 1);
    }
    if surround.is_empty() {
        return Err(Error::DegenerateRegion("no surround pixels"));
    }
    let h_in = ColorHistogram::from_pixels(&inside, bins);
    let h_out = ColorHistogram::from_pixels(&surround, bins);
    h_in.divergence(&h_out)
}

fn surround_pixels(img: &ColorImage, region: &Region, pad: i64) -> Vec<[u8; 3]> {
    let b = region.bbox().dilate_clamped(pad, img.width(), img.height());
    let mut out = Vec::new();
    for y in b.y..b.bottom() {
        for x in b.x..b.right() {
            let (x, y) = (x as usize, y as usize);
            if !region.contains(x, y) {
                out.push(img.get(x, y));
            }
        }
    }
    out
}

/// Edge-pixel counts per quantized orientation type.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EdgeTypeCounts {
    pub w: [usize; 4],
}

impl EdgeTypeCounts {
    pub fn total(&self) -> usize {
        self.w.iter().sum()
    }
}

/// Orientation type (0-based) of an edge angle in `[0, 2π)`:
/// type 1 covers `(7π/4, 2π] ∪ (0, π/4]`, then each further quarter turn.
pub fn edge_type(theta: f64) -> usize {
    use std::f64::consts::{FRAC_PI_4, TAU};
    let t = theta.rem_euclid(TAU);
    if t == 0.0 || t > 7.0 * FRAC_PI_4 || t <= FRAC_PI_4 {
        0
    } else if t <= 3.0 * FRAC_PI_4 {
        1
    } else if t <= 5.0 * FRAC_PI_4 {
        2
    } else {
        3
    }
}

/// Counts the edge pixels lying in the region or within `dilation` pixels
/// (chessboard distance) of it.
pub fn edge_type_counts(region: &Region, edges: &CannyEdges, dilation: usize) -> EdgeTypeCounts {
    let (w, h) = edges.mask.dims();
    let (mask, (ox, oy)) = region.local_mask(dilation);
    let grown = dilate_square(&mask, dilation);
    let mut counts = EdgeTypeCounts::default();
    for (lx, ly) in grown.iter_set() {
        let x = lx as i64 + ox;
        let y = ly as i64 + oy;
        if x < 0 || y < 0 || x as usize >= w || y as usize >= h {
            continue;
        }
        if let Some(theta) = edges.orientation(x as usize, y as usize) {
            counts.w[edge_type(theta)] += 1;
        }
    }
    counts
}

fn dilate_square(mask: &PixelMask, r: usize) -> PixelMask {
    if r == 0 {
        return mask.clone();
    }
    let r = r as isize;
    PixelMask::from_fn(mask.width(), mask.height(), |x, y| {
        (-r..=r).any(|dy| (-r..=r).any(|dx| mask.get_or_false(x as isize + dx, y as isize + dy)))
    })
}

/// `sqrt((w1−w3)² + (w2−w4)²) / Σ wᵢ`.
pub fn ehog_from_counts(counts: &EdgeTypeCounts) -> Result<f64> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::DegenerateRegion("no edge pixels"));
    }
    let [w1, w2, w3, w4] = counts.w.map(|v| v as f64);
    Ok(((w1 - w3).powi(2) + (w2 - w4).powi(2)).sqrt() / total as f64)
}

pub fn cue_ehog(region: &Region, edges: &CannyEdges, dilation: usize) -> Result<f64> {
    ehog_from_counts(&edge_type_counts(region, edges, dilation))
}

/// Settings for [`compute_cues`].
#[derive(Clone, Debug, PartialEq)]
pub struct CueParams {
    pub pd_bins: usize,
    pub ehog_dilation: usize,
    /// Canny low threshold as a fraction of the Otsu high threshold.
    pub canny_low_ratio: f64,
    pub canny_otsu_bins: usize,
}

impl Default for CueParams {
    fn default() -> Self {
        Self {
            pd_bins: 16,
            ehog_dilation: 1,
            canny_low_ratio: 0.4,
            canny_otsu_bins: 256,
        }
    }
}

/// Edge map used by the eHOG cue, computed on the smoothed intensity.
pub fn detect_edges(smoothed: &GrayImage, params: &CueParams) -> CannyEdges {
    auto_canny(smoothed, params.canny_low_ratio, params.canny_otsu_bins)
}

pub fn compute_cues(img: &ColorImage, region: &Region, edges: &CannyEdges, params: &CueParams) -> Result<CueVector> {
    let sw = cue_sw(&stroke_width_stats(region)?)?;
    let pd = cue_pd(img, region, params.pd_bins)?;
    let ehog = cue_ehog(region, edges, params.ehog_dilation)?;
    Ok(CueVector { sw, pd, ehog })
}

/// Distance-transform values over every pixel of the region.
pub fn stroke_width_samples(region: &Region) -> Vec<f64> {
    let (mask, _) = region.local_mask(1);
    let dist = distance_transform(&mask);
    mask.iter_set().map(|(x, y)| dist.get(x, y)).collect()
}

/// Histogram of stroke widths over `[0, max]` (raw counts).
#[derive(Clone, Debug, PartialEq)]
pub struct StrokeWidthHistogram {
    pub max: f64,
    pub counts: Vec<f64>,
}

impl StrokeWidthHistogram {
    pub fn probs(&self) -> Vec<f64> {
        smoothed_distribution(&self.counts)
    }
}

pub fn stroke_width_histogram(samples: &[f64], bins: usize, max: f64) -> StrokeWidthHistogram {
    let mut counts = vec![0.0; bins];
    if bins > 0 {
        for &l in samples {
            let b = if max > 0.0 { (l / max * bins as f64) as usize } else { 0 };
            counts[b.min(bins - 1)] += 1.0;
        }
    }
    StrokeWidthHistogram { max, counts }
}

/// `KL(a ‖ b)` of two stroke-width histograms with the same layout.
pub fn divergence_swd(a: &StrokeWidthHistogram, b: &StrokeWidthHistogram) -> Result<f64> {
    if a.counts.len() != b.counts.len() || a.max != b.max {
        return Err(Error::BinMismatch(a.counts.len(), b.counts.len()));
    }
    smoothed_kl(&a.counts, &b.counts)
}

/// SWD of two sample sets, binned over `[0, max of both]`.
pub fn swd_between(a: &[f64], b: &[f64], bins: usize) -> f64 {
    let max = a.iter().chain(b).copied().fold(0.0, f64::max);
    let ha = stroke_width_histogram(a, bins, max);
    let hb = stroke_width_histogram(b, bins, max);
    divergence_swd(&ha, &hb).expect("same layout by construction")
}

/// sRGB (8-bit) to CIE L*a*b* under D65.
pub fn srgb_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let lin = |c: u8| {
        let c = c as f64 / 255.0;
        if c <= 0.04045 {
            c / 12.92
        } else {
            ((c + 0.055) / 1.055).powf(2.4)
        }
    };
    let (r, g, b) = (lin(rgb[0]), lin(rgb[1]), lin(rgb[2]));
    let x = 0.412_456_4 * r + 0.357_576_1 * g + 0.180_437_5 * b;
    let y = 0.212_672_9 * r + 0.715_152_2 * g + 0.072_175_0 * b;
    let z = 0.019_333_9 * r + 0.119_192_0 * g + 0.950_304_1 * b;
    let f = |t: f64| {
        const D: f64 = 6.0 / 29.0;
        if t > D * D * D {
            t.cbrt()
        } else {
            t / (3.0 * D * D) + 4.0 / 29.0
        }
    };
    let (fx, fy, fz) = (f(x / 0.950_47), f(y), f(z / 1.088_83));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

pub fn mean_lab(img: &ColorImage, region: &Region) -> [f64; 3] {
    let mut acc = [0.0; 3];
    for &(x, y) in region.pixels() {
        let lab = srgb_to_lab(img.get(x, y));
        for c in 0..3 {
            acc[c] += lab[c];
        }
    }
    let n = region.area().max(1) as f64;
    acc.map(|v| v / n)
}

pub fn lab_distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// L2 distance between the mean LAB colours of two regions.
pub fn divergence_cd(img: &ColorImage, a: &Region, b: &Region) -> f64 {
    lab_distance(mean_lab(img, a), mean_lab(img, b))
}

/// `beta·swd + (1 − beta)·cd`; `cd` is expected already rescaled.
pub fn divergence_ud(swd: f64, cd: f64, beta: f64) -> f64 {
    beta * swd + (1.0 - beta) * cd
}
