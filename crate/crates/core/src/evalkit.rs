//! Saliency-map and detection-box metrics.
//!
//! Saliency maps are compared on the 0–255 scale they are stored with.

use crate::error::{Error, Result};
use crate::imgcore::{GrayImage, PixelMask, Rect};

/// Weight of precision in the saliency F-measure.
pub const SALIENCY_BETA2: f64 = 0.3;

/// Precision and recall at each threshold `T = 0..=255`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrCurve {
    pub precision: [f64; 256],
    pub recall: [f64; 256],
}

/// Saliency map quantized to the 8-bit levels it is stored with.
fn levels(map: &GrayImage) -> Vec<u8> {
    map.to_levels()
}

fn check_gt(map_dims: (usize, usize), gt: &PixelMask) -> Result<usize> {
    gt.ensure_same_dims(map_dims)?;
    let n = gt.count();
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(n)
}

/// For every `T`, the mask `{map >= T}` against `gt`. An empty mask has
/// precision 1.
pub fn pr_curve(map: &GrayImage, gt: &PixelMask) -> Result<PrCurve> {
    let n_gt = check_gt(map.dims(), gt)? as f64;
    // pixel counts per level, split by ground truth
    let mut hit = [0usize; 256];
    let mut all = [0usize; 256];
    for (&v, &g) in levels(map).iter().zip(gt.bits()) {
        all[v as usize] += 1;
        if g {
            hit[v as usize] += 1;
        }
    }
    let mut precision = [0.0; 256];
    let mut recall = [0.0; 256];
    let (mut tp, mut sel) = (0usize, 0usize);
    for t in (0..256).rev() {
        tp += hit[t];
        sel += all[t];
        precision[t] = if sel == 0 { 1.0 } else { tp as f64 / sel as f64 };
        recall[t] = tp as f64 / n_gt;
    }
    Ok(PrCurve { precision, recall })
}

/// `(1 + β²) P R / (β² P + R)`, 0 when both are 0.
pub fn f_measure(p: f64, r: f64, beta2: f64) -> f64 {
    // a weighted harmonic mean of two equal values is that value; returning
    // it directly avoids rounding in the general expression
    if p == r {
        return p;
    }
    let d = beta2 * p + r;
    if d == 0.0 {
        0.0
    } else {
        (1.0 + beta2) * p * r / d
    }
}

/// Harmonic mean `2PR / (P + R)`.
pub fn harmonic_f(p: f64, r: f64) -> f64 {
    f_measure(p, r, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

/// Threshold used by [`adaptive_fmeasure`]: twice the mean map level,
/// capped at 255.
pub fn adaptive_threshold(map: &GrayImage) -> f64 {
    let lv = levels(map);
    if lv.is_empty() {
        return 0.0;
    }
    let mean = lv.iter().map(|&v| v as f64).sum::<f64>() / lv.len() as f64;
    (2.0 * mean).min(255.0)
}

/// Precision, recall and weighted F of the mask `{map >= 2·mean}`.
pub fn adaptive_fmeasure(map: &GrayImage, gt: &PixelMask, beta2: f64) -> Result<Prf> {
    let n_gt = check_gt(map.dims(), gt)? as f64;
    let t = adaptive_threshold(map);
    let (mut tp, mut sel) = (0usize, 0usize);
    for (&v, &g) in levels(map).iter().zip(gt.bits()) {
        if v as f64 >= t {
            sel += 1;
            if g {
                tp += 1;
            }
        }
    }
    let precision = if sel == 0 { 1.0 } else { tp as f64 / sel as f64 };
    let recall = tp as f64 / n_gt;
    Ok(Prf {
        precision,
        recall,
        f: f_measure(precision, recall, beta2),
    })
}

/// Binarizes a map with the adaptive threshold.
pub fn adaptive_mask(map: &GrayImage) -> PixelMask {
    let t = adaptive_threshold(map);
    let lv = levels(map);
    PixelMask::from_fn(map.width(), map.height(), |x, y| lv[y * map.width() + x] as f64 >= t)
}

/// `|S ∩ S'| / |S ∪ S'|`.
pub fn voc_overlap(s: &PixelMask, s2: &PixelMask) -> Result<f64> {
    s.ensure_same_dims(s2.dims())?;
    let union = s.union_count(s2);
    if union == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(s.intersection_count(s2) as f64 / union as f64)
}

/// Result of one-to-one box matching.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxScore {
    pub matches: usize,
    pub predicted: usize,
    pub ground_truth: usize,
}

impl BoxScore {
    /// Empty prediction sets have precision 1; empty ground truth has
    /// recall 1.
    pub fn prf(&self) -> Prf {
        let precision = if self.predicted == 0 {
            1.0
        } else {
            self.matches as f64 / self.predicted as f64
        };
        let recall = if self.ground_truth == 0 {
            1.0
        } else {
            self.matches as f64 / self.ground_truth as f64
        };
        Prf {
            precision,
            recall,
            f: harmonic_f(precision, recall),
        }
    }
}

/// Greedy one-to-one matching: candidate pairs with IoU at or above the
/// threshold are taken best first.
///
/// Ties are broken on the boxes' coordinates rather than their positions in
/// the input, so the result does not depend on box order.
pub fn match_boxes(pred: &[Rect], gt: &[Rect], match_threshold: f64) -> BoxScore {
    let key = |r: &Rect| (r.x, r.y, r.w, r.h);
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in pred.iter().enumerate() {
        for (j, g) in gt.iter().enumerate() {
            let iou = p.iou(g);
            if iou >= match_threshold && iou > 0.0 {
                pairs.push((iou, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(key(&pred[a.1]).cmp(&key(&pred[b.1])))
            .then(key(&gt[a.2]).cmp(&key(&gt[b.2])))
    });
    let mut used_p = vec![false; pred.len()];
    let mut used_g = vec![false; gt.len()];
    let mut matches = 0;
    for (_, i, j) in pairs {
        if !used_p[i] && !used_g[j] {
            used_p[i] = true;
            used_g[j] = true;
            matches += 1;
        }
    }
    BoxScore {
        matches,
        predicted: pred.len(),
        ground_truth: gt.len(),
    }
}

pub fn box_prf(pred: &[Rect], gt: &[Rect], match_threshold: f64) -> Prf {
    match_boxes(pred, gt, match_threshold).prf()
}

/// Per-image saliency results.
#[derive(Clone, Debug, PartialEq)]
pub struct SaliencyScore {
    pub curve: PrCurve,
    pub adaptive: Prf,
    pub voc: f64,
}

/// PR curve, adaptive F and VOC overlap of the adaptive mask.
pub fn evaluate_saliency(map: &GrayImage, gt: &PixelMask, beta2: f64) -> Result<SaliencyScore> {
    let curve = pr_curve(map, gt)?;
    let adaptive = adaptive_fmeasure(map, gt, beta2)?;
    let voc = voc_overlap(&adaptive_mask(map), gt)?;
    Ok(SaliencyScore { curve, adaptive, voc })
}

/// Arithmetic means over images.
#[derive(Clone, Debug, PartialEq)]
pub struct SaliencySummary {
    pub curve: PrCurve,
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
    pub voc: f64,
    pub images: usize,
}

pub fn aggregate_saliency(scores: &[SaliencyScore]) -> Result<SaliencySummary> {
    if scores.is_empty() {
        return Err(Error::Data("nothing to aggregate".into()));
    }
    let n = scores.len() as f64;
    let mut curve = PrCurve {
        precision: [0.0; 256],
        recall: [0.0; 256],
    };
    for t in 0..256 {
        curve.precision[t] = scores.iter().map(|s| s.curve.precision[t]).sum::<f64>() / n;
        curve.recall[t] = scores.iter().map(|s| s.curve.recall[t]).sum::<f64>() / n;
    }
    let mean = |f: &dyn Fn(&SaliencyScore) -> f64| scores.iter().map(f).sum::<f64>() / n;
    Ok(SaliencySummary {
        curve,
        precision: mean(&|s| s.adaptive.precision),
        recall: mean(&|s| s.adaptive.recall),
        f: mean(&|s| s.adaptive.f),
        voc: mean(&|s| s.voc),
        images: scores.len(),
    })
}

/// Per-metric arithmetic mean over images.
pub fn mean_prf(scores: &[Prf]) -> Result<Prf> {
    if scores.is_empty() {
        return Err(Error::Data("nothing to aggregate".into()));
    }
    let n = scores.len() as f64;
    Ok(Prf {
        precision: scores.iter().map(|s| s.precision).sum::<f64>() / n,
        recall: scores.iter().map(|s| s.recall).sum::<f64>() / n,
        f: scores.iter().map(|s| s.f).sum::<f64>() / n,
    })
}

/// Dataset-level box scores: precision and recall from the summed match
/// counts, F as their harmonic mean.
pub fn aggregate_boxes(scores: &[BoxScore]) -> Result<Prf> {
    if scores.is_empty() {
        return Err(Error::Data("nothing to aggregate".into()));
    }
    let total = scores.iter().fold(
        BoxScore {
            matches: 0,
            predicted: 0,
            ground_truth: 0,
        },
        |a, s| BoxScore {
            matches: a.matches + s.matches,
            predicted: a.predicted + s.predicted,
            ground_truth: a.ground_truth + s.ground_truth,
        },
    );
    Ok(total.prf())
}

/// Reads boxes as a JSON array of `{x, y, w, h, ...}` objects or as
/// whitespace-separated `x y w h` lines (`#` starts a comment).
pub fn parse_boxes(text: &str) -> Result<Vec<Rect>> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        #[derive(serde::Deserialize)]
        struct B {
            x: i64,
            y: i64,
            w: i64,
            h: i64,
        }
        let v: Vec<B> = serde_json::from_str(text).map_err(|e| Error::Data(format!("box JSON: {e}")))?;
        return v
            .into_iter()
            .map(|b| checked_rect(b.x, b.y, b.w, b.h))
            .collect();
    }
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<i64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Data(format!("box line {}: `{line}`", n + 1)))?;
        if nums.len() < 4 {
            return Err(Error::Data(format!("box line {}: expected x y w h", n + 1)));
        }
        out.push(checked_rect(nums[0], nums[1], nums[2], nums[3])?);
    }
    Ok(out)
}

fn checked_rect(x: i64, y: i64, w: i64, h: i64) -> Result<Rect> {
    if w < 0 || h < 0 {
        return Err(Error::Data(format!("negative box extent {w}x{h}")));
    }
    Ok(Rect::new(x, y, w, h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_measure_arithmetic() {
        for x in [0.1, 0.37, 0.5, 0.99, 1.0] {
            assert_eq!(f_measure(x, x, SALIENCY_BETA2), x);
        }
        assert!((f_measure(1.0, 0.5, 0.3) - 0.8125).abs() < 1e-12);
        let f = harmonic_f(0.80, 0.62);
        assert!((f - 0.6986).abs() < 1e-4);
        assert_eq!(format!("{f:.2}"), "0.70");
        assert_eq!(f_measure(0.0, 0.0, 0.3), 0.0);
    }

    #[test]
    fn pr_curve_of_binary_gt() {
        let gt = PixelMask::from_fn(6, 6, |x, y| x < 3 && y < 4);
        let map = GrayImage::from_fn(6, 6, |x, y| if gt.get(x, y) { 255.0 } else { 0.0 });
        let c = pr_curve(&map, &gt).unwrap();
        for t in 1..256 {
            assert_eq!((c.precision[t], c.recall[t]), (1.0, 1.0));
        }
        assert_eq!(c.recall[0], 1.0);
        assert!((c.precision[0] - 12.0 / 36.0).abs() < 1e-12);

        let inv = map.map(|v| 255.0 - v);
        let c = pr_curve(&inv, &gt).unwrap();
        for t in 1..256 {
            assert_eq!(c.precision[t], 0.0);
        }
        assert!(pr_curve(&map, &PixelMask::new(6, 6)).is_err());
    }

    #[test]
    fn adaptive_uses_twice_the_mean() {
        let gt = PixelMask::from_fn(4, 1, |x, _| x == 0);
        let map = GrayImage::from_vec(4, 1, vec![200.0, 100.0, 0.0, 0.0]).unwrap();
        // mean 75 -> T = 150, only the first pixel passes
        let r = adaptive_fmeasure(&map, &gt, 0.3).unwrap();
        assert_eq!((r.precision, r.recall, r.f), (1.0, 1.0, 1.0));
        let blank = GrayImage::new(4, 1);
        // T = 0 selects every pixel
        let r = adaptive_fmeasure(&blank, &gt, 0.3).unwrap();
        assert_eq!(r.precision, 0.25);
    }

    #[test]
    fn voc_cases() {
        let a = PixelMask::from_fn(8, 8, |x, _| x < 4);
        assert_eq!(voc_overlap(&a, &a).unwrap(), 1.0);
        let b = PixelMask::from_fn(8, 8, |x, _| x >= 4);
        assert_eq!(voc_overlap(&a, &b).unwrap(), 0.0);
        let c = PixelMask::from_fn(8, 8, |x, _| (2..6).contains(&x));
        assert!((voc_overlap(&a, &c).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(voc_overlap(&PixelMask::new(3, 3), &PixelMask::new(3, 3)).is_err());
    }

    #[test]
    fn box_matching() {
        let gt = vec![Rect::new(0, 0, 10, 10), Rect::new(20, 0, 10, 10)];
        let p = box_prf(&gt, &gt, 0.5);
        assert_eq!((p.precision, p.recall, p.f), (1.0, 1.0, 1.0));
        // one wide box over both: IoU 100/300 with each
        let wide = vec![Rect::new(0, 0, 30, 10)];
        assert_eq!(match_boxes(&wide, &gt, 0.5).matches, 0);
        let far = vec![Rect::new(100, 100, 5, 5)];
        assert_eq!(box_prf(&far, &gt, 0.5).f, 0.0);
        let none = box_prf(&[], &gt, 0.5);
        assert_eq!((none.precision, none.recall), (1.0, 0.0));
    }

    #[test]
    fn dataset_level_counts() {
        let s = [
            BoxScore { matches: 4, predicted: 5, ground_truth: 6 },
            BoxScore { matches: 120, predicted: 150, ground_truth: 194 },
        ];
        let p = aggregate_boxes(&s).unwrap();
        assert!((p.precision - 124.0 / 155.0).abs() < 1e-12);
        assert!((p.recall - 0.62).abs() < 1e-12);
        assert!(aggregate_boxes(&[]).is_err());
        let m = mean_prf(&[
            Prf { precision: 1.0, recall: 0.2, f: 0.4 },
            Prf { precision: 0.5, recall: 0.6, f: 0.6 },
        ])
        .unwrap();
        assert!((m.f - 0.5).abs() < 1e-12);
    }

    #[test]
    fn parses_both_box_formats() {
        let a = parse_boxes("1 2 3 4\n# note\n5,6,7,8\n").unwrap();
        assert_eq!(a, vec![Rect::new(1, 2, 3, 4), Rect::new(5, 6, 7, 8)]);
        let b = parse_boxes(r#"[{"x":1,"y":2,"w":3,"h":4,"angle":0.0}]"#).unwrap();
        assert_eq!(b, vec![Rect::new(1, 2, 3, 4)]);
        assert!(parse_boxes("1 2 3").is_err());
        assert!(parse_boxes("1 2 -3 4").is_err());
    }
}
