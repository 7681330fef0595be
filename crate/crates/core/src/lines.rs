//! Text line formation and the full detection pipeline.
//!
//! Labeled characters are clustered by mean shift on (characteristic scale,
//! major orientation). Inside each cluster a greedy pass links nearby
//! characters into lines whose angle is kept as the circular mean of the
//! linking angles.

use std::f64::consts::PI;
use std::time::Instant;

use log::info;
use serde::Serialize;

use crate::charmodel::CharacternessModel;
use crate::cues::{compute_cues, detect_edges, CueParams};
use crate::error::{Error, Result};
use crate::imgcore::{ColorImage, GrayImage, Rect};
use crate::labeling::{build_graph, min_cut_label, GraphParams};
use crate::regions::{extract_from_prepared, CandidateParams, Prepared, Region};

/// Normalized mean-shift coordinates of one region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFeature {
    pub char_scale: f64,
    pub orientation: f64,
}

/// Settings for line formation.
#[derive(Clone, Debug, PartialEq)]
pub struct LineParams {
    pub bandwidth: f64,
    /// Characteristic scale is mapped to `scale / diagonal · scale_norm`.
    pub scale_norm: f64,
    /// Orientation is mapped to `degrees / orientation_norm`.
    pub orientation_norm: f64,
    /// Largest angle, in degrees, between a line and a joining character.
    pub angle_limit: f64,
    /// Smallest mean-shift cluster passed to line grouping.
    pub min_cluster: usize,
    /// A character covered beyond this fraction of its area by a larger
    /// character is dropped before clustering.
    pub nest_overlap: f64,
}

impl Default for LineParams {
    fn default() -> Self {
        Self {
            bandwidth: 2.2,
            scale_norm: 100.0,
            orientation_norm: 10.0,
            angle_limit: 30.0,
            min_cluster: 2,
            nest_overlap: 0.5,
        }
    }
}

impl LineFeature {
    pub fn of(region: &Region, diagonal: f64, params: &LineParams) -> Self {
        let g = region.geometry();
        Self {
            char_scale: g.characteristic_scale() / diagonal * params.scale_norm,
            orientation: g.orientation.to_degrees() / params.orientation_norm,
        }
    }

    fn as_array(&self) -> [f64; 2] {
        [self.char_scale, self.orientation]
    }
}

/// Flat-kernel mean shift. Returns a cluster id per input point; ids are
/// numbered in the sorted order of the points, so the partition and the ids
/// do not depend on input order.
pub fn mean_shift(points: &[LineFeature], bandwidth: f64) -> Result<Vec<usize>> {
    if !(bandwidth > 0.0) {
        return Err(Error::InvalidParameter("bandwidth must be positive".into()));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (points[a].as_array(), points[b].as_array());
        pa[0].total_cmp(&pb[0]).then(pa[1].total_cmp(&pb[1]))
    });
    let sorted: Vec<[f64; 2]> = order.iter().map(|&i| points[i].as_array()).collect();
    let bw2 = bandwidth * bandwidth;

    let mut centers: Vec<[f64; 2]> = Vec::new();
    let mut ids = vec![0usize; points.len()];
    for (k, &start) in sorted.iter().enumerate() {
        let mut m = start;
        for _ in 0..500 {
            let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
            for p in &sorted {
                if (p[0] - m[0]).powi(2) + (p[1] - m[1]).powi(2) <= bw2 {
                    sx += p[0];
                    sy += p[1];
                    n += 1;
                }
            }
            let next = [sx / n as f64, sy / n as f64];
            let moved = (next[0] - m[0]).hypot(next[1] - m[1]);
            m = next;
            if moved < 1e-9 * bandwidth {
                break;
            }
        }
        let hit = centers
            .iter()
            .position(|c| (c[0] - m[0]).hypot(c[1] - m[1]) <= bandwidth / 2.0);
        ids[order[k]] = match hit {
            Some(c) => c,
            None => {
                centers.push(m);
                centers.len() - 1
            }
        };
    }
    Ok(ids)
}

/// A group of at least two characters read as one line.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TextLine {
    /// Indices into the region list handed to [`group_lines`].
    pub members: Vec<usize>,
    /// Radians in `[0, π)`.
    pub angle: f64,
    pub bbox: Rect,
}

/// Angle of the segment joining two points, folded into `[0, π)`.
fn undirected_angle(a: (f64, f64), b: (f64, f64)) -> f64 {
    let t = (b.1 - a.1).atan2(b.0 - a.0).rem_euclid(PI);
    if t >= PI {
        0.0
    } else {
        t
    }
}

/// Smallest difference between two undirected angles.
pub fn angle_between(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

struct LineState {
    members: Vec<usize>,
    // sum of unit vectors at twice each linking angle
    sum: (f64, f64),
    angle: f64,
}

impl LineState {
    fn add_angle(&mut self, t: f64) {
        self.sum.0 += (2.0 * t).cos();
        self.sum.1 += (2.0 * t).sin();
        self.angle = (0.5 * self.sum.1.atan2(self.sum.0)).rem_euclid(PI);
        if self.angle >= PI {
            self.angle = 0.0;
        }
    }
}

/// Greedy same-line labeling.
///
/// Regions are visited left to right (ties by `y`). Two regions are nearby
/// when their centroid distance is below the mean of their skeleton lengths.
/// Two nearby unlabeled regions start a line at their joining angle; an
/// unlabeled region nearby a labeled one joins that line when the joining
/// angle is within `angle_limit` degrees of the line angle. Passes repeat
/// until nothing changes.
pub fn group_lines(regions: &[Region], params: &LineParams) -> Vec<TextLine> {
    let n = regions.len();
    let skel: Vec<f64> = regions.iter().map(|r| r.skeleton_length() as f64).collect();
    let cent: Vec<(f64, f64)> = regions.iter().map(|r| r.centroid()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cent[a].0.total_cmp(&cent[b].0).then(cent[a].1.total_cmp(&cent[b].1)));
    let nearby = |a: usize, b: usize| {
        let d = (cent[a].0 - cent[b].0).hypot(cent[a].1 - cent[b].1);
        d < (skel[a] + skel[b]) / 2.0
    };
    let limit = params.angle_limit.to_radians();

    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut lines: Vec<LineState> = Vec::new();
    loop {
        let mut changed = false;
        for &i in &order {
            for &j in &order {
                if i == j || !nearby(i, j) {
                    continue;
                }
                let t = undirected_angle(cent[i], cent[j]);
                match (label[i], label[j]) {
                    (None, None) => {
                        let mut l = LineState {
                            members: vec![i, j],
                            sum: (0.0, 0.0),
                            angle: 0.0,
                        };
                        l.add_angle(t);
                        label[i] = Some(lines.len());
                        label[j] = Some(lines.len());
                        lines.push(l);
                        changed = true;
                    }
                    (Some(li), None) | (None, Some(li)) => {
                        if angle_between(t, lines[li].angle) < limit {
                            let newcomer = if label[i].is_none() { i } else { j };
                            lines[li].members.push(newcomer);
                            lines[li].add_angle(t);
                            label[newcomer] = Some(li);
                            changed = true;
                        }
                    }
                    (Some(_), Some(_)) => {}
                }
            }
        }
        if !changed {
            break;
        }
    }

    lines
        .into_iter()
        .filter(|l| l.members.len() >= 2)
        .map(|mut l| {
            l.members.sort_unstable();
            let bbox = l
                .members
                .iter()
                .map(|&m| regions[m].bbox())
                .reduce(|a, b| a.union(&b))
                .expect("at least two members");
            TextLine {
                members: l.members,
                angle: l.angle,
                bbox,
            }
        })
        .collect()
}

/// Every setting of [`detect`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DetectParams {
    pub candidates: CandidateParams,
    pub cues: CueParams,
    pub graph: GraphParams,
    pub lines: LineParams,
}

/// A scored candidate region.
#[derive(Clone, Debug)]
pub struct ScoredRegion {
    pub region: Region,
    pub score: f64,
    pub is_character: bool,
}

/// Output of [`detect`].
#[derive(Clone, Debug)]
pub struct Detection {
    /// Candidates whose cues could be computed, in extraction order.
    pub regions: Vec<ScoredRegion>,
    /// Members refer to indices into `regions`.
    pub lines: Vec<TextLine>,
    /// Per-pixel maximum posterior over covering candidates, `[0, 1]`.
    pub characterness: GrayImage,
}

/// JSON record of one output line.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct LineBox {
    pub x: i64,
    pub y: i64,
    pub w: i64,
    pub h: i64,
    pub angle: f64,
    pub region_ids: Vec<usize>,
}

impl Detection {
    pub fn boxes(&self) -> Vec<LineBox> {
        self.lines
            .iter()
            .map(|l| LineBox {
                x: l.bbox.x,
                y: l.bbox.y,
                w: l.bbox.w,
                h: l.bbox.h,
                angle: l.angle,
                region_ids: l.members.clone(),
            })
            .collect()
    }
}

/// Candidates, their posteriors and the characterness map, without labeling.
pub fn score_regions(img: &ColorImage, model: &CharacternessModel, params: &DetectParams) -> Result<(Vec<Region>, Vec<f64>, GrayImage)> {
    let (w, h) = img.dims();
    let mut map = GrayImage::new(w, h);
    if img.is_empty() {
        return Ok((Vec::new(), Vec::new(), map));
    }
    let t0 = Instant::now();
    let prepared = Prepared::new(img, params.candidates.guided_radius, params.candidates.guided_epsilon)?;
    let candidates = extract_from_prepared(&prepared, &params.candidates)?;
    let edges = detect_edges(&prepared.smoothed, &params.cues);
    info!("candidates: {} regions in {:.1?}", candidates.len(), t0.elapsed());

    let t1 = Instant::now();
    let mut regions = Vec::with_capacity(candidates.len());
    let mut scores = Vec::with_capacity(candidates.len());
    for r in candidates {
        if let Ok(c) = compute_cues(img, &r, &edges, &params.cues) {
            scores.push(model.posterior(&c));
            regions.push(r);
        }
    }
    for (r, &s) in regions.iter().zip(&scores) {
        for &(x, y) in r.pixels() {
            if s > map.get(x, y) {
                map.set(x, y, s);
            }
        }
    }
    info!("cues: {} scored in {:.1?}", regions.len(), t1.elapsed());
    Ok((regions, scores, map))
}

/// Removes every index whose region lies mostly inside a larger one of the set.
pub fn drop_nested(regions: &[Region], ids: &[usize], max_overlap: f64) -> Vec<usize> {
    ids.iter()
        .copied()
        .filter(|&i| {
            let r = &regions[i];
            !ids.iter().any(|&j| {
                let o = &regions[j];
                (o.area(), j) > (r.area(), i)
                    && o.bbox().intersection_area(&r.bbox()) > 0
                    && r.intersection_count(o) as f64 > max_overlap * r.area() as f64
            })
        })
        .collect()
}

/// Full pipeline: candidates, cues, posterior, min-cut labeling, mean shift
/// and line grouping.
pub fn detect(img: &ColorImage, model: &CharacternessModel, params: &DetectParams) -> Result<Detection> {
    let (regions, scores, characterness) = score_regions(img, model, params)?;
    let t0 = Instant::now();
    let graph = build_graph(&regions, &scores, img, &params.graph)?;
    let labels = min_cut_label(&graph)?;
    info!(
        "labeling: {} vertices, {} edges, {} characters in {:.1?}",
        graph.len(),
        graph.edges().len(),
        labels.iter().filter(|&&l| l).count(),
        t0.elapsed()
    );

    let t1 = Instant::now();
    let characters: Vec<usize> = (0..regions.len()).filter(|&i| labels[i]).collect();
    let kept = drop_nested(&regions, &characters, params.lines.nest_overlap);
    let (w, h) = img.dims();
    let diagonal = (w as f64).hypot(h as f64).max(1.0);
    let features: Vec<LineFeature> = kept
        .iter()
        .map(|&i| LineFeature::of(&regions[i], diagonal, &params.lines))
        .collect();
    let clusters = mean_shift(&features, params.lines.bandwidth)?;
    let n_clusters = clusters.iter().copied().max().map_or(0, |m| m + 1);
    let mut lines = Vec::new();
    for c in 0..n_clusters {
        let idx: Vec<usize> = kept
            .iter()
            .zip(&clusters)
            .filter(|(_, &k)| k == c)
            .map(|(&i, _)| i)
            .collect();
        if idx.len() < params.lines.min_cluster.max(2) {
            continue;
        }
        let members: Vec<Region> = idx.iter().map(|&i| regions[i].clone()).collect();
        for mut l in group_lines(&members, &params.lines) {
            l.members = l.members.iter().map(|&m| idx[m]).collect();
            l.members.sort_unstable();
            lines.push(l);
        }
    }
    lines.sort_by_key(|l| (l.bbox.y, l.bbox.x, l.members[0]));
    info!("lines: {} from {} clusters in {:.1?}", lines.len(), n_clusters, t1.elapsed());

    let regions = regions
        .into_iter()
        .zip(scores)
        .zip(labels)
        .map(|((region, score), is_character)| ScoredRegion {
            region,
            score,
            is_character,
        })
        .collect();
    Ok(Detection {
        regions,
        lines,
        characterness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regions::Polarity;

    fn square(x0: usize, y0: usize, s: usize) -> Region {
        let px = (y0..y0 + s).flat_map(|y| (x0..x0 + s).map(move |x| (x, y))).collect();
        Region::new(px, Polarity::DarkOnBright, 0).unwrap()
    }

    fn feat(a: f64, b: f64) -> LineFeature {
        LineFeature {
            char_scale: a,
            orientation: b,
        }
    }

    #[test]
    fn mean_shift_basic() {
        assert_eq!(mean_shift(&[feat(1.0, 1.0)], 2.2).unwrap(), vec![0]);
        let pts = [feat(10.0, 10.0), feat(0.0, 0.0), feat(10.0, 10.0), feat(0.0, 0.0), feat(0.0, 0.0), feat(10.0, 10.0)];
        let ids = mean_shift(&pts, 2.2).unwrap();
        assert_eq!(ids, vec![1, 0, 1, 0, 0, 1]);
        assert!(mean_shift(&pts, 0.0).is_err());
    }

    #[test]
    fn adjacent_squares_form_a_line() {
        // 7x7 squares: skeleton is a single pixel, so use bars with long skeletons
        let bar = |x0: usize| {
            let px = (10..30).flat_map(|y| (x0..x0 + 4).map(move |x| (x, y))).collect();
            Region::new(px, Polarity::DarkOnBright, 0).unwrap()
        };
        let regions = vec![bar(10), bar(20)];
        let lines = group_lines(&regions, &LineParams::default());
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].members, vec![0, 1]);
        assert!(lines[0].angle.abs() < 1e-12);
        assert_eq!(lines[0].bbox, Rect::new(10, 10, 14, 20));
    }

    #[test]
    fn far_apart_regions_stay_alone() {
        let regions = vec![square(0, 0, 5), square(200, 0, 5)];
        assert!(group_lines(&regions, &LineParams::default()).is_empty());
    }

    #[test]
    fn angle_helpers() {
        assert!((angle_between(0.05, PI - 0.05) - 0.1).abs() < 1e-12);
        assert_eq!(undirected_angle((0.0, 0.0), (-1.0, 0.0)), 0.0);
        assert!((undirected_angle((0.0, 0.0), (1.0, 1.0)) - PI / 4.0).abs() < 1e-12);
    }
}
