//! Naive-Bayes characterness model over the SW, PD and eHOG cues.
//!
//! Each cue has a histogram likelihood per class. The posterior is
//! `p(c) Π p(cue|c) / Σ_k p(k) Π p(cue|k)` with `k` over character and
//! background.
//!
//! Model file layout (plain text, one record per line):
//!
//! ```text
//! characterness-model v1
//! prior <p_char>
//! bins <n>
//! cue <name> <min> <max>
//! char <n probabilities>
//! bg <n probabilities>
//! ...            (one cue block per cue, in the order sw, pd, ehog)
//! ```
//!
//! Numbers are written in Rust's shortest round-trip form, so a loaded model
//! is bitwise equal to the saved one.

use std::fmt::Write as _;
use std::path::Path;

use log::{debug, warn};

use crate::cues::{compute_cues, detect_edges, CueParams, CueVector};
use crate::error::{Error, Result};
use crate::imgcore::{connected_components, ColorImage, PixelMask};
use crate::regions::{extract_from_prepared, CandidateParams, Polarity, Prepared, Region};

pub const MODEL_HEADER: &str = "characterness-model v1";
pub const CUE_NAMES: [&str; 3] = ["sw", "pd", "ehog"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Class {
    Character,
    Background,
}

/// Histogram likelihoods of one cue under both classes.
#[derive(Clone, Debug, PartialEq)]
pub struct CueLikelihood {
    pub min: f64,
    pub max: f64,
    pub p_char: Vec<f64>,
    pub p_bg: Vec<f64>,
}

impl CueLikelihood {
    pub fn new(min: f64, max: f64, p_char: Vec<f64>, p_bg: Vec<f64>) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::InvalidParameter(format!("bad cue range [{min}, {max}]")));
        }
        if p_char.is_empty() || p_char.len() != p_bg.len() {
            return Err(Error::BinMismatch(p_char.len(), p_bg.len()));
        }
        for p in [&p_char, &p_bg] {
            if p.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(Error::InvalidParameter("likelihoods must be positive".into()));
            }
            let s: f64 = p.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!("likelihoods sum to {s}")));
            }
        }
        Ok(Self { min, max, p_char, p_bg })
    }

    pub fn bins(&self) -> usize {
        self.p_char.len()
    }

    pub fn bin_edges(&self) -> Vec<f64> {
        let n = self.bins();
        (0..=n)
            .map(|i| self.min + (self.max - self.min) * i as f64 / n as f64)
            .collect()
    }

    /// Bin of `v`; out-of-range values land in the extreme bins, NaN in the
    /// first.
    pub fn bin_of(&self, v: f64) -> usize {
        let n = self.bins();
        let t = (v - self.min) / (self.max - self.min) * n as f64;
        if !(t > 0.0) {
            0
        } else {
            (t as usize).min(n - 1)
        }
    }

    pub fn likelihoods(&self, v: f64) -> (f64, f64) {
        let b = self.bin_of(v);
        (self.p_char[b], self.p_bg[b])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CharacternessModel {
    /// One entry per cue, ordered as [`CUE_NAMES`].
    pub likelihoods: [CueLikelihood; 3],
    pub prior_char: f64,
}

impl CharacternessModel {
    pub fn new(likelihoods: [CueLikelihood; 3], prior_char: f64) -> Result<Self> {
        if !(prior_char > 0.0 && prior_char < 1.0) {
            return Err(Error::InvalidParameter(format!("prior {prior_char} outside (0, 1)")));
        }
        Ok(Self { likelihoods, prior_char })
    }

    pub fn prior_bg(&self) -> f64 {
        1.0 - self.prior_char
    }

    fn joint(&self, cues: &CueVector) -> (f64, f64) {
        let mut c = self.prior_char;
        let mut b = self.prior_bg();
        for (lk, v) in self.likelihoods.iter().zip(cues.as_array()) {
            let (pc, pb) = lk.likelihoods(v);
            c *= pc;
            b *= pb;
        }
        (c, b)
    }

    /// `p(character | cues)`.
    pub fn posterior(&self, cues: &CueVector) -> f64 {
        let (c, b) = self.joint(cues);
        c / (c + b)
    }

    /// `p(background | cues)`, by the same formula with the classes swapped.
    pub fn posterior_bg(&self, cues: &CueVector) -> f64 {
        let (c, b) = self.joint(cues);
        b / (b + c)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MODEL_HEADER}");
        let _ = writeln!(s, "prior {}", self.prior_char);
        let _ = writeln!(s, "bins {}", self.likelihoods[0].bins());
        for (name, lk) in CUE_NAMES.iter().zip(&self.likelihoods) {
            let _ = writeln!(s, "cue {name} {} {}", lk.min, lk.max);
            for (tag, p) in [("char", &lk.p_char), ("bg", &lk.p_bg)] {
                s.push_str(tag);
                for v in p {
                    let _ = write!(s, " {v}");
                }
                s.push('\n');
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::ModelParse {
                    line: text.lines().count() + 1,
                    message: format!("unexpected end of file, expected {what}"),
                })
        };

        let (_, header) = next("header")?;
        if header != MODEL_HEADER {
            return Err(Error::ModelVersion(header.to_string()));
        }
        let (ln, l) = next("prior")?;
        let prior: f64 = parse_field(ln, l, "prior")?;
        let (ln, l) = next("bins")?;
        let bins: usize = parse_field(ln, l, "bins")?;
        if bins == 0 {
            return Err(parse_err(ln, "bins must be positive"));
        }

        let mut cues = Vec::with_capacity(3);
        for name in CUE_NAMES {
            let (ln, l) = next("cue")?;
            let parts: Vec<&str> = l.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "cue" || parts[1] != name {
                return Err(parse_err(ln, &format!("expected `cue {name} <min> <max>`")));
            }
            let min = parse_num(ln, parts[2])?;
            let max = parse_num(ln, parts[3])?;
            let (ln, l) = next("char")?;
            let p_char = parse_probs(ln, l, "char", bins)?;
            let (ln, l) = next("bg")?;
            let p_bg = parse_probs(ln, l, "bg", bins)?;
            cues.push(CueLikelihood::new(min, max, p_char, p_bg).map_err(|e| parse_err(ln, &e.to_string()))?);
        }
        if let Some((ln, l)) = lines.find(|(_, l)| !l.is_empty()) {
            return Err(parse_err(ln, &format!("trailing content `{l}`")));
        }
        let likelihoods: [CueLikelihood; 3] = cues.try_into().expect("three cues parsed");
        CharacternessModel::new(likelihoods, prior)
    }
}

fn parse_err(line: usize, message: &str) -> Error {
    Error::ModelParse {
        line,
        message: message.to_string(),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| parse_err(line, &format!("cannot parse `{s}`")))
}

fn parse_field<T: std::str::FromStr>(line: usize, l: &str, key: &str) -> Result<T> {
    match l.split_whitespace().collect::<Vec<_>>().as_slice() {
        [k, v] if *k == key => parse_num(line, v),
        _ => Err(parse_err(line, &format!("expected `{key} <value>`"))),
    }
}

fn parse_probs(line: usize, l: &str, tag: &str, bins: usize) -> Result<Vec<f64>> {
    let mut it = l.split_whitespace();
    if it.next() != Some(tag) {
        return Err(parse_err(line, &format!("expected `{tag}` row")));
    }
    let v: Vec<f64> = it.map(|s| parse_num(line, s)).collect::<Result<_>>()?;
    if v.len() != bins {
        return Err(parse_err(line, &format!("expected {bins} values, found {}", v.len())));
    }
    Ok(v)
}

pub fn save_model(model: &CharacternessModel, path: &Path) -> Result<()> {
    std::fs::write(path, model.to_text()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<CharacternessModel> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    CharacternessModel::from_text(&text)
}

/// Histogram layout used by [`train`].
#[derive(Clone, Debug, PartialEq)]
pub struct TrainParams {
    pub bins: usize,
    /// Added to every bin count before normalizing.
    pub pseudocount: f64,
    /// `(min, max)` per cue, ordered as [`CUE_NAMES`].
    pub ranges: [(f64, f64); 3],
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            bins: 50,
            pseudocount: 1.0,
            ranges: [(0.0, 2.0), (0.0, 12.0), (0.0, 1.0)],
        }
    }
}

/// Smoothed histogram likelihoods (add-one by default) and
/// relative-frequency priors.
pub fn train(samples: &[(CueVector, Class)], params: &TrainParams) -> Result<CharacternessModel> {
    if params.bins == 0 {
        return Err(Error::InvalidParameter("model bins must be positive".into()));
    }
    if !(params.pseudocount > 0.0 && params.pseudocount.is_finite()) {
        return Err(Error::InvalidParameter("pseudocount must be positive".into()));
    }
    let n_char = samples.iter().filter(|(_, c)| *c == Class::Character).count();
    let n_bg = samples.len() - n_char;
    if n_char == 0 {
        return Err(Error::EmptyClass("character"));
    }
    if n_bg == 0 {
        return Err(Error::EmptyClass("background"));
    }
    let mut cues = Vec::with_capacity(3);
    for (k, &(min, max)) in params.ranges.iter().enumerate() {
        let layout = CueLikelihood {
            min,
            max,
            p_char: vec![1.0; params.bins],
            p_bg: vec![1.0; params.bins],
        };
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::InvalidParameter(format!("bad range for cue {}", CUE_NAMES[k])));
        }
        let mut hc = vec![params.pseudocount; params.bins];
        let mut hb = vec![params.pseudocount; params.bins];
        for (cv, class) in samples {
            let b = layout.bin_of(cv.as_array()[k]);
            match class {
                Class::Character => hc[b] += 1.0,
                Class::Background => hb[b] += 1.0,
            }
        }
        let zc: f64 = hc.iter().sum();
        let zb: f64 = hb.iter().sum();
        cues.push(CueLikelihood::new(
            min,
            max,
            hc.iter().map(|c| c / zc).collect(),
            hb.iter().map(|c| c / zb).collect(),
        )?);
    }
    let likelihoods: [CueLikelihood; 3] = cues.try_into().expect("three cues");
    CharacternessModel::new(likelihoods, n_char as f64 / samples.len() as f64)
}

/// Settings for [`harvest_image`].
#[derive(Clone, Debug, PartialEq)]
pub struct HarvestParams {
    pub candidates: CandidateParams,
    pub cues: CueParams,
    /// Candidates whose IoU with a ground-truth component exceeds this are
    /// erased from the negatives.
    pub erase_iou: f64,
}

impl Default for HarvestParams {
    fn default() -> Self {
        Self {
            candidates: CandidateParams::default(),
            cues: CueParams::default(),
            erase_iou: 0.5,
        }
    }
}

/// Positives from the ground-truth components, negatives from the eMSER
/// candidates that do not match any of them. Regions whose cues are
/// undefined (no skeleton, no edge pixels) are skipped.
pub fn harvest_image(img: &ColorImage, gt: &PixelMask, params: &HarvestParams) -> Result<Vec<(CueVector, Class)>> {
    gt.ensure_same_dims(img.dims())?;
    let prepared = Prepared::new(img, params.candidates.guided_radius, params.candidates.guided_epsilon)?;
    let edges = detect_edges(&prepared.smoothed, &params.cues);

    let truth: Vec<Region> = connected_components(gt)
        .into_iter()
        .map(|px| Region::new(px, Polarity::DarkOnBright, 0))
        .collect::<Result<_>>()?;
    let candidates = extract_from_prepared(&prepared, &params.candidates)?;

    let mut out = Vec::new();
    for r in &truth {
        if let Ok(c) = compute_cues(img, r, &edges, &params.cues) {
            out.push((c, Class::Character));
        }
    }
    let positives = out.len();
    for r in &candidates {
        if truth.iter().any(|t| t.iou(r) > params.erase_iou) {
            continue;
        }
        if let Ok(c) = compute_cues(img, r, &edges, &params.cues) {
            out.push((c, Class::Background));
        }
    }
    debug!(
        "harvest: {} gt components, {} candidates, {} positive, {} negative",
        truth.len(),
        candidates.len(),
        positives,
        out.len() - positives
    );
    Ok(out)
}

/// Harvests every image that has a mask; images without one are skipped.
pub fn harvest_training_samples(
    data: &[(ColorImage, Option<PixelMask>)],
    params: &HarvestParams,
) -> Result<Vec<(CueVector, Class)>> {
    let mut out = Vec::new();
    for (i, (img, mask)) in data.iter().enumerate() {
        match mask {
            Some(m) => out.extend(harvest_image(img, m, params)?),
            None => warn!("image {i} has no ground-truth mask, skipped"),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(n: usize) -> Vec<f64> {
        vec![1.0 / n as f64; n]
    }

    fn uniform_model(prior: f64) -> CharacternessModel {
        let lk = || CueLikelihood::new(0.0, 1.0, flat(4), flat(4)).unwrap();
        CharacternessModel::new([lk(), lk(), lk()], prior).unwrap()
    }

    #[test]
    fn uninformative_cues_return_prior() {
        let m = uniform_model(0.3);
        let p = m.posterior(&CueVector::new(0.2, 0.5, 0.9));
        assert!((p - 0.3).abs() < 1e-12);
    }

    #[test]
    fn ratio_arithmetic() {
        // char bin 0 twice as likely as bg bin 0 on the first cue only
        let informative = CueLikelihood::new(0.0, 1.0, vec![0.5, 0.5], vec![0.25, 0.75]).unwrap();
        let flat2 = || CueLikelihood::new(0.0, 1.0, flat(2), flat(2)).unwrap();
        let m = CharacternessModel::new([informative, flat2(), flat2()], 0.5).unwrap();
        let c = CueVector::new(0.1, 0.1, 0.1);
        assert!((m.posterior(&c) - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.posterior(&c) + m.posterior_bg(&c) - 1.0).abs() < 1e-12);

        let two = || CueLikelihood::new(0.0, 1.0, vec![0.5, 0.5], vec![0.25, 0.75]).unwrap();
        let m = CharacternessModel::new([two(), two(), two()], 0.3).unwrap();
        let expect = 0.3 * 8.0 / (0.3 * 8.0 + 0.7);
        assert!((m.posterior(&c) - expect).abs() < 1e-12);
        assert!((expect - 0.7742).abs() < 1e-4);
    }

    #[test]
    fn out_of_range_clamps() {
        let lk = CueLikelihood::new(0.0, 2.0, flat(50), flat(50)).unwrap();
        assert_eq!(lk.bin_of(-5.0), 0);
        assert_eq!(lk.bin_of(2.0), 49);
        assert_eq!(lk.bin_of(100.0), 49);
        assert_eq!(lk.bin_of(f64::NAN), 0);
        assert_eq!(lk.bin_of(0.04), 1);
        let e = lk.bin_edges();
        assert_eq!(e.len(), 51);
        assert!(e.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn train_priors_and_disjoint_bins() {
        let mut s = Vec::new();
        for i in 0..30 {
            s.push((CueVector::new(0.09 + 0.0001 * i as f64, 1.0, 0.1), Class::Character));
        }
        for i in 0..70 {
            s.push((CueVector::new(1.49 + 0.0001 * i as f64, 1.0, 0.1), Class::Background));
        }
        let m = train(&s, &TrainParams::default()).unwrap();
        assert!((m.prior_char - 0.3).abs() < 1e-12);
        assert!((m.prior_bg() - 0.7).abs() < 1e-12);
        let sw = &m.likelihoods[0];
        assert_eq!(sw.bins(), 50);
        // bins 2 and 37 receive the whole mass; others keep the add-one floor
        assert!((sw.p_char[2] - 31.0 / 80.0).abs() < 1e-15);
        assert!((sw.p_bg[37] - 71.0 / 120.0).abs() < 1e-15);
        assert!((sw.p_char[37] - 1.0 / 80.0).abs() < 1e-15);
        assert!((sw.p_bg[2] - 1.0 / 120.0).abs() < 1e-15);
        for lk in &m.likelihoods {
            assert!((lk.p_char.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!((lk.p_bg.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn train_requires_both_classes() {
        let s = vec![(CueVector::new(0.1, 0.1, 0.1), Class::Character)];
        assert!(matches!(train(&s, &TrainParams::default()), Err(Error::EmptyClass("background"))));
        let s = vec![(CueVector::new(0.1, 0.1, 0.1), Class::Background)];
        assert!(matches!(train(&s, &TrainParams::default()), Err(Error::EmptyClass("character"))));
    }

    #[test]
    fn text_round_trip_is_exact() {
        let s: Vec<_> = (0..40)
            .map(|i| {
                let f = i as f64 / 7.0;
                let class = if i % 3 == 0 { Class::Character } else { Class::Background };
                (CueVector::new(f.sin().abs(), f * 0.3, (f * 0.11).fract()), class)
            })
            .collect();
        let m = train(&s, &TrainParams::default()).unwrap();
        let back = CharacternessModel::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn parse_errors() {
        let m = uniform_model(0.4);
        let text = m.to_text();
        let truncated: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(matches!(CharacternessModel::from_text(&truncated), Err(Error::ModelParse { .. })));
        let v2 = text.replacen("v1", "v2", 1);
        assert!(matches!(CharacternessModel::from_text(&v2), Err(Error::ModelVersion(_))));
        let bad = text.replacen("prior 0.4", "prior x", 1);
        assert!(matches!(CharacternessModel::from_text(&bad), Err(Error::ModelParse { line: 2, .. })));
    }
}
