//! Acceptance checks, one line of output per criterion.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use characterness::charmodel::{
    harvest_image, train, CharacternessModel, Class, CueLikelihood, HarvestParams, TrainParams,
};
use characterness::cues::{cue_sw, ehog_from_counts, smoothed_kl, EdgeTypeCounts, StrokeWidthStats};
use characterness::evalkit::{f_measure, harmonic_f, voc_overlap};
use characterness::imgcore::{distance_transform, PixelMask};
use characterness::labeling::{energy, min_cut_label, RegionGraph};
use characterness::lines::{detect, DetectParams};
use characterness::regions::{extract_candidates, CandidateParams, Region};
use characterness::synth::{text_scene, texture_scene, SceneParams};
use characterness::cues::CueVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, format!("took {t:.1?}, limit {limit:?}"))
}

fn brute_force_min(g: &RegionGraph) -> f64 {
    let n = g.len();
    (0u32..1 << n)
        .map(|bits| {
            let l: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
            energy(g, &l).unwrap()
        })
        .fold(f64::INFINITY, f64::min)
}

fn exact_min_cut() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let graphs = 250;
    for k in 0..graphs {
        let n = rng.gen_range(1..=14);
        // dyadic values keep every sum exact, so equality is meaningful
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..=256) as f64 / 256.0).collect();
        let density = rng.gen_range(0.1..0.9);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(density) {
                    edges.push((i, j, rng.gen_range(0..=256) as f64 / 256.0));
                }
            }
        }
        let g = RegionGraph::from_scores(&scores, edges).map_err(|e| e.to_string())?;
        let labels = min_cut_label(&g).map_err(|e| e.to_string())?;
        let got = energy(&g, &labels).map_err(|e| e.to_string())?;
        let best = brute_force_min(&g);
        ensure(got == best, format!("graph {k}: min-cut {got} vs brute force {best}"))?;
    }
    within(start, Duration::from_secs(10))?;
    Ok(format!("{graphs} graphs in {:.2?}", start.elapsed()))
}

fn distance_transform_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let masks = 120;
    for k in 0..masks {
        let w = rng.gen_range(1..=32);
        let h = rng.gen_range(1..=32);
        let density = rng.gen_range(0.2..0.95);
        let m = PixelMask::from_fn(w, h, |_, _| rng.gen_bool(density));
        let d = distance_transform(&m);
        // non-members outside the image sit on a one-pixel frame
        for y in 0..h {
            for x in 0..w {
                let expect = if !m.get(x, y) {
                    0.0
                } else {
                    let mut best = i64::MAX;
                    for qy in -1..=h as i64 {
                        for qx in -1..=w as i64 {
                            let inside = qx >= 0 && qy >= 0 && (qx as usize) < w && (qy as usize) < h;
                            if inside && m.get(qx as usize, qy as usize) {
                                continue;
                            }
                            let (dx, dy) = (qx - x as i64, qy - y as i64);
                            best = best.min(dx * dx + dy * dy);
                        }
                    }
                    (best as f64).sqrt()
                };
                ensure(d.get(x, y) == expect, format!("mask {k} pixel ({x},{y}): {} vs {expect}", d.get(x, y)))?;
            }
        }
    }
    Ok(format!("{masks} masks exact"))
}

fn cue_formulas() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10_000 {
        let mut c = EdgeTypeCounts::default();
        for v in c.w.iter_mut() {
            *v = rng.gen_range(0..50);
        }
        if c.total() == 0 {
            c.w[0] = 1;
        }
        let e = ehog_from_counts(&c).map_err(|e| e.to_string())?;
        ensure((0.0..=1.0).contains(&e), format!("eHOG {e} for {:?}", c.w))?;
    }
    let e = ehog_from_counts(&EdgeTypeCounts { w: [10, 4, 8, 4] }).map_err(|e| e.to_string())?;
    ensure((e - 0.0769).abs() <= 1e-4, format!("eHOG(10,4,8,4) = {e}"))?;
    let sw = cue_sw(&StrokeWidthStats {
        mean: 2.0,
        variance: 1.0,
        samples: 2,
    })
    .map_err(|e| e.to_string())?;
    ensure(sw == 0.25, format!("SW(2,1) = {sw}"))?;
    for _ in 0..1000 {
        let bins = rng.gen_range(1..=32);
        let a: Vec<f64> = (0..bins).map(|_| rng.gen_range(0..40) as f64).collect();
        let b: Vec<f64> = (0..bins).map(|_| rng.gen_range(0..40) as f64).collect();
        let same = smoothed_kl(&a, &a).map_err(|e| e.to_string())?;
        ensure(same == 0.0, format!("PD(h,h) = {same}"))?;
        let d = smoothed_kl(&a, &b).map_err(|e| e.to_string())?;
        ensure(d >= 0.0, format!("PD = {d} < 0"))?;
    }
    Ok("eHOG range, eHOG(10,4,8,4), SW(2,1), PD(h,h)=0, PD>=0".into())
}

fn bayes_arithmetic() -> Outcome {
    let flat = |n: usize| vec![1.0 / n as f64; n];
    let lk = |c: Vec<f64>, b: Vec<f64>| CueLikelihood::new(0.0, 1.0, c, b).map_err(|e| e.to_string());
    let m = CharacternessModel::new(
        [lk(vec![0.5, 0.5], vec![0.25, 0.75])?, lk(flat(2), flat(2))?, lk(flat(2), flat(2))?],
        0.5,
    )
    .map_err(|e| e.to_string())?;
    let c = CueVector::new(0.2, 0.2, 0.2);
    let p = m.posterior(&c);
    ensure((p - 2.0 / 3.0).abs() <= 1e-12, format!("ratios (2,1,1): {p}"))?;

    let u = CharacternessModel::new([lk(flat(5), flat(5))?, lk(flat(5), flat(5))?, lk(flat(5), flat(5))?], 0.37)
        .map_err(|e| e.to_string())?;
    let p = u.posterior(&c);
    ensure((p - 0.37).abs() <= 1e-12, format!("uninformative: {p}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let samples: Vec<(CueVector, Class)> = (0..300)
        .map(|_| {
            let class = if rng.gen_bool(0.3) { Class::Character } else { Class::Background };
            (CueVector::new(rng.gen_range(0.0..2.0), rng.gen_range(0.0..12.0), rng.gen()), class)
        })
        .collect();
    let t = train(&samples, &TrainParams::default()).map_err(|e| e.to_string())?;
    for (c, _) in &samples {
        let s = t.posterior(c) + t.posterior_bg(c);
        ensure((s - 1.0).abs() <= 1e-12, format!("posterior + complement = {s}"))?;
    }
    Ok("2/3, prior, complement".into())
}

fn metric_arithmetic() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let x: f64 = rng.gen();
        ensure(f_measure(x, x, 0.3) == x, format!("F(x, x) != x for {x}"))?;
    }
    let f = harmonic_f(0.80, 0.62);
    ensure(format!("{f:.2}") == "0.70", format!("F(0.80, 0.62) = {f}"))?;
    let a = PixelMask::from_fn(10, 10, |x, _| x < 4);
    ensure(voc_overlap(&a, &a).map_err(|e| e.to_string())? == 1.0, "identical VOC")?;
    let b = PixelMask::from_fn(10, 10, |x, _| (2..6).contains(&x));
    let v = voc_overlap(&a, &b).map_err(|e| e.to_string())?;
    ensure((v - 1.0 / 3.0).abs() < 1e-15, format!("half overlap VOC {v}"))?;
    Ok(format!("F(0.80, 0.62) = {f:.4}"))
}

fn best_iou(glyph: &PixelMask, regions: &[Region]) -> f64 {
    let (w, h) = glyph.dims();
    regions
        .iter()
        .map(|r| {
            let m = r.to_mask(w, h);
            let inter = m.intersection_count(glyph);
            if inter == 0 {
                0.0
            } else {
                inter as f64 / m.union_count(glyph) as f64
            }
        })
        .fold(0.0, f64::max)
}

fn emser_recovery() -> Outcome {
    let start = Instant::now();
    let scene = SceneParams::default();
    let emser = CandidateParams::default();
    let mut plain = CandidateParams::default();
    plain.mser.gamma = 0.0;
    let (mut glyphs, mut found) = (0usize, 0usize);
    let (mut sum_e, mut sum_p) = (0.0, 0.0);
    for seed in 0..20 {
        let s = text_scene(100 + seed, &scene);
        let re = extract_candidates(&s.image, &emser).map_err(|e| e.to_string())?;
        let rp = extract_candidates(&s.image, &plain).map_err(|e| e.to_string())?;
        for g in &s.glyphs {
            let ie = best_iou(g, &re);
            let ip = best_iou(g, &rp);
            glyphs += 1;
            if ie >= 0.7 {
                found += 1;
            }
            sum_e += ie;
            sum_p += ip;
        }
    }
    let (mean_e, mean_p) = (sum_e / glyphs as f64, sum_p / glyphs as f64);
    let detail = format!(
        "{found}/{glyphs} glyphs at IoU>=0.7, mean IoU eMSER {mean_e:.4} vs MSER {mean_p:.4}, {:.1?}",
        start.elapsed()
    );
    ensure(found * 10 >= glyphs * 9, detail.clone())?;
    ensure(mean_e >= mean_p, detail.clone())?;
    within(start, Duration::from_secs(30))?;
    Ok(detail)
}

fn trained_model() -> Result<CharacternessModel, String> {
    let scene = SceneParams::default();
    let harvest = HarvestParams::default();
    let mut samples = Vec::new();
    for seed in 0..30 {
        let s = text_scene(seed, &scene);
        samples.extend(harvest_image(&s.image, &s.text_mask, &harvest).map_err(|e| e.to_string())?);
    }
    train(&samples, &TrainParams::default()).map_err(|e| e.to_string())
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let model = trained_model()?;
    let params = DetectParams::default();
    let scene = SceneParams::default();
    let (mut words, mut matched) = (0usize, 0usize);
    let mut misses = Vec::new();
    for seed in 0..10 {
        let s = text_scene(1000 + seed, &scene);
        let d = detect(&s.image, &model, &params).map_err(|e| e.to_string())?;
        for wbox in &s.words {
            words += 1;
            if d.lines.iter().any(|l| l.bbox.iou(wbox) >= 0.5) {
                matched += 1;
            } else {
                misses.push(format!("seed {} word {:?}", 1000 + seed, wbox));
            }
        }
    }
    let mut false_boxes = 0;
    for seed in 0..10 {
        let t = texture_scene(2000 + seed, scene.width, scene.height);
        false_boxes += detect(&t, &model, &params).map_err(|e| e.to_string())?.lines.len();
    }
    let detail = format!(
        "{matched}/{words} words matched, {false_boxes} boxes on textures, {:.1?}",
        start.elapsed()
    );
    ensure(matched == words, format!("{detail}; missed {}", misses.join(", ")))?;
    ensure(false_boxes == 0, detail.clone())?;
    within(start, Duration::from_secs(120))?;
    Ok(detail)
}

fn determinism() -> Outcome {
    let model = trained_model()?;
    let params = DetectParams::default();
    let s = text_scene(1003, &SceneParams::default());
    let a = detect(&s.image, &model, &params).map_err(|e| e.to_string())?;
    let b = detect(&s.image, &model, &params).map_err(|e| e.to_string())?;
    let ja = serde_json::to_string(&a.boxes()).map_err(|e| e.to_string())?;
    let jb = serde_json::to_string(&b.boxes()).map_err(|e| e.to_string())?;
    ensure(ja == jb, "box JSON differs between runs")?;
    ensure(a.characterness == b.characterness, "characterness map differs between runs")?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("model.txt");
    characterness::charmodel::save_model(&model, &path).map_err(|e| e.to_string())?;
    let back = characterness::charmodel::load_model(&path).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..1000 {
        let c = CueVector::new(rng.gen_range(-0.5..2.5), rng.gen_range(-1.0..13.0), rng.gen_range(-0.1..1.1));
        let (p, q) = (model.posterior(&c), back.posterior(&c));
        ensure(p.to_bits() == q.to_bits(), format!("posterior {p} became {q}"))?;
    }
    Ok("detect outputs identical, 1000 posteriors preserved".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("exact min-cut", exact_min_cut),
        ("distance-transform oracle", distance_transform_oracle),
        ("cue formula suite", cue_formulas),
        ("Bayes arithmetic", bayes_arithmetic),
        ("metric arithmetic", metric_arithmetic),
        ("eMSER recovery", emser_recovery),
        ("end-to-end fixture detection", end_to_end),
        ("determinism", determinism),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !only.is_empty() && !only.iter().any(|o| name.contains(o.as_str())) {
            continue;
        }
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
