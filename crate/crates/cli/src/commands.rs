use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use characterness::charmodel::{harvest_image, load_model, save_model, train, CharacternessModel, Class};
use characterness::evalkit::{aggregate_boxes, aggregate_saliency, evaluate_saliency, match_boxes, parse_boxes};
use characterness::io::{read_color_image, read_gray, read_mask, write_unit_map};
use characterness::lines::{detect, score_regions, DetectParams};
use characterness::PipelineConfig;
use log::{info, warn};
use rayon::prelude::*;

use crate::{manifest, Cli, CliError, Command};

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> Result<()> {
    let config = load_config(cli.config.as_deref(), &cli.overrides)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Train { manifest, out } => cmd_train(&manifest, &config, &out),
        Command::Detect {
            model,
            out_dir,
            manifest,
            images,
        } => cmd_detect(&model, &inputs(manifest.as_deref(), images)?, &config, &out_dir, true),
        Command::Saliency {
            model,
            out_dir,
            manifest,
            images,
        } => cmd_detect(&model, &inputs(manifest.as_deref(), images)?, &config, &out_dir, false),
        Command::EvalSaliency { maps, gt, out } => cmd_eval_saliency(&maps, &gt, &config, &out),
        Command::EvalBoxes { pred, gt, iou, out } => {
            let iou = iou.unwrap_or(config.eval_match_iou);
            if !(iou > 0.0 && iou <= 1.0) {
                return Err(CliError::Usage(format!("--iou {iou} outside (0, 1]")));
            }
            cmd_eval_boxes(&pred, &gt, iou, out.as_deref())
        }
        Command::ConfigDump => {
            print!("{}", config.dump());
            Ok(())
        }
    })
}

/// Defaults, then the file, then each override in order; validated last.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<PipelineConfig> {
    let mut c = match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    for o in overrides {
        c.apply_override(o)?;
    }
    c.validate()?;
    Ok(c)
}

fn inputs(manifest: Option<&Path>, mut images: Vec<PathBuf>) -> Result<Vec<PathBuf>> {
    if let Some(m) = manifest {
        let mut listed: Vec<PathBuf> = manifest::load(m)?.into_iter().map(|e| e.image).collect();
        listed.append(&mut images);
        images = listed;
    }
    if images.is_empty() {
        return Err(CliError::Usage("no input images".into()));
    }
    Ok(images)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn stem(path: &Path) -> Result<String> {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .ok_or_else(|| CliError::Usage(format!("{}: no file name", path.display())))
}

pub fn cmd_train(manifest_path: &Path, config: &PipelineConfig, out: &Path) -> Result<()> {
    let entries = manifest::load(manifest_path)?;
    let labeled: Vec<_> = entries.iter().filter_map(|e| e.mask.as_ref().map(|m| (&e.image, m))).collect();
    for e in entries.iter().filter(|e| e.mask.is_none()) {
        warn!("{}: no mask, skipped", e.image.display());
    }
    if labeled.is_empty() {
        return Err(CliError::Data(format!("{}: no entry has a mask", manifest_path.display())));
    }
    let params = config.harvest_params();
    let t0 = Instant::now();
    let per_image: Vec<Result<Vec<_>>> = labeled
        .par_iter()
        .map(|(img, mask)| {
            let image = read_color_image(img)?;
            let gt = read_mask(mask)?;
            harvest_image(&image, &gt, &params).map_err(|e| CliError::from(e).in_file(img))
        })
        .collect();
    let mut samples = Vec::new();
    for r in per_image {
        samples.extend(r?);
    }
    let positives = samples.iter().filter(|(_, c)| *c == Class::Character).count();
    info!(
        "harvest: {} images, {} positive, {} negative in {:.1?}",
        labeled.len(),
        positives,
        samples.len() - positives,
        t0.elapsed()
    );
    let model = train(&samples, &config.train_params())?;
    info!("model: prior {:.4} character / {:.4} background", model.prior_char, model.prior_bg());
    save_model(&model, out)?;
    Ok(())
}

fn cmd_detect(model: &Path, images: &[PathBuf], config: &PipelineConfig, out_dir: &Path, with_lines: bool) -> Result<()> {
    let model: CharacternessModel = load_model(model)?;
    let mut seen = BTreeSet::new();
    for p in images {
        if !seen.insert(stem(p)?) {
            return Err(CliError::Usage(format!("two inputs share the file stem of {}", p.display())));
        }
    }
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let params = config.detect_params();

    let results: Vec<Result<Output>> = images.par_iter().map(|p| run_one(p, &model, &params, with_lines)).collect();
    // written in input order once every image is done
    for (path, r) in images.iter().zip(results) {
        let out = r?;
        let stem = stem(path)?;
        write_unit_map(&out_dir.join(format!("{stem}.png")), &out.map)?;
        if let Some(boxes) = out.boxes {
            let file = out_dir.join(format!("{stem}.json"));
            fs::write(&file, format!("{boxes}\n")).map_err(io_err(&file))?;
            println!("{{\"image\":{},\"boxes\":{boxes}}}", serde_json::Value::from(path.to_string_lossy().as_ref()));
        }
    }
    Ok(())
}

struct Output {
    map: characterness::imgcore::GrayImage,
    boxes: Option<String>,
}

fn run_one(path: &Path, model: &CharacternessModel, params: &DetectParams, with_lines: bool) -> Result<Output> {
    let img = read_color_image(path)?;
    let fail = |e: characterness::Error| CliError::from(e).in_file(path);
    if with_lines {
        let d = detect(&img, model, params).map_err(fail)?;
        let boxes = serde_json::to_string(&d.boxes()).map_err(|e| CliError::Data(e.to_string()))?;
        Ok(Output {
            map: d.characterness,
            boxes: Some(boxes),
        })
    } else {
        let (_, _, map) = score_regions(&img, model, params).map_err(fail)?;
        Ok(Output { map, boxes: None })
    }
}

impl CliError {
    fn in_file(self, path: &Path) -> Self {
        let tag = |m: String| format!("{}: {m}", path.display());
        match self {
            CliError::Data(m) => CliError::Data(tag(m)),
            other => other,
        }
    }
}

/// Regular files of `dir` keyed by file stem.
fn files_by_stem(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let hidden = path.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.'));
        if !path.is_file() || hidden {
            continue;
        }
        if let Some(prev) = out.insert(stem(&path)?, path.clone()) {
            return Err(CliError::Data(format!("{} and {} share a file stem", prev.display(), path.display())));
        }
    }
    if out.is_empty() {
        return Err(CliError::Data(format!("{}: no files", dir.display())));
    }
    Ok(out)
}

/// Pairs files with equal stems, warning about those without a counterpart.
fn pair_dirs(a: &Path, b: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let left = files_by_stem(a)?;
    let mut right = files_by_stem(b)?;
    let mut pairs = Vec::new();
    for (stem, pa) in left {
        match right.remove(&stem) {
            Some(pb) => pairs.push((stem, pa, pb)),
            None => warn!("{}: no counterpart in {}, skipped", pa.display(), b.display()),
        }
    }
    for pb in right.values() {
        warn!("{}: no counterpart in {}, skipped", pb.display(), a.display());
    }
    if pairs.is_empty() {
        return Err(CliError::Data(format!("no file stems shared by {} and {}", a.display(), b.display())));
    }
    Ok(pairs)
}

fn cmd_eval_saliency(maps: &Path, gt: &Path, config: &PipelineConfig, out: &Path) -> Result<()> {
    let pairs = pair_dirs(maps, gt)?;
    let scores: Vec<Result<_>> = pairs
        .par_iter()
        .map(|(_, m, g)| {
            let map = read_gray(m)?;
            let mask = read_mask(g)?;
            evaluate_saliency(&map, &mask, config.eval_beta2).map_err(|e| CliError::from(e).in_file(m))
        })
        .collect();
    let scores = scores.into_iter().collect::<Result<Vec<_>>>()?;
    let s = aggregate_saliency(&scores)?;

    fs::create_dir_all(out).map_err(io_err(out))?;
    let mut csv = String::from("T,P,R\n");
    for t in 0..256 {
        let _ = writeln!(csv, "{t},{:.6},{:.6}", s.curve.precision[t], s.curve.recall[t]);
    }
    let csv_path = out.join("pr_curve.csv");
    fs::write(&csv_path, csv).map_err(io_err(&csv_path))?;
    let summary = format!(
        "images = {}\nprecision = {:.4}\nrecall = {:.4}\nf = {:.4}\nvoc = {:.4}\n",
        s.images, s.precision, s.recall, s.f, s.voc
    );
    let summary_path = out.join("summary.txt");
    fs::write(&summary_path, summary).map_err(io_err(&summary_path))?;
    println!("P={:.2} R={:.2} F={:.2} VOC={:.2}", s.precision, s.recall, s.f, s.voc);
    Ok(())
}

fn cmd_eval_boxes(pred: &Path, gt: &Path, iou: f64, out: Option<&Path>) -> Result<()> {
    let pairs = pair_dirs(pred, gt)?;
    let read = |p: &Path| -> Result<_> {
        let text = fs::read_to_string(p).map_err(io_err(p))?;
        parse_boxes(&text).map_err(|e| CliError::from(e).in_file(p))
    };
    let scores: Vec<Result<_>> = pairs
        .par_iter()
        .map(|(_, p, g)| Ok(match_boxes(&read(p)?, &read(g)?, iou)))
        .collect();
    let scores = scores.into_iter().collect::<Result<Vec<_>>>()?;
    let prf = aggregate_boxes(&scores)?;
    if let Some(out) = out {
        let (m, np, ng) = scores
            .iter()
            .fold((0, 0, 0), |a, s| (a.0 + s.matches, a.1 + s.predicted, a.2 + s.ground_truth));
        let summary = format!(
            "images = {}\nmatches = {m}\npredicted = {np}\nground_truth = {ng}\nprecision = {:.4}\nrecall = {:.4}\nf = {:.4}\n",
            scores.len(),
            prf.precision,
            prf.recall,
            prf.f
        );
        fs::write(out, summary).map_err(io_err(out))?;
    }
    println!("P={:.2} R={:.2} F={:.2}", prf.precision, prf.recall, prf.f);
    Ok(())
}
