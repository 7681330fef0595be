//! Flat `key = value` pipeline configuration.
//!
//! Every tunable lives in one registry so the file format, command-line
//! overrides and defaults cannot drift apart. Lines starting with `#` and
//! blank lines are ignored; unknown keys are rejected.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::charmodel::{HarvestParams, TrainParams};
use crate::cues::CueParams;
use crate::error::{Error, Result};
use crate::labeling::GraphParams;
use crate::lines::{DetectParams, LineParams};
use crate::regions::{CandidateParams, MserParams};

macro_rules! registry {
    ($( $key:literal => $field:ident : $ty:ty = $default:expr, $doc:literal; )*) => {
        /// All pipeline tunables.
        #[derive(Clone, Debug, PartialEq)]
        pub struct PipelineConfig {
            $( #[doc = $doc] pub $field: $ty, )*
        }

        impl Default for PipelineConfig {
            fn default() -> Self {
                Self { $( $field: $default, )* }
            }
        }

        /// Every configuration key, in file order.
        pub const CONFIG_KEYS: &[&str] = &[$( $key ),*];

        impl PipelineConfig {
            /// Sets one key from its textual value, without validation.
            pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
                match key {
                    $( $key => self.$field = parse_value::<$ty>(key, value)?, )*
                    _ => return Err(Error::Config(format!("unknown key `{key}`"))),
                }
                Ok(())
            }

            pub fn get(&self, key: &str) -> Option<String> {
                match key {
                    $( $key => Some(self.$field.to_string()), )*
                    _ => None,
                }
            }

            pub fn describe(key: &str) -> Option<&'static str> {
                match key {
                    $( $key => Some($doc.trim()), )*
                    _ => None,
                }
            }
        }
    };
}

registry! {
    "mser.delta" => mser_delta: u8 = 10, " Threshold step of the MSER stability test.";
    "mser.gamma" => mser_gamma: f64 = 0.5, " Gradient weight in the eMSER preprocessing.";
    "mser.min_area" => mser_min_area: usize = 30, " Smallest candidate, in pixels.";
    "mser.max_area" => mser_max_area: f64 = 0.25, " Largest candidate, as a fraction of the image.";
    "mser.max_variation" => mser_max_variation: f64 = 0.25, " Largest accepted MSER variation.";
    "mser.dedup_iou" => mser_dedup_iou: f64 = 0.9, " Candidates above this IoU with a kept one of the other polarity are dropped.";
    "mser.nested_iou" => mser_nested_iou: f64 = 0.8, " Candidates above this IoU with a kept one of the same polarity are dropped.";
    "guided.radius" => guided_radius: usize = 1, " Window radius of the self-guided filter.";
    "guided.epsilon" => guided_epsilon: f64 = 650.25, " Regularizer of the guided filter, on the 0..255 scale.";
    "canny.low_ratio" => canny_low_ratio: f64 = 0.4, " Canny low threshold relative to the Otsu high threshold.";
    "canny.otsu_bins" => canny_otsu_bins: usize = 256, " Histogram bins for the Otsu threshold.";
    "ehog.edge_dilation" => ehog_edge_dilation: usize = 1, " Pixels around a region searched for its edge pixels.";
    "pd.bins" => pd_bins: usize = 16, " Bins per colour channel in the PD cue.";
    "swd.bins" => swd_bins: usize = 16, " Bins of the stroke-width histograms compared by SWD.";
    "cd.scale" => cd_scale: f64 = 100.0, " Divisor applied to the LAB colour distance.";
    "ud.beta" => ud_beta: f64 = 0.5, " Weight of SWD against CD in the pairwise term.";
    "model.bins" => model_bins: usize = 50, " Likelihood histogram bins per cue.";
    "model.pseudocount" => model_pseudocount: f64 = 1.0, " Count added to every likelihood bin.";
    "model.sw_min" => model_sw_min: f64 = 0.0, " Lower end of the SW histogram.";
    "model.sw_max" => model_sw_max: f64 = 2.0, " Upper end of the SW histogram.";
    "model.pd_min" => model_pd_min: f64 = 0.0, " Lower end of the PD histogram.";
    "model.pd_max" => model_pd_max: f64 = 12.0, " Upper end of the PD histogram.";
    "model.ehog_min" => model_ehog_min: f64 = 0.0, " Lower end of the eHOG histogram.";
    "model.ehog_max" => model_ehog_max: f64 = 1.0, " Upper end of the eHOG histogram.";
    "harvest.erase_iou" => harvest_erase_iou: f64 = 0.5, " Candidates above this IoU with a ground-truth character are not negatives.";
    "lines.bandwidth" => lines_bandwidth: f64 = 2.2, " Mean-shift bandwidth.";
    "lines.scale_norm" => lines_scale_norm: f64 = 100.0, " Characteristic scale feature is scale / diagonal times this.";
    "lines.orientation_norm" => lines_orientation_norm: f64 = 10.0, " Orientation feature is degrees divided by this.";
    "lines.angle_limit" => lines_angle_limit: f64 = 30.0, " Largest angle in degrees between a line and a joining character.";
    "lines.min_cluster" => lines_min_cluster: usize = 2, " Smallest mean-shift cluster grouped into lines.";
    "lines.nest_overlap" => lines_nest_overlap: f64 = 0.5, " Characters covered beyond this fraction by a larger character are dropped.";
    "eval.match_iou" => eval_match_iou: f64 = 0.5, " IoU needed for a detected box to match a ground-truth box.";
    "eval.beta2" => eval_beta2: f64 = 0.3, " Precision weight of the saliency F-measure.";
    "threads" => threads: usize = 0, " Worker threads; 0 uses every core.";
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn check(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(what.to_string()))
    }
}

fn unit(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        check(self.mser_delta >= 1, "mser.delta must be >= 1")?;
        check(self.mser_gamma >= 0.0, "mser.gamma must be >= 0")?;
        check(self.mser_min_area >= 1, "mser.min_area must be >= 1")?;
        check(self.mser_max_area > 0.0 && self.mser_max_area <= 1.0, "mser.max_area must lie in (0, 1]")?;
        check(self.mser_max_variation >= 0.0, "mser.max_variation must be >= 0")?;
        check(self.mser_dedup_iou > 0.0 && self.mser_dedup_iou <= 1.0, "mser.dedup_iou must lie in (0, 1]")?;
        check(self.mser_nested_iou > 0.0 && self.mser_nested_iou <= 1.0, "mser.nested_iou must lie in (0, 1]")?;
        check(self.guided_radius >= 1, "guided.radius must be >= 1")?;
        check(self.guided_epsilon >= 0.0, "guided.epsilon must be >= 0")?;
        check(unit(self.canny_low_ratio), "canny.low_ratio must lie in [0, 1]")?;
        check(self.canny_otsu_bins >= 2, "canny.otsu_bins must be >= 2")?;
        check((1..=256).contains(&self.pd_bins), "pd.bins must lie in 1..=256")?;
        check(self.swd_bins >= 1, "swd.bins must be >= 1")?;
        check(self.cd_scale > 0.0, "cd.scale must be > 0")?;
        check(unit(self.ud_beta), "ud.beta must lie in [0, 1]")?;
        check(self.model_bins >= 1, "model.bins must be >= 1")?;
        check(self.model_pseudocount > 0.0, "model.pseudocount must be > 0")?;
        check(self.model_sw_min < self.model_sw_max, "model.sw_min must be below model.sw_max")?;
        check(self.model_pd_min < self.model_pd_max, "model.pd_min must be below model.pd_max")?;
        check(self.model_ehog_min < self.model_ehog_max, "model.ehog_min must be below model.ehog_max")?;
        check(unit(self.harvest_erase_iou), "harvest.erase_iou must lie in [0, 1]")?;
        check(self.lines_bandwidth > 0.0, "lines.bandwidth must be > 0")?;
        check(self.lines_scale_norm > 0.0, "lines.scale_norm must be > 0")?;
        check(self.lines_orientation_norm > 0.0, "lines.orientation_norm must be > 0")?;
        check(self.lines_angle_limit > 0.0 && self.lines_angle_limit <= 90.0, "lines.angle_limit must lie in (0, 90]")?;
        check(self.lines_min_cluster >= 2, "lines.min_cluster must be >= 2")?;
        check((0.0..=1.0).contains(&self.lines_nest_overlap), "lines.nest_overlap must lie in [0, 1]")?;
        check(self.eval_match_iou > 0.0 && self.eval_match_iou <= 1.0, "eval.match_iou must lie in (0, 1]")?;
        check(self.eval_beta2 > 0.0, "eval.beta2 must be > 0")?;
        let all_finite = CONFIG_KEYS
            .iter()
            .filter_map(|k| self.get(k))
            .all(|v| v.parse::<f64>().map_or(true, f64::is_finite));
        check(all_finite, "values must be finite")
    }

    /// `key = value` lines preceded by a comment describing each key.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for key in CONFIG_KEYS {
            let _ = writeln!(s, "# {}", Self::describe(key).unwrap_or_default());
            let _ = writeln!(s, "{key} = {}", self.get(key).unwrap_or_default());
        }
        s
    }

    /// Applies `key = value` lines over the current values, then validates.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        self.validate()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_text(&text)
    }

    /// Applies one `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn candidate_params(&self) -> CandidateParams {
        CandidateParams {
            mser: MserParams {
                delta: self.mser_delta,
                min_area: self.mser_min_area,
                max_area: self.mser_max_area,
                max_variation: self.mser_max_variation,
                gamma: self.mser_gamma,
            },
            guided_radius: self.guided_radius,
            guided_epsilon: self.guided_epsilon,
            dedup_iou: self.mser_dedup_iou,
            nested_iou: self.mser_nested_iou,
        }
    }

    pub fn cue_params(&self) -> CueParams {
        CueParams {
            pd_bins: self.pd_bins,
            ehog_dilation: self.ehog_edge_dilation,
            canny_low_ratio: self.canny_low_ratio,
            canny_otsu_bins: self.canny_otsu_bins,
        }
    }

    pub fn graph_params(&self) -> GraphParams {
        GraphParams {
            beta: self.ud_beta,
            swd_bins: self.swd_bins,
            cd_scale: self.cd_scale,
        }
    }

    pub fn line_params(&self) -> LineParams {
        LineParams {
            bandwidth: self.lines_bandwidth,
            scale_norm: self.lines_scale_norm,
            orientation_norm: self.lines_orientation_norm,
            angle_limit: self.lines_angle_limit,
            min_cluster: self.lines_min_cluster,
            nest_overlap: self.lines_nest_overlap,
        }
    }

    pub fn detect_params(&self) -> DetectParams {
        DetectParams {
            candidates: self.candidate_params(),
            cues: self.cue_params(),
            graph: self.graph_params(),
            lines: self.line_params(),
        }
    }

    pub fn harvest_params(&self) -> HarvestParams {
        HarvestParams {
            candidates: self.candidate_params(),
            cues: self.cue_params(),
            erase_iou: self.harvest_erase_iou,
        }
    }

    pub fn train_params(&self) -> TrainParams {
        TrainParams {
            bins: self.model_bins,
            pseudocount: self.model_pseudocount,
            ranges: [
                (self.model_sw_min, self.model_sw_max),
                (self.model_pd_min, self.model_pd_max),
                (self.model_ehog_min, self.model_ehog_max),
            ],
        }
    }
}
