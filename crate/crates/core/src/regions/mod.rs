//! Candidate character extraction with edge-preserving MSER.
//!
//! The intensity image is smoothed with a self-guided filter, its gradient
//! magnitude is added (dark pass) or subtracted (bright pass) with weight
//! `gamma`, and MSER runs on each of the two results. Mixed pixels along
//! character boundaries carry large gradients, so the offset pushes them out
//! of the extremal regions and keeps glyph shapes from bleeding.

mod mser;

pub use mser::mser_detect;

use crate::error::{Error, Result};
use crate::imgcore::{
    gradient_magnitude, guided_filter, to_intensity, ColorImage, GrayImage, PixelMask, Rect,
    RegionGeometry,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Polarity {
    /// Dark regions on a bright background.
    DarkOnBright,
    /// Bright regions on a dark background.
    BrightOnDark,
}

impl Polarity {
    pub const BOTH: [Polarity; 2] = [Polarity::DarkOnBright, Polarity::BrightOnDark];
}

#[derive(Clone, Debug, PartialEq)]
pub struct MserParams {
    /// Threshold step used by the stability measure.
    pub delta: u8,
    /// Smallest region, in pixels.
    pub min_area: usize,
    /// Largest region, as a fraction of the image area.
    pub max_area: f64,
    pub max_variation: f64,
    /// Weight of the gradient map in the preprocessed image.
    pub gamma: f64,
}

impl Default for MserParams {
    fn default() -> Self {
        Self {
            delta: 10,
            min_area: 30,
            max_area: 0.25,
            max_variation: 0.25,
            gamma: 0.5,
        }
    }
}

impl MserParams {
    pub fn validate(&self) -> Result<()> {
        if self.delta < 1 {
            return Err(Error::InvalidParameter("mser delta must be >= 1".into()));
        }
        if !(self.max_area > 0.0 && self.max_area <= 1.0) {
            return Err(Error::InvalidParameter("mser max_area must lie in (0, 1]".into()));
        }
        if !(self.max_variation >= 0.0) {
            return Err(Error::InvalidParameter("mser max_variation must be >= 0".into()));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::InvalidParameter("mser gamma must be >= 0".into()));
        }
        Ok(())
    }
}

/// A connected extremal region with cached geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pixels: Vec<(usize, usize)>,
    geometry: RegionGeometry,
    polarity: Polarity,
    threshold: u8,
}

impl Region {
    /// Builds a region from pixel coordinates; the list is sorted row-major.
    pub fn new(mut pixels: Vec<(usize, usize)>, polarity: Polarity, threshold: u8) -> Result<Self> {
        pixels.sort_unstable_by_key(|&(x, y)| (y, x));
        pixels.dedup();
        let geometry = RegionGeometry::from_points(pixels.iter().copied())?;
        Ok(Self {
            pixels,
            geometry,
            polarity,
            threshold,
        })
    }

    pub fn pixels(&self) -> &[(usize, usize)] {
        &self.pixels
    }

    pub fn geometry(&self) -> &RegionGeometry {
        &self.geometry
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    /// Selection level, expressed on the inverted scale for the bright pass.
    pub fn threshold(&self) -> u8 {
        self.threshold
    }

    pub fn area(&self) -> usize {
        self.pixels.len()
    }

    pub fn bbox(&self) -> Rect {
        self.geometry.bbox
    }

    pub fn centroid(&self) -> (f64, f64) {
        self.geometry.centroid
    }

    /// Mask cropped to the bounding box grown by `pad`, plus the image
    /// coordinates of the mask's origin (which may be negative).
    pub fn local_mask(&self, pad: usize) -> (PixelMask, (i64, i64)) {
        let b = self.bbox();
        let p = pad as i64;
        let (ox, oy) = (b.x - p, b.y - p);
        let mut m = PixelMask::new(b.w as usize + 2 * pad, b.h as usize + 2 * pad);
        for &(x, y) in &self.pixels {
            m.set((x as i64 - ox) as usize, (y as i64 - oy) as usize, true);
        }
        (m, (ox, oy))
    }

    pub fn to_mask(&self, width: usize, height: usize) -> PixelMask {
        let mut m = PixelMask::new(width, height);
        for &(x, y) in &self.pixels {
            if x < width && y < height {
                m.set(x, y, true);
            }
        }
        m
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.pixels.binary_search_by_key(&(y, x), |&(px, py)| (py, px)).is_ok()
    }

    pub fn intersection_count(&self, other: &Region) -> usize {
        if self.bbox().intersection_area(&other.bbox()) == 0 {
            return 0;
        }
        let (mut i, mut j, mut n) = (0, 0, 0);
        let key = |p: &(usize, usize)| (p.1, p.0);
        while i < self.pixels.len() && j < other.pixels.len() {
            match key(&self.pixels[i]).cmp(&key(&other.pixels[j])) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    pub fn iou(&self, other: &Region) -> f64 {
        let inter = self.intersection_count(other);
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Number of pixels of the skeleton, used as a size scale when grouping.
    pub fn skeleton_length(&self) -> usize {
        let (m, _) = self.local_mask(1);
        crate::imgcore::skeletonize(&m).count()
    }
}

/// `I ± gamma·grad`, clamped to `[0, 255]`; plus for the dark pass.
pub fn emser_preprocess(img: &GrayImage, grad: &GrayImage, gamma: f64, polarity: Polarity) -> Result<GrayImage> {
    img.ensure_same_dims(grad.dims())?;
    let sign = match polarity {
        Polarity::DarkOnBright => 1.0,
        Polarity::BrightOnDark => -1.0,
    };
    let data = img
        .data()
        .iter()
        .zip(grad.data())
        .map(|(&i, &g)| (i + sign * gamma * g).clamp(0.0, 255.0))
        .collect();
    GrayImage::from_vec(img.width(), img.height(), data)
}

/// Intermediate images shared by region extraction and the cue stage.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub intensity: GrayImage,
    pub smoothed: GrayImage,
    /// Gradient magnitude of `smoothed`, scaled to `[0, 255]`.
    pub gradient: GrayImage,
}

impl Prepared {
    pub fn new(img: &ColorImage, guided_radius: usize, guided_epsilon: f64) -> Result<Self> {
        let intensity = to_intensity(img);
        let smoothed = if img.width() > guided_radius && img.height() > guided_radius {
            guided_filter(&intensity, guided_radius, guided_epsilon)?
        } else {
            intensity.clone()
        };
        let gradient = gradient_magnitude(&smoothed);
        Ok(Self {
            intensity,
            smoothed,
            gradient,
        })
    }
}

/// Settings for [`extract_candidates`].
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateParams {
    pub mser: MserParams,
    pub guided_radius: usize,
    pub guided_epsilon: f64,
    /// Regions overlapping an earlier kept region of the other polarity
    /// above this IoU are dropped.
    pub dedup_iou: f64,
    /// Same, for two regions of one polarity (nested levels of a stroke).
    pub nested_iou: f64,
}

impl Default for CandidateParams {
    fn default() -> Self {
        Self {
            mser: MserParams::default(),
            guided_radius: 1,
            guided_epsilon: (0.1f64 * 255.0).powi(2),
            dedup_iou: 0.9,
            nested_iou: 0.8,
        }
    }
}

/// Runs both eMSER passes and merges their regions.
pub fn extract_candidates(img: &ColorImage, params: &CandidateParams) -> Result<Vec<Region>> {
    let prepared = Prepared::new(img, params.guided_radius, params.guided_epsilon)?;
    extract_from_prepared(&prepared, params)
}

pub fn extract_from_prepared(prepared: &Prepared, params: &CandidateParams) -> Result<Vec<Region>> {
    params.mser.validate()?;
    let mut all = Vec::new();
    for polarity in Polarity::BOTH {
        let star = emser_preprocess(&prepared.smoothed, &prepared.gradient, params.mser.gamma, polarity)?;
        all.extend(mser_detect(&star, &params.mser, polarity));
    }
    Ok(deduplicate(all, params.dedup_iou, params.nested_iou))
}

/// Sorts by area then centroid and drops any region whose IoU with an
/// already kept one exceeds `cross_iou` (opposite polarity) or `same_iou`
/// (same polarity).
pub fn deduplicate(mut regions: Vec<Region>, cross_iou: f64, same_iou: f64) -> Vec<Region> {
    regions.sort_by(|a, b| {
        a.area()
            .cmp(&b.area())
            .then(a.centroid().0.total_cmp(&b.centroid().0))
            .then(a.centroid().1.total_cmp(&b.centroid().1))
            .then(a.polarity().cmp(&b.polarity()))
    });
    let loosest = cross_iou.min(same_iou);
    let mut kept: Vec<Region> = Vec::with_capacity(regions.len());
    for r in regions {
        // IoU above a bound needs the smaller area within that ratio of the larger
        let dup = kept
            .iter()
            .rev()
            .take_while(|k| k.area() as f64 >= loosest * r.area() as f64)
            .any(|k| {
                let limit = if k.polarity() == r.polarity() { same_iou } else { cross_iou };
                k.iou(&r) > limit
            });
        if !dup {
            kept.push(r);
        }
    }
    kept
}
