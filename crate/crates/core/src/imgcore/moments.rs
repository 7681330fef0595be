use std::f64::consts::PI;

use super::{PixelMask, Rect};
use crate::error::{Error, Result};

/// Moment-derived shape summary of a pixel set.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RegionGeometry {
    pub area: usize,
    pub centroid: (f64, f64),
    pub bbox: Rect,
    /// Full axis lengths of the ellipse with the same second moments.
    pub major_axis_len: f64,
    pub minor_axis_len: f64,
    /// Major-axis angle in `[0, π)`, image axes.
    pub orientation: f64,
}

impl RegionGeometry {
    /// Sum of the major and minor axis lengths.
    pub fn characteristic_scale(&self) -> f64 {
        self.major_axis_len + self.minor_axis_len
    }

    pub fn from_points(points: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let pts: Vec<(usize, usize)> = points.into_iter().collect();
        if pts.is_empty() {
            return Err(Error::EmptyMask);
        }
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0usize, 0usize);
        for &(x, y) in &pts {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        // Integer raw moments relative to the box corner keep the shape terms
        // identical under translation.
        let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0i128, 0i128, 0i128, 0i128, 0i128);
        for &(x, y) in &pts {
            let dx = (x - x0) as i128;
            let dy = (y - y0) as i128;
            sx += dx;
            sy += dy;
            sxx += dx * dx;
            syy += dy * dy;
            sxy += dx * dy;
        }
        let n = pts.len() as i128;
        let nf = n as f64;
        let n2 = (n * n) as f64;
        let mu20 = (n * sxx - sx * sx) as f64 / n2;
        let mu02 = (n * syy - sy * sy) as f64 / n2;
        let mu11 = (n * sxy - sx * sy) as f64 / n2;

        let half_trace = (mu20 + mu02) / 2.0;
        let disc = (((mu20 - mu02) / 2.0).powi(2) + mu11 * mu11).sqrt();
        let l1 = (half_trace + disc).max(0.0);
        let l2 = (half_trace - disc).max(0.0);
        let mut orientation = if disc == 0.0 {
            0.0
        } else {
            0.5 * (2.0 * mu11).atan2(mu20 - mu02)
        };
        if orientation < 0.0 {
            orientation += PI;
        }
        if orientation >= PI {
            orientation -= PI;
        }

        Ok(Self {
            area: pts.len(),
            centroid: (x0 as f64 + sx as f64 / nf, y0 as f64 + sy as f64 / nf),
            bbox: Rect::from_corners(x0 as i64, y0 as i64, x1 as i64 + 1, y1 as i64 + 1),
            major_axis_len: 4.0 * l1.sqrt(),
            minor_axis_len: 4.0 * l2.sqrt(),
            orientation,
        })
    }
}

/// Area, centroid, bounding box and moment ellipse of a non-empty mask.
pub fn region_geometry(mask: &PixelMask) -> Result<RegionGeometry> {
    RegionGeometry::from_points(mask.iter_set())
}
