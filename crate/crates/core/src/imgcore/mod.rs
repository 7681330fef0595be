//! Raster primitives shared by every later stage.

mod components;
mod distance;
mod edges;
mod guided;
mod moments;
mod raster;
mod skeleton;

pub use components::connected_components;
pub use distance::distance_transform;
pub use edges::{auto_canny, canny_edges, gradient_magnitude, otsu_threshold, sobel, CannyEdges};
pub use guided::guided_filter;
pub use moments::{region_geometry, RegionGeometry};
pub use raster::{ColorImage, GrayImage, PixelMask, Rect};
pub use skeleton::skeletonize;

/// BT.601 luma weights for red, green and blue.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Converts RGB to intensity with the BT.601 weights.
pub fn to_intensity(img: &ColorImage) -> GrayImage {
    let [wr, wg, wb] = LUMA_WEIGHTS;
    let data = img
        .pixels()
        .iter()
        .map(|&[r, g, b]| wr * r as f64 + wg * g as f64 + wb * b as f64)
        .collect();
    GrayImage::from_vec(img.width(), img.height(), data).expect("same pixel count")
}

/// 8-connected neighbour offsets, clockwise from north.
pub(crate) const NEIGHBORS_8: [(isize, isize); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_pixel_keeps_value() {
        let img = ColorImage::filled(3, 2, [77, 77, 77]);
        let out = to_intensity(&img);
        for &v in out.data() {
            assert!((v - 77.0).abs() < 1e-9);
        }
    }

    #[test]
    fn black_is_zero() {
        let out = to_intensity(&ColorImage::filled(4, 4, [0, 0, 0]));
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pure_red_uses_red_weight() {
        let out = to_intensity(&ColorImage::filled(2, 2, [255, 0, 0]));
        // 0.299 * 255
        assert!(out.data().iter().all(|&v| (v - 76.245).abs() < 1e-9));
    }
}
