use super::GrayImage;
use crate::error::{Error, Result};

/// Self-guided filter (He et al.) with a square window of the given radius.
///
/// Window statistics use only the in-image part of each window, so borders
/// are averaged over fewer samples rather than padded.
pub fn guided_filter(img: &GrayImage, radius: usize, epsilon: f64) -> Result<GrayImage> {
    if radius == 0 {
        return Err(Error::InvalidParameter("guided filter radius must be >= 1".into()));
    }
    let (w, h) = img.dims();
    if radius >= w || radius >= h {
        return Err(Error::InvalidParameter(format!(
            "guided filter radius {radius} does not fit a {w}x{h} image"
        )));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParameter("guided filter epsilon must be >= 0".into()));
    }

    let mean_i = box_mean(img.data(), w, h, radius);
    let sq: Vec<f64> = img.data().iter().map(|v| v * v).collect();
    let mean_ii = box_mean(&sq, w, h, radius);

    let mut a = vec![0.0; w * h];
    let mut b = vec![0.0; w * h];
    for k in 0..w * h {
        let var = (mean_ii[k] - mean_i[k] * mean_i[k]).max(0.0);
        a[k] = var / (var + epsilon);
        b[k] = mean_i[k] - a[k] * mean_i[k];
    }
    let mean_a = box_mean(&a, w, h, radius);
    let mean_b = box_mean(&b, w, h, radius);

    let data = img
        .data()
        .iter()
        .enumerate()
        .map(|(k, &v)| mean_a[k] * v + mean_b[k])
        .collect();
    GrayImage::from_vec(w, h, data)
}

/// Mean over the clipped `(2r+1)²` window via a summed-area table.
fn box_mean(src: &[f64], w: usize, h: usize, r: usize) -> Vec<f64> {
    let stride = w + 1;
    let mut sat = vec![0.0; stride * (h + 1)];
    for y in 0..h {
        let mut row = 0.0;
        for x in 0..w {
            row += src[y * w + x];
            sat[(y + 1) * stride + x + 1] = sat[y * stride + x + 1] + row;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let y0 = y.saturating_sub(r);
        let y1 = (y + r + 1).min(h);
        for x in 0..w {
            let x0 = x.saturating_sub(r);
            let x1 = (x + r + 1).min(w);
            let s = sat[y1 * stride + x1] - sat[y0 * stride + x1] - sat[y1 * stride + x0]
                + sat[y0 * stride + x0];
            out[y * w + x] = s / ((y1 - y0) * (x1 - x0)) as f64;
        }
    }
    out
}
