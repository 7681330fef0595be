use super::{GrayImage, PixelMask};

/// Exact Euclidean distance from every member pixel to the nearest
/// non-member, treating everything outside the image as non-member.
/// Non-members map to 0.
///
/// Two separable passes of the lower-envelope-of-parabolas transform
/// (Felzenszwalb & Huttenlocher) over squared integer distances.
pub fn distance_transform(mask: &PixelMask) -> GrayImage {
    let (w, h) = mask.dims();
    if w == 0 || h == 0 {
        return GrayImage::new(w, h);
    }
    // One ring of padding supplies the out-of-image non-members.
    let (pw, ph) = (w + 2, h + 2);
    let inf = ((pw * pw + ph * ph) as i64) * 4;
    let mut grid = vec![0i64; pw * ph];
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                grid[(y + 1) * pw + x + 1] = inf;
            }
        }
    }

    let mut f = vec![0i64; pw.max(ph)];
    let mut d = vec![0i64; pw.max(ph)];
    let mut v = vec![0usize; pw.max(ph)];
    let mut z = vec![0f64; pw.max(ph) + 1];

    for x in 0..pw {
        for y in 0..ph {
            f[y] = grid[y * pw + x];
        }
        envelope_1d(&f[..ph], &mut d[..ph], &mut v, &mut z);
        for y in 0..ph {
            grid[y * pw + x] = d[y];
        }
    }
    for y in 0..ph {
        f[..pw].copy_from_slice(&grid[y * pw..(y + 1) * pw]);
        envelope_1d(&f[..pw], &mut d[..pw], &mut v, &mut z);
        grid[y * pw..(y + 1) * pw].copy_from_slice(&d[..pw]);
    }

    GrayImage::from_fn(w, h, |x, y| (grid[(y + 1) * pw + x + 1] as f64).sqrt())
}

/// 1-D squared distance transform of the sampled function `f`.
fn envelope_1d(f: &[i64], out: &mut [i64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let inter = |q: usize, p: usize| -> f64 {
        let (q, p) = (q as i64, p as i64);
        ((f[q as usize] + q * q) - (f[p as usize] + p * p)) as f64 / (2 * (q - p)) as f64
    };
    for q in 1..n {
        let mut s = inter(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = inter(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate().take(n) {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let dq = q as i64 - v[k] as i64;
        *o = dq * dq + f[v[k]];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isolated_pixel_has_distance_one() {
        let mut m = PixelMask::new(5, 5);
        m.set(2, 2, true);
        let d = distance_transform(&m);
        assert_eq!(d.get(2, 2), 1.0);
        assert_eq!(d.get(0, 0), 0.0);
    }

    #[test]
    fn strip_center_is_two() {
        let m = PixelMask::from_fn(9, 40, |x, _| (3..6).contains(&x));
        let d = distance_transform(&m);
        for y in 3..37 {
            assert_eq!(d.get(4, y), 2.0);
            assert_eq!(d.get(3, y), 1.0);
            assert_eq!(d.get(5, y), 1.0);
        }
    }

    #[test]
    fn full_mask_uses_image_border() {
        let m = PixelMask::from_fn(5, 5, |_, _| true);
        let d = distance_transform(&m);
        assert_eq!(d.get(2, 2), 3.0);
        assert_eq!(d.get(0, 0), 1.0);
    }
}
