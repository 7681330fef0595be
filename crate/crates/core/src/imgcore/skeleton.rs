use super::{PixelMask, NEIGHBORS_8};

/// Zhang–Suen iterative thinning.
///
/// Runs both sub-iterations until a full pass deletes nothing, so the output
/// is a fixed point of the procedure and the operation is idempotent.
pub fn skeletonize(mask: &PixelMask) -> PixelMask {
    let (w, h) = mask.dims();
    let mut cur = mask.clone();
    let mut doomed: Vec<(usize, usize)> = Vec::new();
    loop {
        let mut changed = false;
        for step in 0..2 {
            doomed.clear();
            for (x, y) in cur.iter_set() {
                // p2..p9 clockwise from north
                let mut p = [false; 8];
                for (k, (dx, dy)) in NEIGHBORS_8.iter().enumerate() {
                    p[k] = cur.get_or_false(x as isize + dx, y as isize + dy);
                }
                let b = p.iter().filter(|&&v| v).count();
                if !(2..=6).contains(&b) {
                    continue;
                }
                let a = (0..8).filter(|&k| !p[k] && p[(k + 1) % 8]).count();
                if a != 1 {
                    continue;
                }
                let (n, e, s, wst) = (p[0], p[2], p[4], p[6]);
                let ok = if step == 0 {
                    !(n && e && s) && !(e && s && wst)
                } else {
                    !(n && e && wst) && !(n && s && wst)
                };
                if ok {
                    doomed.push((x, y));
                }
            }
            if !doomed.is_empty() {
                changed = true;
                for &(x, y) in &doomed {
                    cur.set(x, y, false);
                }
            }
        }
        if !changed {
            break;
        }
    }
    debug_assert_eq!(cur.dims(), (w, h));
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thin_line_is_unchanged() {
        let m = PixelMask::from_fn(20, 5, |x, y| y == 2 && (2..18).contains(&x));
        assert_eq!(skeletonize(&m), m);
        let diag = PixelMask::from_fn(10, 10, |x, y| x == y);
        assert_eq!(skeletonize(&diag), diag);
    }

    #[test]
    fn odd_square_keeps_center() {
        for w in [3usize, 5, 7, 9] {
            let m = PixelMask::from_fn(w + 4, w + 4, |x, y| {
                (2..2 + w).contains(&x) && (2..2 + w).contains(&y)
            });
            let s = skeletonize(&m);
            let c = 2 + w / 2;
            assert!(s.get(c, c), "w={w}");
        }
    }

    #[test]
    fn empty_stays_empty() {
        let m = PixelMask::new(6, 6);
        assert!(skeletonize(&m).is_empty());
    }

    #[test]
    fn bar_thins_to_its_midline() {
        let m = PixelMask::from_fn(30, 9, |x, y| (3..6).contains(&y) && (2..28).contains(&x));
        let s = skeletonize(&m);
        for x in 5..25 {
            assert!(s.get(x, 4), "x={x}");
            assert!(!s.get(x, 3) && !s.get(x, 5));
        }
    }
}
