use super::{PixelMask, NEIGHBORS_8};

/// 8-connected components of the set pixels, each as a row-major sorted
/// pixel list. Components are ordered by their first pixel in scan order.
pub fn connected_components(mask: &PixelMask) -> Vec<Vec<(usize, usize)>> {
    let (w, h) = mask.dims();
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if seen[start] || !mask.bits()[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut comp = Vec::new();
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            comp.push((x, y));
            for (dx, dy) in NEIGHBORS_8 {
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                if !mask.get_or_false(nx, ny) {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        comp.sort_by_key(|&(x, y)| (y, x));
        out.push(comp);
    }
    out
}
