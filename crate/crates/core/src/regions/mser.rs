//! Maximally stable extremal regions over a union-find component tree.

use std::collections::HashMap;

use super::{MserParams, Polarity, Region};
use crate::imgcore::{GrayImage, NEIGHBORS_8};

const NONE: usize = usize::MAX;

#[derive(Clone, Debug)]
struct Node {
    level: u8,
    area: usize,
    parent: usize,
    /// Largest child, the continuation of this branch below `level`.
    main_child: usize,
}

/// Component tree of the lower level sets `{v <= t}`, 8-connected.
struct ComponentTree {
    nodes: Vec<Node>,
    /// Node created at the level each pixel entered the tree.
    pixel_node: Vec<usize>,
}

impl ComponentTree {
    fn build(levels: &[u8], width: usize, height: usize) -> Self {
        let n = levels.len();
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); 256];
        for (i, &v) in levels.iter().enumerate() {
            buckets[v as usize].push(i);
        }

        let mut uf_parent = vec![NONE; n];
        let mut uf_size = vec![0usize; n];
        let mut root_node = vec![NONE; n];
        let mut pixel_node = vec![NONE; n];
        let mut stamp = vec![u16::MAX; n];
        let mut nodes: Vec<Node> = Vec::new();
        let mut pending: HashMap<usize, Vec<usize>> = HashMap::new();

        fn find(p: &mut [usize], mut x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            while p[x] != r {
                let next = p[x];
                p[x] = r;
                x = next;
            }
            r
        }

        for (level, bucket) in buckets.iter().enumerate() {
            if bucket.is_empty() {
                continue;
            }
            for &p in bucket {
                uf_parent[p] = p;
                uf_size[p] = 1;
                let (x, y) = ((p % width) as isize, (p / width) as isize);
                for (dx, dy) in NEIGHBORS_8 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx as usize >= width || ny as usize >= height {
                        continue;
                    }
                    let q = ny as usize * width + nx as usize;
                    if uf_parent[q] == NONE {
                        continue;
                    }
                    let ra = find(&mut uf_parent, p);
                    let rb = find(&mut uf_parent, q);
                    if ra == rb {
                        continue;
                    }
                    for r in [ra, rb] {
                        if root_node[r] != NONE {
                            pending.entry(r).or_default().push(root_node[r]);
                            root_node[r] = NONE;
                        }
                    }
                    let (big, small) = if uf_size[ra] >= uf_size[rb] { (ra, rb) } else { (rb, ra) };
                    uf_parent[small] = big;
                    uf_size[big] += uf_size[small];
                    if let Some(mut moved) = pending.remove(&small) {
                        pending.entry(big).or_default().append(&mut moved);
                    }
                }
            }
            for &p in bucket {
                let r = find(&mut uf_parent, p);
                if stamp[r] != level as u16 {
                    stamp[r] = level as u16;
                    let children = pending.remove(&r).unwrap_or_default();
                    let id = nodes.len();
                    let mut main_child = NONE;
                    for &c in &children {
                        nodes[c].parent = id;
                        if main_child == NONE || nodes[c].area > nodes[main_child].area {
                            main_child = c;
                        }
                    }
                    nodes.push(Node {
                        level: level as u8,
                        area: uf_size[r],
                        parent: NONE,
                        main_child,
                    });
                    root_node[r] = id;
                }
                pixel_node[p] = root_node[r];
            }
        }
        Self { nodes, pixel_node }
    }

    /// Area of the region on `node`'s branch at threshold `t`; 0 when the
    /// branch does not exist yet.
    fn area_at(&self, node: usize, t: i32) -> usize {
        let mut n = node;
        if t >= self.nodes[n].level as i32 {
            loop {
                let p = self.nodes[n].parent;
                if p == NONE || self.nodes[p].level as i32 > t {
                    return self.nodes[n].area;
                }
                n = p;
            }
        }
        loop {
            let c = self.nodes[n].main_child;
            if c == NONE {
                return 0;
            }
            n = c;
            if self.nodes[n].level as i32 <= t {
                return self.nodes[n].area;
            }
        }
    }

    /// Region on `node`'s branch at threshold `t`, if any.
    fn node_at(&self, node: usize, t: i32) -> Option<usize> {
        let mut n = node;
        if t >= self.nodes[n].level as i32 {
            loop {
                let p = self.nodes[n].parent;
                if p == NONE || self.nodes[p].level as i32 > t {
                    return Some(n);
                }
                n = p;
            }
        }
        loop {
            let c = self.nodes[n].main_child;
            if c == NONE {
                return None;
            }
            n = c;
            if self.nodes[n].level as i32 <= t {
                return Some(n);
            }
        }
    }

    /// `|R(t+Δ) \ R(t−Δ)| / |R(t)|` for the region `node` observed at `t`.
    fn variation(&self, node: usize, t: i32, delta: i32) -> f64 {
        let upper = self.area_at(node, (t + delta).min(255));
        let lower = if t - delta < 0 { 0 } else { self.area_at(node, t - delta) };
        (upper - lower) as f64 / self.nodes[node].area as f64
    }

    fn lifetime_end(&self, node: usize) -> i32 {
        match self.nodes[node].parent {
            NONE => 255,
            p => self.nodes[p].level as i32 - 1,
        }
    }
}

/// Detects maximally stable extremal regions.
///
/// `DarkOnBright` finds regions of the lower level sets; `BrightOnDark` runs
/// the same search on the inverted image. A region is kept when, at some
/// threshold in its lifetime, its variation is a (non-strict) local minimum
/// along its branch and does not exceed `max_variation`. Regions covering the
/// whole image are never returned.
pub fn mser_detect(img: &GrayImage, params: &MserParams, polarity: Polarity) -> Vec<Region> {
    let (w, h) = img.dims();
    let total = w * h;
    if total == 0 {
        return Vec::new();
    }
    let mut levels = img.to_levels();
    if polarity == Polarity::BrightOnDark {
        levels.iter_mut().for_each(|v| *v = 255 - *v);
    }
    let tree = ComponentTree::build(&levels, w, h);
    let delta = params.delta as i32;
    let max_area = (params.max_area * total as f64).floor() as usize;

    let mut selected: Vec<(usize, u8)> = Vec::new();
    for (id, node) in tree.nodes.iter().enumerate() {
        if node.area < params.min_area || node.area > max_area || node.area >= total {
            continue;
        }
        let start = node.level as i32;
        let end = tree.lifetime_end(id);
        let mut best: Option<(f64, i32)> = None;
        for t in start..=end {
            let q = tree.variation(id, t, delta);
            if q > params.max_variation {
                continue;
            }
            let below = if t == 0 {
                f64::INFINITY
            } else {
                tree.node_at(id, t - 1)
                    .map_or(f64::INFINITY, |n| tree.variation(n, t - 1, delta))
            };
            let above = if t >= 255 {
                f64::INFINITY
            } else {
                tree.node_at(id, t + 1)
                    .map_or(f64::INFINITY, |n| tree.variation(n, t + 1, delta))
            };
            if q <= below && q <= above && best.map_or(true, |(bq, _)| q < bq) {
                best = Some((q, t));
            }
        }
        if let Some((_, t)) = best {
            selected.push((id, t as u8));
        }
    }
    if selected.is_empty() {
        return Vec::new();
    }

    // Pixel lists per node, then accumulate each selected subtree.
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); tree.nodes.len()];
    for (id, node) in tree.nodes.iter().enumerate() {
        if node.parent != NONE {
            children[node.parent].push(id);
        }
    }
    let mut own: Vec<Vec<usize>> = vec![Vec::new(); tree.nodes.len()];
    for (p, &n) in tree.pixel_node.iter().enumerate() {
        own[n].push(p);
    }

    let mut out = Vec::with_capacity(selected.len());
    let mut stack = Vec::new();
    for (id, t) in selected {
        let mut pix: Vec<usize> = Vec::with_capacity(tree.nodes[id].area);
        stack.push(id);
        while let Some(n) = stack.pop() {
            pix.extend_from_slice(&own[n]);
            stack.extend_from_slice(&children[n]);
        }
        pix.sort_unstable();
        let points = pix.into_iter().map(|p| (p % w, p / w)).collect();
        out.push(Region::new(points, polarity, t).expect("selected regions are non-empty"));
    }
    out
}
