//! Synthetic scenes with known ground truth: blocky glyph words on a plain
//! background with distractor shapes, and text-free smooth textures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::imgcore::{ColorImage, PixelMask, Rect};

/// 5x9 glyphs drawn so that every stroke is 4-connected.
pub const FONT: [(char, [&str; 9]); 17] = [
    ('A', ["#####", "#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#", "#...#"]),
    ('C', ["#####", "#....", "#....", "#....", "#....", "#....", "#....", "#....", "#####"]),
    ('E', ["#####", "#....", "#....", "#....", "####.", "#....", "#....", "#....", "#####"]),
    ('F', ["#####", "#....", "#....", "#....", "####.", "#....", "#....", "#....", "#...."]),
    ('G', ["#####", "#....", "#....", "#....", "#.###", "#...#", "#...#", "#...#", "#####"]),
    ('H', ["#...#", "#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#", "#...#"]),
    ('I', ["#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#..", "..#..", "#####"]),
    ('J', ["#####", "...#.", "...#.", "...#.", "...#.", "#..#.", "#..#.", "#..#.", "####."]),
    ('L', ["#....", "#....", "#....", "#....", "#....", "#....", "#....", "#....", "#####"]),
    ('M', ["#####", "#.#.#", "#.#.#", "#.#.#", "#.#.#", "#...#", "#...#", "#...#", "#...#"]),
    ('O', ["#####", "#...#", "#...#", "#...#", "#...#", "#...#", "#...#", "#...#", "#####"]),
    ('P', ["#####", "#...#", "#...#", "#...#", "#####", "#....", "#....", "#....", "#...."]),
    ('S', ["#####", "#....", "#....", "#....", "#####", "....#", "....#", "....#", "#####"]),
    ('T', ["#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."]),
    ('U', ["#...#", "#...#", "#...#", "#...#", "#...#", "#...#", "#...#", "#...#", "#####"]),
    ('W', ["#...#", "#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", "#.#.#", "#####"]),
    ('Y', ["#...#", "#...#", "#...#", "#####", "..#..", "..#..", "..#..", "..#..", "..#.."]),
];

pub fn glyph(c: char) -> Option<&'static [&'static str; 9]> {
    FONT.iter().find(|(k, _)| *k == c).map(|(_, g)| g)
}

/// Layout of [`text_scene`].
#[derive(Clone, Debug, PartialEq)]
pub struct SceneParams {
    pub width: usize,
    pub height: usize,
    /// Pixels per font cell; also the stroke width.
    pub scale: usize,
    /// Words, one per row.
    pub words: usize,
    pub min_letters: usize,
    pub max_letters: usize,
    /// Distractor shapes scattered away from the words.
    pub clutter: usize,
    /// Blank pixels between neighbouring glyphs of a word.
    pub letter_gap: usize,
    pub blur_sigma: f64,
    /// Amplitude of uniform per-sample noise added after blurring.
    pub noise: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            width: 800,
            height: 600,
            scale: 5,
            words: 2,
            min_letters: 3,
            max_letters: 5,
            clutter: 10,
            letter_gap: 5,
            blur_sigma: 1.0,
            noise: 0.0,
        }
    }
}

/// A rendered scene and its ground truth.
#[derive(Clone, Debug)]
pub struct TextScene {
    pub image: ColorImage,
    /// Pixels of each glyph, before blurring.
    pub glyphs: Vec<PixelMask>,
    /// Union of the glyph masks.
    pub text_mask: PixelMask,
    /// Tight box around each word.
    pub words: Vec<Rect>,
    pub text: Vec<String>,
}

fn bright(rng: &mut ChaCha8Rng) -> [u8; 3] {
    [rng.gen_range(185..=245), rng.gen_range(185..=245), rng.gen_range(185..=245)]
}

fn dark(rng: &mut ChaCha8Rng) -> [u8; 3] {
    [rng.gen_range(10..=70), rng.gen_range(10..=70), rng.gen_range(10..=70)]
}

/// Dark words on a bright background with distractors, blurred with a
/// Gaussian of `blur_sigma`.
pub fn text_scene(seed: u64, params: &SceneParams) -> TextScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (params.width, params.height);
    let s = params.scale;
    let (cell, ground_color) = (rng.gen_range(40.0..=80.0), bright(&mut rng).map(f64::from));
    let ground = value_noise(&mut rng, w, h, cell, ground_color, 15.0);
    let mut img = ColorImage::from_vec(w, h, ground.iter().map(|p| p.map(to_level)).collect()).expect("sized by construction");
    let mut text_mask = PixelMask::new(w, h);
    let mut glyphs = Vec::new();
    let mut words = Vec::new();
    let mut text = Vec::new();

    let glyph_h = 9 * s;
    let pitch = 5 * s + params.letter_gap;
    let row_h = h / params.words.max(1);
    for row in 0..params.words {
        let n = rng.gen_range(params.min_letters..=params.max_letters);
        let word_w = n * pitch - params.letter_gap;
        let x0 = rng.gen_range(s * 4..=w.saturating_sub(word_w + s * 4).max(s * 4));
        let slack = row_h.saturating_sub(glyph_h + 2 * s * 3);
        let y0 = row * row_h + s * 3 + rng.gen_range(0..=slack.min(s * 4));
        let color = dark(&mut rng);
        let mut word = String::new();
        for k in 0..n {
            let (c, rows) = FONT[rng.gen_range(0..FONT.len())];
            word.push(c);
            let gx = x0 + k * pitch;
            let mut m = PixelMask::new(w, h);
            for (cy, line) in rows.iter().enumerate() {
                for (cx, b) in line.bytes().enumerate() {
                    if b != b'#' {
                        continue;
                    }
                    for dy in 0..s {
                        for dx in 0..s {
                            let (x, y) = (gx + cx * s + dx, y0 + cy * s + dy);
                            if x < w && y < h {
                                m.set(x, y, true);
                                text_mask.set(x, y, true);
                                img.set(x, y, color);
                            }
                        }
                    }
                }
            }
            glyphs.push(m);
        }
        words.push(Rect::new(x0 as i64, y0 as i64, (word_w.min(w - x0)) as i64, glyph_h as i64));
        text.push(word);
    }

    // distractors keep clear of the words
    let keep_out: Vec<Rect> = words.iter().map(|r| r.dilate_clamped(4 * s as i64, w, h)).collect();
    let mut placed = 0;
    let mut attempts = 0;
    while placed < params.clutter && attempts < 200 {
        attempts += 1;
        let rx = rng.gen_range(8..=40) as f64;
        let ry = rng.gen_range(8..=40) as f64;
        let cx = rng.gen_range(0.0..w as f64);
        let cy = rng.gen_range(0.0..h as f64);
        let bb = Rect::from_corners(
            (cx - rx).floor() as i64,
            (cy - ry).floor() as i64,
            (cx + rx).ceil() as i64 + 1,
            (cy + ry).ceil() as i64 + 1,
        );
        if keep_out.iter().any(|k| k.intersection_area(&bb) > 0) {
            continue;
        }
        let cell = rng.gen_range(6.0..=16.0);
        let patch = value_noise(&mut rng, w, h, cell, [110.0; 3], 70.0);
        let ellipse = rng.gen_bool(0.6);
        for y in bb.y.max(0)..bb.bottom().min(h as i64) {
            for x in bb.x.max(0)..bb.right().min(w as i64) {
                let (dx, dy) = ((x as f64 - cx) / rx, (y as f64 - cy) / ry);
                let inside = if ellipse { dx * dx + dy * dy <= 1.0 } else { dx.abs() <= 1.0 && dy.abs() <= 1.0 };
                if inside {
                    let (x, y) = (x as usize, y as usize);
                    img.set(x, y, patch[y * w + x].map(to_level));
                }
            }
        }
        placed += 1;
    }

    let mut image = gaussian_blur(&img, params.blur_sigma);
    if params.noise > 0.0 {
        let (w, h) = image.dims();
        for y in 0..h {
            for x in 0..w {
                let p = image.get(x, y).map(|v| (v as f64 + rng.gen_range(-params.noise..=params.noise)).round().clamp(0.0, 255.0) as u8);
                image.set(x, y, p);
            }
        }
    }
    TextScene {
        image,
        glyphs,
        text_mask,
        words,
        text,
    }
}

/// Smooth value-noise colour texture without text-like structure.
pub fn texture_scene(seed: u64, width: usize, height: usize) -> ColorImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cell = rng.gen_range(40.0..=80.0);
    let base = [rng.gen_range(60.0..180.0), rng.gen_range(60.0..180.0), rng.gen_range(60.0..180.0)];
    let amp = rng.gen_range(30.0..70.0);
    let px = value_noise(&mut rng, width, height, cell, base, amp);
    ColorImage::from_vec(width, height, px.iter().map(|p| p.map(to_level)).collect()).expect("sized by construction")
}

fn to_level(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Bilinear-smoothstep interpolation of random colours on a `cell`-spaced grid.
fn value_noise(rng: &mut ChaCha8Rng, width: usize, height: usize, cell: f64, base: [f64; 3], amp: f64) -> Vec<[f64; 3]> {
    let gw = (width as f64 / cell).ceil() as usize + 2;
    let gh = (height as f64 / cell).ceil() as usize + 2;
    let grid: Vec<[f64; 3]> = (0..gw * gh)
        .map(|_| {
            let t: f64 = rng.gen_range(-1.0..1.0);
            let tint: [f64; 3] = [rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)];
            [0, 1, 2].map(|c| base[c] + amp * (t + tint[c]))
        })
        .collect();
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    let mut px = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let (fx, fy) = (x as f64 / cell, y as f64 / cell);
            let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
            let (tx, ty) = (smooth(fx.fract()), smooth(fy.fract()));
            let g = |i: usize, j: usize| grid[j * gw + i];
            let (a, b, c, d) = (g(ix, iy), g(ix + 1, iy), g(ix, iy + 1), g(ix + 1, iy + 1));
            px.push([0, 1, 2].map(|k| {
                let top = a[k] + (b[k] - a[k]) * tx;
                let bot = c[k] + (d[k] - c[k]) * tx;
                top + (bot - top) * ty
            }));
        }
    }
    px
}

/// Separable Gaussian blur with replicated borders, radius `ceil(3σ)`.
pub fn gaussian_blur(img: &ColorImage, sigma: f64) -> ColorImage {
    if !(sigma > 0.0) || img.is_empty() {
        return img.clone();
    }
    let r = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let z: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= z);
    let (w, h) = img.dims();
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;

    let mut tmp = vec![[0.0f64; 3]; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0; 3];
            for (i, kv) in k.iter().enumerate() {
                let p = img.get(clamp(x as isize + i as isize - r, w), y);
                for c in 0..3 {
                    acc[c] += kv * p[c] as f64;
                }
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0; 3];
            for (i, kv) in k.iter().enumerate() {
                let p = tmp[clamp(y as isize + i as isize - r, h) * w + x];
                for c in 0..3 {
                    acc[c] += kv * p[c];
                }
            }
            out.push(acc.map(|v| v.round().clamp(0.0, 255.0) as u8));
        }
    }
    ColorImage::from_vec(w, h, out).expect("sized by construction")
}
