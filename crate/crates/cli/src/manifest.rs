//! Dataset manifests: one image per line, `<image> [mask=<path>] [boxes=<path>]`.
//!
//! Relative paths resolve against the manifest's directory. Blank lines and
//! lines starting with `#` are skipped.

use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub image: PathBuf,
    pub mask: Option<PathBuf>,
    pub boxes: Option<PathBuf>,
}

pub fn parse(text: &str, base: &Path) -> Result<Vec<Entry>, CliError> {
    let resolve = |p: &str| {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| CliError::Data(format!("manifest line {}: {msg}", n + 1));
        let mut fields = line.split_whitespace();
        let image = resolve(fields.next().unwrap_or_default());
        let mut entry = Entry {
            image,
            mask: None,
            boxes: None,
        };
        for f in fields {
            match f.split_once('=') {
                Some(("mask", p)) if entry.mask.is_none() => entry.mask = Some(resolve(p)),
                Some(("boxes", p)) if entry.boxes.is_none() => entry.boxes = Some(resolve(p)),
                _ => return Err(bad(format!("unexpected field `{f}`"))),
            }
        }
        out.push(entry);
    }
    Ok(out)
}

/// Reads a manifest and checks that every file it names exists.
pub fn load(path: &Path) -> Result<Vec<Entry>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let entries = parse(&text, base)?;
    for e in &entries {
        for p in std::iter::once(&e.image).chain(&e.mask).chain(&e.boxes) {
            if !p.is_file() {
                return Err(CliError::Io(format!("{}: no such file", p.display())));
            }
        }
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fields_and_comments() {
        let m = parse("# header\n\na.png mask=m/a.png\n/abs/b.png boxes=b.txt mask=mb.png\nc.ppm\n", Path::new("/d")).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m[0].image, Path::new("/d/a.png"));
        assert_eq!(m[0].mask.as_deref(), Some(Path::new("/d/m/a.png")));
        assert_eq!(m[1].image, Path::new("/abs/b.png"));
        assert_eq!(m[1].boxes.as_deref(), Some(Path::new("/d/b.txt")));
        assert_eq!(m[2].mask, None);
    }

    #[test]
    fn rejects_unknown_and_repeated_fields() {
        assert!(parse("a.png gt=x.png", Path::new("")).is_err());
        assert!(parse("a.png mask=x.png mask=y.png", Path::new("")).is_err());
    }
}
