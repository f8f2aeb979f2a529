use std::fs;
use std::io::Write;
use std::path::PathBuf;

use selfaffine::empirical::GridMeasure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Where machine output goes: files under `--out`, or stdout.
pub struct Target {
    pub dir: Option<PathBuf>,
    pub format: Format,
}

impl Target {
    /// Write one machine artifact. `name` is the file stem; the
    /// extension follows the format. Falls back to stdout when no
    /// output directory was given.
    pub fn emit(&self, name: &str, content: &str) -> Result<(), String> {
        match &self.dir {
            Some(dir) => {
                fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
                let ext = match self.format {
                    Format::Csv => "csv",
                    Format::Json => "json",
                };
                let path = dir.join(format!("{name}.{ext}"));
                fs::write(&path, content).map_err(|e| format!("{}: {e}", path.display()))
            }
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(content.as_bytes())
                    .and_then(|_| if content.ends_with('\n') { Ok(()) } else { out.write_all(b"\n") })
                    .map_err(|e| format!("stdout: {e}"))
            }
        }
    }
}

/// Build a CSV body: comma delimiter, line-feed endings.
pub fn csv(header: &str, rows: &[Vec<String>]) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for row in rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Format a float for machine output; round-trips through f64 parsing.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{}", x)
    } else if x.is_nan() {
        String::new()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Write the grid as an 8-bit grayscale PNG, cell masses log-scaled to
/// 0..=255 over the occupied bounding box. Empty cells stay black.
pub fn render_png(grid: &GridMeasure, path: &PathBuf) -> Result<(), String> {
    let (mut min_x, mut max_x) = (i64::MAX, i64::MIN);
    let (mut min_y, mut max_y) = (i64::MAX, i64::MIN);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (&(x, y), &m) in &grid.cells {
        min_x = min_x.min(x);
        max_x = max_x.max(x);
        min_y = min_y.min(y);
        max_y = max_y.max(y);
        let l = m.ln();
        lo = lo.min(l);
        hi = hi.max(l);
    }
    if grid.cells.is_empty() {
        return Err("nothing to render: no occupied cells".into());
    }
    let w = u32::try_from(max_x - min_x + 1).map_err(|_| "image too wide".to_string())?;
    let h = u32::try_from(max_y - min_y + 1).map_err(|_| "image too tall".to_string())?;
    if w.saturating_mul(h) > 64_000_000 {
        return Err("image exceeds the pixel budget".into());
    }
    let span = hi - lo;
    let mut img = image::GrayImage::new(w, h);
    for (&(x, y), &m) in &grid.cells {
        let v = if span > 0.0 {
            // Keep every occupied cell visible: scale to 1..=255.
            1.0 + 254.0 * (m.ln() - lo) / span
        } else {
            255.0
        };
        let px = (x - min_x) as u32;
        let py = (max_y - y) as u32;
        img.put_pixel(px, py, image::Luma([v.round() as u8]));
    }
    img.save(path).map_err(|e| format!("{}: {e}", path.display()))
}
