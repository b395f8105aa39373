//! ASCII PLY, OFF and XYZ readers/writers plus a simple dataset manifest.
//!
//! Only vertex positions are consumed; faces and extra vertex properties are
//! skipped. Writers emit 9 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::PointCloud;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Ply,
    Off,
    Xyz,
}

impl CloudFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        ext.parse()
    }

    pub fn extension(self) -> &'static str {
        match self {
            CloudFormat::Ply => "ply",
            CloudFormat::Off => "off",
            CloudFormat::Xyz => "xyz",
        }
    }
}

impl FromStr for CloudFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ply" => Ok(CloudFormat::Ply),
            "off" => Ok(CloudFormat::Off),
            "xyz" | "txt" => Ok(CloudFormat::Xyz),
            other => Err(invalid(format!("unknown cloud format '{other}'"))),
        }
    }
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Numbered, trimmed, non-empty lines (1-based numbering).
struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self { inner: text.lines().enumerate(), last: 0 }
    }

    fn next_content(&mut self, skip_comments: bool) -> Option<(usize, &'a str)> {
        for (i, raw) in self.inner.by_ref() {
            self.last = i + 1;
            let line = raw.trim();
            if line.is_empty() || (skip_comments && line.starts_with('#')) {
                continue;
            }
            return Some((i + 1, line));
        }
        None
    }

    fn expect(&mut self, skip_comments: bool, what: &str) -> Result<(usize, &'a str)> {
        let at = self.last + 1;
        self.next_content(skip_comments)
            .ok_or_else(|| perr(at, format!("unexpected end of file, expected {what}")))
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| perr(line, format!("non-numeric value '{tok}'")))?;
    if !v.is_finite() {
        return Err(perr(line, format!("non-finite value '{tok}'")));
    }
    Ok(v)
}

fn parse_usize(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| perr(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| perr(line, format!("invalid {what} '{tok}'")))
}

pub fn parse_ply(text: &str) -> Result<Vec<[f64; 3]>> {
    let mut lines = Lines::new(text);
    let (l, magic) = lines.expect(false, "'ply'")?;
    if magic != "ply" {
        return Err(perr(l, "missing 'ply' magic"));
    }
    let mut n_vertex = None;
    let mut in_vertex = false;
    let mut vertex_props: Vec<String> = Vec::new();
    // Elements declared before the vertex element must be skipped first.
    let mut rows_before_vertex = 0usize;
    loop {
        let (l, line) = lines.expect(false, "'end_header'")?;
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("format") => {
                if tok.next() != Some("ascii") {
                    return Err(perr(l, "only ASCII PLY is supported"));
                }
            }
            Some("comment") | Some("obj_info") => {}
            Some("element") => {
                let name = tok.next().ok_or_else(|| perr(l, "element without name"))?;
                let count = parse_usize(tok.next(), l, "element count")?;
                in_vertex = name == "vertex";
                if in_vertex {
                    n_vertex = Some(count);
                } else if n_vertex.is_none() {
                    rows_before_vertex += count;
                }
            }
            Some("property") => {
                if in_vertex {
                    let name = line.split_whitespace().last().unwrap_or_default();
                    if line.split_whitespace().nth(1) == Some("list") {
                        return Err(perr(l, "list properties on vertices are not supported"));
                    }
                    vertex_props.push(name.to_string());
                }
            }
            Some("end_header") => break,
            Some(other) => return Err(perr(l, format!("unexpected header keyword '{other}'"))),
            None => {}
        }
    }
    let n = n_vertex.ok_or_else(|| perr(lines.last, "no vertex element in header"))?;
    let col = |name: &str| {
        vertex_props
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| perr(lines.last, format!("vertex property '{name}' missing")))
    };
    let (cx, cy, cz) = (col("x")?, col("y")?, col("z")?);
    for _ in 0..rows_before_vertex {
        lines.expect(false, "element row")?;
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let (l, line) = lines.expect(false, "vertex row")?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < vertex_props.len() {
            return Err(perr(l, format!("expected {} values, got {}", vertex_props.len(), toks.len())));
        }
        out.push([parse_f64(toks[cx], l)?, parse_f64(toks[cy], l)?, parse_f64(toks[cz], l)?]);
    }
    Ok(out)
}

pub fn parse_off(text: &str) -> Result<Vec<[f64; 3]>> {
    let mut lines = Lines::new(text);
    let (l, first) = lines.expect(true, "'OFF'")?;
    let counts_line = if first == "OFF" {
        lines.expect(true, "vertex/face counts")?
    } else if let Some(rest) = first.strip_prefix("OFF") {
        // Some writers put the counts on the magic line.
        (l, rest.trim())
    } else {
        return Err(perr(l, "missing 'OFF' magic"));
    };
    let (l, counts) = counts_line;
    let n = parse_usize(counts.split_whitespace().next(), l, "vertex count")?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let (l, line) = lines.expect(true, "vertex row")?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(perr(l, format!("expected 3 coordinates, got {}", toks.len())));
        }
        out.push([parse_f64(toks[0], l)?, parse_f64(toks[1], l)?, parse_f64(toks[2], l)?]);
    }
    Ok(out)
}

pub fn parse_xyz(text: &str) -> Result<Vec<[f64; 3]>> {
    let mut lines = Lines::new(text);
    let mut out = Vec::new();
    while let Some((l, line)) = lines.next_content(true) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(perr(l, format!("expected 3 coordinates, got {}", toks.len())));
        }
        out.push([parse_f64(toks[0], l)?, parse_f64(toks[1], l)?, parse_f64(toks[2], l)?]);
    }
    if out.is_empty() {
        return Err(perr(lines.last.max(1), "no points"));
    }
    Ok(out)
}

pub fn parse_cloud(text: &str, format: CloudFormat, id: &str) -> Result<PointCloud> {
    let pts = match format {
        CloudFormat::Ply => parse_ply(text)?,
        CloudFormat::Off => parse_off(text)?,
        CloudFormat::Xyz => parse_xyz(text)?,
    };
    PointCloud::from_points(&pts, id)
}

fn fmt9(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn format_cloud(cloud: &PointCloud, format: CloudFormat) -> String {
    let mut s = String::new();
    match format {
        CloudFormat::Ply => {
            let _ = write!(
                s,
                "ply\nformat ascii 1.0\ncomment {}\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nend_header\n",
                if cloud.id.is_empty() { "cloud" } else { &cloud.id },
                cloud.len()
            );
        }
        CloudFormat::Off => {
            let _ = write!(s, "OFF\n{} 0 0\n", cloud.len());
        }
        CloudFormat::Xyz => {}
    }
    for p in cloud.as_flat().chunks_exact(3) {
        let _ = writeln!(s, "{} {} {}", fmt9(p[0]), fmt9(p[1]), fmt9(p[2]));
    }
    s
}

pub fn load_cloud(path: &Path, format: CloudFormat) -> Result<PointCloud> {
    let text = fs::read_to_string(path)?;
    let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("cloud");
    parse_cloud(&text, format, id)
}

pub fn save_cloud(cloud: &PointCloud, path: &Path, format: CloudFormat) -> Result<()> {
    fs::write(path, format_cloud(cloud, format))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub train: Vec<PointCloud>,
    pub test: Vec<PointCloud>,
}

pub const MANIFEST_NAME: &str = "index.txt";

/// Writes every cloud as PLY into `dir` and lists them in `index.txt` as
/// `<filename> <train|test>` lines.
pub fn save_dataset(dir: &Path, data: &Dataset) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut index = String::new();
    let tagged = data.train.iter().map(|c| (c, Split::Train)).chain(data.test.iter().map(|c| (c, Split::Test)));
    for (i, (cloud, split)) in tagged.enumerate() {
        let name = format!("{i:05}_{}.ply", sanitize(&cloud.id));
        save_cloud(cloud, &dir.join(&name), CloudFormat::Ply)?;
        let _ = writeln!(index, "{name} {}", split.as_str());
    }
    fs::write(dir.join(MANIFEST_NAME), index)?;
    Ok(())
}

fn sanitize(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let index_path: PathBuf = dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&index_path)?;
    let mut data = Dataset::default();
    let mut lines = Lines::new(&text);
    while let Some((l, line)) = lines.next_content(true) {
        let mut tok = line.split_whitespace();
        let name = tok.next().ok_or_else(|| perr(l, "missing file name"))?;
        let split = match tok.next() {
            Some("train") => Split::Train,
            Some("test") => Split::Test,
            other => return Err(perr(l, format!("expected split 'train' or 'test', got {other:?}"))),
        };
        let path = dir.join(name);
        let cloud = load_cloud(&path, CloudFormat::from_path(&path)?)?;
        match split {
            Split::Train => data.train.push(cloud),
            Split::Test => data.test.push(cloud),
        }
    }
    Ok(data)
}
