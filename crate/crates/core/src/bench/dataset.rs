use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;

/// Sequence attribute tags of the OTB benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Attribute {
    IV,
    OPR,
    SV,
    OCC,
    DEF,
    MB,
    FM,
    IPR,
    OV,
    BC,
    LR,
}

impl Attribute {
    pub const ALL: [Attribute; 11] = [
        Attribute::IV,
        Attribute::OPR,
        Attribute::SV,
        Attribute::OCC,
        Attribute::DEF,
        Attribute::MB,
        Attribute::FM,
        Attribute::IPR,
        Attribute::OV,
        Attribute::BC,
        Attribute::LR,
    ];

    pub fn description(self) -> &'static str {
        match self {
            Attribute::IV => "illumination variation",
            Attribute::OPR => "out-of-plane rotation",
            Attribute::SV => "scale variation",
            Attribute::OCC => "occlusion",
            Attribute::DEF => "deformation",
            Attribute::MB => "motion blur",
            Attribute::FM => "fast motion",
            Attribute::IPR => "in-plane rotation",
            Attribute::OV => "out of view",
            Attribute::BC => "background clutter",
            Attribute::LR => "low resolution",
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Attribute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Attribute::ALL
            .into_iter()
            .find(|a| a.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::data(format!("unknown attribute tag {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub name: String,
    pub frames: Vec<PathBuf>,
    /// 0-based boxes; `None` marks frames without a usable annotation.
    pub ground_truth: Vec<Option<BBox>>,
    pub attributes: Vec<Attribute>,
}

impl Sequence {
    pub fn annotated_frames(&self) -> usize {
        self.ground_truth.iter().flatten().count()
    }
}

pub const GROUND_TRUTH_FILE: &str = "groundtruth_rect.txt";
pub const ATTRIBUTE_FILE: &str = "attrs.txt";

fn frame_key(path: &Path) -> (u64, String) {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    let digits: String = stem.chars().filter(char::is_ascii_digit).collect();
    (digits.parse().unwrap_or(u64::MAX), stem.to_string())
}

/// Parses one annotation line (comma, tab or space separated, 1-based).
/// Lines with NaN or non-positive sizes map to `None`.
pub fn parse_box_line(line: &str, line_no: usize, path: &Path) -> Result<Option<BBox>> {
    let fields: Vec<&str> = line
        .split(|c: char| c == ',' || c == '\t' || c == ' ' || c == ';')
        .filter(|s| !s.is_empty())
        .collect();
    if fields.len() != 4 {
        return Err(Error::data(format!(
            "{}:{line_no}: expected 4 values, found {}",
            path.display(),
            fields.len()
        )));
    }
    let mut v = [0.0f64; 4];
    for (slot, field) in v.iter_mut().zip(&fields) {
        *slot = field.parse().map_err(|_| {
            Error::data(format!(
                "{}:{line_no}: cannot parse {field:?} as a number",
                path.display()
            ))
        })?;
    }
    if v.iter().any(|x| !x.is_finite()) || v[2] <= 0.0 || v[3] <= 0.0 {
        return Ok(None);
    }
    Ok(Some(BBox::from_one_based(v[0], v[1], v[2], v[3])))
}

/// Loads an OTB-style sequence directory.
pub fn load_sequence(dir: &Path) -> Result<Sequence> {
    let name = dir
        .file_name()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::data(format!("cannot name sequence at {}", dir.display())))?
        .to_string();
    let gt_path = dir.join(GROUND_TRUTH_FILE);
    if !gt_path.is_file() {
        return Err(Error::data(format!("missing ground truth file {}", gt_path.display())));
    }
    let img_dir = dir.join("img");
    let entries = fs::read_dir(&img_dir).map_err(|e| Error::io(&img_dir, e))?;
    let mut frames: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "jpg" | "jpeg" | "png" | "bmp"))
        })
        .collect();
    frames.sort_by_key(|p| frame_key(p));
    let text = fs::read_to_string(&gt_path).map_err(|e| Error::io(&gt_path, e))?;
    let ground_truth = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_box_line(l, i + 1, &gt_path))
        .collect::<Result<Vec<_>>>()?;
    if ground_truth.len() != frames.len() {
        return Err(Error::data(format!(
            "{}: {} frames but {} annotations",
            dir.display(),
            frames.len(),
            ground_truth.len()
        )));
    }
    let attr_path = dir.join(ATTRIBUTE_FILE);
    let mut attributes = Vec::new();
    if attr_path.is_file() {
        let text = fs::read_to_string(&attr_path).map_err(|e| Error::io(&attr_path, e))?;
        for tag in text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
        {
            let a: Attribute = tag
                .parse()
                .map_err(|e: Error| Error::data(format!("{}: {}", attr_path.display(), e)))?;
            if !attributes.contains(&a) {
                attributes.push(a);
            }
        }
        attributes.sort();
    }
    Ok(Sequence {
        name,
        frames,
        ground_truth,
        attributes,
    })
}

/// Loads every sequence directory under `root` (those with a ground-truth
/// file), sorted by name.
pub fn load_dataset(root: &Path) -> Result<Vec<Sequence>> {
    let entries = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(GROUND_TRUTH_FILE).is_file())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::data(format!("no sequences found under {}", root.display())));
    }
    dirs.iter().map(|d| load_sequence(d)).collect()
}
