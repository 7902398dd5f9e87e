use std::fs;
use std::path::{Path, PathBuf};

use corrtrack::{Error, Result};
use serde::Serialize;

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("output");
    let tmp: PathBuf = path.with_file_name(format!(".{name}.tmp"));
    write_file(&tmp, contents)?;
    fs::rename(&tmp, path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub frames: usize,
    pub fps: f64,
    pub per_frame_ms: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub corrtrack: &'static str,
}

/// Run record written next to the results. Output paths are relative to the
/// output directory; `timing` is the only field that varies between
/// identical runs.
#[derive(Debug, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub command: &'static str,
    pub versions: Versions,
    pub config: C,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<String>,
    pub timing: Timing,
}

pub fn versions() -> Versions {
    Versions {
        corrtrack: env!("CARGO_PKG_VERSION"),
    }
}
