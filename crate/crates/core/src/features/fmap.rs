//! FMAP feature files.
//!
//! Little-endian layout: magic `FMAP`, `u32` version (1), `u32` block count,
//! then per block `u32` name length, UTF-8 name, `u32` C, `u32` R1, `u32` R2,
//! `f32` stride and `C * R1 * R2` `f32` values, channel-major then row-major.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fft::Grid;

use super::{fuse, FeatureBlock, FeatureProviderConfig, FeatureStack, Provenance};

pub const FMAP_MAGIC: &[u8; 4] = b"FMAP";
pub const FMAP_VERSION: u32 = 1;

/// File name for 1-based frame number `frame`.
pub fn fmap_file_name(frame: usize) -> String {
    format!("frame_{frame:06}.fmap")
}

pub fn write_fmap(path: &Path, stack: &FeatureStack) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(FMAP_MAGIC);
    buf.extend_from_slice(&FMAP_VERSION.to_le_bytes());
    buf.extend_from_slice(&(stack.blocks().len() as u32).to_le_bytes());
    for block in stack.blocks() {
        let name = block.name().as_bytes();
        let (rows, cols) = block.resolution();
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name);
        for v in [block.channel_count(), rows, cols] {
            buf.extend_from_slice(&(v as u32).to_le_bytes());
        }
        buf.extend_from_slice(&block.stride().to_le_bytes());
        for ch in block.channels() {
            for v in ch.as_slice() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl Reader<'_> {
    fn take(&mut self, n: usize, what: &str) -> Result<&[u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Format {
                path: self.path.to_path_buf(),
                message: format!("truncated while reading {what} at byte {}", self.pos),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn read_fmap(path: &Path) -> Result<FeatureStack> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let format_err = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut rd = Reader {
        bytes: &bytes,
        pos: 0,
        path,
    };
    if rd.take(4, "magic")? != FMAP_MAGIC {
        return Err(format_err("bad magic, expected \"FMAP\"".into()));
    }
    let version = rd.u32("version")?;
    if version != FMAP_VERSION {
        return Err(format_err(format!("unsupported version {version}")));
    }
    let count = rd.u32("block count")? as usize;
    let mut blocks = Vec::with_capacity(count.min(1024));
    for b in 0..count {
        let name_len = rd.u32("name length")? as usize;
        let name = std::str::from_utf8(rd.take(name_len, "block name")?)
            .map_err(|_| format_err(format!("block {b} name is not UTF-8")))?
            .to_string();
        let channels = rd.u32("channel count")? as usize;
        let rows = rd.u32("rows")? as usize;
        let cols = rd.u32("cols")? as usize;
        let stride = rd.f32("stride")?;
        let per_channel = rows
            .checked_mul(cols)
            .filter(|n| n.checked_mul(channels).and_then(|v| v.checked_mul(4)).is_some())
            .ok_or_else(|| format_err(format!("block {name:?} dimensions overflow")))?;
        let raw = rd.take(per_channel * channels * 4, "block values")?;
        let grids = raw
            .chunks_exact(per_channel * 4)
            .map(|chunk| {
                let values = chunk
                    .chunks_exact(4)
                    .map(|v| f32::from_le_bytes(v.try_into().unwrap()))
                    .collect();
                Grid::from_vec(rows, cols, values)
            })
            .collect();
        let block = FeatureBlock::new(name, grids, stride, Provenance::Precomputed).map_err(|e| match e {
            Error::InvalidInput(m) => format_err(m),
            Error::Data(m) => Error::Data(format!("{}: {m}", path.display())),
            other => other,
        })?;
        blocks.push(block);
    }
    if rd.pos != bytes.len() {
        return Err(format_err(format!("{} trailing bytes", bytes.len() - rd.pos)));
    }
    fuse(blocks).map_err(|e| format_err(e.to_string()))
}

/// Loads `frame_%06d.fmap` for 1-based `frame_index` and validates it against
/// the block layout declared in `cfg`.
pub fn load_precomputed(dir: &Path, frame_index: usize, cfg: &FeatureProviderConfig) -> Result<FeatureStack> {
    let path: PathBuf = dir.join(fmap_file_name(frame_index));
    let stack = read_fmap(&path)?;
    if let FeatureProviderConfig::Fmap { blocks: specs, .. } = cfg {
        if !specs.is_empty() {
            if specs.len() != stack.blocks().len() {
                return Err(Error::config(format!(
                    "{}: expected {} blocks, file holds {}",
                    path.display(),
                    specs.len(),
                    stack.blocks().len()
                )));
            }
            for (spec, block) in specs.iter().zip(stack.blocks()) {
                let (rows, cols) = block.resolution();
                let ok = spec.name == block.name()
                    && spec.channels == block.channel_count()
                    && spec.rows.map_or(true, |r| r == rows)
                    && spec.cols.map_or(true, |c| c == cols);
                if !ok {
                    return Err(Error::config(format!(
                        "{}: block {:?} ({}x{}x{}) does not match expected {:?}",
                        path.display(),
                        block.name(),
                        block.channel_count(),
                        rows,
                        cols,
                        spec
                    )));
                }
            }
        }
    }
    Ok(stack)
}
