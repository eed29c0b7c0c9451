//! Versioned binary container for trained source models.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic        4 bytes  "BNMF"
//! version      u32      currently 1
//! label_len    u32
//! label        label_len bytes, UTF-8
//! sample_rate  u32
//! frame_len    u32
//! target_max   f64
//! act_shape    f64      learned activation shape
//! bins         u32      K
//! num_basis    u32      I
//! shape        K·I f64  basis posterior shapes, row-major
//! scale        K·I f64  basis posterior scales, row-major
//! ```
//!
//! Round trips are bit-exact.

use std::fs;
use std::path::Path;

use bnmf_core::bnmf::{BnmfModel, GammaMatrix};
use bnmf_core::mat::Mat;

use crate::CliError;

pub const MAGIC: &[u8; 4] = b"BNMF";
pub const FORMAT_VERSION: u32 = 1;

pub fn write_model(path: &Path, model: &BnmfModel) -> Result<(), CliError> {
    let k = model.bins();
    let i = model.num_basis();
    let mut buf = Vec::with_capacity(40 + model.label.len() + 16 * k * i);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(model.label.len() as u32).to_le_bytes());
    buf.extend_from_slice(model.label.as_bytes());
    buf.extend_from_slice(&model.sample_rate.to_le_bytes());
    buf.extend_from_slice(&(model.frame_len as u32).to_le_bytes());
    buf.extend_from_slice(&model.target_max.to_le_bytes());
    buf.extend_from_slice(&model.activation_shape.to_le_bytes());
    buf.extend_from_slice(&(k as u32).to_le_bytes());
    buf.extend_from_slice(&(i as u32).to_le_bytes());
    for &v in model.basis_posterior.shape.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for &v in model.basis_posterior.scale.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CliError> {
        if self.pos + n > self.data.len() {
            return Err(CliError::Format(format!(
                "{}: truncated model file",
                self.path.display()
            )));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CliError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, CliError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn read_model(path: &Path) -> Result<BnmfModel, CliError> {
    let data = fs::read(path).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    let mut cur = Cursor {
        data: &data,
        pos: 0,
        path,
    };
    if cur.take(4)? != MAGIC {
        return Err(CliError::Format(format!(
            "{}: not a model file (bad magic)",
            path.display()
        )));
    }
    let version = cur.u32()?;
    if version != FORMAT_VERSION {
        return Err(CliError::Format(format!(
            "{}: unsupported model format version {version}",
            path.display()
        )));
    }
    let label_len = cur.u32()? as usize;
    let label = String::from_utf8(cur.take(label_len)?.to_vec())
        .map_err(|_| CliError::Format(format!("{}: label is not UTF-8", path.display())))?;
    let sample_rate = cur.u32()?;
    let frame_len = cur.u32()? as usize;
    let target_max = cur.f64()?;
    let activation_shape = cur.f64()?;
    let k = cur.u32()? as usize;
    let i = cur.u32()? as usize;
    if k == 0 || i == 0 || k.saturating_mul(i) > 100_000_000 {
        return Err(CliError::Format(format!(
            "{}: implausible dimensions {k}×{i}",
            path.display()
        )));
    }
    let mut read_mat = |rows: usize, cols: usize| -> Result<Mat, CliError> {
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            values.push(cur.f64()?);
        }
        Ok(Mat::from_vec(rows, cols, values))
    };
    let shape = read_mat(k, i)?;
    let scale = read_mat(k, i)?;
    if cur.pos != data.len() {
        return Err(CliError::Format(format!(
            "{}: trailing bytes after model payload",
            path.display()
        )));
    }
    if shape
        .as_slice()
        .iter()
        .any(|&v| !(v > 0.0) || !v.is_finite())
        || scale
            .as_slice()
            .iter()
            .any(|&v| !(v > 0.0) || !v.is_finite())
    {
        return Err(CliError::Format(format!(
            "{}: non-positive gamma parameters",
            path.display()
        )));
    }
    Ok(BnmfModel {
        label,
        basis_posterior: GammaMatrix::new(shape, scale),
        activation_shape,
        sample_rate,
        frame_len,
        target_max,
    })
}
