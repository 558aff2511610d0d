//! On-disk tensor record: one JSON header line `{"shape":[..],"dtype":"f32"}`
//! followed by the values as little-endian `f32`, row-major.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{DType, Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorHeader {
    pub shape: Vec<usize>,
    pub dtype: DType,
}

impl TensorHeader {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }

    /// Bytes occupied by the whole record, header line included.
    pub fn record_len(&self) -> Result<usize> {
        Ok(serde_json::to_string(self)?.len() + 1 + 4 * self.numel())
    }
}

/// Writes `t` as a tensor record. Values are always stored as `f32`.
pub fn write_tensor<S: Scalar, W: Write>(w: &mut W, t: &Tensor<S>) -> std::io::Result<()> {
    let header = TensorHeader {
        shape: t.shape().to_vec(),
        dtype: DType::F32,
    };
    let line = serde_json::to_string(&header).map_err(std::io::Error::other)?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(4 * t.numel());
    for &v in t.data() {
        buf.extend_from_slice(&v.as_f32().to_le_bytes());
    }
    w.write_all(&buf)
}

/// Reads one tensor record. `source` names the stream in error messages.
pub fn read_tensor<S: Scalar, R: BufRead>(r: &mut R, source: &str) -> Result<Tensor<S>> {
    let mut line = String::new();
    let n = r
        .read_line(&mut line)
        .map_err(|e| Error::io(source, e))?;
    if n == 0 || !line.ends_with('\n') {
        return Err(Error::format(source, "missing tensor header line"));
    }
    let header: TensorHeader = serde_json::from_str(line.trim_end())
        .map_err(|e| Error::format(source, format!("bad tensor header: {e}")))?;
    if header.dtype != DType::F32 {
        return Err(Error::format(
            source,
            format!("unsupported dtype {:?}", header.dtype),
        ));
    }
    let numel = header.numel();
    let mut bytes = vec![0u8; 4 * numel];
    r.read_exact(&mut bytes).map_err(|_| {
        Error::format(
            source,
            format!(
                "truncated tensor blob: shape {:?} needs {} bytes",
                header.shape,
                4 * numel
            ),
        )
    })?;
    let data = bytes
        .chunks_exact(4)
        .map(|c| S::from_f64_lossy(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
        .collect();
    Tensor::new(header.shape, data).map_err(|e| Error::format(source, e.to_string()))
}
