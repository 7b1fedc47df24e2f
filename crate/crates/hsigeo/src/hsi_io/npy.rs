//! NPY v1.0 array container, bit-exact.
//!
//! The on-disk layout is the magic `\x93NUMPY`, version bytes `\x01\x00`, a
//! little-endian `u16` header length, an ASCII header dict with the keys
//! `descr`, `fortran_order` and `shape` (space-padded so the data section
//! starts on a 64-byte boundary, newline-terminated), followed by raw
//! little-endian scalars. Version 2.0+ files are rejected. Fortran-order
//! files are transposed to C order on load; this writer always emits C order.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: [u8; 6] = [0x93, b'N', b'U', b'M', b'P', b'Y'];

/// Scalar types the container supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
    U8,
    U16,
    I32,
}

impl Dtype {
    /// NumPy dtype descriptor string.
    pub fn descr(self) -> &'static str {
        match self {
            Dtype::F32 => "<f4",
            Dtype::F64 => "<f8",
            Dtype::U8 => "|u1",
            Dtype::U16 => "<u2",
            Dtype::I32 => "<i4",
        }
    }

    pub fn from_descr(descr: &str) -> Option<Dtype> {
        match descr {
            "<f4" => Some(Dtype::F32),
            "<f8" => Some(Dtype::F64),
            "|u1" => Some(Dtype::U8),
            "<u2" => Some(Dtype::U16),
            "<i4" => Some(Dtype::I32),
            _ => None,
        }
    }

    pub fn item_size(self) -> usize {
        match self {
            Dtype::U8 => 1,
            Dtype::U16 => 2,
            Dtype::F32 | Dtype::I32 => 4,
            Dtype::F64 => 8,
        }
    }
}

/// Typed scalar buffer backing a [`Tensor`].
#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
    U8(Vec<u8>),
    U16(Vec<u16>),
    I32(Vec<i32>),
}

impl TensorData {
    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
            TensorData::U8(v) => v.len(),
            TensorData::U16(v) => v.len(),
            TensorData::I32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> Dtype {
        match self {
            TensorData::F32(_) => Dtype::F32,
            TensorData::F64(_) => Dtype::F64,
            TensorData::U8(_) => Dtype::U8,
            TensorData::U16(_) => Dtype::U16,
            TensorData::I32(_) => Dtype::I32,
        }
    }
}

/// Dense array: shape plus a row-major (C-order) scalar buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: TensorData,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: TensorData) -> Result<Tensor> {
        let count: usize = shape.iter().product();
        if count != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "shape {:?} holds {} elements but buffer has {}",
                shape,
                count,
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn from_f64(shape: Vec<usize>, values: Vec<f64>) -> Result<Tensor> {
        Tensor::new(shape, TensorData::F64(values))
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dtype(&self) -> Dtype {
        self.data.dtype()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    /// Bit-level equality: shapes, dtypes, and every scalar's bit pattern.
    /// Unlike `==` this distinguishes `-0.0` from `0.0` and treats equal
    /// NaN payloads as equal.
    pub fn bit_eq(&self, other: &Tensor) -> bool {
        if self.shape != other.shape {
            return false;
        }
        match (&self.data, &other.data) {
            (TensorData::F32(a), TensorData::F32(b)) => {
                a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (TensorData::F64(a), TensorData::F64(b)) => {
                a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (TensorData::U8(a), TensorData::U8(b)) => a == b,
            (TensorData::U16(a), TensorData::U16(b)) => a == b,
            (TensorData::I32(a), TensorData::I32(b)) => a == b,
            _ => false,
        }
    }

    /// All scalars widened to `f64`, in C order.
    pub fn to_f64_vec(&self) -> Vec<f64> {
        match &self.data {
            TensorData::F32(v) => v.iter().map(|&x| x as f64).collect(),
            TensorData::F64(v) => v.clone(),
            TensorData::U8(v) => v.iter().map(|&x| x as f64).collect(),
            TensorData::U16(v) => v.iter().map(|&x| x as f64).collect(),
            TensorData::I32(v) => v.iter().map(|&x| x as f64).collect(),
        }
    }

    /// Scalars as integers; float buffers must hold exact integral values.
    pub fn to_i64_vec(&self) -> Result<Vec<i64>> {
        let as_int = |x: f64| -> Result<i64> {
            if x.fract() == 0.0 && x.abs() < 9.0e15 {
                Ok(x as i64)
            } else {
                Err(Error::Format(format!("non-integer label value {x}")))
            }
        };
        match &self.data {
            TensorData::F32(v) => v.iter().map(|&x| as_int(x as f64)).collect(),
            TensorData::F64(v) => v.iter().map(|&x| as_int(x)).collect(),
            TensorData::U8(v) => Ok(v.iter().map(|&x| x as i64).collect()),
            TensorData::U16(v) => Ok(v.iter().map(|&x| x as i64).collect()),
            TensorData::I32(v) => Ok(v.iter().map(|&x| x as i64).collect()),
        }
    }

    pub fn to_array2_f64(&self) -> Result<ndarray::Array2<f64>> {
        if self.shape.len() != 2 {
            return Err(Error::ShapeMismatch(format!(
                "expected a 2-d array, got shape {:?}",
                self.shape
            )));
        }
        ndarray::Array2::from_shape_vec((self.shape[0], self.shape[1]), self.to_f64_vec())
            .map_err(|e| Error::ShapeMismatch(e.to_string()))
    }

    pub fn to_array3_f64(&self) -> Result<ndarray::Array3<f64>> {
        if self.shape.len() != 3 {
            return Err(Error::ShapeMismatch(format!(
                "expected a 3-d array, got shape {:?}",
                self.shape
            )));
        }
        ndarray::Array3::from_shape_vec(
            (self.shape[0], self.shape[1], self.shape[2]),
            self.to_f64_vec(),
        )
        .map_err(|e| Error::ShapeMismatch(e.to_string()))
    }
}

fn shape_repr(shape: &[usize]) -> String {
    match shape.len() {
        0 => "()".to_string(),
        1 => format!("({},)", shape[0]),
        _ => {
            let parts: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
            format!("({})", parts.join(", "))
        }
    }
}

/// Header dict text exactly as NumPy's writer produces it (sorted keys,
/// trailing comma before the closing brace).
fn header_dict(dtype: Dtype, shape: &[usize]) -> String {
    format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': {}, }}",
        dtype.descr(),
        shape_repr(shape)
    )
}

/// Serialize a tensor into NPY v1.0 bytes.
pub fn encode_array(t: &Tensor) -> Result<Vec<u8>> {
    let dict = header_dict(t.dtype(), t.shape());
    // magic(6) + version(2) + hlen(2) + dict + padding + '\n' must be a
    // multiple of 64.
    let unpadded = MAGIC.len() + 2 + 2 + dict.len() + 1;
    let pad = (64 - unpadded % 64) % 64;
    let header_len = dict.len() + pad + 1;
    if header_len > u16::MAX as usize {
        return Err(Error::Format("header exceeds the v1.0 64 KiB limit".into()));
    }

    let mut out = Vec::with_capacity(unpadded + pad + t.len() * t.dtype().item_size());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&[0x01, 0x00]);
    out.extend_from_slice(&(header_len as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out.resize(out.len() + pad, b' ');
    out.push(b'\n');
    debug_assert_eq!(out.len() % 64, 0);

    match t.data() {
        TensorData::F32(v) => {
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        TensorData::F64(v) => {
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        TensorData::U8(v) => out.extend_from_slice(v),
        TensorData::U16(v) => {
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        TensorData::I32(v) => {
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    Ok(out)
}

/// Write `t` to `path` as an NPY v1.0 file.
pub fn save_array(t: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_array(t)?;
    let mut f = File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

/// Parse NPY v1.0 bytes into a tensor (transposing Fortran-order payloads).
pub fn decode_array(bytes: &[u8]) -> Result<Tensor> {
    if bytes.len() < 10 {
        return Err(Error::Format("file shorter than the NPY preamble".into()));
    }
    if bytes[..6] != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let (major, minor) = (bytes[6], bytes[7]);
    if (major, minor) != (1, 0) {
        return Err(Error::Format(format!(
            "unsupported NPY version {major}.{minor}; only 1.0 is accepted"
        )));
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    if bytes.len() < 10 + header_len {
        return Err(Error::Format("header extends past end of file".into()));
    }
    let header = std::str::from_utf8(&bytes[10..10 + header_len])
        .map_err(|_| Error::Format("header is not ASCII".into()))?;

    let descr = parse_str_value(header, "descr")?;
    let dtype =
        Dtype::from_descr(&descr).ok_or_else(|| Error::UnsupportedDtype(descr.clone()))?;
    let fortran = parse_bool_value(header, "fortran_order")?;
    let shape = parse_shape_value(header)?;

    let count: usize = shape.iter().product();
    let expected = count * dtype.item_size();
    let payload = &bytes[10 + header_len..];
    if payload.len() != expected {
        return Err(Error::Truncated {
            expected,
            found: payload.len(),
        });
    }

    let data = match dtype {
        Dtype::F32 => TensorData::F32(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
        Dtype::F64 => TensorData::F64(
            payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
        Dtype::U8 => TensorData::U8(payload.to_vec()),
        Dtype::U16 => TensorData::U16(
            payload
                .chunks_exact(2)
                .map(|c| u16::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
        Dtype::I32 => TensorData::I32(
            payload
                .chunks_exact(4)
                .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
    };

    let t = Tensor::new(shape, data)?;
    Ok(if fortran { transpose_to_c(&t) } else { t })
}

/// Load an NPY v1.0 file from disk.
pub fn load_array(path: impl AsRef<Path>) -> Result<Tensor> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode_array(&bytes)
}

/// Reorder a buffer read in Fortran (column-major) order into C order.
fn transpose_to_c(t: &Tensor) -> Tensor {
    let shape = t.shape().to_vec();
    let nd = shape.len();
    if nd <= 1 || t.is_empty() {
        return t.clone();
    }
    // C strides of the output.
    let mut c_strides = vec![1usize; nd];
    for d in (0..nd - 1).rev() {
        c_strides[d] = c_strides[d + 1] * shape[d + 1];
    }

    fn permute<T: Copy + Default>(
        src: &[T],
        shape: &[usize],
        c_strides: &[usize],
    ) -> Vec<T> {
        let nd = shape.len();
        let mut out = vec![T::default(); src.len()];
        let mut idx = vec![0usize; nd];
        for &value in src {
            // `idx` walks the array in Fortran order (first axis fastest).
            let c_off: usize = idx.iter().zip(c_strides).map(|(i, s)| i * s).sum();
            out[c_off] = value;
            for d in 0..nd {
                idx[d] += 1;
                if idx[d] < shape[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        out
    }

    let data = match t.data() {
        TensorData::F32(v) => TensorData::F32(permute(v, &shape, &c_strides)),
        TensorData::F64(v) => TensorData::F64(permute(v, &shape, &c_strides)),
        TensorData::U8(v) => TensorData::U8(permute(v, &shape, &c_strides)),
        TensorData::U16(v) => TensorData::U16(permute(v, &shape, &c_strides)),
        TensorData::I32(v) => TensorData::I32(permute(v, &shape, &c_strides)),
    };
    Tensor { shape, data }
}

fn find_key<'a>(header: &'a str, key: &str) -> Result<&'a str> {
    let needle = format!("'{key}'");
    let at = header
        .find(&needle)
        .ok_or_else(|| Error::Format(format!("header missing key {key:?}")))?;
    let rest = &header[at + needle.len()..];
    let rest = rest.trim_start();
    let rest = rest
        .strip_prefix(':')
        .ok_or_else(|| Error::Format(format!("malformed value for key {key:?}")))?;
    Ok(rest.trim_start())
}

fn parse_str_value(header: &str, key: &str) -> Result<String> {
    let rest = find_key(header, key)?;
    let rest = rest
        .strip_prefix('\'')
        .ok_or_else(|| Error::Format(format!("value for {key:?} is not a string")))?;
    let end = rest
        .find('\'')
        .ok_or_else(|| Error::Format(format!("unterminated string for {key:?}")))?;
    Ok(rest[..end].to_string())
}

fn parse_bool_value(header: &str, key: &str) -> Result<bool> {
    let rest = find_key(header, key)?;
    if rest.starts_with("True") {
        Ok(true)
    } else if rest.starts_with("False") {
        Ok(false)
    } else {
        Err(Error::Format(format!("value for {key:?} is not a boolean")))
    }
}

fn parse_shape_value(header: &str) -> Result<Vec<usize>> {
    let rest = find_key(header, "shape")?;
    let rest = rest
        .strip_prefix('(')
        .ok_or_else(|| Error::Format("shape is not a tuple".into()))?;
    let end = rest
        .find(')')
        .ok_or_else(|| Error::Format("unterminated shape tuple".into()))?;
    let inner = &rest[..end];
    let mut shape = Vec::new();
    for part in inner.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue; // trailing comma of 1-tuples, or the empty tuple
        }
        let dim: usize = part
            .parse()
            .map_err(|_| Error::Format(format!("bad shape extent {part:?}")))?;
        shape.push(dim);
    }
    Ok(shape)
}
