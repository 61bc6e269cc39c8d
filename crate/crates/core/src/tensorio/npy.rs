//! NumPy `.npy` version 1.0 reading and writing.
//!
//! Only little-endian (or byte-sized) `u1`, `i1`, `i4` and `f4` arrays in C
//! order are supported. Writers always emit version 1.0 with the header
//! padded so the data starts on a 64-byte boundary.

use std::fs;
use std::path::Path;

use crate::error::{Result, SparqError};

const MAGIC: &[u8] = b"\x93NUMPY";
const ALIGN: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum NpyData {
    U8(Vec<u8>),
    I8(Vec<i8>),
    I32(Vec<i32>),
    F32(Vec<f32>),
}

impl NpyData {
    pub fn len(&self) -> usize {
        match self {
            NpyData::U8(v) => v.len(),
            NpyData::I8(v) => v.len(),
            NpyData::I32(v) => v.len(),
            NpyData::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// NumPy type descriptor.
    pub fn descr(&self) -> &'static str {
        match self {
            NpyData::U8(_) => "|u1",
            NpyData::I8(_) => "|i1",
            NpyData::I32(_) => "<i4",
            NpyData::F32(_) => "<f4",
        }
    }

    /// Short dtype name used in error messages and manifests.
    pub fn dtype(&self) -> &'static str {
        match self {
            NpyData::U8(_) => "u1",
            NpyData::I8(_) => "i1",
            NpyData::I32(_) => "i4",
            NpyData::F32(_) => "f4",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NpyArray {
    pub shape: Vec<usize>,
    pub data: NpyData,
}

impl NpyArray {
    pub fn new(shape: Vec<usize>, data: NpyData) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(SparqError::ShapeMismatch(format!(
                "shape {shape:?} needs {expected} elements, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    fn wrong_dtype(&self, expected: &str) -> SparqError {
        SparqError::DtypeMismatch { expected: expected.into(), found: self.data.dtype().into() }
    }

    pub fn into_u8(self) -> Result<(Vec<usize>, Vec<u8>)> {
        match self.data {
            NpyData::U8(v) => Ok((self.shape, v)),
            _ => Err(self.wrong_dtype("u1")),
        }
    }

    pub fn into_i8(self) -> Result<(Vec<usize>, Vec<i8>)> {
        match self.data {
            NpyData::I8(v) => Ok((self.shape, v)),
            _ => Err(self.wrong_dtype("i1")),
        }
    }

    pub fn into_i32(self) -> Result<(Vec<usize>, Vec<i32>)> {
        match self.data {
            NpyData::I32(v) => Ok((self.shape, v)),
            _ => Err(self.wrong_dtype("i4")),
        }
    }

    pub fn into_f32(self) -> Result<(Vec<usize>, Vec<f32>)> {
        match self.data {
            NpyData::F32(v) => Ok((self.shape, v)),
            _ => Err(self.wrong_dtype("f4")),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let shape = match self.shape.len() {
            1 => format!("({},)", self.shape[0]),
            _ => format!(
                "({})",
                self.shape.iter().map(usize::to_string).collect::<Vec<_>>().join(", ")
            ),
        };
        let mut header = format!(
            "{{'descr': '{}', 'fortran_order': False, 'shape': {}, }}",
            self.data.descr(),
            shape
        );
        let unpadded = MAGIC.len() + 2 + 2 + header.len() + 1;
        let pad = (ALIGN - unpadded % ALIGN) % ALIGN;
        header.extend(std::iter::repeat_n(' ', pad));
        header.push('\n');

        let mut out = Vec::with_capacity(unpadded + pad + self.data.len() * 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&[1, 0]);
        out.extend_from_slice(&(header.len() as u16).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        match &self.data {
            NpyData::U8(v) => out.extend_from_slice(v),
            NpyData::I8(v) => out.extend(v.iter().map(|&b| b as u8)),
            NpyData::I32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            NpyData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 10 || &bytes[..6] != MAGIC {
            return Err(SparqError::Npy("missing \\x93NUMPY magic".into()));
        }
        let (major, minor) = (bytes[6], bytes[7]);
        let (header_len, start) = match major {
            1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
            2 | 3 if bytes.len() >= 12 => {
                (u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize, 12)
            }
            _ => return Err(SparqError::Npy(format!("unsupported version {major}.{minor}"))),
        };
        let body = start + header_len;
        if bytes.len() < body {
            return Err(SparqError::Npy("truncated header".into()));
        }
        let header = std::str::from_utf8(&bytes[start..body])
            .map_err(|_| SparqError::Npy("header is not valid text".into()))?;
        let (descr, fortran, shape) = parse_header(header)?;
        if fortran {
            return Err(SparqError::Npy("Fortran-ordered arrays are not supported".into()));
        }
        let count: usize = shape.iter().product();
        let raw = &bytes[body..];
        let need = |size: usize| -> Result<&[u8]> {
            raw.get(..count * size)
                .ok_or_else(|| SparqError::Npy(format!("expected {} data bytes, found {}", count * size, raw.len())))
        };
        let data = match descr.as_str() {
            "|u1" | "<u1" | "u1" | "|b1" => NpyData::U8(need(1)?.to_vec()),
            "|i1" | "<i1" | "i1" => NpyData::I8(need(1)?.iter().map(|&b| b as i8).collect()),
            "<i4" => NpyData::I32(
                need(4)?.chunks_exact(4).map(|c| i32::from_le_bytes(c.try_into().unwrap())).collect(),
            ),
            "<f4" => NpyData::F32(
                need(4)?.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect(),
            ),
            other => return Err(SparqError::Npy(format!("unsupported dtype '{other}'"))),
        };
        Self::new(shape, data)
    }
}

/// Pulls `descr`, `fortran_order` and `shape` out of the header dict.
fn parse_header(header: &str) -> Result<(String, bool, Vec<usize>)> {
    let bad = |what: &str| SparqError::Npy(format!("malformed header ({what}): {}", header.trim()));
    let value_after = |key: &str| -> Result<&str> {
        let at = header.find(&format!("'{key}'")).ok_or_else(|| bad(key))?;
        let rest = &header[at + key.len() + 2..];
        let colon = rest.find(':').ok_or_else(|| bad(key))?;
        Ok(rest[colon + 1..].trim_start())
    };

    let descr_src = value_after("descr")?;
    let quote = descr_src.chars().next().ok_or_else(|| bad("descr"))?;
    if quote != '\'' && quote != '"' {
        return Err(bad("descr"));
    }
    let end = descr_src[1..].find(quote).ok_or_else(|| bad("descr"))?;
    let descr = descr_src[1..1 + end].to_string();

    let fortran_src = value_after("fortran_order")?;
    let fortran = if fortran_src.starts_with("True") {
        true
    } else if fortran_src.starts_with("False") {
        false
    } else {
        return Err(bad("fortran_order"));
    };

    let shape_src = value_after("shape")?;
    if !shape_src.starts_with('(') {
        return Err(bad("shape"));
    }
    let close = shape_src.find(')').ok_or_else(|| bad("shape"))?;
    let shape = shape_src[1..close]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.trim_end_matches('L').parse::<usize>().map_err(|_| bad("shape")))
        .collect::<Result<Vec<_>>>()?;
    Ok((descr, fortran, shape))
}

pub fn read_npy(path: impl AsRef<Path>) -> Result<NpyArray> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    NpyArray::from_bytes(&bytes).map_err(|e| match e {
        SparqError::Npy(msg) => SparqError::Npy(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_npy(path: impl AsRef<Path>, array: &NpyArray) -> Result<()> {
    fs::write(path, array.to_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout_is_aligned() {
        let a = NpyArray::new(vec![2, 3], NpyData::U8(vec![1, 2, 3, 4, 5, 6])).unwrap();
        let bytes = a.to_bytes();
        assert_eq!(&bytes[..8], b"\x93NUMPY\x01\x00");
        let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
        assert_eq!((10 + header_len) % 64, 0);
        let header = std::str::from_utf8(&bytes[10..10 + header_len]).unwrap();
        assert!(header.starts_with("{'descr': '|u1', 'fortran_order': False, 'shape': (2, 3), }"));
        assert!(header.ends_with('\n'));
        assert_eq!(&bytes[10 + header_len..], &[1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn one_dimensional_and_scalar_shapes() {
        let a = NpyArray::new(vec![3], NpyData::I32(vec![-1, 0, 7])).unwrap();
        let text = String::from_utf8_lossy(&a.to_bytes()).to_string();
        assert!(text.contains("'shape': (3,)"));
        assert_eq!(NpyArray::from_bytes(&a.to_bytes()).unwrap(), a);
        let s = NpyArray::new(vec![], NpyData::F32(vec![1.5])).unwrap();
        assert_eq!(NpyArray::from_bytes(&s.to_bytes()).unwrap(), s);
    }

    #[test]
    fn reads_numpy_style_header() {
        // Header as written by numpy.save for np.array([[1, -2]], dtype=np.int8).
        let mut bytes = b"\x93NUMPY\x01\x00".to_vec();
        let mut header = "{'descr': '|i1', 'fortran_order': False, 'shape': (1, 2), }".to_string();
        while !(10 + header.len() + 1).is_multiple_of(64) {
            header.push(' ');
        }
        header.push('\n');
        bytes.extend_from_slice(&(header.len() as u16).to_le_bytes());
        bytes.extend_from_slice(header.as_bytes());
        bytes.extend_from_slice(&[1, 0xFE]);
        let a = NpyArray::from_bytes(&bytes).unwrap();
        assert_eq!(a.shape, vec![1, 2]);
        assert_eq!(a.data, NpyData::I8(vec![1, -2]));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(NpyArray::from_bytes(b"NOTNUMPY\x01\x00").is_err());
        let mut f = NpyArray::new(vec![1], NpyData::F32(vec![1.0])).unwrap().to_bytes();
        let text = String::from_utf8_lossy(&f).replace("'<f4'", "'>f4'");
        f = text.into_bytes();
        assert!(matches!(NpyArray::from_bytes(&f), Err(SparqError::Npy(_))));
        let fortran = String::from_utf8_lossy(&NpyArray::new(vec![1], NpyData::U8(vec![1])).unwrap().to_bytes())
            .replace("False", "True ")
            .into_bytes();
        assert!(NpyArray::from_bytes(&fortran).is_err());
        let mut short = NpyArray::new(vec![4], NpyData::I32(vec![1, 2, 3, 4])).unwrap().to_bytes();
        short.truncate(short.len() - 1);
        assert!(NpyArray::from_bytes(&short).is_err());
        assert!(NpyArray::new(vec![2, 2], NpyData::U8(vec![1])).is_err());
    }

    #[test]
    fn dtype_accessors() {
        let a = NpyArray::new(vec![1], NpyData::U8(vec![1])).unwrap();
        assert!(matches!(a.clone().into_i8(), Err(SparqError::DtypeMismatch { .. })));
        assert_eq!(a.into_u8().unwrap(), (vec![1], vec![1]));
    }

    proptest! {
        #[test]
        fn round_trip(dims in prop::collection::vec(1usize..5, 0..4), seed in any::<u32>(), kind in 0u8..4) {
            let n: usize = dims.iter().product();
            let data = match kind {
                0 => NpyData::U8((0..n).map(|i| (i as u32 ^ seed) as u8).collect()),
                1 => NpyData::I8((0..n).map(|i| (i as u32 ^ seed) as i8).collect()),
                2 => NpyData::I32((0..n).map(|i| (i as u32).wrapping_mul(seed) as i32).collect()),
                _ => NpyData::F32((0..n).map(|i| i as f32 * 0.25 - seed as f32).collect()),
            };
            let a = NpyArray::new(dims, data).unwrap();
            prop_assert_eq!(NpyArray::from_bytes(&a.to_bytes()).unwrap(), a);
        }
    }
}
