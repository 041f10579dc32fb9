//! `.npy` arrays: little-endian integer and boolean dtypes in C order.

use crate::error::{CliError, CliResult};

const MAGIC: &[u8] = b"\x93NUMPY";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    Bool,
    U8,
    I8,
    U16,
    I16,
    U32,
    I32,
    U64,
    I64,
}

impl DType {
    fn parse(descr: &str) -> CliResult<Self> {
        let (order, code) = descr.split_at(1.min(descr.len()));
        if !matches!(order, "<" | "|" | "=") {
            return Err(CliError::data(format!("unsupported byte order in dtype '{descr}'")));
        }
        Ok(match code {
            "b1" => DType::Bool,
            "u1" => DType::U8,
            "i1" => DType::I8,
            "u2" => DType::U16,
            "i2" => DType::I16,
            "u4" => DType::U32,
            "i4" => DType::I32,
            "u8" => DType::U64,
            "i8" => DType::I64,
            _ => return Err(CliError::data(format!("unsupported dtype '{descr}'"))),
        })
    }

    pub fn descr(self) -> &'static str {
        match self {
            DType::Bool => "|b1",
            DType::U8 => "|u1",
            DType::I8 => "|i1",
            DType::U16 => "<u2",
            DType::I16 => "<i2",
            DType::U32 => "<u4",
            DType::I32 => "<i4",
            DType::U64 => "<u8",
            DType::I64 => "<i8",
        }
    }

    pub fn size(self) -> usize {
        match self {
            DType::Bool | DType::U8 | DType::I8 => 1,
            DType::U16 | DType::I16 => 2,
            DType::U32 | DType::I32 => 4,
            DType::U64 | DType::I64 => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NpyArray {
    pub dtype: DType,
    pub shape: Vec<usize>,
    /// Raw little-endian element bytes in C order.
    pub data: Vec<u8>,
}

impl NpyArray {
    pub fn from_u8(shape: Vec<usize>, data: Vec<u8>) -> Self {
        Self { dtype: DType::U8, shape, data }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The raw bytes of a `u1` array.
    pub fn as_u8(&self) -> CliResult<&[u8]> {
        if self.dtype != DType::U8 {
            return Err(CliError::data(format!("expected unsigned 8-bit data, found {}", self.dtype.descr())));
        }
        Ok(&self.data)
    }

    /// Every element as `i128`, whatever the integer width.
    pub fn to_integers(&self) -> Vec<i128> {
        let size = self.dtype.size();
        self.data
            .chunks_exact(size)
            .map(|c| {
                let mut buf = [0u8; 8];
                buf[..size].copy_from_slice(c);
                let u = u64::from_le_bytes(buf);
                match self.dtype {
                    DType::I8 => c[0] as i8 as i128,
                    DType::I16 => i16::from_le_bytes([c[0], c[1]]) as i128,
                    DType::I32 => i32::from_le_bytes([c[0], c[1], c[2], c[3]]) as i128,
                    DType::I64 => u as i64 as i128,
                    _ => u as i128,
                }
            })
            .collect()
    }

    pub fn parse(bytes: &[u8]) -> CliResult<Self> {
        if bytes.len() < 10 || &bytes[..6] != MAGIC {
            return Err(CliError::data("not an .npy array (bad magic)"));
        }
        let major = bytes[6];
        let (header_len, start) = match major {
            1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
            2 | 3 => {
                if bytes.len() < 12 {
                    return Err(CliError::data("truncated .npy header"));
                }
                (u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize, 12)
            }
            v => return Err(CliError::data(format!("unsupported .npy version {v}"))),
        };
        let header = bytes
            .get(start..start + header_len)
            .ok_or_else(|| CliError::data("truncated .npy header"))?;
        let header = std::str::from_utf8(header).map_err(|_| CliError::data(".npy header is not text"))?;
        let descr = dict_value(header, "descr")?;
        let descr = descr.trim_matches(|c| c == '\'' || c == '"');
        let dtype = DType::parse(descr)?;
        if dict_value(header, "fortran_order")? != "False" {
            return Err(CliError::data("Fortran-ordered arrays are not supported"));
        }
        let shape = parse_shape(&dict_value(header, "shape")?)?;
        let count: usize = shape.iter().product();
        let body = &bytes[start + header_len..];
        let need = count * dtype.size();
        if body.len() < need {
            return Err(CliError::data(format!("array body holds {} bytes, shape {shape:?} needs {need}", body.len())));
        }
        Ok(Self { dtype, shape, data: body[..need].to_vec() })
    }

    /// Version 1.0 encoding, header padded to a multiple of 64 bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let shape = match self.shape.len() {
            1 => format!("({},)", self.shape[0]),
            _ => format!("({})", self.shape.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ")),
        };
        let mut header = format!("{{'descr': '{}', 'fortran_order': False, 'shape': {shape}, }}", self.dtype.descr());
        let unpadded = MAGIC.len() + 4 + header.len() + 1;
        header.push_str(&" ".repeat((64 - unpadded % 64) % 64));
        header.push('\n');
        let mut out = Vec::with_capacity(10 + header.len() + self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&[1, 0]);
        out.extend_from_slice(&(header.len() as u16).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        out.extend_from_slice(&self.data);
        out
    }
}

/// Raw text of `key`'s value in the header's Python dict literal.
fn dict_value(header: &str, key: &str) -> CliResult<String> {
    let missing = || CliError::data(format!(".npy header lacks '{key}'"));
    let pos = header.find(&format!("'{key}'")).or_else(|| header.find(&format!("\"{key}\""))).ok_or_else(missing)?;
    let rest = &header[pos + key.len() + 2..];
    let rest = rest.trim_start().strip_prefix(':').ok_or_else(missing)?.trim_start();
    let end = if rest.starts_with('(') {
        rest.find(')').map(|i| i + 1)
    } else {
        rest.find([',', '}'])
    }
    .ok_or_else(missing)?;
    Ok(rest[..end].trim().to_string())
}

fn parse_shape(s: &str) -> CliResult<Vec<usize>> {
    let inner = s.trim().strip_prefix('(').and_then(|s| s.strip_suffix(')'));
    let inner = inner.ok_or_else(|| CliError::data(format!("malformed shape '{s}'")))?;
    inner
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.trim_end_matches('L').parse().map_err(|_| CliError::data(format!("malformed shape '{s}'"))))
        .collect()
}
