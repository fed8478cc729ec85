//! NPY v1.0 arrays, read and written by hand, and NPZ archives of them.

use std::fs::File;
use std::io::{Read, Seek, Write};
use std::path::Path;

use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, ZipArchive, ZipWriter};

use crate::classical::Tensor;
use crate::error::{Error, Result};

use super::Dataset;

const MAGIC: &[u8; 6] = b"\x93NUMPY";

/// Element types understood by the reader. All multi-byte types are
/// little-endian on disk.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dtype {
    Bool,
    U8,
    I8,
    U16,
    I16,
    U32,
    I32,
    U64,
    I64,
    F32,
    F64,
}

impl Dtype {
    fn parse(descr: &str) -> Result<Self> {
        let (order, code) = descr.split_at(1.min(descr.len()));
        let dtype = match code {
            "b1" => Dtype::Bool,
            "u1" => Dtype::U8,
            "i1" => Dtype::I8,
            "u2" => Dtype::U16,
            "i2" => Dtype::I16,
            "u4" => Dtype::U32,
            "i4" => Dtype::I32,
            "u8" => Dtype::U64,
            "i8" => Dtype::I64,
            "f4" => Dtype::F32,
            "f8" => Dtype::F64,
            _ => return Err(Error::Npy(format!("unsupported dtype {descr:?}"))),
        };
        match order {
            "<" | "|" => Ok(dtype),
            "=" if cfg!(target_endian = "little") => Ok(dtype),
            ">" if dtype.size() == 1 => Ok(dtype),
            _ => Err(Error::Npy(format!(
                "big-endian dtype {descr:?} unsupported"
            ))),
        }
    }

    fn descr(self) -> &'static str {
        match self {
            Dtype::Bool => "|b1",
            Dtype::U8 => "|u1",
            Dtype::I8 => "|i1",
            Dtype::U16 => "<u2",
            Dtype::I16 => "<i2",
            Dtype::U32 => "<u4",
            Dtype::I32 => "<i4",
            Dtype::U64 => "<u8",
            Dtype::I64 => "<i8",
            Dtype::F32 => "<f4",
            Dtype::F64 => "<f8",
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::Bool | Dtype::U8 | Dtype::I8 => 1,
            Dtype::U16 | Dtype::I16 => 2,
            Dtype::U32 | Dtype::I32 | Dtype::F32 => 4,
            Dtype::U64 | Dtype::I64 | Dtype::F64 => 8,
        }
    }

    fn decode(self, b: &[u8]) -> f64 {
        macro_rules! le {
            ($t:ty) => {
                <$t>::from_le_bytes(b.try_into().expect("element width")) as f64
            };
        }
        match self {
            Dtype::Bool | Dtype::U8 => b[0] as f64,
            Dtype::I8 => b[0] as i8 as f64,
            Dtype::U16 => le!(u16),
            Dtype::I16 => le!(i16),
            Dtype::U32 => le!(u32),
            Dtype::I32 => le!(i32),
            Dtype::U64 => le!(u64),
            Dtype::I64 => le!(i64),
            Dtype::F32 => le!(f32),
            Dtype::F64 => le!(f64),
        }
    }

    fn encode(self, v: f64, out: &mut Vec<u8>) {
        match self {
            Dtype::Bool => out.push((v != 0.0) as u8),
            Dtype::U8 => out.push(v as u8),
            Dtype::I8 => out.push(v as i8 as u8),
            Dtype::U16 => out.extend((v as u16).to_le_bytes()),
            Dtype::I16 => out.extend((v as i16).to_le_bytes()),
            Dtype::U32 => out.extend((v as u32).to_le_bytes()),
            Dtype::I32 => out.extend((v as i32).to_le_bytes()),
            Dtype::U64 => out.extend((v as u64).to_le_bytes()),
            Dtype::I64 => out.extend((v as i64).to_le_bytes()),
            Dtype::F32 => out.extend((v as f32).to_le_bytes()),
            Dtype::F64 => out.extend(v.to_le_bytes()),
        }
    }
}

/// A decoded array. Values are widened to `f64`; `dtype` records the
/// on-disk type.
#[derive(Clone, Debug, PartialEq)]
pub struct NpyArray {
    pub dtype: Dtype,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl NpyArray {
    pub fn new(dtype: Dtype, shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if shape.iter().product::<usize>() != values.len() {
            return Err(Error::Npy(format!(
                "shape {shape:?} does not match {} values",
                values.len()
            )));
        }
        Ok(Self {
            dtype,
            shape,
            values,
        })
    }

    pub fn read(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic[..6] != MAGIC {
            return Err(Error::Npy("bad magic".into()));
        }
        let header_len = match magic[6] {
            1 => {
                let mut b = [0u8; 2];
                r.read_exact(&mut b)?;
                u16::from_le_bytes(b) as usize
            }
            2 | 3 => {
                let mut b = [0u8; 4];
                r.read_exact(&mut b)?;
                u32::from_le_bytes(b) as usize
            }
            v => return Err(Error::Npy(format!("unsupported format version {v}"))),
        };
        let mut header = vec![0u8; header_len];
        r.read_exact(&mut header)?;
        let header = String::from_utf8(header).map_err(|_| Error::Npy("header not text".into()))?;
        let (descr, fortran, shape) = parse_header(&header)?;
        if fortran {
            return Err(Error::Npy("fortran_order arrays are unsupported".into()));
        }
        let dtype = Dtype::parse(&descr)?;
        let count: usize = shape.iter().product();
        let mut payload = vec![0u8; count * dtype.size()];
        r.read_exact(&mut payload)
            .map_err(|_| Error::Npy(format!("payload shorter than {count} elements")))?;
        let values = payload
            .chunks_exact(dtype.size())
            .map(|b| dtype.decode(b))
            .collect();
        Ok(Self {
            dtype,
            shape,
            values,
        })
    }

    /// Writes format version 1.0 with the header padded to 64 bytes.
    pub fn write(&self, mut w: impl Write) -> Result<()> {
        let shape = match self.shape.len() {
            1 => format!("({},)", self.shape[0]),
            _ => format!(
                "({})",
                self.shape
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        };
        let mut header = format!(
            "{{'descr': '{}', 'fortran_order': False, 'shape': {shape}, }}",
            self.dtype.descr()
        );
        let unpadded = MAGIC.len() + 2 + 2 + header.len() + 1;
        header.extend(std::iter::repeat_n(' ', (64 - unpadded % 64) % 64));
        header.push('\n');
        let len = u16::try_from(header.len()).map_err(|_| Error::Npy("header too long".into()))?;
        w.write_all(MAGIC)?;
        w.write_all(&[1, 0])?;
        w.write_all(&len.to_le_bytes())?;
        w.write_all(header.as_bytes())?;
        let mut payload = Vec::with_capacity(self.values.len() * self.dtype.size());
        for &v in &self.values {
            self.dtype.encode(v, &mut payload);
        }
        w.write_all(&payload)?;
        Ok(())
    }
}

/// Extracts descr, fortran_order and shape from the Python dict literal.
fn parse_header(h: &str) -> Result<(String, bool, Vec<usize>)> {
    let value_after = |key: &str| -> Result<&str> {
        let at = h
            .find(&format!("'{key}'"))
            .ok_or_else(|| Error::Npy(format!("header lacks {key}")))?;
        let rest = &h[at + key.len() + 2..];
        let colon = rest
            .find(':')
            .ok_or_else(|| Error::Npy(format!("malformed {key} entry")))?;
        Ok(rest[colon + 1..].trim_start())
    };
    let d = value_after("descr")?;
    let quote = d.chars().next().filter(|c| *c == '\'' || *c == '"');
    let descr = quote
        .and_then(|q| d[1..].find(q).map(|end| d[1..=end].to_string()))
        .ok_or_else(|| Error::Npy("descr must be a string".into()))?;
    let f = value_after("fortran_order")?;
    let fortran = if f.starts_with("True") {
        true
    } else if f.starts_with("False") {
        false
    } else {
        return Err(Error::Npy("fortran_order must be a bool".into()));
    };
    let s = value_after("shape")?;
    let close = s
        .find(')')
        .filter(|_| s.starts_with('('))
        .ok_or_else(|| Error::Npy("shape must be a tuple".into()))?;
    let shape = s[1..close]
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.trim_end_matches('L')
                .parse()
                .map_err(|_| Error::Npy(format!("bad shape entry {t:?}")))
        })
        .collect::<Result<Vec<usize>>>()?;
    Ok((descr, fortran, shape))
}

fn entry_name<R: Read + Seek>(zip: &ZipArchive<R>, key: &str) -> Result<String> {
    let with_ext = format!("{key}.npy");
    zip.file_names()
        .find(|n| *n == with_ext || *n == key)
        .map(str::to_string)
        .ok_or_else(|| Error::Npy(format!("archive has no entry {key:?}")))
}

/// Reads one array from an NPZ archive by key (with or without `.npy`).
pub fn read_npz_entry(path: impl AsRef<Path>, key: &str) -> Result<NpyArray> {
    let mut zip = ZipArchive::new(File::open(path)?)?;
    let name = entry_name(&zip, key)?;
    let entry = zip.by_name(&name)?;
    NpyArray::read(entry)
}

/// Writes arrays as `<key>.npy` entries of an uncompressed archive.
pub fn write_npz(path: impl AsRef<Path>, entries: &[(&str, &NpyArray)]) -> Result<()> {
    let mut zip = ZipWriter::new(File::create(path)?);
    let opts = SimpleFileOptions::default().compression_method(CompressionMethod::Stored);
    for (key, array) in entries {
        zip.start_file(format!("{key}.npy"), opts)?;
        let mut buf = Vec::new();
        array.write(&mut buf)?;
        zip.write_all(&buf)?;
    }
    zip.finish()?;
    Ok(())
}

/// Loads an image array and its binary labels. Byte images map to
/// `v/127.5 − 1`; other dtypes are taken as stored. Labels may be `[n]` or
/// `[n, 1]`.
pub fn load_npz(path: impl AsRef<Path>, images_key: &str, labels_key: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let images = read_npz_entry(path, images_key)?;
    let labels = read_npz_entry(path, labels_key)?;
    if images.shape.len() < 2 {
        return Err(Error::Shape(format!(
            "images need shape [n, ...], got {:?}",
            images.shape
        )));
    }
    let n = images.shape[0];
    let label_shape_ok = matches!(labels.shape.as_slice(), [m] | [m, 1] if *m == n);
    if !label_shape_ok {
        return Err(Error::Shape(format!(
            "labels {:?} do not match {n} images",
            labels.shape
        )));
    }
    let labels = labels
        .values
        .iter()
        .map(|&v| match v {
            0.0 => Ok(0u8),
            1.0 => Ok(1u8),
            _ => Err(Error::Invalid(format!("label {v} is not binary"))),
        })
        .collect::<Result<Vec<u8>>>()?;
    let values = if images.dtype == Dtype::U8 {
        images.values.iter().map(|v| v / 127.5 - 1.0).collect()
    } else {
        images.values
    };
    Dataset::new(Tensor::new(images.shape, values)?, labels, None)
}
