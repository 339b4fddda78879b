//! Binary checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "MCFM"  version:u16
//! repeated until EOF:
//!     name_len:u16  name:[u8; name_len]  dtype:u8  rank:u8  extents:[u32; rank]  values
//! ```
//!
//! `dtype` is 0 = f32, 1 = f64, 2 = u8. Text metadata (the model config echo)
//! is stored as a rank-1 u8 record holding UTF-8 JSON.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{DType, ParamStore, Real, Tensor};

pub const MAGIC: &[u8; 4] = b"MCFM";
pub const VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum RecordData {
    F32(Vec<f32>),
    F64(Vec<f64>),
    U8(Vec<u8>),
}

impl RecordData {
    pub fn dtype(&self) -> DType {
        match self {
            RecordData::F32(_) => DType::F32,
            RecordData::F64(_) => DType::F64,
            RecordData::U8(_) => DType::U8,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            RecordData::F32(v) => v.len(),
            RecordData::F64(v) => v.len(),
            RecordData::U8(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: RecordData,
}

impl Record {
    pub fn is_tensor(&self) -> bool {
        !matches!(self.data, RecordData::U8(_))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Checkpoint {
    pub records: Vec<Record>,
}

fn tensor_record<T: Real>(name: &str, t: &Tensor<T>) -> Record {
    let data = match T::DTYPE {
        DType::F32 => RecordData::F32(t.data().iter().map(|v| v.to_f32().expect("f32")).collect()),
        _ => RecordData::F64(t.to_f64_vec()),
    };
    Record { name: name.to_string(), shape: t.shape().to_vec(), data }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Checkpoint(format!("truncated while reading {what} at byte {}", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn done(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_params<T: Real>(params: &ParamStore<T>) -> Self {
        Checkpoint { records: params.iter().map(|(n, t)| tensor_record(n, t)).collect() }
    }

    pub fn push_text(&mut self, name: &str, text: &str) {
        let bytes = text.as_bytes().to_vec();
        self.records.push(Record { name: name.to_string(), shape: vec![bytes.len()], data: RecordData::U8(bytes) });
    }

    pub fn text(&self, name: &str) -> Option<&str> {
        self.records.iter().find(|r| r.name == name).and_then(|r| match &r.data {
            RecordData::U8(b) => std::str::from_utf8(b).ok(),
            _ => None,
        })
    }

    pub fn tensor_records(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| r.is_tensor())
    }

    /// Sum of value counts over tensor records.
    pub fn param_count(&self) -> usize {
        self.tensor_records().map(|r| r.data.len()).sum()
    }

    /// Element type shared by all tensor records, if any.
    pub fn dtype(&self) -> Option<DType> {
        self.tensor_records().next().map(|r| r.data.dtype())
    }

    /// Every tensor record as a parameter, converted to `T`.
    pub fn params<T: Real>(&self) -> Result<ParamStore<T>> {
        let mut store = ParamStore::new();
        for r in self.tensor_records() {
            let values: Vec<T> = match &r.data {
                RecordData::F32(v) => v.iter().map(|&x| T::lit(f64::from(x))).collect(),
                RecordData::F64(v) => v.iter().map(|&x| T::lit(x)).collect(),
                RecordData::U8(_) => unreachable!(),
            };
            let t = Tensor::new(r.shape.clone(), values).map_err(|e| Error::Checkpoint(format!("{}: {e}", r.name)))?;
            store.add(r.name.clone(), t)?;
        }
        Ok(store)
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(16 + self.param_count() * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for r in &self.records {
            let name = r.name.as_bytes();
            let name_len = u16::try_from(name.len())
                .map_err(|_| Error::Checkpoint(format!("record name too long: {} bytes", name.len())))?;
            let rank = u8::try_from(r.shape.len())
                .map_err(|_| Error::Checkpoint(format!("{}: rank {} exceeds 255", r.name, r.shape.len())))?;
            let numel: usize = r.shape.iter().product();
            if numel != r.data.len() {
                return Err(Error::Checkpoint(format!("{}: shape {:?} but {} values", r.name, r.shape, r.data.len())));
            }
            out.extend_from_slice(&name_len.to_le_bytes());
            out.extend_from_slice(name);
            out.push(r.data.dtype() as u8);
            out.push(rank);
            for &d in &r.shape {
                let d = u32::try_from(d).map_err(|_| Error::Checkpoint(format!("{}: extent {d} exceeds u32", r.name)))?;
                out.extend_from_slice(&d.to_le_bytes());
            }
            match &r.data {
                RecordData::F32(v) => v.iter().for_each(|x| x.write_le(&mut out)),
                RecordData::F64(v) => v.iter().for_each(|x| x.write_le(&mut out)),
                RecordData::U8(v) => out.extend_from_slice(v),
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4, "magic")? != MAGIC {
            return Err(Error::Checkpoint("bad magic; not an MCFM checkpoint".into()));
        }
        let version = r.u16("version")?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let mut records = Vec::new();
        while !r.done() {
            let name_len = r.u16("name length")? as usize;
            let name = std::str::from_utf8(r.take(name_len, "name")?)
                .map_err(|_| Error::Checkpoint("record name is not UTF-8".into()))?
                .to_string();
            let code = r.u8("dtype")?;
            let dtype = DType::from_code(code).ok_or_else(|| Error::Checkpoint(format!("{name}: unknown dtype {code}")))?;
            let rank = r.u8("rank")? as usize;
            let shape = (0..rank).map(|_| r.u32("extent").map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let numel = shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
            let bytes_len = numel
                .and_then(|n| n.checked_mul(dtype.size()))
                .ok_or_else(|| Error::Checkpoint(format!("{name}: shape {shape:?} overflows")))?;
            let raw = r.take(bytes_len, &name)?;
            let data = match dtype {
                DType::F32 => RecordData::F32(raw.chunks_exact(4).map(f32::read_le).collect()),
                DType::F64 => RecordData::F64(raw.chunks_exact(8).map(f64::read_le).collect()),
                DType::U8 => RecordData::U8(raw.to_vec()),
            };
            records.push(Record { name, shape, data });
        }
        Ok(Checkpoint { records })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.encode()?).map_err(|e| Error::data(path, e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::data(path, e.to_string()))?;
        Self::decode(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_is_exact() {
        let mut c = Checkpoint::new();
        c.records.push(Record { name: "w".into(), shape: vec![2], data: RecordData::F32(vec![1.0, -2.0]) });
        let bytes = c.encode().unwrap();
        let mut expect = b"MCFM".to_vec();
        expect.extend_from_slice(&[1, 0]); // version
        expect.extend_from_slice(&[1, 0, b'w', 0, 1, 2, 0, 0, 0]);
        expect.extend_from_slice(&1.0f32.to_le_bytes());
        expect.extend_from_slice(&(-2.0f32).to_le_bytes());
        assert_eq!(bytes, expect);
        assert_eq!(Checkpoint::decode(&bytes).unwrap(), c);
    }

    #[test]
    fn truncated_and_corrupt_inputs_are_rejected() {
        let mut c = Checkpoint::new();
        c.push_text("config", "{}");
        c.records.push(Record { name: "w".into(), shape: vec![3, 1], data: RecordData::F64(vec![1.0, 2.0, 3.0]) });
        let bytes = c.encode().unwrap();
        assert!(Checkpoint::decode(&bytes[..bytes.len() - 1]).is_err());
        assert!(Checkpoint::decode(b"MCFN\x01\x00").is_err());
        assert!(Checkpoint::decode(b"MCFM\x02\x00").is_err());
        let mut bad = bytes.clone();
        bad[6 + 2 + 6] = 9; // dtype of first record
        assert!(Checkpoint::decode(&bad).is_err());
    }

    #[test]
    fn text_and_param_views() {
        let mut store = ParamStore::<f64>::new();
        store.add("a", Tensor::full([2, 2], 0.5)).unwrap();
        store.add("b", Tensor::scalar(3.0)).unwrap();
        let mut c = Checkpoint::from_params(&store);
        c.push_text("config", "{\"k\":4}");
        assert_eq!(c.param_count(), 5);
        assert_eq!(c.text("config"), Some("{\"k\":4}"));
        let back: ParamStore<f64> = Checkpoint::decode(&c.encode().unwrap()).unwrap().params().unwrap();
        assert_eq!(back, store);
    }
}
