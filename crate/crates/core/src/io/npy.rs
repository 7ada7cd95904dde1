//! NPY v1.0 reader and writer.
//!
//! Supported dtypes are little-endian `f4`, `f8` and `u1`, C order only. Writers
//! emit `\x93NUMPY`, version 1.0, a little-endian `u16` header length, then the
//! header dictionary padded with spaces and terminated by `\n` so that the data
//! starts on a 64-byte boundary.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, FormatError, Result};

pub const MAGIC: &[u8; 6] = b"\x93NUMPY";
const ALIGN: usize = 64;
const PREAMBLE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
    U8,
}

impl Dtype {
    fn descr(self) -> &'static str {
        match self {
            Dtype::F32 => "<f4",
            Dtype::F64 => "<f8",
            Dtype::U8 => "|u1",
        }
    }

    fn parse(descr: &str) -> Result<Self, FormatError> {
        match descr {
            "<f4" => Ok(Dtype::F32),
            "<f8" => Ok(Dtype::F64),
            "|u1" | "<u1" | "u1" => Ok(Dtype::U8),
            other => Err(FormatError::UnsupportedDtype(other.to_string())),
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
            Dtype::U8 => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NpyData {
    F32(Vec<f32>),
    F64(Vec<f64>),
    U8(Vec<u8>),
}

impl NpyData {
    pub fn len(&self) -> usize {
        match self {
            NpyData::F32(v) => v.len(),
            NpyData::F64(v) => v.len(),
            NpyData::U8(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> Dtype {
        match self {
            NpyData::F32(_) => Dtype::F32,
            NpyData::F64(_) => Dtype::F64,
            NpyData::U8(_) => Dtype::U8,
        }
    }
}

/// A row-major n-dimensional array.
#[derive(Debug, Clone, PartialEq)]
pub struct NpyTensor {
    shape: Vec<usize>,
    data: NpyData,
}

impl NpyTensor {
    pub fn new(shape: Vec<usize>, data: NpyData) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::InvalidInput(format!(
                "shape {shape:?} needs {expected} elements, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &NpyData {
        &self.data
    }

    pub fn dtype(&self) -> Dtype {
        self.data.dtype()
    }

    pub fn into_parts(self) -> (Vec<usize>, NpyData) {
        (self.shape, self.data)
    }

    /// Values converted to `f32`; `u8` is kept in `0..=255`.
    pub fn to_f32(&self) -> Vec<f32> {
        match &self.data {
            NpyData::F32(v) => v.clone(),
            NpyData::F64(v) => v.iter().map(|&x| x as f32).collect(),
            NpyData::U8(v) => v.iter().map(|&x| x as f32).collect(),
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match &self.data {
            NpyData::F32(v) => v.iter().map(|&x| x as f64).collect(),
            NpyData::F64(v) => v.clone(),
            NpyData::U8(v) => v.iter().map(|&x| x as f64).collect(),
        }
    }
}

/// Parsed header: dtype, shape and the offset of the first data byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NpyHeader {
    pub dtype: Dtype,
    pub shape: Vec<usize>,
    pub data_offset: usize,
}

pub fn read_header(bytes: &[u8]) -> Result<NpyHeader, FormatError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(FormatError::BadMagic);
    }
    if bytes.len() < PREAMBLE {
        return Err(FormatError::Truncated);
    }
    let (major, minor) = (bytes[6], bytes[7]);
    if (major, minor) != (1, 0) {
        return Err(FormatError::UnsupportedVersion(major, minor));
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let data_offset = PREAMBLE + header_len;
    if bytes.len() < data_offset {
        return Err(FormatError::Truncated);
    }
    let text = std::str::from_utf8(&bytes[PREAMBLE..data_offset])
        .map_err(|_| FormatError::BadHeader("header is not valid text".into()))?;
    if !text.ends_with('\n') {
        return Err(FormatError::BadHeader("header not terminated by newline".into()));
    }
    let dict = parse_dict(text.trim_end())?;
    let mut descr = None;
    let mut fortran = None;
    let mut shape = None;
    for (key, value) in dict {
        match (key.as_str(), value) {
            ("descr", Literal::Str(s)) => descr = Some(s),
            ("fortran_order", Literal::Bool(b)) => fortran = Some(b),
            ("shape", Literal::Tuple(t)) => shape = Some(t),
            (k, _) => return Err(FormatError::BadHeader(format!("unexpected entry `{k}`"))),
        }
    }
    let missing = |k: &str| FormatError::BadHeader(format!("missing `{k}`"));
    let dtype = Dtype::parse(&descr.ok_or_else(|| missing("descr"))?)?;
    if fortran.ok_or_else(|| missing("fortran_order"))? {
        return Err(FormatError::FortranOrder);
    }
    Ok(NpyHeader {
        dtype,
        shape: shape.ok_or_else(|| missing("shape"))?,
        data_offset,
    })
}

pub fn read_npy(bytes: &[u8]) -> Result<NpyTensor, FormatError> {
    let header = read_header(bytes)?;
    let count: usize = header.shape.iter().product();
    let payload = &bytes[header.data_offset..];
    let expected = count * header.dtype.size();
    if payload.len() != expected {
        return Err(FormatError::SizeMismatch {
            expected,
            actual: payload.len(),
        });
    }
    let data = match header.dtype {
        Dtype::U8 => NpyData::U8(payload.to_vec()),
        Dtype::F32 => NpyData::F32(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
        Dtype::F64 => NpyData::F64(
            payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
    };
    Ok(NpyTensor {
        shape: header.shape,
        data,
    })
}

pub fn write_npy(t: &NpyTensor) -> Vec<u8> {
    let mut dict = format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': (",
        t.dtype().descr()
    );
    for (i, d) in t.shape.iter().enumerate() {
        if i > 0 {
            dict.push_str(", ");
        }
        let _ = write!(dict, "{d}");
    }
    if t.shape.len() == 1 {
        dict.push(',');
    }
    dict.push_str("), }");
    let unpadded = PREAMBLE + dict.len() + 1;
    let pad = (ALIGN - unpadded % ALIGN) % ALIGN;
    let header_len = dict.len() + pad + 1;

    let mut out = Vec::with_capacity(PREAMBLE + header_len + t.data.len() * t.dtype().size());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header_len as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out.extend(std::iter::repeat_n(b' ', pad));
    out.push(b'\n');
    match &t.data {
        NpyData::U8(v) => out.extend_from_slice(v),
        NpyData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        NpyData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
    }
    out
}

pub fn read_npy_file(path: impl AsRef<Path>) -> Result<NpyTensor> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(read_npy(&bytes)?)
}

/// Reads only as much of the file as the header needs.
pub fn read_npy_file_header(path: impl AsRef<Path>) -> Result<NpyHeader> {
    use std::io::Read;
    let path = path.as_ref();
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut pre = [0u8; PREAMBLE];
    f.read_exact(&mut pre).map_err(|_| FormatError::Truncated)?;
    if &pre[..6] != MAGIC {
        return Err(FormatError::BadMagic.into());
    }
    let len = u16::from_le_bytes([pre[8], pre[9]]) as usize;
    let mut buf = pre.to_vec();
    buf.resize(PREAMBLE + len, 0);
    f.read_exact(&mut buf[PREAMBLE..])
        .map_err(|_| FormatError::Truncated)?;
    Ok(read_header(&buf)?)
}

pub fn write_npy_file(path: impl AsRef<Path>, t: &NpyTensor) -> Result<()> {
    super::write_atomic(path.as_ref(), &write_npy(t))
}

enum Literal {
    Str(String),
    Bool(bool),
    Tuple(Vec<usize>),
}

/// Parses the Python dict literal of an NPY header.
fn parse_dict(text: &str) -> Result<Vec<(String, Literal)>, FormatError> {
    let bad = |msg: &str| FormatError::BadHeader(msg.to_string());
    let mut p = Parser {
        s: text.as_bytes(),
        i: 0,
    };
    p.expect(b'{').ok_or_else(|| bad("expected `{`"))?;
    let mut out = Vec::new();
    loop {
        p.skip_ws();
        if p.eat(b'}') {
            break;
        }
        let key = p.string().ok_or_else(|| bad("expected quoted key"))?;
        p.expect(b':').ok_or_else(|| bad("expected `:`"))?;
        p.skip_ws();
        let value = match p.peek() {
            Some(b'\'') | Some(b'"') => Literal::Str(p.string().ok_or_else(|| bad("bad string"))?),
            Some(b'(') => Literal::Tuple(p.tuple().ok_or_else(|| bad("bad shape tuple"))?),
            _ if p.word("True") => Literal::Bool(true),
            _ if p.word("False") => Literal::Bool(false),
            _ => return Err(bad("unsupported value")),
        };
        out.push((key, value));
        p.skip_ws();
        if p.eat(b',') {
            continue;
        }
        p.expect(b'}').ok_or_else(|| bad("expected `}`"))?;
        break;
    }
    p.skip_ws();
    if p.i != p.s.len() {
        return Err(bad("trailing characters"));
    }
    Ok(out)
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.i).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t')) {
            self.i += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Option<()> {
        self.skip_ws();
        self.eat(c).then_some(())
    }

    fn word(&mut self, w: &str) -> bool {
        if self.s[self.i..].starts_with(w.as_bytes()) {
            self.i += w.len();
            true
        } else {
            false
        }
    }

    fn string(&mut self) -> Option<String> {
        self.skip_ws();
        let quote = self.peek().filter(|q| *q == b'\'' || *q == b'"')?;
        self.i += 1;
        let start = self.i;
        while self.peek()? != quote {
            self.i += 1;
        }
        let s = std::str::from_utf8(&self.s[start..self.i]).ok()?.to_string();
        self.i += 1;
        Some(s)
    }

    fn tuple(&mut self) -> Option<Vec<usize>> {
        self.eat(b'(').then_some(())?;
        let mut dims = Vec::new();
        loop {
            self.skip_ws();
            if self.eat(b')') {
                return Some(dims);
            }
            let start = self.i;
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.i += 1;
            }
            if start == self.i {
                return None;
            }
            dims.push(std::str::from_utf8(&self.s[start..self.i]).ok()?.parse().ok()?);
            self.skip_ws();
            if !self.eat(b',') {
                self.skip_ws();
                return self.eat(b')').then_some(dims);
            }
        }
    }
}
