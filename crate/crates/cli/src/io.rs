//! Binary feature, label, k-NN and density files, plus the TSV assignment.
//!
//! Every binary file starts with a 4-byte magic and a little-endian `u32`
//! version, then a fixed header, then a little-endian payload whose length
//! is fully determined by the header:
//!
//! | magic  | header after version    | payload                         |
//! |--------|-------------------------|---------------------------------|
//! | `PCFT` | `n: u64`, `d: u32`      | `n * d` x `f32`, row-major      |
//! | `PCLB` | `n: u64`                | `n` x `i64`                     |
//! | `PCKN` | `n: u64`, `k: u32`      | `n * k` x `u32`, `n * k` x `f32` |
//! | `PCDN` | `n: u64`                | `n` x `f64`                     |

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use pairclust_core::{ClusterAssignment, DensityScores, FeatureMatrix, KnnGraph, LabelVector};

use crate::error::{CliError, FormatError};

pub const FORMAT_VERSION: u32 = 1;
pub const FEATURE_MAGIC: [u8; 4] = *b"PCFT";
pub const LABEL_MAGIC: [u8; 4] = *b"PCLB";
pub const KNN_MAGIC: [u8; 4] = *b"PCKN";
pub const DENSITY_MAGIC: [u8; 4] = *b"PCDN";

pub const FEATURE_HEADER_LEN: usize = 20;
pub const LABEL_HEADER_LEN: usize = 16;
pub const KNN_HEADER_LEN: usize = 20;
pub const DENSITY_HEADER_LEN: usize = 16;

/// Little-endian cursor over a byte slice.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take<const N: usize>(&mut self) -> Result<[u8; N], FormatError> {
        let end = self.pos + N;
        let chunk =
            self.bytes.get(self.pos..end).ok_or(FormatError::Truncated { needed: end, actual: self.bytes.len() })?;
        self.pos = end;
        Ok(chunk.try_into().expect("slice of length N"))
    }

    pub(crate) fn magic(&mut self, expected: [u8; 4]) -> Result<(), FormatError> {
        let found = self.take::<4>()?;
        if found != expected {
            return Err(FormatError::BadMagic { expected, found });
        }
        let version = self.u32()?;
        if version != FORMAT_VERSION {
            return Err(FormatError::UnsupportedVersion(version));
        }
        Ok(())
    }

    pub(crate) fn u32(&mut self) -> Result<u32, FormatError> {
        self.take().map(u32::from_le_bytes)
    }

    pub(crate) fn u64(&mut self) -> Result<u64, FormatError> {
        self.take().map(u64::from_le_bytes)
    }

    /// Checks that exactly `payload` bytes remain.
    pub(crate) fn expect_payload(&self, payload: u128) -> Result<(), FormatError> {
        let expected = self.pos as u128 + payload;
        if expected != self.bytes.len() as u128 {
            return Err(FormatError::SizeMismatch { expected, actual: self.bytes.len() as u128 });
        }
        Ok(())
    }

    pub(crate) fn rest(&self) -> &'a [u8] {
        &self.bytes[self.pos..]
    }
}

fn header(magic: [u8; 4], capacity: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(capacity);
    out.extend_from_slice(&magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out
}

fn to_usize(v: u64) -> Result<usize, FormatError> {
    usize::try_from(v).map_err(|_| FormatError::Invalid(format!("count {v} does not fit in memory")))
}

pub fn encode_features(features: &FeatureMatrix) -> Vec<u8> {
    let mut out = header(FEATURE_MAGIC, FEATURE_HEADER_LEN + 4 * features.as_slice().len());
    out.extend_from_slice(&(features.n() as u64).to_le_bytes());
    out.extend_from_slice(&(features.d() as u32).to_le_bytes());
    for v in features.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_features(bytes: &[u8]) -> Result<FeatureMatrix, FormatError> {
    let mut r = Reader::new(bytes);
    r.magic(FEATURE_MAGIC)?;
    let n = r.u64()?;
    let d = r.u32()?;
    r.expect_payload(4 * u128::from(n) * u128::from(d))?;
    let data = r.rest().chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(FeatureMatrix::new(to_usize(n)?, d as usize, data)?)
}

pub fn encode_labels(labels: &LabelVector) -> Vec<u8> {
    let mut out = header(LABEL_MAGIC, LABEL_HEADER_LEN + 8 * labels.len());
    out.extend_from_slice(&(labels.len() as u64).to_le_bytes());
    for v in labels.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_labels(bytes: &[u8]) -> Result<LabelVector, FormatError> {
    let mut r = Reader::new(bytes);
    r.magic(LABEL_MAGIC)?;
    let n = r.u64()?;
    r.expect_payload(8 * u128::from(n))?;
    let labels = r.rest().chunks_exact(8).map(|c| i64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(LabelVector::new(labels)?)
}

/// Maps arbitrary label strings to dense ids in order of first appearance.
#[derive(Debug, Default, Clone)]
pub struct LabelInterner {
    ids: HashMap<String, i64>,
    names: Vec<String>,
}

impl LabelInterner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> i64 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as i64;
        self.ids.insert(name.to_owned(), id);
        self.names.push(name.to_owned());
        id
    }

    /// Names indexed by id.
    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// One label per non-empty line; surrounding whitespace is ignored.
pub fn parse_text_labels(text: &str) -> Result<(LabelVector, LabelInterner), FormatError> {
    let mut interner = LabelInterner::new();
    let ids = text.lines().map(str::trim).filter(|l| !l.is_empty()).map(|l| interner.intern(l)).collect();
    Ok((LabelVector::new(ids)?, interner))
}

pub fn encode_knn(graph: &KnnGraph) -> Vec<u8> {
    let mut out = header(KNN_MAGIC, KNN_HEADER_LEN + 8 * graph.neighbor_slice().len());
    out.extend_from_slice(&(graph.n() as u64).to_le_bytes());
    out.extend_from_slice(&(graph.k() as u32).to_le_bytes());
    for v in graph.neighbor_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in graph.sim_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_knn(bytes: &[u8]) -> Result<KnnGraph, FormatError> {
    let mut r = Reader::new(bytes);
    r.magic(KNN_MAGIC)?;
    let n = r.u64()?;
    let k = r.u32()?;
    let slots = u128::from(n) * u128::from(k);
    r.expect_payload(8 * slots)?;
    let (idx, sims) = r.rest().split_at(4 * slots as usize);
    let neighbors = idx.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
    let sims = sims.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(KnnGraph::new(to_usize(n)?, k as usize, neighbors, sims)?)
}

/// Only the values are stored, so rank-weighted density with `p = 0` and
/// original density produce identical files.
pub fn encode_density(density: &DensityScores) -> Vec<u8> {
    let mut out = header(DENSITY_MAGIC, DENSITY_HEADER_LEN + 8 * density.len());
    out.extend_from_slice(&(density.len() as u64).to_le_bytes());
    for v in &density.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_density(bytes: &[u8]) -> Result<Vec<f64>, FormatError> {
    let mut r = Reader::new(bytes);
    r.magic(DENSITY_MAGIC)?;
    let n = r.u64()?;
    r.expect_payload(8 * u128::from(n))?;
    Ok(r.rest().chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

/// `<sample_index>\t<cluster_id>` per line, in index order.
pub fn encode_assignment(assignment: &ClusterAssignment) -> String {
    let mut out = String::with_capacity(assignment.len() * 12);
    for (i, c) in assignment.as_slice().iter().enumerate() {
        out.push_str(&format!("{i}\t{c}\n"));
    }
    out
}

/// Accepts lines in any order as long as every index in `0..n` appears
/// exactly once. Cluster ids are relabelled by first appearance.
pub fn decode_assignment(text: &str) -> Result<ClusterAssignment, FormatError> {
    let mut rows: Vec<(usize, i64)> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parse = |field: Option<&str>| field.and_then(|f| f.trim().parse::<i64>().ok());
        let mut fields = line.split('\t');
        let (idx, cluster) = (parse(fields.next()), parse(fields.next()));
        match (idx, cluster, fields.next()) {
            (Some(i), Some(c), None) if i >= 0 => rows.push((i as usize, c)),
            _ => {
                return Err(FormatError::Parse {
                    line: line_no + 1,
                    detail: format!("expected `index\\tcluster`, got `{line}`"),
                })
            }
        }
    }
    rows.sort_unstable();
    for (expected, &(i, _)) in rows.iter().enumerate() {
        if i != expected {
            return Err(FormatError::Invalid(format!("sample index {expected} is missing or repeated")));
        }
    }
    if rows.is_empty() {
        return Err(FormatError::Invalid("assignment file is empty".into()));
    }
    let ids: Vec<i64> = rows.into_iter().map(|(_, c)| c).collect();
    Ok(ClusterAssignment::from_raw(&ids))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io { path: path.to_owned(), source };
    let mut file = fs::File::create(path).map_err(io)?;
    file.write_all(bytes).map_err(io)?;
    file.sync_all().map_err(io)
}

fn in_file<T>(path: &Path, result: Result<T, FormatError>) -> Result<T, CliError> {
    result.map_err(|source| CliError::Format { path: path.to_owned(), source })
}

pub fn read_features(path: &Path) -> Result<FeatureMatrix, CliError> {
    in_file(path, decode_features(&read_bytes(path)?))
}

pub fn write_features(path: &Path, features: &FeatureMatrix) -> Result<(), CliError> {
    write_bytes(path, &encode_features(features))
}

/// Reads a `PCLB` file, or falls back to one text label per line.
pub fn read_labels(path: &Path) -> Result<LabelVector, CliError> {
    let bytes = read_bytes(path)?;
    if bytes.starts_with(&LABEL_MAGIC) {
        return in_file(path, decode_labels(&bytes));
    }
    let text = in_file(
        path,
        String::from_utf8(bytes).map_err(|_| FormatError::Invalid("neither PCLB nor UTF-8 text".into())),
    )?;
    in_file(path, parse_text_labels(&text).map(|(labels, _)| labels))
}

pub fn write_labels(path: &Path, labels: &LabelVector) -> Result<(), CliError> {
    write_bytes(path, &encode_labels(labels))
}

pub fn read_assignment(path: &Path) -> Result<ClusterAssignment, CliError> {
    let text =
        in_file(path, String::from_utf8(read_bytes(path)?).map_err(|_| FormatError::Invalid("not UTF-8".into())))?;
    in_file(path, decode_assignment(&text))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    write_bytes(path, text.as_bytes())
}
