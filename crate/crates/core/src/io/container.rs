//! The SOCO binary container for datasets and attribution maps.
//!
//! ```text
//! magic    4 bytes  "SOCO"
//! version  u16      1
//! kind     u8       1 = dataset, 2 = maps
//! dtype    u8       1 = f32, 2 = f64
//! rank     u8       2 for (n, d), 4 for (n, h, w, c)
//! dims     rank × u64
//! dataset payload: n_classes u32, n × id u64, n × label u32, n·d values
//! maps payload:    dataset digest (32 bytes), n × id u64, n × normalized u8, n·d values
//! ```
//!
//! Everything is little-endian and row-major. Values are written as f32 when
//! every one of them is exactly representable, otherwise as f64, so reading
//! back always reproduces the original bits. Files starting with `{` are read
//! as JSON instead.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::write_atomic;
use crate::error::{Error, FormatError, Result};
use crate::types::{AttributionMap, Dataset, Sample, Shape};

pub const MAGIC: [u8; 4] = *b"SOCO";
pub const VERSION: u16 = 1;

const KIND_DATASET: u8 = 1;
const KIND_MAPS: u8 = 2;
const DTYPE_F32: u8 = 1;
const DTYPE_F64: u8 = 2;

/// SHA-256 over the shape, ids, labels and feature bits of a dataset.
pub fn dataset_digest(dataset: &Dataset) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(shape_dims(dataset.len(), dataset.shape()).iter().flat_map(|d| d.to_le_bytes()).collect::<Vec<u8>>());
    h.update((dataset.n_classes() as u32).to_le_bytes());
    for (x, y) in dataset.iter() {
        h.update(x.id().to_le_bytes());
        h.update((y as u32).to_le_bytes());
        for v in x.features() {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    h.finalize().into()
}

fn shape_dims(n: usize, shape: Shape) -> Vec<u64> {
    match shape {
        Shape::Flat(d) => vec![n as u64, d as u64],
        Shape::Grid { height, width, channels } => vec![n as u64, height as u64, width as u64, channels as u64],
    }
}

fn fits_f32(values: &[f64]) -> bool {
    values.iter().all(|&v| (v as f32) as f64 == v)
}

struct Writer(Vec<u8>);

impl Writer {
    fn header(kind: u8, dtype: u8, n: usize, shape: Shape) -> Self {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(&MAGIC);
        w.0.extend_from_slice(&VERSION.to_le_bytes());
        let dims = shape_dims(n, shape);
        w.0.extend_from_slice(&[kind, dtype, dims.len() as u8]);
        for d in dims {
            w.0.extend_from_slice(&d.to_le_bytes());
        }
        w
    }

    fn values<'a>(&mut self, dtype: u8, values: impl Iterator<Item = &'a f64>) {
        for &v in values {
            if dtype == DTYPE_F32 {
                self.0.extend_from_slice(&(v as f32).to_le_bytes());
            } else {
                self.0.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let available = self.buf.len() - self.pos;
        if n > available {
            return Err(FormatError::Truncated { needed: n, available });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn values(&mut self, dtype: u8, count: usize) -> Result<Vec<f64>, FormatError> {
        let width = if dtype == DTYPE_F32 { 4 } else { 8 };
        let needed = count.checked_mul(width).ok_or(FormatError::Truncated { needed: usize::MAX, available: 0 })?;
        let raw = self.take(needed)?;
        Ok(if dtype == DTYPE_F32 {
            raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect()
        } else {
            raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect()
        })
    }
}

struct Header {
    kind: u8,
    dtype: u8,
    n: usize,
    shape: Shape,
}

fn read_header(r: &mut Reader<'_>) -> Result<Header, FormatError> {
    let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
    if magic != MAGIC {
        return Err(FormatError::BadMagic(magic));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(FormatError::VersionMismatch { found: version, supported: VERSION });
    }
    let kind = r.u8()?;
    let dtype = r.u8()?;
    if dtype != DTYPE_F32 && dtype != DTYPE_F64 {
        return Err(FormatError::UnknownDtype(dtype));
    }
    let rank = r.u8()?;
    let mut dims = Vec::with_capacity(rank as usize);
    for _ in 0..rank {
        dims.push(r.u64()? as usize);
    }
    let shape = match dims[..] {
        [_, d] => Shape::Flat(d),
        [_, height, width, channels] => Shape::Grid { height, width, channels },
        _ => return Err(FormatError::BadRank(rank)),
    };
    Ok(Header { kind, dtype, n: dims[0], shape })
}

pub fn encode_dataset(dataset: &Dataset) -> Vec<u8> {
    let all: Vec<f64> = dataset.samples().iter().flat_map(|s| s.features().iter().copied()).collect();
    let dtype = if fits_f32(&all) { DTYPE_F32 } else { DTYPE_F64 };
    let mut w = Writer::header(KIND_DATASET, dtype, dataset.len(), dataset.shape());
    w.0.extend_from_slice(&(dataset.n_classes() as u32).to_le_bytes());
    for s in dataset.samples() {
        w.0.extend_from_slice(&s.id().to_le_bytes());
    }
    for &y in dataset.labels() {
        w.0.extend_from_slice(&(y as u32).to_le_bytes());
    }
    w.values(dtype, all.iter());
    w.0
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Dataset> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let h = read_header(&mut r)?;
    if h.kind != KIND_DATASET {
        return Err(FormatError::WrongKind(h.kind).into());
    }
    let n_classes = r.u32()? as usize;
    let ids = (0..h.n).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;
    let labels = (0..h.n).map(|_| r.u32().map(|v| v as usize)).collect::<Result<Vec<_>, _>>()?;
    let d = h.shape.len();
    let values = r.values(h.dtype, h.n * d)?;
    let samples = ids
        .into_iter()
        .enumerate()
        .map(|(i, id)| Sample::new(id, h.shape, values[i * d..(i + 1) * d].to_vec()))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(samples, labels, n_classes)
}

/// Maps plus the identity of the dataset they were computed for.
#[derive(Clone, Debug, PartialEq)]
pub struct MapFile {
    pub dataset_digest: [u8; 32],
    pub sample_ids: Vec<u64>,
    pub maps: Vec<AttributionMap>,
}

impl MapFile {
    pub fn new(dataset: &Dataset, maps: Vec<AttributionMap>) -> Result<Self> {
        if maps.len() != dataset.len() {
            return Err(FormatError::Misaligned(format!("{} maps for {} samples", maps.len(), dataset.len())).into());
        }
        Ok(MapFile {
            dataset_digest: dataset_digest(dataset),
            sample_ids: dataset.samples().iter().map(|s| s.id()).collect(),
            maps,
        })
    }

    /// The maps, after checking they were written for exactly this dataset.
    pub fn aligned_to(self, dataset: &Dataset) -> Result<Vec<AttributionMap>> {
        if self.maps.len() != dataset.len() {
            return Err(FormatError::Misaligned(format!("{} maps for {} samples", self.maps.len(), dataset.len())).into());
        }
        if self.dataset_digest != dataset_digest(dataset) {
            return Err(FormatError::Misaligned("dataset digest differs".into()).into());
        }
        if self.sample_ids.iter().zip(dataset.samples()).any(|(&id, s)| id != s.id()) {
            return Err(FormatError::Misaligned("sample ids differ".into()).into());
        }
        Ok(self.maps)
    }
}

pub fn encode_maps(file: &MapFile) -> Result<Vec<u8>> {
    let shape = file.maps.first().map_or(Shape::Flat(0), |m| m.shape());
    if file.maps.iter().any(|m| m.shape() != shape) {
        return Err(Error::ShapeMismatch("maps of different shapes in one file".into()));
    }
    let all: Vec<f64> = file.maps.iter().flat_map(|m| m.values().iter().copied()).collect();
    let dtype = if fits_f32(&all) { DTYPE_F32 } else { DTYPE_F64 };
    let mut w = Writer::header(KIND_MAPS, dtype, file.maps.len(), shape);
    w.0.extend_from_slice(&file.dataset_digest);
    for id in &file.sample_ids {
        w.0.extend_from_slice(&id.to_le_bytes());
    }
    for m in &file.maps {
        w.0.push(u8::from(m.is_normalized()));
    }
    w.values(dtype, all.iter());
    Ok(w.0)
}

pub fn decode_maps(bytes: &[u8]) -> Result<MapFile> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let h = read_header(&mut r)?;
    if h.kind != KIND_MAPS {
        return Err(FormatError::WrongKind(h.kind).into());
    }
    let dataset_digest: [u8; 32] = r.take(32)?.try_into().unwrap();
    let sample_ids = (0..h.n).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;
    let flags = (0..h.n).map(|_| r.u8()).collect::<Result<Vec<_>, _>>()?;
    let d = h.shape.len();
    let values = r.values(h.dtype, h.n * d)?;
    let maps = flags
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let v = values[i * d..(i + 1) * d].to_vec();
            if f == 1 {
                AttributionMap::new_normalized(h.shape, v)
            } else {
                AttributionMap::new(h.shape, v)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MapFile { dataset_digest, sample_ids, maps })
}

#[derive(Serialize, Deserialize)]
struct JsonSample {
    id: u64,
    label: usize,
    features: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JsonDataset {
    shape: Shape,
    n_classes: usize,
    samples: Vec<JsonSample>,
}

#[derive(Serialize, Deserialize)]
struct JsonMap {
    id: u64,
    #[serde(default)]
    normalized: bool,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JsonMaps {
    shape: Shape,
    /// Hex SHA-256 of the dataset; omitted in hand-written fixtures.
    #[serde(default)]
    dataset_digest: Option<String>,
    maps: Vec<JsonMap>,
}

fn json_err(e: serde_json::Error) -> Error {
    FormatError::Json(e.to_string()).into()
}

pub fn dataset_to_json(dataset: &Dataset) -> String {
    let doc = JsonDataset {
        shape: dataset.shape(),
        n_classes: dataset.n_classes(),
        samples: dataset
            .iter()
            .map(|(x, y)| JsonSample { id: x.id(), label: y, features: x.features().to_vec() })
            .collect(),
    };
    serde_json::to_string(&doc).expect("dataset serializes")
}

pub fn dataset_from_json(text: &str) -> Result<Dataset> {
    let doc: JsonDataset = serde_json::from_str(text).map_err(json_err)?;
    let mut samples = Vec::with_capacity(doc.samples.len());
    let mut labels = Vec::with_capacity(doc.samples.len());
    for s in doc.samples {
        samples.push(Sample::new(s.id, doc.shape, s.features)?);
        labels.push(s.label);
    }
    Dataset::new(samples, labels, doc.n_classes)
}

pub fn maps_to_json(file: &MapFile) -> String {
    let shape = file.maps.first().map_or(Shape::Flat(0), |m| m.shape());
    let doc = JsonMaps {
        shape,
        dataset_digest: Some(hex::encode(file.dataset_digest)),
        maps: file
            .maps
            .iter()
            .zip(&file.sample_ids)
            .map(|(m, &id)| JsonMap { id, normalized: m.is_normalized(), values: m.values().to_vec() })
            .collect(),
    };
    serde_json::to_string(&doc).expect("maps serialize")
}

/// JSON maps without a digest are accepted; they are then only checked by
/// count and sample id when aligned.
pub fn maps_from_json(text: &str) -> Result<(MapFile, bool)> {
    let doc: JsonMaps = serde_json::from_str(text).map_err(json_err)?;
    let digest = match &doc.dataset_digest {
        Some(h) => {
            let bytes = hex::decode(h).map_err(|e| FormatError::Json(format!("dataset_digest: {e}")))?;
            bytes.try_into().map_err(|_| FormatError::Json("dataset_digest must be 32 bytes".into()))?
        }
        None => [0u8; 32],
    };
    let has_digest = doc.dataset_digest.is_some();
    let mut ids = Vec::with_capacity(doc.maps.len());
    let mut maps = Vec::with_capacity(doc.maps.len());
    for m in doc.maps {
        ids.push(m.id);
        maps.push(if m.normalized {
            AttributionMap::new_normalized(doc.shape, m.values)?
        } else {
            AttributionMap::new(doc.shape, m.values)?
        });
    }
    Ok((MapFile { dataset_digest: digest, sample_ids: ids, maps }, has_digest))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn is_json(bytes: &[u8]) -> bool {
    bytes.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'{')
}

fn wants_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let bytes = read_bytes(path)?;
    if is_json(&bytes) {
        dataset_from_json(&String::from_utf8_lossy(&bytes))
    } else {
        decode_dataset(&bytes)
    }
}

/// Writes SOCO, or JSON when the path ends in `.json`.
pub fn write_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let bytes = if wants_json(path) { dataset_to_json(dataset).into_bytes() } else { encode_dataset(dataset) };
    write_atomic(path, &bytes)
}

/// Reads a map file without aligning it; see [`MapFile::aligned_to`].
pub fn read_maps(path: &Path) -> Result<MapFile> {
    let bytes = read_bytes(path)?;
    if is_json(&bytes) {
        Ok(maps_from_json(&String::from_utf8_lossy(&bytes))?.0)
    } else {
        decode_maps(&bytes)
    }
}

/// Reads maps and checks them against `dataset`.
pub fn read_maps_for(path: &Path, dataset: &Dataset) -> Result<Vec<AttributionMap>> {
    let bytes = read_bytes(path)?;
    if is_json(&bytes) {
        let (mut file, has_digest) = maps_from_json(&String::from_utf8_lossy(&bytes))?;
        if !has_digest {
            file.dataset_digest = dataset_digest(dataset);
        }
        file.aligned_to(dataset)
    } else {
        decode_maps(&bytes)?.aligned_to(dataset)
    }
}

pub fn write_maps(dataset: &Dataset, maps: &[AttributionMap], path: &Path) -> Result<()> {
    let file = MapFile::new(dataset, maps.to_vec())?;
    let bytes = if wants_json(path) { maps_to_json(&file).into_bytes() } else { encode_maps(&file)? };
    write_atomic(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_dataset() -> Dataset {
        let shape = Shape::Grid { height: 2, width: 3, channels: 2 };
        let xs = (0..3).map(|i| Sample::new(i + 10, shape, (0..12).map(|k| (k as f64 + 0.1) * i as f64).collect()).unwrap()).collect();
        Dataset::new(xs, vec![0, 1, 2], 3).unwrap()
    }

    #[test]
    fn dataset_round_trip_keeps_bits_and_shape() {
        let ds = grid_dataset();
        let back = decode_dataset(&encode_dataset(&ds)).unwrap();
        assert_eq!(back, ds);
        assert_eq!(dataset_from_json(&dataset_to_json(&ds)).unwrap(), ds);
    }

    #[test]
    fn f32_values_use_the_compact_dtype() {
        let xs = vec![Sample::flat(0, vec![0.5, 1.25]).unwrap()];
        let ds = Dataset::new(xs, vec![0], 1).unwrap();
        let bytes = encode_dataset(&ds);
        assert_eq!(bytes[7], DTYPE_F32);
        assert_eq!(decode_dataset(&bytes).unwrap(), ds);
    }

    #[test]
    fn header_errors_are_distinct() {
        let mut bytes = encode_dataset(&grid_dataset());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_dataset(&bad), Err(Error::Format(FormatError::BadMagic(_)))));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(decode_dataset(&bad), Err(Error::Format(FormatError::VersionMismatch { found: 9, .. }))));
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(decode_dataset(&bytes), Err(Error::Format(FormatError::Truncated { .. }))));
    }

    #[test]
    fn maps_round_trip_and_alignment() {
        let ds = grid_dataset();
        let maps: Vec<AttributionMap> = ds
            .samples()
            .iter()
            .map(|s| crate::normalize_attribution(s.shape(), s.features()).unwrap())
            .collect();
        let file = MapFile::new(&ds, maps.clone()).unwrap();
        let back = decode_maps(&encode_maps(&file).unwrap()).unwrap();
        assert_eq!(back.clone().aligned_to(&ds).unwrap(), maps);
        let (json_back, _) = maps_from_json(&maps_to_json(&file)).unwrap();
        assert_eq!(json_back, file);

        let other = Dataset::new(ds.samples()[..2].to_vec(), vec![0, 1], 3).unwrap();
        assert!(matches!(back.aligned_to(&other), Err(Error::Format(FormatError::Misaligned(_)))));
    }

    #[test]
    fn negative_map_values_are_rejected() {
        let text = r#"{"shape":{"flat":2},"maps":[{"id":0,"values":[0.5,-1.0]}]}"#;
        assert!(matches!(maps_from_json(text), Err(Error::NegativeAttribution(_))));
    }
}
