//! Volumetric containers and the MCV1 / SEG1 on-disk formats.
//!
//! Both formats are little-endian and share a header prefix:
//!
//! ```text
//! magic      4 bytes   "MCV1" | "SEG1"
//! version    u8        1
//! [C]        u32       channel count (MCV1 only)
//! D, H, W    3 x u32
//! spacing    3 x f32   millimeters per voxel along (D, H, W)
//! ```
//!
//! MCV1 then carries `C` channel names (u16 byte length + UTF-8) and a raw
//! `C*D*H*W` f32 payload. SEG1 carries the declared label set (u8 count +
//! u8 ids) and a raw `D*H*W` u8 payload. Voxels are stored channel-major,
//! then depth, height, width (width fastest).

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

pub const MCV_MAGIC: &[u8; 4] = b"MCV1";
pub const SEG_MAGIC: &[u8; 4] = b"SEG1";
pub const FORMAT_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum VolumeError {
    #[error("magic mismatch: expected {expected:?}, found {found:?}")]
    MagicMismatch { expected: String, found: String },
    #[error("truncated payload: header declares {declared} bytes, {present} present")]
    TruncatedPayload { declared: usize, present: usize },
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("illegal label {value} at voxel {index} (declared set {declared:?})")]
    IllegalLabel {
        value: u8,
        index: usize,
        declared: Vec<u8>,
    },
    #[error("label {0} is not in the declared label set")]
    UnknownLabel(u8),
    #[error("invalid volume: {0}")]
    Invalid(String),
    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Voxel counts along (depth, height, width).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub d: usize,
    pub h: usize,
    pub w: usize,
}

impl Dims {
    pub fn new(d: usize, h: usize, w: usize) -> Self {
        Self { d, h, w }
    }

    pub fn len(&self) -> usize {
        self.d * self.h * self.w
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.d, self.h, self.w]
    }

    #[inline]
    pub fn index(&self, z: usize, y: usize, x: usize) -> usize {
        (z * self.h + y) * self.w + x
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let x = index % self.w;
        let y = (index / self.w) % self.h;
        let z = index / (self.w * self.h);
        [z, y, x]
    }
}

/// Millimeters per voxel along (depth, height, width). Stored as f32 to match
/// the on-disk representation exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spacing(pub [f32; 3]);

impl Spacing {
    pub const UNIT: Spacing = Spacing([1.0, 1.0, 1.0]);

    pub fn as_f64(&self) -> [f64; 3] {
        [self.0[0] as f64, self.0[1] as f64, self.0[2] as f64]
    }

    fn validate(&self) -> Result<(), VolumeError> {
        if self.0.iter().all(|s| s.is_finite() && *s > 0.0) {
            Ok(())
        } else {
            Err(VolumeError::BadHeader(format!(
                "spacing must be finite and positive, got {:?}",
                self.0
            )))
        }
    }
}

impl Default for Spacing {
    fn default() -> Self {
        Spacing::UNIT
    }
}

fn validate_dims(dims: Dims) -> Result<(), VolumeError> {
    if dims.d == 0 || dims.h == 0 || dims.w == 0 {
        return Err(VolumeError::BadHeader(format!(
            "dimensions must be positive, got {:?}",
            dims.as_array()
        )));
    }
    if dims.d > u32::MAX as usize || dims.h > u32::MAX as usize || dims.w > u32::MAX as usize {
        return Err(VolumeError::BadHeader("dimension exceeds u32".into()));
    }
    Ok(())
}

/// A C-channel 3-D scalar field: the model input.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiContrastVolume {
    dims: Dims,
    spacing: Spacing,
    channel_names: Vec<String>,
    data: Vec<f32>,
}

impl MultiContrastVolume {
    pub fn new(
        channel_names: Vec<String>,
        dims: Dims,
        spacing: Spacing,
        data: Vec<f32>,
    ) -> Result<Self, VolumeError> {
        validate_dims(dims)?;
        spacing.validate()?;
        if channel_names.is_empty() {
            return Err(VolumeError::Invalid("at least one channel required".into()));
        }
        let unique: BTreeSet<&str> = channel_names.iter().map(String::as_str).collect();
        if unique.len() != channel_names.len() {
            return Err(VolumeError::Invalid(format!(
                "channel names must be unique: {channel_names:?}"
            )));
        }
        if channel_names.iter().any(|n| n.len() > u16::MAX as usize) {
            return Err(VolumeError::Invalid("channel name too long".into()));
        }
        let expected = channel_names.len() * dims.len();
        if data.len() != expected {
            return Err(VolumeError::Invalid(format!(
                "data length {} != C*D*H*W = {expected}",
                data.len()
            )));
        }
        Ok(Self {
            dims,
            spacing,
            channel_names,
            data,
        })
    }

    pub fn zeros(channel_names: Vec<String>, dims: Dims, spacing: Spacing) -> Result<Self, VolumeError> {
        let n = channel_names.len() * dims.len();
        Self::new(channel_names, dims, spacing, vec![0.0; n])
    }

    pub fn channels(&self) -> usize {
        self.channel_names.len()
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.dims.len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f32] {
        let n = self.dims.len();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channel_names.iter().position(|n| n == name)
    }

    /// Returns a copy whose channels follow `order` (matched by name).
    pub fn reordered(&self, order: &[String]) -> Result<Self, VolumeError> {
        if order.len() != self.channels() {
            return Err(VolumeError::Invalid(format!(
                "cannot reorder {:?} into {order:?}",
                self.channel_names
            )));
        }
        let mut data = Vec::with_capacity(self.data.len());
        for name in order {
            let c = self.channel_index(name).ok_or_else(|| {
                VolumeError::Invalid(format!("channel {name:?} not present in {:?}", self.channel_names))
            })?;
            data.extend_from_slice(self.channel(c));
        }
        Self::new(order.to_vec(), self.dims, self.spacing, data)
    }
}

/// A 3-D integer segmentation over disjoint classes; 0 is background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    dims: Dims,
    spacing: Spacing,
    label_set: Vec<u8>,
    labels: Vec<u8>,
}

// Spacing is f32 but always finite, so Eq is sound.
impl Eq for Spacing {}

impl LabelMap {
    pub fn new(dims: Dims, spacing: Spacing, label_set: Vec<u8>, labels: Vec<u8>) -> Result<Self, VolumeError> {
        validate_dims(dims)?;
        spacing.validate()?;
        let label_set = normalize_label_set(label_set)?;
        if labels.len() != dims.len() {
            return Err(VolumeError::Invalid(format!(
                "label length {} != D*H*W = {}",
                labels.len(),
                dims.len()
            )));
        }
        let mut allowed = [false; 256];
        allowed[0] = true;
        for &l in &label_set {
            allowed[l as usize] = true;
        }
        if let Some((index, &value)) = labels.iter().enumerate().find(|(_, v)| !allowed[**v as usize]) {
            return Err(VolumeError::IllegalLabel {
                value,
                index,
                declared: label_set,
            });
        }
        Ok(Self {
            dims,
            spacing,
            label_set,
            labels,
        })
    }

    pub fn background(dims: Dims, spacing: Spacing, label_set: Vec<u8>) -> Result<Self, VolumeError> {
        Self::new(dims, spacing, label_set, vec![0; dims.len()])
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn label_set(&self) -> &[u8] {
        &self.label_set
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Per-label view: bit set iff the voxel carries `label`.
    pub fn one_hot(&self, label: u8) -> Result<BinaryMask, VolumeError> {
        if !self.label_set.contains(&label) {
            return Err(VolumeError::UnknownLabel(label));
        }
        Ok(BinaryMask {
            dims: self.dims,
            spacing: self.spacing,
            bits: self.labels.iter().map(|&v| v == label).collect(),
        })
    }

    pub fn foreground(&self) -> BinaryMask {
        BinaryMask {
            dims: self.dims,
            spacing: self.spacing,
            bits: self.labels.iter().map(|&v| v != 0).collect(),
        }
    }
}

fn normalize_label_set(mut set: Vec<u8>) -> Result<Vec<u8>, VolumeError> {
    set.sort_unstable();
    let before = set.len();
    set.dedup();
    if set.len() != before {
        return Err(VolumeError::Invalid("label set contains duplicates".into()));
    }
    if set.first() == Some(&0) {
        return Err(VolumeError::Invalid("label 0 is background and cannot be declared".into()));
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    dims: Dims,
    spacing: Spacing,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(dims: Dims, spacing: Spacing, bits: Vec<bool>) -> Result<Self, VolumeError> {
        validate_dims(dims)?;
        spacing.validate()?;
        if bits.len() != dims.len() {
            return Err(VolumeError::Invalid(format!(
                "mask length {} != D*H*W = {}",
                bits.len(),
                dims.len()
            )));
        }
        Ok(Self { dims, spacing, bits })
    }

    pub fn empty(dims: Dims, spacing: Spacing) -> Result<Self, VolumeError> {
        Self::new(dims, spacing, vec![false; dims.len()])
    }

    pub fn from_indices(dims: Dims, spacing: Spacing, indices: &[usize]) -> Result<Self, VolumeError> {
        let mut bits = vec![false; dims.len()];
        for &i in indices {
            if i >= bits.len() {
                return Err(VolumeError::Invalid(format!("voxel index {i} out of range")));
            }
            bits[i] = true;
        }
        Self::new(dims, spacing, bits)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, z: usize, y: usize, x: usize) -> bool {
        self.bits[self.dims.index(z, y, x)]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    pub fn with_spacing(&self, spacing: Spacing) -> Result<Self, VolumeError> {
        spacing.validate()?;
        Ok(Self {
            spacing,
            ..self.clone()
        })
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], VolumeError> {
        if self.pos + n > self.buf.len() {
            return Err(VolumeError::BadHeader(format!(
                "header truncated at byte {} (need {n} more)",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, VolumeError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, VolumeError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, VolumeError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, VolumeError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn rest(&self) -> &'a [u8] {
        &self.buf[self.pos..]
    }
}

fn check_magic(cur: &mut Cursor<'_>, magic: &[u8; 4]) -> Result<(), VolumeError> {
    let found = cur.take(4).map_err(|_| VolumeError::MagicMismatch {
        expected: String::from_utf8_lossy(magic).into_owned(),
        found: String::from_utf8_lossy(cur.buf).into_owned(),
    })?;
    if found != magic {
        return Err(VolumeError::MagicMismatch {
            expected: String::from_utf8_lossy(magic).into_owned(),
            found: String::from_utf8_lossy(found).into_owned(),
        });
    }
    let version = cur.u8()?;
    if version != FORMAT_VERSION {
        return Err(VolumeError::BadHeader(format!("unsupported version {version}")));
    }
    Ok(())
}

fn read_geometry(cur: &mut Cursor<'_>) -> Result<(Dims, Spacing), VolumeError> {
    let d = cur.u32()? as usize;
    let h = cur.u32()? as usize;
    let w = cur.u32()? as usize;
    let dims = Dims::new(d, h, w);
    validate_dims(dims)?;
    let spacing = Spacing([cur.f32()?, cur.f32()?, cur.f32()?]);
    spacing.validate()?;
    Ok((dims, spacing))
}

fn check_payload(rest: &[u8], declared: usize) -> Result<(), VolumeError> {
    if rest.len() != declared {
        return Err(VolumeError::TruncatedPayload {
            declared,
            present: rest.len(),
        });
    }
    Ok(())
}

fn write_geometry(buf: &mut Vec<u8>, dims: Dims, spacing: Spacing) {
    for v in dims.as_array() {
        buf.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for s in spacing.0 {
        buf.extend_from_slice(&s.to_le_bytes());
    }
}

pub fn encode_mcv(volume: &MultiContrastVolume) -> Vec<u8> {
    let mut buf = Vec::with_capacity(mcv_header_len(volume) + volume.data.len() * 4);
    buf.extend_from_slice(MCV_MAGIC);
    buf.push(FORMAT_VERSION);
    buf.extend_from_slice(&(volume.channels() as u32).to_le_bytes());
    write_geometry(&mut buf, volume.dims, volume.spacing);
    for name in &volume.channel_names {
        buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
    }
    for v in &volume.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

/// Header size in bytes for `volume` (everything before the f32 payload).
pub fn mcv_header_len(volume: &MultiContrastVolume) -> usize {
    4 + 1 + 4 + 12 + 12 + volume.channel_names.iter().map(|n| 2 + n.len()).sum::<usize>()
}

pub fn decode_mcv(bytes: &[u8]) -> Result<MultiContrastVolume, VolumeError> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    check_magic(&mut cur, MCV_MAGIC)?;
    let c = cur.u32()? as usize;
    if c == 0 {
        return Err(VolumeError::BadHeader("channel count must be positive".into()));
    }
    let (dims, spacing) = read_geometry(&mut cur)?;
    let mut names = Vec::with_capacity(c);
    for _ in 0..c {
        let len = cur.u16()? as usize;
        let raw = cur.take(len)?;
        let name = std::str::from_utf8(raw)
            .map_err(|e| VolumeError::BadHeader(format!("channel name is not UTF-8: {e}")))?;
        names.push(name.to_string());
    }
    let declared = c
        .checked_mul(dims.len())
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| VolumeError::BadHeader("payload size overflows".into()))?;
    let rest = cur.rest();
    check_payload(rest, declared)?;
    let data = rest
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    MultiContrastVolume::new(names, dims, spacing, data).map_err(|e| match e {
        VolumeError::Invalid(m) => VolumeError::BadHeader(m),
        other => other,
    })
}

pub fn encode_seg(map: &LabelMap) -> Vec<u8> {
    let mut buf = Vec::with_capacity(4 + 1 + 24 + 1 + map.label_set.len() + map.labels.len());
    buf.extend_from_slice(SEG_MAGIC);
    buf.push(FORMAT_VERSION);
    write_geometry(&mut buf, map.dims, map.spacing);
    buf.push(map.label_set.len() as u8);
    buf.extend_from_slice(&map.label_set);
    buf.extend_from_slice(&map.labels);
    buf
}

pub fn decode_seg(bytes: &[u8]) -> Result<LabelMap, VolumeError> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    check_magic(&mut cur, SEG_MAGIC)?;
    let (dims, spacing) = read_geometry(&mut cur)?;
    let n = cur.u8()? as usize;
    let label_set = cur.take(n)?.to_vec();
    let rest = cur.rest();
    check_payload(rest, dims.len())?;
    LabelMap::new(dims, spacing, label_set, rest.to_vec()).map_err(|e| match e {
        VolumeError::Invalid(m) => VolumeError::BadHeader(m),
        other => other,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> VolumeError + '_ {
    move |source| VolumeError::IoFailure {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_mcv(path: impl AsRef<Path>) -> Result<MultiContrastVolume, VolumeError> {
    let path = path.as_ref();
    decode_mcv(&fs::read(path).map_err(io_err(path))?)
}

pub fn write_mcv(volume: &MultiContrastVolume, path: impl AsRef<Path>) -> Result<(), VolumeError> {
    write_atomic(path.as_ref(), &encode_mcv(volume))
}

pub fn read_seg(path: impl AsRef<Path>) -> Result<LabelMap, VolumeError> {
    let path = path.as_ref();
    decode_seg(&fs::read(path).map_err(io_err(path))?)
}

pub fn write_seg(map: &LabelMap, path: impl AsRef<Path>) -> Result<(), VolumeError> {
    write_atomic(path.as_ref(), &encode_seg(map))
}

/// Writes through a sibling temp file and renames into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), VolumeError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| VolumeError::IoFailure {
        path: path.display().to_string(),
        source: e.error,
    })?;
    Ok(())
}
