//! Recording and dataset ingestion plus flat-file persistence of pipeline
//! artifacts (ENF sequences, feature vectors, trained classifiers).
//!
//! Supported inputs are mono 16-bit PCM WAV files and single-column CSV files
//! of raw samples. All persisted numeric formats are text based so artifacts
//! diff cleanly; reals are written with 17 significant digits, which
//! round-trips `f64` exactly.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::enf::{EnfFrame, EnfSequence, FramingPolicy};
use crate::error::{Error, Result};
use crate::features::{Category, FeatureVector, ALL_FEATURE_NAMES};

/// A sampled waveform plus provenance metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub id: String,
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
    pub label: Option<GridLabel>,
    pub kind_hint: Option<SignalKind>,
}

impl Recording {
    pub fn new(id: impl Into<String>, samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        let rec = Recording {
            id: id.into(),
            samples,
            sample_rate_hz,
            label: None,
            kind_hint: None,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::InvalidInput("recording has no samples".into()));
        }
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sample rate must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        if let Some(i) = self.samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(())
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }
}

/// Power-grid class labels. `NoG` ("none of the grids") is only ever a
/// prediction, never a training label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GridLabel {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
    I,
    NoG,
}

impl GridLabel {
    /// All trainable grid labels, in lexicographic order.
    pub const GRIDS: [GridLabel; 9] = [
        GridLabel::A,
        GridLabel::B,
        GridLabel::C,
        GridLabel::D,
        GridLabel::E,
        GridLabel::F,
        GridLabel::G,
        GridLabel::H,
        GridLabel::I,
    ];

    /// Nominal mains frequency of the grid; `None` for `NoG`.
    pub fn nominal_hz(self) -> Option<u32> {
        match self {
            GridLabel::A | GridLabel::C | GridLabel::I => Some(60),
            GridLabel::NoG => None,
            _ => Some(50),
        }
    }
}

impl fmt::Display for GridLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GridLabel::A => "A",
            GridLabel::B => "B",
            GridLabel::C => "C",
            GridLabel::D => "D",
            GridLabel::E => "E",
            GridLabel::F => "F",
            GridLabel::G => "G",
            GridLabel::H => "H",
            GridLabel::I => "I",
            GridLabel::NoG => "NoG",
        };
        f.write_str(s)
    }
}

impl FromStr for GridLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "A" => Ok(GridLabel::A),
            "B" => Ok(GridLabel::B),
            "C" => Ok(GridLabel::C),
            "D" => Ok(GridLabel::D),
            "E" => Ok(GridLabel::E),
            "F" => Ok(GridLabel::F),
            "G" => Ok(GridLabel::G),
            "H" => Ok(GridLabel::H),
            "I" => Ok(GridLabel::I),
            "NoG" => Ok(GridLabel::NoG),
            other => Err(format!("unknown label '{other}'")),
        }
    }
}

/// Whether a recording was captured from the mains line or a microphone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    Power,
    Audio,
}

impl SignalKind {
    pub fn framing(self) -> FramingPolicy {
        match self {
            SignalKind::Power => FramingPolicy::power(),
            SignalKind::Audio => FramingPolicy::audio(),
        }
    }
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalKind::Power => f.write_str("power"),
            SignalKind::Audio => f.write_str("audio"),
        }
    }
}

impl FromStr for SignalKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "power" => Ok(SignalKind::Power),
            "audio" => Ok(SignalKind::Audio),
            other => Err(format!("unknown signal kind '{other}'")),
        }
    }
}

/// Train/test split assignment of a manifest entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Split::Train => f.write_str("Train"),
            Split::Test => f.write_str("Test"),
        }
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: String,
    pub label: Option<GridLabel>,
    pub split: Split,
}

/// Declarative listing of recordings, labels, and split assignments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub format_version: u32,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let manifest = DatasetManifest {
            entries,
            format_version: MANIFEST_VERSION,
        };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for entry in &self.entries {
            if !seen.insert(entry.path.as_str()) {
                return Err(Error::Manifest(format!("duplicate path '{}'", entry.path)));
            }
            if entry.split == Split::Train {
                match entry.label {
                    None => {
                        return Err(Error::Manifest(format!(
                            "train entry '{}' has no label",
                            entry.path
                        )))
                    }
                    Some(GridLabel::NoG) => {
                        return Err(Error::Manifest(format!(
                            "train entry '{}' is labeled NoG, which is only a prediction",
                            entry.path
                        )))
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(())
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }
}

const MANIFEST_VERSION: u32 = 1;

/// Turn a recording path into a filesystem-safe artifact identifier.
///
/// Path separators and other separator-like characters become `_` so that
/// ids from nested paths stay unique enough for flat artifact directories.
pub fn source_id_for_path(path: &str) -> String {
    let stem = path.strip_suffix(".wav").or_else(|| path.strip_suffix(".csv")).unwrap_or(path);
    stem.chars()
        .map(|c| match c {
            '/' | '\\' | ':' | ' ' => '_',
            c => c,
        })
        .collect()
}

/// Load a recording from a mono 16-bit PCM WAV file or a single-column CSV.
///
/// WAV samples are normalized to `[-1, 1]` by dividing by 32768; the sample
/// rate comes from the header unless overridden. CSV values are taken as-is
/// and `sample_rate_override` is mandatory because the format carries none.
pub fn load_recording(path: impl AsRef<Path>, sample_rate_override: Option<f64>) -> Result<Recording> {
    let path = path.as_ref();
    if let Some(rate) = sample_rate_override {
        if !(rate > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sample rate override must be positive, got {rate}"
            )));
        }
    }
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    let id = source_id_for_path(&path.to_string_lossy());
    match ext.as_deref() {
        Some("csv") | Some("txt") => {
            let rate = sample_rate_override.ok_or_else(|| {
                Error::InvalidInput(format!(
                    "csv recording {} requires an explicit sample rate",
                    path.display()
                ))
            })?;
            let samples = read_sample_csv(path)?;
            Recording::new(id, samples, rate)
        }
        _ => {
            let (samples, header_rate) = read_wav_pcm16_mono(path)?;
            Recording::new(id, samples, sample_rate_override.unwrap_or(header_rate))
        }
    }
}

fn read_sample_csv(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value: f64 = line
            .parse()
            .map_err(|_| Error::parse(path, i + 1, format!("non-numeric sample '{line}'")))?;
        samples.push(value);
    }
    if samples.is_empty() {
        return Err(Error::parse(path, 1, "no samples in file"));
    }
    Ok(samples)
}

fn read_exact_bytes<'a>(data: &'a [u8], offset: usize, len: usize, path: &Path) -> Result<&'a [u8]> {
    data.get(offset..offset + len).ok_or_else(|| Error::UnsupportedWav {
        path: path.to_path_buf(),
        msg: "truncated file".into(),
    })
}

fn u32_le(b: &[u8]) -> u32 {
    u32::from_le_bytes([b[0], b[1], b[2], b[3]])
}

fn u16_le(b: &[u8]) -> u16 {
    u16::from_le_bytes([b[0], b[1]])
}

/// Minimal RIFF/WAVE reader for format tag 1 (PCM), 16-bit, one channel.
fn read_wav_pcm16_mono(path: &Path) -> Result<(Vec<f64>, f64)> {
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut data = Vec::new();
    file.read_to_end(&mut data).map_err(|e| Error::io(path, e))?;

    let unsupported = |msg: &str| Error::UnsupportedWav {
        path: path.to_path_buf(),
        msg: msg.into(),
    };

    if read_exact_bytes(&data, 0, 4, path)? != b"RIFF" {
        return Err(unsupported("missing RIFF header"));
    }
    if read_exact_bytes(&data, 8, 4, path)? != b"WAVE" {
        return Err(unsupported("missing WAVE tag"));
    }

    let mut offset = 12;
    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (format, channels, rate, bits)
    let mut pcm: Option<&[u8]> = None;
    while offset + 8 <= data.len() {
        let tag = read_exact_bytes(&data, offset, 4, path)?;
        let size = u32_le(read_exact_bytes(&data, offset + 4, 4, path)?) as usize;
        let body = read_exact_bytes(&data, offset + 8, size, path)?;
        match tag {
            b"fmt " => {
                if size < 16 {
                    return Err(unsupported("fmt chunk too short"));
                }
                fmt = Some((
                    u16_le(&body[0..2]),
                    u16_le(&body[2..4]),
                    u32_le(&body[4..8]),
                    u16_le(&body[14..16]),
                ));
            }
            b"data" => pcm = Some(body),
            _ => {}
        }
        // chunks are word aligned
        offset += 8 + size + (size & 1);
    }

    let (format, channels, rate, bits) = fmt.ok_or_else(|| unsupported("no fmt chunk"))?;
    if format != 1 {
        return Err(unsupported(&format!("format tag {format}, only PCM (1) supported")));
    }
    if channels != 1 {
        return Err(unsupported(&format!("{channels} channels, only mono supported")));
    }
    if bits != 16 {
        return Err(unsupported(&format!("{bits}-bit samples, only 16-bit supported")));
    }
    let pcm = pcm.ok_or_else(|| unsupported("no data chunk"))?;
    if pcm.len() % 2 != 0 {
        return Err(unsupported("data chunk has odd byte length"));
    }
    let samples: Vec<f64> = pcm
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0)
        .collect();
    Ok((samples, rate as f64))
}

/// Write samples as a mono 16-bit PCM WAV file, clamping to `[-1, 1]`.
pub fn save_wav_pcm16_mono(path: impl AsRef<Path>, samples: &[f64], sample_rate_hz: f64) -> Result<()> {
    let path = path.as_ref();
    let n = samples.len();
    let data_bytes = (n * 2) as u32;
    let mut out = Vec::with_capacity(44 + n * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_bytes).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    let rate = sample_rate_hz.round() as u32;
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits per sample
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_bytes.to_le_bytes());
    for &s in samples {
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parse a `path,label,split` manifest CSV. The header line is required and
/// every malformed row is reported with its line number.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();

    let header = loop {
        match lines.next() {
            Some((_, line)) if line.trim().is_empty() || line.starts_with('#') => continue,
            Some((i, line)) => break (i, line),
            None => return Err(Error::parse(path, 1, "empty manifest")),
        }
    };
    if header.1.trim() != "path,label,split" {
        return Err(Error::parse(
            path,
            header.0 + 1,
            format!("expected header 'path,label,split', got '{}'", header.1.trim()),
        ));
    }

    let mut entries = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected 3 fields 'path,label,split', got {}", fields.len()),
            ));
        }
        let entry_path = fields[0].trim();
        if entry_path.is_empty() {
            return Err(Error::parse(path, line_no, "empty path"));
        }
        let label = match fields[1].trim() {
            "" => None,
            token => Some(
                GridLabel::from_str(token).map_err(|e| Error::parse(path, line_no, e))?,
            ),
        };
        let split =
            Split::from_str(fields[2].trim()).map_err(|e| Error::parse(path, line_no, e))?;
        entries.push(ManifestEntry {
            path: entry_path.to_string(),
            label,
            split,
        });
    }
    DatasetManifest::new(entries)
}

pub fn save_manifest(manifest: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("path,label,split\n");
    for entry in &manifest.entries {
        let label = entry.label.map(|l| l.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{}\n", entry.path, label, entry.split));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct EnfSidecar {
    nominal_hz: u32,
    signal_kind: SignalKind,
    source_id: String,
    #[serde(default)]
    frame_length_s: Option<f64>,
    #[serde(default)]
    frame_hop_s: Option<f64>,
}

/// Format a real with 17 significant digits; round-trips f64 exactly.
fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

/// Persist an ENF sequence as `frame_index,time_start_s,frequency_hz` CSV
/// plus a JSON sidecar (`<path>.json`) carrying the sequence metadata.
pub fn save_enf(sequence: &EnfSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if sequence.frames.is_empty() {
        return Err(Error::EmptySequence(format!(
            "refusing to save empty ENF sequence '{}'",
            sequence.source_id
        )));
    }
    let mut out = String::from("frame_index,time_start_s,frequency_hz\n");
    for frame in &sequence.frames {
        out.push_str(&format!(
            "{},{},{}\n",
            frame.index,
            fmt_real(frame.time_start_s),
            fmt_real(frame.frequency_hz)
        ));
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;

    let sidecar = EnfSidecar {
        nominal_hz: sequence.nominal_hz,
        signal_kind: sequence.signal_kind,
        source_id: sequence.source_id.clone(),
        frame_length_s: Some(sequence.frame_length_s),
        frame_hop_s: Some(sequence.frame_hop_s),
    };
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| Error::InvalidInput(format!("sidecar serialization failed: {e}")))?;
    let sp = sidecar_path(path);
    fs::write(&sp, json).map_err(|e| Error::io(&sp, e))
}

pub fn load_enf(path: impl AsRef<Path>) -> Result<EnfSequence> {
    let path = path.as_ref();
    let sp = sidecar_path(path);
    let sidecar_text = fs::read_to_string(&sp).map_err(|e| Error::io(&sp, e))?;
    let sidecar: EnfSidecar = serde_json::from_str(&sidecar_text)
        .map_err(|e| Error::parse(&sp, e.line(), e.to_string()))?;

    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "frame_index,time_start_s,frequency_hz" => {}
        Some((i, header)) => {
            return Err(Error::parse(
                path,
                i + 1,
                format!("bad ENF header '{}'", header.trim()),
            ))
        }
        None => return Err(Error::parse(path, 1, "empty ENF file")),
    }
    let mut frames = Vec::new();
    for (i, line) in lines {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::parse(path, i + 1, "expected 3 fields"));
        }
        let index: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, i + 1, "bad frame index"))?;
        let time_start_s: f64 = fields[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, i + 1, "bad time value"))?;
        let frequency_hz: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, i + 1, "bad frequency value"))?;
        frames.push(EnfFrame {
            index,
            time_start_s,
            frequency_hz,
        });
    }
    if frames.is_empty() {
        return Err(Error::parse(path, 1, "ENF file has no frames"));
    }
    let policy = sidecar.signal_kind.framing();
    Ok(EnfSequence {
        frames,
        frame_length_s: sidecar.frame_length_s.unwrap_or(policy.frame_length_s),
        frame_hop_s: sidecar.frame_hop_s.unwrap_or(policy.frame_hop_s),
        nominal_hz: sidecar.nominal_hz,
        signal_kind: sidecar.signal_kind,
        source_id: sidecar.source_id,
    })
}

/// Persist feature vectors, one row per recording. The header carries the
/// union of all per-category schedules; cells outside a row's schedule stay
/// empty. The optional label column supports training workflows.
pub fn save_features(
    vectors: &[(FeatureVector, Option<GridLabel>)],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("source_id,category,label");
    for name in ALL_FEATURE_NAMES {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (vector, label) in vectors {
        out.push_str(&vector.source_id);
        out.push(',');
        out.push_str(&vector.category.to_string());
        out.push(',');
        if let Some(label) = label {
            out.push_str(&label.to_string());
        }
        for name in ALL_FEATURE_NAMES {
            out.push(',');
            if let Some(pos) = vector.names.iter().position(|n| n == name) {
                out.push_str(&fmt_real(vector.values[pos]));
            }
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_features(path: impl AsRef<Path>) -> Result<Vec<(FeatureVector, Option<GridLabel>)>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();

    let expected_header = {
        let mut h = String::from("source_id,category,label");
        for name in ALL_FEATURE_NAMES {
            h.push(',');
            h.push_str(name);
        }
        h
    };
    match lines.next() {
        Some((_, header)) if header.trim() == expected_header => {}
        Some((i, header)) => {
            return Err(Error::parse(
                path,
                i + 1,
                format!("bad features header '{}'", header.trim()),
            ))
        }
        None => return Err(Error::parse(path, 1, "empty features file")),
    }

    let mut rows = Vec::new();
    for (i, line) in lines {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 3 + ALL_FEATURE_NAMES.len() {
            return Err(Error::parse(
                path,
                i + 1,
                format!("expected {} fields, got {}", 3 + ALL_FEATURE_NAMES.len(), fields.len()),
            ));
        }
        let source_id = fields[0].trim().to_string();
        let category = Category::from_str(fields[1].trim())
            .map_err(|e| Error::parse(path, i + 1, e))?;
        let label = match fields[2].trim() {
            "" => None,
            token => Some(GridLabel::from_str(token).map_err(|e| Error::parse(path, i + 1, e))?),
        };
        let mut names = Vec::new();
        let mut values = Vec::new();
        for (schedule_name, field) in ALL_FEATURE_NAMES.iter().zip(&fields[3..]) {
            let field = field.trim();
            if field.is_empty() {
                continue;
            }
            let value: f64 = field.parse().map_err(|_| {
                Error::parse(path, i + 1, format!("bad value for {schedule_name}"))
            })?;
            names.push(schedule_name.to_string());
            values.push(value);
        }
        let vector = FeatureVector::from_raw(category, names, values, source_id)
            .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        rows.push((vector, label));
    }
    Ok(rows)
}
