//! ENF sequence extraction.
//!
//! The filtered signal is cut into fixed frames and each frame's frequency
//! is estimated with root-MUSIC: eigendecompose the forward-backward
//! averaged sample autocorrelation matrix, project onto the noise subspace,
//! form the polynomial whose coefficients are the diagonal sums of the
//! projector, root it, and take the in-band root closest to the unit circle.
//!
//! Mains captures use 5 s frames with no overlap over a [40, 70] Hz band;
//! microphone recordings use 15 s frames hopping by 5 s over a 1 Hz band
//! around the dominant mains component, with harmonic estimates folded down
//! to the base frequency.

use nalgebra::DMatrix;

use crate::datastore::{Recording, SignalKind};
use crate::error::{Error, Result};
use crate::filters;
use crate::poly;

/// Default autocorrelation matrix order for root-MUSIC.
pub const DEFAULT_SUBSPACE_ORDER: usize = 20;
/// A real sinusoid occupies a conjugate pair of complex exponentials.
pub const DEFAULT_NUM_SOURCES: usize = 2;
/// Band-pass applied to mains captures before frequency estimation, in Hz.
pub const POWER_BAND_HZ: (f64, f64) = (40.0, 70.0);
/// Length of one extraction segment, in seconds; each segment is filtered
/// and framed independently.
pub const SEGMENT_LENGTH_S: f64 = 300.0;
/// Values farther than this from the routed nominal are dropped as gaps.
pub const SANITY_ENVELOPE_HZ: f64 = 2.0;
/// Audio-path root quality gate: a coherent hum pins the selected root to
/// the unit circle within ~1e-6, while frames holding only band-limited
/// noise land several 1e-5 away. Roots farther than this become gaps.
pub const AUDIO_ROOT_CIRCLE_TOLERANCE: f64 = 1e-5;

/// One successfully estimated frame. `index` counts every candidate frame
/// slot of the recording, so gaps show as missing indices.
#[derive(Debug, Clone, PartialEq)]
pub struct EnfFrame {
    pub index: usize,
    pub time_start_s: f64,
    pub frequency_hz: f64,
}

/// Time series of per-frame mains-frequency estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct EnfSequence {
    pub frames: Vec<EnfFrame>,
    pub frame_length_s: f64,
    pub frame_hop_s: f64,
    pub nominal_hz: u32,
    pub signal_kind: SignalKind,
    pub source_id: String,
}

impl EnfSequence {
    pub fn values(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.frequency_hz).collect()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn mean_hz(&self) -> f64 {
        self.frames.iter().map(|f| f.frequency_hz).sum::<f64>() / self.frames.len() as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames.is_empty() {
            return Err(Error::EmptySequence(self.source_id.clone()));
        }
        if !(self.frame_hop_s > 0.0) || self.frame_hop_s > self.frame_length_s {
            return Err(Error::InvalidInput(format!(
                "frame hop {} s must be positive and <= frame length {} s",
                self.frame_hop_s, self.frame_length_s
            )));
        }
        if self.nominal_hz != 50 && self.nominal_hz != 60 {
            return Err(Error::InvalidInput(format!(
                "nominal frequency must be 50 or 60 Hz, got {}",
                self.nominal_hz
            )));
        }
        for frame in &self.frames {
            let dev = (frame.frequency_hz - self.nominal_hz as f64).abs();
            if dev > SANITY_ENVELOPE_HZ {
                return Err(Error::InvalidInput(format!(
                    "frame {} at {} Hz violates the {} +/- {} Hz envelope",
                    frame.index, frame.frequency_hz, self.nominal_hz, SANITY_ENVELOPE_HZ
                )));
            }
        }
        Ok(())
    }
}

/// Frame length and hop used to cut the filtered signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramingPolicy {
    pub frame_length_s: f64,
    pub frame_hop_s: f64,
}

impl FramingPolicy {
    /// Mains captures: 5 s frames, no overlap.
    pub fn power() -> Self {
        FramingPolicy {
            frame_length_s: 5.0,
            frame_hop_s: 5.0,
        }
    }

    /// Microphone recordings: 15 s frames hopping by 5 s (10 s overlap).
    pub fn audio() -> Self {
        FramingPolicy {
            frame_length_s: 15.0,
            frame_hop_s: 5.0,
        }
    }
}

/// Knobs for the extraction pipeline; defaults follow the module constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractionOptions {
    pub subspace_order: usize,
    pub power_band_hz: (f64, f64),
    pub power_framing: FramingPolicy,
    pub audio_framing: FramingPolicy,
}

impl Default for ExtractionOptions {
    fn default() -> Self {
        ExtractionOptions {
            subspace_order: DEFAULT_SUBSPACE_ORDER,
            power_band_hz: POWER_BAND_HZ,
            power_framing: FramingPolicy::power(),
            audio_framing: FramingPolicy::audio(),
        }
    }
}

/// Estimate the frequency of the strongest in-band sinusoid in one frame.
///
/// The autocorrelation matrix of order `subspace_order` is built with
/// forward-backward averaging, the noise projector is formed from all but
/// the `num_sources` dominant eigenvectors, and the projector's diagonal
/// sums give a polynomial whose in-band root closest to the unit circle
/// carries the frequency.
pub fn root_music_frequency(
    frame: &[f64],
    sample_rate_hz: f64,
    subspace_order: usize,
    num_sources: usize,
    search_band_hz: (f64, f64),
) -> Result<f64> {
    root_music_root(frame, sample_rate_hz, subspace_order, num_sources, search_band_hz)
        .map(|(freq, _)| freq)
}

/// Like [`root_music_frequency`] but also returns the selected root's
/// radius; a radius near 1 indicates a coherent sinusoid while band-limited
/// noise yields roots noticeably inside the circle.
pub fn root_music_root(
    frame: &[f64],
    sample_rate_hz: f64,
    subspace_order: usize,
    num_sources: usize,
    search_band_hz: (f64, f64),
) -> Result<(f64, f64)> {
    let m = subspace_order;
    if m < 3 {
        return Err(Error::InvalidInput("subspace order must be >= 3".into()));
    }
    if num_sources < 1 || num_sources >= m {
        return Err(Error::InvalidInput(format!(
            "source count {num_sources} must be in [1, {})",
            m
        )));
    }
    if frame.len() < 4 * m {
        return Err(Error::InvalidInput(format!(
            "frame of {} samples too short for subspace order {m} (need >= {})",
            frame.len(),
            4 * m
        )));
    }
    let (low, high) = search_band_hz;
    if !(0.0 < low && low < high && high < sample_rate_hz / 2.0) {
        return Err(Error::InvalidInput(format!(
            "invalid search band [{low}, {high}] Hz"
        )));
    }
    if let Some(i) = frame.iter().position(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite sample at index {i}")));
    }
    let max_abs = frame.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let spread = frame.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    });
    if spread.1 - spread.0 <= 1e-12 * (1.0 + max_abs) {
        return Err(Error::DegenerateFrame(
            "constant frame has no sinusoidal component".into(),
        ));
    }

    // Power-of-two normalization is exact and keeps the correlation matrix
    // well scaled whatever the input amplitude.
    let scale = 2.0f64.powi(-(max_abs.log2().floor() as i32));
    let frame: Vec<f64> = frame.iter().map(|x| x * scale).collect();

    // Forward autocorrelation matrix over sliding windows of length m.
    let windows = frame.len() - m + 1;
    let mut corr = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let mut acc = 0.0;
            for t in 0..windows {
                acc += frame[t + i] * frame[t + j];
            }
            let value = acc / windows as f64;
            corr[(i, j)] = value;
            corr[(j, i)] = value;
        }
    }
    // Forward-backward averaging: R <- (R + J R J) / 2.
    let mut fb = corr.clone();
    for i in 0..m {
        for j in 0..m {
            fb[(i, j)] = 0.5 * (corr[(i, j)] + corr[(m - 1 - i, m - 1 - j)]);
        }
    }

    let eig = nalgebra::SymmetricEigen::try_new(fb, 1e-14, 10_000)
        .ok_or_else(|| Error::Eigen("autocorrelation eigendecomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());

    // Noise projector as identity minus the signal-subspace projector.
    let mut projector = DMatrix::<f64>::identity(m, m);
    for &idx in order.iter().take(num_sources) {
        let v = eig.eigenvectors.column(idx);
        for i in 0..m {
            for j in 0..m {
                projector[(i, j)] -= v[i] * v[j];
            }
        }
    }
    // Symmetrize so the rooted polynomial is exactly palindromic.
    for i in 0..m {
        for j in (i + 1)..m {
            let s = 0.5 * (projector[(i, j)] + projector[(j, i)]);
            projector[(i, j)] = s;
            projector[(j, i)] = s;
        }
    }

    // Coefficient k belongs to z^k; diagonal d = k - (m - 1). The projector
    // is symmetric, so the polynomial is palindromic; enforce that exactly.
    let mut coeffs = vec![0.0; 2 * m - 1];
    for i in 0..m {
        for j in 0..m {
            coeffs[j + m - 1 - i] += projector[(i, j)];
        }
    }
    for k in 0..m - 1 {
        let sym = 0.5 * (coeffs[k] + coeffs[2 * m - 2 - k]);
        coeffs[k] = sym;
        coeffs[2 * m - 2 - k] = sym;
    }

    // Palindromic reduction w = z + 1/z: halves the degree and merges each
    // reciprocal root pair (z, 1/z) into one simple, well-conditioned root.
    // With z^k + z^-k = 2 T_k(w/2): p(z)/z^(m-1) = c_(m-1) T_0(x)
    // + sum_k 2 c_(m-1+k) T_k(x) in x = w/2, rooted in the Chebyshev basis.
    let n = m - 1;
    let mut reduced = vec![0.0; n + 1];
    reduced[0] = coeffs[n];
    for k in 1..=n {
        reduced[k] = 2.0 * coeffs[n + k];
    }

    let to_freq = |arg: f64| arg.abs() * sample_rate_hz / (2.0 * std::f64::consts::PI);
    let in_band = |f: f64| (low - 1e-9..=high + 1e-9).contains(&f);

    // Each w root maps back through z^2 - w z + 1 = 0; the two solutions
    // are reciprocal, so taking the one inside the unit circle realizes the
    // "in-band root closest to the circle" selection directly.
    let mut best: Option<(f64, f64)> = None; // (distance to circle, freq)
    for x in poly::chebyshev_roots(&reduced)? {
        let w = x * 2.0;
        let disc = (w * w - 4.0).sqrt();
        let cand1 = (w + disc) * 0.5;
        let cand2 = (w - disc) * 0.5;
        let z_big = if cand1.norm() >= cand2.norm() { cand1 } else { cand2 };
        if z_big.norm() == 0.0 {
            continue;
        }
        let z = z_big.inv(); // |z| <= 1
        let f = to_freq(z.arg());
        if in_band(f) {
            let closeness = 1.0 - z.norm();
            if best.map_or(true, |(c, _)| closeness < c) {
                best = Some((closeness, f));
            }
        }
    }
    best.map(|(closeness, f)| (f, 1.0 - closeness))
        .ok_or(Error::NoRootInBand {
            low_hz: low,
            high_hz: high,
        })
}

/// Consecutive extraction segments: full 5-minute chunks plus a final
/// partial chunk if it can still hold one analysis frame.
fn segments(samples: &[f64], sample_rate_hz: f64, min_len: usize) -> Vec<(usize, &[f64])> {
    let seg_len = (SEGMENT_LENGTH_S * sample_rate_hz).round() as usize;
    let mut out = Vec::new();
    let mut start = 0;
    while start + seg_len <= samples.len() {
        out.push((start, &samples[start..start + seg_len]));
        start += seg_len;
    }
    let tail = &samples[start..];
    if tail.len() >= min_len {
        out.push((start, tail));
    }
    out
}

struct ExtractionPlan {
    band_hz: (f64, f64),
    framing: FramingPolicy,
    subspace_order: usize,
    /// Estimates are divided by this to fold harmonics down to base ENF.
    fold: f64,
    /// Reject roots farther than this from the unit circle (audio path).
    max_circle_distance: Option<f64>,
}

fn extract_with_plan(recording: &Recording, kind: SignalKind, plan: &ExtractionPlan) -> Result<EnfSequence> {
    recording.validate()?;
    let fs = recording.sample_rate_hz;
    let frame_len = (plan.framing.frame_length_s * fs).round() as usize;
    let hop = (plan.framing.frame_hop_s * fs).round() as usize;
    if hop == 0 || frame_len < hop {
        return Err(Error::InvalidInput("invalid framing policy".into()));
    }
    if frame_len < 4 * plan.subspace_order {
        return Err(Error::InvalidInput(format!(
            "frames of {frame_len} samples too short for subspace order {}",
            plan.subspace_order
        )));
    }

    let filter = filters::design_butterworth_bandpass(2, plan.band_hz.0, plan.band_hz.1, fs)?;
    let mut frames = Vec::new();
    let mut gaps = 0usize;
    let mut index = 0usize;
    for (seg_start, segment) in segments(&recording.samples, fs, frame_len) {
        let filtered = filters::apply(&filter, segment)?;
        if filtered.len() < frame_len {
            continue;
        }
        let count = (filtered.len() - frame_len) / hop + 1;
        for j in 0..count {
            let frame = &filtered[j * hop..j * hop + frame_len];
            let time_start_s = (seg_start + j * hop) as f64 / fs;
            match root_music_root(frame, fs, plan.subspace_order, DEFAULT_NUM_SOURCES, plan.band_hz) {
                Ok((_, radius))
                    if plan
                        .max_circle_distance
                        .is_some_and(|limit| 1.0 - radius > limit) =>
                {
                    log::debug!(
                        "{}: frame {index} skipped: root radius {radius} below quality gate",
                        recording.id
                    );
                    gaps += 1;
                }
                Ok((freq, _)) => frames.push(EnfFrame {
                    index,
                    time_start_s,
                    frequency_hz: freq / plan.fold,
                }),
                Err(err) => {
                    log::debug!("{}: frame {index} skipped: {err}", recording.id);
                    gaps += 1;
                }
            }
            index += 1;
        }
    }
    if frames.is_empty() {
        return Err(Error::EmptySequence(format!(
            "{}: no frame produced an estimate ({gaps} gaps)",
            recording.id
        )));
    }
    if gaps > 0 {
        log::info!("{}: {gaps} of {index} frames skipped", recording.id);
    }

    let mut sequence = EnfSequence {
        frames,
        frame_length_s: plan.framing.frame_length_s,
        frame_hop_s: plan.framing.frame_hop_s,
        nominal_hz: 0,
        signal_kind: kind,
        source_id: recording.id.clone(),
    };
    route_nominal(&mut sequence)?;
    enforce_envelope(&mut sequence)?;
    Ok(sequence)
}

/// Drop estimates outside the sanity envelope around the routed nominal.
fn enforce_envelope(sequence: &mut EnfSequence) -> Result<()> {
    let nominal = sequence.nominal_hz as f64;
    let before = sequence.frames.len();
    sequence
        .frames
        .retain(|f| (f.frequency_hz - nominal).abs() <= SANITY_ENVELOPE_HZ);
    let dropped = before - sequence.frames.len();
    if dropped > 0 {
        log::info!(
            "{}: dropped {dropped} outlier frames outside {nominal} +/- {SANITY_ENVELOPE_HZ} Hz",
            sequence.source_id
        );
    }
    if sequence.frames.is_empty() {
        return Err(Error::EmptySequence(format!(
            "{}: all estimates fell outside the sanity envelope",
            sequence.source_id
        )));
    }
    Ok(())
}

/// Extract the ENF sequence of a mains capture.
pub fn extract_power_enf(recording: &Recording) -> Result<EnfSequence> {
    extract_power_enf_with(recording, &ExtractionOptions::default())
}

pub fn extract_power_enf_with(
    recording: &Recording,
    options: &ExtractionOptions,
) -> Result<EnfSequence> {
    extract_with_plan(
        recording,
        SignalKind::Power,
        &ExtractionPlan {
            band_hz: options.power_band_hz,
            framing: options.power_framing,
            subspace_order: options.subspace_order,
            fold: 1.0,
            max_circle_distance: None,
        },
    )
}

/// Fold factor: smallest divisor mapping the dominant component into the
/// base mains range. 120 Hz folds by 2 to 60 Hz, 150 Hz by 3 to 50 Hz.
fn harmonic_fold(dominant_hz: f64) -> f64 {
    for k in 1..=10 {
        let base = dominant_hz / k as f64;
        if (45.0..=65.0).contains(&base) {
            return k as f64;
        }
    }
    1.0
}

/// Extract the ENF sequence buried in a microphone recording whose dominant
/// mains component sits at `dominant_hz` (possibly a harmonic).
pub fn extract_audio_enf(recording: &Recording, dominant_hz: f64) -> Result<EnfSequence> {
    extract_audio_enf_with(recording, dominant_hz, &ExtractionOptions::default())
}

pub fn extract_audio_enf_with(
    recording: &Recording,
    dominant_hz: f64,
    options: &ExtractionOptions,
) -> Result<EnfSequence> {
    let halfwidth = crate::spectral::BAND_HALFWIDTH_HZ;
    if dominant_hz - halfwidth <= 0.0 || dominant_hz + halfwidth >= recording.sample_rate_hz / 2.0 {
        return Err(Error::InvalidInput(format!(
            "dominant frequency {dominant_hz} Hz leaves no room for a +/- {halfwidth} Hz band"
        )));
    }
    extract_with_plan(
        recording,
        SignalKind::Audio,
        &ExtractionPlan {
            band_hz: (dominant_hz - halfwidth, dominant_hz + halfwidth),
            framing: options.audio_framing,
            subspace_order: options.subspace_order,
            fold: harmonic_fold(dominant_hz),
            max_circle_distance: Some(AUDIO_ROOT_CIRCLE_TOLERANCE),
        },
    )
}

/// Route a sequence to its nominal database by mean value: below 55 Hz it is
/// a 50 Hz grid, otherwise 60 Hz (ties break upward). Sets `nominal_hz`.
pub fn route_nominal(sequence: &mut EnfSequence) -> Result<u32> {
    if sequence.frames.is_empty() {
        return Err(Error::EmptySequence(sequence.source_id.clone()));
    }
    let nominal = if sequence.mean_hz() < 55.0 { 50 } else { 60 };
    sequence.nominal_hz = nominal;
    Ok(nominal)
}
