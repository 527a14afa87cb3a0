//! Spectral estimation and power/audio separation.
//!
//! A recording is split into 5-minute analysis frames. For each frame the
//! dominant mains candidate frequency is found by averaging STFT magnitude
//! in a narrow band around each candidate, and the signal-to-noise ratio is
//! computed from a Welch power spectral density with the +/-0.5 Hz band
//! around the winner as the signal band and everything else as noise. Mains
//! captures show much higher band SNR than microphone recordings, so the
//! median frame SNR against a threshold decides the kind.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::datastore::{Recording, SignalKind};
use crate::error::{Error, Result};

/// Half-width of the signal band around a mains candidate, in Hz.
pub const BAND_HALFWIDTH_HZ: f64 = 0.5;
/// Default SNR decision threshold between power and audio recordings, in dB.
pub const DEFAULT_SNR_THRESHOLD_DB: f64 = 15.0;
/// Length of one separation analysis frame, in seconds.
pub const SEPARATION_FRAME_S: f64 = 300.0;
/// STFT frame length in samples (2 s at 1 kHz) giving 0.5 Hz bins.
pub const STFT_FRAME_LEN: usize = 2000;
/// Default Welch segment length in samples.
pub const WELCH_SEGMENT_LEN: usize = 4096;
/// SNR reports are clamped to +/- this value so they stay finite.
pub const SNR_CAP_DB: f64 = 300.0;

/// One-sided power spectral density estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frequencies_hz: Vec<f64>,
    pub density: Vec<f64>,
    pub resolution_hz: f64,
}

impl Spectrum {
    /// Total power: integral of density over frequency.
    pub fn total_power(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.resolution_hz
    }
}

/// Outcome of the power/audio decision for one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationReport {
    pub dominant_frequency_hz: f64,
    pub band_halfwidth_hz: f64,
    pub snr_db: f64,
    pub decided_kind: SignalKind,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Forward FFT of a real frame; returns the full complex spectrum.
pub(crate) fn fft_complex(frame: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = frame.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    PLANNER.with(|planner| {
        let fft = planner.borrow_mut().plan_fft_forward(buf.len());
        fft.process(&mut buf);
    });
    buf
}

/// Periodic Hann window of length `len`.
pub(crate) fn hann_window(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 * (1.0 - (2.0 * PI * n as f64 / len as f64).cos()))
        .collect()
}

fn check_finite(samples: &[f64]) -> Result<()> {
    if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite sample at index {i}")));
    }
    Ok(())
}

/// Welch power spectral density with a Hann window.
///
/// Density is scaled so that `sum(density) * resolution_hz` approximates the
/// signal power (one-sided convention; DC and Nyquist bins are not doubled).
pub fn welch_psd(
    samples: &[f64],
    sample_rate_hz: f64,
    segment_length: usize,
    overlap_fraction: f64,
) -> Result<Spectrum> {
    if segment_length < 2 {
        return Err(Error::InvalidInput("segment length must be >= 2".into()));
    }
    if samples.len() < segment_length {
        return Err(Error::InvalidInput(format!(
            "signal of {} samples shorter than segment length {}",
            samples.len(),
            segment_length
        )));
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::InvalidInput("overlap fraction must be in [0, 1)".into()));
    }
    check_finite(samples)?;

    let window = hann_window(segment_length);
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let hop = (segment_length as f64 * (1.0 - overlap_fraction)).round().max(1.0) as usize;
    let num_segments = (samples.len() - segment_length) / hop + 1;

    let half = segment_length / 2;
    let mut accum = vec![0.0; half + 1];
    for seg in 0..num_segments {
        let start = seg * hop;
        let frame: Vec<f64> = samples[start..start + segment_length]
            .iter()
            .zip(&window)
            .map(|(x, w)| x * w)
            .collect();
        let spectrum = fft_complex(&frame);
        for (k, acc) in accum.iter_mut().enumerate() {
            *acc += spectrum[k].norm_sqr();
        }
    }

    let scale = 1.0 / (sample_rate_hz * window_power * num_segments as f64);
    let mut density: Vec<f64> = accum.iter().map(|p| p * scale * 2.0).collect();
    density[0] /= 2.0;
    if segment_length % 2 == 0 {
        density[half] /= 2.0;
    }

    let resolution_hz = sample_rate_hz / segment_length as f64;
    let frequencies_hz = (0..=half).map(|k| k as f64 * resolution_hz).collect();
    Ok(Spectrum {
        frequencies_hz,
        density,
        resolution_hz,
    })
}

/// Mains candidates: 50 and 60 Hz and their harmonics that fit below the
/// Nyquist frequency with room for the signal band.
pub fn default_candidates(sample_rate_hz: f64) -> Vec<f64> {
    let limit = sample_rate_hz / 2.0 - BAND_HALFWIDTH_HZ;
    let mut candidates: Vec<f64> = Vec::new();
    for base in [50.0, 60.0] {
        let mut k = 1.0;
        while base * k < limit {
            candidates.push(base * k);
            k += 1.0;
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();
    candidates
}

/// Choose the candidate whose +/-0.5 Hz band carries the most average STFT
/// magnitude across 2000-sample Hann frames at 50% overlap. Ties resolve to
/// the lowest candidate.
pub fn dominant_frequency(
    samples: &[f64],
    sample_rate_hz: f64,
    candidates: &[f64],
) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::InvalidInput("no candidate frequencies".into()));
    }
    if samples.len() < STFT_FRAME_LEN {
        return Err(Error::InvalidInput(format!(
            "signal of {} samples shorter than one STFT frame ({STFT_FRAME_LEN})",
            samples.len()
        )));
    }
    check_finite(samples)?;

    let resolution = sample_rate_hz / STFT_FRAME_LEN as f64;
    let half = STFT_FRAME_LEN / 2;
    let bands: Vec<Vec<usize>> = candidates
        .iter()
        .map(|&c| {
            (0..=half)
                .filter(|&k| (k as f64 * resolution - c).abs() <= BAND_HALFWIDTH_HZ + 1e-9)
                .collect()
        })
        .collect();
    if let Some(i) = bands.iter().position(|b| b.is_empty()) {
        return Err(Error::InvalidInput(format!(
            "candidate {} Hz has no STFT bins in band",
            candidates[i]
        )));
    }

    let window = hann_window(STFT_FRAME_LEN);
    let hop = STFT_FRAME_LEN / 2;
    let num_frames = (samples.len() - STFT_FRAME_LEN) / hop + 1;
    let mut band_sums = vec![0.0; candidates.len()];
    for frame_idx in 0..num_frames {
        let start = frame_idx * hop;
        let frame: Vec<f64> = samples[start..start + STFT_FRAME_LEN]
            .iter()
            .zip(&window)
            .map(|(x, w)| x * w)
            .collect();
        let spectrum = fft_complex(&frame);
        for (sum, band) in band_sums.iter_mut().zip(&bands) {
            for &k in band {
                *sum += spectrum[k].norm();
            }
        }
    }

    // candidates are sorted ascending, so strict `>` breaks ties low
    let mut best = 0;
    let mut best_avg = f64::NEG_INFINITY;
    for (i, (sum, band)) in band_sums.iter().zip(&bands).enumerate() {
        let avg = sum / (band.len() as f64 * num_frames as f64);
        if avg > best_avg {
            best_avg = avg;
            best = i;
        }
    }
    Ok(candidates[best])
}

/// Ratio of in-band to out-of-band power in dB, clamped to +/-`SNR_CAP_DB`.
pub fn band_snr_db(spectrum: &Spectrum, center_hz: f64, halfwidth_hz: f64) -> Result<f64> {
    if !(halfwidth_hz > 0.0) {
        return Err(Error::InvalidInput("band halfwidth must be positive".into()));
    }
    let nyquist = *spectrum
        .frequencies_hz
        .last()
        .ok_or_else(|| Error::InvalidInput("empty spectrum".into()))?;
    if center_hz - halfwidth_hz <= 0.0 || center_hz + halfwidth_hz >= nyquist {
        return Err(Error::InvalidInput(format!(
            "band [{}, {}] Hz not inside (0, {nyquist}) Hz",
            center_hz - halfwidth_hz,
            center_hz + halfwidth_hz
        )));
    }

    let mut in_band = 0.0;
    let mut out_band = 0.0;
    let mut bins_in_band = 0usize;
    for (f, d) in spectrum.frequencies_hz.iter().zip(&spectrum.density) {
        if (f - center_hz).abs() <= halfwidth_hz + 1e-9 {
            in_band += d;
            bins_in_band += 1;
        } else {
            out_band += d;
        }
    }
    if bins_in_band == 0 {
        return Err(Error::InvalidInput(format!(
            "no spectrum bins inside [{:.3}, {:.3}] Hz; resolution {} Hz too coarse",
            center_hz - halfwidth_hz,
            center_hz + halfwidth_hz,
            spectrum.resolution_hz
        )));
    }
    if out_band <= 0.0 {
        return Ok(SNR_CAP_DB);
    }
    if in_band <= 0.0 {
        return Ok(-SNR_CAP_DB);
    }
    Ok((10.0 * (in_band / out_band).log10()).clamp(-SNR_CAP_DB, SNR_CAP_DB))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Split a recording into separation frames: full 5-minute chunks plus a
/// final partial chunk when it still holds at least one STFT frame. A
/// recording shorter than 5 minutes is processed as a single frame.
fn separation_frames(samples: &[f64], sample_rate_hz: f64) -> Vec<&[f64]> {
    let chunk_len = (SEPARATION_FRAME_S * sample_rate_hz).round() as usize;
    let mut frames = Vec::new();
    let mut start = 0;
    while start + chunk_len <= samples.len() {
        frames.push(&samples[start..start + chunk_len]);
        start += chunk_len;
    }
    let tail = &samples[start..];
    if frames.is_empty() || tail.len() >= STFT_FRAME_LEN {
        if !tail.is_empty() {
            frames.push(tail);
        }
    }
    frames
}

/// Decide whether a recording is a mains capture or a microphone recording.
pub fn separate(recording: &Recording, snr_threshold_db: f64) -> Result<SeparationReport> {
    recording.validate()?;
    let candidates = default_candidates(recording.sample_rate_hz);
    let frames = separation_frames(&recording.samples, recording.sample_rate_hz);

    let mut snrs = Vec::new();
    let mut winners: Vec<f64> = Vec::new();
    for frame in frames {
        let f_d = dominant_frequency(frame, recording.sample_rate_hz, &candidates)?;
        let segment = WELCH_SEGMENT_LEN.min(frame.len());
        let psd = welch_psd(frame, recording.sample_rate_hz, segment, 0.5)?;
        snrs.push(band_snr_db(&psd, f_d, BAND_HALFWIDTH_HZ)?);
        winners.push(f_d);
    }

    // Modal candidate across frames; ties resolve to the lowest frequency.
    let mut dominant = winners[0];
    let mut dominant_count = 0;
    for &w in &winners {
        let count = winners.iter().filter(|&&v| v == w).count();
        if count > dominant_count || (count == dominant_count && w < dominant) {
            dominant = w;
            dominant_count = count;
        }
    }

    let median_snr = median(&mut snrs);
    let decided_kind = if median_snr >= snr_threshold_db {
        SignalKind::Power
    } else {
        SignalKind::Audio
    };
    Ok(SeparationReport {
        dominant_frequency_hz: dominant,
        band_halfwidth_hz: BAND_HALFWIDTH_HZ,
        snr_db: median_snr,
        decided_kind,
    })
}
