//! Synthetic grid recordings with known ground-truth frequency tracks.
//!
//! A mean-reverting AR(1) walk models the frequency deviation of a grid
//! around its nominal value; rendering integrates the walk into a
//! phase-continuous sinusoid plus harmonics and noise. Nine built-in
//! profiles (one per grid label) differ in deviation limits, wander
//! timescale, and stability so their renders are statistically separable.
//! Everything is seeded: identical profiles produce bit-identical output.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::datastore::Recording;
use crate::error::{Error, Result};

/// Walk sampling interval used by the rendering helpers, in seconds.
pub const WALK_STEP_S: f64 = 1.0;
/// Fraction of the tighter deviation limit used as the walk's target
/// standard deviation; keeps clipping rare.
const LIMIT_TO_STD: f64 = 1.0 / 2.5;
/// Cutoff of the one-pole lowpass shaping the speech-like background, Hz.
const SPEECH_LOWPASS_HZ: f64 = 150.0;

/// Statistical description of one grid's frequency behavior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridProfile {
    pub name: String,
    pub nominal_hz: u32,
    /// (negative, positive) deviation bounds around nominal, bracket zero.
    pub deviation_limits_hz: (f64, f64),
    /// Time over which the walk decorrelates by `stability`.
    pub wander_timescale_s: f64,
    /// AR(1) pole at one timescale unit; must be below 1.
    pub stability: f64,
    /// Relative amplitudes of harmonics 2, 3, ... of the fundamental.
    pub harmonic_levels: Vec<f64>,
    pub seed: u64,
}

impl GridProfile {
    pub fn validate(&self) -> Result<()> {
        let (neg, pos) = self.deviation_limits_hz;
        if !(neg <= 0.0 && 0.0 <= pos) {
            return Err(Error::InvalidInput(format!(
                "deviation limits ({neg}, {pos}) must bracket zero"
            )));
        }
        if !(self.stability >= 0.0 && self.stability < 1.0) {
            return Err(Error::InvalidInput(format!(
                "stability {} must be in [0, 1)",
                self.stability
            )));
        }
        if !(self.wander_timescale_s > 0.0) {
            return Err(Error::InvalidInput("wander timescale must be positive".into()));
        }
        if self.nominal_hz != 50 && self.nominal_hz != 60 {
            return Err(Error::InvalidInput(format!(
                "nominal frequency must be 50 or 60 Hz, got {}",
                self.nominal_hz
            )));
        }
        Ok(())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Built-in profiles, one per grid label, shipped as JSON.
pub const PROFILE_JSON: &str = include_str!("profiles.json");

/// The nine built-in grid profiles (A through I).
pub fn builtin_profiles() -> Vec<GridProfile> {
    serde_json::from_str(PROFILE_JSON).expect("embedded profile JSON is valid")
}

/// Look up a built-in profile by grid name.
pub fn builtin_profile(name: &str) -> Result<GridProfile> {
    builtin_profiles()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::InvalidInput(format!("no built-in profile named '{name}'")))
}

/// Load a profile from a JSON file.
pub fn load_profile(path: impl AsRef<Path>) -> Result<GridProfile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let profile: GridProfile =
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
    profile.validate()?;
    Ok(profile)
}

/// Instantaneous grid frequency per step: a mean-reverting AR(1) walk
/// around nominal, clipped to the profile's deviation limits.
pub fn synth_frequency_walk(profile: &GridProfile, duration_s: f64, step_s: f64) -> Result<Vec<f64>> {
    profile.validate()?;
    if !(step_s > 0.0) || duration_s < step_s {
        return Err(Error::InvalidInput(
            "duration must cover at least one step".into(),
        ));
    }
    let steps = (duration_s / step_s).round() as usize;
    let (neg, pos) = profile.deviation_limits_hz;
    let target_std = neg.abs().min(pos) * LIMIT_TO_STD;
    let pole = profile.stability.powf(step_s / profile.wander_timescale_s);
    let innovation_std = target_std * (1.0 - pole * pole).sqrt();

    let mut rng = profile.rng(1);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let nominal = profile.nominal_hz as f64;
    // start from the stationary distribution so short renders of slow grids
    // still show their full deviation scale
    let mut deviation = (target_std * normal.sample(&mut rng)).clamp(neg, pos);
    let mut walk = Vec::with_capacity(steps);
    for _ in 0..steps {
        deviation = (pole * deviation + innovation_std * normal.sample(&mut rng)).clamp(neg, pos);
        walk.push(nominal + deviation);
    }
    Ok(walk)
}

/// Linear interpolation of the walk at sample times, holding the last value.
fn instantaneous_frequency(walk: &[f64], step_s: f64, t: f64) -> f64 {
    let pos = t / step_s;
    let i = pos.floor() as usize;
    if i + 1 >= walk.len() {
        return *walk.last().expect("nonempty walk");
    }
    let frac = pos - i as f64;
    walk[i] * (1.0 - frac) + walk[i + 1] * frac
}

fn phase_track(walk: &[f64], step_s: f64, sample_rate_hz: f64, samples: usize) -> Vec<f64> {
    let mut phases = Vec::with_capacity(samples);
    let mut phase = 0.0f64;
    for n in 0..samples {
        phases.push(phase);
        let f = instantaneous_frequency(walk, step_s, n as f64 / sample_rate_hz);
        phase += 2.0 * std::f64::consts::PI * f / sample_rate_hz;
        if phase > 2.0 * std::f64::consts::PI {
            phase -= 2.0 * std::f64::consts::PI;
        }
    }
    phases
}

fn tone_with_harmonics(phases: &[f64], harmonic_levels: &[f64]) -> Vec<f64> {
    phases
        .iter()
        .map(|&phi| {
            let mut x = phi.sin();
            for (h, level) in harmonic_levels.iter().enumerate() {
                x += level * ((h as f64 + 2.0) * phi).sin();
            }
            x
        })
        .collect()
}

fn normalize_peak(samples: &mut [f64], peak: f64) {
    let max = samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max > 0.0 {
        let scale = peak / max;
        for x in samples.iter_mut() {
            *x *= scale;
        }
    }
}

/// Render a mains capture: phase-continuous fundamental plus harmonics,
/// with white noise at `snr_db` relative to the fundamental's power.
pub fn render_power(
    profile: &GridProfile,
    walk: &[f64],
    step_s: f64,
    sample_rate_hz: f64,
    snr_db: f64,
) -> Result<Recording> {
    profile.validate()?;
    if walk.is_empty() {
        return Err(Error::InvalidInput("empty frequency walk".into()));
    }
    let samples = (walk.len() as f64 * step_s * sample_rate_hz).round() as usize;
    let phases = phase_track(walk, step_s, sample_rate_hz, samples);
    let mut signal = tone_with_harmonics(&phases, &profile.harmonic_levels);

    let fundamental_power = 0.5;
    let noise_std = (fundamental_power / 10f64.powf(snr_db / 10.0)).sqrt();
    let normal = Normal::new(0.0, noise_std).expect("noise distribution");
    let mut rng = profile.rng(2);
    for x in signal.iter_mut() {
        *x += normal.sample(&mut rng);
    }
    normalize_peak(&mut signal, 0.9);
    Recording::new(format!("{}-power", profile.name), signal, sample_rate_hz)
}

/// Broadband background flavor for audio renders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Background {
    White,
    /// White noise through a one-pole lowpass at 150 Hz, power-normalized.
    SpeechShaped,
}

impl std::str::FromStr for Background {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "white" => Ok(Background::White),
            "speech" | "speech_shaped" => Ok(Background::SpeechShaped),
            other => Err(format!("unknown background '{other}'")),
        }
    }
}

/// Render a microphone recording: weak mains hum buried in broadband
/// background noise. `hum_snr_db` relates the hum fundamental's power to
/// the total background power.
pub fn render_audio(
    profile: &GridProfile,
    walk: &[f64],
    step_s: f64,
    sample_rate_hz: f64,
    hum_snr_db: f64,
    background: Background,
) -> Result<Recording> {
    profile.validate()?;
    if walk.is_empty() {
        return Err(Error::InvalidInput("empty frequency walk".into()));
    }
    let samples = (walk.len() as f64 * step_s * sample_rate_hz).round() as usize;

    let mut rng = profile.rng(3);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut bg: Vec<f64> = (0..samples).map(|_| normal.sample(&mut rng)).collect();
    if background == Background::SpeechShaped {
        let alpha = (-2.0 * std::f64::consts::PI * SPEECH_LOWPASS_HZ / sample_rate_hz).exp();
        let mut state = 0.0;
        for x in bg.iter_mut() {
            state = alpha * state + (1.0 - alpha) * *x;
            *x = state;
        }
    }
    // normalize background to unit power
    let bg_power = bg.iter().map(|x| x * x).sum::<f64>() / bg.len() as f64;
    let bg_scale = (1.0 / bg_power).sqrt();
    for x in bg.iter_mut() {
        *x *= bg_scale;
    }

    // hum fundamental amplitude from the requested SNR against unit power
    let hum_amplitude = (2.0 * 10f64.powf(hum_snr_db / 10.0)).sqrt();
    let phases = phase_track(walk, step_s, sample_rate_hz, samples);
    let hum = tone_with_harmonics(&phases, &profile.harmonic_levels);

    let mut signal: Vec<f64> = hum
        .iter()
        .zip(&bg)
        .map(|(h, b)| hum_amplitude * h + b)
        .collect();
    normalize_peak(&mut signal, 0.9);
    Recording::new(format!("{}-audio", profile.name), signal, sample_rate_hz)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_profiles_parse_and_validate() {
        let profiles = builtin_profiles();
        assert_eq!(profiles.len(), 9);
        let names: Vec<&str> = profiles.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["A", "B", "C", "D", "E", "F", "G", "H", "I"]);
        for p in &profiles {
            p.validate().unwrap();
        }
        assert_eq!(
            profiles.iter().filter(|p| p.nominal_hz == 60).count(),
            3
        );
        assert_eq!(
            profiles.iter().filter(|p| p.nominal_hz == 50).count(),
            6
        );
    }

    #[test]
    fn zero_noise_walk_stays_at_nominal() {
        let profile = GridProfile {
            name: "flat".into(),
            nominal_hz: 60,
            deviation_limits_hz: (0.0, 0.0),
            wander_timescale_s: 10.0,
            stability: 0.0,
            harmonic_levels: vec![],
            seed: 1,
        };
        let walk = synth_frequency_walk(&profile, 60.0, 1.0).unwrap();
        assert!(walk.iter().all(|&f| f == 60.0));
    }

    #[test]
    fn walk_respects_deviation_limits() {
        let profile = builtin_profile("A").unwrap();
        let walk = synth_frequency_walk(&profile, 1200.0, 1.0).unwrap();
        let (neg, pos) = profile.deviation_limits_hz;
        for &f in &walk {
            assert!(f >= 60.0 + neg - 1e-12 && f <= 60.0 + pos + 1e-12, "{f}");
        }
    }

    #[test]
    fn wide_audio_limits_respected() {
        // Western U.S. style audio envelope
        let profile = GridProfile {
            name: "wide".into(),
            nominal_hz: 60,
            deviation_limits_hz: (-0.1, 0.15),
            wander_timescale_s: 10.0,
            stability: 0.5,
            harmonic_levels: vec![],
            seed: 7,
        };
        let walk = synth_frequency_walk(&profile, 1200.0, 1.0).unwrap();
        for &f in &walk {
            assert!((59.9..=60.15).contains(&f), "{f}");
        }
    }

    #[test]
    fn identical_seeds_bitwise_identical() {
        let profile = builtin_profile("C").unwrap();
        let walk1 = synth_frequency_walk(&profile, 120.0, 1.0).unwrap();
        let walk2 = synth_frequency_walk(&profile, 120.0, 1.0).unwrap();
        assert_eq!(walk1, walk2);
        let rec1 = render_power(&profile, &walk1, 1.0, 1000.0, 30.0).unwrap();
        let rec2 = render_power(&profile, &walk2, 1.0, 1000.0, 30.0).unwrap();
        assert_eq!(rec1.samples, rec2.samples);
        let aud1 = render_audio(&profile, &walk1, 1.0, 1000.0, 0.0, Background::SpeechShaped).unwrap();
        let aud2 = render_audio(&profile, &walk2, 1.0, 1000.0, 0.0, Background::SpeechShaped).unwrap();
        assert_eq!(aud1.samples, aud2.samples);
    }

    #[test]
    fn different_seeds_differ() {
        let mut profile = builtin_profile("C").unwrap();
        let walk1 = synth_frequency_walk(&profile, 120.0, 1.0).unwrap();
        profile.seed += 1;
        let walk2 = synth_frequency_walk(&profile, 120.0, 1.0).unwrap();
        assert_ne!(walk1, walk2);
    }

    #[test]
    fn rendered_tone_peaks_at_nominal() {
        let profile = GridProfile {
            name: "clean".into(),
            nominal_hz: 60,
            deviation_limits_hz: (0.0, 0.0),
            wander_timescale_s: 10.0,
            stability: 0.0,
            harmonic_levels: vec![],
            seed: 3,
        };
        let walk = synth_frequency_walk(&profile, 10.0, 1.0).unwrap();
        let rec = render_power(&profile, &walk, 1.0, 1000.0, 300.0).unwrap();
        let spectrum = crate::spectral::fft_complex(&rec.samples);
        let half = rec.samples.len() / 2;
        let resolution = 1000.0 / rec.samples.len() as f64;
        let peak_bin = (0..=half)
            .max_by(|&a, &b| spectrum[a].norm().partial_cmp(&spectrum[b].norm()).unwrap())
            .unwrap();
        assert!(
            (peak_bin as f64 * resolution - 60.0).abs() <= resolution,
            "peak at {} Hz",
            peak_bin as f64 * resolution
        );
    }
}
