//! Shared helpers for integration tests: independent frequency oracle and
//! deterministic signal generators.
#![allow(dead_code)] // each test binary uses a different subset

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::FftPlanner;

/// Independent frequency oracle: Hann-windowed, heavily zero-padded FFT
/// peak with quadratic log-magnitude interpolation. No shared code with the
/// subspace estimator beyond the FFT kernel itself.
pub fn fft_peak_frequency(frame: &[f64], sample_rate_hz: f64, band: (f64, f64)) -> f64 {
    let n = frame.len();
    let padded = (n * 64).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); padded];
    for (i, &x) in frame.iter().enumerate() {
        let w = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos());
        buf[i] = Complex64::new(x * w, 0.0);
    }
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);

    let resolution = sample_rate_hz / padded as f64;
    let lo_bin = (band.0 / resolution).ceil() as usize;
    let hi_bin = ((band.1 / resolution).floor() as usize).min(padded / 2);
    let peak = (lo_bin..=hi_bin)
        .max_by(|&a, &b| buf[a].norm().partial_cmp(&buf[b].norm()).unwrap())
        .expect("band contains at least one bin");

    // quadratic interpolation on log magnitude
    let mag = |k: usize| buf[k].norm().max(1e-300).ln();
    if peak == 0 || peak + 1 >= padded / 2 {
        return peak as f64 * resolution;
    }
    let (left, center, right) = (mag(peak - 1), mag(peak), mag(peak + 1));
    let denom = left - 2.0 * center + right;
    let delta = if denom.abs() > 1e-300 { 0.5 * (left - right) / denom } else { 0.0 };
    (peak as f64 + delta) * resolution
}

/// Sinusoid with exact phase progression.
pub fn tone(freq: f64, amplitude: f64, samples: usize, fs: f64) -> Vec<f64> {
    (0..samples)
        .map(|i| amplitude * (2.0 * std::f64::consts::PI * freq * i as f64 / fs).sin())
        .collect()
}

/// Tone in white Gaussian noise at the requested SNR (tone power over
/// noise power).
pub fn noisy_tone(freq: f64, snr_db: f64, samples: usize, fs: f64, seed: u64) -> Vec<f64> {
    let noise_std = (0.5 / 10f64.powf(snr_db / 10.0)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_std).unwrap();
    tone(freq, 1.0, samples, fs)
        .into_iter()
        .map(|x| x + normal.sample(&mut rng))
        .collect()
}

/// Seeded standard normal samples.
pub fn white_noise(samples: usize, std: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, std).unwrap();
    (0..samples).map(|_| normal.sample(&mut rng)).collect()
}

/// Uniform random values in [lo, hi).
pub fn uniform(samples: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| lo + (hi - lo) * rand::Rng::random::<f64>(&mut rng))
        .collect()
}
