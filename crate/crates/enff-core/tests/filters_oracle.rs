//! Filter design checked against an independent rational-function
//! evaluator: the cascade is expanded into one numerator/denominator
//! polynomial pair and evaluated directly on the unit circle.

mod common;

use common::{tone, uniform};
use enff_core::filters::{apply, design_butterworth_bandpass, BiquadCascade};
use num_complex::Complex64;

const FS: f64 = 1000.0;

/// Convolve polynomial coefficient vectors.
fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// |H(f)| from the expanded transfer function, not the cascade form.
fn expanded_magnitude(filter: &BiquadCascade, freq_hz: f64) -> f64 {
    let mut numerator = vec![1.0];
    let mut denominator = vec![1.0];
    for s in &filter.sections {
        numerator = convolve(&numerator, &[s.b0, s.b1, s.b2]);
        denominator = convolve(&denominator, &[1.0, s.a1, s.a2]);
    }
    let omega = 2.0 * std::f64::consts::PI * freq_hz / filter.sample_rate_hz;
    let eval = |poly: &[f64]| -> Complex64 {
        poly.iter()
            .enumerate()
            .map(|(k, &c)| Complex64::from_polar(c, -(k as f64) * omega))
            .sum()
    };
    (eval(&numerator) / eval(&denominator)).norm()
}

#[test]
fn cascade_magnitude_matches_expanded_transfer_function() {
    let filter = design_butterworth_bandpass(2, 40.0, 70.0, FS).unwrap();
    for i in 1..100 {
        let f = i as f64 * 4.9;
        let cascade = filter.magnitude_at(f);
        let expanded = expanded_magnitude(&filter, f);
        assert!(
            (cascade - expanded).abs() <= 1e-9 * expanded.max(1.0),
            "mismatch at {f} Hz: {cascade} vs {expanded}"
        );
    }
}

#[test]
fn narrow_audio_band_is_selective() {
    // 1 Hz band around 60 Hz: 2 Hz away must already be 10x down
    let filter = design_butterworth_bandpass(2, 59.5, 60.5, FS).unwrap();
    let ratio = expanded_magnitude(&filter, 60.0) / expanded_magnitude(&filter, 58.0);
    assert!(ratio > 10.0, "selectivity ratio {ratio}");
}

#[test]
fn steady_state_gain_matches_frequency_response() {
    let filter = design_butterworth_bandpass(2, 40.0, 70.0, FS).unwrap();
    let input = tone(60.0, 1.0, 20_000, FS);
    let output = apply(&filter, &input).unwrap();
    // skip the transient, measure peak amplitude in steady state
    let steady = &output[10_000..];
    let peak = steady.iter().fold(0.0f64, |m, &y| m.max(y.abs()));
    let expected = filter.magnitude_at(60.0);
    assert!(
        (peak / expected - 1.0).abs() < 0.01,
        "steady-state peak {peak} vs |H(60)| {expected}"
    );
}

#[test]
fn filtering_is_linear() {
    let filter = design_butterworth_bandpass(2, 40.0, 70.0, FS).unwrap();
    let x = uniform(4000, -1.0, 1.0, 21);
    let y = uniform(4000, -1.0, 1.0, 22);
    let (a, b) = (1.75, -0.4);
    let combined: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| a * xi + b * yi).collect();

    let fx = apply(&filter, &x).unwrap();
    let fy = apply(&filter, &y).unwrap();
    let fc = apply(&filter, &combined).unwrap();
    for i in 0..fc.len() {
        let lin = a * fx[i] + b * fy[i];
        assert!((fc[i] - lin).abs() < 1e-9, "nonlinearity {} at {i}", fc[i] - lin);
    }
}

#[test]
fn impulse_response_decays_below_1e12th() {
    for (low, high) in [(40.0, 70.0), (59.5, 60.5), (119.5, 120.5)] {
        let filter = design_butterworth_bandpass(2, low, high, FS).unwrap();
        let mut impulse = vec![0.0; 1_000_000];
        impulse[0] = 1.0;
        let response = apply(&filter, &impulse).unwrap();
        let tail_max = response[999_000..]
            .iter()
            .fold(0.0f64, |m, &y| m.max(y.abs()));
        assert!(
            tail_max < 1e-12,
            "band [{low}, {high}]: tail magnitude {tail_max:e}"
        );
    }
}

#[test]
fn band_edges_sit_at_half_power_of_peak() {
    let filter = design_butterworth_bandpass(2, 40.0, 70.0, FS).unwrap();
    let peak = (0..=3000)
        .map(|i| 40.0 + 30.0 * i as f64 / 3000.0)
        .map(|f| expanded_magnitude(&filter, f))
        .fold(0.0f64, f64::max);
    for edge in [40.0, 70.0] {
        let magnitude = expanded_magnitude(&filter, edge);
        assert!(
            (magnitude / peak - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-3,
            "edge {edge}: {magnitude} vs peak {peak}"
        );
    }
}
