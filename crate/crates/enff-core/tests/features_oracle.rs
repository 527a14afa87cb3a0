//! Every scalar feature against an independently written brute-force
//! oracle, the Burg fit against a constructed AR(4) process and a
//! least-squares oracle, and schedule integrity as a property.

mod common;

use common::{uniform, white_noise};
use enff_core::datastore::SignalKind;
use enff_core::enf::{EnfFrame, EnfSequence};
use enff_core::features::{
    burg_ar4, compute_features, crest_factor, feature_distance_matrix, iqr, log_var_autocorr,
    modified_mav, psd_feature, waveform_length, Category, FeatureVector,
};
use proptest::prelude::*;

// ---------------------------------------------------------------------------
// brute-force oracles (no shared code with the implementations)
// ---------------------------------------------------------------------------

fn median_oracle(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    match n % 2 {
        1 => sorted[n / 2],
        _ => (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0,
    }
}

fn iqr_oracle(values: &[f64]) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    let lower = &s[0..n / 2];
    let upper = &s[(n + 1) / 2..];
    median_oracle(upper) - median_oracle(lower)
}

fn crest_oracle(values: &[f64]) -> f64 {
    let mut peak = 0.0f64;
    let mut sum_sq = 0.0;
    for &v in values {
        if v.abs() > peak {
            peak = v.abs();
        }
        sum_sq += v * v;
    }
    peak / (sum_sq / values.len() as f64).sqrt()
}

fn waveform_length_oracle(values: &[f64]) -> f64 {
    let mut total = 0.0;
    for j in 1..values.len() {
        total += (values[j] - values[j - 1]).abs();
    }
    total
}

fn modified_mav_oracle(values: &[f64]) -> f64 {
    let mut total = 0.0;
    for &v in values {
        total += 0.5 * v.abs();
    }
    total / values.len() as f64
}

fn log_var_autocorr_oracle(values: &[f64]) -> f64 {
    let n = values.len();
    let mut autocorr = vec![0.0; n];
    for (lag, r) in autocorr.iter_mut().enumerate() {
        for i in lag..n {
            *r += values[i] * values[i - lag];
        }
        *r /= n as f64;
    }
    let mean: f64 = autocorr.iter().sum::<f64>() / n as f64;
    let mut var = 0.0;
    for r in &autocorr {
        var += (r - mean).powi(2);
    }
    (var / n as f64).ln()
}

/// Least-squares AR(4) fit by normal equations and Gaussian elimination.
fn least_squares_ar4(values: &[f64]) -> ([f64; 4], f64) {
    let n = values.len();
    let mut ata = [[0.0f64; 4]; 4];
    let mut atb = [0.0f64; 4];
    for t in 4..n {
        let row = [values[t - 1], values[t - 2], values[t - 3], values[t - 4]];
        for i in 0..4 {
            for j in 0..4 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * values[t];
        }
    }
    // gaussian elimination with partial pivoting
    let mut a = ata;
    let mut b = atb;
    for col in 0..4 {
        let pivot = (col..4).max_by(|&p, &q| a[p][col].abs().partial_cmp(&a[q][col].abs()).unwrap()).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..4 {
            let factor = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut g = [0.0f64; 4];
    for row in (0..4).rev() {
        let mut acc = b[row];
        for k in row + 1..4 {
            acc -= a[row][k] * g[k];
        }
        g[row] = acc / a[row][row];
    }
    let mut residual = 0.0;
    for t in 4..n {
        let predicted: f64 = (0..4).map(|i| g[i] * values[t - 1 - i]).sum();
        residual += (values[t] - predicted).powi(2);
    }
    (g, residual / (n - 4) as f64)
}

/// Independent Welch re-implementation with a direct DFT.
fn welch_mean_density_oracle(values: &[f64]) -> f64 {
    let mean: f64 = values.iter().sum::<f64>() / values.len() as f64;
    let x: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let seg = 64.min(x.len());
    let hop = (seg as f64 * 0.5).round().max(1.0) as usize;
    let segments = (x.len() - seg) / hop + 1;
    let window: Vec<f64> = (0..seg)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / seg as f64).cos()))
        .collect();
    let window_power: f64 = window.iter().map(|w| w * w).sum();

    let half = seg / 2;
    let mut density = vec![0.0; half + 1];
    for s in 0..segments {
        let chunk: Vec<f64> = x[s * hop..s * hop + seg]
            .iter()
            .zip(&window)
            .map(|(v, w)| v * w)
            .collect();
        for (k, d) in density.iter_mut().enumerate() {
            let mut re = 0.0;
            let mut im = 0.0;
            for (t, &v) in chunk.iter().enumerate() {
                let phase = -2.0 * std::f64::consts::PI * k as f64 * t as f64 / seg as f64;
                re += v * phase.cos();
                im += v * phase.sin();
            }
            *d += re * re + im * im;
        }
    }
    let scale = 1.0 / (window_power * segments as f64); // fs = 1
    for (k, d) in density.iter_mut().enumerate() {
        let one_sided = if k == 0 || (seg % 2 == 0 && k == half) { 1.0 } else { 2.0 };
        *d *= scale * one_sided;
    }
    density.iter().sum::<f64>() / density.len() as f64
}

// ---------------------------------------------------------------------------
// oracle agreement over many random sequences
// ---------------------------------------------------------------------------

#[test]
fn scalar_features_match_oracles_on_1000_sequences() {
    for case in 0..1000u64 {
        let len = 4 + (case as usize * 7) % 197;
        let values = uniform(len, -3.0, 5.0, 40_000 + case);
        assert!((iqr(&values).unwrap() - iqr_oracle(&values)).abs() < 1e-9);
        assert!((crest_factor(&values).unwrap() - crest_oracle(&values)).abs() < 1e-9);
        assert!(
            (waveform_length(&values).unwrap() - waveform_length_oracle(&values)).abs() < 1e-9
        );
        assert!((modified_mav(&values).unwrap() - modified_mav_oracle(&values)).abs() < 1e-9);
        assert!(
            (log_var_autocorr(&values).unwrap() - log_var_autocorr_oracle(&values)).abs() < 1e-9
        );
    }
}

#[test]
fn psd_feature_matches_independent_welch() {
    for case in 0..20u64 {
        let len = 70 + (case as usize * 13) % 130;
        let values = uniform(len, 50.0, 52.0, 50_000 + case);
        let got = psd_feature(&values).unwrap();
        let want = welch_mean_density_oracle(&values);
        assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "{got} vs {want}");
    }
}

#[test]
fn psd_feature_scales_with_variance() {
    let base = white_noise(512, 1.0, 51);
    let scaled: Vec<f64> = base.iter().map(|v| v * 2.0).collect();
    let ratio = psd_feature(&scaled).unwrap() / psd_feature(&base).unwrap();
    assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
}

#[test]
fn psd_feature_distinguishes_slow_from_white() {
    let white = {
        let w = white_noise(512, 1.0, 52);
        normalize_variance(&w)
    };
    let slow = {
        let noise = white_noise(512, 1.0, 53);
        let mut state = 0.0;
        let walk: Vec<f64> = noise
            .iter()
            .map(|&n| {
                state = 0.99 * state + n;
                state
            })
            .collect();
        normalize_variance(&walk)
    };
    let f_white = psd_feature(&white).unwrap();
    let f_slow = psd_feature(&slow).unwrap();
    // direction fixed by the independent oracle
    let o_white = welch_mean_density_oracle(&white);
    let o_slow = welch_mean_density_oracle(&slow);
    assert_eq!(f_slow > f_white, o_slow > o_white);
    assert!(
        (f_slow - f_white).abs() > 0.01 * f_white.abs(),
        "{f_slow} vs {f_white}"
    );
}

fn normalize_variance(values: &[f64]) -> Vec<f64> {
    let mean: f64 = values.iter().sum::<f64>() / values.len() as f64;
    let var: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean) / var.sqrt()).collect()
}

// ---------------------------------------------------------------------------
// Burg AR(4)
// ---------------------------------------------------------------------------

/// Predictor coefficients of two stable conjugate pole pairs (radii 0.7 and
/// 0.85), derived from the pole positions before the test was written.
const AR4_TRUE: [f64; 4] = [2.2137, -2.3328, 1.3277, -0.3528];

fn simulate_ar4(g: &[f64; 4], innovation_std: f64, len: usize, seed: u64) -> Vec<f64> {
    let noise = white_noise(len + 1000, innovation_std, seed);
    let mut x = vec![0.0f64; len + 1000];
    for t in 4..x.len() {
        x[t] = g[0] * x[t - 1] + g[1] * x[t - 2] + g[2] * x[t - 3] + g[3] * x[t - 4] + noise[t];
    }
    x.split_off(1000)
}

#[test]
fn burg_recovers_constructed_ar4() {
    let x = simulate_ar4(&AR4_TRUE, 1.0, 100_000, 61);
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(peak < 1e3, "simulation unstable, peak {peak}");

    let fit = burg_ar4(&x).unwrap();
    let recovered = fit.coefficients();
    for (got, want) in recovered.iter().zip(&AR4_TRUE) {
        assert!((got - want).abs() < 0.02, "coefficient {got} vs {want}");
    }
    assert!((fit.h - 1.0).abs() < 0.05, "innovation variance {}", fit.h);

    // cross-check against the least-squares oracle
    let (ls, ls_var) = least_squares_ar4(&x);
    for (got, want) in recovered.iter().zip(&ls) {
        assert!((got - want).abs() < 0.02, "burg {got} vs ls {want}");
    }
    assert!((fit.h / ls_var - 1.0).abs() < 0.05, "h {} vs ls {ls_var}", fit.h);
}

#[test]
fn burg_on_white_noise_finds_no_structure() {
    let x = white_noise(100_000, 1.0, 62);
    let variance = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    let fit = burg_ar4(&x).unwrap();
    for g in fit.coefficients() {
        assert!(g.abs() < 0.05, "spurious coefficient {g}");
    }
    assert!((fit.h / variance - 1.0).abs() < 0.02, "h {} vs var {variance}", fit.h);
}

// ---------------------------------------------------------------------------
// schedules and distance matrix
// ---------------------------------------------------------------------------

fn sequence_from_values(kind: SignalKind, nominal: u32, values: &[f64]) -> EnfSequence {
    let policy = kind.framing();
    EnfSequence {
        frames: values
            .iter()
            .enumerate()
            .map(|(i, &v)| EnfFrame {
                index: i,
                time_start_s: i as f64 * policy.frame_hop_s,
                frequency_hz: v,
            })
            .collect(),
        frame_length_s: policy.frame_length_s,
        frame_hop_s: policy.frame_hop_s,
        nominal_hz: nominal,
        signal_kind: kind,
        source_id: "prop".into(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schedule_integrity_over_random_sequences(
        seed in 0u64..1_000_000,
        len in 20usize..120,
    ) {
        for (kind, nominal) in [
            (SignalKind::Power, 60u32),
            (SignalKind::Power, 50),
            (SignalKind::Audio, 60),
            (SignalKind::Audio, 50),
        ] {
            let base = nominal as f64;
            let values = uniform(len, base - 0.1, base + 0.1, seed);
            let sequence = sequence_from_values(kind, nominal, &values);
            let vector = compute_features(&sequence).unwrap();
            let category = Category::new(kind, nominal).unwrap();
            prop_assert_eq!(vector.names.len(), category.schedule().len());
            for (name, want) in vector.names.iter().zip(category.schedule()) {
                prop_assert_eq!(name.as_str(), *want);
            }
            for v in &vector.values {
                prop_assert!(v.is_finite());
            }
        }
    }

    #[test]
    fn shift_and_scale_behavior(
        seed in 0u64..1_000_000,
        shift in -5.0f64..5.0,
        scale in 0.1f64..10.0,
    ) {
        let values = uniform(32, -1.0, 1.0, seed);
        let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
        let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
        // iqr ignores shifts, waveform length scales linearly
        prop_assert!((iqr(&values).unwrap() - iqr(&shifted).unwrap()).abs() < 1e-9);
        let wl_ratio = waveform_length(&scaled).unwrap() / waveform_length(&values).unwrap();
        prop_assert!((wl_ratio - scale).abs() < 1e-9);
        // crest factor ignores positive scaling
        prop_assert!(
            (crest_factor(&scaled).unwrap() - crest_factor(&values).unwrap()).abs() < 1e-9
        );
    }
}

#[test]
fn constant_audio_sequence_propagates_feature_name() {
    let sequence = sequence_from_values(SignalKind::Audio, 60, &[60.0; 30]);
    let err = compute_features(&sequence).unwrap_err();
    assert!(err.to_string().contains("log_var_autocorr"), "{err}");
}

#[test]
fn distance_matrix_matches_direct_loop() {
    let category = Category::new(SignalKind::Power, 50).unwrap();
    let names: Vec<String> = category.schedule().iter().map(|s| s.to_string()).collect();
    let vectors: Vec<FeatureVector> = (0..12)
        .map(|i| FeatureVector {
            category,
            names: names.clone(),
            values: uniform(6, -2.0, 2.0, 70 + i),
            source_id: format!("v{i}"),
        })
        .collect();
    let matrix = feature_distance_matrix(&vectors).unwrap();

    // direct z-score + pairwise loop
    let n = vectors.len() as f64;
    let mut z = vec![vec![0.0; vectors.len()]; 6];
    for (j, column) in z.iter_mut().enumerate() {
        let mean: f64 = vectors.iter().map(|v| v.values[j]).sum::<f64>() / n;
        let std =
            (vectors.iter().map(|v| (v.values[j] - mean).powi(2)).sum::<f64>() / n).sqrt();
        for (i, v) in vectors.iter().enumerate() {
            column[i] = (v.values[j] - mean) / std;
        }
    }
    for j in 0..6 {
        for k in 0..6 {
            let mut acc = 0.0;
            for i in 0..vectors.len() {
                acc += (z[j][i] - z[k][i]).powi(2);
            }
            assert!((matrix[j][k] - acc.sqrt()).abs() < 1e-9);
        }
    }
}
