//! Statistical features computed from ENF sequences.
//!
//! Each (signal kind, nominal frequency) category has a fixed feature
//! schedule; the schedules were selected for grid discriminability and the
//! order is part of the persisted format. Features consume the raw sequence
//! values (the mean and median are themselves features); only the spectral
//! density summary removes the mean first.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datastore::SignalKind;
use crate::enf::EnfSequence;
use crate::error::{Error, Result};
use crate::spectral;

/// Feature category: which schedule applies to a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Category {
    pub kind: SignalKind,
    pub nominal_hz: u32,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category { kind: SignalKind::Power, nominal_hz: 60 },
        Category { kind: SignalKind::Power, nominal_hz: 50 },
        Category { kind: SignalKind::Audio, nominal_hz: 60 },
        Category { kind: SignalKind::Audio, nominal_hz: 50 },
    ];

    pub fn new(kind: SignalKind, nominal_hz: u32) -> Result<Self> {
        if nominal_hz != 50 && nominal_hz != 60 {
            return Err(Error::InvalidInput(format!(
                "nominal frequency must be 50 or 60, got {nominal_hz}"
            )));
        }
        Ok(Category { kind, nominal_hz })
    }

    /// Feature names for this category, in computation and storage order.
    pub fn schedule(self) -> &'static [&'static str] {
        match (self.kind, self.nominal_hz) {
            (SignalKind::Power, 60) => &["iqr", "log_var_autocorr", "log_ar4_fpe"],
            (SignalKind::Power, _) => &[
                "mean",
                "crest_factor",
                "median",
                "waveform_length",
                "iqr",
                "ar4_g2",
            ],
            (SignalKind::Audio, 60) => &["log_var_autocorr", "iqr", "median", "modified_mav"],
            (SignalKind::Audio, _) => &["median", "psd_feature", "ar4_g2", "log_var_autocorr"],
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind, self.nominal_hz)
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (kind, hz) = s
            .split_once(':')
            .ok_or_else(|| format!("expected '<kind>:<hz>', got '{s}'"))?;
        let kind = SignalKind::from_str(kind)?;
        let nominal_hz: u32 = hz.parse().map_err(|_| format!("bad frequency '{hz}'"))?;
        Category::new(kind, nominal_hz).map_err(|e| e.to_string())
    }
}

/// Union of every category's schedule, in canonical column order for the
/// persisted feature table.
pub const ALL_FEATURE_NAMES: [&str; 10] = [
    "mean",
    "crest_factor",
    "median",
    "waveform_length",
    "iqr",
    "modified_mav",
    "log_var_autocorr",
    "log_ar4_fpe",
    "ar4_g2",
    "psd_feature",
];

/// Ordered real-valued features for one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub category: Category,
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub source_id: String,
}

impl FeatureVector {
    /// Build a vector from possibly unordered (name, value) data, restoring
    /// the category's schedule order and checking the set matches exactly.
    pub fn from_raw(
        category: Category,
        names: Vec<String>,
        values: Vec<f64>,
        source_id: String,
    ) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::InvalidInput(
                "feature names and values differ in length".into(),
            ));
        }
        let schedule = category.schedule();
        if names.len() != schedule.len() {
            return Err(Error::InvalidInput(format!(
                "category {category} expects {} features, got {}",
                schedule.len(),
                names.len()
            )));
        }
        let mut ordered = Vec::with_capacity(schedule.len());
        for &want in schedule {
            let pos = names
                .iter()
                .position(|n| n == want)
                .ok_or_else(|| Error::InvalidInput(format!("missing feature '{want}'")))?;
            let value = values[pos];
            if !value.is_finite() {
                return Err(Error::InvalidInput(format!("feature '{want}' is not finite")));
            }
            ordered.push(value);
        }
        Ok(FeatureVector {
            category,
            names: schedule.iter().map(|s| s.to_string()).collect(),
            values: ordered,
            source_id,
        })
    }
}

/// AR(4) fit: predictor coefficients and the final prediction error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar4Fit {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
    /// Innovation-variance estimate; always positive.
    pub h: f64,
}

impl Ar4Fit {
    pub fn coefficients(&self) -> [f64; 4] {
        [self.g1, self.g2, self.g3, self.g4]
    }
}

fn require_len(values: &[f64], min: usize, what: &str) -> Result<()> {
    if values.len() < min {
        return Err(Error::InvalidInput(format!(
            "{what} needs at least {min} values, got {}",
            values.len()
        )));
    }
    Ok(())
}

fn is_constant(values: &[f64]) -> bool {
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo <= 1e-12 * (1.0 + max_abs)
}

pub fn mean(values: &[f64]) -> Result<f64> {
    require_len(values, 1, "mean")?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

pub fn median(values: &[f64]) -> Result<f64> {
    require_len(values, 1, "median")?;
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(median_of_sorted(&sorted))
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Interquartile range with quartiles by the median-of-halves rule: the
/// lower half is everything below the median position, the upper half
/// everything above it (the middle element of an odd-length sequence
/// belongs to neither half).
pub fn iqr(values: &[f64]) -> Result<f64> {
    require_len(values, 4, "iqr")?;
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let q1 = median_of_sorted(&sorted[..n / 2]);
    let q3 = median_of_sorted(&sorted[n.div_ceil(2)..]);
    Ok(q3 - q1)
}

/// Peak magnitude over root-mean-square magnitude.
pub fn crest_factor(values: &[f64]) -> Result<f64> {
    require_len(values, 1, "crest_factor")?;
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Err(Error::InvalidInput(
            "crest factor undefined for all-zero sequence".into(),
        ));
    }
    let rms = (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt();
    Ok(peak / rms)
}

/// Sum of absolute first differences.
pub fn waveform_length(values: &[f64]) -> Result<f64> {
    require_len(values, 2, "waveform_length")?;
    Ok(values.windows(2).map(|w| (w[1] - w[0]).abs()).sum())
}

/// Half the mean absolute value: every sample weighted by 0.5.
pub fn modified_mav(values: &[f64]) -> Result<f64> {
    require_len(values, 1, "modified_mav")?;
    Ok(values.iter().map(|v| 0.5 * v.abs()).sum::<f64>() / values.len() as f64)
}

/// Natural log of the population variance of the biased autocorrelation
/// sequence over lags 0..n-1.
pub fn log_var_autocorr(values: &[f64]) -> Result<f64> {
    require_len(values, 4, "log_var_autocorr")?;
    if is_constant(values) {
        return Err(Error::InvalidInput(
            "autocorrelation variance is zero for a constant sequence".into(),
        ));
    }
    let n = values.len();
    let mut autocorr = Vec::with_capacity(n);
    for lag in 0..n {
        let mut acc = 0.0;
        for j in 0..n - lag {
            acc += values[j] * values[j + lag];
        }
        autocorr.push(acc / n as f64);
    }
    let mean = autocorr.iter().sum::<f64>() / n as f64;
    let variance = autocorr.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n as f64;
    if variance <= 0.0 {
        return Err(Error::InvalidInput(
            "autocorrelation variance is zero".into(),
        ));
    }
    Ok(variance.ln())
}

/// Order-4 Burg fit minimizing combined forward and backward prediction
/// error. Coefficients are in predictor form: f[k] = sum g_i f[k-i] + noise.
pub fn burg_ar4(values: &[f64]) -> Result<Ar4Fit> {
    const ORDER: usize = 4;
    require_len(values, 8, "burg_ar4")?;
    if is_constant(values) {
        return Err(Error::InvalidInput(
            "AR fit undefined for a constant sequence".into(),
        ));
    }
    let n = values.len();
    let mut forward = values.to_vec();
    let mut backward = values.to_vec();
    let mut a = [0.0; ORDER + 1];
    a[0] = 1.0;
    let mut error = values.iter().map(|v| v * v).sum::<f64>() / n as f64;

    for m in 1..=ORDER {
        let mut num = 0.0;
        let mut den = 0.0;
        for t in m..n {
            num += forward[t] * backward[t - 1];
            den += forward[t] * forward[t] + backward[t - 1] * backward[t - 1];
        }
        if den <= 0.0 {
            return Err(Error::InvalidInput(
                "prediction error vanished before reaching order 4".into(),
            ));
        }
        let mut k = -2.0 * num / den;
        if k.abs() >= 1.0 {
            let clamped = k.signum() * (1.0 - 1e-10);
            log::warn!("reflection coefficient {k} at stage {m} clamped to {clamped}");
            k = clamped;
        }
        let prev = a;
        for i in 1..=m {
            a[i] = prev[i] + k * prev[m - i];
        }
        for t in (m..n).rev() {
            let f_t = forward[t];
            let b_prev = backward[t - 1];
            forward[t] = f_t + k * b_prev;
            backward[t] = b_prev + k * f_t;
        }
        error *= 1.0 - k * k;
    }

    Ok(Ar4Fit {
        g1: -a[1],
        g2: -a[2],
        g3: -a[3],
        g4: -a[4],
        h: error,
    })
}

/// Scalar spectral summary: mean of the Welch density of the mean-removed
/// sequence, at unit sample rate with segments of min(64, n).
pub fn psd_feature(values: &[f64]) -> Result<f64> {
    require_len(values, 16, "psd_feature")?;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let segment = 64.min(centered.len());
    let psd = spectral::welch_psd(&centered, 1.0, segment, 0.5)?;
    Ok(psd.density.iter().sum::<f64>() / psd.density.len() as f64)
}

/// Compute the scheduled features for a sequence's category.
pub fn compute_features(sequence: &EnfSequence) -> Result<FeatureVector> {
    sequence.validate()?;
    let category = Category::new(sequence.signal_kind, sequence.nominal_hz)?;
    let values = sequence.values();
    let schedule = category.schedule();
    let mut feature_values = Vec::with_capacity(schedule.len());
    for &name in schedule {
        let value = compute_one(name, &values).map_err(|e| Error::Feature {
            feature: name.to_string(),
            msg: e.to_string(),
        })?;
        feature_values.push(value);
    }
    Ok(FeatureVector {
        category,
        names: schedule.iter().map(|s| s.to_string()).collect(),
        values: feature_values,
        source_id: sequence.source_id.clone(),
    })
}

fn compute_one(name: &str, values: &[f64]) -> Result<f64> {
    match name {
        "mean" => mean(values),
        "median" => median(values),
        "iqr" => iqr(values),
        "crest_factor" => crest_factor(values),
        "waveform_length" => waveform_length(values),
        "modified_mav" => modified_mav(values),
        "log_var_autocorr" => log_var_autocorr(values),
        "log_ar4_fpe" => burg_ar4(values).map(|fit| fit.h.ln()),
        "ar4_g2" => burg_ar4(values).map(|fit| fit.g2),
        "psd_feature" => psd_feature(values),
        other => Err(Error::InvalidInput(format!("unknown feature '{other}'"))),
    }
}

/// Pairwise Euclidean distances between z-scored feature columns; a
/// selection diagnostic, not part of the classification path.
pub fn feature_distance_matrix(vectors: &[FeatureVector]) -> Result<Vec<Vec<f64>>> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::InvalidInput("no feature vectors".into()))?;
    let category = first.category;
    if let Some(bad) = vectors.iter().find(|v| v.category != category) {
        return Err(Error::InvalidInput(format!(
            "mixed categories: {} vs {}",
            category, bad.category
        )));
    }
    let dims = first.values.len();
    let n = vectors.len();

    // z-score each feature column
    let mut columns = vec![vec![0.0; n]; dims];
    for (j, column) in columns.iter_mut().enumerate() {
        for (i, vector) in vectors.iter().enumerate() {
            column[i] = vector.values[j];
        }
        let mean = column.iter().sum::<f64>() / n as f64;
        let std = (column.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
        for v in column.iter_mut() {
            *v = if std > 0.0 { (*v - mean) / std } else { 0.0 };
        }
    }

    let mut matrix = vec![vec![0.0; dims]; dims];
    for j in 0..dims {
        for k in (j + 1)..dims {
            let dist = columns[j]
                .iter()
                .zip(&columns[k])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            matrix[j][k] = dist;
            matrix[k][j] = dist;
        }
    }
    Ok(matrix)
}
