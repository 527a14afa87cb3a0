//! One-vs-one multi-class SVM with an RBF kernel, sigmoid-calibrated
//! pairwise probabilities, coupling into class posteriors, and rejection:
//! when the winning posterior falls below the threshold the prediction is
//! `NoG` ("none of the grids").

mod coupling;
mod platt;
mod smo;

pub use smo::dual_objective;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datastore::{GridLabel, SignalKind};
use crate::enf::EnfSequence;
use crate::error::{Error, Result};
use crate::features::{compute_features, Category, FeatureVector};
use crate::spectral::SeparationReport;

/// Default soft-margin penalty.
pub const DEFAULT_C: f64 = 10.0;
/// Posterior threshold below which a prediction becomes `NoG`.
pub const DEFAULT_REJECTION_THRESHOLD: f64 = 0.6;
const SV_ALPHA_MIN: f64 = 1e-8;
const PAIRWISE_CLAMP: f64 = 1e-7;

/// Per-feature z-score parameters learned from training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub feature_names: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Normalization {
    /// Sums run over sorted columns so the statistics do not depend on the
    /// presentation order of the training data.
    fn fit(vectors: &[&FeatureVector]) -> Self {
        let dims = vectors[0].values.len();
        let n = vectors.len() as f64;
        let mut means = vec![0.0; dims];
        let mut stds = vec![0.0; dims];
        for j in 0..dims {
            let mut column: Vec<f64> = vectors.iter().map(|v| v.values[j]).collect();
            column.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mean = column.iter().sum::<f64>() / n;
            let variance = column.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            means[j] = mean;
            let std = variance.sqrt();
            // constant feature carries no information; keep z at zero
            stds[j] = if std == 0.0 { 1.0 } else { std };
        }
        Normalization {
            feature_names: vectors[0].names.clone(),
            means,
            stds,
        }
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }
}

/// A trained binary SVM for one pair of grids. Decision values are positive
/// toward the first label of `class_pair`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvmModel {
    pub class_pair: (GridLabel, GridLabel),
    pub support_vectors: Vec<Vec<f64>>,
    /// Signed alpha_i * y_i, one per support vector.
    pub dual_coeffs: Vec<f64>,
    pub bias: f64,
    pub rbf_gamma: f64,
    pub platt_a: f64,
    pub platt_b: f64,
}

impl BinarySvmModel {
    /// Decision value for a normalized feature vector.
    pub fn decision(&self, normalized: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coeffs)
            .map(|(sv, coeff)| coeff * rbf_kernel(sv, normalized, self.rbf_gamma))
            .sum::<f64>()
            + self.bias
    }

    /// P(first class of the pair | features).
    pub fn probability(&self, normalized: &[f64]) -> f64 {
        platt::predict(self.decision(normalized), self.platt_a, self.platt_b)
    }
}

/// A complete one-vs-one classifier for one feature category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvoClassifier {
    pub category: Category,
    pub labels: Vec<GridLabel>,
    pub models: Vec<BinarySvmModel>,
    pub rejection_threshold: f64,
    pub normalization: Normalization,
}

/// Prediction outcome: winning label (possibly `NoG`), its coupled
/// posterior, and the full posterior distribution over trained classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: GridLabel,
    pub posterior: f64,
    pub per_class: Vec<(GridLabel, f64)>,
}

fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let dist_sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * dist_sq).exp()
}

/// Canonical sample order: lexicographic by feature values. Makes training
/// independent of presentation order and exactly mirror-symmetric under
/// class swap.
fn canonical_order(samples: &mut Vec<(Vec<f64>, f64)>) {
    samples.sort_by(|(a, ya), (b, yb)| {
        a.partial_cmp(b)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(ya.partial_cmp(yb).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// Train one binary model on already-normalized feature values.
///
/// Solves the soft-margin dual by SMO to a 1e-3 KKT tolerance, then fits
/// the sigmoid calibration on the training decision values.
pub fn train_binary(
    class_pair: (GridLabel, GridLabel),
    positives: &[Vec<f64>],
    negatives: &[Vec<f64>],
    c: f64,
    gamma: f64,
) -> Result<BinarySvmModel> {
    if class_pair.0 == class_pair.1 {
        return Err(Error::InvalidInput("class pair labels must differ".into()));
    }
    if class_pair.0 == GridLabel::NoG || class_pair.1 == GridLabel::NoG {
        return Err(Error::InvalidInput("NoG cannot be a trained class".into()));
    }
    if positives.len() < 2 || negatives.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "each class needs at least 2 samples, got {} and {}",
            positives.len(),
            negatives.len()
        )));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidInput("gamma must be positive".into()));
    }

    let mut samples: Vec<(Vec<f64>, f64)> = positives
        .iter()
        .map(|v| (v.clone(), 1.0))
        .chain(negatives.iter().map(|v| (v.clone(), -1.0)))
        .collect();
    let first = samples[0].0.clone();
    if samples.iter().all(|(v, _)| v == &first) {
        return Err(Error::DegenerateData(
            "all training points identical; no separating solution exists".into(),
        ));
    }
    canonical_order(&mut samples);

    let points: Vec<&[f64]> = samples.iter().map(|(v, _)| v.as_slice()).collect();
    let labels: Vec<f64> = samples.iter().map(|(_, y)| *y).collect();
    let gram: Vec<Vec<f64>> = points
        .iter()
        .map(|a| points.iter().map(|b| rbf_kernel(a, b, gamma)).collect())
        .collect();

    let solution = smo::Smo::solve(&gram, &labels, c)?;

    let mut support_vectors = Vec::new();
    let mut dual_coeffs = Vec::new();
    for (i, &alpha) in solution.alpha.iter().enumerate() {
        if alpha > SV_ALPHA_MIN {
            support_vectors.push(points[i].to_vec());
            dual_coeffs.push(alpha * labels[i]);
        }
    }

    let model = BinarySvmModel {
        class_pair,
        support_vectors,
        dual_coeffs,
        bias: solution.bias,
        rbf_gamma: gamma,
        platt_a: 0.0,
        platt_b: 0.0,
    };
    let decisions: Vec<f64> = points.iter().map(|p| model.decision(p)).collect();
    let (platt_a, platt_b) = platt::fit(&decisions, &labels);
    Ok(BinarySvmModel {
        platt_a,
        platt_b,
        ..model
    })
}

/// Which binary models a classifier trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairPreset {
    /// Every pair of labels present in the training data.
    Full,
    /// The fixed 14-model configuration (experimental: the 50 Hz lists do
    /// not cover all pairs, so coupling fills missing pairs uniformly).
    Paper,
}

impl fmt::Display for PairPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairPreset::Full => f.write_str("full"),
            PairPreset::Paper => f.write_str("paper"),
        }
    }
}

impl std::str::FromStr for PairPreset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(PairPreset::Full),
            "paper" => Ok(PairPreset::Paper),
            other => Err(format!("unknown pair preset '{other}'")),
        }
    }
}

/// Resolve a preset into a concrete pair list for a category.
pub fn pairs_for(
    preset: PairPreset,
    category: Category,
    training_labels: &[GridLabel],
) -> Vec<(GridLabel, GridLabel)> {
    use GridLabel::*;
    match preset {
        PairPreset::Full => {
            let labels: BTreeSet<GridLabel> = training_labels.iter().copied().collect();
            let labels: Vec<GridLabel> = labels.into_iter().collect();
            let mut pairs = Vec::new();
            for i in 0..labels.len() {
                for j in (i + 1)..labels.len() {
                    pairs.push((labels[i], labels[j]));
                }
            }
            pairs
        }
        PairPreset::Paper => match (category.kind, category.nominal_hz) {
            (SignalKind::Power, 60) | (SignalKind::Audio, 60) => {
                vec![(A, C), (A, I), (C, I)]
            }
            (SignalKind::Power, _) => vec![(B, F), (H, F), (E, F), (D, F), (G, F)],
            (SignalKind::Audio, _) => vec![(B, F), (D, E), (G, H)],
        },
    }
}

/// Train a one-vs-one classifier for a category.
///
/// Normalization is fitted on the whole category's training features and
/// persisted with the model. `gamma` defaults to
/// `1 / (num_features * mean feature variance)` of the normalized data.
pub fn train_ovo(
    dataset: &[(FeatureVector, GridLabel)],
    category: Category,
    pair_set: &[(GridLabel, GridLabel)],
    c: f64,
    gamma: Option<f64>,
) -> Result<OvoClassifier> {
    if dataset.is_empty() {
        return Err(Error::InvalidInput("empty training dataset".into()));
    }
    if pair_set.is_empty() {
        return Err(Error::InvalidInput("empty pair set".into()));
    }
    for (vector, label) in dataset {
        if vector.category != category {
            return Err(Error::CategoryMismatch {
                expected: category.to_string(),
                actual: vector.category.to_string(),
            });
        }
        if *label == GridLabel::NoG {
            return Err(Error::InvalidInput(
                "NoG is never a training label".into(),
            ));
        }
    }

    let vectors: Vec<&FeatureVector> = dataset.iter().map(|(v, _)| v).collect();
    let normalization = Normalization::fit(&vectors);
    let normalized: Vec<(Vec<f64>, GridLabel)> = dataset
        .iter()
        .map(|(v, l)| (normalization.apply(&v.values), *l))
        .collect();

    let gamma = match gamma {
        Some(g) if g > 0.0 => g,
        Some(g) => return Err(Error::InvalidInput(format!("gamma must be positive, got {g}"))),
        None => {
            // order-independent like Normalization::fit
            let dims = normalization.means.len();
            let n = normalized.len() as f64;
            let mut mean_variance = 0.0;
            for j in 0..dims {
                let mut column: Vec<f64> = normalized.iter().map(|(v, _)| v[j]).collect();
                column.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let mean = column.iter().sum::<f64>() / n;
                mean_variance += column.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            }
            mean_variance /= dims as f64;
            if mean_variance > 0.0 {
                1.0 / (dims as f64 * mean_variance)
            } else {
                1.0 / dims as f64
            }
        }
    };

    let mut labels: BTreeSet<GridLabel> = BTreeSet::new();
    let mut models = Vec::with_capacity(pair_set.len());
    for &(first, second) in pair_set {
        labels.insert(first);
        labels.insert(second);
        let positives: Vec<Vec<f64>> = normalized
            .iter()
            .filter(|(_, l)| *l == first)
            .map(|(v, _)| v.clone())
            .collect();
        let negatives: Vec<Vec<f64>> = normalized
            .iter()
            .filter(|(_, l)| *l == second)
            .map(|(v, _)| v.clone())
            .collect();
        if positives.is_empty() || negatives.is_empty() {
            return Err(Error::MissingClassSamples(
                first.to_string(),
                second.to_string(),
            ));
        }
        models.push(train_binary((first, second), &positives, &negatives, c, gamma)?);
    }

    Ok(OvoClassifier {
        category,
        labels: labels.into_iter().collect(),
        models,
        rejection_threshold: DEFAULT_REJECTION_THRESHOLD,
        normalization,
    })
}

/// Predict the grid for a feature vector; returns `NoG` when the top
/// coupled posterior falls below the rejection threshold.
pub fn predict(classifier: &OvoClassifier, features: &FeatureVector) -> Result<Prediction> {
    if features.category != classifier.category {
        return Err(Error::CategoryMismatch {
            expected: classifier.category.to_string(),
            actual: features.category.to_string(),
        });
    }
    let normalized = classifier.normalization.apply(&features.values);
    let k = classifier.labels.len();

    // Pairwise probabilities; pairs without a model stay uninformative.
    let mut pairwise = vec![vec![0.5; k]; k];
    for model in &classifier.models {
        let i = classifier
            .labels
            .iter()
            .position(|&l| l == model.class_pair.0)
            .expect("pair label in label set");
        let j = classifier
            .labels
            .iter()
            .position(|&l| l == model.class_pair.1)
            .expect("pair label in label set");
        let p = model
            .probability(&normalized)
            .clamp(PAIRWISE_CLAMP, 1.0 - PAIRWISE_CLAMP);
        pairwise[i][j] = p;
        pairwise[j][i] = 1.0 - p;
    }
    let posteriors = coupling::couple(&pairwise);

    let mut best = 0;
    for t in 1..k {
        if posteriors[t] > posteriors[best] {
            best = t;
        }
    }
    let top = posteriors[best];
    let label = if top < classifier.rejection_threshold {
        GridLabel::NoG
    } else {
        classifier.labels[best]
    };
    Ok(Prediction {
        label,
        posterior: top,
        per_class: classifier.labels.iter().copied().zip(posteriors).collect(),
    })
}

/// Pick the classifier matching the recording's kind and nominal frequency,
/// compute features, and predict.
pub fn route_and_predict(
    report: &SeparationReport,
    sequence: &EnfSequence,
    model_set: &[OvoClassifier],
) -> Result<Prediction> {
    let category = Category::new(report.decided_kind, sequence.nominal_hz)?;
    let classifier = model_set
        .iter()
        .find(|c| c.category == category)
        .ok_or_else(|| Error::MissingCategoryModel(category.to_string()))?;
    let features = compute_features(sequence)?;
    predict(classifier, &features)
}

/// Per-category and overall accuracy plus a confusion matrix whose
/// prediction axis includes `NoG`.
#[derive(Debug, Clone)]
pub struct AccuracyReport {
    pub per_category: Vec<(Category, f64)>,
    pub overall_pct: f64,
    pub total: usize,
    pub correct: usize,
    pub true_labels: Vec<GridLabel>,
    pub predicted_labels: Vec<GridLabel>,
    pub confusion: Vec<Vec<usize>>,
}

impl fmt::Display for AccuracyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (category, pct) in &self.per_category {
            writeln!(f, "{category}: {pct:.2}%")?;
        }
        writeln!(f, "overall: {:.2}% ({}/{})", self.overall_pct, self.correct, self.total)?;
        write!(f, "true\\pred")?;
        for p in &self.predicted_labels {
            write!(f, "\t{p}")?;
        }
        writeln!(f)?;
        for (t, row) in self.true_labels.iter().zip(&self.confusion) {
            write!(f, "{t}")?;
            for count in row {
                write!(f, "\t{count}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Score labeled feature vectors against a set of per-category classifiers.
pub fn evaluate(
    classifiers: &[OvoClassifier],
    rows: &[(FeatureVector, GridLabel)],
) -> Result<AccuracyReport> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("empty evaluation split".into()));
    }

    let mut true_labels: BTreeSet<GridLabel> = rows.iter().map(|(_, l)| *l).collect();
    true_labels.remove(&GridLabel::NoG);
    let mut true_labels: Vec<GridLabel> = true_labels.into_iter().collect();
    if rows.iter().any(|(_, l)| *l == GridLabel::NoG) {
        true_labels.push(GridLabel::NoG);
    }
    let mut predicted_labels: Vec<GridLabel> = GridLabel::GRIDS
        .iter()
        .copied()
        .filter(|g| classifiers.iter().any(|c| c.labels.contains(g)))
        .collect();
    predicted_labels.push(GridLabel::NoG);

    let mut confusion = vec![vec![0usize; predicted_labels.len()]; true_labels.len()];
    let mut per_category: Vec<(Category, usize, usize)> = Vec::new();
    let mut correct = 0usize;

    for (vector, truth) in rows {
        let classifier = classifiers
            .iter()
            .find(|c| c.category == vector.category)
            .ok_or_else(|| Error::MissingCategoryModel(vector.category.to_string()))?;
        let prediction = predict(classifier, vector)?;
        let hit = prediction.label == *truth;
        correct += hit as usize;

        let entry = match per_category.iter_mut().find(|(c, _, _)| *c == vector.category) {
            Some(entry) => entry,
            None => {
                per_category.push((vector.category, 0, 0));
                per_category.last_mut().unwrap()
            }
        };
        entry.1 += hit as usize;
        entry.2 += 1;

        let row = true_labels.iter().position(|l| l == truth).unwrap();
        if let Some(col) = predicted_labels.iter().position(|l| *l == prediction.label) {
            confusion[row][col] += 1;
        }
    }

    per_category.sort_by_key(|(c, _, _)| *c);
    Ok(AccuracyReport {
        per_category: per_category
            .iter()
            .map(|(c, hits, total)| (*c, 100.0 * *hits as f64 / *total as f64))
            .collect(),
        overall_pct: 100.0 * correct as f64 / rows.len() as f64,
        total: rows.len(),
        correct,
        true_labels,
        predicted_labels,
        confusion,
    })
}

const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    #[serde(flatten)]
    classifier: OvoClassifier,
}

/// Serialize a classifier (with schema version) to pretty JSON.
pub fn save_model(classifier: &OvoClassifier, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = ModelFile {
        schema_version: MODEL_SCHEMA_VERSION,
        classifier: classifier.clone(),
    };
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::InvalidInput(format!("model serialization failed: {e}")))?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<OvoClassifier> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
    if file.schema_version != MODEL_SCHEMA_VERSION {
        return Err(Error::InvalidInput(format!(
            "unsupported model schema version {}",
            file.schema_version
        )));
    }
    Ok(file.classifier)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(center: &[f64], count: usize, spread: f64, seed: u64) -> Vec<Vec<f64>> {
        // small deterministic LCG so unit tests need no RNG plumbing
        let mut state = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
        let mut next = move || {
            state = state.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        (0..count)
            .map(|_| center.iter().map(|c| c + spread * next()).collect())
            .collect()
    }

    #[test]
    fn separable_blobs_train_perfectly() {
        let pos = blob(&[2.0, 2.0, 2.0], 50, 0.5, 1);
        let neg = blob(&[-2.0, -2.0, -2.0], 50, 0.5, 2);
        let model = train_binary((GridLabel::A, GridLabel::C), &pos, &neg, 10.0, 1.0 / 3.0).unwrap();
        for p in &pos {
            assert!(model.decision(p) > 0.0);
        }
        for n in &neg {
            assert!(model.decision(n) < 0.0);
        }
    }

    #[test]
    fn xor_pattern_separable_with_rbf() {
        let mut pos = blob(&[1.0, 1.0], 25, 0.3, 3);
        pos.extend(blob(&[-1.0, -1.0], 25, 0.3, 4));
        let mut neg = blob(&[1.0, -1.0], 25, 0.3, 5);
        neg.extend(blob(&[-1.0, 1.0], 25, 0.3, 6));
        let model = train_binary((GridLabel::A, GridLabel::C), &pos, &neg, 10.0, 2.0).unwrap();
        let correct = pos.iter().filter(|p| model.decision(p) > 0.0).count()
            + neg.iter().filter(|n| model.decision(n) < 0.0).count();
        assert!(correct >= 95, "training accuracy {correct}/100");
    }

    #[test]
    fn identical_sets_give_indifferent_decisions() {
        let points = blob(&[0.0, 0.0], 10, 1.0, 7);
        let model =
            train_binary((GridLabel::A, GridLabel::C), &points, &points, 10.0, 0.5).unwrap();
        for p in &points {
            assert!(model.decision(p).abs() < 0.1);
            assert!((model.probability(p) - 0.5).abs() < 0.1);
        }
    }

    #[test]
    fn all_identical_points_rejected() {
        let same = vec![vec![1.0, 2.0]; 4];
        match train_binary((GridLabel::A, GridLabel::C), &same, &same, 10.0, 0.5) {
            Err(Error::DegenerateData(_)) => {}
            other => panic!("expected degenerate data error, got {other:?}"),
        }
    }

    fn labeled_dataset(category: Category, centers: &[(GridLabel, [f64; 3])]) -> Vec<(FeatureVector, GridLabel)> {
        let names: Vec<String> = category.schedule().iter().map(|s| s.to_string()).collect();
        let mut out = Vec::new();
        for (i, (label, center)) in centers.iter().enumerate() {
            for (j, values) in blob(center, 20, 0.4, 11 + i as u64).into_iter().enumerate() {
                // truncate/extend to schedule length
                let mut v = values;
                v.resize(names.len(), 0.0);
                out.push((
                    FeatureVector {
                        category,
                        names: names.clone(),
                        values: v,
                        source_id: format!("{label}-{j}"),
                    },
                    *label,
                ));
            }
        }
        out
    }

    #[test]
    fn ovo_model_counts_match_presets() {
        let cat60 = Category::new(SignalKind::Power, 60).unwrap();
        let data = labeled_dataset(
            cat60,
            &[
                (GridLabel::A, [4.0, 0.0, 0.0]),
                (GridLabel::C, [0.0, 4.0, 0.0]),
                (GridLabel::I, [0.0, 0.0, 4.0]),
            ],
        );
        let labels: Vec<GridLabel> = data.iter().map(|(_, l)| *l).collect();
        let pairs = pairs_for(PairPreset::Full, cat60, &labels);
        assert_eq!(pairs.len(), 3);
        let clf = train_ovo(&data, cat60, &pairs, 10.0, None).unwrap();
        assert_eq!(clf.models.len(), 3);

        // fixed presets
        let cat50 = Category::new(SignalKind::Power, 50).unwrap();
        assert_eq!(pairs_for(PairPreset::Paper, cat50, &[]).len(), 5);
        let audio50 = Category::new(SignalKind::Audio, 50).unwrap();
        assert_eq!(pairs_for(PairPreset::Paper, audio50, &[]).len(), 3);
        let audio60 = Category::new(SignalKind::Audio, 60).unwrap();
        assert_eq!(pairs_for(PairPreset::Paper, audio60, &[]).len(), 3);
        // 3 + 5 + 3 + 3 = 14 models in total
        let total: usize = [
            pairs_for(PairPreset::Paper, cat60, &[]).len(),
            pairs_for(PairPreset::Paper, cat50, &[]).len(),
            pairs_for(PairPreset::Paper, audio60, &[]).len(),
            pairs_for(PairPreset::Paper, audio50, &[]).len(),
        ]
        .iter()
        .sum();
        assert_eq!(total, 14);
    }

    #[test]
    fn two_class_full_ovo_single_model() {
        let cat = Category::new(SignalKind::Audio, 60).unwrap();
        let data = labeled_dataset(
            cat,
            &[(GridLabel::A, [3.0, 0.0, 0.0]), (GridLabel::C, [-3.0, 0.0, 0.0])],
        );
        let labels: Vec<GridLabel> = data.iter().map(|(_, l)| *l).collect();
        let pairs = pairs_for(PairPreset::Full, cat, &labels);
        assert_eq!(pairs.len(), 1);
        let clf = train_ovo(&data, cat, &pairs, 10.0, None).unwrap();
        assert_eq!(clf.models.len(), 1);
    }

    #[test]
    fn missing_class_samples_named() {
        let cat = Category::new(SignalKind::Power, 60).unwrap();
        let data = labeled_dataset(cat, &[(GridLabel::A, [4.0, 0.0, 0.0])]);
        let err = train_ovo(&data, cat, &[(GridLabel::A, GridLabel::C)], 10.0, None).unwrap_err();
        assert!(err.to_string().contains("A") && err.to_string().contains("C"), "{err}");
    }

    #[test]
    fn predict_rejects_category_mismatch() {
        let cat = Category::new(SignalKind::Power, 60).unwrap();
        let data = labeled_dataset(
            cat,
            &[(GridLabel::A, [4.0, 0.0, 0.0]), (GridLabel::C, [-4.0, 0.0, 0.0])],
        );
        let clf = train_ovo(&data, cat, &[(GridLabel::A, GridLabel::C)], 10.0, None).unwrap();
        let other = Category::new(SignalKind::Audio, 50).unwrap();
        let stranger = FeatureVector {
            category: other,
            names: other.schedule().iter().map(|s| s.to_string()).collect(),
            values: vec![0.0; 4],
            source_id: "x".into(),
        };
        match predict(&clf, &stranger) {
            Err(Error::CategoryMismatch { .. }) => {}
            other => panic!("expected category mismatch, got {other:?}"),
        }
    }

    #[test]
    fn threshold_zero_never_rejects() {
        let cat = Category::new(SignalKind::Power, 60).unwrap();
        let data = labeled_dataset(
            cat,
            &[(GridLabel::A, [4.0, 0.0, 0.0]), (GridLabel::C, [-4.0, 0.0, 0.0])],
        );
        let mut clf = train_ovo(&data, cat, &[(GridLabel::A, GridLabel::C)], 10.0, None).unwrap();
        clf.rejection_threshold = 0.0;
        for (vector, _) in &data {
            let p = predict(&clf, vector).unwrap();
            assert_ne!(p.label, GridLabel::NoG);
        }
        // far outlier: still never NoG at threshold zero
        let outlier = FeatureVector {
            category: cat,
            names: cat.schedule().iter().map(|s| s.to_string()).collect(),
            values: vec![1e4, -1e4, 1e4],
            source_id: "far".into(),
        };
        assert_ne!(predict(&clf, &outlier).unwrap().label, GridLabel::NoG);
    }
}
