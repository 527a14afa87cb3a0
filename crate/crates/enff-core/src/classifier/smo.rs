//! Sequential minimal optimization for the soft-margin SVM dual.
//!
//! Deterministic variant of Platt's algorithm: the first-choice heuristic
//! breaks ties by smallest index and the fallback scans start at index 0
//! instead of a random point, so identical inputs always produce identical
//! solutions. The decision function convention is
//! `f(x) = sum_i alpha_i y_i K(x_i, x) + b`.

use crate::error::{Error, Result};

/// KKT violation tolerance.
pub(crate) const KKT_TOL: f64 = 1e-3;
const STEP_EPS: f64 = 1e-12;
const MAX_PASSES: usize = 100_000;

pub(crate) struct SmoSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
}

pub(crate) struct Smo<'a> {
    gram: &'a [Vec<f64>],
    labels: &'a [f64],
    c: f64,
    alpha: Vec<f64>,
    bias: f64,
    errors: Vec<f64>,
}

impl<'a> Smo<'a> {
    pub(crate) fn solve(gram: &'a [Vec<f64>], labels: &'a [f64], c: f64) -> Result<SmoSolution> {
        let n = labels.len();
        assert_eq!(gram.len(), n);
        if !(c > 0.0) {
            return Err(Error::InvalidInput("penalty C must be positive".into()));
        }
        let mut smo = Smo {
            gram,
            labels,
            c,
            alpha: vec![0.0; n],
            bias: 0.0,
            // with alpha = 0 and b = 0, f(x_i) = 0 so E_i = -y_i
            errors: labels.iter().map(|y| -y).collect(),
        };
        smo.run()?;
        Ok(SmoSolution {
            alpha: smo.alpha,
            bias: smo.bias,
        })
    }

    fn run(&mut self) -> Result<()> {
        let n = self.labels.len();
        let mut examine_all = true;
        for _pass in 0..MAX_PASSES {
            let mut num_changed = 0;
            if examine_all {
                for i in 0..n {
                    num_changed += self.examine(i) as usize;
                }
                if num_changed == 0 {
                    return Ok(());
                }
                examine_all = false;
            } else {
                for i in 0..n {
                    if self.is_free(i) {
                        num_changed += self.examine(i) as usize;
                    }
                }
                if num_changed == 0 {
                    examine_all = true;
                }
            }
        }
        log::warn!("SMO hit the pass limit before a clean KKT sweep");
        Ok(())
    }

    fn is_free(&self, i: usize) -> bool {
        self.alpha[i] > 0.0 && self.alpha[i] < self.c
    }

    fn examine(&mut self, i2: usize) -> bool {
        let y2 = self.labels[i2];
        let alpha2 = self.alpha[i2];
        let e2 = self.errors[i2];
        let r2 = e2 * y2;
        let violates = (r2 < -KKT_TOL && alpha2 < self.c) || (r2 > KKT_TOL && alpha2 > 0.0);
        if !violates {
            return false;
        }

        // First choice: free point maximizing |E1 - E2|, smallest index wins ties.
        let mut best: Option<(f64, usize)> = None;
        for i1 in 0..self.labels.len() {
            if i1 != i2 && self.is_free(i1) {
                let gap = (self.errors[i1] - e2).abs();
                if best.map_or(true, |(g, _)| gap > g) {
                    best = Some((gap, i1));
                }
            }
        }
        if let Some((_, i1)) = best {
            if self.take_step(i1, i2) {
                return true;
            }
        }
        // Second choice: every free point in index order.
        for i1 in 0..self.labels.len() {
            if i1 != i2 && self.is_free(i1) && self.take_step(i1, i2) {
                return true;
            }
        }
        // Last resort: all points in index order.
        for i1 in 0..self.labels.len() {
            if i1 != i2 && !self.is_free(i1) && self.take_step(i1, i2) {
                return true;
            }
        }
        false
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        let (y1, y2) = (self.labels[i1], self.labels[i2]);
        let (alpha1, alpha2) = (self.alpha[i1], self.alpha[i2]);
        let (e1, e2) = (self.errors[i1], self.errors[i2]);
        let s = y1 * y2;

        let (low, high) = if (y1 - y2).abs() > 0.5 {
            ((alpha2 - alpha1).max(0.0), (self.c + alpha2 - alpha1).min(self.c))
        } else {
            ((alpha1 + alpha2 - self.c).max(0.0), (alpha1 + alpha2).min(self.c))
        };
        if high - low < STEP_EPS {
            return false;
        }

        let k11 = self.gram[i1][i1];
        let k12 = self.gram[i1][i2];
        let k22 = self.gram[i2][i2];
        let eta = k11 + k22 - 2.0 * k12;

        let a2 = if eta > 0.0 {
            (alpha2 + y2 * (e1 - e2) / eta).clamp(low, high)
        } else {
            // Flat direction: evaluate the objective at both box ends.
            let f1 = y1 * (e1 + self.bias) - alpha1 * k11 - s * alpha2 * k12;
            let f2 = y2 * (e2 + self.bias) - s * alpha1 * k12 - alpha2 * k22;
            let l1 = alpha1 + s * (alpha2 - low);
            let h1 = alpha1 + s * (alpha2 - high);
            let obj_low =
                l1 * f1 + low * f2 + 0.5 * l1 * l1 * k11 + 0.5 * low * low * k22 + s * low * l1 * k12;
            let obj_high = h1 * f1
                + high * f2
                + 0.5 * h1 * h1 * k11
                + 0.5 * high * high * k22
                + s * high * h1 * k12;
            if obj_low < obj_high - STEP_EPS {
                low
            } else if obj_low > obj_high + STEP_EPS {
                high
            } else {
                alpha2
            }
        };
        if (a2 - alpha2).abs() < STEP_EPS * (a2 + alpha2 + STEP_EPS) {
            return false;
        }
        let a1 = alpha1 + s * (alpha2 - a2);

        let d1 = y1 * (a1 - alpha1);
        let d2 = y2 * (a2 - alpha2);
        let b1 = self.bias - e1 - d1 * k11 - d2 * k12;
        let b2 = self.bias - e2 - d1 * k12 - d2 * k22;
        let new_bias = if a1 > 0.0 && a1 < self.c {
            b1
        } else if a2 > 0.0 && a2 < self.c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        let bias_delta = new_bias - self.bias;

        self.alpha[i1] = a1;
        self.alpha[i2] = a2;
        self.bias = new_bias;
        for j in 0..self.labels.len() {
            self.errors[j] += d1 * self.gram[i1][j] + d2 * self.gram[i2][j] + bias_delta;
        }
        true
    }
}

/// Dual objective `sum alpha - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij`.
pub fn dual_objective(gram: &[Vec<f64>], labels: &[f64], alpha: &[f64]) -> f64 {
    let n = labels.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alpha[i] * alpha[j] * labels[i] * labels[j] * gram[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}
