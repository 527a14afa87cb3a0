//! Sigmoid calibration of SVM decision values.
//!
//! Fits P(y=+1 | f) = 1 / (1 + exp(a*f + b)) by regularized maximum
//! likelihood with Newton steps and backtracking line search. The targets
//! are the usual smoothed (N+1)/(N+2) values rather than hard 0/1 labels.

/// Fit sigmoid parameters (a, b) from decision values and +/-1 labels.
pub(crate) fn fit(decisions: &[f64], labels: &[f64]) -> (f64, f64) {
    let n = decisions.len();
    let prior1 = labels.iter().filter(|&&y| y > 0.0).count() as f64;
    let prior0 = n as f64 - prior1;

    let max_iter = 100;
    let min_step = 1e-10;
    let sigma = 1e-12;
    let eps = 1e-5;

    let hi_target = (prior1 + 1.0) / (prior1 + 2.0);
    let lo_target = 1.0 / (prior0 + 2.0);
    let targets: Vec<f64> = labels
        .iter()
        .map(|&y| if y > 0.0 { hi_target } else { lo_target })
        .collect();

    let objective = |a: f64, b: f64| -> f64 {
        let mut value = 0.0;
        for (&f, &t) in decisions.iter().zip(&targets) {
            let arg = a * f + b;
            if arg >= 0.0 {
                value += t * arg + (1.0 + (-arg).exp()).ln();
            } else {
                value += (t - 1.0) * arg + (1.0 + arg.exp()).ln();
            }
        }
        value
    };

    let mut a = 0.0;
    let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();
    let mut fval = objective(a, b);

    for _ in 0..max_iter {
        let mut h11 = sigma;
        let mut h22 = sigma;
        let mut h21 = 0.0;
        let mut g1 = 0.0;
        let mut g2 = 0.0;
        for (&f, &t) in decisions.iter().zip(&targets) {
            let arg = a * f + b;
            let (p, q) = if arg >= 0.0 {
                let e = (-arg).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = arg.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = t - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < eps && g2.abs() < eps {
            break;
        }

        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;

        let mut step = 1.0;
        while step >= min_step {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < min_step {
            break;
        }
    }
    (a, b)
}

/// Numerically stable P(y=+1 | decision).
pub(crate) fn predict(decision: f64, a: f64, b: f64) -> f64 {
    let arg = decision * a + b;
    if arg >= 0.0 {
        (-arg).exp() / (1.0 + (-arg).exp())
    } else {
        1.0 / (1.0 + arg.exp())
    }
}
