//! Pairwise coupling: turn pairwise class probabilities into a single
//! posterior distribution by iterating the consistency equations until the
//! stationarity residual falls below tolerance, then normalizing exactly.

const MAX_ITER: usize = 100;
const EPS: f64 = 1e-6;

/// Couple a k x k matrix of pairwise probabilities
/// (`pairwise[i][j]` = P(class i | class i or j), with `pairwise[j][i]`
/// its complement) into class posteriors that sum to one.
pub(crate) fn couple(pairwise: &[Vec<f64>]) -> Vec<f64> {
    let k = pairwise.len();
    if k == 1 {
        return vec![1.0];
    }

    let mut q = vec![vec![0.0; k]; k];
    for t in 0..k {
        for j in 0..k {
            if j != t {
                q[t][t] += pairwise[j][t] * pairwise[j][t];
            }
        }
        for j in 0..t {
            q[t][j] = q[j][t];
        }
        for j in (t + 1)..k {
            q[t][j] = -pairwise[j][t] * pairwise[t][j];
        }
    }

    let mut p = vec![1.0 / k as f64; k];
    let mut qp = vec![0.0; k];
    for _ in 0..MAX_ITER {
        let mut pqp = 0.0;
        for t in 0..k {
            qp[t] = (0..k).map(|j| q[t][j] * p[j]).sum();
            pqp += p[t] * qp[t];
        }
        let max_residual = (0..k).map(|t| (qp[t] - pqp).abs()).fold(0.0, f64::max);
        if max_residual < EPS {
            break;
        }
        for t in 0..k {
            let diff = (-qp[t] + pqp) / q[t][t];
            p[t] += diff;
            pqp = (pqp + diff * (diff * q[t][t] + 2.0 * qp[t])) / (1.0 + diff) / (1.0 + diff);
            for j in 0..k {
                qp[j] = (qp[j] + diff * q[t][j]) / (1.0 + diff);
                p[j] /= 1.0 + diff;
            }
        }
    }

    for v in p.iter_mut() {
        *v = v.max(0.0);
    }
    let total: f64 = p.iter().sum();
    if total > 0.0 {
        for v in p.iter_mut() {
            *v /= total;
        }
    } else {
        p.fill(1.0 / k as f64);
    }
    p
}
