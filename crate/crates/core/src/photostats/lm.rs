//! Small dense Levenberg–Marquardt solver for models with a handful of
//! parameters and analytic Jacobians.

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 200;
pub const STEP_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub struct LmOutcome<const N: usize> {
    pub params: [f64; N],
    pub cost: f64,
    pub iterations: usize,
}

/// Minimizes Σ r_i(p)² where `model(p)` returns residuals and their
/// Jacobian rows. Converged when every component of the accepted step is
/// below `STEP_TOLERANCE` relative to the parameter.
pub fn levenberg_marquardt<const N: usize, F>(
    mut params: [f64; N],
    model: F,
    context: &str,
) -> Result<LmOutcome<N>>
where
    F: Fn(&[f64; N]) -> (Vec<f64>, Vec<[f64; N]>),
{
    let cost_of = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
    let (mut r, mut jac) = model(&params);
    let mut cost = cost_of(&r);
    if !cost.is_finite() {
        return Err(Error::Numerical(format!(
            "{context}: non-finite initial residual"
        )));
    }
    let mut lambda = 1e-3;
    for iteration in 1..=MAX_ITERATIONS {
        let mut jtj = [[0.0; N]; N];
        let mut jtr = [0.0; N];
        for (ri, row) in r.iter().zip(&jac) {
            for a in 0..N {
                jtr[a] += row[a] * ri;
                for b in 0..N {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        loop {
            let mut m = jtj;
            for (a, row) in m.iter_mut().enumerate() {
                row[a] += lambda * jtj[a][a].max(1e-300);
            }
            let neg: [f64; N] = std::array::from_fn(|a| -jtr[a]);
            let Some(step) = solve(m, neg) else {
                lambda *= 10.0;
                if lambda > 1e20 {
                    return Err(Error::Numerical(format!(
                        "{context}: singular normal equations"
                    )));
                }
                continue;
            };
            let trial: [f64; N] = std::array::from_fn(|a| params[a] + step[a]);
            let (tr, tj) = model(&trial);
            let trial_cost = cost_of(&tr);
            if trial_cost.is_finite() && trial_cost <= cost {
                let small =
                    (0..N).all(|a| step[a].abs() <= STEP_TOLERANCE * params[a].abs().max(1e-300));
                params = trial;
                r = tr;
                jac = tj;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                if small {
                    return Ok(LmOutcome {
                        params,
                        cost,
                        iterations: iteration,
                    });
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                // No downhill step left at machine precision: at the minimum.
                return Ok(LmOutcome {
                    params,
                    cost,
                    iterations: iteration,
                });
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        context: context.to_string(),
    })
}

/// Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn solve<const N: usize>(mut m: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 || !m[pivot][col].is_finite() {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..N {
            let f = m[row][col] / m[col][col];
            for c in col..N {
                m[row][c] -= f * m[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let s: f64 = (row + 1..N).map(|c| m[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
