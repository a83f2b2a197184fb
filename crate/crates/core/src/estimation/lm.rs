//! Levenberg–Marquardt minimization of a sum of squared residuals.
//!
//! Damping is multiplicative on the diagonal of JᵀJ (Marquardt scaling) and
//! adapts by a factor of ten: accepted steps always lower the objective.

use crate::linalg::{cholesky, cholesky_solve};

/// A least-squares problem with `N` parameters.
pub trait LeastSquares<const N: usize> {
    fn residual_count(&self) -> usize;

    /// Residual `i` and its gradient with respect to the parameters.
    fn residual(&self, x: &[f64; N], i: usize) -> (f64, [f64; N]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmConfig {
    pub max_iterations: usize,
    /// Stop once an accepted step lowers the objective by less than this
    /// fraction.
    pub relative_tolerance: f64,
    /// Stop once the step norm drops below this.
    pub step_tolerance: f64,
    pub initial_damping: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            relative_tolerance: 1e-10,
            step_tolerance: 1e-12,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOutcome<const N: usize> {
    pub x: [f64; N],
    pub chi_square: f64,
    /// JᵀJ at `x`.
    pub normal_matrix: [[f64; N]; N],
    pub iterations: usize,
    pub converged: bool,
}

const MAX_DAMPING: f64 = 1e16;
const MIN_DAMPING: f64 = 1e-15;

struct Linearization<const N: usize> {
    chi_square: f64,
    jtj: [[f64; N]; N],
    jtr: [f64; N],
}

fn linearize<P: LeastSquares<N>, const N: usize>(problem: &P, x: &[f64; N]) -> Linearization<N> {
    let mut lin = Linearization {
        chi_square: 0.0,
        jtj: [[0.0; N]; N],
        jtr: [0.0; N],
    };
    for i in 0..problem.residual_count() {
        let (r, g) = problem.residual(x, i);
        lin.chi_square += r * r;
        for a in 0..N {
            lin.jtr[a] += g[a] * r;
            for b in 0..=a {
                lin.jtj[a][b] += g[a] * g[b];
            }
        }
    }
    for a in 0..N {
        for b in 0..a {
            lin.jtj[b][a] = lin.jtj[a][b];
        }
    }
    lin
}

/// JᵀJ at `x`.
pub fn normal_matrix<P: LeastSquares<N>, const N: usize>(
    problem: &P,
    x: &[f64; N],
) -> [[f64; N]; N] {
    linearize(problem, x).jtj
}

/// Objective `Σ rᵢ²` at `x`.
pub fn chi_square<P: LeastSquares<N>, const N: usize>(problem: &P, x: &[f64; N]) -> f64 {
    (0..problem.residual_count())
        .map(|i| {
            let r = problem.residual(x, i).0;
            r * r
        })
        .sum()
}

pub fn minimize<P: LeastSquares<N>, const N: usize>(
    problem: &P,
    x0: [f64; N],
    config: &LmConfig,
) -> LmOutcome<N> {
    let mut x = x0;
    let mut lin = linearize(problem, &x);
    let mut damping = config.initial_damping;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        iterations += 1;
        if lin.chi_square == 0.0 {
            converged = true;
            break;
        }

        let diag_floor = (0..N).map(|a| lin.jtj[a][a]).fold(0.0, f64::max) * 1e-15;
        let mut a = lin.jtj;
        for k in 0..N {
            a[k][k] += damping * lin.jtj[k][k].max(diag_floor);
        }
        let neg_grad = lin.jtr.map(|g| -g);
        let Some(l) = cholesky(&a) else {
            damping *= 10.0;
            if damping > MAX_DAMPING {
                break;
            }
            continue;
        };
        let step = cholesky_solve(&l, &neg_grad);
        let step_norm = step.iter().map(|s| s * s).sum::<f64>().sqrt();

        let mut trial = x;
        for k in 0..N {
            trial[k] += step[k];
        }
        let trial_chi = chi_square(problem, &trial);

        if trial_chi.is_finite() && trial_chi < lin.chi_square {
            let decrease = (lin.chi_square - trial_chi) / lin.chi_square;
            x = trial;
            lin = linearize(problem, &x);
            damping = (damping / 10.0).max(MIN_DAMPING);
            if decrease < config.relative_tolerance || step_norm < config.step_tolerance {
                converged = true;
                break;
            }
        } else {
            if step_norm < config.step_tolerance {
                converged = true;
                break;
            }
            damping *= 10.0;
            // No step along the gradient lowers the objective any more: the
            // current point is a minimum to working precision.
            if damping > MAX_DAMPING {
                converged = true;
                break;
            }
        }
    }

    LmOutcome {
        x,
        chi_square: lin.chi_square,
        normal_matrix: lin.jtj,
        iterations,
        converged,
    }
}
