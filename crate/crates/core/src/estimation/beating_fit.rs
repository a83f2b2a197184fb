use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use super::lm::{minimize, normal_matrix, LeastSquares, LmConfig, LmOutcome};
use crate::beating::{beating_curve, beating_gradient, BeatingDataset, BeatingParams};
use crate::error::{Error, Result};
use crate::linalg::spd_inverse;
use crate::statekit::wrap_angle;

/// Result of a weighted least-squares fit of the beating curve.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BeatingFit {
    pub params: BeatingParams,
    /// One standard error per parameter, stored in the same layout.
    pub uncertainties: BeatingParams,
    pub chi_square: f64,
    pub reduced_chi_square: f64,
    pub degrees_of_freedom: usize,
    pub converged: bool,
    /// Iterations taken by the winning start.
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub lm: LmConfig,
    /// Restart from φ ∈ {0, π/2, π, 3π/2} with both signs of Δω.
    pub multistart: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            lm: LmConfig::default(),
            multistart: true,
        }
    }
}

struct WeightedBeating<'a> {
    data: &'a BeatingDataset,
}

impl LeastSquares<5> for WeightedBeating<'_> {
    fn residual_count(&self) -> usize {
        self.data.len()
    }

    fn residual(&self, x: &[f64; 5], i: usize) -> (f64, [f64; 5]) {
        let params = BeatingParams::from_array(*x);
        let delay = self.data.delays()[i];
        // Empty bins still get unit weight.
        let sigma = self.data.sigmas()[i].max(1.0);
        let r = (self.data.counts()[i] - beating_curve(&params, delay)) / sigma;
        let g = beating_gradient(&params, delay).map(|d| -d / sigma);
        (r, g)
    }
}

/// Fits the beating curve to `data` starting from `guess` with default
/// options.
pub fn fit_beating(data: &BeatingDataset, guess: &BeatingParams) -> Result<BeatingFit> {
    fit_beating_with(data, guess, &FitOptions::default())
}

/// Weighted (1/σ²) Levenberg–Marquardt fit of the beating curve.
///
/// The curve is invariant under (Δω, φ) → (−Δω, −φ), (V, φ) → (−V, φ + π)
/// and Ω → −Ω, so results are reported with V ≥ 0, Ω > 0, Δω ≥ 0 and
/// φ ∈ [−π, π]. With multistart enabled the lowest objective wins; ties
/// within a relative 1e-9 go to the smaller |φ|.
///
/// Standard errors come from (JᵀJ)⁻¹ scaled by the reduced chi-square.
/// Hitting the iteration cap is not an error: the best point found is
/// returned with `converged == false`.
pub fn fit_beating_with(
    data: &BeatingDataset,
    guess: &BeatingParams,
    options: &FitOptions,
) -> Result<BeatingFit> {
    if data.len() <= 5 {
        return Err(Error::validation(
            "beating dataset",
            "need more points than the five fit parameters",
        ));
    }
    let problem = WeightedBeating { data };

    let starts: Vec<[f64; 5]> = if options.multistart {
        [1.0, -1.0]
            .into_iter()
            .flat_map(|sign| {
                [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2]
                    .into_iter()
                    .map(move |phase| {
                        let mut x = guess.to_array();
                        x[3] = sign * guess.delta_omega.abs();
                        x[4] = phase;
                        x
                    })
            })
            .collect()
    } else {
        alloc::vec![guess.to_array()]
    };

    let mut best: Option<LmOutcome<5>> = None;
    for x0 in starts {
        let mut out = minimize(&problem, x0, &options.lm);
        out.x = canonical(out.x);
        best = Some(match best {
            None => out,
            Some(b) => {
                let tie = (out.chi_square - b.chi_square).abs()
                    <= 1e-9 * b.chi_square.max(f64::MIN_POSITIVE);
                if (tie && out.x[4].abs() < b.x[4].abs()) || (!tie && out.chi_square < b.chi_square)
                {
                    out
                } else {
                    b
                }
            }
        });
    }
    let best = best.expect("at least one start");

    let dof = data.len() - 5;
    let reduced = best.chi_square / dof as f64;
    // Covariance at the reported (canonicalized) point.
    let normal = normal_matrix(&problem, &best.x);
    let sigmas = match spd_inverse(&normal) {
        Some(cov) => core::array::from_fn(|k| (cov[k][k] * reduced).max(0.0).sqrt()),
        None if best.converged => return Err(Error::DegenerateFit),
        None => [f64::NAN; 5],
    };

    Ok(BeatingFit {
        params: BeatingParams::from_array(best.x),
        uncertainties: BeatingParams::from_array(sigmas),
        chi_square: best.chi_square,
        reduced_chi_square: reduced,
        degrees_of_freedom: dof,
        converged: best.converged,
        iterations: best.iterations,
    })
}

fn canonical(mut x: [f64; 5]) -> [f64; 5] {
    if x[1] < 0.0 {
        x[1] = -x[1];
        x[4] += PI;
    }
    x[2] = x[2].abs();
    if x[3] < 0.0 {
        x[3] = -x[3];
        x[4] = -x[4];
    }
    x[4] = wrap_angle(x[4]);
    x
}

/// Removes a constant accidental background from every point.
///
/// Error bars keep their raw Poisson values since subtraction does not
/// reduce shot noise; counts are floored at zero.
pub fn subtract_accidentals(
    data: &BeatingDataset,
    accidentals_per_point: f64,
) -> Result<BeatingDataset> {
    if !(accidentals_per_point >= 0.0) || !accidentals_per_point.is_finite() {
        return Err(Error::validation(
            "accidentals_per_point",
            "must be finite and non-negative",
        ));
    }
    BeatingDataset::new(
        data.delays().to_vec(),
        data.counts()
            .iter()
            .map(|c| (c - accidentals_per_point).max(0.0))
            .collect(),
        data.sigmas().to_vec(),
        data.integration_time_per_point(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beating::{delay_grid, expected_beating_dataset, synthesize_beating_dataset};
    use crate::estimation::initial_guess;

    fn truth() -> BeatingParams {
        BeatingParams {
            amplitude: 1000.0,
            visibility: 0.96,
            envelope_omega: 0.4,
            delta_omega: 13.8,
            phase: 0.0,
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1.0)
    }

    #[test]
    fn noiseless_fit_recovers_truth() {
        let t = BeatingParams {
            phase: 0.4,
            ..truth()
        };
        let grid = delay_grid(10.0, 0.02).unwrap();
        let data = expected_beating_dataset(&t, &grid, 1.0).unwrap();
        let fit = fit_beating(&data, &initial_guess(&data).unwrap()).unwrap();
        assert!(fit.converged);
        for (got, want) in fit.params.to_array().iter().zip(t.to_array()) {
            assert!(rel(*got, want) < 1e-6, "{got} vs {want}");
        }
    }

    #[test]
    fn noiseless_fit_is_idempotent() {
        let grid = delay_grid(10.0, 0.02).unwrap();
        let data = expected_beating_dataset(&truth(), &grid, 1.0).unwrap();
        let first = fit_beating(&data, &initial_guess(&data).unwrap()).unwrap();
        let second = fit_beating(&data, &first.params).unwrap();
        for (a, b) in first.params.to_array().iter().zip(second.params.to_array()) {
            assert!(
                (a - b).abs() <= 1e-10 * a.abs().max(1e-300) || (a - b).abs() < 1e-12,
                "{a} vs {b}"
            );
        }
    }

    #[test]
    fn noisy_fit_converges_quickly_and_covers_truth() {
        let grid = delay_grid(10.0, 0.02).unwrap();
        let data = synthesize_beating_dataset(&truth(), &grid, 1.0, 99).unwrap();
        let guess = initial_guess(&data).unwrap();
        let fit = fit_beating(&data, &guess).unwrap();
        assert!(fit.converged);
        assert!(fit.iterations < 200, "{}", fit.iterations);
        let v = fit.params.visibility;
        assert!(
            (v - 0.96).abs() <= 3.0 * fit.uncertainties.visibility,
            "{v} ± {}",
            fit.uncertainties.visibility
        );
        assert!((fit.reduced_chi_square - 1.0).abs() < 0.3);
        assert!(fit
            .uncertainties
            .to_array()
            .iter()
            .all(|s| s.is_finite() && *s >= 0.0));
    }

    #[test]
    fn results_are_canonicalized() {
        let x = canonical([1.0, -0.5, -0.3, -2.0, 0.25]);
        assert_eq!(x[1], 0.5);
        assert_eq!(x[2], 0.3);
        assert_eq!(x[3], 2.0);
        assert!((x[4] - wrap_angle(-(0.25 + PI))).abs() < 1e-15);
    }

    #[test]
    fn mirrored_start_finds_same_curve() {
        let t = BeatingParams {
            phase: -1.0,
            ..truth()
        };
        let grid = delay_grid(10.0, 0.02).unwrap();
        let data = expected_beating_dataset(&t, &grid, 1.0).unwrap();
        let guess = BeatingParams {
            delta_omega: -13.5,
            ..initial_guess(&data).unwrap()
        };
        let fit = fit_beating(&data, &guess).unwrap();
        assert!(rel(fit.params.phase, -1.0) < 1e-6);
        assert!(rel(fit.params.delta_omega, 13.8) < 1e-6);
    }

    #[test]
    fn flat_data_is_degenerate() {
        let flat = BeatingParams {
            visibility: 0.0,
            ..truth()
        };
        let grid = delay_grid(10.0, 0.1).unwrap();
        let data = expected_beating_dataset(&flat, &grid, 1.0).unwrap();
        let guess = BeatingParams {
            visibility: 0.0,
            ..truth()
        };
        let opts = FitOptions {
            multistart: false,
            ..FitOptions::default()
        };
        assert_eq!(
            fit_beating_with(&data, &guess, &opts),
            Err(Error::DegenerateFit)
        );
    }

    #[test]
    fn iteration_cap_is_reported() {
        let grid = delay_grid(10.0, 0.02).unwrap();
        let data = synthesize_beating_dataset(&truth(), &grid, 1.0, 3).unwrap();
        let opts = FitOptions {
            lm: LmConfig {
                max_iterations: 1,
                ..LmConfig::default()
            },
            multistart: false,
        };
        let fit = fit_beating_with(&data, &initial_guess(&data).unwrap(), &opts).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.iterations, 1);
    }

    #[test]
    fn accidental_subtraction_raises_visibility() {
        let grid = delay_grid(10.0, 0.02).unwrap();
        let data = expected_beating_dataset(&truth(), &grid, 1.0).unwrap();
        let sub = subtract_accidentals(&data, 20.0).unwrap();
        assert_eq!(sub.sigmas(), data.sigmas());
        let raw = fit_beating(&data, &initial_guess(&data).unwrap()).unwrap();
        let fit = fit_beating(&sub, &initial_guess(&sub).unwrap()).unwrap();
        assert!(fit.params.visibility > raw.params.visibility);
        assert!(subtract_accidentals(&data, -1.0).is_err());
    }
}
