//! Parametric bootstrap of (p, V, φ) and the Bell-state fidelity.
//!
//! Each replicate resamples the two antibunching counts as Poisson draws
//! around their observed values and the fitted V and φ as Gaussians with
//! the fit's standard errors, then recomputes the downstream quantities.
//! Replicate `k` uses `replicate_rng(seed, k)`, so replicates can be
//! evaluated in any order or in parallel with identical results.

use alloc::vec::Vec;

use rand_distr::{Distribution, Normal};

use super::beating_fit::BeatingFit;
use super::density::fidelity_closed_form;
use crate::counting::BranchCounts;
use crate::error::{Error, Result};
use crate::rng::{poisson, replicate_rng};

pub const MIN_REPLICATES: usize = 100;

/// Sample mean and standard deviation of a bootstrapped quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Estimate {
    pub mean: f64,
    pub std: f64,
}

impl Estimate {
    fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BootstrapSummary {
    pub p: Estimate,
    pub visibility: Estimate,
    pub phase: Estimate,
    pub fidelity: Estimate,
    /// Replicates that produced a usable draw.
    pub replicates: usize,
    /// Replicates dropped because both resampled antibunching counts were 0.
    pub skipped: usize,
}

/// One bootstrap draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateDraw {
    pub p: f64,
    pub visibility: f64,
    pub phase: f64,
    pub fidelity: f64,
}

/// Replicate `index` of a bootstrap seeded with `seed`, or `None` when the
/// resampled antibunching counts are both zero.
pub fn bootstrap_replicate(
    counts: &BranchCounts,
    fit: &BeatingFit,
    seed: u64,
    index: u64,
) -> Option<ReplicateDraw> {
    let mut rng = replicate_rng(seed, index);
    let ab = poisson(&mut rng, counts.counts.ab as f64);
    let ba = poisson(&mut rng, counts.counts.ba as f64);
    let visibility = gaussian(
        &mut rng,
        fit.params.visibility,
        fit.uncertainties.visibility,
    );
    let phase = gaussian(&mut rng, fit.params.phase, fit.uncertainties.phase);
    if ab + ba == 0 {
        return None;
    }
    Some(ReplicateDraw {
        p: ba as f64 / (ab + ba) as f64,
        visibility,
        phase,
        fidelity: fidelity_closed_form(visibility, phase),
    })
}

fn gaussian<R: rand::Rng + ?Sized>(rng: &mut R, mean: f64, std: f64) -> f64 {
    if std > 0.0 && std.is_finite() {
        Normal::new(mean, std)
            .expect("finite positive std")
            .sample(rng)
    } else {
        mean
    }
}

/// Bootstraps `replicates` draws and summarizes them.
///
/// Visibilities are not clipped to the physical range so the fidelity
/// spread reflects the full fit uncertainty.
pub fn propagate_uncertainties(
    counts: &BranchCounts,
    fit: &BeatingFit,
    replicates: usize,
    seed: u64,
) -> Result<BootstrapSummary> {
    if replicates < MIN_REPLICATES {
        return Err(Error::validation(
            "replicates",
            alloc::format!("{replicates} < {MIN_REPLICATES}"),
        ));
    }
    if counts.antibunching() == 0 {
        return Err(Error::validation(
            "branch counts",
            "no antibunching coincidences to resample",
        ));
    }
    let draws: Vec<ReplicateDraw> = (0..replicates as u64)
        .filter_map(|k| bootstrap_replicate(counts, fit, seed, k))
        .collect();
    let column = |f: fn(&ReplicateDraw) -> f64| -> Vec<f64> { draws.iter().map(f).collect() };
    Ok(BootstrapSummary {
        p: Estimate::from_samples(&column(|d| d.p)),
        visibility: Estimate::from_samples(&column(|d| d.visibility)),
        phase: Estimate::from_samples(&column(|d| d.phase)),
        fidelity: Estimate::from_samples(&column(|d| d.fidelity)),
        replicates: draws.len(),
        skipped: replicates - draws.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beating::BeatingParams;
    use crate::statekit::PerBranch;

    fn counts(ab: u64, ba: u64) -> BranchCounts {
        BranchCounts::from_counts(
            PerBranch {
                aa: 155,
                bb: 157,
                ab,
                ba,
            },
            10.0,
        )
    }

    fn fit(v: f64, sv: f64, phi: f64, sphi: f64) -> BeatingFit {
        let zero = BeatingParams {
            amplitude: 0.0,
            visibility: 0.0,
            envelope_omega: 0.0,
            delta_omega: 0.0,
            phase: 0.0,
        };
        BeatingFit {
            params: BeatingParams {
                amplitude: 1000.0,
                visibility: v,
                envelope_omega: 0.4,
                delta_omega: 13.8,
                phase: phi,
            },
            uncertainties: BeatingParams {
                visibility: sv,
                phase: sphi,
                ..zero
            },
            chi_square: 0.0,
            reduced_chi_square: 1.0,
            degrees_of_freedom: 100,
            converged: true,
            iterations: 1,
        }
    }

    #[test]
    fn zero_width_fit_inputs_give_zero_width_outputs() {
        let s = propagate_uncertainties(&counts(22427, 28560), &fit(0.96, 0.0, 0.0, 0.0), 200, 1)
            .unwrap();
        assert!(s.visibility.std < 1e-12);
        assert_eq!(s.phase.std, 0.0);
        assert!(s.fidelity.std < 1e-12);
        assert!((s.fidelity.mean - 0.98).abs() < 1e-12);
        assert_eq!(s.replicates, 200);
    }

    #[test]
    fn replicates_are_schedule_independent() {
        let c = counts(22427, 28560);
        let f = fit(0.96, 0.061, 0.0, 0.01);
        let forward: Vec<_> = (0..50).map(|k| bootstrap_replicate(&c, &f, 9, k)).collect();
        let backward: Vec<_> = (0..50)
            .rev()
            .map(|k| bootstrap_replicate(&c, &f, 9, k))
            .collect();
        assert!(forward.iter().eq(backward.iter().rev()));
        assert_eq!(
            propagate_uncertainties(&c, &f, 300, 9).unwrap(),
            propagate_uncertainties(&c, &f, 300, 9).unwrap()
        );
    }

    #[test]
    fn fidelity_width_matches_visibility_width() {
        let s =
            propagate_uncertainties(&counts(22427, 28560), &fit(0.96, 0.061, 0.0, 0.01), 4000, 3)
                .unwrap();
        assert!(
            (s.fidelity.std - 0.0305).abs() < 0.003,
            "{}",
            s.fidelity.std
        );
        assert!((s.fidelity.mean - 0.98).abs() < 0.003);
        assert!((s.p.mean - 0.5601).abs() < 0.001);
        assert!(s.p.std < 0.01);
    }

    #[test]
    fn invalid_requests() {
        assert!(propagate_uncertainties(&counts(10, 10), &fit(0.9, 0.1, 0.0, 0.0), 99, 1).is_err());
        assert!(propagate_uncertainties(&counts(0, 0), &fit(0.9, 0.1, 0.0, 0.0), 100, 1).is_err());
    }

    #[test]
    fn sparse_counts_skip_empty_replicates() {
        let s = propagate_uncertainties(&counts(0, 1), &fit(0.9, 0.0, 0.0, 0.0), 500, 4).unwrap();
        assert!(s.skipped > 0);
        assert_eq!(s.replicates + s.skipped, 500);
        assert_eq!(s.p.mean, 1.0);
    }
}
