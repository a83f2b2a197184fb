//! Photon-counting model: singles and coincidence rates versus pump power,
//! accidentals and CAR, seeded Poisson sampling of the four coincidence
//! branches, and the statistics derived from branch counts.
//!
//! Rates are in Hz, pump power in mW, coincidence windows in ps and
//! integration times in s.

use alloc::vec::Vec;

use crate::error::{ensure_finite, Error, Result};
use crate::rng::{poisson, replicate_rng};
use crate::statekit::{Branch, BranchProbabilities, PerBranch};

const PS_TO_S: f64 = 1e-12;

/// Scalar description of the pair source and its collection optics.
///
/// Singles in one arm are `pair_coefficient·P²·η + noise_coefficient·P +
/// dark_rate`: the quadratic term is pairs from the cascaded SHG/SPDC
/// process, the linear term uncorrelated noise photons.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SourceModel {
    /// Generated pair rate per mW² (Hz/mW²).
    pub pair_coefficient: f64,
    /// Noise photon rate per mW in each arm (Hz/mW).
    pub noise_coefficient: f64,
    pub collection_efficiency_signal: f64,
    pub collection_efficiency_idler: f64,
    /// Detector dark count rate per arm (Hz).
    pub dark_rate: f64,
}

impl SourceModel {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("pair_coefficient", self.pair_coefficient),
            ("noise_coefficient", self.noise_coefficient),
            ("dark_rate", self.dark_rate),
        ] {
            ensure_finite(field, v)?;
            if v < 0.0 {
                return Err(Error::validation(field, alloc::format!("{v} is negative")));
            }
        }
        for (field, v) in [
            (
                "collection_efficiency_signal",
                self.collection_efficiency_signal,
            ),
            (
                "collection_efficiency_idler",
                self.collection_efficiency_idler,
            ),
        ] {
            check_efficiency(field, v)?;
        }
        Ok(())
    }

    pub fn efficiency(&self, arm: Arm) -> f64 {
        match arm {
            Arm::Signal => self.collection_efficiency_signal,
            Arm::Idler => self.collection_efficiency_idler,
        }
    }
}

fn check_efficiency(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::validation(
            field,
            alloc::format!("{v} is outside (0, 1]"),
        ))
    }
}

fn check_power(power: f64) -> Result<()> {
    ensure_finite("power", power)?;
    if power < 0.0 {
        return Err(Error::validation(
            "power",
            alloc::format!("{power} mW is negative"),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Signal,
    Idler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoincidenceConfig {
    pub window_ps: f64,
    pub integration_time_s: f64,
}

impl CoincidenceConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("window_ps", self.window_ps),
            ("integration_time_s", self.integration_time_s),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(
                    field,
                    alloc::format!("{v} is not positive"),
                ));
            }
        }
        Ok(())
    }
}

/// Generated pair rate at `power` before any collection loss.
pub fn pair_generation_rate(model: &SourceModel, power: f64) -> Result<f64> {
    check_power(power)?;
    Ok(model.pair_coefficient * power * power)
}

/// Detected singles rate in one arm.
pub fn singles_rate(model: &SourceModel, power: f64, arm: Arm) -> Result<f64> {
    check_power(power)?;
    Ok(
        model.pair_coefficient * power * power * model.efficiency(arm)
            + model.noise_coefficient * power
            + model.dark_rate,
    )
}

/// Rate of coincidences from genuine pairs (both photons collected).
pub fn true_coincidence_rate(model: &SourceModel, power: f64) -> Result<f64> {
    Ok(pair_generation_rate(model, power)?
        * model.collection_efficiency_signal
        * model.collection_efficiency_idler)
}

/// Accidental coincidence rate `S_s · S_i · τ` for uncorrelated singles.
pub fn accidental_rate(singles_s: f64, singles_i: f64, window_ps: f64) -> f64 {
    singles_s * singles_i * window_ps * PS_TO_S
}

/// Coincidence-to-accidental ratio. `coincidence` is the measured rate,
/// accidentals included.
pub fn car(coincidence: f64, accidental: f64) -> Result<f64> {
    if accidental == 0.0 {
        return Err(Error::UndefinedCar);
    }
    if !(accidental > 0.0) || !(coincidence >= 0.0) {
        return Err(Error::validation(
            "car inputs",
            alloc::format!("coincidence {coincidence}, accidental {accidental}"),
        ));
    }
    Ok(coincidence / accidental)
}

/// One point of a CAR-versus-power curve.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CarPoint {
    pub power: f64,
    pub singles_signal: f64,
    pub singles_idler: f64,
    /// Measured coincidence rate, accidentals included.
    pub coincidence: f64,
    pub accidental: f64,
    pub car: f64,
}

pub fn car_point(model: &SourceModel, config: &CoincidenceConfig, power: f64) -> Result<CarPoint> {
    model.validate()?;
    config.validate()?;
    let singles_signal = singles_rate(model, power, Arm::Signal)?;
    let singles_idler = singles_rate(model, power, Arm::Idler)?;
    let accidental = accidental_rate(singles_signal, singles_idler, config.window_ps);
    let coincidence = true_coincidence_rate(model, power)? + accidental;
    Ok(CarPoint {
        power,
        singles_signal,
        singles_idler,
        coincidence,
        accidental,
        car: car(coincidence, accidental)?,
    })
}

/// Detection efficiency of the four output ports d, e, f, g.
///
/// Branch aa is detected on d & e, bb on f & g, ab on d & g and ba on e & f.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PortEfficiencies {
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub g: f64,
}

impl PortEfficiencies {
    pub const UNIT: Self = Self {
        d: 1.0,
        e: 1.0,
        f: 1.0,
        g: 1.0,
    };

    pub fn validate(&self) -> Result<()> {
        check_efficiency("efficiency_d", self.d)?;
        check_efficiency("efficiency_e", self.e)?;
        check_efficiency("efficiency_f", self.f)?;
        check_efficiency("efficiency_g", self.g)
    }

    pub fn product(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Aa => self.d * self.e,
            Branch::Bb => self.f * self.g,
            Branch::Ab => self.d * self.g,
            Branch::Ba => self.e * self.f,
        }
    }
}

/// Coincidence counts of the four branches with Poisson error bars.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BranchCounts {
    pub counts: PerBranch<u64>,
    pub sigmas: PerBranch<f64>,
    pub integration_time_s: f64,
}

impl BranchCounts {
    /// Counts with √n error bars.
    pub fn from_counts(counts: PerBranch<u64>, integration_time_s: f64) -> Self {
        Self {
            counts,
            sigmas: counts.map(|_, n| (n as f64).sqrt()),
            integration_time_s,
        }
    }

    pub fn bunching(&self) -> u64 {
        self.counts.aa + self.counts.bb
    }

    pub fn antibunching(&self) -> u64 {
        self.counts.ab + self.counts.ba
    }

    pub fn total(&self) -> u64 {
        self.bunching() + self.antibunching()
    }
}

/// Expected count in each branch: `prob·total_pairs·η_port-pair + floor`.
pub fn expected_branch_counts(
    probs: &BranchProbabilities,
    total_pairs: f64,
    efficiencies: &PortEfficiencies,
    floor: &PerBranch<f64>,
) -> Result<PerBranch<f64>> {
    ensure_finite("total_pairs", total_pairs)?;
    if total_pairs < 0.0 {
        return Err(Error::validation("total_pairs", "is negative"));
    }
    efficiencies.validate()?;
    for (b, v) in floor.iter() {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::validation(
                "floor",
                alloc::format!("{}: {v} is not a non-negative rate", b.label()),
            ));
        }
    }
    Ok(floor.map(|b, leak| probs.get(b) * total_pairs * efficiencies.product(b) + leak))
}

/// Draws one integration window of branch counts.
///
/// Each branch is an independent Poisson draw around
/// [`expected_branch_counts`]; draws are taken in the order aa, bb, ab, ba
/// from the generator `replicate_rng(seed, 0)`.
pub fn simulate_branch_counts(
    probs: &BranchProbabilities,
    total_pairs: f64,
    efficiencies: &PortEfficiencies,
    floor: &PerBranch<f64>,
    integration_time_s: f64,
    seed: u64,
) -> Result<BranchCounts> {
    let means = expected_branch_counts(probs, total_pairs, efficiencies, floor)?;
    let mut rng = replicate_rng(seed, 0);
    let counts = means.map(|_, m| poisson(&mut rng, m));
    Ok(BranchCounts::from_counts(counts, integration_time_s))
}

/// Ratio of antibunching to bunching coincidences in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatioDb {
    Finite(f64),
    /// Antibunching counts with no bunching counts at all.
    Infinite,
}

impl RatioDb {
    pub fn finite(self) -> Option<f64> {
        match self {
            RatioDb::Finite(v) => Some(v),
            RatioDb::Infinite => None,
        }
    }
}

/// `10·log10((n_ab + n_ba)/(n_aa + n_bb))`.
pub fn antibunch_bunch_ratio_db(counts: &BranchCounts) -> Result<RatioDb> {
    let bunch = counts.bunching();
    let anti = counts.antibunching();
    match (bunch, anti) {
        (0, 0) => Err(Error::validation("branch counts", "all counts are zero")),
        (0, _) => Ok(RatioDb::Infinite),
        _ => Ok(RatioDb::Finite(10.0 * (anti as f64 / bunch as f64).log10())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BalanceEstimate {
    pub p: f64,
    pub sigma_p: f64,
}

/// Share of the ba branch among antibunching coincidences,
/// `p = n_ba/(n_ab + n_ba)`, with the binomial error `√(p(1−p)/N)`.
pub fn balance_parameter(counts: &BranchCounts) -> Result<BalanceEstimate> {
    let total = counts.antibunching();
    if total == 0 {
        return Err(Error::validation(
            "branch counts",
            "no antibunching coincidences to balance",
        ));
    }
    let n = total as f64;
    let p = counts.counts.ba as f64 / n;
    Ok(BalanceEstimate {
        p,
        sigma_p: (p * (1.0 - p) / n).sqrt(),
    })
}

/// Singles rate measured at one pump power.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PowerScanPoint {
    pub power_mw: f64,
    pub rate_hz: f64,
    pub sigma_hz: f64,
}

/// Poisson-sampled singles rates of one arm over a list of pump powers.
/// Point `i` uses generator stream `i`.
pub fn simulate_power_scan(
    model: &SourceModel,
    powers: &[f64],
    integration_time_s: f64,
    arm: Arm,
    seed: u64,
) -> Result<Vec<PowerScanPoint>> {
    model.validate()?;
    if !(integration_time_s > 0.0) || !integration_time_s.is_finite() {
        return Err(Error::validation("integration_time_s", "must be positive"));
    }
    powers
        .iter()
        .enumerate()
        .map(|(i, &power)| {
            let mean = singles_rate(model, power, arm)? * integration_time_s;
            let n = poisson(&mut replicate_rng(seed, i as u64), mean) as f64;
            Ok(PowerScanPoint {
                power_mw: power,
                rate_hz: n / integration_time_s,
                // A zero-count point keeps a one-count error bar so it can
                // still be weighted.
                sigma_hz: n.max(1.0).sqrt() / integration_time_s,
            })
        })
        .collect()
}
