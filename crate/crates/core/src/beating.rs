//! Spatial quantum beating: coincidences behind the 50/50 beam splitter as a
//! function of the relative delay Δτ between the two paths,
//!
//! ```text
//! P(Δτ) = A·[1 − V·sinc(Ω·Δτ)·cos(Δω·Δτ + φ)],   sinc(x) = sin(x)/x.
//! ```
//!
//! Delays are in ps and angular frequencies in rad/ps.

use alloc::vec::Vec;

use crate::error::{ensure_finite, Error, Result};
use crate::rng::{poisson, replicate_rng};

/// Minimum number of points in a [`BeatingDataset`].
pub const MIN_DATASET_LEN: usize = 5;

/// Unnormalized sinc, `sin(x)/x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Derivative of [`sinc`].
pub fn sinc_derivative(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        -x / 3.0 + x * x * x / 30.0
    } else {
        (x * x.cos() - x.sin()) / (x * x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BeatingParams {
    /// Mean coincidences per delay point far from zero delay.
    pub amplitude: f64,
    pub visibility: f64,
    /// Envelope scale Ω (rad/ps), set by the filter passband.
    pub envelope_omega: f64,
    /// Signal-idler angular frequency difference Δω (rad/ps).
    pub delta_omega: f64,
    pub phase: f64,
}

impl BeatingParams {
    /// Checks the ranges required for synthesis: `A > 0`, `0 ≤ V ≤ 1`,
    /// `Ω > 0`. Fitted parameters are not required to pass.
    pub fn validate(&self) -> Result<()> {
        ensure_finite("amplitude", self.amplitude)?;
        ensure_finite("visibility", self.visibility)?;
        ensure_finite("envelope_omega", self.envelope_omega)?;
        ensure_finite("delta_omega", self.delta_omega)?;
        ensure_finite("phase", self.phase)?;
        if !(self.amplitude > 0.0) {
            return Err(Error::validation("amplitude", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(Error::validation(
                "visibility",
                alloc::format!("{} is outside [0, 1]", self.visibility),
            ));
        }
        if !(self.envelope_omega > 0.0) {
            return Err(Error::validation("envelope_omega", "must be positive"));
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; 5] {
        [
            self.amplitude,
            self.visibility,
            self.envelope_omega,
            self.delta_omega,
            self.phase,
        ]
    }

    pub fn from_array(x: [f64; 5]) -> Self {
        Self {
            amplitude: x[0],
            visibility: x[1],
            envelope_omega: x[2],
            delta_omega: x[3],
            phase: x[4],
        }
    }
}

/// Expected coincidences at one delay.
pub fn beating_curve(params: &BeatingParams, delay: f64) -> f64 {
    let envelope = sinc(params.envelope_omega * delay);
    params.amplitude
        * (1.0 - params.visibility * envelope * (params.delta_omega * delay + params.phase).cos())
}

/// Partial derivatives of [`beating_curve`] with respect to
/// (A, V, Ω, Δω, φ).
pub fn beating_gradient(params: &BeatingParams, delay: f64) -> [f64; 5] {
    let BeatingParams {
        amplitude: a,
        visibility: v,
        envelope_omega: omega,
        delta_omega: dw,
        phase,
    } = *params;
    let s = sinc(omega * delay);
    let arg = dw * delay + phase;
    let (sin_arg, cos_arg) = arg.sin_cos();
    [
        1.0 - v * s * cos_arg,
        -a * s * cos_arg,
        -a * v * cos_arg * sinc_derivative(omega * delay) * delay,
        a * v * s * sin_arg * delay,
        a * v * s * sin_arg,
    ]
}

/// Coincidence counts versus delay.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatingDataset {
    delays: Vec<f64>,
    counts: Vec<f64>,
    sigmas: Vec<f64>,
    integration_time_per_point: f64,
}

impl BeatingDataset {
    /// Validates strictly increasing delays, equal lengths of at least
    /// [`MIN_DATASET_LEN`], non-negative counts and sigmas.
    pub fn new(
        delays: Vec<f64>,
        counts: Vec<f64>,
        sigmas: Vec<f64>,
        integration_time_per_point: f64,
    ) -> Result<Self> {
        if delays.len() != counts.len() || delays.len() != sigmas.len() {
            return Err(Error::validation(
                "beating dataset",
                alloc::format!(
                    "column lengths differ: {} delays, {} counts, {} sigmas",
                    delays.len(),
                    counts.len(),
                    sigmas.len()
                ),
            ));
        }
        if delays.len() < MIN_DATASET_LEN {
            return Err(Error::validation(
                "beating dataset",
                alloc::format!("{} points, need at least {MIN_DATASET_LEN}", delays.len()),
            ));
        }
        if delays.iter().any(|d| !d.is_finite()) || delays.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::validation(
                "delays",
                "must be finite and strictly increasing",
            ));
        }
        if counts
            .iter()
            .chain(&sigmas)
            .any(|v| !(*v >= 0.0) || !v.is_finite())
        {
            return Err(Error::validation(
                "counts",
                "counts and sigmas must be non-negative",
            ));
        }
        if !(integration_time_per_point > 0.0) {
            return Err(Error::validation(
                "integration_time_per_point",
                "must be positive",
            ));
        }
        Ok(Self {
            delays,
            counts,
            sigmas,
            integration_time_per_point,
        })
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn integration_time_per_point(&self) -> f64 {
        self.integration_time_per_point
    }

    pub fn span(&self) -> f64 {
        self.delays[self.len() - 1] - self.delays[0]
    }
}

fn check_delays(delays: &[f64]) -> Result<()> {
    if delays.iter().any(|d| !d.is_finite()) || delays.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::validation(
            "delays",
            "must be finite and strictly increasing",
        ));
    }
    Ok(())
}

/// One Poisson draw around the curve at `delay`, from `replicate_rng(seed, index)`.
pub fn sample_beating_point(params: &BeatingParams, delay: f64, seed: u64, index: u64) -> u64 {
    poisson(
        &mut replicate_rng(seed, index),
        beating_curve(params, delay),
    )
}

/// Poisson-noisy interferogram. Point `i` is
/// `sample_beating_point(params, delays[i], seed, i)`, so any subset of
/// points can be evaluated independently.
pub fn synthesize_beating_dataset(
    params: &BeatingParams,
    delays: &[f64],
    integration_time_per_point: f64,
    seed: u64,
) -> Result<BeatingDataset> {
    params.validate()?;
    check_delays(delays)?;
    let counts: Vec<f64> = delays
        .iter()
        .enumerate()
        .map(|(i, &d)| sample_beating_point(params, d, seed, i as u64) as f64)
        .collect();
    let sigmas = counts.iter().map(|c| c.sqrt()).collect();
    BeatingDataset::new(delays.to_vec(), counts, sigmas, integration_time_per_point)
}

/// Noise-free interferogram with √(expected) error bars.
pub fn expected_beating_dataset(
    params: &BeatingParams,
    delays: &[f64],
    integration_time_per_point: f64,
) -> Result<BeatingDataset> {
    params.validate()?;
    check_delays(delays)?;
    let counts: Vec<f64> = delays.iter().map(|&d| beating_curve(params, d)).collect();
    let sigmas = counts.iter().map(|c| c.max(1.0).sqrt()).collect();
    BeatingDataset::new(delays.to_vec(), counts, sigmas, integration_time_per_point)
}

/// Delays spaced by `step` and centred on zero, covering `span`.
///
/// With `n = ⌊span/step⌋` the grid has `n + 1` points `(k − n/2)·step`; it
/// contains zero exactly when `n` is even.
pub fn delay_grid(span: f64, step: f64) -> Result<Vec<f64>> {
    ensure_finite("span", span)?;
    ensure_finite("step", step)?;
    if !(span > 0.0) {
        return Err(Error::validation("span", "must be positive"));
    }
    if !(step > 0.0 && step <= span) {
        return Err(Error::validation("step", "must lie in (0, span]"));
    }
    let n = (span / step + 1e-9).floor() as i64;
    let half = n as f64 / 2.0;
    Ok((0..=n).map(|k| (k as f64 - half) * step).collect())
}
