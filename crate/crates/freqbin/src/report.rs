//! JSON documents written by `fit` and `tomo`.
//!
//! Uncertainties that are not finite (for example after a fit that did not
//! converge) are stored as `null`.

use std::path::Path;

use freqbin_core::beating::{BeatingDataset, BeatingParams};
use freqbin_core::counting::{BranchCounts, PowerScanPoint, RatioDb};
use freqbin_core::estimation::{BeatingFit, BootstrapSummary, DensityMatrix, PolynomialFit};
use freqbin_core::statekit::PerBranch;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub tool_version: String,
    pub config_origin: String,
    /// Hex SHA-256 of the configuration text.
    pub config_hash: String,
    pub seed: u64,
    /// Input files by name with their hex SHA-256.
    pub inputs: Vec<InputDigest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub name: String,
    pub sha256: String,
}

impl Provenance {
    pub fn new(config: &LoadedConfig, seed: u64) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            tool_version: TOOL_VERSION.to_owned(),
            config_origin: config.origin.clone(),
            config_hash: config.hash(),
            seed,
            inputs: Vec::new(),
        }
    }

    /// Records an input by file name only, so outputs do not depend on the
    /// working directory.
    pub fn with_input(mut self, path: &Path, bytes: &[u8]) -> Self {
        let name = path.file_name().map_or_else(
            || path.display().to_string(),
            |n| n.to_string_lossy().into_owned(),
        );
        self.inputs.push(InputDigest {
            name,
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub sigma: Option<f64>,
}

impl Measured {
    pub fn new(value: f64, sigma: f64) -> Self {
        Self {
            value,
            sigma: sigma.is_finite().then_some(sigma),
        }
    }

    pub fn sigma_or_nan(&self) -> f64 {
        self.sigma.unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamsRecord {
    pub amplitude: Measured,
    pub visibility: Measured,
    pub envelope_omega: Measured,
    pub delta_omega: Measured,
    pub phase: Measured,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub params: ParamsRecord,
    pub chi_square: f64,
    pub reduced_chi_square: f64,
    pub degrees_of_freedom: usize,
    pub converged: bool,
    pub iterations: usize,
}

impl From<&BeatingFit> for FitRecord {
    fn from(f: &BeatingFit) -> Self {
        let (p, u) = (&f.params, &f.uncertainties);
        Self {
            params: ParamsRecord {
                amplitude: Measured::new(p.amplitude, u.amplitude),
                visibility: Measured::new(p.visibility, u.visibility),
                envelope_omega: Measured::new(p.envelope_omega, u.envelope_omega),
                delta_omega: Measured::new(p.delta_omega, u.delta_omega),
                phase: Measured::new(p.phase, u.phase),
            },
            chi_square: f.chi_square,
            reduced_chi_square: f.reduced_chi_square,
            degrees_of_freedom: f.degrees_of_freedom,
            converged: f.converged,
            iterations: f.iterations,
        }
    }
}

impl FitRecord {
    pub fn params(&self) -> BeatingParams {
        let p = &self.params;
        BeatingParams {
            amplitude: p.amplitude.value,
            visibility: p.visibility.value,
            envelope_omega: p.envelope_omega.value,
            delta_omega: p.delta_omega.value,
            phase: p.phase.value,
        }
    }

    pub fn to_fit(&self) -> BeatingFit {
        let p = &self.params;
        BeatingFit {
            params: self.params(),
            uncertainties: BeatingParams {
                amplitude: p.amplitude.sigma_or_nan(),
                visibility: p.visibility.sigma_or_nan(),
                envelope_omega: p.envelope_omega.sigma_or_nan(),
                delta_omega: p.delta_omega.sigma_or_nan(),
                phase: p.phase.sigma_or_nan(),
            },
            chi_square: self.chi_square,
            reduced_chi_square: self.reduced_chi_square,
            degrees_of_freedom: self.degrees_of_freedom,
            converged: self.converged,
            iterations: self.iterations,
        }
    }
}

/// The fitted data exactly as read, so plots can show the raw points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatingRecord {
    pub integration_time_s: f64,
    pub delay_ps: Vec<f64>,
    pub counts: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl From<&BeatingDataset> for BeatingRecord {
    fn from(d: &BeatingDataset) -> Self {
        Self {
            integration_time_s: d.integration_time_per_point(),
            delay_ps: d.delays().to_vec(),
            counts: d.counts().to_vec(),
            sigma: d.sigmas().to_vec(),
        }
    }
}

impl BeatingRecord {
    pub fn to_dataset(&self) -> freqbin_core::Result<BeatingDataset> {
        BeatingDataset::new(
            self.delay_ps.clone(),
            self.counts.clone(),
            self.sigma.clone(),
            self.integration_time_s,
        )
    }
}

/// Output of `fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub provenance: Provenance,
    pub fit: FitRecord,
    /// Accidental counts removed from every point before fitting, if any.
    pub accidentals_per_point: Option<f64>,
    pub data: BeatingRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub counts: u64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRecord {
    /// `None` when there are no bunching counts.
    pub value_db: Option<f64>,
    pub sigma_db: Option<f64>,
    pub infinite: bool,
}

impl RatioRecord {
    /// Propagates Poisson errors on the two totals into dB.
    pub fn new(ratio: RatioDb, counts: &BranchCounts) -> Self {
        match ratio {
            RatioDb::Infinite => Self {
                value_db: None,
                sigma_db: None,
                infinite: true,
            },
            RatioDb::Finite(v) => {
                let (a, b) = (counts.antibunching() as f64, counts.bunching() as f64);
                let sigma = 10.0 / std::f64::consts::LN_10 * (1.0 / a + 1.0 / b).sqrt();
                Self {
                    value_db: Some(v),
                    sigma_db: sigma.is_finite().then_some(sigma),
                    infinite: false,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityRecord {
    pub real: [[f64; 4]; 4],
    pub imag: [[f64; 4]; 4],
    pub p: f64,
    pub visibility: f64,
    pub phase: f64,
    /// Fitted visibility before an optional projection.
    pub fitted_visibility: f64,
    pub projected: bool,
    pub physical: bool,
    pub physicality_margin: f64,
    pub eigenvalues: [f64; 4],
    pub purity: f64,
}

impl DensityRecord {
    pub fn new(rho: &DensityMatrix, fitted_visibility: f64, margin: f64) -> Self {
        Self {
            real: rho.real_part(),
            imag: rho.imag_part(),
            p: rho.p,
            visibility: rho.visibility,
            phase: rho.phase,
            fitted_visibility,
            projected: rho.visibility != fitted_visibility,
            physical: rho.physical,
            physicality_margin: margin,
            eigenvalues: rho.eigenvalues(),
            purity: rho.purity(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityRecord {
    /// ⟨ψ⁺|ρ|ψ⁺⟩ by matrix contraction.
    pub value: f64,
    /// Bootstrap standard deviation.
    pub sigma: Option<f64>,
    /// `(1 + V cos φ)/2`.
    pub closed_form: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerScanRecord {
    pub points: Vec<PowerScanPoint>,
    pub fit: PolynomialFit,
}

/// Output of `tomo`, input of `report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub provenance: Provenance,
    pub integration_time_s: f64,
    pub branch_counts: PerBranch<CountRecord>,
    pub ratio_db: RatioRecord,
    /// `p` with its binomial counting error.
    pub balance: Measured,
    pub beating_fit: FitRecord,
    pub beating_data: Option<BeatingRecord>,
    pub density_matrix: DensityRecord,
    pub fidelity: FidelityRecord,
    pub bootstrap: BootstrapSummary,
    pub power_scan: Option<PowerScanRecord>,
}

impl ReportBundle {
    pub fn branch_counts(&self) -> BranchCounts {
        BranchCounts {
            counts: self.branch_counts.map(|_, c| c.counts),
            sigmas: self.branch_counts.map(|_, c| c.sigma),
            integration_time_s: self.integration_time_s,
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn from_json<T: DeserializeOwned>(text: &str, path: &Path) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::Json {
        path: path.to_owned(),
        reason: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_sigma_becomes_null() {
        let m = Measured::new(1.0, f64::NAN);
        assert_eq!(
            serde_json::to_string(&m).unwrap(),
            r#"{"value":1.0,"sigma":null}"#
        );
        assert!(m.sigma_or_nan().is_nan());
    }

    #[test]
    fn ratio_sigma_follows_poisson_totals() {
        let counts = BranchCounts::from_counts(
            PerBranch {
                aa: 50,
                bb: 50,
                ab: 5000,
                ba: 5000,
            },
            1.0,
        );
        let r = RatioRecord::new(RatioDb::Finite(20.0), &counts);
        let expected = 10.0 / std::f64::consts::LN_10 * (1.0f64 / 10000.0 + 1.0 / 100.0).sqrt();
        assert!((r.sigma_db.unwrap() - expected).abs() < 1e-12);
        let inf = RatioRecord::new(RatioDb::Infinite, &counts);
        assert!(inf.infinite && inf.value_db.is_none());
    }
}
