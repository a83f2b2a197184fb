//! Experiment configuration: one TOML file, flat dotted keys, one seed.

use std::path::Path;

use freqbin_core::beating::{delay_grid, BeatingParams};
use freqbin_core::counting::{Arm, CoincidenceConfig, PortEfficiencies, SourceModel};
use freqbin_core::estimation::{MIN_GUESS_POINTS, MIN_REPLICATES};
use freqbin_core::statekit::{
    branch_probabilities, fpbs_decompose, frequency_difference, sagnac_phase, sagnac_state,
    BranchProbabilities, PerBranch, PhotonFrequencies, PumpPolarization,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Name accepted by `--config` for the built-in operating point.
pub const PAPER_PROFILE: &str = "paper-profile";
const PAPER_PROFILE_TEXT: &str = include_str!("../profiles/paper-profile.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub pump: PumpConfig,
    pub channels: ChannelConfig,
    pub source: SourceConfig,
    pub coincidence: CoincidenceSection,
    pub branches: BranchConfig,
    pub beating: BeatingConfig,
    pub power_scan: PowerScanConfig,
    #[serde(default)]
    pub estimation: EstimationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpConfig {
    pub lambda_nm: f64,
    pub power_mw: f64,
    pub phi_p_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub idler_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub pair_coefficient: f64,
    pub noise_coefficient: f64,
    pub collection_efficiency_signal: f64,
    pub collection_efficiency_idler: f64,
    pub dark_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoincidenceSection {
    pub window_ps: f64,
    pub integration_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchConfig {
    pub total_pairs: f64,
    pub efficiency_d: f64,
    pub efficiency_e: f64,
    pub efficiency_f: f64,
    pub efficiency_g: f64,
    #[serde(default)]
    pub floor_aa: f64,
    #[serde(default)]
    pub floor_bb: f64,
    #[serde(default)]
    pub floor_ab: f64,
    #[serde(default)]
    pub floor_ba: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeatingConfig {
    pub span_ps: f64,
    pub step_ps: f64,
    /// Mean coincidences per delay point away from the interference (A).
    pub counts_scale: f64,
    pub visibility: f64,
    pub envelope_omega: f64,
    #[serde(default)]
    pub phase_rad: f64,
    pub integration_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArmName {
    Signal,
    Idler,
}

impl From<ArmName> for Arm {
    fn from(a: ArmName) -> Arm {
        match a {
            ArmName::Signal => Arm::Signal,
            ArmName::Idler => Arm::Idler,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerScanConfig {
    pub powers_mw: Vec<f64>,
    pub integration_time_s: f64,
    pub arm: ArmName,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationConfig {
    pub bootstrap_replicates: usize,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            bootstrap_replicates: 2000,
        }
    }
}

/// A parsed configuration together with the text it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub origin: String,
    pub text: String,
}

impl LoadedConfig {
    /// Loads `--config`: a file path, the built-in profile name, or the
    /// built-in profile when absent.
    pub fn load(source: Option<&Path>) -> CliResult<Self> {
        match source {
            None => Self::paper_profile(),
            Some(p) if p.as_os_str() == PAPER_PROFILE => Self::paper_profile(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                Self::from_text(text, p.display().to_string())
            }
        }
    }

    pub fn paper_profile() -> CliResult<Self> {
        Self::from_text(PAPER_PROFILE_TEXT.to_owned(), PAPER_PROFILE.to_owned())
    }

    pub fn from_text(text: String, origin: String) -> CliResult<Self> {
        let config = ExperimentConfig::parse(&text, &origin)?;
        Ok(Self {
            config,
            origin,
            text,
        })
    }

    /// Hex SHA-256 of the configuration text.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.text.as_bytes()))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str, origin: &str) -> CliResult<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::ConfigSyntax {
                origin: origin.to_owned(),
                message: e.to_string().trim_end().to_owned(),
            })?;
        config
            .validate()
            .map_err(|(key, reason)| CliError::ConfigValue {
                origin: origin.to_owned(),
                line: locate_key(text, &key),
                key,
                reason,
            })?;
        Ok(config)
    }

    /// Checks every field against the ranges of the model that consumes it.
    /// Returns the dotted key at fault.
    pub fn validate(&self) -> Result<(), Fault> {
        let p = &self.pump;
        positive("pump.lambda_nm", p.lambda_nm)?;
        non_negative("pump.power_mw", p.power_mw)?;
        PumpPolarization::with_relative_phase(p.phi_p_rad)
            .map_err(within("pump", |_| "phi_p_rad".to_owned()))?;
        positive("channels.idler_nm", self.channels.idler_nm)?;
        self.frequencies()
            .map_err(|e| ("channels.idler_nm".to_owned(), e.to_string()))?;

        self.source_model()
            .validate()
            .map_err(within("source", same))?;
        self.coincidence()
            .validate()
            .map_err(within("coincidence", same))?;

        let b = &self.branches;
        non_negative("branches.total_pairs", b.total_pairs)?;
        self.port_efficiencies()
            .validate()
            .map_err(within("branches", same))?;
        for (key, v) in [
            ("branches.floor_aa", b.floor_aa),
            ("branches.floor_bb", b.floor_bb),
            ("branches.floor_ab", b.floor_ab),
            ("branches.floor_ba", b.floor_ba),
        ] {
            non_negative(key, v)?;
        }

        self.beating_params()
            .validate()
            .map_err(within("beating", beating_field))?;
        positive(
            "beating.integration_time_s",
            self.beating.integration_time_s,
        )?;
        let grid = self.delays().map_err(within("beating", beating_field))?;
        if grid.len() < MIN_GUESS_POINTS {
            return Err((
                "beating.step_ps".to_owned(),
                format!(
                    "grid has {} points, the fit needs at least {MIN_GUESS_POINTS}",
                    grid.len()
                ),
            ));
        }

        let s = &self.power_scan;
        if s.powers_mw.len() < 4 {
            return Err((
                "power_scan.powers_mw".to_owned(),
                format!("{} powers, need at least 4", s.powers_mw.len()),
            ));
        }
        for &w in &s.powers_mw {
            non_negative("power_scan.powers_mw", w)?;
        }
        let mut sorted = s.powers_mw.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err((
                "power_scan.powers_mw".to_owned(),
                "powers must be distinct".to_owned(),
            ));
        }
        positive("power_scan.integration_time_s", s.integration_time_s)?;

        if self.estimation.bootstrap_replicates < MIN_REPLICATES {
            return Err((
                "estimation.bootstrap_replicates".to_owned(),
                format!(
                    "{} < {MIN_REPLICATES}",
                    self.estimation.bootstrap_replicates
                ),
            ));
        }
        Ok(())
    }

    pub fn source_model(&self) -> SourceModel {
        let s = &self.source;
        SourceModel {
            pair_coefficient: s.pair_coefficient,
            noise_coefficient: s.noise_coefficient,
            collection_efficiency_signal: s.collection_efficiency_signal,
            collection_efficiency_idler: s.collection_efficiency_idler,
            dark_rate: s.dark_rate,
        }
    }

    pub fn coincidence(&self) -> CoincidenceConfig {
        CoincidenceConfig {
            window_ps: self.coincidence.window_ps,
            integration_time_s: self.coincidence.integration_time_s,
        }
    }

    pub fn frequencies(&self) -> freqbin_core::Result<PhotonFrequencies> {
        PhotonFrequencies::from_pump_and_idler(self.pump.lambda_nm, self.channels.idler_nm)
    }

    /// Beat frequency of the configured channels (rad/ps).
    pub fn delta_omega(&self) -> f64 {
        self.frequencies()
            .map(|f| frequency_difference(&f))
            .unwrap_or(f64::NAN)
    }

    pub fn branch_probabilities(&self) -> freqbin_core::Result<BranchProbabilities> {
        let pol = PumpPolarization::with_relative_phase(self.pump.phi_p_rad)?;
        let state = sagnac_state(sagnac_phase(&pol))?;
        branch_probabilities(&fpbs_decompose(&state)?)
    }

    pub fn port_efficiencies(&self) -> PortEfficiencies {
        let b = &self.branches;
        PortEfficiencies {
            d: b.efficiency_d,
            e: b.efficiency_e,
            f: b.efficiency_f,
            g: b.efficiency_g,
        }
    }

    pub fn floors(&self) -> PerBranch<f64> {
        let b = &self.branches;
        PerBranch {
            aa: b.floor_aa,
            bb: b.floor_bb,
            ab: b.floor_ab,
            ba: b.floor_ba,
        }
    }

    pub fn beating_params(&self) -> BeatingParams {
        let b = &self.beating;
        BeatingParams {
            amplitude: b.counts_scale,
            visibility: b.visibility,
            envelope_omega: b.envelope_omega,
            delta_omega: self.delta_omega(),
            phase: b.phase_rad,
        }
    }

    pub fn delays(&self) -> freqbin_core::Result<Vec<f64>> {
        delay_grid(self.beating.span_ps, self.beating.step_ps)
    }
}

type Fault = (String, String);

/// Maps a model validation error to the dotted config key it came from.
fn within(
    section: &'static str,
    rename: fn(&str) -> String,
) -> impl Fn(freqbin_core::Error) -> Fault {
    move |e| match e {
        freqbin_core::Error::Validation { field, reason } => {
            (format!("{section}.{}", rename(field)), reason)
        }
        other => (section.to_owned(), other.to_string()),
    }
}

fn same(field: &str) -> String {
    field.to_owned()
}

fn beating_field(field: &str) -> String {
    match field {
        "amplitude" => "counts_scale",
        "phase" => "phase_rad",
        "span" => "span_ps",
        "step" => "step_ps",
        other => other,
    }
    .to_owned()
}

fn positive(key: &str, v: f64) -> Result<(), Fault> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err((key.to_owned(), format!("{v} is not a positive number")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<(), Fault> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err((key.to_owned(), format!("{v} is not a non-negative number")))
    }
}

/// 1-based line on which the dotted `key` is assigned, accepting both
/// `[section]` tables and dotted keys.
pub fn locate_key(text: &str, key: &str) -> Option<usize> {
    let (section, leaf) = key.rsplit_once('.').unwrap_or(("", key));
    let mut table = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            table = name.trim().to_owned();
            continue;
        }
        let Some((lhs, _)) = line.split_once('=') else {
            continue;
        };
        let lhs: String = lhs.split('.').map(str::trim).collect::<Vec<_>>().join(".");
        let full = if table.is_empty() {
            lhs
        } else {
            format!("{table}.{lhs}")
        };
        if full == key || (section.is_empty() && full == leaf) {
            return Some(i + 1);
        }
    }
    // A missing key with its section present points at the section.
    text.lines()
        .position(|l| l.trim() == format!("[{section}]"))
        .map(|i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_profile_parses_and_validates() {
        let loaded = LoadedConfig::paper_profile().unwrap();
        assert_eq!(loaded.origin, PAPER_PROFILE);
        assert!((loaded.config.delta_omega() - 13.8).abs() / 13.8 < 0.01);
        assert_eq!(loaded.hash().len(), 64);
    }

    #[test]
    fn dotted_and_table_keys_are_located() {
        let text = "seed = 1\n[beating]\nspan_ps = 1\nstep_ps = 2\n\npump.power_mw = 3\n";
        assert_eq!(locate_key(text, "beating.step_ps"), Some(4));
        assert_eq!(locate_key(text, "seed"), Some(1));
        let dotted = "pump.power_mw = 3\nbeating . step_ps = 2\n";
        assert_eq!(locate_key(dotted, "beating.step_ps"), Some(2));
        assert_eq!(locate_key(dotted, "nope.key"), None);
    }

    #[test]
    fn out_of_range_value_names_key_and_line() {
        let text =
            PAPER_PROFILE_TEXT.replace("beating.visibility = 0.96", "beating.visibility = 1.5");
        let err = ExperimentConfig::parse(&text, "cfg.toml").unwrap_err();
        let CliError::ConfigValue { key, line, .. } = &err else {
            panic!("{err}");
        };
        assert_eq!(key, "beating.visibility");
        let expected = text
            .lines()
            .position(|l| l.starts_with("beating.visibility"))
            .unwrap()
            + 1;
        assert_eq!(*line, Some(expected));
        assert!(err
            .to_string()
            .starts_with(&format!("cfg.toml:{expected}: ")));
    }

    #[test]
    fn infeasible_idler_is_rejected() {
        let text =
            PAPER_PROFILE_TEXT.replace("channels.idler_nm = 1531.90", "channels.idler_nm = 700.0");
        let err = ExperimentConfig::parse(&text, "cfg").unwrap_err();
        assert!(matches!(err, CliError::ConfigValue { ref key, .. } if key == "channels.idler_nm"));
    }

    #[test]
    fn unknown_key_is_a_syntax_error_with_line() {
        let text = format!("{PAPER_PROFILE_TEXT}\nbeating.colour = 3\n");
        let err = ExperimentConfig::parse(&text, "cfg").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, CliError::ConfigSyntax { .. }));
        assert!(msg.contains("line"), "{msg}");
        assert!(msg.contains("colour"), "{msg}");
    }

    #[test]
    fn too_coarse_grid_is_rejected() {
        let text = PAPER_PROFILE_TEXT.replace("beating.step_ps = 0.02", "beating.step_ps = 1.0");
        let err = ExperimentConfig::parse(&text, "cfg").unwrap_err();
        assert!(matches!(err, CliError::ConfigValue { ref key, .. } if key == "beating.step_ps"));
    }
}
