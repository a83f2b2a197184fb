//! The five subcommands. Each returns a [`Status`] once its outputs are
//! written, or an error if it could not get that far.

use std::path::{Path, PathBuf};

use freqbin_core::beating::synthesize_beating_dataset;
use freqbin_core::counting::{
    antibunch_bunch_ratio_db, balance_parameter, car_point, simulate_branch_counts,
    simulate_power_scan,
};
use freqbin_core::estimation::{
    fidelity_closed_form, fidelity_to_bell, fit_beating, fit_power_scan, initial_guess,
    physicality_margin, project_physical, propagate_uncertainties, reconstruct_density,
    subtract_accidentals,
};

use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult};
use crate::formats::{self, read_file, write_file};
use crate::plot;
use crate::report::{
    from_json, to_json, BeatingRecord, CountRecord, DensityRecord, FidelityRecord, FitRecord,
    FitReport, Measured, PowerScanRecord, Provenance, RatioRecord, ReportBundle,
};
use crate::verify;

pub const BRANCH_FILE: &str = "branch_counts.csv";
pub const BEATING_FILE: &str = "beating.csv";
pub const POWER_SCAN_FILE: &str = "power_scan.csv";
pub const FIT_FILE: &str = "fit.json";
pub const REPORT_FILE: &str = "report.json";
pub const DENSITY_FILE: &str = "density_matrix.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

/// How a command that wrote its outputs ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    NotConverged,
    Unphysical,
    CriteriaFailed,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::CriteriaFailed => 1,
            Status::NotConverged => 2,
            Status::Unphysical => 3,
        }
    }
}

impl CliError {
    /// A singular fit is a convergence failure; everything else is a
    /// validation failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Model(freqbin_core::Error::DegenerateFit) => 2,
            _ => 1,
        }
    }
}

/// Options shared by every pipeline command.
#[derive(Debug, Clone, Default)]
pub struct Common {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: PathBuf,
}

impl Common {
    fn load(&self) -> CliResult<(LoadedConfig, u64)> {
        let loaded = LoadedConfig::load(self.config.as_deref())?;
        let seed = self.seed.unwrap_or(loaded.config.seed);
        Ok((loaded, seed))
    }

    fn out_dir(&self) -> CliResult<&Path> {
        std::fs::create_dir_all(&self.out).map_err(|e| CliError::io(&self.out, e))?;
        Ok(&self.out)
    }
}

/// Seed offsets so the three datasets draw from unrelated generators.
const BEATING_SEED_OFFSET: u64 = 1;
const POWER_SCAN_SEED_OFFSET: u64 = 2;

pub fn simulate(common: &Common) -> CliResult<(Status, Vec<PathBuf>)> {
    let (loaded, seed) = common.load()?;
    let cfg = &loaded.config;
    let out = common.out_dir()?;

    let counts = simulate_branch_counts(
        &cfg.branch_probabilities()?,
        cfg.branches.total_pairs,
        &cfg.port_efficiencies(),
        &cfg.floors(),
        cfg.coincidence.integration_time_s,
        seed,
    )?;
    let beating = synthesize_beating_dataset(
        &cfg.beating_params(),
        &cfg.delays()?,
        cfg.beating.integration_time_s,
        seed.wrapping_add(BEATING_SEED_OFFSET),
    )?;
    let scan = simulate_power_scan(
        &cfg.source_model(),
        &cfg.power_scan.powers_mw,
        cfg.power_scan.integration_time_s,
        cfg.power_scan.arm.into(),
        seed.wrapping_add(POWER_SCAN_SEED_OFFSET),
    )?;

    let files = [
        (BRANCH_FILE, formats::branch_counts_to_csv(&counts)),
        (BEATING_FILE, formats::beating_to_csv(&beating)),
        (POWER_SCAN_FILE, formats::power_scan_to_csv(&scan)),
    ];
    let mut written = Vec::new();
    for (name, text) in files {
        let path = out.join(name);
        write_file(&path, &text)?;
        written.push(path);
    }
    Ok((Status::Success, written))
}

pub fn fit(
    common: &Common,
    beating_csv: &Path,
    subtract: bool,
) -> CliResult<(Status, FitReport, PathBuf)> {
    let (loaded, seed) = common.load()?;
    let cfg = &loaded.config;
    let text = read_file(beating_csv)?;
    let data = formats::beating_from_csv(&text, beating_csv, cfg.beating.integration_time_s)?;

    // Accidentals are the measured level divided by the configured CAR.
    let (fit_data, accidentals) = if subtract {
        let point = car_point(&cfg.source_model(), &cfg.coincidence(), cfg.pump.power_mw)?;
        let level = data.counts().iter().sum::<f64>() / data.len() as f64;
        let per_point = level / point.car;
        (subtract_accidentals(&data, per_point)?, Some(per_point))
    } else {
        (data.clone(), None)
    };
    let fit = fit_beating(&fit_data, &initial_guess(&fit_data)?)?;

    let report = FitReport {
        provenance: Provenance::new(&loaded, seed).with_input(beating_csv, text.as_bytes()),
        fit: FitRecord::from(&fit),
        accidentals_per_point: accidentals,
        data: BeatingRecord::from(&data),
    };
    let path = common.out_dir()?.join(FIT_FILE);
    write_file(&path, &to_json(&report))?;
    let status = if fit.converged {
        Status::Success
    } else {
        Status::NotConverged
    };
    Ok((status, report, path))
}

pub fn tomo(
    common: &Common,
    fit_json: &Path,
    branch_csv: &Path,
    power_scan_csv: Option<&Path>,
    project: bool,
) -> CliResult<(Status, ReportBundle)> {
    let (loaded, seed) = common.load()?;
    let cfg = &loaded.config;
    let fit_text = read_file(fit_json)?;
    let fit_report: FitReport = from_json(&fit_text, fit_json)?;
    let branch_text = read_file(branch_csv)?;
    let counts = formats::branch_counts_from_csv(
        &branch_text,
        branch_csv,
        cfg.coincidence.integration_time_s,
    )?;
    let mut provenance = Provenance::new(&loaded, seed)
        .with_input(fit_json, fit_text.as_bytes())
        .with_input(branch_csv, branch_text.as_bytes());

    let fit = fit_report.fit.to_fit();
    let balance = balance_parameter(&counts)?;
    let ratio = antibunch_bunch_ratio_db(&counts)?;
    let fitted_v = fit.params.visibility;
    let v = if project {
        project_physical(balance.p, fitted_v)
    } else {
        fitted_v
    };
    let rho = reconstruct_density(balance.p, v, fit.params.phase)?;
    let boot = propagate_uncertainties(&counts, &fit, cfg.estimation.bootstrap_replicates, seed)?;

    let power_scan = match power_scan_csv {
        Some(path) => {
            let text = read_file(path)?;
            let points = formats::power_scan_from_csv(&text, path)?;
            provenance = provenance.with_input(path, text.as_bytes());
            let fit = fit_power_scan(&points)?;
            Some(PowerScanRecord { points, fit })
        }
        None => None,
    };

    let bundle = ReportBundle {
        provenance,
        integration_time_s: counts.integration_time_s,
        branch_counts: counts.counts.map(|b, n| CountRecord {
            counts: n,
            sigma: counts.sigmas[b],
        }),
        ratio_db: RatioRecord::new(ratio, &counts),
        balance: Measured::new(balance.p, balance.sigma_p),
        beating_fit: fit_report.fit,
        beating_data: Some(fit_report.data),
        density_matrix: DensityRecord::new(&rho, fitted_v, physicality_margin(balance.p, v)),
        fidelity: FidelityRecord {
            value: fidelity_to_bell(&rho),
            sigma: boot.fidelity.std.is_finite().then_some(boot.fidelity.std),
            closed_form: fidelity_closed_form(v, fit.params.phase),
        },
        bootstrap: boot,
        power_scan,
    };

    let out = common.out_dir()?;
    write_file(&out.join(REPORT_FILE), &to_json(&bundle))?;
    write_file(
        &out.join(DENSITY_FILE),
        &formats::density_matrix_to_csv(&rho),
    )?;
    let status = if !rho.physical {
        Status::Unphysical
    } else if !fit.converged {
        Status::NotConverged
    } else {
        Status::Success
    };
    Ok((status, bundle))
}

/// Files written by `report` and the sections that could not be drawn.
#[derive(Debug, Clone, Default)]
pub struct Rendered {
    pub plots: Vec<PathBuf>,
    pub sidecars: Vec<PathBuf>,
    pub summary: PathBuf,
    pub warnings: Vec<String>,
}

pub fn report(report_json: &Path, out: &Path) -> CliResult<(Status, Rendered)> {
    let bundle: ReportBundle = from_json(&read_file(report_json)?, report_json)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut rendered = Rendered::default();
    let keep = |files: Vec<PathBuf>, r: &mut Rendered| {
        let mut it = files.into_iter();
        r.plots.extend(it.next());
        r.sidecars.extend(it);
    };

    match &bundle.beating_data {
        Some(data) => keep(
            plot::beating(out, data, &bundle.beating_fit.params())?,
            &mut rendered,
        ),
        None => rendered
            .warnings
            .push("report has no beating data; skipping the beating plot".to_owned()),
    }
    keep(plot::branches(out, &bundle)?, &mut rendered);
    keep(plot::density(out, &bundle)?, &mut rendered);
    match &bundle.power_scan {
        Some(scan) => keep(plot::power_scan(out, scan)?, &mut rendered),
        None => rendered
            .warnings
            .push("report has no power scan; skipping the power-scan plot".to_owned()),
    }

    rendered.summary = out.join(SUMMARY_FILE);
    write_file(&rendered.summary, &summary(&bundle, &rendered.warnings))?;
    Ok((Status::Success, rendered))
}

fn pm(m: &Measured, digits: usize) -> String {
    match m.sigma {
        Some(s) => format!("{:.digits$} ± {:.digits$}", m.value, s),
        None => format!("{:.digits$} ± n/a", m.value),
    }
}

/// Plain-text table of the headline numbers.
pub fn summary(b: &ReportBundle, warnings: &[String]) -> String {
    let mut rows: Vec<(String, String)> = Vec::new();
    for (branch, c) in b.branch_counts.iter() {
        rows.push((
            format!("counts {}", branch.label()),
            format!("{} ± {:.1}", c.counts, c.sigma),
        ));
    }
    rows.push((
        "antibunching/bunching".to_owned(),
        match (b.ratio_db.value_db, b.ratio_db.sigma_db) {
            (Some(v), Some(s)) => format!("{v:.2} ± {s:.2} dB"),
            (Some(v), None) => format!("{v:.2} dB"),
            _ => "infinite (no bunching counts)".to_owned(),
        },
    ));
    rows.push(("balance p".to_owned(), pm(&b.balance, 4)));
    rows.push((
        "balance p (bootstrap)".to_owned(),
        format!("{:.4} ± {:.4}", b.bootstrap.p.mean, b.bootstrap.p.std),
    ));
    let f = &b.beating_fit;
    rows.push(("visibility V".to_owned(), pm(&f.params.visibility, 4)));
    rows.push(("phase (rad)".to_owned(), pm(&f.params.phase, 4)));
    rows.push(("amplitude A".to_owned(), pm(&f.params.amplitude, 2)));
    rows.push((
        "envelope Omega (rad/ps)".to_owned(),
        pm(&f.params.envelope_omega, 4),
    ));
    rows.push((
        "delta omega (rad/ps)".to_owned(),
        pm(&f.params.delta_omega, 4),
    ));
    rows.push((
        "fit".to_owned(),
        format!(
            "reduced chi2 {:.3}, {} iterations, {}",
            f.reduced_chi_square,
            f.iterations,
            if f.converged {
                "converged"
            } else {
                "NOT converged"
            }
        ),
    ));
    let d = &b.density_matrix;
    rows.push((
        "physicality margin".to_owned(),
        format!(
            "{:+.5} ({}{})",
            d.physicality_margin,
            if d.physical { "physical" } else { "UNPHYSICAL" },
            if d.projected { ", projected" } else { "" }
        ),
    ));
    rows.push(("purity".to_owned(), format!("{:.4}", d.purity)));
    rows.push((
        "fidelity".to_owned(),
        pm(
            &Measured {
                value: b.fidelity.value,
                sigma: b.fidelity.sigma,
            },
            4,
        ),
    ));
    if let Some(scan) = &b.power_scan {
        let fit = &scan.fit;
        rows.push((
            "power scan quadratic (Hz/mW^2)".to_owned(),
            format!("{:.3} ± {:.3}", fit.quadratic, fit.sigma_quadratic),
        ));
        rows.push((
            "power scan linear (Hz/mW)".to_owned(),
            format!("{:.3} ± {:.3}", fit.linear, fit.sigma_linear),
        ));
        rows.push((
            "power scan constant (Hz)".to_owned(),
            format!("{:.3} ± {:.3}", fit.constant, fit.sigma_constant),
        ));
    }
    let p = &b.provenance;
    rows.push((
        "provenance".to_owned(),
        format!(
            "{} {}, config {} ({}), seed {}",
            p.tool,
            p.tool_version,
            p.config_origin,
            &p.config_hash[..12.min(p.config_hash.len())],
            p.seed
        ),
    ));

    let width = rows
        .iter()
        .map(|(k, _)| k.chars().count())
        .max()
        .unwrap_or(0);
    let mut s = String::new();
    for (k, v) in rows {
        s.push_str(&format!("{k:<width$}  {v}\n"));
    }
    for w in warnings {
        s.push_str(&format!("warning: {w}\n"));
    }
    s
}

pub fn verify(seed: u64) -> (Status, Vec<verify::Criterion>) {
    let results = verify::run_all(seed);
    let status = if results.iter().all(|c| c.passed) {
        Status::Success
    } else {
        Status::CriteriaFailed
    };
    (status, results)
}
