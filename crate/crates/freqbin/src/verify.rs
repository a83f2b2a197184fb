//! Acceptance checks against the built-in operating point.
//!
//! Each check returns a [`Criterion`] rather than panicking so the CLI can
//! print every line before deciding on an exit code.

use std::f64::consts::{PI, TAU};
use std::fmt;

use freqbin_core::beating::{delay_grid, synthesize_beating_dataset, BeatingParams};
use freqbin_core::counting::{
    accidental_rate, antibunch_bunch_ratio_db, balance_parameter, car, car_point,
    simulate_branch_counts, simulate_power_scan, BranchCounts,
};
use freqbin_core::estimation::{
    fidelity_closed_form, fidelity_to_bell, fit_beating, fit_power_scan, initial_guess,
    physicality_margin, propagate_uncertainties, reconstruct_density, BeatingFit,
    PHYSICALITY_TOLERANCE,
};
use freqbin_core::replicate_rng;
use freqbin_core::statekit::{
    branch_probabilities, fpbs_decompose, frequency_difference, sagnac_state,
    solve_signal_wavelength, Branch, PerBranch, PhotonFrequencies,
};
use rand::Rng;

use crate::config::LoadedConfig;

pub const DEFAULT_SEED: u64 = 20240611;

#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

fn criterion(id: u8, name: &'static str, passed: bool, detail: String) -> Criterion {
    Criterion {
        id,
        name,
        passed,
        detail,
    }
}

fn failed(id: u8, name: &'static str, e: impl fmt::Display) -> Criterion {
    criterion(id, name, false, format!("error: {e}"))
}

/// Branch counts reported at the operating point.
pub fn reference_counts() -> BranchCounts {
    BranchCounts::from_counts(
        PerBranch {
            aa: 155,
            bb: 157,
            ab: 22427,
            ba: 28560,
        },
        10.0,
    )
}

pub fn fidelity_closed_form_check() -> Criterion {
    const NAME: &str = "fidelity of rho(0.56, 0.96, 0)";
    let rho = match reconstruct_density(0.56, 0.96, 0.0) {
        Ok(r) => r,
        Err(e) => return failed(1, NAME, e),
    };
    let contraction = fidelity_to_bell(&rho);
    let closed = fidelity_closed_form(0.96, 0.0);
    let passed = (contraction - 0.98).abs() <= 1e-4 && (closed - 0.98).abs() <= 1e-4;
    criterion(
        1,
        NAME,
        passed,
        format!("contraction {contraction:.6}, closed form {closed:.6}, target 0.9800 ± 1e-4"),
    )
}

pub fn ratio_db_check() -> Criterion {
    const NAME: &str = "antibunching/bunching ratio";
    match antibunch_bunch_ratio_db(&reference_counts()).map(|r| r.finite()) {
        Ok(Some(db)) => criterion(
            2,
            NAME,
            (db - 22.13).abs() <= 0.01,
            format!("{db:.4} dB, target 22.13 ± 0.01 dB"),
        ),
        Ok(None) => criterion(2, NAME, false, "infinite ratio".to_owned()),
        Err(e) => failed(2, NAME, e),
    }
}

/// A fit carrying the reported visibility and phase with their errors.
pub fn reference_fit() -> BeatingFit {
    BeatingFit {
        params: BeatingParams {
            amplitude: 1000.0,
            visibility: 0.96,
            envelope_omega: 0.4,
            delta_omega: 13.8,
            phase: 0.0,
        },
        uncertainties: BeatingParams {
            amplitude: 0.0,
            visibility: 0.061,
            envelope_omega: 0.0,
            delta_omega: 0.0,
            phase: 0.01,
        },
        chi_square: 0.0,
        reduced_chi_square: 1.0,
        degrees_of_freedom: 1,
        converged: true,
        iterations: 0,
    }
}

pub fn balance_check(seed: u64) -> Criterion {
    const NAME: &str = "balance parameter";
    let counts = reference_counts();
    let est = match balance_parameter(&counts) {
        Ok(e) => e,
        Err(e) => return failed(3, NAME, e),
    };
    let boot = match propagate_uncertainties(&counts, &reference_fit(), 2000, seed) {
        Ok(b) => b,
        Err(e) => return failed(3, NAME, e),
    };
    let passed = (est.p - 0.560).abs() <= 0.001 && boot.p.std <= 0.01;
    criterion(
        3,
        NAME,
        passed,
        format!(
            "p = {:.5} (target 0.560 ± 0.001), bootstrap sigma_p = {:.5} (≤ 0.01)",
            est.p, boot.p.std
        ),
    )
}

pub fn physicality_check() -> Criterion {
    const NAME: &str = "physicality margin";
    let margin = physicality_margin(0.56, 0.96);
    let n = 50;
    let mut disagreements = 0;
    for i in 0..n {
        for j in 0..n {
            let p = i as f64 / (n - 1) as f64;
            let v = j as f64 / (n - 1) as f64;
            let rho = match reconstruct_density(p, v, 0.3) {
                Ok(r) => r,
                Err(e) => return failed(4, NAME, e),
            };
            let psd = rho.eigenvalues()[0] >= -PHYSICALITY_TOLERANCE;
            let by_margin = physicality_margin(p, v) >= -PHYSICALITY_TOLERANCE;
            if psd != by_margin {
                disagreements += 1;
            }
        }
    }
    criterion(
        4,
        NAME,
        (margin - 0.01639).abs() <= 1e-5 && disagreements == 0,
        format!(
            "margin {margin:.6} (target 0.01639 ± 1e-5), eigenvalue/margin disagreements {disagreements} of {}",
            n * n
        ),
    )
}

pub fn car_check() -> Criterion {
    const NAME: &str = "CAR operating point";
    let c = match car(75360.0, 51.02) {
        Ok(c) => c,
        Err(e) => return failed(5, NAME, e),
    };
    let loaded = match LoadedConfig::paper_profile() {
        Ok(l) => l,
        Err(e) => return failed(5, NAME, e),
    };
    let cfg = &loaded.config;
    let point = match car_point(&cfg.source_model(), &cfg.coincidence(), cfg.pump.power_mw) {
        Ok(p) => p,
        Err(e) => return failed(5, NAME, e),
    };
    let recomputed = point.singles_signal * point.singles_idler * cfg.coincidence.window_ps * 1e-12;
    let via_fn = accidental_rate(
        point.singles_signal,
        point.singles_idler,
        cfg.coincidence.window_ps,
    );
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let consistent =
        rel(recomputed, point.accidental) <= 1e-9 && rel(via_fn, point.accidental) <= 1e-9;
    let profile_ok = rel(point.accidental, 51.02) <= 1e-9
        && (point.coincidence - 75360.0).abs() <= 1.0
        && (point.car - 1477.0).abs() <= 1.0;
    criterion(
        5,
        NAME,
        (c - 1477.0).abs() <= 1.0 && consistent && profile_ok,
        format!(
            "car(75360, 51.02) = {c:.2}; profile: accidental {:.6} Hz, coincidence {:.2} Hz, CAR {:.2}, S_s·S_i·300 ps relative mismatch {:.1e}",
            point.accidental,
            point.coincidence,
            point.car,
            rel(recomputed, point.accidental)
        ),
    )
}

/// Outcome of the visibility coverage study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coverage {
    pub replicates: usize,
    pub covered: usize,
    pub converged: usize,
    pub mean_sigma_v: f64,
    pub mean_v: f64,
}

pub fn beating_coverage(seed: u64, replicates: usize) -> freqbin_core::Result<Coverage> {
    let truth = BeatingParams {
        amplitude: 1000.0,
        visibility: 0.96,
        envelope_omega: 0.4,
        delta_omega: 13.8,
        phase: 0.0,
    };
    let delays = delay_grid(10.0, 0.02)?;
    let mut out = Coverage {
        replicates,
        covered: 0,
        converged: 0,
        mean_sigma_v: 0.0,
        mean_v: 0.0,
    };
    for k in 0..replicates as u64 {
        let data = synthesize_beating_dataset(&truth, &delays, 10.0, seed.wrapping_add(k))?;
        let fit = fit_beating(&data, &initial_guess(&data)?)?;
        let sv = fit.uncertainties.visibility;
        if fit.converged {
            out.converged += 1;
        }
        if (fit.params.visibility - truth.visibility).abs() <= 3.0 * sv {
            out.covered += 1;
        }
        out.mean_sigma_v += sv / replicates as f64;
        out.mean_v += fit.params.visibility / replicates as f64;
    }
    Ok(out)
}

pub fn beating_check(seed: u64) -> Criterion {
    const NAME: &str = "beating round trip";
    match beating_coverage(seed, 100) {
        Ok(c) => criterion(
            6,
            NAME,
            c.covered >= 95 && c.mean_sigma_v <= 0.061,
            format!(
                "{}/{} within 3 sigma (≥ 95), {} converged, mean V {:.5}, mean sigma_V {:.5} (≤ 0.061)",
                c.covered, c.replicates, c.converged, c.mean_v, c.mean_sigma_v
            ),
        ),
        Err(e) => failed(6, NAME, e),
    }
}

pub fn branch_law_check(seed: u64) -> Criterion {
    const NAME: &str = "branch-probability law";
    let mut rng = replicate_rng(seed, 7);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let phi0 = rng.random_range(-TAU..TAU);
        let probs = match sagnac_state(phi0)
            .and_then(|s| fpbs_decompose(&s))
            .and_then(|s| branch_probabilities(&s))
        {
            Ok(p) => p,
            Err(e) => return failed(7, NAME, e),
        };
        let half = phi0 / 2.0;
        worst = worst
            .max((probs.antibunching() - half.sin().powi(2)).abs())
            .max((probs.bunching() - half.cos().powi(2)).abs());
    }
    let extreme = |phi0: f64| {
        sagnac_state(phi0)
            .and_then(|s| fpbs_decompose(&s))
            .and_then(|s| branch_probabilities(&s))
            .map(|p| (p.bunching(), p.antibunching()))
    };
    let pure = matches!(extreme(PI), Ok((b, a)) if b < 1e-12 && (a - 1.0).abs() < 1e-12)
        && matches!(extreme(0.0), Ok((b, a)) if a < 1e-12 && (b - 1.0).abs() < 1e-12);
    criterion(
        7,
        NAME,
        worst <= 1e-12 && pure,
        format!("max deviation {worst:.1e} over 1000 phases (≤ 1e-12), pure limits {pure}"),
    )
}

pub fn poisson_check(seed: u64) -> Criterion {
    const NAME: &str = "Poisson branch statistics";
    let loaded = match LoadedConfig::paper_profile() {
        Ok(l) => l,
        Err(e) => return failed(8, NAME, e),
    };
    let cfg = &loaded.config;
    let probs = match cfg.branch_probabilities() {
        Ok(p) => p,
        Err(e) => return failed(8, NAME, e),
    };
    let n = 10_000usize;
    let mut sum = PerBranch::splat(0.0f64);
    let mut sum_sq = PerBranch::splat(0.0f64);
    for k in 0..n as u64 {
        let c = match simulate_branch_counts(
            &probs,
            cfg.branches.total_pairs,
            &cfg.port_efficiencies(),
            &cfg.floors(),
            cfg.coincidence.integration_time_s,
            seed.wrapping_add(k),
        ) {
            Ok(c) => c,
            Err(e) => return failed(8, NAME, e),
        };
        for b in Branch::ALL {
            let x = c.counts[b] as f64;
            sum[b] += x;
            sum_sq[b] += x * x;
        }
    }
    let mut passed = true;
    let mut parts = Vec::new();
    for b in Branch::ALL {
        let mean = sum[b] / n as f64;
        let var = (sum_sq[b] - n as f64 * mean * mean) / (n - 1) as f64;
        let ratio = var / mean;
        passed &= mean >= 100.0 && (0.9..=1.1).contains(&ratio);
        parts.push(format!("{} mean {mean:.1} var/mean {ratio:.3}", b.label()));
    }
    criterion(
        8,
        NAME,
        passed,
        format!("{} ({n} replicates, ratio in [0.9, 1.1])", parts.join(", ")),
    )
}

pub fn power_scan_check(seed: u64) -> Criterion {
    const NAME: &str = "power-scan round trip";
    let loaded = match LoadedConfig::paper_profile() {
        Ok(l) => l,
        Err(e) => return failed(9, NAME, e),
    };
    let cfg = &loaded.config;
    let model = cfg.source_model();
    let arm = cfg.power_scan.arm.into();
    let truth = [
        model.pair_coefficient * model.efficiency(arm),
        model.noise_coefficient,
        model.dark_rate,
    ];
    let scans = 20;
    let mut within = 0;
    let mut worst_pull: f64 = 0.0;
    let mut additivity: f64 = 0.0;
    for k in 0..scans {
        let points = match simulate_power_scan(
            &model,
            &cfg.power_scan.powers_mw,
            cfg.power_scan.integration_time_s,
            arm,
            seed.wrapping_add(k),
        )
        .and_then(|p| fit_power_scan(&p).map(|f| (p, f)))
        {
            Ok(v) => v,
            Err(e) => return failed(9, NAME, e),
        };
        let (pts, fit) = points;
        let est = [fit.quadratic, fit.linear, fit.constant];
        let sig = [fit.sigma_quadratic, fit.sigma_linear, fit.sigma_constant];
        let pulls: Vec<f64> = (0..3).map(|i| (est[i] - truth[i]).abs() / sig[i]).collect();
        worst_pull = pulls.iter().copied().fold(worst_pull, f64::max);
        if pulls.iter().all(|&p| p <= 3.0) {
            within += 1;
        }
        for p in &pts {
            let d = fit.decompose(p.power_mw);
            additivity = additivity
                .max((d.pair + d.noise + d.constant - d.total).abs())
                .max((d.total - fit.value(p.power_mw)).abs());
        }
    }
    criterion(
        9,
        NAME,
        within == scans && additivity == 0.0,
        format!(
            "{within}/{scans} scans with every coefficient within 3 sigma, largest pull {worst_pull:.2}, decomposition residual {additivity:e}"
        ),
    )
}

pub fn energy_check() -> Criterion {
    const NAME: &str = "energy conservation";
    let signal = match solve_signal_wavelength(1540.56, 1531.90) {
        Ok(s) => s,
        Err(e) => return failed(10, NAME, e),
    };
    let lhs = 2.0 / 1540.56;
    let residual = ((lhs - (1.0 / signal + 1.0 / 1531.90)) / lhs).abs();
    let dw = match PhotonFrequencies::new(1540.56, signal, 1531.90) {
        Ok(f) => frequency_difference(&f),
        Err(e) => return failed(10, NAME, e),
    };
    criterion(
        10,
        NAME,
        (signal - 1549.32).abs() <= 0.01 && residual <= 1e-9 && ((dw - 13.8) / 13.8).abs() <= 0.01,
        format!(
            "signal {signal:.4} nm (≈ 1549.32), relative residual {residual:.1e}, delta_omega {dw:.4} rad/ps (13.8 ± 1%)"
        ),
    )
}

/// Runs every criterion in order.
pub fn run_all(seed: u64) -> Vec<Criterion> {
    vec![
        fidelity_closed_form_check(),
        ratio_db_check(),
        balance_check(seed),
        physicality_check(),
        car_check(),
        beating_check(seed),
        branch_law_check(seed),
        poisson_check(seed),
        power_scan_check(seed),
        energy_check(),
    ]
}
