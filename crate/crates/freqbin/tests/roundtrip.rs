//! serialize → parse is the identity for every dataset and report type.

use freqbin::config::{ExperimentConfig, LoadedConfig};
use freqbin::formats::{self, memory_path};
use freqbin::report::{
    BeatingRecord, CountRecord, DensityRecord, FidelityRecord, FitRecord, FitReport, Measured,
    PowerScanRecord, Provenance, RatioRecord, ReportBundle,
};
use freqbin_core::beating::{BeatingDataset, BeatingParams};
use freqbin_core::counting::{BranchCounts, PowerScanPoint};
use freqbin_core::estimation::{
    reconstruct_density, BeatingFit, BootstrapSummary, Estimate, PolynomialFit,
};
use freqbin_core::statekit::PerBranch;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6..1e6f64,
        (-300i32..300).prop_map(|e| 10f64.powi(e)),
        Just(0.0),
        Just(0.1 + 0.2),
    ]
}

fn non_negative() -> impl Strategy<Value = f64> {
    finite().prop_map(f64::abs)
}

fn beating_dataset() -> impl Strategy<Value = BeatingDataset> {
    (16usize..60, -50.0..0.0f64, 1e-3..1.0f64).prop_flat_map(|(n, start, step)| {
        (
            prop::collection::vec(non_negative(), n),
            prop::collection::vec(non_negative(), n),
            1e-3..100.0f64,
        )
            .prop_map(move |(counts, sigmas, t)| {
                let delays = (0..n).map(|k| start + k as f64 * step).collect();
                BeatingDataset::new(delays, counts, sigmas, t).unwrap()
            })
    })
}

fn branch_counts() -> impl Strategy<Value = BranchCounts> {
    (
        prop::array::uniform4(any::<u64>()),
        prop::array::uniform4(non_negative()),
        1e-3..100.0f64,
    )
        .prop_map(|(c, s, t)| BranchCounts {
            counts: PerBranch {
                aa: c[0],
                bb: c[1],
                ab: c[2],
                ba: c[3],
            },
            sigmas: PerBranch {
                aa: s[0],
                bb: s[1],
                ab: s[2],
                ba: s[3],
            },
            integration_time_s: t,
        })
}

fn power_points() -> impl Strategy<Value = Vec<PowerScanPoint>> {
    prop::collection::vec(
        (non_negative(), non_negative(), non_negative()).prop_map(|(p, r, s)| PowerScanPoint {
            power_mw: p,
            rate_hz: r,
            sigma_hz: s,
        }),
        4..30,
    )
}

fn measured() -> impl Strategy<Value = Measured> {
    (finite(), prop::option::of(non_negative()))
        .prop_map(|(value, sigma)| Measured { value, sigma })
}

fn fit_record() -> impl Strategy<Value = FitRecord> {
    (
        prop::array::uniform5(measured()),
        non_negative(),
        non_negative(),
        0usize..1000,
        any::<bool>(),
        0usize..1000,
    )
        .prop_map(|(m, chi, red, dof, converged, iterations)| FitRecord {
            params: freqbin::report::ParamsRecord {
                amplitude: m[0],
                visibility: m[1],
                envelope_omega: m[2],
                delta_omega: m[3],
                phase: m[4],
            },
            chi_square: chi,
            reduced_chi_square: red,
            degrees_of_freedom: dof,
            converged,
            iterations,
        })
}

fn provenance() -> Provenance {
    Provenance::new(&LoadedConfig::paper_profile().unwrap(), 42)
        .with_input(std::path::Path::new("dir/beating.csv"), b"abc")
}

fn estimate() -> impl Strategy<Value = Estimate> {
    (finite(), non_negative()).prop_map(|(mean, std)| Estimate { mean, std })
}

fn report_bundle() -> impl Strategy<Value = ReportBundle> {
    (
        branch_counts(),
        fit_record(),
        prop::option::of(beating_dataset()),
        (0.0..=1.0f64, 0.0..1.2f64, -3.0..3.0f64),
        prop::array::uniform4(estimate()),
        prop::option::of(power_points()),
        (measured(), prop::option::of(finite()), any::<bool>()),
    )
        .prop_map(
            |(counts, fit, data, (p, v, phi), est, scan, (balance, db, inf))| {
                let rho = reconstruct_density(p, v, phi).unwrap();
                ReportBundle {
                    provenance: provenance(),
                    integration_time_s: counts.integration_time_s,
                    branch_counts: counts.counts.map(|b, n| CountRecord {
                        counts: n,
                        sigma: counts.sigmas[b],
                    }),
                    ratio_db: RatioRecord {
                        value_db: db,
                        sigma_db: db.map(f64::abs),
                        infinite: inf,
                    },
                    balance,
                    beating_fit: fit,
                    beating_data: data.as_ref().map(BeatingRecord::from),
                    density_matrix: DensityRecord::new(&rho, v, 0.25),
                    fidelity: FidelityRecord {
                        value: 0.5,
                        sigma: Some(0.01),
                        closed_form: 0.5,
                    },
                    bootstrap: BootstrapSummary {
                        p: est[0],
                        visibility: est[1],
                        phase: est[2],
                        fidelity: est[3],
                        replicates: 100,
                        skipped: 0,
                    },
                    power_scan: scan.map(|points| PowerScanRecord {
                        points,
                        fit: PolynomialFit {
                            quadratic: 1.0,
                            linear: 2.0,
                            constant: 3.0,
                            sigma_quadratic: 0.1,
                            sigma_linear: 0.2,
                            sigma_constant: 0.3,
                            chi_square: 4.0,
                            reduced_chi_square: 1.0 / 3.0,
                        },
                    }),
                }
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn beating_csv_round_trip(data in beating_dataset()) {
        let text = formats::beating_to_csv(&data);
        let back = formats::beating_from_csv(&text, &memory_path("b"), data.integration_time_per_point()).unwrap();
        prop_assert_eq!(back, data);
    }

    #[test]
    fn branch_csv_round_trip(counts in branch_counts()) {
        let text = formats::branch_counts_to_csv(&counts);
        let back = formats::branch_counts_from_csv(&text, &memory_path("c"), counts.integration_time_s).unwrap();
        prop_assert_eq!(back, counts);
    }

    #[test]
    fn power_scan_csv_round_trip(points in power_points()) {
        let text = formats::power_scan_to_csv(&points);
        prop_assert_eq!(formats::power_scan_from_csv(&text, &memory_path("p")).unwrap(), points);
    }

    #[test]
    fn density_csv_round_trip(re in prop::array::uniform4(prop::array::uniform4(finite())),
                              im in prop::array::uniform4(prop::array::uniform4(finite()))) {
        let text = formats::density_to_csv(&re, &im);
        prop_assert_eq!(formats::density_from_csv(&text, &memory_path("d")).unwrap(), (re, im));
    }

    #[test]
    fn fit_report_json_round_trip(fit in fit_record(), data in beating_dataset(), acc in prop::option::of(non_negative())) {
        let report = FitReport {
            provenance: provenance(),
            fit,
            accidentals_per_point: acc,
            data: BeatingRecord::from(&data),
        };
        let text = freqbin::report::to_json(&report);
        let back: FitReport = freqbin::report::from_json(&text, &memory_path("f")).unwrap();
        prop_assert_eq!(back, report);
    }

    #[test]
    fn report_bundle_json_round_trip(bundle in report_bundle()) {
        let text = freqbin::report::to_json(&bundle);
        let back: ReportBundle = freqbin::report::from_json(&text, &memory_path("r")).unwrap();
        prop_assert_eq!(back, bundle);
    }

    #[test]
    fn numbers_keep_twelve_significant_digits(x in finite()) {
        let text = formats::write_rows(&["x"], [vec![x.to_string()]]);
        let field = text.lines().nth(1).unwrap();
        prop_assert!(!field.contains(',') || field.starts_with('"'));
        prop_assert_eq!(field.parse::<f64>().unwrap(), x);
    }
}

#[test]
fn config_round_trip_through_toml() {
    let cfg = LoadedConfig::paper_profile().unwrap().config;
    let text = toml::to_string(&cfg).unwrap();
    assert_eq!(ExperimentConfig::parse(&text, "round-trip").unwrap(), cfg);
}

#[test]
fn fit_record_round_trips_through_core_fit() {
    let fit = BeatingFit {
        params: BeatingParams {
            amplitude: 1000.0,
            visibility: 0.96,
            envelope_omega: 0.4,
            delta_omega: 13.8,
            phase: 0.0,
        },
        uncertainties: BeatingParams {
            amplitude: 1.0,
            visibility: f64::NAN,
            envelope_omega: 0.1,
            delta_omega: 0.01,
            phase: 0.01,
        },
        chi_square: 1.0,
        reduced_chi_square: 1.0,
        degrees_of_freedom: 3,
        converged: false,
        iterations: 1000,
    };
    let back = FitRecord::from(&fit).to_fit();
    assert_eq!(back.params, fit.params);
    assert!(back.uncertainties.visibility.is_nan());
    assert_eq!(back.uncertainties.phase, 0.01);
}
