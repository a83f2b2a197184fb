use std::f64::consts::PI;

use freqbin_core::counting::{
    antibunch_bunch_ratio_db, balance_parameter, expected_branch_counts, simulate_branch_counts,
    BranchCounts, PortEfficiencies,
};
use freqbin_core::statekit::{
    branch_probabilities, fpbs_decompose, sagnac_state, Branch, PerBranch,
};
use proptest::prelude::*;

#[test]
fn branch_counts_follow_poisson_statistics() {
    // Mean ≥ 100 in every branch: 0.3 rad off pure antibunching plus a floor.
    let probs =
        branch_probabilities(&fpbs_decompose(&sagnac_state(PI - 0.3).unwrap()).unwrap()).unwrap();
    let eff = PortEfficiencies {
        d: 0.9,
        e: 0.8,
        f: 0.85,
        g: 0.7,
    };
    let floor = PerBranch::splat(100.0);
    let means = expected_branch_counts(&probs, 20_000.0, &eff, &floor).unwrap();

    let replicates = 10_000;
    let mut sum = PerBranch::splat(0.0_f64);
    let mut sum_sq = PerBranch::splat(0.0_f64);
    for seed in 0..replicates {
        let c = simulate_branch_counts(&probs, 20_000.0, &eff, &floor, 10.0, seed).unwrap();
        for b in Branch::ALL {
            let n = c.counts[b] as f64;
            sum[b] += n;
            sum_sq[b] += n * n;
        }
    }
    let r = replicates as f64;
    for b in Branch::ALL {
        let mean = sum[b] / r;
        let var = (sum_sq[b] - r * mean * mean) / (r - 1.0);
        let se = (means[b] / r).sqrt();
        assert!(
            (mean - means[b]).abs() < 3.0 * se,
            "{b:?}: mean {mean} vs {}",
            means[b]
        );
        let ratio = var / mean;
        assert!((0.9..=1.1).contains(&ratio), "{b:?}: var/mean {ratio}");
    }
}

fn counts(aa: u64, bb: u64, ab: u64, ba: u64) -> BranchCounts {
    BranchCounts::from_counts(PerBranch { aa, bb, ab, ba }, 10.0)
}

proptest! {
    #[test]
    fn ratio_db_is_scale_invariant(
        aa in 0u64..1000, bb in 1u64..1000, ab in 0u64..100_000, ba in 0u64..100_000, k in 2u64..50,
    ) {
        let a = antibunch_bunch_ratio_db(&counts(aa, bb, ab, ba)).unwrap();
        let b = antibunch_bunch_ratio_db(&counts(k * aa, k * bb, k * ab, k * ba)).unwrap();
        match (a.finite(), b.finite()) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-9),
            _ => prop_assert_eq!(a, b),
        }
    }

    #[test]
    fn balance_is_scale_invariant_and_bounded(ab in 0u64..100_000, ba in 0u64..100_000, k in 2u64..50) {
        prop_assume!(ab + ba > 0);
        let a = balance_parameter(&counts(0, 0, ab, ba)).unwrap();
        let b = balance_parameter(&counts(0, 0, k * ab, k * ba)).unwrap();
        prop_assert!((0.0..=1.0).contains(&a.p));
        prop_assert!((a.p - b.p).abs() < 1e-12);
    }
}
