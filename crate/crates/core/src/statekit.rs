//! Two-photon state algebra from the pump polarization, through the Sagnac
//! loop, to the four coincidence branches behind the fiber PBS.
//!
//! Conventions:
//! - the H (counter-clockwise) amplitude is real and positive, the relative
//!   phase φ₀ rides on the V (clockwise) amplitude;
//! - φ₀ = 2φ_p where φ_p is the relative phase of the pump's V and H
//!   components;
//! - angles are radians and are only wrapped by [`pump_phase`];
//! - wavelengths are vacuum wavelengths in nm, angular frequencies in rad/ps.

use core::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use core::ops::{Index, IndexMut};

use num_complex::Complex64 as C64;

use crate::error::{ensure_finite, Error, Result};

/// Speed of light in nm/ps.
pub const SPEED_OF_LIGHT_NM_PER_PS: f64 = 299_792.458;

const NORM_TOLERANCE: f64 = 1e-12;
const ENERGY_TOLERANCE: f64 = 1e-9;

/// Wraps an angle into `[-π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let wrapped = angle - TAU * ((angle + PI) / TAU).floor();
    // floor puts +π at -π; keep the representation closest to the input.
    if wrapped == -PI && angle > 0.0 {
        PI
    } else {
        wrapped
    }
}

/// Normalized Jones vector of the pump over the PBS axes H and V.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpPolarization {
    amplitude_h: C64,
    amplitude_v: C64,
}

impl PumpPolarization {
    pub fn new(amplitude_h: C64, amplitude_v: C64) -> Result<Self> {
        let norm = amplitude_h.norm_sqr() + amplitude_v.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::validation(
                "pump polarization",
                alloc::format!("|h|² + |v|² = {norm}, expected 1"),
            ));
        }
        Ok(Self {
            amplitude_h,
            amplitude_v,
        })
    }

    /// Equal-power elliptical polarization with relative phase `phi_p`.
    pub fn with_relative_phase(phi_p: f64) -> Result<Self> {
        ensure_finite("pump phase", phi_p)?;
        Self::new(
            C64::new(FRAC_1_SQRT_2, 0.0),
            C64::from_polar(FRAC_1_SQRT_2, phi_p),
        )
    }

    pub fn amplitude_h(&self) -> C64 {
        self.amplitude_h
    }

    pub fn amplitude_v(&self) -> C64 {
        self.amplitude_v
    }
}

/// Relative pump phase φ_p = arg(v) − arg(h), wrapped to `[-π, π]`.
pub fn pump_phase(pol: &PumpPolarization) -> f64 {
    wrap_angle(pol.amplitude_v.arg() - pol.amplitude_h.arg())
}

/// Phase φ₀ = 2φ_p imprinted between the two Sagnac directions.
pub fn sagnac_phase(pol: &PumpPolarization) -> f64 {
    2.0 * pump_phase(pol)
}

/// Which pair of modes a [`TwoPhotonState`] is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Basis {
    /// Pairs born in the H (CCW) and V (CW) directions of the loop.
    HV,
    /// Spatial bunching |ψ⟩_B and antibunching |ψ⟩_AB path states.
    BunchAntibunch,
    /// The two antibunching branches |ω_s⟩_a|ω_i⟩_b and |ω_s⟩_b|ω_i⟩_a.
    /// Not normalized: the norm is the antibunching probability.
    PathBranches,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonState {
    pub amp_first: C64,
    pub amp_second: C64,
    pub basis: Basis,
}

impl TwoPhotonState {
    pub fn norm_sqr(&self) -> f64 {
        self.amp_first.norm_sqr() + self.amp_second.norm_sqr()
    }

    /// Multiplies both amplitudes by `e^{iθ}`.
    pub fn with_global_phase(self, theta: f64) -> Self {
        let g = C64::from_polar(1.0, theta);
        Self {
            amp_first: self.amp_first * g,
            amp_second: self.amp_second * g,
            basis: self.basis,
        }
    }

    fn expect_basis(&self, expected: Basis) -> Result<()> {
        if self.basis == expected {
            Ok(())
        } else {
            Err(Error::WrongBasis {
                expected,
                found: self.basis,
            })
        }
    }

    fn expect_normalized(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::validation(
                "two-photon state",
                alloc::format!("norm² = {n}, expected 1"),
            ));
        }
        Ok(())
    }
}

/// State leaving the Sagnac PBS: (|H⟩ + e^{iφ₀}|V⟩)/√2.
pub fn sagnac_state(phi0: f64) -> Result<TwoPhotonState> {
    ensure_finite("phi0", phi0)?;
    Ok(TwoPhotonState {
        amp_first: C64::new(FRAC_1_SQRT_2, 0.0),
        amp_second: C64::from_polar(FRAC_1_SQRT_2, phi0),
        basis: Basis::HV,
    })
}

/// Rewrites an HV state in the bunching/antibunching basis behind the fiber
/// PBS: amplitudes `(h + v)/√2` and `(h − v)/√2`, which for the Sagnac state
/// are `(1 ± e^{iφ₀})/2`.
pub fn fpbs_decompose(state: &TwoPhotonState) -> Result<TwoPhotonState> {
    state.expect_basis(Basis::HV)?;
    state.expect_normalized()?;
    Ok(TwoPhotonState {
        amp_first: (state.amp_first + state.amp_second) * FRAC_1_SQRT_2,
        amp_second: (state.amp_first - state.amp_second) * FRAC_1_SQRT_2,
        basis: Basis::BunchAntibunch,
    })
}

/// Amplitudes of the two antibunching branches (ab, ba); each path state
/// splits evenly over its two outcomes.
pub fn antibunching_branches(state: &TwoPhotonState) -> Result<TwoPhotonState> {
    state.expect_basis(Basis::BunchAntibunch)?;
    let a = state.amp_second * FRAC_1_SQRT_2;
    Ok(TwoPhotonState {
        amp_first: a,
        amp_second: a,
        basis: Basis::PathBranches,
    })
}

/// One of the four coincidence outcomes behind the fiber PBS, named by the
/// output ports of the signal and idler photons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Branch {
    Aa,
    Bb,
    Ab,
    Ba,
}

impl Branch {
    pub const ALL: [Branch; 4] = [Branch::Aa, Branch::Bb, Branch::Ab, Branch::Ba];

    pub fn label(self) -> &'static str {
        match self {
            Branch::Aa => "aa",
            Branch::Bb => "bb",
            Branch::Ab => "ab",
            Branch::Ba => "ba",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Branch::ALL.into_iter().find(|b| b.label() == label)
    }

    pub fn is_bunching(self) -> bool {
        matches!(self, Branch::Aa | Branch::Bb)
    }
}

/// One value per coincidence branch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PerBranch<T> {
    pub aa: T,
    pub bb: T,
    pub ab: T,
    pub ba: T,
}

impl<T: Copy> PerBranch<T> {
    pub fn splat(v: T) -> Self {
        Self {
            aa: v,
            bb: v,
            ab: v,
            ba: v,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(Branch, T) -> U) -> PerBranch<U> {
        PerBranch {
            aa: f(Branch::Aa, self.aa),
            bb: f(Branch::Bb, self.bb),
            ab: f(Branch::Ab, self.ab),
            ba: f(Branch::Ba, self.ba),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Branch, T)> + '_ {
        Branch::ALL.into_iter().map(move |b| (b, self[b]))
    }
}

impl<T> Index<Branch> for PerBranch<T> {
    type Output = T;

    fn index(&self, b: Branch) -> &T {
        match b {
            Branch::Aa => &self.aa,
            Branch::Bb => &self.bb,
            Branch::Ab => &self.ab,
            Branch::Ba => &self.ba,
        }
    }
}

impl<T> IndexMut<Branch> for PerBranch<T> {
    fn index_mut(&mut self, b: Branch) -> &mut T {
        match b {
            Branch::Aa => &mut self.aa,
            Branch::Bb => &mut self.bb,
            Branch::Ab => &mut self.ab,
            Branch::Ba => &mut self.ba,
        }
    }
}

/// Outcome probabilities of the ideal (lossless, symmetric) source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchProbabilities(PerBranch<f64>);

impl BranchProbabilities {
    /// Builds the symmetric distribution from the bunching probability.
    pub fn from_bunching(p_bunch: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_bunch) {
            return Err(Error::validation(
                "bunching probability",
                alloc::format!("{p_bunch} is outside [0, 1]"),
            ));
        }
        let half_b = p_bunch / 2.0;
        let half_ab = (1.0 - p_bunch) / 2.0;
        Ok(Self(PerBranch {
            aa: half_b,
            bb: half_b,
            ab: half_ab,
            ba: half_ab,
        }))
    }

    pub fn get(&self, b: Branch) -> f64 {
        self.0[b]
    }

    pub fn as_per_branch(&self) -> &PerBranch<f64> {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.aa + self.0.bb + self.0.ab + self.0.ba
    }

    pub fn bunching(&self) -> f64 {
        self.0.aa + self.0.bb
    }

    pub fn antibunching(&self) -> f64 {
        self.0.ab + self.0.ba
    }
}

/// Splits each path state 50/50 over its two outcomes.
pub fn branch_probabilities(state: &TwoPhotonState) -> Result<BranchProbabilities> {
    state.expect_basis(Basis::BunchAntibunch)?;
    state.expect_normalized()?;
    let pb = state.amp_first.norm_sqr();
    let pab = state.amp_second.norm_sqr();
    // Renormalize so the four entries sum to one to rounding.
    BranchProbabilities::from_bunching(pb / (pb + pab))
}

/// Pump, signal and idler wavelengths tied by cascaded SHG/SPDC energy
/// conservation: 2/λ_pump = 1/λ_signal + 1/λ_idler.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhotonFrequencies {
    lambda_pump: f64,
    lambda_signal: f64,
    lambda_idler: f64,
}

impl PhotonFrequencies {
    pub fn new(lambda_pump: f64, lambda_signal: f64, lambda_idler: f64) -> Result<Self> {
        for (field, v) in [
            ("lambda_pump", lambda_pump),
            ("lambda_signal", lambda_signal),
            ("lambda_idler", lambda_idler),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(
                    field,
                    alloc::format!("{v} nm is not positive"),
                ));
            }
        }
        let lhs = 2.0 / lambda_pump;
        let rhs = 1.0 / lambda_signal + 1.0 / lambda_idler;
        if ((lhs - rhs) / lhs).abs() > ENERGY_TOLERANCE {
            return Err(Error::validation(
                "photon frequencies",
                alloc::format!("energy not conserved: 2/λp = {lhs}, 1/λs + 1/λi = {rhs}"),
            ));
        }
        Ok(Self {
            lambda_pump,
            lambda_signal,
            lambda_idler,
        })
    }

    /// Completes the triple from the pump and idler wavelengths.
    pub fn from_pump_and_idler(lambda_pump: f64, lambda_idler: f64) -> Result<Self> {
        let lambda_signal = solve_signal_wavelength(lambda_pump, lambda_idler)?;
        Self::new(lambda_pump, lambda_signal, lambda_idler)
    }

    /// Inverse of [`frequency_difference`]: recovers signal and idler from
    /// the pump wavelength and Δω.
    pub fn from_difference(lambda_pump: f64, delta_omega: f64) -> Result<Self> {
        ensure_finite("delta_omega", delta_omega)?;
        if !(lambda_pump > 0.0) {
            return Err(Error::validation("lambda_pump", "must be positive"));
        }
        let sum = 2.0 / lambda_pump;
        let diff = delta_omega / (TAU * SPEED_OF_LIGHT_NM_PER_PS);
        let inv_idler = (sum + diff) / 2.0;
        let inv_signal = (sum - diff) / 2.0;
        if !(inv_idler > 0.0 && inv_signal > 0.0) {
            return Err(Error::validation(
                "delta_omega",
                alloc::format!("{delta_omega} rad/ps exceeds twice the pump frequency"),
            ));
        }
        Self::new(lambda_pump, 1.0 / inv_signal, 1.0 / inv_idler)
    }

    pub fn lambda_pump(&self) -> f64 {
        self.lambda_pump
    }

    pub fn lambda_signal(&self) -> f64 {
        self.lambda_signal
    }

    pub fn lambda_idler(&self) -> f64 {
        self.lambda_idler
    }

    /// Swaps the roles of signal and idler.
    pub fn swapped(&self) -> Self {
        Self {
            lambda_pump: self.lambda_pump,
            lambda_signal: self.lambda_idler,
            lambda_idler: self.lambda_signal,
        }
    }
}

/// λ_signal = 1 / (2/λ_pump − 1/λ_idler).
pub fn solve_signal_wavelength(lambda_pump: f64, lambda_idler: f64) -> Result<f64> {
    if !(lambda_pump > 0.0 && lambda_idler > 0.0)
        || !lambda_pump.is_finite()
        || !lambda_idler.is_finite()
    {
        return Err(Error::InfeasibleWavelength {
            pump_nm: lambda_pump,
            idler_nm: lambda_idler,
        });
    }
    let inv = 2.0 / lambda_pump - 1.0 / lambda_idler;
    if !(inv > 0.0) {
        return Err(Error::InfeasibleWavelength {
            pump_nm: lambda_pump,
            idler_nm: lambda_idler,
        });
    }
    Ok(1.0 / inv)
}

/// Δω = 2πc(1/λ_idler − 1/λ_signal) in rad/ps; positive when the idler is
/// the shorter wavelength.
pub fn frequency_difference(freqs: &PhotonFrequencies) -> f64 {
    TAU * SPEED_OF_LIGHT_NM_PER_PS * (1.0 / freqs.lambda_idler - 1.0 / freqs.lambda_signal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::FRAC_PI_2;

    #[test]
    fn pump_phase_examples() {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let in_phase = PumpPolarization::new(h, h).unwrap();
        assert_eq!(pump_phase(&in_phase), 0.0);

        let quarter = PumpPolarization::new(h, C64::new(0.0, FRAC_1_SQRT_2)).unwrap();
        assert_relative_eq!(pump_phase(&quarter), FRAC_PI_2, epsilon = 1e-15);

        // Oracle: arg of v·conj(h) computed from components.
        let v = C64::from_polar(FRAC_1_SQRT_2, 2.3);
        let pol = PumpPolarization::new(h, v).unwrap();
        let prod = v * h.conj();
        let oracle = prod.im.atan2(prod.re);
        assert_relative_eq!(pump_phase(&pol), oracle, epsilon = 1e-15);
        assert_relative_eq!(pump_phase(&pol), 2.3, epsilon = 1e-14);
    }

    #[test]
    fn pump_phase_wraps_and_rejects_unnormalized() {
        let pol = PumpPolarization::new(
            C64::from_polar(FRAC_1_SQRT_2, -3.0),
            C64::from_polar(FRAC_1_SQRT_2, 3.0),
        )
        .unwrap();
        assert_relative_eq!(pump_phase(&pol), 6.0 - TAU, epsilon = 1e-14);

        let err = PumpPolarization::new(C64::new(1.0, 0.0), C64::new(1.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
    }

    #[test]
    fn wrap_angle_keeps_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), -PI);
        assert_relative_eq!(wrap_angle(3.0 * PI / 2.0), -FRAC_PI_2, epsilon = 1e-15);
        assert_relative_eq!(wrap_angle(7.0 * TAU + 0.25), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn sagnac_state_examples() {
        let s = sagnac_state(0.0).unwrap();
        assert_eq!(s.amp_second, C64::new(FRAC_1_SQRT_2, 0.0));
        assert_eq!(s.basis, Basis::HV);

        let s = sagnac_state(PI).unwrap();
        assert_relative_eq!(s.amp_second.re, -FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_relative_eq!(s.amp_second.im, 0.0, epsilon = 1e-15);

        // Oracle: e^{iπ/3}/√2 = (cos π/3 + i sin π/3)/√2 = (0.35355, 0.61237).
        let s = sagnac_state(PI / 3.0).unwrap();
        assert_relative_eq!(s.amp_first.re, 0.707_106_781_186_547_5, epsilon = 1e-15);
        assert_relative_eq!(s.amp_second.re, 0.353_553_390_593_273_8, epsilon = 1e-15);
        assert_relative_eq!(s.amp_second.im, 0.612_372_435_695_794_5, epsilon = 1e-15);

        assert!(sagnac_state(f64::NAN).is_err());
    }

    #[test]
    fn fpbs_decompose_examples() {
        let d = fpbs_decompose(&sagnac_state(0.0).unwrap()).unwrap();
        assert_relative_eq!(d.amp_first.norm(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(d.amp_second.norm(), 0.0, epsilon = 1e-15);

        let d = fpbs_decompose(&sagnac_state(PI).unwrap()).unwrap();
        assert_relative_eq!(d.amp_first.norm(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(d.amp_second.norm(), 1.0, epsilon = 1e-15);

        let d = fpbs_decompose(&sagnac_state(FRAC_PI_2).unwrap()).unwrap();
        assert_relative_eq!(d.amp_first.norm(), FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_relative_eq!(d.amp_second.norm(), FRAC_1_SQRT_2, epsilon = 1e-15);
        // (1 + i)/2 literally
        assert_relative_eq!(d.amp_first.re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(d.amp_first.im, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn fpbs_decompose_rejects_wrong_basis() {
        let d = fpbs_decompose(&sagnac_state(0.3).unwrap()).unwrap();
        assert_eq!(
            fpbs_decompose(&d).unwrap_err(),
            Error::WrongBasis {
                expected: Basis::HV,
                found: Basis::BunchAntibunch
            }
        );
        let s = sagnac_state(0.3).unwrap();
        assert!(branch_probabilities(&s).is_err());
    }

    #[test]
    fn branch_probability_examples() {
        let probs = |phi0: f64| {
            branch_probabilities(&fpbs_decompose(&sagnac_state(phi0).unwrap()).unwrap()).unwrap()
        };
        let p = probs(PI);
        assert!(p.get(Branch::Aa) < 1e-30);
        assert_relative_eq!(p.get(Branch::Ab), 0.5, epsilon = 1e-15);
        assert_relative_eq!(p.get(Branch::Ba), 0.5, epsilon = 1e-15);

        let p = probs(0.0);
        assert_eq!(p.get(Branch::Aa), 0.5);
        assert_eq!(p.get(Branch::Ba), 0.0);

        let p = probs(FRAC_PI_2);
        for b in Branch::ALL {
            assert_relative_eq!(p.get(b), 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn antibunching_branches_carry_half_the_weight_each() {
        let d = fpbs_decompose(&sagnac_state(2.0).unwrap()).unwrap();
        let br = antibunching_branches(&d).unwrap();
        assert_eq!(br.basis, Basis::PathBranches);
        assert_relative_eq!(br.norm_sqr(), d.amp_second.norm_sqr(), epsilon = 1e-15);
    }

    #[test]
    fn signal_wavelength_examples() {
        assert_relative_eq!(
            solve_signal_wavelength(1540.56, 1540.56).unwrap(),
            1540.56,
            max_relative = 1e-14
        );
        let s = solve_signal_wavelength(1540.56, 1531.90).unwrap();
        assert!((s - 1549.32).abs() < 0.01, "{s}");
        let back = 1.0 / s + 1.0 / 1531.90;
        assert_relative_eq!(back, 2.0 / 1540.56, max_relative = 1e-12);

        let i = solve_signal_wavelength(1540.56, 1549.32).unwrap();
        assert!((i - 1531.90).abs() < 0.01, "{i}");

        assert!(matches!(
            solve_signal_wavelength(1540.56, 700.0),
            Err(Error::InfeasibleWavelength { .. })
        ));
        assert!(solve_signal_wavelength(-1.0, 1500.0).is_err());
    }

    #[test]
    fn frequency_difference_examples() {
        let degenerate = PhotonFrequencies::new(1540.56, 1540.56, 1540.56).unwrap();
        assert_eq!(frequency_difference(&degenerate), 0.0);

        let f = PhotonFrequencies::from_pump_and_idler(1540.56, 1531.90).unwrap();
        let dw = frequency_difference(&f);
        // Oracle: 2π·c·(λs − λi)/(λs·λi) with the solved λs.
        let (ls, li) = (f.lambda_signal(), f.lambda_idler());
        let oracle = TAU * 299_792.458 * (ls - li) / (ls * li);
        assert_relative_eq!(dw, oracle, max_relative = 1e-9);
        assert!((dw - 13.8).abs() < 0.138, "{dw}");
        assert_relative_eq!(dw / TAU, 2.2, max_relative = 0.01);

        assert_relative_eq!(
            frequency_difference(&f.swapped()),
            -dw,
            max_relative = 1e-15
        );
    }

    #[test]
    fn photon_frequencies_check_energy() {
        assert!(PhotonFrequencies::new(1540.56, 1549.0, 1531.90).is_err());
        assert!(PhotonFrequencies::new(1540.56, 0.0, 1531.90).is_err());
    }

    #[test]
    fn per_branch_indexing() {
        let mut v = PerBranch::splat(0_u64);
        v[Branch::Ba] = 7;
        assert_eq!(v.ba, 7);
        assert_eq!(v.iter().map(|(_, x)| x).sum::<u64>(), 7);
        assert_eq!(Branch::from_label("ab"), Some(Branch::Ab));
        assert_eq!(Branch::from_label("xy"), None);
    }
}
