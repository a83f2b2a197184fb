use core::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use num_traits::Zero;

use crate::error::{ensure_finite, Error, Result};
use crate::linalg::hermitian_eigenvalues;

/// Slack allowed on `V/2 ≤ √(p(1−p))` before a state is called unphysical.
pub const PHYSICALITY_TOLERANCE: f64 = 1e-12;

/// Two-photon density matrix over the frequency basis
/// {|ω_s⟩|ω_s⟩, |ω_s⟩|ω_i⟩, |ω_i⟩|ω_s⟩, |ω_i⟩|ω_i⟩}, built from the
/// balance parameter p, the beating visibility V and the beating phase φ:
///
/// ```text
///     ⎡0      0          0      0⎤
/// ρ = ⎢0      p     V/2·e^{−iφ} 0⎥
///     ⎢0  V/2·e^{iφ}    1−p     0⎥
///     ⎣0      0          0      0⎦
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DensityMatrix {
    pub entries: [[C64; 4]; 4],
    pub p: f64,
    pub visibility: f64,
    pub phase: f64,
    /// Whether `V/2 ≤ √(p(1−p))` holds within [`PHYSICALITY_TOLERANCE`].
    pub physical: bool,
}

impl DensityMatrix {
    pub fn trace(&self) -> C64 {
        (0..4).map(|i| self.entries[i][i]).sum()
    }

    /// Largest |ρ_ij − conj(ρ_ji)|.
    pub fn hermiticity_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                err = err.max((self.entries[i][j] - self.entries[j][i].conj()).norm());
            }
        }
        err
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> [f64; 4] {
        hermitian_eigenvalues(&self.entries)
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        let mut sum = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                sum += (self.entries[i][j] * self.entries[j][i]).re;
            }
        }
        sum
    }

    pub fn real_part(&self) -> [[f64; 4]; 4] {
        self.entries.map(|row| row.map(|z| z.re))
    }

    pub fn imag_part(&self) -> [[f64; 4]; 4] {
        self.entries.map(|row| row.map(|z| z.im))
    }
}

/// `√(p(1−p)) − V/2`; non-negative exactly for physical (p, V).
pub fn physicality_margin(p: f64, visibility: f64) -> f64 {
    (p * (1.0 - p)).max(0.0).sqrt() - visibility / 2.0
}

/// Largest visibility allowed by the balance parameter, `2√(p(1−p))`.
/// Applied only on explicit request.
pub fn project_physical(p: f64, visibility: f64) -> f64 {
    visibility.min(2.0 * (p * (1.0 - p)).max(0.0).sqrt())
}

/// Builds ρ from (p, V, φ).
///
/// `p` must lie in [0, 1] and `V` be non-negative. Visibilities above the
/// physical bound (including V > 1 from a noisy fit) are accepted and
/// flagged through [`DensityMatrix::physical`] rather than clipped.
pub fn reconstruct_density(p: f64, visibility: f64, phase: f64) -> Result<DensityMatrix> {
    ensure_finite("p", p)?;
    ensure_finite("visibility", visibility)?;
    ensure_finite("phase", phase)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::validation(
            "p",
            alloc::format!("{p} is outside [0, 1]"),
        ));
    }
    if visibility < 0.0 {
        return Err(Error::validation(
            "visibility",
            alloc::format!("{visibility} is negative"),
        ));
    }
    let mut entries = [[C64::zero(); 4]; 4];
    entries[1][1] = C64::new(p, 0.0);
    entries[2][2] = C64::new(1.0 - p, 0.0);
    entries[1][2] = C64::from_polar(visibility / 2.0, -phase);
    entries[2][1] = C64::from_polar(visibility / 2.0, phase);
    Ok(DensityMatrix {
        entries,
        p,
        visibility,
        phase,
        physical: physicality_margin(p, visibility) >= -PHYSICALITY_TOLERANCE,
    })
}

/// ⟨ψ⁺|ρ|ψ⁺⟩ with |ψ⁺⟩ = (|ω_s⟩|ω_i⟩ + |ω_i⟩|ω_s⟩)/√2, by direct
/// contraction over all sixteen entries.
pub fn fidelity_to_bell(rho: &DensityMatrix) -> f64 {
    let psi = [
        C64::zero(),
        C64::new(FRAC_1_SQRT_2, 0.0),
        C64::new(FRAC_1_SQRT_2, 0.0),
        C64::zero(),
    ];
    let mut f = C64::zero();
    for i in 0..4 {
        for j in 0..4 {
            f += psi[i].conj() * rho.entries[i][j] * psi[j];
        }
    }
    f.re
}

/// Fidelity of the (p, V, φ) family to |ψ⁺⟩, `(1 + V·cos φ)/2`.
pub fn fidelity_closed_form(visibility: f64, phase: f64) -> f64 {
    (1.0 + visibility * phase.cos()) / 2.0
}
