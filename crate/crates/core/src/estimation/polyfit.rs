use crate::counting::PowerScanPoint;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, spd_inverse};

/// Weighted fit `rate = quadratic·P² + linear·P + constant` of a singles
/// power scan; the quadratic term counts pairs, the linear term noise
/// photons and the constant dark counts.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolynomialFit {
    pub quadratic: f64,
    pub linear: f64,
    pub constant: f64,
    pub sigma_quadratic: f64,
    pub sigma_linear: f64,
    pub sigma_constant: f64,
    pub chi_square: f64,
    pub reduced_chi_square: f64,
}

/// Contributions to the fitted singles rate at one power.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScanDecomposition {
    pub pair: f64,
    pub noise: f64,
    pub constant: f64,
    pub total: f64,
}

impl PolynomialFit {
    pub fn decompose(&self, power: f64) -> ScanDecomposition {
        let pair = self.quadratic * power * power;
        let noise = self.linear * power;
        ScanDecomposition {
            pair,
            noise,
            constant: self.constant,
            total: pair + noise + self.constant,
        }
    }

    pub fn value(&self, power: f64) -> f64 {
        self.decompose(power).total
    }
}

/// Weighted least squares with non-negative coefficients.
///
/// Powers are rescaled to [0, 1] before solving. The non-negativity
/// constraint is enforced exactly by trying every support set of the three
/// coefficients and keeping the feasible solution with the lowest
/// chi-square. Standard errors come from the unconstrained covariance
/// (the sigmas are taken as absolute).
pub fn fit_power_scan(points: &[PowerScanPoint]) -> Result<PolynomialFit> {
    if points.len() < 4 {
        return Err(Error::validation(
            "power scan",
            alloc::format!("{} points, need at least 4", points.len()),
        ));
    }
    for (i, p) in points.iter().enumerate() {
        if !p.power_mw.is_finite() || p.power_mw < 0.0 || !p.rate_hz.is_finite() {
            return Err(Error::validation(
                "power scan",
                alloc::format!("point {i} is not finite and non-negative"),
            ));
        }
        if !(p.sigma_hz > 0.0) || !p.sigma_hz.is_finite() {
            return Err(Error::validation(
                "power scan",
                alloc::format!("point {i} has non-positive sigma"),
            ));
        }
        if points[..i].iter().any(|q| q.power_mw == p.power_mw) {
            return Err(Error::validation(
                "power scan",
                alloc::format!("power {} mW repeats", p.power_mw),
            ));
        }
    }

    let scale = points.iter().map(|p| p.power_mw).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(Error::IllConditioned);
    }
    let basis = |p: &PowerScanPoint| {
        let u = p.power_mw / scale;
        [u * u, u, 1.0]
    };

    let mut normal = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for p in points {
        let w = 1.0 / (p.sigma_hz * p.sigma_hz);
        let x = basis(p);
        for a in 0..3 {
            rhs[a] += w * x[a] * p.rate_hz;
            for b in 0..3 {
                normal[a][b] += w * x[a] * x[b];
            }
        }
    }
    let cov = spd_inverse(&normal).ok_or(Error::IllConditioned)?;

    let chi_square = |c: &[f64; 3]| -> f64 {
        points
            .iter()
            .map(|p| {
                let x = basis(p);
                let r = (p.rate_hz - (c[0] * x[0] + c[1] * x[1] + c[2] * x[2])) / p.sigma_hz;
                r * r
            })
            .sum()
    };

    // Support sets from largest to smallest; mask bit k set ⇒ coefficient k free.
    let mut best: Option<([f64; 3], f64)> = None;
    for mask in (0u8..8).rev() {
        let mut m = normal;
        let mut b = rhs;
        for k in 0..3 {
            if mask & (1 << k) == 0 {
                for j in 0..3 {
                    m[k][j] = 0.0;
                    m[j][k] = 0.0;
                }
                m[k][k] = 1.0;
                b[k] = 0.0;
            }
        }
        let Some(l) = cholesky(&m) else { continue };
        let c = cholesky_solve(&l, &b);
        if c.iter().any(|v| *v < 0.0) {
            continue;
        }
        let chi = chi_square(&c);
        if best.is_none_or(|(_, bc)| chi < bc) {
            best = Some((c, chi));
        }
        if mask == 7 {
            // The unconstrained optimum is feasible.
            break;
        }
    }
    let (c, chi) = best.expect("the all-zero support set is always feasible");

    let dof = points.len() - 3;
    Ok(PolynomialFit {
        quadratic: c[0] / (scale * scale),
        linear: c[1] / scale,
        constant: c[2],
        sigma_quadratic: cov[0][0].sqrt() / (scale * scale),
        sigma_linear: cov[1][1].sqrt() / scale,
        sigma_constant: cov[2][2].sqrt(),
        chi_square: chi,
        reduced_chi_square: chi / dof as f64,
    })
}
