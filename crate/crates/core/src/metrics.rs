//! Spin-squeezing figures of merit.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{invalid, Error, Result};
use crate::hilbert::{build_spin_operators, hp_boson_observables, BasisTag, HilbertSpace};

/// Mean spin length below which the Wineland parameter is undefined.
pub const MIN_MEAN_SPIN: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezingReport {
    /// `1 + 2⟨n⟩ - 2⟨n²⟩/N - 2|⟨J_-²⟩|/N` in Holstein–Primakoff variables.
    pub xi_s_sq: f64,
    /// The same expression with `|⟨J_x²⟩|/N` in place of `|⟨J_-²⟩|/N`.
    /// Kept for comparison only: it equals 1/2, not 1, on a coherent state.
    pub xi_s_sq_printed: f64,
    #[serde(rename = "xi_R_sq")]
    pub xi_r_sq: f64,
    #[serde(rename = "xi_R_sq_db")]
    pub xi_r_sq_db: f64,
    pub j_vector: [f64; 3],
    pub n_a: f64,
    pub n_a_sq: f64,
    /// `4 min_⊥ Var(J_⊥) / N` over directions normal to `⟨J⟩`.
    pub xi_min_var_sq: f64,
    /// `ξ_R / √N`.
    pub delta_phi: f64,
}

/// `-10 log10(ξ²)`; positive values mean squeezing.
pub fn db(xi_sq: f64) -> Result<f64> {
    if !(xi_sq > 0.0) || !xi_sq.is_finite() {
        return Err(invalid("xi_sq", "must be positive and finite"));
    }
    Ok(-10.0 * xi_sq.log10())
}

/// Optimal one-axis-twisting phase `6^{-1/6} (N/2)^{-2/3}`.
pub fn theta_opt(n_atoms: usize) -> f64 {
    6f64.powf(-1.0 / 6.0) * (n_atoms as f64 / 2.0).powf(-2.0 / 3.0)
}

/// First and symmetrized second moments of `(J_x, J_y, J_z)`.
pub(crate) struct SpinMoments {
    pub mean: Vector3<f64>,
    /// `⟨{J_a, J_b}⟩ / 2`.
    pub second: Matrix3<f64>,
    pub jm_sq: f64,
}

pub(crate) fn spin_moments(rho: &DensityMatrix, space: &HilbertSpace) -> Result<SpinMoments> {
    let ops = build_spin_operators(space);
    let j = [&ops.jx, &ops.jy, &ops.jz];
    let mut mean = Vector3::zeros();
    let mut second = Matrix3::zeros();
    for a in 0..3 {
        mean[a] = rho.expect(j[a])?.re;
        for b in a..3 {
            let ab = j[a].mul(j[b])?;
            let v = rho.expect(&ab)?.re;
            // Re⟨J_a J_b⟩ is the symmetrized moment for Hermitian ρ
            second[(a, b)] = v;
            second[(b, a)] = v;
        }
    }
    let jm_sq = rho.expect(&ops.j_minus.mul(&ops.j_minus)?)?.norm();
    Ok(SpinMoments {
        mean,
        second,
        jm_sq,
    })
}

/// Closed-form minimal transverse variance, `4 min Var / N`.
pub(crate) fn min_transverse_xi(m: &SpinMoments, n_atoms: usize) -> Result<f64> {
    let len = m.mean.norm();
    if len < MIN_MEAN_SPIN {
        return Err(Error::VanishingMeanSpin(len));
    }
    let n0 = m.mean / len;
    let helper = if n0.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let e1 = n0.cross(&helper).normalize();
    let e2 = n0.cross(&e1);
    let cov = m.second - m.mean * m.mean.transpose();
    let a = e1.dot(&(cov * e1));
    let b = e2.dot(&(cov * e2));
    let c = e1.dot(&(cov * e2));
    let min = 0.5 * (a + b) - (0.25 * (a - b).powi(2) + c * c).sqrt();
    Ok(4.0 * min / n_atoms as f64)
}

/// Squeezing figures of a normalized state on the `(N+1)`-dimensional Dicke space.
pub fn squeezing_report(rho_spin: &DensityMatrix, n_atoms: usize) -> Result<SqueezingReport> {
    let tag = BasisTag::Spin { n_atoms };
    if rho_spin.tag() != tag {
        return Err(Error::BasisMismatch {
            expected: tag,
            found: rho_spin.tag(),
        });
    }
    let space = HilbertSpace::new(n_atoms, 2)?;
    let hp = hp_boson_observables(rho_spin)?;
    let m = spin_moments(rho_spin, &space)?;
    let n = n_atoms as f64;
    let len = m.mean.norm();
    if len < MIN_MEAN_SPIN {
        return Err(Error::VanishingMeanSpin(len));
    }
    let base = 1.0 + 2.0 * hp.n_a - 2.0 * hp.n_a_sq / n;
    let xi_s_sq = base - 2.0 * m.jm_sq / n;
    let xi_s_sq_printed = base - 2.0 * m.second[(0, 0)].abs() / n;
    let wineland = (n / (2.0 * len)).powi(2);
    let xi_r_sq = wineland * xi_s_sq;
    Ok(SqueezingReport {
        xi_s_sq,
        xi_s_sq_printed,
        xi_r_sq,
        xi_r_sq_db: db(xi_r_sq)?,
        j_vector: [m.mean.x, m.mean.y, m.mean.z],
        n_a: hp.n_a,
        n_a_sq: hp.n_a_sq,
        xi_min_var_sq: min_transverse_xi(&m, n_atoms)?,
        delta_phi: xi_r_sq.sqrt() / n.sqrt(),
    })
}
