//! Closed-form propagator of the ideal (`κ = Γ_φ = ω_q = 0`) dynamics.
//!
//! In the interaction picture of `ω_c c†c` the evolution operator is
//! `U(t) = exp(iθ(t) J_x²) · exp((2λ/ω_c)(α(t) c† - α*(t) c) J_x)` with
//! `α(t) = 1 - e^{iω_c t}` and `θ(t) = (2λ/ω_c)² (ω_c t - sin ω_c t)`.
//! Both factors are functions of `J_x`, so they are applied in its
//! eigenbasis: a phase per eigenvalue and a cavity displacement
//! conditioned on it.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::density::{DensityMatrix, Ket};
use crate::error::{invalid, Error, Result};
use crate::hilbert::{build_spin_operators, HilbertSpace};

/// Geometric phase `θ(t) = (2λ/ω_c)² (ω_c t - sin ω_c t)`.
pub fn theta_of_t(t: f64, lambda: f64, omega_c: f64) -> f64 {
    let r = 2.0 * lambda / omega_c;
    r * r * (omega_c * t - (omega_c * t).sin())
}

/// Displacement coefficient `α(t) = 1 - e^{iω_c t}`.
pub fn alpha_of_t(t: f64, omega_c: f64) -> C64 {
    C64::new(1.0, 0.0) - C64::from_polar(1.0, omega_c * t)
}

/// Coupling that accumulates `theta_target` over one period `2π/ω_c`.
pub fn lambda_from_theta(theta_target: f64, omega_c: f64) -> Result<f64> {
    if !(theta_target >= 0.0) {
        return Err(invalid("theta", "geometric phase must be non-negative"));
    }
    Ok(0.5 * omega_c * (theta_target / (2.0 * PI)).sqrt())
}

/// `m`-th decoupling time `t_m = 2mπ / ω_c`.
pub fn decoupling_time(m: u32, omega_c: f64) -> f64 {
    2.0 * PI * m as f64 / omega_c
}

/// Eigen-decomposition of `J_x` on the Dicke ladder.
struct JxBasis {
    /// Column `k` is the eigenvector for `values[k]` (real, ladder ordering).
    vectors: DMatrix<f64>,
    values: Vec<f64>,
}

impl JxBasis {
    fn new(space: &HilbertSpace) -> Self {
        let jx = build_spin_operators(space).jx;
        let d = space.spin_dim();
        let mut m = DMatrix::<f64>::zeros(d, d);
        for (r, c, v) in jx.matrix().triplets() {
            m[(r, c)] = v.re;
        }
        let eig = SymmetricEigen::new(m);
        Self {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }
}

/// `exp(β c† - β* c)` on the truncated Fock space, row-major.
fn displacement(beta: C64, n_max: usize) -> Vec<C64> {
    let mut g = DMatrix::<C64>::zeros(n_max, n_max);
    // G = i(β c† - β* c) is Hermitian and D = exp(-iG)
    let i = C64::new(0.0, 1.0);
    for n in 1..n_max {
        let s = (n as f64).sqrt();
        g[(n, n - 1)] = i * beta * s;
        g[(n - 1, n)] = -i * beta.conj() * s;
    }
    let eig = g.symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = eig.eigenvalues.map(|e| C64::from_polar(1.0, -e));
    let d = v * DMatrix::from_diagonal(&phases) * v.adjoint();
    let mut out = Vec::with_capacity(n_max * n_max);
    for r in 0..n_max {
        for c in 0..n_max {
            out.push(d[(r, c)]);
        }
    }
    out
}

/// Applies `U = exp(iθ J_x²) · exp((2λ/ω_c)(α c† - α* c) J_x)` to a pure state.
///
/// `state` may live on the joint space, or on the spin space alone when
/// `alpha == 0` (the cavity factor is then the identity).
pub fn apply_geometric_unitary(
    state: &Ket,
    theta: f64,
    alpha: C64,
    lambda: f64,
    omega_c: f64,
    space: &HilbertSpace,
) -> Result<Ket> {
    let tag = state.tag();
    let n_max = match tag {
        t if t == space.joint_tag() => space.n_max(),
        t if t == space.spin_tag() => {
            if alpha != C64::new(0.0, 0.0) {
                return Err(Error::BasisMismatch {
                    expected: space.joint_tag(),
                    found: tag,
                });
            }
            1
        }
        _ => {
            return Err(Error::BasisMismatch {
                expected: space.joint_tag(),
                found: tag,
            })
        }
    };
    if omega_c == 0.0 {
        return Err(invalid("omega_c", "must be nonzero"));
    }
    let sd = space.spin_dim();
    let basis = JxBasis::new(space);
    let v = &basis.vectors;
    let amps = state.amplitudes();

    // rows: cavity index, columns: J_x eigen-index
    let mut rotated = vec![C64::new(0.0, 0.0); n_max * sd];
    for n in 0..n_max {
        for k in 0..sd {
            rotated[n * sd + k] = (0..sd).map(|s| amps[n * sd + s] * v[(s, k)]).sum();
        }
    }

    let scale = 2.0 * lambda / omega_c;
    let mut column = vec![C64::new(0.0, 0.0); n_max];
    for (k, &mu) in basis.values.iter().enumerate() {
        let twist = C64::from_polar(1.0, theta * mu * mu);
        for n in 0..n_max {
            column[n] = rotated[n * sd + k];
        }
        let beta = alpha * scale * mu;
        if n_max > 1 && beta != C64::new(0.0, 0.0) {
            let d = displacement(beta, n_max);
            for n in 0..n_max {
                rotated[n * sd + k] = twist
                    * (0..n_max)
                        .map(|p| d[n * n_max + p] * column[p])
                        .sum::<C64>();
            }
        } else {
            for n in 0..n_max {
                rotated[n * sd + k] = twist * column[n];
            }
        }
    }

    let mut out = vec![C64::new(0.0, 0.0); n_max * sd];
    for n in 0..n_max {
        for s in 0..sd {
            out[n * sd + s] = (0..sd).map(|k| rotated[n * sd + k] * v[(s, k)]).sum();
        }
    }
    Ok(Ket::from_amplitudes(tag, out))
}

/// Ideal state at time `t` from `|0⟩ ⊗ |J, -J⟩`, in the lab frame.
pub fn ideal_state(lambda: f64, omega_c: f64, t: f64, space: &HilbertSpace) -> Result<Ket> {
    let initial = Ket::basis(space.joint_tag(), space.index(0, 0));
    let theta = theta_of_t(t, lambda, omega_c);
    let alpha = alpha_of_t(t, omega_c);
    let ket = apply_geometric_unitary(&initial, theta, alpha, lambda, omega_c, space)?;
    // undo the interaction picture: e^{-iω_c t c†c}
    let sd = space.spin_dim();
    let amps = ket
        .into_amplitudes()
        .into_iter()
        .enumerate()
        .map(|(i, a)| a * C64::from_polar(1.0, -omega_c * t * (i / sd) as f64))
        .collect();
    Ok(Ket::from_amplitudes(space.joint_tag(), amps))
}

/// One-axis-twisted spin state `exp(iθ J_x²) |J, -J⟩`.
pub fn twisted_spin_state(theta: f64, space: &HilbertSpace) -> Result<Ket> {
    let ground = Ket::basis(space.spin_tag(), 0);
    apply_geometric_unitary(&ground, theta, C64::new(0.0, 0.0), 0.0, 1.0, space)
}

/// Density-matrix version of [`apply_geometric_unitary`] for pure inputs.
pub fn twisted_spin_density(theta: f64, space: &HilbertSpace) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_ket(&twisted_spin_state(theta, space)?))
}
