//! Joint cavity ⊗ collective-spin Hilbert space and its standard operators.
//!
//! Basis ordering is frozen: the cavity Fock index varies slowest, so the
//! joint index of `|n⟩ ⊗ |J, m⟩` is `n · (N_a + 1) + (m + J)`.

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::operator::{CsrMatrix, QOperator};

/// Default number of cavity Fock states.
pub const DEFAULT_N_MAX: usize = 16;

/// Identifies the space an operator or state lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisTag {
    Cavity {
        n_max: usize,
    },
    Spin {
        n_atoms: usize,
    },
    Joint {
        n_max: usize,
        n_atoms: usize,
    },
    /// Cavity ⊗ (four-level atom)^{⊗N_a}, used only by the elimination check.
    Lambda {
        n_max: usize,
        n_atoms: usize,
    },
}

impl BasisTag {
    pub fn dim(&self) -> usize {
        match *self {
            BasisTag::Cavity { n_max } => n_max,
            BasisTag::Spin { n_atoms } => n_atoms + 1,
            BasisTag::Joint { n_max, n_atoms } => n_max * (n_atoms + 1),
            BasisTag::Lambda { n_max, n_atoms } => n_max * 4usize.pow(n_atoms as u32),
        }
    }
}

impl fmt::Display for BasisTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisTag::Cavity { n_max } => write!(f, "cavity(n_max={n_max})"),
            BasisTag::Spin { n_atoms } => write!(f, "spin(N_a={n_atoms})"),
            BasisTag::Joint { n_max, n_atoms } => write!(f, "joint(n_max={n_max}, N_a={n_atoms})"),
            BasisTag::Lambda { n_max, n_atoms } => {
                write!(f, "lambda(n_max={n_max}, N_a={n_atoms})")
            }
        }
    }
}

/// Cavity Fock truncation ⊗ symmetric Dicke ladder with `J = N_a / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertSpace {
    n_atoms: usize,
    n_max: usize,
}

impl HilbertSpace {
    pub fn new(n_atoms: usize, n_max: usize) -> Result<Self> {
        if n_atoms < 1 {
            return Err(Error::InvalidSpace("N_a must be at least 1".into()));
        }
        if n_max < 2 {
            return Err(Error::InvalidSpace("n_max must be at least 2".into()));
        }
        Ok(Self { n_atoms, n_max })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn spin_dim(&self) -> usize {
        self.n_atoms + 1
    }

    pub fn total_dim(&self) -> usize {
        self.n_max * self.spin_dim()
    }

    /// Total spin `J = N_a / 2`.
    pub fn j(&self) -> f64 {
        self.n_atoms as f64 / 2.0
    }

    /// Projection `m` of the spin basis index `k` (`k = 0` is `m = -J`).
    pub fn m_of(&self, k: usize) -> f64 {
        k as f64 - self.j()
    }

    pub fn index(&self, n: usize, k: usize) -> usize {
        debug_assert!(n < self.n_max && k < self.spin_dim());
        n * self.spin_dim() + k
    }

    pub fn joint_tag(&self) -> BasisTag {
        BasisTag::Joint {
            n_max: self.n_max,
            n_atoms: self.n_atoms,
        }
    }

    pub fn spin_tag(&self) -> BasisTag {
        BasisTag::Spin {
            n_atoms: self.n_atoms,
        }
    }

    pub fn cavity_tag(&self) -> BasisTag {
        BasisTag::Cavity { n_max: self.n_max }
    }

    /// Same spin content with a different Fock truncation.
    pub fn with_n_max(&self, n_max: usize) -> Result<Self> {
        Self::new(self.n_atoms, n_max)
    }
}

/// Collective spin operators on the Dicke ladder.
#[derive(Clone, Debug)]
pub struct SpinOperators {
    pub jx: QOperator,
    pub jy: QOperator,
    pub jz: QOperator,
    pub j_plus: QOperator,
    pub j_minus: QOperator,
    /// `J_x / √N_a`.
    pub jbar_x: QOperator,
}

/// Truncated cavity ladder operators.
#[derive(Clone, Debug)]
pub struct CavityOperators {
    pub c: QOperator,
    pub c_dag: QOperator,
    pub n_op: QOperator,
}

pub fn build_spin_operators(space: &HilbertSpace) -> SpinOperators {
    let tag = space.spin_tag();
    let dim = space.spin_dim();
    let j = space.j();
    let ladder = |k: usize| {
        let m = space.m_of(k);
        (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
    };
    let plus = CsrMatrix::from_triplets(
        dim,
        (0..dim - 1).map(|k| (k + 1, k, C64::new(ladder(k), 0.0))),
    );
    let minus = plus.adjoint();
    let half = C64::new(0.5, 0.0);
    let jx = plus.add(&minus).scale(half);
    let jy = plus
        .add(&minus.scale(C64::new(-1.0, 0.0)))
        .scale(C64::new(0.0, -0.5));
    let jz = CsrMatrix::from_diagonal(
        &(0..dim)
            .map(|k| C64::new(space.m_of(k), 0.0))
            .collect::<Vec<_>>(),
    );
    let jbar_x = jx.scale(C64::new(1.0 / (space.n_atoms as f64).sqrt(), 0.0));

    let op = |m: CsrMatrix, herm: bool| {
        let q = QOperator::new(tag, m).expect("spin operator dimension");
        if herm {
            q.into_hermitian().expect("spin operator Hermiticity")
        } else {
            q
        }
    };
    SpinOperators {
        jx: op(jx, true),
        jy: op(jy, true),
        jz: op(jz, true),
        j_plus: op(plus, false),
        j_minus: op(minus, false),
        jbar_x: op(jbar_x, true),
    }
}

pub fn build_cavity_operators(space: &HilbertSpace) -> CavityOperators {
    let tag = space.cavity_tag();
    let dim = space.n_max;
    let c = CsrMatrix::from_triplets(
        dim,
        (1..dim).map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0))),
    );
    let c_dag = c.adjoint();
    let n_op = CsrMatrix::from_diagonal(
        &(0..dim)
            .map(|n| C64::new(n as f64, 0.0))
            .collect::<Vec<_>>(),
    );
    CavityOperators {
        c: QOperator::new(tag, c).expect("cavity dimension"),
        c_dag: QOperator::new(tag, c_dag).expect("cavity dimension"),
        n_op: QOperator::new(tag, n_op)
            .and_then(QOperator::into_hermitian)
            .expect("number operator"),
    }
}

/// Which tensor factor an operator acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    Cavity,
    Spin,
}

/// Embeds a single-factor operator into the joint space: `op ⊗ I` for the
/// cavity, `I ⊗ op` for the spin.
pub fn tensor_lift(op: &QOperator, space: &HilbertSpace, which: Factor) -> Result<QOperator> {
    let expected = match which {
        Factor::Cavity => space.cavity_tag(),
        Factor::Spin => space.spin_tag(),
    };
    if op.tag() != expected {
        return Err(Error::BasisMismatch {
            expected,
            found: op.tag(),
        });
    }
    let matrix = match which {
        Factor::Cavity => op.matrix().kron(&CsrMatrix::identity(space.spin_dim())),
        Factor::Spin => CsrMatrix::identity(space.n_max).kron(op.matrix()),
    };
    let lifted = QOperator::new(space.joint_tag(), matrix)?;
    if op.is_hermitian() {
        lifted.into_hermitian()
    } else {
        Ok(lifted)
    }
}

/// `A_cavity ⊗ B_spin` on the joint space.
pub fn tensor_product(
    cavity_op: &QOperator,
    spin_op: &QOperator,
    space: &HilbertSpace,
) -> Result<QOperator> {
    for (op, expected) in [(cavity_op, space.cavity_tag()), (spin_op, space.spin_tag())] {
        if op.tag() != expected {
            return Err(Error::BasisMismatch {
                expected,
                found: op.tag(),
            });
        }
    }
    QOperator::new(space.joint_tag(), cavity_op.matrix().kron(spin_op.matrix()))
}

/// First two moments of the Holstein–Primakoff boson number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HpMoments {
    pub n_a: f64,
    pub n_a_sq: f64,
}

/// `⟨â†â⟩` and `⟨(â†â)²⟩` from a spin density matrix, using `|J, m⟩ ↔ |J + m⟩`.
pub fn hp_boson_observables(rho_spin: &DensityMatrix) -> Result<HpMoments> {
    let BasisTag::Spin { .. } = rho_spin.tag() else {
        return Err(Error::BasisMismatch {
            expected: BasisTag::Spin {
                n_atoms: rho_spin.dim().saturating_sub(1),
            },
            found: rho_spin.tag(),
        });
    };
    let trace = rho_spin.trace().re;
    if (trace - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized { trace });
    }
    let (mut n_a, mut n_a_sq) = (0.0, 0.0);
    for k in 0..rho_spin.dim() {
        let p = rho_spin.get(k, k).re;
        let n = k as f64;
        n_a += p * n;
        n_a_sq += p * n * n;
    }
    Ok(HpMoments { n_a, n_a_sq })
}
