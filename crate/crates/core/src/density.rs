//! Dense state representations: kets and row-major density matrices.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{BasisTag, HilbertSpace};
use crate::operator::QOperator;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    tag: BasisTag,
    amps: Vec<C64>,
}

impl Ket {
    pub fn basis(tag: BasisTag, index: usize) -> Self {
        let mut amps = vec![ZERO; tag.dim()];
        amps[index] = C64::new(1.0, 0.0);
        Self { tag, amps }
    }

    pub fn from_amplitudes(tag: BasisTag, amps: Vec<C64>) -> Self {
        assert_eq!(
            amps.len(),
            tag.dim(),
            "amplitude count does not match {tag}"
        );
        Self { tag, amps }
    }

    pub fn tag(&self) -> BasisTag {
        self.tag
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        self.amps.iter_mut().for_each(|a| *a /= n);
        self
    }

    /// `self ⊗ other`, with `self` as the slow index.
    pub fn tensor(&self, other: &Ket, tag: BasisTag) -> Ket {
        let amps = self
            .amps
            .iter()
            .flat_map(|&a| other.amps.iter().map(move |&b| a * b))
            .collect();
        Ket::from_amplitudes(tag, amps)
    }

    pub fn inner(&self, other: &Ket) -> Result<C64> {
        check_tags(self.tag, other.tag)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn expect(&self, op: &QOperator) -> Result<C64> {
        check_tags(op.tag(), self.tag)?;
        let applied = op.apply(&self.amps)?;
        Ok(self
            .amps
            .iter()
            .zip(&applied)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

fn check_tags(expected: BasisTag, found: BasisTag) -> Result<()> {
    if expected != found {
        return Err(Error::BasisMismatch { expected, found });
    }
    Ok(())
}

/// Row-major dense density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    tag: BasisTag,
    dim: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn from_ket(ket: &Ket) -> Self {
        let dim = ket.amps.len();
        let mut data = vec![ZERO; dim * dim];
        for (i, a) in ket.amps.iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            for (j, b) in ket.amps.iter().enumerate() {
                data[i * dim + j] = a * b.conj();
            }
        }
        Self {
            tag: ket.tag,
            dim,
            data,
        }
    }

    pub fn from_raw(tag: BasisTag, data: Vec<C64>) -> Result<Self> {
        let dim = tag.dim();
        if data.len() != dim * dim {
            return Err(Error::InvalidSpace(format!(
                "{} entries do not form a {dim}x{dim} matrix",
                data.len()
            )));
        }
        Ok(Self { tag, dim, data })
    }

    /// Default initial state `|0⟩_cav ⊗ |J, -J⟩`.
    pub fn ground(space: &HilbertSpace) -> Self {
        Self::from_ket(&Ket::basis(space.joint_tag(), space.index(0, 0)))
    }

    pub fn tag(&self) -> BasisTag {
        self.tag
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.data.iter_mut().for_each(|v| *v *= s);
        self
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_tags(self.tag, other.tag)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            tag: self.tag,
            dim: self.dim,
            data,
        })
    }

    /// `Tr(A ρ)`.
    pub fn expect(&self, op: &QOperator) -> Result<C64> {
        check_tags(op.tag(), self.tag)?;
        Ok(op
            .matrix()
            .triplets()
            .map(|(i, k, a)| a * self.get(k, i))
            .sum())
    }

    /// `max_ij |ρ_ij - conj(ρ_ji)|`.
    pub fn hermiticity_drift(&self) -> f64 {
        hermiticity_drift(&self.data, self.dim)
    }

    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ ρ_ij ρ_ji; equals Σ|ρ_ij|² for Hermitian ρ
        let mut acc = ZERO;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += self.get(i, j) * self.get(j, i);
            }
        }
        acc.re
    }

    /// Reduced spin state `Tr_cav ρ`.
    pub fn trace_out_cavity(&self, space: &HilbertSpace) -> Result<Self> {
        check_tags(space.joint_tag(), self.tag)?;
        let sd = space.spin_dim();
        let mut out = vec![ZERO; sd * sd];
        for n in 0..space.n_max() {
            for a in 0..sd {
                let row = space.index(n, a);
                for b in 0..sd {
                    out[a * sd + b] += self.get(row, space.index(n, b));
                }
            }
        }
        Self::from_raw(space.spin_tag(), out)
    }

    /// Reduced cavity state `Tr_spin ρ`.
    pub fn trace_out_spin(&self, space: &HilbertSpace) -> Result<Self> {
        check_tags(space.joint_tag(), self.tag)?;
        let nm = space.n_max();
        let mut out = vec![ZERO; nm * nm];
        for n in 0..nm {
            for n2 in 0..nm {
                out[n * nm + n2] = (0..space.spin_dim())
                    .map(|k| self.get(space.index(n, k), space.index(n2, k)))
                    .sum();
            }
        }
        Self::from_raw(space.cavity_tag(), out)
    }

    /// `⟨ψ|ρ|ψ⟩`, the fidelity against a pure state.
    pub fn fidelity_with_ket(&self, ket: &Ket) -> Result<f64> {
        check_tags(self.tag, ket.tag)?;
        let psi = &ket.amps;
        let mut acc = ZERO;
        for i in 0..self.dim {
            if psi[i] == ZERO {
                continue;
            }
            let row: C64 = (0..self.dim).map(|j| self.get(i, j) * psi[j]).sum();
            acc += psi[i].conj() * row;
        }
        Ok(acc.re)
    }

    /// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`. Dense eigendecompositions; intended
    /// for reduced states.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        check_tags(self.tag, other.tag)?;
        let rho = self.to_nalgebra();
        let sigma = other.to_nalgebra();
        let eig = rho.symmetric_eigen();
        let sqrt_vals = eig.eigenvalues.map(|v| C64::new(v.max(0.0).sqrt(), 0.0));
        let v = &eig.eigenvectors;
        let sqrt_rho = v * DMatrix::from_diagonal(&sqrt_vals) * v.adjoint();
        let m = &sqrt_rho * sigma * &sqrt_rho;
        let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let s: f64 = m
            .symmetric_eigenvalues()
            .iter()
            .map(|v| v.max(0.0).sqrt())
            .sum();
        Ok(s * s)
    }

    /// Smallest eigenvalue via a dense Hermitian eigensolver.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.to_nalgebra();
        let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        m.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// True when `ρ + ε·I` admits a Cholesky factorization, i.e. every
    /// eigenvalue exceeds `-ε`. Cheaper than a full eigendecomposition.
    pub fn is_positive_above(&self, eps: f64) -> bool {
        let n = self.dim;
        // in-place lower Cholesky of the Hermitian part of ρ + εI, row-major
        let mut l = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..=i {
                let a = 0.5 * (self.get(i, j) + self.get(j, i).conj());
                l[i * n + j] = if i == j { a + eps } else { a };
            }
        }
        for j in 0..n {
            let s: f64 = l[j * n..j * n + j].iter().map(|v| v.norm_sqr()).sum();
            let pivot = l[j * n + j].re - s;
            if !(pivot > 0.0) {
                return false;
            }
            let pivot = pivot.sqrt();
            l[j * n + j] = C64::new(pivot, 0.0);
            for i in (j + 1)..n {
                let (upper, lower) = l.split_at_mut(i * n);
                let rj = &upper[j * n..j * n + j];
                let ri = &mut lower[..n];
                let dot: C64 = ri[..j].iter().zip(rj).map(|(a, b)| a * b.conj()).sum();
                ri[j] = (ri[j] - dot) / pivot;
            }
        }
        true
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }
}

pub(crate) fn hermiticity_drift(data: &[C64], dim: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        for j in i..dim {
            let d = (data[i * dim + j] - data[j * dim + i].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_traces_of_product_state() {
        let s = HilbertSpace::new(2, 3).unwrap();
        let cav = Ket::from_amplitudes(
            s.cavity_tag(),
            vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8), ZERO],
        );
        let spin = Ket::from_amplitudes(s.spin_tag(), vec![C64::new(0.0, 1.0), ZERO, ZERO]);
        let rho = DensityMatrix::from_ket(&cav.tensor(&spin, s.joint_tag()));
        let rs = rho.trace_out_cavity(&s).unwrap();
        assert!((rs.get(0, 0).re - 1.0).abs() < 1e-15);
        assert!((rs.purity() - 1.0).abs() < 1e-15);
        let rc = rho.trace_out_spin(&s).unwrap();
        assert!((rc.get(1, 1).re - 0.64).abs() < 1e-15);
        assert!((rc.get(0, 1) - C64::new(0.0, -0.48)).norm() < 1e-15);
    }

    #[test]
    fn fidelity_of_identical_and_orthogonal_states() {
        let tag = BasisTag::Spin { n_atoms: 3 };
        let a = DensityMatrix::from_ket(&Ket::basis(tag, 0));
        let b = DensityMatrix::from_ket(&Ket::basis(tag, 1));
        assert!((a.fidelity(&a).unwrap() - 1.0).abs() < 1e-12);
        assert!(a.fidelity(&b).unwrap().abs() < 1e-12);
        let mix = a.clone().scaled(0.5).add(&b.clone().scaled(0.5)).unwrap();
        assert!((mix.fidelity(&a).unwrap() - 0.5).abs() < 1e-12);
        assert!((mix.fidelity_with_ket(&Ket::basis(tag, 1)).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn positivity_checks() {
        let tag = BasisTag::Spin { n_atoms: 2 };
        let rho = DensityMatrix::from_ket(&Ket::from_amplitudes(
            tag,
            vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8), ZERO],
        ));
        assert!(rho.min_eigenvalue().abs() < 1e-12);
        assert!(rho.is_positive_above(1e-7));
        let mut bad = rho.clone();
        bad.data_mut()[8] = C64::new(-1e-3, 0.0);
        assert!(bad.min_eigenvalue() < -9e-4);
        assert!(!bad.is_positive_above(1e-7));
    }
}
