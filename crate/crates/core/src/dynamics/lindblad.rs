//! Action of the Lindblad generator on a dense, row-major density matrix.
//!
//! The generator is stored as a non-Hermitian effective Hamiltonian
//! `H_eff = H - (i/2) Σ L†L` plus the jump terms, so that
//!
//! `dρ/dt = X + X† + Σ L ρ L†` with `X = -i H_eff ρ`,
//!
//! which is Hermitian by construction whenever `ρ` is.
//!
//! The basis may be split into symmetry sectors. When the Hamiltonian does
//! not couple sectors and every jump maps each sector into a single other
//! sector, a state without inter-sector coherence keeps that form, and only
//! the diagonal blocks are stored and propagated ("packed" layout).

use num_complex::Complex64 as C64;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::hilbert::BasisTag;
use crate::operator::{CsrMatrix, QOperator};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const TILE: usize = 32;

/// A Hamiltonian term `e^{iωt} A + e^{-iωt} A†`.
#[derive(Clone, Debug)]
pub struct Modulated {
    pub raising: CsrMatrix,
    pub lowering: CsrMatrix,
    pub omega: f64,
}

/// Jump operator restricted to one target sector.
#[derive(Clone, Debug)]
enum SectorJump {
    /// Diagonal within the sector: `(LρL†)_pq = l_p l_q* ρ_pq`.
    Diagonal { sector: usize, diag: Vec<C64> },
    /// At most one entry per row: `L[p, a_p] = l_p`, reading from `source`.
    Monomial {
        target: usize,
        source: usize,
        rows: Vec<(usize, usize, C64)>,
    },
    /// Arbitrary sparsity; only used with a single sector.
    General(CsrMatrix),
}

#[derive(Clone, Debug)]
struct Sector {
    /// Global basis indices, ascending.
    indices: Vec<usize>,
    offset: usize,
    h_eff: CsrMatrix,
    raising: Option<CsrMatrix>,
    lowering: Option<CsrMatrix>,
}

impl Sector {
    fn dim(&self) -> usize {
        self.indices.len()
    }
}

#[derive(Clone, Debug)]
pub struct Liouvillian {
    tag: BasisTag,
    dim: usize,
    h_eff: CsrMatrix,
    modulated: Option<Modulated>,
    collapse: Vec<CsrMatrix>,
    sectors: Vec<Sector>,
    jumps: Vec<SectorJump>,
    /// `(sector, local index)` of every global index.
    location: Vec<(usize, usize)>,
    state_len: usize,
}

impl Liouvillian {
    pub fn new(h: &QOperator, collapse_ops: &[QOperator]) -> Result<Self> {
        let tag = h.tag();
        for l in collapse_ops {
            if l.tag() != tag {
                return Err(Error::BasisMismatch {
                    expected: tag,
                    found: l.tag(),
                });
            }
        }
        let dim = h.dim();
        let mut h_eff = h.matrix().clone();
        for l in collapse_ops {
            let m = l.matrix();
            let ldl = m.adjoint().matmul(m);
            h_eff = h_eff.add(&ldl.scale(C64::new(0.0, -0.5)));
        }
        let mut out = Self {
            tag,
            dim,
            h_eff,
            modulated: None,
            collapse: collapse_ops.iter().map(|l| l.matrix().clone()).collect(),
            sectors: Vec::new(),
            jumps: Vec::new(),
            location: Vec::new(),
            state_len: 0,
        };
        out.rebuild(vec![(0..dim).collect()])?;
        Ok(out)
    }

    /// Adds `e^{iωt} A + e^{-iωt} A†` to the Hamiltonian.
    pub fn with_modulated(mut self, raising: &QOperator, omega: f64) -> Result<Self> {
        if raising.tag() != self.tag {
            return Err(Error::BasisMismatch {
                expected: self.tag,
                found: raising.tag(),
            });
        }
        self.modulated = Some(Modulated {
            raising: raising.matrix().clone(),
            lowering: raising.matrix().adjoint(),
            omega,
        });
        let sectors = self.sectors.iter().map(|s| s.indices.clone()).collect();
        self.rebuild(sectors)?;
        Ok(self)
    }

    /// Switches to the packed layout over `sectors`, which must partition
    /// the basis. Fails when the generator couples the sectors in a way the
    /// packed layout cannot represent.
    pub fn partitioned(mut self, sectors: Vec<Vec<usize>>) -> Result<Self> {
        self.rebuild(sectors)?;
        Ok(self)
    }

    fn rebuild(&mut self, mut sector_indices: Vec<Vec<usize>>) -> Result<()> {
        let d = self.dim;
        let mut location = vec![(usize::MAX, 0); d];
        for (s, idx) in sector_indices.iter_mut().enumerate() {
            idx.sort_unstable();
            for (p, &g) in idx.iter().enumerate() {
                if g >= d || location[g].0 != usize::MAX {
                    return Err(Error::InvalidSpace(
                        "sectors must partition the basis".into(),
                    ));
                }
                location[g] = (s, p);
            }
        }
        if location.iter().any(|l| l.0 == usize::MAX) {
            return Err(Error::InvalidSpace("sectors must cover the basis".into()));
        }
        let not_block = || Error::InvalidSpace("operator couples different sectors".into());
        let restrict = |m: &CsrMatrix, s: usize, idx: &[usize]| -> Result<CsrMatrix> {
            let mut trip = Vec::new();
            for (p, &g) in idx.iter().enumerate() {
                for (k, v) in m.row(g) {
                    let (sk, q) = location[k];
                    if sk != s {
                        return Err(not_block());
                    }
                    trip.push((p, q, v));
                }
            }
            Ok(CsrMatrix::from_triplets(idx.len(), trip))
        };

        let mut sectors = Vec::with_capacity(sector_indices.len());
        let mut offset = 0;
        for (s, idx) in sector_indices.into_iter().enumerate() {
            let h_eff = restrict(&self.h_eff, s, &idx)?;
            let (raising, lowering) = match &self.modulated {
                Some(m) => (
                    Some(restrict(&m.raising, s, &idx)?),
                    Some(restrict(&m.lowering, s, &idx)?),
                ),
                None => (None, None),
            };
            let n = idx.len();
            sectors.push(Sector {
                indices: idx,
                offset,
                h_eff,
                raising,
                lowering,
            });
            offset += n * n;
        }

        let mut jumps = Vec::new();
        for l in &self.collapse {
            if l.max_nnz_per_row() > 1 {
                if sectors.len() > 1 {
                    return Err(not_block());
                }
                jumps.push(SectorJump::General(l.clone()));
                continue;
            }
            for (t, sector) in sectors.iter().enumerate() {
                let mut source = None;
                let mut rows = Vec::new();
                for (p, &g) in sector.indices.iter().enumerate() {
                    if let Some((a, v)) = l.row(g).next() {
                        let (sa, q) = location[a];
                        if *source.get_or_insert(sa) != sa {
                            return Err(not_block());
                        }
                        rows.push((p, q, v));
                    }
                }
                let Some(source) = source else { continue };
                if source == t && rows.iter().all(|&(p, q, _)| p == q) {
                    let mut diag = vec![ZERO; sector.dim()];
                    for (p, _, v) in rows {
                        diag[p] = v;
                    }
                    jumps.push(SectorJump::Diagonal { sector: t, diag });
                } else {
                    jumps.push(SectorJump::Monomial {
                        target: t,
                        source,
                        rows,
                    });
                }
            }
        }

        self.state_len = offset;
        self.sectors = sectors;
        self.jumps = jumps;
        self.location = location;
        Ok(())
    }

    pub fn tag(&self) -> BasisTag {
        self.tag
    }

    /// Dimension of the Hilbert space.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_sectors(&self) -> usize {
        self.sectors.len()
    }

    /// Length of the packed state vector.
    pub fn state_len(&self) -> usize {
        self.state_len
    }

    /// Scratch length required by [`Liouvillian::apply`].
    pub fn scratch_len(&self) -> usize {
        self.sectors
            .iter()
            .map(|s| s.dim() * s.dim())
            .max()
            .unwrap_or(0)
    }

    /// Position of `ρ_ij` in the packed vector, if stored.
    #[inline]
    pub fn packed_index(&self, i: usize, j: usize) -> Option<usize> {
        let (si, p) = self.location[i];
        let (sj, q) = self.location[j];
        (si == sj).then(|| {
            let s = &self.sectors[si];
            s.offset + p * s.dim() + q
        })
    }

    /// Position of the diagonal entry `ρ_ii` in the packed vector.
    #[inline]
    pub fn diag_index(&self, i: usize) -> usize {
        let (s, p) = self.location[i];
        let sec = &self.sectors[s];
        sec.offset + p * sec.dim() + p
    }

    /// Packs a full row-major matrix; `None` if it has inter-sector entries.
    pub fn pack(&self, full: &[C64]) -> Option<Vec<C64>> {
        let d = self.dim;
        let mut out = vec![ZERO; self.state_len];
        for i in 0..d {
            for j in 0..d {
                let v = full[i * d + j];
                match self.packed_index(i, j) {
                    Some(k) => out[k] = v,
                    None if v != ZERO => return None,
                    None => {}
                }
            }
        }
        Some(out)
    }

    /// Expands a packed vector into a full row-major matrix.
    pub fn unpack(&self, packed: &[C64]) -> Vec<C64> {
        let d = self.dim;
        let mut out = vec![ZERO; d * d];
        for s in &self.sectors {
            let n = s.dim();
            for (p, &i) in s.indices.iter().enumerate() {
                for (q, &j) in s.indices.iter().enumerate() {
                    out[i * d + j] = packed[s.offset + p * n + q];
                }
            }
        }
        out
    }

    /// `max |ρ_ij - ρ_ji*|` over the stored blocks.
    pub fn hermiticity_drift(&self, packed: &[C64]) -> f64 {
        self.sectors
            .iter()
            .map(|s| {
                let n = s.dim();
                crate::density::hermiticity_drift(&packed[s.offset..s.offset + n * n], n)
            })
            .fold(0.0, f64::max)
    }

    /// Writes `dρ/dt` at time `t` into `out` (packed layout). `scratch` must
    /// hold at least [`Liouvillian::scratch_len`] entries.
    pub fn apply(&self, t: f64, rho: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        debug_assert_eq!(rho.len(), self.state_len);
        debug_assert_eq!(out.len(), self.state_len);
        let phase = self
            .modulated
            .as_ref()
            .map(|m| C64::from_polar(1.0, m.omega * t));
        for s in &self.sectors {
            let n = s.dim();
            let range = s.offset..s.offset + n * n;
            coherent_part(
                s,
                phase,
                &rho[range.clone()],
                &mut out[range],
                &mut scratch[..n * n],
            );
        }
        for jump in &self.jumps {
            match jump {
                SectorJump::Diagonal { sector, diag } => {
                    let s = &self.sectors[*sector];
                    let n = s.dim();
                    let src = &rho[s.offset..s.offset + n * n];
                    let dst = &mut out[s.offset..s.offset + n * n];
                    for (p, &lp) in diag.iter().enumerate() {
                        if lp == ZERO {
                            continue;
                        }
                        let row = &mut dst[p * n..(p + 1) * n];
                        for ((o, r), lq) in row.iter_mut().zip(&src[p * n..(p + 1) * n]).zip(diag) {
                            *o += lp * lq.conj() * r;
                        }
                    }
                }
                SectorJump::Monomial {
                    target,
                    source,
                    rows,
                } => {
                    let ts = &self.sectors[*target];
                    let ss = &self.sectors[*source];
                    let (nt, ns) = (ts.dim(), ss.dim());
                    let src = &rho[ss.offset..ss.offset + ns * ns];
                    let dst = &mut out[ts.offset..ts.offset + nt * nt];
                    for &(p, a, lp) in rows {
                        let row = &mut dst[p * nt..(p + 1) * nt];
                        let src_row = &src[a * ns..(a + 1) * ns];
                        for &(q, b, lq) in rows {
                            row[q] += lp * lq.conj() * src_row[b];
                        }
                    }
                }
                SectorJump::General(m) => {
                    // single sector: Y = L ρ, then L Y† = L ρ L† for Hermitian ρ
                    let d = self.dim;
                    let y = &mut scratch[..d * d];
                    for i in 0..d {
                        let yr = &mut y[i * d..(i + 1) * d];
                        yr.iter_mut().for_each(|v| *v = ZERO);
                        for (k, l) in m.row(i) {
                            for (yv, rv) in yr.iter_mut().zip(&rho[k * d..(k + 1) * d]) {
                                *yv += l * rv;
                            }
                        }
                    }
                    for i in 0..d {
                        for j in 0..d {
                            let s: C64 = m.row(i).map(|(k, l)| l * y[j * d + k].conj()).sum();
                            out[i * d + j] += s;
                        }
                    }
                }
            }
        }
    }
}

/// `out = X + X†` with `X = -i H_eff(t) ρ` on one sector block.
fn coherent_part(s: &Sector, phase: Option<C64>, rho: &[C64], out: &mut [C64], x: &mut [C64]) {
    let n = s.dim();
    let minus_i = C64::new(0.0, -1.0);
    for p in 0..n {
        let xr = &mut x[p * n..(p + 1) * n];
        xr.iter_mut().for_each(|v| *v = ZERO);
        let mut accumulate = |k: usize, coef: C64| {
            for (xv, rv) in xr.iter_mut().zip(&rho[k * n..(k + 1) * n]) {
                *xv += coef * rv;
            }
        };
        for (k, h) in s.h_eff.row(p) {
            accumulate(k, minus_i * h);
        }
        if let (Some(ph), Some(up), Some(down)) = (phase, &s.raising, &s.lowering) {
            for (k, a) in up.row(p) {
                accumulate(k, minus_i * ph * a);
            }
            for (k, a) in down.row(p) {
                accumulate(k, minus_i * ph.conj() * a);
            }
        }
    }
    for bi in (0..n).step_by(TILE) {
        for bj in (0..n).step_by(TILE) {
            for i in bi..(bi + TILE).min(n) {
                for j in bj..(bj + TILE).min(n) {
                    out[i * n + j] = x[i * n + j] + x[j * n + i].conj();
                }
            }
        }
    }
}

/// `dρ/dt = -i[H, ρ] + Σ_k (L_k ρ L_k† - ½{L_k†L_k, ρ})`.
///
/// `ρ` need not be Hermitian: the generator is applied separately to the
/// Hermitian and anti-Hermitian parts.
pub fn lindblad_rhs(
    rho: &DensityMatrix,
    h: &QOperator,
    collapse_ops: &[QOperator],
) -> Result<DensityMatrix> {
    if rho.tag() != h.tag() {
        return Err(Error::BasisMismatch {
            expected: h.tag(),
            found: rho.tag(),
        });
    }
    let l = Liouvillian::new(h, collapse_ops)?;
    let n = rho.dim() * rho.dim();
    let mut out = vec![ZERO; n];
    let mut scratch = vec![ZERO; n];
    if rho.hermiticity_drift() == 0.0 {
        l.apply(0.0, rho.data(), &mut out, &mut scratch);
        return DensityMatrix::from_raw(rho.tag(), out);
    }
    let d = rho.dim();
    let data = rho.data();
    let part = |sign: f64, scale: C64| -> Vec<C64> {
        (0..n)
            .map(|idx| {
                let (i, j) = (idx / d, idx % d);
                (data[idx] + data[j * d + i].conj() * sign) * scale
            })
            .collect()
    };
    // ρ = A + iB with A = (ρ + ρ†)/2 and B = (ρ - ρ†)/2i
    let a = part(1.0, C64::new(0.5, 0.0));
    let b = part(-1.0, C64::new(0.0, -0.5));
    let mut out_b = vec![ZERO; n];
    l.apply(0.0, &a, &mut out, &mut scratch);
    l.apply(0.0, &b, &mut out_b, &mut scratch);
    for (o, ob) in out.iter_mut().zip(&out_b) {
        *o += C64::new(0.0, 1.0) * ob;
    }
    DensityMatrix::from_raw(rho.tag(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::Ket;
    use crate::hilbert::{
        build_cavity_operators, build_spin_operators, tensor_lift, Factor, HilbertSpace,
    };

    /// Reference dissipator written directly from the definition with dense algebra.
    fn dense_reference(rho: &[C64], h: &[C64], ls: &[Vec<C64>], d: usize) -> Vec<C64> {
        let mm = |a: &[C64], b: &[C64]| {
            let mut o = vec![ZERO; d * d];
            for i in 0..d {
                for k in 0..d {
                    let aik = a[i * d + k];
                    if aik == ZERO {
                        continue;
                    }
                    for j in 0..d {
                        o[i * d + j] += aik * b[k * d + j];
                    }
                }
            }
            o
        };
        let dag = |a: &[C64]| {
            let mut o = vec![ZERO; d * d];
            for i in 0..d {
                for j in 0..d {
                    o[j * d + i] = a[i * d + j].conj();
                }
            }
            o
        };
        let mi = C64::new(0.0, -1.0);
        let hr = mm(h, rho);
        let rh = mm(rho, h);
        let mut out: Vec<C64> = hr.iter().zip(&rh).map(|(a, b)| mi * (a - b)).collect();
        for l in ls {
            let ld = dag(l);
            let lrl = mm(&mm(l, rho), &ld);
            let ldl = mm(&ld, l);
            let a = mm(&ldl, rho);
            let b = mm(rho, &ldl);
            for k in 0..d * d {
                out[k] += lrl[k] - 0.5 * a[k] - 0.5 * b[k];
            }
        }
        out
    }

    fn random_density(tag: BasisTag, seed: u64) -> DensityMatrix {
        // deterministic pseudo-random mixture of two kets
        let d = tag.dim();
        let mut s = seed;
        let mut next = || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = Ket::from_amplitudes(tag, (0..d).map(|_| C64::new(next(), next())).collect())
            .normalized();
        let b = Ket::from_amplitudes(tag, (0..d).map(|_| C64::new(next(), next())).collect())
            .normalized();
        DensityMatrix::from_ket(&a)
            .scaled(0.7)
            .add(&DensityMatrix::from_ket(&b).scaled(0.3))
            .unwrap()
    }

    #[test]
    fn zero_generator_gives_zero_derivative() {
        let s = HilbertSpace::new(3, 3).unwrap();
        let rho = random_density(s.joint_tag(), 1);
        let h = QOperator::zeros(s.joint_tag());
        let d = lindblad_rhs(&rho, &h, &[]).unwrap();
        assert!(d.data().iter().all(|v| *v == ZERO));
    }

    #[test]
    fn matches_dense_definition() {
        let s = HilbertSpace::new(3, 4).unwrap();
        let cav = build_cavity_operators(&s);
        let spin = build_spin_operators(&s);
        let h = tensor_lift(&cav.n_op, &s, Factor::Cavity)
            .unwrap()
            .add(
                &crate::hilbert::tensor_product(&cav.c.add(&cav.c_dag).unwrap(), &spin.jx, &s)
                    .unwrap()
                    .scale_real(0.3),
            )
            .unwrap()
            .add(
                &tensor_lift(&spin.jz, &s, Factor::Spin)
                    .unwrap()
                    .scale_real(0.2),
            )
            .unwrap();
        let l1 = tensor_lift(&cav.c, &s, Factor::Cavity)
            .unwrap()
            .scale_real(0.4f64.sqrt());
        let l2 = tensor_lift(&spin.jz, &s, Factor::Spin)
            .unwrap()
            .scale_real(0.05f64.sqrt());
        // a general jump exercises the fallback path
        let l3 = tensor_lift(&spin.jx, &s, Factor::Spin)
            .unwrap()
            .scale_real(0.1);
        let rho = random_density(s.joint_tag(), 7);
        let ops = [l1, l2, l3];
        let fast = lindblad_rhs(&rho, &h, &ops).unwrap();
        let dense: Vec<Vec<C64>> = ops.iter().map(|o| o.to_dense()).collect();
        let slow = dense_reference(rho.data(), &h.to_dense(), &dense, s.total_dim());
        let err = fast
            .data()
            .iter()
            .zip(&slow)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-13, "max deviation {err}");
        assert!(fast.trace().norm() < 1e-13);
        assert!(fast.hermiticity_drift() < 1e-14);
    }

    #[test]
    fn photon_loss_rate_from_single_photon() {
        let s = HilbertSpace::new(1, 4).unwrap();
        let cav = build_cavity_operators(&s);
        let kappa: f64 = 0.37;
        let l = tensor_lift(&cav.c, &s, Factor::Cavity)
            .unwrap()
            .scale_real(kappa.sqrt());
        let rho = DensityMatrix::from_ket(&Ket::basis(s.joint_tag(), s.index(1, 0)));
        let h = QOperator::zeros(s.joint_tag());
        let d = lindblad_rhs(&rho, &h, &[l]).unwrap();
        let n = tensor_lift(&cav.n_op, &s, Factor::Cavity).unwrap();
        let dn = d.expect(&n).unwrap();
        assert!((dn.re + kappa).abs() < 1e-15);
    }

    #[test]
    fn dephasing_damps_coherences_quadratically() {
        let s = HilbertSpace::new(4, 2).unwrap();
        let spin = build_spin_operators(&s);
        let gamma: f64 = 0.8;
        let l = tensor_lift(&spin.jz, &s, Factor::Spin)
            .unwrap()
            .scale_real((gamma / 2.0).sqrt());
        let h = QOperator::zeros(s.joint_tag());
        for (k1, k2) in [(0, 1), (0, 4), (1, 3), (2, 2)] {
            let mut data = vec![ZERO; s.total_dim().pow(2)];
            let (i, j) = (s.index(0, k1), s.index(0, k2));
            data[i * s.total_dim() + j] = C64::new(1.0, 0.0);
            let rho = DensityMatrix::from_raw(s.joint_tag(), data).unwrap();
            let d = lindblad_rhs(&rho, &h, std::slice::from_ref(&l)).unwrap();
            let dm = s.m_of(k1) - s.m_of(k2);
            let rate = -d.get(i, j).re;
            assert!((rate - gamma / 4.0 * dm * dm).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_mismatched_collapse_basis() {
        let s = HilbertSpace::new(2, 3).unwrap();
        let h = QOperator::zeros(s.joint_tag());
        let bad = build_spin_operators(&s).jz;
        assert!(Liouvillian::new(&h, &[bad]).is_err());
    }
}
