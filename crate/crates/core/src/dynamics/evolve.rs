//! Master-equation propagation with conservation and truncation diagnostics.

use std::fmt;

use log::{debug, warn};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::integrator::{Dopri5, IntegratorStats, Tolerances};
use super::lindblad::Liouvillian;
use crate::density::DensityMatrix;
use crate::error::{invalid, Error, Result};
use crate::hilbert::{
    build_cavity_operators, build_spin_operators, tensor_lift, Factor, HilbertSpace,
};
use crate::model::{build_dicke_hamiltonian, raising_coupling, DickeParams};
use crate::operator::QOperator;

/// Run is marked failed above this trace drift.
pub const TRACE_LIMIT: f64 = 1e-6;
/// Run is marked failed above this Hermiticity drift.
pub const HERMITICITY_LIMIT: f64 = 1e-8;
/// Smallest admissible eigenvalue of the final state.
pub const POSITIVITY_LIMIT: f64 = 1e-7;
/// Default bound on the population of the two highest Fock levels.
pub const DEFAULT_TAIL_LIMIT: f64 = 1e-4;
pub const DEFAULT_SAMPLES_PER_PERIOD: usize = 200;

/// Reference frame of the propagation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Full Dicke Hamiltonian.
    #[default]
    Lab,
    /// Rotating with `ω_c c†c`: only the modulated coupling and `ω_q J_z` remain.
    Interaction,
}

#[derive(Clone, Debug)]
pub struct EvolutionSpec {
    pub dicke: DickeParams,
    pub space: HilbertSpace,
    /// Defaults to the first decoupling time `2π/ω_c`.
    pub t_final: Option<f64>,
    pub tolerances: Tolerances,
    /// Defaults to `|0⟩ ⊗ |J, -J⟩`.
    pub initial_state: Option<DensityMatrix>,
    pub frame: Frame,
    pub samples_per_period: usize,
    /// Retain the full state at every sample time.
    pub keep_snapshots: bool,
    pub check_positivity: bool,
    /// Stop as soon as the Fock tail exceeds `tail_limit`.
    pub abort_on_truncation: bool,
    pub tail_limit: f64,
}

impl EvolutionSpec {
    pub fn new(dicke: DickeParams, space: HilbertSpace) -> Self {
        Self {
            dicke,
            space,
            t_final: None,
            tolerances: Tolerances::default(),
            initial_state: None,
            frame: Frame::default(),
            samples_per_period: DEFAULT_SAMPLES_PER_PERIOD,
            keep_snapshots: false,
            check_positivity: true,
            abort_on_truncation: true,
            tail_limit: DEFAULT_TAIL_LIMIT,
        }
    }

    pub fn t_final(&self) -> f64 {
        self.t_final.unwrap_or_else(|| self.dicke.period())
    }

    pub fn validate(&self) -> Result<()> {
        self.dicke.validate()?;
        self.tolerances.validate()?;
        if self.dicke.n_atoms != self.space.n_atoms() {
            return Err(invalid("n_atoms", "parameters and Hilbert space disagree"));
        }
        let t = self.t_final();
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid("t_final", "must be positive and finite"));
        }
        if self.samples_per_period == 0 {
            return Err(invalid("samples_per_period", "must be at least 1"));
        }
        if !(self.tail_limit > 0.0) {
            return Err(invalid("tail_limit", "must be positive"));
        }
        if let Some(rho) = &self.initial_state {
            if rho.tag() != self.space.joint_tag() {
                return Err(Error::BasisMismatch {
                    expected: self.space.joint_tag(),
                    found: rho.tag(),
                });
            }
            let tr = rho.trace();
            if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
                return Err(Error::NotNormalized { trace: tr.re });
            }
            if rho.hermiticity_drift() > 1e-10 || !rho.is_positive_above(1e-10) {
                return Err(invalid(
                    "initial_state",
                    "must be Hermitian and positive semidefinite",
                ));
            }
        }
        Ok(())
    }
}

/// Outcome classification of one evolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    TraceDrift,
    HermiticityDrift,
    NotPositive,
    TruncationUnsafe,
    IntegrationFailed,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::TraceDrift => "trace_drift",
            RunStatus::HermiticityDrift => "hermiticity_drift",
            RunStatus::NotPositive => "not_positive",
            RunStatus::TruncationUnsafe => "truncation_unsafe",
            RunStatus::IntegrationFailed => "integration_failed",
        }
    }

    pub fn is_ok(&self) -> bool {
        *self == RunStatus::Ok
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Positivity of the final state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Positivity {
    NotChecked,
    /// All eigenvalues exceed `-POSITIVITY_LIMIT`.
    Passed,
    Failed,
}

#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub cavity_photons: Vec<f64>,
    pub tail_population: Vec<f64>,
    pub snapshots: Vec<DensityMatrix>,
    /// State at `t_final`, always in the lab frame.
    pub final_state: DensityMatrix,
    pub trace_drift: f64,
    pub hermiticity_drift: f64,
    pub max_tail: f64,
    pub positivity: Positivity,
    pub status: RunStatus,
    pub stats: IntegratorStats,
    /// Space actually used (after any truncation retry).
    pub space: HilbertSpace,
    pub retried: bool,
    pub t_final: f64,
}

impl EvolutionResult {
    pub fn spin_state(&self) -> Result<DensityMatrix> {
        self.final_state.trace_out_cavity(&self.space)
    }
}

/// Collapse operators `√(Γ_φ/2) I⊗J_z` and `√κ c⊗I`; zero rates are skipped.
pub fn collapse_operators(d: &DickeParams, space: &HilbertSpace) -> Result<Vec<QOperator>> {
    let mut ops = Vec::new();
    if d.gamma_phi > 0.0 {
        let jz = tensor_lift(&build_spin_operators(space).jz, space, Factor::Spin)?;
        ops.push(jz.scale_real((d.gamma_phi / 2.0).sqrt()));
    }
    if d.kappa > 0.0 {
        let c = tensor_lift(&build_cavity_operators(space).c, space, Factor::Cavity)?;
        ops.push(c.scale_real(d.kappa.sqrt()));
    }
    Ok(ops)
}

/// Generator of the master equation in the requested frame.
pub fn build_liouvillian(
    d: &DickeParams,
    space: &HilbertSpace,
    frame: Frame,
) -> Result<Liouvillian> {
    let collapse = collapse_operators(d, space)?;
    match frame {
        Frame::Lab => Liouvillian::new(&build_dicke_hamiltonian(d, space)?, &collapse),
        Frame::Interaction => {
            let jz = tensor_lift(&build_spin_operators(space).jz, space, Factor::Spin)?;
            let h0 = jz.scale_real(d.omega_q);
            Liouvillian::new(&h0, &collapse)?
                .with_modulated(&raising_coupling(d, space)?, d.omega_c)
        }
    }
}

/// Basis indices split by the parity of `n + (m + J)`, which the Dicke
/// Hamiltonian conserves and photon loss flips.
pub fn parity_sectors(space: &HilbertSpace) -> Vec<Vec<usize>> {
    let mut sectors = vec![Vec::new(), Vec::new()];
    for n in 0..space.n_max() {
        for k in 0..space.spin_dim() {
            sectors[(n + k) % 2].push(space.index(n, k));
        }
    }
    sectors
}

/// `ρ_ij ← e^{-iω_c t (n_i - n_j)} ρ_ij`, the map from the interaction to the lab frame.
fn rotate_to_lab(data: &mut [C64], space: &HilbertSpace, omega_c: f64, t: f64) {
    let d = space.total_dim();
    let sd = space.spin_dim();
    let phases: Vec<C64> = (0..d)
        .map(|i| C64::from_polar(1.0, -omega_c * t * (i / sd) as f64))
        .collect();
    for i in 0..d {
        for j in 0..d {
            data[i * d + j] *= phases[i] * phases[j].conj();
        }
    }
}

fn diag_observables(diag: impl Fn(usize) -> f64, space: &HilbertSpace) -> (f64, f64, f64) {
    let sd = space.spin_dim();
    let nm = space.n_max();
    let mut trace = 0.0;
    let mut photons = 0.0;
    let mut tail = 0.0;
    for n in 0..nm {
        let pop: f64 = (0..sd).map(|k| diag(n * sd + k)).sum();
        trace += pop;
        photons += n as f64 * pop;
        if n + 2 >= nm {
            tail += pop;
        }
    }
    (trace, photons, tail)
}

struct Samples {
    times: Vec<f64>,
    photons: Vec<f64>,
    tails: Vec<f64>,
}

impl Samples {
    fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            photons: Vec::with_capacity(n),
            tails: Vec::with_capacity(n),
        }
    }

    /// Stores normalized observables; returns the trace and the tail.
    fn record(&mut self, t: f64, diag: &dyn Fn(usize) -> f64, space: &HilbertSpace) -> (f64, f64) {
        let (tr, n, tail) = diag_observables(diag, space);
        self.times.push(t);
        self.photons.push(n / tr);
        self.tails.push(tail / tr);
        (tr, tail / tr)
    }
}

/// Propagates `spec` to its final time.
///
/// Returns `Err(TruncationUnsafe)` when `abort_on_truncation` is set and the
/// Fock tail crosses the limit; other diagnostics end up in `status`.
pub fn evolve_master(spec: &EvolutionSpec) -> Result<EvolutionResult> {
    spec.validate()?;
    let space = spec.space;
    let t_final = spec.t_final();
    let omega_c = spec.dicke.omega_c;
    let rho0 = spec
        .initial_state
        .clone()
        .unwrap_or_else(|| DensityMatrix::ground(&space));
    let full = build_liouvillian(&spec.dicke, &space, spec.frame)?;
    // the parity blocks suffice unless the initial state mixes them
    let (liouvillian, mut y) = match full.clone().partitioned(parity_sectors(&space)) {
        Ok(l) => match l.pack(rho0.data()) {
            Some(packed) => (l, packed),
            None => (full, rho0.into_data()),
        },
        Err(_) => (full, rho0.into_data()),
    };
    let lv = &liouvillian;

    let dt_sample = spec.dicke.period() / spec.samples_per_period as f64;
    let n_samples = (t_final / dt_sample + 1e-9).floor() as usize;
    let mut samples = Samples::with_capacity(n_samples + 2);
    let mut snapshots = Vec::new();
    let mut trace_drift: f64 = 0.0;
    let mut herm_drift: f64 = 0.0;

    let (tr0, _) = samples.record(0.0, &|i| y[lv.diag_index(i)].re, &space);
    trace_drift = trace_drift.max((tr0 - 1.0).abs());
    if spec.keep_snapshots {
        snapshots.push(DensityMatrix::from_raw(space.joint_tag(), lv.unpack(&y))?);
    }

    let mut next_sample = 1usize;
    let mut scratch = vec![C64::new(0.0, 0.0); lv.scratch_len()];
    let mut solver = Dopri5::new(spec.tolerances, lv.state_len());
    let tail_limit = spec.tail_limit;
    let mut max_tail: f64 = 0.0;
    let mut tail_error = None;

    let outcome = solver.integrate(
        |t, rho, out| lv.apply(t, rho, out, &mut scratch),
        0.0,
        &mut y,
        t_final,
        |step| {
            let t_end = step.t0 + step.h;
            while next_sample <= n_samples
                && next_sample as f64 * dt_sample <= t_end + 1e-12 * t_final
            {
                let ts = (next_sample as f64 * dt_sample).min(t_end);
                let (tr, tail) =
                    samples.record(ts, &|i| step.component(ts, lv.diag_index(i)).re, &space);
                trace_drift = trace_drift.max((tr - 1.0).abs());
                max_tail = max_tail.max(tail);
                if spec.keep_snapshots {
                    let mut packed = vec![C64::new(0.0, 0.0); lv.state_len()];
                    step.full(ts, &mut packed);
                    let mut data = lv.unpack(&packed);
                    if spec.frame == Frame::Interaction {
                        rotate_to_lab(&mut data, &space, omega_c, ts);
                    }
                    snapshots.push(DensityMatrix::from_raw(space.joint_tag(), data)?);
                }
                next_sample += 1;
            }
            let end = step.end_state();
            let (tr, _, tail) = diag_observables(|i| end[lv.diag_index(i)].re, &space);
            trace_drift = trace_drift.max((tr - 1.0).abs());
            max_tail = max_tail.max(tail / tr);
            herm_drift = herm_drift.max(lv.hermiticity_drift(end));
            if spec.abort_on_truncation && max_tail > tail_limit {
                let e = Error::TruncationUnsafe {
                    tail: max_tail,
                    limit: tail_limit,
                    n_max: space.n_max(),
                };
                tail_error = Some(max_tail);
                return Err(e);
            }
            Ok(())
        },
    );

    let stats = solver.stats;
    let mut status = RunStatus::Ok;
    match outcome {
        Ok(()) => {}
        Err(e @ Error::TruncationUnsafe { .. }) if tail_error.is_some() => return Err(e),
        Err(Error::Integration { t, reason }) => {
            warn!("integration stopped at t = {t:e}: {reason}");
            status = RunStatus::IntegrationFailed;
        }
        Err(e) => return Err(e),
    }

    // the last sample may coincide with t_final
    let last = samples.times.last().copied();
    if last.is_none_or(|t| (t - t_final).abs() > 1e-12 * t_final) && status.is_ok() {
        let (tr, _) = samples.record(t_final, &|i| y[lv.diag_index(i)].re, &space);
        trace_drift = trace_drift.max((tr - 1.0).abs());
    }

    let mut y = lv.unpack(&y);
    if spec.frame == Frame::Interaction {
        rotate_to_lab(&mut y, &space, omega_c, t_final);
    }
    let final_state = DensityMatrix::from_raw(space.joint_tag(), y)?;

    let positivity = if spec.check_positivity && status.is_ok() {
        if final_state.is_positive_above(POSITIVITY_LIMIT) {
            Positivity::Passed
        } else {
            Positivity::Failed
        }
    } else {
        Positivity::NotChecked
    };

    if status.is_ok() {
        status = if trace_drift >= TRACE_LIMIT {
            RunStatus::TraceDrift
        } else if herm_drift >= HERMITICITY_LIMIT {
            RunStatus::HermiticityDrift
        } else if positivity == Positivity::Failed {
            RunStatus::NotPositive
        } else if max_tail >= tail_limit {
            RunStatus::TruncationUnsafe
        } else {
            RunStatus::Ok
        };
    }
    debug!(
        "N = {}, n_max = {}: {} steps ({} rejected), status {status}",
        space.n_atoms(),
        space.n_max(),
        stats.accepted,
        stats.rejected
    );

    Ok(EvolutionResult {
        times: samples.times,
        cavity_photons: samples.photons,
        tail_population: samples.tails,
        snapshots,
        final_state,
        trace_drift,
        hermiticity_drift: herm_drift,
        max_tail,
        positivity,
        status,
        stats,
        space,
        retried: false,
        t_final,
    })
}

/// Fock cutoff used for the single retry after a truncation abort: 1.5×,
/// rounded up.
pub fn retry_n_max(n_max: usize) -> usize {
    n_max + n_max.div_ceil(2)
}

/// [`evolve_master`] with one retry at a larger cutoff when the Fock tail is
/// populated. A second failure is reported through `status`.
pub fn evolve_with_retry(spec: &EvolutionSpec) -> Result<EvolutionResult> {
    match evolve_master(spec) {
        Err(Error::TruncationUnsafe { tail, n_max, .. }) if spec.initial_state.is_none() => {
            let bigger = retry_n_max(n_max);
            debug!("tail {tail:e} at n_max = {n_max}, retrying with {bigger}");
            let mut retry = spec.clone();
            retry.space = spec.space.with_n_max(bigger)?;
            retry.abort_on_truncation = false;
            let mut res = evolve_master(&retry)?;
            res.retried = true;
            Ok(res)
        }
        other => other,
    }
}

/// Cavity-spin disentanglement at the end of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecouplingReport {
    pub photons: f64,
    pub spin_purity: f64,
    /// `photons < 1e-6` and `spin_purity > 0.999`.
    pub decoupled: bool,
}

pub fn decoupling_check(result: &EvolutionResult) -> Result<DecouplingReport> {
    let cav = build_cavity_operators(&result.space);
    let n = tensor_lift(&cav.n_op, &result.space, Factor::Cavity)?;
    let photons = result.final_state.expect(&n)?.re;
    let spin_purity = result.spin_state()?.purity();
    Ok(DecouplingReport {
        photons,
        spin_purity,
        decoupled: photons < 1e-6 && spin_purity > 0.999,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::Ket;
    use crate::dynamics::geometric::{ideal_state, lambda_from_theta, theta_of_t};

    fn ideal(n_atoms: usize, lambda: f64) -> DickeParams {
        DickeParams {
            omega_c: 1.0,
            omega_q: 0.0,
            lambda,
            n_atoms,
            kappa: 0.0,
            gamma_phi: 0.0,
        }
    }

    #[test]
    fn packed_and_full_layouts_agree() {
        let s = HilbertSpace::new(3, 5).unwrap();
        let d = DickeParams {
            omega_q: 0.2,
            kappa: 0.1,
            gamma_phi: 0.05,
            ..ideal(3, 0.15)
        };
        let sectors = parity_sectors(&s);
        let ket = |sector: &[usize], seed: f64| {
            let mut amps = vec![C64::new(0.0, 0.0); s.total_dim()];
            for (k, &i) in sector.iter().enumerate() {
                let x = seed + k as f64;
                amps[i] = C64::new((1.3 * x).sin(), (0.7 * x).cos());
            }
            Ket::from_amplitudes(s.joint_tag(), amps).normalized()
        };
        let rho = DensityMatrix::from_ket(&ket(&sectors[0], 0.3))
            .scaled(0.6)
            .add(&DensityMatrix::from_ket(&ket(&sectors[1], 1.1)).scaled(0.4))
            .unwrap();
        for frame in [Frame::Lab, Frame::Interaction] {
            let full = build_liouvillian(&d, &s, frame).unwrap();
            let packed = build_liouvillian(&d, &s, frame)
                .unwrap()
                .partitioned(sectors.clone())
                .unwrap();
            assert!(packed.state_len() < full.state_len());
            let mut out_full = vec![C64::new(0.0, 0.0); full.state_len()];
            let mut scratch = vec![C64::new(0.0, 0.0); full.scratch_len()];
            full.apply(0.7, rho.data(), &mut out_full, &mut scratch);
            let p = packed.pack(rho.data()).unwrap();
            let mut out_p = vec![C64::new(0.0, 0.0); packed.state_len()];
            let mut scratch = vec![C64::new(0.0, 0.0); packed.scratch_len()];
            packed.apply(0.7, &p, &mut out_p, &mut scratch);
            let diff = packed
                .unpack(&out_p)
                .iter()
                .zip(&out_full)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(diff < 1e-13, "{frame:?}: {diff}");
        }
    }

    #[test]
    fn no_coupling_leaves_ground_state() {
        let s = HilbertSpace::new(3, 4).unwrap();
        for frame in [Frame::Lab, Frame::Interaction] {
            let mut spec = EvolutionSpec::new(ideal(3, 0.0), s);
            spec.frame = frame;
            let r = evolve_master(&spec).unwrap();
            let diff = r
                .final_state
                .data()
                .iter()
                .zip(DensityMatrix::ground(&s).data())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(diff < 1e-12);
            assert!(r.cavity_photons.iter().all(|&n| n == 0.0));
            assert_eq!(r.status, RunStatus::Ok);
        }
    }

    #[test]
    fn ideal_run_matches_closed_form() {
        let s = HilbertSpace::new(4, 12).unwrap();
        let lambda = lambda_from_theta(0.4, 1.0).unwrap();
        for frame in [Frame::Lab, Frame::Interaction] {
            let mut spec = EvolutionSpec::new(ideal(4, lambda), s);
            spec.frame = frame;
            let r = evolve_master(&spec).unwrap();
            let psi = ideal_state(lambda, 1.0, r.t_final, &s).unwrap();
            let f = r.final_state.fidelity_with_ket(&psi).unwrap();
            assert!(f > 0.999_999, "{frame:?}: fidelity {f}");
            let dc = decoupling_check(&r).unwrap();
            assert!(dc.decoupled, "{dc:?}");
            assert!((theta_of_t(r.t_final, lambda, 1.0) - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn photon_number_follows_displacement() {
        // ⟨n⟩(t) = (2λ/ω)² |α(t)|² ⟨J_x²⟩ with ⟨J_x²⟩ = N/4 on |J,-J⟩
        let s = HilbertSpace::new(2, 14).unwrap();
        let lambda = 0.1;
        let spec = EvolutionSpec::new(ideal(2, lambda), s);
        let r = evolve_master(&spec).unwrap();
        for (&t, &n) in r.times.iter().zip(&r.cavity_photons) {
            let a = crate::dynamics::geometric::alpha_of_t(t, 1.0).norm_sqr();
            let expected = (2.0 * lambda).powi(2) * a * 0.5;
            assert!((n - expected).abs() < 1e-6, "t = {t}: {n} vs {expected}");
        }
        assert_eq!(r.times.len(), DEFAULT_SAMPLES_PER_PERIOD + 1);
    }

    #[test]
    fn cavity_decay_leaves_residual_photons() {
        let s = HilbertSpace::new(4, 12).unwrap();
        let mut d = ideal(4, 0.1);
        d.kappa = 0.1;
        let r = evolve_master(&EvolutionSpec::new(d, s)).unwrap();
        let dc = decoupling_check(&r).unwrap();
        assert!(dc.photons > 1e-6);
        assert!(r.trace_drift < TRACE_LIMIT);
        assert_eq!(r.positivity, Positivity::Passed);
    }

    #[test]
    fn truncation_guard_and_retry() {
        let s = HilbertSpace::new(6, 3).unwrap();
        let spec = EvolutionSpec::new(ideal(6, 0.3), s);
        assert!(matches!(
            evolve_master(&spec),
            Err(Error::TruncationUnsafe { n_max: 3, .. })
        ));
        let r = evolve_with_retry(&spec).unwrap();
        assert!(r.retried);
        assert_eq!(r.space.n_max(), 5);
        assert_eq!(retry_n_max(16), 24);
    }

    #[test]
    fn rejects_mismatched_space() {
        let s = HilbertSpace::new(3, 4).unwrap();
        assert!(evolve_master(&EvolutionSpec::new(ideal(4, 0.1), s)).is_err());
    }
}
