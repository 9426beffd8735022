//! Phase and atom-number sweeps, power-law fits and extrapolation.

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve_with_retry, lambda_from_theta, EvolutionSpec, Frame, Tolerances};
use crate::error::{invalid, Error, Result};
use crate::hilbert::{HilbertSpace, DEFAULT_N_MAX};
use crate::metrics::{db, squeezing_report, theta_opt, SqueezingReport};
use crate::model::DickeParams;

/// Largest atom number a sweep accepts.
pub const MAX_SWEEP_ATOMS: usize = 100;
/// Default atom-number grid.
pub const DEFAULT_N_GRID: [usize; 6] = [10, 16, 25, 40, 63, 100];
/// Fits ignore atom numbers below this.
pub const FIT_MIN_ATOMS: usize = 10;
pub const EXTRAPOLATED: &str = "EXTRAPOLATED";

/// Default phase grid: 25 log-spaced values of `θ/θ_opt` in `[0.1, 2]`.
pub fn default_theta_grid() -> Vec<f64> {
    let (lo, hi, n) = (0.1f64.ln(), 2.0f64.ln(), 25);
    (0..n)
        .map(|k| (lo + (hi - lo) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Theta,
    N,
}

/// Decoherence and detuning expressed relative to `ω_c`. Unset entries keep
/// the value of the base parameters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateRatios {
    pub kappa: Option<f64>,
    pub omega_q: Option<f64>,
    pub gamma_phi: Option<f64>,
}

impl RateRatios {
    pub fn apply(&self, d: &DickeParams) -> DickeParams {
        let w = d.omega_c;
        DickeParams {
            kappa: self.kappa.map_or(d.kappa, |r| r * w),
            omega_q: self.omega_q.map_or(d.omega_q, |r| r * w),
            gamma_phi: self.gamma_phi.map_or(d.gamma_phi, |r| r * w),
            ..*d
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kappa_ratio", self.kappa),
            ("omega_q_ratio", self.omega_q),
            ("gamma_phi_ratio", self.gamma_phi),
        ] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(invalid(name, "must be finite and non-negative"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub kind: SweepKind,
    /// `λ` is replaced per point; `n_atoms` is used by phase sweeps only.
    pub base: DickeParams,
    /// `θ/θ_opt` ratios for phase sweeps, atom numbers for atom sweeps.
    pub grid: Vec<f64>,
    pub ratios: RateRatios,
    /// Atom sweeps run at `theta_rule · θ_opt(N)`.
    pub theta_rule: f64,
    pub n_max: usize,
    pub tolerances: Tolerances,
    pub frame: Frame,
    pub workers: usize,
}

impl SweepSpec {
    pub fn theta(base: DickeParams, grid: Vec<f64>) -> Self {
        Self {
            kind: SweepKind::Theta,
            base,
            grid,
            ratios: RateRatios::default(),
            theta_rule: 1.0,
            n_max: DEFAULT_N_MAX,
            tolerances: Tolerances::default(),
            frame: Frame::default(),
            workers: 1,
        }
    }

    pub fn atoms(base: DickeParams, grid: &[usize], theta_rule: f64) -> Self {
        Self {
            kind: SweepKind::N,
            grid: grid.iter().map(|&n| n as f64).collect(),
            theta_rule,
            ..Self::theta(base, Vec::new())
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(invalid("grid", "must not be empty"));
        }
        if self.grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("grid", "must be strictly increasing"));
        }
        if self.grid.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
            return Err(invalid("grid", "entries must be positive and finite"));
        }
        self.ratios.validate()?;
        if !(self.theta_rule > 0.0 && self.theta_rule.is_finite()) {
            return Err(invalid("theta_rule", "must be positive"));
        }
        if self.workers == 0 {
            return Err(invalid("workers", "must be at least 1"));
        }
        self.tolerances.validate()?;
        let mut base = self.ratios.apply(&self.base);
        base.lambda = 0.0;
        if self.kind == SweepKind::N {
            base.n_atoms = self.grid[0] as usize;
        }
        base.validate()?;
        if self.kind == SweepKind::N {
            for &g in &self.grid {
                if g.fract() != 0.0 || g < 2.0 || g > MAX_SWEEP_ATOMS as f64 {
                    return Err(invalid(
                        "grid",
                        format!("atom numbers must be integers in [2, {MAX_SWEEP_ATOMS}]"),
                    ));
                }
            }
        } else if self.base.n_atoms < 2 {
            return Err(invalid("n_atoms", "phase sweeps need at least two atoms"));
        }
        Ok(())
    }
}

/// One grid point of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_atoms: usize,
    pub theta_ratio: f64,
    pub theta: f64,
    pub lambda: f64,
    pub report: Option<SqueezingReport>,
    pub trace_drift: f64,
    pub hermiticity_drift: f64,
    pub tail_pop: f64,
    pub n_max: usize,
    pub retried: bool,
    pub steps: usize,
    /// `ok`, a diagnostic status of the run, or `error: …`.
    pub status: String,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok" && self.report.is_some()
    }

    pub fn xi_r_sq(&self) -> Option<f64> {
        self.report.map(|r| r.xi_r_sq)
    }

    pub fn db(&self) -> Option<f64> {
        self.report.map(|r| r.xi_r_sq_db)
    }
}

/// Evolves one `(N, θ)` point to the first decoupling time.
pub fn run_point(
    base: &DickeParams,
    n_atoms: usize,
    theta_ratio: f64,
    n_max: usize,
    tolerances: Tolerances,
    frame: Frame,
) -> SweepRow {
    let theta = theta_ratio * theta_opt(n_atoms);
    let mut row = SweepRow {
        n_atoms,
        theta_ratio,
        theta,
        lambda: f64::NAN,
        report: None,
        trace_drift: f64::NAN,
        hermiticity_drift: f64::NAN,
        tail_pop: f64::NAN,
        n_max,
        retried: false,
        steps: 0,
        status: String::new(),
    };
    let outcome = (|| -> Result<()> {
        row.lambda = lambda_from_theta(theta, base.omega_c)?;
        let d = DickeParams {
            lambda: row.lambda,
            n_atoms,
            ..*base
        };
        let mut spec = EvolutionSpec::new(d, HilbertSpace::new(n_atoms, n_max)?);
        spec.tolerances = tolerances;
        spec.frame = frame;
        let res = evolve_with_retry(&spec)?;
        row.trace_drift = res.trace_drift;
        row.hermiticity_drift = res.hermiticity_drift;
        row.tail_pop = res.max_tail;
        row.n_max = res.space.n_max();
        row.retried = res.retried;
        row.steps = res.stats.accepted;
        row.status = res.status.to_string();
        row.report = Some(squeezing_report(&res.spin_state()?, n_atoms)?);
        Ok(())
    })();
    if let Err(e) = outcome {
        row.status = format!("error: {e}");
    }
    info!(
        "N = {n_atoms}, θ/θ_opt = {theta_ratio:.4}: {} dB ({})",
        row.db().map_or("-".into(), |v| format!("{v:.3}")),
        row.status
    );
    row
}

fn run_grid(spec: &SweepSpec, points: Vec<(usize, f64)>) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let base = spec.ratios.apply(&spec.base);
    let run =
        |&(n, r): &(usize, f64)| run_point(&base, n, r, spec.n_max, spec.tolerances, spec.frame);
    if spec.workers == 1 {
        return Ok(points.iter().map(run).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| invalid("workers", e.to_string()))?;
    Ok(pool.install(|| points.par_iter().map(run).collect()))
}

/// Phase sweep at fixed `N`: one run per `θ/θ_opt` ratio, in grid order.
pub fn run_theta_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.kind != SweepKind::Theta {
        return Err(invalid("kind", "expected a phase sweep"));
    }
    let n = spec.base.n_atoms;
    run_grid(spec, spec.grid.iter().map(|&r| (n, r)).collect())
}

/// Atom-number sweep at `θ = theta_rule · θ_opt(N)`, in grid order.
pub fn run_n_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.kind != SweepKind::N {
        return Err(invalid("kind", "expected an atom-number sweep"));
    }
    run_grid(
        spec,
        spec.grid
            .iter()
            .map(|&n| (n as usize, spec.theta_rule))
            .collect(),
    )
}

/// Atom-number sweep that keeps, for every `N`, the best row of a phase
/// scan over `ratios` (`θ/θ_opt`). The spec's `theta_rule` is ignored.
pub fn run_n_sweep_optimized(spec: &SweepSpec, ratios: &[f64]) -> Result<Vec<SweepRow>> {
    if spec.kind != SweepKind::N {
        return Err(invalid("kind", "expected an atom-number sweep"));
    }
    if ratios.is_empty() || ratios.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(invalid(
            "theta_search",
            "ratios must be positive and finite",
        ));
    }
    let points: Vec<(usize, f64)> = spec
        .grid
        .iter()
        .flat_map(|&n| ratios.iter().map(move |&r| (n as usize, r)))
        .collect();
    let rows = run_grid(spec, points)?;
    Ok(rows
        .chunks(ratios.len())
        .map(|scan| best_row(scan).unwrap_or(&scan[0]).clone())
        .collect())
}

/// Row with the largest squeezing in dB among successful rows.
pub fn best_row(rows: &[SweepRow]) -> Option<&SweepRow> {
    rows.iter()
        .filter(|r| r.is_ok())
        .max_by(|a, b| a.db().partial_cmp(&b.db()).expect("finite dB"))
}

/// Least-squares fit `ξ² = a N^b` in log-log space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub a: f64,
    pub b: f64,
    pub r_squared: f64,
    pub n_points: usize,
    /// `ln ξ² - (ln a + b ln N)` per point.
    pub residuals: Vec<f64>,
    pub n_min: f64,
    pub n_max: f64,
}

impl FitResult {
    pub fn eval(&self, n: f64) -> f64 {
        self.a * n.powf(self.b)
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

pub fn fit_power_law(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(n, y)| !(n > 0.0 && y > 0.0)) {
        return Err(Error::DegenerateFit("all values must be positive".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-300 {
        return Err(Error::DegenerateFit("all atom numbers are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let ln_a = my - b * mx;
    let residuals: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - (ln_a + b * x))
        .collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    let n_min = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let n_max = points.iter().map(|p| p.0).fold(0.0, f64::max);
    Ok(FitResult {
        a: ln_a.exp(),
        b,
        r_squared,
        n_points: points.len(),
        residuals,
        n_min,
        n_max,
    })
}

/// `(N, ξ_R²)` of the rows that enter a fit: successful runs with `N ≥ 10`.
pub fn fit_points(rows: &[SweepRow]) -> Vec<(f64, f64)> {
    rows.iter()
        .filter(|r| r.is_ok() && r.n_atoms >= FIT_MIN_ATOMS)
        .filter_map(|r| r.xi_r_sq().map(|x| (r.n_atoms as f64, x)))
        .collect()
}

/// Fit over the usable rows of an atom sweep.
pub fn fit_rows(rows: &[SweepRow]) -> Result<FitResult> {
    fit_power_law(&fit_points(rows))
}

/// Fits with the lowest or the highest atom number left out, to show how
/// much the exponent depends on the fitted range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeSensitivity {
    pub without_smallest: Option<FitResult>,
    pub without_largest: Option<FitResult>,
}

pub fn fit_range_sensitivity(points: &[(f64, f64)]) -> RangeSensitivity {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite N"));
    let n = sorted.len();
    let sub = |r: std::ops::Range<usize>| {
        if n == 0 {
            None
        } else {
            fit_power_law(&sorted[r]).ok()
        }
    };
    RangeSensitivity {
        without_smallest: sub(1.min(n)..n),
        without_largest: sub(0..n.saturating_sub(1)),
    }
}

/// Fit evaluated beyond the simulated range. Never a simulation result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub label: String,
    pub n_target: f64,
    pub xi_r_sq: f64,
    pub db: f64,
    pub a: f64,
    pub b: f64,
}

pub fn extrapolate(fit: &FitResult, n_target: f64) -> Result<Extrapolation> {
    if !(n_target > 0.0) {
        return Err(invalid("n_target", "must be positive"));
    }
    let xi = fit.eval(n_target);
    Ok(Extrapolation {
        label: EXTRAPOLATED.to_string(),
        n_target,
        xi_r_sq: xi,
        db: db(xi)?,
        a: fit.a,
        b: fit.b,
    })
}

/// A fit given only by its coefficients.
pub fn printed_fit(a: f64, b: f64) -> FitResult {
    FitResult {
        a,
        b,
        r_squared: f64::NAN,
        n_points: 0,
        residuals: Vec::new(),
        n_min: f64::NAN,
        n_max: f64::NAN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn base(n: usize) -> DickeParams {
        DickeParams {
            omega_c: 1.0,
            omega_q: 0.0,
            lambda: 0.0,
            n_atoms: n,
            kappa: 0.0,
            gamma_phi: 0.0,
        }
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let pts: Vec<(f64, f64)> = [10.0, 20.0, 50.0, 100.0]
            .iter()
            .map(|&n: &f64| (n, 2.0 * n.powf(-0.5)))
            .collect();
        let f = fit_power_law(&pts).unwrap();
        assert!((f.a - 2.0).abs() < 1e-10);
        assert!((f.b + 0.5).abs() < 1e-10);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(f.max_abs_residual() < 1e-12);
        assert!((f.eval(50.0) - pts[2].1).abs() < 1e-12);
    }

    #[test]
    fn noisy_exponent_stays_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(20240611);
        let grid = DEFAULT_N_GRID;
        for _ in 0..100 {
            let pts: Vec<(f64, f64)> = grid
                .iter()
                .map(|&n| {
                    let n = n as f64;
                    let noise: f64 = rng.gen_range(-0.01..0.01);
                    (n, 1.4 * n.powf(-2.0 / 3.0) * (1.0 + noise))
                })
                .collect();
            let f = fit_power_law(&pts).unwrap();
            assert!((f.b + 2.0 / 3.0).abs() < 0.02, "b = {}", f.b);
        }
    }

    #[test]
    fn degenerate_fits_are_rejected() {
        assert!(fit_power_law(&[(10.0, 0.1), (20.0, 0.05)]).is_err());
        assert!(fit_power_law(&[(10.0, 0.1), (10.0, 0.2), (10.0, 0.3)]).is_err());
        assert!(fit_power_law(&[(10.0, 0.1), (20.0, -0.2), (30.0, 0.3)]).is_err());
    }

    #[test]
    fn extrapolation_is_labeled_arithmetic() {
        let e = extrapolate(&printed_fit(1.4, -2.0 / 3.0), 1e6).unwrap();
        assert_eq!(e.label, EXTRAPOLATED);
        assert!((e.db - 38.54).abs() < 0.01);
        let e = extrapolate(&printed_fit(1.4, -0.64), 1e6).unwrap();
        assert!((e.db - 36.9).abs() < 0.05);
        let e = extrapolate(&printed_fit(1.4, -0.46), 1e6).unwrap();
        assert!((e.db - 26.1).abs() < 0.1);
    }

    #[test]
    fn default_grids() {
        let g = default_theta_grid();
        assert_eq!(g.len(), 25);
        assert!((g[0] - 0.1).abs() < 1e-12 && (g[24] - 2.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn spec_validation() {
        let mut s = SweepSpec::theta(base(10), vec![0.5, 0.4]);
        assert!(s.validate().is_err());
        s.grid = vec![];
        assert!(s.validate().is_err());
        s.grid = vec![0.5, 1.0];
        s.ratios.kappa = Some(-0.1);
        assert!(s.validate().is_err());
        s.ratios.kappa = Some(0.1);
        assert!(s.validate().is_ok());
        let a = SweepSpec::atoms(base(1), &[10, 200], 1.0);
        assert!(a.validate().is_err());
        assert!(run_theta_sweep(&a).is_err());
    }

    #[test]
    fn rate_ratios_scale_with_cavity_frequency() {
        let mut b = base(4);
        b.omega_c = 2.0;
        b.kappa = 0.3;
        let r = RateRatios {
            kappa: None,
            omega_q: Some(0.1),
            gamma_phi: Some(0.05),
        };
        let d = r.apply(&b);
        assert_eq!(d.kappa, 0.3);
        assert!((d.omega_q - 0.2).abs() < 1e-15);
        assert!((d.gamma_phi - 0.1).abs() < 1e-15);
    }

    #[test]
    fn small_sweep_is_ordered_and_deterministic() {
        let mut s = SweepSpec::theta(base(6), vec![0.5, 1.0, 1.5]);
        s.n_max = 10;
        let a = run_theta_sweep(&s).unwrap();
        s.workers = 2;
        let b = run_theta_sweep(&s).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.is_ok()));
        assert_eq!(
            a.iter().map(|r| r.theta_ratio).collect::<Vec<_>>(),
            vec![0.5, 1.0, 1.5]
        );
        let atoms = run_n_sweep(&SweepSpec {
            n_max: 10,
            ..SweepSpec::atoms(base(0), &[4, 6, 8], 1.0)
        })
        .unwrap();
        assert_eq!(atoms[1], a[1]);
        let best = run_n_sweep_optimized(
            &SweepSpec {
                n_max: 10,
                ..SweepSpec::atoms(base(0), &[6], 1.0)
            },
            &[0.5, 1.0, 1.5],
        )
        .unwrap();
        assert_eq!(best.len(), 1);
        assert_eq!(&best[0], best_row(&a).unwrap());
    }

    #[test]
    fn fit_excludes_failed_and_small_rows() {
        let row = |n: usize, ok: bool| SweepRow {
            n_atoms: n,
            theta_ratio: 1.0,
            theta: 0.1,
            lambda: 0.1,
            report: Some(SqueezingReport {
                xi_s_sq: 0.5,
                xi_s_sq_printed: 0.0,
                xi_r_sq: (n as f64).powf(-0.5),
                xi_r_sq_db: 0.0,
                j_vector: [0.0; 3],
                n_a: 0.0,
                n_a_sq: 0.0,
                xi_min_var_sq: 0.5,
                delta_phi: 0.0,
            }),
            trace_drift: 0.0,
            hermiticity_drift: 0.0,
            tail_pop: 0.0,
            n_max: 16,
            retried: false,
            steps: 1,
            status: if ok {
                "ok".into()
            } else {
                "truncation_unsafe".into()
            },
        };
        let rows = vec![
            row(4, true),
            row(10, true),
            row(20, false),
            row(40, true),
            row(80, true),
        ];
        let pts = fit_points(&rows);
        assert_eq!(
            pts.iter().map(|p| p.0).collect::<Vec<_>>(),
            vec![10.0, 40.0, 80.0]
        );
        let f = fit_rows(&rows).unwrap();
        assert!((f.b + 0.5).abs() < 1e-12);
        let sens = fit_range_sensitivity(&pts);
        assert!(sens.without_smallest.is_none());
        assert!(sens.without_largest.is_none());
    }
}
