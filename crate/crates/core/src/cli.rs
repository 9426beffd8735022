//! Command execution behind the `dicke-squeeze` binary.

use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use serde::Serialize;

use crate::config::{Command, RunConfig};
use crate::dynamics::{decoupling_check, evolve_with_retry, lambda_from_theta, EvolutionSpec};
use crate::elimination::check_elimination;
use crate::error::{Error, Result};
use crate::hilbert::HilbertSpace;
use crate::metrics::{squeezing_report, theta_opt};
use crate::model::{all_presets, preset, PhysicalParams, PresetName, TWO_PI};
use crate::output::{
    read_results, write_atomic, write_json, write_results, Diagnostics, FitRecord, RunRecord,
    FIT_FILE, RUN_FILE,
};
use crate::sweeps::{
    best_row, extrapolate, fit_points, fit_power_law, fit_range_sensitivity, printed_fit,
    run_n_sweep, run_n_sweep_optimized, run_theta_sweep, FitResult, SweepRow, FIT_MIN_ATOMS,
};
use crate::VERSION;

/// Whether the physics diagnostics of a run all passed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    DiagnosticFailure,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::DiagnosticFailure => 2,
        }
    }

    fn from_ok(ok: bool) -> Self {
        if ok {
            Outcome::Success
        } else {
            Outcome::DiagnosticFailure
        }
    }
}

fn record<D: Serialize>(cfg: &RunConfig, out: &Path, start: Instant, diagnostics: D) -> Result<()> {
    write_json(
        &out.join(RUN_FILE),
        &RunRecord {
            config: cfg,
            version: VERSION,
            command: cfg.command.as_str(),
            wall_time_s: start.elapsed().as_secs_f64(),
            tolerances: cfg.tolerances,
            diagnostics,
        },
    )
}

/// Runs the configured command and writes its artifacts into `cfg.output`.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    let start = Instant::now();
    let out = cfg.output.as_path();
    info!("{} → {}", cfg.command.as_str(), out.display());
    match cfg.command {
        Command::Evolve => run_evolve(cfg, out, start),
        Command::SweepTheta => {
            let rows = run_theta_sweep(&cfg.sweep_spec().expect("sweep command"))?;
            write_results(out, &rows)?;
            #[derive(Serialize)]
            struct D<'a> {
                #[serde(flatten)]
                summary: Diagnostics,
                best: Option<&'a SweepRow>,
            }
            let summary = Diagnostics::from_rows(&rows);
            let ok = summary.failed_rows == 0;
            record(
                cfg,
                out,
                start,
                D {
                    summary,
                    best: best_row(&rows),
                },
            )?;
            Ok(Outcome::from_ok(ok))
        }
        Command::SweepN => {
            let spec = cfg.sweep_spec().expect("sweep command");
            let rows = match &cfg.sweep.theta_search {
                Some(ratios) => run_n_sweep_optimized(&spec, ratios)?,
                None => run_n_sweep(&spec)?,
            };
            write_results(out, &rows)?;
            let summary = Diagnostics::from_rows(&rows);
            let ok = summary.failed_rows == 0;
            let points = fit_points(&rows);
            match fit_power_law(&points) {
                Ok(fit) => write_fit(cfg, out, fit, Some(&points), rows.len() - points.len())?,
                Err(e) => warn!("no fit: {e}"),
            }
            record(cfg, out, start, summary)?;
            Ok(Outcome::from_ok(ok))
        }
        Command::Fit => {
            let f = &cfg.fit;
            let (fit, points, excluded) = if let Some([a, b]) = f.coefficients {
                (printed_fit(a, b), None, 0)
            } else {
                let (points, excluded) = match &f.input {
                    Some(path) => {
                        let all = read_results(path)?;
                        let pts: Vec<(f64, f64)> = all
                            .iter()
                            .filter(|(n, xi, st)| {
                                st == "ok" && *n >= FIT_MIN_ATOMS && xi.is_finite()
                            })
                            .map(|&(n, xi, _)| (n as f64, xi))
                            .collect();
                        let excluded = all.len() - pts.len();
                        (pts, excluded)
                    }
                    None => (f.points.iter().map(|p| (p[0], p[1])).collect(), 0),
                };
                (fit_power_law(&points)?, Some(points), excluded)
            };
            write_fit(cfg, out, fit.clone(), points.as_deref(), excluded)?;
            record(cfg, out, start, fit)?;
            Ok(Outcome::Success)
        }
        Command::Presets => {
            #[derive(Serialize)]
            struct Row {
                name: PresetName,
                omega_c_hz: f64,
                omega_q_hz: f64,
                lambda_hz: f64,
                kappa_hz: f64,
                gamma_phi_hz: f64,
                theta_max_factor: f64,
            }
            let rows: Vec<Row> = all_presets()
                .into_iter()
                .map(|p| {
                    let hz = |v: f64| v / TWO_PI;
                    Row {
                        name: p.name,
                        omega_c_hz: hz(p.dicke.omega_c),
                        omega_q_hz: hz(p.dicke.omega_q),
                        lambda_hz: hz(p.dicke.lambda),
                        kappa_hz: hz(p.dicke.kappa),
                        gamma_phi_hz: hz(p.dicke.gamma_phi),
                        theta_max_factor: p.theta_max_factor,
                    }
                })
                .collect();
            for r in &rows {
                println!(
                    "{:<12} ω_c/2π = {:.4e} Hz  ω_q/2π = {:.4e} Hz  λ/2π = {:.4e} Hz  κ/2π = {:.4e} Hz  Γ_φ/2π = {:.4e} Hz  θ_max = {}·θ_opt",
                    r.name.as_str(),
                    r.omega_c_hz,
                    r.omega_q_hz,
                    r.lambda_hz,
                    r.kappa_hz,
                    r.gamma_phi_hz,
                    r.theta_max_factor
                );
            }
            write_json(&out.join("presets.json"), &rows)?;
            record(cfg, out, start, &rows)?;
            Ok(Outcome::Success)
        }
        Command::CheckElimination => {
            let e = &cfg.elimination;
            let mut physical = cfg
                .preset
                .and_then(|p| preset(p).physical)
                .unwrap_or_else(|| PhysicalParams::rb_atoms(e.n_atoms));
            if physical.n_atoms != e.n_atoms {
                // keep ω_c fixed when the atom count changes
                let shift = |n: usize| {
                    0.5 * n as f64
                        * (physical.g_r.powi(2) / physical.delta_r
                            + physical.g_s.powi(2) / physical.delta_s)
                };
                physical.delta_cav += shift(e.n_atoms) - shift(physical.n_atoms);
                physical.n_atoms = e.n_atoms;
            }
            let report = check_elimination(&physical, e.n_max)?;
            info!(
                "max excited population {:.3e} (bound {:.3e}), fidelity {:.9}",
                report.max_excited_population, report.leakage_bound, report.fidelity
            );
            record(cfg, out, start, &report)?;
            Ok(Outcome::from_ok(report.passed))
        }
    }
}

fn write_fit(
    cfg: &RunConfig,
    out: &Path,
    fit: FitResult,
    points: Option<&[(f64, f64)]>,
    excluded_rows: usize,
) -> Result<()> {
    let extrapolations = cfg
        .fit
        .extrapolate_to
        .iter()
        .map(|&n| extrapolate(&fit, n))
        .collect::<Result<Vec<_>>>()?;
    for e in &extrapolations {
        info!("{}: N = {:e} → {:.2} dB", e.label, e.n_target, e.db);
    }
    write_json(
        &out.join(FIT_FILE),
        &FitRecord {
            range_sensitivity: points.map(fit_range_sensitivity),
            fit,
            extrapolations,
            excluded_rows,
        },
    )
}

fn run_evolve(cfg: &RunConfig, out: &Path, start: Instant) -> Result<Outcome> {
    let mut d = cfg.dicke();
    let theta_ratio = cfg.evolve.theta_ratio;
    if let Some(r) = theta_ratio {
        d.lambda = lambda_from_theta(r * theta_opt(d.n_atoms), d.omega_c)?;
    }
    let mut spec = EvolutionSpec::new(d, HilbertSpace::new(d.n_atoms, cfg.evolve.n_max)?);
    spec.tolerances = cfg.tolerances;
    spec.frame = cfg.evolve.frame;
    spec.t_final = Some(cfg.evolve.periods * d.period());
    let res = evolve_with_retry(&spec)?;
    let report = match squeezing_report(&res.spin_state()?, d.n_atoms) {
        Ok(r) => Some(r),
        Err(Error::VanishingMeanSpin(_)) => None,
        Err(e) => return Err(e),
    };
    // θ accumulated by the ideal protocol at the final time
    let theta = crate::dynamics::theta_of_t(res.t_final, d.lambda, d.omega_c);
    let row = SweepRow {
        n_atoms: d.n_atoms,
        theta_ratio: theta / theta_opt(d.n_atoms),
        theta,
        lambda: d.lambda,
        report,
        trace_drift: res.trace_drift,
        hermiticity_drift: res.hermiticity_drift,
        tail_pop: res.max_tail,
        n_max: res.space.n_max(),
        retried: res.retried,
        steps: res.stats.accepted,
        status: res.status.to_string(),
    };
    write_results(out, std::slice::from_ref(&row))?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "cavity_photons", "tail_pop"])?;
    for ((t, n), tail) in res
        .times
        .iter()
        .zip(&res.cavity_photons)
        .zip(&res.tail_population)
    {
        w.write_record([format!("{t:?}"), format!("{n:?}"), format!("{tail:?}")])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_atomic(&out.join("trajectory.csv"), &bytes)?;

    #[derive(Serialize)]
    struct D<'a> {
        row: &'a SweepRow,
        decoupling: crate::dynamics::DecouplingReport,
        positivity: crate::dynamics::Positivity,
        rhs_evaluations: usize,
        rejected_steps: usize,
    }
    record(
        cfg,
        out,
        start,
        D {
            row: &row,
            decoupling: decoupling_check(&res)?,
            positivity: res.positivity,
            rhs_evaluations: res.stats.rhs_evals,
            rejected_steps: res.stats.rejected,
        },
    )?;
    Ok(Outcome::from_ok(res.status.is_ok()))
}
