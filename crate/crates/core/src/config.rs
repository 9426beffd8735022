//! Strict JSON run configuration. Frequencies are entered in linear Hz
//! (`*_hz` keys) and become angular only in [`SystemConfig::dicke`].

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Frame, Tolerances};
use crate::error::{Error, Result};
use crate::hilbert::DEFAULT_N_MAX;
use crate::model::{preset, DickeParams, PresetName, TWO_PI};
use crate::sweeps::{default_theta_grid, RateRatios, SweepKind, SweepSpec, DEFAULT_N_GRID};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Evolve,
    SweepTheta,
    SweepN,
    Fit,
    Presets,
    CheckElimination,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::SweepTheta => "sweep-theta",
            Command::SweepN => "sweep-n",
            Command::Fit => "fit",
            Command::Presets => "presets",
            Command::CheckElimination => "check-elimination",
        }
    }
}

/// Effective-model parameters. Unset values come from the preset, then from
/// the dimensionless defaults (`ω_c = 2π × 1 Hz`, everything else zero).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub omega_c_hz: Option<f64>,
    pub omega_q_hz: Option<f64>,
    pub lambda_hz: Option<f64>,
    pub kappa_hz: Option<f64>,
    pub gamma_phi_hz: Option<f64>,
    pub n_atoms: Option<usize>,
}

pub const DEFAULT_ATOMS: usize = 50;

impl SystemConfig {
    /// Angular-frequency parameters; the only place `2π` is applied.
    pub fn dicke(&self) -> DickeParams {
        let w = |v: Option<f64>| TWO_PI * v.unwrap_or(0.0);
        DickeParams {
            omega_c: TWO_PI * self.omega_c_hz.unwrap_or(1.0),
            omega_q: w(self.omega_q_hz),
            lambda: w(self.lambda_hz),
            n_atoms: self.n_atoms.unwrap_or(DEFAULT_ATOMS),
            kappa: w(self.kappa_hz),
            gamma_phi: w(self.gamma_phi_hz),
        }
    }

    fn fill_from(&mut self, d: &DickeParams) {
        let hz = |v: f64| v / TWO_PI;
        self.omega_c_hz.get_or_insert(hz(d.omega_c));
        self.omega_q_hz.get_or_insert(hz(d.omega_q));
        self.lambda_hz.get_or_insert(hz(d.lambda));
        self.kappa_hz.get_or_insert(hz(d.kappa));
        self.gamma_phi_hz.get_or_insert(hz(d.gamma_phi));
        self.n_atoms.get_or_insert(d.n_atoms);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    /// Sets `λ` from `θ = theta_ratio · θ_opt(N)`; when unset `lambda_hz` is used.
    pub theta_ratio: Option<f64>,
    pub n_max: usize,
    pub frame: Frame,
    /// Final time in units of `t_1 = 2π/ω_c`.
    pub periods: f64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            theta_ratio: None,
            n_max: DEFAULT_N_MAX,
            frame: Frame::default(),
            periods: 1.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// `θ/θ_opt` values or atom numbers; defaults depend on the command.
    pub grid: Option<Vec<f64>>,
    pub kappa_ratio: Option<f64>,
    pub omega_q_ratio: Option<f64>,
    pub gamma_phi_ratio: Option<f64>,
    /// Atom sweeps only; defaults to the preset's `θ_max/θ_opt` or 1.
    pub theta_rule: Option<f64>,
    /// Atom sweeps only: keep the best of these `θ/θ_opt` values per `N`
    /// instead of applying `theta_rule`.
    pub theta_search: Option<Vec<f64>>,
    pub n_max: Option<usize>,
    pub frame: Frame,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// A `results.csv` written by an atom-number sweep.
    pub input: Option<PathBuf>,
    /// `(N, ξ_R²)` pairs.
    pub points: Vec<[f64; 2]>,
    /// `(a, b)` of a fit given only by its coefficients.
    pub coefficients: Option<[f64; 2]>,
    pub extrapolate_to: Vec<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            input: None,
            points: Vec::new(),
            coefficients: None,
            extrapolate_to: vec![1e6],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EliminationConfig {
    pub n_atoms: usize,
    pub n_max: usize,
}

impl Default for EliminationConfig {
    fn default() -> Self {
        Self {
            n_atoms: 1,
            n_max: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub preset: Option<PresetName>,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub evolve: EvolveConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub elimination: EliminationConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_workers() -> usize {
    1
}

fn config_error(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Parses, validates and materializes every default.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_error(&path, e.into_inner().to_string())
    })?;
    cfg.materialize();
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn materialize(&mut self) {
        let p = self.preset.map(preset);
        if let Some(p) = &p {
            self.system.fill_from(&p.dicke);
        }
        let defaults = self.system.dicke();
        self.system.fill_from(&defaults);
        let sweep = &mut self.sweep;
        match self.command {
            Command::SweepTheta => {
                sweep.grid.get_or_insert_with(default_theta_grid);
            }
            Command::SweepN => {
                sweep
                    .grid
                    .get_or_insert_with(|| DEFAULT_N_GRID.iter().map(|&n| n as f64).collect());
                sweep
                    .theta_rule
                    .get_or_insert(p.as_ref().map_or(1.0, |p| p.theta_max_factor));
            }
            _ => {}
        }
        if matches!(self.command, Command::SweepTheta | Command::SweepN) {
            sweep.n_max.get_or_insert(DEFAULT_N_MAX);
            let w = self.system.omega_c_hz.expect("materialized");
            let ratio = |v: Option<f64>| v.map(|v| v / w);
            sweep.kappa_ratio = sweep.kappa_ratio.or(ratio(self.system.kappa_hz));
            sweep.omega_q_ratio = sweep.omega_q_ratio.or(ratio(self.system.omega_q_hz));
            sweep.gamma_phi_ratio = sweep.gamma_phi_ratio.or(ratio(self.system.gamma_phi_hz));
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.system;
        let fields = [
            ("system.omega_c_hz", s.omega_c_hz),
            ("system.omega_q_hz", s.omega_q_hz),
            ("system.lambda_hz", s.lambda_hz),
            ("system.kappa_hz", s.kappa_hz),
            ("system.gamma_phi_hz", s.gamma_phi_hz),
        ];
        for (path, v) in fields {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(config_error(path, "must be finite"));
                }
            }
        }
        if s.omega_c_hz == Some(0.0) {
            return Err(config_error("system.omega_c_hz", "must be nonzero"));
        }
        for (path, v) in [
            ("system.kappa_hz", s.kappa_hz),
            ("system.gamma_phi_hz", s.gamma_phi_hz),
        ] {
            if v.is_some_and(|v| v < 0.0) {
                return Err(config_error(path, "rate must be non-negative"));
            }
        }
        if s.n_atoms == Some(0) {
            return Err(config_error("system.n_atoms", "must be at least 1"));
        }
        if let Some(r) = self.evolve.theta_ratio {
            if !(r > 0.0 && r.is_finite()) {
                return Err(config_error("evolve.theta_ratio", "must be positive"));
            }
        }
        if !(self.evolve.periods > 0.0 && self.evolve.periods.is_finite()) {
            return Err(config_error("evolve.periods", "must be positive"));
        }
        if self.evolve.n_max < 2 {
            return Err(config_error("evolve.n_max", "must be at least 2"));
        }
        let sw = &self.sweep;
        for (path, v) in [
            ("sweep.kappa_ratio", sw.kappa_ratio),
            ("sweep.omega_q_ratio", sw.omega_q_ratio),
            ("sweep.gamma_phi_ratio", sw.gamma_phi_ratio),
            ("sweep.theta_rule", sw.theta_rule),
        ] {
            if v.is_some_and(|v| !(v >= 0.0 && v.is_finite())) {
                return Err(config_error(path, "must be finite and non-negative"));
            }
        }
        if let Some(grid) = &sw.theta_search {
            if grid.is_empty() || grid.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
                return Err(config_error(
                    "sweep.theta_search",
                    "ratios must be positive and finite",
                ));
            }
        }
        if let Some(spec) = self.sweep_spec() {
            spec.validate()
                .map_err(|e| config_error("sweep", e.to_string()))?;
        }
        for v in &self.fit.extrapolate_to {
            if !(*v > 0.0) {
                return Err(config_error(
                    "fit.extrapolate_to",
                    "targets must be positive",
                ));
            }
        }
        if self.command == Command::Fit {
            let sources = [
                self.fit.input.is_some(),
                !self.fit.points.is_empty(),
                self.fit.coefficients.is_some(),
            ];
            if sources.iter().filter(|&&b| b).count() != 1 {
                return Err(config_error(
                    "fit",
                    "give exactly one of input, points or coefficients",
                ));
            }
        }
        if !(1..=2).contains(&self.elimination.n_atoms) {
            return Err(config_error("elimination.n_atoms", "must be 1 or 2"));
        }
        if self.elimination.n_max < 2 {
            return Err(config_error("elimination.n_max", "must be at least 2"));
        }
        self.tolerances
            .validate()
            .map_err(|e| config_error("tolerances", e.to_string()))?;
        if self.workers == 0 {
            return Err(config_error("workers", "must be at least 1"));
        }
        Ok(())
    }

    /// Angular-frequency model parameters.
    pub fn dicke(&self) -> DickeParams {
        self.system.dicke()
    }

    /// Sweep specification for the sweep commands.
    pub fn sweep_spec(&self) -> Option<SweepSpec> {
        let kind = match self.command {
            Command::SweepTheta => SweepKind::Theta,
            Command::SweepN => SweepKind::N,
            _ => return None,
        };
        let sw = &self.sweep;
        Some(SweepSpec {
            kind,
            base: self.dicke(),
            grid: sw.grid.clone().unwrap_or_default(),
            ratios: RateRatios {
                kappa: sw.kappa_ratio,
                omega_q: sw.omega_q_ratio,
                gamma_phi: sw.gamma_phi_ratio,
            },
            theta_rule: sw.theta_rule.unwrap_or(1.0),
            n_max: sw.n_max.unwrap_or(DEFAULT_N_MAX),
            tolerances: self.tolerances,
            frame: sw.frame,
            workers: self.workers,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_is_fully_defaulted() {
        let cfg = parse_config(r#"{"command": "sweep-theta", "preset": "rb_atoms"}"#).unwrap();
        assert_eq!(cfg.command, Command::SweepTheta);
        assert!((cfg.system.omega_c_hz.unwrap() - 5.88e6).abs() < 1e-3);
        assert!((cfg.system.kappa_hz.unwrap() - 70e3).abs() < 1e-6);
        assert_eq!(cfg.sweep.grid.as_ref().unwrap().len(), 25);
        assert!((cfg.sweep.kappa_ratio.unwrap() - 70e3 / 5.88e6).abs() < 1e-12);
        assert_eq!(cfg.sweep.n_max, Some(DEFAULT_N_MAX));
        let echo: serde_json::Value = serde_json::from_str(&cfg.to_json()).unwrap();
        assert!(echo["tolerances"]["rtol"].is_number());
        assert!(echo["system"]["gamma_phi_hz"].is_number());
        assert_eq!(echo["output"], "out");
    }

    #[test]
    fn round_trip_is_identity() {
        for text in [
            r#"{"command": "sweep-n", "preset": "bec", "workers": 2}"#,
            r#"{"command": "evolve", "system": {"omega_c_hz": 1.0, "n_atoms": 8}, "evolve": {"theta_ratio": 0.5}}"#,
            r#"{"command": "fit", "fit": {"coefficients": [1.4, -0.64]}}"#,
        ] {
            let cfg = parse_config(text).unwrap();
            assert_eq!(parse_config(&cfg.to_json()).unwrap(), cfg);
        }
    }

    #[test]
    fn errors_name_the_key() {
        let e = parse_config(r#"{"command": "evolve", "system": {"kappa_hz": -5}}"#).unwrap_err();
        assert!(e.to_string().contains("kappa_hz"), "{e}");
        let e = parse_config(r#"{"command": "evolve", "system": {"kapa_hz": 1}}"#).unwrap_err();
        assert!(e.to_string().contains("kapa_hz"), "{e}");
        let e = parse_config(r#"{"command": "evolve", "tolerances": {"rtol": "x"}}"#).unwrap_err();
        assert!(e.to_string().contains("tolerances.rtol"), "{e}");
        let e = parse_config(r#"{"command": "launch"}"#).unwrap_err();
        assert!(e.to_string().contains("command"), "{e}");
        assert!(parse_config("{").is_err());
        let e = parse_config(r#"{"command": "fit"}"#).unwrap_err();
        assert!(e.to_string().contains("`fit`"), "{e}");
    }

    #[test]
    fn frequencies_become_angular_once() {
        let cfg = parse_config(
            r#"{"command": "evolve", "system": {"omega_c_hz": 2.0, "lambda_hz": 0.1}}"#,
        )
        .unwrap();
        let d = cfg.dicke();
        assert!((d.omega_c - 2.0 * TWO_PI).abs() < 1e-12);
        assert!((d.lambda - 0.1 * TWO_PI).abs() < 1e-12);
        let again = parse_config(&cfg.to_json()).unwrap().dicke();
        assert_eq!(again, d);
    }

    #[test]
    fn atom_sweep_takes_preset_phase_rule() {
        let cfg = parse_config(r#"{"command": "sweep-n", "preset": "siv_centers"}"#).unwrap();
        assert_eq!(cfg.sweep.theta_rule, Some(0.5));
        let spec = cfg.sweep_spec().unwrap();
        assert_eq!(spec.kind, SweepKind::N);
        assert_eq!(spec.grid.len(), DEFAULT_N_GRID.len());
        assert!((spec.ratios.apply(&spec.base).gamma_phi - spec.base.gamma_phi).abs() < 1e-6);
    }
}
