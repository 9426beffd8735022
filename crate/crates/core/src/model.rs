//! Cavity-assisted Raman parameters, the effective Dicke model they produce,
//! and the experimental presets.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hilbert::{
    build_cavity_operators, build_spin_operators, tensor_lift, tensor_product, BasisTag, Factor,
    HilbertSpace,
};
use crate::operator::{CsrMatrix, QOperator};

/// 2π, for converting linear frequencies.
pub const TWO_PI: f64 = 2.0 * PI;

/// Adiabaticity ratios above this raise a warning.
pub const ADIABATIC_LIMIT: f64 = 0.1;

/// Relative mismatch tolerated between the two Raman couplings.
pub const BALANCE_TOLERANCE: f64 = 0.01;

/// Raw double-Λ parameters. All rates are angular frequencies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub g_r: f64,
    pub g_s: f64,
    /// Classical Rabi frequency Ω_r on |e⟩ ↔ |r⟩.
    pub rabi_r: f64,
    /// Classical Rabi frequency Ω_s on |g⟩ ↔ |s⟩.
    pub rabi_s: f64,
    pub delta_r: f64,
    pub delta_s: f64,
    pub delta_cav: f64,
    pub gamma_rg: f64,
    pub gamma_re: f64,
    pub gamma_sg: f64,
    pub gamma_se: f64,
    pub gamma_phi: f64,
    pub kappa: f64,
    pub n_atoms: usize,
}

impl PhysicalParams {
    /// ⁸⁷Rb D₂-line configuration. `δ_cav` is chosen so the effective cavity
    /// frequency is 2π × 5.88 MHz for `n_atoms` atoms.
    pub fn rb_atoms(n_atoms: usize) -> Self {
        let delta_s = TWO_PI * 5.0e9;
        let delta_r = 0.75 * delta_s;
        let g_r = TWO_PI * 1.1e6;
        let g_s = -g_r / 0.75f64.sqrt();
        let rabi_s = delta_s / 50.0;
        let rabi_r = -(0.75f64).sqrt() * rabi_s;
        let omega_c = TWO_PI * 5.88e6;
        let shift = 0.5 * n_atoms as f64 * (g_r * g_r / delta_r + g_s * g_s / delta_s);
        Self {
            g_r,
            g_s,
            rabi_r,
            rabi_s,
            delta_r,
            delta_s,
            delta_cav: omega_c + shift,
            gamma_rg: TWO_PI * 3.0e6,
            gamma_re: TWO_PI * 3.0e6,
            gamma_sg: TWO_PI * 3.6e6,
            gamma_se: TWO_PI * 2.4e6,
            gamma_phi: 0.0,
            kappa: TWO_PI * 70.0e3,
            n_atoms,
        }
    }

    /// Ratios that must be small for adiabatic elimination:
    /// `|Ω_r/2Δ_r|, |Ω_s/2Δ_s|, |g_r/Δ_r|, |g_s/Δ_s|`.
    pub fn adiabaticity(&self) -> Adiabaticity {
        Adiabaticity {
            drive_r: (self.rabi_r / (2.0 * self.delta_r)).abs(),
            drive_s: (self.rabi_s / (2.0 * self.delta_s)).abs(),
            cavity_r: (self.g_r / self.delta_r).abs(),
            cavity_s: (self.g_s / self.delta_s).abs(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.delta_r == 0.0 || !self.delta_r.is_finite() {
            return Err(invalid(
                "delta_r",
                "one-photon detuning must be finite and nonzero",
            ));
        }
        if self.delta_s == 0.0 || !self.delta_s.is_finite() {
            return Err(invalid(
                "delta_s",
                "one-photon detuning must be finite and nonzero",
            ));
        }
        if self.n_atoms == 0 {
            return Err(invalid("n_atoms", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adiabaticity {
    pub drive_r: f64,
    pub drive_s: f64,
    pub cavity_r: f64,
    pub cavity_s: f64,
}

impl Adiabaticity {
    pub fn max(&self) -> f64 {
        self.drive_r
            .max(self.drive_s)
            .max(self.cavity_r)
            .max(self.cavity_s)
    }

    pub fn is_adiabatic(&self) -> bool {
        self.max() <= ADIABATIC_LIMIT
    }
}

/// Effective Dicke-model parameters (angular frequencies).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DickeParams {
    pub omega_c: f64,
    pub omega_q: f64,
    pub lambda: f64,
    pub n_atoms: usize,
    pub kappa: f64,
    pub gamma_phi: f64,
}

impl DickeParams {
    /// `|ω_q| ≤ 0.01 |ω_c|`.
    pub fn is_ideal_protocol(&self) -> bool {
        self.omega_q.abs() <= 0.01 * self.omega_c.abs()
    }

    /// First decoupling time `t_1 = 2π / ω_c`.
    pub fn period(&self) -> f64 {
        TWO_PI / self.omega_c
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("omega_c", self.omega_c),
            ("omega_q", self.omega_q),
            ("lambda", self.lambda),
            ("kappa", self.kappa),
            ("gamma_phi", self.gamma_phi),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        if self.omega_c == 0.0 {
            return Err(invalid("omega_c", "must be nonzero"));
        }
        if self.kappa < 0.0 {
            return Err(invalid("kappa", "decay rate must be non-negative"));
        }
        if self.gamma_phi < 0.0 {
            return Err(invalid("gamma_phi", "dephasing rate must be non-negative"));
        }
        if self.n_atoms == 0 {
            return Err(invalid("n_atoms", "must be at least 1"));
        }
        Ok(())
    }
}

/// Output of [`effective_params`]: the Dicke parameters plus the checks made
/// on the way.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub dicke: DickeParams,
    /// `Ω_r* g_r / 2Δ_r`, used as λ.
    pub lambda_r: f64,
    /// `Ω_s g_s* / 2Δ_s`.
    pub lambda_s: f64,
    pub balanced: bool,
    pub adiabaticity: Adiabaticity,
    pub warnings: Vec<String>,
}

/// Adiabatic-elimination coefficients of the double-Λ system.
pub fn effective_params(p: &PhysicalParams) -> Result<EffectiveParams> {
    p.validate()?;
    let n = p.n_atoms as f64;
    let omega_c = p.delta_cav - 0.5 * n * (p.g_r * p.g_r / p.delta_r + p.g_s * p.g_s / p.delta_s);
    let omega_q = p.rabi_s * p.rabi_s / (4.0 * p.delta_s) - p.rabi_r * p.rabi_r / (4.0 * p.delta_r);
    let lambda_r = p.rabi_r * p.g_r / (2.0 * p.delta_r);
    let lambda_s = p.rabi_s * p.g_s / (2.0 * p.delta_s);

    let mut warnings = Vec::new();
    let scale = lambda_r.abs().max(lambda_s.abs());
    let balanced = scale == 0.0 || (lambda_r - lambda_s).abs() <= BALANCE_TOLERANCE * scale;
    if !balanced {
        warnings.push(format!(
            "unbalanced Raman couplings: Ω_r g_r/2Δ_r = {lambda_r:e}, Ω_s g_s/2Δ_s = {lambda_s:e}"
        ));
    }
    let adiabaticity = p.adiabaticity();
    if !adiabaticity.is_adiabatic() {
        warnings.push(format!(
            "adiabaticity ratio {:.3} exceeds {ADIABATIC_LIMIT}",
            adiabaticity.max()
        ));
    }
    Ok(EffectiveParams {
        dicke: DickeParams {
            omega_c,
            omega_q,
            lambda: lambda_r,
            n_atoms: p.n_atoms,
            kappa: p.kappa,
            gamma_phi: p.gamma_phi,
        },
        lambda_r,
        lambda_s,
        balanced,
        adiabaticity,
        warnings,
    })
}

fn check_atoms(d: &DickeParams, space: &HilbertSpace) -> Result<()> {
    if d.n_atoms != space.n_atoms() {
        return Err(Error::BasisMismatch {
            expected: space.joint_tag(),
            found: BasisTag::Joint {
                n_max: space.n_max(),
                n_atoms: d.n_atoms,
            },
        });
    }
    Ok(())
}

/// `ω_c c†c + ω_q J_z + 2λ (c† + c) J_x` on the joint space.
pub fn build_dicke_hamiltonian(d: &DickeParams, space: &HilbertSpace) -> Result<QOperator> {
    check_atoms(d, space)?;
    let cav = build_cavity_operators(space);
    let spin = build_spin_operators(space);
    let n = tensor_lift(&cav.n_op, space, Factor::Cavity)?;
    let jz = tensor_lift(&spin.jz, space, Factor::Spin)?;
    let quad = cav.c.add(&cav.c_dag)?;
    let coupling = tensor_product(&quad, &spin.jx, space)?;
    n.scale_real(d.omega_c)
        .add(&jz.scale_real(d.omega_q))?
        .add(&coupling.scale_real(2.0 * d.lambda))?
        .into_hermitian()
}

/// The `2λ c† J_x` block whose phase rotates as `e^{iω_c t}` in the
/// interaction picture; the full coupling is this plus its adjoint.
pub fn raising_coupling(d: &DickeParams, space: &HilbertSpace) -> Result<QOperator> {
    check_atoms(d, space)?;
    let cav = build_cavity_operators(space);
    let spin = build_spin_operators(space);
    Ok(tensor_product(&cav.c_dag, &spin.jx, space)?.scale_real(2.0 * d.lambda))
}

/// `2λ (e^{iω_c t} c† + e^{-iω_c t} c) J_x`.
pub fn build_interaction_picture_coupling(
    d: &DickeParams,
    space: &HilbertSpace,
    t: f64,
) -> Result<QOperator> {
    let up = raising_coupling(d, space)?;
    let phase = C64::from_polar(1.0, d.omega_c * t);
    let rot = up.scale(phase);
    rot.add(&rot.adjoint())?.into_hermitian()
}

/// Atomic level indices in the four-level model.
pub mod level {
    pub const G: usize = 0;
    pub const E: usize = 1;
    pub const R: usize = 2;
    pub const S: usize = 3;
}

/// Largest atom count accepted by the full four-level model.
pub const MAX_FULL_MODEL_ATOMS: usize = 2;

/// Double-Λ Hamiltonian in the laser-rotating frame for one or two atoms
/// with unit spatial phases:
///
/// `Σ_j (Δ_r |r_j⟩⟨r_j| + Δ_s |s_j⟩⟨s_j|) + δ_cav c†c
///  + Σ_j (g_r c†|g_j⟩⟨r_j| + g_s c†|e_j⟩⟨s_j| + h.c.)
///  + Σ_j (Ω_r/2 |r_j⟩⟨e_j| + Ω_s/2 |s_j⟩⟨g_j| + h.c.)`.
///
/// Basis index is `n · 4^N + Σ_j level_j · 4^(N-1-j)`.
pub fn build_full_lambda_hamiltonian(
    p: &PhysicalParams,
    n_atoms: usize,
    n_max: usize,
) -> Result<QOperator> {
    if n_atoms == 0 || n_atoms > MAX_FULL_MODEL_ATOMS {
        return Err(invalid(
            "n_atoms",
            format!(
                "full four-level model supports 1..={MAX_FULL_MODEL_ATOMS} atoms, got {n_atoms}"
            ),
        ));
    }
    if n_max < 2 {
        return Err(invalid("n_max", "must be at least 2"));
    }
    p.validate()?;
    let tag = BasisTag::Lambda { n_max, n_atoms };
    let atom_dim = 4usize.pow(n_atoms as u32);
    let levels = |cfg: usize, j: usize| (cfg / 4usize.pow((n_atoms - 1 - j) as u32)) % 4;
    let with_level = |cfg: usize, j: usize, lvl: usize| {
        let w = 4usize.pow((n_atoms - 1 - j) as u32);
        cfg - levels(cfg, j) * w + lvl * w
    };
    let idx = |n: usize, cfg: usize| n * atom_dim + cfg;
    let c = |v: f64| C64::new(v, 0.0);

    let mut trip = Vec::new();
    for n in 0..n_max {
        for cfg in 0..atom_dim {
            let i = idx(n, cfg);
            let mut diag = p.delta_cav * n as f64;
            for j in 0..n_atoms {
                match levels(cfg, j) {
                    level::R => diag += p.delta_r,
                    level::S => diag += p.delta_s,
                    _ => {}
                }
            }
            trip.push((i, i, c(diag)));

            for j in 0..n_atoms {
                let lvl = levels(cfg, j);
                // g_r c† |g⟩⟨r| and g_s c† |e⟩⟨s|, plus adjoints
                let cavity_target = match lvl {
                    level::R => Some((level::G, p.g_r)),
                    level::S => Some((level::E, p.g_s)),
                    _ => None,
                };
                if let Some((lower, g)) = cavity_target {
                    if n + 1 < n_max {
                        let to = idx(n + 1, with_level(cfg, j, lower));
                        let amp = c(g * ((n + 1) as f64).sqrt());
                        trip.push((to, i, amp));
                        trip.push((i, to, amp.conj()));
                    }
                }
                // Ω_r/2 |r⟩⟨e| and Ω_s/2 |s⟩⟨g|, plus adjoints
                let drive_target = match lvl {
                    level::E => Some((level::R, p.rabi_r)),
                    level::G => Some((level::S, p.rabi_s)),
                    _ => None,
                };
                if let Some((upper, rabi)) = drive_target {
                    let to = idx(n, with_level(cfg, j, upper));
                    trip.push((to, i, c(rabi / 2.0)));
                    trip.push((i, to, c(rabi / 2.0)));
                }
            }
        }
    }
    QOperator::new(tag, CsrMatrix::from_triplets(tag.dim(), trip))?.into_hermitian()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    RbAtoms,
    SivCenters,
    Bec,
}

impl PresetName {
    pub const ALL: [PresetName; 3] = [PresetName::RbAtoms, PresetName::SivCenters, PresetName::Bec];

    pub fn as_str(&self) -> &'static str {
        match self {
            PresetName::RbAtoms => "rb_atoms",
            PresetName::SivCenters => "siv_centers",
            PresetName::Bec => "bec",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: PresetName,
    /// Raw parameters, when the preset is specified at that level.
    pub physical: Option<PhysicalParams>,
    pub dicke: DickeParams,
    /// θ_max / θ_opt used for atom-number sweeps.
    pub theta_max_factor: f64,
}

/// Reference atom count stored in presets; sweeps override it per row.
pub const PRESET_REFERENCE_ATOMS: usize = 50;

pub fn load_preset(name: &str) -> Result<Preset> {
    Ok(preset(name.parse()?))
}

pub fn preset(name: PresetName) -> Preset {
    match name {
        PresetName::RbAtoms => {
            let physical = PhysicalParams::rb_atoms(PRESET_REFERENCE_ATOMS);
            let derived = effective_params(&physical).expect("Rb preset parameters are valid");
            let mut dicke = derived.dicke;
            // exact cancellation up to rounding; pin it
            dicke.omega_q = 0.0;
            Preset {
                name,
                physical: Some(physical),
                dicke,
                theta_max_factor: 1.0,
            }
        }
        PresetName::SivCenters => {
            // Δ = 2π × 10 GHz, Ω = Δ/30, g = 2π × 46 MHz: λ = Ω g / 2Δ
            let delta = TWO_PI * 10.0e9;
            let lambda = (delta / 30.0) * (TWO_PI * 46.0e6) / (2.0 * delta);
            Preset {
                name,
                physical: None,
                dicke: DickeParams {
                    omega_c: TWO_PI * 350.0e6,
                    omega_q: 0.0,
                    lambda,
                    n_atoms: PRESET_REFERENCE_ATOMS,
                    kappa: TWO_PI * 1.0e6,
                    gamma_phi: TWO_PI * 3.5e6,
                },
                theta_max_factor: 0.5,
            }
        }
        PresetName::Bec => Preset {
            name,
            physical: None,
            dicke: DickeParams {
                omega_c: TWO_PI * 500.0e3,
                omega_q: TWO_PI * 28.6e3,
                lambda: TWO_PI * 0.88e3,
                n_atoms: PRESET_REFERENCE_ATOMS,
                kappa: TWO_PI * 70.0e3,
                gamma_phi: 0.0,
            },
            theta_max_factor: 0.8,
        },
    }
}

pub fn all_presets() -> Vec<Preset> {
    PresetName::ALL.into_iter().map(preset).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_dicke(n_atoms: usize) -> DickeParams {
        DickeParams {
            omega_c: 1.0,
            omega_q: 0.0,
            lambda: 0.1,
            n_atoms,
            kappa: 0.0,
            gamma_phi: 0.0,
        }
    }

    #[test]
    fn rb_lambda_matches_quoted_value() {
        let eff = effective_params(&PhysicalParams::rb_atoms(1)).unwrap();
        let lambda_khz = eff.lambda_r / TWO_PI / 1e3;
        assert!((lambda_khz + 12.7).abs() < 0.1, "λ/2π = {lambda_khz} kHz");
        assert!(eff.balanced);
        assert!(eff.dicke.omega_q.abs() < 1e-6 * eff.dicke.omega_c);
        assert!(((eff.dicke.omega_c / TWO_PI) - 5.88e6).abs() < 1e-3);
        assert!(eff.warnings.is_empty());
    }

    #[test]
    fn symmetric_drive_cancels_spin_frequency() {
        let mut p = PhysicalParams::rb_atoms(3);
        p.g_s = p.g_r;
        p.rabi_s = p.rabi_r;
        p.delta_s = p.delta_r;
        let eff = effective_params(&p).unwrap();
        assert_eq!(eff.dicke.omega_q, 0.0);
    }

    #[test]
    fn zero_cavity_coupling() {
        let mut p = PhysicalParams::rb_atoms(3);
        p.g_r = 0.0;
        p.g_s = 0.0;
        let eff = effective_params(&p).unwrap();
        assert_eq!(eff.dicke.lambda, 0.0);
        assert_eq!(eff.dicke.omega_c, p.delta_cav);
    }

    #[test]
    fn unbalanced_couplings_warn() {
        let mut p = PhysicalParams::rb_atoms(1);
        p.g_s *= 1.2;
        let eff = effective_params(&p).unwrap();
        assert!(!eff.balanced);
        assert!(eff.warnings.iter().any(|w| w.contains("unbalanced")));
        assert!((eff.lambda_s / eff.lambda_r - 1.2).abs() < 1e-9);
    }

    #[test]
    fn zero_detuning_rejected() {
        let mut p = PhysicalParams::rb_atoms(1);
        p.delta_s = 0.0;
        assert!(effective_params(&p).is_err());
    }

    #[test]
    fn drive_scaling_is_homogeneous() {
        let p = PhysicalParams::rb_atoms(4);
        let mut q = p.clone();
        q.rabi_r *= 3.0;
        q.rabi_s *= 3.0;
        q.delta_r *= 1.01; // break the exact ω_q cancellation
        let mut p2 = p.clone();
        p2.delta_r *= 1.01;
        let a = effective_params(&p2).unwrap().dicke;
        let b = effective_params(&q).unwrap().dicke;
        assert!((b.omega_q / a.omega_q - 9.0).abs() < 1e-9);
        assert!((b.lambda / a.lambda - 3.0).abs() < 1e-12);
        assert_eq!(a.omega_c, b.omega_c);
    }

    #[test]
    fn dicke_spectrum_without_coupling() {
        let space = HilbertSpace::new(3, 5).unwrap();
        let mut d = sample_dicke(3);
        d.lambda = 0.0;
        d.omega_c = 2.0;
        let h = build_dicke_hamiltonian(&d, &space).unwrap();
        assert!(h.matrix().is_diagonal());
        for n in 0..5 {
            for k in 0..4 {
                let i = space.index(n, k);
                assert_eq!(h.get(i, i).re, 2.0 * n as f64);
            }
        }
    }

    #[test]
    fn hand_assembled_single_spin_hamiltonian() {
        let space = HilbertSpace::new(1, 2).unwrap();
        let h = build_dicke_hamiltonian(&sample_dicke(1), &space).unwrap();
        // index = n*2 + k; coupling 2λ·(1/2) = 0.1 between |0,k⟩ and |1,1-k⟩
        let expected = [
            [0.0, 0.0, 0.0, 0.1],
            [0.0, 0.0, 0.1, 0.0],
            [0.0, 0.1, 1.0, 0.0],
            [0.1, 0.0, 0.0, 1.0],
        ];
        for (r, row) in expected.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                assert!((h.get(r, c) - C64::new(v, 0.0)).norm() < 1e-15, "({r},{c})");
            }
        }
    }

    #[test]
    fn interaction_picture_coupling() {
        let space = HilbertSpace::new(4, 6).unwrap();
        let d = DickeParams {
            omega_c: 3.0,
            ..sample_dicke(4)
        };
        let v0 = build_interaction_picture_coupling(&d, &space, 0.0).unwrap();
        let bare = DickeParams {
            omega_c: 0.0,
            omega_q: 0.0,
            ..d
        };
        let h = build_dicke_hamiltonian(&bare, &space).unwrap();
        assert!(v0.sub(&h).unwrap().max_abs() < 1e-15);

        let vpi = build_interaction_picture_coupling(&d, &space, PI / d.omega_c).unwrap();
        let up = raising_coupling(&d, &space).unwrap();
        let expected = up
            .scale_real(-1.0)
            .add(&up.adjoint().scale_real(-1.0))
            .unwrap();
        assert!(vpi.sub(&expected).unwrap().max_abs() < 1e-14);

        let v = build_interaction_picture_coupling(&d, &space, 0.37 / d.omega_c).unwrap();
        assert!(v.hermiticity_error() < 1e-12);
    }

    #[test]
    fn full_model_structure() {
        let mut p = PhysicalParams::rb_atoms(1);
        p.rabi_r = 0.0;
        p.rabi_s = 0.0;
        p.g_r = 0.0;
        p.g_s = 0.0;
        let h = build_full_lambda_hamiltonian(&p, 1, 3).unwrap();
        assert_eq!(h.dim(), 12);
        assert!(h.matrix().is_diagonal());
        assert_eq!(h.get(level::R, level::R).re, p.delta_r);
        assert_eq!(h.get(level::S, level::S).re, p.delta_s);
        assert_eq!(h.get(level::G, level::G).re, 0.0);
        assert!(build_full_lambda_hamiltonian(&p, 3, 3).is_err());
        let h2 = build_full_lambda_hamiltonian(&PhysicalParams::rb_atoms(2), 2, 4).unwrap();
        assert_eq!(h2.dim(), 64);
        assert!(h2.is_hermitian());
    }

    #[test]
    fn presets_carry_quoted_numbers() {
        let rb = load_preset("rb_atoms").unwrap();
        assert!((rb.dicke.omega_c - TWO_PI * 5.88e6).abs() < 1e-3);
        assert_eq!(rb.dicke.kappa, TWO_PI * 70e3);
        assert_eq!(rb.theta_max_factor, 1.0);
        let siv = load_preset("siv_centers").unwrap();
        assert_eq!(siv.dicke.gamma_phi, TWO_PI * 3.5e6);
        assert_eq!(siv.dicke.omega_c, TWO_PI * 350e6);
        assert_eq!(siv.theta_max_factor, 0.5);
        let bec = load_preset("bec").unwrap();
        assert_eq!(bec.dicke.omega_q, TWO_PI * 28.6e3);
        assert_eq!(bec.dicke.omega_c, TWO_PI * 500e3);
        assert_eq!(bec.theta_max_factor, 0.8);
        assert!(!bec.dicke.is_ideal_protocol());
        assert!(rb.dicke.is_ideal_protocol());
        assert!(matches!(load_preset("nv"), Err(Error::UnknownPreset(_))));
    }
}
