use dicke_squeeze::dynamics::{
    evolve_master, ideal_state, lambda_from_theta, twisted_spin_density, EvolutionSpec, Frame,
    RunStatus,
};
use dicke_squeeze::metrics::{squeezing_report, theta_opt};
use dicke_squeeze::model::DickeParams;
use dicke_squeeze::sweeps::{default_theta_grid, run_theta_sweep, SweepSpec};
use dicke_squeeze::HilbertSpace;
use proptest::prelude::*;

fn params(n_atoms: usize, theta_ratio: f64) -> DickeParams {
    DickeParams {
        omega_c: 1.0,
        omega_q: 0.0,
        lambda: lambda_from_theta(theta_ratio * theta_opt(n_atoms), 1.0).unwrap(),
        n_atoms,
        kappa: 0.0,
        gamma_phi: 0.0,
    }
}

#[test]
fn master_equation_matches_closed_form_state() {
    for n in [3, 6, 10] {
        let d = params(n, 1.0);
        let space = HilbertSpace::new(n, 12).unwrap();
        let r = evolve_master(&EvolutionSpec::new(d, space)).unwrap();
        let psi = ideal_state(d.lambda, d.omega_c, r.t_final, &space).unwrap();
        let f = r.final_state.fidelity_with_ket(&psi).unwrap();
        assert!(f >= 0.999, "N = {n}: fidelity {f}");
        let spin = twisted_spin_density(theta_opt(n), &space).unwrap();
        let a = squeezing_report(&r.spin_state().unwrap(), n).unwrap();
        let b = squeezing_report(&spin, n).unwrap();
        assert!((a.xi_r_sq - b.xi_r_sq).abs() < 1e-4, "N = {n}");
    }
}

#[test]
fn lab_and_interaction_frames_agree() {
    let d = params(5, 1.3);
    let space = HilbertSpace::new(5, 12).unwrap();
    let mut spec = EvolutionSpec::new(d, space);
    let lab = evolve_master(&spec).unwrap();
    spec.frame = Frame::Interaction;
    let rot = evolve_master(&spec).unwrap();
    let f = lab
        .spin_state()
        .unwrap()
        .fidelity(&rot.spin_state().unwrap())
        .unwrap();
    assert!(f > 1.0 - 1e-6, "{f}");
}

#[test]
fn ideal_phase_sweep_has_single_minimum() {
    let d = params(10, 1.0);
    let mut spec = SweepSpec::theta(d, default_theta_grid());
    spec.n_max = 12;
    let rows = run_theta_sweep(&spec).unwrap();
    let xi: Vec<f64> = rows.iter().map(|r| r.xi_r_sq().unwrap()).collect();
    let k = (0..xi.len())
        .min_by(|&a, &b| xi[a].total_cmp(&xi[b]))
        .unwrap();
    assert!(k > 0 && k + 1 < xi.len());
    assert!(xi[..=k].windows(2).all(|w| w[1] < w[0]), "{xi:?}");
    assert!(xi[k..].windows(2).all(|w| w[1] > w[0]), "{xi:?}");
}

#[test]
fn more_cavity_decay_means_less_squeezing() {
    let n = 20;
    let space = HilbertSpace::new(n, 16).unwrap();
    let mut prev = 0.0;
    for kappa in [0.0, 0.01, 0.1] {
        let d = DickeParams {
            kappa,
            ..params(n, 1.0)
        };
        let r = evolve_master(&EvolutionSpec::new(d, space)).unwrap();
        assert_eq!(r.status, RunStatus::Ok);
        let xi = squeezing_report(&r.spin_state().unwrap(), n)
            .unwrap()
            .xi_r_sq;
        assert!(xi >= prev, "κ = {kappa}: {xi} < {prev}");
        prev = xi;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn runs_conserve_trace_and_positivity(
        n in 2usize..7,
        ratio in 0.2f64..1.5,
        kappa in 0.0f64..0.2,
        omega_q in 0.0f64..0.2,
        gamma_phi in 0.0f64..0.05,
    ) {
        let d = DickeParams { kappa, omega_q, gamma_phi, ..params(n, ratio) };
        let r = evolve_master(&EvolutionSpec::new(d, HilbertSpace::new(n, 10).unwrap())).unwrap();
        prop_assert!(r.trace_drift < 1e-6);
        prop_assert!(r.hermiticity_drift < 1e-8);
        prop_assert!(r.final_state.min_eigenvalue() > -1e-7);
        prop_assert_eq!(r.status, RunStatus::Ok);
    }
}
