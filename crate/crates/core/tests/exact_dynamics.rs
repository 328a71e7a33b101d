//! Coefficients and trajectories against exact solutions of the resonant-level model.

use nmdot::bath::{Lead, LeadSpec};
use nmdot::doubledot::{compute_dqd_coefficients, liouvillian_dqd_apply, propagate_dqd};
use nmdot::markov::lindblad_rhs;
use nmdot::model::{build_fermion_ops, DensityMatrix, DoubleDotModel, SingleDotModel, SystemModel};
use nmdot::singledot::{compute_coefficients, propagate};
use nmdot::{ComplexMatrix, UniformGrid, C64};
use nmdot_oracle::pseudomodes::Pseudomodes;

const GAMMA: f64 = 100.0;

fn biased(d: f64) -> Vec<LeadSpec> {
    vec![LeadSpec::ornstein_uhlenbeck(Lead::Left, GAMMA, d, true), LeadSpec::ornstein_uhlenbeck(Lead::Right, GAMMA, d, false)]
}

#[test]
fn single_dot_gamma1_matches_exact_coefficient() {
    let (omega0, d) = (50.0, 10.0 * GAMMA);
    let grid = UniformGrid::new(0.0, 0.1, 1000).unwrap();
    let coeffs = compute_coefficients(&SingleDotModel { omega0 }, &biased(d), &grid).unwrap();
    let modes = Pseudomodes::new(&[omega0], 0.0, &[(0, (GAMMA, d, true)), (0, (GAMMA, d, false))]);
    let nodes = grid.nodes();
    let exact = modes.symmetric_gamma1(omega0, &nodes[1..], 20);
    for (i, e) in exact.iter().enumerate() {
        let g = coeffs.gamma1[i + 1];
        assert!((g - e).norm() <= 2e-3 * e.norm().max(GAMMA), "t = {}: {g} vs {e}", nodes[i + 1]);
        assert!((coeffs.gamma2[i + 1] + g).norm() <= 1e-8 * g.norm());
    }
}

#[test]
fn single_dot_population_matches_exact_dynamics() {
    let (omega0, d) = (50.0, 5.0 * GAMMA);
    let grid = UniformGrid::new(0.0, 0.1, 800).unwrap();
    let coeffs = compute_coefficients(&SingleDotModel { omega0 }, &biased(d), &grid).unwrap();
    let traj = propagate(&DensityMatrix::basis_state(2, 0).unwrap(), &coeffs, omega0).unwrap();
    let modes = Pseudomodes::new(&[omega0], 0.0, &[(0, (GAMMA, d, true)), (0, (GAMMA, d, false))]);
    let exact = modes.correlations(&[0.0], &grid.nodes(), 20);
    for (rho, x) in traj.iter().zip(&exact) {
        assert!((rho.population(1) - x[0][0].re).abs() < 1e-3);
    }
}

#[test]
fn double_dot_matches_exact_dynamics() {
    let d = 5.0 * GAMMA;
    let model = DoubleDotModel { omega1: 40.0, omega2: 60.0, coupling: 30.0, single_electron: false };
    let grid = UniformGrid::new(0.0, 0.05, 500).unwrap();
    let coeffs = compute_dqd_coefficients(&model, &biased(d), &grid).unwrap();
    let traj = propagate_dqd(&DensityMatrix::basis_state(4, 0).unwrap(), &coeffs, &model).unwrap();
    let modes = Pseudomodes::new(&[40.0, 60.0], 30.0, &[(0, (GAMMA, d, true)), (1, (GAMMA, d, false))]);
    let exact = modes.correlations(&[0.0, 0.0], &grid.nodes(), 20);
    for (rho, x) in traj.iter().zip(&exact) {
        let n1 = rho.population(1) + rho.population(3);
        let n2 = rho.population(2) + rho.population(3);
        assert!((n1 - x[0][0].re).abs() < 2e-3, "{n1} vs {}", x[0][0].re);
        assert!((n2 - x[1][1].re).abs() < 2e-3);
        assert!((rho.entry(2, 1).norm() - x[0][1].norm()).abs() < 2e-3);
    }
}

#[test]
fn double_dot_mirror_symmetry() {
    let grid = UniformGrid::new(0.0, 0.03, 240).unwrap();
    let d = 800.0;
    let model = DoubleDotModel { omega1: 30.0, omega2: 70.0, coupling: 20.0, single_electron: false };
    let mirrored = DoubleDotModel { omega1: 70.0, omega2: 30.0, ..model };
    let leads = vec![LeadSpec::ornstein_uhlenbeck(Lead::Left, 120.0, d, true), LeadSpec::ornstein_uhlenbeck(Lead::Right, 80.0, d, false)];
    let swapped = vec![LeadSpec::ornstein_uhlenbeck(Lead::Left, 80.0, d, false), LeadSpec::ornstein_uhlenbeck(Lead::Right, 120.0, d, true)];
    let a = compute_dqd_coefficients(&model, &leads, &grid).unwrap();
    let b = compute_dqd_coefficients(&mirrored, &swapped, &grid).unwrap();
    // Gamma_Lj <-> Gamma_R sigma(j), sigma = (1 3)(2 4).
    let sigma = [6, 7, 4, 5, 2, 3, 0, 1];
    let scale = a.gammas.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    for (k, &m) in sigma.iter().enumerate() {
        for (x, y) in a.gammas[k].iter().zip(&b.gammas[m]) {
            assert!((x - y).norm() <= 1e-9 * scale);
        }
    }
}

#[test]
fn markov_limit_coefficients_reproduce_lindblad_generator() {
    let model = DoubleDotModel { omega1: 45.0, omega2: 55.0, coupling: 12.0, single_electron: false };
    let leads = vec![LeadSpec::flat(Lead::Left, 90.0, true), LeadSpec::flat(Lead::Right, 110.0, false)];
    let g = [0.0, -45.0, 0.0, 0.0, 0.0, 0.0, 55.0, 0.0].map(|x| C64::new(x, 0.0));
    let ops = build_fermion_ops(&SystemModel::Double(model));
    let rho = ComplexMatrix::from_fn(4, |i, j| {
        let base = [[0.4, 0.1, 0.05, 0.02], [0.1, 0.3, 0.07, 0.01], [0.05, 0.07, 0.2, 0.03], [0.02, 0.01, 0.03, 0.1]][i][j];
        C64::new(base, if i < j { 0.02 } else if i > j { -0.02 } else { 0.0 })
    });
    let a = liouvillian_dqd_apply(&rho, &g, &model, &ops);
    let b = lindblad_rhs(&rho, &SystemModel::Double(model), &leads).unwrap();
    assert!((&a - &b).max_abs() < 1e-10);
}
