use nmdot::bath::CorrelationKernel;
use nmdot::doubledot::liouvillian_dqd_apply;
use nmdot::model::{build_fermion_ops, DensityMatrix, DoubleDotModel, SingleDotModel, SystemModel};
use nmdot::singledot::{liouvillian_apply, propagate, SingleDotCoefficients};
use nmdot::{ComplexMatrix, UniformGrid, C64};
use proptest::prelude::*;

fn density(dim: usize, raw: &[f64]) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(dim, |i, j| C64::new(raw[2 * (i * dim + j)], raw[2 * (i * dim + j) + 1]));
    let p = &a * &a.adjoint();
    let tr = p.trace().re.max(1e-12);
    p.scale(C64::new(1.0 / tr, 0.0))
}

fn complexes(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-200.0..200.0f64, -200.0..200.0f64), n).prop_map(|v| v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn single_dot_generator_is_traceless_and_hermitian(raw in prop::collection::vec(-1.0..1.0f64, 8), g in complexes(2), w in -100.0..100.0f64) {
        let rho = density(2, &raw);
        let d = liouvillian_apply(&rho, g[0], g[1], w);
        prop_assert!(d.trace().norm() <= 1e-12);
        prop_assert!(d.hermiticity_deviation() <= 1e-12);
    }

    #[test]
    fn double_dot_generator_is_traceless_and_hermitian(raw in prop::collection::vec(-1.0..1.0f64, 32), g in complexes(8), w in prop::collection::vec(-100.0..100.0f64, 3)) {
        let model = DoubleDotModel { omega1: w[0], omega2: w[1], coupling: w[2], single_electron: false };
        let ops = build_fermion_ops(&SystemModel::Double(model));
        let rho = density(4, &raw);
        let g: [C64; 8] = g.try_into().unwrap();
        let d = liouvillian_dqd_apply(&rho, &g, &model, &ops);
        prop_assert!(d.trace().norm() <= 1e-12);
        prop_assert!(d.hermiticity_deviation() <= 1e-12);
    }

    #[test]
    fn kernels_are_conjugate_symmetric(amp in 0.0..500.0f64, decay in 0.1..1000.0f64, freqs in prop::collection::vec(-300.0..300.0f64, 1..6), tau in 0.0..0.5f64) {
        let weights = vec![1.0 / freqs.len() as f64; freqs.len()];
        let k = CorrelationKernel::exponential(amp, decay).sum(&CorrelationKernel::modes(freqs, weights, 1.0));
        let (a, b) = (k.eval(-tau), k.eval(tau).conj());
        prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
    }
}

#[test]
fn fermion_operators_anticommute() {
    for model in [
        SystemModel::Single(SingleDotModel { omega0: 1.0 }),
        SystemModel::Double(DoubleDotModel { omega1: 1.0, omega2: 2.0, coupling: 0.5, single_electron: false }),
    ] {
        let ops = build_fermion_ops(&model);
        let modes = ops.modes();
        let eye = ComplexMatrix::identity(model.dim());
        for (i, a) in modes.iter().enumerate() {
            for (j, b) in modes.iter().enumerate() {
                let ab = a.anticommutator(&b.adjoint());
                let expected = if i == j { eye.clone() } else { ComplexMatrix::zeros(model.dim()) };
                assert!((&ab - &expected).max_abs() <= 1e-14);
                assert!(a.anticommutator(b).max_abs() <= 1e-14);
            }
        }
    }
}

#[test]
fn long_propagation_keeps_trace_and_positivity() {
    let grid = UniformGrid::new(0.0, 0.2, 10_000).unwrap();
    let n = grid.len();
    let gamma1: Vec<C64> = grid.nodes().iter().map(|t| C64::new(50.0 * (1.0 - (-300.0 * t).exp()), 3.0 * (40.0 * t).sin())).collect();
    let gamma2: Vec<C64> = gamma1.iter().map(|g| -g * 0.4).collect();
    let coeffs = SingleDotCoefficients { grid, gamma1, gamma2 };
    let rho0 = DensityMatrix::new(density(2, &[0.3, 0.1, -0.2, 0.5, 0.7, -0.1, 0.2, 0.4])).unwrap();
    let traj = propagate(&rho0, &coeffs, 50.0).unwrap();
    assert_eq!(traj.len(), n);
    for rho in &traj {
        let diag = nmdot::model::validate_density(rho);
        assert!(diag.trace_deviation <= 1e-9);
        assert!(diag.min_eigenvalue >= -1e-9);
    }
}
