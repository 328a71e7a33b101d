//! Memoryless reference dynamics: the Lindblad equation and the rate
//! equations for the single dot and the double dot in the large-bias window.
//!
//! These are written down directly and never obtained as limits of the
//! non-Markovian engines.

use crate::bath::{Lead, LeadSpec};
use crate::error::{Error, Result};
use crate::model::{build_fermion_ops, hamiltonian_matrix, DensityMatrix, SystemModel};
use crate::numerics::{rk4_step, solve_dense_linear, ComplexMatrix, UniformGrid, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Level energy seen by a lead: the single-dot level, or the level of the dot the lead touches.
fn lead_level(model: &SystemModel, lead: Lead) -> f64 {
    match (model, lead) {
        (SystemModel::Single(m), _) => m.omega0,
        (SystemModel::Double(m), Lead::Left) => m.omega1,
        (SystemModel::Double(m), Lead::Right) => m.omega2,
    }
}

/// Lindblad generator with one jump channel per lead.
///
/// The left lead couples to dot 1 and the right lead to dot 2; on a single
/// dot both couple to the same level.
pub fn lindblad_rhs(rho: &ComplexMatrix, model: &SystemModel, leads: &[LeadSpec]) -> Result<ComplexMatrix> {
    if rho.dim() != model.dim() {
        return Err(Error::InvalidInput("state and model dimensions differ".into()));
    }
    let ops = build_fermion_ops(model);
    let h = hamiltonian_matrix(model);
    let mut out = h.commutator(rho).scale(-I);
    for lead in leads {
        lead.validate()?;
        let c = match (lead.lead, &ops.c2) {
            (Lead::Right, Some(c2)) => c2,
            _ => &ops.c1,
        };
        let cd = c.adjoint();
        let n = lead.occupation(lead_level(model, lead.lead));
        let fill = &(&(&cd * rho) * c).scale(re(2.0)) - &(&(c * &cd) * rho);
        let fill = &fill - &(&(rho * c) * &cd);
        let drain = &(&(c * rho) * &cd).scale(re(2.0)) - &(&(&cd * c) * rho);
        let drain = &drain - &(&(rho * &cd) * c);
        let term = &fill.scale(re(n)) + &drain.scale(re(1.0 - n));
        out = &out + &term.scale(re(0.5 * lead.gamma));
    }
    Ok(out)
}

/// Matrix of a linear map on `dim x dim` matrices in the row-major basis `|i><j|`.
pub fn superoperator_matrix(dim: usize, mut map: impl FnMut(&ComplexMatrix) -> ComplexMatrix) -> ComplexMatrix {
    let n = dim * dim;
    let mut out = ComplexMatrix::zeros(n);
    for col in 0..n {
        let mut e = ComplexMatrix::zeros(dim);
        e[(col / dim, col % dim)] = re(1.0);
        let img = map(&e);
        for row in 0..n {
            out[(row, col)] = img[(row / dim, row % dim)];
        }
    }
    out
}

/// Reduced variables of a rate description.
pub trait RateState: Sized + Clone {
    fn to_vector(&self) -> Vec<C64>;
    fn from_vector(v: &[C64]) -> Self;
    /// The state as a density matrix; entries outside the description are zero.
    fn to_density(&self) -> DensityMatrix;
    fn population_sum(&self) -> f64;
}

/// Single dot: populations and the coherence `rho_10 = <1|rho|0>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleDotRateState {
    pub rho00: f64,
    pub rho11: f64,
    pub rho10: C64,
}

/// Double dot with up to two electrons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DqdRateState {
    pub rho00: f64,
    pub rho11: f64,
    pub rho22: f64,
    pub rho33: f64,
    pub rho12: C64,
}

/// Double dot restricted to at most one electron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleElectronRateState {
    pub rho00: f64,
    pub rho11: f64,
    pub rho22: f64,
    pub rho12: C64,
}

impl RateState for SingleDotRateState {
    fn to_vector(&self) -> Vec<C64> {
        vec![re(self.rho00), re(self.rho11), self.rho10]
    }
    fn from_vector(v: &[C64]) -> Self {
        Self { rho00: v[0].re, rho11: v[1].re, rho10: v[2] }
    }
    fn to_density(&self) -> DensityMatrix {
        let mut m = ComplexMatrix::diagonal(&[re(self.rho00), re(self.rho11)]);
        m[(1, 0)] = self.rho10;
        m[(0, 1)] = self.rho10.conj();
        DensityMatrix::from_matrix_unchecked(m)
    }
    fn population_sum(&self) -> f64 {
        self.rho00 + self.rho11
    }
}

impl RateState for DqdRateState {
    fn to_vector(&self) -> Vec<C64> {
        vec![re(self.rho00), re(self.rho11), re(self.rho22), re(self.rho33), self.rho12]
    }
    fn from_vector(v: &[C64]) -> Self {
        Self { rho00: v[0].re, rho11: v[1].re, rho22: v[2].re, rho33: v[3].re, rho12: v[4] }
    }
    fn to_density(&self) -> DensityMatrix {
        let mut m = ComplexMatrix::diagonal(&[re(self.rho00), re(self.rho11), re(self.rho22), re(self.rho33)]);
        m[(1, 2)] = self.rho12;
        m[(2, 1)] = self.rho12.conj();
        DensityMatrix::from_matrix_unchecked(m)
    }
    fn population_sum(&self) -> f64 {
        self.rho00 + self.rho11 + self.rho22 + self.rho33
    }
}

impl RateState for SingleElectronRateState {
    fn to_vector(&self) -> Vec<C64> {
        vec![re(self.rho00), re(self.rho11), re(self.rho22), self.rho12]
    }
    fn from_vector(v: &[C64]) -> Self {
        Self { rho00: v[0].re, rho11: v[1].re, rho22: v[2].re, rho12: v[3] }
    }
    fn to_density(&self) -> DensityMatrix {
        let mut m = ComplexMatrix::diagonal(&[re(self.rho00), re(self.rho11), re(self.rho22), ZERO]);
        m[(1, 2)] = self.rho12;
        m[(2, 1)] = self.rho12.conj();
        DensityMatrix::from_matrix_unchecked(m)
    }
    fn population_sum(&self) -> f64 {
        self.rho00 + self.rho11 + self.rho22
    }
}

impl SingleDotRateState {
    pub fn from_density(rho: &DensityMatrix) -> Self {
        Self { rho00: rho.population(0), rho11: rho.population(1), rho10: rho.entry(1, 0) }
    }
}

impl DqdRateState {
    pub fn from_density(rho: &DensityMatrix) -> Self {
        Self {
            rho00: rho.population(0),
            rho11: rho.population(1),
            rho22: rho.population(2),
            rho33: rho.population(3),
            rho12: rho.entry(1, 2),
        }
    }
}

impl SingleElectronRateState {
    pub fn from_density(rho: &DensityMatrix) -> Self {
        Self { rho00: rho.population(0), rho11: rho.population(1), rho22: rho.population(2), rho12: rho.entry(1, 2) }
    }
}

/// Single-dot rate equations with the left lead filling and the right lead draining the level.
///
/// The coherence decays at `(gamma_l + gamma_r) / 2`, the rate that follows from
/// the Lindblad form and from the exact solution in this regime.
pub fn single_dot_rates(state: &SingleDotRateState, gamma_l: f64, gamma_r: f64, omega0: f64) -> SingleDotRateState {
    SingleDotRateState {
        rho00: -gamma_l * state.rho00 + gamma_r * state.rho11,
        rho11: gamma_l * state.rho00 - gamma_r * state.rho11,
        rho10: -(I * omega0 + 0.5 * (gamma_l + gamma_r)) * state.rho10,
    }
}

/// Double-dot rate equations; the left lead fills dot 1 and the right lead drains dot 2.
pub fn dqd_rates(state: &DqdRateState, gamma_l: f64, gamma_r: f64, omega1: f64, omega2: f64, coupling: f64) -> DqdRateState {
    let (p0, p1, p2, p3, c) = (state.rho00, state.rho11, state.rho22, state.rho33, state.rho12);
    // i Ω (ρ12 - ρ21) is real: -2 Ω Im ρ12.
    let hop = (I * coupling * (c - c.conj())).re;
    DqdRateState {
        rho00: -gamma_l * p0 + gamma_r * p2,
        rho11: gamma_l * p0 + gamma_r * p3 + hop,
        rho22: -(gamma_l + gamma_r) * p2 - hop,
        rho33: gamma_l * p2 - gamma_r * p3,
        rho12: -I * (omega1 - omega2) * c + I * coupling * (p1 - p2) - 0.5 * (gamma_l + gamma_r) * c,
    }
}

/// Double-dot rate equations when at most one electron fits in the two dots.
pub fn dqd_single_electron_rates(
    state: &SingleElectronRateState,
    gamma_l: f64,
    gamma_r: f64,
    omega1: f64,
    omega2: f64,
    coupling: f64,
) -> SingleElectronRateState {
    let (p0, p1, p2, c) = (state.rho00, state.rho11, state.rho22, state.rho12);
    let hop = (I * coupling * (c - c.conj())).re;
    SingleElectronRateState {
        rho00: -gamma_l * p0 + gamma_r * p2,
        rho11: gamma_l * p0 + hop,
        rho22: -gamma_r * p2 - hop,
        rho12: -I * (omega1 - omega2) * c + I * coupling * (p1 - p2) - 0.5 * gamma_r * c,
    }
}

/// Integrates a rate system by RK4 on the nodes of `grid`.
pub fn integrate_rates<S: RateState>(state0: &S, grid: &UniformGrid, rhs: impl Fn(&S) -> S) -> Result<Vec<S>> {
    let mut out = Vec::with_capacity(grid.len());
    out.push(state0.clone());
    let mut y = state0.to_vector();
    for i in 0..grid.n_steps() {
        y = rk4_step(|_, v| rhs(&S::from_vector(v)).to_vector(), grid.node(i), &y, grid.step()).map_err(|_| {
            Error::PropagationDiverged { step: i + 1, t: grid.node(i + 1), reason: "non-finite rate state".into() }
        })?;
        out.push(S::from_vector(&y));
    }
    Ok(out)
}

/// Stationary state of the single-electron double-dot equations.
pub fn single_electron_steady_state(
    gamma_l: f64,
    gamma_r: f64,
    omega1: f64,
    omega2: f64,
    coupling: f64,
) -> Result<SingleElectronRateState> {
    // Real unknowns (p0, p1, p2, Re c, Im c).
    let to_state = |x: &[f64]| SingleElectronRateState { rho00: x[0], rho11: x[1], rho22: x[2], rho12: C64::new(x[3], x[4]) };
    let flatten = |s: &SingleElectronRateState| [s.rho00, s.rho11, s.rho22, s.rho12.re, s.rho12.im];
    let mut a = ComplexMatrix::zeros(5);
    for col in 0..5 {
        let mut e = [0.0; 5];
        e[col] = 1.0;
        let d = flatten(&dqd_single_electron_rates(&to_state(&e), gamma_l, gamma_r, omega1, omega2, coupling));
        for row in 0..5 {
            a[(row, col)] = re(d[row]);
        }
    }
    for col in 0..5 {
        a[(0, col)] = re(if col < 3 { 1.0 } else { 0.0 });
    }
    let mut b = vec![ZERO; 5];
    b[0] = re(1.0);
    let x: Vec<f64> = solve_dense_linear(&a, &b)?.iter().map(|z| z.re).collect();
    Ok(to_state(&x))
}

/// Largest absolute deviations between two trajectories on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    /// Per basis state population.
    pub populations: Vec<f64>,
    /// Complex difference of the tracked coherence (`rho_10` or `rho_12`).
    pub coherence: f64,
    /// Difference of its modulus.
    pub coherence_modulus: f64,
}

impl DeviationReport {
    pub fn max_population(&self) -> f64 {
        self.populations.iter().copied().fold(0.0, f64::max)
    }

    /// Worst of the population and coherence-modulus deviations.
    pub fn max_deviation(&self) -> f64 {
        self.max_population().max(self.coherence_modulus)
    }
}

/// Compares two trajectories node by node.
pub fn markov_limit_check(
    grid_a: &UniformGrid,
    a: &[DensityMatrix],
    grid_b: &UniformGrid,
    b: &[DensityMatrix],
) -> Result<DeviationReport> {
    let same_grid = grid_a.n_steps() == grid_b.n_steps()
        && (grid_a.t_start() - grid_b.t_start()).abs() <= 1e-12 * grid_a.t_end().abs().max(1.0)
        && (grid_a.t_end() - grid_b.t_end()).abs() <= 1e-12 * grid_a.t_end().abs().max(1.0);
    if !same_grid || a.len() != grid_a.len() || b.len() != grid_b.len() {
        return Err(Error::InvalidInput("trajectories are not sampled on the same grid".into()));
    }
    let dim = a[0].dim();
    if b.iter().chain(a).any(|r| r.dim() != dim) {
        return Err(Error::InvalidInput("trajectories have different dimensions".into()));
    }
    let (ci, cj) = if dim == 2 { (1, 0) } else { (1, 2) };
    let mut report = DeviationReport { populations: vec![0.0; dim], coherence: 0.0, coherence_modulus: 0.0 };
    for (x, y) in a.iter().zip(b) {
        for k in 0..dim {
            report.populations[k] = report.populations[k].max((x.population(k) - y.population(k)).abs());
        }
        let (p, q) = (x.entry(ci, cj), y.entry(ci, cj));
        report.coherence = report.coherence.max((p - q).norm());
        report.coherence_modulus = report.coherence_modulus.max((p.norm() - q.norm()).abs());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DoubleDotModel, SingleDotModel};

    fn single() -> SystemModel {
        SystemModel::Single(SingleDotModel { omega0: 50.0 })
    }

    #[test]
    fn amplitude_damping_rates() {
        let drain = [LeadSpec::flat(Lead::Right, 3.0, false)];
        let rho = DensityMatrix::basis_state(2, 1).unwrap();
        let d = lindblad_rhs(rho.matrix(), &single(), &drain).unwrap();
        assert!((d[(1, 1)].re + 3.0).abs() < 1e-14);
        let fill = [LeadSpec::flat(Lead::Left, 3.0, true)];
        let rho = DensityMatrix::basis_state(2, 0).unwrap();
        let d = lindblad_rhs(rho.matrix(), &single(), &fill).unwrap();
        assert!((d[(1, 1)].re - 3.0).abs() < 1e-14);
    }

    #[test]
    fn lindblad_matches_single_dot_rates() {
        let leads = [LeadSpec::flat(Lead::Left, 100.0, true), LeadSpec::flat(Lead::Right, 70.0, false)];
        let rho = ComplexMatrix::from_rows(&[
            vec![re(0.3), C64::new(0.1, 0.2)],
            vec![C64::new(0.1, -0.2), re(0.7)],
        ])
        .unwrap();
        let d = lindblad_rhs(&rho, &single(), &leads).unwrap();
        let s = single_dot_rates(&SingleDotRateState::from_density(&DensityMatrix::from_matrix_unchecked(rho)), 100.0, 70.0, 50.0);
        assert!((d[(0, 0)].re - s.rho00).abs() < 1e-12);
        assert!((d[(1, 1)].re - s.rho11).abs() < 1e-12);
        assert!((d[(1, 0)] - s.rho10).norm() < 1e-12);
    }

    #[test]
    fn steady_states() {
        let grid = UniformGrid::new(0.0, 0.2, 2000).unwrap();
        let s0 = SingleDotRateState { rho00: 1.0, rho11: 0.0, rho10: ZERO };
        let traj = integrate_rates(&s0, &grid, |s| single_dot_rates(s, 100.0, 300.0, 50.0)).unwrap();
        assert!((traj.last().unwrap().rho11 - 0.25).abs() < 1e-9);

        let ss = single_electron_steady_state(10.0, 20.0, 3.0, 1.0, 5.0).unwrap();
        let d = dqd_single_electron_rates(&ss, 10.0, 20.0, 3.0, 1.0, 5.0);
        assert!(d.to_vector().iter().all(|z| z.norm() < 1e-12));
        let long = UniformGrid::new(0.0, 5.0, 50000).unwrap();
        let s0 = SingleElectronRateState { rho00: 1.0, rho11: 0.0, rho22: 0.0, rho12: ZERO };
        let end = *integrate_rates(&s0, &long, |s| dqd_single_electron_rates(s, 10.0, 20.0, 3.0, 1.0, 5.0))
            .unwrap()
            .last()
            .unwrap();
        assert!((end.rho11 - ss.rho11).abs() < 1e-6 && (end.rho12 - ss.rho12).norm() < 1e-6);
    }

    #[test]
    fn dqd_rates_conserve_population() {
        let s = DqdRateState { rho00: 0.1, rho11: 0.2, rho22: 0.3, rho33: 0.4, rho12: C64::new(0.05, -0.02) };
        let d = dqd_rates(&s, 7.0, 3.0, 1.0, 2.0, 0.5);
        assert!(d.population_sum().abs() < 1e-15);
        let model = SystemModel::Double(DoubleDotModel { omega1: 1.0, omega2: 2.0, coupling: 0.5, single_electron: false });
        let leads = [LeadSpec::flat(Lead::Left, 7.0, true), LeadSpec::flat(Lead::Right, 3.0, false)];
        let l = lindblad_rhs(s.to_density().matrix(), &model, &leads).unwrap();
        for (k, v) in [d.rho00, d.rho11, d.rho22, d.rho33].iter().enumerate() {
            assert!((l[(k, k)].re - v).abs() < 1e-14);
        }
        assert!((l[(1, 2)] - d.rho12).norm() < 1e-14);
    }

    #[test]
    fn identical_trajectories_have_zero_deviation() {
        let grid = UniformGrid::new(0.0, 1.0, 3).unwrap();
        let states = vec![DensityMatrix::basis_state(2, 0).unwrap(); 4];
        let r = markov_limit_check(&grid, &states, &grid, &states).unwrap();
        assert_eq!(r.max_deviation(), 0.0);
        let other = UniformGrid::new(0.0, 2.0, 3).unwrap();
        assert!(markov_limit_check(&grid, &states, &other, &states).is_err());
    }
}
