//! Exact coefficients and dynamics of two coupled dots, dot 1 attached to
//! the left lead and dot 2 to the right lead.
//!
//! The generator is
//!
//! ```text
//! drho/dt = -i[H, rho] + { G_L1 [c1, rho c1†] + G_L2 [c1, c1† rho] + G_L3 [c1, rho c2†] + G_L4 [c1, c2† rho]
//!                        + G_R1 [c2, rho c1†] + G_R2 [c2, c1† rho] + G_R3 [c2, rho c2†] + G_R4 [c2, c2† rho] + H.c. }
//! ```
//!
//! The coefficients follow from two-component auxiliary functions. With
//! `H1 = [[w1, W], [W, w2]]` and `K(tau) = diag(beta_L(tau), beta_R(tau))`:
//!
//! ```text
//! h'  = i H1 h + ∫_s^t K(s - s') h(s') ds'           h(t) = (1, 0) or (0, 1)
//! A'  = i H1 A - ∫_0^s K(s - s') A(s') ds' + U        U_l(s) = ∫_0^t a2_l(s - s') h_l(s') ds'
//! B'  = i H1 B - ∫_0^s K(s - s') B(s') ds' + V        V_l(s) = ∫_0^t a1_l(s' - s) h_l(s') ds'
//! G_lj(t) = ∫_0^t [a1_l(s - t) A_lj(s) - a2_l(t - s) B_lj(s)] ds
//! ```
//!
//! `j = 1, 2` use the `h` column that ends at `(1, 0)` and `j = 3, 4` the one
//! ending at `(0, 1)`. The final values are `A_1 = (1, 0)`, `A_3 = (0, 1)`,
//! `B_2 = (1, 0)`, `B_4 = (0, 1)`, all others zero. The right-lead `V` source
//! uses the right-lead kernel `a1_R`.

use rayon::prelude::*;

use crate::bath::{beta_kernel, kernel_from_spectral, Branch, CorrelationKernel, Lead, LagTable, LeadSpec};
use crate::error::{Error, Result};
use crate::model::{build_fermion_ops, hamiltonian_matrix, propagate_density, DensityMatrix, DoubleDotModel, FermionOps, SystemModel};
use crate::numerics::{linear_interpolate, trapezoid_weights_n, ComplexMatrix, UniformGrid, C64};
use crate::volterra::{
    convolve_source, solve_backward, solve_mixed_final_value, Convolver, KernelMatrix, LagOrientation,
    MixedPropagator, VolterraProblem,
};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Coefficient labels in storage order.
pub const COEFFICIENT_LABELS: [&str; 8] = ["L1", "L2", "L3", "L4", "R1", "R2", "R3", "R4"];

/// Kernels of one lead.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LeadKernels {
    pub alpha1: CorrelationKernel,
    pub alpha2: CorrelationKernel,
}

impl LeadKernels {
    pub fn beta(&self) -> CorrelationKernel {
        beta_kernel(&self.alpha1, &self.alpha2)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DqdKernels {
    pub left: LeadKernels,
    pub right: LeadKernels,
}

impl DqdKernels {
    /// Sums kernels per lead; a lead that is absent is detached.
    pub fn from_leads(leads: &[LeadSpec]) -> Result<Self> {
        let mut k = Self::default();
        for lead in leads {
            let target = match lead.lead {
                Lead::Left => &mut k.left,
                Lead::Right => &mut k.right,
            };
            target.alpha1 = target.alpha1.sum(&kernel_from_spectral(lead, Branch::Empty)?);
            target.alpha2 = target.alpha2.sum(&kernel_from_spectral(lead, Branch::Filled)?);
        }
        Ok(k)
    }

    pub fn tabulate(&self, grid: &UniformGrid) -> DqdKernelTables {
        let (h, n) = (grid.step(), grid.n_steps());
        let tab = |k: &LeadKernels| LeadTables {
            alpha1: k.alpha1.tabulate(h, n),
            alpha2: k.alpha2.tabulate(h, n),
            beta: k.beta().tabulate(h, n),
        };
        DqdKernelTables { left: tab(&self.left), right: tab(&self.right) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeadTables {
    pub alpha1: LagTable,
    pub alpha2: LagTable,
    pub beta: LagTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DqdKernelTables {
    pub left: LeadTables,
    pub right: LeadTables,
}

impl DqdKernelTables {
    fn lead(&self, l: usize) -> &LeadTables {
        if l == 0 {
            &self.left
        } else {
            &self.right
        }
    }
}

/// Auxiliary functions for one outer time.
///
/// `h[n][l]` is component `l` (0 = left, 1 = right) of the `h` column that
/// ends at unit vector `n`; `a[j][l]` and `b[j][l]` hold `A_lj`, `B_lj` for
/// `j = 1..=4` stored at index `j - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DqdAuxFunctions {
    pub h: [[Vec<C64>; 2]; 2],
    pub a: [[Vec<C64>; 2]; 4],
    pub b: [[Vec<C64>; 2]; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct DqdCoefficients {
    pub grid: UniformGrid,
    /// Ordered as [`COEFFICIENT_LABELS`].
    pub gammas: [Vec<C64>; 8],
}

impl DqdCoefficients {
    /// Samples of `G_lj`, `j = 1..=4`.
    pub fn get(&self, lead: Lead, j: usize) -> &[C64] {
        assert!((1..=4).contains(&j), "coefficient index runs from 1 to 4");
        let base = if lead == Lead::Left { 0 } else { 4 };
        &self.gammas[base + j - 1]
    }

    pub fn at(&self, t: f64) -> Result<[C64; 8]> {
        let mut out = [ZERO; 8];
        for (o, g) in out.iter_mut().zip(&self.gammas) {
            *o = linear_interpolate(&self.grid, g, t)?;
        }
        Ok(out)
    }
}

fn system_matrix(model: &DoubleDotModel) -> ComplexMatrix {
    let i = C64::new(0.0, 1.0);
    ComplexMatrix::from_fn(2, |r, c| match (r, c) {
        (0, 0) => i * model.omega1,
        (1, 1) => i * model.omega2,
        _ => i * model.coupling,
    })
}

fn unit(n: usize) -> Vec<C64> {
    let mut v = vec![ZERO; 2];
    v[n] = ONE;
    v
}

/// Solves the `h` pair ending at unit vector `column` (0 or 1) on `grid = [0, t]`.
pub fn compute_h_pair(tables: &DqdKernelTables, model: &DoubleDotModel, grid: &UniformGrid, column: usize) -> Result<[Vec<C64>; 2]> {
    if column > 1 {
        return Err(Error::InvalidInput("h columns are 0 and 1".into()));
    }
    let problem = VolterraProblem {
        grid: *grid,
        coeff: system_matrix(model),
        memory: KernelMatrix::diagonal(vec![tables.left.beta.clone(), tables.right.beta.clone()]),
        source: vec![],
        final_value: unit(column),
    };
    let mut c = solve_backward(&problem)?.into_components();
    let right = c.pop().expect("two components");
    let left = c.pop().expect("two components");
    Ok([left, right])
}

/// Final values and source column of `A_j` and `B_j`.
fn final_values(j: usize) -> (Vec<C64>, Vec<C64>) {
    match j {
        1 => (unit(0), vec![ZERO; 2]),
        2 => (vec![ZERO; 2], unit(0)),
        3 => (unit(1), vec![ZERO; 2]),
        _ => (vec![ZERO; 2], unit(1)),
    }
}

/// Solves all `A`, `B` problems on `grid = [0, t]` by dense global solves.
pub fn compute_ab_dqd(
    h: &[[Vec<C64>; 2]; 2],
    tables: &DqdKernelTables,
    model: &DoubleDotModel,
    grid: &UniformGrid,
) -> Result<DqdAuxFunctions> {
    let step = grid.step();
    let mut sources = Vec::with_capacity(2);
    for col in h {
        let mut u = Vec::with_capacity(2);
        let mut v = Vec::with_capacity(2);
        for (l, samples) in col.iter().enumerate() {
            if samples.len() != grid.len() {
                return Err(Error::InvalidInput("h samples do not match the grid".into()));
            }
            u.push(convolve_source(&tables.lead(l).alpha2, LagOrientation::Forward, samples, step)?);
            v.push(convolve_source(&tables.lead(l).alpha1, LagOrientation::Reflected, samples, step)?);
        }
        sources.push((u, v));
    }
    let memory = KernelMatrix::diagonal(vec![tables.left.beta.scaled(-1.0), tables.right.beta.scaled(-1.0)]);
    let solve = |source: &[Vec<C64>], fin: Vec<C64>| -> Result<[Vec<C64>; 2]> {
        let problem = VolterraProblem {
            grid: *grid,
            coeff: system_matrix(model),
            memory: memory.clone(),
            source: source.to_vec(),
            final_value: fin,
        };
        let mut c = solve_mixed_final_value(&problem)?.into_components();
        let r = c.pop().expect("two components");
        let l = c.pop().expect("two components");
        Ok([l, r])
    };
    let mut a = Vec::with_capacity(4);
    let mut b = Vec::with_capacity(4);
    for j in 1..=4 {
        let (u, v) = &sources[(j - 1) / 2];
        let (fa, fb) = final_values(j);
        a.push(solve(u, fa)?);
        b.push(solve(v, fb)?);
    }
    Ok(DqdAuxFunctions { h: h.clone(), a: to_array(a), b: to_array(b) })
}

fn to_array(v: Vec<[Vec<C64>; 2]>) -> [[Vec<C64>; 2]; 4] {
    v.try_into().expect("four entries")
}

/// Trapezoid evaluation of the eight coefficients from auxiliary functions on `[0, t]`.
pub fn gamma_dqd_at(aux: &DqdAuxFunctions, tables: &DqdKernelTables, step: f64) -> [C64; 8] {
    let k = aux.a[0][0].len() - 1;
    let w = trapezoid_weights_n(k, step);
    let mut out = [ZERO; 8];
    for l in 0..2 {
        let t = tables.lead(l);
        for j in 0..4 {
            let mut g = ZERO;
            for i in 0..=k {
                let a1 = t.alpha1.at(i as isize - k as isize);
                let a2 = t.alpha2.at(k as isize - i as isize);
                g += (a1 * aux.a[j][l][i] - a2 * aux.b[j][l][i]) * w[i];
            }
            out[4 * l + j] = g;
        }
    }
    out
}

/// Coefficient engine for the double dot on a fixed outer grid.
///
/// Shares the global `h` solves and the homogeneous march across outer
/// times, as [`crate::singledot::SingleDotSolver`] does.
#[derive(Debug, Clone)]
pub struct DqdSolver {
    grid: UniformGrid,
    tables: DqdKernelTables,
    h_global: [[Vec<C64>; 2]; 2],
    conv_u: [Convolver; 2],
    conv_v: [Convolver; 2],
    propagator: MixedPropagator,
}

impl DqdSolver {
    pub fn new(model: &DoubleDotModel, kernels: &DqdKernels, grid: &UniformGrid) -> Result<Self> {
        SystemModel::Double(*model).validate()?;
        if grid.t_start() != 0.0 {
            return Err(Error::InvalidGrid("coefficient grids start at t = 0".into()));
        }
        let tables = kernels.tabulate(grid);
        let n = grid.n_steps();
        let h_global = [compute_h_pair(&tables, model, grid, 0)?, compute_h_pair(&tables, model, grid, 1)?];
        let conv_u = [
            Convolver::new(&tables.left.alpha2, LagOrientation::Forward, n),
            Convolver::new(&tables.right.alpha2, LagOrientation::Forward, n),
        ];
        let conv_v = [
            Convolver::new(&tables.left.alpha1, LagOrientation::Reflected, n),
            Convolver::new(&tables.right.alpha1, LagOrientation::Reflected, n),
        ];
        let memory = KernelMatrix::diagonal(vec![tables.left.beta.scaled(-1.0), tables.right.beta.scaled(-1.0)]);
        let propagator = MixedPropagator::new(system_matrix(model), &memory, grid)?;
        Ok(Self { grid: *grid, tables, h_global, conv_u, conv_v, propagator })
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn tables(&self) -> &DqdKernelTables {
        &self.tables
    }

    /// Auxiliary functions for the outer time at node `k >= 1`.
    pub fn aux_functions(&self, k: usize) -> Result<DqdAuxFunctions> {
        let n = self.grid.n_steps();
        if k == 0 || k > n {
            return Err(Error::InvalidInput(format!("outer node {k} outside 1..={n}")));
        }
        let step = self.grid.step();
        let h: [[Vec<C64>; 2]; 2] = [0, 1].map(|c| [0, 1].map(|l| self.h_global[c][l][n - k..].to_vec()));
        let mut a = Vec::with_capacity(4);
        let mut b = Vec::with_capacity(4);
        for col in &h {
            let u: Vec<Vec<C64>> = (0..2).map(|l| self.conv_u[l].apply(&col[l], step)).collect();
            let v: Vec<Vec<C64>> = (0..2).map(|l| self.conv_v[l].apply(&col[l], step)).collect();
            let pa = self.propagator.particular(&u, k)?;
            let pb = self.propagator.particular(&v, k)?;
            for j in (a.len() + 1)..=(a.len() + 2) {
                let (fa, fb) = final_values(j);
                let sa = self.propagator.complete(&pa, &fa, k)?;
                let sb = self.propagator.complete(&pb, &fb, k)?;
                a.push(pair(sa));
                b.push(pair(sb));
            }
        }
        Ok(DqdAuxFunctions { h, a: to_array(a), b: to_array(b) })
    }

    /// The eight coefficients at outer node `k`; zero at `k = 0`.
    pub fn gammas_at_node(&self, k: usize) -> Result<[C64; 8]> {
        if k == 0 {
            return Ok([ZERO; 8]);
        }
        let g = gamma_dqd_at(&self.aux_functions(k)?, &self.tables, self.grid.step());
        if g.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("double-dot coefficients"));
        }
        Ok(g)
    }

    /// Coefficients at every node, computed in parallel on the current rayon pool.
    pub fn coefficients(&self) -> Result<DqdCoefficients> {
        let rows: Vec<[C64; 8]> =
            (0..self.grid.len()).into_par_iter().map(|k| self.gammas_at_node(k)).collect::<Result<_>>()?;
        let gammas = std::array::from_fn(|c| rows.iter().map(|r| r[c]).collect());
        Ok(DqdCoefficients { grid: self.grid, gammas })
    }
}

fn pair(mut v: Vec<Vec<C64>>) -> [Vec<C64>; 2] {
    let r = v.pop().expect("two components");
    let l = v.pop().expect("two components");
    [l, r]
}

/// Builds kernels from `leads` and computes the coefficient table on `grid`.
pub fn compute_dqd_coefficients(model: &DoubleDotModel, leads: &[LeadSpec], grid: &UniformGrid) -> Result<DqdCoefficients> {
    let kernels = DqdKernels::from_leads(leads)?;
    DqdSolver::new(model, &kernels, grid)?.coefficients()
}

/// Right side of the double-dot master equation.
///
/// The Hermitian conjugate terms are written out (`g* [d rho, c†]` and
/// `g* [rho d, c†]`), so the map is linear on arbitrary matrices.
pub fn liouvillian_dqd_apply(rho: &ComplexMatrix, gammas: &[C64; 8], model: &DoubleDotModel, ops: &FermionOps) -> ComplexMatrix {
    let h = hamiltonian_matrix(&SystemModel::Double(*model));
    let c2 = ops.c2.as_ref().expect("double-dot operators");
    let modes = [&ops.c1, c2];
    let mut out = h.commutator(rho).scale(C64::new(0.0, -1.0));
    for (l, c) in modes.iter().enumerate() {
        let c_dag = c.adjoint();
        for (m, d) in modes.iter().enumerate() {
            let d_dag = d.adjoint();
            let g_right = gammas[4 * l + 2 * m];
            let g_left = gammas[4 * l + 2 * m + 1];
            out = &out + &c.commutator(&(rho * &d_dag)).scale(g_right);
            out = &out + &(*d * rho).commutator(&c_dag).scale(g_right.conj());
            out = &out + &c.commutator(&(&d_dag * rho)).scale(g_left);
            out = &out + &(rho * *d).commutator(&c_dag).scale(g_left.conj());
        }
    }
    out
}

/// Propagates a 4x4 state over the coefficient grid.
pub fn propagate_dqd(rho0: &DensityMatrix, coeffs: &DqdCoefficients, model: &DoubleDotModel) -> Result<Vec<DensityMatrix>> {
    if rho0.dim() != 4 {
        return Err(Error::InvalidInput("double-dot states are 4x4".into()));
    }
    let ops = build_fermion_ops(&SystemModel::Double(*model));
    propagate_density(rho0, &coeffs.grid, |t, rho| Ok(liouvillian_dqd_apply(rho, &coeffs.at(t)?, model, &ops)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SingleDotModel;
    use crate::singledot::SingleDotSolver;
    use crate::singledot::SingleDotKernels;

    fn model(coupling: f64) -> DoubleDotModel {
        DoubleDotModel { omega1: 50.0, omega2: 30.0, coupling, single_electron: false }
    }

    fn leads(d: f64) -> Vec<LeadSpec> {
        vec![
            LeadSpec::ornstein_uhlenbeck(Lead::Left, 100.0, d, true),
            LeadSpec::ornstein_uhlenbeck(Lead::Right, 80.0, d, false),
        ]
    }

    #[test]
    fn fast_path_matches_dense_solves() {
        let grid = UniformGrid::new(0.0, 0.04, 40).unwrap();
        let m = model(25.0);
        let kernels = DqdKernels::from_leads(&leads(400.0)).unwrap();
        let solver = DqdSolver::new(&m, &kernels, &grid).unwrap();
        for k in [1, 13, 40] {
            let sub = grid.prefix(k).unwrap();
            let tables = kernels.tabulate(&sub);
            let h = [compute_h_pair(&tables, &m, &sub, 0).unwrap(), compute_h_pair(&tables, &m, &sub, 1).unwrap()];
            let dense = compute_ab_dqd(&h, &tables, &m, &sub).unwrap();
            let fast = solver.aux_functions(k).unwrap();
            let all = |x: &DqdAuxFunctions| -> Vec<C64> {
                x.h.iter().chain(&x.a).chain(&x.b).flatten().flatten().copied().collect()
            };
            for (p, q) in all(&dense).iter().zip(&all(&fast)) {
                assert!((p - q).norm() < 1e-10, "node {k}: {p} vs {q}");
            }
            let gd = gamma_dqd_at(&dense, &tables, sub.step());
            let gf = solver.gammas_at_node(k).unwrap();
            for (p, q) in gd.iter().zip(&gf) {
                assert!((p - q).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn final_conditions_are_exact() {
        let grid = UniformGrid::new(0.0, 0.02, 20).unwrap();
        let solver = DqdSolver::new(&model(10.0), &DqdKernels::from_leads(&leads(300.0)).unwrap(), &grid).unwrap();
        let aux = solver.aux_functions(20).unwrap();
        let last = |v: &Vec<C64>| *v.last().unwrap();
        assert_eq!([last(&aux.h[0][0]), last(&aux.h[0][1])], [ONE, ZERO]);
        assert_eq!([last(&aux.h[1][0]), last(&aux.h[1][1])], [ZERO, ONE]);
        for j in 1..=4 {
            let (fa, fb) = final_values(j);
            assert_eq!([last(&aux.a[j - 1][0]), last(&aux.a[j - 1][1])].to_vec(), fa);
            assert_eq!([last(&aux.b[j - 1][0]), last(&aux.b[j - 1][1])].to_vec(), fb);
        }
        assert_eq!(solver.gammas_at_node(0).unwrap(), [ZERO; 8]);
    }

    #[test]
    fn decoupled_left_channel_reduces_to_single_dot() {
        let grid = UniformGrid::new(0.0, 0.03, 60).unwrap();
        let left = vec![LeadSpec::ornstein_uhlenbeck(Lead::Left, 100.0, 500.0, false)];
        let dq = compute_dqd_coefficients(&model(0.0), &left, &grid).unwrap();
        let sk = SingleDotKernels::from_leads(&left).unwrap();
        let sd = SingleDotSolver::new(&SingleDotModel { omega0: 50.0 }, &sk, &grid).unwrap().coefficients().unwrap();
        for i in 0..grid.len() {
            let scale = sd.gamma1[i].norm().max(1.0);
            assert!((dq.get(Lead::Left, 1)[i] - sd.gamma1[i]).norm() / scale < 1e-8);
            assert!((dq.get(Lead::Left, 2)[i] - sd.gamma2[i]).norm() / scale < 1e-8);
            for (lead, j) in [(Lead::Left, 3), (Lead::Left, 4), (Lead::Right, 1), (Lead::Right, 3)] {
                assert!(dq.get(lead, j)[i].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn generator_is_traceless_and_hermitian() {
        let m = model(7.0);
        let ops = build_fermion_ops(&SystemModel::Double(m));
        let rho = ComplexMatrix::from_fn(4, |i, j| {
            let x = (i * 4 + j) as f64;
            if i == j {
                C64::new(0.1 + 0.05 * x, 0.0)
            } else if i < j {
                C64::new(0.02 * x, -0.01 * x)
            } else {
                let y = (j * 4 + i) as f64;
                C64::new(0.02 * y, 0.01 * y)
            }
        });
        let g: [C64; 8] = std::array::from_fn(|k| C64::new(k as f64 - 3.0, 0.5 * k as f64));
        let d = liouvillian_dqd_apply(&rho, &g, &m, &ops);
        assert!(d.trace().norm() < 1e-13);
        assert!(d.hermiticity_deviation() < 1e-13);
    }

    #[test]
    fn closed_system_rabi_oscillation() {
        let w = 20.0;
        let m = DoubleDotModel { omega1: 40.0, omega2: 40.0, coupling: w, single_electron: false };
        let grid = UniformGrid::new(0.0, 0.2, 2000).unwrap();
        let coeffs = DqdCoefficients { grid, gammas: std::array::from_fn(|_| vec![ZERO; grid.len()]) };
        let traj = propagate_dqd(&DensityMatrix::basis_state(4, 1).unwrap(), &coeffs, &m).unwrap();
        for (t, rho) in grid.nodes().iter().zip(&traj) {
            let p1 = (w * t).cos().powi(2);
            assert!((rho.population(1) - p1).abs() < 1e-8);
            assert!((rho.population(1) + rho.population(2) - 1.0).abs() < 1e-12);
        }
    }
}
