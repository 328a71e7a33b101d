//! Exact time-dependent coefficients and dynamics of a single resonant level.
//!
//! The master equation is
//!
//! ```text
//! drho/dt = -i[H, rho] + G1 [c, rho c†] + G2 [c, c† rho] + G1* [c rho, c†] + G2* [rho c, c†]
//! ```
//!
//! with `G1(t)`, `G2(t)` obtained from the auxiliary functions `h`, `A1`, `A2`,
//! `B1`, `B2` on `s ∈ [0, t]`:
//!
//! ```text
//! h'  = i w0 h + ∫_s^t beta(s - s') h(s') ds',                   h(t) = 1
//! A'  = i w0 A - ∫_0^s beta(s - s') A(s') ds' + U(s),              U(s) = ∫_0^t a2(s - s') h(s') ds'
//! B'  = i w0 B - ∫_0^s beta(s - s') B(s') ds' + V(s),              V(s) = ∫_0^t a1(s' - s) h(s') ds'
//! A1(t) = B1(t) = 1,  A2(t) = B2(t) = 0
//! G1(t) = ∫_0^t [a1(s - t) A1(s) - a2(t - s) B2(s)] ds
//! G2(t) = ∫_0^t [a1(s - t) A2(s) - a2(t - s) B1(s)] ds
//! ```
//!
//! The pairing of `A1` with `B2` (and `A2` with `B1`) is what makes the
//! coefficients reduce to the rate `G1 -> (1 - n) gamma / 2`, `G2 -> -n gamma / 2`
//! for a wide band.

use rayon::prelude::*;

use crate::bath::{beta_kernel, kernel_from_spectral, Branch, CorrelationKernel, LagTable, LeadSpec};
use crate::error::{Error, Result};
use crate::model::{build_fermion_ops, propagate_density, DensityMatrix, SingleDotModel, SystemModel};
use crate::numerics::{linear_interpolate, trapezoid_weights_n, ComplexMatrix, UniformGrid, C64};
use crate::volterra::{
    convolve_source, solve_backward, solve_mixed_final_value, Convolver, KernelMatrix, LagOrientation,
    MixedPropagator, VolterraProblem,
};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Lead-summed kernels `a1 = a1_L + a1_R` and `a2 = a2_L + a2_R`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleDotKernels {
    pub alpha1: CorrelationKernel,
    pub alpha2: CorrelationKernel,
}

impl SingleDotKernels {
    pub fn from_leads(leads: &[LeadSpec]) -> Result<Self> {
        let mut alpha1 = CorrelationKernel::zero();
        let mut alpha2 = CorrelationKernel::zero();
        for lead in leads {
            alpha1 = alpha1.sum(&kernel_from_spectral(lead, Branch::Empty)?);
            alpha2 = alpha2.sum(&kernel_from_spectral(lead, Branch::Filled)?);
        }
        Ok(Self { alpha1, alpha2 })
    }

    pub fn beta(&self) -> CorrelationKernel {
        beta_kernel(&self.alpha1, &self.alpha2)
    }

    /// Samples every kernel at the lags of `grid`.
    pub fn tabulate(&self, grid: &UniformGrid) -> KernelTables {
        let (h, n) = (grid.step(), grid.n_steps());
        KernelTables {
            alpha1: self.alpha1.tabulate(h, n),
            alpha2: self.alpha2.tabulate(h, n),
            beta: self.beta().tabulate(h, n),
        }
    }
}

/// Lag-indexed samples of `a1`, `a2` and `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTables {
    pub alpha1: LagTable,
    pub alpha2: LagTable,
    pub beta: LagTable,
}

/// Auxiliary functions for one outer time, sampled on `[0, t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxFunctions {
    pub h: Vec<C64>,
    pub a1: Vec<C64>,
    pub a2: Vec<C64>,
    pub b1: Vec<C64>,
    pub b2: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleDotCoefficients {
    pub grid: UniformGrid,
    pub gamma1: Vec<C64>,
    pub gamma2: Vec<C64>,
}

impl SingleDotCoefficients {
    /// Linearly interpolated `(G1(t), G2(t))`.
    pub fn at(&self, t: f64) -> Result<(C64, C64)> {
        Ok((linear_interpolate(&self.grid, &self.gamma1, t)?, linear_interpolate(&self.grid, &self.gamma2, t)?))
    }
}

/// Solves the `h` equation on `grid = [0, t]`.
pub fn compute_h(beta: &LagTable, omega0: f64, grid: &UniformGrid) -> Result<Vec<C64>> {
    let problem = VolterraProblem {
        grid: *grid,
        coeff: ComplexMatrix::diagonal(&[C64::new(0.0, omega0)]),
        memory: KernelMatrix::scalar(beta.clone()),
        source: vec![],
        final_value: vec![ONE],
    };
    Ok(solve_backward(&problem)?.into_components().remove(0))
}

/// Solves the four `A`, `B` problems on `grid = [0, t]` by dense global solves.
pub fn compute_ab(h: &[C64], tables: &KernelTables, omega0: f64, grid: &UniformGrid) -> Result<AuxFunctions> {
    if h.len() != grid.len() {
        return Err(Error::InvalidInput("h samples do not match the grid".into()));
    }
    let step = grid.step();
    let u = convolve_source(&tables.alpha2, LagOrientation::Forward, h, step)?;
    let v = convolve_source(&tables.alpha1, LagOrientation::Reflected, h, step)?;
    let solve = |source: &[C64], fin: C64| -> Result<Vec<C64>> {
        let problem = VolterraProblem {
            grid: *grid,
            coeff: ComplexMatrix::diagonal(&[C64::new(0.0, omega0)]),
            memory: KernelMatrix::scalar(tables.beta.scaled(-1.0)),
            source: vec![source.to_vec()],
            final_value: vec![fin],
        };
        Ok(solve_mixed_final_value(&problem)?.into_components().remove(0))
    };
    Ok(AuxFunctions {
        h: h.to_vec(),
        a1: solve(&u, ONE)?,
        a2: solve(&u, ZERO)?,
        b1: solve(&v, ONE)?,
        b2: solve(&v, ZERO)?,
    })
}

/// Trapezoid evaluation of `(G1(t), G2(t))` from auxiliary functions on `[0, t]`.
pub fn gamma_at(aux: &AuxFunctions, tables: &KernelTables, step: f64) -> (C64, C64) {
    let k = aux.a1.len() - 1;
    let w = trapezoid_weights_n(k, step);
    let (mut g1, mut g2) = (ZERO, ZERO);
    for i in 0..=k {
        let a1 = tables.alpha1.at(i as isize - k as isize);
        let a2 = tables.alpha2.at(k as isize - i as isize);
        g1 += (a1 * aux.a1[i] - a2 * aux.b2[i]) * w[i];
        g2 += (a1 * aux.a2[i] - a2 * aux.b1[i]) * w[i];
    }
    (g1, g2)
}

/// Coefficient engine for one lead configuration on a fixed outer grid.
///
/// The outer times are the nodes of the grid. All outer times share one
/// backward solve for `h` (the `h` problem depends only on `t - s`) and one
/// homogeneous march for the `A`/`B` problems, so each outer time costs
/// `O(k^2)` and yields the same discrete solution as [`compute_h`] and
/// [`compute_ab`] on the prefix grid.
#[derive(Debug, Clone)]
pub struct SingleDotSolver {
    grid: UniformGrid,
    tables: KernelTables,
    h_global: Vec<C64>,
    conv_u: Convolver,
    conv_v: Convolver,
    propagator: MixedPropagator,
}

impl SingleDotSolver {
    pub fn new(model: &SingleDotModel, kernels: &SingleDotKernels, grid: &UniformGrid) -> Result<Self> {
        SystemModel::Single(*model).validate()?;
        if grid.t_start() != 0.0 {
            return Err(Error::InvalidGrid("coefficient grids start at t = 0".into()));
        }
        let tables = kernels.tabulate(grid);
        let n = grid.n_steps();
        let h_global = compute_h(&tables.beta, model.omega0, grid)?;
        let conv_u = Convolver::new(&tables.alpha2, LagOrientation::Forward, n);
        let conv_v = Convolver::new(&tables.alpha1, LagOrientation::Reflected, n);
        let propagator = MixedPropagator::new(
            ComplexMatrix::diagonal(&[C64::new(0.0, model.omega0)]),
            &KernelMatrix::scalar(tables.beta.scaled(-1.0)),
            grid,
        )?;
        Ok(Self { grid: *grid, tables, h_global, conv_u, conv_v, propagator })
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn tables(&self) -> &KernelTables {
        &self.tables
    }

    /// Auxiliary functions for the outer time at node `k >= 1`.
    pub fn aux_functions(&self, k: usize) -> Result<AuxFunctions> {
        let n = self.grid.n_steps();
        if k == 0 || k > n {
            return Err(Error::InvalidInput(format!("outer node {k} outside 1..={n}")));
        }
        let step = self.grid.step();
        let h = self.h_global[n - k..].to_vec();
        let u = self.conv_u.apply(&h, step);
        let v = self.conv_v.apply(&h, step);
        let pa = self.propagator.particular(&[u], k)?;
        let pb = self.propagator.particular(&[v], k)?;
        let one = |p: &[Vec<C64>], fin: C64| -> Result<Vec<C64>> {
            Ok(self.propagator.complete(p, &[fin], k)?.remove(0))
        };
        Ok(AuxFunctions { a1: one(&pa, ONE)?, a2: one(&pa, ZERO)?, b1: one(&pb, ONE)?, b2: one(&pb, ZERO)?, h })
    }

    /// `(G1, G2)` at outer node `k`; zero at `k = 0`.
    pub fn gamma_at_node(&self, k: usize) -> Result<(C64, C64)> {
        if k == 0 {
            return Ok((ZERO, ZERO));
        }
        let aux = self.aux_functions(k)?;
        let (g1, g2) = gamma_at(&aux, &self.tables, self.grid.step());
        if !(g1.re.is_finite() && g1.im.is_finite() && g2.re.is_finite() && g2.im.is_finite()) {
            return Err(Error::NonFinite("single-dot coefficients"));
        }
        Ok((g1, g2))
    }

    /// Coefficients at every node, computed in parallel on the current rayon pool.
    pub fn coefficients(&self) -> Result<SingleDotCoefficients> {
        let pairs: Vec<(C64, C64)> =
            (0..self.grid.len()).into_par_iter().map(|k| self.gamma_at_node(k)).collect::<Result<_>>()?;
        let (gamma1, gamma2) = pairs.into_iter().unzip();
        Ok(SingleDotCoefficients { grid: self.grid, gamma1, gamma2 })
    }
}

/// Builds kernels from `leads` and computes the coefficient table on `grid`.
pub fn compute_coefficients(model: &SingleDotModel, leads: &[LeadSpec], grid: &UniformGrid) -> Result<SingleDotCoefficients> {
    let kernels = SingleDotKernels::from_leads(leads)?;
    SingleDotSolver::new(model, &kernels, grid)?.coefficients()
}

/// Largest `|G2 + G1|` relative to the largest `|G1|`.
pub fn symmetric_gamma2_deviation(coeffs: &SingleDotCoefficients) -> f64 {
    let scale = coeffs.gamma1.iter().map(|g| g.norm()).fold(0.0, f64::max);
    let dev = coeffs.gamma1.iter().zip(&coeffs.gamma2).map(|(a, b)| (a + b).norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        dev
    } else {
        dev / scale
    }
}

/// Whether `G2 = -G1` holds at every node to `1e-8` relative.
pub fn symmetric_gamma2_check(coeffs: &SingleDotCoefficients) -> bool {
    symmetric_gamma2_deviation(coeffs) <= 1e-8
}

/// Right side of the single-dot master equation.
pub fn liouvillian_apply(rho: &ComplexMatrix, gamma1: C64, gamma2: C64, omega0: f64) -> ComplexMatrix {
    let c = &build_fermion_ops(&SystemModel::Single(SingleDotModel { omega0 })).c1;
    let cd = c.adjoint();
    let h = ComplexMatrix::diagonal(&[ZERO, C64::new(omega0, 0.0)]);
    let mut out = h.commutator(rho).scale(C64::new(0.0, -1.0));
    let terms = [
        (gamma1, c.commutator(&(rho * &cd))),
        (gamma2, c.commutator(&(&cd * rho))),
        (gamma1.conj(), (c * rho).commutator(&cd)),
        (gamma2.conj(), (rho * c).commutator(&cd)),
    ];
    for (g, m) in terms {
        out = &out + &m.scale(g);
    }
    out
}

/// Propagates `rho0` over the coefficient grid.
pub fn propagate(rho0: &DensityMatrix, coeffs: &SingleDotCoefficients, omega0: f64) -> Result<Vec<DensityMatrix>> {
    if rho0.dim() != 2 {
        return Err(Error::InvalidInput("single-dot states are 2x2".into()));
    }
    propagate_density(rho0, &coeffs.grid, |t, rho| {
        let (g1, g2) = coeffs.at(t)?;
        Ok(liouvillian_apply(rho, g1, g2, omega0))
    })
}
