//! System Hamiltonians, fermion operators and density matrices.
//!
//! Double-dot basis: `|0>` both empty, `|1> = c1†|0>`, `|2> = c2†|0>`,
//! `|3> = c1† c2† |0>`. With this ordering `c2 |3> = -|1>`.

use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::numerics::{hermitian_eigenvalues, rk4_step, ComplexMatrix, UniformGrid, C64};

const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleDotModel {
    pub omega0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleDotModel {
    pub omega1: f64,
    pub omega2: f64,
    /// Interdot tunnelling amplitude.
    pub coupling: f64,
    /// Restricts the rate-equation oracle to at most one electron in total.
    pub single_electron: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SystemModel {
    Single(SingleDotModel),
    Double(DoubleDotModel),
}

impl SystemModel {
    pub fn dim(&self) -> usize {
        match self {
            SystemModel::Single(_) => 2,
            SystemModel::Double(_) => 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            SystemModel::Single(m) => m.omega0.is_finite(),
            SystemModel::Double(m) => m.omega1.is_finite() && m.omega2.is_finite() && m.coupling.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput("model parameters must be finite".into()))
        }
    }
}

/// Annihilation operators; `c2` is `None` for the single dot.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionOps {
    pub c1: ComplexMatrix,
    pub c2: Option<ComplexMatrix>,
}

impl FermionOps {
    pub fn modes(&self) -> Vec<&ComplexMatrix> {
        std::iter::once(&self.c1).chain(self.c2.as_ref()).collect()
    }
}

pub fn build_fermion_ops(model: &SystemModel) -> FermionOps {
    match model {
        SystemModel::Single(_) => {
            let mut c = ComplexMatrix::zeros(2);
            c[(0, 1)] = ONE;
            FermionOps { c1: c, c2: None }
        }
        SystemModel::Double(_) => {
            let mut c1 = ComplexMatrix::zeros(4);
            c1[(0, 1)] = ONE;
            c1[(2, 3)] = ONE;
            let mut c2 = ComplexMatrix::zeros(4);
            c2[(0, 2)] = ONE;
            c2[(1, 3)] = -ONE;
            FermionOps { c1, c2: Some(c2) }
        }
    }
}

pub fn hamiltonian_matrix(model: &SystemModel) -> ComplexMatrix {
    match model {
        SystemModel::Single(m) => ComplexMatrix::diagonal(&[C64::new(0.0, 0.0), C64::new(m.omega0, 0.0)]),
        SystemModel::Double(m) => {
            let mut h = ComplexMatrix::diagonal(&[
                C64::new(0.0, 0.0),
                C64::new(m.omega1, 0.0),
                C64::new(m.omega2, 0.0),
                C64::new(m.omega1 + m.omega2, 0.0),
            ]);
            h[(1, 2)] = C64::new(m.coupling, 0.0);
            h[(2, 1)] = C64::new(m.coupling, 0.0);
            h
        }
    }
}

/// Hermiticity tolerance of a valid density matrix.
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;
/// Trace tolerance of a valid density matrix.
pub const TRACE_TOLERANCE: f64 = 1e-9;
/// Most negative population accepted.
pub const POSITIVITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    /// Wraps a matrix after checking the density-matrix invariants.
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        if !matches!(mat.dim(), 2 | 4) {
            return Err(Error::InvalidInput(format!("density matrix must be 2x2 or 4x4, got {0}x{0}", mat.dim())));
        }
        let rho = Self { mat };
        let d = validate_density(&rho);
        if !d.is_valid() {
            return Err(Error::InvalidInput(format!("not a density matrix: {d:?}")));
        }
        Ok(rho)
    }

    /// Wraps a matrix without any checks.
    pub fn from_matrix_unchecked(mat: ComplexMatrix) -> Self {
        Self { mat }
    }

    /// The pure basis state `|k><k|`.
    pub fn basis_state(dim: usize, k: usize) -> Result<Self> {
        if !matches!(dim, 2 | 4) || k >= dim {
            return Err(Error::InvalidInput(format!("no basis state {k} in dimension {dim}")));
        }
        let mut m = ComplexMatrix::zeros(dim);
        m[(k, k)] = ONE;
        Ok(Self { mat: m })
    }

    /// A diagonal state with the given populations.
    pub fn from_populations(p: &[f64]) -> Result<Self> {
        let m = ComplexMatrix::diagonal(&p.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>());
        Self::new(m)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn population(&self, k: usize) -> f64 {
        self.mat[(k, k)].re
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityDiagnostics {
    pub trace_deviation: f64,
    pub hermiticity_deviation: f64,
    pub min_eigenvalue: f64,
    pub min_population: f64,
}

impl DensityDiagnostics {
    /// Trace, Hermiticity and population-sign checks; positivity of the spectrum is reported separately.
    pub fn is_valid(&self) -> bool {
        self.trace_deviation <= TRACE_TOLERANCE
            && self.hermiticity_deviation <= HERMITICITY_TOLERANCE
            && self.min_population >= -POSITIVITY_TOLERANCE
    }
}

pub fn validate_density(rho: &DensityMatrix) -> DensityDiagnostics {
    let m = rho.matrix();
    let min_eigenvalue = if m.dim() == 2 {
        // Characteristic polynomial of the Hermitian part.
        let a = m[(0, 0)].re;
        let d = m[(1, 1)].re;
        let b = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
        let mean = 0.5 * (a + d);
        let half = 0.5 * (a - d);
        mean - (half * half + b.norm_sqr()).sqrt()
    } else {
        hermitian_eigenvalues(m)[0]
    };
    DensityDiagnostics {
        trace_deviation: (m.trace() - ONE).norm(),
        hermiticity_deviation: m.hermiticity_deviation(),
        min_eigenvalue,
        min_population: (0..m.dim()).map(|k| m[(k, k)].re).fold(f64::INFINITY, f64::min),
    }
}

/// Integrates `drho/dt = generator(t, rho)` by RK4 on the nodes of `grid`.
///
/// Every state is checked against the trace and Hermiticity tolerances.
pub fn propagate_density<G>(rho0: &DensityMatrix, grid: &UniformGrid, mut generator: G) -> Result<Vec<DensityMatrix>>
where
    G: FnMut(f64, &ComplexMatrix) -> Result<ComplexMatrix>,
{
    let dim = rho0.dim();
    let h = grid.step();
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let mut out = Vec::with_capacity(grid.len());
    out.push(rho0.clone());
    let mut y = rho0.matrix().as_slice().to_vec();
    for i in 0..grid.n_steps() {
        let t = grid.node(i);
        y = rk4_step(
            |t, y| {
                let m = ComplexMatrix::from_fn(dim, |r, c| y[r * dim + c]);
                match generator(t, &m) {
                    Ok(d) => d.as_slice().to_vec(),
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        vec![C64::new(0.0, 0.0); dim * dim]
                    }
                }
            },
            t,
            &y,
            h,
        )
        .map_err(|_| Error::PropagationDiverged { step: i + 1, t: grid.node(i + 1), reason: "non-finite state".into() })?;
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        let rho = DensityMatrix::from_matrix_unchecked(ComplexMatrix::from_fn(dim, |r, c| y[r * dim + c]));
        let d = validate_density(&rho);
        if d.trace_deviation > TRACE_TOLERANCE || d.hermiticity_deviation > HERMITICITY_TOLERANCE {
            return Err(Error::PropagationDiverged {
                step: i + 1,
                t: grid.node(i + 1),
                reason: format!(
                    "trace deviation {:.3e}, hermiticity deviation {:.3e}",
                    d.trace_deviation, d.hermiticity_deviation
                ),
            });
        }
        out.push(rho);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dqd(coupling: f64) -> SystemModel {
        SystemModel::Double(DoubleDotModel { omega1: 10.0, omega2: 20.0, coupling, single_electron: false })
    }

    #[test]
    fn anticommutators() {
        let ops = build_fermion_ops(&dqd(1.0));
        let modes = ops.modes();
        let id = ComplexMatrix::identity(4);
        for (i, a) in modes.iter().enumerate() {
            for (j, b) in modes.iter().enumerate() {
                assert!(a.anticommutator(b).max_abs() < 1e-14);
                let expect = if i == j { id.clone() } else { ComplexMatrix::zeros(4) };
                assert!((&a.anticommutator(&b.adjoint()) - &expect).max_abs() < 1e-14);
            }
        }
        assert_eq!(ops.c2.as_ref().unwrap()[(1, 3)], -ONE);
        let single = build_fermion_ops(&SystemModel::Single(SingleDotModel { omega0: 1.0 }));
        assert_eq!((&single.c1 * &single.c1).max_abs(), 0.0);
    }

    #[test]
    fn hamiltonians() {
        let h = hamiltonian_matrix(&SystemModel::Single(SingleDotModel { omega0: 50.0 }));
        assert_eq!(h[(1, 1)], C64::new(50.0, 0.0));
        let h = hamiltonian_matrix(&dqd(3.0));
        assert_eq!(h.hermiticity_deviation(), 0.0);
        assert_eq!(h[(3, 3)], C64::new(30.0, 0.0));
        let ops = build_fermion_ops(&dqd(3.0));
        let n = &(&ops.c1.adjoint() * &ops.c1) + &(&ops.c2.as_ref().unwrap().adjoint() * ops.c2.as_ref().unwrap());
        assert!(n.commutator(&h).max_abs() < 1e-14);
        let h0 = hamiltonian_matrix(&dqd(0.0));
        assert_eq!(h0[(1, 2)], C64::new(0.0, 0.0));
    }

    #[test]
    fn diagnostics() {
        let d = validate_density(&DensityMatrix::basis_state(2, 0).unwrap());
        assert_eq!(d.trace_deviation, 0.0);
        assert_eq!(d.min_eigenvalue, 0.0);
        let half = DensityMatrix::from_populations(&[0.5, 0.5]).unwrap();
        assert!((validate_density(&half).min_eigenvalue - 0.5).abs() < 1e-15);
        let quarter = DensityMatrix::from_populations(&[0.25; 4]).unwrap();
        assert!((validate_density(&quarter).min_eigenvalue - 0.25).abs() < 1e-12);
        assert!(DensityMatrix::from_populations(&[0.7, 0.7]).is_err());
    }
}
