use std::fmt::Write as _;

use nmdot::bath::SpectralModel;
use nmdot::doubledot::{compute_dqd_coefficients, propagate_dqd, DqdCoefficients, COEFFICIENT_LABELS};
use nmdot::markov::lindblad_rhs;
use nmdot::model::{propagate_density, DensityMatrix, SystemModel};
use nmdot::singledot::{self, SingleDotCoefficients};
use nmdot::{UniformGrid, C64};

use crate::{CliError, Result, RunConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientTable {
    Single(SingleDotCoefficients),
    Double(DqdCoefficients),
}

impl CoefficientTable {
    pub fn grid(&self) -> &UniformGrid {
        match self {
            CoefficientTable::Single(c) => &c.grid,
            CoefficientTable::Double(c) => &c.grid,
        }
    }

    /// Coefficient columns in output order.
    pub fn columns(&self) -> Vec<(String, &[C64])> {
        match self {
            CoefficientTable::Single(c) => vec![("gamma1".into(), &c.gamma1[..]), ("gamma2".into(), &c.gamma2[..])],
            CoefficientTable::Double(c) => {
                COEFFICIENT_LABELS.iter().zip(&c.gammas).map(|(l, g)| (format!("gamma_{l}"), &g[..])).collect()
            }
        }
    }
}

pub(crate) fn grid_of(config: &RunConfig) -> Result<UniformGrid> {
    Ok(UniformGrid::new(0.0, config.t_end_absolute(), config.grid.n_steps)?)
}

fn has_flat_leads(config: &RunConfig) -> bool {
    config.leads.iter().any(|l| l.model == SpectralModel::MarkovFlat)
}

/// Coefficients on the configured grid, solved on the current rayon pool.
pub fn compute_coefficients(config: &RunConfig) -> Result<CoefficientTable> {
    if has_flat_leads(config) {
        return Err(CliError::Usage("flat-band leads have no memory kernel; use ou or tabulated leads for coefficients".into()));
    }
    let grid = grid_of(config)?;
    Ok(match config.model {
        SystemModel::Single(m) => CoefficientTable::Single(singledot::compute_coefficients(&m, &config.leads, &grid)?),
        SystemModel::Double(m) => CoefficientTable::Double(compute_dqd_coefficients(&m, &config.leads, &grid)?),
    })
}

/// Propagates the initial state. All-flat lead sets use the memoryless
/// generator; otherwise the exact coefficients are computed first.
pub fn propagate(config: &RunConfig) -> Result<(UniformGrid, Vec<DensityMatrix>)> {
    let grid = grid_of(config)?;
    if has_flat_leads(config) {
        if config.leads.iter().any(|l| l.model != SpectralModel::MarkovFlat) {
            return Err(CliError::Usage("flat-band leads cannot be mixed with leads that have memory".into()));
        }
        let rho0 = config.initial_density()?;
        let traj = propagate_density(&rho0, &grid, |_, rho| lindblad_rhs(rho, &config.model, &config.leads))?;
        return Ok((grid, traj));
    }
    let table = compute_coefficients(config)?;
    Ok((grid, propagate_table(config, &table)?))
}

/// Propagates the initial state with precomputed coefficients.
pub fn propagate_table(config: &RunConfig, table: &CoefficientTable) -> Result<Vec<DensityMatrix>> {
    let rho0 = config.initial_density()?;
    Ok(match (config.model, table) {
        (SystemModel::Single(m), CoefficientTable::Single(c)) => singledot::propagate(&rho0, c, m.omega0)?,
        (SystemModel::Double(m), CoefficientTable::Double(c)) => propagate_dqd(&rho0, c, &m)?,
        _ => return Err(CliError::Usage("coefficient table does not match the model".into())),
    })
}

pub(crate) fn num(x: f64) -> String {
    format!("{x:.15e}")
}

/// Time column name and scale factor.
pub(crate) fn time_axis(config: &RunConfig) -> (&'static str, f64) {
    match config.t0() {
        Some(t0) => ("t_over_t0", 1.0 / t0),
        None => ("t", 1.0),
    }
}

pub fn coefficients_csv(config: &RunConfig, table: &CoefficientTable) -> String {
    let (tname, scale) = time_axis(config);
    let cols = table.columns();
    let mut out = String::from(tname);
    for (name, _) in &cols {
        write!(out, ",re_{name},im_{name}").unwrap();
    }
    out.push('\n');
    for (i, t) in table.grid().nodes().iter().enumerate() {
        out.push_str(&num(t * scale));
        for (_, v) in &cols {
            write!(out, ",{},{}", num(v[i].re), num(v[i].im)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn propagation_csv(config: &RunConfig, grid: &UniformGrid, traj: &[DensityMatrix]) -> String {
    let (tname, scale) = time_axis(config);
    let dim = config.model.dim();
    let mut out = String::from(tname);
    for k in 0..dim {
        write!(out, ",rho_{k}{k}").unwrap();
    }
    let coherences: &[(usize, usize)] = if dim == 2 { &[(0, 1)] } else { &[(0, 1), (1, 2)] };
    for (i, j) in coherences {
        write!(out, ",re_rho_{i}{j},im_rho_{i}{j}").unwrap();
    }
    out.push_str(",trace_dev,herm_dev\n");
    for (t, rho) in grid.nodes().iter().zip(traj) {
        out.push_str(&num(t * scale));
        for k in 0..dim {
            write!(out, ",{}", num(rho.population(k))).unwrap();
        }
        for &(i, j) in coherences {
            let z = rho.entry(i, j);
            write!(out, ",{},{}", num(z.re), num(z.im)).unwrap();
        }
        let trace_dev = (rho.matrix().trace() - C64::new(1.0, 0.0)).norm();
        write!(out, ",{},{}\n", num(trace_dev), num(rho.matrix().hermiticity_deviation())).unwrap();
    }
    out
}
