//! The `validate` suite: exactness, grid convergence, Markovian limits and
//! propagation invariants for one configuration.

use std::fmt::Write as _;

use nmdot::bath::{markovian_coefficients, Lead, LeadSpec, SpectralModel};
use nmdot::markov::{integrate_rates, single_dot_rates, SingleDotRateState};
use nmdot::model::{validate_density, DensityMatrix, SystemModel};
use nmdot::singledot::{self, symmetric_gamma2_deviation};
use nmdot::{UniformGrid, C64};

use crate::table::{coefficients_csv, compute_coefficients, grid_of, num, propagate_table, CoefficientTable};
use crate::{CliError, Result, RunConfig};

/// Bandwidths of the Markovian sweep, in units of the mean lead coupling.
pub const SWEEP_BANDWIDTHS: [f64; 4] = [1.0, 5.0, 10.0, 50.0];
const COEFFICIENT_CONVERGENCE: f64 = 5e-2;
const POPULATION_CONVERGENCE: f64 = 5e-3;
const SYMMETRY_TOLERANCE: f64 = 1e-8;
/// The exact dynamics themselves sit about 1.7e-2 from the rate equations at 50 gamma.
const SWEEP_TOLERANCE: f64 = 2.5e-2;
const LIMIT_TOLERANCE: f64 = 2e-2;
const TRACE_TOLERANCE: f64 = 1e-9;
const HERMITICITY_TOLERANCE: f64 = 1e-12;
const POSITIVITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub threshold: f64,
    pub bound: Bound,
}

impl Check {
    fn at_most(name: &'static str, measured: f64, threshold: f64) -> Self {
        Self { name, measured, threshold, bound: Bound::AtMost }
    }

    pub fn passed(&self) -> bool {
        match self.bound {
            Bound::AtMost => self.measured <= self.threshold,
            Bound::AtLeast => self.measured >= self.threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub d_over_gamma: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub sweep: Vec<SweepRow>,
    /// Coefficient table of the configured run.
    pub csv: String,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed()).count()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{:<28} {:>24} {:>4} {:>24}  result", "check", "measured", "", "threshold").unwrap();
        for c in &self.checks {
            let op = if c.bound == Bound::AtMost { "<=" } else { ">=" };
            let verdict = if c.passed() { "PASS" } else { "FAIL" };
            writeln!(s, "{:<28} {:>24} {:>4} {:>24}  {verdict}", c.name, num(c.measured), op, num(c.threshold)).unwrap();
        }
        if !self.sweep.is_empty() {
            writeln!(s, "\nMarkovian convergence (max |rho_11 - rate oracle| over the grid)").unwrap();
            writeln!(s, "{:>12} {:>24}", "d / gamma", "deviation").unwrap();
            for r in &self.sweep {
                writeln!(s, "{:>12} {:>24}", r.d_over_gamma, num(r.deviation)).unwrap();
            }
        }
        writeln!(s, "\n{} of {} checks passed", self.checks.len() - self.failures(), self.checks.len()).unwrap();
        s
    }
}

/// Runs every applicable check. A failing check is a report entry, not an error.
pub fn run_validate(config: &RunConfig) -> Result<ValidationReport> {
    let table = compute_coefficients(config)?;
    let mut checks = Vec::new();

    let at_zero = table.columns().iter().map(|(_, v)| v[0].norm()).fold(0.0, f64::max);
    checks.push(Check::at_most("coefficients_zero_at_t0", at_zero, 0.0));

    if let (CoefficientTable::Single(c), Some(_)) = (&table, biased_ou(config)) {
        if symmetric_leads(&config.leads) {
            checks.push(Check::at_most("gamma2_equals_minus_gamma1", symmetric_gamma2_deviation(c), SYMMETRY_TOLERANCE));
        }
    }

    checks.extend(convergence_checks(config, &table)?);

    let mut sweep = Vec::new();
    if let Some((gl, gr)) = biased_ou(config) {
        match config.model {
            SystemModel::Single(m) => {
                sweep = markov_sweep(config, gl, gr, m.omega0)?;
                let rising = sweep.windows(2).filter(|w| !(w[1].deviation < w[0].deviation)).count();
                checks.push(Check::at_most("sweep_nonmonotone_steps", rising as f64, 0.0));
                let last = sweep.last().map(|r| r.deviation).unwrap_or(f64::INFINITY);
                checks.push(Check::at_most("sweep_deviation_at_50_gamma", last, SWEEP_TOLERANCE));
            }
            SystemModel::Double(m) => {
                if let CoefficientTable::Double(c) = &table {
                    let n = c.grid.n_steps();
                    let mut worst: f64 = 0.0;
                    for (side, gamma, level, offset) in [(Lead::Left, gl, m.omega1, 0), (Lead::Right, gr, m.omega2, 4)] {
                        let spec = config.leads.iter().find(|l| l.lead == side).expect("biased leads present");
                        let (empty, filled) = markovian_coefficients(spec, level);
                        let mut target = [C64::new(0.0, 0.0); 4];
                        let own = if side == Lead::Left { 0 } else { 2 };
                        target[own] = C64::new(empty, 0.0);
                        target[own + 1] = C64::new(-filled, 0.0);
                        for (j, t) in target.iter().enumerate() {
                            worst = worst.max((c.gammas[offset + j][n] - t).norm() / (0.5 * gamma));
                        }
                    }
                    checks.push(Check::at_most("markov_coefficient_limits", worst, LIMIT_TOLERANCE));
                }
            }
        }
    }

    checks.extend(invariant_checks(config, &table));
    Ok(ValidationReport { checks, sweep, csv: coefficients_csv(config, &table) })
}

/// `(gamma_L, gamma_R)` when the left lead is an occupied and the right lead an
/// empty Ornstein-Uhlenbeck lead.
fn biased_ou(config: &RunConfig) -> Option<(f64, f64)> {
    let find = |side: Lead, want: bool| {
        config.leads.iter().find(|l| l.lead == side).and_then(|l| match l.model {
            SpectralModel::OrnsteinUhlenbeck { occupied, .. } if occupied == want => Some(l.gamma),
            _ => None,
        })
    };
    Some((find(Lead::Left, true)?, find(Lead::Right, false)?))
}

fn symmetric_leads(leads: &[LeadSpec]) -> bool {
    let d = |l: &LeadSpec| match l.model {
        SpectralModel::OrnsteinUhlenbeck { bandwidth, .. } => Some(bandwidth),
        _ => None,
    };
    leads.len() == 2 && leads[0].gamma == leads[1].gamma && d(&leads[0]) == d(&leads[1])
}

fn with_grid(config: &RunConfig, n_steps: usize) -> RunConfig {
    let mut c = config.clone();
    c.grid.n_steps = n_steps;
    c
}

/// Compares against a run on half as many steps at every shared node.
fn convergence_checks(config: &RunConfig, fine: &CoefficientTable) -> Result<Vec<Check>> {
    let half = config.grid.n_steps / 2;
    let coarse_config = with_grid(config, half);
    let coarse = compute_coefficients(&coarse_config)?;
    let (fine_config, fine_owned);
    let fine = if config.grid.n_steps == 2 * half {
        fine_config = config.clone();
        fine
    } else {
        fine_config = with_grid(config, 2 * half);
        fine_owned = compute_coefficients(&fine_config)?;
        &fine_owned
    };
    let fine_cols = fine.columns();
    let scale = fine_cols.iter().flat_map(|(_, v)| v.iter().map(|z| z.norm())).fold(1e-300, f64::max);
    let mut coefficient = 0.0f64;
    for ((_, f), (_, c)) in fine_cols.iter().zip(coarse.columns().iter()) {
        for (i, z) in c.iter().enumerate() {
            // Richardson estimate of the fine-grid error for a second-order scheme.
            coefficient = coefficient.max((f[2 * i] - z).norm() / 3.0 / scale);
        }
    }
    let population = match (propagate_table(&fine_config, fine), propagate_table(&coarse_config, &coarse)) {
        (Ok(a), Ok(b)) => b
            .iter()
            .enumerate()
            .flat_map(|(i, y)| {
                let x = &a[2 * i];
                (0..x.dim()).map(move |k| (x.population(k) - y.population(k)).abs() / 3.0)
            })
            .fold(0.0, f64::max),
        _ => f64::INFINITY,
    };
    Ok(vec![
        Check::at_most("coefficient_grid_convergence", coefficient, COEFFICIENT_CONVERGENCE),
        Check::at_most("population_grid_convergence", population, POPULATION_CONVERGENCE),
    ])
}

fn markov_sweep(config: &RunConfig, gamma_l: f64, gamma_r: f64, omega0: f64) -> Result<Vec<SweepRow>> {
    let grid: UniformGrid = grid_of(config)?;
    let rho0 = config.initial_density()?;
    let s0 = SingleDotRateState::from_density(&rho0);
    let oracle = integrate_rates(&s0, &grid, |s| single_dot_rates(s, gamma_l, gamma_r, omega0))?;
    let mean = 0.5 * (gamma_l + gamma_r);
    let model = nmdot::model::SingleDotModel { omega0 };
    SWEEP_BANDWIDTHS
        .iter()
        .map(|&x| {
            let leads: Vec<LeadSpec> = [(Lead::Left, gamma_l, true), (Lead::Right, gamma_r, false)]
                .into_iter()
                .map(|(side, g, occ)| LeadSpec::ornstein_uhlenbeck(side, g, x * mean, occ))
                .collect();
            let coeffs = singledot::compute_coefficients(&model, &leads, &grid)?;
            // A run that leaves the physical state space counts as infinitely far off.
            let deviation = match singledot::propagate(&rho0, &coeffs, omega0) {
                Ok(traj) => traj.iter().zip(&oracle).map(|(r, o)| (r.population(1) - o.rho11).abs()).fold(0.0, f64::max),
                Err(_) => f64::INFINITY,
            };
            Ok(SweepRow { d_over_gamma: x, deviation })
        })
        .collect::<std::result::Result<_, nmdot::Error>>()
        .map_err(CliError::from)
}

fn invariant_checks(config: &RunConfig, table: &CoefficientTable) -> Vec<Check> {
    let (trace, herm, min_eig) = match propagate_table(config, table) {
        Ok(traj) => summarize(&traj),
        Err(_) => (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY),
    };
    vec![
        Check::at_most("propagated_trace_deviation", trace, TRACE_TOLERANCE),
        Check::at_most("propagated_hermiticity", herm, HERMITICITY_TOLERANCE),
        Check { name: "propagated_min_eigenvalue", measured: min_eig, threshold: -POSITIVITY_TOLERANCE, bound: Bound::AtLeast },
    ]
}

fn summarize(traj: &[DensityMatrix]) -> (f64, f64, f64) {
    traj.iter().map(validate_density).fold((0.0f64, 0.0f64, f64::INFINITY), |(t, h, e), d| {
        (t.max(d.trace_deviation), h.max(d.hermiticity_deviation), e.min(d.min_eigenvalue))
    })
}
