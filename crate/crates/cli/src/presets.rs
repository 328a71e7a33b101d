//! Built-in configurations.

use nmdot::bath::{Lead, LeadSpec};
use nmdot::model::{DoubleDotModel, SingleDotModel, SystemModel};

use crate::config::{GridConfig, InitialState, RunConfig, TimeUnit};

pub const FIG1_GAMMA: f64 = 100.0;
pub const FIG1_OMEGA0: f64 = 50.0;
/// Length of the fig1 window in units of `t0`.
pub const FIG1_PERIODS: f64 = 2.0;

/// Steps that keep `d h` near 1/4, within [1000, 4000].
pub fn fig1_steps(d: f64) -> usize {
    let t_end = FIG1_PERIODS * 2.0 * std::f64::consts::PI / FIG1_OMEGA0;
    ((4.0 * d * t_end).ceil() as usize).clamp(1000, 4000)
}

fn biased_ou_leads(gamma: f64, d: f64) -> Vec<LeadSpec> {
    vec![
        LeadSpec::ornstein_uhlenbeck(Lead::Left, gamma, d, true),
        LeadSpec::ornstein_uhlenbeck(Lead::Right, gamma, d, false),
    ]
}

/// Single dot at large bias with symmetric Ornstein-Uhlenbeck leads of bandwidth `d`.
pub fn fig1(d: f64) -> RunConfig {
    RunConfig {
        model: SystemModel::Single(SingleDotModel { omega0: FIG1_OMEGA0 }),
        leads: biased_ou_leads(FIG1_GAMMA, d),
        grid: GridConfig { t_end: FIG1_PERIODS, unit: TimeUnit::Period, n_steps: fig1_steps(d) },
        initial: InitialState::Basis(0),
        output: None,
    }
}

/// The default `validate` run: the fig1 dot at `d = 50 gamma` over `10 / gamma`.
pub fn validation() -> RunConfig {
    RunConfig {
        model: SystemModel::Single(SingleDotModel { omega0: FIG1_OMEGA0 }),
        leads: biased_ou_leads(FIG1_GAMMA, 50.0 * FIG1_GAMMA),
        grid: GridConfig { t_end: 10.0 / FIG1_GAMMA, unit: TimeUnit::Absolute, n_steps: 1000 },
        initial: InitialState::Basis(0),
        output: None,
    }
}

/// Resonant double dot between biased leads, `Omega0 = gamma / 4`.
pub fn dqd(d: f64) -> RunConfig {
    RunConfig {
        model: SystemModel::Double(DoubleDotModel { omega1: 50.0, omega2: 50.0, coupling: 25.0, single_electron: false }),
        leads: biased_ou_leads(FIG1_GAMMA, d),
        grid: GridConfig { t_end: 2.0 / FIG1_GAMMA, unit: TimeUnit::Absolute, n_steps: 800 },
        initial: InitialState::Basis(0),
        output: None,
    }
}
