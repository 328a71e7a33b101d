//! The `key = value` run configuration.
//!
//! ```text
//! model = single            # or dqd
//! omega0 = 50               # single; dqd uses omega1, omega2, coupling, single_electron
//! lead.L.model = ou         # ou | flat | tabulated
//! lead.L.gamma = 100
//! lead.L.d = 5000           # ou only
//! lead.L.occupied = true    # ou and flat; flat also accepts mu and kt
//! lead.R.model = tabulated
//! lead.R.gamma = 100
//! lead.R.mu = 0
//! lead.R.kt = 10
//! lead.R.omegas = -500, 0, 500
//! lead.R.shape = 1, 1, 1
//! grid.t_end = 2
//! grid.t_unit = t0          # t0 (2 pi / omega0 or 2 pi / omega1) | absolute
//! grid.n_steps = 1000
//! initial.state = 0         # basis index, or initial.rho.IJ = re[, im] entries
//! output.path = out.csv
//! ```

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;

use nmdot::bath::{Lead, LeadSpec, SpectralModel};
use nmdot::model::{DensityMatrix, DoubleDotModel, SingleDotModel, SystemModel};
use nmdot::{ComplexMatrix, C64};

pub const MIN_STEPS: usize = 10;
pub const MAX_STEPS: usize = 1_000_000;
const PROBABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`{}", suggestion.as_ref().map(|s| format!(" (nearest valid key: `{s}`)")).unwrap_or_default())]
    UnknownKey { line: usize, key: String, suggestion: Option<String> },
    #[error("line {line}: key `{key}` does not apply here ({reason})")]
    NotApplicable { line: usize, key: String, reason: String },
    #[error("line {line}: key `{key}` given twice (first on line {first})")]
    Duplicate { line: usize, key: String, first: usize },
    #[error("line {line}: missing required key `{key}`")]
    Missing { line: usize, key: String },
    #[error("line {line}: `{key}`: {reason}")]
    BadValue { line: usize, key: String, reason: String },
    #[error("line {line}: {reason}")]
    Invariant { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeUnit {
    /// Multiples of `2 pi / omega`, with `omega` the single-dot level or `omega1`.
    Period,
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub t_end: f64,
    pub unit: TimeUnit,
    pub n_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Basis(usize),
    /// Upper-triangle entries keyed by `(row, col)`; the rest follows by Hermiticity.
    Entries(BTreeMap<(usize, usize), C64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: SystemModel,
    pub leads: Vec<LeadSpec>,
    pub grid: GridConfig,
    pub initial: InitialState,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// Angular frequency that defines `t0`, if nonzero.
    pub fn reference_frequency(&self) -> Option<f64> {
        let w = match self.model {
            SystemModel::Single(m) => m.omega0,
            SystemModel::Double(m) => m.omega1,
        };
        (w != 0.0).then_some(w)
    }

    /// `t0 = 2 pi / |omega|`.
    pub fn t0(&self) -> Option<f64> {
        self.reference_frequency().map(|w| 2.0 * std::f64::consts::PI / w.abs())
    }

    /// End time in `1/ueV`.
    pub fn t_end_absolute(&self) -> f64 {
        match self.grid.unit {
            TimeUnit::Absolute => self.grid.t_end,
            TimeUnit::Period => self.grid.t_end * self.t0().expect("validated at parse time"),
        }
    }

    pub fn initial_density(&self) -> Result<DensityMatrix, ConfigError> {
        initial_density(&self.initial, self.model.dim()).map_err(|reason| ConfigError::Invariant { line: 0, reason })
    }
}

fn initial_density(initial: &InitialState, dim: usize) -> Result<DensityMatrix, String> {
    match initial {
        InitialState::Basis(k) => DensityMatrix::basis_state(dim, *k).map_err(|e| e.to_string()),
        InitialState::Entries(map) => {
            let mut m = ComplexMatrix::zeros(dim);
            for (&(i, j), &v) in map {
                if i >= dim || j >= dim {
                    return Err(format!("initial.rho.{i}{j} lies outside the {dim}x{dim} state"));
                }
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
            let total: f64 = (0..dim).map(|k| m[(k, k)].re).sum();
            if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
                return Err(format!("initial probabilities sum to {total}, not 1"));
            }
            DensityMatrix::new(m).map_err(|e| e.to_string())
        }
    }
}

struct Entry {
    line: usize,
    value: String,
    used: bool,
}

struct Table {
    entries: BTreeMap<String, Entry>,
    last_line: usize,
}

impl Table {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.get_mut(key).map(|e| {
            e.used = true;
            (e.line, e.value.clone())
        })
    }

    fn require(&mut self, key: &str) -> Result<(usize, String), ConfigError> {
        self.take(key).ok_or_else(|| ConfigError::Missing { line: self.last_line, key: key.into() })
    }

    fn required_number(&mut self, key: &str) -> Result<(usize, f64), ConfigError> {
        let (line, v) = self.require(key)?;
        Ok((line, parse_number(line, key, &v)?))
    }

    fn boolean(&mut self, key: &str) -> Result<Option<(usize, bool)>, ConfigError> {
        self.take(key)
            .map(|(line, v)| match v.as_str() {
                "true" => Ok((line, true)),
                "false" => Ok((line, false)),
                _ => Err(bad(line, key, "expected `true` or `false`")),
            })
            .transpose()
    }
}

fn bad(line: usize, key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue { line, key: key.into(), reason: reason.into() }
}

fn parse_number(line: usize, key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v.parse().map_err(|_| bad(line, key, format!("`{v}` is not a number")))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad(line, key, "value must be finite"))
    }
}

fn parse_list(line: usize, key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',').map(|s| parse_number(line, key, s.trim())).collect()
}

fn parse_complex(line: usize, key: &str, v: &str) -> Result<C64, ConfigError> {
    match parse_list(line, key, v)?.as_slice() {
        [re] => Ok(C64::new(*re, 0.0)),
        [re, im] => Ok(C64::new(*re, *im)),
        _ => Err(bad(line, key, "expected `re` or `re, im`")),
    }
}

const LEAD_FIELDS: [&str; 8] = ["model", "gamma", "d", "occupied", "mu", "kt", "omegas", "shape"];
const FIXED_KEYS: [&str; 12] = [
    "model",
    "omega0",
    "omega1",
    "omega2",
    "coupling",
    "single_electron",
    "grid.t_end",
    "grid.t_unit",
    "grid.n_steps",
    "initial.state",
    "output.path",
    "initial.rho.00",
];

fn all_keys() -> Vec<String> {
    let mut keys: Vec<String> = FIXED_KEYS.iter().map(|s| s.to_string()).collect();
    for side in ["L", "R"] {
        keys.extend(LEAD_FIELDS.iter().map(|f| format!("lead.{side}.{f}")));
    }
    keys
}

fn is_known(key: &str) -> bool {
    if let Some(ij) = key.strip_prefix("initial.rho.") {
        let b = ij.as_bytes();
        return b.len() == 2 && b.iter().all(|c| (b'0'..=b'3').contains(c)) && b[0] <= b[1];
    }
    all_keys().iter().any(|k| k == key)
}

fn nearest(key: &str) -> Option<String> {
    all_keys()
        .into_iter()
        .map(|k| (strsim::levenshtein(key, &k), k))
        .min_by_key(|(d, _)| *d)
        .filter(|(d, k)| *d <= k.len().max(key.len()) / 2 + 1)
        .map(|(_, k)| k)
}

fn tokenize(text: &str) -> Result<Table, ConfigError> {
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(ConfigError::Syntax { line, text: body.into() });
        };
        let (key, value) = (k.trim().to_string(), v.trim().to_string());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax { line, text: body.into() });
        }
        if !is_known(&key) {
            return Err(ConfigError::UnknownKey { line, suggestion: nearest(&key), key });
        }
        if let Some(first) = entries.get(&key) {
            return Err(ConfigError::Duplicate { line, key, first: first.line });
        }
        entries.insert(key, Entry { line, value, used: false });
    }
    Ok(Table { entries, last_line: last_line.max(1) })
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut t = tokenize(text)?;
    let (model_line, model_name) = t.require("model")?;
    let model = match model_name.as_str() {
        "single" => SystemModel::Single(SingleDotModel { omega0: t.required_number("omega0")?.1 }),
        "dqd" => SystemModel::Double(DoubleDotModel {
            omega1: t.required_number("omega1")?.1,
            omega2: t.required_number("omega2")?.1,
            coupling: t.required_number("coupling")?.1,
            single_electron: t.boolean("single_electron")?.map(|b| b.1).unwrap_or(false),
        }),
        other => return Err(bad(model_line, "model", format!("`{other}` is neither `single` nor `dqd`"))),
    };

    let mut leads = Vec::new();
    for lead in [Lead::Left, Lead::Right] {
        if let Some(spec) = parse_lead(&mut t, lead)? {
            leads.push(spec);
        }
    }

    let (t_line, t_end) = t.required_number("grid.t_end")?;
    if !(t_end > 0.0) {
        return Err(ConfigError::Invariant { line: t_line, reason: format!("grid.t_end must be positive, got {t_end}") });
    }
    let unit = match t.take("grid.t_unit") {
        None => TimeUnit::Period,
        Some((_, v)) if v == "t0" => TimeUnit::Period,
        Some((_, v)) if v == "absolute" => TimeUnit::Absolute,
        Some((line, v)) => return Err(bad(line, "grid.t_unit", format!("`{v}` is neither `t0` nor `absolute`"))),
    };
    let (n_line, n_raw) = t.required_number("grid.n_steps")?;
    if n_raw.fract() != 0.0 || !(MIN_STEPS as f64..=MAX_STEPS as f64).contains(&n_raw) {
        return Err(ConfigError::Invariant {
            line: n_line,
            reason: format!("grid.n_steps must be an integer in [{MIN_STEPS}, {MAX_STEPS}], got {n_raw}"),
        });
    }
    let grid = GridConfig { t_end, unit, n_steps: n_raw as usize };

    let initial = parse_initial(&mut t, model.dim())?;
    let output = t.take("output.path").map(|(_, v)| PathBuf::from(v));

    let config = RunConfig { model, leads, grid, initial, output };
    if config.grid.unit == TimeUnit::Period && config.reference_frequency().is_none() {
        return Err(ConfigError::Invariant { line: t_line, reason: "t0 units need a nonzero level energy; use grid.t_unit = absolute".into() });
    }
    if let Some((key, e)) = t.entries.iter().find(|(_, e)| !e.used) {
        return Err(ConfigError::NotApplicable {
            line: e.line,
            key: key.clone(),
            reason: format!("not used by model `{model_name}` with the chosen lead models"),
        });
    }
    Ok(config)
}

fn parse_lead(t: &mut Table, lead: Lead) -> Result<Option<LeadSpec>, ConfigError> {
    let p = |f: &str| format!("lead.{}.{f}", lead.tag());
    let Some((line, kind)) = t.take(&p("model")) else {
        return Ok(None);
    };
    let (g_line, gamma) = t.required_number(&p("gamma"))?;
    if gamma < 0.0 {
        return Err(ConfigError::Invariant { line: g_line, reason: format!("{} must be nonnegative", p("gamma")) });
    }
    let spec = match kind.as_str() {
        "ou" => {
            let (d_line, d) = t.required_number(&p("d"))?;
            if !(d > 0.0) {
                return Err(ConfigError::Invariant { line: d_line, reason: format!("{} must be positive", p("d")) });
            }
            let occupied = t.boolean(&p("occupied"))?.ok_or_else(|| ConfigError::Missing { line: t.last_line, key: p("occupied") })?.1;
            LeadSpec::ornstein_uhlenbeck(lead, gamma, d, occupied)
        }
        "flat" => match t.boolean(&p("occupied"))? {
            Some((_, occ)) => LeadSpec::flat(lead, gamma, occ),
            None => {
                let (_, mu) = t.required_number(&p("mu"))?;
                let (_, kt) = t.required_number(&p("kt"))?;
                LeadSpec { lead, gamma, mu, kt, model: SpectralModel::MarkovFlat }
            }
        },
        "tabulated" => {
            let (_, mu) = t.required_number(&p("mu"))?;
            let (_, kt) = t.required_number(&p("kt"))?;
            let (lo, omegas) = t.require(&p("omegas"))?;
            let (ls, shape) = t.require(&p("shape"))?;
            let model = SpectralModel::Tabulated { omegas: parse_list(lo, &p("omegas"), &omegas)?, shape: parse_list(ls, &p("shape"), &shape)? };
            LeadSpec { lead, gamma, mu, kt, model }
        }
        other => return Err(bad(line, &p("model"), format!("`{other}` is not one of ou, flat, tabulated"))),
    };
    spec.validate().map_err(|e| ConfigError::Invariant { line, reason: e.to_string() })?;
    Ok(Some(spec))
}

fn parse_initial(t: &mut Table, dim: usize) -> Result<InitialState, ConfigError> {
    let rho_keys: Vec<String> = t.entries.keys().filter(|k| k.starts_with("initial.rho.")).cloned().collect();
    let state = t.take("initial.state");
    let initial = match (state, rho_keys.is_empty()) {
        (Some((line, _)), false) => {
            return Err(ConfigError::Invariant { line, reason: "give either initial.state or initial.rho entries, not both".into() })
        }
        (Some((line, v)), true) => {
            let k: usize = v.parse().map_err(|_| bad(line, "initial.state", format!("`{v}` is not a basis index")))?;
            if k >= dim {
                return Err(ConfigError::Invariant { line, reason: format!("initial.state {k} outside 0..{dim}") });
            }
            InitialState::Basis(k)
        }
        (None, true) => InitialState::Basis(0),
        (None, false) => {
            let mut map = BTreeMap::new();
            let mut line = 0;
            for key in rho_keys {
                let (l, v) = t.take(&key).expect("listed above");
                line = line.max(l);
                let b = key.as_bytes();
                let (i, j) = ((b[b.len() - 2] - b'0') as usize, (b[b.len() - 1] - b'0') as usize);
                let z = parse_complex(l, &key, &v)?;
                if i == j && z.im != 0.0 {
                    return Err(bad(l, &key, "diagonal entries are real"));
                }
                map.insert((i, j), z);
            }
            let state = InitialState::Entries(map);
            initial_density(&state, dim).map_err(|reason| ConfigError::Invariant { line, reason })?;
            state
        }
    };
    Ok(initial)
}

impl fmt::Display for RunConfig {
    /// Canonical text form; parsing it yields an equal config.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        match self.model {
            SystemModel::Single(m) => {
                writeln!(s, "model = single")?;
                writeln!(s, "omega0 = {}", m.omega0)?;
            }
            SystemModel::Double(m) => {
                writeln!(s, "model = dqd")?;
                writeln!(s, "omega1 = {}", m.omega1)?;
                writeln!(s, "omega2 = {}", m.omega2)?;
                writeln!(s, "coupling = {}", m.coupling)?;
                writeln!(s, "single_electron = {}", m.single_electron)?;
            }
        }
        for lead in &self.leads {
            let p = format!("lead.{}", lead.lead.tag());
            match &lead.model {
                SpectralModel::OrnsteinUhlenbeck { bandwidth, occupied } => {
                    writeln!(s, "{p}.model = ou\n{p}.gamma = {}\n{p}.d = {bandwidth}\n{p}.occupied = {occupied}", lead.gamma)?;
                }
                SpectralModel::MarkovFlat if lead.mu.is_infinite() => {
                    writeln!(s, "{p}.model = flat\n{p}.gamma = {}\n{p}.occupied = {}", lead.gamma, lead.mu > 0.0)?;
                }
                SpectralModel::MarkovFlat => {
                    writeln!(s, "{p}.model = flat\n{p}.gamma = {}\n{p}.mu = {}\n{p}.kt = {}", lead.gamma, lead.mu, lead.kt)?;
                }
                SpectralModel::Tabulated { omegas, shape } => {
                    let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
                    writeln!(s, "{p}.model = tabulated\n{p}.gamma = {}\n{p}.mu = {}\n{p}.kt = {}", lead.gamma, lead.mu, lead.kt)?;
                    writeln!(s, "{p}.omegas = {}\n{p}.shape = {}", join(omegas), join(shape))?;
                }
            }
        }
        writeln!(s, "grid.t_end = {}", self.grid.t_end)?;
        writeln!(s, "grid.t_unit = {}", if self.grid.unit == TimeUnit::Period { "t0" } else { "absolute" })?;
        writeln!(s, "grid.n_steps = {}", self.grid.n_steps)?;
        match &self.initial {
            InitialState::Basis(k) => writeln!(s, "initial.state = {k}")?,
            InitialState::Entries(map) => {
                for ((i, j), z) in map {
                    if i == j {
                        writeln!(s, "initial.rho.{i}{j} = {}", z.re)?;
                    } else {
                        writeln!(s, "initial.rho.{i}{j} = {}, {}", z.re, z.im)?;
                    }
                }
            }
        }
        if let Some(p) = &self.output {
            writeln!(s, "output.path = {}", p.display())?;
        }
        f.write_str(&s)
    }
}
