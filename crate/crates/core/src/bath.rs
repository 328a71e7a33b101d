//! Lead spectral densities and the correlation kernels they induce.
//!
//! Each lead carries two kernels. The *empty* kernel
//! `a1(t) = ∫ (1 - n(w)) J(w) exp(-i w t) dw` describes tunnelling out of the
//! dot; the *filled* kernel `a2(t) = ∫ n(w) J(w) exp(+i w t) dw` describes
//! tunnelling in. Both obey `a(-t) = conj(a(t))`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::C64;

/// Which lead a quantity belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lead {
    Left,
    Right,
}

impl Lead {
    pub fn tag(self) -> &'static str {
        match self {
            Lead::Left => "L",
            Lead::Right => "R",
        }
    }
}

/// The two kernels of a lead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Weighted by `1 - n`, oscillating as `exp(-i w t)`.
    Empty,
    /// Weighted by `n`, oscillating as `exp(+i w t)`.
    Filled,
}

/// Shape of the lead density of states.
///
/// The physical density is `J(w) = gamma / (2 pi) * s(w)` with `s` the shape
/// below, so a shape identically equal to one is the flat band.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralModel {
    /// Lorentzian `s(w) = d^2 / (w^2 + d^2)` for a lead that is either fully
    /// occupied or fully empty at all relevant energies. Its kernel is
    /// `(gamma d / 2) exp(-d |t|)`.
    OrnsteinUhlenbeck { bandwidth: f64, occupied: bool },
    /// Shape sampled on an increasing frequency grid, integrated by the trapezoid rule.
    /// Occupations follow the Fermi function of the lead.
    Tabulated { omegas: Vec<f64>, shape: Vec<f64> },
    /// Infinitely wide flat band. Only meaningful for memoryless (rate) descriptions.
    MarkovFlat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeadSpec {
    pub lead: Lead,
    pub gamma: f64,
    pub mu: f64,
    pub kt: f64,
    pub model: SpectralModel,
}

impl LeadSpec {
    /// An Ornstein-Uhlenbeck lead whose chemical potential sits far above
    /// (occupied) or below (empty) every dot level.
    pub fn ornstein_uhlenbeck(lead: Lead, gamma: f64, bandwidth: f64, occupied: bool) -> Self {
        let mu = if occupied { f64::INFINITY } else { f64::NEG_INFINITY };
        Self { lead, gamma, mu, kt: 0.0, model: SpectralModel::OrnsteinUhlenbeck { bandwidth, occupied } }
    }

    /// A flat-band lead with the given effective occupation, zero or one.
    pub fn flat(lead: Lead, gamma: f64, occupied: bool) -> Self {
        let mu = if occupied { f64::INFINITY } else { f64::NEG_INFINITY };
        Self { lead, gamma, mu, kt: 0.0, model: SpectralModel::MarkovFlat }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidInput(format!("lead {} coupling must be finite and nonnegative", self.lead.tag())));
        }
        if !(self.kt >= 0.0) || self.kt.is_infinite() {
            return Err(Error::InvalidInput(format!("lead {} temperature must be finite and nonnegative", self.lead.tag())));
        }
        if self.mu.is_nan() {
            return Err(Error::InvalidInput(format!("lead {} chemical potential is NaN", self.lead.tag())));
        }
        match &self.model {
            SpectralModel::OrnsteinUhlenbeck { bandwidth, .. } => {
                if !(bandwidth.is_finite() && *bandwidth > 0.0) {
                    return Err(Error::InvalidSpectrum(format!("bandwidth must be positive, got {bandwidth}")));
                }
            }
            SpectralModel::Tabulated { omegas, shape } => {
                if omegas.len() < 2 || omegas.len() != shape.len() {
                    return Err(Error::InvalidSpectrum("tabulated shape needs matching frequency and value columns with at least two rows".into()));
                }
                if omegas.windows(2).any(|w| !(w[1] > w[0])) || omegas.iter().any(|w| !w.is_finite()) {
                    return Err(Error::InvalidSpectrum("tabulated frequencies must be finite and strictly increasing".into()));
                }
                if let Some(i) = shape.iter().position(|s| !(s.is_finite() && *s >= 0.0)) {
                    return Err(Error::InvalidSpectrum(format!("shape value at row {i} is negative or non-finite")));
                }
            }
            SpectralModel::MarkovFlat => {}
        }
        Ok(())
    }

    /// Occupation of the lead at energy `omega`.
    pub fn occupation(&self, omega: f64) -> f64 {
        match &self.model {
            SpectralModel::OrnsteinUhlenbeck { occupied, .. } => f64::from(u8::from(*occupied)),
            _ => fermi_occupation(omega, self.mu, self.kt),
        }
    }
}

/// Fermi function; at zero temperature a step with value 1/2 at `omega == mu`.
pub fn fermi_occupation(omega: f64, mu: f64, kt: f64) -> f64 {
    let x = omega - mu;
    if kt == 0.0 || x.is_infinite() {
        return if x < 0.0 {
            1.0
        } else if x > 0.0 {
            0.0
        } else {
            0.5
        };
    }
    let y = x / kt;
    if y > 0.0 {
        let e = (-y).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + y.exp())
    }
}

/// `(gamma d / 2) exp(-d |tau|)`.
pub fn ou_kernel(gamma: f64, d: f64, tau: f64) -> f64 {
    0.5 * gamma * d * (-d * tau.abs()).exp()
}

#[derive(Debug, Clone, PartialEq)]
enum Term {
    /// `amplitude * exp(-decay |t|)`
    Exponential { amplitude: f64, decay: f64 },
    /// `sum_m weights[m] * exp(i sign freqs[m] t)`
    Modes { freqs: Vec<f64>, weights: Vec<f64>, sign: f64 },
}

impl Term {
    fn eval(&self, tau: f64) -> C64 {
        match self {
            Term::Exponential { amplitude, decay } => C64::new(amplitude * (-decay * tau.abs()).exp(), 0.0),
            Term::Modes { freqs, weights, sign } => {
                let (mut re, mut im) = (0.0, 0.0);
                for (w, a) in freqs.iter().zip(weights) {
                    let (s, c) = (w * tau).sin_cos();
                    re += a * c;
                    im += a * s;
                }
                C64::new(re, sign * im)
            }
        }
    }

    fn reflected(&self) -> Term {
        match self {
            Term::Exponential { .. } => self.clone(),
            Term::Modes { freqs, weights, sign } => Term::Modes { freqs: freqs.clone(), weights: weights.clone(), sign: -sign },
        }
    }
}

/// A bath correlation function of the lag `tau`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrelationKernel {
    terms: Vec<Term>,
}

impl CorrelationKernel {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `amplitude * exp(-decay |tau|)`.
    pub fn exponential(amplitude: f64, decay: f64) -> Self {
        Self { terms: vec![Term::Exponential { amplitude, decay }] }
    }

    /// `sum_m weights[m] * exp(i sign freqs[m] tau)` with `sign = ±1`.
    pub fn modes(freqs: Vec<f64>, weights: Vec<f64>, sign: f64) -> Self {
        Self { terms: vec![Term::Modes { freqs, weights, sign: sign.signum() }] }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| match t {
            Term::Exponential { amplitude, .. } => *amplitude == 0.0,
            Term::Modes { weights, .. } => weights.iter().all(|w| *w == 0.0),
        })
    }

    pub fn eval(&self, tau: f64) -> C64 {
        self.terms.iter().map(|t| t.eval(tau)).sum()
    }

    /// The kernel `tau -> k(-tau) = conj(k(tau))`.
    pub fn reflected(&self) -> Self {
        Self { terms: self.terms.iter().map(Term::reflected).collect() }
    }

    pub fn sum(&self, other: &Self) -> Self {
        Self { terms: self.terms.iter().chain(&other.terms).cloned().collect() }
    }

    /// Samples the kernel at lags `m * step` for `|m| <= max_lag`.
    pub fn tabulate(&self, step: f64, max_lag: usize) -> LagTable {
        let forward: Vec<C64> = (0..=max_lag).map(|m| self.eval(m as f64 * step)).collect();
        LagTable::from_forward(forward, self.is_zero())
    }
}

/// Kernel values on the lattice of lags of a uniform grid.
///
/// Negative lags are filled by conjugate symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct LagTable {
    forward: Vec<C64>,
    backward: Vec<C64>,
    zero: bool,
}

impl LagTable {
    pub(crate) fn from_forward(forward: Vec<C64>, zero: bool) -> Self {
        let backward = forward.iter().map(|z| z.conj()).collect();
        Self { forward, backward, zero }
    }

    pub fn zeros(max_lag: usize) -> Self {
        Self::from_forward(vec![C64::new(0.0, 0.0); max_lag + 1], true)
    }

    pub fn max_lag(&self) -> usize {
        self.forward.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// Value at lag index `m`, of either sign.
    pub fn at(&self, m: isize) -> C64 {
        if m >= 0 {
            self.forward[m as usize]
        } else {
            self.backward[m.unsigned_abs()]
        }
    }

    /// Values at lags `0, 1, 2, ...`.
    pub fn nonnegative(&self) -> &[C64] {
        &self.forward
    }

    /// Values at lags `0, -1, -2, ...`.
    pub fn nonpositive(&self) -> &[C64] {
        &self.backward
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_forward(self.forward.iter().map(|z| z * s).collect(), self.zero)
    }
}

/// Builds the empty or filled kernel of a lead.
pub fn kernel_from_spectral(lead: &LeadSpec, branch: Branch) -> Result<CorrelationKernel> {
    lead.validate()?;
    match &lead.model {
        SpectralModel::OrnsteinUhlenbeck { bandwidth, occupied } => {
            let active = match branch {
                Branch::Empty => !occupied,
                Branch::Filled => *occupied,
            };
            Ok(if active && lead.gamma > 0.0 {
                CorrelationKernel::exponential(0.5 * lead.gamma * bandwidth, *bandwidth)
            } else {
                CorrelationKernel::zero()
            })
        }
        SpectralModel::Tabulated { omegas, shape } => {
            let n = omegas.len();
            let weights: Vec<f64> = (0..n)
                .map(|m| {
                    let left = if m > 0 { omegas[m] - omegas[m - 1] } else { 0.0 };
                    let right = if m + 1 < n { omegas[m + 1] - omegas[m] } else { 0.0 };
                    let occ = lead.occupation(omegas[m]);
                    let factor = match branch {
                        Branch::Empty => 1.0 - occ,
                        Branch::Filled => occ,
                    };
                    0.5 * (left + right) * factor * lead.gamma / (2.0 * PI) * shape[m]
                })
                .collect();
            let sign = match branch {
                Branch::Empty => -1.0,
                Branch::Filled => 1.0,
            };
            Ok(CorrelationKernel::modes(omegas.clone(), weights, sign))
        }
        SpectralModel::MarkovFlat => Err(Error::InvalidSpectrum(
            "a flat band has a delta-correlated kernel; use the rate equations instead".into(),
        )),
    }
}

/// `beta(tau) = a1(-tau) + a2(tau)`.
pub fn beta_kernel(empty: &CorrelationKernel, filled: &CorrelationKernel) -> CorrelationKernel {
    empty.reflected().sum(filled)
}

/// Flat-band limits `(gamma/2 (1 - n), gamma/2 n)` at the system frequency.
pub fn markovian_coefficients(lead: &LeadSpec, omega_sys: f64) -> (f64, f64) {
    let n = lead.occupation(omega_sys);
    (0.5 * lead.gamma * (1.0 - n), 0.5 * lead.gamma * n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fermi_limits() {
        assert_eq!(fermi_occupation(1.0, 0.0, 0.0), 0.0);
        assert_eq!(fermi_occupation(-1.0, 0.0, 0.0), 1.0);
        assert_eq!(fermi_occupation(0.0, 0.0, 0.0), 0.5);
        assert!((fermi_occupation(0.0, 0.0, 2.0) - 0.5).abs() < 1e-15);
        assert!(fermi_occupation(1e6, 0.0, 1.0) >= 0.0);
    }

    #[test]
    fn ou_at_origin() {
        assert_eq!(ou_kernel(100.0, 50.0, 0.0), 2500.0);
        let lead = LeadSpec::ornstein_uhlenbeck(Lead::Left, 100.0, 50.0, true);
        let k = kernel_from_spectral(&lead, Branch::Filled).unwrap();
        assert_eq!(k.eval(0.0), C64::new(2500.0, 0.0));
        assert!(kernel_from_spectral(&lead, Branch::Empty).unwrap().is_zero());
    }

    #[test]
    fn flat_band_has_no_kernel() {
        let lead = LeadSpec::flat(Lead::Right, 1.0, false);
        assert!(matches!(kernel_from_spectral(&lead, Branch::Empty), Err(Error::InvalidSpectrum(_))));
    }

    #[test]
    fn tabulated_lorentzian_reproduces_ou() {
        let d = 5.0;
        let omegas: Vec<f64> = (0..=40000).map(|i| -2000.0 + i as f64 * 0.1).collect();
        let shape = omegas.iter().map(|w| d * d / (w * w + d * d)).collect();
        let lead = LeadSpec {
            lead: Lead::Left,
            gamma: 2.0,
            mu: 1e9,
            kt: 0.0,
            model: SpectralModel::Tabulated { omegas, shape },
        };
        let k = kernel_from_spectral(&lead, Branch::Filled).unwrap();
        for tau in [0.0, 0.1, 0.4] {
            let z = k.eval(tau);
            assert!((z.re - ou_kernel(2.0, d, tau)).abs() < 1.5e-2, "tau {tau}: {z}");
            assert!(z.im.abs() < 1e-9);
        }
    }

    #[test]
    fn negative_shape_rejected() {
        let lead = LeadSpec {
            lead: Lead::Left,
            gamma: 1.0,
            mu: 0.0,
            kt: 0.0,
            model: SpectralModel::Tabulated { omegas: vec![0.0, 1.0], shape: vec![1.0, -0.1] },
        };
        assert!(matches!(lead.validate(), Err(Error::InvalidSpectrum(_))));
    }

    #[test]
    fn markov_pair() {
        let lead = LeadSpec::ornstein_uhlenbeck(Lead::Left, 100.0, 10.0, true);
        assert_eq!(markovian_coefficients(&lead, 50.0), (0.0, 50.0));
    }

    #[test]
    fn beta_of_symmetric_kernels() {
        let k = CorrelationKernel::exponential(250.0, 5.0);
        let b = beta_kernel(&k, &k);
        assert_eq!(b.eval(0.3), C64::new(500.0 * (-1.5f64).exp(), 0.0));
    }
}
