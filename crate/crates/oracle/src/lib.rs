//! Reference solutions that share no code with `nmdot`.
//!
//! * [`pseudomodes`]: exact dynamics of dots coupled to Ornstein-Uhlenbeck
//!   leads. Each lead becomes one damped auxiliary fermion mode, which is
//!   exact for a fully occupied or fully empty Lorentzian lead.
//! * [`augmented`]: scalar Volterra problems with an exponential kernel,
//!   turned into ordinary differential equations by one auxiliary variable.

use num_complex::Complex64 as C;

/// Classical RK4 on a complex vector with `substeps` steps from `t0` to `t1`.
fn rk4(f: &impl Fn(f64, &[C]) -> Vec<C>, t0: f64, t1: f64, y: &mut Vec<C>, substeps: usize) {
    let h = (t1 - t0) / substeps as f64;
    let axpy = |y: &[C], k: &[C], a: f64| -> Vec<C> { y.iter().zip(k).map(|(y, k)| y + k * a).collect() };
    for s in 0..substeps {
        let t = t0 + s as f64 * h;
        let k1 = f(t, y);
        let k2 = f(t + 0.5 * h, &axpy(y, &k1, 0.5 * h));
        let k3 = f(t + 0.5 * h, &axpy(y, &k2, 0.5 * h));
        let k4 = f(t + h, &axpy(y, &k3, h));
        for i in 0..y.len() {
            y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
    }
}

pub mod pseudomodes {
    use super::{rk4, C};

    /// Quadratic model: real symmetric one-body Hamiltonian plus loss and gain per mode.
    #[derive(Debug, Clone)]
    pub struct Pseudomodes {
        pub h: Vec<Vec<f64>>,
        pub loss: Vec<f64>,
        pub gain: Vec<f64>,
        pub system_modes: usize,
    }

    /// `(gamma, d, occupied)` of one Ornstein-Uhlenbeck lead.
    pub type OuLead = (f64, f64, bool);

    impl Pseudomodes {
        /// Dot levels `levels`, interdot hopping `coupling` (two levels only), and
        /// `leads[k] = (system mode, lead)`.
        pub fn new(levels: &[f64], coupling: f64, leads: &[(usize, OuLead)]) -> Self {
            let ns = levels.len();
            let n = ns + leads.len();
            let mut h = vec![vec![0.0; n]; n];
            for (i, w) in levels.iter().enumerate() {
                h[i][i] = *w;
            }
            if ns == 2 {
                h[0][1] = coupling;
                h[1][0] = coupling;
            }
            let (mut loss, mut gain) = (vec![0.0; n], vec![0.0; n]);
            for (k, &(site, (gamma, d, occupied))) in leads.iter().enumerate() {
                let p = ns + k;
                let g = (gamma * d / 2.0).sqrt();
                h[site][p] = g;
                h[p][site] = g;
                if occupied {
                    gain[p] = 2.0 * d;
                } else {
                    loss[p] = 2.0 * d;
                }
            }
            Self { h, loss, gain, system_modes: ns }
        }

        pub fn dim(&self) -> usize {
            self.h.len()
        }

        /// `<a_i† a_j>` at each of `times`, starting from the given system
        /// occupations and with every pseudomode in its stationary state.
        pub fn correlations(&self, system_occupations: &[f64], times: &[f64], substeps: usize) -> Vec<Vec<Vec<C>>> {
            let n = self.dim();
            let mut x = vec![C::new(0.0, 0.0); n * n];
            for i in 0..n {
                let occ = if i < self.system_modes { system_occupations[i] } else if self.gain[i] > 0.0 { 1.0 } else { 0.0 };
                x[i * n + i] = C::new(occ, 0.0);
            }
            let rate: Vec<f64> = (0..n).map(|i| self.loss[i] + self.gain[i]).collect();
            let rhs = |_: f64, x: &[C]| -> Vec<C> {
                let mut out = vec![C::new(0.0, 0.0); n * n];
                for i in 0..n {
                    for j in 0..n {
                        let mut comm = C::new(0.0, 0.0);
                        for k in 0..n {
                            comm += x[k * n + j] * self.h[k][i] - x[i * n + k] * self.h[j][k];
                        }
                        let mut v = C::new(0.0, 1.0) * comm - x[i * n + j] * (0.5 * (rate[i] + rate[j]));
                        if i == j {
                            v += self.gain[i];
                        }
                        out[i * n + j] = v;
                    }
                }
                out
            };
            let mut t = 0.0;
            let mut out = Vec::with_capacity(times.len());
            for &target in times {
                if target > t {
                    rk4(&rhs, t, target, &mut x, substeps);
                    t = target;
                }
                out.push((0..n).map(|i| x[i * n..(i + 1) * n].to_vec()).collect());
            }
            out
        }

        /// Exact coefficient `Gamma_1(t)` of a single dot whose leads satisfy
        /// `Gamma_2 = -Gamma_1`; from the level amplitude `u`, `Gamma_1 = (i omega0 - u'/u) / 2`.
        pub fn symmetric_gamma1(&self, omega0: f64, times: &[f64], substeps: usize) -> Vec<C> {
            let n = self.dim();
            let rate: Vec<f64> = (0..n).map(|i| self.loss[i] + self.gain[i]).collect();
            let rhs = |_: f64, a: &[C]| -> Vec<C> {
                (0..n)
                    .map(|i| {
                        let mut v = -a[i] * (0.5 * rate[i]);
                        for k in 0..n {
                            v += C::new(0.0, self.h[i][k]) * a[k];
                        }
                        v
                    })
                    .collect()
            };
            let mut a = vec![C::new(0.0, 0.0); n];
            a[0] = C::new(1.0, 0.0);
            let mut t = 0.0;
            times
                .iter()
                .map(|&target| {
                    if target > t {
                        rk4(&rhs, t, target, &mut a, substeps);
                        t = target;
                    }
                    let du = rhs(t, &a)[0];
                    (C::new(0.0, omega0) - du / a[0]) * 0.5
                })
                .collect()
        }
    }
}

pub mod augmented {
    //! `f' = m f + sign * integral c exp(-k |s - s'|) f(s') ds' + source(s)`.
    use super::{rk4, C};

    /// Backward problem on `[0, t]` with memory over `[s, t]` and `f(t) = 1`,
    /// sampled on `n + 1` uniform nodes.
    ///
    /// With `g(s) = integral_s^t c exp(-k (s' - s)) f(s') ds'`:
    /// `f' = m f + g`, `g' = k g - c f`, `g(t) = 0`.
    pub fn backward(m: C, c: f64, k: f64, t: f64, n: usize, substeps: usize) -> Vec<C> {
        let rhs = |_: f64, y: &[C]| vec![m * y[0] + y[1], y[1] * k - y[0] * c];
        let mut y = vec![C::new(1.0, 0.0), C::new(0.0, 0.0)];
        let mut out = vec![C::new(0.0, 0.0); n + 1];
        out[n] = y[0];
        let h = t / n as f64;
        for i in (0..n).rev() {
            rk4(&rhs, (i + 1) as f64 * h, i as f64 * h, &mut y, substeps);
            out[i] = y[0];
        }
        out
    }

    /// Mixed problem: memory `-integral_0^s c exp(-k (s - s')) f(s') ds'`,
    /// constant source `g0`, final value `f(t) = f_t`.
    ///
    /// With `u(s) = integral_0^s c exp(-k (s - s')) f ds'`: `f' = m f - u + g0`,
    /// `u' = c f - k u`, `u(0) = 0`. Linear in `f(0)`, so two shots fix it.
    pub fn mixed(m: C, c: f64, k: f64, g0: C, f_t: C, t: f64, n: usize, substeps: usize) -> Vec<C> {
        let shoot = |f0: C, with_source: bool| -> Vec<C> {
            let g = if with_source { g0 } else { C::new(0.0, 0.0) };
            let rhs = move |_: f64, y: &[C]| vec![m * y[0] - y[1] + g, y[0] * c - y[1] * k];
            let mut y = vec![f0, C::new(0.0, 0.0)];
            let mut out = vec![y[0]];
            let h = t / n as f64;
            for i in 0..n {
                rk4(&rhs, i as f64 * h, (i + 1) as f64 * h, &mut y, substeps);
                out.push(y[0]);
            }
            out
        };
        let particular = shoot(C::new(0.0, 0.0), true);
        let homogeneous = shoot(C::new(1.0, 0.0), false);
        let f0 = (f_t - particular[n]) / homogeneous[n];
        particular.iter().zip(&homogeneous).map(|(p, q)| p + q * f0).collect()
    }
}
