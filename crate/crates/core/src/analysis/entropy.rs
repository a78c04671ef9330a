//! Discrete kinetic entropy residual along a computed trajectory.
//!
//! For the smoothed absolute value `eta_delta` and a nonnegative test function
//! `phi(t, x) = theta(t) rho(x)` vanishing near `T`, the residual is
//!
//! ```text
//!   sum_n sum_c w phi^n (eta(u^{n+1}) - eta(u^n)) + int phi(0) (eta(u^0) - eta(xi))
//!     - dt sum_n D^n - sum_n sum_k S^n_k dW^n_k
//! ```
//!
//! with `D` the diffusion, coefficient and Itô terms of the entropy balance and
//! `S` its martingale integrand, all paired with discrete derivatives of `phi`.
//! The dissipation `eta'' |grad [a_n]|^2 phi` is taken in the face form the
//! explicit scheme produces, so on a deterministic run the residual reduces to
//! the time-stepping Bregman remainder.
//!
//! Brackets `[F eta'](r) = int_0^r F eta'` are tabulated once per distinct
//! `r`-factor; separability of the coefficients lets every bracket at a cell
//! be a weighted sum of these tables.

use std::collections::HashMap;

use serde::Serialize;

use crate::coefficients::{Amplitude, CoefficientSet, GridCoefficients, PointJets};
use crate::grid::{shift, GridFunction};
use crate::kernel::{unit_cdf, unit_cdf_integral, unit_density};
use crate::noise::NoisePath;
use crate::nonlinearity::RegularizedNonlinearity;
use crate::quad::{gk15, pairwise_sum};
use crate::solver::{SolverConfig, SolverError, Trajectory};

/// `eta_delta(r) = int_0^|r| int_0^s rho_delta`, a `C^inf` convex
/// approximation of `|r|` with `|eta_delta - |r|| <= delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyPair {
    delta: f64,
}

impl EntropyPair {
    pub fn new(delta: f64) -> Result<Self, SolverError> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(SolverError::Parameter(format!("entropy width delta = {delta}")));
        }
        Ok(EntropyPair { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eta(&self, r: f64) -> f64 {
        self.delta * unit_cdf_integral(r.abs() / self.delta)
    }

    pub fn eta_prime(&self, r: f64) -> f64 {
        let v = unit_cdf(r.abs() / self.delta);
        if r < 0.0 {
            -v
        } else {
            v
        }
    }

    pub fn eta_second(&self, r: f64) -> f64 {
        unit_density(r.abs() / self.delta) / self.delta
    }
}

/// `phi(t, x) = theta(t) rho(x)` with `theta = 1` before `fade_start T`,
/// `0` after `fade_end T`, smooth in between, and
/// `rho = 1 + amplitude * mean_l cos(2 pi x_l)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestFunction {
    pub t_final: f64,
    pub fade_start: f64,
    pub fade_end: f64,
    pub amplitude: f64,
}

impl TestFunction {
    pub fn new(t_final: f64) -> Self {
        TestFunction {
            t_final,
            fade_start: 0.3,
            fade_end: 0.9,
            amplitude: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let ok = self.t_final > 0.0
            && 0.0 <= self.fade_start
            && self.fade_start < self.fade_end
            && self.fade_end < 1.0
            && (0.0..=1.0).contains(&self.amplitude);
        if ok {
            Ok(())
        } else {
            Err(SolverError::Parameter(format!("test function {self:?}")))
        }
    }

    pub fn theta(&self, t: f64) -> f64 {
        let t0 = self.fade_start * self.t_final;
        let t1 = self.fade_end * self.t_final;
        1.0 - unit_cdf((t - t0) / (t1 - t0))
    }

    pub fn rho(&self, x: &[f64]) -> f64 {
        let d = x.len() as f64;
        1.0 + self.amplitude * x.iter().map(|xl| (std::f64::consts::TAU * xl).cos()).sum::<f64>() / d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Factor {
    PhiPrime,
    /// `g^{(p)}`
    Amp(Amplitude, u8),
    /// `g^{(p)} h^{(q)}`, ordered canonically.
    Prod(Amplitude, u8, Amplitude, u8),
}

fn vanishes(a: Amplitude, p: u8) -> bool {
    match a {
        Amplitude::Zero => true,
        Amplitude::One => p >= 1,
        Amplitude::Linear => p >= 2,
        Amplitude::Square => p >= 3,
        Amplitude::Sqrt1pSq => false,
    }
}

fn prod(a: Amplitude, p: u8, b: Amplitude, q: u8) -> Option<Factor> {
    if vanishes(a, p) || vanishes(b, q) {
        return None;
    }
    if (a as u8, p) <= (b as u8, q) {
        Some(Factor::Prod(a, p, b, q))
    } else {
        Some(Factor::Prod(b, q, a, p))
    }
}

fn amp(a: Amplitude, p: u8) -> Option<Factor> {
    (!vanishes(a, p)).then_some(Factor::Amp(a, p))
}

/// `B(u) = int_0^u F eta'` on `[-R, R]`, cubic Hermite between nodes.
struct BracketTable {
    step: f64,
    half: usize,
    vals: Vec<f64>,
    ders: Vec<f64>,
}

impl BracketTable {
    fn build(f: &dyn Fn(f64) -> f64, pair: &EntropyPair, range: f64, step: f64) -> Self {
        let half = (range / step).ceil().max(1.0) as usize;
        let n = 2 * half + 1;
        let node = |j: usize| (j as f64 - half as f64) * step;
        let integrand = |r: f64| f(r) * pair.eta_prime(r);
        let mut vals = vec![0.0; n];
        for j in half..n - 1 {
            vals[j + 1] = vals[j] + gk15(&integrand, node(j), node(j + 1)).0;
        }
        for j in (1..=half).rev() {
            vals[j - 1] = vals[j] - gk15(&integrand, node(j - 1), node(j)).0;
        }
        let ders = (0..n).map(|j| integrand(node(j))).collect();
        BracketTable { step, half, vals, ders }
    }

    fn eval(&self, u: f64) -> f64 {
        let x = u / self.step + self.half as f64;
        let j = (x.floor().max(0.0) as usize).min(self.vals.len() - 2);
        let t = x - j as f64;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.vals[j]
            + (t3 - 2.0 * t2 + t) * self.step * self.ders[j]
            + (-2.0 * t3 + 3.0 * t2) * self.vals[j + 1]
            + (t3 - t2) * self.step * self.ders[j + 1]
    }
}

/// Indices of the bracket quantities needed at a cell.
struct Layout {
    d: usize,
    k: usize,
}

impl Layout {
    const Q: usize = 0;
    fn a(&self, i: usize, j: usize) -> usize {
        1 + i * self.d + j
    }
    fn p(&self, i: usize) -> usize {
        1 + self.d * self.d + i
    }
    fn div(&self) -> usize {
        1 + self.d * self.d + self.d
    }
    fn s(&self, k: usize) -> usize {
        2 + self.d * self.d + self.d + k
    }
    fn t(&self, k: usize, i: usize) -> usize {
        2 + self.d * self.d + self.d + self.k + k * self.d + i
    }
    fn len(&self) -> usize {
        2 + self.d * self.d + self.d + self.k + self.k * self.d
    }
}

struct Brackets {
    tables: Vec<BracketTable>,
    /// Per cell: `(quantity, table, weight)`.
    terms: Vec<Vec<(usize, usize, f64)>>,
    layout: Layout,
}

struct TermBuilder<'a> {
    index: &'a mut HashMap<Factor, usize>,
    out: Vec<(usize, usize, f64)>,
}

impl TermBuilder<'_> {
    fn push(&mut self, q: usize, f: Option<Factor>, w: f64) {
        if let Some(f) = f {
            if w != 0.0 {
                let next = self.index.len();
                let t = *self.index.entry(f).or_insert(next);
                self.out.push((q, t, w));
            }
        }
    }
}

fn cell_terms(set: &CoefficientSet, jets: &PointJets, lay: &Layout, index: &mut HashMap<Factor, usize>) -> Vec<(usize, usize, f64)> {
    let d = set.dim;
    let g = |i: usize, k: usize| set.modes[k].components[i].amplitude;
    let h = |i: usize, k: usize| jets.sigma(d, i, k);
    let mut b = TermBuilder {
        index,
        out: Vec::new(),
    };
    b.push(Layout::Q, Some(Factor::PhiPrime), 1.0);
    for k in 0..set.modes.len() {
        for i in 0..d {
            for j in 0..d {
                let rr = prod(g(i, k), 1, g(j, k), 1);
                b.push(lay.a(i, j), rr, 0.5 * h(i, k).v * h(j, k).v);
                // a^{ij}_{x_j} and the b_r part of -f_r.
                let w = 0.5 * (h(i, k).d1[j] * h(j, k).v + h(i, k).v * h(j, k).d1[j]);
                b.push(lay.p(i), rr, w);
                let wb = 0.5 * h(i, k).v * h(j, k).d1[j];
                b.push(lay.p(i), prod(g(i, k), 2, g(j, k), 0), wb);
                b.push(lay.p(i), rr, wb);
                // -1/2 d_{x_i} b^i_r inside f_{r x_i}.
                let wd = -0.5 * (h(i, k).d1[i] * h(j, k).d1[j] + h(i, k).v * h(j, k).d2[j][i]);
                b.push(lay.div(), prod(g(i, k), 2, g(j, k), 0), wd);
                b.push(lay.div(), rr, wd);
            }
            b.push(lay.s(k), amp(g(i, k), 1), h(i, k).d1[i]);
            b.push(lay.t(k, i), amp(g(i, k), 1), h(i, k).v);
        }
    }
    for i in 0..d {
        let q = set.flux[i].amplitude;
        let p = jets.flux(i);
        b.push(lay.p(i), amp(q, 1), -p.v);
        b.push(lay.div(), amp(q, 1), p.d1[i]);
    }
    b.out
}

impl Brackets {
    fn build(grid: &GridCoefficients, nl: &RegularizedNonlinearity, pair: &EntropyPair, range: f64) -> Self {
        let set = grid.set();
        let lay = Layout {
            d: set.dim,
            k: set.modes.len(),
        };
        let cells = grid.resolution().pow(set.dim as u32);
        let mut index = HashMap::new();
        let terms = (0..cells)
            .map(|c| cell_terms(set, grid.jets(c), &lay, &mut index))
            .collect();
        let step = (pair.delta() / 16.0).min(0.01).max(range / 50_000.0);
        let mut factors: Vec<(Factor, usize)> = index.into_iter().collect();
        factors.sort_by_key(|&(_, t)| t);
        let tables = factors
            .into_iter()
            .map(|(f, _)| {
                let func: Box<dyn Fn(f64) -> f64> = match f {
                    Factor::PhiPrime => Box::new(|r| nl.phi_prime(r)),
                    Factor::Amp(a, p) => Box::new(move |r| a.jet(r)[p as usize]),
                    Factor::Prod(a, p, b, q) => Box::new(move |r| a.jet(r)[p as usize] * b.jet(r)[q as usize]),
                };
                BracketTable::build(&*func, pair, range, step)
            })
            .collect();
        Brackets { tables, terms, layout: lay }
    }
}

/// Residual and its parts; `residual = time + initial - dt (diffusion +
/// coefficients + ito) - stochastic` with the `dt` already applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyResidual {
    pub residual: f64,
    pub time: f64,
    pub initial: f64,
    pub diffusion: f64,
    pub coefficients: f64,
    pub ito: f64,
    pub stochastic: f64,
    pub delta: f64,
}

/// Discrete derivatives of `rho` at every cell: value, centred first
/// derivatives and the second-difference matrix.
fn rho_stencils(test: &TestFunction, dim: usize, m: usize) -> Vec<(f64, [f64; 2], [[f64; 2]; 2])> {
    let rho = GridFunction::from_fn(dim, m, |x| test.rho(&x[..dim])).expect("valid grid");
    let r = rho.values();
    let h = 1.0 / m as f64;
    (0..r.len())
        .map(|c| {
            let mut d1 = [0.0; 2];
            let mut d2 = [[0.0; 2]; 2];
            for i in 0..dim {
                let p = shift(m, c, i, 1);
                let n = shift(m, c, i, -1);
                d1[i] = (r[p] - r[n]) / (2.0 * h);
                d2[i][i] = (r[p] - 2.0 * r[c] + r[n]) / (h * h);
                for j in 0..dim {
                    if j != i {
                        let pp = shift(m, p, j, 1);
                        let pn = shift(m, p, j, -1);
                        let np = shift(m, n, j, 1);
                        let nn = shift(m, n, j, -1);
                        d2[i][j] = (r[pp] - r[pn] - r[np] + r[nn]) / (4.0 * h * h);
                    }
                }
            }
            (r[c], d1, d2)
        })
        .collect()
}

/// Evaluates the residual on a dense trajectory of `cfg` started from `xi`
/// and driven by `path`.
pub fn entropy_residual(
    cfg: &SolverConfig,
    xi: &GridFunction,
    traj: &Trajectory,
    path: &NoisePath,
    pair: &EntropyPair,
    test: &TestFunction,
) -> Result<EntropyResidual, SolverError> {
    test.validate()?;
    if !traj.is_dense() {
        return Err(SolverError::Parameter("entropy residual needs every step".into()));
    }
    if (test.t_final - cfg.t_final).abs() > 1e-12 * cfg.t_final.max(1.0) {
        return Err(SolverError::Parameter("test function horizon differs from the run".into()));
    }
    xi.same_grid(traj.initial())?;
    let nl = &*cfg.nonlinearity;
    let dim = cfg.dim();
    let m = cfg.m;
    let dt = traj.dt;
    let h = cfg.spacing();
    let w = xi.cell_volume();
    let grid = GridCoefficients::new(&cfg.coeffs, m);
    let modes = grid.modes();
    let with_ito = grid.is_noisy() || grid.has_flux();
    let range = traj.snapshots.iter().fold(0.0f64, |r, u| r.max(u.max_abs())) + 0.05;
    let br = Brackets::build(&grid, nl, pair, range);
    let lay = &br.layout;
    let stencils = rho_stencils(test, dim, m);
    let cells = stencils.len();

    let theta0 = test.theta(0.0);
    let init: Vec<f64> = (0..cells)
        .map(|c| stencils[c].0 * (pair.eta(traj.initial().values()[c]) - pair.eta(xi.values()[c])))
        .collect();
    let initial = theta0 * w * pairwise_sum(&init);

    let mut time_parts = Vec::with_capacity(traj.steps);
    let mut diff_parts = Vec::with_capacity(traj.steps);
    let mut coef_parts = Vec::with_capacity(traj.steps);
    let mut ito_parts = Vec::with_capacity(traj.steps);
    let mut stoch_parts = Vec::with_capacity(traj.steps);
    let mut tv = vec![0.0; br.tables.len()];
    let mut qv = vec![0.0; lay.len()];
    let mut qfun = vec![0.0; cells];
    let mut big_phi = vec![0.0; cells];
    let mut eta_p = vec![0.0; cells];
    let mut time_c = vec![0.0; cells];
    let mut diff_c = vec![0.0; cells];
    let mut coef_c = vec![0.0; cells];
    let mut ito_c = vec![0.0; cells];
    let mut stoch_k = vec![vec![0.0; cells]; modes];
    for n in 0..traj.steps {
        let theta = test.theta(n as f64 * dt);
        if theta == 0.0 {
            break;
        }
        let u = traj.snapshots[n].values();
        let next = traj.snapshots[n + 1].values();
        for c in 0..cells {
            let r = u[c];
            for (t, table) in br.tables.iter().enumerate() {
                tv[t] = table.eval(r);
            }
            qv.iter_mut().for_each(|v| *v = 0.0);
            for &(q, t, wt) in &br.terms[c] {
                qv[q] += wt * tv[t];
            }
            let (rho, d1, d2) = &stencils[c];
            let phi = theta * rho;
            let ep = pair.eta_prime(r);
            eta_p[c] = ep;
            qfun[c] = qv[Layout::Q];
            big_phi[c] = nl.phi(r);
            time_c[c] = phi * (pair.eta(next[c]) - pair.eta(r));
            let lap: f64 = (0..dim).map(|i| d2[i][i]).sum();
            diff_c[c] = qv[Layout::Q] * theta * lap;
            let mut coef = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    coef += qv[lay.a(i, j)] * theta * d2[i][j];
                }
            }
            if with_ito {
                let ito = grid.ito_at(c, r);
                for i in 0..dim {
                    coef += (qv[lay.p(i)] - ep * ito.b[i]) * theta * d1[i];
                }
                coef += (ep * ito.f_div - qv[lay.div()]) * phi;
                ito_c[c] = 0.5 * pair.eta_second(r) * ito.sigma_div_sq * phi;
                for k in 0..modes {
                    let mut s = ep * phi * ito.sigma_div[k] - qv[lay.s(k)] * phi;
                    for i in 0..dim {
                        s -= qv[lay.t(k, i)] * theta * d1[i];
                    }
                    stoch_k[k][c] = s;
                }
            } else {
                ito_c[c] = 0.0;
            }
            coef_c[c] = coef;
        }
        // Dissipation in the scheme's face form, one Bregman pair per face.
        for c in 0..cells {
            for axis in 0..dim {
                let e = shift(m, c, axis, 1);
                let up = qfun[e] - qfun[c] - eta_p[c] * (big_phi[e] - big_phi[c]);
                let dn = qfun[c] - qfun[e] - eta_p[e] * (big_phi[c] - big_phi[e]);
                let dis = (theta * stencils[c].0 * up + theta * stencils[e].0 * dn) / (h * h);
                diff_c[c] -= dis;
            }
        }
        time_parts.push(w * pairwise_sum(&time_c));
        diff_parts.push(w * pairwise_sum(&diff_c));
        coef_parts.push(w * pairwise_sum(&coef_c));
        ito_parts.push(w * pairwise_sum(&ito_c));
        if modes > 0 && with_ito {
            let dw = path.step(n);
            let s: f64 = (0..modes).map(|k| dw[k] * w * pairwise_sum(&stoch_k[k])).sum();
            stoch_parts.push(s);
        }
    }
    let time = pairwise_sum(&time_parts);
    let diffusion = dt * pairwise_sum(&diff_parts);
    let coefficients = dt * pairwise_sum(&coef_parts);
    let ito = dt * pairwise_sum(&ito_parts);
    let stochastic = pairwise_sum(&stoch_parts);
    Ok(EntropyResidual {
        residual: time + initial - diffusion - coefficients - ito - stochastic,
        time,
        initial,
        diffusion,
        coefficients,
        ito,
        stochastic,
        delta: pair.delta(),
    })
}
