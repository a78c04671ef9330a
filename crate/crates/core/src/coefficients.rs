//! Noise and flux coefficients `sigma^{ik}(x, r)`, `G^i(x, r)` and the Itô
//! coefficients `a^{ij}`, `b^i`, `f^i` derived from them.
//!
//! Every coefficient is separable, `h(x) g(r)`, with a spatial factor from
//! [`SpatialProfile`] and an amplitude from [`Amplitude`]; both carry analytic
//! derivatives. Points live on the unit torus, `x` in `[0, 1)^d`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoeffError {
    #[error("non-finite coefficient for component i={i}, mode k={k} at x={x:?}, r={r}")]
    NonFinite { i: usize, k: usize, x: [f64; 2], r: f64 },
    #[error("dimension must be 1 or 2, got {0}")]
    Dimension(usize),
    #[error("mode {mode} has {got} components, expected {expected}")]
    Components { mode: usize, got: usize, expected: usize },
    #[error("flux has {got} components, expected {expected}")]
    Flux { got: usize, expected: usize },
}

/// Values and derivatives of a spatial factor at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpatialJet {
    pub v: f64,
    pub d1: [f64; 2],
    pub d2: [[f64; 2]; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpatialProfile {
    Constant {
        value: f64,
    },
    /// `amplitude * cos(2 pi (k . x) + phase)`.
    Cosine {
        amplitude: f64,
        #[serde(default = "unit_wavenumber")]
        wavenumber: [f64; 2],
        #[serde(default)]
        phase: f64,
    },
}

fn unit_wavenumber() -> [f64; 2] {
    [1.0, 0.0]
}

impl SpatialProfile {
    pub fn zero() -> Self {
        SpatialProfile::Constant { value: 0.0 }
    }

    pub fn constant(value: f64) -> Self {
        SpatialProfile::Constant { value }
    }

    /// `amplitude * cos(2 pi k x)` along the first axis.
    pub fn cosine(amplitude: f64, k: f64) -> Self {
        SpatialProfile::Cosine {
            amplitude,
            wavenumber: [k, 0.0],
            phase: 0.0,
        }
    }

    pub fn jet(&self, x: &[f64]) -> SpatialJet {
        match *self {
            SpatialProfile::Constant { value } => SpatialJet {
                v: value,
                ..Default::default()
            },
            SpatialProfile::Cosine {
                amplitude,
                wavenumber,
                phase,
            } => {
                let w = [TAU * wavenumber[0], TAU * wavenumber[1]];
                let mut theta = phase;
                for (l, xl) in x.iter().enumerate() {
                    theta += w[l] * xl;
                }
                let (s, c) = theta.sin_cos();
                let mut jet = SpatialJet {
                    v: amplitude * c,
                    ..Default::default()
                };
                for l in 0..x.len() {
                    jet.d1[l] = -amplitude * w[l] * s;
                    for m in 0..x.len() {
                        jet.d2[l][m] = -amplitude * w[l] * w[m] * c;
                    }
                }
                jet
            }
        }
    }

    /// Third derivative along the first axis (one-dimensional use).
    pub fn third(&self, x: f64) -> f64 {
        match *self {
            SpatialProfile::Constant { .. } => 0.0,
            SpatialProfile::Cosine {
                amplitude,
                wavenumber,
                phase,
            } => {
                let w = TAU * wavenumber[0];
                amplitude * w * w * w * (w * x + phase).sin()
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            SpatialProfile::Constant { value } => value == 0.0,
            SpatialProfile::Cosine { amplitude, .. } => amplitude == 0.0,
        }
    }
}

/// `r`-dependence of a separable coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Amplitude {
    Zero,
    One,
    /// `r`
    Linear,
    /// `sqrt(1 + r^2)`
    Sqrt1pSq,
    /// `r^2`
    Square,
}

impl Amplitude {
    /// `[g, g', g'', g''']` at `r`.
    #[inline]
    pub fn jet(&self, r: f64) -> [f64; 4] {
        match self {
            Amplitude::Zero => [0.0; 4],
            Amplitude::One => [1.0, 0.0, 0.0, 0.0],
            Amplitude::Linear => [r, 1.0, 0.0, 0.0],
            Amplitude::Sqrt1pSq => {
                let q = 1.0 + r * r;
                let s = q.sqrt();
                let inv3 = 1.0 / (q * s);
                [s, r / s, inv3, -3.0 * r * inv3 / q]
            }
            Amplitude::Square => [r * r, 2.0 * r, 2.0, 0.0],
        }
    }

    /// `sup |g'|`, `sup |g''|` and `sup |g'''|` over `|r| <= range`.
    pub fn derivative_sups(&self, range: f64) -> [f64; 3] {
        let r = range.abs();
        match self {
            Amplitude::Zero | Amplitude::One => [0.0; 3],
            Amplitude::Linear => [1.0, 0.0, 0.0],
            // g' = r/s is monotone; g'' peaks at 0; |g'''| peaks at r = 1/2.
            Amplitude::Sqrt1pSq => {
                let g3 = |t: f64| 3.0 * t * (1.0 + t * t).powf(-2.5);
                [r / (1.0 + r * r).sqrt(), 1.0, g3(r.min(0.5))]
            }
            Amplitude::Square => [2.0 * r, 2.0, 0.0],
        }
    }
}

/// `h(x) g(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Separable {
    pub spatial: SpatialProfile,
    pub amplitude: Amplitude,
}

impl Separable {
    pub fn zero() -> Self {
        Separable {
            spatial: SpatialProfile::zero(),
            amplitude: Amplitude::Zero,
        }
    }

    pub fn new(spatial: SpatialProfile, amplitude: Amplitude) -> Self {
        Separable { spatial, amplitude }
    }
}

/// One noise mode: `sigma^{ik}` for `i = 1..d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseMode {
    pub components: Vec<Separable>,
}

/// Declared constants of the noise assumption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub n0: f64,
    pub n1: f64,
    pub kappa_bar: f64,
    pub beta: f64,
    pub beta_tilde: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            n0: 10.0,
            n1: 10.0,
            kappa_bar: 1.0,
            beta: 1.0,
            beta_tilde: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSet {
    pub dim: usize,
    pub modes: Vec<NoiseMode>,
    pub flux: Vec<Separable>,
    #[serde(default)]
    pub bounds: Bounds,
}

/// Everything the solver and the entropy diagnostics need at one `(x, r)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ItoPoint {
    pub a: [[f64; 2]; 2],
    /// `sum_j d_{x_j} a^{ij}`
    pub a_div: [f64; 2],
    pub b: [f64; 2],
    pub b_r: [f64; 2],
    pub f: [f64; 2],
    pub f_r: [f64; 2],
    /// `sum_i d_{x_i} f^i`
    pub f_div: f64,
    /// `sum_i d_{x_i} f^i_r`
    pub f_r_div: f64,
    /// `G^i + b^i / 2`, the drift flux of the divergence-form equation.
    pub drift_flux: [f64; 2],
    /// `sigma^{ik}`, indexed `k * d + i`.
    pub sigma: Vec<f64>,
    /// `sigma^{ik}_r`, indexed `k * d + i`.
    pub sigma_r: Vec<f64>,
    /// `sum_i sigma^{ik}_{x_i}` per mode.
    pub sigma_div: Vec<f64>,
    /// `sum_i sigma^{ik}_{r x_i}` per mode.
    pub sigma_r_div: Vec<f64>,
    /// `sum_k |sum_i sigma^{ik}_{x_i}|^2`
    pub sigma_div_sq: f64,
}

/// Spatial jets of every factor at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointJets {
    sigma: Vec<SpatialJet>,
    flux: [SpatialJet; 2],
}

impl PointJets {
    /// Spatial factor of `sigma^{ik}`.
    pub fn sigma(&self, dim: usize, i: usize, k: usize) -> &SpatialJet {
        &self.sigma[k * dim + i]
    }

    /// Spatial factor of `G^i`.
    pub fn flux(&self, i: usize) -> &SpatialJet {
        &self.flux[i]
    }
}

impl CoefficientSet {
    pub fn new(dim: usize, modes: Vec<NoiseMode>, flux: Vec<Separable>) -> Result<Self, CoeffError> {
        let set = CoefficientSet {
            dim,
            modes,
            flux,
            bounds: Bounds::default(),
        };
        set.validate()?;
        Ok(set)
    }

    /// No noise and no flux.
    pub fn zero(dim: usize) -> Self {
        CoefficientSet {
            dim,
            modes: Vec::new(),
            flux: vec![Separable::zero(); dim],
            bounds: Bounds::default(),
        }
    }

    /// One-dimensional, one mode `sigma(x, r) = h(x) g(r)`, zero flux.
    pub fn single_mode(spatial: SpatialProfile, amplitude: Amplitude) -> Self {
        CoefficientSet {
            dim: 1,
            modes: vec![NoiseMode {
                components: vec![Separable::new(spatial, amplitude)],
            }],
            flux: vec![Separable::zero()],
            bounds: Bounds::default(),
        }
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn with_flux(mut self, flux: Vec<Separable>) -> Self {
        self.flux = flux;
        self
    }

    pub fn validate(&self) -> Result<(), CoeffError> {
        if !(1..=2).contains(&self.dim) {
            return Err(CoeffError::Dimension(self.dim));
        }
        for (k, mode) in self.modes.iter().enumerate() {
            if mode.components.len() != self.dim {
                return Err(CoeffError::Components {
                    mode: k,
                    got: mode.components.len(),
                    expected: self.dim,
                });
            }
        }
        if self.flux.len() != self.dim {
            return Err(CoeffError::Flux {
                got: self.flux.len(),
                expected: self.dim,
            });
        }
        Ok(())
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    fn component(&self, i: usize, k: usize) -> &Separable {
        &self.modes[k].components[i]
    }

    pub fn sigma(&self, i: usize, k: usize, x: &[f64], r: f64) -> f64 {
        let c = self.component(i, k);
        c.spatial.jet(x).v * c.amplitude.jet(r)[0]
    }

    pub fn sigma_r(&self, i: usize, k: usize, x: &[f64], r: f64) -> f64 {
        let c = self.component(i, k);
        c.spatial.jet(x).v * c.amplitude.jet(r)[1]
    }

    pub fn sigma_rr(&self, i: usize, k: usize, x: &[f64], r: f64) -> f64 {
        let c = self.component(i, k);
        c.spatial.jet(x).v * c.amplitude.jet(r)[2]
    }

    pub fn sigma_x(&self, i: usize, k: usize, l: usize, x: &[f64], r: f64) -> f64 {
        let c = self.component(i, k);
        c.spatial.jet(x).d1[l] * c.amplitude.jet(r)[0]
    }

    pub fn sigma_rx(&self, i: usize, k: usize, l: usize, x: &[f64], r: f64) -> f64 {
        let c = self.component(i, k);
        c.spatial.jet(x).d1[l] * c.amplitude.jet(r)[1]
    }

    pub fn flux_value(&self, i: usize, x: &[f64], r: f64) -> f64 {
        let c = &self.flux[i];
        c.spatial.jet(x).v * c.amplitude.jet(r)[0]
    }

    pub fn flux_r(&self, i: usize, x: &[f64], r: f64) -> f64 {
        let c = &self.flux[i];
        c.spatial.jet(x).v * c.amplitude.jet(r)[1]
    }

    pub fn flux_x(&self, i: usize, l: usize, x: &[f64], r: f64) -> f64 {
        let c = &self.flux[i];
        c.spatial.jet(x).d1[l] * c.amplitude.jet(r)[0]
    }

    pub fn flux_rx(&self, i: usize, l: usize, x: &[f64], r: f64) -> f64 {
        let c = &self.flux[i];
        c.spatial.jet(x).d1[l] * c.amplitude.jet(r)[1]
    }

    pub fn jets(&self, x: &[f64]) -> PointJets {
        let d = self.dim;
        let mut sigma = Vec::with_capacity(self.modes.len() * d);
        for mode in &self.modes {
            for c in &mode.components {
                sigma.push(c.spatial.jet(&x[..d]));
            }
        }
        let mut flux = [SpatialJet::default(); 2];
        for (i, c) in self.flux.iter().enumerate() {
            flux[i] = c.spatial.jet(&x[..d]);
        }
        PointJets { sigma, flux }
    }

    /// Itô coefficients from precomputed spatial jets.
    pub fn ito_from_jets(&self, jets: &PointJets, r: f64) -> ItoPoint {
        let d = self.dim;
        let k_count = self.modes.len();
        let mut p = ItoPoint {
            sigma: vec![0.0; k_count * d],
            sigma_r: vec![0.0; k_count * d],
            sigma_div: vec![0.0; k_count],
            sigma_r_div: vec![0.0; k_count],
            ..Default::default()
        };
        // d_l a^{ij}, d_l b^i and d_l b^i_r accumulated per component.
        let mut a_x = [[[0.0; 2]; 2]; 2];
        let mut b_x = [[0.0; 2]; 2];
        let mut b_rx = [[0.0; 2]; 2];
        for (k, mode) in self.modes.iter().enumerate() {
            let mut g = [[0.0; 4]; 2];
            let mut h = [SpatialJet::default(); 2];
            for i in 0..d {
                g[i] = mode.components[i].amplitude.jet(r);
                h[i] = jets.sigma[k * d + i];
            }
            // div = sum_j sigma^{jk}_{x_j}, and its r- and x_l-derivatives.
            let mut div = 0.0;
            let mut div_r = 0.0;
            let mut div_l = [0.0; 2];
            let mut div_rl = [0.0; 2];
            for j in 0..d {
                div += h[j].d1[j] * g[j][0];
                div_r += h[j].d1[j] * g[j][1];
                for l in 0..d {
                    div_l[l] += h[j].d2[j][l] * g[j][0];
                    div_rl[l] += h[j].d2[j][l] * g[j][1];
                }
            }
            p.sigma_div[k] = div;
            p.sigma_r_div[k] = div_r;
            p.sigma_div_sq += div * div;
            for i in 0..d {
                let s_r = h[i].v * g[i][1];
                let s_rr = h[i].v * g[i][2];
                p.sigma[k * d + i] = h[i].v * g[i][0];
                p.sigma_r[k * d + i] = s_r;
                for j in 0..d {
                    p.a[i][j] += 0.5 * s_r * h[j].v * g[j][1];
                    for l in 0..d {
                        a_x[i][j][l] += 0.5
                            * (h[i].d1[l] * g[i][1] * h[j].v * g[j][1]
                                + s_r * h[j].d1[l] * g[j][1]);
                    }
                }
                p.b[i] += s_r * div;
                p.b_r[i] += s_rr * div + s_r * div_r;
                for l in 0..d {
                    let s_rl = h[i].d1[l] * g[i][1];
                    let s_rrl = h[i].d1[l] * g[i][2];
                    b_x[i][l] += s_rl * div + s_r * div_l[l];
                    b_rx[i][l] += s_rrl * div + s_rl * div_r + s_rr * div_l[l] + s_r * div_rl[l];
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                p.a_div[i] += a_x[i][j][j];
            }
            let c = &self.flux[i];
            let q = c.amplitude.jet(r);
            let s = jets.flux[i];
            let g_val = s.v * q[0];
            let g_r = s.v * q[1];
            p.f[i] = g_val - 0.5 * p.b[i];
            p.f_r[i] = g_r - 0.5 * p.b_r[i];
            p.drift_flux[i] = g_val + 0.5 * p.b[i];
            p.f_div += s.d1[i] * q[0] - 0.5 * b_x[i][i];
            p.f_r_div += s.d1[i] * q[1] - 0.5 * b_rx[i][i];
        }
        p
    }

    pub fn ito(&self, x: &[f64], r: f64) -> ItoPoint {
        self.ito_from_jets(&self.jets(x), r)
    }

    fn finite_or_err(&self, x: &[f64], r: f64, vals: impl Iterator<Item = (usize, usize, f64)>) -> Result<(), CoeffError> {
        for (i, k, v) in vals {
            if !v.is_finite() {
                let mut xs = [0.0; 2];
                xs[..x.len().min(2)].copy_from_slice(&x[..x.len().min(2)]);
                return Err(CoeffError::NonFinite { i, k, x: xs, r });
            }
        }
        Ok(())
    }

    fn check_sigma_finite(&self, x: &[f64], r: f64) -> Result<(), CoeffError> {
        let d = self.dim;
        let mut all = Vec::new();
        for k in 0..self.modes.len() {
            for i in 0..d {
                all.push((i, k, self.sigma_r(i, k, x, r)));
                all.push((i, k, self.sigma(i, k, x, r)));
                for l in 0..d {
                    all.push((i, k, self.sigma_x(i, k, l, x, r)));
                    all.push((i, k, self.sigma_rx(i, k, l, x, r)));
                }
            }
        }
        self.finite_or_err(x, r, all.into_iter())
    }

    /// `a^{ij} = 1/2 sum_k sigma^{ik}_r sigma^{jk}_r`; entries beyond `dim` are zero.
    pub fn compute_a(&self, x: &[f64], r: f64) -> Result<[[f64; 2]; 2], CoeffError> {
        self.check_sigma_finite(x, r)?;
        Ok(self.ito(x, r).a)
    }

    /// `b^i = sum_k sigma^{ik}_r sum_j sigma^{jk}_{x_j}`.
    pub fn compute_b(&self, x: &[f64], r: f64) -> Result<[f64; 2], CoeffError> {
        self.check_sigma_finite(x, r)?;
        Ok(self.ito(x, r).b)
    }

    /// `f^i = G^i - b^i / 2`.
    pub fn compute_f(&self, x: &[f64], r: f64) -> Result<[f64; 2], CoeffError> {
        self.check_sigma_finite(x, r)?;
        let vals = (0..self.dim).map(|i| (i, 0, self.flux_value(i, x, r)));
        self.finite_or_err(x, r, vals)?;
        Ok(self.ito(x, r).f)
    }

    /// Upper bound for the largest eigenvalue of `a` over `|r| <= range`
    /// (trace of the Gram matrix, bounded termwise).
    pub fn a_bound(&self, range: f64) -> f64 {
        let mut total = 0.0;
        for mode in &self.modes {
            for c in &mode.components {
                let h = spatial_sup(&c.spatial);
                let g1 = c.amplitude.derivative_sups(range)[0];
                total += 0.5 * h * h * g1 * g1;
            }
        }
        total
    }
}

/// `sup |h|` over the torus.
fn spatial_sup(s: &SpatialProfile) -> f64 {
    match *s {
        SpatialProfile::Constant { value } => value.abs(),
        SpatialProfile::Cosine { amplitude, .. } => amplitude.abs(),
    }
}

/// Cell centres of a uniform periodic grid, `x_i = i / m` per axis.
pub fn cell_points(dim: usize, m: usize) -> Vec<[f64; 2]> {
    let h = 1.0 / m as f64;
    match dim {
        1 => (0..m).map(|i| [i as f64 * h, 0.0]).collect(),
        _ => (0..m * m)
            .map(|c| [(c % m) as f64 * h, (c / m) as f64 * h])
            .collect(),
    }
}

/// Spatial jets cached per grid cell; evaluating the Itô coefficients at a
/// cell then only costs the amplitude evaluations.
#[derive(Debug, Clone)]
pub struct GridCoefficients {
    set: CoefficientSet,
    m: usize,
    jets: Vec<PointJets>,
    /// `h^{ik}` per cell, indexed `cell * (K d) + k d + i`.
    h: Vec<f64>,
    /// `h^{jk}_{x_j}` summed over `j` is not separable in `r`, so each
    /// component's own divergence factor is kept, indexed like `h`.
    h_diag: Vec<f64>,
    /// Flux spatial factor per cell, indexed `cell * d + i`.
    p: Vec<f64>,
    sigma_amp: Vec<Amplitude>,
    flux_amp: Vec<Amplitude>,
    noisy: bool,
    has_flux: bool,
}

impl GridCoefficients {
    pub fn new(set: &CoefficientSet, m: usize) -> Self {
        let d = set.dim;
        let points = cell_points(d, m);
        let jets: Vec<PointJets> = points.iter().map(|x| set.jets(&x[..d])).collect();
        let kd = set.modes.len() * d;
        let mut h = Vec::with_capacity(points.len() * kd);
        let mut h_diag = Vec::with_capacity(points.len() * kd);
        let mut p = Vec::with_capacity(points.len() * d);
        for jet in &jets {
            for (idx, s) in jet.sigma.iter().enumerate() {
                h.push(s.v);
                h_diag.push(s.d1[idx % d]);
            }
            for i in 0..d {
                p.push(jet.flux[i].v);
            }
        }
        let sigma_amp = set
            .modes
            .iter()
            .flat_map(|m| m.components.iter().map(|c| c.amplitude))
            .collect();
        let flux_amp = set.flux.iter().map(|c| c.amplitude).collect();
        let noisy = set
            .modes
            .iter()
            .flat_map(|m| &m.components)
            .any(|c| !c.spatial.is_zero() && c.amplitude != Amplitude::Zero);
        let has_flux = set
            .flux
            .iter()
            .any(|c| !c.spatial.is_zero() && c.amplitude != Amplitude::Zero);
        GridCoefficients {
            set: set.clone(),
            m,
            jets,
            h,
            h_diag,
            p,
            sigma_amp,
            flux_amp,
            noisy,
            has_flux,
        }
    }

    pub fn set(&self) -> &CoefficientSet {
        &self.set
    }

    pub fn resolution(&self) -> usize {
        self.m
    }

    pub fn modes(&self) -> usize {
        self.set.modes.len()
    }

    pub fn dim(&self) -> usize {
        self.set.dim
    }

    /// False when every noise component vanishes identically.
    pub fn is_noisy(&self) -> bool {
        self.noisy
    }

    /// False when the deterministic flux `G` vanishes identically.
    pub fn has_flux(&self) -> bool {
        self.has_flux
    }

    pub fn jets(&self, cell: usize) -> &PointJets {
        &self.jets[cell]
    }

    /// Full Itô data at a cell.
    pub fn ito_at(&self, cell: usize, r: f64) -> ItoPoint {
        self.set.ito_from_jets(&self.jets[cell], r)
    }

    /// The three per-cell quantities the time stepper needs: `a`, the drift
    /// flux `G + b/2`, and `sigma^{ik}` (written to `sigma`, `k d + i`).
    #[inline]
    pub fn flux_terms(&self, cell: usize, r: f64, sigma: &mut [f64]) -> ([[f64; 2]; 2], [f64; 2]) {
        let d = self.set.dim;
        let kd = self.sigma_amp.len();
        let mut a = [[0.0; 2]; 2];
        let mut e = [0.0; 2];
        if self.noisy {
            let base = cell * kd;
            let mut s_r = [0.0; 2];
            for k in 0..kd / d.max(1) {
                let mut div = 0.0;
                for i in 0..d {
                    let idx = k * d + i;
                    let g = self.sigma_amp[idx].jet(r);
                    let hv = self.h[base + idx];
                    sigma[idx] = hv * g[0];
                    s_r[i] = hv * g[1];
                    div += self.h_diag[base + idx] * g[0];
                }
                for i in 0..d {
                    for j in 0..d {
                        a[i][j] += 0.5 * s_r[i] * s_r[j];
                    }
                    e[i] += 0.5 * s_r[i] * div;
                }
            }
        } else {
            sigma.iter_mut().for_each(|s| *s = 0.0);
        }
        if self.has_flux {
            for i in 0..d {
                e[i] += self.p[cell * d + i] * self.flux_amp[i].jet(r)[0];
            }
        }
        (a, e)
    }
}

/// Observed supremum of one bound next to its declared constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub observed: f64,
    pub declared: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaReport {
    pub range: f64,
    pub samples: usize,
    pub checks: Vec<BoundCheck>,
    /// Worst relative error of `sigma_r` against a central difference of `sigma`.
    pub fd_consistency: f64,
    pub fd_ok: bool,
    pub exponents_ok: bool,
    pub non_finite: Option<String>,
    pub passed: bool,
}

impl SigmaReport {
    pub fn check(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Regular sample grid on `T^d x [-range, range]`.
pub fn sample_grid(dim: usize, range: f64, grid: usize) -> Vec<([f64; 2], f64)> {
    let g = grid.max(2);
    let xs: Vec<f64> = (0..g).map(|i| i as f64 / g as f64).collect();
    let rs: Vec<f64> = (0..g)
        .map(|j| -range + 2.0 * range * j as f64 / (g - 1) as f64)
        .collect();
    let mut out = Vec::new();
    match dim {
        1 => {
            for &x in &xs {
                for &r in &rs {
                    out.push(([x, 0.0], r));
                }
            }
        }
        _ => {
            for &x in &xs {
                for &y in &xs {
                    for &r in &rs {
                        out.push(([x, y], r));
                    }
                }
            }
        }
    }
    out
}

const FD_STEP: f64 = 1e-5;
const FD_TOL: f64 = 1e-6;

/// Evaluates the sampled noise and flux bounds on `samples`:
///
/// * `n0_sigma_r_w2`: `sup |sigma_r|_{W^2_inf(T^d; l2)}` (values and up to
///   second `x`-derivatives), against `N0`;
/// * `n0_sigma_rr`: `sup |sigma_rr|` and `|sigma_{r x}|_{W^1_inf(R)}`, against `N0`;
/// * `n0_b_r`: `|d_r (sigma_r sigma_x)|` and `|d_x d_r (...)|`, `|G_r|`, `|G_{xr}|`, against `N0`;
/// * `n1_growth`: `(|G| + |sigma_r sigma_x| + |d_x(sigma_r sigma_x)| + |G_x|
///   + |sigma_x|_{l2}) / (1 + |r|)`, against `N1`.
///
/// Hölder seminorms are dominated by the Lipschitz quantities above.
pub fn check_assumption_sigma(set: &CoefficientSet, samples: &[([f64; 2], f64)]) -> SigmaReport {
    let d = set.dim;
    let b = set.bounds;
    let mut w2 = 0.0f64;
    let mut rr = 0.0f64;
    let mut br = 0.0f64;
    let mut growth = 0.0f64;
    let mut fd = 0.0f64;
    let mut range = 0.0f64;
    let mut non_finite = None;
    for (x, r) in samples {
        let x = &x[..d];
        let r = *r;
        range = range.max(r.abs());
        if let Err(e) = set.check_sigma_finite(x, r) {
            non_finite.get_or_insert(e.to_string());
            continue;
        }
        let jets = set.jets(x);
        let p = set.ito_from_jets(&jets, r);
        for i in 0..d {
            // l2 norms across modes of sigma_r and its x-derivatives.
            let mut v = 0.0;
            let mut v1 = [0.0; 2];
            let mut v2 = [[0.0; 2]; 2];
            let mut s_rr = 0.0;
            let mut s_rx = [0.0; 2];
            let mut s_rrx = [0.0; 2];
            let mut s_x = 0.0;
            for (k, mode) in set.modes.iter().enumerate() {
                let g = mode.components[i].amplitude.jet(r);
                let h = jets.sigma[k * d + i];
                v += (h.v * g[1]).powi(2);
                s_rr += (h.v * g[2]).powi(2);
                s_x += p.sigma_div[k].powi(2);
                for l in 0..d {
                    v1[l] += (h.d1[l] * g[1]).powi(2);
                    s_rx[l] += (h.d1[l] * g[1]).powi(2);
                    s_rrx[l] += (h.d1[l] * g[2]).powi(2);
                    for m in 0..d {
                        v2[l][m] += (h.d2[l][m] * g[1]).powi(2);
                    }
                }
                let fd_r = (set.sigma(i, k, x, r + FD_STEP) - set.sigma(i, k, x, r - FD_STEP)) / (2.0 * FD_STEP);
                let exact = set.sigma_r(i, k, x, r);
                let scale = exact.abs().max(set.sigma(i, k, x, r).abs()).max(1e-300);
                if exact != 0.0 || fd_r != 0.0 {
                    fd = fd.max((fd_r - exact).abs() / scale);
                }
            }
            let mut w = v.sqrt();
            for l in 0..d {
                w = w.max(v1[l].sqrt());
                for m in 0..d {
                    w = w.max(v2[l][m].sqrt());
                }
            }
            w2 = w2.max(w);
            let mut rr_i = s_rr.sqrt();
            for l in 0..d {
                rr_i = rr_i.max(s_rx[l].sqrt()).max(s_rrx[l].sqrt());
            }
            rr = rr.max(rr_i);

            let c = &set.flux[i];
            let q = c.amplitude.jet(r);
            let s = jets.flux[i];
            let mut br_i = p.b_r[i].abs().max((s.v * q[1]).abs());
            for l in 0..d {
                br_i = br_i.max((s.d1[l] * q[1]).abs());
            }
            br = br.max(br_i);

            let mut g = (s.v * q[0]).abs() + p.b[i].abs() + s_x.sqrt();
            for l in 0..d {
                g = g.max((s.v * q[0]).abs() + (s.d1[l] * q[0]).abs() + p.b[i].abs());
            }
            growth = growth.max(g / (1.0 + r.abs()));
        }
        growth = growth.max(p.f_div.abs() / (1.0 + r.abs()));
        br = br.max(p.f_r_div.abs());
    }
    let mk = |name: &str, observed: f64, declared: f64| BoundCheck {
        name: name.into(),
        observed,
        declared,
        violated: !(observed <= declared),
    };
    let checks = vec![
        mk("n0_sigma_r_w2", w2, b.n0),
        mk("n0_sigma_rr", rr, b.n0),
        mk("n0_b_r", br, b.n0),
        mk("n1_growth", growth, b.n1),
    ];
    let exponents_ok = b.kappa_bar <= 1.0
        && b.kappa_bar > 0.5
        && b.beta <= 1.0
        && b.beta > 0.5 / b.kappa_bar
        && b.beta_tilde > 0.0
        && b.beta_tilde < 1.0;
    let fd_ok = fd <= FD_TOL;
    let passed = non_finite.is_none() && fd_ok && exponents_ok && checks.iter().all(|c| !c.violated);
    SigmaReport {
        range,
        samples: samples.len(),
        checks,
        fd_consistency: fd,
        fd_ok,
        exponents_ok,
        non_finite,
        passed,
    }
}
