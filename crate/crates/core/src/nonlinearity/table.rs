use crate::quad::pairwise_sum;

/// Lookup tables for an even profile `a(r)` on `[0, end]` together with its
/// odd antiderivatives `Phi(r) = int_0^r a^2` and `[a](r) = int_0^r a`.
/// Past `end` the profile is constant, so `Phi` and `[a]` extend linearly.
#[derive(Debug, Clone)]
pub(crate) struct ProfileTable {
    step: f64,
    a: Vec<f64>,
    phi: Vec<f64>,
    bracket: Vec<f64>,
    /// Running maximum of `a^2` from the origin.
    a_sq_max: Vec<f64>,
}

impl ProfileTable {
    /// Tabulates `profile` (which must be even) with node spacing `step` up
    /// to at least `end`. Integrals use composite Simpson on half-steps.
    pub(crate) fn build(profile: impl Fn(f64) -> f64, end: f64, step: f64) -> Self {
        let nodes = (end / step).ceil() as usize + 1;
        let half: Vec<f64> = (0..2 * nodes - 1).map(|j| profile(0.5 * step * j as f64)).collect();
        let a: Vec<f64> = half.iter().step_by(2).copied().collect();

        let mut phi = vec![0.0; nodes];
        let mut bracket = vec![0.0; nodes];
        let mut phi_cells = Vec::with_capacity(nodes);
        let mut bracket_cells = Vec::with_capacity(nodes);
        for j in 0..nodes - 1 {
            let (l, c, r) = (half[2 * j], half[2 * j + 1], half[2 * j + 2]);
            phi_cells.push(step / 6.0 * (l * l + 4.0 * c * c + r * r));
            bracket_cells.push(step / 6.0 * (l + 4.0 * c + r));
        }
        // Prefix sums in blocks keep the accumulated rounding at pairwise level.
        let mut acc_phi = 0.0;
        let mut acc_br = 0.0;
        for (j, (p, b)) in phi_cells.chunks(64).zip(bracket_cells.chunks(64)).enumerate() {
            let mut run_p = 0.0;
            let mut run_b = 0.0;
            for (i, (pp, bb)) in p.iter().zip(b).enumerate() {
                run_p += pp;
                run_b += bb;
                phi[64 * j + i + 1] = acc_phi + run_p;
                bracket[64 * j + i + 1] = acc_br + run_b;
            }
            acc_phi += pairwise_sum(p);
            acc_br += pairwise_sum(b);
        }

        let mut a_sq_max = Vec::with_capacity(nodes);
        let mut running = 0.0f64;
        for v in &a {
            running = running.max(v * v);
            a_sq_max.push(running);
        }
        ProfileTable {
            step,
            a,
            phi,
            bracket,
            a_sq_max,
        }
    }

    pub(crate) fn end(&self) -> f64 {
        (self.a.len() - 1) as f64 * self.step
    }

    #[inline]
    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let s = x / self.step;
        let j = s as usize;
        if j + 1 >= self.a.len() {
            None
        } else {
            Some((j, s - j as f64))
        }
    }

    #[inline]
    fn hermite(&self, values: &[f64], deriv: impl Fn(usize) -> f64, j: usize, t: f64) -> f64 {
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * values[j]
            + (t3 - 2.0 * t2 + t) * self.step * deriv(j)
            + (-2.0 * t3 + 3.0 * t2) * values[j + 1]
            + (t3 - t2) * self.step * deriv(j + 1)
    }

    /// Monotone (Fritsch–Carlson) slope of the profile at node `j`; the
    /// mirrored node `-1` makes the slope vanish at the origin.
    #[inline]
    fn a_slope(&self, j: usize) -> f64 {
        let last = self.a.len() - 1;
        if j == 0 || j == last {
            return 0.0;
        }
        let left = (self.a[j] - self.a[j - 1]) / self.step;
        let right = (self.a[j + 1] - self.a[j]) / self.step;
        if left * right <= 0.0 {
            0.0
        } else {
            2.0 * left * right / (left + right)
        }
    }

    /// Shape-preserving cubic interpolation of the even profile; never
    /// leaves the range of the two bracketing nodes.
    #[inline]
    pub(crate) fn a(&self, r: f64) -> f64 {
        match self.locate(r.abs()) {
            None => self.a[self.a.len() - 1],
            Some((j, t)) => {
                let (lo, hi) = (self.a[j].min(self.a[j + 1]), self.a[j].max(self.a[j + 1]));
                self.hermite(&self.a, |i| self.a_slope(i), j, t).clamp(lo, hi)
            }
        }
    }

    #[inline]
    pub(crate) fn phi(&self, r: f64) -> f64 {
        let x = r.abs();
        let v = match self.locate(x) {
            None => {
                let last = self.a.len() - 1;
                let a_end = self.a[last];
                self.phi[last] + (x - self.end()) * a_end * a_end
            }
            Some((j, t)) => self.hermite(&self.phi, |i| self.a[i] * self.a[i], j, t),
        };
        v.copysign(r)
    }

    #[inline]
    pub(crate) fn bracket(&self, r: f64) -> f64 {
        let x = r.abs();
        let v = match self.locate(x) {
            None => {
                let last = self.a.len() - 1;
                self.bracket[last] + (x - self.end()) * self.a[last]
            }
            Some((j, t)) => self.hermite(&self.bracket, |i| self.a[i], j, t),
        };
        v.copysign(r)
    }

    /// `sup_{|s| <= range} a(s)^2` over the tabulated nodes.
    pub(crate) fn sup_a_sq(&self, range: f64) -> f64 {
        let idx = ((range.abs() / self.step).ceil() as usize)
            .saturating_add(1)
            .min(self.a_sq_max.len() - 1);
        self.a_sq_max[idx]
    }

    pub(crate) fn min_a(&self) -> f64 {
        self.a.iter().copied().fold(f64::INFINITY, f64::min)
    }
}
