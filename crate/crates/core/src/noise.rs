//! Seeded Brownian increments for a finite set of noise modes.
//!
//! Each increment is a function of its key alone: a ChaCha8 block keyed by
//! `(seed, level)`, stream `mode`, positioned at `step`. Increments are
//! rounded to a dyadic quantum so that Brownian-bridge refinement splits them
//! into two halves whose floating-point sum is exactly the parent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoiseError {
    #[error("time step must be positive and finite, got {0}")]
    TimeStep(f64),
    #[error("path needs at least one step")]
    NoSteps,
    #[error("{modes} modes x {steps} steps overflows the addressable array")]
    Size { modes: usize, steps: usize },
}

/// Increments `dW[step][mode] ~ N(0, dt)`, stored row-major by step.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    seed: u64,
    level: u32,
    modes: usize,
    dt: f64,
    steps: usize,
    increments: Vec<f64>,
}

/// 32-bit words reserved per step in a stream; the normal sampler draws far
/// fewer.
const WORDS_PER_STEP: u128 = 64;

/// Bits of resolution kept below `sqrt(dt)`.
const QUANTUM_BITS: i32 = 46;

fn quantum(dt: f64) -> f64 {
    let e = dt.sqrt().log2().ceil() as i32;
    2f64.powi(e - QUANTUM_BITS)
}

fn keyed_rng(seed: u64, level: u32, mode: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(level as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(mode as u64);
    rng
}

fn normal_at(rng: &mut ChaCha8Rng, step: usize) -> f64 {
    rng.set_word_pos(step as u128 * WORDS_PER_STEP);
    StandardNormal.sample(rng)
}

fn checked_len(modes: usize, steps: usize) -> Result<usize, NoiseError> {
    modes
        .checked_mul(steps)
        .filter(|&n| n <= isize::MAX as usize / 8)
        .ok_or(NoiseError::Size { modes, steps })
}

/// Draws `steps` increments for each of `modes` modes at time step `dt`.
pub fn sample_path(seed: u64, modes: usize, dt: f64, steps: usize) -> Result<NoisePath, NoiseError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(NoiseError::TimeStep(dt));
    }
    if steps == 0 {
        return Err(NoiseError::NoSteps);
    }
    let len = checked_len(modes, steps)?;
    let q = quantum(dt);
    let scale = dt.sqrt();
    let mut increments = vec![0.0; len];
    for k in 0..modes {
        let mut rng = keyed_rng(seed, 0, k);
        for n in 0..steps {
            let z: f64 = normal_at(&mut rng, n);
            increments[n * modes + k] = (scale * z / q).round() * q;
        }
    }
    Ok(NoisePath {
        seed,
        level: 0,
        modes,
        dt,
        steps,
        increments,
    })
}

/// Halves the time step by conditional midpoint sampling: the first half is
/// `dW/2 + sqrt(dt/4) Z`, the second is the remainder, so pair sums return the
/// parent exactly. `Z` is keyed by `(seed, level + 1, mode, parent step)`.
pub fn refine(path: &NoisePath) -> NoisePath {
    let modes = path.modes;
    let steps = 2 * path.steps;
    let dt = 0.5 * path.dt;
    let q = quantum(dt);
    let spread = (0.25 * path.dt).sqrt();
    let level = path.level + 1;
    let mut increments = vec![0.0; modes * steps];
    for k in 0..modes {
        let mut rng = keyed_rng(path.seed, level, k);
        for n in 0..path.steps {
            let parent = path.increments[n * modes + k];
            let z: f64 = normal_at(&mut rng, n);
            let first = ((0.5 * parent + spread * z) / q).round() * q;
            increments[2 * n * modes + k] = first;
            increments[(2 * n + 1) * modes + k] = parent - first;
        }
    }
    NoisePath {
        seed: path.seed,
        level,
        modes,
        dt,
        steps,
        increments,
    }
}

impl NoisePath {
    /// A path with no modes, for deterministic runs.
    pub fn silent(dt: f64, steps: usize) -> Self {
        NoisePath {
            seed: 0,
            level: 0,
            modes: 0,
            dt,
            steps,
            increments: Vec::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Increments of all modes at `step`.
    #[inline]
    pub fn step(&self, step: usize) -> &[f64] {
        &self.increments[step * self.modes..(step + 1) * self.modes]
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Increments of one mode over the whole path.
    pub fn mode(&self, mode: usize) -> impl Iterator<Item = f64> + '_ {
        self.increments.iter().skip(mode).step_by(self.modes.max(1)).copied()
    }

    /// Sums consecutive pairs of steps; inverse of [`refine`].
    pub fn coarsen(&self) -> NoisePath {
        let modes = self.modes;
        let steps = self.steps / 2;
        let mut increments = vec![0.0; modes * steps];
        for n in 0..steps {
            for k in 0..modes {
                increments[n * modes + k] =
                    self.increments[2 * n * modes + k] + self.increments[(2 * n + 1) * modes + k];
            }
        }
        NoisePath {
            seed: self.seed,
            level: self.level.saturating_sub(1),
            modes,
            dt: 2.0 * self.dt,
            steps,
            increments,
        }
    }
}
