//! Monte-Carlo estimate of the steady-state output variance under
//! unit-intensity white noise, by Euler–Maruyama.
//!
//! Trial `k` draws its noise from `ChaCha8Rng` seeded with `seed` on stream
//! `k`, so results do not depend on how trials are scheduled.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::StateSpace;

const OVERFLOW_NORM: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub dt: f64,
    pub horizon: f64,
    pub burn_in: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 200.0,
            burn_in: 20.0,
            trials: 16,
            seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.burn_in >= 0.0 && self.burn_in < self.horizon) {
            return Err(Error::invalid(format!(
                "burn_in must lie in [0, horizon), got {}",
                self.burn_in
            )));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.samples_per_trial() == 0 {
            return Err(Error::invalid("horizon - burn_in is shorter than one step"));
        }
        Ok(())
    }

    pub fn burn_in_steps(&self) -> usize {
        (self.burn_in / self.dt).round() as usize
    }

    /// `floor((horizon − burn_in)/dt)`, with a little slack for rounding.
    pub fn samples_per_trial(&self) -> usize {
        ((self.horizon - self.burn_in) / self.dt * (1.0 + 1e-12)).floor() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationEstimate {
    pub variance_estimate: f64,
    /// Standard error from the spread of per-trial means. Infinite (JSON
    /// `null`) for a single trial.
    pub standard_error: f64,
    pub samples_used: usize,
    pub trial_means: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
}

/// Row-major copies of `I + dt·A`, `√dt·B` and `C` for the inner loop.
struct Stepper {
    n: usize,
    m: usize,
    p: usize,
    ad: Vec<f64>,
    bd: Vec<f64>,
    c: Vec<f64>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

impl Stepper {
    fn new(sys: &StateSpace, dt: f64) -> Self {
        let n = sys.n_states();
        let ad = DMatrix::identity(n, n) + sys.a() * dt;
        let bd = sys.b() * dt.sqrt();
        Self {
            n,
            m: sys.n_inputs(),
            p: sys.n_outputs(),
            ad: row_major(&ad),
            bd: row_major(&bd),
            c: row_major(sys.c()),
        }
    }

    fn step(&self, x: &[f64], xi: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let arow = &self.ad[i * self.n..(i + 1) * self.n];
            let brow = &self.bd[i * self.m..(i + 1) * self.m];
            let mut acc = 0.0;
            for j in 0..self.n {
                acc += arow[j] * x[j];
            }
            for j in 0..self.m {
                acc += brow[j] * xi[j];
            }
            out[i] = acc;
        }
    }

    fn output(&self, x: &[f64], z: &mut [f64]) {
        for i in 0..self.p {
            let crow = &self.c[i * self.n..(i + 1) * self.n];
            z[i] = crow.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Run one trial, calling `visit(step, x)` after every step.
fn run_trial(
    stepper: &Stepper,
    cfg: &SimulationConfig,
    trial: usize,
    mut visit: impl FnMut(usize, &[f64]),
) -> Result<()> {
    let n = stepper.n;
    let total = cfg.burn_in_steps() + cfg.samples_per_trial();
    let mut rng = trial_rng(cfg.seed, trial);
    let mut x = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut xi = vec![0.0; stepper.m];
    for k in 1..=total {
        for v in xi.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        stepper.step(&x, &xi, &mut next);
        std::mem::swap(&mut x, &mut next);
        let norm_sq: f64 = x.iter().map(|v| v * v).sum();
        if !(norm_sq <= OVERFLOW_NORM * OVERFLOW_NORM) {
            return Err(Error::SimulationOverflow {
                step: k,
                time: k as f64 * cfg.dt,
                dt: cfg.dt,
            });
        }
        visit(k, &x);
    }
    Ok(())
}

/// One trajectory from `x₀ = 0`, recording every `stride`-th step (and the
/// initial state).
pub fn simulate_trajectory(
    sys: &StateSpace,
    cfg: &SimulationConfig,
    trial_index: usize,
    stride: usize,
) -> Result<Trajectory> {
    cfg.validate()?;
    let stride = stride.max(1);
    let stepper = Stepper::new(sys, cfg.dt);
    let mut traj = Trajectory {
        t: vec![0.0],
        states: vec![vec![0.0; stepper.n]],
        z: vec![vec![0.0; stepper.p]],
    };
    let mut z = vec![0.0; stepper.p];
    run_trial(&stepper, cfg, trial_index, |k, x| {
        if k % stride == 0 {
            stepper.output(x, &mut z);
            traj.t.push(k as f64 * cfg.dt);
            traj.states.push(x.to_vec());
            traj.z.push(z.clone());
        }
    })?;
    Ok(traj)
}

/// Mean of `zᵀz` over all post-burn-in samples of all trials.
pub fn estimate_variance(sys: &StateSpace, cfg: &SimulationConfig) -> Result<SimulationEstimate> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    let radius = sys.spectral_radius()?;
    if cfg.dt * radius > 0.1 {
        warnings.push(format!(
            "dt * spectral radius = {:.3} exceeds 0.1; Euler-Maruyama bias may be large",
            cfg.dt * radius
        ));
    }
    let stepper = Stepper::new(sys, cfg.dt);
    let burn = cfg.burn_in_steps();
    let per_trial = cfg.samples_per_trial();

    let means: Vec<f64> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut z = vec![0.0; stepper.p];
            let mut sum = 0.0;
            run_trial(&stepper, cfg, trial, |k, x| {
                if k > burn {
                    stepper.output(x, &mut z);
                    sum += z.iter().map(|v| v * v).sum::<f64>();
                }
            })?;
            Ok(sum / per_trial as f64)
        })
        .collect::<Result<_>>()?;

    let k = means.len() as f64;
    let mean = means.iter().sum::<f64>() / k;
    let standard_error = if means.len() < 2 {
        f64::INFINITY
    } else {
        let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    };
    Ok(SimulationEstimate {
        variance_estimate: mean,
        standard_error,
        samples_used: cfg.trials * per_trial,
        trial_means: means,
        warnings,
    })
}
