//! Euler–Maruyama ensemble integrator for the rotating-frame quadrature SDEs
//!
//! ```text
//! dx_j = −∂V/∂x_j dt + √(¼[ηP[ρ_j] + Γ]) dW_xj
//! dp_j = −∂V/∂p_j dt + √(¼[ηP[ρ_j] + Γ]) dW_pj
//! V    = (G[ρ₁] + G[ρ₂])/4 − χ (p₂x₁ + x₂p₁)
//! ```
//!
//! Each real Wiener increment has variance `dt`, which puts the vacuum at a
//! quadrature variance of 1/4.
//!
//! Every trajectory owns a ChaCha8 stream (`seed`, stream = trajectory index),
//! so an ensemble is a deterministic function of the seed and the step count
//! and does not depend on how rayon schedules the work.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, TAU};

use crate::entanglement::analytic_steady_moments;
use crate::error::{Error, Result};
use crate::model::{DrivingProtocol, ModelParams};
use crate::numeric::reduce_sums;

/// `(x₁, p₁, x₂, p₂)`.
pub type Quadratures = [f64; 4];

/// Upper bound on `dt·max(Γ, P[0], 2χ₀)`.
pub const STABILITY_LIMIT: f64 = 0.05;

const PAR_CHUNK: usize = 256;

pub fn densities(q: &Quadratures) -> (f64, f64) {
    (q[0] * q[0] + q[1] * q[1], q[2] * q[2] + q[3] * q[3])
}

/// N trajectories at a common time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleState {
    pub t: f64,
    pub states: Vec<Quadratures>,
}

impl EnsembleState {
    pub fn new(t: f64, states: Vec<Quadratures>) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::TooFewSamples {
                required: 2,
                got: states.len(),
            });
        }
        if let Some(i) = states.iter().position(|q| q.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite { trajectory: i, t });
        }
        Ok(EnsembleState { t, states })
    }

    pub fn n_traj(&self) -> usize {
        self.states.len()
    }

    /// Ensemble mean of `(ρ₁, ρ₂)`.
    pub fn mean_densities(&self) -> (f64, f64) {
        let [a, b] = reduce_sums(&self.states, |q| {
            let (r1, r2) = densities(q);
            [r1, r2]
        });
        let n = self.states.len() as f64;
        (a / n, b / n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseDensityMode {
    /// Noise amplitude evaluated at the current ensemble-mean density of each mode.
    #[default]
    SelfConsistentMean,
    /// Noise amplitude evaluated at each trajectory's own density.
    PerTrajectory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    /// Step count used by [`Integrator::run`].
    pub n_steps: u64,
    pub n_traj: usize,
    pub seed: u64,
    /// Time spent at `χ₀` before observation starts.
    pub burn_in: f64,
    pub noise_density_mode: NoiseDensityMode,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: 1e-3,
            n_steps: 0,
            n_traj: 10_000,
            seed: 42,
            burn_in: 10.0,
            noise_density_mode: NoiseDensityMode::SelfConsistentMean,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", format!("must be > 0, got {}", self.dt)));
        }
        if self.n_traj < 2 {
            return Err(Error::invalid("n_traj", format!("must be >= 2, got {}", self.n_traj)));
        }
        if !(self.burn_in >= 0.0 && self.burn_in.is_finite()) {
            return Err(Error::invalid("burn_in", format!("must be >= 0, got {}", self.burn_in)));
        }
        let fastest = params
            .gamma
            .max(params.gain(0.0))
            .max(2.0 * params.chi0);
        if self.dt * fastest > STABILITY_LIMIT {
            return Err(Error::invalid(
                "dt",
                format!(
                    "dt·max(Γ, P[0], 2χ₀) = {} exceeds {STABILITY_LIMIT}",
                    self.dt * fastest
                ),
            ));
        }
        Ok(())
    }

    pub fn steps_for(&self, duration: f64) -> u64 {
        (duration / self.dt).round() as u64
    }
}

/// Quadrature potential `V(x₁, p₁, x₂, p₂)` at pumping `chi`.
pub fn quadrature_potential(params: &ModelParams, q: &Quadratures, chi: f64) -> f64 {
    let (r1, r2) = densities(q);
    0.25 * (params.potential(r1) + params.potential(r2)) - chi * (q[3] * q[0] + q[2] * q[1])
}

/// `−∇V`, the deterministic part of the quadrature SDEs.
pub fn drift(params: &ModelParams, q: &Quadratures, chi: f64) -> Quadratures {
    let (r1, r2) = densities(q);
    let g1 = 0.5 * (params.gain(r1) - params.gamma);
    let g2 = 0.5 * (params.gain(r2) - params.gamma);
    [
        g1 * q[0] + chi * q[3],
        g1 * q[1] + chi * q[2],
        g2 * q[2] + chi * q[1],
        g2 * q[3] + chi * q[0],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseAmplitude {
    pub amplitude: f64,
    /// `ηP[ρ]` was negative and has been replaced by zero.
    pub clamped: bool,
}

/// `√(¼(ηP[ρ] + Γ))`, with negative `ηP` clamped to zero.
pub fn noise_amplitude(params: &ModelParams, rho: f64) -> NoiseAmplitude {
    let pumped = params.eta * params.gain(rho);
    let clamped = pumped < 0.0;
    NoiseAmplitude {
        amplitude: (0.25 * (pumped.max(0.0) + params.gamma)).sqrt(),
        clamped,
    }
}

/// Gaussian weak-noise state in Madelung variables used to seed an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianRing {
    pub rho_m: f64,
    pub c: f64,
    pub c12: f64,
    pub c_theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialCondition {
    /// All quadratures zero.
    Vacuum,
    /// `ρ₁ = ρ₂ = rho`, `θ₁` uniform, `θ₁ + θ₂ = π/2`.
    Ring { rho: f64 },
    /// `ρ₁ = ρ₂ = rho` with independent uniform phases.
    Unpaired { rho: f64 },
    /// Correlated Gaussian densities and phase sum, `θ₁` uniform.
    Gaussian(GaussianRing),
}

impl InitialCondition {
    /// Warm start close to the stationary state of `params` at `χ₀`.
    pub fn default_for(params: &ModelParams) -> Self {
        let Ok(rho) = params.equilibrium_density() else {
            return InitialCondition::Vacuum;
        };
        if params.chi0 > 0.0 {
            if let Ok(m) = analytic_steady_moments(params) {
                if let Some(c_theta) = m.c_theta {
                    return InitialCondition::Gaussian(GaussianRing {
                        rho_m: m.rho_m,
                        c: m.c,
                        c12: m.c12,
                        c_theta,
                    });
                }
            }
        }
        if params.chi0 > 0.0 {
            InitialCondition::Ring { rho }
        } else {
            InitialCondition::Unpaired { rho }
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Quadratures {
        match *self {
            InitialCondition::Vacuum => [0.0; 4],
            InitialCondition::Ring { rho } => {
                let th1 = TAU * rng.random::<f64>();
                polar(rho, th1, rho, FRAC_PI_2 - th1)
            }
            InitialCondition::Unpaired { rho } => {
                let th1 = TAU * rng.random::<f64>();
                let th2 = TAU * rng.random::<f64>();
                polar(rho, th1, rho, th2)
            }
            InitialCondition::Gaussian(g) => {
                let z: [f64; 3] = [
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                ];
                let th1 = TAU * rng.random::<f64>();
                let sd = g.c.max(0.0).sqrt();
                let (b, c) = if sd > 0.0 {
                    let b = g.c12 / sd;
                    (b, (g.c - b * b).max(0.0).sqrt())
                } else {
                    (0.0, 0.0)
                };
                let r1 = (g.rho_m + sd * z[0]).max(0.0);
                let r2 = (g.rho_m + b * z[0] + c * z[1]).max(0.0);
                let theta_sum = FRAC_PI_2 + g.c_theta.max(0.0).sqrt() * z[2];
                polar(r1, th1, r2, theta_sum - th1)
            }
        }
    }
}

fn polar(r1: f64, th1: f64, r2: f64, th2: f64) -> Quadratures {
    let (s1, c1) = th1.sin_cos();
    let (s2, c2) = th2.sin_cos();
    let (a1, a2) = (r1.sqrt(), r2.sqrt());
    [a1 * c1, a1 * s1, a2 * c2, a2 * s2]
}

/// Ensemble integrator holding the per-trajectory random streams.
pub struct Integrator {
    params: ModelParams,
    cfg: IntegratorConfig,
    t0: f64,
    step_index: u64,
    states: Vec<Quadratures>,
    rngs: Vec<ChaCha8Rng>,
    clamped_events: u64,
}

impl Integrator {
    pub fn new(params: ModelParams, cfg: IntegratorConfig, initial: InitialCondition) -> Result<Self> {
        params.validate()?;
        cfg.validate(&params)?;
        let mut rngs: Vec<ChaCha8Rng> = (0..cfg.n_traj)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(i as u64);
                rng
            })
            .collect();
        let states = rngs.par_iter_mut().map(|rng| initial.sample(rng)).collect();
        Ok(Integrator {
            params,
            cfg,
            t0: 0.0,
            step_index: 0,
            states,
            rngs,
            clamped_events: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.t0 + self.step_index as f64 * self.cfg.dt
    }

    /// Moves the time origin so that the current instant reads `t = 0`.
    pub fn reset_clock(&mut self) {
        self.t0 = -(self.step_index as f64) * self.cfg.dt;
    }

    pub fn clamped_events(&self) -> u64 {
        self.clamped_events
    }

    pub fn snapshot(&self) -> EnsembleState {
        EnsembleState {
            t: self.time(),
            states: self.states.clone(),
        }
    }

    /// Advances every trajectory by one step `dt` at pumping `chi`.
    pub fn step(&mut self, chi: f64) -> Result<()> {
        let params = self.params;
        let dt = self.cfg.dt;
        let sqrt_dt = dt.sqrt();

        let mean_amplitudes = match self.cfg.noise_density_mode {
            NoiseDensityMode::SelfConsistentMean => {
                let [a, b] = reduce_sums(&self.states, |q| {
                    let (r1, r2) = densities(q);
                    [r1, r2]
                });
                let n = self.states.len() as f64;
                let n1 = noise_amplitude(&params, a / n);
                let n2 = noise_amplitude(&params, b / n);
                self.clamped_events += n1.clamped as u64 + n2.clamped as u64;
                Some((n1.amplitude, n2.amplitude))
            }
            NoiseDensityMode::PerTrajectory => None,
        };

        let results: Vec<(Option<usize>, u64)> = self
            .states
            .par_chunks_mut(PAR_CHUNK)
            .zip(self.rngs.par_chunks_mut(PAR_CHUNK))
            .enumerate()
            .map(|(chunk, (states, rngs))| {
                let mut bad = None;
                let mut clamped = 0u64;
                for (k, (q, rng)) in states.iter_mut().zip(rngs.iter_mut()).enumerate() {
                    let d = drift(&params, q, chi);
                    let (s1, s2) = match mean_amplitudes {
                        Some(s) => s,
                        None => {
                            let (r1, r2) = densities(q);
                            let n1 = noise_amplitude(&params, r1);
                            let n2 = noise_amplitude(&params, r2);
                            clamped += n1.clamped as u64 + n2.clamped as u64;
                            (n1.amplitude, n2.amplitude)
                        }
                    };
                    let z: [f64; 4] = [
                        rng.sample(StandardNormal),
                        rng.sample(StandardNormal),
                        rng.sample(StandardNormal),
                        rng.sample(StandardNormal),
                    ];
                    q[0] += d[0] * dt + s1 * sqrt_dt * z[0];
                    q[1] += d[1] * dt + s1 * sqrt_dt * z[1];
                    q[2] += d[2] * dt + s2 * sqrt_dt * z[2];
                    q[3] += d[3] * dt + s2 * sqrt_dt * z[3];
                    if bad.is_none() && !q.iter().all(|v| v.is_finite()) {
                        bad = Some(chunk * PAR_CHUNK + k);
                    }
                }
                (bad, clamped)
            })
            .collect();

        self.step_index += 1;
        let mut first_bad = None;
        for (bad, clamped) in results {
            self.clamped_events += clamped;
            if first_bad.is_none() {
                first_bad = bad;
            }
        }
        match first_bad {
            Some(trajectory) => Err(Error::NonFinite {
                trajectory,
                t: self.time(),
            }),
            None => Ok(()),
        }
    }

    pub fn advance(&mut self, n_steps: u64, chi: f64) -> Result<()> {
        for _ in 0..n_steps {
            self.step(chi)?;
        }
        Ok(())
    }

    /// Advances `cfg.n_steps` steps.
    pub fn run(&mut self, chi: f64) -> Result<()> {
        self.advance(self.cfg.n_steps, chi)
    }
}

/// Snapshots produced by [`run_protocol`].
#[derive(Debug, Clone)]
pub struct ProtocolRun {
    /// One snapshot per requested time; `t` is measured from the end of burn-in.
    pub snapshots: Vec<EnsembleState>,
    pub clamped_events: u64,
}

/// Runs the driving protocol of `params` from the default warm start.
pub fn run_protocol(params: &ModelParams, cfg: &IntegratorConfig, observe_at: &[f64]) -> Result<ProtocolRun> {
    run_protocol_from(params, cfg, observe_at, InitialCondition::default_for(params))
}

/// Burn-in at `χ₀`, then observation at the requested times after burn-in.
/// Under [`DrivingProtocol::StepOff`] the pumping is zero after burn-in.
pub fn run_protocol_from(
    params: &ModelParams,
    cfg: &IntegratorConfig,
    observe_at: &[f64],
    initial: InitialCondition,
) -> Result<ProtocolRun> {
    if observe_at.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::invalid("observe_at", "times must be finite and >= 0"));
    }
    if observe_at.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("observe_at", "times must be non-decreasing"));
    }
    let mut integ = Integrator::new(*params, *cfg, initial)?;
    integ.advance(cfg.steps_for(cfg.burn_in), params.chi0)?;
    integ.reset_clock();
    let chi_after = match params.protocol {
        DrivingProtocol::ConstantChi => params.chi0,
        DrivingProtocol::StepOff => 0.0,
    };
    let mut done = 0u64;
    let mut snapshots = Vec::with_capacity(observe_at.len());
    for &t in observe_at {
        let target = cfg.steps_for(t);
        integ.advance(target.saturating_sub(done), chi_after)?;
        done = done.max(target);
        snapshots.push(integ.snapshot());
    }
    Ok(ProtocolRun {
        snapshots,
        clamped_events: integ.clamped_events(),
    })
}
