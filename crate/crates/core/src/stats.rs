//! Ensemble estimators: Madelung moments `(ρ_m, C, C₁₂, C_θ)` and the 4×4
//! quadrature covariance with its squeezing degree ξ and anisotropy K.
//!
//! All sums go through [`reduce_sums`], so estimates are bit-identical for any
//! thread count.

use nalgebra::Matrix4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};
use crate::numeric::reduce_sums;
use crate::sde::{densities, EnsembleState, Quadratures};

/// Minimum ensemble size for the statistics operations.
pub const MIN_SAMPLES: usize = 100;

/// Densities below this leave the phase undefined.
pub const PHASE_DENSITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MadelungMoments {
    /// Mode-symmetrized mean density.
    pub rho_m: f64,
    /// `⟨δρ_j²⟩`, mode-symmetrized.
    pub c: f64,
    /// `⟨δρ₁δρ₂⟩`.
    pub c12: f64,
    /// Variance of `θ₊ = θ₁ + θ₂` on the branch centred at π/2. `None` when
    /// the phase sum is not pinned (no entangled pumping).
    pub c_theta: Option<f64>,
    /// `1 − |⟨exp(i(θ₊ − π/2))⟩|`; meaningful even once `C_θ` is of order one.
    pub circular_variance: Option<f64>,
    /// Number of trajectories; zero for closed-form values.
    pub n_samples: usize,
}

/// One-sigma standard errors of the Monte Carlo moment estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentErrors {
    pub rho_m: f64,
    pub c: f64,
    pub c12: f64,
    pub c_theta: f64,
}

/// `θ₊ − π/2` wrapped into `(−π, π]`.
pub fn phase_sum_offset(q: &Quadratures) -> f64 {
    let raw = q[1].atan2(q[0]) + q[3].atan2(q[2]) - FRAC_PI_2;
    let wrapped = (raw + PI).rem_euclid(TAU) - PI;
    if wrapped <= -PI {
        wrapped + TAU
    } else {
        wrapped
    }
}

fn require_samples(n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        Err(Error::TooFewSamples {
            required: MIN_SAMPLES,
            got: n,
        })
    } else {
        Ok(())
    }
}

pub fn madelung_moments(s: &EnsembleState) -> Result<MadelungMoments> {
    madelung_moments_with_errors(s).map(|(m, _)| m)
}

/// Moments plus standard errors from the per-trajectory contributions.
pub fn madelung_moments_with_errors(s: &EnsembleState) -> Result<(MadelungMoments, MomentErrors)> {
    let n = s.n_traj();
    require_samples(n)?;
    if let Some((i, rho)) = s.states.iter().enumerate().find_map(|(i, q)| {
        let (r1, r2) = densities(q);
        let r = r1.min(r2);
        (r < PHASE_DENSITY_FLOOR).then_some((i, r))
    }) {
        return Err(Error::DegeneratePhase { trajectory: i, rho });
    }
    let nf = n as f64;

    let [s1, s2, sd, sc, ss] = reduce_sums(&s.states, |q| {
        let (r1, r2) = densities(q);
        let d = phase_sum_offset(q);
        let (sin, cos) = d.sin_cos();
        [r1, r2, d, cos, sin]
    });
    let (m1, m2, md) = (s1 / nf, s2 / nf, sd / nf);

    // Per-trajectory contributions: ρ̄, δρ² (symmetrized), δρ₁δρ₂, δθ².
    let [a1, a2, b1, b2, c1, c2, d1, d2] = reduce_sums(&s.states, |q| {
        let (r1, r2) = densities(q);
        let (e1, e2) = (r1 - m1, r2 - m2);
        let rbar = 0.5 * (r1 + r2);
        let var = 0.5 * (e1 * e1 + e2 * e2);
        let cov = e1 * e2;
        let dt = phase_sum_offset(q) - md;
        let dt2 = dt * dt;
        [rbar, rbar * rbar, var, var * var, cov, cov * cov, dt2, dt2 * dt2]
    });
    let se = |sum: f64, sum_sq: f64| {
        let mean = sum / nf;
        ((sum_sq / nf - mean * mean).max(0.0) / nf).sqrt()
    };

    let moments = MadelungMoments {
        rho_m: a1 / nf,
        c: b1 / nf,
        c12: c1 / nf,
        c_theta: Some(d1 / nf),
        circular_variance: Some(1.0 - (sc / nf).hypot(ss / nf)),
        n_samples: n,
    };
    let errors = MomentErrors {
        rho_m: se(a1, a2),
        c: se(b1, b2),
        c12: se(c1, c2),
        c_theta: se(d1, d2),
    };
    Ok((moments, errors))
}

/// `ξ = 1 − (C − C₁₂)/(4ρ_m²) − C_θ/2`; `None` without a pinned phase sum.
pub fn squeezing_from_moments(m: &MadelungMoments) -> Option<f64> {
    m.c_theta
        .map(|ct| 1.0 - (m.c - m.c12) / (4.0 * m.rho_m * m.rho_m) - 0.5 * ct)
}

/// Quadrature covariance in the order `(x₁, p₁, x₂, p₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix4 {
    pub sigma: Matrix4<f64>,
    pub means: [f64; 4],
    /// Squeezing degree.
    pub xi: f64,
    /// Anisotropy `⟨q₋²⟩/⟨q₊²⟩` of the `(x₁, p₂)` plane.
    pub k: f64,
}

impl CovarianceMatrix4 {
    pub fn from_sigma(sigma: Matrix4<f64>) -> Self {
        Self::with_means(sigma, [0.0; 4])
    }

    fn with_means(sigma: Matrix4<f64>, means: [f64; 4]) -> Self {
        let sym = 0.5 * (sigma + sigma.transpose());
        let mut cov = CovarianceMatrix4 {
            sigma: sym,
            means,
            xi: squeezing_degree(&sym),
            k: 0.0,
        };
        cov.k = anisotropy(&cov);
        cov
    }

    /// `σ = (ρ_m/2)·[[1,0,0,ξ],[0,1,ξ,0],[0,ξ,1,0],[ξ,0,0,1]]`.
    pub fn structured(rho_m: f64, xi: f64) -> Self {
        #[rustfmt::skip]
        let m = Matrix4::new(
            1.0, 0.0, 0.0, xi,
            0.0, 1.0, xi, 0.0,
            0.0, xi, 1.0, 0.0,
            xi, 0.0, 0.0, 1.0,
        );
        Self::from_sigma(m * (0.5 * rho_m))
    }

    pub fn is_positive_semidefinite(&self, tol: f64) -> bool {
        self.sigma
            .symmetric_eigenvalues()
            .iter()
            .all(|&l| l >= -tol)
    }
}

/// Symmetrized cross term over symmetrized diagonal:
/// `ξ = (σ₁₄ + σ₂₃) / ((σ₁₁ + σ₂₂ + σ₃₃ + σ₄₄)/2)`.
fn squeezing_degree(s: &Matrix4<f64>) -> f64 {
    let cross = 0.5 * (s[(0, 3)] + s[(3, 0)] + s[(1, 2)] + s[(2, 1)]);
    cross / (0.5 * s.trace())
}

/// Sample covariance about the sample means (normalized by N).
pub fn covariance(s: &EnsembleState) -> Result<CovarianceMatrix4> {
    require_samples(s.n_traj())?;
    Ok(covariance_of(&s.states))
}

pub(crate) fn covariance_of(states: &[Quadratures]) -> CovarianceMatrix4 {
    let nf = states.len() as f64;
    let sums = reduce_sums(states, |q| *q);
    let mu = sums.map(|v| v / nf);
    let second: [f64; 10] = reduce_sums(states, |q| {
        let d = [q[0] - mu[0], q[1] - mu[1], q[2] - mu[2], q[3] - mu[3]];
        [
            d[0] * d[0],
            d[0] * d[1],
            d[0] * d[2],
            d[0] * d[3],
            d[1] * d[1],
            d[1] * d[2],
            d[1] * d[3],
            d[2] * d[2],
            d[2] * d[3],
            d[3] * d[3],
        ]
    });
    let mut sigma = Matrix4::zeros();
    let mut k = 0;
    for i in 0..4 {
        for j in i..4 {
            sigma[(i, j)] = second[k] / nf;
            sigma[(j, i)] = second[k] / nf;
            k += 1;
        }
    }
    CovarianceMatrix4::with_means(sigma, mu)
}

/// `K = ⟨q₋²⟩/⟨q₊²⟩` with `q± = (x₁ ± p₂)/√2`.
pub fn anisotropy(cov: &CovarianceMatrix4) -> f64 {
    let s = &cov.sigma;
    let diag = s[(0, 0)] + s[(3, 3)];
    (diag - 2.0 * s[(0, 3)]) / (diag + 2.0 * s[(0, 3)])
}

/// Mean and standard deviation of `statistic` over `resamples` bootstrap
/// resamples of the trajectories. Resample `b` draws its indices from
/// ChaCha8 stream `b` of `seed`.
pub fn bootstrap<F>(states: &[Quadratures], resamples: usize, seed: u64, statistic: F) -> (f64, f64)
where
    F: Fn(&[Quadratures]) -> f64 + Sync,
{
    let n = states.len();
    let values: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let sample: Vec<Quadratures> = (0..n).map(|_| states[rng.random_range(0..n)]).collect();
            statistic(&sample)
        })
        .collect();
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0).max(1.0);
    (mean, var.sqrt())
}
