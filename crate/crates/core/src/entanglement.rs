//! Simon PPT functional, the squeezing threshold, critical entangled-pump
//! strength and phase-diagram sweeps.

use nalgebra::{Matrix2, Matrix4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, SaturationKind};
use crate::numeric::{bisect, first_root};
use crate::sde::Quadratures;
use crate::stats::{bootstrap, covariance_of, squeezing_from_moments, CovarianceMatrix4, MadelungMoments};

/// Blocks of `2σ = [[A, C], [Cᵀ, B]]` in the order `(x₁, p₁ | x₂, p₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PptBlocks {
    pub a: Matrix2<f64>,
    pub b: Matrix2<f64>,
    pub c: Matrix2<f64>,
}

impl PptBlocks {
    pub fn from_sigma(sigma: &Matrix4<f64>) -> Self {
        let two = sigma * 2.0;
        PptBlocks {
            a: two.fixed_view::<2, 2>(0, 0).into_owned(),
            b: two.fixed_view::<2, 2>(2, 2).into_owned(),
            c: two.fixed_view::<2, 2>(0, 2).into_owned(),
        }
    }

    /// `det A det B + (¼ − |det C|)² − tr(AJCJBJCᵀJ) − ¼(det A + det B)`.
    pub fn functional(&self) -> f64 {
        let j = Matrix2::new(0.0, 1.0, -1.0, 0.0);
        let (da, db, dc) = (self.a.determinant(), self.b.determinant(), self.c.determinant());
        let tr = (self.a * j * self.c * j * self.b * j * self.c.transpose() * j).trace();
        da * db + (0.25 - dc.abs()).powi(2) - tr - 0.25 * (da + db)
    }
}

/// PPT functional of a quadrature covariance; negative values certify
/// entanglement. Physicality of `sigma` beyond symmetry is not checked.
pub fn ppt_functional(sigma: &CovarianceMatrix4) -> f64 {
    PptBlocks::from_sigma(&sigma.sigma).functional()
}

/// Squeezing degree above which the structured covariance is entangled.
pub fn squeezing_threshold(rho_m: f64) -> f64 {
    1.0 - 0.5 / rho_m
}

/// Weak-noise stationary moments at `χ₀`. `C_θ` is `None` when `χ₀ = 0`.
pub fn analytic_steady_moments(params: &ModelParams) -> Result<MadelungMoments> {
    let rho = params.equilibrium_density()?;
    let g2 = params.potential_derivatives(rho).curvature;
    if !(g2 > 0.0) {
        return Err(Error::Unstable(g2 * rho / params.gamma));
    }
    let chi = params.chi0;
    let d4 = (1.0 + params.eta) * params.gamma - 2.0 * params.eta * chi;
    let denom = 2.0 * g2 * (g2 * rho + 2.0 * chi);
    Ok(MadelungMoments {
        rho_m: rho,
        c: d4 * (g2 * rho + chi) / denom,
        c12: d4 * chi / denom,
        c_theta: (chi > 0.0).then(|| d4 / (8.0 * chi * rho)),
        circular_variance: None,
        n_samples: 0,
    })
}

/// `2(2+η)ζ² + ((4+η)κ − 2(1+η))ζ − (1+η)κ`; positive means entangled.
pub fn threshold_polynomial(eta: f64, kappa: f64, zeta: f64) -> f64 {
    2.0 * (2.0 + eta) * zeta * zeta + ((4.0 + eta) * kappa - 2.0 * (1.0 + eta)) * zeta - (1.0 + eta) * kappa
}

/// Positive root of [`threshold_polynomial`] at fixed `κ`.
pub fn zeta_critical_explicit(eta: f64, kappa: f64) -> f64 {
    let disc = 4.0 * (eta + 1.0).powi(2) + (eta + 4.0).powi(2) * kappa * kappa + 4.0 * eta * (eta + 1.0) * kappa;
    (2.0 * eta + disc.sqrt() - (eta + 4.0) * kappa + 2.0) / (4.0 * (eta + 2.0))
}

/// Self-consistent critical `ζ` for `κ = κ(ζ)`: the first sign change of the
/// threshold polynomial in `(0, 1]`.
pub fn zeta_critical<K: Fn(f64) -> f64>(eta: f64, kappa_of_zeta: K) -> Result<f64> {
    let p = |z: f64| threshold_polynomial(eta, kappa_of_zeta(z), z);
    let lo = 1e-9;
    if p(lo) > 0.0 {
        return bisect(p, 0.0, lo, 0.0).ok_or(Error::NoThreshold);
    }
    first_root(p, lo, 1.0, 1000, 0.0).ok_or(Error::NoThreshold)
}

/// `η = 1` special case, bounded by `[2/5, 2/3]` for `κ ≥ 0`.
pub fn zeta_critical_eta1(kappa: f64) -> f64 {
    zeta_critical_explicit(1.0, kappa)
}

/// Closed-form flux elasticity along the equilibrium branch.
pub fn kappa_curve(law: SaturationKind, f: f64, zeta: f64) -> f64 {
    match law {
        SaturationKind::Nonlinear => (1.0 - zeta) * (zeta + f) / (1.0 + f),
        SaturationKind::Linear => f + zeta,
    }
}

/// Weak-noise stationary squeezing degree in terms of dimensionless inputs:
/// `1 − ((1+η) − ηζ)/(8ρ_m)·[1/(κ+ζ) + 1/ζ]`.
pub fn weak_noise_squeezing(eta: f64, kappa: f64, zeta: f64, rho_m: f64) -> f64 {
    if zeta <= 0.0 {
        return 0.0;
    }
    1.0 - ((1.0 + eta) - eta * zeta) / (8.0 * rho_m) * (1.0 / (kappa + zeta) + 1.0 / zeta)
}

/// Squeezing degree and entanglement verdict of the analytic stationary state.
pub fn steady_state_verdict(params: &ModelParams) -> Result<(Option<f64>, bool)> {
    let m = analytic_steady_moments(params)?;
    let xi = squeezing_from_moments(&m);
    Ok((xi, xi.is_some_and(|x| x > squeezing_threshold(m.rho_m))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub model: SaturationKind,
    pub f: f64,
    pub eta: f64,
    pub zeta: f64,
    pub kappa: f64,
    /// PPT functional of the structured covariance at the requested `ρ_m`.
    pub f_pt: f64,
    pub entangled: bool,
}

/// `ζ_crit(κ)` at fixed `η` over a `κ` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub eta: f64,
    pub kappa: Vec<f64>,
    pub zeta_crit: Vec<f64>,
}

/// Self-consistent critical point of one `(f, η)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub model: SaturationKind,
    pub f: f64,
    pub eta: f64,
    pub zeta_crit: Option<f64>,
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagramRequest {
    pub law: SaturationKind,
    pub f_values: Vec<f64>,
    pub eta_values: Vec<f64>,
    pub zeta_grid: Vec<f64>,
    pub kappa_grid: Vec<f64>,
    /// Density used for the structured covariance behind `f_pt`.
    pub rho_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub points: Vec<PhasePoint>,
    pub boundaries: Vec<BoundaryCurve>,
    pub crossings: Vec<Crossing>,
}

pub fn boundary_curve(eta: f64, kappa_grid: &[f64]) -> BoundaryCurve {
    BoundaryCurve {
        eta,
        kappa: kappa_grid.to_vec(),
        zeta_crit: kappa_grid.iter().map(|&k| zeta_critical_explicit(eta, k)).collect(),
    }
}

pub fn phase_diagram(req: &PhaseDiagramRequest) -> Result<PhaseDiagram> {
    if req.f_values.is_empty() || req.eta_values.is_empty() || req.zeta_grid.is_empty() {
        return Err(Error::invalid("phase_diagram", "f, eta and zeta grids must be nonempty"));
    }
    if !(req.rho_m > 0.0) {
        return Err(Error::invalid("rho_m", format!("must be > 0, got {}", req.rho_m)));
    }
    if let Some(z) = req.zeta_grid.iter().find(|z| !(0.0..=1.0).contains(*z)) {
        return Err(Error::invalid("zeta", format!("{z} outside [0, 1]")));
    }
    let combos: Vec<(f64, f64, f64)> = req
        .f_values
        .iter()
        .flat_map(|&f| {
            req.eta_values
                .iter()
                .flat_map(move |&eta| req.zeta_grid.iter().map(move |&z| (f, eta, z)))
        })
        .collect();
    let points = combos
        .par_iter()
        .map(|&(f, eta, zeta)| {
            let kappa = kappa_curve(req.law, f, zeta);
            let xi = weak_noise_squeezing(eta, kappa, zeta, req.rho_m);
            PhasePoint {
                model: req.law,
                f,
                eta,
                zeta,
                kappa,
                f_pt: ppt_functional(&CovarianceMatrix4::structured(req.rho_m, xi)),
                entangled: threshold_polynomial(eta, kappa, zeta) > 0.0,
            }
        })
        .collect();
    let boundaries = req.eta_values.iter().map(|&eta| boundary_curve(eta, &req.kappa_grid)).collect();
    let crossings = req
        .f_values
        .iter()
        .flat_map(|&f| {
            req.eta_values.iter().map(move |&eta| {
                let z = zeta_critical(eta, |z| kappa_curve(req.law, f, z)).ok();
                Crossing {
                    model: req.law,
                    f,
                    eta,
                    zeta_crit: z,
                    kappa: z.map(|z| kappa_curve(req.law, f, z)),
                }
            })
        })
        .collect();
    Ok(PhaseDiagram {
        points,
        boundaries,
        crossings,
    })
}

/// PPT functional of a simulated ensemble with its bootstrap standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulatedVerdict {
    pub f_pt: f64,
    pub se: f64,
    /// `F_PT < −4·SE`.
    pub entangled: bool,
}

pub fn simulated_verdict(states: &[Quadratures], resamples: usize, seed: u64) -> Result<SimulatedVerdict> {
    if states.len() < crate::stats::MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            required: crate::stats::MIN_SAMPLES,
            got: states.len(),
        });
    }
    if resamples < 2 {
        return Err(Error::invalid("resamples", "need at least 2 bootstrap resamples"));
    }
    let f_pt = ppt_functional(&covariance_of(states));
    let (_, se) = bootstrap(states, resamples, seed, |s| ppt_functional(&covariance_of(s)));
    Ok(SimulatedVerdict {
        f_pt,
        se,
        entangled: f_pt < -4.0 * se,
    })
}
