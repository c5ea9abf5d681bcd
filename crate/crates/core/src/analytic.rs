//! Closed-form quench dynamics for the linear saturation law at `η = 1`:
//! density relaxation, cumulants, phase diffusion, squeezing degree and the
//! disentanglement time after the entangled pumping is switched off.
//!
//! Time is dimensionless, `τ = Γt`.

use serde::{Deserialize, Serialize};

use crate::entanglement::{analytic_steady_moments, squeezing_threshold};
use crate::error::{Error, Result};
use crate::model::{DrivingProtocol, ModelParams, SaturationLaw};
use crate::numeric::first_root;
use crate::stats::MadelungMoments;

/// Upper end of the disentanglement-time search, in units of `τ`.
pub const TAU_SEARCH_MAX: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuenchParams {
    /// Excess pump `f = P₀/Γ − 1`.
    pub f: f64,
    /// Entangled-pump strength before the quench, `ζ₀ = 2χ₀/Γ`.
    pub zeta0: f64,
    pub gamma: f64,
    /// Gain slope α of the linear law.
    pub alpha: f64,
}

impl QuenchParams {
    pub fn new(f: f64, zeta0: f64, gamma: f64, alpha: f64) -> Result<Self> {
        let q = QuenchParams { f, zeta0, gamma, alpha };
        q.validate()?;
        Ok(q)
    }

    /// Gain slope chosen so that the pre-quench density is `rho0`.
    pub fn with_initial_density(f: f64, zeta0: f64, gamma: f64, rho0: f64) -> Result<Self> {
        Self::new(f, zeta0, gamma, gamma * (f + zeta0) / rho0)
    }

    pub fn from_model(params: &ModelParams) -> Result<Self> {
        let SaturationLaw::Linear { gain_slope, .. } = params.saturation else {
            return Err(Error::invalid("saturation", "quench closed forms need the linear law"));
        };
        if params.eta != 1.0 {
            return Err(Error::invalid("eta", "quench closed forms need eta = 1"));
        }
        Self::new(params.excess_pump(), params.zeta0(), params.gamma, gain_slope)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f > 0.0 && self.f.is_finite()) {
            return Err(Error::invalid("f", format!("must be > 0, got {}", self.f)));
        }
        if !(self.zeta0 > 0.0 && self.zeta0 <= 1.0) {
            return Err(Error::invalid("zeta0", format!("must lie in (0, 1], got {}", self.zeta0)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid("gamma", format!("must be > 0, got {}", self.gamma)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid("alpha", format!("must be > 0, got {}", self.alpha)));
        }
        Ok(())
    }

    /// Pre-quench model at `χ₀ = ζ₀Γ/2`.
    pub fn model(&self, protocol: DrivingProtocol) -> Result<ModelParams> {
        let law = SaturationLaw::Linear {
            base_gain: self.gamma * (1.0 + self.f),
            gain_slope: self.alpha,
        };
        ModelParams::new(law, self.gamma, 1.0, 0.5 * self.zeta0 * self.gamma, protocol)
    }

    /// `α/Γ`, the inverse density scale.
    fn a(&self) -> f64 {
        self.alpha / self.gamma
    }

    /// `f + ζ₀(1 − e^{−fτ})`.
    fn s(&self, tau: f64) -> f64 {
        self.f - self.zeta0 * (-self.f * tau).exp_m1()
    }
}

/// Normalization of the phase-sum diffusion after the quench.
///
/// `SingleMode` is the rate `¼((f+2)/ρ_m − α/Γ)` of the closed forms.
/// `PhaseSum` doubles it, which is the rate for `θ₁ + θ₂` when each mode
/// phase diffuses independently at the single-mode rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseDiffusion {
    #[default]
    SingleMode,
    PhaseSum,
}

impl PhaseDiffusion {
    pub fn multiplier(self) -> f64 {
        match self {
            PhaseDiffusion::SingleMode => 1.0,
            PhaseDiffusion::PhaseSum => 2.0,
        }
    }
}

/// Mean density `ρ_m(τ) = (fΓ/α)(f+ζ₀)/(f+ζ₀(1−e^{−fτ}))`.
pub fn rho_mean(q: &QuenchParams, tau: f64) -> f64 {
    q.f / q.a() * (q.f + q.zeta0) / q.s(tau)
}

/// Interpolating function with `e(0) = 0`, `e(∞) = 1`.
pub fn e_interp(q: &QuenchParams, tau: f64) -> f64 {
    let (f, z) = (q.f, q.zeta0);
    let u = (-f * tau).exp();
    let one_minus_u = -(-f * tau).exp_m1();
    let pre = ((f + z) / q.s(tau)).powi(4);
    let fz = f + z;
    let bracket = one_minus_u
        * (1.0 - (f * (z - 1.0) + 5.0 * z) / fz * u - (f + 2.0) * z.powi(3) / fz.powi(3) * u * u)
        + 2.0 * z * z * f * (f + 3.0) * u * u * tau / (fz * fz);
    pre * bracket
}

/// `(C, C₁₂, C_θ)` at `τ` from the given initial cumulants.
pub fn cumulants(
    q: &QuenchParams,
    c0: f64,
    c12_0: f64,
    c_theta0: f64,
    tau: f64,
    diffusion: PhaseDiffusion,
) -> (f64, f64, f64) {
    let (f, z) = (q.f, q.zeta0);
    let decay = (f / q.s(tau)).powi(4) * (-2.0 * f * tau).exp();
    let c = decay * c0 + e_interp(q, tau) / q.a();
    let c12 = decay * c12_0;
    let growth = -(f + 2.0) * z * (-(-f * tau).exp_m1()) / (4.0 * f * f * (f + z)) + tau / (2.0 * f);
    let c_theta = c_theta0 + diffusion.multiplier() * q.a() * growth;
    (c, c12, c_theta)
}

/// Pre-quench stationary moments at `(f, ζ₀, η = 1)`.
pub fn initial_moments(q: &QuenchParams) -> Result<MadelungMoments> {
    analytic_steady_moments(&q.model(DrivingProtocol::StepOff)?)
}

/// `ξ₀ = 1 − (2−ζ₀)/(8ρ_m)·[1/(f+2ζ₀) + 1/ζ₀]`.
pub fn initial_squeezing(f: f64, zeta0: f64, rho_m: f64) -> f64 {
    1.0 - (2.0 - zeta0) / (8.0 * rho_m) * (1.0 / (f + 2.0 * zeta0) + 1.0 / zeta0)
}

/// `ζ₀` at which the pre-quench state sits on the entanglement threshold.
pub fn initial_entanglement_boundary(f: f64) -> f64 {
    (6.0 - 5.0 * f + (36.0 + 28.0 * f + 25.0 * f * f).sqrt()) / 22.0
}

/// Late-time squeezing degree, valid once the radial cumulants have relaxed.
pub fn late_time_xi(q: &QuenchParams, tau: f64, diffusion: PhaseDiffusion) -> f64 {
    let (f, z) = (q.f, q.zeta0);
    let m = diffusion.multiplier();
    let c_theta0 = (2.0 - z) / (4.0 * z * (f + z));
    1.0 - q.a()
        * (1.0 / (4.0 * f * f) + 0.5 * c_theta0 - m * (f + 2.0) * z / (8.0 * f * f * (f + z)) + m * tau / (4.0 * f))
}

/// Late-time estimate of the disentanglement time; `5/2 − 1/ζ₀` for
/// [`PhaseDiffusion::SingleMode`].
pub fn disentanglement_bound(f: f64, zeta0: f64, diffusion: PhaseDiffusion) -> f64 {
    match diffusion {
        PhaseDiffusion::SingleMode => 2.5 - 1.0 / zeta0,
        PhaseDiffusion::PhaseSum => {
            let (z, m) = (zeta0, 2.0);
            let fz = f + z;
            (4.0 * f * z * fz - 2.0 * z * fz - f * f * (2.0 - z) + m * (f + 2.0) * z * z) / (2.0 * m * f * z * fz)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisentanglementTime {
    /// Late-time estimate.
    pub bound: f64,
    /// First threshold crossing of the exact squeezing degree.
    pub numeric: f64,
}

/// One row of the closed-form quench curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub tau: f64,
    pub rho_m: f64,
    pub c: f64,
    pub c12: f64,
    pub c_theta: f64,
    pub e: f64,
    pub xi: f64,
    pub threshold: f64,
}

/// Closed-form quench curves seeded with the analytic stationary moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticCurves {
    pub params: QuenchParams,
    pub initial: MadelungMoments,
    pub diffusion: PhaseDiffusion,
}

impl AnalyticCurves {
    pub fn new(params: QuenchParams, diffusion: PhaseDiffusion) -> Result<Self> {
        params.validate()?;
        Ok(AnalyticCurves {
            params,
            initial: initial_moments(&params)?,
            diffusion,
        })
    }

    pub fn rho_m(&self, tau: f64) -> f64 {
        rho_mean(&self.params, tau)
    }

    pub fn e(&self, tau: f64) -> f64 {
        e_interp(&self.params, tau)
    }

    pub fn cumulants(&self, tau: f64) -> (f64, f64, f64) {
        let m = &self.initial;
        cumulants(
            &self.params,
            m.c,
            m.c12,
            m.c_theta.unwrap_or(0.0),
            tau,
            self.diffusion,
        )
    }

    pub fn xi(&self, tau: f64) -> f64 {
        let (c, c12, ct) = self.cumulants(tau);
        let rho = self.rho_m(tau);
        1.0 - (c - c12) / (4.0 * rho * rho) - 0.5 * ct
    }

    pub fn threshold(&self, tau: f64) -> f64 {
        squeezing_threshold(self.rho_m(tau))
    }

    pub fn late_time_xi(&self, tau: f64) -> f64 {
        late_time_xi(&self.params, tau, self.diffusion)
    }

    pub fn point(&self, tau: f64) -> CurvePoint {
        let (c, c12, c_theta) = self.cumulants(tau);
        CurvePoint {
            tau,
            rho_m: self.rho_m(tau),
            c,
            c12,
            c_theta,
            e: self.e(tau),
            xi: self.xi(tau),
            threshold: self.threshold(tau),
        }
    }

    pub fn table(&self, taus: &[f64]) -> Vec<CurvePoint> {
        taus.iter().map(|&t| self.point(t)).collect()
    }

    /// Disentanglement time: late-time estimate and the first root of
    /// `ξ(τ) − (1 − 1/(2ρ_m(τ)))` on `[0, 25]`.
    pub fn disentanglement_time(&self) -> Result<DisentanglementTime> {
        let g = |tau: f64| self.xi(tau) - self.threshold(tau);
        if g(0.0) <= 0.0 {
            return Err(Error::NeverEntangled);
        }
        let numeric = first_root(g, 0.0, TAU_SEARCH_MAX, 25_000, 1e-12).ok_or(Error::NeverEntangled)?;
        Ok(DisentanglementTime {
            bound: disentanglement_bound(self.params.f, self.params.zeta0, self.diffusion),
            numeric,
        })
    }
}

/// Squeezing degree from the closed forms with the default diffusion rate.
pub fn xi_trajectory(q: &QuenchParams, tau: f64) -> Result<f64> {
    Ok(AnalyticCurves::new(*q, PhaseDiffusion::SingleMode)?.xi(tau))
}

pub fn disentanglement_time(q: &QuenchParams) -> Result<DisentanglementTime> {
    AnalyticCurves::new(*q, PhaseDiffusion::SingleMode)?.disentanglement_time()
}
