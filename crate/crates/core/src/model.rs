//! Physical parameters of the coupled two-condensate system.
//!
//! Every rate is measured in the same unit; the CLI fixes that unit by
//! setting the decay rate `Γ = 1`. The decay rate is density independent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::bisect;

/// Density-dependent gain `P[ρ]` supplied by the exciton reservoir.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum SaturationLaw {
    /// Adiabatically eliminated reservoir: `P[ρ] = P·R / (γ_R + R·ρ)`.
    Nonlinear {
        pump: f64,
        scatter_rate: f64,
        reservoir_decay: f64,
    },
    /// Linear saturation: `P[ρ] = P₀ − α·ρ`. May turn negative.
    Linear { base_gain: f64, gain_slope: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaturationKind {
    Nonlinear,
    Linear,
}

impl SaturationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SaturationKind::Nonlinear => "nonlinear",
            SaturationKind::Linear => "linear",
        }
    }
}

impl SaturationLaw {
    /// No incoherent pumping at all (`P[ρ] ≡ 0`).
    pub fn unpumped() -> Self {
        SaturationLaw::Nonlinear {
            pump: 0.0,
            scatter_rate: 1.0,
            reservoir_decay: 1.0,
        }
    }

    pub fn kind(&self) -> SaturationKind {
        match self {
            SaturationLaw::Nonlinear { .. } => SaturationKind::Nonlinear,
            SaturationLaw::Linear { .. } => SaturationKind::Linear,
        }
    }

    pub fn gain(&self, rho: f64) -> f64 {
        match *self {
            SaturationLaw::Nonlinear {
                pump,
                scatter_rate,
                reservoir_decay,
            } => pump * scatter_rate / (reservoir_decay + scatter_rate * rho),
            SaturationLaw::Linear {
                base_gain,
                gain_slope,
            } => base_gain - gain_slope * rho,
        }
    }

    /// `dP/dρ`.
    pub fn gain_derivative(&self, rho: f64) -> f64 {
        match *self {
            SaturationLaw::Nonlinear {
                pump,
                scatter_rate,
                reservoir_decay,
            } => {
                let d = reservoir_decay + scatter_rate * rho;
                -pump * scatter_rate * scatter_rate / (d * d)
            }
            SaturationLaw::Linear { gain_slope, .. } => -gain_slope,
        }
    }

    /// `∫₀^ρ P[s] ds`.
    pub fn integrated_gain(&self, rho: f64) -> f64 {
        match *self {
            SaturationLaw::Nonlinear {
                pump,
                scatter_rate,
                reservoir_decay,
            } => pump * (scatter_rate * rho / reservoir_decay).ln_1p(),
            SaturationLaw::Linear {
                base_gain,
                gain_slope,
            } => base_gain * rho - 0.5 * gain_slope * rho * rho,
        }
    }

    /// Pump strength at which the condensate vanishes (`ρ → 0`) without
    /// entangled pumping.
    pub fn threshold_pump(&self, gamma: f64) -> f64 {
        match *self {
            SaturationLaw::Nonlinear {
                scatter_rate,
                reservoir_decay,
                ..
            } => gamma * reservoir_decay / scatter_rate,
            SaturationLaw::Linear { .. } => gamma,
        }
    }

    /// The pump strength compared against [`Self::threshold_pump`].
    pub fn pump_strength(&self) -> f64 {
        match *self {
            SaturationLaw::Nonlinear { pump, .. } => pump,
            SaturationLaw::Linear { base_gain, .. } => base_gain,
        }
    }

    fn validate(&self) -> Result<()> {
        let check = |name, v: f64, strict: bool| {
            if !v.is_finite() || v < 0.0 || (strict && v == 0.0) {
                Err(Error::invalid(name, format!("must be {}, got {v}", if strict { "> 0" } else { ">= 0" })))
            } else {
                Ok(())
            }
        };
        match *self {
            SaturationLaw::Nonlinear {
                pump,
                scatter_rate,
                reservoir_decay,
            } => {
                check("pump", pump, false)?;
                check("scatter_rate", scatter_rate, true)?;
                check("reservoir_decay", reservoir_decay, true)
            }
            SaturationLaw::Linear {
                base_gain,
                gain_slope,
            } => {
                check("base_gain", base_gain, false)?;
                check("gain_slope", gain_slope, true)
            }
        }
    }
}

/// Gain `P[ρ]` of a saturation law.
pub fn gain(law: &SaturationLaw, rho: f64) -> f64 {
    law.gain(rho)
}

/// Time dependence of the entangled-pair pumping `χ(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DrivingProtocol {
    /// `χ(t) = χ₀` throughout.
    ConstantChi,
    /// `χ(t) = χ₀` before the quench at `t = 0`, zero afterwards.
    StepOff,
}

/// Mode and pump frequencies. They drop out of the rotating-frame quadratures
/// and are carried only for bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeFrequencies {
    pub omega1: f64,
    pub omega2: f64,
}

impl ModeFrequencies {
    pub fn pump_frequency(&self) -> f64 {
        self.omega1 + self.omega2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub saturation: SaturationLaw,
    /// Decay rate Γ.
    pub gamma: f64,
    /// Noise enhancement from reservoir backflow, η ≥ 1.
    pub eta: f64,
    /// Entangled-pair pumping strength χ₀.
    pub chi0: f64,
    pub protocol: DrivingProtocol,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<ModeFrequencies>,
}

/// First and second derivative of the potential `G[ρ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialDerivatives {
    /// `G′[ρ] = Γ − P[ρ]`.
    pub slope: f64,
    /// `G″[ρ] = −dP/dρ`; this is the derivative entering the flux elasticity
    /// and the density cumulants.
    pub curvature: f64,
}

impl ModelParams {
    pub fn new(
        saturation: SaturationLaw,
        gamma: f64,
        eta: f64,
        chi0: f64,
        protocol: DrivingProtocol,
    ) -> Result<Self> {
        let params = ModelParams {
            saturation,
            gamma,
            eta,
            chi0,
            protocol,
            frequencies: None,
        };
        params.validate()?;
        Ok(params)
    }

    /// Linear saturation law with `P₀` and `α` chosen so that the excess pump
    /// is `f` and the equilibrium density at `ζ₀` equals `rho_m`.
    pub fn linear_with_targets(
        f: f64,
        zeta0: f64,
        rho_m: f64,
        gamma: f64,
        eta: f64,
        protocol: DrivingProtocol,
    ) -> Result<Self> {
        if !(f > 0.0) {
            return Err(Error::invalid("f", format!("must be > 0, got {f}")));
        }
        if !(rho_m > 0.0) {
            return Err(Error::invalid("rho_m", format!("must be > 0, got {rho_m}")));
        }
        let saturation = SaturationLaw::Linear {
            base_gain: gamma * (1.0 + f),
            gain_slope: gamma * (f + zeta0) / rho_m,
        };
        Self::new(saturation, gamma, eta, 0.5 * zeta0 * gamma, protocol)
    }

    /// Nonlinear saturation law with excess pump `f` and the given reservoir
    /// rates.
    pub fn nonlinear_with_excess(
        f: f64,
        zeta0: f64,
        scatter_rate: f64,
        reservoir_decay: f64,
        gamma: f64,
        eta: f64,
        protocol: DrivingProtocol,
    ) -> Result<Self> {
        let saturation = SaturationLaw::Nonlinear {
            pump: (1.0 + f) * gamma * reservoir_decay / scatter_rate,
            scatter_rate,
            reservoir_decay,
        };
        Self::new(saturation, gamma, eta, 0.5 * zeta0 * gamma, protocol)
    }

    pub fn with_chi0(mut self, chi0: f64) -> Result<Self> {
        self.chi0 = chi0;
        self.validate()?;
        Ok(self)
    }

    pub fn with_frequencies(mut self, frequencies: ModeFrequencies) -> Self {
        self.frequencies = Some(frequencies);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid("gamma", format!("must be > 0, got {}", self.gamma)));
        }
        if !(self.eta >= 1.0 && self.eta.is_finite()) {
            return Err(Error::invalid("eta", format!("must be >= 1, got {}", self.eta)));
        }
        if !(self.chi0 >= 0.0 && self.chi0.is_finite()) {
            return Err(Error::invalid("chi0", format!("must be >= 0, got {}", self.chi0)));
        }
        self.saturation.validate()
    }

    pub fn gain(&self, rho: f64) -> f64 {
        self.saturation.gain(rho)
    }

    /// `ζ₀ = 2χ₀/Γ`.
    pub fn zeta0(&self) -> f64 {
        2.0 * self.chi0 / self.gamma
    }

    /// Normalized excess pump `f = P/P_th − 1`.
    pub fn excess_pump(&self) -> f64 {
        self.saturation.pump_strength() / self.saturation.threshold_pump(self.gamma) - 1.0
    }

    /// Potential `G[ρ] = Γρ − ∫₀^ρ P`, normalized to `G[0] = 0`.
    pub fn potential(&self, rho: f64) -> f64 {
        self.gamma * rho - self.saturation.integrated_gain(rho)
    }

    pub fn potential_derivatives(&self, rho: f64) -> PotentialDerivatives {
        PotentialDerivatives {
            slope: self.gamma - self.gain(rho),
            curvature: -self.saturation.gain_derivative(rho),
        }
    }

    /// Density `ρ_m` solving `P[ρ_m] + 2χ₀ = Γ`.
    pub fn equilibrium_density(&self) -> Result<f64> {
        let target = self.gamma - 2.0 * self.chi0;
        match self.saturation {
            SaturationLaw::Linear {
                base_gain,
                gain_slope,
            } => {
                let rho = (base_gain - self.gamma + 2.0 * self.chi0) / gain_slope;
                if rho > 0.0 {
                    Ok(rho)
                } else {
                    Err(Error::NoEquilibrium(format!(
                        "linear gain P0 = {base_gain} does not exceed Γ − 2χ₀ = {target}"
                    )))
                }
            }
            SaturationLaw::Nonlinear { .. } => {
                if target <= 0.0 {
                    return Err(Error::NoEquilibrium(format!(
                        "ζ₀ = {} ≥ 1: the positive gain cannot balance Γ − 2χ₀ ≤ 0",
                        self.zeta0()
                    )));
                }
                let residual = |rho: f64| self.gain(rho) - target;
                if residual(0.0) <= 0.0 {
                    return Err(Error::NoEquilibrium(format!(
                        "gain at zero density {} does not exceed Γ − 2χ₀ = {target}",
                        self.gain(0.0)
                    )));
                }
                let mut hi = 1.0;
                while residual(hi) > 0.0 {
                    hi *= 2.0;
                    if !hi.is_finite() {
                        return Err(Error::NoEquilibrium("root bracket diverged".into()));
                    }
                }
                let rho = bisect(residual, 0.0, hi, 0.0)
                    .ok_or_else(|| Error::NoEquilibrium("bisection failed".into()))?;
                Ok(rho)
            }
        }
    }

    /// Flux elasticity `κ = G″[ρ_m]·ρ_m/Γ` from first principles.
    pub fn flux_elasticity(&self) -> Result<f64> {
        let rho = self.equilibrium_density()?;
        Ok(self.potential_derivatives(rho).curvature * rho / self.gamma)
    }
}

/// `G′[ρ]` and `G″[ρ]` for the model's saturation law.
pub fn gain_potential_derivative(params: &ModelParams, rho: f64) -> PotentialDerivatives {
    params.potential_derivatives(rho)
}

/// Equilibrium density, see [`ModelParams::equilibrium_density`].
pub fn equilibrium_density(params: &ModelParams) -> Result<f64> {
    params.equilibrium_density()
}

/// Thermodynamic data of the exciton reservoir, in energy units (`k = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReservoirThermo {
    /// Rabi splitting Ω.
    pub rabi: f64,
    /// Exciton–photon detuning Δ₀.
    pub detuning: f64,
    /// Reservoir chemical potential μ_R.
    pub mu_r: f64,
    /// Reservoir temperature T_R.
    pub temperature: f64,
}

impl ReservoirThermo {
    /// Offset `E = Δ₀/2 − √((Δ₀/2)² + Ω²)` between the lower polariton and the
    /// exciton line.
    pub fn lower_polariton_offset(&self) -> f64 {
        let half = 0.5 * self.detuning;
        half - half.hypot(self.rabi)
    }
}

/// Noise factor `η = coth(|E − μ_R| / 2T_R)`.
pub fn eta_from_thermo(t: &ReservoirThermo) -> Result<f64> {
    if !(t.rabi > 0.0) {
        return Err(Error::invalid("rabi", format!("must be > 0, got {}", t.rabi)));
    }
    if !(t.temperature > 0.0) {
        return Err(Error::invalid(
            "temperature",
            format!("must be > 0, got {}", t.temperature),
        ));
    }
    let gap = (t.lower_polariton_offset() - t.mu_r).abs();
    if gap == 0.0 {
        return Err(Error::DivergentNoiseFactor);
    }
    Ok(1.0 / (gap / (2.0 * t.temperature)).tanh())
}
