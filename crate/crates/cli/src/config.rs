//! Scenario configuration: TOML parsing, defaults and validation.
//!
//! ```toml
//! scenario = "quench"          # vacuum-check | steady-state | phase-diagram | quench
//! output_dir = "out"
//! format = "csv"               # csv | json
//!
//! [model]
//! gamma = 1.0
//! eta = 1.0
//! zeta0 = 0.8                  # or chi0
//!
//! [model.saturation]
//! law = "linear"               # linear: f + rho_m, or base_gain + gain_slope
//! f = 50.0                     # nonlinear: scatter_rate + reservoir_decay with f or pump
//! rho_m = 200.0
//!
//! [integrator]
//! dt = 2e-4
//! n_traj = 10000
//! seed = 42
//! burn_in = 3.0
//! noise_density = "self-consistent-mean"
//! bootstrap = 200
//!
//! [observe]
//! t_max = 2.5                  # or times = [...]
//! n_points = 51
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use condensate_twa::analytic::QuenchParams;
use condensate_twa::entanglement::PhaseDiagramRequest;
use condensate_twa::model::{DrivingProtocol, ModelParams, SaturationKind, SaturationLaw};
use condensate_twa::sde::{IntegratorConfig, NoiseDensityMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    VacuumCheck,
    SteadyState,
    PhaseDiagram,
    Quench,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::VacuumCheck => "vacuum-check",
            Scenario::SteadyState => "steady-state",
            Scenario::PhaseDiagram => "phase-diagram",
            Scenario::Quench => "quench",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Validation failure with the offending key path.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

fn err(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Scenario,
    output_dir: Option<PathBuf>,
    format: Option<OutputFormat>,
    snapshots: Option<bool>,
    model: Option<RawModel>,
    integrator: Option<RawIntegrator>,
    observe: Option<RawObserve>,
    phase_diagram: Option<RawPhaseDiagram>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    gamma: Option<f64>,
    eta: Option<f64>,
    zeta0: Option<f64>,
    chi0: Option<f64>,
    saturation: Option<RawSaturation>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSaturation {
    law: SaturationKind,
    f: Option<f64>,
    rho_m: Option<f64>,
    base_gain: Option<f64>,
    gain_slope: Option<f64>,
    pump: Option<f64>,
    scatter_rate: Option<f64>,
    reservoir_decay: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegrator {
    dt: Option<f64>,
    n_traj: Option<usize>,
    seed: Option<u64>,
    burn_in: Option<f64>,
    noise_density: Option<NoiseDensityMode>,
    bootstrap: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObserve {
    times: Option<Vec<f64>>,
    t_max: Option<f64>,
    n_points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhaseDiagram {
    law: Option<SaturationKind>,
    f_values: Vec<f64>,
    eta_values: Option<Vec<f64>>,
    zeta: Option<Vec<f64>>,
    zeta_points: Option<usize>,
    kappa_max: Option<f64>,
    kappa_points: Option<usize>,
    rho_m: Option<f64>,
}

/// Fully resolved configuration; every default is materialized.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub output_dir: PathBuf,
    pub format: OutputFormat,
    pub snapshots: bool,
    pub model: ModelParams,
    pub integrator: IntegratorConfig,
    pub bootstrap: usize,
    pub observe_times: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_diagram: Option<PhaseDiagramRequest>,
}

pub const DEFAULT_BOOTSTRAP: usize = 200;

pub fn validate_config(raw: &str) -> Result<ScenarioConfig, ConfigError> {
    let de = toml::Deserializer::parse(raw).map_err(|e| err("<document>", e.to_string()))?;
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { "<document>".to_string() } else { path };
        err(&path, e.into_inner().message().to_string())
    })?;
    resolve(raw)
}

fn resolve(raw: RawConfig) -> Result<ScenarioConfig, ConfigError> {
    let scenario = raw.scenario;
    let model_raw = raw.model.unwrap_or_default();
    let gamma = model_raw.gamma.unwrap_or(1.0);
    let eta = model_raw.eta.unwrap_or(1.0);
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(err("model.gamma", format!("must be > 0, got {gamma}")));
    }
    if !(eta >= 1.0 && eta.is_finite()) {
        return Err(err("model.eta", format!("must be >= 1, got {eta}")));
    }
    let zeta0 = match (model_raw.zeta0, model_raw.chi0) {
        (Some(_), Some(_)) => return Err(err("model", "give either zeta0 or chi0, not both")),
        (Some(z), None) => z,
        (None, Some(chi)) => 2.0 * chi / gamma,
        (None, None) => 0.0,
    };
    let zeta_path = if model_raw.chi0.is_some() { "model.chi0" } else { "model.zeta0" };
    if !(0.0..=1.0).contains(&zeta0) {
        return Err(err(zeta_path, format!("ζ₀ = {zeta0} outside the stable region [0, 1]")));
    }

    let protocol = match scenario {
        Scenario::Quench => DrivingProtocol::StepOff,
        _ => DrivingProtocol::ConstantChi,
    };
    let needs_model = matches!(scenario, Scenario::SteadyState | Scenario::Quench);
    let model = match (scenario, model_raw.saturation) {
        (Scenario::VacuumCheck, _) => ModelParams::new(SaturationLaw::unpumped(), gamma, eta, 0.0, protocol),
        (_, Some(s)) => Ok(build_model(&s, gamma, eta, zeta0, protocol)?),
        (_, None) if needs_model => {
            return Err(err(
                "model.saturation",
                format!("required for scenario {}", scenario.as_str()),
            ))
        }
        (_, None) => ModelParams::new(SaturationLaw::unpumped(), gamma, eta, 0.5 * zeta0 * gamma, protocol),
    }
    .map_err(|e| err("model", e.to_string()))?;

    if scenario == Scenario::Quench {
        if zeta0 <= 0.0 {
            return Err(err(zeta_path, "quench needs ζ₀ > 0"));
        }
        QuenchParams::from_model(&model).map_err(|e| err("model", e.to_string()))?;
    }

    let ir = raw.integrator.unwrap_or_default();
    let default_burn_in = match scenario {
        Scenario::VacuumCheck => 0.0,
        _ => IntegratorConfig::default().burn_in,
    };
    let mut integrator = IntegratorConfig {
        dt: ir.dt.unwrap_or(1e-3),
        n_steps: 0,
        n_traj: ir.n_traj.unwrap_or(10_000),
        seed: ir.seed.unwrap_or(42),
        burn_in: ir.burn_in.unwrap_or(default_burn_in),
        noise_density_mode: ir.noise_density.unwrap_or_default(),
    };
    if scenario != Scenario::PhaseDiagram {
        if integrator.n_traj < condensate_twa::stats::MIN_SAMPLES {
            return Err(err(
                "integrator.n_traj",
                format!("must be >= {}, got {}", condensate_twa::stats::MIN_SAMPLES, integrator.n_traj),
            ));
        }
        integrator.validate(&model).map_err(|e| match e {
            condensate_twa::Error::InvalidParameter { name, reason } => err(&format!("integrator.{name}"), reason),
            other => err("integrator", other.to_string()),
        })?;
    }
    let bootstrap = ir.bootstrap.unwrap_or(DEFAULT_BOOTSTRAP);
    if bootstrap < 2 {
        return Err(err("integrator.bootstrap", "need at least 2 resamples"));
    }

    let observe_times = resolve_times(scenario, raw.observe.unwrap_or_default())?;
    if let Some(&t) = observe_times.last() {
        integrator.n_steps = integrator.steps_for(t);
    }

    let phase_diagram = match (scenario, raw.phase_diagram) {
        (Scenario::PhaseDiagram, Some(pd)) => Some(resolve_phase_diagram(pd)?),
        (Scenario::PhaseDiagram, None) => return Err(err("phase_diagram", "required for scenario phase-diagram")),
        (_, Some(_)) => return Err(err("phase_diagram", "only valid for scenario phase-diagram")),
        (_, None) => None,
    };

    Ok(ScenarioConfig {
        scenario,
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
        format: raw.format.unwrap_or_default(),
        snapshots: raw.snapshots.unwrap_or(false),
        model,
        integrator,
        bootstrap,
        observe_times,
        phase_diagram,
    })
}

fn positive(path: &str, v: Option<f64>) -> Result<f64, ConfigError> {
    match v {
        Some(x) if x > 0.0 && x.is_finite() => Ok(x),
        Some(x) => Err(err(path, format!("must be > 0, got {x}"))),
        None => Err(err(path, "missing")),
    }
}

fn build_model(
    s: &RawSaturation,
    gamma: f64,
    eta: f64,
    zeta0: f64,
    protocol: DrivingProtocol,
) -> Result<ModelParams, ConfigError> {
    let p = "model.saturation";
    let built = match s.law {
        SaturationKind::Linear => {
            if s.pump.is_some() || s.scatter_rate.is_some() || s.reservoir_decay.is_some() {
                return Err(err(p, "pump, scatter_rate and reservoir_decay belong to the nonlinear law"));
            }
            match (s.f, s.rho_m, s.base_gain, s.gain_slope) {
                (Some(_), Some(_), None, None) => ModelParams::linear_with_targets(
                    positive(&format!("{p}.f"), s.f)?,
                    zeta0,
                    positive(&format!("{p}.rho_m"), s.rho_m)?,
                    gamma,
                    eta,
                    protocol,
                ),
                (None, None, Some(_), Some(_)) => {
                    let law = SaturationLaw::Linear {
                        base_gain: positive(&format!("{p}.base_gain"), s.base_gain)?,
                        gain_slope: positive(&format!("{p}.gain_slope"), s.gain_slope)?,
                    };
                    ModelParams::new(law, gamma, eta, 0.5 * zeta0 * gamma, protocol)
                }
                _ => return Err(err(p, "linear law needs either (f, rho_m) or (base_gain, gain_slope)")),
            }
        }
        SaturationKind::Nonlinear => {
            if s.rho_m.is_some() || s.base_gain.is_some() || s.gain_slope.is_some() {
                return Err(err(p, "rho_m, base_gain and gain_slope belong to the linear law"));
            }
            let r = positive(&format!("{p}.scatter_rate"), s.scatter_rate)?;
            let g = positive(&format!("{p}.reservoir_decay"), s.reservoir_decay)?;
            match (s.f, s.pump) {
                (Some(f), None) => ModelParams::nonlinear_with_excess(
                    positive(&format!("{p}.f"), Some(f))?,
                    zeta0,
                    r,
                    g,
                    gamma,
                    eta,
                    protocol,
                ),
                (None, Some(pump)) => {
                    let law = SaturationLaw::Nonlinear {
                        pump: positive(&format!("{p}.pump"), Some(pump))?,
                        scatter_rate: r,
                        reservoir_decay: g,
                    };
                    ModelParams::new(law, gamma, eta, 0.5 * zeta0 * gamma, protocol)
                }
                _ => return Err(err(p, "nonlinear law needs exactly one of f or pump")),
            }
        }
    };
    built.map_err(|e| err("model", e.to_string()))
}

fn resolve_times(scenario: Scenario, o: RawObserve) -> Result<Vec<f64>, ConfigError> {
    let (default_max, default_points) = match scenario {
        Scenario::VacuumCheck => (20.0, 21),
        Scenario::SteadyState | Scenario::PhaseDiagram => (0.0, 1),
        Scenario::Quench => (3.0, 61),
    };
    let times = match (o.times, o.t_max, o.n_points) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            return Err(err("observe", "give either times or t_max/n_points"))
        }
        (Some(t), None, None) => t,
        (None, t_max, n) => {
            let t_max = t_max.unwrap_or(default_max);
            let n = n.unwrap_or(if t_max > 0.0 { default_points.max(2) } else { 1 });
            if n == 0 {
                return Err(err("observe.n_points", "must be >= 1"));
            }
            if n == 1 {
                vec![t_max]
            } else {
                (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect()
            }
        }
    };
    if times.is_empty() {
        return Err(err("observe.times", "must not be empty"));
    }
    if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(err("observe.times", format!("times must be finite and >= 0, got {t}")));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(err("observe.times", "times must be non-decreasing"));
    }
    Ok(times)
}

fn resolve_phase_diagram(pd: RawPhaseDiagram) -> Result<PhaseDiagramRequest, ConfigError> {
    let p = "phase_diagram";
    if pd.f_values.is_empty() {
        return Err(err(&format!("{p}.f_values"), "must not be empty"));
    }
    if let Some(f) = pd.f_values.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
        return Err(err(&format!("{p}.f_values"), format!("must be > 0, got {f}")));
    }
    let eta_values = pd.eta_values.unwrap_or_else(|| vec![1.0]);
    if eta_values.is_empty() {
        return Err(err(&format!("{p}.eta_values"), "must not be empty"));
    }
    if let Some(e) = eta_values.iter().find(|e| !(**e >= 1.0 && e.is_finite())) {
        return Err(err(&format!("{p}.eta_values"), format!("must be >= 1, got {e}")));
    }
    let zeta_grid = match (pd.zeta, pd.zeta_points) {
        (Some(_), Some(_)) => return Err(err(p, "give either zeta or zeta_points")),
        (Some(z), None) => z,
        (None, n) => {
            let n = n.unwrap_or(101);
            if n < 2 {
                return Err(err(&format!("{p}.zeta_points"), "must be >= 2"));
            }
            (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
        }
    };
    if zeta_grid.is_empty() {
        return Err(err(&format!("{p}.zeta"), "must not be empty"));
    }
    if let Some(z) = zeta_grid.iter().find(|z| !(0.0..=1.0).contains(*z)) {
        return Err(err(&format!("{p}.zeta"), format!("ζ = {z} outside the stable region [0, 1]")));
    }
    let kappa_max = pd.kappa_max.unwrap_or(10.0);
    let kappa_points = pd.kappa_points.unwrap_or(101);
    if !(kappa_max >= 0.0 && kappa_max.is_finite()) || kappa_points < 2 {
        return Err(err(p, "kappa_max must be >= 0 and kappa_points >= 2"));
    }
    let rho_m = pd.rho_m.unwrap_or(200.0);
    if !(rho_m > 0.0 && rho_m.is_finite()) {
        return Err(err(&format!("{p}.rho_m"), format!("must be > 0, got {rho_m}")));
    }
    Ok(PhaseDiagramRequest {
        law: pd.law.unwrap_or(SaturationKind::Linear),
        f_values: pd.f_values,
        eta_values,
        zeta_grid,
        kappa_grid: (0..kappa_points)
            .map(|i| kappa_max * i as f64 / (kappa_points - 1) as f64)
            .collect(),
        rho_m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL_QUENCH: &str = r#"
scenario = "quench"
[model]
zeta0 = 0.6
[model.saturation]
law = "linear"
f = 2.0
rho_m = 200.0
"#;

    #[test]
    fn minimal_quench_gets_defaults() {
        let c = validate_config(MINIMAL_QUENCH).unwrap();
        assert_eq!(c.scenario, Scenario::Quench);
        assert_eq!(c.model.gamma, 1.0);
        assert_eq!(c.model.eta, 1.0);
        assert_eq!(c.model.protocol, DrivingProtocol::StepOff);
        assert_eq!(c.integrator.dt, 1e-3);
        assert_eq!(c.integrator.n_traj, 10_000);
        assert_eq!(c.integrator.seed, 42);
        assert_eq!(c.format, OutputFormat::Csv);
        assert_eq!(c.observe_times.len(), 61);
        assert_eq!(c, validate_config(MINIMAL_QUENCH).unwrap());
    }

    #[test]
    fn missing_scenario_is_named() {
        let e = validate_config("[model]\ngamma = 1.0\n").unwrap_err();
        assert!(e.to_string().contains("scenario"), "{e}");
        let e = validate_config("scenario = \"\"\n").unwrap_err();
        assert_eq!(e.path, "scenario");
    }

    #[test]
    fn zeta_outside_stable_region_is_rejected() {
        let e = validate_config(&MINIMAL_QUENCH.replace("zeta0 = 0.6", "zeta0 = 1.2")).unwrap_err();
        assert_eq!(e.path, "model.zeta0");
        assert!(e.message.contains("[0, 1]"));
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let e = validate_config(&MINIMAL_QUENCH.replace("f = 2.0", "f = 2.0\nfoo = 1")).unwrap_err();
        assert_eq!(e.path, "model.saturation.foo");
        let e = validate_config(&format!("{MINIMAL_QUENCH}\n[integrator]\nsteps = 3\n")).unwrap_err();
        assert!(e.message.contains("steps"));
    }

    #[test]
    fn quench_requires_linear_law_and_unit_eta() {
        let e = validate_config(&MINIMAL_QUENCH.replace("zeta0 = 0.6", "zeta0 = 0.6\neta = 2.0")).unwrap_err();
        assert_eq!(e.path, "model");
        let nonlinear = MINIMAL_QUENCH.replace(
            "law = \"linear\"\nf = 2.0\nrho_m = 200.0",
            "law = \"nonlinear\"\nf = 2.0\nscatter_rate = 1.0\nreservoir_decay = 1.0",
        );
        assert!(validate_config(&nonlinear).is_err());
    }

    #[test]
    fn stability_guard_is_reported_under_integrator() {
        let e = validate_config(&format!("{MINIMAL_QUENCH}\n[integrator]\ndt = 0.1\n")).unwrap_err();
        assert_eq!(e.path, "integrator.dt");
    }

    #[test]
    fn phase_diagram_section() {
        let c = validate_config("scenario = \"phase-diagram\"\n[phase_diagram]\nf_values = [1.0]\n").unwrap();
        let pd = c.phase_diagram.unwrap();
        assert_eq!(pd.eta_values, vec![1.0]);
        assert_eq!(pd.zeta_grid.len(), 101);
        assert!(validate_config("scenario = \"phase-diagram\"\n").is_err());
        assert!(validate_config("scenario = \"phase-diagram\"\n[phase_diagram]\nf_values = [1.0]\nzeta = [1.5]\n").is_err());
    }

    #[test]
    fn chi0_and_zeta0_are_exclusive() {
        let e = validate_config(&MINIMAL_QUENCH.replace("zeta0 = 0.6", "zeta0 = 0.6\nchi0 = 0.3")).unwrap_err();
        assert_eq!(e.path, "model");
        let c = validate_config(&MINIMAL_QUENCH.replace("zeta0 = 0.6", "chi0 = 0.3")).unwrap();
        assert!((c.model.zeta0() - 0.6).abs() < 1e-15);
    }
}
