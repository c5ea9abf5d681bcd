//! Scenario execution and artifact writing.
//!
//! Every run writes `manifest.json` first; all other artifacts carry its
//! SHA-256, as a leading `# manifest_sha256=...` line in CSV files or as a
//! `manifest_sha256` field in JSON files.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use condensate_twa::analytic::{AnalyticCurves, CurvePoint, PhaseDiffusion, QuenchParams};
use condensate_twa::entanglement::{
    analytic_steady_moments, phase_diagram, ppt_functional, simulated_verdict, squeezing_threshold,
    weak_noise_squeezing, PhaseDiagram, SimulatedVerdict,
};
use condensate_twa::io::{write_snapshot, CovarianceRecord, SnapshotHeader};
use condensate_twa::sde::{run_protocol, run_protocol_from, EnsembleState, InitialCondition};
use condensate_twa::stats::{covariance, madelung_moments_with_errors, CovarianceMatrix4, MadelungMoments, MomentErrors};
use condensate_twa::Error;

use crate::config::{ConfigError, OutputFormat, Scenario, ScenarioConfig};

pub const UNITS: &str = "rates in units of Γ (Γ = 1 unless model.gamma is set); times are τ = Γt";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Model(Error::InvalidParameter { .. }) => 2,
            RunError::Model(Error::Io(_) | Error::Json(_)) | RunError::Io { .. } => 1,
            RunError::Model(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "validation",
            RunError::Model(e) => match e {
                Error::InvalidParameter { .. } => "validation",
                Error::NoEquilibrium(_) => "no_equilibrium",
                Error::NonFinite { .. } => "non_finite",
                Error::DegeneratePhase { .. } => "degenerate_phase",
                Error::TooFewSamples { .. } => "too_few_samples",
                Error::Unstable(_) => "unstable",
                Error::Io(_) | Error::Json(_) => "io",
                _ => "numeric",
            },
            RunError::Io { .. } => "io",
        }
    }

    /// Machine-readable error report.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let RunError::Config(c) = self {
            v["path"] = serde_json::Value::String(c.path.clone());
            v["message"] = serde_json::Value::String(c.message.clone());
        }
        v
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;

/// Files written by a run, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub manifest_sha256: String,
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    program: &'static str,
    version: &'static str,
    core_version: &'static str,
    units: &'static str,
    seed: u64,
    config: &'a ScenarioConfig,
}

struct Artifacts {
    dir: PathBuf,
    hash: String,
    files: Vec<PathBuf>,
}

impl Artifacts {
    fn create(cfg: &ScenarioConfig) -> RunResult<Self> {
        let dir = cfg.output_dir.clone();
        fs::create_dir_all(&dir).map_err(|source| RunError::Io {
            path: dir.clone(),
            source,
        })?;
        let manifest = Manifest {
            program: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            core_version: condensate_twa::VERSION,
            units: UNITS,
            seed: cfg.integrator.seed,
            config: cfg,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(Error::from)?;
        bytes.push(b'\n');
        let hash = hex::encode(Sha256::digest(&bytes));
        let mut a = Artifacts {
            dir,
            hash,
            files: Vec::new(),
        };
        a.write_bytes(Path::new("manifest.json"), &bytes)?;
        Ok(a)
    }

    fn write_bytes(&mut self, rel: &Path, bytes: &[u8]) -> RunResult<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| RunError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        fs::write(&path, bytes).map_err(|source| RunError::Io { path, source })?;
        self.files.push(rel.to_path_buf());
        Ok(())
    }

    fn csv(&mut self, name: &str, table: &Table) -> RunResult<()> {
        let mut out = format!("# manifest_sha256={}\n", self.hash);
        out.push_str(&table.header.join(","));
        out.push('\n');
        for row in &table.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        self.write_bytes(Path::new(name), out.as_bytes())
    }

    fn json<T: Serialize>(&mut self, name: &str, scenario: Scenario, body: &T) -> RunResult<()> {
        let mut v = serde_json::to_value(body).map_err(Error::from)?;
        let obj = v.as_object_mut().expect("JSON bodies are structs");
        obj.insert("manifest_sha256".into(), self.hash.clone().into());
        obj.insert("scenario".into(), scenario.as_str().into());
        let mut bytes = serde_json::to_vec_pretty(&v).map_err(Error::from)?;
        bytes.push(b'\n');
        self.write_bytes(Path::new(name), &bytes)
    }

    fn snapshots(&mut self, cfg: &ScenarioConfig, snaps: &[EnsembleState]) -> RunResult<()> {
        if !cfg.snapshots {
            return Ok(());
        }
        for (i, s) in snaps.iter().enumerate() {
            let header = SnapshotHeader {
                t: s.t,
                seed: cfg.integrator.seed,
                params_hash: self.hash.clone(),
            };
            let mut buf = Vec::new();
            write_snapshot(&mut buf, &header, s)?;
            self.write_bytes(&Path::new("snapshots").join(format!("snapshot_{i:04}.csv")), &buf)?;
        }
        Ok(())
    }

    fn finish(self) -> RunSummary {
        RunSummary {
            output_dir: self.dir,
            manifest_sha256: self.hash,
            files: self.files,
        }
    }
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

fn cell<T: Display>(v: T) -> String {
    v.to_string()
}

fn opt<T: Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn verdict(entangled: bool) -> &'static str {
    if entangled {
        "entangled"
    } else {
        "separable"
    }
}

fn bootstrap_seed(cfg: &ScenarioConfig, i: usize) -> u64 {
    cfg.integrator.seed ^ 0xB007_5742_0000_0000 ^ i as u64
}

pub fn run_scenario(cfg: &ScenarioConfig) -> RunResult<RunSummary> {
    match cfg.scenario {
        Scenario::VacuumCheck => vacuum_check(cfg),
        Scenario::SteadyState => steady_state(cfg),
        Scenario::PhaseDiagram => phase(cfg),
        Scenario::Quench => quench(cfg),
    }
}

#[derive(Serialize)]
struct VacuumRow {
    tau: f64,
    variances: [f64; 4],
    mean_density: f64,
}

fn vacuum_check(cfg: &ScenarioConfig) -> RunResult<RunSummary> {
    let run = run_protocol_from(&cfg.model, &cfg.integrator, &cfg.observe_times, InitialCondition::Vacuum)?;
    let rows: Vec<VacuumRow> = run
        .snapshots
        .iter()
        .map(|s| {
            let n = s.n_traj() as f64;
            let mut variances = [0.0; 4];
            for (k, v) in variances.iter_mut().enumerate() {
                let mean = s.states.iter().map(|q| q[k]).sum::<f64>() / n;
                *v = s.states.iter().map(|q| (q[k] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            }
            let (a, b) = s.mean_densities();
            VacuumRow {
                tau: s.t,
                variances,
                mean_density: 0.5 * (a + b),
            }
        })
        .collect();
    let mut art = Artifacts::create(cfg)?;
    match cfg.format {
        OutputFormat::Csv => {
            let mut t = Table::new(&["tau", "var_x1", "var_p1", "var_x2", "var_p2", "mean_density"]);
            for r in &rows {
                let mut row = vec![cell(r.tau)];
                row.extend(r.variances.iter().map(cell));
                row.push(cell(r.mean_density));
                t.push(row);
            }
            art.csv("vacuum_check.csv", &t)?;
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                zero_point_variance: f64,
                rows: &'a [VacuumRow],
            }
            art.json(
                "vacuum_check.json",
                cfg.scenario,
                &Body {
                    zero_point_variance: 0.25,
                    rows: &rows,
                },
            )?;
        }
    }
    art.snapshots(cfg, &run.snapshots)?;
    Ok(art.finish())
}

#[derive(Serialize)]
struct SteadyAnalytic {
    moments: Option<MadelungMoments>,
    xi: f64,
    threshold: f64,
    f_pt: f64,
    verdict: &'static str,
}

#[derive(Serialize)]
struct SteadyRecord {
    tau: f64,
    moments: MadelungMoments,
    errors: MomentErrors,
    covariance: CovarianceRecord,
    threshold: f64,
    ppt: SimulatedVerdict,
    verdict: &'static str,
    analytic: SteadyAnalytic,
}

fn steady_state(cfg: &ScenarioConfig) -> RunResult<RunSummary> {
    let p = &cfg.model;
    let rho = p.equilibrium_density()?;
    let kappa = p.flux_elasticity()?;
    let analytic_moments = analytic_steady_moments(p).ok();
    let xi_a = weak_noise_squeezing(p.eta, kappa, p.zeta0(), rho);
    let th_a = squeezing_threshold(rho);
    let analytic = || SteadyAnalytic {
        moments: analytic_moments,
        xi: xi_a,
        threshold: th_a,
        f_pt: ppt_functional(&CovarianceMatrix4::structured(rho, xi_a)),
        verdict: verdict(xi_a > th_a),
    };

    let run = run_protocol(p, &cfg.integrator, &cfg.observe_times)?;
    let mut records = Vec::with_capacity(run.snapshots.len());
    for (i, s) in run.snapshots.iter().enumerate() {
        let (moments, errors) = madelung_moments_with_errors(s)?;
        let cov = covariance(s)?;
        let ppt = simulated_verdict(&s.states, cfg.bootstrap, bootstrap_seed(cfg, i))?;
        records.push(SteadyRecord {
            tau: s.t,
            moments,
            errors,
            covariance: CovarianceRecord::from(&cov),
            threshold: squeezing_threshold(moments.rho_m),
            ppt,
            verdict: verdict(ppt.entangled),
            analytic: analytic(),
        });
    }

    let mut art = Artifacts::create(cfg)?;
    match cfg.format {
        OutputFormat::Csv => {
            let mut header: Vec<String> = [
                "tau",
                "rho_m",
                "rho_m_se",
                "rho_m_analytic",
                "C",
                "C_se",
                "C_analytic",
                "C12",
                "C12_se",
                "C12_analytic",
                "C_theta",
                "C_theta_se",
                "C_theta_analytic",
                "xi",
                "xi_analytic",
                "K",
                "threshold",
                "threshold_analytic",
                "F_PT",
                "F_PT_se",
                "F_PT_analytic",
                "verdict",
                "verdict_analytic",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            for i in 0..4 {
                for j in 0..4 {
                    header.push(format!("sigma_{i}{j}"));
                }
            }
            let mut t = Table { header, rows: Vec::new() };
            for r in &records {
                let am = r.analytic.moments;
                let mut row = vec![
                    cell(r.tau),
                    cell(r.moments.rho_m),
                    cell(r.errors.rho_m),
                    opt(am.map(|m| m.rho_m)),
                    cell(r.moments.c),
                    cell(r.errors.c),
                    opt(am.map(|m| m.c)),
                    cell(r.moments.c12),
                    cell(r.errors.c12),
                    opt(am.map(|m| m.c12)),
                    opt(r.moments.c_theta),
                    cell(r.errors.c_theta),
                    opt(am.and_then(|m| m.c_theta)),
                    cell(r.covariance.xi),
                    cell(r.analytic.xi),
                    cell(r.covariance.k),
                    cell(r.threshold),
                    cell(r.analytic.threshold),
                    cell(r.ppt.f_pt),
                    cell(r.ppt.se),
                    cell(r.analytic.f_pt),
                    cell(r.verdict),
                    cell(r.analytic.verdict),
                ];
                row.extend(r.covariance.sigma.iter().flatten().map(cell));
                t.push(row);
            }
            art.csv("steady_state.csv", &t)?;
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                kappa: f64,
                records: &'a [SteadyRecord],
            }
            art.json(
                "steady_state.json",
                cfg.scenario,
                &Body {
                    kappa,
                    records: &records,
                },
            )?;
        }
    }
    art.snapshots(cfg, &run.snapshots)?;
    Ok(art.finish())
}

fn phase(cfg: &ScenarioConfig) -> RunResult<RunSummary> {
    let req = cfg.phase_diagram.as_ref().expect("validated phase-diagram config");
    let diagram: PhaseDiagram = phase_diagram(req)?;
    let mut art = Artifacts::create(cfg)?;
    match cfg.format {
        OutputFormat::Csv => {
            let mut t = Table::new(&["model", "f", "eta", "zeta", "kappa", "F_PT", "entangled"]);
            for p in &diagram.points {
                t.push(vec![
                    cell(p.model.as_str()),
                    cell(p.f),
                    cell(p.eta),
                    cell(p.zeta),
                    cell(p.kappa),
                    cell(p.f_pt),
                    cell(p.entangled),
                ]);
            }
            art.csv("phase_diagram.csv", &t)?;
            for (i, b) in diagram.boundaries.iter().enumerate() {
                let mut t = Table::new(&["eta", "kappa", "zeta_crit"]);
                for (k, z) in b.kappa.iter().zip(&b.zeta_crit) {
                    t.push(vec![cell(b.eta), cell(k), cell(z)]);
                }
                art.csv(&format!("boundary_{i:02}_eta_{}.csv", b.eta), &t)?;
            }
            let mut t = Table::new(&["model", "f", "eta", "zeta_crit", "kappa"]);
            for c in &diagram.crossings {
                t.push(vec![
                    cell(c.model.as_str()),
                    cell(c.f),
                    cell(c.eta),
                    opt(c.zeta_crit),
                    opt(c.kappa),
                ]);
            }
            art.csv("crossings.csv", &t)?;
        }
        OutputFormat::Json => art.json("phase_diagram.json", cfg.scenario, &diagram)?,
    }
    Ok(art.finish())
}

#[derive(Serialize)]
struct QuenchRow {
    tau: f64,
    rho_m: f64,
    xi: f64,
    threshold: f64,
    f_pt: f64,
    f_pt_se: f64,
    verdict: &'static str,
    rho_m_analytic: f64,
    xi_analytic: f64,
    threshold_analytic: f64,
    verdict_analytic: &'static str,
}

#[derive(Serialize)]
struct QuenchSummary {
    f: f64,
    zeta0: f64,
    alpha: f64,
    tau_d_analytic: Option<f64>,
    tau_d_late_time: f64,
    tau_d_phase_sum: Option<f64>,
    tau_d_measured: Option<f64>,
}

/// First observation time with a separable verdict, provided the series
/// starts entangled.
fn measured_disentanglement(rows: &[QuenchRow]) -> Option<f64> {
    if rows.first()?.verdict != "entangled" {
        return None;
    }
    rows.iter().find(|r| r.verdict == "separable").map(|r| r.tau)
}

fn quench(cfg: &ScenarioConfig) -> RunResult<RunSummary> {
    let q = QuenchParams::from_model(&cfg.model)?;
    let curves = AnalyticCurves::new(q, PhaseDiffusion::SingleMode)?;
    let doubled = AnalyticCurves::new(q, PhaseDiffusion::PhaseSum)?;
    let never = |r: condensate_twa::Result<f64>| match r {
        Ok(t) => Ok(Some(t)),
        Err(Error::NeverEntangled) => Ok(None),
        Err(e) => Err(e),
    };
    let tau_d = never(curves.disentanglement_time().map(|d| d.numeric))?;
    let tau_d_phase_sum = never(doubled.disentanglement_time().map(|d| d.numeric))?;

    let run = run_protocol(&cfg.model, &cfg.integrator, &cfg.observe_times)?;
    let mut rows = Vec::with_capacity(run.snapshots.len());
    for (i, s) in run.snapshots.iter().enumerate() {
        let cov = covariance(s)?;
        let (a, b) = s.mean_densities();
        let rho_m = 0.5 * (a + b);
        let ppt = simulated_verdict(&s.states, cfg.bootstrap, bootstrap_seed(cfg, i))?;
        let pt = curves.point(s.t);
        rows.push(QuenchRow {
            tau: s.t,
            rho_m,
            xi: cov.xi,
            threshold: squeezing_threshold(rho_m),
            f_pt: ppt.f_pt,
            f_pt_se: ppt.se,
            verdict: verdict(ppt.entangled),
            rho_m_analytic: pt.rho_m,
            xi_analytic: pt.xi,
            threshold_analytic: pt.threshold,
            verdict_analytic: verdict(pt.xi > pt.threshold),
        });
    }
    let summary = QuenchSummary {
        f: q.f,
        zeta0: q.zeta0,
        alpha: q.alpha,
        tau_d_analytic: tau_d,
        tau_d_late_time: condensate_twa::analytic::disentanglement_bound(q.f, q.zeta0, PhaseDiffusion::SingleMode),
        tau_d_phase_sum,
        tau_d_measured: measured_disentanglement(&rows),
    };
    let table: Vec<CurvePoint> = curves.table(&cfg.observe_times);

    let mut art = Artifacts::create(cfg)?;
    match cfg.format {
        OutputFormat::Csv => {
            let mut t = Table::new(&[
                "tau",
                "rho_m",
                "xi",
                "threshold",
                "F_PT",
                "F_PT_se",
                "verdict",
                "rho_m_analytic",
                "xi_analytic",
                "threshold_analytic",
                "verdict_analytic",
            ]);
            for r in &rows {
                t.push(vec![
                    cell(r.tau),
                    cell(r.rho_m),
                    cell(r.xi),
                    cell(r.threshold),
                    cell(r.f_pt),
                    cell(r.f_pt_se),
                    cell(r.verdict),
                    cell(r.rho_m_analytic),
                    cell(r.xi_analytic),
                    cell(r.threshold_analytic),
                    cell(r.verdict_analytic),
                ]);
            }
            art.csv("quench_series.csv", &t)?;

            let mut t = Table::new(&["tau", "rho_m", "C", "C12", "C_theta", "xi", "threshold"]);
            for p in &table {
                t.push(vec![
                    cell(p.tau),
                    cell(p.rho_m),
                    cell(p.c),
                    cell(p.c12),
                    cell(p.c_theta),
                    cell(p.xi),
                    cell(p.threshold),
                ]);
            }
            art.csv("quench_analytic.csv", &t)?;

            let mut t = Table::new(&[
                "f",
                "zeta0",
                "alpha",
                "tau_d_analytic",
                "tau_d_late_time",
                "tau_d_phase_sum",
                "tau_d_measured",
            ]);
            t.push(vec![
                cell(summary.f),
                cell(summary.zeta0),
                cell(summary.alpha),
                opt(summary.tau_d_analytic),
                cell(summary.tau_d_late_time),
                opt(summary.tau_d_phase_sum),
                opt(summary.tau_d_measured),
            ]);
            art.csv("quench_summary.csv", &t)?;
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                summary: &'a QuenchSummary,
                series: &'a [QuenchRow],
                analytic: &'a [CurvePoint],
            }
            art.json(
                "quench.json",
                cfg.scenario,
                &Body {
                    summary: &summary,
                    series: &rows,
                    analytic: &table,
                },
            )?;
        }
    }
    art.snapshots(cfg, &run.snapshots)?;
    Ok(art.finish())
}
