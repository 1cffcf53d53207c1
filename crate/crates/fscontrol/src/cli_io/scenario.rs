//! Pipeline orchestration, the run manifest and re-export from a manifest.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::config::{load_config, parse_config, FieldSpec, OperatorSpec, ScenarioConfig};
use super::export::{export_field_csv, export_json_file, export_signal_csv};
use crate::constrained_dual::{
    build_multiplier_system, clip_feasible, constrained_report, ClipMode, DualProblem, DualSolution,
};
use crate::error::{Error, Result};
use crate::galerkin_system::{
    assemble_input_matrix_with, assemble_operator, free_response, simulate_controlled,
    GalerkinSystem, SampledSignal,
};
use crate::gram_operator::GramOperator;
use crate::spectral_basis::{
    build_basis, project_field_with, CoeffVector, FrustumForm, ScalarField,
};
use crate::unconstrained_solver::{
    final_state, report, solve_unconstrained, target_tail_bound, truncation_bound_1d, ControlLaw,
    SolveReport, TruncationBound,
};

pub const MANIFEST_FILE: &str = "manifest.json";

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: name,
        source: Box::new(e),
    })
}

/// Truncated plant with its projected target.
#[derive(Debug, Clone)]
pub struct BuiltSystem {
    pub system: Arc<GalerkinSystem>,
    /// Projection of the target field.
    pub theta_r: CoeffVector,
    pub gram: GramOperator,
}

/// Assembles basis, generator, inputs, free response and Gram matrix.
pub fn build_system(cfg: &ScenarioConfig) -> Result<BuiltSystem> {
    let domain = stage("basis", cfg.domain())?;
    let basis = stage("basis", build_basis(domain.clone(), cfg.order))?;
    let a = stage("operator", assemble_operator(&cfg.operator_coefficients(&domain), &basis))?;
    let actuators: Vec<ScalarField> = cfg.actuators.iter().map(|f| f.to_field(&domain)).collect();
    let m_beta = stage("input", assemble_input_matrix_with(&actuators, &basis, &cfg.quadrature))?;
    let theta_r = project_field_with(&cfg.target.to_field(&domain), &basis, &cfg.quadrature);
    let n = basis.len();
    let provisional = stage(
        "operator",
        GalerkinSystem::new(basis, a, m_beta, cfg.t_final, CoeffVector::zeros(n)),
    )?;
    let g0 = cfg
        .initial
        .as_ref()
        .map(|g| project_field_with(&g.to_field(&domain), provisional.basis(), &cfg.quadrature));
    let fs = stage("free_response", cfg.disturbance_coefficients(n))?;
    let free = stage("free_response", free_response(&provisional, g0.as_ref(), fs.as_ref()))?;
    let system = Arc::new(stage("free_response", provisional.with_theta_ro(&theta_r - free))?);
    let gram = stage("gram", GramOperator::compute(&system, cfg.delta_s))?;
    Ok(BuiltSystem {
        system,
        theta_r,
        gram,
    })
}

/// Constrained stage: dual solution, recovered law and rounded control.
#[derive(Debug, Clone)]
pub struct ConstrainedOutcome {
    pub dual: DualSolution,
    pub law: ControlLaw,
    pub rounded: SampledSignal,
    pub report: SolveReport,
    pub clip: ClipMode,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub built: BuiltSystem,
    pub unconstrained: ControlLaw,
    pub unconstrained_report: SolveReport,
    pub truncation: Option<TruncationBound>,
    pub constrained: Option<ConstrainedOutcome>,
    pub timings: Vec<StageTiming>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Runs the pipeline without touching the filesystem.
///
/// A dual ascent that hits its iteration cap keeps its last iterate: any
/// nonnegative multiplier still gives a valid lower bound, and the manifest
/// records `converged = false`.
pub fn solve_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutcome> {
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, timings: &mut Vec<StageTiming>| {
        timings.push(StageTiming {
            stage: name.to_string(),
            seconds: clock.elapsed().as_secs_f64(),
        });
        clock = Instant::now();
    };
    let built = build_system(cfg)?;
    lap("system", &mut timings);

    let sys = built.system.clone();
    let law = stage("unconstrained", solve_unconstrained(sys.clone(), &built.gram, cfg.rho_f))?;
    let mut rep = stage(
        "report",
        report(&law, &built.gram, cfg.rho_f, cfg.output.samples),
    )?;
    let truncation = single_heat_1d(cfg)
        .map(|(beta, target, initial)| -> Result<TruncationBound> {
            let tail = target_tail_bound(&sys, &target, initial.as_ref())?;
            truncation_bound_1d(&law, &built.gram, &beta, tail)
        })
        .transpose();
    let truncation = stage("report", truncation)?;
    rep.truncation_bound = truncation.map(|t| t.bound);
    lap("unconstrained", &mut timings);

    let constrained = match &cfg.constraint {
        None => None,
        Some(c) => {
            let ms = stage("dual", build_multiplier_system(&sys, c.n_lambda, &c.mu))?;
            let problem = stage("dual", DualProblem::new(sys.clone(), ms, &built.gram, cfg.rho_f))?;
            let dual = match problem.solve(c.tol, c.max_iter) {
                Ok(d) => d,
                Err(Error::NotConverged(d)) => *d,
                Err(e) => return Err(Error::Stage { stage: "dual", source: Box::new(e) }),
            };
            let recovered = stage("recovery", problem.recover_primal(&dual))?;
            let rounded = stage(
                "recovery",
                clip_feasible(&recovered, &c.mu, cfg.output.samples, c.clip),
            )?;
            let report = stage(
                "report",
                constrained_report(&rounded, &sys, cfg.rho_f, dual.dual_value),
            )?;
            lap("constrained", &mut timings);
            Some(ConstrainedOutcome {
                dual,
                law: recovered,
                rounded,
                report,
                clip: c.clip,
            })
        }
    };
    Ok(ScenarioOutcome {
        built,
        unconstrained: law,
        unconstrained_report: rep,
        truncation,
        constrained,
        timings,
    })
}

/// Actuator, target and initial field when the scenario is a 1D heat
/// problem with a single channel and no disturbance.
fn single_heat_1d(cfg: &ScenarioConfig) -> Option<(ScalarField, ScalarField, Option<ScalarField>)> {
    if cfg.lengths.len() != 1
        || cfg.actuators.len() != 1
        || cfg.disturbance.is_some()
        || !matches!(cfg.operator, OperatorSpec::Heat { .. })
    {
        return None;
    }
    let dom = cfg.domain().ok()?;
    Some((
        cfg.actuators[0].to_field(&dom),
        cfg.target.to_field(&dom),
        cfg.initial.as_ref().map(|g| g.to_field(&dom)),
    ))
}

/// Machine-readable record of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    /// Canonical configuration text; re-parsing it rebuilds the run.
    pub config: String,
    pub problem: ProblemSummary,
    pub target: TargetSummary,
    pub stages: Vec<StageTiming>,
    pub unconstrained: UnconstrainedRecord,
    pub constrained: Option<ConstrainedRecord>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSummary {
    pub dim: usize,
    pub lengths: Vec<f64>,
    pub operator: String,
    pub per_axis_order: usize,
    pub n_modes: usize,
    pub n_channels: usize,
    pub t_final: f64,
    pub rho_f: f64,
    pub delta_s: f64,
    pub lyapunov_residual: f64,
    pub time_samples: usize,
    pub field_grid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSummary {
    pub kind: String,
    pub theta_r_norm: f64,
    /// `||theta_ro^K||`.
    pub theta_ro_norm: f64,
    /// Frustum profile used, when the target is a frustum.
    pub frustum_form: Option<String>,
    /// `||theta_ro^K||` under the other frustum profile.
    pub theta_ro_norm_alternative: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnconstrainedRecord {
    pub report: SolveReport,
    pub truncation: Option<TruncationBound>,
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedRecord {
    pub report: SolveReport,
    pub mu: Vec<f64>,
    pub n_lambda: usize,
    pub clip: ClipMode,
    /// `phi_D`: the lower bound on the constrained optimum.
    pub dual_value: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub converged: bool,
    /// Sup-norm of the recovered law before rounding.
    pub recovered_linf: f64,
    pub alpha: Vec<f64>,
    pub gamma_a: Vec<f64>,
    pub gamma_b: Vec<f64>,
}

impl Manifest {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Every report scalar, prefixed by its stage.
    pub fn scalars(&self) -> Vec<(String, Option<f64>)> {
        let mut out: Vec<(String, Option<f64>)> = self
            .unconstrained
            .report
            .scalars()
            .into_iter()
            .map(|(k, v)| (format!("unconstrained.{k}"), v))
            .collect();
        if let Some(c) = &self.constrained {
            out.extend(
                c.report
                    .scalars()
                    .into_iter()
                    .map(|(k, v)| (format!("constrained.{k}"), v)),
            );
        }
        out
    }
}

/// `||theta_ro^K||` with the frustum target switched to the other profile.
fn alternative_frustum_norm(cfg: &ScenarioConfig, built: &BuiltSystem) -> Result<Option<f64>> {
    let FieldSpec::Frustum { form, .. } = &cfg.target else {
        return Ok(None);
    };
    let other = match form {
        FrustumForm::Min => FrustumForm::Product,
        FrustumForm::Product => FrustumForm::Min,
    };
    let domain = cfg.domain()?;
    let field = cfg.target.to_field(&domain).frustum_as(other);
    let theta = project_field_with(&field, built.system.basis(), &cfg.quadrature);
    let shift = &built.theta_r - built.system.theta_ro();
    Ok(Some((theta - shift).norm()))
}

/// Builds the manifest of an outcome; `files` lists the artifacts written.
pub fn manifest_for(cfg: &ScenarioConfig, out: &ScenarioOutcome, files: Vec<String>) -> Result<Manifest> {
    let built = &out.built;
    let sys = &built.system;
    let frustum_form = match &cfg.target {
        FieldSpec::Frustum { form, .. } => Some(form.name().to_string()),
        _ => None,
    };
    let constrained = match (&out.constrained, &cfg.constraint) {
        (Some(c), Some(cc)) => Some(ConstrainedRecord {
            report: c.report.clone(),
            mu: cc.mu.clone(),
            n_lambda: cc.n_lambda,
            clip: c.clip,
            dual_value: c.report.dual_value.unwrap_or(f64::NAN),
            iterations: c.dual.iterations,
            kkt_residual: c.dual.kkt_residual,
            converged: c.dual.converged,
            recovered_linf: c.law.sample(cfg.output.samples)?.linf_norm(),
            alpha: c.law.alpha().iter().copied().collect(),
            gamma_a: c.dual.gamma_a.iter().copied().collect(),
            gamma_b: c.dual.gamma_b.iter().copied().collect(),
        }),
        _ => None,
    };
    Ok(Manifest {
        tool: "fscontrol".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        scenario: cfg.name.clone(),
        config: cfg.to_text(),
        problem: ProblemSummary {
            dim: sys.basis().dim(),
            lengths: cfg.lengths.clone(),
            operator: match cfg.operator {
                OperatorSpec::Heat { .. } => "heat".into(),
                OperatorSpec::General1D { .. } => "general1d".into(),
            },
            per_axis_order: cfg.order,
            n_modes: sys.n_modes(),
            n_channels: sys.n_channels(),
            t_final: cfg.t_final,
            rho_f: cfg.rho_f,
            delta_s: cfg.delta_s,
            lyapunov_residual: built.gram.lyapunov_residual(sys.generator()),
            time_samples: cfg.output.samples,
            field_grid: cfg.output.field_grid,
        },
        target: TargetSummary {
            kind: cfg.target.kind().into(),
            theta_r_norm: built.theta_r.norm(),
            theta_ro_norm: sys.theta_ro().norm(),
            frustum_form,
            theta_ro_norm_alternative: alternative_frustum_norm(cfg, built)?,
        },
        stages: out.timings.clone(),
        unconstrained: UnconstrainedRecord {
            report: out.unconstrained_report.clone(),
            truncation: out.truncation,
            alpha: out.unconstrained.alpha().iter().copied().collect(),
        },
        constrained,
        files,
    })
}

/// Writes signal and field CSVs for the laws in `out`; returns the file names.
fn write_csvs(
    cfg: &ScenarioConfig,
    sys: &GalerkinSystem,
    gram: &GramOperator,
    theta_r: &CoeffVector,
    unconstrained: &ControlLaw,
    constrained: Option<&SampledSignal>,
    dir: &Path,
) -> Result<Vec<String>> {
    let basis = sys.basis();
    let grid = cfg.output.field_grid;
    let mut files = Vec::new();
    let mut put = |name: &str, r: Result<()>| -> Result<()> {
        stage("export", r)?;
        files.push(name.to_string());
        Ok(())
    };
    let u = stage("export", unconstrained.sample(cfg.output.samples))?;
    put("control_unconstrained.csv", export_signal_csv(&u, dir.join("control_unconstrained.csv")))?;
    put("target.csv", export_field_csv(theta_r, basis, grid, dir.join("target.csv")))?;
    let free = theta_r - sys.theta_ro();
    let fin = stage("export", final_state(unconstrained, gram))? + &free;
    put(
        "final_state_unconstrained.csv",
        export_field_csv(&fin, basis, grid, dir.join("final_state_unconstrained.csv")),
    )?;
    if let Some(r) = constrained {
        put("control_constrained.csv", export_signal_csv(r, dir.join("control_constrained.csv")))?;
        let fin = stage("export", simulate_controlled(sys, r))? + &free;
        put(
            "final_state_constrained.csv",
            export_field_csv(&fin, basis, grid, dir.join("final_state_constrained.csv")),
        )?;
    }
    Ok(files)
}

/// Runs a scenario and writes the CSVs and `manifest.json` into `dir`.
pub fn run_scenario(cfg: &ScenarioConfig, dir: impl AsRef<Path>) -> Result<Manifest> {
    let dir = dir.as_ref();
    let out = solve_scenario(cfg)?;
    let mut files = write_csvs(
        cfg,
        &out.built.system,
        &out.built.gram,
        &out.built.theta_r,
        &out.unconstrained,
        out.constrained.as_ref().map(|c| &c.rounded),
        dir,
    )?;
    files.push(MANIFEST_FILE.to_string());
    let manifest = manifest_for(cfg, &out, files)?;
    stage("export", export_json_file(&manifest, &dir.join(MANIFEST_FILE)))?;
    Ok(manifest)
}

/// Loads a configuration and runs it into `dir`, or into the configured
/// output directory when `dir` is `None`.
pub fn run_config_file(path: impl AsRef<Path>, dir: Option<&Path>) -> Result<(Manifest, PathBuf)> {
    let cfg = load_config(path)?;
    let dir = dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.dir.clone());
    let manifest = run_scenario(&cfg, &dir)?;
    Ok((manifest, dir))
}

/// Rewrites the CSVs of a run from its manifest, without re-solving.
pub fn export_from_manifest(manifest: &Manifest, dir: impl AsRef<Path>) -> Result<Vec<String>> {
    let dir = dir.as_ref();
    let cfg = parse_config(&manifest.config)?;
    let built = build_system(&cfg)?;
    let sys = built.system.clone();
    let law = stage(
        "export",
        ControlLaw::new(sys.clone(), DVector::from_vec(manifest.unconstrained.alpha.clone()), None, cfg.rho_f),
    )?;
    let rounded = match &manifest.constrained {
        None => None,
        Some(c) => {
            let ms = stage("export", build_multiplier_system(&sys, c.n_lambda, &c.mu))?;
            let d = DVector::from_vec(c.gamma_a.clone()) - DVector::from_vec(c.gamma_b.clone());
            let corr = stage("export", ms.signal(&d))?;
            let recovered = stage(
                "export",
                ControlLaw::new(sys.clone(), DVector::from_vec(c.alpha.clone()), Some(corr), cfg.rho_f),
            )?;
            Some(stage(
                "export",
                clip_feasible(&recovered, &c.mu, cfg.output.samples, c.clip),
            )?)
        }
    };
    write_csvs(&cfg, &sys, &built.gram, &built.theta_r, &law, rounded.as_ref(), dir)
}
