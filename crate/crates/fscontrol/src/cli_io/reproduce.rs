//! The 2D reference experiment: a frustum target on the unit square driven by
//! one indicator actuator, compared against reference figures.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ConstraintSpec, FieldSpec, OperatorSpec, OutputSpec, ScenarioConfig};
use super::scenario::{build_system, solve_scenario};
use crate::constrained_dual::{ClipMode, DEFAULT_DUAL_MAX_ITER, DEFAULT_DUAL_TOL};
use crate::error::Result;
use crate::gram_operator::DEFAULT_DELTA_S;
use crate::spectral_basis::{FrustumForm, QuadratureSettings};
use crate::unconstrained_solver::DEFAULT_TIME_SAMPLES;

/// Published values for one regularization weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceCase {
    pub rho_f: f64,
    /// `(J, ||u||_2, ||u||_inf, err)` without the peak bound.
    pub unconstrained: [f64; 4],
    pub dual_value: f64,
    pub constrained_cost: f64,
    /// Relative duality gap in percent.
    pub gap_percent: f64,
}

pub const REFERENCE_CASES: [ReferenceCase; 2] = [
    ReferenceCase {
        rho_f: 8000.0,
        unconstrained: [4978.00, 45.6636, 192.5735, 0.6037],
        dual_value: 5485.00,
        constrained_cost: 5668.10,
        gap_percent: 3.2,
    },
    ReferenceCase {
        rho_f: 20000.0,
        unconstrained: [8127.40, 64.4017, 265.37, 0.4485],
        dual_value: 11195.00,
        constrained_cost: 12281.00,
        gap_percent: 8.8,
    },
];

pub const REFERENCE_THETA_RO_NORM: f64 = 1.7289;
pub const REFERENCE_MU: f64 = 100.0;
pub const REFERENCE_N_LAMBDA: usize = 30;

/// Reference scenario at weight `rho_f` with `n_lambda` multiplier intervals.
pub fn reference_2d_config(rho_f: f64, n_lambda: usize, constrained: bool) -> ScenarioConfig {
    ScenarioConfig {
        name: "reference_2d".into(),
        lengths: vec![1.0, 1.0],
        operator: OperatorSpec::Heat { diffusivity: 1.0 },
        order: 5,
        quadrature: QuadratureSettings::default(),
        t_final: 1.0,
        rho_f,
        delta_s: DEFAULT_DELTA_S,
        target: FieldSpec::Frustum {
            height: 2.0,
            lo: vec![0.1, 0.1],
            hi: vec![0.9, 0.9],
            form: FrustumForm::Min,
        },
        actuators: vec![FieldSpec::Indicator {
            lo: vec![0.25, 0.25],
            hi: vec![0.75, 0.75],
            value: 1.0,
        }],
        initial: None,
        disturbance: None,
        constraint: constrained.then(|| ConstraintSpec {
            mu: vec![REFERENCE_MU],
            n_lambda,
            tol: DEFAULT_DUAL_TOL,
            max_iter: DEFAULT_DUAL_MAX_ITER,
            clip: ClipMode::Base,
        }),
        output: OutputSpec {
            dir: PathBuf::from("out").join("reference_2d"),
            samples: DEFAULT_TIME_SAMPLES,
            field_grid: 41,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToleranceKind {
    /// `|computed / reference - 1|`.
    Relative,
    /// `|computed - reference|`.
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub case: String,
    pub quantity: String,
    pub computed: f64,
    pub reference: f64,
    pub deviation: f64,
    pub tolerance: f64,
    pub kind: ToleranceKind,
    pub pass: bool,
}

impl ComparisonRow {
    fn new(case: &str, quantity: &str, computed: f64, reference: f64, tolerance: f64, kind: ToleranceKind) -> Self {
        let deviation = match kind {
            ToleranceKind::Relative => (computed - reference) / reference,
            ToleranceKind::Absolute => computed - reference,
        };
        Self {
            case: case.into(),
            quantity: quantity.into(),
            computed,
            reference,
            deviation,
            tolerance,
            kind,
            pass: deviation.abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReproduceOptions {
    /// Multiplies every tolerance.
    pub tol_scale: f64,
    /// Restrict to one weight.
    pub rho_f: Option<f64>,
    pub skip_constrained: bool,
    pub n_lambda: usize,
}

impl Default for ReproduceOptions {
    fn default() -> Self {
        Self {
            tol_scale: 1.0,
            rho_f: None,
            skip_constrained: false,
            n_lambda: REFERENCE_N_LAMBDA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    /// Frustum profile used for the target row.
    pub frustum_form: String,
    /// `||theta_ro^K||` under each profile.
    pub theta_ro_norm_min: f64,
    pub theta_ro_norm_product: f64,
    pub tol_scale: f64,
    pub n_lambda: usize,
    pub seconds: f64,
}

impl Comparison {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// Fixed-width table for terminals.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<26} {:<22} {:>14} {:>14} {:>12} {:>10}  status",
            "case", "quantity", "computed", "reference", "deviation", "tolerance"
        );
        for r in &self.rows {
            let dev = match r.kind {
                ToleranceKind::Relative => format!("{:+.3}%", 100.0 * r.deviation),
                ToleranceKind::Absolute => format!("{:+.3e}", r.deviation),
            };
            let tol = match r.kind {
                ToleranceKind::Relative => format!("{:.2}%", 100.0 * r.tolerance),
                ToleranceKind::Absolute => format!("{:.1e}", r.tolerance),
            };
            let _ = writeln!(
                s,
                "{:<26} {:<22} {:>14.6} {:>14.6} {:>12} {:>10}  {}",
                r.case,
                r.quantity,
                r.computed,
                r.reference,
                dev,
                tol,
                if r.pass { "PASS" } else { "FAIL" }
            );
        }
        let _ = writeln!(
            s,
            "target profile: {} (min {:.6}, product {:.6}); N_lambda = {}; tolerance scale {}; {:.2} s",
            self.frustum_form,
            self.theta_ro_norm_min,
            self.theta_ro_norm_product,
            self.n_lambda,
            self.tol_scale,
            self.seconds
        );
        s
    }
}

/// Solves the reference cases selected by `opts` and compares them.
pub fn reproduce_2d(opts: &ReproduceOptions) -> Result<Comparison> {
    let start = Instant::now();
    let ts = opts.tol_scale;
    let mut rows = Vec::new();

    let base = reference_2d_config(REFERENCE_CASES[0].rho_f, opts.n_lambda, false);
    let norm_min = build_system(&base)?.system.theta_ro().norm();
    let mut product = base.clone();
    if let FieldSpec::Frustum { form, .. } = &mut product.target {
        *form = FrustumForm::Product;
    }
    let norm_product = build_system(&product)?.system.theta_ro().norm();
    let tol_norm = 5e-3 * ts;
    let min_ok = (norm_min - REFERENCE_THETA_RO_NORM).abs() <= tol_norm;
    let (form, chosen) = if min_ok || (norm_product - REFERENCE_THETA_RO_NORM).abs() > tol_norm {
        (FrustumForm::Min, norm_min)
    } else {
        (FrustumForm::Product, norm_product)
    };
    rows.push(ComparisonRow::new(
        "target",
        "theta_ro_norm",
        chosen,
        REFERENCE_THETA_RO_NORM,
        tol_norm,
        ToleranceKind::Absolute,
    ));

    for case in REFERENCE_CASES.iter().filter(|c| opts.rho_f.is_none_or(|r| r == c.rho_f)) {
        let mut cfg = reference_2d_config(case.rho_f, opts.n_lambda, !opts.skip_constrained);
        if let FieldSpec::Frustum { form: f, .. } = &mut cfg.target {
            *f = form;
        }
        let out = solve_scenario(&cfg)?;
        let label = format!("unconstrained rho_F={}", case.rho_f);
        let r = &out.unconstrained_report;
        let [j, l2, linf, err] = case.unconstrained;
        rows.push(ComparisonRow::new(&label, "J", r.cost_j, j, 0.01 * ts, ToleranceKind::Relative));
        rows.push(ComparisonRow::new(&label, "l2_norm_u", r.l2_norm_u, l2, 0.01 * ts, ToleranceKind::Relative));
        rows.push(ComparisonRow::new(&label, "linf_norm_u", r.linf_norm_u, linf, 0.01 * ts, ToleranceKind::Relative));
        rows.push(ComparisonRow::new(
            &label,
            "final_error",
            r.final_error_projected,
            err,
            0.02 * ts,
            ToleranceKind::Relative,
        ));
        if let Some(c) = &out.constrained {
            let label = format!("constrained rho_F={}", case.rho_f);
            let r = &c.report;
            rows.push(ComparisonRow::new(
                &label,
                "dual_value",
                c.dual.dual_value,
                case.dual_value,
                0.05 * ts,
                ToleranceKind::Relative,
            ));
            rows.push(ComparisonRow::new(
                &label,
                "J",
                r.cost_j,
                case.constrained_cost,
                0.05 * ts,
                ToleranceKind::Relative,
            ));
            rows.push(ComparisonRow::new(
                &label,
                "linf_norm_u",
                r.linf_norm_u,
                REFERENCE_MU,
                1e-9 * REFERENCE_MU * ts,
                ToleranceKind::Absolute,
            ));
            rows.push(ComparisonRow::new(
                &label,
                "gap_percent",
                100.0 * r.relative_gap.unwrap_or(f64::NAN),
                case.gap_percent,
                2.0 * ts,
                ToleranceKind::Absolute,
            ));
        }
    }
    Ok(Comparison {
        rows,
        frustum_form: form.name().into(),
        theta_ro_norm_min: norm_min,
        theta_ro_norm_product: norm_product,
        tol_scale: ts,
        n_lambda: opts.n_lambda,
        seconds: start.elapsed().as_secs_f64(),
    })
}
