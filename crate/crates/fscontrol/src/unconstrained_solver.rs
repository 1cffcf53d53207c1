//! Closed-form unconstrained control, its evaluation and reports.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galerkin_system::{simulate_controlled, uniform_grid, GalerkinSystem, SampledSignal};
use crate::gram_operator::{input_response_f, GramOperator};
use crate::spectral_basis::{CoeffVector, QuadratureSettings, ScalarField};

/// Default number of samples used for sup-norms and exported signals.
pub const DEFAULT_TIME_SAMPLES: usize = 10_001;

/// `u(tau) = F_K(tau) alpha + correction(tau)`.
#[derive(Debug, Clone)]
pub struct ControlLaw {
    sys: Arc<GalerkinSystem>,
    alpha: CoeffVector,
    correction: Option<SampledSignal>,
    rho_f: f64,
}

impl ControlLaw {
    pub fn new(
        sys: Arc<GalerkinSystem>,
        alpha: CoeffVector,
        correction: Option<SampledSignal>,
        rho_f: f64,
    ) -> Result<Self> {
        if alpha.len() != sys.n_modes() {
            return Err(Error::DimensionMismatch("kernel coefficient length".into()));
        }
        if let Some(c) = &correction {
            if c.n_channels() != sys.n_channels() {
                return Err(Error::DimensionMismatch("correction channel count".into()));
            }
        }
        Ok(Self {
            sys,
            alpha,
            correction,
            rho_f,
        })
    }

    pub fn system(&self) -> &Arc<GalerkinSystem> {
        &self.sys
    }

    pub fn alpha(&self) -> &CoeffVector {
        &self.alpha
    }

    pub fn correction(&self) -> Option<&SampledSignal> {
        self.correction.as_ref()
    }

    pub fn rho_f(&self) -> f64 {
        self.rho_f
    }

    /// Regularization weight `rho_u = 1 / rho_F`.
    pub fn rho_u(&self) -> f64 {
        1.0 / self.rho_f
    }

    /// The kernel part `F_K(tau) alpha` alone.
    pub fn base_at(&self, tau: f64) -> Result<DVector<f64>> {
        Ok(input_response_f(&self.sys, tau)? * &self.alpha)
    }

    /// The same law without its correction.
    pub fn without_correction(&self) -> Self {
        Self {
            correction: None,
            ..self.clone()
        }
    }

    /// Kernel part on `n` uniform nodes, propagating `x' = -A^T x` backward
    /// from `x(t_F) = alpha` with one exact step per interval.
    pub fn sample_base(&self, n: usize) -> Result<SampledSignal> {
        let times = uniform_grid(self.sys.t_final(), n);
        let h = self.sys.t_final() / (times.len() - 1) as f64;
        let step = self.sys.exp(h).transpose();
        let mt = self.sys.input_matrix().transpose();
        let mut values = DMatrix::zeros(times.len(), self.sys.n_channels());
        let mut x = self.alpha.clone();
        for r in (0..times.len()).rev() {
            values.row_mut(r).copy_from(&(&mt * &x).transpose());
            x = &step * x;
        }
        SampledSignal::new(times, values)
    }

    /// Full law (kernel part plus correction) on `n` uniform nodes.
    pub fn sample(&self, n: usize) -> Result<SampledSignal> {
        let base = self.sample_base(n)?;
        match &self.correction {
            None => Ok(base),
            Some(c) => {
                let mut values = base.values().clone();
                for (r, &t) in base.times().iter().enumerate() {
                    let v = c.value_at(t).transpose();
                    let mut row = values.row_mut(r);
                    row += v;
                }
                SampledSignal::new(base.times().to_vec(), values)
            }
        }
    }
}

/// `u(tau)` evaluated directly through the matrix exponential.
pub fn eval_control(law: &ControlLaw, tau: f64) -> Result<DVector<f64>> {
    let mut u = law.base_at(tau)?;
    if let Some(c) = &law.correction {
        u += c.value_at(tau);
    }
    Ok(u)
}

/// Scalars describing one control: cost on the truncated system, norms,
/// projected final-state error and optional certificates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// `||u||^2 + rho_F ||c_K(t_F; u) - theta_ro^K||^2`.
    pub cost_j: f64,
    pub l2_norm_u: f64,
    pub linf_norm_u: f64,
    /// `||c_K(t_F; u) - theta_ro^K||` (not squared).
    pub final_error_projected: f64,
    pub truncation_bound: Option<f64>,
    /// Dual lower bound used for the gap, when available.
    pub dual_value: Option<f64>,
    /// `cost_j - dual_value`.
    pub duality_gap: Option<f64>,
    /// `duality_gap / cost_j`.
    pub relative_gap: Option<f64>,
}

impl SolveReport {
    /// Every scalar with a stable name, for manifests and tables.
    pub fn scalars(&self) -> Vec<(&'static str, Option<f64>)> {
        vec![
            ("cost_j", Some(self.cost_j)),
            ("l2_norm_u", Some(self.l2_norm_u)),
            ("linf_norm_u", Some(self.linf_norm_u)),
            ("final_error_projected", Some(self.final_error_projected)),
            ("truncation_bound", self.truncation_bound),
            ("dual_value", self.dual_value),
            ("duality_gap", self.duality_gap),
            ("relative_gap", self.relative_gap),
        ]
    }
}

/// Unconstrained minimizer `alpha = rho_F (I + rho_F G)^{-1} theta_ro^K`.
pub fn solve_unconstrained(
    sys: Arc<GalerkinSystem>,
    gram: &GramOperator,
    rho_f: f64,
) -> Result<ControlLaw> {
    let inv = gram.regularized(rho_f)?;
    let alpha = inv.apply(sys.theta_ro()) * rho_f;
    ControlLaw::new(sys, alpha, None, rho_f)
}

/// Final state `c_K(t_F; u)` of a law: `G alpha` plus the response to the correction.
pub fn final_state(law: &ControlLaw, gram: &GramOperator) -> Result<CoeffVector> {
    let mut c = gram.matrix() * &law.alpha;
    if let Some(corr) = &law.correction {
        c += simulate_controlled(&law.sys, corr)?;
    }
    Ok(c)
}

/// `||u||_{L2}^2 = alpha^T G alpha + 2 alpha^T c_K(t_F; corr) + ||corr||^2`, all exact.
pub fn l2_norm_squared(law: &ControlLaw, gram: &GramOperator) -> Result<f64> {
    let mut s = law.alpha.dot(&(gram.matrix() * &law.alpha));
    if let Some(corr) = &law.correction {
        s += 2.0 * law.alpha.dot(&simulate_controlled(&law.sys, corr)?);
        s += corr.l2_norm_squared();
    }
    Ok(s.max(0.0))
}

/// Report for a control law; the sup-norm is taken over `n_time_samples`
/// uniform nodes including both ends of the horizon.
pub fn report(
    law: &ControlLaw,
    gram: &GramOperator,
    rho_f: f64,
    n_time_samples: usize,
) -> Result<SolveReport> {
    if n_time_samples < 1000 {
        return Err(Error::InvalidArgument(format!(
            "at least 1000 time samples are required, got {n_time_samples}"
        )));
    }
    let l2sq = l2_norm_squared(law, gram)?;
    let err = (final_state(law, gram)? - law.sys.theta_ro()).norm();
    let linf = law.sample(n_time_samples)?.linf_norm();
    Ok(SolveReport {
        cost_j: l2sq + rho_f * err * err,
        l2_norm_u: l2sq.sqrt(),
        linf_norm_u: linf,
        final_error_projected: err,
        truncation_bound: None,
        dual_value: None,
        duality_gap: None,
        relative_gap: None,
    })
}

/// Terms of the 1D truncation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationBound {
    /// `||beta - P_K beta||`.
    pub actuator_tail: f64,
    /// `||theta_ro - P_K theta_ro||` (or an upper bound for it).
    pub target_tail: f64,
    pub l2_norm_u: f64,
    /// `(actuator_tail * ||u|| / (sqrt(k_alpha) (K + 1) pi / L) + target_tail)^2`.
    pub bound: f64,
}

/// Bound on the squared truncation error of the final state for a 1D heat
/// system with a single actuator `beta`.
pub fn truncation_bound_1d(
    law: &ControlLaw,
    gram: &GramOperator,
    beta: &ScalarField,
    target_tail: f64,
) -> Result<TruncationBound> {
    let sys = &law.sys;
    let basis = sys.basis();
    if basis.dim() != 1 {
        return Err(Error::InvalidArgument("truncation bound is only available in 1D".into()));
    }
    let diffusivity = heat_diffusivity(sys)
        .ok_or_else(|| Error::InvalidArgument("truncation bound requires a heat operator".into()))?;
    let settings = QuadratureSettings::default();
    let actuator_tail = crate::spectral_basis::projection_tail(beta, basis, &settings);
    let l2 = l2_norm_squared(law, gram)?.sqrt();
    let length = basis.domain().length(0);
    let k_next = (basis.per_axis_order() + 1) as f64;
    let decay = diffusivity.sqrt() * k_next * PI / length;
    let bound = (actuator_tail * l2 / decay + target_tail).powi(2);
    Ok(TruncationBound {
        actuator_tail,
        target_tail,
        l2_norm_u: l2,
        bound,
    })
}

/// Diffusivity of a diagonal heat generator, recovered from its first entry.
pub fn heat_diffusivity(sys: &GalerkinSystem) -> Option<f64> {
    let d = sys.diagonal()?;
    let k = -d[0] / sys.basis().eigen_magnitudes()[0];
    let consistent = d
        .iter()
        .zip(sys.basis().eigen_magnitudes())
        .all(|(a, l)| (a + k * l).abs() <= 1e-10 * (k * l).abs());
    consistent.then_some(k)
}

/// Upper bound on `||theta_ro - P_K theta_ro||` for a 1D heat system from the
/// target tail and the decay of the initial-data tail.
pub fn target_tail_bound(
    sys: &GalerkinSystem,
    target: &ScalarField,
    initial: Option<&ScalarField>,
) -> Result<f64> {
    let basis = sys.basis();
    if basis.dim() != 1 {
        return Err(Error::InvalidArgument("tail bound is only available in 1D".into()));
    }
    let settings = QuadratureSettings::default();
    let mut tail = crate::spectral_basis::projection_tail(target, basis, &settings);
    if let Some(g) = initial {
        let k = heat_diffusivity(sys)
            .ok_or_else(|| Error::InvalidArgument("tail bound requires a heat operator".into()))?;
        let next = ((basis.per_axis_order() + 1) as f64 * PI / basis.domain().length(0)).powi(2);
        tail += (-k * next * sys.t_final()).exp()
            * crate::spectral_basis::projection_tail(g, basis, &settings);
    }
    Ok(tail)
}

/// `||u_1 - u_2||_{L2}` for two kernel laws on nested 1D heat systems, from
/// closed-form cross Gram entries `M1_i M2_j (1 - e^{(a_i + b_j) t_F}) / -(a_i + b_j)`.
pub fn l2_distance_nested(law1: &ControlLaw, law2: &ControlLaw) -> Result<f64> {
    let g11 = cross_gram(&law1.sys, &law1.sys)?;
    let g22 = cross_gram(&law2.sys, &law2.sys)?;
    let g12 = cross_gram(&law1.sys, &law2.sys)?;
    let a = law1.alpha.dot(&(&g11 * &law1.alpha));
    let b = law2.alpha.dot(&(&g22 * &law2.alpha));
    let c = law1.alpha.dot(&(&g12 * &law2.alpha));
    Ok((a + b - 2.0 * c).max(0.0).sqrt())
}

fn cross_gram(s1: &GalerkinSystem, s2: &GalerkinSystem) -> Result<DMatrix<f64>> {
    let (d1, d2) = match (s1.diagonal(), s2.diagonal()) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::InvalidArgument(
                "closed-form cross Gram needs diagonal generators".into(),
            ))
        }
    };
    if (s1.t_final() - s2.t_final()).abs() > 0.0 || s1.n_channels() != s2.n_channels() {
        return Err(Error::InvalidArgument("systems must share horizon and channels".into()));
    }
    let t = s1.t_final();
    let mm = s1.input_matrix() * s2.input_matrix().transpose();
    Ok(DMatrix::from_fn(d1.len(), d2.len(), |i, j| {
        let s = d1[i] + d2[j];
        mm[(i, j)] * (-(s * t).exp_m1()) / -s
    }))
}
