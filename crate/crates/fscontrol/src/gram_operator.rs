//! Input-response kernel, terminal cross matrix and the Gram matrix via the
//! Lyapunov equation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::galerkin_system::GalerkinSystem;
use crate::quadrature::graded_time_rule;
use crate::spectral_basis::CoeffVector;

/// Default shift used by the regularized inverse.
pub const DEFAULT_DELTA_S: f64 = 1e-3;

/// Gram matrix of a truncated system together with the data it was built from.
#[derive(Debug, Clone)]
pub struct GramOperator {
    g: DMatrix<f64>,
    m_check: DMatrix<f64>,
    exp_a_tf: DMatrix<f64>,
    delta_s: f64,
}

impl GramOperator {
    /// Solves `A G + G A^T = M_check` for the system's Gram matrix.
    pub fn compute(sys: &GalerkinSystem, delta_s: f64) -> Result<Self> {
        if !(delta_s.is_finite() && delta_s > 0.0) {
            return Err(Error::InvalidArgument(format!("delta_S = {delta_s} must be positive")));
        }
        let exp_a_tf = sys.exp(sys.t_final());
        let m_check = cross_matrix(&exp_a_tf, sys.input_matrix());
        let g = solve_lyapunov(sys.generator(), &m_check)?;
        Ok(Self {
            g,
            m_check,
            exp_a_tf,
            delta_s,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn m_check(&self) -> &DMatrix<f64> {
        &self.m_check
    }

    pub fn exp_a_tf(&self) -> &DMatrix<f64> {
        &self.exp_a_tf
    }

    pub fn delta_s(&self) -> f64 {
        self.delta_s
    }

    pub fn n_modes(&self) -> usize {
        self.g.nrows()
    }

    /// Relative Lyapunov residual `||A G + G A^T - M_check||_F / ||M_check||_F`.
    pub fn lyapunov_residual(&self, a: &DMatrix<f64>) -> f64 {
        lyapunov_residual(a, &self.g, &self.m_check)
    }

    /// Factorization used to apply `(I + rho_F G)^{-1}`.
    pub fn regularized(&self, rho_f: f64) -> Result<RegularizedInverse> {
        RegularizedInverse::new(self, rho_f)
    }
}

/// `F_K(tau) = M^T exp(A^T (t_F - tau))`, an `m x n_K` matrix.
pub fn input_response_f(sys: &GalerkinSystem, tau: f64) -> Result<DMatrix<f64>> {
    if !(0.0..=sys.t_final()).contains(&tau) {
        return Err(Error::TimeOutOfRange {
            tau,
            t_final: sys.t_final(),
        });
    }
    Ok(sys.input_matrix().transpose() * sys.exp(sys.t_final() - tau).transpose())
}

/// `exp(A t_F) M (exp(A t_F) M)^T - M M^T`.
pub fn terminal_cross_matrix(sys: &GalerkinSystem) -> DMatrix<f64> {
    cross_matrix(&sys.exp(sys.t_final()), sys.input_matrix())
}

fn cross_matrix(exp_a_tf: &DMatrix<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    let em = exp_a_tf * m;
    let out = &em * em.transpose() - m * m.transpose();
    (&out + out.transpose()) * 0.5
}

/// Solves `A G + G A^T = M_check`: term by term for diagonal `A`, otherwise
/// through the Kronecker system `(I (x) A + A (x) I) vec(G) = vec(M_check)`.
pub fn solve_lyapunov(a: &DMatrix<f64>, m_check: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.shape() != (n, n) || m_check.shape() != (n, n) {
        return Err(Error::DimensionMismatch("Lyapunov operands must be square and equal".into()));
    }
    let diagonal = a
        .iter()
        .enumerate()
        .all(|(idx, &v)| v == 0.0 || idx % n == idx / n);
    if diagonal {
        let d = a.diagonal();
        let mut g = DMatrix::zeros(n, n);
        for l in 0..n {
            for k in 0..n {
                let s = d[k] + d[l];
                if s == 0.0 {
                    return Err(Error::SingularLyapunov);
                }
                g[(k, l)] = m_check[(k, l)] / s;
            }
        }
        return Ok(g);
    }
    let eye = DMatrix::<f64>::identity(n, n);
    let op = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = DVector::from_column_slice(m_check.as_slice());
    let lu = op.lu();
    let x = lu.solve(&rhs).ok_or(Error::SingularLyapunov)?;
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularLyapunov);
    }
    let g = DMatrix::from_column_slice(n, n, x.as_slice());
    Ok((&g + g.transpose()) * 0.5)
}

/// `||A G + G A^T - M_check||_F / ||M_check||_F` (absolute when `M_check = 0`).
pub fn lyapunov_residual(a: &DMatrix<f64>, g: &DMatrix<f64>, m_check: &DMatrix<f64>) -> f64 {
    let r = (a * g + g * a.transpose() - m_check).norm();
    let scale = m_check.norm();
    if scale > 0.0 {
        r / scale
    } else {
        r
    }
}

/// `int_0^{t_F} F_K(tau)^T F_K(tau) dtau` by Gauss–Legendre quadrature on
/// panels graded toward `t_F`. Intended as an independent check.
pub fn gram_quadrature_oracle(sys: &GalerkinSystem, n_nodes: usize) -> DMatrix<f64> {
    let n = sys.n_modes();
    let mut g = DMatrix::zeros(n, n);
    if sys.t_final() == 0.0 {
        return g;
    }
    let (ts, ws) = graded_time_rule(sys.t_final(), n_nodes.max(32));
    for (&t, &w) in ts.iter().zip(&ws) {
        let em = sys.exp(sys.t_final() - t) * sys.input_matrix();
        g += (&em * em.transpose()) * w;
    }
    g
}

/// Eigen-factorization of `(1 + delta_S) I + rho_F G` used to apply
/// `(I + rho_F G)^{-1} = V (Sigma - delta_S I)^{-1} V^T`.
#[derive(Debug, Clone)]
pub struct RegularizedInverse {
    vectors: DMatrix<f64>,
    inv_values: DVector<f64>,
    rho_f: f64,
}

impl RegularizedInverse {
    pub fn new(gram: &GramOperator, rho_f: f64) -> Result<Self> {
        if !(rho_f.is_finite() && rho_f > 0.0) {
            return Err(Error::InvalidArgument(format!("rho_F = {rho_f} must be positive")));
        }
        let n = gram.n_modes();
        let delta = gram.delta_s;
        let shifted = DMatrix::<f64>::identity(n, n) * (1.0 + delta) + gram.matrix() * rho_f;
        let shifted = (&shifted + shifted.transpose()) * 0.5;
        let eig = shifted.symmetric_eigen();
        let reduced = eig.eigenvalues.map(|s| s - delta);
        let min_eig = reduced.min();
        if min_eig.is_nan() || min_eig <= 0.0 {
            return Err(Error::IllConditioned { min_eig });
        }
        Ok(Self {
            vectors: eig.eigenvectors,
            inv_values: reduced.map(|s| 1.0 / s),
            rho_f,
        })
    }

    pub fn rho_f(&self) -> f64 {
        self.rho_f
    }

    /// `(I + rho_F G)^{-1} v`.
    pub fn apply(&self, v: &CoeffVector) -> CoeffVector {
        let w = self.vectors.transpose() * v;
        &self.vectors * w.component_mul(&self.inv_values)
    }

    /// `(I + rho_F G)^{-1} X` column by column.
    pub fn apply_matrix(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut w = self.vectors.transpose() * x;
        for (mut row, s) in w.row_iter_mut().zip(self.inv_values.iter()) {
            row *= *s;
        }
        &self.vectors * w
    }
}

/// `(I + rho_F G)^{-1} v` through the shifted eigendecomposition.
pub fn regularized_inverse_apply(
    gram: &GramOperator,
    rho_f: f64,
    v: &CoeffVector,
) -> Result<CoeffVector> {
    Ok(RegularizedInverse::new(gram, rho_f)?.apply(v))
}
