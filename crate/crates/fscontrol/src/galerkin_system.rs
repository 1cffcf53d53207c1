//! Truncated generator, input matrix, matrix exponentials and exact
//! propagation of piecewise-linear inputs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::quadrature::composite_rule;
use crate::quadrature::{panel_edges, GaussLegendre};
use crate::spectral_basis::{
    project_field_with, CoeffVector, QuadratureSettings, ScalarField, SpectralBasis,
};

/// Coefficients of the elliptic operator.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum OperatorCoefficients {
    /// `-diffusivity * Laplacian`.
    Heat { diffusivity: f64 },
    /// `-(a u')' + b u' + c u` on an interval.
    General1D {
        a: ScalarField,
        b: ScalarField,
        c: ScalarField,
    },
}

/// Truncated linear system `c' = A c + M u` with its horizon and projected target.
#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    basis: SpectralBasis,
    a: DMatrix<f64>,
    diagonal: Option<DVector<f64>>,
    m_beta: DMatrix<f64>,
    t_final: f64,
    theta_ro: CoeffVector,
}

impl GalerkinSystem {
    /// Validates dimensions and strict stability of `a`.
    pub fn new(
        basis: SpectralBasis,
        a: DMatrix<f64>,
        m_beta: DMatrix<f64>,
        t_final: f64,
        theta_ro: CoeffVector,
    ) -> Result<Self> {
        let n = basis.len();
        if a.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "generator is {}x{}, basis has {n} modes",
                a.nrows(),
                a.ncols()
            )));
        }
        if m_beta.nrows() != n || m_beta.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "input matrix is {}x{}, expected {n} rows and at least one channel",
                m_beta.nrows(),
                m_beta.ncols()
            )));
        }
        if theta_ro.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "target has {} coefficients, basis has {n} modes",
                theta_ro.len()
            )));
        }
        if !(t_final.is_finite() && t_final >= 0.0) {
            return Err(Error::InvalidArgument(format!("horizon {t_final} must be >= 0")));
        }
        check_stability(&a)?;
        let diagonal = is_diagonal(&a).then(|| a.diagonal());
        Ok(Self {
            basis,
            a,
            diagonal,
            m_beta,
            t_final,
            theta_ro,
        })
    }

    pub fn with_theta_ro(mut self, theta_ro: CoeffVector) -> Result<Self> {
        if theta_ro.len() != self.n_modes() {
            return Err(Error::DimensionMismatch("target length".into()));
        }
        self.theta_ro = theta_ro;
        Ok(self)
    }

    pub fn basis(&self) -> &SpectralBasis {
        &self.basis
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Diagonal of the generator when it is diagonal.
    pub fn diagonal(&self) -> Option<&DVector<f64>> {
        self.diagonal.as_ref()
    }

    pub fn input_matrix(&self) -> &DMatrix<f64> {
        &self.m_beta
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn theta_ro(&self) -> &CoeffVector {
        &self.theta_ro
    }

    pub fn n_modes(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_channels(&self) -> usize {
        self.m_beta.ncols()
    }

    /// `exp(A t)`.
    pub fn exp(&self, t: f64) -> DMatrix<f64> {
        match &self.diagonal {
            Some(d) => DMatrix::from_diagonal(&d.map(|a| (a * t).exp())),
            None => matrix_exponential(&self.a, t),
        }
    }

    pub(crate) fn segment_maps(&self, dt: f64) -> SegmentMaps {
        SegmentMaps::new(&self.a, self.diagonal.as_ref(), &self.m_beta, dt)
    }
}

fn is_diagonal(a: &DMatrix<f64>) -> bool {
    a.iter()
        .enumerate()
        .all(|(idx, &v)| v == 0.0 || idx % a.nrows() == idx / a.nrows())
}

fn check_stability(a: &DMatrix<f64>) -> Result<()> {
    let max_real = if is_diagonal(a) {
        a.diagonal().max()
    } else {
        a.clone()
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    if max_real.is_nan() || max_real >= 0.0 {
        return Err(Error::SpectralInstability { max_real });
    }
    Ok(())
}

/// Assembles `A_K`; errors if any eigenvalue has nonnegative real part.
pub fn assemble_operator(
    coeffs: &OperatorCoefficients,
    basis: &SpectralBasis,
) -> Result<DMatrix<f64>> {
    let a = match coeffs {
        OperatorCoefficients::Heat { diffusivity } => {
            if !(diffusivity.is_finite() && *diffusivity > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "diffusivity {diffusivity} must be positive"
                )));
            }
            DMatrix::from_diagonal(&DVector::from_iterator(
                basis.len(),
                basis.eigen_magnitudes().iter().map(|l| -diffusivity * l),
            ))
        }
        OperatorCoefficients::General1D { a, b, c } => {
            if basis.dim() != 1 {
                return Err(Error::InvalidArgument(
                    "variable-coefficient operators are only supported in 1D".into(),
                ));
            }
            assemble_general_1d(a, b, c, basis)
        }
    };
    check_stability(&a)?;
    Ok(a)
}

/// Row `l` tests the equation against `phi_l`; column `k` is the trial mode.
fn assemble_general_1d(
    a: &ScalarField,
    b: &ScalarField,
    c: &ScalarField,
    basis: &SpectralBasis,
) -> DMatrix<f64> {
    let settings = QuadratureSettings::default();
    let length = basis.domain().length(0);
    let mut breaks = a.breakpoints(0);
    breaks.extend(b.breakpoints(0));
    breaks.extend(c.breakpoints(0));
    let panels = 2 * basis.per_axis_order().max(settings.min_panels);
    let edges = panel_edges(length, &breaks, panels);
    let (xs, ws) = composite_rule(&edges, &GaussLegendre::new(settings.gauss_order));
    let (phi, dphi) = basis.axis_tables(0, &xs);
    let weighted = |f: &ScalarField, t: &DMatrix<f64>| {
        let mut out = t.clone();
        for (p, mut col) in out.column_iter_mut().enumerate() {
            col *= ws[p] * f.value(&[xs[p]]);
        }
        out
    };
    let stiffness = &dphi * weighted(a, &dphi).transpose();
    // (phi_l, b phi_k') sits at [l, k].
    let drift = &phi * weighted(b, &dphi).transpose();
    let mass = &phi * weighted(c, &phi).transpose();
    -(stiffness + drift + mass)
}

/// Input matrix with column `i` equal to the projection of actuator `i`.
pub fn assemble_input_matrix(
    actuators: &[ScalarField],
    basis: &SpectralBasis,
) -> Result<DMatrix<f64>> {
    assemble_input_matrix_with(actuators, basis, &QuadratureSettings::default())
}

pub fn assemble_input_matrix_with(
    actuators: &[ScalarField],
    basis: &SpectralBasis,
    settings: &QuadratureSettings,
) -> Result<DMatrix<f64>> {
    if actuators.is_empty() {
        return Err(Error::InvalidArgument("at least one actuator is required".into()));
    }
    let cols: Vec<CoeffVector> = actuators
        .iter()
        .map(|f| project_field_with(f, basis, settings))
        .collect();
    Ok(DMatrix::from_columns(&cols))
}

/// `exp(A t)`: entrywise on diagonal matrices, scaling and squaring with a
/// Padé kernel otherwise.
pub fn matrix_exponential(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    if is_diagonal(a) {
        return DMatrix::from_diagonal(&a.diagonal().map(|x| (x * t).exp()));
    }
    if t == 0.0 {
        return DMatrix::identity(a.nrows(), a.ncols());
    }
    (a * t).exp()
}

/// Disturbance source given as coefficient vectors on a time grid (linear in between).
#[derive(Debug, Clone)]
pub struct GriddedCoefficients {
    pub times: Vec<f64>,
    pub values: Vec<CoeffVector>,
}

/// `exp(A t_F) g + int_0^{t_F} exp(A (t_F - s)) f(s) ds` with `f` linear between grid nodes.
pub fn free_response(
    sys: &GalerkinSystem,
    g: Option<&CoeffVector>,
    f_s: Option<&GriddedCoefficients>,
) -> Result<CoeffVector> {
    let n = sys.n_modes();
    let mut out = CoeffVector::zeros(n);
    if let Some(g) = g {
        if g.len() != n {
            return Err(Error::DimensionMismatch("initial data length".into()));
        }
        out += sys.exp(sys.t_final()) * g;
    }
    if let Some(f) = f_s {
        if f.times.len() != f.values.len() || f.times.len() < 2 {
            return Err(Error::InvalidArgument(
                "disturbance needs at least two time nodes with one vector each".into(),
            ));
        }
        if f.values.iter().any(|v| v.len() != n) {
            return Err(Error::DimensionMismatch("disturbance coefficient length".into()));
        }
        let values = DMatrix::from_fn(f.times.len(), n, |r, c| f.values[r][c]);
        let signal = SampledSignal::new(f.times.clone(), values)?;
        out += propagate(sys, &DMatrix::identity(n, n), &signal)?;
    }
    Ok(out)
}

/// `theta_r - free`, entrywise.
pub fn compute_theta_ro(theta_r: &CoeffVector, free: &CoeffVector) -> Result<CoeffVector> {
    if theta_r.len() != free.len() {
        return Err(Error::DimensionMismatch("target and free response lengths".into()));
    }
    Ok(theta_r - free)
}

/// Time signal with `m` channels, linear between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    times: Vec<f64>,
    values: DMatrix<f64>,
}

impl SampledSignal {
    /// `values` has one row per time node and one column per channel.
    pub fn new(times: Vec<f64>, values: DMatrix<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidArgument("a signal needs at least two samples".into()));
        }
        if values.nrows() != times.len() || values.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} time nodes but {}x{} values",
                times.len(),
                values.nrows(),
                values.ncols()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("signal times must be strictly increasing".into()));
        }
        Ok(Self { times, values })
    }

    /// Samples `f` on `n` uniformly spaced nodes of `[0, t_final]`.
    pub fn sample(
        t_final: f64,
        n: usize,
        m: usize,
        mut f: impl FnMut(f64) -> DVector<f64>,
    ) -> Result<Self> {
        let times = uniform_grid(t_final, n);
        let mut values = DMatrix::zeros(times.len(), m);
        for (r, &t) in times.iter().enumerate() {
            values.row_mut(r).copy_from(&f(t).transpose());
        }
        Self::new(times, values)
    }

    pub fn zeros(t_final: f64, n: usize, m: usize) -> Result<Self> {
        Self::new(uniform_grid(t_final, n), DMatrix::zeros(n.max(2), m))
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n_channels(&self) -> usize {
        self.values.ncols()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Linear interpolation, constant extension outside the grid.
    pub fn value_at(&self, t: f64) -> DVector<f64> {
        let last = self.times.len() - 1;
        if t <= self.times[0] {
            return self.values.row(0).transpose();
        }
        if t >= self.times[last] {
            return self.values.row(last).transpose();
        }
        let j = self.times.partition_point(|&s| s <= t) - 1;
        let (t0, t1) = (self.times[j], self.times[j + 1]);
        let w = (t - t0) / (t1 - t0);
        (self.values.row(j) * (1.0 - w) + self.values.row(j + 1) * w).transpose()
    }

    /// Exact `int |u|^2` of the piecewise-linear interpolant (summed over channels).
    pub fn l2_norm_squared(&self) -> f64 {
        let mut total = 0.0;
        for (j, w) in self.times.windows(2).enumerate() {
            let dt = w[1] - w[0];
            for c in 0..self.values.ncols() {
                let (a, b) = (self.values[(j, c)], self.values[(j + 1, c)]);
                total += dt * (a * a + a * b + b * b) / 3.0;
            }
        }
        total
    }

    /// Exact `int u_1 . u_2` for two signals sharing a grid.
    pub fn l2_inner(&self, other: &SampledSignal) -> f64 {
        let mut total = 0.0;
        for (j, w) in self.times.windows(2).enumerate() {
            let dt = w[1] - w[0];
            for c in 0..self.values.ncols() {
                let (a0, a1) = (self.values[(j, c)], self.values[(j + 1, c)]);
                let (b0, b1) = (other.values[(j, c)], other.values[(j + 1, c)]);
                total += dt * (2.0 * a0 * b0 + a0 * b1 + a1 * b0 + 2.0 * a1 * b1) / 6.0;
            }
        }
        total
    }

    /// Largest absolute sample over all channels.
    pub fn linf_norm(&self) -> f64 {
        self.values.amax()
    }

    /// Same grid, values transformed entrywise by channel.
    pub fn map_channels(&self, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        let mut values = self.values.clone();
        for c in 0..values.ncols() {
            for r in 0..values.nrows() {
                values[(r, c)] = f(c, values[(r, c)]);
            }
        }
        Self {
            times: self.times.clone(),
            values,
        }
    }
}

/// `n` uniformly spaced nodes including both ends (at least two).
pub fn uniform_grid(t_final: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let mut t: Vec<f64> = (0..n)
        .map(|i| t_final * i as f64 / (n - 1) as f64)
        .collect();
    t[n - 1] = t_final;
    t
}

/// `c_K(t_F; u)` for a piecewise-linear `u`, integrated exactly segment by segment.
pub fn simulate_controlled(sys: &GalerkinSystem, u: &SampledSignal) -> Result<CoeffVector> {
    if u.n_channels() != sys.n_channels() {
        return Err(Error::DimensionMismatch(format!(
            "signal has {} channels, system has {}",
            u.n_channels(),
            sys.n_channels()
        )));
    }
    let tol = 1e-12 * sys.t_final().max(1.0);
    let (t0, t1) = (u.times[0], *u.times.last().unwrap());
    if t0.abs() > tol || (t1 - sys.t_final()).abs() > tol {
        return Err(Error::InvalidArgument(format!(
            "signal covers [{t0}, {t1}], horizon is [0, {}]",
            sys.t_final()
        )));
    }
    propagate(sys, sys.input_matrix(), u)
}

/// Forward recursion `c_{j+1} = e^{A dt} c_j + W0 u_j + W1 u_{j+1}` from `c_0 = 0`.
fn propagate(sys: &GalerkinSystem, input: &DMatrix<f64>, u: &SampledSignal) -> Result<CoeffVector> {
    let mut c = CoeffVector::zeros(sys.n_modes());
    let mut maps: Option<SegmentMaps> = None;
    let scale = sys.t_final().max(1.0);
    for (j, w) in u.times.windows(2).enumerate() {
        let dt = w[1] - w[0];
        let reuse = matches!(&maps, Some(m) if (m.dt - dt).abs() <= 1e-13 * scale);
        if !reuse {
            maps = Some(SegmentMaps::new(&sys.a, sys.diagonal.as_ref(), input, dt));
        }
        let m = maps.as_ref().expect("segment maps initialised");
        let u0 = u.values.row(j).transpose();
        let u1 = u.values.row(j + 1).transpose();
        c = &m.exp * c + &m.w0 * u0 + &m.w1 * u1;
    }
    Ok(c)
}

/// Exact one-step maps for a linear input over a segment of length `dt`.
#[derive(Debug, Clone)]
pub(crate) struct SegmentMaps {
    pub dt: f64,
    /// `exp(A dt)`.
    pub exp: DMatrix<f64>,
    /// `int_0^dt exp(A (dt - s)) (1 - s/dt) ds * M`.
    pub w0: DMatrix<f64>,
    /// `int_0^dt exp(A (dt - s)) (s/dt) ds * M`.
    pub w1: DMatrix<f64>,
}

impl SegmentMaps {
    pub fn new(
        a: &DMatrix<f64>,
        diagonal: Option<&DVector<f64>>,
        input: &DMatrix<f64>,
        dt: f64,
    ) -> Self {
        let n = a.nrows();
        let (exp, p1, p2) = match diagonal {
            Some(d) => {
                let z = d * dt;
                (
                    DMatrix::from_diagonal(&z.map(f64::exp)),
                    DMatrix::from_diagonal(&z.map(phi1)),
                    DMatrix::from_diagonal(&z.map(phi2)),
                )
            }
            None => {
                let mut big = DMatrix::zeros(3 * n, 3 * n);
                big.view_mut((0, 0), (n, n)).copy_from(&(a * dt));
                big.view_mut((0, n), (n, n)).fill_with_identity();
                big.view_mut((n, 2 * n), (n, n)).fill_with_identity();
                let e = big.exp();
                (
                    e.view((0, 0), (n, n)).into_owned(),
                    e.view((0, n), (n, n)).into_owned(),
                    e.view((0, 2 * n), (n, n)).into_owned(),
                )
            }
        };
        let w1 = &p2 * input * dt;
        let w0 = (&p1 - &p2) * input * dt;
        Self { dt, exp, w0, w1 }
    }
}

/// `(e^z - 1) / z`.
pub(crate) fn phi1(z: f64) -> f64 {
    if z.abs() < 0.1 {
        taylor_tail(z, 1)
    } else {
        z.exp_m1() / z
    }
}

/// `(e^z - 1 - z) / z^2`.
pub(crate) fn phi2(z: f64) -> f64 {
    if z.abs() < 0.1 {
        taylor_tail(z, 2)
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// `sum_{k >= 0} z^k / (k + shift)!`, truncated for `|z| < 0.1`.
fn taylor_tail(z: f64, shift: u32) -> f64 {
    let mut fact: f64 = (1..=shift).map(f64::from).product();
    let mut zk = 1.0;
    let mut sum = 1.0 / fact;
    for k in 1..16u32 {
        fact *= f64::from(k + shift);
        zk *= z;
        sum += zk / fact;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_basis::{build_basis, BoxDomain};

    fn heat_1d(length: f64, k: usize) -> (SpectralBasis, DMatrix<f64>) {
        let basis = build_basis(BoxDomain::interval(length).unwrap(), k).unwrap();
        let a = assemble_operator(&OperatorCoefficients::Heat { diffusivity: 1.0 }, &basis).unwrap();
        (basis, a)
    }

    /// 1D heat on (0, pi) with K = 1: the scalar system A = -1, M = 1.
    fn scalar_system(t_final: f64) -> GalerkinSystem {
        let (basis, a) = heat_1d(std::f64::consts::PI, 1);
        GalerkinSystem::new(basis, a, DMatrix::from_element(1, 1, 1.0), t_final, CoeffVector::zeros(1))
            .unwrap()
    }

    #[test]
    fn heat_operator_is_diagonal_formula() {
        let (_, a) = heat_1d(2.0, 2);
        assert!((a[(0, 0)] + 2.46740110027234).abs() < 1e-12);
        assert!((a[(1, 1)] + 9.869604401089358).abs() < 1e-12);
        assert_eq!(a[(0, 1)], 0.0);
    }

    #[test]
    fn general_matches_heat_for_unit_coefficients() {
        let (basis, heat) = heat_1d(2.0, 6);
        let gen = OperatorCoefficients::General1D {
            a: ScalarField::constant(1.0),
            b: ScalarField::constant(0.0),
            c: ScalarField::constant(0.0),
        };
        let a = assemble_operator(&gen, &basis).unwrap();
        assert!((a - &heat).amax() < 1e-10);
        let reaction = OperatorCoefficients::General1D {
            a: ScalarField::constant(1.0),
            b: ScalarField::constant(0.0),
            c: ScalarField::constant(1.0),
        };
        let a = assemble_operator(&reaction, &basis).unwrap();
        let expected = heat - DMatrix::identity(6, 6);
        assert!((a - expected).amax() < 1e-10);
    }

    #[test]
    fn unstable_operator_rejected() {
        let (basis, _) = heat_1d(1.0, 3);
        let gen = OperatorCoefficients::General1D {
            a: ScalarField::constant(1.0),
            b: ScalarField::constant(0.0),
            c: ScalarField::constant(-50.0),
        };
        assert!(matches!(
            assemble_operator(&gen, &basis),
            Err(Error::SpectralInstability { .. })
        ));
    }

    #[test]
    fn input_matrix_examples() {
        let d = BoxDomain::interval(2.0).unwrap();
        let basis = build_basis(d.clone(), 4).unwrap();
        let m = assemble_input_matrix(&[ScalarField::mode(&d, vec![2], 1.0)], &basis).unwrap();
        let mut e2 = DVector::zeros(4);
        e2[1] = 1.0;
        assert!((m.column(0) - e2).amax() < 1e-12);

        let d2 = BoxDomain::rectangle(1.0, 1.0).unwrap();
        let b2 = build_basis(d2, 5).unwrap();
        let ind = ScalarField::indicator(vec![0.25, 0.25], vec![0.75, 0.75]);
        let m2 = assemble_input_matrix(&[ind], &b2).unwrap();
        let q = b2.position(&[2, 2]).unwrap();
        assert!(m2[(q, 0)].abs() < 1e-14);
        // (1,1) entry: (2 * sqrt2/pi * cos(pi/4))^2 = (2/pi)^2
        let exact = (2.0 / std::f64::consts::PI).powi(2);
        assert!((m2[(0, 0)] - exact).abs() < 1e-13);
    }

    #[test]
    fn exponential_examples() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0]));
        let e = matrix_exponential(&a, 1.0);
        assert_eq!(e[(0, 0)], (-1.0f64).exp());
        assert_eq!(e[(1, 1)], (-2.0f64).exp());
        let dense = DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.2, -3.0]);
        assert_eq!(matrix_exponential(&dense, 0.0), DMatrix::identity(2, 2));
    }

    #[test]
    fn free_response_examples() {
        let (basis, a) = heat_1d(2.0, 3);
        let m = DMatrix::from_element(3, 1, 1.0);
        let sys = GalerkinSystem::new(basis, a, m, 1.0, CoeffVector::zeros(3)).unwrap();
        assert_eq!(free_response(&sys, None, None).unwrap(), CoeffVector::zeros(3));
        let g = CoeffVector::from_vec(vec![1.0, 0.0, 0.0]);
        let r = free_response(&sys, Some(&g), None).unwrap();
        let lam = (std::f64::consts::PI / 2.0).powi(2);
        assert!((r[0] - (-lam).exp()).abs() < 1e-15);
        let f = GriddedCoefficients {
            times: vec![0.0, 1.0],
            values: vec![g.clone(), g.clone()],
        };
        let r = free_response(&sys, None, Some(&f)).unwrap();
        assert!((r[0] - (1.0 - (-lam).exp()) / lam).abs() < 1e-14);
        assert!(r[1].abs() < 1e-15);
    }

    #[test]
    fn theta_ro_arithmetic() {
        let r = compute_theta_ro(
            &CoeffVector::from_vec(vec![1.0, 0.0]),
            &CoeffVector::from_vec(vec![0.2, -0.1]),
        )
        .unwrap();
        assert!((r - CoeffVector::from_vec(vec![0.8, 0.1])).amax() < 1e-15);
    }

    #[test]
    fn scalar_simulation() {
        let sys = scalar_system(1.0);
        let zero = SampledSignal::zeros(1.0, 11, 1).unwrap();
        assert_eq!(simulate_controlled(&sys, &zero).unwrap()[0], 0.0);
        let one = SampledSignal::sample(1.0, 7, 1, |_| DVector::from_element(1, 1.0)).unwrap();
        let c = simulate_controlled(&sys, &one).unwrap();
        assert!((c[0] - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
        // u(t) = t: int_0^1 e^{-(1-s)} s ds = e^{-1}
        let ramp = SampledSignal::sample(1.0, 3, 1, |t| DVector::from_element(1, t)).unwrap();
        let c = simulate_controlled(&sys, &ramp).unwrap();
        assert!((c[0] - (-1.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn dense_and_diagonal_segment_maps_agree() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-0.5, -3.0, -40.0]));
        let m = DMatrix::from_column_slice(3, 1, &[1.0, -2.0, 0.5]);
        let d = a.diagonal();
        for dt in [1e-4, 0.03, 0.7] {
            let fast = SegmentMaps::new(&a, Some(&d), &m, dt);
            let slow = SegmentMaps::new(&a, None, &m, dt);
            assert!((fast.exp - slow.exp).amax() < 1e-14);
            assert!((fast.w0 - slow.w0).amax() < 1e-14);
            assert!((fast.w1 - slow.w1).amax() < 1e-14);
        }
    }

    #[test]
    fn phi_functions_continuous_at_switch() {
        for z in [-0.1 + 1e-12, -0.1 - 1e-12, 0.1 - 1e-12f64] {
            let direct1 = z.exp_m1() / z;
            let direct2 = (z.exp_m1() - z) / (z * z);
            assert!((phi1(z) - direct1).abs() < 1e-14);
            assert!((phi2(z) - direct2).abs() < 1e-13);
        }
        assert_eq!(phi1(0.0), 1.0);
        assert_eq!(phi2(0.0), 0.5);
    }

    #[test]
    fn signal_norms_exact() {
        let s = SampledSignal::sample(2.0, 5, 1, |t| DVector::from_element(1, t)).unwrap();
        assert!((s.l2_norm_squared() - 8.0 / 3.0).abs() < 1e-14);
        assert!((s.value_at(0.75)[0] - 0.75).abs() < 1e-15);
        assert_eq!(s.linf_norm(), 2.0);
        assert!(SampledSignal::new(vec![0.0, 0.0], DMatrix::zeros(2, 1)).is_err());
    }
}
