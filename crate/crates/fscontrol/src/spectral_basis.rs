//! Tensor-product sine eigenbasis on box domains, quadrature and projection.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::quadrature::{composite_rule, panel_edges, GaussLegendre};

/// Coefficients of an expansion in basis order.
pub type CoeffVector = DVector<f64>;

/// Default Gauss–Legendre order per panel.
pub const DEFAULT_GAUSS_ORDER: usize = 12;
/// Default lower bound on the number of panels per axis.
pub const DEFAULT_MIN_PANELS: usize = 8;

/// The box `(0, L_1) x ... x (0, L_q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lengths: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lengths: Vec<f64>) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::InvalidDomain("no axis lengths given".into()));
        }
        if let Some(l) = lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidDomain(format!("axis length {l} is not positive")));
        }
        Ok(Self { lengths })
    }

    pub fn interval(length: f64) -> Result<Self> {
        Self::new(vec![length])
    }

    pub fn rectangle(lx: f64, ly: f64) -> Result<Self> {
        Self::new(vec![lx, ly])
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.lengths[axis]
    }

    pub fn contains_closure(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.lengths)
                .all(|(&xi, &l)| (0.0..=l).contains(&xi))
    }
}

/// Frustum variants for the plateau target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrustumForm {
    /// `h * min_i ramp_i(x_i)`: a truncated pyramid with planar faces.
    Min,
    /// `h * prod_i ramp_i(x_i)`: product of one-dimensional trapezoids.
    Product,
}

impl FrustumForm {
    pub fn name(self) -> &'static str {
        match self {
            FrustumForm::Min => "min",
            FrustumForm::Product => "product",
        }
    }
}

type FieldFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A scalar field on a box, described by a built-in shape plus the points
/// where it (or its derivative) is discontinuous.
#[derive(Clone)]
pub enum ScalarField {
    Constant(f64),
    /// `value` on the box `lo < x < hi`, zero elsewhere.
    IndicatorBox { lo: Vec<f64>, hi: Vec<f64>, value: f64 },
    /// Plateau of `height` on `[lo, hi]`, ramping linearly to zero at the
    /// domain boundary.
    Frustum {
        height: f64,
        lo: Vec<f64>,
        hi: Vec<f64>,
        lengths: Vec<f64>,
        form: FrustumForm,
    },
    /// `sum_t w_t * phi_{k_t}(x)` with normalized sine modes of the box with `lengths`.
    ProductSine {
        terms: Vec<(Vec<usize>, f64)>,
        lengths: Vec<f64>,
    },
    /// Arbitrary closure with declared breakpoints per axis.
    Custom {
        f: Arc<FieldFn>,
        breakpoints: Vec<Vec<f64>>,
    },
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            ScalarField::IndicatorBox { lo, hi, value } => f
                .debug_struct("IndicatorBox")
                .field("lo", lo)
                .field("hi", hi)
                .field("value", value)
                .finish(),
            ScalarField::Frustum {
                height,
                lo,
                hi,
                form,
                ..
            } => f
                .debug_struct("Frustum")
                .field("height", height)
                .field("lo", lo)
                .field("hi", hi)
                .field("form", form)
                .finish(),
            ScalarField::ProductSine { terms, .. } => {
                f.debug_struct("ProductSine").field("terms", terms).finish()
            }
            ScalarField::Custom { breakpoints, .. } => f
                .debug_struct("Custom")
                .field("breakpoints", breakpoints)
                .finish_non_exhaustive(),
        }
    }
}

fn sine_mode(k: usize, length: f64, x: f64) -> f64 {
    (2.0 / length).sqrt() * (k as f64 * PI * x / length).sin()
}

fn sine_mode_derivative(k: usize, length: f64, x: f64) -> f64 {
    let w = k as f64 * PI / length;
    (2.0 / length).sqrt() * w * (w * x).cos()
}

impl ScalarField {
    pub fn constant(value: f64) -> Self {
        ScalarField::Constant(value)
    }

    pub fn indicator(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        ScalarField::IndicatorBox { lo, hi, value: 1.0 }
    }

    pub fn frustum(domain: &BoxDomain, height: f64, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        ScalarField::Frustum {
            height,
            lo,
            hi,
            lengths: domain.lengths().to_vec(),
            form: FrustumForm::Min,
        }
    }

    /// Single normalized mode `amplitude * phi_k`.
    pub fn mode(domain: &BoxDomain, k: Vec<usize>, amplitude: f64) -> Self {
        ScalarField::ProductSine {
            terms: vec![(k, amplitude)],
            lengths: domain.lengths().to_vec(),
        }
    }

    pub fn custom(
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        breakpoints: Vec<Vec<f64>>,
    ) -> Self {
        ScalarField::Custom {
            f: Arc::new(f),
            breakpoints,
        }
    }

    /// Checks that the field's shape parameters match a domain of dimension `dim`.
    pub fn check_dim(&self, dim: usize) -> Result<()> {
        let bad = |what: &str, n: usize| {
            Err(Error::InvalidArgument(format!(
                "{what} has {n} components, domain has {dim}"
            )))
        };
        match self {
            ScalarField::Constant(_) => Ok(()),
            ScalarField::IndicatorBox { lo, hi, .. } | ScalarField::Frustum { lo, hi, .. }
                if lo.len() != dim || hi.len() != dim =>
            {
                bad("box corner", lo.len().min(hi.len()))
            }
            ScalarField::Frustum { lengths, .. } if lengths.len() != dim => {
                bad("frustum domain", lengths.len())
            }
            ScalarField::ProductSine { terms, lengths } => {
                if lengths.len() != dim {
                    return bad("sine domain", lengths.len());
                }
                for (k, _) in terms {
                    if k.len() != dim || k.contains(&0) {
                        return Err(Error::InvalidArgument(format!(
                            "sine mode {k:?} must have {dim} positive indices"
                        )));
                    }
                }
                Ok(())
            }
            ScalarField::Custom { breakpoints, .. } if breakpoints.len() > dim => {
                bad("breakpoint list", breakpoints.len())
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::IndicatorBox { lo, hi, value } => {
                let inside = x
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(&xi, (&a, &b))| xi > a && xi < b);
                if inside {
                    *value
                } else {
                    0.0
                }
            }
            ScalarField::Frustum {
                height,
                lo,
                hi,
                lengths,
                form,
            } => {
                let ramps = x.iter().enumerate().map(|(i, &xi)| {
                    let r = if xi < lo[i] {
                        xi / lo[i]
                    } else if xi > hi[i] {
                        (lengths[i] - xi) / (lengths[i] - hi[i])
                    } else {
                        1.0
                    };
                    r.clamp(0.0, 1.0)
                });
                let shape = match form {
                    FrustumForm::Min => ramps.fold(1.0, f64::min),
                    FrustumForm::Product => ramps.product(),
                };
                height * shape
            }
            ScalarField::ProductSine { terms, lengths } => terms
                .iter()
                .map(|(k, w)| {
                    w * k
                        .iter()
                        .zip(lengths)
                        .zip(x)
                        .map(|((&ki, &l), &xi)| sine_mode(ki, l, xi))
                        .product::<f64>()
                })
                .sum(),
            ScalarField::Custom { f, .. } => f(x),
        }
    }

    /// Sorted breakpoints along `axis` (may include points outside the domain,
    /// which quadrature discards).
    pub fn breakpoints(&self, axis: usize) -> Vec<f64> {
        let mut b = match self {
            ScalarField::Constant(_) | ScalarField::ProductSine { .. } => Vec::new(),
            ScalarField::IndicatorBox { lo, hi, .. } | ScalarField::Frustum { lo, hi, .. } => {
                vec![lo[axis], hi[axis]]
            }
            ScalarField::Custom { breakpoints, .. } => {
                breakpoints.get(axis).cloned().unwrap_or_default()
            }
        };
        b.sort_by(f64::total_cmp);
        b
    }

    /// Breakpoints along the second axis that depend on the first coordinate
    /// `x` (the diagonal kinks of a min-form frustum).
    pub fn conditional_breakpoints(&self, x: f64) -> Vec<f64> {
        match self {
            ScalarField::Frustum {
                lo,
                hi,
                lengths,
                form: FrustumForm::Min,
                ..
            } if lo.len() == 2 => {
                let r = if x < lo[0] {
                    x / lo[0]
                } else if x > hi[0] {
                    (lengths[0] - x) / (lengths[0] - hi[0])
                } else {
                    1.0
                }
                .clamp(0.0, 1.0);
                vec![r * lo[1], lengths[1] - r * (lengths[1] - hi[1])]
            }
            _ => Vec::new(),
        }
    }

    fn has_conditional_breakpoints(&self) -> bool {
        matches!(
            self,
            ScalarField::Frustum { lo, form: FrustumForm::Min, .. } if lo.len() == 2
        )
    }

    /// The same frustum evaluated with another form; other fields are returned unchanged.
    pub fn frustum_as(&self, new_form: FrustumForm) -> Self {
        match self {
            ScalarField::Frustum {
                height,
                lo,
                hi,
                lengths,
                ..
            } => ScalarField::Frustum {
                height: *height,
                lo: lo.clone(),
                hi: hi.clone(),
                lengths: lengths.clone(),
                form: new_form,
            },
            other => other.clone(),
        }
    }
}

/// Quadrature parameters used for inner products on the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings {
    pub gauss_order: usize,
    pub min_panels: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            gauss_order: DEFAULT_GAUSS_ORDER,
            min_panels: DEFAULT_MIN_PANELS,
        }
    }
}

/// Tensor-product sine eigenbasis truncated to `K_a` modes per axis.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    domain: BoxDomain,
    per_axis_order: usize,
    indices: Vec<Vec<usize>>,
    eigen_magnitudes: Vec<f64>,
}

/// Builds the basis; in 2D the multi-index `(i, j)` sits at position `(i - 1) K_a + j - 1`.
pub fn build_basis(domain: BoxDomain, per_axis_order: usize) -> Result<SpectralBasis> {
    SpectralBasis::new(domain, per_axis_order)
}

impl SpectralBasis {
    pub fn new(domain: BoxDomain, per_axis_order: usize) -> Result<Self> {
        if per_axis_order == 0 {
            return Err(Error::InvalidArgument(
                "per-axis order must be at least 1".into(),
            ));
        }
        let ka = per_axis_order;
        let indices: Vec<Vec<usize>> = match domain.dim() {
            1 => (1..=ka).map(|k| vec![k]).collect(),
            2 => (1..=ka)
                .flat_map(|i| (1..=ka).map(move |j| vec![i, j]))
                .collect(),
            d => return Err(Error::UnsupportedDimension(d)),
        };
        let eigen_magnitudes = indices
            .iter()
            .map(|k| {
                k.iter()
                    .zip(domain.lengths())
                    .map(|(&ki, &l)| (ki as f64 * PI / l).powi(2))
                    .sum()
            })
            .collect();
        Ok(Self {
            domain,
            per_axis_order,
            indices,
            eigen_magnitudes,
        })
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn per_axis_order(&self) -> usize {
        self.per_axis_order
    }

    /// Number of modes `n_K = K_a^q`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    pub fn multi_index(&self, index: usize) -> Result<&[usize]> {
        self.indices
            .get(index)
            .map(Vec::as_slice)
            .ok_or(Error::IndexOutOfRange {
                index,
                len: self.len(),
            })
    }

    /// Position of a multi-index in basis order.
    pub fn position(&self, k: &[usize]) -> Option<usize> {
        if k.len() != self.dim() || k.iter().any(|&ki| ki == 0 || ki > self.per_axis_order) {
            return None;
        }
        Some(k.iter().fold(0, |acc, &ki| acc * self.per_axis_order + ki - 1))
    }

    /// `sum_i (k_i pi / L_i)^2` for each mode, unsigned and unscaled.
    pub fn eigen_magnitudes(&self) -> &[f64] {
        &self.eigen_magnitudes
    }

    pub fn eval_mode(&self, index: usize, x: &[f64]) -> Result<f64> {
        let k = self.multi_index(index)?;
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, domain has {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(k.iter()
            .zip(self.domain.lengths())
            .zip(x)
            .map(|((&ki, &l), &xi)| sine_mode(ki, l, xi))
            .product())
    }

    /// Value of `sum_q c_q phi_q(x)`.
    pub fn eval_expansion(&self, coeffs: &CoeffVector, x: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(coeffs.iter())
            .map(|(k, c)| {
                c * k
                    .iter()
                    .zip(self.domain.lengths())
                    .zip(x)
                    .map(|((&ki, &l), &xi)| sine_mode(ki, l, xi))
                    .product::<f64>()
            })
            .sum()
    }

    /// The expansion `sum_q c_q phi_q` as a field.
    pub fn expansion_field(&self, coeffs: &CoeffVector) -> ScalarField {
        ScalarField::ProductSine {
            terms: self
                .indices
                .iter()
                .cloned()
                .zip(coeffs.iter().copied())
                .collect(),
            lengths: self.domain.lengths().to_vec(),
        }
    }

    /// Values of the 1D modes `phi_k(x_p)` and their derivatives along `axis`,
    /// as `K_a x n_points` matrices.
    pub(crate) fn axis_tables(&self, axis: usize, xs: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let l = self.domain.length(axis);
        let ka = self.per_axis_order;
        let vals = DMatrix::from_fn(ka, xs.len(), |k, p| sine_mode(k + 1, l, xs[p]));
        let ders = DMatrix::from_fn(ka, xs.len(), |k, p| sine_mode_derivative(k + 1, l, xs[p]));
        (vals, ders)
    }

    pub(crate) fn panels_for(&self, settings: &QuadratureSettings) -> usize {
        settings.min_panels.max(self.per_axis_order)
    }
}

/// Composite Gauss–Legendre points and weights along one axis, split at `breakpoints`.
pub(crate) fn axis_rule(
    length: f64,
    breakpoints: &[f64],
    panels: usize,
    gauss_order: usize,
) -> (Vec<f64>, Vec<f64>) {
    let edges = panel_edges(length, breakpoints, panels);
    composite_rule(&edges, &GaussLegendre::new(gauss_order))
}

/// Composite Gauss–Legendre approximation of the integral of `field` over `domain`.
pub fn integrate(
    field: &ScalarField,
    domain: &BoxDomain,
    panels_per_axis: usize,
    gauss_order: usize,
) -> f64 {
    integrate_fn(field, domain, panels_per_axis, gauss_order, |x| field.value(x))
}

/// Integral of `g` over `domain` with panels split where `field` has kinks.
fn integrate_fn(
    field: &ScalarField,
    domain: &BoxDomain,
    panels: usize,
    gauss_order: usize,
    g: impl Fn(&[f64]) -> f64,
) -> f64 {
    let (xs, wx) = axis_rule(domain.length(0), &field.breakpoints(0), panels, gauss_order);
    match domain.dim() {
        1 => xs.iter().zip(&wx).map(|(&x, &w)| w * g(&[x])).sum(),
        2 => {
            let shared = axis_rule(domain.length(1), &field.breakpoints(1), panels, gauss_order);
            let mut total = 0.0;
            for (&x, &w1) in xs.iter().zip(&wx) {
                let local;
                let (ys, wy) = if field.has_conditional_breakpoints() {
                    local = y_rule(field, domain, x, panels, gauss_order);
                    (&local.0, &local.1)
                } else {
                    (&shared.0, &shared.1)
                };
                let row: f64 = ys.iter().zip(wy).map(|(&y, &w2)| w2 * g(&[x, y])).sum();
                total += w1 * row;
            }
            total
        }
        _ => f64::NAN,
    }
}

fn y_rule(
    field: &ScalarField,
    domain: &BoxDomain,
    x: f64,
    panels: usize,
    gauss_order: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut b = field.breakpoints(1);
    b.extend(field.conditional_breakpoints(x));
    b.sort_by(f64::total_cmp);
    axis_rule(domain.length(1), &b, panels, gauss_order)
}

/// `L_2` norm of a field by quadrature.
pub fn field_norm(field: &ScalarField, domain: &BoxDomain, settings: &QuadratureSettings) -> f64 {
    integrate_fn(field, domain, settings.min_panels, settings.gauss_order, |x| {
        field.value(x).powi(2)
    })
    .max(0.0)
    .sqrt()
}

/// Coefficients `<field, phi_q>` with default quadrature.
pub fn project_field(field: &ScalarField, basis: &SpectralBasis) -> CoeffVector {
    project_field_with(field, basis, &QuadratureSettings::default())
}

/// Coefficients `<field, phi_q>` with panels split at the field's breakpoints
/// and at least `max(K_a, min_panels)` panels per axis.
pub fn project_field_with(
    field: &ScalarField,
    basis: &SpectralBasis,
    settings: &QuadratureSettings,
) -> CoeffVector {
    let panels = basis.panels_for(settings);
    let dom = basis.domain();
    match basis.dim() {
        1 => {
            let (xs, ws) = axis_rule(dom.length(0), &field.breakpoints(0), panels, settings.gauss_order);
            let (sx, _) = basis.axis_tables(0, &xs);
            let fw = DVector::from_iterator(
                xs.len(),
                xs.iter().zip(&ws).map(|(&x, &w)| w * field.value(&[x])),
            );
            sx * fw
        }
        _ => {
            let (xs, wx) = axis_rule(dom.length(0), &field.breakpoints(0), panels, settings.gauss_order);
            let (sx, _) = basis.axis_tables(0, &xs);
            let c = if field.has_conditional_breakpoints() {
                // Inner rule rebuilt per abscissa so panels split on the kinks.
                let ka = basis.per_axis_order();
                let mut c = DMatrix::zeros(ka, ka);
                for (p, (&x, &w1)) in xs.iter().zip(&wx).enumerate() {
                    let (ys, wy) = y_rule(field, dom, x, panels, settings.gauss_order);
                    let (sy, _) = basis.axis_tables(1, &ys);
                    let fy = DVector::from_iterator(
                        ys.len(),
                        ys.iter().zip(&wy).map(|(&y, &w2)| w2 * field.value(&[x, y])),
                    );
                    let inner = sy * fy;
                    c += sx.column(p) * inner.transpose() * w1;
                }
                c
            } else {
                let (ys, wy) = axis_rule(dom.length(1), &field.breakpoints(1), panels, settings.gauss_order);
                let (sy, _) = basis.axis_tables(1, &ys);
                let fw = DMatrix::from_fn(xs.len(), ys.len(), |p, q| {
                    wx[p] * wy[q] * field.value(&[xs[p], ys[q]])
                });
                sx * fw * sy.transpose()
            };
            // c[(i, j)] belongs to multi-index (i + 1, j + 1): row-major flattening.
            let ka = basis.per_axis_order();
            DVector::from_fn(ka * ka, |q, _| c[(q / ka, q % ka)])
        }
    }
}

/// Squared-norm tail `||f||^2 - ||P_K f||^2` (clamped at zero), as a norm.
pub fn projection_tail(
    field: &ScalarField,
    basis: &SpectralBasis,
    settings: &QuadratureSettings,
) -> f64 {
    let fine = QuadratureSettings {
        gauss_order: settings.gauss_order,
        min_panels: basis.panels_for(settings).max(64),
    };
    let full = field_norm(field, basis.domain(), &fine).powi(2);
    let proj = project_field_with(field, basis, settings).norm_squared();
    (full - proj).max(0.0).sqrt()
}

/// Euclidean norm of a coefficient vector (the `L_2` norm of the expansion).
pub fn coeff_norm(c: &CoeffVector) -> f64 {
    c.norm()
}
