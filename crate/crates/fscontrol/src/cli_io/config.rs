//! Scenario configuration: a flat `key = value` format with `[section]`
//! headers, `#` comments and comma-separated lists.
//!
//! ```text
//! [domain]
//! lengths = 1, 1
//!
//! [operator]
//! kind = heat
//! diffusivity = 1
//!
//! [basis]
//! order = 5
//!
//! [problem]
//! t_final = 1
//! rho_F = 8000
//!
//! [target]
//! kind = frustum
//! height = 2
//! lo = 0.1, 0.1
//! hi = 0.9, 0.9
//!
//! [actuator]
//! kind = indicator
//! lo = 0.25, 0.25
//! hi = 0.75, 0.75
//! ```
//!
//! `[actuator]` may repeat, one section per channel. Optional keys:
//! `gauss_order` and `min_panels` in `[basis]`, `delta_S` in `[problem]`,
//! `form` (`min` or `product`) for frustum fields. Optional sections:
//! `[scenario]` (`name`), `[initial]` and `[coefficient.a|b|c]` (fields),
//! `[disturbance]` (`times`, `coefficients` row-major per time node),
//! `[constraint]` (`mu`, `n_lambda`, `tol`, `max_iter`, `clip`) and
//! `[output]` (`dir`, `samples`, `field_grid`).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::constrained_dual::{ClipMode, DEFAULT_DUAL_MAX_ITER, DEFAULT_DUAL_TOL};
use crate::error::{Error, Result};
use crate::galerkin_system::{GriddedCoefficients, OperatorCoefficients};
use crate::gram_operator::DEFAULT_DELTA_S;
use crate::spectral_basis::{
    BoxDomain, CoeffVector, FrustumForm, QuadratureSettings, ScalarField, DEFAULT_GAUSS_ORDER,
    DEFAULT_MIN_PANELS,
};
use crate::unconstrained_solver::DEFAULT_TIME_SAMPLES;

/// Built-in field description.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    Constant { value: f64 },
    Indicator { lo: Vec<f64>, hi: Vec<f64>, value: f64 },
    Frustum { height: f64, lo: Vec<f64>, hi: Vec<f64>, form: FrustumForm },
    ProductSine { modes: Vec<Vec<usize>>, weights: Vec<f64> },
}

impl FieldSpec {
    pub fn to_field(&self, domain: &BoxDomain) -> ScalarField {
        match self {
            FieldSpec::Constant { value } => ScalarField::constant(*value),
            FieldSpec::Indicator { lo, hi, value } => ScalarField::IndicatorBox {
                lo: lo.clone(),
                hi: hi.clone(),
                value: *value,
            },
            FieldSpec::Frustum {
                height,
                lo,
                hi,
                form,
            } => ScalarField::frustum(domain, *height, lo.clone(), hi.clone()).frustum_as(*form),
            FieldSpec::ProductSine { modes, weights } => ScalarField::ProductSine {
                terms: modes.iter().cloned().zip(weights.iter().copied()).collect(),
                lengths: domain.lengths().to_vec(),
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            FieldSpec::Constant { .. } => "constant",
            FieldSpec::Indicator { .. } => "indicator",
            FieldSpec::Frustum { .. } => "frustum",
            FieldSpec::ProductSine { .. } => "product_sine",
        }
    }

    fn render(&self, out: &mut String) {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        out.push_str(&format!("kind = {}\n", self.kind()));
        match self {
            FieldSpec::Constant { value } => out.push_str(&format!("value = {value:?}\n")),
            FieldSpec::Indicator { lo, hi, value } => out.push_str(&format!(
                "lo = {}\nhi = {}\nvalue = {value:?}\n",
                list(lo),
                list(hi)
            )),
            FieldSpec::Frustum {
                height,
                lo,
                hi,
                form,
            } => out.push_str(&format!(
                "height = {height:?}\nlo = {}\nhi = {}\nform = {}\n",
                list(lo),
                list(hi),
                form.name()
            )),
            FieldSpec::ProductSine { modes, weights } => {
                let m: Vec<String> = modes
                    .iter()
                    .map(|k| k.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(":"))
                    .collect();
                out.push_str(&format!("modes = {}\nweights = {}\n", m.join(", "), list(weights)));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorSpec {
    Heat { diffusivity: f64 },
    General1D { a: FieldSpec, b: FieldSpec, c: FieldSpec },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSpec {
    /// One bound per channel.
    pub mu: Vec<f64>,
    pub n_lambda: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub clip: ClipMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub samples: usize,
    pub field_grid: usize,
}

/// Validated scenario with defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub lengths: Vec<f64>,
    pub operator: OperatorSpec,
    pub order: usize,
    pub quadrature: QuadratureSettings,
    pub t_final: f64,
    pub rho_f: f64,
    pub delta_s: f64,
    pub target: FieldSpec,
    pub actuators: Vec<FieldSpec>,
    pub initial: Option<FieldSpec>,
    /// Disturbance coefficients on a time grid.
    pub disturbance: Option<(Vec<f64>, Vec<f64>)>,
    pub constraint: Option<ConstraintSpec>,
    pub output: OutputSpec,
}

impl ScenarioConfig {
    pub fn domain(&self) -> Result<BoxDomain> {
        BoxDomain::new(self.lengths.clone())
    }

    pub fn operator_coefficients(&self, domain: &BoxDomain) -> OperatorCoefficients {
        match &self.operator {
            OperatorSpec::Heat { diffusivity } => OperatorCoefficients::Heat {
                diffusivity: *diffusivity,
            },
            OperatorSpec::General1D { a, b, c } => OperatorCoefficients::General1D {
                a: a.to_field(domain),
                b: b.to_field(domain),
                c: c.to_field(domain),
            },
        }
    }

    /// Disturbance as coefficient vectors of length `n_modes`.
    pub fn disturbance_coefficients(&self, n_modes: usize) -> Result<Option<GriddedCoefficients>> {
        let Some((times, flat)) = &self.disturbance else {
            return Ok(None);
        };
        if flat.len() != times.len() * n_modes {
            return Err(Error::validation(
                "coefficients",
                format!(
                    "expected {} values ({} times x {n_modes} modes), found {}",
                    times.len() * n_modes,
                    times.len(),
                    flat.len()
                ),
            ));
        }
        Ok(Some(GriddedCoefficients {
            times: times.clone(),
            values: flat
                .chunks(n_modes)
                .map(CoeffVector::from_column_slice)
                .collect(),
        }))
    }

    /// Canonical text form; parsing it yields an equal configuration.
    pub fn to_text(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        s.push_str(&format!("[scenario]\nname = {}\n\n", self.name));
        s.push_str(&format!("[domain]\nlengths = {}\n\n", list(&self.lengths)));
        match &self.operator {
            OperatorSpec::Heat { diffusivity } => {
                s.push_str(&format!("[operator]\nkind = heat\ndiffusivity = {diffusivity:?}\n\n"))
            }
            OperatorSpec::General1D { a, b, c } => {
                s.push_str("[operator]\nkind = general1d\n\n");
                for (name, f) in [("a", a), ("b", b), ("c", c)] {
                    s.push_str(&format!("[coefficient.{name}]\n"));
                    f.render(&mut s);
                    s.push('\n');
                }
            }
        }
        s.push_str(&format!(
            "[basis]\norder = {}\ngauss_order = {}\nmin_panels = {}\n\n",
            self.order, self.quadrature.gauss_order, self.quadrature.min_panels
        ));
        s.push_str(&format!(
            "[problem]\nt_final = {:?}\nrho_F = {:?}\ndelta_S = {:?}\n\n",
            self.t_final, self.rho_f, self.delta_s
        ));
        s.push_str("[target]\n");
        self.target.render(&mut s);
        s.push('\n');
        for a in &self.actuators {
            s.push_str("[actuator]\n");
            a.render(&mut s);
            s.push('\n');
        }
        if let Some(g) = &self.initial {
            s.push_str("[initial]\n");
            g.render(&mut s);
            s.push('\n');
        }
        if let Some((t, c)) = &self.disturbance {
            s.push_str(&format!(
                "[disturbance]\ntimes = {}\ncoefficients = {}\n\n",
                list(t),
                list(c)
            ));
        }
        if let Some(c) = &self.constraint {
            s.push_str(&format!(
                "[constraint]\nmu = {}\nn_lambda = {}\ntol = {:?}\nmax_iter = {}\nclip = {}\n\n",
                list(&c.mu),
                c.n_lambda,
                c.tol,
                c.max_iter,
                match c.clip {
                    ClipMode::Base => "base",
                    ClipMode::Full => "full",
                }
            ));
        }
        s.push_str(&format!(
            "[output]\ndir = {}\nsamples = {}\nfield_grid = {}\n",
            self.output.dir.display(),
            self.output.samples,
            self.output.field_grid
        ));
        s
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

#[derive(Debug)]
struct Section {
    name: String,
    line: usize,
    entries: BTreeMap<String, (String, usize)>,
    used: std::cell::RefCell<Vec<String>>,
}

impl Section {
    fn new(name: &str, line: usize) -> Self {
        Self {
            name: name.to_string(),
            line,
            entries: BTreeMap::new(),
            used: Default::default(),
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().push(key.to_string());
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.raw(key)
            .ok_or_else(|| Error::validation(key, format!("missing in [{}]", self.name)))
    }

    fn f64_or(&self, key: &str, default: Option<f64>) -> Result<f64> {
        match (self.raw(key), default) {
            (Some(v), _) => parse_f64(key, v),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(Error::validation(key, format!("missing in [{}]", self.name))),
        }
    }

    fn usize_or(&self, key: &str, default: Option<usize>) -> Result<usize> {
        match (self.raw(key), default) {
            (Some(v), _) => v
                .parse()
                .map_err(|_| Error::validation(key, format!("`{v}` is not a nonnegative integer"))),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(Error::validation(key, format!("missing in [{}]", self.name))),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|t| parse_f64(key, t.trim()))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()
    }

    fn check_unused(&self) -> Result<()> {
        let used = self.used.borrow();
        for (k, (_, _)) in &self.entries {
            if !used.contains(k) {
                return Err(Error::validation(
                    k.clone(),
                    format!("unknown key in [{}]", self.name),
                ));
            }
        }
        Ok(())
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| Error::validation(key, format!("`{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(Error::validation(key, "must be finite"));
    }
    Ok(x)
}

fn tokenize(text: &str) -> Result<Vec<Section>> {
    let mut sections = vec![Section::new("", 0)];
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or(Error::Parse {
                line: line_no,
                message: "section header must end with `]`".into(),
            })?;
            let name = name.trim();
            if name.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "empty section name".into(),
                });
            }
            sections.push(Section::new(name, line_no));
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(Error::Parse {
            line: line_no,
            message: format!("expected `key = value`, found `{line}`"),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty key".into(),
            });
        }
        let current = sections.last_mut().expect("at least the root section");
        if current
            .entries
            .insert(key.to_string(), (value.trim().to_string(), line_no))
            .is_some()
        {
            return Err(Error::Parse {
                line: line_no,
                message: format!("duplicate key `{key}` in [{}]", current.name),
            });
        }
    }
    Ok(sections)
}

const SINGLE_SECTIONS: &[&str] = &[
    "scenario",
    "domain",
    "operator",
    "coefficient.a",
    "coefficient.b",
    "coefficient.c",
    "basis",
    "problem",
    "target",
    "initial",
    "disturbance",
    "constraint",
    "output",
];

fn parse_field(sec: &Section, dim: usize) -> Result<FieldSpec> {
    let kind = sec.required("kind")?;
    let corner = |key: &str| -> Result<Vec<f64>> {
        let v = sec
            .list(key)?
            .ok_or_else(|| Error::validation(key, format!("missing in [{}]", sec.name)))?;
        if v.len() != dim {
            return Err(Error::validation(
                key,
                format!("needs {dim} components, found {}", v.len()),
            ));
        }
        Ok(v)
    };
    let field = match kind {
        "constant" => FieldSpec::Constant {
            value: sec.f64_or("value", None)?,
        },
        "indicator" => {
            let (lo, hi) = (corner("lo")?, corner("hi")?);
            if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
                return Err(Error::validation("hi", "each upper corner must exceed the lower one"));
            }
            FieldSpec::Indicator {
                lo,
                hi,
                value: sec.f64_or("value", Some(1.0))?,
            }
        }
        "frustum" => {
            let (lo, hi) = (corner("lo")?, corner("hi")?);
            if lo.iter().zip(&hi).any(|(a, b)| a > b) {
                return Err(Error::validation("hi", "plateau corners are reversed"));
            }
            let form = match sec.raw("form").unwrap_or("min") {
                "min" => FrustumForm::Min,
                "product" => FrustumForm::Product,
                other => {
                    return Err(Error::validation("form", format!("`{other}` is not min or product")))
                }
            };
            FieldSpec::Frustum {
                height: sec.f64_or("height", None)?,
                lo,
                hi,
                form,
            }
        }
        "product_sine" => {
            let modes_raw = sec.required("modes")?;
            let modes = modes_raw
                .split(',')
                .map(|tok| {
                    let k = tok
                        .trim()
                        .split(':')
                        .map(|p| p.trim().parse::<usize>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| Error::validation("modes", format!("bad mode `{}`", tok.trim())))?;
                    if k.len() != dim || k.contains(&0) {
                        return Err(Error::validation(
                            "modes",
                            format!("mode `{}` needs {dim} positive indices", tok.trim()),
                        ));
                    }
                    Ok(k)
                })
                .collect::<Result<Vec<_>>>()?;
            let weights = sec.list("weights")?.unwrap_or_else(|| vec![1.0; modes.len()]);
            if weights.len() != modes.len() {
                return Err(Error::validation("weights", "one weight per mode is required"));
            }
            FieldSpec::ProductSine { modes, weights }
        }
        other => {
            return Err(Error::validation(
                "kind",
                format!("unknown field kind `{other}` in [{}]", sec.name),
            ))
        }
    };
    sec.check_unused()?;
    Ok(field)
}

/// Parses configuration text; see the module docs for the format.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let sections = tokenize(text)?;
    if let Some((k, (_, line))) = sections[0].entries.iter().next() {
        return Err(Error::Parse {
            line: *line,
            message: format!("key `{k}` appears before any section"),
        });
    }
    let mut single: BTreeMap<&str, &Section> = BTreeMap::new();
    let mut actuator_secs = Vec::new();
    for sec in &sections[1..] {
        if sec.name == "actuator" {
            actuator_secs.push(sec);
        } else if SINGLE_SECTIONS.contains(&sec.name.as_str()) {
            if single.insert(sec.name.as_str(), sec).is_some() {
                return Err(Error::Parse {
                    line: sec.line,
                    message: format!("section [{}] appears twice", sec.name),
                });
            }
        } else {
            return Err(Error::Parse {
                line: sec.line,
                message: format!("unknown section [{}]", sec.name),
            });
        }
    }
    let need = |name: &str, key: &str| {
        single
            .get(name)
            .copied()
            .ok_or_else(|| Error::validation(key, format!("section [{name}] is missing")))
    };

    let name = match single.get("scenario") {
        Some(s) => {
            let n = s.raw("name").unwrap_or("scenario").to_string();
            s.check_unused()?;
            n
        }
        None => "scenario".to_string(),
    };

    let dom = need("domain", "lengths")?;
    let lengths = dom
        .list("lengths")?
        .ok_or_else(|| Error::validation("lengths", "missing in [domain]"))?;
    dom.check_unused()?;
    let domain = BoxDomain::new(lengths.clone()).map_err(|e| Error::validation("lengths", e.to_string()))?;
    let dim = domain.dim();
    if dim > 2 {
        return Err(Error::validation("lengths", "only 1D and 2D domains are supported"));
    }

    let operator = match single.get("operator") {
        None => OperatorSpec::Heat { diffusivity: 1.0 },
        Some(op) => {
            let kind = op.raw("kind").unwrap_or("heat");
            let operator = match kind {
                "heat" => {
                    let k = op.f64_or("diffusivity", Some(1.0))?;
                    if k <= 0.0 {
                        return Err(Error::validation("diffusivity", "must be positive"));
                    }
                    OperatorSpec::Heat { diffusivity: k }
                }
                "general1d" => {
                    if dim != 1 {
                        return Err(Error::validation("kind", "general1d requires a 1D domain"));
                    }
                    let coef = |n: &str, default: Option<FieldSpec>| -> Result<FieldSpec> {
                        match (single.get(format!("coefficient.{n}").as_str()), default) {
                            (Some(s), _) => parse_field(s, dim),
                            (None, Some(d)) => Ok(d),
                            (None, None) => Err(Error::validation(
                                n,
                                format!("section [coefficient.{n}] is missing"),
                            )),
                        }
                    };
                    OperatorSpec::General1D {
                        a: coef("a", None)?,
                        b: coef("b", Some(FieldSpec::Constant { value: 0.0 }))?,
                        c: coef("c", Some(FieldSpec::Constant { value: 0.0 }))?,
                    }
                }
                other => {
                    return Err(Error::validation("kind", format!("unknown operator `{other}`")))
                }
            };
            op.check_unused()?;
            operator
        }
    };
    if matches!(operator, OperatorSpec::Heat { .. })
        && ["a", "b", "c"]
            .iter()
            .any(|n| single.contains_key(format!("coefficient.{n}").as_str()))
    {
        return Err(Error::validation("kind", "coefficient sections need kind = general1d"));
    }

    let basis = need("basis", "order")?;
    let order = basis.usize_or("order", None)?;
    if order == 0 {
        return Err(Error::validation("order", "must be at least 1"));
    }
    let quadrature = QuadratureSettings {
        gauss_order: basis.usize_or("gauss_order", Some(DEFAULT_GAUSS_ORDER))?,
        min_panels: basis.usize_or("min_panels", Some(DEFAULT_MIN_PANELS))?,
    };
    if quadrature.gauss_order == 0 {
        return Err(Error::validation("gauss_order", "must be at least 1"));
    }
    basis.check_unused()?;

    let problem = need("problem", "rho_F")?;
    let t_final = problem.f64_or("t_final", None)?;
    if t_final <= 0.0 {
        return Err(Error::validation("t_final", "must be positive"));
    }
    let rho_f = problem.f64_or("rho_F", None)?;
    if rho_f <= 0.0 {
        return Err(Error::validation("rho_F", "must be positive"));
    }
    let delta_s = problem.f64_or("delta_S", Some(DEFAULT_DELTA_S))?;
    if delta_s <= 0.0 {
        return Err(Error::validation("delta_S", "must be positive"));
    }
    problem.check_unused()?;

    let target = parse_field(need("target", "target")?, dim)?;
    if actuator_secs.is_empty() {
        return Err(Error::validation("actuator", "at least one [actuator] section is required"));
    }
    let actuators = actuator_secs
        .iter()
        .map(|s| parse_field(s, dim))
        .collect::<Result<Vec<_>>>()?;
    let initial = single.get("initial").map(|s| parse_field(s, dim)).transpose()?;

    let disturbance = match single.get("disturbance") {
        None => None,
        Some(s) => {
            let times = s
                .list("times")?
                .ok_or_else(|| Error::validation("times", "missing in [disturbance]"))?;
            let coeffs = s
                .list("coefficients")?
                .ok_or_else(|| Error::validation("coefficients", "missing in [disturbance]"))?;
            s.check_unused()?;
            if times.len() < 2 || times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::validation("times", "need at least two increasing nodes"));
            }
            if times[0] != 0.0 || (times[times.len() - 1] - t_final).abs() > 1e-12 * t_final {
                return Err(Error::validation("times", "must start at 0 and end at t_final"));
            }
            Some((times, coeffs))
        }
    };

    let channels = actuators.len();
    let constraint = match single.get("constraint") {
        None => None,
        Some(s) => {
            let mut mu = s
                .list("mu")?
                .ok_or_else(|| Error::validation("mu", "missing in [constraint]"))?;
            if mu.len() == 1 && channels > 1 {
                mu = vec![mu[0]; channels];
            }
            if mu.len() != channels {
                return Err(Error::validation("mu", format!("need one bound per channel ({channels})")));
            }
            if mu.iter().any(|m| *m <= 0.0) {
                return Err(Error::validation("mu", "bounds must be positive"));
            }
            let n_lambda = s.usize_or("n_lambda", Some(30))?;
            if n_lambda == 0 {
                return Err(Error::validation("n_lambda", "must be at least 1"));
            }
            let tol = s.f64_or("tol", Some(DEFAULT_DUAL_TOL))?;
            if tol <= 0.0 {
                return Err(Error::validation("tol", "must be positive"));
            }
            let max_iter = s.usize_or("max_iter", Some(DEFAULT_DUAL_MAX_ITER))?;
            let clip = match s.raw("clip").unwrap_or("base") {
                "base" => ClipMode::Base,
                "full" => ClipMode::Full,
                other => return Err(Error::validation("clip", format!("`{other}` is not base or full"))),
            };
            s.check_unused()?;
            Some(ConstraintSpec {
                mu,
                n_lambda,
                tol,
                max_iter,
                clip,
            })
        }
    };

    let output = match single.get("output") {
        None => OutputSpec {
            dir: PathBuf::from("out").join(&name),
            samples: DEFAULT_TIME_SAMPLES,
            field_grid: 41,
        },
        Some(s) => {
            let out = OutputSpec {
                dir: s
                    .raw("dir")
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("out").join(&name)),
                samples: s.usize_or("samples", Some(DEFAULT_TIME_SAMPLES))?,
                field_grid: s.usize_or("field_grid", Some(41))?,
            };
            s.check_unused()?;
            if out.samples < 1000 {
                return Err(Error::validation("samples", "must be at least 1000"));
            }
            if out.field_grid < 2 {
                return Err(Error::validation("field_grid", "must be at least 2"));
            }
            out
        }
    };

    Ok(ScenarioConfig {
        name,
        lengths,
        operator,
        order,
        quadrature,
        t_final,
        rho_f,
        delta_s,
        target,
        actuators,
        initial,
        disturbance,
        constraint,
        output,
    })
}
