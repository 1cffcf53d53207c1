//! Acceptance suite. Prints one PASS/FAIL line per checked quantity and exits
//! nonzero when any check fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use fscontrol::constrained_dual::{
    build_multiplier_system, clip_feasible, constrained_report, projected_cost, ClipMode,
    DualProblem, DEFAULT_DUAL_MAX_ITER, DEFAULT_DUAL_TOL,
};
use fscontrol::galerkin_system::{
    assemble_input_matrix, assemble_operator, GalerkinSystem, OperatorCoefficients, SampledSignal,
};
use fscontrol::gram_operator::{gram_quadrature_oracle, lyapunov_residual, GramOperator};
use fscontrol::spectral_basis::{build_basis, project_field, BoxDomain, ScalarField};
use fscontrol::unconstrained_solver::{
    l2_distance_nested, report, solve_unconstrained, target_tail_bound, truncation_bound_1d,
};
use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SAMPLES: usize = 10_001;

struct Suite {
    failed: usize,
    total: usize,
}

impl Suite {
    fn check(&mut self, criterion: u32, what: &str, ok: bool, detail: String) {
        self.total += 1;
        if !ok {
            self.failed += 1;
        }
        println!(
            "{} [{criterion:>2}] {what}: {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
    }

    fn rel(&mut self, criterion: u32, what: &str, got: f64, want: f64, tol: f64) {
        let dev = (got - want) / want;
        self.check(
            criterion,
            what,
            dev.abs() <= tol,
            format!("{got:.6} vs {want} ({:+.3}%, tol {:.1}%)", 100.0 * dev, 100.0 * tol),
        );
    }

    fn abs(&mut self, criterion: u32, what: &str, got: f64, want: f64, tol: f64) {
        let dev = got - want;
        self.check(
            criterion,
            what,
            dev.abs() <= tol,
            format!("{got:.6} vs {want} ({dev:+.3e}, tol {tol:.1e})"),
        );
    }

    fn runtime(&mut self, criterion: u32, start: Instant, limit: f64) {
        let s = start.elapsed().as_secs_f64();
        self.check(criterion, "runtime", s < limit, format!("{s:.3} s (limit {limit} s)"));
    }
}

struct Fixture {
    name: &'static str,
    sys: Arc<GalerkinSystem>,
    gram: GramOperator,
    beta: ScalarField,
    target: ScalarField,
}

fn fixture(
    name: &'static str,
    domain: BoxDomain,
    order: usize,
    beta: ScalarField,
    target: ScalarField,
) -> Fixture {
    let basis = build_basis(domain, order).unwrap();
    let a = assemble_operator(&OperatorCoefficients::Heat { diffusivity: 1.0 }, &basis).unwrap();
    let m = assemble_input_matrix(std::slice::from_ref(&beta), &basis).unwrap();
    let theta = project_field(&target, &basis);
    let sys = Arc::new(GalerkinSystem::new(basis, a, m, 1.0, theta).unwrap());
    let gram = GramOperator::compute(&sys, 1e-3).unwrap();
    Fixture {
        name,
        sys,
        gram,
        beta,
        target,
    }
}

fn scalar_fixture() -> Fixture {
    let d = BoxDomain::interval(PI).unwrap();
    fixture(
        "scalar",
        d.clone(),
        1,
        ScalarField::mode(&d, vec![1], 1.0),
        ScalarField::mode(&d, vec![1], 1.0),
    )
}

fn line_fixture(order: usize) -> Fixture {
    let d = BoxDomain::interval(2.0).unwrap();
    let target = ScalarField::ProductSine {
        terms: vec![(vec![1], 1.0), (vec![3], 0.3)],
        lengths: vec![2.0],
    };
    fixture("1D", d, order, ScalarField::indicator(vec![0.9], vec![1.1]), target)
}

fn square_fixture() -> Fixture {
    let d = BoxDomain::rectangle(1.0, 1.0).unwrap();
    let target = ScalarField::frustum(&d, 2.0, vec![0.1, 0.1], vec![0.9, 0.9]);
    fixture(
        "2D",
        d,
        5,
        ScalarField::indicator(vec![0.25, 0.25], vec![0.75, 0.75]),
        target,
    )
}

fn target_norm(s: &mut Suite) {
    let start = Instant::now();
    let f = square_fixture();
    let norm = f.sys.theta_ro().norm();
    s.abs(1, "theta_ro norm (min-form frustum)", norm, 1.7289, 5e-3);
    if (norm - 1.7289).abs() > 5e-3 {
        let alt = project_field(
            &f.target.frustum_as(fscontrol::spectral_basis::FrustumForm::Product),
            f.sys.basis(),
        )
        .norm();
        s.abs(1, "theta_ro norm (product-form frustum)", alt, 1.7289, 5e-3);
    }
    s.runtime(1, start, 1.0);
}

fn unconstrained(s: &mut Suite, criterion: u32, rho: f64, want: [f64; 4]) {
    let start = Instant::now();
    let f = square_fixture();
    let law = solve_unconstrained(f.sys.clone(), &f.gram, rho).unwrap();
    let r = report(&law, &f.gram, rho, SAMPLES).unwrap();
    s.rel(criterion, &format!("rho_F={rho} J"), r.cost_j, want[0], 0.01);
    s.rel(criterion, &format!("rho_F={rho} ||u||_2"), r.l2_norm_u, want[1], 0.01);
    s.rel(criterion, &format!("rho_F={rho} ||u||_inf"), r.linf_norm_u, want[2], 0.01);
    s.rel(criterion, &format!("rho_F={rho} final error"), r.final_error_projected, want[3], 0.02);
    s.runtime(criterion, start, 5.0);
}

fn constrained(s: &mut Suite, criterion: u32, rho: f64, phi: f64, cost: f64, gap: f64) {
    let start = Instant::now();
    let f = square_fixture();
    let ms = build_multiplier_system(&f.sys, 30, &[100.0]).unwrap();
    let problem = DualProblem::new(f.sys.clone(), ms, &f.gram, rho).unwrap();
    let dual = problem.solve(DEFAULT_DUAL_TOL, DEFAULT_DUAL_MAX_ITER);
    s.check(
        criterion,
        &format!("rho_F={rho} dual ascent converged"),
        dual.is_ok(),
        match &dual {
            Ok(d) => format!("{} iterations, residual {:.2e}", d.iterations, d.kkt_residual),
            Err(e) => e.to_string(),
        },
    );
    let Ok(dual) = dual else { return };
    let law = problem.recover_primal(&dual).unwrap();
    let u = clip_feasible(&law, &[100.0], SAMPLES, ClipMode::Base).unwrap();
    let r = constrained_report(&u, &f.sys, rho, dual.dual_value).unwrap();
    s.rel(criterion, &format!("rho_F={rho} phi_D"), dual.dual_value, phi, 0.05);
    s.rel(criterion, &format!("rho_F={rho} J"), r.cost_j, cost, 0.05);
    if criterion == 4 {
        s.check(
            criterion,
            &format!("rho_F={rho} ||u||_inf == mu"),
            r.linf_norm_u == 100.0,
            format!("{}", r.linf_norm_u),
        );
    }
    s.abs(
        criterion,
        &format!("rho_F={rho} gap %"),
        100.0 * r.relative_gap.unwrap(),
        gap,
        2.0,
    );
    if criterion == 4 {
        s.runtime(criterion, start, 60.0);
    }
}

fn lyapunov(s: &mut Suite) {
    let start = Instant::now();
    for f in [scalar_fixture(), line_fixture(5), square_fixture()] {
        let res = lyapunov_residual(f.sys.generator(), f.gram.matrix(), f.gram.m_check());
        let scale = f.gram.m_check().norm();
        s.check(
            6,
            &format!("{} Lyapunov residual", f.name),
            res <= 1e-10 * scale,
            format!("{res:.2e} <= 1e-10 * {scale:.3e}"),
        );
        let oracle = gram_quadrature_oracle(&f.sys, 4096);
        let rel = (f.gram.matrix() - &oracle).norm() / oracle.norm();
        s.check(
            6,
            &format!("{} Gram vs time quadrature", f.name),
            rel <= 1e-8,
            format!("relative {rel:.2e}"),
        );
    }
    s.runtime(6, start, 5.0);
}

fn optimality(s: &mut Suite) {
    for f in [scalar_fixture(), line_fixture(5), line_fixture(20), square_fixture()] {
        for rho in [2000.0, 8000.0, 20000.0] {
            let law = solve_unconstrained(f.sys.clone(), &f.gram, rho).unwrap();
            let theta = f.sys.theta_ro();
            let n = theta.len();
            let lhs = (DMatrix::identity(n, n) / rho + f.gram.matrix()) * law.alpha();
            let res = (lhs - theta).norm();
            s.check(
                7,
                &format!("{} K={} rho_F={rho} optimality residual", f.name, f.sys.basis().per_axis_order()),
                res <= 1e-9 * theta.norm(),
                format!("{res:.2e}"),
            );
            let energy = law.alpha().dot(&(f.gram.matrix() * law.alpha()));
            let bound = rho * theta.norm_squared();
            s.check(
                7,
                &format!("{} K={} rho_F={rho} energy bound", f.name, f.sys.basis().per_axis_order()),
                energy <= bound,
                format!("{energy:.4} <= {bound:.4}"),
            );
        }
    }
}

fn random_feasible(rng: &mut ChaCha8Rng, mu: f64, kind: usize, clipped: &SampledSignal) -> SampledSignal {
    match kind % 3 {
        0 => {
            let n = rng.random_range(2..300);
            SampledSignal::sample(1.0, n, 1, |_| DVector::from_element(1, rng.random_range(-mu..=mu)))
                .unwrap()
        }
        1 => {
            let scale: f64 = rng.random_range(-1.0..=1.0);
            clipped.map_channels(|_, v| scale * v)
        }
        _ => {
            let switches: Vec<f64> = (0..rng.random_range(1..8)).map(|_| rng.random_range(0.0..1.0)).collect();
            SampledSignal::sample(1.0, 2001, 1, |t| {
                let flips = switches.iter().filter(|&&w| w < t).count();
                DVector::from_element(1, if flips % 2 == 0 { mu } else { -mu })
            })
            .unwrap()
        }
    }
}

fn weak_duality(s: &mut Suite) {
    let f = square_fixture();
    let rho = 8000.0;
    let mu = 100.0;
    let ms = build_multiplier_system(&f.sys, 30, &[mu]).unwrap();
    let problem = DualProblem::new(f.sys.clone(), ms, &f.gram, rho).unwrap();
    let dual = match problem.solve(DEFAULT_DUAL_TOL, DEFAULT_DUAL_MAX_ITER) {
        Ok(d) => d,
        Err(fscontrol::Error::NotConverged(d)) => *d,
        Err(e) => panic!("{e}"),
    };
    let law = problem.recover_primal(&dual).unwrap();
    let clipped = clip_feasible(&law, &[mu], SAMPLES, ClipMode::Base).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst = f64::INFINITY;
    for k in 0..200 {
        let u = random_feasible(&mut rng, mu, k, &clipped);
        assert!(u.linf_norm() <= mu);
        let (cost, _) = projected_cost(&f.sys, rho, &u).unwrap();
        worst = worst.min(cost - dual.dual_value);
    }
    s.check(
        8,
        "200 feasible signals: cost >= phi_D - 1e-8",
        worst >= -1e-8,
        format!("min(cost - phi_D) = {worst:.6}"),
    );

    let dim = problem.multipliers().dim();
    let ga = DVector::from_fn(dim, |_, _| rng.random_range(0.0..5.0));
    let gb = DVector::from_fn(dim, |_, _| rng.random_range(0.0..5.0));
    let e = problem.dual_value_grad(&ga, &gb);
    let h = 1e-3;
    let mut worst_fd: f64 = 0.0;
    let scale = e.grad_a.amax().max(e.grad_b.amax()).max(1.0);
    for side in 0..2 {
        for i in 0..dim {
            let (mut p, mut q) = (ga.clone(), gb.clone());
            let (mut pm, mut qm) = (ga.clone(), gb.clone());
            if side == 0 {
                p[i] += h;
                pm[i] -= h;
            } else {
                q[i] += h;
                qm[i] -= h;
            }
            let fd = (problem.dual_value_grad(&p, &q).dual_value
                - problem.dual_value_grad(&pm, &qm).dual_value)
                / (2.0 * h);
            let g = if side == 0 { e.grad_a[i] } else { e.grad_b[i] };
            worst_fd = worst_fd.max((g - fd).abs() / scale);
        }
    }
    s.check(
        8,
        "dual gradient vs central differences",
        worst_fd <= 1e-6,
        format!("max relative deviation {worst_fd:.2e}"),
    );

    let drops = dual.trace.windows(2).filter(|w| w[1] < w[0]).count();
    s.check(
        8,
        "phi_D nondecreasing over iterations",
        drops == 0,
        format!("{} iterates, {drops} decreases", dual.trace.len()),
    );
}

fn monotone_in_rho(s: &mut Suite) {
    let f = square_fixture();
    let mut prev: Option<(f64, f64)> = None;
    for rho in [2000.0, 8000.0, 20000.0] {
        let law = solve_unconstrained(f.sys.clone(), &f.gram, rho).unwrap();
        let r = report(&law, &f.gram, rho, 1001).unwrap();
        if let Some((err, l2)) = prev {
            s.check(
                9,
                &format!("rho_F={rho} error strictly decreases"),
                r.final_error_projected < err,
                format!("{:.6} < {err:.6}", r.final_error_projected),
            );
            s.check(
                9,
                &format!("rho_F={rho} ||u||_2 nondecreasing"),
                r.l2_norm_u >= l2,
                format!("{:.6} >= {l2:.6}", r.l2_norm_u),
            );
        }
        prev = Some((r.final_error_projected, r.l2_norm_u));
    }
}

fn convergence_in_k(s: &mut Suite) {
    let rho = 1000.0;
    let orders = [5, 10, 20, 40];
    let fixtures: Vec<Fixture> = orders.iter().map(|&k| line_fixture(k)).collect();
    let laws: Vec<_> = fixtures
        .iter()
        .map(|f| solve_unconstrained(f.sys.clone(), &f.gram, rho).unwrap())
        .collect();
    let consecutive: Vec<f64> = (0..3)
        .map(|i| l2_distance_nested(&laws[i], &laws[i + 1]).unwrap())
        .collect();
    let to_finest: Vec<f64> = (0..3)
        .map(|i| l2_distance_nested(&laws[i], &laws[3]).unwrap())
        .collect();
    s.check(
        10,
        "||u_K - u_2K|| decreasing for K = 5, 10, 20",
        consecutive.windows(2).all(|w| w[1] < w[0]),
        sci(&consecutive),
    );
    s.check(
        10,
        "||u_K - u_40|| decreasing for K = 5, 10, 20",
        to_finest.windows(2).all(|w| w[1] < w[0]),
        sci(&to_finest),
    );
    let bounds: Vec<f64> = fixtures
        .iter()
        .zip(&laws)
        .map(|(f, law)| {
            let tail = target_tail_bound(&f.sys, &f.target, None).unwrap();
            truncation_bound_1d(law, &f.gram, &f.beta, tail).unwrap().bound
        })
        .collect();
    s.check(
        10,
        "truncation bound decreasing in K",
        bounds.windows(2).all(|w| w[1] < w[0]),
        sci(&bounds),
    );
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn main() -> ExitCode {
    let mut s = Suite { failed: 0, total: 0 };
    target_norm(&mut s);
    unconstrained(&mut s, 2, 8000.0, [4978.00, 45.6636, 192.5735, 0.6037]);
    unconstrained(&mut s, 3, 20000.0, [8127.40, 64.4017, 265.37, 0.4485]);
    constrained(&mut s, 4, 8000.0, 5485.00, 5668.10, 3.2);
    constrained(&mut s, 5, 20000.0, 11195.00, 12281.00, 8.8);
    lyapunov(&mut s);
    optimality(&mut s);
    weak_duality(&mut s);
    monotone_in_rho(&mut s);
    convergence_in_k(&mut s);
    println!("acceptance: {} of {} checks passed", s.total - s.failed, s.total);
    if s.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
