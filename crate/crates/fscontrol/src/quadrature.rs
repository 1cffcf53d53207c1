//! Gauss–Legendre rules and composite panel layouts.

use std::f64::consts::PI;

/// Gauss–Legendre rule on the reference interval [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `order`-point rule (exact for polynomials of degree `2 * order - 1`).
    ///
    /// # Panics
    /// Panics if `order == 0`.
    pub fn new(order: usize) -> Self {
        assert!(order > 0, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Tricomi's initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Integrates `f` over `[a, b]` with a single panel.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Panel edges on `[0, length]`: a uniform grid of `min_panels` panels merged
/// with every breakpoint that lies strictly inside the interval.
pub fn panel_edges(length: f64, breakpoints: &[f64], min_panels: usize) -> Vec<f64> {
    let panels = min_panels.max(1);
    let mut edges: Vec<f64> = (0..=panels)
        .map(|i| length * i as f64 / panels as f64)
        .collect();
    edges.extend(
        breakpoints
            .iter()
            .copied()
            .filter(|&b| b > 0.0 && b < length),
    );
    edges.sort_by(f64::total_cmp);
    let tol = 1e-14 * length.abs().max(1.0);
    edges.dedup_by(|a, b| (*a - *b).abs() <= tol);
    if let Some(last) = edges.last_mut() {
        *last = length;
    }
    edges
}

/// Composite rule (points, weights) over consecutive panel edges.
pub fn composite_rule(edges: &[f64], rule: &GaussLegendre) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(edges.len().saturating_sub(1) * rule.order());
    let mut ws = Vec::with_capacity(xs.capacity());
    for pair in edges.windows(2) {
        if pair[1] <= pair[0] {
            continue;
        }
        for (x, w) in rule.mapped(pair[0], pair[1]) {
            xs.push(x);
            ws.push(w);
        }
    }
    (xs, ws)
}

/// Time rule on `[0, t_final]` with panels graded geometrically toward
/// `t_final`, where kernels of the form `exp(a (t_final - t))` with large
/// negative `a` concentrate.
pub fn graded_time_rule(t_final: f64, n_nodes: usize) -> (Vec<f64>, Vec<f64>) {
    const ORDER: usize = 16;
    let rule = GaussLegendre::new(ORDER);
    let panels = (n_nodes / ORDER).max(1);
    let mut edges = Vec::with_capacity(panels + 1);
    edges.push(0.0);
    for j in 1..panels {
        edges.push(t_final * (1.0 - 0.5f64.powi(j as i32)));
    }
    edges.push(t_final);
    composite_rule(&edges, &rule)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        for order in 1..=20 {
            let rule = GaussLegendre::new(order);
            for deg in 0..(2 * order) {
                let got = rule.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
                let exact = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                assert!((got - exact).abs() < 1e-14, "order {order} deg {deg}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn weights_sum_to_two_and_nodes_sorted() {
        let rule = GaussLegendre::new(12);
        let s: f64 = rule.weights().iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        assert!(rule.nodes().windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn edges_include_breakpoints() {
        let e = panel_edges(2.0, &[0.9, 1.1, 3.0, 0.0], 4);
        assert_eq!(e.len(), 7);
        assert!(e.contains(&0.9) && e.contains(&1.1));
        assert_eq!(*e.last().unwrap(), 2.0);
    }

    #[test]
    fn graded_rule_integrates_stiff_exponential() {
        let (t, w) = graded_time_rule(1.0, 256);
        let a = -1000.0f64;
        let got: f64 = t.iter().zip(&w).map(|(t, w)| w * (a * (1.0 - t)).exp()).sum();
        let exact = (1.0 - a.exp()) / -a;
        assert!(((got - exact) / exact).abs() < 1e-12);
    }
}
