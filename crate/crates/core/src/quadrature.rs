//! Gauss–Legendre rules and tolerance-driven adaptive cubature on rectangles.

use std::f64::consts::PI;

/// Nodes and weights of the `m`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..(m + 1) / 2 {
        // Chebyshev-like initial guess, then Newton on P_m
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_m(x), P_m'(x))` by the three-term recurrence.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(m: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(m);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    (
        x.iter().map(|t| c + h * t).collect(),
        w.iter().map(|v| h * v).collect(),
    )
}

/// Adaptive tensor Gauss–Legendre cubature over rectangles.
///
/// A cell is accepted when the rule on the cell and the sum over its four
/// children agree to `abs_tol` scaled by the cell's share of the root area.
#[derive(Debug, Clone)]
pub struct AdaptiveCubature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    pub abs_tol: f64,
    pub max_depth: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubatureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub cells: usize,
    /// Whether some cell hit the depth limit before meeting its tolerance.
    pub truncated: bool,
}

impl AdaptiveCubature {
    pub fn new(order: usize, abs_tol: f64, max_depth: u32) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        Self {
            nodes,
            weights,
            abs_tol,
            max_depth,
        }
    }

    fn rule<F: Fn(f64, f64) -> f64>(&self, f: &F, lo: [f64; 2], hi: [f64; 2]) -> f64 {
        let c = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
        let h = [0.5 * (hi[0] - lo[0]), 0.5 * (hi[1] - lo[1])];
        let mut acc = 0.0;
        for (yj, wj) in self.nodes.iter().zip(&self.weights) {
            let y = c[1] + h[1] * yj;
            let mut row = 0.0;
            for (xi, wi) in self.nodes.iter().zip(&self.weights) {
                row += wi * f(c[0] + h[0] * xi, y);
            }
            acc += wj * row;
        }
        acc * h[0] * h[1]
    }

    pub fn integrate<F: Fn(f64, f64) -> f64>(&self, f: F, lo: [f64; 2], hi: [f64; 2]) -> CubatureResult {
        let area = (hi[0] - lo[0]) * (hi[1] - lo[1]);
        let whole = self.rule(&f, lo, hi);
        let mut out = CubatureResult {
            value: 0.0,
            error_estimate: 0.0,
            cells: 0,
            truncated: false,
        };
        self.refine(&f, lo, hi, whole, 0, area, &mut out);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn refine<F: Fn(f64, f64) -> f64>(
        &self,
        f: &F,
        lo: [f64; 2],
        hi: [f64; 2],
        coarse: f64,
        depth: u32,
        root_area: f64,
        out: &mut CubatureResult,
    ) {
        let mid = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
        let quads = [
            ([lo[0], lo[1]], [mid[0], mid[1]]),
            ([mid[0], lo[1]], [hi[0], mid[1]]),
            ([lo[0], mid[1]], [mid[0], hi[1]]),
            ([mid[0], mid[1]], [hi[0], hi[1]]),
        ];
        let parts: Vec<f64> = quads.iter().map(|(a, b)| self.rule(f, *a, *b)).collect();
        let fine: f64 = parts.iter().sum();
        let share = (hi[0] - lo[0]) * (hi[1] - lo[1]) / root_area;
        let err = (fine - coarse).abs();
        if err <= self.abs_tol * share {
            out.value += fine;
            out.error_estimate += err;
            out.cells += 4;
            return;
        }
        if depth >= self.max_depth {
            out.value += fine;
            out.error_estimate += err;
            out.cells += 4;
            out.truncated = true;
            return;
        }
        for ((a, b), c) in quads.iter().zip(parts) {
            self.refine(f, *a, *b, c, depth + 1, root_area, out);
        }
    }
}
