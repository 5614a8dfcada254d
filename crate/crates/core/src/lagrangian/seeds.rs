//! Seed layouts. All node-based layouts are mirror symmetric, so odd-odd
//! structure can be checked seed by seed.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::field::ScalarField;
use crate::grid::GridSpec;
use crate::quadrature::gauss_legendre_on;

/// Named groups of seeds stored back to back, so one ensemble run serves
/// several checks.
#[derive(Debug, Clone, Default)]
pub struct SeedPlan {
    points: Vec<[f64; 2]>,
    groups: BTreeMap<String, Range<usize>>,
}

impl SeedPlan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: &str, points: Vec<[f64; 2]>) -> Range<usize> {
        let start = self.points.len();
        self.points.extend(points);
        let r = start..self.points.len();
        self.groups.insert(name.to_string(), r.clone());
        r
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn into_points(self) -> Vec<[f64; 2]> {
        self.points
    }

    pub fn group(&self, name: &str) -> Option<Range<usize>> {
        self.groups.get(name).cloned()
    }

    pub fn groups(&self) -> impl Iterator<Item = (&str, &Range<usize>)> {
        self.groups.iter().map(|(k, v)| (k.as_str(), v))
    }
}

/// Which layouts a flow run places.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedLayout {
    /// Seeds per side of the uniform block over `B(0, uniform_radius)`.
    pub uniform_per_side: usize,
    pub uniform_radius: f64,
    /// Seeds per half axis.
    pub axis_count: usize,
    pub sector: bool,
    pub quadrant: bool,
    /// Endpoints of the rays used for the Duhamel reconstruction.
    pub rays: Vec<[f64; 2]>,
    /// Gauss–Legendre nodes per ray; rays are skipped when zero.
    pub ray_nodes: usize,
    /// Centers of the finite-difference stencils.
    pub fd_centers: Vec<[f64; 2]>,
    /// Stencil spacing for the finite-difference check, in grid spacings.
    pub fd_offset: usize,
}

impl Default for SeedLayout {
    fn default() -> Self {
        Self {
            uniform_per_side: 64,
            uniform_radius: 1.5,
            axis_count: 32,
            sector: true,
            quadrant: true,
            rays: vec![[0.5, 0.5], [1.0, 0.5], [1.2, 0.3], [0.3, 0.1]],
            // 32 nodes leave ~3e-5 |x| of quadrature error on the preset; 64 reach ~1e-6
            ray_nodes: 64,
            fd_centers: vec![
                [0.3, 0.3],
                [0.6, 0.2],
                [0.25, 0.55],
                [0.9, 0.7],
                [-0.5, 0.4],
                [0.45, -0.8],
                [1.1, 1.0],
                [-0.7, -0.6],
            ],
            fd_offset: 4,
        }
    }
}

/// Coordinates `(j + 1/2) h` of nonnegative cell centers `j = s0, s0 + stride, …`
/// below `radius`, mirrored to the negative side.
fn symmetric_coords(grid: &GridSpec, stride: usize, radius: f64) -> Vec<f64> {
    let h = grid.spacing();
    let n = grid.n();
    let mut pos = Vec::new();
    let mut j = stride / 2;
    while j < n / 2 {
        let c = (j as f64 + 0.5) * h;
        if c >= radius {
            break;
        }
        pos.push(c);
        j += stride;
    }
    let mut out: Vec<f64> = pos.iter().rev().map(|c| -c).collect();
    out.extend(pos);
    out
}

/// Grid nodes inside `B(0, radius)`, strided so that about `per_side` seeds
/// cover the diameter.
pub fn uniform(grid: &GridSpec, radius: f64, per_side: usize) -> Vec<[f64; 2]> {
    let stride = ((2.0 * radius / grid.spacing()) / per_side.max(1) as f64)
        .round()
        .max(1.0) as usize;
    let c = symmetric_coords(grid, stride, radius);
    let mut out = Vec::new();
    for &x2 in &c {
        for &x1 in &c {
            if x1 * x1 + x2 * x2 < radius * radius {
                out.push([x1, x2]);
            }
        }
    }
    out
}

/// `count` seeds on each half axis, spaced evenly up to `extent`.
pub fn axes(count: usize, extent: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(4 * count);
    for k in 1..=count {
        let s = extent * k as f64 / count as f64;
        out.extend([[0.0, s], [0.0, -s], [s, 0.0], [-s, 0.0]]);
    }
    out
}

pub fn origin() -> Vec<[f64; 2]> {
    vec![[0.0, 0.0]]
}

/// First-quadrant grid nodes where `w` is nonzero. With weight `h²` each,
/// they form the rectangle rule over the first quadrant.
pub fn quadrant(w: &ScalarField) -> Vec<[f64; 2]> {
    let g = w.grid();
    (0..g.len())
        .filter(|&i| w.values()[i] != 0.0)
        .map(|i| g.position(i))
        .filter(|p| p[0] > 0.0 && p[1] > 0.0)
        .collect()
}

/// Whether `x` lies strictly inside the sector `x₁/2 < x₂ < 2x₁`.
pub fn in_sector(x: [f64; 2]) -> bool {
    x[0] > 0.0 && 0.5 * x[0] < x[1] && x[1] < 2.0 * x[0]
}

/// Nodes of [`quadrant`] strictly inside the sector.
pub fn sector(w: &ScalarField) -> Vec<[f64; 2]> {
    quadrant(w).into_iter().filter(|&p| in_sector(p)).collect()
}

/// Seeds along the segment from the origin to `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct RaySeeds {
    pub endpoint: [f64; 2],
    /// Gauss–Legendre nodes in `(0, 1)` and their weights.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RaySeeds {
    pub fn new(endpoint: [f64; 2], nodes: usize) -> Self {
        let (nodes, weights) = gauss_legendre_on(nodes, 0.0, 1.0);
        Self {
            endpoint,
            nodes,
            weights,
        }
    }

    /// Origin, the quadrature nodes `r x`, then `x` itself.
    pub fn points(&self) -> Vec<[f64; 2]> {
        let x = self.endpoint;
        let mut out = vec![[0.0, 0.0]];
        out.extend(self.nodes.iter().map(|r| [r * x[0], r * x[1]]));
        out.push(x);
        out
    }

    pub fn len(&self) -> usize {
        self.nodes.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// For each center: the center, then `±s e₁`, `±s e₂`.
pub fn fd_stencils(centers: &[[f64; 2]], s: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(5 * centers.len());
    for c in centers {
        out.push(*c);
        out.push([c[0] + s, c[1]]);
        out.push([c[0] - s, c[1]]);
        out.push([c[0], c[1] + s]);
        out.push([c[0], c[1] - s]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_is_symmetric() {
        let g = GridSpec::new(8.0, 1024).unwrap();
        let s = uniform(&g, 1.5, 64);
        let side = (s.len() as f64).sqrt();
        assert!(side > 50.0 && side < 64.0, "{}", s.len());
        for p in &s {
            assert!(s.contains(&[-p[0], p[1]]) && s.contains(&[p[0], -p[1]]));
            // every seed is a grid node
            let i = ((p[0] - g.origin()) / g.spacing()).round();
            assert!((g.coord(i as usize) - p[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn plan_groups() {
        let mut plan = SeedPlan::new();
        plan.push("origin", origin());
        let r = plan.push("axes", axes(2, 1.0));
        assert_eq!(r, 1..9);
        assert_eq!(plan.group("origin"), Some(0..1));
        assert_eq!(plan.points().len(), 9);
    }

    #[test]
    fn ray_weights_sum_to_one() {
        let r = RaySeeds::new([0.5, 0.5], 32);
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert_eq!(r.points().len(), r.len());
        assert!(r.nodes.iter().all(|&t| t > 0.0 && t < 1.0));
    }

    #[test]
    fn sector_nodes_are_strict() {
        let g = GridSpec::new(8.0, 256).unwrap();
        let w = ScalarField::from_fn(g, |x1, x2| if x1 * x2 > 0.0 && x1.abs() < 2.0 { x1 * x2 } else { 0.0 });
        let s = sector(&w);
        assert!(!s.is_empty());
        assert!(s.iter().all(|&p| in_sector(p)));
        assert!(quadrant(&w).len() > s.len());
    }
}
