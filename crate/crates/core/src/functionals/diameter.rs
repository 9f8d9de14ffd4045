use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::discretization::{GridMode, SphereGrid};

/// Polar angle of the round metric `2ρ₀|dz|²`: `ξ = sin²(ϑ/2)`.
fn polar_angle(xi: f64) -> f64 {
    2.0 * xi.sqrt().asin()
}

/// `∫₀^h c·t^p dt` for `s ≈ c·t^p` fitted through `(h, s_h)` and `(h₂, s₂)`.
/// Handles the integrable blow-up of `√D` at a cone point.
fn end_segment(h: f64, s_h: f64, h2: f64, s2: f64) -> f64 {
    let p = if h2 > h && s_h > 0.0 && s2 > 0.0 {
        ((s2 / s_h).ln() / (h2 / h).ln()).clamp(-0.9, 2.0)
    } else {
        0.0
    };
    h * s_h / (p + 1.0)
}

/// Arc length from the `ξ = 0` pole along a meridian of `D·g₀`, at every
/// ring and at the far pole: `∫√D dϑ` by the trapezoid rule in `ϑ`, with
/// power-law end segments at the poles.
fn meridian_profile(grid: &SphereGrid, ring_ratio: &[f64]) -> (Vec<f64>, f64) {
    let n = grid.n_xi;
    let t: Vec<f64> = grid.xi[..n].iter().map(|&x| polar_angle(x)).collect();
    let s: Vec<f64> = ring_ratio[..n].iter().map(|d| d.sqrt()).collect();
    let mut cum = Vec::with_capacity(n);
    let mut acc = if n > 1 {
        end_segment(t[0], s[0], t[1], s[1])
    } else {
        t[0] * s[0]
    };
    cum.push(acc);
    for i in 1..n {
        acc += 0.5 * (t[i] - t[i - 1]) * (s[i] + s[i - 1]);
        cum.push(acc);
    }
    acc += if n > 1 {
        end_segment(PI - t[n - 1], s[n - 1], PI - t[n - 2], s[n - 2])
    } else {
        (PI - t[0]) * s[0]
    };
    (cum, acc)
}

/// Pole-to-pole meridian length of the rotationally symmetric metric with
/// ring density ratios `ring_ratio` (one per `ξ` cell).
pub fn meridian_length(grid: &SphereGrid, ring_ratio: &[f64]) -> f64 {
    meridian_profile(grid, ring_ratio).1
}

fn ring_means(grid: &SphereGrid, ratio: &[f64]) -> Vec<f64> {
    let nt = grid.n_theta;
    (0..grid.n_xi)
        .map(|i| ratio[i * nt..(i + 1) * nt].iter().sum::<f64>() / nt as f64)
        .collect()
}

/// Diameter of `ω = (1+Δ₀φ)ω₀` given the density ratio per node.
///
/// Axisymmetric grids take the larger of the meridian length and the best
/// estimate for antipodal points on each ring. Full grids run a double
/// sweep of Dijkstra on the node graph with both poles added.
pub fn diameter(grid: &SphereGrid, ratio: &[f64]) -> f64 {
    match grid.mode {
        GridMode::Axisym1D => axisym_diameter(grid, ratio),
        GridMode::Full2D => graph_diameter(grid, ratio),
    }
}

fn axisym_diameter(grid: &SphereGrid, ratio: &[f64]) -> f64 {
    let rings = ring_means(grid, ratio);
    let (cum, total) = meridian_profile(grid, &rings);
    let mut best = total;
    for i in 0..grid.n_xi {
        let half_circle = PI * polar_angle(grid.xi[i]).sin() * rings[i].sqrt();
        let via_pole = 2.0 * cum[i].min(total - cum[i]);
        best = best.max(half_circle.min(via_pole));
    }
    best
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

struct Graph {
    adj: Vec<Vec<(usize, f64)>>,
}

impl Graph {
    fn build(grid: &SphereGrid, ratio: &[f64]) -> Self {
        let (n, nt) = (grid.n_xi, grid.n_theta);
        let nodes = n * nt + 2;
        let (north, south) = (n * nt, n * nt + 1);
        let pos = |i: usize, j: usize| {
            let t = polar_angle(grid.xi[i]);
            let th = j as f64 * grid.dtheta;
            [t.sin() * th.cos(), t.sin() * th.sin(), t.cos()]
        };
        let angle = |a: [f64; 3], b: [f64; 3]| {
            let c = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
            2.0 * (0.5 * c).min(1.0).asin()
        };
        let rings = ring_means(grid, ratio);
        let root = |k: usize| {
            if k == north {
                rings[0].sqrt()
            } else if k == south {
                rings[n - 1].sqrt()
            } else {
                ratio[k].sqrt()
            }
        };
        let mut adj = vec![vec![]; nodes];
        let mut link = |a: usize, b: usize, geo: f64| {
            let w = geo * 0.5 * (root(a) + root(b));
            adj[a].push((b, w));
            adj[b].push((a, w));
        };
        let steps: [(usize, isize); 6] = [(0, 1), (1, 0), (1, 1), (1, -1), (1, 2), (1, -2)];
        let far: [(usize, isize); 2] = [(2, 1), (2, -1)];
        for i in 0..n {
            for j in 0..nt {
                let a = i * nt + j;
                for &(di, dj) in steps.iter().chain(far.iter()) {
                    let ii = i + di;
                    if ii >= n || (di == 0 && nt < 2) {
                        continue;
                    }
                    let jj = (j as isize + dj).rem_euclid(nt as isize) as usize;
                    if di == 0 && jj == j {
                        continue;
                    }
                    link(a, ii * nt + jj, angle(pos(i, j), pos(ii, jj)));
                }
            }
        }
        for j in 0..nt {
            link(north, j, polar_angle(grid.xi[0]));
            link(south, (n - 1) * nt + j, PI - polar_angle(grid.xi[n - 1]));
        }
        Graph { adj }
    }

    fn farthest(&self, src: usize) -> (usize, f64) {
        let mut dist = vec![f64::INFINITY; self.adj.len()];
        dist[src] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Entry(0.0, src));
        while let Some(Entry(d, a)) = heap.pop() {
            if d > dist[a] {
                continue;
            }
            for &(b, w) in &self.adj[a] {
                let nd = d + w;
                if nd < dist[b] {
                    dist[b] = nd;
                    heap.push(Entry(nd, b));
                }
            }
        }
        dist.iter()
            .copied()
            .enumerate()
            .fold((src, 0.0), |acc, (k, d)| if d > acc.1 { (k, d) } else { acc })
    }
}

fn graph_diameter(grid: &SphereGrid, ratio: &[f64]) -> f64 {
    let g = Graph::build(grid, ratio);
    let north = grid.n_xi * grid.n_theta;
    let (a, d0) = g.farthest(north);
    let (_, d1) = g.farthest(a);
    d0.max(d1)
}
