//! The computational domain `(0, 1)` and its cell-midpoint meshes.
//!
//! Every node and cell boundary is also stored as a distance to the boundary
//! point on its own side. Distances between points near `x = 1` are then
//! computed from these small numbers rather than from differences of values
//! close to one, which keeps both halves of a symmetric mesh equally
//! accurate.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Result};

/// Which endpoint of the interval a point is closest to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A point of `[0, 1]` given by its side and its distance to that side's
/// boundary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Anchored {
    pub side: Side,
    pub delta: f64,
}

impl Anchored {
    fn from_abs(x: f64) -> Self {
        if x <= 0.5 {
            Anchored { side: Side::Left, delta: x }
        } else {
            Anchored { side: Side::Right, delta: 1.0 - x }
        }
    }

    /// Distance between two anchored points.
    #[inline]
    pub fn dist(self, other: Anchored) -> f64 {
        if self.side == other.side {
            (self.delta - other.delta).abs()
        } else {
            1.0 - self.delta - other.delta
        }
    }
}

/// `δ(x) = min(x, 1 - x)`.
pub fn boundary_distance(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid!("x = {x} lies outside [0, 1]"));
    }
    Ok(x.min(1.0 - x))
}

/// Cell-midpoint mesh of the unit interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    delta: Vec<f64>,
    side: Vec<Side>,
    weights: Vec<f64>,
    /// `n + 1` cell boundaries, anchored.
    bounds: Vec<Anchored>,
    grading: Option<f64>,
    dimension: usize,
}

/// Graded mesh with `n` cells: the left half is the partition
/// `t_j = (2j/n)^β / 2`, `j = 0..=n/2`, mirrored onto `(1/2, 1)`.
pub fn graded_mesh(n: usize, grading: f64) -> Result<Grid> {
    if n < 8 || !n.is_multiple_of(2) {
        return Err(invalid!("graded mesh needs an even node count >= 8, got {n}"));
    }
    if !(grading >= 1.0) || !grading.is_finite() {
        return Err(invalid!("grading exponent must be >= 1, got {grading}"));
    }
    let half = n / 2;
    let t: Vec<f64> = (0..=half)
        .map(|j| {
            if grading == 1.0 {
                j as f64 / n as f64
            } else {
                0.5 * (2.0 * j as f64 / n as f64).powf(grading)
            }
        })
        .collect();

    let mut nodes = Vec::with_capacity(n);
    let mut delta = Vec::with_capacity(n);
    let mut side = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for j in 0..half {
        let mid = 0.5 * (t[j] + t[j + 1]);
        nodes.push(mid);
        delta.push(mid);
        side.push(Side::Left);
        weights.push(t[j + 1] - t[j]);
    }
    for j in (0..half).rev() {
        nodes.push(1.0 - nodes[j]);
        delta.push(delta[j]);
        side.push(Side::Right);
        weights.push(weights[j]);
    }

    let mut bounds = Vec::with_capacity(n + 1);
    bounds.extend(t.iter().map(|&d| Anchored { side: Side::Left, delta: d }));
    bounds.extend(t[..half].iter().rev().map(|&d| Anchored { side: Side::Right, delta: d }));

    Ok(Grid { nodes, delta, side, weights, bounds, grading: Some(grading), dimension: 1 })
}

impl Grid {
    /// Mesh from explicit cell boundaries `0 = b_0 < b_1 < ... < b_n = 1`.
    /// Nodes are the cell midpoints. Intended for small hand-built cases.
    pub fn from_cell_boundaries(boundaries: &[f64]) -> Result<Grid> {
        if boundaries.len() < 2 {
            return Err(invalid!("need at least two cell boundaries"));
        }
        if boundaries[0] != 0.0 || *boundaries.last().unwrap() != 1.0 {
            return Err(invalid!("cell boundaries must start at 0 and end at 1"));
        }
        if boundaries.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid!("cell boundaries must be strictly increasing"));
        }
        let n = boundaries.len() - 1;
        let mut nodes = Vec::with_capacity(n);
        let mut delta = Vec::with_capacity(n);
        let mut side = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for w in boundaries.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let a = Anchored::from_abs(mid);
            nodes.push(mid);
            delta.push(a.delta);
            side.push(a.side);
            weights.push(w[1] - w[0]);
        }
        let bounds = boundaries.iter().map(|&b| Anchored::from_abs(b)).collect();
        let first = weights[0];
        let uniform = weights.iter().all(|&w| (w - first).abs() <= 1e-12 * first);
        Ok(Grid {
            nodes,
            delta,
            side,
            weights,
            bounds,
            grading: if uniform { Some(1.0) } else { None },
            dimension: 1,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Boundary distance of every node, exactly mirror-symmetric.
    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sides(&self) -> &[Side] {
        &self.side
    }

    /// Grading exponent, `Some(1.0)` for any uniform mesh, `None` for a
    /// non-uniform mesh not produced by [`graded_mesh`].
    pub fn grading(&self) -> Option<f64> {
        self.grading
    }

    pub fn is_uniform(&self) -> bool {
        self.grading == Some(1.0)
    }

    /// Spatial dimension carried for predictor formulas (always 1 here).
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn diam(&self) -> f64 {
        1.0
    }

    /// Cell `[l_i, r_i]` of node `i` in absolute coordinates.
    pub fn cell(&self, i: usize) -> (f64, f64) {
        (self.abs_bound(i), self.abs_bound(i + 1))
    }

    fn abs_bound(&self, k: usize) -> f64 {
        let b = self.bounds[k];
        match b.side {
            Side::Left => b.delta,
            Side::Right => 1.0 - b.delta,
        }
    }

    pub(crate) fn anchored_node(&self, i: usize) -> Anchored {
        Anchored { side: self.side[i], delta: self.delta[i] }
    }

    pub(crate) fn anchored_bounds(&self) -> &[Anchored] {
        &self.bounds
    }

    /// Distance between nodes `i` and `j`.
    #[inline]
    pub fn separation(&self, i: usize, j: usize) -> f64 {
        self.anchored_node(i).dist(self.anchored_node(j))
    }

    /// `φ(x_i) = δ(x_i)^γ`.
    pub fn phi(&self, gamma: f64) -> Vec<f64> {
        self.delta.iter().map(|d| d.powf(gamma)).collect()
    }

    /// Quadrature inner product `Σ w_i u_i v_i`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.weights.iter().zip(u).zip(v).map(|((w, a), b)| w * a * b).sum()
    }

    /// Quadrature `L²` norm.
    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }

    /// Number of nodes strictly closer to the node's own boundary point
    /// than node `i`, i.e. its index counted from that boundary.
    pub fn boundary_rank(&self, i: usize) -> usize {
        match self.side[i] {
            Side::Left => i,
            Side::Right => self.len() - 1 - i,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_mesh_of_eight() {
        let g = graded_mesh(8, 1.0).unwrap();
        for (j, (&x, &w)) in g.nodes().iter().zip(g.weights()).enumerate() {
            assert_relative_eq!(x, (2.0 * (j + 1) as f64 - 1.0) / 16.0, epsilon = 1e-15);
            assert_relative_eq!(w, 0.125, epsilon = 1e-15);
        }
        assert!(g.is_uniform());
    }

    #[test]
    fn quadratic_grading_first_boundary() {
        let g = graded_mesh(8, 2.0).unwrap();
        assert_relative_eq!(g.cell(0).1, 1.0 / 32.0, epsilon = 1e-16);
        assert_relative_eq!(g.weights()[0], 1.0 / 32.0, epsilon = 1e-16);
        assert_eq!(g.cell(0).0, 0.0);
    }

    #[test]
    fn rejects_bad_node_counts_and_grading() {
        assert!(matches!(graded_mesh(9, 1.0), Err(crate::Error::InvalidArgument(_))));
        assert!(matches!(graded_mesh(6, 1.0), Err(crate::Error::InvalidArgument(_))));
        assert!(graded_mesh(8, 0.5).is_err());
        assert!(graded_mesh(8, f64::NAN).is_err());
    }

    #[test]
    fn boundary_distance_examples() {
        assert_eq!(boundary_distance(0.5).unwrap(), 0.5);
        assert_eq!(boundary_distance(0.0).unwrap(), 0.0);
        assert_eq!(boundary_distance(1.0).unwrap(), 0.0);
        assert_relative_eq!(boundary_distance(0.7).unwrap(), 0.3, epsilon = 1e-15);
        assert!(boundary_distance(-0.1).is_err());
        assert!(boundary_distance(1.5).is_err());
    }

    #[test]
    fn partition_of_unity_and_mirror_symmetry() {
        for &(n, beta) in &[(8, 1.0), (64, 2.0), (1000, 3.0), (4096, 3.0), (130, 1.7)] {
            let g = graded_mesh(n, beta).unwrap();
            let total: f64 = g.weights().iter().sum();
            assert!((total - 1.0).abs() <= 1e-14, "n={n} beta={beta}: {total}");
            assert!(g.weights().iter().all(|&w| w > 0.0));
            assert!(g.nodes().iter().all(|&x| x > 0.0 && x < 1.0));
            for i in 0..n / 2 {
                assert_eq!(g.nodes()[n - 1 - i], 1.0 - g.nodes()[i]);
                assert_eq!(g.delta()[n - 1 - i], g.delta()[i]);
                assert_eq!(g.weights()[n - 1 - i], g.weights()[i]);
            }
            assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn smallest_cell_scales_like_n_to_minus_beta() {
        for &beta in &[1.0, 2.0, 3.0] {
            let mut n = 64;
            while n <= 4096 {
                let g = graded_mesh(n, beta).unwrap();
                let wmin = g.weights().iter().cloned().fold(f64::INFINITY, f64::min);
                let ratio = wmin / (n as f64).powf(-beta);
                assert!((0.25..=4.0 * (1.0 + 1e-9)).contains(&ratio), "beta {beta} n {n}: {ratio}");
                n *= 2;
            }
        }
    }

    #[test]
    fn separations_agree_with_absolute_coordinates() {
        let g = graded_mesh(16, 3.0).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                let abs = (g.nodes()[i] - g.nodes()[j]).abs();
                assert_relative_eq!(g.separation(i, j), abs, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn explicit_boundaries() {
        let g = Grid::from_cell_boundaries(&[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(g.nodes(), &[0.25, 0.75]);
        assert!(g.is_uniform());
        assert!(Grid::from_cell_boundaries(&[0.0, 0.6, 0.5, 1.0]).is_err());
        assert!(Grid::from_cell_boundaries(&[0.1, 1.0]).is_err());
        let g = Grid::from_cell_boundaries(&[0.0, 0.2, 1.0]).unwrap();
        assert!(!g.is_uniform());
    }
}
