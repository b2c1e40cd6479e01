//! Uniform tensor grids, nodal fields, and the discrete operators shared by the
//! solvers and diagnostics.
//!
//! Nodes are stored row-major with the last axis fastest: node `(ix, iy)` of a
//! 2D grid lives at `ix * ny + iy`. A 1D grid is treated as a 2D grid with a
//! single node along the second axis. Quadrature everywhere uses the tensor
//! trapezoid weights returned by [`Grid::weight`], which integrate constants
//! exactly over the closed domain `[0, Lx] x [0, Ly]`.

use crate::error::{Error, Result};

/// Uniform rectangular discretization of the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    n: [usize; 2],
    extent: [f64; 2],
    h: [f64; 2],
}

impl Grid {
    /// Build a grid with `n[a]` nodes (boundary included) and side length
    /// `extent[a]` along each axis.
    pub fn new(dim: usize, n: &[usize], extent: &[f64]) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if n.len() != dim || extent.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "expected {dim} node counts and extents, got {} and {}",
                n.len(),
                extent.len()
            )));
        }
        let mut grid = Grid {
            dim,
            n: [1, 1],
            extent: [1.0, 1.0],
            h: [1.0, 1.0],
        };
        for a in 0..dim {
            if n[a] < 3 {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} needs at least 3 nodes, got {}",
                    n[a]
                )));
            }
            if !(extent[a].is_finite() && extent[a] > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} extent must be positive and finite, got {}",
                    extent[a]
                )));
            }
            grid.n[a] = n[a];
            grid.extent[a] = extent[a];
            grid.h[a] = extent[a] / (n[a] - 1) as f64;
        }
        Ok(grid)
    }

    /// Interval `[0, length]` with `n` nodes.
    pub fn line(n: usize, length: f64) -> Result<Self> {
        Grid::new(1, &[n], &[length])
    }

    /// Rectangle `[0, lx] x [0, ly]` with `nx * ny` nodes.
    pub fn rect(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Grid::new(2, &[nx, ny], &[lx, ly])
    }

    /// Unit square with `n` nodes per side.
    pub fn unit_square(n: usize) -> Result<Self> {
        Grid::rect(n, n, 1.0, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> &[usize] {
        &self.n[..self.dim]
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent[..self.dim]
    }

    pub fn h(&self) -> &[f64] {
        &self.h[..self.dim]
    }

    pub fn node_count(&self) -> usize {
        self.n[0] * self.n[1]
    }

    /// Volume of one grid cell, `prod h`.
    pub fn cell_volume(&self) -> f64 {
        self.h().iter().product()
    }

    /// Measure of the domain.
    pub fn measure(&self) -> f64 {
        self.extent().iter().product()
    }

    /// Largest spacing over the axes.
    pub fn h_max(&self) -> f64 {
        self.h().iter().cloned().fold(0.0, f64::max)
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.n[1] + iy
    }

    pub fn multi_index(&self, idx: usize) -> (usize, usize) {
        (idx / self.n[1], idx % self.n[1])
    }

    /// Physical coordinates of a node; the second entry is 0 in 1D.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let (ix, iy) = self.multi_index(idx);
        if self.dim == 1 {
            [ix as f64 * self.h[0], 0.0]
        } else {
            [ix as f64 * self.h[0], iy as f64 * self.h[1]]
        }
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let (ix, iy) = self.multi_index(idx);
        ix == 0 || ix == self.n[0] - 1 || (self.dim == 2 && (iy == 0 || iy == self.n[1] - 1))
    }

    /// Indices of all nodes not on the boundary, in storage order.
    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&i| !self.is_boundary(i))
            .collect()
    }

    /// Trapezoid quadrature weight of a node.
    pub fn weight(&self, idx: usize) -> f64 {
        let (ix, iy) = self.multi_index(idx);
        let axis = |i: usize, a: usize| {
            if i == 0 || i == self.n[a] - 1 {
                0.5 * self.h[a]
            } else {
                self.h[a]
            }
        };
        if self.dim == 1 {
            axis(ix, 0)
        } else {
            axis(ix, 0) * axis(iy, 1)
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.node_count()).map(|i| self.weight(i)).collect()
    }

    /// Nodes within Euclidean distance `r` of `center` (boundary nodes
    /// included, so balls are automatically clipped to the closed domain).
    /// A relative slack of 1e-12 keeps nodes that sit exactly on the sphere.
    pub fn ball_nodes(&self, center: &[f64], r: f64) -> Vec<usize> {
        let slack = 1e-12 * r.max(self.h_max());
        let r2 = (r + slack) * (r + slack);
        let c = [center[0], if self.dim == 2 { center[1] } else { 0.0 }];
        (0..self.node_count())
            .filter(|&i| {
                let x = self.coords(i);
                let d2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
                d2 <= r2
            })
            .collect()
    }

    /// Iterate over the corner sub-cells of the grid. See [`Corner`].
    pub fn corners(&self) -> Corners<'_> {
        Corners {
            grid: self,
            cell: 0,
            sub: 0,
        }
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "grids differ: {:?} vs {:?}",
                self.n(),
                other.n()
            )))
        }
    }
}

/// One corner of one grid cell.
///
/// Every cell is split into `2^dim` corner pieces of equal measure. The piece
/// attached to corner node `node` carries a gradient built from the two cell
/// edges meeting at that node: `x_edge = (a, b)` gives `(f[b] - f[a]) / hx` and
/// `y_edge` likewise along the second axis. Summing `weight * |grad f|^2` over
/// all corners reproduces the (2 dim + 1)-point Dirichlet form, and a tensor
/// coefficient sampled at `node` gives face coefficients equal to the
/// arithmetic mean of the coefficient at the two face nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corner {
    pub node: usize,
    pub weight: f64,
    pub x_edge: (usize, usize),
    pub y_edge: Option<(usize, usize)>,
}

impl Corner {
    /// Edge-difference gradient of `values` on this corner.
    #[inline]
    pub fn gradient(&self, values: &[f64], h: &[f64]) -> [f64; 2] {
        let gx = (values[self.x_edge.1] - values[self.x_edge.0]) / h[0];
        let gy = match self.y_edge {
            Some((a, b)) => (values[b] - values[a]) / h[1],
            None => 0.0,
        };
        [gx, gy]
    }
}

pub struct Corners<'a> {
    grid: &'a Grid,
    cell: usize,
    sub: usize,
}

impl Iterator for Corners<'_> {
    type Item = Corner;

    fn next(&mut self) -> Option<Corner> {
        let g = self.grid;
        let cells_x = g.n[0] - 1;
        if g.dim == 1 {
            if self.cell >= cells_x {
                return None;
            }
            let i = self.cell;
            let node = i + self.sub;
            let c = Corner {
                node,
                weight: 0.5 * g.h[0],
                x_edge: (i, i + 1),
                y_edge: None,
            };
            self.sub += 1;
            if self.sub == 2 {
                self.sub = 0;
                self.cell += 1;
            }
            return Some(c);
        }
        let cells_y = g.n[1] - 1;
        if self.cell >= cells_x * cells_y {
            return None;
        }
        let (i, j) = (self.cell / cells_y, self.cell % cells_y);
        let (di, dj) = (self.sub / 2, self.sub % 2);
        let node = g.index(i + di, j + dj);
        let c = Corner {
            node,
            weight: 0.25 * g.h[0] * g.h[1],
            x_edge: (g.index(i, j + dj), g.index(i + 1, j + dj)),
            y_edge: Some((g.index(i + di, j), g.index(i + di, j + 1))),
        };
        self.sub += 1;
        if self.sub == 4 {
            self.sub = 0;
            self.cell += 1;
        }
        Some(c)
    }
}

/// Nodal scalar field (pressure, source, `|m|^2`, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.node_count()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.node_count()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values, got {}",
                grid.node_count(),
                values.len()
            )));
        }
        Ok(ScalarField { grid, values })
    }

    /// Sample `f` at every node. The closure receives `[x, y]` (y = 0 in 1D).
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.node_count()).map(|i| f(grid.coords(i))).collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> ScalarField {
        self.map(|v| s * v)
    }

    /// Set all boundary values to zero.
    pub fn pin_boundary(&mut self) {
        for i in 0..self.values.len() {
            if self.grid.is_boundary(i) {
                self.values[i] = 0.0;
            }
        }
    }

    /// Trapezoid integral over the domain.
    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| self.grid.weight(i) * v)
            .sum()
    }

    /// Weighted inner product `sum w f g`.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        self.values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(i, (a, b))| self.grid.weight(i) * a * b)
            .sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Nodal vector field with one component per grid axis.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        VectorField {
            grid,
            components: (0..grid.dim()).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    pub fn from_components(components: Vec<ScalarField>) -> Result<Self> {
        let grid = *components
            .first()
            .ok_or_else(|| Error::ShapeMismatch("no components".into()))?
            .grid();
        if components.len() != grid.dim() {
            return Err(Error::ShapeMismatch(format!(
                "grid has dimension {} but {} components were given",
                grid.dim(),
                components.len()
            )));
        }
        for c in &components {
            grid.check_same(c.grid())?;
        }
        Ok(VectorField { grid, components })
    }

    /// Sample `f` at every node; only the first `dim` entries are used.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let samples: Vec<[f64; 2]> = (0..grid.node_count()).map(|i| f(grid.coords(i))).collect();
        let components = (0..grid.dim())
            .map(|a| ScalarField {
                grid,
                values: samples.iter().map(|s| s[a]).collect(),
            })
            .collect();
        VectorField { grid, components }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, a: usize) -> &ScalarField {
        &self.components[a]
    }

    pub fn component_mut(&mut self, a: usize) -> &mut ScalarField {
        &mut self.components[a]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    /// Vector value at a node, padded with 0 in 1D.
    #[inline]
    pub fn at(&self, idx: usize) -> [f64; 2] {
        let mut v = [0.0; 2];
        for (a, c) in self.components.iter().enumerate() {
            v[a] = c.values[idx];
        }
        v
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(ScalarField::is_finite)
    }

    pub fn scaled(&self, s: f64) -> VectorField {
        VectorField {
            grid: self.grid,
            components: self.components.iter().map(|c| c.scaled(s)).collect(),
        }
    }

    pub fn pin_boundary(&mut self) {
        for c in &mut self.components {
            c.pin_boundary();
        }
    }

    pub fn vanishes_on_boundary(&self) -> bool {
        (0..self.grid.node_count())
            .filter(|&i| self.grid.is_boundary(i))
            .all(|i| self.components.iter().all(|c| c.values[i] == 0.0))
    }

    /// Pointwise `|v|^2`.
    pub fn norm_squared(&self) -> ScalarField {
        let mut out = ScalarField::zeros(self.grid);
        for c in &self.components {
            for (o, v) in out.values.iter_mut().zip(&c.values) {
                *o += v * v;
            }
        }
        out
    }

    /// Pointwise Euclidean norm `|v|`.
    pub fn magnitude(&self) -> ScalarField {
        self.norm_squared().map(f64::sqrt)
    }

    /// Largest pointwise Euclidean norm.
    pub fn sup_norm(&self) -> f64 {
        self.norm_squared().max().sqrt()
    }

    /// Pointwise dot product with another vector field.
    pub fn dot(&self, other: &VectorField) -> ScalarField {
        let mut out = ScalarField::zeros(self.grid);
        for (a, b) in self.components.iter().zip(&other.components) {
            for (o, (x, y)) in out.values.iter_mut().zip(a.values.iter().zip(&b.values)) {
                *o += x * y;
            }
        }
        out
    }

    /// Weighted inner product `sum w v . u`.
    pub fn inner(&self, other: &VectorField) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.inner(b))
            .sum()
    }
}

/// Closed interval used by [`truncate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationBounds {
    lo: f64,
    hi: f64,
}

impl TruncationBounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo < hi {
            Ok(TruncationBounds { lo, hi })
        } else {
            Err(Error::param("bounds", format!("need lo < hi, got [{lo}, {hi}]")))
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }
}

/// Derivative of a strided line of values: central in the interior,
/// one-sided second order at both ends.
fn derivative_line(f: &[f64], base: usize, stride: usize, len: usize, h: f64, out: &mut [f64]) {
    let at = |k: usize| f[base + k * stride];
    let inv2h = 0.5 / h;
    // written in differences so constants differentiate to exactly zero
    out[base] = (3.0 * (at(1) - at(0)) - (at(2) - at(1))) * inv2h;
    for k in 1..len - 1 {
        out[base + k * stride] = (at(k + 1) - at(k - 1)) * inv2h;
    }
    let l = len - 1;
    out[base + l * stride] = (3.0 * (at(l) - at(l - 1)) - (at(l - 1) - at(l - 2))) * inv2h;
}

/// Partial derivative along `axis`.
pub fn partial(f: &ScalarField, axis: usize) -> ScalarField {
    let g = f.grid;
    let mut out = vec![0.0; g.node_count()];
    let (n0, n1) = (g.n[0], g.n[1]);
    if axis == 0 {
        for iy in 0..n1 {
            derivative_line(&f.values, iy, n1, n0, g.h[0], &mut out);
        }
    } else {
        for ix in 0..n0 {
            derivative_line(&f.values, ix * n1, 1, n1, g.h[1], &mut out);
        }
    }
    ScalarField {
        grid: g,
        values: out,
    }
}

/// Nodal gradient: central differences inside, one-sided second-order
/// differences on the boundary. Exact for quadratics.
pub fn gradient(f: &ScalarField) -> VectorField {
    let g = *f.grid();
    VectorField {
        grid: g,
        components: (0..g.dim()).map(|a| partial(f, a)).collect(),
    }
}

/// Nodal divergence with the same stencils as [`gradient`].
///
/// For `v` and `f` both vanishing on the boundary the discrete integration by
/// parts identity `<div v, f> = -<v, grad f>` holds to rounding error.
pub fn divergence(v: &VectorField) -> ScalarField {
    let mut out = ScalarField::zeros(v.grid);
    for (a, c) in v.components.iter().enumerate() {
        let d = partial(c, a);
        for (o, x) in out.values.iter_mut().zip(d.values) {
            *o += x;
        }
    }
    out
}

/// Pointwise clamp to `[lo, hi]`.
pub fn truncate(f: &ScalarField, b: TruncationBounds) -> ScalarField {
    f.map(|v| v.clamp(b.lo, b.hi))
}

/// Discrete `L^q` norm with trapezoid weights.
///
/// # Panics
/// If `q < 1`.
pub fn lq_norm(f: &ScalarField, q: f64) -> f64 {
    assert!(q >= 1.0, "lq_norm needs q >= 1, got {q}");
    let s: f64 = f
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| f.grid.weight(i) * v.abs().powf(q))
        .sum();
    s.powf(1.0 / q)
}

/// Largest nodal magnitude (the discrete ess sup).
pub fn sup_norm(f: &ScalarField) -> f64 {
    f.values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Weak `L^q` (Marcinkiewicz) quasi-norm: the smallest `c` with
/// `|{|f| >= t}| <= c^q / t^q` for all `t > 0`.
///
/// Since the distribution function is piecewise constant, the supremum of
/// `t |{|f| >= t}|^{1/q}` is attained at one of the nodal magnitudes.
///
/// # Panics
/// If `q < 1`.
pub fn weak_lq_norm(f: &ScalarField, q: f64) -> f64 {
    assert!(q >= 1.0, "weak_lq_norm needs q >= 1, got {q}");
    let mut pairs: Vec<(f64, f64)> = f
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| (v.abs(), f.grid.weight(i)))
        .filter(|(a, _)| *a > 0.0)
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = 0.0f64;
    let mut measure = 0.0;
    let mut k = 0;
    while k < pairs.len() {
        let t = pairs[k].0;
        while k < pairs.len() && pairs[k].0 == t {
            measure += pairs[k].1;
            k += 1;
        }
        best = best.max(t * measure.powf(1.0 / q));
    }
    best
}

/// `int |grad f|^2` with the corner (edge-difference) gradients.
pub fn dirichlet_energy(f: &ScalarField) -> f64 {
    let g = f.grid;
    g.corners()
        .map(|c| {
            let d = c.gradient(&f.values, g.h());
            c.weight * (d[0] * d[0] + d[1] * d[1])
        })
        .sum()
}

/// `int (m . grad f)^2` with corner gradients and `m` sampled at the corner node.
pub fn directional_energy(m: &VectorField, f: &ScalarField) -> f64 {
    let g = f.grid;
    g.corners()
        .map(|c| {
            let d = c.gradient(&f.values, g.h());
            let mv = m.at(c.node);
            let s = mv[0] * d[0] + mv[1] * d[1];
            c.weight * s * s
        })
        .sum()
}

/// Sum of `dirichlet_energy` over the components of `v`.
pub fn vector_dirichlet_energy(v: &VectorField) -> f64 {
    v.components.iter().map(dirichlet_energy).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_rejects_bad_input() {
        assert!(Grid::new(3, &[3, 3, 3], &[1.0, 1.0, 1.0]).is_err());
        assert!(Grid::line(2, 1.0).is_err());
        assert!(Grid::line(5, 0.0).is_err());
        assert!(Grid::new(2, &[5], &[1.0]).is_err());
        let g = Grid::rect(5, 7, 2.0, 3.0).unwrap();
        assert_eq!(g.node_count(), 35);
        assert_relative_eq!(g.h()[0], 0.5);
        assert_relative_eq!(g.h()[1], 0.5);
    }

    #[test]
    fn weights_integrate_constants() {
        let g = Grid::rect(9, 5, 2.0, 3.0).unwrap();
        assert_relative_eq!(g.weights().iter().sum::<f64>(), 6.0, epsilon = 1e-14);
        let g = Grid::line(11, 1.0).unwrap();
        assert_relative_eq!(g.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn corner_weights_cover_domain() {
        for g in [Grid::line(7, 2.0).unwrap(), Grid::rect(5, 6, 1.0, 2.0).unwrap()] {
            let total: f64 = g.corners().map(|c| c.weight).sum();
            assert_relative_eq!(total, g.measure(), epsilon = 1e-13);
        }
    }

    #[test]
    fn gradient_of_zero_is_zero() {
        let g = Grid::unit_square(6).unwrap();
        let d = gradient(&ScalarField::zeros(g));
        assert!(d.components().iter().all(|c| c.values().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn gradient_exact_on_affine_1d() {
        let g = Grid::line(11, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0]);
        for v in gradient(&f).component(0).values() {
            assert_relative_eq!(*v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gradient_of_quadratic_matches_derivative() {
        let g = Grid::line(11, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0] * x[0]);
        let d = gradient(&f);
        for i in 0..g.node_count() {
            assert_relative_eq!(d.component(0).values()[i], 2.0 * g.coords(i)[0], epsilon = 1e-12);
        }
    }

    #[test]
    fn gradient_exact_on_affine_2d() {
        let g = Grid::rect(7, 9, 1.0, 2.0).unwrap();
        let f = ScalarField::from_fn(g, |x| 3.0 * x[0] - 2.0 * x[1] + 1.0);
        let d = gradient(&f);
        for i in 0..g.node_count() {
            assert_relative_eq!(d.component(0).values()[i], 3.0, epsilon = 1e-12);
            assert_relative_eq!(d.component(1).values()[i], -2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn divergence_of_constant_is_zero() {
        let g = Grid::unit_square(8).unwrap();
        let v = VectorField::from_fn(g, |_| [1.5, -0.25]);
        assert!(divergence(&v).values().iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn divergence_of_radial_field() {
        let g = Grid::unit_square(17).unwrap();
        let v = VectorField::from_fn(g, |x| [x[0], x[1]]);
        for x in divergence(&v).values() {
            assert_relative_eq!(*x, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn truncate_cases() {
        let g = Grid::line(5, 4.0).unwrap();
        let b = TruncationBounds::new(-1.0, 1.0).unwrap();
        assert!(truncate(&ScalarField::constant(g, 5.0), b).values().iter().all(|&v| v == 1.0));
        assert!(truncate(&ScalarField::zeros(g), b).values().iter().all(|&v| v == 0.0));
        let f = ScalarField::from_fn(g, |x| x[0] - 2.0);
        assert_eq!(truncate(&f, b).values(), &[-1.0, -1.0, 0.0, 1.0, 1.0]);
        assert!(TruncationBounds::new(1.0, 1.0).is_err());
    }

    #[test]
    fn norms_of_constants() {
        let g = Grid::unit_square(9).unwrap();
        let one = ScalarField::constant(g, 1.0);
        for q in [1.0, 2.0, 3.5, 10.0] {
            assert_relative_eq!(lq_norm(&one, q), 1.0, epsilon = 1e-13);
        }
        assert_eq!(sup_norm(&ScalarField::constant(g, -2.5)), 2.5);
    }

    #[test]
    fn l2_norm_of_identity_on_unit_interval() {
        let exact = 1.0 / 3f64.sqrt();
        let err = |n| {
            let g = Grid::line(n, 1.0).unwrap();
            (lq_norm(&ScalarField::from_fn(g, |x| x[0]), 2.0) - exact).abs()
        };
        let (e1, e2) = (err(11), err(21));
        assert!(e1 < 0.01);
        // second order: halving h quarters the error
        assert!((e1 / e2 - 4.0).abs() < 0.3, "ratio {}", e1 / e2);
    }

    #[test]
    fn weak_norm_of_indicator() {
        // indicator of the middle three nodes: trapezoid measure 3h
        let g = Grid::line(11, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |x| if (x[0] - 0.5).abs() < 0.11 { 1.0 } else { 0.0 });
        let a: f64 = 3.0 * 0.1;
        for q in [1.0, 2.0, 4.0] {
            assert_relative_eq!(weak_lq_norm(&f, q), a.powf(1.0 / q), epsilon = 1e-14);
        }
        assert_eq!(weak_lq_norm(&ScalarField::zeros(g), 2.0), 0.0);
    }

    #[test]
    fn ball_nodes_clip_to_domain() {
        let g = Grid::line(11, 1.0).unwrap();
        assert_eq!(g.ball_nodes(&[0.0], 0.2), vec![0, 1, 2]);
        assert_eq!(g.ball_nodes(&[0.5], 0.1), vec![4, 5, 6]);
        assert!(g.ball_nodes(&[0.55], 0.01).is_empty());
    }

    #[test]
    fn dirichlet_energy_matches_face_sum() {
        let g = Grid::rect(6, 5, 1.0, 1.3).unwrap();
        let f = ScalarField::from_fn(g, |x| (3.0 * x[0]).sin() + x[1] * x[1] * x[0]);
        let h = g.h();
        let mut face_sum = 0.0;
        for i in 0..g.n()[0] {
            for j in 0..g.n()[1] {
                let v = f.values()[g.index(i, j)];
                let wy = if j == 0 || j == g.n()[1] - 1 { 0.5 } else { 1.0 };
                let wx = if i == 0 || i == g.n()[0] - 1 { 0.5 } else { 1.0 };
                if i + 1 < g.n()[0] {
                    let d = (f.values()[g.index(i + 1, j)] - v) / h[0];
                    face_sum += wy * h[0] * h[1] * d * d;
                }
                if j + 1 < g.n()[1] {
                    let d = (f.values()[g.index(i, j + 1)] - v) / h[1];
                    face_sum += wx * h[0] * h[1] * d * d;
                }
            }
        }
        assert_relative_eq!(dirichlet_energy(&f), face_sum, max_relative = 1e-13);
    }
}
