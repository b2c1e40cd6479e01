//! The pressure equation `-div[(I + m (x) m) grad p] = S` with `p = 0` on the
//! boundary.
//!
//! The operator is assembled from its energy `int grad p . A grad p`, split
//! over the corner sub-cells of [`Grid::corners`] with `A = I + m m^T` sampled
//! at each corner node. This makes the discrete operator a sum of positive
//! semidefinite pieces, so the ellipticity sandwich
//! `|xi|^2 <= A xi . xi <= (1 + |m|^2) |xi|^2` carries over exactly to the
//! Rayleigh quotient against the discrete Laplacian. For `m = 0` the operator
//! is the standard (2 dim + 1)-point Laplacian; the diagonal face coefficients
//! are arithmetic means of `A` at the two face nodes, and the cross terms of
//! `m (x) m` couple the diagonal neighbours of each cell.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mesh::{Grid, ScalarField, VectorField};
use crate::sparse::{pcg, CgOutcome, CsrMatrix};

/// Default relative residual tolerance for pressure solves.
pub const DEFAULT_CG_TOL: f64 = 1e-10;

/// Assembled pressure operator over the interior nodes (Dirichlet rows and
/// columns eliminated). Row `i` approximates `-div(A grad p)` at node
/// `interior_nodes()[i]`.
#[derive(Debug, Clone)]
pub struct EllipticOperator {
    grid: Grid,
    interior: Vec<usize>,
    slot: Vec<usize>,
    matrix: CsrMatrix,
    max_m_squared: f64,
}

const NOT_INTERIOR: usize = usize::MAX;

fn interior_slots(grid: &Grid) -> (Vec<usize>, Vec<usize>) {
    let interior = grid.interior_nodes();
    let mut slot = vec![NOT_INTERIOR; grid.node_count()];
    for (k, &i) in interior.iter().enumerate() {
        slot[i] = k;
    }
    (interior, slot)
}

/// CSR pattern coupling each unknown to the unknowns of its surrounding
/// 3^dim block, columns ascending.
fn stencil_pattern(grid: &Grid, interior: &[usize], slot: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let n = grid.n();
    let ny = if grid.dim() == 1 { 1 } else { n[1] };
    let mut row_ptr = Vec::with_capacity(interior.len() + 1);
    let mut col_idx = Vec::with_capacity(interior.len() * if grid.dim() == 1 { 3 } else { 9 });
    row_ptr.push(0);
    for &i in interior {
        let (ix, iy) = grid.multi_index(i);
        let start = col_idx.len();
        for jx in ix.saturating_sub(1)..(ix + 2).min(n[0]) {
            for jy in iy.saturating_sub(1)..(iy + 2).min(ny) {
                let s = slot[grid.index(jx, jy)];
                if s != NOT_INTERIOR {
                    col_idx.push(s);
                }
            }
        }
        col_idx[start..].sort_unstable();
        row_ptr.push(col_idx.len());
    }
    (row_ptr, col_idx)
}

/// Coefficient tensor `I + m m^T` for a nodal vector.
#[inline]
pub fn coefficient_tensor(m: [f64; 2]) -> [[f64; 2]; 2] {
    [
        [1.0 + m[0] * m[0], m[0] * m[1]],
        [m[0] * m[1], 1.0 + m[1] * m[1]],
    ]
}

/// Face tensor between nodes `a` and `b`: the arithmetic mean of the nodal
/// coefficient tensors.
pub fn face_tensor(m: &VectorField, a: usize, b: usize) -> [[f64; 2]; 2] {
    let (ta, tb) = (coefficient_tensor(m.at(a)), coefficient_tensor(m.at(b)));
    let mut t = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            t[r][c] = 0.5 * (ta[r][c] + tb[r][c]);
        }
    }
    t
}

impl EllipticOperator {
    /// Assemble the operator for conductance `m`.
    pub fn assemble(m: &VectorField) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NonFiniteField);
        }
        let grid = *m.grid();
        let (interior, slot) = interior_slots(&grid);
        let h = grid.h().to_vec();
        let vol = grid.cell_volume();
        let (row_ptr, col_idx) = stencil_pattern(&grid, &interior, &slot);
        let mut values = vec![0.0; col_idx.len()];
        let mut add = |r: usize, c: usize, v: f64| {
            let k = (row_ptr[r]..row_ptr[r + 1]).find(|&k| col_idx[k] == c).expect("entry in pattern");
            values[k] += v;
        };
        for c in grid.corners() {
            let a = coefficient_tensor(m.at(c.node));
            let w = c.weight / vol;
            // gradient rows: (node, d/dx coefficient, d/dy coefficient)
            let mut stencil: [(usize, f64, f64); 4] = [(0, 0.0, 0.0); 4];
            let mut len = 0;
            let mut push = |node: usize, gx: f64, gy: f64| {
                for s in stencil.iter_mut().take(len) {
                    if s.0 == node {
                        s.1 += gx;
                        s.2 += gy;
                        return;
                    }
                }
                stencil[len] = (node, gx, gy);
                len += 1;
            };
            push(c.x_edge.0, -1.0 / h[0], 0.0);
            push(c.x_edge.1, 1.0 / h[0], 0.0);
            if let Some((ya, yb)) = c.y_edge {
                push(ya, 0.0, -1.0 / h[1]);
                push(yb, 0.0, 1.0 / h[1]);
            }
            for p in 0..len {
                let (ni, gxi, gyi) = stencil[p];
                if slot[ni] == NOT_INTERIOR {
                    continue;
                }
                for q in p..len {
                    let (nj, gxj, gyj) = stencil[q];
                    if slot[nj] == NOT_INTERIOR {
                        continue;
                    }
                    let v = w
                        * (gxi * (a[0][0] * gxj + a[0][1] * gyj)
                            + gyi * (a[1][0] * gxj + a[1][1] * gyj));
                    if v == 0.0 {
                        continue;
                    }
                    add(slot[ni], slot[nj], v);
                    if q != p {
                        add(slot[nj], slot[ni], v);
                    }
                }
            }
        }
        Ok(EllipticOperator {
            grid,
            matrix: CsrMatrix::from_pattern(&row_ptr, &col_idx, &values),
            interior,
            slot,
            max_m_squared: m.norm_squared().max(),
        })
    }

    /// The discrete Dirichlet Laplacian `-Delta` on `grid`.
    pub fn laplacian(grid: Grid) -> Self {
        EllipticOperator::assemble(&VectorField::zeros(grid)).expect("zero field is finite")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    pub fn unknowns(&self) -> usize {
        self.interior.len()
    }

    /// `max |m|^2` over the nodes of the field the operator was built from.
    pub fn max_m_squared(&self) -> f64 {
        self.max_m_squared
    }

    /// Restrict a nodal field to the interior unknowns.
    pub fn restrict(&self, f: &ScalarField) -> Vec<f64> {
        self.interior.iter().map(|&i| f.values()[i]).collect()
    }

    /// Extend interior values to a nodal field that is zero on the boundary.
    pub fn extend(&self, x: &[f64]) -> ScalarField {
        let mut out = ScalarField::zeros(self.grid);
        for (&i, v) in self.interior.iter().zip(x) {
            out.values_mut()[i] = *v;
        }
        out
    }

    /// Apply the operator to a nodal field; boundary values of `p` are treated
    /// as zero and the result vanishes on the boundary.
    pub fn apply(&self, p: &ScalarField) -> ScalarField {
        let x = self.restrict(p);
        let mut y = vec![0.0; x.len()];
        self.matrix.mul_vec(&x, &mut y);
        self.extend(&y)
    }

    /// `xi^T K xi` over interior vectors.
    pub fn quadratic_form(&self, xi: &[f64]) -> f64 {
        let mut y = vec![0.0; xi.len()];
        self.matrix.mul_vec(xi, &mut y);
        xi.iter().zip(&y).map(|(a, b)| a * b).sum()
    }

    /// Interior slot of node `i`, if it is an unknown.
    pub fn slot(&self, i: usize) -> Option<usize> {
        match self.slot[i] {
            NOT_INTERIOR => None,
            k => Some(k),
        }
    }

    /// Solve `K p = rhs` on the interior, optionally warm-starting from `guess`.
    pub fn solve(
        &self,
        rhs: &ScalarField,
        tol: f64,
        guess: Option<&ScalarField>,
    ) -> Result<(ScalarField, CgOutcome)> {
        if !(tol > 0.0) {
            return Err(Error::param("tol", format!("must be positive, got {tol}")));
        }
        let b = self.restrict(rhs);
        let mut x = match guess {
            Some(g) => self.restrict(g),
            None => vec![0.0; b.len()],
        };
        let cap = 20 * self.unknowns().max(1);
        let outcome = pcg(&self.matrix, &b, &mut x, tol, cap)?;
        Ok((self.extend(&x), outcome))
    }
}

/// Assemble the pressure operator for `m`.
pub fn assemble(m: &VectorField) -> Result<EllipticOperator> {
    EllipticOperator::assemble(m)
}

/// Solve the pressure equation for conductance `m` and source `s`.
///
/// The returned `p` vanishes on the boundary and satisfies
/// `||K p - S||_2 <= tol ||S||_2` over the interior nodes.
pub fn solve_pressure(m: &VectorField, s: &ScalarField, tol: f64) -> Result<ScalarField> {
    m.grid().check_same(s.grid())?;
    let op = EllipticOperator::assemble(m)?;
    op.solve(s, tol, None).map(|(p, _)| p)
}

/// Applies the `m (x) m` part of the operator, i.e. the discretization of
/// `-div[(m . grad p) m]`, without assembling a matrix. Boundary values of `p`
/// must be zero; the result vanishes on the boundary.
///
/// With `L` the Laplacian, `EllipticOperator::assemble(m).apply(p)` equals
/// `L p + anisotropic_apply(m, p)`.
pub fn anisotropic_apply(m: &VectorField, p: &ScalarField) -> ScalarField {
    let grid = *p.grid();
    let h = grid.h().to_vec();
    let vol = grid.cell_volume();
    let mut out = ScalarField::zeros(grid);
    let vals = p.values();
    let o = out.values_mut();
    for c in grid.corners() {
        let g = c.gradient(vals, &h);
        let mv = m.at(c.node);
        let s = (mv[0] * g[0] + mv[1] * g[1]) * c.weight / vol;
        o[c.x_edge.1] += s * mv[0] / h[0];
        o[c.x_edge.0] -= s * mv[0] / h[0];
        if let Some((ya, yb)) = c.y_edge {
            o[yb] += s * mv[1] / h[1];
            o[ya] -= s * mv[1] / h[1];
        }
    }
    out.pin_boundary();
    out
}

/// Extremes of the Rayleigh quotient `(K xi . xi) / (L xi . xi)` over random
/// interior vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayleighBounds {
    pub lo: f64,
    pub hi: f64,
    /// `1 + max |m|^2`, the upper end of the continuous sandwich.
    pub upper_limit: f64,
}

impl RayleighBounds {
    /// Whether `[lo, hi]` lies inside `[1 - slack, upper_limit + slack]`.
    pub fn within(&self, slack: f64) -> bool {
        self.lo >= 1.0 - slack && self.hi <= self.upper_limit + slack
    }
}

pub fn rayleigh_bounds(op: &EllipticOperator, m: &VectorField, trials: usize, seed: u64) -> Result<RayleighBounds> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    op.grid().check_same(m.grid())?;
    let lap = EllipticOperator::laplacian(*op.grid());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut xi = vec![0.0; op.unknowns()];
    for _ in 0..trials {
        xi.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        let q = op.quadratic_form(&xi) / lap.quadratic_form(&xi);
        lo = lo.min(q);
        hi = hi.max(q);
    }
    Ok(RayleighBounds {
        lo,
        hi,
        upper_limit: 1.0 + m.norm_squared().max(),
    })
}
