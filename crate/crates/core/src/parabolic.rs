//! One time step of the conductance equation
//!
//! ```text
//! d_t m - D^2 Lap m - E^2 (m . grad p) grad p + |m|^{2(gamma-1)} m = 0,  m = 0 on the boundary.
//! ```
//!
//! Diffusion is backward Euler, the activation term is explicit at the old
//! state, and the metabolic term is either semi-implicit
//! (`m_new (|m_old|^2 + eps)^(gamma-1)`) or explicit. All components share a
//! single system matrix `diag(1 + dt r) + dt D^2 L`.

use crate::elliptic::{EllipticOperator, DEFAULT_CG_TOL};
use crate::error::{Error, Result};
use crate::mesh::{gradient, Grid, ScalarField, VectorField};
use crate::sparse::{pcg, CsrMatrix};

/// Data of the initial boundary value problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysParams {
    d: f64,
    e: f64,
    gamma: f64,
    source: ScalarField,
    m0: VectorField,
}

impl PhysParams {
    /// Validates `D, E > 0`, `gamma > 1/2`, matching grids, and that `m0`
    /// vanishes on the boundary.
    pub fn new(d: f64, e: f64, gamma: f64, source: ScalarField, m0: VectorField) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::param("D", format!("must be positive, got {d}")));
        }
        if !(e > 0.0 && e.is_finite()) {
            return Err(Error::param("E", format!("must be positive, got {e}")));
        }
        if !(gamma > 0.5 && gamma.is_finite()) {
            return Err(Error::param("gamma", format!("must exceed 1/2, got {gamma}")));
        }
        source.grid().check_same(m0.grid())?;
        if !source.is_finite() || !m0.is_finite() {
            return Err(Error::NonFiniteField);
        }
        if !m0.vanishes_on_boundary() {
            return Err(Error::param("m0", "must vanish on boundary nodes"));
        }
        Ok(PhysParams {
            d,
            e,
            gamma,
            source,
            m0,
        })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn e(&self) -> f64 {
        self.e
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn source(&self) -> &ScalarField {
        &self.source
    }

    pub fn m0(&self) -> &VectorField {
        &self.m0
    }

    pub fn grid(&self) -> &Grid {
        self.source.grid()
    }

    /// Same coefficients with data `(s m0, s S)`.
    pub fn scaled(&self, s: f64) -> PhysParams {
        PhysParams {
            source: self.source.scaled(s),
            m0: self.m0.scaled(s),
            ..self.clone()
        }
    }

    /// Copy with the activation coefficient replaced. Used by tests that
    /// switch the coupling off (`E` is otherwise required to be positive).
    pub fn with_activation(&self, e: f64) -> PhysParams {
        PhysParams { e, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReactionMode {
    SemiImplicit,
    Explicit,
}

/// Time step settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub dt: f64,
    /// Regularization of `|m|^{2(gamma-1)}`; only used for `gamma < 1`.
    pub eps_reg: f64,
    pub reaction_mode: ReactionMode,
    /// Optional stability guard: steps with `dt > dt_max` are rejected.
    pub dt_max: Option<f64>,
    pub cg_tol: f64,
}

impl StepConfig {
    pub fn new(dt: f64) -> Self {
        StepConfig {
            dt,
            eps_reg: 1e-12,
            reaction_mode: ReactionMode::SemiImplicit,
            dt_max: None,
            cg_tol: DEFAULT_CG_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.eps_reg >= 0.0) {
            return Err(Error::param("eps_reg", format!("must be non-negative, got {}", self.eps_reg)));
        }
        if !(self.cg_tol > 0.0) {
            return Err(Error::param("cg_tol", format!("must be positive, got {}", self.cg_tol)));
        }
        if let Some(max) = self.dt_max {
            if self.dt > max {
                return Err(Error::param("dt", format!("{} exceeds the stability guard dt_max = {max}", self.dt)));
            }
        }
        Ok(())
    }

    /// The regularization actually applied: zero for `gamma >= 1`.
    pub fn effective_eps(&self, gamma: f64) -> f64 {
        if gamma >= 1.0 {
            0.0
        } else {
            self.eps_reg
        }
    }
}

/// Optional modifications of a step, for verification runs.
#[derive(Debug, Clone, Copy)]
pub struct StepHooks<'a> {
    /// Turn the diffusion term off.
    pub diffusion: bool,
    /// Extra source `g` added to the right-hand side, evaluated at the new time.
    pub source: Option<&'a VectorField>,
}

impl Default for StepHooks<'_> {
    fn default() -> Self {
        StepHooks {
            diffusion: true,
            source: None,
        }
    }
}

/// `E^2 (m . grad p) grad p` with the nodal gradient of `p`.
pub fn activation(m: &VectorField, p: &ScalarField, e: f64) -> VectorField {
    let gp = gradient(p);
    let proj = m.dot(&gp);
    let e2 = e * e;
    let comps = gp
        .components()
        .iter()
        .map(|c| {
            ScalarField::from_values(
                *c.grid(),
                c.values().iter().zip(proj.values()).map(|(g, s)| e2 * s * g).collect(),
            )
            .expect("same grid")
        })
        .collect();
    VectorField::from_components(comps).expect("same grid")
}

/// Reusable stepping machinery for one grid: keeps the interior Laplacian so
/// repeated steps only rebuild the diagonal.
#[derive(Debug, Clone)]
pub struct ConductanceStepper {
    laplacian: EllipticOperator,
}

impl ConductanceStepper {
    pub fn new(grid: Grid) -> Self {
        ConductanceStepper {
            laplacian: EllipticOperator::laplacian(grid),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.laplacian.grid()
    }

    /// Solve `(1 + dt r) m_new + dt D^2 L m_new = m_old + dt f` (semi-implicit
    /// reaction) or `m_new + dt D^2 L m_new = m_old + dt (f - r m_old)`
    /// (explicit reaction), component by component.
    pub fn step_forced(
        &self,
        m_old: &VectorField,
        forcing: &VectorField,
        d: f64,
        gamma: f64,
        cfg: &StepConfig,
        diffusion: bool,
    ) -> Result<VectorField> {
        cfg.validate()?;
        self.grid().check_same(m_old.grid())?;
        let dt = cfg.dt;
        let eps = cfg.effective_eps(gamma);
        let rate: Vec<f64> = m_old
            .norm_squared()
            .values()
            .iter()
            .map(|&s| (s + eps).powf(gamma - 1.0))
            .collect();
        let interior = self.laplacian.interior_nodes();
        let diag: Vec<f64> = interior
            .iter()
            .map(|&i| match cfg.reaction_mode {
                ReactionMode::SemiImplicit => 1.0 + dt * rate[i],
                ReactionMode::Explicit => 1.0,
            })
            .collect();
        let system: CsrMatrix = if diffusion {
            self.laplacian.matrix().scaled(dt * d * d).add_diagonal(&diag)
        } else {
            CsrMatrix::from_triplets(diag.len(), diag.iter().enumerate().map(|(k, &v)| (k, k, v)).collect())
        };
        let cap = 20 * interior.len().max(1);
        let mut comps = Vec::with_capacity(m_old.dim());
        for a in 0..m_old.dim() {
            let old = m_old.component(a).values();
            let f = forcing.component(a).values();
            let rhs: Vec<f64> = interior
                .iter()
                .map(|&i| match cfg.reaction_mode {
                    ReactionMode::SemiImplicit => old[i] + dt * f[i],
                    ReactionMode::Explicit => old[i] + dt * (f[i] - rate[i] * old[i]),
                })
                .collect();
            let mut x: Vec<f64> = interior.iter().map(|&i| old[i]).collect();
            pcg(&system, &rhs, &mut x, cfg.cg_tol, cap)?;
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::BlowUp);
            }
            comps.push(self.laplacian.extend(&x));
        }
        VectorField::from_components(comps)
    }

    pub fn advance_with(
        &self,
        m: &VectorField,
        p: &ScalarField,
        params: &PhysParams,
        cfg: &StepConfig,
        hooks: StepHooks<'_>,
    ) -> Result<VectorField> {
        let mut forcing = activation(m, p, params.e());
        if let Some(g) = hooks.source {
            for a in 0..forcing.dim() {
                let extra = g.component(a).values();
                for (f, x) in forcing.component_mut(a).values_mut().iter_mut().zip(extra) {
                    *f += x;
                }
            }
        }
        self.step_forced(m, &forcing, params.d(), params.gamma(), cfg, hooks.diffusion)
    }

    pub fn advance(&self, m: &VectorField, p: &ScalarField, params: &PhysParams, cfg: &StepConfig) -> Result<VectorField> {
        self.advance_with(m, p, params, cfg, StepHooks::default())
    }
}

/// One IMEX step of the conductance equation. The result vanishes on the
/// boundary; non-finite output is reported as [`Error::BlowUp`].
pub fn advance(m: &VectorField, p: &ScalarField, params: &PhysParams, cfg: &StepConfig) -> Result<VectorField> {
    ConductanceStepper::new(*m.grid()).advance(m, p, params, cfg)
}

/// Gap in the monotonicity inequality for `z -> |z|^{2 gamma - 2} z`:
///
/// - `gamma >= 1`: `(|x|^{2g-2} x - |y|^{2g-2} y) . (x - y) - 2^{1-2g} |x - y|^{2g}`
/// - `1/2 < gamma <= 1`:
///   `(|x| + |y|)^{2-2g} (|x|^{2g-2} x - |y|^{2g-2} y) . (x - y) - (2g - 1) |x - y|^2`
///
/// Both are non-negative up to rounding.
pub fn monotonicity_gap(x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
    if !(gamma > 0.5) {
        return Err(Error::DomainError(format!("gamma must exceed 1/2, got {gamma}")));
    }
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!("vector lengths {} and {}", x.len(), y.len())));
    }
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let (nx, ny) = (norm(x), norm(y));
    // |z|^{2g-2} z, with the value 0 at z = 0 (continuous for g > 1/2)
    let power = |n: f64| if n == 0.0 { 0.0 } else { n.powf(2.0 * gamma - 2.0) };
    let (px, py) = (power(nx), power(ny));
    let lhs: f64 = x.iter().zip(y).map(|(a, b)| (px * a - py * b) * (a - b)).sum();
    let diff = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if gamma >= 1.0 {
        Ok(lhs - 2f64.powf(1.0 - 2.0 * gamma) * diff.powf(2.0 * gamma))
    } else {
        let s = nx + ny;
        let weight = if s == 0.0 { 0.0 } else { s.powf(2.0 - 2.0 * gamma) };
        Ok(weight * lhs - (2.0 * gamma - 1.0) * diff * diff)
    }
}
