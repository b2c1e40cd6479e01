//! Recursive inequalities behind the level-set and fixed-point arguments,
//! iterated as equalities (the extremal case), plus a reader for Picard traces.

use crate::coupling::PicardTrace;
use crate::error::{Error, Result};

/// Values above this are reported as overflow by [`ynb_iterate`].
pub const OVERFLOW_LIMIT: f64 = 1e300;

/// Data of `y_{n+1} <= c b^n y_n^{1 + alpha}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricRecursion {
    c: f64,
    b: f64,
    alpha: f64,
}

impl GeometricRecursion {
    pub fn new(c: f64, b: f64, alpha: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::DomainError(format!("c must be positive, got {c}")));
        }
        if !(b > 1.0 && b.is_finite()) {
            return Err(Error::DomainError(format!("b must exceed 1, got {b}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::DomainError(format!("alpha must be positive, got {alpha}")));
        }
        Ok(GeometricRecursion { c, b, alpha })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Upper envelope `y0 b^{-n/alpha}` obeyed by every sequence started at or
    /// below [`ynb_threshold`].
    pub fn envelope(&self, y0: f64, n: usize) -> f64 {
        y0 * self.b.powf(-(n as f64) / self.alpha)
    }
}

/// Starting level `c^{-1/alpha} b^{-1/alpha^2}` below which the recursion
/// drives `y_n` to zero.
pub fn ynb_threshold(r: &GeometricRecursion) -> f64 {
    r.c.powf(-1.0 / r.alpha) * r.b.powf(-1.0 / (r.alpha * r.alpha))
}

#[derive(Debug, Clone, PartialEq)]
pub struct YnbSequence {
    /// `y_0, ..., y_n`; stops early on overflow.
    pub values: Vec<f64>,
    pub overflow: bool,
}

/// Iterate `y_{n+1} = c b^n y_n^{1 + alpha}` from `y0` for `n_max` steps.
pub fn ynb_iterate(r: &GeometricRecursion, y0: f64, n_max: usize) -> Result<YnbSequence> {
    if !(y0 >= 0.0 && y0.is_finite()) {
        return Err(Error::DomainError(format!("y0 must be non-negative, got {y0}")));
    }
    let mut values = Vec::with_capacity(n_max + 1);
    values.push(y0);
    let mut y = y0;
    for n in 0..n_max {
        // log form keeps b^n from overflowing on its own
        y = if y == 0.0 {
            0.0
        } else {
            (r.c.ln() + n as f64 * r.b.ln() + (1.0 + r.alpha) * y.ln()).exp()
        };
        if !(y <= OVERFLOW_LIMIT) {
            return Ok(YnbSequence { values, overflow: true });
        }
        values.push(y);
    }
    Ok(YnbSequence { values, overflow: false })
}

/// Data of `b_k <= b0 + lambda b_{k-1}^{1 + alpha}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbedRecursion {
    b0: f64,
    lambda: f64,
    alpha: f64,
}

impl PerturbedRecursion {
    pub fn new(b0: f64, lambda: f64, alpha: f64) -> Result<Self> {
        if !(b0 >= 0.0 && b0.is_finite()) {
            return Err(Error::DomainError(format!("b0 must be non-negative, got {b0}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::DomainError(format!("lambda must be positive, got {lambda}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::DomainError(format!("alpha must be positive, got {alpha}")));
        }
        Ok(PerturbedRecursion { b0, lambda, alpha })
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `b_0, ..., b_{k_max}` of the equality dynamics `b_k = b0 + lambda b_{k-1}^{1+alpha}`.
    pub fn iterate(&self, k_max: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(k_max + 1);
        let mut b = self.b0;
        out.push(b);
        for _ in 0..k_max {
            b = self.b0 + self.lambda * b.powf(1.0 + self.alpha);
            out.push(b);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallCheck {
    /// `2 lambda (2 b0)^alpha < 1`.
    pub applies: bool,
    /// `b0 / (1 - lambda (2 b0)^alpha)` when `applies`, otherwise infinite.
    pub bound: f64,
}

/// Whether the smallness gate holds, and the resulting uniform bound.
pub fn small_check(r: &PerturbedRecursion) -> SmallCheck {
    let q = r.lambda * (2.0 * r.b0).powf(r.alpha);
    if 2.0 * q < 1.0 {
        SmallCheck {
            applies: true,
            bound: r.b0 / (1.0 - q),
        }
    } else {
        SmallCheck {
            applies: false,
            bound: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardReading {
    /// `max_k d_k <= 2 (d_0 + d_1)`.
    pub plateau_ok: bool,
    /// Geometric mean of `eta_{k+1} / eta_k` over `k >= 1`; zero when some
    /// `eta_k` vanishes.
    pub contraction_ratio: f64,
}

/// Summarize a Picard trace: does `d_k` stay bounded and how fast does `eta_k`
/// shrink.
pub fn interpret_picard(trace: &PicardTrace) -> Result<PicardReading> {
    let it = &trace.iterates;
    if it.len() < 3 {
        return Err(Error::TooShortTrace { needed: 3, got: it.len() });
    }
    let dmax = it.iter().map(|i| i.d).fold(0.0, f64::max);
    let plateau_ok = dmax <= 2.0 * (it[0].d + it[1].d);
    let tail = &it[1..];
    let contraction_ratio = if tail.iter().any(|i| i.eta == 0.0) {
        0.0
    } else {
        let logs: f64 = tail.windows(2).map(|w| (w[1].eta / w[0].eta).ln()).sum();
        (logs / (tail.len() - 1) as f64).exp()
    };
    Ok(PicardReading {
        plateau_ok,
        contraction_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::PicardIterate;

    #[test]
    fn thresholds() {
        let r = GeometricRecursion::new(1.0, 2.0, 1.0).unwrap();
        assert_eq!(ynb_threshold(&r), 0.5);
        let r = GeometricRecursion::new(4.0, 2.0, 2.0).unwrap();
        assert!((ynb_threshold(&r) - 2f64.powf(-1.25)).abs() < 1e-15);
        let r = GeometricRecursion::new(1.0, 1.0 + 1e-12, 1.0).unwrap();
        assert!((ynb_threshold(&r) - 1.0).abs() < 1e-11);
        assert!(GeometricRecursion::new(1.0, 1.0, 1.0).is_err());
        assert!(GeometricRecursion::new(0.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn hand_iteration() {
        let r = GeometricRecursion::new(1.0, 2.0, 1.0).unwrap();
        let s = ynb_iterate(&r, 0.5, 3).unwrap();
        let expect = [0.5, 0.25, 0.125, 0.0625];
        for (a, b) in s.values.iter().zip(expect) {
            assert!((a - b).abs() <= 1e-15 * b);
        }
        assert!(ynb_iterate(&r, 0.0, 5).unwrap().values.iter().all(|v| *v == 0.0));
        let s = ynb_iterate(&r, 2.0, 10).unwrap();
        assert!(s.overflow);
    }

    #[test]
    fn small_gate() {
        let c = small_check(&PerturbedRecursion::new(0.1, 1.0, 1.0).unwrap());
        assert!(c.applies);
        assert!((c.bound - 0.125).abs() < 1e-15);
        let c = small_check(&PerturbedRecursion::new(0.0, 1.0, 1.0).unwrap());
        assert!(c.applies && c.bound == 0.0);
        assert!(!small_check(&PerturbedRecursion::new(1.0, 1.0, 1.0).unwrap()).applies);
    }

    fn trace(d: &[f64], eta: &[f64]) -> PicardTrace {
        let iterates = d
            .iter()
            .zip(eta)
            .enumerate()
            .map(|(k, (&d, &eta))| PicardIterate { k, a: d, b: 0.0, d, eta })
            .collect();
        PicardTrace {
            iterates,
            c0: d.iter().cloned().fold(0.0, f64::max),
            non_contracting: false,
            converged: false,
        }
    }

    #[test]
    fn reading_traces() {
        let r = interpret_picard(&trace(&[0.0; 4], &[0.0; 4])).unwrap();
        assert!(r.plateau_ok);
        assert_eq!(r.contraction_ratio, 0.0);
        let r = interpret_picard(&trace(&[1.0, 1.1, 1.1, 1.1], &[0.0, 1.0, 0.5, 0.25])).unwrap();
        assert!(r.plateau_ok);
        assert!((r.contraction_ratio - 0.5).abs() < 1e-15);
        let r = interpret_picard(&trace(&[1.0, 2.0, 8.0, 64.0], &[0.0, 1.0, 2.0, 4.0])).unwrap();
        assert!(!r.plateau_ok && r.contraction_ratio >= 1.0);
        assert!(matches!(interpret_picard(&trace(&[1.0], &[0.0])), Err(Error::TooShortTrace { .. })));
    }
}
