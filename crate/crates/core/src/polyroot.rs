//! Bracketed scalar root finding: safeguarded Newton with bisection fallback.

use thiserror::Error;

/// Default absolute tolerance on velocity roots (mm/s).
pub const VELOCITY_TOL: f64 = 1e-10;

const MAX_ITER: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoRoot { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("residual is not finite at x = {0}")]
    NotFinite(f64),
    #[error("invalid bracket [{0}, {1}]")]
    Bracket(f64, f64),
}

/// A continuous residual together with a bracket that should contain its root.
pub struct RootProblem<'a> {
    residual: Box<dyn Fn(f64) -> f64 + 'a>,
    derivative: Option<Box<dyn Fn(f64) -> f64 + 'a>>,
    pub lo: f64,
    pub hi: f64,
    /// Absolute tolerance on the root.
    pub tol: f64,
    /// Early exit once `|f(x)| <= residual_tol * max(1, scale)`.
    pub residual_tol: f64,
    /// Characteristic magnitude of the residual, used by [`verify_root`].
    pub scale: f64,
}

impl<'a> RootProblem<'a> {
    pub fn new(residual: impl Fn(f64) -> f64 + 'a, lo: f64, hi: f64) -> Self {
        RootProblem {
            residual: Box::new(residual),
            derivative: None,
            lo,
            hi,
            tol: VELOCITY_TOL,
            residual_tol: 1e-13,
            scale: 1.0,
        }
    }

    pub fn with_derivative(mut self, derivative: impl Fn(f64) -> f64 + 'a) -> Self {
        self.derivative = Some(Box::new(derivative));
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn residual_tol(mut self, tol: f64) -> Self {
        self.residual_tol = tol;
        self
    }

    pub fn scale(mut self, scale: f64) -> Self {
        self.scale = scale.abs();
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.residual)(x)
    }

    fn eval_checked(&self, x: f64) -> Result<f64, RootError> {
        let f = self.eval(x);
        if f.is_nan() {
            Err(RootError::NotFinite(x))
        } else {
            Ok(f)
        }
    }

    fn slope(&self, x: f64, a: f64, b: f64, fa: f64, fb: f64) -> f64 {
        match &self.derivative {
            Some(d) => d(x),
            None => (fb - fa) / (b - a),
        }
    }

    pub fn solve_bracketed(&self) -> Result<f64, RootError> {
        solve_bracketed(self)
    }
}

/// Finds a root of `problem.residual` inside `[lo, hi]`.
///
/// Newton steps are taken only while they land strictly inside the current
/// bracket and shrink the residual fast enough; otherwise the bracket is
/// bisected.
pub fn solve_bracketed(problem: &RootProblem<'_>) -> Result<f64, RootError> {
    let (lo, hi) = (problem.lo, problem.hi);
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(RootError::Bracket(lo, hi));
    }
    let f_lo = problem.eval_checked(lo)?;
    let f_hi = problem.eval_checked(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(RootError::NoRoot { lo, hi, f_lo, f_hi });
    }
    let ftol = problem.residual_tol * problem.scale.max(1.0);
    // orient so that f(neg) < 0 < f(pos)
    let (mut neg, mut pos) = if f_lo < 0.0 { (lo, hi) } else { (hi, lo) };
    let (mut f_neg, mut f_pos) = if f_lo < 0.0 { (f_lo, f_hi) } else { (f_hi, f_lo) };

    let mut x = 0.5 * (lo + hi);
    let mut step_old = (hi - lo).abs();
    let mut step = step_old;
    let mut fx = problem.eval_checked(x)?;
    let mut best = (x, fx);

    for _ in 0..MAX_ITER {
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx == 0.0 || fx.abs() <= ftol {
            return Ok(x);
        }
        if fx < 0.0 {
            neg = x;
            f_neg = fx;
        } else {
            pos = x;
            f_pos = fx;
        }
        let (a, b) = if neg < pos { (neg, pos) } else { (pos, neg) };
        if b - a <= problem.tol {
            break;
        }
        let (fa, fb) = if neg < pos { (f_neg, f_pos) } else { (f_pos, f_neg) };
        let d = problem.slope(x, a, b, fa, fb);
        let newton = x - fx / d;
        let accept = d.is_finite() && d != 0.0 && newton > a && newton < b && (2.0 * fx).abs() <= (step_old * d).abs();
        step_old = step;
        if accept {
            step = (newton - x).abs();
            x = newton;
        } else {
            step = 0.5 * (b - a);
            x = a + step;
        }
        fx = problem.eval_checked(x)?;
    }
    for (cx, cf) in [(neg, f_neg), (pos, f_pos)] {
        if cf.abs() < best.1.abs() {
            best = (cx, cf);
        }
    }
    Ok(best.0)
}

/// True when `x` is inside the bracket and the residual there is at most
/// `1e-9 * max(1, scale)`.
pub fn verify_root(problem: &RootProblem<'_>, x: f64) -> bool {
    if !(x >= problem.lo && x <= problem.hi) {
        return false;
    }
    let f = problem.eval(x);
    f.is_finite() && f.abs() <= 1e-9 * problem.scale.max(1.0)
}
