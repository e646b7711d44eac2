//! Planar NURBS geometry: basis functions, points, derivatives, curvature
//! and arc length.

use crate::geom::Vec2;
use crate::polyroot::RootProblem;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default absolute tolerance (mm) for adaptive Simpson arc length.
pub const ARC_LENGTH_TOL: f64 = 1e-7;

/// `|C' x C''| < CURVATURE_EPS * |C'|^3` is treated as zero curvature.
pub const CURVATURE_EPS: f64 = 1e-12;

const SIMPSON_MIN_DEPTH: u32 = 3;
const SIMPSON_MAX_DEPTH: u32 = 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("degree must be >= 1, got {0}")]
    Degree(usize),
    #[error("weights length {weights} != control_points length {points}")]
    WeightCount { points: usize, weights: usize },
    #[error("knots length {got} != control_points + degree + 1 = {expected}")]
    KnotCount { expected: usize, got: usize },
    #[error("need at least degree + 1 = {needed} control points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("knots must be non-decreasing (index {0})")]
    KnotOrder(usize),
    #[error("knot vector must be clamped on [0, 1]: first and last degree + 1 knots must equal 0 and 1")]
    NotClamped,
    #[error("weight {index} must be positive and finite, got {value}")]
    Weight { index: usize, value: f64 },
    #[error("control point {0} is not finite")]
    NonFinitePoint(usize),
    #[error("parameter {0} outside [0, 1]")]
    Domain(f64),
    #[error("arc length {s} outside [0, {total}]")]
    LengthDomain { s: f64, total: f64 },
    #[error("zero first derivative (cusp) at u = {0}")]
    Cusp(f64),
    #[error("arc length inversion failed at s = {0}")]
    Inversion(f64),
}

/// Raw on-disk representation of a curve file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveFile {
    pub degree: usize,
    pub control_points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub knots: Vec<f64>,
}

/// A validated, clamped NURBS curve on `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveFile", into = "CurveFile")]
pub struct NurbsCurve {
    degree: usize,
    control_points: Vec<Vec2>,
    weights: Vec<f64>,
    knots: Vec<f64>,
}

impl TryFrom<CurveFile> for NurbsCurve {
    type Error = CurveError;
    fn try_from(f: CurveFile) -> Result<Self, CurveError> {
        NurbsCurve::new(
            f.degree,
            f.control_points.into_iter().map(Vec2::from).collect(),
            f.weights,
            f.knots,
        )
    }
}

impl From<NurbsCurve> for CurveFile {
    fn from(c: NurbsCurve) -> Self {
        CurveFile {
            degree: c.degree,
            control_points: c.control_points.into_iter().map(Into::into).collect(),
            weights: c.weights,
            knots: c.knots,
        }
    }
}

/// Point, first/second derivative and curvature radius at one parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveKinematics {
    pub point: Vec2,
    pub d1: Vec2,
    pub d2: Vec2,
    /// `+inf` where the curve is locally straight.
    pub curvature_radius: f64,
}

impl NurbsCurve {
    pub fn new(
        degree: usize,
        control_points: Vec<Vec2>,
        weights: Vec<f64>,
        knots: Vec<f64>,
    ) -> Result<Self, CurveError> {
        if degree < 1 {
            return Err(CurveError::Degree(degree));
        }
        let count = control_points.len();
        if count < degree + 1 {
            return Err(CurveError::TooFewPoints { needed: degree + 1, got: count });
        }
        if weights.len() != count {
            return Err(CurveError::WeightCount { points: count, weights: weights.len() });
        }
        if knots.len() != count + degree + 1 {
            return Err(CurveError::KnotCount { expected: count + degree + 1, got: knots.len() });
        }
        if let Some(i) = control_points.iter().position(|p| !p.is_finite()) {
            return Err(CurveError::NonFinitePoint(i));
        }
        for (index, &value) in weights.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(CurveError::Weight { index, value });
            }
        }
        for i in 1..knots.len() {
            if !(knots[i] >= knots[i - 1]) {
                return Err(CurveError::KnotOrder(i));
            }
        }
        let m = knots.len();
        if knots[..=degree].iter().any(|&k| k != 0.0) || knots[m - degree - 1..].iter().any(|&k| k != 1.0) {
            return Err(CurveError::NotClamped);
        }
        Ok(NurbsCurve { degree, control_points, weights, knots })
    }

    /// Uniformly weighted curve with a clamped uniform knot vector.
    pub fn clamped_uniform(degree: usize, control_points: Vec<Vec2>) -> Result<Self, CurveError> {
        let n = control_points.len();
        let weights = vec![1.0; n];
        let interior = n.saturating_sub(degree + 1);
        let mut knots = vec![0.0; degree + 1];
        for i in 1..=interior {
            knots.push(i as f64 / (interior + 1) as f64);
        }
        knots.extend(std::iter::repeat(1.0).take(degree + 1));
        NurbsCurve::new(degree, control_points, weights, knots)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn control_points(&self) -> &[Vec2] {
        &self.control_points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    fn check_domain(u: f64) -> Result<(), CurveError> {
        if (0.0..=1.0).contains(&u) {
            Ok(())
        } else {
            Err(CurveError::Domain(u))
        }
    }

    /// Knot span index `i` with `knots[i] <= u < knots[i+1]`; the last
    /// non-empty span for `u = 1`.
    fn find_span(&self, u: f64) -> usize {
        let n = self.control_points.len() - 1;
        let p = self.degree;
        if u >= self.knots[n + 1] {
            return n;
        }
        if u <= self.knots[p] {
            return p;
        }
        let (mut lo, mut hi) = (p, n + 1);
        let mut mid = (lo + hi) / 2;
        while u < self.knots[mid] || u >= self.knots[mid + 1] {
            if u < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
            mid = (lo + hi) / 2;
        }
        mid
    }

    /// Non-zero basis functions on `span` and their derivatives up to
    /// `order`; `out[k][j]` is the k-th derivative of N_{span-p+j,p}.
    fn basis_derivatives(&self, span: usize, u: f64, order: usize) -> Vec<Vec<f64>> {
        let p = self.degree;
        let knots = &self.knots;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = u - knots[span + 1 - j];
            right[j] = knots[span + j] - u;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = if ndu[j][r] == 0.0 { 0.0 } else { ndu[r][j - 1] / ndu[j][r] };
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }

        let order = order.min(p);
        let mut ders = vec![vec![0.0; p + 1]; order + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let mut a = vec![vec![0.0; p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=order {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    let rk = rk as usize;
                    a[s2][0] = if ndu[pk + 1][rk] == 0.0 { 0.0 } else { a[s1][0] / ndu[pk + 1][rk] };
                    d = a[s2][0] * ndu[rk][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if (r as isize - 1) <= pk as isize { k - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    let denom = ndu[pk + 1][idx];
                    a[s2][j] = if denom == 0.0 { 0.0 } else { (a[s1][j] - a[s1][j - 1]) / denom };
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    let denom = ndu[pk + 1][r];
                    a[s2][k] = if denom == 0.0 { 0.0 } else { -a[s1][k - 1] / denom };
                    d += a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = p as f64;
        for k in 1..=order {
            for v in ders[k].iter_mut() {
                *v *= factor;
            }
            factor *= (p - k) as f64;
        }
        ders
    }

    /// All `n + 1` basis functions `N_{i,p}(u)`.
    pub fn basis_functions(&self, u: f64) -> Result<Vec<f64>, CurveError> {
        Self::check_domain(u)?;
        let span = self.find_span(u);
        let local = self.basis_derivatives(span, u, 0);
        let mut out = vec![0.0; self.control_points.len()];
        for (j, &value) in local[0].iter().enumerate() {
            out[span - self.degree + j] = value;
        }
        Ok(out)
    }

    /// Homogeneous sums `(A^(k), B^(k))` for k = 0..=order.
    fn weighted_sums(&self, u: f64, order: usize) -> Vec<(Vec2, f64)> {
        let span = self.find_span(u);
        let ders = self.basis_derivatives(span, u, order);
        let first = span - self.degree;
        let mut out = vec![(Vec2::ZERO, 0.0); order + 1];
        for (k, row) in ders.iter().enumerate() {
            let (mut a, mut b) = (Vec2::ZERO, 0.0);
            for (j, &n) in row.iter().enumerate() {
                let w = self.weights[first + j];
                a += self.control_points[first + j] * (n * w);
                b += n * w;
            }
            out[k] = (a, b);
        }
        out
    }

    pub fn curve_point(&self, u: f64) -> Result<Vec2, CurveError> {
        Self::check_domain(u)?;
        let sums = self.weighted_sums(u, 0);
        Ok(sums[0].0 / sums[0].1)
    }

    fn point_and_tangent(&self, u: f64) -> (Vec2, Vec2) {
        let s = self.weighted_sums(u, 1);
        let (a, b) = s[0];
        let (a1, b1) = s[1];
        let c = a / b;
        (c, (a1 - c * b1) / b)
    }

    /// `|C'(u)|` in mm per unit parameter.
    pub fn speed(&self, u: f64) -> Result<f64, CurveError> {
        Self::check_domain(u)?;
        Ok(self.point_and_tangent(u).1.norm())
    }

    pub fn derivatives(&self, u: f64) -> Result<CurveKinematics, CurveError> {
        Self::check_domain(u)?;
        let s = self.weighted_sums(u, 2);
        let (a, b) = s[0];
        let (a1, b1) = s[1];
        let (a2, b2) = if s.len() > 2 { s[2] } else { (Vec2::ZERO, 0.0) };
        let point = a / b;
        let d1 = (a1 - point * b1) / b;
        let d2 = (a2 - d1 * (2.0 * b1) - point * b2) / b;
        let speed = d1.norm();
        if speed == 0.0 || !speed.is_finite() {
            return Err(CurveError::Cusp(u));
        }
        let cross = d1.cross(d2).abs();
        let speed3 = speed * speed * speed;
        let curvature_radius = if cross < CURVATURE_EPS * speed3 { f64::INFINITY } else { speed3 / cross };
        Ok(CurveKinematics { point, d1, d2, curvature_radius })
    }

    pub fn curvature_radius(&self, u: f64) -> Result<f64, CurveError> {
        Ok(self.derivatives(u)?.curvature_radius)
    }

    /// Arc length over `[u1, u2]` by adaptive Simpson quadrature of `|C'|`,
    /// integrated separately over each knot span.
    pub fn arc_length(&self, u1: f64, u2: f64, tol: f64) -> Result<f64, CurveError> {
        Self::check_domain(u1)?;
        Self::check_domain(u2)?;
        if u2 < u1 {
            return Err(CurveError::Domain(u2));
        }
        if u2 == u1 {
            return Ok(0.0);
        }
        let width = u2 - u1;
        let mut edges = vec![u1];
        let mut last = u1;
        for &k in &self.knots {
            if k > last && k < u2 {
                edges.push(k);
                last = k;
            }
        }
        edges.push(u2);
        let speed = |u: f64| self.point_and_tangent(u).1.norm();
        let mut total = 0.0;
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let piece_tol = tol * (b - a) / width;
            total += adaptive_simpson(&speed, a, b, piece_tol);
        }
        Ok(total)
    }

    pub fn total_length(&self) -> f64 {
        self.arc_length(0.0, 1.0, ARC_LENGTH_TOL).unwrap_or(0.0)
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 0)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth >= SIMPSON_MAX_DEPTH || (depth >= SIMPSON_MIN_DEPTH && delta.abs() <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
}

/// Monotone `(u, s)` samples over a parameter range, used to invert arc
/// length. `s` is measured from the first sample.
#[derive(Clone, Debug)]
pub struct ArcLengthTable {
    u: Vec<f64>,
    s: Vec<f64>,
    tol: f64,
}

impl ArcLengthTable {
    pub fn build(curve: &NurbsCurve, u0: f64, u1: f64, intervals: usize) -> Result<Self, CurveError> {
        NurbsCurve::check_domain(u0)?;
        NurbsCurve::check_domain(u1)?;
        if !(u1 > u0) {
            return Err(CurveError::Domain(u1));
        }
        let intervals = intervals.max(1);
        let tol = 1e-10;
        let mut u = Vec::with_capacity(intervals + 1);
        let mut s = Vec::with_capacity(intervals + 1);
        u.push(u0);
        s.push(0.0);
        for i in 1..=intervals {
            let ui = if i == intervals { u1 } else { u0 + (u1 - u0) * i as f64 / intervals as f64 };
            let prev = *u.last().unwrap();
            let ds = curve.arc_length(prev, ui, tol)?;
            u.push(ui);
            s.push(s.last().unwrap() + ds);
        }
        Ok(ArcLengthTable { u, s, tol })
    }

    pub fn total(&self) -> f64 {
        *self.s.last().unwrap()
    }

    pub fn u_start(&self) -> f64 {
        self.u[0]
    }

    pub fn u_end(&self) -> f64 {
        *self.u.last().unwrap()
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.u.iter().copied().zip(self.s.iter().copied())
    }

    /// Parameter `u` whose arc length from the table start is `s`.
    pub fn inverse(&self, curve: &NurbsCurve, s: f64) -> Result<f64, CurveError> {
        let total = self.total();
        let slack = 1e-9 * total.max(1.0);
        if !(s >= -slack && s <= total + slack) {
            return Err(CurveError::LengthDomain { s, total });
        }
        if s <= 0.0 {
            return Ok(self.u_start());
        }
        if s >= total {
            return Ok(self.u_end());
        }
        let j = self.s.partition_point(|&v| v <= s).clamp(1, self.s.len() - 1) - 1;
        let (ua, ub) = (self.u[j], self.u[j + 1]);
        let base = self.s[j];
        if s == base {
            return Ok(ua);
        }
        let tol = self.tol;
        let residual = move |u: f64| base + curve.arc_length(ua, u, tol).unwrap_or(f64::NAN) - s;
        let derivative = move |u: f64| curve.point_and_tangent(u).1.norm();
        RootProblem::new(residual, ua, ub)
            .with_derivative(derivative)
            .tol(1e-15)
            .residual_tol(1e-11)
            .scale(total)
            .solve_bracketed()
            .map_err(|_| CurveError::Inversion(s))
    }
}

/// Parameter reached after travelling `s` mm along the table's range.
pub fn arc_length_inverse(curve: &NurbsCurve, s: f64, table: &ArcLengthTable) -> Result<f64, CurveError> {
    table.inverse(curve, s)
}
