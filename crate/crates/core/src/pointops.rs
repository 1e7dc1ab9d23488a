//! Pointwise evaluators of singular integral operators in one and two
//! dimensions.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::{normalization_constant, FracOrder, FunctionHandle, QuadratureSpec, Domain};
use crate::error::{FracError, Result};
use crate::quad::{self, Break, Estimate, QuadFailure};

/// Kernel dμ(y) = dy/|y|^{n+2s} together with the second difference it acts on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub s: FracOrder,
    pub n: usize,
}

impl KernelSpec {
    pub fn kernel(&self, y: f64) -> f64 {
        y.abs().powf(-(self.n as f64) - 2.0 * self.s.get())
    }

    /// u(x+y) + u(x−y) − 2u(x)
    pub fn second_difference(u: &FunctionHandle, x: f64, y: f64) -> f64 {
        u.eval(x + y) + u.eval(x - y) - 2.0 * u.eval(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FracLapMethod {
    /// Exclude (x − ε, x + ε) and add the Taylor correction for the ball.
    PvSplit,
    /// Integrate the symmetrized second difference from y = 0.
    SecondDifference,
}

fn check_summability(u: &FunctionHandle, limit: f64) -> Result<()> {
    if u.growth >= limit {
        Err(FracError::Summability {
            growth: u.growth,
            limit,
        })
    } else {
        Ok(())
    }
}

fn finish(r: std::result::Result<Estimate, QuadFailure>, tol: f64) -> Result<Estimate> {
    match r {
        Ok(e) if e.value.is_finite() => Ok(e),
        Ok(e) => Err(FracError::NonFinite(e.value)),
        Err(QuadFailure { partial }) => Err(FracError::ToleranceNotReached {
            value: partial.value,
            achieved: partial.error,
            requested: tol,
        }),
    }
}

/// Radial breakpoints |p − x| induced by the declared singular points and
/// support of `u` and by the spec's extra endpoints, each also divided by
/// the listed `scales` (the nonlocal Laplacian samples u at x ± 2y).
fn radial_breaks(u: &FunctionHandle, x: f64, q: &QuadratureSpec, scales: &[f64]) -> Vec<Break> {
    let mut out = Vec::new();
    let singular = u.singular_points.iter().chain(&q.singular_endpoints);
    for &p in singular {
        for k in scales {
            out.push(Break::singular((p - x).abs() / k));
        }
    }
    if let Some((a, b)) = u.support_hint {
        for p in [a, b] {
            for k in scales {
                out.push(Break::plain((p - x).abs() / k));
            }
        }
    }
    out
}

/// ∫_lo^∞ g(y) y^{−1−α} dy with the given interior breakpoints; the interval
/// [lo, R] is integrated piecewise (R grown past every breakpoint) and the
/// rest through the tail map.
fn radial_integral<G: Fn(f64) -> f64>(
    g: &G,
    lo: f64,
    lo_singular: bool,
    interior: Vec<Break>,
    alpha: f64,
    q: &QuadratureSpec,
    tol: f64,
) -> std::result::Result<Estimate, QuadFailure> {
    let far = interior.iter().map(|b| b.at).fold(0.0, f64::max);
    let radius = q.outer_radius.max(2.0 * far).max(2.0 * lo);
    let mut breaks: Vec<Break> = interior
        .into_iter()
        .filter(|b| b.at > lo && b.at < radius)
        .collect();
    breaks.push(Break {
        at: lo,
        singular: lo_singular,
    });
    breaks.push(Break::plain(radius));
    // a few geometric breaks so the adaptive rule sees the scales between
    // lo and R
    if lo > 0.0 {
        let per_decade = q.panels_per_decade as f64;
        let n = ((radius / lo).log10() * per_decade).ceil() as i32;
        for k in 1..n {
            breaks.push(Break::plain(lo * 10f64.powf(k as f64 / per_decade)));
        }
    } else {
        for k in 0..4 {
            breaks.push(Break::plain(radius / 4f64.powi(k + 1)));
        }
    }
    let breaks = quad::normalize_breaks(breaks);
    let f = |y: f64| {
        if y == 0.0 {
            0.0
        } else {
            g(y) * y.powf(-1.0 - alpha)
        }
    };
    let body = quad::integrate_pieces(&f, &breaks, 0.5 * tol, q.max_segments);
    let tail = quad::power_tail(g, radius, alpha, 0.5 * tol, q.max_segments);
    let total = body.unwrap_or_else(|e| e.partial) + tail.unwrap_or_else(|e| e.partial);
    if total.error <= tol {
        Ok(total)
    } else {
        Err(QuadFailure { partial: total })
    }
}

fn default_fd_step(u: &FunctionHandle, x: f64) -> f64 {
    let nearest = u
        .singular_points
        .iter()
        .map(|p| (p - x).abs())
        .fold(f64::INFINITY, f64::min);
    (nearest / 8.0).min(1e-2)
}

/// (−Δ)^s u(x) in one dimension, normalized to the Fourier symbol |ξ|^{2s}.
pub fn fraclap(
    u: &FunctionHandle,
    x: f64,
    s: FracOrder,
    q: &QuadratureSpec,
    method: FracLapMethod,
) -> Result<Estimate> {
    q.validate()?;
    check_summability(u, 2.0 * s.get())?;
    let c = normalization_constant(1, s)?;
    let tol = q.abs_tol / c;
    let sd = |y: f64| 2.0 * u.eval(x) - u.eval(x + y) - u.eval(x - y);
    let alpha = 2.0 * s.get();
    let breaks = radial_breaks(u, x, q, &[1.0]);
    let est = match method {
        FracLapMethod::SecondDifference => {
            finish(radial_integral(&sd, 0.0, true, breaks, alpha, q, tol), q.abs_tol)?
        }
        FracLapMethod::PvSplit => {
            let eps = q.inner_radius;
            let outer = finish(radial_integral(&sd, eps, false, breaks, alpha, q, 0.5 * tol), q.abs_tol)?;
            let h = default_fd_step(u, x).max(eps);
            let d2 = u.second_derivative(x, h);
            let d4 = u.fourth_derivative(x, 4.0 * h);
            let sv = s.get();
            let inner = -d2 * eps.powf(2.0 - 2.0 * sv) / (2.0 - 2.0 * sv)
                - d4 * eps.powf(4.0 - 2.0 * sv) / (12.0 * (4.0 - 2.0 * sv));
            outer + Estimate::new(inner, 1e-3 * inner.abs())
        }
    };
    Ok(est.scale(c))
}

/// Evaluates [`fraclap`] at many points in parallel.
pub fn fraclap_many(
    u: &FunctionHandle,
    xs: &[f64],
    s: FracOrder,
    q: &QuadratureSpec,
    method: FracLapMethod,
) -> Result<Vec<Estimate>> {
    xs.par_iter().map(|&x| fraclap(u, x, s, q, method)).collect()
}

/// The operator with integration restricted to Ω.
pub fn regional_fraclap(
    u: &FunctionHandle,
    x: f64,
    s: FracOrder,
    omega: Domain,
    q: &QuadratureSpec,
) -> Result<Estimate> {
    match omega {
        Domain::FullLine => fraclap(u, x, s, q, FracLapMethod::SecondDifference),
        Domain::Torus { .. } => Err(FracError::InvalidDomain(
            "regional operator needs an interval or the full line".into(),
        )),
        Domain::Interval { a, b } => {
            if !omega.contains(x) {
                return Err(FracError::OutsideDomain(x));
            }
            q.validate()?;
            let c = normalization_constant(1, s)?;
            let tol = q.abs_tol / c;
            let alpha = 2.0 * s.get();
            let (left, right) = (x - a, b - x);
            let d = left.min(right);
            let far = left.max(right);
            let ux = u.eval(x);
            let f = |y: f64| {
                if y == 0.0 {
                    0.0
                } else {
                    (2.0 * ux - u.eval(x + y) - u.eval(x - y)) * y.powf(-1.0 - alpha)
                }
            };
            let mut sym = radial_breaks(u, x, q, &[1.0]);
            sym.retain(|br| br.at > 0.0 && br.at < d);
            sym.push(Break::singular(0.0));
            sym.push(Break::plain(d));
            for k in 1..4 {
                sym.push(Break::plain(d / 4f64.powi(k)));
            }
            let sym = quad::normalize_breaks(sym);
            let mut total = finish(quad::integrate_pieces(&f, &sym, 0.5 * tol, q.max_segments), q.abs_tol)?;
            if far > d {
                let sign = if right > left { 1.0 } else { -1.0 };
                let g = |y: f64| (ux - u.eval(x + sign * y)) * y.powf(-1.0 - alpha);
                let mut one = radial_breaks(u, x, q, &[1.0]);
                one.retain(|br| br.at > d && br.at < far);
                one.push(Break::plain(d));
                one.push(Break::plain(far));
                let one = quad::normalize_breaks(one);
                total += finish(quad::integrate_pieces(&g, &one, 0.5 * tol, q.max_segments), q.abs_tol)?;
            }
            Ok(total.scale(c))
        }
    }
}

/// Neville evaluation at 0 of the interpolating polynomial through (h_i, v_i).
/// Returns the value and the size of the last correction.
pub fn neville_at_zero(h: &[f64], v: &[f64]) -> (f64, f64) {
    let mut p = v.to_vec();
    let n = p.len();
    let mut last_corr = f64::INFINITY;
    for m in 1..n {
        for i in 0..n - m {
            let (hi, hj) = (h[i], h[i + m]);
            let newer = (hi * p[i + 1] - hj * p[i]) / (hi - hj);
            if i == 0 {
                last_corr = (newer - p[i]).abs();
            }
            p[i] = newer;
        }
    }
    (p[0], last_corr)
}

/// (−Δ)^{1/2} u(x) as −∂_y of the Poisson extension, extrapolated to y = 0
/// from the listed heights.
pub fn extension_halflap(
    u: &FunctionHandle,
    x: f64,
    q: &QuadratureSpec,
    heights: &[f64],
) -> Result<Estimate> {
    q.validate()?;
    if heights.len() < 2
        || heights.iter().any(|h| !(*h > 0.0))
        || heights.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(FracError::InvalidArgument(
            "heights must be positive and strictly decreasing".into(),
        ));
    }
    let ux = u.eval(x);
    let mut quotients = Vec::with_capacity(heights.len());
    for &y in heights {
        // U(x, y) = (1/π)∫ u(x + y tan θ) dθ over (−π/2, π/2)
        let f = |th: f64| ux - u.eval(x + y * th.tan());
        let mut br = vec![Break::plain(-0.5 * PI), Break::plain(0.5 * PI)];
        for p in u.singular_points.iter().chain(&q.singular_endpoints) {
            br.push(Break::singular(((p - x) / y).atan()));
        }
        if let Some((a, b)) = u.support_hint {
            br.push(Break::plain(((a - x) / y).atan()));
            br.push(Break::plain(((b - x) / y).atan()));
        }
        let br = quad::normalize_breaks(br);
        let tol = q.abs_tol * y;
        let e = finish(quad::integrate_pieces(&f, &br, tol, q.max_segments), q.abs_tol)?;
        quotients.push(e.value / (PI * y));
    }
    let (value, corr) = neville_at_zero(heights, &quotients);
    let first_corr = (quotients[1] - quotients[0]).abs();
    if !value.is_finite() || (corr > first_corr && corr > 10.0 * q.abs_tol) {
        return Err(FracError::ExtrapolationFailed(quotients));
    }
    Ok(Estimate::new(value, corr))
}

/// ∫ (u(x+2y) + u(x−2y) − 4u(x+y) − 4u(x−y) + 6u(x)) / |y|³ dy, the raw
/// nonlocal representation of the Laplacian (ratio to −u'' is 8 ln 2).
pub fn nonlocal_classical_lap(u: &FunctionHandle, x: f64, q: &QuadratureSpec) -> Result<Estimate> {
    q.validate()?;
    check_summability(u, 2.0)?;
    let ux = u.eval(x);
    let g = |y: f64| {
        u.eval(x + 2.0 * y) + u.eval(x - 2.0 * y) - 4.0 * u.eval(x + y) - 4.0 * u.eval(x - y)
            + 6.0 * ux
    };
    let breaks = radial_breaks(u, x, q, &[1.0, 2.0]);
    let tol = 0.5 * q.abs_tol;
    let r = radial_integral(&g, 0.0, true, breaks, 2.0, q, tol)
        .map(|e| e.scale(2.0))
        .map_err(|f| QuadFailure {
            partial: f.partial.scale(2.0),
        });
    finish(r, q.abs_tol)
}

/// κ₁ = 8 ln 2, the ratio of [`nonlocal_classical_lap`] to −Δu in one
/// dimension (obtained from the symbol of the fourth-order difference).
pub fn nonlocal_laplacian_constant() -> f64 {
    8.0 * std::f64::consts::LN_2
}

/// Points (|x|, |x|^{1+2s}·|(−Δ)^s u(x)|) along the given radii.
pub fn decay_profile(
    u: &FunctionHandle,
    s: FracOrder,
    radii: &[f64],
    q: &QuadratureSpec,
) -> Result<Vec<(f64, f64)>> {
    radii
        .par_iter()
        .map(|&r| {
            let v = fraclap(u, r, s, q, FracLapMethod::SecondDifference)?;
            Ok((r, r.powf(1.0 + 2.0 * s.get()) * v.value.abs()))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// master operators

pub type Mat2 = [[f64; 2]; 2];
pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelForm {
    /// M evaluated at (x − y, y).
    Divergence,
    /// M evaluated at (x, y).
    NonDivergence,
}

type MatField = Arc<dyn Fn(Point, Point) -> Mat2 + Send + Sync>;

/// Matrix field M(x, y) defining the kernel (1 − s)/|M y|^{n+2s}. In one
/// dimension only the (0, 0) entry and first coordinates are used.
#[derive(Clone)]
pub struct MasterKernel {
    pub n: usize,
    pub form: KernelForm,
    /// Declared lower and upper bounds for |M ω| on the unit sphere.
    pub bounds: (f64, f64),
    m: MatField,
}

impl std::fmt::Debug for MasterKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MasterKernel")
            .field("n", &self.n)
            .field("form", &self.form)
            .field("bounds", &self.bounds)
            .finish()
    }
}

fn apply(m: &Mat2, v: Point, n: usize) -> Point {
    if n == 1 {
        [m[0][0] * v[0], 0.0]
    } else {
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }
}

fn norm(v: Point) -> f64 {
    v[0].hypot(v[1])
}

impl MasterKernel {
    pub fn new(
        n: usize,
        form: KernelForm,
        bounds: (f64, f64),
        m: impl Fn(Point, Point) -> Mat2 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(1..=2).contains(&n) {
            return Err(FracError::UnsupportedDimension(n));
        }
        if !(bounds.0 > 0.0 && bounds.1 >= bounds.0) {
            return Err(FracError::InvalidArgument("need 0 < m0 ≤ m1".into()));
        }
        Ok(Self {
            n,
            form,
            bounds,
            m: Arc::new(m),
        })
    }

    /// Constant matrix; both symmetry contracts hold trivially.
    pub fn constant(n: usize, form: KernelForm, m: Mat2) -> Result<Self> {
        let sv = singular_values(&m, n);
        Self::new(n, form, (sv.0, sv.1), move |_, _| m)
    }

    pub fn matrix(&self, x: Point, y: Point) -> Mat2 {
        (self.m)(x, y)
    }

    /// M at the point where the kernel for offset y is evaluated.
    fn at(&self, x: Point, y: Point) -> Mat2 {
        match self.form {
            KernelForm::Divergence => self.matrix([x[0] - y[0], x[1] - y[1]], y),
            KernelForm::NonDivergence => self.matrix(x, y),
        }
    }

    /// Largest violation of the form's symmetry identity over the samples:
    /// M(x − y, y) = M(x, −y) (divergence) or M(x, y) = M(x, −y).
    pub fn symmetry_defect(&self, samples: &[(Point, Point)]) -> f64 {
        let mut worst: f64 = 0.0;
        for &(x, y) in samples {
            let neg = [-y[0], -y[1]];
            let (lhs, rhs) = match self.form {
                KernelForm::Divergence => (self.matrix([x[0] - y[0], x[1] - y[1]], y), self.matrix(x, neg)),
                KernelForm::NonDivergence => (self.matrix(x, y), self.matrix(x, neg)),
            };
            for i in 0..self.n {
                for j in 0..self.n {
                    worst = worst.max((lhs[i][j] - rhs[i][j]).abs());
                }
            }
        }
        worst
    }

    pub fn verify_symmetry(&self, samples: &[(Point, Point)]) -> Result<()> {
        let d = self.symmetry_defect(samples);
        if d <= 1e-12 {
            Ok(())
        } else {
            Err(FracError::InvalidArgument(format!(
                "kernel symmetry contract violated by {d:e}"
            )))
        }
    }

    /// |M(·, rω) ω|^{−n−2s}, the kernel with the r^{−n−2s} factor removed.
    fn angular(&self, x: Point, r: f64, w: Point, s: f64) -> Result<f64> {
        let y = [r * w[0], r * w[1]];
        let m = self.at(x, y);
        let len = norm(apply(&m, w, self.n));
        if !(len >= self.bounds.0 * (1.0 - 1e-9)) || !len.is_finite() {
            return Err(FracError::DegenerateKernel(len));
        }
        Ok(len.powf(-(self.n as f64) - 2.0 * s))
    }
}

fn singular_values(m: &Mat2, n: usize) -> (f64, f64) {
    if n == 1 {
        let v = m[0][0].abs();
        return (v, v);
    }
    let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    let s1 = a * a + b * b + c * c + d * d;
    let det = (a * d - b * c).abs();
    let disc = (s1 * s1 - 4.0 * det * det).max(0.0).sqrt();
    (((s1 - disc) / 2.0).sqrt(), ((s1 + disc) / 2.0).sqrt())
}

/// Classical coefficients a (and drift b = ∂_i a_ij for the divergence form).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientMatrix {
    pub n: usize,
    pub a: Mat2,
    pub b: Point,
}

impl CoefficientMatrix {
    /// −Σ a_ij ∂_ij u − Σ b_j ∂_j u from a gradient and a Hessian.
    pub fn apply(&self, grad: Point, hess: Mat2) -> f64 {
        let mut v = 0.0;
        for i in 0..self.n {
            v -= self.b[i] * grad[i];
            for j in 0..self.n {
                v -= self.a[i][j] * hess[i][j];
            }
        }
        v
    }
}

/// Directions for the half sphere: one for n = 1, `angles` equispaced on
/// [0, π) for n = 2, with their trapezoid weights.
fn half_sphere(n: usize, angles: usize) -> Vec<(Point, f64)> {
    if n == 1 {
        vec![([1.0, 0.0], 1.0)]
    } else {
        let w = PI / angles as f64;
        (0..angles)
            .map(|k| {
                let th = k as f64 * w;
                ([th.cos(), th.sin()], w)
            })
            .collect()
    }
}

/// ∫_{S^{n−1}} ω_i ω_j |M ω|^{−p} over the full sphere.
fn sphere_moment(m: &Mat2, n: usize, p: f64, angles: usize) -> Mat2 {
    let mut a = [[0.0; 2]; 2];
    for (w, wt) in half_sphere(n, angles) {
        let k = norm(apply(m, w, n)).powf(-p);
        for i in 0..n {
            for j in 0..n {
                // ω and −ω contribute equally
                a[i][j] += 2.0 * wt * w[i] * w[j] * k;
            }
        }
    }
    a
}

/// a_ij = ¼ ∫_{S^{n−1}} ω_i ω_j / |M(x, 0) ω|^{n+2}; for the divergence form
/// also the drift b_j = Σ_i ∂_i a_ij by central differences.
pub fn classical_limit_coefficients(k: &MasterKernel, x: Point, angles: usize) -> CoefficientMatrix {
    let n = k.n;
    let coeff = |p: Point| {
        let mut a = sphere_moment(&k.matrix(p, [0.0, 0.0]), n, n as f64 + 2.0, angles);
        for row in a.iter_mut() {
            for v in row.iter_mut() {
                *v *= 0.25;
            }
        }
        a
    };
    let a = coeff(x);
    let mut b = [0.0; 2];
    if k.form == KernelForm::Divergence {
        let h = 1e-4;
        for i in 0..n {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let (ap, am) = (coeff(xp), coeff(xm));
            for j in 0..n {
                b[j] += (ap[i][j] - am[i][j]) / (2.0 * h);
            }
        }
    }
    CoefficientMatrix { n, a, b }
}

/// Gradient and Hessian of a function of two variables by fourth-order
/// central differences (only the leading n×n block is meaningful).
pub fn derivatives(u: &FunctionHandle<Point>, x: Point, n: usize, h: f64) -> (Point, Mat2) {
    let e = |i: usize, t: f64| {
        let mut p = x;
        p[i] += t;
        p
    };
    let mut g = [0.0; 2];
    let mut hs = [[0.0; 2]; 2];
    for i in 0..n {
        let f = |t: f64| u.eval(e(i, t));
        g[i] = (f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h);
        hs[i][i] = (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h))
            / (12.0 * h * h);
    }
    if n == 2 {
        let f = |a: f64, b: f64| u.eval([x[0] + a, x[1] + b]);
        let mixed = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
        hs[0][1] = mixed;
        hs[1][0] = mixed;
    }
    (g, hs)
}

/// (1 − s)∫ (u(x) − u(x − y)) / |M y|^{n+2s} dy, with M evaluated per the
/// kernel's form. Directions are paired (y, −y); the ball of radius ε uses
/// the second-order Taylor expansion of u and first-order expansion of M.
pub fn master_operator(
    u: &FunctionHandle<Point>,
    x: Point,
    s: FracOrder,
    k: &MasterKernel,
    q: &QuadratureSpec,
) -> Result<Estimate> {
    q.validate()?;
    if u.growth >= 2.0 * s.get() {
        return Err(FracError::Summability {
            growth: u.growth,
            limit: 2.0 * s.get(),
        });
    }
    let n = k.n;
    let sv = s.get();
    let eps = q.inner_radius;
    let dirs = half_sphere(n, q.angles);
    let ux = u.eval(x);
    let alpha = 2.0 * sv;
    let per_dir_tol = q.abs_tol / (1.0 - sv) / (PI.max(1.0) * 2.0);

    let outer: Vec<Result<Estimate>> = dirs
        .par_iter()
        .map(|&(w, wt)| {
            let neg = [-w[0], -w[1]];
            let err = std::cell::Cell::new(None);
            let g = |r: f64| {
                let kp = k.angular(x, r, w, sv);
                let km = k.angular(x, r, neg, sv);
                match (kp, km) {
                    (Ok(kp), Ok(km)) => {
                        let back = u.eval([x[0] - r * w[0], x[1] - r * w[1]]);
                        let fwd = u.eval([x[0] + r * w[0], x[1] + r * w[1]]);
                        (ux - back) * kp + (ux - fwd) * km
                    }
                    (Err(e), _) | (_, Err(e)) => {
                        err.set(Some(e));
                        0.0
                    }
                }
            };
            let r = radial_integral(&g, eps, false, Vec::new(), alpha, q, per_dir_tol);
            if let Some(e) = err.take() {
                return Err(e);
            }
            finish(r, per_dir_tol).map(|e| e.scale(wt))
        })
        .collect();
    let mut total = Estimate::default();
    for e in outer {
        total += e?;
    }

    // inner ball
    let (grad, hess) = derivatives(u, x, n, 1e-3);
    let mut inner_h = 0.0;
    let mut inner_b = 0.0;
    let hfd = 1e-4;
    for &(w, wt) in &dirs {
        let neg = [-w[0], -w[1]];
        let k0 = k.angular(x, 0.0, w, sv)?;
        let quad_form: f64 = (0..n)
            .map(|i| (0..n).map(|j| hess[i][j] * w[i] * w[j]).sum::<f64>())
            .sum();
        inner_h += 2.0 * wt * quad_form * k0;
        // odd part of the first-order coefficient of the angular kernel,
        // Richardson-combined over two steps
        let odd = |h: f64| -> Result<f64> {
            Ok((k.angular(x, h, w, sv)? - k.angular(x, h, neg, sv)?) / h)
        };
        let k1_odd = (4.0 * odd(0.5 * hfd)? - odd(hfd)?) / 3.0;
        let gw: f64 = (0..n).map(|i| grad[i] * w[i]).sum();
        inner_b += wt * gw * k1_odd;
    }
    let scale = eps.powf(2.0 - 2.0 * sv) / (2.0 - 2.0 * sv);
    let inner = scale * (inner_b - 0.5 * inner_h);
    total += Estimate::new(inner, 1e-6 * inner.abs());
    Ok(total.scale(1.0 - sv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::Smoothness;

    fn q(tol: f64) -> QuadratureSpec {
        QuadratureSpec::with_tol(tol)
    }

    #[test]
    fn constants_are_harmonic() {
        let u = FunctionHandle::constant(2.5);
        for s in [0.2, 0.5, 0.9] {
            let s = FracOrder::new(s).unwrap();
            let v = fraclap(&u, 0.3, s, &q(1e-10), FracLapMethod::SecondDifference).unwrap();
            assert!(v.value.abs() < 1e-12);
        }
    }

    #[test]
    fn arctan_at_one() {
        let u = FunctionHandle::new(Smoothness::Bounded, |x: f64| 2.0 / PI * x.atan());
        for m in [FracLapMethod::SecondDifference, FracLapMethod::PvSplit] {
            let v = fraclap(&u, 1.0, FracOrder::HALF, &q(1e-9), m).unwrap();
            assert!((v.value - 1.0 / PI).abs() < 1e-7, "{m:?} {}", v.value);
        }
    }

    #[test]
    fn gaussian_symbol() {
        // (−Δ)^s e^{−x²} at 0 = (1/2π)∫|ξ|^{2s}√π e^{−ξ²/4} dξ = 4^s Γ(s+1/2)/√π
        for s in [0.25, 0.5, 0.75] {
            let so = FracOrder::new(s).unwrap();
            let exact = 4f64.powf(s) * crate::special::gamma(s + 0.5) / PI.sqrt();
            let u = FunctionHandle::gaussian().with_support(-6.0, 6.0);
            let v = fraclap(&u, 0.0, so, &q(1e-8), FracLapMethod::SecondDifference).unwrap();
            assert!((v.value - exact).abs() < 2e-8, "s={s}: {} vs {exact}", v.value);
        }
    }

    #[test]
    fn regional_of_parabola() {
        let u = FunctionHandle::new(Smoothness::C2Local, |x: f64| 1.0 - x * x);
        let om = Domain::interval(-1.0, 1.0).unwrap();
        let v = regional_fraclap(&u, 0.0, FracOrder::HALF, om, &q(1e-10)).unwrap();
        assert!((v.value - 2.0 / PI).abs() < 1e-8, "{}", v.value);
        assert!(matches!(
            regional_fraclap(&u, 1.5, FracOrder::HALF, om, &q(1e-10)),
            Err(FracError::OutsideDomain(_))
        ));
    }

    #[test]
    fn neville_is_exact_on_quadratics() {
        let h = [0.4, 0.2, 0.1];
        let v: Vec<f64> = h.iter().map(|t| 3.0 - t + 2.0 * t * t).collect();
        assert!((neville_at_zero(&h, &v).0 - 3.0).abs() < 1e-13);
    }

    #[test]
    fn nonlocal_constant_on_gaussian() {
        let u = FunctionHandle::gaussian().with_support(-6.0, 6.0);
        let v = nonlocal_classical_lap(&u, 0.0, &q(1e-8)).unwrap();
        // −u''(0) = 2
        assert!((v.value / 2.0 - nonlocal_laplacian_constant()).abs() < 1e-8, "{}", v.value);
    }

    #[test]
    fn one_dimensional_coefficients() {
        let k = MasterKernel::constant(1, KernelForm::NonDivergence, [[1.5, 0.0], [0.0, 1.0]]).unwrap();
        let c = classical_limit_coefficients(&k, [0.0, 0.0], 64);
        assert!((c.a[0][0] - 1.0 / (2.0 * 1.5f64.powi(3))).abs() < 1e-14);
        let k2 = MasterKernel::constant(2, KernelForm::NonDivergence, [[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let c2 = classical_limit_coefficients(&k2, [0.0, 0.0], 64);
        assert!((c2.a[0][0] - PI / 4.0).abs() < 1e-13 && c2.a[0][1].abs() < 1e-14);
    }

    #[test]
    fn master_identity_matches_fraclap() {
        let s = FracOrder::new(0.6).unwrap();
        let u1 = FunctionHandle::gaussian().with_support(-6.0, 6.0);
        let u2 = FunctionHandle::<Point>::new(Smoothness::Schwartz, |p: Point| (-p[0] * p[0]).exp());
        let k = MasterKernel::constant(1, KernelForm::NonDivergence, [[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let spec = q(1e-9);
        let m = master_operator(&u2, [0.4, 0.0], s, &k, &spec).unwrap();
        let f = fraclap(&u1, 0.4, s, &spec, FracLapMethod::SecondDifference).unwrap();
        let c = normalization_constant(1, s).unwrap();
        let expect = (1.0 - s.get()) / c * f.value;
        assert!((m.value - expect).abs() < 1e-6, "{} vs {}", m.value, expect);
    }
}
