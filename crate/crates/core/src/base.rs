//! Shared domain types: fractional order, domains, sampled grids, pointwise
//! function handles, quadrature settings and the normalization constant.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};
use crate::quad;
use crate::special::gamma;

/// Fractional order s, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(s: f64) -> Result<Self> {
        if s > 0.0 && s < 1.0 {
            Ok(Self(s))
        } else {
            Err(FracError::InvalidOrder(s))
        }
    }

    /// s = 1/2, the order with the most closed forms.
    pub const HALF: FracOrder = FracOrder(0.5);

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for FracOrder {
    type Error = FracError;
    fn try_from(s: f64) -> Result<Self> {
        FracOrder::new(s)
    }
}

impl From<FracOrder> for f64 {
    fn from(s: FracOrder) -> f64 {
        s.0
    }
}

impl fmt::Display for FracOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One-dimensional domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    FullLine,
    Interval { a: f64, b: f64 },
    /// The circle [start, start + period) with wrap-around.
    Torus { start: f64, period: f64 },
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if a.is_finite() && b.is_finite() && a < b {
            Ok(Domain::Interval { a, b })
        } else {
            Err(FracError::InvalidDomain(format!("need a < b, got ({a}, {b})")))
        }
    }

    pub fn torus(period: f64) -> Result<Self> {
        Self::torus_from(0.0, period)
    }

    pub fn torus_from(start: f64, period: f64) -> Result<Self> {
        if period > 0.0 && period.is_finite() && start.is_finite() {
            Ok(Domain::Torus { start, period })
        } else {
            Err(FracError::InvalidDomain(format!("period must be positive, got {period}")))
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Domain::FullLine | Domain::Torus { .. } => x.is_finite(),
            Domain::Interval { a, b } => x > a && x < b,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Domain::FullLine => "full_line",
            Domain::Interval { .. } => "interval",
            Domain::Torus { .. } => "torus",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Domain::FullLine => Ok(()),
            Domain::Interval { a, b } => Domain::interval(a, b).map(|_| ()),
            Domain::Torus { start, period } => Domain::torus_from(start, period).map(|_| ()),
        }
    }
}

/// Uniform samples on an interval (closed grid, both ends included) or a
/// torus (half-open grid).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    domain: Domain,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(domain: Domain, values: Vec<f64>) -> Result<Self> {
        domain.validate()?;
        if matches!(domain, Domain::FullLine) {
            return Err(FracError::InvalidDomain(
                "grid functions live on an interval or a torus".into(),
            ));
        }
        if values.len() < 2 {
            return Err(FracError::InvalidArgument(format!(
                "a grid needs at least 2 nodes, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(FracError::NonFinite(*v));
        }
        Ok(Self { domain, values })
    }

    pub fn from_fn(domain: Domain, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let probe = Self::new(domain, vec![0.0; n.max(2)])?;
        let values = (0..n).map(|i| f(probe.node(i))).collect();
        Self::new(domain, values)
    }

    pub fn sample(domain: Domain, n: usize, u: &FunctionHandle) -> Result<Self> {
        Self::from_fn(domain, n, |x| u.eval(x))
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Replaces the values, keeping the grid.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(FracError::InvalidArgument("length mismatch".into()));
        }
        Self::new(self.domain, values)
    }

    pub fn spacing(&self) -> f64 {
        let n = self.values.len() as f64;
        match self.domain {
            Domain::Interval { a, b } => (b - a) / (n - 1.0),
            Domain::Torus { period, .. } => period / n,
            Domain::FullLine => unreachable!(),
        }
    }

    pub fn origin(&self) -> f64 {
        match self.domain {
            Domain::Interval { a, .. } => a,
            Domain::Torus { start, .. } => start,
            Domain::FullLine => unreachable!(),
        }
    }

    pub fn node(&self, i: usize) -> f64 {
        self.origin() + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// Value at a (possibly negative or overflowing) index; wraps on a torus
    /// and clamps on an interval.
    pub fn at(&self, i: isize) -> f64 {
        let n = self.values.len() as isize;
        let j = match self.domain {
            Domain::Torus { .. } => i.rem_euclid(n),
            _ => i.clamp(0, n - 1),
        };
        self.values[j as usize]
    }

    /// Piecewise-linear interpolation.
    pub fn interpolate(&self, x: f64) -> f64 {
        let h = self.spacing();
        let pos = (x - self.origin()) / h;
        match self.domain {
            Domain::Torus { .. } => {
                let i = pos.floor();
                let w = pos - i;
                let i = i as isize;
                (1.0 - w) * self.at(i) + w * self.at(i + 1)
            }
            _ => {
                let last = (self.len() - 1) as f64;
                let p = pos.clamp(0.0, last);
                let i = p.floor().min(last - 1.0);
                let w = p - i;
                let i = i as usize;
                (1.0 - w) * self.values[i] + w * self.values[i + 1]
            }
        }
    }

    /// Trapezoid integral (periodic rule on a torus).
    pub fn integral(&self) -> f64 {
        match self.domain {
            Domain::Torus { .. } => self.values.iter().sum::<f64>() * self.spacing(),
            _ => quad::trapezoid(&self.values, self.spacing()),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Declared regularity and decay class of a [`FunctionHandle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smoothness {
    C2Local,
    Schwartz,
    Bounded,
    SingularIntegrable,
}

type Eval<P> = Arc<dyn Fn(P) -> f64 + Send + Sync>;

/// A pointwise-evaluable function together with what the quadrature needs to
/// know about it.
#[derive(Clone)]
pub struct FunctionHandle<P = f64> {
    eval: Eval<P>,
    pub smoothness: Smoothness,
    pub support_hint: Option<(f64, f64)>,
    /// Points where u or one of its first derivatives is singular.
    pub singular_points: Vec<f64>,
    /// Exponent γ with |u(y)| = O(|y|^γ) at infinity; 0 for bounded functions.
    pub growth: f64,
}

impl<P> fmt::Debug for FunctionHandle<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionHandle")
            .field("smoothness", &self.smoothness)
            .field("support_hint", &self.support_hint)
            .field("singular_points", &self.singular_points)
            .field("growth", &self.growth)
            .finish()
    }
}

impl<P: 'static> FunctionHandle<P> {
    pub fn new(smoothness: Smoothness, f: impl Fn(P) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(f),
            smoothness,
            support_hint: None,
            singular_points: Vec::new(),
            growth: 0.0,
        }
    }

    pub fn with_support(mut self, a: f64, b: f64) -> Self {
        self.support_hint = Some((a, b));
        self
    }

    pub fn with_singular_points(mut self, pts: impl IntoIterator<Item = f64>) -> Self {
        self.singular_points.extend(pts);
        self
    }

    pub fn with_growth(mut self, growth: f64) -> Self {
        self.growth = growth;
        self
    }

    #[inline]
    pub fn eval(&self, x: P) -> f64 {
        (self.eval)(x)
    }
}

impl FunctionHandle<f64> {
    pub fn constant(c: f64) -> Self {
        Self::new(Smoothness::C2Local, move |_| c)
    }

    pub fn gaussian() -> Self {
        Self::new(Smoothness::Schwartz, |x: f64| (-x * x).exp())
    }

    /// αu + βv; singular points and support hints are merged.
    pub fn combine(alpha: f64, u: &Self, beta: f64, v: &Self) -> Self {
        let (fu, fv) = (u.clone(), v.clone());
        let smoothness = if u.smoothness == v.smoothness {
            u.smoothness
        } else if u.smoothness == Smoothness::SingularIntegrable
            || v.smoothness == Smoothness::SingularIntegrable
        {
            Smoothness::SingularIntegrable
        } else {
            Smoothness::Bounded
        };
        let mut h = Self::new(smoothness, move |x| alpha * fu.eval(x) + beta * fv.eval(x))
            .with_singular_points(u.singular_points.iter().chain(&v.singular_points).copied())
            .with_growth(u.growth.max(v.growth));
        if let (Some((a1, b1)), Some((a2, b2))) = (u.support_hint, v.support_hint) {
            h = h.with_support(a1.min(a2), b1.max(b2));
        }
        h
    }

    /// x ↦ u(x − c).
    pub fn shifted(&self, c: f64) -> Self {
        let f = self.clone();
        let mut h = Self::new(self.smoothness, move |x| f.eval(x - c))
            .with_singular_points(self.singular_points.iter().map(|p| p + c))
            .with_growth(self.growth);
        h.support_hint = self.support_hint.map(|(a, b)| (a + c, b + c));
        h
    }

    /// x ↦ u(−x).
    pub fn reflected(&self) -> Self {
        let f = self.clone();
        let mut h = Self::new(self.smoothness, move |x: f64| f.eval(-x))
            .with_singular_points(self.singular_points.iter().map(|p| -p))
            .with_growth(self.growth);
        h.support_hint = self.support_hint.map(|(a, b)| (-b, -a));
        h
    }

    /// Finite-difference second derivative with step `h`.
    pub fn second_derivative(&self, x: f64, h: f64) -> f64 {
        // fourth-order stencil
        let f = |k: f64| self.eval(x + k * h);
        (-f(2.0) + 16.0 * f(1.0) - 30.0 * f(0.0) + 16.0 * f(-1.0) - f(-2.0)) / (12.0 * h * h)
    }

    pub fn fourth_derivative(&self, x: f64, h: f64) -> f64 {
        let f = |k: f64| self.eval(x + k * h);
        (f(2.0) - 4.0 * f(1.0) + 6.0 * f(0.0) - 4.0 * f(-1.0) + f(-2.0)) / h.powi(4)
    }
}

/// Controls every singular-integral evaluator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// ε: radius of the excluded ball for principal-value splitting.
    pub inner_radius: f64,
    /// R: radius beyond which the integrand is handled by the tail map.
    pub outer_radius: f64,
    /// Geometric panels per decade on [ε, R] for the split method.
    pub panels_per_decade: usize,
    pub abs_tol: f64,
    /// Extra points toward which panels are graded.
    pub singular_endpoints: Vec<f64>,
    /// Angular nodes on the half circle for two-dimensional integrals.
    pub angles: usize,
    /// Subdivision budget per adaptive call.
    pub max_segments: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            inner_radius: 1e-3,
            outer_radius: 64.0,
            panels_per_decade: 8,
            abs_tol: 1e-9,
            singular_endpoints: Vec::new(),
            angles: 64,
            max_segments: 4000,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.inner_radius > 0.0 && self.outer_radius > self.inner_radius) {
            return Err(FracError::InvalidArgument(format!(
                "need 0 < inner_radius < outer_radius, got {} and {}",
                self.inner_radius, self.outer_radius
            )));
        }
        if !(self.abs_tol > 0.0) {
            return Err(FracError::InvalidArgument("abs_tol must be positive".into()));
        }
        if self.panels_per_decade < 4 {
            return Err(FracError::InvalidArgument("panels_per_decade must be at least 4".into()));
        }
        if self.angles < 4 {
            return Err(FracError::InvalidArgument("angles must be at least 4".into()));
        }
        Ok(())
    }

    /// Inner radius on the abs_tol^{1/(2-2s)} scale, the size at which the
    /// leading Taylor remainder of the excluded ball matches the tolerance.
    pub fn inner_radius_for(abs_tol: f64, s: FracOrder) -> f64 {
        abs_tol.powf(1.0 / (2.0 - 2.0 * s.get())).clamp(1e-8, 0.1)
    }
}

/// C(n, s) together with its arguments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub n: usize,
    pub s: FracOrder,
    pub constant: f64,
}

impl Normalization {
    pub fn new(n: usize, s: FracOrder) -> Result<Self> {
        Ok(Self {
            n,
            s,
            constant: normalization_constant(n, s)?,
        })
    }
}

/// C(n, s) = 4^s s Γ(n/2 + s) / (π^{n/2} Γ(1 − s)), the constant for which the
/// singular integral has Fourier symbol |ξ|^{2s}.
pub fn normalization_constant(n: usize, s: FracOrder) -> Result<f64> {
    if !(1..=2).contains(&n) {
        return Err(FracError::UnsupportedDimension(n));
    }
    let s = s.get();
    let half_n = n as f64 / 2.0;
    Ok(4f64.powf(s) * s * gamma(half_n + s) / (PI.powf(half_n) * gamma(1.0 - s)))
}

/// u(x) minus the average of u over (x − r, x + r).
pub fn mean_value_deficit(u: &FunctionHandle, x: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(FracError::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    let f = |y: f64| u.eval(y);
    let avg = quad::adaptive(&f, x - r, x + r, 1e-14 * r, 200)
        .unwrap_or_else(|e| e.partial)
        .value
        / (2.0 * r);
    let d = u.eval(x) - avg;
    if d.is_finite() {
        Ok(d)
    } else {
        Err(FracError::NonFinite(x))
    }
}

/// Richardson extrapolation of deficit/r² over the radii r, r/2, r/4, ...
/// assuming an error expansion in even powers of r. The limit is −u''(x)/6.
pub fn deficit_limit(u: &FunctionHandle, x: f64, r: f64, levels: usize) -> Result<f64> {
    let levels = levels.max(2);
    let mut table = Vec::with_capacity(levels);
    for k in 0..levels {
        let rk = r / 2f64.powi(k as i32);
        table.push(mean_value_deficit(u, x, rk)? / (rk * rk));
    }
    Ok(richardson(&table, 4.0))
}

/// Repeated Richardson elimination for a sequence computed at step ratio 1/2
/// whose error is a series in h^p, h^{2p}, ... with `factor` = 2^p.
pub fn richardson(values: &[f64], factor: f64) -> f64 {
    let mut row = values.to_vec();
    let mut f = factor;
    while row.len() > 1 {
        row = row.windows(2).map(|w| (f * w[1] - w[0]) / (f - 1.0)).collect();
        f *= factor;
    }
    row[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_rejects_endpoints() {
        assert!(FracOrder::new(0.0).is_err());
        assert!(FracOrder::new(1.0).is_err());
        assert!(FracOrder::new(f64::NAN).is_err());
        assert_eq!(FracOrder::new(0.3).unwrap().get(), 0.3);
    }

    #[test]
    fn constant_at_one_half() {
        let c = normalization_constant(1, FracOrder::HALF).unwrap();
        assert!((c - 1.0 / PI).abs() < 1e-12);
        let c2 = normalization_constant(2, FracOrder::HALF).unwrap();
        // 2 · (1/2) · Γ(3/2) / (π Γ(1/2)) = 1/(2π)
        assert!((c2 - 0.5 / PI).abs() < 1e-12);
        assert!(normalization_constant(3, FracOrder::HALF).is_err());
    }

    #[test]
    fn constant_near_one() {
        for &eps in &[1e-3, 1e-5] {
            let s = FracOrder::new(1.0 - eps).unwrap();
            let c = normalization_constant(1, s).unwrap();
            // Γ(1 − s) has the pole, so C(1, s) vanishes like 2(1 − s)
            assert!((c / eps - 2.0).abs() < 1e-2, "{}", c / eps);
        }
    }

    #[test]
    fn grid_nodes_and_interp() {
        let g = GridFunction::from_fn(Domain::interval(-1.0, 1.0).unwrap(), 5, |x| x * x).unwrap();
        assert_eq!(g.nodes(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(g.interpolate(0.25), 0.125);
        let t = GridFunction::from_fn(Domain::torus(1.0).unwrap(), 4, |x| x).unwrap();
        assert_eq!(t.spacing(), 0.25);
        assert_eq!(t.at(-1), 0.75);
        assert_eq!(t.interpolate(0.875), 0.375);
    }

    #[test]
    fn deficit_examples() {
        let c = FunctionHandle::constant(5.0);
        assert!(mean_value_deficit(&c, 0.3, 0.1).unwrap().abs() < 1e-13);
        let sq = FunctionHandle::new(Smoothness::C2Local, |x: f64| x * x);
        let r = 0.2;
        assert!((mean_value_deficit(&sq, 0.0, r).unwrap() + r * r / 3.0).abs() < 1e-15);
        let g = FunctionHandle::gaussian();
        let x: f64 = 0.7;
        let u2 = (4.0 * x * x - 2.0) * (-x * x).exp();
        let lim = deficit_limit(&g, x, 0.1, 3).unwrap();
        assert!((lim + u2 / 6.0).abs() < 1e-6, "{lim}");
    }
}
