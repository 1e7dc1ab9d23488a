//! Fourier multipliers on the torus and spectral fractional Laplacians on
//! (0, 1) with Dirichlet or Neumann conditions.

use std::f64::consts::{PI, SQRT_2};

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::base::{Domain, FracOrder, FunctionHandle, GridFunction, QuadratureSpec};
use crate::error::{FracError, Result};
use crate::pointops::{fraclap, FracLapMethod};
use crate::quad::Estimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisKind {
    /// φ_k = √2 sin(kπx), λ_k = (kπ)², k ≥ 1
    DirichletSine,
    /// ψ_0 = 1, ψ_j = √2 cos(jπx), μ_j = (jπ)², j ≥ 0
    NeumannCosine,
    /// e^{2πikx/period}, λ_k = (2πk/period)²
    TorusExponential,
}

impl BasisKind {
    fn name(self) -> &'static str {
        match self {
            BasisKind::DirichletSine => "dirichlet_sine",
            BasisKind::NeumannCosine => "neumann_cosine",
            BasisKind::TorusExponential => "torus_exponential",
        }
    }
}

/// Analytic eigenpairs of −d²/dx² on (0, 1) or on a torus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralBasis {
    pub kind: BasisKind,
    /// Torus period; 1 for the interval bases.
    pub period: f64,
}

impl SpectralBasis {
    pub fn dirichlet() -> Self {
        Self {
            kind: BasisKind::DirichletSine,
            period: 1.0,
        }
    }

    pub fn neumann() -> Self {
        Self {
            kind: BasisKind::NeumannCosine,
            period: 1.0,
        }
    }

    pub fn torus(period: f64) -> Result<Self> {
        Domain::torus(period)?;
        Ok(Self {
            kind: BasisKind::TorusExponential,
            period,
        })
    }

    /// Wavenumber of the coefficient stored at `index`. For the torus the
    /// index is a signed frequency.
    pub fn wavenumber(&self, index: i64) -> f64 {
        match self.kind {
            BasisKind::DirichletSine => (index + 1) as f64 * PI,
            BasisKind::NeumannCosine => index as f64 * PI,
            BasisKind::TorusExponential => 2.0 * PI * index as f64 / self.period,
        }
    }

    pub fn eigenvalue(&self, index: i64) -> f64 {
        self.wavenumber(index).powi(2)
    }

    /// Eigenfunction stored at `index` (real part for the torus).
    pub fn eigenfunction(&self, index: i64, x: f64) -> f64 {
        let w = self.wavenumber(index);
        match self.kind {
            BasisKind::DirichletSine => SQRT_2 * (w * x).sin(),
            BasisKind::NeumannCosine if index == 0 => 1.0,
            BasisKind::NeumannCosine => SQRT_2 * (w * x).cos(),
            BasisKind::TorusExponential => (w * x).cos(),
        }
    }

    /// Gram matrix of the first `modes` interval eigenfunctions under the
    /// trapezoid rule on `nodes` points.
    pub fn gram(&self, modes: usize, nodes: usize) -> Result<Vec<Vec<f64>>> {
        let grid = interval_grid(nodes)?;
        let table = self.table(modes, &grid)?;
        let h = grid.spacing();
        let w = |i: usize| if i == 0 || i + 1 == nodes { 0.5 * h } else { h };
        Ok((0..modes)
            .map(|a| {
                (0..modes)
                    .map(|b| (0..nodes).map(|i| w(i) * table[a][i] * table[b][i]).sum())
                    .collect()
            })
            .collect())
    }

    fn table(&self, modes: usize, grid: &GridFunction) -> Result<Vec<Vec<f64>>> {
        if self.kind == BasisKind::TorusExponential {
            return Err(FracError::BasisMismatch {
                expected: "dirichlet_sine or neumann_cosine",
                found: self.kind.name(),
            });
        }
        let xs = grid.nodes();
        Ok((0..modes)
            .map(|k| xs.iter().map(|&x| self.eigenfunction(k as i64, x)).collect())
            .collect())
    }
}

fn interval_grid(nodes: usize) -> Result<GridFunction> {
    GridFunction::new(Domain::interval(0.0, 1.0)?, vec![0.0; nodes])
}

/// Expansion coefficients in an interval basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCoefficients {
    pub basis: SpectralBasis,
    pub coeffs: Vec<f64>,
}

impl SpectralCoefficients {
    pub fn new(basis: SpectralBasis, coeffs: Vec<f64>) -> Result<Self> {
        if basis.kind == BasisKind::TorusExponential {
            return Err(FracError::BasisMismatch {
                expected: "dirichlet_sine or neumann_cosine",
                found: basis.kind.name(),
            });
        }
        if let Some(v) = coeffs.iter().find(|v| !v.is_finite()) {
            return Err(FracError::NonFinite(*v));
        }
        Ok(Self { basis, coeffs })
    }

    /// û_k = ∫₀¹ u φ_k by the trapezoid rule on the grid, which is exact for
    /// the discrete sine/cosine modes k < N − 1.
    pub fn project(u: &GridFunction, basis: SpectralBasis, modes: usize) -> Result<Self> {
        match u.domain() {
            Domain::Interval { a, b } if a == 0.0 && b == 1.0 => {}
            d => {
                return Err(FracError::InvalidDomain(format!(
                    "spectral projection needs the interval (0, 1), got {}",
                    d.kind_name()
                )))
            }
        }
        if modes > u.len() - 1 {
            return Err(FracError::InvalidArgument(format!(
                "{modes} modes exceed what {} nodes resolve",
                u.len()
            )));
        }
        let table = basis.table(modes, u)?;
        let h = u.spacing();
        let n = u.len();
        let v = u.values();
        let coeffs = table
            .iter()
            .map(|phi| {
                let inner: f64 = (1..n - 1).map(|i| phi[i] * v[i]).sum();
                h * (inner + 0.5 * (phi[0] * v[0] + phi[n - 1] * v[n - 1]))
            })
            .collect();
        Self::new(basis, coeffs)
    }

    /// Σ c_k φ_k sampled on `nodes` points of [0, 1].
    pub fn synthesize(&self, nodes: usize) -> Result<GridFunction> {
        let grid = interval_grid(nodes)?;
        let table = self.basis.table(self.coeffs.len(), &grid)?;
        let values = (0..nodes)
            .map(|i| self.coeffs.iter().zip(&table).map(|(c, phi)| c * phi[i]).sum())
            .collect();
        grid.with_values(values)
    }

    /// Mean-square norm Σ c_k² (Parseval).
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    fn scaled(&self, s: FracOrder) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * self.basis.eigenvalue(k as i64).powf(s.get()))
            .collect();
        Self {
            basis: self.basis,
            coeffs,
        }
    }
}

/// Multiplies Dirichlet coefficient k by λ_k^s = (kπ)^{2s}.
pub fn dirichlet_spectral_fraclap(
    c: &SpectralCoefficients,
    s: FracOrder,
) -> Result<SpectralCoefficients> {
    if c.basis.kind != BasisKind::DirichletSine {
        return Err(FracError::BasisMismatch {
            expected: "dirichlet_sine",
            found: c.basis.kind.name(),
        });
    }
    Ok(c.scaled(s))
}

/// Multiplies Neumann coefficient j by μ_j^s; the constant mode goes to 0.
pub fn neumann_spectral_fraclap(
    c: &SpectralCoefficients,
    s: FracOrder,
) -> Result<SpectralCoefficients> {
    if c.basis.kind != BasisKind::NeumannCosine {
        return Err(FracError::BasisMismatch {
            expected: "neumann_cosine",
            found: c.basis.kind.name(),
        });
    }
    Ok(c.scaled(s))
}

fn torus_period(u: &GridFunction) -> Result<f64> {
    match u.domain() {
        Domain::Torus { period, .. } => Ok(period),
        d => Err(FracError::InvalidDomain(format!(
            "expected a torus grid, got {}",
            d.kind_name()
        ))),
    }
}

/// Discrete Fourier coefficients û_j = (1/N) Σ u_i e^{−2πi ij/N}.
pub fn torus_coefficients(u: &GridFunction) -> Result<Vec<Complex64>> {
    torus_period(u)?;
    let n = u.len();
    let mut buf: Vec<Complex64> = u.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let inv = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= inv);
    Ok(buf)
}

/// Signed frequency of DFT slot j.
pub fn frequency(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Applies the Fourier multiplier m(ξ) with ξ = 2πk/period.
pub fn torus_multiplier(u: &GridFunction, m: impl Fn(f64) -> f64) -> Result<GridFunction> {
    let period = torus_period(u)?;
    let n = u.len();
    let mut buf = torus_coefficients(u)?;
    for (j, c) in buf.iter_mut().enumerate() {
        *c *= m(2.0 * PI * frequency(j, n) as f64 / period);
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    u.with_values(buf.iter().map(|c| c.re).collect())
}

/// (−Δ)^σ on the torus for any real σ ≥ 0; the zero mode maps to 0 when σ > 0.
pub fn torus_power(u: &GridFunction, sigma: f64) -> Result<GridFunction> {
    if !(sigma >= 0.0) {
        return Err(FracError::InvalidArgument(format!(
            "power must be nonnegative, got {sigma}"
        )));
    }
    torus_multiplier(u, |xi| if xi == 0.0 && sigma > 0.0 { 0.0 } else { xi.abs().powf(2.0 * sigma) })
}

/// Multiplier |2πk/period|^{2s}.
pub fn torus_fraclap(u: &GridFunction, s: FracOrder) -> Result<GridFunction> {
    torus_power(u, s.get())
}

/// Applies order s and then order s'. Requires s + s' ≤ 1.
pub fn semigroup_compose(u: &GridFunction, s: FracOrder, s2: FracOrder) -> Result<GridFunction> {
    if s.get() + s2.get() > 1.0 {
        return Err(FracError::InvalidArgument(format!(
            "composed order {} exceeds 1",
            s.get() + s2.get()
        )));
    }
    torus_fraclap(&torus_fraclap(u, s)?, s2)
}

/// Exact per-mode solution of ∂_t u + (−Δ)^s u = 0 on the torus.
pub fn spectral_heat_evolve(u0: &GridFunction, s: FracOrder, t: f64) -> Result<GridFunction> {
    if t < 0.0 || !t.is_finite() {
        return Err(FracError::NegativeTime(t));
    }
    if t == 0.0 {
        torus_period(u0)?;
        return Ok(u0.clone());
    }
    let a = 2.0 * s.get();
    torus_multiplier(u0, |xi| (-xi.abs().powf(a) * t).exp())
}

/// (−Δ)^s of the periodization U = Σ_m u(· − m·period) of a function
/// supported in one period: the singular integral of the copies |m| ≤ k_max
/// plus −C∫u(y)Σ_{|m|>k_max}|x − y − m·period|^{−1−2s}dy for the rest.
pub fn periodized_fraclap(
    u: &FunctionHandle,
    period: f64,
    x: f64,
    s: FracOrder,
    q: &QuadratureSpec,
    k_max: u64,
) -> Result<Estimate> {
    let (a, b) = u.support_hint.ok_or_else(|| {
        FracError::InvalidArgument("periodization needs a compact support hint".into())
    })?;
    if b - a > period {
        return Err(FracError::InvalidArgument(
            "support is wider than the period".into(),
        ));
    }
    let k = k_max as i64;
    let mut total = Estimate::default();
    for m in -k..=k {
        total += fraclap(u, x - m as f64 * period, s, q, FracLapMethod::SecondDifference)?;
    }
    let c = crate::base::normalization_constant(1, s)?;
    let sigma = 1.0 + 2.0 * s.get();
    // Σ_{|m|>k} |w − m·period|^{−σ}, summed to a cut and closed by the
    // midpoint-rule integral of the remaining terms
    let cut = k_max + 4000;
    let lattice = |w: f64| {
        let mut acc = 0.0;
        for m in (k_max + 1..=cut).rev() {
            let mp = m as f64 * period;
            acc += (mp - w).powf(-sigma) + (mp + w).powf(-sigma);
        }
        acc + 2.0 * ((cut as f64 + 0.5) * period).powf(1.0 - sigma) / ((sigma - 1.0) * period)
    };
    let far = crate::quad::adaptive(&|y| u.eval(y) * lattice(x - y), a, b, 1e-10, 2000)
        .map_err(|e| FracError::ToleranceNotReached {
            value: e.partial.value,
            achieved: e.partial.error,
            requested: 1e-10,
        })?;
    let tail = -c * far.value;
    let err = c * far.error + 2.0 * c * ((cut as f64) * period).powf(-1.0 - sigma);
    Ok(total + Estimate::new(tail, err))
}

/// Periodic extension of a function supported in one period.
pub fn periodize(u: &FunctionHandle, period: f64) -> impl Fn(f64) -> f64 + '_ {
    let start = u.support_hint.map(|(a, _)| a).unwrap_or(0.0);
    move |x| u.eval(start + (x - start).rem_euclid(period))
}
