//! Heat kernels of ∂_t u + (−Δ)^s u = 0 on the line, their tails and
//! scaling, truncated second moments, and the regional heat equation on an
//! interval.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::base::{normalization_constant, Domain, FracOrder, GridFunction};
use crate::error::{FracError, Result};
use crate::quad::{self, End, Estimate, QuadFailure};
use crate::special::gamma;
use crate::spectral::spectral_heat_evolve;
use crate::stats::power_law_fit;

const KERNEL_TOL: f64 = 1e-11;

fn quad_result(r: std::result::Result<Estimate, QuadFailure>, tol: f64) -> Result<Estimate> {
    match r {
        Ok(e) => Ok(e),
        Err(QuadFailure { partial }) => Err(FracError::ToleranceNotReached {
            value: partial.value,
            achieved: partial.error,
            requested: tol,
        }),
    }
}

fn partial(r: std::result::Result<Estimate, QuadFailure>) -> Estimate {
    match r {
        Ok(e) => e,
        Err(QuadFailure { partial }) => partial,
    }
}

/// Which kernel a table holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelLaw {
    /// G_s at t = 1, with Fourier transform e^{−|ξ|^{2s}}.
    Fractional(FracOrder),
    /// Classical kernel e^{−x²/4t}/√(4πt) of ∂_t u = u'' (variance 2t).
    Gaussian { t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatKernelTable {
    pub law: KernelLaw,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    /// Trapezoid mass of the table plus the analytic mass beyond its ends.
    pub mass: f64,
}

impl HeatKernelTable {
    pub fn order(&self) -> Option<FracOrder> {
        match self.law {
            KernelLaw::Fractional(s) => Some(s),
            KernelLaw::Gaussian { .. } => None,
        }
    }

    /// Value at x by log–log interpolation between table nodes (exact on
    /// pure power laws); None outside the table.
    pub fn value_at(&self, x: f64) -> Option<f64> {
        let i = self.x.partition_point(|&v| v < x);
        if i == 0 {
            return (self.x[0] == x).then(|| self.values[0]);
        }
        if i >= self.x.len() {
            return None;
        }
        let (x0, x1) = (self.x[i - 1], self.x[i]);
        let (g0, g1) = (self.values[i - 1], self.values[i]);
        if x == x1 {
            return Some(g1);
        }
        let w = (x - x0) / (x1 - x0);
        if x0 > 0.0 && g0 > 0.0 && g1 > 0.0 {
            let lw = (x / x0).ln() / (x1 / x0).ln();
            Some((g0.ln() + lw * (g1.ln() - g0.ln())).exp())
        } else {
            Some(g0 + w * (g1 - g0))
        }
    }
}

/// |x|^{1+2s}G_s(x) → Γ(1+2s) sin(πs)/π.
pub fn kernel_tail_constant(s: FracOrder) -> f64 {
    let sv = s.get();
    gamma(1.0 + 2.0 * sv) * (PI * sv).sin() / PI
}

/// G_s(0) = Γ(1 + 1/(2s))/π.
pub fn kernel_at_zero(s: FracOrder) -> f64 {
    gamma(1.0 + 0.5 / s.get()) / PI
}

/// ∫_X^∞ G_s from the convergent large-|x| series
/// G_s(x) = (1/π)Σ_k (−1)^{k+1}Γ(1+2sk) sin(πsk)/(k!|x|^{1+2sk}).
fn tail_mass(s: f64, x: f64) -> f64 {
    let mut acc = 0.0;
    let mut fact = 1.0;
    for k in 1..40 {
        fact *= k as f64;
        let a = 2.0 * s * k as f64;
        let term = gamma(1.0 + a) * (PI * s * k as f64).sin() / (fact * a * x.powf(a));
        acc += if k % 2 == 1 { term } else { -term };
        if term.abs() < 1e-16 {
            break;
        }
    }
    acc / PI
}

/// G_s(x) = (1/π)∫₀^∞ e^{−ξ^{2s}}cos(xξ)dξ.
///
/// For |x| < 1 the cosine integral is taken directly up to the cutoff where
/// e^{−ξ^{2s}} < 1e-16. Farther out the path is rotated to ξ = r e^{iθ},
/// θ = min(π/2, 0.8·π/(4s)), where the integrand decays exponentially
/// instead of oscillating.
pub fn heat_kernel_value(s: FracOrder, x: f64) -> Result<f64> {
    let sv = s.get();
    let a = 2.0 * sv;
    let x = x.abs();
    if x == 0.0 {
        return Ok(kernel_at_zero(s));
    }
    if x < 1.0 {
        let cutoff = 37f64.powf(1.0 / a);
        let f = |xi: f64| (-xi.powf(a)).exp() * (x * xi).cos();
        let total = partial(quad::graded(&f, 0.0, 1.0, End::Left, 0.1 * KERNEL_TOL, 4000))
            + partial(quad::adaptive(&f, 1.0, cutoff, 0.9 * KERNEL_TOL, 20000));
        let r = if total.error <= KERNEL_TOL { Ok(total) } else { Err(QuadFailure { partial: total }) };
        return Ok(quad_result(r, KERNEL_TOL)?.value / PI);
    }
    let theta = (0.5 * PI).min(0.8 * PI / (2.0 * a));
    let rot = Complex64::from_polar(1.0, theta);
    let rot_a = Complex64::from_polar(1.0, a * theta);
    let decay_lin = x * theta.sin();
    let decay_pow = (a * theta).cos();
    let g = |r: f64| {
        if r == 0.0 {
            return rot.re;
        }
        let z = -rot_a * r.powf(a) + Complex64::i() * x * r * rot;
        (rot * z.exp()).re
    };
    // e^{−x r sinθ − r^{2s}cos(2sθ)} < 1e-18 beyond this radius
    let mut end = 1.0 / decay_lin;
    while decay_lin * end + decay_pow * end.powf(a) < 42.0 {
        end *= 1.5;
    }
    let split = (1.0 / decay_lin).min(end);
    // the integrand is O(1) while the result is O(x^{−1−2s}): allow for
    // rounding at the scale 1/x of the cancelling parts
    let tol = KERNEL_TOL * x.powf(-1.0 - a) + 1e-13 / x;
    let total = partial(quad::graded(&g, 0.0, split, End::Left, 0.5 * tol, 4000))
        + partial(quad::adaptive(&g, split, end, 0.5 * tol, 20000));
    Ok(quad_result(if total.error <= tol { Ok(total) } else { Err(QuadFailure { partial: total }) }, tol)?.value / PI)
}

fn check_symmetric_grid(x: &[f64]) -> Result<()> {
    if x.len() < 2 || x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(FracError::InvalidArgument(
            "kernel grid must be strictly increasing with ≥ 2 points".into(),
        ));
    }
    let n = x.len();
    let sym = (0..n).all(|i| (x[i] + x[n - 1 - i]).abs() <= 1e-9 * x[n - 1].abs().max(1.0));
    if !sym {
        return Err(FracError::InvalidArgument("kernel grid must be symmetric about 0".into()));
    }
    Ok(())
}

fn trapezoid_nonuniform(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

/// Tabulates G_s on a symmetric grid (evaluated in parallel, evenness
/// imposed exactly).
pub fn heat_kernel_fourier(s: FracOrder, x_grid: &[f64]) -> Result<HeatKernelTable> {
    check_symmetric_grid(x_grid)?;
    let n = x_grid.len();
    let half: Vec<f64> = x_grid[n / 2..].to_vec();
    let vals: Vec<f64> = half
        .par_iter()
        .map(|&x| heat_kernel_value(s, x))
        .collect::<Result<_>>()?;
    let values: Vec<f64> = (0..n)
        .map(|i| if i >= n / 2 { vals[i - n / 2] } else { vals[n - 1 - i - n / 2] })
        .collect();
    if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
        return Err(FracError::NonFinite(*v));
    }
    let mass = trapezoid_nonuniform(x_grid, &values) + 2.0 * tail_mass(s.get(), x_grid[n - 1]);
    Ok(HeatKernelTable {
        law: KernelLaw::Fractional(s),
        x: x_grid.to_vec(),
        values,
        mass,
    })
}

/// The classical kernel at time t on a symmetric grid.
pub fn gaussian_kernel_table(t: f64, x_grid: &[f64]) -> Result<HeatKernelTable> {
    if !(t > 0.0) {
        return Err(FracError::NegativeTime(t));
    }
    check_symmetric_grid(x_grid)?;
    let values: Vec<f64> = x_grid
        .iter()
        .map(|x| (-x * x / (4.0 * t)).exp() / (4.0 * PI * t).sqrt())
        .collect();
    let mass = trapezoid_nonuniform(x_grid, &values);
    Ok(HeatKernelTable {
        law: KernelLaw::Gaussian { t },
        x: x_grid.to_vec(),
        values,
        mass,
    })
}

/// Log–log fit G ≈ constant·r^exponent over tail radii, with the products
/// r^{1+2s}G(r).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub exponent: f64,
    pub constant: f64,
    pub products: Vec<(f64, f64)>,
}

pub fn kernel_tail_fit(table: &HeatKernelTable, radii: &[f64]) -> Result<TailFit> {
    let s = table
        .order()
        .ok_or_else(|| FracError::InvalidArgument("tail fit needs a fractional kernel".into()))?;
    if radii.len() < 2 {
        return Err(FracError::InvalidArgument("need ≥ 2 radii".into()));
    }
    let mut g = Vec::with_capacity(radii.len());
    for &r in radii {
        if r < 5.0 {
            return Err(FracError::InvalidArgument(format!("radius {r} is not in the tail (|x| ≥ 5)")));
        }
        g.push(table.value_at(r).ok_or(FracError::OutsideDomain(r))?);
    }
    let (exponent, constant, _) = power_law_fit(radii, &g)?;
    let p = 1.0 + 2.0 * s.get();
    Ok(TailFit {
        exponent,
        constant,
        products: radii.iter().zip(&g).map(|(r, v)| (*r, r.powf(p) * v)).collect(),
    })
}

/// Result of comparing a spectrally evolved point mass with the rescaled
/// kernel t^{−1/2s}G_s(x t^{−1/2s}).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub t: f64,
    pub max_relative_deviation: f64,
    pub peak: f64,
    pub points: usize,
}

/// Evolves a unit point mass on a torus of length 4000 by the exact Fourier
/// multiplier and compares it with the rescaled kernel at up to `samples`
/// bulk nodes |x| ≤ 5 t^{1/2s}. The grid is fine enough that the truncated
/// multiplier is below 1e-14 at the Nyquist frequency.
pub fn kernel_scaling_check(s: FracOrder, t: f64, samples: usize) -> Result<ScalingReport> {
    if !(t > 0.0) {
        return Err(FracError::NegativeTime(t));
    }
    let a = 2.0 * s.get();
    let length = 4000.0;
    let xi_needed = (33.0 / t).powf(1.0 / a);
    let mut n = 1usize << 15;
    while PI * n as f64 / length < xi_needed && n < (1 << 23) {
        n <<= 1;
    }
    let domain = Domain::torus_from(-0.5 * length, length)?;
    let dx = length / n as f64;
    let mut delta = vec![0.0; n];
    delta[n / 2] = 1.0 / dx;
    let u0 = GridFunction::new(domain, delta)?;
    let u = spectral_heat_evolve(&u0, s, t)?;
    let scale = t.powf(-1.0 / a);
    let bulk = 5.0 / scale;
    let reach = ((bulk / dx) as usize).min(n / 2 - 1);
    let stride = (2 * reach / samples.max(1)).max(1);
    let idx: Vec<usize> = (n / 2 - reach..=n / 2 + reach).step_by(stride).collect();
    let devs: Vec<f64> = idx
        .par_iter()
        .map(|&i| {
            let x = u.node(i);
            let g = scale * heat_kernel_value(s, x * scale)?;
            Ok((u.values()[i] - g).abs() / g)
        })
        .collect::<Result<_>>()?;
    Ok(ScalingReport {
        t,
        max_relative_deviation: devs.iter().fold(0.0, |m: f64, v| m.max(*v)),
        peak: u.values()[n / 2],
        points: idx.len(),
    })
}

/// (R, ∫_{|x|<R} x²G) by the trapezoid rule on the table.
pub fn truncated_msd(table: &HeatKernelTable, radii: &[f64]) -> Result<Vec<(f64, f64)>> {
    let xmax = *table.x.last().unwrap();
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        if r > xmax * (1.0 + 1e-12) || r <= 0.0 {
            return Err(FracError::OutsideDomain(r));
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = table
            .x
            .iter()
            .zip(&table.values)
            .filter(|(x, _)| x.abs() <= r)
            .map(|(x, g)| (*x, x * x * g))
            .unzip();
        out.push((r, trapezoid_nonuniform(&xs, &ys)));
    }
    Ok(out)
}

/// Dense generator of the regional operator on the nodes of an interval grid.
///
/// Node i owns the cell [x_i − h/2, x_i + h/2] ∩ Ω. The pair strength between
/// nodes i ≠ j is the mass-weighted kernel integral over the other cell,
/// symmetrized, plus a nearest-neighbour term standing for the excluded
/// inner cell |y − x_i| < h/2 through the second difference. Rows annihilate
/// constants and Σ_i m_i (Au)_i = 0 exactly.
#[derive(Debug, Clone)]
pub struct RegionalMatrix {
    pub n: usize,
    /// Row-major (Au)_i = Σ_j a_ij u_j.
    pub a: Vec<f64>,
    pub mass: Vec<f64>,
    pub max_diag: f64,
}

impl RegionalMatrix {
    pub fn assemble(grid: &GridFunction, s: FracOrder) -> Result<Self> {
        let (lo, hi) = match grid.domain() {
            Domain::Interval { a, b } => (a, b),
            d => {
                return Err(FracError::InvalidDomain(format!(
                    "regional operator needs an interval, got {}",
                    d.kind_name()
                )))
            }
        };
        let n = grid.len();
        let h = grid.spacing();
        let sv = s.get();
        let c = normalization_constant(1, s)?;
        let xs = grid.nodes();
        let cell = |j: usize| ((xs[j] - 0.5 * h).max(lo), (xs[j] + 0.5 * h).min(hi));
        let mass: Vec<f64> = (0..n).map(|j| cell(j).1 - cell(j).0).collect();
        // ∫_cell_j |x_i − y|^{−1−2s}dy for a cell not containing x_i
        let w = |i: usize, j: usize| {
            let (l, r) = cell(j);
            let (near, far) = if xs[j] > xs[i] {
                (l - xs[i], r - xs[i])
            } else {
                (xs[i] - r, xs[i] - l)
            };
            c * (near.powf(-2.0 * sv) - far.powf(-2.0 * sv)) / (2.0 * sv)
        };
        let inner = c * (0.5 * h).powf(2.0 - 2.0 * sv) / ((2.0 - 2.0 * sv) * h * h);
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let mut strength = 0.5 * (mass[i] * w(i, j) + mass[j] * w(j, i));
                if j == i + 1 {
                    strength += h * inner;
                }
                a[i * n + j] = -strength / mass[i];
                a[j * n + i] = -strength / mass[j];
            }
        }
        let mut max_diag: f64 = 0.0;
        for i in 0..n {
            let row: f64 = (0..n).filter(|&j| j != i).map(|j| a[i * n + j]).sum();
            a[i * n + i] = -row;
            max_diag = max_diag.max(-row);
        }
        Ok(Self { n, a, mass, max_diag })
    }

    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let n = self.n;
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let row = &self.a[i * n..(i + 1) * n];
            *o = row.iter().zip(u).map(|(a, v)| a * v).sum();
        });
    }
}

/// Method-of-lines solution of ∂_t u = −(−Δ)^s_Ω u at time t with classical
/// RK4 and Δt ≤ 0.4/max diag.
#[derive(Debug, Clone)]
pub struct RegionalSolution {
    pub u: GridFunction,
    pub dt: f64,
    pub steps: usize,
    pub max_diag: f64,
}

pub fn regional_heat_solve(u0: &GridFunction, s: FracOrder, t: f64) -> Result<RegionalSolution> {
    if t < 0.0 || !t.is_finite() {
        return Err(FracError::NegativeTime(t));
    }
    let m = RegionalMatrix::assemble(u0, s)?;
    let steps = ((t * m.max_diag / 0.4).ceil() as usize).max(1);
    let dt = t / steps as f64;
    let n = m.n;
    let mut u = u0.values().to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    for _ in 0..if t == 0.0 { 0 } else { steps } {
        // du/dt = −A u
        m.apply(&u, &mut k1);
        tmp.iter_mut().zip(&u).zip(&k1).for_each(|((t, u), k)| *t = u - 0.5 * dt * k);
        m.apply(&tmp, &mut k2);
        tmp.iter_mut().zip(&u).zip(&k2).for_each(|((t, u), k)| *t = u - 0.5 * dt * k);
        m.apply(&tmp, &mut k3);
        tmp.iter_mut().zip(&u).zip(&k3).for_each(|((t, u), k)| *t = u - dt * k);
        m.apply(&tmp, &mut k4);
        for i in 0..n {
            u[i] -= dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(RegionalSolution {
        u: u0.with_values(u)?,
        dt,
        steps,
        max_diag: m.max_diag,
    })
}

/// Σ m_i u_i, the mass the regional solver conserves.
pub fn regional_mass(u: &GridFunction) -> f64 {
    let h = u.spacing();
    let n = u.len();
    u.values()
        .iter()
        .enumerate()
        .map(|(i, v)| if i == 0 || i + 1 == n { 0.5 * h * v } else { h * v })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(xmax: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| -xmax + 2.0 * xmax * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn cauchy_kernel() {
        let h = FracOrder::HALF;
        for x in [0.0, 0.3, 0.99, 1.0, 2.5, 7.0, 20.0, 300.0] {
            let g = heat_kernel_value(h, x).unwrap();
            let exact = 1.0 / (PI * (1.0 + x * x));
            assert!((g - exact).abs() < 1e-12 * (1.0 + 1.0 / exact).min(1e3), "{x} {g} {exact}");
        }
    }

    #[test]
    fn kernel_at_origin_and_continuity() {
        for sv in [0.25, 0.6, 0.9] {
            let s = FracOrder::new(sv).unwrap();
            let near = heat_kernel_value(s, 1e-9).unwrap();
            assert!((near - kernel_at_zero(s)).abs() < 1e-10);
            // the two evaluation paths meet at |x| = 1
            let a = heat_kernel_value(s, 1.0 - 1e-12).unwrap();
            let b = heat_kernel_value(s, 1.0).unwrap();
            assert!((a - b).abs() < 1e-10, "{sv} {a} {b}");
        }
    }

    #[test]
    fn kernel_mass_is_one() {
        for sv in [0.25, 0.5, 0.75] {
            let s = FracOrder::new(sv).unwrap();
            let t = heat_kernel_fourier(s, &grid(30.0, 1201)).unwrap();
            assert!((t.mass - 1.0).abs() < 1e-3, "{sv} {}", t.mass);
        }
    }

    #[test]
    fn gaussian_control_moment() {
        let t = gaussian_kernel_table(0.5, &grid(12.0, 2401)).unwrap();
        let m = truncated_msd(&t, &[6.0, 12.0]).unwrap();
        assert!((m[1].1 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn regional_matrix_conserves() {
        let g = GridFunction::from_fn(Domain::interval(-1.0, 1.0).unwrap(), 65, |x| (-8.0 * x * x).exp()).unwrap();
        let s = FracOrder::new(0.7).unwrap();
        let m = RegionalMatrix::assemble(&g, s).unwrap();
        let mut out = vec![0.0; 65];
        m.apply(&vec![1.0; 65], &mut out);
        assert!(out.iter().all(|v| v.abs() < 1e-9 * m.max_diag));
        m.apply(g.values(), &mut out);
        let flux: f64 = out.iter().zip(&m.mass).map(|(a, b)| a * b).sum();
        assert!(flux.abs() < 1e-12 * m.max_diag);
        let sol = regional_heat_solve(&g, s, 0.05).unwrap();
        assert!((regional_mass(&sol.u) - regional_mass(&g)).abs() < 1e-12);
    }
}
