//! Verification suites run by `verify` and `report`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use fraclab::caputo::*;
use fraclab::heatflow::*;
use fraclab::oracles::{layer_decay_check, oracle, verify_oracle};
use fraclab::pointops::*;
use fraclab::spectral::*;
use fraclab::special::beta;
use fraclab::stats::{coefficient_of_variation, mean, power_law_fit};
use fraclab::*;

use crate::CliError;

pub const SUITES: &[&str] = &["oracles", "spectral", "caputo", "kernels", "master"];

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub paper_ref: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// A named check: residual-producing closure plus its threshold.
struct Check {
    name: String,
    reference: &'static str,
    threshold: f64,
    run: Box<dyn Fn() -> Result<f64> + Send + Sync>,
}

fn check(
    name: impl Into<String>,
    reference: &'static str,
    threshold: f64,
    run: impl Fn() -> Result<f64> + Send + Sync + 'static,
) -> Check {
    Check {
        name: name.into(),
        reference,
        threshold,
        run: Box::new(run),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub s: FracOrder,
    pub quick: bool,
}

fn order(s: f64) -> FracOrder {
    FracOrder::new(s).expect("orders in the suites lie in (0, 1)")
}

fn oracle_checks(o: SuiteOptions) -> Vec<Check> {
    let q = QuadratureSpec::with_tol(1e-8);
    let pts9: Vec<f64> = if o.quick {
        vec![-0.6, 0.0, 0.6]
    } else {
        (0..9).map(|k| -0.8 + 0.2 * k as f64).collect()
    };
    let s = o.s;
    let mut v = vec![];
    {
        let (q, pts) = (q.clone(), pts9.clone());
        v.push(check("u_half_constancy", "constant image of (1-x^2)_+^{1/2}", 1e-3, move || {
            Ok(verify_oracle(&oracle("u_half", Some(FracOrder::HALF))?, &pts, &q)?.residual)
        }));
    }
    {
        let (q, pts) = (q.clone(), pts9.clone());
        v.push(check("u_half_constant_value", "(-Δ)^{1/2}(1-x^2)_+^{1/2} = 1 on (-1,1)", 1e-3, move || {
            let r = verify_oracle(&oracle("u_half", Some(FracOrder::HALF))?, &pts, &q)?;
            Ok((r.measured_constant.unwrap_or(f64::NAN) - 1.0).abs())
        }));
    }
    {
        let q = q.clone();
        v.push(check("u_minus_half_harmonicity", "(1-x^2)_+^{-1/2} is 1/2-harmonic on (-1,1)", 1e-3, move || {
            Ok(verify_oracle(&oracle("u_minus_half", None)?, &[-0.6, -0.2, 0.2, 0.3, 0.6], &q)?.residual)
        }));
    }
    {
        let q = q.clone();
        v.push(check("arctan_layer_image", "(-Δ)^{1/2}(2/π)arctan = sin(πu)/π", 1e-4, move || {
            Ok(verify_oracle(&oracle("arctan_layer", None)?, &[0.0, 0.5, 1.0, 3.0], &q)?.residual)
        }));
    }
    v.push(check("layer_tail_limit", "t(1-u(t)) → 2/π", 1e-3, || {
        Ok(layer_decay_check(&[25.0, 50.0, 100.0])?.relative_error_at_last)
    }));
    let pts3 = vec![-0.5, 0.0, 0.5];
    for (name, reference, points) in [
        ("u_s", "constant image of (1-x^2)_+^s", pts3.clone()),
        ("halfspace_power", "x_+^s is s-harmonic on (0,∞)", vec![0.5, 1.0, 2.0]),
        ("kelvin_w", "Kelvin family: w_s is s-harmonic on (0,1)", vec![0.2, 0.5, 0.8]),
        ("kelvin_Wstar", "Kelvin family: W*_s is s-harmonic on (0,1)", vec![0.2, 0.5, 0.8]),
        ("kelvin_U", "Kelvin family: constant image of U_s on (0,1)", vec![0.2, 0.5, 0.8]),
        ("gaussian", "image of e^{-x^2} through its Fourier symbol", vec![0.0, 1.0, 2.5]),
    ] {
        let q = q.clone();
        let pts = if o.quick { points[..2].to_vec() } else { points };
        v.push(check(format!("{name}(s={})", s.get()), reference, 1e-6, move || {
            let r = verify_oracle(&oracle(name, Some(s))?, &pts, &q)?;
            Ok(r.residual.max(r.constant_error.unwrap_or(0.0)))
        }));
    }
    v
}

fn spectral_checks(o: SuiteOptions) -> Vec<Check> {
    let mut v = vec![];
    let trig = |n: usize| -> Result<(GridFunction, GridFunction)> {
        let dom = Domain::torus(2.0 * PI)?;
        let u = GridFunction::from_fn(dom, n, |x| (3.0 * x).sin() + 0.5 * (5.0 * x).cos())?;
        let lap = GridFunction::from_fn(dom, n, |x| 9.0 * (3.0 * x).sin() + 12.5 * (5.0 * x).cos())?;
        Ok((u, lap))
    };
    v.push(check("semigroup_half_half", "(-Δ)^{1/2}(-Δ)^{1/2} = -Δ per mode", 1e-12, move || {
        let (u, lap) = trig(64)?;
        let c = semigroup_compose(&u, FracOrder::HALF, FracOrder::HALF)?;
        Ok(max_diff(c.values(), lap.values()) / lap.max_abs())
    }));
    v.push(check("semigroup_general", "(-Δ)^s(-Δ)^{s'} = (-Δ)^{s+s'}", 1e-12, move || {
        let (u, _) = trig(64)?;
        let c = semigroup_compose(&u, order(0.3), order(0.4))?;
        let d = torus_power(&u, 0.7)?;
        Ok(max_diff(c.values(), d.values()) / d.max_abs())
    }));
    v.push(check("heat_semigroup", "e^{-t(-Δ)^s} composes additively in t", 1e-12, move || {
        let (u, _) = trig(64)?;
        let s = order(0.6);
        let a = spectral_heat_evolve(&spectral_heat_evolve(&u, s, 0.3)?, s, 0.2)?;
        let b = spectral_heat_evolve(&u, s, 0.5)?;
        Ok(max_diff(a.values(), b.values()) / b.max_abs())
    }));
    v.push(check("dirichlet_eigenmode", "sin(kπx) has spectral image (kπ)^{2s} sin(kπx)", 1e-10, move || {
        let s = order(0.4);
        let g = GridFunction::from_fn(Domain::interval(0.0, 1.0)?, 129, |x| (2.0 * PI * x).sin())?;
        let c = SpectralCoefficients::project(&g, SpectralBasis::dirichlet(), 16)?;
        let img = dirichlet_spectral_fraclap(&c, s)?.synthesize(129)?;
        let want: Vec<f64> = img.nodes().iter().map(|x| (2.0 * PI).powf(0.8) * (2.0 * PI * x).sin()).collect();
        Ok(max_diff(img.values(), &want) / (2.0 * PI).powf(0.8))
    }));
    let quick = o.quick;
    v.push(check("torus_equivalence", "torus multiplier = periodized singular integral", 1e-3, move || {
        let s = FracOrder::HALF;
        let bump = FunctionHandle::new(Smoothness::C2Local, |x: f64| {
            let z = 4.0 * (x - 0.5);
            if z.abs() < 1.0 {
                (-1.0 / (1.0 - z * z)).exp()
            } else {
                0.0
            }
        })
        .with_support(0.25, 0.75);
        let grid = GridFunction::from_fn(Domain::torus(1.0)?, 256, periodize(&bump, 1.0))?;
        let spec = torus_fraclap(&grid, s)?;
        let q = QuadratureSpec::with_tol(1e-8);
        let idx: &[usize] = if quick { &[0, 128] } else { &[0, 40, 100, 128, 200] };
        let mut worst: f64 = 0.0;
        for &i in idx {
            let e = periodized_fraclap(&bump, 1.0, grid.node(i), s, &q, 6)?;
            worst = worst.max((e.value - spec.values()[i]).abs());
        }
        Ok(worst)
    }));
    v
}

fn caputo_checks(o: SuiteOptions) -> Vec<Check> {
    // L1 converges like dt^{2-s}; coarser grids miss 1e-3 at s = 3/4
    let n = 1024;
    let dt = 1.0 / n as f64;
    let mut v = vec![];
    v.push(check("power_rule_t2_half", "∂^s t^r = Γ(r+1)/Γ(r+1-s) t^{r-s}, Beta form", 1e-6, move || {
        let u = TimeSeries::uniform_from_handle(dt, n, FunctionHandle::new(Smoothness::C2Local, |t: f64| t * t))?;
        let d = caputo_derivative(&u, 1.0, FracOrder::HALF, CaputoScheme::DirectQuadrature)?;
        Ok((d - 2.0 * beta(2.0, 0.5)).abs())
    }));
    for sv in [0.25, 0.5, 0.75] {
        v.push(check(format!("l1_vs_direct(s={sv})"), "L1 scheme against direct quadrature", 1e-3, move || {
            let s = order(sv);
            let fs: [fn(f64) -> f64; 3] = [|t| t, |t| t * t, |t| (-t).exp()];
            let mut worst: f64 = 0.0;
            for f in fs {
                let u = TimeSeries::uniform_from_handle(dt, n, FunctionHandle::new(Smoothness::C2Local, f))?;
                for i in (n / 64..=n).step_by(n / 64) {
                    let t = i as f64 * dt;
                    let a = caputo_derivative(&u, t, s, CaputoScheme::L1)?;
                    let b = caputo_derivative(&u, t, s, CaputoScheme::DirectQuadrature)?;
                    worst = worst.max((a - b).abs());
                }
            }
            Ok(worst)
        }));
    }
    v.push(check("marchaud_equals_caputo", "Marchaud form with constant extension", 1e-6, move || {
        let u = TimeSeries::uniform_from_handle(dt, n, FunctionHandle::new(Smoothness::C2Local, |t: f64| (-t).exp()))?;
        let s = order(0.6);
        let a = marchaud_derivative(&u, 0.8, s)?;
        let b = caputo_derivative(&u, 0.8, s, CaputoScheme::DirectQuadrature)?;
        Ok((a - b).abs())
    }));
    v.push(check("volterra_round_trip", "Volterra inverse then derivative", 1e-3, move || {
        let s = FracOrder::HALF;
        let f = |t: f64| 1.0 + t;
        let ft = TimeSeries::uniform(dt, (0..=n).map(|i| f(i as f64 * dt)).collect())?;
        let u = volterra_inverse(&ft, 0.5, s)?;
        let mut worst: f64 = 0.0;
        for i in (n / 8..=n).step_by(4) {
            let t = i as f64 * dt;
            worst = worst.max((caputo_normalized(&u, t, s, CaputoScheme::L1)? - f(t)).abs());
        }
        Ok(worst)
    }));
    v.push(check("laplace_identity", "Laplace transform of the Caputo derivative", 1e-4, || {
        let u = FunctionHandle::new(Smoothness::C2Local, |t: f64| (-t).exp());
        Ok(laplace_identity_residual(&u, FracOrder::HALF, &[1.5, 3.0], -1.0)?.max_residual)
    }));
    v.push(check("memory_weights", "discrete memory weights against the double integral", 1e-6, || {
        let levels = [0.0, 1.0, -0.5, 2.0, 0.25, 1.5];
        let s = order(0.5);
        Ok((memory_average(&levels, s)? - memory_integral_direct(&levels, s)?).abs())
    }));
    v.push(check("memory_weight_asymptotics", "c_j j^s → 1", 0.1, || {
        let s = order(0.5);
        let w = MemoryWeights::new(s, 2001);
        Ok((20..=2000).map(|j| (w.c[j] * (j as f64).sqrt() - 1.0).abs()).fold(0.0, f64::max))
    }));
    let steps = if o.quick { 300 } else { 1000 };
    for sv in [0.5, 0.75] {
        v.push(check(format!("timefrac_msd_exponent(s={sv})"), "MSD ∝ t^s for Caputo diffusion", 0.05, move || {
            let dom = Domain::torus_from(-30.0, 60.0)?;
            let var0 = 0.01;
            let u0 = GridFunction::from_fn(dom, 512, |x| (-x * x / (2.0 * var0)).exp() / (2.0 * PI * var0).sqrt())?;
            let dt = 10.0 / steps as f64;
            let times: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
            let sol = timefrac_heat_solve(&u0, order(sv), &times)?;
            let idx: Vec<usize> = (steps / 10..=steps).step_by(steps / 20).collect();
            let tt: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
            let msd: Vec<f64> = idx
                .iter()
                .map(|&i| msd_of_density(&sol[i], 0.0).map(|m| m - var0))
                .collect::<Result<_>>()?;
            Ok((power_law_fit(&tt, &msd)?.0 - sv).abs())
        }));
    }
    v
}

fn kernel_checks(o: SuiteOptions) -> Vec<Check> {
    let mut v = vec![];
    let step: f64 = if o.quick { 0.25 } else { 0.05 };
    v.push(check("cauchy_kernel", "G_{1/2}(x) = 1/(π(1+x^2))", 1e-6, move || {
        let n = (40.0 / step).round() as usize;
        let grid: Vec<f64> = (0..=n).map(|i| -20.0 + step * i as f64).collect();
        let t = heat_kernel_fourier(FracOrder::HALF, &grid)?;
        Ok(t.x
            .iter()
            .zip(&t.values)
            .map(|(x, g)| (g - 1.0 / (PI * (1.0 + x * x))).abs())
            .fold(0.0, f64::max))
    }));
    for sv in [0.25, 0.5, 0.75] {
        v.push(check(format!("tail_exponent(s={sv})"), "G_s(x) ~ c|x|^{-1-2s}", 0.1, move || {
            let radii = [100.0, 200.0, 400.0, 800.0];
            let grid: Vec<f64> = radii.iter().rev().map(|r| -r).chain(radii).collect();
            let t = heat_kernel_fourier(order(sv), &grid)?;
            Ok((kernel_tail_fit(&t, &radii)?.exponent + 1.0 + 2.0 * sv).abs())
        }));
    }
    v.push(check("kernel_mass", "∫G_s = 1", 1e-3, move || {
        let n = if o.quick { 241 } else { 1201 };
        let grid: Vec<f64> = (0..n).map(|i| -30.0 + 60.0 * i as f64 / (n - 1) as f64).collect();
        let t = heat_kernel_fourier(order(0.75), &grid)?;
        Ok((t.mass - 1.0).abs())
    }));
    for t in [1.0, 4.0] {
        v.push(check(format!("kernel_scaling(t={t})"), "G_s(x,t) = t^{-1/2s}G_s(x t^{-1/2s})", 1e-3, move || {
            Ok(kernel_scaling_check(FracOrder::HALF, t, if o.quick { 40 } else { 200 })?.max_relative_deviation)
        }));
    }
    v.push(check("regional_mass_conservation", "censored evolution conserves mass", 1e-12, || {
        let g = GridFunction::from_fn(Domain::interval(-1.0, 1.0)?, 129, |x| (-8.0 * x * x).exp())?;
        let m0 = regional_mass(&g);
        let sol = regional_heat_solve(&g, order(0.6), 0.05)?;
        Ok((regional_mass(&sol.u) - m0).abs() / m0)
    }));
    v.push(check("regional_max_principle", "censored evolution stays within the initial range", 1e-12, || {
        let g = GridFunction::from_fn(Domain::interval(-1.0, 1.0)?, 129, |x| (-8.0 * x * x).exp())?;
        let (lo, hi) = (g.values().iter().cloned().fold(f64::INFINITY, f64::min), g.max_abs());
        let sol = regional_heat_solve(&g, order(0.6), 0.05)?;
        Ok(sol
            .u
            .values()
            .iter()
            .map(|v| (v - hi).max(lo - v).max(0.0))
            .fold(0.0, f64::max))
    }));
    v
}

fn master_checks(o: SuiteOptions) -> Vec<Check> {
    let mut v = vec![];
    let q = QuadratureSpec::with_tol(1e-7);
    let points: Vec<Point> = if o.quick { vec![[0.2, -0.1]] } else { vec![[0.2, -0.1], [0.6, 0.5]] };
    for x in points {
        let q = q.clone();
        v.push(check(
            format!("master_limit(x={x:?})"),
            "(1-s)-scaled master operator → -Σ a_ij ∂_ij u as s → 1",
            0.05,
            move || {
                let k = MasterKernel::constant(2, KernelForm::NonDivergence, [[1.0, 0.0], [0.0, 2.0]])?;
                let u = FunctionHandle::<Point>::new(Smoothness::Schwartz, |p: Point| {
                    (-(p[0] * p[0] + 0.5 * p[1] * p[1] + 0.3 * p[0] * p[1])).exp()
                });
                let c = classical_limit_coefficients(&k, x, q.angles);
                let (g, hess) = derivatives(&u, x, 2, 1e-3);
                let target = c.apply(g, hess);
                let hs = [0.10, 0.05, 0.01];
                let vals: Vec<f64> = hs
                    .iter()
                    .map(|h| master_operator(&u, x, order(1.0 - h), &k, &q).map(|e| e.value))
                    .collect::<Result<_>>()?;
                Ok((neville_at_zero(&hs, &vals).0 - target).abs() / target.abs())
            },
        ));
    }
    v.push(check("nonlocal_laplacian_constancy", "fourth-difference integral is a multiple of -Δu", 0.01, || {
        let q = QuadratureSpec::with_tol(1e-8);
        let fs: [(fn(f64) -> f64, fn(f64) -> f64, [f64; 3]); 2] = [
            (|x| (-x * x).exp(), |x| (2.0 - 4.0 * x * x) * (-x * x).exp(), [0.0, 0.3, 1.5]),
            (|x| 1.0 / (1.0 + x * x), |x| (2.0 - 6.0 * x * x) / (1.0 + x * x).powi(3), [0.0, 0.2, 1.5]),
        ];
        let mut ratios = vec![];
        for (f, mdd, pts) in fs {
            let u = FunctionHandle::new(Smoothness::Schwartz, f);
            for x in pts {
                ratios.push(nonlocal_classical_lap(&u, x, &q)?.value / mdd(x));
            }
        }
        Ok(coefficient_of_variation(&ratios).max((mean(&ratios) / nonlocal_laplacian_constant() - 1.0).abs()))
    }));
    for sv in [0.5, 0.75] {
        v.push(check(format!("decay_law(s={sv})"), "|(-Δ)^s u(x)| ~ |x|^{-1-2s}", 0.05, move || {
            let q = QuadratureSpec::with_tol(1e-10);
            let radii = [8.0, 11.3, 16.0, 22.6, 32.0];
            let u = FunctionHandle::gaussian().with_support(-6.0, 6.0);
            let vals: Vec<f64> = radii
                .iter()
                .map(|&r| fraclap(&u, r, order(sv), &q, FracLapMethod::SecondDifference).map(|e| e.value.abs()))
                .collect::<Result<_>>()?;
            Ok((power_law_fit(&radii, &vals)?.0 + 1.0 + 2.0 * sv).abs())
        }));
    }
    v.push(check("master_matches_fraclap", "master operator with M = I is (1-s)/C(1,s) (-Δ)^s", 1e-6, || {
        let s = order(0.6);
        let u1 = FunctionHandle::gaussian().with_support(-6.0, 6.0);
        let u2 = FunctionHandle::<Point>::new(Smoothness::Schwartz, |p: Point| (-p[0] * p[0]).exp());
        let k = MasterKernel::constant(1, KernelForm::NonDivergence, [[1.0, 0.0], [0.0, 1.0]])?;
        let q = QuadratureSpec::with_tol(1e-9);
        let m = master_operator(&u2, [0.4, 0.0], s, &k, &q)?;
        let f = fraclap(&u1, 0.4, s, &q, FracLapMethod::SecondDifference)?;
        Ok((m.value - (1.0 - s.get()) / normalization_constant(1, s)? * f.value).abs())
    }));
    v
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Runs one suite (or all of them) with checks in parallel; results keep
/// their declaration order.
pub fn run_suite(name: &str, o: SuiteOptions) -> std::result::Result<Vec<CheckResult>, CliError> {
    let checks: Vec<Check> = match name {
        "oracles" => oracle_checks(o),
        "spectral" => spectral_checks(o),
        "caputo" => caputo_checks(o),
        "kernels" => kernel_checks(o),
        "master" => master_checks(o),
        "all" => SUITES
            .iter()
            .flat_map(|n| match *n {
                "oracles" => oracle_checks(o),
                "spectral" => spectral_checks(o),
                "caputo" => caputo_checks(o),
                "kernels" => kernel_checks(o),
                _ => master_checks(o),
            })
            .collect(),
        other => {
            return Err(CliError::Usage(format!(
                "unknown suite {other}; expected one of {}, all",
                SUITES.join(", ")
            )))
        }
    };
    Ok(checks
        .par_iter()
        .map(|c| {
            let residual = match (c.run)() {
                Ok(r) => r,
                Err(err) => {
                    eprintln!("check {} failed to run: {err}", c.name);
                    f64::INFINITY
                }
            };
            CheckResult {
                name: c.name.clone(),
                paper_ref: c.reference.to_string(),
                residual,
                threshold: c.threshold,
                pass: residual.is_finite() && residual < c.threshold,
            }
        })
        .collect())
}
