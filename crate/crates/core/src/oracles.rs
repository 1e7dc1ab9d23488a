//! Closed-form functions with known fractional images and the harness that
//! checks them against the singular-integral evaluator.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::base::{FracOrder, FunctionHandle, QuadratureSpec, Smoothness};
use crate::error::{FracError, Result};
use crate::pointops::{fraclap, FracLapMethod};
use crate::special::{gamma, hyp1f1};

/// What an oracle asserts about (−Δ)^s u.
#[derive(Clone)]
pub enum Claim {
    /// Vanishes on (a, b).
    SHarmonicOn(f64, f64),
    /// Constant on (a, b), with the constant when it is known.
    ConstantImageOn { a: f64, b: f64, value: Option<f64> },
    /// Equal to the given function on the listed range.
    ExplicitImage {
        a: f64,
        b: f64,
        image: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl Claim {
    pub fn kind(&self) -> &'static str {
        match self {
            Claim::SHarmonicOn(..) => "sharmonic_on",
            Claim::ConstantImageOn { .. } => "constant_image_on",
            Claim::ExplicitImage { .. } => "explicit_image",
        }
    }

    pub fn interval(&self) -> (f64, f64) {
        match *self {
            Claim::SHarmonicOn(a, b) => (a, b),
            Claim::ConstantImageOn { a, b, .. } => (a, b),
            Claim::ExplicitImage { a, b, .. } => (a, b),
        }
    }
}

impl fmt::Debug for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.interval();
        write!(f, "{}({a}, {b})", self.kind())
    }
}

#[derive(Clone, Debug)]
pub struct OracleEntry {
    pub name: &'static str,
    pub function: FunctionHandle,
    pub s: FracOrder,
    pub claim: Claim,
    pub singular_points: Vec<f64>,
}

/// Names accepted by [`oracle`].
pub const ORACLE_NAMES: &[&str] = &[
    "const",
    "u_s",
    "u_half",
    "u_minus_half",
    "halfspace_power",
    "arctan_layer",
    "kelvin_w",
    "kelvin_wstar",
    "kelvin_Wstar",
    "kelvin_U",
    "gaussian",
];

/// 4^s Γ(1+s) Γ(1/2+s) / Γ(1/2): the constant value of (−Δ)^s (1 − x²)₊^s on
/// (−1, 1) in one dimension.
pub fn u_s_constant(s: FracOrder) -> f64 {
    let s = s.get();
    4f64.powf(s) * gamma(1.0 + s) * gamma(0.5 + s) / PI.sqrt()
}

/// (−Δ)^s e^{−x²} = 4^s Γ(s + 1/2)/√π · e^{−x²} ₁F₁(−s; 1/2; x²).
pub fn gaussian_image(s: f64, x: f64) -> f64 {
    4f64.powf(s) * gamma(s + 0.5) / PI.sqrt() * (-x * x).exp() * hyp1f1(-s, 0.5, x * x)
}

fn pos_pow(x: f64, p: f64) -> f64 {
    if x > 0.0 {
        x.powf(p)
    } else {
        0.0
    }
}

fn half_entry(name: &str, s: Option<FracOrder>) -> Result<FracOrder> {
    match s {
        None => Ok(FracOrder::HALF),
        Some(v) if v.get() == 0.5 => Ok(v),
        Some(v) => Err(FracError::InvalidArgument(format!(
            "oracle {name} is specific to s = 1/2, got {v}"
        ))),
    }
}

/// Builds a catalog entry. `s` is required for the parametric families and
/// may be omitted for the s = 1/2 entries.
pub fn oracle(name: &str, s: Option<FracOrder>) -> Result<OracleEntry> {
    let need = |s: Option<FracOrder>| {
        s.ok_or_else(|| FracError::InvalidArgument(format!("oracle {name} needs an order s")))
    };
    let entry = match name {
        "const" => OracleEntry {
            name: "const",
            function: FunctionHandle::constant(1.0),
            s: s.unwrap_or(FracOrder::HALF),
            claim: Claim::SHarmonicOn(f64::NEG_INFINITY, f64::INFINITY),
            singular_points: vec![],
        },
        "u_s" | "u_half" => {
            let s = if name == "u_half" {
                half_entry(name, s)?
            } else {
                need(s)?
            };
            let sv = s.get();
            let f = FunctionHandle::new(Smoothness::Bounded, move |x: f64| pos_pow(1.0 - x * x, sv))
                .with_singular_points([-1.0, 1.0])
                .with_support(-1.0, 1.0);
            OracleEntry {
                name: if name == "u_half" { "u_half" } else { "u_s" },
                function: f,
                s,
                claim: Claim::ConstantImageOn {
                    a: -1.0,
                    b: 1.0,
                    value: Some(u_s_constant(s)),
                },
                singular_points: vec![-1.0, 1.0],
            }
        }
        "u_minus_half" => {
            let s = half_entry(name, s)?;
            let f = FunctionHandle::new(Smoothness::SingularIntegrable, |x: f64| {
                if x.abs() < 1.0 {
                    1.0 / (1.0 - x * x).sqrt()
                } else {
                    0.0
                }
            })
            .with_singular_points([-1.0, 1.0])
            .with_support(-1.0, 1.0);
            OracleEntry {
                name: "u_minus_half",
                function: f,
                s,
                claim: Claim::SHarmonicOn(-1.0, 1.0),
                singular_points: vec![-1.0, 1.0],
            }
        }
        "halfspace_power" => {
            let s = need(s)?;
            let sv = s.get();
            let f = FunctionHandle::new(Smoothness::SingularIntegrable, move |x: f64| pos_pow(x, sv))
                .with_singular_points([0.0])
                .with_growth(sv);
            OracleEntry {
                name: "halfspace_power",
                function: f,
                s,
                claim: Claim::SHarmonicOn(0.0, f64::INFINITY),
                singular_points: vec![0.0],
            }
        }
        "arctan_layer" => {
            let s = half_entry(name, s)?;
            let f = FunctionHandle::new(Smoothness::Bounded, |x: f64| 2.0 / PI * x.atan());
            OracleEntry {
                name: "arctan_layer",
                function: f,
                s,
                claim: Claim::ExplicitImage {
                    a: f64::NEG_INFINITY,
                    b: f64::INFINITY,
                    image: Arc::new(|x: f64| (PI * (2.0 / PI * x.atan())).sin() / PI),
                },
                singular_points: vec![],
            }
        }
        "kelvin_w" | "kelvin_wstar" | "kelvin_Wstar" => {
            let s = need(s)?;
            let sv = s.get();
            let w = move |x: f64| {
                if x > 0.0 && x < 1.0 {
                    x.powf(sv - 1.0) * (1.0 - x).powf(sv)
                } else {
                    0.0
                }
            };
            let (label, f): (&'static str, FunctionHandle) = match name {
                "kelvin_w" => ("kelvin_w", FunctionHandle::new(Smoothness::SingularIntegrable, w)),
                "kelvin_wstar" => (
                    "kelvin_wstar",
                    FunctionHandle::new(Smoothness::SingularIntegrable, move |x: f64| w(1.0 - x)),
                ),
                _ => (
                    "kelvin_Wstar",
                    FunctionHandle::new(Smoothness::SingularIntegrable, move |x: f64| {
                        w(x) - w(1.0 - x)
                    }),
                ),
            };
            OracleEntry {
                name: label,
                function: f.with_singular_points([0.0, 1.0]).with_support(0.0, 1.0),
                s,
                claim: Claim::SHarmonicOn(0.0, 1.0),
                singular_points: vec![0.0, 1.0],
            }
        }
        "kelvin_U" => {
            let s = need(s)?;
            let sv = s.get();
            let f = FunctionHandle::new(Smoothness::Bounded, move |x: f64| {
                pos_pow(x, sv) * pos_pow(1.0 - x, sv)
            })
            .with_singular_points([0.0, 1.0])
            .with_support(0.0, 1.0);
            // U_s((x + 1)/2) = 4^{−s} u_s(x) and the operator scales by 4^{s}
            OracleEntry {
                name: "kelvin_U",
                function: f,
                s,
                claim: Claim::ConstantImageOn {
                    a: 0.0,
                    b: 1.0,
                    value: Some(u_s_constant(s)),
                },
                singular_points: vec![0.0, 1.0],
            }
        }
        "gaussian" => {
            let s = need(s)?;
            let sv = s.get();
            OracleEntry {
                name: "gaussian",
                function: FunctionHandle::gaussian().with_support(-6.0, 6.0),
                s,
                claim: Claim::ExplicitImage {
                    a: -3.0,
                    b: 3.0,
                    image: Arc::new(move |x| gaussian_image(sv, x)),
                },
                singular_points: vec![],
            }
        }
        other => {
            return Err(FracError::InvalidArgument(format!(
                "unknown oracle {other}; known: {}",
                ORACLE_NAMES.join(", ")
            )))
        }
    };
    Ok(entry)
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub name: String,
    pub s: f64,
    pub claim: String,
    /// (x, (−Δ)^s u(x), quadrature error estimate)
    pub values: Vec<(f64, f64, f64)>,
    /// Residual divided by the characteristic magnitude.
    pub residual: f64,
    pub scale: f64,
    /// Mean image value for constant-image claims.
    pub measured_constant: Option<f64>,
    /// Deviation of the measured constant from the known one, when known.
    pub constant_error: Option<f64>,
}

/// Evaluates the operator at `points` and measures how well the entry's
/// claim holds. Harmonic and explicit claims are measured in absolute terms
/// (their images are of unit size); constant images relative to the mean.
pub fn verify_oracle(
    entry: &OracleEntry,
    points: &[f64],
    q: &QuadratureSpec,
) -> Result<OracleReport> {
    let (a, b) = entry.claim.interval();
    if let Some(&x) = points.iter().find(|&&x| !(x > a && x < b)) {
        return Err(FracError::OutsideDomain(x));
    }
    if points.is_empty() {
        return Err(FracError::InvalidArgument("no points".into()));
    }
    let values: Vec<(f64, f64, f64)> = points
        .par_iter()
        .map(|&x| {
            fraclap(&entry.function, x, entry.s, q, FracLapMethod::SecondDifference)
                .map(|e| (x, e.value, e.error))
        })
        .collect::<Result<_>>()?;
    let mut measured_constant = None;
    let mut constant_error = None;
    let (residual, scale) = match &entry.claim {
        Claim::SHarmonicOn(..) => (values.iter().fold(0.0, |m: f64, v| m.max(v.1.abs())), 1.0),
        Claim::ExplicitImage { image, .. } => (
            values
                .iter()
                .fold(0.0, |m: f64, v| m.max((v.1 - image(v.0)).abs())),
            1.0,
        ),
        Claim::ConstantImageOn { value, .. } => {
            let mean = values.iter().map(|v| v.1).sum::<f64>() / values.len() as f64;
            let hi = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
            let lo = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
            measured_constant = Some(mean);
            constant_error = value.map(|c| (mean - c).abs() / c.abs());
            ((hi - lo) / mean.abs(), mean.abs())
        }
    };
    Ok(OracleReport {
        name: entry.name.to_string(),
        s: entry.s.get(),
        claim: format!("{:?}", entry.claim),
        values,
        residual,
        scale,
        measured_constant,
        constant_error,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerDecayReport {
    /// (t, t·(1 − u(t)))
    pub samples: Vec<(f64, f64)>,
    pub limit: f64,
    /// Relative distance of the last sample to 2/π.
    pub relative_error_at_last: f64,
    /// Whether log(1 − u) has positive second differences along the samples
    /// (true for algebraic decay, false for exponential).
    pub log_tail_convex: bool,
}

/// 1 − (2/π) arctan t, computed without cancellation.
pub fn layer_gap(t: f64) -> f64 {
    2.0 / PI * (1.0 / t).atan()
}

/// Decay of the explicit s = 1/2 layer toward its limit.
pub fn layer_decay_check(times: &[f64]) -> Result<LayerDecayReport> {
    if times.len() < 3 || times.iter().any(|t| !(*t > 0.0)) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FracError::InvalidArgument(
            "need at least three increasing positive times".into(),
        ));
    }
    let samples: Vec<(f64, f64)> = times.iter().map(|&t| (t, t * layer_gap(t))).collect();
    let limit = 2.0 / PI;
    let last = samples.last().unwrap().1;
    // equally spaced sub-samples for the convexity test
    let t0 = times[0];
    let t1 = *times.last().unwrap();
    let h = (t1 - t0) / 8.0;
    let logs: Vec<f64> = (0..=8).map(|k| layer_gap(t0 + k as f64 * h).ln()).collect();
    let log_tail_convex = logs.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] > 0.0);
    Ok(LayerDecayReport {
        samples,
        limit,
        relative_error_at_last: (last - limit).abs() / limit,
        log_tail_convex,
    })
}

/// max over a grid of (0.05, 0.95) of |U_s' − s(w_s − w*_s)|, with U_s'
/// taken from the logarithmic derivative s·U_s·(1/x − 1/(1 − x)).
pub fn primitive_identity_check(s: FracOrder, points: usize) -> f64 {
    let sv = s.get();
    let n = points.max(2);
    (0..n)
        .map(|k| 0.05 + 0.9 * k as f64 / (n - 1) as f64)
        .map(|x| {
            let u = (x * (1.0 - x)).powf(sv);
            let du = sv * u * (1.0 / x - 1.0 / (1.0 - x));
            let w = x.powf(sv - 1.0) * (1.0 - x).powf(sv);
            let ws = x.powf(sv) * (1.0 - x).powf(sv - 1.0);
            (du - sv * (w - ws)).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_formulas() {
        let e = oracle("u_s", Some(FracOrder::HALF)).unwrap();
        assert_eq!(e.function.eval(0.0), 1.0);
        assert_eq!(e.function.eval(1.2), 0.0);
        assert_eq!(e.function.eval(-1.2), 0.0);
        let m = oracle("u_minus_half", None).unwrap();
        assert!((m.function.eval(0.6) - 1.25).abs() < 1e-15);
        let k = oracle("kelvin_w", Some(FracOrder::HALF)).unwrap();
        assert!((k.function.eval(0.25) - 3f64.sqrt()).abs() < 1e-15);
        assert!(oracle("nope", None).is_err());
        assert!(oracle("u_minus_half", Some(FracOrder::new(0.3).unwrap())).is_err());
    }

    #[test]
    fn u_half_constant_is_one() {
        assert!((u_s_constant(FracOrder::HALF) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn layer_limits() {
        let r = layer_decay_check(&[10.0, 50.0, 100.0]).unwrap();
        assert!((r.samples[0].1 - 0.6345).abs() < 1e-4);
        assert!(r.relative_error_at_last < 1e-4);
        assert!(r.log_tail_convex);
    }

    #[test]
    fn primitive_identity() {
        for s in [0.3, 0.5, 0.7] {
            assert!(primitive_identity_check(FracOrder::new(s).unwrap(), 181) < 1e-12);
        }
    }

    #[test]
    fn gaussian_image_at_zero() {
        let v = gaussian_image(0.5, 0.0);
        assert!((v - 2.0 / PI.sqrt()).abs() < 1e-14);
    }
}
