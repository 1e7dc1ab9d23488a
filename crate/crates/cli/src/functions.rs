//! Named test functions accepted by `--fn`.

use fraclab::{FunctionHandle, Smoothness};

use crate::CliError;

/// Accepts `t^r` / `x^r` (r ≥ 0), `exp(-t)`, `exp(-x^2)` / `gaussian`,
/// `sin(t)`, `cos(t)`, `t`, `x` and numeric constants.
pub fn parse_function(spec: &str) -> Result<FunctionHandle, CliError> {
    let s: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
    let lower = s.to_ascii_lowercase();
    let h = |sm: Smoothness, f: fn(f64) -> f64| Ok(FunctionHandle::new(sm, f));
    match lower.as_str() {
        "t" | "x" => return h(Smoothness::C2Local, |t| t).map(|u| u.with_growth(1.0)),
        "exp(-t)" | "e^-t" | "e^(-t)" => return h(Smoothness::C2Local, |t| (-t).exp()),
        "exp(-x^2)" | "gaussian" => {
            return Ok(FunctionHandle::gaussian().with_support(-6.0, 6.0));
        }
        "sin(t)" | "sin(x)" | "sin" => return h(Smoothness::Bounded, f64::sin),
        "cos(t)" | "cos(x)" | "cos" => return h(Smoothness::Bounded, f64::cos),
        "const" | "one" => return Ok(FunctionHandle::constant(1.0)),
        _ => {}
    }
    if let Some(rest) = lower.strip_prefix("t^").or_else(|| lower.strip_prefix("x^")) {
        let r: f64 = rest
            .trim_matches(|c| c == '(' || c == ')')
            .parse()
            .map_err(|_| CliError::Usage(format!("cannot parse exponent in {spec}")))?;
        if !(r >= 0.0) {
            return Err(CliError::Usage(format!("exponent must be ≥ 0 in {spec}")));
        }
        return Ok(FunctionHandle::new(Smoothness::C2Local, move |t: f64| {
            if t <= 0.0 {
                if r == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                t.powf(r)
            }
        })
        .with_growth(r));
    }
    if let Ok(c) = lower.parse::<f64>() {
        return Ok(FunctionHandle::constant(c));
    }
    Err(CliError::Usage(format!(
        "unknown function {spec}; try t^2, exp(-t), gaussian, sin(t), cos(t) or a constant"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_catalog() {
        assert_eq!(parse_function("t^2").unwrap().eval(3.0), 9.0);
        assert_eq!(parse_function("x^0.5").unwrap().eval(4.0), 2.0);
        assert_eq!(parse_function("exp(-t)").unwrap().eval(0.0), 1.0);
        assert_eq!(parse_function("2.5").unwrap().eval(7.0), 2.5);
        assert!(parse_function("t^-1").is_err());
        assert!(parse_function("bogus").is_err());
    }
}
