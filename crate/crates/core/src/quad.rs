//! Gauss–Kronrod quadrature with adaptive bisection, geometrically graded
//! panels toward integrable endpoint singularities, and a compactifying map
//! for power-law tails.

// Tabulated nodes and weights keep their published digits.
#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// A quadrature value together with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn new(value: f64, error: f64) -> Self {
        Self { value, error }
    }

    pub fn scale(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            error: self.error * factor.abs(),
        }
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
        }
    }
}

impl std::ops::AddAssign for Estimate {
    fn add_assign(&mut self, rhs: Estimate) {
        self.value += rhs.value;
        self.error += rhs.error;
    }
}

impl std::iter::Sum for Estimate {
    fn sum<I: Iterator<Item = Estimate>>(iter: I) -> Estimate {
        iter.fold(Estimate::default(), |a, b| a + b)
    }
}

/// Returned when the subdivision budget runs out before the tolerance is met.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadFailure {
    pub partial: Estimate,
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_703_117_620,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// 21-point Gauss–Kronrod rule on [a, b] with the QUADPACK error heuristic.
pub fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Estimate {
    gk21_floor(f, a, b).0
}

/// [`gk21`] plus whether the error estimate sits at its rounding floor, where
/// bisection cannot reduce it.
fn gk21_floor<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (Estimate, bool) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut res_abs = kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    let mut at_floor = false;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let floor = 50.0 * f64::EPSILON * res_abs;
        if err <= floor {
            err = floor;
            at_floor = true;
        }
    }
    if !value.is_finite() {
        err = f64::INFINITY;
        at_floor = false;
    }
    (Estimate::new(value, err), at_floor)
}

struct Segment {
    a: f64,
    b: f64,
    est: Estimate,
    at_floor: bool,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est
            .error
            .partial_cmp(&other.est.error)
            .unwrap_or(Ordering::Equal)
    }
}

/// Globally adaptive bisection (QAG style) until the summed error estimate is
/// below `abs_tol`.
pub fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_segments: usize,
) -> Result<Estimate, QuadFailure> {
    if a == b {
        return Ok(Estimate::default());
    }
    let (first, at_floor) = gk21_floor(f, a, b);
    if first.error <= abs_tol {
        return Ok(first);
    }
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        a,
        b,
        est: first,
        at_floor,
    });
    let mut total = first;
    let mut count = 1;
    while total.error > abs_tol {
        if count >= max_segments {
            return Err(QuadFailure { partial: total });
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if worst.at_floor || mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // the largest error is pure rounding, or the segment cannot be split
            heap.push(worst);
            return Err(QuadFailure { partial: total });
        }
        let (left, lf) = gk21_floor(f, worst.a, mid);
        let (right, rf) = gk21_floor(f, mid, worst.b);
        total.value += left.value + right.value - worst.est.value;
        total.error += left.error + right.error - worst.est.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            est: left,
            at_floor: lf,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            est: right,
            at_floor: rf,
        });
        count += 1;
        if count % 64 == 0 {
            // re-sum to limit drift in the running totals
            total = heap.iter().map(|s| s.est).sum();
        }
    }
    Ok(total)
}

/// Wynn's epsilon extrapolation of the limit of a sequence of partial sums,
/// using at most the last 24 terms.
fn wynn_limit(sums: &[f64]) -> Option<f64> {
    let s = &sums[sums.len().saturating_sub(24)..];
    if s.len() < 3 {
        return None;
    }
    // prev holds column k-1, cur column k
    let mut prev = vec![0.0; s.len() + 1];
    let mut cur = s.to_vec();
    let mut best = *s.last().unwrap();
    let mut k = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            if d == 0.0 || !d.is_finite() {
                return Some(best);
            }
            next.push(prev[i + 1] + 1.0 / d);
        }
        prev = cur;
        cur = next;
        k += 1;
        if k % 2 == 0 {
            let v = *cur.last().unwrap();
            if !v.is_finite() {
                return Some(best);
            }
            best = v;
        }
    }
    Some(best)
}

/// Which end of an interval carries the singularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Left,
    Right,
}

/// Integrates over [a, b] using panels whose width halves toward the singular
/// end. Grading stops once a panel contributes less than `abs_tol / 10`, or
/// when panels reach floating-point resolution; the rest is extrapolated
/// geometrically from the last two panels.
pub fn graded<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    toward: End,
    abs_tol: f64,
    max_segments: usize,
) -> Result<Estimate, QuadFailure> {
    let len = b - a;
    if len == 0.0 {
        return Ok(Estimate::default());
    }
    let at = |d: f64| match toward {
        End::Left => f(a + d),
        End::Right => f(b - d),
    };
    // below this width the offset from the anchor loses too many digits and
    // the geometric remainder takes over
    let floor = 1e-8 * a.abs().max(b.abs());
    let panel_tol = abs_tol / 40.0;
    let mut total = Estimate::default();
    let mut sums: Vec<f64> = Vec::new();
    let mut limits: Vec<f64> = Vec::new();
    // best extrapolated value seen so far
    let mut best: Option<Estimate> = None;
    let mut worse_in_a_row = 0;
    let mut hi = len;
    loop {
        let lo = 0.5 * hi;
        let mut est = gk21(&at, lo, hi);
        if est.error > panel_tol {
            match adaptive(&at, lo, hi, panel_tol, max_segments) {
                Ok(e) => est = e,
                Err(QuadFailure { partial }) => est = partial,
            }
        }
        total += est;
        sums.push(total.value);
        let level = sums.len() - 1;
        let mut candidate = None;
        if let Some(lim) = wynn_limit(&sums) {
            limits.push(lim);
            let m = limits.len();
            if m >= 3 {
                let spread = (lim - limits[m - 2]).abs() + (lim - limits[m - 3]).abs();
                let err = spread + 1e-15 * lim.abs() * level as f64;
                candidate = Some(Estimate::new(lim, total.error + err));
            }
        }
        if let Some(c) = candidate {
            match best {
                Some(b) if b.error <= c.error => worse_in_a_row += 1,
                _ => {
                    best = Some(c);
                    worse_in_a_row = 0;
                }
            }
        }
        let small = est.value.abs() < abs_tol / 10.0 && level >= 4;
        let settled =
            matches!(candidate, Some(c) if c.error - total.error < abs_tol / 20.0) && level >= 6;
        let tiny = lo.abs() < floor;
        if small || settled || tiny || worse_in_a_row >= 8 || level > 200 {
            let bounded = Estimate::new(total.value, total.error + est.value.abs());
            total = match best {
                Some(b) if !small || b.error < bounded.error => b,
                _ => bounded,
            };
            break;
        }
        hi = lo;
    }
    if len < 0.0 {
        total.value = -total.value;
    }
    if total.error > abs_tol || !total.value.is_finite() {
        Err(QuadFailure { partial: total })
    } else {
        Ok(total)
    }
}

/// A breakpoint for [`integrate_pieces`]; `singular` requests grading toward it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Break {
    pub at: f64,
    pub singular: bool,
}

impl Break {
    pub fn plain(at: f64) -> Self {
        Self {
            at,
            singular: false,
        }
    }
    pub fn singular(at: f64) -> Self {
        Self { at, singular: true }
    }
}

/// Sorts and merges breakpoints; a merged point is singular if any copy was.
pub fn normalize_breaks(mut breaks: Vec<Break>) -> Vec<Break> {
    breaks.retain(|b| b.at.is_finite());
    breaks.sort_by(|x, y| x.at.partial_cmp(&y.at).unwrap_or(Ordering::Equal));
    let mut out: Vec<Break> = Vec::with_capacity(breaks.len());
    for b in breaks {
        match out.last_mut() {
            Some(last) if (b.at - last.at).abs() <= 1e-14 * last.at.abs().max(1.0) => {
                last.singular |= b.singular;
            }
            _ => out.push(b),
        }
    }
    out
}

/// Integrates across consecutive breakpoints (which must be sorted, see
/// [`normalize_breaks`]). Intervals next to a singular breakpoint are graded.
pub fn integrate_pieces<F: Fn(f64) -> f64>(
    f: &F,
    breaks: &[Break],
    abs_tol: f64,
    max_segments: usize,
) -> Result<Estimate, QuadFailure> {
    if breaks.len() < 2 {
        return Ok(Estimate::default());
    }
    let pieces = breaks.len() - 1;
    let tol = abs_tol / pieces as f64;
    let mut total = Estimate::default();
    let mut absorb = |r: Result<Estimate, QuadFailure>| match r {
        Ok(e) => total += e,
        Err(QuadFailure { partial }) => total += partial,
    };
    for w in breaks.windows(2) {
        let (l, r) = (w[0], w[1]);
        match (l.singular, r.singular) {
            (false, false) => absorb(adaptive(f, l.at, r.at, tol, max_segments)),
            (true, false) => absorb(graded(f, l.at, r.at, End::Left, tol, max_segments)),
            (false, true) => absorb(graded(f, l.at, r.at, End::Right, tol, max_segments)),
            (true, true) => {
                let mid = 0.5 * (l.at + r.at);
                absorb(graded(f, l.at, mid, End::Left, 0.5 * tol, max_segments));
                absorb(graded(f, mid, r.at, End::Right, 0.5 * tol, max_segments));
            }
        }
    }
    if total.error > abs_tol || !total.value.is_finite() {
        Err(QuadFailure { partial: total })
    } else {
        Ok(total)
    }
}

/// ∫_R^∞ g(y) y^{-1-α} dy through the substitution t = (R / y)^α, which maps
/// the tail onto (0, 1] with a unit Jacobian weight:
/// R^{-α} / α · ∫_0^1 g(R t^{-1/α}) dt.
pub fn power_tail<G: Fn(f64) -> f64>(
    g: &G,
    radius: f64,
    alpha: f64,
    abs_tol: f64,
    max_segments: usize,
) -> Result<Estimate, QuadFailure> {
    let prefactor = radius.powf(-alpha) / alpha;
    let mapped = |t: f64| g(radius * t.powf(-1.0 / alpha));
    let tol = abs_tol / prefactor;
    graded(&mapped, 0.0, 1.0, End::Left, tol, max_segments)
        .map(|e| e.scale(prefactor))
        .map_err(|QuadFailure { partial }| QuadFailure {
            partial: partial.scale(prefactor),
        })
}

/// Composite trapezoid rule on a uniform grid.
pub fn trapezoid(values: &[f64], dx: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            dx * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk21_is_exact_on_polynomials() {
        let e = gk21(&|x: f64| x.powi(20) - 3.0 * x.powi(7), -1.0, 2.0);
        let exact = (2f64.powi(21) + 1.0) / 21.0 - 3.0 * (2f64.powi(8) - 1.0) / 8.0;
        assert!((e.value - exact).abs() < 1e-9 * exact.abs());
    }

    #[test]
    fn adaptive_handles_peaks() {
        let f = |x: f64| 1.0 / (1e-4 + (x - 0.3).powi(2));
        let e = adaptive(&f, 0.0, 1.0, 1e-10, 2000).unwrap();
        let exact = ((0.7f64 / 1e-2).atan() + (0.3f64 / 1e-2).atan()) / 1e-2;
        assert!((e.value - exact).abs() < 1e-8, "{} vs {}", e.value, exact);
    }

    #[test]
    fn graded_integrates_inverse_square_root() {
        let f = |x: f64| 1.0 / (x - 0.4).sqrt();
        let e = graded(&f, 0.4, 1.4, End::Left, 1e-10, 500).unwrap();
        assert!((e.value - 2.0).abs() < 1e-8, "{}", e.value);
        let g = |x: f64| 1.0 / (1.0 - x).powf(0.7);
        let e = graded(&g, 0.0, 1.0, End::Right, 1e-9, 500).unwrap();
        assert!((e.value - 1.0 / 0.3).abs() < 1e-7, "{}", e.value);
    }

    #[test]
    fn pieces_with_interior_singularity() {
        let f = |x: f64| (x.abs()).powf(-0.5);
        let br = normalize_breaks(vec![Break::plain(-1.0), Break::singular(0.0), Break::plain(1.0)]);
        let e = integrate_pieces(&f, &br, 1e-9, 500).unwrap();
        assert!((e.value - 4.0).abs() < 1e-7);
    }

    #[test]
    fn power_tail_matches_closed_form() {
        // ∫_2^∞ y^{-1-α} dy = 2^{-α}/α
        let alpha = 0.6;
        let e = power_tail(&|_| 1.0, 2.0, alpha, 1e-10, 200).unwrap();
        assert!((e.value - 2f64.powf(-alpha) / alpha).abs() < 1e-12);
        // ∫_1^∞ e^{-y} y^{-2} dy = E_2(1)
        let e = power_tail(&|y: f64| (-y).exp(), 1.0, 1.0, 1e-11, 500).unwrap();
        assert!((e.value - 0.148_495_506_775_922_05).abs() < 1e-10, "{}", e.value);
    }
}
