//! Monte Carlo walkers: the nearest-neighbour lattice walk, the censored and
//! free long-jump walks, and the comb walk.
//!
//! Walker `i` of an ensemble draws from `ChaCha8Rng::seed_from_u64(seed)` on
//! stream `i`, so results do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Pareto, Zeta, Zipf};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::{normalization_constant, Domain, FracOrder, GridFunction};
use crate::error::{FracError, Result};
use crate::special::{zeta, zeta_tail};

const CHUNK: usize = 512;

/// Jump magnitude law of the free long-jump walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum JumpLaw {
    /// P(k) ∝ |k|^{−1−2s} on 1 ≤ |k| ≤ k_max.
    LatticePowerLaw { k_max: u64 },
    /// Symmetric Pareto density |r|^{−1−2s}/C on |r| ≥ r₀, with r₀ chosen so
    /// the total mass is one. Same tail as the untruncated lattice law.
    ContinuumPareto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub h: f64,
    /// `None` for the nearest-neighbour walk.
    pub s: Option<FracOrder>,
    pub horizon: f64,
    pub ensemble: usize,
    pub seed: u64,
    pub domain: Domain,
    pub start: f64,
    /// Number of log-spaced steps at which ensemble moments are recorded.
    pub checkpoints: usize,
}

impl WalkConfig {
    /// Nearest-neighbour walk with τ = h².
    pub fn classical(h: f64, horizon: f64, ensemble: usize, seed: u64) -> Result<Self> {
        Self {
            h,
            s: None,
            horizon,
            ensemble,
            seed,
            domain: Domain::FullLine,
            start: 0.0,
            checkpoints: 24,
        }
        .validated()
    }

    /// Long-jump walk on the whole line with τ = h^{2s}.
    pub fn long_jump(h: f64, s: FracOrder, horizon: f64, ensemble: usize, seed: u64) -> Result<Self> {
        Self {
            s: Some(s),
            ..Self::classical(h, horizon, ensemble, seed)?
        }
        .validated()
    }

    /// Long-jump walk censored to a bounded interval.
    pub fn censored(
        h: f64,
        s: FracOrder,
        domain: Domain,
        horizon: f64,
        ensemble: usize,
        seed: u64,
    ) -> Result<Self> {
        Self {
            domain,
            ..Self::long_jump(h, s, horizon, ensemble, seed)?
        }
        .validated()
    }

    pub fn with_start(mut self, x: f64) -> Self {
        self.start = x;
        self
    }

    pub fn with_checkpoints(mut self, n: usize) -> Self {
        self.checkpoints = n;
        self
    }

    fn validated(self) -> Result<Self> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(FracError::InvalidArgument(format!("lattice spacing h = {}", self.h)));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(FracError::NegativeTime(self.horizon));
        }
        self.domain.validate()?;
        Ok(self)
    }

    /// τ = h² without an order, h^{2s} with one.
    pub fn time_step(&self) -> f64 {
        match self.s {
            None => self.h * self.h,
            Some(s) => self.h.powf(2.0 * s.get()),
        }
    }

    /// Number of steps, the horizon rounded to the nearest multiple of τ.
    pub fn steps(&self) -> usize {
        (self.horizon / self.time_step()).round() as usize
    }
}

/// Ensemble moments after a given number of steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub step: usize,
    pub time: f64,
    pub mean: f64,
    /// ⟨(x − x₀)²⟩ along the walk (the backbone for the comb).
    pub msd: f64,
    /// ⟨y²⟩ for the comb, zero otherwise.
    pub msd_y: f64,
    /// Fraction of walkers with y = 0 (one outside the comb).
    pub backbone_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub positions: Vec<f64>,
    /// Finger coordinates of the comb walk.
    pub heights: Option<Vec<f64>>,
    pub steps: usize,
    pub elapsed: f64,
    /// Time at which the limiting density is the heat kernel of the limiting
    /// generator: e^{tΔ} for the lattice walk, e^{−t(−Δ)^s} for long jumps.
    pub generator_time: f64,
    pub seed: u64,
    pub record: Vec<Observation>,
}

impl EnsembleResult {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// (seed, stream) of walker `i`.
    pub fn walker_stream(&self, i: usize) -> (u64, u64) {
        (self.seed, i as u64)
    }
}

fn walker_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

/// Up to `count` distinct steps in 1..=steps, log-spaced, always including
/// the last one.
pub fn checkpoint_steps(steps: usize, count: usize) -> Vec<usize> {
    if steps == 0 || count == 0 {
        return vec![];
    }
    let mut out: Vec<usize> = (0..count)
        .map(|j| {
            let f = if count == 1 { 1.0 } else { j as f64 / (count - 1) as f64 };
            ((steps as f64).powf(f).round() as usize).clamp(1, steps)
        })
        .collect();
    out.push(steps);
    out.sort_unstable();
    out.dedup();
    out
}

/// One-bit draws buffered from 64-bit words.
struct Bits {
    word: u64,
    left: u32,
}

impl Bits {
    fn new() -> Self {
        Self { word: 0, left: 0 }
    }

    #[inline]
    fn next(&mut self, rng: &mut ChaCha8Rng) -> bool {
        if self.left == 0 {
            self.word = rng.gen();
            self.left = 64;
        }
        let b = self.word & 1 == 1;
        self.word >>= 1;
        self.left -= 1;
        b
    }
}

#[derive(Default, Clone, Copy)]
struct Moments {
    sx: f64,
    sxx: f64,
    syy: f64,
    on_backbone: f64,
}

/// Runs `n` walkers. `walk(i, rng, marks, visit)` advances walker `i` and
/// calls `visit(k, x, y)` when it reaches the k-th checkpoint; it returns
/// the final (x, y). Moments are accumulated in fixed chunks so the sums do
/// not depend on scheduling.
fn run_ensemble<W>(
    n: usize,
    seed: u64,
    marks: &[usize],
    x0: f64,
    walk: W,
) -> (Vec<f64>, Vec<f64>, Vec<Moments>)
where
    W: Fn(&mut ChaCha8Rng, &mut dyn FnMut(usize, f64, f64)) -> (f64, f64) + Sync,
{
    let chunks: Vec<(Vec<(f64, f64)>, Vec<Moments>)> = (0..n)
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .map(|idx| {
            let mut finals = Vec::with_capacity(idx.len());
            let mut mom = vec![Moments::default(); marks.len()];
            for &i in idx {
                let mut rng = walker_rng(seed, i);
                let mut visit = |k: usize, x: f64, y: f64| {
                    let d = x - x0;
                    let m = &mut mom[k];
                    m.sx += d;
                    m.sxx += d * d;
                    m.syy += y * y;
                    if y == 0.0 {
                        m.on_backbone += 1.0;
                    }
                };
                finals.push(walk(&mut rng, &mut visit));
            }
            (finals, mom)
        })
        .collect();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut total = vec![Moments::default(); marks.len()];
    for (finals, mom) in chunks {
        for (x, y) in finals {
            xs.push(x);
            ys.push(y);
        }
        for (t, m) in total.iter_mut().zip(mom) {
            t.sx += m.sx;
            t.sxx += m.sxx;
            t.syy += m.syy;
            t.on_backbone += m.on_backbone;
        }
    }
    (xs, ys, total)
}

fn observations(marks: &[usize], tau: f64, n: usize, mom: &[Moments]) -> Vec<Observation> {
    let nf = n.max(1) as f64;
    marks
        .iter()
        .zip(mom)
        .map(|(&k, m)| Observation {
            step: k,
            time: k as f64 * tau,
            mean: m.sx / nf,
            msd: m.sxx / nf,
            msd_y: m.syy / nf,
            backbone_fraction: m.on_backbone / nf,
        })
        .collect()
}

/// Nearest-neighbour walk: ±h with probability ½ per step, τ = h².
pub fn run_classical_walk(cfg: &WalkConfig) -> Result<EnsembleResult> {
    if cfg.s.is_some() {
        return Err(FracError::InvalidArgument(
            "the nearest-neighbour walk takes no fractional order".into(),
        ));
    }
    let steps = cfg.steps();
    let marks = checkpoint_steps(steps, cfg.checkpoints);
    let h = cfg.h;
    let k0 = (cfg.start / h).round() as i64;
    let (xs, _, mom) = run_ensemble(cfg.ensemble, cfg.seed, &marks, h * k0 as f64, |rng, visit| {
        let mut bits = Bits::new();
        let mut k = k0;
        let mut next = 0;
        for step in 1..=steps {
            k += if bits.next(rng) { 1 } else { -1 };
            if next < marks.len() && marks[next] == step {
                visit(next, h * k as f64, 0.0);
                next += 1;
            }
        }
        (h * k as f64, 0.0)
    });
    let tau = cfg.time_step();
    Ok(EnsembleResult {
        positions: xs,
        heights: None,
        steps,
        elapsed: steps as f64 * tau,
        generator_time: 0.5 * steps as f64 * tau,
        seed: cfg.seed,
        record: observations(&marks, tau, cfg.ensemble, &mom),
    })
}

/// c = 1/(C·C(1,s)) with C = 2ζ(1+2s): the walk's density follows
/// ∂_t u = −c(−Δ)^s u (regional on a bounded Ω).
pub fn long_jump_time_scale(s: FracOrder) -> Result<f64> {
    let sv = s.get();
    Ok(1.0 / (2.0 * zeta(1.0 + 2.0 * sv) * normalization_constant(1, s)?))
}

/// Transition table of the censored walk on Ω ∩ hℤ.
#[derive(Debug, Clone, PartialEq)]
pub struct CensoredWalkModel {
    pub h: f64,
    pub s: FracOrder,
    /// Lattice indices k with hk ∈ Ω, increasing.
    pub sites: Vec<i64>,
    /// Σ_{k≠0} |k|^{−1−2s}.
    pub normalizer: f64,
}

fn interval_sites(h: f64, domain: Domain) -> Result<Vec<i64>> {
    let (a, b) = match domain {
        Domain::Interval { a, b } => (a, b),
        _ => {
            return Err(FracError::InvalidDomain(
                "the censored walk needs a bounded interval".into(),
            ))
        }
    };
    let lo = (a / h).floor() as i64;
    let hi = (b / h).ceil() as i64;
    let sites: Vec<i64> = (lo..=hi)
        .filter(|&k| {
            let x = h * k as f64;
            x > a && x < b
        })
        .collect();
    if sites.len() < 64 {
        return Err(FracError::InvalidDomain(format!(
            "Ω ∩ hℤ has {} sites; at least 64 are needed",
            sites.len()
        )));
    }
    Ok(sites)
}

impl CensoredWalkModel {
    pub fn new(h: f64, s: FracOrder, domain: Domain) -> Result<Self> {
        Ok(Self {
            h,
            s,
            sites: interval_sites(h, domain)?,
            normalizer: 2.0 * zeta(1.0 + 2.0 * s.get()),
        })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// P_h between sites i and j (zero on the diagonal).
    pub fn jump_probability(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let d = (self.sites[i] - self.sites[j]).unsigned_abs() as f64;
        1.0 / (self.normalizer * d.powf(1.0 + 2.0 * self.s.get()))
    }

    /// c_h: probability of a jump that stays inside Ω.
    pub fn move_probability(&self, i: usize) -> f64 {
        (0..self.len()).map(|j| self.jump_probability(i, j)).sum()
    }

    pub fn stay_probability(&self, i: usize) -> f64 {
        1.0 - self.move_probability(i)
    }

    /// Index of the site closest to x.
    pub fn site_of(&self, x: f64) -> Option<usize> {
        let k = (x / self.h).round() as i64;
        self.sites.binary_search(&k).ok()
    }

    /// Row-stochastic transition matrix including the stay probabilities.
    pub fn transition_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|i| {
                let mut row: Vec<f64> = (0..self.len()).map(|j| self.jump_probability(i, j)).collect();
                row[i] = self.stay_probability(i);
                row
            })
            .collect()
    }
}

/// Censored long-jump walk on a bounded interval. Each step proposes a jump
/// k from the full-lattice law 1/(C|k|^{1+2s}); a proposal landing outside Ω
/// is discarded and the walker stays put.
pub fn run_censored_walk(cfg: &WalkConfig) -> Result<EnsembleResult> {
    let s = cfg
        .s
        .ok_or_else(|| FracError::InvalidArgument("the censored walk needs an order s".into()))?;
    let model = CensoredWalkModel::new(cfg.h, s, cfg.domain)?;
    let (lo, hi) = (model.sites[0], *model.sites.last().unwrap());
    let k0 = (cfg.start / cfg.h).round() as i64;
    if !(lo..=hi).contains(&k0) {
        return Err(FracError::OutsideDomain(cfg.start));
    }
    let law = Zeta::new(1.0 + 2.0 * s.get())
        .map_err(|e| FracError::InvalidArgument(format!("jump law: {e}")))?;
    let steps = cfg.steps();
    let marks = checkpoint_steps(steps, cfg.checkpoints);
    let h = cfg.h;
    let span = (hi - lo) as f64;
    let (xs, _, mom) = run_ensemble(cfg.ensemble, cfg.seed, &marks, h * k0 as f64, |rng, visit| {
        let mut k = k0;
        let mut next = 0;
        for step in 1..=steps {
            let m: f64 = law.sample(rng);
            let up: bool = rng.gen();
            if m <= span {
                let target = if up { k + m as i64 } else { k - m as i64 };
                if (lo..=hi).contains(&target) {
                    k = target;
                }
            }
            if next < marks.len() && marks[next] == step {
                visit(next, h * k as f64, 0.0);
                next += 1;
            }
        }
        (h * k as f64, 0.0)
    });
    let tau = cfg.time_step();
    let elapsed = steps as f64 * tau;
    Ok(EnsembleResult {
        positions: xs,
        heights: None,
        steps,
        elapsed,
        generator_time: long_jump_time_scale(s)? * elapsed,
        seed: cfg.seed,
        record: observations(&marks, tau, cfg.ensemble, &mom),
    })
}

enum Sampler {
    Lattice(Zipf<f64>),
    Pareto(Pareto<f64>),
}

/// Long-jump walk on the whole line.
pub fn run_free_longjump_walk(cfg: &WalkConfig, law: JumpLaw) -> Result<EnsembleResult> {
    let s = cfg
        .s
        .ok_or_else(|| FracError::InvalidArgument("the long-jump walk needs an order s".into()))?;
    if !matches!(cfg.domain, Domain::FullLine) {
        return Err(FracError::InvalidDomain("the free walk lives on the whole line".into()));
    }
    let sv = s.get();
    let a = 1.0 + 2.0 * sv;
    let steps = cfg.steps();
    let tau = cfg.time_step();
    let elapsed = steps as f64 * tau;
    let (sampler, normalizer) = match law {
        JumpLaw::LatticePowerLaw { k_max } => {
            let c = 2.0 * (zeta(a) - zeta_tail(a, k_max.saturating_add(1)));
            // the truncation must sit well beyond the spread of the ensemble
            let spread = (elapsed / (c * normalization_constant(1, s)?)).powf(0.5 / sv);
            if k_max < 2 || cfg.h * (k_max as f64) < 10.0 * spread {
                return Err(FracError::InvalidArgument(format!(
                    "k_max = {k_max} reaches only {:.3e}, below 10× the spread {spread:.3e}",
                    cfg.h * k_max as f64
                )));
            }
            let z = Zipf::new(k_max, a).map_err(|e| FracError::InvalidArgument(format!("{e}")))?;
            (Sampler::Lattice(z), c)
        }
        JumpLaw::ContinuumPareto => {
            let c = 2.0 * zeta(a);
            let r0 = (1.0 / (sv * c)).powf(0.5 / sv);
            let p = Pareto::new(r0, 2.0 * sv).map_err(|e| FracError::InvalidArgument(format!("{e}")))?;
            (Sampler::Pareto(p), c)
        }
    };
    let marks = checkpoint_steps(steps, cfg.checkpoints);
    let h = cfg.h;
    let x0 = cfg.start;
    let (xs, _, mom) = run_ensemble(cfg.ensemble, cfg.seed, &marks, x0, |rng, visit| {
        // lattice positions are kept as integers to avoid drift
        let mut k: i64 = 0;
        let mut r = 0.0;
        let mut next = 0;
        for step in 1..=steps {
            let up: bool = rng.gen();
            match &sampler {
                Sampler::Lattice(z) => {
                    let m = z.sample(rng) as i64;
                    k += if up { m } else { -m };
                }
                Sampler::Pareto(p) => {
                    let m = p.sample(rng);
                    r += if up { m } else { -m };
                }
            }
            if next < marks.len() && marks[next] == step {
                visit(next, x0 + h * (k as f64 + r), 0.0);
                next += 1;
            }
        }
        (x0 + h * (k as f64 + r), 0.0)
    });
    Ok(EnsembleResult {
        positions: xs,
        heights: None,
        steps,
        elapsed,
        generator_time: elapsed / (normalizer * normalization_constant(1, s)?),
        seed: cfg.seed,
        record: observations(&marks, tau, cfg.ensemble, &mom),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombConfig {
    /// Spacing of the backbone and finger lattices.
    pub eps: f64,
    /// Horizontal and vertical move rates; on the backbone a move is
    /// horizontal with probability d1/(d1 + d2).
    pub d1: f64,
    pub d2: f64,
    pub steps: usize,
    pub ensemble: usize,
    pub seed: u64,
    pub checkpoints: usize,
}

impl CombConfig {
    pub fn new(steps: usize, ensemble: usize, seed: u64) -> Self {
        Self {
            eps: 1.0,
            d1: 1.0,
            d2: 1.0,
            steps,
            ensemble,
            seed,
            checkpoints: 24,
        }
    }

    pub fn time_step(&self) -> f64 {
        self.eps * self.eps
    }
}

/// Nearest-neighbour walk on the comb started at the origin. Off the
/// backbone only vertical moves are possible.
pub fn run_comb_walk(cfg: &CombConfig) -> Result<EnsembleResult> {
    if !(cfg.eps > 0.0 && cfg.d1 > 0.0 && cfg.d2 > 0.0) {
        return Err(FracError::InvalidArgument(
            "comb spacing and rates must be positive".into(),
        ));
    }
    let marks = checkpoint_steps(cfg.steps, cfg.checkpoints);
    let eps = cfg.eps;
    let equal = cfg.d1 == cfg.d2;
    let p_horizontal = cfg.d1 / (cfg.d1 + cfg.d2);
    let (xs, ys, mom) = run_ensemble(cfg.ensemble, cfg.seed, &marks, 0.0, |rng, visit| {
        let mut bits = Bits::new();
        let (mut i, mut j) = (0i64, 0i64);
        let mut next = 0;
        for step in 1..=cfg.steps {
            let horizontal = j == 0
                && if equal {
                    bits.next(rng)
                } else {
                    rng.gen::<f64>() < p_horizontal
                };
            let d = if bits.next(rng) { 1 } else { -1 };
            if horizontal {
                i += d;
            } else {
                j += d;
            }
            if next < marks.len() && marks[next] == step {
                visit(next, eps * i as f64, eps * j as f64);
                next += 1;
            }
        }
        (eps * i as f64, eps * j as f64)
    });
    let tau = cfg.time_step();
    let elapsed = cfg.steps as f64 * tau;
    Ok(EnsembleResult {
        positions: xs,
        heights: Some(ys),
        steps: cfg.steps,
        elapsed,
        generator_time: elapsed,
        seed: cfg.seed,
        record: observations(&marks, tau, cfg.ensemble, &mom),
    })
}

/// Equal-width histogram bins on [lo, hi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bins {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Bins {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo < hi) || count < 2 {
            return Err(FracError::InvalidArgument(format!(
                "bins need lo < hi and at least 2 bins, got [{lo}, {hi}] × {count}"
            )));
        }
        Ok(Self { lo, hi, count })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.count as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.width()
    }

    pub fn index(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x < self.hi) {
            return None;
        }
        Some((((x - self.lo) / self.width()) as usize).min(self.count - 1))
    }

    pub fn refined(&self) -> Self {
        Self {
            count: 2 * self.count,
            ..*self
        }
    }
}

/// Normalized histogram of the final positions, sampled at the bin centres.
/// Samples outside the bins are dropped and the rest carry mass one, i.e.
/// Σ values·width = 1.
pub fn empirical_density(res: &EnsembleResult, bins: Bins) -> Result<GridFunction> {
    if res.positions.is_empty() {
        return Err(FracError::EmptyEnsemble);
    }
    let mut counts = vec![0u64; bins.count];
    for &x in &res.positions {
        if let Some(i) = bins.index(x) {
            counts[i] += 1;
        }
    }
    let inside: u64 = counts.iter().sum();
    if inside == 0 {
        return Err(FracError::EmptyEnsemble);
    }
    let w = bins.width();
    let norm = 1.0 / (inside as f64 * w);
    let domain = Domain::interval(bins.center(0), bins.center(bins.count - 1))?;
    GridFunction::new(domain, counts.iter().map(|&c| c as f64 * norm).collect())
}

/// Σ values·spacing: the mass of a histogram returned by
/// [`empirical_density`].
pub fn histogram_mass(density: &GridFunction) -> f64 {
    density.values().iter().sum::<f64>() * density.spacing()
}

/// Exponent of the tail density of |x| beyond r_min, −(1 + α̂) with the
/// Hill estimate α̂ = n / Σ ln(|x_i|/r_min); ≈ −(1+2s) for long jumps.
pub fn tail_exponent(samples: &[f64], r_min: f64) -> Result<f64> {
    if !(r_min > 0.0) {
        return Err(FracError::InvalidArgument("tail radius must be positive".into()));
    }
    let (n, sum) = samples
        .iter()
        .map(|x| x.abs())
        .filter(|&r| r > r_min)
        .fold((0usize, 0.0), |(n, s), r| (n + 1, s + (r / r_min).ln()));
    if n < 10 {
        return Err(FracError::InvalidArgument(format!(
            "only {n} samples beyond r = {r_min}"
        )));
    }
    Ok(-1.0 - n as f64 / sum)
}

/// ⟨x² 1{|x| < R}⟩ for each radius.
pub fn truncated_second_moment(samples: &[f64], radii: &[f64]) -> Vec<f64> {
    let n = samples.len().max(1) as f64;
    radii
        .iter()
        .map(|&r| samples.iter().filter(|x| x.abs() < r).map(|x| x * x).sum::<f64>() / n)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(s: f64) -> FracOrder {
        FracOrder::new(s).unwrap()
    }

    #[test]
    fn classical_walk_variance() {
        let cfg = WalkConfig::classical(0.05, 1.0, 4000, 3).unwrap();
        let res = run_classical_walk(&cfg).unwrap();
        assert_eq!(res.steps, 400);
        let last = res.record.last().unwrap();
        assert!((last.msd - 1.0).abs() < 0.1, "{}", last.msd);
        assert!(last.mean.abs() < 3.0 * (1.0f64 / 4000.0).sqrt());
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = WalkConfig::long_jump(0.1, order(0.5), 1.0, 700, 11).unwrap();
        let a = run_free_longjump_walk(&cfg, JumpLaw::ContinuumPareto).unwrap();
        let b = run_free_longjump_walk(&cfg, JumpLaw::ContinuumPareto).unwrap();
        assert_eq!(a, b);
        let c = run_free_longjump_walk(&WalkConfig { seed: 12, ..cfg }, JumpLaw::ContinuumPareto).unwrap();
        assert_ne!(a.positions, c.positions);
    }

    #[test]
    fn censored_stays_inside() {
        let dom = Domain::interval(-1.0, 1.0).unwrap();
        let cfg = WalkConfig::censored(1.0 / 64.0, order(0.3), dom, 0.5, 500, 5).unwrap();
        let res = run_censored_walk(&cfg).unwrap();
        assert!(res.positions.iter().all(|x| x.abs() < 1.0));
    }

    #[test]
    fn censored_needs_enough_sites() {
        let dom = Domain::interval(-1.0, 1.0).unwrap();
        let cfg = WalkConfig::censored(0.1, order(0.5), dom, 0.5, 10, 5).unwrap();
        assert!(matches!(run_censored_walk(&cfg), Err(FracError::InvalidDomain(_))));
    }

    #[test]
    fn model_rows_are_stochastic() {
        let dom = Domain::interval(-1.0, 1.0).unwrap();
        let m = CensoredWalkModel::new(1.0 / 40.0, order(0.6), dom).unwrap();
        let p = m.transition_matrix();
        for (i, row) in p.iter().enumerate() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for j in 0..i {
                assert_eq!(p[i][j], p[j][i]);
            }
        }
    }

    #[test]
    fn single_walker_histogram_is_one_hot() {
        let res = EnsembleResult {
            positions: vec![0.0],
            heights: None,
            steps: 0,
            elapsed: 0.0,
            generator_time: 0.0,
            seed: 0,
            record: vec![],
        };
        let d = empirical_density(&res, Bins::new(-1.0, 1.0, 10).unwrap()).unwrap();
        assert_eq!(d.values().iter().filter(|v| **v > 0.0).count(), 1);
        assert!((histogram_mass(&d) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn comb_walker_leaves_backbone_only_vertically() {
        let res = run_comb_walk(&CombConfig::new(200, 300, 1)).unwrap();
        let ys = res.heights.as_ref().unwrap();
        // parity: every step changes x + y by ±1
        for (x, y) in res.positions.iter().zip(ys) {
            assert_eq!((x.abs() + y.abs()) as i64 % 2, 0);
        }
        let fr: Vec<f64> = res.record.iter().map(|o| o.backbone_fraction).collect();
        assert!(fr.last().unwrap() < &0.2);
    }

    #[test]
    fn checkpoints_are_sorted_and_end_at_horizon() {
        let c = checkpoint_steps(1000, 10);
        assert_eq!(*c.last().unwrap(), 1000);
        assert!(c.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(c[0], 1);
    }
}
