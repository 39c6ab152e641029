//! Discrete-time martingales on dyadic (Paley–Walsh) filtrations, scalar
//! martingale transforms `dgₙ = aₙ dfₙ`, and Monte Carlo checks of the sharp
//! bound `E‖gₙ‖^p ≤ β^p E‖fₙ‖^p`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::rng;
use crate::space::{beta_hilbert, Exponent, NormedSpace};
use crate::stats::{jackknife_root_ratio, mean_with_se, Estimate};

/// Predictable increment rule: `dfₙ = ξₙ · φₙ(ξ₁, …, ξₙ₋₁)` for `n ≥ 1`.
///
/// `history` holds exactly the driving variables before step `n`, so a rule
/// cannot look ahead.
pub trait IncrementRule: Sync {
    /// Writes `φₙ(history)` into `out` (length = space dimension).
    fn coefficient(&self, step: usize, history: &[f64], out: &mut [f64]);

    /// Writes `f₀` into `out`. Defaults to the origin.
    fn start(&self, out: &mut [f64]) {
        out.fill(0.0);
    }
}

impl<F> IncrementRule for F
where
    F: Fn(usize, &[f64], &mut [f64]) + Sync,
{
    fn coefficient(&self, step: usize, history: &[f64], out: &mut [f64]) {
        self(step, history, out)
    }
}

/// Attaches a starting point to another increment rule.
pub struct WithStart<R> {
    pub rule: R,
    pub start: Vec<f64>,
}

impl<R: IncrementRule> IncrementRule for WithStart<R> {
    fn coefficient(&self, step: usize, history: &[f64], out: &mut [f64]) {
        self.rule.coefficient(step, history, out)
    }

    fn start(&self, out: &mut [f64]) {
        out.copy_from_slice(&self.start);
    }
}

/// Predictable scalar factor `aₙ(ξ₁, …, ξₙ₋₁)`; step 0 sees an empty history.
pub trait FactorRule: Sync {
    fn factor(&self, step: usize, history: &[f64]) -> f64;
}

impl<F> FactorRule for F
where
    F: Fn(usize, &[f64]) -> f64 + Sync,
{
    fn factor(&self, step: usize, history: &[f64]) -> f64 {
        self(step, history)
    }
}

/// How the driving variables `ξₙ` are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Driver {
    /// Independent fair signs (Paley–Walsh filtration).
    Signs,
    /// Independent standard normals (general random walk).
    Gaussian,
}

/// A batch of discrete martingale paths with values in a normed space.
///
/// Step 0 stores `f₀`; steps `1..=depth` store the differences `dfₙ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePathEnsemble {
    space: NormedSpace,
    n_paths: usize,
    depth: usize,
    seed: u64,
    /// `[path][step][coord]`, steps `0..=depth`.
    increments: Vec<f64>,
    /// `[path][step − 1]`, the driving variables `ξ₁…ξ_depth`.
    drivers: Vec<f64>,
}

impl DiscretePathEnsemble {
    pub fn space(&self) -> &NormedSpace {
        &self.space
    }
    pub fn n_paths(&self) -> usize {
        self.n_paths
    }
    pub fn depth(&self) -> usize {
        self.depth
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn dim(&self) -> usize {
        self.space.dim()
    }

    fn stride(&self) -> usize {
        (self.depth + 1) * self.dim()
    }

    /// `dfₙ` on one path (`f₀` for `step = 0`).
    pub fn increment(&self, path: usize, step: usize) -> &[f64] {
        let d = self.dim();
        let off = path * self.stride() + step * d;
        &self.increments[off..off + d]
    }

    /// `ξ₁…ξ_step` on one path.
    pub fn history(&self, path: usize, step: usize) -> &[f64] {
        let off = path * self.depth;
        &self.drivers[off..off + step]
    }

    /// `fₙ = Σ_{j ≤ n} dfⱼ` on one path.
    pub fn value(&self, path: usize, step: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        for j in 0..=step {
            for (a, b) in v.iter_mut().zip(self.increment(path, j)) {
                *a += b;
            }
        }
        v
    }

    fn norms_pow(&self, step: usize, p: f64) -> Vec<f64> {
        (0..self.n_paths)
            .into_par_iter()
            .map(|i| self.space.norm_unchecked(&self.value(i, step)).powf(p))
            .collect()
    }

    /// Componentwise sample mean and standard error of `dfₙ`.
    pub fn increment_mean(&self, step: usize) -> Vec<Estimate> {
        (0..self.dim())
            .map(|c| {
                let xs: Vec<f64> = (0..self.n_paths).map(|i| self.increment(i, step)[c]).collect();
                mean_with_se(&xs)
            })
            .collect()
    }
}

fn generate(
    space: &NormedSpace,
    depth: usize,
    n_paths: usize,
    rule: &dyn IncrementRule,
    seed: u64,
    driver: Driver,
) -> Result<DiscretePathEnsemble> {
    if depth == 0 {
        return Err(Error::InvalidInput("depth must be at least 1".into()));
    }
    let dim = space.dim();
    let stride = (depth + 1) * dim;
    let mut increments = vec![0.0; n_paths * stride];
    let mut drivers = vec![0.0; n_paths * depth];
    increments
        .par_chunks_mut(stride)
        .zip(drivers.par_chunks_mut(depth))
        .enumerate()
        .for_each(|(path, (inc, drv))| {
            let mut r = rng::stream(seed, path as u64);
            rule.start(&mut inc[..dim]);
            for n in 1..=depth {
                let out = &mut inc[n * dim..(n + 1) * dim];
                rule.coefficient(n, &drv[..n - 1], out);
                let xi = match driver {
                    Driver::Signs => {
                        if r.random::<bool>() {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                    Driver::Gaussian => r.sample::<f64, _>(StandardNormal),
                };
                drv[n - 1] = xi;
                out.iter_mut().for_each(|c| *c *= xi);
            }
        });
    let ens = DiscretePathEnsemble { space: space.clone(), n_paths, depth, seed, increments, drivers };
    if ens.increments.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("increment rule produced non-finite values".into()));
    }
    Ok(ens)
}

/// Dyadic martingale `dfₙ = εₙ φₙ(ε₁…εₙ₋₁)` with i.i.d. fair signs.
pub fn gen_paley_walsh(
    space: &NormedSpace,
    depth: usize,
    n_paths: usize,
    rule: &dyn IncrementRule,
    seed: u64,
) -> Result<DiscretePathEnsemble> {
    generate(space, depth, n_paths, rule, seed, Driver::Signs)
}

/// Random-walk martingale `dfₙ = ξₙ φₙ(ξ₁…ξₙ₋₁)` with i.i.d. standard normals.
pub fn gen_random_walk(
    space: &NormedSpace,
    depth: usize,
    n_paths: usize,
    rule: &dyn IncrementRule,
    seed: u64,
) -> Result<DiscretePathEnsemble> {
    generate(space, depth, n_paths, rule, seed, Driver::Gaussian)
}

/// All `2^depth` sign patterns of a Paley–Walsh martingale, equally weighted.
/// Moments computed on it are exact expectations.
pub fn enumerate_paley_walsh(space: &NormedSpace, depth: usize, rule: &dyn IncrementRule) -> Result<DiscretePathEnsemble> {
    if depth == 0 || depth > 20 {
        return Err(Error::InvalidInput("enumeration needs 1 <= depth <= 20".into()));
    }
    let dim = space.dim();
    let n_paths = 1usize << depth;
    let stride = (depth + 1) * dim;
    let mut increments = vec![0.0; n_paths * stride];
    let mut drivers = vec![0.0; n_paths * depth];
    for path in 0..n_paths {
        let drv = &mut drivers[path * depth..(path + 1) * depth];
        for (n, d) in drv.iter_mut().enumerate() {
            *d = if (path >> n) & 1 == 1 { 1.0 } else { -1.0 };
        }
        let inc = &mut increments[path * stride..(path + 1) * stride];
        rule.start(&mut inc[..dim]);
        for n in 1..=depth {
            let out = &mut inc[n * dim..(n + 1) * dim];
            rule.coefficient(n, &drv[..n - 1], out);
            out.iter_mut().for_each(|c| *c *= drv[n - 1]);
        }
    }
    Ok(DiscretePathEnsemble { space: space.clone(), n_paths, depth, seed: 0, increments, drivers })
}

/// Scalar factors `aₙ` per path and step (step 0 multiplies `f₀`).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorProcess {
    n_paths: usize,
    depth: usize,
    values: Vec<f64>,
}

impl FactorProcess {
    /// Validates `|aₙ| ≤ 1`.
    pub fn new(n_paths: usize, depth: usize, values: Vec<f64>) -> Result<Self> {
        check_dim(n_paths * (depth + 1), values.len())?;
        if let Some((i, a)) = values.iter().enumerate().find(|(_, a)| !(a.abs() <= 1.0)) {
            return Err(Error::ContractViolation(format!(
                "factor |a| = {} > 1 at path {}, step {}",
                a.abs(),
                i / (depth + 1),
                i % (depth + 1)
            )));
        }
        Ok(Self { n_paths, depth, values })
    }

    pub fn constant(n_paths: usize, depth: usize, a: f64) -> Result<Self> {
        Self::new(n_paths, depth, vec![a; n_paths * (depth + 1)])
    }

    /// Evaluates a predictable rule on the driving history of `f`.
    pub fn from_rule(f: &DiscretePathEnsemble, rule: &dyn FactorRule) -> Result<Self> {
        let depth = f.depth;
        let values: Vec<f64> = (0..f.n_paths)
            .into_par_iter()
            .flat_map_iter(|i| (0..=depth).map(move |n| rule.factor(n, f.history(i, n.saturating_sub(1)))))
            .collect();
        Self::new(f.n_paths, depth, values)
    }

    pub fn get(&self, path: usize, step: usize) -> f64 {
        self.values[path * (self.depth + 1) + step]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `dgₙ = aₙ dfₙ` pathwise, including `g₀ = a₀ f₀`.
pub fn transform(f: &DiscretePathEnsemble, a: &FactorProcess) -> Result<DiscretePathEnsemble> {
    check_dim(f.n_paths, a.n_paths)?;
    check_dim(f.depth, a.depth)?;
    if let Some(v) = a.values.iter().find(|v| !(v.abs() <= 1.0)) {
        return Err(Error::ContractViolation(format!("factor |a| = {} > 1", v.abs())));
    }
    let dim = f.dim();
    let mut g = f.clone();
    for (k, chunk) in g.increments.chunks_mut(dim).enumerate() {
        let s = a.values[k];
        chunk.iter_mut().for_each(|c| *c *= s);
    }
    Ok(g)
}

/// Recovers `aₙ` from a weakly subordinated pair.
///
/// Uses the first coordinate functional on which `dgₙ` is nonzero; `a = 0`
/// where `dgₙ = 0`. Fails when the pair is not of the form `dg = a·df` with
/// `|a| ≤ 1 + 1e−9`.
pub fn extract_factor(f: &DiscretePathEnsemble, g: &DiscretePathEnsemble) -> Result<FactorProcess> {
    check_dim(f.n_paths, g.n_paths)?;
    check_dim(f.depth, g.depth)?;
    check_dim(f.dim(), g.dim())?;
    let mut values = vec![0.0; f.n_paths * (f.depth + 1)];
    for path in 0..f.n_paths {
        for step in 0..=f.depth {
            let df = f.increment(path, step);
            let dg = g.increment(path, step);
            let Some(m) = dg.iter().position(|v| *v != 0.0) else {
                continue;
            };
            let a = if df[m] == 0.0 { f64::INFINITY } else { dg[m] / df[m] };
            if !(a.abs() <= 1.0 + 1e-9) {
                return Err(Error::SubordinationViolated { path, step, factor: a.abs() });
            }
            let scale = df.iter().chain(dg).fold(0.0f64, |s, v| s.max(v.abs()));
            if df.iter().zip(dg).any(|(x, y)| (y - a * x).abs() > 1e-9 * scale) {
                return Err(Error::ContractViolation(format!(
                    "dg is not a scalar multiple of df at path {path}, step {step}"
                )));
            }
            values[path * (f.depth + 1) + step] = a.clamp(-1.0, 1.0);
        }
    }
    Ok(FactorProcess { n_paths: f.n_paths, depth: f.depth, values })
}

/// Sample mean of `‖fₙ‖^p` with its jackknife standard error.
pub fn lp_moment(ensemble: &DiscretePathEnsemble, step: usize, p: f64) -> Result<Estimate> {
    if step > ensemble.depth {
        return Err(Error::InvalidInput(format!("step {step} exceeds depth {}", ensemble.depth)));
    }
    Ok(mean_with_se(&ensemble.norms_pow(step, p)))
}

/// `(Ê‖gₙ‖^p / Ê‖fₙ‖^p)^{1/p}` with a jackknife standard error.
pub fn subordination_ratio(f: &DiscretePathEnsemble, g: &DiscretePathEnsemble, step: usize, p: f64) -> Result<Estimate> {
    check_dim(f.n_paths, g.n_paths)?;
    if step > f.depth || step > g.depth {
        return Err(Error::InvalidInput(format!("step {step} exceeds depth")));
    }
    let den = f.norms_pow(step, p);
    let num = g.norms_pow(step, p);
    jackknife_root_ratio(&num, &den, p).ok_or_else(|| Error::Degenerate("E|f_n|^p estimate is zero".into()))
}

/// Upper edge of the Monte Carlo acceptance band: `(p* − 1)(1 + 3·relSE)`.
pub fn hilbert_band(p: Exponent, ratio: &Estimate) -> f64 {
    beta_hilbert(p) * (1.0 + 3.0 * ratio.relative_se())
}

/// Randomized scenario: increment rule linear in the sign history and a
/// bounded predictable factor rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomScenario {
    dim: usize,
    depth: usize,
    start: Vec<f64>,
    /// `[step][j][coord]`, `j = 0` is the constant term.
    coeffs: Vec<f64>,
    /// `[step][j]`, `j = 0` is the constant term.
    factor_coeffs: Vec<f64>,
    sign_valued: bool,
}

impl RandomScenario {
    /// `sign_valued` produces factors in `{−1, +1}` (the classical Burkholder
    /// transform); otherwise factors are `tanh` of a linear form.
    pub fn new(dim: usize, depth: usize, seed: u64, sign_valued: bool) -> Self {
        let mut r = rng::stream(rng::mix(seed, 0x5CE4), 0);
        let start = (0..dim).map(|_| r.random_range(-1.0..1.0)).collect();
        let coeffs = (0..depth * (depth + 1) * dim)
            .map(|_| r.random_range(-1.0..1.0) * if r.random::<f64>() < 0.4 { 0.0 } else { 1.0 })
            .collect();
        let factor_coeffs = (0..depth * (depth + 1)).map(|_| r.random_range(-2.0..2.0)).collect();
        Self { dim, depth, start, coeffs, factor_coeffs, sign_valued }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }
}

impl IncrementRule for RandomScenario {
    fn coefficient(&self, step: usize, history: &[f64], out: &mut [f64]) {
        let d = self.dim;
        let base = (step - 1) * (self.depth + 1) * d;
        out.copy_from_slice(&self.coeffs[base..base + d]);
        for (j, h) in history.iter().enumerate() {
            let off = base + (j + 1) * d;
            for (o, c) in out.iter_mut().zip(&self.coeffs[off..off + d]) {
                *o += c * h;
            }
        }
        // keep increments from vanishing identically
        out[step % d] += 0.25;
    }

    fn start(&self, out: &mut [f64]) {
        out.copy_from_slice(&self.start);
    }
}

impl FactorRule for RandomScenario {
    fn factor(&self, step: usize, history: &[f64]) -> f64 {
        let base = step.saturating_sub(1) * (self.depth + 1);
        let mut s = self.factor_coeffs[base];
        for (j, h) in history.iter().enumerate() {
            s += self.factor_coeffs[base + j + 1] * h;
        }
        if self.sign_valued {
            if s >= 0.0 {
                1.0
            } else {
                -1.0
            }
        } else {
            s.tanh()
        }
    }
}

/// Dyadic strategy stored as a complete binary tree: node `(n, h)` for step
/// `n ≥ 1` and sign prefix `h ∈ {±1}^{n−1}` carries the increment magnitude,
/// its coordinate axis and a sign-valued factor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeStrategy {
    dim: usize,
    depth: usize,
    start_factor: f64,
    magnitude: Vec<f64>,
    axis: Vec<usize>,
    factor: Vec<f64>,
}

impl TreeStrategy {
    fn node_index(step: usize, history: &[f64]) -> usize {
        let mut idx = (1usize << (step - 1)) - 1;
        for (j, h) in history.iter().enumerate() {
            if *h > 0.0 {
                idx += 1 << j;
            }
        }
        idx
    }

    fn n_nodes(depth: usize) -> usize {
        (1usize << depth) - 1
    }

    fn random<R: Rng>(r: &mut R, dim: usize, depth: usize) -> Self {
        let n = Self::n_nodes(depth);
        Self {
            dim,
            depth,
            start_factor: 1.0,
            magnitude: (0..n).map(|_| 1.0).collect(),
            axis: (0..n).map(|_| r.random_range(0..dim)).collect(),
            factor: (0..n).map(|_| if r.random::<bool>() { 1.0 } else { -1.0 }).collect(),
        }
    }

    /// Exact `(E‖g_N‖^p / E‖f_N‖^p)^{1/p}` by enumerating every sign path.
    pub fn exact_ratio(&self, p: f64) -> f64 {
        let mut f = vec![0.0; self.dim];
        let mut g = vec![0.0; self.dim];
        f[0] = 1.0;
        g[0] = self.start_factor;
        let (mut sf, mut sg) = (0.0, 0.0);
        self.walk(1, 0, &mut f, &mut g, p, &mut sf, &mut sg);
        if sf == 0.0 {
            return 0.0;
        }
        (sg / sf).powf(1.0 / p)
    }

    #[allow(clippy::too_many_arguments)]
    fn walk(&self, step: usize, prefix: usize, f: &mut [f64], g: &mut [f64], p: f64, sf: &mut f64, sg: &mut f64) {
        if step > self.depth {
            let nf: f64 = f.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ng: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            *sf += nf.powf(p);
            *sg += ng.powf(p);
            return;
        }
        let node = (1usize << (step - 1)) - 1 + prefix;
        let (m, ax, a) = (self.magnitude[node], self.axis[node], self.factor[node]);
        for (bit, s) in [(0usize, -1.0), (1usize, 1.0)] {
            f[ax] += s * m;
            g[ax] += a * s * m;
            self.walk(step + 1, prefix | (bit << (step - 1)), f, g, p, sf, sg);
            f[ax] -= s * m;
            g[ax] -= a * s * m;
        }
    }
}

impl IncrementRule for TreeStrategy {
    fn coefficient(&self, step: usize, history: &[f64], out: &mut [f64]) {
        let node = Self::node_index(step, history);
        out.fill(0.0);
        out[self.axis[node]] = self.magnitude[node];
    }

    fn start(&self, out: &mut [f64]) {
        out.fill(0.0);
        out[0] = 1.0;
    }
}

impl FactorRule for TreeStrategy {
    fn factor(&self, step: usize, history: &[f64]) -> f64 {
        if step == 0 {
            self.start_factor
        } else {
            self.factor[Self::node_index(step, history)]
        }
    }
}

/// Result of [`adversarial_search`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdversarialResult {
    /// Exact ratio of the witness (enumeration over all sign paths, so the
    /// standard error is zero).
    pub best_ratio: Estimate,
    pub witness: TreeStrategy,
    pub evaluations: u64,
    pub improvements: u64,
}

/// Coordinate ascent over dyadic strategies (increment magnitudes, axes and
/// sign-valued predictable factors) maximizing the exact subordination ratio
/// at the final step. Each evaluation enumerates all `2^depth` paths.
///
/// The proposal sequence depends only on `seed`, so the returned ratio is
/// nondecreasing in `budget`.
pub fn adversarial_search(space: &NormedSpace, p: Exponent, depth: usize, budget: u64, seed: u64) -> Result<AdversarialResult> {
    if !space.is_hilbert() {
        return Err(Error::UnsupportedSpace("adversarial search needs a Euclidean space".into()));
    }
    if depth == 0 || depth > 16 {
        return Err(Error::InvalidInput("adversarial search needs 1 <= depth <= 16".into()));
    }
    const SCALES: [f64; 6] = [0.0, 0.5, 0.8, 1.25, 2.0, 4.0];
    let dim = space.dim();
    let mut r = rng::stream(seed, 0);
    let mut best = TreeStrategy::random(&mut r, dim, depth);
    let mut best_ratio = best.exact_ratio(p.p());
    let n = TreeStrategy::n_nodes(depth);
    let mut evaluations = 1u64;
    let mut improvements = 0u64;
    while evaluations < budget {
        let mut cand = best.clone();
        match r.random_range(0..4u8) {
            0 => {
                let k = r.random_range(0..n);
                cand.factor[k] = -cand.factor[k];
            }
            1 | 2 => {
                let k = r.random_range(0..n);
                let s = SCALES[r.random_range(0..SCALES.len())];
                cand.magnitude[k] = if cand.magnitude[k] == 0.0 { s } else { cand.magnitude[k] * s };
            }
            _ => {
                if dim > 1 {
                    let k = r.random_range(0..n);
                    cand.axis[k] = r.random_range(0..dim);
                } else {
                    cand.start_factor = -cand.start_factor;
                }
            }
        }
        let ratio = cand.exact_ratio(p.p());
        evaluations += 1;
        if ratio > best_ratio {
            best_ratio = ratio;
            best = cand;
            improvements += 1;
        }
    }
    Ok(AdversarialResult { best_ratio: Estimate::exact(best_ratio), witness: best, evaluations, improvements })
}
