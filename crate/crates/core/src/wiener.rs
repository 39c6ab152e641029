//! Brownian stochastic integrals of step integrands and Monte Carlo checks of
//! the transform bounds for orthogonal pairs, self-adjoint transforms and
//! one-dimensional adapted multipliers.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::rng;
use crate::space::{beta_hilbert, Exponent};
use crate::stats::{jackknife_root_ratio, mean_with_se, Estimate};

/// Discrete Brownian history visible to an adapted rule: the increments of
/// every grid step strictly before the current interval's left endpoint.
#[derive(Debug, Clone, Copy)]
pub struct BrownianPast<'a> {
    increments: &'a [f64],
    h: usize,
    dt: f64,
}

impl<'a> BrownianPast<'a> {
    pub fn steps(&self) -> usize {
        self.increments.len() / self.h
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn coordinates(&self) -> usize {
        self.h
    }

    pub fn increment(&self, step: usize) -> &'a [f64] {
        &self.increments[step * self.h..(step + 1) * self.h]
    }

    /// `W` at the left endpoint.
    pub fn position(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.h];
        for c in self.increments.chunks_exact(self.h) {
            for (a, b) in w.iter_mut().zip(c) {
                *a += b;
            }
        }
        w
    }
}

/// Rule producing the `k×h` value on interval `j` from the past.
pub type AdaptedRule = dyn Fn(usize, &BrownianPast<'_>) -> DMatrix<f64> + Send + Sync;

#[derive(Clone)]
enum Values {
    Fixed(Vec<DMatrix<f64>>),
    Adapted(Arc<AdaptedRule>),
}

/// Elementary progressive integrand `Φ = Σⱼ 1_{(tⱼ₋₁, tⱼ]} Φⱼ` with
/// `Φⱼ: ℝʰ → ℝᵏ`.
#[derive(Clone)]
pub struct StepIntegrand {
    breakpoints: Vec<f64>,
    k: usize,
    h: usize,
    values: Values,
}

impl fmt::Debug for StepIntegrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StepIntegrand")
            .field("breakpoints", &self.breakpoints)
            .field("k", &self.k)
            .field("h", &self.h)
            .field("adapted", &self.is_adapted())
            .finish()
    }
}

fn check_breakpoints(b: &[f64]) -> Result<()> {
    if b.len() < 2 || b[0] != 0.0 {
        return Err(Error::InvalidInput("breakpoints must start at 0 and span at least one interval".into()));
    }
    if b.windows(2).any(|w| !(w[0] < w[1])) || b.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidInput("breakpoints must be finite and strictly increasing".into()));
    }
    Ok(())
}

impl StepIntegrand {
    /// Deterministic values, one `k×h` matrix per interval.
    pub fn fixed(breakpoints: Vec<f64>, values: Vec<DMatrix<f64>>) -> Result<Self> {
        check_breakpoints(&breakpoints)?;
        check_dim(breakpoints.len() - 1, values.len())?;
        let (k, h) = values[0].shape();
        if k == 0 || h == 0 {
            return Err(Error::InvalidInput("integrand values must be nonempty matrices".into()));
        }
        for v in &values {
            if v.shape() != (k, h) {
                return Err(Error::DimensionMismatch { expected: k * h, got: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput("integrand value is not finite".into()));
            }
        }
        Ok(Self { breakpoints, k, h, values: Values::Fixed(values) })
    }

    /// `Φ ≡ value` on `(0, horizon]`.
    pub fn constant(horizon: f64, value: DMatrix<f64>) -> Result<Self> {
        Self::fixed(vec![0.0, horizon], vec![value])
    }

    /// Values chosen on each interval by `rule` from the Brownian history up
    /// to the interval's left endpoint. The rule must return `k×h` matrices.
    pub fn adapted(breakpoints: Vec<f64>, k: usize, h: usize, rule: Arc<AdaptedRule>) -> Result<Self> {
        check_breakpoints(&breakpoints)?;
        if k == 0 || h == 0 {
            return Err(Error::InvalidInput("integrand values must be nonempty matrices".into()));
        }
        Ok(Self { breakpoints, k, h, values: Values::Adapted(rule) })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn intervals(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// `(k, h)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.k, self.h)
    }

    pub fn is_adapted(&self) -> bool {
        matches!(self.values, Values::Adapted(_))
    }

    fn value(&self, j: usize, past: &BrownianPast<'_>) -> DMatrix<f64> {
        match &self.values {
            Values::Fixed(v) => v[j].clone(),
            Values::Adapted(rule) => rule(j, past),
        }
    }

    /// `Φ A` for an `h×h'` matrix `A`.
    pub fn right_mul(&self, a: &DMatrix<f64>) -> Result<Self> {
        check_dim(self.h, a.nrows())?;
        let values = match &self.values {
            Values::Fixed(v) => Values::Fixed(v.iter().map(|m| m * a).collect()),
            Values::Adapted(rule) => {
                let (rule, a) = (rule.clone(), a.clone());
                Values::Adapted(Arc::new(move |j, past| rule(j, past) * &a))
            }
        };
        Ok(Self { breakpoints: self.breakpoints.clone(), k: self.k, h: a.ncols(), values })
    }

    /// `[Φ₁ | Φ₂]` on shared breakpoints; both rules see the joint history.
    pub fn hcat(a: &Self, b: &Self) -> Result<Self> {
        if a.breakpoints != b.breakpoints {
            return Err(Error::InvalidInput("integrands must share breakpoints".into()));
        }
        check_dim(a.k, b.k)?;
        let (k, ha, hb) = (a.k, a.h, b.h);
        let values = match (&a.values, &b.values) {
            (Values::Fixed(x), Values::Fixed(y)) => Values::Fixed(
                x.iter()
                    .zip(y)
                    .map(|(p, q)| {
                        let mut m = DMatrix::zeros(k, ha + hb);
                        m.columns_mut(0, ha).copy_from(p);
                        m.columns_mut(ha, hb).copy_from(q);
                        m
                    })
                    .collect(),
            ),
            _ => {
                let (a, b) = (a.clone(), b.clone());
                Values::Adapted(Arc::new(move |j, past| {
                    let mut m = DMatrix::zeros(k, ha + hb);
                    m.columns_mut(0, ha).copy_from(&a.value(j, past));
                    m.columns_mut(ha, hb).copy_from(&b.value(j, past));
                    m
                }))
            }
        };
        Ok(Self { breakpoints: a.breakpoints.clone(), k, h: ha + hb, values })
    }

    pub fn neg(&self) -> Self {
        let values = match &self.values {
            Values::Fixed(v) => Values::Fixed(v.iter().map(|m| -m).collect()),
            Values::Adapted(rule) => {
                let rule = rule.clone();
                Values::Adapted(Arc::new(move |j, past| -rule(j, past)))
            }
        };
        Self { values, ..self.clone() }
    }

    /// Breakpoint indices on a grid of step `dt`, rounded to the nearest node.
    pub fn snapped(&self, dt: f64, steps: usize) -> Result<Vec<usize>> {
        let idx: Vec<usize> = self.breakpoints.iter().map(|t| (t / dt).round() as usize).collect();
        if idx.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!("breakpoints collapse on a grid of step {dt}")));
        }
        if *idx.last().expect("nonempty") > steps {
            return Err(Error::InvalidInput(format!(
                "integrand extends to {} beyond the horizon {}",
                self.breakpoints.last().expect("nonempty"),
                dt * steps as f64
            )));
        }
        Ok(idx)
    }
}

/// Paths of an `h`-dimensional standard Brownian motion on `[0, horizon]`,
/// simulated on `steps` equal cells. Path `i` draws from stream `i` of `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WienerEnsemble {
    pub n_paths: usize,
    pub horizon: f64,
    pub steps: usize,
    pub h: usize,
    pub seed: u64,
}

impl WienerEnsemble {
    pub fn new(n_paths: usize, horizon: f64, steps: usize, h: usize, seed: u64) -> Result<Self> {
        if n_paths == 0 || steps == 0 || h == 0 || !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidInput(format!(
                "ensemble needs positive paths, steps, coordinates and horizon (got {n_paths}, {steps}, {h}, {horizon})"
            )));
        }
        Ok(Self { n_paths, horizon, steps, h, seed })
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Gaussian increments of path `i`, step-major.
    pub fn increments(&self, i: usize) -> Vec<f64> {
        let mut r = rng::stream(self.seed, i as u64);
        let sd = self.dt().sqrt();
        (0..self.steps * self.h).map(|_| sd * r.sample::<f64, _>(StandardNormal)).collect()
    }

    fn map_paths<T: Send>(&self, f: impl Fn(&[f64]) -> Result<T> + Sync) -> Result<Vec<T>> {
        (0..self.n_paths).into_par_iter().map(|i| f(&self.increments(i))).collect()
    }
}

struct Snapped<'a> {
    phi: &'a StepIntegrand,
    idx: Vec<usize>,
}

impl<'a> Snapped<'a> {
    fn new(phi: &'a StepIntegrand, ens: &WienerEnsemble) -> Result<Self> {
        check_dim(ens.h, phi.h)?;
        Ok(Self { idx: phi.snapped(ens.dt(), ens.steps)?, phi })
    }

    /// Left-point sum `Σⱼ Φⱼ (W(tⱼ) − W(tⱼ₋₁))` along one path; `check` sees
    /// each interval value before it is used.
    fn integrate(&self, inc: &[f64], dt: f64, check: &dyn Fn(&DMatrix<f64>) -> Result<()>) -> Result<Vec<f64>> {
        let h = self.phi.h;
        let mut out = DVector::zeros(self.phi.k);
        for j in 0..self.phi.intervals() {
            let (a, b) = (self.idx[j], self.idx[j + 1]);
            let past = BrownianPast { increments: &inc[..a * h], h, dt };
            let v = self.phi.value(j, &past);
            if v.shape() != (self.phi.k, h) {
                return Err(Error::DimensionMismatch { expected: self.phi.k * h, got: v.len() });
            }
            check(&v)?;
            let mut dw = DVector::zeros(h);
            for c in inc[a * h..b * h].chunks_exact(h) {
                for (x, y) in dw.iter_mut().zip(c) {
                    *x += y;
                }
            }
            out += v * dw;
        }
        Ok(out.as_slice().to_vec())
    }
}

fn no_check(_: &DMatrix<f64>) -> Result<()> {
    Ok(())
}

/// Samples of `(Φ·W)_T` in `ℝᵏ`, one per path.
pub fn stochastic_integral(phi: &StepIntegrand, ens: &WienerEnsemble) -> Result<Vec<Vec<f64>>> {
    let s = Snapped::new(phi, ens)?;
    let dt = ens.dt();
    ens.map_paths(|inc| s.integrate(inc, dt, &no_check))
}

/// Outcome of an Itô isometry check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsometryReport {
    pub empirical: Estimate,
    /// `Σⱼ (tⱼ − tⱼ₋₁) ‖Φⱼ‖²_F` on the snapped breakpoints.
    pub exact: f64,
    pub pass: bool,
}

/// `Ê‖(Φ·W)_T‖²` against its exact value for deterministic `Φ`.
pub fn ito_isometry_check(phi: &StepIntegrand, ens: &WienerEnsemble) -> Result<IsometryReport> {
    let Values::Fixed(values) = &phi.values else {
        return Err(Error::InvalidInput("isometry oracle needs a deterministic integrand".into()));
    };
    let idx = phi.snapped(ens.dt(), ens.steps)?;
    let exact: f64 =
        values.iter().enumerate().map(|(j, v)| (idx[j + 1] - idx[j]) as f64 * ens.dt() * v.norm_squared()).sum();
    let sq: Vec<f64> = stochastic_integral(phi, ens)?.iter().map(|v| v.iter().map(|x| x * x).sum()).collect();
    let empirical = mean_with_se(&sq);
    let pass = (empirical.value - exact).abs() <= 3.0 * empirical.std_error + 1e-12 * exact.abs();
    Ok(IsometryReport { empirical, exact, pass })
}

/// Outcome of a transform check: `(Ê‖N‖^p / Ê‖M‖^p)^{1/p}` against
/// `constant·(1 + 3·relSE)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformReport {
    pub p: f64,
    pub ratio: Estimate,
    pub constant: f64,
    pub bound: f64,
    pub pass: bool,
}

fn euclid_p(v: &[f64], p: f64) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt().powf(p)
}

fn ratio_report(pairs: &[(Vec<f64>, Vec<f64>)], p: Exponent, constant: f64) -> Result<TransformReport> {
    let num: Vec<f64> = pairs.iter().map(|(_, n)| euclid_p(n, p.p())).collect();
    let den: Vec<f64> = pairs.iter().map(|(m, _)| euclid_p(m, p.p())).collect();
    let ratio = jackknife_root_ratio(&num, &den, p.p()).ok_or_else(|| Error::Degenerate("E|M_T|^p estimate is zero".into()))?;
    let bound = constant * (1.0 + 3.0 * ratio.relative_se());
    Ok(TransformReport { p: p.p(), ratio, constant, bound, pass: ratio.value <= bound })
}

fn integrate_pair(m: &StepIntegrand, n: &StepIntegrand, ens: &WienerEnsemble) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let (sm, sn) = (Snapped::new(m, ens)?, Snapped::new(n, ens)?);
    let dt = ens.dt();
    ens.map_paths(|inc| Ok((sm.integrate(inc, dt, &no_check)?, sn.integrate(inc, dt, &no_check)?)))
}

/// `M = f₁·B₁ + f₂·B₂` against `N = f₂·B₁ − f₁·B₂` with constant `(p*−1)²`.
/// `f₁, f₂` are `k×1`; the ensemble must have two coordinates.
pub fn orthogonal_pair_check(f1: &StepIntegrand, f2: &StepIntegrand, p: Exponent, ens: &WienerEnsemble) -> Result<TransformReport> {
    check_dim(1, f1.h)?;
    check_dim(1, f2.h)?;
    check_dim(2, ens.h)?;
    let m = StepIntegrand::hcat(f1, f2)?;
    let n = StepIntegrand::hcat(f2, &f1.neg())?;
    let beta = beta_hilbert(p);
    ratio_report(&integrate_pair(&m, &n, ens)?, p, beta * beta)
}

/// `‖A‖₂` of a symmetric matrix by eigendecomposition.
pub fn spectral_norm_symmetric(a: &DMatrix<f64>) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::InvalidInput(format!("matrix is {}x{}, not square", a.nrows(), a.ncols())));
    }
    let asym = (a - a.transpose()).amax();
    if asym > 1e-12 {
        return Err(Error::InvalidInput(format!("matrix is not symmetric: max |A - A^T| = {asym:e}")));
    }
    let eig = SymmetricEigen::new(a.clone());
    Ok(eig.eigenvalues.amax())
}

/// `(ΦA)·W` against `Φ·W` for symmetric `A`, with constant `(p*−1)‖A‖₂`.
pub fn selfadjoint_transform_check(phi: &StepIntegrand, a: &DMatrix<f64>, p: Exponent, ens: &WienerEnsemble) -> Result<TransformReport> {
    let norm = spectral_norm_symmetric(a)?;
    check_dim(phi.h, a.nrows())?;
    let transformed = phi.right_mul(a)?;
    ratio_report(&integrate_pair(phi, &transformed, ens)?, p, beta_hilbert(p) * norm)
}

/// Adapted scalar multiplier `a` on interval `j`.
pub type ScalarRule = dyn Fn(usize, &BrownianPast<'_>) -> f64 + Send + Sync;

/// `(aΦ)·W` against `Φ·W` for one driving coordinate and adapted `|a| ≤ 1`,
/// with constant `p*−1`. A factor outside `[−1, 1]` aborts the check.
pub fn onedim_transform_check(phi: &StepIntegrand, a: Arc<ScalarRule>, p: Exponent, ens: &WienerEnsemble) -> Result<TransformReport> {
    check_dim(1, ens.h)?;
    let rule_a = a.clone();
    let weighted = StepIntegrand::adapted(
        phi.breakpoints.clone(),
        phi.k,
        phi.h,
        Arc::new({
            let phi = phi.clone();
            move |j, past| phi.value(j, past) * rule_a(j, past)
        }),
    )?;
    let (sm, sn) = (Snapped::new(phi, ens)?, Snapped::new(&weighted, ens)?);
    let dt = ens.dt();
    let pairs = ens.map_paths(|inc| {
        for j in 0..phi.intervals() {
            let past = BrownianPast { increments: &inc[..sm.idx[j] * ens.h], h: ens.h, dt };
            let v = a(j, &past);
            if !(v.abs() <= 1.0) {
                return Err(Error::ContractViolation(format!("adapted factor |a| = {} > 1 on interval {j}", v.abs())));
            }
        }
        Ok((sm.integrate(inc, dt, &no_check)?, sn.integrate(inc, dt, &no_check)?))
    })?;
    ratio_report(&pairs, p, beta_hilbert(p))
}

/// Report of the antisymmetric experiment. No bound is asserted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AntisymmetricReport {
    pub p: f64,
    pub ratio: Estimate,
    pub spectral_norm: f64,
    /// `(p*−1)‖A‖₂`, shown for comparison only.
    pub reference: f64,
}

/// Measures `(ΦA)·W` against `Φ·W` for antisymmetric `A`.
pub fn antisymmetric_transform_experiment(
    phi: &StepIntegrand,
    a: &DMatrix<f64>,
    p: Exponent,
    ens: &WienerEnsemble,
) -> Result<AntisymmetricReport> {
    if !a.is_square() || (a + a.transpose()).amax() > 1e-12 {
        return Err(Error::InvalidInput("matrix is not antisymmetric".into()));
    }
    check_dim(phi.h, a.nrows())?;
    // ‖A‖₂² is the top eigenvalue of the symmetric AᵀA
    let spectral_norm = SymmetricEigen::new(a.transpose() * a).eigenvalues.amax().sqrt();
    let transformed = phi.right_mul(a)?;
    let rep = ratio_report(&integrate_pair(phi, &transformed, ens)?, p, 1.0)?;
    Ok(AntisymmetricReport { p: p.p(), ratio: rep.ratio, spectral_norm, reference: beta_hilbert(p) * spectral_norm })
}

/// Random step integrand on `intervals` equal pieces of `[0, horizon]`.
/// Adapted variants scale each value by `1 + ½·tanh(⟨W, g⟩)` at the left
/// endpoint, and the whole value is a deterministic matrix otherwise.
pub fn random_integrand<R: Rng>(rng: &mut R, k: usize, h: usize, intervals: usize, horizon: f64, adapted: bool) -> Result<StepIntegrand> {
    let breakpoints: Vec<f64> = (0..=intervals).map(|j| horizon * j as f64 / intervals as f64).collect();
    let values: Vec<DMatrix<f64>> =
        (0..intervals).map(|_| DMatrix::from_fn(k, h, |_, _| rng.sample::<f64, _>(StandardNormal))).collect();
    if !adapted {
        return StepIntegrand::fixed(breakpoints, values);
    }
    let gain: Vec<f64> = (0..h).map(|_| rng.random_range(-2.0..2.0)).collect();
    StepIntegrand::adapted(
        breakpoints,
        k,
        h,
        Arc::new(move |j, past| {
            let w = past.position();
            let s: f64 = w.iter().zip(&gain).map(|(a, b)| a * b).sum();
            &values[j] * (1.0 + 0.5 * s.tanh())
        }),
    )
}

/// Random symmetric `h×h` matrix with standard Gaussian entries above the
/// diagonal.
pub fn random_symmetric<R: Rng>(rng: &mut R, h: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(h, h, |_, _| rng.sample::<f64, _>(StandardNormal));
    (&m + m.transpose()) * 0.5
}

/// Adapted sign-like factor `a = tanh(c·W)` or `sign(W)` at the left endpoint.
pub fn random_factor<R: Rng>(rng: &mut R, sign_valued: bool) -> Arc<ScalarRule> {
    let c = rng.random_range(0.5..4.0);
    let flip = rng.random_range(-0.5..0.5);
    Arc::new(move |_, past| {
        let w: f64 = past.position().iter().sum::<f64>() + flip;
        if sign_valued {
            if w >= 0.0 { 1.0 } else { -1.0 }
        } else {
            (c * w).tanh()
        }
    })
}
