//! Compound-Poisson parabolic martingales: the space-time extension `G` of
//! boundary data along a pure-jump Lévy path, its modulated companion `F`,
//! and the multiplier symbols `m_s → m` they induce.

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Exp;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::fourier::{GridFunction, Spectrum};
use crate::rng;
use crate::space::{dot, Exponent};
use crate::stats::{jackknife_root_ratio, mean_with_se, pairwise_sum, Estimate};

/// Finitely supported Lévy measure `ν = Σ wᵢ δ_{zᵢ}` on `ℝ^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyMeasureAtomic {
    dim: usize,
    atoms: Vec<(Vec<f64>, f64)>,
    symmetric: bool,
}

impl LevyMeasureAtomic {
    /// Validates positive weights, nonzero atoms and, when `symmetric` is set,
    /// closure under `z ↦ −z` with equal weights.
    pub fn new(atoms: Vec<(Vec<f64>, f64)>, symmetric: bool) -> Result<Self> {
        let dim = atoms.first().map(|a| a.0.len()).ok_or_else(|| Error::InvalidInput("Levy measure has no atoms".into()))?;
        for (i, (z, w)) in atoms.iter().enumerate() {
            check_dim(dim, z.len())?;
            if !(*w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidInput(format!("atom {i} has non-positive weight {w}")));
            }
            if z.iter().all(|v| *v == 0.0) || z.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("atom {i} is at the origin or not finite")));
            }
        }
        let m = Self { dim, atoms, symmetric };
        if symmetric {
            for (i, (z, w)) in m.atoms.iter().enumerate() {
                if m.mirror(i).is_none_or(|j| m.atoms[j].1 != *w) {
                    return Err(Error::InvalidInput(format!("atom {i} at {z:?} has no mirror image of equal weight")));
                }
            }
        }
        Ok(m)
    }

    /// `ν = Σ wᵢ (δ_{zᵢ} + δ_{−zᵢ})`.
    pub fn symmetrized(half: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let mut atoms = Vec::with_capacity(2 * half.len());
        for (z, w) in half {
            let minus = z.iter().map(|v| -v).collect();
            atoms.push((z, w));
            atoms.push((minus, w));
        }
        Self::new(atoms, true)
    }

    fn mirror(&self, i: usize) -> Option<usize> {
        let z = &self.atoms[i].0;
        self.atoms.iter().position(|(y, _)| y.iter().zip(z).all(|(a, b)| *a == -*b))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[(Vec<f64>, f64)] {
        &self.atoms
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `|ν| = Σ wᵢ`.
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// True when `φ(zᵢ) = φ(−zᵢ)` for every atom.
    pub fn is_symmetric_modulator(&self, phi: &[f64]) -> bool {
        (0..self.atoms.len()).all(|i| self.mirror(i).is_some_and(|j| phi[i] == phi[j]))
    }
}

fn check_modulator(nu: &LevyMeasureAtomic, phi: &[f64]) -> Result<()> {
    check_dim(nu.atoms.len(), phi.len())?;
    if let Some(v) = phi.iter().find(|v| !(v.abs() <= 1.0)) {
        return Err(Error::ContractViolation(format!("modulator |phi| = {} > 1", v.abs())));
    }
    Ok(())
}

/// Signal times `S₁ < S₂ < …` in `(s, u]` and the atom index of each mark.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpPath {
    pub window: (f64, f64),
    pub times: Vec<f64>,
    pub marks: Vec<usize>,
}

impl JumpPath {
    /// `X_{s,t} = Σ_{s<Sᵢ≤t} Zᵢ` at each requested time.
    pub fn sample(&self, nu: &LevyMeasureAtomic, times: &[f64]) -> Vec<Vec<f64>> {
        let mut x = vec![0.0; nu.dim];
        let mut j = 0;
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            while j < self.times.len() && self.times[j] <= t {
                for (a, b) in x.iter_mut().zip(&nu.atoms[self.marks[j]].0) {
                    *a += b;
                }
                j += 1;
            }
            out.push(x.clone());
        }
        out
    }

    /// `X_{s,u}`.
    pub fn endpoint(&self, nu: &LevyMeasureAtomic) -> Vec<f64> {
        self.sample(nu, &[self.window.1]).pop().expect("one sample")
    }
}

/// Compound-Poisson path on `(s, u]`: Exponential(|ν|) inter-arrival times and
/// i.i.d. marks with law `ν/|ν|`.
pub fn simulate_jumps<R: Rng>(nu: &LevyMeasureAtomic, s: f64, u: f64, rng: &mut R) -> Result<JumpPath> {
    if !(s < u) {
        return Err(Error::InvalidInput(format!("empty window ({s}, {u}]")));
    }
    let rate = nu.total_mass();
    let exp = Exp::new(rate).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let marks_law = WeightedIndex::new(nu.atoms.iter().map(|a| a.1)).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut t = s;
    let mut times = Vec::new();
    let mut marks = Vec::new();
    loop {
        t += exp.sample(rng);
        if t > u {
            break;
        }
        times.push(t);
        marks.push(marks_law.sample(rng));
    }
    Ok(JumpPath { window: (s, u), times, marks })
}

/// Seeded form of [`simulate_jumps`].
pub fn simulate_jumps_seeded(nu: &LevyMeasureAtomic, s: f64, u: f64, seed: u64) -> Result<JumpPath> {
    simulate_jumps(nu, s, u, &mut rng::stream(seed, 0))
}

/// `Ψ(ξ) = Σ wᵢ(cos ξ·zᵢ − 1)` for symmetric `ν`.
pub fn psi(nu: &LevyMeasureAtomic, xi: &[f64]) -> Result<f64> {
    if !nu.symmetric {
        return Err(Error::InvalidInput("the real form of the exponent needs a symmetric measure".into()));
    }
    check_dim(nu.dim, xi.len())?;
    Ok(psi_unchecked(nu, xi))
}

fn psi_unchecked(nu: &LevyMeasureAtomic, xi: &[f64]) -> f64 {
    nu.atoms.iter().map(|(z, w)| w * (dot(xi, z).cos() - 1.0)).sum()
}

/// `∫(e^{iξ·z} − 1)φ(z) ν(dz)`.
fn modulated_exponent(nu: &LevyMeasureAtomic, phi: &[f64], xi: &[f64]) -> Complex64 {
    nu.atoms
        .iter()
        .zip(phi)
        .map(|((z, w), f)| (Complex64::from_polar(1.0, dot(xi, z)) - 1.0) * (w * f))
        .sum()
}

/// `m_s(ξ) = (1 − e^{2|s|Ψ(ξ)}) Ψ(ξ)^{−1} ∫(e^{iξ·z} − 1)φ dν`, zero where `Ψ = 0`.
pub fn multiplier_symbol_ms(nu: &LevyMeasureAtomic, phi: &[f64], s: f64, xi: &[f64]) -> Result<Complex64> {
    if !(s < 0.0) {
        return Err(Error::Domain(format!("m_s needs s < 0, got {s}")));
    }
    let ps = psi(nu, xi)?;
    check_modulator(nu, phi)?;
    if ps == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(modulated_exponent(nu, phi, xi) * ((1.0 - (2.0 * s.abs() * ps).exp()) / ps))
}

/// Pointwise limit `m(ξ) = Ψ(ξ)^{−1} ∫(e^{iξ·z} − 1)φ dν` of `m_s` as `s → −∞`.
pub fn limit_symbol(nu: &LevyMeasureAtomic, phi: &[f64], xi: &[f64]) -> Result<Complex64> {
    let ps = psi(nu, xi)?;
    check_modulator(nu, phi)?;
    if ps == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(modulated_exponent(nu, phi, xi) / ps)
}

/// Band-limited real boundary datum, kept as its nonzero Fourier modes so
/// that `P_{t,u}f` is evaluated exactly at any point.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryDatum {
    dim: usize,
    k: usize,
    half_period: f64,
    /// `(ξ, coefficient per component)`; `f(x) = Re Σ c e^{iξ·(x+L)}`.
    modes: Vec<(Vec<f64>, Vec<Complex64>)>,
}

impl BoundaryDatum {
    /// Extracts the modes of a real grid function; coefficients below
    /// `1e−13·max` are dropped.
    pub fn from_grid(f: &GridFunction) -> Result<Self> {
        let scale = f.max_abs();
        if f.values.iter().any(|v| v.im.abs() > 1e-12 * scale.max(1.0)) {
            return Err(Error::InvalidInput("boundary datum must be real-valued".into()));
        }
        let spec = f.spec;
        let mut spectrum = f.clone();
        Spectrum::new(spec).forward(&mut spectrum);
        let norm = 1.0 / (spec.points() as f64).sqrt();
        let cmax = spectrum.max_abs();
        let mut modes = Vec::new();
        for i in 0..spec.points() {
            let c: Vec<Complex64> = spectrum.point(i).iter().map(|v| v * norm).collect();
            if c.iter().any(|v| v.norm() > 1e-13 * cmax) {
                modes.push((spec.frequency(i), c));
            }
        }
        Ok(Self { dim: spec.d, k: spec.k, half_period: spec.half_period, modes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> usize {
        self.k
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Terms `c·e^{iξ·(x+L)}` at a point, per mode and component.
    fn phases(&self, x: &[f64]) -> Vec<Complex64> {
        self.modes
            .iter()
            .map(|(xi, _)| {
                let ph: f64 = xi.iter().zip(x).map(|(a, b)| a * (b + self.half_period)).sum();
                Complex64::from_polar(1.0, ph)
            })
            .collect()
    }
}

/// `P_τ f(x) = E f(x + X_τ)`, computed mode by mode as `e^{τΨ(ξ)}`-damped
/// Fourier coefficients. The datum is periodic, so any `x` is accepted.
pub fn parabolic_extension(f: &BoundaryDatum, nu: &LevyMeasureAtomic, tau: f64, x: &[f64]) -> Result<Vec<f64>> {
    if !(tau >= 0.0) {
        return Err(Error::Domain(format!("duration must be nonnegative, got {tau}")));
    }
    check_dim(f.dim, x.len())?;
    check_dim(f.dim, nu.dim)?;
    let ctx = Extension::new(f, nu, None);
    Ok(ctx.value(tau, x))
}

/// Precomputed per-mode constants of one (datum, measure, modulator) triple.
struct Extension<'a> {
    f: &'a BoundaryDatum,
    psi: Vec<f64>,
    /// `∫(e^{iξ·z} − 1)φ dν` per mode.
    drift: Vec<Complex64>,
}

impl<'a> Extension<'a> {
    fn new(f: &'a BoundaryDatum, nu: &LevyMeasureAtomic, phi: Option<&[f64]>) -> Self {
        let psi = f
            .modes
            .iter()
            .map(|(xi, _)| {
                // complex exponent, real for symmetric ν
                nu.atoms.iter().map(|(z, w)| w * (dot(xi, z).cos() - 1.0)).sum()
            })
            .collect();
        let drift = match phi {
            Some(phi) => f.modes.iter().map(|(xi, _)| modulated_exponent(nu, phi, xi)).collect(),
            None => vec![Complex64::new(0.0, 0.0); f.modes.len()],
        };
        Self { f, psi, drift }
    }

    /// `P_τ f(x)`.
    fn value(&self, tau: f64, x: &[f64]) -> Vec<f64> {
        self.combine(tau, &self.f.phases(x), false)
    }

    /// `∫[P_τ f(x + z) − P_τ f(x)]φ(z) ν(dz)`.
    fn compensator(&self, tau: f64, phases: &[Complex64]) -> Vec<f64> {
        self.combine(tau, phases, true)
    }

    fn combine(&self, tau: f64, phases: &[Complex64], with_drift: bool) -> Vec<f64> {
        let mut out = vec![0.0; self.f.k];
        for (m, (_, c)) in self.f.modes.iter().enumerate() {
            let mut w = phases[m] * (tau * self.psi[m]).exp();
            if with_drift {
                w *= self.drift[m];
            }
            for (o, cc) in out.iter_mut().zip(c) {
                *o += (cc * w).re;
            }
        }
        out
    }
}

/// One simulated pair `(G, F)` on the time grid refined by the signal times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParabolicPair {
    pub path: JumpPath,
    /// Merged grid: uniform nodes plus signal times, increasing.
    pub times: Vec<f64>,
    /// Indices into `times` of the uniform nodes.
    pub uniform: Vec<usize>,
    pub g: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    /// `ΔG` at each signal time.
    pub g_jumps: Vec<Vec<f64>>,
    /// `ΔF` at each signal time.
    pub f_jumps: Vec<Vec<f64>>,
    /// `φ(Zᵢ)` at each signal time.
    pub jump_modulator: Vec<f64>,
    /// `P_{s,u}f(x)`.
    pub initial: Vec<f64>,
    /// `f(x + X_{s,u})`, equal to `G_u`.
    pub terminal_datum: Vec<f64>,
}

impl ParabolicPair {
    pub fn g_terminal(&self) -> &[f64] {
        self.g.last().expect("nonempty grid")
    }

    pub fn f_terminal(&self) -> &[f64] {
        self.f.last().expect("nonempty grid")
    }

    /// Largest `‖F_t + P_{s,u}f(x) − G_t‖∞` over the grid.
    pub fn identity_defect(&self) -> f64 {
        self.f
            .iter()
            .zip(&self.g)
            .flat_map(|(f, g)| f.iter().zip(g).zip(&self.initial).map(|((a, b), c)| (a + c - b).abs()))
            .fold(0.0, f64::max)
    }
}

/// Fixed inputs of a parabolic-pair simulation.
#[derive(Debug, Clone)]
pub struct ParabolicSetup {
    pub x: Vec<f64>,
    pub s: f64,
    pub u: f64,
    pub datum: BoundaryDatum,
    pub phi: Vec<f64>,
    pub nu: LevyMeasureAtomic,
    /// Uniform steps of the compensator quadrature.
    pub steps: usize,
}

/// Default number of uniform quadrature steps on `[s, u]`.
pub const DEFAULT_STEPS: usize = 512;

impl ParabolicSetup {
    pub fn validate(&self) -> Result<()> {
        if !(self.s < self.u) {
            return Err(Error::InvalidInput(format!("empty window [{}, {}]", self.s, self.u)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidInput("quadrature needs at least one step".into()));
        }
        check_dim(self.datum.dim, self.x.len())?;
        check_dim(self.datum.dim, self.nu.dim)?;
        check_modulator(&self.nu, &self.phi)
    }
}

/// Simulates `G_t = P_{t,u}f(x + X_{s,t})` and
/// `F_t = Σ_{Sᵢ≤t} ΔG_{Sᵢ}·φ(Zᵢ) − ∫_s^t ∫[P_{v,u}f(x+X_{s,v−}+z) − P_{v,u}f(x+X_{s,v−})]φ(z)ν(dz)dv`.
///
/// The compensator is integrated by the composite trapezoid rule on the
/// uniform grid of `setup.steps` cells refined by the signal times; between
/// signals `X` is constant, so each cell has a smooth integrand.
pub fn simulate_parabolic_pair<R: Rng>(setup: &ParabolicSetup, rng: &mut R) -> Result<ParabolicPair> {
    setup.validate()?;
    let path = simulate_jumps(&setup.nu, setup.s, setup.u, rng)?;
    Ok(build_pair(setup, &Extension::new(&setup.datum, &setup.nu, Some(&setup.phi)), path))
}

/// Seeded form of [`simulate_parabolic_pair`].
pub fn simulate_parabolic_pair_seeded(setup: &ParabolicSetup, seed: u64) -> Result<ParabolicPair> {
    simulate_parabolic_pair(setup, &mut rng::stream(seed, 0))
}

fn build_pair(setup: &ParabolicSetup, ext: &Extension<'_>, path: JumpPath) -> ParabolicPair {
    let (s, u) = (setup.s, setup.u);
    let k = setup.datum.k;
    let h = (u - s) / setup.steps as f64;
    // merge the uniform nodes with the signal times
    let mut times = Vec::with_capacity(setup.steps + 1 + path.times.len());
    let mut uniform = Vec::with_capacity(setup.steps + 1);
    let mut j = 0;
    for i in 0..=setup.steps {
        let t = if i == setup.steps { u } else { s + i as f64 * h };
        while j < path.times.len() && path.times[j] < t {
            times.push(path.times[j]);
            j += 1;
        }
        uniform.push(times.len());
        times.push(t);
        if j < path.times.len() && path.times[j] == t {
            j += 1;
        }
    }
    let mut jump_at = vec![None; times.len()];
    {
        let mut q = 0;
        for (i, &t) in times.iter().enumerate() {
            if q < path.times.len() && path.times[q] == t {
                jump_at[i] = Some(q);
                q += 1;
            }
        }
    }

    let mut pos = setup.x.clone();
    let mut phases = setup.datum.phases(&pos);
    let mut g = Vec::with_capacity(times.len());
    let mut f = Vec::with_capacity(times.len());
    let mut g_jumps = Vec::with_capacity(path.times.len());
    let mut f_jumps = Vec::with_capacity(path.times.len());
    let mut jump_modulator = Vec::with_capacity(path.times.len());
    let initial = ext.value(u - s, &pos);
    let mut jump_sum = vec![0.0; k];
    let mut integral = vec![0.0; k];
    let mut prev_c = ext.compensator(u - s, &phases);
    g.push(initial.clone());
    f.push(vec![0.0; k]);
    for i in 1..times.len() {
        let t = times[i];
        // cell (t_{i−1}, t_i] uses the pre-jump state
        let c = ext.compensator(u - t, &phases);
        let dt = t - times[i - 1];
        for ((acc, a), b) in integral.iter_mut().zip(&prev_c).zip(&c) {
            *acc += 0.5 * dt * (a + b);
        }
        let before = ext.combine(u - t, &phases, false);
        let after = if let Some(q) = jump_at[i] {
            let mark = path.marks[q];
            for (a, b) in pos.iter_mut().zip(&setup.nu.atoms[mark].0) {
                *a += b;
            }
            phases = setup.datum.phases(&pos);
            let after = ext.combine(u - t, &phases, false);
            let dg: Vec<f64> = after.iter().zip(&before).map(|(a, b)| a - b).collect();
            let df: Vec<f64> = dg.iter().map(|v| v * setup.phi[mark]).collect();
            for (a, b) in jump_sum.iter_mut().zip(&df) {
                *a += b;
            }
            g_jumps.push(dg);
            f_jumps.push(df);
            jump_modulator.push(setup.phi[mark]);
            prev_c = ext.compensator(u - t, &phases);
            after
        } else {
            prev_c = c;
            before
        };
        g.push(after);
        f.push(jump_sum.iter().zip(&integral).map(|(a, b)| a - b).collect());
    }
    let terminal_datum = ext.value(0.0, &pos);
    ParabolicPair { path, times, uniform, g, f, g_jumps, f_jumps, jump_modulator, initial, terminal_datum }
}

/// `Σ ⟨Mₙ − Mₙ₋₁, x*⟩²` over consecutive samples of a path taken on a mesh.
pub fn discrete_qv(samples: &[Vec<f64>], functional: &[f64]) -> Result<f64> {
    let mut terms = Vec::with_capacity(samples.len());
    for w in samples.windows(2) {
        check_dim(functional.len(), w[0].len())?;
        check_dim(functional.len(), w[1].len())?;
        let inc: f64 = w[1].iter().zip(&w[0]).zip(functional).map(|((a, b), c)| (a - b) * c).sum();
        terms.push(inc * inc);
    }
    Ok(pairwise_sum(&terms))
}

/// Per-path summary kept by [`simulate_pair_ensemble`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSummary {
    /// `G` at the checkpoints.
    pub g: Vec<Vec<f64>>,
    /// `F` at the checkpoints.
    pub f: Vec<Vec<f64>>,
    pub n_jumps: usize,
    pub identity_defect: f64,
    /// Largest `|⟨ΔF, x*⟩² − φ²⟨ΔG, x*⟩²|` over jumps and coordinate functionals.
    pub qv_defect: f64,
    /// `‖G_u − f(x + X_{s,u})‖∞`.
    pub terminal_defect: f64,
}

/// Ensemble of simulated pairs reduced to checkpoint values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairEnsemble {
    pub checkpoints: Vec<f64>,
    pub initial: Vec<f64>,
    pub paths: Vec<PairSummary>,
    pub seed: u64,
}

/// Uniform `checkpoints + 1` times `s = t₀ < … < t_c = u` are recorded per
/// path. Path `i` uses the counter-based stream `i` under `seed`.
pub fn simulate_pair_ensemble(setup: &ParabolicSetup, n_paths: usize, checkpoints: usize, seed: u64) -> Result<PairEnsemble> {
    setup.validate()?;
    if checkpoints == 0 || setup.steps % checkpoints != 0 {
        return Err(Error::InvalidInput(format!("checkpoints must divide the {} quadrature steps", setup.steps)));
    }
    let ext = Extension::new(&setup.datum, &setup.nu, Some(&setup.phi));
    let every = setup.steps / checkpoints;
    let dim = setup.datum.k;
    let paths: Vec<PairSummary> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let path = simulate_jumps(&setup.nu, setup.s, setup.u, &mut r).expect("validated setup");
            let pair = build_pair(setup, &ext, path);
            let idx: Vec<usize> = (0..=checkpoints).map(|c| pair.uniform[c * every]).collect();
            let mut qv_defect = 0.0f64;
            for ((df, dg), phi) in pair.f_jumps.iter().zip(&pair.g_jumps).zip(&pair.jump_modulator) {
                for c in 0..dim {
                    let lhs = df[c] * df[c];
                    let rhs = phi * phi * dg[c] * dg[c];
                    qv_defect = qv_defect.max((lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE));
                }
            }
            let terminal_defect =
                pair.g_terminal().iter().zip(&pair.terminal_datum).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            PairSummary {
                g: idx.iter().map(|&j| pair.g[j].clone()).collect(),
                f: idx.iter().map(|&j| pair.f[j].clone()).collect(),
                n_jumps: pair.path.times.len(),
                identity_defect: pair.identity_defect(),
                qv_defect,
                terminal_defect,
            }
        })
        .collect();
    let h = (setup.u - setup.s) / checkpoints as f64;
    let checkpoints = (0..=checkpoints).map(|c| setup.s + c as f64 * h).collect();
    Ok(PairEnsemble { checkpoints, initial: ext.value(setup.u - setup.s, &setup.x), paths, seed })
}

impl PairEnsemble {
    /// Componentwise `Ê G_t` and `Ê F_t` at checkpoint `c`.
    pub fn means(&self, c: usize) -> (Vec<Estimate>, Vec<Estimate>) {
        let k = self.initial.len();
        let col = |pick: &dyn Fn(&PairSummary) -> f64| mean_with_se(&self.paths.iter().map(pick).collect::<Vec<_>>());
        let g = (0..k).map(|j| col(&|s: &PairSummary| s.g[c][j])).collect();
        let f = (0..k).map(|j| col(&|s: &PairSummary| s.f[c][j])).collect();
        (g, f)
    }
}

/// Outcome of [`check_jump_subordination`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpSubordinationReport {
    pub p: f64,
    pub beta: f64,
    /// `(Ê‖F_u‖^p / Ê‖G_u‖^p)^{1/p}`.
    pub ratio: Estimate,
    /// Upper edge `β(1 + 3·relSE)`.
    pub bound: f64,
    pub pass: bool,
}

/// Monte Carlo check of `E‖F_u‖^p ≤ β^p E‖G_u‖^p` on Euclidean targets.
pub fn check_jump_subordination(pairs: &PairEnsemble, p: Exponent, beta: f64) -> Result<JumpSubordinationReport> {
    let last = pairs.checkpoints.len() - 1;
    let e = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt().powf(p.p());
    let num: Vec<f64> = pairs.paths.iter().map(|s| e(&s.f[last])).collect();
    let den: Vec<f64> = pairs.paths.iter().map(|s| e(&s.g[last])).collect();
    let ratio = jackknife_root_ratio(&num, &den, p.p()).ok_or_else(|| Error::Degenerate("E|G_u|^p estimate is zero".into()))?;
    let bound = beta * (1.0 + 3.0 * ratio.relative_se());
    Ok(JumpSubordinationReport { p: p.p(), beta, ratio, bound, pass: ratio.value <= bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::GridSpec;
    use std::f64::consts::PI;

    fn line_measure() -> LevyMeasureAtomic {
        LevyMeasureAtomic::symmetrized(vec![(vec![1.0], 0.5)]).unwrap()
    }

    fn cosine_datum(freq: i64, spec: GridSpec) -> BoundaryDatum {
        let xi = PI * freq as f64 / spec.half_period;
        BoundaryDatum::from_grid(&GridFunction::from_real_fn(spec, |x| (xi * x[0]).cos())).unwrap()
    }

    #[test]
    fn measure_validation() {
        assert!(LevyMeasureAtomic::new(vec![(vec![1.0], 1.0)], true).is_err());
        assert!(LevyMeasureAtomic::new(vec![(vec![1.0], 1.0), (vec![-1.0], 2.0)], true).is_err());
        assert!(LevyMeasureAtomic::new(vec![(vec![0.0], 1.0)], false).is_err());
        assert!(LevyMeasureAtomic::new(vec![(vec![1.0], -1.0)], false).is_err());
        let nu = line_measure();
        assert_eq!(nu.total_mass(), 1.0);
        assert!(nu.is_symmetric_modulator(&[0.3, 0.3]));
        assert!(!nu.is_symmetric_modulator(&[0.3, -0.3]));
    }

    #[test]
    fn psi_values() {
        let nu = line_measure();
        assert_eq!(psi(&nu, &[0.0]).unwrap(), 0.0);
        assert!((psi(&nu, &[PI]).unwrap() + 2.0).abs() < 1e-15);
        assert_eq!(psi(&nu, &[0.7]).unwrap(), psi(&nu, &[-0.7]).unwrap());
        let asym = LevyMeasureAtomic::new(vec![(vec![1.0], 1.0)], false).unwrap();
        assert!(psi(&asym, &[1.0]).is_err());
    }

    #[test]
    fn jump_marks_and_empty_window() {
        let nu = LevyMeasureAtomic::new(vec![(vec![0.5, 1.0], 3.0)], false).unwrap();
        let p = simulate_jumps_seeded(&nu, 0.0, 10.0, 1).unwrap();
        assert!(p.marks.iter().all(|m| *m == 0));
        assert!(p.times.windows(2).all(|w| w[0] < w[1]));
        assert!(p.times.iter().all(|t| *t > 0.0 && *t <= 10.0));
        let short = simulate_jumps_seeded(&nu, 0.0, 1e-9, 2).unwrap();
        assert!(short.times.is_empty());
        assert!(simulate_jumps_seeded(&nu, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn poisson_count_mean() {
        let nu = line_measure();
        let counts: Vec<f64> = (0..100_000)
            .map(|i| simulate_jumps(&nu, -1.0, 2.0, &mut rng::stream(5, i)).unwrap().times.len() as f64)
            .collect();
        let e = mean_with_se(&counts);
        assert!((e.value - 3.0).abs() <= 3.0 * e.std_error, "{e:?}");
    }

    #[test]
    fn extension_examples() {
        let spec = GridSpec::new(1, 64, 8.0, 1).unwrap();
        let nu = line_measure();
        let constant = BoundaryDatum::from_grid(&GridFunction::from_real_fn(spec, |_| 2.5)).unwrap();
        for tau in [0.0, 0.3, 4.0] {
            assert!((parabolic_extension(&constant, &nu, tau, &[0.7]).unwrap()[0] - 2.5).abs() < 1e-13);
        }
        let f = cosine_datum(3, spec);
        let xi = PI * 3.0 / 8.0;
        let ps = psi(&nu, &[xi]).unwrap();
        for &(tau, x) in &[(0.0, 1.25), (0.5, -3.0), (2.0, 0.1), (1.0, 17.0)] {
            let v = parabolic_extension(&f, &nu, tau, &[x]).unwrap()[0];
            assert!((v - (tau * ps).exp() * (xi * x).cos()).abs() < 1e-12);
        }
        assert!(parabolic_extension(&f, &nu, -1.0, &[0.0]).is_err());
    }

    #[test]
    fn extension_matches_poisson_series() {
        // P_τ f(x) = Σ_n e^{−τ|ν|} (τ^n/n!) E f(x + Z₁ + … + Zₙ)
        let spec = GridSpec::new(1, 64, 8.0, 1).unwrap();
        let g = GridFunction::from_real_fn(spec, |x| (0.5 * PI / 8.0 * 4.0 * x[0]).sin() + 0.3 * (PI / 8.0 * x[0]).cos());
        let datum = BoundaryDatum::from_grid(&g).unwrap();
        let nu = LevyMeasureAtomic::symmetrized(vec![(vec![0.5], 0.4), (vec![1.5], 0.2)]).unwrap();
        let eval = |x: f64| (0.5 * PI / 8.0 * 4.0 * x).sin() + 0.3 * (PI / 8.0 * x).cos();
        let tau = 0.8;
        let x0 = 0.37;
        let mass = nu.total_mass();
        // distribution of the position after n jumps, by convolution
        let mut dist: Vec<(f64, f64)> = vec![(0.0, 1.0)];
        let mut total = 0.0;
        let mut coef = (-tau * mass).exp();
        for n in 0..40 {
            total += coef * dist.iter().map(|(y, w)| w * eval(x0 + y)).sum::<f64>();
            let mut next: Vec<(f64, f64)> = Vec::new();
            for (y, w) in &dist {
                for (z, wz) in nu.atoms() {
                    let yy = ((y + z[0]) * 4.0).round() / 4.0;
                    let ww = w * wz / mass;
                    match next.iter_mut().find(|(a, _)| *a == yy) {
                        Some(e) => e.1 += ww,
                        None => next.push((yy, ww)),
                    }
                }
            }
            dist = next;
            coef *= tau * mass / (n + 1) as f64;
        }
        let v = parabolic_extension(&datum, &nu, tau, &[x0]).unwrap()[0];
        assert!((v - total).abs() < 1e-12, "{v} vs {total}");
    }

    fn setup(phi: f64, steps: usize) -> ParabolicSetup {
        let spec = GridSpec::new(1, 64, 8.0, 1).unwrap();
        let g = GridFunction::from_real_fn(spec, |x| (PI / 8.0 * 2.0 * x[0]).cos() + 0.5 * (PI / 8.0 * 5.0 * x[0]).sin());
        ParabolicSetup {
            x: vec![0.3],
            s: -1.0,
            u: 0.0,
            datum: BoundaryDatum::from_grid(&g).unwrap(),
            phi: vec![phi; 4],
            nu: LevyMeasureAtomic::symmetrized(vec![(vec![0.7], 1.0), (vec![2.1], 0.5)]).unwrap(),
            steps,
        }
    }

    #[test]
    fn unit_modulator_identity() {
        let st = setup(1.0, DEFAULT_STEPS);
        for seed in 0..20 {
            let pair = simulate_parabolic_pair_seeded(&st, seed).unwrap();
            assert!(pair.identity_defect() < 1e-5, "{}", pair.identity_defect());
            assert!((pair.g_terminal()[0] - pair.terminal_datum[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_modulator_gives_zero() {
        let st = setup(0.0, 64);
        let pair = simulate_parabolic_pair_seeded(&st, 3).unwrap();
        assert!(pair.f.iter().all(|v| v[0] == 0.0));
    }

    #[test]
    fn compensator_without_jumps_matches_closed_form() {
        // no jumps: F_u = −∫_s^u C(v) dv with C(v) = Re Σ c e^{(u−v)Ψ} e^{iξ(x+L)} A
        let mut st = setup(0.6, DEFAULT_STEPS);
        st.nu = LevyMeasureAtomic::symmetrized(vec![(vec![0.7], 1e-9)]).unwrap();
        st.phi = vec![0.6; 2];
        let pair = simulate_parabolic_pair_seeded(&st, 1).unwrap();
        assert!(pair.path.times.is_empty());
        let ext = Extension::new(&st.datum, &st.nu, Some(&st.phi));
        let ph = st.datum.phases(&st.x);
        let mut exact = 0.0;
        for (m, (_, c)) in st.datum.modes.iter().enumerate() {
            let ps = ext.psi[m];
            let integral = if ps == 0.0 { st.u - st.s } else { ((st.u - st.s) * ps).exp_m1() / ps };
            exact += (c[0] * ph[m] * ext.drift[m] * integral).re;
        }
        assert!((pair.f_terminal()[0] + exact).abs() < 1e-18 + 1e-6 * exact.abs(), "{} vs {}", pair.f_terminal()[0], -exact);
    }

    #[test]
    fn jump_qv_modulation() {
        let st = setup(-0.4, 128);
        let pair = simulate_parabolic_pair_seeded(&st, 11).unwrap();
        assert!(!pair.g_jumps.is_empty());
        for ((df, dg), phi) in pair.f_jumps.iter().zip(&pair.g_jumps).zip(&pair.jump_modulator) {
            assert!((df[0] * df[0] - phi * phi * dg[0] * dg[0]).abs() <= 1e-15 * dg[0] * dg[0]);
        }
    }

    #[test]
    fn qv_of_pure_jump_path() {
        let nu = LevyMeasureAtomic::symmetrized(vec![(vec![1.0, 0.5], 2.0), (vec![-0.3, 1.0], 1.0)]).unwrap();
        let path = simulate_jumps_seeded(&nu, 0.0, 2.0, 4).unwrap();
        let mut mesh: Vec<f64> = (0..=4000).map(|i| i as f64 * 2.0 / 4000.0).collect();
        mesh.extend(path.times.iter().copied());
        mesh.sort_by(f64::total_cmp);
        let xs = path.sample(&nu, &mesh);
        let xstar = [0.6, -1.1];
        let exact: f64 = path.marks.iter().map(|&m| dot(&nu.atoms()[m].0, &xstar).powi(2)).sum();
        assert!((discrete_qv(&xs, &xstar).unwrap() - exact).abs() < 1e-12);
        let constant = vec![vec![1.0, 2.0]; 5];
        assert_eq!(discrete_qv(&constant, &xstar).unwrap(), 0.0);
        let single = vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![2.0, 1.0], vec![2.0, 1.0]];
        assert!((discrete_qv(&single, &xstar).unwrap() - (1.2f64 - 1.1).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn symbols() {
        let nu = LevyMeasureAtomic::symmetrized(vec![(vec![1.0, 0.0], 1.0), (vec![0.5, 1.5], 0.3)]).unwrap();
        let ones = vec![1.0; 4];
        assert_eq!(limit_symbol(&nu, &ones, &[0.0, 0.0]).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(multiplier_symbol_ms(&nu, &ones, -1.0, &[0.0, 0.0]).unwrap(), Complex64::new(0.0, 0.0));
        let m = limit_symbol(&nu, &ones, &[0.4, -1.3]).unwrap();
        assert!((m - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        let phi = vec![0.5, 0.5, -0.9, -0.9];
        let xi = [0.8, 0.3];
        let ps = psi(&nu, &xi).unwrap();
        let s = -19.0 / (2.0 * ps.abs());
        let ms = multiplier_symbol_ms(&nu, &phi, s, &xi).unwrap();
        let ml = limit_symbol(&nu, &phi, &xi).unwrap();
        assert!((ms - ml).norm() <= 1e-8);
        assert!((ms - ml).norm() <= (2.0 * s.abs() * ps).exp() * ml.norm() + 1e-16);
        assert!(multiplier_symbol_ms(&nu, &phi, 0.5, &xi).is_err());
        assert!(limit_symbol(&nu, &[2.0, 0.0, 0.0, 0.0], &xi).is_err());
    }

    #[test]
    fn p2_ratio_at_most_one() {
        let st = setup(0.5, 64);
        let ens = simulate_pair_ensemble(&st, 20_000, 8, 3).unwrap();
        let rep = check_jump_subordination(&ens, Exponent::new(2.0).unwrap(), 1.0).unwrap();
        assert!(rep.pass, "{rep:?}");
        let zero = simulate_pair_ensemble(&setup(0.0, 64), 1000, 8, 3).unwrap();
        let rep0 = check_jump_subordination(&zero, Exponent::new(3.0).unwrap(), 2.0).unwrap();
        assert_eq!(rep0.ratio.value, 0.0);
    }

    #[test]
    fn martingale_drift() {
        let st = setup(0.7, 64);
        let ens = simulate_pair_ensemble(&st, 20_000, 4, 8).unwrap();
        for c in 0..ens.checkpoints.len() {
            let (g, f) = ens.means(c);
            assert!((g[0].value - ens.initial[0]).abs() <= 4.0 * g[0].std_error + 1e-12, "{c} {g:?}");
            assert!(f[0].value.abs() <= 4.0 * f[0].std_error + 1e-12, "{c} {f:?}");
        }
    }

    #[test]
    fn ms_bounded_for_even_modulators() {
        let mut r = rng::stream(17, 0);
        for _ in 0..10_000 {
            let d = r.random_range(1..=3);
            let half: Vec<(Vec<f64>, f64)> = (0..r.random_range(1..=4))
                .map(|_| ((0..d).map(|_| r.random_range(-3.0..3.0)).collect(), r.random_range(0.01..2.0)))
                .collect();
            let nu = LevyMeasureAtomic::symmetrized(half).unwrap();
            let phi: Vec<f64> = (0..nu.atoms().len() / 2)
                .flat_map(|_| {
                    let v = r.random_range(-1.0..=1.0);
                    [v, v]
                })
                .collect();
            let xi: Vec<f64> = (0..d).map(|_| r.random_range(-10.0..10.0)).collect();
            let s = -r.random_range(1e-3..20.0);
            assert!(multiplier_symbol_ms(&nu, &phi, s, &xi).unwrap().norm() <= 1.0 + 1e-12);
        }
    }
}
