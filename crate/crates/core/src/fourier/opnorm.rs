use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::grid::{lp_norm, GridFunction, GridSpec, Spectrum};
use super::symbol::{apply_on_grid, MultiplierSymbol};
use crate::error::{check_dim, Result};
use crate::rng;
use crate::space::Exponent;

/// Controls for [`opnorm_lower_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpnormSearch {
    /// Total number of objective evaluations (one `T_m` application each).
    pub budget: usize,
    /// Evaluations allowed per restart before moving on.
    pub iters_per_restart: usize,
    pub seed: u64,
}

impl OpnormSearch {
    pub fn new(budget: usize, seed: u64) -> Self {
        Self { budget, iters_per_restart: 64, seed }
    }
}

/// Result of [`opnorm_lower_bound`]. `ratio` is achieved by `witness`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpnormResult {
    pub ratio: f64,
    #[serde(skip)]
    pub witness: GridFunction,
    pub evaluations: usize,
    pub restarts: usize,
    pub best_restart: usize,
}

/// Number of structured starting functions tried before random ones.
const STRUCTURED_STARTS: usize = 6;

struct Objective<'a> {
    plan: Spectrum,
    symbol: Vec<Complex64>,
    adjoint: Vec<Complex64>,
    p: Exponent,
    evaluations: usize,
    budget: usize,
    _m: &'a MultiplierSymbol,
}

impl Objective<'_> {
    fn exhausted(&self) -> bool {
        self.evaluations >= self.budget
    }

    fn apply(&mut self, f: &GridFunction) -> (GridFunction, f64) {
        self.evaluations += 1;
        let g = apply_on_grid(&self.plan, f, &self.symbol);
        let ratio = lp_norm(&g, self.p.p()) / lp_norm(f, self.p.p());
        (g, ratio)
    }
}

/// Pointwise duality map `v ↦ ‖v‖^{q−2} v` for `L^q`.
fn duality_map(f: &GridFunction, q: f64) -> GridFunction {
    let mut out = f.clone();
    let k = f.spec.k;
    for chunk in out.values.chunks_mut(k) {
        let n = chunk.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let s = if n == 0.0 { 0.0 } else { n.powf(q - 2.0) };
        chunk.iter_mut().for_each(|c| *c *= s);
    }
    out
}

fn normalize(f: &mut GridFunction, p: f64) -> bool {
    let n = lp_norm(f, p);
    if !(n > 0.0) || !n.is_finite() {
        return false;
    }
    f.scale(1.0 / n);
    true
}

fn start_function(spec: &GridSpec, symbol: &[Complex64], p: f64, restart: usize, seed: u64) -> GridFunction {
    let mut r = rng::stream(seed, restart as u64);
    let dir: Vec<Complex64> = {
        let mut v: Vec<Complex64> = (0..spec.k)
            .map(|c| if c == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(r.random_range(-1.0..1.0), 0.0) })
            .collect();
        let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|c| *c /= n);
        v
    };
    let l = spec.half_period;
    let scalar = |x: &[f64]| -> Complex64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let rad = r2.sqrt();
        let window = (-(r2) / (2.0 * (l / 3.0).powi(2))).exp();
        let gamma = 0.9 / p;
        let h = spec.spacing();
        match restart {
            1 => Complex64::new((-(r2) / (2.0 * (l / 8.0).powi(2))).exp(), 0.0),
            2 => Complex64::new((x[0] / (2.0 * h)).tanh() * window, 0.0),
            3 => {
                if x[0] > 0.0 {
                    Complex64::new((x[0] + 0.5 * h).powf(-gamma) * window, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            4 => Complex64::new(x[0].signum() * (rad + 0.5 * h).powf(-gamma) * window, 0.0),
            _ => {
                // angular profile for d ≥ 2, even power profile otherwise
                let s = if x.len() >= 2 && rad > 0.0 { (x[0] * x[0] - x[1] * x[1]) / r2 } else { 1.0 };
                Complex64::new(s * (rad + 0.5 * h).powf(-gamma) * window, 0.0)
            }
        }
    };
    let mut f = GridFunction::zeros(*spec);
    if restart == 0 {
        // plane wave at the largest |m| on the grid
        let (imax, _) = symbol
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, bv), (i, v)| if v.norm() > bv { (i, v.norm()) } else { (bi, bv) });
        let xi = spec.frequency(imax);
        for i in 0..spec.points() {
            let x = spec.coordinates(i);
            let phase: f64 = xi.iter().zip(&x).map(|(a, b)| a * b).sum();
            let w = Complex64::from_polar(1.0, phase);
            for c in 0..spec.k {
                f.values[i * spec.k + c] = w * dir[c];
            }
        }
    } else if restart < STRUCTURED_STARTS {
        for i in 0..spec.points() {
            let v = scalar(&spec.coordinates(i));
            for c in 0..spec.k {
                f.values[i * spec.k + c] = v * dir[c];
            }
        }
    } else {
        // random band-limited data: Gaussian coefficients with a random
        // spectral envelope
        let width = r.random_range(0.05..0.5) * spec.n as f64 / 2.0;
        for i in 0..spec.points() {
            let kk: f64 = (0..spec.d)
                .map(|a| {
                    let j = spec.multi_index(i)[a];
                    spec.signed_bin(j) as f64
                })
                .map(|v| v * v)
                .sum();
            let env = (-kk / (2.0 * width * width)).exp();
            for c in 0..spec.k {
                let re: f64 = r.sample(StandardNormal);
                let im: f64 = r.sample(StandardNormal);
                f.values[i * spec.k + c] = Complex64::new(re, im) * env;
            }
        }
        Spectrum::new(*spec).inverse(&mut f);
    }
    f
}

/// Lower bound for `‖T_m‖_{L^p → L^p}` on a periodic grid.
///
/// Each restart runs the duality-map iteration
/// `f ← J_{p'}(T_m^* J_p(T_m f))`, halving the step toward the new iterate
/// when the ratio does not improve and ending the restart once the step
/// falls below 1/8. Restarts begin with structured functions (the plane wave
/// at the largest grid value of `|m|`, a Gaussian, a smoothed sign, one-sided
/// and odd power singularities, an angular profile) and continue with random
/// band-limited data until the budget is spent. The sequence of evaluations
/// depends only on the seed, so the bound is nondecreasing in the budget.
pub fn opnorm_lower_bound(m: &MultiplierSymbol, p: Exponent, spec: GridSpec, search: OpnormSearch) -> Result<OpnormResult> {
    check_dim(m.dim(), spec.d)?;
    let symbol = m.on_grid(&spec)?;
    let adjoint = symbol.iter().map(|v| v.conj()).collect();
    let mut obj = Objective {
        plan: Spectrum::new(spec),
        symbol,
        adjoint,
        p,
        evaluations: 0,
        budget: search.budget.max(1),
        _m: m,
    };
    let (pp, pd) = (p.p(), p.conjugate());
    let mut best: Option<(f64, GridFunction, usize)> = None;
    let mut restart = 0usize;
    while !obj.exhausted() {
        let mut f = start_function(&spec, &obj.symbol, pp, restart, search.seed);
        if !normalize(&mut f, pp) {
            restart += 1;
            continue;
        }
        let (mut g, mut ratio) = obj.apply(&f);
        let mut used = 1usize;
        let mut step = 1.0f64;
        let mut proposal: Option<GridFunction> = None;
        loop {
            if best.as_ref().is_none_or(|b| ratio > b.0) {
                best = Some((ratio, f.clone(), restart));
            }
            if obj.exhausted() || used >= search.iters_per_restart || ratio == 0.0 {
                break;
            }
            let target = match &proposal {
                Some(t) => t.clone(),
                None => {
                    let h = duality_map(&g, pp);
                    let u = apply_on_grid(&obj.plan, &h, &obj.adjoint);
                    let mut t = duality_map(&u, pd);
                    if !normalize(&mut t, pp) {
                        break;
                    }
                    t
                }
            };
            let mut cand = if step == 1.0 {
                target.clone()
            } else {
                let mut c = f.clone();
                for (a, b) in c.values.iter_mut().zip(&target.values) {
                    *a += step * (b - *a);
                }
                c
            };
            if !normalize(&mut cand, pp) {
                break;
            }
            let (gc, rc) = obj.apply(&cand);
            used += 1;
            if rc > ratio * (1.0 + 1e-13) {
                f = cand;
                g = gc;
                ratio = rc;
                step = 1.0;
                proposal = None;
            } else {
                step *= 0.5;
                proposal = Some(target);
                if step < 0.125 {
                    break;
                }
            }
        }
        restart += 1;
    }
    let (ratio, witness, best_restart) = best.unwrap_or((0.0, GridFunction::zeros(spec), 0));
    Ok(OpnormResult { ratio, witness, evaluations: obj.evaluations, restarts: restart, best_restart })
}

/// Largest `|m|` over the DFT bins of a grid, the exact `L² → L²` norm of the
/// discretized multiplier.
pub fn grid_sup(m: &MultiplierSymbol, spec: &GridSpec) -> Result<f64> {
    Ok(m.on_grid(spec)?.iter().map(|v| v.norm()).fold(0.0, f64::max))
}
