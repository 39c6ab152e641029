//! The acceptance suite as library code, shared by the `acceptance` test
//! target and the `verify-all` command. Reports are deterministic in the
//! seed and carry no timings.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::burkholder::{
    self, lower_payoff, random_direction, random_probe, sup_u_approx, wang_u, BiFunction,
    BurkholderParams, SupSearch, WangU, EPSILONS, FD_STEP,
};
use crate::error::Result;
use crate::fourier::{
    admissibility_check, apply_multiplier, grid_sup, lp_norm, opnorm_lower_bound, GridFunction, GridSpec, LevyAtom,
    MultiplierSymbol, OpnormSearch, SphereAtom, Spectrum,
};
use crate::jump::{
    check_jump_subordination, limit_symbol, multiplier_symbol_ms, psi, simulate_pair_ensemble, BoundaryDatum,
    LevyMeasureAtomic, ParabolicSetup, DEFAULT_STEPS,
};
use crate::mart::{self, gen_paley_walsh, gen_random_walk, hilbert_band, subordination_ratio, FactorProcess, RandomScenario};
use crate::rng;
use crate::space::{beta_hilbert, Exponent, NormedSpace};
use crate::wiener::{
    antisymmetric_transform_experiment, ito_isometry_check, onedim_transform_check, orthogonal_pair_check,
    random_factor, random_integrand, random_symmetric, selfadjoint_transform_check, spectral_norm_symmetric,
    WienerEnsemble,
};

/// One asserted quantity: `lower ≤ value ≤ upper` with either side optional.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, upper: f64) -> Self {
        Self { name: name.into(), value, lower: None, upper: Some(upper), pass: value <= upper }
    }

    pub fn at_least(name: impl Into<String>, value: f64, lower: f64) -> Self {
        Self { name: name.into(), value, lower: Some(lower), upper: None, pass: value >= lower }
    }

    pub fn within(name: impl Into<String>, value: f64, lower: f64, upper: f64) -> Self {
        Self { name: name.into(), value, lower: Some(lower), upper: Some(upper), pass: lower <= value && value <= upper }
    }

    /// A boolean property, recorded as value 1 (holds) or 0.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, lower: Some(1.0), upper: None, pass: ok }
    }
}

/// Report-only measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observation {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub title: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub observations: Vec<Observation>,
}

impl CriterionReport {
    fn new(id: u32, title: &str) -> Self {
        Self { id, title: title.into(), pass: true, checks: Vec::new(), observations: Vec::new() }
    }

    fn push(&mut self, c: Check) {
        self.pass &= c.pass;
        self.checks.push(c);
    }

    fn observe(&mut self, name: impl Into<String>, value: f64) {
        self.observations.push(Observation { name: name.into(), value });
    }

    /// First failing check, if any.
    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.pass)
    }

    /// `criterion N: PASS|FAIL title (k checks)` plus the first failure.
    pub fn summary_line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let mut s = format!("criterion {}: {verdict} {} ({} checks)", self.id, self.title, self.checks.len());
        if let Some(c) = self.first_failure() {
            s.push_str(&format!("; first failure {} = {:e} (lower {:?}, upper {:?})", c.name, c.value, c.lower, c.upper));
        }
        s
    }
}

/// Suite controls. `paths` overrides every Monte Carlo path count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifySettings {
    pub seed: u64,
    pub paths: Option<usize>,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self { seed: 0, paths: None }
    }
}

impl VerifySettings {
    fn paths(&self, default: usize) -> usize {
        self.paths.unwrap_or(default)
    }

    fn seed_for(&self, tag: u64) -> u64 {
        rng::mix(self.seed, tag)
    }
}

/// Criterion ids 1–8 in order.
pub const CRITERIA: [u32; 8] = [1, 2, 3, 4, 5, 6, 7, 8];

pub fn run_criterion(id: u32, s: &VerifySettings) -> Result<CriterionReport> {
    match id {
        1 => burkholder_suite(s),
        2 => p2_closed_form(s),
        3 => sup_sandwich(s),
        4 => discrete_subordination(s),
        5 => adversarial(s),
        6 => jump_suite(s),
        7 => fourier_suite(s),
        8 => wiener_suite(s),
        _ => Err(crate::Error::InvalidInput(format!("no criterion {id}"))),
    }
}

pub fn run_all(s: &VerifySettings) -> Result<Vec<CriterionReport>> {
    CRITERIA.iter().map(|&id| run_criterion(id, s)).collect()
}

/// Runs `f` on `n` probes in parallel; probe `i` draws from chunk stream
/// `i / 1024` so the result does not depend on the thread count.
fn probes<T: Send>(n: usize, seed: u64, f: impl Fn(&mut ChaCha8Rng) -> T + Sync) -> Vec<T> {
    const CHUNK: usize = 1024;
    (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut r = rng::stream(seed, c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len).map(|_| f(&mut r)).collect::<Vec<_>>()
        })
        .collect()
}

fn fmax(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn fmin(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::INFINITY, f64::min)
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

const PROBE_RADIUS: f64 = 1.0;

fn burkholder_suite(s: &VerifySettings) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(1, "Burkholder function suite");
    let n_major = s.paths(100_000);
    let n_concave = s.paths(10_000);
    for (pi, p) in [1.5, 2.0, 3.0, 4.0].into_iter().enumerate() {
        let ex = Exponent::new(p)?;
        for dim in [1usize, 2, 4] {
            let params = BurkholderParams::sharp_hilbert(dim, ex)?;
            let u = WangU::new(ex);
            let tag = (pi * 10 + dim) as u64;
            let tagname = format!("p={p},dim={dim}");

            let slack = probes(n_major, s.seed_for(0x100 + tag), |r| {
                let (x, y) = random_probe(r, dim, 4.0 * PROBE_RADIUS, false);
                burkholder::check_majorization(&params, &x, &y).expect("dimensions match")
            });
            rep.push(Check::at_least(format!("{tagname}: min majorization slack"), fmin(slack), -1e-9));

            let homog = probes(n_major, s.seed_for(0x200 + tag), |r| {
                let (x, y) = random_probe(r, dim, PROBE_RADIUS, false);
                let t = 10f64.powf(r.random_range(-1.0..1.0));
                let base = u.eval(&x, &y);
                let tx: Vec<f64> = x.iter().map(|v| v * t).collect();
                let ty: Vec<f64> = y.iter().map(|v| v * t).collect();
                let scaled = u.eval(&tx, &ty);
                let want = t.powf(p) * base;
                // relative to the size of the terms, as U itself may cancel to 0
                let scale = (t * (euclid(&x) + euclid(&y))).powf(p);
                if scale == 0.0 {
                    (scaled - want).abs()
                } else {
                    (scaled - want).abs() / scale
                }
            });
            rep.push(Check::at_most(format!("{tagname}: homogeneity relative error"), fmax(homog), 1e-12));

            let diag = probes(n_major, s.seed_for(0x300 + tag), |r| {
                let x = random_direction(r, dim);
                let eps = r.random_range(-1.0..=1.0);
                let y: Vec<f64> = x.iter().map(|v| v * eps).collect();
                let nx = euclid(&x);
                if nx == 0.0 {
                    0.0
                } else {
                    u.eval(&x, &y) / nx.powf(p)
                }
            });
            rep.push(Check::at_most(format!("{tagname}: max U(x, eps x)/|x|^p"), fmax(diag), 1e-12));

            let zz = probes(n_concave, s.seed_for(0x400 + tag), |r| {
                let (x, y) = random_probe(r, dim, PROBE_RADIUS, true);
                let z = random_direction(r, dim);
                let eps = if r.random_bool(0.5) {
                    EPSILONS[r.random_range(0..EPSILONS.len())]
                } else {
                    r.random_range(-1.0..=1.0)
                };
                burkholder::zigzag_deficit(&u, &x, &y, &z, eps, FD_STEP)
            });
            rep.push(Check::at_most(format!("{tagname}: max zigzag second difference"), fmax(zz), 1e-6));

            let orth = probes(n_concave, s.seed_for(0x500 + tag), |r| {
                let (x, y) = random_probe(r, dim, PROBE_RADIUS, true);
                let z1 = random_direction(r, dim);
                let z2 = random_direction(r, dim);
                burkholder::orthogonal_deficit(&u, &x, &y, &z1, &z2, FD_STEP)
            });
            rep.push(Check::at_most(format!("{tagname}: max orthogonal second difference"), fmax(orth), 1e-6));
        }
    }
    Ok(rep)
}

fn p2_closed_form(s: &VerifySettings) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(2, "p = 2 closed form");
    let ex = Exponent::new(2.0)?;
    for dim in [1usize, 2, 4] {
        let params = BurkholderParams::sharp_hilbert(dim, ex)?;
        let errs = probes(s.paths(10_000), s.seed_for(0x600 + dim as u64), |r| {
            let (x, y) = random_probe(r, dim, 2.0, false);
            let (nx, ny) = (euclid(&x), euclid(&y));
            let closed = ny * ny - nx * nx;
            let u = wang_u(&params, &x, &y).expect("dimensions match");
            // the general product form with p = p* = 2
            let product = 2.0 * 0.5 * (ny - nx) * (nx + ny);
            ((u - closed).abs(), (product - closed).abs())
        });
        rep.push(Check::at_most(format!("dim={dim}: |wang_u - (|y|^2 - |x|^2)|"), fmax(errs.iter().map(|e| e.0)), 1e-12));
        rep.push(Check::at_most(format!("dim={dim}: |product form - closed form|"), fmax(errs.iter().map(|e| e.1)), 1e-12));
    }
    Ok(rep)
}

fn sup_sandwich(s: &VerifySettings) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(3, "sup-U sandwich");
    let pairs = 200;
    for (pi, p) in [1.5, 3.0].into_iter().enumerate() {
        let ex = Exponent::new(p)?;
        let params = BurkholderParams::sharp_hilbert(1, ex)?;
        let seed = s.seed_for(0x700 + pi as u64);
        let rows: Vec<(f64, f64, bool)> = (0..pairs)
            .into_par_iter()
            .map(|i| {
                let mut r = rng::stream(seed, i as u64);
                let x = [r.random_range(-1.0..1.0)];
                let y = [r.random_range(-1.0..1.0)];
                let trivial = lower_payoff(&params, &x, &y);
                let wang = wang_u(&params, &x, &y).expect("scalar");
                let mut prev = f64::NEG_INFINITY;
                let (mut below, mut above, mut monotone) = (f64::NEG_INFINITY, f64::NEG_INFINITY, true);
                for depth in 0..=3 {
                    let search = SupSearch { depth, seed: rng::mix(seed, i as u64), ..Default::default() };
                    let v = sup_u_approx(&params, &x, &y, search).expect("valid search").value;
                    below = below.max(trivial - v);
                    above = above.max(v - wang);
                    monotone &= v >= prev;
                    prev = v;
                }
                (below, above, monotone)
            })
            .collect();
        rep.push(Check::at_most(format!("p={p}: max(trivial - approx)"), fmax(rows.iter().map(|r| r.0)), 0.0));
        rep.push(Check::at_most(format!("p={p}: max(approx - wang_u)"), fmax(rows.iter().map(|r| r.1)), 1e-9));
        rep.push(Check::holds(format!("p={p}: monotone in depth"), rows.iter().all(|r| r.2)));
    }
    Ok(rep)
}

fn discrete_subordination(s: &VerifySettings) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(4, "discrete subordination");
    let n_paths = s.paths(100_000);
    let depth = 10;
    let spaces = [("scalar", NormedSpace::scalar()), ("l2(4)", NormedSpace::euclidean(4)?)];
    for (name, space) in &spaces {
        for sc in 0..20u64 {
            let seed = s.seed_for(0x800 + sc);
            let scenario = RandomScenario::new(space.dim(), depth, seed, sc % 2 == 0);
            let f = if sc % 4 < 2 {
                gen_paley_walsh(space, depth, n_paths, &scenario, seed)?
            } else {
                gen_random_walk(space, depth, n_paths, &scenario, seed)?
            };
            let a = FactorProcess::from_rule(&f, &scenario)?;
            let g = mart::transform(&f, &a)?;
            for p in [1.5, 2.0, 3.0] {
                let ex = Exponent::new(p)?;
                let ratio = subordination_ratio(&f, &g, depth, p)?;
                let label = format!("{name} scenario {sc} p={p}");
                rep.push(Check::at_most(format!("{label}: ratio"), ratio.value, hilbert_band(ex, &ratio)));
                if p == 2.0 {
                    rep.push(Check::at_most(format!("{label}: L2 ratio"), ratio.value, 1.0 + 3.0 * ratio.std_error));
                }
            }
        }
    }
    Ok(rep)
}

fn adversarial(s: &VerifySettings) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(5, "adversarial search");
    let ex = Exponent::new(4.0)?;
    let res = mart::adversarial_search(&NormedSpace::scalar(), ex, 12, 10_000, s.seed_for(0x900))?;
    let upper = beta_hilbert(ex) * (1.0 + 3.0 * res.best_ratio.relative_se());
    rep.push(Check::within("scalar p=4 depth 12: best ratio", res.best_ratio.value, 1.0, upper));
    rep.observe("best ratio", res.best_ratio.value);
    rep.observe("evaluations", res.evaluations as f64);
    rep.observe("improvements", res.improvements as f64);
    Ok(rep)
}

/// Named parabolic-pair setup used by the jump criterion.
pub struct JumpFamily {
    pub name: &'static str,
    pub setup: ParabolicSetup,
}

fn datum_1d(k: usize) -> Result<BoundaryDatum> {
    let spec = GridSpec::new(1, 64, 8.0, k)?;
    let w = std::f64::consts::PI / 8.0;
    let g = GridFunction::from_fn(spec, |x, out| {
        for (c, o) in out.iter_mut().enumerate() {
            let c = c as f64;
            *o = Complex64::new((w * (2.0 + c) * x[0]).cos() + 0.5 * (w * (5.0 - c) * x[0] + c).sin(), 0.0);
        }
    });
    BoundaryDatum::from_grid(&g)
}

fn datum_2d() -> Result<BoundaryDatum> {
    let spec = GridSpec::new(2, 32, 8.0, 1)?;
    let w = std::f64::consts::PI / 8.0;
    BoundaryDatum::from_grid(&GridFunction::from_real_fn(spec, |x| {
        (w * (2.0 * x[0] + x[1])).cos() + 0.7 * (w * 3.0 * x[1]).sin() * (w * x[0]).cos()
    }))
}

/// Even modulator: `values[j]` on both atoms of the j-th symmetric pair.
fn even(values: &[f64]) -> Vec<f64> {
    values.iter().flat_map(|v| [*v, *v]).collect()
}

/// Five scenario families: constant, sign-valued and mixed modulators, a
/// vector-valued datum and a planar measure.
pub fn jump_families() -> Result<Vec<JumpFamily>> {
    let f1 = datum_1d(1)?;
    let base = |datum: BoundaryDatum, nu: LevyMeasureAtomic, phi: Vec<f64>, x: Vec<f64>| ParabolicSetup {
        x,
        s: -1.0,
        u: 0.0,
        datum,
        phi,
        nu,
        steps: DEFAULT_STEPS,
    };
    let two = LevyMeasureAtomic::symmetrized(vec![(vec![0.7], 1.0), (vec![2.1], 0.5)])?;
    let many = LevyMeasureAtomic::symmetrized(vec![(vec![0.3], 2.0), (vec![1.1], 1.5), (vec![4.0], 0.8)])?;
    let plane = LevyMeasureAtomic::symmetrized(vec![(vec![1.0, 0.0], 1.0), (vec![0.4, 1.3], 0.7)])?;
    Ok(vec![
        JumpFamily { name: "constant modulator", setup: base(f1.clone(), two.clone(), even(&[0.5, 0.5]), vec![0.3]) },
        JumpFamily { name: "sign modulator", setup: base(f1.clone(), two.clone(), even(&[1.0, -1.0]), vec![-1.2]) },
        JumpFamily { name: "busy measure", setup: base(f1, many, even(&[-0.8, 0.2, 1.0]), vec![2.0]) },
        JumpFamily { name: "vector datum", setup: base(datum_1d(2)?, two, even(&[-1.0, 0.6]), vec![0.0]) },
        JumpFamily { name: "planar", setup: base(datum_2d()?, plane, even(&[0.9, -0.6]), vec![0.5, -0.4]) },
    ])
}

/// Martingale drift, per-jump QV, terminal value, unit-modulator identity
/// and subordination checks for one family.
pub fn jump_family_checks(fam: &JumpFamily, n_paths: usize, ps: &[f64], seed: u64) -> Result<(Vec<Check>, Vec<Observation>)> {
    let mut checks = Vec::new();
    let mut observations = Vec::new();
    let ens = simulate_pair_ensemble(&fam.setup, n_paths, 8, seed)?;
    // excess of |drift| over 4·SE; at t = s both processes are constant
    let mut drift_g = f64::NEG_INFINITY;
    let mut drift_f = f64::NEG_INFINITY;
    for c in 0..ens.checkpoints.len() {
        let (g, f) = ens.means(c);
        for (j, e) in g.iter().enumerate() {
            drift_g = drift_g.max((e.value - ens.initial[j]).abs() - 4.0 * e.std_error);
        }
        for e in &f {
            drift_f = drift_f.max(e.value.abs() - 4.0 * e.std_error);
        }
    }
    checks.push(Check::at_most(format!("{}: max |E G_t - G_s| - 4 SE", fam.name), drift_g, 1e-12));
    checks.push(Check::at_most(format!("{}: max |E F_t| - 4 SE", fam.name), drift_f, 1e-12));
    let qv = fmax(ens.paths.iter().map(|p| p.qv_defect));
    checks.push(Check::at_most(format!("{}: per-jump QV identity relative defect", fam.name), qv.max(0.0), 1e-12));
    let term = fmax(ens.paths.iter().map(|p| p.terminal_defect));
    checks.push(Check::at_most(format!("{}: |G_u - f(x + X)|", fam.name), term, 1e-12));
    for &p in ps {
        let ex = Exponent::new(p)?;
        let r = check_jump_subordination(&ens, ex, beta_hilbert(ex))?;
        checks.push(Check::at_most(format!("{} p={p}: ratio", fam.name), r.ratio.value, r.bound));
        observations.push(Observation { name: format!("{} p={p}: ratio", fam.name), value: r.ratio.value });
    }

    let mut unit = fam.setup.clone();
    unit.phi = vec![1.0; unit.phi.len()];
    let ens1 = simulate_pair_ensemble(&unit, (n_paths / 10).max(1), 8, rng::mix(seed, 1))?;
    let defect = fmax(ens1.paths.iter().map(|p| p.identity_defect));
    checks.push(Check::at_most(format!("{}: unit modulator identity defect", fam.name), defect, 1e-3));
    Ok((checks, observations))
}

fn jump_suite(s: &VerifySettings) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(6, "jump module");
    let n_paths = s.paths(20_000);
    for (fi, fam) in jump_families()?.iter().enumerate() {
        let (checks, obs) = jump_family_checks(fam, n_paths, &[1.5, 2.0, 3.0], s.seed_for(0xA00 + fi as u64))?;
        checks.into_iter().for_each(|c| rep.push(c));
        rep.observations.extend(obs);
    }

    // symbols on random symmetric measures with even modulators
    let seed = s.seed_for(0xC00);
    let rows = probes(10_000, seed, |r| {
        let d = r.random_range(1..=3);
        let half: Vec<(Vec<f64>, f64)> = (0..r.random_range(1..=4))
            .map(|_| ((0..d).map(|_| r.random_range(-3.0..3.0)).collect(), r.random_range(0.01..2.0)))
            .collect();
        let nu = LevyMeasureAtomic::symmetrized(half).expect("valid measure");
        let phi = even(&(0..nu.atoms().len() / 2).map(|_| r.random_range(-1.0..=1.0)).collect::<Vec<_>>());
        let xi: Vec<f64> = (0..d).map(|_| r.random_range(-10.0..10.0)).collect();
        let sv = -r.random_range(1e-3..20.0);
        let ms = multiplier_symbol_ms(&nu, &phi, sv, &xi).expect("valid inputs");
        let ps = psi(&nu, &xi).expect("symmetric");
        // s far enough out that 2|s||Ψ| = 19 + U(0, 20)
        let far = if ps < 0.0 { -(19.0 + r.random_range(0.0..20.0)) / (2.0 * ps.abs()) } else { -1.0 };
        let gap = (multiplier_symbol_ms(&nu, &phi, far, &xi).unwrap() - limit_symbol(&nu, &phi, &xi).unwrap()).norm();
        (ms.norm(), gap)
    });
    rep.push(Check::at_most("max |m_s|", fmax(rows.iter().map(|r| r.0)), 1.0 + 1e-12));
    rep.push(Check::at_most("max |m_s - m| at 2|s||psi| >= 19", fmax(rows.iter().map(|r| r.1)), 1e-8));
    Ok(rep)
}

/// Symbols of the Lévy-ratio catalogue used by the operator-norm checks.
pub fn catalogue() -> Vec<MultiplierSymbol> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let theta = |a: f64| vec![a.cos(), a.sin()];
    vec![
        MultiplierSymbol::LevyRatio {
            dim: 1,
            levy: vec![
                LevyAtom { z: vec![1.0], weight: 1.0, phi: c(-1.0, 0.0) },
                LevyAtom { z: vec![-1.0], weight: 1.0, phi: c(-1.0, 0.0) },
                LevyAtom { z: vec![0.25], weight: 4.0, phi: c(1.0, 0.0) },
                LevyAtom { z: vec![-0.25], weight: 4.0, phi: c(1.0, 0.0) },
            ],
            sphere: vec![],
        },
        MultiplierSymbol::LevyRatio {
            dim: 2,
            levy: vec![
                LevyAtom { z: vec![1.0, 0.0], weight: 1.0, phi: c(0.6, 0.8) },
                LevyAtom { z: vec![-1.0, 0.0], weight: 1.0, phi: c(0.6, 0.8) },
            ],
            sphere: vec![SphereAtom { theta: theta(1.2), mass: 0.5, psi: c(-1.0, 0.0) }],
        },
        MultiplierSymbol::RieszAlpha { dim: 2, axis: 0, alpha: 2.0 },
        MultiplierSymbol::RieszAlpha { dim: 2, axis: 1, alpha: 0.7 },
        MultiplierSymbol::RieszDiff { dim: 2, alpha: 2.0 },
        MultiplierSymbol::RieszDiff { dim: 2, alpha: 1.0 },
        MultiplierSymbol::SphereAlpha {
            dim: 2,
            alpha: 1.0,
            sphere: vec![
                SphereAtom { theta: theta(0.0), mass: 1.0, psi: c(1.0, 0.0) },
                SphereAtom { theta: theta(std::f64::consts::FRAC_PI_2), mass: 1.0, psi: c(-1.0, 0.0) },
            ],
        },
        MultiplierSymbol::LogSphere {
            dim: 2,
            sphere: vec![
                SphereAtom { theta: theta(0.3), mass: 1.0, psi: c(0.0, 1.0) },
                SphereAtom { theta: theta(2.0), mass: 0.5, psi: c(-1.0, 0.0) },
            ],
        },
    ]
}

/// Budgets of the Fourier criterion, in multiplier applications.
pub const OPNORM_BUDGET: usize = 300;
pub const RIESZ_DIFF_BUDGET: usize = 1_000;
pub const HILBERT_BUDGET: usize = 1_000;

fn fourier_suite(s: &VerifySettings) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(7, "Fourier suite");

    for d in [1usize, 2] {
        let spec = GridSpec::default_for(d);
        let mut r = rng::stream(s.seed_for(0xD00), d as u64);
        let f = GridFunction::from_fn(spec, |_, out| {
            for o in out.iter_mut() {
                *o = Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
            }
        });
        let plan = Spectrum::new(spec);
        let mut g = f.clone();
        plan.forward(&mut g);
        plan.inverse(&mut g);
        rep.push(Check::at_most(format!("d={d}: DFT round trip relative error"), g.max_abs_diff(&f) / f.max_abs(), 1e-12));
    }

    let mut with_extras = catalogue();
    with_extras.push(MultiplierSymbol::BeurlingAhlfors);
    with_extras.push(MultiplierSymbol::HilbertLine);
    for m in &with_extras {
        let a = admissibility_check(m, s.seed_for(0xD10))?;
        rep.push(Check::at_most(format!("{}: admissibility max |m|", m.label()), a.max_abs, 1.0 + 1e-12));
    }

    for (mi, m) in with_extras.iter().enumerate() {
        let spec = GridSpec::default_for(m.dim());
        let two = Exponent::new(2.0)?;
        let l2 = opnorm_lower_bound(m, two, spec, OpnormSearch::new(64, s.seed_for(0xD20 + mi as u64)))?;
        let sup = grid_sup(m, &spec)?;
        rep.push(Check::at_most(format!("{}: |p=2 bound - grid sup|", m.label()), (l2.ratio - sup).abs(), 1e-6));
    }

    for (mi, m) in catalogue().iter().enumerate() {
        let spec = GridSpec::default_for(m.dim());
        for p in [1.5, 3.0] {
            let ex = Exponent::new(p)?;
            let budget = if matches!(m, MultiplierSymbol::RieszDiff { alpha, .. } if *alpha == 2.0) { RIESZ_DIFF_BUDGET } else { OPNORM_BUDGET };
            let res = opnorm_lower_bound(m, ex, spec, OpnormSearch::new(budget, s.seed_for(0xD40 + mi as u64)))?;
            rep.push(Check::at_most(format!("{} p={p}: lower bound", m.label()), res.ratio, beta_hilbert(ex) + 0.02));
            rep.observe(format!("{} p={p}: lower bound", m.label()), res.ratio);
            if p == 3.0 && matches!(m, MultiplierSymbol::RieszDiff { alpha, .. } if *alpha == 2.0) {
                rep.push(Check::within("riesz_diff(a=2,d=2) p=3: lower bound", res.ratio, 1.0, 2.02));
            }
        }
    }

    let ba = opnorm_lower_bound(&MultiplierSymbol::BeurlingAhlfors, Exponent::new(3.0)?, GridSpec::default_for(2), OpnormSearch::new(OPNORM_BUDGET, s.seed_for(0xD60)))?;
    rep.observe("beurling_ahlfors p=3: lower bound (report only, 2*beta = 4)", ba.ratio);

    // Hilbert transform
    let h = MultiplierSymbol::HilbertLine;
    let spec = GridSpec::default_for(1);
    let mut cos_err = 0.0f64;
    for k in [1i64, 5, 40, 127] {
        let w = std::f64::consts::PI * k as f64 / spec.half_period;
        let f = GridFunction::from_real_fn(spec, |x| (w * x[0]).cos());
        let want = GridFunction::from_real_fn(spec, |x| (w * x[0]).sin());
        cos_err = cos_err.max(apply_multiplier(&f, &h)?.max_abs_diff(&want));
    }
    rep.push(Check::at_most("H cos = sin max error", cos_err, 1e-10));
    let mut r = rng::stream(s.seed_for(0xD70), 0);
    let mut sq_err = 0.0f64;
    let mut max_ratio = f64::NEG_INFINITY;
    let mut tests = Vec::new();
    for _ in 0..20 {
        let f = random_mean_zero(&mut r, spec);
        let hh = apply_multiplier(&apply_multiplier(&f, &h)?, &h)?;
        let mut minus = f.clone();
        minus.scale(-1.0);
        sq_err = sq_err.max(hh.max_abs_diff(&minus) / f.max_abs());
        tests.push(f);
    }
    rep.push(Check::at_most("H^2 = -I on mean-zero data", sq_err, 1e-10));
    for p in [1.5, 2.0, 3.0] {
        let ex = Exponent::new(p)?;
        let beta = beta_hilbert(ex);
        let res = opnorm_lower_bound(&h, ex, spec, OpnormSearch::new(HILBERT_BUDGET, s.seed_for(0xD80)))?;
        rep.push(Check::at_least(format!("hilbert p={p}: best ratio"), res.ratio, beta.sqrt() - 0.1));
        rep.observe(format!("hilbert p={p}: best ratio"), res.ratio);
        max_ratio = max_ratio.max(res.ratio / (beta * beta));
        for f in &tests {
            let hf = apply_multiplier(f, &h)?;
            max_ratio = max_ratio.max(lp_norm(&hf, p) / lp_norm(f, p) / (beta * beta));
        }
    }
    rep.push(Check::at_most("hilbert: max ratio / (p*-1)^2", max_ratio, 1.0 + 1e-9));
    Ok(rep)
}

fn random_mean_zero(r: &mut ChaCha8Rng, spec: GridSpec) -> GridFunction {
    let modes: Vec<(f64, f64, f64)> = (0..8)
        .map(|_| (std::f64::consts::PI * r.random_range(1..40) as f64 / spec.half_period, r.random_range(-1.0..1.0), r.random_range(0.0..6.3)))
        .collect();
    GridFunction::from_real_fn(spec, |x| modes.iter().map(|(w, a, ph)| a * (w * x[0] + ph).cos()).sum())
}

fn wiener_suite(s: &VerifySettings) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(8, "Wiener suite");
    let n_iso = s.paths(100_000);
    let n = s.paths(50_000);
    let (horizon, steps) = (1.0, 32);

    let mut r = rng::stream(s.seed_for(0xE00), 0);
    for (k, h) in [(1usize, 1usize), (3, 2)] {
        let phi = random_integrand(&mut r, k, h, 4, horizon, false)?;
        let e = WienerEnsemble::new(n_iso, horizon, steps, h, s.seed_for(0xE01 + k as u64))?;
        let iso = ito_isometry_check(&phi, &e)?;
        rep.push(Check::at_most(
            format!("isometry k={k} h={h}: |E|I|^2 - exact| / SE"),
            (iso.empirical.value - iso.exact).abs() / iso.empirical.std_error,
            3.0,
        ));
    }

    for sc in 0..10u64 {
        let mut r = rng::stream(s.seed_for(0xE10 + sc), 0);
        let adapted = sc % 2 == 1;
        let k = 1 + (sc as usize % 3);
        let f1 = random_integrand(&mut r, k, 1, 4, horizon, adapted)?;
        let f2 = random_integrand(&mut r, k, 1, 4, horizon, adapted)?;
        let h = 2 + (sc as usize % 2);
        let phi = random_integrand(&mut r, k, h, 4, horizon, adapted)?;
        let a = random_symmetric(&mut r, h);
        let norm = spectral_norm_symmetric(&a)?;
        let psi1 = random_integrand(&mut r, k, 1, 4, horizon, adapted)?;
        let factor = random_factor(&mut r, sc % 4 < 2);
        let e2 = WienerEnsemble::new(n, horizon, steps, 2, s.seed_for(0xE20 + sc))?;
        let eh = WienerEnsemble::new(n, horizon, steps, h, s.seed_for(0xE30 + sc))?;
        let e1 = WienerEnsemble::new(n, horizon, steps, 1, s.seed_for(0xE40 + sc))?;
        for p in [1.5, 2.0, 3.0] {
            let ex = Exponent::new(p)?;
            let o = orthogonal_pair_check(&f1, &f2, ex, &e2)?;
            rep.push(Check::at_most(format!("scenario {sc} p={p}: orthogonal pair"), o.ratio.value, o.bound));
            let sa = selfadjoint_transform_check(&phi, &a, ex, &eh)?;
            rep.push(Check::at_most(format!("scenario {sc} p={p}: self-adjoint"), sa.ratio.value, sa.bound));
            let od = onedim_transform_check(&psi1, factor.clone(), ex, &e1)?;
            rep.push(Check::at_most(format!("scenario {sc} p={p}: one-dimensional"), od.ratio.value, od.bound));
            if p == 2.0 {
                let band = |e: &crate::stats::Estimate| 1.0 + 3.0 * e.relative_se();
                rep.push(Check::at_most(format!("scenario {sc} L2: orthogonal pair"), o.ratio.value, band(&o.ratio)));
                rep.push(Check::at_most(format!("scenario {sc} L2: self-adjoint / |A|"), sa.ratio.value / norm, band(&sa.ratio)));
                rep.push(Check::at_most(format!("scenario {sc} L2: one-dimensional"), od.ratio.value, band(&od.ratio)));
            }
            if sc == 0 {
                rep.observe(format!("orthogonal pair p={p}: ratio"), o.ratio.value);
            }
        }
    }

    let phi = random_integrand(&mut r, 2, 2, 4, horizon, true)?;
    let rot = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    for p in [1.5, 3.0] {
        let e = WienerEnsemble::new(n, horizon, steps, 2, s.seed_for(0xE50))?;
        let anti = antisymmetric_transform_experiment(&phi, &rot, Exponent::new(p)?, &e)?;
        rep.observe(format!("antisymmetric rotation p={p}: ratio (report only)"), anti.ratio.value);
    }
    Ok(rep)
}
