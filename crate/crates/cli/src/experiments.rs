//! One runner per experiment kind. Each returns a report with its measured
//! values and the assertions it tested.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;
use serde_json::Value;
use umdlab_core::burkholder::{self, random_direction, random_probe, BurkholderParams as Sharp, WangU, FD_STEP};
use umdlab_core::fourier::{grid_sup, opnorm_lower_bound, GridSpec, MultiplierSymbol, OpnormSearch};
use umdlab_core::mart::{self, hilbert_band, subordination_ratio, FactorProcess, RandomScenario};
use umdlab_core::space::{beta_hilbert, Exponent, NormedSpace};
use umdlab_core::stats::Estimate;
use umdlab_core::verify::{jump_families, jump_family_checks, Check};
use umdlab_core::wiener::{self, random_factor, random_integrand, random_symmetric, WienerEnsemble};
use umdlab_core::{rng, Error};

use crate::config::*;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub param: String,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<SweepPoint>,
    pub params: Value,
    pub metrics: Vec<Metric>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

struct Builder {
    metrics: Vec<Metric>,
    checks: Vec<Check>,
}

impl Builder {
    fn new() -> Self {
        Self { metrics: Vec::new(), checks: Vec::new() }
    }

    fn metric(&mut self, name: &str, value: f64) {
        self.metrics.push(Metric { name: name.into(), value, std_error: None });
    }

    fn estimate(&mut self, name: &str, e: &Estimate) {
        self.metrics.push(Metric { name: name.into(), value: e.value, std_error: Some(e.std_error) });
    }

    fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn finish(self, cfg: &ExperimentConfig, params: impl Serialize) -> anyhow::Result<ExperimentReport> {
        let pass = self.checks.iter().all(|c| c.pass);
        Ok(ExperimentReport {
            experiment: cfg.experiment.name(),
            seed: cfg.seed,
            point: None,
            params: serde_json::to_value(params)?,
            metrics: self.metrics,
            checks: self.checks,
            pass,
        })
    }
}

/// Maps a core error to a usage error that names the offending field.
fn field<T>(r: umdlab_core::Result<T>, name: &str) -> anyhow::Result<T> {
    r.map_err(|e| usage(format!("params.{name}: {e}")))
}

fn exponent(p: f64) -> anyhow::Result<Exponent> {
    field(Exponent::new(p), "p")
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<ExperimentReport> {
    match cfg.experiment {
        Kind::BurkholderCheck => burkholder_check(cfg),
        Kind::MartSubordination => mart_subordination(cfg),
        Kind::MartAdversarial => mart_adversarial(cfg),
        Kind::JumpParabolic => jump_parabolic(cfg),
        Kind::SymbolEval => symbol_eval(cfg),
        Kind::OpnormSearch => opnorm(cfg),
        Kind::HilbertRatio => hilbert_ratio(cfg),
        Kind::WienerOrthogonal => wiener_orthogonal(cfg),
        Kind::WienerSelfadjoint => wiener_selfadjoint(cfg),
        Kind::WienerOnedim => wiener_onedim(cfg),
    }
}

fn burkholder_check(cfg: &ExperimentConfig) -> anyhow::Result<ExperimentReport> {
    let pr: BurkholderParams = cfg.params()?;
    let ex = exponent(pr.p)?;
    if pr.dim == 0 {
        return Err(usage("params.dim: must be at least 1"));
    }
    let sharp = field(Sharp::sharp_hilbert(pr.dim, ex), "dim")?;
    let u = WangU::new(ex);
    let mut r = rng::stream(cfg.seed, 0);
    let (mut slack, mut zig, mut orth) = (f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for _ in 0..pr.probes {
        let (x, y) = random_probe(&mut r, pr.dim, 4.0, false);
        slack = slack.min(burkholder::check_majorization(&sharp, &x, &y)?);
        let (x, y) = random_probe(&mut r, pr.dim, 1.0, true);
        let z = random_direction(&mut r, pr.dim);
        let eps = r.random_range(-1.0..=1.0);
        zig = zig.max(burkholder::zigzag_deficit(&u, &x, &y, &z, eps, FD_STEP));
        let w = random_direction(&mut r, pr.dim);
        orth = orth.max(burkholder::orthogonal_deficit(&u, &x, &y, &z, &w, FD_STEP));
    }
    let mut b = Builder::new();
    b.metric("beta", beta_hilbert(ex));
    b.check(Check::at_least("min majorization slack", slack, -1e-9));
    b.check(Check::at_most("max zigzag second difference", zig, 1e-6));
    b.check(Check::at_most("max orthogonal second difference", orth, 1e-6));
    b.finish(cfg, pr)
}

fn mart_subordination(cfg: &ExperimentConfig) -> anyhow::Result<ExperimentReport> {
    let pr: MartParams = cfg.params()?;
    let ex = exponent(pr.p)?;
    let space = field(NormedSpace::euclidean(pr.dim), "dim")?;
    if pr.depth == 0 {
        return Err(usage("params.depth: must be at least 1"));
    }
    if pr.paths < 2 {
        return Err(usage("params.paths: need at least 2 paths"));
    }
    let scenario = RandomScenario::new(pr.dim, pr.depth, cfg.seed, pr.factors == FactorKind::Sign);
    let f = match pr.driver {
        DriverKind::Signs => mart::gen_paley_walsh(&space, pr.depth, pr.paths, &scenario, cfg.seed)?,
        DriverKind::Gaussian => mart::gen_random_walk(&space, pr.depth, pr.paths, &scenario, cfg.seed)?,
    };
    let a = FactorProcess::from_rule(&f, &scenario)?;
    let g = mart::transform(&f, &a)?;
    let ratio = subordination_ratio(&f, &g, pr.depth, pr.p)?;
    let mut b = Builder::new();
    b.estimate("ratio", &ratio);
    b.estimate("moment f", &mart::lp_moment(&f, pr.depth, pr.p)?);
    b.estimate("moment g", &mart::lp_moment(&g, pr.depth, pr.p)?);
    b.check(Check::at_most("ratio <= (p*-1)(1+3SE)", ratio.value, hilbert_band(ex, &ratio)));
    if pr.p == 2.0 {
        b.check(Check::at_most("ratio <= 1+3SE", ratio.value, 1.0 + 3.0 * ratio.std_error));
    }
    b.finish(cfg, pr)
}

fn mart_adversarial(cfg: &ExperimentConfig) -> anyhow::Result<ExperimentReport> {
    let pr: AdversarialParams = cfg.params()?;
    let ex = exponent(pr.p)?;
    let space = field(NormedSpace::euclidean(pr.dim), "dim")?;
    let res = field(mart::adversarial_search(&space, ex, pr.depth, pr.budget, cfg.seed), "depth")?;
    let mut b = Builder::new();
    b.estimate("best ratio", &res.best_ratio);
    b.metric("evaluations", res.evaluations as f64);
    b.metric("improvements", res.improvements as f64);
    b.check(Check::within("best ratio in [1, p*-1]", res.best_ratio.value, 1.0, beta_hilbert(ex)));
    b.finish(cfg, pr)
}

fn slug(name: &str) -> String {
    name.replace(' ', "-")
}

fn jump_parabolic(cfg: &ExperimentConfig) -> anyhow::Result<ExperimentReport> {
    let pr: JumpParams = cfg.params()?;
    exponent(pr.p)?;
    if pr.paths < 2 {
        return Err(usage("params.paths: need at least 2 paths"));
    }
    let families = jump_families()?;
    let Some(fam) = families.iter().find(|f| slug(f.name) == pr.family) else {
        let names: Vec<String> = families.iter().map(|f| slug(f.name)).collect();
        return Err(usage(format!("params.family: unknown family `{}`, expected one of {}", pr.family, names.join(", "))));
    };
    let (checks, obs) = jump_family_checks(fam, pr.paths, &[pr.p], cfg.seed)?;
    let mut b = Builder::new();
    for o in obs {
        b.metric(&o.name, o.value);
    }
    checks.into_iter().for_each(|c| b.check(c));
    b.finish(cfg, pr)
}

fn symbol_eval(cfg: &ExperimentConfig) -> anyhow::Result<ExperimentReport> {
    let pr: SymbolEvalParams = cfg.params()?;
    let violations = pr.symbol.parameter_violations();
    if !violations.is_empty() {
        return Err(usage(format!("params.symbol: {}", violations.join("; "))));
    }
    let m = field(pr.symbol.eval(&pr.xi), "xi")?;
    let mut b = Builder::new();
    b.metric("re", m.re);
    b.metric("im", m.im);
    b.metric("abs", m.norm());
    b.check(Check::at_most("|m| <= 1", m.norm(), 1.0 + 1e-12));
    b.finish(cfg, pr)
}

/// Upper bound asserted for each symbol class.
fn symbol_bound(m: &MultiplierSymbol, ex: Exponent) -> (&'static str, f64) {
    let beta = beta_hilbert(ex);
    match m {
        MultiplierSymbol::BeurlingAhlfors => ("ratio <= 2(p*-1)", 2.0 * beta),
        MultiplierSymbol::HilbertLine => ("ratio <= (p*-1)^2", beta * beta * (1.0 + 1e-9)),
        MultiplierSymbol::Identity { .. } => ("ratio <= 1", 1.0 + 1e-9),
        _ => ("ratio <= p*-1 + 0.02", beta + 0.02),
    }
}

fn grid(d: usize, n: Option<usize>, half_period: Option<f64>) -> anyhow::Result<GridSpec> {
    let def = GridSpec::default_for(d);
    field(GridSpec::new(d, n.unwrap_or(def.n), half_period.unwrap_or(def.half_period), 1), "n")
}

fn opnorm(cfg: &ExperimentConfig) -> anyhow::Result<ExperimentReport> {
    let pr: OpnormParams = cfg.params()?;
    let ex = exponent(pr.p)?;
    let violations = pr.symbol.parameter_violations();
    if !violations.is_empty() {
        return Err(usage(format!("params.symbol: {}", violations.join("; "))));
    }
    let spec = grid(pr.symbol.dim(), pr.n, pr.half_period)?;
    let res = opnorm_lower_bound(&pr.symbol, ex, spec, OpnormSearch::new(pr.budget, cfg.seed))?;
    let mut b = Builder::new();
    b.metric("ratio", res.ratio);
    b.metric("grid sup |m|", grid_sup(&pr.symbol, &spec)?);
    b.metric("evaluations", res.evaluations as f64);
    b.metric("restarts", res.restarts as f64);
    let (name, bound) = symbol_bound(&pr.symbol, ex);
    b.check(Check::at_most(name, res.ratio, bound));
    b.finish(cfg, pr)
}

fn hilbert_ratio(cfg: &ExperimentConfig) -> anyhow::Result<ExperimentReport> {
    let pr: HilbertParams = cfg.params()?;
    let ex = exponent(pr.p)?;
    let spec = grid(1, Some(pr.n), None)?;
    let res = opnorm_lower_bound(&MultiplierSymbol::HilbertLine, ex, spec, OpnormSearch::new(pr.budget, cfg.seed))?;
    let beta = beta_hilbert(ex);
    let mut b = Builder::new();
    b.metric("ratio", res.ratio);
    b.metric("sqrt(p*-1)", beta.sqrt());
    b.metric("evaluations", res.evaluations as f64);
    b.check(Check::at_least("ratio >= sqrt(p*-1) - 0.1", res.ratio, beta.sqrt() - 0.1));
    b.check(Check::at_most("ratio <= (p*-1)^2", res.ratio, beta * beta * (1.0 + 1e-9)));
    b.finish(cfg, pr)
}

fn ensemble(c: &WienerCommon, h: usize, seed: u64) -> anyhow::Result<WienerEnsemble> {
    if c.paths < 2 {
        return Err(usage("params.paths: need at least 2 paths"));
    }
    field(WienerEnsemble::new(c.paths, c.horizon, c.steps, h, rng::mix(seed, 2)), "steps")
}

fn check_common(c: &WienerCommon) -> anyhow::Result<Exponent> {
    if c.k == 0 {
        return Err(usage("params.k: must be at least 1"));
    }
    if c.intervals == 0 || c.intervals > c.steps {
        return Err(usage("params.intervals: must lie in 1..=steps"));
    }
    exponent(c.p)
}

fn transform_checks(b: &mut Builder, rep: &wiener::TransformReport, scale: f64) {
    b.estimate("ratio", &rep.ratio);
    b.metric("constant", rep.constant);
    b.check(Check::at_most("ratio <= constant(1+3SE)", rep.ratio.value, rep.bound));
    if rep.p == 2.0 {
        b.check(Check::at_most("L2: ratio / scale <= 1+3SE", rep.ratio.value / scale, 1.0 + 3.0 * rep.ratio.relative_se()));
    }
}

fn wiener_orthogonal(cfg: &ExperimentConfig) -> anyhow::Result<ExperimentReport> {
    only_keys(&cfg.params, &[])?;
    let pr: WienerOrthogonalParams = cfg.params()?;
    let c = &pr.common;
    let ex = check_common(c)?;
    let mut r = rng::stream(cfg.seed, 1);
    let f1 = random_integrand(&mut r, c.k, 1, c.intervals, c.horizon, c.adapted)?;
    let f2 = random_integrand(&mut r, c.k, 1, c.intervals, c.horizon, c.adapted)?;
    let rep = wiener::orthogonal_pair_check(&f1, &f2, ex, &ensemble(c, 2, cfg.seed)?)?;
    let mut b = Builder::new();
    transform_checks(&mut b, &rep, 1.0);
    b.finish(cfg, pr)
}

fn matrix(rows: &[Vec<f64>], h: usize) -> anyhow::Result<DMatrix<f64>> {
    if rows.len() != h || rows.iter().any(|r| r.len() != h) {
        return Err(usage(format!("params.matrix: expected {h} rows of {h} entries")));
    }
    Ok(DMatrix::from_fn(h, h, |i, j| rows[i][j]))
}

fn wiener_selfadjoint(cfg: &ExperimentConfig) -> anyhow::Result<ExperimentReport> {
    only_keys(&cfg.params, &["h", "matrix", "antisymmetric"])?;
    let pr: WienerSelfadjointParams = cfg.params()?;
    let c = &pr.common;
    let ex = check_common(c)?;
    if pr.h == 0 {
        return Err(usage("params.h: must be at least 1"));
    }
    let mut r = rng::stream(cfg.seed, 1);
    let phi = random_integrand(&mut r, c.k, pr.h, c.intervals, c.horizon, c.adapted)?;
    let a = match &pr.matrix {
        Some(rows) => matrix(rows, pr.h)?,
        None if pr.antisymmetric => {
            let m = random_symmetric(&mut r, pr.h);
            let g = DMatrix::from_fn(pr.h, pr.h, |i, j| if i < j { m[(i, j)] } else if i > j { -m[(j, i)] } else { 0.0 });
            g
        }
        None => random_symmetric(&mut r, pr.h),
    };
    let ens = ensemble(c, pr.h, cfg.seed)?;
    let mut b = Builder::new();
    if pr.antisymmetric {
        let rep = field(wiener::antisymmetric_transform_experiment(&phi, &a, ex, &ens), "matrix")?;
        b.estimate("ratio", &rep.ratio);
        b.metric("spectral norm", rep.spectral_norm);
        b.metric("reference (p*-1)|A|", rep.reference);
    } else {
        let norm = field(wiener::spectral_norm_symmetric(&a), "matrix")?;
        let rep = field(wiener::selfadjoint_transform_check(&phi, &a, ex, &ens), "matrix")?;
        b.metric("spectral norm", norm);
        transform_checks(&mut b, &rep, norm);
    }
    b.finish(cfg, pr)
}

fn wiener_onedim(cfg: &ExperimentConfig) -> anyhow::Result<ExperimentReport> {
    only_keys(&cfg.params, &["factor"])?;
    let pr: WienerOnedimParams = cfg.params()?;
    let c = &pr.common;
    let ex = check_common(c)?;
    let mut r = rng::stream(cfg.seed, 1);
    let phi = random_integrand(&mut r, c.k, 1, c.intervals, c.horizon, c.adapted)?;
    let a: Arc<wiener::ScalarRule> = match pr.factor {
        FactorSpec::Constant(v) => Arc::new(move |_, _| v),
        FactorSpec::Named(kind) => random_factor(&mut r, kind == FactorKind::Sign),
    };
    let rep = wiener::onedim_transform_check(&phi, a, ex, &ensemble(c, 1, cfg.seed)?).map_err(|e| match e {
        Error::ContractViolation(_) => usage(format!("params.factor: {e}")),
        e => e.into(),
    })?;
    let mut b = Builder::new();
    transform_checks(&mut b, &rep, 1.0);
    b.finish(cfg, pr)
}
