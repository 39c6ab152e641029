use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::grid::{GridFunction, Spectrum};
use crate::error::{check_dim, Error, Result};
use crate::rng;

/// Atom `w·δ_z` of a Lévy measure together with the modulator value `φ(z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyAtom {
    pub z: Vec<f64>,
    pub weight: f64,
    pub phi: Complex64,
}

/// Atom `m·δ_θ` of a measure on the unit sphere with the value `ψ(θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereAtom {
    pub theta: Vec<f64>,
    pub mass: f64,
    pub psi: Complex64,
}

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Multiplier symbols. All variants use the convention `a/0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MultiplierSymbol {
    /// `[∫(1 − cos ξ·z)φ dV + ½∫(ξ·θ)²ψ dμ] / [∫(1 − cos ξ·z) dV + ½∫(ξ·θ)² dμ]`
    /// with atomic `V` and `μ`.
    LevyRatio { dim: usize, levy: Vec<LevyAtom>, sphere: Vec<SphereAtom> },
    /// `z̄²/|z|²` on `ℝ² = ℂ`.
    BeurlingAhlfors,
    /// `|ξⱼ|^α / Σᵢ|ξᵢ|^α`, `α ∈ (0, 2]`.
    RieszAlpha { dim: usize, axis: usize, alpha: f64 },
    /// `(|ξ₁|^α − |ξ₂|^α) / Σᵢ|ξᵢ|^α`, `α ∈ [0, 2]`, `d ≥ 2`.
    RieszDiff { dim: usize, alpha: f64 },
    /// `∫|ξ·θ|^α ψ dμ / ∫|ξ·θ|^α dμ`, `α ∈ (0, 2)`.
    SphereAlpha { dim: usize, alpha: f64, sphere: Vec<SphereAtom> },
    /// `∫ln(1 + (ξ·θ)^{−2}) ψ dμ / ∫ln(1 + (ξ·θ)^{−2}) dμ`.
    LogSphere { dim: usize, sphere: Vec<SphereAtom> },
    /// `−i·sign(ξ)` on the line.
    HilbertLine,
    /// `m ≡ 1`.
    Identity { dim: usize },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn ratio(num: Complex64, den: f64) -> Complex64 {
    if den == 0.0 {
        ZERO
    } else {
        num / den
    }
}

impl MultiplierSymbol {
    pub fn dim(&self) -> usize {
        match self {
            Self::LevyRatio { dim, .. }
            | Self::RieszAlpha { dim, .. }
            | Self::RieszDiff { dim, .. }
            | Self::SphereAlpha { dim, .. }
            | Self::LogSphere { dim, .. }
            | Self::Identity { dim } => *dim,
            Self::BeurlingAhlfors => 2,
            Self::HilbertLine => 1,
        }
    }

    /// Levy-ratio symbol of a symmetric atomic Lévy measure with a real
    /// modulator and no sphere part.
    pub fn levy(levy: Vec<LevyAtom>) -> Result<Self> {
        let dim = levy.first().map(|a| a.z.len()).ok_or_else(|| Error::InvalidInput("no atoms".into()))?;
        Ok(Self::LevyRatio { dim, levy, sphere: Vec::new() })
    }

    /// Members of the Lévy-ratio class, whose norm is at most `β_{p,X}`.
    /// Beurling–Ahlfors (norm at most `2β_{p,X}`), the Hilbert transform and
    /// the identity are excluded.
    pub fn in_levy_class(&self) -> bool {
        matches!(
            self,
            Self::LevyRatio { .. } | Self::RieszAlpha { .. } | Self::RieszDiff { .. } | Self::SphereAlpha { .. } | Self::LogSphere { .. }
        )
    }

    /// Name used in reports.
    pub fn label(&self) -> String {
        match self {
            Self::LevyRatio { levy, sphere, .. } => format!("levy_ratio[{}+{}]", levy.len(), sphere.len()),
            Self::BeurlingAhlfors => "beurling_ahlfors".into(),
            Self::RieszAlpha { axis, alpha, dim } => format!("riesz_alpha(j={axis},a={alpha},d={dim})"),
            Self::RieszDiff { alpha, dim } => format!("riesz_diff(a={alpha},d={dim})"),
            Self::SphereAlpha { alpha, sphere, .. } => format!("sphere_alpha(a={alpha},{})", sphere.len()),
            Self::LogSphere { sphere, .. } => format!("log_sphere({})", sphere.len()),
            Self::HilbertLine => "hilbert".into(),
            Self::Identity { dim } => format!("identity(d={dim})"),
        }
    }

    /// `m(ξ)`; `m(0) = 0` except for the identity.
    pub fn eval(&self, xi: &[f64]) -> Result<Complex64> {
        check_dim(self.dim(), xi.len())?;
        Ok(self.eval_unchecked(xi))
    }

    pub(crate) fn eval_unchecked(&self, xi: &[f64]) -> Complex64 {
        if let Self::Identity { .. } = self {
            return Complex64::new(1.0, 0.0);
        }
        if xi.iter().all(|v| *v == 0.0) {
            return ZERO;
        }
        match self {
            Self::LevyRatio { levy, sphere, .. } => {
                let mut num = ZERO;
                let mut den = 0.0;
                for a in levy {
                    let t = a.weight * (1.0 - dot(xi, &a.z).cos());
                    num += a.phi * t;
                    den += t;
                }
                for s in sphere {
                    let t = 0.5 * s.mass * dot(xi, &s.theta).powi(2);
                    num += s.psi * t;
                    den += t;
                }
                ratio(num, den)
            }
            Self::BeurlingAhlfors => {
                let z = Complex64::new(xi[0], -xi[1]);
                ratio(z * z, xi[0] * xi[0] + xi[1] * xi[1])
            }
            Self::RieszAlpha { axis, alpha, .. } => {
                let den: f64 = xi.iter().map(|v| v.abs().powf(*alpha)).sum();
                ratio(Complex64::new(xi[*axis].abs().powf(*alpha), 0.0), den)
            }
            Self::RieszDiff { alpha, .. } => {
                let den: f64 = xi.iter().map(|v| v.abs().powf(*alpha)).sum();
                ratio(Complex64::new(xi[0].abs().powf(*alpha) - xi[1].abs().powf(*alpha), 0.0), den)
            }
            Self::SphereAlpha { alpha, sphere, .. } => {
                let mut num = ZERO;
                let mut den = 0.0;
                for s in sphere {
                    let t = s.mass * dot(xi, &s.theta).abs().powf(*alpha);
                    num += s.psi * t;
                    den += t;
                }
                ratio(num, den)
            }
            Self::LogSphere { sphere, .. } => {
                // atoms with ξ·θ = 0 carry an infinite weight and dominate
                let (mut num0, mut den0) = (ZERO, 0.0);
                let (mut num, mut den) = (ZERO, 0.0);
                for s in sphere {
                    let t = dot(xi, &s.theta);
                    if t == 0.0 {
                        num0 += s.psi * s.mass;
                        den0 += s.mass;
                    } else {
                        let w = s.mass * (1.0 / (t * t)).ln_1p();
                        num += s.psi * w;
                        den += w;
                    }
                }
                if den0 > 0.0 {
                    ratio(num0, den0)
                } else {
                    ratio(num, den)
                }
            }
            Self::HilbertLine => {
                if xi[0] > 0.0 {
                    Complex64::new(0.0, -1.0)
                } else {
                    Complex64::new(0.0, 1.0)
                }
            }
            Self::Identity { .. } => unreachable!(),
        }
    }

    /// Parameter checks: `|φ|, |ψ| ≤ 1`, positive weights, matching
    /// dimensions and exponent ranges. Returns every violation found.
    pub fn parameter_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let check_sphere = |sphere: &[SphereAtom], dim: usize, out: &mut Vec<String>| {
            for (i, s) in sphere.iter().enumerate() {
                if s.theta.len() != dim {
                    out.push(format!("sphere atom {i}: theta has dimension {}, expected {dim}", s.theta.len()));
                } else if (dot(&s.theta, &s.theta).sqrt() - 1.0).abs() > 1e-9 {
                    out.push(format!("sphere atom {i}: theta is not a unit vector"));
                }
                if !(s.mass > 0.0) {
                    out.push(format!("sphere atom {i}: mass {} is not positive", s.mass));
                }
                if !(s.psi.norm() <= 1.0) {
                    out.push(format!("sphere atom {i}: |psi| = {} > 1", s.psi.norm()));
                }
            }
        };
        match self {
            Self::LevyRatio { dim, levy, sphere } => {
                if levy.is_empty() && sphere.is_empty() {
                    out.push("levy ratio needs at least one atom".into());
                }
                for (i, a) in levy.iter().enumerate() {
                    if a.z.len() != *dim {
                        out.push(format!("levy atom {i}: z has dimension {}, expected {dim}", a.z.len()));
                    }
                    if a.z.iter().all(|v| *v == 0.0) {
                        out.push(format!("levy atom {i}: atom at the origin"));
                    }
                    if !(a.weight > 0.0) {
                        out.push(format!("levy atom {i}: weight {} is not positive", a.weight));
                    }
                    if !(a.phi.norm() <= 1.0) {
                        out.push(format!("levy atom {i}: |phi| = {} > 1", a.phi.norm()));
                    }
                }
                check_sphere(sphere, *dim, &mut out);
            }
            Self::RieszAlpha { dim, axis, alpha } => {
                if axis >= dim {
                    out.push(format!("axis {axis} out of range for dimension {dim}"));
                }
                if !(*alpha > 0.0 && *alpha <= 2.0) {
                    out.push(format!("alpha = {alpha} outside (0, 2]"));
                }
            }
            Self::RieszDiff { dim, alpha } => {
                if *dim < 2 {
                    out.push("riesz difference needs d >= 2".into());
                }
                if !(*alpha >= 0.0 && *alpha <= 2.0) {
                    out.push(format!("alpha = {alpha} outside [0, 2]"));
                }
            }
            Self::SphereAlpha { dim, alpha, sphere } => {
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    out.push(format!("alpha = {alpha} outside (0, 2)"));
                }
                if sphere.is_empty() {
                    out.push("sphere measure is empty".into());
                }
                check_sphere(sphere, *dim, &mut out);
            }
            Self::LogSphere { dim, sphere } => {
                if sphere.is_empty() {
                    out.push("sphere measure is empty".into());
                }
                check_sphere(sphere, *dim, &mut out);
            }
            Self::BeurlingAhlfors | Self::HilbertLine | Self::Identity { .. } => {}
        }
        out
    }

    /// Symbol values at every DFT bin of the grid.
    pub fn on_grid(&self, spec: &super::GridSpec) -> Result<Vec<Complex64>> {
        check_dim(self.dim(), spec.d)?;
        Ok((0..spec.points()).map(|i| self.eval_unchecked(&spec.frequency(i))).collect())
    }
}

/// `T_m f = F^{-1}(m·F f)` componentwise.
pub fn apply_multiplier(f: &GridFunction, m: &MultiplierSymbol) -> Result<GridFunction> {
    let symbol = m.on_grid(&f.spec)?;
    Ok(apply_on_grid(&Spectrum::new(f.spec), f, &symbol))
}

pub(crate) fn apply_on_grid(plan: &Spectrum, f: &GridFunction, symbol: &[Complex64]) -> GridFunction {
    let mut g = f.clone();
    plan.forward(&mut g);
    let k = f.spec.k;
    for (i, chunk) in g.values.chunks_mut(k).enumerate() {
        chunk.iter_mut().for_each(|v| *v *= symbol[i]);
    }
    plan.inverse(&mut g);
    g
}

/// Outcome of [`admissibility_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub symbol: String,
    pub samples: usize,
    pub max_abs: f64,
    pub min_re: f64,
    pub max_re: f64,
}

/// Number of random frequencies probed by [`admissibility_check`].
pub const ADMISSIBILITY_SAMPLES: usize = 10_000;

/// Validates the parameters of `m` and samples `|m(ξ)| ≤ 1 + 1e−12` on random
/// frequencies (a log-uniform radius times a random direction, plus points
/// on the coordinate axes).
pub fn admissibility_check(m: &MultiplierSymbol, seed: u64) -> Result<AdmissibilityReport> {
    let violations = m.parameter_violations();
    if !violations.is_empty() {
        return Err(Error::ContractViolation(violations.join("; ")));
    }
    let d = m.dim();
    let mut r = rng::stream(seed, 0xAD);
    let (mut max_abs, mut min_re, mut max_re) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    let mut bad = Vec::new();
    for s in 0..ADMISSIBILITY_SAMPLES {
        let mut xi: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
        if s % 10 == 0 {
            // axis-aligned probes hit the extremes of Riesz-type symbols
            let a = r.random_range(0..d);
            for (i, v) in xi.iter_mut().enumerate() {
                if i != a {
                    *v = 0.0;
                }
            }
        }
        let radius = 10f64.powf(r.random_range(-3.0..3.0));
        xi.iter_mut().for_each(|v| *v *= radius);
        let v = m.eval_unchecked(&xi);
        max_abs = max_abs.max(v.norm());
        min_re = min_re.min(v.re);
        max_re = max_re.max(v.re);
        if !(v.norm() <= 1.0 + 1e-12) && bad.len() < 5 {
            bad.push(format!("|m({xi:?})| = {}", v.norm()));
        }
    }
    if !bad.is_empty() {
        return Err(Error::ContractViolation(bad.join("; ")));
    }
    Ok(AdmissibilityReport { symbol: m.label(), samples: ADMISSIBILITY_SAMPLES, max_abs, min_re, max_re })
}
