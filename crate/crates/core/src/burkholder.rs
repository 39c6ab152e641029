//! Burkholder functions: Wang's closed form for Hilbert targets, the
//! variational lower approximation, and finite-difference probes of the
//! concavity conditions.

use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::rng;
use crate::space::{beta_hilbert, Exponent, NormedSpace};

/// A real function on `X × X`.
pub trait BiFunction: Sync {
    fn eval(&self, x: &[f64], y: &[f64]) -> f64;
}

impl<F> BiFunction for F
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self(x, y)
    }
}

/// Space, exponent and constant of a Burkholder-type inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BurkholderParams {
    pub space: NormedSpace,
    pub p: Exponent,
    pub beta: f64,
}

impl BurkholderParams {
    /// Fails when `beta < p* − 1`: no Burkholder function exists below the
    /// UMD constant, and every nontrivial space has `β_{p,X} ≥ p* − 1`.
    pub fn new(space: NormedSpace, p: Exponent, beta: f64) -> Result<Self> {
        let min = beta_hilbert(p);
        if !(beta >= min) {
            return Err(Error::Domain(format!("beta = {beta} is below p* - 1 = {min}")));
        }
        Ok(Self { space, p, beta })
    }

    /// Hilbert-space parameters with the sharp constant `β = p* − 1`.
    pub fn sharp_hilbert(dim: usize, p: Exponent) -> Result<Self> {
        Self::new(NormedSpace::euclidean(dim)?, p, beta_hilbert(p))
    }
}

/// `U(x, y) = p(1 − 1/p*)^{p−1} (‖y‖ − (p*−1)‖x‖)(‖x‖ + ‖y‖)^{p−1}` on a
/// Euclidean space.
#[derive(Debug, Clone, Copy)]
pub struct WangU {
    p: f64,
    pstar: f64,
    alpha: f64,
}

impl WangU {
    pub fn new(p: Exponent) -> Self {
        let pstar = p.pstar();
        let alpha = p.p() * (1.0 - 1.0 / pstar).powf(p.p() - 1.0);
        Self { p: p.p(), pstar, alpha }
    }

    /// Value from the two norms.
    pub fn from_norms(&self, nx: f64, ny: f64) -> f64 {
        let s = nx + ny;
        if s == 0.0 {
            return 0.0;
        }
        if self.p == 2.0 {
            // exact collapse of the formula at p = 2
            return ny * ny - nx * nx;
        }
        self.alpha * (ny - (self.pstar - 1.0) * nx) * s.powf(self.p - 1.0)
    }
}

impl BiFunction for WangU {
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.from_norms(euclid(x), euclid(y))
    }
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn require_hilbert(params: &BurkholderParams) -> Result<()> {
    if !params.space.is_hilbert() {
        return Err(Error::UnsupportedSpace(
            "Wang's function is defined for Euclidean norms only".into(),
        ));
    }
    Ok(())
}

pub fn wang_u(params: &BurkholderParams, x: &[f64], y: &[f64]) -> Result<f64> {
    require_hilbert(params)?;
    check_dim(params.space.dim(), x.len())?;
    check_dim(params.space.dim(), y.len())?;
    Ok(WangU::new(params.p).eval(x, y))
}

/// `V(x, y) = U((x − y)/2, (x + y)/2)`.
pub fn v_from_u<U: BiFunction + ?Sized>(u: &U, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    let (a, b) = half_rotate(x, y);
    Ok(u.eval(&a, &b))
}

fn half_rotate(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let a = x.iter().zip(y).map(|(s, t)| 0.5 * (s - t)).collect();
    let b = x.iter().zip(y).map(|(s, t)| 0.5 * (s + t)).collect();
    (a, b)
}

/// `U(x, y) − (‖y‖^p − β^p‖x‖^p)` for Wang's function. Nonnegative for every
/// input when `β = p* − 1`.
pub fn check_majorization(params: &BurkholderParams, x: &[f64], y: &[f64]) -> Result<f64> {
    let u = wang_u(params, x, y)?;
    Ok(u - lower_payoff(params, x, y))
}

/// `‖y‖^p − β^p‖x‖^p`, the payoff a Burkholder function must majorize.
pub fn lower_payoff(params: &BurkholderParams, x: &[f64], y: &[f64]) -> f64 {
    let nx = params.space.norm_unchecked(x);
    let ny = params.space.norm_unchecked(y);
    let p = params.p.p();
    ny.powf(p) - params.beta.powf(p) * nx.powf(p)
}

/// Probe filter for derivative checks: rejects points near the nonsmooth
/// locus `‖x‖ = 0` or `‖y‖ = 0` and near the origin.
pub fn is_admissible_probe(nx: f64, ny: f64) -> bool {
    let s = nx + ny;
    s >= 0.1 && nx.min(ny) >= 0.05 * s
}

/// Finite-difference step used by the concavity probes.
pub const FD_STEP: f64 = 1e-4;

fn second_difference(plus: f64, centre: f64, minus: f64, h: f64) -> f64 {
    ((plus - centre) + (minus - centre)) / (h * h)
}

fn axpy(x: &[f64], t: f64, z: &[f64]) -> Vec<f64> {
    x.iter().zip(z).map(|(a, b)| a + t * b).collect()
}

/// Central second difference of `t ↦ u(x + tz, y + εtz)` at `t = 0`.
pub fn zigzag_deficit<U: BiFunction + ?Sized>(
    u: &U,
    x: &[f64],
    y: &[f64],
    z: &[f64],
    eps: f64,
    h: f64,
) -> f64 {
    let c = u.eval(x, y);
    let p = u.eval(&axpy(x, h, z), &axpy(y, eps * h, z));
    let m = u.eval(&axpy(x, -h, z), &axpy(y, -eps * h, z));
    second_difference(p, c, m, h)
}

/// Central second difference at `t = 0` of
/// `t ↦ u(x + tz₁, y + tz₂) + u(x + tz₂, y − tz₁)`.
pub fn orthogonal_deficit<U: BiFunction + ?Sized>(
    u: &U,
    x: &[f64],
    y: &[f64],
    z1: &[f64],
    z2: &[f64],
    h: f64,
) -> f64 {
    let c = 2.0 * u.eval(x, y);
    let p = u.eval(&axpy(x, h, z1), &axpy(y, h, z2)) + u.eval(&axpy(x, h, z2), &axpy(y, -h, z1));
    let m = u.eval(&axpy(x, -h, z1), &axpy(y, -h, z2)) + u.eval(&axpy(x, -h, z2), &axpy(y, h, z1));
    second_difference(p, c, m, h)
}

/// Central-difference gradients `(∂ₓV, ∂ᵧV)` of `V = v_from_u(u, ·, ·)`.
pub fn v_gradient<U: BiFunction + ?Sized>(u: &U, x: &[f64], y: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let v = |a: &[f64], b: &[f64]| {
        let (s, t) = half_rotate(a, b);
        u.eval(&s, &t)
    };
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    let mut xp = x.to_vec();
    let mut yp = y.to_vec();
    for i in 0..n {
        xp[i] = x[i] + h;
        let fp = v(&xp, y);
        xp[i] = x[i] - h;
        let fm = v(&xp, y);
        xp[i] = x[i];
        gx[i] = (fp - fm) / (2.0 * h);

        yp[i] = y[i] + h;
        let fp = v(x, &yp);
        yp[i] = y[i] - h;
        let fm = v(x, &yp);
        yp[i] = y[i];
        gy[i] = (fp - fm) / (2.0 * h);
    }
    (gx, gy)
}

/// `max(‖∂ₓV‖, ‖∂ᵧV‖) / (‖x‖^{p−1} + ‖y‖^{p−1})`, the quantity bounded by a
/// constant for Wang's function.
pub fn gradient_growth_ratio<U: BiFunction + ?Sized>(u: &U, p: f64, x: &[f64], y: &[f64], h: f64) -> f64 {
    let (gx, gy) = v_gradient(u, x, y, h);
    let num = euclid(&gx).max(euclid(&gy));
    let den = euclid(x).powf(p - 1.0) + euclid(y).powf(p - 1.0);
    num / den
}

/// Scalar increment magnitudes of the search stencil.
pub const STENCIL: [f64; 3] = [1.0, 0.5, 0.25];
/// Admissible transform coefficients of the search.
pub const EPSILONS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

/// Search controls for [`sup_u_approx`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupSearch {
    pub depth: usize,
    pub branching: usize,
    /// Maximum number of payoff evaluations.
    pub budget: u64,
    pub seed: u64,
}

impl Default for SupSearch {
    fn default() -> Self {
        Self { depth: 2, branching: 2, budget: 50_000_000, seed: 0 }
    }
}

/// Result of [`sup_u_approx`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupEstimate {
    pub value: f64,
    pub evaluations: u64,
    pub budget_exhausted: bool,
}

/// Levels closest to the leaves that are searched exhaustively.
const EXHAUSTIVE_LEVELS: usize = 2;
/// Moves sampled per node above the exhaustive levels.
const BEAM_WIDTH: usize = 16;

#[derive(Debug, Clone)]
struct Move {
    children: Vec<(f64, Vec<f64>)>,
    eps: f64,
}

fn build_moves(dim: usize, branching: usize) -> Vec<Move> {
    let mut supports: Vec<Vec<(f64, Vec<f64>)>> = Vec::new();
    let axis = |i: usize, s: f64| {
        let mut v = vec![0.0; dim];
        v[i] = s;
        v
    };
    if branching >= 2 {
        for i in 0..dim {
            for &a in &STENCIL {
                for &b in &STENCIL {
                    // mean zero: w_a·a = w_b·b
                    supports.push(vec![(b / (a + b), axis(i, a)), (a / (a + b), axis(i, -b))]);
                }
            }
        }
    }
    if branching >= 3 && dim >= 2 {
        for i in 0..dim {
            for j in (i + 1)..dim {
                supports.extend(planar_triangles(dim, i, j));
            }
        }
    }
    let mut moves = Vec::with_capacity(supports.len() * EPSILONS.len());
    for s in &supports {
        for &eps in &EPSILONS {
            moves.push(Move { children: s.clone(), eps });
        }
    }
    moves
}

/// Three-point mean-zero distributions on the stencil of the `(i, j)` plane,
/// which includes the two diagonals.
fn planar_triangles(dim: usize, i: usize, j: usize) -> Vec<Vec<(f64, Vec<f64>)>> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let dirs = [(1.0, 0.0), (0.0, 1.0), (r, r), (r, -r)];
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for &(a, b) in &dirs {
        for &s in &STENCIL {
            pts.push((s * a, s * b));
            pts.push((-s * a, -s * b));
        }
    }
    let mut out = Vec::new();
    for a in 0..pts.len() {
        for b in (a + 1)..pts.len() {
            for c in (b + 1)..pts.len() {
                let (p, q, r) = (pts[a], pts[b], pts[c]);
                let det = (q.0 - p.0) * (r.1 - p.1) - (r.0 - p.0) * (q.1 - p.1);
                if det.abs() < 1e-12 {
                    continue;
                }
                // barycentric coordinates of the origin
                let l1 = ((q.0) * (r.1) - (r.0) * (q.1)) / det;
                let l2 = ((r.0) * (p.1) - (p.0) * (r.1)) / det;
                let l3 = 1.0 - l1 - l2;
                if l1 <= 1e-12 || l2 <= 1e-12 || l3 <= 1e-12 {
                    continue;
                }
                let lift = |pt: (f64, f64)| {
                    let mut v = vec![0.0; dim];
                    v[i] = pt.0;
                    v[j] = pt.1;
                    v
                };
                out.push(vec![(l1, lift(p)), (l2, lift(q)), (l3, lift(r))]);
            }
        }
    }
    out
}

struct Searcher<'a> {
    params: &'a BurkholderParams,
    moves: std::rc::Rc<[Move]>,
    budget: u64,
    evaluations: u64,
    seed: u64,
}

impl Searcher<'_> {
    fn payoff(&mut self, x: &[f64], y: &[f64]) -> f64 {
        self.evaluations += 1;
        lower_payoff(self.params, x, y)
    }

    fn value(&mut self, x: &[f64], y: &[f64], remaining: usize, node: u64) -> f64 {
        let stop = self.payoff(x, y);
        if remaining == 0 || self.evaluations >= self.budget {
            return stop;
        }
        let n_moves = self.moves.len();
        let chosen: Vec<usize> = if remaining <= EXHAUSTIVE_LEVELS || n_moves <= BEAM_WIDTH {
            (0..n_moves).collect()
        } else {
            let mut r = rng::stream(self.seed, node);
            let mut idx = sample(&mut r, n_moves, BEAM_WIDTH).into_vec();
            idx.sort_unstable();
            idx
        };
        let moves = self.moves.clone();
        let mut best = stop;
        for (k, &m) in chosen.iter().enumerate() {
            let mv = &moves[m];
            let mut acc = 0.0;
            for (c, (w, d)) in mv.children.iter().enumerate() {
                let xn = axpy(x, 1.0, d);
                let yn = axpy(y, mv.eps, d);
                let child = rng::mix(node, (k * 8 + c + 1) as u64);
                acc += w * self.value(&xn, &yn, remaining - 1, child);
            }
            best = best.max(acc);
            if self.evaluations >= self.budget {
                break;
            }
        }
        best
    }
}

/// Lower approximation of the minimal Burkholder function
/// `sup E(‖g_∞‖^p − β^p‖f_∞‖^p)` over finite martingale trees started at
/// `(x, y)` with `dgₙ = εₙ dfₙ`.
///
/// Each node either stops or splits into a mean-zero distribution on the
/// stencil `{±1, ±1/2, ±1/4}·(unit direction)` (two points along an axis; three
/// points in a coordinate plane when `branching ≥ 3`) with one coefficient
/// `ε ∈ {−1, −1/2, 0, 1/2, 1}` per node. The last two levels are exhaustive,
/// higher levels sample a seeded beam. The value is a maximum over depths
/// `0..=depth`, hence nondecreasing in `depth`.
pub fn sup_u_approx(params: &BurkholderParams, x: &[f64], y: &[f64], search: SupSearch) -> Result<SupEstimate> {
    check_dim(params.space.dim(), x.len())?;
    check_dim(params.space.dim(), y.len())?;
    if search.depth > 6 || search.branching > 4 {
        return Err(Error::Domain("sup search supports depth <= 6 and branching <= 4".into()));
    }
    let mut s = Searcher {
        params,
        moves: build_moves(params.space.dim(), search.branching).into(),
        budget: search.budget.max(1),
        evaluations: 0,
        seed: search.seed,
    };
    let mut best = f64::NEG_INFINITY;
    for d in 0..=search.depth {
        let v = s.value(x, y, d, rng::mix(search.seed, d as u64));
        best = best.max(v);
        if s.evaluations >= s.budget {
            break;
        }
    }
    Ok(SupEstimate { value: best, evaluations: s.evaluations, budget_exhausted: s.evaluations >= s.budget })
}

/// Draws a random probe `(x, y)` with `‖x‖ + ‖y‖ ≤ radius`, resampling until it
/// passes [`is_admissible_probe`] when `admissible` is set.
pub fn random_probe<R: Rng>(rng: &mut R, dim: usize, radius: f64, admissible: bool) -> (Vec<f64>, Vec<f64>) {
    loop {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = euclid(&x) + euclid(&y);
        if s == 0.0 {
            continue;
        }
        let scale = radius * rng.random_range(0.0..1.0f64) / s;
        let x: Vec<f64> = x.iter().map(|a| a * scale).collect();
        let y: Vec<f64> = y.iter().map(|a| a * scale).collect();
        if !admissible || is_admissible_probe(euclid(&x), euclid(&y)) {
            return (x, y);
        }
    }
}

/// Random direction with entries uniform in `[-1, 1]`.
pub fn random_direction<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(dim: usize, p: f64) -> BurkholderParams {
        BurkholderParams::sharp_hilbert(dim, Exponent::new(p).unwrap()).unwrap()
    }

    #[test]
    fn wang_closed_form_values() {
        let pr = params(2, 2.0);
        assert_eq!(wang_u(&pr, &[1.0, 0.0], &[0.0, 2.0]).unwrap(), 3.0);
        assert_eq!(wang_u(&pr, &[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        // p = 3: 3·(2/3)²·(0 − 2·1)·1² = −8/3
        let pr3 = params(2, 3.0);
        let v = wang_u(&pr3, &[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!((v + 8.0 / 3.0).abs() < 1e-14, "{v}");
    }

    #[test]
    fn wang_rejects_non_hilbert() {
        let pr = BurkholderParams::new(NormedSpace::lq(2, 3.0).unwrap(), Exponent::new(2.0).unwrap(), 5.0).unwrap();
        assert!(matches!(wang_u(&pr, &[1.0, 0.0], &[0.0, 0.0]), Err(Error::UnsupportedSpace(_))));
        assert!(BurkholderParams::new(NormedSpace::scalar(), Exponent::new(3.0).unwrap(), 1.5).is_err());
    }

    #[test]
    fn v_from_u_examples() {
        let u = WangU::new(Exponent::new(2.0).unwrap());
        let x = [1.5, -0.5];
        assert_eq!(v_from_u(&u, &x, &x).unwrap(), u.eval(&[0.0, 0.0], &x));
        let mx = [-1.5, 0.5];
        assert_eq!(v_from_u(&u, &x, &mx).unwrap(), u.eval(&x, &[0.0, 0.0]));
        assert_eq!(v_from_u(&u, &[2.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert!(v_from_u(&u, &[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn majorization_examples() {
        let pr = params(2, 2.0);
        assert_eq!(check_majorization(&pr, &[0.0, 0.0], &[0.0, 3.0]).unwrap(), 0.0);
        assert_eq!(check_majorization(&pr, &[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(check_majorization(&pr, &[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        for p in [1.5, 3.0, 4.0] {
            let pr = params(1, p);
            assert!(check_majorization(&pr, &[0.0], &[2.0]).unwrap() >= 0.0);
        }
    }

    #[test]
    fn zigzag_examples() {
        let lin = |x: &[f64], y: &[f64]| 2.0 * x[0] - 3.0 * y[1] + 1.0;
        assert!(zigzag_deficit(&lin, &[1.0, 2.0], &[0.5, 0.5], &[0.3, -0.7], 0.4, FD_STEP).abs() < 1e-6);
        let u = WangU::new(Exponent::new(2.0).unwrap());
        let z = [0.6, -0.8];
        let d0 = zigzag_deficit(&u, &[1.0, 0.2], &[-0.3, 0.9], &z, 0.0, FD_STEP);
        assert!((d0 + 2.0).abs() < 1e-6, "{d0}");
        let d1 = zigzag_deficit(&u, &[1.0, 0.2], &[-0.3, 0.9], &z, 1.0, FD_STEP);
        assert!(d1.abs() < 1e-6);
    }

    #[test]
    fn orthogonal_examples() {
        let u = WangU::new(Exponent::new(2.0).unwrap());
        let zero = [0.0, 0.0];
        assert_eq!(orthogonal_deficit(&u, &[1.0, 0.0], &[0.0, 1.0], &zero, &zero, FD_STEP), 0.0);
        let d = orthogonal_deficit(&u, &[1.0, 0.3], &[0.2, 1.0], &[0.5, 0.1], &[-0.4, 0.9], FD_STEP);
        assert!(d.abs() < 1e-6);
        let u3 = WangU::new(Exponent::new(3.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let (x, y) = random_probe(&mut rng, 3, 2.0, true);
            let z1 = random_direction(&mut rng, 3);
            let z2 = random_direction(&mut rng, 3);
            assert!(orthogonal_deficit(&u3, &x, &y, &z1, &z2, FD_STEP) <= 1e-6);
        }
    }

    #[test]
    fn gradient_growth_is_scale_free() {
        let u = WangU::new(Exponent::new(3.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut c: f64 = 0.0;
        for _ in 0..5000 {
            let (x, y) = random_probe(&mut rng, 2, 1.0, true);
            c = c.max(gradient_growth_ratio(&u, 3.0, &x, &y, 1e-6));
        }
        let c = 1.1 * c;
        for _ in 0..5000 {
            let (x, y) = random_probe(&mut rng, 2, 10.0, true);
            assert!(gradient_growth_ratio(&u, 3.0, &x, &y, 1e-5) <= c);
        }
    }

    #[test]
    fn sup_search_small_cases() {
        let pr = params(1, 2.0);
        let s0 = sup_u_approx(&pr, &[1.0], &[0.5], SupSearch { depth: 0, ..Default::default() }).unwrap();
        assert_eq!(s0.value, 0.25 - 1.0);
        let s = sup_u_approx(&pr, &[1.0], &[1.0], SupSearch { depth: 3, ..Default::default() }).unwrap();
        assert!(s.value.abs() < 1e-12, "{}", s.value);
        assert!(sup_u_approx(&pr, &[1.0], &[1.0], SupSearch { depth: 7, ..Default::default() }).is_err());
        let tiny = sup_u_approx(&pr, &[1.0], &[0.0], SupSearch { depth: 3, budget: 10, ..Default::default() }).unwrap();
        assert!(tiny.budget_exhausted);
    }

    #[test]
    fn sup_search_is_below_wang_in_the_plane() {
        let pr = params(2, 3.0);
        let u = WangU::new(pr.p);
        let x = [0.4, -0.2];
        let y = [0.1, 0.3];
        let mut prev = f64::NEG_INFINITY;
        for depth in 0..=2 {
            let s = sup_u_approx(&pr, &x, &y, SupSearch { depth, branching: 3, ..Default::default() }).unwrap();
            assert!(s.value >= prev);
            assert!(s.value <= u.eval(&x, &y) + 1e-9);
            prev = s.value;
        }
    }
}
