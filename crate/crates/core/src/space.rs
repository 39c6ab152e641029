//! Finite-dimensional real normed spaces and the reference constants of the
//! Hilbert/scalar case.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Norm family of a [`NormedSpace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Norm {
    /// `(Σ|vᵢ|^q)^{1/q}` with `q ≥ 1`.
    Lq { q: f64 },
    /// `Y = X ⊕ ℝ` with `‖(x, r)‖ = (‖x‖_X^p + |r|^p)^{1/p}`.
    DirectSumP { inner: Box<NormedSpace>, p: f64 },
}

/// A real space `ℝ^dim` with one of the supported norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormedSpace {
    dim: usize,
    norm: Norm,
}

impl NormedSpace {
    pub fn lq(dim: usize, q: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("space dimension must be at least 1".into()));
        }
        if !(q >= 1.0) || !q.is_finite() {
            return Err(Error::Domain(format!("l^q exponent must satisfy 1 <= q < inf, got {q}")));
        }
        Ok(Self { dim, norm: Norm::Lq { q } })
    }

    /// Euclidean `ℝ^dim`.
    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::lq(dim, 2.0)
    }

    /// The real line.
    pub fn scalar() -> Self {
        Self { dim: 1, norm: Norm::Lq { q: 2.0 } }
    }

    /// `inner ⊕_p ℝ`, of dimension `inner.dim() + 1`.
    pub fn direct_sum(inner: NormedSpace, p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::Domain(format!("direct-sum exponent must satisfy 1 < p < inf, got {p}")));
        }
        Ok(Self { dim: inner.dim + 1, norm: Norm::DirectSumP { inner: Box::new(inner), p } })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm_kind(&self) -> &Norm {
        &self.norm
    }

    /// True for the Euclidean norm, the only case where the sharp constants are known.
    pub fn is_hilbert(&self) -> bool {
        matches!(self.norm, Norm::Lq { q } if q == 2.0)
    }

    /// Revalidates the invariants, e.g. after deserialization.
    pub fn validate(&self) -> Result<()> {
        match &self.norm {
            Norm::Lq { q } => {
                Self::lq(self.dim, *q)?;
            }
            Norm::DirectSumP { inner, p } => {
                inner.validate()?;
                Self::direct_sum((**inner).clone(), *p)?;
                check_dim(inner.dim + 1, self.dim)?;
            }
        }
        Ok(())
    }

    pub fn norm(&self, v: &[f64]) -> Result<f64> {
        check_dim(self.dim, v.len())?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("vector has non-finite entries".into()));
        }
        Ok(self.norm_unchecked(v))
    }

    /// Norm without the length and finiteness checks; for hot loops whose
    /// inputs were validated upstream.
    pub fn norm_unchecked(&self, v: &[f64]) -> f64 {
        match &self.norm {
            Norm::Lq { q } => lq_norm(v, *q),
            Norm::DirectSumP { inner, p } => {
                let (x, r) = v.split_at(inner.dim);
                let a = inner.norm_unchecked(x);
                let b = r[0].abs();
                lq_norm(&[a, b], *p)
            }
        }
    }
}

fn lq_norm(v: &[f64], q: f64) -> f64 {
    if q == 2.0 {
        // scaled to avoid overflow on large entries
        let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if m == 0.0 {
            return 0.0;
        }
        let s: f64 = v.iter().map(|x| (x / m) * (x / m)).sum();
        return m * s.sqrt();
    }
    if q == 1.0 {
        return v.iter().map(|x| x.abs()).sum();
    }
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = v.iter().map(|x| (x.abs() / m).powf(q)).sum();
    m * s.powf(1.0 / q)
}

/// Hölder exponent `p ∈ (1, ∞)` together with its conjugate and `p* = max(p, p')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exponent {
    p: f64,
    conjugate: f64,
    pstar: f64,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::Domain(format!("exponent must lie in (1, inf), got {p}")));
        }
        let conjugate = p / (p - 1.0);
        Ok(Self { p, conjugate, pstar: p.max(conjugate) })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn conjugate(&self) -> f64 {
        self.conjugate
    }

    pub fn pstar(&self) -> f64 {
        self.pstar
    }

    pub fn dual(&self) -> Self {
        Self { p: self.conjugate, conjugate: self.p, pstar: self.pstar }
    }
}

/// UMD constant of a Hilbert space (and of ℝ): `p* − 1`.
pub fn beta_hilbert(p: Exponent) -> f64 {
    p.pstar() - 1.0
}

/// Same as [`beta_hilbert`] for a raw exponent.
pub fn beta_hilbert_raw(p: f64) -> Result<f64> {
    Ok(beta_hilbert(Exponent::new(p)?))
}

/// Coordinate duality `⟨v, w⟩ = Σ vᵢwᵢ`.
pub fn pairing(v: &[f64], w: &[f64]) -> Result<f64> {
    check_dim(v.len(), w.len())?;
    Ok(dot(v, w))
}

pub(crate) fn dot(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn euclidean_norm() {
        let s = NormedSpace::euclidean(2).unwrap();
        assert_eq!(s.norm(&[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(s.norm(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(s.norm(&[1.0]), Err(Error::DimensionMismatch { expected: 2, got: 1 })));
        assert!(s.norm(&[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn direct_sum_norm() {
        let y = NormedSpace::direct_sum(NormedSpace::euclidean(1).unwrap(), 2.0).unwrap();
        assert_eq!(y.dim(), 2);
        assert!((y.norm(&[3.0, 4.0]).unwrap() - 5.0).abs() < 1e-15);
        let y3 = NormedSpace::direct_sum(NormedSpace::lq(3, 1.5).unwrap(), 3.0).unwrap();
        let x = [0.3, -1.2, 2.0];
        let inner = NormedSpace::lq(3, 1.5).unwrap().norm(&x).unwrap();
        assert_eq!(y3.norm(&[x[0], x[1], x[2], 0.0]).unwrap(), inner);
    }

    #[test]
    fn invalid_spaces() {
        assert!(NormedSpace::lq(0, 2.0).is_err());
        assert!(NormedSpace::lq(2, 0.5).is_err());
        assert!(NormedSpace::lq(2, f64::INFINITY).is_err());
        assert!(NormedSpace::direct_sum(NormedSpace::scalar(), 1.0).is_err());
    }

    #[test]
    fn beta_values() {
        assert_eq!(beta_hilbert_raw(2.0).unwrap(), 1.0);
        assert_eq!(beta_hilbert_raw(4.0).unwrap(), 3.0);
        assert!((beta_hilbert_raw(4.0 / 3.0).unwrap() - 3.0).abs() < 1e-12);
        assert!(beta_hilbert_raw(1.0).is_err());
        assert!(beta_hilbert_raw(0.5).is_err());
    }

    #[test]
    fn pairing_values() {
        assert_eq!(pairing(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(pairing(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        assert_eq!(pairing(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 2.0);
        assert!(pairing(&[1.0], &[1.0, 2.0]).is_err());
    }

    fn spaces() -> Vec<NormedSpace> {
        vec![
            NormedSpace::scalar(),
            NormedSpace::euclidean(4).unwrap(),
            NormedSpace::lq(3, 1.0).unwrap(),
            NormedSpace::lq(3, 3.5).unwrap(),
            NormedSpace::direct_sum(NormedSpace::lq(2, 1.5).unwrap(), 2.5).unwrap(),
        ]
    }

    #[test]
    fn homogeneity_and_triangle_on_random_pairs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for s in spaces() {
            for _ in 0..10_000 {
                let v: Vec<f64> = (0..s.dim()).map(|_| rng.random_range(-5.0..5.0)).collect();
                let w: Vec<f64> = (0..s.dim()).map(|_| rng.random_range(-5.0..5.0)).collect();
                let a: f64 = rng.random_range(-3.0..3.0);
                let av: Vec<f64> = v.iter().map(|x| a * x).collect();
                let sum: Vec<f64> = v.iter().zip(&w).map(|(x, y)| x + y).collect();
                let nv = s.norm(&v).unwrap();
                let nw = s.norm(&w).unwrap();
                assert!((s.norm(&av).unwrap() - a.abs() * nv).abs() <= 1e-12 * (1.0 + nv));
                assert!(s.norm(&sum).unwrap() <= nv + nw + 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn beta_is_self_dual(p in 1.01f64..20.0) {
            let e = Exponent::new(p).unwrap();
            prop_assert!((1.0 / e.p() + 1.0 / e.conjugate() - 1.0).abs() < 1e-12);
            prop_assert!(e.pstar() >= 2.0);
            let b = beta_hilbert(e);
            let bd = beta_hilbert(Exponent::new(e.conjugate()).unwrap());
            prop_assert!((b - bd).abs() < 1e-9 * b);
        }
    }
}
