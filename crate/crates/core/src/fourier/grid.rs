use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of a uniform periodic grid on `[−L, L)^d` with `k` components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: usize,
    /// Points per axis, a power of two.
    pub n: usize,
    /// Half-period `L`.
    pub half_period: f64,
    /// Number of vector components.
    pub k: usize,
}

impl GridSpec {
    pub fn new(d: usize, n: usize, half_period: f64, k: usize) -> Result<Self> {
        if d == 0 || d > 3 {
            return Err(Error::InvalidInput(format!("grid dimension must be 1..=3, got {d}")));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidInput(format!("points per axis must be a power of two >= 2, got {n}")));
        }
        if !(half_period > 0.0) || !half_period.is_finite() {
            return Err(Error::InvalidInput(format!("half-period must be positive, got {half_period}")));
        }
        if k == 0 {
            return Err(Error::InvalidInput("grid needs at least one component".into()));
        }
        Ok(Self { d, n, half_period, k })
    }

    /// Default periodic surrogate of `ℝ^d`: `L = 16π`, `n = 256` in one
    /// dimension and `128` otherwise.
    pub fn default_for(d: usize) -> Self {
        let n = if d == 1 { 256 } else { 128 };
        Self { d, n, half_period: 16.0 * std::f64::consts::PI, k: 1 }
    }

    pub fn points(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// Grid spacing `2L/n`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_period / self.n as f64
    }

    /// Multi-index of a flat point index, last axis fastest.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.d];
        for a in (0..self.d).rev() {
            idx[a] = flat % self.n;
            flat /= self.n;
        }
        idx
    }

    /// Coordinates `−L + j·2L/n` of a flat point index.
    pub fn coordinates(&self, flat: usize) -> Vec<f64> {
        let h = self.spacing();
        self.multi_index(flat).into_iter().map(|j| -self.half_period + j as f64 * h).collect()
    }

    /// Signed frequency index `k ∈ [−n/2, n/2)` of a DFT bin.
    pub fn signed_bin(&self, j: usize) -> i64 {
        if j < self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    /// Angular frequency `ξ = πk/L` of a flat DFT index.
    pub fn frequency(&self, flat: usize) -> Vec<f64> {
        let s = std::f64::consts::PI / self.half_period;
        self.multi_index(flat).into_iter().map(|j| s * self.signed_bin(j) as f64).collect()
    }

    pub fn frequencies(&self) -> Vec<Vec<f64>> {
        (0..self.points()).map(|i| self.frequency(i)).collect()
    }
}

/// Complex `k`-component function sampled on a periodic grid. Values are
/// stored point-major (row-major over axes, last axis fastest) with the
/// components of a point contiguous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub spec: GridSpec,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(spec: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        crate::error::check_dim(spec.points() * spec.k, values.len())?;
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, values: vec![Complex64::new(0.0, 0.0); spec.points() * spec.k] }
    }

    /// Samples `f(x)` at every grid point; `f` writes the `k` components.
    pub fn from_fn<F: FnMut(&[f64], &mut [Complex64])>(spec: GridSpec, mut f: F) -> Self {
        let mut g = Self::zeros(spec);
        for i in 0..spec.points() {
            let x = spec.coordinates(i);
            f(&x, &mut g.values[i * spec.k..(i + 1) * spec.k]);
        }
        g
    }

    /// Scalar real function sampled on the grid.
    pub fn from_real_fn<F: FnMut(&[f64]) -> f64>(spec: GridSpec, mut f: F) -> Self {
        Self::from_fn(GridSpec { k: 1, ..spec }, |x, out| out[0] = Complex64::new(f(x), 0.0))
    }

    pub fn point(&self, i: usize) -> &[Complex64] {
        &self.values[i * self.spec.k..(i + 1) * self.spec.k]
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    /// Largest pointwise difference to another function on the same grid.
    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Flat little-endian layout: `d, n` (u64), `L` (f64), `k` (u64), then
    /// `(re, im)` f64 pairs in storage order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 16 * self.values.len());
        out.extend_from_slice(&(self.spec.d as u64).to_le_bytes());
        out.extend_from_slice(&(self.spec.n as u64).to_le_bytes());
        out.extend_from_slice(&self.spec.half_period.to_le_bytes());
        out.extend_from_slice(&(self.spec.k as u64).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let word = |i: usize| -> Result<[u8; 8]> {
            bytes
                .get(i * 8..i * 8 + 8)
                .map(|s| s.try_into().expect("8-byte slice"))
                .ok_or_else(|| Error::InvalidInput("grid buffer truncated".into()))
        };
        let d = u64::from_le_bytes(word(0)?) as usize;
        let n = u64::from_le_bytes(word(1)?) as usize;
        let half_period = f64::from_le_bytes(word(2)?);
        let k = u64::from_le_bytes(word(3)?) as usize;
        let spec = GridSpec::new(d, n, half_period, k)?;
        let count = spec.points() * k;
        if bytes.len() != 32 + 16 * count {
            return Err(Error::InvalidInput(format!(
                "grid buffer has {} bytes, expected {}",
                bytes.len(),
                32 + 16 * count
            )));
        }
        let values = (0..count)
            .map(|i| {
                let re = f64::from_le_bytes(word(4 + 2 * i).expect("checked length"));
                let im = f64::from_le_bytes(word(5 + 2 * i).expect("checked length"));
                Complex64::new(re, im)
            })
            .collect();
        Ok(Self { spec, values })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("grid functions serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let g: GridFunction = serde_json::from_str(s).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let spec = GridSpec::new(g.spec.d, g.spec.n, g.spec.half_period, g.spec.k)?;
        Self::new(spec, g.values)
    }
}

/// Unitary DFT plans for one grid shape.
#[derive(Clone)]
pub struct Spectrum {
    spec: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectrum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectrum").field("spec", &self.spec).finish()
    }
}

impl Spectrum {
    pub fn new(spec: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Self { spec, forward: planner.plan_fft_forward(spec.n), inverse: planner.plan_fft_inverse(spec.n) }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Forward DFT in place, normalized by `N^{−1/2}` so that the
    /// coefficient vector has the same ℓ² norm as the samples.
    pub fn forward(&self, f: &mut GridFunction) {
        self.transform(f, true);
    }

    /// Inverse of [`Spectrum::forward`].
    pub fn inverse(&self, f: &mut GridFunction) {
        self.transform(f, false);
    }

    fn transform(&self, f: &mut GridFunction, forward: bool) {
        let GridSpec { d, n, k, .. } = self.spec;
        let plan = if forward { &self.forward } else { &self.inverse };
        let total = self.spec.points();
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for axis in 0..d {
            let stride = n.pow((d - 1 - axis) as u32);
            for start in 0..total {
                // first element of each line along `axis`
                if (start / stride) % n != 0 {
                    continue;
                }
                for c in 0..k {
                    for (j, v) in line.iter_mut().enumerate() {
                        *v = f.values[(start + j * stride) * k + c];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        f.values[(start + j * stride) * k + c] = *v;
                    }
                }
            }
        }
        let s = 1.0 / (total as f64).sqrt();
        f.values.iter_mut().for_each(|v| *v *= s);
    }
}

fn point_norm(v: &[Complex64], q: f64) -> f64 {
    if v.len() == 1 {
        return v[0].norm();
    }
    if q == 2.0 {
        v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    } else {
        v.iter().map(|c| c.norm().powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// `(Σ ‖f(xⱼ)‖^p (2L/n)^d)^{1/p}` with Euclidean aggregation of components.
pub fn lp_norm(f: &GridFunction, p: f64) -> f64 {
    lp_norm_q(f, p, 2.0)
}

/// [`lp_norm`] with `ℓ^q` aggregation of the components at each point.
pub fn lp_norm_q(f: &GridFunction, p: f64, q: f64) -> f64 {
    let k = f.spec.k;
    let cell = f.spec.spacing().powi(f.spec.d as i32);
    let terms: Vec<f64> = f.values.chunks(k).map(|v| point_norm(v, q).powf(p)).collect();
    (crate::stats::pairwise_sum(&terms) * cell).powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn random_grid(spec: GridSpec, seed: u64) -> GridFunction {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values = (0..spec.points() * spec.k)
            .map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
            .collect();
        GridFunction::new(spec, values).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(GridSpec::new(1, 100, 1.0, 1).is_err());
        assert!(GridSpec::new(0, 8, 1.0, 1).is_err());
        assert!(GridSpec::new(1, 8, -1.0, 1).is_err());
        assert!(GridSpec::new(2, 8, 1.0, 0).is_err());
        let s = GridSpec::new(2, 8, 4.0, 1).unwrap();
        assert_eq!(s.coordinates(9), vec![-3.0, -3.0]);
        assert_eq!(s.frequency(15), vec![std::f64::consts::PI / 4.0, -std::f64::consts::PI / 4.0]);
    }

    #[test]
    fn plane_wave_lands_in_one_bin() {
        let spec = GridSpec::new(1, 32, 2.0, 1).unwrap();
        let xi = 3.0 * std::f64::consts::PI / 2.0;
        let mut f = GridFunction::from_fn(spec, |x, out| out[0] = Complex64::from_polar(1.0, xi * x[0]));
        Spectrum::new(spec).forward(&mut f);
        let (imax, _) = f.values.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap();
        assert_eq!(spec.frequency(imax), vec![xi]);
        assert!((f.values[imax].norm() - (32f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constant_norm() {
        let spec = GridSpec::new(2, 16, 3.0, 1).unwrap();
        let f = GridFunction::from_real_fn(spec, |_| 1.0);
        for p in [1.5, 2.0, 3.0] {
            let expect = 6f64.powf(2.0 / p);
            assert!((lp_norm(&f, p) - expect).abs() < 1e-12 * expect);
        }
        assert_eq!(lp_norm(&GridFunction::zeros(spec), 3.0), 0.0);
        let mut g = random_grid(spec, 1);
        let n0 = lp_norm(&g, 2.5);
        g.scale(-3.0);
        assert!((lp_norm(&g, 2.5) - 3.0 * n0).abs() < 1e-12 * n0);
    }

    #[test]
    fn byte_layout_round_trip() {
        let spec = GridSpec::new(2, 4, 1.5, 2).unwrap();
        let g = random_grid(spec, 2);
        let b = g.to_bytes();
        assert_eq!(b.len(), 32 + 16 * 32);
        assert_eq!(&b[0..8], &2u64.to_le_bytes());
        assert_eq!(&b[16..24], &1.5f64.to_le_bytes());
        assert_eq!(&b[32..40], &g.values[0].re.to_le_bytes());
        assert_eq!(GridFunction::from_bytes(&b).unwrap(), g);
        assert!(GridFunction::from_bytes(&b[..40]).is_err());
        assert_eq!(GridFunction::from_json(&g.to_json()).unwrap(), g);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn dft_round_trip_and_parseval(seed in any::<u64>(), d in 1usize..=3, k in 1usize..=2) {
            let n = if d == 3 { 8 } else { 32 };
            let spec = GridSpec::new(d, n, 2.0, k).unwrap();
            let f = random_grid(spec, seed);
            let plan = Spectrum::new(spec);
            let mut g = f.clone();
            plan.forward(&mut g);
            let e0: f64 = f.values.iter().map(|v| v.norm_sqr()).sum();
            let e1: f64 = g.values.iter().map(|v| v.norm_sqr()).sum();
            prop_assert!((e0 - e1).abs() <= 1e-10 * e0);
            plan.inverse(&mut g);
            prop_assert!(g.max_abs_diff(&f) <= 1e-12 * f.max_abs());
        }
    }
}
