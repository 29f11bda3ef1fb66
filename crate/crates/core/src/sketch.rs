//! TensorSRHT sketch `Π = (1/√s)·P·(H D₁ ⊗ H D₂)` on `R^{n_pad²}`.
//!
//! For a constraint `A`, the sketched column `Π (S⁻¹ᐟ² ⊗ S⁻¹ᐟ²) vec(A)` is
//! obtained without any n²-dimensional object: with
//! `W1 = H D₁ pad(S⁻¹ᐟ²)` and `W2 = H D₂ pad(S⁻¹ᐟ²)` (both `n_pad × n`), the
//! mixed product rule gives `(W1 ⊗ W2) vec(A) = vec(W2 A W1ᵀ)`, so the `k`-th
//! sample is `(W2 A W1ᵀ)[i_k, j_k] / √s = W2[i_k,:] · A · W1[j_k,:]ᵀ / √s`.
//!
//! The rows `W2[i_k,:]` are gathered once per workspace refresh (one copy per
//! distinct `i_k`), so per constraint the work is one `r × n` by `n × n`
//! product, `r = #distinct i_k ≤ min(s, n_pad)`, plus `s` dot products.

use std::io::{Read, Seek};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SdpError};
use crate::instance::ConstraintStream;
use crate::linalg::{self, SymMatrix};

/// Independent sub-seed `k` of `base` (SplitMix64 finalizer).
pub fn derive_seed(base: u64, k: u64) -> u64 {
    let mut z = base.wrapping_add(k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The randomness defining one TensorSRHT instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchSeed {
    pub n: usize,
    pub n_pad: usize,
    pub s: usize,
    /// Rademacher diagonal of `D₁` (paired with the column index `j`).
    pub d1: Vec<f64>,
    /// Rademacher diagonal of `D₂` (paired with the row index `i`).
    pub d2: Vec<f64>,
    /// Sampled coordinates `(i_k, j_k)`, 0-based, in `[0, n_pad)²`.
    pub coords: Vec<(usize, usize)>,
    pub rng_seed: u64,
}

fn rademacher(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len)
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect()
}

impl SketchSeed {
    /// Sketch size from the embedding bound,
    /// `min(n_pad², ⌈c_s · ε⁻² · m · ln³(n·m/(ε·δ))⌉)`.
    pub fn formula_size(n: usize, m: usize, eps: f64, delta: f64, c_s: f64) -> usize {
        let n_pad = n.next_power_of_two();
        let cap = (n_pad * n_pad) as f64;
        let log = ((n * m) as f64 / (eps * delta)).ln();
        let raw = (c_s * m as f64 * log.powi(3) / (eps * eps)).ceil();
        raw.clamp(1.0, cap) as usize
    }

    /// Draws a seed for an `n × n` problem with `m` constraints.
    ///
    /// `s_override` bypasses the formula (and its `n_pad²` cap).
    pub fn new(
        n: usize,
        m: usize,
        eps: f64,
        delta: f64,
        rng_seed: u64,
        s_override: Option<usize>,
    ) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(SdpError::InvalidParameter(format!(
                "sketch needs n, m ≥ 1 (got n={n}, m={m})"
            )));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(SdpError::InvalidParameter(format!(
                "sketch eps {eps} outside (0, 1)"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(SdpError::InvalidParameter(format!(
                "sketch delta {delta} outside (0, 1)"
            )));
        }
        let s = match s_override {
            Some(s) => s,
            None => Self::formula_size(n, m, eps, delta, 1.0),
        };
        Self::with_size(n, s, rng_seed)
    }

    /// Seed with an explicit sketch size; coordinates drawn i.i.d. with replacement.
    pub fn with_size(n: usize, s: usize, rng_seed: u64) -> Result<Self> {
        if n == 0 || s == 0 {
            return Err(SdpError::InvalidParameter(format!(
                "sketch needs n, s ≥ 1 (got n={n}, s={s})"
            )));
        }
        let n_pad = n.next_power_of_two();
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let d1 = rademacher(&mut rng, n_pad);
        let d2 = rademacher(&mut rng, n_pad);
        let coords = (0..s)
            .map(|_| (rng.random_range(0..n_pad), rng.random_range(0..n_pad)))
            .collect();
        Ok(SketchSeed {
            n,
            n_pad,
            s,
            d1,
            d2,
            coords,
            rng_seed,
        })
    }

    /// Test mode: every coordinate of `[0, n_pad)²` sampled exactly once, so
    /// `s = n_pad²` and `ΠᵀΠ = I`.
    pub fn exhaustive(n: usize, rng_seed: u64) -> Result<Self> {
        let mut seed = Self::with_size(n, 1, rng_seed)?;
        let n_pad = seed.n_pad;
        seed.coords = (0..n_pad)
            .flat_map(|j| (0..n_pad).map(move |i| (i, j)))
            .collect();
        seed.s = n_pad * n_pad;
        Ok(seed)
    }

    /// Words held by the seed itself (signs and coordinates).
    pub fn words(&self) -> usize {
        2 * self.n_pad + 2 * self.s
    }

    /// `Π·x` for an arbitrary `x ∈ R^{n_pad²}` given in column-major vec order.
    pub fn apply(&self, x: &[f64]) -> Result<DVector<f64>> {
        let np = self.n_pad;
        if x.len() != np * np {
            return Err(SdpError::DimensionMismatch(format!(
                "sketch input has length {}, expected {}",
                x.len(),
                np * np
            )));
        }
        // (HD₁ ⊗ HD₂) vec(X) = vec(H D₂ X D₁ H).
        let mut t = DMatrix::from_column_slice(np, np, x);
        for j in 0..np {
            for i in 0..np {
                t[(i, j)] *= self.d2[i] * self.d1[j];
            }
        }
        linalg::hadamard_left_mul(&mut t)?;
        t.transpose_mut();
        linalg::hadamard_left_mul(&mut t)?;
        // t now holds (H D₂ X D₁ H)ᵀ.
        let scale = 1.0 / (self.s as f64).sqrt();
        Ok(DVector::from_iterator(
            self.s,
            self.coords.iter().map(|&(i, j)| scale * t[(j, i)]),
        ))
    }
}

/// Transformed copies of `S⁻¹ᐟ²` for one slack matrix.
#[derive(Debug, Clone)]
pub struct SketchWorkspace {
    n: usize,
    n_pad: usize,
    /// `W1ᵀ`, `n × n_pad`; column `j` is row `j` of `W1`.
    w1t: DMatrix<f64>,
    /// Gathered rows of `W2` as columns, `n × r`.
    xt: DMatrix<f64>,
    /// For each sample `k`, the column of `xt` holding `W2[i_k, :]`.
    slot: Vec<usize>,
}

/// Builds `W1 = H D₁ pad(S⁻¹ᐟ²)`, `W2 = H D₂ pad(S⁻¹ᐟ²)` and gathers the sampled rows.
pub fn refresh_workspace(seed: &SketchSeed, s_inv_sqrt: &SymMatrix) -> Result<SketchWorkspace> {
    let n = seed.n;
    if s_inv_sqrt.shape() != (n, n) {
        return Err(SdpError::DimensionMismatch(format!(
            "S^-1/2 is {}x{}, sketch seed expects {n}x{n}",
            s_inv_sqrt.nrows(),
            s_inv_sqrt.ncols()
        )));
    }
    let np = seed.n_pad;
    let transformed = |signs: &[f64]| -> Result<DMatrix<f64>> {
        let mut w = DMatrix::zeros(np, n);
        for j in 0..n {
            for i in 0..n {
                w[(i, j)] = signs[i] * s_inv_sqrt[(i, j)];
            }
        }
        linalg::hadamard_left_mul(&mut w)?;
        Ok(w)
    };
    let w1t = transformed(&seed.d1)?.transpose();
    let w2 = transformed(&seed.d2)?;

    let mut slot_of_row = vec![usize::MAX; np];
    let mut rows = Vec::new();
    let slot = seed
        .coords
        .iter()
        .map(|&(i, _)| {
            if slot_of_row[i] == usize::MAX {
                slot_of_row[i] = rows.len();
                rows.push(i);
            }
            slot_of_row[i]
        })
        .collect();
    let mut xt = DMatrix::zeros(n, rows.len());
    for (c, &i) in rows.iter().enumerate() {
        for p in 0..n {
            xt[(p, c)] = w2[(i, p)];
        }
    }
    Ok(SketchWorkspace {
        n,
        n_pad: np,
        w1t,
        xt,
        slot,
    })
}

impl SketchWorkspace {
    /// `W1 = H D₁ pad(S⁻¹ᐟ²)`, `n_pad × n`.
    pub fn w1(&self) -> DMatrix<f64> {
        self.w1t.transpose()
    }

    /// `X`, `s × n`: row `k` is `W2[i_k, :]`. Materialized on demand for inspection.
    pub fn x(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.slot.len(), self.n, |k, p| self.xt[(p, self.slot[k])])
    }

    /// `Y`, `s × n`: row `k` is `W1[j_k, :]`. Materialized on demand for inspection.
    pub fn y(&self, seed: &SketchSeed) -> DMatrix<f64> {
        DMatrix::from_fn(seed.s, self.n, |k, p| self.w1t[(p, seed.coords[k].1)])
    }

    /// Number of distinct sampled rows of `W2`.
    pub fn distinct_rows(&self) -> usize {
        self.xt.ncols()
    }

    /// Persistent words: `W1` plus the gathered rows of `W2`.
    pub fn words(&self) -> usize {
        self.n * self.n_pad + self.n * self.xt.ncols() + self.slot.len()
    }

    /// Transient words used per constraint by [`sketch_constraint`].
    pub fn scratch_words(&self) -> usize {
        self.n * self.xt.ncols()
    }

    /// Transient words used while building the workspace (`W2` before gathering).
    pub fn build_words(n: usize, n_pad: usize) -> usize {
        n * n_pad
    }
}

/// Sketched column `q = Π (S⁻¹ᐟ² ⊗ S⁻¹ᐟ²) vec(A)`, with
/// `q_k = X[k,:] · A · Y[k,:]ᵀ / √s`.
pub fn sketch_constraint(
    ws: &SketchWorkspace,
    seed: &SketchSeed,
    a: &SymMatrix,
) -> Result<DVector<f64>> {
    if a.shape() != (ws.n, ws.n) {
        return Err(SdpError::DimensionMismatch(format!(
            "constraint is {}x{}, workspace expects {}x{}",
            a.nrows(),
            a.ncols(),
            ws.n,
            ws.n
        )));
    }
    if seed.coords.len() != ws.slot.len() || seed.n_pad != ws.n_pad {
        return Err(SdpError::DimensionMismatch(
            "workspace was built from a different sketch seed".into(),
        ));
    }
    // Column c of zt is (X_c · A)ᵀ = Aᵀ X_cᵀ.
    let zt = a.tr_mul(&ws.xt);
    let scale = 1.0 / (seed.s as f64).sqrt();
    Ok(DVector::from_iterator(
        seed.s,
        seed.coords
            .iter()
            .zip(&ws.slot)
            .map(|(&(_, j), &c)| scale * zt.column(c).dot(&ws.w1t.column(j))),
    ))
}

/// `m × s` matrix whose row `i` is the sketched column of `A_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchedBasis {
    pub q: DMatrix<f64>,
}

impl SketchedBasis {
    pub fn m(&self) -> usize {
        self.q.nrows()
    }

    pub fn s(&self) -> usize {
        self.q.ncols()
    }
}

/// Sketches every constraint in one pass over the stream.
pub fn sketch_all<R: Read + Seek>(
    stream: &mut ConstraintStream<R>,
    ws: &SketchWorkspace,
    seed: &SketchSeed,
) -> Result<SketchedBasis> {
    let mut q = DMatrix::zeros(stream.m(), seed.s);
    stream.scan(|i, a| {
        let row = sketch_constraint(ws, seed, a)?;
        q.row_mut(i).copy_from(&row.transpose());
        Ok(())
    })?;
    if q.iter().any(|v| !v.is_finite()) {
        return Err(SdpError::NonFiniteMatrix("sketched basis"));
    }
    Ok(SketchedBasis { q })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padding_to_power_of_two() {
        assert_eq!(SketchSeed::with_size(3, 4, 0).unwrap().n_pad, 4);
        assert_eq!(SketchSeed::with_size(1, 2, 0).unwrap().n_pad, 1);
        assert_eq!(SketchSeed::with_size(16, 2, 0).unwrap().n_pad, 16);
    }

    #[test]
    fn formula_size_is_capped() {
        // ⌈100 · 4 · ln³(128000)⌉ ≈ 6.9e5 ≫ 1024.
        let seed = SketchSeed::new(32, 4, 0.1, 0.01, 7, None).unwrap();
        assert_eq!(seed.s, 1024);
        assert_eq!(seed.coords.len(), 1024);
        let seed = SketchSeed::new(1, 1, 0.05, 0.05, 7, None).unwrap();
        assert_eq!(seed.s, 1);
    }

    #[test]
    fn formula_size_uncapped_value() {
        // n_pad² = 2^20 leaves room for the raw formula value.
        let (n, m, eps, delta) = (1024usize, 2usize, 0.5, 0.05);
        let expected = (m as f64 * ((n * m) as f64 / (eps * delta)).ln().powi(3) / (eps * eps))
            .ceil() as usize;
        assert_eq!(SketchSeed::formula_size(n, m, eps, delta, 1.0), expected);
    }

    #[test]
    fn parameter_ranges_are_checked() {
        assert!(SketchSeed::new(4, 1, 0.0, 0.01, 0, None).is_err());
        assert!(SketchSeed::new(4, 1, 1.5, 0.01, 0, None).is_err());
        assert!(SketchSeed::new(4, 1, 0.1, 1.0, 0, None).is_err());
        assert!(SketchSeed::new(0, 1, 0.1, 0.01, 0, None).is_err());
    }

    #[test]
    fn seed_invariants_and_regeneration() {
        let a = SketchSeed::new(5, 3, 0.3, 0.05, 99, Some(40)).unwrap();
        let b = SketchSeed::new(5, 3, 0.3, 0.05, 99, Some(40)).unwrap();
        assert_eq!(a, b);
        assert!(a.d1.iter().chain(&a.d2).all(|v| v.abs() == 1.0));
        assert!(a.coords.iter().all(|&(i, j)| i < a.n_pad && j < a.n_pad));
        let c = SketchSeed::new(5, 3, 0.3, 0.05, 100, Some(40)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn exhaustive_covers_every_coordinate_once() {
        let seed = SketchSeed::exhaustive(3, 1).unwrap();
        assert_eq!(seed.s, 16);
        let mut coords = seed.coords.clone();
        coords.sort();
        coords.dedup();
        assert_eq!(coords.len(), 16);
    }

    #[test]
    fn workspace_identity_input() {
        let mut seed = SketchSeed::with_size(2, 4, 0).unwrap();
        seed.d1 = vec![1.0, 1.0];
        seed.d2 = vec![1.0, 1.0];
        let ws = refresh_workspace(&seed, &DMatrix::identity(2, 2)).unwrap();
        let h2 = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]);
        assert_eq!(ws.w1(), h2);

        seed.d1 = vec![1.0, -1.0];
        let ws = refresh_workspace(&seed, &DMatrix::identity(2, 2)).unwrap();
        let flipped = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 1.0, 1.0]);
        assert_eq!(ws.w1(), flipped);
    }

    #[test]
    fn workspace_rejects_wrong_dimension() {
        let seed = SketchSeed::with_size(3, 4, 0).unwrap();
        assert!(refresh_workspace(&seed, &DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn scalar_chain_for_n_equal_one() {
        let seed = SketchSeed::with_size(1, 5, 3).unwrap();
        let s_val: f64 = 4.0;
        let s_inv_sqrt = DMatrix::from_element(1, 1, 1.0 / s_val.sqrt());
        let ws = refresh_workspace(&seed, &s_inv_sqrt).unwrap();
        let a = DMatrix::from_element(1, 1, 3.0);
        let q = sketch_constraint(&ws, &seed, &a).unwrap();
        let expected = seed.d1[0] * seed.d2[0] * 3.0 / s_val / 5f64.sqrt();
        for v in q.iter() {
            assert!((v - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_constraint_sketches_to_zero() {
        let seed = SketchSeed::with_size(6, 20, 3).unwrap();
        let ws = refresh_workspace(&seed, &DMatrix::identity(6, 6)).unwrap();
        let q = sketch_constraint(&ws, &seed, &DMatrix::zeros(6, 6)).unwrap();
        assert!(q.iter().all(|v| *v == 0.0));
        assert!(sketch_constraint(&ws, &seed, &DMatrix::zeros(5, 5)).is_err());
    }

    #[test]
    fn distinct_rows_bounded_by_padding() {
        let seed = SketchSeed::with_size(8, 500, 1).unwrap();
        let ws = refresh_workspace(&seed, &DMatrix::identity(8, 8)).unwrap();
        assert!(ws.distinct_rows() <= 8);
        assert_eq!(ws.x().nrows(), 500);
        assert_eq!(ws.y(&seed).nrows(), 500);
    }
}
