//! Dense symmetric kernels.
//!
//! Vectorization is column-major throughout: `vec` stacks columns, and the
//! Kronecker product follows the standard block layout, so that
//! `(B ⊗ A) vec(X) = vec(A X Bᵀ)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Result, SdpError};

/// Dense symmetric matrix. Symmetry is a checked invariant, not a storage format.
pub type SymMatrix = DMatrix<f64>;

/// Relative symmetry tolerance: `‖M − Mᵀ‖_max ≤ SYM_TOL·(1 + ‖M‖_max)`.
pub const SYM_TOL: f64 = 1e-9;

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn check_symmetric(m: &DMatrix<f64>, what: impl FnOnce() -> String) -> Result<()> {
    if !m.is_square() {
        return Err(SdpError::DimensionMismatch(format!(
            "{} is {}x{}, expected square",
            what(),
            m.nrows(),
            m.ncols()
        )));
    }
    let asym = asymmetry(m);
    if asym > SYM_TOL * (1.0 + max_abs(m)) {
        return Err(SdpError::Asymmetric {
            what: what(),
            asymmetry: asym,
        });
    }
    Ok(())
}

/// Replaces `m` with `(m + mᵀ)/2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

fn checked_eigen(m: DMatrix<f64>, what: &str) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(SdpError::NonFiniteEigenvalue(what.to_string()));
    }
    let eig = SymmetricEigen::new(m);
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(SdpError::NonFiniteEigenvalue(what.to_string()));
    }
    Ok(eig)
}

pub fn eigenvalues(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    Ok(checked_eigen(m.clone(), "eigenvalues")?.eigenvalues)
}

/// Schatten 1-norm of a symmetric matrix, `Σ |λ_j|`.
pub fn schatten1(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|v| v.abs()).sum())
}

/// Spectral norm of a symmetric matrix, `max |λ_j|`.
pub fn spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().fold(0.0_f64, |a, v| a.max(v.abs())))
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?.min())
}

/// Positive-definiteness threshold for a slack matrix, relative to its mean eigenvalue.
pub fn pd_tolerance(s: &DMatrix<f64>) -> f64 {
    1e-12 * s.trace() / s.nrows() as f64
}

/// `S`, `S⁻¹`, `S⁻¹ᐟ²` and spectral summaries of a positive definite slack.
#[derive(Debug, Clone)]
pub struct SlackFactors {
    pub s: SymMatrix,
    pub s_inv: SymMatrix,
    pub s_inv_sqrt: SymMatrix,
    pub min_eig: f64,
    pub log_det: f64,
}

impl SlackFactors {
    pub fn n(&self) -> usize {
        self.s.nrows()
    }
}

/// Eigendecomposition of a candidate slack, before the inverse factors are built.
///
/// Splitting the two stages lets the driver test a trial point (PD check and
/// `log det`) without holding a second full set of factors.
#[derive(Debug, Clone)]
pub struct SlackEigen {
    s: SymMatrix,
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl SlackEigen {
    pub fn new(s: SymMatrix) -> Result<Self> {
        check_symmetric(&s, || "slack matrix".to_string())?;
        let eig = checked_eigen(s.clone(), "slack matrix")?;
        Ok(SlackEigen {
            s,
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    pub fn min_eig(&self) -> f64 {
        self.values.min()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.min_eig() > pd_tolerance(&self.s).max(0.0)
    }

    /// `log det S`; only meaningful when positive definite.
    pub fn log_det(&self) -> f64 {
        self.values.iter().map(|v| v.ln()).sum()
    }

    pub fn into_factors(self) -> Result<SlackFactors> {
        let tol = pd_tolerance(&self.s);
        let min_eig = self.min_eig();
        if min_eig <= tol.max(0.0) {
            return Err(SdpError::NotPositiveDefinite { min_eig, tol });
        }
        let log_det = self.log_det();
        let q = self.vectors;
        // V = Q Λ^{-1/2}: S⁻¹ᐟ² = V Qᵀ and S⁻¹ = V Vᵀ.
        let mut v = q.clone();
        for (j, lambda) in self.values.iter().enumerate() {
            let scale = 1.0 / lambda.sqrt();
            v.column_mut(j).scale_mut(scale);
        }
        let mut s_inv_sqrt = &v * q.transpose();
        let mut s_inv = &v * v.transpose();
        symmetrize(&mut s_inv_sqrt);
        symmetrize(&mut s_inv);
        Ok(SlackFactors {
            s: self.s,
            s_inv,
            s_inv_sqrt,
            min_eig,
            log_det,
        })
    }
}

/// Full eigendecomposition of the slack and its inverse factors.
///
/// Fails with [`SdpError::NotPositiveDefinite`] when the smallest eigenvalue is
/// at or below `1e-12 · trace(S)/n`.
pub fn slack_factors(s: SymMatrix) -> Result<SlackFactors> {
    SlackEigen::new(s)?.into_factors()
}

/// In-place unnormalized fast Walsh–Hadamard transform (Sylvester ordering).
pub fn fwht(x: &mut [f64]) -> Result<()> {
    let len = x.len();
    if !len.is_power_of_two() {
        return Err(SdpError::NotPowerOfTwo(len));
    }
    let mut h = 1;
    while h < len {
        for block in x.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*a, *b);
                *a = u + v;
                *b = u - v;
            }
        }
        h *= 2;
    }
    Ok(())
}

/// Replaces `m` with `H·m`, where `H` is the ±1 Sylvester Hadamard matrix of
/// order `m.nrows()`. Costs O(rows·cols·log rows).
pub fn hadamard_left_mul(m: &mut DMatrix<f64>) -> Result<()> {
    if !m.nrows().is_power_of_two() {
        return Err(SdpError::NotPowerOfTwo(m.nrows()));
    }
    // Column-major storage makes every column a contiguous slice.
    let rows = m.nrows();
    for col in m.as_mut_slice().chunks_exact_mut(rows) {
        fwht(col)?;
    }
    Ok(())
}

/// `tr[A·B]` without forming the product.
pub fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() != b.ncols() || a.ncols() != b.nrows() {
        return Err(SdpError::DimensionMismatch(format!(
            "trace product of {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    // tr[AB] = Σ_{p,q} A_pq B_qp = Σ_{p,q} A_pq (Bᵀ)_pq.
    let mut acc = 0.0;
    for p in 0..a.nrows() {
        for q in 0..a.ncols() {
            acc += a[(p, q)] * b[(q, p)];
        }
    }
    Ok(acc)
}

/// Column-major vectorization.
pub fn vec_col(a: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(a.as_slice())
}

/// Kronecker product `a ⊗ b` with `(a⊗b)[i·rb + k, j·cb + l] = a[i,j]·b[k,l]`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = DMatrix::zeros(ra * rb, ca * cb);
    for j in 0..ca {
        for i in 0..ra {
            let aij = a[(i, j)];
            for l in 0..cb {
                for k in 0..rb {
                    out[(i * rb + k, j * cb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Explicit ±1 Sylvester Hadamard matrix. Test-scale only.
pub fn sylvester_hadamard(order: usize) -> Result<DMatrix<f64>> {
    if !order.is_power_of_two() {
        return Err(SdpError::NotPowerOfTwo(order));
    }
    Ok(DMatrix::from_fn(order, order, |i, j| {
        if (i & j).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }))
}

/// `(m1 ⊗ m2)·vec(a)` computed twice: by materializing the Kronecker product
/// and as `vec(m2·a·m1ᵀ)`. Errors if the two disagree beyond `1e-10` relative,
/// which would indicate a vec-convention bug. Intended for n ≤ 64.
pub fn vec_kron_oracle(
    m1: &DMatrix<f64>,
    m2: &DMatrix<f64>,
    a: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    if m1.ncols() != a.ncols() || m2.ncols() != a.nrows() {
        return Err(SdpError::DimensionMismatch(format!(
            "kron({}x{}, {}x{}) applied to vec of {}x{}",
            m1.nrows(),
            m1.ncols(),
            m2.nrows(),
            m2.ncols(),
            a.nrows(),
            a.ncols()
        )));
    }
    let explicit = kron(m1, m2) * vec_col(a);
    let via_product = vec_col(&(m2 * a * m1.transpose()));
    let scale = 1.0 + via_product.amax();
    let gap = (&explicit - &via_product).amax();
    if gap > 1e-10 * scale {
        return Err(SdpError::DimensionMismatch(format!(
            "Kronecker/vec paths disagree by {gap:e}"
        )));
    }
    Ok(via_product)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let g = random_matrix(rng, n, n);
        &g * g.transpose() + DMatrix::identity(n, n)
    }

    #[test]
    fn slack_factors_identity() {
        let f = slack_factors(DMatrix::identity(3, 3)).unwrap();
        assert!((f.s_inv_sqrt.clone() - DMatrix::identity(3, 3)).amax() < 1e-14);
        assert!((f.min_eig - 1.0).abs() < 1e-14);
        assert!(f.log_det.abs() < 1e-14);
    }

    #[test]
    fn slack_factors_diagonal() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0]));
        let f = slack_factors(s).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 1.0 / 3.0]));
        assert!((f.s_inv_sqrt - expected).amax() < 1e-14);
        assert!((f.min_eig - 4.0).abs() < 1e-12);
    }

    #[test]
    fn slack_factors_reconstruct_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 8;
        let s = random_spd(&mut rng, n);
        let f = slack_factors(s.clone()).unwrap();
        let eye = DMatrix::<f64>::identity(n, n);
        let recon = &f.s_inv_sqrt * &s * &f.s_inv_sqrt;
        assert!((recon - &eye).norm() <= 1e-8);
        let sq = &f.s_inv_sqrt * &f.s_inv_sqrt;
        assert!((sq - &f.s_inv).norm() <= 1e-7 * f.s_inv.norm());
        assert!((&f.s_inv * &s - eye).norm() < 1e-9);
    }

    #[test]
    fn slack_factors_rejects_indefinite() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1e-3]));
        match slack_factors(s) {
            Err(SdpError::NotPositiveDefinite { min_eig, .. }) => assert!(min_eig < 0.0),
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn slack_factors_rejects_asymmetric() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(
            slack_factors(s),
            Err(SdpError::Asymmetric { .. })
        ));
    }

    #[test]
    fn fwht_small_cases() {
        let mut x = [1.0, 0.0];
        fwht(&mut x).unwrap();
        assert_eq!(x, [1.0, 1.0]);
        let mut x = [1.0, 2.0];
        fwht(&mut x).unwrap();
        assert_eq!(x, [3.0, -1.0]);
    }

    #[test]
    fn fwht_matches_dense_hadamard() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        // Independent oracle: H₈ built by the 2×2 block recursion.
        let mut h = DMatrix::from_element(1, 1, 1.0);
        while h.nrows() < 8 {
            let k = h.nrows();
            let mut next = DMatrix::zeros(2 * k, 2 * k);
            next.view_mut((0, 0), (k, k)).copy_from(&h);
            next.view_mut((0, k), (k, k)).copy_from(&h);
            next.view_mut((k, 0), (k, k)).copy_from(&h);
            next.view_mut((k, k), (k, k)).copy_from(&(-&h));
            h = next;
        }
        let dense = &h * DVector::from_vec(x.clone());
        let mut fast = x;
        fwht(&mut fast).unwrap();
        for (a, b) in fast.iter().zip(dense.iter()) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
        assert_eq!(h, sylvester_hadamard(8).unwrap());
    }

    #[test]
    fn fwht_rejects_non_power_of_two() {
        let mut x = [1.0, 2.0, 3.0];
        assert!(matches!(fwht(&mut x), Err(SdpError::NotPowerOfTwo(3))));
        let mut m = DMatrix::<f64>::zeros(3, 2);
        assert!(hadamard_left_mul(&mut m).is_err());
    }

    #[test]
    fn hadamard_left_mul_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random_matrix(&mut rng, 16, 5);
        let mut fast = m.clone();
        hadamard_left_mul(&mut fast).unwrap();
        let dense = sylvester_hadamard(16).unwrap() * m;
        assert!((fast - &dense).amax() <= 1e-10 * dense.amax());
    }

    #[test]
    fn trace_product_examples() {
        let eye = DMatrix::<f64>::identity(3, 3);
        assert_eq!(trace_product(&eye, &eye).unwrap(), 3.0);
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 4.0]));
        assert_eq!(trace_product(&a, &b).unwrap(), 11.0);
        assert!(trace_product(&a, &eye).is_err());
    }

    #[test]
    fn trace_product_matches_full_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 16, 16);
        let b = random_matrix(&mut rng, 16, 16);
        let fast = trace_product(&a, &b).unwrap();
        let dense = (&a * &b).trace();
        assert!((fast - dense).abs() <= 1e-10 * dense.abs().max(1.0));
    }

    #[test]
    fn vec_kron_identity_and_diagonal() {
        let eye = DMatrix::<f64>::identity(2, 2);
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let v = vec_kron_oracle(&eye, &eye, &a).unwrap();
        assert_eq!(v.as_slice(), &[1.0, 3.0, 2.0, 4.0]);

        // (diag(2,1) ⊗ I) vec(I) = vec(I · I · diag(2,1)) = vec(diag(2,1)).
        let m1 = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        let v = vec_kron_oracle(&m1, &eye, &eye).unwrap();
        assert_eq!(v.as_slice(), &[2.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn vec_kron_dual_paths_agree_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let m1 = random_matrix(&mut rng, 4, 4);
            let m2 = random_matrix(&mut rng, 4, 4);
            let a = random_matrix(&mut rng, 4, 4);
            vec_kron_oracle(&m1, &m2, &a).unwrap();
        }
    }

    #[test]
    fn schatten_and_spectral_norms() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -2.0]));
        assert!((schatten1(&a).unwrap() - 3.0).abs() < 1e-14);
        assert!((spectral_norm(&a).unwrap() - 2.0).abs() < 1e-14);
        assert!((schatten1(&DMatrix::identity(3, 3)).unwrap() - 3.0).abs() < 1e-14);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn fwht_is_linear(
                x in proptest::collection::vec(-10.0f64..10.0, 16),
                y in proptest::collection::vec(-10.0f64..10.0, 16),
                alpha in -3.0f64..3.0,
                beta in -3.0f64..3.0,
            ) {
                let mut combo: Vec<f64> = x.iter().zip(&y).map(|(a, b)| alpha * a + beta * b).collect();
                let (mut fx, mut fy) = (x.clone(), y.clone());
                fwht(&mut combo).unwrap();
                fwht(&mut fx).unwrap();
                fwht(&mut fy).unwrap();
                for k in 0..16 {
                    let expect = alpha * fx[k] + beta * fy[k];
                    prop_assert!((combo[k] - expect).abs() <= 1e-10 * (1.0 + expect.abs()));
                }
            }

            #[test]
            fn fwht_twice_scales_by_length(x in proptest::collection::vec(-10.0f64..10.0, 32)) {
                let mut y = x.clone();
                fwht(&mut y).unwrap();
                fwht(&mut y).unwrap();
                for (a, b) in y.iter().zip(&x) {
                    prop_assert!((a - 32.0 * b).abs() <= 1e-10 * (1.0 + b.abs()));
                }
            }
        }
    }
}
