//! Exact and sketched barrier Hessians.
//!
//! `H = 𝖠 (S⁻¹ ⊗ S⁻¹) 𝖠ᵀ` with `H_ij = tr[Ã_i Ã_j]`, `Ã_i = S⁻¹ᐟ² A_i S⁻¹ᐟ²`.
//! The sketched Hessian is the Gram matrix `Q Qᵀ` of a [`SketchedBasis`].

use std::io::{Read, Seek};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Result, SdpError};
use crate::instance::ConstraintStream;
use crate::linalg::{self, SlackFactors, SymMatrix};
use crate::sketch::SketchedBasis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HessianKind {
    Exact,
    Sketched,
}

#[derive(Debug, Clone)]
pub struct HessianMatrix {
    pub h: SymMatrix,
    pub kind: HessianKind,
}

impl HessianMatrix {
    pub fn m(&self) -> usize {
        self.h.nrows()
    }
}

/// Oracle Hessian in one pass. Holds all `m` conjugated constraints at once,
/// i.e. `m·n²` words outside the streaming budget.
pub fn exact_hessian<R: Read + Seek>(
    stream: &mut ConstraintStream<R>,
    factors: &SlackFactors,
) -> Result<HessianMatrix> {
    let root = &factors.s_inv_sqrt;
    let mut conjugated: Vec<SymMatrix> = Vec::with_capacity(stream.m());
    stream.scan(|_, a| {
        let mut t = root * a * root;
        linalg::symmetrize(&mut t);
        conjugated.push(t);
        Ok(())
    })?;
    let m = conjugated.len();
    let mut h = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let v = linalg::trace_product(&conjugated[i], &conjugated[j])?;
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    Ok(HessianMatrix {
        h,
        kind: HessianKind::Exact,
    })
}

/// Words held by the exact oracle's conjugated constraints.
pub fn exact_oracle_words(n: usize, m: usize) -> usize {
    m * n * n
}

/// `H̃ = Q Qᵀ`, symmetrized.
pub fn sketched_hessian(basis: &SketchedBasis) -> Result<HessianMatrix> {
    if basis.q.iter().any(|v| !v.is_finite()) {
        return Err(SdpError::NonFiniteMatrix("sketched basis"));
    }
    let mut h = &basis.q * basis.q.transpose();
    linalg::symmetrize(&mut h);
    Ok(HessianMatrix {
        h,
        kind: HessianKind::Sketched,
    })
}

/// Extreme generalized eigenvalues of `(H, H̃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralRatio {
    pub lo: f64,
    pub hi: f64,
    /// Whether `H` needed the `1e-12·tr(H)/m` ridge to be positive definite.
    pub regularized: bool,
}

impl SpectralRatio {
    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.lo >= lo && self.hi <= hi
    }
}

/// Eigenvalue range of `H^{-1/2} H̃ H^{-1/2}`.
pub fn spectral_ratio(exact: &SymMatrix, sketched: &SymMatrix) -> Result<SpectralRatio> {
    if exact.shape() != sketched.shape() || !exact.is_square() {
        return Err(SdpError::DimensionMismatch(format!(
            "spectral ratio of {}x{} and {}x{}",
            exact.nrows(),
            exact.ncols(),
            sketched.nrows(),
            sketched.ncols()
        )));
    }
    let m = exact.nrows();
    let mut base = exact.clone();
    let mut eig = SymmetricEigen::new(base.clone());
    let mut regularized = false;
    if eig.eigenvalues.min() <= 0.0 {
        let ridge = 1e-12 * exact.trace() / m as f64;
        for i in 0..m {
            base[(i, i)] += ridge;
        }
        eig = SymmetricEigen::new(base);
        regularized = true;
        if eig.eigenvalues.min() <= 0.0 || !eig.eigenvalues.min().is_finite() {
            return Err(SdpError::DegenerateHessian);
        }
    }
    let mut v = eig.eigenvectors.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        v.column_mut(j).scale_mut(1.0 / lambda.sqrt());
    }
    let inv_root = &v * eig.eigenvectors.transpose();
    let mut pencil = &inv_root * sketched * &inv_root;
    linalg::symmetrize(&mut pencil);
    let values = linalg::eigenvalues(&pencil)?;
    Ok(SpectralRatio {
        lo: values.min(),
        hi: values.max(),
        regularized,
    })
}
