//! Dense reference constructions, written without the crate's fast kernels.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::io::Cursor;

use streaming_sdp::instance::InstanceData;
use streaming_sdp::sketch::SketchSeed;
use streaming_sdp::{ConstraintStream, SdpInstance};

/// ±1 Hadamard matrix by the block recursion `[[H, H], [H, -H]]`.
pub fn hadamard(order: usize) -> DMatrix<f64> {
    assert!(order.is_power_of_two());
    let mut h = DMatrix::from_element(1, 1, 1.0);
    while h.nrows() < order {
        let k = h.nrows();
        let mut next = DMatrix::zeros(2 * k, 2 * k);
        next.view_mut((0, 0), (k, k)).copy_from(&h);
        next.view_mut((0, k), (k, k)).copy_from(&h);
        next.view_mut((k, 0), (k, k)).copy_from(&h);
        next.view_mut((k, k), (k, k)).copy_from(&(-&h));
        h = next;
    }
    h
}

/// Kronecker product with `a`'s index varying slowest.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows() * b.nrows(), a.ncols() * b.ncols(), |r, c| {
        a[(r / b.nrows(), c / b.ncols())] * b[(r % b.nrows(), c % b.ncols())]
    })
}

/// Column-major vectorization.
pub fn vec_of(a: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(a.as_slice())
}

/// The full `s × n_pad²` matrix `(1/√s)·P·(H D₁ ⊗ H D₂)`.
pub fn dense_pi(seed: &SketchSeed) -> DMatrix<f64> {
    let np = seed.n_pad;
    let h = hadamard(np);
    let hd1 = &h * DMatrix::from_diagonal(&DVector::from_column_slice(&seed.d1));
    let hd2 = &h * DMatrix::from_diagonal(&DVector::from_column_slice(&seed.d2));
    let full = kron(&hd1, &hd2);
    let scale = 1.0 / (seed.s as f64).sqrt();
    DMatrix::from_fn(seed.s, np * np, |k, c| {
        let (i, j) = seed.coords[k];
        scale * full[(j * np + i, c)]
    })
}

/// `n_pad × n` zero-padded copy.
pub fn pad_rows(a: &DMatrix<f64>, n_pad: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n_pad, a.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out
}

pub fn inv_sqrt(s: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(s.clone());
    let d = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

pub fn inv(s: &DMatrix<f64>) -> DMatrix<f64> {
    s.clone().try_inverse().expect("invertible")
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    (&g + g.transpose()) * 0.5
}

/// Well-conditioned random positive definite matrix.
pub fn random_pd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    &g * g.transpose() / n as f64 + DMatrix::identity(n, n)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `A (S⁻¹ ⊗ S⁻¹) Aᵀ` with the rows of `A` being `vec(A_i)ᵀ`.
pub fn dense_hessian(constraints: &[DMatrix<f64>], s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s.nrows();
    let s_inv = inv(s);
    let big = kron(&s_inv, &s_inv);
    let a = DMatrix::from_fn(constraints.len(), n * n, |i, c| constraints[i].as_slice()[c]);
    &a * big * a.transpose()
}

pub fn open_bytes(data: &InstanceData) -> (SdpInstance, ConstraintStream<Cursor<Vec<u8>>>) {
    let mut bytes = Vec::new();
    data.write_to(&mut bytes).unwrap();
    ConstraintStream::open(Cursor::new(bytes)).unwrap()
}

/// Stream over `constraints` with zero objective and no `y0`.
pub fn stream_of(constraints: Vec<DMatrix<f64>>) -> ConstraintStream<Cursor<Vec<u8>>> {
    let n = constraints[0].nrows();
    let data = InstanceData {
        c: DMatrix::zeros(n, n),
        b: DVector::zeros(constraints.len()),
        y0: None,
        constraints,
    };
    open_bytes(&data).1
}

pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}
