//! Core Hilbert-space types: states, dense operators, inner products, and
//! seeded randomness.
//!
//! All states are normalized complex vectors; operators are dense square
//! matrices with explicitly verified hermitian/unitary flags. Every random
//! draw in the toolkit goes through [`RngStream`] so that runs are
//! reproducible bit-for-bit from a seed.

use faer::Mat;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex<f64>;

pub const NORM_TOL: f64 = 1e-12;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-10;

/// Identifier of the RNG algorithm backing [`RngStream`]; recorded in output
/// manifests so results can be tied to the exact draw sequence.
pub const RNG_ALGORITHM_ID: &str = "chacha8";

/// Deterministic random stream. Identical seed implies an identical,
/// bit-exact draw sequence.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn algorithm_id(&self) -> &'static str {
        RNG_ALGORITHM_ID
    }

    /// Independent child stream. Ensemble members and sweep points each get
    /// their own substream so results do not depend on execution order.
    pub fn substream(&self, index: u64) -> RngStream {
        // splitmix64 of (seed, index) decorrelates child seeds
        let mut z = self
            .seed
            .wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(index.wrapping_add(1)));
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
        RngStream::new(z)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn uniform(&mut self) -> f64 {
        // 53-bit uniform in [0, 1)
        (self.rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    pub fn complex_normal(&mut self) -> C64 {
        C64::new(self.standard_normal(), self.standard_normal())
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// Normalized state vector in an N-dimensional Hilbert space.
#[derive(Debug, Clone)]
pub struct QuantumState {
    amplitudes: Vec<C64>,
}

impl QuantumState {
    /// Builds a state from raw amplitudes, normalizing them.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidDimension(
                "state dimension must be >= 1".into(),
            ));
        }
        let norm = l2_norm(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cannot normalize state with norm {norm}"
            )));
        }
        let inv = 1.0 / norm;
        let amplitudes = amplitudes.into_iter().map(|a| a * inv).collect();
        Ok(Self { amplitudes })
    }

    /// Computational basis state |j>.
    pub fn basis_state(dim: usize, j: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(
                "state dimension must be >= 1".into(),
            ));
        }
        if j >= dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {j} >= dim {dim}"
            )));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[j] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.amplitudes)
    }

    /// Renormalizes in place; used after long products of unitaries only to
    /// assert the invariant, never to hide drift.
    pub fn norm_error(&self) -> f64 {
        (self.norm() - 1.0).abs()
    }

    pub(crate) fn from_normalized_unchecked(amplitudes: Vec<C64>) -> Self {
        Self { amplitudes }
    }
}

pub fn l2_norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Haar-random pure state: i.i.d. complex Gaussian amplitudes, normalized.
pub fn random_state(dim: usize, rng: &mut RngStream) -> Result<QuantumState> {
    if dim == 0 {
        return Err(Error::InvalidDimension(
            "state dimension must be >= 1".into(),
        ));
    }
    let amplitudes: Vec<C64> = (0..dim).map(|_| rng.complex_normal()).collect();
    QuantumState::new(amplitudes)
}

/// Periodized Gaussian wave packet centered at (q0, p0) on the unit torus,
/// with symmetric widths (position variance hbar_eff/2, hbar_eff = 1/(2 pi N)).
pub fn coherent_state(dim: usize, q0: f64, p0: f64) -> Result<QuantumState> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!(
            "coherent state needs dim >= 2, got {dim}"
        )));
    }
    if !(0.0..1.0).contains(&q0) || !(0.0..1.0).contains(&p0) {
        return Err(Error::InvalidParameter(format!(
            "(q0, p0) = ({q0}, {p0}) must lie in [0,1)"
        )));
    }
    let n = dim as f64;
    // exp[-(q - q0)^2 / (2 hbar)] exp[i p0 q / hbar] with hbar = 1/(2 pi N):
    // exponent -pi N (q - q0)^2, phase 2 pi N p0 q, periodized over images.
    let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
    for (j, amp) in amplitudes.iter_mut().enumerate() {
        let x = j as f64 / n;
        let mut acc = C64::new(0.0, 0.0);
        for m in -4i64..=4 {
            let q = x + m as f64;
            let gauss = (-std::f64::consts::PI * n * (q - q0) * (q - q0)).exp();
            let phase = 2.0 * std::f64::consts::PI * n * p0 * q;
            acc += C64::from_polar(gauss, phase);
        }
        *amp = acc;
    }
    QuantumState::new(amplitudes)
}

/// <a|b>.
pub fn inner(a: &QuantumState, b: &QuantumState) -> Result<C64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(inner_slices(a.amplitudes(), b.amplitudes()))
}

pub(crate) fn inner_slices(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Infinite-temperature operator inner product tr(A^dag B) / dim.
pub fn op_inner(a: &DenseOperator, b: &DenseOperator) -> Result<C64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(frobenius_inner(a.mat(), b.mat()) / a.dim() as f64)
}

/// tr(A^dag B) = sum_ij conj(A_ij) B_ij.
pub fn frobenius_inner(a: &Mat<C64>, b: &Mat<C64>) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].conj() * b[(i, j)];
        }
    }
    acc
}

/// Dense N x N complex matrix with verified hermitian/unitary flags.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    mat: Mat<C64>,
    hermitian: bool,
    unitary: bool,
}

impl DenseOperator {
    /// Wraps a matrix without claiming any structure.
    pub fn new(mat: Mat<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::InvalidDimension(format!(
                "operator must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.nrows() == 0 {
            return Err(Error::InvalidDimension(
                "operator dimension must be >= 1".into(),
            ));
        }
        Ok(Self {
            mat,
            hermitian: false,
            unitary: false,
        })
    }

    /// Wraps a matrix asserting hermiticity (max |A - A^dag| < 1e-12).
    pub fn hermitian(mat: Mat<C64>) -> Result<Self> {
        let mut op = Self::new(mat)?;
        let dev = op.hermiticity_deviation();
        if dev >= HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        op.hermitian = true;
        Ok(op)
    }

    /// Wraps a matrix asserting unitarity (max |U^dag U - I| < 1e-10).
    pub fn unitary(mat: Mat<C64>) -> Result<Self> {
        let mut op = Self::new(mat)?;
        let dev = op.unitarity_deviation();
        if dev >= UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        op.unitary = true;
        // hermitian unitaries (e.g. Pauli strings) get both flags
        if op.hermiticity_deviation() < HERMITIAN_TOL {
            op.hermitian = true;
        }
        Ok(op)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mat = Mat::from_fn(dim, dim, |i, j| {
            if i == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let mut op = Self::new(mat)?;
        op.hermitian = true;
        op.unitary = true;
        Ok(op)
    }

    pub fn from_diagonal(diag: &[C64]) -> Result<Self> {
        let dim = diag.len();
        let mat = Mat::from_fn(
            dim,
            dim,
            |i, j| {
                if i == j {
                    diag[i]
                } else {
                    C64::new(0.0, 0.0)
                }
            },
        );
        let mut op = Self::new(mat)?;
        op.hermitian = diag.iter().all(|d| d.im == 0.0);
        op.unitary = diag.iter().all(|d| (d.norm() - 1.0).abs() < UNITARY_TOL);
        Ok(op)
    }

    pub fn from_real(mat: &Mat<f64>) -> Result<Self> {
        let c = Mat::from_fn(mat.nrows(), mat.ncols(), |i, j| C64::new(mat[(i, j)], 0.0));
        Self::new(c)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &Mat<C64> {
        &self.mat
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let mut dev = 0.0f64;
        for j in 0..self.dim() {
            for i in 0..=j {
                let d = (self.mat[(i, j)] - self.mat[(j, i)].conj()).norm();
                dev = dev.max(d);
            }
        }
        dev
    }

    pub fn unitarity_deviation(&self) -> f64 {
        let prod = self.mat.adjoint() * &self.mat;
        let mut dev = 0.0f64;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                let expect = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((prod[(i, j)] - C64::new(expect, 0.0)).norm());
            }
        }
        dev
    }

    pub fn adjoint(&self) -> DenseOperator {
        DenseOperator {
            mat: self.mat.adjoint().to_owned(),
            hermitian: self.hermitian,
            unitary: self.unitary,
        }
    }

    pub fn apply(&self, psi: &QuantumState) -> Result<QuantumState> {
        if self.dim() != psi.dim() {
            return Err(Error::DimensionMismatch(self.dim(), psi.dim()));
        }
        let n = self.dim();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            let x = psi.amplitudes()[j];
            for i in 0..n {
                out[i] += self.mat[(i, j)] * x;
            }
        }
        Ok(QuantumState::from_normalized_unchecked(out))
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.mat[(i, i)]).sum()
    }

    /// Returns the diagonal if the operator is numerically diagonal
    /// (all off-diagonal entries below 1e-14); used for fast trace paths.
    pub fn as_diagonal(&self) -> Option<Vec<C64>> {
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                if i != j && self.mat[(i, j)].norm() > 1e-14 {
                    return None;
                }
            }
        }
        Some((0..self.dim()).map(|i| self.mat[(i, i)]).collect())
    }
}

/// Husimi function |<coh(q, p)|psi>|^2 on an n_grid x n_grid phase-space grid.
/// Desk-scale diagnostic, O(N^2 n_grid^2).
pub fn husimi(psi: &QuantumState, n_grid: usize) -> Result<Vec<Vec<f64>>> {
    let dim = psi.dim();
    let mut out = vec![vec![0.0; n_grid]; n_grid];
    for (iq, row) in out.iter_mut().enumerate() {
        let q = iq as f64 / n_grid as f64;
        for (ip, cell) in row.iter_mut().enumerate() {
            let p = ip as f64 / n_grid as f64;
            let coh = coherent_state(dim, q, p)?;
            *cell = inner(&coh, psi)?.norm_sqr();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_state_dim_one_is_pure_phase() {
        let mut rng = RngStream::new(3);
        let psi = random_state(1, &mut rng).unwrap();
        assert!((psi.amplitudes()[0].norm() - 1.0).abs() < NORM_TOL);
    }

    #[test]
    fn random_state_zero_dim_errors() {
        let mut rng = RngStream::new(3);
        assert!(random_state(0, &mut rng).is_err());
    }

    #[test]
    fn random_state_deterministic() {
        let a = random_state(64, &mut RngStream::new(7)).unwrap();
        let b = random_state(64, &mut RngStream::new(7)).unwrap();
        assert_eq!(a.amplitudes(), b.amplitudes());
    }

    #[test]
    fn haar_first_component_moment() {
        // mean of |<e0|psi>|^2 over Haar states is 1/dim
        let dim = 256;
        let n_seeds = 1000;
        let root = RngStream::new(2024);
        let mut acc = 0.0;
        for k in 0..n_seeds {
            let psi = random_state(dim, &mut root.substream(k)).unwrap();
            acc += psi.amplitudes()[0].norm_sqr();
        }
        let mean = acc / n_seeds as f64;
        // var of |c0|^2 is ~ (1/dim)^2; 3 sigma of the mean
        let sigma = (1.0 / dim as f64) / (n_seeds as f64).sqrt();
        assert!(
            (mean - 1.0 / dim as f64).abs() < 3.0 * sigma,
            "mean {mean} vs {}",
            1.0 / dim as f64
        );
    }

    #[test]
    fn coherent_state_normalized() {
        let psi = coherent_state(128, 0.3, 0.7).unwrap();
        assert!(psi.norm_error() < NORM_TOL);
    }

    #[test]
    fn coherent_state_husimi_peak() {
        let dim = 32;
        let (q0, p0) = (0.25, 0.5);
        let psi = coherent_state(dim, q0, p0).unwrap();
        let h = husimi(&psi, dim).unwrap();
        let mut best = (0, 0);
        let mut best_v = -1.0;
        for iq in 0..dim {
            for ip in 0..dim {
                if h[iq][ip] > best_v {
                    best_v = h[iq][ip];
                    best = (iq, ip);
                }
            }
        }
        assert_eq!(best.0, (q0 * dim as f64).round() as usize);
        assert_eq!(best.1, (p0 * dim as f64).round() as usize);
    }

    #[test]
    fn coherent_state_shift_is_cyclic_shift_up_to_phase() {
        let dim = 64;
        let (q0, p0) = (0.3, 0.15);
        let a = coherent_state(dim, q0 + 1.0 / dim as f64, p0).unwrap();
        let b = coherent_state(dim, q0, p0).unwrap();
        // b shifted by one site should equal a up to a global phase
        let shifted: Vec<C64> = (0..dim)
            .map(|j| b.amplitudes()[(j + dim - 1) % dim])
            .collect();
        let shifted = QuantumState::new(shifted).unwrap();
        let ov = inner(&shifted, &a).unwrap();
        assert!(
            (ov.norm() - 1.0).abs() < 1e-10,
            "overlap modulus {}",
            ov.norm()
        );
    }

    #[test]
    fn inner_products() {
        let mut rng = RngStream::new(11);
        let psi = random_state(17, &mut rng).unwrap();
        let one = inner(&psi, &psi).unwrap();
        assert!((one - C64::new(1.0, 0.0)).norm() < 1e-12);

        let id = DenseOperator::identity(5).unwrap();
        assert!((op_inner(&id, &id).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-14);

        // op_inner(sx, sy) = 0 at dim 2
        let sx = DenseOperator::hermitian(faer::mat![
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
        ])
        .unwrap();
        let sy = DenseOperator::hermitian(faer::mat![
            [C64::new(0.0, 0.0), C64::new(0.0, -1.0)],
            [C64::new(0.0, 1.0), C64::new(0.0, 0.0)]
        ])
        .unwrap();
        assert!(op_inner(&sx, &sy).unwrap().norm() < 1e-14);
    }

    #[test]
    fn inner_conjugate_symmetric() {
        let root = RngStream::new(5);
        for k in 0..20 {
            let mut rng = root.substream(k);
            let a = random_state(32, &mut rng).unwrap();
            let b = random_state(32, &mut rng).unwrap();
            let ab = inner(&a, &b).unwrap();
            let ba = inner(&b, &a).unwrap();
            assert!((ab - ba.conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn op_inner_positive_and_unit_for_unitary() {
        let mut rng = RngStream::new(9);
        let dim = 16;
        // random diagonal unitary
        let diag: Vec<C64> = (0..dim)
            .map(|_| C64::from_polar(1.0, rng.uniform() * std::f64::consts::TAU))
            .collect();
        let u = DenseOperator::from_diagonal(&diag).unwrap();
        let v = op_inner(&u, &u).unwrap();
        assert!(v.im.abs() < 1e-14);
        assert!((v.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dense_operator_flag_checks() {
        let bad = faer::mat![
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            [C64::new(0.5, 0.0), C64::new(0.0, 0.0)]
        ];
        assert!(DenseOperator::hermitian(bad.clone()).is_err());
        assert!(DenseOperator::unitary(bad).is_err());
    }
}
