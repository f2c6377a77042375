//! Krylov-space methods: Lanczos recursion for states and operators,
//! Arnoldi recursion for unitaries, chain propagation, Krylov complexity,
//! and Lanczos-coefficient statistics.

use faer::Mat;

use crate::error::{Error, Result};
use crate::hilbert::{DenseOperator, QuantumState, C64, NORM_TOL};
use crate::models::FloquetMap;
use crate::propagate::{spectral_radius_estimate, EigenPropagator};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Krylov space spans the full accessible space.
    Exhausted,
    /// b_n dropped below the termination tolerance (invariant subspace).
    Tolerance,
    /// Stopped at the requested maximum dimension.
    MaxK,
}

/// Stored orthonormal Krylov vectors.
#[derive(Debug, Clone)]
pub enum KrylovBasis {
    States(Vec<Vec<C64>>),
    Operators(Vec<Mat<C64>>),
}

impl KrylovBasis {
    pub fn len(&self) -> usize {
        match self {
            KrylovBasis::States(v) => v.len(),
            KrylovBasis::Operators(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest off-diagonal Gram-matrix entry; the orthogonality residual.
    pub fn max_cross_overlap(&self) -> f64 {
        let k = self.len();
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let g = match self {
                    KrylovBasis::States(v) => crate::hilbert::inner_slices(&v[i], &v[j]),
                    KrylovBasis::Operators(v) => {
                        crate::hilbert::frobenius_inner(&v[i], &v[j]) / v[i].nrows() as f64
                    }
                };
                worst = worst.max(g.norm());
            }
        }
        worst
    }
}

/// Lanczos coefficients a_n (diagonal) and b_n (off-diagonal, b_1..b_{K-1}).
#[derive(Debug, Clone)]
pub struct LanczosData {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub k: usize,
    pub basis: Option<KrylovBasis>,
    pub termination: Termination,
}

/// Arnoldi data: the upper-Hessenberg matrix of <K_m|U|K_n> and the basis.
#[derive(Debug, Clone)]
pub struct ArnoldiData {
    pub h_hess: Mat<C64>,
    pub k: usize,
    pub basis: Option<KrylovBasis>,
    pub termination: Termination,
}

/// Krylov-chain amplitudes psi_n(t).
#[derive(Debug, Clone)]
pub struct KrylovAmplitudes {
    pub times: Vec<f64>,
    /// psi[it][n]
    pub psi: Vec<Vec<C64>>,
}

impl KrylovAmplitudes {
    /// Worst deviation of sum_n |psi_n|^2 from 1 over all times.
    pub fn max_norm_error(&self) -> f64 {
        self.psi
            .iter()
            .map(|p| (p.iter().map(|a| a.norm_sqr()).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Operator-convention amplitudes phi_n = i^n psi_n, solving the paper's
    /// real-coefficient chain equation d/dt phi_n = b_n phi_{n-1} - b_{n+1} phi_{n+1}.
    pub fn to_operator_convention(&self) -> KrylovAmplitudes {
        let psi = self
            .psi
            .iter()
            .map(|p| {
                let mut ik = C64::new(1.0, 0.0);
                p.iter()
                    .map(|a| {
                        let v = *a * ik;
                        ik *= C64::new(0.0, 1.0);
                        v
                    })
                    .collect()
            })
            .collect();
        KrylovAmplitudes {
            times: self.times.clone(),
            psi,
        }
    }
}

/// Abstraction over the two Krylov vector spaces: state vectors with the
/// standard inner product, operators with tr(A^dag B)/dim.
trait KrylovVector: Clone {
    fn kinner(&self, other: &Self) -> C64;
    fn sub_scaled(&mut self, coef: C64, other: &Self);
    fn scale(&mut self, s: f64);
    fn knorm(&self) -> f64 {
        self.kinner(self).re.max(0.0).sqrt()
    }
}

impl KrylovVector for Vec<C64> {
    fn kinner(&self, other: &Self) -> C64 {
        crate::hilbert::inner_slices(self, other)
    }
    fn sub_scaled(&mut self, coef: C64, other: &Self) {
        for (a, b) in self.iter_mut().zip(other) {
            *a -= coef * *b;
        }
    }
    fn scale(&mut self, s: f64) {
        self.iter_mut().for_each(|a| *a *= s);
    }
}

#[derive(Clone)]
struct OpVec(Mat<C64>);

impl KrylovVector for OpVec {
    fn kinner(&self, other: &Self) -> C64 {
        crate::hilbert::frobenius_inner(&self.0, &other.0) / self.0.nrows() as f64
    }
    fn sub_scaled(&mut self, coef: C64, other: &Self) {
        for j in 0..self.0.ncols() {
            for i in 0..self.0.nrows() {
                self.0[(i, j)] -= coef * other.0[(i, j)];
            }
        }
    }
    fn scale(&mut self, s: f64) {
        for j in 0..self.0.ncols() {
            for i in 0..self.0.nrows() {
                self.0[(i, j)] *= s;
            }
        }
    }
}

/// Shared Lanczos kernel with full two-pass reorthogonalization.
fn lanczos_kernel<V: KrylovVector>(
    apply: impl Fn(&V) -> V,
    v0: V,
    max_k: usize,
    tol: f64,
    dim_limit: usize,
) -> (Vec<f64>, Vec<f64>, Vec<V>, Termination) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut basis = vec![v0];
    let termination;
    loop {
        let n = basis.len() - 1;
        let mut w = apply(&basis[n]);
        let an = basis[n].kinner(&w).re;
        a.push(an);
        w.sub_scaled(C64::new(an, 0.0), &basis[n]);
        if n > 0 {
            w.sub_scaled(C64::new(b[n - 1], 0.0), &basis[n - 1]);
        }
        // two full Gram-Schmidt passes against every stored vector
        for _ in 0..2 {
            for v in &basis {
                let c = v.kinner(&w);
                w.sub_scaled(c, v);
            }
        }
        let bn = w.knorm();
        if basis.len() == dim_limit {
            termination = Termination::Exhausted;
            break;
        }
        if bn < tol {
            termination = Termination::Tolerance;
            break;
        }
        if basis.len() == max_k {
            termination = Termination::MaxK;
            break;
        }
        b.push(bn);
        w.scale(1.0 / bn);
        basis.push(w);
    }
    (a, b, basis, termination)
}

/// Lanczos recursion of a hermitian H seeded by a normalized state.
/// `tol` defaults to 1e-12 x (spectral-radius estimate of H).
pub fn lanczos_state(
    h: &DenseOperator,
    psi0: &QuantumState,
    max_k: usize,
    tol: Option<f64>,
) -> Result<LanczosData> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian(h.hermiticity_deviation()));
    }
    if h.dim() != psi0.dim() {
        return Err(Error::DimensionMismatch(h.dim(), psi0.dim()));
    }
    if psi0.norm_error() > NORM_TOL {
        return Err(Error::InvalidParameter(format!(
            "psi0 norm deviates by {}",
            psi0.norm_error()
        )));
    }
    if max_k == 0 {
        return Err(Error::InvalidParameter("max_k must be >= 1".into()));
    }
    let tol = tol.unwrap_or(1e-12 * spectral_radius_estimate(h));
    let hm = h.mat();
    let n = h.dim();
    let apply = |v: &Vec<C64>| -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (j, xj) in v.iter().enumerate() {
            for (i, o) in out.iter_mut().enumerate() {
                *o += hm[(i, j)] * *xj;
            }
        }
        out
    };
    let (a, b, basis, termination) =
        lanczos_kernel(apply, psi0.amplitudes().to_vec(), max_k, tol, n);
    Ok(LanczosData {
        k: a.len(),
        a,
        b,
        basis: Some(KrylovBasis::States(basis)),
        termination,
    })
}

/// Operator Lanczos on the Liouvillian L(X) = [H, X] = HX - XH, with the
/// infinite-temperature inner product tr(A^dag B)/dim. For hermitian seeds
/// every a_n vanishes; this is checked to 1e-10 and then zeroed exactly.
pub fn lanczos_operator(
    h: &DenseOperator,
    o: &DenseOperator,
    max_k: usize,
    tol: Option<f64>,
) -> Result<LanczosData> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian(h.hermiticity_deviation()));
    }
    if h.dim() != o.dim() {
        return Err(Error::DimensionMismatch(h.dim(), o.dim()));
    }
    let norm = crate::hilbert::op_inner(o, o)?.re.sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "seed operator must be normalized under tr(A^dag B)/dim, got norm {norm}"
        )));
    }
    if max_k == 0 {
        return Err(Error::InvalidParameter("max_k must be >= 1".into()));
    }
    let tol = tol.unwrap_or(1e-12 * 2.0 * spectral_radius_estimate(h));
    let hm = h.mat();
    let apply = |x: &OpVec| -> OpVec { OpVec(hm * &x.0 - &x.0 * hm) };
    let (mut a, b, basis, termination) =
        lanczos_kernel(apply, OpVec(o.mat().clone()), max_k, tol, h.dim() * h.dim());
    if o.is_hermitian() {
        // roundoff in a_n scales with the Liouvillian norm and the matrix
        // dimension, so the gate follows the spectral radius
        let gate = (2.0 * spectral_radius_estimate(h) * 1e-9).max(1e-10);
        if let Some(&bad) = a.iter().find(|x| x.abs() >= gate) {
            return Err(Error::InvalidParameter(format!(
                "hermitian-seed Liouvillian Lanczos produced a_n = {bad}"
            )));
        }
        a.iter_mut().for_each(|x| *x = 0.0);
    }
    Ok(LanczosData {
        k: a.len(),
        a,
        b,
        basis: Some(KrylovBasis::Operators(
            basis.into_iter().map(|v| v.0).collect(),
        )),
        termination,
    })
}

/// Arnoldi recursion of a unitary map seeded by a normalized state; stores
/// the full upper-Hessenberg matrix <K_m|U|K_n>.
pub fn arnoldi_unitary(
    u: &FloquetMap,
    psi0: &QuantumState,
    max_k: usize,
    tol: f64,
) -> Result<ArnoldiData> {
    if u.dim() != psi0.dim() {
        return Err(Error::DimensionMismatch(u.dim(), psi0.dim()));
    }
    if psi0.norm_error() > NORM_TOL {
        return Err(Error::InvalidParameter(format!(
            "psi0 norm deviates by {}",
            psi0.norm_error()
        )));
    }
    if max_k == 0 {
        return Err(Error::InvalidParameter("max_k must be >= 1".into()));
    }
    let max_k = max_k.min(u.dim());
    let mut basis: Vec<Vec<C64>> = vec![psi0.amplitudes().to_vec()];
    let mut h = Mat::<C64>::zeros(max_k, max_k);
    let termination;
    loop {
        let n = basis.len() - 1;
        let mut w = basis[n].clone();
        u.apply_vec(&mut w);
        // two-pass Gram-Schmidt, accumulating the projections into H
        for _ in 0..2 {
            for (m, v) in basis.iter().enumerate() {
                let c = crate::hilbert::inner_slices(v, &w);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * *vi;
                }
                h[(m, n)] += c;
            }
        }
        let bn = crate::hilbert::l2_norm(&w);
        if bn < tol || basis.len() == u.dim() {
            termination = if bn < tol {
                Termination::Tolerance
            } else {
                Termination::Exhausted
            };
            break;
        }
        if basis.len() == max_k {
            termination = Termination::MaxK;
            break;
        }
        h[(n + 1, n)] = C64::new(bn, 0.0);
        w.iter_mut().for_each(|x| *x /= bn);
        basis.push(w);
    }
    let k = basis.len();
    let h_hess = Mat::from_fn(k, k, |i, j| h[(i, j)]);
    Ok(ArnoldiData {
        h_hess,
        k,
        basis: Some(KrylovBasis::States(basis)),
        termination,
    })
}

/// Amplitudes from exact exponentiation of the K x K tridiagonal chain.
pub fn krylov_propagate(data: &LanczosData, t_grid: &[f64]) -> Result<KrylovAmplitudes> {
    if data.k == 0 {
        return Err(Error::Empty("krylov_propagate on empty chain"));
    }
    let k = data.k;
    let tri = Mat::from_fn(k, k, |i, j| {
        if i == j {
            C64::new(data.a[i], 0.0)
        } else if i + 1 == j {
            C64::new(data.b[i], 0.0)
        } else if j + 1 == i {
            C64::new(data.b[j], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let prop = EigenPropagator::new(&DenseOperator::hermitian(tri)?)?;
    let e0 = QuantumState::basis_state(k, 0)?;
    let coeffs = prop.to_eigenbasis(&e0)?;
    let psi: Vec<Vec<C64>> = t_grid
        .iter()
        .map(|&t| {
            // reconstruct in the chain basis
            let n = k;
            let mut out = vec![C64::new(0.0, 0.0); n];
            for m in 0..n {
                let c = coeffs[m] * C64::from_polar(1.0, -prop.energies()[m] * t);
                for (i, o) in out.iter_mut().enumerate() {
                    *o += prop.eigenvectors()[(i, m)] * c;
                }
            }
            out
        })
        .collect();
    Ok(KrylovAmplitudes {
        times: t_grid.to_vec(),
        psi,
    })
}

/// Amplitudes from repeated application of the Hessenberg matrix
/// (the unitary / Floquet chain), at integer step times 0..=steps.
pub fn krylov_propagate_arnoldi(data: &ArnoldiData, steps: usize) -> Result<KrylovAmplitudes> {
    if data.k == 0 {
        return Err(Error::Empty("krylov_propagate on empty chain"));
    }
    let k = data.k;
    let mut cur = vec![C64::new(0.0, 0.0); k];
    cur[0] = C64::new(1.0, 0.0);
    let mut psi = Vec::with_capacity(steps + 1);
    psi.push(cur.clone());
    for _ in 0..steps {
        let mut next = vec![C64::new(0.0, 0.0); k];
        for (j, xj) in cur.iter().enumerate() {
            for (i, o) in next.iter_mut().enumerate() {
                *o += data.h_hess[(i, j)] * *xj;
            }
        }
        psi.push(next.clone());
        cur = next;
    }
    Ok(KrylovAmplitudes {
        times: (0..=steps).map(|t| t as f64).collect(),
        psi,
    })
}

/// Krylov complexity C_K(t) = sum_n n |psi_n(t)|^2.
pub fn k_complexity(amps: &KrylovAmplitudes) -> TimeSeries {
    let values = amps
        .psi
        .iter()
        .map(|p| {
            p.iter()
                .enumerate()
                .map(|(n, a)| n as f64 * a.norm_sqr())
                .sum()
        })
        .collect();
    TimeSeries::new(amps.times.clone(), values)
}

#[derive(Debug, Clone, Copy)]
pub struct KSaturation {
    /// Diagonal-ensemble saturation sum_n n Q_0n.
    pub value: f64,
    /// Set when the spectrum has a gap below 1e-10; the dephasing argument
    /// behind the formula assumes distinct frequencies.
    pub degenerate_warning: bool,
}

/// Long-time saturation of C_K from the diagonal ensemble:
/// Q_0n = sum_i |<e_i|psi0>|^2 |<K_n|e_i>|^2.
pub fn k_saturation(
    h: &DenseOperator,
    psi0: &QuantumState,
    data: &LanczosData,
) -> Result<KSaturation> {
    let basis = match &data.basis {
        Some(KrylovBasis::States(v)) => v,
        _ => {
            return Err(Error::InvalidParameter(
                "k_saturation needs a stored state basis".into(),
            ))
        }
    };
    let prop = EigenPropagator::new(h)?;
    let degenerate_warning = prop.min_gap() < 1e-10;
    let c0 = prop.to_eigenbasis(psi0)?;
    let mut value = 0.0;
    for (n, kn) in basis.iter().enumerate() {
        let kn_state = QuantumState::from_normalized_unchecked(kn.clone());
        let ck = prop.to_eigenbasis(&kn_state)?;
        let q0n: f64 = c0
            .iter()
            .zip(&ck)
            .map(|(ci, ki)| ci.norm_sqr() * ki.norm_sqr())
            .sum();
        value += n as f64 * q0n;
    }
    Ok(KSaturation {
        value,
        degenerate_warning,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosStats {
    /// Least-squares slope of b_n over the initial segment
    /// (first max(4, K/10) coefficients).
    pub slope_alpha: f64,
    /// Mean of b_n over the middle half.
    pub plateau_mean: f64,
    /// Variance of ln(b_{n+1}/b_n) over the middle half.
    pub fluctuation_measure: f64,
}

/// Growth / plateau / fluctuation summary of the b_n sequence; needs K >= 16.
pub fn lanczos_stats(data: &LanczosData) -> Result<LanczosStats> {
    if data.k < 16 {
        return Err(Error::TooShort(format!(
            "lanczos_stats needs K >= 16, got {}",
            data.k
        )));
    }
    let b = &data.b;
    let head = 4.max(data.k / 10).min(b.len());
    let xs: Vec<f64> = (1..=head).map(|n| n as f64).collect();
    let ys: Vec<f64> = b[..head].to_vec();
    let (slope_alpha, _, _, _) = crate::analysis::linear_fit(&xs, &ys)?;
    let mid = &b[b.len() / 4..(3 * b.len()) / 4];
    let plateau_mean = mid.iter().sum::<f64>() / mid.len() as f64;
    let ratios: Vec<f64> = mid.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let rmean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let fluctuation_measure = ratios
        .iter()
        .map(|r| (r - rmean) * (r - rmean))
        .sum::<f64>()
        / ratios.len() as f64;
    Ok(LanczosStats {
        slope_alpha,
        plateau_mean,
        fluctuation_measure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{inner, random_state, RngStream};
    use crate::models::{goe_hamiltonian, kicked_ising_hamiltonian_parts, pauli_z_at};
    use crate::propagate::evolve_hamiltonian;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sigma_x() -> DenseOperator {
        DenseOperator::hermitian(faer::mat![
            [c(0.0, 0.0), c(1.0, 0.0)],
            [c(1.0, 0.0), c(0.0, 0.0)]
        ])
        .unwrap()
    }

    fn sigma_z() -> DenseOperator {
        DenseOperator::hermitian(faer::mat![
            [c(1.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(-1.0, 0.0)]
        ])
        .unwrap()
    }

    #[test]
    fn eigenstate_seed_terminates_at_one() {
        // |0> is an eigenstate of sz
        let data = lanczos_state(
            &sigma_z(),
            &QuantumState::basis_state(2, 0).unwrap(),
            10,
            None,
        )
        .unwrap();
        assert_eq!(data.k, 1);
        assert!((data.a[0] - 1.0).abs() < 1e-12);
        assert!(data.b.is_empty());
        assert_eq!(data.termination, Termination::Tolerance);
    }

    #[test]
    fn sigma_x_two_site_chain() {
        let data = lanczos_state(
            &sigma_x(),
            &QuantumState::basis_state(2, 0).unwrap(),
            10,
            None,
        )
        .unwrap();
        assert_eq!(data.k, 2);
        assert!(data.a[0].abs() < 1e-12);
        assert!(data.a[1].abs() < 1e-12);
        assert!((data.b[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_lanczos_reproduces_goe_spectrum() {
        let dim = 128;
        let mut rng = RngStream::new(17);
        let h = goe_hamiltonian(dim, &mut rng).unwrap();
        let psi0 = random_state(dim, &mut rng).unwrap();
        let data = lanczos_state(&h, &psi0, dim, None).unwrap();
        assert_eq!(data.k, dim);
        let tri = Mat::from_fn(dim, dim, |i, j| {
            if i == j {
                c(data.a[i], 0.0)
            } else if i.abs_diff(j) == 1 {
                c(data.b[i.min(j)], 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let tri_e = EigenPropagator::new(&DenseOperator::hermitian(tri).unwrap()).unwrap();
        let full_e = EigenPropagator::new(&h).unwrap();
        let mut a: Vec<f64> = tri_e.energies().to_vec();
        let mut b: Vec<f64> = full_e.energies().to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let scale = b.iter().map(|x| x.abs()).fold(0.0, f64::max);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8 * scale, "{x} vs {y}");
        }
    }

    #[test]
    fn basis_orthonormal_and_tridiagonal_reconstruction() {
        let dim = 64;
        let mut rng = RngStream::new(23);
        let h = goe_hamiltonian(dim, &mut rng).unwrap();
        let psi0 = random_state(dim, &mut rng).unwrap();
        let data = lanczos_state(&h, &psi0, 40, None).unwrap();
        let basis = data.basis.as_ref().unwrap();
        assert!(basis.max_cross_overlap() < 1e-10);
        let vecs = match basis {
            KrylovBasis::States(v) => v,
            _ => unreachable!(),
        };
        for v in vecs {
            assert!((crate::hilbert::l2_norm(v) - 1.0).abs() < 1e-10);
        }
        // || H K_n - (a_n K_n + b_{n+1} K_{n+1} + b_n K_{n-1}) || < 1e-9
        for n in 1..data.k - 1 {
            let mut hv = vec![c(0.0, 0.0); dim];
            for (j, xj) in vecs[n].iter().enumerate() {
                for (i, o) in hv.iter_mut().enumerate() {
                    *o += h.mat()[(i, j)] * *xj;
                }
            }
            for i in 0..dim {
                hv[i] -= c(data.a[n], 0.0) * vecs[n][i]
                    + c(data.b[n], 0.0) * vecs[n + 1][i]
                    + c(data.b[n - 1], 0.0) * vecs[n - 1][i];
            }
            assert!(crate::hilbert::l2_norm(&hv) < 1e-9, "residual at n = {n}");
        }
    }

    #[test]
    fn operator_lanczos_commuting_seed() {
        let data = lanczos_operator(&sigma_z(), &sigma_z(), 10, None).unwrap();
        assert_eq!(data.k, 1);
        assert!(data.b.is_empty());
    }

    #[test]
    fn operator_lanczos_two_level_chain() {
        // H = sz, O = sx: L(sx) = 2i sy, chain closes at K = 2 with b = [2]
        let data = lanczos_operator(&sigma_z(), &sigma_x(), 10, None).unwrap();
        assert_eq!(data.k, 2);
        assert_eq!(data.a, vec![0.0, 0.0]);
        assert!((data.b[0] - 2.0).abs() < 1e-12);
        assert_eq!(data.termination, Termination::Tolerance);
    }

    #[test]
    fn operator_lanczos_b1_sum_rule() {
        // b_1^2 = tr(L(O)^dag L(O)) / D for normalized O
        let params = crate::models::KickedIsingParams::chaotic_defaults(8);
        let (hz, hx) = kicked_ising_hamiltonian_parts(&params).unwrap();
        let h = DenseOperator::hermitian(hz.mat() + hx.mat()).unwrap();
        let o = pauli_z_at(8, 0).unwrap();
        let data = lanczos_operator(&h, &o, 4, None).unwrap();
        let l_o = h.mat() * o.mat() - o.mat() * h.mat();
        let b1_sq = crate::hilbert::frobenius_inner(&l_o, &l_o).re / 256.0;
        assert!(
            (data.b[0] * data.b[0] - b1_sq).abs() < 1e-10,
            "b1^2 = {} vs {b1_sq}",
            data.b[0] * data.b[0]
        );
    }

    #[test]
    fn arnoldi_diagonal_map_closes_immediately() {
        let diag: Vec<C64> = (0..4)
            .map(|k| C64::from_polar(1.0, 0.3 * k as f64))
            .collect();
        let mat = Mat::from_fn(4, 4, |i, j| if i == j { diag[i] } else { c(0.0, 0.0) });
        let u = FloquetMap::from_dense(mat, "diag").unwrap();
        let data =
            arnoldi_unitary(&u, &QuantumState::basis_state(4, 1).unwrap(), 8, 1e-12).unwrap();
        assert_eq!(data.k, 1);
    }

    #[test]
    fn arnoldi_cyclic_shift() {
        // U e_j = e_{j+1 mod 4}, psi0 = e_0: basis {e_0..e_3}, subdiagonal 1,
        // top-right corner 1
        let mat = Mat::from_fn(4, 4, |i, j| {
            if i == (j + 1) % 4 {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let u = FloquetMap::from_dense(mat, "shift").unwrap();
        let data =
            arnoldi_unitary(&u, &QuantumState::basis_state(4, 0).unwrap(), 8, 1e-12).unwrap();
        assert_eq!(data.k, 4);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j + 1 || (i == 0 && j == 3) {
                    1.0
                } else {
                    0.0
                };
                assert!(
                    (data.h_hess[(i, j)] - c(expect, 0.0)).norm() < 1e-12,
                    "H[{i},{j}] = {:?}",
                    data.h_hess[(i, j)]
                );
            }
        }
        // strict Hessenberg structure and nonnegative real subdiagonal
        for j in 0..4 {
            for i in (j + 2)..4 {
                assert_eq!(data.h_hess[(i, j)], c(0.0, 0.0));
            }
            if j + 1 < 4 {
                assert!(data.h_hess[(j + 1, j)].im == 0.0);
                assert!(data.h_hess[(j + 1, j)].re >= 0.0);
            }
        }
    }

    #[test]
    fn arnoldi_hessenberg_reconstruction() {
        let map =
            crate::models::kicked_ising(&crate::models::KickedIsingParams::chaotic_defaults(6))
                .unwrap();
        let psi0 = random_state(64, &mut RngStream::new(3)).unwrap();
        let data = arnoldi_unitary(&map, &psi0, 20, 1e-12).unwrap();
        let basis = match data.basis.as_ref().unwrap() {
            KrylovBasis::States(v) => v,
            _ => unreachable!(),
        };
        assert!(data.basis.as_ref().unwrap().max_cross_overlap() < 1e-10);
        // || U K_n - sum_{m <= n+1} H_mn K_m || < 1e-9 for interior n
        for n in 0..data.k - 1 {
            let mut uv = basis[n].clone();
            map.apply_vec(&mut uv);
            for m in 0..=(n + 1).min(data.k - 1) {
                let hmn = data.h_hess[(m, n)];
                for (x, v) in uv.iter_mut().zip(&basis[m]) {
                    *x -= hmn * *v;
                }
            }
            assert!(crate::hilbert::l2_norm(&uv) < 1e-9, "residual at n = {n}");
        }
    }

    #[test]
    fn chain_propagation_two_site_closed_form() {
        let data = LanczosData {
            a: vec![0.0, 0.0],
            b: vec![1.0],
            k: 2,
            basis: None,
            termination: Termination::Tolerance,
        };
        let grid: Vec<f64> = (0..30).map(|i| i as f64 * 0.21).collect();
        let amps = krylov_propagate(&data, &grid).unwrap();
        assert!(amps.max_norm_error() < 1e-10);
        for (it, &t) in grid.iter().enumerate() {
            assert!((amps.psi[it][0] - c(t.cos(), 0.0)).norm() < 1e-12);
            assert!((amps.psi[it][1] - c(0.0, -t.sin())).norm() < 1e-12);
        }
        let ck = k_complexity(&amps);
        for (it, &t) in grid.iter().enumerate() {
            assert!((ck.values[it] - t.sin().powi(2)).abs() < 1e-12);
        }
        // t = 0 initialization
        assert!((amps.psi[0][0] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn chain_matches_exact_evolution() {
        let dim = 48;
        let mut rng = RngStream::new(29);
        let h = goe_hamiltonian(dim, &mut rng).unwrap();
        let psi0 = random_state(dim, &mut rng).unwrap();
        let data = lanczos_state(&h, &psi0, dim, None).unwrap();
        let basis = match data.basis.as_ref().unwrap() {
            KrylovBasis::States(v) => v,
            _ => unreachable!(),
        };
        let grid: Vec<f64> = (0..20).map(|i| i as f64 * 0.33).collect();
        let amps = krylov_propagate(&data, &grid).unwrap();
        assert!(amps.max_norm_error() < 1e-10);
        let traj = evolve_hamiltonian(&h, &psi0, &grid).unwrap();
        for (it, state) in traj.states.iter().enumerate() {
            for (n, kn) in basis.iter().enumerate() {
                let kn_state = QuantumState::from_normalized_unchecked(kn.clone());
                let exact = inner(&kn_state, state).unwrap();
                assert!(
                    (exact.norm() - amps.psi[it][n].norm()).abs() < 1e-8,
                    "n = {n}, t = {}",
                    grid[it]
                );
            }
        }
    }

    #[test]
    fn operator_convention_solves_real_chain_equation() {
        // d/dt phi_n = b_n phi_{n-1} - b_{n+1} phi_{n+1}, checked by a
        // centered finite difference
        let data = LanczosData {
            a: vec![0.0; 4],
            b: vec![1.0, 1.5, 0.7],
            k: 4,
            basis: None,
            termination: Termination::MaxK,
        };
        let t0 = 0.9;
        let eps = 1e-5;
        let amps = krylov_propagate(&data, &[t0 - eps, t0, t0 + eps]).unwrap();
        let phi = amps.to_operator_convention();
        let b = |n: usize| -> f64 {
            if n == 0 || n > data.b.len() {
                0.0
            } else {
                data.b[n - 1]
            }
        };
        for n in 0..4 {
            let dphi = (phi.psi[2][n] - phi.psi[0][n]) / (2.0 * eps);
            let prev = if n > 0 {
                phi.psi[1][n - 1]
            } else {
                c(0.0, 0.0)
            };
            let next = if n + 1 < 4 {
                phi.psi[1][n + 1]
            } else {
                c(0.0, 0.0)
            };
            let rhs = b(n) * prev - b(n + 1) * next;
            assert!((dphi - rhs).norm() < 1e-8, "site {n}: {dphi:?} vs {rhs:?}");
        }
    }

    #[test]
    fn arnoldi_propagation_matches_exact_floquet() {
        let map =
            crate::models::kicked_ising(&crate::models::KickedIsingParams::chaotic_defaults(4))
                .unwrap();
        let psi0 = random_state(16, &mut RngStream::new(6)).unwrap();
        // run to closure so the Hessenberg matrix is exactly unitary in the
        // Krylov basis
        let data = arnoldi_unitary(&map, &psi0, 16, 1e-12).unwrap();
        let basis = match data.basis.as_ref().unwrap() {
            KrylovBasis::States(v) => v,
            _ => unreachable!(),
        };
        let steps = 10;
        let amps = krylov_propagate_arnoldi(&data, steps).unwrap();
        assert!(amps.max_norm_error() < 1e-9);
        let traj = crate::propagate::evolve_floquet(&map, &psi0, steps).unwrap();
        for (it, state) in traj.states.iter().enumerate() {
            for (n, kn) in basis.iter().enumerate() {
                let kn_state = QuantumState::from_normalized_unchecked(kn.clone());
                let exact = inner(&kn_state, state).unwrap();
                assert!(
                    (exact - amps.psi[it][n]).norm() < 1e-8,
                    "n = {n}, step {it}"
                );
            }
        }
    }

    #[test]
    fn k_saturation_trivial_cases() {
        // eigenstate seed: K = 1, saturation 0
        let psi0 = QuantumState::basis_state(2, 0).unwrap();
        let data = lanczos_state(&sigma_z(), &psi0, 10, None).unwrap();
        let sat = k_saturation(&sigma_z(), &psi0, &data).unwrap();
        assert_eq!(sat.value, 0.0);
    }

    #[test]
    fn k_saturation_matches_time_average() {
        let dim = 64;
        let mut rng = RngStream::new(41);
        let h = goe_hamiltonian(dim, &mut rng).unwrap();
        let psi0 = random_state(dim, &mut rng).unwrap();
        let data = lanczos_state(&h, &psi0, dim, None).unwrap();
        let sat = k_saturation(&h, &psi0, &data).unwrap();
        assert!(!sat.degenerate_warning);
        let grid: Vec<f64> = (0..600).map(|i| 1000.0 + i as f64 * 15.0).collect();
        let amps = krylov_propagate(&data, &grid).unwrap();
        let ck = k_complexity(&amps);
        let avg = ck.values.iter().sum::<f64>() / ck.values.len() as f64;
        assert!(
            (avg - sat.value).abs() < 0.03 * sat.value,
            "time average {avg} vs diagonal ensemble {}",
            sat.value
        );
    }

    #[test]
    fn k_complexity_bounds() {
        let dim = 24;
        let mut rng = RngStream::new(13);
        let h = goe_hamiltonian(dim, &mut rng).unwrap();
        let psi0 = random_state(dim, &mut rng).unwrap();
        let data = lanczos_state(&h, &psi0, dim, None).unwrap();
        let grid: Vec<f64> = (0..50).map(|i| i as f64 * 0.4).collect();
        let ck = k_complexity(&krylov_propagate(&data, &grid).unwrap());
        assert!(ck.values[0].abs() < 1e-12);
        for &v in &ck.values {
            assert!(v >= 0.0 && v <= (data.k - 1) as f64 + 1e-10);
        }
    }

    #[test]
    fn lanczos_stats_synthetic() {
        let constant = LanczosData {
            a: vec![0.0; 32],
            b: vec![3.0; 31],
            k: 32,
            basis: None,
            termination: Termination::MaxK,
        };
        let s = lanczos_stats(&constant).unwrap();
        assert!(s.slope_alpha.abs() < 1e-12);
        assert!((s.plateau_mean - 3.0).abs() < 1e-12);
        assert_eq!(s.fluctuation_measure, 0.0);

        let alpha = 0.8;
        let linear = LanczosData {
            a: vec![0.0; 32],
            b: (1..32).map(|n| alpha * n as f64).collect(),
            k: 32,
            basis: None,
            termination: Termination::MaxK,
        };
        let s = lanczos_stats(&linear).unwrap();
        assert!((s.slope_alpha - alpha).abs() < 1e-12);

        let short = LanczosData {
            a: vec![0.0; 8],
            b: vec![1.0; 7],
            k: 8,
            basis: None,
            termination: Termination::MaxK,
        };
        assert!(lanczos_stats(&short).is_err());
    }

    #[test]
    fn synthetic_linear_chain_grows_monotonically_early() {
        // smoke test: b_n = alpha n chain has monotone-growing C_K at early
        // times
        let k = 40;
        let data = LanczosData {
            a: vec![0.0; k],
            b: (1..k).map(|n| 0.5 * n as f64).collect(),
            k,
            basis: None,
            termination: Termination::MaxK,
        };
        let grid: Vec<f64> = (0..12).map(|i| i as f64 * 0.05).collect();
        let ck = k_complexity(&krylov_propagate(&data, &grid).unwrap());
        for w in ck.values.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "not monotone: {:?}", ck.values);
        }
    }
}
