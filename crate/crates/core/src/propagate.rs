//! Exact and approximate time evolution for states and Heisenberg operators.
//!
//! Exact eigendecomposition is the reference propagator for Hamiltonians;
//! Chebyshev and Trotter-Suzuki exist for cross-validation. Floquet maps
//! evolve by repeated application of the one-period unitary.

use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::hilbert::{DenseOperator, QuantumState, C64};
use crate::models::FloquetMap;

/// Exact Hamiltonian propagator from a full eigendecomposition.
#[derive(Debug, Clone)]
pub struct EigenPropagator {
    energies: Vec<f64>,
    vectors: Mat<C64>,
}

impl EigenPropagator {
    pub fn new(h: &DenseOperator) -> Result<Self> {
        if !h.is_hermitian() {
            return Err(Error::NotHermitian(h.hermiticity_deviation()));
        }
        let evd = h
            .mat()
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::InvalidParameter(format!("eigendecomposition failed: {e:?}")))?;
        let s = evd.S().column_vector().to_owned();
        let energies = (0..h.dim()).map(|i| s[i].re).collect();
        Ok(Self {
            energies,
            vectors: evd.U().to_owned(),
        })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn eigenvectors(&self) -> &Mat<C64> {
        &self.vectors
    }

    /// Smallest gap between consecutive sorted eigenvalues.
    pub fn min_gap(&self) -> f64 {
        let mut sorted = self.energies.clone();
        sorted.sort_by(f64::total_cmp);
        sorted
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Coefficients of psi in the eigenbasis.
    pub fn to_eigenbasis(&self, psi: &QuantumState) -> Result<Vec<C64>> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch(self.dim(), psi.dim()));
        }
        let n = self.dim();
        let amps = psi.amplitudes();
        Ok((0..n)
            .map(|k| (0..n).map(|i| self.vectors[(i, k)].conj() * amps[i]).sum())
            .collect())
    }

    /// exp(-i H t) psi.
    pub fn state_at(&self, psi: &QuantumState, t: f64) -> Result<QuantumState> {
        let coeffs = self.to_eigenbasis(psi)?;
        Ok(self.state_from_coeffs(&coeffs, t))
    }

    fn state_from_coeffs(&self, coeffs: &[C64], t: f64) -> QuantumState {
        let n = self.dim();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for k in 0..n {
            let c = coeffs[k] * C64::from_polar(1.0, -self.energies[k] * t);
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.vectors[(i, k)] * c;
            }
        }
        QuantumState::from_normalized_unchecked(out)
    }

    /// V^dag M V (into the eigenbasis).
    pub fn to_eigenbasis_op(&self, m: &Mat<C64>) -> Mat<C64> {
        self.vectors.adjoint() * m * &self.vectors
    }

    /// V M V^dag (back from the eigenbasis).
    pub fn from_eigenbasis_op(&self, m: &Mat<C64>) -> Mat<C64> {
        &self.vectors * m * self.vectors.adjoint()
    }

    /// e^{iHt} O e^{-iHt} for an operator already in the eigenbasis:
    /// elementwise phases e^{i (E_i - E_j) t}.
    pub fn heisenberg_phases_in_eigenbasis(&self, o_eig: &Mat<C64>, t: f64) -> Mat<C64> {
        let n = self.dim();
        Mat::from_fn(n, n, |i, j| {
            o_eig[(i, j)] * C64::from_polar(1.0, (self.energies[i] - self.energies[j]) * t)
        })
    }
}

/// Unified evolver over Floquet maps and Hamiltonians.
#[derive(Debug, Clone)]
pub enum Evolver {
    Floquet(FloquetMap),
    Hamiltonian(EigenPropagator),
}

impl Evolver {
    pub fn hamiltonian(h: &DenseOperator) -> Result<Self> {
        Ok(Evolver::Hamiltonian(EigenPropagator::new(h)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            Evolver::Floquet(m) => m.dim(),
            Evolver::Hamiltonian(p) => p.dim(),
        }
    }

    /// State at time t. Floquet maps require t to be a whole number of
    /// periods.
    pub fn state_at(&self, psi0: &QuantumState, t: f64) -> Result<QuantumState> {
        match self {
            Evolver::Hamiltonian(p) => p.state_at(psi0, t),
            Evolver::Floquet(map) => {
                let steps = float_steps(t)?;
                if psi0.dim() != map.dim() {
                    return Err(Error::DimensionMismatch(map.dim(), psi0.dim()));
                }
                let mut v = psi0.amplitudes().to_vec();
                for _ in 0..steps {
                    map.apply_vec(&mut v);
                }
                Ok(QuantumState::from_normalized_unchecked(v))
            }
        }
    }

    /// Backward evolution over duration t (the time-reversal leg of an echo).
    pub fn state_at_reversed(&self, psi: &QuantumState, t: f64) -> Result<QuantumState> {
        match self {
            Evolver::Hamiltonian(p) => p.state_at(psi, -t),
            Evolver::Floquet(map) => {
                let steps = float_steps(t)?;
                if psi.dim() != map.dim() {
                    return Err(Error::DimensionMismatch(map.dim(), psi.dim()));
                }
                let mut v = psi.amplitudes().to_vec();
                for _ in 0..steps {
                    map.apply_adjoint_vec(&mut v);
                }
                Ok(QuantumState::from_normalized_unchecked(v))
            }
        }
    }
}

fn float_steps(t: f64) -> Result<usize> {
    let n = t.round();
    if (t - n).abs() > 1e-9 || n < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "Floquet evolution needs a non-negative whole number of periods, got t = {t}"
        )));
    }
    Ok(n as usize)
}

/// Time-ordered sequence of states.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<QuantumState>,
}

impl Trajectory {
    pub fn max_norm_error(&self) -> f64 {
        self.states
            .iter()
            .map(|s| s.norm_error())
            .fold(0.0, f64::max)
    }
}

/// states[n] = U^n psi0, times[n] = n.
pub fn evolve_floquet(map: &FloquetMap, psi0: &QuantumState, steps: usize) -> Result<Trajectory> {
    if psi0.dim() != map.dim() {
        return Err(Error::DimensionMismatch(map.dim(), psi0.dim()));
    }
    let mut states = Vec::with_capacity(steps + 1);
    let mut times = Vec::with_capacity(steps + 1);
    let mut v = psi0.amplitudes().to_vec();
    states.push(psi0.clone());
    times.push(0.0);
    for n in 1..=steps {
        map.apply_vec(&mut v);
        states.push(QuantumState::from_normalized_unchecked(v.clone()));
        times.push(n as f64);
    }
    Ok(Trajectory { times, states })
}

/// Exact evolution psi(t) = sum_i e^{-i E_i t} |e_i><e_i|psi0> on a time grid.
pub fn evolve_hamiltonian(
    h: &DenseOperator,
    psi0: &QuantumState,
    t_grid: &[f64],
) -> Result<Trajectory> {
    let prop = EigenPropagator::new(h)?;
    let coeffs = prop.to_eigenbasis(psi0)?;
    let states = t_grid
        .iter()
        .map(|&t| prop.state_from_coeffs(&coeffs, t))
        .collect();
    Ok(Trajectory {
        times: t_grid.to_vec(),
        states,
    })
}

/// Chebyshev approximation of exp(-i H t) psi0.
#[derive(Debug, Clone)]
pub struct ChebyshevResult {
    pub state: QuantumState,
    /// Magnitude of the last retained Bessel coefficient; the truncation
    /// error estimate.
    pub truncation_estimate: f64,
    /// False when the order was too small for ~1e-10 accuracy.
    pub converged: bool,
}

/// Spectral radius estimate by power iteration with a 1.05 safety margin.
pub fn spectral_radius_estimate(h: &DenseOperator) -> f64 {
    let n = h.dim();
    // fixed deterministic start vector
    let mut v: Vec<C64> = (0..n)
        .map(|i| C64::new(1.0 + (i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()))
        .collect();
    let mut radius = 1.0;
    for _ in 0..60 {
        let norm = crate::hilbert::l2_norm(&v);
        v.iter_mut().for_each(|x| *x /= norm);
        let mut w = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            let xj = v[j];
            for (i, wi) in w.iter_mut().enumerate() {
                *wi += h.mat()[(i, j)] * xj;
            }
        }
        radius = crate::hilbert::l2_norm(&w);
        v = w;
    }
    radius * 1.05
}

/// Regular Bessel functions J_0..J_kmax at x, by Miller's backward recurrence.
pub fn bessel_j_sequence(kmax: usize, x: f64) -> Vec<f64> {
    if x == 0.0 {
        let mut out = vec![0.0; kmax + 1];
        out[0] = 1.0;
        return out;
    }
    let x = x.abs();
    let start = kmax + 20 + (2.0 * x.max(kmax as f64).sqrt() * 4.0) as usize + x as usize / 2;
    let mut jp = 0.0f64; // J_{k+1}
    let mut j = 1e-30f64; // J_k
    let mut out = vec![0.0; kmax + 1];
    let mut norm = 0.0f64; // J_0 + 2 sum_{k even > 0} J_k
    for k in (0..=start).rev() {
        let jm = 2.0 * (k as f64 + 1.0) / x * j - jp;
        jp = j;
        j = jm;
        if k <= kmax {
            out[k] = j;
        }
        if k % 2 == 0 {
            norm += if k == 0 { j } else { 2.0 * j };
        }
        // rescale to avoid overflow
        if j.abs() > 1e250 {
            let s = 1e-250;
            j *= s;
            jp *= s;
            norm *= s;
            out.iter_mut().for_each(|o| *o *= s);
        }
    }
    out.iter_mut().for_each(|o| *o /= norm);
    out
}

/// Chebyshev propagation of psi0 under exp(-i H t), truncated at `order`.
pub fn chebyshev_propagate(
    h: &DenseOperator,
    psi0: &QuantumState,
    t: f64,
    order: usize,
) -> Result<ChebyshevResult> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian(h.hermiticity_deviation()));
    }
    if h.dim() != psi0.dim() {
        return Err(Error::DimensionMismatch(h.dim(), psi0.dim()));
    }
    let order = order.max(1);
    let w = spectral_radius_estimate(h);
    let x = w * t.abs();
    let bessel = bessel_j_sequence(order, x);
    let n = h.dim();
    let sign = if t >= 0.0 { -1.0 } else { 1.0 };

    let apply_scaled = |v: &[C64]| -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            let xj = v[j];
            for (i, o) in out.iter_mut().enumerate() {
                *o += h.mat()[(i, j)] * xj;
            }
        }
        out.iter_mut().for_each(|o| *o /= w);
        out
    };

    // phi_0 = psi, phi_{k+1} = 2 (H/w) phi_k - phi_{k-1}
    let mut phi_prev = psi0.amplitudes().to_vec();
    let mut phi = apply_scaled(&phi_prev);
    let mut acc: Vec<C64> = phi_prev.iter().map(|a| *a * bessel[0]).collect();
    // (-i)^k for t > 0; (+i)^k for t < 0 (J_k(-x) = (-1)^k J_k(x) absorbed)
    let mut ik = C64::new(0.0, sign);
    for (a, p) in acc.iter_mut().zip(phi.iter()) {
        *a += *p * (2.0 * bessel[1]) * ik;
    }
    for k in 2..=order {
        let mut phi_next = apply_scaled(&phi);
        for ((nx, cur), prev) in phi_next.iter_mut().zip(&phi).zip(&phi_prev) {
            *nx = *nx * 2.0 - prev;
            let _ = cur;
        }
        phi_prev = std::mem::replace(&mut phi, phi_next);
        ik *= C64::new(0.0, sign);
        let coef = 2.0 * bessel[k];
        for (a, p) in acc.iter_mut().zip(phi.iter()) {
            *a += *p * coef * ik;
        }
    }
    let truncation_estimate = bessel[order].abs();
    Ok(ChebyshevResult {
        state: QuantumState::from_normalized_unchecked(acc),
        truncation_estimate,
        converged: truncation_estimate < 1e-10,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrotterScheme {
    First,
    Second,
}

/// One Trotter-Suzuki step over the given Hamiltonian parts.
pub fn trotter_step(
    parts: &[DenseOperator],
    psi: &QuantumState,
    dt: f64,
    scheme: TrotterScheme,
) -> Result<QuantumState> {
    if parts.is_empty() {
        return Err(Error::Empty("trotter_step needs at least one part"));
    }
    let props: Vec<EigenPropagator> = parts
        .iter()
        .map(EigenPropagator::new)
        .collect::<Result<_>>()?;
    let mut state = psi.clone();
    match scheme {
        TrotterScheme::First => {
            for p in &props {
                state = p.state_at(&state, dt)?;
            }
        }
        TrotterScheme::Second => {
            for p in &props {
                state = p.state_at(&state, dt / 2.0)?;
            }
            for p in props.iter().rev() {
                state = p.state_at(&state, dt / 2.0)?;
            }
        }
    }
    Ok(state)
}

/// Applies `f` to every column of `m` in place, through a scratch buffer.
pub fn map_columns(m: &mut Mat<C64>, mut f: impl FnMut(&mut [C64])) {
    let n = m.nrows();
    let mut scratch = vec![C64::new(0.0, 0.0); n];
    for j in 0..m.ncols() {
        for i in 0..n {
            scratch[i] = m[(i, j)];
        }
        f(&mut scratch);
        for i in 0..n {
            m[(i, j)] = scratch[i];
        }
    }
}

/// U^dag O U for a Floquet map, using only vector applications.
pub fn floquet_conjugate(map: &FloquetMap, o: &Mat<C64>) -> Mat<C64> {
    // M = U^dag O (adjoint applied to each column), R = M U via R^T = U^T M^T
    let mut m = o.clone();
    map_columns(&mut m, |col| map.apply_adjoint_vec(col));
    let mut mt = m.transpose().to_owned();
    map_columns(&mut mt, |col| map.apply_transpose_vec(col));
    mt.transpose().to_owned()
}

/// U O U^dag (the reverse conjugation).
pub fn floquet_conjugate_reverse(map: &FloquetMap, o: &Mat<C64>) -> Mat<C64> {
    // M = U O, R = M U^dag; (M U^dag)^T = (U^dag)^T M^T = conj(U) M^T,
    // and conj(U) x = conj(U conj(x))
    let mut m = o.clone();
    map_columns(&mut m, |col| map.apply_vec(col));
    let mut mt = m.transpose().to_owned();
    map_columns(&mut mt, |col| {
        col.iter_mut().for_each(|x| *x = x.conj());
        map.apply_vec(col);
        col.iter_mut().for_each(|x| *x = x.conj());
    });
    mt.transpose().to_owned()
}

/// Heisenberg-evolved operator: U^dag^n O U^n (Floquet, t = whole periods) or
/// e^{iHt} O e^{-iHt} (Hamiltonian).
pub fn heisenberg_evolve(evolver: &Evolver, o: &DenseOperator, t: f64) -> Result<DenseOperator> {
    if evolver.dim() != o.dim() {
        return Err(Error::DimensionMismatch(evolver.dim(), o.dim()));
    }
    let mat = match evolver {
        Evolver::Floquet(map) => {
            let steps = float_steps(t)?;
            let mut cur = o.mat().clone();
            for _ in 0..steps {
                cur = floquet_conjugate(map, &cur);
            }
            cur
        }
        Evolver::Hamiltonian(p) => {
            let o_eig = p.to_eigenbasis_op(o.mat());
            let evolved = p.heisenberg_phases_in_eigenbasis(&o_eig, t);
            p.from_eigenbasis_op(&evolved)
        }
    };
    if o.is_hermitian() {
        // conjugation preserves hermiticity; re-assert the flag
        DenseOperator::hermitian(symmetrize(&mat))
    } else {
        DenseOperator::new(mat)
    }
}

/// (M + M^dag)/2; removes roundoff-level hermiticity drift.
pub fn symmetrize(m: &Mat<C64>) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        (m[(i, j)] + m[(j, i)].conj()) * 0.5
    })
}
