//! Model builders: quantized and classical perturbed cat maps, the kicked
//! Ising chain, and GOE random Hamiltonians.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use faer::Mat;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{DenseOperator, QuantumState, RngStream, C64};

/// Parameters of the perturbed cat map on an N-dimensional torus Hilbert space.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CatMapParams {
    #[serde(rename = "N")]
    pub n: usize,
    pub kappa: f64,
}

impl CatMapParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || !self.n.is_multiple_of(2) {
            return Err(Error::InvalidDimension(format!(
                "cat map dimension N must be even and >= 2, got {}",
                self.n
            )));
        }
        if !self.kappa.is_finite() {
            return Err(Error::InvalidParameter("kappa must be finite".into()));
        }
        Ok(())
    }

    /// Effective Planck constant 1/(2 pi N).
    pub fn hbar_eff(&self) -> f64 {
        1.0 / (TAU * self.n as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

/// Parameters of the kicked Ising chain
/// U = exp[-i sum_j (J sz_j sz_{j+1} + h sz_j)] exp[-i b sum_j sx_j].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KickedIsingParams {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "J")]
    pub j: f64,
    pub b: f64,
    pub h: f64,
    pub boundary: Boundary,
}

pub const KICKED_ISING_MAX_SITES: usize = 14;

impl KickedIsingParams {
    /// Self-dual chaotic reference point.
    pub fn chaotic_defaults(l: usize) -> Self {
        Self {
            l,
            j: PI / 4.0,
            b: PI / 4.0,
            h: 0.4,
            boundary: Boundary::Periodic,
        }
    }

    /// Integrable transverse-field line (h = 0).
    pub fn integrable_defaults(l: usize) -> Self {
        Self {
            h: 0.0,
            ..Self::chaotic_defaults(l)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.l < 2 || self.l > KICKED_ISING_MAX_SITES {
            return Err(Error::InvalidDimension(format!(
                "kicked Ising needs 2 <= L <= {KICKED_ISING_MAX_SITES} for dense feasibility, got {}",
                self.l
            )));
        }
        for (name, v) in [("J", self.j), ("b", self.b), ("h", self.h)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        1usize << self.l
    }
}

/// One-period Floquet unitary with either a dense matrix or a structured
/// factored application rule.
#[derive(Clone)]
pub struct FloquetMap {
    dim: usize,
    kind: MapKind,
    description: String,
}

#[derive(Clone)]
enum MapKind {
    Dense(Arc<Mat<C64>>),
    /// global * D1 . DFT . D2 . Vk, all factors diagonal except the DFT.
    CatFactored {
        d1: Arc<Vec<C64>>,
        /// product of the inner quadratic phase and the perturbation kick
        d2vk: Arc<Vec<C64>>,
        fft: Arc<dyn Fft<f64>>,
        ifft: Arc<dyn Fft<f64>>,
        global: C64,
    },
    /// diag(phases) . (single-qubit kick on every site)
    SpinFactored {
        sites: usize,
        diag: Arc<Vec<C64>>,
        kick: [[C64; 2]; 2],
    },
}

impl std::fmt::Debug for FloquetMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FloquetMap")
            .field("dim", &self.dim)
            .field("description", &self.description)
            .finish()
    }
}

impl FloquetMap {
    pub fn from_dense(mat: Mat<C64>, description: impl Into<String>) -> Result<Self> {
        let op = DenseOperator::unitary(mat)?;
        Ok(Self {
            dim: op.dim(),
            kind: MapKind::Dense(Arc::new(op.mat().clone())),
            description: description.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn is_factored(&self) -> bool {
        !matches!(self.kind, MapKind::Dense(_))
    }

    /// U x in place.
    pub fn apply_vec(&self, x: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        match &self.kind {
            MapKind::Dense(m) => dense_apply(m, x, false),
            MapKind::CatFactored {
                d1,
                d2vk,
                fft,
                global,
                ..
            } => {
                let scale = *global / (self.dim as f64).sqrt();
                for (xi, d) in x.iter_mut().zip(d2vk.iter()) {
                    *xi *= *d;
                }
                fft.process(x);
                for (xi, d) in x.iter_mut().zip(d1.iter()) {
                    *xi *= *d * scale;
                }
            }
            MapKind::SpinFactored { sites, diag, kick } => {
                apply_kick_layer(x, *sites, kick);
                for (xi, d) in x.iter_mut().zip(diag.iter()) {
                    *xi *= *d;
                }
            }
        }
    }

    /// U^dag x in place.
    pub fn apply_adjoint_vec(&self, x: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        match &self.kind {
            MapKind::Dense(m) => dense_apply(m, x, true),
            MapKind::CatFactored {
                d1,
                d2vk,
                ifft,
                global,
                ..
            } => {
                let scale = global.conj() / (self.dim as f64).sqrt();
                for (xi, d) in x.iter_mut().zip(d1.iter()) {
                    *xi *= d.conj();
                }
                ifft.process(x);
                for (xi, d) in x.iter_mut().zip(d2vk.iter()) {
                    *xi *= d.conj() * scale;
                }
            }
            MapKind::SpinFactored { sites, diag, kick } => {
                for (xi, d) in x.iter_mut().zip(diag.iter()) {
                    *xi *= d.conj();
                }
                let kick_adj = [
                    [kick[0][0].conj(), kick[1][0].conj()],
                    [kick[0][1].conj(), kick[1][1].conj()],
                ];
                apply_kick_layer(x, *sites, &kick_adj);
            }
        }
    }

    /// U^T x in place. All factored forms are built from symmetric factors,
    /// so the transpose is the reverse-order product.
    pub fn apply_transpose_vec(&self, x: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        match &self.kind {
            MapKind::Dense(m) => dense_apply_transpose(m, x),
            MapKind::CatFactored {
                d1,
                d2vk,
                fft,
                global,
                ..
            } => {
                let scale = *global / (self.dim as f64).sqrt();
                for (xi, d) in x.iter_mut().zip(d1.iter()) {
                    *xi *= *d;
                }
                fft.process(x);
                for (xi, d) in x.iter_mut().zip(d2vk.iter()) {
                    *xi *= *d * scale;
                }
            }
            MapKind::SpinFactored { sites, diag, kick } => {
                for (xi, d) in x.iter_mut().zip(diag.iter()) {
                    *xi *= *d;
                }
                apply_kick_layer(x, *sites, kick);
            }
        }
    }

    pub fn apply(&self, psi: &QuantumState) -> Result<QuantumState> {
        if psi.dim() != self.dim {
            return Err(Error::DimensionMismatch(self.dim, psi.dim()));
        }
        let mut v = psi.amplitudes().to_vec();
        self.apply_vec(&mut v);
        Ok(QuantumState::from_normalized_unchecked(v))
    }

    pub fn apply_adjoint(&self, psi: &QuantumState) -> Result<QuantumState> {
        if psi.dim() != self.dim {
            return Err(Error::DimensionMismatch(self.dim, psi.dim()));
        }
        let mut v = psi.amplitudes().to_vec();
        self.apply_adjoint_vec(&mut v);
        Ok(QuantumState::from_normalized_unchecked(v))
    }

    /// Materializes the dense matrix by applying the map to basis vectors.
    pub fn to_dense(&self) -> Mat<C64> {
        if let MapKind::Dense(m) = &self.kind {
            return (**m).clone();
        }
        let n = self.dim;
        let mut out = Mat::zeros(n, n);
        let mut col = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            col.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
            col[j] = C64::new(1.0, 0.0);
            self.apply_vec(&mut col);
            for i in 0..n {
                out[(i, j)] = col[i];
            }
        }
        out
    }

    /// Norm drift of U applied to a seeded random state; used to check the
    /// unitarity invariant of factored maps.
    pub fn unitarity_probe(&self, seed: u64) -> f64 {
        let psi = crate::hilbert::random_state(self.dim, &mut RngStream::new(seed)).unwrap();
        let out = self.apply(&psi).unwrap();
        (out.norm() - 1.0).abs()
    }
}

fn dense_apply(m: &Mat<C64>, x: &mut [C64], adjoint: bool) {
    let n = m.nrows();
    let mut out = vec![C64::new(0.0, 0.0); n];
    if adjoint {
        // (U^dag x)_i = sum_j conj(U_ji) x_j; column-major friendly
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (j, xj) in x.iter().enumerate() {
                acc += m[(j, i)].conj() * *xj;
            }
            *o = acc;
        }
    } else {
        for (j, xj) in x.iter().enumerate() {
            for (i, o) in out.iter_mut().enumerate() {
                *o += m[(i, j)] * *xj;
            }
        }
    }
    x.copy_from_slice(&out);
}

fn dense_apply_transpose(m: &Mat<C64>, x: &mut [C64]) {
    let n = m.nrows();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (j, xj) in x.iter().enumerate() {
            acc += m[(j, i)] * *xj;
        }
        *o = acc;
    }
    x.copy_from_slice(&out);
}

/// Applies the same 2x2 gate to every qubit of an L-site register.
fn apply_kick_layer(x: &mut [C64], sites: usize, g: &[[C64; 2]; 2]) {
    for q in 0..sites {
        let stride = 1usize << q;
        let mut base = 0;
        while base < x.len() {
            for off in 0..stride {
                let i0 = base + off;
                let i1 = i0 + stride;
                let a = x[i0];
                let b = x[i1];
                x[i0] = g[0][0] * a + g[0][1] * b;
                x[i1] = g[1][0] * a + g[1][1] * b;
            }
            base += stride << 1;
        }
    }
}

/// Quantized perturbed cat map U_k = U_cat . V_k.
///
/// U_cat is the torus quantization of A = [[2,1],[1,1]] with matrix elements
/// (iN)^{-1/2} exp[(i pi / N)(2 k^2 - 2 j k + j^2)] (k the input index, so
/// the classical limit is q' = 2q + p), factored as
/// e^{-i pi/4} D1 . DFT . D2 with D1_j = exp(i pi j^2 / N) on the output and
/// D2_k = exp(2 pi i k^2 / N) on the input. The perturbation is the diagonal
/// kick phase V_k = exp[-i (N kappa / 2 pi) cos(2 pi k / N)], acting before
/// the cat step like its classical counterpart.
pub fn catmap_quantum(params: &CatMapParams) -> Result<FloquetMap> {
    params.validate()?;
    let n = params.n;
    let nf = n as f64;
    // output-side phase exp(i pi j^2 / N); the 2 q^2 part of the generating
    // function sits on the input side so that the classical limit is
    // q' = 2q + p (A acts after the kick)
    let d1: Vec<C64> = (0..n)
        .map(|j| C64::from_polar(1.0, PI * ((j * j) % (2 * n)) as f64 / nf))
        .collect();
    let d2vk: Vec<C64> = (0..n)
        .map(|k| {
            let quad = TAU * ((k * k) % n) as f64 / nf;
            let kick = -(nf * params.kappa / TAU) * (TAU * k as f64 / nf).cos();
            C64::from_polar(1.0, quad + kick)
        })
        .collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);
    let global = C64::from_polar(1.0, -PI / 4.0);
    let factored = FloquetMap {
        dim: n,
        kind: MapKind::CatFactored {
            d1: Arc::new(d1),
            d2vk: Arc::new(d2vk),
            fft,
            ifft,
            global,
        },
        description: format!("perturbed cat map N={n} kappa={}", params.kappa),
    };
    // dense storage below the factored-application threshold
    if n < 512 {
        let mat = factored.to_dense();
        let mut map = FloquetMap::from_dense(mat, factored.description.clone())?;
        map.description = factored.description;
        Ok(map)
    } else {
        Ok(factored)
    }
}

/// One step of the classical perturbed cat map:
/// kick p -> p + (kappa / 2 pi) sin(2 pi q), then A = [[2,1],[1,1]] mod 1.
pub fn catmap_classical_step(q: f64, p: f64, kappa: f64) -> (f64, f64) {
    let p_kicked = p + kappa / TAU * (TAU * q).sin();
    let qn = (2.0 * q + p_kicked).rem_euclid(1.0);
    let pn = (q + p_kicked).rem_euclid(1.0);
    (qn, pn)
}

/// Tangent map of [`catmap_classical_step`] at (q, _): the Jacobian acting on
/// a tangent vector (dq, dp).
pub fn catmap_tangent_step(q: f64, kappa: f64, dq: f64, dp: f64) -> (f64, f64) {
    let c = kappa * (TAU * q).cos();
    ((2.0 + c) * dq + dp, (1.0 + c) * dq + dp)
}

/// Kicked Ising Floquet unitary, built in factored form: the Ising+field
/// factor exactly as a diagonal phase, the kick factor as a tensor product of
/// identical 2x2 x-rotations.
pub fn kicked_ising(params: &KickedIsingParams) -> Result<FloquetMap> {
    params.validate()?;
    let l = params.l;
    let dim = params.dim();
    let mut diag = vec![C64::new(0.0, 0.0); dim];
    let bonds = match params.boundary {
        Boundary::Periodic => l,
        Boundary::Open => l - 1,
    };
    for (s, d) in diag.iter_mut().enumerate() {
        let z = |site: usize| -> f64 {
            if (s >> site) & 1 == 0 {
                1.0
            } else {
                -1.0
            }
        };
        let mut energy = 0.0;
        for site in 0..bonds {
            energy += params.j * z(site) * z((site + 1) % l);
        }
        for site in 0..l {
            energy += params.h * z(site);
        }
        *d = C64::from_polar(1.0, -energy);
    }
    let (cb, sb) = (params.b.cos(), params.b.sin());
    let kick = [
        [C64::new(cb, 0.0), C64::new(0.0, -sb)],
        [C64::new(0.0, -sb), C64::new(cb, 0.0)],
    ];
    Ok(FloquetMap {
        dim,
        kind: MapKind::SpinFactored {
            sites: l,
            diag: Arc::new(diag),
            kick,
        },
        description: format!(
            "kicked Ising L={l} J={} b={} h={} {:?}",
            params.j, params.b, params.h, params.boundary
        ),
    })
}

/// The two hermitian generators of the kicked Ising step:
/// H_z = sum_j (J sz_j sz_{j+1} + h sz_j) and H_x = b sum_j sx_j.
pub fn kicked_ising_hamiltonian_parts(
    params: &KickedIsingParams,
) -> Result<(DenseOperator, DenseOperator)> {
    params.validate()?;
    let l = params.l;
    let dim = params.dim();
    let bonds = match params.boundary {
        Boundary::Periodic => l,
        Boundary::Open => l - 1,
    };
    let mut hz = Mat::<C64>::zeros(dim, dim);
    for s in 0..dim {
        let z = |site: usize| -> f64 {
            if (s >> site) & 1 == 0 {
                1.0
            } else {
                -1.0
            }
        };
        let mut energy = 0.0;
        for site in 0..bonds {
            energy += params.j * z(site) * z((site + 1) % l);
        }
        for site in 0..l {
            energy += params.h * z(site);
        }
        hz[(s, s)] = C64::new(energy, 0.0);
    }
    let mut hx = Mat::<C64>::zeros(dim, dim);
    for s in 0..dim {
        for site in 0..l {
            let flipped = s ^ (1usize << site);
            hx[(flipped, s)] += C64::new(params.b, 0.0);
        }
    }
    Ok((DenseOperator::hermitian(hz)?, DenseOperator::hermitian(hx)?))
}

/// Pauli sz acting on one site of an L-spin register (diagonal).
pub fn pauli_z_at(l: usize, site: usize) -> Result<DenseOperator> {
    if site >= l {
        return Err(Error::InvalidParameter(format!("site {site} >= L = {l}")));
    }
    let dim = 1usize << l;
    let diag: Vec<C64> = (0..dim)
        .map(|s| C64::new(if (s >> site) & 1 == 0 { 1.0 } else { -1.0 }, 0.0))
        .collect();
    DenseOperator::from_diagonal(&diag)
}

/// Pauli sx acting on one site of an L-spin register.
pub fn pauli_x_at(l: usize, site: usize) -> Result<DenseOperator> {
    if site >= l {
        return Err(Error::InvalidParameter(format!("site {site} >= L = {l}")));
    }
    let dim = 1usize << l;
    let mut mat = Mat::<C64>::zeros(dim, dim);
    for s in 0..dim {
        mat[(s ^ (1usize << site), s)] = C64::new(1.0, 0.0);
    }
    DenseOperator::unitary(mat)
}

/// GOE random Hamiltonian: real symmetric, off-diagonal variance 1/dim,
/// diagonal variance 2/dim.
pub fn goe_hamiltonian(dim: usize, rng: &mut RngStream) -> Result<DenseOperator> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!(
            "GOE needs dim >= 2, got {dim}"
        )));
    }
    let off = (1.0 / dim as f64).sqrt();
    let diag = (2.0 / dim as f64).sqrt();
    let mut mat = Mat::<C64>::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let v = rng.standard_normal() * if i == j { diag } else { off };
            mat[(i, j)] = C64::new(v, 0.0);
            mat[(j, i)] = C64::new(v, 0.0);
        }
    }
    DenseOperator::hermitian(mat)
}

/// Position observable sqrt(2) cos(2 pi q_hat / 1) on the torus grid
/// (traceless for even N, normalized so tr(V^2) = N).
pub fn torus_cos_position(n: usize) -> Result<DenseOperator> {
    let diag: Vec<C64> = (0..n)
        .map(|j| C64::new(2.0_f64.sqrt() * (TAU * j as f64 / n as f64).cos(), 0.0))
        .collect();
    DenseOperator::from_diagonal(&diag)
}

/// Momentum counterpart of [`torus_cos_position`]: the same observable
/// conjugated by the discrete Fourier transform.
pub fn torus_cos_momentum(n: usize) -> Result<DenseOperator> {
    let v = torus_cos_position(n)?;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    // W = F^dag V F: column k of W is F^dag (V (F e_k))
    let mut out = Mat::<C64>::zeros(n, n);
    let ifft = planner.plan_fft_inverse(n);
    let scale = 1.0 / n as f64;
    let diag = v.as_diagonal().expect("position observable is diagonal");
    let mut col = vec![C64::new(0.0, 0.0); n];
    for k in 0..n {
        col.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
        col[k] = C64::new(1.0, 0.0);
        fft.process(&mut col);
        for (c, d) in col.iter_mut().zip(diag.iter()) {
            *c *= *d;
        }
        ifft.process(&mut col);
        for i in 0..n {
            out[(i, k)] = col[i] * scale;
        }
    }
    DenseOperator::hermitian(out)
}
