//! Out-of-time-ordered correlators: the squared commutator
//! C(t) = <[W(t),V]^dag [W(t),V]>, the 4-point function
//! F(t) = <W(t)^dag V^dag W(t) V>, higher moments F_n, light-cone arrival
//! times, and saturation statistics.

use faer::Mat;

use crate::analysis;
use crate::error::{Error, Result};
use crate::hilbert::{frobenius_inner, DenseOperator, QuantumState, C64};
use crate::models::{kicked_ising, pauli_z_at, KickedIsingParams};
use crate::propagate::{floquet_conjugate, floquet_conjugate_reverse, heisenberg_evolve, Evolver};
use crate::series::{ComplexSeries, TimeSeries};

/// Averaging state for the correlator traces.
#[derive(Debug, Clone)]
pub enum RhoSpec {
    /// rho = I / D, evaluated as an exact trace.
    InfiniteTemperature,
    PureState(QuantumState),
    /// rho = exp(-beta H) / Z; beta = 0 reduces exactly to
    /// [`RhoSpec::InfiniteTemperature`]. Requires a Hamiltonian evolver.
    Thermal {
        beta: f64,
    },
}

impl RhoSpec {
    fn descriptor(&self) -> String {
        match self {
            RhoSpec::InfiniteTemperature => "infinite-temperature".into(),
            RhoSpec::PureState(_) => "pure-state".into(),
            RhoSpec::Thermal { beta } => format!("thermal beta={beta}"),
        }
    }
}

enum RhoEval {
    Inf,
    Pure(Vec<C64>),
    Density(Mat<C64>),
}

impl RhoEval {
    fn build(spec: &RhoSpec, evolver: &Evolver) -> Result<Self> {
        match spec {
            RhoSpec::InfiniteTemperature => Ok(RhoEval::Inf),
            RhoSpec::PureState(psi) => {
                if psi.dim() != evolver.dim() {
                    return Err(Error::DimensionMismatch(evolver.dim(), psi.dim()));
                }
                Ok(RhoEval::Pure(psi.amplitudes().to_vec()))
            }
            RhoSpec::Thermal { beta } => {
                if !beta.is_finite() || *beta < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "thermal beta must be >= 0, got {beta}"
                    )));
                }
                if *beta == 0.0 {
                    return Ok(RhoEval::Inf);
                }
                let prop = match evolver {
                    Evolver::Hamiltonian(p) => p,
                    Evolver::Floquet(_) => {
                        return Err(Error::Unsupported(
                            "thermal rho at beta > 0 needs a Hamiltonian evolver".into(),
                        ))
                    }
                };
                // rho = V diag(e^{-beta E}) V^dag / Z, shifted by the ground
                // energy for stability
                let e0 = prop
                    .energies()
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min);
                let weights: Vec<f64> = prop
                    .energies()
                    .iter()
                    .map(|e| (-beta * (e - e0)).exp())
                    .collect();
                let z: f64 = weights.iter().sum();
                let n = prop.dim();
                let diag = Mat::from_fn(n, n, |i, j| {
                    if i == j {
                        C64::new(weights[i] / z, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                });
                Ok(RhoEval::Density(prop.from_eigenbasis_op(&diag)))
            }
        }
    }
}

/// OTOC time series: F, the directly evaluated squared commutator C, and the
/// two time-ordered terms of the decomposition C = D + I - 2 Re F.
#[derive(Debug, Clone)]
pub struct OtocSeries {
    pub times: Vec<f64>,
    pub f: Vec<C64>,
    pub c: Vec<f64>,
    pub d_term: Vec<f64>,
    pub i_term: Vec<f64>,
    pub dim: usize,
    pub rho: String,
}

impl OtocSeries {
    pub fn c_series(&self) -> TimeSeries {
        TimeSeries::new(self.times.clone(), self.c.clone())
    }

    /// C reconstructed from the decomposition; an independent code path from
    /// the direct commutator evaluation.
    pub fn c_from_decomposition(&self) -> Vec<f64> {
        self.d_term
            .iter()
            .zip(&self.i_term)
            .zip(&self.f)
            .map(|((d, i), f)| d + i - 2.0 * f.re)
            .collect()
    }

    pub fn decomposition_residual(&self) -> f64 {
        self.c
            .iter()
            .zip(self.c_from_decomposition())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn mat_vec(m: &Mat<C64>, x: &[C64]) -> Vec<C64> {
    let n = m.nrows();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (j, xj) in x.iter().enumerate() {
        for (i, o) in out.iter_mut().enumerate() {
            *o += m[(i, j)] * *xj;
        }
    }
    out
}

/// (P, Q) = (W(t) V, V W(t)); diagonal V gets the O(dim^2) scaling path.
fn left_right_products(wt: &Mat<C64>, v: &DenseOperator) -> (Mat<C64>, Mat<C64>) {
    if let Some(d) = v.as_diagonal() {
        let n = wt.nrows();
        let p = Mat::from_fn(n, n, |i, j| wt[(i, j)] * d[j]);
        let q = Mat::from_fn(n, n, |i, j| d[i] * wt[(i, j)]);
        (p, q)
    } else {
        (wt * v.mat(), v.mat() * wt)
    }
}

/// (F, C, D-term, I-term) at one time from P = W(t)V and Q = VW(t).
fn evaluate_point(p: &Mat<C64>, q: &Mat<C64>, rho: &RhoEval) -> (C64, f64, f64, f64) {
    match rho {
        RhoEval::Inf => {
            let dim = p.nrows() as f64;
            let mut c = 0.0;
            for j in 0..p.ncols() {
                for i in 0..p.nrows() {
                    c += (p[(i, j)] - q[(i, j)]).norm_sqr();
                }
            }
            let f = frobenius_inner(q, p) / dim;
            let d = frobenius_inner(q, q).re / dim;
            let i = frobenius_inner(p, p).re / dim;
            (f, c / dim, d, i)
        }
        RhoEval::Pure(psi) => {
            let pv = mat_vec(p, psi);
            let qv = mat_vec(q, psi);
            let c: f64 = pv.iter().zip(&qv).map(|(a, b)| (a - b).norm_sqr()).sum();
            let f = crate::hilbert::inner_slices(&qv, &pv);
            let d: f64 = qv.iter().map(|a| a.norm_sqr()).sum();
            let i: f64 = pv.iter().map(|a| a.norm_sqr()).sum();
            (f, c, d, i)
        }
        RhoEval::Density(rho) => {
            let pr = p * rho;
            let qr = q * rho;
            let f = frobenius_inner(q, &pr);
            let d = frobenius_inner(q, &qr).re;
            let i = frobenius_inner(p, &pr).re;
            let diff = p - q;
            let diff_r = &pr - &qr;
            let c = frobenius_inner(&diff, &diff_r).re;
            (f, c, d, i)
        }
    }
}

/// Exact OTOC evaluation on a time grid.
pub fn otoc(
    v: &DenseOperator,
    w: &DenseOperator,
    evolver: &Evolver,
    t_grid: &[f64],
    rho_spec: &RhoSpec,
) -> Result<OtocSeries> {
    let dim = evolver.dim();
    if v.dim() != dim || w.dim() != dim {
        return Err(Error::DimensionMismatch(dim, v.dim().min(w.dim())));
    }
    let rho = RhoEval::build(rho_spec, evolver)?;
    let mut f = Vec::with_capacity(t_grid.len());
    let mut c = Vec::with_capacity(t_grid.len());
    let mut d_term = Vec::with_capacity(t_grid.len());
    let mut i_term = Vec::with_capacity(t_grid.len());
    let mut record = |wt: &Mat<C64>| {
        let (pp, qq) = left_right_products(wt, v);
        let (fv, cv, dv, iv) = evaluate_point(&pp, &qq, &rho);
        f.push(fv);
        c.push(cv);
        d_term.push(dv);
        i_term.push(iv);
    };
    match evolver {
        Evolver::Floquet(map) => {
            // incremental conjugation: the grid must be non-decreasing
            // whole periods
            let mut steps_grid = Vec::with_capacity(t_grid.len());
            for &t in t_grid {
                let s = t.round();
                if (t - s).abs() > 1e-9 || s < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "Floquet OTOC grid must hold whole periods, got t = {t}"
                    )));
                }
                steps_grid.push(s as usize);
            }
            if steps_grid.windows(2).any(|g| g[1] < g[0]) {
                return Err(Error::InvalidParameter(
                    "Floquet OTOC grid must be non-decreasing".into(),
                ));
            }
            let mut wt = w.mat().clone();
            let mut now = 0usize;
            for &s in &steps_grid {
                while now < s {
                    wt = floquet_conjugate(map, &wt);
                    now += 1;
                }
                record(&wt);
            }
        }
        Evolver::Hamiltonian(_) => {
            for &t in t_grid {
                let wt = heisenberg_evolve(evolver, w, t)?;
                record(wt.mat());
            }
        }
    }
    if let Some(&bad) = c.iter().find(|&&x| x < -1e-10) {
        return Err(Error::InvalidParameter(format!(
            "squared commutator {bad} below zero"
        )));
    }
    Ok(OtocSeries {
        times: t_grid.to_vec(),
        f,
        c,
        d_term,
        i_term,
        dim,
        rho: rho_spec.descriptor(),
    })
}

/// Higher out-of-time-order moment F_n(t) = tr(rho (W(t) V)^n).
pub fn otoc_higher(
    v: &DenseOperator,
    w: &DenseOperator,
    evolver: &Evolver,
    t_grid: &[f64],
    n: usize,
    rho_spec: &RhoSpec,
) -> Result<ComplexSeries> {
    if n < 1 {
        return Err(Error::InvalidParameter("otoc_higher needs n >= 1".into()));
    }
    let dim = evolver.dim();
    if v.dim() != dim || w.dim() != dim {
        return Err(Error::DimensionMismatch(dim, v.dim().min(w.dim())));
    }
    let rho = RhoEval::build(rho_spec, evolver)?;
    let mut values = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let wt = heisenberg_evolve(evolver, w, t)?;
        let (p, _) = left_right_products(wt.mat(), v);
        let fv = match &rho {
            RhoEval::Inf => {
                let mut pn = p.clone();
                for _ in 1..n {
                    pn = &pn * &p;
                }
                (0..dim).map(|i| pn[(i, i)]).sum::<C64>() / dim as f64
            }
            RhoEval::Pure(psi) => {
                let mut x = psi.clone();
                for _ in 0..n {
                    x = mat_vec(&p, &x);
                }
                crate::hilbert::inner_slices(psi, &x)
            }
            RhoEval::Density(rho) => {
                let mut pn = p.clone();
                for _ in 1..n {
                    pn = &pn * &p;
                }
                frobenius_inner(rho, &pn)
            }
        };
        values.push(fv);
    }
    Ok(ComplexSeries::new(t_grid.to_vec(), values))
}

/// Operator-spreading light cone for the kicked Ising chain.
#[derive(Debug, Clone)]
pub struct LightconeData {
    pub distances: Vec<usize>,
    /// First threshold crossing per distance; `None` when C_l never crosses
    /// within t_max.
    pub arrival_times: Vec<Option<f64>>,
    pub threshold: f64,
    /// 1 / slope of the arrival-time fit, when >= 2 arrivals exist.
    pub butterfly_velocity: Option<f64>,
    pub r_squared: f64,
    /// C_l(t) for each probed distance.
    pub series: Vec<TimeSeries>,
}

/// C_l(t) = ||[W_l(t), V_0]||^2 / D for V_0 = sz at site 0 and W_l = sz at
/// site l, l = 1..L/2, with arrival times at `threshold` x the per-distance
/// saturation estimate (tail mean over the last quarter of the window).
pub fn lightcone(
    params: &KickedIsingParams,
    threshold: f64,
    t_max: usize,
) -> Result<LightconeData> {
    params.validate()?;
    if params.l > 12 {
        return Err(Error::InvalidDimension(format!(
            "lightcone supports L <= 12, got {}",
            params.l
        )));
    }
    if !(0.0..1.0).contains(&threshold) || threshold <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "threshold {threshold} must be in (0, 1)"
        )));
    }
    if t_max < 4 {
        return Err(Error::TooShort("lightcone needs t_max >= 4".into()));
    }
    let map = kicked_ising(params)?;
    let dim = params.dim();
    let distances: Vec<usize> = (1..=params.l / 2).collect();
    let w_diags: Vec<Vec<f64>> = distances
        .iter()
        .map(|&l| {
            pauli_z_at(params.l, l)
                .unwrap()
                .as_diagonal()
                .unwrap()
                .iter()
                .map(|z| z.re)
                .collect()
        })
        .collect();
    // ||[W_l, V_0(-t)]||^2 with V_0(-t) = U^t V_0 U^{-t}: one evolved
    // operator serves every distance since W_l is diagonal
    let mut b = pauli_z_at(params.l, 0)?.mat().clone();
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(t_max + 1); distances.len()];
    for step in 0..=t_max {
        if step > 0 {
            b = floquet_conjugate_reverse(&map, &b);
        }
        for (vals, wd) in values.iter_mut().zip(&w_diags) {
            let mut acc = 0.0;
            for j in 0..dim {
                for i in 0..dim {
                    let dw = wd[i] - wd[j];
                    if dw != 0.0 {
                        acc += b[(i, j)].norm_sqr() * dw * dw;
                    }
                }
            }
            vals.push(acc / dim as f64);
        }
    }
    let times: Vec<f64> = (0..=t_max).map(|t| t as f64).collect();
    let mut arrival_times = Vec::with_capacity(distances.len());
    for vals in &values {
        let tail = &vals[vals.len() - vals.len() / 4..];
        let saturation = tail.iter().sum::<f64>() / tail.len() as f64;
        let cross = threshold * saturation;
        let arrival = times
            .iter()
            .zip(vals)
            .find(|(_, &v)| v >= cross && cross > 0.0)
            .map(|(&t, _)| t);
        arrival_times.push(arrival);
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (d, a) in distances.iter().zip(&arrival_times) {
        if let Some(t) = a {
            xs.push(*d as f64);
            ys.push(*t);
        }
    }
    let (butterfly_velocity, r_squared) = if xs.len() >= 2 {
        let (slope, _, _, r2) = analysis::linear_fit(&xs, &ys)?;
        (if slope > 0.0 { Some(1.0 / slope) } else { None }, r2)
    } else {
        (None, 0.0)
    };
    Ok(LightconeData {
        distances,
        arrival_times,
        threshold,
        butterfly_velocity,
        r_squared,
        series: values
            .into_iter()
            .map(|v| TimeSeries::new(times.clone(), v))
            .collect(),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct SaturationStats {
    pub mean_c: f64,
    pub mean_f: C64,
    pub var_c: f64,
    /// Haar-random plateau 2(1 - 1/D) for traceless operators normalized to
    /// tr(V^2) = tr(W^2) = D.
    pub haar_reference: f64,
}

/// Tail statistics of an OTOC past the scrambling-time estimate `t_star`.
pub fn saturation_stats(
    series: &OtocSeries,
    tail_start: f64,
    t_star: f64,
) -> Result<SaturationStats> {
    if tail_start < t_star {
        return Err(Error::NoWindow(format!(
            "tail start {tail_start} precedes scrambling estimate {t_star}"
        )));
    }
    let idx: Vec<usize> = series
        .times
        .iter()
        .enumerate()
        .filter(|(_, &t)| t >= tail_start)
        .map(|(i, _)| i)
        .collect();
    if idx.is_empty() {
        return Err(Error::NoWindow(format!(
            "no samples past tail start {tail_start}"
        )));
    }
    let n = idx.len() as f64;
    let mean_c = idx.iter().map(|&i| series.c[i]).sum::<f64>() / n;
    let mean_f = idx.iter().map(|&i| series.f[i]).sum::<C64>() / n;
    let var_c = idx
        .iter()
        .map(|&i| (series.c[i] - mean_c).powi(2))
        .sum::<f64>()
        / n;
    Ok(SaturationStats {
        mean_c,
        mean_f,
        var_c,
        haar_reference: 2.0 * (1.0 - 1.0 / series.dim as f64),
    })
}
