//! Loschmidt echo: M(t) = |<psi0| U2^dag(t) U1(t) |psi0>|^2, its saturation,
//! and the decay-rate sweep over perturbation strength.

use rayon::prelude::*;

use crate::analysis::{self, DecayModel};
use crate::error::{Error, Result};
use crate::hilbert::{coherent_state, inner, QuantumState};
use crate::propagate::Evolver;
use crate::series::TimeSeries;

/// Echo signal with run metadata.
#[derive(Debug, Clone)]
pub struct EchoSeries {
    pub series: TimeSeries,
    pub kappa: Option<f64>,
    pub psi0_descriptor: String,
    pub seed: Option<u64>,
}

impl EchoSeries {
    fn from_series(series: TimeSeries, psi0_descriptor: String) -> Result<Self> {
        if let Some(idx) = series.times.iter().position(|&t| t == 0.0) {
            if (series.values[idx] - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "M(0) = {} deviates from 1",
                    series.values[idx]
                )));
            }
        }
        if let Some(&bad) = series
            .values
            .iter()
            .find(|&&v| !(-1e-12..=1.0 + 1e-12).contains(&v))
        {
            return Err(Error::InvalidParameter(format!(
                "echo value {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            series,
            kappa: None,
            psi0_descriptor,
            seed: None,
        })
    }
}

/// Decay rate Gamma(kappa) extracted from echo fits across a perturbation
/// sweep.
#[derive(Debug, Clone)]
pub struct RateCurve {
    pub kappas: Vec<f64>,
    pub rates: Vec<f64>,
    pub windows: Vec<(f64, f64)>,
    pub residuals: Vec<f64>,
}

/// M(t) on a time grid, computed as the forward-forward overlap
/// |<psi2(t)|psi1(t)>|^2 (equal to the forward-then-reversed protocol value
/// by unitarity; see [`echo_forward_overlap_identity`]).
pub fn loschmidt_echo(
    u1: &Evolver,
    u2: &Evolver,
    psi0: &QuantumState,
    t_grid: &[f64],
) -> Result<EchoSeries> {
    if u1.dim() != u2.dim() {
        return Err(Error::DimensionMismatch(u1.dim(), u2.dim()));
    }
    if u1.dim() != psi0.dim() {
        return Err(Error::DimensionMismatch(u1.dim(), psi0.dim()));
    }
    let values = match (u1, u2) {
        (Evolver::Floquet(m1), Evolver::Floquet(m2)) => {
            // incremental stepping: the grid must be non-decreasing integers
            let mut steps_grid = Vec::with_capacity(t_grid.len());
            for &t in t_grid {
                let s = t.round();
                if (t - s).abs() > 1e-9 || s < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "Floquet echo grid must hold whole periods, got t = {t}"
                    )));
                }
                steps_grid.push(s as usize);
            }
            if steps_grid.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::InvalidParameter(
                    "Floquet echo grid must be non-decreasing".into(),
                ));
            }
            let mut v1 = psi0.amplitudes().to_vec();
            let mut v2 = psi0.amplitudes().to_vec();
            let mut now = 0usize;
            let mut values = Vec::with_capacity(t_grid.len());
            for &s in &steps_grid {
                while now < s {
                    m1.apply_vec(&mut v1);
                    m2.apply_vec(&mut v2);
                    now += 1;
                }
                values.push(crate::hilbert::inner_slices(&v2, &v1).norm_sqr());
            }
            values
        }
        _ => {
            let mut values = Vec::with_capacity(t_grid.len());
            for &t in t_grid {
                let s1 = u1.state_at(psi0, t)?;
                let s2 = u2.state_at(psi0, t)?;
                values.push(inner(&s2, &s1)?.norm_sqr());
            }
            values
        }
    };
    EchoSeries::from_series(TimeSeries::new(t_grid.to_vec(), values), "explicit".into())
}

/// Both formulations of the echo at a single time: the forward-then-reversed
/// protocol value and the forward-forward overlap. Equal by unitarity.
pub fn echo_forward_overlap_identity(
    u1: &Evolver,
    u2: &Evolver,
    psi0: &QuantumState,
    t: f64,
) -> Result<(f64, f64)> {
    if u1.dim() != u2.dim() {
        return Err(Error::DimensionMismatch(u1.dim(), u2.dim()));
    }
    let forward = u1.state_at(psi0, t)?;
    let returned = u2.state_at_reversed(&forward, t)?;
    let echo = inner(psi0, &returned)?.norm_sqr();
    let other = u2.state_at(psi0, t)?;
    let overlap = inner(&other, &forward)?.norm_sqr();
    Ok((echo, overlap))
}

/// Tail mean and variance over the last `tail_fraction` of the series.
/// The tail must hold at least 20 samples.
pub fn echo_saturation(series: &TimeSeries, tail_fraction: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&tail_fraction) || tail_fraction == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tail_fraction {tail_fraction} must be in (0, 1]"
        )));
    }
    let t_max = *series
        .times
        .last()
        .ok_or(Error::Empty("echo_saturation on empty series"))?;
    let t_min = series.times[0];
    let tail_start = t_max - tail_fraction * (t_max - t_min);
    let stats = analysis::fluctuation_stats(series, tail_start)?;
    Ok((stats.mean, stats.variance))
}

/// Saturation-time estimate t_s = ln(N) / Gamma from a prior exponential fit.
pub fn saturation_time_estimate(dim: usize, rate: f64) -> Option<f64> {
    if rate > 0.0 {
        Some((dim as f64).ln() / rate)
    } else {
        None
    }
}

/// Sweep protocol: ensemble size, echo length, seed, and the fit-window floor.
#[derive(Debug, Clone)]
pub struct ProtocolParams {
    pub n_ensemble: usize,
    pub steps: usize,
    pub seed: u64,
    /// Minimum samples the fit window must hold. The default policy is 8;
    /// strong-perturbation cat-map echoes on unit-step grids saturate in
    /// fewer samples and need an explicit smaller floor.
    pub min_fit_points: usize,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            n_ensemble: 50,
            steps: 40,
            seed: 1,
            min_fit_points: 8,
        }
    }
}

/// Gamma(kappa): for each kappa, the echo averaged over an ensemble of
/// coherent states centered uniformly on the torus is fitted with an
/// exponential on the automatically selected post-parabolic window.
///
/// `build` maps kappa to the (unperturbed, perturbed) evolver pair.
pub fn rate_sweep(
    build: impl Fn(f64) -> Result<(Evolver, Evolver)> + Sync,
    kappas: &[f64],
    params: &ProtocolParams,
) -> Result<RateCurve> {
    if kappas.len() < 3 {
        return Err(Error::TooShort(format!(
            "rate_sweep needs >= 3 kappa values, got {}",
            kappas.len()
        )));
    }
    if params.n_ensemble == 0 {
        return Err(Error::InvalidParameter("empty ensemble".into()));
    }
    // sweep points sorted by kappa so assembly order never depends on
    // scheduling
    let mut order: Vec<usize> = (0..kappas.len()).collect();
    order.sort_by(|&a, &b| kappas[a].total_cmp(&kappas[b]));

    // (kappa, rate, fit window, fit residual)
    type SweepPoint = (f64, f64, (f64, f64), f64);
    let points: Vec<Result<SweepPoint>> = order
        .par_iter()
        .map(|&ik| {
            let kappa = kappas[ik];
            let (mean, dim) =
                ensemble_echo(&build, kappa, params).map_err(|e| attach_kappa(e, kappa))?;
            let fit = fit_rate(&mean, dim, params).map_err(|e| attach_kappa(e, kappa))?;
            Ok((kappa, fit.0, fit.1, fit.2))
        })
        .collect();

    let mut curve = RateCurve {
        kappas: Vec::new(),
        rates: Vec::new(),
        windows: Vec::new(),
        residuals: Vec::new(),
    };
    for p in points {
        let (kappa, rate, window, residual) = p?;
        curve.kappas.push(kappa);
        curve.rates.push(rate);
        curve.windows.push(window);
        curve.residuals.push(residual);
    }
    Ok(curve)
}

fn attach_kappa(e: Error, kappa: f64) -> Error {
    Error::InvalidParameter(format!("kappa = {kappa}: {e}"))
}

/// Arithmetic ensemble mean of M(t) over coherent states with uniformly
/// random centers; substream-per-member keeps the result independent of
/// execution order.
pub fn ensemble_echo(
    build: &(impl Fn(f64) -> Result<(Evolver, Evolver)> + Sync),
    kappa: f64,
    params: &ProtocolParams,
) -> Result<(TimeSeries, usize)> {
    let (u1, u2) = build(kappa)?;
    let dim = u1.dim();
    let t_grid: Vec<f64> = (0..=params.steps).map(|s| s as f64).collect();
    let root = crate::hilbert::RngStream::new(params.seed);
    let members: Vec<Result<Vec<f64>>> = (0..params.n_ensemble as u64)
        .into_par_iter()
        .map(|member| {
            let mut rng = root.substream(member);
            let q0 = rng.uniform();
            let p0 = rng.uniform();
            let psi0 = coherent_state(dim, q0, p0)?;
            Ok(loschmidt_echo(&u1, &u2, &psi0, &t_grid)?.series.values)
        })
        .collect();
    let mut mean = vec![0.0; t_grid.len()];
    for m in members {
        for (acc, v) in mean.iter_mut().zip(m?) {
            *acc += v;
        }
    }
    let inv = 1.0 / params.n_ensemble as f64;
    mean.iter_mut().for_each(|v| *v *= inv);
    Ok((TimeSeries::new(t_grid, mean), dim))
}

/// Exponential fit on the auto-selected window; returns (rate, window, rms
/// residual). A flat curve (zero measured curvature) maps to rate 0.
fn fit_rate(
    mean: &TimeSeries,
    dim: usize,
    params: &ProtocolParams,
) -> Result<(f64, (f64, f64), f64)> {
    // eta estimated from the measured short-time curvature 1 - M at the
    // first step (Floquet maps have no Hamiltonian difference)
    let eta = (1.0 - mean.values.get(1).copied().unwrap_or(1.0))
        .max(0.0)
        .sqrt();
    if eta < 1e-8 {
        // unperturbed: constant series, zero rate by definition
        let window = (0.0, *mean.times.last().unwrap());
        return Ok((0.0, window, 0.0));
    }
    // the decay turns exponential once kick-to-kick correlations die out,
    // which for a strongly mixing map is of order one period; the
    // first-step curvature underestimates the asymptotic rate and is no
    // guide to the crossover
    let t_c = 1.0;
    let saturation = 1.0 / dim as f64;
    let window = analysis::auto_window_with_min(mean, saturation, t_c, params.min_fit_points)?;
    let fit =
        analysis::fit_decay_with_min(mean, DecayModel::Exponential, window, params.min_fit_points)?;
    Ok((fit.rate().max(0.0), window, fit.residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{random_state, DenseOperator, RngStream, C64};
    use crate::models::{catmap_quantum, goe_hamiltonian, CatMapParams};
    use faer::Mat;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn cat_evolver(n: usize, kappa: f64) -> Evolver {
        Evolver::Floquet(catmap_quantum(&CatMapParams { n, kappa }).unwrap())
    }

    #[test]
    fn identical_evolvers_give_unit_echo() {
        let u = cat_evolver(64, 0.4);
        let psi0 = coherent_state(64, 0.2, 0.6).unwrap();
        let grid: Vec<f64> = (0..=20).map(|s| s as f64).collect();
        let echo = loschmidt_echo(&u, &u, &psi0, &grid).unwrap();
        for &v in &echo.series.values {
            assert!((v - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn swap_symmetry() {
        let u1 = cat_evolver(64, 0.0);
        let u2 = cat_evolver(64, 0.3);
        let psi0 = coherent_state(64, 0.4, 0.1).unwrap();
        let grid: Vec<f64> = (0..=15).map(|s| s as f64).collect();
        let a = loschmidt_echo(&u1, &u2, &psi0, &grid).unwrap();
        let b = loschmidt_echo(&u2, &u1, &psi0, &grid).unwrap();
        for (x, y) in a.series.values.iter().zip(&b.series.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn two_level_closed_form() {
        // H1 = sz, H2 = sz + kappa sx, psi0 = |0>:
        // M(t) = cos^2(r t) + sin^2(r t)/r^2 with r = sqrt(1 + kappa^2)
        let kappa = 0.35;
        let h1 = DenseOperator::hermitian(faer::mat![
            [c(1.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(-1.0, 0.0)]
        ])
        .unwrap();
        let h2 = DenseOperator::hermitian(faer::mat![
            [c(1.0, 0.0), c(kappa, 0.0)],
            [c(kappa, 0.0), c(-1.0, 0.0)]
        ])
        .unwrap();
        let u1 = Evolver::hamiltonian(&h1).unwrap();
        let u2 = Evolver::hamiltonian(&h2).unwrap();
        let psi0 = QuantumState::basis_state(2, 0).unwrap();
        let grid: Vec<f64> = (0..50).map(|i| i as f64 * 0.13).collect();
        let echo = loschmidt_echo(&u1, &u2, &psi0, &grid).unwrap();
        let r = (1.0 + kappa * kappa).sqrt();
        for (t, v) in echo.series.iter() {
            let expect = (r * t).cos().powi(2) + (r * t).sin().powi(2) / (r * r);
            assert!((v - expect).abs() < 1e-10, "t = {t}: {v} vs {expect}");
        }
    }

    #[test]
    fn forward_overlap_identity_cat_map() {
        let u1 = cat_evolver(128, 0.0);
        let u2 = cat_evolver(128, 0.3);
        let psi0 = coherent_state(128, 0.3, 0.7).unwrap();
        let (echo, overlap) = echo_forward_overlap_identity(&u1, &u2, &psi0, 4.0).unwrap();
        assert!((echo - overlap).abs() < 1e-12, "{echo} vs {overlap}");
        // kappa = 0 on both legs: perfect reversal
        let (e0, o0) = echo_forward_overlap_identity(&u1, &u1, &psi0, 4.0).unwrap();
        assert!((e0 - 1.0).abs() < 1e-12);
        assert!((o0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn forward_overlap_identity_random_triples() {
        let root = RngStream::new(31);
        for k in 0..5 {
            let mut rng = root.substream(k);
            let h1 = goe_hamiltonian(16, &mut rng).unwrap();
            let h2 = goe_hamiltonian(16, &mut rng).unwrap();
            let psi0 = random_state(16, &mut rng).unwrap();
            let u1 = Evolver::hamiltonian(&h1).unwrap();
            let u2 = Evolver::hamiltonian(&h2).unwrap();
            let (echo, overlap) =
                echo_forward_overlap_identity(&u1, &u2, &psi0, 1.0 + k as f64).unwrap();
            assert!((echo - overlap).abs() < 1e-12);
        }
    }

    #[test]
    fn global_phase_and_conjugation_invariance() {
        let mut rng = RngStream::new(12);
        let h1 = goe_hamiltonian(8, &mut rng).unwrap();
        let h2 = goe_hamiltonian(8, &mut rng).unwrap();
        let psi0 = random_state(8, &mut rng).unwrap();
        let grid = [0.0, 0.5, 1.5, 3.0];
        let base = loschmidt_echo(
            &Evolver::hamiltonian(&h1).unwrap(),
            &Evolver::hamiltonian(&h2).unwrap(),
            &psi0,
            &grid,
        )
        .unwrap();

        // global phase on psi0
        let phased = QuantumState::new(
            psi0.amplitudes()
                .iter()
                .map(|a| a * C64::from_polar(1.0, 1.234))
                .collect(),
        )
        .unwrap();
        let with_phase = loschmidt_echo(
            &Evolver::hamiltonian(&h1).unwrap(),
            &Evolver::hamiltonian(&h2).unwrap(),
            &phased,
            &grid,
        )
        .unwrap();

        // simultaneous conjugation by a random diagonal unitary
        let diag: Vec<C64> = (0..8)
            .map(|_| C64::from_polar(1.0, rng.uniform() * std::f64::consts::TAU))
            .collect();
        let u = Mat::from_fn(8, 8, |i, j| if i == j { diag[i] } else { c(0.0, 0.0) });
        let conj_h =
            |h: &DenseOperator| DenseOperator::hermitian(&u * h.mat() * u.adjoint()).unwrap();
        let psi_c =
            QuantumState::new((0..8).map(|i| diag[i] * psi0.amplitudes()[i]).collect()).unwrap();
        let conjugated = loschmidt_echo(
            &Evolver::hamiltonian(&conj_h(&h1)).unwrap(),
            &Evolver::hamiltonian(&conj_h(&h2)).unwrap(),
            &psi_c,
            &grid,
        )
        .unwrap();

        for i in 0..grid.len() {
            assert!((base.series.values[i] - with_phase.series.values[i]).abs() < 1e-12);
            assert!((base.series.values[i] - conjugated.series.values[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn short_time_curvature_matches_variance() {
        // 1 - M(t) = (eta t)^2 (1 + o(1)), eta^2 = <dH^2> - <dH>^2
        let mut rng = RngStream::new(9);
        let h1 = goe_hamiltonian(16, &mut rng).unwrap();
        let pert = goe_hamiltonian(16, &mut rng).unwrap();
        let h2 = DenseOperator::hermitian(h1.mat() + pert.mat()).unwrap();
        let psi0 = random_state(16, &mut rng).unwrap();
        let dh = pert; // H2 - H1
        let dh_psi = dh.apply(&psi0).unwrap();
        let m1 = inner(&psi0, &dh_psi).unwrap().re;
        let m2 = {
            let amp = dh_psi.norm(); // |dH psi| before any renormalization
                                     // apply() does not renormalize, so norm^2 = <psi|dH^2|psi>
            amp * amp
        };
        let eta = (m2 - m1 * m1).sqrt();
        let t = 0.01 / eta;
        let u1 = Evolver::hamiltonian(&h1).unwrap();
        let u2 = Evolver::hamiltonian(&h2).unwrap();
        let echo = loschmidt_echo(&u1, &u2, &psi0, &[t]).unwrap();
        let measured = 1.0 - echo.series.values[0];
        let expect = (eta * t) * (eta * t);
        assert!(
            (measured - expect).abs() < 0.05 * expect,
            "measured {measured} vs parabolic {expect}"
        );
    }

    #[test]
    fn echo_saturation_constant_series() {
        let ts: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let vals = vec![0.42; 100];
        let (mean, var) = echo_saturation(&TimeSeries::new(ts, vals), 0.5).unwrap();
        assert!((mean - 0.42).abs() < 1e-15);
        assert!(var < 1e-30);
    }

    #[test]
    fn echo_saturation_short_tail_errors() {
        let ts: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let vals = vec![0.5; 10];
        assert!(echo_saturation(&TimeSeries::new(ts, vals), 0.5).is_err());
    }

    #[test]
    fn saturation_time_formula() {
        assert!(
            (saturation_time_estimate(512, 0.96).unwrap() - 512.0_f64.ln() / 0.96).abs() < 1e-14
        );
        assert!(saturation_time_estimate(512, 0.0).is_none());
    }

    #[test]
    fn rate_sweep_zero_kappa_gives_zero_rates() {
        let build = |kappa: f64| -> Result<(Evolver, Evolver)> {
            Ok((cat_evolver(32, 0.0), cat_evolver(32, kappa)))
        };
        let params = ProtocolParams {
            n_ensemble: 4,
            steps: 20,
            seed: 5,
            min_fit_points: 8,
        };
        let curve = rate_sweep(build, &[0.0, 0.0, 0.0], &params).unwrap();
        assert_eq!(curve.rates, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn rate_sweep_needs_three_kappas() {
        let build = |kappa: f64| -> Result<(Evolver, Evolver)> {
            Ok((cat_evolver(32, 0.0), cat_evolver(32, kappa)))
        };
        assert!(rate_sweep(build, &[0.1, 0.2], &ProtocolParams::default()).is_err());
    }

    #[test]
    fn rate_sweep_deterministic_and_sorted() {
        let build = |kappa: f64| -> Result<(Evolver, Evolver)> {
            Ok((cat_evolver(64, 0.0), cat_evolver(64, kappa)))
        };
        let params = ProtocolParams {
            n_ensemble: 6,
            steps: 24,
            seed: 7,
            min_fit_points: 4,
        };
        let kappas = [0.02, 0.008, 0.014];
        let a = rate_sweep(build, &kappas, &params).unwrap();
        let b = rate_sweep(build, &kappas, &params).unwrap();
        assert_eq!(a.rates, b.rates);
        assert!(a.kappas.windows(2).all(|w| w[0] <= w[1]));
        assert!(a.rates.iter().all(|&r| r >= 0.0));
    }
}
