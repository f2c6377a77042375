//! Classical oracles: torus trajectories, Benettin Lyapunov exponents, and
//! the dephasing-representation echo estimate.

use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{RngStream, C64};
use crate::models::{catmap_classical_step, catmap_tangent_step, CatMapParams};
use crate::series::TimeSeries;

/// Point on the unit phase-space torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(q: f64, p: f64) -> Self {
        Self {
            q: q.rem_euclid(1.0),
            p: p.rem_euclid(1.0),
        }
    }
}

/// A classical area-preserving map on the torus with its tangent map.
pub trait ClassicalMap: Sync {
    fn step(&self, x: PhasePoint) -> PhasePoint;
    /// Action of the Jacobian at `x` on a tangent vector.
    fn tangent(&self, x: PhasePoint, dq: f64, dp: f64) -> (f64, f64);
}

/// The perturbed cat map: kick by kappa, then the hyperbolic [[2,1],[1,1]].
#[derive(Debug, Clone, Copy)]
pub struct PerturbedCatMap {
    pub kappa: f64,
}

impl ClassicalMap for PerturbedCatMap {
    fn step(&self, x: PhasePoint) -> PhasePoint {
        let (q, p) = catmap_classical_step(x.q, x.p, self.kappa);
        PhasePoint { q, p }
    }

    fn tangent(&self, x: PhasePoint, dq: f64, dp: f64) -> (f64, f64) {
        catmap_tangent_step(x.q, self.kappa, dq, dp)
    }
}

/// Pure rotation (q, p) -> (q + a, p + b): an isometry with zero Lyapunov
/// exponent, used as a test stub.
#[derive(Debug, Clone, Copy)]
pub struct TorusRotation {
    pub a: f64,
    pub b: f64,
}

impl ClassicalMap for TorusRotation {
    fn step(&self, x: PhasePoint) -> PhasePoint {
        PhasePoint::new(x.q + self.a, x.p + self.b)
    }

    fn tangent(&self, _x: PhasePoint, dq: f64, dp: f64) -> (f64, f64) {
        (dq, dp)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LyapunovResult {
    /// Largest Lyapunov exponent per map step.
    pub lambda: f64,
    pub n_steps: usize,
    pub n_transient: usize,
    pub seed: u64,
}

const BENETTIN_TRANSIENT: usize = 100;

/// Largest Lyapunov exponent by the Benettin method: iterate the tangent map
/// alongside the orbit, renormalize each step, average the log growth after
/// a 100-step transient.
pub fn lyapunov_exponent(
    map: &impl ClassicalMap,
    rng: &mut RngStream,
    n_steps: usize,
) -> Result<LyapunovResult> {
    if n_steps < 1000 {
        return Err(Error::InvalidParameter(format!(
            "Benettin needs n_steps >= 1000, got {n_steps}"
        )));
    }
    let seed = rng.seed();
    let mut x = PhasePoint::new(rng.uniform(), rng.uniform());
    let angle = rng.uniform() * TAU;
    let (mut dq, mut dp) = (angle.cos(), angle.sin());
    let mut acc = 0.0f64;
    for step in 0..(BENETTIN_TRANSIENT + n_steps) {
        let (ndq, ndp) = map.tangent(x, dq, dp);
        x = map.step(x);
        let growth = (ndq * ndq + ndp * ndp).sqrt();
        if step >= BENETTIN_TRANSIENT {
            acc += growth.ln();
        }
        dq = ndq / growth;
        dp = ndp / growth;
    }
    Ok(LyapunovResult {
        lambda: acc / n_steps as f64,
        n_steps,
        n_transient: BENETTIN_TRANSIENT,
        seed,
    })
}

/// Classical Lyapunov exponent of the unperturbed cat map,
/// ln((3 + sqrt(5))/2).
pub fn cat_map_lambda() -> f64 {
    ((3.0 + 5.0_f64.sqrt()) / 2.0).ln()
}

/// Gaussian phase-space sampler matching the Wigner density of a coherent
/// state centered at (q0, p0): both marginals have variance hbar_eff / 2.
#[derive(Debug, Clone, Copy)]
pub struct WignerGaussian {
    pub q0: f64,
    pub p0: f64,
    pub hbar_eff: f64,
}

impl WignerGaussian {
    pub fn sample(&self, rng: &mut RngStream) -> PhasePoint {
        let sigma = (self.hbar_eff / 2.0).sqrt();
        PhasePoint::new(
            self.q0 + sigma * rng.standard_normal(),
            self.p0 + sigma * rng.standard_normal(),
        )
    }
}

/// Monte-Carlo dephasing echo.
#[derive(Debug, Clone)]
pub struct DephasingEcho {
    pub times: Vec<f64>,
    /// m(t) = < exp(-i dR / hbar_eff) >
    pub m: Vec<C64>,
    /// |m(t)|^2, comparable to the quantum echo
    pub m_squared: Vec<f64>,
    /// Monte-Carlo standard error of |m(t)|
    pub std_error: Vec<f64>,
    pub n_samples: usize,
}

impl DephasingEcho {
    pub fn echo_series(&self) -> TimeSeries {
        TimeSeries::new(self.times.clone(), self.m_squared.clone())
    }
}

/// Dephasing-representation echo for the perturbed cat map:
/// m(t) = < exp(-i dR / hbar_eff) > over Wigner-sampled initial conditions
/// evolved under the *unperturbed* map, with the action difference
/// accumulated one kick-potential evaluation per step at the pre-kick
/// position, dR(t) = -kappa sum_{tau < t} V(q_tau), V(q) = cos(2 pi q)/(4 pi^2).
pub fn dephasing_echo(
    params: &CatMapParams,
    kappa: f64,
    sampler: &WignerGaussian,
    n_samples: usize,
    t_max: usize,
    rng: &RngStream,
) -> Result<DephasingEcho> {
    params.validate()?;
    if n_samples == 0 {
        return Err(Error::Empty("dephasing_echo needs samples"));
    }
    let hbar = sampler.hbar_eff;
    let map = PerturbedCatMap { kappa: 0.0 };
    // fixed chunking so the summation order never depends on scheduling
    const CHUNK: u64 = 512;
    let n_chunks = (n_samples as u64).div_ceil(CHUNK);
    let chunk_sums: Vec<Vec<C64>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut acc = vec![C64::new(0.0, 0.0); t_max + 1];
            let end = ((chunk + 1) * CHUNK).min(n_samples as u64);
            for i in (chunk * CHUNK)..end {
                let mut sub = rng.substream(i);
                let mut x = sampler.sample(&mut sub);
                let mut action = 0.0f64;
                for a in acc.iter_mut() {
                    *a += C64::from_polar(1.0, -action / hbar);
                    // kick potential V(q) = cos(2 pi q) / (4 pi^2), evaluated
                    // where the perturbation acts
                    action += -kappa * (TAU * x.q).cos() / (TAU * TAU);
                    x = map.step(x);
                }
            }
            acc
        })
        .collect();
    let mut total = vec![C64::new(0.0, 0.0); t_max + 1];
    for chunk in &chunk_sums {
        for (t, c) in total.iter_mut().zip(chunk) {
            *t += *c;
        }
    }
    let inv = 1.0 / n_samples as f64;
    let m: Vec<C64> = total.into_iter().map(|s| s * inv).collect();
    let m_squared: Vec<f64> = m.iter().map(|v| v.norm_sqr()).collect();
    // each sample contributes a unit phasor; var(|m|) <= (1 - |m|^2) / n
    let std_error: Vec<f64> = m_squared
        .iter()
        .map(|&m2| ((1.0 - m2).max(0.0) / n_samples as f64).sqrt())
        .collect();
    Ok(DephasingEcho {
        times: (0..=t_max).map(|t| t as f64).collect(),
        m,
        m_squared,
        std_error,
        n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_point_reduced_mod_one() {
        let x = PhasePoint::new(1.25, -0.25);
        assert!((x.q - 0.25).abs() < 1e-15);
        assert!((x.p - 0.75).abs() < 1e-15);
    }

    #[test]
    fn lyapunov_unperturbed_cat_map() {
        let map = PerturbedCatMap { kappa: 0.0 };
        let r = lyapunov_exponent(&map, &mut RngStream::new(3), 100_000).unwrap();
        assert!(
            (r.lambda - cat_map_lambda()).abs() < 1e-4,
            "lambda = {} vs {}",
            r.lambda,
            cat_map_lambda()
        );
    }

    #[test]
    fn lyapunov_rotation_is_zero() {
        let map = TorusRotation { a: 0.123, b: 0.456 };
        let r = lyapunov_exponent(&map, &mut RngStream::new(4), 10_000).unwrap();
        assert!(r.lambda.abs() < 1e-3, "lambda = {}", r.lambda);
    }

    #[test]
    fn lyapunov_perturbed_near_unperturbed() {
        let map = PerturbedCatMap { kappa: 0.25 };
        let r = lyapunov_exponent(&map, &mut RngStream::new(5), 100_000).unwrap();
        let r2 = lyapunov_exponent(&map, &mut RngStream::new(5), 1_000_000).unwrap();
        assert!((r.lambda - cat_map_lambda()).abs() < 0.05 * cat_map_lambda());
        // self-consistency across step counts
        assert!((r.lambda - r2.lambda).abs() < 0.01);
    }

    #[test]
    fn lyapunov_seed_independent_within_spread() {
        let map = PerturbedCatMap { kappa: 0.3 };
        let values: Vec<f64> = (0..5)
            .map(|s| {
                lyapunov_exponent(&map, &mut RngStream::new(100 + s), 100_000)
                    .unwrap()
                    .lambda
            })
            .collect();
        let mean = values.iter().sum::<f64>() / 5.0;
        let spread = values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
        assert!(spread < 0.01, "spread {spread} across seeds: {values:?}");
    }

    #[test]
    fn lyapunov_rejects_short_runs() {
        let map = PerturbedCatMap { kappa: 0.0 };
        assert!(lyapunov_exponent(&map, &mut RngStream::new(1), 100).is_err());
    }

    #[test]
    fn dephasing_kappa_zero_is_unity() {
        let params = CatMapParams { n: 64, kappa: 0.0 };
        let sampler = WignerGaussian {
            q0: 0.3,
            p0: 0.6,
            hbar_eff: params.hbar_eff(),
        };
        let d = dephasing_echo(&params, 0.0, &sampler, 2000, 10, &RngStream::new(2)).unwrap();
        for (&m2, &m) in d.m_squared.iter().zip(d.m.iter().map(|v| &v.re)) {
            assert!((m2 - 1.0).abs() < 1e-14);
            assert!((m - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn dephasing_bounded_by_one_plus_error() {
        let params = CatMapParams { n: 128, kappa: 0.4 };
        let sampler = WignerGaussian {
            q0: 0.2,
            p0: 0.8,
            hbar_eff: params.hbar_eff(),
        };
        let d = dephasing_echo(&params, 0.4, &sampler, 3000, 12, &RngStream::new(7)).unwrap();
        for ((&m2, &se), m) in d.m_squared.iter().zip(&d.std_error).zip(&d.m) {
            assert!(m.norm() <= 1.0 + 3.0 * se, "|m| = {} se = {se}", m.norm());
            assert!(m2 <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn dephasing_error_scales_root_n() {
        let params = CatMapParams { n: 128, kappa: 0.3 };
        let sampler = WignerGaussian {
            q0: 0.4,
            p0: 0.4,
            hbar_eff: params.hbar_eff(),
        };
        let t = 6;
        let a = dephasing_echo(&params, 0.3, &sampler, 4000, t, &RngStream::new(9)).unwrap();
        let b = dephasing_echo(&params, 0.3, &sampler, 8000, t, &RngStream::new(9)).unwrap();
        let ratio = a.std_error[t] / b.std_error[t];
        assert!(
            (ratio - 2.0_f64.sqrt()).abs() < 0.15 * 2.0_f64.sqrt(),
            "error ratio {ratio}"
        );
    }

    #[test]
    fn dephasing_deterministic_for_seed() {
        let params = CatMapParams { n: 64, kappa: 0.2 };
        let sampler = WignerGaussian {
            q0: 0.1,
            p0: 0.9,
            hbar_eff: params.hbar_eff(),
        };
        let a = dephasing_echo(&params, 0.2, &sampler, 1000, 8, &RngStream::new(5)).unwrap();
        let b = dephasing_echo(&params, 0.2, &sampler, 1000, 8, &RngStream::new(5)).unwrap();
        assert_eq!(a.m_squared, b.m_squared);
    }

    #[test]
    fn dephasing_zero_samples_errors() {
        let params = CatMapParams { n: 64, kappa: 0.2 };
        let sampler = WignerGaussian {
            q0: 0.1,
            p0: 0.9,
            hbar_eff: params.hbar_eff(),
        };
        assert!(dephasing_echo(&params, 0.2, &sampler, 0, 8, &RngStream::new(5)).is_err());
    }
}
