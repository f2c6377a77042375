//! Experiment execution: maps a validated config onto the library modules
//! and collects tables, fit results, and scalar metrics.

use anyhow::{anyhow, bail, Result};
use serde_json::{json, Map, Value};

use qchaos::analysis::{self, DecayModel};
use qchaos::echo::{self, ProtocolParams};
use qchaos::hilbert::random_state;
use qchaos::krylov;
use qchaos::models::{
    catmap_quantum, goe_hamiltonian, kicked_ising, pauli_z_at, torus_cos_momentum,
    torus_cos_position, CatMapParams, KickedIsingParams,
};
use qchaos::otoc::{self, RhoSpec};
use qchaos::propagate::{EigenPropagator, Evolver};
use qchaos::semiclassic::{
    cat_map_lambda, dephasing_echo, lyapunov_exponent, PerturbedCatMap, WignerGaussian,
};
use qchaos::{DenseOperator, RngStream, C64};

use crate::config::{Experiment, ExperimentConfig, ModelSpec};
use crate::output::Table;

#[derive(Default)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub fits: Vec<Value>,
    pub metrics: Map<String, Value>,
    pub notes: Vec<String>,
}

impl RunOutput {
    fn metric(&mut self, key: &str, value: impl Into<Value>) {
        self.metrics.insert(key.to_string(), value.into());
    }
}

pub fn execute(config: &ExperimentConfig) -> Result<RunOutput> {
    match config.experiment {
        Experiment::Echo => run_echo(config),
        Experiment::EchoSweep => run_echo_sweep(config),
        Experiment::Otoc => run_otoc(config),
        Experiment::OtocLightcone => run_lightcone(config),
        Experiment::Krylov => run_krylov(config),
        Experiment::Arnoldi => run_arnoldi(config),
        Experiment::Dephasing => run_dephasing(config),
        Experiment::Lyapunov => run_lyapunov(config),
    }
}

fn catmap_of(config: &ExperimentConfig) -> Result<CatMapParams> {
    match &config.model {
        ModelSpec::Catmap(p) => Ok(*p),
        other => bail!("experiment needs a catmap model, got {}", other.kind()),
    }
}

fn ising_of(config: &ExperimentConfig) -> Result<KickedIsingParams> {
    match &config.model {
        ModelSpec::KickedIsing(p) => Ok(*p),
        other => bail!(
            "experiment needs a kicked_ising model, got {}",
            other.kind()
        ),
    }
}

fn protocol(config: &ExperimentConfig) -> ProtocolParams {
    ProtocolParams {
        n_ensemble: config.params.ensemble,
        steps: config.params.t_max,
        seed: config.seed,
        min_fit_points: config.params.min_fit_points,
    }
}

fn cat_pair(n: usize) -> impl Fn(f64) -> qchaos::Result<(Evolver, Evolver)> + Sync {
    move |kappa| {
        Ok((
            Evolver::Floquet(catmap_quantum(&CatMapParams { n, kappa: 0.0 })?),
            Evolver::Floquet(catmap_quantum(&CatMapParams { n, kappa })?),
        ))
    }
}

fn fit_json(fit: &analysis::FitResult, extra: &[(&str, Value)]) -> Value {
    let mut v = serde_json::to_value(fit).expect("fit serializes");
    if let Value::Object(map) = &mut v {
        for (k, val) in extra {
            map.insert((*k).to_string(), val.clone());
        }
    }
    v
}

fn run_echo(config: &ExperimentConfig) -> Result<RunOutput> {
    let p = catmap_of(config)?;
    let proto = protocol(config);
    let (mean, dim) = echo::ensemble_echo(&cat_pair(p.n), p.kappa, &proto)?;
    let mut out = RunOutput::default();
    out.metric("dim", dim);
    out.metric("kappa", p.kappa);
    // rate fit is best-effort: flat (kappa = 0) or fully saturated curves
    // have no exponential window and are reported as notes, not failures
    let eta = (1.0 - mean.values.get(1).copied().unwrap_or(1.0)).max(0.0);
    if eta > 1e-12 {
        match analysis::auto_window_with_min(&mean, 1.0 / dim as f64, 1.0, proto.min_fit_points)
            .and_then(|w| {
                analysis::fit_decay_with_min(
                    &mean,
                    DecayModel::Exponential,
                    w,
                    proto.min_fit_points,
                )
            }) {
            Ok(fit) => out.fits.push(fit_json(&fit, &[("kappa", json!(p.kappa))])),
            Err(e) => out.notes.push(format!("rate fit skipped: {e}")),
        }
    } else {
        out.notes
            .push("rate fit skipped: no measurable decay".into());
    }
    if let Ok((sat_mean, sat_var)) = echo::echo_saturation(&mean, 0.5) {
        out.metric("tail_mean", sat_mean);
        out.metric("tail_variance", sat_var);
    }
    out.tables.push(
        Table::new(
            "echo",
            &["t", "m"],
            vec![mean.times.clone(), mean.values.clone()],
        )
        .log_y(),
    );
    Ok(out)
}

fn run_echo_sweep(config: &ExperimentConfig) -> Result<RunOutput> {
    let p = catmap_of(config)?;
    let proto = protocol(config);
    let curve = echo::rate_sweep(cat_pair(p.n), &config.params.kappas, &proto)?;
    let mut out = RunOutput::default();
    for i in 0..curve.kappas.len() {
        out.fits.push(json!({
            "model": "exponential",
            "kappa": curve.kappas[i],
            "params": [curve.rates[i]],
            "window": [curve.windows[i].0, curve.windows[i].1],
            "residual": curve.residuals[i],
        }));
    }
    if curve.kappas.iter().all(|&k| k > 0.0) && curve.rates.iter().all(|&r| r > 0.0) {
        if let Ok((slope, stderr)) = analysis::scaling_exponent(&curve.kappas, &curve.rates) {
            out.metric("scaling_exponent", slope);
            out.metric("scaling_exponent_stderr", stderr);
        }
    }
    let (t_lo, t_hi): (Vec<f64>, Vec<f64>) = curve.windows.iter().copied().unzip();
    out.tables.push(Table::new(
        "rates",
        &["kappa", "rate", "t_lo", "t_hi", "residual"],
        vec![curve.kappas, curve.rates, t_lo, t_hi, curve.residuals],
    ));
    Ok(out)
}

/// Traceless hermitian unitary: +1/-1 split across the eigenbasis of a GOE
/// sample drawn from `rng`.
pub fn random_sign_operator(dim: usize, rng: &mut RngStream) -> Result<DenseOperator> {
    let sample = goe_hamiltonian(dim, rng)?;
    let prop = EigenPropagator::new(&sample)?;
    let vecs = prop.eigenvectors();
    let mut mat = faer::Mat::<C64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..dim {
                let s = if k < dim / 2 { 1.0 } else { -1.0 };
                acc += vecs[(i, k)] * s * vecs[(j, k)].conj();
            }
            mat[(i, j)] = acc;
        }
    }
    DenseOperator::hermitian(mat).map_err(|e| anyhow!(e))
}

fn run_otoc(config: &ExperimentConfig) -> Result<RunOutput> {
    let t_grid: Vec<f64> = (0..=config.params.t_max).map(|t| t as f64).collect();
    let (evolver, v, w) = match &config.model {
        ModelSpec::Catmap(p) => (
            Evolver::Floquet(catmap_quantum(p)?),
            torus_cos_position(p.n)?,
            torus_cos_momentum(p.n)?,
        ),
        ModelSpec::KickedIsing(p) => (
            Evolver::Floquet(kicked_ising(p)?),
            pauli_z_at(p.l, 0)?,
            pauli_z_at(p.l, p.l / 2)?,
        ),
        ModelSpec::Goe { dim } => {
            let root = RngStream::new(config.seed);
            let h = goe_hamiltonian(*dim, &mut root.substream(0))?;
            let v = random_sign_operator(*dim, &mut root.substream(1))?;
            let w = random_sign_operator(*dim, &mut root.substream(2))?;
            (Evolver::hamiltonian(&h)?, v, w)
        }
    };
    let series = otoc::otoc(&v, &w, &evolver, &t_grid, &RhoSpec::InfiniteTemperature)?;
    let mut out = RunOutput::default();
    out.metric("dim", series.dim);
    out.metric("haar_plateau", 2.0 * (1.0 - 1.0 / series.dim as f64));
    out.metric("decomposition_residual", series.decomposition_residual());
    let tail_start = config.params.t_max as f64 / 2.0;
    match analysis::fluctuation_stats(&series.c_series(), tail_start) {
        Ok(stats) => {
            out.metric("tail_mean_c", stats.mean);
            out.metric("tail_variance_c", stats.variance);
            out.metric("tail_max_excursion_c", stats.max_excursion);
        }
        Err(e) => out.notes.push(format!("tail statistics skipped: {e}")),
    }
    out.tables.push(Table::new(
        "otoc",
        &["t", "c", "re_f", "im_f", "d_term", "i_term"],
        vec![
            series.times.clone(),
            series.c.clone(),
            series.f.iter().map(|z| z.re).collect(),
            series.f.iter().map(|z| z.im).collect(),
            series.d_term.clone(),
            series.i_term.clone(),
        ],
    ));
    Ok(out)
}

fn run_lightcone(config: &ExperimentConfig) -> Result<RunOutput> {
    let p = ising_of(config)?;
    let data = otoc::lightcone(&p, config.params.threshold, config.params.t_max)?;
    let mut out = RunOutput::default();
    let times = data.series[0].times.clone();
    let mut headers: Vec<String> = vec!["t".into()];
    let mut columns = vec![times];
    for (d, s) in data.distances.iter().zip(&data.series) {
        headers.push(format!("c_{d}"));
        columns.push(s.values.clone());
    }
    let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    out.tables
        .push(Table::new("lightcone", &header_refs, columns).log_y());
    let mut arr_d = Vec::new();
    let mut arr_t = Vec::new();
    for (d, a) in data.distances.iter().zip(&data.arrival_times) {
        if let Some(t) = a {
            arr_d.push(*d as f64);
            arr_t.push(*t);
        }
    }
    out.tables.push(Table::new(
        "arrivals",
        &["distance", "arrival_time"],
        vec![arr_d, arr_t],
    ));
    out.metric("threshold", data.threshold);
    out.metric("r_squared", data.r_squared);
    match data.butterfly_velocity {
        Some(v) => out.metric("butterfly_velocity", v),
        None => out
            .notes
            .push("butterfly velocity undefined: fewer than two arrivals".into()),
    }
    Ok(out)
}

fn run_krylov(config: &ExperimentConfig) -> Result<RunOutput> {
    let dim = match &config.model {
        ModelSpec::Goe { dim } => *dim,
        other => bail!("krylov experiment needs a goe model, got {}", other.kind()),
    };
    let root = RngStream::new(config.seed);
    let h = goe_hamiltonian(dim, &mut root.substream(0))?;
    let psi0 = random_state(dim, &mut root.substream(1))?;
    let data = krylov::lanczos_state(&h, &psi0, config.params.max_k.min(dim), None)?;
    let mut out = RunOutput::default();
    out.metric("k", data.k);
    out.metric("termination", format!("{:?}", data.termination));
    if let Some(basis) = &data.basis {
        out.metric("max_cross_overlap", basis.max_cross_overlap());
    }
    let mut b_padded = data.b.clone();
    b_padded.resize(data.k, 0.0);
    out.tables.push(Table::new(
        "lanczos",
        &["n", "a", "b"],
        vec![
            (0..data.k).map(|n| n as f64).collect(),
            data.a.clone(),
            b_padded,
        ],
    ));
    let t_grid: Vec<f64> = (0..=4 * config.params.t_max)
        .map(|i| i as f64 * 0.25)
        .collect();
    let amps = krylov::krylov_propagate(&data, &t_grid)?;
    let ck = krylov::k_complexity(&amps);
    out.tables.push(Table::new(
        "complexity",
        &["t", "c_k"],
        vec![ck.times.clone(), ck.values.clone()],
    ));
    match krylov::k_saturation(&h, &psi0, &data) {
        Ok(sat) => {
            out.metric("saturation", sat.value);
            out.metric("degenerate_warning", sat.degenerate_warning);
        }
        Err(e) => out.notes.push(format!("saturation skipped: {e}")),
    }
    Ok(out)
}

fn run_arnoldi(config: &ExperimentConfig) -> Result<RunOutput> {
    let p = ising_of(config)?;
    let map = kicked_ising(&p)?;
    let root = RngStream::new(config.seed);
    let psi0 = random_state(p.dim(), &mut root.substream(0))?;
    let data = krylov::arnoldi_unitary(&map, &psi0, config.params.max_k, 1e-10)?;
    let mut out = RunOutput::default();
    out.metric("k", data.k);
    let sub: Vec<f64> = (0..data.k.saturating_sub(1))
        .map(|n| data.h_hess[(n + 1, n)].re)
        .collect();
    if !sub.is_empty() {
        out.metric(
            "mean_subdiagonal",
            sub.iter().sum::<f64>() / sub.len() as f64,
        );
    }
    if let Some(basis) = &data.basis {
        out.metric("max_cross_overlap", basis.max_cross_overlap());
    }
    out.tables.push(Table::new(
        "arnoldi",
        &["n", "subdiagonal"],
        vec![(0..sub.len()).map(|n| n as f64).collect(), sub],
    ));
    let amps = krylov::krylov_propagate_arnoldi(&data, config.params.t_max)?;
    let ck = krylov::k_complexity(&amps);
    out.tables.push(Table::new(
        "arnoldi_complexity",
        &["t", "c_k"],
        vec![ck.times.clone(), ck.values.clone()],
    ));
    Ok(out)
}

fn run_dephasing(config: &ExperimentConfig) -> Result<RunOutput> {
    let p = catmap_of(config)?;
    let sampler = WignerGaussian {
        q0: config.params.q0,
        p0: config.params.p0,
        hbar_eff: p.hbar_eff(),
    };
    let rng = RngStream::new(config.seed);
    let dr = dephasing_echo(
        &p,
        p.kappa,
        &sampler,
        config.params.n_samples,
        config.params.t_max,
        &rng,
    )?;
    let mut out = RunOutput::default();
    out.metric("n_samples", dr.n_samples);
    out.tables.push(
        Table::new(
            "dephasing",
            &["t", "m_squared", "std_error", "re_m", "im_m"],
            vec![
                dr.times.clone(),
                dr.m_squared.clone(),
                dr.std_error.clone(),
                dr.m.iter().map(|z| z.re).collect(),
                dr.m.iter().map(|z| z.im).collect(),
            ],
        )
        .log_y(),
    );
    // exact quantum echo of the matching coherent state, for side-by-side
    // comparison with |m|^2
    let (u1, u2) = cat_pair(p.n)(p.kappa)?;
    let psi0 = qchaos::hilbert::coherent_state(p.n, config.params.q0, config.params.p0)?;
    let t_grid: Vec<f64> = (0..=config.params.t_max).map(|t| t as f64).collect();
    let exact = echo::loschmidt_echo(&u1, &u2, &psi0, &t_grid)?;
    let max_dev = exact
        .series
        .values
        .iter()
        .zip(&dr.m_squared)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    out.metric("max_deviation_from_quantum", max_dev);
    out.tables.push(
        Table::new(
            "quantum_echo",
            &["t", "m"],
            vec![exact.series.times.clone(), exact.series.values.clone()],
        )
        .log_y(),
    );
    Ok(out)
}

fn run_lyapunov(config: &ExperimentConfig) -> Result<RunOutput> {
    let p = catmap_of(config)?;
    let kappas = if config.params.kappas.is_empty() {
        vec![p.kappa]
    } else {
        config.params.kappas.clone()
    };
    let root = RngStream::new(config.seed);
    let mut lambdas = Vec::with_capacity(kappas.len());
    for (i, &kappa) in kappas.iter().enumerate() {
        let map = PerturbedCatMap { kappa };
        let mut rng = root.substream(i as u64);
        lambdas.push(lyapunov_exponent(&map, &mut rng, config.params.n_steps)?.lambda);
    }
    let mut out = RunOutput::default();
    out.metric("unperturbed_reference", cat_map_lambda());
    out.metric("n_steps", config.params.n_steps);
    out.tables.push(Table::new(
        "lyapunov",
        &["kappa", "lambda"],
        vec![kappas, lambdas],
    ));
    Ok(out)
}
