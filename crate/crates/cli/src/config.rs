//! Experiment configuration: a single TOML file describing the experiment
//! kind, the model, the diagnostic parameters, and the seed.

use std::path::PathBuf;

use qchaos::models::{CatMapParams, KickedIsingParams, KICKED_ISING_MAX_SITES};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Echo,
    EchoSweep,
    Otoc,
    OtocLightcone,
    Krylov,
    Arnoldi,
    Dephasing,
    Lyapunov,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Echo => "echo",
            Experiment::EchoSweep => "echo-sweep",
            Experiment::Otoc => "otoc",
            Experiment::OtocLightcone => "otoc-lightcone",
            Experiment::Krylov => "krylov",
            Experiment::Arnoldi => "arnoldi",
            Experiment::Dephasing => "dephasing",
            Experiment::Lyapunov => "lyapunov",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Catmap(CatMapParams),
    KickedIsing(KickedIsingParams),
    Goe { dim: usize },
}

impl ModelSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Catmap(_) => "catmap",
            ModelSpec::KickedIsing(_) => "kicked_ising",
            ModelSpec::Goe { .. } => "goe",
        }
    }
}

/// Diagnostic knobs; every field has a sensible default so configs stay
/// short.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticParams {
    /// Time horizon in map periods (or in units of 1 for Hamiltonian flows).
    pub t_max: usize,
    /// Coherent-state ensemble size for echo averaging.
    pub ensemble: usize,
    /// Perturbation strengths for echo-sweep / lyapunov.
    pub kappas: Vec<f64>,
    /// Arrival-time threshold (fraction of saturation) for otoc-lightcone.
    pub threshold: f64,
    /// Monte-Carlo sample count for dephasing.
    pub n_samples: usize,
    /// Krylov-space cap for krylov / arnoldi.
    pub max_k: usize,
    /// Phase-space center for dephasing (and its quantum comparison).
    pub q0: f64,
    pub p0: f64,
    /// Benettin iteration count for lyapunov.
    pub n_steps: usize,
    /// Fit-window floor for echo rate fits.
    pub min_fit_points: usize,
}

impl Default for DiagnosticParams {
    fn default() -> Self {
        Self {
            t_max: 40,
            ensemble: 50,
            kappas: Vec::new(),
            threshold: 0.1,
            n_samples: 100_000,
            max_k: 64,
            q0: 0.5,
            p0: 0.5,
            n_steps: 100_000,
            min_fit_points: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Output directory; `--out` overrides it, default "out".
    pub output: Option<PathBuf>,
    pub model: ModelSpec,
    #[serde(default)]
    pub params: DiagnosticParams,
}

fn default_seed() -> u64 {
    1
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Human-readable diagnostics; an empty list means the config is
    /// runnable. Every check runs, so all problems surface at once.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        match &self.model {
            ModelSpec::Catmap(p) => {
                if let Err(e) = p.validate() {
                    out.push(format!("model.N / model.kappa: {e}"));
                }
            }
            ModelSpec::KickedIsing(p) => {
                if let Err(e) = p.validate() {
                    out.push(format!("model.L / couplings: {e}"));
                } else if p.l > KICKED_ISING_MAX_SITES {
                    out.push(format!(
                        "model.L = {} exceeds the dense-feasibility cap of {}",
                        p.l, KICKED_ISING_MAX_SITES
                    ));
                }
            }
            ModelSpec::Goe { dim } => {
                if *dim < 2 {
                    out.push(format!("model.dim = {dim} must be >= 2"));
                }
            }
        }
        let supported: &[&str] = match self.experiment {
            Experiment::Echo | Experiment::EchoSweep => &["catmap"],
            Experiment::Otoc => &["catmap", "kicked_ising", "goe"],
            Experiment::OtocLightcone | Experiment::Arnoldi => &["kicked_ising"],
            Experiment::Krylov => &["goe"],
            Experiment::Dephasing | Experiment::Lyapunov => &["catmap"],
        };
        if !supported.contains(&self.model.kind()) {
            out.push(format!(
                "experiment \"{}\" supports model kinds {:?}, got \"{}\"",
                self.experiment.name(),
                supported,
                self.model.kind()
            ));
        }
        let p = &self.params;
        match self.experiment {
            Experiment::EchoSweep => {
                if p.kappas.len() < 3 {
                    out.push(format!(
                        "params.kappas: echo-sweep needs >= 3 values, got {}",
                        p.kappas.len()
                    ));
                }
            }
            Experiment::OtocLightcone => {
                if let ModelSpec::KickedIsing(ki) = &self.model {
                    if ki.l > 12 {
                        out.push(format!(
                            "model.L = {} exceeds the lightcone cap of 12",
                            ki.l
                        ));
                    }
                }
                if !(p.threshold > 0.0 && p.threshold < 1.0) {
                    out.push(format!(
                        "params.threshold = {} must be in (0, 1)",
                        p.threshold
                    ));
                }
                if p.t_max < 4 {
                    out.push("params.t_max: lightcone needs t_max >= 4".into());
                }
            }
            Experiment::Dephasing => {
                if p.n_samples == 0 {
                    out.push("params.n_samples must be positive".into());
                }
            }
            Experiment::Lyapunov => {
                if p.n_steps < 1000 {
                    out.push(format!(
                        "params.n_steps = {} too short for the Benettin average (>= 1000)",
                        p.n_steps
                    ));
                }
            }
            Experiment::Krylov | Experiment::Arnoldi if p.max_k == 0 => {
                out.push("params.max_k must be >= 1".into());
            }
            _ => {}
        }
        if matches!(self.experiment, Experiment::Echo | Experiment::EchoSweep) && p.ensemble == 0 {
            out.push("params.ensemble must be positive".into());
        }
        if p.t_max == 0 && self.experiment != Experiment::Lyapunov {
            out.push("params.t_max must be positive".into());
        }
        out
    }
}
