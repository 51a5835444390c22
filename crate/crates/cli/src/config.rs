//! Flat key-value configuration with dotted sections.
//!
//! The format is line-oriented: `key = value`, `#` starts a comment, values
//! are scalars, words, or whitespace-separated number lists. Matrices are
//! given as row-major lists. Unknown keys are rejected with their line
//! number. The full schema ships in `docs/config-schema.txt`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use tracksim_core::classical::InitialMeasure;
use tracksim_core::instrument::NoiseKernel;
use tracksim_core::phasespace::{DynamicsSpec, PhasePoint};

/// Configuration error with enough context to fix the file.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(ConfigError(msg.into()))
}

/// Parsed but untyped key-value entries; keys are consumed as the typed
/// config is built so leftovers can be reported.
pub struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<RawConfig> {
        let mut entries = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("line {line_no}: expected `key = value`, got `{line}`"));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return err(format!("line {line_no}: empty key or value"));
            }
            if entries.insert(key.clone(), (value, line_no)).is_some() {
                return err(format!("line {line_no}: duplicate key `{key}`"));
            }
        }
        Ok(RawConfig { entries })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(v, _)| v)
    }

    fn take_str(&mut self, key: &str) -> Result<Option<String>> {
        Ok(self.take(key))
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| ConfigError(format!("key `{key}`: `{v}` is not a number"))),
        }
    }

    fn take_usize(&mut self, key: &str) -> Result<Option<usize>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| ConfigError(format!("key `{key}`: `{v}` is not a non-negative integer"))),
        }
    }

    fn take_u64(&mut self, key: &str) -> Result<Option<u64>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<u64>()
                .map(Some)
                .map_err(|_| ConfigError(format!("key `{key}`: `{v}` is not an integer seed"))),
        }
    }

    fn take_f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| ConfigError(format!("key `{key}`: `{t}` is not a number")))
                })
                .collect::<Result<Vec<f64>>>()
                .map(Some),
        }
    }

    fn take_usize_list(&mut self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| ConfigError(format!("key `{key}`: `{t}` is not an integer")))
                })
                .collect::<Result<Vec<usize>>>()
                .map(Some),
        }
    }

    /// Error out if any keys were never consumed.
    fn finish(self) -> Result<()> {
        if self.entries.is_empty() {
            return Ok(());
        }
        let mut leftovers: Vec<String> = self
            .entries
            .iter()
            .map(|(k, (_, line))| format!("`{k}` (line {line})"))
            .collect();
        leftovers.sort();
        err(format!("unknown keys: {}", leftovers.join(", ")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Track,
    Estimate,
    Converge,
    Weyl,
    Symmetry,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Track => "track",
            Scenario::Estimate => "estimate",
            Scenario::Converge => "converge",
            Scenario::Weyl => "weyl",
            Scenario::Symmetry => "symmetry",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Classical,
    Grid,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    TwoStage,
    LeastSquares,
}

/// Coherent-state parameters shared by the quantum scenarios.
#[derive(Debug, Clone)]
pub struct CoherentSpec {
    pub x0: DVector<f64>,
    pub p0: DVector<f64>,
    pub beta_exponent: f64,
    pub lambda: f64,
}

/// Grid geometry for the wavefunction backend.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n: usize,
}

/// One fully validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub dynamics: Option<DynamicsSpec>,
    pub kernel: Option<NoiseKernel>,
    pub mu0: Option<InitialMeasure>,
    pub epsilon: Vec<f64>,
    pub n_steps: usize,
    pub n_trials: usize,
    pub classical_trials: usize,
    pub master_seed: u64,
    pub backend: Backend,
    pub coherent: Option<CoherentSpec>,
    pub grid: GridSpec,
    pub estimator: EstimatorKind,
    pub n_list: Vec<usize>,
    pub window: Option<usize>,
    pub record: Option<PathBuf>,
    pub probes: usize,
    pub symbol_a: Option<PathBuf>,
    pub symbol_b: Option<PathBuf>,
    pub speed: f64,
    pub angle_tol: f64,
}

/// Parse dynamics keys out of a raw config; shared with record metadata.
pub fn dynamics_from_keys(raw: &mut RawConfig) -> Result<Option<DynamicsSpec>> {
    let Some(kind) = raw.take_str("dynamics")? else {
        return Ok(None);
    };
    let spec = match kind.as_str() {
        "free" => {
            let dim = raw.take_usize("dynamics.dim")?.unwrap_or(1);
            let tau_over_m = raw.take_f64("dynamics.tau_over_m")?.unwrap_or(1.0);
            DynamicsSpec::Free { dim, tau_over_m }
        }
        "harmonic" => {
            let Some(values) = raw.take_f64_list("dynamics.stiffness")? else {
                return err("harmonic dynamics needs `dynamics.stiffness` (row-major matrix)");
            };
            let d = (values.len() as f64).sqrt().round() as usize;
            if d * d != values.len() || d == 0 {
                return err("`dynamics.stiffness` must be a square row-major matrix");
            }
            let tau = raw.take_f64("dynamics.tau")?.unwrap_or(1.0);
            DynamicsSpec::Harmonic {
                stiffness: DMatrix::from_row_slice(d, d, &values),
                tau,
            }
        }
        "magnetic" => {
            let Some(beta) = raw.take_f64("dynamics.beta")? else {
                return err("magnetic dynamics needs `dynamics.beta`");
            };
            let tau = raw.take_f64("dynamics.tau")?.unwrap_or(1.0);
            DynamicsSpec::Magnetic { beta, tau }
        }
        other => return err(format!("unknown dynamics `{other}`")),
    };
    // constructing the map validates the parameters
    spec.map().map_err(|e| ConfigError(e.to_string()))?;
    Ok(Some(spec))
}

/// Render a dynamics spec back into config keys (record metadata).
pub fn dynamics_to_keys(spec: &DynamicsSpec) -> Vec<(String, String)> {
    match spec {
        DynamicsSpec::Free { dim, tau_over_m } => vec![
            ("dynamics".into(), "free".into()),
            ("dynamics.dim".into(), dim.to_string()),
            ("dynamics.tau_over_m".into(), tau_over_m.to_string()),
        ],
        DynamicsSpec::Harmonic { stiffness, tau } => {
            let flat: Vec<String> = stiffness
                .row_iter()
                .flat_map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>())
                .collect();
            vec![
                ("dynamics".into(), "harmonic".into()),
                ("dynamics.stiffness".into(), flat.join(" ")),
                ("dynamics.tau".into(), tau.to_string()),
            ]
        }
        DynamicsSpec::Magnetic { beta, tau } => vec![
            ("dynamics".into(), "magnetic".into()),
            ("dynamics.beta".into(), beta.to_string()),
            ("dynamics.tau".into(), tau.to_string()),
        ],
    }
}

/// Render a kernel back into config keys (record metadata).
pub fn kernel_to_keys(kernel: &NoiseKernel) -> Vec<(String, String)> {
    match kernel {
        NoiseKernel::Gaussian(g) => {
            let sigma = g.sigma();
            let flat: Vec<String> = sigma
                .row_iter()
                .flat_map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>())
                .collect();
            vec![
                ("kernel".into(), "gaussian".into()),
                ("kernel.sigma".into(), flat.join(" ")),
            ]
        }
        NoiseKernel::BumpCosine { halfwidth, .. } => vec![
            ("kernel".into(), "bump".into()),
            ("kernel.halfwidth".into(), halfwidth.to_string()),
        ],
        NoiseKernel::Delta { .. } => vec![("kernel".into(), "delta".into())],
    }
}

fn kernel_from_keys(raw: &mut RawConfig, dim: usize) -> Result<Option<NoiseKernel>> {
    let Some(kind) = raw.take_str("kernel")? else {
        return Ok(None);
    };
    let kernel = match kind.as_str() {
        "gaussian" => {
            let values = raw
                .take_f64_list("kernel.sigma")?
                .unwrap_or_else(|| vec![1.0]);
            if values.len() == 1 {
                NoiseKernel::gaussian_isotropic(values[0], dim)
            } else if values.len() == dim * dim {
                NoiseKernel::gaussian(DMatrix::from_row_slice(dim, dim, &values))
            } else {
                return err(format!(
                    "`kernel.sigma` must be a scalar or a {dim}×{dim} row-major matrix"
                ));
            }
        }
        "bump" => {
            let w = raw.take_f64("kernel.halfwidth")?.unwrap_or(1.0);
            NoiseKernel::bump_cosine(w, dim)
        }
        other => return err(format!("unknown kernel `{other}`")),
    };
    kernel.map(Some).map_err(|e| ConfigError(e.to_string()))
}

fn mu0_from_keys(raw: &mut RawConfig, dim: usize) -> Result<Option<InitialMeasure>> {
    let Some(kind) = raw.take_str("mu0")? else {
        return Ok(None);
    };
    let x0 = raw
        .take_f64_list("mu0.x0")?
        .unwrap_or_else(|| vec![0.0; dim]);
    let p0 = raw
        .take_f64_list("mu0.p0")?
        .unwrap_or_else(|| vec![0.0; dim]);
    if x0.len() != dim || p0.len() != dim {
        return err(format!("`mu0.x0`/`mu0.p0` must have {dim} components"));
    }
    let x0 = DVector::from_row_slice(&x0);
    let p0 = DVector::from_row_slice(&p0);
    let profile = |raw: &mut RawConfig| -> Result<NoiseKernel> {
        let var = raw.take_f64("mu0.sigma")?.unwrap_or(1.0);
        NoiseKernel::gaussian_isotropic(var, dim).map_err(|e| ConfigError(e.to_string()))
    };
    let measure = match kind.as_str() {
        "point" => InitialMeasure::PointMass(
            PhasePoint::new(x0, p0).map_err(|e| ConfigError(e.to_string()))?,
        ),
        "position" => InitialMeasure::PositionSmeared {
            x0,
            x_profile: profile(raw)?,
            p0,
        },
        "momentum" => InitialMeasure::MomentumSmeared {
            x0,
            p_profile: profile(raw)?,
            p0,
        },
        "shell" => {
            let speed = raw.take_f64("mu0.speed")?.unwrap_or(1.0);
            if speed <= 0.0 {
                return err("`mu0.speed` must be positive");
            }
            InitialMeasure::IsotropicShell { x0, speed }
        }
        other => return err(format!("unknown mu0 `{other}`")),
    };
    Ok(Some(measure))
}

impl ExperimentConfig {
    pub fn from_text(scenario: Scenario, text: &str) -> Result<ExperimentConfig> {
        let mut raw = RawConfig::parse(text)?;

        // an in-file scenario key must agree with the subcommand
        if let Some(s) = raw.take_str("scenario")? {
            if s != scenario.name() {
                return err(format!(
                    "config is for scenario `{s}` but `{}` was requested",
                    scenario.name()
                ));
            }
        }

        let dynamics = dynamics_from_keys(&mut raw)?;
        let dim = dynamics.as_ref().map(|d| d.dim()).unwrap_or(1);
        let kernel = kernel_from_keys(&mut raw, dim)?;
        let mu0 = mu0_from_keys(&mut raw, dim)?;

        let epsilon = raw.take_f64_list("epsilon")?.unwrap_or_default();
        for &e in &epsilon {
            if e <= 0.0 {
                return err("`epsilon` values must be positive");
            }
        }
        let n_steps = raw.take_usize("n_steps")?.unwrap_or(2);
        let n_trials = raw.take_usize("n_trials")?.unwrap_or(1000);
        let classical_trials = raw
            .take_usize("classical_trials")?
            .unwrap_or(n_trials.saturating_mul(4).max(1));
        let master_seed = raw.take_u64("master_seed")?.unwrap_or(0);

        let backend = match raw.take_str("backend")?.as_deref() {
            None | Some("classical") => Backend::Classical,
            Some("grid") => Backend::Grid,
            Some("gaussian") => Backend::Gaussian,
            Some(other) => return err(format!("unknown backend `{other}`")),
        };

        let coherent = {
            let x0 = raw.take_f64_list("coherent.x0")?;
            let p0 = raw.take_f64_list("coherent.p0")?;
            let beta_exponent = raw.take_f64("coherent.beta")?.unwrap_or(0.5);
            let lambda = raw.take_f64("coherent.lambda")?.unwrap_or(1.0);
            if !(0.0..=1.0).contains(&beta_exponent) || lambda <= 0.0 {
                return err("`coherent.beta` must lie in [0,1] and `coherent.lambda` be positive");
            }
            match (x0, p0) {
                (None, None) => None,
                (x0, p0) => {
                    let x0 = DVector::from_row_slice(&x0.unwrap_or_else(|| vec![0.0; dim]));
                    let p0 = DVector::from_row_slice(&p0.unwrap_or_else(|| vec![0.0; dim]));
                    if x0.len() != dim || p0.len() != dim {
                        return err(format!("`coherent.x0`/`coherent.p0` must have {dim} components"));
                    }
                    Some(CoherentSpec {
                        x0,
                        p0,
                        beta_exponent,
                        lambda,
                    })
                }
            }
        };

        let grid = GridSpec {
            x_lo: raw.take_f64("grid.x_lo")?.unwrap_or(-16.0),
            x_hi: raw.take_f64("grid.x_hi")?.unwrap_or(16.0),
            n: raw.take_usize("grid.n")?.unwrap_or(1024),
        };
        if grid.x_hi <= grid.x_lo || !grid.n.is_power_of_two() {
            return err("grid needs x_hi > x_lo and a power-of-two point count");
        }

        let estimator = match raw.take_str("estimator")?.as_deref() {
            None | Some("two_stage") => EstimatorKind::TwoStage,
            Some("least_squares") => EstimatorKind::LeastSquares,
            Some(other) => return err(format!("unknown estimator `{other}`")),
        };
        let n_list = raw
            .take_usize_list("n_list")?
            .unwrap_or_else(|| vec![100, 1000, 10_000]);
        if n_list.is_empty() || n_list.iter().any(|&n| n == 0) {
            return err("`n_list` must be non-empty with positive entries");
        }
        let window = raw.take_usize("window")?;
        let record = raw.take_str("record")?.map(PathBuf::from);
        let probes = raw.take_usize("probes")?.unwrap_or(32);
        let symbol_a = raw.take_str("symbol_a")?.map(PathBuf::from);
        let symbol_b = raw.take_str("symbol_b")?.map(PathBuf::from);
        let speed = raw.take_f64("speed")?.unwrap_or(1.0);
        let angle_tol = raw.take_f64("angle_tol")?.unwrap_or(0.05);

        raw.finish()?;

        let config = ExperimentConfig {
            scenario,
            dynamics,
            kernel,
            mu0,
            epsilon,
            n_steps,
            n_trials,
            classical_trials,
            master_seed,
            backend,
            coherent,
            grid,
            estimator,
            n_list,
            window,
            record,
            probes,
            symbol_a,
            symbol_b,
            speed,
            angle_tol,
        };
        config.validate()?;
        Ok(config)
    }

    /// Scenario-specific completeness checks.
    fn validate(&self) -> Result<()> {
        match self.scenario {
            Scenario::Track => {
                let dynamics = self
                    .dynamics
                    .as_ref()
                    .ok_or_else(|| ConfigError("track needs `dynamics`".into()))?;
                if self.kernel.is_none() {
                    return err("track needs `kernel`");
                }
                match self.backend {
                    Backend::Classical => {
                        if self.mu0.is_none() {
                            return err("classical track needs `mu0`");
                        }
                    }
                    Backend::Grid | Backend::Gaussian => {
                        if self.coherent.is_none() {
                            return err("quantum track needs `coherent.x0`/`coherent.p0`");
                        }
                        if self.epsilon.len() != 1 {
                            return err("quantum track needs exactly one `epsilon`");
                        }
                        if self.backend == Backend::Grid && dynamics.dim() != 1 {
                            return err("the grid backend is one-dimensional");
                        }
                    }
                }
            }
            Scenario::Estimate => {
                if self.record.is_none() {
                    // single-record mode may take dynamics from the record metadata
                    if self.dynamics.is_none() {
                        return err("estimate needs `dynamics`");
                    }
                    if self.kernel.is_none() || self.mu0.is_none() {
                        return err("Monte Carlo estimate needs `kernel` and `mu0`");
                    }
                }
            }
            Scenario::Converge => {
                if self.epsilon.len() < 2 {
                    return err("converge needs an `epsilon` list with at least two values");
                }
                if self.kernel.is_none() || self.coherent.is_none() {
                    return err("converge needs `kernel` and `coherent.*` keys");
                }
                match &self.dynamics {
                    Some(d) if d.dim() == 1 => {}
                    _ => return err("converge needs one-dimensional `dynamics`"),
                }
            }
            Scenario::Weyl => {
                if self.epsilon.is_empty() {
                    return err("weyl needs an `epsilon` list");
                }
                if self.probes == 0 {
                    return err("weyl needs `probes` >= 1");
                }
            }
            Scenario::Symmetry => {
                if self.kernel.is_none() {
                    return err("symmetry needs `kernel`");
                }
                match &self.dynamics {
                    Some(DynamicsSpec::Free { dim: 2, .. }) => {}
                    _ => return err("symmetry needs `dynamics = free` with `dynamics.dim = 2`"),
                }
            }
        }
        Ok(())
    }
}
