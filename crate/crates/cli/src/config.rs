//! Experiment configuration: one JSON document, unknown keys rejected,
//! every numeric parameter range-checked before anything runs.

use std::path::{Path, PathBuf};

use gibbs_lines::ensemble::{LocalHamiltonian, RWHamiltonian, Shift};
use gibbs_lines::scaling::scaled_hamiltonians;
use gibbs_lines::verify::{CurveFamily, WalkFamily};
use serde::{Deserialize, Serialize};

use crate::CliError;

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "yes")]
    pub plots: bool,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    PolymerBuild(PolymerBuild),
    GibbsSample(GibbsSample),
    MonotoneCoupling(MonotoneCoupling),
    #[serde(rename = "verify-A1")]
    VerifyA1(VerifyA1),
    #[serde(rename = "verify-A2")]
    VerifyA2(VerifyA2),
    #[serde(rename = "verify-A3")]
    VerifyA3(VerifyA3),
    #[serde(rename = "verify-A4")]
    VerifyA4(VerifyA4),
    GibbsInvariance(GibbsInvariance),
    ZComparison(ZComparison),
    ScalingStudy(ScalingStudy),
    TightnessStudy(TightnessStudy),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::PolymerBuild(_) => "polymer-build",
            Experiment::GibbsSample(_) => "gibbs-sample",
            Experiment::MonotoneCoupling(_) => "monotone-coupling",
            Experiment::VerifyA1(_) => "verify-A1",
            Experiment::VerifyA2(_) => "verify-A2",
            Experiment::VerifyA3(_) => "verify-A3",
            Experiment::VerifyA4(_) => "verify-A4",
            Experiment::GibbsInvariance(_) => "gibbs-invariance",
            Experiment::ZComparison(_) => "z-comparison",
            Experiment::ScalingStudy(_) => "scaling-study",
            Experiment::TightnessStudy(_) => "tightness-study",
        }
    }
}

/// Local interaction Hamiltonian choices.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HamiltonianSpec {
    Zero {},
    /// `scale · exp(a_shift − a₂)`.
    Exponential { scale: f64, shift: Shift },
    /// The scaled log-gamma interaction at noise level `n`.
    ScaledLogGamma { n: usize },
}

impl HamiltonianSpec {
    pub fn build(&self) -> gibbs_lines::Result<LocalHamiltonian<f64>> {
        match self {
            HamiltonianSpec::Zero {} => Ok(LocalHamiltonian::Zero),
            HamiltonianSpec::Exponential { scale, shift } => LocalHamiltonian::exponential(*scale, *shift),
            HamiltonianSpec::ScaledLogGamma { n } => Ok(scaled_hamiltonians(*n)?.interaction),
        }
    }

    fn validate(&self, field: &str) -> Result<(), CliError> {
        match self {
            HamiltonianSpec::Zero {} => Ok(()),
            HamiltonianSpec::Exponential { scale, .. } => positive(&format!("{field}.scale"), *scale),
            HamiltonianSpec::ScaledLogGamma { n } => at_least(&format!("{field}.n"), *n, 4),
        }
    }
}

/// Random walk Hamiltonian choices.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RandomWalkSpec {
    /// `log Γ(γ) + γ(x − c) + e^{−(x − c)}`.
    LogGamma { gamma: f64, centering: f64 },
    /// Gaussian increments with the given variance.
    Quadratic { variance: f64 },
    /// The scaled log-gamma walk at noise level `n`.
    ScaledLogGamma { n: usize },
}

impl RandomWalkSpec {
    pub fn build(&self) -> gibbs_lines::Result<RWHamiltonian<f64>> {
        match self {
            RandomWalkSpec::LogGamma { gamma, centering } => RWHamiltonian::log_gamma(*gamma, *centering),
            RandomWalkSpec::Quadratic { variance } => RWHamiltonian::quadratic(*variance),
            RandomWalkSpec::ScaledLogGamma { n } => Ok(scaled_hamiltonians(*n)?.random_walk),
        }
    }

    fn validate(&self, field: &str) -> Result<(), CliError> {
        match self {
            RandomWalkSpec::LogGamma { gamma, centering } => {
                positive(&format!("{field}.gamma"), *gamma)?;
                finite(&format!("{field}.centering"), *centering)
            }
            RandomWalkSpec::Quadratic { variance } => positive(&format!("{field}.variance"), *variance),
            RandomWalkSpec::ScaledLogGamma { n } => at_least(&format!("{field}.n"), *n, 4),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolymerBuild {
    pub gamma: f64,
    /// Layer `K`.
    pub k: usize,
    pub curves: usize,
    pub n_first: usize,
    pub n_last: usize,
    /// Compare the determinant formula against path enumeration on the small corner.
    #[serde(default)]
    pub oracle: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GibbsSample {
    /// First and last value of each curve, top curve first.
    pub entrance: Vec<f64>,
    pub exit: Vec<f64>,
    pub points: usize,
    #[serde(default = "one")]
    pub mesh: f64,
    /// Constant upper boundary; absent means `+∞`.
    #[serde(default)]
    pub upper: Option<f64>,
    /// Constant lower boundary; absent means `−∞`.
    #[serde(default)]
    pub lower: Option<f64>,
    pub hamiltonian: HamiltonianSpec,
    pub random_walk: RandomWalkSpec,
    pub delta: f64,
    pub sweeps: usize,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default = "one_usize")]
    pub thin: usize,
    #[serde(default = "one_usize")]
    pub replicas: usize,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonotoneCoupling {
    /// Noise level of the scaled log-gamma pair.
    pub n: usize,
    pub curves: usize,
    pub interior_sites: usize,
    /// Minimum number of single-site updates per chain.
    pub updates: u64,
    pub delta: f64,
    /// Initial lattice steps between the upper and lower ensembles.
    #[serde(default = "three")]
    pub gap: u32,
    /// Also run the non-convex counterexample, which must be detected.
    #[serde(default = "yes")]
    pub control: bool,
}

fn three() -> u32 {
    3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyA1 {
    pub hamiltonian: HamiltonianSpec,
    pub trials: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyA2 {
    pub random_walk: RandomWalkSpec,
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyA3 {
    pub ns: Vec<usize>,
    pub family: CurveFamily,
    pub trials: u64,
    #[serde(default = "default_c1")]
    pub c1: f64,
}

fn default_c1() -> f64 {
    3.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyA4 {
    pub ns: Vec<usize>,
    #[serde(default = "one")]
    pub duration: f64,
    #[serde(default)]
    pub z: f64,
    pub samples: usize,
    pub family: WalkFamily,
    #[serde(default = "default_delta0")]
    pub delta0: f64,
}

fn default_delta0() -> f64 {
    0.05
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GibbsInvariance {
    pub gamma: f64,
    pub k: usize,
    pub curves: (usize, usize),
    pub columns: (usize, usize),
    pub replicas: usize,
    pub delta: f64,
    pub sweeps: usize,
    #[serde(default)]
    pub bias_check: bool,
    /// Also run with the `e^{−x}` term dropped; that run must fail.
    #[serde(default = "yes")]
    pub control: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZComparison {
    pub ns: Vec<usize>,
    pub samples: usize,
    pub lower: f64,
    pub brownian_points: usize,
    #[serde(default = "default_family")]
    pub family: WalkFamily,
    #[serde(default = "default_delta0")]
    pub delta0: f64,
}

fn default_family() -> WalkFamily {
    WalkFamily::LogGammaShapeOne
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingStudy {
    pub ns: Vec<usize>,
    #[serde(default = "one")]
    pub t: f64,
    pub curves: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub replicas: usize,
    /// Sites for the stationarity test; empty disables it.
    #[serde(default = "default_stationarity_xs")]
    pub stationarity_xs: Vec<f64>,
}

fn default_stationarity_xs() -> Vec<f64> {
    vec![-1.0, 0.0, 1.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TightnessStudy {
    pub ns: Vec<usize>,
    #[serde(default = "one")]
    pub t: f64,
    pub curves: usize,
    /// Half-width `T` of the window `[−T, T]`.
    pub half_width: f64,
    pub rho: f64,
    pub eta: f64,
    pub radii: Vec<f64>,
    pub replicas: usize,
}

fn bad(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field `{field}`: {msg}"))
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(field, format!("must be positive and finite, got {v}")))
    }
}

fn finite(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(bad(field, format!("must be finite, got {v}")))
    }
}

fn at_least<T: PartialOrd + std::fmt::Display>(field: &str, v: T, min: T) -> Result<(), CliError> {
    if v >= min {
        Ok(())
    } else {
        Err(bad(field, format!("must be at least {min}, got {v}")))
    }
}

fn in_unit(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(bad(field, format!("must lie in (0, 1), got {v}")))
    }
}

fn noise_levels(field: &str, ns: &[usize], min: usize) -> Result<(), CliError> {
    if ns.is_empty() {
        return Err(bad(field, "must list at least one N"));
    }
    for (i, &n) in ns.iter().enumerate() {
        at_least(&format!("{field}[{i}]"), n, min)?;
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad(field, "must be strictly increasing"));
    }
    Ok(())
}

/// Nt/8 must be a positive integer and √N an integer for the lattice `(2/√N)ℤ` to line up with columns.
fn scaling_levels(field: &str, ns: &[usize], t: f64) -> Result<(), CliError> {
    noise_levels(field, ns, 16)?;
    for &n in ns {
        let layer = n as f64 * t / 8.0;
        if (layer - layer.round()).abs() > 1e-9 || layer < 1.0 {
            return Err(bad(field, format!("N = {n} with t = {t} gives Nt/8 = {layer}, not a positive integer")));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        match &self.experiment {
            Experiment::PolymerBuild(p) => {
                positive("experiment.gamma", p.gamma)?;
                at_least("experiment.k", p.k, 1)?;
                at_least("experiment.curves", p.curves, 1)?;
                if p.curves > p.k {
                    return Err(bad("experiment.curves", format!("must not exceed k = {}", p.k)));
                }
                at_least("experiment.n_first", p.n_first, 1)?;
                at_least("experiment.n_last", p.n_last, p.n_first)?;
            }
            Experiment::GibbsSample(g) => {
                at_least("experiment.entrance", g.entrance.len(), 1)?;
                if g.exit.len() != g.entrance.len() {
                    return Err(bad("experiment.exit", format!("needs {} values like `entrance`", g.entrance.len())));
                }
                for (i, v) in g.entrance.iter().chain(&g.exit).enumerate() {
                    finite(&format!("experiment.entrance/exit[{i}]"), *v)?;
                }
                at_least("experiment.points", g.points, 3)?;
                positive("experiment.mesh", g.mesh)?;
                positive("experiment.delta", g.delta)?;
                at_least("experiment.sweeps", g.sweeps, 1)?;
                at_least("experiment.thin", g.thin, 1)?;
                at_least("experiment.replicas", g.replicas, 1)?;
                if g.burn_in >= g.sweeps {
                    return Err(bad("experiment.burn_in", "must be smaller than `sweeps`"));
                }
                for (i, (a, b)) in g.entrance.iter().zip(&g.exit).enumerate() {
                    let steps = (b - a) / g.delta;
                    if (steps - steps.round()).abs() > 1e-6 {
                        return Err(bad(
                            &format!("experiment.exit[{i}]"),
                            format!("exit − entrance = {} is not a multiple of delta = {}", b - a, g.delta),
                        ));
                    }
                }
                g.hamiltonian.validate("experiment.hamiltonian")?;
                g.random_walk.validate("experiment.random_walk")?;
            }
            Experiment::MonotoneCoupling(m) => {
                at_least("experiment.n", m.n, 4)?;
                at_least("experiment.curves", m.curves, 1)?;
                at_least("experiment.interior_sites", m.interior_sites, 1)?;
                at_least("experiment.updates", m.updates, 1)?;
                positive("experiment.delta", m.delta)?;
            }
            Experiment::VerifyA1(a) => {
                a.hamiltonian.validate("experiment.hamiltonian")?;
                at_least("experiment.trials", a.trials, 1)?;
            }
            Experiment::VerifyA2(a) => {
                a.random_walk.validate("experiment.random_walk")?;
                finite("experiment.from", a.from)?;
                finite("experiment.to", a.to)?;
                if a.to <= a.from {
                    return Err(bad("experiment.to", "must exceed `from`"));
                }
                at_least("experiment.points", a.points, 3)?;
            }
            Experiment::VerifyA3(a) => {
                noise_levels("experiment.ns", &a.ns, 16)?;
                at_least("experiment.trials", a.trials, 1)?;
                positive("experiment.c1", a.c1)?;
            }
            Experiment::VerifyA4(a) => {
                noise_levels("experiment.ns", &a.ns, 1)?;
                at_least("experiment.ns", a.ns.len(), 3)?;
                positive("experiment.duration", a.duration)?;
                finite("experiment.z", a.z)?;
                at_least("experiment.samples", a.samples, 100)?;
                positive("experiment.delta0", a.delta0)?;
            }
            Experiment::GibbsInvariance(g) => {
                positive("experiment.gamma", g.gamma)?;
                at_least("experiment.k", g.k, 1)?;
                let (k1, k2) = g.curves;
                if k1 == 0 || k1 > k2 || k2 > g.k {
                    return Err(bad("experiment.curves", format!("need 1 ≤ k1 ≤ k2 ≤ k = {}", g.k)));
                }
                let (a, b) = g.columns;
                if a == 0 || a >= b {
                    return Err(bad("experiment.columns", "need 1 ≤ a < b"));
                }
                at_least("experiment.replicas", g.replicas, 2)?;
                positive("experiment.delta", g.delta)?;
                at_least("experiment.sweeps", g.sweeps, 1)?;
            }
            Experiment::ZComparison(z) => {
                noise_levels("experiment.ns", &z.ns, 2)?;
                at_least("experiment.samples", z.samples, 2)?;
                finite("experiment.lower", z.lower)?;
                at_least("experiment.brownian_points", z.brownian_points, 2)?;
                positive("experiment.delta0", z.delta0)?;
            }
            Experiment::ScalingStudy(s) => {
                positive("experiment.t", s.t)?;
                scaling_levels("experiment.ns", &s.ns, s.t)?;
                at_least("experiment.curves", s.curves, 1)?;
                finite("experiment.x_min", s.x_min)?;
                finite("experiment.x_max", s.x_max)?;
                if s.x_max < s.x_min {
                    return Err(bad("experiment.x_max", "must not be below `x_min`"));
                }
                at_least("experiment.replicas", s.replicas, 2)?;
                if !s.stationarity_xs.is_empty() {
                    at_least("experiment.replicas", s.replicas, 100)?;
                    for (i, &x) in s.stationarity_xs.iter().enumerate() {
                        if !(x >= s.x_min && x <= s.x_max) {
                            return Err(bad(&format!("experiment.stationarity_xs[{i}]"), "outside [x_min, x_max]"));
                        }
                    }
                }
            }
            Experiment::TightnessStudy(t) => {
                positive("experiment.t", t.t)?;
                scaling_levels("experiment.ns", &t.ns, t.t)?;
                at_least("experiment.curves", t.curves, 1)?;
                positive("experiment.half_width", t.half_width)?;
                positive("experiment.rho", t.rho)?;
                in_unit("experiment.eta", t.eta)?;
                at_least("experiment.radii", t.radii.len(), 1)?;
                for (i, &r) in t.radii.iter().enumerate() {
                    positive(&format!("experiment.radii[{i}]"), r)?;
                }
                at_least("experiment.replicas", t.replicas, 1)?;
            }
        }
        Ok(())
    }
}

/// Reads a config, or the resolved config embedded in a previous run's manifest.
pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    let (text, value) = match value.get("resolved_config") {
        Some(inner) if value.get("manifest_version").is_some() => (None, inner.clone()),
        _ => (Some(text), value),
    };
    let cfg: ExperimentConfig = match text {
        // Deserializing from the text keeps line and column numbers in errors.
        Some(t) => {
            let de = &mut serde_json::Deserializer::from_str(t);
            serde_path_to_error::deserialize(de).map_err(|e| {
                CliError::Config(format!("field `{}`: {}", e.path(), e.inner()))
            })?
        }
        None => serde_path_to_error::deserialize(value)
            .map_err(|e| CliError::Config(format!("manifest field `{}`: {}", e.path(), e.inner())))?,
    };
    cfg.validate()?;
    Ok(cfg)
}
