//! Run configuration: a TOML document with command-line overrides.

use std::path::{Path, PathBuf};

use bsbem_core::rom::RomConfig;
use bsbem_core::sampling::{bounds_from_moments, Parameter, Marginal, Scheme, UncertainInput};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Ackley,
    Burgers,
    External,
}

/// One uncertain input, given either by bounds or by mean and
/// coefficient of variation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub name: String,
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv: Option<f64>,
}

fn default_kind() -> String {
    "uniform".into()
}

/// A count given once for all dimensions or per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerDim {
    All(usize),
    Each(Vec<usize>),
}

impl PerDim {
    fn expand(&self, dim: usize, what: &str) -> CliResult<Vec<usize>> {
        let v = match self {
            PerDim::All(n) => vec![*n; dim],
            PerDim::Each(v) if v.len() == dim => v.clone(),
            PerDim::Each(v) => {
                return Err(CliError::config(format!(
                    "rom.{what} lists {} values for {dim} parameters",
                    v.len()
                )))
            }
        };
        if v.contains(&0) {
            return Err(CliError::config(format!("rom.{what} entries must be positive")));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RomSection {
    pub degree: PerDim,
    pub elements: PerDim,
    pub eps_t: f64,
    pub eps_s: f64,
    pub oversample: usize,
}

impl Default for RomSection {
    fn default() -> Self {
        Self {
            degree: PerDim::All(2),
            elements: PerDim::All(5),
            eps_t: 1e-10,
            eps_s: 1e-10,
            oversample: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sweep {
    /// Vary both POD tolerances together.
    Eps,
    Elements,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceScheme {
    Mc,
    Lhs,
}

impl ReferenceScheme {
    pub fn scheme(self) -> Scheme {
        match self {
            ReferenceScheme::Mc => Scheme::Mc,
            ReferenceScheme::Lhs => Scheme::Lhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSection {
    pub sweep: Sweep,
    pub eps_values: Vec<f64>,
    pub elements_values: Vec<usize>,
    pub reference_scheme: ReferenceScheme,
    pub reference_samples: usize,
    pub pce: bool,
    pub pce_order: usize,
    pub pce_oversampling: usize,
    pub kde_points: usize,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            sweep: Sweep::Eps,
            eps_values: vec![1e-3, 1e-5, 1e-10],
            elements_values: Vec::new(),
            reference_scheme: ReferenceScheme::Mc,
            reference_samples: 100_000,
            pce: false,
            pce_order: 6,
            pce_oversampling: 2,
            kde_points: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub ackley_resolution: usize,
    pub burgers_nodes: usize,
    pub burgers_times: usize,
    pub burgers_dt: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            ackley_resolution: 160,
            burgers_nodes: 1000,
            burgers_times: 50,
            burgers_dt: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemKind,
    /// Sidecar of an external snapshot set (problem = "external").
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<PathBuf>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses all available cores.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub inputs: Vec<InputSpec>,
    #[serde(default)]
    pub rom: RomSection,
    #[serde(default)]
    pub bench: BenchSection,
    #[serde(default)]
    pub grid: GridSection,
}

fn default_seed() -> u64 {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("output")
}

/// Command-line values that replace configuration entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub eps_t: Option<f64>,
    pub eps_s: Option<f64>,
    pub degree: Option<usize>,
    pub elements: Option<usize>,
    pub oversample: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub reference_samples: Option<usize>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    /// Reads `path`; a relative snapshot path is taken relative to the
    /// configuration file.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        if let (Some(snap), Some(dir)) = (&config.snapshots, path.parent()) {
            if snap.is_relative() {
                config.snapshots = Some(dir.join(snap));
            }
        }
        Ok(config)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.eps_t {
            self.rom.eps_t = v;
        }
        if let Some(v) = o.eps_s {
            self.rom.eps_s = v;
        }
        if let Some(v) = o.degree {
            self.rom.degree = PerDim::All(v);
        }
        if let Some(v) = o.elements {
            self.rom.elements = PerDim::All(v);
        }
        if let Some(v) = o.oversample {
            self.rom.oversample = v;
        }
        if let Some(v) = &o.output_dir {
            self.output_dir = v.clone();
        }
        if let Some(v) = o.threads {
            self.threads = v;
        }
        if let Some(v) = o.reference_samples {
            self.bench.reference_samples = v;
        }
    }

    /// Input distribution, with the Ackley default `U[-1, 1]^3`.
    pub fn uncertain_input(&self) -> CliResult<UncertainInput> {
        if self.inputs.is_empty() {
            return match self.problem {
                ProblemKind::Ackley => Ok(UncertainInput::uniform(&[
                    ("xi1", -1.0, 1.0),
                    ("xi2", -1.0, 1.0),
                    ("xi3", -1.0, 1.0),
                ])?),
                _ => Err(CliError::config("at least one [[inputs]] entry is required")),
            };
        }
        let params = self
            .inputs
            .iter()
            .map(|spec| {
                if spec.kind != "uniform" {
                    return Err(CliError::config(format!(
                        "input {}: unsupported kind {:?} (only \"uniform\")",
                        spec.name, spec.kind
                    )));
                }
                let (lower, upper) = match (spec.lower, spec.upper, spec.mean, spec.cv) {
                    (Some(a), Some(b), None, None) => (a, b),
                    (None, None, Some(m), Some(cv)) => bounds_from_moments(m, cv)
                        .map_err(|e| CliError::config(format!("input {}: {e}", spec.name)))?,
                    _ => {
                        return Err(CliError::config(format!(
                            "input {}: give either lower/upper or mean/cv",
                            spec.name
                        )))
                    }
                };
                Ok(Parameter {
                    name: spec.name.clone(),
                    marginal: Marginal::Uniform { lower, upper },
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        UncertainInput::new(params).map_err(|e| CliError::config(e.to_string()))
    }

    /// Offline hyperparameters for `dim` parameters.
    pub fn rom_config(&self, dim: usize) -> CliResult<RomConfig> {
        let config = RomConfig {
            degrees: self.rom.degree.expand(dim, "degree")?,
            elements: self.rom.elements.expand(dim, "elements")?,
            eps_t: self.rom.eps_t,
            eps_s: self.rom.eps_s,
            oversample: self.rom.oversample,
            seed: self.seed,
        };
        config.validate().map_err(|e| CliError::config(e.to_string()))?;
        Ok(config)
    }

    /// Checks everything that does not require reading other files.
    pub fn validate(&self) -> CliResult<()> {
        let inputs = self.uncertain_input()?;
        match self.problem {
            ProblemKind::Ackley if inputs.dim() != 3 => {
                return Err(CliError::config("the Ackley problem has exactly 3 inputs"))
            }
            ProblemKind::Burgers if inputs.dim() != 1 => {
                return Err(CliError::config("the Burgers problem has exactly 1 input (Re)"))
            }
            ProblemKind::External if self.snapshots.is_none() => {
                return Err(CliError::config("problem = \"external\" requires `snapshots`"))
            }
            _ => {}
        }
        if self.problem == ProblemKind::Burgers {
            let (lo, _) = inputs.params()[0].marginal.support();
            if lo <= 0.0 {
                return Err(CliError::config("the Reynolds number support must be positive"));
            }
        }
        self.rom_config(inputs.dim())?;
        let g = &self.grid;
        if g.ackley_resolution < 2 || g.burgers_nodes < 2 || g.burgers_times == 0 || !(g.burgers_dt > 0.0) {
            return Err(CliError::config("grid sizes must be >= 2 nodes, >= 1 time and dt > 0"));
        }
        let b = &self.bench;
        if b.reference_samples < 2 {
            return Err(CliError::config("bench.reference_samples must be at least 2"));
        }
        if b.eps_values.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return Err(CliError::config("bench.eps_values must lie in (0, 1)"));
        }
        if b.elements_values.contains(&0) {
            return Err(CliError::config("bench.elements_values must be positive"));
        }
        if b.pce && b.pce_oversampling == 0 {
            return Err(CliError::config("bench.pce_oversampling must be at least 1"));
        }
        if b.kde_points < 2 {
            return Err(CliError::config("bench.kde_points must be at least 2"));
        }
        Ok(())
    }

    /// Bench sweep values; an empty sweep is a configuration error.
    pub fn sweep_values(&self) -> CliResult<Vec<f64>> {
        let values: Vec<f64> = match self.bench.sweep {
            Sweep::Eps => self.bench.eps_values.clone(),
            Sweep::Elements => self.bench.elements_values.iter().map(|&n| n as f64).collect(),
            Sweep::None => vec![self.rom.eps_s],
        };
        if values.is_empty() {
            return Err(CliError::config("bench sweep has no values"));
        }
        Ok(values)
    }

    /// Hash of the configuration without output location and thread
    /// count, which do not affect results.
    pub fn config_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        canonical.threads = 0;
        sha256_hex(toml::to_string(&canonical).expect("serializable").as_bytes())
    }

    /// Hash of what determines a surrogate: inputs, offline settings and
    /// seed. Independent of where the snapshots came from.
    pub fn build_hash(&self) -> CliResult<String> {
        #[derive(Serialize)]
        struct BuildKey<'a> {
            inputs: Vec<(String, f64, f64)>,
            degrees: Vec<usize>,
            elements: Vec<usize>,
            eps_t: f64,
            eps_s: f64,
            oversample: usize,
            seed: u64,
            rng: &'a str,
        }
        let inputs = self.uncertain_input()?;
        let rom = self.rom_config(inputs.dim())?;
        let key = BuildKey {
            inputs: inputs
                .params()
                .iter()
                .map(|p| {
                    let (a, b) = p.marginal.support();
                    (p.name.clone(), a, b)
                })
                .collect(),
            degrees: rom.degrees,
            elements: rom.elements,
            eps_t: rom.eps_t,
            eps_s: rom.eps_s,
            oversample: rom.oversample,
            seed: rom.seed,
            rng: bsbem_core::sampling::RNG_ALGORITHM,
        };
        Ok(sha256_hex(toml::to_string(&key).expect("serializable").as_bytes()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
