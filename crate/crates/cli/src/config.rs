//! Run configuration, read from a flat TOML file.
//!
//! ```toml
//! [model]
//! kind = "ar1"
//! rho = 0.5
//! scale = 1.0
//!
//! [weights]
//! p = 1.0
//! d_plus = 1.0
//! d_minus = 1.0
//!
//! [run]
//! n_list = [250, 500]
//! eps_grid = [0.5, 0.35, 0.25]
//! methods = ["saddlepoint"]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use smalldev::{MaSpec, Method, WeightSequence};

use crate::error::CliError;

pub const DEFAULT_WINDOW_TOL: f64 = 1e-12;
pub const DEFAULT_QUAD_REL_TOL: f64 = 1e-10;
pub const DEFAULT_SAMPLES: u64 = 100_000;

/// Which spectrum feeds the ratio flags of `verify`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RatioBasis {
    /// The computed eigenvalues of the largest truncation only.
    #[default]
    Truncated,
    /// Computed head plus the predicted power-law tail.
    TailCompleted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSection {
    pub p: f64,
    #[serde(default = "one")]
    pub d_plus: f64,
    #[serde(default = "one")]
    pub d_minus: f64,
    #[serde(default)]
    pub overrides: Vec<Override>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Override {
    pub k: i64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub eps_grid: Vec<f64>,
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub ratio_basis: RatioBasis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolSection {
    #[serde(default = "default_window_tol")]
    pub window: f64,
    #[serde(default = "default_quad_rel")]
    pub quad_rel: f64,
}

impl Default for TolSection {
    fn default() -> Self {
        Self { window: DEFAULT_WINDOW_TOL, quad_rel: DEFAULT_QUAD_REL_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

/// File-level layout of a config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: MaSpec,
    pub weights: WeightsSection,
    pub run: RunSection,
    #[serde(default)]
    pub tol: TolSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn one() -> f64 {
    1.0
}

fn default_methods() -> Vec<String> {
    vec!["saddlepoint".into()]
}

fn default_samples() -> u64 {
    DEFAULT_SAMPLES
}

fn default_window_tol() -> f64 {
    DEFAULT_WINDOW_TOL
}

fn default_quad_rel() -> f64 {
    DEFAULT_QUAD_REL_TOL
}

/// Validated configuration of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: MaSpec,
    pub weights: WeightSequence,
    pub n_list: Vec<usize>,
    pub eps_grid: Vec<f64>,
    pub methods: Vec<Method>,
    pub samples: u64,
    pub seed: u64,
    pub ratio_basis: RatioBasis,
    pub window_tol: f64,
    pub quad_rel_tol: f64,
    pub output_dir: PathBuf,
    /// Effective file contents after command-line overrides, used for hashing.
    pub file: ConfigFile,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn parse_method(name: &str) -> Result<Method, CliError> {
    match name {
        "saddlepoint" => Ok(Method::Saddlepoint),
        "tilted_mc" => Ok(Method::TiltedMc),
        "direct_sim" => Ok(Method::DirectSim),
        other => Err(CliError::Config(format!(
            "unknown method {other:?}; expected saddlepoint, tilted_mc or direct_sim"
        ))),
    }
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    pub fn parse(text: &str, overrides: &Overrides) -> Result<Self, CliError> {
        let mut file: ConfigFile = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(seed) = overrides.seed {
            file.run.seed = seed;
        }
        if let Some(samples) = overrides.samples {
            file.run.samples = samples;
        }
        if let Some(out) = &overrides.out {
            file.output.dir = Some(out.clone());
        }
        Self::from_file(file)
    }

    pub fn from_file(file: ConfigFile) -> Result<Self, CliError> {
        file.model.validate().map_err(CliError::Domain)?;
        let ws = &file.weights;
        let weights = WeightSequence::new(ws.p, ws.d_plus, ws.d_minus)
            .and_then(|w| w.with_overrides(ws.overrides.iter().map(|o| (o.k, o.d))))
            .map_err(CliError::Domain)?;
        let run = &file.run;
        if !run.n_list.windows(2).all(|v| v[0] < v[1]) {
            return Err(CliError::Config("run.n_list must be strictly increasing".into()));
        }
        if run.n_list.contains(&0) {
            return Err(CliError::Config("run.n_list entries must be positive".into()));
        }
        if !run.eps_grid.iter().all(|&e| e > 0.0 && e.is_finite()) {
            return Err(CliError::Config("run.eps_grid entries must be positive and finite".into()));
        }
        if !run.eps_grid.windows(2).all(|v| v[0] > v[1]) {
            return Err(CliError::Config("run.eps_grid must be strictly decreasing".into()));
        }
        let mut methods = Vec::new();
        for name in &run.methods {
            let m = parse_method(name)?;
            if !methods.contains(&m) {
                methods.push(m);
            }
        }
        let needs_samples = methods.iter().any(|m| matches!(m, Method::TiltedMc | Method::DirectSim));
        if needs_samples && run.samples < smalldev::smallball::MIN_SAMPLES {
            return Err(CliError::Config(format!(
                "run.samples = {} is below the Monte Carlo minimum of {}",
                run.samples,
                smalldev::smallball::MIN_SAMPLES
            )));
        }
        let tol = &file.tol;
        if !(tol.window > 0.0) || !(tol.quad_rel > 0.0) {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        Ok(Self {
            model: file.model.clone(),
            weights,
            n_list: run.n_list.clone(),
            eps_grid: run.eps_grid.clone(),
            methods,
            samples: run.samples,
            seed: run.seed,
            ratio_basis: run.ratio_basis,
            window_tol: tol.window,
            quad_rel_tol: tol.quad_rel,
            output_dir: file.output.dir.clone().unwrap_or_else(|| PathBuf::from("smalldev-out")),
            file,
        })
    }

    /// SHA-256 of the canonical serialization of the effective config. The
    /// output directory is excluded so moving a run does not change its hash.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut canonical = self.file.clone();
        canonical.output.dir = None;
        let text = serde_json::to_string(&canonical).expect("config serializes");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn require_n_list(&self) -> Result<(), CliError> {
        if self.n_list.is_empty() {
            return Err(CliError::Usage("run.n_list is empty; give at least one truncation N".into()));
        }
        Ok(())
    }

    pub fn require_eps_grid(&self) -> Result<(), CliError> {
        if self.eps_grid.is_empty() {
            return Err(CliError::Usage("run.eps_grid is empty".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const IID: &str = r#"
[model]
kind = "iid"
a0 = 1.0

[weights]
p = 1.0

[run]
n_list = [100, 200]
eps_grid = [0.5, 0.3, 0.2]
"#;

    #[test]
    fn parses_minimal_config_with_defaults() {
        let cfg = RunConfig::parse(IID, &Overrides::default()).unwrap();
        assert_eq!(cfg.model, MaSpec::Iid { a0: 1.0 });
        assert_eq!(cfg.weights.d_plus(), 1.0);
        assert_eq!(cfg.methods, vec![Method::Saddlepoint]);
        assert_eq!(cfg.window_tol, DEFAULT_WINDOW_TOL);
        assert_eq!(cfg.ratio_basis, RatioBasis::Truncated);
    }

    #[test]
    fn overrides_take_precedence_and_change_hash() {
        let a = RunConfig::parse(IID, &Overrides::default()).unwrap();
        let b = RunConfig::parse(IID, &Overrides { seed: Some(9), ..Default::default() }).unwrap();
        assert_eq!(b.seed, 9);
        assert_ne!(a.hash(), b.hash());
        let c = RunConfig::parse(IID, &Overrides { out: Some("elsewhere".into()), ..Default::default() }).unwrap();
        assert_eq!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn rejects_bad_grids_and_methods() {
        let unsorted = IID.replace("[0.5, 0.3, 0.2]", "[0.2, 0.3]");
        assert!(matches!(RunConfig::parse(&unsorted, &Overrides::default()), Err(CliError::Config(_))));
        let method = IID.replace("[run]", "[run]\nmethods = [\"magic\"]");
        assert!(matches!(RunConfig::parse(&method, &Overrides::default()), Err(CliError::Config(_))));
        let few = IID.replace("[run]", "[run]\nmethods = [\"tilted_mc\"]\nsamples = 10");
        assert!(matches!(RunConfig::parse(&few, &Overrides::default()), Err(CliError::Config(_))));
    }

    #[test]
    fn domain_errors_surface() {
        let low_p = IID.replace("p = 1.0", "p = 0.4");
        assert!(matches!(RunConfig::parse(&low_p, &Overrides::default()), Err(CliError::Domain(_))));
    }

    #[test]
    fn weight_overrides_parse() {
        let text = IID.replace("p = 1.0", "p = 1.0\noverrides = [{ k = 0, d = 2.0 }]");
        let cfg = RunConfig::parse(&text, &Overrides::default()).unwrap();
        assert_eq!(cfg.weights.weight_at(0), 2.0);
    }
}
