//! Run configuration: a TOML file with `[system]`, `[identify]`, `[bound]`,
//! `[synthesize]` and `[simulate]` sections, every key optional, plus the CLI
//! flag overrides that mirror the most common keys.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// How c_r is chosen: a literal value, or the validation-set estimate ĉ_r
/// scaled by a safety factor ("empirical" / "empirical*1.5").
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrSpec {
    Float(f64),
    Empirical { factor: f64 },
}

impl CrSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if let Ok(v) = t.parse::<f64>() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("c_r must be finite and ≥ 0, got {v}")));
            }
            return Ok(CrSpec::Float(v));
        }
        if t == "empirical" {
            return Ok(CrSpec::Empirical { factor: 1.0 });
        }
        if let Some(rest) = t.strip_prefix("empirical*") {
            let factor: f64 = rest
                .parse()
                .map_err(|_| Error::Config(format!("bad empirical factor '{rest}'")))?;
            if !(factor > 0.0) || !factor.is_finite() {
                return Err(Error::Config("empirical factor must be > 0".into()));
            }
            return Ok(CrSpec::Empirical { factor });
        }
        Err(Error::Config(format!(
            "c_r must be a number, \"empirical\" or \"empirical*<factor>\", got '{t}'"
        )))
    }

    /// Resolve against the identification's empirical estimate.
    pub fn resolve(&self, empirical_cr: f64) -> f64 {
        match self {
            CrSpec::Float(v) => *v,
            CrSpec::Empirical { factor } => empirical_cr * factor,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Built-in system name; ignored when `data` is set.
    pub system: String,
    /// External sample CSV; switches identification to ingested data.
    pub data: Option<String>,
    /// Dictionary for external data: "monomials:<deg>".
    pub dictionary: Option<String>,
    /// Output map rows (row-major, m×N) for external data; defaults to reading
    /// the first lifted coordinate.
    pub output: Option<Vec<Vec<f64>>>,

    pub samples: u64,
    pub seed: u64,
    /// Seed for the independent validation draw (default seed + 1).
    pub validation_seed: Option<u64>,
    pub rank_tol: f64,

    pub delta: f64,
    pub bound_cr: CrSpec,

    pub alpha: f64,
    pub synth_cr: CrSpec,

    /// Simulation horizon; per-system default when unset (example-a 5.0,
    /// cstr 1.0).
    pub horizon: Option<f64>,
    pub step: f64,
    pub initial_states: u64,
    pub sim_seed: u64,
    pub burn_in: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            system: "example-a".into(),
            data: None,
            dictionary: None,
            output: None,
            samples: 5000,
            seed: 1,
            validation_seed: None,
            rank_tol: 1e-10,
            delta: 0.1,
            bound_cr: CrSpec::Empirical { factor: 1.5 },
            alpha: 0.1,
            synth_cr: CrSpec::Empirical { factor: 1.0 },
            horizon: None,
            step: 1e-3,
            initial_states: 5,
            sim_seed: 7,
            burn_in: 0.1,
        }
    }
}

impl RunConfig {
    pub fn validation_seed(&self) -> u64 {
        self.validation_seed.unwrap_or(self.seed.wrapping_add(1))
    }

    /// Horizon to simulate: explicit, or the per-system default.
    pub fn horizon_for(&self, system_name: &str) -> f64 {
        if let Some(h) = self.horizon {
            return h;
        }
        match system_name {
            "cstr" => 1.0,
            _ => 5.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Config("samples must be ≥ 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config("delta must lie in (0, 1)".into()));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::Config("alpha must be > 0".into()));
        }
        if !(self.step > 0.0) {
            return Err(Error::Config("step must be > 0".into()));
        }
        if let Some(h) = self.horizon {
            if !(h >= self.step) {
                return Err(Error::Config("horizon must cover at least one step".into()));
            }
        }
        if self.initial_states == 0 {
            return Err(Error::Config("need at least one initial state".into()));
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(Error::Config("burn_in must be a fraction in [0, 1)".into()));
        }
        if !(self.rank_tol > 0.0) {
            return Err(Error::Config("rank_tol must be > 0".into()));
        }
        if self.data.is_some() && self.dictionary.is_none() {
            return Err(Error::Config(
                "external data needs a dictionary (e.g. \"monomials:2\")".into(),
            ));
        }
        Ok(())
    }
}

/// Raw TOML shape: everything optional so a config can override any subset.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    system: Option<FileSystem>,
    identify: Option<FileIdentify>,
    bound: Option<FileBound>,
    synthesize: Option<FileSynthesize>,
    simulate: Option<FileSimulate>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSystem {
    name: Option<String>,
    data: Option<String>,
    dictionary: Option<String>,
    output: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileIdentify {
    samples: Option<u64>,
    seed: Option<u64>,
    validation_seed: Option<u64>,
    rank_tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileBound {
    delta: Option<f64>,
    cr: Option<toml::Value>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSynthesize {
    alpha: Option<f64>,
    cr: Option<toml::Value>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSimulate {
    horizon: Option<f64>,
    step: Option<f64>,
    initial_states: Option<u64>,
    seed: Option<u64>,
    burn_in: Option<f64>,
}

fn cr_from_value(v: &toml::Value) -> Result<CrSpec> {
    match v {
        toml::Value::Float(f) => CrSpec::parse(&f.to_string()),
        toml::Value::Integer(i) => CrSpec::parse(&i.to_string()),
        toml::Value::String(s) => CrSpec::parse(s),
        other => Err(Error::Config(format!(
            "c_r must be a number or string, got {other}"
        ))),
    }
}

/// Parse a config file and fold it over the defaults.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let file: FileConfig = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = RunConfig::default();

    if let Some(sys) = file.system {
        if let Some(name) = sys.name {
            cfg.system = name;
        }
        cfg.data = sys.data;
        cfg.dictionary = sys.dictionary;
        cfg.output = sys.output;
    }
    if let Some(id) = file.identify {
        if let Some(v) = id.samples {
            cfg.samples = v;
        }
        if let Some(v) = id.seed {
            cfg.seed = v;
        }
        cfg.validation_seed = id.validation_seed.or(cfg.validation_seed);
        if let Some(v) = id.rank_tol {
            cfg.rank_tol = v;
        }
    }
    if let Some(b) = file.bound {
        if let Some(v) = b.delta {
            cfg.delta = v;
        }
        if let Some(v) = &b.cr {
            cfg.bound_cr = cr_from_value(v)?;
        }
    }
    if let Some(s) = file.synthesize {
        if let Some(v) = s.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = &s.cr {
            cfg.synth_cr = cr_from_value(v)?;
        }
    }
    if let Some(s) = file.simulate {
        cfg.horizon = s.horizon.or(cfg.horizon);
        if let Some(v) = s.step {
            cfg.step = v;
        }
        if let Some(v) = s.initial_states {
            cfg.initial_states = v;
        }
        if let Some(v) = s.seed {
            cfg.sim_seed = v;
        }
        if let Some(v) = s.burn_in {
            cfg.burn_in = v;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cr_spec_parses_all_forms() {
        assert_eq!(CrSpec::parse("1e-3").unwrap(), CrSpec::Float(1e-3));
        assert_eq!(CrSpec::parse("0").unwrap(), CrSpec::Float(0.0));
        assert_eq!(
            CrSpec::parse("empirical").unwrap(),
            CrSpec::Empirical { factor: 1.0 }
        );
        assert_eq!(
            CrSpec::parse("empirical*1.5").unwrap(),
            CrSpec::Empirical { factor: 1.5 }
        );
        assert!(CrSpec::parse("-0.5").is_err());
        assert!(CrSpec::parse("empirical*0").is_err());
        assert!(CrSpec::parse("garbage").is_err());
        assert_eq!(CrSpec::Empirical { factor: 1.5 }.resolve(2e-3), 3e-3);
        assert_eq!(CrSpec::Float(0.25).resolve(999.0), 0.25);
    }

    #[test]
    fn defaults_are_sane_and_valid() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.samples, 5000);
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.validation_seed(), 2);
        assert_eq!(cfg.horizon_for("example-a"), 5.0);
        assert_eq!(cfg.horizon_for("cstr"), 1.0);
    }

    #[test]
    fn file_overrides_fold_over_defaults() {
        let dir = std::env::temp_dir().join("koopman-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.toml");
        std::fs::write(
            &path,
            r#"
[system]
name = "cstr"

[identify]
samples = 2000
seed = 9

[bound]
delta = 0.05
cr = "empirical*2"

[synthesize]
alpha = 0.4
cr = 1e-3

[simulate]
horizon = 0.5
initial_states = 3
"#,
        )
        .unwrap();
        let cfg = load_config(&path).unwrap();
        assert_eq!(cfg.system, "cstr");
        assert_eq!(cfg.samples, 2000);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.validation_seed(), 10);
        assert_eq!(cfg.delta, 0.05);
        assert_eq!(cfg.bound_cr, CrSpec::Empirical { factor: 2.0 });
        assert_eq!(cfg.alpha, 0.4);
        assert_eq!(cfg.synth_cr, CrSpec::Float(1e-3));
        assert_eq!(cfg.horizon, Some(0.5));
        assert_eq!(cfg.initial_states, 3);
        // untouched keys keep defaults
        assert_eq!(cfg.step, 1e-3);
        assert_eq!(cfg.burn_in, 0.1);
    }

    #[test]
    fn bad_configs_are_rejected() {
        let dir = std::env::temp_dir().join("koopman-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let unknown = dir.join("unknown.toml");
        std::fs::write(&unknown, "[identify]\nnot_a_key = 1\n").unwrap();
        assert!(matches!(load_config(&unknown), Err(Error::Config(_))));

        let bad_delta = dir.join("delta.toml");
        std::fs::write(&bad_delta, "[bound]\ndelta = 1.5\n").unwrap();
        assert!(matches!(load_config(&bad_delta), Err(Error::Config(_))));

        let data_no_dict = dir.join("nodict.toml");
        std::fs::write(&data_no_dict, "[system]\ndata = \"x.csv\"\n").unwrap();
        assert!(matches!(load_config(&data_no_dict), Err(Error::Config(_))));
    }
}
