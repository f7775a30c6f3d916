//! The model file: a deterministic TOML document accumulating the pipeline's
//! stages (identification → bound report → synthesis). Floats are written with
//! 17 significant digits so values survive a write → read → write round trip
//! byte-identically; section and key order are fixed for the same reason.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::dict::{self, Dictionary};
use crate::error::{Error, Result};
use crate::systems::{self, BenchmarkSystem};

pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
pub struct Meta {
    pub artifact_version: u32,
    /// Unix timestamp; `SOURCE_DATE_EPOCH` when set, otherwise 0 so reruns are
    /// byte-identical.
    pub created: u64,
    pub seed: u64,
    pub samples: u64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SystemInfo {
    /// Built-in system name, or "csv" for external data.
    pub name: String,
    pub state_dim: usize,
    pub lifted_dim: usize,
    /// "builtin" (reconstruct through the named system) or "monomials:<deg>".
    pub dictionary: String,
    pub labels: Vec<String>,
    /// Source CSV path for external data runs.
    pub data: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct IdentifySection {
    /// Lifted generator estimate, N×N row-major.
    pub a: Vec<f64>,
    /// Output map, m×N row-major.
    pub c: Vec<f64>,
    pub output_dim: usize,
    pub residual_fro: f64,
    pub rank_x: usize,
    pub rank_deficient: bool,
    /// Empirical conic remainder bound ĉ_r on the validation set.
    pub empirical_cr: f64,
    pub validation_samples: u64,
    pub validation_seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct BoundSection {
    pub c_r: f64,
    pub delta: f64,
    pub a_norm: f64,
    pub cinv_norm: f64,
    pub c_tilde: f64,
    pub d0: u64,
    pub d0_raw: f64,
    pub mc_points: u64,
    /// Whether the identification sample count meets d₀.
    pub satisfied: bool,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SynthesisSection {
    pub alpha: f64,
    pub c_r: f64,
    pub feasible: bool,
    pub lambda: f64,
    pub slack: f64,
    pub lmi_max_eig: f64,
    pub schur_max_eig: f64,
    pub closedloop_abscissa: f64,
    /// N×N row-major.
    pub p_phi: Vec<f64>,
    pub p_e: Vec<f64>,
    /// N×m row-major.
    pub g: Vec<f64>,
    pub l: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ModelFile {
    pub meta: Meta,
    pub system: SystemInfo,
    pub identify: Option<IdentifySection>,
    pub bound: Option<BoundSection>,
    pub synthesis: Option<SynthesisSection>,
}

impl ModelFile {
    pub fn a_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.system.lifted_dim;
        let id = self.identify_section()?;
        matrix_from_row_major("identify.a", &id.a, n, n)
    }

    pub fn c_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.system.lifted_dim;
        let id = self.identify_section()?;
        matrix_from_row_major("identify.c", &id.c, id.output_dim, n)
    }

    pub fn l_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.system.lifted_dim;
        let syn = self.synthesis_section()?;
        let m = self.identify_section()?.output_dim;
        matrix_from_row_major("synthesis.l", &syn.l, n, m)
    }

    pub fn p_phi_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.system.lifted_dim;
        matrix_from_row_major("synthesis.p_phi", &self.synthesis_section()?.p_phi, n, n)
    }

    pub fn p_e_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.system.lifted_dim;
        matrix_from_row_major("synthesis.p_e", &self.synthesis_section()?.p_e, n, n)
    }

    pub fn g_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.system.lifted_dim;
        let m = self.identify_section()?.output_dim;
        matrix_from_row_major("synthesis.g", &self.synthesis_section()?.g, n, m)
    }

    pub fn identify_section(&self) -> Result<&IdentifySection> {
        self.identify
            .as_ref()
            .ok_or_else(|| Error::ModelFormat("model has no identification yet".into()))
    }

    pub fn synthesis_section(&self) -> Result<&SynthesisSection> {
        self.synthesis
            .as_ref()
            .ok_or_else(|| Error::ModelFormat("model has no synthesized gain yet".into()))
    }

    /// Rebuild the dictionary this model was identified with.
    pub fn dictionary(&self) -> Result<Dictionary> {
        let d = if self.system.dictionary == "builtin" {
            let sys = systems::by_name(&self.system.name)?;
            // move the dictionary out by rebuilding the system
            return Ok(sys.into_dictionary());
        } else if let Some(deg) = self.system.dictionary.strip_prefix("monomials:") {
            let deg: u32 = deg
                .parse()
                .map_err(|_| Error::ModelFormat("bad monomial degree in model".into()))?;
            Dictionary::new(self.system.state_dim, dict::monomials(self.system.state_dim, deg))?
        } else {
            return Err(Error::ModelFormat(format!(
                "unknown dictionary spec '{}'",
                self.system.dictionary
            )));
        };
        if d.full_dim() != self.system.labels.len() {
            return Err(Error::ModelFormat(
                "model labels disagree with the reconstructed dictionary".into(),
            ));
        }
        Ok(d)
    }

    /// The built-in system behind this model, when there is one.
    pub fn builtin_system(&self) -> Result<Option<BenchmarkSystem>> {
        if self.system.name == "csv" {
            return Ok(None);
        }
        Ok(Some(systems::by_name(&self.system.name)?))
    }
}

fn matrix_from_row_major(
    what: &str,
    data: &[f64],
    rows: usize,
    cols: usize,
) -> Result<DMatrix<f64>> {
    if data.len() != rows * cols {
        return Err(Error::ModelFormat(format!(
            "{what}: expected {rows}×{cols} = {} entries, found {}",
            rows * cols,
            data.len()
        )));
    }
    Ok(DMatrix::from_row_slice(rows, cols, data))
}

pub fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// `SOURCE_DATE_EPOCH` when present, else 0 — never the wall clock, so model
/// files are reproducible by default.
pub fn created_timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0)
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_float_array(out: &mut String, key: &str, values: &[f64]) {
    let joined: Vec<String> = values.iter().map(|v| fmt_f64(*v)).collect();
    let _ = writeln!(out, "{key} = [{}]", joined.join(", "));
}

fn fmt_string_array(out: &mut String, key: &str, values: &[String]) {
    let quoted: Vec<String> = values.iter().map(|s| format!("{s:?}")).collect();
    let _ = writeln!(out, "{key} = [{}]", quoted.join(", "));
}

/// Render the model document. Key order is fixed; every float gets 17
/// significant digits; rejects non-finite values so no NaN/Inf can reach disk.
pub fn render_model(model: &ModelFile) -> Result<String> {
    let mut finite_ok = true;
    let mut check = |vals: &[f64]| {
        if !vals.iter().all(|v| v.is_finite()) {
            finite_ok = false;
        }
    };
    if let Some(id) = &model.identify {
        check(&id.a);
        check(&id.c);
        check(&[id.residual_fro, id.empirical_cr]);
    }
    if let Some(b) = &model.bound {
        check(&[b.c_r, b.delta, b.a_norm, b.cinv_norm, b.c_tilde, b.d0_raw]);
    }
    if let Some(s) = &model.synthesis {
        check(&s.p_phi);
        check(&s.p_e);
        check(&s.g);
        check(&s.l);
        check(&[
            s.alpha,
            s.c_r,
            s.lambda,
            s.slack,
            s.lmi_max_eig,
            s.schur_max_eig,
            s.closedloop_abscissa,
        ]);
    }
    if !finite_ok {
        return Err(Error::ModelFormat(
            "refusing to write non-finite values into a model file".into(),
        ));
    }

    let mut out = String::new();
    let _ = writeln!(out, "[meta]");
    let _ = writeln!(out, "artifact_version = {}", model.meta.artifact_version);
    let _ = writeln!(out, "created = {}", model.meta.created);
    let _ = writeln!(out, "seed = {}", model.meta.seed);
    let _ = writeln!(out, "samples = {}", model.meta.samples);

    let _ = writeln!(out, "\n[system]");
    let _ = writeln!(out, "name = {:?}", model.system.name);
    let _ = writeln!(out, "state_dim = {}", model.system.state_dim);
    let _ = writeln!(out, "lifted_dim = {}", model.system.lifted_dim);
    let _ = writeln!(out, "dictionary = {:?}", model.system.dictionary);
    fmt_string_array(&mut out, "labels", &model.system.labels);
    if let Some(data) = &model.system.data {
        let _ = writeln!(out, "data = {data:?}");
    }

    if let Some(id) = &model.identify {
        let _ = writeln!(out, "\n[identify]");
        fmt_float_array(&mut out, "a", &id.a);
        fmt_float_array(&mut out, "c", &id.c);
        let _ = writeln!(out, "output_dim = {}", id.output_dim);
        let _ = writeln!(out, "residual_fro = {}", fmt_f64(id.residual_fro));
        let _ = writeln!(out, "rank_x = {}", id.rank_x);
        let _ = writeln!(out, "rank_deficient = {}", id.rank_deficient);
        let _ = writeln!(out, "empirical_cr = {}", fmt_f64(id.empirical_cr));
        let _ = writeln!(out, "validation_samples = {}", id.validation_samples);
        let _ = writeln!(out, "validation_seed = {}", id.validation_seed);
    }

    if let Some(b) = &model.bound {
        let _ = writeln!(out, "\n[bound]");
        let _ = writeln!(out, "c_r = {}", fmt_f64(b.c_r));
        let _ = writeln!(out, "delta = {}", fmt_f64(b.delta));
        let _ = writeln!(out, "a_norm = {}", fmt_f64(b.a_norm));
        let _ = writeln!(out, "cinv_norm = {}", fmt_f64(b.cinv_norm));
        let _ = writeln!(out, "c_tilde = {}", fmt_f64(b.c_tilde));
        let _ = writeln!(out, "d0 = {}", b.d0);
        let _ = writeln!(out, "d0_raw = {}", fmt_f64(b.d0_raw));
        let _ = writeln!(out, "mc_points = {}", b.mc_points);
        let _ = writeln!(out, "satisfied = {}", b.satisfied);
    }

    if let Some(s) = &model.synthesis {
        let _ = writeln!(out, "\n[synthesis]");
        let _ = writeln!(out, "alpha = {}", fmt_f64(s.alpha));
        let _ = writeln!(out, "c_r = {}", fmt_f64(s.c_r));
        let _ = writeln!(out, "feasible = {}", s.feasible);
        let _ = writeln!(out, "lambda = {}", fmt_f64(s.lambda));
        let _ = writeln!(out, "slack = {}", fmt_f64(s.slack));
        let _ = writeln!(out, "lmi_max_eig = {}", fmt_f64(s.lmi_max_eig));
        let _ = writeln!(out, "schur_max_eig = {}", fmt_f64(s.schur_max_eig));
        let _ = writeln!(
            out,
            "closedloop_abscissa = {}",
            fmt_f64(s.closedloop_abscissa)
        );
        fmt_float_array(&mut out, "p_phi", &s.p_phi);
        fmt_float_array(&mut out, "p_e", &s.p_e);
        fmt_float_array(&mut out, "g", &s.g);
        fmt_float_array(&mut out, "l", &s.l);
    }

    Ok(out)
}

pub fn write_model(path: &Path, model: &ModelFile) -> Result<()> {
    let text = render_model(model)?;
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::Config(format!(
                "no model at {} — run `identify` (or `pipeline`) into this --out first",
                path.display()
            ))
        } else {
            Error::io(path.display().to_string(), e)
        }
    })?;
    let model: ModelFile = toml::from_str(&text)
        .map_err(|e| Error::ModelFormat(format!("{}: {e}", path.display())))?;
    if model.meta.artifact_version != ARTIFACT_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported artifact version {} (expected {ARTIFACT_VERSION})",
            model.meta.artifact_version
        )));
    }
    Ok(model)
}
