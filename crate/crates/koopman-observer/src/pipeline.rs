//! Stage runners behind the CLI subcommands: identify → bound → synthesize →
//! simulate, each reading and extending the model file in the output
//! directory, plus the pipeline composition that chains all four.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::bounds::{self, BoundReport};
use crate::config::RunConfig;
use crate::dict::{self, Dictionary, OutputMap};
use crate::edmd;
use crate::error::{Error, Result};
use crate::lmi::{self, CertificateReport, LmiProblem, PreflightReport, SynthesisResult};
use crate::model::{
    self, BoundSection, IdentifySection, Meta, ModelFile, SynthesisSection, SystemInfo,
    ARTIFACT_VERSION,
};
use crate::plot::{self, Series};
use crate::samples::SampleSet;
use crate::sim;
use crate::systems::{self, BenchmarkSystem};

pub fn model_path(out_dir: &Path) -> PathBuf {
    out_dir.join("model.toml")
}

pub fn samples_path(out_dir: &Path) -> PathBuf {
    out_dir.join("samples.csv")
}

fn ensure_out_dir(out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))
}

fn parse_dictionary_spec(spec: &str, n: usize) -> Result<Dictionary> {
    if let Some(deg) = spec.strip_prefix("monomials:") {
        let deg: u32 = deg
            .parse()
            .map_err(|_| Error::Config(format!("bad dictionary spec '{spec}'")))?;
        if deg == 0 {
            return Err(Error::Config(
                "monomial dictionary needs degree ≥ 1".into(),
            ));
        }
        return Dictionary::new(n, dict::monomials(n, deg));
    }
    Err(Error::Config(format!(
        "unknown dictionary spec '{spec}' (expected \"monomials:<deg>\")"
    )))
}

/// Output map for external-data runs: configured rows, or the first-coordinate
/// reader when nothing is configured.
fn output_for_csv(cfg: &RunConfig, reduced_dim: usize) -> Result<OutputMap> {
    match &cfg.output {
        Some(rows) => {
            let m = rows.len();
            if m == 0 || rows.iter().any(|r| r.len() != reduced_dim) {
                return Err(Error::Config(format!(
                    "output rows must each have {reduced_dim} entries"
                )));
            }
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            OutputMap::new(DMatrix::from_row_slice(m, reduced_dim, &flat))
        }
        None => {
            let mut c = DMatrix::zeros(1, reduced_dim);
            c[(0, 0)] = 1.0;
            OutputMap::new(c)
        }
    }
}

#[derive(Debug)]
pub struct IdentifyOutcome {
    pub model: ModelFile,
    pub model_path: PathBuf,
    /// Where the training samples live (generated or ingested).
    pub samples_path: PathBuf,
}

/// Stage 1: get data (generate from a built-in system, or ingest a CSV), fit
/// the lifted generator by least squares, estimate the empirical remainder
/// bound on an independent draw, and write the model file.
pub fn run_identify(cfg: &RunConfig, out_dir: &Path) -> Result<IdentifyOutcome> {
    cfg.validate()?;
    ensure_out_dir(out_dir)?;

    let (samples, dictionary, dict_spec, c_matrix, system_name, data_path, validation) =
        if let Some(data) = &cfg.data {
            let samples = SampleSet::read_csv(data)?;
            let spec = cfg
                .dictionary
                .clone()
                .expect("validate() requires a dictionary with external data");
            let dictionary = parse_dictionary_spec(&spec, samples.n())?;
            let output = output_for_csv(cfg, dictionary.reduced_dim())?;
            let c_matrix = output.matrix().clone();
            // no second data source exists, so the remainder is validated on
            // the training set itself
            let validation = samples.clone();
            (
                samples,
                dictionary,
                spec,
                c_matrix,
                "csv".to_string(),
                Some(data.clone()),
                validation,
            )
        } else {
            let sys = systems::by_name(&cfg.system)?;
            let samples = systems::sample_uniform(&sys, cfg.samples as usize, cfg.seed)?;
            let validation =
                systems::sample_uniform(&sys, cfg.samples as usize, cfg.validation_seed())?;
            let c_matrix = sys.output().matrix().clone();
            let name = sys.name().to_string();
            (
                samples,
                sys.into_dictionary(),
                "builtin".to_string(),
                c_matrix,
                name,
                None,
                validation,
            )
        };

    let spath = samples_path(out_dir);
    samples.write_csv(&spath)?;

    let (x, y) = edmd::build_data_matrices(&dictionary, &samples)?;
    let fit = edmd::fit_generator(&x, &y, cfg.rank_tol)?;
    let empirical_cr = edmd::empirical_remainder_bound(&dictionary, &fit.a, &validation)?;

    let model = ModelFile {
        meta: Meta {
            artifact_version: ARTIFACT_VERSION,
            created: model::created_timestamp(),
            seed: cfg.seed,
            samples: samples.len() as u64,
        },
        system: SystemInfo {
            name: system_name,
            state_dim: dictionary.n(),
            lifted_dim: dictionary.reduced_dim(),
            dictionary: dict_spec,
            labels: dictionary.labels().iter().map(|s| s.to_string()).collect(),
            data: data_path,
        },
        identify: Some(IdentifySection {
            a: model::row_major(&fit.a),
            c: model::row_major(&c_matrix),
            output_dim: c_matrix.nrows(),
            residual_fro: fit.residual_fro,
            rank_x: fit.rank_x,
            rank_deficient: fit.is_rank_deficient(),
            empirical_cr,
            validation_samples: validation.len() as u64,
            validation_seed: cfg.validation_seed(),
        }),
        bound: None,
        synthesis: None,
    };
    let mpath = model_path(out_dir);
    model::write_model(&mpath, &model)?;
    Ok(IdentifyOutcome {
        model,
        model_path: mpath,
        samples_path: spath,
    })
}

/// The training samples a model was identified from: re-read the ingested CSV,
/// or regenerate the seeded draw (bit-identical by construction).
fn reload_samples(model: &ModelFile) -> Result<SampleSet> {
    if let Some(data) = &model.system.data {
        return SampleSet::read_csv(data);
    }
    let sys = systems::by_name(&model.system.name)?;
    systems::sample_uniform(&sys, model.meta.samples as usize, model.meta.seed)
}

/// Stage 2: estimate the moment/variance structure on the training data and
/// evaluate the minimum sample count d₀ for confidence 1 − δ; append the
/// report to the model file.
pub fn run_bound(cfg: &RunConfig, out_dir: &Path) -> Result<(ModelFile, BoundReport)> {
    let mpath = model_path(out_dir);
    let mut model = model::read_model(&mpath)?;
    let id = model.identify_section()?;
    let c_r = cfg.bound_cr.resolve(id.empirical_cr);
    let dictionary = model.dictionary()?;
    let samples = reload_samples(&model)?;
    let report = bounds::build_bound_report(&dictionary, &samples, c_r, cfg.delta)?;
    model.bound = Some(BoundSection {
        c_r,
        delta: cfg.delta,
        a_norm: report.a_norm,
        cinv_norm: report.cinv_norm,
        c_tilde: report.c_tilde,
        d0: report.d0,
        d0_raw: report.d0_raw,
        mc_points: report.mc_points as u64,
        satisfied: model.meta.samples >= report.d0,
    });
    model::write_model(&mpath, &model)?;
    Ok((model, report))
}

#[derive(Debug)]
pub struct SynthesizeOutcome {
    pub model: ModelFile,
    pub preflight: PreflightReport,
    pub result: SynthesisResult,
    pub certificate: CertificateReport,
    pub c_r: f64,
}

/// Stage 3: preflight the open-loop rate, solve the max-slack feasibility
/// problem, certify the gain, and persist everything. Infeasibility (including
/// a failed preflight) is an error so the process exits nonzero.
pub fn run_synthesize(cfg: &RunConfig, out_dir: &Path) -> Result<SynthesizeOutcome> {
    let mpath = model_path(out_dir);
    let mut model = model::read_model(&mpath)?;
    let a = model.a_matrix()?;
    let c = model.c_matrix()?;
    let c_r = cfg.synth_cr.resolve(model.identify_section()?.empirical_cr);

    let preflight = lmi::preflight_check(&a, cfg.alpha);
    if !preflight.pass {
        return Err(Error::Infeasible(format!(
            "preflight: open-loop lifted abscissa {:.6} cannot support rate alpha = {} \
             (infeasibility margin {:.6})",
            preflight.abscissa, cfg.alpha, preflight.margin
        )));
    }

    let prob = LmiProblem::new(a.clone(), c.clone(), cfg.alpha, c_r)?;
    let result = lmi::solve_feasibility(&prob)?;
    if !result.feasible {
        return Err(Error::Infeasible(format!(
            "max-slack optimum {:.3e} is below the feasibility tolerance {:.1e} \
             (alpha = {}, c_r = {:.3e})",
            result.slack, prob.feas_tol, cfg.alpha, c_r
        )));
    }
    let certificate = lmi::certify(
        &a,
        &c,
        &result.l,
        cfg.alpha,
        &result.p_phi,
        &result.p_e,
        result.lambda,
        c_r,
    )?;
    if !certificate.passed() {
        return Err(Error::SolverBreakdown(format!(
            "solution failed certification: {}",
            certificate.failures.join(", ")
        )));
    }

    model.synthesis = Some(SynthesisSection {
        alpha: cfg.alpha,
        c_r,
        feasible: true,
        lambda: result.lambda,
        slack: result.slack,
        lmi_max_eig: result.lmi_max_eig,
        schur_max_eig: certificate.schur_max_eig,
        closedloop_abscissa: result.closedloop_abscissa,
        p_phi: model::row_major(&result.p_phi),
        p_e: model::row_major(&result.p_e),
        g: model::row_major(&result.g),
        l: model::row_major(&result.l),
    });
    model::write_model(&mpath, &model)?;
    Ok(SynthesizeOutcome {
        model,
        preflight,
        result,
        certificate,
        c_r,
    })
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub run: usize,
    pub x0: Vec<f64>,
    pub xhat0: Vec<f64>,
    /// Fitted decay rate; None when the error is numerically zero throughout.
    pub alpha_hat: Option<f64>,
    pub m_hat: Option<f64>,
    pub final_e_state: f64,
    pub max_e_state: f64,
    pub csv_path: PathBuf,
}

#[derive(Debug)]
pub struct SimulateOutcome {
    pub summaries: Vec<RunSummary>,
    pub summary_csv: PathBuf,
    pub trajectories_svg: PathBuf,
    pub error_svg: PathBuf,
    pub horizon: f64,
}

fn write_run_csv(path: &Path, rec: &sim::SimulationRecord) -> Result<()> {
    let n = rec.x_true.nrows();
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Csv {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
    let mut header = vec!["time".to_string()];
    for i in 1..=n {
        header.push(format!("x{i}"));
    }
    for i in 1..=n {
        header.push(format!("xhat{i}"));
    }
    header.push("e_lifted".into());
    header.push("e_state".into());
    w.write_record(&header).map_err(|e| Error::Csv {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    for k in 0..rec.times.len() {
        let mut row = vec![rec.times[k].to_string()];
        for i in 0..n {
            row.push(rec.x_true[(i, k)].to_string());
        }
        for i in 0..n {
            row.push(rec.x_hat[(i, k)].to_string());
        }
        row.push(rec.e_lifted_norm[k].to_string());
        row.push(rec.e_state_norm[k].to_string());
        w.write_record(&row).map_err(|e| Error::Csv {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
    }
    w.flush()
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

/// Stage 4: run the certified observer from seeded random initial states,
/// write one CSV per run, the two figures, and a fitted-rate summary.
pub fn run_simulate(cfg: &RunConfig, out_dir: &Path) -> Result<SimulateOutcome> {
    let mpath = model_path(out_dir);
    let model = model::read_model(&mpath)?;
    model.synthesis_section()?; // fail early when no gain exists
    let sys: BenchmarkSystem = model.builtin_system()?.ok_or_else(|| {
        Error::Config("simulation needs a built-in system (external-data models have no dynamics)".into())
    })?;
    let a = model.a_matrix()?;
    let c = model.c_matrix()?;
    let l = model.l_matrix()?;
    let horizon = cfg.horizon_for(sys.name());
    if horizon < cfg.step {
        return Err(Error::Config("horizon must cover at least one step".into()));
    }

    let k = cfg.initial_states as usize;
    let starts = systems::sample_initial_states(&sys, 2 * k, cfg.sim_seed);
    let (x0s, xhat0s) = starts.split_at(k);

    let mut summaries = Vec::with_capacity(k);
    let mut err_series = Vec::with_capacity(k);
    let mut traj_series = Vec::new();
    for run in 0..k {
        let rec = sim::run_observer(
            &a,
            &c,
            &l,
            sys.dict(),
            &sys,
            &x0s[run],
            &xhat0s[run],
            horizon,
            cfg.step,
        )?;
        if rec.truncated {
            return Err(Error::Diverged {
                t: rec.times.last().copied().unwrap_or(0.0),
                limit: 1e12,
            });
        }
        let csv_path = out_dir.join(format!("run_{run}.csv"));
        write_run_csv(&csv_path, &rec)?;

        let fit = match sim::fit_decay_rate(&rec.times, &rec.e_lifted_norm, cfg.burn_in) {
            Ok((alpha_hat, m_hat)) => Some((alpha_hat, m_hat)),
            Err(Error::InsufficientData(_)) => None,
            Err(e) => return Err(e),
        };
        let max_e_state = rec.e_state_norm.iter().fold(0.0f64, |m, v| m.max(*v));
        let final_e_state = *rec.e_state_norm.last().unwrap();
        summaries.push(RunSummary {
            run,
            x0: x0s[run].clone(),
            xhat0: xhat0s[run].clone(),
            alpha_hat: fit.map(|f| f.0),
            m_hat: fit.map(|f| f.1),
            final_e_state,
            max_e_state,
            csv_path,
        });

        err_series.push(Series::solid(
            format!("run {run}"),
            rec.times.clone(),
            rec.e_lifted_norm.clone(),
        ));
        for i in 0..sys.n() {
            traj_series.push(Series::solid(
                format!("x{} (run {run})", i + 1),
                rec.times.clone(),
                rec.x_true.row(i).iter().copied().collect(),
            ));
            traj_series.push(Series::dashed(
                format!("x{}^ (run {run})", i + 1),
                rec.times.clone(),
                rec.x_hat.row(i).iter().copied().collect(),
            ));
        }
    }

    let trajectories_svg = out_dir.join("trajectories.svg");
    plot::write_svg(
        &trajectories_svg,
        &plot::line_plot(
            &format!("{}: true states (solid) and estimates (dashed)", sys.name()),
            "t",
            "state",
            &traj_series,
            false,
        )?,
    )?;
    let error_svg = out_dir.join("error_decay.svg");
    plot::write_svg(
        &error_svg,
        &plot::line_plot(
            &format!("{}: lifted error norm", sys.name()),
            "t",
            "log10 ‖e‖",
            &err_series,
            true,
        )?,
    )?;

    let summary_csv = out_dir.join("summary.csv");
    {
        let mut w = csv::Writer::from_path(&summary_csv).map_err(|e| Error::Csv {
            path: summary_csv.display().to_string(),
            msg: e.to_string(),
        })?;
        w.write_record(["run", "alpha_hat", "m_hat", "final_e_state", "max_e_state"])
            .map_err(|e| Error::Csv {
                path: summary_csv.display().to_string(),
                msg: e.to_string(),
            })?;
        for s in &summaries {
            w.write_record([
                s.run.to_string(),
                s.alpha_hat.map(|v| v.to_string()).unwrap_or_default(),
                s.m_hat.map(|v| v.to_string()).unwrap_or_default(),
                s.final_e_state.to_string(),
                s.max_e_state.to_string(),
            ])
            .map_err(|e| Error::Csv {
                path: summary_csv.display().to_string(),
                msg: e.to_string(),
            })?;
        }
        w.flush()
            .map_err(|e| Error::io(summary_csv.display().to_string(), e))?;
    }

    Ok(SimulateOutcome {
        summaries,
        summary_csv,
        trajectories_svg,
        error_svg,
        horizon,
    })
}

#[derive(Debug)]
pub struct PipelineOutcome {
    pub identify: IdentifyOutcome,
    pub bound: BoundReport,
    pub synthesize: SynthesizeOutcome,
    pub simulate: SimulateOutcome,
}

/// All four stages in order, stopping at the first failure.
pub fn run_pipeline(cfg: &RunConfig, out_dir: &Path) -> Result<PipelineOutcome> {
    let identify = run_identify(cfg, out_dir)?;
    let (_, bound) = run_bound(cfg, out_dir)?;
    let synthesize = run_synthesize(cfg, out_dir)?;
    let simulate = run_simulate(cfg, out_dir)?;
    Ok(PipelineOutcome {
        identify,
        bound,
        synthesize,
        simulate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn temp_out(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("koopman-pipeline-{tag}"));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn identify_writes_a_reproducible_model() {
        let out = temp_out("identify");
        let cfg = RunConfig::default();
        let o1 = run_identify(&cfg, &out).unwrap();
        let bytes1 = std::fs::read(&o1.model_path).unwrap();
        let o2 = run_identify(&cfg, &out).unwrap();
        let bytes2 = std::fs::read(&o2.model_path).unwrap();
        assert_eq!(bytes1, bytes2, "identical config must rewrite identical bytes");

        let a = o2.model.a_matrix().unwrap();
        let want = nalgebra::dmatrix![-2.0, 0.0, 0.0; 0.0, -4.0, 3.0; 0.0, 0.0, -1.0];
        assert_relative_eq!(a, want, epsilon = 5e-3);
        assert!(o2.model.identify.as_ref().unwrap().empirical_cr < 1e-6);
    }

    #[test]
    fn bound_then_synthesize_then_simulate() {
        let out = temp_out("full");
        let cfg = RunConfig {
            samples: 2000,
            ..RunConfig::default()
        };
        run_identify(&cfg, &out).unwrap();
        let (model, report) = run_bound(&cfg, &out).unwrap();
        assert!(report.d0 >= 1);
        assert_eq!(model.bound.as_ref().unwrap().d0, report.d0);

        let syn = run_synthesize(&cfg, &out).unwrap();
        assert!(syn.result.feasible);
        assert!(syn.certificate.passed());
        assert!(syn.result.closedloop_abscissa < -cfg.alpha);

        let cfg_sim = RunConfig {
            horizon: Some(1.0),
            initial_states: 2,
            ..cfg
        };
        let sim_out = run_simulate(&cfg_sim, &out).unwrap();
        assert_eq!(sim_out.summaries.len(), 2);
        assert!(sim_out.summary_csv.exists());
        assert!(sim_out.trajectories_svg.exists());
        assert!(sim_out.error_svg.exists());
        for s in &sim_out.summaries {
            assert!(s.csv_path.exists());
            let alpha_hat = s.alpha_hat.expect("random starts give a fittable error");
            assert!(alpha_hat > 0.0, "error should decay, fitted {alpha_hat}");
        }
    }

    #[test]
    fn preflight_failure_is_infeasible_error() {
        let out = temp_out("preflight");
        let cfg = RunConfig::default();
        run_identify(&cfg, &out).unwrap();
        let bad = RunConfig {
            alpha: 1.1,
            ..RunConfig::default()
        };
        match run_synthesize(&bad, &out) {
            Err(Error::Infeasible(msg)) => assert!(msg.contains("preflight"), "{msg}"),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn csv_ingestion_round_trips_through_identify() {
        let out = temp_out("csv");
        // export a seeded draw, then identify from the file as external data
        let sys = systems::by_name("example-a").unwrap();
        let samples = systems::sample_uniform(&sys, 500, 3).unwrap();
        let data = out.join("external.csv");
        samples.write_csv(&data).unwrap();

        let cfg = RunConfig {
            data: Some(data.display().to_string()),
            dictionary: Some("monomials:2".into()),
            ..RunConfig::default()
        };
        let o = run_identify(&cfg, &out).unwrap();
        assert_eq!(o.model.system.name, "csv");
        assert_eq!(o.model.system.state_dim, 2);
        // 1, x1, x2, x1², x1x2, x2² → reduced dimension 5
        assert_eq!(o.model.system.lifted_dim, 5);
        let (model2, report) = run_bound(&cfg, &out).unwrap();
        assert!(report.d0 >= 1);
        assert!(model2.bound.is_some());
    }
}
