//! Command-line front end: identify → bound → synthesize → simulate, plus the
//! pipeline composition, all exit-code mapped for scripting.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use koopman_observer::config::{self, CrSpec, RunConfig};
use koopman_observer::error::Result;
use koopman_observer::pipeline::{
    self, IdentifyOutcome, SimulateOutcome, SynthesizeOutcome,
};
use koopman_observer::bounds::BoundReport;
use koopman_observer::model::ModelFile;

/// Data-driven observer design via Koopman lifting: fit a lifted linear model
/// from samples, bound the sample requirement, synthesize a certified observer
/// gain, and simulate the estimator.
#[derive(Parser)]
#[command(name = "koopman-observer", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the lifted generator matrix from sampled data
    Identify(StageArgs),
    /// Evaluate the minimum sample count for the requested confidence
    Bound(StageArgs),
    /// Solve the observer-gain feasibility problem and certify the result
    Synthesize(StageArgs),
    /// Integrate the certified observer from seeded initial states
    Simulate(StageArgs),
    /// Run identify, bound, synthesize and simulate in sequence
    Pipeline(StageArgs),
}

#[derive(Args)]
struct StageArgs {
    /// TOML config with [system]/[identify]/[bound]/[synthesize]/[simulate]
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in system name: example-a or cstr
    #[arg(long)]
    system: Option<String>,
    /// Sample CSV (x1..xn,xdot1..xdotn) to identify from instead
    #[arg(long)]
    data: Option<String>,
    /// Dictionary for external data, e.g. "monomials:2"
    #[arg(long)]
    dictionary: Option<String>,
    /// Number of training samples to draw
    #[arg(long)]
    samples: Option<u64>,
    /// RNG seed for the training draw
    #[arg(long)]
    seed: Option<u64>,
    /// Failure probability for the sample bound, in (0, 1)
    #[arg(long)]
    delta: Option<f64>,
    /// Remainder bound: a number, "empirical", or "empirical*<factor>"
    #[arg(long)]
    cr: Option<String>,
    /// Target exponential decay rate for the observer error
    #[arg(long)]
    alpha: Option<f64>,
    /// Simulation horizon in model time units
    #[arg(long)]
    horizon: Option<f64>,
    /// Fixed RK4 step size
    #[arg(long)]
    step: Option<f64>,
    /// Directory for the model file, samples, run CSVs and figures
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl StageArgs {
    /// Config file first, then flag overrides on top.
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => config::load_config(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.system {
            cfg.system = v.clone();
        }
        if let Some(v) = &self.data {
            cfg.data = Some(v.clone());
        }
        if let Some(v) = &self.dictionary {
            cfg.dictionary = Some(v.clone());
        }
        if let Some(v) = self.samples {
            cfg.samples = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.delta {
            cfg.delta = v;
        }
        if let Some(v) = &self.cr {
            // one flag drives both stages that consume a remainder bound
            let spec = CrSpec::parse(v)?;
            cfg.bound_cr = spec;
            cfg.synth_cr = spec;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.horizon {
            cfg.horizon = Some(v);
        }
        if let Some(v) = self.step {
            cfg.step = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_identify(o: &IdentifyOutcome) -> Result<()> {
    let id = o.model.identify_section()?;
    println!(
        "identify: {} — {} samples (seed {}), lifted dimension {}",
        o.model.system.name, o.model.meta.samples, o.model.meta.seed, o.model.system.lifted_dim
    );
    println!(
        "  residual |Y - AX|_F = {:.3e}, rank(X) = {}, empirical c_r = {:.3e}",
        id.residual_fro, id.rank_x, id.empirical_cr
    );
    println!("  model: {}", o.model_path.display());
    println!("  samples: {}", o.samples_path.display());
    Ok(())
}

fn print_bound(model: &ModelFile, report: &BoundReport) {
    println!(
        "bound: c_r = {:.3e}, delta = {}, c_tilde = {:.3e}",
        report.c_r, report.delta, report.c_tilde
    );
    let satisfied = model.meta.samples >= report.d0;
    println!(
        "  minimum samples d0 = {} (raw {:.17e}) — training set has {} ({})",
        report.d0,
        report.d0_raw,
        model.meta.samples,
        if satisfied { "satisfied" } else { "NOT satisfied" }
    );
}

fn print_synthesize(o: &SynthesizeOutcome) {
    println!(
        "synthesize: alpha = {}, c_r = {:.3e}",
        o.model.synthesis.as_ref().map(|s| s.alpha).unwrap_or_default(),
        o.c_r
    );
    println!(
        "  preflight: open-loop abscissa {:.4} (margin {:.4})",
        o.preflight.abscissa, o.preflight.margin
    );
    println!(
        "  feasible: slack t* = {:.3e}, lambda = {:.3e}, |L| = {:.3e}",
        o.result.slack,
        o.result.lambda,
        o.result.l.norm()
    );
    println!(
        "  certified: closed-loop abscissa {:.4}, LMI max eig {:.3e}, Schur max eig {:.3e}",
        o.certificate.closedloop_abscissa, o.certificate.lmi_max_eig, o.certificate.schur_max_eig
    );
}

fn print_simulate(o: &SimulateOutcome) {
    println!(
        "simulate: {} runs over horizon {} ({} artifacts in place)",
        o.summaries.len(),
        o.horizon,
        o.summaries.len() + 3
    );
    for s in &o.summaries {
        match s.alpha_hat {
            Some(rate) => println!(
                "  run {}: alpha_hat = {:.4}, final state error = {:.3e}",
                s.run, rate, s.final_e_state
            ),
            None => println!(
                "  run {}: error at numerical zero throughout, final state error = {:.3e}",
                s.run, s.final_e_state
            ),
        }
    }
    println!("  summary: {}", o.summary_csv.display());
    println!(
        "  figures: {}, {}",
        o.trajectories_svg.display(),
        o.error_svg.display()
    );
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Identify(args) => {
            let cfg = args.resolve()?;
            print_identify(&pipeline::run_identify(&cfg, &args.out)?)
        }
        Command::Bound(args) => {
            let cfg = args.resolve()?;
            let (model, report) = pipeline::run_bound(&cfg, &args.out)?;
            print_bound(&model, &report);
            Ok(())
        }
        Command::Synthesize(args) => {
            let cfg = args.resolve()?;
            print_synthesize(&pipeline::run_synthesize(&cfg, &args.out)?);
            Ok(())
        }
        Command::Simulate(args) => {
            let cfg = args.resolve()?;
            print_simulate(&pipeline::run_simulate(&cfg, &args.out)?);
            Ok(())
        }
        Command::Pipeline(args) => {
            let cfg = args.resolve()?;
            let outcome = pipeline::run_pipeline(&cfg, &args.out)?;
            print_identify(&outcome.identify)?;
            print_bound(&outcome.synthesize.model, &outcome.bound);
            print_synthesize(&outcome.synthesize);
            print_simulate(&outcome.simulate);
            println!("pipeline complete");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own exit convention (2 for usage) collides with
            // "2 = infeasible", so usage problems go out as data errors
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
