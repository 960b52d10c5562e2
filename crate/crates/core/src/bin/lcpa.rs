use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lcpa::error_model::{fit, read_fit_points};
use lcpa::harness::{self, GainMode, RunConfig, Scheme, SweepParam};
use lcpa::mirror_prox::StepRule;
use lcpa::{Error, Result, Scenario};

/// Learning-centric power allocation simulator. Reported errors are
/// learning-curve predictions, not trained-classifier accuracies.
#[derive(Parser)]
#[command(name = "lcpa", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit `error = a * v^-b` to a CSV with columns sample_size,error.
    Fit { points: PathBuf },
    /// Run one scheme over independent channel draws.
    Run(Common),
    /// Run several schemes on the same draws.
    Compare(Common),
    /// Repeat a comparison over values of T, N or K.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario TOML file; the built-in four-user scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    draws: usize,
    /// Scheme(s): mm, asymptotic, mirror_prox, water_filling, max_min.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    scheme: Vec<Scheme>,
    /// expected (N rho on the diagonal), realized (per-draw |h|^2) or full
    /// (interference-coupled, mm only).
    #[arg(long, default_value = "expected")]
    diag_mode: GainMode,
    /// Mirror-prox step size override.
    #[arg(long)]
    eta: Option<f64>,
    /// Mirror-prox step rule: fixed or adaptive.
    #[arg(long, default_value = "adaptive", value_parser = parse_step_rule)]
    step_rule: StepRule,
    /// Append a wall-time column (makes the output non-reproducible).
    #[arg(long)]
    timing: bool,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn parse_step_rule(s: &str) -> std::result::Result<StepRule, String> {
    match s {
        "fixed" => Ok(StepRule::Fixed),
        "adaptive" => Ok(StepRule::Adaptive),
        _ => Err(format!("unknown step rule `{s}` (expected fixed or adaptive)")),
    }
}

impl Common {
    fn scenario(&self) -> Result<Scenario> {
        match &self.scenario {
            Some(p) => Scenario::load(p),
            None => Ok(Scenario::four_user_default()),
        }
    }

    fn config(&self) -> RunConfig {
        let mut cfg = RunConfig {
            seed: self.seed,
            draws: self.draws,
            gain_mode: self.diag_mode,
            ..Default::default()
        };
        cfg.mirror_prox.eta = self.eta;
        cfg.mirror_prox.step_rule = self.step_rule;
        cfg
    }

    fn schemes(&self, default: &[Scheme]) -> Vec<Scheme> {
        if self.scheme.is_empty() {
            default.to_vec()
        } else {
            self.scheme.clone()
        }
    }

    fn output(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(io::stdout().lock()),
        })
    }
}

/// Schemes that run on any diagonal scenario.
const DIAGONAL: [Scheme; 4] = [
    Scheme::Mm,
    Scheme::MirrorProx,
    Scheme::WaterFilling,
    Scheme::MaxMin,
];

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit { points } => {
            let pts = read_fit_points(File::open(&points)?)?;
            let f = fit(&pts)?;
            let mut out = io::stdout().lock();
            writeln!(out, "a,b,mse")?;
            writeln!(
                out,
                "{:.11e},{:.11e},{:.11e}",
                f.params.scale, f.params.exponent, f.mse
            )?;
        }
        Command::Run(c) => {
            let schemes = c.schemes(&[Scheme::Mm]);
            if schemes.len() != 1 {
                return Err(Error::Usage("run takes exactly one --scheme; use compare".into()));
            }
            let rows = harness::run(&c.scenario()?, schemes[0], &c.config())?;
            harness::write_allocations(c.output()?, &rows, c.timing)?;
        }
        Command::Compare(c) => {
            let rows = harness::compare(&c.scenario()?, &c.schemes(&DIAGONAL), &c.config())?;
            harness::write_allocations(c.output()?, &rows, c.timing)?;
        }
        Command::Sweep {
            common,
            param,
            values,
        } => {
            let points = harness::sweep(
                &common.scenario()?,
                param,
                &values,
                &common.schemes(&DIAGONAL),
                &common.config(),
            )?;
            harness::write_sweep(common.output()?, param, &points)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Usage(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
