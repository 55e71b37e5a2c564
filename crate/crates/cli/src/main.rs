//! `sobolev-lab`: constants, invariant suites and scan curves from the command
//! line. Exit codes: 0 success, 1 verification or computation failure, 2 usage.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use sobolev_core::report::{self, RunConfig, Suite, Table, DEFAULT_EPS_GRID};
use sobolev_core::LabError;

#[derive(Parser, Debug)]
#[command(name = "sobolev-lab", version, about = "Numerical checks for sharp fractional Sobolev inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sharp constant, Bianchi–Egnell upper bound, T_*, c_T samples and the quartic constant.
    Constants(Common),
    /// Runs an invariant suite: sphere, conformal, stability, cylinder, duality or all.
    Verify {
        suite: String,
        #[command(flatten)]
        common: Common,
    },
    /// Period map of the cylinder ODE as `alpha,tau`.
    PeriodMap {
        /// Comma-separated amplitudes in (u0, 1); defaults to 50 evenly spaced points.
        #[arg(long, value_delimiter = ',')]
        alpha_grid: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Bianchi–Egnell quotient along a zonal harmonic family.
    BeScan {
        #[arg(long, value_enum, default_value_t = Family::Degree2)]
        family: Family,
        #[command(flatten)]
        common: Common,
    },
    /// Degenerate quotient at the critical period.
    Quartic(Common),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Family {
    Degree2,
    Degree3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args, Debug, Default)]
struct Common {
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    s: Option<f64>,
    /// Cylinder period.
    #[arg(long = "T")]
    period: Option<f64>,
    #[arg(long)]
    bandlimit: Option<usize>,
    #[arg(long)]
    quad_order: Option<usize>,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    eps_grid: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// key = value file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    d: Option<usize>,
    s: Option<f64>,
    #[serde(rename = "T", alias = "t")]
    period: Option<f64>,
    bandlimit: Option<usize>,
    quad_order: Option<usize>,
    modes: Option<usize>,
    eps_grid: Option<Vec<f64>>,
    seed: Option<u64>,
    format: Option<Format>,
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Verify(String),
    Compute(String),
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Domain(_) | LabError::Precondition(_) => Failure::Usage(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

/// Flags merged over the config file.
struct Settings {
    d: Option<usize>,
    s: Option<f64>,
    eps_grid: Option<Vec<f64>>,
    format: Option<Format>,
    out: Option<PathBuf>,
    run: RunConfig,
}

impl Common {
    fn resolve(self) -> Result<Settings, Failure> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
                toml::from_str::<ConfigFile>(&text)
                    .map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))?
            }
            None => ConfigFile::default(),
        };
        let defaults = RunConfig::default();
        let d = self.d.or(file.d);
        let s = self.s.or(file.s);
        let run = RunConfig {
            d: d.unwrap_or(defaults.d),
            s: s.unwrap_or(defaults.s),
            period: self.period.or(file.period),
            bandlimit: self.bandlimit.or(file.bandlimit).unwrap_or(defaults.bandlimit),
            quad_order: self.quad_order.or(file.quad_order).unwrap_or(defaults.quad_order),
            modes: self.modes.or(file.modes).unwrap_or(defaults.modes),
            seed: self.seed.or(file.seed).unwrap_or(defaults.seed),
        };
        Ok(Settings {
            d,
            s,
            eps_grid: self.eps_grid.or(file.eps_grid),
            format: self.format.or(file.format),
            out: self.out.or(file.out),
            run,
        })
    }
}

impl Settings {
    fn require_d(&self) -> Result<usize, Failure> {
        self.d.ok_or_else(|| Failure::Usage("missing required flag --d".into()))
    }

    fn require_s(&self) -> Result<f64, Failure> {
        self.s.ok_or_else(|| Failure::Usage("missing required flag --s".into()))
    }

    fn eps(&self) -> Vec<f64> {
        self.eps_grid.clone().unwrap_or_else(|| DEFAULT_EPS_GRID.to_vec())
    }

    fn emit(&self, text: &str) -> Result<(), Failure> {
        match &self.out {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| Failure::Compute(format!("cannot write {}: {e}", path.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn emit_table(&self, table: &Table) -> Result<(), Failure> {
        match self.format.unwrap_or(Format::Csv) {
            Format::Csv => self.emit(&table.to_csv()),
            Format::Json => self.emit(&table.to_json()),
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    report::init_thread_pool()?;
    match command {
        Command::Constants(common) => {
            let st = common.resolve()?;
            let rec = report::constants_record(st.require_d()?, st.require_s()?)?;
            match st.format.unwrap_or(Format::Json) {
                Format::Json => st.emit(&format!("{}\n", rec.to_json())),
                Format::Csv => Err(Failure::Usage("constants supports --format json only".into())),
            }
        }
        Command::Verify { suite, common } => {
            let suite: Suite = suite.parse()?;
            let st = common.resolve()?;
            let rep = report::run_verify(suite, &st.run)?;
            let text = match st.format {
                None => rep.to_text(),
                Some(Format::Json) => rep.to_json(),
                Some(Format::Csv) => rep.to_csv(),
            };
            st.emit(&text)?;
            match rep.first_failure() {
                None => Ok(()),
                Some(c) => Err(Failure::Verify(format!("first failing invariant: {}/{}", c.suite, c.name))),
            }
        }
        Command::PeriodMap { alpha_grid, common } => {
            let st = common.resolve()?;
            let d = st.require_d()?;
            let grid = match alpha_grid {
                Some(g) => g,
                None => report::default_alpha_grid(d, 50)?,
            };
            st.emit_table(&report::period_map(d, &grid)?)
        }
        Command::BeScan { family, common } => {
            let st = common.resolve()?;
            st.require_d()?;
            st.require_s()?;
            let degree = match family {
                Family::Degree2 => 2,
                Family::Degree3 => 3,
            };
            st.emit_table(&report::be_scan(&st.run, degree, &st.eps())?)
        }
        Command::Quartic(common) => {
            let st = common.resolve()?;
            st.emit_table(&report::quartic_scan(st.require_d()?, &st.eps())?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\n{}", Cli::command().render_usage());
            ExitCode::from(2)
        }
        Err(Failure::Verify(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
