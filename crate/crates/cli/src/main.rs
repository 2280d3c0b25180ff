//! `sigcert`: certify Bell nonlocality and steering from data with bounded
//! signalling.
//!
//! Exit codes: 0 success, 2 malformed input, 3 solver failure, 4 a
//! nonclassicality certificate was found.

mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sigcert_core::correction::{corrected_chsh_bound, corrected_full_correlation_bound};
use sigcert_core::postselect::{alpha_postselected, scan_grid, simulate, write_scan_csv, BudgetMode, GridSpec, Strategy};
use sigcert_core::qlinalg::Assemblage;
use sigcert_core::scenario::{
    behavior_from_counts, check_no_signalling, estimate_budgets, Behavior, CountsTable, Scenario, SignallingBudget,
    NORMALIZATION_TOL,
};
use sigcert_core::signalling::{gamma_from_assemblage, guessing_probability};
use sigcert_core::slhs::{slhs_membership, slhs_robustness, slhs_white_noise_robustness, table1_pipeline};
use sigcert_core::slhv::{dual_visibility, sample_slhv, visibility};
use sigcert_core::witness::{adjusted_bound, certification_report, schmidt_bound, AdjustMode, SteeringWitness};
use sigcert_core::{Error, SolverSettings};

/// Environment variable naming a JSON file with default solver settings.
const SETTINGS_ENV: &str = "SIGCERT_SOLVER_SETTINGS";

/// Visibilities below `1 − this` count as certified nonlocality.
const CERTIFY_MARGIN: f64 = 1e-6;

const EXIT_MALFORMED: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_CERTIFIED: u8 = 4;

#[derive(Parser)]
#[command(name = "sigcert", version, about = "Signalling-aware Bell nonlocality and steering certification")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Solver feasibility and gap tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Solver iteration cap.
    #[arg(long, global = true)]
    max_iter: Option<u32>,
    /// JSON file with solver settings; flags override it.
    #[arg(long, global = true, env = SETTINGS_ENV)]
    settings: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// Print solver progress.
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// No-signalling check of a behavior.
    NsCheck {
        behavior: PathBuf,
        /// Deviation treated as compliant.
        #[arg(long, default_value_t = NORMALIZATION_TOL)]
        tol: f64,
    },
    /// Signalling budget estimated from a behavior.
    Budget {
        behavior: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        slack: f64,
    },
    /// SLHV visibility; exits 4 when the behavior has no SLHV model.
    Visibility {
        behavior: PathBuf,
        /// `data`, `zero`, or a budget file.
        #[arg(long, default_value = "data")]
        budget: String,
    },
    /// Signalling Bell inequality extracted from the dual LP.
    Inequality {
        behavior: PathBuf,
        #[arg(long, default_value = "data")]
        budget: String,
    },
    /// Corrected CHSH bound for a (2,2,2,2) budget.
    ChshBound {
        #[arg(long)]
        budget: PathBuf,
    },
    /// Corrected bound of a full-correlation Bell inequality.
    BellBound {
        /// JSON table `c[x][y]`.
        #[arg(long)]
        coeffs: PathBuf,
        /// Local bound of the uncorrected inequality.
        #[arg(long)]
        lhv: f64,
        #[arg(long)]
        budget: PathBuf,
    },
    /// Post-selected behavior and efficiencies from raw counts.
    IngestCounts { counts: PathBuf },
    /// Random behavior from the SLHV set of a budget.
    Sample {
        /// `mA,mB,nA,nB`
        #[arg(long, default_value = "2,2,2,2")]
        scenario: String,
        /// `zero` or a budget file.
        #[arg(long, default_value = "zero")]
        budget: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Guessing probability of Alice's setting from Bob's reduced states.
    Guess { assemblage: PathBuf },
    /// SLHS analysis; exits 4 when the assemblage lies outside SLHS_γ.
    Steer {
        assemblage: PathBuf,
        /// `auto` uses the guessing probability of the assemblage.
        #[arg(long, default_value = "auto")]
        gamma: String,
        #[arg(long, value_enum, default_value_t = Measure::Membership)]
        measure: Measure,
    },
    /// Guessing probability, robustness and white-noise robustness.
    Report { assemblage: PathBuf },
    /// Witness bound adjusted for signalling.
    WitnessAdjust {
        #[arg(long)]
        lhs_bound: f64,
        #[arg(long = "mA")]
        m_a: usize,
        #[arg(long)]
        gamma: f64,
        #[arg(long, value_enum, default_value_t = Mode::Tight)]
        mode: Mode,
    },
    /// Schmidt-number bound of the MUB witness.
    SchmidtBound {
        #[arg(short)]
        d: usize,
        #[arg(short)]
        n: usize,
    },
    /// Witness value and Schmidt-number certification; exits 4 when the
    /// adjusted bounds still certify entanglement.
    WitnessEval {
        assemblage: PathBuf,
        witness: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Tight)]
        mode: Mode,
    },
    /// Detector-efficiency post-selection.
    #[command(subcommand)]
    Postselect(PostselectCommand),
}

#[derive(Subcommand)]
enum PostselectCommand {
    /// Post-selected CHSH statistics at one efficiency pair.
    Sim {
        #[arg(long)]
        eta0: f64,
        #[arg(long)]
        eta1: f64,
        #[arg(long, value_enum, default_value_t = StrategyArg::Quantum)]
        strategy: StrategyArg,
    },
    /// Visibility over an efficiency grid.
    Scan {
        #[arg(long, default_value_t = GridSpec::default().n)]
        grid: usize,
        #[arg(long, default_value_t = GridSpec::default().min)]
        min: f64,
        #[arg(long, default_value_t = GridSpec::default().max)]
        max: f64,
        #[arg(long, value_enum, default_value_t = StrategyArg::Quantum)]
        strategy: StrategyArg,
        /// `data`, `zero`, or a budget file.
        #[arg(long, default_value = "data")]
        budget: String,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Worker threads for grid points (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Measure {
    Membership,
    Robustness,
    Whitenoise,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Tight,
    Paper,
}

impl From<Mode> for AdjustMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Tight => AdjustMode::Tight,
            Mode::Paper => AdjustMode::Paper,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Quantum,
    Local,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Quantum => Strategy::Quantum,
            StrategyArg::Local => Strategy::Local,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::SolverFailure { .. } | Error::Solver(_)) => EXIT_SOLVER,
            _ => EXIT_MALFORMED,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// What a command produced and whether it amounts to a certificate.
struct Outcome {
    text: String,
    certified: bool,
}

impl Outcome {
    fn json<T: serde::Serialize>(value: &T) -> CliResult<Self> {
        Ok(Outcome { text: output::to_json(value).map_err(Error::from)?, certified: false })
    }

    fn certified_if(mut self, certified: bool) -> Self {
        self.certified = certified;
        self
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn load_behavior(path: &Path) -> CliResult<Behavior> {
    Ok(Behavior::from_json(&read(path)?)?)
}

fn load_budget_file(path: &Path) -> CliResult<SignallingBudget> {
    Ok(SignallingBudget::from_json(&read(path)?)?)
}

fn load_assemblage(path: &Path) -> CliResult<Assemblage> {
    Ok(Assemblage::from_json(&read(path)?)?)
}

fn budget_for(spec: &str, behavior: &Behavior) -> CliResult<SignallingBudget> {
    match spec {
        "data" => Ok(estimate_budgets(behavior, 0.0)?),
        "zero" => Ok(SignallingBudget::zeros(behavior.scenario())),
        path => {
            let b = load_budget_file(Path::new(path))?;
            if b.scenario() != behavior.scenario() {
                return Err(CliError::Usage(format!("budget {path} does not match the behavior's scenario")));
            }
            Ok(b)
        }
    }
}

fn settings(global: &Global) -> CliResult<SolverSettings> {
    let mut s = match &global.settings {
        Some(p) => serde_json::from_str(&read(p)?).map_err(Error::from)?,
        None => SolverSettings::default(),
    };
    if let Some(t) = global.tol {
        if !(t > 0.0) {
            return Err(CliError::Usage(format!("--tol must be positive, got {t}")));
        }
        s.tol_feas = t;
        s.tol_gap = t;
    }
    if let Some(m) = global.max_iter {
        s.max_iter = m;
    }
    s.verbose |= global.verbose;
    Ok(s)
}

fn parse_scenario(spec: &str) -> CliResult<Scenario> {
    let parts = spec
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(format!("scenario {spec:?}: {e}")))?;
    match parts.as_slice() {
        &[m_a, m_b, n_a, n_b] => Ok(Scenario::new(m_a, m_b, n_a, n_b)?),
        _ => Err(CliError::Usage(format!("scenario must be mA,mB,nA,nB, got {spec:?}"))),
    }
}

fn run(cli: &Cli) -> CliResult<Outcome> {
    let st = settings(&cli.global)?;
    match &cli.command {
        Command::NsCheck { behavior, tol } => Outcome::json(&check_no_signalling(&load_behavior(behavior)?, *tol)),
        Command::Budget { behavior, slack } => Outcome::json(&estimate_budgets(&load_behavior(behavior)?, *slack)?),
        Command::Visibility { behavior, budget } => {
            let b = load_behavior(behavior)?;
            let r = visibility(&b, &budget_for(budget, &b)?, &st)?;
            let out = json!({"v": r.v, "status": r.status, "gap": r.gap, "max_residual": r.max_residual});
            Ok(Outcome::json(&out)?.certified_if(r.v < 1.0 - CERTIFY_MARGIN))
        }
        Command::Inequality { behavior, budget } => {
            let b = load_behavior(behavior)?;
            let r = dual_visibility(&b, &budget_for(budget, &b)?, &st)?;
            Outcome::json(&r.inequality)
        }
        Command::ChshBound { budget } => {
            let bound = corrected_chsh_bound(&load_budget_file(budget)?)?;
            Outcome::json(&json!({ "bound": bound }))
        }
        Command::BellBound { coeffs, lhv, budget } => {
            let c: Vec<Vec<f64>> = serde_json::from_str(&read(coeffs)?).map_err(Error::from)?;
            Outcome::json(&corrected_full_correlation_bound(&c, *lhv, &load_budget_file(budget)?)?)
        }
        Command::IngestCounts { counts } => {
            Outcome::json(&behavior_from_counts(&CountsTable::from_json(&read(counts)?)?)?)
        }
        Command::Sample { scenario, budget, seed } => {
            let s = parse_scenario(scenario)?;
            let b = match budget.as_str() {
                "zero" => SignallingBudget::zeros(s),
                path => load_budget_file(Path::new(path))?,
            };
            Outcome::json(&sample_slhv(s, &b, *seed, &st)?)
        }
        Command::Guess { assemblage } => {
            Outcome::json(&guessing_probability(&load_assemblage(assemblage)?.reduced_states(), &st)?)
        }
        Command::Steer { assemblage, gamma, measure } => {
            let a = load_assemblage(assemblage)?;
            let g = match gamma.as_str() {
                "auto" => gamma_from_assemblage(&a, &st)?,
                v => v.parse().map_err(|_| CliError::Usage(format!("--gamma must be auto or a number, got {v:?}")))?,
            };
            match measure {
                Measure::Membership => {
                    let cert = slhs_membership(&a, g, &st)?;
                    let outside = !cert.feasible;
                    Ok(Outcome::json(&cert)?.certified_if(outside))
                }
                Measure::Robustness => {
                    let r = slhs_robustness(&a, g, &st)?;
                    let outside = r.value > CERTIFY_MARGIN;
                    Ok(Outcome::json(&r)?.certified_if(outside))
                }
                Measure::Whitenoise => {
                    let r = slhs_white_noise_robustness(&a, g, &st)?;
                    Ok(Outcome::json(&json!({"value": r, "gamma": g}))?.certified_if(r > CERTIFY_MARGIN))
                }
            }
        }
        Command::Report { assemblage } => Outcome::json(&table1_pipeline(&load_assemblage(assemblage)?, &st)?),
        Command::WitnessAdjust { lhs_bound, m_a, gamma, mode } => {
            let bound = adjusted_bound(*lhs_bound, *m_a, *gamma, (*mode).into())?;
            Outcome::json(&json!({ "adjusted_bound": bound, "mode": AdjustMode::from(*mode) }))
        }
        Command::SchmidtBound { d, n } => Outcome::json(&json!({ "d": d, "n": n, "bound": schmidt_bound(*d, *n)? })),
        Command::WitnessEval { assemblage, witness, mode } => {
            let a = load_assemblage(assemblage)?;
            let w = SteeringWitness::from_json(&read(witness)?)?;
            let r = certification_report(&a, &w, (*mode).into(), &st)?;
            let certified = r.adjusted_certified_sn.is_some();
            Ok(Outcome::json(&r)?.certified_if(certified))
        }
        Command::Postselect(PostselectCommand::Sim { eta0, eta1, strategy }) => {
            let s = Strategy::from(*strategy);
            let ps = simulate(s, *eta0, *eta1)?;
            let chsh = sigcert_core::scenario::bell_value(&ps.behavior, &sigcert_core::scenario::chsh_coefficients())?;
            Outcome::json(&json!({
                "eta0": eta0,
                "eta1": eta1,
                "strategy": s,
                "chsh": chsh,
                "alpha": alpha_postselected(*eta0, *eta1, s),
                "normalization": ps.normalization,
                "behavior": ps.behavior,
                "budgets": ps.budgets,
            }))
        }
        Command::Postselect(PostselectCommand::Scan { grid, min, max, strategy, budget, format, jobs }) => {
            let spec = GridSpec { n: *grid, min: *min, max: *max };
            let mode = match budget.as_str() {
                "data" => BudgetMode::Data,
                "zero" => BudgetMode::Zero,
                path => BudgetMode::Custom(load_budget_file(Path::new(path))?),
            };
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(*jobs)
                .build()
                .map_err(|e| CliError::Usage(format!("--jobs {jobs}: {e}")))?;
            let rows = pool.install(|| scan_grid((*strategy).into(), &spec, &mode, &st))?;
            match format {
                Format::Json => Outcome::json(&rows),
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_scan_csv(&rows, &mut buf).map_err(|source| CliError::Io { path: "<csv>".into(), source })?;
                    Ok(Outcome { text: String::from_utf8_lossy(&buf).into_owned(), certified: false })
                }
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = run(&cli).and_then(|o| {
        output::emit(cli.global.output.as_deref(), o.text.as_bytes())
            .map_err(|source| CliError::Io { path: cli.global.output.clone().unwrap_or_else(|| "<stdout>".into()), source })?;
        Ok(o.certified)
    });
    match outcome {
        Ok(true) => ExitCode::from(EXIT_CERTIFIED),
        Ok(false) => ExitCode::SUCCESS,
        Err(e) => {
            log::debug!("{e:?}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
