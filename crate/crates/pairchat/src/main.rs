use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pairchat::commands::{self, DefenseQuery, Simulation};
use pairchat::config::{parse_axis, parse_seed_list};
use pairchat::output::{encode, json_string, sibling, write_file, Table};
use pairchat::{CliError, Format, ModeName, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "pairchat",
    version,
    about = "Infection dynamics in randomized pairwise agent chats"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form, mean-field and RK4 carrier curves side by side.
    Theory(ScenarioArgs),
    /// Run the configured model once per seed.
    Simulate(ScenarioArgs),
    /// Simulate and report the max-norm deviation from theory.
    Compare(ScenarioArgs),
    /// Regime, equilibrium and containment threshold for (beta, gamma).
    Defense(DefenseArgs),
    /// Seed-averaged curves over the cross product of parameter axes.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario TOML file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seeds, e.g. `1,2,3` or `1-8`.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    rounds: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<ModeName>,
    #[arg(long)]
    album_capacity: Option<usize>,
    #[arg(long)]
    benign_pool: Option<usize>,
    #[arg(long)]
    history_len: Option<usize>,
    #[arg(long)]
    retrieval_rate: Option<f64>,
    #[arg(long)]
    symptom_q: Option<f64>,
    #[arg(long)]
    symptom_a: Option<f64>,
    #[arg(long)]
    initial_targets: Option<usize>,
    /// RK4 step for the theory curve.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct DefenseArgs {
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    gamma: f64,
    /// Report rounds to reach the target from this carrier ratio.
    #[arg(long)]
    c0: Option<f64>,
    /// Population size seeded with one carrier; repeat to compare sizes.
    #[arg(long)]
    n: Vec<usize>,
    /// Carrier ratio to reach (default: half the equilibrium).
    #[arg(long)]
    target: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// `key=v1,v2,...`; repeat for a cross product.
    #[arg(long = "axis", required = true)]
    axes: Vec<String>,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<ScenarioConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::load(path)?,
            None => ScenarioConfig::default(),
        };
        if let Some(s) = &self.seed {
            cfg.seeds = parse_seed_list(s)?;
        }
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$flag { cfg.$($field).+ = v; })*
            };
        }
        set! {
            rounds => rounds,
            n => dynamics.n_agents,
            alpha => dynamics.alpha,
            beta => dynamics.beta,
            gamma => dynamics.gamma,
            c0 => dynamics.c0,
            mode => mode,
            album_capacity => mechanistic.album_capacity,
            benign_pool => mechanistic.benign_pool,
            history_len => mechanistic.history_len,
            retrieval_rate => mechanistic.retrieval_rate,
            symptom_q => mechanistic.symptom_q,
            symptom_a => mechanistic.symptom_a,
            dt => theory.dt,
            format => output.format,
        }
        if let Some(k) = self.initial_targets {
            cfg.mechanistic.initial_targets = Some(k);
        }
        if let Some(p) = &self.out {
            cfg.output.path = Some(p.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn echo_config(cfg: &ScenarioConfig, out: &Path) -> Result<(), CliError> {
    write_file(
        &sibling(out, "config.toml"),
        cfg.to_toml_string().as_bytes(),
    )
}

fn emit_table(cfg: &ScenarioConfig, table: &Table) -> Result<(), CliError> {
    let text = encode(table, cfg.output.format);
    match &cfg.output.path {
        Some(path) => {
            write_file(path, text.as_bytes())?;
            echo_config(cfg, path)
        }
        None => Ok(std::io::stdout().write_all(text.as_bytes())?),
    }
}

fn emit_simulation(cfg: &ScenarioConfig, sim: &Simulation) -> Result<(), CliError> {
    match (cfg.output.format, &cfg.output.path) {
        (Format::Json, path) => {
            let text = json_string(&commands::simulation_json(cfg, sim));
            match path {
                Some(p) => {
                    write_file(p, text.as_bytes())?;
                    echo_config(cfg, p)
                }
                None => Ok(std::io::stdout().write_all(text.as_bytes())?),
            }
        }
        (Format::Csv, Some(p)) => {
            write_file(p, sim.rows.to_csv_string().as_bytes())?;
            write_file(
                &sibling(p, "summary.csv"),
                sim.summary.to_csv_string().as_bytes(),
            )?;
            echo_config(cfg, p)
        }
        (Format::Csv, None) => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(sim.rows.to_csv_string().as_bytes())?;
            stdout.write_all(b"\n")?;
            stdout.write_all(sim.summary.to_csv_string().as_bytes())?;
            Ok(())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Theory(args) => {
            let cfg = args.resolve()?;
            emit_table(&cfg, &commands::theory(&cfg)?)
        }
        Command::Simulate(args) => {
            let cfg = args.resolve()?;
            emit_simulation(&cfg, &commands::simulate(&cfg)?)
        }
        Command::Compare(args) => {
            let cfg = args.resolve()?;
            let sim = commands::simulate(&cfg)?;
            emit_simulation(&cfg, &sim)?;
            match sim.deviation {
                Some(d) => eprintln!("deviation {}", pairchat::output::fmt_sig(d)),
                None => eprintln!("deviation undefined"),
            }
            Ok(())
        }
        Command::Defense(args) => {
            let report = commands::defense(&DefenseQuery {
                beta: args.beta,
                gamma: args.gamma,
                c0: args.c0,
                populations: args.n,
                target: args.target,
            })?;
            print!("{report}");
            Ok(())
        }
        Command::Sweep(args) => {
            let cfg = args.scenario.resolve()?;
            let axes = args
                .axes
                .iter()
                .map(|a| parse_axis(a))
                .collect::<Result<Vec<_>, _>>()?;
            emit_table(&cfg, &commands::sweep(&cfg, &axes)?)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pairchat: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
