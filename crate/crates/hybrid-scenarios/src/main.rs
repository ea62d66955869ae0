use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hybrid_scenarios::study::named_study;
use hybrid_scenarios::{scenarios, ScenarioConfig, ScenarioError};

#[derive(Parser)]
#[command(name = "hybrid-scenarios", version, about = "Run hybrid lattice Boltzmann / finite element scenarios")]
struct Cli {
    /// Suppress progress logging and the summary.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run(Target),
    /// Run a refinement study of a scenario and fit the order.
    Study {
        #[command(flatten)]
        target: Target,
        /// Study name; defaults to the first study of the scenario.
        #[arg(long)]
        name: Option<String>,
    },
    /// List the built-in scenarios.
    List,
    /// Check a configuration without running it.
    Validate(Target),
}

#[derive(Args)]
struct Target {
    /// Built-in scenario name (ignored when --config names one).
    scenario: Option<String>,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dotted `key=value` override; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Target {
    fn load(&self) -> Result<ScenarioConfig, ScenarioError> {
        match (&self.config, &self.scenario) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
                ScenarioConfig::parse(&text, &self.overrides)
            }
            (None, Some(name)) => ScenarioConfig::builtin(name, &self.overrides),
            (None, None) => Err(ScenarioError::Parse("give a scenario name or --config".into())),
        }
    }
}

fn execute(cli: &Cli) -> Result<(), ScenarioError> {
    match &cli.command {
        Command::List => {
            for name in scenarios::names() {
                let c = scenarios::builtin_config(name).expect("registered");
                let studies: Vec<&str> = c.study.iter().map(|s| s.name.as_str()).collect();
                if studies.is_empty() {
                    println!("{name:24} {}", c.scenario.description);
                } else {
                    println!("{name:24} {} [studies: {}]", c.scenario.description, studies.join(", "));
                }
            }
        }
        Command::Validate(t) => {
            let cfg = t.load()?;
            cfg.check()?;
            if !cli.quiet {
                println!("{}: ok", cfg.scenario.name);
            }
        }
        Command::Run(t) => {
            let cfg = t.load()?;
            let report = hybrid_scenarios::run(&cfg, t.out.as_deref())?;
            if !cli.quiet {
                print!("{}", report.summary());
            }
        }
        Command::Study { target, name } => {
            let cfg = target.load()?;
            cfg.check()?;
            let name = match name {
                Some(n) => n.clone(),
                None => cfg
                    .study
                    .first()
                    .map(|s| s.name.clone())
                    .ok_or_else(|| ScenarioError::Invalid(vec![format!("scenario '{}' defines no study", cfg.scenario.name)]))?,
            };
            let study = named_study(&cfg, &name)?;
            if let Some(dir) = &target.out {
                std::fs::create_dir_all(dir).map_err(|e| ScenarioError::io(dir, e))?;
                study.write(dir, cfg.output.plots)?;
            }
            if !cli.quiet {
                print!("{}", study.csv());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
