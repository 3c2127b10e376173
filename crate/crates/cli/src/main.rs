mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use equicontrol::equilibrium::solve;
use equicontrol::verify::run_suite;
use equicontrol::{EquilibriumSolution, SolverKind};

use config::{Manifest, ProblemConfig, RunInfo, SweepParam};

#[derive(Parser, Debug)]
#[command(
    name = "equicontrol",
    version,
    about = "Equilibrium controls for linear SDEs with moment objectives"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for the equilibrium and write the strategy table.
    Solve(Common),
    /// Solve, then run the verification suite. Exits 1 if any check fails.
    Verify(Common),
    /// Re-solve over a list of parameter values.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        values: Vec<f64>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Problem config, or a manifest from an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of grid steps.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    solver: Option<SolverKind>,
}

enum Failure {
    Config(anyhow::Error),
    Solver(anyhow::Error),
}

trait Classify<T> {
    fn config_err(self) -> std::result::Result<T, Failure>;
    fn solver_err(self) -> std::result::Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for std::result::Result<T, E> {
    fn config_err(self) -> std::result::Result<T, Failure> {
        self.map_err(|e| Failure::Config(e.into()))
    }
    fn solver_err(self) -> std::result::Result<T, Failure> {
        self.map_err(|e| Failure::Solver(e.into()))
    }
}

struct Loaded {
    config: ProblemConfig,
    source_sha256: String,
    out: PathBuf,
}

fn load(common: &Common) -> std::result::Result<Loaded, Failure> {
    let (mut config, source_sha256) = config::load(&common.config).config_err()?;
    if let Some(seed) = common.seed {
        config.verification.monte_carlo.seed = seed;
    }
    if let Some(grid) = common.grid {
        config.grid = grid;
    }
    if let Some(solver) = common.solver {
        config.solver = solver;
    }
    if let Some(out) = &common.out {
        config.output.dir = out.clone();
    }
    let out = config.output.dir.clone();
    Ok(Loaded { config, source_sha256, out })
}

fn solve_config(config: &ProblemConfig) -> std::result::Result<EquilibriumSolution, Failure> {
    let coeffs = config.coefficients().config_err()?;
    let spec = config.objective.to_spec().config_err()?;
    solve(&coeffs, &spec, config.solver, &config.solver_options)
        .context("solver failed")
        .solver_err()
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<String> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path.display().to_string())
}

fn write_manifest(
    loaded: &Loaded,
    command: &str,
    solver_used: SolverKind,
    artifacts: Vec<String>,
) -> Result<String> {
    let manifest = Manifest {
        run: RunInfo {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            source_sha256: loaded.source_sha256.clone(),
            config_sha256: loaded.config.digest()?,
            solver_used,
            artifacts,
        },
        config: loaded.config.clone(),
    };
    let text = toml::to_string(&manifest).context("serializing manifest")?;
    write(&loaded.out, "manifest.toml", &text)
}

fn cmd_solve(common: &Common) -> std::result::Result<bool, Failure> {
    let loaded = load(common)?;
    let sol = solve_config(&loaded.config)?;
    let x0 = loaded.config.x0;
    let csv = sol.to_csv(x0).solver_err()?;
    let json = serde_json::to_string_pretty(&sol.to_json(x0).solver_err()?).solver_err()?;
    let artifacts = vec![
        write(&loaded.out, "solution.csv", &csv).config_err()?,
        write(&loaded.out, "solution.json", &json).config_err()?,
    ];
    let manifest =
        write_manifest(&loaded, "solve", sol.solver(), artifacts.clone()).config_err()?;
    println!("solver: {}", sol.solver());
    println!("y_0 = {:.12e}, beta_0 = {:.12e}", sol.y()[0], sol.beta()[0]);
    for path in artifacts.iter().chain([&manifest]) {
        println!("wrote {path}");
    }
    Ok(true)
}

fn cmd_verify(common: &Common) -> std::result::Result<bool, Failure> {
    let loaded = load(common)?;
    let sol = solve_config(&loaded.config)?;
    let report = run_suite(&sol, &loaded.config.verification)
        .context("verification failed to run")
        .solver_err()?;
    let json = serde_json::to_string_pretty(&report).solver_err()?;
    let path = write(&loaded.out, "report.json", &json).config_err()?;
    write_manifest(&loaded, "verify", sol.solver(), vec![path.clone()]).config_err()?;
    println!("solver: {}", sol.solver());
    for check in &report.checks {
        println!("{:<18} {}", check.name, if check.pass { "PASS" } else { "FAIL" });
    }
    println!("report: {path}");
    println!("overall: {}", if report.pass { "PASS" } else { "FAIL" });
    Ok(report.pass)
}

fn cmd_sweep(
    common: &Common,
    param: SweepParam,
    values: &[f64],
) -> std::result::Result<bool, Failure> {
    let loaded = load(common)?;
    let mut csv = String::from("value,beta_0,control_0,value_0,y_0\n");
    let mut solver_used = loaded.config.solver;
    for &v in values {
        let cfg = loaded.config.with_param(param, v).config_err()?;
        let sol = solve_config(&cfg).map_err(|f| match f {
            Failure::Config(e) => Failure::Config(e.context(format!("{} = {v}", param.name()))),
            Failure::Solver(e) => Failure::Solver(e.context(format!("{} = {v}", param.name()))),
        })?;
        solver_used = sol.solver();
        let x0 = cfg.x0;
        let row = [
            v,
            sol.beta()[0],
            sol.control(0.0, x0).solver_err()?,
            sol.value(0.0, x0).solver_err()?,
            sol.y()[0],
        ];
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    let path = write(&loaded.out, &format!("sweep_{}.csv", param.name()), &csv).config_err()?;
    write_manifest(&loaded, "sweep", solver_used, vec![path]).config_err()?;
    print!("{csv}");
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(common) => cmd_solve(common),
        Command::Verify(common) => cmd_verify(common),
        Command::Sweep { common, param, values } => cmd_sweep(common, *param, values),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("solver error: {e:#}");
            ExitCode::from(3)
        }
    }
}
