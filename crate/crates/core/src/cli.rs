//! Command-line entry points.
//!
//! Exit codes: 0 success, 1 failed criterion, 2 aborted simulation, 3 bad
//! configuration or unreadable input.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{parse_config, RunConfig};
use crate::error::ConfigError;
use crate::experiments::{
    common_criteria, evaluate_all, run_many, run_scenario, scenario_runs, suite_verdicts, Scenario,
    Verdict, SCENARIO_NAMES,
};
use crate::integrator::Trajectory;
use crate::model::{KernelKind, ModelParams, Variant};
use crate::output::{
    check_manifest, create_results_dir, output_root, read_run, read_suite_summary, run_dirs, write_manifest, write_run,
    write_suite_summary, SuiteRun, SuiteSummary, RUNS_DIR,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CRITERION: i32 = 1;
pub const EXIT_ABORT: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

/// Worker threads for multi-run scenarios; defaults to the core count.
pub const THREADS_ENV: &str = "CSB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "csb", version, about = "Cucker-Smale flocking with bonding force")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation from a TOML configuration.
    Simulate {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a named study (fig1, fig2, fig3, fig5, smoke).
    Scenario {
        name: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        t_end: Option<f64>,
        /// Results root.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-evaluate the criteria of a saved results directory.
    Verify { dir: PathBuf },
}

#[derive(Debug, Args)]
struct Overrides {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long, value_enum)]
    kernel: Option<KernelArg>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// Results root.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KernelArg {
    Singular,
    Regular,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Original,
    Simplified,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), ConfigError> {
        if let Some(n) = self.n {
            cfg.set_n(n);
        }
        if let Some(seed) = self.seed {
            cfg.init.seed = seed;
        }
        if let Some(t) = self.t_end {
            cfg.t_end = t;
        }
        if let Some(k) = self.kernel {
            cfg.params.kernel.kind = match k {
                KernelArg::Singular => KernelKind::Singular,
                KernelArg::Regular => KernelKind::Regular,
            };
        }
        if let Some(a) = self.alpha {
            cfg.params.kernel.alpha = a;
        }
        if let Some(m) = self.model {
            cfg.params.variant = match m {
                ModelArg::Original => Variant::Original,
                ModelArg::Simplified => Variant::Simplified,
            };
        }
        if cfg.init.seed > i64::MAX as u64 {
            return Err(ConfigError::new("init.seed", format!("must be <= {}", i64::MAX)));
        }
        cfg.revalidate()
    }
}

/// Parses `argv` (including the program name), runs the command and
/// returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Simulate { config, overrides } => simulate(&config, &overrides),
        Command::Scenario {
            name,
            seed,
            t_end,
            out,
        } => scenario(&name, seed, t_end, out.as_deref()),
        Command::Verify { dir } => verify(&dir),
    }
}

fn threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn simulate(path: &Path, overrides: &Overrides) -> i32 {
    let mut cfg = match fs::read_to_string(path) {
        Ok(text) => match parse_config(&text) {
            Ok(cfg) => cfg,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return EXIT_CONFIG;
            }
        },
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_CONFIG;
        }
    };
    if let Err(e) = overrides.apply(&mut cfg) {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    let label = cfg.scenario.clone().unwrap_or_else(|| "run".into());
    let sc = Scenario {
        name: label.clone(),
        init: cfg.init,
        params: cfg.params,
        ctl: cfg.ctl,
        t_end: cfg.t_end,
        sample_every: cfg.sample_every,
        acceptance: common_criteria(),
    };
    let root = output_root(overrides.out.as_deref(), cfg.output_dir.as_deref());
    finish_suite("simulate", cfg.init.seed, &root, vec![(cfg, run_scenario(&sc))])
}

fn scenario(name: &str, seed: Option<u64>, t_end: Option<f64>, out: Option<&Path>) -> i32 {
    let seed = seed.unwrap_or(crate::experiments::DEFAULT_SEED);
    let Some(mut runs) = scenario_runs(name, seed) else {
        eprintln!("error: unknown scenario '{name}' (expected one of {})", SCENARIO_NAMES.join(", "));
        return EXIT_CONFIG;
    };
    if let Some(t) = t_end {
        if !(t >= 0.0 && t.is_finite()) {
            eprintln!("error: t_end: must be non-negative and finite, got {t}");
            return EXIT_CONFIG;
        }
        runs.iter_mut().for_each(|r| r.t_end = t);
    }
    let results = run_many(&runs, threads());
    let pairs = runs.iter().map(RunConfig::from_scenario).zip(results).collect();
    finish_suite(name, seed, &output_root(out, None), pairs)
}

type RunResult = Result<crate::experiments::RunRecord, crate::error::IntegrateError>;

fn finish_suite(name: &str, seed: u64, root: &Path, runs: Vec<(RunConfig, RunResult)>) -> i32 {
    let mut records = Vec::with_capacity(runs.len());
    for (cfg, result) in runs {
        match result {
            Ok(rec) => records.push((cfg, rec)),
            Err(e) => {
                let label = cfg.scenario.as_deref().unwrap_or("run");
                eprintln!("error: {label}: {e}");
                return if matches!(e, crate::error::IntegrateError::Collision { .. }) {
                    EXIT_ABORT
                } else {
                    EXIT_CONFIG
                };
            }
        }
    }
    let dir = match create_results_dir(root, name, seed) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let mut suite_runs = Vec::new();
    for (cfg, rec) in &records {
        let label = &rec.scenario.name;
        let run_dir = dir.join(RUNS_DIR).join(label);
        if let Err(e) = write_run(&run_dir, label, cfg, &rec.trajectory, &rec.scenario.acceptance, &rec.verdicts) {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
        report_run(label, &rec.verdicts, rec.aborted());
        suite_runs.push(SuiteRun {
            label: label.clone(),
            passed: rec.passed(),
            completed: !rec.aborted(),
        });
    }
    let views: Vec<(&ModelParams, &Trajectory)> = records.iter().map(|(_, r)| (&r.scenario.params, &r.trajectory)).collect();
    let suite = suite_verdicts(name, &views);
    report_suite(&suite);
    let summary = SuiteSummary {
        scenario: name.to_string(),
        seed,
        passed: suite_runs.iter().all(|r| r.passed) && suite.iter().all(|v| v.passed),
        runs: suite_runs,
        suite_verdicts: suite,
    };
    if let Err(e) = write_suite_summary(&dir, &summary).and_then(|_| write_manifest(&dir)) {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    println!("results: {}", dir.display());
    exit_code(&summary)
}

fn exit_code(summary: &SuiteSummary) -> i32 {
    if summary.runs.iter().any(|r| !r.completed) {
        EXIT_ABORT
    } else if !summary.passed {
        EXIT_CRITERION
    } else {
        EXIT_OK
    }
}

fn report_run(label: &str, verdicts: &[Verdict], aborted: bool) {
    let failed: Vec<&str> = verdicts.iter().filter(|v| !v.passed).map(|v| v.criterion.as_str()).collect();
    let status = if aborted {
        "ABORT"
    } else if failed.is_empty() {
        "PASS"
    } else {
        "FAIL"
    };
    if failed.is_empty() {
        println!("{status:5} {label}");
    } else {
        println!("{status:5} {label}  failed: {}", failed.join(", "));
    }
}

fn report_suite(verdicts: &[Verdict]) {
    for v in verdicts {
        let status = if v.passed { "PASS" } else { "FAIL" };
        println!("{status:5} suite {} (value {:e}, limit {:e})", v.criterion, v.value, v.limit);
    }
}

fn verify(dir: &Path) -> i32 {
    match check_manifest(dir) {
        Ok(problems) => {
            for p in problems {
                eprintln!("warning: manifest: {p}");
            }
        }
        Err(e) => eprintln!("warning: manifest unreadable: {e}"),
    }
    let stored = match read_suite_summary(dir) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let dirs = match run_dirs(dir) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let mut saved = Vec::with_capacity(dirs.len());
    for d in &dirs {
        match read_run(d) {
            Ok(run) => saved.push(run),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_CONFIG;
            }
        }
    }
    let mut runs = Vec::new();
    for run in &saved {
        let verdicts = evaluate_all(&run.criteria, &run.trajectory, &run.config.params);
        if verdicts != run.verdicts {
            eprintln!("warning: {}: recomputed verdicts differ from the stored ones", run.label);
        }
        let aborted = run.trajectory.aborted();
        report_run(&run.label, &verdicts, aborted);
        runs.push(SuiteRun {
            label: run.label.clone(),
            passed: verdicts.iter().all(|v| v.passed),
            completed: !aborted,
        });
    }
    let views: Vec<(&ModelParams, &Trajectory)> = saved.iter().map(|r| (&r.config.params, &r.trajectory)).collect();
    let suite = suite_verdicts(&stored.scenario, &views);
    report_suite(&suite);
    let summary = SuiteSummary {
        passed: runs.iter().all(|r| r.passed) && suite.iter().all(|v| v.passed),
        scenario: stored.scenario,
        seed: stored.seed,
        runs,
        suite_verdicts: suite,
    };
    exit_code(&summary)
}
