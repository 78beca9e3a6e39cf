//! Results directories: CSV series, JSON summaries and a hash manifest.
//!
//! ```text
//! <root>/<scenario>-seed<S>-<unix time>/
//!     summary.json            suite verdicts
//!     manifest.json           sha256 of every other file
//!     runs/<label>/
//!         config.toml         resolved configuration
//!         trajectory.csv      t, x_1_1..x_N_d, v_1_1..v_N_d
//!         diagnostics.csv     t, e_kin, e_pot, e_tot, dissipation, r_min, r_max, agg_r, v_max, max_radius
//!         steps.csv           t, dt, r_min per accepted step
//!         summary.json        certificates, events, criteria, verdicts
//! ```
//!
//! Floats are written in shortest round-trip form, so re-reading a file
//! gives back the exact values.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{parse_config, print_config, RunConfig};
use crate::diagnostics::{
    certificates, containment_check, min_distance_over, min_step_distance, Certificates, ContainmentReport,
    DistanceReport, EnergyReport, MinDistance,
};
use crate::error::OutputError;
use crate::experiments::{Criterion, Verdict};
use crate::integrator::{Event, Sample, StepRecord, Trajectory};
use crate::model::SimState;

pub const CONFIG_FILE: &str = "config.toml";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const STEPS_FILE: &str = "steps.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const RUNS_DIR: &str = "runs";
/// Overrides the default results root (`results`).
pub const OUTPUT_ROOT_ENV: &str = "CSB_OUTPUT_ROOT";

pub const DIAGNOSTICS_HEADER: [&str; 10] = [
    "t",
    "e_kin",
    "e_pot",
    "e_tot",
    "dissipation",
    "r_min",
    "r_max",
    "agg_r",
    "v_max",
    "max_radius",
];
pub const STEPS_HEADER: [&str; 3] = ["t", "dt", "r_min"];

/// Containment slack reported in every summary, as a fraction of `2R`.
pub const CONTAINMENT_SLACK_FRAC: f64 = 0.05;

pub fn trajectory_header(n: usize, dim: usize) -> Vec<String> {
    let mut header = vec!["t".to_string()];
    for prefix in ["x", "v"] {
        for i in 1..=n {
            for k in 1..=dim {
                header.push(format!("{prefix}_{i}_{k}"));
            }
        }
    }
    header
}

fn csv_err(path: &Path, e: csv::Error) -> OutputError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => OutputError::io(path, io),
            _ => unreachable!(),
        }
    } else {
        OutputError::format(path, e.to_string())
    }
}

fn write_rows<I>(path: &Path, header: &[String], rows: I) -> Result<(), OutputError>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| OutputError::io(path, e))
}

/// Reads a numeric CSV, checking the header and row width.
fn read_rows(path: &Path, header: &[String]) -> Result<Vec<Vec<f64>>, OutputError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let found: Vec<String> = r.headers().map_err(|e| csv_err(path, e))?.iter().map(String::from).collect();
    if found != header {
        return Err(OutputError::format(path, "unexpected header"));
    }
    let mut rows = Vec::new();
    for (k, rec) in r.deserialize::<Vec<f64>>().enumerate() {
        let row = rec.map_err(|e| csv_err(path, e))?;
        if row.len() != header.len() {
            return Err(OutputError::format(path, format!("row {} has {} fields", k + 1, row.len())));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn strings(header: &[&str]) -> Vec<String> {
    header.iter().map(|s| s.to_string()).collect()
}

pub fn write_trajectory_csv(path: &Path, samples: &[Sample]) -> Result<(), OutputError> {
    let first = &samples[0].state;
    let rows = samples.iter().map(|s| {
        let mut row = Vec::with_capacity(1 + 2 * s.state.x.len());
        row.push(s.t);
        row.extend(&s.state.x);
        row.extend(&s.state.v);
        row
    });
    write_rows(path, &trajectory_header(first.n, first.dim), rows)
}

pub fn read_trajectory_csv(path: &Path, n: usize, dim: usize) -> Result<Vec<SimState>, OutputError> {
    let len = n * dim;
    read_rows(path, &trajectory_header(n, dim))?
        .into_iter()
        .map(|row| {
            SimState::new(row[0], n, dim, row[1..1 + len].to_vec(), row[1 + len..].to_vec())
                .map_err(|e| OutputError::format(path, e.to_string()))
        })
        .collect()
}

pub fn write_diagnostics_csv(path: &Path, samples: &[Sample]) -> Result<(), OutputError> {
    let rows = samples.iter().map(|s| {
        let (e, d) = (&s.energy, &s.distance);
        vec![
            s.t,
            e.e_kin,
            e.e_pot,
            e.e_tot,
            e.dissipation,
            d.r_min,
            d.r_max,
            d.agg_r,
            d.v_max,
            d.max_radius,
        ]
    });
    write_rows(path, &strings(&DIAGNOSTICS_HEADER), rows)
}

/// `(t, energy, distance)` per row; `ratio` is recomputed from the columns.
pub fn read_diagnostics_csv(path: &Path) -> Result<Vec<(f64, EnergyReport, DistanceReport)>, OutputError> {
    Ok(read_rows(path, &strings(&DIAGNOSTICS_HEADER))?
        .into_iter()
        .map(|r| {
            let energy = EnergyReport {
                e_kin: r[1],
                e_pot: r[2],
                e_tot: r[3],
                dissipation: r[4],
            };
            let distance = DistanceReport {
                r_min: r[5],
                r_max: r[6],
                ratio: r[6] / r[5],
                agg_r: r[7],
                v_max: r[8],
                max_radius: r[9],
            };
            (r[0], energy, distance)
        })
        .collect())
}

pub fn write_steps_csv(path: &Path, steps: &[StepRecord]) -> Result<(), OutputError> {
    write_rows(path, &strings(&STEPS_HEADER), steps.iter().map(|s| vec![s.t, s.dt, s.r_min]))
}

pub fn read_steps_csv(path: &Path) -> Result<Vec<StepRecord>, OutputError> {
    Ok(read_rows(path, &strings(&STEPS_HEADER))?
        .into_iter()
        .map(|r| StepRecord {
            t: r[0],
            dt: r[1],
            r_min: r[2],
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct ContainmentSummary {
    pub slack: f64,
    #[serde(flatten)]
    pub report: ContainmentReport,
}

/// Contents of a run's `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub label: String,
    pub scenario: Option<String>,
    pub seed: u64,
    pub variant: String,
    pub kernel: String,
    pub alpha: f64,
    pub n: usize,
    pub dim: usize,
    pub big_r: f64,
    pub t_end: f64,
    pub t_reached: f64,
    pub completed: bool,
    pub abort: Option<String>,
    #[serde(flatten)]
    pub certificates: Certificates,
    pub final_energy: EnergyReport,
    pub min_distance: MinDistance,
    pub min_step_distance: MinDistance,
    pub containment: ContainmentSummary,
    pub events: Vec<Event>,
    pub criteria: Vec<Criterion>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
}

impl RunSummary {
    pub fn new(label: &str, config: &RunConfig, traj: &Trajectory, criteria: &[Criterion], verdicts: &[Verdict]) -> Self {
        let p = &config.params;
        let last = traj.last();
        let slack = CONTAINMENT_SLACK_FRAC * 2.0 * p.big_r;
        let abort = traj.events.iter().find_map(|e| match e {
            Event::Abort { reason, .. } => Some(reason.clone()),
            _ => None,
        });
        Self {
            label: label.to_string(),
            scenario: config.scenario.clone(),
            seed: config.init.seed,
            variant: p.variant.name().into(),
            kernel: p.kernel.kind.name().into(),
            alpha: p.kernel.alpha,
            n: p.n,
            dim: p.dim,
            big_r: p.big_r,
            t_end: config.t_end,
            t_reached: last.t,
            completed: abort.is_none(),
            abort,
            certificates: certificates(&traj.samples, p).expect("non-empty trajectory"),
            final_energy: last.energy,
            min_distance: min_distance_over(traj).expect("non-empty trajectory"),
            min_step_distance: min_step_distance(traj).expect("non-empty trajectory"),
            containment: ContainmentSummary {
                slack,
                report: containment_check(&last.state, p, slack),
            },
            events: traj.events.clone(),
            criteria: criteria.to_vec(),
            verdicts: verdicts.to_vec(),
            passed: verdicts.iter().all(|v| v.passed),
        }
    }
}

/// The parts of `summary.json` needed to re-evaluate a run.
#[derive(Debug, Clone, Deserialize)]
struct StoredSummary {
    label: String,
    events: Vec<Event>,
    criteria: Vec<Criterion>,
    verdicts: Vec<Verdict>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), OutputError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| OutputError::format(path, e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| OutputError::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, OutputError> {
    let text = fs::read_to_string(path).map_err(|e| OutputError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| OutputError::format(path, e.to_string()))
}

/// Writes one run into `dir`, creating it if needed.
pub fn write_run(
    dir: &Path,
    label: &str,
    config: &RunConfig,
    traj: &Trajectory,
    criteria: &[Criterion],
    verdicts: &[Verdict],
) -> Result<RunSummary, OutputError> {
    fs::create_dir_all(dir).map_err(|e| OutputError::io(dir, e))?;
    let cfg_path = dir.join(CONFIG_FILE);
    fs::write(&cfg_path, print_config(config)).map_err(|e| OutputError::io(&cfg_path, e))?;
    write_trajectory_csv(&dir.join(TRAJECTORY_FILE), &traj.samples)?;
    write_diagnostics_csv(&dir.join(DIAGNOSTICS_FILE), &traj.samples)?;
    write_steps_csv(&dir.join(STEPS_FILE), &traj.steps)?;
    let summary = RunSummary::new(label, config, traj, criteria, verdicts);
    write_json(&dir.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

/// A run read back from disk. Sample diagnostics come from
/// `diagnostics.csv` as written, not recomputed from the states.
#[derive(Debug, Clone)]
pub struct SavedRun {
    pub dir: PathBuf,
    pub label: String,
    pub config: RunConfig,
    pub trajectory: Trajectory,
    pub criteria: Vec<Criterion>,
    pub verdicts: Vec<Verdict>,
}

pub fn read_run(dir: &Path) -> Result<SavedRun, OutputError> {
    let cfg_path = dir.join(CONFIG_FILE);
    let text = fs::read_to_string(&cfg_path).map_err(|e| OutputError::io(&cfg_path, e))?;
    let config = parse_config(&text).map_err(|e| OutputError::format(&cfg_path, e.to_string()))?;
    let states = read_trajectory_csv(&dir.join(TRAJECTORY_FILE), config.init.n, config.init.dim)?;
    let diag_path = dir.join(DIAGNOSTICS_FILE);
    let diags = read_diagnostics_csv(&diag_path)?;
    if diags.len() != states.len() || diags.is_empty() {
        return Err(OutputError::format(
            &diag_path,
            format!("{} rows but trajectory has {}", diags.len(), states.len()),
        ));
    }
    let mut samples = Vec::with_capacity(states.len());
    for (state, (t, energy, distance)) in states.into_iter().zip(diags) {
        if t != state.t {
            return Err(OutputError::format(&diag_path, format!("time {t} does not match trajectory")));
        }
        samples.push(Sample {
            t,
            state,
            energy,
            distance,
        });
    }
    let steps = read_steps_csv(&dir.join(STEPS_FILE))?;
    let stored: StoredSummary = read_json(&dir.join(SUMMARY_FILE))?;
    Ok(SavedRun {
        dir: dir.to_path_buf(),
        label: stored.label,
        config,
        trajectory: Trajectory {
            samples,
            steps,
            events: stored.events,
            abort: None,
        },
        criteria: stored.criteria,
        verdicts: stored.verdicts,
    })
}

/// Run directories under a results directory, in name order.
pub fn run_dirs(root: &Path) -> Result<Vec<PathBuf>, OutputError> {
    let runs = root.join(RUNS_DIR);
    let mut dirs: Vec<PathBuf> = fs::read_dir(&runs)
        .map_err(|e| OutputError::io(&runs, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    Ok(dirs)
}

/// Top-level `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub scenario: String,
    pub seed: u64,
    pub runs: Vec<SuiteRun>,
    /// Verdicts spanning several runs.
    pub suite_verdicts: Vec<Verdict>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRun {
    pub label: String,
    pub passed: bool,
    pub completed: bool,
}

pub fn write_suite_summary(root: &Path, summary: &SuiteSummary) -> Result<(), OutputError> {
    write_json(&root.join(SUMMARY_FILE), summary)
}

pub fn read_suite_summary(root: &Path) -> Result<SuiteSummary, OutputError> {
    read_json(&root.join(SUMMARY_FILE))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// Relative path (with `/` separators) to sha256 hex digest.
    pub files: BTreeMap<String, String>,
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), OutputError> {
    for entry in fs::read_dir(dir).map_err(|e| OutputError::io(dir, e))? {
        let path = entry.map_err(|e| OutputError::io(dir, e))?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else if path != root.join(MANIFEST_FILE) {
            out.push(path);
        }
    }
    Ok(())
}

fn relative_key(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Hashes every file below `root` other than the manifest itself.
pub fn compute_manifest(root: &Path) -> Result<Manifest, OutputError> {
    let mut paths = Vec::new();
    collect_files(root, root, &mut paths)?;
    let mut files = BTreeMap::new();
    for path in paths {
        let bytes = fs::read(&path).map_err(|e| OutputError::io(&path, e))?;
        files.insert(relative_key(root, &path), sha256_hex(&bytes));
    }
    Ok(Manifest { files })
}

pub fn write_manifest(root: &Path) -> Result<Manifest, OutputError> {
    let manifest = compute_manifest(root)?;
    write_json(&root.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Differences between the stored manifest and the files on disk, one
/// message per file.
pub fn check_manifest(root: &Path) -> Result<Vec<String>, OutputError> {
    let stored: Manifest = read_json(&root.join(MANIFEST_FILE))?;
    let current = compute_manifest(root)?;
    let mut problems = Vec::new();
    for (name, hash) in &stored.files {
        match current.files.get(name) {
            None => problems.push(format!("{name}: missing")),
            Some(h) if h != hash => problems.push(format!("{name}: hash mismatch")),
            _ => {}
        }
    }
    for name in current.files.keys().filter(|k| !stored.files.contains_key(*k)) {
        problems.push(format!("{name}: not in manifest"));
    }
    Ok(problems)
}

/// Root for new results directories: `explicit`, else the configured
/// directory, else `$CSB_OUTPUT_ROOT`, else `results`.
pub fn output_root(explicit: Option<&Path>, configured: Option<&Path>) -> PathBuf {
    explicit
        .or(configured)
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"))
}

/// Creates `<root>/<scenario>-seed<seed>-<unix seconds>`, adding a numeric
/// suffix if that name is taken.
pub fn create_results_dir(root: &Path, scenario: &str, seed: u64) -> Result<PathBuf, OutputError> {
    fs::create_dir_all(root).map_err(|e| OutputError::io(root, e))?;
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let base = format!("{scenario}-seed{seed}-{stamp}");
    for k in 0.. {
        let name = if k == 0 { base.clone() } else { format!("{base}-{k}") };
        let dir = root.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(OutputError::io(&dir, e)),
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{evaluate_all, fig3_scenario};
    use crate::integrator::integrate;
    use crate::model::KernelKind;

    fn small_run() -> (RunConfig, Trajectory, Vec<Criterion>, Vec<Verdict>) {
        let mut sc = fig3_scenario(KernelKind::Singular, 5);
        sc.init.n = 4;
        sc.params.n = 4;
        sc.t_end = 0.5;
        sc.sample_every = 0.1;
        let config = RunConfig::from_scenario(&sc);
        let state = crate::init::galilean_normalize(&crate::init::sample_initial(&sc.init).unwrap());
        let traj = integrate(&state, &sc.params, &sc.ctl, sc.t_end, sc.sample_every).unwrap();
        let verdicts = evaluate_all(&sc.acceptance, &traj, &sc.params);
        (config, traj, sc.acceptance, verdicts)
    }

    #[test]
    fn header_layout() {
        assert_eq!(trajectory_header(2, 2), ["t", "x_1_1", "x_1_2", "x_2_1", "x_2_2", "v_1_1", "v_1_2", "v_2_1", "v_2_2"]);
    }

    #[test]
    fn run_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let (config, traj, criteria, verdicts) = small_run();
        write_run(dir.path(), "probe", &config, &traj, &criteria, &verdicts).unwrap();
        let saved = read_run(dir.path()).unwrap();
        assert_eq!(saved.label, "probe");
        assert_eq!(saved.config, config);
        assert_eq!(saved.trajectory.steps, traj.steps);
        assert_eq!(saved.trajectory.events, traj.events);
        assert_eq!(saved.criteria, criteria);
        assert_eq!(saved.verdicts, verdicts);
        for (a, b) in saved.trajectory.samples.iter().zip(&traj.samples) {
            assert_eq!(a.state, b.state);
            assert_eq!(a.energy, b.energy);
            assert_eq!(a.distance.r_min, b.distance.r_min);
        }
        let again = evaluate_all(&saved.criteria, &saved.trajectory, &saved.config.params);
        assert_eq!(again, verdicts);
    }

    #[test]
    fn summary_schema() {
        let dir = tempfile::tempdir().unwrap();
        let (config, traj, criteria, verdicts) = small_run();
        write_run(dir.path(), "probe", &config, &traj, &criteria, &verdicts).unwrap();
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap()).unwrap();
        for key in ["d_m", "collapse_threshold", "threshold_crossing_time", "psi_m", "velocity_integral", "verdicts"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        // short horizon at high energy: never below the threshold
        assert!(v["threshold_crossing_time"].is_null());
    }

    #[test]
    fn manifest_tracks_every_byte() {
        let dir = tempfile::tempdir().unwrap();
        let run = dir.path().join(RUNS_DIR).join("a");
        let (config, traj, criteria, verdicts) = small_run();
        write_run(&run, "a", &config, &traj, &criteria, &verdicts).unwrap();
        let m = write_manifest(dir.path()).unwrap();
        assert!(m.files.contains_key("runs/a/trajectory.csv"));
        assert!(!m.files.contains_key(MANIFEST_FILE));
        assert!(check_manifest(dir.path()).unwrap().is_empty());

        let path = run.join(DIAGNOSTICS_FILE);
        let original = fs::read(&path).unwrap();
        let mut changed = original.clone();
        let last = changed.len() - 2;
        changed[last] = if changed[last] == b'1' { b'2' } else { b'1' };
        fs::write(&path, &changed).unwrap();
        assert_eq!(check_manifest(dir.path()).unwrap(), vec!["runs/a/diagnostics.csv: hash mismatch".to_string()]);
        fs::write(&path, &original).unwrap();
        assert!(check_manifest(dir.path()).unwrap().is_empty());
    }

    #[test]
    fn results_dirs_do_not_collide() {
        let dir = tempfile::tempdir().unwrap();
        let a = create_results_dir(dir.path(), "fig1", 42).unwrap();
        let b = create_results_dir(dir.path(), "fig1", 42).unwrap();
        assert_ne!(a, b);
        assert!(a.file_name().unwrap().to_string_lossy().starts_with("fig1-seed42-"));
    }

    #[test]
    fn malformed_files_name_their_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(STEPS_FILE);
        fs::write(&path, "t,dt\n1,2\n").unwrap();
        let err = read_steps_csv(&path).unwrap_err();
        assert!(err.to_string().contains(STEPS_FILE), "{err}");
    }
}
