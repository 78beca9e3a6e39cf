//! Writes a run in the CLI results layout, reads it back and checks it.

use csb::config::{parse_config, print_config};
use csb::experiments::{common_criteria, evaluate_all, run_scenario, Scenario};
use csb::output::{check_manifest, create_results_dir, read_run, write_manifest, write_run, RUNS_DIR};

const CONFIG: &str = r#"
t_end = 5.0
sample_every = 0.5

[init]
n = 5
dim = 3
seed = 9

[params]
variant = "original"
kernel = "singular"
alpha = 1.5
big_r = 1.0
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = parse_config(CONFIG)?;
    println!("{}", print_config(&cfg));
    let sc = Scenario {
        name: "demo".into(),
        init: cfg.init,
        params: cfg.params,
        ctl: cfg.ctl,
        t_end: cfg.t_end,
        sample_every: cfg.sample_every,
        acceptance: common_criteria(),
    };
    let rec = run_scenario(&sc)?;

    let root = tempfile_root();
    let dir = create_results_dir(&root, "demo", cfg.init.seed)?;
    let run_dir = dir.join(RUNS_DIR).join("demo");
    write_run(&run_dir, "demo", &cfg, &rec.trajectory, &sc.acceptance, &rec.verdicts)?;
    write_manifest(&dir)?;
    println!("wrote {}", dir.display());

    let saved = read_run(&run_dir)?;
    let again = evaluate_all(&saved.criteria, &saved.trajectory, &saved.config.params);
    println!("recomputed verdicts match: {}", again == rec.verdicts);
    println!("manifest problems: {:?}", check_manifest(&dir)?);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

fn tempfile_root() -> std::path::PathBuf {
    std::env::temp_dir().join("csb-example")
}
