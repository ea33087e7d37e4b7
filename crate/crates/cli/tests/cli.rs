use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use acs_cli::formats::read_csv;

fn acs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acs"))
        .args(args)
        .env("ACS_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(cmd: &str, cfg: &Path, out: &Path) -> Output {
    acs(&[cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn assert_ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}\n{}", o.status.code(), String::from_utf8_lossy(&o.stderr));
}

const QUAD_TARGET: &str = r#"
[target]
kind = "quadratic"
center = [2.3, 3.6]
hessian = [0.5, 0.15, 0.15, 0.35]
max_value = 6
"#;

const TUNER: &str = r#"
[tuner]
steps_per_cycle = 6
budget = 20
alpha_proposals = 5
beta_proposals = 4
burnin_nomh = 10
burnin_mh = 10
alpha_ceil = 20.0
"#;

#[test]
fn tune_is_deterministic_and_logs_every_candidate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tune.toml", &format!("seeds = [3]\n{QUAD_TARGET}{TUNER}"));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_ok(&run("tune", &cfg, &a));
    assert_ok(&run("tune", &cfg, &b));
    let sa = fs::read(a.join("schedule_seed3.json")).unwrap();
    assert_eq!(sa, fs::read(b.join("schedule_seed3.json")).unwrap());

    let parsed = acs_cli::commands::tune::read_schedule_file(&a.join("schedule_seed3.json")).unwrap();
    assert_eq!(parsed.schedule.steps_per_cycle(), 6);
    let log = read_csv(&a.join("tune_log_seed3.csv")).unwrap();
    // two step-size searches of 4 rounds x 5 candidates, then 4 candidates for each of 4 interior entries
    assert_eq!(log.rows.len(), 2 * 4 * 5 + 4 * 4);
    assert_eq!(log.seed, Some(3));
    assert_eq!(log.config_hash.len(), 64);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tune.toml", &format!("seeds = [1, 2]\n{QUAD_TARGET}{TUNER}"));
    let out = dir.path().join("o");
    assert_ok(&acs(&["tune", "--config", cfg.to_str().unwrap(), "--seed", "9", "--out", out.to_str().unwrap()]));
    assert!(out.join("schedule_seed9.json").exists());
    assert!(!out.join("schedule_seed1.json").exists());
}

fn sample_config(seeds: &str, samplers: &str) -> String {
    format!(
        r#"seeds = {seeds}
[target]
kind = "rbm_random"
n_visible = 8
n_hidden = 4
weight_std = 1.0
bias_std = 0.5
model_seed = 5
{TUNER}
[sample]
n_steps = 200
chains = 3
start = "random"
record_every = 2
samplers = {samplers}

[sample.metrics]
every = 50
kl = true
mmd = {{ ground_truth = "exact", samples = 200 }}
"#
    )
}

#[test]
fn sample_writes_per_seed_traces_and_eval_reproduces_summary() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = "[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10]";
    let samplers = r#"[{ kind = "acs_tuned" }, { kind = "dmala", alpha = 0.5 }, { kind = "block_gibbs", label = "gibbs" }]"#;
    let cfg = write_config(dir.path(), "sample.toml", &sample_config(seeds, samplers));
    let out = dir.path().join("run");
    assert_ok(&run("sample", &cfg, &out));

    for label in ["acs_tuned", "dmala", "gibbs"] {
        for s in 0..11 {
            assert!(out.join(format!("traces/{label}_seed{s}.csv")).exists());
            assert!(out.join(format!("traces/{label}_seed{s}.acs1")).exists());
        }
    }
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    let first = &summary["samplers"][0];
    assert_eq!(first["label"], "acs_tuned");
    assert_eq!(first["metrics"]["final_mmd"]["n"], 11);
    assert!(first["metrics"]["final_kl"]["stderr"].as_f64().unwrap() > 0.0);

    // 100 recorded steps per chain, one metric row per recorded step
    let m = read_csv(&out.join("metrics/dmala_seed4.csv")).unwrap();
    assert_eq!(m.rows.len(), 100);
    let mmd_col = m.column("mmd").unwrap();
    assert_eq!(m.rows.iter().filter(|r| !r[mmd_col].is_empty()).count(), 4);

    let eval_cfg = write_config(
        dir.path(),
        "eval.toml",
        &format!(
            "{}\n[eval]\ntraces_dir = \"run/traces\"\n",
            sample_config(seeds, samplers).split("[sample]").next().unwrap()
        ),
    );
    let eval_cfg_text = fs::read_to_string(&eval_cfg).unwrap()
        + "\n[eval.metrics]\nevery = 50\nkl = true\nmmd = { ground_truth = \"exact\", samples = 200 }\n";
    fs::write(&eval_cfg, eval_cfg_text).unwrap();
    let eval_out = dir.path().join("eval");
    assert_ok(&run("eval", &eval_cfg, &eval_out));
    assert_eq!(
        fs::read(out.join("summary.json")).unwrap(),
        fs::read(eval_out.join("summary.json")).unwrap()
    );

    let checks = read_csv(&eval_out.join("checks.csv")).unwrap();
    let value = checks.column("value").unwrap();
    assert_eq!(checks.rows.len(), 1 + 3 * 11);
    assert!(checks.rows.iter().all(|r| r[value].parse::<f64>().unwrap().abs() < 1e-12));

    fs::remove_file(out.join("ground_truth.acs1")).unwrap();
    let missing = run("eval", &eval_cfg, &dir.path().join("eval2"));
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("ground-truth file"));
}

#[test]
fn sample_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.toml",
        &sample_config("[4]", r#"[{ kind = "acs", alpha_max = 3.0, alpha_min = 0.3, steps_per_cycle = 5 }]"#),
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_ok(&run("sample", &cfg, &a));
    assert_ok(&run("sample", &cfg, &b));
    for f in ["traces/acs_seed4.acs1", "traces/acs_seed4.csv", "metrics/acs_seed4.csv", "summary.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn empty_sampler_list_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.toml", &sample_config("[0]", "[]"));
    let o = run("sample", &cfg, &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("at least one sampler") && err.contains("line"), "{err}");
}

#[test]
fn unknown_key_and_usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "seeds = [0]\nsede = 3\n");
    let o = run("tune", &cfg, &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sede"));
    assert_eq!(acs(&["sample"]).status.code(), Some(1));
    assert_eq!(acs(&["--help"]).status.code(), Some(0));
}

#[test]
fn theory_defaults_pass_and_negative_control_fails() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write_config(dir.path(), "t.toml", "[theory]\nn_max = 50\n");
    let out = dir.path().join("ok");
    assert_ok(&run("theory", &ok, &out));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("theory_report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["kernels"].as_array().unwrap().len(), 24);
    assert_eq!(report["cycles"].as_array().unwrap().len(), 2);
    for k in report["kernels"].as_array().unwrap() {
        assert!(k["report"]["hypothesis_holds"].as_bool().unwrap());
        assert!(k["failures"].as_array().unwrap().is_empty());
    }

    let neg = write_config(dir.path(), "n.toml", "[theory]\nn_max = 50\nnegative_control = true\n");
    let nout = dir.path().join("neg");
    let o = run("theory", &neg, &nout);
    assert_eq!(o.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(nout.join("theory_report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
    assert!(report["negative_control"]
        .as_array()
        .unwrap()
        .iter()
        .all(|n| n["passed"] == false));
}

const LEARN: &str = r#"
seeds = [1, 2]
[learn]
n_hidden = 3
method = "pcd"
sampler = { kind = "dmala", alpha = 0.2 }
data = { kind = "two_cluster", n_visible = 6, n_train = 40, n_test = 20 }

[learn.pcd]
buffer_size = 10
batch_size = 10
n_iters = 30
checkpoint_every = 10
learning_rate = 0.01

[learn.evaluation]
ais = { n_temps = 50, n_particles = 20 }
"#;

#[test]
fn learn_checkpoints_and_final_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "l.toml", LEARN);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_ok(&run("learn", &cfg, &a));
    assert_ok(&run("learn", &cfg, &b));
    for seed in [1, 2] {
        for it in [10, 20, 30] {
            assert!(a.join(format!("checkpoints/model_seed{seed}_iter{it}.acs1")).exists());
        }
        let model = format!("models/model_seed{seed}.acs1");
        assert_eq!(fs::read(a.join(&model)).unwrap(), fs::read(b.join(&model)).unwrap());
        acs_cli::formats::read_model(&a.join(&model)).unwrap();
        let trace = read_csv(&a.join(format!("traces/learn_trace_seed{seed}.csv"))).unwrap();
        assert_eq!(trace.rows.len(), 30);
    }
    assert_eq!(fs::read_dir(a.join("checkpoints")).unwrap().count(), 2 * 3 * 2);
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(a.join("summary.json")).unwrap()).unwrap();
    let ev = &summary["runs"][0]["evaluation"];
    let exact = ev["exact_log_likelihood_test"].as_f64().unwrap();
    let ais = ev["ais"]["log_likelihood_test"].as_f64().unwrap();
    assert!(exact < 0.0 && (exact - ais).abs() < 0.5, "exact {exact} vs AIS {ais}");
    assert_eq!(summary["aggregate"]["exact_log_likelihood_test"]["n"], 2);
}

#[test]
fn learned_model_loads_as_target() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "l.toml", &LEARN.replace("seeds = [1, 2]", "seeds = [1]"));
    assert_ok(&run("learn", &cfg, &dir.path().join("learn")));
    let s = write_config(
        dir.path(),
        "s.toml",
        r#"[target]
kind = "rbm_file"
path = "learn/models/model_seed1.acs1"
[sample]
n_steps = 20
samplers = [{ kind = "block_gibbs" }]
"#,
    );
    assert_ok(&run("sample", &s, &dir.path().join("s")));
}

#[test]
fn csv_reader_rejects_unknown_major_version() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.csv");
    fs::write(&p, "# acs-csv 2.0\n# config_hash abc\n# seed 1\na,b\n1,2\n").unwrap();
    let err = read_csv(&p).unwrap_err().to_string();
    assert!(err.contains("major version 2"), "{err}");
    fs::write(&p, "# acs-csv 1.7\n# config_hash abc\n# seed 1\na,b\n1,2\n").unwrap();
    let t = read_csv(&p).unwrap();
    assert_eq!((t.rows.len(), t.seed), (1, Some(1)));
}
