use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bench(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_attribench"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

const CONFIG: &str = r#"
seed = 3
n_trials = 2

[[datasets]]
family = "weighted"
n_features = 4
n_train = 20
n_val = 10
n_test = 25

[[datasets]]
label = "or4"
family = "boolean"
formula = "a OR b OR c OR d"

[[methods]]
method = "deeplift"

[[methods]]
method = "kernel_shap"
budget = 40
"#;

#[test]
fn list_names_everything() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&bench(&["list"], dir.path()));
    for name in ["weighted", "pertinent_negatives", "boolean", "deeplift", "lime", "kernel_shap", "mask_error", "infidelity", "trained"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn single_step_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(&bench(&["generate", "--family", "pertinent_negatives", "--n-features", "4", "--seed", "9", "--out", "data.csv"], p));
    assert!(p.join("data.meta.json").exists());
    ok(&bench(&["build-model", "--family", "pertinent_negatives", "--n-features", "4", "--seed", "9", "--out", "net.json"], p));
    ok(&bench(&["attribute", "--model", "net.json", "--data", "data.csv", "--method", "deeplift", "--out", "dl.csv"], p));
    let scored = ok(&bench(&["evaluate", "--attributions", "dl.csv", "--data", "data.csv", "--model", "net.json"], p));
    let line = scored.lines().nth(1).unwrap();
    let fields: Vec<&str> = line.split(',').collect();
    assert_eq!(fields[0], "mse");
    assert!(fields[1].parse::<f64>().unwrap() <= 1e-12, "{scored}");
    assert_eq!(fields[3], "1000");

    ok(&bench(&["attribute", "--model", "net.json", "--data", "data.csv", "--method", "input_x_gradient", "--out", "ixg.csv"], p));
    let scored = ok(&bench(&["evaluate", "--attributions", "ixg.csv", "--data", "data.csv", "--model", "net.json"], p));
    let mse: f64 = scored.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(mse > 0.1, "{scored}");

    fs::write(p.join("m.toml"), "metric = \"infidelity\"\nn_perturb = 8\n").unwrap();
    let inf = ok(&bench(&["evaluate", "--attributions", "dl.csv", "--data", "data.csv", "--model", "net.json", "--config", "m.toml", "--seed", "4"], p));
    assert!(inf.starts_with("metric,mean,std,n,degenerate\ninfidelity,"), "{inf}");
}

#[test]
fn method_config_files_and_trained_models() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("ds.toml"), "family = \"uncertainty\"\nn_features = 4\nn_train = 60\nn_val = 20\nn_test = 15\n").unwrap();
    ok(&bench(&["generate", "--config", "ds.toml", "--out", "u.csv"], p));
    fs::write(p.join("train.toml"), "epochs = 2\nhidden_widths = [8]\n").unwrap();
    let out = bench(&["build-model", "--config", "ds.toml", "--arm", "trained", "--train-config", "train.toml", "--out", "t.json"], p);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("accuracy"));
    fs::write(
        p.join("dl.toml"),
        "method = \"deeplift\"\ntarget = { kind = \"logit_normalised\", class = \"predicted\" }\n",
    )
    .unwrap();
    ok(&bench(&["attribute", "--model", "t.json", "--data", "u.csv", "--config", "dl.toml", "--jobs", "2", "--out", "a.csv"], p));
    let meta = fs::read_to_string(p.join("a.meta.json")).unwrap();
    assert!(meta.contains("logit_normalised"), "{meta}");
    let scored = ok(&bench(&["evaluate", "--attributions", "a.csv", "--data", "u.csv", "--model", "t.json"], p));
    assert!(scored.contains("mask_error,"));
}

#[test]
fn run_is_reproducible_across_invocations_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("exp.toml"), CONFIG).unwrap();
    ok(&bench(&["run", "--config", "exp.toml", "--out", "a.csv", "--jobs", "1"], p));
    ok(&bench(&["run", "--config", "exp.toml", "--out", "b.csv", "--jobs", "8"], p));
    let a = fs::read(p.join("a.csv")).unwrap();
    assert_eq!(a, fs::read(p.join("b.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next().unwrap(), "dataset,arm,method,target,metric,mean,std,n_trials");
    assert_eq!(text.lines().count(), 1 + 2 * 3);
    assert!(text.contains("or4,handcrafted,deeplift,scalar,mse,0,0,2"), "{text}");

    let md = ok(&bench(&["run", "--config", "exp.toml", "--format", "markdown", "--trials", "1", "--timings"], p));
    assert!(md.contains("| or4 | handcrafted | deeplift | scalar | mse | 0.000 ± 0.000 | 1 |"), "{md}");
    assert!(md.lines().next().unwrap().contains("runtime (s)"));

    let reseeded = ok(&bench(&["run", "--config", "exp.toml", "--seed", "4"], p));
    assert_ne!(reseeded, text);
}

#[test]
fn output_paths_from_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("exp.toml"), format!("{CONFIG}\n[output]\ncsv = \"res/out.csv\"\nmarkdown = \"res/out.md\"\n")).unwrap();
    assert_eq!(ok(&bench(&["run", "--config", "exp.toml"], p)), "");
    assert!(fs::read_to_string(p.join("res/out.csv")).unwrap().starts_with("dataset,"));
    assert!(fs::read_to_string(p.join("res/out.md")).unwrap().starts_with("| dataset"));
}

#[test]
fn exit_code_counts_error_cells() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let cfg = format!("{CONFIG}\n[[methods]]\nlabel = \"broken\"\nmethod = \"deeplift\"\nbaseline = {{ kind = \"fixed\", values = [1.0] }}\n");
    fs::write(p.join("exp.toml"), cfg).unwrap();
    let out = bench(&["run", "--config", "exp.toml"], p);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("ERR("));
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("exp.toml"), format!("n_trails = 2\n{CONFIG}")).unwrap();
    let out = bench(&["run", "--config", "exp.toml"], p);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_trails"));

    let out = bench(&["generate", "--family", "wighted", "--out", "x.csv"], p);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown family"));

    let out = bench(&["attribute", "--model", "missing.json", "--data", "x.csv", "--method", "deeplift", "--out", "y.csv"], p);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));
}
