use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn plmm(args: &[&str]) -> Output {
    plmm_env(args, &[])
}

fn plmm_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_plmm"));
    cmd.args(args).env_remove("PLMM_NUM_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn ok(out: Output) -> Output {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn simulate(dir: &Path, config: &Path, seed: &str) -> PathBuf {
    let out = dir.join(format!("sim-{seed}"));
    ok(plmm(&[
        "simulate",
        "--config",
        s(config),
        "--out",
        s(&out),
        "--seed",
        seed,
    ]));
    out
}

fn data_rows(p: &Path) -> usize {
    std::fs::read_to_string(p).unwrap().lines().count() - 1
}

#[test]
fn simulate_writes_the_regime_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let hos = simulate(dir.path(), &configs().join("hos.toml"), "1");
    let sizes: Vec<usize> = (1..=3)
        .map(|t| data_rows(&hos.join(format!("epochs/epoch_{t}.csv"))))
        .collect();
    assert_eq!(sizes, vec![500, 100, 200]);
    assert_eq!(data_rows(&hos.join("dataset.csv")), 800);
    assert!(hos.join("truth.json").exists() && hos.join("manifest.json").exists());

    let los = simulate(dir.path(), &configs().join("los.toml"), "2");
    let n = std::fs::read_dir(los.join("epochs")).unwrap().count();
    assert_eq!(n, 5);
}

#[test]
fn same_seed_same_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("hos.toml");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        ok(plmm(&[
            "simulate",
            "--config",
            s(&cfg),
            "--out",
            s(out),
            "--seed",
            "7",
        ]));
    }
    for f in ["dataset.csv", "truth.json", "epochs/epoch_2.csv"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let c = dir.path().join("c");
    ok(plmm(&[
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(&c),
        "--seed",
        "8",
    ]));
    assert_ne!(
        std::fs::read(a.join("dataset.csv")).unwrap(),
        std::fs::read(c.join("dataset.csv")).unwrap()
    );
}

#[test]
fn fit_evaluate_interpret_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("hos.toml");
    let sim = simulate(dir.path(), &cfg, "3");
    let fit_dir = dir.path().join("fit");
    ok(plmm(&[
        "fit",
        "--config",
        s(&cfg),
        "--in",
        s(&sim.join("dataset.csv")),
        "--out",
        s(&fit_dir),
    ]));
    let fit = json(&fit_dir.join("fit.json"));
    let epochs = fit["epochs"].as_array().unwrap();
    assert_eq!(epochs.len(), 3);
    assert!(epochs[0]["model"]["submodel"].is_null());
    for e in &epochs[1..] {
        assert!(e["model"]["submodel"].is_string());
        assert_eq!(e["bic_table"].as_array().unwrap().len(), 4);
        assert_eq!(e["k"], 3);
    }
    assert_eq!(data_rows(&fit_dir.join("labels.csv")), 800);
    let rates = json(&fit_dir.join("selection_rates.json"));
    let total: f64 = rates
        .as_object()
        .unwrap()
        .values()
        .map(|v| v.as_f64().unwrap())
        .sum();
    assert!((total - 100.0).abs() < 1e-9);

    let eval_dir = dir.path().join("eval");
    ok(plmm(&[
        "evaluate",
        "--config",
        s(&cfg),
        "--in",
        s(&sim.join("dataset.csv")),
        "--truth",
        s(&sim.join("truth.json")),
        "--model",
        s(&fit_dir.join("fit.json")),
        "--out",
        s(&eval_dir),
    ]));
    let report = json(&eval_dir.join("report.json"));
    assert_eq!(report["ari_per_epoch"].as_array().unwrap().len(), 2);
    assert!(report["ari_mean"].as_f64().unwrap() > 0.5);
    assert_eq!(report["perplexity_per_fold"].as_array().unwrap().len(), 5);
    assert!(report["perplexity_mean"].as_f64().unwrap() > 1.0);

    let interp_dir = dir.path().join("interp");
    ok(plmm(&[
        "interpret",
        "--config",
        s(&cfg),
        "--in",
        s(&fit_dir.join("fit.json")),
        "--out",
        s(&interp_dir),
    ]));
    let interp = json(&interp_dir.join("interpretation.json"));
    let transitions = interp["transitions"].as_array().unwrap();
    assert_eq!(transitions.len(), 2);
    for t in transitions {
        let rows = t["matrix"]["entries"].as_array().unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows
            .iter()
            .flat_map(|r| r.as_array().unwrap())
            .all(|v| [-1, 0, 1].contains(&v.as_i64().unwrap())));
    }
    assert!(interp["histograms"].is_null());

    for d in [&sim, &fit_dir, &eval_dir, &interp_dir] {
        let replay_dir = dir.path().join(format!(
            "replay-{}",
            d.file_name().unwrap().to_str().unwrap()
        ));
        let out = ok(plmm(&[
            "replay",
            "--in",
            s(&d.join("manifest.json")),
            "--out",
            s(&replay_dir),
        ]));
        assert!(String::from_utf8_lossy(&out.stdout).contains("all outputs match"));
    }
    // replay in place as well
    ok(plmm(&["replay", "--in", s(&fit_dir.join("manifest.json"))]));
}

#[test]
fn perfect_labels_score_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("hos.toml");
    let sim = simulate(dir.path(), &cfg, "4");
    let fit_dir = dir.path().join("fit");
    ok(plmm(&[
        "fit",
        "--config",
        s(&cfg),
        "--in",
        s(&sim.join("dataset.csv")),
        "--out",
        s(&fit_dir),
    ]));
    let truth = json(&sim.join("truth.json"));
    let mut fit = json(&fit_dir.join("fit.json"));
    for (e, labels) in fit["epochs"]
        .as_array_mut()
        .unwrap()
        .iter_mut()
        .zip(truth["labels"].as_array().unwrap())
    {
        e["labels"] = labels.clone();
    }
    let perfect = dir.path().join("perfect.json");
    std::fs::write(&perfect, serde_json::to_string(&fit).unwrap()).unwrap();
    let eval_dir = dir.path().join("eval");
    ok(plmm(&[
        "evaluate",
        "--config",
        s(&cfg),
        "--in",
        s(&sim.join("dataset.csv")),
        "--truth",
        s(&sim.join("truth.json")),
        "--model",
        s(&perfect),
        "--out",
        s(&eval_dir),
    ]));
    assert_eq!(json(&eval_dir.join("report.json"))["ari_mean"], 1.0);
}

#[test]
fn single_epoch_fit_has_no_links() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("hos.toml");
    let sim = simulate(dir.path(), &cfg, "5");
    let fit_dir = dir.path().join("fit");
    ok(plmm(&[
        "fit",
        "--config",
        s(&cfg),
        "--in",
        s(&sim.join("epochs/epoch_1.csv")),
        "--out",
        s(&fit_dir),
    ]));
    let model = json(&fit_dir.join("models/epoch_1.json"));
    assert!(model["links"].is_null() && model["submodel"].is_null());
    assert!(!fit_dir.join("selection_rates.json").exists());
    let out = plmm(&[
        "interpret",
        "--in",
        s(&fit_dir.join("fit.json")),
        "--out",
        s(&dir.path().join("i")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn auto_k_reports_k_and_mappings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "auto.toml",
        "[synth]\nepoch_sizes = [300, 300]\n\n[plmm.k_mode]\nmode = \"auto\"\nk_min = 2\nk_max = 6\n",
    );
    let sim = simulate(dir.path(), &cfg, "6");
    let fit_dir = dir.path().join("fit");
    ok(plmm(&[
        "fit",
        "--config",
        s(&cfg),
        "--in",
        s(&sim.join("dataset.csv")),
        "--out",
        s(&fit_dir),
    ]));
    let fit = json(&fit_dir.join("fit.json"));
    let epochs = fit["epochs"].as_array().unwrap();
    for e in epochs {
        let k = e["k"].as_u64().unwrap();
        assert!((2..=6).contains(&k));
        assert_eq!(e["k_scores"].as_array().unwrap().len(), 5);
    }
    let targets = epochs[1]["mapping"]["targets"].as_array().unwrap();
    assert_eq!(targets.len() as u64, epochs[1]["k"].as_u64().unwrap());
}

#[test]
fn aspect_polarity_features_get_histograms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "d44.toml",
        "[synth]\ndim = 44\nepoch_sizes = [300, 200]\n\n[plmm.k_mode]\nmode = \"fixed\"\nk = 3\n",
    );
    let sim = simulate(dir.path(), &cfg, "9");
    let text = std::fs::read_to_string(sim.join("dataset.csv")).unwrap();
    let polarities = ["pos", "neg", "neu", "mixed"];
    let header: Vec<String> = std::iter::once("epoch".to_string())
        .chain((0..11).flat_map(|a| polarities.iter().map(move |p| format!("aspect{a}:{p}"))))
        .collect();
    let body: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
    let data = dir.path().join("pod.csv");
    std::fs::write(&data, format!("{}\n{body}", header.join(","))).unwrap();

    let fit_dir = dir.path().join("fit");
    ok(plmm(&[
        "fit",
        "--config",
        s(&cfg),
        "--in",
        s(&data),
        "--out",
        s(&fit_dir),
    ]));
    let interp_dir = dir.path().join("interp");
    ok(plmm(&[
        "interpret",
        "--config",
        s(&cfg),
        "--in",
        s(&fit_dir.join("fit.json")),
        "--out",
        s(&interp_dir),
    ]));
    let hist = json(&interp_dir.join("interpretation.json"))["histograms"].clone();
    let hist = hist.as_array().unwrap();
    assert_eq!(hist.len(), 2 * 3);
    for h in hist {
        let aspects = h["aspects"].as_array().unwrap();
        assert_eq!(aspects.len(), 11);
        assert!(aspects
            .iter()
            .all(|a| a["polarities"].as_array().unwrap().len() == 4));
    }
    let fit = json(&fit_dir.join("fit.json"));
    let total: u64 = fit["epochs"][1]["cluster_counts"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|r| r.as_array().unwrap())
        .map(|v| v.as_u64().unwrap())
        .sum();
    let from_hist: u64 = hist
        .iter()
        .filter(|h| h["epoch_id"] == "2")
        .flat_map(|h| h["aspects"].as_array().unwrap())
        .flat_map(|a| a["polarities"].as_array().unwrap())
        .map(|p| p["count"].as_u64().unwrap())
        .sum();
    assert_eq!(total, from_hist);
}

#[test]
fn exit_codes_separate_validation_from_runtime() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let bad = write_config(dir.path(), "bad.toml", "[synth]\nbogus = 1\n");
    assert_eq!(
        plmm(&["simulate", "--config", s(&bad), "--out", s(&out)])
            .status
            .code(),
        Some(2)
    );
    let bad_k = write_config(
        dir.path(),
        "k.toml",
        "[plmm.k_mode]\nmode = \"fixed\"\nk = 0\n",
    );
    assert_eq!(
        plmm(&["simulate", "--config", s(&bad_k), "--out", s(&out)])
            .status
            .code(),
        Some(2)
    );
    let missing = dir.path().join("missing.csv");
    assert_eq!(
        plmm(&["fit", "--in", s(&missing), "--out", s(&out)])
            .status
            .code(),
        Some(2)
    );
    let neg = dir.path().join("neg.csv");
    std::fs::write(&neg, "t,a,b\n1,2,0\n1,-1,3\n").unwrap();
    let res = plmm(&["fit", "--in", s(&neg), "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("neg.csv:3:"));

    let sim = simulate(dir.path(), &configs().join("los.toml"), "1");
    let data = sim.join("dataset.csv");
    let res = plmm(&["evaluate", "--in", s(&data), "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(2));
    let res = plmm_env(
        &["simulate", "--out", s(&out)],
        &[("PLMM_NUM_THREADS", "zero")],
    );
    assert_eq!(res.status.code(), Some(2));

    // a separation no draw can reach is a runtime failure
    let sep = write_config(
        dir.path(),
        "sep.toml",
        "[synth]\nseparation_min = 1e6\nmax_attempts = 3\n",
    );
    assert_eq!(
        plmm(&["simulate", "--config", s(&sep), "--out", s(&out)])
            .status
            .code(),
        Some(3)
    );

    // tampered output makes the replay fail
    std::fs::write(sim.join("truth.json"), "{}").unwrap();
    let res = plmm(&["replay", "--in", s(&sim.join("manifest.json"))]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "in-place replay rewrites the outputs"
    );
    let fit_dir = dir.path().join("fit");
    ok(plmm(&[
        "fit",
        "--config",
        s(&configs().join("los.toml")),
        "--in",
        s(&data),
        "--out",
        s(&fit_dir),
    ]));
    std::fs::write(&data, "t,a,b\n1,1,1\n").unwrap();
    let res = plmm(&["replay", "--in", s(&fit_dir.join("manifest.json"))]);
    assert_eq!(res.status.code(), Some(2), "changed input is rejected");
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("hos.toml");
    let sim = simulate(dir.path(), &cfg, "10");
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let fit_dir = dir.path().join(format!("fit-{threads}"));
        ok(plmm_env(
            &[
                "fit",
                "--config",
                s(&cfg),
                "--in",
                s(&sim.join("dataset.csv")),
                "--out",
                s(&fit_dir),
            ],
            &[("PLMM_NUM_THREADS", threads)],
        ));
        outputs.push(std::fs::read(fit_dir.join("fit.json")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}
