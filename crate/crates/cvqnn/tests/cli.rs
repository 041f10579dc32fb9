mod common;

use std::collections::BTreeMap;
use std::path::Path;

use common::{code, run, stderr, train, write_archive};
use cvqnn::checkpoint::Checkpoint;
use cvqnn::manifest::RunManifest;
use cvqnn::pgm::read_pgm;
use cvqnn_core::model::{HybridModel, ModelKind};
use cvqnn_core::pca::PcaModel;
use cvqnn_core::rng::Xoshiro256;
use serde_json::Value;

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Every artifact the manifest names must exist.
fn check_manifest(dir: &Path) -> RunManifest {
    let m: RunManifest = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert!(!m.artifacts.is_empty());
    for a in &m.artifacts {
        assert!(dir.join(a).is_file(), "manifest lists missing {a}");
    }
    assert!(m.finished_unix_ms >= m.started_unix_ms);
    m
}

#[test]
fn train_writes_the_artifact_set() {
    let dir = tempfile::tempdir().unwrap();
    let archive = dir.path().join("toy.npz");
    write_archive(&archive, 2, [60, 12, 20], 1);
    let out = train(&archive, &dir.path().join("run"), "classical", &["--seed", "7"]);
    for i in 0..3 {
        assert!(out.join(format!("fold-{i}/model.ckpt.json")).is_file());
        let curves = std::fs::read_to_string(out.join(format!("fold-{i}/curves.csv"))).unwrap();
        assert!(curves.starts_with("epoch,split,loss,acc,p,r,f1\n"));
        assert_eq!(curves.lines().count(), 1 + 2 * 3);
    }
    let folds = std::fs::read_to_string(out.join("folds.csv")).unwrap();
    assert!(folds.starts_with("dataset,model,fold,acc,p,r,f1\n"));
    assert_eq!(folds.lines().count(), 4);
    let metrics = json(&out.join("metrics.json"));
    assert_eq!(metrics["config"]["seed"], 7);
    for key in ["acc", "p", "r", "f1", "auroc", "auprc"] {
        assert!(metrics["test"][key].is_number(), "{key}");
    }
    let m = check_manifest(&out);
    assert_eq!(m.seed, Some(7));
    assert_eq!(m.checksums.len(), 1);
    assert_eq!(m.config["train"]["epochs"], 3);
    let best = Checkpoint::load(&out.join("best.ckpt.json")).unwrap();
    assert_eq!(best.fold, metrics["best_fold"].as_u64().unwrap() as usize);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let archive = dir.path().join("toy.npz");
    write_archive(&archive, 3, [45, 9, 15], 2);
    let a = train(&archive, &dir.path().join("a"), "dv", &["--threads", "1"]);
    let b = train(&archive, &dir.path().join("b"), "dv", &["--threads", "3"]);
    assert_eq!(std::fs::read(a.join("metrics.json")).unwrap(), std::fs::read(b.join("metrics.json")).unwrap());
    assert_eq!(std::fs::read(a.join("folds.csv")).unwrap(), std::fs::read(b.join("folds.csv")).unwrap());
}

#[test]
fn config_file_sits_below_flags() {
    let dir = tempfile::tempdir().unwrap();
    let archive = dir.path().join("toy.npz");
    write_archive(&archive, 2, [30, 6, 10], 3);
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, format!("# toy run\nmodel = classical\nepochs = 2\nseed = 11\narchive = {}\n", s(&archive))).unwrap();
    let out = dir.path().join("run");
    let res = run(&["train", "--config", s(&cfg), "--dataset", "toy", "--seed", "5", "--out", s(&out)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let metrics = json(&out.join("metrics.json"));
    assert_eq!(metrics["config"]["seed"], 5);
    assert_eq!(metrics["config"]["epochs"], 2);
    assert_eq!(metrics["model"], "classical");

    std::fs::write(&cfg, "colour = red\n").unwrap();
    let res = run(&["train", "--config", s(&cfg), "--dataset", "toy", "--model", "cv"]);
    assert_eq!(code(&res), 3);
    assert!(stderr(&res).contains("colour"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&["train", "--bogus"])), 3);
    assert_eq!(code(&run(&["train", "--model", "quantum"])), 3);
    assert_eq!(code(&run(&["train", "--model", "cv"])), 3, "missing dataset is a config error");
    let res = run(&["train", "--dataset", "pneumonia", "--model", "cv", "--data-dir", s(dir.path())]);
    assert_eq!(code(&res), 2, "missing archive");
    assert!(stderr(&res).contains("pneumoniamnist.npz"));
    let archive = dir.path().join("toy.npz");
    write_archive(&archive, 2, [30, 6, 10], 3);
    let res = run(&["train", "--dataset", "toy", "--archive", s(&archive), "--model", "cv", "--folds", "1"]);
    assert_eq!(code(&res), 3, "one fold is a config error");
    let sums = dir.path().join("sums.txt");
    std::fs::write(&sums, format!("toy {}\n", "0".repeat(64))).unwrap();
    let res = run(&["train", "--dataset", "toy", "--archive", s(&archive), "--model", "cv", "--checksums", s(&sums)]);
    assert_eq!(code(&res), 2, "checksum mismatch");
    let res = run(&["eval", "--checkpoint", s(&dir.path().join("nope.json")), "--dataset", "toy"]);
    assert_eq!(code(&res), 2);
}

/// A fresh-init checkpoint with PCA fitted on the archive's train split.
fn fresh_checkpoint(archive: &Path, kind: ModelKind, path: &Path) {
    let splits = cvqnn::dataset::load_archive(archive, "toy").unwrap();
    let pca = PcaModel::fit_pixels(&splits.train.images, splits.train.dim, 4).unwrap();
    let model = HybridModel::init(kind, splits.train.num_classes, &mut Xoshiro256::new(4)).unwrap();
    std::fs::write(path, Checkpoint::new(&model, &pca, "toy", 0, 4).to_json()).unwrap();
}

#[test]
fn eval_binary_and_multiclass() {
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("bin.npz");
    write_archive(&bin, 2, [30, 6, 20], 5);
    let ck = dir.path().join("cv.json");
    fresh_checkpoint(&bin, ModelKind::Cv, &ck);
    let out = dir.path().join("e2");
    let res = run(&["eval", "--checkpoint", s(&ck), "--archive", s(&bin), "--out", s(&out)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let e = json(&out.join("eval.json"));
    for key in ["acc", "p", "r", "f1", "auroc", "auprc", "loss"] {
        assert!(e[key].as_f64().unwrap().is_finite(), "{key}");
    }
    assert_eq!(e["split"], "test");
    assert_eq!(e["confusion_matrix"].as_array().unwrap().len(), 2);
    let roc = std::fs::read_to_string(out.join("roc.csv")).unwrap();
    assert!(roc.starts_with("class,x,y,threshold\n"));
    let classes: std::collections::BTreeSet<&str> = roc.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(classes.len(), 1, "binary task has one ROC curve");
    check_manifest(&out);

    let multi = dir.path().join("multi.npz");
    write_archive(&multi, 4, [40, 8, 24], 6);
    let ck = dir.path().join("dv.json");
    fresh_checkpoint(&multi, ModelKind::Dv, &ck);
    let out = dir.path().join("e4");
    let res = run(&["eval", "--checkpoint", s(&ck), "--archive", s(&multi), "--split", "val", "--out", s(&out)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let e = json(&out.join("eval.json"));
    assert_eq!(e["split"], "val");
    let per_class = e["per_class"].as_array().unwrap();
    assert_eq!(per_class.len(), 4);
    let aurocs: Vec<f64> = per_class.iter().map(|c| c["auroc"].as_f64().unwrap()).collect();
    let mean = aurocs.iter().sum::<f64>() / 4.0;
    assert!((mean - e["auroc"].as_f64().unwrap()).abs() < 1e-12, "mean of one-vs-rest areas");
    for file in ["roc.csv", "pr.csv"] {
        let text = std::fs::read_to_string(out.join(file)).unwrap();
        let classes: std::collections::BTreeSet<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(classes.len(), 4, "{file}");
    }
    let res = run(&["eval", "--checkpoint", s(&ck), "--archive", s(&bin)]);
    assert_eq!(code(&res), 2, "class count mismatch");
    let res = run(&["eval", "--checkpoint", s(&ck), "--archive", s(&multi), "--split", "dev"]);
    assert_eq!(code(&res), 3);
}

#[test]
fn noise_sweep_is_paired_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let archive = dir.path().join("toy.npz");
    write_archive(&archive, 2, [30, 6, 20], 7);
    let cks: Vec<String> = ModelKind::ALL
        .iter()
        .map(|&k| {
            let p = dir.path().join(format!("{k}.json"));
            fresh_checkpoint(&archive, k, &p);
            s(&p).to_string()
        })
        .collect();
    let list = cks.join(",");
    let sweep = |out: &Path, extra: &[&str]| {
        let mut args = vec!["noise-sweep", "--checkpoint", &list, "--archive", s(&archive), "--out", s(out), "--seed", "9"];
        args.extend_from_slice(extra);
        let res = run(&args);
        assert_eq!(code(&res), 0, "{}", stderr(&res));
        std::fs::read_to_string(out.join("noise_sweep.csv")).unwrap()
    };
    let a = sweep(&dir.path().join("a"), &[]);
    let b = sweep(&dir.path().join("b"), &["--threads", "3"]);
    assert_eq!(a, b);
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[0], "sigma,model_kind,f1");
    assert_eq!(lines.len(), 61);
    check_manifest(&dir.path().join("a"));
    let mut per_sigma: BTreeMap<String, usize> = BTreeMap::new();
    for l in &lines[1..] {
        *per_sigma.entry(l.split(',').next().unwrap().to_string()).or_default() += 1;
    }
    assert_eq!(per_sigma.len(), 20);
    assert!(per_sigma.values().all(|&n| n == 3));

    for (kind, ck) in ModelKind::ALL.iter().zip(&cks) {
        let out = dir.path().join(format!("eval-{kind}"));
        assert_eq!(code(&run(&["eval", "--checkpoint", ck, "--archive", s(&archive), "--out", s(&out)])), 0);
        let f1 = json(&out.join("eval.json"))["f1"].as_f64().unwrap();
        let row = lines.iter().find(|l| l.starts_with(&format!("0.0,{kind},"))).unwrap();
        assert_eq!(row.rsplit(',').next().unwrap().parse::<f64>().unwrap(), f1, "sigma 0 equals eval F1 for {kind}");
    }
    let c = sweep(&dir.path().join("c"), &["--clip"]);
    assert_eq!(c.lines().count(), 61);
}

#[test]
fn saliency_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let archive = dir.path().join("toy.npz");
    write_archive(&archive, 2, [30, 6, 10], 8);
    let ck = dir.path().join("c.json");
    fresh_checkpoint(&archive, ModelKind::Classical, &ck);
    let out = dir.path().join("sal");
    let args = ["saliency", "--checkpoint", s(&ck), "--archive", s(&archive), "--out", s(&out), "--index", "0,3"];
    let res = run(&args);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    for i in [0, 3] {
        let (w, h, heat) = read_pgm(&out.join(format!("sample-{i}-saliency.pgm"))).unwrap();
        assert_eq!((w, h), (28, 28));
        assert_eq!(*heat.iter().max().unwrap(), 255);
        let (w, h, _) = read_pgm(&out.join(format!("sample-{i}-reconstruction.pgm"))).unwrap();
        assert_eq!((w, h), (28, 28));
        let side = json(&out.join(format!("sample-{i}.json")));
        assert_eq!(side["model_kind"], "classical");
        assert_eq!(side["true_class"], i % 2);
        let conf = side["confidence"].as_f64().unwrap();
        assert!(conf > 0.0 && conf < 1.0);
    }
    let files = std::fs::read_dir(&out).unwrap().count();
    assert_eq!(files, 2 * 3 + 1, "three files per sample plus the manifest");
    let first = std::fs::read(out.join("sample-3-saliency.pgm")).unwrap();
    assert_eq!(code(&run(&args)), 0);
    assert_eq!(std::fs::read(out.join("sample-3-saliency.pgm")).unwrap(), first);

    let res = run(&["saliency", "--checkpoint", s(&ck), "--archive", s(&archive), "--out", s(&out), "--index", "10"]);
    assert_eq!(code(&res), 2);
    let out2 = dir.path().join("signed");
    let res = run(&["saliency", "--checkpoint", s(&ck), "--archive", s(&archive), "--out", s(&out2), "--index", "1", "--signed"]);
    assert_eq!(code(&res), 0);
    let csv = std::fs::read_to_string(out2.join("sample-1-signed.csv")).unwrap();
    assert!(csv.starts_with("row,col,gradient\n"));
    assert_eq!(csv.lines().count(), 785);
}

fn write_folds(path: &Path, dataset: &str, scores: [[f64; 3]; 3]) {
    let mut text = String::from("dataset,model,fold,acc,p,r,f1\n");
    for (model, s) in ["classical", "dv", "cv"].iter().zip(scores) {
        for (fold, v) in s.iter().enumerate() {
            text.push_str(&format!("{dataset},{model},{fold},{v},{v},{v},{v}\n"));
        }
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn stats_report() {
    let dir = tempfile::tempdir().unwrap();
    let same = dir.path().join("same.csv");
    write_folds(&same, "breast", [[0.8, 0.7, 0.75]; 3]);
    let ranked = dir.path().join("ranked.csv");
    write_folds(&ranked, "organa", [[0.1, 0.2, 0.3], [0.4, 0.5, 0.6], [0.7, 0.8, 0.9]]);
    let out = dir.path().join("st");
    let res = run(&["stats", s(&same), s(&ranked), "--out", s(&out)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert!(stdout.contains("H0 retained"));
    let report = json(&out.join("stats.json"));
    assert!((report["alpha_corrected"].as_f64().unwrap() - 0.0167).abs() < 5e-5);
    let breast = &report["datasets"]["breast"]["f1"];
    assert_eq!(breast["friedman_reject"], false);
    let pairs: Vec<&str> = breast["pairwise"].as_array().unwrap().iter().map(|p| p["pair"].as_str().unwrap()).collect();
    assert_eq!(pairs, ["C\u{2013}DV", "C\u{2013}CV", "DV\u{2013}CV"]);
    assert!(breast["pairwise"].as_array().unwrap().iter().all(|p| p["reject"] == false && p["p"] == 1.0));
    // Consistent ranking over three folds: chi2 = 6, p = exp(-3) > 0.0167.
    let organa = &report["datasets"]["organa"]["acc"];
    assert!((organa["friedman_chi2"].as_f64().unwrap() - 6.0).abs() < 1e-12);
    assert!((organa["friedman_p"].as_f64().unwrap() - (-3.0f64).exp()).abs() < 1e-12);
    check_manifest(&out);

    let partial = dir.path().join("partial.csv");
    std::fs::write(&partial, "dataset,model,fold,acc,p,r,f1\nx,cv,0,1,1,1,1\n").unwrap();
    assert_eq!(code(&run(&["stats", s(&partial), "--out", s(&out)])), 2);
    assert_eq!(code(&run(&["stats", s(&same), "--alpha", "2", "--out", s(&out)])), 3);
}

#[test]
fn pca_report_lists_variance() {
    let dir = tempfile::tempdir().unwrap();
    let archive = dir.path().join("toy.npz");
    write_archive(&archive, 3, [30, 6, 9], 10);
    let out = dir.path().join("pca");
    let res = run(&["pca-report", "--dataset", "toy", "--archive", s(&archive), "--out", s(&out)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let report = json(&out.join("pca_report.json"));
    let entry = &report[0];
    assert_eq!(entry["k"], 4);
    assert_eq!((entry["train"].as_u64(), entry["val"].as_u64(), entry["test"].as_u64()), (Some(30), Some(6), Some(9)));
    let ratios: Vec<f64> = entry["explained_variance_ratio"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!((ratios.iter().sum::<f64>() - entry["cumulative_ratio"].as_f64().unwrap()).abs() < 1e-12);
    assert!(ratios.windows(2).all(|w| w[0] >= w[1]));
    let csv = std::fs::read_to_string(out.join("pca_report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    check_manifest(&out);
    let res = run(&["pca-report", "--dataset", "toy,other", "--archive", s(&archive), "--out", s(&out)]);
    assert_eq!(code(&res), 3);
}
