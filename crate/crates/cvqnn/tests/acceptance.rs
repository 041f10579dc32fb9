#![allow(clippy::type_complexity)]

//! Acceptance checks. Each prints one `PASS` or `FAIL` line per criterion.
//!
//! Criteria 6, 7 and the zero-noise consistency check run on synthetic data.
//! The rest need the MedMNIST archives (`pneumoniamnist.npz`,
//! `breastmnist.npz`, `organamnist.npz`) in the directory named by
//! `MEDMNIST_DIR` and are ignored by default:
//!
//! ```text
//! MEDMNIST_DIR=/data/medmnist cargo test --release -p cvqnn --test acceptance -- --ignored --nocapture
//! ```

mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use common::{code, run, stderr, write_archive};
use cvqnn::dataset::{archive_path, load_archive, Splits};
use cvqnn_core::gaussian::GateSymplectic;
use cvqnn_core::metrics::{micro_metrics, roc_curve, ConfusionMatrix};
use cvqnn_core::model::{FeatureStats, HybridModel, ModelKind, Sample};
use cvqnn_core::noise::{inject_gaussian_noise, noise_sweep_grid};
use cvqnn_core::pca::PcaModel;
use cvqnn_core::rng::Xoshiro256;
use cvqnn_core::stats::{compare_models, friedman_test, wilcoxon_signed_rank};
use cvqnn_core::statevector::{Angle, Circuit, Op, QubitState};
use cvqnn_core::train::{cross_validate, evaluate, TrainConfig};

/// Prints the verdict line and returns `pass`.
fn verdict(criterion: &str, pass: bool, detail: String) -> bool {
    println!("{} criterion {criterion}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn assert_all(results: &[(String, bool)]) {
    let failed: Vec<&str> = results.iter().filter(|r| !r.1).map(|r| r.0.as_str()).collect();
    assert!(failed.is_empty(), "failed: {failed:?}");
}

// ---------------------------------------------------------------- criterion 6

fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                out[i * n + j] += a[i * n + k] * b[k * n + j];
            }
        }
    }
    out
}

fn transpose(a: &[f64], n: usize) -> Vec<f64> {
    (0..n * n).map(|idx| a[(idx % n) * n + idx / n]).collect()
}

/// `[[0, I], [-I, 0]]` in `(x1..xn, p1..pn)` order.
fn omega(modes: usize) -> Vec<f64> {
    let n = 2 * modes;
    let mut om = vec![0.0; n * n];
    for i in 0..modes {
        om[i * n + modes + i] = 1.0;
        om[(modes + i) * n + i] = -1.0;
    }
    om
}

fn symplectic_identity() -> (bool, String) {
    let mut rng = Xoshiro256::new(61);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let modes = 2 + rng.below(3);
        let mut total = GateSymplectic::identity(modes);
        for _ in 0..1 + rng.below(24) {
            let m = rng.below(modes);
            let ang = rng.uniform(-std::f64::consts::PI, std::f64::consts::PI);
            let g = match rng.below(4) {
                0 => GateSymplectic::displacement(modes, m, rng.uniform(-2.0, 2.0), ang),
                1 => GateSymplectic::rotation(modes, m, ang),
                2 => GateSymplectic::squeeze(modes, m, rng.uniform(-1.0, 1.0)),
                _ => {
                    let b = (m + 1 + rng.below(modes - 1)) % modes;
                    GateSymplectic::beamsplitter(modes, m, b, ang, rng.uniform(-3.0, 3.0))
                }
            };
            total = total.then(&g.unwrap());
        }
        let n = 2 * modes;
        let s = &total.matrix;
        let sost = matmul(&matmul(s, &omega(modes), n), &transpose(s, n), n);
        let frob = sost.iter().zip(omega(modes)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        worst = worst.max(frob);
    }
    (worst < 1e-10, format!("max ||S Omega S^T - Omega||_F over 1000 random gate stacks = {worst:.2e} (< 1e-10)"))
}

fn random_circuit(rng: &mut Xoshiro256, num_params: usize) -> Circuit {
    let mut c = Circuit::new(4);
    for _ in 0..4 + rng.below(36) {
        let q = rng.below(4);
        let angle = if num_params > 0 && rng.below(3) > 0 {
            Angle::Param(rng.below(num_params))
        } else {
            Angle::Fixed(rng.uniform(-7.0, 7.0))
        };
        c.push(match rng.below(3) {
            0 => Op::Ry(q, angle),
            1 => Op::Rz(q, angle),
            _ => Op::Cnot { control: q, target: (q + 1 + rng.below(3)) % 4 },
        });
    }
    c
}

fn statevector_norm() -> (bool, String) {
    let mut rng = Xoshiro256::new(62);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let c = random_circuit(&mut rng, 0);
        let state: QubitState = c.run(&[], &[]).unwrap();
        worst = worst.max((state.norm_sqr().sqrt() - 1.0).abs());
    }
    (worst < 1e-12, format!("max norm drift over 1000 random circuits = {worst:.2e} (< 1e-12)"))
}

fn parameter_shift() -> (bool, String) {
    const H: f64 = 1e-5;
    let mut rng = Xoshiro256::new(63);
    let mut worst: f64 = 0.0;
    let mut circuits = 0;
    while circuits < 100 {
        let num_params = 1 + rng.below(6);
        let c = random_circuit(&mut rng, num_params);
        let params: Vec<f64> = (0..num_params).map(|_| rng.uniform(-3.2, 3.2)).collect();
        let used = |j: usize| c.ops.iter().any(|op| matches!(op, Op::Ry(_, Angle::Param(i)) | Op::Rz(_, Angle::Param(i)) if *i == j));
        if !(0..num_params).any(used) {
            continue;
        }
        circuits += 1;
        for j in (0..num_params).filter(|&j| used(j)) {
            let shift = c.param_shift_grad(&params, &[], j).unwrap();
            let mut p = params.clone();
            p[j] += H;
            let plus = c.expectations(&p, &[]).unwrap();
            p[j] -= 2.0 * H;
            let minus = c.expectations(&p, &[]).unwrap();
            for q in 0..4 {
                worst = worst.max((shift[q] - (plus[q] - minus[q]) / (2.0 * H)).abs());
            }
        }
    }
    (worst < 1e-6, format!("max |shift - finite difference| over 100 circuits = {worst:.2e} (< 1e-6)"))
}

fn model_gradients(kind: ModelKind) -> (bool, String) {
    const H: f64 = 1e-5;
    let mut rng = Xoshiro256::new(64 + kind as u64);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let classes = 2 + case % 3;
        let mut model = HybridModel::zeros(kind, classes).unwrap();
        let flat: Vec<f64> = (0..model.num_params()).map(|_| rng.uniform(-1.0, 1.0)).collect();
        model.set_params_flat(&flat).unwrap();
        model.feature_stats = FeatureStats { mean: [0.1, -0.2, 0.0, 0.3], std: [1.5, 0.8, 1.0, 1.2] };
        let batch: Vec<Sample> = (0..3)
            .map(|_| Sample { features: std::array::from_fn(|_| rng.next_normal()), label: rng.below(classes) })
            .collect();
        let grad = model.grad_all(&batch).unwrap();
        let mut probe = model.clone();
        for j in 0..flat.len() {
            let mut p = flat.clone();
            p[j] += H;
            probe.set_params_flat(&p).unwrap();
            let plus = probe.batch_loss(&batch).unwrap();
            p[j] -= 2.0 * H;
            probe.set_params_flat(&p).unwrap();
            let minus = probe.batch_loss(&batch).unwrap();
            let fd = (plus - minus) / (2.0 * H);
            worst = worst.max((grad[j] - fd).abs() / grad[j].abs().max(fd.abs()).max(1e-6));
        }
    }
    (worst < 1e-4, format!("{kind}: max relative gradient error vs finite difference = {worst:.2e} (< 1e-4)"))
}

fn micro_identity() -> (bool, String) {
    let mut rng = Xoshiro256::new(65);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let c = 2 + rng.below(10);
        let counts: Vec<u64> = (0..c * c).map(|_| rng.below(50) as u64).collect();
        let total: u64 = counts.iter().sum();
        if total == 0 {
            continue;
        }
        let trace: u64 = (0..c).map(|k| counts[k * c + k]).sum();
        let acc = trace as f64 / total as f64;
        let m = micro_metrics(&ConfusionMatrix::from_counts(c, counts).unwrap()).unwrap();
        for v in [m.acc, m.r, m.f1] {
            worst = worst.max((v - acc).abs());
        }
    }
    (worst < 1e-12, format!("max |micro metric - trace/total| over 1000 confusion matrices = {worst:.2e}"))
}

/// Share of positive/negative pairs ranked correctly, ties counting half.
fn pair_auc(scores: &[f64], truth: &[bool]) -> f64 {
    let (mut hits, mut pairs) = (0.0, 0.0);
    for (i, &ti) in truth.iter().enumerate() {
        for (j, &tj) in truth.iter().enumerate() {
            if ti && !tj {
                pairs += 1.0;
                hits += if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    hits / pairs
}

fn auroc_complement() -> (bool, String) {
    let mut rng = Xoshiro256::new(66);
    let mut worst: f64 = 0.0;
    for _ in 0..300 {
        let n = 4 + rng.below(60);
        let truth: Vec<bool> = (0..n).map(|i| i % 2 == 0 || (i > 1 && rng.below(3) == 0)).collect();
        let scores: Vec<f64> = (0..n).map(|_| (rng.next_f64() * 20.0).round() / 20.0).collect();
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        let flipped: Vec<bool> = truth.iter().map(|t| !t).collect();
        let a = roc_curve(&scores, &truth).unwrap().area;
        worst = worst.max((a + roc_curve(&neg, &truth).unwrap().area - 1.0).abs());
        worst = worst.max((a + roc_curve(&scores, &flipped).unwrap().area - 1.0).abs());
        worst = worst.max((a - pair_auc(&scores, &truth)).abs());
    }
    (worst < 1e-12, format!("max deviation from AUROC(s) + AUROC(-s) = 1 and the pair-count oracle = {worst:.2e}"))
}

fn ranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|v| {
            let below = values.iter().filter(|w| *w < v).count() as f64;
            let equal = values.iter().filter(|w| *w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Exact p by enumerating all sign assignments of the nonzero differences.
fn wilcoxon_oracle(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if d.is_empty() {
        return 1.0;
    }
    let r = ranks(&d.iter().map(|x| x.abs()).collect::<Vec<_>>());
    let total: f64 = r.iter().sum();
    let stat = |signs: &dyn Fn(usize) -> bool| {
        let plus: f64 = (0..d.len()).filter(|&i| signs(i)).map(|i| r[i]).sum();
        plus.min(total - plus)
    };
    let observed = stat(&|i| d[i] > 0.0);
    let n = d.len();
    let hits = (0u32..1 << n).filter(|mask| stat(&|i| mask >> i & 1 == 1) <= observed + 1e-9).count();
    hits as f64 / (1u64 << n) as f64
}

fn wilcoxon_exact() -> (bool, String) {
    let mut rng = Xoshiro256::new(67);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in 1..=10 {
        for _ in 0..40 {
            // Coarse values so ties and zero differences occur.
            let a: Vec<f64> = (0..n).map(|_| rng.below(6) as f64 / 4.0).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.below(6) as f64 / 4.0).collect();
            let p = wilcoxon_signed_rank(&a, &b).unwrap().p;
            worst = worst.max((p - wilcoxon_oracle(&a, &b)).abs());
            cases += 1;
        }
    }
    (worst < 1e-12, format!("max |p - 2^n enumeration oracle| over {cases} samples with n <= 10 = {worst:.2e}"))
}

fn friedman_six() -> (bool, String) {
    // Three models ranked identically on three folds.
    let r = friedman_test(&[vec![0.1, 0.2, 0.3], vec![0.4, 0.5, 0.6], vec![0.7, 0.8, 0.9]]).unwrap();
    let err = (r.p - (-3.0f64).exp()).abs();
    (
        (r.chi2 - 6.0).abs() < 1e-12 && err < 1e-12,
        format!("chi2 = {} (6.0), p = {:.15} vs e^-3 = {:.15}", r.chi2, r.p, (-3.0f64).exp()),
    )
}

fn pca_projector() -> (bool, String) {
    let mut rng = Xoshiro256::new(68);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (m, dim) = (30 + rng.below(40), 6 + rng.below(30));
        let data: Vec<f64> = (0..m * dim).map(|i| rng.next_normal() * (1.0 + (i % dim) as f64 / 3.0)).collect();
        let pca = PcaModel::fit(&data, dim, 4).unwrap();
        let c = &pca.components;
        for i in 0..4 {
            for j in 0..4 {
                let dot: f64 = (0..dim).map(|t| c[i * dim + t] * c[j * dim + t]).sum();
                worst = worst.max((dot - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        // P = C^T C must satisfy P^2 = P.
        let p: Vec<f64> = (0..dim * dim).map(|idx| (0..4).map(|k| c[k * dim + idx / dim] * c[k * dim + idx % dim]).sum()).collect();
        let p2 = matmul(&p, &p, dim);
        worst = worst.max(p.iter().zip(&p2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    (worst < 1e-10, format!("max orthonormality / idempotence defect over 20 random fits = {worst:.2e}"))
}

type Check = (&'static str, fn() -> (bool, String));

#[test]
fn criterion_6_property_suite() {
    let start = Instant::now();
    let checks: Vec<Check> = vec![
        ("6 symplectic", symplectic_identity),
        ("6 statevector norm", statevector_norm),
        ("6 parameter shift", parameter_shift),
        ("6 cv gradient", || model_gradients(ModelKind::Cv)),
        ("6 classical gradient", || model_gradients(ModelKind::Classical)),
        ("6 micro identity", micro_identity),
        ("6 auroc complement", auroc_complement),
        ("6 wilcoxon exact", wilcoxon_exact),
        ("6 friedman chi2=6", friedman_six),
        ("6 pca projector", pca_projector),
    ];
    let mut results = Vec::new();
    for (name, check) in checks {
        let (pass, detail) = check();
        results.push((name.to_string(), verdict(name, pass, detail)));
    }
    let secs = start.elapsed().as_secs_f64();
    results.push(("6 runtime".into(), verdict("6 runtime", secs < 30.0, format!("suite took {secs:.1} s (< 30 s)"))));
    assert_all(&results);
}

// ------------------------------------------------- criterion 7 and noise at 0

#[test]
fn criterion_7_train_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let archive = dir.path().join("toy.npz");
    write_archive(&archive, 2, [60, 12, 24], 70);
    let mut outputs = Vec::new();
    for name in ["first", "second"] {
        let out = dir.path().join(name);
        let res = run(&[
            "train", "--dataset", "toy", "--archive", archive.to_str().unwrap(), "--out", out.to_str().unwrap(),
            "--model", "cv", "--seed", "7", "--epochs", "3", "--batch-size", "8",
        ]);
        assert_eq!(code(&res), 0, "{}", stderr(&res));
        outputs.push(std::fs::read(out.join("metrics.json")).unwrap());
    }
    let same = outputs[0] == outputs[1];
    assert!(verdict("7", same, format!("two seeded train runs give byte-identical metrics.json ({} bytes)", outputs[0].len())));
}

#[test]
fn noise_sweep_zero_sigma_matches_eval() {
    let dir = tempfile::tempdir().unwrap();
    let archive = dir.path().join("toy.npz");
    write_archive(&archive, 2, [60, 12, 24], 71);
    let a = archive.to_str().unwrap();
    let mut checkpoints = Vec::new();
    let mut eval_f1 = BTreeMap::new();
    for kind in ["classical", "dv", "cv"] {
        let out = dir.path().join(kind);
        common::train(&archive, &out, kind, &["--seed", "3"]);
        let ck = out.join("best.ckpt.json");
        let ev = dir.path().join(format!("eval-{kind}"));
        let res = run(&["eval", "--checkpoint", ck.to_str().unwrap(), "--archive", a, "--out", ev.to_str().unwrap()]);
        assert_eq!(code(&res), 0, "{}", stderr(&res));
        let e: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(ev.join("eval.json")).unwrap()).unwrap();
        eval_f1.insert(kind.to_string(), e["f1"].as_f64().unwrap());
        checkpoints.push(ck.to_str().unwrap().to_string());
    }
    let out = dir.path().join("sweep");
    let list = checkpoints.join(",");
    let res = run(&["noise-sweep", "--checkpoint", &list, "--archive", a, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let csv = std::fs::read_to_string(out.join("noise_sweep.csv")).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for line in csv.lines().skip(1).filter(|l| l.starts_with("0.0,")) {
        let f: Vec<&str> = line.split(',').collect();
        let f1: f64 = f[2].parse().unwrap();
        ok &= f1 == eval_f1[f[1]];
        detail.push(format!("{} {f1} vs {}", f[1], eval_f1[f[1]]));
    }
    ok &= detail.len() == 3;
    assert!(verdict("noise sigma=0", ok, format!("sweep F1 at sigma 0 equals eval F1 exactly: {}", detail.join(", "))));
}

// -------------------------------------------------- real-archive criteria

fn medmnist_dir() -> PathBuf {
    let dir = std::env::var_os("MEDMNIST_DIR").expect("set MEDMNIST_DIR to the directory holding the MedMNIST .npz archives");
    PathBuf::from(dir)
}

fn load_real(name: &str) -> Arc<Splits> {
    static CACHE: OnceLock<Mutex<BTreeMap<String, Arc<OnceLock<Arc<Splits>>>>>> = OnceLock::new();
    let cell = CACHE.get_or_init(Default::default).lock().unwrap().entry(name.to_string()).or_default().clone();
    cell.get_or_init(|| Arc::new(load_archive(&archive_path(name, None, &medmnist_dir()), name).unwrap())).clone()
}

#[derive(Debug)]
struct Outcome {
    fold_f1: Vec<f64>,
    test_acc: f64,
    test_f1: f64,
    auroc: Option<f64>,
    auprc: Option<f64>,
    model: HybridModel,
    pca: PcaModel,
}

/// Default 3-fold training of one model, shared between tests of this binary.
fn outcome(dataset: &str, kind: ModelKind, seed: u64) -> Arc<Outcome> {
    type Cell = Arc<OnceLock<Arc<Outcome>>>;
    static CACHE: OnceLock<Mutex<BTreeMap<(String, ModelKind, u64), Cell>>> = OnceLock::new();
    let cell = CACHE.get_or_init(Default::default).lock().unwrap().entry((dataset.to_string(), kind, seed)).or_default().clone();
    cell.get_or_init(|| {
        let splits = load_real(dataset);
        let config = TrainConfig { seed, ..TrainConfig::default() };
        let start = Instant::now();
        let cv = cross_validate(kind, &splits.train, &config).unwrap();
        let best = &cv.folds[cv.best_fold];
        let test = evaluate(&best.model, &best.pca, &splits.test).unwrap().report;
        println!("  {dataset} {kind} seed {seed}: trained in {:.0} s", start.elapsed().as_secs_f64());
        Arc::new(Outcome {
            fold_f1: cv.folds.iter().map(|f| f.val_metrics.f1).collect(),
            test_acc: test.metrics.acc,
            test_f1: test.metrics.f1,
            auroc: test.auroc,
            auprc: test.auprc,
            model: best.model.clone(),
            pca: best.pca.clone(),
        })
    })
    .clone()
}

/// Trains the three models of `dataset` concurrently.
fn all_outcomes(dataset: &str, seed: u64) -> BTreeMap<ModelKind, Arc<Outcome>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = ModelKind::ALL.iter().map(|&k| s.spawn(move || (k, outcome(dataset, k, seed)))).collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    })
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

#[test]
#[ignore = "needs the MedMNIST archives in MEDMNIST_DIR"]
fn criterion_1_pca_variance() {
    let mut results = Vec::new();
    for (name, target) in [("pneumonia", 0.60), ("breast", 0.60), ("organa", 0.48)] {
        let splits = load_real(name);
        let pca = PcaModel::fit_pixels(&splits.train.images, splits.train.dim, 4).unwrap();
        let got = pca.cumulative_ratio();
        let pass = within(got, target, 0.05);
        results.push((format!("1 {name}"), verdict(&format!("1 [{name}]"), pass, format!("cumulative ratio {got:.4} (target {target} +/- 0.05)"))));
    }
    assert_all(&results);
}

fn reproduction(criterion: &str, dataset: &str, acc_targets: [(ModelKind, f64); 3], acc_tol: f64, areas: bool) -> Vec<(String, bool)> {
    let outcomes = all_outcomes(dataset, 0);
    let mut results = Vec::new();
    for (kind, target) in acc_targets {
        let o = &outcomes[&kind];
        let label = format!("{criterion} [{dataset} {kind} acc]");
        let pass = within(o.test_acc, target, acc_tol);
        results.push((label.clone(), verdict(&label, pass, format!("test micro-ACC {:.4} (target {target} +/- {acc_tol})", o.test_acc))));
        if areas {
            for (what, value, target) in [("auroc", o.auroc, 0.92), ("auprc", o.auprc, 0.93)] {
                let label = format!("{criterion} [{dataset} {kind} {what}]");
                let pass = value.is_some_and(|v| within(v, target, 0.04));
                results.push((label.clone(), verdict(&label, pass, format!("test {what} {value:?} (target {target} +/- 0.04)"))));
            }
        }
    }
    results
}

#[test]
#[ignore = "needs the MedMNIST archives in MEDMNIST_DIR"]
fn criterion_2_pneumonia_reproduction() {
    let targets = [(ModelKind::Cv, 0.8429), (ModelKind::Dv, 0.8526), (ModelKind::Classical, 0.8542)];
    assert_all(&reproduction("2", "pneumonia", targets, 0.05, true));
}

#[test]
#[ignore = "needs the MedMNIST archives in MEDMNIST_DIR"]
fn criterion_3_breast_reproduction() {
    let targets = [(ModelKind::Cv, 0.7564), (ModelKind::Dv, 0.7372), (ModelKind::Classical, 0.7628)];
    assert_all(&reproduction("3", "breast", targets, 0.07, false));
}

#[test]
#[ignore = "needs the MedMNIST archives in MEDMNIST_DIR"]
fn criterion_4_organa_reproduction() {
    let targets = [(ModelKind::Cv, 0.4563), (ModelKind::Dv, 0.3915), (ModelKind::Classical, 0.4737)];
    let mut results = reproduction("4", "organa", targets, 0.07, false);
    let mut wins = 0;
    let mut detail = Vec::new();
    for seed in 0..3 {
        let (cv, dv) = (outcome("organa", ModelKind::Cv, seed), outcome("organa", ModelKind::Dv, seed));
        wins += usize::from(cv.test_f1 > dv.test_f1);
        detail.push(format!("seed {seed}: cv {:.4} / dv {:.4}", cv.test_f1, dv.test_f1));
    }
    let label = "4 [organa cv > dv F1]".to_string();
    results.push((label.clone(), verdict(&label, wins >= 2, format!("{wins}/3 seeds ({})", detail.join("; ")))));
    assert_all(&results);
}

#[test]
#[ignore = "needs the MedMNIST archives in MEDMNIST_DIR"]
fn criterion_5_statistical_conclusion() {
    let mut results = Vec::new();
    for dataset in ["pneumonia", "breast", "organa"] {
        let o = all_outcomes(dataset, 0);
        let f1 = |k: ModelKind| o[&k].fold_f1.clone();
        let report = compare_models(&f1(ModelKind::Classical), &f1(ModelKind::Dv), &f1(ModelKind::Cv), 0.05).unwrap();
        let pairs: Vec<String> = report.pairwise.iter().map(|t| format!("{} p={:.4}", t.pair, t.p)).collect();
        let label = format!("5 [{dataset}]");
        let pass = report.all_retained() && (report.alpha_corrected - 0.0167).abs() < 5e-5;
        let detail = format!(
            "Friedman p={:.4}, {} at alpha {:.4}: H0 {}",
            report.friedman_p,
            pairs.join(", "),
            report.alpha_corrected,
            if report.all_retained() { "retained" } else { "rejected" }
        );
        results.push((label.clone(), verdict(&label, pass, detail)));
    }
    assert_all(&results);
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
#[ignore = "needs the MedMNIST archives in MEDMNIST_DIR"]
fn noise_degrades_pneumonia_f1() {
    let splits = load_real("pneumonia");
    let outcomes = all_outcomes("pneumonia", 0);
    let grid = noise_sweep_grid();
    let mut results = Vec::new();
    for kind in ModelKind::ALL {
        let o = &outcomes[&kind];
        let (mut low, mut high) = (Vec::new(), Vec::new());
        for &sigma in &grid {
            let noisy = inject_gaussian_noise(&splits.test, sigma, 0, false).unwrap();
            let f1 = evaluate(&o.model, &o.pca, &noisy).unwrap().report.metrics.f1;
            if sigma <= 0.3 + 1e-12 {
                low.push(f1);
            }
            if sigma >= 0.5 - 1e-12 {
                high.push(f1);
            }
        }
        let label = format!("noise [pneumonia {kind}]");
        let (l, h) = (mean(&low), mean(&high));
        results.push((label.clone(), verdict(&label, h < l, format!("mean F1 sigma in [0.5, 1.0] = {h:.4} < sigma in [0, 0.3] = {l:.4}"))));
    }
    assert_all(&results);
}

#[test]
fn real_data_criteria_are_reported() {
    // Keeps the skipped criteria visible in ordinary test runs.
    let present = std::env::var_os("MEDMNIST_DIR").is_some_and(|d| Path::new(&d).is_dir());
    for c in ["1", "2", "3", "4", "5", "noise"] {
        if !present {
            println!("SKIP criterion {c}: MEDMNIST_DIR not set; run the ignored acceptance tests with the archives");
        }
    }
}
