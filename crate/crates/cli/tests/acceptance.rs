//! Acceptance harness: one PASS/FAIL line per criterion.
//!
//! Criteria 3-6 run through the `apselect` binary with the configurations in
//! `configs/`; criterion 8 runs them a second time and compares the output
//! trees byte for byte.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use besicovitch::invariants::run_invariants;
use besicovitch::metrics::{besicovitch_distance, fourier_bohr_many, stepanov_distance, AveragingScheme};
use besicovitch::{FrequencyBasis, FuncExpr, MetricSpace, TrigBuilder};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

/// Runs the binary and returns its exit code and wall time.
fn run_cli(scenario: &str, cfg: &str, out: &Path) -> (i32, Duration) {
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_apselect"))
        .args([scenario, "--config"])
        .arg(config(cfg))
        .arg("--out")
        .arg(out)
        .status()
        .expect("binary runs");
    (status.code().unwrap_or(-1), start.elapsed())
}

fn report(dir: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join("report.json")).expect("report exists")).expect("report parses")
}

fn cert(r: &Value, name: &str) -> (f64, f64, bool) {
    let c = r["certificates"]
        .as_array()
        .and_then(|cs| cs.iter().find(|c| c["name"] == name))
        .unwrap_or_else(|| panic!("certificate {name} missing"));
    (c["measured"].as_f64().unwrap_or(f64::NAN), c["bound"].as_f64().unwrap_or(f64::NAN), c["passed"] == true)
}

fn standard() -> AveragingScheme {
    AveragingScheme::new(vec![100.0, 200.0, 400.0, 800.0, 1600.0, 3200.0, 6400.0, 10000.0], 1e-3, 3).unwrap()
}

/// Random polynomial `sum a_k sin(l_k t) + c_k cos(l_k t)` with frequencies
/// `l = k1 + k2 sqrt(2)`, `l >= 1` and pairwise gaps of at least 1, scaled so
/// that the exponential coefficients have total modulus 1.
fn random_poly(rng: &mut ChaCha8Rng, basis: &Arc<FrequencyBasis>) -> (FuncExpr, Vec<(f64, Complex64)>) {
    let n = rng.gen_range(1..=8);
    let mut freqs: Vec<(Vec<i64>, f64)> = Vec::new();
    while freqs.len() < n {
        let v = vec![rng.gen_range(-8..=8), rng.gen_range(-8..=8)];
        let l = v[0] as f64 + v[1] as f64 * 2f64.sqrt();
        if l >= 1.0 && freqs.iter().all(|(_, m)| (m - l).abs() >= 1.0) {
            freqs.push((v, l));
        }
    }
    let raw: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    // e^{ilt} coefficient of a sin + c cos is (c - i a) / 2, with a mirror at -l
    let total: f64 = raw.iter().map(|(a, c)| (a * a + c * c).sqrt()).sum();
    let mut b = TrigBuilder::new(basis.clone(), 1);
    let mut exact = Vec::new();
    for ((v, l), (a, c)) in freqs.iter().zip(&raw) {
        let (a, c) = (a / total, c / total);
        b = b.sin(0, v, a).cos(0, v, c);
        exact.push((*l, Complex64::new(c / 2.0, -a / 2.0)));
    }
    (FuncExpr::trig(b.build().unwrap()), exact)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let scheme = standard();
    let b1 = Arc::new(FrequencyBasis::new(vec![1.0]).unwrap());
    let space = MetricSpace::euclidean(1);
    let sin = FuncExpr::sin(&b1, &[1], 1.0).unwrap();
    let zero = FuncExpr::constant(&b1, &[0.0]).unwrap();
    let d2 = besicovitch_distance(&sin, &zero, 2.0, &space, &scheme).unwrap().value;
    // |sin| = dist(sin, 0); its mean is 2/pi
    let abs_sin = sin.dist_to(&[0.0], besicovitch::PointMetric::Euclidean).unwrap();
    let d1 = besicovitch_distance(&abs_sin, &zero, 1.0, &space, &scheme).unwrap().value;
    let (e2, e1) = ((d2 - FRAC_1_SQRT_2).abs(), (d1 - 2.0 / PI).abs());

    let basis = Arc::new(FrequencyBasis::new(vec![1.0, 2f64.sqrt()]).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let tol = 2.0 / scheme.b_max();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (f, exact) = random_poly(&mut rng, &basis);
        let lambdas: Vec<f64> = exact.iter().map(|e| e.0).collect();
        let got = fourier_bohr_many(&f, &lambdas, &scheme).unwrap();
        for (g, (_, c)) in got.iter().zip(&exact) {
            worst = worst.max((g.value[0] - c).norm());
        }
    }
    let elapsed = start.elapsed();
    let passed = e2 < 1e-3 && e1 < 1e-3 && worst < tol && elapsed < Duration::from_secs(30);
    outcome(
        passed,
        format!(
            "|D2(sin,0) - 1/sqrt2| = {e2:.2e}, |D1(|sin|,0) - 2/pi| = {e1:.2e}, worst coefficient error {worst:.2e} (< {tol:.0e}), {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let scheme = AveragingScheme::new(vec![100.0, 200.0, 400.0], 1.0 / 128.0, 2).unwrap();
    let basis = Arc::new(FrequencyBasis::new(vec![1.0, 2f64.sqrt(), 3f64.sqrt()]).unwrap());
    let space = MetricSpace::euclidean(1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut excess = f64::NEG_INFINITY;
    for k in 0..100 {
        let p = if k % 2 == 0 { 1.0 } else { 2.0 };
        let poly = |rng: &mut ChaCha8Rng| {
            let mut b = TrigBuilder::new(basis.clone(), 1);
            for _ in 0..rng.gen_range(1..=5) {
                let v: Vec<i64> = (0..3).map(|_| rng.gen_range(-3..=3)).collect();
                b = b.sin(0, &v, rng.gen_range(-1.0..1.0)).cos(0, &v, rng.gen_range(-1.0..1.0));
            }
            FuncExpr::trig(b.build().unwrap())
        };
        let (f, g) = (poly(&mut rng), poly(&mut rng));
        let db = besicovitch_distance(&f, &g, p, &space, &scheme).unwrap().value;
        let ds = stepanov_distance(&f, &g, p, &space, &scheme).unwrap().value;
        excess = excess.max(db - ds);
    }
    outcome(excess <= 1e-6, format!("max D_B - D_S over 100 pairs = {excess:.3e}"))
}

fn criterion_3(out: &Path) -> Outcome {
    let (code, t) = run_cli("perturb", "lemma_single_stage.json", out);
    let r = report(out);
    let p = &r["results"]["params"];
    let n = p["N"].as_u64().unwrap_or(0);
    let eps_prime = p["eps_prime"].as_f64().unwrap_or(f64::NAN);
    let delta = p["delta"].as_f64().unwrap_or(f64::NAN);
    // closed forms for eps = 1/2, Delta = 1
    let want_delta = 2.0 * (PI / 8.0).sin() * (PI * 0.0125 / 2.0).sin() / 3.0;
    let (kappa, bound, ok) = cert(&r, "level_density");
    let passed = code == 0
        && n == 4
        && (eps_prime - 0.0125).abs() < 1e-15
        && (delta - want_delta).abs() < 1e-15
        && (delta - 0.0050089).abs() < 1e-7
        && ok
        && (bound - 0.52).abs() < 1e-12;
    outcome(
        passed,
        format!("N = {n}, eps' = {eps_prime}, delta = {delta:.10}, kappa = {kappa:.5} (< {bound}), {:.1} s", t.as_secs_f64()),
    )
}

fn criterion_4(out: &Path) -> Outcome {
    let (code, t) = run_cli("perturb", "perturbation_series.json", out);
    let r = report(out);
    let (sup, _, sup_ok) = cert(&r, "sup_norm");
    let (drift, _, drift_ok) = cert(&r, "periodicity");
    let mut kappas = Vec::new();
    let mut ok = sup_ok && drift_ok && sup < 0.3 && drift <= 1e-12;
    for j in 0..3 {
        let (k, bound, pass) = cert(&r, &format!("level_density_{j}"));
        ok &= pass && k < 0.5f64.powi(j + 1) + 0.02 && (bound - (0.5f64.powi(j + 1) + 0.02)).abs() < 1e-15;
        kappas.push(format!("{k:.2e}"));
    }
    let b = r["results"]["series"]["b"].as_f64().unwrap_or(f64::NAN);
    let passed = code == 0 && ok && b == TAU && t < Duration::from_secs(120);
    outcome(
        passed,
        format!("sup|g| = {sup:.4}, period drift = {drift:.1e}, kappa_j = [{}], {:.1} s", kappas.join(", "), t.as_secs_f64()),
    )
}

fn criterion_5(out: &Path) -> Outcome {
    let (code, t) = run_cli("partition", "partition_torus.json", out);
    let r = report(out);
    let res = &r["results"];
    let decided = res["decided"].as_u64().unwrap_or(0);
    let outside = res["outside"].as_u64().unwrap_or(0);
    let (far, _, a_ok) = cert(&r, "approximation");
    let (overlaps, _, d_ok) = cert(&r, "disjointness");
    let (resid, _, r_ok) = cert(&r, "residual");
    let (sep, _, s_ok) = cert(&r, "separation");
    let passed = code == 0
        && decided + outside == 100_000
        && far == 0.0
        && overlaps == 0.0
        && resid < 0.05
        && sep >= 0.995
        && a_ok
        && d_ok
        && r_ok
        && s_ok;
    outcome(
        passed,
        format!(
            "{} centers, {decided} decided samples with {far} far, {overlaps} overlaps, residual {resid:.2e}, separation {:.4} of {outside}, {:.1} s",
            res["centers"], sep, t.as_secs_f64()
        ),
    )
}

fn criterion_6(out: &Path) -> Outcome {
    let (code, t) = run_cli("select", "selection_two_branches.json", out);
    let r = report(out);
    let eps = 0.3;
    let gamma = |n: i32| 0.5f64.powi(n) / 10.0;
    let mut ok = code == 0;
    let mut steps = Vec::new();
    for n in 2..=3 {
        let (step, bound, pass) = cert(&r, &format!("chain_step_{n}"));
        ok &= pass && step < 2.0 * (gamma(n - 1) + gamma(n)) * eps && (bound - 2.0 * (gamma(n - 1) + gamma(n)) * eps).abs() < 1e-15;
        steps.push(format!("{step:.4} < {bound:.4}"));
    }
    let (memb, _, m_ok) = cert(&r, "membership");
    let (near, _, n_ok) = cert(&r, "nearness");
    let tail = r["results"]["tail_bound"].as_f64().unwrap_or(f64::NAN);
    let long: f64 = (4..200).map(|n| gamma(n) + gamma(n + 1)).sum::<f64>() * 2.0 * eps;
    let passed = ok && m_ok && n_ok && memb < 0.02 && near < 0.02 && (tail - long).abs() < 1e-15;
    outcome(
        passed,
        format!(
            "steps [{}], membership {memb:.2e}, nearness {near:.2e}, tail_bound {tail} (sum {long:.17}), {:.1} s",
            steps.join(", "),
            t.as_secs_f64()
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut failed = Vec::new();
    let mut count = 0;
    for seed in [11, 22, 33, 44, 55] {
        for o in run_invariants(seed).unwrap() {
            count += 1;
            if !o.passed {
                failed.push(format!("{}@{seed}: {}", o.name, o.detail));
            }
        }
    }
    outcome(failed.is_empty(), format!("{count} checks over 5 seeds, failures: {failed:?}"))
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .expect("output dir")
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn criterion_8(first: &[(&str, &str, PathBuf)], scratch: &Path) -> Outcome {
    let mut diffs = Vec::new();
    let mut files = 0;
    for (scenario, cfg, dir) in first {
        let again = scratch.join(format!("again_{cfg}"));
        run_cli(scenario, cfg, &again);
        let (a, b) = (tree(dir), tree(&again));
        files += a.len();
        if a != b {
            diffs.push(cfg.to_string());
        }
    }
    outcome(diffs.is_empty() && files > 0, format!("{files} files compared, differing runs: {diffs:?}"))
}

fn main() {
    let scratch = tempfile::tempdir().expect("temp dir");
    let dir = |name: &str| scratch.path().join(name);
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "metric oracle suite", criterion_1()),
        (2, "Besicovitch below Stepanov", criterion_2()),
    ];
    let runs = [
        ("perturb", "lemma_single_stage.json", dir("c3")),
        ("perturb", "perturbation_series.json", dir("c4")),
        ("partition", "partition_torus.json", dir("c5")),
        ("select", "selection_two_branches.json", dir("c6")),
    ];
    results.push((3, "single-stage perturbation", criterion_3(&runs[0].2)));
    results.push((4, "perturbation series", criterion_4(&runs[1].2)));
    results.push((5, "partition", criterion_5(&runs[2].2)));
    results.push((6, "selection", criterion_6(&runs[3].2)));
    results.push((7, "invariant suites", criterion_7()));
    results.push((8, "reproducibility", criterion_8(&runs, scratch.path())));

    let mut failures = 0;
    for (k, name, o) in &results {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("{tag} criterion {k} ({name}): {}", o.detail);
        failures += usize::from(!o.passed);
    }
    println!("{} of {} criteria passed", results.len() - failures, results.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
