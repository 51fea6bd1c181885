//! End-to-end acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use vtgrasp::check::{self, CheckResult};
use vtgrasp::contact::{data_collection_variant, solve_contact, ContactProblem, SolverOptions};
use vtgrasp::harness::{run_batch, Experiment, ExperimentConfig, SceneSource};
use vtgrasp::kinematics::HandArmModel;
use vtgrasp::preshape::{plan_preshape, PreshapeParams};
use vtgrasp::sdf::{EstimatedSdf, SdfScene};
use vtgrasp::tactile::Variant;

const SEED: u64 = 20240;

struct Outcome {
    passed: bool,
    detail: String,
    elapsed: Duration,
}

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(rel)
}

fn from_check(r: CheckResult, budget: Option<Duration>) -> Outcome {
    let in_time = budget.map_or(true, |b| r.elapsed < b);
    let mut detail = r.detail;
    if let Some(b) = budget {
        detail.push_str(&format!("; runtime budget {} s", b.as_secs()));
    }
    Outcome {
        passed: r.passed && in_time,
        detail,
        elapsed: r.elapsed,
    }
}

fn timed(body: impl FnOnce() -> (bool, String)) -> Outcome {
    let t = Instant::now();
    let (passed, detail) = body();
    Outcome {
        passed,
        detail,
        elapsed: t.elapsed(),
    }
}

fn contact_solve_convergence() -> Outcome {
    timed(|| {
        let model = HandArmModel::default_model();
        let mut parts = Vec::new();
        let mut passed = true;
        for name in ["sphere", "box"] {
            let scene = SdfScene::load(data(&format!("scenes/{name}.toml"))).expect("bundled scene loads");
            let est = EstimatedSdf::exact(scene);
            let (mut reached, mut zero_reached, mut slowest) = (0, 0, Duration::ZERO);
            let seeds = 50;
            for seed in 0..seeds {
                let Some(cand) = plan_preshape(&model, &est, &PreshapeParams::default(), 32, seed) else { continue };
                let problem = ContactProblem::new(&model, &est, &cand.q0).unwrap();
                let t = Instant::now();
                let sol = solve_contact(&problem, &SolverOptions::default());
                slowest = slowest.max(t.elapsed());
                if sol.max_tip_sdf() <= 2e-3 {
                    reached += 1;
                }
                if data_collection_variant(&problem, &SolverOptions::default()).max_tip_sdf() <= 2e-3 {
                    zero_reached += 1;
                }
            }
            let rate = reached as f64 / seeds as f64;
            passed &= rate >= 0.9 && slowest < Duration::from_secs(1);
            parts.push(format!(
                "{name}: {reached}/{seeds} within 2 mm (alpha=0 variant {zero_reached}/{seeds}), slowest solve {:.0} ms",
                slowest.as_secs_f64() * 1e3
            ));
        }
        (passed, parts.join("; "))
    })
}

/// Two-sided sign test p-value for `wins` against `losses` (ties dropped).
fn sign_test(wins: usize, losses: usize) -> f64 {
    let n = wins + losses;
    if n == 0 {
        return 1.0;
    }
    let k = wins.max(losses);
    let mut tail = 0.0;
    let mut c = 1.0f64; // C(n, i)
    for i in 0..=n {
        if i >= k {
            tail += c;
        }
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    (2.0 * tail / 2f64.powi(n as i32)).min(1.0)
}

fn fingertip_statistics() -> Outcome {
    timed(|| {
        let mut cfg = ExperimentConfig::new(SceneSource::File(data("scenes/sphere.toml")));
        cfg.trials = 100;
        cfg.seed = 0;
        cfg.perturbation.offset_bias = -0.008;
        let exp = Experiment::new(cfg, None).expect("config is valid");
        let records = run_batch(&exp, Some(1)).expect("batch runs");
        let per = |v: Variant| -> Vec<&vtgrasp::harness::EpisodeRecord> { records.iter().filter(|r| r.variant == v).collect() };
        let mean = |v: Variant, f: &dyn Fn(&vtgrasp::harness::EpisodeRecord) -> f64| {
            let rs = per(v);
            rs.iter().map(|r| f(r)).sum::<f64>() / rs.len() as f64
        };
        let tips = |r: &vtgrasp::harness::EpisodeRecord| r.fingertips_in_contact as f64;
        let dist = |r: &vtgrasp::harness::EpisodeRecord| r.disturbance.score() as f64;
        let (ours, ng, b5) = (mean(Variant::Ours, &tips), mean(Variant::NoGradient, &tips), mean(Variant::OpenLoopB5, &tips));
        let (d_ours, d_b1) = (mean(Variant::Ours, &dist), mean(Variant::HeuristicB1, &dist));
        let (mut wins, mut losses) = (0, 0);
        for (a, b) in per(Variant::Ours).iter().zip(per(Variant::OpenLoopB5)) {
            assert_eq!(a.trial, b.trial);
            match a.fingertips_in_contact.cmp(&b.fingertips_in_contact) {
                std::cmp::Ordering::Greater => wins += 1,
                std::cmp::Ordering::Less => losses += 1,
                std::cmp::Ordering::Equal => {}
            }
        }
        let p = sign_test(wins, losses);
        let passed = ours >= ng && ng >= b5 && wins > losses && p < 0.05 && d_ours <= d_b1;
        (
            passed,
            format!(
                "mean tips ours {ours:.2} >= no_gradient {ng:.2} >= open_loop_b5 {b5:.2}; ours vs b5 {wins} wins / {losses} losses, sign test p = {p:.2e}; disturbance ours {d_ours:.2} <= heuristic_b1 {d_b1:.2}"
            ),
        )
    })
}

fn reproducibility() -> Outcome {
    timed(|| {
        let dir = tempfile::tempdir().expect("temp dir");
        let config = data("configs/sphere_biased.toml");
        let run = |out: &Path, threads: &str| {
            let status = Command::new(env!("CARGO_BIN_EXE_vtgrasp"))
                .args(["batch", "--config"])
                .arg(&config)
                .args(["--trials", "8", "--seed", "11", "--threads", threads, "--out"])
                .arg(out)
                .output()
                .expect("binary runs");
            status.status.success()
        };
        let (a, b) = (dir.path().join("a"), dir.path().join("b"));
        if !(run(&a, "1") && run(&b, "4")) {
            return (false, "batch exited with an error".into());
        }
        let mut same = true;
        let mut sizes = Vec::new();
        for file in ["records.csv", "summary.csv"] {
            let x = std::fs::read(a.join(file)).unwrap_or_default();
            let y = std::fs::read(b.join(file)).unwrap_or_default();
            same &= !x.is_empty() && x == y;
            sizes.push(format!("{file} {} bytes", x.len()));
        }
        (same, format!("two batch runs (1 and 4 threads): {} {}", sizes.join(", "), if same { "identical" } else { "differ" }))
    })
}

fn main() {
    let criteria: Vec<(&str, Box<dyn FnOnce() -> Outcome>)> = vec![
        ("jacobians", Box::new(|| from_check(check::jacobians(100, SEED), Some(Duration::from_secs(10))))),
        ("sdf oracles", Box::new(|| from_check(check::sdf_oracles(SEED), None))),
        ("gjk", Box::new(|| from_check(check::gjk_oracle(SEED), None))),
        ("contact solve", Box::new(contact_solve_convergence)),
        ("alpha schedule", Box::new(|| from_check(check::alpha_schedule(10, SEED), None))),
        ("controller", Box::new(|| from_check(check::controller_state_machine(), Some(Duration::from_secs(5))))),
        ("fingertip statistics", Box::new(|| {
            let mut o = fingertip_statistics();
            o.passed &= o.elapsed < Duration::from_secs(300);
            o
        })),
        ("trajectories", Box::new(|| from_check(check::trajectories(100, SEED), None))),
        ("squeeze", Box::new(|| from_check(check::squeeze_deltas(SEED), None))),
        ("force closure", Box::new(|| from_check(check::force_closure_oracle(SEED), None))),
        ("reproducibility", Box::new(reproducibility)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let o = run();
        if !o.passed {
            failed += 1;
        }
        println!(
            "{:>2}. {} {:<21} {} [{:.1} s]",
            i + 1,
            if o.passed { "PASS" } else { "FAIL" },
            name,
            o.detail,
            o.elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} criteria failed", failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
