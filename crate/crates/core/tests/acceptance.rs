//! Acceptance suite on the `desk3` reservoir instance. Prints one PASS/FAIL
//! line per criterion and exits nonzero if any fails.

mod common;

use common::{projected_gradient_oracle, random_feasible_lp};
use mslp_core::fixtures::{desk3, desk3_deterministic};
use mslp_core::instance::MslpInstance;
use mslp_core::io::{run, Algorithm, RunConfig, PROBE_ITERATIONS};
use mslp_core::linalg::dot;
use mslp_core::lp::{basis_reconstruct, basis_reconstruct_with, solve_lp, solve_qp, LpStatus, QpProblem};
use mslp_core::oracle::{
    box_probes, check_minorants, hoffman_ratio, nested_value, root_decision_value, solve_instance,
    ProbeReport,
};
use mslp_core::process::SupportSampler;
use mslp_core::sddp::{sddp_run, SddpConfig};
use mslp_core::sdlp::{bfp_feasible, bfp_select, sdlp_iterate, MinorantPool, SdlpConfig, SdlpRunState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use std::time::{Duration, Instant};

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const SDLP_ITERATIONS: usize = 2000;
/// Iterations at which the BFP argmin is re-derived by enumeration.
const BFP_CHECK_EVERY: usize = 100;

struct Verdict {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

/// Everything the SDLP criteria need from one seeded run.
struct SeedRun {
    seed: u64,
    run: SdlpRunState,
    true_value: f64,
    trace_range: f64,
    probes: ProbeReport,
    argmin_checks: usize,
    argmin_failures: usize,
    lazy_scale_error: f64,
    elapsed: Duration,
}

fn criterion_1() -> (bool, String) {
    let mut worst = 0.0_f64;
    for a in 0..3 {
        for b in 0..3 {
            let inst = desk3_deterministic(&[a, b]);
            let ext = solve_instance(&inst).expect("extensive form").value;
            let (chained, _) =
                nested_value(&inst, &inst.support, 0, &inst.initial_state, inst.root_observation(), 1e-12)
                    .expect("chained stage LPs");
            worst = worst.max((ext - chained).abs());
        }
    }
    (worst <= 1e-8, format!("max |extensive − chained| over 9 deterministic instances = {:.3e}", worst))
}

fn criterion_2(inst: &MslpInstance, optimum: f64) -> (bool, String) {
    let res = sddp_run(inst, &SddpConfig::default()).expect("sddp");
    let lb = *res.lower_bounds.last().unwrap();
    let rel = (lb - optimum).abs() / optimum.abs();
    let monotone = res.lower_bounds.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0));
    (
        rel <= 1e-6 && monotone && res.iterations <= 200,
        format!(
            "{} iterations, lower bound {:.8}, relative gap {:.2e}, nondecreasing {}",
            res.iterations, lb, rel, monotone
        ),
    )
}

/// Recomputes the BFP choice of every non-terminal stage along the
/// incumbent path by scanning the whole basis pool.
fn argmin_check(inst: &MslpInstance, before: &SdlpRunState, after: &SdlpRunState, path_obs: &[usize]) -> bool {
    let mut ok = true;
    for t in 1..after.horizon {
        let x = &after.incumbent.states[t];
        let chosen = &after.incumbent.decisions[t];
        let obs = &inst.support[t].observations[path_obs[t - 1]];
        let rhs = obs.rhs_at(x);
        let n = inst.stages[t].decision_dim();
        let mut best = f64::INFINITY;
        for e in &before.stages[t].bases.entries {
            let u = basis_reconstruct_with(&e.basis, &e.inverse, n, &rhs);
            if bfp_feasible(inst, t, &rhs, &u) {
                best = best.min(before.approx_value(inst, t, x, &u).unwrap());
            }
        }
        if best.is_infinite() {
            // No pooled basis was feasible; the stage LP was used instead.
            continue;
        }
        let got = before.approx_value(inst, t, x, chosen).unwrap();
        let via_select = bfp_select(inst, before, t, obs, x).unwrap().map(|c| c.value);
        ok &= (got - best).abs() <= 1e-10 * (1.0 + best.abs());
        ok &= via_select.is_some_and(|v| (v - best).abs() <= 1e-10 * (1.0 + best.abs()));
    }
    ok
}

fn sdlp_seed(inst: &MslpInstance, seed: u64) -> SeedRun {
    let start = Instant::now();
    let mut run = SdlpRunState::new(inst, SdlpConfig::default()).expect("config");
    let mut src = SupportSampler::new(inst, seed);
    let mut probe_rng = ChaCha8Rng::seed_from_u64(seed ^ 0xacce);
    let mut probes = ProbeReport::default();
    let mut incumbent_trace = Vec::with_capacity(SDLP_ITERATIONS);
    let (mut argmin_checks, mut argmin_failures) = (0, 0);
    for k in 1..=SDLP_ITERATIONS {
        let probe = PROBE_ITERATIONS.contains(&k);
        let argmin = k % BFP_CHECK_EVERY == 0 || probe;
        let before = (probe || argmin).then(|| run.clone());
        let upcoming = argmin.then(|| {
            let mut peek = src.clone();
            peek.sample_indices()
        });
        let fallbacks = run.stats.bfp_fallbacks;
        sdlp_iterate(inst, &mut run, &mut src).expect("sdlp iteration");
        incumbent_trace.push(run.last.incumbent_value);
        if let Some(prev) = before {
            if probe {
                let p = box_probes(&run, inst, 20, 0.0, 12.0, &mut probe_rng);
                let rep = check_minorants(inst, &prev, &run, &p).expect("probe check");
                probes.probes += rep.probes;
                probes.lower_bound += rep.lower_bound;
                probes.monotonicity += rep.monotonicity;
                probes.terminal_exact += rep.terminal_exact;
                probes.max_excess = probes.max_excess.max(rep.max_excess);
            }
            if argmin && run.stats.bfp_fallbacks == fallbacks {
                argmin_checks += 1;
                if !argmin_check(inst, &prev, &run, upcoming.as_deref().unwrap()) {
                    argmin_failures += 1;
                }
            }
        }
    }
    // Every stored scale must equal the closed-form product.
    let k = run.iteration;
    let mut lazy_scale_error = 0.0_f64;
    for t in 1..=run.horizon {
        for p in &run.stages[t].minorants.pieces {
            let expect = (p.origin as f64 / k as f64).powi((run.horizon - t) as i32);
            lazy_scale_error = lazy_scale_error.max((p.scale - expect).abs());
        }
    }
    let tail = &incumbent_trace[incumbent_trace.len() - 100..];
    let hi = tail.iter().cloned().fold(f64::MIN, f64::max);
    let lo = tail.iter().cloned().fold(f64::MAX, f64::min);
    let true_value = root_decision_value(inst, &run.root_incumbent).expect("true value");
    SeedRun {
        seed,
        run,
        true_value,
        trace_range: hi - lo,
        probes,
        argmin_checks,
        argmin_failures,
        lazy_scale_error,
        elapsed: start.elapsed(),
    }
}

fn criterion_3(runs: &[SeedRun], optimum: f64, wall: Duration) -> (bool, String) {
    let mut good = 0;
    let mut detail = Vec::new();
    for r in runs {
        let gap = (r.true_value - optimum) / optimum;
        let stable = r.trace_range < 0.01 * optimum;
        if gap.abs() <= 0.01 && stable {
            good += 1;
        }
        detail.push(format!(
            "seed {}: gap {:+.3}%, tail range {:.2e}, {:.1}s",
            r.seed,
            100.0 * gap,
            r.trace_range,
            r.elapsed.as_secs_f64()
        ));
    }
    let in_time = wall < Duration::from_secs(300);
    (good >= 4 && in_time, format!("{}/5 seeds within 1% and stable; {}", good, detail.join("; ")))
}

fn criterion_4(runs: &[SeedRun]) -> (bool, String) {
    let mut total = ProbeReport::default();
    for r in runs {
        total.probes += r.probes.probes;
        total.lower_bound += r.probes.lower_bound;
        total.monotonicity += r.probes.monotonicity;
        total.terminal_exact += r.probes.terminal_exact;
        total.max_excess = total.max_excess.max(r.probes.max_excess);
    }
    (
        total.violations() == 0 && total.probes > 0,
        format!(
            "{} probes at k in {:?}; violations: lower bound {}, monotonicity {}, terminal {}; max h − H {:.2e}",
            total.probes, PROBE_ITERATIONS, total.lower_bound, total.monotonicity, total.terminal_exact, total.max_excess
        ),
    )
}

fn criterion_5(runs: &[SeedRun]) -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let horizon = rng.gen_range(1..6);
        let t = rng.gen_range(0..horizon);
        let i = rng.gen_range(1..500);
        let k = i + rng.gen_range(0..2000);
        let mut pool = MinorantPool::new(t, horizon);
        pool.pieces.push(mslp_core::sdlp::Minorant {
            stage: t,
            origin: i,
            kind: mslp_core::sdlp::PieceKind::Candidate,
            scale: 1.0,
            coefficients: vec![],
        });
        for step in i..=k {
            pool.scale_pool(step);
        }
        let expect = (i as f64 / k as f64).powi((horizon - t) as i32);
        worst = worst.max((pool.pieces[0].scale - expect).abs());
    }
    let in_runs = runs.iter().map(|r| r.lazy_scale_error).fold(0.0, f64::max);
    (
        worst <= 1e-12 && in_runs <= 1e-12,
        format!("max error: 1000 random (i, k, t) {:.2e}; pieces of the trained runs {:.2e}", worst, in_runs),
    )
}

fn criterion_6(inst: &MslpInstance, runs: &[SeedRun]) -> (bool, String) {
    let emitted: usize = runs.iter().map(|r| r.run.stats.bfp_emitted).sum();
    let fallbacks: usize = runs.iter().map(|r| r.run.stats.bfp_fallbacks).sum();
    let residual = runs.iter().map(|r| r.run.stats.max_bfp_residual).fold(0.0, f64::max);
    let checks: usize = runs.iter().map(|r| r.argmin_checks).sum();
    let failures: usize = runs.iter().map(|r| r.argmin_failures).sum();

    // Affinity: reconstruct at two states and their midpoint for every basis.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let pool = &runs[0].run.stages[1].bases;
    let mut affine_err = 0.0_f64;
    for _ in 0..100 {
        let obs = &inst.support[1].observations[rng.gen_range(0..3)];
        let x1 = [rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)];
        let x2 = [rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)];
        let lambda: f64 = rng.gen_range(0.0..1.0);
        let xm = [lambda * x1[0] + (1.0 - lambda) * x2[0], lambda * x1[1] + (1.0 - lambda) * x2[1]];
        for e in &pool.entries {
            let r = |x: &[f64]| basis_reconstruct_with(&e.basis, &e.inverse, 3, &obs.rhs_at(x));
            let (a, b, m) = (r(&x1), r(&x2), r(&xm));
            for i in 0..3 {
                affine_err = affine_err.max((m[i] - (lambda * a[i] + (1.0 - lambda) * b[i])).abs());
            }
        }
    }
    (
        residual <= 1e-8 && affine_err <= 1e-9 && failures == 0 && checks > 0,
        format!(
            "{} emitted ({} stage-LP fallbacks), max residual {:.2e}; affinity error {:.2e} over 100 pairs × {} bases; argmin {}/{} checked iterations agree",
            emitted,
            fallbacks,
            residual,
            affine_err,
            pool.len(),
            checks - failures,
            checks
        ),
    )
}

fn criterion_7(runs: &[SeedRun]) -> (bool, String) {
    let solves: usize = runs.iter().map(|r| r.run.stats.root_solves).sum();
    let violations: usize = runs.iter().map(|r| r.run.stats.descent_violations).sum();
    let kkt = runs.iter().map(|r| r.run.stats.max_kkt_residual).fold(0.0, f64::max);
    (violations == 0, format!("{} root solves, {} violations, max KKT residual {:.2e}", solves, violations, kkt))
}

fn criterion_8() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut gap, mut round_trip, mut failures) = (0.0_f64, 0.0_f64, 0);
    for case in 0..1000 {
        let n = rng.gen_range(1..7);
        let m = rng.gen_range(1..9);
        let p = random_feasible_lp(&mut rng, n, m, case % 2 == 1);
        match solve_lp(&p) {
            Ok(s) if s.status == LpStatus::Optimal => {
                gap = gap.max((s.objective - dot(&p.rhs, &s.dual)).abs());
                match basis_reconstruct(&s.basis, &p.constraints, &p.rhs) {
                    Ok(u) => {
                        for (a, b) in u.iter().zip(&s.primal) {
                            round_trip = round_trip.max((a - b).abs());
                        }
                    }
                    Err(_) => failures += 1,
                }
            }
            _ => failures += 1,
        }
    }
    let mut qp_err = 0.0_f64;
    for _ in 0..200 {
        let lp = random_feasible_lp(&mut rng, 3, 3, false);
        let center: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..3.0)).collect();
        let p = QpProblem {
            lp,
            center,
            sigma: rng.gen_range(1.0..4.0),
        };
        match solve_qp(&p) {
            Ok(s) if s.is_optimal() => {
                let oracle = projected_gradient_oracle(&p, 20000);
                for (a, b) in s.primal.iter().zip(&oracle) {
                    qp_err = qp_err.max((a - b).abs());
                }
            }
            _ => failures += 1,
        }
    }
    (
        gap <= 1e-7 && round_trip <= 1e-9 && qp_err <= 1e-6 && failures == 0,
        format!(
            "1000 LPs: max duality gap {:.2e}, basis round trip {:.2e}; 200 QPs: max deviation {:.2e}; {} failures",
            gap, round_trip, qp_err, failures
        ),
    )
}

fn criterion_9(inst: &MslpInstance) -> (bool, String) {
    let scales = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
    let mut maxima = [0.0_f64; 5];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..1000 {
        let t = rng.gen_range(1..=inst.horizon());
        let s = &inst.stages[t];
        let obs = &inst.support[t].observations[rng.gen_range(0..inst.support[t].observations.len())];
        let x: Vec<f64> = (0..s.state_dim()).map(|_| rng.gen_range(0.0..10.0)).collect();
        let mut dir: Vec<f64> = (0..s.state_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let len = dot(&dir, &dir).sqrt();
        dir.iter_mut().for_each(|d| *d /= len);
        for (i, &eps) in scales.iter().enumerate() {
            let x2: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + eps * d).collect();
            let r = hoffman_ratio(&s.recourse, &s.decision_cost, &obs.rhs_at(&x), &obs.rhs_at(&x2), eps)
                .expect("hoffman ratio");
            maxima[i] = maxima[i].max(r);
        }
    }
    let finite = maxima.iter().all(|m| m.is_finite());
    let stable = maxima.windows(2).all(|w| w[1] <= 2.0 * w[0].max(1e-12)) && maxima[4] <= 2.0 * maxima[0].max(1e-12);
    (
        finite && stable,
        format!(
            "max ratio at perturbation 1e-2 .. 1e-6: {}",
            maxima.iter().map(|m| format!("{:.4}", m)).collect::<Vec<_>>().join(" / ")
        ),
    )
}

fn criterion_10() -> (bool, String) {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/desk3.mslp");
    let mut traces = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().expect("temp dir");
        for algorithm in [Algorithm::Sdlp, Algorithm::Sddp] {
            let cfg = RunConfig {
                algorithm,
                instance: fixture.clone(),
                seed: 11,
                iterations: if algorithm == Algorithm::Sdlp { 300 } else { 200 },
                out_dir: dir.path().to_path_buf(),
                ..RunConfig::default()
            };
            run(&cfg).expect("run");
        }
        let read = |name: &str| std::fs::read(dir.path().join(name)).expect("trace");
        traces.push((read("sdlp_trace.csv"), read("sddp_trace.csv")));
    }
    let same = traces[0] == traces[1];
    (
        same,
        format!(
            "sdlp trace {} bytes, sddp trace {} bytes, identical {}",
            traces[0].0.len(),
            traces[0].1.len(),
            same
        ),
    )
}

fn main() {
    let suite = Instant::now();
    let inst = desk3();
    let mut verdicts = Vec::new();
    let mut record = |id, name, f: &mut dyn FnMut() -> (bool, String)| {
        let start = Instant::now();
        let (pass, detail) = f();
        verdicts.push(Verdict {
            id,
            name,
            pass,
            detail,
            elapsed: start.elapsed(),
        });
    };

    let optimum = solve_instance(&inst).expect("desk3 extensive form").value;
    println!("desk3 reference optimum V* = {}", optimum);

    record(1, "oracle self-consistency", &mut || {
        let start = Instant::now();
        let (pass, detail) = criterion_1();
        let t = start.elapsed();
        (pass && t < Duration::from_secs(1), format!("{}; {:.3}s", detail, t.as_secs_f64()))
    });
    record(2, "SDDP exactness", &mut || {
        let start = Instant::now();
        let (pass, detail) = criterion_2(&inst, optimum);
        let t = start.elapsed();
        (pass && t < Duration::from_secs(30), format!("{}; {:.2}s", detail, t.as_secs_f64()))
    });

    let sdlp_start = Instant::now();
    let runs: Vec<SeedRun> = std::thread::scope(|s| {
        let handles: Vec<_> = SEEDS.iter().map(|&seed| s.spawn({
            let inst = &inst;
            move || sdlp_seed(inst, seed)
        })).collect();
        handles.into_iter().map(|h| h.join().expect("seed thread")).collect()
    });
    let sdlp_wall = sdlp_start.elapsed();

    record(3, "SDLP convergence", &mut || criterion_3(&runs, optimum, sdlp_wall));
    record(4, "minorant invariants", &mut || criterion_4(&runs));
    record(5, "scaling algebra", &mut || criterion_5(&runs));
    record(6, "basic feasible policy", &mut || criterion_6(&inst, &runs));
    record(7, "descent condition", &mut || criterion_7(&runs));
    record(8, "LP/QP core", &mut criterion_8);
    record(9, "Hoffman ratio stability", &mut || criterion_9(&inst));
    record(10, "determinism", &mut criterion_10);

    println!();
    for v in &verdicts {
        println!(
            "criterion {:>2} {:<26} {}  ({:.2}s)\n    {}",
            v.id,
            v.name,
            if v.pass { "PASS" } else { "FAIL" },
            v.elapsed.as_secs_f64(),
            v.detail
        );
    }
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!(
        "\n{} of {} criteria passed; SDLP runs {:.1}s wall, suite {:.1}s",
        verdicts.len() - failed,
        verdicts.len(),
        sdlp_wall.as_secs_f64(),
        suite.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
