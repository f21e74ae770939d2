//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::LN_2;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use causal_rdf::baseline::{blahut_arimoto, classical_block_rdf, BaConfig};
use causal_rdf::cli::{run_config, Format, Mode, OutputConfig, RunArgs, RunConfig, SolverParams};
use causal_rdf::measures::{entropy, joint_law, markov_chain_check, JointLaw, McVariant};
use causal_rdf::model::{DistortionSpec, Horizon, Memory, SourceModel, StageAlphabets};
use causal_rdf::oracle::{brute_force_lagrangian_min, GridSpec};
use causal_rdf::solver::{
    fixed_point_solve, max_distortion, rate_limit_estimate, solve_for_target_distortion,
    trace_curve, verify_stationarity, SolveResult, SolverConfig, TargetOutcome,
};

struct Solved {
    source: SourceModel,
    spec: DistortionSpec,
    result: SolveResult,
}

#[derive(Default)]
struct Log {
    failures: usize,
    // converged solves from criteria 1-4, for 6 and 7
    solves: Vec<Solved>,
    // every solve, for the terminal-table identity
    terminal_max: f64,
}

impl Log {
    fn report(&mut self, id: &str, ok: bool, detail: String) {
        println!(
            "{} criterion {id}: {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
        if !ok {
            self.failures += 1;
        }
    }

    fn keep(&mut self, source: &SourceModel, spec: &DistortionSpec, result: &SolveResult) {
        let t = result
            .g
            .terminal()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        self.terminal_max = self.terminal_max.max(t);
        if result.converged {
            self.solves.push(Solved {
                source: source.clone(),
                spec: spec.clone(),
                result: result.clone(),
            });
        }
    }
}

fn hb(p: f64) -> f64 {
    entropy(&[p, 1.0 - p])
}

fn fair(n: usize) -> SourceModel {
    SourceModel::iid(Horizon::new(n).unwrap(), &[0.5, 0.5]).unwrap()
}

fn markov(n: usize) -> SourceModel {
    SourceModel::binary_markov(Horizon::new(n).unwrap(), 0.3).unwrap()
}

fn simplex(rng: &mut ChaCha8Rng, k: usize, floor: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k).map(|_| floor + rng.gen::<f64>()).collect();
    let t: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= t);
    v
}

fn random_binary_source(rng: &mut ChaCha8Rng, n: usize) -> SourceModel {
    let ab = StageAlphabets::uniform(Horizon::new(n).unwrap(), 2, 2).unwrap();
    let kernels = (0..n)
        .map(|i| {
            (0..1usize << i)
                .flat_map(|_| {
                    let p = rng.gen_range(0.1..0.9);
                    [p, 1.0 - p]
                })
                .collect()
        })
        .collect();
    SourceModel::new(ab, Memory::Full, kernels).unwrap()
}

fn criterion_1(log: &mut Log) {
    let src = fair(3);
    let spec = DistortionSpec::hamming(2);
    let one = fair(1);
    let cfg = SolverConfig {
        distortion_tol: 1e-10,
        ..SolverConfig::default()
    };
    let mut worst_ba = 0.0f64;
    let mut worst_closed = 0.0f64;
    let mut slowest = 0.0f64;
    for d in [0.05, 0.1, 0.2, 0.3, 0.4] {
        let t = Instant::now();
        let out = solve_for_target_distortion(&src, &spec, d, &cfg).unwrap();
        slowest = slowest.max(t.elapsed().as_secs_f64());
        let r = out.result().unwrap();
        log.keep(&src, &spec, r);
        let ba = classical_block_rdf(&one, &spec, r.distortion_per_symbol, &BaConfig::default())
            .unwrap();
        worst_ba = worst_ba.max((r.rate_per_symbol() - ba).abs());
        worst_closed = worst_closed.max((r.rate_per_symbol() - (LN_2 - hb(d))).abs());
    }
    log.report(
        "1",
        worst_ba <= 1e-6 && worst_closed <= 1e-5 && slowest < 1.0,
        format!(
            "IID n=3: |R - R_BA| max {worst_ba:.2e} (tol 1e-6), |R - (ln2 - Hb(D))| max \
             {worst_closed:.2e} (tol 1e-5), slowest point {slowest:.3}s (limit 1s)"
        ),
    );
}

fn criterion_2(log: &mut Log) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let nx = rng.gen_range(2..=4);
        let ny = rng.gen_range(2..=4);
        let px = simplex(&mut rng, nx, 0.05);
        let rows: Vec<Vec<f64>> = (0..nx)
            .map(|_| (0..ny).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let s = -rng.gen_range(0.1..5.0);
        let src = SourceModel::iid(Horizon::new(1).unwrap(), &px)
            .unwrap()
            .with_y_sizes(vec![ny])
            .unwrap();
        let spec = DistortionSpec::single_letter(&rows).unwrap();
        let cfg = SolverConfig::with_s(s);
        let r = fixed_point_solve(&src, &spec, &cfg).unwrap();
        log.keep(&src, &spec, &r);
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let ba = blahut_arimoto(&px, &flat, s, cfg.fp_tol, cfg.max_sweeps).unwrap();
        worst = worst
            .max((r.rate_nats - ba.rate_nats).abs())
            .max((r.distortion_total - ba.distortion).abs());
    }
    log.report(
        "2",
        worst <= 1e-8,
        format!("20 single-stage instances: max (D, R) gap {worst:.2e} (tol 1e-8)"),
    );
}

fn criterion_3(log: &mut Log) {
    let spec = DistortionSpec::hamming(2);
    let t = Instant::now();
    let mut ok = true;
    let mut worst_lower = f64::NEG_INFINITY;
    let mut worst_upper = 0.0f64;
    let mut gaps = Vec::new();
    let mut broken = Vec::new();
    for (name, src) in [("iid", fair(2)), ("markov", markov(2))] {
        for s in [-1.0, -2.0, -4.0] {
            let cfg = SolverConfig {
                fp_tol: 1e-12,
                ..SolverConfig::with_s(s)
            };
            let r = fixed_point_solve(&src, &spec, &cfg).unwrap();
            log.keep(&src, &spec, &r);
            let l = r.lagrangian();
            let coarse =
                brute_force_lagrangian_min(&src, &spec, s, &GridSpec::with_resolution(0.02))
                    .unwrap();
            let fine = brute_force_lagrangian_min(&src, &spec, s, &GridSpec::with_resolution(0.01))
                .unwrap();
            let (g2, g1) = (coarse.value - l, fine.value - l);
            worst_lower = worst_lower.max(l - coarse.value.min(fine.value));
            worst_upper = worst_upper.max(g2);
            let point_ok =
                l <= coarse.value + 1e-9 && l <= fine.value + 1e-9 && g2 <= 5e-3 && g1 <= g2;
            if !point_ok {
                broken.push(format!("{name} s={s}"));
            }
            ok &= point_ok;
            gaps.push(format!("{name} s={s}: {g2:.2e}->{g1:.2e}"));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs < 300.0;
    log.report(
        "3",
        ok,
        format!(
            "solver - grid max {worst_lower:.2e} (tol 1e-9), grid gap max {worst_upper:.2e} \
             (tol 5e-3), gaps 0.02->0.01 [{}], {secs:.1}s (limit 300s){}",
            gaps.join(", "),
            if broken.is_empty() {
                String::new()
            } else {
                format!("; out of bounds: {}", broken.join(", "))
            }
        ),
    );
}

fn criterion_4(log: &mut Log) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let spec = DistortionSpec::hamming(2);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..20 {
        let n = 1 + k % 3;
        let src = random_binary_source(&mut rng, n);
        let s = -rng.gen_range(1.0..4.0);
        let r = fixed_point_solve(&src, &spec, &SolverConfig::with_s(s)).unwrap();
        log.keep(&src, &spec, &r);
        let classical =
            classical_block_rdf(&src, &spec, r.distortion_per_symbol, &BaConfig::default())
                .unwrap();
        worst = worst.max(classical - r.rate_nats);
    }
    log.report(
        "4",
        worst <= 1e-9,
        format!("20 random instances: max (classical - nonanticipative) {worst:.2e} (tol 1e-9)"),
    );
}

fn criterion_5(log: &mut Log) {
    let spec = DistortionSpec::hamming(2);
    let src = random_binary_source(&mut ChaCha8Rng::seed_from_u64(5), 3);

    let r = fixed_point_solve(&src, &spec, &SolverConfig::with_s(0.0)).unwrap();
    log.keep(&src, &spec, &r);
    let ab = src.alphabets().clone();
    let mut x_spread = 0.0f64;
    for i in 0..3 {
        for yp in 0..ab.y_histories(i) {
            let first = r.policy.row(i, yp, 0).to_vec();
            for xc in 1..ab.x_histories(i + 1) {
                for (a, b) in r.policy.row(i, yp, xc).iter().zip(&first) {
                    x_spread = x_spread.max((a - b).abs());
                }
            }
        }
    }
    let zero_ok = r.rate_nats == 0.0 && x_spread == 0.0;

    let cfg = SolverConfig::default();
    let d_max = max_distortion(&src, &spec).unwrap();
    let mut above = 0.0f64;
    for d in [d_max, d_max + 0.1, 1.0] {
        let out = solve_for_target_distortion(&src, &spec, d, &cfg).unwrap();
        above = above.max(out.rate_nats().abs());
    }

    let offset = DistortionSpec::single_letter(&[vec![0.25, 1.0], vec![1.0, 0.25]]).unwrap();
    let infeasible = solve_for_target_distortion(&src, &offset, 0.2, &cfg).unwrap();
    let marked = matches!(infeasible, TargetOutcome::Infeasible { .. })
        && infeasible.rate_nats() == f64::INFINITY;

    log.report(
        "5",
        log.terminal_max == 0.0 && zero_ok && above <= 1e-9 && marked,
        format!(
            "max |g_n,n| {:.1e} over {} solves; s=0 rate {} with x-spread {x_spread:.1e}; \
             rate at D >= D_max {above:.1e} (tol 1e-9); infeasible marker {}",
            log.terminal_max,
            log.solves.len(),
            r.rate_nats,
            if marked { "+inf" } else { "missing" }
        ),
    );
}

fn anticipative_joint() -> JointLaw {
    // y_0 copies the future x_1 with probability 0.9
    let src = fair(2);
    let mu = causal_rdf::model::full_joint_source(&src).unwrap();
    let ab = src.alphabets().clone();
    let mut table = vec![0.0; 16];
    for xc in 0..4 {
        let x1 = xc % 2;
        for y0 in 0..2 {
            let p0 = if y0 == x1 { 0.9 } else { 0.1 };
            for y1 in 0..2 {
                table[xc * 4 + y0 * 2 + y1] = mu[xc] * p0 * 0.5;
            }
        }
    }
    JointLaw::from_table(ab, table).unwrap()
}

fn criterion_6(log: &mut Log) {
    let mut worst = 0.0f64;
    for s in &log.solves {
        let j = joint_law(&s.source, &s.result.policy).unwrap();
        for v in McVariant::ALL {
            worst = worst.max(markov_chain_check(&j, v));
        }
    }
    let j = anticipative_joint();
    let control = McVariant::ALL
        .iter()
        .map(|&v| markov_chain_check(&j, v))
        .fold(0.0, f64::max);
    log.report(
        "6",
        worst < 1e-10 && control > 0.01,
        format!(
            "{} converged solves: max residual {worst:.2e} (tol 1e-10); anticipative control \
             {control:.3} (> 0.01)",
            log.solves.len()
        ),
    );
}

fn criterion_7(log: &mut Log) {
    let mut worst = f64::NEG_INFINITY;
    for (k, s) in log.solves.iter().enumerate() {
        let d = verify_stationarity(&s.source, &s.spec, &s.result, 100, 1e-3, k as u64).unwrap();
        worst = worst.max(d);
    }
    let src = markov(2);
    let spec = DistortionSpec::hamming(2);
    let mut bad = fixed_point_solve(&src, &spec, &SolverConfig::with_s(-3.0)).unwrap();
    bad.policy.row_mut(1, 0, 0).copy_from_slice(&[0.5, 0.5]);
    bad.policy.row_mut(0, 0, 1).copy_from_slice(&[0.5, 0.5]);
    let control = verify_stationarity(&src, &spec, &bad, 100, 1e-3, 7).unwrap();
    log.report(
        "7",
        worst <= 1e-8 && control > 1e-4,
        format!(
            "{} converged solves x 100 directions: max decrease {worst:.2e} (tol 1e-8); \
             corrupted control {control:.2e} (> 1e-4)",
            log.solves.len()
        ),
    );
}

fn criterion_8(log: &mut Log) {
    let src = markov(3);
    let spec = DistortionSpec::hamming(2);
    let s_values: Vec<f64> = (0..20).map(|k| -1.0 - 0.1 * k as f64).collect();
    let curve = trace_curve(&src, &spec, &s_values, &SolverConfig::default()).unwrap();
    let mut worst = 0.0f64;
    for (s, slope) in curve.central_slopes() {
        worst = worst.max(((slope - s) / s).abs());
    }
    let n = curve.points.len();
    log.report(
        "8",
        n == 20 && curve.is_monotone() && curve.is_convex() && worst <= 0.02,
        format!(
            "{n} points: monotonicity violation {:.1e}, convexity violation {:.1e} (tol 1e-9), \
             max slope error {:.3}% (tol 2%)",
            curve.monotonicity_violation(),
            curve.convexity_violation(),
            100.0 * worst
        ),
    );
}

fn criterion_9(log: &mut Log) {
    let src = random_binary_source(&mut ChaCha8Rng::seed_from_u64(9), 4);
    let spec = DistortionSpec::hamming(2);
    let t = Instant::now();
    let r = fixed_point_solve(&src, &spec, &SolverConfig::with_s(-2.0)).unwrap();
    let secs = t.elapsed().as_secs_f64();

    let dir = tempfile::tempdir().unwrap();
    let kernels = src
        .kernels()
        .iter()
        .map(|k| k.chunks(2).map(|c| c.to_vec()).collect())
        .collect();
    let cfg = RunConfig {
        schema_version: 1,
        horizon: 4,
        source: causal_rdf::cli::SourceConfig::General {
            memory: causal_rdf::cli::MemoryConfig::Full,
            kernels,
        },
        y_sizes: None,
        distortion: causal_rdf::cli::DistortionConfig::Hamming,
        mode: Mode::Curve,
        solver: SolverParams {
            s_values: Some(vec![-0.5, -1.0, -2.0, -4.0]),
            ..SolverParams::default()
        },
        output: OutputConfig {
            format: Format::Csv,
            path: None,
            units: Default::default(),
        },
    };
    let mut texts = Vec::new();
    for k in 0..2 {
        let path = dir.path().join(format!("run{k}.csv"));
        let args = RunArgs {
            config: "unused".into(),
            mode: None,
            out: Some(path.clone()),
            check: false,
            seed: 0,
            units: None,
        };
        let (_, failure) = run_config(cfg.clone(), &args);
        assert!(failure.is_none(), "{failure:?}");
        texts.push(std::fs::read(path).unwrap());
    }
    let identical = texts[0] == texts[1];
    log.report(
        "9",
        r.converged && secs < 5.0 && identical,
        format!(
            "n=4 full-history solve: {secs:.3}s (limit 5s), {} sweeps, converged {}; repeated \
             CSV bit-identical: {identical}",
            r.sweeps_used, r.converged
        ),
    );
}

fn criterion_10(log: &mut Log) {
    let rates = rate_limit_estimate(
        |n| Ok(markov(n)),
        &DistortionSpec::hamming(2),
        0.1,
        &[1, 2, 3, 4, 5],
        &SolverConfig::default(),
    )
    .unwrap();
    let r: Vec<f64> = rates.iter().map(|h| h.rate_per_symbol).collect();
    let tv: f64 = r[2..].windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    log.report(
        "10",
        r.iter().all(|v| v.is_finite()) && tv < 0.05,
        format!(
            "Markov D=0.1 per-symbol rates n=1..5 [{}]; variation beyond n=3 {tv:.2e} (< 0.05)",
            r.iter()
                .map(|v| format!("{v:.6}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
}

fn main() {
    // `cargo test` passes harness flags; a name filter skips the suite
    let args: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    if args.iter().any(|a| !"acceptance".contains(a.as_str())) {
        return;
    }
    let mut log = Log::default();
    criterion_1(&mut log);
    criterion_2(&mut log);
    criterion_3(&mut log);
    criterion_4(&mut log);
    criterion_5(&mut log);
    criterion_6(&mut log);
    criterion_7(&mut log);
    criterion_8(&mut log);
    criterion_9(&mut log);
    criterion_10(&mut log);
    println!("acceptance: {} of 10 criteria failed", log.failures);
    if log.failures > 0 {
        std::process::exit(1);
    }
}
