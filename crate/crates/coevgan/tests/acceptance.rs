//! Acceptance gate: every release-blocking property in one place, with one
//! pass/fail line per criterion. Run with `--nocapture` to see the lines on
//! success; any failure panics at the end with the full report.
//!
//! The heavier criteria (4-6) replicate the headline experiments at desk
//! scale; their thresholds were fixed by pilot calibration runs and are
//! recorded here as constants.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use coevgan::coevo::{
    self, run_basic, CoevConfig, FitnessWeighting, Individual, Population,
};
use coevgan::grid::{
    build_grid, gather_neighborhood, run_grid, run_grid_with_probe, select_best_mixture,
    ExecutionMode, Grid, GridInitializer, GridRunConfig, ExecutionMode::Synchronous,
};
use coevgan::harness::{
    self, converge, disc_collapse, grid_run, heatmap, ExperimentConfig,
};
use coevgan::mixture::{es_step, metric_g, MixtureWeights, NegL2DensityDistance};
use coevgan::problem::{
    grad_discriminator, grad_generator, loss_closed_form, repair, sample_mixture,
    DiscriminatorParams, GeneratorParams, Sign,
};

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
    seconds: f64,
}

fn target() -> GeneratorParams {
    GeneratorParams::new(-3.0, 3.0).unwrap()
}

fn random_case(rng: &mut ChaCha8Rng) -> (GeneratorParams, DiscriminatorParams) {
    let gen = GeneratorParams::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0))
        .unwrap();
    // interval widths >= 0.1 keep the finite-difference stencil away from
    // the repair-order discontinuities
    loop {
        let d = repair(std::array::from_fn(|_| rng.gen_range(-10.0..10.0))).unwrap();
        if d.r1 - d.l1 >= 0.1 && d.l2 - d.r1 >= 0.1 && d.r2 - d.l2 >= 0.1 {
            return (gen, d);
        }
    }
}

/// 1: analytic gradients match central finite differences.
fn criterion_gradients() -> (bool, String) {
    let t = target();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let h = 1e-5;
    // relative error with an absolute floor: the loss is O(1), so central
    // differences carry ~1e-10 roundoff that would dominate a pure relative
    // comparison whenever the true derivative is tiny
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-3);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (g, d) = random_case(&mut rng);
        let (d1, d2) = grad_generator(&g, &d, &t);
        let fd = |f: &dyn Fn(f64) -> f64, x: f64| (f(x + h) - f(x - h)) / (2.0 * h);
        let fd1 = fd(
            &|x| loss_closed_form(&GeneratorParams::new(x, g.mu2).unwrap(), &d, &t),
            g.mu1,
        );
        let fd2 = fd(
            &|x| loss_closed_form(&GeneratorParams::new(g.mu1, x).unwrap(), &d, &t),
            g.mu2,
        );
        worst = worst.max(rel(d1, fd1)).max(rel(d2, fd2));
        let (gl1, gr1, gl2, gr2) = grad_discriminator(&g, &d, &t);
        let bound_fd = |i: usize, x: f64| {
            let mut b = [d.l1, d.r1, d.l2, d.r2];
            let eval = |b: [f64; 4]| {
                loss_closed_form(&g, &repair(b).unwrap(), &t)
            };
            b[i] = x + h;
            let hi = eval(b);
            b[i] = x - h;
            (hi - eval(b)) / (2.0 * h)
        };
        for (i, (analytic, x)) in
            [(gl1, d.l1), (gr1, d.r1), (gl2, d.l2), (gr2, d.r2)].into_iter().enumerate()
        {
            worst = worst.max(rel(analytic, bound_fd(i, x)));
        }
    }
    (worst < 1e-5, format!("worst relative error {worst:.2e} over 1000 cases"))
}

/// 2: closed-form loss agrees with a 10^6-sample Monte Carlo estimate.
fn criterion_loss_oracle() -> (bool, String) {
    let t = target();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let n = 1_000_000u32;
    let mut worst_z = 0.0f64;
    for _ in 0..100 {
        let (g, d) = random_case(&mut rng);
        let exact = loss_closed_form(&g, &d, &t);
        // estimate E_target[D] + E_gen[1 - D] with per-sample variance
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let ind = |x: f64| f64::from(d.indicator(x));
            let v = ind(sample_mixture(&t, &mut rng)) + 1.0
                - ind(sample_mixture(&g, &mut rng));
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        let var = (sum_sq / n as f64 - mean * mean).max(0.0);
        let se = (var / n as f64).sqrt().max(1e-12);
        worst_z = worst_z.max((mean - exact).abs() / se);
    }
    (worst_z < 4.0, format!("worst |z| {worst_z:.2} over 100 cases (limit 4)"))
}

/// 3: generator and discriminator fitness sums cancel at every generation of
/// a seeded 100-generation run.
fn criterion_antisymmetry() -> (bool, String) {
    let t = target();
    let problem = coevgan::problem::TheoreticalGan::closed_form(t);
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let pops = |rng: &mut ChaCha8Rng| {
        let gens = (0..10)
            .map(|_| {
                Individual::new(
                    GeneratorParams::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0))
                        .unwrap(),
                    0.5,
                )
            })
            .collect();
        let discs = (0..10)
            .map(|_| {
                Individual::new(
                    repair(std::array::from_fn(|_| rng.gen_range(-4.0..4.0))).unwrap(),
                    0.5,
                )
            })
            .collect();
        (Population::new(gens).unwrap(), Population::new(discs).unwrap())
    };
    let (u, v) = pops(&mut rng);
    let config = CoevConfig::elitist(10, 100);
    let mut worst = 0.0f64;
    let mut observer = |_g: u32, u: &Population<GeneratorParams>, v: &Population<DiscriminatorParams>| {
        let su: f64 = u.members.iter().map(|m| m.fitness.unwrap()).sum();
        let sv: f64 = v.members.iter().map(|m| m.fitness.unwrap()).sum();
        worst = worst.max((su + sv).abs());
    };
    run_basic(&problem, u, v, &config, None, None, &mut rng, Some(&mut observer)).unwrap();
    (worst < 1e-9, format!("worst |sum_u + sum_v| {worst:.2e} over 101 evaluations"))
}

/// 4: convergence reproduction — with T=10, I=100, Gaussian sigma=1 and the
/// default target (-3,3), at least 70% of 30 seeded runs converge (the best
/// generator's trace reaches the 0.1 success ball).
fn criterion_convergence() -> (bool, String) {
    let config = ExperimentConfig {
        runs: 30,
        master_seed: 0,
        workers: 4,
        ..ExperimentConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let summary = converge::cmd_converge(&config, dir.path()).unwrap();
    let frac = summary.coevolution_successes as f64 / summary.runs as f64;
    (
        frac >= 0.7,
        format!(
            "{}/{} runs converged (fraction {frac:.3}, required 0.7)",
            summary.coevolution_successes, summary.runs
        ),
    )
}

/// 5: mode-collapse contrast — desk-scale 11x11 heatmap, coevolution's mean
/// diagonal success beats the paired gradient baseline's by at least 0.2.
fn criterion_mode_collapse() -> (bool, String) {
    let config = ExperimentConfig { master_seed: 0, workers: 4, ..ExperimentConfig::default() };
    let (coev, base) = heatmap::compute_heatmaps(&config).unwrap();
    assert_eq!(coev.centers.len(), 11);
    let (c, b) = (coev.diagonal_mean(), base.diagonal_mean());
    (
        c >= b + 0.2,
        format!("diagonal success {c:.3} (coevolution) vs {b:.3} (baseline), gap {:.3}", c - b),
    )
}

/// 6: discriminator-collapse escape — from (-,-)-quadrant inits with the
/// generator frozen at (-1, 2.5), coevolution improves the best fitness by
/// the margin in >= 80% of 50 runs, while pure gradient ascent traces shrink
/// their intervals monotonically to nothing.
fn criterion_disc_collapse() -> (bool, String) {
    let config = ExperimentConfig { runs_per_cell: 50, master_seed: 0, ..ExperimentConfig::default() };
    let cells = disc_collapse::compute_quadrant_cells(&config).unwrap();
    let neg = cells
        .iter()
        .find(|c| c.quadrant == (Sign::Negative, Sign::Negative))
        .unwrap();
    let escape_ok = neg.feasible_runs == 50 && neg.rate() >= 0.8;

    let gen_fixed = GeneratorParams::new(-1.0, 2.5).unwrap();
    let t = target();
    let mut collapse_ok = true;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let start = disc_collapse::sample_small_negative_disc(&gen_fixed, &t, &mut rng);
        let trace = disc_collapse::baseline_disc_trace(&gen_fixed, &t, &start, 0.002, 5000);
        for lens in [
            trace.iter().map(|d| d.r1 - d.l1).collect::<Vec<_>>(),
            trace.iter().map(|d| d.r2 - d.l2).collect::<Vec<_>>(),
        ] {
            let mut collapsed = false;
            for w in lens.windows(2) {
                if w[0] <= 1e-3 {
                    collapsed = true;
                    break;
                }
                if w[1] > w[0] + 1e-12 {
                    collapse_ok = false;
                }
            }
            collapse_ok &= collapsed || *lens.last().unwrap() <= 1e-3;
        }
    }
    (
        escape_ok && collapse_ok,
        format!(
            "escape {}/{} feasible runs (required 40/50), baseline traces monotone-collapsed: {collapse_ok}",
            neg.successes, neg.feasible_runs
        ),
    )
}

/// 7: spatial invariants on an m=3 synchronous run.
fn criterion_spatial() -> (bool, String) {
    let t = target();
    let config = GridRunConfig::default();
    let init = GridInitializer::default();
    let grid = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        build_grid(3, 2, &init, &mut rng)
    };
    let a = run_grid(grid(7), 20, Synchronous, &t, &config).unwrap();
    let b = run_grid(grid(7), 20, Synchronous, &t, &config).unwrap();
    let deterministic = a == b;

    // disjoint union: the global population is exactly the concatenation of
    // the center sub-populations, every cell holding its own per-cell slice
    let sizes_ok = a.cells().iter().all(|c| {
        c.center_gens.len() == 2 && c.center_discs.len() == 2 && c.generation_counter == 20
    });
    let n_ok = (0..a.cell_count())
        .all(|k| gather_neighborhood(&a, k).union_size() == 5 * 2);

    // adjacent neighborhoods share both centers; exact two-center equality
    // needs m >= 4 (an m=3 torus wraps a third shared cell), so equality is
    // checked structurally on m=5
    let contains_both = {
        let na: Vec<usize> = a.neighbor_indices(0).to_vec();
        let nb: Vec<usize> = a.neighbor_indices(1).to_vec();
        na.contains(&0) && na.contains(&1) && nb.contains(&0) && nb.contains(&1)
    };
    let m5 = {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        build_grid(5, 1, &init, &mut rng)
    };
    let exact_on_m5 = {
        use std::collections::HashSet;
        let x: HashSet<usize> = m5.neighbor_indices(0).into_iter().collect();
        let y: HashSet<usize> = m5.neighbor_indices(1).into_iter().collect();
        let mut i: Vec<usize> = x.intersection(&y).copied().collect();
        i.sort_unstable();
        i == vec![0, 1]
    };
    let pass = deterministic && sizes_ok && n_ok && contains_both && exact_on_m5;
    (
        pass,
        format!(
            "deterministic {deterministic}, sizes {sizes_ok}, N constant {n_ok}, overlap {}",
            contains_both && exact_on_m5
        ),
    )
}

/// 8: asynchronous liveness — m=2, 4 workers, 50 generations; all counters
/// finish at 50 and with skew bound 1 no sampled adjacent difference
/// exceeds 1.
fn criterion_async() -> (bool, String) {
    use std::sync::atomic::{AtomicU64, Ordering};
    let t = target();
    let config = GridRunConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let grid = build_grid(2, 1, &GridInitializer::default(), &mut rng);
    // the skew bound applies to von Neumann neighbors only; on a 2x2 torus
    // the diagonal pairs are not adjacent and may legitimately drift apart
    // by twice the bound
    let edges: Vec<(usize, usize)> = (0..grid.cell_count())
        .flat_map(|k| {
            grid.neighbor_indices(k)
                .into_iter()
                .filter(move |&n| n > k)
                .map(move |n| (k, n))
        })
        .collect();
    let worst = AtomicU64::new(0);
    let samples = AtomicU64::new(0);
    let probe = |counters: &[u64]| {
        samples.fetch_add(1, Ordering::Relaxed);
        for &(i, j) in &edges {
            let d = counters[i].abs_diff(counters[j]);
            worst.fetch_max(d, Ordering::Relaxed);
        }
    };
    let out = run_grid_with_probe(
        grid,
        50,
        ExecutionMode::Asynchronous { max_generation_skew: Some(1) },
        &t,
        &config,
        Some(&probe),
    )
    .unwrap();
    let counters_ok = out.cells().iter().all(|c| c.generation_counter == 50);
    let worst = worst.load(Ordering::Relaxed);
    let samples = samples.load(Ordering::Relaxed);
    (
        counters_ok && worst <= 1,
        format!("all counters at 50: {counters_ok}; worst sampled skew {worst} over {samples} samples"),
    )
}

/// 9: mixture ES invariants and the exhaustive argmax check.
fn criterion_mixture_es() -> (bool, String) {
    let t = target();
    let metric = NegL2DensityDistance::default();
    let gens = vec![
        GeneratorParams::new(-3.2, 3.1).unwrap(),
        GeneratorParams::new(-2.8, 2.7).unwrap(),
        GeneratorParams::new(0.0, 1.0).unwrap(),
    ];
    let mut w = MixtureWeights::uniform(3);
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut g_prev = metric_g(&gens, &w, &t, &metric).unwrap();
    let mut simplex_ok = true;
    let mut monotone_ok = true;
    for _ in 0..10_000 {
        w = es_step(&w, &gens, &t, &metric, 0.01, &mut rng).unwrap();
        let s: f64 = w.as_slice().iter().sum();
        simplex_ok &= (s - 1.0).abs() < 1e-9 && w.as_slice().iter().all(|&x| x >= 0.0);
        let g = metric_g(&gens, &w, &t, &metric).unwrap();
        monotone_ok &= g >= g_prev - 1e-12;
        g_prev = g;
    }
    let exact = metric_g(&[t], &MixtureWeights::new(vec![1.0]).unwrap(), &t, &metric).unwrap();
    let zero_ok = exact.abs() < 1e-10;

    let mut rng = ChaCha8Rng::seed_from_u64(910);
    let grid: Grid = build_grid(2, 1, &GridInitializer::default(), &mut rng);
    let best = select_best_mixture(&grid, &t, &metric).unwrap();
    let mut expected = (0, f64::NEG_INFINITY);
    for k in 0..grid.cell_count() {
        let n = gather_neighborhood(&grid, k);
        let gens: Vec<GeneratorParams> = n
            .member_snapshots
            .iter()
            .flat_map(|c| c.center_gens.iter().map(|i| i.params))
            .collect();
        let g = metric_g(&gens, &n.member_snapshots[0].mixture_weights, &t, &metric).unwrap();
        if g > expected.1 {
            expected = (k, g);
        }
    }
    let argmax_ok = best.k == expected.0;
    (
        simplex_ok && monotone_ok && zero_ok && argmax_ok,
        format!(
            "simplex {simplex_ok}, monotone g {monotone_ok}, g(target) = {exact:.1e}, argmax {argmax_ok}"
        ),
    )
}

/// 10: weighted fitness with uniform weights sorts identically to uniform
/// fitness on 100 randomized population pairs.
fn criterion_weighted_uniform() -> (bool, String) {
    let problem = coevgan::problem::TheoreticalGan::closed_form(target());
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    for case in 0..100 {
        let t = 8;
        let gens: Vec<_> = (0..t)
            .map(|_| {
                Individual::new(
                    GeneratorParams::new(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0))
                        .unwrap(),
                    0.5,
                )
            })
            .collect();
        let discs: Vec<_> = (0..t)
            .map(|_| {
                Individual::new(
                    repair(std::array::from_fn(|_| rng.gen_range(-8.0..8.0))).unwrap(),
                    0.5,
                )
            })
            .collect();
        let mut u1 = Population::new(gens).unwrap();
        let mut v1 = Population::new(discs).unwrap();
        let mut u2 = u1.clone();
        let mut v2 = v1.clone();
        coevo::evaluate(&problem, &mut u1, &mut v1, FitnessWeighting::Uniform, None, None)
            .unwrap();
        let w = vec![1.0 / t as f64; t];
        coevo::evaluate(
            &problem,
            &mut u2,
            &mut v2,
            FitnessWeighting::Weighted,
            Some(&w),
            Some(&w),
        )
        .unwrap();
        let order = |p: &Population<GeneratorParams>| {
            let mut idx: Vec<usize> = (0..t).collect();
            idx.sort_by(|a, b| {
                p.members[*b]
                    .fitness
                    .unwrap()
                    .partial_cmp(&p.members[*a].fitness.unwrap())
                    .unwrap()
            });
            idx
        };
        let dorder = |p: &Population<DiscriminatorParams>| {
            let mut idx: Vec<usize> = (0..t).collect();
            idx.sort_by(|a, b| {
                p.members[*b]
                    .fitness
                    .unwrap()
                    .partial_cmp(&p.members[*a].fitness.unwrap())
                    .unwrap()
            });
            idx
        };
        if order(&u1) != order(&u2) || dorder(&v1) != dorder(&v2) {
            return (false, format!("argsort diverged on case {case}"));
        }
    }
    (true, "identical argsort on 100 population pairs".into())
}

/// 11: converge and grid-run outputs are byte-identical to the committed
/// golden fixtures.
fn criterion_golden_files() -> (bool, String) {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let config = harness::load_config(&root.join("golden.conf")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    converge::cmd_converge(&config, dir.path()).unwrap();
    grid_run::cmd_grid_run(&config, dir.path()).unwrap();
    let mut mismatched = Vec::new();
    for name in [
        "converge_coevolution.csv",
        "converge_baseline.csv",
        "grid_checkpoint.txt",
        "grid_report.csv",
    ] {
        let fresh = std::fs::read(dir.path().join(name)).unwrap();
        let golden = std::fs::read(root.join(name)).unwrap_or_default();
        if fresh != golden {
            mismatched.push(name);
        }
    }
    (
        mismatched.is_empty(),
        if mismatched.is_empty() {
            "all four outputs byte-identical".into()
        } else {
            format!("mismatched: {mismatched:?}")
        },
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: Vec<(&'static str, fn() -> (bool, String))> = vec![
        ("gradient correctness", criterion_gradients),
        ("loss oracle", criterion_loss_oracle),
        ("fitness antisymmetry", criterion_antisymmetry),
        ("convergence reproduction", criterion_convergence),
        ("mode-collapse contrast", criterion_mode_collapse),
        ("discriminator-collapse escape", criterion_disc_collapse),
        ("spatial invariants", criterion_spatial),
        ("asynchronous liveness", criterion_async),
        ("mixture ES", criterion_mixture_es),
        ("weighted-uniform argsort identity", criterion_weighted_uniform),
        ("golden files", criterion_golden_files),
    ];
    let mut outcomes = Vec::new();
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        let started = Instant::now();
        let (pass, detail) = f();
        outcomes.push(Outcome { name, pass, detail, seconds: started.elapsed().as_secs_f64() });
        let o = outcomes.last().unwrap();
        println!(
            "criterion {:2} {:35} {} ({:.1}s) - {}",
            i + 1,
            o.name,
            if o.pass { "PASS" } else { "FAIL" },
            o.seconds,
            o.detail
        );
    }
    let failed: Vec<&Outcome> = outcomes.iter().filter(|o| !o.pass).collect();
    assert!(
        failed.is_empty(),
        "{} acceptance criteria failed: {:?}",
        failed.len(),
        failed.iter().map(|o| o.name).collect::<Vec<_>>()
    );
}
