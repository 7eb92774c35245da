//! Runs the basic coevolutionary loop: a population of two-mode generators
//! against a population of two-interval discriminators, printing the best
//! generator every ten generations and whether it ever reaches the target.
//!
//! Run with: cargo run --example basic_coevolution

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use coevgan::coevo::{run_basic, CoevConfig, Individual, Population};
use coevgan::problem::{
    generator_distance, repair, success, GeneratorParams, TheoreticalGan,
    DEFAULT_SUCCESS_THRESHOLD,
};

fn main() {
    let target = GeneratorParams::new(-3.0, 3.0).unwrap();
    let problem = TheoreticalGan::closed_form(target);
    let mut rng = ChaCha8Rng::seed_from_u64(2);

    let pop_size = 10;
    let gens: Vec<_> = (0..pop_size)
        .map(|_| {
            let p = GeneratorParams::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0))
                .unwrap();
            Individual::new(p, 0.5)
        })
        .collect();
    let discs: Vec<_> = (0..pop_size)
        .map(|_| {
            let p = repair(std::array::from_fn(|_| rng.gen_range(-4.0..4.0))).unwrap();
            Individual::new(p, 0.5)
        })
        .collect();

    // rank-linear survival with a 0.2 floor keeps enough selection pressure
    // to chase the target while still mixing the population
    let mut config = CoevConfig::elitist(pop_size, 100);
    config.selection_probs = (0..pop_size)
        .map(|i| (1.0 - i as f64 / (pop_size - 1) as f64).max(0.2))
        .collect();

    let mut reached = false;
    let mut observer = |g: u32, u: &Population<GeneratorParams>, _v: &Population<_>| {
        let best = u.best().params;
        let hit = success(&best, &target, DEFAULT_SUCCESS_THRESHOLD);
        reached |= hit;
        if g % 10 == 0 {
            println!(
                "gen {g:3}: best generator ({:+.3}, {:+.3})  distance {:.3}{}",
                best.mu1,
                best.mu2,
                generator_distance(&best, &target),
                if hit { "  <- inside success ball" } else { "" }
            );
        }
    };
    run_basic(
        &problem,
        Population::new(gens).unwrap(),
        Population::new(discs).unwrap(),
        &config,
        None,
        None,
        &mut rng,
        Some(&mut observer),
    )
    .unwrap();

    println!(
        "\nrun {}: the fittest generator {} the 0.1 ball around (-3, 3)",
        if reached { "succeeded" } else { "failed" },
        if reached { "entered" } else { "never entered" }
    );
}
