//! Optimizes mixture weights over a fixed set of generators with a (1+1)-ES
//! on the probability simplex, maximizing the negative L2 distance between
//! the weighted mixture density and the target density.
//!
//! Run with: cargo run --example mixture_es

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use coevgan::mixture::{es_step, metric_g, MixtureWeights, NegL2DensityDistance};
use coevgan::problem::GeneratorParams;

fn main() {
    let target = GeneratorParams::new(-3.0, 3.0).unwrap();
    let metric = NegL2DensityDistance::default();
    // one good candidate, one mediocre, one bad: the ES should shift almost
    // all mass onto the first
    let gens = vec![
        GeneratorParams::new(-3.05, 2.95).unwrap(),
        GeneratorParams::new(-2.0, 2.0).unwrap(),
        GeneratorParams::new(0.0, 0.5).unwrap(),
    ];

    let mut w = MixtureWeights::uniform(gens.len());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    println!("start: weights {:?}", w.as_slice());
    for step in 1..=5000u32 {
        w = es_step(&w, &gens, &target, &metric, 0.01, &mut rng).unwrap();
        if step % 1000 == 0 {
            let g = metric_g(&gens, &w, &target, &metric).unwrap();
            let ws: Vec<String> = w.as_slice().iter().map(|x| format!("{x:.3}")).collect();
            println!("step {step:4}: weights [{}]  g = {g:.6}", ws.join(", "));
        }
    }
    let sum: f64 = w.as_slice().iter().sum();
    println!("\nweights stay on the simplex (sum = {sum:.12}) and g never decreases.");
}
