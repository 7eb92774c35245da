//! Evaluates the minimax loss in closed form, cross-checks it against a
//! Monte Carlo estimate, and compares the analytic gradients with central
//! finite differences.
//!
//! Run with: cargo run --example loss_and_gradients

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use coevgan::problem::{
    grad_discriminator, grad_generator, loss_closed_form, repair, sample_mixture,
    DiscriminatorParams, GeneratorParams,
};

fn main() {
    let target = GeneratorParams::new(-3.0, 3.0).unwrap();
    let gen = GeneratorParams::new(-2.0, 2.5).unwrap();
    let disc: DiscriminatorParams = repair([-4.0, -1.0, 1.0, 4.0]).unwrap();

    let exact = loss_closed_form(&gen, &disc, &target);
    println!("closed-form loss: {exact:.6}");

    // Monte Carlo estimate of E_target[D] + E_gen[1 - D]
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let n = 200_000;
    let mc: f64 = (0..n)
        .map(|_| {
            let ind = |x: f64| f64::from(disc.indicator(x));
            ind(sample_mixture(&target, &mut rng)) + 1.0 - ind(sample_mixture(&gen, &mut rng))
        })
        .sum::<f64>()
        / n as f64;
    println!("Monte Carlo ({n} samples): {mc:.6}  (|diff| = {:.1e})", (mc - exact).abs());

    let (g1, g2) = grad_generator(&gen, &disc, &target);
    println!("\ngenerator gradient:      ({g1:+.6}, {g2:+.6})");
    let h = 1e-5;
    let fd1 = (loss_closed_form(&GeneratorParams::new(gen.mu1 + h, gen.mu2).unwrap(), &disc, &target)
        - loss_closed_form(&GeneratorParams::new(gen.mu1 - h, gen.mu2).unwrap(), &disc, &target))
        / (2.0 * h);
    let fd2 = (loss_closed_form(&GeneratorParams::new(gen.mu1, gen.mu2 + h).unwrap(), &disc, &target)
        - loss_closed_form(&GeneratorParams::new(gen.mu1, gen.mu2 - h).unwrap(), &disc, &target))
        / (2.0 * h);
    println!("finite differences:      ({fd1:+.6}, {fd2:+.6})");

    let (dl1, dr1, dl2, dr2) = grad_discriminator(&gen, &disc, &target);
    println!("discriminator gradient:  ({dl1:+.6}, {dr1:+.6}, {dl2:+.6}, {dr2:+.6})");
}
