//! Coevolutionary minimax optimization for a tractable GAN model.
//!
//! The game is a 1-D "theoretical GAN": the generator is a two-component
//! unit-variance Gaussian mixture parameterized by its means, the
//! discriminator is the indicator of two ordered intervals, and the minimax
//! loss has a closed form through the normal CDF. On top of that sit:
//!
//! - [`gaussmix`]: exact interval probabilities, densities and derivatives;
//! - [`problem`]: the loss, analytic gradients, repair, success metrics and
//!   gradient-descent baselines;
//! - [`coevo`]: paired-population coevolution (evaluate / sort / select /
//!   mutate / replace) with gradient or Gaussian mutations;
//! - [`grid`]: spatial coevolution on a toroidal grid with per-cell mixture
//!   weights, synchronous or asynchronous execution, and text checkpoints;
//! - [`mixture`]: the neighborhood mixture quality metric and its (1+1)-ES;
//! - [`harness`]: seeded, replicated experiments with CSV/PGM outputs.
//!
//! Every stochastic component takes a seeded [`rand_chacha::ChaCha8Rng`];
//! results are reproducible from a master seed, independent of worker count.
//! The `examples/` directory demonstrates each capability end to end; the
//! `coevgan` binary exposes the experiment harness as subcommands.

pub mod coevo;
pub mod gaussmix;
pub mod grid;
pub mod harness;
pub mod mixture;
pub mod problem;
pub mod seeding;

pub use problem::{DiscriminatorParams, GeneratorParams, TheoreticalGan};
