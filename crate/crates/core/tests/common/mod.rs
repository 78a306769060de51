#![allow(dead_code)]

pub mod oracles;

use pnsdg::constitutive::ModelParams;
use pnsdg::forms::{Assembler, StepContext};
use pnsdg::mesh::Mesh;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.random_range(-1.0..1.0)).collect()
}

pub fn assembler(level: u32, params: ModelParams) -> Assembler {
    Assembler::new(Mesh::at_level(level), params, 6, 3).expect("valid assembler")
}

/// Largest entry of `J - J_fd` relative to the largest entry of `J`, with
/// central differences of step `h` along every coordinate.
pub fn jacobian_fd_error(a: &Assembler, x: &[f64], ctx: &StepContext, h: f64) -> f64 {
    let sys = a.assemble(x, ctx, true).unwrap();
    let jac = sys.jacobian.unwrap();
    let n = x.len();
    let mut max_diff: f64 = 0.0;
    let mut max_entry: f64 = 0.0;
    let mut y = x.to_vec();
    for j in 0..n {
        y[j] = x[j] + h;
        let rp = a.assemble(&y, ctx, false).unwrap().residual;
        y[j] = x[j] - h;
        let rm = a.assemble(&y, ctx, false).unwrap().residual;
        y[j] = x[j];
        for i in 0..n {
            let fd = (rp[i] - rm[i]) / (2.0 * h);
            let an = jac.get(i, j);
            max_diff = max_diff.max((fd - an).abs());
            max_entry = max_entry.max(an.abs());
        }
    }
    max_diff / max_entry
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
