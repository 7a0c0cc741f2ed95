//! Brute-force oracles: exact convolution over normal-form words and Monte
//! Carlo simulation of the product walk.

mod bfs;
mod sim;
mod word;

pub use bfs::{
    bfs_convolution, bfs_convolution_capped, step_distributions, BFS_MEMORY_BUDGET, BFS_STATE_CAP,
};
pub use sim::{simulate, z_scores, Simulation};
pub use word::{word_multiply, word_multiply_in_place, Elem, FactorGroup, Letter, Word};

use crate::error::Result;
use crate::product::FreeProductSpec;

/// One step of the product walk: factor `i` with probability `α_i`, then a
/// step of `μ_i`. Entries are `(factor, element, probability)`.
pub(crate) fn product_steps(
    spec: &FreeProductSpec,
) -> Result<(Vec<FactorGroup>, Vec<(usize, Elem, f64)>)> {
    let groups = spec
        .factors
        .iter()
        .map(FactorGroup::from_spec)
        .collect::<Result<Vec<_>>>()?;
    let mut steps = Vec::new();
    for (i, (g, f)) in groups.iter().zip(&spec.factors).enumerate() {
        for (e, p) in g.steps(f) {
            steps.push((i, e, spec.weights[i] * p));
        }
    }
    Ok((groups, steps))
}
