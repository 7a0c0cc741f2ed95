//! Monte Carlo trajectories of the product walk.
//!
//! Walk `k` draws from ChaCha8 seeded with `seed`, stream `k`, so results do
//! not depend on how walks are split across threads.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{product_steps, word_multiply_in_place, Word};
use crate::error::{Error, Result};
use crate::product::FreeProductSpec;
use crate::series::PowerSeries;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Simulation {
    pub steps: usize,
    pub walks: u64,
    pub seed: u64,
    /// `returns[n]`: walks at the identity after `n` steps.
    pub returns: Vec<u64>,
}

impl Simulation {
    pub fn empirical(&self) -> Vec<f64> {
        self.returns
            .iter()
            .map(|r| *r as f64 / self.walks as f64)
            .collect()
    }
}

const CHUNK: u64 = 1024;

pub fn simulate(spec: &FreeProductSpec, steps: usize, walks: u64, seed: u64) -> Result<Simulation> {
    if walks == 0 {
        return Err(Error::InvalidSpec("walks must be >= 1".into()));
    }
    let (groups, moves) = product_steps(spec)?;
    let pick = WeightedIndex::new(moves.iter().map(|m| m.2))
        .map_err(|e| Error::InvalidSpec(format!("step distribution: {e}")))?;
    let chunks = walks.div_ceil(CHUNK);
    let returns = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts = vec![0u64; steps + 1];
            for k in c * CHUNK..((c + 1) * CHUNK).min(walks) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k);
                let mut word = Word::empty();
                counts[0] += 1;
                for count in counts.iter_mut().skip(1) {
                    let (f, e, _) = &moves[pick.sample(&mut rng)];
                    word_multiply_in_place(&mut word, &groups, *f, e);
                    if word.is_empty() {
                        *count += 1;
                    }
                }
            }
            counts
        })
        .reduce(
            || vec![0u64; steps + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(Simulation {
        steps,
        walks,
        seed,
        returns,
    })
}

/// `(p̂_n − p_n) / √(p_n (1 − p_n) / W)`; zero where both vanish, `±∞` where
/// only the exact value does.
pub fn z_scores(sim: &Simulation, exact: &PowerSeries) -> Vec<f64> {
    sim.empirical()
        .iter()
        .enumerate()
        .map(|(n, phat)| {
            let p = exact.coeff(n);
            let var = p * (1.0 - p) / sim.walks as f64;
            if var > 0.0 {
                (phat - p) / var.sqrt()
            } else if (phat - p).abs() == 0.0 {
                0.0
            } else {
                (phat - p).signum() * f64::INFINITY
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factors::{FactorSpec, FiniteGroupSpec, TreeSpec};
    use crate::mc::bfs_convolution;

    #[test]
    fn deterministic_and_calibrated() {
        let z2 = FactorSpec::FiniteGroup(FiniteGroupSpec::z2());
        let spec = FreeProductSpec::two(z2.clone(), z2, 0.5).unwrap();
        let a = simulate(&spec, 12, 100_000, 42).unwrap();
        let b = simulate(&spec, 12, 100_000, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.returns[0], 100_000);
        let exact = bfs_convolution(&spec, 12).unwrap();
        let z = z_scores(&a, &exact);
        assert!(z.iter().all(|v| v.abs() <= 4.0), "{z:?}");
        let p2 = a.empirical()[2];
        assert!((p2 - 0.5).abs() <= 3.0 * (0.25f64 / 1e5).sqrt());
    }

    #[test]
    fn zero_steps() {
        let t = FactorSpec::Tree(TreeSpec::new(3).unwrap());
        let spec = FreeProductSpec::two(t.clone(), t, 0.5).unwrap();
        let s = simulate(&spec, 0, 10, 1).unwrap();
        assert_eq!(s.returns, vec![10]);
    }
}
