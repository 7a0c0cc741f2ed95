//! Exact `μ^{(n)}(e)` by dynamic programming over words.
//!
//! The distributions `μ^{(k)}` are built for `k <= ⌈N/2⌉` only, and
//! `μ^{(n)}(e) = Σ_w μ^{(⌈n/2⌉)}(w) μ^{(⌊n/2⌋)}(w^{-1})`. Single-threaded.

use std::collections::HashMap;

use super::{product_steps, word_multiply, Elem, FactorGroup, Word};
use crate::error::{Error, Result};
use crate::product::FreeProductSpec;
use crate::series::PowerSeries;

/// Maximum number of word–probability entries held at once.
pub const BFS_STATE_CAP: usize = 50_000_000;
/// Approximate heap budget for the held maps; exceeding it is reported as a
/// state explosion as well, before the allocator gives up.
pub const BFS_MEMORY_BUDGET: usize = 2 << 30;

fn word_bytes(w: &Word) -> usize {
    64 + w
        .letters()
        .iter()
        .map(|l| {
            48 + match &l.elem {
                Elem::Lattice(v) => 8 * v.len(),
                Elem::Tree(t) => t.len(),
                Elem::Finite(_) => 0,
            }
        })
        .sum::<usize>()
}

/// `μ^{(0)}, …, μ^{(k)}` as maps from words to probabilities.
pub fn step_distributions(
    spec: &FreeProductSpec,
    k: usize,
    cap: usize,
) -> Result<(Vec<FactorGroup>, Vec<HashMap<Word, f64>>)> {
    let (groups, steps) = product_steps(spec)?;
    let mut dists = Vec::with_capacity(k + 1);
    let mut cur: HashMap<Word, f64> = HashMap::from([(Word::empty(), 1.0)]);
    let (mut held, mut bytes) = (1usize, 0usize);
    for _ in 0..k {
        let mut next: HashMap<Word, f64> = HashMap::new();
        for (w, p) in &cur {
            for (f, e, q) in &steps {
                let v = word_multiply(w, &groups, *f, e);
                if !next.contains_key(&v) {
                    bytes += word_bytes(&v);
                }
                *next.entry(v).or_insert(0.0) += p * q;
            }
            if held + next.len() > cap || bytes > BFS_MEMORY_BUDGET {
                return Err(Error::StateExplosion(cap));
            }
        }
        held += next.len();
        dists.push(std::mem::replace(&mut cur, next));
    }
    dists.push(cur);
    Ok((groups, dists))
}

/// `μ^{(n)}(e)` for `n = 0, …, order`.
pub fn bfs_convolution(spec: &FreeProductSpec, order: usize) -> Result<PowerSeries> {
    bfs_convolution_capped(spec, order, BFS_STATE_CAP)
}

pub fn bfs_convolution_capped(
    spec: &FreeProductSpec,
    order: usize,
    cap: usize,
) -> Result<PowerSeries> {
    let half = order.div_ceil(2);
    let (groups, dists) = step_distributions(spec, half, cap)?;
    let mut c = vec![0.0; order + 1];
    for (n, cn) in c.iter_mut().enumerate() {
        let (a, b) = (&dists[n - n / 2], &dists[n / 2]);
        *cn = a
            .iter()
            .map(|(w, p)| p * b.get(&w.inverse(&groups)).copied().unwrap_or(0.0))
            .sum();
    }
    Ok(PowerSeries::new(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factors::{FactorSpec, FiniteGroupSpec, LatticeSpec};

    fn z2z2() -> FreeProductSpec {
        let z2 = FactorSpec::FiniteGroup(FiniteGroupSpec::z2());
        FreeProductSpec::two(z2.clone(), z2, 0.5).unwrap()
    }

    #[test]
    fn small_values() {
        let s = bfs_convolution(&z2z2(), 6).unwrap();
        assert_eq!(s.coeff(0), 1.0);
        assert_eq!(s.coeff(1), 0.0);
        assert!((s.coeff(2) - 0.5).abs() < 1e-15);
        // Z/2 ∗ Z/2 is the infinite dihedral group; the walk is the simple
        // walk on Z, so μ^{(2n)}(e) is C(2n, n)/4^n
        assert!((s.coeff(4) - 6.0 / 16.0).abs() < 1e-15);
        assert!((s.coeff(6) - 20.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn mass_is_conserved() {
        let spec = FreeProductSpec::two(
            FactorSpec::Lattice(LatticeSpec::simple(2)),
            FactorSpec::FiniteGroup(FiniteGroupSpec::cyclic_pm(3, 1).unwrap()),
            0.4,
        )
        .unwrap();
        let (groups, dists) = step_distributions(&spec, 6, BFS_STATE_CAP).unwrap();
        for d in &dists {
            assert!((d.values().sum::<f64>() - 1.0).abs() <= 1e-12);
            assert!(d.keys().all(|w| w.is_normal(&groups)));
        }
    }

    #[test]
    fn cap_is_enforced() {
        let spec = FreeProductSpec::two(
            FactorSpec::Lattice(LatticeSpec::simple(3)),
            FactorSpec::Lattice(LatticeSpec::simple(3)),
            0.5,
        )
        .unwrap();
        assert_eq!(
            bfs_convolution_capped(&spec, 12, 1000),
            Err(Error::StateExplosion(1000))
        );
    }
}
