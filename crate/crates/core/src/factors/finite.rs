//! Group-invariant walks on finite groups.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::series::PowerSeries;

/// A finite group given by its Cayley table, with a step distribution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteGroupSpec {
    matrix: Vec<Vec<f64>>,
    identity: usize,
    table: Vec<Vec<usize>>,
    inverse: Vec<usize>,
    mu: Vec<f64>,
}

impl FiniteGroupSpec {
    /// Validates a transition matrix against a group structure.
    ///
    /// Without a Cayley table the group is taken to be cyclic with
    /// `identity` playing the role of 0, i.e. `x · y = x + y - identity`.
    pub fn new(
        matrix: Vec<Vec<f64>>,
        identity: usize,
        table: Option<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        let n = matrix.len();
        if n < 2 {
            return Err(Error::InvalidSpec(
                "finite group must have order >= 2".into(),
            ));
        }
        if identity >= n {
            return Err(Error::InvalidSpec(format!(
                "identity index {identity} out of range for order {n}"
            )));
        }
        for (x, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidSpec(format!("row {x} of P has wrong length")));
            }
            if row.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidSpec(format!(
                    "row {x} of P has a negative entry"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidSpec(format!("row {x} of P sums to {s}")));
            }
        }
        let table = match table {
            Some(t) => t,
            None => (0..n)
                .map(|x| (0..n).map(|y| (x + y + n - identity) % n).collect())
                .collect(),
        };
        validate_table(&table, identity)?;
        let inverse: Vec<usize> = (0..n)
            .map(|x| (0..n).find(|&y| table[x][y] == identity).unwrap())
            .collect();
        let mu = matrix[identity].clone();
        for x in 0..n {
            for y in 0..n {
                let expect = mu[table[inverse[x]][y]];
                if (matrix[x][y] - expect).abs() > 1e-9 {
                    return Err(Error::InvalidSpec(format!(
                        "P is not group-invariant: P[{x}][{y}] = {} but mu(x^-1 y) = {expect}",
                        matrix[x][y]
                    )));
                }
            }
        }
        // support must generate the group
        let mut seen = vec![false; n];
        seen[identity] = true;
        let mut queue = VecDeque::from([identity]);
        while let Some(x) = queue.pop_front() {
            for (g, &w) in mu.iter().enumerate() {
                if w > 0.0 && !seen[table[x][g]] {
                    seen[table[x][g]] = true;
                    queue.push_back(table[x][g]);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidSpec(
                "support of the step distribution does not generate the group".into(),
            ));
        }
        Ok(FiniteGroupSpec {
            matrix,
            identity,
            table,
            inverse,
            mu,
        })
    }

    /// Walk on `Z/nZ` with `μ(k) = weights[k]`.
    pub fn cyclic(weights: &[f64]) -> Result<Self> {
        let n = weights.len();
        let matrix = (0..n)
            .map(|x| (0..n).map(|y| weights[(y + n - x) % n]).collect())
            .collect();
        Self::new(matrix, 0, None)
    }

    /// Walk on `Z/nZ` stepping `±step` with probability ½ each (a single
    /// step of weight 1 when `2 step ≡ 0`).
    pub fn cyclic_pm(order: usize, step: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidSpec("cyclic order must be >= 2".into()));
        }
        let mut w = vec![0.0; order];
        w[step % order] += 0.5;
        w[(order - step % order) % order] += 0.5;
        Self::cyclic(&w)
    }

    /// `Z/2Z` with the flip step.
    pub fn z2() -> Self {
        Self::cyclic(&[0.0, 1.0]).expect("flip walk is valid")
    }

    pub fn order(&self) -> usize {
        self.matrix.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    /// Step distribution `μ(g) = P[e][g]`.
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn mul(&self, x: usize, y: usize) -> usize {
        self.table[x][y]
    }

    pub fn inv(&self, x: usize) -> usize {
        self.inverse[x]
    }

    /// Radius of convergence of the return series: 1 for stochastic `P`.
    pub fn radius(&self) -> f64 {
        1.0
    }

    fn p_matrix(&self) -> DMatrix<f64> {
        let n = self.order();
        DMatrix::from_fn(n, n, |i, j| self.matrix[i][j])
    }

    /// Entry `(e, e)` of `(I - zP)^{-1}` and its derivatives; `+∞` at `z = 1`.
    pub fn green(&self, z: f64, deriv: u8) -> Result<Ext> {
        assert!(deriv <= 2);
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::OutOfDomain {
                quantity: "finite-group Green function argument",
                value: z,
                domain: "[0, 1]".into(),
            });
        }
        if z == 1.0 {
            return Ok(Ext::PosInf);
        }
        let n = self.order();
        let p = self.p_matrix();
        let a = DMatrix::identity(n, n) - &p * z;
        let lu = a.clone().lu();
        let e = DVector::from_fn(n, |i, _| if i == self.identity { 1.0 } else { 0.0 });
        let x = lu
            .solve(&e)
            .ok_or(Error::NoConvergence("resolvent solve"))?;
        if deriv == 0 {
            return Ok(Ext::Finite(x[self.identity]));
        }
        let y = a
            .transpose()
            .lu()
            .solve(&e)
            .ok_or(Error::NoConvergence("resolvent solve"))?;
        let px = &p * &x;
        if deriv == 1 {
            return Ok(Ext::Finite(y.dot(&px)));
        }
        // d²/dz² R = 2 R P R P R
        let rpx = lu
            .solve(&px)
            .ok_or(Error::NoConvergence("resolvent solve"))?;
        Ok(Ext::Finite(2.0 * y.dot(&(&p * rpx))))
    }

    /// gcd of the return times, scanned up to `max(2n², 64)` steps.
    pub fn period(&self) -> u32 {
        let n = self.order();
        let horizon = (2 * n * n).max(64);
        let mut reach = vec![false; n];
        reach[self.identity] = true;
        let mut g = 0u32;
        for step in 1..=horizon {
            let mut next = vec![false; n];
            for x in 0..n {
                if reach[x] {
                    for y in 0..n {
                        if self.matrix[x][y] > 0.0 {
                            next[y] = true;
                        }
                    }
                }
            }
            reach = next;
            if reach[self.identity] {
                g = gcd(g, step as u32);
                if g == 1 {
                    break;
                }
            }
        }
        g
    }

    /// `μ^{(n)}(e)` by vector–matrix powers.
    pub fn series(&self, order: usize) -> PowerSeries {
        let n = self.order();
        let mut v = vec![0.0; n];
        v[self.identity] = 1.0;
        let mut coeffs = vec![1.0];
        for _ in 0..order {
            let mut next = vec![0.0; n];
            for x in 0..n {
                if v[x] == 0.0 {
                    continue;
                }
                for y in 0..n {
                    next[y] += v[x] * self.matrix[x][y];
                }
            }
            v = next;
            coeffs.push(v[self.identity]);
        }
        PowerSeries::new(coeffs)
    }
}

fn validate_table(table: &[Vec<usize>], identity: usize) -> Result<()> {
    let n = table.len();
    let bad = |m: &str| Err(Error::InvalidSpec(format!("Cayley table: {m}")));
    for row in table {
        if row.len() != n || row.iter().any(|&v| v >= n) {
            return bad("entries out of range");
        }
        let mut seen = vec![false; n];
        for &v in row {
            if seen[v] {
                return bad("not a Latin square");
            }
            seen[v] = true;
        }
    }
    for x in 0..n {
        if table[identity][x] != x || table[x][identity] != x {
            return bad("identity element does not act trivially");
        }
        for y in 0..n {
            for z in 0..n {
                if table[table[x][y]][z] != table[x][table[y][z]] {
                    return bad("not associative");
                }
            }
        }
    }
    Ok(())
}

pub(crate) fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
