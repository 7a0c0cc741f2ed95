//! Truncated formal power series over `f64`.
//!
//! A [`PowerSeries`] of order `N` stores `c_0 … c_N`; binary operations
//! truncate to the smaller order.

use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;

use crate::error::{Error, Result};

/// Default truncation order.
pub const DEFAULT_ORDER: usize = 512;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerSeries {
    coeffs: Vec<f64>,
}

impl PowerSeries {
    /// Builds a series of order `coeffs.len() - 1`.
    ///
    /// Panics on an empty coefficient list or non-finite coefficients.
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a power series needs at least c_0");
        assert!(
            coeffs.iter().all(|c| c.is_finite()),
            "power series coefficients must be finite"
        );
        PowerSeries { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        PowerSeries {
            coeffs: vec![0.0; order + 1],
        }
    }

    pub fn constant(c: f64, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    pub fn one(order: usize) -> Self {
        Self::constant(1.0, order)
    }

    /// The series `c z^k`.
    pub fn monomial(c: f64, k: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if k <= order {
            s.coeffs[k] = c;
        }
        s
    }

    /// The identity series `z`.
    pub fn identity(order: usize) -> Self {
        Self::monomial(1.0, 1, order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficient of `z^n`, zero beyond the truncation order.
    pub fn coeff(&self, n: usize) -> f64 {
        self.coeffs.get(n).copied().unwrap_or(0.0)
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut coeffs: Vec<f64> = self.coeffs.iter().take(order + 1).copied().collect();
        coeffs.resize(order + 1, 0.0);
        PowerSeries { coeffs }
    }

    pub fn scale(&self, c: f64) -> Self {
        PowerSeries {
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    /// `f(c z)`.
    pub fn scale_arg(&self, c: f64) -> Self {
        let mut p = 1.0;
        let coeffs = self
            .coeffs
            .iter()
            .map(|x| {
                let v = x * p;
                p *= c;
                v
            })
            .collect();
        PowerSeries { coeffs }
    }

    /// `z f(z)`, keeping the order.
    pub fn mul_z(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        coeffs.push(0.0);
        coeffs.extend_from_slice(&self.coeffs[..self.order()]);
        PowerSeries { coeffs }
    }

    /// `f(z) / z`; requires `c_0 = 0`. The order drops by one.
    pub fn div_z(&self) -> Result<Self> {
        if self.coeffs[0] != 0.0 {
            return Err(Error::NonzeroInnerConstant);
        }
        if self.order() == 0 {
            return Ok(Self::zero(0));
        }
        Ok(PowerSeries {
            coeffs: self.coeffs[1..].to_vec(),
        })
    }

    pub fn derivative(&self) -> Self {
        if self.order() == 0 {
            return Self::zero(0);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, c)| n as f64 * c)
            .collect();
        PowerSeries { coeffs }
    }

    /// Horner evaluation of the truncated polynomial.
    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c)
    }

    /// Truncated Cauchy product.
    pub fn mul(&self, other: &PowerSeries) -> PowerSeries {
        let n = self.order().min(other.order());
        let mut out = vec![0.0; n + 1];
        for (i, &a) in self.coeffs.iter().take(n + 1).enumerate() {
            if a == 0.0 {
                continue;
            }
            for (o, &b) in out[i..].iter_mut().zip(other.coeffs.iter()) {
                *o += a * b;
            }
        }
        PowerSeries { coeffs: out }
    }

    /// Multiplicative inverse.
    pub fn reciprocal(&self) -> Result<PowerSeries> {
        let a0 = self.coeffs[0];
        if a0 == 0.0 {
            return Err(Error::ZeroConstantTerm);
        }
        let n = self.order();
        let mut b = vec![0.0; n + 1];
        b[0] = 1.0 / a0;
        for k in 1..=n {
            let s: f64 = (1..=k).map(|i| self.coeffs[i] * b[k - i]).sum();
            b[k] = -s / a0;
        }
        Ok(PowerSeries { coeffs: b })
    }

    /// `self ∘ inner`, truncated to the smaller order.
    pub fn compose(&self, inner: &PowerSeries) -> Result<PowerSeries> {
        if inner.coeffs[0] != 0.0 {
            return Err(Error::NonzeroInnerConstant);
        }
        let n = self.order().min(inner.order());
        // Horner from the top; after folding in c_k the partial result is
        // multiplied by `inner` k more times, so only orders <= n - k matter.
        let mut acc = vec![self.coeffs[n]];
        for k in (0..n).rev() {
            let keep = n - k;
            let mut next = vec![0.0; keep + 1];
            for (i, &a) in acc.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for j in 1..=keep.saturating_sub(i) {
                    next[i + j] += a * inner.coeffs[j];
                }
            }
            next[0] += self.coeffs[k];
            acc = next;
        }
        acc.resize(n + 1, 0.0);
        Ok(PowerSeries { coeffs: acc })
    }

    /// Compositional inverse: `v` with `w ∘ v = v ∘ w = z`.
    pub fn reversion(&self) -> Result<PowerSeries> {
        if self.coeffs[0] != 0.0 {
            return Err(Error::NonzeroInnerConstant);
        }
        let n = self.order();
        if n == 0 {
            return Ok(Self::zero(0));
        }
        let w1 = self.coeffs[1];
        if w1 == 0.0 {
            return Err(Error::NotInvertible);
        }
        let dw = self.derivative();
        let mut v = PowerSeries::monomial(1.0 / w1, 1, n);
        // Newton: v <- v - (w(v) - z) / w'(v); each pass doubles the number
        // of correct coefficients.
        let mut prec = 1;
        while prec < n {
            prec = (2 * prec).min(n);
            let vp = v.truncate(prec);
            let wv = self.truncate(prec).compose(&vp)?;
            let resid = &wv - &PowerSeries::identity(prec);
            let dwv = dw.truncate(prec).compose(&vp)?;
            let step = resid.mul(&dwv.reciprocal()?);
            v = &vp - &step;
        }
        Ok(v.truncate(n))
    }

    /// Coefficientwise maximum absolute difference over the common order.
    pub fn max_abs_diff(&self, other: &PowerSeries) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Solves `g = phi ∘ (z g)` by coefficient fixing: pass `n` determines `g_n`.
pub fn solve_implicit_green(phi: &PowerSeries, order: usize) -> Result<PowerSeries> {
    if phi.order() < order {
        return Err(Error::InsufficientData(format!(
            "kernel of order {} cannot determine {} coefficients",
            phi.order(),
            order
        )));
    }
    let mut g = Vec::with_capacity(order + 1);
    let mut comp = OnlineComposer::new(phi.coeffs()[..=order].to_vec());
    // inner = z g, so inner_n = g_{n-1} is known before g_n is needed.
    g.push(comp.current());
    for n in 1..=order {
        g.push(comp.push(g[n - 1]));
    }
    Ok(PowerSeries::new(g))
}

/// Composition `outer ∘ inner` where the coefficients of `inner` arrive one
/// at a time.
///
/// Keeps the table of powers `inner^k`; pushing `inner_n` makes
/// `[z^n] outer(inner)` available. Total cost is cubic in the order, with a
/// triangular table of quadratic size.
#[derive(Clone, Debug)]
pub struct OnlineComposer {
    outer: Vec<f64>,
    inner: Vec<f64>,
    support: Vec<usize>,
    // powers[k - 1][n - k] = [z^n] inner^k
    powers: Vec<Vec<f64>>,
    result: Vec<f64>,
    stride: usize,
    max_power: usize,
}

impl OnlineComposer {
    /// Starts with `inner_0 = 0`.
    pub fn new(outer: Vec<f64>) -> Self {
        Self::with_stride(outer, 1)
    }

    /// As [`OnlineComposer::new`], for an inner series supported on indices
    /// `≡ 1 (mod stride)`; powers are then only computed on their support.
    pub fn with_stride(outer: Vec<f64>, stride: usize) -> Self {
        assert!(stride >= 1);
        let c0 = outer.first().copied().unwrap_or(0.0);
        let max_power = outer.iter().rposition(|c| *c != 0.0).unwrap_or(0);
        OnlineComposer {
            outer,
            inner: vec![0.0],
            support: Vec::new(),
            powers: Vec::new(),
            result: vec![c0],
            stride,
            max_power,
        }
    }

    /// The latest coefficient of the composition.
    pub fn current(&self) -> f64 {
        *self.result.last().expect("composer holds c_0")
    }

    pub fn result(&self) -> &[f64] {
        &self.result
    }

    /// Appends `inner_n` and returns `[z^n] outer(inner)`.
    pub fn push(&mut self, c: f64) -> f64 {
        let n = self.inner.len();
        debug_assert!(c == 0.0 || n % self.stride == 1 % self.stride);
        self.inner.push(c);
        if c != 0.0 {
            self.support.push(n);
        }
        let top = n.min(self.max_power);
        if top == 0 {
            self.result.push(0.0);
            return 0.0;
        }
        // inner^1
        if self.powers.is_empty() {
            self.powers.push(Vec::new());
        }
        self.powers[0].push(c);
        // inner^k for k = 2..=top; [z^n] inner^k = sum_i inner_i [z^{n-i}] inner^{k-1}
        for k in 2..=top {
            if self.powers.len() < k {
                self.powers.push(Vec::new());
            }
            let (lo, hi) = self.powers.split_at_mut(k - 1);
            let mut s = 0.0;
            if (n - k) % self.stride == 0 {
                let prev = &lo[k - 2];
                for &i in &self.support {
                    if i + (k - 1) > n {
                        break;
                    }
                    s += self.inner[i] * prev[n - i - (k - 1)];
                }
            }
            hi[0].push(s);
        }
        let mut r = 0.0;
        for k in 1..=top {
            r += self.outer[k] * self.powers[k - 1][n - k];
        }
        self.result.push(r);
        r
    }
}

impl Add for &PowerSeries {
    type Output = PowerSeries;
    fn add(self, rhs: &PowerSeries) -> PowerSeries {
        let n = self.order().min(rhs.order());
        PowerSeries {
            coeffs: (0..=n).map(|i| self.coeffs[i] + rhs.coeffs[i]).collect(),
        }
    }
}

impl Sub for &PowerSeries {
    type Output = PowerSeries;
    fn sub(self, rhs: &PowerSeries) -> PowerSeries {
        let n = self.order().min(rhs.order());
        PowerSeries {
            coeffs: (0..=n).map(|i| self.coeffs[i] - rhs.coeffs[i]).collect(),
        }
    }
}

impl Mul for &PowerSeries {
    type Output = PowerSeries;
    fn mul(self, rhs: &PowerSeries) -> PowerSeries {
        PowerSeries::mul(self, rhs)
    }
}

impl Neg for &PowerSeries {
    type Output = PowerSeries;
    fn neg(self) -> PowerSeries {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn geometric(order: usize) -> PowerSeries {
        PowerSeries::new(vec![1.0; order + 1])
    }

    fn central_binomial(n: usize) -> f64 {
        // C(2n, n) 4^{-n} by the product formula
        (1..=n).fold(1.0, |acc, k| acc * (2 * k - 1) as f64 / (2 * k) as f64)
    }

    #[test]
    fn difference_of_squares() {
        let a = PowerSeries::new(vec![1.0, 1.0, 0.0]);
        let b = PowerSeries::new(vec![1.0, -1.0, 0.0]);
        assert_eq!(a.mul(&b).coeffs(), &[1.0, 0.0, -1.0]);
    }

    #[test]
    fn multiplicative_identity() {
        let a = PowerSeries::new(vec![0.3, -1.2, 4.0, 0.5]);
        assert_eq!(a.mul(&PowerSeries::one(3)), a);
    }

    #[test]
    fn order_is_minimum() {
        let a = PowerSeries::one(5);
        let b = PowerSeries::one(3);
        assert_eq!(a.mul(&b).order(), 3);
        assert_eq!((&a + &b).order(), 3);
    }

    #[test]
    fn square_of_central_binomial_series_matches_double_sum() {
        let n = 20;
        let mut c = vec![0.0; 2 * n + 1];
        for k in 0..=n {
            c[2 * k] = central_binomial(k);
        }
        let s = PowerSeries::new(c);
        let sq = s.mul(&s);
        for m in 0..=n {
            let direct: f64 = (0..=m)
                .map(|k| central_binomial(k) * central_binomial(m - k))
                .sum();
            assert!((sq.coeff(2 * m) - direct).abs() < 1e-14);
            // sum_k C(2k,k) C(2m-2k,m-k) = 4^m, so the normalized sum is 1
            assert!((direct - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reciprocal_of_one_minus_z_is_geometric() {
        let a = PowerSeries::new(vec![1.0, -1.0, 0.0, 0.0, 0.0]);
        assert_eq!(a.reciprocal().unwrap(), geometric(4));
    }

    #[test]
    fn reciprocal_rejects_zero_constant() {
        let a = PowerSeries::new(vec![0.0, 1.0]);
        assert_eq!(a.reciprocal(), Err(Error::ZeroConstantTerm));
    }

    #[test]
    fn first_return_series_of_simple_walk_on_z() {
        // U = 1 - 1/G with G = sum C(2n,n) 4^{-n} z^{2n}.
        let n = 30;
        let mut g = vec![0.0; 2 * n + 1];
        for k in 0..=n {
            g[2 * k] = central_binomial(k);
        }
        let g = PowerSeries::new(g);
        let u = &PowerSeries::one(2 * n) - &g.reciprocal().unwrap();

        // First-return oracle: DP over paths on Z that avoid 0 before the end.
        let len = 2 * n;
        let width = len + 2;
        let mut prob = vec![0.0; 2 * width + 1];
        let off = width;
        let mut first_return = vec![0.0; len + 1];
        prob[off] = 1.0;
        for step in 1..=len {
            let mut next = vec![0.0; 2 * width + 1];
            for (x, &p) in prob.iter().enumerate() {
                if p == 0.0 || (x == off && step > 1) {
                    continue;
                }
                next[x - 1] += 0.5 * p;
                next[x + 1] += 0.5 * p;
            }
            first_return[step] = next[off];
            next[off] = 0.0;
            prob = next;
        }
        for step in 0..=len {
            assert!(
                (u.coeff(step) - first_return[step]).abs() < 1e-14,
                "step {step}: {} vs {}",
                u.coeff(step),
                first_return[step]
            );
        }
    }

    #[test]
    fn compose_identity_and_substitution() {
        let z = PowerSeries::identity(6);
        assert_eq!(z.compose(&z).unwrap(), z);
        let geo = geometric(8);
        let z2 = PowerSeries::monomial(1.0, 2, 8);
        let c = geo.compose(&z2).unwrap();
        assert_eq!(c.coeffs(), &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn compose_rejects_nonzero_inner_constant() {
        let a = PowerSeries::one(3);
        assert_eq!(a.compose(&a), Err(Error::NonzeroInnerConstant));
    }

    #[test]
    fn reversion_identity_and_mobius() {
        let z = PowerSeries::identity(10);
        assert_eq!(z.reversion().unwrap(), z);
        // z/(1-z) <-> z/(1+z)
        let w = geometric(12).mul_z();
        let v = w.reversion().unwrap();
        for n in 1..=12 {
            let expect = if n % 2 == 1 { 1.0 } else { -1.0 };
            assert!((v.coeff(n) - expect).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn reversion_rejects_degenerate_input() {
        let w = PowerSeries::monomial(1.0, 2, 5);
        assert_eq!(w.reversion(), Err(Error::NotInvertible));
    }

    #[test]
    fn reversion_of_simple_walk_w_is_two_sided_inverse() {
        let order = 64;
        let mut g = vec![0.0; order + 1];
        for k in 0..=order / 2 {
            g[2 * k] = central_binomial(k);
        }
        let w = PowerSeries::new(g).mul_z();
        let v = w.reversion().unwrap();
        let id = PowerSeries::identity(order);
        assert!(w.compose(&v).unwrap().max_abs_diff(&id) < 1e-12);
        assert!(v.compose(&w).unwrap().max_abs_diff(&id) < 1e-12);
    }

    #[test]
    fn implicit_green_constant_kernel() {
        let g = solve_implicit_green(&PowerSeries::one(10), 10).unwrap();
        assert_eq!(g, PowerSeries::one(10));
    }

    #[test]
    fn implicit_green_matches_naive_fixed_point() {
        // Picard iteration converges one coefficient per pass.
        let phi = PowerSeries::new(vec![1.0, 0.0, 0.25, 0.1, -0.05, 0.02, 0.0, 0.01, 0.0]);
        let g = solve_implicit_green(&phi, 8).unwrap();
        let mut picard = PowerSeries::one(8);
        for _ in 0..10 {
            picard = phi.compose(&picard.mul_z()).unwrap();
        }
        assert!(g.max_abs_diff(&picard) < 1e-15);
        let resid = &g - &phi.compose(&g.mul_z()).unwrap();
        assert!(resid.coeffs().iter().all(|c| c.abs() < 1e-15));
    }

    #[test]
    fn online_composer_matches_batch_composition() {
        let outer = PowerSeries::new(vec![0.5, 1.0, -0.3, 0.2, 0.7, -0.1, 0.05]);
        let inner = PowerSeries::new(vec![0.0, 0.4, 0.0, 0.3, -0.2, 0.1, 0.6]);
        let mut comp = OnlineComposer::new(outer.coeffs().to_vec());
        for n in 1..=6 {
            comp.push(inner.coeff(n));
        }
        let batch = outer.compose(&inner).unwrap();
        for (a, b) in comp.result().iter().zip(batch.coeffs()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn strided_composer_matches_batch_composition() {
        let outer = PowerSeries::new(vec![0.0, 0.9, 0.0, 0.4, 0.0, 0.2, 0.0, 0.1, 0.0, 0.05, 0.0]);
        let inner = PowerSeries::new(vec![0.0, 0.5, 0.0, 0.25, 0.0, 0.1, 0.0, 0.3, 0.0, 0.2, 0.0]);
        let mut comp = OnlineComposer::with_stride(outer.coeffs().to_vec(), 2);
        for n in 1..=10 {
            comp.push(inner.coeff(n));
        }
        let batch = outer.compose(&inner).unwrap();
        for (a, b) in comp.result().iter().zip(batch.coeffs()) {
            assert!((a - b).abs() < 1e-15);
        }
        // a polynomial outer only needs its own powers
        let mut short = OnlineComposer::new(vec![0.0, 0.0, 1.0]);
        for n in 1..=10 {
            short.push(inner.coeff(n));
        }
        let sq = inner.mul(&inner);
        for n in 0..=10 {
            assert!((short.result()[n] - sq.coeff(n)).abs() < 1e-15);
        }
    }

    fn arb_series(order: usize) -> impl Strategy<Value = PowerSeries> {
        proptest::collection::vec(-2.0f64..2.0, order + 1).prop_map(PowerSeries::new)
    }

    proptest! {
        #[test]
        fn ring_axioms(a in arb_series(12), b in arb_series(12), c in arb_series(12)) {
            let lhs = a.mul(&b).mul(&c);
            let rhs = a.mul(&b.mul(&c));
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
            let lhs = a.mul(&(&b + &c));
            let rhs = &a.mul(&b) + &a.mul(&c);
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }

        #[test]
        fn reciprocal_is_an_involution(mut a in arb_series(10), c0 in 0.5f64..2.0) {
            a = &a + &PowerSeries::constant(c0 + 2.5, 10);
            let back = a.reciprocal().unwrap().reciprocal().unwrap();
            prop_assert!(back.max_abs_diff(&a) < 1e-9);
            let prod = a.mul(&a.reciprocal().unwrap());
            prop_assert!(prod.max_abs_diff(&PowerSeries::one(10)) < 1e-12);
        }

        #[test]
        fn reversion_is_two_sided(tail in proptest::collection::vec(-0.3f64..0.3, 9), w1 in 0.5f64..2.0) {
            let mut c = vec![0.0, w1];
            c.extend(tail);
            let w = PowerSeries::new(c);
            let v = w.reversion().unwrap();
            let id = PowerSeries::identity(10);
            prop_assert!(w.compose(&v).unwrap().max_abs_diff(&id) < 1e-10);
            prop_assert!(v.compose(&w).unwrap().max_abs_diff(&id) < 1e-10);
        }
    }
}
