//! Nearest-neighbour walks on `Z^d`.
//!
//! Axis `j` is chosen with probability `β_j`, then the walk steps `+e_j`
//! with probability `p_j` and `-e_j` otherwise. The exponential generating
//! function of return probabilities factorizes into `∏ I0(a_j x)` with
//! `a_j = 2 β_j √(p_j (1 - p_j))`, so
//!
//! ```text
//! G(z) = ∫_0^∞ e^{-s} ∏_j I0(a_j z s) ds
//! ```
//!
//! which is evaluated with scaled Bessel functions and a log-substituted
//! Gauss–Legendre rule.

use serde::Serialize;

use crate::bessel::{i0e, i0pp_e, i1e};
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::quad;
use crate::series::PowerSeries;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatticeSpec {
    beta: Vec<f64>,
    p: Vec<f64>,
}

impl LatticeSpec {
    /// Validates axis weights (positive, summing to one) and forward
    /// probabilities in `(0, 1)`.
    pub fn new(beta: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::InvalidSpec("lattice dimension must be >= 1".into()));
        }
        if beta.len() != p.len() {
            return Err(Error::InvalidSpec(format!(
                "lattice has {} axis weights but {} forward probabilities",
                beta.len(),
                p.len()
            )));
        }
        if beta.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(Error::InvalidSpec(
                "lattice axis weights must be > 0".into(),
            ));
        }
        let total: f64 = beta.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!(
                "lattice axis weights sum to {total}, expected 1"
            )));
        }
        if p.iter().any(|x| !(*x > 0.0 && *x < 1.0)) {
            return Err(Error::InvalidSpec(
                "lattice forward probabilities must lie in (0, 1)".into(),
            ));
        }
        let beta = beta.iter().map(|b| b / total).collect();
        Ok(LatticeSpec { beta, p })
    }

    /// Simple random walk: uniform axes, symmetric steps.
    pub fn simple(d: usize) -> Self {
        assert!(d >= 1);
        LatticeSpec {
            beta: vec![1.0 / d as f64; d],
            p: vec![0.5; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    fn axis_coefficients(&self) -> Vec<f64> {
        self.beta
            .iter()
            .zip(&self.p)
            .map(|(b, p)| 2.0 * b * (p * (1.0 - p)).sqrt())
            .collect()
    }

    /// Spectral radius `Σ β_j √(4 p_j (1 - p_j))`.
    pub fn spectral_radius(&self) -> f64 {
        self.axis_coefficients().iter().sum()
    }

    /// Radius of convergence of the Green function.
    pub fn radius(&self) -> f64 {
        1.0 / self.spectral_radius()
    }

    /// Whether `G^{(deriv)}` diverges at the radius.
    pub fn divergent_at_radius(&self, deriv: u8) -> bool {
        self.dim() <= 2 + 2 * deriv as usize
    }

    /// `G^{(deriv)}(z)` for `z ∈ [0, radius]`; `+∞` where the integral
    /// diverges at the radius.
    pub fn green(&self, z: f64, deriv: u8) -> Result<Ext> {
        assert!(deriv <= 2, "only derivatives up to order 2 are supported");
        let rho = self.radius();
        if !(z >= 0.0 && z <= rho * (1.0 + 1e-14)) {
            return Err(Error::OutOfDomain {
                quantity: "lattice Green function argument",
                value: z,
                domain: format!("[0, {rho}]"),
            });
        }
        let at_radius = z >= rho * (1.0 - 1e-15);
        if at_radius && self.divergent_at_radius(deriv) {
            return Ok(Ext::PosInf);
        }
        let z = z.min(rho);
        let a: Vec<f64> = self.axis_coefficients();
        let kappa = if at_radius {
            0.0
        } else {
            (1.0 - z * self.spectral_radius()).max(0.0)
        };
        let r = self.dim() as f64 / 2.0 - 1.0 - deriv as f64;
        let y_decay = if kappa > 0.0 {
            (50.0 / kappa).max(1.0).ln() + 1.0
        } else {
            f64::INFINITY
        };
        let y_algebraic = if r > 0.0 {
            let amin = a.iter().fold(f64::INFINITY, |m, x| m.min(x * z));
            (1.0 / amin).ln().max(0.0) + 40.0 / r
        } else {
            f64::INFINITY
        };
        let y_max = y_decay.min(y_algebraic);
        debug_assert!(y_max.is_finite());

        let mut i0 = vec![0.0; a.len()];
        let mut i1 = vec![0.0; a.len()];
        let mut integrand = |s: f64| -> f64 {
            let mut prod = 1.0;
            for (j, aj) in a.iter().enumerate() {
                let x = aj * z * s;
                i0[j] = i0e(x);
                prod *= i0[j];
            }
            let weight = (-kappa * s).exp();
            match deriv {
                0 => weight * prod,
                1 => {
                    let mut sum = 0.0;
                    for (j, aj) in a.iter().enumerate() {
                        sum += aj * i1e(aj * z * s) / i0[j];
                    }
                    weight * s * prod * sum
                }
                _ => {
                    let (mut lin, mut sq, mut curv) = (0.0, 0.0, 0.0);
                    for (j, aj) in a.iter().enumerate() {
                        let x = aj * z * s;
                        i1[j] = aj * i1e(x) / i0[j];
                        lin += i1[j];
                        sq += i1[j] * i1[j];
                        curv += aj * aj * i0pp_e(x) / i0[j];
                    }
                    weight * s * s * prod * (curv + lin * lin - sq)
                }
            }
        };
        let head = quad::panel(&mut integrand, 0.0, 1.0);
        let panels = y_max.ceil().max(1.0) as usize;
        let tail = quad::composite(
            |y| {
                let s = y.exp();
                integrand(s) * s
            },
            0.0,
            panels as f64,
            panels,
        );
        Ok(Ext::Finite(head + tail))
    }

    /// Return probabilities `μ^{(n)}(0)` for `n <= order`; odd entries vanish.
    ///
    /// Per-axis return weights `β^{2n} C(2n,n) (pq)^n` are merged axis by
    /// axis with binomial interleaving, in log space.
    pub fn series(&self, order: usize) -> PowerSeries {
        let half = order / 2;
        let lf = log_factorials(2 * half);
        let ln_binom = |n: usize, k: usize| lf[n] - lf[k] - lf[n - k];
        let axis = |j: usize| -> Vec<f64> {
            let lb = self.beta[j].ln();
            let lpq = (self.p[j] * (1.0 - self.p[j])).ln();
            (0..=half)
                .map(|n| 2.0 * n as f64 * lb + ln_binom(2 * n, n) + n as f64 * lpq)
                .collect()
        };
        let mut acc = axis(0);
        for j in 1..self.dim() {
            let next = axis(j);
            acc = (0..=half)
                .map(|n| {
                    // partial products over the first axes underflow, so
                    // sum with a shift
                    let terms: Vec<f64> = (0..=n)
                        .map(|k| ln_binom(2 * n, 2 * k) + acc[k] + next[n - k])
                        .collect();
                    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
                })
                .collect();
        }
        let mut coeffs = vec![0.0; order + 1];
        for (n, l) in acc.iter().enumerate() {
            coeffs[2 * n] = l.exp();
        }
        PowerSeries::new(coeffs)
    }
}

pub(crate) fn log_factorials(n: usize) -> Vec<f64> {
    let mut lf = vec![0.0; n + 1];
    for k in 1..=n {
        lf[k] = lf[k - 1] + (k as f64).ln();
    }
    lf
}

#[cfg(test)]
mod tests {
    use super::*;

    // Exact n-step return probabilities by dynamic programming over sites.
    fn site_dp(spec: &LatticeSpec, steps: usize) -> Vec<f64> {
        use std::collections::HashMap;
        let d = spec.dim();
        let mut dist: HashMap<Vec<i64>, f64> = HashMap::new();
        dist.insert(vec![0; d], 1.0);
        let mut out = vec![1.0];
        for _ in 0..steps {
            let mut next = HashMap::new();
            for (x, pr) in &dist {
                for j in 0..d {
                    for (dir, w) in [(1, spec.p()[j]), (-1, 1.0 - spec.p()[j])] {
                        let mut y = x.clone();
                        y[j] += dir;
                        *next.entry(y).or_insert(0.0) += pr * spec.beta()[j] * w;
                    }
                }
            }
            dist = next;
            out.push(dist.get(&vec![0; d]).copied().unwrap_or(0.0));
        }
        out
    }

    #[test]
    fn radius_formula() {
        assert!((LatticeSpec::simple(4).radius() - 1.0).abs() < 1e-15);
        let s = LatticeSpec::new(vec![1.0], vec![0.8]).unwrap();
        assert!((s.spectral_radius() - 0.8).abs() < 1e-15);
        assert!((s.radius() - 1.25).abs() < 1e-14);
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(LatticeSpec::new(vec![0.5, 0.4], vec![0.5, 0.5]).is_err());
        assert!(LatticeSpec::new(vec![1.0], vec![1.0]).is_err());
        assert!(LatticeSpec::new(vec![1.0, 0.0], vec![0.5, 0.5]).is_err());
        assert!(LatticeSpec::new(vec![], vec![]).is_err());
    }

    #[test]
    fn one_dimensional_series_is_central_binomial() {
        let s = LatticeSpec::simple(1).series(60);
        let mut c = 1.0;
        for n in 0..=30 {
            if n > 0 {
                c *= (2 * n - 1) as f64 / (2 * n) as f64;
            }
            assert!((s.coeff(2 * n) - c).abs() < 1e-13 * c);
            assert_eq!(s.coeff(2 * n + 1), 0.0);
        }
    }

    #[test]
    fn series_matches_site_enumeration() {
        let z2 = LatticeSpec::simple(2);
        assert!((z2.series(2).coeff(2) - 0.25).abs() < 1e-15);
        for spec in [
            LatticeSpec::simple(2),
            LatticeSpec::simple(3),
            LatticeSpec::new(vec![0.5, 0.3, 0.2], vec![0.6, 0.5, 0.3]).unwrap(),
        ] {
            let exact = site_dp(&spec, 12);
            let s = spec.series(12);
            for n in 0..=12 {
                assert!((s.coeff(n) - exact[n]).abs() < 1e-14, "n={n}");
            }
        }
    }

    #[test]
    fn radius_from_series_limit() {
        let spec = LatticeSpec::new(vec![1.0], vec![0.8]).unwrap();
        let s = spec.series(1600);
        let est = s.coeff(1600).powf(-1.0 / 1600.0);
        assert!((est / spec.radius() - 1.0).abs() < 0.01);
    }

    #[test]
    fn green_at_origin_and_recurrent_divergence() {
        for d in 1..=7 {
            let g = LatticeSpec::simple(d).green(0.0, 0).unwrap();
            assert!((g.finite().unwrap() - 1.0).abs() < 1e-14);
        }
        assert!(LatticeSpec::simple(1).green(1.0, 0).unwrap().is_pos_inf());
        assert!(LatticeSpec::simple(2).green(1.0, 0).unwrap().is_pos_inf());
        assert!(LatticeSpec::simple(4).green(1.0, 1).unwrap().is_pos_inf());
        assert!(LatticeSpec::simple(6).green(1.0, 2).unwrap().is_pos_inf());
        assert!(LatticeSpec::simple(3).green(1.5, 0).is_err());
    }

    #[test]
    fn interior_values_match_partial_sums() {
        let spec = LatticeSpec::new(vec![0.6, 0.4], vec![0.5, 0.7]).unwrap();
        let z = 0.85 * spec.radius();
        let s = spec.series(800);
        let g = spec.green(z, 0).unwrap().finite().unwrap();
        assert!((g - s.eval(z)).abs() < 1e-11, "{g} vs {}", s.eval(z));
        let g1 = spec.green(z, 1).unwrap().finite().unwrap();
        assert!((g1 - s.derivative().eval(z)).abs() < 1e-10);
        let g2 = spec.green(z, 2).unwrap().finite().unwrap();
        assert!((g2 - s.derivative().derivative().eval(z)).abs() < 1e-8);
    }

    #[test]
    fn three_dimensional_value_at_radius() {
        // Partial sums plus a fitted C n^{-3/2} (1 + b/n) tail.
        let spec = LatticeSpec::simple(3);
        let order = 8000;
        let s = spec.series(order);
        let partial: f64 = s.coeffs().iter().sum();
        let (n1, n2) = ((order / 2) as f64, (order / 4) as f64);
        let (c1, c2) = (s.coeff(order), s.coeff(order / 2));
        // c(n) n^{3/2} = C (1 + b/n)
        let (y1, y2) = (c1 * n1.powf(1.5), c2 * n2.powf(1.5));
        let b = (y2 - y1) / (y1 / n2 - y2 / n1);
        let c = y1 / (1.0 + b / n1);
        let m = n1 + 0.5;
        let tail = c * (2.0 / m.sqrt() + b * 2.0 / (3.0 * m.powf(1.5)));
        let oracle = partial + tail;
        let g = spec.green(1.0, 0).unwrap().finite().unwrap();
        assert!((g - oracle).abs() < 1e-5, "{g} vs {oracle}");
        assert!((g - 1.516_386_059_1).abs() < 1e-8, "{g}");
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let spec = LatticeSpec::simple(5);
        let h = 1e-5;
        for &z in &[0.3, 0.7, 0.95] {
            let gp = spec.green(z + h, 0).unwrap().to_f64();
            let gm = spec.green(z - h, 0).unwrap().to_f64();
            let g1 = spec.green(z, 1).unwrap().to_f64();
            assert!(((gp - gm) / (2.0 * h) - g1).abs() < 1e-7 * g1.max(1.0));
        }
        let g1 = spec.green(1.0, 1).unwrap().to_f64();
        let left = spec.green(1.0 - 1e-9, 1).unwrap().to_f64();
        assert!((g1 - left).abs() < 1e-3);
    }
}
