//! The free-product functional equation `G(z) = Φ(zG(z))` with
//! `Φ(t) = Σ Φ_i(α_i t) − (m − 1)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::classify::pick_inherited;
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::factors::{
    analyze_factor, finite::gcd, FactorSpec, GreenAnalytics, SingularityDescriptor,
};
use crate::kernel::{at_point, At, Kernel, PhiDerivs, AT_THETA_RTOL};
use crate::series::{solve_implicit_green, OnlineComposer, PowerSeries};

/// `|Ψ(θ̄)|` at or below this counts as `Ψ(θ̄) = 0`.
pub const CRITICAL_TOL: f64 = 1e-8;
/// `|Ψ(θ̄)|` at or below this is flagged as near-critical.
pub const WARNING_BAND: f64 = 1e-4;

/// Factors and (normalized) mixing weights.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FreeProductSpec {
    pub factors: Vec<FactorSpec>,
    pub weights: Vec<f64>,
}

impl FreeProductSpec {
    /// Checks `m >= 2` and positive weights, and normalizes the weights.
    pub fn new(factors: Vec<FactorSpec>, weights: Vec<f64>) -> Result<Self> {
        let weights = normalize_weights(factors.len(), &weights)?;
        for f in &factors {
            f.validate()?;
        }
        Ok(FreeProductSpec { factors, weights })
    }

    pub fn two(a: FactorSpec, b: FactorSpec, alpha1: f64) -> Result<Self> {
        Self::new(vec![a, b], vec![alpha1, 1.0 - alpha1])
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }
}

pub(crate) fn normalize_weights(m: usize, weights: &[f64]) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::InvalidSpec(format!(
            "a free product needs at least two factors, got {m}"
        )));
    }
    if weights.len() != m {
        return Err(Error::InvalidSpec(format!(
            "{} weights given for {m} factors",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::InvalidSpec(
            "weights must be positive and finite".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    Ok(weights.iter().map(|w| w / total).collect())
}

/// Analyzed factors with their series to `order`.
pub fn analyze_factors(spec: &FreeProductSpec, order: usize) -> Result<Vec<Arc<GreenAnalytics>>> {
    spec.factors
        .iter()
        .map(|f| analyze_factor(f, order).map(Arc::new))
        .collect()
}

/// Invariants of the product walk.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductAnalytics {
    pub theta_bar: Ext,
    pub argmin: Vec<usize>,
    pub psi_bar: Ext,
    pub phi_bar: Ext,
    /// `Φ''(θ̄)`, when it was needed and could be evaluated.
    pub phi2_bar: Option<Ext>,
    pub radius: f64,
    pub g_at_radius: Ext,
    pub gprime_at_radius: Ext,
    /// `θ = ρ G(ρ)`: equals `θ̄` when `Ψ(θ̄) >= 0`, the root of `Ψ` otherwise.
    pub theta: Ext,
    pub period: u32,
    pub sqrt_coeff: Option<(f64, f64)>,
    /// `(Z/2Z) ∗ (Z/2Z)`: recurrent, radius 1.
    pub degenerate: bool,
}

/// A free product of kernels; itself a kernel, so products can be nested.
#[derive(Clone, Debug)]
pub struct FreeProduct {
    parts: Vec<Arc<dyn Kernel>>,
    weights: Vec<f64>,
    analytics: ProductAnalytics,
}

impl FreeProduct {
    pub fn new(parts: Vec<Arc<dyn Kernel>>, weights: &[f64]) -> Result<Self> {
        let weights = normalize_weights(parts.len(), weights)?;
        let analytics = analyze_product(&parts, &weights)?;
        Ok(FreeProduct {
            parts,
            weights,
            analytics,
        })
    }

    /// Analyzes every factor of `spec` and builds the product.
    pub fn from_spec(spec: &FreeProductSpec, order: usize) -> Result<Self> {
        let parts = analyze_factors(spec, order)?
            .into_iter()
            .map(|a| a as Arc<dyn Kernel>)
            .collect();
        Self::new(parts, &spec.weights)
    }

    pub fn parts(&self) -> &[Arc<dyn Kernel>] {
        &self.parts
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn analytics(&self) -> &ProductAnalytics {
        &self.analytics
    }

    /// `Ψ(t) = 1 + Σ (Ψ_j(α_j t) − 1)` for `t <= θ̄`.
    pub fn psi_sum(&self, t: f64) -> Result<f64> {
        psi_sum(&self.parts, &self.weights, t)
    }

    pub fn phi_sum(&self, t: f64) -> Result<PhiDerivs> {
        phi_sum(&self.parts, &self.weights, t)
    }
}

fn psi_sum(parts: &[Arc<dyn Kernel>], weights: &[f64], t: f64) -> Result<f64> {
    let mut s = 1.0;
    for (k, a) in parts.iter().zip(weights) {
        s += k.psi(at_point(k.as_ref(), a * t))? - 1.0;
    }
    Ok(s)
}

fn phi_sum(parts: &[Arc<dyn Kernel>], weights: &[f64], t: f64) -> Result<PhiDerivs> {
    let mut value = Ext::Finite(1.0 - parts.len() as f64);
    let mut d1 = Ext::Finite(0.0);
    let mut d2 = Some(Ext::Finite(0.0));
    for (k, a) in parts.iter().zip(weights) {
        let p = k.phi(at_point(k.as_ref(), a * t))?;
        value = value + p.value;
        d1 = d1 + p.d1.scale(*a);
        d2 = d2.zip(p.d2).map(|(s, x)| s + x.scale(a * a));
    }
    Ok(PhiDerivs { value, d1, d2 })
}

/// `θ̄ = min θ_i / α_i` and every index attaining it (relative tolerance
/// `1e-12`).
pub fn theta_bar(parts: &[Arc<dyn Kernel>], weights: &[f64]) -> (Ext, Vec<usize>) {
    let ratios: Vec<Ext> = parts
        .iter()
        .zip(weights)
        .map(|(k, a)| k.theta().div(*a))
        .collect();
    let min = ratios.iter().copied().fold(Ext::PosInf, Ext::min);
    let argmin = match min {
        Ext::Finite(m) => ratios
            .iter()
            .enumerate()
            .filter(|(_, r)| matches!(r, Ext::Finite(x) if *x <= m * (1.0 + AT_THETA_RTOL)))
            .map(|(i, _)| i)
            .collect(),
        _ => (0..parts.len()).collect(),
    };
    (min, argmin)
}

/// `Ψ(θ̄)`; `−∞` by convention when `θ̄ = ∞`.
pub fn psi_bar(parts: &[Arc<dyn Kernel>], weights: &[f64]) -> Result<Ext> {
    match theta_bar(parts, weights).0 {
        Ext::Finite(t) => Ok(Ext::Finite(psi_sum(parts, weights, t)?)),
        _ => Ok(Ext::NegInf),
    }
}

/// Root of the decreasing function `Ψ` on `(0, hi)`, where `Ψ(hi) < 0`.
fn psi_root(parts: &[Arc<dyn Kernel>], weights: &[f64], hi: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if psi_sum(parts, weights, mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            return Ok(0.5 * (lo + hi));
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `(ρ, G(ρ), θ)` of the product.
pub fn product_radius(parts: &[Arc<dyn Kernel>], weights: &[f64]) -> Result<(f64, Ext, Ext)> {
    if parts.len() == 2 && parts.iter().all(|k| k.is_z2()) {
        return Ok((1.0, Ext::PosInf, Ext::PosInf));
    }
    let (tb, _) = theta_bar(parts, weights);
    let root_hi = match tb {
        Ext::Finite(t) => {
            let psi = psi_sum(parts, weights, t)?;
            if psi >= 0.0 {
                let phi = phi_sum(parts, weights, t)?.value;
                let g = phi.finite().ok_or_else(|| {
                    Error::Inconsistent("Phi(theta_bar) infinite with Psi >= 0".into())
                })?;
                return Ok((t / g, Ext::Finite(g), Ext::Finite(t)));
            }
            t
        }
        _ => {
            let mut t = 1.0;
            let mut doublings = 0;
            while psi_sum(parts, weights, t)? >= 0.0 {
                t *= 2.0;
                doublings += 1;
                if doublings > 200 {
                    return Err(Error::RootNotBracketed("Psi(t) with theta_bar = inf"));
                }
            }
            t
        }
    };
    let root = psi_root(parts, weights, root_hi)?;
    let g = phi_sum(parts, weights, root)?
        .value
        .finite()
        .ok_or(Error::RootNotBracketed("Psi(t)"))?;
    Ok((root / g, Ext::Finite(g), Ext::Finite(root)))
}

fn analyze_product(parts: &[Arc<dyn Kernel>], weights: &[f64]) -> Result<ProductAnalytics> {
    let (tb, argmin) = theta_bar(parts, weights);
    let psi = psi_bar(parts, weights)?;
    let period = parts.iter().fold(0, |g, k| gcd(g, k.period()));
    let degenerate = parts.len() == 2 && parts.iter().all(|k| k.is_z2());
    let phi_bar = match tb {
        Ext::Finite(t) => phi_sum(parts, weights, t)?.value,
        _ => Ext::PosInf,
    };
    let (radius, g_at_radius, theta) = product_radius(parts, weights)?;
    let gprime_at_radius = match (psi, tb) {
        (Ext::Finite(p), Ext::Finite(t)) if p > 0.0 => {
            let d1 = phi_sum(parts, weights, t)?.d1.to_f64();
            let g = g_at_radius.to_f64();
            let den = 1.0 - radius * d1;
            if den > 0.0 {
                Ext::Finite(d1 * g / den)
            } else {
                Ext::PosInf
            }
        }
        _ => Ext::PosInf,
    };
    let mut a = ProductAnalytics {
        theta_bar: tb,
        argmin,
        psi_bar: psi,
        phi_bar,
        phi2_bar: None,
        radius,
        g_at_radius,
        gprime_at_radius,
        theta,
        period,
        sqrt_coeff: None,
        degenerate,
    };
    if let (Ext::Finite(p), Ext::Finite(t)) = (psi, tb) {
        if p.abs() <= CRITICAL_TOL {
            if let Some(d2) = phi_sum(parts, weights, t)?.d2 {
                a.phi2_bar = Some(d2);
                a.sqrt_coeff = sqrt_from(a.g_at_radius.to_f64(), radius, d2);
            }
        }
    }
    Ok(a)
}

fn sqrt_from(g0: f64, rho: f64, phi2: Ext) -> Option<(f64, f64)> {
    match phi2 {
        Ext::Finite(d2) if d2 > 0.0 => Some((g0, -(2.0 * g0 / (rho.powi(3) * d2)).sqrt())),
        Ext::PosInf => Some((g0, 0.0)),
        _ => None,
    }
}

/// `(g₀, g₁)` of `G(z) = g₀ + g₁ √(ρ − z) + o(√(ρ − z))` when `Ψ(θ̄) = 0`.
pub fn sqrt_coefficient(product: &FreeProduct) -> Result<(f64, f64)> {
    let a = product.analytics();
    let psi = a.psi_bar.to_f64();
    if !(psi.abs() <= CRITICAL_TOL) {
        return Err(Error::NotAtCriticality(psi));
    }
    let t = a.theta_bar.to_f64();
    let d2 = product
        .phi_sum(t)?
        .d2
        .ok_or(Error::NeedsDerivative("Phi''(theta_bar)"))?;
    match d2 {
        Ext::Finite(x) if x > 0.0 => {}
        Ext::Finite(x) => {
            return Err(Error::Inconsistent(format!(
                "Phi''(theta_bar) = {x} must be positive"
            )))
        }
        _ => return Err(Error::NeedsDerivative("Phi''(theta_bar) (infinite)")),
    }
    sqrt_from(a.g_at_radius.to_f64(), a.radius, d2)
        .ok_or_else(|| Error::Inconsistent("square-root coefficient".into()))
}

/// The leading singular term of the product as a factor: inherited when
/// `Ψ(θ̄) > 0`, a square root otherwise.
fn product_singularity(
    parts: &[Arc<dyn Kernel>],
    a: &ProductAnalytics,
) -> Option<SingularityDescriptor> {
    match a.psi_bar {
        Ext::Finite(p) if p > CRITICAL_TOL => pick_inherited(&a.argmin, |i| parts[i].singularity())
            .ok()
            .and_then(|(i, _)| parts[i].singularity()),
        _ if a.degenerate => None,
        _ => SingularityDescriptor::new(0.5, 0).ok(),
    }
}

impl Kernel for FreeProduct {
    fn radius(&self) -> f64 {
        self.analytics.radius
    }

    fn g_at_radius(&self) -> Ext {
        self.analytics.g_at_radius
    }

    fn gprime_at_radius(&self) -> Ext {
        self.analytics.gprime_at_radius
    }

    fn period(&self) -> u32 {
        self.analytics.period
    }

    fn singularity(&self) -> Option<SingularityDescriptor> {
        product_singularity(&self.parts, &self.analytics)
    }

    fn theta(&self) -> Ext {
        self.analytics.theta
    }

    fn psi(&self, at: At) -> Result<f64> {
        match (at, self.analytics.theta) {
            (At::T(t), _) => self.psi_sum(t),
            (At::Theta, Ext::Finite(t)) => Ok(self.psi_sum(t)?.max(0.0)),
            (At::Theta, _) => {
                let mut s = 1.0;
                for k in &self.parts {
                    s += k.psi(At::Theta)? - 1.0;
                }
                Ok(s)
            }
        }
    }

    fn phi(&self, at: At) -> Result<PhiDerivs> {
        match (at, self.analytics.theta) {
            (At::T(t), _) => self.phi_sum(t),
            (At::Theta, Ext::Finite(t)) => self.phi_sum(t),
            (At::Theta, _) => Ok(PhiDerivs {
                value: Ext::PosInf,
                d1: Ext::Finite(1.0 / self.analytics.radius),
                d2: Some(Ext::PosInf),
            }),
        }
    }
}

/// Common period of a set of series: gcd of the indices of nonzero
/// coefficients.
pub fn support_gcd(series: &[&PowerSeries]) -> usize {
    let mut g = 0u32;
    for s in series {
        for (n, c) in s.coeffs().iter().enumerate() {
            if *c != 0.0 {
                g = gcd(g, n as u32);
            }
        }
    }
    g.max(1) as usize
}

/// Exact return probabilities of the product walk to `order`.
///
/// Uses `ζ_i = α_i z / (1 − z Σ_{j≠i} α_j V_j(ζ_j))` with `V_j = U_j(w)/w`
/// and `G = 1 / (1 − z Σ α_j V_j(ζ_j))`. Every series involved has
/// nonnegative coefficients, so no cancellation occurs.
pub fn product_green_series(
    factors: &[&PowerSeries],
    weights: &[f64],
    order: usize,
) -> Result<PowerSeries> {
    product_green_series_scaled(factors, weights, 1.0, order)
}

/// Coefficients of `G(s z)`, i.e. `μ^{(n)}(e) s^n`. With `s = ρ` they decay
/// only polynomially, which keeps high orders clear of underflow. Since `z`
/// enters only through `α_j z`, this is the same recursion with weights
/// `s α_j`.
pub fn product_green_series_scaled(
    factors: &[&PowerSeries],
    weights: &[f64],
    scale: f64,
    order: usize,
) -> Result<PowerSeries> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "series scale {scale} must be positive"
        )));
    }
    let weights: Vec<f64> = normalize_weights(factors.len(), weights)?
        .iter()
        .map(|w| w * scale)
        .collect();
    if let Some(short) = factors.iter().find(|s| s.order() < order) {
        return Err(Error::InsufficientData(format!(
            "factor series of order {} for product order {order}",
            short.order()
        )));
    }
    if order == 0 {
        return Ok(PowerSeries::one(0));
    }
    let m = factors.len();
    let stride = support_gcd(factors);
    let mut comps = Vec::with_capacity(m);
    for g in factors {
        let g = g.truncate(order);
        let u = &PowerSeries::one(order) - &g.reciprocal()?;
        let v = u.div_z()?;
        comps.push(OnlineComposer::with_stride(v.into_coeffs(), stride));
    }
    // a[j][n] = [z^n] V_j(ζ_j); b[j][n] = Σ_{k≠j} α_k a[k][n]; r[j] = 1/(1 − z b_j)
    let mut a: Vec<Vec<f64>> = comps.iter().map(|c| vec![c.current()]).collect();
    let total = |a: &Vec<Vec<f64>>, n: usize| -> f64 { (0..m).map(|k| weights[k] * a[k][n]).sum() };
    let mut b: Vec<Vec<f64>> = vec![Vec::with_capacity(order); m];
    let t0 = total(&a, 0);
    for j in 0..m {
        b[j].push(t0 - weights[j] * a[j][0]);
    }
    let mut r: Vec<Vec<f64>> = vec![vec![1.0]; m];
    for n in 1..order {
        for j in 0..m {
            let idx = n - 1;
            if idx >= 1 {
                let s: f64 = (1..=idx).map(|i| b[j][i - 1] * r[j][idx - i]).sum();
                r[j].push(s);
            }
            let zeta = weights[j] * r[j][idx];
            let c = comps[j].push(zeta);
            a[j].push(c);
        }
        let t = total(&a, n);
        for j in 0..m {
            b[j].push(t - weights[j] * a[j][n]);
        }
    }
    let mut s = vec![0.0; order + 1];
    for n in 1..=order {
        s[n] = total(&a, n - 1);
    }
    let one_minus_s = &PowerSeries::one(order) - &PowerSeries::new(s);
    one_minus_s.reciprocal()
}

/// The same series through `Φ_i = t / w_i^{-1}(t)` and coefficient fixing
/// in `G = Φ(zG)`. Alternating signs in `Φ_i` make this route lose
/// precision at high order; it serves as a cross-check.
pub fn product_green_series_via_phi(
    factors: &[&PowerSeries],
    weights: &[f64],
    order: usize,
) -> Result<PowerSeries> {
    let weights = normalize_weights(factors.len(), weights)?;
    let mut phi = PowerSeries::constant(1.0 - factors.len() as f64, order);
    for (g, a) in factors.iter().zip(&weights) {
        let phi_i = kernel_series(g, order)?;
        phi = &phi + &phi_i.scale_arg(*a);
    }
    solve_implicit_green(&phi, order)
}

/// `Φ_i` to `order` from the return series `G_i`.
pub fn kernel_series(g: &PowerSeries, order: usize) -> Result<PowerSeries> {
    if g.order() < order {
        return Err(Error::InsufficientData(format!(
            "factor series of order {} for kernel order {order}",
            g.order()
        )));
    }
    // w = z G to order + 1 needs G to order only.
    let w = g.truncate(order + 1).mul_z();
    let v = w.reversion()?;
    v.div_z()?.reciprocal()
}

/// `ζ_1, …, ζ_m` at `z`, by damped monotone fixed-point iteration.
pub fn zeta_at(factors: &[&GreenAnalytics], weights: &[f64], z: f64) -> Result<Vec<f64>> {
    let weights = normalize_weights(factors.len(), weights)?;
    let m = factors.len();
    if z == 0.0 {
        return Ok(vec![0.0; m]);
    }
    if !(z > 0.0) {
        return Err(Error::OutOfDomain {
            quantity: "zeta argument",
            value: z,
            domain: "[0, radius]".into(),
        });
    }
    // A_j(ζ) = U_j(ζ)/ζ = (1 − 1/G_j(ζ))/ζ
    let a_of = |j: usize, x: f64| -> Result<f64> {
        if x == 0.0 {
            return Ok(0.0);
        }
        let g = factors[j].green(x, 0)?.to_f64();
        Ok((1.0 - 1.0 / g) / x)
    };
    let mut zeta: Vec<f64> = weights.iter().map(|a| a * z).collect();
    let mut damping = 1.0;
    let mut last_step: Vec<f64> = vec![0.0; m];
    for _ in 0..20_000 {
        let aa: Vec<f64> = (0..m).map(|j| a_of(j, zeta[j])).collect::<Result<_>>()?;
        let total: f64 = (0..m).map(|j| weights[j] * aa[j]).sum();
        let mut delta: f64 = 0.0;
        let mut oscillating = false;
        for i in 0..m {
            let den = 1.0 - z * (total - weights[i] * aa[i]);
            if !(den > 0.0) {
                return Err(Error::OutOfDomain {
                    quantity: "zeta argument (beyond the radius)",
                    value: z,
                    domain: "[0, radius]".into(),
                });
            }
            let target = (weights[i] * z / den).min(factors[i].radius);
            let step = damping * (target - zeta[i]);
            if step * last_step[i] < 0.0 {
                oscillating = true;
            }
            last_step[i] = step;
            zeta[i] += step;
            delta = delta.max(step.abs());
        }
        if oscillating {
            damping = 0.5;
        }
        if delta <= 1e-13 {
            return Ok(zeta);
        }
    }
    Err(Error::NoConvergence("zeta fixed-point iteration"))
}

/// Radius estimate from the tail of a series: least squares of
/// `ln c_n = a + b n + c ln n` over the last quarter of the on-period
/// coefficients; returns `e^{-b}`.
pub fn estimate_radius(series: &PowerSeries, period: usize) -> Result<f64> {
    let period = period.max(1);
    let pts: Vec<(f64, f64)> = series
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(n, c)| *n > 0 && n % period == 0 && **c > 0.0)
        .map(|(n, c)| (n as f64, c.ln()))
        .collect();
    let tail = &pts[pts.len() - pts.len() / 4..];
    if tail.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} tail coefficients for a radius estimate",
            tail.len()
        )));
    }
    let x = DMatrix::from_fn(tail.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => tail[i].0,
        _ => tail[i].0.ln(),
    });
    let y = DVector::from_iterator(tail.len(), tail.iter().map(|p| p.1));
    let sol = x
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|_| Error::NoConvergence("radius fit"))?;
    Ok((-sol[1]).exp())
}
