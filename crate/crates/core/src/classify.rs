//! Asymptotic law of `μ^{(nδ)}(e)` for the product walk.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::factors::finite::gcd;
use crate::factors::SingularityDescriptor;
use crate::kernel::Kernel;
use crate::product::{FreeProduct, CRITICAL_TOL, WARNING_BAND};
use crate::series::PowerSeries;

/// `(q, k) ↦ (λ, κ)`: `λ = q + 1`, and `κ = k` unless `q` is an integer,
/// where the leading power is analytic and `κ = k − 1`.
pub fn darboux_map(q: f64, k: u32) -> Result<(f64, u32)> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidSingularity { q, k });
    }
    let integer = (q - q.round()).abs() < 1e-12;
    if integer {
        if k == 0 {
            return Err(Error::InvalidSingularity { q, k });
        }
        Ok((q + 1.0, k - 1))
    } else {
        Ok((q + 1.0, k))
    }
}

/// gcd of the factor periods.
pub fn period(periods: &[u32]) -> u32 {
    periods.iter().fold(0, |g, p| gcd(g, *p))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LawKind {
    Inherited {
        factor: usize,
        lambda: f64,
        kappa: u32,
    },
    ThreeHalves,
    OneHalfDegenerate,
}

impl LawKind {
    pub fn lambda(&self) -> f64 {
        match self {
            LawKind::Inherited { lambda, .. } => *lambda,
            LawKind::ThreeHalves => 1.5,
            LawKind::OneHalfDegenerate => 0.5,
        }
    }

    pub fn kappa(&self) -> u32 {
        match self {
            LawKind::Inherited { kappa, .. } => *kappa,
            _ => 0,
        }
    }
}

impl fmt::Display for LawKind {
    /// `n^-5/2`, `n^-3`, `n^-3 log^2 n`, …
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lambda = self.lambda();
        let twice = 2.0 * lambda;
        if (twice - twice.round()).abs() < 1e-9 {
            let t = twice.round() as i64;
            if t % 2 == 0 {
                write!(f, "n^-{}", t / 2)?;
            } else {
                write!(f, "n^-{t}/2")?;
            }
        } else {
            write!(f, "n^-{lambda}")?;
        }
        match self.kappa() {
            0 => Ok(()),
            1 => write!(f, " log n"),
            k => write!(f, " log^{k} n"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Exact,
    NearCritical,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticLaw {
    pub radius: f64,
    pub period: u32,
    pub kind: LawKind,
    pub confidence: Confidence,
    pub psi_bar: Ext,
}

/// Among tied factors, the one whose leading singular term dominates:
/// smallest `λ`, then largest `κ`, then smallest index.
pub fn pick_inherited<F>(candidates: &[usize], sing: F) -> Result<(usize, SingularityDescriptor)>
where
    F: Fn(usize) -> Option<SingularityDescriptor>,
{
    let mut best: Option<(usize, SingularityDescriptor)> = None;
    for &i in candidates {
        let s = sing(i).ok_or(Error::MissingSingularity(i))?;
        best = match best {
            None => Some((i, s)),
            Some((j, b)) => {
                let better = s.lambda < b.lambda - 1e-12
                    || ((s.lambda - b.lambda).abs() <= 1e-12 && s.kappa > b.kappa);
                if better {
                    Some((i, s))
                } else {
                    Some((j, b))
                }
            }
        };
    }
    best.ok_or_else(|| Error::Inconsistent("no inheriting factor".into()))
}

pub fn confidence(psi: Ext) -> Confidence {
    match psi {
        Ext::Finite(p) if p.abs() <= WARNING_BAND => Confidence::NearCritical,
        _ => Confidence::Exact,
    }
}

/// The law selected by `Ψ(θ̄)` and the factors attaining `θ̄`.
pub fn law_kind(
    parts: &[Arc<dyn Kernel>],
    argmin: &[usize],
    psi_bar: Ext,
    degenerate: bool,
) -> Result<LawKind> {
    if degenerate {
        return Ok(LawKind::OneHalfDegenerate);
    }
    match psi_bar {
        Ext::Finite(psi) if psi > CRITICAL_TOL => {
            for &i in argmin {
                if !parts[i].gprime_at_radius().is_finite() {
                    return Err(Error::Inconsistent(format!(
                        "factor {i} attains theta_bar with infinite G' but Psi(theta_bar) = {psi} > 0"
                    )));
                }
            }
            let (i, s) = pick_inherited(argmin, |i| parts[i].singularity())?;
            Ok(LawKind::Inherited {
                factor: i,
                lambda: s.lambda,
                kappa: s.kappa,
            })
        }
        _ => Ok(LawKind::ThreeHalves),
    }
}

fn decide(p: &FreeProduct) -> Result<AsymptoticLaw> {
    let a = p.analytics();
    Ok(AsymptoticLaw {
        radius: a.radius,
        period: a.period,
        kind: law_kind(p.parts(), &a.argmin, a.psi_bar, a.degenerate)?,
        confidence: confidence(a.psi_bar),
        psi_bar: a.psi_bar,
    })
}

/// Two-factor classification.
pub fn classify_two(p: &FreeProduct) -> Result<AsymptoticLaw> {
    if p.parts().len() != 2 {
        return Err(Error::InvalidSpec(format!(
            "classify_two needs two factors, got {}",
            p.parts().len()
        )));
    }
    decide(p)
}

/// Direct `m`-factor classification from `θ̄` and
/// `Ψ(θ̄) = 1 + Σ (Ψ_i(α_i θ̄) − 1)`.
pub fn classify_direct(p: &FreeProduct) -> Result<AsymptoticLaw> {
    decide(p)
}

/// `m`-factor classification by folding: `Γ_1 ∗ … ∗ Γ_{m−1}` with
/// renormalized weights becomes one factor, then the two-factor tree runs on
/// it and `Γ_m`. Factor indices refer to the original product.
pub fn classify_multi(p: &FreeProduct) -> Result<AsymptoticLaw> {
    let m = p.parts().len();
    if m == 2 {
        return classify_two(p);
    }
    let w = p.weights();
    let head = FreeProduct::new(p.parts()[..m - 1].to_vec(), &w[..m - 1])?;
    let head_law = classify_multi(&head)?;
    let head_weight: f64 = w[..m - 1].iter().sum();
    let outer = FreeProduct::new(
        vec![Arc::new(head) as Arc<dyn Kernel>, p.parts()[m - 1].clone()],
        &[head_weight, w[m - 1]],
    )?;
    let mut law = classify_two(&outer)?;
    law.kind = match law.kind {
        LawKind::Inherited { factor: 0, .. } => match head_law.kind {
            inherited @ LawKind::Inherited { .. } => inherited,
            _ => LawKind::ThreeHalves,
        },
        LawKind::Inherited { lambda, kappa, .. } => LawKind::Inherited {
            factor: m - 1,
            lambda,
            kappa,
        },
        other => other,
    };
    Ok(law)
}

/// Classification entry point: two-factor tree or the fold.
pub fn classify(p: &FreeProduct) -> Result<AsymptoticLaw> {
    classify_multi(p)
}

/// Estimates `λ` from `c_{n+δ} ρ^δ / c_n ≈ ((n+δ)/n)^{-λ} (log(n+δ)/log n)^κ`,
/// Richardson-extrapolated in `1/n` between `n_hi/2` and `n_hi`.
pub fn fit_exponent(
    series: &PowerSeries,
    radius: f64,
    period: u32,
    n_range: (usize, usize),
    kappa: u32,
) -> Result<f64> {
    let d = period.max(1) as usize;
    let (lo, hi) = n_range;
    let hi = (hi / d) * d;
    if hi + d > series.order() || hi < 4 * d || lo >= hi {
        return Err(Error::InsufficientData(format!(
            "n_range {:?} with period {d} needs a series of order >= {}",
            n_range,
            hi + d
        )));
    }
    let local = |n: usize| -> Result<f64> {
        let (a, b) = (series.coeff(n), series.coeff(n + d));
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InsufficientData(format!(
                "zero coefficient near n = {n} on the period lattice"
            )));
        }
        let ratio = (b / a).ln() + d as f64 * radius.ln();
        let step = ((n + d) as f64 / n as f64).ln();
        let log_corr = if kappa > 0 {
            kappa as f64 * ((n + d) as f64).ln().ln() - kappa as f64 * (n as f64).ln().ln()
        } else {
            0.0
        };
        Ok((-ratio + log_corr) / step)
    };
    let n1 = ((hi / 2).max(lo) / d).max(1) * d;
    let (l1, l2) = (local(n1)?, local(hi)?);
    let (x1, x2) = (n1 as f64, hi as f64);
    Ok((x2 * l2 - x1 * l1) / (x2 - x1))
}
