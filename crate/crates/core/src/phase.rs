//! Phase diagram of a two-factor product in the mixing weight `α_1`:
//! `Υ(α_1) = Ψ(θ̄)` is decreasing on `(0, α_c]` and increasing on `[α_c, 1)`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::classify::{law_kind, LawKind};
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::factors::{analyze_factor, FactorSpec, LatticeSpec};
use crate::kernel::{At, Kernel};
use crate::product::{psi_bar, theta_bar, WARNING_BAND};

pub const DEFAULT_GRID: usize = 512;
/// Bisection tolerance on `α_1`.
pub const ROOT_TOL: f64 = 1e-10;
/// `|Υ(α_c)|` at or below this is a case-F candidate.
pub const CASE_F_TOL: f64 = 1e-6;

/// Regime labels A–F.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl Regime {
    pub fn label(self) -> char {
        match self {
            Regime::A => 'A',
            Regime::B => 'B',
            Regime::C => 'C',
            Regime::D => 'D',
            Regime::E => 'E',
            Regime::F => 'F',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridPoint {
    pub alpha1: f64,
    pub upsilon: Ext,
    pub law: LawKind,
    pub near_critical: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseDiagram {
    pub grid: Vec<GridPoint>,
    pub alpha_c: f64,
    pub alpha_low: Option<f64>,
    pub alpha_high: Option<f64>,
    pub case_label: Regime,
    /// `Υ(0⁺)`, `Υ(α_c)`, `Υ(1⁻)`.
    pub limits: (Ext, Ext, Ext),
}

/// Two analyzed factors; the weight is the sweep variable.
#[derive(Clone, Debug)]
pub struct PhasePair {
    parts: [Arc<dyn Kernel>; 2],
}

impl PhasePair {
    pub fn new(a: Arc<dyn Kernel>, b: Arc<dyn Kernel>) -> Self {
        PhasePair { parts: [a, b] }
    }

    /// Analyzes both factors (series order 0: only the analytics are used).
    pub fn from_specs(a: &FactorSpec, b: &FactorSpec) -> Result<Self> {
        Ok(Self::new(
            Arc::new(analyze_factor(a, 0)?),
            Arc::new(analyze_factor(b, 0)?),
        ))
    }

    pub fn parts(&self) -> &[Arc<dyn Kernel>] {
        &self.parts
    }

    fn degenerate(&self) -> bool {
        self.parts.iter().all(|k| k.is_z2())
    }

    /// `α_c = θ_1 / (θ_1 + θ_2)` with `c/(c + ∞) = 0`; `½` if both are
    /// infinite.
    pub fn alpha_c(&self) -> f64 {
        match (self.parts[0].theta(), self.parts[1].theta()) {
            (Ext::Finite(a), Ext::Finite(b)) => a / (a + b),
            (Ext::Finite(_), _) => 0.0,
            (_, Ext::Finite(_)) => 1.0,
            _ => 0.5,
        }
    }

    /// `Υ(α_1)` for `α_1 ∈ (0, 1)`; `−∞` when `θ̄ = ∞`.
    pub fn upsilon(&self, alpha1: f64) -> Result<Ext> {
        if !(alpha1 > 0.0 && alpha1 < 1.0) {
            return Err(Error::OutOfDomain {
                quantity: "alpha1",
                value: alpha1,
                domain: "(0, 1)".into(),
            });
        }
        psi_bar(&self.parts, &[alpha1, 1.0 - alpha1])
    }

    /// `Υ(0⁺)`: with `θ_2 < ∞` the first term tends to `1`; with `θ_2 = ∞`
    /// the second factor is evaluated at `t → ∞`.
    pub fn limit_at_zero(&self) -> Result<Ext> {
        limit(&self.parts[1], &self.parts[0])
    }

    pub fn limit_at_one(&self) -> Result<Ext> {
        limit(&self.parts[0], &self.parts[1])
    }

    /// `Υ(α_c)`, which is an endpoint limit when `α_c ∈ {0, 1}`.
    pub fn at_alpha_c(&self) -> Result<Ext> {
        let ac = self.alpha_c();
        if ac <= 0.0 {
            self.limit_at_zero()
        } else if ac >= 1.0 {
            self.limit_at_one()
        } else if self.parts.iter().all(|k| k.theta().is_finite()) {
            // both factors sit at θ_i
            Ok(Ext::Finite(
                self.parts[0].psi(At::Theta)? + self.parts[1].psi(At::Theta)? - 1.0,
            ))
        } else {
            self.upsilon(ac)
        }
    }

    /// The law and `Υ` at one grid point.
    pub fn point(&self, alpha1: f64) -> Result<GridPoint> {
        let weights = [alpha1, 1.0 - alpha1];
        let (_, argmin) = theta_bar(&self.parts, &weights);
        let ups = self.upsilon(alpha1)?;
        let law = law_kind(&self.parts, &argmin, ups, self.degenerate())?;
        Ok(GridPoint {
            alpha1,
            upsilon: ups,
            law,
            near_critical: matches!(ups, Ext::Finite(u) if u.abs() <= WARNING_BAND),
        })
    }
}

/// Limit of `Υ` as the weight of `vanishing`'s partner goes to one.
fn limit(dominant: &Arc<dyn Kernel>, other: &Arc<dyn Kernel>) -> Result<Ext> {
    match (dominant.theta(), other.theta()) {
        (Ext::Finite(_), _) => Ok(Ext::Finite(dominant.psi(At::Theta)?)),
        (_, Ext::Finite(_)) => Ok(Ext::Finite(
            dominant.psi(At::Theta)? + other.psi(At::Theta)? - 1.0,
        )),
        _ => Ok(Ext::NegInf),
    }
}

/// Root of `Υ` on `(lo, hi)` where `Υ` changes sign between the ends;
/// `decreasing` tells which side is positive.
fn bisect(pair: &PhasePair, mut lo: f64, mut hi: f64, decreasing: bool) -> Result<f64> {
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        let positive = pair.upsilon(mid)?.to_f64() > 0.0;
        if positive == decreasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn positive(x: Ext) -> bool {
    !x.lt(Ext::Finite(0.0)) && x != Ext::Finite(0.0)
}

/// `(α_low, α_high)`: zeros of `Υ` on the decreasing and increasing pieces.
pub fn phase_roots(pair: &PhasePair) -> Result<(Option<f64>, Option<f64>)> {
    let ac = pair.alpha_c();
    let (l0, lc, l1) = (
        pair.limit_at_zero()?,
        pair.at_alpha_c()?,
        pair.limit_at_one()?,
    );
    let low = if ac > 0.0 && positive(l0) && lc.lt(Ext::Finite(0.0)) {
        Some(bisect(pair, 0.0, ac, true)?)
    } else {
        None
    };
    let high = if ac < 1.0 && positive(l1) && lc.lt(Ext::Finite(0.0)) {
        Some(bisect(pair, ac, 1.0, false)?)
    } else {
        None
    };
    Ok((low, high))
}

/// Regime label from the roots and the value at `α_c`.
pub fn regime_case(pair: &PhasePair) -> Result<Regime> {
    let ac = pair.alpha_c();
    let lc = pair.at_alpha_c()?;
    let (low, high) = phase_roots(pair)?;
    let by_roots = match (low, high) {
        (Some(_), Some(_)) => Regime::A,
        (Some(_), None) => Regime::B,
        (None, Some(_)) => Regime::C,
        (None, None) if positive(lc) => Regime::D,
        (None, None) => Regime::E,
    };
    if let Ext::Finite(v) = lc {
        if v.abs() <= CASE_F_TOL && ac > 0.0 && ac < 1.0 {
            let left = pair.upsilon(0.5 * ac)?;
            let right = pair.upsilon(0.5 * (ac + 1.0))?;
            if positive(left) && positive(right) {
                return Ok(Regime::F);
            }
            return Err(Error::Ambiguous(vec!['F', by_roots.label()]));
        }
    }
    Ok(by_roots)
}

/// Half the points uniform on `(0, 1)`, a quarter log-spaced towards each
/// end, plus `α_c` when it is interior.
pub fn default_grid(size: usize, alpha_c: f64) -> Vec<f64> {
    let uniform = size / 2;
    let tail = (size - uniform).div_ceil(2);
    let h = 1.0 / (uniform + 1) as f64;
    let mut g: Vec<f64> = (1..=uniform).map(|i| i as f64 * h).collect();
    // 10^-8 … h/2 geometrically
    let (a, b) = (1e-8f64.ln(), (0.5 * h).ln());
    for i in 0..tail {
        let x = if tail == 1 {
            (0.5 * h).min(1e-3)
        } else {
            (a + (b - a) * i as f64 / (tail - 1) as f64).exp()
        };
        g.push(x);
        g.push(1.0 - x);
    }
    if alpha_c > 0.0 && alpha_c < 1.0 {
        g.push(alpha_c);
    }
    g.sort_by(f64::total_cmp);
    g.dedup_by(|x, y| (*x - *y).abs() <= 1e-15);
    g
}

/// Evaluates `Υ` and the law over the grid in parallel and attaches the
/// roots and the regime label.
pub fn sweep(pair: &PhasePair, grid_size: usize) -> Result<PhaseDiagram> {
    if grid_size < 3 {
        return Err(Error::InvalidSpec(format!("grid size {grid_size} < 3")));
    }
    let alpha_c = pair.alpha_c();
    let alphas = default_grid(grid_size, alpha_c);
    let grid = alphas
        .par_iter()
        .map(|a| pair.point(*a))
        .collect::<Result<Vec<_>>>()?;
    let (alpha_low, alpha_high) = phase_roots(pair)?;
    Ok(PhaseDiagram {
        grid,
        alpha_c,
        alpha_low,
        alpha_high,
        case_label: regime_case(pair)?,
        limits: (
            pair.limit_at_zero()?,
            pair.at_alpha_c()?,
            pair.limit_at_one()?,
        ),
    })
}

/// `ν_δ` on `Z^d`: weight `1 − δ` on the first axis, `δ/(d − 1)` on each
/// other, symmetric steps.
pub fn axis_family(d: usize, delta: f64) -> Result<LatticeSpec> {
    let mut beta = vec![delta / (d - 1) as f64; d];
    beta[0] = 1.0 - delta;
    LatticeSpec::new(beta, vec![0.5; d])
}

fn psi_theta(spec: LatticeSpec) -> Result<f64> {
    analyze_factor(&FactorSpec::Lattice(spec), 0)?.psi(At::Theta)
}

/// The member of `ν_δ` with `Ψ(θ) = target`, by bisection on
/// `δ ∈ [10⁻⁶, 1 − 1/d]`.
pub fn tune_axis_weights(d: usize, target: f64) -> Result<LatticeSpec> {
    if d < 5 {
        return Err(Error::InvalidSpec(format!(
            "axis-weight tuning needs d >= 5, got {d}"
        )));
    }
    let (mut lo, mut hi) = (1e-6, 1.0 - 1.0 / d as f64);
    let (f_lo, f_hi) = (
        psi_theta(axis_family(d, lo)?)?,
        psi_theta(axis_family(d, hi)?)?,
    );
    if !(target > f_lo.min(f_hi) && target <= f_lo.max(f_hi)) {
        return Err(Error::TargetOutOfRange {
            target,
            low: f_lo.min(f_hi),
            high: f_lo.max(f_hi),
        });
    }
    let increasing = f_hi > f_lo;
    for _ in 0..200 {
        if hi - lo <= 1e-14 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let above = psi_theta(axis_family(d, mid)?)? > target;
        if above == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    axis_family(d, 0.5 * (lo + hi))
}
