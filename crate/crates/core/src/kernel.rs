//! The `Φ`/`Ψ` kernel interface shared by single factors and by partial free
//! products (which act as one factor in the multi-factor fold).

use std::fmt::Debug;

use crate::error::Result;
use crate::ext::Ext;
use crate::factors::SingularityDescriptor;

/// Where to evaluate a kernel: at an interior `t < θ`, or at `θ` itself
/// (the limit `t → ∞` when `θ = ∞`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum At {
    T(f64),
    Theta,
}

/// `Φ`, `Φ'` and `Φ''` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiDerivs {
    pub value: Ext,
    pub d1: Ext,
    /// `None` when `Φ''` cannot be evaluated (no second derivative data).
    pub d2: Option<Ext>,
}

pub trait Kernel: Debug + Send + Sync {
    /// Radius of convergence `ρ` of the Green function.
    fn radius(&self) -> f64;
    fn g_at_radius(&self) -> Ext;
    fn gprime_at_radius(&self) -> Ext;
    fn period(&self) -> u32;
    fn singularity(&self) -> Option<SingularityDescriptor>;

    /// `θ = ρ G(ρ)`.
    fn theta(&self) -> Ext {
        self.g_at_radius().scale(self.radius())
    }

    /// Whether this is `Z/2Z` with its only walk.
    fn is_z2(&self) -> bool {
        false
    }

    /// `Ψ(t) = Φ(t) - tΦ'(t)`.
    fn psi(&self, at: At) -> Result<f64>;

    fn phi(&self, at: At) -> Result<PhiDerivs>;
}

/// Relative tolerance under which `α t` is taken to sit at `θ`.
pub const AT_THETA_RTOL: f64 = 1e-12;

/// `At::Theta` when `t` reaches `θ` within tolerance, `At::T(t)` otherwise.
pub fn at_point(k: &dyn Kernel, t: f64) -> At {
    match k.theta() {
        Ext::Finite(th) if t >= th * (1.0 - AT_THETA_RTOL) => At::Theta,
        _ if t == f64::INFINITY => At::Theta,
        _ => At::T(t),
    }
}
