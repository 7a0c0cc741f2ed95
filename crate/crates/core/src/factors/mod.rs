//! Free factors and their Green-function analytics.

pub mod explicit;
pub mod finite;
pub mod lattice;
pub mod tree;

use serde::Serialize;

pub use explicit::ExplicitSpec;
pub use finite::FiniteGroupSpec;
pub use lattice::LatticeSpec;
pub use tree::TreeSpec;

use crate::classify::darboux_map;
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::kernel::{At, Kernel, PhiDerivs, AT_THETA_RTOL};
use crate::series::PowerSeries;

/// One free factor together with its step distribution.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FactorSpec {
    Lattice(LatticeSpec),
    FiniteGroup(FiniteGroupSpec),
    Tree(TreeSpec),
    Explicit(ExplicitSpec),
}

impl FactorSpec {
    pub fn label(&self) -> String {
        match self {
            FactorSpec::Lattice(l) => format!("Z^{}", l.dim()),
            FactorSpec::FiniteGroup(g) => format!("G{}", g.order()),
            FactorSpec::Tree(t) => format!("T{}", t.degree()),
            FactorSpec::Explicit(_) => "explicit".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FactorSpec::Explicit(e) => e.validate(),
            _ => Ok(()),
        }
    }
}

/// Leading singular term `(ρ - z)^q log^k (ρ - z)` and its Darboux exponents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SingularityDescriptor {
    pub q: f64,
    pub k: u32,
    pub lambda: f64,
    pub kappa: u32,
}

impl SingularityDescriptor {
    pub fn new(q: f64, k: u32) -> Result<Self> {
        let (lambda, kappa) = darboux_map(q, k)?;
        Ok(SingularityDescriptor {
            q,
            k,
            lambda,
            kappa,
        })
    }
}

/// Green-function invariants of one factor, plus an evaluator.
#[derive(Clone, Debug, Serialize)]
pub struct GreenAnalytics {
    pub label: String,
    pub radius: f64,
    pub g_at_r: Ext,
    pub gprime_at_r: Ext,
    pub theta: Ext,
    pub period: u32,
    pub sing: Option<SingularityDescriptor>,
    #[serde(skip)]
    pub series: PowerSeries,
    #[serde(skip)]
    spec: FactorSpec,
}

/// Computes radius, boundary values, period, singular term and the return
/// series to `order`.
pub fn analyze_factor(spec: &FactorSpec, order: usize) -> Result<GreenAnalytics> {
    spec.validate()?;
    let (radius, series, period, sing) = match spec {
        FactorSpec::Lattice(l) => {
            let d = l.dim();
            let sing = if d >= 5 {
                Some(SingularityDescriptor::new(
                    (d as f64 - 2.0) / 2.0,
                    if d % 2 == 0 { 1 } else { 0 },
                )?)
            } else {
                None
            };
            (l.radius(), l.series(order), 2, sing)
        }
        FactorSpec::FiniteGroup(g) => (g.radius(), g.series(order), g.period(), None),
        FactorSpec::Tree(t) => {
            let sing = if t.degree() >= 3 {
                Some(SingularityDescriptor::new(0.5, 0)?)
            } else {
                None
            };
            (t.radius(), t.series(order), 2, sing)
        }
        FactorSpec::Explicit(e) => {
            let sing = e
                .sing
                .map(|(q, k)| SingularityDescriptor::new(q, k))
                .transpose()?;
            (e.radius, e.series(order), e.period, sing)
        }
    };
    let mut a = GreenAnalytics {
        label: spec.label(),
        radius,
        g_at_r: Ext::PosInf,
        gprime_at_r: Ext::PosInf,
        theta: Ext::PosInf,
        period,
        sing,
        series,
        spec: spec.clone(),
    };
    a.g_at_r = a.green(radius, 0)?;
    a.gprime_at_r = if a.g_at_r.is_finite() {
        a.green(radius, 1)?
    } else {
        Ext::PosInf
    };
    a.theta = a.g_at_r.scale(radius);
    Ok(a)
}

impl GreenAnalytics {
    pub fn spec(&self) -> &FactorSpec {
        &self.spec
    }

    /// `G^{(deriv)}(z)` on `[0, radius]`.
    pub fn green(&self, z: f64, deriv: u8) -> Result<Ext> {
        match &self.spec {
            FactorSpec::Lattice(l) => l.green(z, deriv),
            FactorSpec::FiniteGroup(g) => g.green(z, deriv),
            // the degree-2 tree is the simple walk on Z
            FactorSpec::Tree(t) if t.degree() == 2 => LatticeSpec::simple(1).green(z, deriv),
            FactorSpec::Tree(t) => t.green(z, deriv),
            FactorSpec::Explicit(e) => e.green(z, deriv),
        }
    }

    fn check_domain(&self, z: f64) -> Result<()> {
        if z >= 0.0 && z <= self.radius * (1.0 + 1e-14) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                quantity: "factor Green function argument",
                value: z,
                domain: format!("[0, {}]", self.radius),
            })
        }
    }

    /// `lim_{t→∞} Ψ_i(t)` for a recurrent factor: the residue `1/|Γ|` of
    /// `G` at `z = 1` for a finite group, zero for infinite groups.
    pub fn psi_at_infinity(&self) -> f64 {
        match &self.spec {
            FactorSpec::FiniteGroup(g) => 1.0 / g.order() as f64,
            _ => 0.0,
        }
    }

    /// `Ψ_i(zG_i(z)) = G² / (G + zG')`; zero where `G'` is infinite and the
    /// `t → ∞` limit where `G` is.
    pub fn psi_at(&self, z: f64) -> Result<f64> {
        self.check_domain(z)?;
        if z == 0.0 {
            return Ok(1.0);
        }
        let g = match self.green(z, 0)? {
            Ext::Finite(g) => g,
            _ => return Ok(self.psi_at_infinity()),
        };
        match self.green(z, 1)? {
            Ext::Finite(g1) => Ok(g * g / (g + z * g1)),
            _ => Ok(0.0),
        }
    }

    /// `(Φ_i, Φ_i', Φ_i'')` at `t = zG_i(z)`.
    pub fn phi_derivs_at(&self, z: f64) -> Result<(f64, f64, f64)> {
        self.check_domain(z)?;
        let need = |e: Ext, what| e.finite().ok_or(Error::NeedsDerivative(what));
        let g = need(self.green(z, 0)?, "Phi (G infinite)")?;
        let g1 = need(self.green(z, 1)?, "Phi' (G' infinite)")?;
        let g2 = need(self.green(z, 2)?, "Phi''")?;
        let den = g + z * g1;
        Ok((g, g1 / den, (g2 * g - 2.0 * g1 * g1) / (den * den * den)))
    }

    /// `w_i(z) = z G_i(z)`.
    pub fn w(&self, z: f64) -> Result<Ext> {
        if z == 0.0 {
            return Ok(Ext::Finite(0.0));
        }
        Ok(self.green(z, 0)?.scale(z))
    }

    /// The unique `z ∈ [0, ρ]` with `z G(z) = t`, by safeguarded Newton.
    pub fn invert_w(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        let rho = self.radius;
        let out_of_domain = || Error::OutOfDomain {
            quantity: "w^{-1} argument",
            value: t,
            domain: format!("[0, {})", self.theta),
        };
        if !(t > 0.0) {
            return Err(out_of_domain());
        }
        if let Ext::Finite(th) = self.theta {
            if (t - th).abs() <= AT_THETA_RTOL * th {
                return Ok(rho);
            }
            if t > th {
                return Err(out_of_domain());
            }
        }
        let (mut lo, mut hi) = (0.0, rho);
        let mut z = match self.theta {
            Ext::Finite(th) => rho * t / th,
            _ => t.min(0.5 * rho),
        };
        for _ in 0..200 {
            let g = self.green(z, 0)?.to_f64();
            let f = z * g - t;
            if f.abs() <= 1e-15 * t {
                return Ok(z);
            }
            if f > 0.0 {
                hi = z;
            } else {
                lo = z;
            }
            let mut next = match self.green(z, 1)? {
                Ext::Finite(g1) => z - f / (g + z * g1),
                _ => f64::NAN,
            };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - z).abs() <= 1e-14 * z || hi - lo <= 1e-15 * hi {
                return Ok(next);
            }
            z = next;
        }
        Err(Error::NoConvergence("inversion of w(z) = z G(z)"))
    }
}

impl Kernel for GreenAnalytics {
    fn radius(&self) -> f64 {
        self.radius
    }

    fn g_at_radius(&self) -> Ext {
        self.g_at_r
    }

    fn gprime_at_radius(&self) -> Ext {
        self.gprime_at_r
    }

    fn period(&self) -> u32 {
        self.period
    }

    fn singularity(&self) -> Option<SingularityDescriptor> {
        self.sing
    }

    fn theta(&self) -> Ext {
        self.theta
    }

    fn is_z2(&self) -> bool {
        matches!(&self.spec, FactorSpec::FiniteGroup(g) if g.order() == 2)
    }

    fn psi(&self, at: At) -> Result<f64> {
        match at {
            At::Theta => self.psi_at(self.radius),
            At::T(t) => self.psi_at(self.invert_w(t)?),
        }
    }

    fn phi(&self, at: At) -> Result<PhiDerivs> {
        match at {
            At::T(t) => {
                let (v, d1, d2) = self.phi_derivs_at(self.invert_w(t)?)?;
                Ok(PhiDerivs {
                    value: Ext::Finite(v),
                    d1: Ext::Finite(d1),
                    d2: Some(Ext::Finite(d2)),
                })
            }
            At::Theta => {
                let rho = self.radius;
                let (g, g1) = match (self.g_at_r, self.gprime_at_r) {
                    (Ext::Finite(g), Ext::Finite(g1)) => (g, g1),
                    (value, _) => {
                        // G' = ∞: Φ' → 1/ρ; Φ'' is not needed on any path.
                        return Ok(PhiDerivs {
                            value,
                            d1: Ext::Finite(1.0 / rho),
                            d2: Some(Ext::PosInf),
                        });
                    }
                };
                let den = g + rho * g1;
                let d2 = match self.green(rho, 2) {
                    Ok(Ext::Finite(g2)) => {
                        Some(Ext::Finite((g2 * g - 2.0 * g1 * g1) / (den * den * den)))
                    }
                    Ok(other) => Some(other),
                    Err(Error::NeedsDerivative(_)) => None,
                    Err(e) => return Err(e),
                };
                Ok(PhiDerivs {
                    value: Ext::Finite(g),
                    d1: Ext::Finite(g1 / den),
                    d2,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice(d: usize) -> GreenAnalytics {
        analyze_factor(&FactorSpec::Lattice(LatticeSpec::simple(d)), 64).unwrap()
    }

    #[test]
    fn singularity_descriptors() {
        let z5 = lattice(5).sing.unwrap();
        assert_eq!((z5.q, z5.k, z5.lambda, z5.kappa), (1.5, 0, 2.5, 0));
        let z6 = lattice(6).sing.unwrap();
        assert_eq!((z6.q, z6.k, z6.lambda, z6.kappa), (2.0, 1, 3.0, 0));
        assert!(lattice(3).sing.is_none());
        let t3 = analyze_factor(&FactorSpec::Tree(TreeSpec::new(3).unwrap()), 16).unwrap();
        assert_eq!(t3.sing.unwrap().lambda, 1.5);
    }

    #[test]
    fn boundary_values_by_type() {
        let z2 = analyze_factor(&FactorSpec::FiniteGroup(FiniteGroupSpec::z2()), 16).unwrap();
        assert!(z2.g_at_r.is_pos_inf() && z2.theta.is_pos_inf());
        assert_eq!(z2.period, 2);
        assert!(z2.is_z2());
        let z3 = lattice(3);
        assert!(z3.g_at_r.is_finite() && z3.gprime_at_r.is_pos_inf());
        let z5 = lattice(5);
        assert!(z5.gprime_at_r.is_finite());
        assert!(lattice(2).theta.is_pos_inf());
        let t2 = analyze_factor(&FactorSpec::Tree(TreeSpec::new(2).unwrap()), 16).unwrap();
        assert!(t2.g_at_r.is_pos_inf());
    }

    #[test]
    fn invert_w_round_trip() {
        let z5 = lattice(5);
        let th = z5.theta.finite().unwrap();
        assert_eq!(z5.invert_w(0.0).unwrap(), 0.0);
        for k in 1..20 {
            let t = th * k as f64 / 20.0;
            let z = z5.invert_w(t).unwrap();
            let back = z * z5.green(z, 0).unwrap().to_f64();
            assert!((back - t).abs() < 1e-10 * t);
        }
        assert_eq!(z5.invert_w(th).unwrap(), 1.0);
        assert!(z5.invert_w(1.01 * th).is_err());
        let flip = analyze_factor(&FactorSpec::FiniteGroup(FiniteGroupSpec::z2()), 8).unwrap();
        let z = flip.invert_w(50.0).unwrap();
        assert!((z / (1.0 - z * z) - 50.0).abs() < 1e-9);
    }

    #[test]
    fn psi_cross_formula_and_monotonicity() {
        for a in [
            lattice(3),
            lattice(6),
            analyze_factor(&FactorSpec::Tree(TreeSpec::new(3).unwrap()), 8).unwrap(),
            analyze_factor(
                &FactorSpec::FiniteGroup(FiniteGroupSpec::cyclic_pm(3, 1).unwrap()),
                8,
            )
            .unwrap(),
        ] {
            let mut prev = 1.0;
            for k in 1..40 {
                let z = a.radius * k as f64 / 40.0;
                let psi = a.psi_at(z).unwrap();
                let (phi, d1, d2) = a.phi_derivs_at(z).unwrap();
                let t = z * phi;
                assert!((phi - t * d1 - psi).abs() < 1e-9, "{} z={z}", a.label);
                assert!(d2 > 0.0, "{} not convex at z={z}", a.label);
                assert!(psi < prev, "{} not decreasing at z={z}", a.label);
                prev = psi;
            }
        }
    }

    #[test]
    fn psi_limits() {
        let z3 = lattice(3);
        assert!((z3.psi_at(1e-9).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(z3.psi_at(1.0).unwrap(), 0.0);
        assert_eq!(lattice(2).psi_at(1.0).unwrap(), 0.0);
        // Ψ = 1/(1 + z²) for the flip walk
        let flip = analyze_factor(&FactorSpec::FiniteGroup(FiniteGroupSpec::z2()), 8).unwrap();
        assert!((flip.psi_at(0.5).unwrap() - 0.8).abs() < 1e-14);
        assert_eq!(flip.psi_at(1.0).unwrap(), 0.5);
        let z3 = analyze_factor(
            &FactorSpec::FiniteGroup(FiniteGroupSpec::cyclic_pm(3, 1).unwrap()),
            8,
        )
        .unwrap();
        let near = z3.psi_at(1.0 - 1e-7).unwrap();
        assert!((near - 1.0 / 3.0).abs() < 1e-6);
        assert_eq!(z3.psi_at(1.0).unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn period_divides_support() {
        for spec in [
            FactorSpec::Lattice(LatticeSpec::simple(2)),
            FactorSpec::FiniteGroup(FiniteGroupSpec::cyclic_pm(5, 2).unwrap()),
            FactorSpec::FiniteGroup(FiniteGroupSpec::cyclic_pm(6, 1).unwrap()),
            FactorSpec::Tree(TreeSpec::new(4).unwrap()),
        ] {
            let a = analyze_factor(&spec, 60).unwrap();
            for (n, c) in a.series.coeffs().iter().enumerate() {
                if *c > 0.0 {
                    assert_eq!(n as u32 % a.period, 0, "{}", a.label);
                }
            }
        }
    }
}
