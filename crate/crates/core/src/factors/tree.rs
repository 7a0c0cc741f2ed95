//! Simple random walk on the homogeneous tree of degree `q`, i.e. the
//! uniform walk on the free product of `q` copies of `Z/2Z`.
//!
//! With `S = √(q² − 4(q−1)z²)` the Green function is
//! `G(z) = 2(q−1) / (q − 2 + S)`, with radius `q / (2√(q−1))`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::series::PowerSeries;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TreeSpec {
    degree: u32,
}

impl TreeSpec {
    pub fn new(degree: u32) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidSpec(format!(
                "tree degree must be >= 2, got {degree}"
            )));
        }
        Ok(TreeSpec { degree })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn radius(&self) -> f64 {
        let q = self.degree as f64;
        q / (2.0 * (q - 1.0).sqrt())
    }

    /// Closed-form `G^{(deriv)}(z)`. Degree 2 is the recurrent walk on `Z`
    /// and is not handled here.
    pub fn green(&self, z: f64, deriv: u8) -> Result<Ext> {
        if self.degree < 3 {
            return Err(Error::Unsupported(
                "closed-form tree Green function needs degree >= 3".into(),
            ));
        }
        let rho = self.radius();
        if !(z >= 0.0 && z <= rho * (1.0 + 1e-14)) {
            return Err(Error::OutOfDomain {
                quantity: "tree Green function argument",
                value: z,
                domain: format!("[0, {rho}]"),
            });
        }
        let q = self.degree as f64;
        let c = 4.0 * (q - 1.0);
        // q² − c z² = c (ρ − z)(ρ + z), snapped to zero at the radius
        let z = z.min(rho);
        let s = if z >= rho * (1.0 - 1e-15) {
            0.0
        } else if z < 0.5 * rho {
            (q * q - c * z * z).sqrt()
        } else {
            (c * (rho - z) * (rho + z)).sqrt()
        };
        let d = q - 2.0 + s;
        let num = 2.0 * (q - 1.0);
        if deriv == 0 {
            return Ok(Ext::Finite(num / d));
        }
        if s == 0.0 {
            return Ok(Ext::PosInf);
        }
        let s1 = -c * z / s;
        if deriv == 1 {
            return Ok(Ext::Finite(-num * s1 / (d * d)));
        }
        let s2 = -c / s - c * c * z * z / (s * s * s);
        Ok(Ext::Finite(
            -num * (s2 / (d * d) - 2.0 * s1 * s1 / (d * d * d)),
        ))
    }

    /// Return probabilities from the first-passage equation
    /// `F = z/q + ((q−1)/q) z F²`, `G = 1/(1 − zF)`.
    pub fn series(&self, order: usize) -> PowerSeries {
        let q = self.degree as f64;
        let mut f = vec![0.0; order + 1];
        for n in 1..=order {
            let mut conv = 0.0;
            for i in 1..n - 1 {
                conv += f[i] * f[n - 1 - i];
            }
            f[n] = (q - 1.0) / q * conv + if n == 1 { 1.0 / q } else { 0.0 };
        }
        let one_minus_zf = &PowerSeries::one(order) - &PowerSeries::new(f).mul_z();
        one_minus_zf.reciprocal().expect("constant term is 1")
    }
}
