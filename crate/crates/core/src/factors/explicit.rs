//! A factor described only by its return probabilities and user-asserted
//! boundary data.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::series::PowerSeries;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExplicitSpec {
    pub coeffs: Vec<f64>,
    pub radius: f64,
    pub g_at_r: Ext,
    pub gprime_at_r: Ext,
    /// Leading singular term `(q, k)`, if known.
    pub sing: Option<(f64, u32)>,
    pub period: u32,
}

impl ExplicitSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.coeffs.first() != Some(&1.0) {
            return bad("explicit series must start with coefficient 1".into());
        }
        if let Some(c) = self.coeffs.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return bad(format!("explicit series coefficient {c} outside [0, 1]"));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return bad(format!("explicit radius {} must be positive", self.radius));
        }
        if self.g_at_r.lt(Ext::Finite(1.0)) {
            return bad("G(radius) must be >= 1".into());
        }
        if self.gprime_at_r.is_finite() && !self.g_at_r.is_finite() {
            return bad("finite G'(radius) requires finite G(radius)".into());
        }
        if self.period == 0 {
            return bad("period must be >= 1".into());
        }
        Ok(())
    }

    pub fn series(&self, order: usize) -> PowerSeries {
        let mut c = self.coeffs.clone();
        c.resize(order + 1, 0.0);
        PowerSeries::new(c)
    }

    /// Truncated sums inside the disc; the supplied values at the radius.
    pub fn green(&self, z: f64, deriv: u8) -> Result<Ext> {
        if !(z >= 0.0 && z <= self.radius * (1.0 + 1e-14)) {
            return Err(Error::OutOfDomain {
                quantity: "explicit Green function argument",
                value: z,
                domain: format!("[0, {}]", self.radius),
            });
        }
        if z >= self.radius * (1.0 - 1e-15) {
            return match deriv {
                0 => Ok(self.g_at_r),
                1 => Ok(self.gprime_at_r),
                _ => Err(Error::NeedsDerivative(
                    "G'' of an explicit series at its radius",
                )),
            };
        }
        let mut s = PowerSeries::new(self.coeffs.clone());
        for _ in 0..deriv {
            s = s.derivative();
        }
        Ok(Ext::Finite(s.eval(z)))
    }
}
