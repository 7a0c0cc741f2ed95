//! JSON run configuration.

use std::path::Path;

use fprw::factors::{ExplicitSpec, FactorSpec, FiniteGroupSpec, LatticeSpec, TreeSpec};
use fprw::phase::{axis_family, tune_axis_weights};
use fprw::product::FreeProductSpec;
use fprw::Ext;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub factors: Vec<FactorConfig>,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub options: Options,
}

/// Defaults for the command-line flags; flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    pub order: Option<usize>,
    pub grid: Option<usize>,
    pub steps: Option<usize>,
    pub walks: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FactorConfig {
    /// Nearest-neighbour walk on `Z^d`. Either `dim` alone (simple walk),
    /// `beta` and `p`, `dim` with `axis_delta`, or `dim` with `tune_psi`.
    Lattice {
        dim: Option<usize>,
        beta: Option<Vec<f64>>,
        p: Option<Vec<f64>>,
        axis_delta: Option<f64>,
        tune_psi: Option<f64>,
    },
    /// `Z/nZ`: `weights[k] = μ(k)`, or `±step` on `order` elements.
    Cyclic {
        order: Option<usize>,
        step: Option<usize>,
        weights: Option<Vec<f64>>,
    },
    FiniteGroup {
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        identity: usize,
        table: Option<Vec<Vec<usize>>>,
    },
    Tree {
        degree: u32,
    },
    Explicit {
        coeffs: Vec<f64>,
        radius: f64,
        g_at_r: ExtValue,
        gprime_at_r: ExtValue,
        sing: Option<(f64, u32)>,
        #[serde(default = "one")]
        period: u32,
    },
}

fn one() -> u32 {
    1
}

/// A number or the string `"inf"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ExtValue {
    Num(f64),
    Str(String),
}

impl ExtValue {
    fn to_ext(&self, field: &str) -> Result<Ext, CliError> {
        match self {
            ExtValue::Num(x) => Ok(Ext::Finite(*x)),
            ExtValue::Str(s) if s == "inf" => Ok(Ext::PosInf),
            ExtValue::Str(s) => Err(CliError::Config(format!(
                "{field}: expected a number or \"inf\", got {s:?}"
            ))),
        }
    }
}

impl FactorConfig {
    pub fn build(&self) -> Result<FactorSpec, CliError> {
        let spec = match self {
            FactorConfig::Lattice {
                dim,
                beta,
                p,
                axis_delta,
                tune_psi,
            } => match (dim, beta, p, axis_delta, tune_psi) {
                (Some(d), None, None, None, None) if *d >= 1 => FactorSpec::Lattice(LatticeSpec::simple(*d)),
                (Some(d), None, None, Some(delta), None) => FactorSpec::Lattice(axis_family(*d, *delta)?),
                (Some(d), None, None, None, Some(target)) => FactorSpec::Lattice(tune_axis_weights(*d, *target)?),
                (_, Some(b), p, None, None) => {
                    if dim.is_some_and(|d| d != b.len()) {
                        return Err(CliError::Config(format!(
                            "lattice: dim {} does not match {} axis weights",
                            dim.unwrap_or(0),
                            b.len()
                        )));
                    }
                    let p = p.clone().unwrap_or_else(|| vec![0.5; b.len()]);
                    FactorSpec::Lattice(LatticeSpec::new(b.clone(), p)?)
                }
                _ => {
                    return Err(CliError::Config(
                        "lattice: give dim >= 1, beta (and optionally p), dim with axis_delta, or dim with tune_psi"
                            .into(),
                    ))
                }
            },
            FactorConfig::Cyclic { order, step, weights } => match (order, step, weights) {
                (None, None, Some(w)) => FactorSpec::FiniteGroup(FiniteGroupSpec::cyclic(w)?),
                (Some(n), s, None) => FactorSpec::FiniteGroup(FiniteGroupSpec::cyclic_pm(*n, s.unwrap_or(1))?),
                _ => {
                    return Err(CliError::Config(
                        "cyclic: give either weights, or order (and optionally step)".into(),
                    ))
                }
            },
            FactorConfig::FiniteGroup { matrix, identity, table } => {
                FactorSpec::FiniteGroup(FiniteGroupSpec::new(matrix.clone(), *identity, table.clone())?)
            }
            FactorConfig::Tree { degree } => FactorSpec::Tree(TreeSpec::new(*degree)?),
            FactorConfig::Explicit {
                coeffs,
                radius,
                g_at_r,
                gprime_at_r,
                sing,
                period,
            } => FactorSpec::Explicit(ExplicitSpec {
                coeffs: coeffs.clone(),
                radius: *radius,
                g_at_r: g_at_r.to_ext("g_at_r")?,
                gprime_at_r: gprime_at_r.to_ext("gprime_at_r")?,
                sing: *sing,
                period: *period,
            }),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    /// The validated product spec and any warnings (weight normalization).
    pub fn product(&self) -> Result<(FreeProductSpec, Vec<String>), CliError> {
        let factors = self
            .factors
            .iter()
            .enumerate()
            .map(|(i, f)| f.build().map_err(|e| e.context(&format!("factor {i}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let spec = FreeProductSpec::new(factors, self.weights.clone())?;
        let total: f64 = self.weights.iter().sum();
        let mut warnings = Vec::new();
        if (total - 1.0).abs() > 1e-12 {
            warnings.push(format!("weights sum to {total}; normalized to sum 1"));
        }
        Ok((spec, warnings))
    }
}
