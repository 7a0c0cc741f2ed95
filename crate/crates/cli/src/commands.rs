use std::fmt::Write as _;

use fprw::acceptance;
use fprw::classify::{classify, LawKind};
use fprw::factors::SingularityDescriptor;
use fprw::kernel::At;
use fprw::mc::{simulate, z_scores};
use fprw::phase::{sweep, PhasePair};
use fprw::product::{
    analyze_factors, product_green_series, product_green_series_scaled, FreeProduct,
    FreeProductSpec, WARNING_BAND,
};
use fprw::series::PowerSeries;
use fprw::Ext;
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::{fmt_ext, fmt_f64, json_f64, round_json};
use crate::{CliError, Format};

#[derive(Serialize)]
pub struct FactorSummary {
    pub label: String,
    pub radius: f64,
    pub g_at_r: Ext,
    pub gprime_at_r: Ext,
    pub theta: Ext,
    pub psi_at_theta: f64,
    pub period: u32,
    pub singularity: Option<SingularityDescriptor>,
}

#[derive(Serialize)]
pub struct LawSummary {
    pub label: String,
    pub kind: &'static str,
    pub factor: Option<usize>,
    pub lambda: f64,
    pub kappa: u32,
    pub confidence: fprw::classify::Confidence,
}

#[derive(Serialize)]
pub struct SqrtCoefficient {
    pub g0: f64,
    pub g1: f64,
}

/// Everything `analyze` reports; field names are mirrored in
/// `schema/analyze-report.schema.json`.
#[derive(Serialize)]
pub struct AnalyzeReport {
    pub factors: Vec<FactorSummary>,
    pub weights: Vec<f64>,
    pub alpha_c: Option<f64>,
    pub theta_bar: Ext,
    pub argmin: Vec<usize>,
    pub psi_bar: Ext,
    pub phi_bar: Ext,
    pub radius: f64,
    pub period: u32,
    pub g_at_radius: Ext,
    pub gprime_at_radius: Ext,
    pub law: LawSummary,
    pub degenerate: bool,
    pub sqrt_coefficient: Option<SqrtCoefficient>,
    pub warnings: Vec<String>,
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut v = serde_json::to_value(v).expect("report serializes");
    round_json(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

pub fn analyze(
    spec: &FreeProductSpec,
    mut warnings: Vec<String>,
    format: Format,
) -> Result<String, CliError> {
    if format != Format::Json {
        return Err(CliError::Config("analyze only writes json".into()));
    }
    let p = FreeProduct::from_spec(spec, 0)?;
    let a = p.analytics();
    let law = classify(&p)?;
    let factors = p
        .parts()
        .iter()
        .zip(&spec.factors)
        .map(|(k, f)| {
            Ok(FactorSummary {
                label: f.label(),
                radius: k.radius(),
                g_at_r: k.g_at_radius(),
                gprime_at_r: k.gprime_at_radius(),
                theta: k.theta(),
                psi_at_theta: k.psi(At::Theta)?,
                period: k.period(),
                singularity: k.singularity(),
            })
        })
        .collect::<Result<Vec<_>, fprw::Error>>()?;
    let alpha_c = match &factors[..] {
        [x, y] => Ext::share(x.theta, y.theta),
        _ => None,
    };
    let psi = a.psi_bar.to_f64();
    if psi.is_finite() && psi.abs() <= WARNING_BAND {
        warnings.push(format!(
            "Psi(theta_bar) = {} is within {WARNING_BAND} of 0; the law may be near-critical",
            fmt_f64(psi)
        ));
    }
    let (kind, factor) = match law.kind {
        LawKind::Inherited { factor, .. } => ("inherited", Some(factor)),
        LawKind::ThreeHalves => ("three_halves", None),
        LawKind::OneHalfDegenerate => ("one_half_degenerate", None),
    };
    let report = AnalyzeReport {
        factors,
        weights: spec.weights.clone(),
        alpha_c,
        theta_bar: a.theta_bar,
        argmin: a.argmin.clone(),
        psi_bar: a.psi_bar,
        phi_bar: a.phi_bar,
        radius: a.radius,
        period: a.period,
        g_at_radius: a.g_at_radius,
        gprime_at_radius: a.gprime_at_radius,
        law: LawSummary {
            label: law.kind.to_string(),
            kind,
            factor,
            lambda: law.kind.lambda(),
            kappa: law.kind.kappa(),
            confidence: law.confidence,
        },
        degenerate: a.degenerate,
        sqrt_coefficient: a.sqrt_coeff.map(|(g0, g1)| SqrtCoefficient { g0, g1 }),
        warnings,
    };
    Ok(to_json(&report))
}

/// `μ^{(n)}(e)` and `μ^{(n)}(e) ρ^n`; the latter comes from the series of
/// `G(ρz)` so it does not overflow.
pub fn series(spec: &FreeProductSpec, order: usize, format: Format) -> Result<String, CliError> {
    let p = FreeProduct::from_spec(spec, 0)?;
    let (rho, period) = (p.analytics().radius, p.analytics().period);
    let fa = analyze_factors(spec, order)?;
    let parts: Vec<&PowerSeries> = fa.iter().map(|f| &f.series).collect();
    let g = product_green_series(&parts, &spec.weights, order)?;
    let scaled = product_green_series_scaled(&parts, &spec.weights, rho, order)?;
    Ok(match format {
        Format::Csv => {
            let mut out = format!(
                "# rho = {}\n# period = {period}\nn,mu,mu_rho_n\n",
                fmt_f64(rho)
            );
            for n in 0..=order {
                writeln!(
                    out,
                    "{n},{},{}",
                    fmt_f64(g.coeff(n)),
                    fmt_f64(scaled.coeff(n))
                )
                .unwrap();
            }
            out
        }
        Format::Json => {
            let rows: Vec<Value> = (0..=order)
                .map(|n| json!({"n": n, "mu": json_f64(g.coeff(n)), "mu_rho_n": json_f64(scaled.coeff(n))}))
                .collect();
            to_json(
                &json!({"rho": json_f64(rho), "period": period, "order": order, "coefficients": rows}),
            )
        }
    })
}

pub fn phase(spec: &FreeProductSpec, grid: usize, format: Format) -> Result<String, CliError> {
    let [a, b] = &spec.factors[..] else {
        return Err(CliError::PhaseNeedsTwo(spec.len()));
    };
    let pair = PhasePair::from_specs(a, b)?;
    let d = sweep(&pair, grid)?;
    Ok(match format {
        Format::Json => to_json(&d),
        Format::Csv => {
            let opt = |x: Option<f64>| x.map_or("none".to_string(), fmt_f64);
            let mut out = format!(
                "# alpha_c = {}\n# alpha_low = {}\n# alpha_high = {}\n# case = {}\nalpha1,upsilon,law,near_critical\n",
                fmt_f64(d.alpha_c),
                opt(d.alpha_low),
                opt(d.alpha_high),
                d.case_label.label()
            );
            for g in &d.grid {
                writeln!(
                    out,
                    "{},{},{},{}",
                    fmt_f64(g.alpha1),
                    fmt_ext(g.upsilon),
                    g.law,
                    g.near_critical
                )
                .unwrap();
            }
            out
        }
    })
}

/// Empirical return frequencies against the exact series.
pub fn simulate_cmd(
    spec: &FreeProductSpec,
    steps: usize,
    walks: u64,
    seed: u64,
    format: Format,
) -> Result<String, CliError> {
    let sim = simulate(spec, steps, walks, seed)?;
    let fa = analyze_factors(spec, steps)?;
    let parts: Vec<&PowerSeries> = fa.iter().map(|f| &f.series).collect();
    let exact = product_green_series(&parts, &spec.weights, steps)?;
    let z = z_scores(&sim, &exact);
    let emp = sim.empirical();
    // n = 0 is trivially exact; with no steps there is nothing to report
    let rows = if steps == 0 { 0..0 } else { 0..steps + 1 };
    Ok(match format {
        Format::Csv => {
            let mut out = String::from("n,empirical,exact,z_score\n");
            for n in rows {
                writeln!(
                    out,
                    "{n},{},{},{}",
                    fmt_f64(emp[n]),
                    fmt_f64(exact.coeff(n)),
                    fmt_f64(z[n])
                )
                .unwrap();
            }
            out
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .map(|n| {
                    json!({"n": n, "empirical": json_f64(emp[n]), "exact": json_f64(exact.coeff(n)), "z_score": json_f64(z[n])})
                })
                .collect();
            to_json(&json!({"steps": steps, "walks": walks, "seed": seed, "rows": rows}))
        }
    })
}

/// Runs the acceptance suite; returns the report and whether all passed.
/// Without a format, one line per criterion.
pub fn selftest(format: Option<Format>) -> (String, bool) {
    let reports = acceptance::run_all();
    let ok = reports.iter().all(|r| r.passed);
    let text = match format {
        None => reports.iter().map(|r| format!("{r}\n")).collect(),
        Some(Format::Csv) => {
            let mut out = String::from("criterion,passed,seconds,detail\n");
            for r in &reports {
                writeln!(
                    out,
                    "{},{},{},\"{}\"",
                    r.id,
                    r.passed,
                    fmt_f64(r.seconds),
                    r.detail.replace('"', "'")
                )
                .unwrap();
            }
            out
        }
        Some(Format::Json) => {
            let rows: Vec<Value> = reports
                .iter()
                .map(|r| json!({"criterion": r.id, "name": r.name, "passed": r.passed, "seconds": r.seconds, "detail": r.detail}))
                .collect();
            to_json(&json!({"passed": ok, "criteria": rows}))
        }
    };
    (text, ok)
}
