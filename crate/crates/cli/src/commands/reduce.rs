use anyhow::{bail, Result};
use hill_core::galerkin::{periodic_spectrum, trust_count, SpectrumResult};
use hill_core::reduction::{AdaptedResult, ReductionContext, SandwichReport, SandwichStatus};
use hill_core::HillError;
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::context;
use crate::config::Experiment;
use crate::output::{cx, num, Sink};

const DEGENERATE_GAP: f64 = 1e-9;

/// One reduction row with its Galerkin cross-check.
#[derive(Debug, Clone)]
pub struct Row {
    pub n: usize,
    pub status: String,
    pub a_n: Option<Complex64>,
    pub b_n: Option<Complex64>,
    pub b_neg_n: Option<Complex64>,
    pub alpha_n: Option<Complex64>,
    pub xi_1: Option<Complex64>,
    pub xi_2: Option<Complex64>,
    pub gap: Option<f64>,
    pub oracle_gap: f64,
    /// `max |xi - lambda^+-| / (n^2 pi^2)`.
    pub oracle_mismatch: Option<f64>,
    pub sandwich: Option<SandwichReport>,
}

pub fn status_name(s: SandwichStatus) -> &'static str {
    match s {
        SandwichStatus::Pass => "pass",
        SandwichStatus::Fail => "fail",
        SandwichStatus::ConditionNotMet => "condition-not-met",
        SandwichStatus::Vacuous => "vacuous",
        SandwichStatus::BelowThreshold => "below-threshold",
    }
}

impl Row {
    pub fn to_json(&self) -> Value {
        let c = |z: Option<Complex64>| z.map(cx);
        json!({
            "n": self.n,
            "status": self.status,
            "a_n": c(self.a_n),
            "b_n": c(self.b_n),
            "b_neg_n": c(self.b_neg_n),
            "alpha_n": c(self.alpha_n),
            "xi_1": c(self.xi_1),
            "xi_2": c(self.xi_2),
            "gap": self.gap,
            "oracle_gap": self.oracle_gap,
            "oracle_mismatch": self.oracle_mismatch,
            "sandwich": self.sandwich.map(|s| json!({
                "lo": s.lo,
                "mid": s.mid,
                "hi": s.hi,
                "pass": s.pass(),
                "status": status_name(s.status),
            })),
        })
    }

    pub fn to_csv(&self) -> Vec<String> {
        let re = |z: Option<Complex64>| z.map(|z| num(z.re)).unwrap_or_default();
        let im = |z: Option<Complex64>| z.map(|z| num(z.im)).unwrap_or_default();
        let f = |x: Option<f64>| x.map(num).unwrap_or_default();
        let sw = self.sandwich;
        vec![
            self.n.to_string(),
            self.status.clone(),
            re(self.a_n),
            im(self.a_n),
            re(self.b_n),
            im(self.b_n),
            re(self.b_neg_n),
            im(self.b_neg_n),
            re(self.alpha_n),
            im(self.alpha_n),
            re(self.xi_1),
            im(self.xi_1),
            re(self.xi_2),
            im(self.xi_2),
            f(self.gap),
            num(self.oracle_gap),
            f(self.oracle_mismatch),
            f(sw.map(|s| s.lo)),
            f(sw.map(|s| s.mid)),
            f(sw.map(|s| s.hi)),
            sw.map(|s| status_name(s.status).to_string()).unwrap_or_default(),
        ]
    }

    /// Names of the checks this row fails.
    pub fn failures(&self, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        if self.status.starts_with("error") {
            out.push(format!("reduction n={}: {}", self.n, self.status));
        }
        if let Some(mm) = self.oracle_mismatch {
            if mm > tol {
                out.push(format!("oracle roots n={}: mismatch {mm:.3e}", self.n));
            }
        }
        if let Some(g) = self.gap {
            // Gaps under 1e-9 are reported as exact double roots.
            if (g - self.oracle_gap).abs() > (tol * self.oracle_gap).max(DEGENERATE_GAP) {
                out.push(format!("oracle gap n={}: {g:.6e} vs {:.6e}", self.n, self.oracle_gap));
            }
        }
        if let Some(s) = self.sandwich {
            if !s.pass() {
                out.push(format!("gap sandwich n={}: lo {:.3e}, mid {:.3e}, hi {:.3e}", self.n, s.lo, s.mid, s.hi));
            }
        }
        out
    }
}

pub const CSV_HEADER: [&str; 21] = [
    "n",
    "status",
    "re_a_n",
    "im_a_n",
    "re_b_n",
    "im_b_n",
    "re_b_neg_n",
    "im_b_neg_n",
    "re_alpha_n",
    "im_alpha_n",
    "re_xi_1",
    "im_xi_1",
    "re_xi_2",
    "im_xi_2",
    "gap",
    "oracle_gap",
    "oracle_mismatch",
    "sandwich_lo",
    "sandwich_mid",
    "sandwich_hi",
    "sandwich_status",
];

/// Adapted coefficients up to `n_top`, or `None` when the range never
/// reaches `M_ms` or the truncation cannot hold it. A failed fixed point is
/// returned as a named failure.
pub fn adapted(cx: &ReductionContext, n_top: usize) -> (Option<AdaptedResult>, Vec<String>) {
    let n_top = n_top.max(cx.potential().seq().half_range().div_ceil(2));
    if cx.thresholds().m_ms > n_top || n_top > cx.k() / 2 {
        return (None, Vec::new());
    }
    match cx.adapted_coefficients(n_top) {
        Ok(ad) => (Some(ad), Vec::new()),
        Err(e) => (None, vec![format!("adapted coefficients: {e}")]),
    }
}

/// Runs the reduction for each `n` in parallel and cross-checks against the
/// dense spectrum. The oracle gap is scaled by `1 + perturb`.
pub fn rows(
    cx: &ReductionContext,
    spec: &SpectrumResult,
    ad: Option<&AdaptedResult>,
    ns: &[usize],
    perturb: f64,
) -> Vec<Row> {
    ns.par_iter()
        .map(|&n| {
            let gamma = (spec.lambda_plus(n) - spec.lambda_minus(n)) * (1.0 + perturb);
            let mut row = Row {
                n,
                status: "ok".into(),
                a_n: None,
                b_n: None,
                b_neg_n: None,
                alpha_n: None,
                xi_1: None,
                xi_2: None,
                gap: None,
                oracle_gap: gamma.norm(),
                oracle_mismatch: None,
                sandwich: None,
            };
            match cx.reduce(n) {
                Ok(r) => {
                    let scale = ReductionContext::center(n);
                    row.a_n = Some(r.a_n);
                    row.b_n = Some(r.b_n);
                    row.b_neg_n = Some(r.b_neg_n);
                    row.alpha_n = r.alpha_n;
                    row.xi_1 = Some(r.xi_1);
                    row.xi_2 = Some(r.xi_2);
                    row.gap = Some(r.gap_estimate);
                    row.oracle_mismatch = Some(
                        ((r.xi_1 - spec.lambda_minus(n)).norm() / scale)
                            .max((r.xi_2 - spec.lambda_plus(n)).norm() / scale),
                    );
                    if let Some(ad) = ad {
                        if n >= ad.m_ms {
                            row.sandwich = Some(cx.gap_sandwich(n, &ad.r, gamma));
                        }
                    }
                }
                Err(HillError::BelowThreshold { .. }) => row.status = "below-threshold".into(),
                Err(e) => row.status = format!("error: {e}"),
            }
            row
        })
        .collect()
}

pub fn index_range(exp: &Experiment) -> Result<Vec<usize>> {
    let top = trust_count(exp.k).min(exp.k / 2);
    let lo = exp.n_min.unwrap_or(1);
    let hi = exp.n_max.unwrap_or(top.min(24));
    if hi > top {
        bail!("run.n_max: {hi} exceeds the trusted range {top} for K = {}", exp.k);
    }
    if lo == 0 || lo > hi {
        bail!("run.n_min: need 1 <= n_min <= n_max, got {lo} and {hi}");
    }
    Ok((lo..=hi).collect())
}

pub fn run(exp: &Experiment) -> Result<Vec<String>> {
    let q = exp.potential()?;
    let ns = index_range(exp)?;
    let cx = context(exp, &q)?;
    let spec = periodic_spectrum(&q, exp.k)?;
    let (ad, mut failures) = adapted(&cx, *ns.last().expect("nonempty range"));
    let rows = rows(&cx, &spec, ad.as_ref(), &ns, exp.perturb_gap);
    failures.extend(rows.iter().flat_map(|r| r.failures(exp.oracle_tol)));
    let max_mismatch = rows.iter().filter_map(|r| r.oracle_mismatch).fold(0.0, f64::max);
    let th = cx.thresholds();
    let sink = Sink::new(exp, "reduce")?;
    sink.json(
        "reduce.json",
        json!({
            "rows": rows.iter().map(Row::to_json).collect::<Vec<_>>(),
            "thresholds": {"n_s": th.n_s, "N_ms": th.n_ms, "M_ms": th.m_ms, "c_s": th.c_s, "c_s_prime": th.c_s_prime},
            "q_norm": cx.q_norm(),
            "m": cx.m(),
            "max_oracle_mismatch": max_mismatch,
            "failures": failures,
        }),
    )?;
    sink.csv("reduce.csv", &CSV_HEADER, &rows.iter().map(Row::to_csv).collect::<Vec<_>>())?;
    println!(
        "reduce: n = {}..={}, n_s = {}, M_ms = {}, max oracle mismatch {max_mismatch:.3e}",
        ns[0],
        ns[ns.len() - 1],
        th.n_s,
        th.m_ms
    );
    Ok(failures)
}
