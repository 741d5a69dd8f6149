use std::collections::BTreeMap;

use anyhow::{bail, Result};
use hill_core::galerkin::{periodic_spectrum, trust_count, verify_decay};
use hill_core::kdv::{airy_demo, isospectral_check, loglog_fit, saturating_data};
use hill_core::reduction::SandwichStatus;
use serde_json::{json, Value};

use super::{context, reduce};
use crate::config::Experiment;
use crate::output::{num, Sink};

pub const SUITES: [&str; 4] = ["decay", "sandwich", "isospectral", "airy-demo"];

struct SuiteOutcome {
    failures: Vec<String>,
    summary: Value,
}

pub fn run(exp: &Experiment) -> Result<Vec<String>> {
    let chosen: Vec<&str> = match exp.suite.as_str() {
        "all" => SUITES.to_vec(),
        s if SUITES.contains(&s) => vec![s],
        s => bail!("run.suite: unknown suite '{s}' (expected all, {})", SUITES.join(", ")),
    };
    let sink = Sink::new(exp, "verify")?;
    let mut report = BTreeMap::new();
    let mut failures = Vec::new();
    for name in chosen {
        let out = match name {
            "decay" => decay(exp, &sink)?,
            "sandwich" => sandwich(exp, &sink)?,
            "isospectral" => isospectral(exp, &sink)?,
            _ => airy(exp, &sink)?,
        };
        let pass = out.failures.is_empty();
        println!("verify {name}: {}", if pass { "PASS" } else { "FAIL" });
        failures.extend(out.failures.iter().map(|f| format!("{name}: {f}")));
        report.insert(
            name.to_string(),
            json!({"pass": pass, "failures": out.failures, "summary": out.summary}),
        );
    }
    let passed = report.values().filter(|v| v["pass"] == true).count();
    sink.json(
        "summary.json",
        json!({"suites": report, "passed": passed, "failed": report.len() - passed}),
    )?;
    Ok(failures)
}

fn decay(exp: &Experiment, sink: &Sink) -> Result<SuiteOutcome> {
    exp.check_reduction_class()?;
    let q = exp.potential()?;
    let rep = verify_decay(&q, &exp.weight()?, exp.s, &[exp.k, 2 * exp.k])?;
    let mut failures = Vec::new();
    if !rep.stable_within(0.01) {
        failures.push(format!(
            "decay sups move between truncations: {:.3e}, {:.3e}",
            rep.gamma_change, rep.tau_mu_change
        ));
    }
    for r in &rep.rows {
        if r.gamma_sup > 10.0 * rep.q_norm || r.tau_mu_sup > 10.0 * rep.q_norm {
            failures.push(format!("decay sups exceed 10 ||q|| at K = {}", r.k));
        }
    }
    let header = ["K", "trust_count", "gamma_sup", "tau_mu_sup", "gm_n", "gm_lhs", "gm_rhs", "gm_holds"];
    let rows: Vec<Vec<String>> = rep
        .rows
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                r.trust_count.to_string(),
                num(r.gamma_sup),
                num(r.tau_mu_sup),
                r.gm_est.n.to_string(),
                num(r.gm_est.lhs),
                num(r.gm_est.rhs),
                r.gm_est.holds.to_string(),
            ]
        })
        .collect();
    sink.csv("decay.csv", &header, &rows)?;
    Ok(SuiteOutcome {
        failures,
        summary: serde_json::to_value(&rep)?,
    })
}

fn sandwich(exp: &Experiment, sink: &Sink) -> Result<SuiteOutcome> {
    let q = exp.potential()?;
    let cx = context(exp, &q)?;
    let th = *cx.thresholds();
    let top = trust_count(exp.k).min(exp.k / 2);
    if th.n_s > top {
        bail!("model.K: n_s = {} lies beyond the trusted range {top}", th.n_s);
    }
    let hi = (th.n_s + 20).max(th.m_ms.saturating_add(4)).min(top);
    let ns: Vec<usize> = (th.n_s..=hi).collect();
    let spec = periodic_spectrum(&q, exp.k)?;
    let (ad, mut failures) = reduce::adapted(&cx, hi);
    let rows = reduce::rows(&cx, &spec, ad.as_ref(), &ns, exp.perturb_gap);
    failures.extend(rows.iter().flat_map(|r| r.failures(exp.oracle_tol)));
    let asserted = rows
        .iter()
        .filter(|r| matches!(r.sandwich.map(|s| s.status), Some(SandwichStatus::Pass | SandwichStatus::Fail)))
        .count();
    sink.csv("sandwich.csv", &reduce::CSV_HEADER, &rows.iter().map(reduce::Row::to_csv).collect::<Vec<_>>())?;
    Ok(SuiteOutcome {
        failures,
        summary: json!({
            "n_range": [th.n_s, hi],
            "M_ms": th.m_ms,
            "sandwich_asserted": asserted,
            "perturb_gap": exp.perturb_gap,
        }),
    })
}

fn isospectral(exp: &Experiment, sink: &Sink) -> Result<SuiteOutcome> {
    let q = exp.potential()?;
    let n_report = trust_count(exp.k).min(10);
    let rep = isospectral_check(&q, exp.t, exp.k, exp.k, n_report)?;
    let tol = exp.drift_tol;
    let mut failures = Vec::new();
    if rep.max_periodic_drift > tol {
        failures.push(format!("eigenvalue drift {:.3e}", rep.max_periodic_drift));
    }
    if rep.hamiltonian_drift > tol || rep.l2_drift > tol {
        failures.push(format!("conserved quantities drift {:.3e}, {:.3e}", rep.hamiltonian_drift, rep.l2_drift));
    }
    if rep.backward_error > 1e-8 {
        failures.push(format!("backward error {:.3e}", rep.backward_error));
    }
    let header = ["n", "lambda_minus_drift", "lambda_plus_drift", "gamma_drift", "mu_motion"];
    let rows: Vec<Vec<String>> = rep
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                num(r.lambda_minus_drift),
                num(r.lambda_plus_drift),
                num(r.gamma_drift),
                num(r.mu_motion),
            ]
        })
        .collect();
    sink.csv("isospectral.csv", &header, &rows)?;
    Ok(SuiteOutcome {
        failures,
        summary: serde_json::to_value(&rep)?,
    })
}

/// Free Airy flow of data that saturates the class `s` (`s < 0`; the
/// default class `s = 0` falls back to `s = -1/4`).
fn airy(exp: &Experiment, sink: &Sink) -> Result<SuiteOutcome> {
    let s = if exp.s < 0.0 { exp.s } else { -0.25 };
    if s <= -0.5 {
        bail!("model.s: the Airy demo needs s in (-1/2, 0), got {s}");
    }
    let amp = 0.1;
    let u0 = saturating_data(amp, s, 256);
    let times: Vec<f64> = (0..=25).map(|i| 1e-8 * 10f64.powf(i as f64 / 5.0)).collect();
    let tracked = [1i64, 2, 3];
    let pts = airy_demo(&u0, s, &times, &tracked);

    let floor = pts.iter().map(|p| p.sup_distance).fold(f64::INFINITY, f64::min);
    let early: Vec<_> = pts.iter().filter(|p| p.t <= 1e-5).collect();
    let x: Vec<f64> = early.iter().map(|p| p.t).collect();
    let slopes: Vec<f64> = (0..tracked.len())
        .map(|j| loglog_fit(&x, &early.iter().map(|p| p.components[j]).collect::<Vec<_>>()).0)
        .collect();
    let mut failures = Vec::new();
    if floor < amp {
        failures.push(format!("sup distance {floor:.3e} drops below {amp}"));
    }
    if let Some(bad) = slopes.iter().find(|m| (*m - 1.0).abs() > 0.05) {
        failures.push(format!("componentwise distance is not linear in t (slope {bad:.3})"));
    }
    let rows: Vec<Vec<String>> = pts
        .iter()
        .map(|p| vec![num(p.t), num(p.sup_distance), num(p.max_component())])
        .collect();
    sink.csv("airy.csv", &["t", "sup_distance", "max_component_distance"], &rows)?;
    Ok(SuiteOutcome {
        failures,
        summary: json!({"s": s, "sup_floor": floor, "component_slopes": slopes}),
    })
}
