use anyhow::Result;
use hill_core::galerkin::{full_spectrum, gaps_and_midpoints};
use serde_json::json;

use crate::config::Experiment;
use crate::output::{cx, cx_list, num, Sink};

pub fn run(exp: &Experiment) -> Result<Vec<String>> {
    let q = exp.potential()?;
    let spec = full_spectrum(&q, exp.k)?;
    let gaps = gaps_and_midpoints(&spec);
    let sink = Sink::new(exp, "spectrum")?;

    sink.json(
        "spectrum.json",
        json!({
            "periodic": cx_list(&spec.periodic),
            "dirichlet": spec.dirichlet.as_deref().map(cx_list),
            "gaps": cx_list(&gaps.gamma),
            "midpoints": cx_list(&gaps.tau),
            "trust_count": spec.trust_count,
            "K": spec.k,
        }),
    )?;

    let header = [
        "n",
        "re_lambda_minus",
        "im_lambda_minus",
        "re_lambda_plus",
        "im_lambda_plus",
        "gamma",
        "re_tau",
        "im_tau",
        "re_mu",
        "im_mu",
        "tau_minus_mu",
    ];
    let rows: Vec<Vec<String>> = (1..=spec.trust_count)
        .map(|n| {
            let (lm, lp) = (spec.lambda_minus(n), spec.lambda_plus(n));
            let tau = gaps.tau[n - 1];
            let mu = spec.mu(n).expect("full spectrum has a Dirichlet part");
            vec![
                n.to_string(),
                num(lm.re),
                num(lm.im),
                num(lp.re),
                num(lp.im),
                num(gaps.gamma[n - 1].norm()),
                num(tau.re),
                num(tau.im),
                num(mu.re),
                num(mu.im),
                num((tau - mu).norm()),
            ]
        })
        .collect();
    sink.csv("spectrum.csv", &header, &rows)?;
    println!(
        "spectrum: {} trusted gaps, lambda_0 = {}",
        spec.trust_count,
        cx(spec.lambda_zero())
    );
    Ok(Vec::new())
}
