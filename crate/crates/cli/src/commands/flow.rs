use anyhow::{bail, Result};
use hill_core::birkhoff::{actions_from_gaps, flow, frequencies, linearized_birkhoff, torus_membership, BirkhoffState};
use hill_core::galerkin::{gaps_and_midpoints, periodic_spectrum};
use serde_json::{json, Value};

use crate::config::Experiment;
use crate::output::{num, Sink};

const MAX_SNAPSHOTS: usize = 100_000;

fn modes_json(z: &BirkhoffState) -> Value {
    Value::Array(z.modes().into_iter().map(|(n, re, im)| json!([n, re, im])).collect())
}

fn snapshot_times(t: f64, dt: Option<f64>) -> Result<Vec<f64>> {
    let Some(dt) = dt else {
        return Ok(if t == 0.0 { vec![0.0] } else { vec![0.0, t] });
    };
    let steps = (t.abs() / dt).ceil();
    if steps > MAX_SNAPSHOTS as f64 {
        bail!("run.dt: {steps} snapshots exceed the limit {MAX_SNAPSHOTS}");
    }
    let steps = steps as usize;
    let mut ts: Vec<f64> = (0..steps).map(|i| t.signum() * i as f64 * dt).collect();
    ts.push(t);
    Ok(ts)
}

pub fn run(exp: &Experiment) -> Result<Vec<String>> {
    let q = exp.potential()?;
    let z0 = linearized_birkhoff(&q);
    let spec = periodic_spectrum(&q, exp.k)?;
    let gaps = gaps_and_midpoints(&spec);
    let n_act = gaps.gamma.len().min(z0.n_max());
    let gap_actions = match actions_from_gaps(&gaps.gamma[..n_act]) {
        Ok(rep) => Some(rep.actions),
        Err(e) => {
            eprintln!("flow: no gap actions: {e}");
            None
        }
    };

    let times = snapshot_times(exp.t, exp.dt)?;
    let states: Vec<BirkhoffState> = times.iter().map(|&t| flow(&z0, t)).collect();
    let zt = states.last().expect("at least one snapshot");

    let mut failures = Vec::new();
    if let Some((t, _)) = times.iter().zip(&states).find(|(_, z)| !torus_membership(&z0, z, 1e-12)) {
        failures.push(format!("torus membership at t = {t}"));
    }
    let a0 = z0.actions();
    let at = zt.actions();
    let changes: Vec<f64> = a0.iter().zip(&at).map(|(x, y)| (x - y).norm()).collect();
    let scale = a0.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if changes.iter().any(|&c| c > 16.0 * f64::EPSILON * scale) {
        failures.push("action invariance".to_string());
    }

    let omega = frequencies(&a0.iter().map(|a| a.re).collect::<Vec<_>>());
    let sink = Sink::new(exp, "flow")?;
    sink.json(
        "flow.json",
        json!({
            "t": exp.t,
            "modes": modes_json(zt),
            "initial_modes": modes_json(&z0),
            "actions": gap_actions,
            "frequencies": gap_actions.as_deref().map(frequencies),
            "state_actions": a0.iter().map(|a| a.re).collect::<Vec<_>>(),
            "state_frequencies": omega,
            "asymptotic": true,
            "failures": failures,
        }),
    )?;

    let header = ["n", "re_z0", "im_z0", "re_zt", "im_zt", "omega", "phase", "action", "action_change"];
    let rows: Vec<Vec<String>> = (1..=z0.n_max())
        .map(|n| {
            let (a, b) = (z0.get(n as i64), zt.get(n as i64));
            let phase = if a.norm() > 0.0 { num((b / a).arg()) } else { String::new() };
            vec![
                n.to_string(),
                num(a.re),
                num(a.im),
                num(b.re),
                num(b.im),
                num(omega[n - 1]),
                phase,
                num(a0[n - 1].re),
                num(changes[n - 1]),
            ]
        })
        .collect();
    sink.csv("flow.csv", &header, &rows)?;

    if exp.dt.is_some() {
        let rows: Vec<Vec<String>> = times
            .iter()
            .zip(&states)
            .flat_map(|(&t, z)| {
                (1..=z.n_max() as i64).map(move |n| {
                    let v = z.get(n);
                    vec![num(t), n.to_string(), num(v.re), num(v.im)]
                })
            })
            .collect();
        sink.csv("flow_snapshots.csv", &["t", "n", "re_z", "im_z"], &rows)?;
    }
    println!(
        "flow: {} modes to t = {}, largest action change {:.3e}",
        z0.n_max(),
        exp.t,
        changes.iter().copied().fold(0.0, f64::max)
    );
    Ok(failures)
}
