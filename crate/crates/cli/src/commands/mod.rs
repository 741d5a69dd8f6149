pub mod flow;
pub mod reduce;
pub mod spectrum;
pub mod verify;

use anyhow::{bail, Result};
use hill_core::reduction::ReductionContext;
use hill_core::Potential;

use crate::config::Experiment;

/// Builds the reduction context for the configured class. Without an
/// explicit `m`, the ball radius is the potential's own norm (or a tiny
/// positive radius for the zero potential).
pub fn context(exp: &Experiment, q: &Potential) -> Result<ReductionContext> {
    exp.check_reduction_class()?;
    let w = exp.weight()?;
    let m = exp.m.unwrap_or_else(|| q.norm(&w, exp.s).max(1e-12));
    if q.norm(&w, exp.s) > m * (1.0 + 1e-12) {
        bail!("model.m: {m} is below the potential norm {}", q.norm(&w, exp.s));
    }
    Ok(ReductionContext::new(q.clone(), exp.s, w, m, exp.k)?)
}
