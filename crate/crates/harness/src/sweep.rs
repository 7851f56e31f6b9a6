use rayon::prelude::*;

use crate::config::RawConfig;
use crate::error::Result;
use crate::scenario::{run_scenario, ScenarioResult};

/// Run the base configuration once per value of `param`. Runs are independent
/// and execute in parallel; results come back in the order of `values`.
pub fn sweep(
    base: &RawConfig,
    param: &str,
    values: &[String],
) -> Result<Vec<(String, ScenarioResult)>> {
    // Build every configuration first so that bad values fail before any run.
    let configs = values
        .iter()
        .map(|v| {
            let mut raw = base.clone();
            raw.set(param, v)?;
            Ok((v.clone(), raw.build()?))
        })
        .collect::<Result<Vec<_>>>()?;
    configs
        .into_par_iter()
        .map(|(v, cfg)| Ok((v, run_scenario(&cfg)?)))
        .collect()
}
