//! Built-in seeded showcase configurations.

use std::path::Path;

use crate::error::Result;
use crate::experiments::config::ExperimentConfig;
use crate::experiments::runners::{run_experiment, ExperimentOutput};

/// `(name, TOML source)` of every demo configuration.
pub const DEMOS: &[(&str, &str)] = &[
    ("lebesgue_l4_trig", include_str!("../../configs/lebesgue_l4_trig.toml")),
    ("budget_sweep_l4_trig", include_str!("../../configs/budget_sweep_l4_trig.toml")),
    ("phase_gaussian", include_str!("../../configs/phase_gaussian.toml")),
    ("tga_compare_l4", include_str!("../../configs/tga_compare_l4.toml")),
    ("rate_l2_trig", include_str!("../../configs/rate_l2_trig.toml")),
    ("haar_lebesgue_p15", include_str!("../../configs/haar_lebesgue_p15.toml")),
    ("lebesgue_p15_trig", include_str!("../../configs/lebesgue_p15_trig.toml")),
    ("noisy_sparse_l4", include_str!("../../configs/noisy_sparse_l4.toml")),
];

pub fn demo_config(name: &str) -> Option<ExperimentConfig> {
    DEMOS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| ExperimentConfig::from_toml(text).expect("built-in demo configs parse"))
}

/// Runs every demo, writing `<name>.csv` / `<name>.json` into `dir` when
/// given.
pub fn run_demo(dir: Option<&Path>) -> Result<Vec<(String, ExperimentOutput)>> {
    DEMOS
        .iter()
        .map(|(name, text)| {
            let out = run_experiment(&ExperimentConfig::from_toml(text)?)?;
            if let Some(dir) = dir {
                out.write(dir, name)?;
            }
            Ok((name.to_string(), out))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_demo_configs_parse() {
        for (name, _) in DEMOS {
            assert!(demo_config(name).is_some(), "{name}");
        }
        assert!(demo_config("missing").is_none());
    }
}
