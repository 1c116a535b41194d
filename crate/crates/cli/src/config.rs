//! Experiment configuration: strict JSON schema with per-mode defaults.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Nonuniform,
    Uniform,
    Characterize,
    Lowerbound,
    Properties,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Nonuniform => "nonuniform",
            Mode::Uniform => "uniform",
            Mode::Characterize => "characterize",
            Mode::Lowerbound => "lowerbound",
            Mode::Properties => "properties",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nonuniform" => Ok(Mode::Nonuniform),
            "uniform" => Ok(Mode::Uniform),
            "characterize" => Ok(Mode::Characterize),
            "lowerbound" => Ok(Mode::Lowerbound),
            "properties" => Ok(Mode::Properties),
            other => bail!("unknown mode {other:?}"),
        }
    }
}

/// Parameter sweeps: the cross product of the present lists.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_count: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_points: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<Vec<u64>>,
}

impl SweepSpec {
    pub fn is_empty(&self) -> bool {
        self.eps.is_none() && self.label_count.is_none() && self.n_points.is_none() && self.seed.is_none()
    }
}

/// The full experiment configuration. Unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notions: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_distinguishers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_a: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_b: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_inverse: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strict_bits: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_double: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

pub const DEFAULT_NOTIONS: [&str; 4] = ["shannon", "min_entropy", "collision", "sqrt_collision"];

impl ExperimentConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).context("config does not match the schema")?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_canonical_json(&self) -> anyhow::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if let Some(eps) = self.eps {
            check_eps(eps)?;
        }
        if let Some(delta) = self.delta {
            if !(delta > 0.0 && delta < 0.5) {
                bail!("field `delta`: must lie in the open interval (0, 1/2), got {delta}");
            }
        }
        if let Some(names) = &self.notions {
            for name in names {
                if !DEFAULT_NOTIONS.contains(&name.as_str()) {
                    bail!(
                        "field `notions`: unknown notion {name:?} (expected one of {DEFAULT_NOTIONS:?})"
                    );
                }
            }
        }
        if let Some(kind) = &self.instance {
            if kind != "random" && kind != "two_point" {
                bail!("field `instance`: expected \"random\" or \"two_point\", got {kind:?}");
            }
        }
        if let Some(name) = &self.oracle_a {
            if !["erm_distinguisher", "zero", "exact_max_violation"].contains(&name.as_str()) {
                bail!("field `oracle_a`: unknown oracle {name:?}");
            }
        }
        if let Some(name) = &self.oracle_b {
            if !["erm_calibration", "zero"].contains(&name.as_str()) {
                bail!("field `oracle_b`: unknown oracle {name:?}");
            }
        }
        if let Some(sweep) = &self.sweep {
            if let Some(list) = &sweep.eps {
                for &eps in list {
                    check_eps(eps)?;
                }
            }
        }
        Ok(())
    }

    pub fn n_points(&self) -> usize {
        self.n_points.unwrap_or(32)
    }

    pub fn label_count(&self) -> usize {
        self.label_count.unwrap_or(4)
    }

    pub fn eps(&self) -> f64 {
        self.eps.unwrap_or(0.2)
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(0.1)
    }

    pub fn notion_names(&self) -> Vec<String> {
        self.notions
            .clone()
            .unwrap_or_else(|| DEFAULT_NOTIONS.iter().map(|s| s.to_string()).collect())
    }

    pub fn num_distinguishers(&self) -> usize {
        self.num_distinguishers.unwrap_or(16)
    }

    pub fn trials(&self) -> usize {
        self.trials.unwrap_or(20)
    }

    pub fn class_size(&self) -> usize {
        self.class_size.unwrap_or(8)
    }

    pub fn design_n(&self) -> usize {
        self.design_n.unwrap_or(256)
    }

    pub fn target_m(&self) -> usize {
        self.target_m.unwrap_or(50)
    }

    pub fn alpha(&self) -> f64 {
        1.0 / self.alpha_inverse.unwrap_or(16) as f64
    }
}

fn check_eps(eps: f64) -> anyhow::Result<()> {
    if !(eps > 0.0 && eps < 0.5) {
        bail!("field `eps`: must lie in the open interval (0, 1/2), got {eps}");
    }
    Ok(())
}
