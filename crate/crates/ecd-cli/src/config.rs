//! Experiment configuration: a JSON tree, overridable by CLI flags, resolved
//! against per-experiment defaults before running. The fully resolved config
//! is embedded in every output file for provenance.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub protocol: Option<String>,
    /// Model parameters by name (validated against the experiment's schema).
    #[serde(default)]
    pub model: BTreeMap<String, f64>,
    #[serde(default)]
    pub drive: DriveConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    /// eCD carrier angular frequency.
    #[serde(default)]
    pub omega: Option<f64>,
    /// Global drive phase.
    #[serde(default)]
    pub phi: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axes: Vec<AxisConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub param: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default = "default_scale")]
    pub scale: String,
}

fn default_scale() -> String {
    "linear".into()
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default)]
    pub points_per_period: Option<usize>,
    #[serde(default)]
    pub min_steps: Option<usize>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub svg: Option<bool>,
}

impl AxisConfig {
    pub fn values(&self) -> Vec<f64> {
        let n = self.count.max(2);
        (0..n)
            .map(|k| {
                let s = k as f64 / (n - 1) as f64;
                if self.scale == "log" {
                    self.min * (self.max / self.min).powf(s)
                } else {
                    self.min + (self.max - self.min) * s
                }
            })
            .collect()
    }
}

/// Experiments the runner understands, with their parameter schemas
/// (name, default, unit/description).
pub fn experiment_schema(experiment: &str) -> Option<&'static [(&'static str, f64, &'static str)]> {
    match experiment {
        "lz" | "lz-convergence" => Some(&[
            ("v", 1.0, "sweep rate (energy/time)"),
            ("coupling", 1.0, "gap coupling Omega (energy)"),
            ("span", 20.0, "protocol window length, t in [-span/2, span/2] (time)"),
        ]),
        "stirap-map" => Some(&[
            ("rabi_sigma", 10.0, "peak Rabi frequency x sigma (-)"),
            ("delay_sigma", 1.0, "pulse delay / sigma (-)"),
            ("sigma", 1.0, "pulse width scale (time)"),
            ("delta1_sigma", 0.0, "single-photon detuning x sigma (-)"),
        ]),
        "bell-tau" => Some(&[
            ("g", 0.05, "qubit-resonator coupling (energy)"),
            ("detuning_g", 10.0, "|Omega - omega_R| / g (-)"),
            ("offset_g", 1.0, "initial qubit-qubit detuning / g (-)"),
            ("n_ph", 4.0, "resonator truncation (levels)"),
            ("tau", 2000.0, "ramp duration (time)"),
            ("ramp", 0.0, "0 linear, 1 local-adiabatic, 2 boundary-cancel"),
        ]),
        _ => None,
    }
}

pub fn known_experiments() -> &'static [&'static str] {
    &["lz", "lz-convergence", "stirap-map", "bell-tau"]
}

/// Validation + default expansion. Returns the resolved config (every field
/// populated) or a diagnostic naming the offending field.
pub fn resolve(mut cfg: ExperimentConfig) -> Result<ExperimentConfig, String> {
    let schema = experiment_schema(&cfg.experiment).ok_or_else(|| {
        format!(
            "experiment: unknown experiment '{}' (expected one of {:?})",
            cfg.experiment,
            known_experiments()
        )
    })?;
    for (name, default, _) in schema {
        cfg.model.entry((*name).to_string()).or_insert(*default);
    }
    for key in cfg.model.keys() {
        if !schema.iter().any(|(n, _, _)| n == key) {
            return Err(format!(
                "model.{key}: unknown parameter for experiment '{}'",
                cfg.experiment
            ));
        }
    }
    let protocol = cfg.protocol.get_or_insert_with(|| default_protocol(&cfg.experiment).into());
    // fmod is the STIRAP name for the eCD sideband protocol
    if protocol == "fmod" {
        *protocol = "ecd".into();
    }
    if !["adiabatic", "exact_cd", "ecd"].contains(&protocol.as_str()) {
        return Err(format!(
            "protocol: unknown protocol '{protocol}' (expected adiabatic | exact_cd | ecd | fmod)"
        ));
    }
    if cfg.drive.omega.is_none() {
        cfg.drive.omega = Some(default_drive_omega(&cfg.experiment, &cfg.model));
    }
    if cfg.drive.omega.unwrap() <= 0.0 {
        return Err("drive.omega: carrier frequency must be positive".into());
    }
    cfg.drive.phi.get_or_insert(0.0);
    if cfg.sweep.is_none() {
        cfg.sweep = default_sweep(&cfg.experiment);
    }
    if let Some(sweep) = &cfg.sweep {
        for axis in &sweep.axes {
            if axis.count < 2 {
                return Err(format!("sweep.axes[{}].count: need at least 2 points", axis.param));
            }
            if !["linear", "log"].contains(&axis.scale.as_str()) {
                return Err(format!(
                    "sweep.axes[{}].scale: expected 'linear' or 'log'",
                    axis.param
                ));
            }
            if axis.scale == "log" && (axis.min <= 0.0 || axis.max <= 0.0) {
                return Err(format!("sweep.axes[{}]: log scale needs positive bounds", axis.param));
            }
            let swept_model_param = schema.iter().any(|(n, _, _)| *n == axis.param);
            let swept_special = matches!(
                (cfg.experiment.as_str(), axis.param.as_str()),
                ("lz-convergence", "omega") | ("bell-tau", "tau")
            );
            if !swept_model_param && !swept_special {
                return Err(format!(
                    "sweep.axes[{}]: not a parameter of experiment '{}'",
                    axis.param, cfg.experiment
                ));
            }
        }
        let expected_axes = match cfg.experiment.as_str() {
            "stirap-map" => 2,
            "lz" => 0,
            _ => 1,
        };
        if sweep.axes.len() != expected_axes {
            return Err(format!(
                "sweep.axes: experiment '{}' takes {} axis(es), got {}",
                cfg.experiment,
                expected_axes,
                sweep.axes.len()
            ));
        }
    }
    cfg.integrator.points_per_period.get_or_insert(96);
    cfg.integrator.min_steps.get_or_insert(default_min_steps(&cfg.experiment));
    cfg.output.dir.get_or_insert_with(|| ".".into());
    cfg.output.name.get_or_insert_with(|| cfg.experiment.clone());
    cfg.output.svg.get_or_insert(false);
    Ok(cfg)
}

fn default_protocol(experiment: &str) -> &'static str {
    match experiment {
        "lz-convergence" => "ecd",
        _ => "adiabatic",
    }
}

fn default_drive_omega(experiment: &str, model: &BTreeMap<String, f64>) -> f64 {
    match experiment {
        "stirap-map" => 50.0 / model.get("sigma").copied().unwrap_or(1.0),
        "bell-tau" => {
            let g = model.get("g").copied().unwrap_or(0.05);
            let det = model.get("detuning_g").copied().unwrap_or(10.0);
            10.0 * g * det
        }
        _ => 50.0,
    }
}

fn default_min_steps(experiment: &str) -> usize {
    match experiment {
        "lz" | "lz-convergence" => 4000,
        "stirap-map" => 3000,
        "bell-tau" => 8000,
        _ => 2000,
    }
}

fn default_sweep(experiment: &str) -> Option<SweepConfig> {
    match experiment {
        "lz-convergence" => Some(SweepConfig {
            axes: vec![AxisConfig {
                param: "omega".into(),
                min: 25.0,
                max: 200.0,
                count: 4,
                scale: "log".into(),
            }],
        }),
        "stirap-map" => Some(SweepConfig {
            axes: vec![
                AxisConfig { param: "rabi_sigma".into(), min: 2.0, max: 20.0, count: 20,
                    scale: "linear".into() },
                AxisConfig { param: "delay_sigma".into(), min: 0.25, max: 2.5, count: 20,
                    scale: "linear".into() },
            ],
        }),
        "bell-tau" => Some(SweepConfig {
            axes: vec![AxisConfig {
                param: "tau".into(),
                min: 500.0,
                max: 8000.0,
                count: 10,
                scale: "log".into(),
            }],
        }),
        _ => None,
    }
}
