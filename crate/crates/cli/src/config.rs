// Copyright 2026 The lrst Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Simulation config files.
//!
//! A config is TOML with `[experiment]`, `[model]`, `[effect]` and `[grid]`
//! tables. [`SimConfig::resolve`] fills every default and expands presets so
//! the written-back config reproduces a run on its own.

use anyhow::{bail, Context, Result};
use lrst::sim::{
    run_power_experiment, run_type1_experiment, scenario1_grid, scenario2_grid, Accrual,
    EffectSpec, MonteCarlo, OutcomeSpec, PlaceboModel, PowerCell, PowerTable, Type1Table,
    VarianceStructure, WeightScheme, BAPI_302_DELTA, DEFAULT_RHO_TIME,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Type1,
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightsSetting {
    Named(String),
    Custom(Vec<f64>),
}

impl WeightsSetting {
    fn scheme(&self) -> Result<WeightScheme> {
        match self {
            WeightsSetting::Named(name) => match name.as_str() {
                "equal" => Ok(WeightScheme::Equal),
                "last-visit" => Ok(WeightScheme::LastVisit),
                other => bail!(
                    "experiment.weights: unknown preset {other:?} (equal, last-visit, or a list)"
                ),
            },
            WeightsSetting::Custom(w) => Ok(WeightScheme::Custom(w.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Type I error levels.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    /// Power significance level.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightsSetting>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// `bapineuzumab-302` or `custom`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structure: Option<VarianceStructure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_outcome: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub visits: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Vec<OutcomeSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<Vec<f64>>,
    /// `linear`, `constant`, or a per-visit list of fractions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accrual: Option<AccrualSetting>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiplier: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AccrualSetting {
    Named(String),
    Schedule(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Total sample sizes, 2:3 allocation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    /// Fixed arm sizes; used with `multipliers`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_x: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_y: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multipliers: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_outcome: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub experiment: ExperimentSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effect: Option<EffectSection>,
    pub grid: GridSection,
}

pub const DEFAULT_SEED: u64 = 20240517;
pub const DEFAULT_REPS: usize = 1000;

#[derive(Debug, Default, Clone, Copy)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub reps: Option<usize>,
}

impl SimConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Applies CLI overrides and every default, expanding the model preset.
    pub fn resolve(&self, overrides: Overrides) -> Result<SimConfig> {
        let e = &self.experiment;
        let experiment = ExperimentSection {
            kind: e.kind,
            reps: Some(overrides.reps.or(e.reps).unwrap_or(DEFAULT_REPS)),
            seed: Some(overrides.seed.or(e.seed).unwrap_or(DEFAULT_SEED)),
            alphas: match e.kind {
                ExperimentKind::Type1 => Some(e.alphas.clone().unwrap_or_else(|| vec![0.05, 0.1])),
                ExperimentKind::Power => None,
            },
            alpha: match e.kind {
                ExperimentKind::Type1 => None,
                ExperimentKind::Power => Some(e.alpha.unwrap_or(0.05)),
            },
            weights: Some(
                e.weights
                    .clone()
                    .unwrap_or(WeightsSetting::Named("equal".into())),
            ),
        };
        if e.kind == ExperimentKind::Type1 && e.alpha.is_some() {
            bail!("experiment.alpha applies to power runs; use experiment.alphas for type1");
        }
        if e.kind == ExperimentKind::Power && e.alphas.is_some() {
            bail!("experiment.alphas applies to type1 runs; use experiment.alpha for power");
        }

        let m = self.model.clone().unwrap_or(ModelSection {
            preset: None,
            structure: None,
            rho_time: None,
            rho_outcome: None,
            visits: None,
            outcome: None,
        });
        let preset = m.preset.as_deref().unwrap_or("bapineuzumab-302");
        let rho_time = m.rho_time.unwrap_or(DEFAULT_RHO_TIME);
        let rho_outcome = m.rho_outcome.unwrap_or(0.5);
        let (visits, outcomes) = match preset {
            "bapineuzumab-302" => {
                if m.visits.is_some() || m.outcome.is_some() {
                    bail!("model: visits/outcome are only allowed with preset = \"custom\"");
                }
                let reference =
                    PlaceboModel::bapineuzumab_302(rho_time, rho_outcome).context("model")?;
                (reference.visits().to_vec(), reference.outcomes())
            }
            "custom" => (
                m.visits
                    .clone()
                    .context("model.visits is required for a custom model")?,
                m.outcome
                    .clone()
                    .context("model.outcome is required for a custom model")?,
            ),
            other => bail!("model.preset: unknown preset {other:?} (bapineuzumab-302 or custom)"),
        };
        let model = ModelSection {
            preset: Some("custom".into()),
            structure: Some(m.structure.unwrap_or_default()),
            rho_time: Some(rho_time),
            rho_outcome: Some(rho_outcome),
            visits: Some(visits),
            outcome: Some(outcomes),
        };

        let effect = match e.kind {
            ExperimentKind::Type1 => {
                if self.effect.is_some() {
                    bail!("effect: type1 experiments simulate no treatment effect");
                }
                None
            }
            ExperimentKind::Power => {
                let fx = self.effect.clone().unwrap_or(EffectSection {
                    delta: None,
                    accrual: None,
                    multiplier: None,
                });
                let delta = match fx.delta {
                    Some(d) => d,
                    None if preset == "bapineuzumab-302" => BAPI_302_DELTA.to_vec(),
                    None => bail!("effect.delta is required for a custom model"),
                };
                Some(EffectSection {
                    delta: Some(delta),
                    accrual: Some(fx.accrual.unwrap_or(AccrualSetting::Named("linear".into()))),
                    multiplier: Some(fx.multiplier.unwrap_or(1.0)),
                })
            }
        };

        let g = &self.grid;
        let grid = match e.kind {
            ExperimentKind::Type1 => {
                if g.n_x.is_some()
                    || g.n_y.is_some()
                    || g.multipliers.is_some()
                    || g.rho_outcome.is_some()
                {
                    bail!("grid: type1 experiments take only grid.n (set model.rho_outcome for the correlation)");
                }
                GridSection {
                    n: Some(g.n.clone().context("grid.n is required")?),
                    n_x: None,
                    n_y: None,
                    multipliers: None,
                    rho_outcome: None,
                }
            }
            ExperimentKind::Power => {
                let rhos = Some(g.rho_outcome.clone().unwrap_or_else(|| vec![rho_outcome]));
                match (&g.n, g.n_x, g.n_y) {
                    (Some(n), None, None) => GridSection {
                        n: Some(n.clone()),
                        n_x: None,
                        n_y: None,
                        multipliers: Some(g.multipliers.clone().unwrap_or_else(|| vec![1.0])),
                        rho_outcome: rhos,
                    },
                    (None, Some(n_x), Some(n_y)) => {
                        GridSection {
                            n: None,
                            n_x: Some(n_x),
                            n_y: Some(n_y),
                            multipliers: Some(g.multipliers.clone().context(
                                "grid.multipliers is required with grid.n_x / grid.n_y",
                            )?),
                            rho_outcome: rhos,
                        }
                    }
                    _ => bail!("grid: give either grid.n or both grid.n_x and grid.n_y"),
                }
            }
        };
        Ok(SimConfig {
            experiment,
            model: Some(model),
            effect,
            grid,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

/// Output of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Tables {
    Type1(Type1Table),
    Power(PowerTable),
}

/// Runs a resolved config.
pub fn run(resolved: &SimConfig, threads: Option<usize>) -> Result<Tables> {
    let e = &resolved.experiment;
    let m = resolved.model.as_ref().context("unresolved config")?;
    let model = PlaceboModel::new(
        m.visits.clone().context("unresolved config")?,
        m.outcome.clone().context("unresolved config")?,
        m.rho_time.context("unresolved config")?,
        m.rho_outcome.context("unresolved config")?,
    )
    .context("model")?
    .with_structure(m.structure.unwrap_or_default())
    .context("model")?;
    let mut mc = MonteCarlo::new(
        e.reps.context("unresolved config")?,
        e.seed.context("unresolved config")?,
    );
    mc.weights = e
        .weights
        .as_ref()
        .map(WeightsSetting::scheme)
        .transpose()?
        .unwrap_or(WeightScheme::Equal);
    mc.threads = threads;

    match e.kind {
        ExperimentKind::Type1 => {
            let n = resolved.grid.n.as_deref().context("unresolved config")?;
            let alphas = e.alphas.as_deref().context("unresolved config")?;
            Ok(Tables::Type1(run_type1_experiment(&model, n, alphas, &mc)?))
        }
        ExperimentKind::Power => {
            let fx = resolved.effect.as_ref().context("unresolved config")?;
            let accrual = match fx.accrual.clone().context("unresolved config")? {
                AccrualSetting::Named(name) => match name.as_str() {
                    "linear" => Accrual::Linear,
                    "constant" => Accrual::Constant,
                    other => {
                        bail!("effect.accrual: unknown {other:?} (linear, constant, or a list)")
                    }
                },
                AccrualSetting::Schedule(s) => Accrual::Schedule(s),
            };
            let effect = EffectSpec {
                delta: fx.delta.clone().context("unresolved config")?,
                accrual,
                multiplier: fx.multiplier.context("unresolved config")?,
            };
            let g = &resolved.grid;
            let rhos = g.rho_outcome.as_deref().context("unresolved config")?;
            let multipliers = g.multipliers.as_deref().context("unresolved config")?;
            let grid: Vec<PowerCell> = match (&g.n, g.n_x, g.n_y) {
                (Some(n), _, _) => rhos
                    .iter()
                    .flat_map(|&rho| {
                        multipliers.iter().flat_map(move |&mult| {
                            scenario1_grid(n, rho).into_iter().map(move |c| PowerCell {
                                multiplier: mult,
                                ..c
                            })
                        })
                    })
                    .collect(),
                (None, Some(n_x), Some(n_y)) => scenario2_grid(n_x, n_y, multipliers, rhos),
                _ => bail!("unresolved config"),
            };
            let alpha = e.alpha.context("unresolved config")?;
            Ok(Tables::Power(run_power_experiment(
                &model, &effect, &grid, alpha, &mc,
            )?))
        }
    }
}
