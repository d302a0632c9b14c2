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

//! Monte Carlo Type I error and power experiments.
//!
//! Replicate `r` of grid cell `c` draws from the ChaCha stream `r` of a key
//! built from `(seed, c)`. Work is spread over rayon but every replicate's
//! randomness is fixed up front, and aggregation only counts, so the tables
//! are identical for any thread count.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{lrst, WeightVector};
use crate::sim::model::{
    discretize, simulate_trial_with, EffectSpec, OrdinalThresholds, PlaceboModel,
};

/// `floor(0.4 N)` control and the rest treatment: a 2:3 allocation.
pub fn two_to_three(n_total: usize) -> (usize, usize) {
    let n_x = 2 * n_total / 5;
    (n_x, n_total - n_x)
}

/// Which visits the statistic weighs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightScheme {
    Equal,
    LastVisit,
    Custom(Vec<f64>),
}

impl WeightScheme {
    pub fn resolve(&self, visits: usize) -> Result<WeightVector> {
        match self {
            WeightScheme::Equal => Ok(WeightVector::equal(visits)),
            WeightScheme::LastVisit => Ok(WeightVector::last_visit(visits)),
            WeightScheme::Custom(w) => {
                if w.len() != visits {
                    return Err(Error::InvalidWeights(format!(
                        "{} weights for {visits} visits",
                        w.len()
                    )));
                }
                WeightVector::new(w.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarlo {
    pub reps: usize,
    pub seed: u64,
    pub weights: WeightScheme,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl MonteCarlo {
    pub fn new(reps: usize, seed: u64) -> Self {
        Self {
            reps,
            seed,
            weights: WeightScheme::Equal,
            threads: None,
        }
    }

    pub fn threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.reps < 100 {
            log::warn!(
                "{} replicates is below the 100 needed for stable rates",
                self.reps
            );
        }
        if self.reps == 0 {
            return Err(Error::InvalidArgument("need at least one replicate".into()));
        }
        Ok(())
    }

    fn install<T: Send>(&self, job: impl FnOnce() -> T + Send) -> Result<T> {
        match self.threads {
            None => Ok(job()),
            Some(k) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(k)
                    .build()
                    .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
                Ok(pool.install(job))
            }
        }
    }
}

fn replicate_rng(seed: u64, cell: u64, replicate: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&cell.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(replicate);
    rng
}

/// One-sided p-values of a replicate; `None` marks a degenerate test.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Replicate {
    continuous: Option<f64>,
    ordinal: Option<f64>,
}

struct Cell<'a> {
    model: &'a PlaceboModel,
    thresholds: &'a OrdinalThresholds,
    effect: EffectSpec,
    weights: WeightVector,
    n_x: usize,
    n_y: usize,
}

fn p_or_degenerate(result: Result<crate::inference::TestResult>) -> Result<Option<f64>> {
    match result {
        Ok(r) => Ok(Some(r.p_value)),
        Err(Error::NonPositiveVariance { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn run_cells(cells: &[Cell<'_>], mc: &MonteCarlo) -> Result<Vec<Vec<Replicate>>> {
    mc.validate()?;
    let reps = mc.reps;
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..reps).map(move |r| (c, r)))
        .collect();
    let flat: Vec<Result<Replicate>> = mc.install(|| {
        jobs.par_iter()
            .map(|&(c, r)| {
                let cell = &cells[c];
                let mut rng = replicate_rng(mc.seed, c as u64, r as u64);
                let data =
                    simulate_trial_with(cell.model, &cell.effect, cell.n_x, cell.n_y, &mut rng)?;
                let continuous = p_or_degenerate(lrst(&data, &cell.weights))?;
                let ordinal = discretize(&data, cell.thresholds)?;
                let ordinal = p_or_degenerate(lrst(&ordinal, &cell.weights))?;
                Ok(Replicate {
                    continuous,
                    ordinal,
                })
            })
            .collect()
    })?;
    let mut out: Vec<Vec<Replicate>> = Vec::with_capacity(cells.len());
    for (i, rep) in flat.into_iter().enumerate() {
        if i % reps == 0 {
            out.push(Vec::with_capacity(reps));
        }
        out.last_mut().expect("pushed above").push(rep?);
    }
    Ok(out)
}

/// Rejection rate at `alpha` among non-degenerate replicates, and their count.
fn rejection_rate(ps: impl Iterator<Item = Option<f64>>, alpha: f64) -> (f64, usize) {
    let (mut rejected, mut valid) = (0usize, 0usize);
    for p in ps.flatten() {
        valid += 1;
        if p <= alpha {
            rejected += 1;
        }
    }
    if valid == 0 {
        (f64::NAN, 0)
    } else {
        (rejected as f64 / valid as f64, valid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Type1Row {
    pub n_total: usize,
    pub n_x: usize,
    pub n_y: usize,
    /// Rejection rate per alpha, continuous data.
    pub continuous: Vec<f64>,
    /// Rejection rate per alpha, ordinal data.
    pub ordinal: Vec<f64>,
    pub degenerate_continuous: usize,
    pub degenerate_ordinal: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Type1Table {
    pub alphas: Vec<f64>,
    pub reps: usize,
    pub rows: Vec<Type1Row>,
}

impl Type1Table {
    /// Wide layout: one row per N, continuous then ordinal columns per alpha.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header = vec!["n".to_string(), "n_x".into(), "n_y".into()];
        header.extend(self.alphas.iter().map(|a| format!("lrst_alpha_{a}")));
        header.extend(
            self.alphas
                .iter()
                .map(|a| format!("lrst_ordinal_alpha_{a}")),
        );
        header.extend(["degenerate_continuous".into(), "degenerate_ordinal".into()]);
        out.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![
                row.n_total.to_string(),
                row.n_x.to_string(),
                row.n_y.to_string(),
            ];
            rec.extend(row.continuous.iter().map(f64::to_string));
            rec.extend(row.ordinal.iter().map(f64::to_string));
            rec.extend([
                row.degenerate_continuous.to_string(),
                row.degenerate_ordinal.to_string(),
            ]);
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Type I error: zero effect, 2:3 allocation at each total `N`, both the
/// continuous data and its ordinal discretization.
pub fn run_type1_experiment(
    model: &PlaceboModel,
    n_values: &[usize],
    alphas: &[f64],
    mc: &MonteCarlo,
) -> Result<Type1Table> {
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
        return Err(Error::InvalidArgument(format!("alpha {a} not in (0, 1]")));
    }
    let thresholds = OrdinalThresholds::from_model(model);
    let weights = mc.weights.resolve(model.n_visits())?;
    let cells = n_values
        .iter()
        .map(|&n| {
            let (n_x, n_y) = two_to_three(n);
            Cell {
                model,
                thresholds: &thresholds,
                effect: EffectSpec::none(model.n_outcomes()),
                weights: weights.clone(),
                n_x,
                n_y,
            }
        })
        .collect::<Vec<_>>();
    let results = run_cells(&cells, mc)?;
    let rows = cells
        .iter()
        .zip(&results)
        .map(|(cell, reps)| {
            let cont: Vec<(f64, usize)> = alphas
                .iter()
                .map(|&a| rejection_rate(reps.iter().map(|r| r.continuous), a))
                .collect();
            let ord: Vec<(f64, usize)> = alphas
                .iter()
                .map(|&a| rejection_rate(reps.iter().map(|r| r.ordinal), a))
                .collect();
            Type1Row {
                n_total: cell.n_x + cell.n_y,
                n_x: cell.n_x,
                n_y: cell.n_y,
                continuous: cont.iter().map(|c| c.0).collect(),
                ordinal: ord.iter().map(|c| c.0).collect(),
                degenerate_continuous: reps.iter().filter(|r| r.continuous.is_none()).count(),
                degenerate_ordinal: reps.iter().filter(|r| r.ordinal.is_none()).count(),
            }
        })
        .collect();
    Ok(Type1Table {
        alphas: alphas.to_vec(),
        reps: mc.reps,
        rows,
    })
}

/// One point of a power grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerCell {
    pub n_x: usize,
    pub n_y: usize,
    pub multiplier: f64,
    pub rho_outcome: f64,
}

/// Sample size sweep at fixed effect, 2:3 allocation.
pub fn scenario1_grid(n_values: &[usize], rho_outcome: f64) -> Vec<PowerCell> {
    n_values
        .iter()
        .map(|&n| {
            let (n_x, n_y) = two_to_three(n);
            PowerCell {
                n_x,
                n_y,
                multiplier: 1.0,
                rho_outcome,
            }
        })
        .collect()
}

/// Effect-size sweep at fixed arms, for each between-outcome correlation.
pub fn scenario2_grid(n_x: usize, n_y: usize, multipliers: &[f64], rhos: &[f64]) -> Vec<PowerCell> {
    rhos.iter()
        .flat_map(|&rho_outcome| {
            multipliers.iter().map(move |&multiplier| PowerCell {
                n_x,
                n_y,
                multiplier,
                rho_outcome,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerRow {
    #[serde(flatten)]
    pub cell: PowerCell,
    pub n_total: usize,
    pub continuous: f64,
    pub ordinal: f64,
    pub degenerate_continuous: usize,
    pub degenerate_ordinal: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerTable {
    pub alpha: f64,
    pub reps: usize,
    pub rows: Vec<PowerRow>,
}

impl PowerTable {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record([
            "n",
            "n_x",
            "n_y",
            "multiplier",
            "rho_outcome",
            "lrst",
            "lrst_ordinal",
            "degenerate_continuous",
            "degenerate_ordinal",
        ])?;
        for r in &self.rows {
            out.write_record([
                r.n_total.to_string(),
                r.cell.n_x.to_string(),
                r.cell.n_y.to_string(),
                r.cell.multiplier.to_string(),
                r.cell.rho_outcome.to_string(),
                r.continuous.to_string(),
                r.ordinal.to_string(),
                r.degenerate_continuous.to_string(),
                r.degenerate_ordinal.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Plot-ready long format: one line per cell and variant.
    pub fn write_long_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["n", "multiplier", "rho_outcome", "variant", "power"])?;
        for r in &self.rows {
            for (variant, power) in [("LRST", r.continuous), ("LRST-ordinal", r.ordinal)] {
                out.write_record([
                    r.n_total.to_string(),
                    r.cell.multiplier.to_string(),
                    r.cell.rho_outcome.to_string(),
                    variant.to_string(),
                    power.to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Rejection rates at `alpha` over a grid of sizes, effect multipliers and
/// between-outcome correlations. `model` supplies margins and `rho_time`.
pub fn run_power_experiment(
    model: &PlaceboModel,
    effect: &EffectSpec,
    grid: &[PowerCell],
    alpha: f64,
    mc: &MonteCarlo,
) -> Result<PowerTable> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha {alpha} not in (0, 1)"
        )));
    }
    let models: Vec<PlaceboModel> = grid
        .iter()
        .map(|c| model.with_rho_outcome(c.rho_outcome))
        .collect::<Result<_>>()?;
    let thresholds: Vec<OrdinalThresholds> =
        models.iter().map(OrdinalThresholds::from_model).collect();
    let weights = mc.weights.resolve(model.n_visits())?;
    let cells = grid
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let effect = effect.scaled(c.multiplier * effect.multiplier);
            effect.validate(&models[i])?;
            Ok(Cell {
                model: &models[i],
                thresholds: &thresholds[i],
                effect,
                weights: weights.clone(),
                n_x: c.n_x,
                n_y: c.n_y,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let results = run_cells(&cells, mc)?;
    let rows = grid
        .iter()
        .zip(&results)
        .map(|(cell, reps)| {
            let (continuous, _) = rejection_rate(reps.iter().map(|r| r.continuous), alpha);
            let (ordinal, _) = rejection_rate(reps.iter().map(|r| r.ordinal), alpha);
            PowerRow {
                cell: *cell,
                n_total: cell.n_x + cell.n_y,
                continuous,
                ordinal,
                degenerate_continuous: reps.iter().filter(|r| r.continuous.is_none()).count(),
                degenerate_ordinal: reps.iter().filter(|r| r.ordinal.is_none()).count(),
            }
        })
        .collect();
    Ok(PowerTable {
        alpha,
        reps: mc.reps,
        rows,
    })
}
