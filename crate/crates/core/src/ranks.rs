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

//! Midranks, placements, and relative treatment effects.
//!
//! Every `(visit, outcome)` cell is ranked on its own: the pooled sample of
//! both arms at that cell, never across visits or outcomes.
//!
//! For control value `x_i` the *placement* `R_y(x_i)` is its midrank among
//! the treatment values plus itself, and symmetrically for `R_x(y_j)`.
//! Placements follow from pooled and within-arm midranks:
//!
//! ```text
//! R_y(x_i) = pooled(x_i) - within_x(x_i) + 1
//! ```
//!
//! since both ranks count the same control observations below `x_i`.

use nalgebra::DMatrix;

use crate::data::{Panel, TrialDataset};
use crate::error::{Error, Result};

/// Midranks of `values`: ties share the mean of the positions they occupy.
pub fn midranks(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue {
            value: v.to_string(),
            context: "midrank input".into(),
        });
    }
    let mut ranks = vec![0.0; values.len()];
    midranks_into(values, &mut Vec::new(), &mut ranks);
    Ok(ranks)
}

/// Sort-then-scan midranks for finite input. `order` is scratch space.
pub(crate) fn midranks_into(values: &[f64], order: &mut Vec<usize>, ranks: &mut [f64]) {
    debug_assert_eq!(values.len(), ranks.len());
    order.clear();
    order.extend(0..values.len());
    order.sort_unstable_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut start = 0;
    while start < order.len() {
        let v = values[order[start]];
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == v {
            end += 1;
        }
        // positions start+1 ..= end share their mean
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
}

/// Pooled midranks and one-vs-pool placements for both arms.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTables {
    /// `R_xitk`: midrank of `x_itk` in the pooled sample at `(t,k)`.
    pub pooled_x: Panel,
    /// `R_yjtk`.
    pub pooled_y: Panel,
    /// `R_y(x_itk)`: midrank of `x_itk` among `{y_1tk, .., y_nytk, x_itk}`.
    pub placement_x_in_y: Panel,
    /// `R_x(y_jtk)`.
    pub placement_y_in_x: Panel,
}

pub fn build_rank_tables(data: &TrialDataset) -> RankTables {
    let (nx, ny) = (data.n_x(), data.n_y());
    let (visits, outcomes) = (data.n_visits(), data.n_outcomes());
    let n = nx + ny;

    let mut pooled_x = Panel::from_fn(nx, visits, outcomes, |_, _, _| 0.0);
    let mut pooled_y = Panel::from_fn(ny, visits, outcomes, |_, _, _| 0.0);
    let mut place_x = pooled_x.clone();
    let mut place_y = pooled_y.clone();

    let mut pooled_values = vec![0.0; n];
    let mut pooled_ranks = vec![0.0; n];
    let mut within_x = vec![0.0; nx];
    let mut within_y = vec![0.0; ny];
    let mut order = Vec::with_capacity(n);

    for t in 0..visits {
        for k in 0..outcomes {
            for (slot, v) in pooled_values.iter_mut().zip(
                data.control()
                    .slice(t, k)
                    .chain(data.treatment().slice(t, k)),
            ) {
                *slot = v;
            }
            midranks_into(&pooled_values, &mut order, &mut pooled_ranks);
            midranks_into(&pooled_values[..nx], &mut order, &mut within_x);
            midranks_into(&pooled_values[nx..], &mut order, &mut within_y);
            for i in 0..nx {
                pooled_x.set(i, t, k, pooled_ranks[i]);
                place_x.set(i, t, k, pooled_ranks[i] - within_x[i] + 1.0);
            }
            for j in 0..ny {
                pooled_y.set(j, t, k, pooled_ranks[nx + j]);
                place_y.set(j, t, k, pooled_ranks[nx + j] - within_y[j] + 1.0);
            }
        }
    }
    RankTables {
        pooled_x,
        pooled_y,
        placement_x_in_y: place_x,
        placement_y_in_x: place_y,
    }
}

/// Estimated relative treatment effects.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectEstimates {
    /// `T x K` matrix of `theta_tk = P(X < Y) - P(X > Y)` estimates.
    pub theta_tk: DMatrix<f64>,
    /// Per-visit average over outcomes.
    pub theta_t: Vec<f64>,
    /// Average over visits.
    pub theta_bar: f64,
    /// `R_t`: treatment minus control mean rank at visit `t`, averaged over outcomes.
    pub rank_diff: Vec<f64>,
}

impl EffectEstimates {
    /// Derives the averages from a `theta_tk` matrix and the total sample size.
    pub fn from_theta(theta_tk: DMatrix<f64>, n_total: usize) -> Self {
        let outcomes = theta_tk.ncols() as f64;
        let theta_t: Vec<f64> = theta_tk.row_iter().map(|r| r.sum() / outcomes).collect();
        let theta_bar = theta_t.iter().sum::<f64>() / theta_t.len() as f64;
        let half_n = n_total as f64 / 2.0;
        let rank_diff = theta_t.iter().map(|th| half_n * th).collect();
        Self {
            theta_tk,
            theta_t,
            theta_bar,
            rank_diff,
        }
    }
}

/// Effects through the mean-rank shortcut `theta_tk = (2/N)(mean R_y - mean R_x)`.
pub fn estimate_effects(ranks: &RankTables, data: &TrialDataset) -> EffectEstimates {
    let (nx, ny) = (data.n_x() as f64, data.n_y() as f64);
    let n = nx + ny;
    let (visits, outcomes) = (data.n_visits(), data.n_outcomes());
    let mut theta_tk = DMatrix::zeros(visits, outcomes);
    let mut rank_diff = vec![0.0; visits];
    for t in 0..visits {
        for k in 0..outcomes {
            let mean_y = ranks.pooled_y.slice(t, k).sum::<f64>() / ny;
            let mean_x = ranks.pooled_x.slice(t, k).sum::<f64>() / nx;
            let diff = mean_y - mean_x;
            theta_tk[(t, k)] = 2.0 * diff / n;
            rank_diff[t] += diff / outcomes as f64;
        }
    }
    let theta_t: Vec<f64> = theta_tk
        .row_iter()
        .map(|r| r.sum() / outcomes as f64)
        .collect();
    let theta_bar = theta_t.iter().sum::<f64>() / visits as f64;
    EffectEstimates {
        theta_tk,
        theta_t,
        theta_bar,
        rank_diff,
    }
}
