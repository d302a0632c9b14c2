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

//! The longitudinal rank-sum statistic and its weighted form.
//!
//! With weights `w` over visits and the rank-difference vector `R`,
//!
//! ```text
//! z = w'R / sqrt(N w' Sigma w)
//! ```
//!
//! is asymptotically standard normal when there is no overall effect.
//! Equal weights give the grand-mean form (treatment minus control mean
//! rank over every visit and outcome); the unit vector on the last visit
//! gives the cross-sectional final-visit test.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{estimate_covariance, CovarianceEstimate};
use crate::data::{Panel, TrialDataset};
use crate::error::{Error, Result};
use crate::ranks::{build_rank_tables, estimate_effects, EffectEstimates};

/// Nonnegative per-visit weights, stored normalized to sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("no weights given".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights(format!(
                "weights must be finite and nonnegative: {weights:?}"
            )));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidWeights(
                "at least one weight must be positive".into(),
            ));
        }
        Ok(Self(weights.into_iter().map(|w| w / total).collect()))
    }

    /// `J`: every visit counts the same.
    pub fn equal(visits: usize) -> Self {
        Self(vec![1.0 / visits as f64; visits])
    }

    /// `J_T`: only the final visit.
    pub fn last_visit(visits: usize) -> Self {
        let mut w = vec![0.0; visits];
        w[visits - 1] = 1.0;
        Self(w)
    }

    /// Parses `equal`, `last-visit`, or a comma-separated list.
    pub fn parse(spec: &str, visits: usize) -> Result<Self> {
        match spec.trim() {
            "equal" => Ok(Self::equal(visits)),
            "last-visit" | "last" => Ok(Self::last_visit(visits)),
            list => {
                let weights = list
                    .split(',')
                    .map(|w| {
                        w.trim().parse::<f64>().map_err(|_| {
                            Error::InvalidWeights(format!("cannot parse weight {w:?}"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                if weights.len() != visits {
                    return Err(Error::InvalidWeights(format!(
                        "{} weights for {visits} visits",
                        weights.len()
                    )));
                }
                Self::new(weights)
            }
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;

    fn try_from(weights: Vec<f64>) -> Result<Self> {
        Self::new(weights)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub z: f64,
    /// One-sided, upper tail.
    pub p_value: f64,
    /// `w'R` with normalized weights.
    pub numerator: f64,
    /// `N w' Sigma w`.
    pub variance: f64,
    pub theta_bar: f64,
    pub weights_used: WeightVector,
}

impl TestResult {
    /// `2 min(p, 1 - p)`.
    pub fn two_sided_p_value(&self) -> f64 {
        2.0 * self.p_value.min(1.0 - self.p_value)
    }
}

/// Every intermediate of one test, for reporting.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub effects: EffectEstimates,
    pub covariance: CovarianceEstimate,
    pub result: TestResult,
}

/// Upper-tail standard normal probability `1 - Phi(z)`.
pub fn normal_upper_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Variances at or below this multiple of `N` are roundoff, not signal.
const VARIANCE_FLOOR_PER_SUBJECT: f64 = 1e-20;

pub fn analyze(data: &TrialDataset, weights: &WeightVector) -> Result<Analysis> {
    if weights.len() != data.n_visits() {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} visits",
            weights.len(),
            data.n_visits()
        )));
    }
    let ranks = build_rank_tables(data);
    let effects = estimate_effects(&ranks, data);
    let covariance = estimate_covariance(data, &ranks, &effects);
    let w = weights.as_slice();
    let n = data.n_total() as f64;

    let numerator: f64 = w.iter().zip(&effects.rank_diff).map(|(w, r)| w * r).sum();
    let mut quad = 0.0;
    for a in 0..w.len() {
        for b in 0..w.len() {
            quad += w[a] * covariance.sigma[(a, b)] * w[b];
        }
    }
    let variance = n * quad;
    if variance.is_nan() || variance <= VARIANCE_FLOOR_PER_SUBJECT * n {
        return Err(Error::NonPositiveVariance { variance });
    }
    let z = numerator / variance.sqrt();
    let result = TestResult {
        z,
        p_value: normal_upper_tail(z),
        numerator,
        variance,
        theta_bar: effects.theta_bar,
        weights_used: weights.clone(),
    };
    Ok(Analysis {
        effects,
        covariance,
        result,
    })
}

pub fn lrst(data: &TrialDataset, weights: &WeightVector) -> Result<TestResult> {
    analyze(data, weights).map(|a| a.result)
}

/// The final-visit special case, `lrst` with weights `(0, .., 0, 1)`.
pub fn lrst_last_visit(data: &TrialDataset) -> Result<TestResult> {
    lrst(data, &WeightVector::last_visit(data.n_visits()))
}

/// Statistics recomputed over random subject-level re-assignments to arms.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationNull {
    /// One entry per non-degenerate permutation, in permutation order.
    pub z: Vec<f64>,
    /// Permutations whose variance estimate vanished.
    pub degenerate: usize,
}

impl PermutationNull {
    /// Fraction of permuted statistics at or above `observed`.
    pub fn p_value(&self, observed: f64) -> f64 {
        self.z.iter().filter(|&&z| z >= observed).count() as f64 / self.z.len() as f64
    }
}

/// Permutation reference distribution of `z`.
///
/// Each subject keeps its whole `T x K` profile. Permutation `r` shuffles
/// with its own ChaCha stream `(seed, r)`, so the output does not depend on
/// how rayon schedules the work.
pub fn permutation_null(
    data: &TrialDataset,
    weights: &WeightVector,
    n_perm: usize,
    seed: u64,
) -> Result<PermutationNull> {
    if n_perm < 100 {
        return Err(Error::InvalidArgument(format!(
            "need at least 100 permutations, got {n_perm}"
        )));
    }
    if weights.len() != data.n_visits() {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} visits",
            weights.len(),
            data.n_visits()
        )));
    }
    let nx = data.n_x();
    let n = data.n_total();
    let profiles: Vec<&[f64]> = (0..nx)
        .map(|i| data.control().subject(i))
        .chain((0..data.n_y()).map(|j| data.treatment().subject(j)))
        .collect();
    let (visits, outcomes) = (data.n_visits(), data.n_outcomes());

    let outcomes_z: Vec<Result<Option<f64>>> = (0..n_perm as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r);
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let arm = |ids: &[usize]| {
                let values = ids
                    .iter()
                    .flat_map(|&s| profiles[s].iter().copied())
                    .collect();
                Panel::from_vec(ids.len(), visits, outcomes, values)
            };
            let permuted = TrialDataset::new(
                arm(&order[..nx])?,
                arm(&order[nx..])?,
                data.visit_labels().to_vec(),
                data.outcome_labels().to_vec(),
            )?;
            match lrst(&permuted, weights) {
                Ok(res) => Ok(Some(res.z)),
                Err(Error::NonPositiveVariance { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut z = Vec::with_capacity(n_perm);
    let mut degenerate = 0;
    for o in outcomes_z {
        match o? {
            Some(v) => z.push(v),
            None => degenerate += 1,
        }
    }
    if z.is_empty() {
        return Err(Error::AllPermutationsDegenerate { count: degenerate });
    }
    if degenerate > 0 {
        log::info!("{degenerate} of {n_perm} permutations were degenerate and skipped");
    }
    Ok(PermutationNull { z, degenerate })
}
