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

//! JSON result record of one analysis.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::covariance::CorrelationSources;
use crate::data::TrialDataset;
use crate::inference::Analysis;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub z: f64,
    pub p_value: f64,
    /// Only when requested; `2 min(p, 1 - p)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value_two_sided: Option<f64>,
    pub numerator: f64,
    pub variance: f64,
    pub theta_bar: f64,
    pub theta_t: Vec<f64>,
    pub theta_tk: Vec<Vec<f64>>,
    pub rank_diff: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub n_x: usize,
    pub n_y: usize,
    #[serde(rename = "T")]
    pub n_visits: usize,
    #[serde(rename = "K")]
    pub n_outcomes: usize,
    pub visits: Vec<f64>,
    pub outcomes: Vec<String>,
    pub covariance: CovarianceReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceReport {
    pub lambda: f64,
    pub sources: CorrelationSources,
    /// `N w' S w` for each source matrix `S`; these add up to `variance`.
    pub weighted_contributions: SourceTotals,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceTotals {
    pub variance: f64,
    pub intra_source: f64,
    pub inter_source: f64,
    pub cross: f64,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl TestReport {
    pub fn new(data: &TrialDataset, analysis: &Analysis, two_sided: bool) -> Self {
        let res = &analysis.result;
        let cov = &analysis.covariance;
        let w = res.weights_used.as_slice();
        let n = data.n_total() as f64;
        let [v, intra, inter, cross] = cov.sources.quadratic_forms(w).map(|q| n * q);
        Self {
            z: res.z,
            p_value: res.p_value,
            p_value_two_sided: two_sided.then(|| res.two_sided_p_value()),
            numerator: res.numerator,
            variance: res.variance,
            theta_bar: res.theta_bar,
            theta_t: analysis.effects.theta_t.clone(),
            theta_tk: rows(&analysis.effects.theta_tk),
            rank_diff: analysis.effects.rank_diff.clone(),
            sigma: rows(&cov.sigma),
            weights: w.to_vec(),
            n_x: data.n_x(),
            n_y: data.n_y(),
            n_visits: data.n_visits(),
            n_outcomes: data.n_outcomes(),
            visits: data.visit_labels().to_vec(),
            outcomes: data.outcome_labels().to_vec(),
            covariance: CovarianceReport {
                lambda: cov.lambda,
                sources: cov.sources.clone(),
                weighted_contributions: SourceTotals {
                    variance: v,
                    intra_source: intra,
                    inter_source: inter,
                    cross,
                },
            },
        }
    }
}
