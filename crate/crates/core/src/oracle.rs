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

//! Direct `O(n_x * n_y)` evaluations used to check the rank-based paths.
//!
//! Nothing here touches ranks. Every quantity is a double sum of pairwise
//! comparisons, with ties counted as one half: `c(u) = 1[u > 0] + 1[u = 0] / 2`.

use nalgebra::DMatrix;

use crate::data::TrialDataset;
use crate::ranks::EffectEstimates;

/// `c(a - b)`: 1 if `a > b`, 1/2 if equal, 0 otherwise.
fn count(a: f64, b: f64) -> f64 {
    if a > b {
        1.0
    } else if a == b {
        0.5
    } else {
        0.0
    }
}

/// `theta_tk = (1/(n_x n_y)) sum_i sum_j [1(x_itk < y_jtk) - 1(x_itk > y_jtk)]`.
pub fn theta_oracle(data: &TrialDataset) -> EffectEstimates {
    let (x, y) = (data.control(), data.treatment());
    let pairs = (data.n_x() * data.n_y()) as f64;
    let theta = DMatrix::from_fn(data.n_visits(), data.n_outcomes(), |t, k| {
        let mut s = 0.0;
        for i in 0..data.n_x() {
            for j in 0..data.n_y() {
                let (a, b) = (x.get(i, t, k), y.get(j, t, k));
                s += (a < b) as i32 as f64 - (a > b) as i32 as f64;
            }
        }
        s / pairs
    });
    EffectEstimates::from_theta(theta, data.n_total())
}

/// Direct evaluation of `c_hat_{t1 k1, t2 k2}` for all `k1, k2`.
pub fn c_hat_oracle(data: &TrialDataset, t1: usize, t2: usize) -> DMatrix<f64> {
    let theta = theta_oracle(data).theta_tk;
    let (x, y) = (data.control(), data.treatment());
    let (nx, ny) = (data.n_x(), data.n_y());
    let centered = |i: usize, t: usize, k: usize| {
        let below: f64 = (0..ny).map(|j| count(x.get(i, t, k), y.get(j, t, k))).sum();
        below / ny as f64 - (1.0 - theta[(t, k)]) / 2.0
    };
    DMatrix::from_fn(data.n_outcomes(), data.n_outcomes(), |k1, k2| {
        (0..nx)
            .map(|i| centered(i, t1, k1) * centered(i, t2, k2))
            .sum::<f64>()
            / nx as f64
    })
}

/// Direct evaluation of `d_hat_{t1 k1, t2 k2}` for all `k1, k2`.
pub fn d_hat_oracle(data: &TrialDataset, t1: usize, t2: usize) -> DMatrix<f64> {
    let theta = theta_oracle(data).theta_tk;
    let (x, y) = (data.control(), data.treatment());
    let (nx, ny) = (data.n_x(), data.n_y());
    let centered = |j: usize, t: usize, k: usize| {
        let below: f64 = (0..nx).map(|i| count(y.get(j, t, k), x.get(i, t, k))).sum();
        below / nx as f64 - (1.0 + theta[(t, k)]) / 2.0
    };
    DMatrix::from_fn(data.n_outcomes(), data.n_outcomes(), |k1, k2| {
        (0..ny)
            .map(|j| centered(j, t1, k1) * centered(j, t2, k2))
            .sum::<f64>()
            / ny as f64
    })
}
