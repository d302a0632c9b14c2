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

//! Shared helpers for integration tests: random datasets and direct-sum
//! reference computations written independently of the library internals.

#![allow(dead_code)]

use lrst::{Panel, TrialDataset};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// How values are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Values {
    Normal,
    /// Integers in `0..levels`, so ties are frequent.
    Ties(u32),
}

pub fn random_dataset<R: Rng>(
    rng: &mut R,
    n_x: usize,
    n_y: usize,
    visits: usize,
    outcomes: usize,
    values: Values,
) -> TrialDataset {
    let mut draw = |n: usize| {
        Panel::from_fn(n, visits, outcomes, |_, _, _| match values {
            Values::Normal => rng.sample::<f64, _>(StandardNormal),
            Values::Ties(levels) => rng.random_range(0..levels) as f64,
        })
    };
    let control = draw(n_x);
    let treatment = draw(n_y);
    TrialDataset::new(
        control,
        treatment,
        (1..=visits).map(|t| t as f64).collect(),
        (0..outcomes).map(|k| format!("y{k}")).collect(),
    )
    .expect("valid random dataset")
}

/// A dataset with random shape in the given ranges.
pub fn random_shape<R: Rng>(
    rng: &mut R,
    n: (usize, usize),
    t_max: usize,
    k_max: usize,
) -> TrialDataset {
    let n_x = rng.random_range(n.0..=n.1);
    let n_y = rng.random_range(n.0..=n.1);
    let visits = rng.random_range(1..=t_max);
    let outcomes = rng.random_range(1..=k_max);
    let values = match rng.random_range(0..3) {
        0 => Values::Normal,
        1 => Values::Ties(4),
        _ => Values::Ties(2),
    };
    random_dataset(rng, n_x, n_y, visits, outcomes, values)
}

/// `1[u > 0] + 1/2 * 1[u = 0]`.
pub fn count(u: f64) -> f64 {
    if u > 0.0 {
        1.0
    } else if u == 0.0 {
        0.5
    } else {
        0.0
    }
}

/// `theta_tk` by the pairwise definition.
pub fn theta_direct(data: &TrialDataset) -> DMatrix<f64> {
    let (n_x, n_y) = (data.n_x(), data.n_y());
    DMatrix::from_fn(data.n_visits(), data.n_outcomes(), |t, k| {
        let mut s = 0.0;
        for i in 0..n_x {
            for j in 0..n_y {
                let (x, y) = (data.control().get(i, t, k), data.treatment().get(j, t, k));
                s += f64::from(u8::from(x < y)) - f64::from(u8::from(x > y));
            }
        }
        s / (n_x * n_y) as f64
    })
}

/// Control-side covariance block between visits `t1` and `t2`, `K x K`.
pub fn c_direct(data: &TrialDataset, t1: usize, t2: usize) -> DMatrix<f64> {
    let (n_x, n_y, kk) = (data.n_x(), data.n_y(), data.n_outcomes());
    let theta = theta_direct(data);
    let centered = |i: usize, t: usize, k: usize| {
        let x = data.control().get(i, t, k);
        let above: f64 = (0..n_y)
            .map(|j| count(x - data.treatment().get(j, t, k)))
            .sum();
        above - n_y as f64 * (1.0 - theta[(t, k)]) / 2.0
    };
    DMatrix::from_fn(kk, kk, |k1, k2| {
        (0..n_x)
            .map(|i| centered(i, t1, k1) * centered(i, t2, k2))
            .sum::<f64>()
            / (n_x * n_y * n_y) as f64
    })
}

/// Treatment-side covariance block between visits `t1` and `t2`, `K x K`.
pub fn d_direct(data: &TrialDataset, t1: usize, t2: usize) -> DMatrix<f64> {
    let (n_x, n_y, kk) = (data.n_x(), data.n_y(), data.n_outcomes());
    let theta = theta_direct(data);
    let centered = |j: usize, t: usize, k: usize| {
        let y = data.treatment().get(j, t, k);
        let above: f64 = (0..n_x)
            .map(|i| count(y - data.control().get(i, t, k)))
            .sum();
        above - n_x as f64 * (1.0 + theta[(t, k)]) / 2.0
    };
    DMatrix::from_fn(kk, kk, |k1, k2| {
        (0..n_y)
            .map(|j| centered(j, t1, k1) * centered(j, t2, k2))
            .sum::<f64>()
            / (n_x * n_x * n_y) as f64
    })
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
