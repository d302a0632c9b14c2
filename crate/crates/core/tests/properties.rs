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

mod common;

use lrst::{
    analyze, read_long_csv, CsvOptions, CsvSchema, Direction, DirectionMap, TrialDataset,
    WeightVector,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{random_dataset, Values};

/// Midranks by counting, without sorting.
fn naive_midranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|v| {
            let below = values.iter().filter(|u| *u < v).count() as f64;
            let equal = values.iter().filter(|u| *u == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Equal-weight numerator as the grand mean of per-cell mean pooled-rank differences.
fn grand_mean_numerator(data: &TrialDataset) -> f64 {
    let (n_x, visits, outcomes) = (data.n_x(), data.n_visits(), data.n_outcomes());
    let mut total = 0.0;
    for t in 0..visits {
        for k in 0..outcomes {
            let pooled: Vec<f64> = data
                .control()
                .slice(t, k)
                .chain(data.treatment().slice(t, k))
                .collect();
            let ranks = naive_midranks(&pooled);
            let mean_x = ranks[..n_x].iter().sum::<f64>() / n_x as f64;
            let mean_y = ranks[n_x..].iter().sum::<f64>() / data.n_y() as f64;
            total += mean_y - mean_x;
        }
    }
    total / (visits * outcomes) as f64
}

fn csv_text(data: &TrialDataset) -> Vec<u8> {
    let mut buf = Vec::new();
    data.write_long_csv(&mut buf, &CsvSchema::default())
        .unwrap();
    buf
}

fn dataset_strategy() -> impl Strategy<Value = TrialDataset> {
    (
        2usize..12,
        2usize..12,
        1usize..5,
        1usize..4,
        any::<bool>(),
        any::<u64>(),
    )
        .prop_map(|(n_x, n_y, visits, outcomes, ties, seed)| {
            let values = if ties {
                Values::Ties(3)
            } else {
                Values::Normal
            };
            random_dataset(
                &mut ChaCha8Rng::seed_from_u64(seed),
                n_x,
                n_y,
                visits,
                outcomes,
                values,
            )
        })
}

proptest! {
    #[test]
    fn equal_weight_numerator_is_grand_mean_rank_difference(data in dataset_strategy()) {
        match analyze(&data, &WeightVector::equal(data.n_visits())) {
            Ok(a) => prop_assert!((a.result.numerator - grand_mean_numerator(&data)).abs() < 1e-10),
            Err(lrst::Error::NonPositiveVariance { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn long_csv_round_trip(data in dataset_strategy()) {
        let back = read_long_csv(csv_text(&data).as_slice(), &CsvOptions::default()).unwrap();
        prop_assert!(back.dropped_subjects.is_empty());
        prop_assert_eq!(back.dataset, data);
    }

    #[test]
    fn orientation_flip_cancels_a_sign_flip(data in dataset_strategy(), pick in any::<prop::sample::Index>()) {
        let flipped = pick.index(data.n_outcomes());
        let name = data.outcome_labels()[flipped].clone();
        let negated = TrialDataset::with_ids(
            data.control().map(|_, k, v| if k == flipped { -v } else { v }),
            data.treatment().map(|_, k, v| if k == flipped { -v } else { v }),
            data.visit_labels().to_vec(),
            data.outcome_labels().to_vec(),
            data.control_ids().to_vec(),
            data.treatment_ids().to_vec(),
        )
        .unwrap();
        let opts = CsvOptions {
            direction: DirectionMap::new().with(name, Direction::LowerIsBetter),
            ..CsvOptions::default()
        };
        let back = read_long_csv(csv_text(&negated).as_slice(), &opts).unwrap();
        prop_assert_eq!(&back.dataset, &data);
    }
}
