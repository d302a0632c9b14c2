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

//! A nonparametric global test of treatment efficacy over multiple
//! longitudinal endpoints in two-arm trials.
//!
//! The pipeline is
//!
//! 1. [`TrialDataset`]: complete-case, favorable-oriented changes from baseline,
//! 2. [`build_rank_tables`] and [`estimate_effects`]: per-cell midranks and
//!    relative treatment effects,
//! 3. [`estimate_covariance`]: the plug-in covariance of the rank-difference
//!    vector,
//! 4. [`lrst`]: the standardized weighted rank difference and its one-sided
//!    p-value.
//!
//! [`sim`] generates synthetic trials for Type I error and power studies.
//!
//! ```
//! use lrst::{lrst, Panel, TrialDataset, WeightVector};
//!
//! let control = Panel::from_vec(3, 2, 1, vec![0.1, 0.3, -0.4, 0.0, 0.2, 0.1])?;
//! let treatment = Panel::from_vec(3, 2, 1, vec![0.5, 0.9, 0.2, 0.6, 1.1, 0.7])?;
//! let data = TrialDataset::new(control, treatment, vec![13.0, 26.0], vec!["score".into()])?;
//! let result = lrst(&data, &WeightVector::equal(2))?;
//! assert!(result.z > 0.0);
//! # Ok::<(), lrst::Error>(())
//! ```

pub mod covariance;
pub mod data;
mod error;
pub mod inference;
pub mod oracle;
pub mod ranks;
pub mod report;
pub mod sim;

pub use covariance::{
    assemble_sigma, c_hat_block, d_hat_block, estimate_covariance, placement_matrices, BlockGrid,
    CorrelationSources, CovarianceEstimate,
};
pub use data::{
    changes_from_baseline, parse_long_csv, read_long_csv, CsvOptions, CsvSchema, Direction,
    DirectionMap, Ingest, Panel, TrialDataset,
};
pub use error::{Error, Result};
pub use inference::{
    analyze, lrst, lrst_last_visit, normal_upper_tail, permutation_null, Analysis, PermutationNull,
    TestResult, WeightVector,
};
pub use ranks::{build_rank_tables, estimate_effects, midranks, EffectEstimates, RankTables};
pub use report::TestReport;


// The guide in book/ is compiled here so its code listings run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/effects.md")]
    mod effects {}
    #[doc = include_str!("../../../book/src/covariance.md")]
    mod covariance {}
    #[doc = include_str!("../../../book/src/test.md")]
    mod test {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
