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

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing cells: {count} subject(s) lack at least one visit x outcome value ({}); enable drop-incomplete to exclude them", preview(.subjects))]
    MissingCell { count: usize, subjects: Vec<String> },

    #[error(
        "duplicate cell for subject {subject:?}, visit {visit}, outcome {outcome:?} (line {line})"
    )]
    DuplicateCell {
        subject: String,
        visit: String,
        outcome: String,
        line: u64,
    },

    #[error("unknown arm label {label:?} on line {line} (expected {control:?} or {treatment:?})")]
    UnknownArmLabel {
        label: String,
        line: u64,
        control: String,
        treatment: String,
    },

    #[error("subject {subject:?} appears in both arms (line {line})")]
    InconsistentArm { subject: String, line: u64 },

    #[error("non-finite value {value:?} at {context}")]
    NonFiniteValue { value: String, context: String },

    #[error("could not parse {field} value {value:?} on line {line}")]
    InvalidField {
        field: &'static str,
        value: String,
        line: u64,
    },

    #[error("missing column {0:?} in CSV header")]
    MissingColumn(String),

    #[error("degenerate design: need at least 2 subjects per arm, got n_x = {n_x}, n_y = {n_y}")]
    DegenerateDesign { n_x: usize, n_y: usize },

    #[error("baseline visit {0} not present in the data")]
    MissingBaseline(String),

    #[error("empty input")]
    EmptyInput,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("estimated variance of the weighted rank difference is not positive ({variance:e}); the test is undefined for these data")]
    NonPositiveVariance { variance: f64 },

    #[error("all {count} permutations were degenerate")]
    AllPermutationsDegenerate { count: usize },

    #[error("covariance of the simulation model is not positive definite")]
    NonPDCovariance,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn preview(subjects: &[String]) -> String {
    const SHOWN: usize = 10;
    let mut out = subjects
        .iter()
        .take(SHOWN)
        .map(String::as_str)
        .collect::<Vec<_>>()
        .join(", ");
    if subjects.len() > SHOWN {
        out.push_str(&format!(", ... ({} more)", subjects.len() - SHOWN));
    }
    out
}
