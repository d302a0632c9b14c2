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

//! Synthetic trials calibrated to an Alzheimer's placebo reference, and the
//! Type I error and power experiments built on them.

mod experiment;
mod model;

pub use experiment::{
    run_power_experiment, run_type1_experiment, scenario1_grid, scenario2_grid, two_to_three,
    MonteCarlo, PowerCell, PowerRow, PowerTable, Type1Row, Type1Table, WeightScheme,
};
pub use model::{
    discretize, simulate_trial, simulate_trial_with, Accrual, EffectSpec, OrdinalThresholds,
    OutcomeSpec, PlaceboModel, VarianceStructure, BAPI_302_ADAS_MEAN, BAPI_302_ADAS_SD,
    BAPI_302_DAD_MEAN, BAPI_302_DAD_SD, BAPI_302_DELTA, BAPI_302_WEEKS, DEFAULT_RHO_TIME,
};
