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

//! Two-arm longitudinal trial generator.
//!
//! A control subject's `T*K` profile of changes from baseline is
//! multivariate normal with the placebo means and standard deviations, and
//! a separable correlation
//!
//! ```text
//! corr((t1, k1), (t2, k2)) = rho_time^|t1 - t2| * (1 if k1 == k2 else rho_outcome)
//! ```
//!
//! on the favorable-oriented scale ([`VarianceStructure::Marginal`]), or the
//! same structure as a residual on top of a subject-level random intercept
//! per outcome ([`VarianceStructure::InterceptPlusAr1`]). Treatment subjects
//! get a mean shift of `accrual(t) * multiplier * delta_k` toward the
//! favorable direction.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Direction, Panel, TrialDataset};
use crate::error::{Error, Result};

/// Placebo-arm means and standard deviations per `(visit, outcome)`, raw scale.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaceboModel {
    visits: Vec<f64>,
    outcome_names: Vec<String>,
    directions: Vec<Direction>,
    mean: DMatrix<f64>,
    sd: DMatrix<f64>,
    rho_time: f64,
    rho_outcome: f64,
    structure: VarianceStructure,
    /// Lower Cholesky factor of the standardized `TK x TK` covariance, index `t*K + k`.
    chol: DMatrix<f64>,
}

/// How the placebo standard deviations enter the subject-level covariance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceStructure {
    /// The placebo SDs are the marginal SDs; time correlation `rho_time^|dt|`.
    #[default]
    Marginal,
    /// `sd * (b_k + e_tk)`: a random intercept `b` constant over visits plus an
    /// AR(1) residual `e`, each with unit variance and between-outcome
    /// correlation `rho_outcome`. Marginal SD is `sqrt(2) * sd`, lag-`d`
    /// correlation `(1 + rho_time^d) / 2`.
    InterceptPlusAr1,
}

impl VarianceStructure {
    fn time_factor(self, rho_time: f64, lag: usize) -> f64 {
        let ar = rho_time.powi(lag as i32);
        match self {
            VarianceStructure::Marginal => ar,
            VarianceStructure::InterceptPlusAr1 => 1.0 + ar,
        }
    }
}

/// Visit weeks of the 78-week placebo reference model.
pub const BAPI_302_WEEKS: [f64; 6] = [13.0, 26.0, 39.0, 52.0, 65.0, 78.0];
/// ADAS-cog11 mean change and SD (higher is worse).
pub const BAPI_302_ADAS_MEAN: [f64; 6] = [0.739, 1.322, 3.166, 4.607, 5.899, 7.457];
pub const BAPI_302_ADAS_SD: [f64; 6] = [4.799, 5.386, 6.510, 7.444, 8.084, 9.139];
/// DAD mean change and SD (higher is better).
pub const BAPI_302_DAD_MEAN: [f64; 6] = [-0.706, -4.065, -5.705, -8.249, -12.104, -13.941];
pub const BAPI_302_DAD_SD: [f64; 6] = [10.561, 13.057, 14.960, 15.662, 16.940, 18.080];
/// Final-visit advantages of the active arm: ADAS-cog11, DAD.
pub const BAPI_302_DELTA: [f64; 2] = [2.21, 5.38];

pub const DEFAULT_RHO_TIME: f64 = 0.6;

/// One outcome of a [`PlaceboModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSpec {
    pub name: String,
    pub direction: Direction,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl PlaceboModel {
    pub fn new(
        visits: Vec<f64>,
        outcomes: Vec<OutcomeSpec>,
        rho_time: f64,
        rho_outcome: f64,
    ) -> Result<Self> {
        let t = visits.len();
        let k = outcomes.len();
        if t == 0 || k == 0 {
            return Err(Error::InvalidModel(
                "need at least one visit and one outcome".into(),
            ));
        }
        if !visits.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidModel(
                "visits must be strictly increasing".into(),
            ));
        }
        for o in &outcomes {
            if o.mean.len() != t || o.sd.len() != t {
                return Err(Error::InvalidModel(format!(
                    "outcome {:?} needs {t} means and sds",
                    o.name
                )));
            }
            if o.mean.iter().any(|m| !m.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "non-finite mean for {:?}",
                    o.name
                )));
            }
            if o.sd.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                return Err(Error::InvalidModel(format!(
                    "standard deviations of {:?} must be positive",
                    o.name
                )));
            }
        }
        if !(0.0..1.0).contains(&rho_time) {
            return Err(Error::InvalidModel(format!(
                "rho_time {rho_time} not in [0, 1)"
            )));
        }
        if !(-1.0..=1.0).contains(&rho_outcome) {
            return Err(Error::InvalidModel(format!(
                "rho_outcome {rho_outcome} not in [-1, 1]"
            )));
        }
        let chol = Self::factor(t, k, rho_time, rho_outcome, VarianceStructure::Marginal)?;
        Ok(Self {
            mean: DMatrix::from_fn(t, k, |a, b| outcomes[b].mean[a]),
            sd: DMatrix::from_fn(t, k, |a, b| outcomes[b].sd[a]),
            outcome_names: outcomes.iter().map(|o| o.name.clone()).collect(),
            directions: outcomes.iter().map(|o| o.direction).collect(),
            visits,
            rho_time,
            rho_outcome,
            structure: VarianceStructure::Marginal,
            chol,
        })
    }

    fn factor(
        t: usize,
        k: usize,
        rho_time: f64,
        rho_outcome: f64,
        structure: VarianceStructure,
    ) -> Result<DMatrix<f64>> {
        let cov = DMatrix::from_fn(t * k, t * k, |a, b| {
            standardized_cov(structure, rho_time, rho_outcome, a / k, a % k, b / k, b % k)
        });
        let chol = cov.cholesky().ok_or(Error::NonPDCovariance)?.unpack();
        // Cholesky succeeds on some singular inputs; require a usable pivot.
        if chol.diagonal().iter().any(|d| d.is_nan() || *d <= 1e-8) {
            return Err(Error::NonPDCovariance);
        }
        Ok(chol)
    }

    pub fn with_structure(mut self, structure: VarianceStructure) -> Result<Self> {
        self.chol = Self::factor(
            self.n_visits(),
            self.n_outcomes(),
            self.rho_time,
            self.rho_outcome,
            structure,
        )?;
        self.structure = structure;
        Ok(self)
    }

    pub fn structure(&self) -> VarianceStructure {
        self.structure
    }

    /// The 78-week Alzheimer's placebo reference: ADAS-cog11 and DAD over six visits.
    pub fn bapineuzumab_302(rho_time: f64, rho_outcome: f64) -> Result<Self> {
        Self::new(
            BAPI_302_WEEKS.to_vec(),
            vec![
                OutcomeSpec {
                    name: "ADAS-cog11".into(),
                    direction: Direction::LowerIsBetter,
                    mean: BAPI_302_ADAS_MEAN.to_vec(),
                    sd: BAPI_302_ADAS_SD.to_vec(),
                },
                OutcomeSpec {
                    name: "DAD".into(),
                    direction: Direction::HigherIsBetter,
                    mean: BAPI_302_DAD_MEAN.to_vec(),
                    sd: BAPI_302_DAD_SD.to_vec(),
                },
            ],
            rho_time,
            rho_outcome,
        )
    }

    /// Same margins and time correlation, different between-outcome correlation.
    pub fn with_rho_outcome(&self, rho_outcome: f64) -> Result<Self> {
        Self::new(
            self.visits.clone(),
            self.outcomes(),
            self.rho_time,
            rho_outcome,
        )?
        .with_structure(self.structure)
    }

    pub fn outcomes(&self) -> Vec<OutcomeSpec> {
        (0..self.n_outcomes())
            .map(|k| OutcomeSpec {
                name: self.outcome_names[k].clone(),
                direction: self.directions[k],
                mean: self.mean.column(k).iter().copied().collect(),
                sd: self.sd.column(k).iter().copied().collect(),
            })
            .collect()
    }

    pub fn n_visits(&self) -> usize {
        self.visits.len()
    }

    pub fn n_outcomes(&self) -> usize {
        self.outcome_names.len()
    }

    pub fn visits(&self) -> &[f64] {
        &self.visits
    }

    pub fn outcome_names(&self) -> &[String] {
        &self.outcome_names
    }

    pub fn rho_time(&self) -> f64 {
        self.rho_time
    }

    pub fn rho_outcome(&self) -> f64 {
        self.rho_outcome
    }

    /// Raw-scale mean change at `(visit, outcome)`.
    pub fn mean(&self, t: usize, k: usize) -> f64 {
        self.mean[(t, k)]
    }

    pub fn sd(&self, t: usize, k: usize) -> f64 {
        self.sd[(t, k)]
    }

    /// Mean on the favorable-oriented scale.
    pub fn oriented_mean(&self, t: usize, k: usize) -> f64 {
        self.directions[k].sign() * self.mean[(t, k)]
    }

    /// Covariance of profile entries `(t1, k1)` and `(t2, k2)` in units of
    /// the placebo SDs.
    pub fn standardized_covariance(&self, t1: usize, k1: usize, t2: usize, k2: usize) -> f64 {
        standardized_cov(
            self.structure,
            self.rho_time,
            self.rho_outcome,
            t1,
            k1,
            t2,
            k2,
        )
    }
}

fn standardized_cov(
    structure: VarianceStructure,
    rho_time: f64,
    rho_outcome: f64,
    t1: usize,
    k1: usize,
    t2: usize,
    k2: usize,
) -> f64 {
    let time = structure.time_factor(rho_time, t1.abs_diff(t2));
    if k1 == k2 {
        time
    } else {
        time * rho_outcome
    }
}

/// Fraction of the final-visit advantage realized at each visit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Accrual {
    /// `(t + 1) / T` at visit index `t`.
    Linear,
    /// The full advantage at every visit.
    Constant,
    /// Explicit per-visit fractions, nondecreasing and ending at 1.
    Schedule(Vec<f64>),
}

impl Accrual {
    pub fn fraction(&self, t: usize, visits: usize) -> f64 {
        match self {
            Accrual::Linear => (t + 1) as f64 / visits as f64,
            Accrual::Constant => 1.0,
            Accrual::Schedule(s) => s[t],
        }
    }

    fn validate(&self, visits: usize) -> Result<()> {
        if let Accrual::Schedule(s) = self {
            if s.len() != visits {
                return Err(Error::InvalidModel(format!(
                    "accrual schedule has {} entries for {visits} visits",
                    s.len()
                )));
            }
            if s.iter().any(|f| !f.is_finite() || *f < 0.0)
                || !s.windows(2).all(|w| w[0] <= w[1])
                || s.last() != Some(&1.0)
            {
                return Err(Error::InvalidModel(
                    "accrual schedule must be nonnegative, nondecreasing, and end at 1".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Treatment advantage over placebo, in favorable units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectSpec {
    /// Final-visit advantage per outcome.
    pub delta: Vec<f64>,
    pub accrual: Accrual,
    pub multiplier: f64,
}

impl EffectSpec {
    pub fn none(outcomes: usize) -> Self {
        Self {
            delta: vec![0.0; outcomes],
            accrual: Accrual::Linear,
            multiplier: 0.0,
        }
    }

    /// The reference design: 2.21 ADAS-cog11 and 5.38 DAD units at week 78.
    pub fn bapineuzumab_302() -> Self {
        Self {
            delta: BAPI_302_DELTA.to_vec(),
            accrual: Accrual::Linear,
            multiplier: 1.0,
        }
    }

    pub fn scaled(&self, multiplier: f64) -> Self {
        Self {
            multiplier,
            ..self.clone()
        }
    }

    /// Mean shift of a treatment subject at `(t, k)`.
    pub fn shift(&self, t: usize, k: usize, visits: usize) -> f64 {
        self.accrual.fraction(t, visits) * self.multiplier * self.delta[k]
    }

    pub fn validate(&self, model: &PlaceboModel) -> Result<()> {
        if self.delta.len() != model.n_outcomes() {
            return Err(Error::InvalidModel(format!(
                "effect has {} deltas for {} outcomes",
                self.delta.len(),
                model.n_outcomes()
            )));
        }
        if self.delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidModel("effect deltas must be finite".into()));
        }
        if !(self.multiplier.is_finite() && self.multiplier >= 0.0) {
            return Err(Error::InvalidModel("effect multiplier must be >= 0".into()));
        }
        self.accrual.validate(model.n_visits())
    }
}

/// Simulates one trial with its own ChaCha stream.
pub fn simulate_trial(
    model: &PlaceboModel,
    effect: &EffectSpec,
    n_x: usize,
    n_y: usize,
    seed: u64,
) -> Result<TrialDataset> {
    simulate_trial_with(
        model,
        effect,
        n_x,
        n_y,
        &mut ChaCha8Rng::seed_from_u64(seed),
    )
}

pub fn simulate_trial_with<R: Rng + ?Sized>(
    model: &PlaceboModel,
    effect: &EffectSpec,
    n_x: usize,
    n_y: usize,
    rng: &mut R,
) -> Result<TrialDataset> {
    effect.validate(model)?;
    let (t, k) = (model.n_visits(), model.n_outcomes());
    let width = t * k;
    let control_mean: Vec<f64> = (0..width)
        .map(|a| model.oriented_mean(a / k, a % k))
        .collect();
    let treatment_mean: Vec<f64> = (0..width)
        .map(|a| control_mean[a] + effect.shift(a / k, a % k, t))
        .collect();
    let sd: Vec<f64> = (0..width).map(|a| model.sd(a / k, a % k)).collect();

    let mut draw = |n: usize, mean: &[f64]| {
        let mut values = Vec::with_capacity(n * width);
        let mut z = vec![0.0; width];
        for _ in 0..n {
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            for a in 0..width {
                let v: f64 = z[..=a]
                    .iter()
                    .enumerate()
                    .map(|(b, zb)| model.chol[(a, b)] * zb)
                    .sum();
                values.push(mean[a] + sd[a] * v);
            }
        }
        Panel::from_vec(n, t, k, values)
    };
    let control = draw(n_x, &control_mean)?;
    let treatment = draw(n_y, &treatment_mean)?;
    TrialDataset::new(
        control,
        treatment,
        model.visits.clone(),
        model.outcome_names.clone(),
    )
}

/// Cut points `(mu - 3 sd, mu - sd, mu + sd, mu + 3 sd)` per `(visit, outcome)`.
///
/// Cuts live on the oriented scale so they apply to simulated datasets
/// directly, and come from the placebo model for both arms.
#[derive(Debug, Clone, PartialEq)]
pub struct OrdinalThresholds {
    visits: usize,
    outcomes: usize,
    cuts: Vec<[f64; 4]>,
}

impl OrdinalThresholds {
    pub fn from_model(model: &PlaceboModel) -> Self {
        let (visits, outcomes) = (model.n_visits(), model.n_outcomes());
        let mut cuts = Vec::with_capacity(visits * outcomes);
        for t in 0..visits {
            for k in 0..outcomes {
                let (mu, s) = (model.oriented_mean(t, k), model.sd(t, k));
                cuts.push([mu - 3.0 * s, mu - s, mu + s, mu + 3.0 * s]);
            }
        }
        Self {
            visits,
            outcomes,
            cuts,
        }
    }

    pub fn new(visits: usize, outcomes: usize, cuts: Vec<[f64; 4]>) -> Result<Self> {
        if cuts.len() != visits * outcomes {
            return Err(Error::DimensionMismatch(format!(
                "{} cut sets for a {visits}x{outcomes} grid",
                cuts.len()
            )));
        }
        if cuts.iter().any(|c| !c.windows(2).all(|w| w[0] < w[1])) {
            return Err(Error::InvalidModel(
                "cut points must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            visits,
            outcomes,
            cuts,
        })
    }

    pub fn cuts(&self, t: usize, k: usize) -> [f64; 4] {
        self.cuts[t * self.outcomes + k]
    }

    /// Category in `0..=4`; a value on a cut point goes to the upper category.
    pub fn category(&self, t: usize, k: usize, value: f64) -> f64 {
        self.cuts(t, k).iter().filter(|&&c| value >= c).count() as f64
    }
}

/// Replaces each value by its ordinal category.
pub fn discretize(data: &TrialDataset, thresholds: &OrdinalThresholds) -> Result<TrialDataset> {
    if thresholds.visits != data.n_visits() || thresholds.outcomes != data.n_outcomes() {
        return Err(Error::DimensionMismatch(format!(
            "thresholds for {}x{} applied to {}x{} data",
            thresholds.visits,
            thresholds.outcomes,
            data.n_visits(),
            data.n_outcomes()
        )));
    }
    let cut = |p: &Panel| p.map(|t, k, v| thresholds.category(t, k, v));
    TrialDataset::with_ids(
        cut(data.control()),
        cut(data.treatment()),
        data.visit_labels().to_vec(),
        data.outcome_labels().to_vec(),
        data.control_ids().to_vec(),
        data.treatment_ids().to_vec(),
    )
}
