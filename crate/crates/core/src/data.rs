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

//! Trial datasets: the complete-case two-arm panel every other module reads.
//!
//! Values are stored as changes from baseline, already oriented so that a
//! larger value is clinically favorable. Orientation happens exactly once,
//! when a dataset is built from raw input.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense `subjects x visits x outcomes` array of one arm.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    n_subjects: usize,
    n_visits: usize,
    n_outcomes: usize,
    values: Vec<f64>,
}

impl Panel {
    /// Wraps row-major values indexed `(subject, visit, outcome)`.
    pub fn from_vec(
        n_subjects: usize,
        n_visits: usize,
        n_outcomes: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != n_subjects * n_visits * n_outcomes {
            return Err(Error::DimensionMismatch(format!(
                "panel of {n_subjects}x{n_visits}x{n_outcomes} needs {} values, got {}",
                n_subjects * n_visits * n_outcomes,
                values.len()
            )));
        }
        Ok(Self {
            n_subjects,
            n_visits,
            n_outcomes,
            values,
        })
    }

    pub fn from_fn(
        n_subjects: usize,
        n_visits: usize,
        n_outcomes: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut values = Vec::with_capacity(n_subjects * n_visits * n_outcomes);
        for i in 0..n_subjects {
            for t in 0..n_visits {
                for k in 0..n_outcomes {
                    values.push(f(i, t, k));
                }
            }
        }
        Self {
            n_subjects,
            n_visits,
            n_outcomes,
            values,
        }
    }

    pub fn n_subjects(&self) -> usize {
        self.n_subjects
    }

    pub fn n_visits(&self) -> usize {
        self.n_visits
    }

    pub fn n_outcomes(&self) -> usize {
        self.n_outcomes
    }

    #[inline]
    fn offset(&self, subject: usize, visit: usize, outcome: usize) -> usize {
        debug_assert!(
            subject < self.n_subjects && visit < self.n_visits && outcome < self.n_outcomes
        );
        (subject * self.n_visits + visit) * self.n_outcomes + outcome
    }

    #[inline]
    pub fn get(&self, subject: usize, visit: usize, outcome: usize) -> f64 {
        self.values[self.offset(subject, visit, outcome)]
    }

    #[inline]
    pub fn set(&mut self, subject: usize, visit: usize, outcome: usize, value: f64) {
        let at = self.offset(subject, visit, outcome);
        self.values[at] = value;
    }

    /// Row-major values, `(subject, visit, outcome)` with outcome fastest.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// The `T*K` profile of one subject.
    pub fn subject(&self, subject: usize) -> &[f64] {
        let width = self.n_visits * self.n_outcomes;
        &self.values[subject * width..(subject + 1) * width]
    }

    /// Values of every subject at one `(visit, outcome)` cell.
    pub fn slice(&self, visit: usize, outcome: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_subjects).map(move |i| self.get(i, visit, outcome))
    }

    /// Builds a panel from selected subjects of `self`, in the given order.
    pub fn select_subjects(&self, subjects: &[usize]) -> Panel {
        let width = self.n_visits * self.n_outcomes;
        let mut values = Vec::with_capacity(subjects.len() * width);
        for &i in subjects {
            values.extend_from_slice(self.subject(i));
        }
        Panel {
            n_subjects: subjects.len(),
            n_visits: self.n_visits,
            n_outcomes: self.n_outcomes,
            values,
        }
    }

    pub fn select_visits(&self, visits: &[usize]) -> Panel {
        Panel::from_fn(self.n_subjects, visits.len(), self.n_outcomes, |i, t, k| {
            self.get(i, visits[t], k)
        })
    }

    pub fn map(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Panel {
        Panel::from_fn(
            self.n_subjects,
            self.n_visits,
            self.n_outcomes,
            |i, t, k| f(t, k, self.get(i, t, k)),
        )
    }
}

/// Orientation of one outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Larger raw values are favorable (sign `+1`).
    HigherIsBetter,
    /// Smaller raw values are favorable (sign `-1`).
    LowerIsBetter,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::HigherIsBetter => 1.0,
            Direction::LowerIsBetter => -1.0,
        }
    }

    pub fn from_sign(sign: i32) -> Option<Self> {
        match sign {
            1 => Some(Direction::HigherIsBetter),
            -1 => Some(Direction::LowerIsBetter),
            _ => None,
        }
    }
}

/// Per-outcome orientation. Outcomes without an entry keep their raw sign.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DirectionMap {
    entries: BTreeMap<String, Direction>,
}

impl DirectionMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, outcome: impl Into<String>, direction: Direction) -> Self {
        self.entries.insert(outcome.into(), direction);
        self
    }

    pub fn insert(&mut self, outcome: impl Into<String>, direction: Direction) {
        self.entries.insert(outcome.into(), direction);
    }

    /// Parses `name=+1,other=-1`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut map = DirectionMap::new();
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, sign) = item.rsplit_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("direction entry {item:?} is not outcome=+1|-1"))
            })?;
            let direction = sign
                .trim()
                .parse::<i32>()
                .ok()
                .and_then(Direction::from_sign)
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("direction for {name:?} must be +1 or -1"))
                })?;
            map.insert(name.trim(), direction);
        }
        Ok(map)
    }

    pub fn get(&self, outcome: &str) -> Direction {
        self.entries
            .get(outcome)
            .copied()
            .unwrap_or(Direction::HigherIsBetter)
    }

    /// Signs aligned with `outcomes`; every named entry must be one of them.
    pub fn resolve(&self, outcomes: &[String]) -> Result<Vec<f64>> {
        if let Some(unknown) = self.entries.keys().find(|name| !outcomes.contains(name)) {
            return Err(Error::InvalidArgument(format!(
                "direction given for unknown outcome {unknown:?}"
            )));
        }
        Ok(outcomes.iter().map(|o| self.get(o).sign()).collect())
    }
}

/// Complete-case two-arm panel of oriented change-from-baseline values.
///
/// Arm `x` is control, arm `y` is treatment.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialDataset {
    control: Panel,
    treatment: Panel,
    visit_labels: Vec<f64>,
    outcome_labels: Vec<String>,
    control_ids: Vec<String>,
    treatment_ids: Vec<String>,
}

impl TrialDataset {
    /// Builds a dataset from already-oriented panels, with generated subject ids.
    pub fn new(
        control: Panel,
        treatment: Panel,
        visit_labels: Vec<f64>,
        outcome_labels: Vec<String>,
    ) -> Result<Self> {
        let control_ids = (1..=control.n_subjects())
            .map(|i| format!("x{i}"))
            .collect();
        let treatment_ids = (1..=treatment.n_subjects())
            .map(|j| format!("y{j}"))
            .collect();
        Self::with_ids(
            control,
            treatment,
            visit_labels,
            outcome_labels,
            control_ids,
            treatment_ids,
        )
    }

    pub fn with_ids(
        control: Panel,
        treatment: Panel,
        visit_labels: Vec<f64>,
        outcome_labels: Vec<String>,
        control_ids: Vec<String>,
        treatment_ids: Vec<String>,
    ) -> Result<Self> {
        let (t, k) = (control.n_visits(), control.n_outcomes());
        if treatment.n_visits() != t || treatment.n_outcomes() != k {
            return Err(Error::DimensionMismatch(format!(
                "control is {}x{t}x{k} but treatment is {}x{}x{}",
                control.n_subjects(),
                treatment.n_subjects(),
                treatment.n_visits(),
                treatment.n_outcomes()
            )));
        }
        if t == 0 || k == 0 {
            return Err(Error::EmptyInput);
        }
        if visit_labels.len() != t || outcome_labels.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "{} visit labels and {} outcome labels for a {t}x{k} grid",
                visit_labels.len(),
                outcome_labels.len()
            )));
        }
        if !visit_labels.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(
                "visit labels must be strictly increasing".into(),
            ));
        }
        if control_ids.len() != control.n_subjects()
            || treatment_ids.len() != treatment.n_subjects()
        {
            return Err(Error::DimensionMismatch("subject id count".into()));
        }
        if control.n_subjects() < 2 || treatment.n_subjects() < 2 {
            return Err(Error::DegenerateDesign {
                n_x: control.n_subjects(),
                n_y: treatment.n_subjects(),
            });
        }
        for (arm, ids, panel) in [
            ("control", &control_ids, &control),
            ("treatment", &treatment_ids, &treatment),
        ] {
            if let Some(pos) = panel.as_slice().iter().position(|v| !v.is_finite()) {
                let width = t * k;
                let (i, rest) = (pos / width, pos % width);
                return Err(Error::NonFiniteValue {
                    value: panel.as_slice()[pos].to_string(),
                    context: format!(
                        "{arm} subject {:?}, visit {}, outcome {:?}",
                        ids[i],
                        visit_labels[rest / k],
                        outcome_labels[rest % k]
                    ),
                });
            }
        }
        Ok(Self {
            control,
            treatment,
            visit_labels,
            outcome_labels,
            control_ids,
            treatment_ids,
        })
    }

    /// Control arm (`x`).
    pub fn control(&self) -> &Panel {
        &self.control
    }

    /// Treatment arm (`y`).
    pub fn treatment(&self) -> &Panel {
        &self.treatment
    }

    pub fn n_x(&self) -> usize {
        self.control.n_subjects()
    }

    pub fn n_y(&self) -> usize {
        self.treatment.n_subjects()
    }

    pub fn n_total(&self) -> usize {
        self.n_x() + self.n_y()
    }

    pub fn n_visits(&self) -> usize {
        self.control.n_visits()
    }

    pub fn n_outcomes(&self) -> usize {
        self.control.n_outcomes()
    }

    /// `n_x / n_y`.
    pub fn lambda(&self) -> f64 {
        self.n_x() as f64 / self.n_y() as f64
    }

    pub fn visit_labels(&self) -> &[f64] {
        &self.visit_labels
    }

    pub fn outcome_labels(&self) -> &[String] {
        &self.outcome_labels
    }

    pub fn control_ids(&self) -> &[String] {
        &self.control_ids
    }

    pub fn treatment_ids(&self) -> &[String] {
        &self.treatment_ids
    }

    /// The same data with the arm labels exchanged.
    pub fn swap_arms(&self) -> TrialDataset {
        TrialDataset {
            control: self.treatment.clone(),
            treatment: self.control.clone(),
            visit_labels: self.visit_labels.clone(),
            outcome_labels: self.outcome_labels.clone(),
            control_ids: self.treatment_ids.clone(),
            treatment_ids: self.control_ids.clone(),
        }
    }

    /// Keeps only the listed visits (by index, must be increasing).
    pub fn select_visits(&self, visits: &[usize]) -> Result<TrialDataset> {
        if visits.is_empty() || visits.iter().any(|&t| t >= self.n_visits()) {
            return Err(Error::InvalidArgument(format!(
                "visit selection {visits:?} out of range for {} visits",
                self.n_visits()
            )));
        }
        TrialDataset::with_ids(
            self.control.select_visits(visits),
            self.treatment.select_visits(visits),
            visits.iter().map(|&t| self.visit_labels[t]).collect(),
            self.outcome_labels.clone(),
            self.control_ids.clone(),
            self.treatment_ids.clone(),
        )
    }

    /// The dataset restricted to its final visit.
    pub fn final_visit_only(&self) -> TrialDataset {
        self.select_visits(&[self.n_visits() - 1])
            .expect("final visit is always in range")
    }

    /// Writes the dataset in long format (`subject,arm,visit,outcome,value`).
    pub fn write_long_csv<W: Write>(&self, writer: W, schema: &CsvSchema) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record([
            &schema.subject,
            &schema.arm,
            &schema.visit,
            &schema.outcome,
            &schema.value,
        ])?;
        for (label, ids, panel) in [
            (&schema.control_label, &self.control_ids, &self.control),
            (
                &schema.treatment_label,
                &self.treatment_ids,
                &self.treatment,
            ),
        ] {
            for (i, id) in ids.iter().enumerate() {
                for (t, visit) in self.visit_labels.iter().enumerate() {
                    for (k, outcome) in self.outcome_labels.iter().enumerate() {
                        out.write_record([
                            id.as_str(),
                            label.as_str(),
                            &visit.to_string(),
                            outcome.as_str(),
                            &panel.get(i, t, k).to_string(),
                        ])?;
                    }
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Column names and arm labels of a long-format CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub subject: String,
    pub arm: String,
    pub visit: String,
    pub outcome: String,
    pub value: String,
    pub control_label: String,
    pub treatment_label: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            subject: "subject".into(),
            arm: "arm".into(),
            visit: "visit".into(),
            outcome: "outcome".into(),
            value: "value".into(),
            control_label: "control".into(),
            treatment_label: "treatment".into(),
        }
    }
}

impl CsvSchema {
    /// Applies `key=value` overrides, e.g. `subject=pid,visit=week,control=placebo`.
    pub fn parse_overrides(mut self, spec: &str) -> Result<Self> {
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("schema entry {item:?} is not key=column"))
            })?;
            let value = value.trim().to_string();
            match key.trim() {
                "subject" => self.subject = value,
                "arm" => self.arm = value,
                "visit" => self.visit = value,
                "outcome" => self.outcome = value,
                "value" => self.value = value,
                "control" => self.control_label = value,
                "treatment" => self.treatment_label = value,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "unknown schema key {other:?} (expected subject, arm, visit, outcome, value, control, treatment)"
                    )))
                }
            }
        }
        Ok(self)
    }
}

/// How to read a long-format CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvOptions {
    pub schema: CsvSchema,
    pub direction: DirectionMap,
    /// Listwise-delete subjects with missing cells instead of failing.
    pub drop_incomplete: bool,
    /// When set, values are raw scores and this visit is the baseline;
    /// the dataset holds changes from it over the remaining visits.
    pub baseline_visit: Option<f64>,
}

/// A parsed dataset and the subjects removed by listwise deletion.
#[derive(Debug, Clone)]
pub struct Ingest {
    pub dataset: TrialDataset,
    pub dropped_subjects: Vec<String>,
}

/// Reads a long-format CSV file into an oriented dataset.
pub fn parse_long_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Ingest> {
    read_long_csv(File::open(path)?, options)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Arm {
    Control,
    Treatment,
}

struct SubjectRows {
    arm: Arm,
    cells: HashMap<(usize, usize), f64>,
}

pub fn read_long_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<Ingest> {
    let schema = &options.schema;
    let mut csv = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (c_subject, c_arm, c_visit, c_outcome, c_value) = (
        column(&schema.subject)?,
        column(&schema.arm)?,
        column(&schema.visit)?,
        column(&schema.outcome)?,
        column(&schema.value)?,
    );

    let mut visits: Vec<f64> = Vec::new();
    let mut outcomes: Vec<String> = Vec::new();
    let mut subject_order: Vec<String> = Vec::new();
    let mut subjects: HashMap<String, SubjectRows> = HashMap::new();

    for record in csv.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let subject = record[c_subject].to_string();
        let arm = match &record[c_arm] {
            l if l == schema.control_label => Arm::Control,
            l if l == schema.treatment_label => Arm::Treatment,
            l => {
                return Err(Error::UnknownArmLabel {
                    label: l.to_string(),
                    line,
                    control: schema.control_label.clone(),
                    treatment: schema.treatment_label.clone(),
                })
            }
        };
        let visit_raw = &record[c_visit];
        let visit: f64 = visit_raw.parse().map_err(|_| Error::InvalidField {
            field: "visit",
            value: visit_raw.to_string(),
            line,
        })?;
        if !visit.is_finite() {
            return Err(Error::NonFiniteValue {
                value: visit_raw.to_string(),
                context: format!("visit column, line {line}"),
            });
        }
        let value_raw = &record[c_value];
        let value: f64 = value_raw.parse().map_err(|_| Error::InvalidField {
            field: "value",
            value: value_raw.to_string(),
            line,
        })?;
        if !value.is_finite() {
            return Err(Error::NonFiniteValue {
                value: value_raw.to_string(),
                context: format!("line {line}"),
            });
        }
        let outcome = &record[c_outcome];

        let t = match visits.iter().position(|&v| v == visit) {
            Some(t) => t,
            None => {
                visits.push(visit);
                visits.len() - 1
            }
        };
        let k = match outcomes.iter().position(|o| o == outcome) {
            Some(k) => k,
            None => {
                outcomes.push(outcome.to_string());
                outcomes.len() - 1
            }
        };
        let rows = subjects.entry(subject.clone()).or_insert_with(|| {
            subject_order.push(subject.clone());
            SubjectRows {
                arm,
                cells: HashMap::new(),
            }
        });
        if rows.arm != arm {
            return Err(Error::InconsistentArm { subject, line });
        }
        if rows.cells.insert((t, k), value).is_some() {
            return Err(Error::DuplicateCell {
                subject,
                visit: visit_raw.to_string(),
                outcome: outcome.to_string(),
                line,
            });
        }
    }
    if subject_order.is_empty() {
        return Err(Error::EmptyInput);
    }

    // Visits in ascending order; remember where each raw index lands.
    let mut visit_order: Vec<usize> = (0..visits.len()).collect();
    visit_order.sort_by(|&a, &b| visits[a].total_cmp(&visits[b]));
    let sorted_visits: Vec<f64> = visit_order.iter().map(|&t| visits[t]).collect();

    let n_cells = visits.len() * outcomes.len();
    let incomplete: Vec<String> = subject_order
        .iter()
        .filter(|s| subjects[*s].cells.len() < n_cells)
        .cloned()
        .collect();
    if !incomplete.is_empty() {
        if !options.drop_incomplete {
            return Err(Error::MissingCell {
                count: incomplete.len(),
                subjects: incomplete,
            });
        }
        log::warn!(
            "dropped {} incomplete subject(s) by listwise deletion",
            incomplete.len()
        );
    }

    let signs = options.direction.resolve(&outcomes)?;
    let mut ids = [Vec::new(), Vec::new()];
    let mut values = [Vec::new(), Vec::new()];
    for id in subject_order.iter().filter(|s| !incomplete.contains(s)) {
        let rows = &subjects[id];
        let a = (rows.arm == Arm::Treatment) as usize;
        ids[a].push(id.clone());
        for &t in &visit_order {
            for k in 0..outcomes.len() {
                values[a].push(rows.cells[&(t, k)]);
            }
        }
    }
    let [control_ids, treatment_ids] = ids;
    let [control_values, treatment_values] = values;
    let control = Panel::from_vec(
        control_ids.len(),
        sorted_visits.len(),
        outcomes.len(),
        control_values,
    )?;
    let treatment = Panel::from_vec(
        treatment_ids.len(),
        sorted_visits.len(),
        outcomes.len(),
        treatment_values,
    )?;

    let dataset = match options.baseline_visit {
        Some(baseline) => {
            if sorted_visits.first() != Some(&baseline) {
                return Err(Error::MissingBaseline(baseline.to_string()));
            }
            changes_from_baseline_with_ids(
                &control,
                &treatment,
                &sorted_visits,
                outcomes,
                &signs,
                control_ids,
                treatment_ids,
            )?
        }
        None => TrialDataset::with_ids(
            orient(&control, &signs),
            orient(&treatment, &signs),
            sorted_visits,
            outcomes,
            control_ids,
            treatment_ids,
        )?,
    };
    Ok(Ingest {
        dataset,
        dropped_subjects: incomplete,
    })
}

fn orient(panel: &Panel, signs: &[f64]) -> Panel {
    panel.map(|_, k, v| signs[k] * v)
}

/// Turns raw scores over visits `0..=T` (visit 0 is baseline) into oriented
/// changes over visits `1..=T`.
///
/// `signs` holds one `+1`/`-1` per outcome.
pub fn changes_from_baseline(
    raw_control: &Panel,
    raw_treatment: &Panel,
    visit_labels: &[f64],
    outcome_labels: Vec<String>,
    signs: &[f64],
) -> Result<TrialDataset> {
    let control_ids = (1..=raw_control.n_subjects())
        .map(|i| format!("x{i}"))
        .collect();
    let treatment_ids = (1..=raw_treatment.n_subjects())
        .map(|j| format!("y{j}"))
        .collect();
    changes_from_baseline_with_ids(
        raw_control,
        raw_treatment,
        visit_labels,
        outcome_labels,
        signs,
        control_ids,
        treatment_ids,
    )
}

fn changes_from_baseline_with_ids(
    raw_control: &Panel,
    raw_treatment: &Panel,
    visit_labels: &[f64],
    outcome_labels: Vec<String>,
    signs: &[f64],
    control_ids: Vec<String>,
    treatment_ids: Vec<String>,
) -> Result<TrialDataset> {
    let visits = raw_control.n_visits();
    if visits < 2 || visit_labels.len() != visits {
        return Err(Error::MissingBaseline(
            visit_labels
                .first()
                .map_or_else(|| "0".into(), f64::to_string),
        ));
    }
    if signs.len() != raw_control.n_outcomes() {
        return Err(Error::DimensionMismatch(format!(
            "{} direction signs for {} outcomes",
            signs.len(),
            raw_control.n_outcomes()
        )));
    }
    let change = |raw: &Panel| {
        Panel::from_fn(raw.n_subjects(), visits - 1, raw.n_outcomes(), |i, t, k| {
            signs[k] * (raw.get(i, t + 1, k) - raw.get(i, 0, k))
        })
    };
    TrialDataset::with_ids(
        change(raw_control),
        change(raw_treatment),
        visit_labels[1..].to_vec(),
        outcome_labels,
        control_ids,
        treatment_ids,
    )
}
