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

//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use lrst::sim::{
    run_power_experiment, run_type1_experiment, scenario1_grid, scenario2_grid, simulate_trial,
    EffectSpec, MonteCarlo, PlaceboModel, PowerTable, VarianceStructure,
};
use lrst::{
    analyze, build_rank_tables, c_hat_block, d_hat_block, estimate_effects, lrst, lrst_last_visit,
    normal_upper_tail, permutation_null, placement_matrices, Result, TestResult, WeightVector,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{
    c_direct, d_direct, max_abs_diff, random_dataset, random_shape, theta_direct, Values,
};

const SEED: u64 = 20240517;
const REPS: usize = 1000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn table_model() -> PlaceboModel {
    PlaceboModel::bapineuzumab_302(0.6, 0.5)
        .and_then(|m| m.with_structure(VarianceStructure::InterceptPlusAr1))
        .expect("reference model")
}

fn oracle_equivalence() -> Outcome {
    const DATASETS: usize = 1000;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut worst_theta, mut worst_cd) = (0.0f64, 0.0f64);
    for _ in 0..DATASETS {
        let data = random_shape(&mut rng, (2, 15), 6, 4);
        let ranks = build_rank_tables(&data);
        let effects = estimate_effects(&ranks, &data);
        worst_theta = worst_theta.max(max_abs_diff(&effects.theta_tk, &theta_direct(&data)));
        let pq: Vec<_> = (0..data.n_visits())
            .map(|t| placement_matrices(&ranks, &effects, t))
            .collect();
        for t1 in 0..data.n_visits() {
            for t2 in 0..data.n_visits() {
                let c = c_hat_block(&pq[t1].0, &pq[t2].0, data.n_x(), data.n_y());
                let d = d_hat_block(&pq[t1].1, &pq[t2].1, data.n_x(), data.n_y());
                worst_cd = worst_cd
                    .max(max_abs_diff(&c, &c_direct(&data, t1, t2)))
                    .max(max_abs_diff(&d, &d_direct(&data, t1, t2)));
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst_theta <= 1e-12 && worst_cd <= 1e-12 && elapsed < Duration::from_secs(60),
        format!(
            "{DATASETS} datasets, max |theta diff| {worst_theta:.1e}, max |C/D diff| {worst_cd:.1e}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn type1_reproduction() -> Outcome {
    let start = Instant::now();
    let n = [100, 300, 900];
    let continuous_target = [[0.058, 0.104], [0.047, 0.099], [0.047, 0.092]];
    let ordinal_target = [[0.055, 0.096], [0.050, 0.106], [0.051, 0.099]];
    let tol = [0.02, 0.025];
    let table = run_type1_experiment(
        &table_model(),
        &n,
        &[0.05, 0.1],
        &MonteCarlo::new(REPS, SEED),
    )
    .expect("type I experiment");
    let mut pass = true;
    let mut cells = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        for a in 0..2 {
            pass &= within(row.continuous[a], continuous_target[i][a], tol[a]);
            pass &= within(row.ordinal[a], ordinal_target[i][a], tol[a]);
        }
        cells.push(format!(
            "N={} {:.3}/{:.3} ord {:.3}/{:.3}",
            row.n_total, row.continuous[0], row.continuous[1], row.ordinal[0], row.ordinal[1]
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(600);
    outcome(
        pass,
        format!("{} ({:.0}s)", cells.join("; "), elapsed.as_secs_f64()),
    )
}

fn power_scenario1(model: &PlaceboModel) -> PowerTable {
    run_power_experiment(
        model,
        &EffectSpec::bapineuzumab_302(),
        &scenario1_grid(&[300, 900, 1500], 0.5),
        0.05,
        &MonteCarlo::new(REPS, SEED),
    )
    .expect("scenario 1")
}

fn power_reproduction() -> Outcome {
    let start = Instant::now();
    let target = [0.499, 0.863, 0.987];
    let table = power_scenario1(&table_model());
    let power: Vec<f64> = table.rows.iter().map(|r| r.continuous).collect();
    let ordinal: Vec<f64> = table.rows.iter().map(|r| r.ordinal).collect();
    let close = power.iter().zip(target).all(|(p, t)| within(*p, t, 0.10));
    let increasing = power.windows(2).all(|w| w[0] < w[1]);
    let ordinal_gap = power
        .iter()
        .zip(&ordinal)
        .map(|(p, o)| (p - o).abs())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    outcome(
        close && increasing && ordinal_gap <= 0.08 && elapsed < Duration::from_secs(900),
        format!(
            "N=300/900/1500 power {:.3}/{:.3}/{:.3} (targets 0.499/0.863/0.987), ordinal {:.3}/{:.3}/{:.3}, max gap {:.3} ({:.0}s)",
            power[0], power[1], power[2], ordinal[0], ordinal[1], ordinal[2], ordinal_gap,
            elapsed.as_secs_f64()
        ),
    )
}

fn marginal_power_info() -> String {
    let model = PlaceboModel::bapineuzumab_302(0.6, 0.5).expect("reference model");
    let table = power_scenario1(&model);
    let power: Vec<String> = table
        .rows
        .iter()
        .map(|r| format!("{:.3}", r.continuous))
        .collect();
    format!(
        "marginal-variance model, N=300/900/1500 power {}",
        power.join("/")
    )
}

fn scenario2_shape() -> Outcome {
    let multipliers: Vec<f64> = (0..=10).map(|i| i as f64 / 5.0).collect();
    let rhos = [0.0, 0.2, 0.5, 0.8];
    let table = run_power_experiment(
        &table_model(),
        &EffectSpec::bapineuzumab_302(),
        &scenario2_grid(311, 448, &multipliers, &rhos),
        0.05,
        &MonteCarlo::new(REPS, SEED),
    )
    .expect("scenario 2");
    let mut pass = true;
    let mut notes = Vec::new();
    for (r, rho) in rhos.iter().enumerate() {
        let curve: Vec<f64> = table.rows[r * multipliers.len()..(r + 1) * multipliers.len()]
            .iter()
            .map(|row| row.continuous)
            .collect();
        let null_ok = within(curve[0], 0.05, 0.02);
        let drops = curve.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
        pass &= null_ok && drops <= 0.03;
        notes.push(format!(
            "rho={rho}: m0 {:.3}, m1 {:.3}, m2 {:.3}, max drop {:.3}",
            curve[0],
            curve[5],
            curve[10],
            drops.max(0.0)
        ));
    }
    outcome(pass, notes.join("; "))
}

fn same(a: &Result<TestResult>, b: &Result<TestResult>) -> (bool, f64) {
    match (a, b) {
        (Ok(a), Ok(b)) => {
            let d = (a.z - b.z).abs().max((a.p_value - b.p_value).abs());
            (d <= 1e-12, d)
        }
        (Err(_), Err(_)) => (true, 0.0),
        _ => (false, f64::INFINITY),
    }
}

fn last_visit_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 5);
    let (mut pass, mut worst, mut checked) = (true, 0.0f64, 0);
    for _ in 0..100 {
        let data = random_shape(&mut rng, (2, 15), 6, 4);
        let visits = data.n_visits();
        let mut j = vec![0.0; visits];
        j[visits - 1] = 1.0;
        let last = lrst_last_visit(&data);
        let weighted = lrst(&data, &WeightVector::new(j).expect("valid weights"));
        let truncated = lrst(&data.final_visit_only(), &WeightVector::equal(1));
        for other in [&weighted, &truncated] {
            let (ok, d) = same(&last, other);
            pass &= ok;
            worst = worst.max(d);
        }
        checked += usize::from(last.is_ok());
    }
    outcome(
        pass && worst <= 1e-12,
        format!("100 datasets ({checked} non-degenerate), max |z or p diff| {worst:.1e}"),
    )
}

fn permutation_calibration() -> Outcome {
    const DATASETS: u64 = 50;
    let start = Instant::now();
    let model = table_model();
    let none = EffectSpec::none(model.n_outcomes());
    let weights = WeightVector::equal(model.n_visits());
    let mut worst = 0.0f64;
    let mut within_tol = 0;
    for d in 0..DATASETS {
        let data = simulate_trial(&model, &none, 80, 120, SEED + d).expect("null data");
        let analytic = lrst(&data, &weights).expect("analytic test");
        let null = permutation_null(&data, &weights, 2000, SEED + 1000 + d).expect("permutations");
        let gap = (analytic.p_value - null.p_value(analytic.z)).abs();
        worst = worst.max(gap);
        within_tol += usize::from(gap <= 0.03);
    }
    outcome(
        worst <= 0.03,
        format!(
            "{DATASETS} null datasets (80/120, 2000 permutations), {within_tol} within 0.03, max |p_analytic - p_perm| {worst:.4} ({:.0}s)",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn p_value_anchors() -> Outcome {
    let a = normal_upper_tail(-0.024);
    let b = normal_upper_tail(3.135);
    outcome(
        within(a, 0.5096, 0.001) && within(b, 8.6e-4, 2e-5),
        format!("p(-0.024) = {a:.5}, p(3.135) = {b:.4e}"),
    )
}

fn performance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 8);
    let data = random_dataset(&mut rng, 600, 900, 6, 2, Values::Normal);
    let start = Instant::now();
    let analysis = analyze(&data, &WeightVector::equal(6)).expect("large test");
    let single = start.elapsed();

    let model = table_model();
    let run = |threads: usize| {
        let mc = MonteCarlo::new(40, SEED).threads(threads);
        let type1 = run_type1_experiment(&model, &[100, 300], &[0.05, 0.1], &mc).expect("type I");
        let power = run_power_experiment(
            &model,
            &EffectSpec::bapineuzumab_302(),
            &scenario2_grid(60, 90, &[0.5, 1.5], &[0.0, 0.8]),
            0.05,
            &mc,
        )
        .expect("power");
        (type1, power)
    };
    let reference = run(1);
    let invariant = [4, 8].iter().all(|&k| run(k) == reference);
    outcome(
        single < Duration::from_secs(1) && invariant && analysis.result.z.is_finite(),
        format!(
            "N=1500 T=6 K=2 test in {:.1} ms; outputs identical for 1/4/8 threads: {invariant}",
            single.as_secs_f64() * 1e3
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 oracle equivalence", oracle_equivalence),
        ("2 type I error", type1_reproduction),
        ("3 scenario 1 power", power_reproduction),
        ("4 scenario 2 shape", scenario2_shape),
        ("5 last-visit reduction", last_visit_reduction),
        ("6 permutation calibration", permutation_calibration),
        ("7 p-value anchors", p_value_anchors),
        ("8 performance and thread invariance", performance),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let result = check();
        failed += usize::from(!result.pass);
        println!(
            "[{}] {name}: {}",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail
        );
        if name.starts_with('3') {
            println!("[INFO] {}", marginal_power_info());
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
