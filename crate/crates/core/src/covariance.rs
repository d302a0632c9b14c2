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

//! Covariance of the scaled rank-difference vector `R / sqrt(N)`.
//!
//! For visit `t` the centered placement matrices are
//!
//! ```text
//! P_t[i, k] = R_y(x_itk) - 1 - n_y (1 - theta_tk) / 2      (n_x x K)
//! Q_t[j, k] = R_x(y_jtk) - 1 - n_x (1 + theta_tk) / 2      (n_y x K)
//! ```
//!
//! and the blocks `C_{t1t2} = P_t1' P_t2 / (n_x n_y^2)`,
//! `D_{t1t2} = Q_t1' Q_t2 / (n_x^2 n_y)` estimate the covariances of the
//! placement functions. With `lambda = n_x / n_y`,
//!
//! ```text
//! Sigma[t1, t2] = ((1 + 1/lambda) sum(C_{t1t2}) + (1 + lambda) sum(D_{t1t2})) / K^2
//! ```
//!
//! The distribution functions that define the population blocks are never
//! evaluated; the placement moments stand in for them.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::data::TrialDataset;
use crate::ranks::{EffectEstimates, RankTables};

/// Centered placement matrices `(P_t, Q_t)` for one visit.
pub fn placement_matrices(
    ranks: &RankTables,
    effects: &EffectEstimates,
    t: usize,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let px = &ranks.placement_x_in_y;
    let py = &ranks.placement_y_in_x;
    let (nx, ny) = (px.n_subjects(), py.n_subjects());
    let outcomes = px.n_outcomes();
    let p = DMatrix::from_fn(nx, outcomes, |i, k| {
        px.get(i, t, k) - 1.0 - ny as f64 * (1.0 - effects.theta_tk[(t, k)]) / 2.0
    });
    let q = DMatrix::from_fn(ny, outcomes, |j, k| {
        py.get(j, t, k) - 1.0 - nx as f64 * (1.0 + effects.theta_tk[(t, k)]) / 2.0
    });
    (p, q)
}

/// `C_{t1t2} = P_t1' P_t2 / (n_x n_y^2)`.
pub fn c_hat_block(
    p_t1: &DMatrix<f64>,
    p_t2: &DMatrix<f64>,
    n_x: usize,
    n_y: usize,
) -> DMatrix<f64> {
    p_t1.tr_mul(p_t2) / (n_x as f64 * (n_y * n_y) as f64)
}

/// `D_{t1t2} = Q_t1' Q_t2 / (n_x^2 n_y)`.
pub fn d_hat_block(
    q_t1: &DMatrix<f64>,
    q_t2: &DMatrix<f64>,
    n_x: usize,
    n_y: usize,
) -> DMatrix<f64> {
    q_t1.tr_mul(q_t2) / ((n_x * n_x) as f64 * n_y as f64)
}

/// A `T x T` grid of `K x K` blocks, row-major over `(t1, t2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGrid {
    visits: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl BlockGrid {
    pub fn from_fn(visits: usize, mut f: impl FnMut(usize, usize) -> DMatrix<f64>) -> Self {
        let mut blocks = Vec::with_capacity(visits * visits);
        for t1 in 0..visits {
            for t2 in 0..visits {
                blocks.push(f(t1, t2));
            }
        }
        Self { visits, blocks }
    }

    pub fn visits(&self) -> usize {
        self.visits
    }

    pub fn block(&self, t1: usize, t2: usize) -> &DMatrix<f64> {
        &self.blocks[t1 * self.visits + t2]
    }
}

/// `Sigma` split by where each `(t1 k1, t2 k2)` term comes from.
///
/// The four matrices add up to the unsymmetrized `Sigma`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationSources {
    /// Same visit, same outcome.
    pub variance: Vec<Vec<f64>>,
    /// Same outcome at different visits.
    pub intra_source: Vec<Vec<f64>>,
    /// Different outcomes at the same visit.
    pub inter_source: Vec<Vec<f64>>,
    /// Different outcomes at different visits.
    pub cross: Vec<Vec<f64>>,
}

impl CorrelationSources {
    /// Contribution of each source to `w' Sigma w`, in the field order.
    pub fn quadratic_forms(&self, weights: &[f64]) -> [f64; 4] {
        let form = |m: &Vec<Vec<f64>>| {
            let mut s = 0.0;
            for (a, row) in m.iter().enumerate() {
                for (b, v) in row.iter().enumerate() {
                    s += weights[a] * v * weights[b];
                }
            }
            s
        };
        [
            form(&self.variance),
            form(&self.intra_source),
            form(&self.inter_source),
            form(&self.cross),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    /// Symmetrized `T x T` estimate.
    pub sigma: DMatrix<f64>,
    pub c_blocks: BlockGrid,
    pub d_blocks: BlockGrid,
    pub lambda: f64,
    pub sources: CorrelationSources,
}

/// Combines `C`/`D` block grids into `Sigma`.
///
/// The result is symmetrized as `(S + S') / 2`; it is not projected onto the
/// positive semidefinite cone.
#[allow(clippy::needless_range_loop)]
pub fn assemble_sigma(c_blocks: BlockGrid, d_blocks: BlockGrid, lambda: f64) -> CovarianceEstimate {
    let visits = c_blocks.visits();
    assert_eq!(visits, d_blocks.visits(), "C and D grids differ in size");
    let (wc, wd) = (1.0 + 1.0 / lambda, 1.0 + lambda);
    let outcomes = c_blocks.block(0, 0).nrows();
    let scale = 1.0 / (outcomes * outcomes) as f64;

    let mut parts = [(); 4].map(|_| vec![vec![0.0; visits]; visits]);
    for t1 in 0..visits {
        for t2 in 0..visits {
            let (c, d) = (c_blocks.block(t1, t2), d_blocks.block(t1, t2));
            for k1 in 0..outcomes {
                for k2 in 0..outcomes {
                    let term = scale * (wc * c[(k1, k2)] + wd * d[(k1, k2)]);
                    let source = match (t1 == t2, k1 == k2) {
                        (true, true) => 0,
                        (false, true) => 1,
                        (true, false) => 2,
                        (false, false) => 3,
                    };
                    parts[source][t1][t2] += term;
                }
            }
        }
    }
    let raw = DMatrix::from_fn(visits, visits, |a, b| parts.iter().map(|p| p[a][b]).sum());
    let sigma = (&raw + raw.transpose()) * 0.5;
    let [variance, intra_source, inter_source, cross] = parts;
    CovarianceEstimate {
        sigma,
        c_blocks,
        d_blocks,
        lambda,
        sources: CorrelationSources {
            variance,
            intra_source,
            inter_source,
            cross,
        },
    }
}

/// Full plug-in estimate from a dataset and its rank tables.
pub fn estimate_covariance(
    data: &TrialDataset,
    ranks: &RankTables,
    effects: &EffectEstimates,
) -> CovarianceEstimate {
    let (nx, ny) = (data.n_x(), data.n_y());
    let visits = data.n_visits();
    let (ps, qs): (Vec<_>, Vec<_>) = (0..visits)
        .map(|t| placement_matrices(ranks, effects, t))
        .unzip();
    let c = BlockGrid::from_fn(visits, |a, b| c_hat_block(&ps[a], &ps[b], nx, ny));
    let d = BlockGrid::from_fn(visits, |a, b| d_hat_block(&qs[a], &qs[b], nx, ny));
    assemble_sigma(c, d, data.lambda())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{c_hat_oracle, d_hat_oracle};
    use crate::ranks::{build_rank_tables, estimate_effects};
    use crate::testutil::{dataset, random_dataset};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn covariance(data: &TrialDataset) -> CovarianceEstimate {
        let ranks = build_rank_tables(data);
        let fx = estimate_effects(&ranks, data);
        estimate_covariance(data, &ranks, &fx)
    }

    fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).abs().max()
    }

    #[test]
    fn separated_samples_have_zero_placements() {
        let data = dataset(&[1.0, 2.0], &[3.0, 4.0]);
        let ranks = build_rank_tables(&data);
        let fx = estimate_effects(&ranks, &data);
        let (p, q) = placement_matrices(&ranks, &fx, 0);
        assert!(p.iter().all(|&v| v == 0.0));
        assert!(q.iter().all(|&v| v == 0.0));
        assert_eq!(c_hat_block(&p, &p, 2, 2)[(0, 0)], 0.0);
    }

    #[test]
    fn all_tied_gives_zero_sigma() {
        let data = dataset(&[3.0, 3.0, 3.0], &[3.0, 3.0]);
        let cov = covariance(&data);
        assert!(cov.sigma.iter().all(|&v| v == 0.0));
        let ranks = build_rank_tables(&data);
        let fx = estimate_effects(&ranks, &data);
        let (p, q) = placement_matrices(&ranks, &fx, 0);
        assert!(p.iter().chain(q.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn single_cell_formula() {
        let data = dataset(&[0.3, 1.2, 2.0, -1.0], &[1.0, 2.5, 0.1]);
        let cov = covariance(&data);
        let lambda = 4.0 / 3.0;
        let c = cov.c_blocks.block(0, 0)[(0, 0)];
        let d = cov.d_blocks.block(0, 0)[(0, 0)];
        let expected = (1.0 + 1.0 / lambda) * c + (1.0 + lambda) * d;
        assert!((cov.sigma[(0, 0)] - expected).abs() < 1e-15);
        assert_eq!(cov.lambda, lambda);
    }

    #[test]
    fn equal_arms_weigh_both_sums_twice() {
        let c = BlockGrid::from_fn(1, |_, _| DMatrix::from_element(1, 1, 0.25));
        let d = BlockGrid::from_fn(1, |_, _| DMatrix::from_element(1, 1, 0.5));
        let cov = assemble_sigma(c, d, 1.0);
        assert_eq!(cov.sigma[(0, 0)], 2.0 * 0.25 + 2.0 * 0.5);
    }

    #[test]
    fn sources_partition_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data = random_dataset(&mut rng, 9, 7, 3, 2, false);
        let cov = covariance(&data);
        let s = &cov.sources;
        for a in 0..3 {
            for b in 0..3 {
                let total =
                    s.variance[a][b] + s.intra_source[a][b] + s.inter_source[a][b] + s.cross[a][b];
                assert!((total - cov.sigma[(a, b)]).abs() < 1e-12);
                if a != b {
                    assert_eq!(s.variance[a][b], 0.0);
                    assert_eq!(s.inter_source[a][b], 0.0);
                } else {
                    assert_eq!(s.intra_source[a][b], 0.0);
                    assert_eq!(s.cross[a][b], 0.0);
                }
            }
        }
        let w = [1.0, 1.0, 1.0];
        let total: f64 = s.quadratic_forms(&w).iter().sum();
        let direct: f64 = cov.sigma.iter().sum();
        assert!((total - direct).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn blocks_match_direct_sums(seed in any::<u64>(), nx in 2usize..10, ny in 2usize..10, ties in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data = random_dataset(&mut rng, nx, ny, 3, 2, ties);
            let cov = covariance(&data);
            for t1 in 0..3 {
                for t2 in 0..3 {
                    prop_assert!(max_abs_diff(cov.c_blocks.block(t1, t2), &c_hat_oracle(&data, t1, t2)) < 1e-12);
                    prop_assert!(max_abs_diff(cov.d_blocks.block(t1, t2), &d_hat_oracle(&data, t1, t2)) < 1e-12);
                }
            }
        }

        #[test]
        fn placement_columns_are_centered(seed in any::<u64>(), ties in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data = random_dataset(&mut rng, 11, 6, 2, 3, ties);
            let ranks = build_rank_tables(&data);
            let fx = estimate_effects(&ranks, &data);
            for t in 0..2 {
                let (p, q) = placement_matrices(&ranks, &fx, t);
                for col in p.column_iter().chain(q.column_iter()) {
                    prop_assert!(col.sum().abs() < 1e-9 * 11.0 * 6.0);
                }
            }
        }

        #[test]
        fn sigma_symmetric_nonnegative_diagonal(seed in any::<u64>(), ties in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data = random_dataset(&mut rng, 8, 12, 4, 2, ties);
            let cov = covariance(&data);
            for a in 0..4 {
                prop_assert!(cov.sigma[(a, a)] >= 0.0);
                for b in 0..4 {
                    prop_assert_eq!(cov.sigma[(a, b)], cov.sigma[(b, a)]);
                }
            }
            // C_{t1t2}[k1,k2] == C_{t2t1}[k2,k1]
            for t1 in 0..4 {
                for t2 in 0..4 {
                    let a = cov.c_blocks.block(t1, t2);
                    let b = cov.c_blocks.block(t2, t1);
                    prop_assert!(max_abs_diff(a, &b.transpose()) < 1e-15);
                }
            }
        }

        #[test]
        fn sigma_invariant_under_arm_swap(seed in any::<u64>(), ties in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data = random_dataset(&mut rng, 6, 10, 3, 2, ties);
            let a = covariance(&data);
            let b = covariance(&data.swap_arms());
            prop_assert!((a.lambda * b.lambda - 1.0).abs() < 1e-15);
            let scale = a.sigma.abs().max().max(1e-300);
            prop_assert!(max_abs_diff(&a.sigma, &b.sigma) <= 1e-10 * scale);
            // D on the data is C on the swapped data.
            prop_assert!(max_abs_diff(a.d_blocks.block(0, 1), b.c_blocks.block(0, 1)) < 1e-15);
        }
    }
}
