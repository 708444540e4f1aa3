//! k-means++ seeding and Lloyd iterations.
//!
//! Used standalone and as the initializer for mixture models and HMM
//! emissions. Ties break to the lowest index everywhere and the whole
//! module is deterministic for a fixed seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::DataBatch;
use crate::engine::FitConfig;
use crate::error::{Error, Result};
use crate::math::sq_dist;

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansModel {
    pub centroids: Vec<Vec<f64>>,
}

impl KMeansModel {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn dim(&self) -> usize {
        self.centroids.first().map(|c| c.len()).unwrap_or(0)
    }

    /// Nearest centroid by squared Euclidean distance, ties to the
    /// lowest index.
    pub fn assign(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, c) in self.centroids.iter().enumerate() {
            let d = sq_dist(x, c);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        Ok(best)
    }

    /// Within-cluster sum of squares under current assignments.
    pub fn inertia(&self, data: &DataBatch) -> Result<f64> {
        let mut total = 0.0;
        for i in 0..data.n_rows() {
            let j = self.assign(data.row(i))?;
            total += data.weight(i) * sq_dist(data.row(i), &self.centroids[j]);
        }
        Ok(total)
    }
}

fn count_distinct(data: &DataBatch) -> usize {
    use std::collections::HashSet;
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    for i in 0..data.n_rows() {
        seen.insert(data.row(i).iter().map(|v| v.to_bits()).collect());
    }
    seen.len()
}

/// k-means++ seeding: first centroid uniform over rows, each next one
/// sampled with probability proportional to the squared distance to the
/// nearest chosen centroid.
pub fn kmeanspp_init<R: Rng + ?Sized>(
    data: &DataBatch,
    k: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let n = data.n_rows();
    if k == 0 || n == 0 {
        return Err(Error::EmptySource);
    }
    let distinct = count_distinct(data);
    if k > distinct {
        return Err(Error::TooFewDistinctRows { k, distinct });
    }

    let first = rng.gen_range(0..n);
    let mut centroids = vec![data.row(first).to_vec()];
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(data.row(i), &centroids[0])).collect();

    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        debug_assert!(total > 0.0, "guaranteed by the distinct-rows precondition");
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = n - 1;
        for (i, &d) in nearest.iter().enumerate() {
            acc += d;
            if target < acc {
                chosen = i;
                break;
            }
        }
        let c = data.row(chosen).to_vec();
        for i in 0..n {
            let d = sq_dist(data.row(i), &c);
            if d < nearest[i] {
                nearest[i] = d;
            }
        }
        centroids.push(c);
    }
    Ok(centroids)
}

/// Lloyd iterations from a k-means++ seed: assign to the nearest
/// centroid, recompute weighted means, stop when assignments stabilize
/// or `max_iterations` is hit. An emptied cluster is reseeded to the
/// point farthest from its assigned centroid.
pub fn lloyd_fit(data: &DataBatch, k: usize, config: &FitConfig) -> Result<KMeansModel> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let centroids = kmeanspp_init(data, k, &mut rng)?;
    lloyd_from(data, centroids, config.max_iterations)
}

/// Lloyd iterations from explicit starting centroids.
pub fn lloyd_from(
    data: &DataBatch,
    mut centroids: Vec<Vec<f64>>,
    max_iterations: usize,
) -> Result<KMeansModel> {
    let n = data.n_rows();
    let d = data.n_cols();
    let k = centroids.len();
    let mut assignments = vec![usize::MAX; n];

    for _ in 0..max_iterations {
        let model = KMeansModel {
            centroids: centroids.clone(),
        };
        let mut changed = false;
        for i in 0..n {
            let j = model.assign(data.row(i))?;
            if assignments[i] != j {
                assignments[i] = j;
                changed = true;
            }
        }
        if !changed {
            break;
        }

        let mut sums = vec![vec![0.0; d]; k];
        let mut mass = vec![0.0; k];
        for i in 0..n {
            let j = assignments[i];
            let w = data.weight(i);
            mass[j] += w;
            for (s, x) in sums[j].iter_mut().zip(data.row(i)) {
                *s += w * x;
            }
        }
        for j in 0..k {
            if mass[j] > 0.0 {
                for s in &mut sums[j] {
                    *s /= mass[j];
                }
                centroids[j] = sums[j].clone();
            } else {
                // Reseed to the point farthest from its assigned centroid.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = sq_dist(data.row(a), &centroids[assignments[a]]);
                        let db = sq_dist(data.row(b), &centroids[assignments[b]]);
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                centroids[j] = data.row(far).to_vec();
            }
        }
    }
    Ok(KMeansModel { centroids })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch(rows: &[Vec<f64>]) -> DataBatch {
        DataBatch::from_rows(rows).unwrap()
    }

    #[test]
    fn k_one_seeds_at_a_data_row() {
        let data = batch(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = kmeanspp_init(&data, 1, &mut rng).unwrap();
        assert!(c[0] == vec![1.0, 2.0] || c[0] == vec![3.0, 4.0]);
    }

    #[test]
    fn k_equals_n_yields_a_permutation_of_rows() {
        let rows = vec![vec![0.0], vec![1.0], vec![5.0], vec![9.0]];
        let data = batch(&rows);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut c = kmeanspp_init(&data, 4, &mut rng).unwrap();
        c.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert_eq!(c, rows);
    }

    #[test]
    fn k_above_distinct_rows_errors() {
        let data = batch(&[vec![1.0], vec![1.0], vec![2.0]]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            kmeanspp_init(&data, 3, &mut rng),
            Err(Error::TooFewDistinctRows { k: 3, distinct: 2 })
        ));
    }

    #[test]
    fn second_seed_lands_in_the_far_cluster() {
        // Two tight clusters at distance 100: D^2 weighting makes the
        // cross-cluster pick overwhelmingly likely. Exact probability of
        // picking the far cluster given the first seed in the near one:
        // far mass ~ 2*100^2 vs near mass ~ 2*1^2 -> > 0.999.
        let data = batch(&[
            vec![0.0],
            vec![1.0],
            vec![100.0],
            vec![101.0],
        ]);
        let mut cross = 0;
        for seed in 0..1000 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = kmeanspp_init(&data, 2, &mut rng).unwrap();
            let near = |v: f64| v < 50.0;
            if near(c[0][0]) != near(c[1][0]) {
                cross += 1;
            }
        }
        assert!(cross > 990, "cross-cluster picks: {}", cross);
    }

    #[test]
    fn k_one_lloyd_gives_weighted_mean() {
        let data = batch(&[vec![0.0], vec![10.0]])
            .with_weights(vec![3.0, 1.0])
            .unwrap();
        let model = lloyd_fit(&data, 1, &FitConfig::default()).unwrap();
        assert!((model.centroids[0][0] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn two_blobs_match_brute_force_best_partition() {
        let rows: Vec<Vec<f64>> = vec![
            vec![0.1], vec![0.3], vec![-0.2], vec![0.0], vec![0.25],
            vec![9.9], vec![10.2], vec![10.0], vec![9.7], vec![10.4],
        ];
        let data = batch(&rows);
        let model = lloyd_fit(&data, 2, &FitConfig::default()).unwrap();
        let wcss = model.inertia(&data).unwrap();

        // Enumerate all 2-partitions of n<=12 points.
        let n = rows.len();
        let mut best = f64::INFINITY;
        for mask in 1..(1u32 << n) - 1 {
            let mut sums = [0.0; 2];
            let mut counts = [0.0; 2];
            for (i, r) in rows.iter().enumerate() {
                let g = ((mask >> i) & 1) as usize;
                sums[g] += r[0];
                counts[g] += 1.0;
            }
            let means = [sums[0] / counts[0], sums[1] / counts[1]];
            let mut cost = 0.0;
            for (i, r) in rows.iter().enumerate() {
                let g = ((mask >> i) & 1) as usize;
                let d = r[0] - means[g];
                cost += d * d;
            }
            if cost < best {
                best = cost;
            }
        }
        assert!((wcss - best).abs() < 1e-9, "wcss {} vs best {}", wcss, best);
    }

    #[test]
    fn converged_input_is_a_fixed_point() {
        let data = batch(&[vec![0.0], vec![1.0], vec![10.0], vec![11.0]]);
        let start = vec![vec![0.5], vec![10.5]];
        let model = lloyd_from(&data, start.clone(), 100).unwrap();
        assert_eq!(model.centroids, start);
    }

    #[test]
    fn assign_ties_break_to_lowest_index() {
        let model = KMeansModel {
            centroids: vec![vec![0.0], vec![5.0], vec![2.0]],
        };
        assert_eq!(model.assign(&[1.0]).unwrap(), 0); // tie between 0 and 2
        assert_eq!(model.assign(&[5.0]).unwrap(), 1);
        assert!(model.assign(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn assign_matches_linear_scan_oracle() {
        let model = KMeansModel {
            centroids: vec![vec![0.0, 1.0], vec![3.0, -2.0], vec![-1.0, -1.0]],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let x = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let oracle = model
                .centroids
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    sq_dist(&x, a).partial_cmp(&sq_dist(&x, b)).unwrap()
                })
                .map(|(i, _)| i)
                .unwrap();
            assert_eq!(model.assign(&x).unwrap(), oracle);
        }
    }

    #[test]
    fn lloyd_objective_is_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let data = batch(&rows);
        let mut centroids = kmeanspp_init(&data, 4, &mut rng).unwrap();
        let mut prev = f64::INFINITY;
        for _ in 0..20 {
            let model = lloyd_from(&data, centroids.clone(), 1).unwrap();
            let obj = model.inertia(&data).unwrap();
            assert!(obj <= prev + 1e-12, "objective rose: {} -> {}", prev, obj);
            prev = obj;
            centroids = model.centroids;
        }
    }

    #[test]
    fn translation_does_not_change_assignments() {
        let model = KMeansModel {
            centroids: vec![vec![0.0, 0.0], vec![4.0, 4.0]],
        };
        let shifted = KMeansModel {
            centroids: vec![vec![7.0, -3.0], vec![11.0, 1.0]],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let x = [rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)];
            let y = [x[0] + 7.0, x[1] - 3.0];
            assert_eq!(model.assign(&x).unwrap(), shifted.assign(&y).unwrap());
        }
    }
}
