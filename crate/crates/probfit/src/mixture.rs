//! General mixture model over any distribution family, trained by EM
//! with k-means initialization.

use crate::data::{BatchSource, DataBatch, MemorySource};
use crate::distributions::{Distribution, FamilySpec};
use crate::engine::{self, FitConfig, FitReport, Summarize, Trainable, TrainingMode};
use crate::error::{Error, Result};
use crate::kmeans;
use crate::math::logsumexp;
use crate::stats::{MixtureStats, SuffStats};

/// A set of component distributions and a vector of prior probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralMixtureModel {
    weights: Vec<f64>,
    components: Vec<Distribution>,
}

/// Mass below which a component is considered starved and gets reseeded
/// at the worst-explained row.
const RESCUE_MASS: f64 = 1e-8;

impl GeneralMixtureModel {
    pub fn new(weights: Vec<f64>, components: Vec<Distribution>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} weights for {} components",
                weights.len(),
                components.len()
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 || weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidDocument(format!(
                "mixture weights must be nonnegative and sum to 1, got {}",
                total
            )));
        }
        let dim = components[0].dimension();
        if components.iter().any(|c| c.dimension() != dim) {
            return Err(Error::ShapeMismatch(
                "mixture components must share a dimension".into(),
            ));
        }
        Ok(GeneralMixtureModel {
            weights,
            components,
        })
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn dimension(&self) -> usize {
        self.components[0].dimension()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[Distribution] {
        &self.components
    }

    /// Per-component joint log-probabilities log(w_j) + log p_j(x).
    fn joint_log_probs(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| Ok(w.ln() + c.log_probability(x)?))
            .collect()
    }

    pub fn log_probability(&self, x: &[f64]) -> Result<f64> {
        Ok(logsumexp(&self.joint_log_probs(x)?))
    }

    /// Posterior responsibility of each component for `x`.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        let joint = self.joint_log_probs(x)?;
        let total = logsumexp(&joint);
        if !total.is_finite() {
            return Err(Error::ZeroProbabilitySample(0));
        }
        Ok(joint.iter().map(|l| (l - total).exp()).collect())
    }

    /// Most likely component, ties to the lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let joint = self.joint_log_probs(x)?;
        let mut best = 0;
        let mut best_l = f64::NEG_INFINITY;
        for (j, &l) in joint.iter().enumerate() {
            if l > best_l {
                best_l = l;
                best = j;
            }
        }
        if !best_l.is_finite() {
            return Err(Error::ZeroProbabilitySample(0));
        }
        Ok(best)
    }

    /// One full E-step pass over the source: per-component statistics
    /// weighted by responsibilities, plus the data log-likelihood under
    /// the current parameters. Pure with respect to the model.
    pub fn em_epoch<S>(&self, source: &mut S, config: &FitConfig) -> Result<SuffStats>
    where
        S: BatchSource<Batch = DataBatch> + ?Sized,
    {
        engine::parallel_summarize(self, source, config)
    }

    /// Initialize by k-means and refine by EM.
    ///
    /// Lloyd runs on the first min(n, 50·k·d) rows (it needs random
    /// access, which an out-of-core source does not provide), each
    /// component is MLE-fit on its cluster, weights start as cluster
    /// fractions, then `engine::fit` runs EM to convergence.
    pub fn from_samples<S>(
        family: &FamilySpec,
        k: usize,
        source: &mut S,
        config: &FitConfig,
    ) -> Result<(Self, FitReport)>
    where
        S: BatchSource<Batch = DataBatch> + ?Sized,
    {
        config.validate()?;
        if k == 0 {
            return Err(Error::InvalidConfig("k must be >= 1".into()));
        }

        // Pull a bounded prefix of the data for initialization.
        source.reset()?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut row_weights: Vec<f64> = Vec::new();
        'outer: while let Some(batch) = source.next_batch()? {
            let cap = 50 * k * batch.n_cols().max(1);
            for i in 0..batch.n_rows() {
                rows.push(batch.row(i).to_vec());
                row_weights.push(batch.weight(i));
                if rows.len() >= cap {
                    break 'outer;
                }
            }
        }
        if rows.is_empty() {
            return Err(Error::EmptySource);
        }
        let init_data = DataBatch::from_rows(&rows)?.with_weights(row_weights)?;

        let mut model = Self::init_from_clusters(family, k, &init_data, config)?;
        let report = engine::fit(&mut model, source, config)?;
        Ok((model, report))
    }

    /// Cluster the given rows and MLE-fit one component per cluster.
    fn init_from_clusters(
        family: &FamilySpec,
        k: usize,
        data: &DataBatch,
        config: &FitConfig,
    ) -> Result<Self> {
        let dim = data.n_cols();
        // k-means runs to its own convergence cap of 10 iterations when
        // used as an initializer.
        let km_config = FitConfig {
            max_iterations: 10,
            ..config.clone()
        };
        let km = if k == 1 {
            kmeans::KMeansModel {
                centroids: vec![vec![0.0; dim]],
            }
        } else {
            kmeans::lloyd_fit(data, k, &km_config)?
        };

        let mut components = Vec::with_capacity(k);
        let mut masses = vec![0.0; k];
        let assignments: Vec<usize> = (0..data.n_rows())
            .map(|i| {
                if k == 1 {
                    Ok(0)
                } else {
                    km.assign(data.row(i))
                }
            })
            .collect::<Result<_>>()?;
        for (i, &a) in assignments.iter().enumerate() {
            masses[a] += data.weight(i);
        }
        for j in 0..k {
            let mut dist = family.default_distribution(dim)?;
            let mut stats = dist.zero_stats();
            for (i, &a) in assignments.iter().enumerate() {
                if a == j {
                    dist.accumulate(&mut stats, data.row(i), data.weight(i))?;
                }
            }
            dist.from_summaries(&stats, 0.0)?;
            components.push(dist);
        }
        let total: f64 = masses.iter().sum();
        let weights: Vec<f64> = if total > 0.0 {
            masses.iter().map(|m| m / total).collect()
        } else {
            vec![1.0 / k as f64; k]
        };
        GeneralMixtureModel::new(weights, components)
    }
}

impl Summarize for GeneralMixtureModel {
    type Batch = DataBatch;

    fn summarize(&self, batch: &DataBatch) -> Result<SuffStats> {
        let k = self.k();
        let mut mass = vec![0.0; k];
        let mut comp_stats: Vec<SuffStats> =
            self.components.iter().map(|c| c.zero_stats()).collect();
        let mut loglik = 0.0;
        let mut worst: Option<(f64, Vec<f64>)> = None;

        for i in 0..batch.n_rows() {
            let x = batch.row(i);
            let w = batch.weight(i);
            let joint = self.joint_log_probs(x)?;
            let total = logsumexp(&joint);
            if !total.is_finite() {
                return Err(Error::ZeroProbabilitySample(i));
            }
            loglik += w * total;
            if worst.as_ref().map_or(true, |(l, _)| total < *l) {
                worst = Some((total, x.to_vec()));
            }
            for j in 0..k {
                let r = (joint[j] - total).exp();
                let rw = w * r;
                mass[j] += rw;
                self.components[j].accumulate(&mut comp_stats[j], x, rw)?;
            }
        }
        Ok(SuffStats::Mixture(MixtureStats {
            mass,
            components: comp_stats,
            log_likelihood: loglik,
            worst_row: worst,
        }))
    }
}

impl Trainable for GeneralMixtureModel {
    fn apply_summaries(&mut self, stats: &SuffStats, inertia: f64) -> Result<()> {
        let s = match stats {
            SuffStats::Mixture(s) => s,
            other => {
                return Err(Error::StatsKindMismatch {
                    left: "Mixture",
                    right: other.kind(),
                })
            }
        };
        if s.mass.len() != self.k() {
            return Err(Error::ShapeMismatch(format!(
                "{} component masses for k={}",
                s.mass.len(),
                self.k()
            )));
        }
        let total: f64 = s.mass.iter().sum();
        if total <= 0.0 {
            return Ok(());
        }
        for j in 0..self.k() {
            let mle = s.mass[j] / total;
            self.weights[j] = inertia * self.weights[j] + (1.0 - inertia) * mle;
            self.components[j].from_summaries(&s.components[j], inertia)?;
        }
        let norm: f64 = self.weights.iter().sum();
        for w in &mut self.weights {
            *w /= norm;
        }

        // Starved component: reseed at the worst-explained row.
        if let Some((_, row)) = &s.worst_row {
            for j in 0..self.k() {
                if s.mass[j] < RESCUE_MASS {
                    reseed_at(&mut self.components[j], row);
                }
            }
        }
        Ok(())
    }

    fn training_mode(&self) -> TrainingMode {
        TrainingMode::Iterative
    }
}

/// Move a location-family component onto the given row, keeping its
/// spread. Families without a location parameter are left alone.
fn reseed_at(dist: &mut Distribution, row: &[f64]) {
    match dist {
        Distribution::Gaussian(g) => g.mu = row[0],
        Distribution::MultivariateGaussian(m) => {
            let cov = m.covariance().to_vec();
            let mode = m.mode();
            if let Ok(new) =
                crate::distributions::MultivariateGaussian::new(row.to_vec(), cov, mode)
            {
                *m = new;
            }
        }
        _ => {}
    }
}

/// Convenience: EM fit of an in-memory dataset.
pub fn fit_in_memory(
    model: &mut GeneralMixtureModel,
    data: &DataBatch,
    config: &FitConfig,
) -> Result<FitReport> {
    let mut source = MemorySource::new(data.clone(), config.batch_size.rows());
    engine::fit(model, &mut source, config)
}
