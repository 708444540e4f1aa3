//! Training engine: the summarize → merge → from_summaries protocol.
//!
//! One mechanism drives every model: scan batches, collect additive
//! statistics, update parameters. Single-pass MLE models make one scan
//! and one update; EM models repeat the scan until the log-likelihood
//! improvement drops below a threshold. Workers summarize disjoint
//! batches against an immutable model snapshot and partial statistics
//! merge in batch-index order, so results are reproducible for any
//! worker count.

use std::thread;

use crate::data::{BatchSource, DataBatch};
use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::stats::SuffStats;

/// Rows per batch when a source is built from in-memory data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BatchSize {
    All,
    Rows(usize),
}

impl BatchSize {
    pub fn rows(&self) -> Option<usize> {
        match self {
            BatchSize::All => None,
            BatchSize::Rows(n) => Some(*n),
        }
    }
}

/// Number of batches summarized before each parameter update.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BatchesPerEpoch {
    All,
    Count(usize),
}

#[derive(Clone, Debug)]
pub struct FitConfig {
    pub batch_size: BatchSize,
    pub batches_per_epoch: BatchesPerEpoch,
    pub max_iterations: usize,
    /// Absolute log-likelihood improvement below which EM stops.
    pub stop_threshold: f64,
    /// Update damping: new = inertia*old + (1-inertia)*MLE, per scalar.
    pub inertia: f64,
    pub worker_count: usize,
    pub deterministic_merge: bool,
    pub rng_seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            batch_size: BatchSize::All,
            batches_per_epoch: BatchesPerEpoch::All,
            max_iterations: 100,
            stop_threshold: 0.1,
            inertia: 0.0,
            worker_count: 1,
            deterministic_merge: true,
            rng_seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.inertia) {
            return Err(Error::InvalidConfig(format!(
                "inertia must lie in [0, 1), got {}",
                self.inertia
            )));
        }
        if let BatchSize::Rows(0) = self.batch_size {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if let BatchesPerEpoch::Count(0) = self.batches_per_epoch {
            return Err(Error::InvalidConfig("batches_per_epoch must be >= 1".into()));
        }
        if self.worker_count == 0 {
            return Err(Error::InvalidConfig("worker_count must be >= 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be >= 1".into()));
        }
        if !(self.stop_threshold >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "stop_threshold must be nonnegative, got {}",
                self.stop_threshold
            )));
        }
        Ok(())
    }
}

/// Training trajectory of one `fit` call.
#[derive(Clone, Debug, Default)]
pub struct FitReport {
    /// Total data log-likelihood observed during each iteration's scan.
    pub log_likelihoods: Vec<f64>,
    pub iterations_run: usize,
    pub improvement_at_stop: f64,
}

/// Anything that can turn a batch into additive statistics. Summarize is
/// a pure function of (model snapshot, batch), which is what licenses
/// running it concurrently on disjoint batches.
pub trait Summarize: Sync {
    type Batch: Send + Sync + Clone;

    fn summarize(&self, batch: &Self::Batch) -> Result<SuffStats>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainingMode {
    /// One pass of summarize, one parameter update (MLE).
    SinglePass,
    /// Repeated epochs until the log-likelihood improvement stalls (EM).
    Iterative,
}

/// A model trainable through the sufficient-statistics protocol.
pub trait Trainable: Summarize {
    /// Apply accumulated statistics as a parameter update. Runs
    /// exclusively: single writer, no concurrent readers.
    fn apply_summaries(&mut self, stats: &SuffStats, inertia: f64) -> Result<()>;

    fn training_mode(&self) -> TrainingMode;
}

/// Summarizes up to `limit` batches from `source` (all remaining when
/// `limit` is None), fanning waves of batches across `worker_count`
/// threads and merging partial statistics in batch-index order.
/// Returns None when the source yields no further batch.
fn summarize_some<M, S>(
    model: &M,
    source: &mut S,
    limit: Option<usize>,
    worker_count: usize,
) -> Result<Option<SuffStats>>
where
    M: Summarize + ?Sized,
    S: BatchSource<Batch = M::Batch> + ?Sized,
{
    let mut acc: Option<SuffStats> = None;
    let mut taken = 0usize;
    loop {
        let wave_cap = match limit {
            Some(l) => worker_count.min(l - taken),
            None => worker_count,
        };
        if wave_cap == 0 {
            break;
        }
        let mut wave: Vec<M::Batch> = Vec::with_capacity(wave_cap);
        while wave.len() < wave_cap {
            match source.next_batch()? {
                Some(b) => wave.push(b),
                None => break,
            }
        }
        if wave.is_empty() {
            break;
        }
        taken += wave.len();

        let partials: Vec<Result<SuffStats>> = if worker_count == 1 || wave.len() == 1 {
            wave.iter().map(|b| model.summarize(b)).collect()
        } else {
            thread::scope(|scope| {
                let handles: Vec<_> = wave
                    .iter()
                    .map(|b| scope.spawn(move || model.summarize(b)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("summarize worker panicked"))
                    .collect()
            })
        };
        // First worker error wins; remaining work is abandoned.
        for partial in partials {
            let partial = partial?;
            match &mut acc {
                None => acc = Some(partial),
                Some(a) => a.merge_from(&partial)?,
            }
        }
    }
    Ok(acc)
}

/// One full pass of summarize over `source`, partitioned across workers.
pub fn parallel_summarize<M, S>(model: &M, source: &mut S, config: &FitConfig) -> Result<SuffStats>
where
    M: Summarize + ?Sized,
    S: BatchSource<Batch = M::Batch> + ?Sized,
{
    config.validate()?;
    source.reset()?;
    summarize_some(model, source, None, config.worker_count)?.ok_or(Error::EmptySource)
}

/// Train `model` on `source`. Single-pass models get exactly one
/// summarize pass and one update; iterative models run EM epochs with an
/// update per `batches_per_epoch` group until the improvement in total
/// log-likelihood falls below `stop_threshold` or `max_iterations` is
/// reached.
pub fn fit<M, S>(model: &mut M, source: &mut S, config: &FitConfig) -> Result<FitReport>
where
    M: Trainable + ?Sized,
    S: BatchSource<Batch = M::Batch> + ?Sized,
{
    config.validate()?;
    match model.training_mode() {
        TrainingMode::SinglePass => {
            let stats = parallel_summarize(model, source, config)?;
            if stats.weight() <= 0.0 {
                return Err(Error::ZeroTotalWeight);
            }
            model.apply_summaries(&stats, config.inertia)?;
            Ok(FitReport {
                log_likelihoods: stats.log_likelihood().into_iter().collect(),
                iterations_run: 1,
                improvement_at_stop: 0.0,
            })
        }
        TrainingMode::Iterative => {
            let group_limit = match config.batches_per_epoch {
                BatchesPerEpoch::All => None,
                BatchesPerEpoch::Count(n) => Some(n),
            };
            let mut report = FitReport::default();
            for _ in 0..config.max_iterations {
                source.reset()?;
                let mut epoch_ll = 0.0;
                let mut any = false;
                loop {
                    let stats =
                        match summarize_some(model, source, group_limit, config.worker_count)? {
                            Some(s) => s,
                            None => break,
                        };
                    any = true;
                    epoch_ll += stats.log_likelihood().unwrap_or(0.0);
                    if stats.weight() > 0.0 {
                        model.apply_summaries(&stats, config.inertia)?;
                    }
                }
                if !any {
                    return Err(Error::EmptySource);
                }
                report.log_likelihoods.push(epoch_ll);
                report.iterations_run += 1;
                let n = report.log_likelihoods.len();
                if n >= 2 {
                    report.improvement_at_stop =
                        report.log_likelihoods[n - 1] - report.log_likelihoods[n - 2];
                    if report.improvement_at_stop < config.stop_threshold {
                        break;
                    }
                }
            }
            Ok(report)
        }
    }
}

impl Summarize for Distribution {
    type Batch = DataBatch;

    fn summarize(&self, batch: &DataBatch) -> Result<SuffStats> {
        Distribution::summarize(self, batch)
    }
}

impl Trainable for Distribution {
    fn apply_summaries(&mut self, stats: &SuffStats, inertia: f64) -> Result<()> {
        self.from_summaries(stats, inertia)
    }

    fn training_mode(&self) -> TrainingMode {
        TrainingMode::SinglePass
    }
}
