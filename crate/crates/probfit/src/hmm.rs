//! Dense hidden Markov models with pluggable emission distributions.
//!
//! All recursions run in log space — no per-step scaling constants, and
//! underflow on long sequences is a non-issue. Baum-Welch plugs into the
//! shared engine loop: `summarize_bw` turns a batch of whole sequences
//! into additive expected-count statistics and the update step
//! renormalizes them, so out-of-core and parallel training work the same
//! way they do for every other model.

use crate::data::{BatchSource, Sequence};
use crate::distributions::{Distribution, FamilySpec};
use crate::engine::{self, FitConfig, FitReport, Summarize, Trainable, TrainingMode};
use crate::error::{Error, Result};
use crate::kmeans;
use crate::math::logsumexp;
use crate::stats::{HmmStats, SuffStats};
use crate::DataBatch;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

/// Pseudocount added to every transition (and end) cell before
/// renormalization so a dense topology cannot lock a cell at zero.
pub const TRANSITION_PSEUDOCOUNT: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct HiddenMarkovModel {
    n_states: usize,
    log_initial: Vec<f64>,
    /// Row-major n×n, log P(next=j | current=i).
    log_transitions: Vec<f64>,
    /// Log probability of terminating from each state; absent means
    /// sequences may stop anywhere at no cost.
    log_ends: Option<Vec<f64>>,
    emissions: Vec<Distribution>,
}

impl HiddenMarkovModel {
    /// Builds a model from probability-space parameters.
    pub fn new(
        initial: Vec<f64>,
        transitions: Vec<Vec<f64>>,
        ends: Option<Vec<f64>>,
        emissions: Vec<Distribution>,
    ) -> Result<Self> {
        let n = emissions.len();
        if n == 0 {
            return Err(Error::InvalidConfig("an HMM needs at least one state".into()));
        }
        if initial.len() != n || transitions.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} initial / {} transition rows for {} states",
                initial.len(),
                transitions.len(),
                n
            )));
        }
        if let Some(e) = &ends {
            if e.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "{} end probabilities for {} states",
                    e.len(),
                    n
                )));
            }
        }
        let dim = emissions[0].dimension();
        if emissions.iter().any(|e| e.dimension() != dim) {
            return Err(Error::ShapeMismatch(
                "emission distributions must share a dimension".into(),
            ));
        }
        let init_sum: f64 = initial.iter().sum();
        if (init_sum - 1.0).abs() > 1e-10 || initial.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidDocument(format!(
                "initial state probabilities must sum to 1, got {}",
                init_sum
            )));
        }
        let mut log_transitions = Vec::with_capacity(n * n);
        for (i, row) in transitions.iter().enumerate() {
            if row.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "transition row {} has {} entries for {} states",
                    i,
                    row.len(),
                    n
                )));
            }
            let mut total: f64 = row.iter().sum();
            if let Some(e) = &ends {
                total += e[i];
            }
            if (total - 1.0).abs() > 1e-10 || row.iter().any(|&p| p < 0.0) {
                return Err(Error::InvalidDocument(format!(
                    "transition row {} plus end mass sums to {}, expected 1",
                    i, total
                )));
            }
            log_transitions.extend(row.iter().map(|&p| p.ln()));
        }
        Ok(HiddenMarkovModel {
            n_states: n,
            log_initial: initial.iter().map(|&p| p.ln()).collect(),
            log_transitions,
            log_ends: ends.map(|e| e.iter().map(|&p| p.ln()).collect()),
            emissions,
        })
    }

    /// Uniform initial/transition model with the given emissions, no end
    /// state.
    pub fn uniform(emissions: Vec<Distribution>) -> Result<Self> {
        let n = emissions.len();
        let u = 1.0 / n as f64;
        HiddenMarkovModel::new(vec![u; n], vec![vec![u; n]; n], None, emissions)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn dimension(&self) -> usize {
        self.emissions[0].dimension()
    }

    pub fn emissions(&self) -> &[Distribution] {
        &self.emissions
    }

    pub fn initial(&self) -> Vec<f64> {
        self.log_initial.iter().map(|l| l.exp()).collect()
    }

    pub fn transitions(&self) -> Vec<Vec<f64>> {
        (0..self.n_states)
            .map(|i| {
                self.log_transitions[i * self.n_states..(i + 1) * self.n_states]
                    .iter()
                    .map(|l| l.exp())
                    .collect()
            })
            .collect()
    }

    pub fn ends(&self) -> Option<Vec<f64>> {
        self.log_ends
            .as_ref()
            .map(|e| e.iter().map(|l| l.exp()).collect())
    }

    /// T×n matrix of per-step emission log-probabilities.
    fn emit_matrix(&self, seq: &Sequence) -> Result<Vec<f64>> {
        let t_len = seq.len();
        if t_len == 0 {
            return Err(Error::EmptySequence);
        }
        let n = self.n_states;
        let mut emit = vec![0.0; t_len * n];
        for t in 0..t_len {
            let x = seq.obs(t);
            for j in 0..n {
                emit[t * n + j] = self.emissions[j].log_probability(x)?;
            }
        }
        Ok(emit)
    }

    fn forward_with(&self, emit: &[f64], t_len: usize) -> (Vec<f64>, f64) {
        let n = self.n_states;
        let mut alpha = vec![f64::NEG_INFINITY; t_len * n];
        for j in 0..n {
            alpha[j] = self.log_initial[j] + emit[j];
        }
        let mut scratch = vec![0.0; n];
        for t in 1..t_len {
            for j in 0..n {
                for i in 0..n {
                    scratch[i] = alpha[(t - 1) * n + i] + self.log_transitions[i * n + j];
                }
                alpha[t * n + j] = emit[t * n + j] + logsumexp(&scratch);
            }
        }
        let last = &alpha[(t_len - 1) * n..t_len * n];
        let loglik = match &self.log_ends {
            Some(e) => {
                let terms: Vec<f64> = last.iter().zip(e).map(|(a, le)| a + le).collect();
                logsumexp(&terms)
            }
            None => logsumexp(last),
        };
        (alpha, loglik)
    }

    fn backward_with(&self, emit: &[f64], t_len: usize) -> Vec<f64> {
        let n = self.n_states;
        let mut beta = vec![0.0; t_len * n];
        if let Some(e) = &self.log_ends {
            beta[(t_len - 1) * n..t_len * n].copy_from_slice(e);
        }
        let mut scratch = vec![0.0; n];
        for t in (0..t_len - 1).rev() {
            for i in 0..n {
                for j in 0..n {
                    scratch[j] = self.log_transitions[i * n + j]
                        + emit[(t + 1) * n + j]
                        + beta[(t + 1) * n + j];
                }
                beta[t * n + i] = logsumexp(&scratch);
            }
        }
        beta
    }

    /// Log-space forward pass: returns the T×n log-alpha matrix
    /// (row-major) and the sequence log-likelihood.
    pub fn forward(&self, seq: &Sequence) -> Result<(Vec<f64>, f64)> {
        let emit = self.emit_matrix(seq)?;
        Ok(self.forward_with(&emit, seq.len()))
    }

    /// Log-space backward pass: the T×n log-beta matrix (row-major).
    pub fn backward(&self, seq: &Sequence) -> Result<Vec<f64>> {
        let emit = self.emit_matrix(seq)?;
        Ok(self.backward_with(&emit, seq.len()))
    }

    /// Sequence log-likelihood under the model.
    pub fn log_probability(&self, seq: &Sequence) -> Result<f64> {
        Ok(self.forward(seq)?.1)
    }

    /// Most probable state path and its log joint probability. Ties in
    /// the max-product recursion break to the lower state index.
    pub fn viterbi(&self, seq: &Sequence) -> Result<(Vec<usize>, f64)> {
        let emit = self.emit_matrix(seq)?;
        let t_len = seq.len();
        let n = self.n_states;
        let mut delta = vec![f64::NEG_INFINITY; t_len * n];
        let mut back = vec![0usize; t_len * n];
        for j in 0..n {
            delta[j] = self.log_initial[j] + emit[j];
        }
        for t in 1..t_len {
            for j in 0..n {
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0;
                for i in 0..n {
                    let v = delta[(t - 1) * n + i] + self.log_transitions[i * n + j];
                    if v > best {
                        best = v;
                        arg = i;
                    }
                }
                delta[t * n + j] = emit[t * n + j] + best;
                back[t * n + j] = arg;
            }
        }
        let mut best = f64::NEG_INFINITY;
        let mut last = 0;
        for j in 0..n {
            let end_term = self.log_ends.as_ref().map_or(0.0, |e| e[j]);
            let v = delta[(t_len - 1) * n + j] + end_term;
            if v > best {
                best = v;
                last = j;
            }
        }
        let mut path = vec![0usize; t_len];
        path[t_len - 1] = last;
        for t in (1..t_len).rev() {
            path[t - 1] = back[t * n + path[t]];
        }
        Ok((path, best))
    }

    /// Posterior state marginals γ[t][j] = P(state_t = j | seq), one row
    /// per time step.
    pub fn predict_proba(&self, seq: &Sequence) -> Result<Vec<Vec<f64>>> {
        let emit = self.emit_matrix(seq)?;
        let t_len = seq.len();
        let n = self.n_states;
        let (alpha, loglik) = self.forward_with(&emit, t_len);
        if !loglik.is_finite() {
            return Err(Error::ZeroProbabilitySequence(0));
        }
        let beta = self.backward_with(&emit, t_len);
        Ok((0..t_len)
            .map(|t| {
                (0..n)
                    .map(|j| (alpha[t * n + j] + beta[t * n + j] - loglik).exp())
                    .collect()
            })
            .collect())
    }

    fn zero_stats(&self) -> HmmStats {
        let n = self.n_states;
        HmmStats {
            init_mass: vec![0.0; n],
            trans_mass: vec![0.0; n * n],
            end_mass: self.log_ends.as_ref().map(|_| vec![0.0; n]),
            emissions: self.emissions.iter().map(|e| e.zero_stats()).collect(),
            log_likelihood: 0.0,
            seq_weight: 0.0,
        }
    }

    /// Samples a fixed-length sequence, ignoring any end state.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, len: usize) -> Result<Sequence> {
        if len == 0 {
            return Err(Error::EmptySequence);
        }
        let initial = self.initial();
        let transitions = self.transitions();
        let mut state = sample_index(&initial, rng);
        let mut flat = Vec::with_capacity(len * self.dimension());
        for _ in 0..len {
            flat.extend(self.emissions[state].sample(rng));
            state = sample_index(&transitions[state], rng);
        }
        Sequence::new(flat, self.dimension())
    }
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if target < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// One E-step: expected initial, transition, end, and emission counts
/// for a batch of whole sequences.
impl Summarize for HiddenMarkovModel {
    type Batch = Vec<Sequence>;

    fn summarize(&self, batch: &Vec<Sequence>) -> Result<SuffStats> {
        let n = self.n_states;
        let mut stats = self.zero_stats();
        for (idx, seq) in batch.iter().enumerate() {
            let emit = self.emit_matrix(seq)?;
            let t_len = seq.len();
            let (alpha, loglik) = self.forward_with(&emit, t_len);
            if !loglik.is_finite() {
                return Err(Error::ZeroProbabilitySequence(idx));
            }
            let beta = self.backward_with(&emit, t_len);
            let w = seq.weight();

            for t in 0..t_len {
                let x = seq.obs(t);
                for j in 0..n {
                    let gamma = (alpha[t * n + j] + beta[t * n + j] - loglik).exp();
                    if t == 0 {
                        stats.init_mass[j] += w * gamma;
                    }
                    if t == t_len - 1 {
                        if let Some(end) = &mut stats.end_mass {
                            end[j] += w * gamma;
                        }
                    }
                    self.emissions[j].accumulate(&mut stats.emissions[j], x, w * gamma)?;
                }
            }
            for t in 0..t_len - 1 {
                for i in 0..n {
                    for j in 0..n {
                        let xi = (alpha[t * n + i]
                            + self.log_transitions[i * n + j]
                            + emit[(t + 1) * n + j]
                            + beta[(t + 1) * n + j]
                            - loglik)
                            .exp();
                        stats.trans_mass[i * n + j] += w * xi;
                    }
                }
            }
            stats.log_likelihood += w * loglik;
            stats.seq_weight += w;
        }
        Ok(SuffStats::Hmm(stats))
    }
}

impl Trainable for HiddenMarkovModel {
    fn apply_summaries(&mut self, stats: &SuffStats, inertia: f64) -> Result<()> {
        let s = match stats {
            SuffStats::Hmm(s) => s,
            other => {
                return Err(Error::StatsKindMismatch {
                    left: "Hmm",
                    right: other.kind(),
                })
            }
        };
        let n = self.n_states;
        if s.init_mass.len() != n || s.trans_mass.len() != n * n {
            return Err(Error::ShapeMismatch(format!(
                "statistics for {} states applied to a {}-state model",
                s.init_mass.len(),
                n
            )));
        }

        let init_total: f64 = s.init_mass.iter().sum();
        if init_total > 0.0 {
            let mut probs: Vec<f64> = self
                .log_initial
                .iter()
                .zip(&s.init_mass)
                .map(|(l, m)| inertia * l.exp() + (1.0 - inertia) * (m / init_total))
                .collect();
            let z: f64 = probs.iter().sum();
            for p in &mut probs {
                *p /= z;
            }
            self.log_initial = probs.iter().map(|p| p.ln()).collect();
        }

        for i in 0..n {
            let row = &s.trans_mass[i * n..(i + 1) * n];
            let end_m = s.end_mass.as_ref().map(|e| e[i]);
            let raw: f64 = row.iter().sum::<f64>() + end_m.unwrap_or(0.0);
            if raw <= 0.0 {
                continue; // starved state keeps its old parameters
            }
            let cells = n + end_m.map_or(0, |_| 1);
            let total = raw + TRANSITION_PSEUDOCOUNT * cells as f64;
            let mut probs: Vec<f64> = (0..n)
                .map(|j| {
                    let mle = (row[j] + TRANSITION_PSEUDOCOUNT) / total;
                    inertia * self.log_transitions[i * n + j].exp() + (1.0 - inertia) * mle
                })
                .collect();
            let mut end_p = end_m.map(|m| {
                let mle = (m + TRANSITION_PSEUDOCOUNT) / total;
                inertia * self.log_ends.as_ref().unwrap()[i].exp() + (1.0 - inertia) * mle
            });
            let z: f64 = probs.iter().sum::<f64>() + end_p.unwrap_or(0.0);
            for p in &mut probs {
                *p /= z;
            }
            if let Some(p) = &mut end_p {
                *p /= z;
            }
            for j in 0..n {
                self.log_transitions[i * n + j] = probs[j].ln();
            }
            if let (Some(p), Some(ends)) = (end_p, &mut self.log_ends) {
                ends[i] = p.ln();
            }
        }

        for (dist, es) in self.emissions.iter_mut().zip(&s.emissions) {
            dist.from_summaries(es, inertia)?;
        }
        Ok(())
    }

    fn training_mode(&self) -> TrainingMode {
        TrainingMode::Iterative
    }
}

/// k-means++ initialization over the pooled observations followed by
/// Baum-Welch through the engine loop. Transitions and initial start
/// uniform with no end state.
pub fn from_samples_hmm<S>(
    family: &FamilySpec,
    n_states: usize,
    source: &mut S,
    config: &FitConfig,
) -> Result<(HiddenMarkovModel, FitReport)>
where
    S: BatchSource<Batch = Vec<Sequence>> + ?Sized,
{
    config.validate()?;
    if n_states == 0 {
        return Err(Error::InvalidConfig("n_states must be >= 1".into()));
    }

    source.reset()?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    while let Some(batch) = source.next_batch()? {
        for seq in &batch {
            for t in 0..seq.len() {
                rows.push(seq.obs(t).to_vec());
                weights.push(seq.weight());
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptySource);
    }
    let dim = rows[0].len();
    let pooled = DataBatch::from_rows(&rows)?.with_weights(weights)?;

    let mut emissions = Vec::with_capacity(n_states);
    if n_states == 1 {
        let mut dist = family.default_distribution(dim)?;
        let stats = dist.summarize(&pooled)?;
        dist.from_summaries(&stats, 0.0)?;
        emissions.push(dist);
    } else {
        let km_config = FitConfig {
            max_iterations: 10,
            ..config.clone()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let seeds = kmeans::kmeanspp_init(&pooled, n_states, &mut rng)?;
        let km = kmeans::lloyd_from(&pooled, seeds, km_config.max_iterations)?;
        let mut per_cluster: Vec<(Distribution, SuffStats)> = (0..n_states)
            .map(|_| {
                let d = family.default_distribution(dim)?;
                let z = d.zero_stats();
                Ok((d, z))
            })
            .collect::<Result<_>>()?;
        for i in 0..pooled.n_rows() {
            let a = km.assign(pooled.row(i))?;
            let (d, st) = &mut per_cluster[a];
            d.accumulate(st, pooled.row(i), pooled.weight(i))?;
        }
        for (mut d, st) in per_cluster {
            d.from_summaries(&st, 0.0)?;
            emissions.push(d);
        }
    }

    let mut model = HiddenMarkovModel::uniform(emissions)?;
    let report = engine::fit(&mut model, source, config)?;
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SequenceMemorySource;
    use crate::distributions::UnivariateGaussian;
    use crate::stats::GaussianStats;
    use rand::Rng;

    fn gauss(mu: f64, s2: f64) -> Distribution {
        Distribution::Gaussian(UnivariateGaussian::new(mu, s2).unwrap())
    }

    fn seq(values: &[f64]) -> Sequence {
        Sequence::new(values.to_vec(), 1).unwrap()
    }

    /// Exhaustive path-sum oracle: log-likelihood, best path, and
    /// posterior marginals by brute force over n^T paths.
    struct Enumerated {
        loglik: f64,
        best_path: Vec<usize>,
        best_logp: f64,
        marginals: Vec<Vec<f64>>,
        init_expect: Vec<f64>,
        trans_expect: Vec<f64>,
    }

    fn enumerate(model: &HiddenMarkovModel, s: &Sequence) -> Enumerated {
        let n = model.n_states();
        let t_len = s.len();
        let initial = model.initial();
        let trans = model.transitions();
        let ends = model.ends();
        let n_paths = n.pow(t_len as u32);
        let mut log_probs = Vec::with_capacity(n_paths);
        let mut best_path = vec![0; t_len];
        let mut best_logp = f64::NEG_INFINITY;
        let mut marg = vec![vec![0.0; n]; t_len];
        let mut init_e = vec![0.0; n];
        let mut trans_e = vec![0.0; n * n];

        let mut paths = Vec::with_capacity(n_paths);
        for mut code in 0..n_paths {
            let mut path = vec![0usize; t_len];
            for t in (0..t_len).rev() {
                path[t] = code % n;
                code /= n;
            }
            let mut lp = initial[path[0]].ln()
                + model.emissions()[path[0]]
                    .log_probability(s.obs(0))
                    .unwrap();
            for t in 1..t_len {
                lp += trans[path[t - 1]][path[t]].ln()
                    + model.emissions()[path[t]]
                        .log_probability(s.obs(t))
                        .unwrap();
            }
            if let Some(e) = &ends {
                lp += e[path[t_len - 1]].ln();
            }
            if lp > best_logp {
                best_logp = lp;
                best_path = path.clone();
            }
            log_probs.push(lp);
            paths.push(path);
        }
        let loglik = logsumexp(&log_probs);
        for (path, &lp) in paths.iter().zip(&log_probs) {
            let p = (lp - loglik).exp();
            init_e[path[0]] += p;
            for t in 0..t_len {
                marg[t][path[t]] += p;
            }
            for t in 1..t_len {
                trans_e[path[t - 1] * n + path[t]] += p;
            }
        }
        Enumerated {
            loglik,
            best_path,
            best_logp,
            marginals: marg,
            init_expect: init_e,
            trans_expect: trans_e,
        }
    }

    fn random_model(n: usize, rng: &mut ChaCha8Rng, with_ends: bool) -> HiddenMarkovModel {
        let mut initial: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
        let z: f64 = initial.iter().sum();
        initial.iter_mut().for_each(|p| *p /= z);
        let mut ends = if with_ends { Some(vec![0.0; n]) } else { None };
        let transitions: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let cells = n + usize::from(with_ends);
                let mut row: Vec<f64> = (0..cells).map(|_| rng.gen_range(0.1..1.0)).collect();
                let z: f64 = row.iter().sum();
                row.iter_mut().for_each(|p| *p /= z);
                if let Some(e) = &mut ends {
                    e[i] = row.pop().unwrap();
                }
                row
            })
            .collect();
        let emissions = (0..n)
            .map(|_| gauss(rng.gen_range(-3.0..3.0), rng.gen_range(0.3..2.0)))
            .collect();
        HiddenMarkovModel::new(initial, transitions, ends, emissions).unwrap()
    }

    #[test]
    fn single_state_forward_is_a_plain_emission_sum() {
        let model = HiddenMarkovModel::new(
            vec![1.0],
            vec![vec![1.0]],
            None,
            vec![gauss(0.0, 1.0)],
        )
        .unwrap();
        let (_, ll) = model.forward(&seq(&[0.0, 0.0])).unwrap();
        assert!((ll - (-1.8378771)).abs() < 1e-6);
    }

    #[test]
    fn forward_matches_exhaustive_path_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = random_model(3, &mut rng, false);
        let s = seq(&[0.3, -1.2, 2.0, 0.1, -0.4, 1.7]);
        let oracle = enumerate(&model, &s);
        let (_, ll) = model.forward(&s).unwrap();
        assert!((ll - oracle.loglik).abs() < 1e-8, "{} vs {}", ll, oracle.loglik);
    }

    #[test]
    fn identical_emissions_make_states_irrelevant() {
        let s = seq(&[0.5, -0.5, 1.0]);
        let direct: f64 = (0..3)
            .map(|t| gauss(0.0, 1.0).log_probability(s.obs(t)).unwrap())
            .sum();
        for n in 1..=4 {
            let u = 1.0 / n as f64;
            let model = HiddenMarkovModel::new(
                vec![u; n],
                vec![vec![u; n]; n],
                None,
                vec![gauss(0.0, 1.0); n],
            )
            .unwrap();
            let (_, ll) = model.forward(&s).unwrap();
            assert!((ll - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn backward_base_case_and_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for with_ends in [false, true] {
            let model = random_model(4, &mut rng, with_ends);
            let s = seq(&[0.1, -0.7, 1.3, 0.9, -2.0]);
            let (alpha, ll) = model.forward(&s).unwrap();
            let beta = model.backward(&s).unwrap();
            let n = model.n_states();
            let t_len = s.len();
            for j in 0..n {
                let expected = match model.ends() {
                    Some(e) => e[j].ln(),
                    None => 0.0,
                };
                assert_eq!(beta[(t_len - 1) * n + j], expected);
            }
            for t in 0..t_len {
                let terms: Vec<f64> = (0..n)
                    .map(|j| alpha[t * n + j] + beta[t * n + j])
                    .collect();
                assert!((logsumexp(&terms) - ll).abs() < 1e-8, "t={}", t);
            }
        }
    }

    #[test]
    fn one_state_beta_is_the_suffix_emission_sum() {
        let model = HiddenMarkovModel::new(
            vec![1.0],
            vec![vec![1.0]],
            None,
            vec![gauss(1.0, 2.0)],
        )
        .unwrap();
        let s = seq(&[0.0, 2.0, -1.0]);
        let beta = model.backward(&s).unwrap();
        for t in 0..3 {
            let suffix: f64 = (t + 1..3)
                .map(|u| model.emissions()[0].log_probability(s.obs(u)).unwrap())
                .sum();
            assert!((beta[t] - suffix).abs() < 1e-12);
        }
    }

    #[test]
    fn viterbi_single_state_and_bound() {
        let model = HiddenMarkovModel::new(
            vec![1.0],
            vec![vec![1.0]],
            None,
            vec![gauss(0.0, 1.0)],
        )
        .unwrap();
        let s = seq(&[0.2, -0.3, 0.8]);
        let (path, lj) = model.viterbi(&s).unwrap();
        let (_, ll) = model.forward(&s).unwrap();
        assert_eq!(path, vec![0, 0, 0]);
        assert!((lj - ll).abs() < 1e-12);
    }

    #[test]
    fn viterbi_matches_exhaustive_max() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for trial in 0..20 {
            let with_ends = trial % 2 == 1;
            let model = random_model(2, &mut rng, with_ends);
            let vals: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let s = seq(&vals);
            let oracle = enumerate(&model, &s);
            let (path, lj) = model.viterbi(&s).unwrap();
            assert!((lj - oracle.best_logp).abs() < 1e-8);
            assert_eq!(path, oracle.best_path);
            let (_, ll) = model.forward(&s).unwrap();
            assert!(lj <= ll + 1e-12);
        }
    }

    #[test]
    fn deterministic_transitions_force_the_permutation_path() {
        // Cycle 0 -> 1 -> 2 -> 0 with shared-support emissions.
        let model = HiddenMarkovModel::new(
            vec![1.0, 0.0, 0.0],
            vec![
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![1.0, 0.0, 0.0],
            ],
            None,
            vec![gauss(0.0, 1.0), gauss(0.5, 1.0), gauss(-0.5, 1.0)],
        )
        .unwrap();
        let s = seq(&[3.0, -3.0, 0.0, 1.0, -1.0]);
        let (path, _) = model.viterbi(&s).unwrap();
        assert_eq!(path, vec![0, 1, 2, 0, 1]);
    }

    #[test]
    fn posterior_marginals_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let model = random_model(3, &mut rng, false);
        let vals: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let s = seq(&vals);
        let oracle = enumerate(&model, &s);
        let marg = model.predict_proba(&s).unwrap();
        for t in 0..5 {
            let row_sum: f64 = marg[t].iter().sum();
            assert!((row_sum - 1.0).abs() < 1e-10);
            for j in 0..3 {
                assert!((marg[t][j] - oracle.marginals[t][j]).abs() < 1e-8);
            }
        }
        // Single-state marginals are all 1.
        let one = HiddenMarkovModel::new(
            vec![1.0],
            vec![vec![1.0]],
            None,
            vec![gauss(0.0, 1.0)],
        )
        .unwrap();
        for row in one.predict_proba(&seq(&[0.0, 1.0])).unwrap() {
            assert_eq!(row, vec![1.0]);
        }
    }

    #[test]
    fn symmetric_model_gives_symmetric_marginals() {
        let model = HiddenMarkovModel::new(
            vec![0.5, 0.5],
            vec![vec![0.7, 0.3], vec![0.3, 0.7]],
            None,
            vec![gauss(-1.0, 1.0), gauss(1.0, 1.0)],
        )
        .unwrap();
        // Palindromic sequence symmetric around 0: the middle position
        // cannot favor either state.
        let marg = model.predict_proba(&seq(&[-1.0, 0.0, 1.0])).unwrap();
        assert!((marg[1][0] - 0.5).abs() < 1e-10);
        assert!((marg[1][1] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn single_state_summary_is_a_plain_summarize() {
        let model = HiddenMarkovModel::new(
            vec![1.0],
            vec![vec![1.0]],
            None,
            vec![gauss(0.0, 1.0)],
        )
        .unwrap();
        let s = seq(&[1.0, 2.0, 3.0, 4.0]);
        let stats = model.summarize(&vec![s.clone()]).unwrap();
        match stats {
            SuffStats::Hmm(h) => {
                assert!((h.trans_mass[0] - 3.0).abs() < 1e-12);
                assert!((h.init_mass[0] - 1.0).abs() < 1e-12);
                match &h.emissions[0] {
                    SuffStats::Gaussian(GaussianStats { w_sum, wx_sum, wx2_sum }) => {
                        assert!((w_sum - 4.0).abs() < 1e-12);
                        assert!((wx_sum - 10.0).abs() < 1e-12);
                        assert!((wx2_sum - 30.0).abs() < 1e-12);
                    }
                    _ => unreachable!(),
                }
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn summaries_are_additive_across_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let model = random_model(3, &mut rng, false);
        let a = seq(&[0.1, -0.5, 1.2, 0.7]);
        let b = seq(&[2.0, -1.0, 0.0]);
        let together = model.summarize(&vec![a.clone(), b.clone()]).unwrap();
        let separate = model
            .summarize(&vec![a])
            .unwrap()
            .merged(&model.summarize(&vec![b]).unwrap())
            .unwrap();
        match (&together, &separate) {
            (SuffStats::Hmm(x), SuffStats::Hmm(y)) => {
                for (p, q) in x.init_mass.iter().zip(&y.init_mass) {
                    assert!((p - q).abs() < 1e-9);
                }
                for (p, q) in x.trans_mass.iter().zip(&y.trans_mass) {
                    assert!((p - q).abs() < 1e-9);
                }
                assert!((x.log_likelihood - y.log_likelihood).abs() < 1e-9);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn expected_counts_match_path_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let model = random_model(2, &mut rng, false);
        let s = seq(&[0.4, -0.9, 1.1, 0.0]);
        let oracle = enumerate(&model, &s);
        let stats = model.summarize(&vec![s]).unwrap();
        match stats {
            SuffStats::Hmm(h) => {
                for j in 0..2 {
                    assert!((h.init_mass[j] - oracle.init_expect[j]).abs() < 1e-8);
                }
                for c in 0..4 {
                    assert!((h.trans_mass[c] - oracle.trans_expect[c]).abs() < 1e-8);
                }
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn from_summaries_normalizes_transition_mass() {
        let mut model = HiddenMarkovModel::new(
            vec![0.5, 0.5],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            None,
            vec![gauss(0.0, 1.0), gauss(1.0, 1.0)],
        )
        .unwrap();
        let stats = SuffStats::Hmm(HmmStats {
            init_mass: vec![1.0, 1.0],
            trans_mass: vec![1.0, 3.0, 2.0, 2.0],
            end_mass: None,
            emissions: vec![
                SuffStats::Gaussian(GaussianStats::default()),
                SuffStats::Gaussian(GaussianStats::default()),
            ],
            log_likelihood: 0.0,
            seq_weight: 1.0,
        });
        model.apply_summaries(&stats, 0.0).unwrap();
        let t = model.transitions();
        // Per-cell pseudocount shifts each entry by at most ~1.3e-9.
        assert!((t[0][0] - 0.25).abs() < 2e-9);
        assert!((t[0][1] - 0.75).abs() < 2e-9);
        assert!((t[1][0] - 0.5).abs() < 2e-9);
        assert!((t[1][1] - 0.5).abs() < 2e-9);
        for row in &t {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn fixed_point_statistics_leave_the_model_unchanged() {
        let before = HiddenMarkovModel::new(
            vec![0.3, 0.7],
            vec![vec![0.8, 0.2], vec![0.4, 0.6]],
            None,
            vec![gauss(-1.0, 0.5), gauss(2.0, 1.5)],
        )
        .unwrap();
        let mut model = before.clone();
        // Hand-built statistics whose normalized values equal the current
        // parameters; large masses drown out the pseudocount.
        let mass = 1e6;
        let stats = SuffStats::Hmm(HmmStats {
            init_mass: vec![0.3 * mass, 0.7 * mass],
            trans_mass: vec![0.8 * mass, 0.2 * mass, 0.4 * mass, 0.6 * mass],
            end_mass: None,
            emissions: vec![
                SuffStats::Gaussian(GaussianStats {
                    w_sum: mass,
                    wx_sum: -1.0 * mass,
                    wx2_sum: (1.0 + 0.5) * mass,
                }),
                SuffStats::Gaussian(GaussianStats {
                    w_sum: mass,
                    wx_sum: 2.0 * mass,
                    wx2_sum: (4.0 + 1.5) * mass,
                }),
            ],
            log_likelihood: 0.0,
            seq_weight: mass,
        });
        model.apply_summaries(&stats, 0.0).unwrap();
        for (a, b) in model.initial().iter().zip(before.initial()) {
            assert!((a - b).abs() < 1e-9);
        }
        for (ra, rb) in model.transitions().iter().zip(before.transitions()) {
            for (a, b) in ra.iter().zip(rb) {
                assert!((a - b).abs() < 1e-9);
            }
        }
        assert_eq!(model.emissions(), before.emissions());
    }

    #[test]
    fn starved_state_keeps_its_parameters() {
        let before = HiddenMarkovModel::new(
            vec![1.0, 0.0],
            vec![vec![0.9, 0.1], vec![0.3, 0.7]],
            None,
            vec![gauss(0.0, 1.0), gauss(5.0, 1.0)],
        )
        .unwrap();
        let mut model = before.clone();
        let stats = SuffStats::Hmm(HmmStats {
            init_mass: vec![2.0, 0.0],
            trans_mass: vec![3.0, 1.0, 0.0, 0.0],
            end_mass: None,
            emissions: vec![
                SuffStats::Gaussian(GaussianStats {
                    w_sum: 4.0,
                    wx_sum: 0.0,
                    wx2_sum: 4.0,
                }),
                SuffStats::Gaussian(GaussianStats::default()),
            ],
            log_likelihood: 0.0,
            seq_weight: 2.0,
        });
        model.apply_summaries(&stats, 0.0).unwrap();
        assert_eq!(model.transitions()[1], before.transitions()[1]);
        assert_eq!(model.emissions()[1], before.emissions()[1]);
    }

    fn two_state_corpus(seed: u64, n_seqs: usize, len: usize) -> Vec<Sequence> {
        let truth = HiddenMarkovModel::new(
            vec![0.5, 0.5],
            vec![vec![0.9, 0.1], vec![0.1, 0.9]],
            None,
            vec![gauss(0.0, 1.0), gauss(10.0, 1.0)],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n_seqs).map(|_| truth.sample(&mut rng, len).unwrap()).collect()
    }

    #[test]
    fn baum_welch_recovers_a_well_separated_model() {
        let seqs = two_state_corpus(21, 50, 200);
        let mut src = SequenceMemorySource::new(seqs, None);
        let config = FitConfig {
            max_iterations: 20,
            stop_threshold: 1e-3,
            ..FitConfig::default()
        };
        let (model, report) =
            from_samples_hmm(&FamilySpec::Gaussian, 2, &mut src, &config).unwrap();

        let mut means: Vec<(f64, usize)> = model
            .emissions()
            .iter()
            .enumerate()
            .map(|(i, e)| match e {
                Distribution::Gaussian(g) => (g.mu, i),
                _ => unreachable!(),
            })
            .collect();
        means.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        assert!((means[0].0 - 0.0).abs() < 0.2, "low mean {}", means[0].0);
        assert!((means[1].0 - 10.0).abs() < 0.2, "high mean {}", means[1].0);
        let t = model.transitions();
        for &(_, i) in &means {
            assert!((t[i][i] - 0.9).abs() < 0.05, "self-transition {}", t[i][i]);
        }
        for pair in report.log_likelihoods.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-8);
        }
        assert!(report.iterations_run >= 1);
    }

    #[test]
    fn one_state_from_samples_is_pooled_mle() {
        let seqs = vec![seq(&[1.0, 2.0]), seq(&[3.0, 4.0, 5.0])];
        let mut src = SequenceMemorySource::new(seqs, None);
        let config = FitConfig {
            max_iterations: 3,
            stop_threshold: 0.0,
            ..FitConfig::default()
        };
        let (model, _) = from_samples_hmm(&FamilySpec::Gaussian, 1, &mut src, &config).unwrap();
        match &model.emissions()[0] {
            Distribution::Gaussian(g) => {
                assert!((g.mu - 3.0).abs() < 1e-9);
                assert!((g.sigma2 - 2.0).abs() < 1e-9);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn empty_sequence_is_rejected() {
        let model = HiddenMarkovModel::new(
            vec![1.0],
            vec![vec![1.0]],
            None,
            vec![gauss(0.0, 1.0)],
        )
        .unwrap();
        assert!(Sequence::new(vec![], 1).is_err());
        // A dimension mismatch surfaces through the emission check.
        let s2 = Sequence::new(vec![0.0, 1.0], 2).unwrap();
        assert!(model.forward(&s2).is_err());
    }

    #[test]
    fn row_sums_stay_normalized_after_updates_with_ends() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut model = random_model(3, &mut rng, true);
        let vals: Vec<f64> = (0..12).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let batch = vec![seq(&vals[..6]), seq(&vals[6..])];
        for _ in 0..3 {
            let stats = model.summarize(&batch).unwrap();
            model.apply_summaries(&stats, 0.25).unwrap();
            let t = model.transitions();
            let e = model.ends().unwrap();
            for i in 0..3 {
                let total: f64 = t[i].iter().sum::<f64>() + e[i];
                assert!((total - 1.0).abs() < 1e-10);
            }
            let init_sum: f64 = model.initial().iter().sum();
            assert!((init_sum - 1.0).abs() < 1e-10);
        }
    }
}
