//! Order-k Markov chains over integer symbols.
//!
//! Positions before the order are scored by unconditional per-position
//! initial distributions; later positions condition on the previous
//! `order` symbols. Contexts live in a map rather than a dense table —
//! an order-3 chain over a 100-symbol alphabet would otherwise need 10^8
//! cells. Fitting is weighted n-gram counting, which is additive, so
//! out-of-core and parallel training come straight from the engine.

use std::collections::BTreeMap;

use crate::data::{BatchSource, Sequence};
use crate::engine::{self, FitConfig, Summarize, Trainable, TrainingMode};
use crate::error::{Error, Result};
use crate::stats::{NgramStats, SuffStats};
use rand::Rng;

/// Pseudocount added to every count cell before normalization.
pub const NGRAM_PSEUDOCOUNT: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct MarkovChain {
    order: usize,
    alphabet: usize,
    /// One distribution per position 0..order-1.
    initials: Vec<Vec<f64>>,
    /// Length-`order` context → distribution over the next symbol.
    /// Absent contexts score as uniform.
    transitions: BTreeMap<Vec<u32>, Vec<f64>>,
}

fn normalize_with_pseudocount(counts: &[f64]) -> Vec<f64> {
    let total: f64 = counts.iter().sum::<f64>() + NGRAM_PSEUDOCOUNT * counts.len() as f64;
    counts
        .iter()
        .map(|&c| (c + NGRAM_PSEUDOCOUNT) / total)
        .collect()
}

impl MarkovChain {
    pub fn new(
        order: usize,
        alphabet: usize,
        initials: Vec<Vec<f64>>,
        transitions: BTreeMap<Vec<u32>, Vec<f64>>,
    ) -> Result<Self> {
        if order == 0 || alphabet == 0 {
            return Err(Error::InvalidConfig(
                "order and alphabet size must be >= 1".into(),
            ));
        }
        if initials.len() != order {
            return Err(Error::ShapeMismatch(format!(
                "{} initial distributions for order {}",
                initials.len(),
                order
            )));
        }
        for dist in initials.iter().chain(transitions.values()) {
            if dist.len() != alphabet {
                return Err(Error::ShapeMismatch(format!(
                    "distribution over {} symbols for alphabet {}",
                    dist.len(),
                    alphabet
                )));
            }
            let total: f64 = dist.iter().sum();
            if (total - 1.0).abs() > 1e-12 || dist.iter().any(|&p| p < 0.0) {
                return Err(Error::InvalidDocument(format!(
                    "symbol distribution sums to {}, expected 1",
                    total
                )));
            }
        }
        for ctx in transitions.keys() {
            if ctx.len() != order || ctx.iter().any(|&s| s as usize >= alphabet) {
                return Err(Error::InvalidDocument(format!(
                    "bad transition context {:?} for order {} alphabet {}",
                    ctx, order, alphabet
                )));
            }
        }
        Ok(MarkovChain {
            order,
            alphabet,
            initials,
            transitions,
        })
    }

    /// Uniform chain with an empty transition table.
    fn uninitialized(order: usize, alphabet: usize) -> Result<Self> {
        let u = vec![1.0 / alphabet as f64; alphabet];
        MarkovChain::new(order, alphabet, vec![u; order], BTreeMap::new())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn initials(&self) -> &[Vec<f64>] {
        &self.initials
    }

    pub fn transitions(&self) -> &BTreeMap<Vec<u32>, Vec<f64>> {
        &self.transitions
    }

    fn check_symbol(&self, s: usize) -> Result<usize> {
        if s >= self.alphabet {
            return Err(Error::CategoryOutOfRange {
                index: s,
                categories: self.alphabet,
            });
        }
        Ok(s)
    }

    /// Next-symbol distribution for a context; uniform when unseen.
    pub fn context_probs(&self, context: &[u32]) -> Vec<f64> {
        match self.transitions.get(context) {
            Some(p) => p.clone(),
            None => vec![1.0 / self.alphabet as f64; self.alphabet],
        }
    }

    pub fn log_probability(&self, seq: &Sequence) -> Result<f64> {
        let t_len = seq.len();
        if t_len == 0 {
            return Err(Error::EmptySequence);
        }
        let symbols: Vec<usize> = (0..t_len)
            .map(|t| self.check_symbol(seq.symbol(t)?))
            .collect::<Result<_>>()?;
        let mut lp = 0.0;
        for (t, &s) in symbols.iter().enumerate() {
            if t < self.order {
                lp += self.initials[t][s].ln();
            } else {
                let ctx: Vec<u32> = symbols[t - self.order..t]
                    .iter()
                    .map(|&x| x as u32)
                    .collect();
                lp += self.context_probs(&ctx)[s].ln();
            }
        }
        Ok(lp)
    }

    /// Ancestral sampling of a fixed-length symbol sequence.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, length: usize) -> Result<Vec<usize>> {
        if length == 0 {
            return Err(Error::EmptySequence);
        }
        let mut out = Vec::with_capacity(length);
        for t in 0..length {
            let probs = if t < self.order {
                self.initials[t].clone()
            } else {
                let ctx: Vec<u32> = out[t - self.order..t].iter().map(|&x: &usize| x as u32).collect();
                self.context_probs(&ctx)
            };
            let target = rng.gen::<f64>();
            let mut acc = 0.0;
            let mut pick = self.alphabet - 1;
            for (s, &p) in probs.iter().enumerate() {
                acc += p;
                if target < acc {
                    pick = s;
                    break;
                }
            }
            out.push(pick);
        }
        Ok(out)
    }

    fn zero_stats(&self) -> NgramStats {
        NgramStats {
            order: self.order,
            alphabet: self.alphabet,
            initial_counts: vec![vec![0.0; self.alphabet]; self.order],
            transition_counts: BTreeMap::new(),
            w_sum: 0.0,
        }
    }
}

impl Summarize for MarkovChain {
    type Batch = Vec<Sequence>;

    fn summarize(&self, batch: &Vec<Sequence>) -> Result<SuffStats> {
        let mut stats = self.zero_stats();
        for seq in batch {
            let w = seq.weight();
            let symbols: Vec<usize> = (0..seq.len())
                .map(|t| self.check_symbol(seq.symbol(t)?))
                .collect::<Result<_>>()?;
            for (t, &s) in symbols.iter().enumerate() {
                if t < self.order {
                    stats.initial_counts[t][s] += w;
                } else {
                    let ctx: Vec<u32> = symbols[t - self.order..t]
                        .iter()
                        .map(|&x| x as u32)
                        .collect();
                    stats
                        .transition_counts
                        .entry(ctx)
                        .or_insert_with(|| vec![0.0; self.alphabet])[s] += w;
                }
            }
            stats.w_sum += w;
        }
        Ok(SuffStats::Ngram(stats))
    }
}

impl Trainable for MarkovChain {
    fn apply_summaries(&mut self, stats: &SuffStats, inertia: f64) -> Result<()> {
        let s = match stats {
            SuffStats::Ngram(s) => s,
            other => {
                return Err(Error::StatsKindMismatch {
                    left: "Ngram",
                    right: other.kind(),
                })
            }
        };
        if s.order != self.order || s.alphabet != self.alphabet {
            return Err(Error::ShapeMismatch(format!(
                "order-{} alphabet-{} statistics for an order-{} alphabet-{} chain",
                s.order, s.alphabet, self.order, self.alphabet
            )));
        }
        if s.w_sum <= 0.0 {
            return Ok(());
        }
        for (t, counts) in s.initial_counts.iter().enumerate() {
            if counts.iter().sum::<f64>() <= 0.0 {
                continue;
            }
            let mle = normalize_with_pseudocount(counts);
            for (p, m) in self.initials[t].iter_mut().zip(&mle) {
                *p = inertia * *p + (1.0 - inertia) * m;
            }
            let z: f64 = self.initials[t].iter().sum();
            self.initials[t].iter_mut().for_each(|p| *p /= z);
        }
        for (ctx, counts) in &s.transition_counts {
            let mle = normalize_with_pseudocount(counts);
            let entry = self
                .transitions
                .entry(ctx.clone())
                .or_insert_with(|| vec![1.0 / self.alphabet as f64; self.alphabet]);
            for (p, m) in entry.iter_mut().zip(&mle) {
                *p = inertia * *p + (1.0 - inertia) * m;
            }
            let z: f64 = entry.iter().sum();
            entry.iter_mut().for_each(|p| *p /= z);
        }
        Ok(())
    }

    fn training_mode(&self) -> TrainingMode {
        TrainingMode::SinglePass
    }
}

/// Single-pass MLE fit of an order-k chain by weighted n-gram counting.
pub fn fit_chain<S>(
    order: usize,
    alphabet: usize,
    source: &mut S,
    config: &FitConfig,
) -> Result<MarkovChain>
where
    S: BatchSource<Batch = Vec<Sequence>> + ?Sized,
{
    let mut model = MarkovChain::uninitialized(order, alphabet)?;
    engine::fit(&mut model, source, config)?;
    Ok(model)
}
