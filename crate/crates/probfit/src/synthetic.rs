//! Deterministic synthetic dataset generators used by the CLI and the
//! test suites. Every generator is a pure function of its arguments and
//! the seed.

use crate::data::Sequence;
use crate::distributions::{Distribution, UnivariateGaussian};
use crate::error::Result;
use crate::hmm::HiddenMarkovModel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as RandDistribution, StandardNormal};

/// Two overlapping Gaussian classes: class 0 centered at 0 and class 1
/// at 1 in every dimension, both with standard deviation `sigma`.
/// Returns rows, partially-hidden labels (every k-th row keeps its
/// label, the rest are -1), and the full ground-truth labels. Classes
/// alternate row by row, so both are balanced and both always have at
/// least one labeled row.
pub fn ellipses(
    n: usize,
    dim: usize,
    sigma: f64,
    labeled_fraction: f64,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<i64>, Vec<i64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stride = if labeled_fraction >= 1.0 {
        1
    } else if labeled_fraction <= 0.0 {
        usize::MAX
    } else {
        (1.0 / labeled_fraction).round() as usize
    };
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for i in 0..n {
        let class = (i % 2) as i64;
        let mean = class as f64;
        let row: Vec<f64> = (0..dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                mean + sigma * z
            })
            .collect();
        rows.push(row);
        truth.push(class);
        // Labeled rows come in adjacent pairs so the alternating classes
        // both receive labels at any fraction.
        let labeled = if stride <= 1 {
            true
        } else if stride == usize::MAX {
            false
        } else {
            i % (2 * stride) < 2
        };
        labels.push(if labeled { class } else { -1 });
    }
    (rows, labels, truth)
}

/// `k` well-separated Gaussian blobs with unit variance; blob j is
/// centered at 10·j in every dimension. Blobs alternate row by row.
pub fn gmm_blobs(n: usize, k: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let mean = 10.0 * (i % k) as f64;
            (0..dim)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    mean + z
                })
                .collect()
        })
        .collect()
}

/// The generating model behind `hmm_bench`: `n_states` states with
/// sticky self-transitions (0.9) and unit-variance Gaussian emissions at
/// 10·state in every dimension.
pub fn hmm_bench_model(n_states: usize, dim: usize) -> Result<HiddenMarkovModel> {
    let n = n_states;
    let initial = vec![1.0 / n as f64; n];
    let transitions: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if n == 1 {
                        1.0
                    } else if i == j {
                        0.9
                    } else {
                        0.1 / (n - 1) as f64
                    }
                })
                .collect()
        })
        .collect();
    let emissions: Vec<Distribution> = (0..n)
        .map(|i| {
            let mu = 10.0 * i as f64;
            if dim == 1 {
                Ok(Distribution::Gaussian(UnivariateGaussian::new(mu, 1.0)?))
            } else {
                Ok(Distribution::MultivariateGaussian(
                    crate::distributions::MultivariateGaussian::diagonal(
                        vec![mu; dim],
                        vec![1.0; dim],
                    )?,
                ))
            }
        })
        .collect::<Result<_>>()?;
    HiddenMarkovModel::new(initial, transitions, None, emissions)
}

/// Sequence corpus sampled from `hmm_bench_model`.
pub fn hmm_bench(
    n_sequences: usize,
    length: usize,
    n_states: usize,
    dim: usize,
    seed: u64,
) -> Result<Vec<Sequence>> {
    let model = hmm_bench_model(n_states, dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_sequences).map(|_| model.sample(&mut rng, length)).collect()
}

/// The generating chain behind `markov_corpus`: a sticky first-order
/// chain where each symbol repeats with probability 0.7.
pub fn markov_model(alphabet: usize) -> Result<crate::markovchain::MarkovChain> {
    let mut transitions = std::collections::BTreeMap::new();
    for s in 0..alphabet {
        let row: Vec<f64> = (0..alphabet)
            .map(|t| {
                if alphabet == 1 {
                    1.0
                } else if s == t {
                    0.7
                } else {
                    0.3 / (alphabet - 1) as f64
                }
            })
            .collect();
        transitions.insert(vec![s as u32], row);
    }
    crate::markovchain::MarkovChain::new(
        1,
        alphabet,
        vec![vec![1.0 / alphabet as f64; alphabet]],
        transitions,
    )
}

/// Symbol sequences sampled from `markov_model`.
pub fn markov_corpus(
    n_sequences: usize,
    length: usize,
    alphabet: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    let model = markov_model(alphabet)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_sequences).map(|_| model.sample(&mut rng, length)).collect()
}

/// The generating network behind `bayesnet_rows`: a binary chain
/// x0 → x1 → … with strong dependencies.
pub fn bayesnet_model(n_variables: usize) -> Result<crate::bayesnet::DiscreteBayesianNetwork> {
    let variables = (0..n_variables)
        .map(|i| crate::bayesnet::Variable::new(format!("x{}", i), 2))
        .collect();
    let parents: Vec<Vec<usize>> = (0..n_variables)
        .map(|v| if v == 0 { vec![] } else { vec![v - 1] })
        .collect();
    let cpts: Vec<Vec<Vec<f64>>> = (0..n_variables)
        .map(|v| {
            if v == 0 {
                vec![vec![0.5, 0.5]]
            } else {
                vec![vec![0.85, 0.15], vec![0.15, 0.85]]
            }
        })
        .collect();
    crate::bayesnet::DiscreteBayesianNetwork::new(variables, parents, cpts)
}

/// Complete discrete assignments sampled from `bayesnet_model`.
pub fn bayesnet_rows(n: usize, n_variables: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let model = bayesnet_model(n_variables)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| model.sample(&mut rng).iter().map(|&v| v as f64).collect())
        .collect())
}
