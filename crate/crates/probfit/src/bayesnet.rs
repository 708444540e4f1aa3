//! Discrete Bayesian networks: CPT fitting on a fixed DAG, joint
//! scoring, Chow-Liu tree structure learning, and exact inference by
//! enumeration on small networks.
//!
//! CPT counts are plain additive statistics, so fitting shares the
//! engine's out-of-core and parallel machinery. Structure learning is
//! restricted to trees: pairwise mutual information from weighted
//! counts, maximum-weight spanning tree, directed away from variable 0.

use std::collections::VecDeque;

use crate::data::{BatchSource, DataBatch};
use crate::engine::{self, FitConfig, Summarize, Trainable, TrainingMode};
use crate::error::{Error, Result};
use crate::stats::{CptStats, PairCountStats, SuffStats};
use rand::Rng;

/// Pseudocount added to every CPT cell before normalization.
pub const CPT_PSEUDOCOUNT: f64 = 1e-8;

/// Joint-assignment budget for enumeration inference.
pub const ENUMERATION_BUDGET: u128 = 1 << 20;

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub cardinality: usize,
}

impl Variable {
    pub fn new(name: impl Into<String>, cardinality: usize) -> Self {
        Variable {
            name: name.into(),
            cardinality,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteBayesianNetwork {
    variables: Vec<Variable>,
    /// Parent ids per variable, fixed order.
    parents: Vec<Vec<usize>>,
    /// cpts[var][parent_assignment_index][child_value]; parent
    /// assignments are mixed-radix with the last parent varying fastest.
    cpts: Vec<Vec<Vec<f64>>>,
    topo: Vec<usize>,
}

fn topological_order(n: usize, parents: &[Vec<usize>]) -> Result<Vec<usize>> {
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut in_degree = vec![0usize; n];
    for (v, ps) in parents.iter().enumerate() {
        for &p in ps {
            if p >= n || p == v {
                return Err(Error::CyclicStructure);
            }
            children[p].push(v);
            in_degree[v] += 1;
        }
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| in_degree[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &c in &children[v] {
            in_degree[c] -= 1;
            if in_degree[c] == 0 {
                queue.push_back(c);
            }
        }
    }
    if order.len() != n {
        return Err(Error::CyclicStructure);
    }
    Ok(order)
}

impl DiscreteBayesianNetwork {
    pub fn new(
        variables: Vec<Variable>,
        parents: Vec<Vec<usize>>,
        cpts: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let n = variables.len();
        if n == 0 || variables.iter().any(|v| v.cardinality == 0) {
            return Err(Error::InvalidConfig(
                "a network needs >= 1 variable, each with cardinality >= 1".into(),
            ));
        }
        if parents.len() != n || cpts.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} parent lists and {} CPTs for {} variables",
                parents.len(),
                cpts.len(),
                n
            )));
        }
        let topo = topological_order(n, &parents)?;
        for v in 0..n {
            let rows: usize = parents[v]
                .iter()
                .map(|&p| variables[p].cardinality)
                .product();
            if cpts[v].len() != rows {
                return Err(Error::ShapeMismatch(format!(
                    "CPT for variable {} has {} rows, expected {}",
                    v,
                    cpts[v].len(),
                    rows
                )));
            }
            for row in &cpts[v] {
                if row.len() != variables[v].cardinality {
                    return Err(Error::ShapeMismatch(format!(
                        "CPT row width {} for cardinality {}",
                        row.len(),
                        variables[v].cardinality
                    )));
                }
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > 1e-12 || row.iter().any(|&p| p < 0.0) {
                    return Err(Error::InvalidDocument(format!(
                        "CPT row for variable {} sums to {}, expected 1",
                        v, total
                    )));
                }
            }
        }
        Ok(DiscreteBayesianNetwork {
            variables,
            parents,
            cpts,
            topo,
        })
    }

    /// All-uniform CPTs over the given structure.
    pub fn uninitialized(variables: Vec<Variable>, parents: Vec<Vec<usize>>) -> Result<Self> {
        let cpts = (0..variables.len())
            .map(|v| {
                let rows: usize = parents[v]
                    .iter()
                    .map(|&p| variables[p].cardinality)
                    .product();
                let c = variables[v].cardinality;
                vec![vec![1.0 / c as f64; c]; rows]
            })
            .collect();
        DiscreteBayesianNetwork::new(variables, parents, cpts)
    }

    pub fn n_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn parents(&self) -> &[Vec<usize>] {
        &self.parents
    }

    pub fn cpts(&self) -> &[Vec<Vec<f64>>] {
        &self.cpts
    }

    fn parent_index(&self, v: usize, assignment: &[usize]) -> usize {
        let mut idx = 0;
        for &p in &self.parents[v] {
            idx = idx * self.variables[p].cardinality + assignment[p];
        }
        idx
    }

    fn check_assignment(&self, assignment: &[usize]) -> Result<()> {
        if assignment.len() != self.n_variables() {
            return Err(Error::ShapeMismatch(format!(
                "assignment of {} values for {} variables",
                assignment.len(),
                self.n_variables()
            )));
        }
        for (v, &val) in assignment.iter().enumerate() {
            if val >= self.variables[v].cardinality {
                return Err(Error::ValueOutOfRange {
                    value: val,
                    variable: v,
                    cardinality: self.variables[v].cardinality,
                });
            }
        }
        Ok(())
    }

    /// Joint log-probability of a complete assignment.
    pub fn log_probability(&self, assignment: &[usize]) -> Result<f64> {
        self.check_assignment(assignment)?;
        let mut lp = 0.0;
        for v in 0..self.n_variables() {
            let row = self.parent_index(v, assignment);
            lp += self.cpts[v][row][assignment[v]].ln();
        }
        Ok(lp)
    }

    /// Exact posterior over a query variable by enumerating every joint
    /// assignment consistent with the evidence.
    pub fn predict_proba(
        &self,
        evidence: &[Option<usize>],
        query: usize,
    ) -> Result<Vec<f64>> {
        let n = self.n_variables();
        if evidence.len() != n || query >= n {
            return Err(Error::ShapeMismatch(format!(
                "evidence over {} variables, query {}, for a {}-variable network",
                evidence.len(),
                query,
                n
            )));
        }
        for (v, e) in evidence.iter().enumerate() {
            if let Some(val) = e {
                if *val >= self.variables[v].cardinality {
                    return Err(Error::ValueOutOfRange {
                        value: *val,
                        variable: v,
                        cardinality: self.variables[v].cardinality,
                    });
                }
            }
        }
        let joint_size: u128 = self
            .variables
            .iter()
            .map(|v| v.cardinality as u128)
            .product();
        if joint_size > ENUMERATION_BUDGET {
            return Err(Error::EnumerationBudget(joint_size));
        }

        let free: Vec<usize> = (0..n).filter(|&v| evidence[v].is_none()).collect();
        let mut assignment: Vec<usize> =
            evidence.iter().map(|e| e.unwrap_or(0)).collect();
        let mut posterior = vec![0.0; self.variables[query].cardinality];
        loop {
            posterior[assignment[query]] += self.log_probability(&assignment)?.exp();
            // Mixed-radix odometer over the free variables.
            let mut pos = free.len();
            loop {
                if pos == 0 {
                    break;
                }
                let v = free[pos - 1];
                assignment[v] += 1;
                if assignment[v] < self.variables[v].cardinality {
                    break;
                }
                assignment[v] = 0;
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
        }
        let total: f64 = posterior.iter().sum();
        if total <= 0.0 {
            return Err(Error::ContradictoryEvidence);
        }
        for p in &mut posterior {
            *p /= total;
        }
        Ok(posterior)
    }

    fn zero_stats(&self) -> CptStats {
        CptStats {
            counts: self
                .cpts
                .iter()
                .map(|t| t.iter().map(|row| vec![0.0; row.len()]).collect())
                .collect(),
            w_sum: 0.0,
        }
    }

    fn row_values(&self, row: &[f64]) -> Result<Vec<usize>> {
        if row.len() != self.n_variables() {
            return Err(Error::DimensionMismatch {
                expected: self.n_variables(),
                got: row.len(),
            });
        }
        row.iter()
            .enumerate()
            .map(|(v, &x)| {
                if x < 0.0 || x.fract() != 0.0 || x as usize >= self.variables[v].cardinality {
                    return Err(Error::ValueOutOfRange {
                        value: x.max(0.0) as usize,
                        variable: v,
                        cardinality: self.variables[v].cardinality,
                    });
                }
                Ok(x as usize)
            })
            .collect()
    }

    /// Ancestral sample of a complete assignment.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let mut assignment = vec![0usize; self.n_variables()];
        for &v in &self.topo {
            let row = &self.cpts[v][self.parent_index(v, &assignment)];
            let target = rng.gen::<f64>();
            let mut acc = 0.0;
            let mut pick = row.len() - 1;
            for (val, &p) in row.iter().enumerate() {
                acc += p;
                if target < acc {
                    pick = val;
                    break;
                }
            }
            assignment[v] = pick;
        }
        assignment
    }
}

impl Summarize for DiscreteBayesianNetwork {
    type Batch = DataBatch;

    fn summarize(&self, batch: &DataBatch) -> Result<SuffStats> {
        let mut stats = self.zero_stats();
        for i in 0..batch.n_rows() {
            let values = self.row_values(batch.row(i))?;
            let w = batch.weight(i);
            for v in 0..self.n_variables() {
                let row = self.parent_index(v, &values);
                stats.counts[v][row][values[v]] += w;
            }
            stats.w_sum += w;
        }
        Ok(SuffStats::Cpt(stats))
    }
}

impl Trainable for DiscreteBayesianNetwork {
    fn apply_summaries(&mut self, stats: &SuffStats, inertia: f64) -> Result<()> {
        let s = match stats {
            SuffStats::Cpt(s) => s,
            other => {
                return Err(Error::StatsKindMismatch {
                    left: "Cpt",
                    right: other.kind(),
                })
            }
        };
        if s.counts.len() != self.n_variables() {
            return Err(Error::ShapeMismatch(format!(
                "CPT statistics over {} variables for a {}-variable network",
                s.counts.len(),
                self.n_variables()
            )));
        }
        if s.w_sum <= 0.0 {
            return Ok(());
        }
        for (table, counts) in self.cpts.iter_mut().zip(&s.counts) {
            for (row, c) in table.iter_mut().zip(counts) {
                let raw: f64 = c.iter().sum();
                if raw <= 0.0 {
                    continue; // unobserved parent assignment keeps its row
                }
                let total = raw + CPT_PSEUDOCOUNT * c.len() as f64;
                for (p, &cnt) in row.iter_mut().zip(c) {
                    let mle = (cnt + CPT_PSEUDOCOUNT) / total;
                    *p = inertia * *p + (1.0 - inertia) * mle;
                }
                let z: f64 = row.iter().sum();
                row.iter_mut().for_each(|p| *p /= z);
            }
        }
        Ok(())
    }

    fn training_mode(&self) -> TrainingMode {
        TrainingMode::SinglePass
    }
}

/// Single-pass MLE of all CPTs over a fixed structure.
pub fn fit_cpts<S>(
    variables: Vec<Variable>,
    parents: Vec<Vec<usize>>,
    source: &mut S,
    config: &FitConfig,
) -> Result<DiscreteBayesianNetwork>
where
    S: BatchSource<Batch = DataBatch> + ?Sized,
{
    let mut model = DiscreteBayesianNetwork::uninitialized(variables, parents)?;
    engine::fit(&mut model, source, config)?;
    Ok(model)
}

/// Pure pairwise-count collector used for structure learning.
struct PairCounter {
    cards: Vec<usize>,
}

impl PairCounter {
    fn pair_slot(&self, i: usize, j: usize) -> usize {
        // Index of pair (i, j), i < j, in lexicographic order.
        let n = self.cards.len();
        i * n - i * (i + 1) / 2 + (j - i - 1)
    }
}

impl Summarize for PairCounter {
    type Batch = DataBatch;

    fn summarize(&self, batch: &DataBatch) -> Result<SuffStats> {
        let n = self.cards.len();
        let mut stats = PairCountStats {
            cards: self.cards.clone(),
            singles: self.cards.iter().map(|&c| vec![0.0; c]).collect(),
            pairs: {
                let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
                for i in 0..n {
                    for j in i + 1..n {
                        pairs.push(vec![0.0; self.cards[i] * self.cards[j]]);
                    }
                }
                pairs
            },
            w_sum: 0.0,
        };
        for r in 0..batch.n_rows() {
            let row = batch.row(r);
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            let w = batch.weight(r);
            let values: Vec<usize> = row
                .iter()
                .enumerate()
                .map(|(v, &x)| {
                    if x < 0.0 || x.fract() != 0.0 || x as usize >= self.cards[v] {
                        return Err(Error::ValueOutOfRange {
                            value: x.max(0.0) as usize,
                            variable: v,
                            cardinality: self.cards[v],
                        });
                    }
                    Ok(x as usize)
                })
                .collect::<Result<_>>()?;
            for i in 0..n {
                stats.singles[i][values[i]] += w;
                for j in i + 1..n {
                    stats.pairs[self.pair_slot(i, j)][values[i] * self.cards[j] + values[j]] +=
                        w;
                }
            }
            stats.w_sum += w;
        }
        Ok(SuffStats::PairCounts(stats))
    }
}

/// Empirical mutual information (natural log) from raw weighted counts.
fn mutual_information(joint: &[f64], xi: &[f64], xj: &[f64], total: f64) -> f64 {
    let cj = xj.len();
    let mut mi = 0.0;
    for (cell, &c) in joint.iter().enumerate() {
        if c <= 0.0 {
            continue;
        }
        let pi = xi[cell / cj] / total;
        let pj = xj[cell % cj] / total;
        let pij = c / total;
        mi += pij * (pij / (pi * pj)).ln();
    }
    mi
}

/// Scans the data once and returns per-column cardinalities (max + 1).
pub fn infer_cardinalities<S>(source: &mut S) -> Result<Vec<usize>>
where
    S: BatchSource<Batch = DataBatch> + ?Sized,
{
    source.reset()?;
    let mut cards: Vec<usize> = Vec::new();
    while let Some(batch) = source.next_batch()? {
        if cards.is_empty() {
            cards = vec![1; batch.n_cols()];
        }
        for i in 0..batch.n_rows() {
            for (v, &x) in batch.row(i).iter().enumerate() {
                if x < 0.0 || x.fract() != 0.0 {
                    return Err(Error::NonFiniteData(format!(
                        "expected a nonnegative integer value, got {}",
                        x
                    )));
                }
                cards[v] = cards[v].max(x as usize + 1);
            }
        }
    }
    if cards.is_empty() {
        return Err(Error::EmptySource);
    }
    Ok(cards)
}

/// Chow-Liu tree: maximum-MI spanning tree over the variables, returned
/// as parent lists with edges directed away from variable 0. Ties break
/// lexicographically by edge, so the result is deterministic.
pub fn chow_liu_structure<S>(
    cards: &[usize],
    source: &mut S,
    config: &FitConfig,
) -> Result<Vec<Vec<usize>>>
where
    S: BatchSource<Batch = DataBatch> + ?Sized,
{
    let n = cards.len();
    if n < 2 {
        return Err(Error::InvalidConfig(
            "structure learning needs at least 2 variables".into(),
        ));
    }
    let counter = PairCounter {
        cards: cards.to_vec(),
    };
    let stats = engine::parallel_summarize(&counter, source, config)?;
    let s = match stats {
        SuffStats::PairCounts(s) => s,
        _ => unreachable!("PairCounter emits PairCounts"),
    };
    if s.w_sum <= 0.0 {
        return Err(Error::EmptySource);
    }

    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let mi = mutual_information(
                &s.pairs[counter.pair_slot(i, j)],
                &s.singles[i],
                &s.singles[j],
                s.w_sum,
            );
            edges.push((mi, i, j));
        }
    }
    edges.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    // Kruskal with a small union-find.
    let mut uf: Vec<usize> = (0..n).collect();
    fn find(uf: &mut Vec<usize>, mut x: usize) -> usize {
        while uf[x] != x {
            uf[x] = uf[uf[x]];
            x = uf[x];
        }
        x
    }
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut taken = 0;
    for &(_, i, j) in &edges {
        let (ri, rj) = (find(&mut uf, i), find(&mut uf, j));
        if ri != rj {
            uf[ri] = rj;
            adjacency[i].push(j);
            adjacency[j].push(i);
            taken += 1;
            if taken == n - 1 {
                break;
            }
        }
    }

    // Direct the tree away from variable 0.
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut visited = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    visited[0] = true;
    while let Some(v) = queue.pop_front() {
        for &c in &adjacency[v] {
            if !visited[c] {
                visited[c] = true;
                parents[c] = vec![v];
                queue.push_back(c);
            }
        }
    }
    Ok(parents)
}

/// Chow-Liu structure plus a CPT fit, with cardinalities inferred from
/// the data.
pub fn from_samples_bn<S>(
    source: &mut S,
    config: &FitConfig,
) -> Result<DiscreteBayesianNetwork>
where
    S: BatchSource<Batch = DataBatch> + ?Sized,
{
    let cards = infer_cardinalities(source)?;
    let parents = chow_liu_structure(&cards, source, config)?;
    let variables = cards
        .iter()
        .enumerate()
        .map(|(i, &c)| Variable::new(format!("x{}", i), c))
        .collect();
    fit_cpts(variables, parents, source, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::MemorySource;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn source(rows: &[Vec<f64>]) -> MemorySource {
        MemorySource::new(DataBatch::from_rows(rows).unwrap(), None)
    }

    fn binary_vars(n: usize) -> Vec<Variable> {
        (0..n).map(|i| Variable::new(format!("x{}", i), 2)).collect()
    }

    #[test]
    fn edgeless_fit_recovers_marginals() {
        let rows = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ];
        let net = fit_cpts(
            binary_vars(2),
            vec![vec![], vec![]],
            &mut source(&rows),
            &FitConfig::default(),
        )
        .unwrap();
        for v in 0..2 {
            assert!((net.cpts()[v][0][0] - 0.5).abs() < 1e-8);
            assert!((net.cpts()[v][0][1] - 0.5).abs() < 1e-8);
        }
    }

    #[test]
    fn deterministic_edge_saturates_the_cpt() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let x = (i % 2) as f64;
                vec![x, x]
            })
            .collect();
        let net = fit_cpts(
            binary_vars(2),
            vec![vec![], vec![0]],
            &mut source(&rows),
            &FitConfig::default(),
        )
        .unwrap();
        assert!(net.cpts()[1][1][1] >= 1.0 - 1e-6);
        assert!(net.cpts()[1][0][0] >= 1.0 - 1e-6);
    }

    #[test]
    fn split_batch_counting_is_exact() {
        let rows = vec![
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0],
        ];
        let net = DiscreteBayesianNetwork::uninitialized(
            binary_vars(3),
            vec![vec![], vec![0], vec![0, 1]],
        )
        .unwrap();
        let whole = net
            .summarize(&DataBatch::from_rows(&rows).unwrap())
            .unwrap();
        let a = net.summarize(&DataBatch::from_rows(&rows[..2]).unwrap()).unwrap();
        let b = net.summarize(&DataBatch::from_rows(&rows[2..]).unwrap()).unwrap();
        assert_eq!(whole, a.merged(&b).unwrap());
    }

    #[test]
    fn uniform_edgeless_joint_is_a_product_of_halves() {
        let net =
            DiscreteBayesianNetwork::uninitialized(binary_vars(3), vec![vec![]; 3]).unwrap();
        let lp = net.log_probability(&[0, 1, 0]).unwrap();
        assert!((lp - 3.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn chain_network_matches_hand_multiplied_factors() {
        // A -> B -> C with hand-set CPTs.
        let net = DiscreteBayesianNetwork::new(
            binary_vars(3),
            vec![vec![], vec![0], vec![1]],
            vec![
                vec![vec![0.6, 0.4]],
                vec![vec![0.9, 0.1], vec![0.2, 0.8]],
                vec![vec![0.5, 0.5], vec![0.3, 0.7]],
            ],
        )
        .unwrap();
        let lp = net.log_probability(&[1, 1, 0]).unwrap();
        let expected = (0.4f64 * 0.8 * 0.3).ln();
        assert!((lp - expected).abs() < 1e-12);
    }

    #[test]
    fn joint_distribution_normalizes() {
        // A 12-variable chain with CPTs fit from random data.
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..12).map(|_| f64::from(rng.gen_range(0..2))).collect())
            .collect();
        let parents: Vec<Vec<usize>> =
            (0..12).map(|v| if v == 0 { vec![] } else { vec![v - 1] }).collect();
        let net = fit_cpts(
            binary_vars(12),
            parents,
            &mut source(&rows),
            &FitConfig::default(),
        )
        .unwrap();
        let mut total = 0.0;
        for code in 0..(1u32 << 12) {
            let assignment: Vec<usize> =
                (0..12).map(|v| ((code >> v) & 1) as usize).collect();
            total += net.log_probability(&assignment).unwrap().exp();
        }
        assert!((total - 1.0).abs() < 1e-9, "total {}", total);
    }

    #[test]
    fn cycles_are_rejected() {
        assert!(matches!(
            DiscreteBayesianNetwork::uninitialized(binary_vars(2), vec![vec![1], vec![0]]),
            Err(Error::CyclicStructure)
        ));
        assert!(matches!(
            DiscreteBayesianNetwork::uninitialized(binary_vars(1), vec![vec![0]]),
            Err(Error::CyclicStructure)
        ));
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        let net =
            DiscreteBayesianNetwork::uninitialized(binary_vars(2), vec![vec![], vec![]]).unwrap();
        assert!(matches!(
            net.log_probability(&[0, 2]),
            Err(Error::ValueOutOfRange {
                value: 2,
                variable: 1,
                cardinality: 2
            })
        ));
        let bad = DataBatch::from_rows(&[vec![0.0, 3.0]]).unwrap();
        assert!(net.summarize(&bad).is_err());
    }

    #[test]
    fn chow_liu_finds_the_deterministic_edge() {
        // Z copies X; Y is independent noise.
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let rows: Vec<Vec<f64>> = (0..500)
            .map(|_| {
                let x = f64::from(rng.gen_range(0..2));
                let y = f64::from(rng.gen_range(0..2));
                vec![x, y, x]
            })
            .collect();
        let parents =
            chow_liu_structure(&[2, 2, 2], &mut source(&rows), &FitConfig::default()).unwrap();
        // The X-Z edge must appear in some direction.
        let has_xz = parents[2] == vec![0] || parents[0] == vec![2];
        assert!(has_xz, "parents: {:?}", parents);
    }

    #[test]
    fn two_variables_get_the_only_edge() {
        let rows = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.0, 0.0]];
        let parents =
            chow_liu_structure(&[2, 2], &mut source(&rows), &FitConfig::default()).unwrap();
        assert_eq!(parents, vec![vec![], vec![0]]);
    }

    /// All 16 labeled trees on 4 nodes via Prüfer sequences.
    fn all_four_node_trees() -> Vec<Vec<(usize, usize)>> {
        let mut trees = Vec::new();
        for a in 0..4 {
            for b in 0..4 {
                // Decode the Prüfer sequence [a, b].
                let prufer = [a, b];
                let mut degree = [1usize; 4];
                for &p in &prufer {
                    degree[p] += 1;
                }
                let mut edges = Vec::new();
                let mut deg = degree;
                for &p in &prufer {
                    let leaf = (0..4).find(|&v| deg[v] == 1).unwrap();
                    edges.push((leaf.min(p), leaf.max(p)));
                    deg[leaf] -= 1;
                    deg[p] -= 1;
                }
                let rest: Vec<usize> = (0..4).filter(|&v| deg[v] == 1).collect();
                edges.push((rest[0], rest[1]));
                trees.push(edges);
            }
        }
        trees
    }

    #[test]
    fn chow_liu_matches_the_brute_force_spanning_tree() {
        // Known tree dependency: x0 -> x1 -> x2, x1 -> x3.
        let truth = DiscreteBayesianNetwork::new(
            binary_vars(4),
            vec![vec![], vec![0], vec![1], vec![1]],
            vec![
                vec![vec![0.5, 0.5]],
                vec![vec![0.85, 0.15], vec![0.15, 0.85]],
                vec![vec![0.8, 0.2], vec![0.25, 0.75]],
                vec![vec![0.7, 0.3], vec![0.1, 0.9]],
            ],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let rows: Vec<Vec<f64>> = (0..10_000)
            .map(|_| truth.sample(&mut rng).iter().map(|&v| v as f64).collect())
            .collect();

        // MI weights computed directly from the same counts.
        let counter = PairCounter { cards: vec![2; 4] };
        let stats = counter
            .summarize(&DataBatch::from_rows(&rows).unwrap())
            .unwrap();
        let s = match stats {
            SuffStats::PairCounts(s) => s,
            _ => unreachable!(),
        };
        let mut mi = vec![vec![0.0; 4]; 4];
        for i in 0..4 {
            for j in i + 1..4 {
                let m = mutual_information(
                    &s.pairs[counter.pair_slot(i, j)],
                    &s.singles[i],
                    &s.singles[j],
                    s.w_sum,
                );
                mi[i][j] = m;
                mi[j][i] = m;
            }
        }
        let mut best_weight = f64::NEG_INFINITY;
        let mut best_edges = Vec::new();
        for tree in all_four_node_trees() {
            let w: f64 = tree.iter().map(|&(i, j)| mi[i][j]).sum();
            if w > best_weight {
                best_weight = w;
                best_edges = tree;
            }
        }
        best_edges.sort_unstable();

        let parents =
            chow_liu_structure(&[2; 4], &mut source(&rows), &FitConfig::default()).unwrap();
        let mut got: Vec<(usize, usize)> = parents
            .iter()
            .enumerate()
            .filter(|(_, ps)| !ps.is_empty())
            .map(|(v, ps)| (v.min(ps[0]), v.max(ps[0])))
            .collect();
        got.sort_unstable();
        assert_eq!(got, best_edges);
    }

    #[test]
    fn posterior_with_no_evidence_is_the_marginal_cpt() {
        let net = DiscreteBayesianNetwork::new(
            binary_vars(2),
            vec![vec![], vec![]],
            vec![vec![vec![0.3, 0.7]], vec![vec![0.6, 0.4]]],
        )
        .unwrap();
        let p = net.predict_proba(&[None, None], 0).unwrap();
        assert!((p[0] - 0.3).abs() < 1e-12);
        assert!((p[1] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn deterministic_edge_inverts_cleanly() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let x = (i % 2) as f64;
                vec![x, x]
            })
            .collect();
        let net = fit_cpts(
            binary_vars(2),
            vec![vec![], vec![0]],
            &mut source(&rows),
            &FitConfig::default(),
        )
        .unwrap();
        let p = net.predict_proba(&[None, Some(1)], 0).unwrap();
        assert!(p[1] >= 1.0 - 1e-6);
    }

    #[test]
    fn enumeration_matches_a_full_joint_oracle() {
        // Five-variable DAG with randomized CPT rows.
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let cards = [2usize, 3, 2, 2, 3];
        let variables: Vec<Variable> = cards
            .iter()
            .enumerate()
            .map(|(i, &c)| Variable::new(format!("x{}", i), c))
            .collect();
        let parents = vec![vec![], vec![0], vec![1], vec![0], vec![2, 3]];
        let cpts: Vec<Vec<Vec<f64>>> = (0..5)
            .map(|v| {
                let rows: usize = parents[v].iter().map(|&p| cards[p]).product();
                (0..rows)
                    .map(|_| {
                        let mut row: Vec<f64> =
                            (0..cards[v]).map(|_| rng.gen_range(0.1..1.0)).collect();
                        let z: f64 = row.iter().sum();
                        row.iter_mut().for_each(|p| *p /= z);
                        row
                    })
                    .collect()
            })
            .collect();
        let net = DiscreteBayesianNetwork::new(variables, parents, cpts).unwrap();

        let evidence = [None, Some(2), None, Some(0), None];
        for query in [0usize, 2, 4] {
            let got = net.predict_proba(&evidence, query).unwrap();
            // Brute-force joint table.
            let mut oracle = vec![0.0; cards[query]];
            let total_assignments: usize = cards.iter().product();
            let mut assignment = vec![0usize; 5];
            for mut code in 0..total_assignments {
                for v in (0..5).rev() {
                    assignment[v] = code % cards[v];
                    code /= cards[v];
                }
                let consistent = evidence
                    .iter()
                    .enumerate()
                    .all(|(v, e)| e.map_or(true, |val| assignment[v] == val));
                if consistent {
                    oracle[assignment[query]] +=
                        net.log_probability(&assignment).unwrap().exp();
                }
            }
            let z: f64 = oracle.iter().sum();
            for (a, b) in got.iter().zip(&oracle) {
                assert!((a - b / z).abs() < 1e-10);
            }
            assert!((got.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn contradictory_evidence_is_an_error() {
        let net = DiscreteBayesianNetwork::new(
            binary_vars(2),
            vec![vec![], vec![0]],
            vec![
                vec![vec![1.0, 0.0]],
                vec![vec![1.0, 0.0], vec![0.5, 0.5]],
            ],
        )
        .unwrap();
        // X is always 0 and then Y is always 0; evidence Y=1 is impossible.
        assert!(matches!(
            net.predict_proba(&[None, Some(1)], 0),
            Err(Error::ContradictoryEvidence)
        ));
    }

    #[test]
    fn enumeration_budget_is_enforced() {
        let variables: Vec<Variable> =
            (0..21).map(|i| Variable::new(format!("x{}", i), 2)).collect();
        let parents = vec![vec![]; 21];
        let net = DiscreteBayesianNetwork::uninitialized(variables, parents).unwrap();
        let evidence = vec![None; 21];
        assert!(matches!(
            net.predict_proba(&evidence, 0),
            Err(Error::EnumerationBudget(_))
        ));
    }

    #[test]
    fn fit_recovers_cpts_within_three_standard_errors() {
        let truth = DiscreteBayesianNetwork::new(
            binary_vars(3),
            vec![vec![], vec![0], vec![1]],
            vec![
                vec![vec![0.35, 0.65]],
                vec![vec![0.8, 0.2], vec![0.3, 0.7]],
                vec![vec![0.55, 0.45], vec![0.15, 0.85]],
            ],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let rows: Vec<Vec<f64>> = (0..100_000)
            .map(|_| truth.sample(&mut rng).iter().map(|&v| v as f64).collect())
            .collect();
        let fitted = fit_cpts(
            binary_vars(3),
            truth.parents().to_vec(),
            &mut source(&rows),
            &FitConfig::default(),
        )
        .unwrap();
        // Count parent-assignment occurrences for the standard errors.
        for v in 0..3 {
            for (r, row) in truth.cpts()[v].iter().enumerate() {
                let mut n_row = 0.0;
                for data_row in &rows {
                    let values: Vec<usize> =
                        data_row.iter().map(|&x| x as usize).collect();
                    if truth.parent_index(v, &values) == r {
                        n_row += 1.0;
                    }
                }
                for (val, &p) in row.iter().enumerate() {
                    let se = (p * (1.0 - p) / n_row).sqrt();
                    let got = fitted.cpts()[v][r][val];
                    assert!(
                        (got - p).abs() < 3.0 * se,
                        "var {} row {} val {}: {} vs {}",
                        v,
                        r,
                        val,
                        got,
                        p
                    );
                }
            }
        }
    }

    #[test]
    fn learned_tree_never_loses_to_the_edgeless_fit() {
        let truth = DiscreteBayesianNetwork::new(
            binary_vars(3),
            vec![vec![], vec![0], vec![1]],
            vec![
                vec![vec![0.5, 0.5]],
                vec![vec![0.9, 0.1], vec![0.2, 0.8]],
                vec![vec![0.75, 0.25], vec![0.3, 0.7]],
            ],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let rows: Vec<Vec<f64>> = (0..2000)
            .map(|_| truth.sample(&mut rng).iter().map(|&v| v as f64).collect())
            .collect();
        let tree = from_samples_bn(&mut source(&rows), &FitConfig::default()).unwrap();
        let edgeless = fit_cpts(
            binary_vars(3),
            vec![vec![]; 3],
            &mut source(&rows),
            &FitConfig::default(),
        )
        .unwrap();
        let ll = |net: &DiscreteBayesianNetwork| -> f64 {
            rows.iter()
                .map(|r| {
                    let values: Vec<usize> = r.iter().map(|&x| x as usize).collect();
                    net.log_probability(&values).unwrap()
                })
                .sum()
        };
        assert!(ll(&tree) >= ll(&edgeless) - 1e-8);
    }
}
