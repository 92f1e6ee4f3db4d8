//! NSGA-II with constraint domination and mixed operators: simulated binary
//! crossover and polynomial mutation on continuous genes, uniform crossover
//! and random reset on the integer diameter gene.

use super::EvaluationRecord;
use crate::geometry::{DesignBounds, DesignVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum OptimizeError {
    #[error("invalid optimizer setting: {0}")]
    Config(String),
    #[error("all {count} evaluated designs were flagged; first error: {first_error}")]
    AllFlagged { count: usize, first_error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub population: usize,
    pub max_generations: usize,
    /// Running-metric tolerance on both objectives.
    pub tolerance: f64,
    /// Generations the metric must stay below `tolerance`.
    pub window: usize,
    pub seed: u64,
    pub wec_count: usize,
    pub crossover_prob: f64,
    /// Per-gene mutation probability; `None` means `1/len`.
    pub mutation_prob: Option<f64>,
    pub eta_crossover: f64,
    pub eta_mutation: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            population: 120,
            max_generations: 200,
            tolerance: 0.005,
            window: 10,
            seed: 1,
            wec_count: 4,
            crossover_prob: 0.9,
            mutation_prob: None,
            eta_crossover: 15.0,
            eta_mutation: 20.0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        let bad = |m: &str| Err(OptimizeError::Config(m.to_string()));
        if self.population < 4 || self.population % 2 != 0 {
            return bad("population must be even and at least 4");
        }
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive");
        }
        if self.window == 0 || self.wec_count == 0 || self.max_generations == 0 {
            return bad("window, wec_count and max_generations must be positive");
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) || self.mutation_prob.is_some_and(|p| !(0.0..=1.0).contains(&p)) {
            return bad("probabilities must lie in [0, 1]");
        }
        if !(self.eta_crossover >= 0.0 && self.eta_mutation >= 0.0) {
            return bad("distribution indices must be non-negative");
        }
        Ok(())
    }
}

/// Front metrics per generation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub evaluations: usize,
    pub front_size: usize,
    pub ideal: [f64; 2],
    pub nadir: [f64; 2],
    /// Largest normalised ideal/nadir shift since the previous generation.
    pub metric: f64,
    pub hypervolume: f64,
}

/// Non-dominated feasible records found during a run, plus its history.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoSet {
    pub members: Vec<EvaluationRecord>,
    pub history: Vec<GenerationStats>,
}

impl ParetoSet {
    /// Members sorted by ascending LCOE.
    pub fn sorted(&self) -> Vec<&EvaluationRecord> {
        let mut v: Vec<_> = self.members.iter().collect();
        v.sort_by(|a, b| a.objectives[0].total_cmp(&b.objectives[0]).then(a.objectives[1].total_cmp(&b.objectives[1])));
        v
    }
}

/// Pareto dominance for minimisation.
pub fn dominates(a: &[f64; 2], b: &[f64; 2]) -> bool {
    a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1])
}

/// Feasible beats infeasible, smaller violation beats larger, otherwise Pareto.
fn constrained_dominates(a: &EvaluationRecord, b: &EvaluationRecord) -> bool {
    match (a.feasible(), b.feasible()) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.constraint < b.constraint,
        (true, true) => dominates(&a.objectives, &b.objectives),
    }
}

/// Fronts of indices into `records`, best first.
pub fn non_dominated_sort(records: &[EvaluationRecord]) -> Vec<Vec<usize>> {
    let n = records.len();
    let mut dominated_by = vec![Vec::new(); n];
    let mut count = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            if constrained_dominates(&records[i], &records[j]) {
                dominated_by[i].push(j);
                count[j] += 1;
            } else if constrained_dominates(&records[j], &records[i]) {
                dominated_by[j].push(i);
                count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                count[j] -= 1;
                if count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

fn crowding_distance(records: &[EvaluationRecord], front: &[usize]) -> Vec<f64> {
    let m = front.len();
    let mut dist = vec![0.0; m];
    if m <= 2 {
        return vec![f64::INFINITY; m];
    }
    for obj in 0..2 {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| records[front[a]].objectives[obj].total_cmp(&records[front[b]].objectives[obj]));
        let lo = records[front[order[0]]].objectives[obj];
        let hi = records[front[order[m - 1]]].objectives[obj];
        dist[order[0]] = f64::INFINITY;
        dist[order[m - 1]] = f64::INFINITY;
        if hi > lo {
            for w in 1..m - 1 {
                let gap = records[front[order[w + 1]]].objectives[obj] - records[front[order[w - 1]]].objectives[obj];
                dist[order[w]] += gap / (hi - lo);
            }
        }
    }
    dist
}

/// 2-D hypervolume of the points dominating `reference`.
fn hypervolume(points: &[[f64; 2]], reference: [f64; 2]) -> f64 {
    let mut pts: Vec<[f64; 2]> = points.iter().copied().filter(|p| p[0] < reference[0] && p[1] < reference[1]).collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let mut hv = 0.0;
    let mut best_y = reference[1];
    for p in pts {
        if p[1] < best_y {
            hv += (reference[0] - p[0]) * (best_y - p[1]);
            best_y = p[1];
        }
    }
    hv
}

struct Operators<'a> {
    cfg: &'a OptimizerConfig,
    bounds: Vec<(f64, f64)>,
}

impl Operators<'_> {
    fn random(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.bounds.iter().enumerate().map(|(i, &(lo, hi))| if i == 0 { random_integer(rng, lo, hi) } else { rng.gen_range(lo..=hi) }).collect()
    }

    fn crossover(&self, a: &[f64], b: &[f64], rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
        let (mut c1, mut c2) = (a.to_vec(), b.to_vec());
        if rng.gen::<f64>() > self.cfg.crossover_prob {
            return (c1, c2);
        }
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if rng.gen::<f64>() >= 0.5 {
                continue;
            }
            if i == 0 {
                std::mem::swap(&mut c1[0], &mut c2[0]);
            } else {
                let (x, y) = sbx(a[i], b[i], lo, hi, self.cfg.eta_crossover, rng);
                c1[i] = x;
                c2[i] = y;
            }
        }
        (c1, c2)
    }

    fn mutate(&self, x: &mut [f64], rng: &mut ChaCha8Rng) {
        let pm = self.cfg.mutation_prob.unwrap_or(1.0 / x.len() as f64);
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if rng.gen::<f64>() >= pm {
                continue;
            }
            x[i] = if i == 0 { random_integer(rng, lo, hi) } else { polynomial_mutation(x[i], lo, hi, self.cfg.eta_mutation, rng) };
        }
    }
}

fn random_integer(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ceil() as i64..=hi.floor() as i64) as f64
}

/// Bounded simulated binary crossover.
fn sbx(a: f64, b: f64, lo: f64, hi: f64, eta: f64, rng: &mut ChaCha8Rng) -> (f64, f64) {
    if (a - b).abs() < 1e-14 || hi <= lo {
        return (a, b);
    }
    let (y1, y2) = if a < b { (a, b) } else { (b, a) };
    let u: f64 = rng.gen();
    let child = |beta_edge: f64| {
        let alpha = 2.0 - beta_edge.powf(-(eta + 1.0));
        if u <= 1.0 / alpha {
            (u * alpha).powf(1.0 / (eta + 1.0))
        } else {
            (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
        }
    };
    let bq1 = child(1.0 + 2.0 * (y1 - lo) / (y2 - y1));
    let c1 = 0.5 * ((y1 + y2) - bq1 * (y2 - y1));
    let bq2 = child(1.0 + 2.0 * (hi - y2) / (y2 - y1));
    let c2 = 0.5 * ((y1 + y2) + bq2 * (y2 - y1));
    let (c1, c2) = (c1.clamp(lo, hi), c2.clamp(lo, hi));
    if rng.gen::<bool>() {
        (c2, c1)
    } else {
        (c1, c2)
    }
}

/// Bounded polynomial mutation.
fn polynomial_mutation(x: f64, lo: f64, hi: f64, eta: f64, rng: &mut ChaCha8Rng) -> f64 {
    if hi <= lo {
        return x;
    }
    let span = hi - lo;
    let (d1, d2) = ((x - lo) / span, (hi - x) / span);
    let u: f64 = rng.gen();
    let p = 1.0 / (eta + 1.0);
    let dq = if u < 0.5 {
        let v = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta + 1.0);
        v.powf(p) - 1.0
    } else {
        let v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta + 1.0);
        1.0 - v.powf(p)
    };
    (x + dq * span).clamp(lo, hi)
}

struct Archive {
    members: Vec<EvaluationRecord>,
}

impl Archive {
    fn offer(&mut self, r: &EvaluationRecord) {
        if !r.valid() {
            return;
        }
        if self.members.iter().any(|m| dominates(&m.objectives, &r.objectives) || m.objectives == r.objectives) {
            return;
        }
        self.members.retain(|m| !dominates(&r.objectives, &m.objectives));
        self.members.push(r.clone());
    }
}

/// Runs NSGA-II with `evaluate` as the (pure) objective function. Each
/// generation's evaluations run in parallel; every random draw happens in the
/// sequential loop, so the result does not depend on the worker count.
pub fn run_nsga2<F>(cfg: &OptimizerConfig, bounds: &DesignBounds, evaluate: F) -> Result<ParetoSet, OptimizeError>
where
    F: Fn(&DesignVector) -> EvaluationRecord + Sync,
{
    cfg.validate()?;
    let len = 3 * cfg.wec_count;
    let ops = Operators { cfg, bounds: (0..len).map(|i| DesignVector::gene_bounds(i, bounds)).collect() };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut seen: HashMap<Vec<u64>, EvaluationRecord> = HashMap::new();
    let eval_batch = |genes: Vec<Vec<f64>>, seen: &mut HashMap<Vec<u64>, EvaluationRecord>| -> Vec<EvaluationRecord> {
        let vectors: Vec<DesignVector> = genes.into_iter().map(DesignVector::new).collect();
        let mut fresh: Vec<&DesignVector> = Vec::new();
        let mut queued = std::collections::HashSet::new();
        for v in &vectors {
            let key = v.cache_key();
            if !seen.contains_key(&key) && queued.insert(key) {
                fresh.push(v);
            }
        }
        let results: Vec<EvaluationRecord> = fresh.par_iter().map(|v| evaluate(v)).collect();
        for (v, r) in fresh.iter().zip(results) {
            seen.insert(v.cache_key(), r);
        }
        vectors.iter().map(|v| seen[&v.cache_key()].clone()).collect()
    };

    let initial: Vec<Vec<f64>> = (0..cfg.population).map(|_| ops.random(&mut rng)).collect();
    let mut population = eval_batch(initial, &mut seen);
    if population.iter().all(|r| !r.valid()) {
        let first_error = population.iter().find_map(|r| r.diagnostics.error.clone()).unwrap_or_default();
        return Err(OptimizeError::AllFlagged { count: population.len(), first_error });
    }
    let mut archive = Archive { members: Vec::new() };
    population.iter().for_each(|r| archive.offer(r));

    let mut history = Vec::new();
    let mut reference: Option<[f64; 2]> = None;
    let mut previous: Option<([f64; 2], [f64; 2])> = None;
    let mut quiet = 0;
    for generation in 0..cfg.max_generations {
        let fronts = non_dominated_sort(&population);
        let mut rank = vec![0; population.len()];
        let mut crowd = vec![0.0; population.len()];
        for (r, front) in fronts.iter().enumerate() {
            let d = crowding_distance(&population, front);
            for (k, &i) in front.iter().enumerate() {
                rank[i] = r;
                crowd[i] = d[k];
            }
        }

        let stats = front_stats(&archive.members, generation, seen.len(), &mut reference, previous);
        previous = Some((stats.ideal, stats.nadir));
        quiet = if stats.metric < cfg.tolerance { quiet + 1 } else { 0 };
        log::info!(
            "generation {generation}: {} evaluations, front {}, metric {:.4}",
            stats.evaluations,
            stats.front_size,
            stats.metric
        );
        history.push(stats);
        if quiet >= cfg.window {
            break;
        }
        if generation + 1 == cfg.max_generations {
            break;
        }

        let tournament = |rng: &mut ChaCha8Rng| {
            let a = rng.gen_range(0..population.len());
            let b = rng.gen_range(0..population.len());
            if rank[a] != rank[b] {
                if rank[a] < rank[b] {
                    a
                } else {
                    b
                }
            } else if crowd[a] != crowd[b] {
                if crowd[a] > crowd[b] {
                    a
                } else {
                    b
                }
            } else if rng.gen::<bool>() {
                a
            } else {
                b
            }
        };
        let mut children = Vec::with_capacity(cfg.population);
        while children.len() < cfg.population {
            let p1 = tournament(&mut rng);
            let p2 = tournament(&mut rng);
            let (mut c1, mut c2) = ops.crossover(&population[p1].design.values, &population[p2].design.values, &mut rng);
            ops.mutate(&mut c1, &mut rng);
            ops.mutate(&mut c2, &mut rng);
            children.push(c1);
            children.push(c2);
        }
        let offspring = eval_batch(children, &mut seen);
        offspring.iter().for_each(|r| archive.offer(r));

        let mut combined = population;
        combined.extend(offspring);
        population = survivors(combined, cfg.population);
    }

    archive.members.sort_by(|a, b| a.objectives[0].total_cmp(&b.objectives[0]).then(a.objectives[1].total_cmp(&b.objectives[1])));
    Ok(ParetoSet { members: archive.members, history })
}

/// Elitist truncation: whole fronts while they fit, then by crowding distance.
fn survivors(combined: Vec<EvaluationRecord>, size: usize) -> Vec<EvaluationRecord> {
    let fronts = non_dominated_sort(&combined);
    let mut keep = Vec::with_capacity(size);
    for front in fronts {
        if keep.len() + front.len() <= size {
            keep.extend(front);
        } else {
            let crowd = crowding_distance(&combined, &front);
            let mut order: Vec<usize> = (0..front.len()).collect();
            order.sort_by(|&a, &b| crowd[b].total_cmp(&crowd[a]).then(a.cmp(&b)));
            keep.extend(order.into_iter().take(size - keep.len()).map(|k| front[k]));
            break;
        }
    }
    let mut slots: Vec<Option<EvaluationRecord>> = combined.into_iter().map(Some).collect();
    keep.into_iter().map(|i| slots[i].take().expect("each survivor taken once")).collect()
}

fn front_stats(
    front: &[EvaluationRecord],
    generation: usize,
    evaluations: usize,
    reference: &mut Option<[f64; 2]>,
    previous: Option<([f64; 2], [f64; 2])>,
) -> GenerationStats {
    let pts: Vec<[f64; 2]> = front.iter().map(|r| r.objectives).collect();
    let mut ideal = [f64::INFINITY; 2];
    let mut nadir = [f64::NEG_INFINITY; 2];
    for p in &pts {
        for j in 0..2 {
            ideal[j] = ideal[j].min(p[j]);
            nadir[j] = nadir[j].max(p[j]);
        }
    }
    if reference.is_none() && !pts.is_empty() {
        *reference = Some([nadir[0] * 1.1, nadir[1] * 1.1]);
    }
    let metric = match previous {
        Some((pi, pn)) if !pts.is_empty() && pi[0].is_finite() => (0..2)
            .map(|j| {
                let span = (nadir[j] - ideal[j]).max(1e-12 * nadir[j].abs().max(1.0));
                ((ideal[j] - pi[j]).abs() / span).max((nadir[j] - pn[j]).abs() / span)
            })
            .fold(0.0, f64::max),
        _ => f64::INFINITY,
    };
    let hypervolume = reference.map(|r| hypervolume(&pts, r)).unwrap_or(0.0);
    GenerationStats { generation, evaluations, front_size: pts.len(), ideal, nadir, metric, hypervolume }
}

#[cfg(test)]
mod tests {
    use super::super::Diagnostics;
    use super::*;

    fn record(obj: [f64; 2], c: f64) -> EvaluationRecord {
        EvaluationRecord { design: DesignVector::new(vec![]), objectives: obj, constraint: c, diagnostics: Diagnostics::default(), nonphysical: false }
    }

    #[test]
    fn sorting_respects_constraints() {
        let recs = vec![record([1.0, 1.0], 0.0), record([2.0, 0.5], -1.0), record([0.1, 0.1], 2.0), record([3.0, 3.0], 0.0), record([0.2, 0.2], 1.0)];
        let fronts = non_dominated_sort(&recs);
        assert_eq!(fronts, vec![vec![0, 1], vec![3], vec![4], vec![2]]);
    }

    #[test]
    fn crowding_marks_extremes_infinite() {
        let recs: Vec<_> = (0..5).map(|i| record([i as f64, 4.0 - i as f64], 0.0)).collect();
        let d = crowding_distance(&recs, &[0, 1, 2, 3, 4]);
        assert!(d[0].is_infinite() && d[4].is_infinite());
        assert!((d[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hypervolume_of_staircase() {
        let hv = hypervolume(&[[1.0, 3.0], [2.0, 2.0], [3.0, 1.0], [3.5, 3.5]], [4.0, 4.0]);
        assert!((hv - (3.0 * 1.0 + 2.0 * 1.0 + 1.0 * 1.0)).abs() < 1e-12);
    }

    #[test]
    fn operators_stay_in_bounds_and_on_grid() {
        let cfg = OptimizerConfig::default();
        let b = DesignBounds::default();
        let ops = Operators { cfg: &cfg, bounds: (0..12).map(|i| DesignVector::gene_bounds(i, &b)).collect() };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let (a, c) = (ops.random(&mut rng), ops.random(&mut rng));
            let (mut x, mut y) = ops.crossover(&a, &c, &mut rng);
            ops.mutate(&mut x, &mut rng);
            ops.mutate(&mut y, &mut rng);
            for v in [&a, &x, &y] {
                assert_eq!(v[0], v[0].round());
                assert!(DesignVector::new(v.clone()).decode(&b).is_ok());
            }
        }
    }

    #[test]
    fn config_validation() {
        let mut c = OptimizerConfig { population: 5, ..Default::default() };
        assert!(c.validate().is_err());
        c.population = 40;
        assert!(c.validate().is_ok());
        c.tolerance = 0.0;
        assert!(c.validate().is_err());
    }
}
