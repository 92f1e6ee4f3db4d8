//! Variance-based global sensitivity: Saltelli sampling on a Sobol sequence,
//! first-order and total indices with bootstrap intervals, and a convergence
//! scan over the base sample size.

mod sequence;

pub use sequence::{SobolSequence, MAX_DIMENSION};

use crate::geometry::DesignVector;
use crate::optimize::{evaluate, EvalSettings, HydroCache};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SensitivityError {
    #[error("invalid bounds for {name}: [{lo}, {hi}]")]
    Bounds { name: String, lo: f64, hi: f64 },
    #[error("{dims} parameters need {needed} sequence dimensions; at most {max} are tabulated")]
    TooManyParameters { dims: usize, needed: usize, max: usize },
    #[error("base sample size {0} is not a power of two")]
    SampleSize(usize),
    #[error("{got} outputs do not fill whole blocks of {block}")]
    Misaligned { got: usize, block: usize },
    #[error("output variance is zero; indices are undefined")]
    ZeroVariance,
    #[error("no finite outputs in a sample block")]
    NoFiniteOutputs,
}

/// Uniformly distributed inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SobolProblem {
    pub names: Vec<String>,
    pub bounds: Vec<(f64, f64)>,
}

impl SobolProblem {
    /// Wave heading, frequency, lifetime, amplitude, interest rate,
    /// availability, array scaling and PTO force limit.
    pub fn lcoe_parameters() -> Self {
        let pi = std::f64::consts::PI;
        let rows: [(&str, f64, f64); 8] = [
            ("wave_heading", -pi, pi),
            ("omega", 0.1, 3.0),
            ("lifetime", 5.0, 35.0),
            ("amplitude", 0.2, 3.0),
            ("interest_rate", 0.05, 0.2),
            ("availability", 0.79, 0.99),
            ("array_scaling", 0.5, 0.99),
            ("force_max", 1e4, 1e6),
        ];
        Self { names: rows.iter().map(|r| r.0.to_string()).collect(), bounds: rows.iter().map(|r| (r.1, r.2)).collect() }
    }

    pub fn dims(&self) -> usize {
        self.names.len()
    }

    pub fn validate(&self) -> Result<(), SensitivityError> {
        for (name, &(lo, hi)) in self.names.iter().zip(&self.bounds) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(SensitivityError::Bounds { name: name.clone(), lo, hi });
            }
        }
        if self.names.len() != self.bounds.len() || self.names.is_empty() {
            return Err(SensitivityError::Bounds { name: "<count>".into(), lo: self.names.len() as f64, hi: self.bounds.len() as f64 });
        }
        if 2 * self.dims() > MAX_DIMENSION {
            return Err(SensitivityError::TooManyParameters { dims: self.dims(), needed: 2 * self.dims(), max: MAX_DIMENSION });
        }
        Ok(())
    }

    /// Rows per base sample: `A`, `AB_1..AB_D`, `BA_1..BA_D`, `B`.
    pub fn block(&self) -> usize {
        2 * self.dims() + 2
    }
}

/// `N(2D + 2)` rows. For each base index `j` the rows are `A_j`, `A_j` with
/// column `i` taken from `B_j` (for each `i`), `B_j` with column `i` taken
/// from `A_j`, then `B_j`. `A` and `B` are the two halves of a
/// `2D`-dimensional Sobol point; the first `N` points are skipped.
pub fn saltelli_sample(problem: &SobolProblem, n: usize) -> Result<Vec<Vec<f64>>, SensitivityError> {
    problem.validate()?;
    if n == 0 || !n.is_power_of_two() {
        return Err(SensitivityError::SampleSize(n));
    }
    let d = problem.dims();
    let seq = SobolSequence::new(2 * d).expect("dimension checked in validate");
    let scale = |u: &[f64]| -> Vec<f64> { u.iter().zip(&problem.bounds).map(|(x, (lo, hi))| lo + x * (hi - lo)).collect() };
    let mut rows = Vec::with_capacity(n * problem.block());
    for j in 0..n {
        let p = seq.point((n + j) as u64);
        let (a, b) = (scale(&p[..d]), scale(&p[d..]));
        rows.push(a.clone());
        for i in 0..d {
            let mut r = a.clone();
            r[i] = b[i];
            rows.push(r);
        }
        for i in 0..d {
            let mut r = b.clone();
            r[i] = a[i];
            rows.push(r);
        }
        rows.push(b);
    }
    Ok(rows)
}

/// Interval bounds at 95%.
pub type Interval = (f64, f64);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SobolIndices {
    pub names: Vec<String>,
    pub first: Vec<f64>,
    pub total: Vec<f64>,
    pub first_ci: Vec<Interval>,
    pub total_ci: Vec<Interval>,
    pub base_samples: usize,
    /// Non-finite outputs replaced by their block median.
    pub imputed: usize,
    pub variance: f64,
}

impl SobolIndices {
    pub fn csv(&self) -> String {
        let mut out = String::from("parameter,first_order,first_lo,first_hi,total,total_lo,total_hi\n");
        for i in 0..self.names.len() {
            out.push_str(&format!(
                "{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}\n",
                self.names[i],
                self.first[i],
                self.first_ci[i].0,
                self.first_ci[i].1,
                self.total[i],
                self.total_ci[i].0,
                self.total_ci[i].1
            ));
        }
        out
    }

    /// Parameter names by descending total index.
    pub fn ranking(&self) -> Vec<&str> {
        let mut idx: Vec<usize> = (0..self.names.len()).collect();
        idx.sort_by(|&a, &b| self.total[b].total_cmp(&self.total[a]));
        idx.into_iter().map(|i| self.names[i].as_str()).collect()
    }
}

/// Replaces non-finite outputs by the median of the finite ones in the same
/// block position. Returns the number replaced.
fn impute(outputs: &mut [f64], block: usize) -> Result<usize, SensitivityError> {
    let mut count = 0;
    for k in 0..block {
        let mut finite: Vec<f64> = outputs.iter().skip(k).step_by(block).copied().filter(|y| y.is_finite()).collect();
        let n = outputs.len() / block;
        if finite.len() == n {
            continue;
        }
        if finite.is_empty() {
            return Err(SensitivityError::NoFiniteOutputs);
        }
        finite.sort_by(f64::total_cmp);
        let m = finite.len();
        let median = if m % 2 == 1 { finite[m / 2] } else { 0.5 * (finite[m / 2 - 1] + finite[m / 2]) };
        for y in outputs.iter_mut().skip(k).step_by(block) {
            if !y.is_finite() {
                *y = median;
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Estimates over base indices `sel`: `(S_i, ST_i)` per parameter.
fn estimate(y: &[f64], d: usize, sel: &[usize]) -> Result<(Vec<f64>, Vec<f64>), SensitivityError> {
    let block = 2 * d + 2;
    let at = |j: usize, k: usize| y[j * block + k];
    let n = sel.len() as f64;
    let mean = sel.iter().map(|&j| at(j, 0) + at(j, block - 1)).sum::<f64>() / (2.0 * n);
    let var = sel.iter().map(|&j| (at(j, 0) - mean).powi(2) + (at(j, block - 1) - mean).powi(2)).sum::<f64>() / (2.0 * n - 1.0);
    if !(var > 0.0) {
        return Err(SensitivityError::ZeroVariance);
    }
    let mut first = vec![0.0; d];
    let mut total = vec![0.0; d];
    for i in 0..d {
        let (mut s, mut t) = (0.0, 0.0);
        for &j in sel {
            let (fa, fb) = (at(j, 0), at(j, block - 1));
            let (fab, fba) = (at(j, 1 + i), at(j, 1 + d + i));
            s += (fb - mean) * (fab - fa) + (fa - mean) * (fba - fb);
            t += (fa - fab).powi(2) + (fb - fba).powi(2);
        }
        first[i] = s / (2.0 * n) / var;
        total[i] = t / (4.0 * n) / var;
    }
    Ok((first, total))
}

fn percentile_interval(mut v: Vec<f64>) -> Interval {
    v.sort_by(f64::total_cmp);
    let at = |q: f64| {
        let pos = q * (v.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
    };
    (at(0.025), at(0.975))
}

/// First-order (Saltelli) and total (Jansen) indices, each averaged over the
/// `A`/`B` and `B`/`A` orderings, with percentile bootstrap intervals.
pub fn sobol_indices(
    problem: &SobolProblem,
    outputs: &[f64],
    resamples: usize,
    seed: u64,
) -> Result<SobolIndices, SensitivityError> {
    let d = problem.dims();
    let block = problem.block();
    if outputs.is_empty() || outputs.len() % block != 0 {
        return Err(SensitivityError::Misaligned { got: outputs.len(), block });
    }
    let mut y = outputs.to_vec();
    let imputed = impute(&mut y, block)?;
    let n = y.len() / block;
    let all: Vec<usize> = (0..n).collect();
    let (first, total) = estimate(&y, d, &all)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut boot_first = vec![Vec::with_capacity(resamples); d];
    let mut boot_total = vec![Vec::with_capacity(resamples); d];
    let mut sel = vec![0; n];
    for _ in 0..resamples {
        sel.iter_mut().for_each(|s| *s = rng.gen_range(0..n));
        if let Ok((f, t)) = estimate(&y, d, &sel) {
            for i in 0..d {
                boot_first[i].push(f[i]);
                boot_total[i].push(t[i]);
            }
        }
    }
    let ci = |b: Vec<Vec<f64>>, point: &[f64]| -> Vec<Interval> {
        b.into_iter().zip(point).map(|(v, &p)| if v.is_empty() { (p, p) } else { percentile_interval(v) }).collect()
    };
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let variance = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (y.len() - 1).max(1) as f64;
    Ok(SobolIndices {
        names: problem.names.clone(),
        first_ci: ci(boot_first, &first),
        total_ci: ci(boot_total, &total),
        first,
        total,
        base_samples: n,
        imputed,
        variance,
    })
}

/// Samples, evaluates `model` on every row in parallel (order preserved) and
/// estimates the indices.
pub fn analyze<F>(problem: &SobolProblem, n: usize, model: F, resamples: usize, seed: u64) -> Result<SobolIndices, SensitivityError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let rows = saltelli_sample(problem, n)?;
    let y: Vec<f64> = rows.par_iter().map(|r| model(r)).collect();
    sobol_indices(problem, &y, resamples, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub base_samples: usize,
    pub indices: SobolIndices,
    /// Max-norm change of the total indices from the previous row.
    pub change: Option<f64>,
    pub converged: bool,
}

/// Indices at each base size in `sizes` (ascending). A row is converged when
/// its total indices moved by less than 0.01 from the previous size.
pub fn convergence_scan<F>(
    problem: &SobolProblem,
    sizes: &[usize],
    model: F,
    resamples: usize,
    seed: u64,
) -> Result<Vec<ScanRow>, SensitivityError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut out: Vec<ScanRow> = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let indices = analyze(problem, n, &model, resamples, seed)?;
        let change = out.last().map(|prev| {
            prev.indices.total.iter().zip(&indices.total).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        });
        out.push(ScanRow { base_samples: n, indices, change, converged: change.is_some_and(|c| c < 0.01) });
    }
    Ok(out)
}

pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("base_samples,parameter,first_order,total,max_total_change,converged\n");
    for r in rows {
        for i in 0..r.indices.names.len() {
            out.push_str(&format!(
                "{},{},{:.6e},{:.6e},{},{}\n",
                r.base_samples,
                r.indices.names[i],
                r.indices.first[i],
                r.indices.total[i],
                r.change.map(|c| format!("{c:.6e}")).unwrap_or_default(),
                r.converged
            ));
        }
    }
    out
}

/// LCOE of a fixed design as a function of the eight parameters of
/// [`SobolProblem::lcoe_parameters`], in that order. Flagged evaluations
/// return NaN so that [`sobol_indices`] imputes them. Hydrodynamics is
/// cached on frequency and heading; economic inputs never trigger a solve.
pub fn lcoe_model<'a>(design: &'a DesignVector, base: &'a EvalSettings, cache: &'a HydroCache) -> impl Fn(&[f64]) -> f64 + Sync + 'a {
    move |x: &[f64]| {
        let mut s = base.clone();
        let p = &mut s.params;
        p.heading = x[0];
        p.omega = x[1];
        p.lifetime_yr = x[2];
        p.amplitude = x[3];
        p.interest_rate = x[4];
        p.availability = x[5];
        p.array_scaling = x[6];
        p.force_max = x[7];
        let r = evaluate(design, &s, cache);
        if r.nonphysical {
            f64::NAN
        } else {
            r.objectives[0]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(d: usize) -> SobolProblem {
        SobolProblem { names: (0..d).map(|i| format!("x{i}")).collect(), bounds: vec![(0.0, 1.0); d] }
    }

    #[test]
    fn sample_shape_and_structure() {
        let p = SobolProblem::lcoe_parameters();
        let rows = saltelli_sample(&p, 64).unwrap();
        assert_eq!(rows.len(), 64 * 18);
        for r in &rows {
            for (x, (lo, hi)) in r.iter().zip(&p.bounds) {
                assert!(*x >= *lo && *x <= *hi);
            }
        }
        let (a, b) = (&rows[0], &rows[17]);
        for i in 0..8 {
            let ab = &rows[1 + i];
            let ba = &rows[9 + i];
            for k in 0..8 {
                assert_eq!(ab[k], if k == i { b[k] } else { a[k] });
                assert_eq!(ba[k], if k == i { a[k] } else { b[k] });
            }
        }
        assert_eq!(saltelli_sample(&p, 100), Err(SensitivityError::SampleSize(100)));
    }

    #[test]
    fn additive_model_has_no_interactions() {
        let p = unit(3);
        let a = [1.0, 2.0, 3.0];
        let r = analyze(&p, 1024, |x| x.iter().zip(&a).map(|(x, a)| a * x).sum(), 200, 7).unwrap();
        let norm: f64 = a.iter().map(|v| v * v).sum();
        for i in 0..3 {
            assert!((r.first[i] - a[i] * a[i] / norm).abs() < 0.02, "{r:?}");
            assert!((r.total[i] - r.first[i]).abs() < 0.02);
        }
    }

    #[test]
    fn affine_rescaling_leaves_indices_unchanged() {
        let p = unit(3);
        let f = |x: &[f64]| x[0] + x[1] * x[2];
        let r1 = analyze(&p, 256, f, 50, 1).unwrap();
        let r2 = analyze(&p, 256, |x| 3.0 * f(x) - 7.0, 50, 1).unwrap();
        for i in 0..3 {
            assert!((r1.first[i] - r2.first[i]).abs() < 1e-9);
            assert!((r1.total[i] - r2.total[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_output_is_reported() {
        assert_eq!(analyze(&unit(2), 16, |_| 1.0, 10, 1), Err(SensitivityError::ZeroVariance));
    }

    #[test]
    fn non_finite_outputs_are_imputed() {
        let p = unit(2);
        let rows = saltelli_sample(&p, 64).unwrap();
        let mut y: Vec<f64> = rows.iter().map(|x| x[0] + 0.5 * x[1]).collect();
        y[6] = f64::NAN;
        y[13] = f64::INFINITY;
        let r = sobol_indices(&p, &y, 10, 1).unwrap();
        assert_eq!(r.imputed, 2);
        assert!(r.first.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn single_size_scan_has_one_row() {
        let rows = convergence_scan(&unit(2), &[32], |x| x[0], 10, 1).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].change.is_none() && !rows[0].converged);
    }
}
