//! Design evaluation (decode → mesh → hydro → control → power → LCOE), the
//! mixed-variable NSGA-II driver and nonphysical-design filtering.

mod nsga2;

pub use nsga2::{dominates, non_dominated_sort, run_nsga2, GenerationStats, OptimizerConfig, OptimizeError, ParetoSet};

use crate::dynamics::{self, ControlGains, SaturationMethod};
use crate::economics::{self, EconConfig, EconParams, LcoeResult};
use crate::geometry::{self, ArrayLayout, DesignBounds, DesignVector, ParameterSet, WecGeometry};
use crate::hydro::{BemOptions, BemProblem, HydroCoefficients};
use crate::mesh::{self, MeshResolution};
use serde::Serialize;
use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

/// Objective values given to designs that could not be evaluated.
pub const SENTINEL: f64 = 1e6;

/// Everything the evaluator needs besides the design itself.
#[derive(Debug, Clone)]
pub struct EvalSettings {
    pub params: ParameterSet,
    pub econ: EconConfig,
    pub bounds: DesignBounds,
    pub bem: BemOptions,
    pub saturation: SaturationMethod,
    /// Mesh used for every body; `None` picks the radius-dependent default.
    pub resolution: Option<MeshResolution>,
    /// q-factors above this are treated as nonphysical by [`filter_nonphysical`].
    pub q_ceiling: f64,
}

impl EvalSettings {
    pub fn new(params: ParameterSet, econ: EconConfig) -> Self {
        Self {
            params,
            econ,
            bounds: DesignBounds::default(),
            bem: BemOptions::compressed(),
            saturation: SaturationMethod::All,
            resolution: None,
            q_ceiling: 1.5,
        }
    }

    pub fn econ_params(&self) -> EconParams {
        EconParams::from_parameters(&self.params, &self.econ)
    }

    fn resolution_for(&self, r: f64) -> MeshResolution {
        self.resolution.unwrap_or_else(|| mesh::resolution_for_radius(r))
    }
}

/// Per-stage outputs kept for reports and filtering.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub kappa: Option<f64>,
    pub mu: Vec<f64>,
    pub q: Option<f64>,
    pub powers_w: Vec<f64>,
    pub damping: Vec<f64>,
    pub stiffness: Vec<f64>,
    pub mass_kg: Option<f64>,
    pub saturation_fallbacks: usize,
    pub lcoe: Option<LcoeResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationRecord {
    pub design: DesignVector,
    /// `[LCOE $/kWh, SPACE_max m]`
    pub objectives: [f64; 2],
    /// Spacing margin `C0`; feasible when `≤ 0`.
    pub constraint: f64,
    pub diagnostics: Diagnostics,
    pub nonphysical: bool,
}

impl EvaluationRecord {
    pub fn feasible(&self) -> bool {
        self.constraint <= 0.0
    }

    /// Feasible, physically plausible and evaluated.
    pub fn valid(&self) -> bool {
        self.feasible() && !self.nonphysical
    }

    fn flagged(design: DesignVector, constraint: f64, diagnostics: Diagnostics) -> Self {
        Self { design, objectives: [SENTINEL, SENTINEL], constraint, diagnostics, nonphysical: true }
    }

    pub fn csv_header(n: usize) -> String {
        format!(
            "{},lcoe_usd_per_kwh,space_max_m,c0_m,kappa,q,total_power_w,saturation_fallbacks,nonphysical,error",
            DesignVector::csv_header(n)
        )
    }

    pub fn to_csv_row(&self) -> String {
        let d = &self.diagnostics;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        format!(
            "{},{:?},{:?},{:?},{},{},{:?},{},{},{}",
            self.design.to_csv_row(),
            self.objectives[0],
            self.objectives[1],
            self.constraint,
            opt(d.kappa),
            opt(d.q),
            d.powers_w.iter().sum::<f64>(),
            d.saturation_fallbacks,
            self.nonphysical,
            d.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
        )
    }
}

/// Array coefficients and those of one body alone at the same frequency
/// and heading.
#[derive(Debug, Clone)]
pub struct HydroPair {
    pub array: Arc<HydroCoefficients>,
    pub isolated: Arc<HydroCoefficients>,
}

type Entry = Result<Arc<HydroCoefficients>, String>;

/// Assembled array problem and its isolated first body, at one frequency.
type Problems = Arc<Result<(BemProblem, BemProblem), String>>;

/// Assembled problems kept for reuse when only the heading changes.
const RECENT_PROBLEMS: usize = 2;

/// Memoised hydrodynamic coefficients, keyed on geometry, positions, mesh,
/// frequency and heading. Safe to share between worker threads; a race on
/// the same key only duplicates work. Use one cache per set of BEM options.
///
/// The last few factorised problems are also kept, keyed without heading, so
/// a new heading at a recent frequency costs one diffraction solve instead of
/// a full assembly.
#[derive(Default)]
pub struct HydroCache {
    entries: Mutex<HashMap<Vec<u64>, Entry>>,
    recent: Mutex<VecDeque<(Vec<u64>, Problems)>>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl std::fmt::Debug for HydroCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HydroCache").field("entries", &self.len()).field("hits", &self.hits()).field("misses", &self.misses()).finish()
    }
}

fn cache_key(geom: &WecGeometry, positions: &[[f64; 2]], params: &ParameterSet, res: MeshResolution, heading: bool) -> Vec<u64> {
    let mut key = vec![
        geom.radius.to_bits(),
        geom.length.to_bits(),
        geom.draft().to_bits(),
        params.omega.to_bits(),
        if heading { params.heading.to_bits() } else { 0 },
        params.rho.to_bits(),
        params.g.to_bits(),
        res.nr as u64,
        res.ntheta as u64,
        res.nx as u64,
    ];
    key.extend(positions.iter().flat_map(|p| [p[0].to_bits(), p[1].to_bits()]));
    key
}

impl HydroCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Lookups answered from memory.
    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    /// Lookups that needed a boundary-element solve.
    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn lookup(&self, key: &[u64]) -> Option<Entry> {
        let hit = self.entries.lock().expect("cache lock").get(key).cloned();
        let counter = if hit.is_some() { &self.hits } else { &self.misses };
        counter.fetch_add(1, Ordering::Relaxed);
        hit
    }

    fn store(&self, key: Vec<u64>, value: Entry) {
        self.entries.lock().expect("cache lock").insert(key, value);
    }

    fn problems(&self, geom: &WecGeometry, layout: &ArrayLayout, params: &ParameterSet, res: MeshResolution, bem: BemOptions) -> Problems {
        let key = cache_key(geom, &layout.positions, params, res, false);
        if let Some((_, p)) = self.recent.lock().expect("cache lock").iter().find(|(k, _)| *k == key) {
            return p.clone();
        }
        let solved = solve_problem(geom, layout, params, res, bem)
            .and_then(|p| Ok((p.isolated(0, bem.condition_threshold)?, p)))
            .map(|(single, array)| (array, single))
            .map_err(|e| e.to_string());
        let solved = Arc::new(solved);
        let mut recent = self.recent.lock().expect("cache lock");
        if recent.len() == RECENT_PROBLEMS {
            recent.pop_front();
        }
        recent.push_back((key, solved.clone()));
        solved
    }

    /// Coefficients of `layout` filled with copies of `geom`, and of the
    /// first body alone. The isolated problem reuses the array's self block.
    pub fn get(
        &self,
        geom: &WecGeometry,
        layout: &ArrayLayout,
        params: &ParameterSet,
        res: MeshResolution,
        bem: BemOptions,
    ) -> Result<HydroPair, String> {
        let array_key = cache_key(geom, &layout.positions, params, res, true);
        let single_key = cache_key(geom, &[[0.0, 0.0]], params, res, true);
        let (array, single) = match (self.lookup(&array_key), self.lookup(&single_key)) {
            (Some(a), Some(s)) => (a, s),
            (Some(a), None) => {
                let s = solve_problem(geom, &ArrayLayout::new(vec![[0.0, 0.0]]), params, res, bem)
                    .and_then(|p| Ok(p.coefficients(geom, params.heading)?.0))
                    .map(Arc::new)
                    .map_err(|e| e.to_string());
                self.store(single_key, s.clone());
                (a, s)
            }
            (cached, s) => {
                let problems = self.problems(geom, layout, params, res, bem);
                let coefficients = |p: &BemProblem| p.coefficients(geom, params.heading).map(|c| Arc::new(c.0)).map_err(|e| e.to_string());
                let (a, fresh) = match problems.as_ref() {
                    Ok((array, single)) => (coefficients(array), coefficients(single)),
                    Err(e) => (Err(e.clone()), Err(e.clone())),
                };
                let a = cached.unwrap_or(a);
                self.store(array_key, a.clone());
                let s = match s {
                    Some(s) => s,
                    None => {
                        self.store(single_key, fresh.clone());
                        fresh
                    }
                };
                (a, s)
            }
        };
        Ok(HydroPair { array: array?, isolated: single.map_err(|e| format!("isolated body: {e}"))? })
    }
}

pub(crate) fn solve_problem(
    geom: &WecGeometry,
    layout: &ArrayLayout,
    params: &ParameterSet,
    res: MeshResolution,
    bem: BemOptions,
) -> Result<BemProblem, crate::hydro::HydroError> {
    let meshes = layout
        .positions
        .iter()
        .map(|&c| mesh::build_cylinder_mesh(geom, res, c))
        .collect::<Result<Vec<_>, _>>()?;
    BemProblem::new(meshes, params.omega, params.rho, params.g, bem)
}

/// Runs the full chain for one design. Never panics on bad designs: failures
/// become flagged records carrying the error text.
pub fn evaluate(v: &DesignVector, settings: &EvalSettings, cache: &HydroCache) -> EvaluationRecord {
    let design = match v.decode(&settings.bounds) {
        Ok(d) => d,
        Err(e) => {
            let diag = Diagnostics { error: Some(format!("decode: {e}")), ..Default::default() };
            return EvaluationRecord::flagged(v.clone(), f64::INFINITY, diag);
        }
    };
    evaluate_design(v, &design.geometry, &design.layout, &design.damping, settings, cache)
}

/// Evaluation of an explicit geometry, layout and damping set. Used directly
/// by fixtures that override the draft.
pub fn evaluate_design(
    v: &DesignVector,
    geom: &WecGeometry,
    layout: &ArrayLayout,
    damping: &[f64],
    settings: &EvalSettings,
    cache: &HydroCache,
) -> EvaluationRecord {
    let p = &settings.params;
    let c0 = geometry::min_spacing_constraint(layout, geom.radius);
    let space = geometry::max_spacing(layout);
    let mut diag = Diagnostics { damping: damping.to_vec(), ..Default::default() };
    if c0 > 0.0 {
        diag.error = Some("spacing constraint violated; hydrodynamics skipped".into());
        return EvaluationRecord::flagged(v.clone(), c0, diag);
    }
    let res = settings.resolution_for(geom.radius);
    let pair = match cache.get(geom, layout, p, res, settings.bem) {
        Ok(h) => h,
        Err(e) => {
            diag.error = Some(format!("hydro: {e}"));
            return EvaluationRecord::flagged(v.clone(), c0, diag);
        }
    };
    let (hydro, single) = (pair.array, pair.isolated);
    diag.kappa = Some(hydro.condition.kappa);
    diag.mass_kg = hydro.mass.first().copied();
    if !hydro.condition.accepted {
        diag.error = Some(format!("condition number {:.3e} at or above threshold", hydro.condition.kappa));
        return EvaluationRecord::flagged(v.clone(), c0, diag);
    }
    let gains = match ControlGains::tuned(&hydro, damping.to_vec()) {
        Ok(g) => g,
        Err(e) => {
            diag.error = Some(format!("gains: {e}"));
            return EvaluationRecord::flagged(v.clone(), c0, diag);
        }
    };
    let (sat, power) = match dynamics::array_power(&hydro, &single, &gains, p.force_max, p.amplitude, settings.saturation) {
        Ok(x) => x,
        Err(e) => {
            diag.error = Some(format!("dynamics: {e}"));
            return EvaluationRecord::flagged(v.clone(), c0, diag);
        }
    };
    diag.mu = sat.mu;
    diag.stiffness = gains.stiffness;
    diag.saturation_fallbacks = sat.fallbacks;
    diag.q = Some(power.q);
    diag.powers_w = power.per_wec;
    let masses = hydro.mass.clone();
    let lcoe = economics::lcoe(&masses, &diag.powers_w, &settings.econ_params());
    let value = lcoe.lcoe;
    diag.lcoe = Some(lcoe);
    if !value.is_finite() {
        diag.error = Some("zero annual energy".into());
        return EvaluationRecord::flagged(v.clone(), c0, diag);
    }
    EvaluationRecord { design: v.clone(), objectives: [value, space], constraint: c0, diagnostics: diag, nonphysical: false }
}

/// Why a record was dropped by [`filter_nonphysical`], if it was.
pub fn nonphysical_reason(r: &EvaluationRecord, settings: &EvalSettings) -> Option<String> {
    let d = &r.diagnostics;
    if r.nonphysical {
        return Some(d.error.clone().unwrap_or_else(|| "flagged".into()));
    }
    if let Some(k) = d.kappa {
        if !(k < settings.bem.condition_threshold) {
            return Some(format!("kappa {k:.3e}"));
        }
    }
    if let Some(q) = d.q {
        if q > settings.q_ceiling {
            return Some(format!("q {q:.3} above ceiling {}", settings.q_ceiling));
        }
    }
    if d.saturation_fallbacks > 0 {
        return Some(format!("{} saturation fallbacks", d.saturation_fallbacks));
    }
    None
}

/// Front without records flagged by condition number, implausible q or a
/// saturation fallback. The unfiltered set stays available to the caller.
pub fn filter_nonphysical(front: &ParetoSet, settings: &EvalSettings) -> ParetoSet {
    let members = front.members.iter().filter(|r| nonphysical_reason(r, settings).is_none()).cloned().collect();
    ParetoSet { members, history: front.history.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economics::RatedPower;

    fn settings() -> EvalSettings {
        let econ =
            EconConfig { m_max_kg: 1e5, rated_power: RatedPower::Reference { kw: 100.0 }, opex_fraction: 0.05, hours_per_year: 8766.0 };
        let mut s = EvalSettings::new(ParameterSet::default(), econ);
        s.resolution = Some(MeshResolution::new(2, 10, 4));
        s
    }

    fn square(spacing: f64, d: f64) -> DesignVector {
        DesignVector::new(vec![8.0, 0.1, d, spacing, 0.0, d, 0.0, spacing, d, spacing, spacing, d])
    }

    #[test]
    fn feasible_design_has_finite_objectives() {
        let s = settings();
        let cache = HydroCache::new();
        let r = evaluate(&square(70.0, 378e3f64.log10()), &s, &cache);
        assert!(!r.nonphysical, "{:?}", r.diagnostics.error);
        assert!(r.objectives[0].is_finite() && r.objectives[0] > 0.0);
        assert!((r.objectives[1] - 70.0 * 2f64.sqrt()).abs() < 1e-9);
        assert!(r.constraint < 0.0);
        assert_eq!(r.diagnostics.powers_w.len(), 4);
        assert!(r.diagnostics.lcoe.as_ref().unwrap().identity_holds());
        assert_eq!(cache.len(), 2);
        let misses = cache.misses();
        let again = evaluate(&square(70.0, 378e3f64.log10()), &s, &cache);
        assert_eq!(again, r);
        assert_eq!(cache.misses(), misses);
    }

    #[test]
    fn crowded_design_is_infeasible_and_skips_hydro() {
        let s = settings();
        let cache = HydroCache::new();
        let r = evaluate(&square(15.0, 5.0), &s, &cache);
        assert!((r.constraint - 5.0).abs() < 1e-12);
        assert!(!r.feasible());
        assert_eq!(r.objectives, [SENTINEL, SENTINEL]);
        assert!(cache.is_empty());
    }

    #[test]
    fn bad_vector_is_flagged_not_panicking() {
        let r = evaluate(&DesignVector::new(vec![8.5, 0.1, 5.0]), &settings(), &HydroCache::new());
        assert!(r.nonphysical && r.diagnostics.error.as_deref().unwrap().starts_with("decode"));
    }

    #[test]
    fn ill_conditioned_system_is_flagged() {
        let mut s = settings();
        s.bem.condition_threshold = 1.0;
        let r = evaluate(&square(70.0, 5.0), &s, &HydroCache::new());
        assert!(r.nonphysical);
        assert_eq!(r.objectives, [SENTINEL, SENTINEL]);
        assert!(r.diagnostics.kappa.unwrap() >= 1.0);
    }

    #[test]
    fn filter_drops_flagged_records_only() {
        let s = settings();
        let cache = HydroCache::new();
        let good = evaluate(&square(70.0, 5.5), &s, &cache);
        let mut bad = good.clone();
        bad.diagnostics.kappa = Some(1e4);
        let mut high_q = good.clone();
        high_q.diagnostics.q = Some(3.0);
        let front = ParetoSet { members: vec![good.clone(), bad, high_q], history: vec![] };
        let kept = filter_nonphysical(&front, &s);
        assert_eq!(kept.members, vec![good.clone()]);
        let clean = ParetoSet { members: vec![good], history: vec![] };
        assert_eq!(filter_nonphysical(&clean, &s), clean);
    }
}
