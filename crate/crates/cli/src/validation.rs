//! Reference comparisons: two-cluster array power and the two saturation
//! methods.

use crate::fixtures;
use std::fmt::Write as _;
use wecarray::dynamics::{self, ControlGains, SaturationMethod};
use wecarray::geometry::{ArrayLayout, WecGeometry};
use wecarray::hydro::{BemOptions, BemProblem, HydroCoefficients};
use wecarray::mesh;

const RHO: f64 = 1025.0;
const G: f64 = 9.81;

/// Published two-cluster totals [kW] by cluster spacing [m].
pub const CLUSTER_REFERENCE: [(f64, f64); 3] = [(500.0, 1392.0), (1000.0, 1707.0), (2000.0, 1589.0)];
pub const CLUSTER_TOLERANCE: f64 = 0.03;

/// Published saturated cluster power [kW] for the all-at-once and
/// sequential methods at F_max = 1e5 N.
pub const SATURATION_REFERENCE: (f64, f64) = (507.9, 505.9);
pub const SATURATION_FORCE_N: f64 = 1e5;
pub const SATURATION_TOLERANCE: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ValidationError(String);

fn solve(geom: &WecGeometry, layout: &ArrayLayout, omega: f64, bem: BemOptions) -> Result<HydroCoefficients, ValidationError> {
    let res = mesh::resolution_for_radius(geom.radius);
    let meshes = layout
        .positions
        .iter()
        .map(|&c| mesh::build_cylinder_mesh(geom, res, c))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ValidationError(e.to_string()))?;
    let problem = BemProblem::new(meshes, omega, RHO, G, bem).map_err(|e| ValidationError(e.to_string()))?;
    let (h, _, _) = problem.coefficients(geom, 0.0).map_err(|e| ValidationError(e.to_string()))?;
    Ok(h)
}

fn total_kw(h: &HydroCoefficients, gains: &ControlGains, f_max: f64, method: SaturationMethod) -> Result<f64, ValidationError> {
    let s = dynamics::saturate(h, gains, f_max, 1.0, method).map_err(|e| ValidationError(e.to_string()))?;
    Ok(dynamics::compute_power(&s.response, &s.gains.damping, h.omega).iter().sum::<f64>() / 1e3)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRow {
    pub spacing_m: f64,
    pub reference_kw: f64,
    pub computed_kw: f64,
}

impl ClusterRow {
    pub fn deviation(&self) -> f64 {
        self.computed_kw / self.reference_kw - 1.0
    }

    pub fn passes(&self) -> bool {
        self.deviation().abs() <= CLUSTER_TOLERANCE
    }
}

/// Two seven-body clusters under resistive control, unit-amplitude 6 s waves
/// from β = 0, no force limit.
pub fn cluster_comparison(bem: BemOptions) -> Result<Vec<ClusterRow>, ValidationError> {
    let omega = 2.0 * std::f64::consts::PI / fixtures::CLUSTER_PERIOD_S;
    let hull = fixtures::cluster_hull();
    CLUSTER_REFERENCE
        .iter()
        .map(|&(spacing_m, reference_kw)| {
            let layout = fixtures::two_clusters(spacing_m);
            let h = solve(&hull, &layout, omega, bem)?;
            let gains = ControlGains::resistive(vec![fixtures::CLUSTER_DAMPING; layout.len()]);
            let computed_kw = total_kw(&h, &gains, f64::INFINITY, SaturationMethod::Off)?;
            Ok(ClusterRow { spacing_m, reference_kw, computed_kw })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaturationRow {
    pub layout: &'static str,
    pub all_at_once_kw: f64,
    pub sequential_kw: f64,
    /// Published values where available.
    pub reference_kw: Option<(f64, f64)>,
}

impl SaturationRow {
    pub fn relative_difference(&self) -> f64 {
        (self.all_at_once_kw - self.sequential_kw).abs() / self.all_at_once_kw
    }

    pub fn passes(&self) -> bool {
        let within = |v: f64, r: f64| (v / r - 1.0).abs() <= SATURATION_TOLERANCE;
        let reference = self.reference_kw.is_none_or(|(a, s)| within(self.all_at_once_kw, a) && within(self.sequential_kw, s));
        reference && self.relative_difference() <= SATURATION_TOLERANCE
    }
}

/// Both saturation methods at F_max = 1e5 N on one resistive cluster and on
/// the two reactively tuned diamonds.
pub fn saturation_comparison(bem: BemOptions) -> Result<Vec<SaturationRow>, ValidationError> {
    let omega_cluster = 2.0 * std::f64::consts::PI / fixtures::CLUSTER_PERIOD_S;
    let wp = wecarray::geometry::ParameterSet::default();
    let cases: [(&'static str, WecGeometry, ArrayLayout, f64, bool); 3] = [
        ("cluster", fixtures::cluster_hull(), ArrayLayout::new(fixtures::cluster()), omega_cluster, false),
        ("diamond (tight)", fixtures::diamond_hull(), fixtures::diamond_tight(), wp.omega, true),
        ("diamond (spacious)", fixtures::diamond_hull(), fixtures::diamond_spacious(), wp.omega, true),
    ];
    cases
        .into_iter()
        .map(|(name, hull, layout, omega, reactive)| {
            let h = solve(&hull, &layout, omega, bem)?;
            let damping = if reactive { fixtures::DIAMOND_DAMPING } else { fixtures::CLUSTER_DAMPING };
            let gains = if reactive {
                ControlGains::tuned(&h, vec![damping; layout.len()]).map_err(|e| ValidationError(e.to_string()))?
            } else {
                ControlGains::resistive(vec![damping; layout.len()])
            };
            Ok(SaturationRow {
                layout: name,
                all_at_once_kw: total_kw(&h, &gains, SATURATION_FORCE_N, SaturationMethod::All)?,
                sequential_kw: total_kw(&h, &gains, SATURATION_FORCE_N, SaturationMethod::Sequential)?,
                reference_kw: (!reactive).then_some(SATURATION_REFERENCE),
            })
        })
        .collect()
}

pub fn report(clusters: &[ClusterRow], saturation: &[SaturationRow]) -> String {
    let mut s = String::from("Two-cluster array power (resistive control, no force limit)\n");
    writeln!(s, "{:>10} {:>12} {:>12} {:>10}  status", "spacing_m", "reference_kw", "computed_kw", "deviation").unwrap();
    for r in clusters {
        writeln!(
            s,
            "{:>10.0} {:>12.1} {:>12.1} {:>+9.2}%  {}",
            r.spacing_m,
            r.reference_kw,
            r.computed_kw,
            100.0 * r.deviation(),
            if r.passes() { "ok" } else { "FAIL" }
        )
        .unwrap();
    }
    writeln!(s, "Force saturation at F_max = {SATURATION_FORCE_N:.0e} N").unwrap();
    writeln!(s, "{:>20} {:>12} {:>12} {:>10} {:>16}  status", "layout", "all_kw", "sequential_kw", "difference", "reference_kw").unwrap();
    for r in saturation {
        let reference = r.reference_kw.map(|(a, b)| format!("{a:.1}/{b:.1}")).unwrap_or_else(|| "-".into());
        writeln!(
            s,
            "{:>20} {:>12.1} {:>12.1} {:>9.2}% {:>16}  {}",
            r.layout,
            r.all_at_once_kw,
            r.sequential_kw,
            100.0 * r.relative_difference(),
            reference,
            if r.passes() { "ok" } else { "FAIL" }
        )
        .unwrap();
    }
    s
}
