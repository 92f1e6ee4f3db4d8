//! Disturbance-coefficient fields, two-cluster trade-off regression,
//! objective deltas relative to the cheapest design, and the run report.

use crate::dynamics::{self, ControlGains};
use crate::geometry::{Design, DesignVector};
use crate::hydro::{FreeSurfaceField, SurfaceGrid};
use crate::optimize::{self, EvalSettings, EvaluationRecord};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::fmt::Write as _;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PostprocessError {
    #[error("front is empty")]
    EmptyFront,
    #[error("clustering needs at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("solve failed: {0}")]
    Solve(String),
}

/// Wave-height ratio `|ζ_total| / |ζ_incident|` on a grid; `None` inside a
/// waterline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisturbanceField {
    pub grid: SurfaceGrid,
    pub kd: Vec<Option<f64>>,
}

impl DisturbanceField {
    pub fn from_elevation(field: &FreeSurfaceField) -> Self {
        let kd = field
            .total
            .iter()
            .zip(&field.incident)
            .map(|(t, i)| match (t, i) {
                (Some(t), Some(i)) if i.norm() > 0.0 => Some(t.norm() / i.norm()),
                _ => None,
            })
            .collect();
        Self { grid: field.grid.clone(), kd }
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("x_m,y_m,kd\n");
        for (p, k) in self.grid.points().iter().zip(&self.kd) {
            match k {
                Some(k) => writeln!(out, "{:.6e},{:.6e},{:.6e}", p[0], p[1], k),
                None => writeln!(out, "{:.6e},{:.6e},", p[0], p[1]),
            }
            .unwrap();
        }
        out
    }
}

/// Square of side `wavelengths` incident wavelengths centred on the layout
/// centroid, `points` a side. The usual choice is 8 and 200.
pub fn wavelength_grid(design: &Design, settings: &EvalSettings, wavelengths: f64, points: usize) -> SurfaceGrid {
    let k = settings.params.omega.powi(2) / settings.params.g;
    let wavelength = 2.0 * std::f64::consts::PI / k;
    SurfaceGrid::new(design.layout.centroid(), 0.5 * wavelengths * wavelength, points)
}

/// Solves the design with its tuned and saturated gains and evaluates `k_d`
/// on `grid`.
pub fn disturbance_coefficient(design: &Design, settings: &EvalSettings, grid: SurfaceGrid) -> Result<DisturbanceField, PostprocessError> {
    let p = &settings.params;
    if design.layout.is_empty() {
        let field = FreeSurfaceField::incident_only(grid, p.omega, p.g, p.heading, p.amplitude);
        return Ok(DisturbanceField::from_elevation(&field));
    }
    let err = |e: &dyn std::fmt::Display| PostprocessError::Solve(e.to_string());
    let res = settings.resolution.unwrap_or_else(|| crate::mesh::resolution_for_radius(design.geometry.radius));
    let problem = optimize::solve_problem(&design.geometry, &design.layout, p, res, settings.bem).map_err(|e| err(&e))?;
    let (hydro, rad, diff) = problem.coefficients(&design.geometry, p.heading).map_err(|e| err(&e))?;
    let gains = ControlGains::tuned(&hydro, design.damping.clone()).map_err(|e| err(&e))?;
    let sat = dynamics::saturate(&hydro, &gains, p.force_max, p.amplitude, settings.saturation).map_err(|e| err(&e))?;
    // Heave velocity is −iω times the displacement amplitude.
    let velocities: Vec<C64> = sat.response.iter().map(|e| C64::new(0.0, -p.omega) * e).collect();
    let field = problem.free_surface_elevation(&rad, &diff, &velocities, p.amplitude, &grid);
    Ok(DisturbanceField::from_elevation(&field))
}

/// One point of a Pareto front as needed for the trade-off analysis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontPoint {
    pub lcoe: f64,
    pub space: f64,
    pub q: Option<f64>,
    pub damping: Vec<f64>,
    pub design: DesignVector,
}

impl From<&EvaluationRecord> for FrontPoint {
    fn from(r: &EvaluationRecord) -> Self {
        Self {
            lcoe: r.objectives[0],
            space: r.objectives[1],
            q: r.diagnostics.q,
            damping: r.diagnostics.damping.clone(),
            design: r.design.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionFit {
    pub cluster: usize,
    pub points: usize,
    /// $/kWh
    pub intercept: f64,
    /// $/kWh per metre
    pub slope: f64,
    pub r_squared: f64,
    /// Range of the regressor in the cluster.
    pub space_range: (f64, f64),
}

/// Ordinary least squares `y = a + b x`. `None` for fewer than two points or
/// a constant regressor.
pub fn ols(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let sse: f64 = x.iter().zip(y).map(|(xi, yi)| (yi - a - b * xi).powi(2)).sum();
    let r2 = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    Some((a, b, r2))
}

/// Splits the front at the largest gap in the space objective and fits LCOE
/// against space in each part. Clusters are numbered by ascending space; a
/// cluster with fewer than two distinct points gets no fit.
pub fn cluster_and_fit(front: &[FrontPoint]) -> Result<Vec<RegressionFit>, PostprocessError> {
    if front.len() < 4 {
        return Err(PostprocessError::TooFewPoints(front.len()));
    }
    let mut pts: Vec<(f64, f64)> = front.iter().map(|p| (p.space, p.lcoe)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let split = (1..pts.len())
        .max_by(|&i, &j| (pts[i].0 - pts[i - 1].0).total_cmp(&(pts[j].0 - pts[j - 1].0)).then(j.cmp(&i)))
        .unwrap();
    let fits = [&pts[..split], &pts[split..]]
        .iter()
        .enumerate()
        .filter_map(|(c, part)| {
            let (x, y): (Vec<f64>, Vec<f64>) = part.iter().copied().unzip();
            ols(&x, &y).map(|(a, b, r2)| RegressionFit {
                cluster: c + 1,
                points: part.len(),
                intercept: a,
                slope: b,
                r_squared: r2,
                space_range: (x[0], x[x.len() - 1]),
            })
        })
        .collect();
    Ok(fits)
}

pub fn fits_csv(fits: &[RegressionFit]) -> String {
    let mut out = String::from("cluster,points,intercept_usd_per_kwh,slope_usd_per_kwh_per_m,r_squared,space_min_m,space_max_m\n");
    for f in fits {
        writeln!(
            out,
            "{},{},{:.6e},{:.6e},{:.6},{:.6e},{:.6e}",
            f.cluster, f.points, f.intercept, f.slope, f.r_squared, f.space_range.0, f.space_range.1
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Delta {
    pub lcoe: f64,
    pub space: f64,
    /// `LCOE / LCOE_min − 1`
    pub lcoe_change: f64,
    /// `SPACE / SPACE(min-LCOE design) − 1`
    pub space_change: f64,
}

/// Changes of both objectives relative to the minimum-LCOE design, sorted by
/// ascending LCOE.
pub fn normalized_deltas(front: &[FrontPoint]) -> Result<Vec<Delta>, PostprocessError> {
    let mut pts: Vec<&FrontPoint> = front.iter().collect();
    pts.sort_by(|a, b| a.lcoe.total_cmp(&b.lcoe).then(a.space.total_cmp(&b.space)));
    let best = *pts.first().ok_or(PostprocessError::EmptyFront)?;
    Ok(pts
        .iter()
        .map(|p| Delta { lcoe: p.lcoe, space: p.space, lcoe_change: p.lcoe / best.lcoe - 1.0, space_change: p.space / best.space - 1.0 })
        .collect())
}

pub fn deltas_csv(deltas: &[Delta]) -> String {
    let mut out = String::from("lcoe_usd_per_kwh,space_max_m,lcoe_change,space_change\n");
    for d in deltas {
        writeln!(out, "{:.6e},{:.6e},{:.6e},{:.6e}", d.lcoe, d.space, d.lcoe_change, d.space_change).unwrap();
    }
    out
}

/// Population standard deviation over mean.
pub fn coefficient_of_variation(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean != 0.0).then(|| var.sqrt() / mean)
}

/// Plain-text summary with fixed float formatting.
pub fn report(front: &[FrontPoint]) -> Result<String, PostprocessError> {
    let deltas = normalized_deltas(front)?;
    let mut by_lcoe: Vec<&FrontPoint> = front.iter().collect();
    by_lcoe.sort_by(|a, b| a.lcoe.total_cmp(&b.lcoe).then(a.space.total_cmp(&b.space)));
    let best = by_lcoe[0];
    let compact = by_lcoe.iter().min_by(|a, b| a.space.total_cmp(&b.space).then(a.lcoe.total_cmp(&b.lcoe))).unwrap();
    let mut s = String::new();
    writeln!(s, "Pareto front").unwrap();
    writeln!(s, "  designs: {}", front.len()).unwrap();
    writeln!(s, "  LCOE range: {:.4} to {:.4} $/kWh", best.lcoe, by_lcoe[by_lcoe.len() - 1].lcoe).unwrap();
    writeln!(s, "  space range: {:.2} to {:.2} m", compact.space, by_lcoe.iter().map(|p| p.space).fold(f64::MIN, f64::max)).unwrap();
    writeln!(s, "Minimum-LCOE design").unwrap();
    writeln!(s, "  LCOE: {:.4} $/kWh, space: {:.2} m", best.lcoe, best.space).unwrap();
    if let Some(cv) = coefficient_of_variation(&best.damping) {
        let mean = best.damping.iter().sum::<f64>() / best.damping.len() as f64;
        writeln!(s, "  mean damping: {:.1} kNs/m, coefficient of variation: {:.4}", mean / 1e3, cv).unwrap();
    }
    writeln!(s, "Minimum-space design").unwrap();
    writeln!(
        s,
        "  LCOE: {:.4} $/kWh ({:+.2}%), space: {:.2} m ({:+.2}%)",
        compact.lcoe,
        100.0 * (compact.lcoe / best.lcoe - 1.0),
        compact.space,
        100.0 * (compact.space / best.space - 1.0)
    )
    .unwrap();
    let qs: Vec<f64> = front.iter().filter_map(|p| p.q).collect();
    if !qs.is_empty() {
        let (lo, hi) = qs.iter().fold((f64::MAX, f64::MIN), |(a, b), &q| (a.min(q), b.max(q)));
        writeln!(s, "q-factor").unwrap();
        writeln!(s, "  range: {lo:.4} to {hi:.4}").unwrap();
        if let Some(q) = best.q {
            writeln!(s, "  minimum-LCOE design: {q:.4}").unwrap();
        }
    }
    writeln!(s, "Trade-off fits (LCOE = intercept + slope * space)").unwrap();
    match cluster_and_fit(front) {
        Ok(fits) => {
            for f in fits {
                writeln!(
                    s,
                    "  cluster {}: {} points, {:.4} {:+.6} * space, R^2 {:.4}",
                    f.cluster, f.points, f.intercept, f.slope, f.r_squared
                )
                .unwrap();
            }
        }
        Err(e) => writeln!(s, "  skipped: {e}").unwrap(),
    }
    writeln!(s, "  largest LCOE change on the front: {:+.2}%", 100.0 * deltas.last().unwrap().lcoe_change).unwrap();
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economics::EconConfig;
    use crate::geometry::{ArrayLayout, ParameterSet, WecGeometry};
    use crate::mesh::MeshResolution;

    fn pt(space: f64, lcoe: f64) -> FrontPoint {
        FrontPoint { lcoe, space, q: Some(1.0), damping: vec![1.0], design: DesignVector::new(vec![]) }
    }

    #[test]
    fn ols_is_exact_on_a_line() {
        let x: Vec<f64> = (0..20).map(|i| 30.0 + 7.0 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|x| 0.2475 - 0.0003 * x).collect();
        let (a, b, r2) = ols(&x, &y).unwrap();
        assert!((a - 0.2475).abs() < 1e-12 && (b + 0.0003).abs() < 1e-12);
        assert_eq!(r2, 1.0);
        assert!(ols(&[1.0], &[1.0]).is_none());
        assert!(ols(&[2.0, 2.0], &[1.0, 3.0]).is_none());
    }

    #[test]
    fn residuals_are_orthogonal_to_the_regressor() {
        let x = [1.0, 2.0, 4.0, 7.0, 11.0];
        let y = [0.3, 0.1, 0.5, 0.2, 0.9];
        let (a, b, _) = ols(&x, &y).unwrap();
        let dot: f64 = x.iter().zip(&y).map(|(x, y)| x * (y - a - b * x)).sum();
        let sum: f64 = x.iter().zip(&y).map(|(x, y)| y - a - b * x).sum();
        assert!(dot.abs() < 1e-10 && sum.abs() < 1e-10);
    }

    #[test]
    fn split_at_largest_gap_recovers_two_lines() {
        let mut front: Vec<FrontPoint> = (0..6).map(|i| 40.0 + 4.0 * i as f64).map(|x| pt(x, 0.3035 - 0.0012 * x)).collect();
        front.extend((0..6).map(|i| 150.0 + 10.0 * i as f64).map(|x| pt(x, 0.2475 - 0.0003 * x)));
        let fits = cluster_and_fit(&front).unwrap();
        assert_eq!(fits.len(), 2);
        assert!((fits[0].intercept - 0.3035).abs() < 1e-12 && (fits[0].slope + 0.0012).abs() < 1e-12);
        assert!((fits[1].intercept - 0.2475).abs() < 1e-12 && (fits[1].slope + 0.0003).abs() < 1e-12);
        front.reverse();
        front.swap(2, 9);
        assert_eq!(cluster_and_fit(&front).unwrap(), fits);
        assert_eq!(cluster_and_fit(&front[..3]), Err(PostprocessError::TooFewPoints(3)));
    }

    #[test]
    fn degenerate_cluster_is_skipped() {
        let front = vec![pt(10.0, 0.3), pt(100.0, 0.25), pt(101.0, 0.24), pt(102.0, 0.23)];
        let fits = cluster_and_fit(&front).unwrap();
        assert_eq!(fits.len(), 1);
        assert_eq!(fits[0].cluster, 2);
    }

    #[test]
    fn deltas_are_relative_to_min_lcoe() {
        let front = vec![pt(60.0, 0.22), pt(100.0, 0.20), pt(80.0, 0.21)];
        let d = normalized_deltas(&front).unwrap();
        assert_eq!((d[0].lcoe_change, d[0].space_change), (0.0, 0.0));
        assert!((d[2].space_change + 0.4).abs() < 1e-12 && (d[2].lcoe_change - 0.1).abs() < 1e-12);
        assert!(d.windows(2).all(|w| w[0].lcoe_change <= w[1].lcoe_change && w[0].space_change >= w[1].space_change));
        assert_eq!(normalized_deltas(&[]), Err(PostprocessError::EmptyFront));
    }

    #[test]
    fn report_is_byte_stable() {
        let front = vec![pt(60.0, 0.22), pt(100.0, 0.20), pt(80.0, 0.21), pt(61.0, 0.219)];
        assert_eq!(report(&front).unwrap(), report(&front).unwrap());
        assert!(report(&front).unwrap().contains("minimum-LCOE design: 1.0000"));
    }

    #[test]
    fn cov_examples() {
        assert_eq!(coefficient_of_variation(&[3.0, 3.0]), Some(0.0));
        assert!((coefficient_of_variation(&[1.0, 3.0]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(coefficient_of_variation(&[]), None);
    }

    fn settings() -> EvalSettings {
        let mut s = EvalSettings::new(ParameterSet::default(), EconConfig::new(1e5));
        s.resolution = Some(MeshResolution::new(2, 10, 4));
        s
    }

    #[test]
    fn empty_array_leaves_the_wave_undisturbed() {
        let d = Design { geometry: WecGeometry::cylinder(4.0, 1.6), layout: ArrayLayout::new(vec![]), damping: vec![] };
        let f = disturbance_coefficient(&d, &settings(), SurfaceGrid::new([0.0, 0.0], 100.0, 7)).unwrap();
        assert!(f.kd.iter().all(|k| (k.unwrap() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn far_field_tends_to_incident_wave() {
        let d = Design { geometry: WecGeometry::cylinder(2.0, 0.8), layout: ArrayLayout::new(vec![[0.0, 0.0]]), damping: vec![1e5] };
        let s = settings();
        // Every point at least 20 diameters from the body.
        let grid = SurfaceGrid { xs: vec![-80.0, -40.0, 0.0, 40.0, 80.0], ys: vec![-80.0, 80.0] };
        let near = disturbance_coefficient(&d, &s, SurfaceGrid::new([0.0, 0.0], 3.0, 3)).unwrap();
        assert_eq!(near.kd[4], None);
        let far = disturbance_coefficient(&d, &s, grid).unwrap();
        let mean = far.kd.iter().map(|k| (k.unwrap() - 1.0).abs()).sum::<f64>() / far.kd.len() as f64;
        assert!(mean < 0.05, "{mean}");
        let mut shifted = s.clone();
        shifted.params.heading = 0.0;
        let a = disturbance_coefficient(&d, &shifted, SurfaceGrid::new([0.0, 0.0], 30.0, 5)).unwrap();
        assert!(a.kd.iter().flatten().all(|k| k.is_finite() && *k >= 0.0));
    }
}
