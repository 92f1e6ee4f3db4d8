//! Fixed layouts used by validation, sensitivity and the acceptance checks.

use wecarray::geometry::{ArrayLayout, DesignVector, WecGeometry};

/// Four r = 4 m, ℓ = 0.4 m bodies on a 70 m square grid with the damping of
/// the single-objective grid optimum.
pub fn reference_design() -> DesignVector {
    let geometry = WecGeometry::cylinder(4.0, 0.4);
    let layout = ArrayLayout::new(vec![[0.0, 0.0], [70.0, 0.0], [0.0, 70.0], [70.0, 70.0]]);
    DesignVector::encode(&geometry, &layout, &[3.78e5, 3.82e5, 3.78e5, 3.78e5])
}

/// r = 5 m hull with the 4 m length taken as the full draft.
pub fn cluster_hull() -> WecGeometry {
    WecGeometry::cylinder(5.0, 4.0).with_draft(4.0).expect("draft equals length")
}

pub const CLUSTER_DAMPING: f64 = 3.6e5;
pub const CLUSTER_PERIOD_S: f64 = 6.0;

/// Seven bodies in a line across the wave direction, 30 m apart. Seven is
/// what the saturated cluster power implies (seven isolated bodies at
/// F_max = 1e5 N give 507.5 kW); the spacing is an estimate.
pub fn cluster() -> Vec<[f64; 2]> {
    (0..7).map(|i| [0.0, 30.0 * (i as f64 - 3.0)]).collect()
}

/// Two clusters, the second `gap` metres downstream of the first.
pub fn two_clusters(gap: f64) -> ArrayLayout {
    let c = cluster();
    ArrayLayout::new(c.iter().copied().chain(c.iter().map(|p| [p[0] + gap, p[1]])).collect())
}

/// r = 7 m, ℓ = 0.7 m hull of the diamond layouts.
pub fn diamond_hull() -> WecGeometry {
    WecGeometry::cylinder(7.0, 0.7)
}

pub const DIAMOND_DAMPING: f64 = 5.01e5;

/// Rhombus pointing into the waves with half-diagonals `a` (along the wave)
/// and `a` (across).
pub fn diamond(a: f64) -> ArrayLayout {
    ArrayLayout::new(vec![[0.0, 0.0], [a, a], [a, -a], [2.0 * a, 0.0]])
}

pub fn diamond_tight() -> ArrayLayout {
    diamond(30.0)
}

pub fn diamond_spacious() -> ArrayLayout {
    diamond(60.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use wecarray::geometry::{max_spacing, DesignBounds};

    #[test]
    fn reference_design_decodes() {
        let d = reference_design().decode(&DesignBounds::default()).unwrap();
        assert_eq!(d.geometry.radius, 4.0);
        assert!((d.geometry.length - 0.4).abs() < 1e-12);
        assert!((max_spacing(&d.layout) - 70.0 * 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn layouts_have_the_stated_size() {
        assert_eq!(two_clusters(500.0).len(), 14);
        assert_eq!(two_clusters(500.0).positions[7], [500.0, -90.0]);
        assert_eq!(cluster_hull().draft(), 4.0);
        assert!(max_spacing(&diamond_spacious()) > max_spacing(&diamond_tight()));
    }
}
