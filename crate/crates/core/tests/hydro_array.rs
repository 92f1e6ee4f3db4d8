use wecarray::geometry::WecGeometry;
use wecarray::hydro::{BemOptions, BemProblem};
use wecarray::mesh::{build_cylinder_mesh, resolution_for_radius};

fn array(r: f64, l: f64, positions: &[[f64; 2]], opts: BemOptions) -> BemProblem {
    let geom = WecGeometry::cylinder(r, l);
    let meshes = positions.iter().map(|&c| build_cylinder_mesh(&geom, resolution_for_radius(r), c).unwrap()).collect();
    BemProblem::new(meshes, 1.047, 1025.0, 9.81, opts).unwrap()
}

fn rel_sym(m: &[Vec<f64>]) -> f64 {
    let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut worst = 0.0f64;
    for i in 0..m.len() {
        for j in 0..m.len() {
            worst = worst.max((m[i][j] - m[j][i]).abs() / scale);
        }
    }
    worst
}

/// Smallest eigenvalue of a small symmetric matrix by Jacobi rotations.
fn min_eigenvalue(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| 0.5 * (m[i][j] + m[j][i])).collect()).collect();
    for _ in 0..100 {
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).fold(f64::INFINITY, f64::min)
}

#[test]
fn coefficients_are_symmetric_and_damping_is_psd() {
    let layout = [[0.0, 0.0], [22.0, 3.0], [5.0, 25.0], [-18.0, 14.0]];
    let p = array(4.0, 1.6, &layout, BemOptions::dense());
    let rad = p.solve_radiation().unwrap();
    assert!(rel_sym(&rad.added_mass) < 1e-3, "A asym {}", rel_sym(&rad.added_mass));
    assert!(rel_sym(&rad.damping) < 1e-3, "B asym {}", rel_sym(&rad.damping));
    let scale = rad.damping[0][0];
    assert!(min_eigenvalue(&rad.damping) > -1e-6 * scale);
}

#[test]
fn haskind_matches_direct_excitation_in_an_array() {
    let layout = [[0.0, 0.0], [20.0, 0.0], [10.0, 17.0]];
    let p = array(3.5, 2.0, &layout, BemOptions::dense());
    let rad = p.solve_radiation().unwrap();
    for beta in [0.0, 0.7] {
        let diff = p.solve_diffraction(beta).unwrap();
        let hk = p.haskind_excitation(&rad, beta);
        for (d, h) in diff.excitation.iter().zip(&hk) {
            assert!((d - h).norm() / h.norm() < 0.02, "{d} vs {h}");
        }
    }
}

#[test]
fn interaction_fades_with_spacing() {
    let near = array(3.0, 2.0, &[[0.0, 0.0], [15.0, 0.0]], BemOptions::dense()).solve_radiation().unwrap();
    let far = array(3.0, 2.0, &[[0.0, 0.0], [600.0, 0.0]], BemOptions::dense()).solve_radiation().unwrap();
    let iso = array(3.0, 2.0, &[[0.0, 0.0]], BemOptions::dense()).solve_radiation().unwrap();
    assert!(far.added_mass[0][1].abs() < near.added_mass[0][1].abs());
    assert!((far.added_mass[0][0] - iso.added_mass[0][0]).abs() / iso.added_mass[0][0] < 5e-3);
    assert!((far.damping[0][0] - iso.damping[0][0]).abs() / iso.damping[0][0] < 2e-2);
}

#[test]
fn compressed_blocks_reproduce_dense_coefficients() {
    let layout = [[0.0, 0.0], [40.0, 0.0], [0.0, 40.0], [40.0, 40.0]];
    let dense = array(4.0, 1.6, &layout, BemOptions::dense());
    let fast = array(4.0, 1.6, &layout, BemOptions::compressed());
    assert!(fast.matrices().is_low_rank(0, 1));
    let (rd, rf) = (dense.solve_radiation().unwrap(), fast.solve_radiation().unwrap());
    let (dd, df) = (dense.solve_diffraction(0.3).unwrap(), fast.solve_diffraction(0.3).unwrap());
    for a in 0..4 {
        assert!((dd.excitation[a] - df.excitation[a]).norm() / dd.excitation[a].norm() < 0.05);
        assert!((rd.damping[a][a] - rf.damping[a][a]).abs() / rd.damping[a][a] < 0.05);
    }
    let kd = dense.condition().kappa;
    let kf = fast.condition().kappa;
    assert!((kd - kf).abs() / kd < 0.2, "{kd} vs {kf}");
}
