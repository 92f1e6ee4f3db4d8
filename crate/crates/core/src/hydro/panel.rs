//! Integrals of `1/|p − ξ|` over flat quadrilateral panels and their gradient
//! with respect to the field point `p`.

use crate::special::gauss_legendre;
use std::f64::consts::PI;

pub(crate) type V3 = [f64; 3];

#[inline]
pub(crate) fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross(a: V3, b: V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub(crate) fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}

/// Geometry needed to integrate over one panel.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Quad {
    pub v: [V3; 4],
    pub centroid: V3,
    /// Unit normal consistent with the counter-clockwise vertex order.
    pub normal: V3,
    pub area: f64,
    pub diameter: f64,
}

impl Quad {
    pub fn new(v: [V3; 4]) -> Self {
        let (centroid, normal, area, diameter) = crate::mesh::quad_properties(v);
        Self { v, centroid, normal, area, diameter }
    }

    /// Mirror image in the plane `z = 0`.
    pub fn reflected(&self) -> Self {
        Self::new(self.v.map(|p| [p[0], p[1], -p[2]]))
    }
}

/// `(∫ dS/r, ∇_p ∫ dS/r)`.
pub(crate) type Rankine = (f64, V3);

/// Closed-form integral over a flat polygon. `on_panel` marks collocation at
/// the panel's own centroid, where the normal derivative is taken as the
/// principal value (zero); the jump term is added by the caller.
pub(crate) fn rankine_exact(p: V3, q: &Quad, on_panel: bool) -> Rankine {
    let n = q.normal;
    let z = dot(sub(p, q.centroid), n);
    let r: [f64; 4] = std::array::from_fn(|k| norm(sub(p, q.v[k])));
    let eps = 1e-12 * q.diameter;
    let mut pot = 0.0;
    let mut grad = [0.0; 3];
    for k in 0..4 {
        let (a, b) = (q.v[k], q.v[(k + 1) % 4]);
        let e = sub(b, a);
        let d = norm(e);
        if d <= eps {
            continue;
        }
        let t = [e[0] / d, e[1] / d, e[2] / d];
        let nu = cross(t, n);
        let (ra, rb) = (r[k], r[(k + 1) % 4]);
        let den = (ra + rb - d).max(1e-300);
        let l = ((ra + rb + d) / den).ln();
        pot += dot(sub(a, p), nu) * l;
        for i in 0..3 {
            grad[i] -= nu[i] * l;
        }
    }
    if !on_panel {
        let omega = signed_solid_angle(p, q, r);
        pot -= z * omega;
        for i in 0..3 {
            grad[i] -= omega * n[i];
        }
    }
    (pot, grad)
}

/// Solid angle subtended by the panel, positive on the side the normal points to.
fn signed_solid_angle(p: V3, q: &Quad, r: [f64; 4]) -> f64 {
    let r0 = sub(q.v[0], p);
    let mut omega = 0.0;
    for k in 1..3 {
        let r1 = sub(q.v[k], p);
        let r2 = sub(q.v[k + 1], p);
        let num = dot(r0, cross(r1, r2));
        let den = r[0] * r[k] * r[k + 1] + dot(r0, r1) * r[k + 1] + dot(r0, r2) * r[k] + dot(r1, r2) * r[0];
        omega -= 2.0 * num.atan2(den);
    }
    omega
}

/// Tensor Gauss rule on the bilinear parametrisation of the quad.
pub(crate) fn rankine_gauss(p: V3, q: &Quad, order: usize) -> Rankine {
    let gl = gauss_legendre(order);
    let v = &q.v;
    let mut pot = 0.0;
    let mut grad = [0.0; 3];
    for (&s, &ws) in gl.nodes.iter().zip(&gl.weights) {
        for (&t, &wt) in gl.nodes.iter().zip(&gl.weights) {
            let sh = [(1.0 - s) * (1.0 - t), (1.0 + s) * (1.0 - t), (1.0 + s) * (1.0 + t), (1.0 - s) * (1.0 + t)];
            let ds = [-(1.0 - t), 1.0 - t, 1.0 + t, -(1.0 + t)];
            let dt = [-(1.0 - s), -(1.0 + s), 1.0 + s, 1.0 - s];
            let mut x = [0.0; 3];
            let mut xs = [0.0; 3];
            let mut xt = [0.0; 3];
            for k in 0..4 {
                for i in 0..3 {
                    x[i] += 0.25 * sh[k] * v[k][i];
                    xs[i] += 0.25 * ds[k] * v[k][i];
                    xt[i] += 0.25 * dt[k] * v[k][i];
                }
            }
            let jac = norm(cross(xs, xt));
            let d = sub(p, x);
            let rr = norm(d);
            let w = ws * wt * jac;
            pot += w / rr;
            let r3 = rr * rr * rr;
            for i in 0..3 {
                grad[i] -= w * d[i] / r3;
            }
        }
    }
    (pot, grad)
}

/// One-point rule at the centroid.
#[inline]
pub(crate) fn rankine_point(p: V3, q: &Quad) -> Rankine {
    let d = sub(p, q.centroid);
    let rr = norm(d);
    let r3 = rr * rr * rr;
    (q.area / rr, [-q.area * d[0] / r3, -q.area * d[1] / r3, -q.area * d[2] / r3])
}

/// Distance thresholds, in panel diameters, for the three integration rules.
pub(crate) const EXACT_WITHIN: f64 = 4.0;
pub(crate) const GAUSS_WITHIN: f64 = 10.0;

/// Picks the cheapest rule that is accurate at this distance.
#[inline]
pub(crate) fn rankine(p: V3, q: &Quad, on_panel: bool) -> Rankine {
    if on_panel {
        return rankine_exact(p, q, true);
    }
    let d = norm(sub(p, q.centroid));
    if d < EXACT_WITHIN * q.diameter {
        rankine_exact(p, q, false)
    } else if d < GAUSS_WITHIN * q.diameter {
        rankine_gauss(p, q, 2)
    } else {
        rankine_point(p, q)
    }
}

/// `−1/(4π)`, the Rankine normalisation used throughout.
pub(crate) const MINUS_INV_4PI: f64 = -1.0 / (4.0 * PI);

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(p: V3, q: &Quad) -> Rankine {
        // Subdivide into 8×8 sub-quads, 12-point rule on each.
        let m = 8;
        let mut pot = 0.0;
        let mut grad = [0.0; 3];
        let lerp = |a: V3, b: V3, t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])];
        let at = |s: f64, t: f64| lerp(lerp(q.v[0], q.v[1], s), lerp(q.v[3], q.v[2], s), t);
        for i in 0..m {
            for j in 0..m {
                let (s0, s1) = (i as f64 / m as f64, (i + 1) as f64 / m as f64);
                let (t0, t1) = (j as f64 / m as f64, (j + 1) as f64 / m as f64);
                let sub_q = Quad { v: [at(s0, t0), at(s1, t0), at(s1, t1), at(s0, t1)], ..*q };
                let (a, g) = rankine_gauss(p, &sub_q, 12);
                pot += a;
                for k in 0..3 {
                    grad[k] += g[k];
                }
            }
        }
        (pot, grad)
    }

    fn quad() -> Quad {
        Quad::new([[0.0, 0.0, -1.0], [1.2, 0.1, -1.0], [1.1, 0.9, -1.0], [-0.1, 1.0, -1.0]])
    }

    #[test]
    fn exact_matches_brute_force_off_panel() {
        let q = quad();
        for p in [[0.5, 0.5, -0.7], [0.5, 0.5, -1.4], [2.0, -0.3, -1.1], [0.3, 0.2, -1.05], [-0.8, 1.4, -0.2]] {
            let (a, g) = rankine_exact(p, &q, false);
            let (b, h) = brute(p, &q);
            assert!((a - b).abs() < 1e-8 * b.abs(), "{p:?}: {a} vs {b}");
            for k in 0..3 {
                assert!((g[k] - h[k]).abs() < 1e-6 * norm(h).max(1e-3), "{p:?} grad {k}: {} vs {}", g[k], h[k]);
            }
        }
    }

    #[test]
    fn self_integral_matches_limit() {
        let q = quad();
        let p = q.centroid;
        let (a, g) = rankine_exact(p, &q, true);
        let above = rankine_exact([p[0], p[1], p[2] + 1e-7], &q, false);
        assert!((a - above.0).abs() < 1e-5);
        // In-plane gradient is continuous; normal part is the principal value.
        assert!(g[2].abs() < 1e-12);
        assert!((g[0] - above.1[0]).abs() < 1e-5 && (g[1] - above.1[1]).abs() < 1e-5);
        assert!((above.1[2] + 2.0 * PI).abs() < 1e-5);
    }

    #[test]
    fn collapsed_edge_is_handled() {
        let t = Quad::new([[0.0, 0.0, -1.0], [0.0, 0.0, -1.0], [1.0, 0.2, -1.0], [0.8, 1.0, -1.0]]);
        let p = [0.9, 0.5, -0.6];
        let (a, _) = rankine_exact(p, &t, false);
        let (b, _) = brute(p, &t);
        assert!((a - b).abs() < 1e-8 * b);
    }

    #[test]
    fn vertical_panel_and_reflection() {
        let q = Quad::new([[1.0, 0.0, -1.0], [1.0, 1.0, -1.0], [1.0, 1.0, 0.0], [1.0, 0.0, 0.0]]);
        let img = q.reflected();
        for p in [[0.2, 0.4, -0.5], [1.5, 0.5, -0.2]] {
            let (a, g) = rankine_exact(p, &img, false);
            let (b, h) = brute(p, &img);
            assert!((a - b).abs() < 1e-8 * b);
            for k in 0..3 {
                assert!((g[k] - h[k]).abs() < 1e-6 * norm(h));
            }
        }
    }

    #[test]
    fn far_rules_are_consistent() {
        let q = quad();
        let p = [6.0, 3.0, -2.0];
        let e = rankine_exact(p, &q, false);
        let g = rankine_gauss(p, &q, 2);
        let c = rankine_point(p, &q);
        assert!((e.0 - g.0).abs() < 1e-4 * e.0);
        assert!((e.0 - c.0).abs() < 3e-3 * e.0);
    }
}
