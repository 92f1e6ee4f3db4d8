//! Deep-water free-surface Green function for time dependence `e^{-iωt}`.
//!
//! `G(x, ξ) = -1/(4π) [1/r + 1/r₁ + W]` with the wave part
//! `W = 2k [F(X, Y) + iπ e^Y J0(X)]`, `X = kR`, `Y = k(z + ζ) ≤ 0` and
//! `F = PV ∫₀^∞ e^{tY} J0(Xt)/(t − 1) dt`.
//!
//! `F` is split into closed-form singular pieces and a smooth remainder. The
//! remainder is tabulated on a stretched grid and interpolated bicubically; far
//! from the origin an asymptotic series takes over.

use crate::linalg::C64;
use crate::special::{
    bessel_j01, bessel_y0, bessel_y1, gauss_legendre, struve_h0, struve_h1, y0_regular_part,
    y0_regular_part_derivative, EULER_GAMMA,
};
use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;

/// Tabulated domain `[0, X_MAX] × [0, A_MAX]` with `a = -Y`.
const X_MAX: f64 = 20.0;
const A_MAX: f64 = 20.0;
const NX: usize = 801;
const NA: usize = 401;
/// Beyond this `ρ = √(X² + Y²)` the asymptotic series is used.
const RHO_FAR: f64 = 20.0;
/// Below this `ρ` the remainder is integrated directly.
const RHO_DIRECT: f64 = 1e-3;

/// `e^v − 1 − v` without cancellation.
fn expm1_minus(v: f64) -> f64 {
    if v.abs() < 0.1 {
        let mut term = 0.5 * v * v;
        let mut sum = term;
        for n in 3..14 {
            term *= v / n as f64;
            sum += term;
        }
        sum
    } else {
        v.exp_m1() - v
    }
}

/// Remainder `R(X, a) = ∫₀^a (e^u − 1 − u)/√(X² + u²) du` and `∂R/∂X`.
fn remainder_direct(x: f64, a: f64) -> (f64, f64) {
    if a <= 0.0 {
        return (0.0, 0.0);
    }
    let gl = gauss_legendre(12);
    if x <= 0.0 {
        let panels = a.ceil().max(1.0) as usize;
        let h = a / panels as f64;
        let r = (0..panels)
            .map(|p| gl.integrate(p as f64 * h, (p + 1) as f64 * h, |u| expm1_minus(u) / u))
            .sum();
        return (r, 0.0);
    }
    // Geometric breakpoints in u, integrated in s with u = X sinh s.
    let mut breaks = vec![a];
    let mut u = a;
    while u > 1e-3 * x && breaks.len() < 80 {
        u *= 0.5;
        breaks.push(u);
    }
    breaks.push(0.0);
    let (mut r, mut rx) = (0.0, 0.0);
    for w in breaks.windows(2) {
        let (s1, s0) = ((w[0] / x).asinh(), (w[1] / x).asinh());
        let (pr, prx) = segment(x, s0, s1, gl);
        r += pr;
        rx += prx;
    }
    (r, rx)
}

fn segment(x: f64, s0: f64, s1: f64, gl: &crate::special::GaussLegendre) -> (f64, f64) {
    let half = 0.5 * (s1 - s0);
    let mid = 0.5 * (s1 + s0);
    let (mut r, mut rx) = (0.0, 0.0);
    for (&n, &w) in gl.nodes.iter().zip(&gl.weights) {
        let s = mid + half * n;
        let e = expm1_minus(x * s.sinh());
        let c = s.cosh();
        r += w * e;
        rx -= w * e / (c * c);
    }
    (r * half, rx * half / x)
}

/// X-only pieces of the tabulated parts.
struct Radial {
    t1: f64,
    t2: f64,
}

fn radial(x: f64) -> Radial {
    let (j0, j1) = bessel_j01(x);
    let c = EULER_GAMMA - LN_2;
    Radial {
        t1: 0.5 * PI * struve_h0(x) + j0 * c + y0_regular_part(x),
        t2: -0.5 * PI * struve_h1(x) - j1 * c + y0_regular_part_derivative(x),
    }
}

/// Smooth parts `T1 = −e^{−a}[(π/2)H0 + J0(γ − ln 2) + Ysum + R]` and
/// `T2 = −e^{−a}[−(π/2)H1 − J1(γ − ln 2) + Ysum' + R_X]`.
fn smooth_direct(x: f64, a: f64) -> (f64, f64) {
    let rad = radial(x);
    let (r, rx) = remainder_direct(x, a);
    let e = (-a).exp();
    (-e * (rad.t1 + r), -e * (rad.t2 + rx))
}

struct Table {
    t1: Vec<f64>,
    t2: Vec<f64>,
}

fn grid_x(i: usize) -> f64 {
    let s = i as f64 / (NX - 1) as f64;
    X_MAX * s * s
}

fn grid_a(m: usize) -> f64 {
    let t = m as f64 / (NA - 1) as f64;
    A_MAX * t * t
}

fn build_table() -> Table {
    use rayon::prelude::*;
    let gl = gauss_legendre(10);
    let columns: Vec<(Vec<f64>, Vec<f64>)> = (0..NX)
        .into_par_iter()
        .map(|i| {
            let x = grid_x(i);
            let rad = radial(x);
            let mut c1 = Vec::with_capacity(NA);
            let mut c2 = Vec::with_capacity(NA);
            let (mut r, mut rx) = (0.0, 0.0);
            let mut prev = 0.0;
            for m in 0..NA {
                let a = grid_a(m);
                if m > 0 {
                    if x > 0.0 {
                        let (s0, s1) = ((prev / x).asinh(), (a / x).asinh());
                        let (pr, prx) = segment(x, s0, s1, gl);
                        r += pr;
                        rx += prx;
                    } else {
                        r += gl.integrate(prev, a, |u| expm1_minus(u) / u);
                    }
                }
                prev = a;
                let e = (-a).exp();
                c1.push(-e * (rad.t1 + r));
                c2.push(-e * (rad.t2 + rx));
            }
            (c1, c2)
        })
        .collect();
    let mut t1 = Vec::with_capacity(NX * NA);
    let mut t2 = Vec::with_capacity(NX * NA);
    for (c1, c2) in columns {
        t1.extend(c1);
        t2.extend(c2);
    }
    Table { t1, t2 }
}

fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(build_table)
}

/// Four-point Lagrange stencil on a uniform grid of `n` nodes over `[0, 1]`.
fn stencil(u: f64, n: usize) -> (usize, [f64; 4]) {
    let pos = u * (n - 1) as f64;
    let base = (pos.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let t = pos - base as f64;
    let w = [
        -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0,
        t * (t - 2.0) * (t - 3.0) / 2.0,
        -t * (t - 1.0) * (t - 3.0) / 2.0,
        t * (t - 1.0) * (t - 2.0) / 6.0,
    ];
    (base, w)
}

fn smooth_interpolated(x: f64, a: f64) -> (f64, f64) {
    let tab = table();
    let (i0, wx) = stencil((x / X_MAX).sqrt(), NX);
    let (m0, wa) = stencil((a / A_MAX).sqrt(), NA);
    let (mut v1, mut v2) = (0.0, 0.0);
    for (di, &wi) in wx.iter().enumerate() {
        let col = (i0 + di) * NA + m0;
        for (dm, &wm) in wa.iter().enumerate() {
            let w = wi * wm;
            v1 += w * tab.t1[col + dm];
            v2 += w * tab.t2[col + dm];
        }
    }
    (v1, v2)
}

/// Adds the closed-form singular pieces to the smooth parts.
fn assemble_near(x: f64, a: f64, t1: f64, t2: f64, j0: f64, j1: f64) -> (f64, f64) {
    let rho = x.hypot(a);
    let e = (-a).exp();
    let (lnx_j, jm1_x, x_rho) = if x > 0.0 {
        let lx = x.ln();
        ((j0 - 1.0) * lx, (j0 - 1.0) / x, x / rho)
    } else {
        (0.0, 0.0, 0.0)
    };
    let j1_lnx = if x > 0.0 { j1 * x.ln() } else { 0.0 };
    let f = t1 - e * ((rho - x) + (a + rho).ln() + lnx_j);
    let fx = t2 - e * (x_rho + x_rho / (a + rho) - j1_lnx + jm1_x);
    (f, fx)
}

fn far_field(x: f64, a: f64) -> (f64, f64) {
    let rho = x.hypot(a);
    let c = a / rho;
    // Σ m! P_m(c)/ρ^{m+1} and its X-derivative, truncated at the smallest term.
    let (mut p_prev, mut p) = (0.0, 1.0); // P_{m-1}, P_m
    let (mut dp_prev, mut dp) = (0.0, 0.0); // P'_{m-1}, P'_m
    let mut fact_over = 1.0 / rho; // m!/ρ^{m+1}
    let (mut s, mut sx) = (0.0, 0.0);
    let mut last = f64::INFINITY;
    for m in 0..60 {
        let mf = m as f64;
        if m >= 1 {
            // Legendre recurrences for P_m and P'_m.
            let p_new = ((2.0 * mf - 1.0) * c * p - (mf - 1.0) * p_prev) / mf;
            p_prev = p;
            p = p_new;
            let dp_new = if m == 1 { 1.0 } else { dp_prev + (2.0 * mf - 1.0) * p_prev };
            dp_prev = dp;
            dp = dp_new;
            fact_over *= mf / rho;
        }
        if fact_over > last {
            break;
        }
        last = fact_over;
        let term = fact_over * p;
        s += term;
        // d/dX [P_m(c) ρ^{−m−1}] = −P'_m a X/ρ^{m+4} − (m+1) P_m X/ρ^{m+3}
        sx += fact_over * (-dp * a * x / (rho * rho * rho) - (mf + 1.0) * p * x / (rho * rho));
        if fact_over < 1e-17 {
            break;
        }
    }
    let mut f = -s;
    let mut fx = -sx;
    if x > 0.5 {
        let e = (-a).exp();
        f -= PI * e * bessel_y0(x);
        fx += PI * e * bessel_y1(x);
    }
    (f, fx)
}

/// `(F, ∂F/∂X)` at `X ≥ 0`, `a = −Y ≥ 0`.
pub fn pv_integral(x: f64, a: f64) -> (f64, f64) {
    let (j0, j1) = bessel_j01(x);
    pv_integral_with(x, a, j0, j1)
}

/// As [`pv_integral`] with `J0(X)` and `J1(X)` supplied by the caller.
#[inline]
fn pv_integral_with(x: f64, a: f64, j0: f64, j1: f64) -> (f64, f64) {
    let rho = x.hypot(a);
    if rho > RHO_FAR {
        return far_field(x, a);
    }
    let (t1, t2) = if rho < RHO_DIRECT { smooth_direct(x, a) } else { smooth_interpolated(x, a) };
    assemble_near(x, a, t1, t2, j0, j1)
}

/// Same quantity evaluated without the table or the asymptotic series.
pub fn pv_integral_direct(x: f64, a: f64) -> (f64, f64) {
    let (j0, j1) = bessel_j01(x);
    let (t1, t2) = smooth_direct(x, a);
    assemble_near(x, a, t1, t2, j0, j1)
}

/// Wave part `W` and its gradient with respect to the field point.
#[inline]
pub fn wave_term(k: f64, field: [f64; 3], source: [f64; 3]) -> (C64, [C64; 3]) {
    let dx = field[0] - source[0];
    let dy = field[1] - source[1];
    let r_h = dx.hypot(dy);
    let x = k * r_h;
    let a = -k * (field[2] + source[2]);
    let a = a.max(0.0);
    let (j0, j1) = bessel_j01(x);
    let (f, fx) = pv_integral_with(x, a, j0, j1);
    let e = (-a).exp();
    let rho = x.hypot(a);
    let w = C64::new(2.0 * k * f, 2.0 * k * PI * e * j0);
    let dwdx = C64::new(2.0 * k * k * fx, -2.0 * k * k * PI * e * j1);
    let fy = if rho > 0.0 { f + 1.0 / rho } else { f };
    let dwdz = C64::new(2.0 * k * k * fy, 2.0 * k * k * PI * e * j0);
    let (cx, cy) = if r_h > 0.0 { (dx / r_h, dy / r_h) } else { (0.0, 0.0) };
    (w, [dwdx * cx, dwdx * cy, dwdz])
}

/// Value and field-point gradient of the full Green function.
#[derive(Debug, Clone, Copy)]
pub struct GreenValue {
    pub value: C64,
    pub gradient: [C64; 3],
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GreenError {
    #[error("field and source points are {0:.3e} m apart; use the panel integration path")]
    NearSingular(f64),
    #[error("points must lie on or below the free surface (z = {0})")]
    AboveSurface(f64),
}

/// Point evaluation of `G` for well-separated points.
pub fn green_function(k: f64, field: [f64; 3], source: [f64; 3], min_separation: f64) -> Result<GreenValue, GreenError> {
    if field[2] > 1e-12 || source[2] > 1e-12 {
        return Err(GreenError::AboveSurface(field[2].max(source[2])));
    }
    let d = [field[0] - source[0], field[1] - source[1], field[2] - source[2]];
    let d1 = [d[0], d[1], field[2] + source[2]];
    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let r1 = (d1[0] * d1[0] + d1[1] * d1[1] + d1[2] * d1[2]).sqrt();
    if r < min_separation || r1 < min_separation {
        return Err(GreenError::NearSingular(r.min(r1)));
    }
    let (w, gw) = wave_term(k, field, source);
    let scale = -1.0 / (4.0 * PI);
    let value = (C64::new(1.0 / r + 1.0 / r1, 0.0) + w) * scale;
    let mut gradient = [C64::new(0.0, 0.0); 3];
    for i in 0..3 {
        let g = -d[i] / (r * r * r) - d1[i] / (r1 * r1 * r1);
        gradient[i] = (C64::new(g, 0.0) + gw[i]) * scale;
    }
    Ok(GreenValue { value, gradient })
}

/// Deep-water wavenumber `ω²/g`.
pub fn wavenumber(omega: f64, g: f64) -> f64 {
    omega * omega / g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_matches_direct_path() {
        let mut worst: f64 = 0.0;
        for i in 0..37 {
            for m in 0..29 {
                let x = 0.013 + 19.5 * (i as f64 / 36.0).powi(2);
                let a = 0.007 + 19.5 * (m as f64 / 28.0).powi(2);
                if x.hypot(a) > RHO_FAR {
                    continue;
                }
                let (f, fx) = pv_integral(x, a);
                let (g, gx) = pv_integral_direct(x, a);
                worst = worst.max((f - g).abs() / g.abs().max(0.1)).max((fx - gx).abs() / gx.abs().max(0.1));
            }
        }
        assert!(worst < 1e-6, "worst relative deviation {worst:e}");
    }

    #[test]
    fn far_field_joins_near_field() {
        for &(x, a) in &[(20.5, 0.3), (15.0, 14.0), (5.0, 19.8), (0.6, 20.1), (19.9, 3.0)] {
            let (f, fx) = far_field(x, a);
            let (g, gx) = pv_integral_direct(x, a);
            assert!((f - g).abs() < 1e-7, "F at ({x}, {a}): {f} vs {g}");
            assert!((fx - gx).abs() < 1e-7, "F_X at ({x}, {a}): {fx} vs {gx}");
        }
    }

    #[test]
    fn derivatives_are_consistent() {
        for &(x, a) in &[(0.3, 0.2), (2.0, 1.0), (8.0, 0.05), (25.0, 2.0)] {
            let h = 1e-5;
            let fd = (pv_integral(x + h, a).0 - pv_integral(x - h, a).0) / (2.0 * h);
            assert!((fd - pv_integral(x, a).1).abs() < 1e-6, "({x}, {a})");
        }
    }

    #[test]
    fn symmetric_in_field_and_source() {
        let k = 0.11;
        let p = [3.0, -1.0, -2.0];
        let q = [-4.0, 2.5, -0.7];
        let g1 = green_function(k, p, q, 1e-6).unwrap().value;
        let g2 = green_function(k, q, p, 1e-6).unwrap().value;
        assert!((g1 - g2).norm() < 1e-12);
    }

    #[test]
    fn deep_submergence_tends_to_rankine_minus_image() {
        // Deep down the wave part cancels the image term: G → −(1/4π)(1/r − 1/r₁).
        let k = 0.5;
        let p = [0.0, 0.0, -60.0];
        let q = [0.4, 0.3, -60.8];
        let g = green_function(k, p, q, 1e-6).unwrap().value;
        let r = (0.16f64 + 0.09 + 0.64).sqrt();
        let r1 = (0.16f64 + 0.09 + 120.8 * 120.8).sqrt();
        let expect = -(1.0 / r - 1.0 / r1) / (4.0 * PI);
        // Leading correction is O(1/(k r₁²)) relative to the image term.
        let slack = 3.0 / (k * r1 * r1) / (4.0 * PI);
        assert!((g.re - expect).abs() < slack, "{} vs {expect}", g.re);
        assert!(g.im.abs() < 1e-12);
    }

    #[test]
    fn near_singular_points_are_rejected() {
        let e = green_function(0.1, [0.0, 0.0, -1.0], [0.0, 0.0, -1.0 - 1e-9], 1e-6).unwrap_err();
        assert!(matches!(e, GreenError::NearSingular(_)));
    }

    #[test]
    fn free_surface_condition_holds() {
        // ∂G/∂z − k G = 0 at z = 0 away from the source.
        let k = 0.3;
        let q = [0.0, 0.0, -1.5];
        for &x in &[0.5, 2.0, 7.0, 40.0, 90.0] {
            let v = green_function(k, [x, 0.0, 0.0], q, 1e-6).unwrap();
            let res = v.gradient[2] - v.value * k;
            assert!(res.norm() < 1e-7 * v.value.norm().max(1e-3), "x = {x}: {res}");
        }
    }
}
