//! Matched-eigenfunction series for a truncated vertical cylinder heaving in
//! water of finite depth. Independent of the panel code: Bessel functions come
//! from their integral representations and the matching system is solved by
//! plain Gaussian elimination.

use num_complex::Complex64 as C;
use std::f64::consts::PI;

fn simpson(n: usize, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `I_n(x) e^{−x}`
fn bessel_i_scaled(n: i32, x: f64) -> f64 {
    simpson(2000, 0.0, PI, |t| (x * (t.cos() - 1.0)).exp() * (n as f64 * t).cos()) / PI
}

/// `K_n(x) e^{x}`
fn bessel_k_scaled(n: i32, x: f64) -> f64 {
    let top = (60.0 / x).ln().max(1.0) + 3.0;
    simpson(4000, 0.0, top, |t| (-x * (t.cosh() - 1.0)).exp() * (n as f64 * t).cosh())
}

fn bessel_j(n: i32, x: f64) -> f64 {
    simpson(4000, 0.0, PI, |t| (n as f64 * t - x * t.sin()).cos()) / PI
}

fn bessel_y(n: i32, x: f64) -> f64 {
    let first = simpson(4000, 0.0, PI, |t| (x * t.sin() - n as f64 * t).sin()) / PI;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let top = (60.0 / x).asinh() + 1.0;
    let second = simpson(8000, 0.0, top, |t| ((n as f64 * t).exp() + sign * (-n as f64 * t).exp()) * (-x * t.sinh()).exp()) / PI;
    first - second
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `∫_0^d cos(λu) cos(κu) du`
fn cos_cos(l: f64, k: f64, d: f64) -> f64 {
    let sinc = |w: f64| if w.abs() < 1e-12 { d } else { (w * d).sin() / w };
    0.5 * (sinc(l - k) + sinc(l + k))
}

fn gauss_solve(mut a: Vec<Vec<C>>, mut b: Vec<C>) -> Vec<C> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].norm().total_cmp(&a[j][c].norm())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                let v = a[c][k];
                a[r][k] -= f * v;
            }
            let v = b[c];
            b[r] -= f * v;
        }
    }
    let mut x = vec![C::new(0.0, 0.0); n];
    for r in (0..n).rev() {
        let s: C = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Heave added mass and damping of a truncated cylinder (radius `a`, draft `t`)
/// in depth `h`, with `modes` terms in each region.
pub fn heave_coefficients(a: f64, t: f64, h: f64, omega: f64, rho: f64, g: f64, modes: usize) -> (f64, f64) {
    let nu = omega * omega / g;
    let d = h - t;
    let k0 = bisect(1e-9, 10.0 * nu + 1.0, |k| k * (k * h).tanh() - nu);
    let km: Vec<f64> = (1..=modes)
        .map(|m| {
            let (lo, hi) = ((m as f64 - 0.5) * PI / h + 1e-12, m as f64 * PI / h - 1e-12);
            bisect(lo, hi, |k| nu + k * (k * h).tan())
        })
        .collect();
    let lam: Vec<f64> = (0..=modes).map(|n| n as f64 * PI / d).collect();

    // Exterior modes: m = 0 propagating (cosh), m ≥ 1 evanescent (cos).
    let norm_ext: Vec<f64> = std::iter::once(0.5 * h + (2.0 * k0 * h).sinh() / (4.0 * k0))
        .chain(km.iter().map(|&k| 0.5 * h + (2.0 * k * h).sin() / (4.0 * k)))
        .collect();
    let h0 = C::new(bessel_j(0, k0 * a), bessel_y(0, k0 * a));
    let h1 = C::new(bessel_j(1, k0 * a), bessel_y(1, k0 * a));
    let kappa: Vec<C> = std::iter::once(-k0 * h1 / h0)
        .chain(km.iter().map(|&k| C::new(-k * bessel_k_scaled(1, k * a) / bessel_k_scaled(0, k * a), 0.0)))
        .collect();
    // ∫_0^d ψ_n Z_m and ∫_0^d Z_m over the gap below the body.
    let proj = |n: usize, m: usize| -> f64 {
        let l = lam[n];
        if m == 0 {
            (k0 * (k0 * d).sinh() * (l * d).cos() + l * (k0 * d).cosh() * (l * d).sin()) / (k0 * k0 + l * l)
        } else {
            cos_cos(l, km[m - 1], d)
        }
    };
    let z_int = |m: usize| if m == 0 { (k0 * d).sinh() / k0 } else { (km[m - 1] * d).sin() / km[m - 1] };
    // Interior particular solution φ_p = ((z + h)² − r²/2) / (2d).
    let dphip = -a / (2.0 * d);
    let f: Vec<f64> = (0..=modes)
        .map(|n| {
            if n == 0 {
                (d * d * d / 3.0 - 0.5 * a * a * d) / (2.0 * d)
            } else {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                2.0 * d * sign / (lam[n] * lam[n]) / (2.0 * d)
            }
        })
        .collect();
    let ratio_i: Vec<f64> =
        (0..=modes).map(|n| if n == 0 { 0.0 } else { lam[n] * bessel_i_scaled(1, lam[n] * a) / bessel_i_scaled(0, lam[n] * a) }).collect();
    let norm_int = |n: usize| if n == 0 { d } else { 0.5 * d };
    let nm = modes + 1;
    let p: Vec<Vec<f64>> = (0..nm).map(|n| (0..nm).map(|m| proj(n, m)).collect()).collect();
    let dfac: Vec<C> = (0..nm).map(|m| 1.0 / (kappa[m] * norm_ext[m])).collect();
    let mut mat = vec![vec![C::new(0.0, 0.0); nm]; nm];
    let mut rhs = vec![C::new(0.0, 0.0); nm];
    for n in 0..nm {
        mat[n][n] += norm_int(n);
        for m in 0..nm {
            let w = p[n][m] * dfac[m];
            for q in 0..nm {
                mat[n][q] -= w * ratio_i[q] * p[q][m];
            }
            rhs[n] += w * dphip * z_int(m);
        }
        rhs[n] -= f[n];
    }
    let c = gauss_solve(mat, rhs);
    let mut integral = C::new((d * d * a * a / 2.0 - a.powi(4) / 8.0) / (2.0 * d), 0.0) + c[0] * (a * a / 2.0);
    for n in 1..nm {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        integral += c[n] * sign * a * bessel_i_scaled(1, lam[n] * a) / (lam[n] * bessel_i_scaled(0, lam[n] * a));
    }
    let z = rho * 2.0 * PI * integral;
    (z.re, omega * z.im)
}
