//! Bessel and Struve functions of integer order 0 and 1, plus Gauss–Legendre
//! nodes. Accuracy is about 1e-11 absolute over the whole positive axis, which
//! is well below what the panel method needs.

use std::f64::consts::{FRAC_2_PI, PI};
use std::sync::OnceLock;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Switch-over between power series and Hankel asymptotics.
const SERIES_LIMIT: f64 = 12.0;

fn series_j0_j1(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let (mut t0, mut t1) = (1.0, 0.5 * x);
    let (mut j0, mut j1) = (t0, t1);
    for k in 1..80 {
        let kf = k as f64;
        t0 *= -q / (kf * kf);
        t1 *= -q / (kf * (kf + 1.0));
        j0 += t0;
        j1 += t1;
        if t0.abs() < 1e-17 * j0.abs().max(1e-300) && t1.abs() < 1e-17 * j1.abs().max(1e-300) {
            break;
        }
    }
    (j0, j1)
}

/// Regular parts of Y0 and Y1 that remain after removing the logarithmic and
/// pole terms, `(Σ₀, Σ₁)` with
/// `Y0 = (2/π)[(ln(x/2)+γ)J0 + Σ₀]` and `Y1 = (2/π)(ln(x/2)+γ)J1 − 2/(πx) − Σ₁/π`.
fn series_y_regular(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let half = 0.5 * x;
    // Σ₀ = Σ_{k≥1} (−1)^{k+1} H_k q^k/(k!)²
    // Σ₁ = Σ_{k≥0} (−1)^k (H_k + H_{k+1}) (x/2)^{2k+1}/(k!(k+1)!)
    let mut s0 = 0.0;
    let mut s1 = half; // k = 0 term: (0 + 1) * x/2
    let mut t0 = 1.0; // q^k/(k!)^2
    let mut t1 = half; // (x/2)^{2k+1}/(k!(k+1)!)
    let mut h = 0.0;
    for k in 1..80 {
        let kf = k as f64;
        t0 *= q / (kf * kf);
        t1 *= q / (kf * (kf + 1.0));
        let h_prev = h + 1.0 / kf; // H_k
        let h_next = h_prev + 1.0 / (kf + 1.0);
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let a0 = sign * h_prev * t0;
        let a1 = -sign * (h_prev + h_next) * t1;
        s0 += a0;
        s1 += a1;
        h = h_prev;
        if a0.abs() < 1e-17 * s0.abs().max(1e-300) && a1.abs() < 1e-17 * s1.abs().max(1e-300) {
            break;
        }
    }
    (s0, s1)
}

/// Hankel asymptotic amplitudes `(P, Q)` for order `nu`.
fn hankel_pq(nu: f64, x: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let inv8x = 1.0 / (8.0 * x);
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) * inv8x / k as f64;
        if term.abs() > last {
            break;
        }
        last = term.abs();
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    (p, q)
}

fn asymptotic(nu: f64, x: f64) -> (f64, f64) {
    let (p, q) = hankel_pq(nu, x);
    let chi = x - (0.5 * nu + 0.25) * PI;
    let amp = (FRAC_2_PI / x).sqrt();
    let (s, c) = chi.sin_cos();
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

/// Bessel function of the first kind, order 0.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        series_j0_j1(x).0
    } else {
        asymptotic(0.0, x).0
    }
}

/// Bessel function of the first kind, order 1.
pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= SERIES_LIMIT {
        series_j0_j1(ax).1
    } else {
        asymptotic(1.0, ax).0
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// Bessel function of the second kind, order 0 (`x > 0`).
pub fn bessel_y0(x: f64) -> f64 {
    if x <= SERIES_LIMIT {
        let (j0, _) = series_j0_j1(x);
        let (s0, _) = series_y_regular(x);
        FRAC_2_PI * (((0.5 * x).ln() + EULER_GAMMA) * j0 + s0)
    } else {
        asymptotic(0.0, x).1
    }
}

/// Bessel function of the second kind, order 1 (`x > 0`).
pub fn bessel_y1(x: f64) -> f64 {
    if x <= SERIES_LIMIT {
        let (_, j1) = series_j0_j1(x);
        let (_, s1) = series_y_regular(x);
        FRAC_2_PI * ((0.5 * x).ln() + EULER_GAMMA) * j1 - FRAC_2_PI / x - s1 / PI
    } else {
        asymptotic(1.0, x).1
    }
}

/// `(J0, J1)` together; cheaper than two calls.
pub fn bessel_j01(x: f64) -> (f64, f64) {
    if x <= SERIES_LIMIT {
        series_j0_j1(x)
    } else {
        (asymptotic(0.0, x).0, asymptotic(1.0, x).0)
    }
}

/// The regular part of `(π/2)·Y0(x)` once `J0(x)(ln(x/2) + γ)` is removed.
/// Finite and smooth at the origin.
pub(crate) fn y0_regular_part(x: f64) -> f64 {
    if x <= SERIES_LIMIT {
        series_y_regular(x).0
    } else {
        0.5 * PI * bessel_y0(x) - bessel_j0(x) * ((0.5 * x).ln() + EULER_GAMMA)
    }
}

/// Derivative of [`y0_regular_part`].
pub(crate) fn y0_regular_part_derivative(x: f64) -> f64 {
    if x <= SERIES_LIMIT {
        // Σ (−1)^{k+1} H_k k (x/2)^{2k−1}/(k!)²
        let q = 0.25 * x * x;
        let half = 0.5 * x;
        let mut t = 1.0; // q^{k-1}/((k-1)!)^2 for k = 1 → 1
        let mut h = 0.0;
        let mut s = 0.0;
        for k in 1..80 {
            let kf = k as f64;
            if k > 1 {
                t *= q / ((kf - 1.0) * (kf - 1.0));
            }
            h += 1.0 / kf;
            // (x/2)^{2k-1} / (k!)^2 · k = half · q^{k-1}/((k-1)!)^2 / k
            let term = half * t / kf * h;
            let a = if k % 2 == 1 { term } else { -term };
            s += a;
            if a.abs() < 1e-17 * s.abs().max(1e-300) {
                break;
            }
        }
        s
    } else {
        let (j0, j1) = bessel_j01(x);
        -0.5 * PI * bessel_y1(x) + j1 * ((0.5 * x).ln() + EULER_GAMMA) - j0 / x
    }
}

/// `∫₀^∞ e^{−x t} (1+t²)^p dt` for `x ≥ SERIES_LIMIT`.
fn laplace_sqrt(x: f64, p: f64) -> f64 {
    let upper = 45.0 / x;
    let gl = gauss_legendre(24);
    let panels = 6;
    let h = upper / panels as f64;
    let mut sum = 0.0;
    for m in 0..panels {
        let a = m as f64 * h;
        for (&node, &w) in gl.nodes.iter().zip(&gl.weights) {
            let t = a + 0.5 * h * (node + 1.0);
            sum += 0.5 * h * w * (-x * t).exp() * (1.0 + t * t).powf(p);
        }
    }
    sum
}

/// Struve function H0.
pub fn struve_h0(x: f64) -> f64 {
    if x <= SERIES_LIMIT {
        let q = 0.25 * x * x;
        let mut term = 2.0 * x / PI;
        let mut sum = term;
        for k in 0..100 {
            let a = k as f64 + 1.5;
            term *= -q / (a * a);
            sum += term;
            if term.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        sum
    } else {
        bessel_y0(x) + FRAC_2_PI * laplace_sqrt(x, -0.5)
    }
}

/// Struve function H1.
pub fn struve_h1(x: f64) -> f64 {
    if x <= SERIES_LIMIT {
        let q = 0.25 * x * x;
        let mut term = 2.0 * x * x / (3.0 * PI);
        let mut sum = term;
        for k in 0..100 {
            let kf = k as f64;
            term *= -q / ((kf + 1.5) * (kf + 2.5));
            sum += term;
            if term.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        sum
    } else {
        bessel_y1(x) + FRAC_2_PI * x * laplace_sqrt(x, 0.5)
    }
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, 0.0);
                for j in 0..n {
                    let p2 = p1;
                    p1 = p0;
                    p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
                }
                dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
                let dz = p0 / dp;
                z -= dz;
                if dz.abs() < 1e-15 {
                    break;
                }
            }
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

/// Shared rule of the given order. Orders used by the crate are cached.
pub fn gauss_legendre(n: usize) -> &'static GaussLegendre {
    static RULES: OnceLock<Vec<GaussLegendre>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (1..=64).map(GaussLegendre::new).collect());
    assert!((1..=64).contains(&n), "cached Gauss-Legendre orders are 1..=64");
    &rules[n - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values computed with an independent library at double precision.
    #[test]
    fn bessel_reference_values() {
        let cases = [
            (1.0, 0.765_197_686_557_966_5, 0.440_050_585_744_933_55, 0.088_256_964_215_676_97, -0.781_212_821_300_288_8),
            (5.0, -0.177_596_771_314_338_3, -0.327_579_137_591_465_3, -0.308_517_625_249_033, 0.147_863_143_391_226_9),
            (10.0, -0.245_935_764_451_348_32, 0.043_472_746_168_861_41, 0.055_671_167_283_599_61, 0.249_015_424_206_953_88),
            (15.0, -0.014_224_472_826_780_597, 0.205_104_038_613_522_78, 0.205_464_296_038_918_25, 0.021_073_628_036_873_716),
            (30.0, -0.086_367_983_581_040_31, -0.118_751_062_616_623_05, -0.117_295_731_686_663_98, 0.084_425_570_661_747_13),
        ];
        for (x, j0, j1, y0, y1) in cases {
            assert!((bessel_j0(x) - j0).abs() < 1e-11, "J0({x})");
            assert!((bessel_j1(x) - j1).abs() < 1e-11, "J1({x})");
            assert!((bessel_y0(x) - y0).abs() < 1e-11, "Y0({x})");
            assert!((bessel_y1(x) - y1).abs() < 1e-11, "Y1({x})");
        }
    }

    #[test]
    fn struve_reference_values() {
        assert!((struve_h0(1.0) - 0.568_656_627_048_288_1).abs() < 1e-11);
        assert!((struve_h1(1.0) - 0.198_457_336_201_944_42).abs() < 1e-11);
        assert!((struve_h0(10.0) - 0.118_743_683_687_461_26).abs() < 1e-10);
        assert!((struve_h1(10.0) - 0.891_832_492_094_537_9).abs() < 1e-10);
        assert!((struve_h0(20.0) - 0.094_393_698_081_323_49).abs() < 1e-10);
        assert!((struve_h1(20.0) - 0.472_688_184_291_043_3).abs() < 1e-10);
    }

    #[test]
    fn struve_is_continuous_across_switch() {
        for f in [struve_h0 as fn(f64) -> f64, struve_h1] {
            let below = f(SERIES_LIMIT - 1e-9);
            let above = f(SERIES_LIMIT + 1e-9);
            assert!((below - above).abs() < 1e-9);
        }
    }

    #[test]
    fn wronskian_holds() {
        // J1 Y0 − J0 Y1 = 2/(πx)
        for &x in &[0.3, 2.0, 7.5, 11.9, 12.1, 40.0, 200.0] {
            let w = bessel_j1(x) * bessel_y0(x) - bessel_j0(x) * bessel_y1(x);
            assert!((w - FRAC_2_PI / x).abs() < 1e-11 * (1.0 + 1.0 / x), "x = {x}");
        }
    }

    #[test]
    fn regular_y0_part_derivative_matches_finite_difference() {
        for &x in &[0.1, 1.0, 5.0, 11.0, 13.0, 18.0] {
            let h = 1e-5;
            let fd = (y0_regular_part(x + h) - y0_regular_part(x - h)) / (2.0 * h);
            assert!((fd - y0_regular_part_derivative(x)).abs() < 1e-7, "x = {x}");
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(8);
        let v = rule.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
        assert!((rule.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }
}
