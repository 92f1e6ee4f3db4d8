//! Coupled heave response under reactive control, PTO force saturation and
//! absorbed power.
//!
//! Equation of motion per unit wave amplitude, `e^{−iωt}` convention:
//! `[C + diag(k) − ω²(M + A) − iω(B + diag(d))] E = F`.

use crate::hydro::HydroCoefficients;
use crate::linalg::{self, CMatrix, LinalgError, C64};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum DynamicsError {
    #[error("impedance matrix is singular")]
    Singular,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("isolated-body power is zero; q-factor undefined")]
    ZeroIsolatedPower,
    #[error(transparent)]
    Linalg(LinalgError),
}

impl From<LinalgError> for DynamicsError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::Singular(_) => DynamicsError::Singular,
            other => DynamicsError::Linalg(other),
        }
    }
}

/// PTO damping `d` [Ns/m] and stiffness `k` [N/m] per body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlGains {
    pub damping: Vec<f64>,
    pub stiffness: Vec<f64>,
}

impl ControlGains {
    pub fn new(damping: Vec<f64>, stiffness: Vec<f64>) -> Result<Self, DynamicsError> {
        if damping.len() != stiffness.len() {
            return Err(DynamicsError::Dimension(format!("{} dampings, {} stiffnesses", damping.len(), stiffness.len())));
        }
        Ok(Self { damping, stiffness })
    }

    /// Damping as given, stiffness tuned to the decoupled resonance.
    pub fn tuned(hydro: &HydroCoefficients, damping: Vec<f64>) -> Result<Self, DynamicsError> {
        Self::new(damping, tune_stiffness(hydro))
    }

    /// Purely resistive control (`k = 0`).
    pub fn resistive(damping: Vec<f64>) -> Self {
        let n = damping.len();
        Self { damping, stiffness: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.damping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.damping.is_empty()
    }

    fn scaled(&self, mu: &[f64]) -> Self {
        Self {
            damping: self.damping.iter().zip(mu).map(|(d, m)| d * m).collect(),
            stiffness: self.stiffness.iter().zip(mu).map(|(k, m)| k * m).collect(),
        }
    }
}

/// `k_i = ω²(M_ii + A_ii) − C_ii`, which puts each body at resonance when
/// interactions are ignored.
pub fn tune_stiffness(hydro: &HydroCoefficients) -> Vec<f64> {
    let w2 = hydro.omega * hydro.omega;
    (0..hydro.len()).map(|i| w2 * (hydro.mass[i] + hydro.added_mass[i][i]) - hydro.stiffness[i]).collect()
}

fn impedance(hydro: &HydroCoefficients, gains: &ControlGains) -> CMatrix {
    let w = hydro.omega;
    CMatrix::from_fn(hydro.len(), hydro.len(), |i, j| {
        let mut z = C64::new(-w * w * hydro.added_mass[i][j], -w * hydro.damping[i][j]);
        if i == j {
            z += C64::new(hydro.stiffness[i] + gains.stiffness[i] - w * w * hydro.mass[i], -w * gains.damping[i]);
        }
        z
    })
}

fn check_dims(hydro: &HydroCoefficients, gains: &ControlGains) -> Result<(), DynamicsError> {
    let n = hydro.len();
    let ok = gains.len() == n
        && gains.stiffness.len() == n
        && hydro.excitation.len() == n
        && hydro.added_mass.len() == n
        && hydro.damping.iter().chain(&hydro.added_mass).all(|r| r.len() == n);
    if ok {
        Ok(())
    } else {
        Err(DynamicsError::Dimension(format!("{n} bodies, {} gains", gains.len())))
    }
}

/// Complex heave amplitudes for wave amplitude `amplitude`.
pub fn solve_response(hydro: &HydroCoefficients, gains: &ControlGains, amplitude: f64) -> Result<Vec<C64>, DynamicsError> {
    check_dims(hydro, gains)?;
    let f: Vec<C64> = hydro.excitation.iter().map(|z| z * amplitude).collect();
    let e = linalg::solve(&impedance(hydro, gains), &f)?;
    if e.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(DynamicsError::Singular);
    }
    Ok(e)
}

/// `|F_PTO,i| = |E_i| √(k_i² + ω² d_i²)`
pub fn pto_force(e: &[C64], gains: &ControlGains, omega: f64) -> Vec<f64> {
    e.iter()
        .zip(gains.damping.iter().zip(&gains.stiffness))
        .map(|(z, (d, k))| z.norm() * (k * k + omega * omega * d * d).sqrt())
        .collect()
}

/// `P_i = ½ d_i ω² |E_i|²`
pub fn compute_power(e: &[C64], damping: &[f64], omega: f64) -> Vec<f64> {
    e.iter().zip(damping).map(|(z, d)| 0.5 * d * omega * omega * z.norm_sqr()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SaturationMethod {
    /// Every violating PTO scaled at once, one re-solve.
    #[default]
    All,
    /// Worst violator first, re-solving after each.
    Sequential,
    /// No force limit.
    Off,
}

impl std::str::FromStr for SaturationMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "all" => Ok(Self::All),
            "sequential" => Ok(Self::Sequential),
            "off" => Ok(Self::Off),
            other => Err(format!("unknown saturation method '{other}' (all, sequential, off)")),
        }
    }
}

/// Saturated gains and the response they produce.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Saturated {
    pub gains: ControlGains,
    pub response: Vec<C64>,
    /// Cumulative multipliers applied to the nominal gains.
    pub mu: Vec<f64>,
    pub force: Vec<f64>,
    /// Multipliers that needed the coupled bisection instead of the closed form.
    pub fallbacks: usize,
}

/// Multiplier for body `i` with the other bodies' motion frozen at `e`.
/// Solves `μ |E_i(μ)| G = F_max` with `E_i(μ) = F_eff / (a + μk − iω(B + μd))`,
/// which is the quadratic `αμ² + βμ + γ = 0`.
fn frozen_coupling_mu(hydro: &HydroCoefficients, gains: &ControlGains, e: &[C64], amplitude: f64, i: usize, f_max: f64) -> Option<f64> {
    let w = hydro.omega;
    let mut f_eff = hydro.excitation[i] * amplitude;
    for (j, ej) in e.iter().enumerate() {
        if j != i {
            f_eff -= C64::new(-w * w * hydro.added_mass[i][j], -w * hydro.damping[i][j]) * ej;
        }
    }
    let (k, d) = (gains.stiffness[i], gains.damping[i]);
    let g2 = k * k + w * w * d * d;
    let a = hydro.stiffness[i] - w * w * (hydro.mass[i] + hydro.added_mass[i][i]);
    let b = w * hydro.damping[i][i];
    let fm2 = f_max * f_max;
    let alpha = g2 * (f_eff.norm_sqr() - fm2);
    let beta = -2.0 * fm2 * (a * k + b * w * d);
    let gamma = -fm2 * (a * a + b * b);
    if alpha <= 0.0 {
        return None;
    }
    let disc = beta * beta - 4.0 * alpha * gamma;
    let mu = (-beta + disc.max(0.0).sqrt()) / (2.0 * alpha);
    (mu > 0.0 && mu <= 1.0 + 1e-12 && mu.is_finite()).then(|| mu.min(1.0))
}

/// Bisection on the coupled system for the multiplier of body `i`.
fn coupled_mu(
    hydro: &HydroCoefficients,
    gains: &ControlGains,
    mu: &[f64],
    amplitude: f64,
    i: usize,
    f_max: f64,
) -> Result<f64, DynamicsError> {
    let force_at = |m: f64| -> Result<f64, DynamicsError> {
        let mut trial = mu.to_vec();
        trial[i] = m;
        let g = gains.scaled(&trial);
        let e = solve_response(hydro, &g, amplitude)?;
        Ok(pto_force(&e, &g, hydro.omega)[i])
    };
    let (mut lo, mut hi) = (0.0, mu[i]);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if force_at(mid)? > f_max {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo.max(f64::MIN_POSITIVE))
}

fn mu_for(
    hydro: &HydroCoefficients,
    nominal: &ControlGains,
    mu: &[f64],
    e: &[C64],
    amplitude: f64,
    i: usize,
    f_max: f64,
) -> Result<(f64, bool), DynamicsError> {
    let current = nominal.scaled(mu);
    match frozen_coupling_mu(hydro, &current, e, amplitude, i, f_max) {
        Some(m) => Ok((m * mu[i], false)),
        None => {
            log::debug!("closed-form saturation multiplier out of range for body {i}; bisecting");
            Ok((coupled_mu(hydro, nominal, mu, amplitude, i, f_max)?, true))
        }
    }
}

/// Scales PTO gains so that no PTO force exceeds `f_max`.
pub fn saturate(
    hydro: &HydroCoefficients,
    gains: &ControlGains,
    f_max: f64,
    amplitude: f64,
    method: SaturationMethod,
) -> Result<Saturated, DynamicsError> {
    let n = hydro.len();
    let mut mu = vec![1.0; n];
    let mut fallbacks = 0;
    let mut e = solve_response(hydro, gains, amplitude)?;
    let w = hydro.omega;
    match method {
        SaturationMethod::Off => {}
        SaturationMethod::All => {
            let force = pto_force(&e, gains, w);
            let violators: Vec<usize> = (0..n).filter(|&i| force[i] > f_max).collect();
            if !violators.is_empty() {
                let unsat = e.clone();
                for &i in &violators {
                    let (m, fell_back) = mu_for(hydro, gains, &vec![1.0; n], &unsat, amplitude, i, f_max)?;
                    mu[i] = m;
                    fallbacks += usize::from(fell_back);
                }
                e = solve_response(hydro, &gains.scaled(&mu), amplitude)?;
            }
        }
        SaturationMethod::Sequential => {
            for _ in 0..(50 * n.max(1)) {
                let g = gains.scaled(&mu);
                let force = pto_force(&e, &g, w);
                let worst = (0..n).max_by(|&a, &b| force[a].total_cmp(&force[b]));
                let Some(i) = worst.filter(|&i| force[i] > f_max * (1.0 + 1e-9)) else { break };
                let (m, fell_back) = mu_for(hydro, gains, &mu, &e, amplitude, i, f_max)?;
                mu[i] = m;
                fallbacks += usize::from(fell_back);
                e = solve_response(hydro, &gains.scaled(&mu), amplitude)?;
            }
        }
    }
    let sat = gains.scaled(&mu);
    let force = pto_force(&e, &sat, w);
    Ok(Saturated { gains: sat, response: e, mu, force, fallbacks })
}

/// Power of an array and its isolated-body baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerResult {
    pub per_wec: Vec<f64>,
    pub total: f64,
    /// Power of each body alone with the same gains and saturation.
    pub isolated: Vec<f64>,
    pub q: f64,
}

/// `q = P_array / Σ_i P_isolated,i`; with identical bodies and gains this
/// is `P_array / (n P_isolated)`.
pub fn q_factor(array_total: f64, isolated: &[f64]) -> Result<f64, DynamicsError> {
    let base: f64 = isolated.iter().sum();
    if base > 0.0 && base.is_finite() {
        Ok(array_total / base)
    } else {
        Err(DynamicsError::ZeroIsolatedPower)
    }
}

/// Full pipeline: saturate, power, and the isolated baseline using the
/// single-body coefficients `single` (excitation at the same heading).
pub fn array_power(
    hydro: &HydroCoefficients,
    single: &HydroCoefficients,
    gains: &ControlGains,
    f_max: f64,
    amplitude: f64,
    method: SaturationMethod,
) -> Result<(Saturated, PowerResult), DynamicsError> {
    let sat = saturate(hydro, gains, f_max, amplitude, method)?;
    let per_wec = compute_power(&sat.response, &sat.gains.damping, hydro.omega);
    let total = per_wec.iter().sum();
    let isolated = (0..gains.len())
        .map(|i| {
            let g = ControlGains::new(vec![gains.damping[i]], vec![gains.stiffness[i]])?;
            let s = saturate(single, &g, f_max, amplitude, method)?;
            Ok(compute_power(&s.response, &s.gains.damping, single.omega)[0])
        })
        .collect::<Result<Vec<f64>, DynamicsError>>()?;
    let q = q_factor(total, &isolated)?;
    Ok((sat, PowerResult { per_wec, total, isolated, q }))
}

/// Dynamics report CSV: one row per body.
pub fn report_csv(sat: &Saturated, power: &PowerResult) -> String {
    let mut out = String::from("body,abs_e_m,arg_e_rad,mu,abs_f_pto_n,power_w,q\n");
    for i in 0..sat.response.len() {
        out.push_str(&format!(
            "{i},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}\n",
            sat.response[i].norm(),
            sat.response[i].arg(),
            sat.mu[i],
            sat.force[i],
            power.per_wec[i],
            power.q
        ));
    }
    out
}
