//! Mass-scaled capital and operating cost, annualisation, annual energy and LCOE.

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EconError {
    #[error("invalid economic parameter {name} = {value}")]
    BadParameter { name: &'static str, value: f64 },
}

/// What the per-kW cost medians are multiplied by.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RatedPower {
    /// Fixed nameplate rating per WEC [kW].
    Reference { kw: f64 },
    /// The WEC's own mean saturated power at the design wave. Power then
    /// cancels out of the LCOE ratio.
    Design,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EconParams {
    pub interest_rate: f64,
    pub lifetime_yr: f64,
    pub capex_med_per_kw: f64,
    /// Fraction of the CAPEX median charged yearly as OPEX.
    pub opex_fraction: f64,
    pub m_max_kg: f64,
    pub eta_trans: f64,
    pub eta_avail: f64,
    /// Economy-of-scale exponent on farm capital cost.
    pub array_scaling: f64,
    pub hours_per_year: f64,
    pub rated_power: RatedPower,
}

/// Economic inputs that are not part of the swept parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconConfig {
    pub m_max_kg: f64,
    pub rated_power: RatedPower,
    pub opex_fraction: f64,
    pub hours_per_year: f64,
}

impl EconConfig {
    /// Per-WEC reference rating that puts the cheapest four-body design at
    /// 70 m spacing near 0.21 $/kWh.
    pub const REFERENCE_KW: f64 = 172.0;

    /// Reference rating, OPEX at 5% of CAPEX and a Julian year.
    pub fn new(m_max_kg: f64) -> Self {
        Self { m_max_kg, rated_power: RatedPower::Reference { kw: Self::REFERENCE_KW }, opex_fraction: 0.05, hours_per_year: 8766.0 }
    }
}

impl EconParams {
    pub fn from_parameters(p: &crate::geometry::ParameterSet, cfg: &EconConfig) -> Self {
        Self {
            interest_rate: p.interest_rate,
            lifetime_yr: p.lifetime_yr,
            capex_med_per_kw: p.capex_median,
            opex_fraction: cfg.opex_fraction,
            m_max_kg: cfg.m_max_kg,
            eta_trans: p.transmission_efficiency,
            eta_avail: p.availability,
            array_scaling: p.array_scaling,
            hours_per_year: cfg.hours_per_year,
            rated_power: cfg.rated_power,
        }
    }

    pub fn validate(&self) -> Result<(), EconError> {
        let checks: [(&'static str, f64, bool); 8] = [
            ("interest_rate", self.interest_rate, self.interest_rate >= 0.0 && self.interest_rate < 1.0),
            ("lifetime_yr", self.lifetime_yr, self.lifetime_yr >= 1.0),
            ("capex_med_per_kw", self.capex_med_per_kw, self.capex_med_per_kw >= 0.0),
            ("opex_fraction", self.opex_fraction, self.opex_fraction >= 0.0),
            ("m_max_kg", self.m_max_kg, self.m_max_kg > 0.0),
            ("eta_trans", self.eta_trans, self.eta_trans > 0.0 && self.eta_trans <= 1.0),
            ("eta_avail", self.eta_avail, self.eta_avail > 0.0 && self.eta_avail <= 1.0),
            ("hours_per_year", self.hours_per_year, self.hours_per_year > 0.0),
        ];
        for (name, value, ok) in checks {
            if !ok || !value.is_finite() {
                return Err(EconError::BadParameter { name, value });
            }
        }
        if let RatedPower::Reference { kw } = self.rated_power {
            if !(kw > 0.0 && kw.is_finite()) {
                return Err(EconError::BadParameter { name: "rated_power.kw", value: kw });
            }
        }
        if !(self.array_scaling > 0.0 && self.array_scaling.is_finite()) {
            return Err(EconError::BadParameter { name: "array_scaling", value: self.array_scaling });
        }
        Ok(())
    }
}

/// `xpex_med (1 + m/m_max) · rated_power`
pub fn mass_scaled_xpex(xpex_med: f64, m: f64, m_max: f64, rated_kw: f64) -> f64 {
    if m > m_max {
        log::debug!("mass {m:.0} kg exceeds m_max {m_max:.0} kg; cost scaling extrapolates");
    }
    xpex_med * (1.0 + m / m_max) * rated_kw
}

/// Capital recovery factor `i(1+i)^L/((1+i)^L − 1)`, `1/L` at zero interest.
pub fn crf(i: f64, lifetime: f64) -> f64 {
    if i.abs() < 1e-12 {
        return 1.0 / lifetime;
    }
    let g = (1.0 + i).powf(lifetime);
    i * g / (g - 1.0)
}

pub fn annualize(capex: f64, i: f64, lifetime: f64) -> f64 {
    capex * crf(i, lifetime)
}

/// Annual energy [kWh/yr] from mean power [W].
pub fn annual_energy(p_total_w: f64, eta_trans: f64, eta_avail: f64, hours_per_year: f64) -> f64 {
    p_total_w / 1000.0 * eta_trans * eta_avail * hours_per_year
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LcoeResult {
    pub capex: f64,
    pub capex_ann: f64,
    pub opex: f64,
    pub aep_kwh: f64,
    pub lcoe: f64,
    /// Rated power used per WEC [kW].
    pub rated_kw: Vec<f64>,
}

impl LcoeResult {
    /// The defining identity, recomputed from the stored fields.
    pub fn identity_holds(&self) -> bool {
        let expect = (self.capex_ann + self.opex) / self.aep_kwh;
        expect.to_bits() == self.lcoe.to_bits() || (self.aep_kwh == 0.0 && self.lcoe.is_infinite())
    }

    pub fn csv_header() -> &'static str {
        "capex_usd,capex_ann_usd_per_yr,opex_usd_per_yr,aep_kwh_per_yr,lcoe_usd_per_kwh"
    }

    pub fn to_csv_row(&self) -> String {
        format!("{:?},{:?},{:?},{:?},{:?}", self.capex, self.capex_ann, self.opex, self.aep_kwh, self.lcoe)
    }
}

/// Farm LCOE. `masses` and `powers_w` are per WEC. Farm capital cost is the
/// single-WEC average times `n^S`; OPEX is summed over WECs.
pub fn lcoe(masses: &[f64], powers_w: &[f64], params: &EconParams) -> LcoeResult {
    let n = masses.len();
    let rated_kw: Vec<f64> = match params.rated_power {
        RatedPower::Reference { kw } => vec![kw; n],
        RatedPower::Design => powers_w.iter().map(|p| p / 1000.0).collect(),
    };
    let per_wec_capex: Vec<f64> =
        masses.iter().zip(&rated_kw).map(|(&m, &kw)| mass_scaled_xpex(params.capex_med_per_kw, m, params.m_max_kg, kw)).collect();
    let opex_med = params.opex_fraction * params.capex_med_per_kw;
    let opex: f64 = masses.iter().zip(&rated_kw).map(|(&m, &kw)| mass_scaled_xpex(opex_med, m, params.m_max_kg, kw)).sum();
    let mean_capex = if n == 0 { 0.0 } else { per_wec_capex.iter().sum::<f64>() / n as f64 };
    let capex = mean_capex * (n as f64).powf(params.array_scaling);
    let capex_ann = annualize(capex, params.interest_rate, params.lifetime_yr);
    let p_total: f64 = powers_w.iter().sum();
    let aep_kwh = annual_energy(p_total, params.eta_trans, params.eta_avail, params.hours_per_year);
    let lcoe = if aep_kwh > 0.0 { (capex_ann + opex) / aep_kwh } else { f64::INFINITY };
    LcoeResult { capex, capex_ann, opex, aep_kwh, lcoe, rated_kw }
}
