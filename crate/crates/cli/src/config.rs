//! Run configuration. Every key carries its unit; unknown keys are rejected.

use serde::{Deserialize, Serialize};
use wecarray::dynamics::SaturationMethod;
use wecarray::economics::{EconConfig, RatedPower};
use wecarray::geometry::{DesignBounds, DesignVector, ParameterSet};
use wecarray::hydro::{AcaSettings, BemOptions, Formulation};
use wecarray::mesh::MeshResolution;
use wecarray::optimize::{EvalSettings, OptimizerConfig};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid value: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "one")]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub environment: Environment,
    pub economics: Economics,
    #[serde(default)]
    pub control: Control,
    #[serde(default)]
    pub bem: Bem,
    #[serde(default)]
    pub array: Array,
    #[serde(default)]
    pub optimizer: Optimizer,
    #[serde(default)]
    pub sensitivity: Sensitivity,
    #[serde(default)]
    pub mesh_study: MeshStudy,
    #[serde(default)]
    pub postprocess: Postprocess,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Environment {
    pub omega_rad_s: f64,
    pub amplitude_m: f64,
    pub heading_rad: f64,
    pub water_density_kg_m3: f64,
    pub gravity_m_s2: f64,
}

impl Default for Environment {
    fn default() -> Self {
        let p = ParameterSet::default();
        Self { omega_rad_s: p.omega, amplitude_m: p.amplitude, heading_rad: p.heading, water_density_kg_m3: p.rho, gravity_m_s2: p.g }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rating {
    /// Fixed nameplate `rated_power_kw` per WEC.
    #[default]
    Reference,
    /// Each WEC's own mean power.
    Design,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Economics {
    pub m_max_kg: f64,
    #[serde(default = "Economics::interest")]
    pub interest_rate: f64,
    #[serde(default = "Economics::lifetime")]
    pub lifetime_yr: f64,
    #[serde(default = "Economics::availability")]
    pub availability: f64,
    #[serde(default = "Economics::scaling")]
    pub array_scaling: f64,
    #[serde(default = "Economics::transmission")]
    pub transmission_efficiency: f64,
    #[serde(default = "Economics::capex")]
    pub capex_median_usd_per_kw: f64,
    #[serde(default = "Economics::opex")]
    pub opex_fraction: f64,
    #[serde(default = "Economics::hours")]
    pub hours_per_year: f64,
    #[serde(default)]
    pub rating: Rating,
    #[serde(default = "Economics::rated")]
    pub rated_power_kw: f64,
}

impl Economics {
    fn interest() -> f64 {
        ParameterSet::default().interest_rate
    }
    fn lifetime() -> f64 {
        ParameterSet::default().lifetime_yr
    }
    fn availability() -> f64 {
        ParameterSet::default().availability
    }
    fn scaling() -> f64 {
        ParameterSet::default().array_scaling
    }
    fn transmission() -> f64 {
        ParameterSet::default().transmission_efficiency
    }
    fn capex() -> f64 {
        ParameterSet::default().capex_median
    }
    fn opex() -> f64 {
        EconConfig::new(1.0).opex_fraction
    }
    fn hours() -> f64 {
        EconConfig::new(1.0).hours_per_year
    }
    fn rated() -> f64 {
        EconConfig::REFERENCE_KW
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Control {
    pub force_max_n: f64,
    pub saturation: SaturationMethod,
}

impl Default for Control {
    fn default() -> Self {
        Self { force_max_n: ParameterSet::default().force_max, saturation: SaturationMethod::All }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Bem {
    pub aca: bool,
    pub aca_tolerance: f64,
    /// Blocks are compressed beyond this many radii between centres.
    pub aca_distance_radii: f64,
    pub condition_threshold: f64,
    pub formulation: Formulation,
    /// Fixed panel counts for every body; radius-dependent when absent.
    pub mesh: Option<MeshResolution>,
}

impl Default for Bem {
    fn default() -> Self {
        let a = AcaSettings::default();
        Self {
            aca: true,
            aca_tolerance: a.tolerance,
            aca_distance_radii: a.distance_factor,
            condition_threshold: BemOptions::default().condition_threshold,
            formulation: Formulation::Potential,
            mesh: None,
        }
    }
}

impl Bem {
    pub fn options(&self) -> BemOptions {
        BemOptions {
            aca: self.aca.then_some(AcaSettings { tolerance: self.aca_tolerance, distance_factor: self.aca_distance_radii }),
            condition_threshold: self.condition_threshold,
            formulation: self.formulation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Array {
    pub wec_count: usize,
    pub diameter_m: (i64, i64),
    pub aspect: (f64, f64),
    pub log10_damping_ns_m: (f64, f64),
    pub coordinate_m: (f64, f64),
}

impl Default for Array {
    fn default() -> Self {
        let b = DesignBounds::default();
        Self {
            wec_count: 4,
            diameter_m: b.diameter_m,
            aspect: b.aspect,
            log10_damping_ns_m: b.log10_damping,
            coordinate_m: b.coordinate_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Optimizer {
    pub population: usize,
    pub max_generations: usize,
    pub tolerance: f64,
    pub window: usize,
    pub crossover_prob: f64,
    pub mutation_prob: Option<f64>,
    pub eta_crossover: f64,
    pub eta_mutation: f64,
    /// Front members with a larger q-factor are reported as nonphysical.
    pub q_ceiling: f64,
}

impl Default for Optimizer {
    fn default() -> Self {
        let o = OptimizerConfig::default();
        Self {
            population: o.population,
            max_generations: o.max_generations,
            tolerance: o.tolerance,
            window: o.window,
            crossover_prob: o.crossover_prob,
            mutation_prob: o.mutation_prob,
            eta_crossover: o.eta_crossover,
            eta_mutation: o.eta_mutation,
            q_ceiling: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sensitivity {
    /// Base sample size of the reported indices; a power of two.
    pub base_samples: usize,
    /// Ascending base sizes for the convergence scan; empty skips the scan.
    pub scan: Vec<usize>,
    pub bootstrap_resamples: usize,
    /// Design vector analysed; the reference design when absent.
    pub design: Option<Vec<f64>>,
}

impl Default for Sensitivity {
    fn default() -> Self {
        Self { base_samples: 512, scan: vec![64, 128, 256, 512], bootstrap_resamples: 1000, design: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshStudy {
    pub designs: usize,
    /// Ascending resolutions; the built-in ladder when absent.
    pub resolutions: Option<Vec<MeshResolution>>,
}

impl Default for MeshStudy {
    fn default() -> Self {
        Self { designs: 6, resolutions: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Postprocess {
    /// Side of the disturbance-field square in wavelengths.
    pub grid_wavelengths: f64,
    pub grid_points: usize,
}

impl Default for Postprocess {
    fn default() -> Self {
        Self { grid_wavelengths: 8.0, grid_points: 200 }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Smallest valid configuration.
    pub fn minimal(m_max_kg: f64) -> Self {
        Self::parse(&format!("[economics]\nm_max_kg = {m_max_kg:?}\n")).expect("minimal config is valid")
    }

    /// Canonical text: the same configuration always serialises identically.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn parameters(&self) -> ParameterSet {
        let (e, c) = (&self.environment, &self.economics);
        ParameterSet {
            omega: e.omega_rad_s,
            amplitude: e.amplitude_m,
            heading: e.heading_rad,
            interest_rate: c.interest_rate,
            availability: c.availability,
            lifetime_yr: c.lifetime_yr,
            array_scaling: c.array_scaling,
            force_max: self.control.force_max_n,
            capex_median: c.capex_median_usd_per_kw,
            rho: e.water_density_kg_m3,
            g: e.gravity_m_s2,
            transmission_efficiency: c.transmission_efficiency,
            wec_count: self.array.wec_count,
        }
    }

    pub fn econ(&self) -> EconConfig {
        let c = &self.economics;
        EconConfig {
            m_max_kg: c.m_max_kg,
            rated_power: match c.rating {
                Rating::Reference => RatedPower::Reference { kw: c.rated_power_kw },
                Rating::Design => RatedPower::Design,
            },
            opex_fraction: c.opex_fraction,
            hours_per_year: c.hours_per_year,
        }
    }

    pub fn bounds(&self) -> DesignBounds {
        let a = &self.array;
        DesignBounds { diameter_m: a.diameter_m, aspect: a.aspect, log10_damping: a.log10_damping_ns_m, coordinate_m: a.coordinate_m }
    }

    pub fn eval_settings(&self) -> EvalSettings {
        let mut s = EvalSettings::new(self.parameters(), self.econ());
        s.bounds = self.bounds();
        s.bem = self.bem.options();
        s.saturation = self.control.saturation;
        s.resolution = self.bem.mesh;
        s.q_ceiling = self.optimizer.q_ceiling;
        s
    }

    pub fn optimizer_config(&self) -> OptimizerConfig {
        let o = &self.optimizer;
        OptimizerConfig {
            population: o.population,
            max_generations: o.max_generations,
            tolerance: o.tolerance,
            window: o.window,
            seed: self.seed,
            wec_count: self.array.wec_count,
            crossover_prob: o.crossover_prob,
            mutation_prob: o.mutation_prob,
            eta_crossover: o.eta_crossover,
            eta_mutation: o.eta_mutation,
        }
    }

    pub fn sensitivity_design(&self) -> DesignVector {
        self.sensitivity.design.clone().map(DesignVector::new).unwrap_or_else(crate::fixtures::reference_design)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        self.parameters().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        wecarray::economics::EconParams::from_parameters(&self.parameters(), &self.econ())
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.optimizer_config().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let s = &self.sensitivity;
        if !s.base_samples.is_power_of_two() {
            return bad(format!("sensitivity.base_samples = {} is not a power of two", s.base_samples));
        }
        if s.scan.iter().any(|n| !n.is_power_of_two()) || s.scan.windows(2).any(|w| w[0] >= w[1]) {
            return bad("sensitivity.scan must be ascending powers of two".into());
        }
        if self.mesh_study.designs == 0 {
            return bad("mesh_study.designs must be positive".into());
        }
        if !(self.postprocess.grid_wavelengths > 0.0) || self.postprocess.grid_points < 2 {
            return bad("postprocess grid needs a positive size and at least 2 points".into());
        }
        if !(self.optimizer.q_ceiling > 0.0) {
            return bad("optimizer.q_ceiling must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_m_max_names_the_key() {
        let err = RunConfig::parse("[economics]\ninterest_rate = 0.07\n").unwrap_err().to_string();
        assert!(err.contains("m_max_kg"), "{err}");
        let err = RunConfig::parse("seed = 3\n").unwrap_err().to_string();
        assert!(err.contains("economics"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = RunConfig::parse("[economics]\nm_max_kg = 1e5\nomega = 1.0\n").unwrap_err().to_string();
        assert!(err.contains("omega") && err.contains("line 3"), "{err}");
    }

    #[test]
    fn defaults_round_trip_through_canonical_text() {
        let c = RunConfig::minimal(1e5);
        assert_eq!(RunConfig::parse(&c.canonical()).unwrap(), c);
        assert_eq!(c.parameters(), ParameterSet::default());
        assert_eq!(c.econ(), EconConfig::new(1e5));
        assert!(c.bem.options().aca.is_some());
    }

    #[test]
    fn bad_values_are_reported() {
        let err = RunConfig::parse("[economics]\nm_max_kg = 1e5\n[sensitivity]\nbase_samples = 500\n").unwrap_err();
        assert!(err.to_string().contains("power of two"));
        assert!(RunConfig::parse("[economics]\nm_max_kg = -1.0\n").is_err());
        assert!(RunConfig::parse("[economics]\nm_max_kg = 1e5\n[control]\nsaturation = \"some\"\n").is_err());
    }
}
