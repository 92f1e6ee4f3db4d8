//! WEC geometry, array layout, the flat design-vector encoding and the two
//! layout measures used by the optimizer (spacing margin and footprint).

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GeometryError {
    #[error("{component} = {value} is outside [{lower}, {upper}]")]
    OutOfBounds { component: String, value: f64, lower: f64, upper: f64 },
    #[error("diameter {0} m is not a whole number of metres")]
    OffGrid(f64),
    #[error("design vector length {0} is not a positive multiple of 3")]
    BadLength(usize),
    #[error("draft {draft} m must be positive and no deeper than the hull length {length} m")]
    BadDraft { draft: f64, length: f64 },
    #[error("malformed design CSV row: {0}")]
    Parse(String),
}

/// Vertical cylinder shared by every WEC in an array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WecGeometry {
    pub radius: f64,
    pub length: f64,
    /// Submerged depth; `None` means the hull floats at mid-height.
    pub draft_override: Option<f64>,
}

impl WecGeometry {
    /// Checked constructor on the optimizer's grid (`2r` integer, `2 ≤ r ≤ 10`, `0.1r ≤ ℓ ≤ 2r`).
    pub fn new(radius: f64, length: f64) -> Result<Self, GeometryError> {
        let diameter = 2.0 * radius;
        if (diameter - diameter.round()).abs() > 1e-9 {
            return Err(GeometryError::OffGrid(diameter));
        }
        check("radius", radius, 2.0, 10.0)?;
        check("length", length, 0.1 * radius - 1e-12, 2.0 * radius + 1e-12)?;
        Ok(Self { radius, length, draft_override: None })
    }

    /// Any positive cylinder, bypassing the optimizer grid. Used by fixtures and studies.
    pub fn cylinder(radius: f64, length: f64) -> Self {
        Self { radius, length, draft_override: None }
    }

    pub fn with_draft(mut self, draft: f64) -> Result<Self, GeometryError> {
        if !(draft > 0.0 && draft <= self.length + 1e-12) {
            return Err(GeometryError::BadDraft { draft, length: self.length });
        }
        self.draft_override = Some(draft);
        Ok(self)
    }

    pub fn draft(&self) -> f64 {
        self.draft_override.unwrap_or(0.5 * self.length)
    }

    pub fn displaced_volume(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius * self.draft()
    }
}

fn check(component: &str, value: f64, lower: f64, upper: f64) -> Result<(), GeometryError> {
    if value.is_finite() && value >= lower && value <= upper {
        Ok(())
    } else {
        Err(GeometryError::OutOfBounds { component: component.to_string(), value, lower, upper })
    }
}

/// Planar WEC positions in metres. The first entry is the reference body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayLayout {
    pub positions: Vec<[f64; 2]>,
}

impl ArrayLayout {
    pub fn new(positions: Vec<[f64; 2]>) -> Self {
        Self { positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn pair_distances(&self) -> impl Iterator<Item = f64> + '_ {
        let p = &self.positions;
        (0..p.len()).flat_map(move |i| (i + 1..p.len()).map(move |j| (p[i][0] - p[j][0]).hypot(p[i][1] - p[j][1])))
    }

    pub fn centroid(&self) -> [f64; 2] {
        let n = self.positions.len().max(1) as f64;
        let (sx, sy) = self.positions.iter().fold((0.0, 0.0), |(a, b), p| (a + p[0], b + p[1]));
        [sx / n, sy / n]
    }
}

/// Worst spacing margin `max_pairs(5r − distance)`; feasible when `≤ 0`.
/// A single body has no pairs and returns `−∞`.
pub fn min_spacing_constraint(layout: &ArrayLayout, radius: f64) -> f64 {
    layout.pair_distances().map(|d| 5.0 * radius - d).fold(f64::NEG_INFINITY, f64::max)
}

/// Largest pairwise distance (the footprint objective). Zero for one body.
pub fn max_spacing(layout: &ArrayLayout) -> f64 {
    layout.pair_distances().fold(0.0, f64::max)
}

/// Box bounds for the design vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignBounds {
    pub diameter_m: (i64, i64),
    pub aspect: (f64, f64),
    pub log10_damping: (f64, f64),
    pub coordinate_m: (f64, f64),
}

impl Default for DesignBounds {
    fn default() -> Self {
        Self { diameter_m: (4, 20), aspect: (0.1, 2.0), log10_damping: (0.0, 7.0), coordinate_m: (-500.0, 500.0) }
    }
}

/// Flat encoding `[2r, ℓ/r, log10 d1, x2, y2, log10 d2, …, xn, yn, log10 dn]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignVector {
    pub values: Vec<f64>,
}

/// Decoded design.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub geometry: WecGeometry,
    pub layout: ArrayLayout,
    pub damping: Vec<f64>,
}

impl DesignVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn wec_count(&self) -> usize {
        self.values.len() / 3
    }

    /// Lower and upper bound of gene `index` for a vector of this length.
    pub fn gene_bounds(index: usize, bounds: &DesignBounds) -> (f64, f64) {
        match index {
            0 => (bounds.diameter_m.0 as f64, bounds.diameter_m.1 as f64),
            1 => bounds.aspect,
            i if i % 3 == 2 => bounds.log10_damping,
            _ => bounds.coordinate_m,
        }
    }

    /// Name of gene `index`, used in error messages and CSV headers.
    pub fn gene_name(index: usize) -> String {
        match index {
            0 => "diameter".into(),
            1 => "aspect".into(),
            2 => "log10_d1".into(),
            i => {
                let wec = i / 3 + 1;
                match i % 3 {
                    0 => format!("x{wec}"),
                    1 => format!("y{wec}"),
                    _ => format!("log10_d{wec}"),
                }
            }
        }
    }

    pub fn decode(&self, bounds: &DesignBounds) -> Result<Design, GeometryError> {
        let v = &self.values;
        if v.is_empty() || v.len() % 3 != 0 {
            return Err(GeometryError::BadLength(v.len()));
        }
        for (i, &x) in v.iter().enumerate() {
            let (lo, hi) = Self::gene_bounds(i, bounds);
            check(&Self::gene_name(i), x, lo, hi)?;
        }
        if (v[0] - v[0].round()).abs() > 1e-9 {
            return Err(GeometryError::OffGrid(v[0]));
        }
        let radius = 0.5 * v[0].round();
        let geometry = WecGeometry::cylinder(radius, v[1] * radius);
        let n = v.len() / 3;
        let mut positions = vec![[0.0, 0.0]];
        let mut damping = vec![10f64.powf(v[2])];
        for i in 1..n {
            positions.push([v[3 * i], v[3 * i + 1]]);
            damping.push(10f64.powf(v[3 * i + 2]));
        }
        Ok(Design { geometry, layout: ArrayLayout::new(positions), damping })
    }

    /// Inverse of [`DesignVector::decode`]. The layout is shifted so body 1 sits at the origin.
    pub fn encode(geometry: &WecGeometry, layout: &ArrayLayout, damping: &[f64]) -> Self {
        assert_eq!(layout.len(), damping.len(), "one damping per WEC");
        let origin = layout.positions[0];
        let mut values = vec![2.0 * geometry.radius, geometry.length / geometry.radius, damping[0].log10()];
        for (p, d) in layout.positions.iter().zip(damping).skip(1) {
            values.extend([p[0] - origin[0], p[1] - origin[1], d.log10()]);
        }
        Self { values }
    }

    pub fn csv_header(n: usize) -> String {
        (0..3 * n).map(Self::gene_name).collect::<Vec<_>>().join(",")
    }

    /// Comma-separated values in shortest round-trip form.
    pub fn to_csv_row(&self) -> String {
        self.values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",")
    }

    pub fn from_csv_row(row: &str) -> Result<Self, GeometryError> {
        let values = row
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| GeometryError::Parse(format!("{s:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { values })
    }

    /// Stable key for evaluation caches.
    pub fn cache_key(&self) -> Vec<u64> {
        self.values.iter().map(|v| v.to_bits()).collect()
    }
}

/// Environmental, economic and control constants shared by every evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub omega: f64,
    pub amplitude: f64,
    pub heading: f64,
    pub interest_rate: f64,
    pub availability: f64,
    pub lifetime_yr: f64,
    pub array_scaling: f64,
    pub force_max: f64,
    pub capex_median: f64,
    pub rho: f64,
    pub g: f64,
    pub transmission_efficiency: f64,
    pub wec_count: usize,
}

impl Default for ParameterSet {
    fn default() -> Self {
        Self {
            omega: 1.047,
            amplitude: 1.0,
            heading: 0.0,
            interest_rate: 0.07,
            availability: 0.95,
            lifetime_yr: 25.0,
            array_scaling: 0.65,
            force_max: 2.6e5,
            capex_median: 9000.0,
            rho: 1025.0,
            g: 9.81,
            transmission_efficiency: 0.95,
            wec_count: 4,
        }
    }
}

impl ParameterSet {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let positive = [
            ("omega", self.omega),
            ("amplitude", self.amplitude),
            ("interest_rate", self.interest_rate),
            ("lifetime_yr", self.lifetime_yr),
            ("array_scaling", self.array_scaling),
            ("force_max", self.force_max),
            ("capex_median", self.capex_median),
            ("rho", self.rho),
            ("g", self.g),
        ];
        for (name, v) in positive {
            check(name, v, f64::MIN_POSITIVE, f64::MAX)?;
        }
        check("availability", self.availability, f64::MIN_POSITIVE, 1.0)?;
        check("transmission_efficiency", self.transmission_efficiency, f64::MIN_POSITIVE, 1.0)?;
        check("heading", self.heading, f64::MIN, f64::MAX)?;
        if self.wec_count == 0 {
            return Err(GeometryError::BadLength(0));
        }
        Ok(())
    }
}
