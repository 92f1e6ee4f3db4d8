//! Subcommand bodies. Each writes its artifacts into an output directory
//! and a manifest with the configuration hash, seed and file digests.

use crate::config::RunConfig;
use crate::validation;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use wecarray::geometry::DesignVector;
use wecarray::mesh;
use wecarray::optimize::{self, EvaluationRecord, HydroCache, ParetoSet};
use wecarray::postprocess::{self, FrontPoint};
use wecarray::sensitivity::{self, SobolProblem};

pub type CmdResult<T> = Result<T, Box<dyn std::error::Error + Send + Sync>>;

pub const CONFIG_FILE: &str = "config.toml";
pub const PARETO_FILE: &str = "pareto.csv";

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: u64,
    config_sha256: String,
    wecarray_version: &'a str,
    files: BTreeMap<String, String>,
}

/// Collects artifacts for one run directory.
pub struct RunDir {
    path: PathBuf,
    files: BTreeMap<String, String>,
}

impl RunDir {
    pub fn create(path: &Path) -> CmdResult<Self> {
        std::fs::create_dir_all(path)?;
        Ok(Self { path: path.to_path_buf(), files: BTreeMap::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CmdResult<()> {
        std::fs::write(self.path.join(name), contents)?;
        self.files.insert(name.to_string(), sha256_hex(contents.as_bytes()));
        Ok(())
    }

    /// Writes `<command>_manifest.toml` listing every file written so far.
    pub fn finish(self, command: &str, cfg: &RunConfig) -> CmdResult<PathBuf> {
        let manifest = Manifest {
            command,
            seed: cfg.seed,
            config_sha256: sha256_hex(cfg.canonical().as_bytes()),
            wecarray_version: env!("CARGO_PKG_VERSION"),
            files: self.files,
        };
        let path = self.path.join(format!("{command}_manifest.toml"));
        std::fs::write(&path, toml::to_string(&manifest)?)?;
        Ok(path)
    }
}

pub fn pareto_csv(records: &[&EvaluationRecord], wec_count: usize) -> String {
    let mut out = format!(
        "{},mass_kg,capex_usd,capex_ann_usd_per_yr,opex_usd_per_yr,aep_kwh_per_yr\n",
        EvaluationRecord::csv_header(wec_count)
    );
    for r in records {
        let d = &r.diagnostics;
        let econ = d
            .lcoe
            .as_ref()
            .map(|l| format!("{:?},{:?},{:?},{:?}", l.capex, l.capex_ann, l.opex, l.aep_kwh))
            .unwrap_or_else(|| ",,,".into());
        let mass = d.mass_kg.map(|m| format!("{m:?}")).unwrap_or_default();
        writeln!(out, "{},{},{}", r.to_csv_row(), mass, econ).unwrap();
    }
    out
}

fn history_csv(front: &ParetoSet) -> String {
    let mut out = String::from("generation,evaluations,front_size,ideal_lcoe,ideal_space_m,nadir_lcoe,nadir_space_m,metric,hypervolume\n");
    for h in &front.history {
        writeln!(
            out,
            "{},{},{},{:?},{:?},{:?},{:?},{:?},{:?}",
            h.generation, h.evaluations, h.front_size, h.ideal[0], h.ideal[1], h.nadir[0], h.nadir[1], h.metric, h.hypervolume
        )
        .unwrap();
    }
    out
}

/// Runs the optimizer and writes the filtered front, the raw front and the
/// generation history.
pub fn optimize(cfg: &RunConfig, out: &Path) -> CmdResult<ParetoSet> {
    let settings = cfg.eval_settings();
    let cache = HydroCache::new();
    let raw = optimize::run_nsga2(&cfg.optimizer_config(), &settings.bounds, |v| optimize::evaluate(v, &settings, &cache))?;
    let front = optimize::filter_nonphysical(&raw, &settings);
    log::info!("{} front members ({} before filtering), {} hydro solves", front.members.len(), raw.members.len(), cache.misses());
    let mut dir = RunDir::create(out)?;
    dir.write(CONFIG_FILE, &cfg.canonical())?;
    dir.write(PARETO_FILE, &pareto_csv(&front.sorted(), cfg.array.wec_count))?;
    dir.write("pareto_unfiltered.csv", &pareto_csv(&raw.sorted(), cfg.array.wec_count))?;
    dir.write("history.csv", &history_csv(&front))?;
    dir.finish("optimize", cfg)?;
    Ok(front)
}

/// Indices at the configured base size plus the convergence scan.
pub fn sensitivity(cfg: &RunConfig, out: &Path) -> CmdResult<sensitivity::SobolIndices> {
    let settings = cfg.eval_settings();
    let cache = HydroCache::new();
    let design = cfg.sensitivity_design();
    let problem = SobolProblem::lcoe_parameters();
    let model = sensitivity::lcoe_model(&design, &settings, &cache);
    let s = &cfg.sensitivity;
    let indices = sensitivity::analyze(&problem, s.base_samples, &model, s.bootstrap_resamples, cfg.seed)?;
    let mut dir = RunDir::create(out)?;
    dir.write(CONFIG_FILE, &cfg.canonical())?;
    dir.write("sobol_indices.csv", &indices.csv())?;
    if !s.scan.is_empty() {
        let scan = sensitivity::convergence_scan(&problem, &s.scan, &model, s.bootstrap_resamples, cfg.seed)?;
        dir.write("sobol_convergence.csv", &sensitivity::scan_csv(&scan))?;
    }
    let mut summary = format!("design: {}\nbase samples: {}\nimputed outputs: {}\nranking by total index:\n", design.to_csv_row(), indices.base_samples, indices.imputed);
    for (i, name) in indices.ranking().iter().enumerate() {
        writeln!(summary, "  {}. {}", i + 1, name).unwrap();
    }
    dir.write("sobol_summary.txt", &summary)?;
    dir.finish("sensitivity", cfg)?;
    Ok(indices)
}

pub fn mesh_study(cfg: &RunConfig, out: &Path) -> CmdResult<Vec<mesh::ConvergenceRow>> {
    let hulls = mesh::latin_hypercube_hulls(cfg.mesh_study.designs, &cfg.bounds(), cfg.seed);
    let resolutions = cfg.mesh_study.resolutions.clone().unwrap_or_else(mesh::study_resolutions);
    let p = cfg.parameters();
    let rows = mesh::mesh_convergence_study(&hulls, &resolutions, p.omega, p.rho, p.g)?;
    let mut csv = String::from("design,radius_m,length_m,nr,ntheta,nx,panels,added_mass_kg,damping_ns_m,relative_change,converged\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{:?},{:?},{},{},{},{},{:.6e},{:.6e},{},{}",
            r.design,
            r.radius,
            r.length,
            r.nr,
            r.ntheta,
            r.nx,
            r.panels,
            r.added_mass,
            r.damping,
            r.relative_change.map(|c| format!("{c:.6e}")).unwrap_or_default(),
            r.converged
        )
        .unwrap();
    }
    let mut dir = RunDir::create(out)?;
    dir.write(CONFIG_FILE, &cfg.canonical())?;
    dir.write("mesh_convergence.csv", &csv)?;
    dir.finish("mesh_study", cfg)?;
    Ok(rows)
}

/// Returns the report and whether every comparison passed.
pub fn validate(cfg: &RunConfig, out: Option<&Path>) -> CmdResult<(String, bool)> {
    let bem = cfg.bem.options();
    let clusters = validation::cluster_comparison(bem)?;
    let saturation = validation::saturation_comparison(bem)?;
    let text = validation::report(&clusters, &saturation);
    let ok = clusters.iter().all(|r| r.passes()) && saturation.iter().all(|r| r.passes());
    if let Some(out) = out {
        let mut dir = RunDir::create(out)?;
        dir.write("validation.txt", &text)?;
        dir.finish("validate", cfg)?;
    }
    Ok((text, ok))
}

/// Reads a front written by [`optimize`].
pub fn read_front(path: &Path) -> CmdResult<Vec<FrontPoint>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| format!("{}: missing column {name}", path.display()));
    let (lcoe, space, q) = (col("lcoe_usd_per_kwh")?, col("space_max_m")?, col("q")?);
    let genes = lcoe;
    let mut front = Vec::new();
    for row in reader.records() {
        let row = row?;
        let num = |i: usize| -> CmdResult<f64> { Ok(row[i].parse::<f64>()?) };
        let design = DesignVector::new((0..genes).map(num).collect::<CmdResult<Vec<_>>>()?);
        let damping = (0..genes / 3).map(|i| 10f64.powf(design.values[3 * i + 2])).collect();
        front.push(FrontPoint { lcoe: num(lcoe)?, space: num(space)?, q: row[q].parse().ok(), damping, design });
    }
    Ok(front)
}

/// Fits, deltas, report and disturbance fields of the extreme designs for a
/// completed optimize run in `run_dir`.
pub fn postprocess(run_dir: &Path) -> CmdResult<String> {
    let cfg = RunConfig::load(&run_dir.join(CONFIG_FILE))?;
    let front = read_front(&run_dir.join(PARETO_FILE))?;
    let report = postprocess::report(&front)?;
    let mut dir = RunDir::create(run_dir)?;
    dir.write("deltas.csv", &postprocess::deltas_csv(&postprocess::normalized_deltas(&front)?))?;
    match postprocess::cluster_and_fit(&front) {
        Ok(fits) => dir.write("fits.csv", &postprocess::fits_csv(&fits))?,
        Err(e) => log::warn!("trade-off fits skipped: {e}"),
    }
    dir.write("report.txt", &report)?;
    let settings = cfg.eval_settings();
    let best = front.iter().min_by(|a, b| a.lcoe.total_cmp(&b.lcoe)).expect("front is nonempty");
    let compact = front.iter().min_by(|a, b| a.space.total_cmp(&b.space)).expect("front is nonempty");
    for (name, point) in [("kd_min_lcoe.csv", best), ("kd_min_space.csv", compact)] {
        let design = point.design.decode(&settings.bounds)?;
        let grid = postprocess::wavelength_grid(&design, &settings, cfg.postprocess.grid_wavelengths, cfg.postprocess.grid_points);
        let field = postprocess::disturbance_coefficient(&design, &settings, grid)?;
        dir.write(name, &field.csv())?;
    }
    dir.finish("postprocess", &cfg)?;
    Ok(report)
}
