//! Configuration-driven sweeps: stability constants, Gram certificates and
//! the L2 projector over a list of point-set levels.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{generate_fibonacci, sphere_constants, MeshStats, PointSet};
use crate::gram::{
    assemble_gram, default_gamma_grid, offdiag_decay_check, select_gamma, write_gram_csv, CertificateInputs,
    GramCertificate,
};
use crate::kernel::{Kernel, KernelDescriptor};
use crate::lagrange::{solve_augmented_lagrange, solve_lagrange, LagrangeBasis, RenormalizedBasis};
use crate::projector::{
    make_test_function, write_opnorm_csv, write_projector_csv, ProjectorReport, TestFunction, TestKind,
};
use crate::pvalue;
use crate::quadrature::{QuadratureRule, MIN_RINGS, RINGS_PER_INVERSE_MESH_NORM};
use crate::stability::{
    riesz_bounds, sup_grid, write_stability_csv, StabilityConfig, StabilityReport, DEFAULT_SUP_DENSITY,
};

pub const STABILITY_CSV: &str = "stability.csv";
pub const GRAM_CSV: &str = "gram.csv";
pub const PROJECTOR_CSV: &str = "projector.csv";
pub const OPNORM_CSV: &str = "opnorm.csv";
pub const MANIFEST: &str = "manifest.json";
pub const REPORT_FILES: [&str; 4] = [STABILITY_CSV, GRAM_CSV, PROJECTOR_CSV, OPNORM_CSV];

/// Bumped whenever the manifest layout changes.
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    Fibonacci { levels: Vec<usize> },
    /// One CSV of `x,y,z` rows per level, relative to the config file.
    File { paths: Vec<PathBuf> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureOptions {
    /// `n_theta = max(min_rings, ceil(rings_per_inverse_h / h))`, `n_phi = 2 n_theta`.
    pub rings_per_inverse_h: f64,
    pub min_rings: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            rings_per_inverse_h: RINGS_PER_INVERSE_MESH_NORM,
            min_rings: MIN_RINGS,
        }
    }
}

impl QuadratureOptions {
    pub fn rule(&self, h: f64) -> Result<QuadratureRule> {
        let n_theta = ((self.rings_per_inverse_h / h).ceil() as usize).max(self.min_rings);
        QuadratureRule::product(n_theta, 2 * n_theta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityOptions {
    pub decay_centers: usize,
    pub holder_pairs: usize,
    pub holder_centers: usize,
    pub holder_exponent: f64,
    pub trials: usize,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        let d = StabilityConfig::default();
        Self {
            decay_centers: d.decay_centers,
            holder_pairs: d.holder_pairs,
            holder_centers: d.holder_centers,
            holder_exponent: d.holder_exponent,
            trials: d.trials,
        }
    }
}

fn default_ps() -> Vec<f64> {
    vec![1.0, 2.0, f64::INFINITY]
}

fn default_density() -> usize {
    DEFAULT_SUP_DENSITY
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_targets() -> Vec<TestKind> {
    vec![TestKind::Smooth, TestKind::Rough { s: 2.0 }]
}

/// A single JSON document describing one sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kernel: KernelDescriptor,
    pub generator: Generator,
    #[serde(default)]
    pub quadrature: QuadratureOptions,
    /// Sup-norm grid points per center.
    #[serde(default = "default_density")]
    pub grid_density: usize,
    #[serde(default = "default_ps", with = "pvalue::list")]
    pub ps: Vec<f64>,
    pub seed: u64,
    /// Relative to the config file.
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_targets")]
    pub test_functions: Vec<TestKind>,
    #[serde(default)]
    pub stability: StabilityOptions,
    /// Cutoff grid for the certificate; defaults to `1.5, 2, ..., 40`.
    #[serde(default)]
    pub gammas: Option<Vec<f64>>,
    /// Grid points added to the centers when estimating `||T||_inf`;
    /// defaults to the level size.
    #[serde(default)]
    pub probe_holes: Option<usize>,
}

impl ExperimentConfig {
    /// Parses a config, reporting the field path of the first error.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { String::new() } else { path }, e.inner().to_string())
        })
    }

    pub fn stability_config(&self) -> StabilityConfig {
        let s = &self.stability;
        StabilityConfig {
            sup_density: self.grid_density,
            decay_centers: s.decay_centers,
            holder_pairs: s.holder_pairs,
            holder_centers: s.holder_centers,
            holder_exponent: s.holder_exponent,
            trials: s.trials,
            ps: self.ps.clone(),
            seed: self.seed,
        }
    }

    pub fn gamma_grid(&self) -> Vec<f64> {
        self.gammas.clone().unwrap_or_else(default_gamma_grid)
    }
}

/// A config with its location and raw bytes (for hashing).
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
    pub sha256: String,
}

impl LoadedConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path)
            .map_err(|e| Error::config("", format!("cannot read {}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::config("", e.to_string()))?;
        Ok(Self {
            config: ExperimentConfig::from_json(text)?,
            base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            sha256: sha256_hex(&bytes),
        })
    }

    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        Ok(Self {
            config: ExperimentConfig::from_json(text)?,
            base_dir: base_dir.into(),
            sha256: sha256_hex(text.as_bytes()),
        })
    }

    pub fn output_dir(&self) -> PathBuf {
        self.base_dir.join(&self.config.output_dir)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One level of a sweep, before any numerics.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelPlan {
    pub label: String,
    pub n: usize,
    pub source: Option<PathBuf>,
}

impl LevelPlan {
    fn point_set(&self) -> Result<PointSet> {
        match &self.source {
            None => generate_fibonacci(self.n),
            Some(path) => PointSet::read_csv(path, None),
        }
    }
}

/// Outcome of [`validate`]: the resolved levels and informational notes.
#[derive(Clone, Debug)]
pub struct Validation {
    pub levels: Vec<LevelPlan>,
    pub diagnostics: Vec<String>,
}

fn check(ok: bool, path: impl Into<String>, message: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(path, message))
    }
}

fn strictly_increasing(ns: &[usize], path: &str, what: &str) -> Result<()> {
    check(!ns.is_empty(), path, "at least one level is required")?;
    for (i, w) in ns.windows(2).enumerate() {
        let at = format!("{path}[{}]", i + 1);
        check(w[1] != w[0], &at, format!("duplicate level {} {what}", w[1]))?;
        check(w[1] > w[0], &at, format!("levels must increase ({} after {}) {what}", w[1], w[0]))?;
    }
    Ok(())
}

/// Nearest existing ancestor must be a writable directory.
fn check_writable(dir: &Path) -> Result<()> {
    let mut probe = dir;
    loop {
        if let Ok(meta) = fs::metadata(probe) {
            check(meta.is_dir(), "output_dir", format!("{} is not a directory", probe.display()))?;
            return check(
                !meta.permissions().readonly(),
                "output_dir",
                format!("{} is read-only", probe.display()),
            );
        }
        match probe.parent() {
            Some(p) if !p.as_os_str().is_empty() => probe = p,
            _ => return Ok(()),
        }
    }
}

/// Checks everything that can be checked without numerics; every error
/// names the offending field.
pub fn validate(loaded: &LoadedConfig) -> Result<Validation> {
    let c = &loaded.config;
    let mut diagnostics = Vec::new();

    let kernel = c.kernel.build().map_err(|e| Error::config("kernel", e.to_string()))?;
    if let Some(s) = kernel.as_series() {
        diagnostics.push(format!(
            "kernel: Legendre series, beta = {}, degree {}",
            s.beta(),
            s.truncation_degree()
        ));
    }

    let levels = match &c.generator {
        Generator::Fibonacci { levels } => {
            strictly_increasing(levels, "generator.levels", "")?;
            for (i, n) in levels.iter().enumerate() {
                check(*n >= 2, format!("generator.levels[{i}]"), "a level needs at least 2 points")?;
            }
            levels
                .iter()
                .map(|&n| LevelPlan {
                    label: format!("fibonacci-{n}"),
                    n,
                    source: None,
                })
                .collect::<Vec<_>>()
        }
        Generator::File { paths } => {
            let mut plans = Vec::with_capacity(paths.len());
            for (i, p) in paths.iter().enumerate() {
                let path = loaded.resolve(p);
                let set = PointSet::read_csv(&path, None)
                    .map_err(|e| Error::config(format!("generator.paths[{i}]"), format!("{}: {e}", path.display())))?;
                plans.push(LevelPlan {
                    label: p.display().to_string(),
                    n: set.len(),
                    source: Some(path),
                });
            }
            let ns: Vec<usize> = plans.iter().map(|p| p.n).collect();
            strictly_increasing(&ns, "generator.paths", "(point counts)")?;
            plans
        }
    };

    check(c.grid_density >= 1, "grid_density", "must be at least 1")?;
    check(!c.ps.is_empty(), "ps", "at least one exponent is required")?;
    for (i, p) in c.ps.iter().enumerate() {
        check(*p >= 1.0, format!("ps[{i}]"), format!("p = {p} is below 1"))?;
        check(!c.ps[..i].contains(p), format!("ps[{i}]"), format!("duplicate p = {}", pvalue::format_p(*p)))?;
    }

    let q = &c.quadrature;
    check(
        q.rings_per_inverse_h.is_finite() && q.rings_per_inverse_h > 0.0,
        "quadrature.rings_per_inverse_h",
        "must be positive",
    )?;
    check(q.min_rings >= 1, "quadrature.min_rings", "must be at least 1")?;

    let s = &c.stability;
    check(s.trials >= 32, "stability.trials", format!("need at least 32 trials, got {}", s.trials))?;
    check(s.decay_centers >= 1, "stability.decay_centers", "must be at least 1")?;
    check(s.holder_centers >= 1, "stability.holder_centers", "must be at least 1")?;
    check(s.holder_pairs >= 2, "stability.holder_pairs", "must be at least 2")?;
    check(
        s.holder_exponent > 0.0 && s.holder_exponent <= 1.0,
        "stability.holder_exponent",
        "must lie in (0, 1]",
    )?;

    if let Some(g) = &c.gammas {
        check(!g.is_empty(), "gammas", "at least one cutoff is required")?;
        for (i, v) in g.iter().enumerate() {
            check(*v > 1.0, format!("gammas[{i}]"), format!("cutoff {v} must exceed 1"))?;
            check(i == 0 || *v > g[i - 1], format!("gammas[{i}]"), "cutoffs must increase")?;
        }
    }

    check(!c.test_functions.is_empty(), "test_functions", "at least one test function is required")?;
    for (i, kind) in c.test_functions.iter().enumerate() {
        if let TestKind::Rough { s } = kind {
            TestFunction::rough(*s).map_err(|e| Error::config(format!("test_functions[{i}].s"), e.to_string()))?;
        }
        check(
            !c.test_functions[..i].contains(kind),
            format!("test_functions[{i}]"),
            format!("duplicate test function {kind}"),
        )?;
    }

    check_writable(&loaded.output_dir())?;

    for l in &levels {
        diagnostics.push(format!("level {}: {} centers, sup grid >= {} points", l.label, l.n, l.n * c.grid_density));
    }
    Ok(Validation { levels, diagnostics })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Setup,
    Stability,
    Gram,
    Projector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub seconds: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub label: String,
    pub n: usize,
    pub mesh: Option<MeshStats>,
    pub point_set_digest: Option<String>,
    pub stages: Vec<StageRecord>,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
    pub rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub package: String,
    pub package_version: String,
    pub parallel: bool,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub kernel: serde_json::Value,
    pub levels: Vec<LevelRecord>,
    pub files: Vec<FileRecord>,
    pub wall_seconds: f64,
}

impl Manifest {
    pub fn failed_levels(&self) -> usize {
        self.levels.iter().filter(|l| !l.ok).count()
    }

    pub fn all_failed(&self) -> bool {
        !self.levels.is_empty() && self.levels.iter().all(|l| !l.ok)
    }

    pub fn read(dir: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(dir.as_ref().join(MANIFEST))?)?)
    }
}

/// Results of one level; each report is present when its stage succeeded.
#[derive(Default)]
struct LevelResults {
    stability: Option<StabilityReport>,
    certificate: Option<GramCertificate>,
    projector: Option<ProjectorReport>,
}

fn timed<T>(stage: Stage, stages: &mut Vec<StageRecord>, f: impl FnOnce() -> Result<T>) -> Option<T> {
    let start = Instant::now();
    let out = f();
    let seconds = start.elapsed().as_secs_f64();
    if let Err(e) = &out {
        log::warn!("{stage:?} failed: {e}");
    }
    stages.push(StageRecord {
        stage,
        seconds,
        error: out.as_ref().err().map(ToString::to_string),
    });
    out.ok()
}

struct Setup {
    set: PointSet,
    basis: LagrangeBasis,
    rule: QuadratureRule,
    gram: DMatrix<f64>,
}

fn setup(kernel: &Kernel, plan: &LevelPlan, config: &ExperimentConfig) -> Result<Setup> {
    let set = plan.point_set()?;
    let basis = match kernel {
        Kernel::Spline(s) => solve_augmented_lagrange(s, &set)?,
        _ => solve_lagrange(kernel, &set)?,
    };
    let rule = config.quadrature.rule(set.mesh_norm())?;
    let gram = assemble_gram(&RenormalizedBasis::new(&basis, 2.0)?, &rule)?.entries;
    Ok(Setup { set, basis, rule, gram })
}

fn run_level(
    kernel: &Kernel,
    plan: &LevelPlan,
    config: &ExperimentConfig,
    targets: &[TestFunction],
) -> (LevelRecord, LevelResults) {
    let mut stages = Vec::new();
    let mut results = LevelResults::default();
    let mut record = LevelRecord {
        label: plan.label.clone(),
        n: plan.n,
        mesh: None,
        point_set_digest: None,
        stages: Vec::new(),
        ok: false,
    };
    if let Some(s) = timed(Stage::Setup, &mut stages, || setup(kernel, plan, config)) {
        record.mesh = Some(s.set.stats());
        record.point_set_digest = Some(s.set.digest());
        let grid = sup_grid(&s.set, config.grid_density);
        results.stability = timed(Stage::Stability, &mut stages, || {
            StabilityReport::measure(&s.basis, &s.set, &s.rule, &s.gram, &config.stability_config())
        });
        let nu = results.stability.as_ref().map(|r| r.decay.rate);
        results.certificate = timed(Stage::Gram, &mut stages, || {
            let (c1, c2) = riesz_bounds(&s.gram)?;
            let q = s.set.separation_radius();
            let decay = nu.map(|nu| {
                let d = offdiag_decay_check(&s.gram, s.set.points(), q, nu);
                (d.c_g, d.mu)
            });
            let inputs = CertificateInputs {
                centers: s.set.points(),
                q,
                c1,
                c2,
                constants: sphere_constants(),
                gammas: config.gamma_grid(),
                decay,
            };
            select_gamma(&s.gram, &inputs)
        });
        let holes = config.probe_holes.unwrap_or(s.set.len());
        results.projector = timed(Stage::Projector, &mut stages, || {
            ProjectorReport::measure(&s.basis, &s.set, &s.rule, &s.gram, &grid, targets, &config.ps, holes)
        });
    }
    record.ok = stages.iter().all(|s| s.error.is_none());
    record.stages = stages;
    (record, results)
}

fn build_targets(loaded: &LoadedConfig, kernel: &Kernel, levels: &[LevelPlan]) -> Result<Vec<TestFunction>> {
    let c = &loaded.config;
    let needs_span = c.test_functions.contains(&TestKind::InSpan);
    // In-span targets live on the finest level's centers.
    let finest = match levels.last() {
        Some(l) if needs_span => Some(l.point_set()?),
        _ => None,
    };
    c.test_functions
        .iter()
        .map(|kind| {
            let span = finest.as_ref().map(|s| (kernel, s.points()));
            make_test_function(*kind, span, c.seed)
        })
        .collect()
}

fn write_report<F>(dir: &Path, name: &str, files: &mut Vec<FileRecord>, write: F) -> Result<()>
where
    F: FnOnce(&mut Vec<u8>) -> Result<()>,
{
    let mut bytes = Vec::new();
    write(&mut bytes)?;
    fs::write(dir.join(name), &bytes)?;
    files.push(FileRecord {
        name: name.to_string(),
        sha256: sha256_hex(&bytes),
        rows: bytes.iter().filter(|b| **b == b'\n').count().saturating_sub(1),
    });
    Ok(())
}

/// Runs every level, writes the four CSVs and the manifest into the output
/// directory and returns the manifest. A failing stage is recorded in the
/// manifest and the sweep continues.
pub fn run(loaded: &LoadedConfig) -> Result<Manifest> {
    let start = Instant::now();
    let validation = validate(loaded)?;
    let config = &loaded.config;
    let kernel = config.kernel.build()?;
    let targets = build_targets(loaded, &kernel, &validation.levels)?;

    let mut records = Vec::with_capacity(validation.levels.len());
    let mut stability = Vec::new();
    let mut certificates = Vec::new();
    let mut projector = Vec::new();
    for plan in &validation.levels {
        log::info!("level {} ({} centers)", plan.label, plan.n);
        let (record, results) = run_level(&kernel, plan, config, &targets);
        records.push(record);
        stability.extend(results.stability);
        certificates.extend(results.certificate);
        projector.extend(results.projector);
    }

    let dir = loaded.output_dir();
    fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    write_report(&dir, STABILITY_CSV, &mut files, |w| write_stability_csv(w, &stability))?;
    write_report(&dir, GRAM_CSV, &mut files, |w| write_gram_csv(w, &certificates))?;
    write_report(&dir, PROJECTOR_CSV, &mut files, |w| write_projector_csv(w, &projector))?;
    write_report(&dir, OPNORM_CSV, &mut files, |w| write_opnorm_csv(w, &projector))?;

    let manifest = Manifest {
        manifest_version: MANIFEST_VERSION,
        package: env!("CARGO_PKG_NAME").to_string(),
        package_version: env!("CARGO_PKG_VERSION").to_string(),
        parallel: cfg!(feature = "parallel"),
        config_sha256: loaded.sha256.clone(),
        config: config.clone(),
        kernel: kernel.describe(),
        levels: records,
        files,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Recomputes the hashes of the files a manifest lists; returns the names
/// that are missing or differ.
pub fn verify_manifest(dir: impl AsRef<Path>, manifest: &Manifest) -> Vec<String> {
    manifest
        .files
        .iter()
        .filter(|f| match fs::read(dir.as_ref().join(&f.name)) {
            Ok(bytes) => sha256_hex(&bytes) != f.sha256,
            Err(_) => true,
        })
        .map(|f| f.name.clone())
        .collect()
}

/// One tidy row: `experiment, level, metric, value`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub experiment: String,
    pub level: usize,
    pub metric: String,
    pub value: String,
}

fn invalid(message: String) -> Error {
    Error::Io(io::Error::new(io::ErrorKind::InvalidData, message))
}

pub const PLOTDATA_HEADER: [&str; 4] = ["experiment", "level", "metric", "value"];

fn key_columns(experiment: &str) -> &'static [&'static str] {
    match experiment {
        "stability" => &["p"],
        "projector" => &["function", "p"],
        _ => &[],
    }
}

/// Melts the four report CSVs of `dir` into long format. Every non-key
/// cell of every data row becomes one output row; key columns (`p`,
/// `function`) qualify the metric name, e.g. `error[function=smooth;p=2]`.
/// Booleans become 1/0 and blank cells stay blank.
pub fn plotdata(dir: impl AsRef<Path>) -> Result<Vec<PlotRow>> {
    let dir = dir.as_ref();
    let mut out = Vec::new();
    for name in REPORT_FILES {
        let path = dir.join(name);
        if !path.is_file() {
            return Err(Error::Io(io::Error::new(
                io::ErrorKind::NotFound,
                format!("{} not found", path.display()),
            )));
        }
        let experiment = name.trim_end_matches(".csv");
        let mut reader = csv::Reader::from_path(&path)?;
        let header = reader.headers()?.clone();
        let level_col = header
            .iter()
            .position(|h| h == "n")
            .ok_or_else(|| invalid(format!("{} has no n column", path.display())))?;
        let keys: Vec<usize> = key_columns(experiment)
            .iter()
            .filter_map(|k| header.iter().position(|h| h == *k))
            .collect();
        for record in reader.records() {
            let record = record?;
            let level = record[level_col]
                .parse()
                .map_err(|_| invalid(format!("bad level `{}` in {}", &record[level_col], path.display())))?;
            let qualifier = keys
                .iter()
                .map(|&k| format!("{}={}", &header[k], &record[k]))
                .collect::<Vec<_>>()
                .join(";");
            for (i, column) in header.iter().enumerate() {
                if i == level_col || keys.contains(&i) {
                    continue;
                }
                let metric = if qualifier.is_empty() {
                    column.to_string()
                } else {
                    format!("{column}[{qualifier}]")
                };
                let value = match &record[i] {
                    "true" => "1".to_string(),
                    "false" => "0".to_string(),
                    v => v.to_string(),
                };
                out.push(PlotRow {
                    experiment: experiment.to_string(),
                    level,
                    metric,
                    value,
                });
            }
        }
    }
    Ok(out)
}

pub fn write_plotdata<W: Write>(out: W, rows: &[PlotRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PLOTDATA_HEADER)?;
    for r in rows {
        w.write_record([r.experiment.as_str(), &r.level.to_string(), &r.metric, &r.value])?;
    }
    w.flush()?;
    Ok(())
}
