//! Configuration-driven experiments: theory curves, simulator sweeps over
//! antipodal layouts, CSV datasets with a JSON run manifest, and
//! theory-vs-numerics comparison.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cft_mie::{forced, mie, TheoryParams};
use crate::ed_oracle::{luttinger_g, mie_exact_state, xxz_ground_state};
use crate::error::{MieError, Result};
use crate::fit::{log_space, loglog_fit};
use crate::gaussian_sim::{estimate_mie_multi, forced_entropy, neel_outcome, xx_ground_state};
use crate::geometry::{RingGeometry, RingLayout};

/// Environment variable that, when set, prefixes relative output paths.
pub const OUTPUT_DIR_ENV: &str = "MIE_OUTPUT_DIR";

/// Column order of every dataset.
pub const CSV_HEADER: [&str; 8] = ["zeta", "renyi_n", "value", "stderr", "source", "L", "delta", "g"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Theory,
    XxMc,
    Ed,
    Forced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    #[default]
    Nats,
    Bits,
}

impl Units {
    /// Converts a value in nats.
    pub fn from_nats(self, v: f64) -> f64 {
        match self {
            Units::Nats => v,
            Units::Bits => v / std::f64::consts::LN_2,
        }
    }
}

/// Either a log-spaced range or explicit values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ZetaGrid {
    Range { min: f64, max: f64, points: usize },
    Values(Vec<f64>),
}

impl ZetaGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            ZetaGrid::Range { min, max, points } => log_space(*min, *max, *points),
            ZetaGrid::Values(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutSweep {
    pub min_measured: usize,
    pub max_measured: usize,
    #[serde(default = "one")]
    pub step: usize,
}

fn one() -> usize {
    1
}

fn default_n_traj() -> usize {
    4000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Ring length; unused by `theory`.
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<usize>,
    #[serde(default)]
    pub delta: f64,
    /// Luttinger parameter for `theory`; defaults to the value at `delta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    pub renyi_list: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta_grid: Option<ZetaGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout_sweep: Option<LayoutSweep>,
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default)]
    pub seed: u64,
    pub output_path: PathBuf,
    #[serde(default)]
    pub units: Units,
}

/// Commented template printed by `--emit-default-config`.
pub const DEFAULT_CONFIG_TEMPLATE: &str = r#"# Experiment configuration.
#
# mode: "theory" (compact-boson curves on zeta_grid),
#       "xx_mc"  (Monte Carlo on the XX ring over layout_sweep),
#       "ed"     (exact enumeration on small XXZ rings, L <= 14),
#       "forced" (Neel post-selection at delta = 0, paired with theory rows)
mode = "theory"

# Ring length (simulation modes).
L = 256

# XXZ anisotropy; the Luttinger parameter is g = arccos(-delta) / pi.
delta = 0.0

# Override g for theory curves.
# g = 0.5

renyi_list = [0.5, 1.0, 2.0, 3.0]

# Log-spaced cross-ratio grid for theory curves; an explicit list also works:
# zeta_grid = [0.01, 0.1, 0.5]
zeta_grid = { min = 1e-4, max = 0.99, points = 40 }

# Antipodal layouts |C1| = |C2| = m for m = min_measured, ..., max_measured.
layout_sweep = { min_measured = 8, max_measured = 120, step = 8 }

n_traj = 4000
seed = 1
output_path = "results.csv"

# "nats" or "bits"
units = "nats"
"#;

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(MieError::Config(msg));
        if self.renyi_list.is_empty() {
            return bad("renyi_list is empty".into());
        }
        if let Some(n) = self.renyi_list.iter().find(|n| !(n.is_finite() && **n > 0.0)) {
            return bad(format!("Renyi index {n} must be positive"));
        }
        if let Some(g) = self.g {
            if !(g.is_finite() && g > 0.0) {
                return bad(format!("g = {g} must be positive"));
            }
        }
        if !(self.delta > -1.0 && self.delta <= 1.0) {
            return bad(format!("delta = {} outside (-1, 1]", self.delta));
        }
        if let Some(grid) = &self.zeta_grid {
            let v = grid.values();
            if v.is_empty() || v.iter().any(|z| !(*z > 0.0 && *z < 1.0)) {
                return bad("zeta_grid must be non-empty with values in (0, 1)".into());
            }
        }
        let need_sites = |max: Option<usize>| -> Result<usize> {
            let l = self
                .sites
                .ok_or_else(|| MieError::Config(format!("mode {:?} needs L", self.mode)))?;
            if let Some(max) = max {
                if l > max {
                    return Err(MieError::Config(format!("L = {l} exceeds {max} for mode {:?}", self.mode)));
                }
            }
            if self.layout_sweep.is_none() {
                return Err(MieError::Config(format!("mode {:?} needs layout_sweep", self.mode)));
            }
            Ok(l)
        };
        match self.mode {
            Mode::Theory => {
                if self.zeta_grid.is_none() {
                    return bad("mode theory needs zeta_grid".into());
                }
            }
            Mode::XxMc | Mode::Forced => {
                need_sites(None)?;
                if self.delta != 0.0 {
                    return bad(format!("mode {:?} simulates the XX ring and needs delta = 0", self.mode));
                }
                if self.mode == Mode::XxMc && self.n_traj == 0 {
                    return bad("n_traj must be positive".into());
                }
            }
            Mode::Ed => {
                need_sites(Some(crate::ed_oracle::MAX_SITES))?;
            }
        }
        Ok(())
    }

    fn luttinger(&self) -> Result<f64> {
        match self.g {
            Some(g) => Ok(g),
            None => luttinger_g(self.delta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Theory,
    TheoryForced,
    Mc,
    Ed,
    ForcedNumeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub zeta: f64,
    pub renyi_n: f64,
    pub value: f64,
    pub stderr: f64,
    pub source: Source,
    /// Ring length; 0 for continuum theory rows.
    #[serde(rename = "L")]
    pub sites: usize,
    pub delta: f64,
    pub g: f64,
}

/// One antipodal layout of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub measured: usize,
    pub layout: RingLayout,
    pub geometry: RingGeometry,
    pub zeta: f64,
}

/// Antipodal layouts `|C1| = |C2| = m`, `|A| = |B| = L/2 - m` for
/// `m = min_measured, min_measured + step, ..., <= max_measured`. A
/// `max_measured` of 0 asks for the single least-measured layout `m = 1`.
pub fn generate_layout_sweep(
    sites: usize,
    min_measured: usize,
    max_measured: usize,
    step: usize,
) -> Result<Vec<SweepPoint>> {
    if !sites.is_multiple_of(2) || sites < 4 {
        return Err(MieError::InfeasibleLayout(format!(
            "antipodal layouts need an even ring with L >= 4, got {sites}"
        )));
    }
    let (lo, hi) = if max_measured == 0 { (1, 1) } else { (min_measured, max_measured) };
    if step == 0 || lo == 0 || lo > hi || hi >= sites / 2 {
        return Err(MieError::InfeasibleLayout(format!(
            "measured lengths {lo}..={hi} (step {step}) must satisfy 1 <= min <= max < L/2 = {}",
            sites / 2
        )));
    }
    let points = (lo..=hi)
        .step_by(step)
        .map(|m| {
            let layout = RingLayout::antipodal(sites, m)?;
            let geometry = layout.geometry()?;
            Ok(SweepPoint {
                measured: m,
                layout,
                geometry,
                zeta: layout.cross_ratio()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if points.windows(2).any(|w| !(w[1].zeta < w[0].zeta)) {
        return Err(MieError::InfeasibleLayout("cross-ratios are not strictly decreasing".into()));
    }
    Ok(points)
}

fn sweep_of(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    let sweep = cfg
        .layout_sweep
        .ok_or_else(|| MieError::Config("layout_sweep missing".into()))?;
    let sites = cfg.sites.ok_or_else(|| MieError::Config("L missing".into()))?;
    generate_layout_sweep(sites, sweep.min_measured, sweep.max_measured, sweep.step)
}

fn theory_rows(zetas: &[f64], cfg: &ExperimentConfig, g: f64, source: Source) -> Result<Vec<ResultRow>> {
    let jobs: Vec<(f64, f64)> = zetas
        .iter()
        .flat_map(|&z| cfg.renyi_list.iter().map(move |&n| (z, n)))
        .collect();
    jobs.par_iter()
        .map(|&(zeta, n)| {
            let p = TheoryParams::new(g, n, zeta)?;
            let value = match source {
                Source::TheoryForced => forced(&p)?,
                _ => mie(&p)?,
            };
            Ok(ResultRow {
                zeta,
                renyi_n: n,
                value,
                stderr: 0.0,
                source,
                sites: 0,
                delta: cfg.delta,
                g,
            })
        })
        .collect()
}

/// Rows of the configured experiment, in nats.
pub fn compute_rows(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    match cfg.mode {
        Mode::Theory => {
            let zetas = cfg.zeta_grid.as_ref().map(ZetaGrid::values).unwrap_or_default();
            theory_rows(&zetas, cfg, cfg.luttinger()?, Source::Theory)
        }
        Mode::XxMc => {
            let points = sweep_of(cfg)?;
            let sites = points[0].layout.sites;
            let c = xx_ground_state(sites)?;
            let mut rows = Vec::new();
            for pt in &points {
                let est = estimate_mie_multi(&c, &pt.layout, &cfg.renyi_list, cfg.n_traj, cfg.seed)?;
                rows.extend(est.iter().map(|e| ResultRow {
                    zeta: pt.zeta,
                    renyi_n: e.renyi_n,
                    value: e.mean,
                    stderr: e.stderr,
                    source: Source::Mc,
                    sites,
                    delta: 0.0,
                    g: 0.5,
                }));
            }
            Ok(rows)
        }
        Mode::Ed => {
            let points = sweep_of(cfg)?;
            let sites = points[0].layout.sites;
            let g = luttinger_g(cfg.delta)?;
            let gs = xxz_ground_state(sites, cfg.delta)?;
            let per_point = points
                .par_iter()
                .map(|pt| mie_exact_state(&gs.state, &pt.layout, &cfg.renyi_list))
                .collect::<Result<Vec<_>>>()?;
            Ok(points
                .iter()
                .zip(per_point)
                .flat_map(|(pt, values)| {
                    cfg.renyi_list.iter().zip(values).map(move |(&n, value)| ResultRow {
                        zeta: pt.zeta,
                        renyi_n: n,
                        value,
                        stderr: 0.0,
                        source: Source::Ed,
                        sites,
                        delta: cfg.delta,
                        g,
                    })
                })
                .collect())
        }
        Mode::Forced => {
            let points = sweep_of(cfg)?;
            let sites = points[0].layout.sites;
            let c = xx_ground_state(sites)?;
            let zetas: Vec<f64> = points.iter().map(|p| p.zeta).collect();
            let mut rows = theory_rows(&zetas, cfg, 0.5, Source::Theory)?;
            rows.extend(theory_rows(&zetas, cfg, 0.5, Source::TheoryForced)?);
            for pt in &points {
                let (_, s) = forced_entropy(&c, &pt.layout, neel_outcome, &cfg.renyi_list)?;
                rows.extend(cfg.renyi_list.iter().zip(s).map(|(&n, value)| ResultRow {
                    zeta: pt.zeta,
                    renyi_n: n,
                    value,
                    stderr: 0.0,
                    source: Source::ForcedNumeric,
                    sites,
                    delta: 0.0,
                    g: 0.5,
                }));
            }
            Ok(rows)
        }
    }
}

pub fn convert_units(rows: &mut [ResultRow], units: Units) {
    for r in rows {
        r.value = units.from_nats(r.value);
        r.stderr = units.from_nats(r.stderr);
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(MieError::Config(format!(
            "{} has header {header:?}, expected {CSV_HEADER:?}",
            path.display()
        )));
    }
    r.deserialize().map(|row| row.map_err(MieError::from)).collect()
}

/// `path`, prefixed by `$MIE_OUTPUT_DIR` when that is set and `path` is
/// relative.
pub fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub rows: usize,
    pub wall_time_seconds: f64,
    pub threads: usize,
    pub version: String,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dataset: PathBuf,
    pub manifest: PathBuf,
    pub rows: usize,
}

/// Writes `contents` to a sibling temporary file and renames it into place,
/// so a failed run never leaves a partial file at `path`.
fn write_atomically<F>(path: &Path, contents: F) -> Result<()>
where
    F: FnOnce(&mut fs::File) -> Result<()>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let result = fs::File::create(&tmp)
        .map_err(MieError::from)
        .and_then(|mut f| {
            contents(&mut f)?;
            f.sync_all()?;
            Ok(())
        })
        .and_then(|_| fs::rename(&tmp, path).map_err(MieError::from));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// Runs the experiment and writes the dataset and its manifest.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let start = Instant::now();
    let mut rows = compute_rows(cfg)?;
    convert_units(&mut rows, cfg.units);
    let dataset = resolve_output(&cfg.output_path);
    write_atomically(&dataset, |f| write_rows(f, &rows))?;
    let manifest = Manifest {
        config: cfg.clone(),
        seed: cfg.seed,
        rows: rows.len(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let manifest_file = manifest_path(&dataset);
    let written = write_atomically(&manifest_file, |f| {
        serde_json::to_writer_pretty(&mut *f, &manifest)?;
        f.write_all(b"\n")?;
        Ok(())
    });
    if let Err(e) = written {
        let _ = fs::remove_file(&dataset);
        return Err(e);
    }
    Ok(RunOutput {
        dataset,
        manifest: manifest_file,
        rows: rows.len(),
    })
}

/// Sizes the global worker pool; call before any parallel work.
pub fn init_threads(threads: usize) -> Result<()> {
    if threads == 0 {
        return Err(MieError::Config("--threads must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| MieError::Config(format!("thread pool: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareOptions {
    /// Extra absolute tolerance in `|diff| <= 2 stderr + allowance`.
    pub allowance: f64,
    /// Upper end of the small cross-ratio tail used for slope fits.
    pub tail_zeta_max: f64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            allowance: 0.0,
            tail_zeta_max: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparedPoint {
    pub zeta: f64,
    pub renyi_n: f64,
    pub source: Source,
    pub numeric: f64,
    pub theory: f64,
    pub stderr: f64,
    pub diff: f64,
    /// `diff / stderr`; 0 for exact agreement, absent for a nonzero
    /// difference at zero stderr.
    pub z: Option<f64>,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSlope {
    pub dataset: String,
    pub source: Source,
    pub renyi_n: f64,
    pub slope: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub points: Vec<ComparedPoint>,
    pub max_abs_z: Option<f64>,
    /// Fraction of points with `|diff| <= 2 stderr + allowance`.
    pub fraction_within: f64,
    pub options: CompareOptions,
    pub tail_slopes: Vec<TailSlope>,
}

/// Theory source a numeric row is compared against.
fn reference_source(s: Source) -> Source {
    match s {
        Source::ForcedNumeric | Source::TheoryForced => Source::TheoryForced,
        _ => Source::Theory,
    }
}

type CurveKey = (Source, u64);

fn curves(rows: &[ResultRow]) -> BTreeMap<CurveKey, Vec<(f64, f64)>> {
    let mut map: BTreeMap<CurveKey, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        map.entry((r.source, r.renyi_n.to_bits()))
            .or_default()
            .push((r.zeta, r.value));
    }
    for pts in map.values_mut() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    map
}

/// Linear interpolation in `ln zeta`; `None` outside the curve.
fn interpolate(curve: &[(f64, f64)], zeta: f64) -> Option<f64> {
    let first = curve.first()?;
    let last = curve.last()?;
    if zeta < first.0 || zeta > last.0 {
        return None;
    }
    let i = curve.partition_point(|p| p.0 < zeta);
    if curve[i].0 == zeta {
        return Some(curve[i].1);
    }
    let (a, b) = (curve[i - 1], curve[i]);
    let t = (zeta.ln() - a.0.ln()) / (b.0.ln() - a.0.ln());
    Some(a.1 + t * (b.1 - a.1))
}

fn tail_slopes(name: &str, rows: &[ResultRow], zeta_max: f64) -> Vec<TailSlope> {
    curves(rows)
        .into_iter()
        .filter_map(|((source, bits), pts)| {
            // slack so a log-spaced grid ending at zeta_max keeps its endpoint
            let cut = zeta_max * (1.0 + 1e-12);
            let tail: Vec<(f64, f64)> = pts.into_iter().filter(|p| p.0 <= cut && p.1 > 0.0).collect();
            if tail.len() < 3 {
                return None;
            }
            let (x, y): (Vec<f64>, Vec<f64>) = tail.iter().copied().unzip();
            loglog_fit(&x, &y).map(|f| TailSlope {
                dataset: name.to_string(),
                source,
                renyi_n: f64::from_bits(bits),
                slope: f.slope,
                points: tail.len(),
            })
        })
        .collect()
}

pub fn compare_rows(theory: &[ResultRow], numeric: &[ResultRow], options: CompareOptions) -> Result<CompareReport> {
    let reference = curves(theory);
    let mut points = Vec::new();
    for r in numeric {
        let key = (reference_source(r.source), r.renyi_n.to_bits());
        let Some(th) = reference.get(&key).and_then(|c| interpolate(c, r.zeta)) else {
            continue;
        };
        let diff = r.value - th;
        let z = if diff == 0.0 {
            Some(0.0)
        } else if r.stderr > 0.0 {
            Some(diff / r.stderr)
        } else {
            None
        };
        points.push(ComparedPoint {
            zeta: r.zeta,
            renyi_n: r.renyi_n,
            source: r.source,
            numeric: r.value,
            theory: th,
            stderr: r.stderr,
            diff,
            z,
            within: diff.abs() <= 2.0 * r.stderr + options.allowance,
        });
    }
    if points.is_empty() {
        return Err(MieError::NoOverlap);
    }
    let max_abs_z = if points.iter().all(|p| p.z.is_some()) {
        points.iter().filter_map(|p| p.z).map(f64::abs).reduce(f64::max)
    } else {
        None
    };
    let fraction_within = points.iter().filter(|p| p.within).count() as f64 / points.len() as f64;
    let mut slopes = tail_slopes("theory", theory, options.tail_zeta_max);
    slopes.extend(tail_slopes("numeric", numeric, options.tail_zeta_max));
    Ok(CompareReport {
        points,
        max_abs_z,
        fraction_within,
        options,
        tail_slopes: slopes,
    })
}

pub fn compare(theory: &Path, numeric: &Path, options: CompareOptions) -> Result<CompareReport> {
    compare_rows(&read_rows(theory)?, &read_rows(numeric)?, options)
}

impl CompareReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Sweep table: one line per layout with its lengths and cross-ratio.
pub fn write_sweep<W: Write>(out: W, points: &[SweepPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["measured", "len_a", "len_b", "zeta", "x1", "x2", "x3", "x4"])?;
    for p in points {
        let x = p.geometry.endpoints();
        w.write_record([
            p.measured.to_string(),
            p.layout.a.len.to_string(),
            p.layout.b.len.to_string(),
            p.zeta.to_string(),
            x[0].to_string(),
            x[1].to_string(),
            x[2].to_string(),
            x[3].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
