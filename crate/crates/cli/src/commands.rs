//! Pipeline commands. Each reads its inputs, runs the core operations and
//! writes its artifacts into an output directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use filament::metrics::hausdorff_points;
use filament::posterior::{fit, select_j, FittedPosterior, ModelScore};
use filament::ridge::{scms, Filament, PointStatus};
use filament::synth::{generate, paper_surface, reference_filament};
use filament::uncertainty::{
    band_acceptance, estimate_c_over_eta, estimate_r_quantiles, CredibleSpec,
};
use filament::{Point, ScalarField};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::ingest::{ingest_csv, Transform};

pub const DATA_FILE: &str = "data.csv";
pub const POSTERIOR_FILE: &str = "posterior.json";
pub const SELECTION_FILE: &str = "selection.json";
pub const FILAMENT_FILE: &str = "filament.csv";
pub const MANIFEST_FILE: &str = "credible_manifest.json";
pub const CREDIBLE_FILAMENTS_FILE: &str = "credible_filaments.csv";
pub const HAUSDORFF_FILE: &str = "hausdorff.json";
pub const SUMMARY_FILE: &str = "summary.json";
/// Wall-clock timings live apart from the summary so that every other
/// artifact is reproducible byte for byte.
pub const TIMINGS_FILE: &str = "timings.json";

/// Independent random streams derived from the run seed.
fn stream_seed(seed: u64, stream: u64) -> u64 {
    seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

const QUANTILE_STREAM: u64 = 1;
const SCREEN_STREAM: u64 = 2;

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| CliError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn csv_write(w: &mut csv::Writer<std::fs::File>, path: &Path, rec: &[String]) -> Result<()> {
    w.write_record(rec).map_err(|e| CliError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn csv_finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Shortest round-trip decimal form.
fn num(v: f64) -> String {
    format!("{v}")
}

/// Summary entry of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub config: RunConfig,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub details: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub package: String,
    pub version: String,
    pub runs: BTreeMap<String, RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Timings {
    pub seconds: BTreeMap<String, f64>,
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

/// Inputs are recorded by file name so that reruns in another directory
/// produce identical summaries.
fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| display(p), |n| n.to_string_lossy().into_owned())
}

/// Merges this command's record into `summary.json` and its wall time into
/// `timings.json`.
fn record_run(
    out_dir: &Path,
    command: &str,
    cfg: &RunConfig,
    inputs: &[&Path],
    outputs: &[&str],
    details: serde_json::Value,
    started: Instant,
) -> Result<()> {
    let summary_path = out_dir.join(SUMMARY_FILE);
    let mut summary = if summary_path.exists() {
        read_json::<Summary>(&summary_path)?
    } else {
        Summary {
            package: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            runs: BTreeMap::new(),
        }
    };
    summary.runs.insert(
        command.to_string(),
        RunRecord {
            seed: cfg.seed,
            config: cfg.clone(),
            inputs: inputs.iter().map(|p| file_name(p)).collect(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
            details,
        },
    );
    write_json(&summary_path, &summary)?;

    let timings_path = out_dir.join(TIMINGS_FILE);
    let mut timings = if timings_path.exists() {
        read_json::<Timings>(&timings_path)?
    } else {
        Timings::default()
    };
    timings.seconds.insert(command.to_string(), started.elapsed().as_secs_f64());
    write_json(&timings_path, &timings)
}

/// Writes `n` noisy samples of the ring surface to `data.csv`.
pub fn cmd_simulate(cfg: &RunConfig, out_dir: &Path) -> Result<PathBuf> {
    let started = Instant::now();
    ensure_dir(out_dir)?;
    let (xs, ys) = generate(&paper_surface(), cfg.simulate.n, cfg.simulate.noise_sd, cfg.seed)?;
    let path = out_dir.join(DATA_FILE);
    let mut w = csv_writer(&path)?;
    csv_write(&mut w, &path, &["x1".into(), "x2".into(), "y".into()])?;
    for (x, y) in xs.iter().zip(&ys) {
        csv_write(&mut w, &path, &[num(x[0]), num(x[1]), num(*y)])?;
    }
    csv_finish(w, &path)?;
    let details = serde_json::json!({ "rows": xs.len() });
    record_run(out_dir, "simulate", cfg, &[], &[DATA_FILE], details, started)?;
    Ok(path)
}

/// Fitted posterior together with the coordinate transform of its data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorFile {
    pub transform: Option<Transform>,
    pub score: ModelScore,
    pub posterior: FittedPosterior,
}

impl PosteriorFile {
    pub fn transform(&self) -> Transform {
        self.transform.unwrap_or_else(Transform::identity)
    }
}

pub fn fit_data(cfg: &RunConfig, data: &Path) -> Result<PosteriorFile> {
    let d = ingest_csv(data, &cfg.data)?;
    let spec = cfg.basis_spec()?;
    let post = fit(&spec, &cfg.prior_for(&spec)?, &d.xs, &d.ys)?;
    Ok(PosteriorFile {
        transform: d.transform,
        score: post.score(),
        posterior: post,
    })
}

/// Fits the configured basis to `data` and writes `posterior.json`.
pub fn cmd_fit(cfg: &RunConfig, data: &Path, out_dir: &Path) -> Result<PosteriorFile> {
    let started = Instant::now();
    ensure_dir(out_dir)?;
    let pf = fit_data(cfg, data)?;
    write_json(&out_dir.join(POSTERIOR_FILE), &pf)?;
    let details = serde_json::json!({
        "n": pf.posterior.n,
        "sigma2_hat": pf.posterior.sigma2_hat,
        "score": pf.score.value,
    });
    record_run(out_dir, "fit", cfg, &[data], &[POSTERIOR_FILE], details, started)?;
    Ok(pf)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub num_basis: [usize; 2],
    /// `None` when the fit interpolates the data exactly.
    pub score: Option<f64>,
    pub sigma2_hat: f64,
    pub log_det: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionFile {
    pub order: [usize; 2],
    pub best: [usize; 2],
    pub candidates: Vec<CandidateScore>,
}

/// Scores every candidate basis size on `data` and writes `selection.json`.
pub fn cmd_select(cfg: &RunConfig, data: &Path, out_dir: &Path) -> Result<SelectionFile> {
    let started = Instant::now();
    ensure_dir(out_dir)?;
    let d = ingest_csv(data, &cfg.data)?;
    let cands: Vec<(usize, usize)> = cfg.select.candidates.iter().map(|c| (c[0], c[1])).collect();
    let orders = (cfg.basis.order[0], cfg.basis.order[1]);
    let prior = |s: &filament::BasisSpec| cfg.prior_for(s).expect("prior validated with the configuration");
    let sel = select_j(&cands, orders, prior, &d.xs, &d.ys)?;
    let file = SelectionFile {
        order: cfg.basis.order,
        best: [sel.best.0, sel.best.1],
        candidates: sel
            .scores
            .iter()
            .map(|((j1, j2), s)| CandidateScore {
                num_basis: [*j1, *j2],
                score: (!s.is_degenerate()).then_some(s.value),
                sigma2_hat: s.sigma2_hat,
                log_det: s.log_det,
            })
            .collect(),
    };
    write_json(&out_dir.join(SELECTION_FILE), &file)?;
    let details = serde_json::json!({ "best": file.best });
    record_run(out_dir, "select", cfg, &[data], &[SELECTION_FILE], details, started)?;
    Ok(file)
}

/// Surface whose filament `cmd_scms` extracts.
#[derive(Debug, Clone, PartialEq)]
pub enum ScmsSource {
    /// Posterior mean from a `posterior.json`.
    Posterior(PathBuf),
    /// Posterior mean of a fresh fit to a data file.
    Data(PathBuf),
    /// The noiseless ring surface.
    Reference,
}

fn write_filament(path: &Path, fil: &Filament, t: &Transform) -> Result<()> {
    let mut w = csv_writer(path)?;
    csv_write(&mut w, path, &["x1".into(), "x2".into(), "lambda".into(), "status".into()])?;
    for r in &fil.records {
        let p = t.inverse(r.point);
        csv_write(&mut w, path, &[num(p[0]), num(p[1]), num(r.lambda), r.status.as_str().into()])?;
    }
    csv_finish(w, path)
}

fn status_counts(fil: &Filament) -> serde_json::Value {
    let all = [
        PointStatus::Converged,
        PointStatus::RejectedLambda,
        PointStatus::MaxIter,
        PointStatus::DiscardedTau,
        PointStatus::Diverged,
    ];
    let m: BTreeMap<&str, usize> = all.iter().map(|s| (s.as_str(), fil.count(*s))).collect();
    serde_json::to_value(m).expect("counts serialize")
}

/// Runs mean shift from the configured seed grid and writes `filament.csv`
/// with one row per seed, in the data's original coordinates.
pub fn cmd_scms(cfg: &RunConfig, source: &ScmsSource, out_dir: &Path) -> Result<Filament> {
    let started = Instant::now();
    ensure_dir(out_dir)?;
    let scms_cfg = cfg.scms_config();
    let (fil, t, inputs): (Filament, Transform, Vec<&Path>) = match source {
        ScmsSource::Posterior(p) => {
            let pf: PosteriorFile = read_json(p)?;
            (scms(&pf.posterior.mean_field(), &scms_cfg), pf.transform(), vec![p.as_path()])
        }
        ScmsSource::Data(p) => {
            let pf = fit_data(cfg, p)?;
            (scms(&pf.posterior.mean_field(), &scms_cfg), pf.transform(), vec![p.as_path()])
        }
        ScmsSource::Reference => (reference_filament(&paper_surface(), &scms_cfg), Transform::identity(), vec![]),
    };
    write_filament(&out_dir.join(FILAMENT_FILE), &fil, &t)?;
    record_run(out_dir, "scms", cfg, &inputs, &[FILAMENT_FILE], status_counts(&fil), started)?;
    Ok(fil)
}

/// Band screening and Hausdorff check of one posterior draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawRecord {
    pub index: usize,
    pub sups: [f64; 3],
    pub in_band: bool,
    /// Hausdorff distance to the posterior-mean filament (unit square), for
    /// accepted draws whose filament is nonempty.
    pub hausdorff: Option<f64>,
    pub in_ball: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredibleManifest {
    pub gamma: f64,
    pub rho: f64,
    pub quantile_samples: usize,
    pub samples: usize,
    pub grid_n: usize,
    pub r_quantiles: [f64; 3],
    pub acceptance_fraction: Option<f64>,
    pub c_over_eta: f64,
    /// `"fixed"` or `"estimated"`.
    pub c_over_eta_source: String,
    pub radius: f64,
    pub mean_filament_points: usize,
    /// Fraction of accepted draws whose filament lies in the Hausdorff ball.
    pub ball_fraction: Option<f64>,
    pub draws: Vec<DrawRecord>,
}

/// Builds both credible sets from a posterior: estimates the sup-norm
/// quantiles, screens fresh draws against the bands, extracts the filament
/// of every accepted draw and measures its distance to the posterior-mean
/// filament.
pub fn cmd_credible(cfg: &RunConfig, posterior: &Path, out_dir: &Path) -> Result<CredibleManifest> {
    let started = Instant::now();
    ensure_dir(out_dir)?;
    let pf: PosteriorFile = read_json(posterior)?;
    let post = &pf.posterior;
    let c = &cfg.credible;
    let scms_cfg = cfg.scms_config();

    let q = estimate_r_quantiles(post, c.quantile_samples, c.gamma, c.grid_n, stream_seed(cfg.seed, QUANTILE_STREAM))?;
    let mean_fil = scms(&post.mean_field(), &scms_cfg);
    let (c_over_eta, source) = match c.c_over_eta {
        Some(v) => (v, "fixed"),
        None => (estimate_c_over_eta(&post.mean_field(), &mean_fil)?, "estimated"),
    };
    let spec = CredibleSpec::new(c.gamma, c.rho, q.values, c_over_eta)?;
    let screen_seed = stream_seed(cfg.seed, SCREEN_STREAM);
    let screen = band_acceptance(post, &spec, c.samples, c.grid_n, screen_seed)?;
    let draws = post.sample_theta(post.sigma2_hat, screen_seed, c.samples);
    let mean_pts = mean_fil.ridge_points();

    let t = pf.transform();
    let fil_path = out_dir.join(CREDIBLE_FILAMENTS_FILE);
    let mut w = csv_writer(&fil_path)?;
    csv_write(&mut w, &fil_path, &["draw".into(), "x1".into(), "x2".into(), "lambda".into()])?;
    let mut records = Vec::with_capacity(draws.len());
    for (i, (theta, check)) in draws.into_iter().zip(&screen.checks).enumerate() {
        let mut rec = DrawRecord {
            index: i,
            sups: check.sups,
            in_band: check.inside,
            hausdorff: None,
            in_ball: None,
        };
        if check.inside {
            let fil = scms(&ScalarField::new(post.spec.clone(), theta)?, &scms_cfg);
            for r in fil.converged() {
                let p = t.inverse(r.point);
                csv_write(&mut w, &fil_path, &[i.to_string(), num(p[0]), num(p[1]), num(r.lambda)])?;
            }
            let pts = fil.ridge_points();
            if !pts.is_empty() && !mean_pts.is_empty() {
                let h = hausdorff_points(&pts, &mean_pts)?;
                rec.hausdorff = Some(h);
                rec.in_ball = Some(h <= spec.radius());
            }
        }
        records.push(rec);
    }
    csv_finish(w, &fil_path)?;

    let judged: Vec<bool> = records.iter().filter_map(|r| r.in_ball).collect();
    let ball_fraction =
        (!judged.is_empty()).then(|| judged.iter().filter(|b| **b).count() as f64 / judged.len() as f64);
    let manifest = CredibleManifest {
        gamma: c.gamma,
        rho: c.rho,
        quantile_samples: c.quantile_samples,
        samples: c.samples,
        grid_n: c.grid_n,
        r_quantiles: q.values,
        acceptance_fraction: screen.acceptance_fraction,
        c_over_eta,
        c_over_eta_source: source.to_string(),
        radius: spec.radius(),
        mean_filament_points: mean_pts.len(),
        ball_fraction,
        draws: records,
    };
    write_json(&out_dir.join(MANIFEST_FILE), &manifest)?;
    let details = serde_json::json!({
        "acceptance_fraction": manifest.acceptance_fraction,
        "radius": manifest.radius,
    });
    record_run(
        out_dir,
        "credible",
        cfg,
        &[posterior],
        &[MANIFEST_FILE, CREDIBLE_FILAMENTS_FILE],
        details,
        started,
    )?;
    Ok(manifest)
}

/// Reads the `x1, x2` columns of a point file. Rows carrying a `status`
/// column other than `converged` are skipped.
pub fn read_points(path: &Path) -> Result<Vec<Point>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .clone();
    let find = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| CliError::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        })
    };
    let (i1, i2) = (find("x1")?, find("x2")?);
    let status = headers.iter().position(|h| h.trim() == "status");
    let mut pts = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if let Some(s) = status {
            if rec.get(s).map(str::trim) != Some(PointStatus::Converged.as_str()) {
                continue;
            }
        }
        let mut p = [0.0; 2];
        for (k, (idx, name)) in [(i1, "x1"), (i2, "x2")].into_iter().enumerate() {
            let cell = rec.get(idx).unwrap_or("").trim();
            p[k] = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| CliError::Parse {
                path: path.to_path_buf(),
                row: row + 2,
                column: name.to_string(),
                value: cell.to_string(),
            })?;
        }
        pts.push(p);
    }
    Ok(pts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HausdorffFile {
    pub a: String,
    pub b: String,
    pub points_a: usize,
    pub points_b: usize,
    pub hausdorff: f64,
}

/// Hausdorff distance between the ridge points of two filament files.
pub fn cmd_hausdorff(cfg: &RunConfig, a: &Path, b: &Path, out_dir: &Path) -> Result<HausdorffFile> {
    let started = Instant::now();
    ensure_dir(out_dir)?;
    let (pa, pb) = (read_points(a)?, read_points(b)?);
    let h = hausdorff_points(&pa, &pb)?;
    let file = HausdorffFile {
        a: display(a),
        b: display(b),
        points_a: pa.len(),
        points_b: pb.len(),
        hausdorff: h,
    };
    write_json(&out_dir.join(HAUSDORFF_FILE), &file)?;
    let details = serde_json::json!({ "hausdorff": h });
    record_run(out_dir, "hausdorff", cfg, &[a, b], &[HAUSDORFF_FILE], details, started)?;
    Ok(file)
}
