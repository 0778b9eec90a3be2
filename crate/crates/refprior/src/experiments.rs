//! Experiment runners behind the CLI commands.
//!
//! Each runner resolves its config, persists the effective config next to the
//! outputs, runs the computation, and writes CSV/JSON artifacts. Every file
//! except `timing.json` is a deterministic function of (config, seed), so a
//! rerun reproduces the directory byte for byte; wall-clock measurements are
//! quarantined in `timing.json`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::baselines::{berger_grid_sampler, lw_mcmc, uniform_sampler};
use crate::batch::SampleBatch;
use crate::config::{
    BaselineBergerConfig, BaselineMcmcConfig, EvalKsConfig, RecoverJeffreysConfig,
    StabilityConfig, TrainInfoConfig, TrainSvgdConfig,
};
use crate::csvio::fmt_f64;
use crate::error::{Error, Result};
use crate::eval::{ksd_curve, true_rp_sampler, write_curve_csv, CurveRow};
use crate::grid::DiscreteGridDistribution;
use crate::infobound::train_info_bound;
use crate::models::{LikelihoodModel, ModelSpec};
use crate::priors::{
    Activation, OutputMap, Prior, PriorBody, PriorDoc, SamplerArch,
};
use crate::rng::stream;
use crate::svgd::train_svgd;
use crate::trace::TrainTrace;

/// Stream ids used by the runners, clear of the ids the training loops and
/// baselines claim internally (1-5 and the grid estimator's 10000+).
const STREAM_EVAL_DRAW: u64 = 6;
const STREAM_CURVE_TRUTH: u64 = 7;
const STREAM_UNIFORM: u64 = 8;

/// Per-method master-seed offsets inside the recovery experiment, so the
/// methods run on unrelated random streams.
const METHOD_STRIDE: u64 = 8;
const OFFSET_PARAMETRIC: u64 = 0;
const OFFSET_IMPLICIT: u64 = 1;
const OFFSET_PARTICLE: u64 = 2;
const OFFSET_BERGER: u64 = 3;
const OFFSET_MCMC: u64 = 4;
const OFFSET_UNIFORM: u64 = 5;
const OFFSET_TRUTH: u64 = 6;

fn method_seed(seed: u64, offset: u64) -> u64 {
    seed.wrapping_mul(METHOD_STRIDE).wrapping_add(offset)
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn write_samples(path: &Path, batch: &SampleBatch) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    batch.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_trace(path: &Path, trace: &TrainTrace) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    trace.write_csv_deterministic(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_grid(path: &Path, dist: &DiscreteGridDistribution) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    dist.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Wall-clock phases of a run; always written last, and the only file whose
/// content may differ between identical reruns.
#[derive(Debug, Default, Serialize)]
struct Timing {
    total_ms: f64,
    phases: BTreeMap<String, f64>,
}

impl Timing {
    fn phase<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f()?;
        let ms = start.elapsed().as_secs_f64() * 1e3;
        *self.phases.entry(name.to_string()).or_insert(0.0) += ms;
        Ok(out)
    }
}

fn method_name(body: &PriorBody) -> &'static str {
    match body {
        PriorBody::Parametric { .. } => "parametric",
        PriorBody::Implicit { .. } => "implicit",
    }
}

pub fn run_train_info(cfg: &TrainInfoConfig, out: &Path) -> Result<()> {
    let model = cfg.validate()?;
    ensure_dir(out)?;
    write_json(&out.join("config.json"), cfg)?;
    let start = Instant::now();
    let mut timing = Timing::default();
    let initial = Prior::build(&cfg.prior, cfg.seed)?;
    let (prior, trace) =
        timing.phase("train", || train_info_bound(&model, initial, &cfg.train, cfg.seed))?;
    PriorDoc::from_prior(&prior, vec![cfg.seed]).save(&out.join("prior.json"))?;
    write_trace(&out.join("trace.csv"), &trace)?;
    let mut rng = stream(cfg.seed, STREAM_EVAL_DRAW);
    let (_, samples) =
        prior.sample_batch(cfg.eval_samples, &mut rng, method_name(&cfg.prior), cfg.seed)?;
    write_samples(&out.join("samples.csv"), &samples)?;
    timing.total_ms = start.elapsed().as_secs_f64() * 1e3;
    write_json(&out.join("timing.json"), &timing)
}

pub fn run_train_svgd(cfg: &TrainSvgdConfig, out: &Path) -> Result<()> {
    let model = cfg.validate()?;
    ensure_dir(out)?;
    write_json(&out.join("config.json"), cfg)?;
    let start = Instant::now();
    let mut timing = Timing::default();
    let initial = Prior::build(&cfg.prior, cfg.seed)?;
    let (prior, trace) =
        timing.phase("train", || train_svgd(&model, initial, &cfg.svgd, cfg.seed))?;
    PriorDoc::from_prior(&prior, vec![cfg.seed]).save(&out.join("prior.json"))?;
    write_trace(&out.join("trace.csv"), &trace)?;
    let mut rng = stream(cfg.seed, STREAM_EVAL_DRAW);
    let (_, samples) = prior.sample_batch(cfg.eval_samples, &mut rng, "particle", cfg.seed)?;
    write_samples(&out.join("samples.csv"), &samples)?;
    timing.total_ms = start.elapsed().as_secs_f64() * 1e3;
    write_json(&out.join("timing.json"), &timing)
}

pub fn run_baseline_berger(cfg: &mut BaselineBergerConfig, out: &Path) -> Result<()> {
    let model = cfg.resolve()?;
    ensure_dir(out)?;
    write_json(&out.join("config.json"), cfg)?;
    let start = Instant::now();
    let mut timing = Timing::default();
    let berger = cfg.berger.as_ref().expect("resolved");
    let dist = timing.phase("grid", || berger_grid_sampler(&model, berger, cfg.seed))?;
    write_grid(&out.join("grid.csv"), &dist)?;
    let mut rng = stream(cfg.seed, STREAM_EVAL_DRAW);
    let samples = dist.sample(cfg.eval_samples, &mut rng, "berger", cfg.seed)?;
    write_samples(&out.join("samples.csv"), &samples)?;
    timing.total_ms = start.elapsed().as_secs_f64() * 1e3;
    write_json(&out.join("timing.json"), &timing)
}

pub fn run_baseline_mcmc(cfg: &mut BaselineMcmcConfig, out: &Path) -> Result<()> {
    let model = cfg.resolve()?;
    ensure_dir(out)?;
    write_json(&out.join("config.json"), cfg)?;
    let start = Instant::now();
    let mut timing = Timing::default();
    let mcmc = cfg.mcmc.as_ref().expect("resolved");
    let result = timing.phase("chain", || lw_mcmc(&model, mcmc, cfg.seed))?;
    write_samples(&out.join("samples.csv"), &result.samples)?;
    let mut w = BufWriter::new(File::create(out.join("w.csv"))?);
    writeln!(w, "x,w")?;
    for (x, v) in result.x_points.iter().zip(&result.final_w) {
        writeln!(w, "{},{}", fmt_f64(*x), fmt_f64(*v))?;
    }
    w.flush()?;
    timing.total_ms = start.elapsed().as_secs_f64() * 1e3;
    write_json(&out.join("timing.json"), &timing)
}

#[derive(Debug, Clone, Serialize)]
struct MethodKs {
    method: String,
    n: usize,
    ksd: f64,
    threshold: f64,
    reject: bool,
}

fn final_ks_rows(rows: &[CurveRow]) -> Vec<MethodKs> {
    let max = rows.iter().map(|r| r.n).max().unwrap_or(0);
    rows.iter()
        .filter(|r| r.n == max)
        .map(|r| MethodKs {
            method: r.method.clone(),
            n: r.n,
            ksd: r.ksd,
            threshold: r.threshold,
            reject: r.ksd > r.threshold,
        })
        .collect()
}

pub fn run_eval_ks(cfg: &mut EvalKsConfig, out: &Path) -> Result<()> {
    let model = cfg.resolve()?;
    ensure_dir(out)?;
    write_json(&out.join("config.json"), cfg)?;
    let start = Instant::now();
    let mut timing = Timing::default();
    let mut batches = Vec::with_capacity(cfg.inputs.len());
    for input in &cfg.inputs {
        batches.push(SampleBatch::read_csv(Path::new(&input.path), &input.name)?);
    }
    let bounds = cfg.bounds.expect("resolved");
    let truth = true_rp_sampler(&model, bounds, cfg.truth_grid)?;
    let refs: Vec<&SampleBatch> = batches.iter().collect();
    let mut rng = stream(cfg.seed, STREAM_CURVE_TRUTH);
    let rows = timing
        .phase("curve", || ksd_curve(&refs, &truth, &cfg.sizes, cfg.alpha, &mut rng))?;
    write_curve_csv(&rows, &out.join("ks_curve.csv"))?;
    #[derive(Serialize)]
    struct EvalSummary {
        model: ModelSpec,
        bounds: (f64, f64),
        alpha: f64,
        final_ks: Vec<MethodKs>,
    }
    let summary = EvalSummary {
        model: cfg.model.clone(),
        bounds,
        alpha: cfg.alpha,
        final_ks: final_ks_rows(&rows),
    };
    write_json(&out.join("summary.json"), &summary)?;
    timing.total_ms = start.elapsed().as_secs_f64() * 1e3;
    write_json(&out.join("timing.json"), &timing)
}

#[derive(Debug, Serialize)]
struct SeedSummary {
    seed: u64,
    final_ks: Vec<MethodKs>,
}

#[derive(Debug, Serialize)]
struct JeffreysSummary {
    model: ModelSpec,
    bounds: (f64, f64),
    alpha: f64,
    sizes: Vec<usize>,
    seeds: Vec<u64>,
    per_seed: Vec<SeedSummary>,
    /// Per method: seeds whose largest-size KS sits at or below threshold.
    accept_counts: BTreeMap<String, usize>,
}

pub fn run_recover_jeffreys(cfg: &mut RecoverJeffreysConfig, out: &Path) -> Result<()> {
    let model = cfg.resolve()?;
    ensure_dir(out)?;
    write_json(&out.join("config.json"), cfg)?;
    let start = Instant::now();
    let mut timing = Timing::default();
    let bounds = cfg.bounds.expect("resolved");
    let truth = true_rp_sampler(&model, bounds, cfg.truth_grid)?;
    let parametric = cfg.parametric.clone().expect("resolved");
    let implicit = cfg.implicit.clone().expect("resolved");
    let particle = cfg.particle.clone().expect("resolved");
    let berger = cfg.berger.clone().expect("resolved");
    let mcmc = cfg.mcmc.clone().expect("resolved");

    let mut per_seed = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let dir = out.join(format!("seed_{}", seed));
        ensure_dir(&dir)?;
        let phase = |name: &str| format!("seed_{}/{}", seed, name);
        let mut batches: Vec<SampleBatch> = Vec::with_capacity(6);

        for (label, method_cfg, offset) in [
            ("parametric", &parametric, OFFSET_PARAMETRIC),
            ("implicit", &implicit, OFFSET_IMPLICIT),
        ] {
            let master = method_seed(seed, offset);
            let initial = Prior::build(&method_cfg.prior, master)?;
            let (prior, trace) = timing.phase(&phase(label), || {
                train_info_bound(&model, initial, &method_cfg.train, master)
            })?;
            PriorDoc::from_prior(&prior, vec![master])
                .save(&dir.join(format!("lambda_{}.json", label)))?;
            write_trace(&dir.join(format!("trace_{}.csv", label)), &trace)?;
            let mut rng = stream(master, STREAM_EVAL_DRAW);
            let (_, samples) = prior.sample_batch(cfg.eval_samples, &mut rng, label, master)?;
            write_samples(&dir.join(format!("samples_{}.csv", label)), &samples)?;
            batches.push(samples);
        }

        {
            let master = method_seed(seed, OFFSET_PARTICLE);
            let initial = Prior::build(&particle.prior, master)?;
            let (prior, trace) = timing.phase(&phase("particle"), || {
                train_svgd(&model, initial, &particle.svgd, master)
            })?;
            PriorDoc::from_prior(&prior, vec![master]).save(&dir.join("lambda_particle.json"))?;
            write_trace(&dir.join("trace_particle.csv"), &trace)?;
            let mut rng = stream(master, STREAM_EVAL_DRAW);
            let (_, samples) =
                prior.sample_batch(cfg.eval_samples, &mut rng, "particle", master)?;
            write_samples(&dir.join("samples_particle.csv"), &samples)?;
            batches.push(samples);
        }

        {
            let master = method_seed(seed, OFFSET_BERGER);
            let dist =
                timing.phase(&phase("berger"), || berger_grid_sampler(&model, &berger, master))?;
            write_grid(&dir.join("berger_grid.csv"), &dist)?;
            let mut rng = stream(master, STREAM_EVAL_DRAW);
            let samples = dist.sample(cfg.eval_samples, &mut rng, "berger", master)?;
            write_samples(&dir.join("samples_berger.csv"), &samples)?;
            batches.push(samples);
        }

        {
            let master = method_seed(seed, OFFSET_MCMC);
            let result = timing.phase(&phase("mcmc"), || lw_mcmc(&model, &mcmc, master))?;
            if result.samples.rows() < cfg.eval_samples {
                return Err(Error::Config(format!(
                    "mcmc keeps {} samples but the curve needs {}; raise mcmc.keep",
                    result.samples.rows(),
                    cfg.eval_samples
                )));
            }
            write_samples(&dir.join("samples_mcmc.csv"), &result.samples)?;
            batches.push(result.samples);
        }

        {
            let master = method_seed(seed, OFFSET_UNIFORM);
            let mut rng = stream(master, STREAM_UNIFORM);
            let samples =
                uniform_sampler(&[bounds], cfg.eval_samples, &mut rng, "uniform", master)?;
            write_samples(&dir.join("samples_uniform.csv"), &samples)?;
            batches.push(samples);
        }

        let refs: Vec<&SampleBatch> = batches.iter().collect();
        let mut rng = stream(method_seed(seed, OFFSET_TRUTH), STREAM_CURVE_TRUTH);
        let rows = timing.phase(&phase("eval"), || {
            ksd_curve(&refs, &truth, &cfg.sizes, cfg.alpha, &mut rng)
        })?;
        write_curve_csv(&rows, &dir.join("ksd_curve.csv"))?;
        let final_ks = final_ks_rows(&rows);
        write_json(&dir.join("summary.json"), &final_ks)?;
        per_seed.push(SeedSummary { seed, final_ks });
    }

    let mut accept_counts: BTreeMap<String, usize> = BTreeMap::new();
    for seed_summary in &per_seed {
        for mk in &seed_summary.final_ks {
            let entry = accept_counts.entry(mk.method.clone()).or_insert(0);
            if !mk.reject {
                *entry += 1;
            }
        }
    }
    let summary = JeffreysSummary {
        model: cfg.model.clone(),
        bounds,
        alpha: cfg.alpha,
        sizes: cfg.sizes.clone(),
        seeds: cfg.seeds.clone(),
        per_seed,
        accept_counts,
    };
    write_json(&out.join("summary.json"), &summary)?;
    timing.total_ms = start.elapsed().as_secs_f64() * 1e3;
    write_json(&out.join("timing.json"), &timing)
}

fn population_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_unstable_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

#[derive(Debug, Clone, Serialize)]
struct CellRow {
    sweep: String,
    dims: usize,
    s: usize,
    seed: u64,
    std_last: f64,
}

#[derive(Debug, Clone, Serialize)]
struct CellMedian {
    sweep: String,
    dims: usize,
    s: usize,
    median_std: f64,
}

#[derive(Debug, Serialize)]
struct StabilitySummary {
    window: usize,
    cells: Vec<CellMedian>,
    /// Median objective std strictly decreases along the dims sweep.
    dims_std_decreasing: bool,
    /// Median objective std at the largest sample count exceeds the smallest.
    s_std_increasing: bool,
}

pub fn run_stability(cfg: &StabilityConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    ensure_dir(out)?;
    write_json(&out.join("config.json"), cfg)?;
    let traces_dir = out.join("traces");
    ensure_dir(&traces_dir)?;
    let start = Instant::now();
    let mut timing = Timing::default();

    let sweep_a = cfg.s_sweep.len();
    let cells = cfg.cells();
    let mut rows: Vec<CellRow> = Vec::with_capacity(cells.len() * cfg.seeds.len());
    let mut medians: Vec<CellMedian> = Vec::with_capacity(cells.len());
    for (idx, &(dims, s)) in cells.iter().enumerate() {
        let sweep = if idx < sweep_a { "samples" } else { "dims" };
        let model = LikelihoodModel::gaussian_scale(cfg.mu, dims)?;
        let body = PriorBody::Implicit {
            arch: SamplerArch {
                latent_dim: cfg.latent_dim,
                hidden: vec![],
                activation: Activation::Identity,
                output_map: OutputMap::Exp,
            },
            out_dim: dims,
        };
        let mut cell_train = cfg.train.clone();
        cell_train.s = s;
        let mut stds = Vec::with_capacity(cfg.seeds.len());
        for &seed in &cfg.seeds {
            let master = seed.wrapping_mul(1000).wrapping_add(idx as u64);
            let initial = Prior::build(&body, master)?;
            let label = format!("dims{}_s{}_seed{}", dims, s, seed);
            let (_, trace) = timing.phase(&label, || {
                train_info_bound(&model, initial, &cell_train, master)
            })?;
            write_trace(&traces_dir.join(format!("trace_{}.csv", label)), &trace)?;
            let objectives = trace.objectives();
            let tail = &objectives[objectives.len() - cfg.window..];
            let std_last = population_std(tail);
            stds.push(std_last);
            rows.push(CellRow { sweep: sweep.to_string(), dims, s, seed, std_last });
        }
        medians.push(CellMedian { sweep: sweep.to_string(), dims, s, median_std: median(stds) });
    }

    let mut csv = String::from("sweep,dims,s,seed,std_last\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.sweep,
            r.dims,
            r.s,
            r.seed,
            fmt_f64(r.std_last)
        ));
    }
    std::fs::write(out.join("variance_summary.csv"), csv)?;

    let dim_cells: Vec<&CellMedian> = medians.iter().filter(|c| c.sweep == "dims").collect();
    let dims_std_decreasing =
        dim_cells.windows(2).all(|w| w[1].median_std < w[0].median_std) && dim_cells.len() >= 2;
    let s_cells: Vec<&CellMedian> = medians.iter().filter(|c| c.sweep == "samples").collect();
    let s_std_increasing = match (s_cells.first(), s_cells.last()) {
        (Some(first), Some(last)) if s_cells.len() >= 2 => last.median_std > first.median_std,
        _ => false,
    };
    let summary = StabilitySummary {
        window: cfg.window,
        cells: medians,
        dims_std_decreasing,
        s_std_increasing,
    };
    write_json(&out.join("summary.json"), &summary)?;
    timing.total_ms = start.elapsed().as_secs_f64() * 1e3;
    write_json(&out.join("timing.json"), &timing)
}

/// Directory listing helper for tests and callers that verify artifact sets.
pub fn expected_jeffreys_files(seed: u64) -> Vec<PathBuf> {
    let dir = PathBuf::from(format!("seed_{}", seed));
    [
        "samples_parametric.csv",
        "samples_implicit.csv",
        "samples_particle.csv",
        "samples_berger.csv",
        "samples_mcmc.csv",
        "samples_uniform.csv",
        "ksd_curve.csv",
        "summary.json",
    ]
    .iter()
    .map(|f| dir.join(f))
    .collect()
}
