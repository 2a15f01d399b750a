//! Subcommand implementations.

use std::path::{Path, PathBuf};

use serde::Serialize;
use spdc_herald::{
    allan_variance, assign_counts, feasibility, fit_mixture, fit_parameters,
    max_fidelity_at_probability, max_herald_probability, mu_from_schmidt_number, sweep_gain,
    CountRecord, FitOptions, FitResult, LossModel, MixtureFit, SpectrumTemplate, TesHistogram,
    TRUNCATION_EPS,
};

use crate::args::{self, Cli, Command, LossArgs, SourceArgs};
use crate::config::{parse_grid, parse_list_f64, parse_list_usize, resolve, resolve_required, ConfigMap};
use crate::error::{CliError, CliResult};
use crate::io;

const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Sweep(a) => cmd_sweep(a),
        Command::MaxProb(a) => cmd_max_prob(a),
        Command::Tradeoff(a) => cmd_tradeoff(a),
        Command::Feasibility(a) => cmd_feasibility(a),
        Command::Fit(a) => cmd_fit(a),
        Command::TesFit(a) => cmd_tes_fit(a),
        Command::TesAssign(a) => cmd_tes_assign(a),
        Command::Allan(a) => cmd_allan(a),
    }
}

#[derive(Serialize)]
struct SourceParams {
    mu: f64,
    schmidt_number: f64,
    k_max: usize,
}

/// Resolves the source spectrum; `mu` and `schmidt_number` are mutually
/// exclusive, with flags replacing both config keys at once.
fn resolve_source(args: &SourceArgs, cfg: &ConfigMap) -> CliResult<SourceParams> {
    cfg.shadow("seed"); // accepted everywhere, recorded where output has metadata
    let mu = match (args.mu, args.schmidt_number) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "--mu and --schmidt-number are mutually exclusive".into(),
            ))
        }
        (Some(mu), None) => {
            cfg.shadow("mu");
            cfg.shadow("schmidt_number");
            mu
        }
        (None, Some(k)) => {
            cfg.shadow("mu");
            cfg.shadow("schmidt_number");
            mu_from_schmidt_number(k)?
        }
        (None, None) => match (cfg.f64("mu")?, cfg.f64("schmidt_number")?) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "'mu' and 'schmidt_number' are mutually exclusive in the config".into(),
                ))
            }
            (Some(mu), None) => mu,
            (None, Some(k)) => mu_from_schmidt_number(k)?,
            (None, None) => 0.0,
        },
    };
    let k_max = resolve(args.k_max, cfg.usize("k_max"), 35, cfg, "k_max")?;
    let template = SpectrumTemplate::from_mode_decay(mu, k_max)?;
    let schmidt_number = 1.0 / template.lambdas().iter().map(|l| l.powi(4)).sum::<f64>();
    Ok(SourceParams {
        mu,
        schmidt_number,
        k_max,
    })
}

fn resolve_loss(args: &LossArgs, cfg: &ConfigMap) -> CliResult<LossModel> {
    let eta_signal = resolve(args.eta_signal, cfg.f64("eta_signal"), 1.0, cfg, "eta_signal")?;
    let eta_idler = resolve(args.eta_idler, cfg.f64("eta_idler"), 1.0, cfg, "eta_idler")?;
    Ok(LossModel::new(eta_signal, eta_idler)?)
}

fn template_for(params: &SourceParams) -> CliResult<SpectrumTemplate> {
    Ok(SpectrumTemplate::from_mode_decay(params.mu, params.k_max)?)
}

#[derive(Serialize)]
struct SweepMeta {
    command: &'static str,
    version: &'static str,
    mu: f64,
    schmidt_number: f64,
    k_max: usize,
    eta_signal: f64,
    eta_idler: f64,
    gains: Vec<f64>,
    n_list: Vec<usize>,
    seed: Option<u64>,
    truncation_eps: f64,
    columns: Vec<String>,
}

fn cmd_sweep(a: args::SweepArgs) -> CliResult<()> {
    let cfg = ConfigMap::load(a.config.as_deref())?;
    let source = resolve_source(&a.source, &cfg)?;
    let loss = resolve_loss(&a.loss, &cfg)?;

    let gains_spec = a.gains.clone();
    let gain_list_spec = a.gain_list.clone();
    if gains_spec.is_some() {
        cfg.shadow("gains");
        cfg.shadow("gain_list");
    }
    if gain_list_spec.is_some() {
        cfg.shadow("gains");
        cfg.shadow("gain_list");
    }
    let gains = match (gains_spec, gain_list_spec) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "--gains and --gain-list are mutually exclusive".into(),
            ))
        }
        (Some(g), None) => parse_grid(&g)?,
        (None, Some(l)) => parse_list_f64(&l, "gain_list")?,
        (None, None) => match (cfg.string("gains")?, cfg.string("gain_list")?) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "'gains' and 'gain_list' are mutually exclusive in the config".into(),
                ))
            }
            (Some(g), None) => parse_grid(&g)?,
            (None, Some(l)) => parse_list_f64(&l, "gain_list")?,
            (None, None) => return Err(CliError::Config("missing required parameter 'gains'".into())),
        },
    };
    if gains.is_empty() {
        return Err(CliError::Config("the gain grid is empty".into()));
    }

    let n_list_text = resolve_required(a.n_list.clone(), cfg.string("n_list"), &cfg, "n_list")?;
    let n_list = parse_list_usize(&n_list_text, "n_list")?;
    if n_list.is_empty() {
        return Err(CliError::Config("the photon-number list is empty".into()));
    }

    let out = resolve_required(
        a.out.clone(),
        cfg.string("out").map(|o| o.map(PathBuf::from)),
        &cfg,
        "out",
    )?;
    let meta_out = match a.meta_out.clone() {
        Some(p) => {
            cfg.shadow("meta_out");
            p
        }
        None => cfg
            .string("meta_out")?
            .map(PathBuf::from)
            .unwrap_or_else(|| io::default_meta_path(&out)),
    };
    let seed = resolve(a.seed, cfg.u64("seed"), 0, &cfg, "seed").map(Some)?;
    cfg.finish("sweep")?;

    let template = template_for(&source)?;
    let sweep = sweep_gain(&template, &loss, &gains, &n_list)?;
    io::write_sweep_csv(&out, &sweep)?;
    io::write_json_file(
        &meta_out,
        &SweepMeta {
            command: "sweep",
            version: VERSION,
            mu: source.mu,
            schmidt_number: source.schmidt_number,
            k_max: source.k_max,
            eta_signal: loss.eta_signal(),
            eta_idler: loss.eta_idler(),
            gains,
            n_list,
            seed,
            truncation_eps: TRUNCATION_EPS,
            columns: io::SWEEP_COLUMNS.iter().map(|s| s.to_string()).collect(),
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct MaxProbReport {
    command: &'static str,
    version: &'static str,
    mu: f64,
    schmidt_number: f64,
    k_max: usize,
    eta_idler: f64,
    n: usize,
    optimal_gain: f64,
    max_herald_prob: f64,
}

fn cmd_max_prob(a: args::MaxProbArgs) -> CliResult<()> {
    let cfg = ConfigMap::load(a.config.as_deref())?;
    let source = resolve_source(&a.source, &cfg)?;
    let eta_idler = resolve(a.eta_idler, cfg.f64("eta_idler"), 1.0, &cfg, "eta_idler")?;
    let n = resolve_required(a.n, cfg.usize("n"), &cfg, "n")?;
    let out = opt_path(a.out, &cfg, "out")?;
    cfg.finish("max-prob")?;

    let template = template_for(&source)?;
    let loss = LossModel::new(1.0, eta_idler)?;
    let (gain, prob) = max_herald_probability(&template, &loss, n)?;
    let report = MaxProbReport {
        command: "max-prob",
        version: VERSION,
        mu: source.mu,
        schmidt_number: source.schmidt_number,
        k_max: source.k_max,
        eta_idler,
        n,
        optimal_gain: gain,
        max_herald_prob: prob,
    };
    emit_json(out.as_deref(), &report)
}

#[derive(Serialize)]
struct TradeoffReport {
    command: &'static str,
    version: &'static str,
    mu: f64,
    schmidt_number: f64,
    k_max: usize,
    eta_signal: f64,
    eta_idler: f64,
    n: usize,
    p_target: f64,
    fidelity: f64,
}

fn cmd_tradeoff(a: args::TradeoffArgs) -> CliResult<()> {
    let cfg = ConfigMap::load(a.config.as_deref())?;
    let source = resolve_source(&a.source, &cfg)?;
    let loss = resolve_loss(&a.loss, &cfg)?;
    let n = resolve_required(a.n, cfg.usize("n"), &cfg, "n")?;
    let p_target = resolve_required(a.p_target, cfg.f64("p_target"), &cfg, "p_target")?;
    let out = opt_path(a.out, &cfg, "out")?;
    cfg.finish("tradeoff")?;

    let template = template_for(&source)?;
    let fidelity = max_fidelity_at_probability(&template, &loss, n, p_target)?;
    let report = TradeoffReport {
        command: "tradeoff",
        version: VERSION,
        mu: source.mu,
        schmidt_number: source.schmidt_number,
        k_max: source.k_max,
        eta_signal: loss.eta_signal(),
        eta_idler: loss.eta_idler(),
        n,
        p_target,
        fidelity,
    };
    emit_json(out.as_deref(), &report)
}

fn cmd_feasibility(a: args::FeasibilityArgs) -> CliResult<()> {
    let cfg = ConfigMap::load(a.config.as_deref())?;
    let rep_rate = resolve(a.rep_rate, cfg.f64("rep_rate"), 1e8, &cfg, "rep_rate")?;
    let eta_idler = resolve(a.eta_idler, cfg.f64("eta_idler"), 0.9, &cfg, "eta_idler")?;
    let fidelity_floor = resolve(
        a.fidelity_floor,
        cfg.f64("fidelity_floor"),
        0.9,
        &cfg,
        "fidelity_floor",
    )?;
    let rate_floor = resolve(a.rate_floor, cfg.f64("rate_floor"), 0.1, &cfg, "rate_floor")?;
    let n_min = resolve(a.n_min, cfg.usize("n_min"), 1, &cfg, "n_min")?;
    let n_max = resolve(a.n_max, cfg.usize("n_max"), 12, &cfg, "n_max")?;
    let out = opt_path(a.out, &cfg, "out")?;
    cfg.finish("feasibility")?;

    let report = feasibility(rep_rate, eta_idler, fidelity_floor, rate_floor, n_min..=n_max)?;

    println!(
        "Single-mode source, lossless signal arm; eta_idler = {eta_idler}, \
         fidelity >= {fidelity_floor}, rep rate = {rep_rate:e}/s"
    );
    println!(
        "{:>3}  {:>12}  {:>13}  {:>13}  {:>10}",
        "n", "gain B", "p_n", "rate [1/s]", "fidelity"
    );
    for e in &report.per_n {
        println!(
            "{:>3}  {:>12.6}  {:>13.6e}  {:>13.6e}  {:>10.6}",
            e.n, e.optimal_gain, e.generation_prob, e.rate, e.fidelity
        );
    }
    match report.max_feasible_n {
        Some(n) => println!("max feasible n at {rate_floor}/s: {n}"),
        None => println!("no photon number reaches {rate_floor}/s"),
    }
    if let Some(path) = out {
        io::write_json_file(&path, &report)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct FitReport {
    command: &'static str,
    version: &'static str,
    k_max: usize,
    run_ids: Vec<String>,
    result: FitResult,
}

fn cmd_fit(a: args::FitArgs) -> CliResult<()> {
    let cfg = ConfigMap::load(a.config.as_deref())?;
    let data = resolve_required(
        a.data,
        cfg.string("data").map(|o| o.map(PathBuf::from)),
        &cfg,
        "data",
    )?;
    let k_max = resolve(a.k_max, cfg.usize("k_max"), 35, &cfg, "k_max")?;
    let out = opt_path(a.out, &cfg, "out")?;
    let curve_out = opt_path(a.curve_out, &cfg, "curve_out")?;
    cfg.finish("fit")?;

    let runs = io::read_fit_dataset(&data)?;
    let opts = FitOptions {
        k_max,
        ..FitOptions::default()
    };
    let result = fit_parameters(&runs, &opts)?;

    if let Some(curve_path) = &curve_out {
        write_fit_curve(curve_path, &runs, &result, k_max)?;
    }
    let report = FitReport {
        command: "fit",
        version: VERSION,
        k_max,
        run_ids: runs.iter().map(|r| r.run_id.clone()).collect(),
        result,
    };
    emit_json(out.as_deref(), &report)
}

/// Model curves at the fitted parameters over a gain grid spanning the
/// runs, in the sweep CSV format.
fn write_fit_curve(
    path: &Path,
    runs: &[spdc_herald::RunData],
    result: &FitResult,
    k_max: usize,
) -> CliResult<()> {
    let mu = mu_from_schmidt_number(result.schmidt_number)?;
    let template = SpectrumTemplate::from_mode_decay(mu, k_max)?;
    let loss = LossModel::new(result.eta_signal, result.eta_idler)?;
    let b_max = result
        .per_run_gain
        .iter()
        .fold(0.0_f64, |acc, &b| acc.max(b));
    let b_max = if b_max > 0.0 { b_max * 1.15 } else { 1.0 };
    let gains: Vec<f64> = (1..=60).map(|i| b_max * i as f64 / 60.0).collect();
    let mut n_list: Vec<usize> = runs
        .iter()
        .flat_map(|r| r.observations.iter().map(|o| o.n))
        .collect();
    n_list.sort_unstable();
    n_list.dedup();
    let sweep = sweep_gain(&template, &loss, &gains, &n_list)?;
    io::write_sweep_csv(path, &sweep)
}

#[derive(Serialize)]
struct TesFitReport {
    command: &'static str,
    version: &'static str,
    n_peaks: usize,
    total_events: u64,
    mixture_fit: MixtureFit,
}

fn cmd_tes_fit(a: args::TesFitArgs) -> CliResult<()> {
    let cfg = ConfigMap::load(a.config.as_deref())?;
    let hist_path = resolve_required(
        a.hist,
        cfg.string("hist").map(|o| o.map(PathBuf::from)),
        &cfg,
        "hist",
    )?;
    let n_peaks = resolve_required(a.n_peaks, cfg.usize("n_peaks"), &cfg, "n_peaks")?;
    let out = opt_path(a.out, &cfg, "out")?;
    cfg.finish("tes-fit")?;

    let hist = io::read_histogram(&hist_path)?;
    let fit = fit_mixture(&hist, n_peaks)?;
    let report = TesFitReport {
        command: "tes-fit",
        version: VERSION,
        n_peaks,
        total_events: hist.total(),
        mixture_fit: fit,
    };
    emit_json(out.as_deref(), &report)
}

#[derive(Serialize)]
struct TesAssignReport {
    command: &'static str,
    version: &'static str,
    mixture_fit: MixtureFit,
    count_record: CountRecord,
}

fn cmd_tes_assign(a: args::TesAssignArgs) -> CliResult<()> {
    let cfg = ConfigMap::load(a.config.as_deref())?;
    let events_path = resolve_required(
        a.events,
        cfg.string("events").map(|o| o.map(PathBuf::from)),
        &cfg,
        "events",
    )?;
    let fit_path = opt_path(a.fit, &cfg, "fit")?;
    let n_peaks = match a.n_peaks {
        Some(n) => {
            cfg.shadow("n_peaks");
            Some(n)
        }
        None => cfg.usize("n_peaks")?,
    };
    let bins = resolve(a.bins, cfg.usize("bins"), 200, &cfg, "bins")?;
    let out = opt_path(a.out, &cfg, "out")?;
    cfg.finish("tes-assign")?;

    let events = io::read_values(&events_path)?;
    let fit = match (fit_path, n_peaks) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
            let fit: MixtureFit = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            fit.validate()?;
            fit
        }
        (None, Some(n_peaks)) => {
            let hist = TesHistogram::from_events(&events, bins)?;
            fit_mixture(&hist, n_peaks)?
        }
        (None, None) => {
            return Err(CliError::Config(
                "tes-assign needs either --fit or --n-peaks".into(),
            ))
        }
    };
    let record = assign_counts(&events, &fit);
    let report = TesAssignReport {
        command: "tes-assign",
        version: VERSION,
        mixture_fit: fit,
        count_record: record,
    };
    emit_json(out.as_deref(), &report)
}

fn cmd_allan(a: args::AllanArgs) -> CliResult<()> {
    let cfg = ConfigMap::load(a.config.as_deref())?;
    let series_path = resolve_required(
        a.series,
        cfg.string("series").map(|o| o.map(PathBuf::from)),
        &cfg,
        "series",
    )?;
    let block_spec = match a.block_sizes {
        Some(s) => {
            cfg.shadow("block_sizes");
            Some(s)
        }
        None => cfg.string("block_sizes")?,
    };
    let out = opt_path(a.out, &cfg, "out")?;
    cfg.finish("allan")?;

    let series = io::read_values(&series_path)?;
    let block_sizes = match block_spec {
        Some(s) => parse_list_usize(&s, "block_sizes")?,
        None => {
            let mut sizes = Vec::new();
            let mut m = 1usize;
            while 2 * m <= series.len() {
                sizes.push(m);
                m *= 2;
            }
            sizes
        }
    };
    if block_sizes.is_empty() {
        return Err(CliError::Config("no block sizes to evaluate".into()));
    }
    let avar = allan_variance(&series, &block_sizes)?;
    io::write_pairs_csv(
        out.as_deref(),
        ("block_size", "allan_variance"),
        block_sizes
            .iter()
            .zip(&avar)
            .map(|(&m, &v)| (m as f64, v)),
    )
}

fn opt_path(
    flag: Option<PathBuf>,
    cfg: &ConfigMap,
    key: &str,
) -> CliResult<Option<PathBuf>> {
    match flag {
        Some(p) => {
            cfg.shadow(key);
            Ok(Some(p))
        }
        None => Ok(cfg.string(key)?.map(PathBuf::from)),
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> CliResult<()> {
    match out {
        Some(path) => io::write_json_file(path, value),
        None => io::print_json(value),
    }
}
