//! Command-line interface definition.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "spdc-herald",
    version,
    about = "Heralded Fock-state source analysis: sweeps, limits, fits, detector calibration",
    after_help = "Every parameter can also come from a flat TOML config file (--config); \
                  command-line flags override file entries. Set SPDC_HERALD_THREADS to cap \
                  the worker thread count."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tabulate heralding probability and fidelities over a gain grid (CSV + metadata JSON)
    Sweep(SweepArgs),
    /// Maximize the heralding probability over the optical gain
    MaxProb(MaxProbArgs),
    /// Best fidelity at a required heralding probability (trade-off point)
    Tradeoff(TradeoffArgs),
    /// Generation-rate limits per Fock state under a fidelity floor
    Feasibility(FeasibilityArgs),
    /// Fit Schmidt number and arm transmissions to measured runs
    Fit(FitArgs),
    /// Fit Gaussian response components to a TES pulse-area histogram
    TesFit(TesFitArgs),
    /// Bin TES events into photon numbers with misassignment error bars
    TesAssign(TesAssignArgs),
    /// Allan variance of a measurement series
    Allan(AllanArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SourceArgs {
    /// Mode decay parameter of the Schmidt spectrum (mutually exclusive with --schmidt-number)
    #[arg(long)]
    pub mu: Option<f64>,
    /// Schmidt number; converted to the equivalent mode decay
    #[arg(long)]
    pub schmidt_number: Option<f64>,
    /// Retained Schmidt modes
    #[arg(long)]
    pub k_max: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct LossArgs {
    /// Signal-arm transmission
    #[arg(long)]
    pub eta_signal: Option<f64>,
    /// Idler (heralding) arm transmission
    #[arg(long)]
    pub eta_idler: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub loss: LossArgs,
    /// Gain grid as start:stop:steps (inclusive)
    #[arg(long)]
    pub gains: Option<String>,
    /// Explicit comma-separated gain list (alternative to --gains)
    #[arg(long)]
    pub gain_list: Option<String>,
    /// Comma-separated target photon numbers
    #[arg(long)]
    pub n_list: Option<String>,
    /// Output CSV path
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Metadata JSON path (default: CSV path with .meta.json)
    #[arg(long)]
    pub meta_out: Option<PathBuf>,
    /// Recorded in the metadata; no randomized paths exist here
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct MaxProbArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub source: SourceArgs,
    /// Idler (heralding) arm transmission
    #[arg(long)]
    pub eta_idler: Option<f64>,
    /// Target photon number
    #[arg(long)]
    pub n: Option<usize>,
    /// Output JSON path (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TradeoffArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub loss: LossArgs,
    /// Target photon number
    #[arg(long)]
    pub n: Option<usize>,
    /// Required heralding probability
    #[arg(long)]
    pub p_target: Option<f64>,
    /// Output JSON path (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FeasibilityArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Experiment repetition rate in events per second
    #[arg(long)]
    pub rep_rate: Option<f64>,
    /// Idler (heralding) arm transmission
    #[arg(long)]
    pub eta_idler: Option<f64>,
    /// Minimum acceptable heralded-state fidelity
    #[arg(long)]
    pub fidelity_floor: Option<f64>,
    /// Minimum useful generation rate in events per second
    #[arg(long)]
    pub rate_floor: Option<f64>,
    /// Smallest photon number to examine
    #[arg(long)]
    pub n_min: Option<usize>,
    /// Largest photon number to examine
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Output JSON path (optional; the table always goes to stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset CSV (run_id, n, herald_prob, err_lo, err_hi, fidelity, err_lo, err_hi, mean_photons)
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Retained Schmidt modes in the model
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Output JSON path (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fitted-curve CSV for overplotting (sweep format)
    #[arg(long)]
    pub curve_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TesFitArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Histogram CSV (value,count rows with uniformly spaced bin centers)
    #[arg(long)]
    pub hist: Option<PathBuf>,
    /// Number of Gaussian components (photon numbers 0..n_peaks-1)
    #[arg(long)]
    pub n_peaks: Option<usize>,
    /// Output JSON path (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TesAssignArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Event CSV: one pulse area per row
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Mixture-fit JSON produced by tes-fit; if absent, the events are
    /// histogrammed and fitted first (requires --n-peaks)
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// Number of Gaussian components when fitting from events
    #[arg(long)]
    pub n_peaks: Option<usize>,
    /// Histogram bins when fitting from events
    #[arg(long)]
    pub bins: Option<usize>,
    /// Output JSON path (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AllanArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Series CSV: one value per row, in measurement order
    #[arg(long)]
    pub series: Option<PathBuf>,
    /// Comma-separated block sizes (default: powers of two up to half the length)
    #[arg(long)]
    pub block_sizes: Option<String>,
    /// Output CSV path (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}
