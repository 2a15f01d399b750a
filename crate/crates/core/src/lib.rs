//! Heralded Fock-state generation from multimode parametric down-conversion.
//!
//! A pulsed down-conversion source emits photon pairs into a hierarchy of
//! Schmidt modes; projecting the idler arm onto a detected photon number
//! heralds a Fock state in the signal arm. This crate computes the
//! resulting photon-number statistics under loss and builds the analysis
//! tooling on top:
//!
//! - [`pmf`]: geometric per-mode distributions, their phase-type
//!   convolution across modes, and closed-form cross-checks.
//! - [`spectrum`]: Schmidt coefficients, Schmidt number, per-mode squeezing.
//! - [`loss`]: binomial loss channels and thermal-state loss transforms.
//! - [`herald`]: joint signal/idler tables, heralding probabilities, and
//!   heralded-state fidelities.
//! - [`analysis`]: gain sweeps, probability maximization, the
//!   probability/fidelity trade-off, and feasibility limits.
//! - [`fit`]: least-squares estimation of `(K, eta_i, eta_s)` from
//!   measured heralding data.
//! - [`tes`]: transition-edge-sensor histogram calibration and Allan
//!   variance drift checks.
//!
//! Everything is pure and deterministic; sweeps and multi-start fits run
//! their independent evaluations in parallel.

pub mod analysis;
pub mod error;
pub mod fit;
pub mod herald;
pub mod loss;
pub mod optim;
pub mod pmf;
pub mod spectrum;
pub mod tes;

pub use analysis::{
    feasibility, max_fidelity_at_probability, max_herald_probability, poisson_max_herald_prob,
    single_mode_max_herald_prob, sweep_gain, FeasibilityEntry, FeasibilityReport, SweepResult,
};
pub use error::{Error, Result};
pub use fit::{fit_parameters, synthesize_runs, FitObservation, FitOptions, FitResult, RunData};
pub use herald::{
    fidelity_photon_number, fidelity_single_mode, herald_pmf, herald_probability, herald_report,
    joint_lossy_pmf, mean_detected_photons, multimode_joint, HeraldReport, JointPmf,
};
pub use loss::{apply_binomial_loss, lossy_squeezing, lossy_thermal_vacuum_prob, LossModel};
pub use pmf::{
    distinct_q_pmf, geometric_n_trunc, geometric_pmf, negative_binomial_pmf, phase_type_pmf, Pmf,
    DEGENERACY_THRESHOLD, TRUNCATION_EPS,
};
pub use spectrum::{
    mu_from_schmidt_number, schmidt_coefficients, schmidt_number, ModeSpectrum, SpectrumTemplate,
    MU_MAX,
};
pub use tes::{
    allan_variance, assign_counts, fit_mixture, fit_mixture_with_options,
    misassignment_probabilities, CountEntry, CountRecord, GaussianComponent, MixtureFit,
    MixtureOptions, TesHistogram,
};
