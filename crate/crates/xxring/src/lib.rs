//! Ground-state pair entanglement and Bell-inequality violation in random
//! XX spin-1/2 rings.
//!
//! The pipeline for one disorder realization:
//!
//! 1. [`model`] draws a coupling sequence from a seeded disorder
//!    distribution;
//! 2. [`freefermion`] maps the ring to free fermions (Jordan-Wigner),
//!    resolves the boundary parity sector, and builds the two-point
//!    correlation matrix G;
//! 3. [`correlators`] turns G into pair correlators c^xx (string
//!    determinants, computed incrementally per anchor) and c^zz;
//! 4. [`measures`] converts correlators to singlet fidelity, concurrence,
//!    and the CHSH maximum, and enforces the monogamy invariants.
//!
//! [`ensemble`] runs many realizations deterministically in parallel and
//! merges them; [`analysis`] builds histograms, onset thresholds, and
//! maximum-separation curves from such runs; [`oracle`] is an independent
//! exact-diagonalization cross-check for small rings.

pub mod analysis;
pub mod correlators;
pub mod ensemble;
pub mod error;
pub mod freefermion;
pub mod linalg;
pub mod measures;
pub mod model;
pub mod oracle;

pub use analysis::{
    build_histogram, far_pair_thresholds, max_separation_curve, threshold_scan, Histogram,
    HistogramSpec, MaxSepPoint, Observable, OnsetPredicate, ProbeOutcome, SeparationFilter,
    ThresholdEstimate, ThresholdScanConfig,
};
pub use correlators::{all_pairs, PairObservables, PairSweep};
pub use ensemble::{
    derive_seed, merge, run_ensemble, BootstrapSummary, EnsembleAccumulator, EnsembleConfig,
    ExtremeSeparation, ExtremeValue, Extremes, FilteredStats, HitProvenance, MeanAccumulator,
    RealizationRecord, RunCounters,
};
pub use error::{Error, Result};
pub use freefermion::{ground_state_correlations, FermionSolution, ParitySector};
pub use measures::{
    annotate_pairs, check_pair_properties, summarize_realization, x_state_concurrence,
    MeasureCounters, RealizationSummary,
};
pub use model::{build_chain, ChainModel, ChainSpec, DisorderKind, DisorderSpec};
pub use oracle::{EdGroundState, OraclePair};
