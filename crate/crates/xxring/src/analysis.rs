//! Histograms, onset-threshold scans, and maximum-separation statistics.
//!
//! Thresholds here are extreme-value statistics: the reported onset is the
//! weakest disorder at which *any* pair in an N-realization ensemble fires
//! the predicate, so the estimate moves with N. Every estimate therefore
//! carries its bracket, its ensemble size, and the seeds behind the first
//! hit.

use crate::correlators::PairObservables;
use crate::ensemble::{
    derive_seed, mix64, run_ensemble, EnsembleConfig, ExtremeSeparation, HitProvenance, RunCounters,
};
use crate::error::{Error, Result};
use crate::freefermion::ground_state_correlations;
use crate::measures::annotate_pairs;
use crate::model::{build_chain, ChainModel, DisorderKind, DisorderSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which pairs a histogram or onset predicate may look at, by ring distance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SeparationFilter {
    All,
    /// Admits distances strictly greater than `min`.
    MinDistanceExclusive {
        min: usize,
    },
    Exact {
        distances: Vec<usize>,
    },
}

impl Default for SeparationFilter {
    fn default() -> Self {
        SeparationFilter::All
    }
}

impl SeparationFilter {
    /// The far-pair filter: ring distance > L/6.
    pub fn far_pairs(l: usize) -> Self {
        SeparationFilter::MinDistanceExclusive { min: l / 6 }
    }

    pub fn admits(&self, separation: usize) -> bool {
        match self {
            SeparationFilter::All => true,
            SeparationFilter::MinDistanceExclusive { min } => separation > *min,
            SeparationFilter::Exact { distances } => distances.contains(&separation),
        }
    }

    pub fn validate(&self, l: usize) -> Result<()> {
        match self {
            SeparationFilter::All => Ok(()),
            SeparationFilter::MinDistanceExclusive { min } => {
                if *min >= l / 2 {
                    Err(Error::Config(format!(
                        "separation filter min {min} admits no pairs on a ring of {l} sites"
                    )))
                } else {
                    Ok(())
                }
            }
            SeparationFilter::Exact { distances } => {
                if distances.is_empty() {
                    return Err(Error::Config("empty exact-distance filter".into()));
                }
                for &d in distances {
                    if d == 0 || d > l / 2 {
                        return Err(Error::Config(format!(
                            "exact distance {d} outside 1..={} on a ring of {l} sites",
                            l / 2
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Short label used in file names and histogram classes.
    pub fn class_tag(&self) -> String {
        match self {
            SeparationFilter::All => "all".into(),
            SeparationFilter::MinDistanceExclusive { min } => format!("dgt{min}"),
            SeparationFilter::Exact { distances } => {
                let parts: Vec<String> = distances.iter().map(|d| d.to_string()).collect();
                format!("d{}", parts.join("-"))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    Cxx,
    Fidelity,
}

impl Observable {
    pub fn tag(self) -> &'static str {
        match self {
            Observable::Cxx => "cxx",
            Observable::Fidelity => "fidelity",
        }
    }

    fn of(self, p: &PairObservables) -> f64 {
        match self {
            Observable::Cxx => p.cxx,
            Observable::Fidelity => p.fidelity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub observable: Observable,
    pub bins: usize,
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub filter: SeparationFilter,
}

impl HistogramSpec {
    pub fn validate(&self) -> Result<()> {
        if self.bins == 0 {
            return Err(Error::Config("histogram needs at least one bin".into()));
        }
        if !(self.hi > self.lo) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::Config(format!(
                "bad histogram range [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    /// 100 bins over [-1/4, 1/4]: the physical range of c^xx.
    pub fn default_cxx(filter: SeparationFilter) -> Self {
        HistogramSpec {
            observable: Observable::Cxx,
            bins: 100,
            lo: -0.25,
            hi: 0.25,
            filter,
        }
    }

    /// 100 bins over [0, 1].
    pub fn default_fidelity(filter: SeparationFilter) -> Self {
        HistogramSpec {
            observable: Observable::Fidelity,
            bins: 100,
            lo: 0.0,
            hi: 1.0,
            filter,
        }
    }
}

/// Uniform-bin counting histogram. Counts stay integers so shard merges are
/// exact; densities are derived on read. Values within 1e-9 of the range in
/// relative terms are snapped onto the edge bins, protecting physically
/// bounded observables from landing "outside" by rounding noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub spec: HistogramSpec,
    pub counts: Vec<u64>,
    pub out_of_range: u64,
}

impl Histogram {
    pub fn new(spec: HistogramSpec) -> Self {
        let bins = spec.bins;
        Histogram {
            spec,
            counts: vec![0; bins],
            out_of_range: 0,
        }
    }

    pub fn bin_width(&self) -> f64 {
        (self.spec.hi - self.spec.lo) / self.spec.bins as f64
    }

    pub fn record(&mut self, value: f64) {
        let (lo, hi) = (self.spec.lo, self.spec.hi);
        let snap = 1e-9 * (hi - lo);
        let v = if value < lo {
            if value < lo - snap {
                self.out_of_range += 1;
                return;
            }
            lo
        } else if value > hi {
            if value > hi + snap {
                self.out_of_range += 1;
                return;
            }
            hi
        } else {
            value
        };
        let bins = self.spec.bins;
        let idx = if v >= hi {
            bins - 1
        } else {
            (((v - lo) / self.bin_width()) as usize).min(bins - 1)
        };
        self.counts[idx] += 1;
    }

    pub fn record_pair(&mut self, p: &PairObservables) {
        if self.spec.filter.admits(p.separation) {
            self.record(self.spec.observable.of(p));
        }
    }

    pub fn in_range_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// counts / (count · width); sums to 1/width · width = 1 when nonempty.
    pub fn densities(&self) -> Vec<f64> {
        let n = self.in_range_count();
        if n == 0 {
            return vec![0.0; self.spec.bins];
        }
        let norm = 1.0 / (n as f64 * self.bin_width());
        self.counts.iter().map(|&c| c as f64 * norm).collect()
    }

    pub fn bin_edges(&self) -> Vec<f64> {
        let w = self.bin_width();
        (0..=self.spec.bins)
            .map(|b| self.spec.lo + b as f64 * w)
            .collect()
    }

    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::Merge(format!(
                "histogram specs differ: {}/{} vs {}/{}",
                self.spec.observable.tag(),
                self.spec.filter.class_tag(),
                other.spec.observable.tag(),
                other.spec.filter.class_tag()
            )));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.out_of_range += other.out_of_range;
        Ok(())
    }
}

/// One-shot histogram over a plain sample slice.
pub fn build_histogram(
    observable: Observable,
    samples: &[f64],
    bins: usize,
    range: (f64, f64),
) -> Result<Histogram> {
    let spec = HistogramSpec {
        observable,
        bins,
        lo: range.0,
        hi: range.1,
        filter: SeparationFilter::All,
    };
    spec.validate()?;
    let mut h = Histogram::new(spec);
    for &v in samples {
        h.record(v);
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OnsetPredicate {
    /// F > 1/2, i.e. nonzero concurrence.
    Entangled,
    /// B > 2.
    Nonlocal,
}

impl OnsetPredicate {
    pub fn fires(self, p: &PairObservables) -> bool {
        match self {
            OnsetPredicate::Entangled => p.concurrence > 0.0,
            OnsetPredicate::Nonlocal => p.nonlocal,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            OnsetPredicate::Entangled => "entangled",
            OnsetPredicate::Nonlocal => "nonlocal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdScanConfig {
    pub model: ChainModel,
    pub length: usize,
    pub kind: DisorderKind,
    /// Probed weakest-to-strongest: ascending D for power-law, descending
    /// J_min for box.
    pub grid: Vec<f64>,
    pub realizations_per_point: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub max_separation: Option<usize>,
    #[serde(default)]
    pub filter: SeparationFilter,
    pub predicate: OnsetPredicate,
    /// Target bracket width for bisection refinement; None = grid only.
    #[serde(default)]
    pub resolution: Option<f64>,
    #[serde(default)]
    pub worker_count: usize,
}

impl ThresholdScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("empty threshold grid".into()));
        }
        if self.realizations_per_point == 0 {
            return Err(Error::Config(
                "need at least one realization per grid point".into(),
            ));
        }
        for &v in &self.grid {
            DisorderSpec {
                kind: self.kind,
                strength: v,
            }
            .validate()?;
        }
        let ordered = match self.kind {
            DisorderKind::PowerLaw => self.grid.windows(2).all(|w| w[0] < w[1]),
            DisorderKind::Box => self.grid.windows(2).all(|w| w[0] > w[1]),
        };
        if !ordered {
            return Err(Error::Config(
                "threshold grid must run weakest to strongest (ascending D, descending J_min)"
                    .into(),
            ));
        }
        if let Some(r) = self.resolution {
            if !(r > 0.0) {
                return Err(Error::Config(format!("bad bisection resolution {r}")));
            }
        }
        self.filter.validate(self.length)
    }
}

/// Outcome of probing one disorder value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeOutcome {
    pub value: f64,
    pub probe_master: u64,
    pub hit: Option<HitProvenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub definition: String,
    pub predicate: OnsetPredicate,
    /// "D" for power-law, "J_min" for box.
    pub parameter: String,
    /// Weakest probed disorder with at least one firing pair; None if the
    /// whole grid stayed quiet.
    pub onset: Option<f64>,
    /// Numeric bracket, low < high; an open side is None (0 and 1 stand in
    /// for the physical clean limits when the first probe already fires).
    pub bracket_low: Option<f64>,
    pub bracket_high: Option<f64>,
    pub realizations_per_point: u64,
    pub master_seed: u64,
    pub probes: Vec<ProbeOutcome>,
}

/// Seed root for one probe value: every probe gets its own stream, keyed by
/// the exact parameter bits so bisection points never reuse grid seeds, while
/// scans over the same master at the same value share realizations.
pub fn probe_master(master_seed: u64, value: f64) -> u64 {
    mix64(master_seed ^ value.to_bits())
}

fn probe_value(
    cfg: &ThresholdScanConfig,
    pool: &rayon::ThreadPool,
    value: f64,
) -> Result<ProbeOutcome> {
    let dist = DisorderSpec {
        kind: cfg.kind,
        strength: value,
    };
    let master = probe_master(cfg.master_seed, value);
    let hit = pool.install(|| {
        (0..cfg.realizations_per_point)
            .into_par_iter()
            .map(|k| -> Result<Option<HitProvenance>> {
                let seed = derive_seed(master, k);
                let wrap = |e: Error| Error::Realization {
                    seed,
                    source: Box::new(e),
                };
                let chain = build_chain(cfg.model, cfg.length, dist, seed).map_err(wrap)?;
                let sol = ground_state_correlations(&chain).map_err(wrap)?;
                let mut sweep =
                    crate::correlators::all_pairs(&sol, cfg.max_separation).map_err(wrap)?;
                annotate_pairs(&mut sweep.pairs);
                crate::measures::check_pair_properties(cfg.length, &sweep.pairs).map_err(wrap)?;
                Ok(sweep.pairs.iter().find_map(|p| {
                    (cfg.filter.admits(p.separation) && cfg.predicate.fires(p)).then(|| {
                        HitProvenance {
                            k,
                            seed,
                            i: p.i,
                            j: p.j,
                            separation: p.separation,
                        }
                    })
                }))
            })
            // First hit in realization order, independent of scheduling.
            .find_map_first(|r| r.transpose())
            .transpose()
    })?;
    Ok(ProbeOutcome {
        value,
        probe_master: master,
        hit,
    })
}

/// Grid scan from weak to strong disorder, stopping at the first value whose
/// ensemble contains a firing pair, then optionally bisecting the bracketing
/// interval with fresh seeds per probe.
pub fn threshold_scan(cfg: &ThresholdScanConfig) -> Result<ThresholdEstimate> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.worker_count)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let mut probes = Vec::new();
    let mut last_clean: Option<f64> = None;
    let mut onset: Option<f64> = None;
    for &v in &cfg.grid {
        let outcome = probe_value(cfg, &pool, v)?;
        let hit = outcome.hit.is_some();
        probes.push(outcome);
        if hit {
            onset = Some(v);
            break;
        }
        last_clean = Some(v);
    }

    if let (Some(res), Some(mut hot), Some(mut clean)) = (cfg.resolution, onset, last_clean) {
        let mut iterations = 0;
        while (hot - clean).abs() > res && iterations < 32 {
            let mid = 0.5 * (hot + clean);
            let outcome = probe_value(cfg, &pool, mid)?;
            let hit = outcome.hit.is_some();
            probes.push(outcome);
            if hit {
                hot = mid;
            } else {
                clean = mid;
            }
            iterations += 1;
        }
        onset = Some(hot);
        last_clean = Some(clean);
    }

    // Express the bracket as a plain numeric interval regardless of which
    // direction "stronger" points.
    let (bracket_low, bracket_high) = match (onset, last_clean, cfg.kind) {
        (Some(h), clean, DisorderKind::PowerLaw) => (Some(clean.unwrap_or(0.0)), Some(h)),
        (Some(h), clean, DisorderKind::Box) => (Some(h), Some(clean.unwrap_or(1.0))),
        (None, clean, DisorderKind::PowerLaw) => (clean, None),
        (None, clean, DisorderKind::Box) => (None, clean),
    };

    Ok(ThresholdEstimate {
        definition: format!(
            "weakest probed {} whose {}-realization ensemble contains >=1 {} pair (filter: {})",
            parameter_name(cfg.kind),
            cfg.realizations_per_point,
            cfg.predicate.tag(),
            cfg.filter.class_tag()
        ),
        predicate: cfg.predicate,
        parameter: parameter_name(cfg.kind).to_string(),
        onset,
        bracket_low,
        bracket_high,
        realizations_per_point: cfg.realizations_per_point,
        master_seed: cfg.master_seed,
        probes,
    })
}

fn parameter_name(kind: DisorderKind) -> &'static str {
    match kind {
        DisorderKind::PowerLaw => "D",
        DisorderKind::Box => "J_min",
    }
}

/// Entanglement and nonlocality onsets for far pairs (ring distance > L/6)
/// on one shared grid and shared per-value seeds, so the structural ordering
/// "entanglement onset ≤ nonlocality onset" holds realization by
/// realization.
pub fn far_pair_thresholds(
    cfg: &ThresholdScanConfig,
) -> Result<(ThresholdEstimate, ThresholdEstimate)> {
    let far = ThresholdScanConfig {
        filter: SeparationFilter::far_pairs(cfg.length),
        max_separation: None,
        ..cfg.clone()
    };
    let ent = threshold_scan(&ThresholdScanConfig {
        predicate: OnsetPredicate::Entangled,
        ..far.clone()
    })?;
    let nl = threshold_scan(&ThresholdScanConfig {
        predicate: OnsetPredicate::Nonlocal,
        ..far
    })?;
    Ok((ent, nl))
}

/// Largest entangled / nonlocal ring separations observed per disorder
/// value, with seed provenance for replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxSepPoint {
    pub strength: f64,
    pub realizations: u64,
    pub ensemble_master: u64,
    pub max_entangled: Option<ExtremeSeparation>,
    pub max_nonlocal: Option<ExtremeSeparation>,
    pub counters: RunCounters,
}

pub fn max_separation_curve(
    model: ChainModel,
    length: usize,
    kind: DisorderKind,
    strengths: &[f64],
    realizations: u64,
    master_seed: u64,
    worker_count: usize,
) -> Result<Vec<MaxSepPoint>> {
    let mut out = Vec::with_capacity(strengths.len());
    for &s in strengths {
        let ensemble_master = probe_master(master_seed, s);
        let acc = run_ensemble(&EnsembleConfig {
            model,
            length,
            disorder: DisorderSpec { kind, strength: s },
            realizations,
            master_seed: ensemble_master,
            first_realization: 0,
            max_separation: None,
            separation_filter: SeparationFilter::All,
            histograms: vec![],
            worker_count,
        })?;
        out.push(MaxSepPoint {
            strength: s,
            realizations,
            ensemble_master,
            max_entangled: acc.extremes.max_entangled_separation,
            max_nonlocal: acc.extremes.max_nonlocal_separation,
            counters: acc.counters,
        });
    }
    Ok(out)
}
