//! Deterministic disorder ensembles.
//!
//! Every realization k draws its couplings from a seed derived purely from
//! (master_seed, k), so no scheduler, worker count, or shard layout can
//! change a single number. Workers accumulate privately and merge at the
//! end; scalar aggregates are recomputed from the k-sorted per-realization
//! records through one fixed pairwise-summation tree, which makes the run
//! bit-identical across worker counts rather than merely close.

use crate::analysis::{Histogram, HistogramSpec, SeparationFilter};
use crate::correlators::all_pairs;
use crate::error::{Error, Result};
use crate::freefermion::ground_state_correlations;
use crate::linalg::pairwise_sum;
use crate::measures::{
    annotate_pairs, check_pair_properties, summarize_realization, RealizationSummary,
};
use crate::model::{build_chain, ChainModel, DisorderSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const ACCUMULATOR_FORMAT_VERSION: u32 = 1;

/// SplitMix64 finalizer: a 64-bit bijection with good avalanche.
pub fn mix64(x: u64) -> u64 {
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realization k: SplitMix64 step k+1 from the master seed. A
/// bijection of k for fixed master, so realization seeds never collide.
pub fn derive_seed(master_seed: u64, k: u64) -> u64 {
    mix64(master_seed.wrapping_add((k + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub model: ChainModel,
    pub length: usize,
    pub disorder: DisorderSpec,
    /// N: number of realizations in this run (or this shard).
    pub realizations: u64,
    pub master_seed: u64,
    /// Index of the first realization; nonzero when sharding one logical
    /// ensemble across runs.
    #[serde(default)]
    pub first_realization: u64,
    /// Ring-distance cap for the pair sweep; None = all pairs to L/2.
    #[serde(default)]
    pub max_separation: Option<usize>,
    /// Pairs admitted into the filtered onset statistics.
    #[serde(default)]
    pub separation_filter: SeparationFilter,
    pub histograms: Vec<HistogramSpec>,
    /// 0 = one worker per core.
    #[serde(default)]
    pub worker_count: usize,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::Config("need at least one realization".into()));
        }
        if self
            .first_realization
            .checked_add(self.realizations)
            .is_none()
        {
            return Err(Error::Config("realization window overflows".into()));
        }
        if self.length < 2 || self.length % 2 != 0 {
            return Err(Error::Config(format!(
                "ring length {} must be even and ≥ 2",
                self.length
            )));
        }
        self.disorder.validate()?;
        if let Some(0) = self.max_separation {
            return Err(Error::Config("max separation must be at least 1".into()));
        }
        self.separation_filter.validate(self.length)?;
        for h in &self.histograms {
            h.validate()?;
        }
        Ok(())
    }

    /// Whether the sweep covers every pair, making realization summaries
    /// (M, Q_NL) well defined.
    pub fn full_window(&self) -> bool {
        self.max_separation.is_none_or(|k| k >= self.length / 2)
    }

    /// SHA-256 over the canonical JSON of the semantic fields. Worker count
    /// and the shard window are execution details and excluded: shards of
    /// one logical ensemble share a fingerprint and may merge.
    pub fn fingerprint(&self) -> String {
        #[derive(Serialize)]
        struct Semantic<'a> {
            model: ChainModel,
            length: usize,
            disorder: DisorderSpec,
            master_seed: u64,
            max_separation: Option<usize>,
            separation_filter: &'a SeparationFilter,
            histograms: &'a [HistogramSpec],
        }
        let canonical = serde_json::to_vec(&Semantic {
            model: self.model,
            length: self.length,
            disorder: self.disorder,
            master_seed: self.master_seed,
            max_separation: self.max_separation,
            separation_filter: &self.separation_filter,
            histograms: &self.histograms,
        })
        .expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(&canonical);
        let digest = hasher.finalize();
        let mut out = String::with_capacity(64);
        for byte in digest {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }
}

/// One realization's survivors after accumulation: enough to rebuild every
/// scalar aggregate and to replay the realization from its seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub k: u64,
    pub seed: u64,
    /// Present only for full-window sweeps.
    pub summary: Option<RealizationSummary>,
}

/// Pair-level provenance of an extreme or a first hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HitProvenance {
    pub k: u64,
    pub seed: u64,
    pub i: usize,
    pub j: usize,
    pub separation: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremeValue {
    pub value: f64,
    pub seed: u64,
    pub i: usize,
    pub j: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtremeSeparation {
    pub separation: usize,
    pub seed: u64,
    pub i: usize,
    pub j: usize,
}

/// Global extremes with provenance. Ties break toward the smaller
/// (seed, i, j), a total order, so the winner cannot depend on scheduling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Extremes {
    pub max_abs_cxx: Option<ExtremeValue>,
    pub max_fidelity: Option<ExtremeValue>,
    pub max_entangled_separation: Option<ExtremeSeparation>,
    pub max_nonlocal_separation: Option<ExtremeSeparation>,
}

fn offer_value(slot: &mut Option<ExtremeValue>, cand: ExtremeValue, key: impl Fn(f64) -> f64) {
    let replace = match slot {
        None => true,
        Some(cur) => match key(cand.value)
            .partial_cmp(&key(cur.value))
            .expect("finite")
        {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => (cand.seed, cand.i, cand.j) < (cur.seed, cur.i, cur.j),
        },
    };
    if replace {
        *slot = Some(cand);
    }
}

fn offer_separation(slot: &mut Option<ExtremeSeparation>, cand: ExtremeSeparation) {
    let replace = match slot {
        None => true,
        Some(cur) => {
            cand.separation > cur.separation
                || (cand.separation == cur.separation
                    && (cand.seed, cand.i, cand.j) < (cur.seed, cur.i, cur.j))
        }
    };
    if replace {
        *slot = Some(cand);
    }
}

impl Extremes {
    fn offer_pair(&mut self, p: &crate::correlators::PairObservables, seed: u64) {
        offer_value(
            &mut self.max_abs_cxx,
            ExtremeValue {
                value: p.cxx,
                seed,
                i: p.i,
                j: p.j,
            },
            f64::abs,
        );
        offer_value(
            &mut self.max_fidelity,
            ExtremeValue {
                value: p.fidelity,
                seed,
                i: p.i,
                j: p.j,
            },
            |v| v,
        );
        if p.concurrence > 0.0 {
            offer_separation(
                &mut self.max_entangled_separation,
                ExtremeSeparation {
                    separation: p.separation,
                    seed,
                    i: p.i,
                    j: p.j,
                },
            );
        }
        if p.nonlocal {
            offer_separation(
                &mut self.max_nonlocal_separation,
                ExtremeSeparation {
                    separation: p.separation,
                    seed,
                    i: p.i,
                    j: p.j,
                },
            );
        }
    }

    fn absorb(&mut self, other: &Extremes) {
        if let Some(v) = other.max_abs_cxx {
            offer_value(&mut self.max_abs_cxx, v, f64::abs);
        }
        if let Some(v) = other.max_fidelity {
            offer_value(&mut self.max_fidelity, v, |x| x);
        }
        if let Some(v) = other.max_entangled_separation {
            offer_separation(&mut self.max_entangled_separation, v);
        }
        if let Some(v) = other.max_nonlocal_separation {
            offer_separation(&mut self.max_nonlocal_separation, v);
        }
    }
}

/// Mean and standard error from (count, Σx, Σx²). Counts merge exactly;
/// sums merge to within rounding.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanAccumulator {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MeanAccumulator {
    pub fn from_values(xs: &[f64]) -> Self {
        let squares: Vec<f64> = xs.iter().map(|x| x * x).collect();
        MeanAccumulator {
            count: xs.len() as u64,
            sum: pairwise_sum(xs),
            sum_sq: pairwise_sum(&squares),
        }
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }

    /// Standard error of the mean, s/√n.
    pub fn std_error(&self) -> Option<f64> {
        if self.count < 2 {
            return None;
        }
        let n = self.count as f64;
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        Some((var / n).sqrt())
    }

    fn merge(&mut self, other: &MeanAccumulator) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }
}

/// Counters that are reported, not fatal: the first two are physics
/// surprises (see the measures module), the rest benign bookkeeping.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunCounters {
    pub correlator_order_violations: u64,
    pub predicate_disagreements: u64,
    pub det_underflows: u64,
    pub sector_ties: u64,
    pub occupied_zero_modes: u64,
}

impl RunCounters {
    fn merge(&mut self, o: &RunCounters) {
        self.correlator_order_violations += o.correlator_order_violations;
        self.predicate_disagreements += o.predicate_disagreements;
        self.det_underflows += o.det_underflows;
        self.sector_ties += o.sector_ties;
        self.occupied_zero_modes += o.occupied_zero_modes;
    }
}

/// Counts over pairs admitted by the configured separation filter, with the
/// earliest hit (smallest k, then pair) kept for replay.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilteredStats {
    pub pairs_admitted: u64,
    pub entangled_pairs: u64,
    pub nonlocal_pairs: u64,
    pub first_entangled: Option<HitProvenance>,
    pub first_nonlocal: Option<HitProvenance>,
}

fn offer_first(slot: &mut Option<HitProvenance>, cand: HitProvenance) {
    let replace = match slot {
        None => true,
        Some(cur) => (cand.k, cand.i, cand.j) < (cur.k, cur.i, cur.j),
    };
    if replace {
        *slot = Some(cand);
    }
}

impl FilteredStats {
    fn merge(&mut self, o: &FilteredStats) {
        self.pairs_admitted += o.pairs_admitted;
        self.entangled_pairs += o.entangled_pairs;
        self.nonlocal_pairs += o.nonlocal_pairs;
        if let Some(h) = o.first_entangled {
            offer_first(&mut self.first_entangled, h);
        }
        if let Some(h) = o.first_nonlocal {
            offer_first(&mut self.first_nonlocal, h);
        }
    }
}

/// Bootstrap percentile intervals (2.5%–97.5%) for the ensemble means,
/// resampling realizations jointly with a seed derived from the master.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub replicates: u32,
    pub m_tangle_ci: (f64, f64),
    pub q_nl_normalized_ci: (f64, f64),
}

const BOOTSTRAP_REPLICATES: u32 = 200;
const BOOTSTRAP_SALT: u64 = 0xB007_57A9_0B5E_ED17;

fn bootstrap_summary(master_seed: u64, ms: &[f64], qs: &[f64]) -> Option<BootstrapSummary> {
    let n = ms.len();
    if n == 0 {
        return None;
    }
    debug_assert_eq!(n, qs.len());
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(master_seed ^ BOOTSTRAP_SALT));
    let b = BOOTSTRAP_REPLICATES as usize;
    let mut m_reps = Vec::with_capacity(b);
    let mut q_reps = Vec::with_capacity(b);
    for _ in 0..b {
        let (mut sm, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let idx = rng.random_range(0..n);
            sm += ms[idx];
            sq += qs[idx];
        }
        m_reps.push(sm / n as f64);
        q_reps.push(sq / n as f64);
    }
    m_reps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    q_reps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = |q: f64| (((b - 1) as f64) * q).round() as usize;
    Some(BootstrapSummary {
        replicates: BOOTSTRAP_REPLICATES,
        m_tangle_ci: (m_reps[idx(0.025)], m_reps[idx(0.975)]),
        q_nl_normalized_ci: (q_reps[idx(0.025)], q_reps[idx(0.975)]),
    })
}

/// Mergeable result of an ensemble run. Serialization carries everything
/// except the per-realization records; a merged-from-disk accumulator
/// therefore reports pooled means (1e-9 contract) and drops the bootstrap,
/// while in-memory merges that still hold all records rebuild both exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleAccumulator {
    pub version: u32,
    pub fingerprint: String,
    pub master_seed: u64,
    pub realization_count: u64,
    /// Disjoint (first_k, count) windows covered so far, sorted.
    pub windows: Vec<(u64, u64)>,
    pub histograms: Vec<Histogram>,
    pub m_tangle: MeanAccumulator,
    pub q_nl_normalized: MeanAccumulator,
    pub extremes: Extremes,
    pub filtered: FilteredStats,
    pub counters: RunCounters,
    pub bootstrap: Option<BootstrapSummary>,
    #[serde(skip)]
    pub records: Vec<RealizationRecord>,
}

impl EnsembleAccumulator {
    /// Zero-realization accumulator: the merge identity for its config.
    pub fn empty(config: &EnsembleConfig) -> Self {
        EnsembleAccumulator {
            version: ACCUMULATOR_FORMAT_VERSION,
            fingerprint: config.fingerprint(),
            master_seed: config.master_seed,
            realization_count: 0,
            windows: vec![],
            histograms: config
                .histograms
                .iter()
                .cloned()
                .map(Histogram::new)
                .collect(),
            m_tangle: MeanAccumulator::default(),
            q_nl_normalized: MeanAccumulator::default(),
            extremes: Extremes::default(),
            filtered: FilteredStats::default(),
            counters: RunCounters::default(),
            bootstrap: None,
            records: vec![],
        }
    }
}

struct WorkerState {
    histograms: Vec<Histogram>,
    extremes: Extremes,
    filtered: FilteredStats,
    counters: RunCounters,
    records: Vec<RealizationRecord>,
}

impl WorkerState {
    fn new(config: &EnsembleConfig) -> Self {
        WorkerState {
            histograms: config
                .histograms
                .iter()
                .cloned()
                .map(Histogram::new)
                .collect(),
            extremes: Extremes::default(),
            filtered: FilteredStats::default(),
            counters: RunCounters::default(),
            records: vec![],
        }
    }

    fn absorb_realization(&mut self, config: &EnsembleConfig, k: u64) -> Result<()> {
        let seed = derive_seed(config.master_seed, k);
        let wrap = |e: Error| Error::Realization {
            seed,
            source: Box::new(e),
        };
        let chain =
            build_chain(config.model, config.length, config.disorder, seed).map_err(wrap)?;
        let sol = ground_state_correlations(&chain).map_err(wrap)?;
        let mut sweep = all_pairs(&sol, config.max_separation).map_err(wrap)?;
        let measure_counters = annotate_pairs(&mut sweep.pairs);
        check_pair_properties(config.length, &sweep.pairs).map_err(wrap)?;
        let summary = if config.full_window() {
            Some(summarize_realization(config.length, &sweep.pairs).map_err(wrap)?)
        } else {
            None
        };

        self.counters.correlator_order_violations += measure_counters.correlator_order_violations;
        self.counters.predicate_disagreements += measure_counters.predicate_disagreements;
        self.counters.det_underflows += sweep.det_underflow_count;
        self.counters.sector_ties += u64::from(sol.sector_tie);
        self.counters.occupied_zero_modes += u64::from(sol.occupied_zero_mode);

        for p in &sweep.pairs {
            for h in &mut self.histograms {
                h.record_pair(p);
            }
            self.extremes.offer_pair(p, seed);
            if config.separation_filter.admits(p.separation) {
                self.filtered.pairs_admitted += 1;
                let hit = HitProvenance {
                    k,
                    seed,
                    i: p.i,
                    j: p.j,
                    separation: p.separation,
                };
                if p.concurrence > 0.0 {
                    self.filtered.entangled_pairs += 1;
                    offer_first(&mut self.filtered.first_entangled, hit);
                }
                if p.nonlocal {
                    self.filtered.nonlocal_pairs += 1;
                    offer_first(&mut self.filtered.first_nonlocal, hit);
                }
            }
        }
        self.records.push(RealizationRecord { k, seed, summary });
        Ok(())
    }

    fn merge(&mut self, other: WorkerState) -> Result<()> {
        for (a, b) in self.histograms.iter_mut().zip(&other.histograms) {
            a.merge(b)?;
        }
        self.extremes.absorb(&other.extremes);
        self.filtered.merge(&other.filtered);
        self.counters.merge(&other.counters);
        self.records.extend(other.records);
        Ok(())
    }
}

/// Scalar aggregates from k-sorted records: one fixed summation tree,
/// independent of how the records were produced.
fn aggregates_from_records(
    master_seed: u64,
    records: &[RealizationRecord],
) -> (MeanAccumulator, MeanAccumulator, Option<BootstrapSummary>) {
    let ms: Vec<f64> = records
        .iter()
        .filter_map(|r| r.summary.map(|s| s.m_tangle))
        .collect();
    let qs: Vec<f64> = records
        .iter()
        .filter_map(|r| r.summary.map(|s| s.q_nl_normalized))
        .collect();
    (
        MeanAccumulator::from_values(&ms),
        MeanAccumulator::from_values(&qs),
        bootstrap_summary(master_seed, &ms, &qs),
    )
}

/// Run the full pipeline over the configured realization window.
pub fn run_ensemble(config: &EnsembleConfig) -> Result<EnsembleAccumulator> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.worker_count)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let first = config.first_realization;
    let mut state = pool.install(|| {
        (first..first + config.realizations)
            .into_par_iter()
            .try_fold(
                || WorkerState::new(config),
                |mut st, k| {
                    st.absorb_realization(config, k)?;
                    Ok(st)
                },
            )
            .try_reduce(
                || WorkerState::new(config),
                |mut a, b| {
                    a.merge(b)?;
                    Ok(a)
                },
            )
    })?;
    state.records.sort_unstable_by_key(|r| r.k);
    let (m_tangle, q_nl_normalized, bootstrap) =
        aggregates_from_records(config.master_seed, &state.records);
    Ok(EnsembleAccumulator {
        version: ACCUMULATOR_FORMAT_VERSION,
        fingerprint: config.fingerprint(),
        master_seed: config.master_seed,
        realization_count: config.realizations,
        windows: vec![(first, config.realizations)],
        histograms: state.histograms,
        m_tangle,
        q_nl_normalized,
        extremes: state.extremes,
        filtered: state.filtered,
        counters: state.counters,
        bootstrap,
        records: state.records,
    })
}

fn merged_windows(a: &[(u64, u64)], b: &[(u64, u64)]) -> Result<Vec<(u64, u64)>> {
    let mut all: Vec<(u64, u64)> = a.iter().chain(b).copied().collect();
    all.sort_unstable();
    let mut out: Vec<(u64, u64)> = Vec::with_capacity(all.len());
    for (start, count) in all {
        match out.last_mut() {
            Some((s, c)) if *s + *c > start => {
                return Err(Error::Merge(format!(
                    "realization windows overlap: ({s}, {c}) and ({start}, {count})"
                )));
            }
            Some((s, c)) if *s + *c == start => *c += count,
            _ => out.push((start, count)),
        }
    }
    Ok(out)
}

/// Merge two accumulators of the same logical ensemble (equal fingerprints,
/// disjoint windows). Counts and extremes combine exactly; sums pool.
pub fn merge(mut a: EnsembleAccumulator, b: EnsembleAccumulator) -> Result<EnsembleAccumulator> {
    if a.version != b.version {
        return Err(Error::Merge(format!(
            "format versions differ: {} vs {}",
            a.version, b.version
        )));
    }
    if a.fingerprint != b.fingerprint {
        return Err(Error::Merge("config fingerprints differ".into()));
    }
    a.windows = merged_windows(&a.windows, &b.windows)?;
    for (x, y) in a.histograms.iter_mut().zip(&b.histograms) {
        x.merge(y)?;
    }
    a.realization_count += b.realization_count;
    a.extremes.absorb(&b.extremes);
    a.filtered.merge(&b.filtered);
    a.counters.merge(&b.counters);
    a.records.extend(b.records);
    a.records.sort_unstable_by_key(|r| r.k);
    if a.records.len() as u64 == a.realization_count {
        // Every record in hand: rebuild the aggregates through the fixed
        // tree so shard merges equal the unsharded run bit for bit.
        let (m, q, boot) = aggregates_from_records(a.master_seed, &a.records);
        a.m_tangle = m;
        a.q_nl_normalized = q;
        a.bootstrap = boot;
    } else {
        a.m_tangle.merge(&b.m_tangle);
        a.q_nl_normalized.merge(&b.q_nl_normalized);
        a.bootstrap = None;
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small_config() -> EnsembleConfig {
        EnsembleConfig {
            model: ChainModel::Uncorrelated,
            length: 8,
            disorder: DisorderSpec::power_law(2.0),
            realizations: 40,
            master_seed: 11,
            first_realization: 0,
            max_separation: None,
            separation_filter: SeparationFilter::All,
            histograms: vec![
                HistogramSpec::default_cxx(SeparationFilter::All),
                HistogramSpec::default_fidelity(SeparationFilter::All),
            ],
            worker_count: 1,
        }
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let mut seeds: Vec<u64> = (0..10_000).map(|k| derive_seed(99, k)).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 10_000);
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }

    #[test]
    fn fingerprint_tracks_semantic_fields_only() {
        let base = small_config();
        let fp = base.fingerprint();
        assert_eq!(fp.len(), 64);
        let mut workers = base.clone();
        workers.worker_count = 8;
        assert_eq!(fp, workers.fingerprint());
        let mut shard = base.clone();
        shard.first_realization = 20;
        shard.realizations = 20;
        assert_eq!(fp, shard.fingerprint());
        let mut other_seed = base.clone();
        other_seed.master_seed = 12;
        assert_ne!(fp, other_seed.fingerprint());
        let mut other_d = base;
        other_d.disorder = DisorderSpec::power_law(2.5);
        assert_ne!(fp, other_d.fingerprint());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let one = run_ensemble(&small_config()).unwrap();
        let mut cfg = small_config();
        cfg.worker_count = 4;
        let four = run_ensemble(&cfg).unwrap();
        assert_eq!(one, four);
        assert_eq!(
            serde_json::to_string(&one).unwrap(),
            serde_json::to_string(&four).unwrap()
        );
    }

    #[test]
    fn sharded_runs_merge_to_the_unsharded_run() {
        let whole = run_ensemble(&small_config()).unwrap();
        let shard = |first: u64| {
            let mut cfg = small_config();
            cfg.first_realization = first;
            cfg.realizations = 10;
            run_ensemble(&cfg).unwrap()
        };
        // Out-of-order merge on purpose.
        let merged = merge(shard(20), shard(0)).unwrap();
        let merged = merge(merged, shard(30)).unwrap();
        let merged = merge(merged, shard(10)).unwrap();
        assert_eq!(merged, whole);
        assert_eq!(merged.windows, vec![(0, 40)]);
    }

    #[test]
    fn merge_with_empty_is_identity() {
        let cfg = small_config();
        let x = run_ensemble(&cfg).unwrap();
        let merged = merge(x.clone(), EnsembleAccumulator::empty(&cfg)).unwrap();
        assert_eq!(merged, x);
        let merged = merge(EnsembleAccumulator::empty(&cfg), x.clone()).unwrap();
        assert_eq!(merged, x);
    }

    #[test]
    fn merge_rejects_mismatch_and_overlap() {
        let x = run_ensemble(&small_config()).unwrap();
        let mut other = small_config();
        other.master_seed = 5;
        let y = run_ensemble(&other).unwrap();
        assert!(matches!(merge(x.clone(), y), Err(Error::Merge(_))));
        assert!(matches!(merge(x.clone(), x.clone()), Err(Error::Merge(_))));
    }

    #[test]
    fn clean_chain_has_no_nonlocal_pairs() {
        let cfg = EnsembleConfig {
            model: ChainModel::Uniform,
            length: 16,
            disorder: DisorderSpec::power_law(0.0),
            realizations: 2,
            master_seed: 3,
            first_realization: 0,
            max_separation: None,
            separation_filter: SeparationFilter::All,
            histograms: vec![HistogramSpec::default_cxx(SeparationFilter::Exact {
                distances: vec![1],
            })],
            worker_count: 1,
        };
        let acc = run_ensemble(&cfg).unwrap();
        assert_eq!(acc.q_nl_normalized.mean(), Some(0.0));
        assert_eq!(acc.filtered.nonlocal_pairs, 0);
        assert_eq!(acc.counters.correlator_order_violations, 0);
        // Nearest-neighbor histogram saw L pairs per realization.
        assert_eq!(acc.histograms[0].in_range_count(), 32);
        assert_eq!(acc.histograms[0].out_of_range, 0);
        let nn = acc.extremes.max_abs_cxx.unwrap();
        assert!(
            nn.value < 0.0,
            "strongest cxx on a clean ring is the negative NN value"
        );
    }

    #[test]
    fn truncated_window_skips_summaries() {
        let mut cfg = small_config();
        cfg.max_separation = Some(2);
        cfg.realizations = 5;
        let acc = run_ensemble(&cfg).unwrap();
        assert_eq!(acc.m_tangle.count, 0);
        assert!(acc.bootstrap.is_none());
        assert!(acc.records.iter().all(|r| r.summary.is_none()));
        // 0 admitted into full-ring summaries but pairs still counted.
        assert_eq!(acc.filtered.pairs_admitted, 5 * 2 * 8);
    }

    #[test]
    fn mean_accumulator_statistics() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let acc = MeanAccumulator::from_values(&xs);
        assert_abs_diff_eq!(acc.mean().unwrap(), 2.5, epsilon = 1e-15);
        // Sample variance 5/3 over n=4.
        assert_abs_diff_eq!(
            acc.std_error().unwrap(),
            (5.0 / 12.0f64).sqrt(),
            epsilon = 1e-12
        );
        let mut a = MeanAccumulator::from_values(&xs[..2]);
        a.merge(&MeanAccumulator::from_values(&xs[2..]));
        assert_eq!(a.count, 4);
        assert_abs_diff_eq!(a.sum, acc.sum, epsilon = 1e-12);
    }

    #[test]
    fn bootstrap_is_deterministic_and_ordered() {
        let cfg = small_config();
        let a = run_ensemble(&cfg).unwrap().bootstrap.unwrap();
        let b = run_ensemble(&cfg).unwrap().bootstrap.unwrap();
        assert_eq!(a, b);
        assert!(a.m_tangle_ci.0 <= a.m_tangle_ci.1);
        assert!(a.q_nl_normalized_ci.0 <= a.q_nl_normalized_ci.1);
    }
}
