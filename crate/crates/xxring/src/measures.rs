//! Entanglement and nonlocality measures for pair reduced density matrices.
//!
//! Zero magnetization and U(1) symmetry confine the pair state to an
//! X-shaped density matrix fixed entirely by c^xx (= c^yy) and c^zz, so the
//! singlet fidelity, concurrence and the Horodecki CHSH maximum all reduce
//! to closed forms in the two correlators.
//!
//! At strong disorder the many-body gap collapses below floating-point
//! resolution (a far singlet with an exponentially small effective coupling)
//! and the resolved state is one member of a quasi-degenerate multiplet.
//! Such members may carry triplet weight (c^xx > 0) on a pair; the
//! fidelity-based concurrence is blind to that channel, which is why the
//! nonlocal-implies-entangled assertion goes through [`x_state_concurrence`]
//! rather than the reported concurrence.

use crate::correlators::PairObservables;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// |c^xx| above 1/(4√2) is equivalent to CHSH violation whenever
/// |c^xx| ≥ |c^zz|; the sweep counts pairs where the shortcut and the full
/// Horodecki criterion disagree.
pub const NONLOCAL_CXX_THRESHOLD: f64 = 0.25 / std::f64::consts::SQRT_2;
/// Slack for the |c^xx| ≥ |c^zz| ordering before a pair counts as violating
/// it.
pub const CORRELATOR_ORDER_TOL: f64 = 1e-9;
/// Slack on the monogamy bound (2/L)ΣC² ≤ 1.
pub const TANGLE_BOUND_TOL: f64 = 1e-9;

/// Slack before a CHSH-violating pair with a vanishing entanglement witness
/// counts as a hard property violation; keeps measure-zero boundary pairs
/// (B barely above 2) from tripping on rounding alone.
const ENTANGLEMENT_WITNESS_TOL: f64 = 1e-12;
/// Slack on the Toner-Verstraete CHSH monogamy bound B₁² + B₂² ≤ 8 for two
/// violations sharing a site. The correlated model builds symmetric trimers
/// whose two pairs sit exactly at B = 2, so both can land a rounding error
/// past the strict threshold; the quantitative bound tolerates that while
/// still catching genuinely incompatible correlators.
const MONOGAMY_BELL_TOL: f64 = 1e-9;

/// Overlap with the singlet, F = 1/4 - 2c^xx - c^zz (uses c^yy = c^xx).
pub fn singlet_fidelity(cxx: f64, czz: f64) -> f64 {
    0.25 - 2.0 * cxx - czz
}

/// Concurrence through the singlet fidelity: C = max(0, 2F - 1). This is
/// the production measure; it coincides with the Wootters concurrence
/// whenever c^xx <= 0.
pub fn concurrence_from_fidelity(fidelity: f64) -> f64 {
    (2.0 * fidelity - 1.0).max(0.0)
}

/// Bona fide Wootters concurrence of the zero-magnetization X state,
/// C = max(0, 4|c^xx| - 1/2 - 2c^zz). A (quasi-)degenerate ground multiplet
/// can put triplet weight on a pair (c^xx > 0); the singlet-channel
/// concurrence reads zero there even though the pair is entangled, so the
/// nonlocal-implies-entangled invariant is checked against this form.
pub fn x_state_concurrence(cxx: f64, czz: f64) -> f64 {
    (4.0 * cxx.abs() - 0.5 - 2.0 * czz).max(0.0)
}

/// Horodecki maximum of the CHSH expression over measurement settings:
/// B = 8·√(max(2(c^xx)², (c^xx)² + (c^zz)²)).
pub fn bell_parameter(cxx: f64, czz: f64) -> f64 {
    8.0 * (2.0 * cxx * cxx).max(cxx * cxx + czz * czz).sqrt()
}

/// CHSH violation is strict: B > 2.
pub fn is_nonlocal(bell: f64) -> bool {
    bell > 2.0
}

/// Soft-property counters accumulated over a sweep. These record expected
/// physics (not errors): the ensemble reports them but does not abort.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureCounters {
    /// Pairs with |c^xx| < |c^zz| - tol.
    pub correlator_order_violations: u64,
    /// Pairs where B > 2 and |c^xx| > 1/(4√2) disagree.
    pub predicate_disagreements: u64,
}

impl MeasureCounters {
    pub fn merge(&mut self, other: &MeasureCounters) {
        self.correlator_order_violations += other.correlator_order_violations;
        self.predicate_disagreements += other.predicate_disagreements;
    }
}

/// Fill the measure fields of every pair from its correlators.
pub fn annotate_pairs(pairs: &mut [PairObservables]) -> MeasureCounters {
    let mut counters = MeasureCounters::default();
    for p in pairs {
        p.fidelity = singlet_fidelity(p.cxx, p.czz);
        p.concurrence = concurrence_from_fidelity(p.fidelity);
        p.bell = bell_parameter(p.cxx, p.czz);
        p.nonlocal = is_nonlocal(p.bell);
        if p.cxx.abs() < p.czz.abs() - CORRELATOR_ORDER_TOL {
            counters.correlator_order_violations += 1;
        }
        if p.nonlocal != (p.cxx.abs() > NONLOCAL_CXX_THRESHOLD) {
            counters.predicate_disagreements += 1;
        }
    }
    counters
}

/// Hard invariants of an annotated pair set: every nonlocal pair is
/// entangled, and CHSH monogamy holds at every site (Toner-Verstraete,
/// B₁² + B₂² ≤ 8 for any two violations sharing a spin — the quantitative
/// form of "no site has two nonlocal partners" that survives exact-boundary
/// pairs).
pub fn check_pair_properties(l: usize, pairs: &[PairObservables]) -> Result<()> {
    let mut site_bell = vec![0.0f64; l];
    for p in pairs {
        if p.i >= l || p.j >= l || p.i >= p.j {
            return Err(Error::BadPair { i: p.i, j: p.j, l });
        }
        if p.nonlocal {
            if 4.0 * p.cxx.abs() - 0.5 - 2.0 * p.czz <= -ENTANGLEMENT_WITNESS_TOL {
                return Err(Error::PropertyViolation(format!(
                    "pair ({}, {}) violates CHSH (B = {:.6}) but its Wootters concurrence is zero",
                    p.i, p.j, p.bell
                )));
            }
            for site in [p.i, p.j] {
                let prior = site_bell[site];
                if prior > 0.0 && prior * prior + p.bell * p.bell > 8.0 + MONOGAMY_BELL_TOL {
                    return Err(Error::PropertyViolation(format!(
                        "site {site} shares CHSH violations with B² sum {:.9}; \
                         monogamy caps it at 8",
                        prior * prior + p.bell * p.bell
                    )));
                }
                site_bell[site] = prior.max(p.bell);
            }
        }
    }
    Ok(())
}

/// Realization-level aggregates over the full pair window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealizationSummary {
    /// M = (2/L) Σ_pairs C², the mean squared concurrence against the
    /// monogamy normalization.
    pub m_tangle: f64,
    /// Number of CHSH-violating pairs.
    pub q_nl: u64,
    /// 2·q_nl/L: monogamy caps nonlocal pairs at a perfect matching.
    pub q_nl_normalized: f64,
    /// Largest ring distance over entangled pairs, 0 when none.
    pub max_ent_sep: usize,
    /// Largest ring distance over nonlocal pairs, 0 when none.
    pub max_nl_sep: usize,
}

/// Summarize one realization. Requires the complete L(L-1)/2 pair window
/// (the aggregates are meaningless on a truncated one) and re-checks the
/// hard invariants plus the monogamy bound on M.
pub fn summarize_realization(l: usize, pairs: &[PairObservables]) -> Result<RealizationSummary> {
    let expected = l * (l - 1) / 2;
    if pairs.len() != expected {
        return Err(Error::IncompletePairs {
            expected,
            got: pairs.len(),
        });
    }
    check_pair_properties(l, pairs)?;
    let mut sum_c2 = 0.0;
    let mut q_nl = 0u64;
    let mut max_ent_sep = 0usize;
    let mut max_nl_sep = 0usize;
    for p in pairs {
        sum_c2 += p.concurrence * p.concurrence;
        if p.concurrence > 0.0 {
            max_ent_sep = max_ent_sep.max(p.separation);
        }
        if p.nonlocal {
            q_nl += 1;
            max_nl_sep = max_nl_sep.max(p.separation);
        }
    }
    let m_tangle = 2.0 / l as f64 * sum_c2;
    if m_tangle > 1.0 + TANGLE_BOUND_TOL {
        return Err(Error::PropertyViolation(format!(
            "tangle sum M = {m_tangle} exceeds the monogamy bound"
        )));
    }
    Ok(RealizationSummary {
        m_tangle,
        q_nl,
        q_nl_normalized: 2.0 * q_nl as f64 / l as f64,
        max_ent_sep,
        max_nl_sep,
    })
}
