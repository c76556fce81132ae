//! Chain realizations and disorder sampling.
//!
//! Couplings J_i in (0, 1] are drawn either from the power-law distribution
//! P(J) = D^-1 J^(1/D - 1) (inverse CDF: J = u^D) or from a box distribution
//! uniform on (J_min, 1]. The pair-correlated model duplicates each draw on
//! adjacent bonds: {J_1, J_1, J_2, J_2, ...}.

use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Which disorder distribution the couplings are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisorderKind {
    /// P(J) = D^-1 J^(1/D-1) on (0,1]; strength is the exponent D >= 0.
    PowerLaw,
    /// Uniform on (J_min, 1]; strength is the lower cutoff J_min in (0,1].
    Box,
}

/// Distribution family plus its strength parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub kind: DisorderKind,
    pub strength: f64,
}

impl DisorderSpec {
    pub fn power_law(d: f64) -> Self {
        DisorderSpec {
            kind: DisorderKind::PowerLaw,
            strength: d,
        }
    }

    pub fn box_dist(j_min: f64) -> Self {
        DisorderSpec {
            kind: DisorderKind::Box,
            strength: j_min,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            DisorderKind::PowerLaw => {
                if !self.strength.is_finite() || self.strength < 0.0 {
                    return Err(Error::Config(format!(
                        "power-law exponent D must satisfy D >= 0, got {}",
                        self.strength
                    )));
                }
            }
            DisorderKind::Box => {
                if !self.strength.is_finite() || self.strength <= 0.0 || self.strength > 1.0 {
                    return Err(Error::Config(format!(
                        "box cutoff J_min must lie in (0, 1], got {}",
                        self.strength
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Disorder structure of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainModel {
    Uncorrelated,
    Correlated,
    Uniform,
}

/// One disorder realization: an even-length periodic ring of couplings.
///
/// `couplings[i]` is the bond between sites i and i+1 (0-based, site L-1
/// bonds back to site 0). Boundaries are always periodic; the two-site chain
/// is the degenerate case where the single physical bond is counted once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub length: usize,
    pub couplings: Vec<f64>,
    pub model: ChainModel,
}

impl ChainSpec {
    pub fn new(length: usize, couplings: Vec<f64>, model: ChainModel) -> Result<Self> {
        let spec = ChainSpec {
            length,
            couplings,
            model,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.length < 2 || self.length % 2 != 0 {
            return Err(Error::InvalidChain(format!(
                "length must be an even integer >= 2, got {}",
                self.length
            )));
        }
        if self.couplings.len() != self.length {
            return Err(Error::InvalidChain(format!(
                "expected {} couplings, got {}",
                self.length,
                self.couplings.len()
            )));
        }
        if let Some(j) = self
            .couplings
            .iter()
            .find(|j| !(j.is_finite() && **j > 0.0 && **j <= 1.0))
        {
            return Err(Error::InvalidChain(format!("coupling {j} outside (0, 1]")));
        }
        match self.model {
            ChainModel::Correlated => {
                for p in 0..self.length / 2 {
                    // Bit-exact equality is the contract for duplicated draws.
                    if self.couplings[2 * p] != self.couplings[2 * p + 1] {
                        return Err(Error::InvalidChain(format!(
                            "correlated chain must duplicate draws: J[{}] != J[{}]",
                            2 * p,
                            2 * p + 1
                        )));
                    }
                }
            }
            ChainModel::Uniform => {
                if self.couplings.iter().any(|&j| j != self.couplings[0]) {
                    return Err(Error::InvalidChain(
                        "uniform chain must have all couplings equal".into(),
                    ));
                }
            }
            ChainModel::Uncorrelated => {}
        }
        Ok(())
    }
}

/// Inverse-CDF draw from the power-law distribution, J = u^D.
/// At D = 0 the distribution degenerates to the clean chain (J = 1).
pub fn sample_powerlaw(d: f64, u: f64) -> f64 {
    debug_assert!(u > 0.0 && u <= 1.0);
    if d == 0.0 {
        1.0
    } else {
        // Guard the astronomically unlikely subnormal/zero tail so the
        // ChainSpec invariant J > 0 holds unconditionally.
        u.powf(d).max(f64::MIN_POSITIVE)
    }
}

/// Draw from the box distribution on (J_min, 1]: J = J_min + (1 - J_min) u.
pub fn sample_box(j_min: f64, u: f64) -> f64 {
    debug_assert!(u > 0.0 && u <= 1.0);
    j_min + (1.0 - j_min) * u
}

/// Uniform variate on (0, 1]; complementing excludes 0 so the power-law
/// inverse CDF stays in-domain.
#[inline]
fn next_open_unit(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Build one chain realization. Identical (model, L, dist, seed) inputs give
/// bit-identical chains on every platform and thread count.
pub fn build_chain(
    model: ChainModel,
    length: usize,
    dist: DisorderSpec,
    seed: u64,
) -> Result<ChainSpec> {
    if length < 2 || length % 2 != 0 {
        return Err(Error::InvalidChain(format!(
            "length must be an even integer >= 2, got {length}"
        )));
    }
    dist.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> f64 {
        let u = next_open_unit(rng);
        match dist.kind {
            DisorderKind::PowerLaw => sample_powerlaw(dist.strength, u),
            DisorderKind::Box => sample_box(dist.strength, u),
        }
    };
    let couplings = match model {
        ChainModel::Uniform => vec![1.0; length],
        ChainModel::Uncorrelated => (0..length).map(|_| draw(&mut rng)).collect(),
        ChainModel::Correlated => {
            let mut out = Vec::with_capacity(length);
            for _ in 0..length / 2 {
                let j = draw(&mut rng);
                out.push(j);
                out.push(j);
            }
            out
        }
    };
    ChainSpec::new(length, couplings, model)
}
