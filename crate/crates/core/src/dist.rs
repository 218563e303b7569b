//! Replica-count (degree) distributions.
//!
//! A distribution is written as a polynomial `Λ(x) = Σ Λ_ℓ x^ℓ`, where
//! `Λ_ℓ` is the probability that a user transmits `ℓ` replicas. The text
//! form accepted by [`DegreeDistribution::parse`] mirrors that notation,
//! e.g. `0.5465x^2+0.1623x^3+0.2912x^8`.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};

/// Maximum deviation of the coefficient sum from 1 that is silently renormalized.
pub const SUM_TOLERANCE: f64 = 1e-6;

/// Below this deviation the coefficients are kept bit-for-bit.
const RENORMALIZE_FLOOR: f64 = 1e-12;

/// A validated degree distribution.
///
/// Immutable after construction. Sampling takes an externally owned RNG, so
/// one instance can be shared across worker threads.
#[derive(Clone)]
pub struct DegreeDistribution {
    terms: Vec<(u32, f64)>,
    avg_degree: f64,
    sampler: WeightedIndex<f64>,
}

impl DegreeDistribution {
    /// Builds a distribution from `(degree, probability)` pairs.
    ///
    /// Terms may be given in any order; they are stored sorted by degree.
    /// Coefficients whose sum is within [`SUM_TOLERANCE`] of 1 are rescaled to
    /// sum to 1, anything further off is rejected.
    pub fn from_terms(terms: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut terms: Vec<(u32, f64)> = terms.into_iter().collect();
        if terms.is_empty() {
            return Err(Error::Validation("degree distribution has no terms".into()));
        }
        for &(degree, prob) in &terms {
            if degree < 1 {
                return Err(Error::DegreeTooSmall(degree));
            }
            if !(prob.is_finite() && prob > 0.0 && prob <= 1.0 + SUM_TOLERANCE) {
                return Err(Error::BadProbability { degree, prob });
            }
        }
        terms.sort_by_key(|&(d, _)| d);
        if let Some(w) = terms.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateDegree(w[0].0));
        }

        let sum: f64 = terms.iter().map(|&(_, p)| p).sum();
        let deviation = (sum - 1.0).abs();
        if deviation > SUM_TOLERANCE {
            return Err(Error::DistSum { sum });
        }
        if deviation > RENORMALIZE_FLOOR {
            for term in &mut terms {
                term.1 /= sum;
            }
        }

        if terms[0].0 == 1 {
            log::warn!(
                "degree distribution has a degree-1 term (Λ_1 = {}); users with one replica \
                 cannot benefit from interference cancellation",
                terms[0].1
            );
        }

        let avg_degree = terms.iter().map(|&(d, p)| d as f64 * p).sum();
        let sampler = WeightedIndex::new(terms.iter().map(|&(_, p)| p))
            .map_err(|e| Error::Validation(format!("degree distribution weights: {e}")))?;
        Ok(Self {
            terms,
            avg_degree,
            sampler,
        })
    }

    /// Parses the polynomial text form.
    pub fn parse(spec: &str) -> Result<Self> {
        let syntax = |reason: &str| Error::DistSyntax {
            input: spec.to_string(),
            reason: reason.to_string(),
        };
        let compact: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(syntax("empty polynomial"));
        }

        let mut terms = Vec::new();
        for raw in compact.split('+') {
            if raw.is_empty() {
                return Err(syntax("empty term"));
            }
            let Some(x_pos) = raw.find(['x', 'X']) else {
                // A bare constant is a degree-0 term.
                raw.parse::<f64>()
                    .map_err(|_| syntax(&format!("cannot parse term {raw:?}")))?;
                return Err(Error::DegreeTooSmall(0));
            };
            let (coef_text, rest) = raw.split_at(x_pos);
            let coef_text = coef_text.strip_suffix('*').unwrap_or(coef_text);
            let coef = if coef_text.is_empty() {
                1.0
            } else {
                coef_text
                    .parse::<f64>()
                    .map_err(|_| syntax(&format!("bad coefficient {coef_text:?}")))?
            };
            let exponent = &rest[1..];
            let degree = if exponent.is_empty() {
                1
            } else {
                let digits = exponent
                    .strip_prefix('^')
                    .ok_or_else(|| syntax(&format!("expected '^' in term {raw:?}")))?;
                digits
                    .parse::<u32>()
                    .map_err(|_| syntax(&format!("bad exponent {digits:?}")))?
            };
            terms.push((degree, coef));
        }
        Self::from_terms(terms)
    }

    /// `(degree, probability)` pairs sorted by degree.
    pub fn terms(&self) -> &[(u32, f64)] {
        &self.terms
    }

    /// Average number of replicas per user, `Σ ℓ Λ_ℓ`.
    pub fn avg_degree(&self) -> f64 {
        self.avg_degree
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.last().map(|&(d, _)| d).unwrap_or(0)
    }

    pub fn min_degree(&self) -> u32 {
        self.terms[0].0
    }

    /// Probability mass at `degree` (zero outside the support).
    pub fn prob(&self, degree: u32) -> f64 {
        self.terms
            .binary_search_by_key(&degree, |&(d, _)| d)
            .map(|i| self.terms[i].1)
            .unwrap_or(0.0)
    }

    /// Evaluates the node-perspective polynomial `Σ Λ_ℓ x^ℓ`.
    pub fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|&(d, p)| p * x.powi(d as i32)).sum()
    }

    /// Draws one replica count.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.terms[self.sampler.sample(rng)].0
    }
}

/// Free-function form of [`DegreeDistribution::parse`].
pub fn parse_distribution(spec: &str) -> Result<DegreeDistribution> {
    DegreeDistribution::parse(spec)
}

/// Free-function form of [`DegreeDistribution::sample`].
pub fn sample_degree<R: Rng + ?Sized>(dist: &DegreeDistribution, rng: &mut R) -> u32 {
    dist.sample(rng)
}

impl PartialEq for DegreeDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl fmt::Debug for DegreeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DegreeDistribution")
            .field("terms", &self.terms)
            .field("avg_degree", &self.avg_degree)
            .finish()
    }
}

/// Formats in the same polynomial syntax accepted by `parse`; `{}` on `f64`
/// prints the shortest round-tripping representation.
impl fmt::Display for DegreeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &(degree, prob)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            if prob != 1.0 {
                write!(f, "{prob}")?;
            }
            if degree == 1 {
                f.write_str("x")?;
            } else {
                write!(f, "x^{degree}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for DegreeDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}
