//! Point patterns and the metadata attached to each simulation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};

/// Proposal and rejection tallies of a rejection sampler.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub proposals: u64,
    pub rejections: u64,
    /// Rejections decided by a cheap dominating bound before the full density was evaluated.
    pub bound_rejections: u64,
}

impl Counters {
    pub fn bound_rate(&self) -> Option<f64> {
        (self.rejections > 0).then(|| self.bound_rejections as f64 / self.rejections as f64)
    }

    pub fn absorb(&mut self, other: &Counters) {
        self.proposals += other.proposals;
        self.rejections += other.rejections;
        self.bound_rejections += other.bound_rejections;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub model: String,
    pub algorithm: String,
    pub params: BTreeMap<String, f64>,
    pub seed: Option<u64>,
    pub counters: Counters,
    /// Points produced and then removed, e.g. by independent thinning.
    pub deleted: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl Provenance {
    pub fn new(model: &str, algorithm: &str) -> Self {
        Provenance { model: model.into(), algorithm: algorithm.into(), ..Default::default() }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointPattern {
    points: Vec<Vec<f64>>,
    domain: Domain,
    pub provenance: Provenance,
}

impl PointPattern {
    /// Builds a pattern, checking that every point has the domain's dimension and lies inside it.
    pub fn new(points: Vec<Vec<f64>>, domain: Domain, provenance: Provenance) -> Result<Self> {
        let d = domain.dim();
        for p in &points {
            if p.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.len() });
            }
            if !domain.contains(p) {
                return Err(Error::InvalidParameter(format!("point {p:?} lies outside the domain")));
            }
        }
        Ok(PointPattern { points, domain, provenance })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Vec<f64>> {
        self.points
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points in a sub-region.
    pub fn count_in(&self, region: &Domain) -> usize {
        self.points.iter().filter(|p| region.contains(p)).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_points_outside() {
        let dom = Domain::unit_box(2);
        assert!(PointPattern::new(vec![vec![0.5, 1.5]], dom.clone(), Provenance::default()).is_err());
        assert!(PointPattern::new(vec![vec![0.5]], dom.clone(), Provenance::default()).is_err());
        let p = PointPattern::new(vec![vec![0.5, 0.5]], dom, Provenance::default()).unwrap();
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn bound_rate_needs_rejections() {
        let c = Counters { proposals: 10, rejections: 4, bound_rejections: 1 };
        assert_eq!(c.bound_rate(), Some(0.25));
        assert_eq!(Counters::default().bound_rate(), None);
    }
}
