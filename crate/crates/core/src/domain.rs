//! Simulation windows: axis-aligned boxes and Euclidean balls.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Domain {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl Domain {
    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        ensure(!lower.is_empty(), || "box must have at least one axis".into())?;
        ensure(
            lower.iter().zip(&upper).all(|(a, b)| a.is_finite() && b.is_finite() && a < b),
            || "box bounds must be finite with lower < upper".into(),
        )?;
        Ok(Domain::Box { lower, upper })
    }

    pub fn unit_box(dim: usize) -> Self {
        Domain::Box { lower: vec![0.0; dim], upper: vec![1.0; dim] }
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        ensure(!center.is_empty(), || "ball must have dimension >= 1".into())?;
        ensure(radius.is_finite() && radius > 0.0, || format!("ball radius must be positive, got {radius}"))?;
        Ok(Domain::Ball { center, radius })
    }

    pub fn centered_ball(dim: usize, radius: f64) -> Result<Self> {
        Self::ball(vec![0.0; dim], radius)
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { lower, .. } => lower.len(),
            Domain::Ball { center, .. } => center.len(),
        }
    }

    pub fn is_unit_box(&self) -> bool {
        matches!(self, Domain::Box { lower, upper }
            if lower.iter().all(|&a| a == 0.0) && upper.iter().all(|&b| b == 1.0))
    }

    pub fn volume(&self) -> f64 {
        match self {
            Domain::Box { lower, upper } => lower.iter().zip(upper).map(|(a, b)| b - a).product(),
            Domain::Ball { center, radius } => ball_volume(center.len(), *radius),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            Domain::Box { lower, upper } => {
                x.iter().zip(lower.iter().zip(upper)).all(|(v, (a, b))| *a <= *v && *v <= *b)
            }
            Domain::Ball { center, radius } => {
                x.iter().zip(center).map(|(v, c)| (v - c) * (v - c)).sum::<f64>() <= radius * radius
            }
        }
    }

    /// Euclidean distance from an interior point to the boundary.
    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        match self {
            Domain::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (a, b))| (v - a).min(b - v))
                .fold(f64::INFINITY, f64::min),
            Domain::Ball { center, radius } => {
                radius - x.iter().zip(center).map(|(v, c)| (v - c) * (v - c)).sum::<f64>().sqrt()
            }
        }
    }

    /// Volume of `W ∩ (W + h)`.
    pub fn translation_overlap(&self, h: &[f64]) -> f64 {
        match self {
            Domain::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .zip(h)
                .map(|((a, b), hi)| (b - a - hi.abs()).max(0.0))
                .product(),
            Domain::Ball { center, radius } => {
                let t: f64 = h.iter().map(|v| v * v).sum::<f64>().sqrt();
                lens_volume(center.len(), *radius, t)
            }
        }
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.sample_uniform_into(rng, &mut out);
        out
    }

    pub fn sample_uniform_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            Domain::Box { lower, upper } => {
                for ((o, a), b) in out.iter_mut().zip(lower).zip(upper) {
                    *o = a + (b - a) * rng.random::<f64>();
                }
            }
            Domain::Ball { center, radius } => {
                let d = center.len();
                match d {
                    1 => out[0] = center[0] + radius * (2.0 * rng.random::<f64>() - 1.0),
                    2 => {
                        let r = radius * rng.random::<f64>().sqrt();
                        let th = std::f64::consts::TAU * rng.random::<f64>();
                        out[0] = center[0] + r * th.cos();
                        out[1] = center[1] + r * th.sin();
                    }
                    _ => {
                        let mut norm = 0.0;
                        for o in out.iter_mut() {
                            *o = rng.sample(StandardNormal);
                            norm += *o * *o;
                        }
                        let r = radius * rng.random::<f64>().powf(1.0 / d as f64) / norm.sqrt();
                        for (o, c) in out.iter_mut().zip(center) {
                            *o = c + *o * r;
                        }
                    }
                }
            }
        }
    }

    /// Axis-aligned bounding box as `(lower, upper)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Domain::Box { lower, upper } => (lower.clone(), upper.clone()),
            Domain::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
        }
    }
}

/// Volume of a `d`-ball of radius `r`.
pub fn ball_volume(d: usize, r: f64) -> f64 {
    let df = d as f64;
    (0.5 * df * std::f64::consts::PI.ln() - crate::special::ln_gamma(0.5 * df + 1.0)).exp() * r.powi(d as i32)
}

// Intersection volume of two balls of radius r whose centres are t apart.
fn lens_volume(d: usize, r: f64, t: f64) -> f64 {
    use std::f64::consts::PI;
    if t >= 2.0 * r {
        return 0.0;
    }
    match d {
        1 => 2.0 * r - t,
        2 => 2.0 * r * r * (t / (2.0 * r)).acos() - 0.5 * t * (4.0 * r * r - t * t).sqrt(),
        3 => PI / 12.0 * (4.0 * r + t) * (2.0 * r - t).powi(2),
        _ => {
            // two caps of height r - t/2, by the regularized incomplete beta
            // integral evaluated with a fine midpoint rule
            let h = r - 0.5 * t;
            let n = 4000;
            let mut s = 0.0;
            for i in 0..n {
                let z = r - h + h * (i as f64 + 0.5) / n as f64;
                s += ball_volume(d - 1, (r * r - z * z).max(0.0).sqrt());
            }
            2.0 * s * h / n as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    #[test]
    fn volumes() {
        assert!((Domain::unit_box(3).volume() - 1.0).abs() < 1e-15);
        assert!((ball_volume(2, 1.0) - std::f64::consts::PI).abs() < 1e-14);
        assert!((ball_volume(3, 2.0) - 4.0 / 3.0 * std::f64::consts::PI * 8.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_domains() {
        assert!(Domain::new_box(vec![0.0], vec![0.0]).is_err());
        assert!(Domain::ball(vec![0.0, 0.0], -1.0).is_err());
        assert!(matches!(
            Domain::new_box(vec![0.0], vec![1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn lens_matches_monte_carlo_in_dim_two() {
        let dom = Domain::centered_ball(2, 1.0).unwrap();
        let h = [0.7, 0.0];
        let mut rng = stream_rng(3, 0);
        let n = 200_000;
        let mut hits = 0;
        for _ in 0..n {
            let x = dom.sample_uniform(&mut rng);
            if dom.contains(&[x[0] - h[0], x[1] - h[1]]) {
                hits += 1;
            }
        }
        let mc = hits as f64 / n as f64 * dom.volume();
        assert!((mc - dom.translation_overlap(&h)).abs() < 0.02);
    }

    #[test]
    fn general_lens_agrees_with_closed_form() {
        for t in [0.0, 0.3, 1.1, 1.9] {
            let closed = lens_volume(3, 1.0, t);
            // force the generic path by evaluating the cap integral directly
            let h: f64 = 1.0 - 0.5 * t;
            let n = 4000;
            let mut s = 0.0;
            for i in 0..n {
                let z = 1.0 - h + h * (i as f64 + 0.5) / n as f64;
                s += ball_volume(2, (1.0 - z * z).max(0.0).sqrt());
            }
            assert!((2.0 * s * h / n as f64 - closed).abs() < 1e-6);
        }
    }

    proptest! {
        #[test]
        fn uniform_samples_lie_inside(seed in 0u64..1000, d in 1usize..5) {
            let mut rng = stream_rng(seed, 0);
            let b = Domain::centered_ball(d, 1.5).unwrap();
            let q = Domain::new_box(vec![-1.0; d], vec![2.0; d]).unwrap();
            for _ in 0..20 {
                prop_assert!(b.contains(&b.sample_uniform(&mut rng)));
                prop_assert!(q.contains(&q.sample_uniform(&mut rng)));
            }
        }
    }
}
