//! Bounded domains with closed-form signed boundary distance: polydisk,
//! ball, annulus, and a base domain minus finitely many closed balls.
//!
//! Every variant has an exact analytic distance function, so membership
//! with margin is a comparison, not an estimate.

use crate::linalg::dist2;
use crate::poly::{format_complex, parse_complex};
use num_complex::Complex64;
use rand::Rng;
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("annulus parameter must satisfy 0 < r < 1, got {0}")]
    BadAnnulusParameter(f64),
    #[error("removed ball is not strictly inside the base domain")]
    BallNotInterior,
    #[error("removed balls must be pairwise disjoint")]
    BallsOverlap,
    #[error("dimension mismatch: domain has {expected}, point has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("rejection sampling failed {0} consecutive times; margin infeasible")]
    InfeasibleMargin(usize),
    #[error("difference domains use a polydisk, ball, or annulus base")]
    BadDifferenceBase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedBall {
    #[serde(
        serialize_with = "serialize_center",
        deserialize_with = "deserialize_center"
    )]
    pub center: Vec<Complex64>,
    pub radius: f64,
}

fn serialize_center<S: Serializer>(c: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
    let strs: Vec<String> = c.iter().map(|z| format_complex(*z)).collect();
    strs.serialize(s)
}

fn deserialize_center<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
    let strs: Vec<String> = Vec::deserialize(d)?;
    strs.iter()
        .map(|s| parse_complex(s).map_err(|e| D::Error::custom(e.to_string())))
        .collect()
}

/// Geometric region the Bergman space lives on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Domain {
    Polydisk { dim: usize },
    Ball { dim: usize },
    Annulus { r: f64 },
    Difference {
        base: Box<Domain>,
        removed_balls: Vec<ClosedBall>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PointClass {
    Inside,
    BoundaryBand,
    Outside,
}

impl Domain {
    pub fn polydisk(dim: usize) -> Self {
        Domain::Polydisk { dim }
    }

    pub fn ball(dim: usize) -> Self {
        Domain::Ball { dim }
    }

    pub fn annulus(r: f64) -> Result<Self, DomainError> {
        if !(0.0 < r && r < 1.0) {
            return Err(DomainError::BadAnnulusParameter(r));
        }
        Ok(Domain::Annulus { r })
    }

    pub fn difference(base: Domain, removed: Vec<ClosedBall>) -> Result<Self, DomainError> {
        if matches!(base, Domain::Difference { .. }) {
            return Err(DomainError::BadDifferenceBase);
        }
        for b in &removed {
            if b.center.len() != base.dim() {
                return Err(DomainError::DimensionMismatch {
                    expected: base.dim(),
                    got: b.center.len(),
                });
            }
            // the ball's closure must sit strictly inside the base
            if base.signed_distance(&b.center).unwrap_or(-1.0) <= b.radius {
                return Err(DomainError::BallNotInterior);
            }
        }
        for (i, a) in removed.iter().enumerate() {
            for b in removed.iter().skip(i + 1) {
                if dist2(&a.center, &b.center) <= a.radius + b.radius {
                    return Err(DomainError::BallsOverlap);
                }
            }
        }
        Ok(Domain::Difference { base: Box::new(base), removed_balls: removed })
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        match self {
            Domain::Annulus { r } => {
                if !(0.0 < *r && *r < 1.0) {
                    return Err(DomainError::BadAnnulusParameter(*r));
                }
            }
            Domain::Difference { base, removed_balls } => {
                base.validate()?;
                Self::difference((**base).clone(), removed_balls.clone())?;
            }
            _ => {}
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Polydisk { dim } | Domain::Ball { dim } => *dim,
            Domain::Annulus { .. } => 1,
            Domain::Difference { base, .. } => base.dim(),
        }
    }

    pub fn is_difference(&self) -> bool {
        matches!(self, Domain::Difference { .. })
    }

    /// Positive inside, negative outside, zero on the boundary.
    pub fn signed_distance(&self, z: &[Complex64]) -> Result<f64, DomainError> {
        if z.len() != self.dim() {
            return Err(DomainError::DimensionMismatch { expected: self.dim(), got: z.len() });
        }
        Ok(match self {
            Domain::Polydisk { .. } => z
                .iter()
                .map(|c| 1.0 - c.norm())
                .fold(f64::INFINITY, f64::min),
            Domain::Ball { .. } => {
                1.0 - z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
            }
            Domain::Annulus { r } => {
                let m = z[0].norm();
                (m - r).min(1.0 / r - m)
            }
            Domain::Difference { base, removed_balls } => {
                let mut d = base.signed_distance(z)?;
                for b in removed_balls {
                    d = d.min(dist2(z, &b.center) - b.radius);
                }
                d
            }
        })
    }

    pub fn classify_point(&self, z: &[Complex64], margin: f64) -> Result<PointClass, DomainError> {
        let d = self.signed_distance(z)?;
        Ok(if d > margin {
            PointClass::Inside
        } else if d < -margin {
            PointClass::Outside
        } else {
            PointClass::BoundaryBand
        })
    }

    /// Radius of the smallest origin-centered ball containing the domain.
    pub fn circumradius(&self) -> f64 {
        match self {
            Domain::Polydisk { dim } => (*dim as f64).sqrt(),
            Domain::Ball { .. } => 1.0,
            Domain::Annulus { r } => 1.0 / r,
            Domain::Difference { base, .. } => base.circumradius(),
        }
    }

    pub fn sample_interior<R: Rng>(
        &self,
        n: usize,
        margin: f64,
        rng: &mut R,
    ) -> Result<Vec<Vec<Complex64>>, DomainError> {
        let mut out = Vec::with_capacity(n);
        let mut consecutive_failures = 0usize;
        while out.len() < n {
            let z = self.propose_point(rng);
            if self.classify_point(&z, margin)? == PointClass::Inside {
                out.push(z);
                consecutive_failures = 0;
            } else {
                consecutive_failures += 1;
                if consecutive_failures >= 10_000 {
                    return Err(DomainError::InfeasibleMargin(consecutive_failures));
                }
            }
        }
        Ok(out)
    }

    fn propose_point<R: Rng>(&self, rng: &mut R) -> Vec<Complex64> {
        match self {
            Domain::Polydisk { dim } | Domain::Ball { dim } => (0..*dim)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
            Domain::Annulus { r } => {
                let hi = 1.0 / r;
                vec![Complex64::new(
                    rng.gen_range(-hi..hi),
                    rng.gen_range(-hi..hi),
                )]
            }
            Domain::Difference { base, .. } => base.propose_point(rng),
        }
    }

    pub fn sample_boundary<R: Rng>(
        &self,
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<Vec<Complex64>>, DomainError> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.boundary_point(rng)?);
        }
        Ok(out)
    }

    fn boundary_point<R: Rng>(&self, rng: &mut R) -> Result<Vec<Complex64>, DomainError> {
        Ok(match self {
            Domain::Polydisk { dim } => {
                // one coordinate pinned to the unit circle, the rest inside
                let k = rng.gen_range(0..*dim);
                (0..*dim)
                    .map(|i| {
                        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
                        let r = if i == k {
                            1.0
                        } else {
                            rng.gen_range(0.0f64..1.0).sqrt()
                        };
                        Complex64::from_polar(r, theta)
                    })
                    .collect()
            }
            Domain::Ball { dim } => {
                let mut v: Vec<Complex64> = (0..*dim)
                    .map(|_| {
                        Complex64::new(gaussian(rng), gaussian(rng))
                    })
                    .collect();
                let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                for c in v.iter_mut() {
                    *c /= norm;
                }
                v
            }
            Domain::Annulus { r } => {
                let radius = if rng.gen_bool(0.5) { *r } else { 1.0 / r };
                vec![Complex64::from_polar(radius, rng.gen_range(0.0..std::f64::consts::TAU))]
            }
            Domain::Difference { base, removed_balls } => {
                // mix base boundary with the removed spheres
                let pick = rng.gen_range(0..=removed_balls.len());
                if pick == 0 {
                    base.boundary_point(rng)?
                } else {
                    let b = &removed_balls[pick - 1];
                    let d = b.center.len();
                    let mut v: Vec<Complex64> =
                        (0..d).map(|_| Complex64::new(gaussian(rng), gaussian(rng))).collect();
                    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                    v.iter_mut()
                        .zip(b.center.iter())
                        .map(|(c, ctr)| ctr + *c / norm * b.radius)
                        .collect()
                }
            }
        })
    }
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    (-2.0 * u.ln()).sqrt() * v.cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn ball_membership() {
        let d = Domain::ball(2);
        assert_eq!(
            d.classify_point(&[c(0.5, 0.0), c(0.0, 0.5)], 0.0).unwrap(),
            PointClass::Inside
        );
    }

    #[test]
    fn polydisk_boundary_band() {
        let d = Domain::polydisk(2);
        assert_eq!(
            d.classify_point(&[c(1.0, 0.0), c(0.0, 0.0)], 0.0).unwrap(),
            PointClass::BoundaryBand
        );
    }

    #[test]
    fn difference_excludes_removed_ball() {
        let d = Domain::difference(
            Domain::polydisk(2),
            vec![ClosedBall { center: vec![c(0.5, 0.0), c(0.0, 0.5)], radius: 0.01 }],
        )
        .unwrap();
        assert_eq!(
            d.classify_point(&[c(0.5, 0.0), c(0.0, 0.5)], 0.0).unwrap(),
            PointClass::Outside
        );
        assert_eq!(
            d.classify_point(&[c(0.3, 0.0), c(0.0, 0.5)], 0.0).unwrap(),
            PointClass::Inside
        );
    }

    #[test]
    fn annulus_parameter_validation() {
        assert!(Domain::annulus(1.5).is_err());
        assert!(Domain::annulus(0.5).is_ok());
    }

    #[test]
    fn interior_samples_classify_inside() {
        let mut r = rng::stream(42, 0, 0);
        for d in [
            Domain::polydisk(2),
            Domain::ball(2),
            Domain::annulus(0.5).unwrap(),
            Domain::difference(
                Domain::polydisk(2),
                vec![ClosedBall { center: vec![c(0.5, 0.0), c(0.0, 0.5)], radius: 0.01 }],
            )
            .unwrap(),
        ] {
            for z in d.sample_interior(50, 0.05, &mut r).unwrap() {
                assert_eq!(d.classify_point(&z, 0.05).unwrap(), PointClass::Inside);
            }
        }
    }

    #[test]
    fn interior_samples_respect_margin() {
        let mut r = rng::stream(42, 0, 1);
        let d = Domain::polydisk(2);
        for z in d.sample_interior(20, 0.1, &mut r).unwrap() {
            assert!(z.iter().all(|c| c.norm() <= 0.9 + 1e-12));
        }
        let a = Domain::annulus(0.5).unwrap();
        for z in a.sample_interior(20, 0.05, &mut r).unwrap() {
            let m = z[0].norm();
            assert!(m >= 0.55 - 1e-12 && m <= 1.95 + 1e-12);
        }
    }

    #[test]
    fn boundary_samples_lie_on_boundary() {
        let mut r = rng::stream(7, 0, 2);
        for d in [Domain::polydisk(2), Domain::ball(2), Domain::annulus(0.5).unwrap()] {
            for z in d.sample_boundary(30, &mut r).unwrap() {
                let s = d.signed_distance(&z).unwrap();
                assert!(s.abs() < 1e-12, "distance {s}");
                assert_eq!(d.classify_point(&z, 1e-9).unwrap(), PointClass::BoundaryBand);
            }
        }
    }

    #[test]
    fn monotone_in_margin() {
        let mut r = rng::stream(3, 0, 3);
        let d = Domain::ball(2);
        for z in d.sample_interior(20, 0.0, &mut r).unwrap() {
            if d.classify_point(&z, 0.2).unwrap() == PointClass::Inside {
                assert_eq!(d.classify_point(&z, 0.05).unwrap(), PointClass::Inside);
            }
        }
    }

    #[test]
    fn descriptor_round_trip() {
        let d = Domain::difference(
            Domain::polydisk(2),
            vec![ClosedBall { center: vec![c(0.5, 0.0), c(0.0, 0.5)], radius: 0.01 }],
        )
        .unwrap();
        let j = serde_json::to_string(&d).unwrap();
        let d2: Domain = serde_json::from_str(&j).unwrap();
        assert_eq!(d, d2);
        let simple: Domain = serde_json::from_str(r#"{"type":"annulus","r":0.5}"#).unwrap();
        assert_eq!(simple, Domain::annulus(0.5).unwrap());
        let pd: Domain = serde_json::from_str(r#"{"type":"polydisk","dim":2}"#).unwrap();
        assert_eq!(pd, Domain::polydisk(2));
    }

    #[test]
    fn removed_ball_validation() {
        assert!(matches!(
            Domain::difference(
                Domain::polydisk(2),
                vec![ClosedBall { center: vec![c(0.999, 0.0), c(0.0, 0.0)], radius: 0.01 }],
            ),
            Err(DomainError::BallNotInterior)
        ));
        assert!(matches!(
            Domain::difference(
                Domain::polydisk(2),
                vec![
                    ClosedBall { center: vec![c(0.5, 0.0), c(0.0, 0.0)], radius: 0.02 },
                    ClosedBall { center: vec![c(0.51, 0.0), c(0.0, 0.0)], radius: 0.02 },
                ],
            ),
            Err(DomainError::BallsOverlap)
        ));
    }
}
