//! Points of the one-point compactification of n-space and the chordal metric.
//!
//! Chordal distances are Euclidean distances between stereographic images on the
//! sphere of diameter one tangent to `R^n` at the origin, so every distance lies in
//! `[0, 1]` and `h(0, ∞) = 1`.

use std::fmt;

use crate::error::{invalid, Result};

/// Absolute tolerance for comparisons of unit-scale reals.
pub const EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum ExtPoint {
    Finite(Vec<f64>),
    Infinity { n: usize },
}

impl ExtPoint {
    pub fn finite(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return invalid(format!("dimension must be at least 2, got {}", coords.len()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return invalid("coordinates must be finite");
        }
        Ok(ExtPoint::Finite(coords))
    }

    pub fn infinity(n: usize) -> Result<Self> {
        if n < 2 {
            return invalid(format!("dimension must be at least 2, got {n}"));
        }
        Ok(ExtPoint::Infinity { n })
    }

    pub fn origin(n: usize) -> Result<Self> {
        Self::finite(vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        match self {
            ExtPoint::Finite(c) => c.len(),
            ExtPoint::Infinity { n } => *n,
        }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, ExtPoint::Infinity { .. })
    }

    pub fn coords(&self) -> Option<&[f64]> {
        match self {
            ExtPoint::Finite(c) => Some(c),
            ExtPoint::Infinity { .. } => None,
        }
    }

    /// Stereographic image on the sphere `S^n(e_{n+1}/2, 1/2)` in `R^{n+1}`.
    pub fn to_sphere(&self) -> Vec<f64> {
        match self {
            ExtPoint::Finite(x) => {
                let s = norm_sq(x);
                let mut p: Vec<f64> = x.iter().map(|v| v / (1.0 + s)).collect();
                p.push(s / (1.0 + s));
                p
            }
            ExtPoint::Infinity { n } => {
                let mut p = vec![0.0; *n];
                p.push(1.0);
                p
            }
        }
    }

    /// Inverse of [`ExtPoint::to_sphere`]. The north pole maps to infinity.
    pub fn from_sphere(p: &[f64]) -> Self {
        let n = p.len() - 1;
        let denom = 1.0 - p[n];
        if denom <= f64::EPSILON {
            return ExtPoint::Infinity { n };
        }
        let x: Vec<f64> = p[..n].iter().map(|v| v / denom).collect();
        if x.iter().any(|v| !v.is_finite()) {
            ExtPoint::Infinity { n }
        } else {
            ExtPoint::Finite(x)
        }
    }
}

impl fmt::Display for ExtPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtPoint::Finite(c) => {
                let parts: Vec<String> = c.iter().map(|v| format!("{v}")).collect();
                write!(f, "({})", parts.join(" "))
            }
            ExtPoint::Infinity { .. } => write!(f, "inf"),
        }
    }
}

pub(crate) fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    norm_sq(x).sqrt()
}

pub(crate) fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn same_dim(x: &ExtPoint, y: &ExtPoint) -> Result<()> {
    if x.dim() != y.dim() {
        return invalid(format!("dimension mismatch: {} vs {}", x.dim(), y.dim()));
    }
    Ok(())
}

/// Chordal distance `h(x, y)`.
pub fn chordal_distance(x: &ExtPoint, y: &ExtPoint) -> Result<f64> {
    same_dim(x, y)?;
    Ok(match (x, y) {
        (ExtPoint::Infinity { .. }, ExtPoint::Infinity { .. }) => 0.0,
        (ExtPoint::Finite(a), ExtPoint::Infinity { .. })
        | (ExtPoint::Infinity { .. }, ExtPoint::Finite(a)) => 1.0 / (1.0 + norm_sq(a)).sqrt(),
        (ExtPoint::Finite(a), ExtPoint::Finite(b)) => {
            let d = dist(a, b) / ((1.0 + norm_sq(a)).sqrt() * (1.0 + norm_sq(b)).sqrt());
            d.min(1.0)
        }
    })
}

/// Largest pairwise chordal distance of a finite point list.
pub fn chordal_diameter(points: &[ExtPoint]) -> Result<f64> {
    let Some(first) = points.first() else {
        return invalid("chordal diameter of an empty set");
    };
    let mut best: f64 = 0.0;
    for (i, x) in points.iter().enumerate() {
        same_dim(first, x)?;
        for y in &points[i + 1..] {
            best = best.max(chordal_distance(x, y)?);
        }
    }
    Ok(best)
}

/// The involution `x ↦ -x/|x|^2`, with `0 ↔ ∞`.
///
/// `x` and its image are antipodal on the chordal sphere, so `h(x, antipodal(x)) = 1`.
pub fn antipodal(x: &ExtPoint) -> ExtPoint {
    match x {
        ExtPoint::Infinity { n } => ExtPoint::Finite(vec![0.0; *n]),
        ExtPoint::Finite(c) => {
            let s = norm_sq(c);
            if s == 0.0 {
                ExtPoint::Infinity { n: c.len() }
            } else {
                ExtPoint::Finite(c.iter().map(|v| -v / s).collect())
            }
        }
    }
}

/// Radius of the Euclidean ball `{|y| < R}` equal to the chordal ball `B*(0, t)`.
pub fn chordal_radius_to_euclidean(t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return invalid(format!("chordal radius must lie in (0, 1), got {t}"));
    }
    Ok(t / (1.0 - t * t).sqrt())
}

/// A chordal isometry of the compactified space sending a chosen centre to the origin.
///
/// Built from the reflection of the chordal sphere across the perpendicular bisector
/// of the centre's image and the south pole. The reflection is an involution, so the
/// chart is its own inverse, and as a Möbius map it preserves conformal moduli.
#[derive(Debug, Clone)]
pub struct ChordalChart {
    n: usize,
    // Unit normal of the mirror and a point on it, both in R^{n+1}.
    normal: Option<Vec<f64>>,
    mid: Vec<f64>,
}

impl ChordalChart {
    pub fn centered_at(x: &ExtPoint) -> Self {
        let n = x.dim();
        let p = x.to_sphere();
        let len = norm(&p);
        if len < 1e-300 {
            return ChordalChart { n, normal: None, mid: vec![0.0; n + 1] };
        }
        let normal: Vec<f64> = p.iter().map(|v| v / len).collect();
        let mid: Vec<f64> = p.iter().map(|v| v / 2.0).collect();
        ChordalChart { n, normal: Some(normal), mid }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn reflect(&self, p: &mut [f64]) {
        if let Some(u) = &self.normal {
            let s: f64 = p.iter().zip(&self.mid).zip(u).map(|((a, m), w)| (a - m) * w).sum();
            for (a, w) in p.iter_mut().zip(u) {
                *a -= 2.0 * s * w;
            }
        }
    }

    pub fn apply(&self, y: &ExtPoint) -> ExtPoint {
        let mut p = y.to_sphere();
        self.reflect(&mut p);
        ExtPoint::from_sphere(&p)
    }

    /// Chart image of a finite point; `None` when it lands on infinity.
    pub fn apply_finite(&self, y: &[f64]) -> Option<Vec<f64>> {
        match self.apply(&ExtPoint::Finite(y.to_vec())) {
            ExtPoint::Finite(c) => Some(c),
            ExtPoint::Infinity { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> ExtPoint {
        ExtPoint::finite(c.to_vec()).unwrap()
    }

    #[test]
    fn distance_examples() {
        let inf = ExtPoint::infinity(2).unwrap();
        assert!((chordal_distance(&p(&[0.0, 0.0]), &inf).unwrap() - 1.0).abs() < EPS);
        assert_eq!(chordal_distance(&p(&[0.3, -2.0]), &p(&[0.3, -2.0])).unwrap(), 0.0);
        let d = chordal_distance(&p(&[1.0, 0.0]), &p(&[-1.0, 0.0])).unwrap();
        assert!((d - 1.0).abs() < EPS);
        assert_eq!(chordal_distance(&inf, &inf).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let r = chordal_distance(&p(&[0.0, 0.0]), &p(&[0.0, 0.0, 0.0]));
        assert!(matches!(r, Err(crate::Error::InvalidArgument(_))));
        assert!(ExtPoint::finite(vec![1.0]).is_err());
    }

    #[test]
    fn diameter_examples() {
        let inf = ExtPoint::infinity(2).unwrap();
        assert_eq!(chordal_diameter(&[p(&[0.4, 0.1])]).unwrap(), 0.0);
        assert!((chordal_diameter(&[p(&[0.0, 0.0]), inf.clone()]).unwrap() - 1.0).abs() < EPS);
        // pairwise: h(0,∞)=1, h(0,e1)=1/√2, h(e1,∞)=1/√2
        let pts = [p(&[0.0, 0.0]), p(&[1.0, 0.0]), inf];
        assert!((chordal_diameter(&pts).unwrap() - 1.0).abs() < EPS);
        assert!(chordal_diameter(&[]).is_err());
    }

    #[test]
    fn antipodal_examples() {
        assert_eq!(antipodal(&p(&[1.0, 0.0])), p(&[-1.0, 0.0]));
        assert_eq!(antipodal(&p(&[0.0, 2.0])), p(&[0.0, -0.5]));
        assert!(antipodal(&p(&[0.0, 0.0])).is_infinity());
        assert_eq!(antipodal(&ExtPoint::infinity(3).unwrap()), p(&[0.0, 0.0, 0.0]));
        let x = p(&[0.0, 1.0]);
        assert!((chordal_distance(&x, &antipodal(&x)).unwrap() - 1.0).abs() < EPS);
    }

    #[test]
    fn sphere_roundtrip_and_radius() {
        let x = p(&[0.7, -1.3, 2.0]);
        let q = x.to_sphere();
        let back = ExtPoint::from_sphere(&q);
        for (a, b) in back.coords().unwrap().iter().zip(x.coords().unwrap()) {
            assert!((a - b).abs() < 1e-12);
        }
        // B*(0, √3/2) is the Euclidean ball of radius √3; B*(0, √2/2) the unit ball.
        assert!((chordal_radius_to_euclidean(3f64.sqrt() / 2.0).unwrap() - 3f64.sqrt()).abs() < 1e-12);
        assert!((chordal_radius_to_euclidean(2f64.sqrt() / 2.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chart_is_an_isometric_involution() {
        let centre = p(&[0.8, -0.4]);
        let chart = ChordalChart::centered_at(&centre);
        let img = chart.apply(&centre);
        assert!(norm(img.coords().unwrap()) < 1e-12);
        let a = p(&[0.1, 2.0]);
        let b = p(&[-3.0, 0.5]);
        let da = chordal_distance(&a, &b).unwrap();
        let db = chordal_distance(&chart.apply(&a), &chart.apply(&b)).unwrap();
        assert!((da - db).abs() < 1e-12);
        let back = chart.apply(&chart.apply(&a));
        assert!(chordal_distance(&back, &a).unwrap() < 1e-12);
        // the antipode of the centre goes to infinity
        assert!(chart.apply(&antipodal(&centre)).is_infinity());
    }
}
