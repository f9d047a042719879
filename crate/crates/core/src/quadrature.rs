//! Deterministic quadrature over radial intervals, spheres and annuli.
//!
//! Radial integrals use composite Gauss–Legendre panels. When the interval stays away
//! from zero the panels are geometric (uniform in `log t`), which resolves integrands
//! such as `1/(t log(1/t))` near the inner radius. Spherical node sets are invariant
//! under every coordinate reflection, so fields odd in one coordinate integrate to zero
//! up to rounding.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};

/// Gauss–Legendre order used on every radial panel.
pub const PANEL_ORDER: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureRule {
    /// Number of composite Gauss–Legendre panels on a radial interval.
    pub radial_points: usize,
    /// Number of nodes on each sphere.
    pub sphere_samples: usize,
    pub n: usize,
    /// Seed for the quasi-random sphere nodes used when `n >= 4`.
    pub seed: u64,
}

impl QuadratureRule {
    pub fn new(n: usize) -> Self {
        QuadratureRule { radial_points: 64, sphere_samples: 256, n, seed: 0x5eed }
    }

    pub fn with_radial_points(mut self, radial_points: usize) -> Self {
        self.radial_points = radial_points;
        self
    }

    pub fn with_sphere_samples(mut self, sphere_samples: usize) -> Self {
        self.sphere_samples = sphere_samples;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return invalid(format!("dimension must be at least 2, got {}", self.n));
        }
        if self.radial_points < 8 {
            return invalid(format!("radial_points must be >= 8, got {}", self.radial_points));
        }
        if self.sphere_samples < 64 {
            return invalid(format!("sphere_samples must be >= 64, got {}", self.sphere_samples));
        }
        Ok(())
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if order == 1 {
                p1 = x;
                p0 = 1.0;
            }
            dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn panel_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(PANEL_ORDER))
}

fn gamma_half_integer(k: usize) -> f64 {
    // Γ(k/2) for k >= 1
    if k % 2 == 0 {
        (1..k / 2).map(|j| j as f64).product()
    } else {
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x < k as f64 / 2.0 - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// Surface area `ω_{n-1}` of the unit sphere in `R^n`.
pub fn omega(n: usize) -> Result<f64> {
    if n < 2 {
        return invalid(format!("dimension must be at least 2, got {n}"));
    }
    Ok(2.0 * PI.powf(n as f64 / 2.0) / gamma_half_integer(n))
}

/// Volume `Ω_n` of the unit ball in `R^n`.
pub fn ball_volume(n: usize) -> Result<f64> {
    Ok(omega(n)? / n as f64)
}

/// Radial quadrature nodes `(t, w)` for `∫_a^b g(t) dt`, split at `breaks`.
pub fn radial_nodes(a: f64, b: f64, panels: usize, breaks: &[f64]) -> Result<Vec<(f64, f64)>> {
    if !(a < b) || a < 0.0 || !b.is_finite() {
        return invalid(format!("radial interval must satisfy 0 <= a < b < inf, got ({a}, {b})"));
    }
    let geometric = a > 0.0;
    let map = |t: f64| if geometric { t.ln() } else { t };
    let unmap = |s: f64| if geometric { s.exp() } else { s };

    let mut cuts = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&c| c > a && c < b).collect();
    inner.sort_by(|x, y| x.total_cmp(y));
    inner.dedup();
    cuts.extend(inner);
    cuts.push(b);

    let total = map(b) - map(a);
    let (gx, gw) = panel_rule();
    let mut out = Vec::with_capacity(panels.max(cuts.len()) * PANEL_ORDER * 2);
    for seg in cuts.windows(2) {
        let (sa, sb) = (map(seg[0]), map(seg[1]));
        let k = ((panels as f64) * (sb - sa) / total).round().max(1.0) as usize;
        let width = (sb - sa) / k as f64;
        for j in 0..k {
            let lo = sa + j as f64 * width;
            // pin the panel ends to the exact cut values
            let (plo, phi) = if geometric {
                let plo = if j == 0 { seg[0] } else { unmap(lo) };
                let phi = if j + 1 == k { seg[1] } else { unmap(lo + width) };
                (plo.ln(), phi.ln())
            } else {
                (if j == 0 { seg[0] } else { lo }, if j + 1 == k { seg[1] } else { lo + width })
            };
            let half = 0.5 * (phi - plo);
            let mid = 0.5 * (phi + plo);
            for (x, w) in gx.iter().zip(gw) {
                let s = mid + half * x;
                if geometric {
                    let t = s.exp();
                    out.push((t, w * half * t));
                } else {
                    out.push((s, w * half));
                }
            }
        }
    }
    Ok(out)
}

/// `∫_a^b g(t) dt` by composite Gauss–Legendre.
pub fn radial_integral(g: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, breaks: &[f64]) -> Result<f64> {
    let nodes = radial_nodes(a, b, panels, breaks)?;
    let mut acc = 0.0;
    for (t, w) in nodes {
        let v = g(t);
        if v.is_nan() {
            return Err(Error::Evaluation(format!("integrand is NaN at t = {t}")));
        }
        acc += w * v;
    }
    Ok(acc)
}

/// Unit directions with equal weights summing to `ω_{n-1}`.
#[derive(Debug, Clone)]
pub struct SphereRule {
    n: usize,
    dirs: Vec<f64>,
    weight: f64,
}

impl SphereRule {
    pub fn new(rule: &QuadratureRule) -> Result<Self> {
        rule.validate()?;
        let n = rule.n;
        let base = match n {
            2 => {
                let m = rule.sphere_samples.div_ceil(4) * 4;
                let mut dirs = Vec::with_capacity(2 * m);
                for k in 0..m {
                    let th = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                    dirs.push(th.cos());
                    dirs.push(th.sin());
                }
                return Ok(SphereRule { n, weight: omega(2)? / m as f64, dirs });
            }
            3 => fibonacci_octant(rule.sphere_samples.div_ceil(8).max(8)),
            _ => gaussian_octant(n, (rule.sphere_samples >> n).max(4), rule.seed),
        };
        let count = base.len() / n;
        let flips = 1usize << n;
        let mut dirs = Vec::with_capacity(base.len() * flips);
        for mask in 0..flips {
            for p in base.chunks(n) {
                for (k, v) in p.iter().enumerate() {
                    dirs.push(if mask >> k & 1 == 1 { -v } else { *v });
                }
            }
        }
        Ok(SphereRule { n, weight: omega(n)? / (count * flips) as f64, dirs })
    }

    pub fn len(&self) -> usize {
        self.dirs.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn directions(&self) -> impl Iterator<Item = &[f64]> {
        self.dirs.chunks(self.n)
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// `∫_{|x-x0|=r} f dS`.
    pub fn integrate(&self, f: &dyn Fn(&[f64]) -> f64, x0: &[f64], r: f64) -> Result<f64> {
        let mut x = vec![0.0; self.n];
        let mut acc = 0.0;
        for d in self.directions() {
            for k in 0..self.n {
                x[k] = x0[k] + r * d[k];
            }
            let v = f(&x);
            if v.is_nan() {
                return Err(Error::Evaluation(format!("field is NaN at {x:?}")));
            }
            acc += v;
        }
        Ok(acc * self.weight * r.powi(self.n as i32 - 1))
    }
}

// Fibonacci lattice folded into the positive octant.
fn fibonacci_octant(m: usize) -> Vec<f64> {
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut out = Vec::with_capacity(3 * m);
    for i in 0..m {
        let z = 1.0 - (2.0 * i as f64 + 1.0) / m as f64;
        let rad = (1.0 - z * z).sqrt();
        let th = golden * i as f64;
        out.extend([(rad * th.cos()).abs(), (rad * th.sin()).abs(), z.abs()]);
    }
    out
}

fn gaussian_octant(n: usize, m: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n * m);
    let mut v = vec![0.0; n];
    for _ in 0..m {
        loop {
            for c in v.iter_mut() {
                let g: f64 = StandardNormal.sample(&mut rng);
                *c = g;
            }
            let len = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            if len > 1e-8 {
                out.extend(v.iter().map(|c| (c / len).abs()));
                break;
            }
        }
    }
    out
}

fn check_point(x0: &[f64], rule: &QuadratureRule) -> Result<()> {
    if x0.len() != rule.n {
        return invalid(format!("centre has dimension {}, rule expects {}", x0.len(), rule.n));
    }
    Ok(())
}

/// `∫_{|x-x0|=r} f dS`.
pub fn sphere_integral(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], r: f64, rule: &QuadratureRule) -> Result<f64> {
    check_point(x0, rule)?;
    if !(r > 0.0) {
        return invalid(format!("sphere radius must be positive, got {r}"));
    }
    SphereRule::new(rule)?.integrate(f, x0, r)
}

/// `∫_{eps<|x-x0|<eps0} F dm` by nested radial and spherical quadrature.
pub fn annulus_integral(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], eps: f64, eps0: f64, rule: &QuadratureRule) -> Result<f64> {
    annulus_integral_with_breaks(f, x0, eps, eps0, rule, &[])
}

/// As [`annulus_integral`], with radial panel boundaries forced at `breaks`
/// (radii where the integrand is discontinuous or kinked).
pub fn annulus_integral_with_breaks(
    f: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    eps: f64,
    eps0: f64,
    rule: &QuadratureRule,
    breaks: &[f64],
) -> Result<f64> {
    check_point(x0, rule)?;
    if !(eps > 0.0 && eps < eps0) {
        return invalid(format!("annulus radii must satisfy 0 < eps < eps0, got ({eps}, {eps0})"));
    }
    let sphere = SphereRule::new(rule)?;
    let mut acc = 0.0;
    for (t, w) in radial_nodes(eps, eps0, rule.radial_points, breaks)? {
        acc += w * sphere.integrate(f, x0, t)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(PANEL_ORDER);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // exact up to degree 2*order - 1
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn omega_and_ball_volume() {
        assert!((omega(2).unwrap() - 2.0 * PI).abs() < 1e-14);
        assert!((omega(3).unwrap() - 4.0 * PI).abs() < 1e-13);
        assert!((omega(4).unwrap() - 2.0 * PI * PI).abs() < 1e-13);
        assert!((ball_volume(2).unwrap() - PI).abs() < 1e-14);
        assert!((ball_volume(3).unwrap() - 4.0 * PI / 3.0).abs() < 1e-13);
        for n in 2..=6 {
            assert!((omega(n).unwrap() / ball_volume(n).unwrap() - n as f64).abs() < 1e-12);
        }
        assert!(omega(1).is_err());
        assert!(ball_volume(0).is_err());
    }

    #[test]
    fn omega_4_matches_monte_carlo_volume() {
        // ω_3 = 4 Ω_4; estimate Ω_4 as the fraction of the cube [-1,1]^4 inside the ball.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trials = 400_000;
        let mut hits = 0usize;
        for _ in 0..trials {
            let s: f64 = (0..4).map(|_| rng.random_range(-1.0..1.0f64).powi(2)).sum();
            if s <= 1.0 {
                hits += 1;
            }
        }
        let est = 4.0 * 16.0 * hits as f64 / trials as f64;
        assert!((est - omega(4).unwrap()).abs() / omega(4).unwrap() < 0.01, "{est}");
    }

    #[test]
    fn sphere_integral_examples() {
        let rule2 = QuadratureRule::new(2);
        let v = sphere_integral(&|_| 1.0, &[0.0, 0.0], 2.0, &rule2).unwrap();
        assert!((v - 4.0 * PI).abs() < 1e-12);
        for n in 2..=5 {
            let rule = QuadratureRule::new(n);
            let x0 = vec![0.0; n];
            let odd = sphere_integral(&|x| x[0] * (1.0 + x[1] * x[1]), &x0, 0.7, &rule).unwrap();
            assert!(odd.abs() < 1e-12, "n={n}: {odd}");
            let odd2 = sphere_integral(&|x| x[0] * x[1], &x0, 1.3, &rule).unwrap();
            assert!(odd2.abs() < 1e-12, "n={n}: {odd2}");
        }
        let rule3 = QuadratureRule::new(3);
        let v = sphere_integral(&|x| x.iter().map(|c| c * c).sum(), &[0.0; 3], 1.0, &rule3).unwrap();
        assert!((v - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn sphere_integral_of_squared_coordinate_matches_monte_carlo() {
        // ∫_{S^2} x1^2 dS = 4π/3; compare the Fibonacci rule with dense Monte-Carlo.
        let rule = QuadratureRule::new(3).with_sphere_samples(4096);
        let v = sphere_integral(&|x| x[0] * x[0], &[0.0; 3], 1.0, &rule).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut acc = 0.0;
        let trials = 200_000;
        for _ in 0..trials {
            let g: [f64; 3] = [
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            ];
            let len2 = g.iter().map(|c| c * c).sum::<f64>();
            acc += g[0] * g[0] / len2;
        }
        let mc = 4.0 * PI * acc / trials as f64;
        assert!((v - mc).abs() < 0.02 * mc, "rule {v} vs mc {mc}");
        assert!((v - 4.0 * PI / 3.0).abs() < 5e-3);
    }

    #[test]
    fn annulus_examples() {
        let rule = QuadratureRule::new(2);
        let v = annulus_integral(&|_| 1.0, &[0.0, 0.0], 1.0, 2.0, &rule).unwrap();
        assert!((v - 3.0 * PI).abs() < 1e-12);
        let e = std::f64::consts::E;
        let v = annulus_integral(&|x| 1.0 / (x[0] * x[0] + x[1] * x[1]), &[0.0, 0.0], 1.0, e, &rule).unwrap();
        assert!((v - 2.0 * PI).abs() < 1e-12);
        assert!(annulus_integral(&|_| 1.0, &[0.0, 0.0], 2.0, 1.0, &rule).is_err());
    }

    #[test]
    fn nan_integrand_is_an_evaluation_error() {
        let rule = QuadratureRule::new(2);
        let r = sphere_integral(&|_| f64::NAN, &[0.0, 0.0], 1.0, &rule);
        assert!(matches!(r, Err(Error::Evaluation(_))));
    }

    #[test]
    fn rule_invariants_are_enforced() {
        assert!(QuadratureRule::new(2).with_radial_points(4).validate().is_err());
        assert!(QuadratureRule::new(2).with_sphere_samples(16).validate().is_err());
        assert!(QuadratureRule::new(1).validate().is_err());
    }

    #[test]
    fn breaks_are_panel_boundaries() {
        // step function integrates exactly when the jump is a break
        let v = radial_integral(|t| if t < 0.3 { 1.0 } else { 5.0 }, 0.1, 1.0, 8, &[0.3]).unwrap();
        assert!((v - (0.2 + 3.5)).abs() < 1e-13);
        let v = radial_integral(|t| if t < 0.3 { 1.0 } else { 5.0 }, 0.0, 1.0, 8, &[0.3]).unwrap();
        assert!((v - (0.3 + 3.5)).abs() < 1e-13);
    }
}
