//! Radial stretch maps `f(x) = f(x0) + (x - x0)/|x - x0| · ρ(|x - x0|)`.
//!
//! The main family is built from a profile `Q ≥ 1` on the unit ball: with `q_m` the
//! spherical mean of `Q` truncated to 1 inside `B(0, 1/m)`,
//! `ρ_m(r) = exp(-∫_r^1 dt/(t q_m^{1/(n-1)}(t)))`. Each `f_m` maps spheres to spheres,
//! has inner dilatation `q_m(|x|)` and satisfies the ring inequality with `Q_m`; when
//! the Dini-type integral of `q` converges, `ρ_m(1/m)` stays above `exp(-C)` and the
//! family is not equicontinuous at the origin.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{invalid, Error, Result};
use crate::geom::{chordal_distance, dist, ExtPoint};
use crate::modulus::ring_modulus_exact;
use crate::qprofile::{dini_integral_with, DiniConfig, QProfile};
use crate::quadrature::{annulus_integral_with_breaks, gauss_legendre, omega, radial_integral, radial_nodes, PANEL_ORDER};
use crate::table::Table;

/// Cumulative table of `J(r) = ∫_r^1 dt/(t q^{1/(n-1)}(t))` on a log-spaced grid.
/// Values between nodes add one Gauss–Legendre panel to the cached node value, so `J`
/// is exactly decreasing and smooth between breakpoints.
struct ExponentTable {
    q: QProfile,
    expo: f64,
    nodes: Vec<f64>,
    cum: Vec<f64>,
    gl: (Vec<f64>, Vec<f64>),
}

impl ExponentTable {
    const NODES: usize = 4096;
    const FLOOR: f64 = 1e-8;

    fn new(q: QProfile) -> Result<Self> {
        let expo = 1.0 / (q.dim() as f64 - 1.0);
        let top: f64 = 1.0;
        let (lf, lt) = (Self::FLOOR.ln(), top.ln());
        let mut nodes: Vec<f64> =
            (0..Self::NODES).map(|i| (lf + (lt - lf) * i as f64 / (Self::NODES - 1) as f64).exp()).collect();
        nodes[Self::NODES - 1] = top;
        nodes.extend(q.breaks().iter().copied().filter(|&b| b > Self::FLOOR && b < top));
        nodes.sort_by(f64::total_cmp);
        nodes.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());
        let gl = gauss_legendre(PANEL_ORDER);
        let mut table = ExponentTable { q, expo, nodes, cum: Vec::new(), gl };
        let mut cum = vec![0.0; table.nodes.len()];
        for i in (0..table.nodes.len() - 1).rev() {
            cum[i] = cum[i + 1] + table.panel(table.nodes[i], table.nodes[i + 1]);
        }
        if cum.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation(format!("exponent integral of `{}` is not finite", table.q.label())));
        }
        table.cum = cum;
        Ok(table)
    }

    fn integrand(&self, t: f64) -> f64 {
        1.0 / (t * self.q.q_at(t).powf(self.expo))
    }

    fn panel(&self, a: f64, b: f64) -> f64 {
        let (x, w) = &self.gl;
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        x.iter().zip(w).map(|(xi, wi)| wi * self.integrand(mid + half * xi)).sum::<f64>() * half
    }

    fn exponent(&self, r: f64) -> f64 {
        if r >= 1.0 {
            return if r == 1.0 { 0.0 } else { -self.panel(1.0, r) };
        }
        if r < Self::FLOOR {
            let below = radial_integral(|t| self.integrand(t), r, Self::FLOOR, 32, self.q.breaks()).unwrap_or(f64::NAN);
            return self.cum[0] + below;
        }
        let i = self.nodes.partition_point(|&x| x <= r) - 1;
        if self.nodes[i] == r {
            return self.cum[i];
        }
        self.cum[i + 1] + self.panel(r, self.nodes[i + 1])
    }
}

type RhoFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A radial stretch about `center` with increasing profile `ρ` on `(0, R)`.
#[derive(Clone)]
pub struct RadialMap {
    n: usize,
    center: Vec<f64>,
    image_center: Vec<f64>,
    domain_radius: f64,
    rho: RhoFn,
    breaks: Vec<f64>,
    label: String,
}

impl fmt::Debug for RadialMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialMap")
            .field("label", &self.label)
            .field("n", &self.n)
            .field("center", &self.center)
            .field("domain_radius", &self.domain_radius)
            .finish()
    }
}

impl RadialMap {
    /// A radial map with profile `rho`, checked to be positive and strictly increasing
    /// on 64 log-spaced probe radii.
    pub fn new(
        center: Vec<f64>,
        domain_radius: f64,
        label: impl Into<String>,
        rho: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        RadialMap::from_arc(center, domain_radius, label.into(), Arc::new(rho), Vec::new())
    }

    fn from_arc(center: Vec<f64>, domain_radius: f64, label: String, rho: RhoFn, breaks: Vec<f64>) -> Result<Self> {
        let n = center.len();
        if n < 2 {
            return invalid(format!("dimension must be at least 2, got {n}"));
        }
        if !(domain_radius > 0.0) {
            return invalid(format!("domain radius must be positive, got {domain_radius}"));
        }
        let top = domain_radius.min(1e6);
        let mut prev = 0.0;
        for k in 0..64 {
            let r = top * (1e-6f64).powf(1.0 - k as f64 / 64.0);
            let v = rho(r);
            if !(v > prev) || !v.is_finite() {
                return invalid(format!("profile `{label}` is not positive and strictly increasing near r = {r}"));
            }
            prev = v;
        }
        Ok(RadialMap { n, center, image_center: vec![0.0; n], domain_radius, rho, breaks, label })
    }

    /// The identity of `R^n` (about the origin).
    pub fn identity(n: usize) -> Result<Self> {
        RadialMap::new(vec![0.0; n], f64::INFINITY, "identity", |r| r)
    }

    /// The map with `ρ(r) = exp(-∫_r^1 dt/(t q^{1/(n-1)}(t)))` on the unit ball about the
    /// profile's centre; requires `q ≥ 1`.
    pub fn from_profile(q: &QProfile) -> Result<Self> {
        if q.domain_radius() < 1.0 {
            return invalid(format!("profile `{}` must be defined on the unit ball", q.label()));
        }
        for k in 0..64 {
            let r = (1e-6f64).powf(1.0 - k as f64 / 64.0) * 0.999_999;
            let v = q.q_at(r);
            if !(v >= 1.0 - 1e-12) {
                return invalid(format!("profile `{}` has mean {v} < 1 at r = {r}; the construction needs Q >= 1", q.label()));
            }
        }
        let table = Arc::new(ExponentTable::new(q.clone())?);
        let rho: RhoFn = Arc::new(move |r: f64| (-table.exponent(r)).exp());
        let mut breaks = q.breaks().to_vec();
        breaks.push(1.0);
        RadialMap::from_arc(q.center().to_vec(), 1.0, format!("rho[{}]", q.label()), rho, breaks)
    }

    pub fn with_image_center(mut self, c: Vec<f64>) -> Result<Self> {
        if c.len() != self.n {
            return invalid("image centre has the wrong dimension");
        }
        self.image_center = c;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn image_center(&self) -> &[f64] {
        &self.image_center
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Radii where `ρ` is not smooth.
    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn rho(&self, r: f64) -> f64 {
        (self.rho)(r)
    }
}

/// `f(x)`.
pub fn radial_map_eval(f: &RadialMap, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != f.n {
        return invalid(format!("point has dimension {}, map has {}", x.len(), f.n));
    }
    let r = dist(x, &f.center);
    if r == 0.0 {
        return Ok(f.image_center.clone());
    }
    if !(r < f.domain_radius) {
        return Err(Error::OutOfDomain(format!("|x - x0| = {r} is not below the domain radius {}", f.domain_radius)));
    }
    let s = f.rho(r) / r;
    Ok(x.iter().zip(&f.center).zip(&f.image_center).map(|((xi, ci), yi)| yi + (xi - ci) * s).collect())
}

/// The truncated-profile member `f_m`.
pub fn rho_m_build(q: &QProfile, m: usize) -> Result<RadialMap> {
    RadialMap::from_profile(&q.truncated(m)?)
}

/// Exact modulus `ω_{n-1} / (∫_{r1}^{r2} dt/(t q^{1/(n-1)}(t)))^{n-1}` of the image of the
/// ring family under the radial map built from `q`.
pub fn pushforward_ring_modulus(q: &QProfile, r1: f64, r2: f64) -> Result<f64> {
    if !(r1 > 0.0 && r1 < r2 && r2 <= q.domain_radius().min(1.0)) {
        return invalid(format!("need 0 < r1 < r2 <= 1 inside the profile domain, got ({r1}, {r2})"));
    }
    let n = q.dim();
    let expo = 1.0 / (n as f64 - 1.0);
    for (t, _) in radial_nodes(r1, r2, q.rule().radial_points, q.breaks())? {
        if !(q.q_at(t) > 0.0) {
            return Err(Error::DegenerateProfile(format!("spherical mean of `{}` vanishes at r = {t}", q.label())));
        }
    }
    let i = radial_integral(|t| 1.0 / (t * q.q_at(t).powf(expo)), r1, r2, q.rule().radial_points, q.breaks())?;
    Ok(omega(n)? / i.powi(n as i32 - 1))
}

/// Derivative of `ρ` at `r`: central differences with step `1e-6 r`, switching to
/// second-order one-sided differences near breakpoints and the domain edge.
fn rho_derivative(f: &RadialMap, r: f64) -> f64 {
    let h = 1e-6 * r;
    let near = |b: f64| (b - r).abs() <= 2.0 * h;
    let blocked_right = f.breaks.iter().any(|&b| near(b) && b >= r) || r + 2.0 * h >= f.domain_radius;
    let blocked_left = f.breaks.iter().any(|&b| near(b) && b <= r);
    if !blocked_left && !blocked_right {
        (f.rho(r + h) - f.rho(r - h)) / (2.0 * h)
    } else if blocked_right {
        (3.0 * f.rho(r) - 4.0 * f.rho(r - h) + f.rho(r - 2.0 * h)) / (2.0 * h)
    } else {
        (-3.0 * f.rho(r) + 4.0 * f.rho(r + h) - f.rho(r + 2.0 * h)) / (2.0 * h)
    }
}

/// Inner dilatation of the radial map at radius `r`: with radial stretch `a = ρ'(r)`
/// and tangential stretch `b = ρ(r)/r`, `K_I = a b^{n-1} / min(a, b)^n`.
pub fn inner_dilatation_radial(f: &RadialMap, r: f64) -> Result<f64> {
    if !(r > 0.0 && r <= f.domain_radius) {
        return invalid(format!("radius {r} outside (0, {}]", f.domain_radius));
    }
    let a = rho_derivative(f, r);
    if !(a > 0.0) {
        return invalid(format!("profile is not increasing at r = {r} (derivative {a})"));
    }
    let b = f.rho(r) / r;
    if a == b {
        return Ok(1.0);
    }
    let n = f.n as i32;
    let l = a.min(b);
    Ok(a * b.powi(n - 1) / l.powi(n))
}

/// A piecewise-constant density on a uniform partition of `(r1, r2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDensity {
    pub r1: f64,
    pub r2: f64,
    pub values: Vec<f64>,
}

impl StepDensity {
    /// Positive exponential weights, normalised to unit integral.
    pub fn random(r1: f64, r2: f64, panels: usize, rng: &mut ChaCha8Rng) -> Self {
        let w: Vec<f64> = (0..panels).map(|_| Exp1.sample(rng)).collect::<Vec<f64>>();
        let width = (r2 - r1) / panels as f64;
        let total: f64 = w.iter().sum::<f64>() * width;
        StepDensity { r1, r2, values: w.into_iter().map(|v| v / total).collect() }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if !(t > self.r1 && t < self.r2) {
            return 0.0;
        }
        let k = ((t - self.r1) / (self.r2 - self.r1) * self.values.len() as f64) as usize;
        self.values[k.min(self.values.len() - 1)]
    }

    pub fn edges(&self) -> Vec<f64> {
        let k = self.values.len();
        (1..k).map(|i| self.r1 + (self.r2 - self.r1) * i as f64 / k as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingCheck {
    /// `M(f(Γ))`.
    pub lhs: f64,
    /// `∫ Q ηⁿ` for each random density.
    pub rhs: Vec<f64>,
    /// `∫ Q ηⁿ` for the density pulled back from the image ring's extremal density.
    pub extremal_rhs: f64,
    pub worst_slack: f64,
    pub extremal_slack: f64,
    /// Densities (random or extremal) with `rhs < lhs (1 - 1e-9)`.
    pub violations: usize,
}

/// Test `M(f(Γ(S(x0,r1), S(x0,r2)))) ≤ ∫_{r1<|x-x0|<r2} Q ηⁿ` for `samples` random
/// admissible `η` and for the extremal one.
pub fn verify_ring_q_inequality(
    f: &RadialMap,
    q: &QProfile,
    r1: f64,
    r2: f64,
    samples: usize,
    seed: u64,
) -> Result<RingCheck> {
    if samples == 0 {
        return invalid("need at least one random density");
    }
    if !(r1 > 0.0 && r1 < r2 && r2 <= f.domain_radius && r2 <= q.domain_radius()) {
        return invalid(format!("annulus ({r1}, {r2}) is not inside the domain"));
    }
    if f.n != q.dim() || dist(f.center(), q.center()) > 0.0 {
        return invalid("map and profile must share dimension and centre");
    }
    let n = f.n as i32;
    let lhs = ring_modulus_exact(f.rho(r1), f.rho(r2), f.n)?;
    let c = q.center().to_vec();
    let weighted = |eta: &dyn Fn(f64) -> f64, extra: &[f64]| -> Result<f64> {
        let g = |x: &[f64]| {
            let e = eta(dist(x, &c));
            if e == 0.0 {
                0.0
            } else {
                q.eval(x) * e.powi(n)
            }
        };
        let mut breaks = q.breaks().to_vec();
        breaks.extend_from_slice(extra);
        breaks.extend_from_slice(f.breaks());
        annulus_integral_with_breaks(&g, &c, r1, r2, q.rule(), &breaks)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rhs = Vec::with_capacity(samples);
    for _ in 0..samples {
        let eta = StepDensity::random(r1, r2, 64, &mut rng);
        rhs.push(weighted(&|t| eta.eval(t), &eta.edges())?);
    }
    let log_ratio = (f.rho(r2) / f.rho(r1)).ln();
    let extremal = |t: f64| rho_derivative(f, t) / (f.rho(t) * log_ratio);
    let extremal_rhs = weighted(&extremal, &[])?;

    let slack = |v: f64| v - lhs;
    let violated = |v: f64| v < lhs * (1.0 - 1e-9);
    let worst_slack = rhs.iter().map(|&v| slack(v)).fold(f64::INFINITY, f64::min);
    let violations = rhs.iter().filter(|&&v| violated(v)).count() + violated(extremal_rhs) as usize;
    Ok(RingCheck { lhs, extremal_slack: slack(extremal_rhs), extremal_rhs, rhs, worst_slack, violations })
}

/// The maps `f_1, …, f_{m_max}` built from the truncations of one profile.
#[derive(Debug, Clone)]
pub struct MapFamily {
    pub profile: QProfile,
    pub members: Vec<(usize, RadialMap)>,
}

impl MapFamily {
    pub fn truncated(q: &QProfile, m_max: usize) -> Result<Self> {
        if m_max == 0 {
            return invalid("family needs m_max >= 1");
        }
        let members = (1..=m_max).map(|m| Ok((m, rho_m_build(q, m)?))).collect::<Result<Vec<_>>>()?;
        Ok(MapFamily { profile: q.clone(), members })
    }

    /// A family with a single member.
    pub fn single(q: &QProfile, f: RadialMap) -> Result<Self> {
        if f.n != q.dim() {
            return invalid("map and profile dimensions differ");
        }
        Ok(MapFamily { profile: q.clone(), members: vec![(1, f)] })
    }

    pub fn dim(&self) -> usize {
        self.profile.dim()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquicontinuityReport {
    /// `(m, r, h(f_m(r e1), f_m(0)))`.
    pub rows: Vec<(usize, f64, f64)>,
    /// `(r, sup_m h)`.
    pub sup_per_radius: Vec<(f64, f64)>,
    /// `(m, |f_m(e1/m)|)`.
    pub diagonal: Vec<(usize, f64)>,
    /// Total Dini-type integral `C` of the untruncated profile, when it converges.
    pub total_integral: Option<f64>,
    /// `exp(-C)`, a lower bound for every `|f_m(e1/m)|` when `C` is finite.
    pub sigma: Option<f64>,
}

impl EquicontinuityReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(["m", "r", "h_value"]);
        for &(m, r, h) in &self.rows {
            t.push(vec![m.into(), r.into(), h.into()]).expect("three columns");
        }
        t
    }
}

pub fn equicontinuity_experiment(fam: &MapFamily, radii: &[f64]) -> Result<EquicontinuityReport> {
    if radii.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return invalid("radii must lie in (0, 1)");
    }
    let n = fam.dim();
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let mut rows = Vec::new();
    let mut sup_per_radius = Vec::new();
    for &r in radii {
        let mut sup: f64 = 0.0;
        for (m, f) in &fam.members {
            let x: Vec<f64> = f.center().iter().zip(&e1).map(|(c, e)| c + r * e).collect();
            let y = ExtPoint::finite(radial_map_eval(f, &x)?)?;
            let y0 = ExtPoint::finite(f.image_center().to_vec())?;
            let h = chordal_distance(&y, &y0)?;
            sup = sup.max(h);
            rows.push((*m, r, h));
        }
        sup_per_radius.push((r, sup));
    }
    let diagonal = fam.members.iter().map(|(m, f)| (*m, f.rho(1.0 / *m as f64))).collect();
    let (total_integral, sigma) = if fam.profile.domain_radius() >= 1.0 {
        let d = dini_integral_with(&fam.profile, 1.0, &DiniConfig::default())?;
        if d.diverges {
            (None, None)
        } else {
            (Some(d.value), Some((-d.value).exp()))
        }
    } else {
        (None, None)
    };
    Ok(EquicontinuityReport { rows, sup_per_radius, diagonal, total_integral, sigma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_profile_gives_identity() {
        let one = QProfile::constant(2, 1.0).unwrap();
        for m in [1, 5, 40] {
            let f = rho_m_build(&one, m).unwrap();
            for r in [1e-10, 1e-7, 0.013, 0.5, 0.999, 1.0] {
                assert!((f.rho(r) - r).abs() < 1e-13 * r.max(1e-300) + 1e-15, "m={m} r={r} {}", f.rho(r));
            }
        }
    }

    #[test]
    fn constant_profile_power_law() {
        // q ≡ K gives ρ(r) = r^{K^{-1/(n-1)}}
        let k = 4.0;
        let f = RadialMap::from_profile(&QProfile::constant(3, k).unwrap()).unwrap();
        for r in [1e-9f64, 1e-3, 0.2, 0.7] {
            let want = r.powf(0.5);
            assert!((f.rho(r) - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn profile_below_one_is_rejected() {
        assert!(RadialMap::from_profile(&QProfile::log_inverse(2).unwrap()).is_err());
        assert!(RadialMap::from_profile(&QProfile::constant(2, 0.5).unwrap()).is_err());
        assert!(RadialMap::new(vec![0.0; 2], 1.0, "dec", |r| 1.0 - r).is_err());
    }

    #[test]
    fn eval_examples() {
        let f = RadialMap::new(vec![1.0, 2.0], 5.0, "sq", |r| r * r).unwrap().with_image_center(vec![1.0, 2.0]).unwrap();
        let y = radial_map_eval(&f, &[1.0, 2.5]).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-15 && (y[1] - 2.25).abs() < 1e-15);
        assert_eq!(radial_map_eval(&f, &[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
        assert!(matches!(radial_map_eval(&f, &[7.0, 2.0]), Err(Error::OutOfDomain(_))));
        let id = RadialMap::identity(3).unwrap();
        assert_eq!(radial_map_eval(&id, &[0.3, -1.0, 2.0]).unwrap(), vec![0.3, -1.0, 2.0]);
    }

    #[test]
    fn pushforward_examples() {
        let (r1, r2) = (0.1, 0.6);
        let one = QProfile::constant(2, 1.0).unwrap();
        assert!((pushforward_ring_modulus(&one, r1, r2).unwrap() - ring_modulus_exact(r1, r2, 2).unwrap()).abs() < 1e-12);
        let k = 3.0;
        let kq = QProfile::constant(2, k).unwrap();
        let want = 2.0 * PI * k / (r2 / r1).ln();
        assert!((pushforward_ring_modulus(&kq, r1, r2).unwrap() - want).abs() < 1e-12 * want);
        let gap = QProfile::radial(2, 1.0, "gap", |r| if r > 0.2 && r < 0.3 { 0.0 } else { 1.0 }).unwrap();
        assert!(matches!(pushforward_ring_modulus(&gap, r1, r2), Err(Error::DegenerateProfile(_))));
    }

    #[test]
    fn dilatation_examples() {
        let id = RadialMap::identity(2).unwrap();
        assert!((inner_dilatation_radial(&id, 0.3).unwrap() - 1.0).abs() < 1e-9);
        let sq = RadialMap::new(vec![0.0; 2], 1.0, "sq", |r| r * r).unwrap();
        assert!((inner_dilatation_radial(&sq, 0.4).unwrap() - 2.0).abs() < 1e-8);
        let q = QProfile::log_squared_clamped(2).unwrap();
        let f = rho_m_build(&q, 8).unwrap();
        for r in [0.126, 0.2, 0.3, 0.3678, 0.37, 0.9, 0.999] {
            let k = inner_dilatation_radial(&f, r).unwrap();
            let want = q.truncated(8).unwrap().q_at(r);
            assert!((k - want).abs() < 1e-6 * want, "r={r}: {k} vs {want}");
        }
    }

    #[test]
    fn ring_inequality_examples() {
        let id = RadialMap::identity(2).unwrap();
        let one = QProfile::constant(2, 1.0).unwrap();
        let check = verify_ring_q_inequality(&id, &one, 0.2, 0.7, 20, 7).unwrap();
        assert_eq!(check.violations, 0);
        assert!(check.extremal_slack.abs() < 1e-6 * check.lhs);
        let half = QProfile::constant(2, 0.5).unwrap();
        assert!(verify_ring_q_inequality(&id, &half, 0.2, 0.7, 20, 7).unwrap().violations >= 1);
    }

    #[test]
    fn step_density_is_admissible() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let eta = StepDensity::random(0.2, 0.9, 64, &mut rng);
        let total = radial_integral(|t| eta.eval(t), 0.2, 0.9, 64, &eta.edges()).unwrap();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(eta.values.iter().all(|&v| v > 0.0));
    }
}
