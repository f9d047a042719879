//! Closed-form distortion bounds and their comparison with measured map families.
//!
//! Every bound controls the chordal distance `h(f(x), f(x0))` for `|x - x0| = dist`.
//! The constant pack carries `λ_n ∈ [4, 2e^{n-1})`, `α_n = 2λ_n²`,
//! `β_n = (ω_{n-1}/K)^{1/(n-1)}`, `β̃_n = (ω_{n-1}/(2K))^{1/(n-1)}` and
//! `γ_{n,p} = 1 - (p-1)/(n-1)`.

use crate::error::{invalid, Error, Result};
use crate::geom::{chordal_distance, ExtPoint};
use crate::maps::{radial_map_eval, MapFamily};
use crate::modulus::check_lambda;
use crate::qprofile::QProfile;
use crate::quadrature::{omega, radial_integral, radial_nodes};
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub n: usize,
    pub lambda_n: f64,
    /// Growth constant `K` of the weighted energy `∫ Q ψⁿ ≤ K I^p`.
    pub k: f64,
    pub p: f64,
    pub alpha_n: f64,
    pub beta_n: f64,
    pub beta_n_tilde: f64,
    pub gamma_np: f64,
    /// `ω_{n-1}`.
    pub omega_prev: f64,
}

/// Default `λ_n`: 4 for `n = 2`, the midpoint of `[4, 2e^{n-1})` otherwise.
pub fn default_lambda(n: usize) -> f64 {
    if n == 2 {
        4.0
    } else {
        0.5 * (4.0 + 2.0 * ((n - 1) as f64).exp())
    }
}

pub fn make_constants(n: usize, k: f64, p: f64, lambda: Option<f64>) -> Result<BoundConstants> {
    if n < 2 {
        return invalid(format!("dimension must be at least 2, got {n}"));
    }
    if !(k > 0.0 && k.is_finite()) {
        return invalid(format!("K must be positive, got {k}"));
    }
    if !(p <= n as f64) || !p.is_finite() {
        return invalid(format!("p must not exceed n = {n}, got {p}"));
    }
    let lambda_n = lambda.unwrap_or_else(|| default_lambda(n));
    check_lambda(n, lambda_n)?;
    let w = omega(n)?;
    let e = 1.0 / (n as f64 - 1.0);
    Ok(BoundConstants {
        n,
        lambda_n,
        k,
        p,
        alpha_n: 2.0 * lambda_n * lambda_n,
        beta_n: (w / k).powf(e),
        beta_n_tilde: (w / (2.0 * k)).powf(e),
        gamma_np: 1.0 - (p - 1.0) / (n as f64 - 1.0),
        omega_prev: w,
    })
}

/// `(α_n/δ) exp(-β_n I^γ)`: bound at points where the image of the outer region keeps
/// chordal size `δ`.
pub fn distortion_bound(c: &BoundConstants, delta: f64, i_val: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return invalid(format!("delta must lie in (0, 1], got {delta}"));
    }
    if !(i_val >= 0.0) {
        return invalid(format!("I must be nonnegative, got {i_val}"));
    }
    Ok(c.alpha_n / delta * (-c.beta_n * i_val.powf(c.gamma_np)).exp())
}

/// `α_n exp(-β̃_n I^γ)`: the normalized form with the weaker constant `β̃_n`.
pub fn normalized_distortion_bound(c: &BoundConstants, i_val: f64) -> Result<f64> {
    if !(i_val >= 0.0) {
        return invalid(format!("I must be nonnegative, got {i_val}"));
    }
    Ok(c.alpha_n * (-c.beta_n_tilde * i_val.powf(c.gamma_np)).exp())
}

/// `C_n (1/log(1/dist))^p`: logarithmic modulus of continuity.
pub fn log_order_bound(c_n: f64, p: f64, dist: f64) -> Result<f64> {
    if !(dist > 0.0 && dist < 1.0) {
        return invalid(format!("dist must lie in (0, 1), got {dist}"));
    }
    if !(c_n > 0.0 && p > 0.0) {
        return invalid("C_n and p must be positive");
    }
    Ok(c_n * (1.0 / (1.0 / dist).ln()).powf(p))
}

/// `α_n exp(-∫_dist^{ε0} dt/(t q^{1/(n-1)}(t)))`.
pub fn dini_bound(q: &QProfile, eps0: f64, dist: f64, alpha_n: f64) -> Result<f64> {
    if !(dist > 0.0 && dist <= eps0) {
        return invalid(format!("need 0 < dist <= eps0, got ({dist}, {eps0})"));
    }
    if eps0 > q.domain_radius() {
        return invalid(format!("eps0 = {eps0} exceeds the profile domain radius {}", q.domain_radius()));
    }
    if dist == eps0 {
        return Ok(alpha_n);
    }
    let expo = 1.0 / (q.dim() as f64 - 1.0);
    let panels = q.rule().radial_points;
    for (t, _) in radial_nodes(dist, eps0, panels, q.breaks())? {
        if !(q.q_at(t) > 0.0) {
            return Err(Error::DegenerateProfile(format!("spherical mean of `{}` vanishes at r = {t}", q.label())));
        }
    }
    let i = radial_integral(|t| 1.0 / (t * q.q_at(t).powf(expo)), dist, eps0, panels, q.breaks())?;
    Ok(alpha_n * (-i).exp())
}

/// `M / log(1/dist)^{(1/C)^{1/(n-1)}}`: the decay under `q(t) ≤ C log^{n-1}(1/t)`.
pub fn log_power_bound(m: f64, c: f64, n: usize, dist: f64) -> Result<f64> {
    if !(dist > 0.0 && dist < 1.0) {
        return invalid(format!("dist must lie in (0, 1), got {dist}"));
    }
    if !(c > 0.0) || n < 2 {
        return invalid("need C > 0 and n >= 2");
    }
    Ok(m / (1.0 / dist).ln().powf(log_power_exponent(c, n)))
}

/// `(1/C)^{1/(n-1)}`.
pub fn log_power_exponent(c: f64, n: usize) -> f64 {
    (1.0 / c).powf(1.0 / (n as f64 - 1.0))
}

/// Least-squares fit of `log h = log a - s x`; returns `(a, s)`.
fn fit_power(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    if pts.len() < 2 {
        return invalid("fit needs at least two finite points");
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return invalid("fit needs distinct abscissae");
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(((my - slope * mx).exp(), -slope))
}

/// Fit `h ≈ C_n (1/log(1/d))^p` to measurements `(d, h)`; returns `(C_n, p)`.
pub fn fit_log_order(data: &[(f64, f64)]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = data
        .iter()
        .filter(|(d, h)| *d > 0.0 && *d < 1.0 && *h > 0.0)
        .map(|(d, h)| ((1.0 / d).ln().ln(), h.ln()))
        .collect();
    fit_power(&pts)
}

/// Least-squares `M` for `h ≈ M / log(1/d)^{(1/C)^{1/(n-1)}}` with `C` fixed.
pub fn fit_log_power_constant(data: &[(f64, f64)], c: f64, n: usize) -> Result<f64> {
    let e = log_power_exponent(c, n);
    let logs: Vec<f64> = data
        .iter()
        .filter(|(d, h)| *d > 0.0 && *d < 1.0 && *h > 0.0)
        .map(|(d, h)| h.ln() + e * (1.0 / d).ln().ln())
        .collect();
    if logs.is_empty() {
        return invalid("fit needs at least one usable point");
    }
    Ok((logs.iter().sum::<f64>() / logs.len() as f64).exp())
}

/// Slope `s` of `log bound ≈ a - s log log(1/d)` for the Dini bound of `q` over
/// `d = e^{-k}`, `k ∈ ks`.
pub fn dini_bound_log_slope(q: &QProfile, eps0: f64, ks: &[f64]) -> Result<f64> {
    let pts = ks
        .iter()
        .map(|&k| {
            let d = (-k).exp();
            Ok((k.ln(), dini_bound(q, eps0, d, 1.0)?.ln()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(fit_power(&pts)?.1)
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundSpec {
    LogOrder { c_n: f64, p: f64 },
    Dini { eps0: f64, alpha_n: f64 },
    LogPower { m: f64, c: f64 },
}

impl BoundSpec {
    fn eval(&self, q: &QProfile, dist: f64) -> Result<f64> {
        match *self {
            BoundSpec::LogOrder { c_n, p } => log_order_bound(c_n, p, dist),
            BoundSpec::Dini { eps0, alpha_n } => dini_bound(q, eps0, dist, alpha_n),
            BoundSpec::LogPower { m, c } => log_power_bound(m, c, q.dim(), dist),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub member: usize,
    pub radius: f64,
    pub measured: f64,
    pub bound: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub rows: Vec<BoundRow>,
    pub violations: usize,
}

impl BoundCheck {
    pub fn table(&self) -> Table {
        let mut t = Table::new(["member", "radius", "measured", "bound", "slack"]);
        for r in &self.rows {
            t.push(vec![r.member.into(), r.radius.into(), r.measured.into(), r.bound.into(), r.slack.into()])
                .expect("five columns");
        }
        t
    }
}

/// Measure `h(f(x), f(x0))` at `|x - x0| = r` along `e1` for every member and compare
/// with the bound; negative slack is a violation.
pub fn check_bound_on_family(fam: &MapFamily, bound: &BoundSpec, radii: &[f64]) -> Result<BoundCheck> {
    let n = fam.dim();
    let mut rows = Vec::new();
    for &r in radii {
        let b = bound.eval(&fam.profile, r)?;
        for (m, f) in &fam.members {
            let mut x = f.center().to_vec();
            x[0] += r;
            let y = ExtPoint::finite(radial_map_eval(f, &x)?)?;
            let y0 = ExtPoint::finite(f.image_center().to_vec())?;
            debug_assert_eq!(y.dim(), n);
            let measured = chordal_distance(&y, &y0)?;
            rows.push(BoundRow { member: *m, radius: r, measured, bound: b, slack: b - measured });
        }
    }
    let violations = rows.iter().filter(|r| r.slack < 0.0).count();
    Ok(BoundCheck { rows, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn constant_pack_examples() {
        let c = make_constants(2, 2.0 * PI, 1.0, Some(4.0)).unwrap();
        assert_eq!(c.alpha_n, 32.0);
        assert!((c.beta_n - 1.0).abs() < 1e-15);
        assert_eq!(c.gamma_np, 1.0);
        assert_eq!(make_constants(3, 1.0, 3.0, None).unwrap().gamma_np, 0.0);
        assert!(make_constants(2, 1.0, 2.5, None).is_err());
        assert!(make_constants(2, 1.0, 1.0, Some(3.0)).is_err());
        assert!(make_constants(2, 1.0, 1.0, Some(2.0 * E)).is_err());
        let d3 = make_constants(3, 1.0, 1.0, None).unwrap();
        assert!((d3.lambda_n - (2.0 + E * E)).abs() < 1e-12);
    }

    #[test]
    fn distortion_bound_examples() {
        let c = make_constants(2, 2.0 * PI, 1.0, Some(4.0)).unwrap();
        assert_eq!(distortion_bound(&c, 1.0, 0.0).unwrap(), 32.0);
        assert!(distortion_bound(&c, 1.0, 1e3).unwrap() < 1e-100);
        assert!(distortion_bound(&c, 0.0, 1.0).is_err());
        let flat = make_constants(2, 2.0 * PI, 2.0, Some(4.0)).unwrap();
        let v = distortion_bound(&flat, 0.5, 7.0).unwrap();
        assert!((v - 64.0 * (-1f64).exp()).abs() < 1e-12);
        assert_eq!(normalized_distortion_bound(&c, 0.0).unwrap(), 32.0);
        for i in [0.1, 0.5, 1.0, 3.0, 10.0] {
            assert!(normalized_distortion_bound(&c, i).unwrap() >= distortion_bound(&c, 1.0, i).unwrap());
        }
    }

    #[test]
    fn log_order_examples() {
        assert!((log_order_bound(3.0, 1.0, 1.0 / E).unwrap() - 3.0).abs() < 1e-15);
        assert!(log_order_bound(3.0, 1.0, 1e-300).unwrap() < 0.005);
        assert!(log_order_bound(3.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn log_order_matches_distortion_bound_with_loglog_integral() {
        // with I = log(log(1/d)/log(1/ε0)) and γ = 1 the distortion bound is exactly
        // α (log(1/ε0))^β (1/log(1/d))^β
        let c = make_constants(2, 3.0, 1.0, None).unwrap();
        let eps0: f64 = 0.1;
        let l0 = (1.0 / eps0).ln();
        for k in 3..40 {
            let d = (-(k as f64)).exp();
            let i = ((1.0 / d).ln() / l0).ln();
            let a = distortion_bound(&c, 1.0, i).unwrap();
            let b = log_order_bound(c.alpha_n * l0.powf(c.beta_n), c.beta_n, d).unwrap();
            assert!((a - b).abs() < 1e-12 * b);
        }
    }

    #[test]
    fn dini_bound_examples() {
        let one = QProfile::constant(3, 1.0).unwrap();
        for d in [1e-9, 1e-4, 0.01, 0.2] {
            let v = dini_bound(&one, 0.3, d, 5.0).unwrap();
            assert!((v - 5.0 * d / 0.3).abs() < 1e-9 * 5.0 * d / 0.3);
        }
        assert_eq!(dini_bound(&one, 0.3, 0.3, 5.0).unwrap(), 5.0);
        let gap = QProfile::radial(2, 1.0, "gap", |r| if r > 0.05 && r < 0.06 { 0.0 } else { 1.0 }).unwrap();
        assert!(matches!(dini_bound(&gap, 0.3, 0.01, 1.0), Err(Error::DegenerateProfile(_))));
    }

    #[test]
    fn log_power_examples() {
        let v = log_power_bound(2.0, 1.0, 4, 1e-5).unwrap();
        assert!((v - 2.0 / (1e5f64).ln()).abs() < 1e-14);
        assert!(log_power_bound(2.0, 1.0, 2, 1.0).is_err());
        assert!(log_power_bound(2.0, 0.5, 2, 1e-300).unwrap() < 1e-5);
    }

    #[test]
    fn dini_slope_reproduces_log_power_exponent() {
        for (n, c) in [(2, 1.0), (2, 4.0), (3, 2.0), (3, 0.5)] {
            let q = QProfile::powlog(n, c).unwrap();
            let s = dini_bound_log_slope(&q, (-1f64).exp(), &[5.0, 10.0, 20.0, 40.0, 80.0]).unwrap();
            let want = log_power_exponent(c, n);
            assert!((s - want).abs() < 1e-6 * want, "n={n} C={c}: {s} vs {want}");
        }
    }

    #[test]
    fn fits_recover_parameters() {
        let data: Vec<(f64, f64)> = (2..30).map(|k| {
            let d = (-(k as f64)).exp();
            (d, log_order_bound(1.7, 0.6, d).unwrap())
        }).collect();
        let (c, p) = fit_log_order(&data).unwrap();
        assert!((c - 1.7).abs() < 1e-10 && (p - 0.6).abs() < 1e-12);
        let data: Vec<(f64, f64)> = (2..30).map(|k| {
            let d = (-(k as f64)).exp();
            (d, log_power_bound(0.9, 2.0, 3, d).unwrap())
        }).collect();
        assert!((fit_log_power_constant(&data, 2.0, 3).unwrap() - 0.9).abs() < 1e-12);
    }
}
