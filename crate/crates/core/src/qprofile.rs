//! Dilatation profiles and the integrals built from their spherical means.
//!
//! A [`QProfile`] is a pointwise-evaluable `Q` on a ball about `x0`. Its spherical
//! mean `q_{x0}(r)` comes either from a closed form supplied with the profile or from
//! sphere quadrature. Admissible functions `ψ` are [`PsiFunction`]s; the integral
//! `I(ε, ε0) = ∫_ε^{ε0} ψ` and the Dini-type integral `∫_0 dt / (t q^{1/(n-1)})`
//! decide which distortion bounds apply.

use std::fmt;
use std::sync::{Arc, Mutex};


use crate::error::{invalid, Error, Result};
use crate::geom::dist;
use crate::quadrature::{self, annulus_integral_with_breaks, radial_integral, radial_nodes, QuadratureRule, SphereRule};

pub type Field = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Outcome of a numeric probe of an asymptotic condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone)]
pub struct QProfile {
    n: usize,
    center: Vec<f64>,
    domain_radius: f64,
    eval: Field,
    radial_mean: Option<RadialFn>,
    breaks: Vec<f64>,
    label: String,
    rule: QuadratureRule,
}

impl fmt::Debug for QProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QProfile")
            .field("label", &self.label)
            .field("n", &self.n)
            .field("center", &self.center)
            .field("domain_radius", &self.domain_radius)
            .field("exact_mean", &self.radial_mean.is_some())
            .finish()
    }
}

impl QProfile {
    pub fn new(
        n: usize,
        center: Vec<f64>,
        domain_radius: f64,
        label: impl Into<String>,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if n < 2 {
            return invalid(format!("dimension must be at least 2, got {n}"));
        }
        if center.len() != n {
            return invalid(format!("centre has dimension {}, expected {n}", center.len()));
        }
        if !(domain_radius > 0.0) {
            return invalid(format!("domain radius must be positive, got {domain_radius}"));
        }
        Ok(QProfile {
            n,
            center,
            domain_radius,
            eval: Arc::new(eval),
            radial_mean: None,
            breaks: Vec::new(),
            label: label.into(),
            rule: QuadratureRule::new(n),
        })
    }

    /// A profile `Q(x) = g(|x|)` about the origin; `g` is also the exact spherical mean.
    pub fn radial(
        n: usize,
        domain_radius: f64,
        label: impl Into<String>,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let g: RadialFn = Arc::new(g);
        let g2 = g.clone();
        let p = QProfile::new(n, vec![0.0; n], domain_radius, label, move |x| g2(crate::geom::norm(x)))?;
        Ok(p.with_radial_mean_arc(g))
    }

    pub fn constant(n: usize, k: f64) -> Result<Self> {
        if !(k >= 0.0) {
            return invalid(format!("constant profile must be nonnegative, got {k}"));
        }
        QProfile::radial(n, f64::INFINITY, format!("const:{k}"), move |_| k)
    }

    /// `log(1/|x|)` on the unit ball.
    pub fn log_inverse(n: usize) -> Result<Self> {
        QProfile::radial(n, 1.0, "log", |r| (1.0 / r).ln())
    }

    /// `max(1, log(1/|x|))` on the unit ball.
    pub fn log_clamped(n: usize) -> Result<Self> {
        Ok(QProfile::radial(n, 1.0, "logc", |r| (1.0 / r).ln().max(1.0))?.with_breaks(vec![(-1f64).exp()]))
    }

    /// `max(1, log²(1/|x|))` on the unit ball.
    pub fn log_squared_clamped(n: usize) -> Result<Self> {
        Ok(QProfile::radial(n, 1.0, "log2", |r| (1.0 / r).ln().powi(2).max(1.0))?.with_breaks(vec![(-1f64).exp()]))
    }

    /// `C · log^{n-1}(1/|x|)` on the unit ball: the boundary case of the logarithmic growth condition.
    pub fn powlog(n: usize, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return invalid(format!("powlog constant must be positive, got {c}"));
        }
        let e = (n - 1) as i32;
        QProfile::radial(n, 1.0, format!("powlog:{c}"), move |r| c * (1.0 / r).ln().powi(e))
    }

    /// `exp(1/|x|)`: grows too fast for any logarithmic control.
    pub fn exp_inverse(n: usize) -> Result<Self> {
        QProfile::radial(n, f64::INFINITY, "exp", |r| (1.0 / r).exp())
    }

    /// Parse a named profile: `const:K`, `log`, `logc`, `log2`, `powlog:C`, `exp`.
    pub fn named(text: &str, n: usize) -> Result<Self> {
        let (name, arg) = match text.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (text, None),
        };
        let num = |s: Option<&str>| -> Result<f64> {
            s.ok_or_else(|| Error::InvalidArgument(format!("profile `{text}` needs a numeric argument")))?
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad number in profile `{text}`")))
        };
        match name {
            "const" => QProfile::constant(n, num(arg)?),
            "log" => QProfile::log_inverse(n),
            "logc" => QProfile::log_clamped(n),
            "log2" => QProfile::log_squared_clamped(n),
            "powlog" => QProfile::powlog(n, num(arg)?),
            "exp" => QProfile::exp_inverse(n),
            _ => invalid(format!("unknown profile `{text}` (expected const:K, log, logc, log2, powlog:C, exp)")),
        }
    }

    pub fn with_radial_mean(self, mean: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.with_radial_mean_arc(Arc::new(mean))
    }

    fn with_radial_mean_arc(mut self, mean: RadialFn) -> Self {
        self.radial_mean = Some(mean);
        self
    }

    /// Radii where `q` is not smooth; radial quadrature splits panels there.
    pub fn with_breaks(mut self, breaks: Vec<f64>) -> Self {
        self.breaks = breaks;
        self
    }

    pub fn with_rule(mut self, rule: QuadratureRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn has_exact_mean(&self) -> bool {
        self.radial_mean.is_some()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn field(&self) -> Field {
        self.eval.clone()
    }

    /// The truncated profile `Q_m`: `Q` outside `B(x0, 1/m)`, `1` inside.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        if m == 0 {
            return invalid("truncation index m must be >= 1");
        }
        let cut = 1.0 / m as f64;
        let inner = self.eval.clone();
        let c = self.center.clone();
        let eval: Field = Arc::new(move |x: &[f64]| if dist(x, &c) > cut { inner(x) } else { 1.0 });
        let base = self.clone();
        let mean: RadialFn = Arc::new(move |r: f64| if r > cut { base.q_at(r) } else { 1.0 });
        let mut breaks = self.breaks.clone();
        breaks.push(cut);
        Ok(QProfile {
            eval,
            radial_mean: Some(mean),
            breaks,
            label: format!("{}|m={m}", self.label),
            ..self.clone()
        })
    }

    /// Spherical mean without range checks; used on quadrature nodes.
    pub(crate) fn q_at(&self, r: f64) -> f64 {
        match &self.radial_mean {
            Some(g) => g(r),
            None => {
                let sphere = SphereRule::new(&self.rule).expect("profile rule validated at construction");
                let s = sphere.integrate(&*self.eval, &self.center, r).unwrap_or(f64::NAN);
                s / (sphere_area(self.n) * r.powi(self.n as i32 - 1))
            }
        }
    }

    /// Probe the profile invariants: nonnegative values, and agreement of the exact
    /// mean with sphere quadrature to `1e-6` relative.
    pub fn validate(&self) -> Result<()> {
        self.rule.validate()?;
        let top = self.domain_radius.min(1.0);
        let sphere = SphereRule::new(&self.rule)?;
        for k in 1..=12 {
            let r = top * 0.999 * 0.5f64.powi(k - 1);
            let s = sphere.integrate(&*self.eval, &self.center, r)?;
            let quad = s / (sphere_area(self.n) * r.powi(self.n as i32 - 1));
            if quad < 0.0 {
                return invalid(format!("profile `{}` is negative near r = {r}", self.label));
            }
            if let Some(g) = &self.radial_mean {
                let exact = g(r);
                if (exact - quad).abs() > 1e-6 * exact.abs().max(1e-300) && (exact - quad).abs() > 1e-12 {
                    return invalid(format!(
                        "exact mean of `{}` disagrees with quadrature at r = {r}: {exact} vs {quad}",
                        self.label
                    ));
                }
            }
        }
        Ok(())
    }
}

fn sphere_area(n: usize) -> f64 {
    quadrature::omega(n).expect("n >= 2 checked at construction")
}

/// Spherical mean `q_{x0}(r)` of `Q`.
pub fn q_mean(q: &QProfile, r: f64) -> Result<f64> {
    if !(r > 0.0 && r < q.domain_radius) {
        return invalid(format!("radius {r} outside (0, {})", q.domain_radius));
    }
    let v = q.q_at(r);
    if v.is_nan() {
        return Err(Error::Evaluation(format!("spherical mean of `{}` is NaN at r = {r}", q.label)));
    }
    Ok(v)
}

/// A nonnegative radial weight `ψ` on `(0, ε0)`.
#[derive(Clone)]
pub struct PsiFunction {
    label: String,
    eval: RadialFn,
    breaks: Vec<f64>,
}

impl fmt::Debug for PsiFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PsiFunction").field("label", &self.label).finish()
    }
}

impl PsiFunction {
    pub fn new(label: impl Into<String>, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        PsiFunction { label: label.into(), eval: Arc::new(eval), breaks: Vec::new() }
    }

    pub fn with_breaks(mut self, breaks: Vec<f64>) -> Self {
        self.breaks = breaks;
        self
    }

    /// `ψ(t) = 1/(t log(1/t))`, the weight behind the logarithmic growth bound.
    pub fn canonical() -> Self {
        PsiFunction::new("canonical", |t| psi_canonical(t).unwrap_or(f64::INFINITY))
    }

    pub fn constant(c: f64) -> Self {
        PsiFunction::new(format!("const:{c}"), move |_| c)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }
}

/// Value of `I(ε, ε0)` with its admissibility flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IValue {
    pub value: f64,
    /// The value is non-finite or above the divergence cap.
    pub diverges: bool,
    /// The value is not positive, so `ψ` is not admissible.
    pub degenerate: bool,
}

pub const DEFAULT_DIVERGENCE_CAP: f64 = 1e12;

/// `I(ε, ε0) = ∫_ε^{ε0} ψ(t) dt` with the default divergence cap.
pub fn i_integral(psi: &PsiFunction, eps: f64, eps0: f64) -> Result<IValue> {
    i_integral_with(psi, eps, eps0, &QuadratureRule::new(2), DEFAULT_DIVERGENCE_CAP)
}

pub fn i_integral_with(psi: &PsiFunction, eps: f64, eps0: f64, rule: &QuadratureRule, cap: f64) -> Result<IValue> {
    if !(eps > 0.0 && eps < eps0) {
        return invalid(format!("need 0 < eps < eps0, got ({eps}, {eps0})"));
    }
    let value = radial_integral(|t| psi.eval(t), eps, eps0, rule.radial_points, &psi.breaks)?;
    Ok(IValue { value, diverges: !value.is_finite() || value > cap, degenerate: !(value > 0.0) })
}

/// `1/(t log(1/t))`.
pub fn psi_canonical(t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return invalid(format!("psi_canonical needs t > 0, got {t}"));
    }
    if t >= 1.0 {
        return invalid(format!("psi_canonical needs t < 1 (log(1/t) > 0), got {t}"));
    }
    Ok(1.0 / (t * (1.0 / t).ln()))
}

/// Closed form of `∫_ε^{ε0} dt/(t log(1/t)) = log(log(1/ε)/log(1/ε0))`, for `ε < ε0 < 1`.
pub fn i_canonical_closed_form(eps: f64, eps0: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < eps0 && eps0 < 1.0) {
        return invalid(format!("need 0 < eps < eps0 < 1, got ({eps}, {eps0})"));
    }
    Ok(((1.0 / eps).ln() / (1.0 / eps0).ln()).ln())
}

/// `ψ(t) = 1/(t q^{1/(n-1)}(t))` on `(ε, ε0)` and `0` elsewhere. With this choice
/// `∫_{ε<|x-x0|<ε0} Q ψ^n = ω_{n-1} I(ε, ε0)`.
pub fn psi_from_q(q: &QProfile, eps: f64, eps0: f64) -> Result<PsiFunction> {
    if !(eps > 0.0 && eps < eps0) {
        return invalid(format!("need 0 < eps < eps0, got ({eps}, {eps0})"));
    }
    if eps0 > q.domain_radius {
        return invalid(format!("eps0 = {eps0} exceeds the profile domain radius {}", q.domain_radius));
    }
    for (t, _) in radial_nodes(eps, eps0, q.rule.radial_points, &q.breaks)? {
        let v = q.q_at(t);
        if v.is_nan() {
            return Err(Error::Evaluation(format!("spherical mean is NaN at r = {t}")));
        }
        if !(v > 0.0) {
            return Err(Error::DegenerateProfile(format!(
                "spherical mean of `{}` vanishes at r = {t}; psi is infinite there",
                q.label
            )));
        }
    }
    let expo = 1.0 / (q.n as f64 - 1.0);
    let prof = q.clone();
    let last: Mutex<Option<(f64, f64)>> = Mutex::new(None);
    let eval = move |t: f64| {
        if !(t > eps && t < eps0) {
            return 0.0;
        }
        let mut memo = last.lock().unwrap_or_else(|e| e.into_inner());
        if let Some((lt, lv)) = *memo {
            if lt == t {
                return lv;
            }
        }
        let v = 1.0 / (t * prof.q_at(t).powf(expo));
        *memo = Some((t, v));
        v
    };
    let mut breaks = q.breaks.clone();
    breaks.extend([eps, eps0]);
    Ok(PsiFunction::new(format!("from_q[{}]", q.label), eval).with_breaks(breaks))
}

/// `∫_{ε<|x-x0|<ε0} Q(x) ψ^n(|x-x0|) dm(x)`.
pub fn weighted_annulus_integral(q: &QProfile, psi: &PsiFunction, eps: f64, eps0: f64) -> Result<f64> {
    let n = q.n as i32;
    let c = q.center.clone();
    let f = |x: &[f64]| {
        let w = psi.eval(dist(x, &c)).powi(n);
        if w == 0.0 {
            0.0
        } else {
            q.eval(x) * w
        }
    };
    let mut breaks = q.breaks.clone();
    breaks.extend_from_slice(&psi.breaks);
    annulus_integral_with_breaks(&f, &q.center, eps, eps0, &q.rule, &breaks)
}

/// Settings for the divergence probe of `∫_0^{ε0} dt/(t q^{1/(n-1)}(t))`.
///
/// The integral is cut at `t_k` with `log(1/t_k) = log(1/ε0) + 2^k - 1`, so each
/// increment covers a doubling of `log(1/t)`. Divergence is declared when, over the
/// final `window` increments, every increment exceeds `increment` or every ratio of
/// consecutive increments is at least `ratio`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiniConfig {
    pub doublings: usize,
    pub window: usize,
    pub increment: f64,
    pub ratio: f64,
}

impl Default for DiniConfig {
    fn default() -> Self {
        DiniConfig { doublings: 9, window: 5, increment: 0.05, ratio: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiniResult {
    /// Extrapolated total when convergent; the last partial integral otherwise.
    pub value: f64,
    pub diverges: bool,
    /// `(t_k, ∫_{t_k}^{ε0})` for every cut.
    pub partials: Vec<(f64, f64)>,
}

pub fn dini_integral(q: &QProfile, eps0: f64) -> Result<DiniResult> {
    dini_integral_with(q, eps0, &DiniConfig::default())
}

pub fn dini_integral_with(q: &QProfile, eps0: f64, cfg: &DiniConfig) -> Result<DiniResult> {
    if !(eps0 > 0.0) || eps0 > q.domain_radius {
        return invalid(format!("eps0 must lie in (0, {}], got {eps0}", q.domain_radius));
    }
    if cfg.window < 2 || cfg.doublings < cfg.window {
        return invalid("dini config needs window >= 2 and doublings >= window");
    }
    let expo = 1.0 / (q.n as f64 - 1.0);
    let u0 = (1.0 / eps0).ln();
    let cut = |k: usize| eps0 * (-((1u64 << k) as f64 - 1.0)).exp();
    let mut partials = Vec::with_capacity(cfg.doublings);
    let mut incs = Vec::with_capacity(cfg.doublings);
    let mut total = 0.0;
    let mut upper = eps0;
    for k in 1..=cfg.doublings {
        let lower = cut(k);
        debug_assert!((1.0 / lower).ln() > u0);
        let inc = radial_integral(|t| 1.0 / (t * q.q_at(t).powf(expo)), lower, upper, q.rule.radial_points, &q.breaks)?;
        total += inc;
        incs.push(inc);
        partials.push((lower, total));
        upper = lower;
    }
    let tail = &incs[incs.len() - cfg.window..];
    let big = tail.iter().all(|&d| !d.is_finite() || d > cfg.increment);
    let flat = tail.windows(2).all(|w| !w[1].is_finite() || w[1] >= cfg.ratio * w[0]);
    let diverges = !total.is_finite() || big || flat;
    let value = if diverges {
        total
    } else {
        let u = |k: usize| u0 + ((1u64 << k) as f64 - 1.0);
        let k = cfg.doublings;
        total + power_tail([u(k - 2), u(k - 1), u(k)], incs[k - 2], incs[k - 1])
    };
    Ok(DiniResult { value, diverges, partials })
}

/// Tail `∫_{u2}^∞ g` for `g` with `∫_u^∞ g ≈ c u^{-s}`, fitted to the increments over
/// `[u0, u1]` and `[u1, u2]` (in `u = log(1/t)`).
fn power_tail(u: [f64; 3], inc_a: f64, inc_b: f64) -> f64 {
    if !(inc_a > 0.0 && inc_b > 0.0 && inc_b < inc_a && u[0] > 0.0) {
        return 0.0;
    }
    let target = inc_b / inc_a;
    let ratio = |s: f64| (u[1].powf(-s) - u[2].powf(-s)) / (u[0].powf(-s) - u[1].powf(-s));
    let (mut lo, mut hi) = (1e-9, 200.0);
    if ratio(hi) > target || ratio(lo) < target {
        return 0.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    let c = inc_b / (u[1].powf(-s) - u[2].powf(-s));
    c * u[2].powf(-s)
}

/// Normalised mean oscillation `(1/(Ω_n ε^n)) ∫_{B(x0,ε)} |φ - φ_ε|` with `φ_ε` the ball mean.
pub fn fmo_oscillation(phi: &dyn Fn(&[f64]) -> f64, x0: &[f64], eps: f64, rule: &QuadratureRule) -> Result<f64> {
    if !(eps > 0.0) {
        return invalid(format!("ball radius must be positive, got {eps}"));
    }
    let n = x0.len();
    let vol = quadrature::ball_volume(n)? * eps.powi(n as i32);
    // the excluded core has relative volume 1e-9^n
    let inner = eps * 1e-9;
    let mean = quadrature::annulus_integral(phi, x0, inner, eps, rule)? / vol;
    let dev = |x: &[f64]| (phi(x) - mean).abs();
    Ok(quadrature::annulus_integral(&dev, x0, inner, eps, rule)? / vol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FmoConfig {
    pub k_min: i32,
    pub k_max: i32,
    pub window: usize,
    /// Relative per-halving growth above which the oscillation counts as growing.
    pub growth_tol: f64,
}

impl Default for FmoConfig {
    fn default() -> Self {
        FmoConfig { k_min: 4, k_max: 20, window: 5, growth_tol: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FmoSweep {
    pub sweep: Vec<(f64, f64)>,
    pub max_oscillation: f64,
    pub growing: bool,
    pub verdict: Verdict,
}

/// Oscillation over `ε = 2^{-k}`, `k_min ≤ k ≤ k_max`, restricted to `ε < eps_max`.
pub fn fmo_sweep(
    phi: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    eps_max: f64,
    rule: &QuadratureRule,
    cfg: &FmoConfig,
) -> Result<FmoSweep> {
    let mut sweep = Vec::new();
    for k in cfg.k_min..=cfg.k_max {
        let eps = 0.5f64.powi(k);
        if eps >= eps_max {
            continue;
        }
        sweep.push((eps, fmo_oscillation(phi, x0, eps, rule)?));
    }
    if sweep.len() < cfg.window + 1 {
        return Ok(FmoSweep { max_oscillation: f64::NAN, growing: false, verdict: Verdict::Inconclusive, sweep });
    }
    let vals: Vec<f64> = sweep.iter().map(|s| s.1).collect();
    let max_oscillation = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tail = &vals[vals.len() - cfg.window - 1..];
    let growing = tail.windows(2).all(|w| !w[1].is_finite() || w[1] - w[0] > cfg.growth_tol * w[0].abs().max(1.0));
    let verdict = if !max_oscillation.is_finite() || growing { Verdict::Fails } else { Verdict::Holds };
    Ok(FmoSweep { sweep, max_oscillation, growing, verdict })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionsReport {
    pub fmo: FmoSweep,
    pub condition1: Verdict,
    /// `sup q(r)/log^{n-1}(1/r)` over the probe radii.
    pub log_growth_constant: f64,
    pub condition2: Verdict,
    pub dini: DiniResult,
    pub condition3: Verdict,
}

/// Probe the three sufficient conditions for equicontinuity: finite mean oscillation,
/// `q(r) ≤ C log^{n-1}(1/r)`, and divergence of the Dini-type integral.
pub fn check_equicontinuity_conditions(q: &QProfile, eps0: f64) -> Result<ConditionsReport> {
    let fmo = fmo_sweep(&*q.eval, &q.center, eps0.min(q.domain_radius), &q.rule, &FmoConfig::default())?;
    let condition1 = fmo.verdict;

    let n1 = q.n as i32 - 1;
    let top = eps0.min(0.5).min(q.domain_radius * 0.5);
    let ratios: Vec<f64> = (0..=40).map(|k| {
        let r = top * 0.5f64.powi(k);
        q.q_at(r) / (1.0 / r).ln().powi(n1)
    }).collect();
    let log_growth_constant = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tail = &ratios[ratios.len() - 6..];
    let condition2 = if ratios.iter().any(|v| v.is_nan()) {
        Verdict::Inconclusive
    } else if !log_growth_constant.is_finite() || tail.windows(2).all(|w| w[1] > w[0] * (1.0 + 1e-3)) {
        Verdict::Fails
    } else {
        Verdict::Holds
    };

    let dini = dini_integral(q, eps0.min(q.domain_radius))?;
    let condition3 = if dini.diverges { Verdict::Holds } else { Verdict::Fails };
    Ok(ConditionsReport { fmo, condition1, log_growth_constant, condition2, dini, condition3 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyDecayReport {
    /// `(ε_k, ∫ Q ψ^n / I^n(ε_k, ε0))`.
    pub ratios: Vec<(f64, f64)>,
    pub decays: bool,
}

/// Probe `∫_{ε<|x-x0|<ε0} Q ψ^n = o(I^n(ε, ε0))` along `ε_k = ε0 2^{-k}`, `1 ≤ k ≤ steps`.
pub fn check_energy_decay(q: &QProfile, psi: &PsiFunction, eps0: f64, steps: usize) -> Result<EnergyDecayReport> {
    if steps < 6 {
        return invalid("need at least 6 halvings to judge decay");
    }
    let n = q.n as i32;
    let mut energy = 0.0;
    let mut ival = 0.0;
    let mut ratios = Vec::with_capacity(steps);
    let mut upper = eps0;
    for k in 1..=steps {
        let lower = eps0 * 0.5f64.powi(k as i32);
        energy += weighted_annulus_integral(q, psi, lower, upper)?;
        ival += radial_integral(|t| psi.eval(t), lower, upper, q.rule.radial_points, &psi.breaks)?;
        if !(ival > 0.0) {
            return Err(Error::DegenerateProfile(format!("I({lower}, {eps0}) = {ival} is not positive")));
        }
        ratios.push((lower, energy / ival.powi(n)));
        upper = lower;
    }
    let vals: Vec<f64> = ratios.iter().map(|r| r.1).collect();
    let tail = &vals[vals.len() - 5..];
    let decays = vals.iter().all(|v| v.is_finite())
        && tail.windows(2).all(|w| w[1] < w[0])
        && vals[vals.len() - 1] < vals[0];
    Ok(EnergyDecayReport { ratios, decays })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn q_mean_examples() {
        let c = QProfile::constant(3, 5.0).unwrap();
        assert_eq!(q_mean(&c, 0.3).unwrap(), 5.0);
        // quadrature path: |x|^2 and log(1/|x|) are constant on spheres about 0
        let sq = QProfile::new(2, vec![0.0, 0.0], 1.0, "sq", |x| x[0] * x[0] + x[1] * x[1]).unwrap();
        assert!((q_mean(&sq, 0.4).unwrap() - 0.16).abs() < 1e-14);
        let lg = QProfile::new(3, vec![0.0; 3], 1.0, "lg", |x| 1.0 / crate::geom::norm(x).ln().abs()).unwrap();
        let r: f64 = 0.2;
        assert!((q_mean(&lg, r).unwrap() - 1.0 / r.ln().abs()).abs() < 1e-12);
        assert!((q_mean(&QProfile::log_inverse(2).unwrap(), r).unwrap() - (1.0 / r).ln()).abs() < 1e-15);
        assert!(q_mean(&sq, 1.5).is_err());
        assert!(q_mean(&sq, 0.0).is_err());
    }

    #[test]
    fn off_centre_quadrature_mean() {
        // mean of x1 over a sphere about (0.3, 0) is 0.3
        let p = QProfile::new(2, vec![0.3, 0.0], 0.5, "x1", |x| x[0]).unwrap();
        assert!((q_mean(&p, 0.2).unwrap() - 0.3).abs() < 1e-14);
    }

    #[test]
    fn validate_catches_wrong_exact_mean() {
        let good = QProfile::log_squared_clamped(2).unwrap();
        good.validate().unwrap();
        let bad = QProfile::new(2, vec![0.0; 2], 1.0, "bad", |_| 2.0).unwrap().with_radial_mean(|_| 3.0);
        assert!(bad.validate().is_err());
        let neg = QProfile::new(2, vec![0.0; 2], 1.0, "neg", |_| -1.0).unwrap();
        assert!(neg.validate().is_err());
    }

    #[test]
    fn i_integral_examples() {
        let (eps, eps0) = (0.2, 0.7);
        let v = i_integral(&PsiFunction::constant(1.0 / (eps0 - eps)), eps, eps0).unwrap();
        assert!((v.value - 1.0).abs() < 1e-14 && !v.degenerate && !v.diverges);
        let z = i_integral(&PsiFunction::constant(0.0), eps, eps0).unwrap();
        assert!(z.degenerate);
        let huge = i_integral_with(&PsiFunction::constant(1e20), eps, eps0, &QuadratureRule::new(2), 1e12).unwrap();
        assert!(huge.diverges);
        assert!(i_integral(&PsiFunction::constant(1.0), 0.5, 0.5).is_err());
    }

    #[test]
    fn canonical_psi_examples() {
        assert!((psi_canonical(1.0 / E).unwrap() - E).abs() < 1e-14);
        assert!((psi_canonical((-2f64).exp()).unwrap() - E * E / 2.0).abs() < 1e-12);
        assert!(psi_canonical(1.0).is_err());
        assert!(psi_canonical(0.0).is_err());
        // closed form with eps0 = 1/e: log(3)
        let v = i_integral(&PsiFunction::canonical(), (-3f64).exp(), (-1f64).exp()).unwrap();
        assert!((v.value - 3f64.ln()).abs() < 1e-12);
        assert!((i_canonical_closed_form((-3f64).exp(), (-1f64).exp()).unwrap() - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn psi_from_unit_profile() {
        let q = QProfile::constant(2, 1.0).unwrap();
        let psi = psi_from_q(&q, 0.01, 0.1).unwrap();
        assert!((psi.eval(0.05) - 20.0).abs() < 1e-12);
        assert_eq!(psi.eval(0.2), 0.0);
        let i = i_integral(&psi, 0.01, 0.1).unwrap().value;
        assert!((i - 10f64.ln()).abs() < 1e-12);
        let energy = weighted_annulus_integral(&q, &psi, 0.01, 0.1).unwrap();
        assert!((energy / i - 2.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn psi_from_log_squared() {
        let q = QProfile::radial(2, 1.0, "l2", |r: f64| (1.0 / r).ln().powi(2)).unwrap();
        let psi = psi_from_q(&q, 0.01, 0.3).unwrap();
        let t: f64 = 0.1;
        assert!((psi.eval(t) - 1.0 / (t * (1.0 / t).ln().powi(2))).abs() < 1e-12);
    }

    #[test]
    fn psi_from_vanishing_profile_is_degenerate() {
        let q = QProfile::radial(2, 1.0, "gap", |r| if r > 0.2 && r < 0.3 { 0.0 } else { 1.0 }).unwrap();
        assert!(matches!(psi_from_q(&q, 0.1, 0.5), Err(Error::DegenerateProfile(_))));
    }

    #[test]
    fn dini_examples() {
        let one = QProfile::constant(2, 1.0).unwrap();
        assert!(dini_integral(&one, 0.3).unwrap().diverges);
        // substitution u = log(1/t): ∫_1^∞ du/u^2 = 1
        let l2 = QProfile::radial(2, 1.0, "l2", |r: f64| (1.0 / r).ln().powi(2)).unwrap();
        let d = dini_integral(&l2, (-1f64).exp()).unwrap();
        assert!(!d.diverges);
        assert!((d.value - 1.0).abs() < 1e-8, "{}", d.value);
        // q = C log(1/t) with C = 1: ∫ du/u diverges
        assert!(dini_integral(&QProfile::powlog(2, 1.0).unwrap(), (-1f64).exp()).unwrap().diverges);
    }

    #[test]
    fn dini_partials_are_increasing() {
        let d = dini_integral(&QProfile::log_squared_clamped(2).unwrap(), 1.0).unwrap();
        assert!(d.partials.windows(2).all(|w| w[1].1 > w[0].1 && w[1].0 < w[0].0));
        // ∫_{1/e}^1 dt/t + ∫_0^{1/e} dt/(t log^2(1/t)) = 2
        assert!((d.value - 2.0).abs() < 1e-8, "{}", d.value);
    }

    #[test]
    fn fmo_examples() {
        let rule = QuadratureRule::new(2);
        assert!(fmo_oscillation(&|_| 3.5, &[0.0, 0.0], 0.1, &rule).unwrap().abs() < 1e-12);
        let bounded = |x: &[f64]| (7.0 * x[0]).sin() * (3.0 * x[1]).cos();
        let o = fmo_oscillation(&bounded, &[0.1, 0.2], 0.5, &rule).unwrap();
        assert!(o <= 2.0 && o > 0.0);
        // log(1/|x|): n ∫_0^1 s^{n-1} |log(1/s) - 1/n| ds, constant in eps; 1/e for n = 2
        let lg = |x: &[f64]| (1.0 / crate::geom::norm(x)).ln();
        let sweep = fmo_sweep(&lg, &[0.0, 0.0], 1.0, &rule, &FmoConfig::default()).unwrap();
        assert_eq!(sweep.verdict, Verdict::Holds);
        for (_, v) in &sweep.sweep {
            assert!((v - 1.0 / E).abs() < 1e-6, "{v}");
        }
        let l2 = |x: &[f64]| (1.0 / crate::geom::norm(x)).ln().powi(2);
        let sweep = fmo_sweep(&l2, &[0.0, 0.0], 1.0, &rule, &FmoConfig::default()).unwrap();
        assert!(sweep.growing);
        assert_eq!(sweep.verdict, Verdict::Fails);
    }

    #[test]
    fn equicontinuity_condition_examples() {
        let k = check_equicontinuity_conditions(&QProfile::constant(2, 4.0).unwrap(), 0.5).unwrap();
        assert_eq!((k.condition1, k.condition2, k.condition3), (Verdict::Holds, Verdict::Holds, Verdict::Holds));
        let l2 = QProfile::radial(2, 1.0, "l2", |r: f64| (1.0 / r).ln().powi(2)).unwrap();
        let r = check_equicontinuity_conditions(&l2, 0.3).unwrap();
        assert_eq!(r.condition3, Verdict::Fails);
        assert_eq!(r.condition2, Verdict::Fails);
        let lg = check_equicontinuity_conditions(&QProfile::log_inverse(2).unwrap(), 0.3).unwrap();
        assert_eq!(lg.condition2, Verdict::Holds);
        assert!((lg.log_growth_constant - 1.0).abs() < 1e-12);
        assert_eq!(lg.condition1, Verdict::Holds);
        assert_eq!(lg.condition3, Verdict::Holds);
    }

    #[test]
    fn energy_decay_examples() {
        let lg = QProfile::log_inverse(2).unwrap();
        let r = check_energy_decay(&lg, &PsiFunction::canonical(), 0.3, 30).unwrap();
        assert!(r.decays);
        // Q ≡ 1 with ψ = 1/t: ratio = ω / I^{n-1}
        let one = QProfile::constant(2, 1.0).unwrap();
        let psi = psi_from_q(&one, 1e-12, 0.25).unwrap();
        let r = check_energy_decay(&one, &psi, 0.25, 20).unwrap();
        assert!(r.decays);
        for (eps, ratio) in &r.ratios {
            let expected = 2.0 * PI / (0.25 / eps).ln();
            assert!((ratio - expected).abs() < 1e-9 * expected);
        }
        let ex = QProfile::exp_inverse(2).unwrap();
        assert!(!check_energy_decay(&ex, &PsiFunction::canonical(), 0.3, 30).unwrap().decays);
        let zero = PsiFunction::constant(0.0);
        assert!(matches!(check_energy_decay(&one, &zero, 0.3, 10), Err(Error::DegenerateProfile(_))));
    }
}
