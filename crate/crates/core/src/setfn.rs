//! The modulus-based set function `c(E)` of compact subsets of the compactified space.
//!
//! `m_t(E, r, x)` is the modulus of the curves joining `∂B*(x, t)` to `E ∩ cl B*(x, r)`.
//! A chordal chart sending `x` to the origin turns `B*(x, t)` into the Euclidean ball of
//! radius `t/√(1-t²)`, and the chart is Möbius, so the modulus is the capacity of that
//! ball with the chart image of `E ∩ cl B*(x, r)` as plate.
//! `c(E, x) = max{m(E, x), m(E, x̃)}` with `x̃ = -x/|x|²` and `c(E) = inf_x c(E, x)`.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{invalid, Error, Result};
use crate::geom::{antipodal, chordal_distance, chordal_radius_to_euclidean, dist, norm, ChordalChart, ExtPoint};
use crate::modulus::{capacity_numeric, Condenser, Plate, Region, SolverOptions};
use crate::quadrature::omega;

/// Outer chordal radius of the standard set function.
pub const STANDARD_T: f64 = 0.866_025_403_784_438_6;
/// Inner chordal radius of the standard set function.
pub const STANDARD_R: f64 = FRAC_1_SQRT_2;

/// `ω_{n-1} (log √3)^{1-n}`, the modulus of the standard chart ring and an upper bound
/// for `c(E)`.
pub fn set_function_cap(n: usize) -> Result<f64> {
    Ok(omega(n)? * (0.5 * 3f64.ln()).powi(1 - n as i32))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    Point(Vec<f64>),
    /// Closed Euclidean ball.
    Ball { center: Vec<f64>, radius: f64 },
    Segment { a: Vec<f64>, b: Vec<f64> },
    /// Closed axis-aligned box, the union of grid cells it covers.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Closed chordal ball `cl B*(center, radius)`.
    Cap { center: ExtPoint, radius: f64 },
}

impl Primitive {
    fn dim(&self) -> usize {
        match self {
            Primitive::Point(p) => p.len(),
            Primitive::Ball { center, .. } => center.len(),
            Primitive::Segment { a, .. } => a.len(),
            Primitive::Box { lo, .. } => lo.len(),
            Primitive::Cap { center, .. } => center.dim(),
        }
    }

    /// Euclidean projection of `w` onto the primitive (not used for caps).
    fn project(&self, w: &[f64]) -> Vec<f64> {
        match self {
            Primitive::Point(p) => p.clone(),
            Primitive::Ball { center, radius } => {
                let d = dist(w, center);
                if d <= *radius {
                    w.to_vec()
                } else {
                    center.iter().zip(w).map(|(c, v)| c + (v - c) * radius / d).collect()
                }
            }
            Primitive::Segment { a, b } => {
                let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
                let len2: f64 = ab.iter().map(|v| v * v).sum();
                let s = if len2 == 0.0 {
                    0.0
                } else {
                    (w.iter().zip(a).zip(&ab).map(|((v, x), d)| (v - x) * d).sum::<f64>() / len2).clamp(0.0, 1.0)
                };
                a.iter().zip(&ab).map(|(x, d)| x + s * d).collect()
            }
            Primitive::Box { lo, hi } => w.iter().zip(lo.iter().zip(hi)).map(|(v, (a, b))| v.clamp(*a, *b)).collect(),
            Primitive::Cap { .. } => unreachable!("caps are measured chordally"),
        }
    }

    /// The point of the primitive farthest from the origin, which is chordally nearest
    /// to infinity.
    fn farthest(&self) -> Vec<f64> {
        match self {
            Primitive::Point(p) => p.clone(),
            Primitive::Ball { center, radius } => {
                let c = norm(center);
                if c == 0.0 {
                    let mut p = center.clone();
                    p[0] += radius;
                    p
                } else {
                    center.iter().map(|v| v * (1.0 + radius / c)).collect()
                }
            }
            Primitive::Segment { a, b } => if norm(a) >= norm(b) { a } else { b }.clone(),
            Primitive::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| if a.abs() > b.abs() { *a } else { *b }).collect(),
            Primitive::Cap { .. } => unreachable!("caps are measured chordally"),
        }
    }

    /// Chordal distance from `w` to the primitive; zero inside. Exact for points and
    /// caps, measured to the Euclidean nearest point otherwise.
    fn gap(&self, w: &ExtPoint) -> f64 {
        let target = match (self, w) {
            (Primitive::Cap { center, radius }, _) => {
                return (chordal_distance(w, center).unwrap_or(1.0) - radius).max(0.0);
            }
            (_, ExtPoint::Infinity { .. }) => self.farthest(),
            (_, ExtPoint::Finite(c)) => self.project(c),
        };
        chordal_distance(w, &ExtPoint::Finite(target)).unwrap_or(1.0)
    }

    /// Points of the primitive with chordal spacing at most `step`: every point of a
    /// thin primitive, the centre of a solid one.
    fn samples(&self, step: f64) -> Vec<ExtPoint> {
        match self {
            Primitive::Point(p) => vec![ExtPoint::Finite(p.clone())],
            Primitive::Ball { center, .. } => vec![ExtPoint::Finite(center.clone())],
            Primitive::Box { lo, hi } => {
                vec![ExtPoint::Finite(lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect())]
            }
            Primitive::Cap { center, .. } => vec![center.clone()],
            Primitive::Segment { a, b } => {
                let len = dist(a, b);
                let mut out = Vec::new();
                let mut s = 0.0;
                while s < 1.0 {
                    let w: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect();
                    // the chordal metric has density 1/(1+|w|²)
                    let ds = step * (1.0 + w.iter().map(|v| v * v).sum::<f64>());
                    out.push(ExtPoint::Finite(w));
                    if len == 0.0 {
                        return out;
                    }
                    s += ds / len;
                }
                out.push(ExtPoint::Finite(b.clone()));
                out
            }
        }
    }
}

/// A nonempty finite union of primitives in the compactified `n`-space.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactSet {
    n: usize,
    parts: Vec<Primitive>,
}

impl CompactSet {
    pub fn new(parts: Vec<Primitive>) -> Result<Self> {
        let Some(first) = parts.first() else {
            return invalid("a compact set needs at least one primitive");
        };
        let n = first.dim();
        if n < 2 {
            return invalid(format!("dimension must be at least 2, got {n}"));
        }
        for p in &parts {
            validate(p, n)?;
        }
        Ok(CompactSet { n, parts })
    }

    pub fn point(p: Vec<f64>) -> Result<Self> {
        Self::new(vec![Primitive::Point(p)])
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        Self::new(vec![Primitive::Ball { center, radius }])
    }

    pub fn segment(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        Self::new(vec![Primitive::Segment { a, b }])
    }

    pub fn cube(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        Self::new(vec![Primitive::Box { lo, hi }])
    }

    pub fn cap(center: ExtPoint, radius: f64) -> Result<Self> {
        Self::new(vec![Primitive::Cap { center, radius }])
    }

    pub fn union(sets: &[CompactSet]) -> Result<Self> {
        Self::new(sets.iter().flat_map(|s| s.parts.iter().cloned()).collect())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn parts(&self) -> &[Primitive] {
        &self.parts
    }

    /// Chordal distance from `w` to the set, zero on it.
    pub fn gap(&self, w: &ExtPoint) -> f64 {
        self.parts.iter().map(|p| p.gap(w)).fold(f64::INFINITY, f64::min)
    }

    fn samples(&self, step: f64) -> Vec<ExtPoint> {
        self.parts.iter().flat_map(|p| p.samples(step)).collect()
    }

    /// Chordal diameter, exact for points and single caps and taken over samples of
    /// segment points, cap rims and box corners otherwise.
    pub fn chordal_diameter(&self) -> Result<f64> {
        let mut pts = Vec::new();
        let mut best: f64 = 0.0;
        for p in &self.parts {
            match p {
                Primitive::Point(x) => pts.push(ExtPoint::Finite(x.clone())),
                Primitive::Segment { .. } => pts.extend(p.samples(1.0 / 256.0)),
                Primitive::Ball { center, radius } => {
                    for k in 0..self.n {
                        for s in [-1.0, 1.0] {
                            let mut x = center.clone();
                            x[k] += s * radius;
                            pts.push(ExtPoint::Finite(x));
                        }
                    }
                }
                Primitive::Box { lo, hi } => {
                    for c in 0..1usize << self.n {
                        let x = (0..self.n).map(|k| if c >> k & 1 == 1 { hi[k] } else { lo[k] }).collect();
                        pts.push(ExtPoint::Finite(x));
                    }
                }
                Primitive::Cap { center, radius } => {
                    // angular radius φ with radius = sin(φ/2); the rim has chord sin φ
                    let phi = 2.0 * radius.min(1.0).asin();
                    best = best.max(if phi >= std::f64::consts::FRAC_PI_2 { 1.0 } else { phi.sin() });
                    pts.extend(cap_rim(center, *radius));
                }
            }
        }
        Ok(best.max(crate::geom::chordal_diameter(&pts)?))
    }

    /// Parse one primitive per line: `point x1 .. xn`, `ball c1 .. cn r`,
    /// `segment a1 .. an b1 .. bn` or `box lo1 .. lon hi1 .. hin`. Blank lines and
    /// `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut parts = Vec::new();
        let mut n: Option<usize> = None;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let perr = |message: String| Error::Parse { line, message };
            let mut words = body.split_whitespace();
            let kind = words.next().expect("nonempty line");
            let nums = words
                .map(|w| w.parse::<f64>().map_err(|_| perr(format!("`{w}` is not a number"))))
                .collect::<Result<Vec<f64>>>()?;
            let (dim, prim) = match kind {
                "point" => (nums.len(), Primitive::Point(nums)),
                "ball" if !nums.is_empty() => {
                    let k = nums.len() - 1;
                    (k, Primitive::Ball { center: nums[..k].to_vec(), radius: nums[k] })
                }
                "segment" | "box" if nums.len() % 2 == 0 => {
                    let k = nums.len() / 2;
                    let (a, b) = (nums[..k].to_vec(), nums[k..].to_vec());
                    (k, if kind == "segment" { Primitive::Segment { a, b } } else { Primitive::Box { lo: a, hi: b } })
                }
                "ball" | "segment" | "box" => return Err(perr(format!("wrong number of values for `{kind}`"))),
                other => return Err(perr(format!("unknown primitive `{other}`"))),
            };
            match n {
                None => n = Some(dim),
                Some(m) if m != dim => return Err(perr(format!("dimension {dim} differs from earlier lines ({m})"))),
                _ => {}
            }
            validate(&prim, dim).map_err(|e| perr(e.to_string()))?;
            parts.push(prim);
        }
        if parts.is_empty() {
            return Err(Error::Parse { line: 0, message: "no primitives".into() });
        }
        Self::new(parts)
    }
}

fn validate(p: &Primitive, n: usize) -> Result<()> {
    if p.dim() != n {
        return invalid(format!("primitive of dimension {} in a set of dimension {n}", p.dim()));
    }
    let finite = |v: &[f64]| v.iter().all(|c| c.is_finite());
    let ok = match p {
        Primitive::Point(x) => n >= 2 && finite(x),
        Primitive::Ball { center, radius } => finite(center) && *radius >= 0.0 && radius.is_finite(),
        Primitive::Segment { a, b } => b.len() == n && finite(a) && finite(b),
        Primitive::Box { lo, hi } => hi.len() == n && finite(lo) && finite(hi) && lo.iter().zip(hi).all(|(a, b)| a <= b),
        Primitive::Cap { radius, .. } => *radius >= 0.0 && *radius < 1.0,
    };
    if ok {
        Ok(())
    } else {
        invalid(format!("malformed primitive {p:?}"))
    }
}

/// Points on the rim of a cap along the coordinate directions of its chart.
fn cap_rim(center: &ExtPoint, radius: f64) -> Vec<ExtPoint> {
    let n = center.dim();
    let chart = ChordalChart::centered_at(center);
    let Ok(rr) = chordal_radius_to_euclidean(radius.max(1e-300)) else {
        return vec![center.clone()];
    };
    let mut out = Vec::new();
    for k in 0..n {
        for s in [-1.0, 1.0] {
            let mut y = vec![0.0; n];
            y[k] = s * rr;
            out.push(chart.apply(&ExtPoint::Finite(y)));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetFnOptions {
    /// Cells across the chart ball.
    pub grid: usize,
    pub solver: SolverOptions,
}

impl Default for SetFnOptions {
    fn default() -> Self {
        SetFnOptions { grid: 64, solver: SolverOptions::default() }
    }
}

/// `m_t(E, r, x)`: modulus of the curves joining `∂B*(x, t)` to `E ∩ cl B*(x, r)`,
/// or 0 when the intersection is empty at grid resolution.
///
/// A chart node `y` belongs to the plate when `|y| ≤ R_r + h/2` and its preimage lies
/// within chordal distance `(h/2)/(1+|y|²)` of `E` (half a cell, pulled back through
/// the chart's conformal factor). Samples of thin primitives also mark their nearest
/// nodes, so points and segments never slip between nodes.
pub fn m_t_modulus(e: &CompactSet, r: f64, x: &ExtPoint, t: f64, opts: &SetFnOptions) -> Result<f64> {
    if !(r > 0.0 && r < t && t < 1.0) {
        return invalid(format!("need 0 < r < t < 1, got r = {r}, t = {t}"));
    }
    let n = e.dim();
    if x.dim() != n {
        return invalid(format!("centre has dimension {}, set has {n}", x.dim()));
    }
    let chart = ChordalChart::centered_at(x);
    let r_in = chordal_radius_to_euclidean(r)?;
    let r_out = chordal_radius_to_euclidean(t)?;
    let domain = Region::ball(vec![0.0; n], r_out)?;
    let spec = domain.grid(opts.grid)?;
    let h = spec.h;

    let step = 0.5 * h / (1.0 + r_in * r_in);
    let samples: Vec<Vec<f64>> = e
        .samples(step)
        .iter()
        .filter_map(|w| match chart.apply(w) {
            ExtPoint::Finite(y) if norm(&y) <= r_in => Some(y),
            _ => None,
        })
        .collect();
    let inside = {
        let (e, chart) = (e.clone(), chart.clone());
        move |y: &[f64], slack: f64| {
            let s = y.iter().map(|v| v * v).sum::<f64>();
            s.sqrt() <= r_in + slack && e.gap(&chart.apply(&ExtPoint::Finite(y.to_vec()))) <= slack / (1.0 + s)
        }
    };
    if samples.is_empty() {
        let mut y = vec![0.0; n];
        let hit = (0..spec.node_count()).any(|i| {
            spec.node_coords(i, &mut y);
            inside(&y, 0.0)
        });
        if !hit {
            return Ok(0.0);
        }
    }
    let plate = Plate::Union(vec![Plate::mask(move |y, h| inside(y, 0.5 * h)), Plate::Points(samples)]);
    let c = Condenser::new(domain, plate, opts.grid)?;
    Ok(capacity_numeric(&c, &opts.solver)?.value)
}

/// `m(E, x) = m_{√3/2}(E, √2/2, x)`.
pub fn m_standard(e: &CompactSet, x: &ExtPoint, opts: &SetFnOptions) -> Result<f64> {
    m_t_modulus(e, STANDARD_R, x, STANDARD_T, opts)
}

/// Exact `m_t` of a set containing `cl B*(x, r)`: the modulus of the chart ring.
pub fn m_t_full_cap(r: f64, t: f64, n: usize) -> Result<f64> {
    if !(r > 0.0 && r < t && t < 1.0) {
        return invalid(format!("need 0 < r < t < 1, got r = {r}, t = {t}"));
    }
    crate::modulus::ring_modulus_exact(chordal_radius_to_euclidean(r)?, chordal_radius_to_euclidean(t)?, n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchPoint {
    pub x: ExtPoint,
    pub m_x: f64,
    pub m_antipode: f64,
    /// `max{m(E, x), m(E, x̃)}`.
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetFunctionValue {
    pub value: f64,
    pub argmin: ExtPoint,
    pub argmin_index: usize,
    /// Every evaluated search point, in search order.
    pub search: Vec<SearchPoint>,
}

fn sphere_point(u: &[f64]) -> ExtPoint {
    let n = u.len() - 1;
    let len = norm(u);
    let mut p: Vec<f64> = u.iter().map(|v| 0.5 * v / len).collect();
    p[n] += 0.5;
    if p[n] <= f64::EPSILON {
        // the south pole; from_sphere would return a tiny nonzero point
        return ExtPoint::Finite(vec![0.0; n]);
    }
    ExtPoint::from_sphere(&p)
}

/// Unit direction in `R^{n+1}` of the chordal-sphere point of `x`.
fn sphere_direction(x: &ExtPoint) -> Vec<f64> {
    let mut p = x.to_sphere();
    let n = p.len() - 1;
    p[n] -= 0.5;
    p.iter().map(|v| 2.0 * v).collect()
}

/// The default infimum search set: `0`, `∞`, then the points of the chordal sphere in
/// the directions of `{-1, 0, 1}^{n+1}` with at most three nonzero entries (the 26
/// directions of the cube when `n = 2`), the poles skipped as duplicates of `0`, `∞`.
pub fn default_x_grid(n: usize) -> Result<Vec<ExtPoint>> {
    let mut out = vec![ExtPoint::origin(n)?, ExtPoint::infinity(n)?];
    let m = n + 1;
    let total = 3usize.pow(m as u32);
    for code in 0..total {
        let mut c = code;
        let u: Vec<f64> = (0..m)
            .map(|_| {
                let d = c % 3;
                c /= 3;
                d as f64 - 1.0
            })
            .collect();
        let nonzero = u.iter().filter(|v| **v != 0.0).count();
        let polar = nonzero == 1 && u[n] != 0.0;
        if nonzero == 0 || nonzero > 3 || polar {
            continue;
        }
        out.push(sphere_point(&u));
    }
    Ok(out)
}

/// Map `f` over `items` on scoped worker threads, preserving order. `RINGQ_THREADS`
/// overrides the worker count.
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = std::env::var("RINGQ_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |v| v.get()))
        .clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<R>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

fn evaluate(e: &CompactSet, xs: &[ExtPoint], opts: &SetFnOptions) -> Result<Vec<SearchPoint>> {
    // each x and its antipode as one flat job list
    let jobs: Vec<ExtPoint> = xs.iter().flat_map(|x| [x.clone(), antipodal(x)]).collect();
    let ms = par_map(&jobs, |x| m_standard(e, x, opts)).into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(xs
        .iter()
        .zip(ms.chunks(2))
        .map(|(x, m)| SearchPoint { x: x.clone(), m_x: m[0], m_antipode: m[1], c: m[0].max(m[1]) })
        .collect())
}

fn best(search: &[SearchPoint]) -> usize {
    // strict comparison keeps the lowest index on ties
    let mut k = 0;
    for (i, s) in search.iter().enumerate() {
        if s.c < search[k].c {
            k = i;
        }
    }
    k
}

/// `min` over `x_grid` of `c(E, x)`: an upper approximation of `c(E)`.
pub fn c_set(e: &CompactSet, x_grid: &[ExtPoint], opts: &SetFnOptions) -> Result<SetFunctionValue> {
    if x_grid.is_empty() {
        return invalid("the search grid is empty");
    }
    if let Some(x) = x_grid.iter().find(|x| x.dim() != e.dim()) {
        return invalid(format!("search point {x} has the wrong dimension"));
    }
    let search = evaluate(e, x_grid, opts)?;
    let k = best(&search);
    Ok(SetFunctionValue { value: search[k].c, argmin: search[k].x.clone(), argmin_index: k, search })
}

/// [`c_set`] over [`default_x_grid`], then coordinate moves of the best point on the
/// chordal sphere with steps 0.3, 0.15 and 0.075, keeping strict improvements.
pub fn c_set_search(e: &CompactSet, opts: &SetFnOptions) -> Result<SetFunctionValue> {
    let mut out = c_set(e, &default_x_grid(e.dim())?, opts)?;
    let m = e.dim() + 1;
    for step in [0.3, 0.15, 0.075] {
        let u = sphere_direction(&out.argmin);
        let cands: Vec<ExtPoint> = (0..m)
            .flat_map(|k| [-step, step].map(|s| (k, s)))
            .map(|(k, s)| {
                let mut v = u.clone();
                v[k] += s;
                sphere_point(&v)
            })
            .collect();
        let found = evaluate(e, &cands, opts)?;
        let base = out.search.len();
        out.search.extend(found);
        let k = best(&out.search);
        if k >= base {
            out.value = out.search[k].c;
            out.argmin = out.search[k].x.clone();
            out.argmin_index = k;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetLowerBound {
    /// `min{β, β a / cap}` with `cap = ω_{n-1}(log √3)^{1-n}`.
    pub c_n: f64,
    /// `c_n h c(E_f)`.
    pub bound: f64,
    /// `β min{c(f(C)), c(E_f)}`.
    pub raw: f64,
    /// Whether `c(f(C))` attains the minimum in `raw`.
    pub image_branch: bool,
}

/// Lower bounds for the modulus of the curves joining an image plate `f(C)` of chordal
/// diameter `h` to the omitted set `E_f`, up to the cited constants `β` and `a`.
pub fn set_function_lower_bound(
    c_fc: f64,
    c_ef: f64,
    h: f64,
    beta_vu: f64,
    a_vu: f64,
    n: usize,
) -> Result<SetLowerBound> {
    if !(beta_vu > 0.0 && a_vu > 0.0) {
        return invalid(format!("constants must be positive, got beta = {beta_vu}, a = {a_vu}"));
    }
    if !(c_fc >= 0.0 && c_ef >= 0.0 && h >= 0.0) {
        return invalid("set function values and the diameter must be nonnegative");
    }
    let c_n = beta_vu.min(beta_vu * a_vu / set_function_cap(n)?);
    Ok(SetLowerBound { c_n, bound: c_n * h * c_ef, raw: beta_vu * c_fc.min(c_ef), image_branch: c_fc <= c_ef })
}

/// `α(ε) / (c_n δ)`: upper estimate for the chordal diameter of the image plate.
pub fn image_diameter_estimate(alpha_eps: f64, c_n: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return invalid(format!("delta must be positive, got {delta}"));
    }
    if !(c_n > 0.0 && alpha_eps >= 0.0) {
        return invalid("need c_n > 0 and alpha >= 0");
    }
    Ok(alpha_eps / (c_n * delta))
}

/// Largest `a` with `c(E) ≥ a h(E)` over measured `(h(E), c(E))` pairs.
pub fn fit_diameter_constant(pairs: &[(f64, f64)]) -> Result<f64> {
    pairs
        .iter()
        .filter(|(h, _)| *h > 0.0)
        .map(|(h, c)| c / h)
        .reduce(f64::min)
        .map_or_else(|| invalid("need at least one set of positive diameter"), Ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pt(c: &[f64]) -> ExtPoint {
        ExtPoint::finite(c.to_vec()).unwrap()
    }

    #[test]
    fn standard_radii_map_to_one_and_root_three() {
        assert!((STANDARD_T - 3f64.sqrt() / 2.0).abs() < 1e-16);
        assert!((chordal_radius_to_euclidean(STANDARD_R).unwrap() - 1.0).abs() < 1e-15);
        assert!((chordal_radius_to_euclidean(STANDARD_T).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        assert!((set_function_cap(2).unwrap() - 2.0 * PI / (0.5 * 3f64.ln())).abs() < 1e-12);
        assert!((m_t_full_cap(STANDARD_R, STANDARD_T, 3).unwrap() - set_function_cap(3).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn disjoint_set_gives_zero() {
        let e = CompactSet::point(vec![5.0, 5.0]).unwrap();
        assert_eq!(m_standard(&e, &pt(&[0.0, 0.0]), &SetFnOptions::default()).unwrap(), 0.0);
        let seg = CompactSet::segment(vec![3.0, 0.0], vec![4.0, 0.0]).unwrap();
        assert_eq!(m_standard(&seg, &pt(&[0.0, 0.0]), &SetFnOptions::default()).unwrap(), 0.0);
    }

    #[test]
    fn argument_checks() {
        let e = CompactSet::point(vec![0.0, 0.0]).unwrap();
        let x = pt(&[0.0, 0.0]);
        let o = SetFnOptions::default();
        assert!(m_t_modulus(&e, 0.8, &x, 0.7, &o).is_err());
        assert!(m_t_modulus(&e, 0.5, &x, 1.0, &o).is_err());
        assert!(c_set(&e, &[], &o).is_err());
        assert!(image_diameter_estimate(1.0, 1.0, 0.0).is_err());
        assert!(set_function_lower_bound(1.0, 1.0, 1.0, 0.0, 1.0, 2).is_err());
    }

    #[test]
    fn full_cap_matches_chart_ring() {
        let o = SetFnOptions::default();
        let want = set_function_cap(2).unwrap();
        for x in [pt(&[0.0, 0.0]), pt(&[0.7, -1.3]), ExtPoint::infinity(2).unwrap()] {
            let e = CompactSet::cap(x.clone(), STANDARD_R).unwrap();
            let m = m_standard(&e, &x, &o).unwrap();
            assert!((m - want).abs() < 0.05 * want, "x = {x}: {m} vs {want}");
        }
    }

    #[test]
    fn modulus_decreases_with_outer_radius() {
        let o = SetFnOptions::default();
        let x = pt(&[0.2, 0.1]);
        let e = CompactSet::cap(pt(&[0.3, 0.0]), 0.3).unwrap();
        let mut last = f64::INFINITY;
        for t in [0.75, 0.8, 0.85, 0.9] {
            let m = m_t_modulus(&e, 0.7, &x, t, &o).unwrap();
            assert!(m > 0.0 && m < last, "t = {t}: {m} after {last}");
            last = m;
        }
    }

    #[test]
    fn inclusion_is_monotone() {
        let o = SetFnOptions::default();
        let x = pt(&[0.1, 0.0]);
        let small = CompactSet::segment(vec![0.0, 0.0], vec![0.3, 0.2]).unwrap();
        let big = CompactSet::union(&[small.clone(), CompactSet::ball(vec![0.2, -0.2], 0.3).unwrap()]).unwrap();
        let a = m_standard(&small, &x, &o).unwrap();
        let b = m_standard(&big, &x, &o).unwrap();
        assert!(a <= b + 1e-6 * b, "{a} > {b}");
    }

    #[test]
    fn relabeling_parts_changes_nothing() {
        let o = SetFnOptions::default();
        let x = pt(&[0.3, 0.0]);
        let p = CompactSet::point(vec![0.1, 0.4]).unwrap();
        let s = CompactSet::segment(vec![-0.5, 0.0], vec![0.0, -0.5]).unwrap();
        let a = m_standard(&CompactSet::union(&[p.clone(), s.clone()]).unwrap(), &x, &o).unwrap();
        let b = m_standard(&CompactSet::union(&[s, p]).unwrap(), &x, &o).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn default_grid_shape() {
        let g = default_x_grid(2).unwrap();
        assert_eq!(g.len(), 26);
        assert_eq!(g[0], pt(&[0.0, 0.0]));
        assert!(g[1].is_infinity());
        // closed under the antipodal map
        for x in &g {
            let a = antipodal(x);
            assert!(g.iter().any(|y| chordal_distance(y, &a).unwrap() < 1e-12), "{x}");
        }
        assert_eq!(default_x_grid(3).unwrap().len(), 2 + 8 + 24 + 32 - 2);
    }

    #[test]
    fn set_function_stays_below_cap_and_is_symmetric() {
        let o = SetFnOptions::default();
        let e = CompactSet::segment(vec![-0.4, 0.1], vec![0.6, 0.3]).unwrap();
        let v = c_set(&e, &default_x_grid(2).unwrap(), &o).unwrap();
        let cap = set_function_cap(2).unwrap();
        assert!(v.value > 0.0 && v.value <= 1.05 * cap, "{}", v.value);
        // c(E, x) = c(E, x̃): the grid holds both members of every antipodal pair
        let g = &v.search;
        for s in g {
            let a = antipodal(&s.x);
            let twin = g.iter().find(|t| chordal_distance(&t.x, &a).unwrap() < 1e-12).unwrap();
            assert_eq!(s.c, twin.c);
        }
    }

    #[test]
    fn parser_round_trip() {
        let e = CompactSet::parse("# probe\npoint 0 0\n\nball 1 1 0.5  # solid\nsegment 0 0 1 0\nbox 0 0 1 1\n").unwrap();
        assert_eq!(e.dim(), 2);
        assert_eq!(e.parts().len(), 4);
        assert_eq!(e.parts()[1], Primitive::Ball { center: vec![1.0, 1.0], radius: 0.5 });
        for (text, line) in [("point 0 0\npoint 1 2 3", 2), ("segment 0 0 1", 1), ("disc 0 0 1", 1), ("ball 0 0 -1", 1), ("point 0 x", 1)] {
            match CompactSet::parse(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(CompactSet::parse("# nothing\n").is_err());
    }

    #[test]
    fn lower_bound_branches() {
        let cap = set_function_cap(2).unwrap();
        let b = set_function_lower_bound(0.5, 0.0, 0.3, 1.0, 1.0, 2).unwrap();
        assert_eq!(b.bound, 0.0);
        assert!((b.c_n - 1.0 / cap).abs() < 1e-15);
        let b = set_function_lower_bound(2.0, 2.0, 1.0, 2.0, 20.0, 2).unwrap();
        assert!(b.image_branch);
        assert_eq!(b.c_n, 2.0);
        assert_eq!(b.raw, 4.0);
        assert_eq!(b.bound, 4.0);
        assert!(!set_function_lower_bound(3.0, 2.0, 1.0, 1.0, 1.0, 2).unwrap().image_branch);
    }

    #[test]
    fn image_diameter_estimate_is_linear() {
        assert_eq!(image_diameter_estimate(0.0, 0.5, 0.2).unwrap(), 0.0);
        let a = image_diameter_estimate(0.3, 0.5, 0.2).unwrap();
        assert!((image_diameter_estimate(0.3, 0.5, 0.1).unwrap() - 2.0 * a).abs() < 1e-15);
    }

    #[test]
    fn diameters() {
        let e = CompactSet::segment(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        assert!((e.chordal_diameter().unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        let c = CompactSet::cap(pt(&[0.0, 0.0]), STANDARD_R).unwrap();
        assert!((c.chordal_diameter().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(CompactSet::point(vec![1.0, 2.0]).unwrap().chordal_diameter().unwrap(), 0.0);
        assert_eq!(fit_diameter_constant(&[(0.5, 2.0), (0.25, 0.75), (0.0, 0.1)]).unwrap(), 3.0);
    }
}
