//! Conformal moduli of ring families and condenser capacities.
//!
//! [`ring_modulus_exact`] is the closed form for spherical rings. [`capacity_numeric`]
//! minimizes the discrete `p`-energy (default `p = n`) of piecewise-linear functions
//! that equal 1 on the plate and vanish near the boundary of the domain;
//! [`modulus_connecting`] does the same between two plates with a free (Neumann)
//! outer boundary.
//!
//! Sets are discretized on nodes: a node belongs to a plate when it lies within half a
//! cell of it, and to the boundary of a domain when it lies within half a cell of the
//! complement. This places the discrete boundaries on the true ones on average, rather
//! than systematically inside the ring.

mod grid;
mod solver;

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::geom::dist;
use crate::quadrature::omega;

pub use grid::{GridField, GridSpec};
use solver::{Problem, Settings, EXCLUDED, FREE, ONE, ZERO};

/// `ω_{n-1} (log(r2/r1))^{1-n}`: modulus of the curves joining the boundary spheres of
/// a spherical ring, equal to the capacity of the spherical condenser.
pub fn ring_modulus_exact(r1: f64, r2: f64, n: usize) -> Result<f64> {
    if !(r1 > 0.0 && r1 < r2) {
        return invalid(format!("need 0 < r1 < r2, got ({r1}, {r2})"));
    }
    Ok(omega(n)? * (r2 / r1).ln().powi(1 - n as i32))
}

/// Upper bound `F / Iⁿ` for the capacity of an image condenser, where `F` bounds the
/// weighted energy `∫ Q ψⁿ` and `I = ∫ ψ`.
pub fn capacity_upper_bound(f_val: f64, i_val: f64, n: usize) -> Result<f64> {
    if !(i_val > 0.0) {
        return invalid(format!("I must be positive, got {i_val}"));
    }
    if !(f_val >= 0.0) {
        return invalid(format!("F must be nonnegative, got {f_val}"));
    }
    if n < 2 {
        return invalid(format!("dimension must be at least 2, got {n}"));
    }
    Ok(f_val / i_val.powi(n as i32))
}

/// Lower bound `ω_{n-1} / log(2λ² / (h_image h_complement))^{n-1}` for the capacity of
/// a condenser whose plate image and the complement of whose domain image have the
/// given chordal diameters.
pub fn capacity_lower_bound(h_image: f64, h_complement: f64, n: usize, lambda: f64) -> Result<f64> {
    for (name, v) in [("h_image", h_image), ("h_complement", h_complement)] {
        if !(v > 0.0 && v <= 1.0) {
            return invalid(format!("{name} must lie in (0, 1], got {v}"));
        }
    }
    check_lambda(n, lambda)?;
    let arg = 2.0 * lambda * lambda / (h_image * h_complement);
    Ok(omega(n)? / arg.ln().powi(n as i32 - 1))
}

/// `λ_n ∈ [4, 2e^{n-1})`.
pub(crate) fn check_lambda(n: usize, lambda: f64) -> Result<()> {
    if n < 2 {
        return invalid(format!("dimension must be at least 2, got {n}"));
    }
    let top = 2.0 * ((n - 1) as f64).exp();
    if !(lambda >= 4.0 && lambda < top) {
        return invalid(format!("lambda must lie in [4, {top}), got {lambda}"));
    }
    Ok(())
}

pub type RegionMask = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;
pub type PlateMask = Arc<dyn Fn(&[f64], f64) -> bool + Send + Sync>;

/// An open domain `A`.
#[derive(Clone)]
pub enum Region {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Points of the box `[lo, hi]` where `inside` holds.
    Mask { lo: Vec<f64>, hi: Vec<f64>, inside: RegionMask },
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Ball { center, radius } => write!(f, "Ball({center:?}, {radius})"),
            Region::Box { lo, hi } => write!(f, "Box({lo:?}, {hi:?})"),
            Region::Mask { lo, hi, .. } => write!(f, "Mask({lo:?}, {hi:?})"),
        }
    }
}

impl Region {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return invalid(format!("ball radius must be positive and finite, got {radius}"));
        }
        Ok(Region::Ball { center, radius })
    }

    pub fn cube(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return invalid("box needs lo < hi in every coordinate");
        }
        Ok(Region::Box { lo, hi })
    }

    pub fn mask(lo: Vec<f64>, hi: Vec<f64>, inside: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Result<Self> {
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return invalid("mask box needs lo < hi in every coordinate");
        }
        Ok(Region::Mask { lo, hi, inside: Arc::new(inside) })
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Ball { center, .. } => center.len(),
            Region::Box { lo, .. } | Region::Mask { lo, .. } => lo.len(),
        }
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Region::Ball { center, radius } => {
                (center.iter().map(|c| c - radius).collect(), center.iter().map(|c| c + radius).collect())
            }
            Region::Box { lo, hi } | Region::Mask { lo, hi, .. } => (lo.clone(), hi.clone()),
        }
    }

    /// Distance to the complement for points inside, negative outside. Masks only know
    /// the sign.
    fn margin(&self, x: &[f64]) -> f64 {
        match self {
            Region::Ball { center, radius } => radius - dist(x, center),
            Region::Box { lo, hi } => box_margin(lo, hi, x),
            Region::Mask { lo, hi, inside } => {
                let m = box_margin(lo, hi, x);
                if m > 0.0 && inside(x) {
                    m
                } else {
                    -1.0
                }
            }
        }
    }

    /// Grid over the bounding box with `grid` cells along the longest side.
    pub fn grid(&self, grid: usize) -> Result<GridSpec> {
        if grid < 2 {
            return invalid(format!("grid needs at least 2 cells per axis, got {grid}"));
        }
        let (lo, hi) = self.bounds();
        let side = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
        let h = side / grid as f64;
        let dims = lo.iter().zip(&hi).map(|(a, b)| (((b - a) / h) - 1e-9).ceil().max(1.0) as usize).collect();
        GridSpec::new(lo, h, dims)
    }
}

fn box_margin(lo: &[f64], hi: &[f64], x: &[f64]) -> f64 {
    lo.iter().zip(hi).zip(x).map(|((a, b), v)| (v - a).min(b - v)).fold(f64::INFINITY, f64::min)
}

/// A compact plate, discretized as the grid nodes within half a cell of it.
#[derive(Clone)]
pub enum Plate {
    ClosedBall { center: Vec<f64>, radius: f64 },
    Sphere { center: Vec<f64>, radius: f64 },
    Boxes(Vec<(Vec<f64>, Vec<f64>)>),
    /// The nearest node to each point.
    Points(Vec<Vec<f64>>),
    /// The corners of the grid cell containing the point.
    CellAt(Vec<f64>),
    /// Nodes `x` with `mask(x, h)`, `h` being the grid step.
    Mask(PlateMask),
    Union(Vec<Plate>),
}

impl fmt::Debug for Plate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Plate::ClosedBall { center, radius } => write!(f, "ClosedBall({center:?}, {radius})"),
            Plate::Sphere { center, radius } => write!(f, "Sphere({center:?}, {radius})"),
            Plate::Boxes(b) => write!(f, "Boxes({b:?})"),
            Plate::Points(p) => write!(f, "Points({} points)", p.len()),
            Plate::CellAt(p) => write!(f, "CellAt({p:?})"),
            Plate::Mask(_) => write!(f, "Mask"),
            Plate::Union(v) => f.debug_tuple("Union").field(v).finish(),
        }
    }
}

impl Plate {
    pub fn closed_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return invalid(format!("ball radius must be nonnegative and finite, got {radius}"));
        }
        Ok(Plate::ClosedBall { center, radius })
    }

    pub fn sphere(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return invalid(format!("sphere radius must be positive and finite, got {radius}"));
        }
        Ok(Plate::Sphere { center, radius })
    }

    pub fn mask(f: impl Fn(&[f64], f64) -> bool + Send + Sync + 'static) -> Self {
        Plate::Mask(Arc::new(f))
    }

    fn mark(&self, spec: &GridSpec, out: &mut [bool]) -> Result<()> {
        let n = spec.n();
        let half = 0.5 * spec.h * (1.0 + 1e-9);
        let mut x = vec![0.0; n];
        let mut scan = |pred: &dyn Fn(&[f64]) -> bool, out: &mut [bool]| {
            for (i, slot) in out.iter_mut().enumerate() {
                if !*slot {
                    spec.node_coords(i, &mut x);
                    *slot = pred(&x);
                }
            }
        };
        match self {
            Plate::ClosedBall { center, radius } => {
                check_dim(center, n)?;
                scan(&|x| dist(x, center) <= radius + half, out);
                mark_nearest(spec, center, out)?;
            }
            Plate::Sphere { center, radius } => {
                check_dim(center, n)?;
                scan(&|x| (dist(x, center) - radius).abs() <= half, out);
            }
            Plate::Boxes(boxes) => {
                for (lo, hi) in boxes {
                    check_dim(lo, n)?;
                    check_dim(hi, n)?;
                    if lo.iter().zip(hi).any(|(a, b)| a > b) {
                        return invalid("plate box needs lo <= hi");
                    }
                    scan(&|x| box_margin(lo, hi, x) >= -half, out);
                    let mid: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
                    mark_nearest(spec, &mid, out)?;
                }
            }
            Plate::Points(points) => {
                for p in points {
                    check_dim(p, n)?;
                    mark_nearest(spec, p, out)?;
                }
            }
            Plate::CellAt(p) => {
                check_dim(p, n)?;
                let cell = spec
                    .cell_containing(p)
                    .ok_or_else(|| Error::InvalidArgument(format!("point {p:?} lies outside the grid")))?;
                let base = spec.index_of(&cell);
                let strides = spec.strides();
                for c in 0..(1usize << n) {
                    let off: usize = (0..n).filter(|&k| c >> k & 1 == 1).map(|k| strides[k]).sum();
                    out[base + off] = true;
                }
            }
            Plate::Mask(f) => {
                let h = spec.h;
                scan(&|x| f(x, h), out);
            }
            Plate::Union(parts) => {
                for part in parts {
                    part.mark(spec, out)?;
                }
            }
        }
        Ok(())
    }

    /// Node indices of the plate on `spec`.
    pub fn nodes(&self, spec: &GridSpec) -> Result<Vec<usize>> {
        let mut flags = vec![false; spec.node_count()];
        self.mark(spec, &mut flags)?;
        Ok(flags.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i).collect())
    }
}

fn check_dim(x: &[f64], n: usize) -> Result<()> {
    if x.len() != n {
        return invalid(format!("point {x:?} has dimension {}, expected {n}", x.len()));
    }
    Ok(())
}

fn mark_nearest(spec: &GridSpec, x: &[f64], out: &mut [bool]) -> Result<()> {
    match spec.nearest_node(x) {
        Some(i) => {
            out[i] = true;
            Ok(())
        }
        None => invalid(format!("point {x:?} lies outside the grid")),
    }
}

/// A condenser `(A, C)`: open domain `A`, compact plate `C ⊂ A`, grid resolution (cells
/// along the longest side of `A`'s bounding box) and energy exponent.
#[derive(Debug, Clone)]
pub struct Condenser {
    pub domain: Region,
    pub plate: Plate,
    pub grid: usize,
    pub exponent: f64,
}

impl Condenser {
    pub fn new(domain: Region, plate: Plate, grid: usize) -> Result<Self> {
        let n = domain.dim();
        check_solver_dim(n)?;
        if grid < 4 {
            return invalid(format!("grid must have at least 4 cells per axis, got {grid}"));
        }
        Ok(Condenser { domain, plate, grid, exponent: n as f64 })
    }

    /// The spherical condenser `(B(0, r2), B̄(0, r1))`.
    pub fn spherical_ring(n: usize, r1: f64, r2: f64, grid: usize) -> Result<Self> {
        if !(r1 > 0.0 && r1 < r2) {
            return invalid(format!("need 0 < r1 < r2, got ({r1}, {r2})"));
        }
        Condenser::new(Region::ball(vec![0.0; n], r2)?, Plate::closed_ball(vec![0.0; n], r1)?, grid)
    }

    pub fn with_exponent(mut self, p: f64) -> Result<Self> {
        if !(p >= 2.0 && p.is_finite()) {
            return invalid(format!("energy exponent must be >= 2, got {p}"));
        }
        self.exponent = p;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }
}

fn check_solver_dim(n: usize) -> Result<()> {
    if !(2..=4).contains(&n) {
        return invalid(format!("the grid solver supports dimensions 2 to 4, got {n}"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target for the gradient norm relative to that of the plate indicator.
    pub tol: f64,
    pub max_iter: usize,
    /// Seed each grid with the solution on the grid with half as many cells.
    pub multilevel: bool,
    /// Energies above this are reported as `+∞`.
    pub infinity_cap: f64,
    /// Conjugate-gradient restart period.
    pub restart: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-5, max_iter: 20_000, multilevel: true, infinity_cap: 1e12, restart: 200 }
    }
}

impl SolverOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return invalid(format!("tolerance must be positive, got {}", self.tol));
        }
        if self.max_iter == 0 || self.restart == 0 {
            return invalid("iteration cap and restart period must be positive");
        }
        if !(self.infinity_cap > 0.0) {
            return invalid("infinity cap must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CapacityResult {
    pub value: f64,
    /// Iterations on the finest grid.
    pub iterations: usize,
    pub residual: f64,
    /// Cells along the longest axis.
    pub grid: usize,
    /// Energy after each iteration on the finest grid.
    pub energy_history: Vec<f64>,
    pub converged: bool,
    pub field: GridField,
}

impl CapacityResult {
    fn infinite(spec: GridSpec, grid: usize, kind: &[u8]) -> Self {
        let values = kind.iter().map(|&k| if k == ONE { 1.0 } else { 0.0 }).collect();
        CapacityResult {
            value: f64::INFINITY,
            iterations: 0,
            residual: 0.0,
            grid,
            energy_history: Vec::new(),
            converged: true,
            field: GridField { spec, values },
        }
    }
}

/// Whether some cell has corners of both kinds `a` and `b`.
fn kinds_share_cell(spec: &GridSpec, kind: &[u8], a: u8, b: u8) -> bool {
    let n = spec.n();
    let strides = spec.strides();
    let offsets: Vec<usize> =
        (0..1usize << n).map(|c| (0..n).filter(|&k| c >> k & 1 == 1).map(|k| strides[k]).sum()).collect();
    let mut mi = vec![0; n];
    let cells: usize = spec.dims.iter().product();
    for ci in 0..cells {
        let mut rem = ci;
        for k in (0..n).rev() {
            mi[k] = rem % spec.dims[k];
            rem /= spec.dims[k];
        }
        let base: usize = (0..n).map(|k| mi[k] * strides[k]).sum();
        let (mut has_a, mut has_b) = (false, false);
        for &o in &offsets {
            let k = kind[base + o];
            has_a |= k == a;
            has_b |= k == b;
        }
        if has_a && has_b {
            return true;
        }
    }
    false
}

fn condenser_problem(c: &Condenser, spec: GridSpec) -> Result<Problem> {
    let n = spec.n();
    let half = 0.5 * spec.h;
    let mut x = vec![0.0; n];
    let mut kind: Vec<u8> = (0..spec.node_count())
        .map(|i| {
            spec.node_coords(i, &mut x);
            if c.domain.margin(&x) > half {
                FREE
            } else {
                ZERO
            }
        })
        .collect();
    let plate = c.plate.nodes(&spec)?;
    if plate.is_empty() {
        return invalid("the plate has no grid nodes");
    }
    for &i in &plate {
        if kind[i] == ZERO {
            spec.node_coords(i, &mut x);
            return invalid(format!("the plate touches the boundary of the domain near {x:?}"));
        }
        kind[i] = ONE;
    }
    if kinds_share_cell(&spec, &kind, ONE, ZERO) {
        return invalid("the plate is within one grid cell of the domain boundary; refine the grid");
    }
    Ok(Problem { spec, kind })
}

fn solve(
    build: &dyn Fn(GridSpec) -> Result<Problem>,
    spec: GridSpec,
    p: f64,
    opts: &SolverOptions,
) -> Result<(Problem, solver::Outcome)> {
    let settings = Settings { p, tol: opts.tol, max_iter: opts.max_iter, restart: opts.restart };
    let finest = build(spec)?;
    let mut levels = vec![finest];
    if opts.multilevel {
        while let Some(coarse) = levels.last().unwrap().spec.coarsen() {
            match build(coarse) {
                Ok(prob) => levels.push(prob),
                Err(_) => break,
            }
        }
    }
    let mut seed: Option<(GridSpec, Vec<f64>)> = None;
    let mut last = None;
    while let Some(prob) = levels.pop() {
        let coarse = seed.take().map(|(cs, u)| prob.spec.prolongate(&cs, &u));
        let out = solver::minimize(&prob, solver::initial_guess(&prob, coarse), &settings);
        if levels.is_empty() {
            last = Some((prob, out));
            break;
        }
        seed = Some((prob.spec.clone(), out.u));
    }
    Ok(last.expect("at least one level"))
}

fn finish(grid: usize, prob: Problem, out: solver::Outcome, opts: &SolverOptions) -> Result<CapacityResult> {
    let value = if out.energy > opts.infinity_cap { f64::INFINITY } else { out.energy };
    let result = CapacityResult {
        value,
        iterations: out.iterations,
        residual: out.residual,
        grid,
        energy_history: out.history,
        converged: out.converged,
        field: GridField { spec: prob.spec, values: out.u },
    };
    if result.converged {
        Ok(result)
    } else {
        Err(Error::Convergence { last: Box::new(result) })
    }
}

/// Capacity of the condenser: the minimal discrete energy of grid functions equal to 1
/// on the plate and 0 within half a cell of the complement of the domain.
pub fn capacity_numeric(c: &Condenser, opts: &SolverOptions) -> Result<CapacityResult> {
    opts.validate()?;
    check_solver_dim(c.dim())?;
    let spec = c.domain.grid(c.grid)?;
    let (prob, out) = solve(&|s| condenser_problem(c, s), spec, c.exponent, opts)?;
    finish(c.grid, prob, out, opts)
}

fn connecting_problem(e: &Plate, f: &Plate, domain: &Region, spec: GridSpec) -> Result<Problem> {
    let n = spec.n();
    let mut x = vec![0.0; n];
    let mut kind: Vec<u8> = (0..spec.node_count())
        .map(|i| {
            spec.node_coords(i, &mut x);
            if domain.margin(&x) >= 0.0 {
                FREE
            } else {
                EXCLUDED
            }
        })
        .collect();
    let en = e.nodes(&spec)?;
    let fnodes = f.nodes(&spec)?;
    if en.is_empty() || fnodes.is_empty() {
        return invalid("both sets need at least one grid node");
    }
    let mut in_e = vec![false; kind.len()];
    for &i in &en {
        in_e[i] = true;
        kind[i] = ONE;
    }
    let mut in_f = vec![false; kind.len()];
    let mut shared = Vec::new();
    for &i in &fnodes {
        in_f[i] = true;
        if in_e[i] {
            shared.push(i);
        }
        kind[i] = ZERO;
    }
    if !shared.is_empty() {
        // sets that only meet along their discrete boundaries touch; anything more overlaps
        let nested = shared.len() == en.len() || shared.len() == fnodes.len();
        let interior = shared.iter().any(|&i| is_interior(&spec, &in_e, i) || is_interior(&spec, &in_f, i));
        if nested || interior {
            return invalid("the two sets overlap");
        }
        return Err(Error::Evaluation(TOUCHING.into()));
    }
    if kinds_share_cell(&spec, &kind, ONE, ZERO) {
        return Err(Error::Evaluation(TOUCHING.into()));
    }
    Ok(Problem { spec, kind })
}

const TOUCHING: &str = "the sets touch on the grid";

/// Whether every axis neighbour of node `i` inside the grid also carries the flag.
fn is_interior(spec: &GridSpec, flags: &[bool], i: usize) -> bool {
    let n = spec.n();
    let strides = spec.strides();
    let mut mi = vec![0; n];
    spec.multi_index(i, &mut mi);
    (0..n).all(|k| {
        (mi[k] == 0 || flags[i - strides[k]]) && (mi[k] == spec.dims[k] || flags[i + strides[k]])
    })
}

/// Modulus of the curves joining `e` to `f` inside `domain`, computed as the capacity
/// with `u = 1` on `e`, `u = 0` on `f` and no condition on the rest of `∂domain`.
/// Touching sets give `+∞`.
pub fn modulus_connecting(
    e: &Plate,
    f: &Plate,
    domain: &Region,
    grid: usize,
    opts: &SolverOptions,
) -> Result<CapacityResult> {
    opts.validate()?;
    let n = domain.dim();
    check_solver_dim(n)?;
    let spec = domain.grid(grid)?;
    let build = |s: GridSpec| connecting_problem(e, f, domain, s);
    match build(spec.clone()) {
        Err(Error::Evaluation(msg)) if msg == TOUCHING => {
            let mut kind = vec![FREE; spec.node_count()];
            for i in e.nodes(&spec)? {
                kind[i] = ONE;
            }
            return Ok(CapacityResult::infinite(spec, grid, &kind));
        }
        Err(err) => return Err(err),
        Ok(_) => {}
    }
    let (prob, out) = solve(&build, spec, n as f64, opts)?;
    finish(grid, prob, out, opts)
}

/// Energy of the piecewise-linear interpolant of `field` for the condenser's problem on
/// the field's grid.
pub fn condenser_energy(c: &Condenser, field: &GridField) -> Result<f64> {
    let prob = condenser_problem(c, field.spec.clone())?;
    Ok(solver::energy_of(&prob, &field.values, c.exponent))
}
