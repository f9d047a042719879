//! Minimization of the discrete `p`-energy `Σ_simplices vol·|∇u|^p` of piecewise-linear
//! grid functions on the Kuhn subdivision.
//!
//! The minimizer is nonlinear conjugate gradients (Polak–Ribière with restarts) with a
//! safeguarded Newton line search along each direction. Per-simplex quadratic
//! coefficients are cached for the line search, so each step costs one gather pass plus
//! cheap streaming passes. Coarse-grid solutions seed finer grids.

use super::grid::{GridSpec, KuhnTopology};

pub(crate) const FREE: u8 = 0;
pub(crate) const ONE: u8 = 1;
pub(crate) const ZERO: u8 = 2;
pub(crate) const EXCLUDED: u8 = 3;

/// A discretized Dirichlet problem: node kinds on a grid.
#[derive(Debug, Clone)]
pub(crate) struct Problem {
    pub spec: GridSpec,
    pub kind: Vec<u8>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Settings {
    pub p: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub u: Vec<f64>,
    pub energy: f64,
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
    pub converged: bool,
}

#[derive(Clone, Copy)]
struct ActiveCell {
    base: u32,
    mask: u32,
}

#[derive(Clone, Copy)]
enum Power {
    Two,
    Three,
    Four,
    General(f64),
}

impl Power {
    fn new(p: f64) -> Self {
        if p == 2.0 {
            Power::Two
        } else if p == 3.0 {
            Power::Three
        } else if p == 4.0 {
            Power::Four
        } else {
            Power::General(p)
        }
    }

    /// `(g2^{p/2}, p g2^{p/2-1})`.
    #[inline(always)]
    fn value_slope(self, g2: f64) -> (f64, f64) {
        match self {
            Power::Two => (g2, 2.0),
            Power::Three => {
                let s = g2.sqrt();
                (g2 * s, 3.0 * s)
            }
            Power::Four => (g2 * g2, 4.0 * g2),
            Power::General(p) => {
                if g2 <= 0.0 {
                    (0.0, 0.0)
                } else {
                    let v = g2.powf(0.5 * p);
                    (v, p * v / g2)
                }
            }
        }
    }

    /// Value, first and second derivative of `(A + 2αB + α²C)^{p/2}` at `α`.
    #[inline(always)]
    fn along(self, abc: &[f64; 3], alpha: f64) -> (f64, f64, f64) {
        let [a, b, c] = *abc;
        let g2 = (a + alpha * (2.0 * b + alpha * c)).max(0.0);
        let lin = b + alpha * c;
        match self {
            Power::Two => (g2, 2.0 * lin, 2.0 * c),
            Power::Three => {
                let s = g2.sqrt();
                if s == 0.0 {
                    (0.0, 0.0, 0.0)
                } else {
                    (g2 * s, 3.0 * s * lin, 3.0 * (lin * lin / s + s * c))
                }
            }
            Power::Four => (g2 * g2, 4.0 * g2 * lin, 4.0 * (2.0 * lin * lin + g2 * c)),
            Power::General(p) => {
                if g2 <= 0.0 {
                    (0.0, 0.0, 0.0)
                } else {
                    let v = g2.powf(0.5 * p);
                    let d1 = p * v / g2;
                    (v, d1 * lin, d1 * ((p - 2.0) * lin * lin / g2 + c))
                }
            }
        }
    }
}

struct Topo<const N: usize, const C: usize, const E: usize, const S: usize> {
    offsets: [usize; C],
    edges: [(usize, usize); E],
    simplices: [[usize; N]; S],
}

impl<const N: usize, const C: usize, const E: usize, const S: usize> Topo<N, C, E, S> {
    fn new(t: &KuhnTopology) -> Self {
        let mut offsets = [0; C];
        offsets.copy_from_slice(&t.corner_offsets);
        let mut edges = [(0, 0); E];
        edges.copy_from_slice(&t.edges);
        let mut simplices = [[0; N]; S];
        for (dst, src) in simplices.iter_mut().zip(&t.simplices) {
            dst.copy_from_slice(src);
        }
        Topo { offsets, edges, simplices }
    }
}

struct Kernel<const N: usize, const C: usize, const E: usize, const S: usize> {
    topo: Topo<N, C, E, S>,
    cells: Vec<ActiveCell>,
    free: Vec<bool>,
    power: Power,
    scale: f64,
    abc: Vec<[f64; 3]>,
}

impl<const N: usize, const C: usize, const E: usize, const S: usize> Kernel<N, C, E, S> {
    fn new(problem: &Problem, p: f64) -> Self {
        let spec = &problem.spec;
        let kt = KuhnTopology::new(spec);
        let topo = Topo::<N, C, E, S>::new(&kt);
        let strides = spec.strides();
        let kind = &problem.kind;
        let mut cells = Vec::new();
        let mut mi = [0usize; N];
        let cell_total: usize = spec.dims.iter().product();
        for ci in 0..cell_total {
            let mut rem = ci;
            for k in (0..N).rev() {
                mi[k] = rem % spec.dims[k];
                rem /= spec.dims[k];
            }
            let base: usize = (0..N).map(|k| mi[k] * strides[k]).sum();
            if !topo.offsets.iter().any(|&o| kind[base + o] == FREE) {
                continue;
            }
            let mut mask = 0u32;
            for (s, corners) in kt.simplex_corners.iter().enumerate() {
                if corners.iter().all(|&c| kind[base + topo.offsets[c]] != EXCLUDED) {
                    mask |= 1 << s;
                }
            }
            if mask != 0 {
                cells.push(ActiveCell { base: base as u32, mask });
            }
        }
        let fact: f64 = (1..=N).map(|k| k as f64).product();
        let scale = spec.h.powf(N as f64 - p) / fact;
        let abc = vec![[0.0; 3]; cells.len() * S];
        Kernel { topo, cells, free: kind.iter().map(|&k| k == FREE).collect(), power: Power::new(p), scale, abc }
    }

    /// Energy at `u`; the gradient over free nodes is written to `grad`.
    fn energy_grad(&self, u: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let t = &self.topo;
        let mut energy = 0.0;
        for cell in &self.cells {
            let base = cell.base as usize;
            let mut c = [0.0; C];
            for k in 0..C {
                c[k] = u[base + t.offsets[k]];
            }
            let mut d = [0.0; E];
            for e in 0..E {
                d[e] = c[t.edges[e].1] - c[t.edges[e].0];
            }
            let mut gd = [0.0; E];
            for s in 0..S {
                if cell.mask >> s & 1 == 0 {
                    continue;
                }
                let mut g2 = 0.0;
                for j in 0..N {
                    let e = t.simplices[s][j];
                    g2 += d[e] * d[e];
                }
                let (v, slope) = self.power.value_slope(g2);
                energy += v;
                for j in 0..N {
                    let e = t.simplices[s][j];
                    gd[e] += slope * d[e];
                }
            }
            let mut gc = [0.0; C];
            for e in 0..E {
                let (a, b) = t.edges[e];
                gc[b] += gd[e];
                gc[a] -= gd[e];
            }
            for k in 0..C {
                grad[base + t.offsets[k]] += gc[k];
            }
        }
        for (g, &f) in grad.iter_mut().zip(&self.free) {
            *g = if f { *g * self.scale } else { 0.0 };
        }
        energy * self.scale
    }

    /// Cache `|∇u|², ∇u·∇d, |∇d|²` (in edge-difference units) for every simplex.
    fn load_direction(&mut self, u: &[f64], dir: &[f64]) {
        let t = &self.topo;
        for (ci, cell) in self.cells.iter().enumerate() {
            let base = cell.base as usize;
            let mut cu = [0.0; C];
            let mut cd = [0.0; C];
            for k in 0..C {
                cu[k] = u[base + t.offsets[k]];
                cd[k] = dir[base + t.offsets[k]];
            }
            let mut du = [0.0; E];
            let mut dd = [0.0; E];
            for e in 0..E {
                du[e] = cu[t.edges[e].1] - cu[t.edges[e].0];
                dd[e] = cd[t.edges[e].1] - cd[t.edges[e].0];
            }
            let out = &mut self.abc[ci * S..(ci + 1) * S];
            for s in 0..S {
                if cell.mask >> s & 1 == 0 {
                    out[s] = [0.0; 3];
                    continue;
                }
                let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
                for j in 0..N {
                    let e = t.simplices[s][j];
                    a += du[e] * du[e];
                    b += du[e] * dd[e];
                    c += dd[e] * dd[e];
                }
                out[s] = [a, b, c];
            }
        }
    }

    /// `φ(α), φ'(α), φ''(α)` for the cached direction.
    fn along(&self, alpha: f64) -> (f64, f64, f64) {
        let (mut f0, mut f1, mut f2) = (0.0, 0.0, 0.0);
        for abc in &self.abc {
            let (a, b, c) = self.power.along(abc, alpha);
            f0 += a;
            f1 += b;
            f2 += c;
        }
        (f0 * self.scale, f1 * self.scale, f2 * self.scale)
    }

    /// Safeguarded Newton iteration for `φ'(α) = 0`, then backtracking until `φ(α) ≤ φ(0)`.
    fn line_search(&self, slope0: f64) -> Option<f64> {
        let (phi0, _, _) = self.along(0.0);
        let mut lo = 0.0;
        let mut hi = f64::INFINITY;
        let mut alpha = 0.0;
        let (mut d1, mut d2) = (slope0, self.along(0.0).2);
        for _ in 0..12 {
            let mut next = if d2 > 0.0 { alpha - d1 / d2 } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = if hi.is_finite() { 0.5 * (lo + hi) } else if alpha > 0.0 { 2.0 * alpha } else { 1.0 };
            }
            alpha = next;
            let (_, a1, a2) = self.along(alpha);
            d1 = a1;
            d2 = a2;
            if d1 < 0.0 {
                lo = alpha;
            } else {
                hi = alpha;
            }
            if d1.abs() <= 1e-3 * slope0.abs() {
                break;
            }
        }
        for _ in 0..60 {
            if alpha > 0.0 && self.along(alpha).0 <= phi0 {
                return Some(alpha);
            }
            alpha *= 0.5;
        }
        None
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn run<const N: usize, const C: usize, const E: usize, const S: usize>(
    problem: &Problem,
    init: Vec<f64>,
    cfg: &Settings,
) -> Outcome {
    let mut kernel = Kernel::<N, C, E, S>::new(problem, cfg.p);
    let nodes = problem.kind.len();
    let mut grad = vec![0.0; nodes];

    // residuals are measured against the gradient of the plate indicator
    let indicator: Vec<f64> = problem.kind.iter().map(|&k| if k == ONE { 1.0 } else { 0.0 }).collect();
    kernel.energy_grad(&indicator, &mut grad);
    let reference = dot(&grad, &grad).sqrt();

    let mut u = init;
    let mut energy = kernel.energy_grad(&u, &mut grad);
    let mut history = vec![energy];
    if reference == 0.0 {
        return Outcome { u, energy, iterations: 0, residual: 0.0, history, converged: true };
    }
    let mut dir: Vec<f64> = grad.iter().map(|g| -g).collect();
    let mut gg = dot(&grad, &grad);
    let mut residual = gg.sqrt() / reference;
    let mut since_restart = 0;
    let mut iterations = 0;
    let mut new_grad = vec![0.0; nodes];
    while residual > cfg.tol && iterations < cfg.max_iter {
        let mut slope = dot(&grad, &dir);
        if slope >= 0.0 {
            dir.iter_mut().zip(&grad).for_each(|(d, g)| *d = -g);
            slope = -gg;
            since_restart = 0;
        }
        kernel.load_direction(&u, &dir);
        let Some(alpha) = kernel.line_search(slope) else {
            if since_restart == 0 {
                break;
            }
            dir.iter_mut().zip(&grad).for_each(|(d, g)| *d = -g);
            since_restart = 0;
            continue;
        };
        u.iter_mut().zip(&dir).for_each(|(x, d)| *x += alpha * d);
        let e_new = kernel.energy_grad(&u, &mut new_grad);
        iterations += 1;
        if e_new > energy {
            // rounding in the cached line-search sums; step back and restart
            u.iter_mut().zip(&dir).for_each(|(x, d)| *x -= alpha * d);
            if since_restart == 0 {
                break;
            }
            dir.iter_mut().zip(&grad).for_each(|(d, g)| *d = -g);
            since_restart = 0;
            continue;
        }
        energy = e_new;
        history.push(energy);
        let gg_new = dot(&new_grad, &new_grad);
        let cross = dot(&new_grad, &grad);
        let beta = if since_restart + 1 >= cfg.restart { 0.0 } else { ((gg_new - cross) / gg).max(0.0) };
        std::mem::swap(&mut grad, &mut new_grad);
        gg = gg_new;
        since_restart = if beta == 0.0 { 0 } else { since_restart + 1 };
        dir.iter_mut().zip(&grad).for_each(|(d, g)| *d = -g + beta * *d);
        residual = gg.sqrt() / reference;
    }

    // the continuous minimizer takes values in [0, 1]; keep the clamp only if it does not cost energy
    let clamped: Vec<f64> = u.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    if clamped != u {
        let e = kernel.energy_grad(&clamped, &mut new_grad);
        if e <= energy {
            u = clamped;
            energy = e;
            residual = dot(&new_grad, &new_grad).sqrt() / reference;
            history.push(energy);
        }
    }
    Outcome { u, energy, iterations, residual, history, converged: residual <= cfg.tol }
}

/// Initial guess: Dirichlet values on fixed nodes, `coarse` (if any) elsewhere.
pub(crate) fn initial_guess(problem: &Problem, coarse: Option<Vec<f64>>) -> Vec<f64> {
    let mut u = coarse.unwrap_or_else(|| vec![0.0; problem.kind.len()]);
    for (v, &k) in u.iter_mut().zip(&problem.kind) {
        *v = match k {
            ONE => 1.0,
            FREE => v.clamp(0.0, 1.0),
            _ => 0.0,
        };
    }
    u
}

pub(crate) fn minimize(problem: &Problem, init: Vec<f64>, cfg: &Settings) -> Outcome {
    match problem.spec.n() {
        2 => run::<2, 4, 4, 2>(problem, init, cfg),
        3 => run::<3, 8, 12, 6>(problem, init, cfg),
        4 => run::<4, 16, 32, 24>(problem, init, cfg),
        n => unreachable!("grid solver dimension {n} rejected during validation"),
    }
}

/// Energy of a given grid function; used by tests and diagnostics.
pub(crate) fn energy_of(problem: &Problem, u: &[f64], p: f64) -> f64 {
    let mut grad = vec![0.0; u.len()];
    match problem.spec.n() {
        2 => Kernel::<2, 4, 4, 2>::new(problem, p).energy_grad(u, &mut grad),
        3 => Kernel::<3, 8, 12, 6>::new(problem, p).energy_grad(u, &mut grad),
        4 => Kernel::<4, 16, 32, 24>::new(problem, p).energy_grad(u, &mut grad),
        n => unreachable!("grid solver dimension {n} rejected during validation"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slab(n: usize, cells: usize) -> Problem {
        // u = 1 on x0 = 0, u = 0 on x0 = 1, Neumann on the other faces
        let spec = GridSpec::new(vec![0.0; n], 1.0 / cells as f64, vec![cells; n]).unwrap();
        let mut mi = vec![0; n];
        let kind = (0..spec.node_count())
            .map(|i| {
                spec.multi_index(i, &mut mi);
                if mi[0] == 0 {
                    ONE
                } else if mi[0] == cells {
                    ZERO
                } else {
                    FREE
                }
            })
            .collect();
        Problem { spec, kind }
    }

    #[test]
    fn linear_profile_energy_is_exact() {
        // |∇u| = 1 on the unit cube: energy 1 for every p
        for n in 2..=4 {
            let prob = slab(n, 4);
            let mut mi = vec![0; n];
            let u: Vec<f64> = (0..prob.kind.len())
                .map(|i| {
                    prob.spec.multi_index(i, &mut mi);
                    1.0 - mi[0] as f64 / 4.0
                })
                .collect();
            for p in [2.0, 2.5, 3.0, 4.0] {
                assert!((energy_of(&prob, &u, p) - 1.0).abs() < 1e-12, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn slab_minimizer_is_linear() {
        for (n, cells) in [(2, 16), (3, 8)] {
            let prob = slab(n, cells);
            for p in [2.0, 3.0, 3.7] {
                let cfg = Settings { p, tol: 1e-8, max_iter: 5000, restart: 50 };
                let out = minimize(&prob, initial_guess(&prob, None), &cfg);
                assert!(out.converged, "n={n} p={p} residual {}", out.residual);
                assert!((out.energy - 1.0).abs() < 1e-8, "n={n} p={p} energy {}", out.energy);
                assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let prob = slab(3, 4);
        let mut u = initial_guess(&prob, None);
        for (i, v) in u.iter_mut().enumerate() {
            if prob.kind[i] == FREE {
                *v = ((i * 7919) % 97) as f64 / 97.0;
            }
        }
        let p = 3.0;
        let mut k = Kernel::<3, 8, 12, 6>::new(&prob, p);
        let mut g = vec![0.0; u.len()];
        k.energy_grad(&u, &mut g);
        for i in (0..u.len()).filter(|&i| prob.kind[i] == FREE).step_by(5) {
            let step = 1e-6;
            let mut up = u.clone();
            up[i] += step;
            let mut dn = u.clone();
            dn[i] -= step;
            let fd = (energy_of(&prob, &up, p) - energy_of(&prob, &dn, p)) / (2.0 * step);
            assert!((fd - g[i]).abs() < 1e-6 * (1.0 + fd.abs()), "node {i}: {fd} vs {}", g[i]);
        }
        // line-search derivatives agree with direct energies
        let dir: Vec<f64> = g.iter().map(|v| -v).collect();
        k.load_direction(&u, &dir);
        let alpha = 0.01;
        let moved: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a + alpha * b).collect();
        let (phi, d1, _) = k.along(alpha);
        assert!((phi - energy_of(&prob, &moved, p)).abs() < 1e-10 * phi);
        let h = 1e-6;
        let fd = (k.along(alpha + h).0 - k.along(alpha - h).0) / (2.0 * h);
        assert!((fd - d1).abs() < 1e-5 * d1.abs());
    }
}
