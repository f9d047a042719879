//! `ringq`: run the ring Q-mapping experiments and emit CSV or JSON tables.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ringq::bounds::{check_bound_on_family, make_constants, BoundSpec};
use ringq::maps::{equicontinuity_experiment, rho_m_build, verify_ring_q_inequality, MapFamily, RadialMap};
use ringq::modulus::{capacity_numeric, modulus_connecting, ring_modulus_exact, Condenser, Plate, Region, SolverOptions};
use ringq::qprofile::{dini_integral, fmo_sweep, q_mean, FmoConfig, QProfile};
use ringq::quadrature::QuadratureRule;
use ringq::report::{outcomes_table, probe_suite, report_all, ReportConfig};
use ringq::setfn::{c_set, c_set_search, default_x_grid, CompactSet, Primitive, SetFnOptions};
use ringq::table::{Format, Table};
use ringq::{Error, ExtPoint, Result};

#[derive(Parser, Debug)]
#[command(name = "ringq", version, about = "Moduli, distortion bounds and set functions for ring Q-mappings")]
struct Cli {
    #[command(flatten)]
    run: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct RunConfig {
    /// Dimension of the ambient space.
    #[arg(long, global = true, default_value_t = 2)]
    n: usize,
    /// Grid cells along the longest side of the solver box (at least 16).
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Relative gradient tolerance of the capacity solver.
    #[arg(long, global = true, default_value_t = 1e-5)]
    tol: f64,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 2024)]
    seed: u64,
    /// Gauss-Legendre panels for radial integrals.
    #[arg(long, global = true)]
    quad_points: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Grid capacity of the spherical ring against its exact modulus.
    ///
    /// Columns: n, grid, r1, r2, exact, numeric, rel_error, iterations, residual.
    Capacity {
        /// Inner and outer radius.
        #[arg(long, num_args = 2, value_names = ["R1", "R2"], default_values_t = [0.5, 1.0])]
        ring: Vec<f64>,
        /// Also write the potential as CSV to this path.
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Modulus of the curves joining two compact sets inside a ball.
    ///
    /// The sets are read from text files with one primitive per line: `point x1 .. xn`,
    /// `ball c1 .. cn r`, `segment a1 .. an b1 .. bn`, `box lo1 .. lon hi1 .. hin`.
    /// Columns: grid, domain_radius, modulus, iterations, residual.
    Modulus {
        #[arg(long)]
        e: PathBuf,
        #[arg(long)]
        f: PathBuf,
        /// Radius of the ball centred at the origin that contains the curves.
        #[arg(long, default_value_t = 2.0)]
        domain_radius: f64,
    },
    /// Spherical means of a profile.
    ///
    /// Profiles: const:K, log, logc, log2, powlog:C, exp. Columns: r, q_mean.
    Qmean {
        #[arg(long)]
        profile: String,
        #[arg(long, num_args = 1.., default_values_t = [0.5, 0.25, 0.125, 0.0625])]
        radii: Vec<f64>,
    },
    /// Mean oscillation over balls of radius 2^-k.
    ///
    /// Columns: eps, oscillation, verdict.
    Fmo {
        #[arg(long)]
        profile: String,
        #[arg(long, default_value_t = 0.5)]
        eps0: f64,
    },
    /// Divergence probe of the integral of dt/(t q^{1/(n-1)}) near 0.
    ///
    /// Columns: profile, eps0, value, verdict (diverges or converges).
    Dini {
        #[arg(long)]
        profile: String,
        #[arg(long, default_value_t = 0.5)]
        eps0: f64,
    },
    /// Dini-type distortion bound against a truncated map family.
    ///
    /// Columns: member, radius, measured, bound, slack.
    Bounds {
        #[arg(long, default_value = "logc")]
        profile: String,
        #[arg(long, default_value_t = 0.5)]
        eps0: f64,
        #[arg(long, default_value_t = 16)]
        m_max: usize,
        /// Growth constant K of the weighted energy; the dimension's sphere area when absent.
        #[arg(long)]
        k_const: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// The truncated family built from a profile, sampled on its diagonal x_m = e1/m.
    ///
    /// Columns: m, r, abs_value, h_value, sigma, above_sigma. With --radii the columns
    /// are m, r, h_value over the given radii instead.
    Family {
        #[arg(long, default_value = "log2")]
        profile: String,
        #[arg(long, default_value_t = 64)]
        m_max: usize,
        #[arg(long, num_args = 1..)]
        radii: Option<Vec<f64>>,
    },
    /// The set function c(E) of a set from a file, or of the built-in probe suite.
    ///
    /// Columns: set, x, m, m_antipode, c, is_min.
    Setfn {
        /// Set descriptor file (same format as for `modulus`).
        #[arg(long)]
        set: Option<PathBuf>,
        /// Refine the search around the best grid point.
        #[arg(long)]
        refine: bool,
    },
    /// The ring Q-inequality for random admissible densities and the extremal one.
    ///
    /// Columns: density, lhs, rhs, slack, violated.
    VerifyEq2 {
        #[arg(long, default_value = "const:1")]
        profile: String,
        /// `identity`, or `family:M` for the member built from the profile truncated at 1/M.
        #[arg(long, default_value = "identity")]
        map: String,
        #[arg(long, default_value_t = 0.01)]
        r1: f64,
        #[arg(long, default_value_t = 0.5)]
        r2: f64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Every acceptance criterion, one row each.
    ///
    /// Columns: criterion, name, passed, measured, threshold.
    ReportAll {
        /// Coarse grids for a fast smoke run.
        #[arg(long)]
        quick: bool,
    },
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if !(2..=4).contains(&self.n) {
            return Err(Error::InvalidArgument(format!("--n must be 2, 3 or 4, got {}", self.n)));
        }
        if let Some(g) = self.grid {
            if g < 16 {
                return Err(Error::InvalidArgument(format!("--grid must be at least 16, got {g}")));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("--tol must be positive, got {}", self.tol)));
        }
        if let Some(q) = self.quad_points {
            QuadratureRule::new(self.n).with_radial_points(q).validate()?;
        }
        Ok(())
    }

    fn grid_or(&self, default: usize) -> usize {
        self.grid.unwrap_or(default)
    }

    fn solver(&self) -> SolverOptions {
        SolverOptions::default().with_tol(self.tol)
    }

    fn profile(&self, name: &str) -> Result<QProfile> {
        let q = QProfile::named(name, self.n)?;
        Ok(match self.quad_points {
            Some(k) => q.with_rule(QuadratureRule::new(self.n).with_radial_points(k)),
            None => q,
        })
    }

    fn format(&self) -> Format {
        match self.format {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

fn read_set(path: &PathBuf) -> Result<CompactSet> {
    CompactSet::parse(&fs::read_to_string(path)?)
}

fn check_range(name: &str, ok: bool, v: impl std::fmt::Display) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} out of range: {v}")))
    }
}

/// Plate covering every primitive of a set in the plane of the grid.
fn set_plate(e: &CompactSet) -> Result<Plate> {
    let mut parts = Vec::new();
    for p in e.parts() {
        parts.push(match p {
            Primitive::Point(x) => Plate::Points(vec![x.clone()]),
            Primitive::Ball { center, radius } => Plate::closed_ball(center.clone(), *radius)?,
            Primitive::Box { lo, hi } => Plate::Boxes(vec![(lo.clone(), hi.clone())]),
            Primitive::Segment { .. } | Primitive::Cap { .. } => {
                let set = CompactSet::new(vec![p.clone()])?;
                let samples: Vec<Vec<f64>> = match p {
                    Primitive::Segment { a, b } => (0..=1024)
                        .map(|k| a.iter().zip(b).map(|(x, y)| x + (y - x) * k as f64 / 1024.0).collect())
                        .collect(),
                    _ => Vec::new(),
                };
                Plate::Union(vec![
                    Plate::mask(move |x, h| set.gap(&ExtPoint::Finite(x.to_vec())) <= 0.5 * h / (1.0 + x.iter().map(|v| v * v).sum::<f64>())),
                    Plate::Points(samples),
                ])
            }
        });
    }
    Ok(Plate::Union(parts))
}

fn run(cli: &Cli) -> Result<Table> {
    let cfg = &cli.run;
    cfg.validate()?;
    let n = cfg.n;
    match &cli.command {
        Command::Capacity { ring, field } => {
            let (r1, r2) = (ring[0], ring[1]);
            check_range("--ring", r1 > 0.0 && r1 < r2 && r2.is_finite(), format!("{r1} {r2}"))?;
            let grid = cfg.grid_or(128);
            let exact = ring_modulus_exact(r1, r2, n)?;
            let res = capacity_numeric(&Condenser::spherical_ring(n, r1, r2, grid)?, &cfg.solver())?;
            if let Some(path) = field {
                res.field.write_csv(io::BufWriter::new(fs::File::create(path)?))?;
            }
            let mut t = Table::new(["n", "grid", "r1", "r2", "exact", "numeric", "rel_error", "iterations", "residual"]);
            t.push(vec![
                n.into(),
                grid.into(),
                r1.into(),
                r2.into(),
                exact.into(),
                res.value.into(),
                ((res.value - exact).abs() / exact).into(),
                res.iterations.into(),
                res.residual.into(),
            ])?;
            Ok(t)
        }
        Command::Modulus { e, f, domain_radius } => {
            check_range("--domain-radius", *domain_radius > 0.0 && domain_radius.is_finite(), domain_radius)?;
            let (es, fs_) = (read_set(e)?, read_set(f)?);
            if es.dim() != n || fs_.dim() != n {
                return Err(Error::InvalidArgument(format!("set files must be {n}-dimensional")));
            }
            let grid = cfg.grid_or(128);
            let domain = Region::ball(vec![0.0; n], *domain_radius)?;
            let res = modulus_connecting(&set_plate(&es)?, &set_plate(&fs_)?, &domain, grid, &cfg.solver())?;
            let mut t = Table::new(["grid", "domain_radius", "modulus", "iterations", "residual"]);
            t.push(vec![grid.into(), (*domain_radius).into(), res.value.into(), res.iterations.into(), res.residual.into()])?;
            Ok(t)
        }
        Command::Qmean { profile, radii } => {
            let q = cfg.profile(profile)?;
            let mut t = Table::new(["r", "q_mean"]);
            for &r in radii {
                t.push(vec![r.into(), q_mean(&q, r)?.into()])?;
            }
            Ok(t)
        }
        Command::Fmo { profile, eps0 } => {
            let q = cfg.profile(profile)?;
            check_range("--eps0", *eps0 > 0.0 && *eps0 <= q.domain_radius(), eps0)?;
            let s = fmo_sweep(&|x| q.eval(x), q.center(), *eps0, q.rule(), &FmoConfig::default())?;
            let mut t = Table::new(["eps", "oscillation", "verdict"]);
            for &(eps, osc) in &s.sweep {
                t.push(vec![eps.into(), osc.into(), s.verdict.to_string().into()])?;
            }
            Ok(t)
        }
        Command::Dini { profile, eps0 } => {
            let q = cfg.profile(profile)?;
            let d = dini_integral(&q, *eps0)?;
            let mut t = Table::new(["profile", "eps0", "value", "verdict"]);
            let verdict = if d.diverges { "diverges" } else { "converges" };
            t.push(vec![profile.as_str().into(), (*eps0).into(), d.value.into(), verdict.into()])?;
            Ok(t)
        }
        Command::Bounds { profile, eps0, m_max, k_const, lambda } => {
            check_range("--m-max", (1..=4096).contains(m_max), m_max)?;
            let q = cfg.profile(profile)?;
            check_range("--eps0", *eps0 > 0.0 && *eps0 < 1.0, eps0)?;
            let k = match k_const {
                Some(k) => *k,
                None => ringq::quadrature::omega(n)?,
            };
            let c = make_constants(n, k, 1.0, *lambda)?;
            let fam = MapFamily::truncated(&q, *m_max)?;
            let radii: Vec<f64> = (1..=12).map(|j| eps0 * 0.5f64.powi(j)).collect();
            Ok(check_bound_on_family(&fam, &BoundSpec::Dini { eps0: *eps0, alpha_n: c.alpha_n }, &radii)?.table())
        }
        Command::Family { profile, m_max, radii } => {
            check_range("--m-max", (1..=4096).contains(m_max), m_max)?;
            let q = cfg.profile(profile)?;
            let fam = MapFamily::truncated(&q, *m_max)?;
            if let Some(radii) = radii {
                return Ok(equicontinuity_experiment(&fam, radii)?.table());
            }
            let rep = equicontinuity_experiment(&fam, &[])?;
            let sigma = rep.sigma.unwrap_or(f64::NAN);
            let mut t = Table::new(["m", "r", "abs_value", "h_value", "sigma", "above_sigma"]);
            for ((m, f), &(_, abs)) in fam.members.iter().zip(&rep.diagonal) {
                // x_1 = e1 lies on the domain boundary, so place the image point from ρ directly
                let r = 1.0 / *m as f64;
                let mut y = f.image_center().to_vec();
                y[0] += f.rho(r);
                let y = ExtPoint::finite(y)?;
                let h = ringq::geom::chordal_distance(&y, &ExtPoint::finite(f.image_center().to_vec())?)?;
                t.push(vec![(*m).into(), r.into(), abs.into(), h.into(), sigma.into(), (abs >= sigma).into()])?;
            }
            Ok(t)
        }
        Command::Setfn { set, refine } => {
            let sets = match set {
                Some(path) => {
                    let e = read_set(path)?;
                    let id = path.file_stem().map_or("set".into(), |s| s.to_string_lossy().into_owned());
                    vec![(id, e)]
                }
                None if n == 2 => probe_suite()?,
                None => return Err(Error::InvalidArgument("the built-in probe suite is planar; pass --set".into())),
            };
            let opts = SetFnOptions { grid: cfg.grid_or(64), solver: cfg.solver() };
            let mut t = Table::new(["set", "x", "m", "m_antipode", "c", "is_min"]);
            for (id, e) in &sets {
                if e.dim() != n {
                    return Err(Error::InvalidArgument(format!("set `{id}` is not {n}-dimensional")));
                }
                let v = if *refine { c_set_search(e, &opts)? } else { c_set(e, &default_x_grid(n)?, &opts)? };
                for (k, s) in v.search.iter().enumerate() {
                    t.push(vec![
                        id.as_str().into(),
                        s.x.to_string().into(),
                        s.m_x.into(),
                        s.m_antipode.into(),
                        s.c.into(),
                        (k == v.argmin_index).into(),
                    ])?;
                }
            }
            Ok(t)
        }
        Command::VerifyEq2 { profile, map, r1, r2, samples } => {
            check_range("--samples", (1..=100_000).contains(samples), samples)?;
            check_range("--r1/--r2", *r1 > 0.0 && r1 < r2 && *r2 <= 1.0, format!("{r1} {r2}"))?;
            let q = cfg.profile(profile)?;
            let (f, qq) = if map == "identity" {
                (RadialMap::identity(n)?, q)
            } else if let Some(m) = map.strip_prefix("family:") {
                let m: usize = m.parse().map_err(|_| Error::InvalidArgument(format!("bad member index in `{map}`")))?;
                check_range("family member", m >= 1, m)?;
                (rho_m_build(&q, m)?, q.truncated(m)?)
            } else {
                return Err(Error::InvalidArgument(format!("unknown map `{map}` (expected identity or family:M)")));
            };
            let c = verify_ring_q_inequality(&f, &qq, *r1, *r2, *samples, cfg.seed)?;
            let mut t = Table::new(["density", "lhs", "rhs", "slack", "violated"]);
            let rows = c.rhs.iter().enumerate().map(|(k, &v)| (format!("random-{k}"), v));
            for (name, v) in rows.chain([("extremal".to_string(), c.extremal_rhs)]) {
                t.push(vec![name.into(), c.lhs.into(), v.into(), (v - c.lhs).into(), (v < c.lhs * (1.0 - 1e-9)).into()])?;
            }
            Ok(t)
        }
        Command::ReportAll { quick } => {
            let mut rc = if *quick { ReportConfig::quick() } else { ReportConfig::default() };
            rc.seed = cfg.seed;
            if let Some(g) = cfg.grid {
                rc.setfn_grid = g;
            }
            Ok(outcomes_table(&report_all(&rc)))
        }
    }
}

fn emit(cli: &Cli, table: &Table) -> Result<()> {
    let text = table.render(cli.run.format())?;
    match &cli.run.out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli).and_then(|t| emit(&cli, &t)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Convergence { .. }) { 2 } else { 1 })
        }
    }
}
