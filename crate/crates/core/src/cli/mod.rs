//! The `ppe` command line: argument and config handling, orchestration,
//! and CSV/JSON/SVG output.

mod args;
mod config;
mod output;
pub mod svg;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use args::{Cli, Command, CommonArgs, Format, Side};
pub use config::{parse_config, RunConfig, USource};
pub use output::{solution_csv, u_csv, write_atomic, Report};
pub use svg::{Plot, Style};

use crate::assembler::{
    build_cone, enumerate_branches, maximal_solution, merge_seed, sample_cone_solution,
    AssemblyOptions, PiecewiseSolution, QueryIC, SolutionSetQuery,
};
use crate::error::{Error, Result};
use crate::expr::parse;
use crate::interval::Interval;
use crate::ivp::{self, BranchSign, Direction, RegularIC};
use crate::maximal::{find_critical_points, CriticalKind};
use crate::modulus::ModulusModel;
use crate::param::DepthFunction;
use crate::taylor::{self, CriticalIC};
use output::{cartesian, json_bytes, BranchJson, ConeJson, SolutionJson, TaylorJson};

/// A problem with the invocation itself (exit code 2).
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

enum Failure {
    Usage(UsageError),
    Solver(Error),
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Self {
        Failure::Usage(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Solver(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code: 0 success, 1 solver or domain error,
/// 2 usage error.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return if code == 0 { 0 } else { 2 };
        }
    };
    match run(&cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(Failure::Usage(e)) => {
            let _ = writeln!(stderr, "usage error: {e}");
            2
        }
        Err(Failure::Solver(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

struct Ctx<'a> {
    cfg: RunConfig,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn domain(&self) -> std::result::Result<Interval, Failure> {
        let (lo, hi) = self
            .cfg
            .domain
            .ok_or_else(|| UsageError("--domain LO HI is required".into()))?;
        Ok(Interval::new(lo, hi)?)
    }

    fn model(&self) -> std::result::Result<ModulusModel, Failure> {
        match &self.cfg.u {
            Some(USource::Expr(s)) => Ok(ModulusModel::parse(s, self.domain()?)?),
            Some(USource::Csv(p)) => {
                let m = ModulusModel::from_csv(p)?;
                match self.cfg.domain {
                    Some(_) => Ok(m.with_domain(self.domain()?)?),
                    None => Ok(m),
                }
            }
            None => Err(UsageError("one of --u or --u-csv is required".into()).into()),
        }
    }

    fn options(&self) -> AssemblyOptions {
        let mut o = AssemblyOptions::default();
        o.ivp.tol_contact = self.cfg.tol_contact;
        o.ivp.taylor_order = self.cfg.order;
        o.tol_bvp = self.cfg.tol_bvp;
        o.seed = self.cfg.seed;
        o.max_switches = self.cfg.max_switches;
        o.fan_size = self.cfg.fan_size;
        o
    }

    fn ic(&self) -> std::result::Result<(f64, f64), Failure> {
        Ok(self
            .cfg
            .ic
            .ok_or_else(|| UsageError("--ic THETA RHO is required".into()))?)
    }

    fn at(&self) -> std::result::Result<f64, Failure> {
        Ok(self.cfg.at.ok_or_else(|| UsageError("--at THETA is required".into()))?)
    }

    fn emit(&mut self, bytes: &[u8]) -> Outcome {
        match &self.cfg.out {
            Some(p) => write_atomic(p, bytes)?,
            None => self.stdout.write_all(bytes).map_err(Error::from)?,
        }
        Ok(())
    }

    fn check_residuals<'s>(&mut self, u: &ModulusModel, sols: impl Iterator<Item = &'s PiecewiseSolution>) {
        let bound = self.cfg.tol_res * (1.0 + u.max_value());
        for (k, s) in sols.enumerate() {
            let r = s.residual(u);
            if r > bound {
                let _ = writeln!(self.stderr, "warning: solution {k} residual {r:e} exceeds {bound:e}");
            }
        }
    }

    fn write_csv_dir(&mut self, sols: &[PiecewiseSolution], u: &ModulusModel) -> Outcome {
        if let Some(dir) = self.cfg.csv_dir.clone() {
            for (k, s) in sols.iter().enumerate() {
                write_atomic(&dir.join(format!("solution_{k:03}.csv")), &solution_csv(&s.nodes(), u)?)?;
            }
        }
        Ok(())
    }
}

fn run(cmd: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Outcome {
    let cfg = RunConfig::resolve(cmd.args())?;
    let mut ctx = Ctx { cfg, stdout, stderr };
    match cmd {
        Command::Forward(_) => forward(&mut ctx),
        Command::Validate(_) => validate(&mut ctx),
        Command::Critical(_) => critical(&mut ctx),
        Command::Solve(_) => solve(&mut ctx),
        Command::Branch(_) => branch(&mut ctx),
        Command::Enumerate(_) => enumerate(&mut ctx),
        Command::Maximal(_) => maximal(&mut ctx),
        Command::Cone(_) => cone(&mut ctx),
        Command::Plot(_) => plot(&mut ctx),
    }
}

fn forward(ctx: &mut Ctx) -> Outcome {
    let src = ctx
        .cfg
        .rho
        .clone()
        .ok_or_else(|| UsageError("--rho is required".into()))?;
    let rho = DepthFunction::closed(parse(&src).map_err(Error::from)?, ctx.domain()?)?;
    let u = ModulusModel::from_depth(&rho)?;
    let thetas = u.domain().grid(ctx.cfg.samples - 1);
    let values = thetas.iter().map(|t| u.eval(*t)).collect::<Result<Vec<_>>>()?;
    let bytes = u_csv(&thetas, &values)?;
    ctx.emit(&bytes)
}

fn validate(ctx: &mut Ctx) -> Outcome {
    let u = ctx.model()?;
    let report = u.validate();
    ctx.emit(&json_bytes(&report)?)?;
    if !report.clean {
        let theta = report
            .negative
            .first()
            .or(report.non_finite.first())
            .copied()
            .unwrap_or(f64::NAN);
        let value = u.raw(theta).unwrap_or(f64::NAN);
        return Err(Error::InvalidModulus { theta, value }.into());
    }
    Ok(())
}

fn critical(ctx: &mut Ctx) -> Outcome {
    let u = ctx.model()?;
    let set = find_critical_points(&u, 1e-13)?;
    let mut notes = set.diagnostics.clone();
    for (a, b) in &set.dense_intervals {
        notes.push(format!("U' vanishes on [{a}, {b}]"));
    }
    let report = Report {
        criticals: set.points,
        notes,
        ..Report::default()
    };
    ctx.emit(&json_bytes(&report)?)
}

fn solve(ctx: &mut Ctx) -> Outcome {
    let u = ctx.model()?;
    let (t0, r0) = ctx.ic()?;
    let ic = RegularIC::new(t0, r0);
    let opts = ctx.options();
    let signs = match ctx.cfg.sign {
        Some(s) => vec![s],
        None => vec![BranchSign::Plus, BranchSign::Minus],
    };
    let format = ctx.cfg.format.unwrap_or(if signs.len() == 1 { Format::Csv } else { Format::Json });
    let mut sols = Vec::new();
    for sign in signs.iter().copied() {
        let piece = |dir| ivp::solve_regular(&u, ic, sign, dir, &opts.ivp);
        let merged = match ctx.cfg.side {
            Side::Forward => piece(Direction::Forward)?,
            Side::Backward => piece(Direction::Backward)?,
            Side::Both => merge_seed(&piece(Direction::Backward)?, &piece(Direction::Forward)?),
        };
        sols.push(PiecewiseSolution::single(merged));
    }
    ctx.check_residuals(&u, sols.iter());
    ctx.write_csv_dir(&sols, &u)?;
    match format {
        Format::Csv if sols.len() == 1 => {
            let bytes = solution_csv(&sols[0].nodes(), &u)?;
            ctx.emit(&bytes)
        }
        Format::Json => {
            let report = Report {
                branches: sols.iter().map(|s| BranchJson::Solution(SolutionJson::new(s, &u))).collect(),
                ..Report::default()
            };
            ctx.emit(&json_bytes(&report)?)
        }
        _ => Err(UsageError("CSV output holds one solution; pass --sign or --format json".into()).into()),
    }
}

fn branch(ctx: &mut Ctx) -> Outcome {
    let u = ctx.model()?;
    let at = ctx.at()?;
    let order = ctx.cfg.order;
    let branches = if u.is_closed_form() {
        let ic = CriticalIC::new(&u, at, order)?;
        taylor::branches_at(&ic, order)?
    } else {
        ivp::local_branches(&u, at, &ctx.options().ivp)?
    };
    let crit = find_critical_points(&u, 1e-13)?;
    let report = Report {
        criticals: crit
            .points
            .into_iter()
            .filter(|p| (p.theta - at).abs() <= 1e-6 * (1.0 + at.abs()))
            .collect(),
        branches: branches.iter().map(|b| BranchJson::Taylor(TaylorJson::new(b))).collect(),
        ..Report::default()
    };
    ctx.emit(&json_bytes(&report)?)
}

fn enumerate_solutions(ctx: &Ctx, u: &ModulusModel) -> Result<Vec<PiecewiseSolution>> {
    let mut q = SolutionSetQuery::new(
        u.clone(),
        ctx.cfg.ic.map(|(theta0, rho0)| QueryIC::Regular { theta0, rho0 }),
    );
    q.options = ctx.options();
    enumerate_branches(&q, ctx.cfg.max_switches)
}

fn enumerate(ctx: &mut Ctx) -> Outcome {
    let u = ctx.model()?;
    let sols = enumerate_solutions(ctx, &u)?;
    ctx.check_residuals(&u, sols.iter());
    ctx.write_csv_dir(&sols, &u)?;
    let mut notes = Vec::new();
    if ctx.cfg.ic.is_none() {
        notes.push(format!(
            "illustrative fan of {} seeded initial conditions (seed {}); the solution set is not exhausted",
            ctx.cfg.fan_size, ctx.cfg.seed
        ));
    }
    let report = Report {
        criticals: find_critical_points(&u, 1e-13)?.points,
        branches: sols.iter().map(|s| BranchJson::Solution(SolutionJson::new(s, &u))).collect(),
        notes,
        ..Report::default()
    };
    ctx.emit(&json_bytes(&report)?)
}

fn maximal(ctx: &mut Ctx) -> Outcome {
    let u = ctx.model()?;
    let sol = maximal_solution(&u, &ctx.options())?;
    ctx.check_residuals(&u, std::iter::once(&sol));
    ctx.write_csv_dir(std::slice::from_ref(&sol), &u)?;
    match ctx.cfg.format.unwrap_or(Format::Json) {
        Format::Csv => {
            let bytes = solution_csv(&sol.nodes(), &u)?;
            ctx.emit(&bytes)
        }
        _ => {
            let report = Report {
                criticals: find_critical_points(&u, 1e-13)?.points,
                maximal: Some(SolutionJson::new(&sol, &u)),
                ..Report::default()
            };
            ctx.emit(&json_bytes(&report)?)
        }
    }
}

/// First critical point that admits a cone, when `--at` is absent.
fn default_apex(u: &ModulusModel, opts: &AssemblyOptions) -> Result<f64> {
    let crit = find_critical_points(u, 1e-13)?;
    crit.points
        .iter()
        .filter(|p| p.kind != CriticalKind::Minimum)
        .map(|p| p.theta)
        .find(|t| build_cone(u, *t, opts).is_ok())
        .ok_or_else(|| Error::NoContinuation {
            theta: u.domain().lo,
            reason: "no maximum-type critical point admits a cone".into(),
        })
}

fn cone_samples(cone: &crate::assembler::ConvergenceCone, fixed: Option<(f64, f64)>) -> Vec<RegularIC> {
    if let Some((t, r)) = fixed {
        return vec![RegularIC::new(t, r)];
    }
    let far = match cone.side {
        crate::assembler::ConeSide::Forward => cone.domain.hi,
        crate::assembler::ConeSide::Backward => cone.domain.lo,
    };
    let theta = cone.apex_theta + 0.5 * (far - cone.apex_theta);
    let Some((lo, hi)) = cone.bounds(theta) else { return Vec::new() };
    [0.25, 0.5, 0.75]
        .iter()
        .map(|f| RegularIC::new(theta, lo + f * (hi - lo)))
        .collect()
}

fn cone(ctx: &mut Ctx) -> Outcome {
    let u = ctx.model()?;
    let opts = ctx.options();
    let apex = match ctx.cfg.at {
        Some(t) => t,
        None => default_apex(&u, &opts)?,
    };
    let c = build_cone(&u, apex, &opts)?;
    let samples = cone_samples(&c, ctx.cfg.sample)
        .into_iter()
        .map(|ic| sample_cone_solution(&c, &u, ic, &opts))
        .collect::<Result<Vec<_>>>()?;
    ctx.check_residuals(&u, samples.iter().chain([&c.upper, &c.lower]));
    ctx.write_csv_dir(&samples, &u)?;
    let report = Report {
        criticals: find_critical_points(&u, 1e-13)?
            .points
            .into_iter()
            .filter(|p| (p.theta - apex).abs() <= 1e-6 * (1.0 + apex.abs()))
            .collect(),
        cones: vec![ConeJson::new(&c, &samples, &u)],
        ..Report::default()
    };
    ctx.emit(&json_bytes(&report)?)
}

fn polyline(sol: &PiecewiseSolution) -> Vec<(f64, f64)> {
    sol.nodes().iter().map(|n| cartesian(n.theta, n.rho)).collect()
}

fn plot(ctx: &mut Ctx) -> Outcome {
    let u = ctx.model()?;
    let opts = ctx.options();
    let crit = find_critical_points(&u, 1e-13)?;
    let mut p = Plot::new();
    let ceiling = u
        .domain()
        .grid(400)
        .into_iter()
        .map(|t| Ok(cartesian(t, u.eval(t)?.sqrt())))
        .collect::<Result<Vec<_>>>()?;
    p.path("maximal curve", Style::Maximal, ceiling);
    for c in &crit.points {
        let (x, y) = cartesian(c.theta, c.depth);
        p.marker(x, y);
    }
    match maximal_solution(&u, &opts) {
        Ok(m) => p.path("maximal solution", Style::Solution, polyline(&m)),
        Err(e) => {
            let _ = writeln!(ctx.stderr, "note: no maximal solution drawn: {e}");
        }
    }
    if let Some(apex) = ctx.cfg.at {
        let c = build_cone(&u, apex, &opts)?;
        p.path("cone upper bound", Style::Bound, polyline(&c.upper));
        p.path("cone lower bound", Style::Bound, polyline(&c.lower));
    }
    if ctx.cfg.ic.is_some() {
        for (k, s) in enumerate_solutions(ctx, &u)?.iter().enumerate() {
            p.path(&format!("solution {k} ({})", s.signature()), Style::Solution, polyline(s));
        }
    }
    let svg = p.render();
    ctx.emit(svg.as_bytes())
}
