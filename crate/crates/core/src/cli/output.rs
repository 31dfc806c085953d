use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::assembler::{ConvergenceCone, Junction, PiecewiseSolution};
use crate::error::{Error, Result};
use crate::ivp::Node;
use crate::maximal::CriticalPoint;
use crate::modulus::ModulusModel;
use crate::param::polar_to_cartesian;
use crate::taylor::{beta_sign_class, SignReport, TaylorBranch};

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    Ok(())
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:.16e}"))).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

pub fn u_csv(thetas: &[f64], values: &[f64]) -> Result<Vec<u8>> {
    csv_bytes(
        &["theta", "u"],
        thetas.iter().zip(values).map(|(t, v)| vec![*t, *v]),
    )
}

/// Cartesian point of a polar sample; outside the visible half-plane the
/// same formula is used.
pub fn cartesian(theta: f64, rho: f64) -> (f64, f64) {
    match polar_to_cartesian(theta, rho) {
        Ok(p) => (p.x, p.y),
        Err(_) => (rho * theta.cos(), rho * theta.sin()),
    }
}

pub fn solution_csv(nodes: &[Node], u: &ModulusModel) -> Result<Vec<u8>> {
    csv_bytes(
        &["theta", "rho", "drho", "x", "y", "residual"],
        nodes.iter().map(|n| {
            let (x, y) = cartesian(n.theta, n.rho);
            let res = u
                .eval(n.theta)
                .map(|v| (n.drho * n.drho + n.rho * n.rho - v).abs())
                .unwrap_or(f64::NAN);
            vec![n.theta, n.rho, n.drho, x, y, res]
        }),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionJson {
    pub signature: String,
    pub c1: bool,
    pub residual: f64,
    pub junctions: Vec<Junction>,
    /// `[theta, rho, rho']` rows.
    pub nodes: Vec<[f64; 3]>,
}

impl SolutionJson {
    pub fn new(sol: &PiecewiseSolution, u: &ModulusModel) -> Self {
        SolutionJson {
            signature: sol.signature(),
            c1: sol.c1,
            residual: sol.residual(u),
            junctions: sol.junctions.clone(),
            nodes: sol.nodes().iter().map(|n| [n.theta, n.rho, n.drho]).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TaylorJson {
    pub theta0: f64,
    pub rho0: f64,
    pub beta: f64,
    pub derivs: Vec<f64>,
    pub status: crate::taylor::BranchStatus,
    pub radius: crate::taylor::Radius,
    pub max_recursion_residual: f64,
    pub signs: Option<SignReport>,
}

impl TaylorJson {
    pub fn new(b: &TaylorBranch) -> Self {
        TaylorJson {
            theta0: b.ic.theta0,
            rho0: b.ic.rho0,
            beta: b.beta(),
            derivs: b.derivs.clone(),
            status: b.status,
            radius: b.radius,
            max_recursion_residual: b.recursion_residuals().into_iter().fold(0.0, f64::max),
            signs: beta_sign_class(b.ic.rho0, b.ic.u_jet.get(2)).ok(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BranchJson {
    Solution(SolutionJson),
    Taylor(TaylorJson),
}

#[derive(Debug, Clone, Serialize)]
pub struct ConeJson {
    pub apex_theta: f64,
    pub apex_depth: f64,
    pub betas: (f64, f64),
    pub side: crate::assembler::ConeSide,
    pub domain: (f64, f64),
    pub upper: SolutionJson,
    pub lower: SolutionJson,
    pub samples: Vec<SolutionJson>,
}

impl ConeJson {
    pub fn new(cone: &ConvergenceCone, samples: &[PiecewiseSolution], u: &ModulusModel) -> Self {
        ConeJson {
            apex_theta: cone.apex_theta,
            apex_depth: cone.apex_depth,
            betas: cone.betas,
            side: cone.side,
            domain: (cone.domain.lo, cone.domain.hi),
            upper: SolutionJson::new(&cone.upper, u),
            lower: SolutionJson::new(&cone.lower, u),
            samples: samples.iter().map(|s| SolutionJson::new(s, u)).collect(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Report {
    pub criticals: Vec<CriticalPoint>,
    pub branches: Vec<BranchJson>,
    pub maximal: Option<SolutionJson>,
    pub cones: Vec<ConeJson>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    v.push(b'\n');
    Ok(v)
}
