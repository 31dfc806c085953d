use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::ivp::BranchSign;

use super::args::{CommonArgs, Format, Side};
use super::UsageError;

/// Where `U` comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum USource {
    Expr(String),
    Csv(PathBuf),
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: Option<(f64, f64)>,
    pub u: Option<USource>,
    pub rho: Option<String>,
    pub ic: Option<(f64, f64)>,
    pub sign: Option<BranchSign>,
    pub side: Side,
    pub at: Option<f64>,
    pub sample: Option<(f64, f64)>,
    pub tol_res: f64,
    pub tol_contact: f64,
    pub tol_bvp: f64,
    pub order: usize,
    pub seed: u64,
    pub max_switches: usize,
    pub fan_size: usize,
    pub samples: usize,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub csv_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            domain: None,
            u: None,
            rho: None,
            ic: None,
            sign: None,
            side: Side::Both,
            at: None,
            sample: None,
            tol_res: 1e-8,
            tol_contact: 1e-10,
            tol_bvp: 1e-8,
            order: crate::taylor::DEFAULT_ORDER,
            seed: 0,
            max_switches: 2,
            fan_size: 6,
            samples: 201,
            out: None,
            format: None,
            csv_dir: None,
        }
    }
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, UsageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, UsageError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(UsageError(format!("config line {}: expected key = value", i + 1)));
        };
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

fn num(key: &str, s: &str) -> Result<f64, UsageError> {
    s.trim()
        .parse()
        .map_err(|_| UsageError(format!("config key {key}: not a number: {s}")))
}

fn pair(key: &str, s: &str) -> Result<(f64, f64), UsageError> {
    let parts: Vec<&str> = s.split(|c: char| c.is_whitespace() || c == ',').filter(|p| !p.is_empty()).collect();
    if parts.len() != 2 {
        return Err(UsageError(format!("config key {key}: expected two numbers")));
    }
    Ok((num(key, parts[0])?, num(key, parts[1])?))
}

fn int<T: std::str::FromStr>(key: &str, s: &str) -> Result<T, UsageError> {
    s.trim()
        .parse()
        .map_err(|_| UsageError(format!("config key {key}: not an integer: {s}")))
}

impl RunConfig {
    fn apply_file(&mut self, map: &BTreeMap<String, String>) -> Result<(), UsageError> {
        for (k, v) in map {
            match k.as_str() {
                "domain" => self.domain = Some(pair(k, v)?),
                "u" => self.u = Some(USource::Expr(v.clone())),
                "u_csv" => self.u = Some(USource::Csv(PathBuf::from(v))),
                "rho" => self.rho = Some(v.clone()),
                "ic" => self.ic = Some(pair(k, v)?),
                "sign" => {
                    self.sign = Some(
                        BranchSign::parse(v).ok_or_else(|| UsageError(format!("bad sign {v}")))?,
                    )
                }
                "direction" => self.side = Side::parse(v)?,
                "at" | "apex" => self.at = Some(num(k, v)?),
                "sample" => self.sample = Some(pair(k, v)?),
                "tol_res" => self.tol_res = num(k, v)?,
                "tol_contact" => self.tol_contact = num(k, v)?,
                "tol_bvp" => self.tol_bvp = num(k, v)?,
                "order" | "n" => self.order = int(k, v)?,
                "seed" => self.seed = int(k, v)?,
                "max_switches" => self.max_switches = int(k, v)?,
                "fan_size" => self.fan_size = int(k, v)?,
                "samples" => self.samples = int(k, v)?,
                "out" => self.out = Some(PathBuf::from(v)),
                "format" => self.format = Some(Format::parse(v)?),
                "csv_dir" => self.csv_dir = Some(PathBuf::from(v)),
                other => return Err(UsageError(format!("unknown config key {other}"))),
            }
        }
        Ok(())
    }

    fn apply_args(&mut self, a: &CommonArgs) -> Result<(), UsageError> {
        if let Some(d) = &a.domain {
            self.domain = Some((d[0], d[1]));
        }
        if let Some(s) = &a.u {
            self.u = Some(USource::Expr(s.clone()));
        }
        if let Some(p) = &a.u_csv {
            self.u = Some(USource::Csv(p.clone()));
        }
        if let Some(s) = &a.rho {
            self.rho = Some(s.clone());
        }
        if let Some(v) = &a.ic {
            self.ic = Some((v[0], v[1]));
        }
        if let Some(s) = &a.sign {
            self.sign = Some(BranchSign::parse(s).ok_or_else(|| UsageError(format!("bad sign {s}")))?);
        }
        if let Some(s) = a.direction {
            self.side = s;
        }
        if let Some(t) = a.at {
            self.at = Some(t);
        }
        if let Some(v) = &a.sample {
            self.sample = Some((v[0], v[1]));
        }
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = a.$f { self.$f = v; } )* };
        }
        take!(tol_res, tol_contact, tol_bvp, order, seed, max_switches, fan_size, samples);
        if let Some(p) = &a.out {
            self.out = Some(p.clone());
        }
        if let Some(f) = a.format {
            self.format = Some(f);
        }
        if let Some(p) = &a.csv_dir {
            self.csv_dir = Some(p.clone());
        }
        Ok(())
    }

    /// Defaults, then the config file, then command-line flags.
    pub fn resolve(a: &CommonArgs) -> Result<RunConfig, UsageError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &a.config {
            cfg.apply_file(&read_config_file(path)?)?;
        }
        cfg.apply_args(a)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), UsageError> {
        if let Some((lo, hi)) = self.domain {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(UsageError(format!("domain needs lo < hi, got [{lo}, {hi}]")));
            }
        }
        for (name, v) in [
            ("tol_res", self.tol_res),
            ("tol_contact", self.tol_contact),
            ("tol_bvp", self.tol_bvp),
        ] {
            if !(v > 0.0) {
                return Err(UsageError(format!("{name} must be positive, got {v}")));
            }
        }
        if self.order < 4 {
            return Err(UsageError(format!("order must be at least 4, got {}", self.order)));
        }
        if self.samples < 2 {
            return Err(UsageError("samples must be at least 2".into()));
        }
        Ok(())
    }
}
