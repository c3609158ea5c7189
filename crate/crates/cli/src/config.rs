//! Run configuration: defaults, the sectioned key-value config file, and
//! command-line overrides, applied in that order.

use anyhow::{anyhow, bail, Context, Result};
use benard_core::{BoundaryCondition, Scheme, SpaceTag};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LengthSpec {
    /// Resolve L = L_c(bc) before any dependent step.
    Critical,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RayleighSpec {
    /// R = ratio * R_c(bc).
    Ratio(f64),
    Value(f64),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub bc: BoundaryCondition,
    pub length: LengthSpec,
    pub rayleigh: RayleighSpec,
    pub prandtl: f64,
    /// Restore the 1/Pr prefactor of the momentum equation in the DNS.
    pub pr_scaling: bool,
    pub k_max: usize,
    pub j_max: usize,
    pub grid_n1: usize,
    pub grid_n2: usize,
    pub dt: f64,
    pub horizon: f64,
    pub steady_tol: f64,
    pub scheme: Scheme,
    pub seed: u64,
    pub noise: f64,
    /// Snapshot cadence in recorded samples (0 = final state only).
    pub snapshot_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            bc: BoundaryCondition::parse("free-free").unwrap(),
            length: LengthSpec::Critical,
            rayleigh: RayleighSpec::Ratio(1.05),
            prandtl: 10.0,
            pr_scaling: false,
            k_max: 4,
            j_max: 8,
            grid_n1: 96,
            grid_n2: 49,
            dt: 2e-3,
            horizon: 400.0,
            steady_tol: 1e-9,
            scheme: Scheme::Imex1,
            seed: 7,
            noise: 1e-3,
            snapshot_every: 0,
        }
    }
}

impl RunConfig {
    /// All tolerances and sizes must be positive.
    pub fn validate(&self) -> Result<()> {
        if let LengthSpec::Value(l) = self.length {
            if !(l > 0.0) {
                bail!("length must be positive, got {l}");
            }
        }
        let r_ok = match self.rayleigh {
            RayleighSpec::Ratio(x) => x > 0.0,
            RayleighSpec::Value(x) => x > 0.0,
        };
        if !r_ok {
            bail!("Rayleigh specification must be positive");
        }
        if !(self.prandtl > 0.0 && self.dt > 0.0 && self.horizon > 0.0 && self.steady_tol > 0.0) {
            bail!("prandtl, dt, horizon and steady_tol must all be positive");
        }
        if self.k_max < 1 || self.j_max < 1 || self.grid_n1 < 4 || self.grid_n2 < 4 {
            bail!("truncation and grid sizes are too small");
        }
        if !(self.noise >= 0.0) {
            bail!("noise amplitude must be nonnegative");
        }
        Ok(())
    }

    /// Apply one `key = value` pair (section-qualified keys use '.').
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let bare = key.rsplit('.').next().unwrap_or(key);
        match bare {
            "bc" => self.bc = BoundaryCondition::parse(value)?,
            "space" => {
                let tag = match value {
                    "B0" => SpaceTag::B0,
                    "B1" => SpaceTag::B1,
                    "B2" => SpaceTag::B2,
                    "B3" => SpaceTag::B3,
                    _ => bail!("unknown space tag '{value}'"),
                };
                self.bc = BoundaryCondition::with_space(self.bc.tag, tag)?;
            }
            "length" => {
                self.length = if value == "critical" {
                    LengthSpec::Critical
                } else {
                    LengthSpec::Value(parse_num(value)?)
                }
            }
            "r_ratio" => self.rayleigh = RayleighSpec::Ratio(parse_num(value)?),
            "rayleigh" => self.rayleigh = RayleighSpec::Value(parse_num(value)?),
            "prandtl" => self.prandtl = parse_num(value)?,
            "pr_scaling" => self.pr_scaling = parse_bool(value)?,
            "k_max" => self.k_max = parse_int(value)?,
            "j_max" => self.j_max = parse_int(value)?,
            "grid_n1" => self.grid_n1 = parse_int(value)?,
            "grid_n2" => self.grid_n2 = parse_int(value)?,
            "dt" => self.dt = parse_num(value)?,
            "horizon" => self.horizon = parse_num(value)?,
            "steady_tol" => self.steady_tol = parse_num(value)?,
            "scheme" => {
                self.scheme = match value {
                    "imex1" => Scheme::Imex1,
                    "sbdf2" => Scheme::Sbdf2,
                    _ => bail!("unknown scheme '{value}' (imex1 or sbdf2)"),
                }
            }
            "seed" => self.seed = parse_int(value)? as u64,
            "noise" => self.noise = parse_num(value)?,
            "snapshot_every" => self.snapshot_every = parse_int(value)?,
            _ => bail!("unknown configuration key '{key}'"),
        }
        Ok(())
    }

    /// Load `key = value` pairs from a sectioned config file.
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected 'key = value'", path.display(), lineno + 1))?;
            let full_key = if section.is_empty() {
                key.trim().to_string()
            } else {
                format!("{section}.{}", key.trim())
            };
            self.apply(&full_key, value.trim())
                .with_context(|| format!("{}:{}", path.display(), lineno + 1))?;
        }
        Ok(())
    }

    /// Key-value dump, used by the manifest so a run records exactly the
    /// configuration it resolved.
    pub fn dump(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("bc".into(), self.bc.to_string());
        m.insert(
            "space".into(),
            match self.bc.space_tag {
                SpaceTag::B0 => "B0",
                SpaceTag::B1 => "B1",
                SpaceTag::B2 => "B2",
                SpaceTag::B3 => "B3",
            }
            .to_string(),
        );
        m.insert(
            "length".into(),
            match self.length {
                LengthSpec::Critical => "critical".into(),
                LengthSpec::Value(l) => format!("{l:.12e}"),
            },
        );
        match self.rayleigh {
            RayleighSpec::Ratio(x) => m.insert("r_ratio".into(), format!("{x:.12e}")),
            RayleighSpec::Value(x) => m.insert("rayleigh".into(), format!("{x:.12e}")),
        };
        m.insert("prandtl".into(), format!("{:.6e}", self.prandtl));
        m.insert("pr_scaling".into(), self.pr_scaling.to_string());
        m.insert("k_max".into(), self.k_max.to_string());
        m.insert("j_max".into(), self.j_max.to_string());
        m.insert("grid_n1".into(), self.grid_n1.to_string());
        m.insert("grid_n2".into(), self.grid_n2.to_string());
        m.insert("dt".into(), format!("{:.6e}", self.dt));
        m.insert("horizon".into(), format!("{:.6e}", self.horizon));
        m.insert("steady_tol".into(), format!("{:.6e}", self.steady_tol));
        m.insert(
            "scheme".into(),
            match self.scheme {
                Scheme::Imex1 => "imex1".into(),
                Scheme::Sbdf2 => "sbdf2".into(),
            },
        );
        m.insert("seed".into(), self.seed.to_string());
        m.insert("noise".into(), format!("{:.6e}", self.noise));
        m.insert("snapshot_every".into(), self.snapshot_every.to_string());
        m
    }
}

fn parse_num(s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| anyhow!("bad number '{s}'"))
}

fn parse_int(s: &str) -> Result<usize> {
    s.parse::<usize>().map_err(|_| anyhow!("bad integer '{s}'"))
}

fn parse_bool(s: &str) -> Result<bool> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => bail!("bad boolean '{s}'"),
    }
}
