//! Run configuration: a flat `key = value` file with `#` comments, layered
//! under command-line flags.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use ssprofile::exponents::ParameterSet;
use ssprofile::integrator::IntegratorConfig;
use ssprofile::phase_systems::System;
use ssprofile::shooting::{ClassifyOptions, ShootOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Fast,
    Slow,
    P3,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Fast => "fast",
            Branch::Slow => "slow",
            Branch::P3 => "p3",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "fast" => Branch::Fast,
            "slow" => Branch::Slow,
            "p3" => Branch::P3,
            _ => bail!("unknown branch '{s}' (fast, slow, p3)"),
        })
    }
}

pub fn parse_system(s: &str) -> Result<System> {
    Ok(match s {
        "forward" => System::Forward,
        "extinction" => System::Extinction,
        _ => bail!("unknown system '{s}' (forward, extinction)"),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub m: f64,
    pub n: u32,
    pub sigma: f64,
    pub p: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub eps_seed: f64,
    pub out: PathBuf,
    pub system: System,
    pub branch: Branch,
}

impl Default for RunConfig {
    fn default() -> Self {
        let integ = IntegratorConfig::default();
        RunConfig {
            m: 0.25,
            n: 4,
            sigma: 4.0,
            p: 1.8,
            rel_tol: integ.rel_tol,
            abs_tol: integ.abs_tol,
            eps_seed: ClassifyOptions::default().eps_seed,
            out: PathBuf::from("ssprofile-out"),
            system: System::Forward,
            branch: Branch::Fast,
        }
    }
}

/// Values set explicitly, by a config file or by flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub m: Option<f64>,
    pub n: Option<u32>,
    pub sigma: Option<f64>,
    pub p: Option<f64>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub eps_seed: Option<f64>,
    pub out: Option<PathBuf>,
    pub system: Option<System>,
    pub branch: Option<Branch>,
}

impl Overrides {
    pub fn parse(text: &str) -> Result<Self> {
        let mut o = Overrides::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("line {}: expected key = value", i + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let num = || -> Result<f64> {
                value
                    .parse::<f64>()
                    .with_context(|| format!("line {}: '{value}' is not a number", i + 1))
            };
            match key {
                "m" => o.m = Some(num()?),
                "N" => {
                    o.n = Some(
                        value
                            .parse()
                            .with_context(|| format!("line {}: N must be a positive integer", i + 1))?,
                    )
                }
                "sigma" => o.sigma = Some(num()?),
                "p" => o.p = Some(num()?),
                "rel_tol" => o.rel_tol = Some(num()?),
                "abs_tol" => o.abs_tol = Some(num()?),
                "eps_seed" => o.eps_seed = Some(num()?),
                "out" => o.out = Some(PathBuf::from(value)),
                "system" => o.system = Some(parse_system(value)?),
                "branch" => o.branch = Some(Branch::parse(value)?),
                _ => bail!("line {}: unknown key '{key}'", i + 1),
            }
        }
        Ok(o)
    }
}

impl RunConfig {
    pub fn apply(mut self, o: &Overrides) -> Self {
        self.m = o.m.unwrap_or(self.m);
        self.n = o.n.unwrap_or(self.n);
        self.sigma = o.sigma.unwrap_or(self.sigma);
        self.p = o.p.unwrap_or(self.p);
        self.rel_tol = o.rel_tol.unwrap_or(self.rel_tol);
        self.abs_tol = o.abs_tol.unwrap_or(self.abs_tol);
        self.eps_seed = o.eps_seed.unwrap_or(self.eps_seed);
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        self.system = o.system.unwrap_or(self.system);
        self.branch = o.branch.unwrap_or(self.branch);
        self
    }

    #[cfg(test)]
    pub fn parse(text: &str) -> Result<Self> {
        Ok(RunConfig::default().apply(&Overrides::parse(text)?))
    }

    /// Every field, one per line; `f64` values print in their shortest
    /// round-tripping form.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "m = {}", self.m);
        let _ = writeln!(s, "N = {}", self.n);
        let _ = writeln!(s, "sigma = {}", self.sigma);
        let _ = writeln!(s, "p = {}", self.p);
        let _ = writeln!(s, "rel_tol = {:e}", self.rel_tol);
        let _ = writeln!(s, "abs_tol = {:e}", self.abs_tol);
        let _ = writeln!(s, "eps_seed = {:e}", self.eps_seed);
        let _ = writeln!(s, "out = {}", self.out.display());
        let _ = writeln!(s, "system = {}", self.system.name());
        let _ = writeln!(s, "branch = {}", self.branch.name());
        s
    }

    pub fn params(&self) -> ssprofile::Result<ParameterSet> {
        ParameterSet::new(self.m, self.n, self.sigma, self.p)
    }

    pub fn integrator(&self) -> ssprofile::Result<IntegratorConfig> {
        let cfg = IntegratorConfig {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            ..IntegratorConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn classify(&self) -> ssprofile::Result<ClassifyOptions> {
        if !(self.eps_seed > 0.0 && self.eps_seed < 0.1) {
            return Err(ssprofile::Error::InvalidArgument(format!(
                "eps_seed must lie in (0, 0.1), got {}",
                self.eps_seed
            )));
        }
        Ok(ClassifyOptions { eps_seed: self.eps_seed, ..ClassifyOptions::default() })
    }

    pub fn shoot(&self) -> ssprofile::Result<ShootOptions> {
        Ok(ShootOptions { classify: self.classify()?, ..ShootOptions::default() })
    }
}
