use std::path::Path;

use anyhow::Result;
use rayon::prelude::*;
use serde_json::{json, Value};
use ssprofile::critical_points::{catalog, locate_points};
use ssprofile::explicit_solutions::ExplicitFamily;
use ssprofile::exponents::{classify_regime, CriticalExponents};
use ssprofile::integrator::write_profile_csv;
use ssprofile::phase_systems::{ProfileSample, System};
use ssprofile::shooting::{
    emit_selfsimilar_snapshots, estimate_p0, find_extinction_fast_connection, find_extinction_slow_connection,
    find_forward_fast_connection, find_forward_slow_connection, follow_extinction, follow_forward, log_grid,
    shoot_p3_orbit, sweep, ConnectionResult, OrbitReport, ShootOptions, SnapshotKind, TurnMode,
};
use ssprofile::verify::{self, Level};

use crate::config::{Branch, RunConfig};
use crate::output::{csv_bytes, json_bytes, write_atomic};

fn print_json(v: &Value) {
    print!("{}", String::from_utf8(json_bytes(v)).expect("JSON is UTF-8"));
}

fn save_config(cfg: &RunConfig) -> Result<()> {
    write_atomic(&cfg.out, "run.conf", cfg.emit().as_bytes())?;
    Ok(())
}

pub fn exponents(cfg: &RunConfig) -> Result<()> {
    let params = cfg.params()?;
    print_json(&json!({
        "exponents": params.exponents(),
        "regime": classify_regime(&params),
    }));
    Ok(())
}

pub fn points(cfg: &RunConfig, all: bool) -> Result<()> {
    let e = cfg.params()?.exponents();
    let pts = if all { catalog(&e, cfg.system) } else { locate_points(&e, cfg.system) };
    print_json(&json!({ "system": cfg.system.name(), "points": pts }));
    Ok(())
}

fn connection(e: &CriticalExponents, cfg: &RunConfig, system: System, branch: Branch) -> Result<ConnectionResult> {
    let (ic, opts) = (cfg.integrator()?, cfg.shoot()?);
    Ok(match (system, branch) {
        (System::Forward, Branch::Fast) => find_forward_fast_connection(e, &ic, &opts, None)?,
        (System::Forward, Branch::Slow) => find_forward_slow_connection(e, &ic, &opts)?,
        (System::Extinction, Branch::Fast) => find_extinction_fast_connection(e, &ic, &opts, None)?,
        (System::Extinction, Branch::Slow) => find_extinction_slow_connection(e, &ic, &opts)?,
        (_, Branch::P3) => unreachable!("the P3 orbit is not a P0 connection"),
    })
}

/// Writes the orbit CSV, profile CSV and JSON of a connection under `stem`.
fn write_connection(dir: &Path, stem: &str, r: &ConnectionResult) -> Result<Value> {
    let orbit = format!("{stem}_orbit.csv");
    let profile = format!("{stem}_profile.csv");
    write_atomic(dir, &orbit, &csv_bytes(|w| r.report.trajectory.write_csv(w))?)?;
    write_atomic(dir, &profile, &csv_bytes(|w| write_profile_csv(&r.profile, w))?)?;
    let v = r.to_json(&orbit, &profile);
    write_atomic(dir, &format!("{stem}.json"), &json_bytes(&v))?;
    Ok(v)
}

pub fn shoot(cfg: &RunConfig) -> Result<()> {
    let e = cfg.params()?.exponents();
    let stem = format!("{}_{}", cfg.system.name(), cfg.branch.name());
    let v = if cfg.branch == Branch::P3 {
        if cfg.system != System::Extinction {
            return Err(ssprofile::Error::InvalidArgument("the P3 orbit belongs to the extinction system".into()).into());
        }
        let r = shoot_p3_orbit(&e, &cfg.integrator()?, &cfg.classify()?)?;
        let (orbit, profile) = (format!("{stem}_orbit.csv"), format!("{stem}_profile.csv"));
        write_atomic(&cfg.out, &orbit, &csv_bytes(|w| r.report.trajectory.write_csv(w))?)?;
        write_atomic(&cfg.out, &profile, &csv_bytes(|w| write_profile_csv(&r.profile, w))?)?;
        let v = json!({
            "system": "extinction",
            "class": r.report.class.name(),
            "head": r.head,
            "max_cylinder": r.report.max_cylinder,
            "orbit_csv_path": orbit,
            "profile_csv_path": profile,
        });
        write_atomic(&cfg.out, &format!("{stem}.json"), &json_bytes(&v))?;
        v
    } else {
        let r = connection(&e, cfg, cfg.system, cfg.branch)?;
        write_connection(&cfg.out, &stem, &r)?
    };
    save_config(cfg)?;
    print_json(&v);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    F1a,
    F1b,
    F2a,
    F2b,
    F3a,
    F3b,
}

impl FigureId {
    pub fn parse(s: &str) -> ssprofile::Result<Self> {
        Ok(match s {
            "1a" => FigureId::F1a,
            "1b" => FigureId::F1b,
            "2a" => FigureId::F2a,
            "2b" => FigureId::F2b,
            "3a" => FigureId::F3a,
            "3b" => FigureId::F3b,
            _ => {
                return Err(ssprofile::Error::InvalidArgument(format!(
                    "unknown figure '{s}' (1a, 1b, 2a, 2b, 3a, 3b)"
                )))
            }
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            FigureId::F1a => "1a",
            FigureId::F1b => "1b",
            FigureId::F2a => "2a",
            FigureId::F2b => "2b",
            FigureId::F3a => "3a",
            FigureId::F3b => "3b",
        }
    }

    /// Default parameters `(m, N, σ, p)` and system of the figure.
    pub fn defaults(self) -> RunConfig {
        let (sigma, p, system) = match self {
            FigureId::F1a => (10.0, 3.5, System::Forward),
            FigureId::F1b => (10.0, 3.0, System::Extinction),
            FigureId::F2a => (4.0, 1.74, System::Forward),
            FigureId::F2b => (4.0, 1.8, System::Forward),
            FigureId::F3a => (4.0, 1.74, System::Extinction),
            FigureId::F3b => (4.0, 1.8, System::Extinction),
        };
        RunConfig { m: 0.25, n: 4, sigma, p, system, branch: Branch::Fast, ..RunConfig::default() }
    }
}

/// Times of the snapshots of figure 1.
pub const FORWARD_TIMES: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
pub const EXTINCTION_TIMES: [f64; 4] = [0.0, 0.5, 0.9, 0.99];
pub const EXTINCTION_T: f64 = 1.0;
/// Number of orbits in figures 2 and 3.
pub const FAMILY_SIZE: usize = 12;
/// Half-width in decades of the figure 2–3 grid around a connection.
pub const FAMILY_DECADES: f64 = 2.0;

pub fn figure(id: FigureId, cfg: &RunConfig) -> Result<()> {
    let v = match id {
        FigureId::F1a | FigureId::F1b => snapshots(id, cfg)?,
        _ => family(id, cfg)?,
    };
    save_config(cfg)?;
    print_json(&v);
    Ok(())
}

fn snapshots(id: FigureId, cfg: &RunConfig) -> Result<Value> {
    let e = cfg.params()?.exponents();
    let stem = format!("fig{}", id.name());
    let r = connection(&e, cfg, cfg.system, cfg.branch)?;
    let conn = write_connection(&cfg.out, &stem, &r)?;
    let (kind, times): (_, &[f64]) = match cfg.system {
        System::Forward => (SnapshotKind::Forward, &FORWARD_TIMES),
        System::Extinction => (SnapshotKind::Extinction { t_final: EXTINCTION_T }, &EXTINCTION_TIMES),
    };
    let scale = |t: f64| match kind {
        SnapshotKind::Forward => t.powf(e.beta),
        SnapshotKind::Extinction { t_final } => (t_final - t).powf(e.beta),
    };
    let xs = snapshot_grid(&r.profile, times.iter().map(|&t| scale(t)));
    let rows = emit_selfsimilar_snapshots(&r.profile, &e, kind, times, &xs)?;
    let csv = csv_bytes(|w| {
        use std::io::Write;
        writeln!(w, "t,x,xi,u,extrapolated")?;
        for r in &rows {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e},{}", r.t, r.x, r.xi, r.u, r.extrapolated as u8)?;
        }
        Ok(())
    })?;
    let snap = format!("{stem}_snapshots.csv");
    write_atomic(&cfg.out, &snap, &csv)?;
    let top = r.profile.iter().max_by(|a, b| a.f.total_cmp(&b.f)).expect("profile is not empty");
    let peaks: Vec<Value> = times
        .iter()
        .map(|&t| {
            let tau = match kind {
                SnapshotKind::Forward => t,
                SnapshotKind::Extinction { t_final } => t_final - t,
            };
            json!({ "t": t, "u_max": tau.powf(e.alpha) * top.f, "x_max": top.xi / scale(t) })
        })
        .collect();
    let v = json!({
        "figure": id.name(),
        "system": cfg.system.name(),
        "branch": cfg.branch.name(),
        "alpha": e.alpha,
        "beta": e.beta,
        "t_final": matches!(cfg.system, System::Extinction).then_some(EXTINCTION_T),
        "peaks": peaks,
        "connection": conn,
        "snapshots_csv_path": snap,
    });
    write_atomic(&cfg.out, &format!("{stem}.json"), &json_bytes(&v))?;
    Ok(v)
}

/// `x = 0` and 400 log-spaced points wide enough that every snapshot shows
/// the profile from its first sample to where it falls below 1% of its peak.
fn snapshot_grid(profile: &[ProfileSample], scales: impl Iterator<Item = f64> + Clone) -> Vec<f64> {
    let (imax, top) = profile
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.f.total_cmp(&b.1.f))
        .expect("profile is not empty");
    let cut = profile[imax..]
        .iter()
        .find(|s| s.f < 1e-2 * top.f)
        .unwrap_or(&profile[profile.len() - 1])
        .xi;
    let lo_scale = scales.clone().fold(f64::INFINITY, f64::min);
    let hi_scale = scales.fold(0.0, f64::max);
    let mut xs = vec![0.0];
    xs.extend(log_grid(profile[0].xi / hi_scale, cut / lo_scale, 400));
    xs
}

fn family(id: FigureId, cfg: &RunConfig) -> Result<Value> {
    let e = cfg.params()?.exponents();
    let (ic, opts) = (cfg.integrator()?, cfg.shoot()?);
    let system = cfg.system;
    let found = match connection(&e, cfg, system, Branch::Fast) {
        Ok(r) => Some(r),
        Err(err) => match err.downcast_ref::<ssprofile::Error>() {
            Some(ssprofile::Error::Regime(_) | ssprofile::Error::NoBracket(_)) => None,
            _ => return Err(err),
        },
    };
    let grid = figure_grid(found.as_ref().map(|r| r.param_value), &opts);
    let reports: Vec<OrbitReport> = grid
        .par_iter()
        .map(|&c| match system {
            System::Forward => follow_forward(c, &e, &ic, &opts.classify),
            System::Extinction => follow_extinction(c, &e, &ic, &opts.classify, TurnMode::Full),
        })
        .collect::<ssprofile::Result<_>>()?;
    let stem = format!("fig{}", id.name());
    let csv = csv_bytes(|w| {
        use std::io::Write;
        let chart = reports[0].trajectory.chart;
        writeln!(w, "orbit,param,{},{}", chart.indep_name(), chart.coord_names().join(","))?;
        for (i, (c, r)) in grid.iter().zip(&reports).enumerate() {
            for (t, x) in &r.trajectory.samples {
                write!(w, "{i},{c:.16e},{t:.16e}")?;
                for v in &x[..chart.dim()] {
                    write!(w, ",{v:.16e}")?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    })?;
    let orbits = format!("{stem}_orbits.csv");
    write_atomic(&cfg.out, &orbits, &csv)?;
    let v = json!({
        "figure": id.name(),
        "system": system.name(),
        "param_name": if system == System::Forward { "C" } else { "K" },
        "connection": found.as_ref().map(|r| r.param_value),
        "orbits": grid.iter().zip(&reports).map(|(c, r)| json!({
            "param": c,
            "class": r.class.name(),
            "min_dist_p1": r.min_dist_p1,
        })).collect::<Vec<_>>(),
        "orbits_csv_path": orbits,
    });
    write_atomic(&cfg.out, &format!("{stem}.json"), &json_bytes(&v))?;
    Ok(v)
}

/// Figure 2–3 grid: centred on the connection when there is one, the whole
/// scan range otherwise.
pub fn figure_grid(center: Option<f64>, opts: &ShootOptions) -> Vec<f64> {
    match center {
        Some(c) => {
            let w = 10f64.powf(FAMILY_DECADES);
            log_grid(c / w, c * w, FAMILY_SIZE)
        }
        None => {
            let (lo, hi) = opts.scan_decades;
            log_grid(10f64.powi(lo), 10f64.powi(hi), FAMILY_SIZE)
        }
    }
}

pub fn verify(level: Level) -> Result<bool> {
    let report = verify::run(level);
    for c in &report.checks {
        println!(
            "{} {} ({:.2}s): {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.seconds,
            c.detail
        );
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {failed} failed", report.checks.len());
    Ok(report.passed())
}

pub struct ExplicitArgs {
    pub family: String,
    pub c: f64,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub n: usize,
}

pub fn explicit(cfg: &RunConfig, a: &ExplicitArgs) -> Result<()> {
    let e = cfg.params()?.exponents();
    let fam = ExplicitFamily::parse(&a.family, a.c)?;
    let y1 = -(e.n() - 2.0) / e.m();
    let (lo, hi, log) = match fam {
        ExplicitFamily::SobolevStationary { .. } | ExplicitFamily::SingularStationary => (1e-2, 1e2, true),
        ExplicitFamily::PlaneCurve { .. } => (1e-3, 1e3, true),
        ExplicitFamily::CylinderOrbit => (y1, 0.0, false),
        ExplicitFamily::P0Expansion => (-1.0, 0.0, false),
    };
    let (lo, hi) = (a.lo.unwrap_or(lo), a.hi.unwrap_or(hi));
    if a.n < 2 || !(lo < hi) || (log && lo <= 0.0) {
        return Err(ssprofile::Error::InvalidArgument(format!("bad grid [{lo}, {hi}] with {} points", a.n)).into());
    }
    let grid = if log {
        log_grid(lo, hi, a.n)
    } else {
        (0..a.n).map(|i| lo + (hi - lo) * i as f64 / (a.n - 1) as f64).collect()
    };
    let mut rows = 0;
    let csv = csv_bytes(|w| {
        rows = fam.write_csv(&grid, &e, w)?;
        Ok(())
    })?;
    if rows == 0 {
        fam.eval(grid[0], &e)?;
        return Err(ssprofile::Error::InvalidArgument("no grid point lies in the family's domain".into()).into());
    }
    let name = format!("explicit_{}.csv", fam.name());
    write_atomic(&cfg.out, &name, &csv)?;
    save_config(cfg)?;
    print_json(&json!({ "family": fam, "rows": rows, "csv_path": name }));
    Ok(())
}

pub struct SweepArgs {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub p0: bool,
    pub p_grid: usize,
    pub refine: usize,
}

pub fn sweep_cmd(cfg: &RunConfig, a: &SweepArgs) -> Result<()> {
    let params = cfg.params()?;
    let (ic, opts) = (cfg.integrator()?, cfg.shoot()?);
    let (name, v) = if a.p0 {
        let est = estimate_p0(&params, &ic, &opts, a.p_grid, a.refine)?;
        ("p0.json".to_string(), serde_json::to_value(est)?)
    } else {
        if a.n < 2 || !(a.lo > 0.0 && a.lo < a.hi) {
            return Err(ssprofile::Error::InvalidArgument(format!(
                "bad sweep range [{}, {}] with {} points",
                a.lo, a.hi, a.n
            ))
            .into());
        }
        let grid = log_grid(a.lo, a.hi, a.n);
        let s = sweep(&params.exponents(), cfg.system, &grid, &ic, &opts.classify)?;
        (format!("sweep_{}.json", cfg.system.name()), serde_json::to_value(s)?)
    };
    write_atomic(&cfg.out, &name, &json_bytes(&v))?;
    save_config(cfg)?;
    print_json(&v);
    Ok(())
}
