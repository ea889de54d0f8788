use serde::Serialize;

use super::main_coords;
use crate::error::{Error, Result};
use crate::exponents::CriticalExponents;
use crate::integrator::Trajectory;
use crate::phase_systems::{ChartId, log_xi_from_state, phase_to_profile_at, ProfileSample};

/// Least-squares power law over a window of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailFit {
    pub window: [f64; 2],
    pub slope: f64,
    /// `ξf'/f` at the end of the window nearest to the limit being fitted.
    pub terminal_y: f64,
    pub target: f64,
    pub rel_dev: f64,
}

/// Minimum window length, in decades of `ξ`.
pub const FIT_DECADES: f64 = 2.0;

/// A profile sample in logarithmic form, usable where `f` itself under- or
/// overflows. `y = ξf'/f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogSample {
    pub ln_xi: f64,
    pub ln_f: f64,
    pub y: f64,
}

impl From<&ProfileSample> for LogSample {
    fn from(s: &ProfileSample) -> Self {
        LogSample {
            ln_xi: s.xi.ln(),
            ln_f: s.f.ln(),
            y: s.xi * s.df / s.f,
        }
    }
}

fn to_log(profile: &[ProfileSample]) -> Vec<LogSample> {
    profile.iter().filter(|s| s.f > 0.0 && s.xi > 0.0).map(LogSample::from).collect()
}

fn regress(pts: &[LogSample], target: f64) -> Result<TailFit> {
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!("{} samples in the fit window", pts.len())));
    }
    let (first, last) = (pts[0], pts[pts.len() - 1]);
    let span = (last.ln_xi - first.ln_xi) / std::f64::consts::LN_10;
    if span < FIT_DECADES * (1.0 - 1e-9) {
        return Err(Error::InsufficientData(format!(
            "window covers {span:.3} decades, need {FIT_DECADES}"
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.ln_xi).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.ln_f).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.ln_xi - mx) * (p.ln_f - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.ln_xi - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(TailFit {
        window: [first.ln_xi.exp(), last.ln_xi.exp()],
        slope,
        terminal_y: last.y,
        target,
        rel_dev: (slope - target).abs() / target.abs(),
    })
}

/// Fits `ln f` against `ln ξ` over the samples with `ξ ∈ [ξa, ξb]`.
pub fn fit_window(profile: &[ProfileSample], xi_a: f64, xi_b: f64, target: f64) -> Result<TailFit> {
    let pts: Vec<LogSample> = to_log(profile)
        .into_iter()
        .filter(|s| s.ln_xi >= xi_a.ln() && s.ln_xi <= xi_b.ln())
        .collect();
    regress(&pts, target)
}

/// Fit over the last two decades of the samples; the window starts at the
/// last sample at least two decades before the end.
pub fn fit_tail_log(samples: &[LogSample], target: f64) -> Result<TailFit> {
    let last = samples
        .last()
        .ok_or_else(|| Error::InsufficientData("empty profile".into()))?;
    let edge = last.ln_xi - FIT_DECADES * std::f64::consts::LN_10;
    let start = samples
        .iter()
        .rposition(|s| s.ln_xi <= edge)
        .ok_or_else(|| Error::InsufficientData("profile covers less than two decades".into()))?;
    regress(&samples[start..], target)
}

/// Fit over the first two decades of the samples (behavior as `ξ → 0`);
/// `terminal_y` is taken at the first sample.
pub fn fit_head_log(samples: &[LogSample], target: f64) -> Result<TailFit> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InsufficientData("empty profile".into()))?;
    let edge = first.ln_xi + FIT_DECADES * std::f64::consts::LN_10;
    let end = samples
        .iter()
        .position(|s| s.ln_xi >= edge)
        .ok_or_else(|| Error::InsufficientData("profile covers less than two decades".into()))?;
    let mut fit = regress(&samples[..=end], target)?;
    fit.terminal_y = first.y;
    Ok(fit)
}

/// Fit over the last two decades of the profile.
pub fn fit_tail(profile: &[ProfileSample], target: f64) -> Result<TailFit> {
    fit_tail_log(&to_log(profile), target)
}

/// Fit over the first two decades of the profile.
pub fn fit_head(profile: &[ProfileSample], target: f64) -> Result<TailFit> {
    fit_head_log(&to_log(profile), target)
}

fn origin_shift(traj: &Trajectory, exps: &CriticalExponents) -> Result<f64> {
    if !matches!(traj.chart, ChartId::MainFwd | ChartId::MainExt) {
        return Err(Error::Domain {
            chart: traj.chart.name(),
            reason: "profiles are recovered from main-chart orbits only".into(),
        });
    }
    let first = traj
        .states()
        .find(|s| main_coords(s).map_or(false, |c| c[0] > 0.0 && c[2] > 0.0))
        .ok_or_else(|| Error::Domain {
            chart: traj.chart.name(),
            reason: "orbit has no state with X > 0 and Z > 0 to fix the origin".into(),
        })?;
    Ok(log_xi_from_state(&first, exps)? - first.indep)
}

fn end_of(traj: &Trajectory, upto: Option<usize>) -> usize {
    upto.map_or(traj.samples.len(), |u| (u + 1).min(traj.samples.len()))
}

/// Profile along a main-chart orbit, with the `ξ`-origin fixed by the first
/// state (`ln ξ = η + c`). Samples after `upto` are dropped, and so are
/// samples where `ξ` or `f` is not representable.
pub fn reconstruct_profile(
    traj: &Trajectory,
    exps: &CriticalExponents,
    upto: Option<usize>,
) -> Result<Vec<ProfileSample>> {
    let shift = origin_shift(traj, exps)?;
    let mut out = Vec::new();
    for s in traj.states().take(end_of(traj, upto)) {
        if s.coords[0] > 0.0 {
            let p = phase_to_profile_at(&s, exps, s.indep + shift)?.sample;
            if p.f > 0.0 && p.f.is_finite() && p.xi > 0.0 && p.xi.is_finite() && p.df.is_finite() {
                out.push(p);
            }
        }
    }
    Ok(out)
}

/// As [`reconstruct_profile`] in logarithmic form, covering the whole orbit.
pub fn reconstruct_log_profile(
    traj: &Trajectory,
    exps: &CriticalExponents,
    upto: Option<usize>,
) -> Result<Vec<LogSample>> {
    let shift = origin_shift(traj, exps)?;
    let m = exps.m();
    Ok(traj
        .states()
        .take(end_of(traj, upto))
        .filter(|s| s.coords[0] > 0.0)
        .map(|s| {
            let ln_xi = s.indep + shift;
            LogSample {
                ln_xi,
                ln_f: ((m * s.coords[0] / exps.alpha).ln() - 2.0 * ln_xi) / (1.0 - m),
                y: s.coords[1],
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SnapshotKind {
    /// `u = t^α f(|x| t^β)`.
    Forward,
    /// `u = (T−t)^α f(|x| (T−t)^β)`.
    Extinction { t_final: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnapshotRow {
    pub t: f64,
    pub x: f64,
    pub xi: f64,
    pub u: f64,
    /// `ξ` lies outside the computed profile and `f` was extended (flat
    /// toward the origin, by the fitted power law in the tail).
    pub extrapolated: bool,
}

/// Profile value at `ξ` by cubic Hermite interpolation in `ξ`, with
/// extrapolation outside the samples.
pub fn profile_value(profile: &[ProfileSample], tail_slope: f64, xi: f64) -> (f64, bool) {
    let first = profile[0];
    let last = profile[profile.len() - 1];
    if xi <= first.xi {
        return (first.f, xi < first.xi);
    }
    if xi >= last.xi {
        return (last.f * (xi / last.xi).powf(tail_slope), xi > last.xi);
    }
    let i = profile.partition_point(|s| s.xi <= xi).max(1) - 1;
    let (a, b) = (profile[i], profile[i + 1]);
    let h = b.xi - a.xi;
    let t = (xi - a.xi) / h;
    let (t2, t3) = (t * t, t * t * t);
    let f = (2.0 * t3 - 3.0 * t2 + 1.0) * a.f
        + (t3 - 2.0 * t2 + t) * h * a.df
        + (-2.0 * t3 + 3.0 * t2) * b.f
        + (t3 - t2) * h * b.df;
    (f, false)
}

pub fn emit_selfsimilar_snapshots(
    profile: &[ProfileSample],
    exps: &CriticalExponents,
    kind: SnapshotKind,
    times: &[f64],
    xs: &[f64],
) -> Result<Vec<SnapshotRow>> {
    if profile.len() < 2 {
        return Err(Error::InsufficientData("profile needs at least two samples".into()));
    }
    let tail_slope = fit_tail(profile, -1.0).map(|f| f.slope).unwrap_or_else(|_| {
        let (a, b) = (profile[profile.len() - 2], profile[profile.len() - 1]);
        (b.f / a.f).ln() / (b.xi / a.xi).ln()
    });
    let mut rows = Vec::with_capacity(times.len() * xs.len());
    for &t in times {
        let tau = match kind {
            SnapshotKind::Forward => {
                if !(t > 0.0) {
                    return Err(Error::InvalidArgument(format!("forward snapshots need t > 0, got {t}")));
                }
                t
            }
            SnapshotKind::Extinction { t_final } => {
                if !(t < t_final) {
                    return Err(Error::InvalidArgument(format!(
                        "extinction snapshots need t < T = {t_final}, got {t}"
                    )));
                }
                t_final - t
            }
        };
        let amp = tau.powf(exps.alpha);
        let scale = tau.powf(exps.beta);
        for &x in xs {
            let xi = x.abs() * scale;
            let (f, extrapolated) = profile_value(profile, tail_slope, xi);
            rows.push(SnapshotRow {
                t,
                x,
                xi,
                u: amp * f,
                extrapolated,
            });
        }
    }
    Ok(rows)
}
