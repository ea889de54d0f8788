use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::profile::{fit_head_log, fit_tail_log, reconstruct_log_profile, reconstruct_profile, TailFit};
use super::{
    classify_extinction, classify_forward, dist, follow, follow_extinction, follow_forward, main_coords, norm,
    orbit_config, p0_seed, ClassifyOptions, OrbitClass, OrbitReport, TurnMode,
};
use crate::critical_points::{position, seed, PointId, SeedBranch};
use crate::error::{Error, Result};
use crate::exponents::{CriticalExponents, ParameterSet};
use crate::integrator::{integrate, EventDirection, EventSpec, IntegratorConfig};
use crate::phase_systems::{ProfileSample, System};

/// Knobs of the bracket search and bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootOptions {
    pub classify: ClassifyOptions,
    /// Stop bisecting once `(hi − lo)/hi` is below this.
    pub bracket_tol: f64,
    /// Decade range `[10^lo, 10^hi]` of the parameter scan.
    pub scan_decades: (i32, i32),
    pub scan_per_decade: u32,
    /// The profile tail is cut where the orbit leaves this ball around `P1`
    /// (relative to `1 + |P1|`) after its closest approach, or where it
    /// enters this ball around `P2`.
    pub tail_ball: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions {
            classify: ClassifyOptions::default(),
            bracket_tol: 1e-13,
            scan_decades: (-8, 12),
            scan_per_decade: 2,
            tail_ball: 1e-5,
        }
    }
}

impl ShootOptions {
    /// Scan grid in decreasing order.
    pub fn scan_grid(&self) -> Vec<f64> {
        let (lo, hi) = self.scan_decades;
        let n = ((hi - lo) as u32 * self.scan_per_decade) as i32;
        (0..=n)
            .map(|i| 10f64.powf(hi as f64 - i as f64 / self.scan_per_decade as f64))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionKind {
    /// `P0 → P1`, profile tail `ξ^{−(N−2)/m}`.
    Fast,
    /// `P0 → P2`, profile tail `ξ^{−(σ+2)/(p−m)}`.
    Slow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionResult {
    pub system: System,
    pub kind: ConnectionKind,
    pub param_name: &'static str,
    pub param_value: f64,
    /// Final bracket, when the connection was found by bisection.
    pub bracket: Option<[f64; 2]>,
    /// Classes at the bracket ends, `[lo, hi]`.
    pub classes: Option<[OrbitClass; 2]>,
    pub bisection_steps: usize,
    pub report: OrbitReport,
    /// Index of the last orbit sample used for the profile.
    pub profile_end: usize,
    pub profile: Vec<ProfileSample>,
    pub tail: TailFit,
}

impl ConnectionResult {
    pub fn min_dist_p1(&self) -> f64 {
        self.report.min_dist_p1
    }

    pub fn relative_width(&self) -> Option<f64> {
        self.bracket.map(|[lo, hi]| (hi - lo) / hi)
    }

    pub fn to_json(&self, orbit_csv_path: &str, profile_csv_path: &str) -> serde_json::Value {
        json!({
            "system": self.system.name(),
            "kind": self.kind,
            "param_name": self.param_name,
            "param_value": self.param_value,
            "bracket": self.bracket,
            "classes": self.classes.map(|c| [c[0].name(), c[1].name()]),
            "min_dist_p1": self.report.min_dist_p1,
            "class": self.report.class.name(),
            "tail": {
                "slope": self.tail.slope,
                "target": self.tail.target,
                "rel_dev": self.tail.rel_dev,
                "terminal_y": self.tail.terminal_y,
                "window": self.tail.window,
            },
            "orbit_csv_path": orbit_csv_path,
            "profile_csv_path": profile_csv_path,
        })
    }
}

fn regime(msg: String) -> Error {
    Error::Regime(msg)
}

fn require_forward_regime(exps: &CriticalExponents) -> Result<()> {
    exps.require_dimension_3("forward connections")?;
    exps.params.require_negative_l()?;
    let (m, p) = (exps.m(), exps.p());
    if m >= exps.m_s {
        return Err(regime(format!("no forward profiles for m = {m} >= m_s = {}", exps.m_s)));
    }
    let p_s = exps.p_s.as_f64();
    if p <= p_s.max(1.0) {
        return Err(regime(format!("no forward profiles for p = {p} <= max(1, p_s) = {}", p_s.max(1.0))));
    }
    Ok(())
}

fn require_extinction_fast_regime(exps: &CriticalExponents) -> Result<()> {
    exps.require_dimension_3("extinction connections")?;
    exps.params.require_negative_l()?;
    let (m, n, sigma, p) = (exps.m(), exps.n(), exps.sigma(), exps.p());
    let m_lo = (n - 2.0) / (n + 2.0 + 2.0 * sigma);
    if !(m > m_lo && m < exps.m_s) {
        return Err(regime(format!(
            "fast extinction profiles need m in ({m_lo}, {}), got {m}",
            exps.m_s
        )));
    }
    let lo = exps.p_c.as_f64().max(1.0);
    let hi = exps.p_s.as_f64();
    if !(p > lo && p < hi) {
        return Err(regime(format!("fast extinction profiles need p in ({lo}, {hi}), got {p}")));
    }
    Ok(())
}

fn require_slow_regime(exps: &CriticalExponents, system: System) -> Result<()> {
    match system {
        System::Forward => require_forward_regime(exps),
        System::Extinction => {
            exps.require_dimension_3("extinction connections")?;
            exps.params.require_negative_l()?;
            let (m, p) = (exps.m(), exps.p());
            if m >= exps.m_s {
                return Err(regime(format!("no slow extinction profiles for m = {m} >= m_s = {}", exps.m_s)));
            }
            let lo = exps.p_s.as_f64().max(1.0);
            if p <= lo {
                return Err(regime(format!("slow extinction profiles need p > max(1, p_s) = {lo}, got {p}")));
            }
            Ok(())
        }
    }
}

/// Geometric bisection of `[lo, hi]` keeping `side(lo) = false` and
/// `side(hi) = true`. Returns the final bracket and the step count.
pub fn bisect_geometric(
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    side: impl Fn(f64) -> Result<bool>,
) -> Result<([f64; 2], usize)> {
    let mut steps = 0;
    while (hi - lo).abs() > tol * lo.abs().max(hi.abs()) {
        let mid = (lo * hi).sqrt();
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        if side(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
    }
    Ok(([lo, hi], steps))
}

fn check_bracket(bracket: [f64; 2]) -> Result<()> {
    let [a, b] = bracket;
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument(format!("bracket ends must be positive, got [{a}, {b}]")));
    }
    if a == b {
        return Err(Error::InvalidArgument(format!("degenerate bracket [{a}, {b}]")));
    }
    Ok(())
}

/// Index of the sample where the orbit leaves the ball of radius `r` around
/// `p1` after its closest approach.
fn exit_after_closest(report: &OrbitReport, p1: &[f64; 3], r: f64) -> usize {
    let samples = &report.trajectory.samples;
    let start = samples
        .iter()
        .position(|(t, _)| *t >= report.eta_closest_p1)
        .unwrap_or(samples.len() - 1);
    let mut end = start;
    for (i, (t, c)) in samples.iter().enumerate().skip(start) {
        let s = crate::phase_systems::PhaseState::new(report.trajectory.chart, &c[..report.trajectory.chart.dim()], *t);
        match main_coords(&s) {
            Some(mc) if dist(&mc, p1) < r => end = i,
            _ => break,
        }
    }
    end
}

fn p1_coords(exps: &CriticalExponents) -> [f64; 3] {
    [0.0, -(exps.n() - 2.0) / exps.m(), 0.0]
}

fn fast_result(
    system: System,
    param_name: &'static str,
    bracket: [f64; 2],
    classes: [OrbitClass; 2],
    steps: usize,
    report: OrbitReport,
    exps: &CriticalExponents,
    opts: &ShootOptions,
) -> Result<ConnectionResult> {
    let p1 = p1_coords(exps);
    let end = exit_after_closest(&report, &p1, opts.tail_ball * (1.0 + norm(&p1)));
    let profile = reconstruct_profile(&report.trajectory, exps, Some(end))?;
    let tail = fit_tail_log(&reconstruct_log_profile(&report.trajectory, exps, Some(end))?, exps.fast_slope())?;
    Ok(ConnectionResult {
        system,
        kind: ConnectionKind::Fast,
        param_name,
        param_value: (bracket[0] * bracket[1]).sqrt(),
        bracket: Some(bracket),
        classes: Some(classes),
        bisection_steps: steps,
        report,
        profile_end: end,
        profile,
        tail,
    })
}

/// Scan over the decade grid; returns the first adjacent pair (in scan
/// order) whose ends satisfy `a` and `b` respectively.
fn scan_pair<T: Send>(
    grid: &[f64],
    eval: impl Fn(f64) -> Result<T> + Sync,
    a: impl Fn(&T) -> bool,
    b: impl Fn(&T) -> bool,
) -> Result<Option<(usize, Vec<T>)>> {
    let results: Vec<T> = grid.par_iter().map(|&x| eval(x)).collect::<Result<_>>()?;
    let hit = (0..results.len().saturating_sub(1)).find(|&i| a(&results[i]) && b(&results[i + 1]));
    Ok(hit.map(|i| (i, results)))
}

/// `P0 → P1` connection of the forward system, by bisection in `C` between
/// orbits escaping to `Q3` and orbits settling on `P2`.
pub fn find_forward_fast_connection(
    exps: &CriticalExponents,
    config: &IntegratorConfig,
    opts: &ShootOptions,
    bracket0: Option<[f64; 2]>,
) -> Result<ConnectionResult> {
    require_forward_regime(exps)?;
    let c_opts = opts.classify;
    let terminal = |c: f64| -> Result<OrbitClass> { Ok(follow_forward(c, exps, config, &c_opts)?.terminal) };
    let (lo, hi) = match bracket0 {
        Some(b) => {
            check_bracket(b)?;
            (b[0].min(b[1]), b[0].max(b[1]))
        }
        None => {
            let mut grid = opts.scan_grid();
            grid.reverse();
            let is_q3 = |c: &OrbitClass| *c == OrbitClass::ToQ3;
            let is_p2 = |c: &OrbitClass| *c == OrbitClass::ToP2;
            match scan_pair(&grid, terminal, is_q3, is_p2)? {
                Some((i, _)) => (grid[i], grid[i + 1]),
                None => match scan_pair(&grid, terminal, is_p2, is_q3)? {
                    Some((i, _)) => (grid[i], grid[i + 1]),
                    None => {
                        return Err(Error::NoBracket(format!(
                            "no TO_Q3/TO_P2 pair over C in [{:e}, {:e}]",
                            grid[0],
                            grid[grid.len() - 1]
                        )))
                    }
                },
            }
        }
    };
    let (class_lo, class_hi) = (terminal(lo)?, terminal(hi)?);
    let pair = [class_lo, class_hi];
    let p2_at_hi = match pair {
        [OrbitClass::ToQ3, OrbitClass::ToP2] => true,
        [OrbitClass::ToP2, OrbitClass::ToQ3] => false,
        _ => {
            return Err(Error::NoBracket(format!(
                "bracket [{lo:e}, {hi:e}] classifies as {class_lo}/{class_hi}"
            )))
        }
    };
    let (bracket, steps) = bisect_geometric(lo, hi, opts.bracket_tol, |c| {
        Ok((terminal(c)? == OrbitClass::ToP2) == p2_at_hi)
    })?;
    let q3_end = if p2_at_hi { bracket[0] } else { bracket[1] };
    let report = follow_forward(q3_end, exps, config, &c_opts)?;
    fast_result(System::Forward, "C", bracket, pair, steps, report, exps, opts)
}

/// Whether an extinction orbit belongs to the set of orbits escaping to `Q3`
/// with `Y` decreasing all along.
fn in_u(r: &OrbitReport) -> bool {
    !r.turned && r.terminal == OrbitClass::ToQ3
}

/// Brackets from the extinction scan over `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtinctionBracket {
    /// Neighbouring scan values, `[V, U]`: the orbit of the smaller one turns
    /// (`Ẏ > 0` somewhere), the larger one escapes to `Q3` with `Y`
    /// decreasing.
    pub uv: [f64; 2],
    /// Neighbouring scan values at or below the `U/V` pair around the
    /// connection: after its closest approach to `P1` the smaller orbit
    /// rises above `Y = −(N−2)/m`, the larger one does not.
    pub p1: [f64; 2],
}

#[derive(Debug, Clone, Copy)]
struct ExtFlags {
    in_u: bool,
    turned: bool,
    upward: bool,
}

/// Scan for the extinction fast connection, from large `K` downward.
pub fn extinction_fast_bracket(
    exps: &CriticalExponents,
    config: &IntegratorConfig,
    opts: &ShootOptions,
) -> Result<Option<ExtinctionBracket>> {
    let grid = opts.scan_grid();
    let flags: Vec<ExtFlags> = grid
        .par_iter()
        .map(|&k| {
            let r = follow_extinction(k, exps, config, &opts.classify, TurnMode::Full)?;
            Ok(ExtFlags { in_u: in_u(&r), turned: r.turned, upward: r.leaves_p1_upward })
        })
        .collect::<Result<_>>()?;
    let Some(i) = (0..grid.len().saturating_sub(1)).find(|&i| flags[i].in_u && flags[i + 1].turned) else {
        return Ok(None);
    };
    let Some(j) = (i + 1..grid.len()).find(|&j| flags[j].upward) else {
        return Ok(None);
    };
    Ok(Some(ExtinctionBracket {
        uv: [grid[i + 1], grid[i]],
        p1: [grid[j], grid[j - 1]],
    }))
}

/// `P0 → P1` connection of the extinction system.
///
/// The scan first locates the `U/V` transition (monotone escape to `Q3`
/// against orbits on which `Y` turns), then bisects in `K` on the side from
/// which the orbit leaves `P1`: after the closest approach, orbits below the
/// connection rise above `Y = −(N−2)/m`, orbits above it escape to `Q3`
/// from below that level.
pub fn find_extinction_fast_connection(
    exps: &CriticalExponents,
    config: &IntegratorConfig,
    opts: &ShootOptions,
    bracket0: Option<[f64; 2]>,
) -> Result<ConnectionResult> {
    require_extinction_fast_regime(exps)?;
    let c_opts = opts.classify;
    let run = |k: f64| follow_extinction(k, exps, config, &c_opts, TurnMode::Full);
    let [lo, hi] = match bracket0 {
        Some(b) => {
            check_bracket(b)?;
            [b[0].min(b[1]), b[0].max(b[1])]
        }
        None => {
            extinction_fast_bracket(exps, config, opts)?
                .ok_or_else(|| Error::NoBracket(format!("no U/V bracket in K at p = {}", exps.p())))?
                .p1
        }
    };
    let (r_lo, r_hi) = (run(lo)?, run(hi)?);
    if !(r_lo.leaves_p1_upward && !r_hi.leaves_p1_upward) {
        return Err(Error::NoBracket(format!(
            "bracket [{lo:e}, {hi:e}] does not separate orbits leaving P1 upward and downward"
        )));
    }
    let classes = [r_lo.class, r_hi.class];
    let (bracket, steps) = bisect_geometric(lo, hi, opts.bracket_tol, |k| Ok(!run(k)?.leaves_p1_upward))?;
    let report = run(bracket[1])?;
    fast_result(System::Extinction, "K", bracket, classes, steps, report, exps, opts)
}

/// Span allowed for an orbit to settle on `P2` before the tail is read.
pub const SETTLE_SPAN: f64 = 5000.0;

fn slow_connection(
    exps: &CriticalExponents,
    system: System,
    config: &IntegratorConfig,
    opts: &ShootOptions,
) -> Result<ConnectionResult> {
    require_slow_regime(exps, system)?;
    let c_opts = opts.classify;
    let class = |x: f64| -> Result<OrbitClass> {
        let r = match system {
            System::Forward => follow_forward(x, exps, config, &c_opts)?,
            System::Extinction => follow_extinction(x, exps, config, &c_opts, TurnMode::Full)?,
        };
        Ok(r.class)
    };
    let grid = opts.scan_grid();
    let classes: Vec<OrbitClass> = grid.par_iter().map(|&x| class(x)).collect::<Result<_>>()?;
    let i = classes.iter().position(|c| *c == OrbitClass::ToP2).ok_or_else(|| {
        Error::NoBracket(format!("no orbit from P0 settles on P2 at p = {}", exps.p()))
    })?;
    let param = grid[i];
    let (bracket, pair) = if i > 0 {
        (Some([param, grid[i - 1]]), Some([OrbitClass::ToP2, classes[i - 1]]))
    } else {
        (None, None)
    };

    let (_, p2) = position(PointId::P2, exps, system).expect("P2 exists above p_c");
    let radius = opts.tail_ball * (1.0 + norm(&p2));
    let s0 = p0_seed(param, exps, system, c_opts.eps_seed)?;
    let near = EventSpec::new("near_p2", EventDirection::Falling, true, move |s| {
        main_coords(s).map_or(1.0, |c| dist(&c, &p2) - radius)
    });
    let cfg = config.with_span(SETTLE_SPAN);
    let trajectory = integrate(&s0, exps, &orbit_config(&cfg), &[near])?;
    if trajectory.terminal_event().map(|e| e.name.as_str()) != Some("near_p2") {
        return Err(Error::NoBracket(format!(
            "orbit with parameter {param:e} did not come within {radius:e} of P2 in {SETTLE_SPAN} units"
        )));
    }
    let end = trajectory.samples.len() - 1;
    let profile = reconstruct_profile(&trajectory, exps, None)?;
    let tail = fit_tail_log(&reconstruct_log_profile(&trajectory, exps, None)?, exps.slow_slope())?;
    let min_p1 = trajectory
        .states()
        .filter_map(|s| main_coords(&s))
        .map(|c| dist(&c, &p1_coords(exps)))
        .fold(f64::INFINITY, f64::min);
    let report = OrbitReport {
        class: OrbitClass::ToP2,
        terminal: OrbitClass::ToP2,
        min_dist_p1: min_p1,
        eta_closest_p1: f64::NAN,
        turned: false,
        leaves_p1_upward: false,
        max_cylinder: f64::NAN,
        trajectory,
    };
    Ok(ConnectionResult {
        system,
        kind: ConnectionKind::Slow,
        param_name: if system == System::Forward { "C" } else { "K" },
        param_value: param,
        bracket,
        classes: pair,
        bisection_steps: 0,
        report,
        profile_end: end,
        profile,
        tail,
    })
}

/// `P0 → P2` connection of the forward system: the first `C` of the
/// decreasing scan whose orbit settles on `P2`.
pub fn find_forward_slow_connection(
    exps: &CriticalExponents,
    config: &IntegratorConfig,
    opts: &ShootOptions,
) -> Result<ConnectionResult> {
    slow_connection(exps, System::Forward, config, opts)
}

/// `P0 → P2` connection of the extinction system: the first `K` of the
/// decreasing scan whose orbit settles on `P2`.
pub fn find_extinction_slow_connection(
    exps: &CriticalExponents,
    config: &IntegratorConfig,
    opts: &ShootOptions,
) -> Result<ConnectionResult> {
    slow_connection(exps, System::Extinction, config, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct P3Orbit {
    pub report: OrbitReport,
    pub profile: Vec<ProfileSample>,
    /// Power-law fit over the first two decades, target `−2/(1−m)`.
    pub head: TailFit,
}

/// Seed distance from `P3` used by [`shoot_p3_orbit`]: small enough that the
/// orbit stays near `P3` for more than two decades of `ξ`.
pub const P3_EPS: f64 = 1e-12;

/// The orbit leaving `P3` into `{Z > 0}` (extinction system), classified and
/// reconstructed as a profile with a vertical asymptote at the origin.
pub fn shoot_p3_orbit(
    exps: &CriticalExponents,
    config: &IntegratorConfig,
    opts: &ClassifyOptions,
) -> Result<P3Orbit> {
    exps.require_dimension_3("the P3 orbit")?;
    exps.params.require_negative_l()?;
    if exps.m() >= exps.m_c {
        return Err(regime(format!("P3 needs m < m_c = {}, got {}", exps.m_c, exps.m())));
    }
    let s = seed(SeedBranch::P3Unstable, System::Extinction, 0.0, P3_EPS, exps)?;
    let report = follow(&s.state, exps, System::Extinction, config, opts, TurnMode::Full)?;
    let profile = reconstruct_profile(&report.trajectory, exps, None)?;
    let head = fit_head_log(&reconstruct_log_profile(&report.trajectory, exps, None)?, -2.0 / (1.0 - exps.m()))?;
    Ok(P3Orbit { report, profile, head })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct P0Estimate {
    /// Interval containing the smallest `p` with a fast extinction
    /// connection; `None` when no grid point has one.
    pub interval: Option<[f64; 2]>,
    /// Grid points and whether a connection was found at each.
    pub grid: Vec<(f64, bool)>,
    /// Successive intervals of the refinement, widest first.
    pub refinements: Vec<[f64; 2]>,
}

/// Minimum `K` scan density of [`estimate_p0`]. Near `p0` the band of `K`
/// with turning orbits is narrower than a half-decade.
pub const P0_SCAN_PER_DECADE: u32 = 8;

/// Estimates `p0`, the lower end of the range of `p` with fast extinction
/// profiles: the smallest grid `p` in `(max(p_c, 1), p_s)` where the fast
/// connection is found, refined by bisection on `p`.
pub fn estimate_p0(
    params: &ParameterSet,
    config: &IntegratorConfig,
    opts: &ShootOptions,
    grid_points: usize,
    refinements: usize,
) -> Result<P0Estimate> {
    let base = params.exponents();
    base.require_dimension_3("p0 estimate")?;
    let (m, n, sigma) = (base.m(), base.n(), base.sigma());
    let m_lo = (n - 2.0) / (n + 2.0 + 2.0 * sigma);
    if !(m > m_lo && m < base.m_s) {
        return Err(regime(format!("p0 is defined for m in ({m_lo}, {}), got {m}", base.m_s)));
    }
    if grid_points == 0 {
        return Err(Error::InvalidArgument("p grid needs at least one point".into()));
    }
    let lo = base.p_c.as_f64().max(1.0);
    let hi = base.p_s.as_f64();
    let opts = &ShootOptions {
        scan_per_decade: opts.scan_per_decade.max(P0_SCAN_PER_DECADE),
        ..*opts
    };
    let brackets = |p: f64| -> Result<bool> {
        let e = params.with_p(p)?.exponents();
        match find_extinction_fast_connection(&e, config, opts, None) {
            Ok(r) => Ok(r.min_dist_p1() < opts.classify.delta_p1),
            Err(Error::NoBracket(_)) => Ok(false),
            Err(e) => Err(e),
        }
    };
    let ps: Vec<f64> = (1..=grid_points)
        .map(|i| lo + (hi - lo) * i as f64 / (grid_points + 1) as f64)
        .collect();
    let flags: Vec<bool> = ps.par_iter().map(|&p| brackets(p)).collect::<Result<_>>()?;
    let grid: Vec<(f64, bool)> = ps.iter().copied().zip(flags.iter().copied()).collect();
    let Some(k) = flags.iter().position(|&b| b) else {
        return Ok(P0Estimate { interval: None, grid, refinements: Vec::new() });
    };
    let mut a = if k == 0 { lo } else { ps[k - 1] };
    let mut b = ps[k];
    let mut history = vec![[a, b]];
    for _ in 0..refinements {
        let mid = 0.5 * (a + b);
        if brackets(mid)? {
            b = mid;
        } else {
            a = mid;
        }
        history.push([a, b]);
    }
    Ok(P0Estimate { interval: Some([a, b]), grid, refinements: history })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub param: f64,
    pub class: OrbitClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transition {
    pub lo: f64,
    pub hi: f64,
    pub from: OrbitClass,
    pub to: OrbitClass,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub system: System,
    pub points: Vec<SweepPoint>,
    /// Every change of class between neighbouring parameters, in increasing
    /// order; each one may hide a connection.
    pub transitions: Vec<Transition>,
}

/// Classifies the orbits from `P0` over a parameter grid (`C` forward, `K`
/// extinction) and records every change of class.
pub fn sweep(
    exps: &CriticalExponents,
    system: System,
    params: &[f64],
    config: &IntegratorConfig,
    opts: &ClassifyOptions,
) -> Result<Sweep> {
    let mut params = params.to_vec();
    params.sort_by(|a, b| a.total_cmp(b));
    let classes: Vec<OrbitClass> = params
        .par_iter()
        .map(|&x| match system {
            System::Forward => classify_forward(x, exps, config, opts),
            System::Extinction => classify_extinction(x, exps, config, opts),
        })
        .collect::<Result<_>>()?;
    let points: Vec<SweepPoint> = params
        .iter()
        .zip(&classes)
        .map(|(&param, &class)| SweepPoint { param, class })
        .collect();
    let transitions = points
        .windows(2)
        .filter(|w| w[0].class != w[1].class)
        .map(|w| Transition { lo: w[0].param, hi: w[1].param, from: w[0].class, to: w[1].class })
        .collect();
    Ok(Sweep { system, points, transitions })
}

/// `n` logarithmically spaced values spanning `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![(lo * hi).sqrt()];
    }
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}
