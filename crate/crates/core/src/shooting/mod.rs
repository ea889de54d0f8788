//! Orbit classification on the unstable manifold of `P0`, bisection for
//! heteroclinic connections, and profile reconstruction.

mod connections;
mod profile;

pub use connections::*;
pub use profile::*;

use std::fmt;

use serde::Serialize;

use crate::critical_points::{position, seed, PointId, SeedBranch};
use crate::error::{Error, Result};
use crate::exponents::CriticalExponents;
use crate::integrator::{integrate_observed, IntegratorConfig, Termination, Trajectory, ESCAPED};
use crate::phase_systems::{field, ChartId, PhaseState, System, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum OrbitClass {
    /// Escape with `Y → −∞`.
    #[serde(rename = "TO_Q3")]
    ToQ3,
    /// Escape with `X → ∞`, `Y/X → ±(p−m)/(σ+2)`: the profile blows up at a
    /// finite `ξ`.
    #[serde(rename = "TO_Q5")]
    ToQ5,
    #[serde(rename = "TO_P1")]
    ToP1,
    #[serde(rename = "TO_P2")]
    ToP2,
    #[serde(rename = "TO_P3")]
    ToP3,
    /// Extinction orbit along which `Y` increases somewhere.
    #[serde(rename = "V_TURN")]
    VTurn,
    #[serde(rename = "UNRESOLVED")]
    Unresolved,
}

impl OrbitClass {
    pub fn name(self) -> &'static str {
        match self {
            OrbitClass::ToQ3 => "TO_Q3",
            OrbitClass::ToQ5 => "TO_Q5",
            OrbitClass::ToP1 => "TO_P1",
            OrbitClass::ToP2 => "TO_P2",
            OrbitClass::ToP3 => "TO_P3",
            OrbitClass::VTurn => "V_TURN",
            OrbitClass::Unresolved => "UNRESOLVED",
        }
    }
}

impl fmt::Display for OrbitClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Thresholds of the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifyOptions {
    /// Seed distance from `P0`.
    pub eps_seed: f64,
    /// Ball radius around `P2`/`P3`, relative to `1 + |point|`.
    pub r_ball: f64,
    /// Time an orbit must stay in the ball.
    pub stay: f64,
    pub delta_p1: f64,
    pub ydot_noise: f64,
    /// Re-classify with all thresholds halved and report `UNRESOLVED` when
    /// the two answers differ.
    pub stability_check: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            eps_seed: 1e-6,
            r_ball: 1e-2,
            stay: 20.0,
            delta_p1: 1e-3,
            ydot_noise: 1e-11,
            stability_check: true,
        }
    }
}

impl ClassifyOptions {
    pub fn halved(&self) -> Self {
        ClassifyOptions {
            eps_seed: self.eps_seed / 2.0,
            r_ball: self.r_ball / 2.0,
            stay: self.stay / 2.0,
            delta_p1: self.delta_p1 / 2.0,
            ydot_noise: self.ydot_noise / 2.0,
            stability_check: false,
        }
    }
}

/// How far an extinction orbit is followed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TurnMode {
    /// Stop at the first increase of `Y`.
    FirstTurn,
    /// Follow to the end and report `TO_P2`, then `TO_P1`, ahead of `V_TURN`.
    Full,
}

/// Everything learned from following one orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitReport {
    pub class: OrbitClass,
    /// Class of the orbit's end, ignoring a passage near `P1`.
    pub terminal: OrbitClass,
    pub min_dist_p1: f64,
    /// Independent variable at the closest approach to `P1`.
    pub eta_closest_p1: f64,
    /// `Y` increased somewhere along the orbit.
    pub turned: bool,
    /// After its closest approach to `P1` the orbit rises above
    /// `Y = −(N−2)/m`: it leaves `P1` on the side of increasing `Y`.
    pub leaves_p1_upward: bool,
    /// Largest value of the cylinder functional `Z − Z_cyl(Y)` along the orbit.
    pub max_cylinder: f64,
    pub trajectory: Trajectory,
}

/// `(X, Y, Z)` of a state on a main chart or on one of the invariant planes.
pub(crate) fn main_coords(state: &PhaseState) -> Option<Vec3> {
    let c = state.coords;
    match state.chart {
        ChartId::MainFwd | ChartId::MainExt => Some(c),
        ChartId::PlaneX0 => Some([0.0, c[0], c[1]]),
        ChartId::PlaneZ0Fwd | ChartId::PlaneZ0Ext => Some([c[0], c[1], 0.0]),
        _ => None,
    }
}

/// Absolute tolerance used for every orbit followed here. `X` and `Z` decay
/// exponentially near `P1`, `P2` and `Q3`, and only relative error control
/// keeps the reconstructed `ln f` accurate there.
pub const ORBIT_ABS_TOL: f64 = 1e-300;

pub(crate) fn orbit_config(config: &IntegratorConfig) -> IntegratorConfig {
    IntegratorConfig {
        abs_tol: config.abs_tol.min(ORBIT_ABS_TOL),
        ..*config
    }
}

fn dist(a: &Vec3, b: &Vec3) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
}

fn norm(a: &Vec3) -> f64 {
    dist(a, &[0.0; 3])
}

/// Ball around a critical point. It only counts arrivals: an orbit seeded
/// inside must leave it once before it can settle there.
struct Ball {
    center: Vec3,
    radius: f64,
    since: Option<f64>,
    armed: bool,
}

impl Ball {
    fn new(center: Vec3, rel: f64) -> Self {
        Ball {
            center,
            radius: rel * (1.0 + norm(&center)),
            since: None,
            armed: false,
        }
    }

    /// Updates the entry time; true once the orbit has stayed `stay` units.
    fn settled(&mut self, c: &Vec3, t: f64, stay: f64) -> bool {
        let inside = dist(c, &self.center) < self.radius;
        if !self.armed {
            self.armed = !inside;
            return false;
        }
        if inside {
            let t0 = *self.since.get_or_insert(t);
            (t - t0).abs() >= stay
        } else {
            self.since = None;
            false
        }
    }
}

/// Seed on the unstable manifold of `P0`: `C` (forward), `K` (extinction),
/// with `K = ∞` the orbit inside `{X = 0}`.
pub fn p0_seed(param: f64, exps: &CriticalExponents, system: System, eps: f64) -> Result<PhaseState> {
    if param.is_nan() || param < 0.0 {
        return Err(Error::InvalidArgument(format!("manifold parameter must be >= 0, got {param}")));
    }
    let (branch, param) = match system {
        System::Forward if param.is_infinite() => (SeedBranch::P0PlaneX0, 0.0),
        System::Forward => (SeedBranch::P0Unstable, param),
        System::Extinction if param.is_infinite() => (SeedBranch::P0PlaneX0, 0.0),
        System::Extinction => (SeedBranch::P0ExtUnstable, param),
    };
    Ok(seed(branch, system, param, eps, exps)?.state)
}

/// Follows the orbit from `state0` and classifies it.
pub fn follow(
    state0: &PhaseState,
    exps: &CriticalExponents,
    system: System,
    config: &IntegratorConfig,
    opts: &ClassifyOptions,
    mode: TurnMode,
) -> Result<OrbitReport> {
    exps.params.require_negative_l()?;
    let p2 = exps
        .p2_exists()
        .then(|| position(PointId::P2, exps, system).map(|(_, c)| c))
        .flatten();
    let p3 = (system == System::Extinction && exps.l < 0.0 && exps.m() < exps.m_c)
        .then(|| position(PointId::P3, exps, system).map(|(_, c)| c))
        .flatten();
    let p1 = [0.0, -(exps.n() - 2.0) / exps.m(), 0.0];
    let spiral_rule = p2.is_some() && exps.gap_s() > 1e-9;
    let mut ball2 = p2.map(|c| Ball::new(c, opts.r_ball));
    let mut ball3 = p3.map(|c| Ball::new(c, opts.r_ball));
    let spiral_radius = p2.map_or(0.0, |c| 0.25 * (1.0 + norm(&c)));

    let main_chart = ChartId::main(system);
    let mut min_p1 = f64::INFINITY;
    let mut eta_p1 = state0.indep;
    let mut turned = false;
    let mut max_cyl = f64::NEG_INFINITY;
    let mut prev_ydot: Option<f64> = None;
    let mut extrema: Vec<f64> = Vec::new();
    let mut settled: Option<OrbitClass> = None;
    let first_turn = mode == TurnMode::FirstTurn && system == System::Extinction;
    let cyl = exps.params.n >= 3;

    let mut observe = |s: &PhaseState| -> bool {
        let Some(c) = main_coords(s) else { return true };
        let d1 = dist(&c, &p1);
        if d1 < min_p1 {
            min_p1 = d1;
            eta_p1 = s.indep;
        }
        if cyl {
            max_cyl = max_cyl.max(crate::explicit_solutions::cylinder_functional(c[1], c[2], exps));
        }
        let ydot = field(main_chart, 0.0, &c, exps)[1];
        if ydot > opts.ydot_noise {
            turned = true;
            if first_turn {
                settled = Some(OrbitClass::VTurn);
                return false;
            }
        }
        if let Some(b) = ball2.as_mut() {
            if b.settled(&c, s.indep, opts.stay) {
                settled = Some(OrbitClass::ToP2);
                return false;
            }
        }
        if let Some(b) = ball3.as_mut() {
            if b.settled(&c, s.indep, opts.stay) {
                settled = Some(OrbitClass::ToP3);
                return false;
            }
        }
        if spiral_rule {
            if let Some(prev) = prev_ydot {
                if (prev < 0.0) != (ydot < 0.0) {
                    extrema.push(dist(&c, &p2.unwrap()));
                    let k = extrema.len();
                    if k >= 3
                        && extrema[k - 3] > extrema[k - 2]
                        && extrema[k - 2] > extrema[k - 1]
                        && extrema[k - 1] < spiral_radius
                    {
                        settled = Some(OrbitClass::ToP2);
                        return false;
                    }
                }
            }
        }
        prev_ydot = Some(ydot);
        true
    };
    let trajectory = integrate_observed(state0, exps, &orbit_config(config), &[], &mut observe)?;

    let end = trajectory.last();
    let terminal = match (&settled, &trajectory.termination) {
        (Some(c), _) => *c,
        (None, Termination::Event(e)) if e.name == ESCAPED => escape_class(&end, exps, system),
        _ => {
            let c = main_coords(&end).unwrap_or([f64::NAN; 3]);
            if dist(&c, &p1) < opts.delta_p1 {
                OrbitClass::ToP1
            } else {
                OrbitClass::Unresolved
            }
        }
    };
    let leaves_up = trajectory
        .states()
        .filter(|s| s.indep > eta_p1)
        .filter_map(|s| main_coords(&s))
        .any(|c| c[1] > p1[1]);
    let near_p1 = min_p1 < opts.delta_p1;
    let class = match system {
        System::Forward => {
            if near_p1 {
                OrbitClass::ToP1
            } else {
                terminal
            }
        }
        System::Extinction => {
            if terminal == OrbitClass::ToP2 {
                OrbitClass::ToP2
            } else if near_p1 {
                OrbitClass::ToP1
            } else if turned {
                OrbitClass::VTurn
            } else {
                terminal
            }
        }
    };
    Ok(OrbitReport {
        class,
        terminal,
        min_dist_p1: min_p1,
        eta_closest_p1: eta_p1,
        turned,
        leaves_p1_upward: leaves_up,
        max_cylinder: max_cyl,
        trajectory,
    })
}

fn escape_class(end: &PhaseState, exps: &CriticalExponents, system: System) -> OrbitClass {
    let Some([x, y, _]) = main_coords(end) else {
        return OrbitClass::Unresolved;
    };
    let target = system.sign() * exps.b();
    if x > 0.0 && (y / x - target).abs() < 0.05 * exps.b() {
        OrbitClass::ToQ5
    } else if y < 0.0 {
        OrbitClass::ToQ3
    } else {
        OrbitClass::ToQ5
    }
}

fn follow_p0(
    param: f64,
    exps: &CriticalExponents,
    system: System,
    config: &IntegratorConfig,
    opts: &ClassifyOptions,
    mode: TurnMode,
) -> Result<OrbitReport> {
    let s0 = p0_seed(param, exps, system, opts.eps_seed)?;
    follow(&s0, exps, system, config, opts, mode)
}

/// Forward orbit with manifold parameter `C`, single run.
pub fn follow_forward(
    c: f64,
    exps: &CriticalExponents,
    config: &IntegratorConfig,
    opts: &ClassifyOptions,
) -> Result<OrbitReport> {
    follow_p0(c, exps, System::Forward, config, opts, TurnMode::Full)
}

/// Extinction orbit with manifold parameter `K`, single run.
pub fn follow_extinction(
    k: f64,
    exps: &CriticalExponents,
    config: &IntegratorConfig,
    opts: &ClassifyOptions,
    mode: TurnMode,
) -> Result<OrbitReport> {
    follow_p0(k, exps, System::Extinction, config, opts, mode)
}

fn stable_class(
    run: impl Fn(&ClassifyOptions) -> Result<OrbitClass>,
    opts: &ClassifyOptions,
) -> Result<OrbitClass> {
    let a = run(opts)?;
    if !opts.stability_check {
        return Ok(a);
    }
    let b = run(&opts.halved())?;
    Ok(if a == b { a } else { OrbitClass::Unresolved })
}

/// Class of the forward orbit leaving `P0` with parameter `C`.
pub fn classify_forward(
    c: f64,
    exps: &CriticalExponents,
    config: &IntegratorConfig,
    opts: &ClassifyOptions,
) -> Result<OrbitClass> {
    stable_class(|o| Ok(follow_forward(c, exps, config, o)?.class), opts)
}

/// Class of the extinction orbit leaving `P0` with parameter `K`
/// (`K = ∞` for the orbit inside `{X = 0}`).
pub fn classify_extinction(
    k: f64,
    exps: &CriticalExponents,
    config: &IntegratorConfig,
    opts: &ClassifyOptions,
) -> Result<OrbitClass> {
    stable_class(
        |o| Ok(follow_extinction(k, exps, config, o, TurnMode::Full)?.class),
        opts,
    )
}
