//! Vector fields of every chart: the profile equations in `ξ`, the main
//! phase-space systems in `η = ln ξ`, the charts at infinity, the invariant
//! planes and the Sobolev reduction. Every field has a hand-derived Jacobian
//! and a central-difference counterpart for cross-checking.
//!
//! Two-dimensional charts store their state in the first two slots of a
//! [`Vec3`]; the third slot is ignored and its derivative is zero.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exponents::CriticalExponents;

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

/// Below this magnitude a negative coordinate on an invariant plane is
/// treated as round-off and clamped to zero.
pub const CLAMP_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    Forward,
    Extinction,
}

impl System {
    /// `+1` for the forward system, `−1` for the extinction system.
    pub fn sign(self) -> f64 {
        match self {
            System::Forward => 1.0,
            System::Extinction => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            System::Forward => "forward",
            System::Extinction => "extinction",
        }
    }
}

impl FromStr for System {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" | "fwd" => Ok(System::Forward),
            "extinction" | "ext" => Ok(System::Extinction),
            _ => Err(Error::InvalidArgument(format!("unknown system '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChartId {
    /// `(f, f')` in `ξ`, forward profile equation.
    ProfileFwd,
    /// `(f, f')` in `ξ`, extinction profile equation.
    ProfileExt,
    /// `(X, Y, Z)` in `η`.
    MainFwd,
    MainExt,
    /// `(x, y, z) = (1/X, Y/X, Z/X)` in `η₁`, `dη₁/dη = X`.
    InfxFwd,
    InfxExt,
    /// `(x, z, w) = (X/Y, Z/Y, 1/Y)` in `τ`, `dτ/dη = −Y`.
    InfyFwd,
    InfyExt,
    /// `(x, y, w)` with `w = xz`, in `η₁`.
    WFwd,
    WExt,
    /// `(Y, Z)` on the invariant plane `X = 0`, shared by both systems.
    PlaneX0,
    /// `(T, Z)` with `T = σ+2+(p−m)Y` on the plane `X = 0`.
    PlaneX0T,
    /// `(X, Y)` on the invariant plane `Z = 0`.
    PlaneZ0Fwd,
    PlaneZ0Ext,
    /// `(v, v_s)` in `s = ln r`, the stationary equation at `p = p_s`.
    SobolevV,
}

impl ChartId {
    pub const ALL: [ChartId; 15] = [
        ChartId::ProfileFwd,
        ChartId::ProfileExt,
        ChartId::MainFwd,
        ChartId::MainExt,
        ChartId::InfxFwd,
        ChartId::InfxExt,
        ChartId::InfyFwd,
        ChartId::InfyExt,
        ChartId::WFwd,
        ChartId::WExt,
        ChartId::PlaneX0,
        ChartId::PlaneX0T,
        ChartId::PlaneZ0Fwd,
        ChartId::PlaneZ0Ext,
        ChartId::SobolevV,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChartId::ProfileFwd => "PROFILE_FWD",
            ChartId::ProfileExt => "PROFILE_EXT",
            ChartId::MainFwd => "MAIN_FWD",
            ChartId::MainExt => "MAIN_EXT",
            ChartId::InfxFwd => "INFX_FWD",
            ChartId::InfxExt => "INFX_EXT",
            ChartId::InfyFwd => "INFY_FWD",
            ChartId::InfyExt => "INFY_EXT",
            ChartId::WFwd => "W_FWD",
            ChartId::WExt => "W_EXT",
            ChartId::PlaneX0 => "PLANE_X0",
            ChartId::PlaneX0T => "PLANE_X0_T",
            ChartId::PlaneZ0Fwd => "PLANE_Z0_FWD",
            ChartId::PlaneZ0Ext => "PLANE_Z0_EXT",
            ChartId::SobolevV => "SOBOLEV_V",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            ChartId::ProfileFwd
            | ChartId::ProfileExt
            | ChartId::PlaneX0
            | ChartId::PlaneX0T
            | ChartId::PlaneZ0Fwd
            | ChartId::PlaneZ0Ext
            | ChartId::SobolevV => 2,
            _ => 3,
        }
    }

    pub fn indep_name(self) -> &'static str {
        match self {
            ChartId::ProfileFwd | ChartId::ProfileExt => "xi",
            ChartId::InfxFwd | ChartId::InfxExt | ChartId::WFwd | ChartId::WExt => "eta1",
            ChartId::InfyFwd | ChartId::InfyExt => "tau",
            ChartId::SobolevV => "s",
            _ => "eta",
        }
    }

    pub fn coord_names(self) -> &'static [&'static str] {
        match self {
            ChartId::ProfileFwd | ChartId::ProfileExt => &["f", "df"],
            ChartId::MainFwd | ChartId::MainExt => &["X", "Y", "Z"],
            ChartId::InfxFwd | ChartId::InfxExt => &["x", "y", "z"],
            ChartId::InfyFwd | ChartId::InfyExt => &["x", "z", "w"],
            ChartId::WFwd | ChartId::WExt => &["x", "y", "w"],
            ChartId::PlaneX0 => &["Y", "Z"],
            ChartId::PlaneX0T => &["T", "Z"],
            ChartId::PlaneZ0Fwd | ChartId::PlaneZ0Ext => &["X", "Y"],
            ChartId::SobolevV => &["v", "v_s"],
        }
    }

    /// The system the chart belongs to; `None` for the shared plane charts
    /// and the Sobolev chart.
    pub fn system(self) -> Option<System> {
        match self {
            ChartId::ProfileFwd
            | ChartId::MainFwd
            | ChartId::InfxFwd
            | ChartId::InfyFwd
            | ChartId::WFwd
            | ChartId::PlaneZ0Fwd => Some(System::Forward),
            ChartId::ProfileExt
            | ChartId::MainExt
            | ChartId::InfxExt
            | ChartId::InfyExt
            | ChartId::WExt
            | ChartId::PlaneZ0Ext => Some(System::Extinction),
            ChartId::PlaneX0 | ChartId::PlaneX0T | ChartId::SobolevV => None,
        }
    }

    pub fn main(system: System) -> ChartId {
        match system {
            System::Forward => ChartId::MainFwd,
            System::Extinction => ChartId::MainExt,
        }
    }

    pub fn profile(system: System) -> ChartId {
        match system {
            System::Forward => ChartId::ProfileFwd,
            System::Extinction => ChartId::ProfileExt,
        }
    }

    pub fn infx(system: System) -> ChartId {
        match system {
            System::Forward => ChartId::InfxFwd,
            System::Extinction => ChartId::InfxExt,
        }
    }

    pub fn infy(system: System) -> ChartId {
        match system {
            System::Forward => ChartId::InfyFwd,
            System::Extinction => ChartId::InfyExt,
        }
    }

    pub fn w(system: System) -> ChartId {
        match system {
            System::Forward => ChartId::WFwd,
            System::Extinction => ChartId::WExt,
        }
    }

    pub fn plane_z0(system: System) -> ChartId {
        match system {
            System::Forward => ChartId::PlaneZ0Fwd,
            System::Extinction => ChartId::PlaneZ0Ext,
        }
    }

    /// Coordinates that must stay nonnegative (the invariant planes).
    pub fn nonnegative_slots(self) -> &'static [usize] {
        match self {
            ChartId::MainFwd | ChartId::MainExt => &[0, 2],
            ChartId::InfxFwd | ChartId::InfxExt => &[0, 2],
            ChartId::WFwd | ChartId::WExt => &[0, 2],
            ChartId::PlaneX0 | ChartId::PlaneX0T => &[1],
            ChartId::PlaneZ0Fwd | ChartId::PlaneZ0Ext => &[0],
            ChartId::SobolevV => &[0],
            ChartId::ProfileFwd | ChartId::ProfileExt => &[],
            ChartId::InfyFwd | ChartId::InfyExt => &[],
        }
    }

    pub fn is_admissible(self, coords: &Vec3) -> bool {
        let dim = self.dim();
        if coords[..dim].iter().any(|v| !v.is_finite()) {
            return false;
        }
        if matches!(self, ChartId::ProfileFwd | ChartId::ProfileExt) && coords[0] <= 0.0 {
            return false;
        }
        self.nonnegative_slots().iter().all(|&i| coords[i] >= 0.0)
    }
}

impl fmt::Display for ChartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for ChartId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl FromStr for ChartId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ChartId::ALL
            .iter()
            .copied()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown chart '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub chart: ChartId,
    pub coords: Vec3,
    pub indep: f64,
}

impl PhaseState {
    pub fn new(chart: ChartId, coords: &[f64], indep: f64) -> Self {
        let mut c = [0.0; 3];
        let dim = chart.dim();
        c[..dim].copy_from_slice(&coords[..dim]);
        PhaseState {
            chart,
            coords: c,
            indep,
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.chart.dim()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSample {
    pub xi: f64,
    pub f: f64,
    pub df: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMode {
    Analytic,
    FiniteDifference,
}

fn check_state(state: &PhaseState, exps: &CriticalExponents) -> Result<()> {
    let dim = state.chart.dim();
    if state.coords[..dim].iter().any(|v| !v.is_finite()) || !state.indep.is_finite() {
        return Err(Error::NonFinite(format!(
            "{} state {:?} at {}",
            state.chart,
            state.coords(),
            state.indep
        )));
    }
    match state.chart {
        ChartId::ProfileFwd | ChartId::ProfileExt => {
            if state.indep <= 0.0 || state.coords[0] <= 0.0 {
                return Err(Error::Domain {
                    chart: state.chart.name(),
                    reason: "profile charts need xi > 0 and f > 0".into(),
                });
            }
        }
        ChartId::SobolevV => {
            exps.require_dimension_3("the Sobolev chart")?;
            if state.coords[0] < 0.0 {
                return Err(Error::Domain {
                    chart: state.chart.name(),
                    reason: "v must be nonnegative".into(),
                });
            }
        }
        _ => {}
    }
    Ok(())
}

/// Derivative of the coordinates with respect to the chart's independent
/// variable.
pub fn vector_field(state: &PhaseState, exps: &CriticalExponents) -> Result<Vec3> {
    check_state(state, exps)?;
    Ok(field(state.chart, state.indep, &state.coords, exps))
}

pub fn jacobian(state: &PhaseState, exps: &CriticalExponents, mode: JacobianMode) -> Result<Mat3> {
    check_state(state, exps)?;
    Ok(match mode {
        JacobianMode::Analytic => field_jacobian(state.chart, state.indep, &state.coords, exps),
        JacobianMode::FiniteDifference => {
            fd_jacobian(state.chart, state.indep, &state.coords, exps)
        }
    })
}

fn fd_jacobian(chart: ChartId, t: f64, y: &Vec3, e: &CriticalExponents) -> Mat3 {
    let dim = chart.dim();
    let norm = y[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
    let h = (1e-6 * norm).max(1e-6);
    let mut jac = [[0.0; 3]; 3];
    for j in 0..dim {
        let mut yp = *y;
        let mut ym = *y;
        yp[j] += h;
        ym[j] -= h;
        let fp = field(chart, t, &yp, e);
        let fm = field(chart, t, &ym, e);
        for i in 0..dim {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

/// Unchecked field evaluation used by the integrator.
pub(crate) fn field(chart: ChartId, t: f64, y: &Vec3, e: &CriticalExponents) -> Vec3 {
    let (m, n, sigma, p) = (e.m(), e.n(), e.sigma(), e.p());
    let b = e.b();
    match chart {
        ChartId::ProfileFwd | ChartId::ProfileExt => {
            let s = if chart == ChartId::ProfileFwd { 1.0 } else { -1.0 };
            let (f, g, xi) = (y[0], y[1], t);
            let drift = s * (e.alpha * f + e.beta * xi * g) - xi.powf(sigma) * f.powf(p);
            let gp = (1.0 - m) * g * g / f - (n - 1.0) * g / xi + drift * f.powf(1.0 - m) / m;
            [g, gp, 0.0]
        }
        ChartId::MainFwd | ChartId::MainExt => {
            let s = if chart == ChartId::MainFwd { 1.0 } else { -1.0 };
            let (x, yy, z) = (y[0], y[1], y[2]);
            [
                x * (2.0 + (1.0 - m) * yy),
                s * x - (n - 2.0) * yy - z - m * yy * yy + s * b * x * yy,
                z * (sigma + 2.0 + (p - m) * yy),
            ]
        }
        ChartId::InfxFwd | ChartId::InfxExt => {
            let s = if chart == ChartId::InfxFwd { 1.0 } else { -1.0 };
            let (x, yy, z) = (y[0], y[1], y[2]);
            [
                x * ((m - 1.0) * yy - 2.0 * x),
                -yy * yy + s * b * yy + s * x - n * x * yy - x * z,
                z * ((p - 1.0) * yy + sigma * x),
            ]
        }
        ChartId::WFwd | ChartId::WExt => {
            let s = if chart == ChartId::WFwd { 1.0 } else { -1.0 };
            let (x, yy, w) = (y[0], y[1], y[2]);
            [
                x * ((m - 1.0) * yy - 2.0 * x),
                -yy * yy + s * b * yy + s * x - n * x * yy - w,
                w * ((sigma - 2.0) * x + (m + p - 2.0) * yy),
            ]
        }
        ChartId::InfyFwd | ChartId::InfyExt => {
            let s = if chart == ChartId::InfyFwd { 1.0 } else { -1.0 };
            let (x, z, w) = (y[0], y[1], y[2]);
            [
                -x - n * x * w + s * b * x * x + s * x * x * w - x * z * w,
                -p * z - (n + sigma) * z * w + s * b * x * z + s * x * z * w - z * z * w,
                -m * w - (n - 2.0) * w * w + s * b * x * w + s * x * w * w - z * w * w,
            ]
        }
        ChartId::PlaneX0 => {
            let (yy, z) = (y[0], y[1]);
            [
                -(n - 2.0) * yy - z - m * yy * yy,
                z * (sigma + 2.0 + (p - m) * yy),
                0.0,
            ]
        }
        ChartId::PlaneX0T => {
            let (tt, z) = (y[0], y[1]);
            let pm = p - m;
            [
                -e.gap_s() / pm * tt - m * tt * tt / pm - pm * z + e.gap_c() * (sigma + 2.0) / pm,
                tt * z,
                0.0,
            ]
        }
        ChartId::PlaneZ0Fwd | ChartId::PlaneZ0Ext => {
            let s = if chart == ChartId::PlaneZ0Fwd { 1.0 } else { -1.0 };
            let (x, yy) = (y[0], y[1]);
            [
                x * (2.0 + (1.0 - m) * yy),
                s * x - (n - 2.0) * yy - m * yy * yy + s * b * x * yy,
                0.0,
            ]
        }
        ChartId::SobolevV => {
            let (v, vs) = (y[0], y[1]);
            let q = (n + 2.0 * sigma + 2.0) / (n - 2.0);
            [vs, 0.25 * (n - 2.0) * (n - 2.0) * v - v.max(0.0).powf(q), 0.0]
        }
    }
}

pub(crate) fn field_jacobian(chart: ChartId, t: f64, y: &Vec3, e: &CriticalExponents) -> Mat3 {
    let (m, n, sigma, p) = (e.m(), e.n(), e.sigma(), e.p());
    let b = e.b();
    match chart {
        ChartId::ProfileFwd | ChartId::ProfileExt => {
            let s = if chart == ChartId::ProfileFwd { 1.0 } else { -1.0 };
            let (f, g, xi) = (y[0], y[1], t);
            let xs = xi.powf(sigma);
            let d_f = -(1.0 - m) * g * g / (f * f)
                + (s * e.alpha * (2.0 - m) * f.powf(1.0 - m)
                    + s * e.beta * xi * g * (1.0 - m) * f.powf(-m)
                    - xs * (p + 1.0 - m) * f.powf(p - m))
                    / m;
            let d_g = 2.0 * (1.0 - m) * g / f - (n - 1.0) / xi + s * e.beta * xi * f.powf(1.0 - m) / m;
            [[0.0, 1.0, 0.0], [d_f, d_g, 0.0], [0.0; 3]]
        }
        ChartId::MainFwd | ChartId::MainExt => {
            let s = if chart == ChartId::MainFwd { 1.0 } else { -1.0 };
            let (x, yy, z) = (y[0], y[1], y[2]);
            [
                [2.0 + (1.0 - m) * yy, (1.0 - m) * x, 0.0],
                [s + s * b * yy, -(n - 2.0) - 2.0 * m * yy + s * b * x, -1.0],
                [0.0, (p - m) * z, sigma + 2.0 + (p - m) * yy],
            ]
        }
        ChartId::InfxFwd | ChartId::InfxExt => {
            let s = if chart == ChartId::InfxFwd { 1.0 } else { -1.0 };
            let (x, yy, z) = (y[0], y[1], y[2]);
            [
                [(m - 1.0) * yy - 4.0 * x, (m - 1.0) * x, 0.0],
                [s - n * yy - z, -2.0 * yy + s * b - n * x, -x],
                [sigma * z, (p - 1.0) * z, (p - 1.0) * yy + sigma * x],
            ]
        }
        ChartId::WFwd | ChartId::WExt => {
            let s = if chart == ChartId::WFwd { 1.0 } else { -1.0 };
            let (x, yy, w) = (y[0], y[1], y[2]);
            [
                [(m - 1.0) * yy - 4.0 * x, (m - 1.0) * x, 0.0],
                [s - n * yy, -2.0 * yy + s * b - n * x, -1.0],
                [(sigma - 2.0) * w, (m + p - 2.0) * w, (sigma - 2.0) * x + (m + p - 2.0) * yy],
            ]
        }
        ChartId::InfyFwd | ChartId::InfyExt => {
            let s = if chart == ChartId::InfyFwd { 1.0 } else { -1.0 };
            let (x, z, w) = (y[0], y[1], y[2]);
            [
                [
                    -1.0 - n * w + 2.0 * s * b * x + 2.0 * s * x * w - z * w,
                    -x * w,
                    -n * x + s * x * x - x * z,
                ],
                [
                    s * b * z + s * z * w,
                    -p - (n + sigma) * w + s * b * x + s * x * w - 2.0 * z * w,
                    -(n + sigma) * z + s * x * z - z * z,
                ],
                [
                    s * b * w + s * w * w,
                    -w * w,
                    -m - 2.0 * (n - 2.0) * w + s * b * x + 2.0 * s * x * w - 2.0 * z * w,
                ],
            ]
        }
        ChartId::PlaneX0 => {
            let (yy, z) = (y[0], y[1]);
            [
                [-(n - 2.0) - 2.0 * m * yy, -1.0, 0.0],
                [(p - m) * z, sigma + 2.0 + (p - m) * yy, 0.0],
                [0.0; 3],
            ]
        }
        ChartId::PlaneX0T => {
            let (tt, z) = (y[0], y[1]);
            let pm = p - m;
            [
                [-e.gap_s() / pm - 2.0 * m * tt / pm, -pm, 0.0],
                [z, tt, 0.0],
                [0.0; 3],
            ]
        }
        ChartId::PlaneZ0Fwd | ChartId::PlaneZ0Ext => {
            let s = if chart == ChartId::PlaneZ0Fwd { 1.0 } else { -1.0 };
            let (x, yy) = (y[0], y[1]);
            [
                [2.0 + (1.0 - m) * yy, (1.0 - m) * x, 0.0],
                [s + s * b * yy, -(n - 2.0) - 2.0 * m * yy + s * b * x, 0.0],
                [0.0; 3],
            ]
        }
        ChartId::SobolevV => {
            let v = y[0].max(0.0);
            let q = (n + 2.0 * sigma + 2.0) / (n - 2.0);
            [
                [0.0, 1.0, 0.0],
                [0.25 * (n - 2.0) * (n - 2.0) - q * v.powf(q - 1.0), 0.0, 0.0],
                [0.0; 3],
            ]
        }
    }
}

/// Maps a profile sample to the main chart of `system`:
/// `X = (α/m)ξ²f^{1−m}`, `Y = ξf'/f`, `Z = (1/m)ξ^{σ+2}f^{p−m}`, `η = ln ξ`.
pub fn profile_to_phase(
    sample: &ProfileSample,
    exps: &CriticalExponents,
    system: System,
) -> Result<PhaseState> {
    let ProfileSample { xi, f, df } = *sample;
    if !(xi > 0.0 && f > 0.0 && df.is_finite() && xi.is_finite() && f.is_finite()) {
        return Err(Error::Domain {
            chart: ChartId::profile(system).name(),
            reason: format!("need xi > 0 and f > 0, got xi = {xi}, f = {f}"),
        });
    }
    let m = exps.m();
    let x = exps.alpha / m * xi * xi * f.powf(1.0 - m);
    let y = xi * df / f;
    let z = xi.powf(exps.sigma() + 2.0) * f.powf(exps.p() - m) / m;
    Ok(PhaseState::new(ChartId::main(system), &[x, y, z], xi.ln()))
}

/// Profile recovered from a main-chart state together with the relative
/// mismatch between the state's `Z` and the `Z` implied by `(ξ, f)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reconstruction {
    pub sample: ProfileSample,
    pub residual: f64,
    pub consistent: bool,
}

/// Relative `Z`-mismatch above which a reconstruction is flagged.
pub const CONSISTENCY_TOL: f64 = 1e-8;

pub fn phase_to_profile(state: &PhaseState, exps: &CriticalExponents) -> Result<Reconstruction> {
    phase_to_profile_at(state, exps, state.indep)
}

/// As [`phase_to_profile`] with `ln ξ` supplied explicitly, for orbits
/// whose `η`-origin was fixed separately (see [`log_xi_from_state`]).
pub fn phase_to_profile_at(
    state: &PhaseState,
    exps: &CriticalExponents,
    ln_xi: f64,
) -> Result<Reconstruction> {
    if !matches!(state.chart, ChartId::MainFwd | ChartId::MainExt) {
        return Err(Error::Domain {
            chart: state.chart.name(),
            reason: "profiles are recovered from main-chart states only".into(),
        });
    }
    let [x, y, z] = state.coords;
    if !(x > 0.0) || !ln_xi.is_finite() || !y.is_finite() || !z.is_finite() {
        return Err(Error::Domain {
            chart: state.chart.name(),
            reason: format!("profile undefined at X = {x}"),
        });
    }
    let m = exps.m();
    let ln_f = ((m * x / exps.alpha).ln() - 2.0 * ln_xi) / (1.0 - m);
    let xi = ln_xi.exp();
    let f = ln_f.exp();
    let ln_z = (exps.sigma() + 2.0) * ln_xi + (exps.p() - m) * ln_f - m.ln();
    let residual = if z > 0.0 {
        (ln_z.exp() / z - 1.0).abs()
    } else {
        f64::INFINITY
    };
    Ok(Reconstruction {
        sample: ProfileSample {
            xi,
            f,
            df: y * f / xi,
        },
        residual,
        consistent: residual <= CONSISTENCY_TOL,
    })
}

/// The unique `ln ξ` for which `(X, Z)` are both consistent with a profile.
pub fn log_xi_from_state(state: &PhaseState, exps: &CriticalExponents) -> Result<f64> {
    let [x, _, z] = state.coords;
    if !(x > 0.0 && z > 0.0) {
        return Err(Error::Domain {
            chart: state.chart.name(),
            reason: "fixing the origin needs X > 0 and Z > 0".into(),
        });
    }
    let m = exps.m();
    Ok(((exps.p() - m) * (m * x / exps.alpha).ln() - (1.0 - m) * (m * z).ln()) / exps.l)
}

fn transfer_err(from: ChartId, to: ChartId, reason: &str) -> Error {
    Error::ChartTransfer {
        from: from.name(),
        to: to.name(),
        reason: reason.into(),
    }
}

fn nonzero(v: f64, from: ChartId, to: ChartId, what: &str) -> Result<f64> {
    if v == 0.0 || !v.is_finite() {
        Err(transfer_err(from, to, &format!("{what} is zero")))
    } else {
        Ok(v)
    }
}

/// Moves a state between charts. The independent variable is kept when
/// both charts share it and restarts at zero otherwise.
pub fn chart_transfer(
    state: &PhaseState,
    target: ChartId,
    exps: &CriticalExponents,
) -> Result<PhaseState> {
    let from = state.chart;
    if from == target {
        return Ok(*state);
    }
    let main = to_main(state, target, exps)?;
    let coords = from_main(&main, target, from, exps)?;
    let indep = if from.indep_name() == target.indep_name() {
        state.indep
    } else {
        0.0
    };
    Ok(PhaseState::new(target, &coords, indep))
}

fn system_of(chart: ChartId) -> Option<System> {
    chart.system()
}

fn to_main(state: &PhaseState, target: ChartId, exps: &CriticalExponents) -> Result<Vec3> {
    let from = state.chart;
    if let (Some(a), Some(b)) = (system_of(from), system_of(target)) {
        if a != b {
            return Err(transfer_err(from, target, "charts belong to different systems"));
        }
    }
    let c = state.coords;
    Ok(match from {
        ChartId::MainFwd | ChartId::MainExt => c,
        ChartId::InfxFwd | ChartId::InfxExt => {
            let x = nonzero(c[0], from, target, "x")?;
            [1.0 / x, c[1] / x, c[2] / x]
        }
        ChartId::WFwd | ChartId::WExt => {
            let x = nonzero(c[0], from, target, "x")?;
            [1.0 / x, c[1] / x, c[2] / (x * x)]
        }
        ChartId::InfyFwd | ChartId::InfyExt => {
            let w = nonzero(c[2], from, target, "w")?;
            [c[0] / w, 1.0 / w, c[1] / w]
        }
        ChartId::PlaneX0 => [0.0, c[0], c[1]],
        ChartId::PlaneX0T => [0.0, (c[0] - exps.sigma() - 2.0) / (exps.p() - exps.m()), c[1]],
        ChartId::PlaneZ0Fwd | ChartId::PlaneZ0Ext => [c[0], c[1], 0.0],
        ChartId::ProfileFwd | ChartId::ProfileExt | ChartId::SobolevV => {
            return Err(transfer_err(from, target, "chart is not a phase-space chart"));
        }
    })
}

fn from_main(c: &Vec3, target: ChartId, from: ChartId, exps: &CriticalExponents) -> Result<Vec3> {
    Ok(match target {
        ChartId::MainFwd | ChartId::MainExt => *c,
        ChartId::InfxFwd | ChartId::InfxExt => {
            let x = nonzero(c[0], from, target, "X")?;
            [1.0 / x, c[1] / x, c[2] / x]
        }
        ChartId::WFwd | ChartId::WExt => {
            let x = nonzero(c[0], from, target, "X")?;
            [1.0 / x, c[1] / x, c[2] / (x * x)]
        }
        ChartId::InfyFwd | ChartId::InfyExt => {
            let y = nonzero(c[1], from, target, "Y")?;
            [c[0] / y, c[2] / y, 1.0 / y]
        }
        ChartId::PlaneX0 | ChartId::PlaneX0T => {
            if c[0] != 0.0 {
                return Err(transfer_err(from, target, "state is off the plane X = 0"));
            }
            if target == ChartId::PlaneX0 {
                [c[1], c[2], 0.0]
            } else {
                [exps.sigma() + 2.0 + (exps.p() - exps.m()) * c[1], c[2], 0.0]
            }
        }
        ChartId::PlaneZ0Fwd | ChartId::PlaneZ0Ext => {
            if c[2] != 0.0 {
                return Err(transfer_err(from, target, "state is off the plane Z = 0"));
            }
            [c[0], c[1], 0.0]
        }
        ChartId::ProfileFwd | ChartId::ProfileExt | ChartId::SobolevV => {
            return Err(transfer_err(from, target, "chart is not a phase-space chart"));
        }
    })
}
