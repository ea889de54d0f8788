//! Dormand–Prince 5(4) integration of any chart's vector field, with PI
//! step control, located events, escape detection and trajectory output.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::CriticalExponents;
use crate::phase_systems::{field, ChartId, PhaseState, ProfileSample, System, Vec3, CLAMP_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// First trial step; chosen automatically when `None`.
    pub initial_step: Option<f64>,
    pub max_step: f64,
    pub max_steps: usize,
    /// Length of the independent-variable interval to cover.
    pub max_indep_span: f64,
    /// Integrate toward decreasing values of the independent variable.
    pub backward: bool,
    /// `(Y_max, norm_max)` escape thresholds; `None` disables the guard.
    pub escape: Option<(f64, f64)>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            initial_step: None,
            max_step: f64::INFINITY,
            max_steps: 1_000_000,
            max_indep_span: 200.0,
            backward: false,
            escape: Some((1e3, 1e6)),
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let tol_ok = |t: f64| t > 0.0 && t < 1e-2;
        if !tol_ok(self.rel_tol) || !(self.abs_tol > 0.0 && self.abs_tol < 1e-2) {
            return Err(Error::InvalidArgument(format!(
                "tolerances must lie in (0, 1e-2), got rel {} abs {}",
                self.rel_tol, self.abs_tol
            )));
        }
        if self.max_steps < 1 {
            return Err(Error::InvalidArgument("max_steps must be at least 1".into()));
        }
        if !(self.max_indep_span > 0.0) || !(self.max_step > 0.0) {
            return Err(Error::InvalidArgument("span and max_step must be positive".into()));
        }
        if let Some(h) = self.initial_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidArgument("initial_step must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn with_span(mut self, span: f64) -> Self {
        self.max_indep_span = span;
        self
    }

    pub fn reversed(mut self) -> Self {
        self.backward = !self.backward;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventDirection {
    Rising,
    Falling,
    Either,
}

pub type Guard = Arc<dyn Fn(&PhaseState) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct EventSpec {
    pub name: String,
    pub guard: Guard,
    pub direction: EventDirection,
    pub terminal: bool,
}

impl EventSpec {
    pub fn new(
        name: impl Into<String>,
        direction: EventDirection,
        terminal: bool,
        guard: impl Fn(&PhaseState) -> f64 + Send + Sync + 'static,
    ) -> Self {
        EventSpec {
            name: name.into(),
            guard: Arc::new(guard),
            direction,
            terminal,
        }
    }

    /// Event on coordinate `slot` crossing `level`.
    pub fn crossing(
        name: impl Into<String>,
        slot: usize,
        level: f64,
        direction: EventDirection,
        terminal: bool,
    ) -> Self {
        EventSpec::new(name, direction, terminal, move |s: &PhaseState| s.coords[slot] - level)
    }

    fn triggers(&self, g0: f64, g1: f64) -> bool {
        let rising = g0 < 0.0 && g1 >= 0.0;
        let falling = g0 > 0.0 && g1 <= 0.0;
        match self.direction {
            EventDirection::Rising => rising,
            EventDirection::Falling => falling,
            EventDirection::Either => rising || falling,
        }
    }
}

impl fmt::Debug for EventSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EventSpec")
            .field("name", &self.name)
            .field("direction", &self.direction)
            .field("terminal", &self.terminal)
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventHit {
    pub name: String,
    pub state: PhaseState,
}

pub const ESCAPED: &str = "escaped";
pub const LEFT_REGION: &str = "left_region";

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    /// A terminal event, including the built-in `escaped` and `left_region`.
    Event(EventHit),
    SpanReached,
    MaxSteps,
    StepUnderflow,
    /// The observer asked to stop.
    Stopped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub chart: ChartId,
    pub samples: Vec<(f64, Vec3)>,
    /// Non-terminal events in order of occurrence.
    pub events: Vec<EventHit>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn last(&self) -> PhaseState {
        let (t, c) = *self.samples.last().expect("trajectory has its initial sample");
        PhaseState {
            chart: self.chart,
            coords: c,
            indep: t,
        }
    }

    pub fn states(&self) -> impl Iterator<Item = PhaseState> + '_ {
        self.samples.iter().map(move |&(t, c)| PhaseState {
            chart: self.chart,
            coords: c,
            indep: t,
        })
    }

    pub fn terminal_event(&self) -> Option<&EventHit> {
        match &self.termination {
            Termination::Event(e) => Some(e),
            _ => None,
        }
    }

    pub fn escaped(&self) -> bool {
        self.terminal_event().map_or(false, |e| e.name == ESCAPED)
    }

    pub fn budget_exhausted(&self) -> bool {
        matches!(self.termination, Termination::SpanReached | Termination::MaxSteps)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let dim = self.chart.dim();
        let cols: Vec<String> = (1..=dim).map(|i| format!("c{i}")).collect();
        writeln!(w, "indep,{}", cols.join(","))?;
        for (t, c) in &self.samples {
            write!(w, "{t:.16e}")?;
            for v in &c[..dim] {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

pub fn write_profile_csv<W: Write>(profile: &[ProfileSample], mut w: W) -> io::Result<()> {
    writeln!(w, "xi,f,df")?;
    for s in profile {
        writeln!(w, "{:.16e},{:.16e},{:.16e}", s.xi, s.f, s.df)?;
    }
    Ok(())
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const EXPO1: f64 = 0.2 - 0.04 * 0.75;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const EVENT_TOL: f64 = 1e-12;

struct Rhs<'a> {
    chart: ChartId,
    exps: &'a CriticalExponents,
    dim: usize,
}

impl Rhs<'_> {
    fn eval(&self, t: f64, y: &Vec3) -> Vec3 {
        field(self.chart, t, y, self.exps)
    }

    fn finite(&self, v: &Vec3) -> bool {
        v[..self.dim].iter().all(|x| x.is_finite())
    }
}

fn axpy(y: &Vec3, h: f64, terms: &[(f64, &Vec3)]) -> Vec3 {
    let mut out = *y;
    for i in 0..3 {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

/// One Dormand–Prince step; returns the 5th-order solution, its derivative
/// (FSAL) and the embedded error vector.
fn dp_step(rhs: &Rhs, t: f64, y: &Vec3, k1: &Vec3, h: f64) -> (Vec3, Vec3, Vec3) {
    let k2 = rhs.eval(t + C2 * h, &axpy(y, h, &[(A21, k1)]));
    let k3 = rhs.eval(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = rhs.eval(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = rhs.eval(
        t + C5 * h,
        &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = rhs.eval(
        t + h,
        &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    );
    let y1 = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = rhs.eval(t + h, &y1);
    let mut err = [0.0; 3];
    for i in 0..3 {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    (y1, k7, err)
}

fn error_norm(cfg: &IntegratorConfig, dim: usize, y0: &Vec3, y1: &Vec3, err: &Vec3) -> f64 {
    let mut acc = 0.0;
    for i in 0..dim {
        let sc = cfg.abs_tol + cfg.rel_tol * y0[i].abs().max(y1[i].abs());
        acc += (err[i] / sc).powi(2);
    }
    (acc / dim as f64).sqrt()
}

fn initial_step(rhs: &Rhs, cfg: &IntegratorConfig, t: f64, y: &Vec3, f0: &Vec3, dir: f64) -> f64 {
    let dim = rhs.dim;
    let sc = |i: usize| cfg.abs_tol + cfg.rel_tol * y[i].abs();
    let rms = |v: &Vec3| ((0..dim).map(|i| (v[i] / sc(i)).powi(2)).sum::<f64>() / dim as f64).sqrt();
    let d0 = rms(y);
    let d1 = rms(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(cfg.max_step).min(cfg.max_indep_span);
    let y1 = axpy(y, dir * h0, &[(1.0, f0)]);
    let f1 = rhs.eval(t + dir * h0, &y1);
    let mut diff = [0.0; 3];
    for i in 0..dim {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    let h = (100.0 * h0).min(h1).min(cfg.max_step).min(cfg.max_indep_span);
    if h.is_finite() && h > 0.0 {
        h
    } else {
        1e-6
    }
}

fn y_slot(chart: ChartId) -> Option<usize> {
    match chart {
        ChartId::MainFwd | ChartId::MainExt | ChartId::PlaneZ0Fwd | ChartId::PlaneZ0Ext => Some(1),
        ChartId::PlaneX0 => Some(0),
        _ => None,
    }
}

fn escaped(cfg: &IntegratorConfig, chart: ChartId, c: &Vec3) -> bool {
    let Some((y_max, norm_max)) = cfg.escape else {
        return false;
    };
    if y_slot(chart).map_or(false, |i| c[i].abs() > y_max) {
        return true;
    }
    let dim = chart.dim();
    c[..dim].iter().map(|v| v * v).sum::<f64>().sqrt() > norm_max
}

/// Clamps roundoff-size negatives on invariant planes; reports whether the
/// state left the admissible region.
fn clamp(chart: ChartId, c: &mut Vec3) -> bool {
    let dim = chart.dim();
    let scale = 1.0 + c[..dim].iter().map(|v| v.abs()).fold(0.0, f64::max);
    for &i in chart.nonnegative_slots() {
        if c[i] < 0.0 {
            if c[i] > -CLAMP_TOL * scale {
                c[i] = 0.0;
            } else {
                return false;
            }
        }
    }
    true
}

/// Integrates from `state0` until the span is covered, a terminal event
/// fires, the state escapes or leaves its region, or the step budget runs out.
pub fn integrate(
    state0: &PhaseState,
    exps: &CriticalExponents,
    config: &IntegratorConfig,
    events: &[EventSpec],
) -> Result<Trajectory> {
    integrate_observed(state0, exps, config, events, &mut |_| true)
}

/// As [`integrate`], calling `observer` after every accepted step; returning
/// `false` stops the integration.
pub fn integrate_observed(
    state0: &PhaseState,
    exps: &CriticalExponents,
    config: &IntegratorConfig,
    events: &[EventSpec],
    observer: &mut dyn FnMut(&PhaseState) -> bool,
) -> Result<Trajectory> {
    config.validate()?;
    let chart = state0.chart;
    let dim = chart.dim();
    if !chart.is_admissible(&state0.coords) || !state0.indep.is_finite() {
        return Err(Error::Domain {
            chart: chart.name(),
            reason: format!("inadmissible initial state {:?}", state0.coords()),
        });
    }
    let rhs = Rhs { chart, exps, dim };
    let dir = if config.backward { -1.0 } else { 1.0 };
    let t0 = state0.indep;
    let t_end = t0 + dir * config.max_indep_span;
    let mut t = t0;
    let mut y = state0.coords;
    let mut k1 = rhs.eval(t, &y);
    if !rhs.finite(&k1) {
        return Err(Error::NonFinite(format!(
            "{} field at {:?}",
            chart,
            state0.coords()
        )));
    }
    let mut samples = vec![(t, y)];
    let mut hits = Vec::new();
    let state_at = |t: f64, c: Vec3| PhaseState { chart, coords: c, indep: t };
    let mut guards: Vec<f64> = events.iter().map(|e| (e.guard)(state0)).collect();

    let mut h = config
        .initial_step
        .unwrap_or_else(|| initial_step(&rhs, config, t, &y, &k1, dir));
    let mut fac_old: f64 = 1e-4;
    let mut steps = 0usize;
    let mut last_rejected = false;

    let termination = loop {
        if steps >= config.max_steps {
            break Termination::MaxSteps;
        }
        let remaining = (t_end - t) * dir;
        if remaining <= 1e-14 * (1.0 + t.abs()) {
            break Termination::SpanReached;
        }
        h = h.min(config.max_step).min(remaining);
        if h < 1e-14 * (1.0 + t.abs()) {
            break Termination::StepUnderflow;
        }
        steps += 1;
        let (y1, k7, err) = dp_step(&rhs, t, &y, &k1, dir * h);
        let finite = rhs.finite(&y1) && rhs.finite(&k7) && rhs.finite(&err);
        let en = if finite {
            error_norm(config, dim, &y, &y1, &err)
        } else {
            f64::INFINITY
        };
        if !(en <= 1.0) {
            let shrink = if en.is_finite() {
                (en.powf(EXPO1) / SAFETY).min(1.0 / FAC_MIN)
            } else {
                1.0 / FAC_MIN
            };
            h /= shrink;
            last_rejected = true;
            continue;
        }

        let fac11 = en.powf(EXPO1);
        let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        let mut h_new = h / fac;
        fac_old = en.max(1e-4);
        if last_rejected {
            h_new = h_new.min(h);
        }
        last_rejected = false;

        let t1 = if (t + dir * h - t_end) * dir >= 0.0 { t_end } else { t + dir * h };
        let mut y1 = y1;
        let inside = clamp(chart, &mut y1);

        let new_state = state_at(t1, y1);
        let mut stop: Option<Termination> = None;
        let mut first: Option<f64> = None;
        let new_guards: Vec<f64> = events.iter().map(|e| (e.guard)(&new_state)).collect();
        for (i, e) in events.iter().enumerate() {
            if e.triggers(guards[i], new_guards[i]) {
                let (theta, root) = locate(&rhs, e, t, &y, &k1, dir * h, guards[i], new_guards[i]);
                let hit = EventHit {
                    name: e.name.clone(),
                    state: state_at(t + theta * dir * h, root),
                };
                if e.terminal {
                    if first.map_or(true, |th| theta < th) {
                        first = Some(theta);
                        stop = Some(Termination::Event(hit));
                    }
                } else {
                    hits.push((theta, steps, hit));
                }
            }
        }
        if let Some(theta) = first {
            hits.retain(|(th, st, _)| *st != steps || *th <= theta);
            if let Some(Termination::Event(hit)) = &stop {
                samples.push((hit.state.indep, hit.state.coords));
            }
            break stop.unwrap();
        }
        if !inside {
            break Termination::Event(EventHit {
                name: LEFT_REGION.into(),
                state: new_state,
            });
        }
        t = t1;
        y = y1;
        k1 = k7;
        guards = new_guards;
        samples.push((t, y));
        if escaped(config, chart, &y) {
            break Termination::Event(EventHit {
                name: ESCAPED.into(),
                state: new_state,
            });
        }
        if !observer(&new_state) {
            break Termination::Stopped;
        }
        h = h_new;
    };
    Ok(Trajectory {
        chart,
        samples,
        events: hits.into_iter().map(|(_, _, h)| h).collect(),
        termination,
    })
}

/// Bisection on the step fraction, re-stepping from the left state.
#[allow(clippy::too_many_arguments)]
fn locate(
    rhs: &Rhs,
    e: &EventSpec,
    t: f64,
    y: &Vec3,
    k1: &Vec3,
    h: f64,
    g0: f64,
    g1: f64,
) -> (f64, Vec3) {
    let scale = 1.0f64.max(g0.abs()).max(g1.abs());
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut g_lo = g0;
    let mut best = (1.0, dp_step(rhs, t, y, k1, h).0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (ym, _, _) = dp_step(rhs, t, y, k1, mid * h);
        let gm = (e.guard)(&PhaseState {
            chart: rhs.chart,
            coords: ym,
            indep: t + mid * h,
        });
        best = (mid, ym);
        if gm.abs() < EVENT_TOL * scale || hi - lo < 1e-15 {
            break;
        }
        if (gm > 0.0) == (g_lo > 0.0) && gm != 0.0 {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
        }
    }
    best
}

/// Series start of the profile near the origin: `(ξ0, f, f')`.
pub fn profile_series_start(amplitude: f64, exps: &CriticalExponents, system: System) -> Result<(f64, f64, f64)> {
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidArgument(format!("amplitude must be positive, got {amplitude}")));
    }
    let (m, n, sigma, p) = (exps.m(), exps.n(), exps.sigma(), exps.p());
    let s = system.sign();
    let alpha = exps.alpha;
    // ξ0 with X(ξ0) ≤ 1e-7 and Z(ξ0) ≤ 1e-12.
    let x_scale = alpha * amplitude.powf(1.0 - m) / m;
    let z_scale = amplitude.powf(p - m) / m;
    let xi0 = (1e-7 / x_scale)
        .sqrt()
        .min((1e-12 / z_scale).powf(1.0 / (sigma + 2.0)));
    let d = amplitude.powf(-(1.0 - m));
    let k = alpha * (1.0 - m) / (2.0 * m * n);
    let base = d - s * k * xi0 * xi0;
    let f_main = base.powf(-1.0 / (1.0 - m));
    let df_main = 2.0 * s * k * xi0 * base.powf(-1.0 / (1.0 - m) - 1.0) / (1.0 - m);
    let c = amplitude.powf(p + 1.0 - m) / (m * (sigma + 2.0) * (n + sigma));
    let f = f_main - c * xi0.powf(sigma + 2.0);
    let df = df_main - c * (sigma + 2.0) * xi0.powf(sigma + 1.0);
    if !(f.is_finite() && df.is_finite() && f > 0.0 && xi0 > 0.0) {
        return Err(Error::NonFinite(format!("profile series start at A = {amplitude}")));
    }
    Ok((xi0, f, df))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRun {
    pub samples: Vec<ProfileSample>,
    /// Why the integration stopped: `f_min`, `xi_max`, `blowup` or the
    /// integrator's own reason.
    pub stop: String,
}

/// Integrates the profile ODE in `ξ` from the series start until
/// `f ≤ f_min`, `ξ ≥ ξ_max` or the step budget runs out. Tolerances come
/// from `config`; the absolute tolerance is dropped so that decaying tails
/// are followed with relative accuracy.
pub fn integrate_profile(
    amplitude: f64,
    exps: &CriticalExponents,
    system: System,
    config: &IntegratorConfig,
    f_min: f64,
    xi_max: f64,
) -> Result<ProfileRun> {
    let (xi0, f0, df0) = profile_series_start(amplitude, exps, system)?;
    let chart = ChartId::profile(system);
    let cfg = IntegratorConfig {
        abs_tol: 1e-300,
        max_indep_span: (xi_max - xi0).max(0.0),
        backward: false,
        escape: None,
        ..*config
    };
    let events = [
        EventSpec::new("f_min", EventDirection::Falling, true, move |s: &PhaseState| {
            s.coords[0] - f_min
        }),
        EventSpec::new("blowup", EventDirection::Rising, true, |s: &PhaseState| {
            s.coords[0].abs().max(s.coords[1].abs()) - 1e150
        }),
    ];
    let state0 = PhaseState::new(chart, &[f0, df0], xi0);
    let traj = integrate(&state0, exps, &cfg, &events)?;
    let stop = match &traj.termination {
        Termination::Event(e) => e.name.clone(),
        Termination::SpanReached => "xi_max".into(),
        Termination::MaxSteps => "max_steps".into(),
        Termination::StepUnderflow => "step_underflow".into(),
        Termination::Stopped => "stopped".into(),
    };
    let samples = traj
        .samples
        .iter()
        .filter(|(_, c)| c[0] > 0.0)
        .map(|&(xi, c)| ProfileSample { xi, f: c[0], df: c[1] })
        .collect();
    Ok(ProfileRun { samples, stop })
}
