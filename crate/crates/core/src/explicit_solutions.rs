//! Closed-form solutions, invariant curves and sign functionals of the
//! model, used both as outputs and as exact oracles for the numerics.

use std::io::{self, Write};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::CriticalExponents;

/// Relative tolerance on `|p − p_s| / p_s` for the families that exist only
/// at the Sobolev exponent.
pub const SOBOLEV_TOL: f64 = 1e-12;

pub fn require_sobolev(exps: &CriticalExponents) -> Result<()> {
    exps.require_dimension_3("the p = p_s families")?;
    let ps = exps.p_s.as_f64();
    if (exps.p() - ps).abs() > SOBOLEV_TOL * ps {
        return Err(Error::Branch(format!(
            "needs p = p_s = {ps}, got p = {}",
            exps.p()
        )));
    }
    Ok(())
}

/// Stationary solution `U_C(r)` at `p = p_s`.
pub fn sobolev_stationary(c: f64, r: f64, exps: &CriticalExponents) -> Result<f64> {
    require_sobolev(exps)?;
    if !(c > 0.0) || !(r >= 0.0) {
        return Err(Error::InvalidArgument(format!("need C > 0 and r >= 0, got C = {c}, r = {r}")));
    }
    let (m, n, sigma) = (exps.m(), exps.n(), exps.sigma());
    let q = r.powf(sigma + 2.0) + c;
    Ok(((n - 2.0) * (n + sigma) * c / (q * q)).powf((n - 2.0) / (2.0 * m * (sigma + 2.0))))
}

/// `U_C` pulled back to the Sobolev chart: `(v, v_s)` at `s = ln r`.
pub fn sobolev_stationary_v(c: f64, s: f64, exps: &CriticalExponents) -> Result<(f64, f64)> {
    let r = s.exp();
    let u = sobolev_stationary(c, r, exps)?;
    let (m, n, sigma) = (exps.m(), exps.n(), exps.sigma());
    let v = u.powf(m) * ((n - 2.0) * s / 2.0).exp();
    let rs = r.powf(sigma + 2.0);
    let vs = v * (n - 2.0) / 2.0 * (c - rs) / (c + rs);
    Ok((v, vs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularStationary {
    pub k: f64,
    pub exponent: f64,
    /// `p` sits at `p_c`, where the constant vanishes.
    pub degenerate: bool,
}

/// The singular stationary solution `u = K r^{−(σ+2)/(p−m)}`.
pub fn singular_stationary_constant(exps: &CriticalExponents) -> Result<SingularStationary> {
    let (m, sigma, p) = (exps.m(), exps.sigma(), exps.p());
    let gap = exps.gap_c();
    let degenerate = exps.p_c.finite().map_or(false, |pc| (p - pc).abs() <= SOBOLEV_TOL * pc);
    if gap < 0.0 && !degenerate {
        return Err(Error::Branch(format!("needs p > p_c = {}", exps.p_c.as_f64())));
    }
    let k = if degenerate {
        0.0
    } else {
        (m * (sigma + 2.0) * gap / ((p - m) * (p - m))).powf(1.0 / (p - m))
    };
    Ok(SingularStationary {
        k,
        exponent: -(sigma + 2.0) / (p - m),
        degenerate,
    })
}

pub fn singular_stationary(r: f64, exps: &CriticalExponents) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("need r > 0, got {r}")));
    }
    let s = singular_stationary_constant(exps)?;
    Ok(s.k * r.powf(s.exponent))
}

/// Scaled residual of the radial stationary equation
/// `(u^m)'' + (N−1)/r (u^m)' + r^σ u^p = 0` at `r`, with derivatives from a
/// six-point-accurate central stencil. Scaled by the largest term or by
/// `u^m/r²`, the size of the operator on a function of that magnitude,
/// whichever is larger (all terms vanish as `r → 0`).
pub fn stationary_residual(u: impl Fn(f64) -> f64, r: f64, exps: &CriticalExponents) -> f64 {
    let (m, n, sigma, p) = (exps.m(), exps.n(), exps.sigma(), exps.p());
    let w = |x: f64| u(x).powf(m);
    let h = 2e-3 * r;
    let w0 = w(r);
    let (w1, wm1) = (w(r + h), w(r - h));
    let (w2, wm2) = (w(r + 2.0 * h), w(r - 2.0 * h));
    let (w3, wm3) = (w(r + 3.0 * h), w(r - 3.0 * h));
    let d1 = (45.0 * (w1 - wm1) - 9.0 * (w2 - wm2) + (w3 - wm3)) / (60.0 * h);
    let d2 = (270.0 * (w1 + wm1) - 27.0 * (w2 + wm2) + 2.0 * (w3 + wm3) - 490.0 * w0)
        / (180.0 * h * h);
    let t1 = d2;
    let t2 = (n - 1.0) / r * d1;
    let t3 = r.powf(sigma) * u(r).powf(p);
    (t1 + t2 + t3) / t1.abs().max(t2.abs()).max(t3.abs()).max(w0.abs() / (r * r))
}

/// `Z` on the invariant cylinder over `Y`.
pub fn cylinder_z(y: f64, exps: &CriticalExponents) -> f64 {
    let (m, n, sigma) = (exps.m(), exps.n(), exps.sigma());
    -(n + sigma) * (m * y + n - 2.0) * y / (n - 2.0)
}

/// `Z − Z_cyl(Y)`: negative strictly inside the cylinder (for `Z ≥ 0`).
pub fn cylinder_functional(y: f64, z: f64, exps: &CriticalExponents) -> f64 {
    z - cylinder_z(y, exps)
}

fn cylinder_flow(x: f64, y: f64, exps: &CriticalExponents, sign: f64) -> f64 {
    let (m, n, sigma, p) = (exps.m(), exps.n(), exps.sigma(), exps.p());
    let ps_minus_p = -exps.gap_s() / (n - 2.0);
    (n + sigma) / (n - 2.0)
        * (ps_minus_p * y * y * (m * y + n - 2.0)
            + sign * x * (1.0 + (p - m) / (sigma + 2.0) * y) * (2.0 * m * y + n - 2.0))
}

/// Normal component of the forward flow across the cylinder at `(X, Y)`.
pub fn cylinder_flow_forward(x: f64, y: f64, exps: &CriticalExponents) -> f64 {
    cylinder_flow(x, y, exps, 1.0)
}

/// Normal component of the extinction flow across the cylinder at `(X, Y)`.
pub fn cylinder_flow_extinction(x: f64, y: f64, exps: &CriticalExponents) -> f64 {
    cylinder_flow(x, y, exps, -1.0)
}

/// Weighted divergence `div(Z^a F)` of the `(T, Z)` system with
/// `a = (3m−p)/(p−m)`.
pub fn dulac_divergence(_t: f64, z: f64, exps: &CriticalExponents) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::InvalidArgument(format!("need Z > 0, got {z}")));
    }
    let pm = exps.p() - exps.m();
    Ok(-exps.gap_s() / pm * z.powf(dulac_exponent(exps)))
}

pub fn dulac_exponent(exps: &CriticalExponents) -> f64 {
    let (m, p) = (exps.m(), exps.p());
    (3.0 * m - p) / (p - m)
}

fn curve_exponent(exps: &CriticalExponents) -> f64 {
    -(exps.n() - 2.0) / (exps.sigma() + 2.0)
}

/// `T²` on the level curve with constant `C` of the `(T, Z)` system at
/// `p = p_s`.
pub fn plane_curve_t2(z: f64, c: f64, exps: &CriticalExponents) -> Result<f64> {
    require_sobolev(exps)?;
    let (m, n, sigma) = (exps.m(), exps.n(), exps.sigma());
    if z < 0.0 || (z == 0.0 && c != 0.0) {
        return Err(Error::InvalidArgument(format!("need Z > 0 (or Z = 0 with C = 0), got {z}")));
    }
    let homog = if c == 0.0 { 0.0 } else { c * (n - 2.0) * z.powf(curve_exponent(exps)) };
    let s2 = (sigma + 2.0) * (sigma + 2.0);
    let t2 = ((n - 2.0) * s2 - 4.0 * m * s2 * z / (n + sigma) + homog) / (n - 2.0);
    if t2 < 0.0 {
        return Err(Error::Domain {
            chart: "PLANE_X0_T",
            reason: format!("no real point of the curve C = {c} at Z = {z}"),
        });
    }
    Ok(t2)
}

/// Constant `C` of the level curve through `(T, Z)`, `Z > 0`, at `p = p_s`.
pub fn plane_curve_constant(t: f64, z: f64, exps: &CriticalExponents) -> Result<f64> {
    require_sobolev(exps)?;
    if !(z > 0.0) {
        return Err(Error::InvalidArgument(format!("need Z > 0, got {z}")));
    }
    let (m, n, sigma) = (exps.m(), exps.n(), exps.sigma());
    let s2 = (sigma + 2.0) * (sigma + 2.0);
    let rest = (n - 2.0) * t * t - (n - 2.0) * s2 + 4.0 * m * s2 * z / (n + sigma);
    Ok(rest / ((n - 2.0) * z.powf(curve_exponent(exps))))
}

/// Quadratic coefficient of the orbit leaving `P0` inside `{X = 0}`.
pub fn p0_expansion_coeff(exps: &CriticalExponents) -> f64 {
    let (n, sigma, p) = (exps.n(), exps.sigma(), exps.p());
    -(n + sigma) * p / (n + 2.0 * sigma + 2.0)
}

/// Second-order approximation of that orbit as a graph `Z(Y)`.
pub fn p0_expansion_z(y: f64, exps: &CriticalExponents) -> f64 {
    -(exps.n() + exps.sigma()) * y + p0_expansion_coeff(exps) * y * y
}

/// First integral of the Sobolev chart.
pub fn sobolev_energy(v: f64, vs: f64, exps: &CriticalExponents) -> Result<f64> {
    exps.require_dimension_3("the Sobolev energy")?;
    if v < 0.0 {
        return Err(Error::InvalidArgument(format!("need v >= 0, got {v}")));
    }
    let (n, sigma) = (exps.n(), exps.sigma());
    Ok(vs * vs - (n - 2.0) * (n - 2.0) * v * v / 4.0
        + (n - 2.0) * v.powf(2.0 * (n + sigma) / (n - 2.0)) / (n + sigma))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExplicitFamily {
    SobolevStationary { c: f64 },
    SingularStationary,
    CylinderOrbit,
    PlaneCurve { c: f64 },
    P0Expansion,
}

impl ExplicitFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ExplicitFamily::SobolevStationary { .. } => "sobolev",
            ExplicitFamily::SingularStationary => "singular",
            ExplicitFamily::CylinderOrbit => "cylinder",
            ExplicitFamily::PlaneCurve { .. } => "curve",
            ExplicitFamily::P0Expansion => "p0",
        }
    }

    /// Builds a family from its name and the constant `C` where needed.
    pub fn parse(name: &str, c: f64) -> Result<Self> {
        Ok(match name {
            "sobolev" => ExplicitFamily::SobolevStationary { c },
            "singular" => ExplicitFamily::SingularStationary,
            "cylinder" => ExplicitFamily::CylinderOrbit,
            "curve" => ExplicitFamily::PlaneCurve { c },
            "p0" => ExplicitFamily::P0Expansion,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown family '{other}' (sobolev, singular, cylinder, curve, p0)"
                )))
            }
        })
    }

    pub fn header(&self) -> &'static str {
        match self {
            ExplicitFamily::SobolevStationary { .. } | ExplicitFamily::SingularStationary => "r,u",
            ExplicitFamily::CylinderOrbit | ExplicitFamily::P0Expansion => "Y,Z",
            ExplicitFamily::PlaneCurve { .. } => "Z,T2",
        }
    }

    pub fn eval(&self, x: f64, exps: &CriticalExponents) -> Result<f64> {
        match *self {
            ExplicitFamily::SobolevStationary { c } => sobolev_stationary(c, x, exps),
            ExplicitFamily::SingularStationary => singular_stationary(x, exps),
            ExplicitFamily::CylinderOrbit => {
                exps.require_dimension_3("the cylinder")?;
                Ok(cylinder_z(x, exps))
            }
            ExplicitFamily::PlaneCurve { c } => plane_curve_t2(x, c, exps),
            ExplicitFamily::P0Expansion => Ok(p0_expansion_z(x, exps)),
        }
    }

    /// Evaluates on `grid` and writes CSV; points outside the domain are
    /// skipped.
    pub fn write_csv<W: Write>(&self, grid: &[f64], exps: &CriticalExponents, mut w: W) -> io::Result<usize> {
        writeln!(w, "{}", self.header())?;
        let mut rows = 0;
        for &x in grid {
            if let Ok(v) = self.eval(x, exps) {
                writeln!(w, "{x:.16e},{v:.16e}")?;
                rows += 1;
            }
        }
        Ok(rows)
    }
}

impl FromStr for ExplicitFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ExplicitFamily::parse(s, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::ParameterSet;
    use crate::integrator::{integrate, EventDirection, EventSpec, IntegratorConfig};
    use crate::phase_systems::{field, ChartId, PhaseState};

    fn at(p: f64, sigma: f64) -> CriticalExponents {
        ParameterSet::new(0.25, 4, sigma, p).unwrap().exponents()
    }

    #[test]
    fn sobolev_values() {
        let e = at(1.75, 4.0);
        assert!((sobolev_stationary(16.0, 0.0, &e).unwrap() - 1.0).abs() < 1e-15);
        assert!(sobolev_stationary(16.0, 1.0, &at(1.8, 4.0)).is_err());
        let (r1, r2) = (1e4, 2e4);
        let slope = (sobolev_stationary(16.0, r2, &e).unwrap() / sobolev_stationary(16.0, r1, &e).unwrap()).ln()
            / 2f64.ln();
        assert!((slope + 8.0).abs() < 1e-6);
        let h = 1e-4;
        let d = (sobolev_stationary(16.0, h, &e).unwrap() - 1.0) / h;
        assert!(d.abs() < 1e-10);
    }

    #[test]
    fn sobolev_pullback_has_zero_energy() {
        let e = at(1.75, 4.0);
        for s in [-3.0, -0.5, 0.0, 0.7, 2.0] {
            let (v, vs) = sobolev_stationary_v(2.5, s, &e).unwrap();
            let scale = vs * vs + v * v;
            assert!(sobolev_energy(v, vs, &e).unwrap().abs() < 1e-13 * scale.max(1e-300));
        }
        assert_eq!(sobolev_energy(0.0, 0.0, &e).unwrap(), 0.0);
        assert!(sobolev_energy(-1.0, 0.0, &e).is_err());
    }

    #[test]
    fn singular_constant() {
        let s = singular_stationary_constant(&at(1.8, 4.0)).unwrap();
        assert!((s.k - 0.999328).abs() < 1e-6, "{}", s.k);
        let e = at(1.8, 4.0);
        for r in [0.5, 1.0, 2.0] {
            let res = stationary_residual(|x| singular_stationary(x, &e).unwrap(), r, &e);
            assert!(res.abs() < 1e-10, "{res}");
        }
        let edge = singular_stationary_constant(&at(1.75, 10.0)).unwrap();
        assert!(edge.degenerate && edge.k == 0.0);
        assert!(singular_stationary_constant(&at(1.5, 10.0)).is_err());
    }

    #[test]
    fn cylinder_shape_and_functionals() {
        let e = at(1.8, 4.0);
        assert_eq!(cylinder_z(0.0, &e), 0.0);
        assert_eq!(cylinder_z(-8.0, &e), 0.0);
        assert!((cylinder_z(-4.0, &e) - 16.0).abs() < 1e-12);
        let es = at(1.75, 4.0);
        for (x, y) in [(0.3, -1.0), (2.0, -4.0), (0.01, -7.5)] {
            let closed = -8.0 * x * (1.0f64 + 0.25 * y).powi(2);
            assert!((cylinder_flow_extinction(x, y, &es) - closed).abs() < 1e-12);
        }
    }

    /// The flow functionals are the normal component of the MAIN fields.
    #[test]
    fn flow_functionals_match_fields() {
        for p in [1.6, 1.75, 1.8] {
            let e = at(p, 4.0);
            for (x, y) in [(0.0, -2.0), (0.5, -3.0), (1.7, -6.5), (3.0, -0.4)] {
                let z = cylinder_z(y, &e);
                let normal = [0.0, 8.0 / 2.0 * (2.0 * 0.25 * y + 2.0), 1.0];
                for (chart, val) in [
                    (ChartId::MainFwd, cylinder_flow_forward(x, y, &e)),
                    (ChartId::MainExt, cylinder_flow_extinction(x, y, &e)),
                ] {
                    let f = field(chart, 0.0, &[x, y, z], &e);
                    let dot: f64 = (0..3).map(|i| normal[i] * f[i]).sum();
                    assert!((dot - val).abs() < 1e-12 * (1.0 + dot.abs()), "{p} {x} {y}: {dot} {val}");
                }
            }
        }
    }

    #[test]
    fn dulac_matches_finite_differences() {
        for p in [1.6, 1.75, 1.8] {
            let e = at(p, 4.0);
            let a = dulac_exponent(&e);
            for (t, z) in [(0.5, 0.3), (-1.0, 2.0), (3.0, 5.0)] {
                let h = 1e-5;
                let g = |tt: f64, zz: f64| {
                    let f = field(ChartId::PlaneX0T, 0.0, &[tt, zz, 0.0], &e);
                    (zz.powf(a) * f[0], zz.powf(a) * f[1])
                };
                let div = (g(t + h, z).0 - g(t - h, z).0) / (2.0 * h) + (g(t, z + h).1 - g(t, z - h).1) / (2.0 * h);
                let d = dulac_divergence(t, z, &e).unwrap();
                let scale = z.powf(a) * (1.0 + t.abs());
                assert!((div - d).abs() < 1e-6 * scale, "{p}: {div} vs {d}");
            }
            if p == 1.75 {
                assert_eq!(dulac_divergence(1.0, 1.0, &e).unwrap(), 0.0);
            }
        }
        assert!(dulac_divergence(0.0, 0.0, &at(1.8, 4.0)).is_err());
    }

    #[test]
    fn plane_curve_limits() {
        let e = at(1.75, 4.0);
        assert!((plane_curve_t2(0.0, 0.0, &e).unwrap() - 36.0).abs() < 1e-12);
        assert!(plane_curve_t2(16.0, 0.0, &e).unwrap().abs() < 1e-12);
        assert!(plane_curve_t2(20.0, 0.0, &e).is_err());
        assert!(plane_curve_t2(1.0, 0.0, &at(1.8, 4.0)).is_err());
    }

    #[test]
    fn plane_curve_constant_is_conserved() {
        // σ ≠ N, so the homogeneous exponent matters.
        for sigma in [4.0, 10.0] {
            let e = at(0.25 * (2.0 * sigma + 6.0) / 2.0, sigma);
            let s0 = PhaseState::new(ChartId::PlaneX0T, &[1.0, 2.0], 0.0);
            let c0 = plane_curve_constant(1.0, 2.0, &e).unwrap();
            let tr = integrate(&s0, &e, &IntegratorConfig::default().with_span(5.0), &[]).unwrap();
            for (_, c) in &tr.samples {
                let ci = plane_curve_constant(c[0], c[1], &e).unwrap();
                assert!((ci - c0).abs() < 1e-8 * (1.0 + c0.abs()), "{sigma}: {ci} vs {c0}");
            }
        }
    }

    #[test]
    fn periodic_orbit_closes() {
        let e = at(1.75, 4.0);
        let t0 = 1.0;
        let z0 = 2.0;
        assert!(plane_curve_constant(t0, z0, &e).unwrap() < 0.0);
        let ev = EventSpec::crossing("return", 1, z0, EventDirection::Rising, true);
        let s0 = PhaseState::new(ChartId::PlaneX0T, &[t0, z0], 0.0);
        let tr = integrate(&s0, &e, &IntegratorConfig::default().with_span(100.0), &[ev]).unwrap();
        let hit = tr.terminal_event().expect("orbit returns");
        assert!((hit.state.coords[0] - t0).abs() < 1e-6);
    }

    #[test]
    fn p0_expansion_properties() {
        let lo = at(1.6, 4.0);
        let hi = at(1.9, 4.0);
        assert_eq!(p0_expansion_z(0.0, &lo), 0.0);
        let h = 1e-7;
        assert!(((p0_expansion_z(h, &lo) - p0_expansion_z(-h, &lo)) / (2.0 * h) + 8.0).abs() < 1e-8);
        assert!(p0_expansion_coeff(&hi) < p0_expansion_coeff(&lo));
        let es = at(1.75, 4.0);
        // At p = p_s the expansion is the Taylor polynomial of the cylinder.
        assert!((p0_expansion_coeff(&es) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_emission() {
        let e = at(1.75, 4.0);
        let mut out = Vec::new();
        let fam = ExplicitFamily::parse("sobolev", 16.0).unwrap();
        let rows = fam.write_csv(&[0.0, 1.0, 2.0], &e, &mut out).unwrap();
        assert_eq!(rows, 3);
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("r,u\n0.0000000000000000e0,1.0000000000000000e0\n"));
        assert!(ExplicitFamily::parse("nope", 1.0).is_err());
    }
}
