//! Self-checks of the library against exact or independent oracles:
//! closed forms, finite differences, first integrals and direct integration
//! of the profile equation.

use std::time::Instant;

use serde::Serialize;

use crate::critical_points::{closed_form_eigenvalues, parameter_to_amplitude, point_info, PointId};
use crate::error::Result;
use crate::explicit_solutions::{
    cylinder_functional, cylinder_z, dulac_divergence, dulac_exponent, plane_curve_constant, singular_stationary,
    sobolev_energy, sobolev_stationary, stationary_residual,
};
use crate::exponents::{CriticalExponents, ParameterSet};
use crate::integrator::{integrate, integrate_profile, IntegratorConfig};
use crate::phase_systems::{field, jacobian, ChartId, JacobianMode, PhaseState, ProfileSample, System};
use crate::shooting::{
    estimate_p0, find_extinction_fast_connection, find_extinction_slow_connection, find_forward_fast_connection,
    find_forward_slow_connection, follow_extinction, follow_forward, log_grid, profile_value, shoot_p3_orbit,
    ClassifyOptions, OrbitClass, ShootOptions, TurnMode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Fast,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub level: Level,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn timed(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    let t = Instant::now();
    let (passed, detail) = match f() {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    Check { name: name.into(), passed, detail, seconds: t.elapsed().as_secs_f64() }
}

fn at(m: f64, sigma: f64, p: f64) -> Result<CriticalExponents> {
    Ok(ParameterSet::new(m, 4, sigma, p)?.exponents())
}

/// Deterministic low-discrepancy point of the unit cube.
fn halton(i: usize, base: usize) -> f64 {
    let (mut f, mut r, mut k) = (1.0, 0.0, i + 1);
    while k > 0 {
        f /= base as f64;
        r += f * (k % base) as f64;
        k /= base;
    }
    r
}

/// `n` parameter sets with `p > max(1, p_c)` and `L < 0`.
pub fn admissible_sets(n: usize) -> Vec<CriticalExponents> {
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while out.len() < n {
        let m = 0.05 + 0.9 * halton(i, 2);
        let dim = 3 + (halton(i, 3) * 6.0) as u32;
        let sigma = 0.1 + 11.9 * halton(i, 5);
        let t = 0.01 + 0.98 * halton(i, 7);
        i += 1;
        let p_l = 1.0 + sigma * (1.0 - m) / 2.0;
        let lo = 1f64.max(m * (dim as f64 + sigma) / (dim as f64 - 2.0));
        if lo >= p_l {
            continue;
        }
        if let Ok(ps) = ParameterSet::new(m, dim, sigma, lo + t * (p_l - lo)) {
            out.push(ps.exponents());
        }
    }
    out
}

/// Exponent values that the closed forms must reproduce exactly.
pub fn check_exponents() -> Check {
    timed("exponents", || {
        let a = at(0.25, 4.0, 1.8)?;
        let b = at(0.25, 10.0, 3.5)?;
        let exact = |v: f64, w: f64| (v - w).abs() <= 1e-12;
        let ok = exact(a.p_s.as_f64(), 1.75)
            && exact(b.p_s.as_f64(), 3.25)
            && exact(b.p_l, 4.75)
            && exact(a.p_c.as_f64(), 1.0)
            && exact(b.p_c.as_f64(), 1.75);
        let mut worst: f64 = 0.0;
        for e in admissible_sets(100) {
            let (m, s, p) = (e.m(), e.sigma(), e.p());
            // u = t^α f(|x| t^β) balances u_t, Δu^m and |x|^σ u^p.
            worst = worst.max((e.alpha - 1.0 - (m * e.alpha + 2.0 * e.beta)).abs());
            worst = worst.max((e.alpha - 1.0 - (p * e.alpha - s * e.beta)).abs());
        }
        Ok((ok && worst < 1e-10, format!("p_s(σ=4) = {}, p_s(σ=10) = {}, p_L(σ=10) = {}, scaling defect {worst:.1e}",
            a.p_s, b.p_s, b.p_l)))
    })
}

/// Closed-form eigenvalues against the eigensolver on `sets` parameter sets.
/// `perturb` modifies the exponents fed to the closed forms only, so a
/// wrong formula shows up as a mismatch.
pub fn check_eigenvalues_with(sets: usize, perturb: impl Fn(&mut CriticalExponents)) -> Check {
    timed("eigenvalues", || {
        let mut worst: f64 = 0.0;
        let mut compared = 0;
        for e in admissible_sets(sets) {
            let mut mutated = e;
            perturb(&mut mutated);
            for system in [System::Forward, System::Extinction] {
                for id in [PointId::P0, PointId::P1, PointId::P2, PointId::P3, PointId::Q5] {
                    let info = point_info(id, &e, system);
                    let (Some(eig), Some(cf)) = (info.eigen.filter(|_| info.exists), closed_form_eigenvalues(id, &mutated, system)) else {
                        continue;
                    };
                    for (a, b) in cf.iter().zip(&eig.values) {
                        worst = worst.max((a - b).norm() / (1.0 + a.norm()));
                    }
                    compared += 1;
                }
            }
        }
        Ok((worst <= 1e-10, format!("{compared} spectra, worst relative mismatch {worst:.1e}")))
    })
}

pub fn check_eigenvalues(sets: usize) -> Check {
    check_eigenvalues_with(sets, |_| {})
}

/// Interior state of `chart` from a point of the unit cube.
fn sample_state(chart: ChartId, u: [f64; 3]) -> PhaseState {
    let c = match chart {
        ChartId::ProfileFwd | ChartId::ProfileExt => [0.2 + 2.0 * u[0], -1.0 + 2.0 * u[1], 0.0],
        ChartId::SobolevV => [0.05 + 1.5 * u[0], -1.0 + 2.0 * u[1], 0.0],
        _ => [0.05 + 3.0 * u[0], -4.0 + 5.0 * u[1], 0.05 + 3.0 * u[2]],
    };
    let indep = match chart {
        ChartId::ProfileFwd | ChartId::ProfileExt => 0.3 + 2.0 * u[2],
        _ => 0.0,
    };
    PhaseState::new(chart, &c, indep)
}

/// Analytic Jacobians of every chart against central differences.
pub fn check_jacobians(points: usize) -> Check {
    timed("jacobians", || {
        let mut worst: f64 = 0.0;
        for e in [at(0.25, 4.0, 1.8)?, at(0.25, 10.0, 3.0)?, at(0.25, 4.0, 1.75)?] {
            for i in 0..points {
                let u = [halton(i, 2), halton(i, 3), halton(i, 5)];
                for chart in ChartId::ALL {
                    let s = sample_state(chart, u);
                    let a = jacobian(&s, &e, JacobianMode::Analytic)?;
                    let f = jacobian(&s, &e, JacobianMode::FiniteDifference)?;
                    for r in 0..3 {
                        for c in 0..3 {
                            worst = worst.max((a[r][c] - f[r][c]).abs() / (1.0 + a[r][c].abs()));
                        }
                    }
                }
            }
        }
        Ok((worst < 1e-5, format!("{} charts, worst scaled difference {worst:.1e}", ChartId::ALL.len())))
    })
}

/// Stationary solutions at `p = p_s` and the singular one solve the radial
/// stationary equation.
pub fn check_stationary_residuals() -> Check {
    timed("stationary residuals", || {
        let ps = at(0.25, 4.0, 1.75)?;
        let sing = at(0.25, 4.0, 1.8)?;
        let mut worst: f64 = 0.0;
        for r in log_grid(1e-2, 1e2, 50) {
            for c in [0.5, 16.0] {
                worst = worst.max(stationary_residual(|x| sobolev_stationary(c, x, &ps).unwrap_or(f64::NAN), r, &ps).abs());
            }
            worst = worst.max(stationary_residual(|x| singular_stationary(x, &sing).unwrap_or(f64::NAN), r, &sing).abs());
        }
        Ok((worst < 1e-8, format!("worst scaled residual {worst:.1e}")))
    })
}

/// Flow invariance of the cylinder at `p = p_s`, for an orbit of the
/// `X = 0` plane started on it and followed over `span` units. The cylinder
/// is the zero set of the first integral of the plane, so the drift of that
/// integral measures invariance. Pointwise, the orbit runs into the saddle
/// `P1`, which amplifies rounding across the cylinder like `e^{(N−2)η}`;
/// the time it stays within `1e-8` of the cylinder is reported as well.
pub fn cylinder_invariance(span: f64) -> Result<(f64, f64)> {
    let e = at(0.25, 4.0, 1.75)?;
    let scale = (e.sigma() + 2.0).powi(2);
    let (mut drift, mut pointwise): (f64, f64) = (0.0, f64::INFINITY);
    for y in [-0.5, -2.0, -6.0] {
        let s0 = PhaseState::new(ChartId::PlaneX0, &[y, cylinder_z(y, &e)], 0.0);
        let cfg = IntegratorConfig { rel_tol: 1e-12, abs_tol: 1e-14, ..IntegratorConfig::default() }.with_span(span);
        let tr = integrate(&s0, &e, &cfg, &[])?;
        let mut left = f64::INFINITY;
        for (eta, c) in &tr.samples {
            if c[1] > 0.0 {
                let t = e.sigma() + 2.0 + (e.p() - e.m()) * c[0];
                drift = drift.max(plane_curve_constant(t, c[1], &e)?.abs() / scale);
            }
            if left.is_infinite() && cylinder_functional(c[0], c[1], &e).abs() > 1e-8 * (1.0 + c[1].abs()) {
                left = *eta;
            }
        }
        pointwise = pointwise.min(left);
    }
    Ok((drift, pointwise))
}

pub fn check_cylinder_invariance() -> Check {
    timed("cylinder invariance", || {
        let (drift, pointwise) = cylinder_invariance(50.0)?;
        Ok((drift < 1e-8, format!("first-integral drift {drift:.1e} over 50 units; pointwise within 1e-8 for {pointwise:.2} units")))
    })
}

/// The Dulac function makes the weighted divergence of the `(T, Z)` field
/// one-signed off `p_s`; the divergence is taken by central differences.
pub fn check_dulac(points: usize) -> Check {
    timed("dulac sign", || {
        let mut bad = 0;
        let mut worst: f64 = 0.0;
        for p in [1.6, 1.9] {
            let e = at(0.25, 4.0, p)?;
            let a = dulac_exponent(&e);
            let weighted = |t: f64, z: f64| {
                let f = field(ChartId::PlaneX0T, 0.0, &[t, z, 0.0], &e);
                [z.powf(a) * f[0], z.powf(a) * f[1]]
            };
            let sign = -e.gap_s().signum();
            for i in 0..points {
                let t = -10.0 + 20.0 * halton(i, 2);
                let z = 0.01 + 10.0 * halton(i, 3);
                let h = 1e-5 * (1.0 + z);
                let div = (weighted(t + h, z)[0] - weighted(t - h, z)[0]) / (2.0 * h)
                    + (weighted(t, z + h)[1] - weighted(t, z - h)[1]) / (2.0 * h);
                if div.signum() != sign {
                    bad += 1;
                }
                let exact = dulac_divergence(t, z, &e)?;
                worst = worst.max((div - exact).abs() / (1.0 + exact.abs()));
            }
        }
        Ok((bad == 0 && worst < 1e-5, format!("{bad} sign changes, worst difference {worst:.1e}")))
    })
}

/// First integral of the stationary equation at `p = p_s`, conserved along
/// integrated orbits of the Sobolev chart.
pub fn check_sobolev_energy() -> Check {
    timed("sobolev energy", || {
        let e = at(0.25, 4.0, 1.75)?;
        let mut worst: f64 = 0.0;
        for (v, vs) in [(0.5, 0.0), (0.9, 0.1), (0.3, -0.2)] {
            let e0 = sobolev_energy(v, vs, &e)?;
            let s0 = PhaseState::new(ChartId::SobolevV, &[v, vs], 0.0);
            let cfg = IntegratorConfig { rel_tol: 1e-12, abs_tol: 1e-14, ..IntegratorConfig::default() }.with_span(20.0);
            let tr = integrate(&s0, &e, &cfg, &[])?;
            for (_, c) in &tr.samples {
                worst = worst.max((sobolev_energy(c[0], c[1], &e)? - e0).abs());
            }
        }
        Ok((worst < 1e-8, format!("max energy drift {worst:.1e} over s in [0, 20]")))
    })
}

/// Largest vertical gap, in `(ln ξ, ln f)`, between two sampled profiles
/// over their common range. It bounds the Hausdorff distance of the curves.
pub fn profile_gap(a: &[ProfileSample], b: &[ProfileSample], slope: f64) -> f64 {
    let lo = a[0].xi.max(b[0].xi);
    let hi = a[a.len() - 1].xi.min(b[b.len() - 1].xi);
    let one_way = |u: &[ProfileSample], v: &[ProfileSample]| {
        u.iter()
            .filter(|s| s.xi >= lo && s.xi <= hi)
            .map(|s| (s.f.ln() - profile_value(v, slope, s.xi).0.ln()).abs())
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// The same orbit computed twice: in `η` through the phase system and in
/// `ξ` through the profile equation.
pub fn check_dual_integration() -> Check {
    timed("dual integration", || {
        let cfg = IntegratorConfig { rel_tol: 1e-12, ..IntegratorConfig::default() };
        let mut worst: f64 = 0.0;
        for (system, e) in [(System::Forward, at(0.25, 4.0, 1.8)?), (System::Extinction, at(0.25, 10.0, 3.0)?)] {
            let k = 1.0;
            let report = match system {
                System::Forward => follow_forward(k, &e, &cfg, &ClassifyOptions::default())?,
                System::Extinction => follow_extinction(k, &e, &cfg, &ClassifyOptions::default(), TurnMode::Full)?,
            };
            let phase = crate::shooting::reconstruct_profile(&report.trajectory, &e, None)?;
            let phase: Vec<ProfileSample> = phase.into_iter().filter(|s| s.xi <= 3.0).collect();
            let direct = integrate_profile(parameter_to_amplitude(k, &e), &e, system, &cfg, 1e-300, 3.0)?.samples;
            let direct: Vec<ProfileSample> = direct.into_iter().filter(|s| s.xi >= 10.0 * phase[0].xi).collect();
            worst = worst.max(profile_gap(&phase, &direct, e.fast_slope()));
        }
        Ok((worst < 1e-6, format!("max gap in (ln ξ, ln f) {worst:.1e}")))
    })
}

/// Identical inputs give byte-identical outputs.
pub fn check_determinism() -> Check {
    timed("determinism", || {
        let e = at(0.25, 4.0, 1.8)?;
        let run = || -> Result<Vec<u8>> {
            let r = follow_forward(30.0, &e, &IntegratorConfig::default(), &ClassifyOptions::default())?;
            let mut buf = Vec::new();
            r.trajectory.write_csv(&mut buf).expect("writing to memory");
            Ok(buf)
        };
        let (a, b) = (run()?, run()?);
        Ok((a == b, format!("{} bytes per run", a.len())))
    })
}

/// Extinction orbits for `p > p_s` stay inside the cylinder and never come
/// near `P1`.
pub fn check_cylinder_sign() -> Check {
    timed("cylinder sign above p_s", || {
        let e = at(0.25, 4.0, 1.8)?;
        let opts = ShootOptions::default();
        let mut max_g = f64::NEG_INFINITY;
        let mut min_p1 = f64::INFINITY;
        for k in opts.scan_grid() {
            let r = follow_extinction(k, &e, &IntegratorConfig::default(), &opts.classify, TurnMode::Full)?;
            max_g = max_g.max(r.max_cylinder);
            min_p1 = min_p1.min(r.min_dist_p1);
        }
        Ok((max_g < 0.0 && min_p1 > opts.classify.delta_p1,
            format!("max cylinder functional {max_g:.2e}, closest approach to P1 {min_p1:.2e}")))
    })
}

fn connection_check(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    timed(name, f)
}

/// Everything the shooting layer promises at the reference parameters.
pub fn check_connections() -> Vec<Check> {
    let cfg = IntegratorConfig::default();
    let opts = ShootOptions::default();
    vec![
        connection_check("forward fast connection", || {
            let e = at(0.25, 4.0, 1.8)?;
            let r = find_forward_fast_connection(&e, &cfg, &opts, None)?;
            let w = r.relative_width().unwrap_or(f64::INFINITY);
            Ok((r.min_dist_p1() < 1e-3 && w <= 1e-10 && r.tail.rel_dev < 0.05,
                format!("C = {:.10}, width {w:.1e}, P1 distance {:.1e}, tail {:.5}", r.param_value, r.min_dist_p1(), r.tail.slope)))
        }),
        connection_check("forward slow connection", || {
            let e = at(0.25, 4.0, 1.8)?;
            let r = find_forward_slow_connection(&e, &cfg, &opts)?;
            Ok((r.tail.rel_dev < 0.05, format!("C = {:e}, tail {:.5} (target {:.5})", r.param_value, r.tail.slope, r.tail.target)))
        }),
        connection_check("extinction fast connection", || {
            let e = at(0.25, 10.0, 3.0)?;
            let r = find_extinction_fast_connection(&e, &cfg, &opts, None)?;
            let dec = r.profile.windows(2).all(|w| w[1].f <= w[0].f);
            Ok((r.min_dist_p1() < 1e-3 && dec && r.tail.rel_dev < 0.05,
                format!("K = {:.10}, P1 distance {:.1e}, decreasing {dec}, tail {:.5}", r.param_value, r.min_dist_p1(), r.tail.slope)))
        }),
        connection_check("extinction slow connection", || {
            let e = at(0.25, 4.0, 1.8)?;
            let r = find_extinction_slow_connection(&e, &cfg, &opts)?;
            Ok((r.tail.rel_dev < 0.05, format!("K = {:e}, tail {:.5}", r.param_value, r.tail.slope)))
        }),
        connection_check("P3 orbit", || {
            let e = at(0.25, 4.0, 1.001)?;
            let r = shoot_p3_orbit(&e, &cfg, &opts.classify)?;
            let dev = (r.head.slope - r.head.target).abs() / r.head.target.abs();
            Ok((r.report.class == OrbitClass::ToQ3 && dev < 0.02,
                format!("{}, head slope {:.5} (target {:.5})", r.report.class, r.head.slope, r.head.target)))
        }),
        connection_check("p0 estimate", || {
            let params = ParameterSet::new(0.25, 4, 4.0, 1.5)?;
            let est = estimate_p0(&params, &cfg, &opts, 32, 6)?;
            Ok(match est.interval {
                Some([a, b]) => (a > 1.0 && b < 1.75 && a < b, format!("p0 in [{a:.6}, {b:.6}]")),
                None => (false, "no grid point admits a connection".into()),
            })
        }),
    ]
}

/// Runs the suite. The fast level covers the closed-form, finite-difference
/// and first-integral oracles; the full level adds the connections.
pub fn run(level: Level) -> Report {
    let mut checks = vec![
        check_exponents(),
        check_eigenvalues(100),
        check_jacobians(if level == Level::Full { 200 } else { 20 }),
        check_stationary_residuals(),
        check_cylinder_invariance(),
        check_dulac(if level == Level::Full { 10_000 } else { 1000 }),
        check_sobolev_energy(),
        check_determinism(),
    ];
    if level == Level::Full {
        checks.push(check_dual_integration());
        checks.push(check_cylinder_sign());
        checks.extend(check_connections());
    }
    Report { level, checks }
}
