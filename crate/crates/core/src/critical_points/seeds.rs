//! Initial states on local stable/unstable manifolds.

use serde::Serialize;

use super::{center_manifold_point, position, PointId};
use crate::error::{Error, Result};
use crate::exponents::CriticalExponents;
use crate::phase_systems::{field_jacobian, ChartId, PhaseState, System};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SeedBranch {
    /// Forward unstable manifold of `P0`, parameter `C`.
    P0Unstable,
    /// Extinction unstable manifold of `P0`, parameter `K`.
    P0ExtUnstable,
    /// The orbit inside `{X = 0}` leaving `P0`; the `K → ∞` limit.
    P0PlaneX0,
    /// Two-dimensional stable manifold of `P1`, parameter `C` in
    /// `Z ~ C X^κ`, `κ = (N−2)(p−p_c)/(N(m_c−m))`.
    P1Stable,
    /// The unique orbit leaving `P3` into `{Z > 0}` (extinction).
    P3Unstable,
    /// Forward center manifold of `Q1`, parameter `z/x`.
    Q1Center,
}

impl SeedBranch {
    pub fn label(self) -> &'static str {
        match self {
            SeedBranch::P0Unstable => "P0-unstable(C)",
            SeedBranch::P0ExtUnstable => "P0-ext-unstable(K)",
            SeedBranch::P0PlaneX0 => "P0-plane-X0",
            SeedBranch::P1Stable => "P1-stable(C)",
            SeedBranch::P3Unstable => "P3-unstable",
            SeedBranch::Q1Center => "Q1-center(z/x)",
        }
    }

    pub fn point(self) -> PointId {
        match self {
            SeedBranch::P0Unstable | SeedBranch::P0ExtUnstable | SeedBranch::P0PlaneX0 => PointId::P0,
            SeedBranch::P1Stable => PointId::P1,
            SeedBranch::P3Unstable => PointId::P3,
            SeedBranch::Q1Center => PointId::Q1,
        }
    }

    /// Whether the seeded orbit approaches its point in forward time, so the
    /// rest of it is reached by integrating backward.
    pub fn is_stable(self) -> bool {
        self == SeedBranch::P1Stable
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldSeed {
    pub branch: SeedBranch,
    pub system: System,
    pub parameter: f64,
    pub eps: f64,
    pub state: PhaseState,
}

/// `C = Z/X^{(σ+2)/2}` along the orbit of the profile with `f(0) = A`.
pub fn amplitude_to_parameter(amplitude: f64, exps: &CriticalExponents) -> f64 {
    let (m, sigma) = (exps.m(), exps.sigma());
    m.powf(sigma / 2.0) * exps.alpha.powf(-(sigma + 2.0) / 2.0) * amplitude.powf(exps.l / 2.0)
}

pub fn parameter_to_amplitude(c: f64, exps: &CriticalExponents) -> f64 {
    let (m, sigma) = (exps.m(), exps.sigma());
    (c / (m.powf(sigma / 2.0) * exps.alpha.powf(-(sigma + 2.0) / 2.0))).powf(2.0 / exps.l)
}

fn p0_x(c: f64, eps: f64, sigma: f64) -> f64 {
    if c > 0.0 {
        eps.min((eps / c).powf(2.0 / (sigma + 2.0)))
    } else {
        eps
    }
}

/// Initial state at distance of order `eps` from the point on the chosen
/// manifold branch. `parameter` is the branch parameter (`C`, `K` or `z/x`);
/// it is ignored by the one-orbit branches.
pub fn seed(
    branch: SeedBranch,
    system: System,
    parameter: f64,
    eps: f64,
    exps: &CriticalExponents,
) -> Result<ManifoldSeed> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("seed offset must be positive, got {eps}")));
    }
    if !parameter.is_finite() || parameter < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "branch parameter must be finite and nonnegative, got {parameter}"
        )));
    }
    let (m, n, sigma) = (exps.m(), exps.n(), exps.sigma());
    let wrong = |what: &str| Err(Error::Branch(format!("{}: {what}", branch.label())));
    let state = match branch {
        SeedBranch::P0Unstable => {
            if system != System::Forward {
                return wrong("forward system only");
            }
            let x = p0_x(parameter, eps, sigma);
            let z = parameter * x.powf((sigma + 2.0) / 2.0);
            PhaseState::new(ChartId::MainFwd, &[x, x / n, z], 0.0)
        }
        SeedBranch::P0ExtUnstable => {
            if system != System::Extinction {
                return wrong("extinction system only");
            }
            let x = p0_x(parameter, eps, sigma);
            let z = parameter * x.powf((sigma + 2.0) / 2.0);
            PhaseState::new(ChartId::MainExt, &[x, -x / n - z / (n + sigma), z], 0.0)
        }
        SeedBranch::P0PlaneX0 => {
            let norm = (1.0 + (n + sigma).powi(2)).sqrt();
            PhaseState::new(ChartId::PlaneX0, &[-eps / norm, (n + sigma) * eps / norm], 0.0)
        }
        SeedBranch::P1Stable => {
            exps.require_dimension_3("P1 stable manifold")?;
            let gap_c = exps.gap_c();
            let lambda1 = (m * n - n + 2.0) / m;
            if !(lambda1 < 0.0 && gap_c > 0.0) {
                return wrong("needs m < m_c and p > p_c for a two-dimensional stable manifold");
            }
            let s = system.sign();
            let y1 = -(n - 2.0) / m;
            let j21 = s * (1.0 + exps.b() * y1);
            let v1 = -j21 / ((n - 2.0) - lambda1);
            let v3 = 1.0 / ((n - 2.0) + gap_c / m);
            let kappa = gap_c / (n - 2.0 - m * n);
            let x = if parameter > 0.0 {
                eps.min((eps / parameter).powf(1.0 / kappa))
            } else {
                eps
            };
            let z = parameter * x.powf(kappa);
            PhaseState::new(ChartId::main(system), &[x, y1 + v1 * x + v3 * z, z], 0.0)
        }
        SeedBranch::P3Unstable => {
            if system != System::Extinction {
                return wrong("extinction system only");
            }
            if !(exps.l < 0.0 && m < exps.m_c) {
                return wrong("needs m < m_c");
            }
            let (_, p3) = position(PointId::P3, exps, system).expect("P3 has a chart");
            let j = field_jacobian(ChartId::MainExt, 0.0, &p3, exps);
            let lambda = -exps.l / (1.0 - m);
            let vy = 1.0 / (j[1][0] * j[0][1] / lambda + j[1][1] - lambda);
            let vx = j[0][1] * vy / lambda;
            let norm = (vx * vx + vy * vy + 1.0).sqrt();
            let c = [p3[0] + eps * vx / norm, p3[1] + eps * vy / norm, eps / norm];
            PhaseState::new(ChartId::MainExt, &c, 0.0)
        }
        SeedBranch::Q1Center => {
            if system != System::Forward {
                return wrong("forward system only");
            }
            let c = center_manifold_point(PointId::Q1, exps, eps, parameter * eps)?;
            PhaseState::new(ChartId::InfxFwd, &c, 0.0)
        }
    };
    if state.coords.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{} seed", branch.label())));
    }
    Ok(ManifoldSeed {
        branch,
        system,
        parameter,
        eps,
        state,
    })
}
