//! Finite and infinite critical points of the phase systems: locations,
//! linearizations, stability, center-manifold expansions and the local
//! manifold seeds that start every orbit computation.

mod eigen;
mod seeds;

pub use eigen::{eig3, Eigen};
pub use seeds::{amplitude_to_parameter, parameter_to_amplitude, seed, ManifoldSeed, SeedBranch};

use num_complex::Complex64;
use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::CriticalExponents;
use crate::phase_systems::{field_jacobian, ChartId, Mat3, System, Vec3};

/// Distance to a critical threshold below which a point is flagged as a
/// critical (degenerate) case.
pub const DEGENERATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointId {
    P0,
    P1,
    P2,
    P3,
    Q1,
    Q2,
    Q3,
    Q4,
    Q5,
    QGamma,
    Q1Prime,
    Q5Prime,
}

impl PointId {
    pub const ALL: [PointId; 12] = [
        PointId::P0,
        PointId::P1,
        PointId::P2,
        PointId::P3,
        PointId::Q1,
        PointId::Q2,
        PointId::Q3,
        PointId::Q4,
        PointId::Q5,
        PointId::QGamma,
        PointId::Q1Prime,
        PointId::Q5Prime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PointId::P0 => "P0",
            PointId::P1 => "P1",
            PointId::P2 => "P2",
            PointId::P3 => "P3",
            PointId::Q1 => "Q1",
            PointId::Q2 => "Q2",
            PointId::Q3 => "Q3",
            PointId::Q4 => "Q4",
            PointId::Q5 => "Q5",
            PointId::QGamma => "Q_gamma",
            PointId::Q1Prime => "Q1'",
            PointId::Q5Prime => "Q5'",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Saddle,
    SaddleFocus,
    StableNode,
    UnstableNode,
    StableFocus,
    UnstableFocus,
    Center,
    Nonhyperbolic,
}

impl Stability {
    pub fn is_attracting(self) -> bool {
        matches!(self, Stability::StableNode | Stability::StableFocus)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPointInfo {
    pub id: PointId,
    pub system: System,
    /// Chart in which the point sits at a finite position.
    pub chart: Option<ChartId>,
    pub coords: Option<Vec3>,
    pub exists: bool,
    /// Jacobian in the orientation of the original `η` flow.
    pub linearization: Option<Mat3>,
    pub eigen: Option<Eigen>,
    pub stability: Option<Stability>,
    /// Parameters sit on a critical threshold for this point.
    pub degenerate: bool,
    /// Qualitative role of the point for the profiles.
    pub note: &'static str,
}

impl Serialize for CriticalPointInfo {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(8))?;
        map.serialize_entry("id", self.id.name())?;
        map.serialize_entry("chart", &self.chart.map(|c| c.name()))?;
        let coords = self.coords.zip(self.chart).map(|(c, ch)| c[..ch.dim()].to_vec());
        map.serialize_entry("coords", &coords)?;
        map.serialize_entry("exists", &self.exists)?;
        let eig: Option<Vec<[f64; 2]>> = self
            .eigen
            .as_ref()
            .map(|e| e.values.iter().map(|v| [v.re, v.im]).collect());
        map.serialize_entry("eigenvalues", &eig)?;
        map.serialize_entry("stability", &self.stability)?;
        map.serialize_entry("degenerate", &self.degenerate)?;
        map.serialize_entry("lemma", self.note)?;
        map.end()
    }
}

/// Position of `id` for `system`, with the chart where it is finite.
pub fn position(id: PointId, exps: &CriticalExponents, system: System) -> Option<(ChartId, Vec3)> {
    let (m, n, sigma, p) = (exps.m(), exps.n(), exps.sigma(), exps.p());
    let s = system.sign();
    let main = ChartId::main(system);
    Some(match id {
        PointId::P0 => (main, [0.0; 3]),
        PointId::P1 => (main, [0.0, -(n - 2.0) / m, 0.0]),
        PointId::P2 => (
            main,
            [
                0.0,
                -(sigma + 2.0) / (p - m),
                (sigma + 2.0) * exps.gap_c() / ((p - m) * (p - m)),
            ],
        ),
        PointId::P3 => {
            let x = 2.0 * (sigma + 2.0) * (m * n - n + 2.0) / (exps.l * (1.0 - m));
            (main, [-s * x, -2.0 / (1.0 - m), 0.0])
        }
        PointId::Q1 => (ChartId::infx(system), [0.0; 3]),
        PointId::Q5 => (ChartId::infx(system), [0.0, s * exps.b(), 0.0]),
        PointId::Q2 | PointId::Q3 => (ChartId::infy(system), [0.0; 3]),
        PointId::Q1Prime => (ChartId::w(system), [0.0; 3]),
        PointId::Q5Prime => (ChartId::w(system), [0.0, s * exps.b(), 0.0]),
        PointId::Q4 | PointId::QGamma => return None,
    })
}

fn exists(id: PointId, exps: &CriticalExponents, system: System) -> bool {
    match id {
        PointId::P1 => exps.params.n != 2,
        PointId::P2 => exps.p2_exists(),
        PointId::P3 => {
            exps.l < 0.0
                && match system {
                    System::Extinction => exps.m() <= exps.m_c,
                    System::Forward => exps.m() >= exps.m_c,
                }
        }
        _ => true,
    }
}

fn note(id: PointId, system: System) -> &'static str {
    match (id, system) {
        (PointId::P0, _) => "profiles with f(0) > 0 and f'(0) = 0 leave along the unstable manifold",
        (PointId::P1, _) => "fast decay f ~ xi^(-(N-2)/m) on the stable manifold",
        (PointId::P2, _) => "slow decay f ~ xi^(-(sigma+2)/(p-m)); center in X = 0 at p = p_s",
        (PointId::P3, System::Extinction) => "vertical asymptote f ~ xi^(-2/(1-m)); one orbit leaves into Z > 0",
        (PointId::P3, System::Forward) => "vertical asymptote f ~ xi^(-2/(1-m)), forward system with m >= m_c",
        (PointId::Q1, System::Forward) => "nonhyperbolic; unstable center manifold, behaves like an unstable node",
        (PointId::Q1, System::Extinction) => "nonhyperbolic saddle; unstable center manifold",
        (PointId::Q2, _) => "Y = +infinity; unstable node",
        (PointId::Q3, _) => "Y = -infinity; stable node, profiles vanishing with nonzero slope",
        (PointId::Q4, _) => "Z = infinity; orbits reaching it are not profiles, no finite chart here",
        (PointId::Q5, _) => "profiles changing sign or with a vertical asymptote at the origin",
        (PointId::QGamma, _) => "line (0, 0, kappa) of the x-chart; connections lie in {x = 0}",
        (PointId::Q1Prime, _) => "nonhyperbolic; reduced flow on the center manifold decides the sector",
        (PointId::Q5Prime, _) => "copy of Q5 in the w = xz chart",
    }
}

fn degenerate(id: PointId, exps: &CriticalExponents) -> bool {
    let near = |t: Option<f64>, v: f64| t.map_or(false, |t| (t - v).abs() < DEGENERATE_TOL);
    let p = exps.p();
    let m_crit = (exps.m() - exps.m_c).abs() < DEGENERATE_TOL;
    match id {
        PointId::P1 => m_crit || near(exps.p_c.finite(), p),
        PointId::P2 => near(exps.p_c.finite(), p) || near(exps.p_s.finite(), p),
        PointId::P3 => m_crit,
        PointId::Q5Prime | PointId::Q1Prime => (exps.m() + p - 2.0).abs() < DEGENERATE_TOL,
        _ => false,
    }
}

/// Classifies a point from the eigenvalues of its `η`-oriented linearization.
pub fn stability_from_eigen(eigen: &Eigen) -> Stability {
    let scale = eigen.values.iter().map(|v| v.norm()).fold(1.0f64, f64::max);
    let tol = 1e-9 * scale;
    let zero_real = eigen
        .values
        .iter()
        .filter(|v| v.im == 0.0 && v.re.abs() <= tol)
        .count();
    if zero_real > 0 {
        return Stability::Nonhyperbolic;
    }
    if eigen
        .values
        .iter()
        .any(|v| v.im != 0.0 && v.re.abs() <= tol)
    {
        return Stability::Center;
    }
    let complex = eigen.values.iter().any(|v| v.im != 0.0);
    let pos = eigen.values.iter().filter(|v| v.re > 0.0).count();
    let neg = eigen.values.len() - pos;
    match (pos, neg, complex) {
        (0, _, false) => Stability::StableNode,
        (0, _, true) => Stability::StableFocus,
        (_, 0, false) => Stability::UnstableNode,
        (_, 0, true) => Stability::UnstableFocus,
        (_, _, false) => Stability::Saddle,
        (_, _, true) => Stability::SaddleFocus,
    }
}

/// Full description of one point, whether or not it exists.
pub fn point_info(id: PointId, exps: &CriticalExponents, system: System) -> CriticalPointInfo {
    let ex = exists(id, exps, system);
    let pos = position(id, exps, system);
    let chart = match id {
        PointId::QGamma => Some(ChartId::infx(system)),
        _ => pos.map(|(c, _)| c),
    };
    let (linearization, eigen, stability) = match pos {
        Some((chart, coords)) if ex => {
            let mut j = field_jacobian(chart, 0.0, &coords, exps);
            if id == PointId::Q2 {
                // The y-chart time runs against η where Y > 0.
                for row in j.iter_mut() {
                    for v in row.iter_mut() {
                        *v = -*v;
                    }
                }
            }
            let e = eig3(&j, chart.dim());
            let st = stability_from_eigen(&e);
            (Some(j), Some(e), Some(st))
        }
        _ => (None, None, (id == PointId::QGamma).then_some(Stability::Nonhyperbolic)),
    };
    CriticalPointInfo {
        id,
        system,
        chart,
        coords: pos.map(|(_, c)| c),
        exists: ex,
        linearization,
        eigen,
        stability,
        degenerate: degenerate(id, exps),
        note: note(id, system),
    }
}

/// Every point of the catalog, existing or not.
pub fn catalog(exps: &CriticalExponents, system: System) -> Vec<CriticalPointInfo> {
    PointId::ALL
        .iter()
        .map(|&id| point_info(id, exps, system))
        .collect()
}

/// The points that exist for these parameters.
pub fn locate_points(exps: &CriticalExponents, system: System) -> Vec<CriticalPointInfo> {
    catalog(exps, system).into_iter().filter(|p| p.exists).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub stability: Stability,
    pub eigen: Eigen,
    pub degenerate: bool,
}

pub fn classify_point(info: &CriticalPointInfo, exps: &CriticalExponents) -> Result<Classification> {
    if !info.exists {
        return Err(Error::Branch(format!(
            "{} does not exist for these parameters",
            info.id.name()
        )));
    }
    let fresh = point_info(info.id, exps, info.system);
    match (fresh.eigen, fresh.stability) {
        (Some(eigen), Some(stability)) => Ok(Classification {
            degenerate: fresh.degenerate || stability == Stability::Nonhyperbolic,
            stability,
            eigen,
        }),
        _ => Err(Error::Branch(format!(
            "{} has no finite chart for a linear analysis",
            info.id.name()
        ))),
    }
}

fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
    v.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    v
}

fn pair(sum: f64, product: f64) -> [Complex64; 2] {
    let disc = sum * sum - 4.0 * product;
    if disc >= 0.0 {
        let q = 0.5 * (sum + sum.signum() * disc.sqrt());
        let other = if q != 0.0 { product / q } else { 0.0 };
        [Complex64::new(q, 0.0), Complex64::new(other, 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(0.5 * sum, -im), Complex64::new(0.5 * sum, im)]
    }
}

/// Eigenvalues given in closed form by the local analysis, evaluated from
/// the exponent fields (so a perturbed exponent shows up as a mismatch).
pub fn closed_form_eigenvalues(
    id: PointId,
    exps: &CriticalExponents,
    system: System,
) -> Option<Vec<Complex64>> {
    let (m, n, sigma, p) = (exps.m(), exps.n(), exps.sigma(), exps.p());
    let re = |v: f64| Complex64::new(v, 0.0);
    let gap_c = match exps.p_c {
        crate::exponents::Threshold::Finite(pc) => (n - 2.0) * (p - pc),
        crate::exponents::Threshold::Infinite => exps.gap_c(),
    };
    let gap_s = match exps.p_s {
        crate::exponents::Threshold::Finite(ps) => (n - 2.0) * (p - ps),
        crate::exponents::Threshold::Infinite => exps.gap_s(),
    };
    let v = match id {
        PointId::P0 => vec![re(2.0), re(-(n - 2.0)), re(sigma + 2.0)],
        PointId::P1 => vec![re((m * n - n + 2.0) / m), re(n - 2.0), re(-gap_c / m)],
        PointId::P2 => {
            let [a, b] = pair(-gap_s / (p - m), (sigma + 2.0) * gap_c / (p - m));
            vec![re(exps.l / (p - m)), a, b]
        }
        PointId::P3 if system == System::Extinction => {
            let l = exps.l;
            let sum = ((1.0 - m).powi(2) * (sigma + 2.0) * n
                + 2.0 * (m * m - 1.0) * sigma
                + 4.0 * (m * p - 1.0))
                / (l * (1.0 - m));
            let product = -2.0 * (m * n - n + 2.0) / (1.0 - m);
            let [a, b] = pair(sum, product);
            vec![re(-l / (1.0 - m)), a, b]
        }
        PointId::Q5 => {
            let b = system.sign() * exps.b();
            vec![re(-(1.0 - m) * b), re(-b), re((p - 1.0) * b)]
        }
        _ => return None,
    };
    Some(sorted(v))
}

/// Quadratic Taylor coefficients of a center manifold written as a graph
/// `u = a·s² + b·s·t + c·t²` over the center variables `(s, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CenterManifold {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// For `Q1` the graph is `w = (p−m)/(σ+2)·y + x` over `(x, z)` in the
/// x-chart; for `Q1'` it is `t = (p−m)/(σ+2)·y + x − w` over `(x, w)` in the
/// `w = xz` chart. Forward system only.
pub fn center_manifold_coeffs(id: PointId, exps: &CriticalExponents) -> Result<CenterManifold> {
    let (m, n, sigma, p) = (exps.m(), exps.n(), exps.sigma(), exps.p());
    let (al, be) = (exps.alpha, exps.beta);
    match id {
        PointId::Q1 => Ok(CenterManifold {
            a: -(sigma + 2.0) * exps.gap_c() / ((p - m) * (p - m)),
            b: 1.0,
            c: 0.0,
        }),
        PointId::Q1Prime => {
            let a_ = ((n - 2.0) * be - m * al) / be;
            let b_ = ((n - 2.0 + sigma) * be - (2.0 * m + p - 1.0) * al) / be;
            let c_ = (m + p - 1.0) * al / be;
            Ok(CenterManifold {
                a: -a_ * al / be,
                b: b_ * al / be,
                c: c_ * al / be,
            })
        }
        _ => Err(Error::Branch(format!(
            "{} is hyperbolic or has no center-manifold expansion here",
            id.name()
        ))),
    }
}

/// Point on the quadratic approximation of the forward center manifold of
/// `Q1` (chart INFX_FWD, `(s, t) = (x, z)`) or `Q1'` (chart W_FWD,
/// `(s, t) = (x, w)`).
pub fn center_manifold_point(id: PointId, exps: &CriticalExponents, s: f64, t: f64) -> Result<Vec3> {
    let cm = center_manifold_coeffs(id, exps)?;
    let h = cm.a * s * s + cm.b * s * t + cm.c * t * t;
    let b = exps.b();
    Ok(match id {
        PointId::Q1 => [s, (h - s) / b, t],
        _ => [s, (h - s + t) / b, t],
    })
}

/// Invariance defect of the approximate center manifold at `(s, t)`: the
/// normal component of the vector field, which is `O(|(s, t)|³)`.
pub fn center_manifold_residual(id: PointId, exps: &CriticalExponents, s: f64, t: f64) -> Result<f64> {
    let cm = center_manifold_coeffs(id, exps)?;
    let chart = if id == PointId::Q1 {
        ChartId::InfxFwd
    } else {
        ChartId::WFwd
    };
    let pt = center_manifold_point(id, exps, s, t)?;
    let f = crate::phase_systems::field(chart, 0.0, &pt, exps);
    let b = exps.b();
    // y = (h(s,t) − s + k t)/b with k = 0 for Q1 and k = 1 for Q1'.
    let k = if id == PointId::Q1 { 0.0 } else { 1.0 };
    let dy_ds = (2.0 * cm.a * s + cm.b * t - 1.0) / b;
    let dy_dt = (cm.b * s + 2.0 * cm.c * t + k) / b;
    Ok(f[1] - dy_ds * f[0] - dy_dt * f[2])
}
