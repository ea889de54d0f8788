//! Parameter quadruple `(m, N, σ, p)`, the critical exponents derived from it,
//! and the regime classification of the existence/non-existence results.

use std::cmp::Ordering;
use std::fmt;

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};

/// A critical exponent that is either finite or the conventional `+∞`
/// used for `p_c` and `p_s` in dimensions `N ≤ 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Finite(f64),
    Infinite,
}

impl Threshold {
    pub fn finite(self) -> Option<f64> {
        match self {
            Threshold::Finite(v) => Some(v),
            Threshold::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Threshold::Infinite)
    }

    /// `self < x`.
    pub fn lt(self, x: f64) -> bool {
        match self {
            Threshold::Finite(v) => v < x,
            Threshold::Infinite => false,
        }
    }

    /// `self > x`.
    pub fn gt(self, x: f64) -> bool {
        match self {
            Threshold::Finite(v) => v > x,
            Threshold::Infinite => true,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl PartialOrd for Threshold {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Threshold::Infinite, Threshold::Infinite) => Some(Ordering::Equal),
            (Threshold::Infinite, _) => Some(Ordering::Greater),
            (_, Threshold::Infinite) => Some(Ordering::Less),
            (Threshold::Finite(a), Threshold::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Finite(v) => write!(f, "{v}"),
            Threshold::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Threshold {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Threshold::Finite(v) => serialize_real(*v, s),
            Threshold::Infinite => s.serialize_str("inf"),
        }
    }
}

fn serialize_real<S: Serializer>(v: f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

/// The model parameters. Construct through [`ParameterSet::new`], which
/// enforces `0 < m < 1`, `N ≥ 1`, `σ > 0` and `p > 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterSet {
    pub m: f64,
    pub n: u32,
    pub sigma: f64,
    pub p: f64,
}

impl ParameterSet {
    pub fn new(m: f64, n: u32, sigma: f64, p: f64) -> Result<Self> {
        let params = ParameterSet { m, n, sigma, p };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m.is_finite() && self.sigma.is_finite() && self.p.is_finite()) {
            return Err(Error::InvalidParameters("parameters must be finite".into()));
        }
        if !(self.m > 0.0 && self.m < 1.0) {
            return Err(Error::InvalidParameters(format!(
                "m = {} must lie in (0, 1)",
                self.m
            )));
        }
        if self.n < 1 {
            return Err(Error::InvalidParameters("N must be at least 1".into()));
        }
        if self.sigma <= 0.0 {
            return Err(Error::InvalidParameters(format!(
                "sigma = {} must be positive",
                self.sigma
            )));
        }
        if self.p <= 1.0 {
            return Err(Error::InvalidParameters(format!(
                "p = {} must exceed 1",
                self.p
            )));
        }
        Ok(())
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        ParameterSet::new(self.m, self.n, self.sigma, p)
    }

    pub fn nf(&self) -> f64 {
        f64::from(self.n)
    }

    pub fn exponents(&self) -> CriticalExponents {
        compute_exponents(self)
    }

    /// Rejects `L ≥ 0`, for which the self-similar exponents lose their sign.
    pub fn require_negative_l(&self) -> Result<()> {
        let l = self.sigma * (self.m - 1.0) + 2.0 * (self.p - 1.0);
        if l < 0.0 {
            Ok(())
        } else {
            Err(Error::Regime(format!(
                "L = {l} is not negative (p must be below p_L)"
            )))
        }
    }
}

/// All exponents derived from a [`ParameterSet`].
///
/// The fields are public so that verification code can perturb them and
/// observe the closed-form checks fail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalExponents {
    pub params: ParameterSet,
    pub m_c: f64,
    pub m_s: f64,
    pub p_c: Threshold,
    pub p_s: Threshold,
    pub p_l: f64,
    pub p_f: f64,
    pub l: f64,
    pub alpha: f64,
    pub beta: f64,
}

pub fn compute_exponents(params: &ParameterSet) -> CriticalExponents {
    let ParameterSet { m, sigma, p, .. } = *params;
    let n = params.nf();
    let (p_c, p_s) = if params.n <= 2 {
        (Threshold::Infinite, Threshold::Infinite)
    } else {
        (
            Threshold::Finite(m * (n + sigma) / (n - 2.0)),
            Threshold::Finite(m * (n + 2.0 * sigma + 2.0) / (n - 2.0)),
        )
    };
    let l = sigma * (m - 1.0) + 2.0 * (p - 1.0);
    CriticalExponents {
        params: *params,
        m_c: (n - 2.0) / n,
        m_s: (n - 2.0) / (n + 2.0),
        p_c,
        p_s,
        p_l: 1.0 + sigma * (1.0 - m) / 2.0,
        p_f: m + (sigma + 2.0) / n,
        l,
        alpha: -(sigma + 2.0) / l,
        beta: -(p - m) / l,
    }
}

impl CriticalExponents {
    pub fn m(&self) -> f64 {
        self.params.m
    }
    pub fn n(&self) -> f64 {
        self.params.nf()
    }
    pub fn sigma(&self) -> f64 {
        self.params.sigma
    }
    pub fn p(&self) -> f64 {
        self.params.p
    }

    /// Coupling coefficient `(p−m)/(σ+2)` of the `XY` term in the main systems.
    pub fn b(&self) -> f64 {
        (self.p() - self.m()) / (self.sigma() + 2.0)
    }

    /// `(N−2)(p−p_c)`, finite in every dimension.
    pub fn gap_c(&self) -> f64 {
        (self.n() - 2.0) * self.p() - self.m() * (self.n() + self.sigma())
    }

    /// `(N−2)(p−p_s)`, finite in every dimension.
    pub fn gap_s(&self) -> f64 {
        (self.n() - 2.0) * self.p() - self.m() * (self.n() + 2.0 * self.sigma() + 2.0)
    }

    pub fn p2_exists(&self) -> bool {
        self.p_c.lt(self.p())
    }

    pub fn p3_exists_extinction(&self) -> bool {
        self.m() <= self.m_c
    }

    pub fn require_dimension_3(&self, what: &str) -> Result<()> {
        if self.params.n >= 3 {
            Ok(())
        } else {
            Err(Error::Regime(format!("{what} requires N >= 3")))
        }
    }

    /// Fast-decay tail slope `−(N−2)/m`.
    pub fn fast_slope(&self) -> f64 {
        -(self.n() - 2.0) / self.m()
    }

    /// Slow-decay tail slope `−(σ+2)/(p−m)`.
    pub fn slow_slope(&self) -> f64 {
        -(self.sigma() + 2.0) / (self.p() - self.m())
    }
}

impl Serialize for CriticalExponents {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        struct Real(f64);
        impl Serialize for Real {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                serialize_real(self.0, s)
            }
        }
        let mut map = s.serialize_map(Some(13))?;
        map.serialize_entry("m", &Real(self.params.m))?;
        map.serialize_entry("N", &self.params.n)?;
        map.serialize_entry("sigma", &Real(self.params.sigma))?;
        map.serialize_entry("p", &Real(self.params.p))?;
        map.serialize_entry("m_c", &Real(self.m_c))?;
        map.serialize_entry("m_s", &Real(self.m_s))?;
        map.serialize_entry("p_c", &self.p_c)?;
        map.serialize_entry("p_s", &self.p_s)?;
        map.serialize_entry("p_L", &Real(self.p_l))?;
        map.serialize_entry("p_F", &Real(self.p_f))?;
        map.serialize_entry("L", &Real(self.l))?;
        map.serialize_entry("alpha", &Real(self.alpha))?;
        map.serialize_entry("beta", &Real(self.beta))?;
        map.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Hypotheses hold and solutions of this kind exist.
    Existence,
    /// Hypotheses hold; existence is proved only on an unquantified sub-range.
    CandidateRange,
    /// Hypotheses hold and solutions of this kind do not exist.
    NonExistence,
    /// The hypotheses of this part do not hold.
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimePart {
    pub name: &'static str,
    pub statement: &'static str,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    /// Global-in-time profiles: fast decay, slow decay, non-existence.
    pub global: [RegimePart; 3],
    /// Finite-time-extinction profiles: fast decay, slow decay, non-existence.
    pub extinction: [RegimePart; 3],
    /// `{1, p_c, p_s, p_L, p_F, p}` in increasing order.
    pub ordering: Vec<(String, Threshold)>,
    pub l_negative: bool,
    pub p2_exists: bool,
    pub p3_exists: bool,
}

fn part(name: &'static str, statement: &'static str, holds: bool, verdict: Verdict) -> RegimePart {
    RegimePart {
        name,
        statement,
        verdict: if holds { verdict } else { Verdict::NotApplicable },
    }
}

pub fn classify_regime(params: &ParameterSet) -> RegimeReport {
    let e = compute_exponents(params);
    let (m, p) = (params.m, params.p);
    let dim3 = params.n >= 3;
    let above_ps = e.p_s.lt(p) && p > 1.0;
    let global_exists = dim3 && m < e.m_s && above_ps && p < e.p_l;
    let global_none = m >= e.m_s || (p > 1.0 && e.p_s.gt(p));
    let n = params.nf();
    let ext_fast = dim3
        && m > (n - 2.0) / (n + 2.0 + 2.0 * params.sigma)
        && m < e.m_s
        && e.p_c.lt(p)
        && e.p_s.gt(p);
    let ext_none = !dim3 || m >= e.m_c;

    let mut ordering = vec![
        ("1".to_string(), Threshold::Finite(1.0)),
        ("p_c".to_string(), e.p_c),
        ("p_s".to_string(), e.p_s),
        ("p_L".to_string(), Threshold::Finite(e.p_l)),
        ("p_F".to_string(), Threshold::Finite(e.p_f)),
        ("p".to_string(), Threshold::Finite(p)),
    ];
    ordering.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal));

    RegimeReport {
        global: [
            part(
                "global_fast",
                "N>=3, m<m_s, max(1,p_s)<p<p_L: profiles with fast decay exist",
                global_exists,
                Verdict::Existence,
            ),
            part(
                "global_slow",
                "N>=3, m<m_s, max(1,p_s)<p<p_L: profiles with slow decay exist",
                global_exists,
                Verdict::Existence,
            ),
            part(
                "global_none",
                "m>=m_s, or 1<p<p_s: no global self-similar profile",
                global_none,
                Verdict::NonExistence,
            ),
        ],
        extinction: [
            part(
                "extinction_fast",
                "N>=3, (N-2)/(N+2+2sigma)<m<m_s, p_c<p<p_s: fast-decay profiles exist for p in (p_0, p_s)",
                ext_fast,
                Verdict::CandidateRange,
            ),
            part(
                "extinction_slow",
                "N>=3, m<m_s, max(1,p_s)<p<p_L: slow-decay profiles exist",
                global_exists,
                Verdict::Existence,
            ),
            part(
                "extinction_none",
                "N<=2 or m>=m_c: no extinction profile",
                ext_none,
                Verdict::NonExistence,
            ),
        ],
        ordering,
        l_negative: e.l < 0.0,
        p2_exists: e.p2_exists(),
        p3_exists: e.p3_exists_extinction(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    ForwardFast,
    ForwardSlow,
    Extinction,
}

/// Time dependence of norms of `u = t^α f(|x| t^β)` (forward) or
/// `u = (T−t)^α f(|x|(T−t)^β)` (extinction).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormEvolution {
    pub branch: Branch,
    /// `"t"` or `"T-t"`.
    pub time_factor: &'static str,
    /// Exponent of the time factor in `‖u(t)‖_∞`.
    pub sup_norm_exponent: f64,
    /// Exponent of `t` in `u(x, t)` at fixed `x ≠ 0`, when the tail fixes it.
    pub fixed_x_exponent: Option<f64>,
}

pub fn norm_evolution(params: &ParameterSet, branch: Branch) -> Result<NormEvolution> {
    params.require_negative_l()?;
    let e = compute_exponents(params);
    match branch {
        Branch::ForwardFast => {
            e.require_dimension_3("the fast-decay branch")?;
            let fixed = e.gap_c() / (e.l * e.m());
            Ok(NormEvolution {
                branch,
                time_factor: "t",
                sup_norm_exponent: e.alpha,
                fixed_x_exponent: Some(fixed),
            })
        }
        Branch::ForwardSlow => {
            e.require_dimension_3("the slow-decay branch")?;
            if !e.p2_exists() {
                return Err(Error::Regime(
                    "the slow-decay branch needs p > p_c".into(),
                ));
            }
            Ok(NormEvolution {
                branch,
                time_factor: "t",
                sup_norm_exponent: e.alpha,
                fixed_x_exponent: Some(0.0),
            })
        }
        Branch::Extinction => {
            if params.n <= 2 || params.m >= e.m_c {
                return Err(Error::Regime(
                    "extinction profiles need N >= 3 and m < m_c".into(),
                ));
            }
            Ok(NormEvolution {
                branch,
                time_factor: "T-t",
                sup_norm_exponent: e.alpha,
                fixed_x_exponent: None,
            })
        }
    }
}
