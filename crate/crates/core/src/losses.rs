//! Piecewise linear-quadratic (PLQ) losses.
//!
//! Every loss is a separable sum of a scalar convex function over residuals
//! (or, for the hinge, over margins `m_i = y_i f(x_i)`). Each variant exposes
//! its value, subdifferential, proximal operator and convex conjugate, which
//! is everything the first-order solver needs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_HUBER_KAPPA: f64 = 1.0;
pub const DEFAULT_VAPNIK_EPS: f64 = 0.1;
pub const DEFAULT_QUANTILE_TAU: f64 = 0.5;
pub const DEFAULT_ENET_MU: f64 = 0.5;

/// A PLQ loss with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum LossSpec {
    /// `r²`
    Quadratic,
    /// `|r|`
    L1,
    /// `r²/2` for `|r| ≤ κ`, `κ|r| − κ²/2` beyond.
    Huber { kappa: f64 },
    /// Asymmetric Huber: slope `τ` on the left, `1 − τ` on the right,
    /// quadratic `r²/(4κ)` on `[−2τκ, 2(1−τ)κ]`.
    QuantileHuber { tau: f64, kappa: f64 },
    /// `max(0, |r| − ε)`
    Vapnik { eps: f64 },
    /// `max(0, 1 − m)` on margins.
    Hinge,
    /// `μ|r| + r²/2`
    ElasticNet { mu: f64 },
}

/// Closed interval `[lo, hi]`, possibly unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    /// Distance from `x` to the interval.
    pub fn distance(&self, x: f64) -> f64 {
        if x < self.lo {
            self.lo - x
        } else if x > self.hi {
            x - self.hi
        } else {
            0.0
        }
    }
}

fn soft(w: f64, t: f64) -> f64 {
    w.signum() * (w.abs() - t).max(0.0)
}

impl LossSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            LossSpec::Huber { kappa } if !(kappa > 0.0 && kappa.is_finite()) => {
                bad(format!("huber threshold must be positive, got {kappa}"))
            }
            LossSpec::QuantileHuber { tau, kappa } => {
                if !(tau > 0.0 && tau < 1.0) {
                    bad(format!("quantile level must lie in (0, 1), got {tau}"))
                } else if !(kappa > 0.0 && kappa.is_finite()) {
                    bad(format!("quantile huber threshold must be positive, got {kappa}"))
                } else {
                    Ok(())
                }
            }
            LossSpec::Vapnik { eps } if !(eps >= 0.0 && eps.is_finite()) => {
                bad(format!("vapnik width must be nonnegative, got {eps}"))
            }
            LossSpec::ElasticNet { mu } if !(mu >= 0.0 && mu.is_finite()) => {
                bad(format!("elastic net weight must be nonnegative, got {mu}"))
            }
            _ => Ok(()),
        }
    }

    pub fn is_hinge(&self) -> bool {
        matches!(self, LossSpec::Hinge)
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self, LossSpec::Quadratic)
    }

    /// Scalar loss at `r` (a residual, or a margin for the hinge).
    pub fn scalar(&self, r: f64) -> f64 {
        match *self {
            LossSpec::Quadratic => r * r,
            LossSpec::L1 => r.abs(),
            LossSpec::Huber { kappa } => {
                if r.abs() <= kappa {
                    0.5 * r * r
                } else {
                    kappa * r.abs() - 0.5 * kappa * kappa
                }
            }
            LossSpec::QuantileHuber { tau, kappa } => {
                let (lo, hi) = (-2.0 * tau * kappa, 2.0 * (1.0 - tau) * kappa);
                if r < lo {
                    -tau * r - kappa * tau * tau
                } else if r > hi {
                    (1.0 - tau) * r - kappa * (1.0 - tau) * (1.0 - tau)
                } else {
                    r * r / (4.0 * kappa)
                }
            }
            LossSpec::Vapnik { eps } => (r.abs() - eps).max(0.0),
            LossSpec::Hinge => (1.0 - r).max(0.0),
            LossSpec::ElasticNet { mu } => mu * r.abs() + 0.5 * r * r,
        }
    }

    /// Sum of the scalar loss over components.
    pub fn value<'a>(&self, r: impl IntoIterator<Item = &'a f64>) -> f64 {
        r.into_iter().map(|&x| self.scalar(x)).sum()
    }

    /// Subdifferential of the scalar loss at `r`.
    pub fn subgradient(&self, r: f64) -> Interval {
        let sgn_set = |r: f64, left: f64, right: f64| {
            if r > 0.0 {
                Interval::point(right)
            } else if r < 0.0 {
                Interval::point(left)
            } else {
                Interval { lo: left, hi: right }
            }
        };
        match *self {
            LossSpec::Quadratic => Interval::point(2.0 * r),
            LossSpec::L1 => sgn_set(r, -1.0, 1.0),
            LossSpec::Huber { kappa } => Interval::point(r.clamp(-kappa, kappa)),
            LossSpec::QuantileHuber { tau, kappa } => Interval::point((r / (2.0 * kappa)).clamp(-tau, 1.0 - tau)),
            LossSpec::Vapnik { eps } => {
                if r.abs() < eps {
                    Interval::point(0.0)
                } else if r == eps && eps > 0.0 {
                    Interval { lo: 0.0, hi: 1.0 }
                } else if r == -eps && eps > 0.0 {
                    Interval { lo: -1.0, hi: 0.0 }
                } else {
                    sgn_set(r, -1.0, 1.0)
                }
            }
            LossSpec::Hinge => {
                if r < 1.0 {
                    Interval::point(-1.0)
                } else if r > 1.0 {
                    Interval::point(0.0)
                } else {
                    Interval { lo: -1.0, hi: 0.0 }
                }
            }
            LossSpec::ElasticNet { mu } => {
                let s = sgn_set(r, -mu, mu);
                Interval {
                    lo: s.lo + r,
                    hi: s.hi + r,
                }
            }
        }
    }

    /// Proximal operator `argmin_u { loss(u) + (u − w)² / (2t) }`.
    pub fn prox(&self, t: f64, w: f64) -> f64 {
        debug_assert!(t > 0.0);
        match *self {
            LossSpec::Quadratic => w / (1.0 + 2.0 * t),
            LossSpec::L1 => soft(w, t),
            LossSpec::Huber { kappa } => {
                if w.abs() <= kappa * (1.0 + t) {
                    w / (1.0 + t)
                } else {
                    w - t * kappa * w.signum()
                }
            }
            LossSpec::QuantileHuber { tau, kappa } => {
                let lo = -2.0 * tau * kappa;
                let hi = 2.0 * (1.0 - tau) * kappa;
                if w < lo - t * tau {
                    w + t * tau
                } else if w > hi + t * (1.0 - tau) {
                    w - t * (1.0 - tau)
                } else {
                    w * 2.0 * kappa / (2.0 * kappa + t)
                }
            }
            LossSpec::Vapnik { eps } => {
                let a = w.abs();
                if a <= eps {
                    w
                } else {
                    w.signum() * (a - t).max(eps)
                }
            }
            LossSpec::Hinge => {
                if w >= 1.0 {
                    w
                } else {
                    (w + t).min(1.0)
                }
            }
            LossSpec::ElasticNet { mu } => soft(w, t * mu) / (1.0 + t),
        }
    }

    /// Componentwise prox over a slice.
    pub fn prox_vec(&self, t: f64, w: &[f64]) -> Vec<f64> {
        w.iter().map(|&x| self.prox(t, x)).collect()
    }

    /// Convex conjugate `sup_r { u r − loss(r) }`, `+∞` outside its domain.
    ///
    /// Points within `1e-9` of a domain edge are treated as on the edge so that
    /// round-off in proximal steps does not produce spurious infinities.
    pub fn conjugate(&self, u: f64) -> f64 {
        const SLACK: f64 = 1e-9;
        let inside = |lo: f64, hi: f64| u >= lo - SLACK * (1.0 + lo.abs()) && u <= hi + SLACK * (1.0 + hi.abs());
        match *self {
            LossSpec::Quadratic => 0.25 * u * u,
            LossSpec::L1 => {
                if inside(-1.0, 1.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            LossSpec::Huber { kappa } => {
                if inside(-kappa, kappa) {
                    let c = u.clamp(-kappa, kappa);
                    0.5 * c * c
                } else {
                    f64::INFINITY
                }
            }
            LossSpec::QuantileHuber { tau, kappa } => {
                if inside(-tau, 1.0 - tau) {
                    let c = u.clamp(-tau, 1.0 - tau);
                    kappa * c * c
                } else {
                    f64::INFINITY
                }
            }
            LossSpec::Vapnik { eps } => {
                if inside(-1.0, 1.0) {
                    eps * u.abs().min(1.0)
                } else {
                    f64::INFINITY
                }
            }
            LossSpec::Hinge => {
                if inside(-1.0, 0.0) {
                    u.clamp(-1.0, 0.0)
                } else {
                    f64::INFINITY
                }
            }
            LossSpec::ElasticNet { mu } => {
                let e = (u.abs() - mu).max(0.0);
                0.5 * e * e
            }
        }
    }
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossSpec::Quadratic => write!(f, "quad"),
            LossSpec::L1 => write!(f, "l1"),
            LossSpec::Huber { kappa } => write!(f, "huber:k={kappa}"),
            LossSpec::QuantileHuber { tau, kappa } => write!(f, "qhuber:tau={tau},k={kappa}"),
            LossSpec::Vapnik { eps } => write!(f, "vapnik:eps={eps}"),
            LossSpec::Hinge => write!(f, "hinge"),
            LossSpec::ElasticNet { mu } => write!(f, "enet:mu={mu}"),
        }
    }
}

/// Parses `name[:key=value,...]` parameter lists.
fn parse_params<'a>(text: &'a str, allowed: &[&str]) -> Result<Vec<(&'a str, f64)>> {
    let mut out = Vec::new();
    if text.trim().is_empty() {
        return Ok(out);
    }
    for part in text.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got `{part}`")))?;
        let k = k.trim();
        if !allowed.contains(&k) {
            return Err(Error::Parse(format!(
                "unknown parameter `{k}` (expected one of {allowed:?})"
            )));
        }
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("parameter `{k}` is not a number: `{v}`")))?;
        out.push((k, v));
    }
    Ok(out)
}

fn param(params: &[(&str, f64)], key: &str, default: f64) -> f64 {
    params
        .iter()
        .rev()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .unwrap_or(default)
}

impl FromStr for LossSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let spec = match name.to_ascii_lowercase().as_str() {
            "quad" | "quadratic" => {
                parse_params(rest, &[])?;
                LossSpec::Quadratic
            }
            "l1" => {
                parse_params(rest, &[])?;
                LossSpec::L1
            }
            "huber" => {
                let p = parse_params(rest, &["k"])?;
                LossSpec::Huber {
                    kappa: param(&p, "k", DEFAULT_HUBER_KAPPA),
                }
            }
            "qhuber" => {
                let p = parse_params(rest, &["tau", "k"])?;
                LossSpec::QuantileHuber {
                    tau: param(&p, "tau", DEFAULT_QUANTILE_TAU),
                    kappa: param(&p, "k", DEFAULT_HUBER_KAPPA),
                }
            }
            "vapnik" => {
                let p = parse_params(rest, &["eps"])?;
                LossSpec::Vapnik {
                    eps: param(&p, "eps", DEFAULT_VAPNIK_EPS),
                }
            }
            "hinge" => {
                parse_params(rest, &[])?;
                LossSpec::Hinge
            }
            "enet" => {
                let p = parse_params(rest, &["mu"])?;
                LossSpec::ElasticNet {
                    mu: param(&p, "mu", DEFAULT_ENET_MU),
                }
            }
            other => return Err(Error::Parse(format!("unknown loss `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl TryFrom<String> for LossSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<LossSpec> for String {
    fn from(l: LossSpec) -> String {
        l.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_from_definitions() {
        assert_eq!(LossSpec::L1.value(&[-2.0, 3.0]), 5.0);
        assert_eq!(LossSpec::Hinge.value(&[2.0, 0.5]), 0.5);
        let v = LossSpec::Vapnik { eps: 0.5 };
        assert!((v.value(&[0.3, -1.0]) - 0.5).abs() < 1e-15);
        assert_eq!(LossSpec::Quadratic.value(&[3.0]), 9.0);
        assert_eq!(LossSpec::ElasticNet { mu: 0.5 }.scalar(-2.0), 3.0);
    }

    #[test]
    fn prox_simple_cases() {
        assert_eq!(LossSpec::L1.prox(1.0, 0.0), 0.0);
        assert_eq!(LossSpec::L1.prox(1.0, 2.5), 1.5);
        assert_eq!(LossSpec::Hinge.prox(0.5, 2.0), 2.0);
        assert_eq!(LossSpec::Hinge.prox(0.5, 0.0), 0.5);
        assert_eq!(LossSpec::Hinge.prox(0.5, 0.8), 1.0);
        assert_eq!(LossSpec::Vapnik { eps: 0.5 }.prox(1.0, 0.3), 0.3);
        assert_eq!(LossSpec::Vapnik { eps: 0.5 }.prox(1.0, 1.2), 0.5);
        assert_eq!(LossSpec::Vapnik { eps: 0.5 }.prox(1.0, -3.0), -2.0);
    }

    #[test]
    fn vapnik_zero_width_is_l1() {
        let v = LossSpec::Vapnik { eps: 0.0 };
        for w in [-3.0, -0.2, 0.0, 0.7, 4.0] {
            assert_eq!(v.prox(0.6, w), LossSpec::L1.prox(0.6, w));
            assert_eq!(v.scalar(w), LossSpec::L1.scalar(w));
        }
    }

    #[test]
    fn quantile_huber_half_is_scaled_huber() {
        let k = 0.7;
        let qh = LossSpec::QuantileHuber { tau: 0.5, kappa: k };
        let h = LossSpec::Huber { kappa: k };
        for r in [-3.0, -0.5, 0.0, 0.2, 0.7, 2.0] {
            assert!((qh.scalar(r) - h.scalar(r) / (2.0 * k)).abs() < 1e-14);
            assert!((qh.scalar(r) - qh.scalar(-r)).abs() < 1e-14);
        }
    }

    #[test]
    fn quantile_huber_is_continuous() {
        let qh = LossSpec::QuantileHuber { tau: 0.3, kappa: 0.4 };
        for edge in [-2.0 * 0.3 * 0.4, 2.0 * 0.7 * 0.4] {
            let a = qh.scalar(edge - 1e-12);
            let b = qh.scalar(edge + 1e-12);
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn parse_round_trip() {
        for s in [
            "quad",
            "l1",
            "huber:k=1",
            "qhuber:tau=0.3,k=0.4",
            "vapnik:eps=0.5",
            "hinge",
            "enet:mu=0.5",
        ] {
            let l: LossSpec = s.parse().unwrap();
            assert_eq!(l.to_string().parse::<LossSpec>().unwrap(), l);
        }
        assert_eq!("huber".parse::<LossSpec>().unwrap(), LossSpec::Huber { kappa: 1.0 });
        assert_eq!("vapnik".parse::<LossSpec>().unwrap(), LossSpec::Vapnik { eps: 0.1 });
    }

    #[test]
    fn parse_errors() {
        assert!("logistic".parse::<LossSpec>().is_err());
        assert!("huber:kappa=1".parse::<LossSpec>().is_err());
        assert!("huber:k=abc".parse::<LossSpec>().is_err());
        assert!("huber:k=-1".parse::<LossSpec>().is_err());
        assert!("qhuber:tau=1.5".parse::<LossSpec>().is_err());
    }

    #[test]
    fn conjugate_fenchel_young_tight_at_subgradient() {
        let losses = [
            LossSpec::Quadratic,
            LossSpec::L1,
            LossSpec::Huber { kappa: 0.8 },
            LossSpec::QuantileHuber { tau: 0.3, kappa: 0.4 },
            LossSpec::Vapnik { eps: 0.5 },
            LossSpec::Hinge,
            LossSpec::ElasticNet { mu: 0.5 },
        ];
        for l in losses {
            for r in [-2.3, -0.45, 0.1, 0.9, 1.7] {
                let g = l.subgradient(r);
                let u = 0.5 * (g.lo + g.hi);
                let lhs = l.scalar(r) + l.conjugate(u);
                assert!((lhs - u * r).abs() < 1e-12, "{l} r={r}");
            }
        }
    }
}
