//! Closed-form diversity-multiplexing tradeoff of the on-off switched schemes.
//!
//! With IA used for a fraction `a` of every codeword, the diversity at
//! multiplexing gain `r` is the smallest of
//!
//! ```text
//! min(2/(a+3), 1/(k a)) (6 - 3r - 2a)
//! min(4/(a+3), 1/(k a)) (6 - 6r + 2a)
//! d*_{2,2}(r)
//! ```
//!
//! clamped at zero, where `k = 4` for symbol-extension IA and `k = 2` for IA
//! with Alamouti coding. At `a = 0` the `1/(k a)` branches are `+inf`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest per-user multiplexing gain of the IA schemes.
pub const R_MAX_IA: f64 = 4.0 / 3.0;

/// Absolute slack accepted on domain endpoints so that grids computed in
/// floating point still hit `4/3` and `2`.
const DOMAIN_SLACK: f64 = 1e-12;

/// Fraction of each codeword sent with the IA beamformer switched on.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SwitchFraction(f64);

impl SwitchFraction {
    pub const OFF: SwitchFraction = SwitchFraction(0.0);
    pub const ON: SwitchFraction = SwitchFraction(1.0);

    pub fn new(a: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&a) {
            Ok(SwitchFraction(a))
        } else {
            Err(Error::domain("a", a, "[0, 1]"))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for SwitchFraction {
    type Error = Error;

    fn try_from(a: f64) -> Result<Self> {
        Self::new(a)
    }
}

impl From<SwitchFraction> for f64 {
    fn from(a: SwitchFraction) -> f64 {
        a.0
    }
}

/// Which IA building block is switched on and off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IaFamily {
    SymbolExtension,
    Alamouti,
}

impl IaFamily {
    /// The `k` in the `1/(k a)` branch.
    fn branch_coefficient(self) -> f64 {
        match self {
            IaFamily::SymbolExtension => 4.0,
            IaFamily::Alamouti => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "onoff-ia")]
    OnOffIa,
    #[serde(rename = "onoff-iaa")]
    OnOffIaa,
    /// Symbol-extension IA always on (`a = 1`).
    #[serde(rename = "conv-ia")]
    ConventionalIa,
    /// IA always off (`a = 0`).
    #[serde(rename = "no-ia")]
    NoIa,
    /// Alamouti IA always on (`a = 1`).
    #[serde(rename = "iaa-fixed")]
    IaAlamoutiFixed,
    /// Optimal 2x2 point-to-point MIMO tradeoff.
    #[serde(rename = "p2p22")]
    PointToPoint22,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::OnOffIa,
        Scheme::OnOffIaa,
        Scheme::ConventionalIa,
        Scheme::NoIa,
        Scheme::IaAlamoutiFixed,
        Scheme::PointToPoint22,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::OnOffIa => "onoff-ia",
            Scheme::OnOffIaa => "onoff-iaa",
            Scheme::ConventionalIa => "conv-ia",
            Scheme::NoIa => "no-ia",
            Scheme::IaAlamoutiFixed => "iaa-fixed",
            Scheme::PointToPoint22 => "p2p22",
        }
    }

    /// Largest multiplexing gain on which the scheme's tradeoff is defined.
    pub fn r_max(self) -> f64 {
        match self {
            Scheme::PointToPoint22 => 2.0,
            _ => R_MAX_IA,
        }
    }

    pub fn family(self) -> Option<IaFamily> {
        match self {
            Scheme::OnOffIa | Scheme::ConventionalIa | Scheme::NoIa => Some(IaFamily::SymbolExtension),
            Scheme::OnOffIaa | Scheme::IaAlamoutiFixed => Some(IaFamily::Alamouti),
            Scheme::PointToPoint22 => None,
        }
    }

    /// The switch fraction a scheme is pinned to, if any.
    pub fn fixed_fraction(self) -> Option<SwitchFraction> {
        match self {
            Scheme::ConventionalIa | Scheme::IaAlamoutiFixed => Some(SwitchFraction::ON),
            Scheme::NoIa | Scheme::PointToPoint22 => Some(SwitchFraction::OFF),
            Scheme::OnOffIa | Scheme::OnOffIaa => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown scheme '{s}' (expected one of: {})",
                    Scheme::ALL.map(Scheme::name).join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmtPoint {
    pub r: f64,
    pub a: SwitchFraction,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmtCurve {
    pub scheme: Scheme,
    pub points: Vec<DmtPoint>,
}

/// How the switch fraction is chosen along a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum APolicy {
    /// Closed-form optimum for on-off schemes; the pinned value otherwise.
    Auto,
    Fixed(SwitchFraction),
}

fn check_r(r: f64, max: f64, domain: &'static str) -> Result<f64> {
    if r.is_finite() && r >= -DOMAIN_SLACK && r <= max + DOMAIN_SLACK {
        Ok(r.clamp(0.0, max))
    } else {
        Err(Error::domain("r", r, domain))
    }
}

/// Optimal 2x2 MIMO tradeoff: piecewise linear through (0,4), (1,1), (2,0).
pub fn d_star_22(r: f64) -> Result<f64> {
    let r = check_r(r, 2.0, "[0, 2]")?;
    Ok(if r <= 1.0 { 4.0 - 3.0 * r } else { 2.0 - r })
}

/// The four component functions `(f1, f2, f3, f4)` whose pairwise minima
/// form the IA-limited part of the tradeoff. `f2` and `f4` are `+inf` at
/// `a = 0`.
pub fn component_functions(family: IaFamily, a: SwitchFraction, r: f64) -> [f64; 4] {
    let a = a.value();
    let k = family.branch_coefficient();
    let first = 6.0 - 3.0 * r - 2.0 * a;
    let second = 6.0 - 6.0 * r + 2.0 * a;
    let switched = |bound: f64| if a == 0.0 { f64::INFINITY } else { bound / (k * a) };
    [
        2.0 / (a + 3.0) * first,
        switched(first),
        4.0 / (a + 3.0) * second,
        switched(second),
    ]
}

/// [`component_functions`] for an on-off scheme, with the domain checked.
pub fn f_functions(scheme: Scheme, a: SwitchFraction, r: f64) -> Result<[f64; 4]> {
    let family = scheme
        .family()
        .ok_or_else(|| Error::InvalidArgument(format!("{scheme} has no IA component functions")))?;
    let r = check_r(r, R_MAX_IA, "[0, 4/3]")?;
    Ok(component_functions(family, a, r))
}

fn d_onoff(family: IaFamily, r: f64, a: SwitchFraction) -> Result<f64> {
    let r = check_r(r, R_MAX_IA, "[0, 4/3]")?;
    let [f1, f2, f3, f4] = component_functions(family, a, r);
    let d = f1.min(f2).min(f3.min(f4)).min(d_star_22(r)?);
    Ok(d.max(0.0))
}

/// Diversity of on-off switched symbol-extension IA at fraction `a`.
pub fn d_onoff_ia(r: f64, a: SwitchFraction) -> Result<f64> {
    d_onoff(IaFamily::SymbolExtension, r, a)
}

/// Diversity of on-off switched Alamouti IA at fraction `a`.
pub fn d_onoff_iaa(r: f64, a: SwitchFraction) -> Result<f64> {
    d_onoff(IaFamily::Alamouti, r, a)
}

fn check_r_open(r: f64) -> Result<f64> {
    if r > 0.0 && r <= R_MAX_IA + DOMAIN_SLACK {
        Ok(r.min(R_MAX_IA))
    } else {
        Err(Error::domain("r", r, "(0, 4/3]"))
    }
}

/// Closed-form optimal IA fraction for symbol-extension IA.
pub fn optimal_a_ia(r: f64) -> Result<SwitchFraction> {
    let r = check_r_open(r)?;
    let a = if r <= 0.8 {
        0.0
    } else if r <= 1.0 {
        0.2
    } else {
        0.75 * r
    };
    SwitchFraction::new(a.min(1.0))
}

/// Closed-form optimal IA fraction for Alamouti IA.
pub fn optimal_a_iaa(r: f64) -> Result<SwitchFraction> {
    let r = check_r_open(r)?;
    let a = if r <= 0.8 {
        0.0
    } else if r <= 20.0 / 21.0 {
        1.5 * r - 1.0
    } else if r <= 1.0 {
        3.0 / 7.0
    } else {
        // r^2 + 16r - 16 > 1 on (1, 4/3].
        (3.0 * (2.0 - r) + 3.0 * (r * r + 16.0 * r - 16.0).sqrt()) / 10.0
    };
    SwitchFraction::new(a.min(1.0))
}

/// Closed-form optimal fraction for an on-off scheme.
pub fn optimal_a(scheme: Scheme, r: f64) -> Result<SwitchFraction> {
    match scheme {
        Scheme::OnOffIa => optimal_a_ia(r),
        Scheme::OnOffIaa => optimal_a_iaa(r),
        other => Err(Error::InvalidArgument(format!(
            "{other} is not an on-off scheme"
        ))),
    }
}

/// Exhaustive search over `a in {0, step, 2 step, ..., 1}`; ties go to the
/// smaller `a`.
pub fn optimize_a_grid(scheme: Scheme, r: f64, grid_step: f64) -> Result<(SwitchFraction, f64)> {
    let family = match scheme {
        Scheme::OnOffIa => IaFamily::SymbolExtension,
        Scheme::OnOffIaa => IaFamily::Alamouti,
        other => {
            return Err(Error::InvalidArgument(format!(
                "{other} is not an on-off scheme"
            )))
        }
    };
    if !(grid_step > 0.0 && grid_step <= 0.01) {
        return Err(Error::domain("grid_step", grid_step, "(0, 0.01]"));
    }
    let steps = (1.0 / grid_step - 1e-9).ceil() as usize;
    let mut best = (SwitchFraction::OFF, d_onoff(family, r, SwitchFraction::OFF)?);
    for k in 1..=steps {
        let a = SwitchFraction((k as f64 * grid_step).min(1.0));
        let d = d_onoff(family, r, a)?;
        if d > best.1 {
            best = (a, d);
        }
    }
    Ok(best)
}

/// Diversity of `scheme` at `r` under `policy`, together with the fraction used.
pub fn evaluate(scheme: Scheme, r: f64, policy: APolicy) -> Result<DmtPoint> {
    let a = match (scheme.fixed_fraction(), policy) {
        (Some(pinned), APolicy::Auto) => pinned,
        (Some(pinned), APolicy::Fixed(a)) if a == pinned => pinned,
        (Some(_), APolicy::Fixed(_)) => {
            return Err(Error::InvalidArgument(format!(
                "{scheme} has a pinned switch fraction"
            )))
        }
        (None, APolicy::Fixed(a)) => a,
        (None, APolicy::Auto) if r <= 0.0 => SwitchFraction::OFF,
        (None, APolicy::Auto) => optimal_a(scheme, r)?,
    };
    let d = match scheme.family() {
        None => d_star_22(r)?,
        Some(family) => d_onoff(family, r, a)?,
    };
    Ok(DmtPoint { r, a, d })
}

pub fn dmt_curve(scheme: Scheme, r_grid: &[f64], policy: APolicy) -> Result<DmtCurve> {
    if r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "r grid must be strictly increasing".into(),
        ));
    }
    let points = r_grid
        .iter()
        .map(|&r| evaluate(scheme, r, policy))
        .collect::<Result<Vec<_>>>()?;
    Ok(DmtCurve { scheme, points })
}

/// `n` evenly spaced values from `lo` to `hi` inclusive, with the last value
/// exactly `hi`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(x: f64) -> SwitchFraction {
        SwitchFraction::new(x).unwrap()
    }

    fn close(x: f64, y: f64, tol: f64) -> bool {
        (x - y).abs() <= tol
    }

    #[test]
    fn point_to_point_values() {
        assert_eq!(d_star_22(0.0).unwrap(), 4.0);
        assert_eq!(d_star_22(1.0).unwrap(), 1.0);
        assert_eq!(d_star_22(0.5).unwrap(), 2.5);
        assert_eq!(d_star_22(2.0).unwrap(), 0.0);
        assert!(d_star_22(2.1).is_err());
        assert!(d_star_22(-0.1).is_err());
    }

    #[test]
    fn onoff_ia_values() {
        assert_eq!(d_onoff_ia(0.0, a(0.0)).unwrap(), 4.0);
        assert!(close(d_onoff_ia(1.0, a(0.2)).unwrap(), 0.5, 1e-12));
        assert!(close(d_onoff_ia(1.0, a(1.0)).unwrap(), 0.25, 1e-12));
        assert!(close(d_onoff_ia(4.0 / 3.0, a(1.0)).unwrap(), 0.0, 1e-12));
        assert!(d_onoff_ia(1.4, a(0.5)).is_err());
    }

    #[test]
    fn onoff_iaa_values() {
        assert_eq!(d_onoff_iaa(0.0, a(0.0)).unwrap(), 4.0);
        assert!(close(d_onoff_iaa(1.0, a(3.0 / 7.0)).unwrap(), 1.0, 1e-12));
        assert!(close(d_onoff_iaa(1.2, a(0.88622)).unwrap(), 0.32297, 1e-5));
    }

    #[test]
    fn negative_formula_values_clamp_to_zero() {
        // 6 - 3r - 2a < 0 is impossible on the domain, but 6 - 6r + 2a can
        // only vanish at r = 4/3, a = 1; pushing r to the edge with small a
        // gives a negative second bound.
        let [_, _, f3, _] = component_functions(IaFamily::SymbolExtension, a(0.1), 4.0 / 3.0);
        assert!(f3 < 0.0);
        assert_eq!(d_onoff_ia(4.0 / 3.0, a(0.1)).unwrap(), 0.0);
    }

    #[test]
    fn optimal_fractions() {
        assert_eq!(optimal_a_ia(0.5).unwrap().value(), 0.0);
        assert_eq!(optimal_a_ia(0.8).unwrap().value(), 0.0);
        assert_eq!(optimal_a_ia(0.9).unwrap().value(), 0.2);
        assert!(close(optimal_a_ia(1.2).unwrap().value(), 0.9, 1e-15));
        assert!(close(optimal_a_iaa(0.9).unwrap().value(), 0.35, 1e-12));
        assert_eq!(optimal_a_iaa(0.97).unwrap().value(), 3.0 / 7.0);
        let expected = (2.4 + 3.0 * 4.64f64.sqrt()) / 10.0;
        assert!(close(optimal_a_iaa(1.2).unwrap().value(), expected, 1e-15));
        assert!(close(expected, 0.886220, 1e-6));
        assert!(optimal_a_ia(0.0).is_err());
        assert!(optimal_a_iaa(1.5).is_err());
    }

    #[test]
    fn grid_optimiser_examples() {
        let (best_a, d) = optimize_a_grid(Scheme::OnOffIa, 0.9, 1e-4).unwrap();
        assert!(close(d, 1.25, 1e-3), "{d}");
        assert!(close(best_a.value(), 0.2, 1e-3), "{best_a:?}");
        let (_, d) = optimize_a_grid(Scheme::OnOffIaa, 1.0, 1e-4).unwrap();
        assert!(close(d, 1.0, 1e-3));
        let (_, d) = optimize_a_grid(Scheme::OnOffIa, 0.5, 1e-4).unwrap();
        assert!(close(d, 2.5, 1e-3));
        assert!(optimize_a_grid(Scheme::OnOffIa, 0.5, 0.02).is_err());
        assert!(optimize_a_grid(Scheme::PointToPoint22, 0.5, 1e-3).is_err());
    }

    #[test]
    fn grid_ties_prefer_smaller_fraction() {
        // For r <= 4/5 every a up to some bound achieves d*_{2,2}; a = 0 wins.
        let (best_a, d) = optimize_a_grid(Scheme::OnOffIa, 0.3, 1e-3).unwrap();
        assert_eq!(best_a.value(), 0.0);
        assert_eq!(d, 4.0 - 0.9);
    }

    #[test]
    fn component_intersections() {
        for r in [0.85, 0.9, 1.0] {
            let [_, _, f3, f4] = f_functions(Scheme::OnOffIa, a(0.2), r).unwrap();
            assert!(close(f3, f4, 1e-12), "r={r}");
            let [_, _, f3, f4] = f_functions(Scheme::OnOffIaa, a(3.0 / 7.0), r).unwrap();
            assert!(close(f3, f4, 1e-12), "r={r}");
        }
        for r in [0.4, 1.1, 1.3] {
            let [_, f2, _, f4] = f_functions(Scheme::OnOffIa, a(0.75 * r), r).unwrap();
            assert!(close(f2, f4, 1e-12), "r={r}");
        }
        let [_, f2, _, f4] = f_functions(Scheme::OnOffIa, a(0.0), 1.0).unwrap();
        assert!(f2.is_infinite() && f4.is_infinite());
        assert!(f_functions(Scheme::PointToPoint22, a(0.5), 1.0).is_err());
    }

    #[test]
    fn curve_examples() {
        let c = dmt_curve(Scheme::PointToPoint22, &[0.0, 1.0, 2.0], APolicy::Auto).unwrap();
        let ds: Vec<f64> = c.points.iter().map(|p| p.d).collect();
        assert_eq!(ds, [4.0, 1.0, 0.0]);

        let p = evaluate(Scheme::OnOffIa, 2.0 / 3.0, APolicy::Auto).unwrap();
        assert!(close(p.d, 2.0, 1e-12));
        let p = evaluate(Scheme::OnOffIaa, 4.0 / 3.0, APolicy::Auto).unwrap();
        assert!(close(p.d, 0.0, 1e-12));
        let p = evaluate(Scheme::OnOffIaa, 0.0, APolicy::Auto).unwrap();
        assert_eq!((p.a.value(), p.d), (0.0, 4.0));

        assert!(dmt_curve(Scheme::OnOffIa, &[0.5, 0.5], APolicy::Auto).is_err());
        assert!(dmt_curve(Scheme::OnOffIa, &[0.5, 1.5], APolicy::Auto).is_err());
        assert!(evaluate(Scheme::ConventionalIa, 0.5, APolicy::Fixed(a(0.3))).is_err());
        let p = evaluate(Scheme::ConventionalIa, 1.0, APolicy::Auto).unwrap();
        assert!(close(p.d, 0.25, 1e-12));
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("onoff".parse::<Scheme>().is_err());
    }

    #[test]
    fn linspace_hits_endpoint() {
        let g = linspace(0.0, 4.0 / 3.0, 7);
        assert_eq!(g.len(), 7);
        assert_eq!(*g.last().unwrap(), 4.0 / 3.0);
        assert_eq!(g[0], 0.0);
    }
}
