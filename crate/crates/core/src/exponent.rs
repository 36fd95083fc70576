//! Outage exponents as small linear programs.
//!
//! Writing `|h|^2 = rho^(-v)`, the probability of a set of channel
//! realisations decays as `rho^(-inf sum v)` over the part of the set with
//! `v >= 0`. The dominant outage events reduce to polyhedra in a handful of
//! exponents, so the infimum can be found exactly by enumerating vertices.
//! A brute-force grid search is provided as an independent check.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dmt::{component_functions, IaFamily, Scheme, SwitchFraction};
use crate::error::{Error, Result};

/// Linear constraint `coefficients . v >= bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coefficients: Vec<f64>,
    pub bound: f64,
}

impl Constraint {
    fn slack(&self, v: &[f64]) -> f64 {
        dot(&self.coefficients, v) - self.bound
    }
}

/// Minimise `objective . v` over `v >= 0` subject to every constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentProblem {
    pub labels: Vec<String>,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl ExponentProblem {
    pub fn new(labels: &[&str], objective: Vec<f64>, constraints: Vec<Constraint>) -> Result<Self> {
        let dim = objective.len();
        if dim == 0 || labels.len() != dim {
            return Err(Error::Dimension(format!(
                "{} labels for {dim} objective coefficients",
                labels.len()
            )));
        }
        if constraints.is_empty() {
            return Err(Error::InvalidArgument("problem needs at least one constraint".into()));
        }
        if let Some(c) = constraints.iter().find(|c| c.coefficients.len() != dim) {
            return Err(Error::Dimension(format!(
                "constraint has {} coefficients, problem has {dim} variables",
                c.coefficients.len()
            )));
        }
        let finite = objective.iter().all(|x| x.is_finite())
            && constraints
                .iter()
                .all(|c| c.bound.is_finite() && c.coefficients.iter().all(|x| x.is_finite()));
        if !finite {
            return Err(Error::InvalidArgument("non-finite problem data".into()));
        }
        if objective.iter().any(|&x| x < 0.0) {
            return Err(Error::InvalidArgument(
                "objective coefficients must be nonnegative".into(),
            ));
        }
        Ok(Self {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            objective,
            constraints,
        })
    }

    pub fn dimension(&self) -> usize {
        self.objective.len()
    }

    /// True when the origin is feasible, so the exponent is zero.
    pub fn is_degenerate(&self) -> bool {
        self.constraints.iter().all(|c| c.bound <= 0.0)
    }

    pub fn is_feasible(&self, v: &[f64], tol: f64) -> bool {
        v.iter().all(|&x| x >= -tol) && self.constraints.iter().all(|c| c.slack(v) >= -tol)
    }

    pub fn value(&self, v: &[f64]) -> f64 {
        dot(&self.objective, v)
    }

    fn scale(&self) -> f64 {
        self.constraints
            .iter()
            .flat_map(|c| c.coefficients.iter().chain(std::iter::once(&c.bound)))
            .fold(1.0f64, |m, x| m.max(x.abs()))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn c(coefficients: &[f64], bound: f64) -> Constraint {
    Constraint {
        coefficients: coefficients.to_vec(),
        bound,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutageSetId {
    O1,
    O2,
    O3,
    O4,
    B1a,
    B1b,
    B2,
}

impl OutageSetId {
    pub const ALL: [OutageSetId; 7] = [
        OutageSetId::O1,
        OutageSetId::O2,
        OutageSetId::O3,
        OutageSetId::O4,
        OutageSetId::B1a,
        OutageSetId::B1b,
        OutageSetId::B2,
    ];

    /// Sets whose minimum gives the exponent of `event` for `family`.
    pub fn for_event(family: IaFamily, event: OutageEvent) -> &'static [OutageSetId] {
        match (family, event) {
            (IaFamily::SymbolExtension, OutageEvent::E1) => &[OutageSetId::O1, OutageSetId::O2],
            (IaFamily::SymbolExtension, OutageEvent::E2) => &[OutageSetId::O3, OutageSetId::O4],
            (IaFamily::Alamouti, OutageEvent::E1) => &[OutageSetId::B1a, OutageSetId::B1b],
            (IaFamily::Alamouti, OutageEvent::E2) => &[OutageSetId::B2],
        }
    }
}

/// The two dominant outage events: a single user's rate (`E1`) and the
/// sum rate at one receiver (`E2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutageEvent {
    E1,
    E2,
}

impl FromStr for OutageEvent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "e1" => Ok(OutageEvent::E1),
            "e2" => Ok(OutageEvent::E2),
            _ => Err(Error::InvalidArgument(format!("unknown event '{s}' (expected e1 or e2)"))),
        }
    }
}

impl fmt::Display for OutageEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutageEvent::E1 => "e1",
            OutageEvent::E2 => "e2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Lp,
    Grid { step: f64 },
}

/// Right-hand sides `6 - 3r - 2a` and `6 - 6r + 2a` of the two events.
pub fn event_bounds(a: f64, r: f64) -> (f64, f64) {
    (6.0 - 3.0 * r - 2.0 * a, 6.0 - 6.0 * r + 2.0 * a)
}

fn check_interior(a: SwitchFraction, r: f64) -> Result<f64> {
    let a = a.value();
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::domain("a", a, "(0, 1)"));
    }
    if !(r.is_finite() && (-1e-12..=4.0 / 3.0 + 1e-12).contains(&r)) {
        return Err(Error::domain("r", r, "[0, 4/3]"));
    }
    Ok(a)
}

pub fn build_problem(set: OutageSetId, a: SwitchFraction, r: f64) -> Result<ExponentProblem> {
    let a = check_interior(a, r)?;
    let (b1, b2) = event_bounds(a, r);
    let s = a + 3.0;
    let t = 3.0 * (1.0 - a);
    let k = 4.0 * a;
    match set {
        OutageSetId::O1 => ExponentProblem::new(
            &["v11", "v22"],
            vec![2.0, 2.0],
            vec![c(&[s, t], b1)],
        ),
        OutageSetId::O2 => ExponentProblem::new(
            &["v11", "v12", "v21"],
            vec![1.0, 1.0, 1.0],
            vec![c(&[k, t, t], b1), c(&[1.0, -1.0, -1.0], 0.0)],
        ),
        OutageSetId::O3 => ExponentProblem::new(
            &["v11", "v22", "v11[22]"],
            vec![4.0, 4.0, 1.0],
            vec![c(&[s, t, k], b2)],
        ),
        OutageSetId::O4 => ExponentProblem::new(
            &["v11[12]", "v22[11]", "v11[11]", "v11[22]"],
            vec![3.0, 3.0, 1.0, 1.0],
            vec![c(&[t, t, k, k], b2), c(&[-1.0, -1.0, 1.0, 0.0], 0.0)],
        ),
        OutageSetId::B1a => ExponentProblem::new(
            &["v11", "v22"],
            vec![2.0, 2.0],
            vec![c(&[s, t], b1)],
        ),
        // The Alamouti term is limited by the weaker of two coefficients;
        // `p` carries it and `q >= p` its twin.
        OutageSetId::B1b => ExponentProblem::new(
            &["p", "v12", "v21", "q"],
            vec![1.0, 1.0, 1.0, 1.0],
            vec![
                c(&[k, t, t, 0.0], b1),
                c(&[1.0, -1.0, -1.0, 0.0], 0.0),
                c(&[-1.0, 0.0, 0.0, 1.0], 0.0),
            ],
        ),
        OutageSetId::B2 => ExponentProblem::new(
            &["v11", "v22", "u1", "u2"],
            vec![4.0, 4.0, 1.0, 1.0],
            vec![c(&[s, t, k, 0.0], b2), c(&[0.0, 0.0, -1.0, 1.0], 0.0)],
        ),
    }
}

/// Single-user event over all four exponents of one 2x2 link, without the
/// case split. Variables `v11, v12, v21, v22`.
pub fn unreduced_ia_e1(a: SwitchFraction, r: f64) -> Result<ExponentProblem> {
    let a = check_interior(a, r)?;
    let (b1, _) = event_bounds(a, r);
    let t = 3.0 * (1.0 - a);
    let k = 4.0 * a;
    ExponentProblem::new(
        &["v11", "v12", "v21", "v22"],
        vec![1.0; 4],
        vec![c(&[k + t, 0.0, 0.0, t], b1), c(&[k, t, t, 0.0], b1)],
    )
}

/// Alamouti analogue of [`unreduced_ia_e1`] with the second coefficient
/// `w` of the Alamouti pair as a fifth variable.
pub fn unreduced_iaa_e1(a: SwitchFraction, r: f64) -> Result<ExponentProblem> {
    let a = check_interior(a, r)?;
    let (b1, _) = event_bounds(a, r);
    let t = 3.0 * (1.0 - a);
    let k = 4.0 * a;
    ExponentProblem::new(
        &["v11", "v12", "v21", "v22", "w"],
        vec![1.0; 5],
        vec![
            c(&[k + t, 0.0, 0.0, t, 0.0], b1),
            c(&[t, 0.0, 0.0, t, k], b1),
            c(&[k, t, t, 0.0, 0.0], b1),
            c(&[0.0, t, t, 0.0, k], b1),
        ],
    )
}

/// Solves the square system `m x = rhs` in place; `None` if singular.
fn solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in (col + 1)..n {
            let f = m[row][col] / m[col][col];
            if f != 0.0 {
                let (top, bottom) = m.split_at_mut(row);
                for (x, p) in bottom[0][col..].iter_mut().zip(&top[col][col..]) {
                    *x -= f * p;
                }
                rhs[row] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = ((row + 1)..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (rhs[row] - tail) / m[row][row];
    }
    Some(x)
}

/// Calls `f` with every `k`-subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Exact minimum by vertex enumeration over constraint and coordinate
/// hyperplanes.
pub fn lp_min(p: &ExponentProblem) -> Result<f64> {
    Ok(p.value(&lp_argmin(p)?))
}

/// A minimising vertex.
pub fn lp_argmin(p: &ExponentProblem) -> Result<Vec<f64>> {
    let dim = p.dimension();
    let mut planes: Vec<(Vec<f64>, f64)> = p
        .constraints
        .iter()
        .map(|c| (c.coefficients.clone(), c.bound))
        .collect();
    for i in 0..dim {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        planes.push((e, 0.0));
    }
    let tol = 1e-9 * p.scale();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for_each_subset(planes.len(), dim, |subset| {
        let m = subset.iter().map(|&i| planes[i].0.clone()).collect();
        let rhs = subset.iter().map(|&i| planes[i].1).collect();
        let Some(x) = solve(m, rhs) else { return };
        if !p.is_feasible(&x, tol) {
            return;
        }
        let x: Vec<f64> = x.into_iter().map(|v| v.max(0.0)).collect();
        let value = p.value(&x);
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, x));
        }
    });
    best.map(|(_, x)| x).ok_or(Error::Infeasible)
}

/// Exhaustive minimum over the grid `{0, step, 2 step, ...}^dim` inside
/// `[0, v_max]^dim`, `v_max = max(10, 2 max_bound / min_positive_coefficient)`.
///
/// The search is exact over the grid. The last coordinate is set to its
/// smallest feasible grid value directly, and branches whose partial
/// objective already reaches the incumbent are cut, which is valid because
/// objective coefficients are nonnegative.
pub fn grid_min(p: &ExponentProblem, step: f64) -> Result<f64> {
    if !(step > 0.0 && step <= 0.05) {
        return Err(Error::domain("step", step, "(0, 0.05]"));
    }
    if p.is_degenerate() {
        return Ok(0.0);
    }
    let max_bound = p.constraints.iter().map(|c| c.bound).fold(0.0f64, f64::max);
    let min_coef = p
        .constraints
        .iter()
        .flat_map(|c| c.coefficients.iter().copied())
        .filter(|&x| x > 0.0)
        .fold(f64::INFINITY, f64::min);
    let v_max = if min_coef.is_finite() {
        10f64.max(2.0 * max_bound / min_coef)
    } else {
        10.0
    };
    let search = GridSearch {
        p,
        step,
        last_index: (v_max / step + 1e-9).floor() as u64,
        tol: 1e-12 * p.scale(),
    };
    let dim = p.dimension();
    let mut v = vec![0.0; dim];
    let mut best = f64::INFINITY;
    // Seed the incumbent with single-axis points.
    for i in 0..dim {
        v.fill(0.0);
        if let Some(x) = search.smallest_feasible(&v, i) {
            v[i] = x;
            best = best.min(p.value(&v));
        }
    }
    v.fill(0.0);
    search.descend(&mut v, 0, 0.0, &mut best);
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::Infeasible)
    }
}

struct GridSearch<'a> {
    p: &'a ExponentProblem,
    step: f64,
    last_index: u64,
    tol: f64,
}

impl GridSearch<'_> {
    fn point(&self, k: u64) -> f64 {
        k as f64 * self.step
    }

    /// Smallest grid value of coordinate `i` making `v` feasible, with every
    /// other coordinate held fixed.
    fn smallest_feasible(&self, v: &[f64], i: usize) -> Option<f64> {
        let mut lo = 0.0f64;
        let mut hi = self.point(self.last_index);
        for c in &self.p.constraints {
            let rest: f64 = c
                .coefficients
                .iter()
                .zip(v)
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, (a, x))| a * x)
                .sum();
            let need = c.bound - rest;
            let a = c.coefficients[i];
            if a > 0.0 {
                lo = lo.max((need - self.tol) / a);
            } else if a < 0.0 {
                hi = hi.min((need - self.tol) / a);
            } else if need > self.tol {
                return None;
            }
        }
        let k = (lo / self.step - 1e-9).ceil().max(0.0) as u64;
        let x = self.point(k);
        (k <= self.last_index && x <= hi + 1e-12).then_some(x)
    }

    /// Whether some completion of `v[..=i]` inside the box can still meet
    /// constraint `c`.
    fn reachable(&self, c: &Constraint, v: &[f64], i: usize) -> bool {
        let top = self.point(self.last_index);
        let fixed: f64 = c.coefficients[..=i].iter().zip(&v[..=i]).map(|(a, x)| a * x).sum();
        let best_rest: f64 = c.coefficients[i + 1..].iter().map(|a| a.max(0.0) * top).sum();
        fixed + best_rest >= c.bound - self.tol
    }

    fn descend(&self, v: &mut [f64], i: usize, partial: f64, best: &mut f64) {
        let dim = v.len();
        let w = self.p.objective[i];
        if i == dim - 1 {
            if let Some(x) = self.smallest_feasible(v, i) {
                let value = partial + w * x;
                if value < *best {
                    *best = value;
                }
            }
            return;
        }
        'grid: for k in 0..=self.last_index {
            let x = self.point(k);
            if partial + w * x >= *best {
                break;
            }
            v[i] = x;
            for c in &self.p.constraints {
                if !self.reachable(c, v, i) {
                    // Raising v[i] cannot help a constraint it enters with a
                    // nonpositive coefficient.
                    if c.coefficients[i] <= 0.0 {
                        break 'grid;
                    }
                    continue 'grid;
                }
            }
            self.descend(v, i + 1, partial + w * x, best);
        }
        v[i] = 0.0;
    }
}

/// The closed-form exponent of `event`, clamped at zero. At `a = 0` the
/// `1/(k a)` branch is infinite.
pub fn closed_form_exponent(family: IaFamily, event: OutageEvent, a: SwitchFraction, r: f64) -> f64 {
    let [f1, f2, f3, f4] = component_functions(family, a, r);
    let e = match event {
        OutageEvent::E1 => f1.min(f2),
        OutageEvent::E2 => f3.min(f4),
    };
    e.max(0.0)
}

/// Exponent of `event` for an on-off scheme, computed as the minimum over
/// the event's case problems. Boundary fractions `a in {0, 1}` use the
/// closed form.
pub fn outage_exponent(
    scheme: Scheme,
    event: OutageEvent,
    a: SwitchFraction,
    r: f64,
    method: Method,
) -> Result<f64> {
    let family = scheme
        .family()
        .ok_or_else(|| Error::InvalidArgument(format!("{scheme} has no IA outage events")))?;
    if a.value() == 0.0 || a.value() == 1.0 {
        if !(r.is_finite() && (-1e-12..=4.0 / 3.0 + 1e-12).contains(&r)) {
            return Err(Error::domain("r", r, "[0, 4/3]"));
        }
        return Ok(closed_form_exponent(family, event, a, r));
    }
    let mut best = f64::INFINITY;
    for &set in OutageSetId::for_event(family, event) {
        let problem = build_problem(set, a, r)?;
        let value = match method {
            Method::Lp => lp_min(&problem)?,
            Method::Grid { step } => grid_min(&problem, step)?,
        };
        best = best.min(value);
    }
    Ok(best.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(x: f64) -> SwitchFraction {
        SwitchFraction::new(x).unwrap()
    }

    fn single(obj: &[f64], cons: &[(&[f64], f64)]) -> ExponentProblem {
        let labels: Vec<String> = (0..obj.len()).map(|i| format!("x{i}")).collect();
        let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
        ExponentProblem::new(
            &labels,
            obj.to_vec(),
            cons.iter().map(|(co, b)| c(co, *b)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn lp_examples() {
        let p = single(&[2.0, 2.0], &[(&[3.2, 2.4], 2.6)]);
        assert!((lp_min(&p).unwrap() - 1.625).abs() < 1e-12);
        let x = lp_argmin(&p).unwrap();
        assert!(x[1].abs() < 1e-12);
        let p = single(&[1.0], &[(&[1.0], 5.0)]);
        assert!((lp_min(&p).unwrap() - 5.0).abs() < 1e-12);
        let p = single(&[2.0, 2.0], &[(&[1.0, 1.0], 1.0)]);
        assert!((lp_min(&p).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lp_infeasible() {
        let p = single(&[1.0], &[(&[-1.0], 1.0)]);
        assert_eq!(lp_min(&p), Err(Error::Infeasible));
    }

    #[test]
    fn grid_examples() {
        let p = single(&[2.0, 2.0], &[(&[3.2, 2.4], 2.6)]);
        assert!((grid_min(&p, 0.005).unwrap() - 1.625).abs() <= 0.02);
        let p = single(&[1.0, 1.0], &[(&[1.0, 1.0], -1.0)]);
        assert_eq!(grid_min(&p, 0.01).unwrap(), 0.0);
        assert!(grid_min(&p, 0.1).is_err());
    }

    #[test]
    fn o1_example_problem() {
        let p = build_problem(OutageSetId::O1, a(0.2), 1.0).unwrap();
        assert_eq!(p.dimension(), 2);
        assert_eq!(p.constraints.len(), 1);
        let con = &p.constraints[0];
        assert!((con.coefficients[0] - 3.2).abs() < 1e-12);
        assert!((con.coefficients[1] - 2.4).abs() < 1e-12);
        assert!((con.bound - 2.6).abs() < 1e-12);
        assert_eq!(p.objective, vec![2.0, 2.0]);
        assert_eq!(build_problem(OutageSetId::O3, a(0.2), 1.0).unwrap().dimension(), 3);
        assert_eq!(build_problem(OutageSetId::O2, a(0.2), 1.0).unwrap().constraints.len(), 2);
        assert!(build_problem(OutageSetId::O1, a(0.0), 1.0).is_err());
        assert!(build_problem(OutageSetId::O1, a(1.0), 1.0).is_err());
    }

    #[test]
    fn exponent_examples() {
        let cases = [
            (Scheme::OnOffIa, OutageEvent::E1, 0.2, 1.0, 1.625),
            (Scheme::OnOffIa, OutageEvent::E2, 0.2, 1.0, 0.5),
            (Scheme::OnOffIa, OutageEvent::E1, 0.5, 1.0, 1.0),
            (Scheme::OnOffIaa, OutageEvent::E1, 3.0 / 7.0, 1.0, 1.25),
        ];
        for (scheme, event, av, r, expected) in cases {
            let got = outage_exponent(scheme, event, a(av), r, Method::Lp).unwrap();
            assert!((got - expected).abs() < 1e-9, "{scheme} {event} {av} {r}: {got}");
        }
    }

    #[test]
    fn boundary_fractions_use_closed_form() {
        let e = outage_exponent(Scheme::OnOffIa, OutageEvent::E1, a(1.0), 1.0, Method::Lp).unwrap();
        assert!((e - 0.25).abs() < 1e-12);
        let e = outage_exponent(Scheme::OnOffIa, OutageEvent::E2, a(0.0), 0.9, Method::Lp).unwrap();
        assert!((e - 0.8).abs() < 1e-12);
    }

    #[test]
    fn subsets_enumerated() {
        let mut n = 0;
        for_each_subset(5, 3, |_| n += 1);
        assert_eq!(n, 10);
    }
}
