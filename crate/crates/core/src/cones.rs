//! Normal cones of finite point configurations.
//!
//! For a finite set X with values u and directions σ this module decides
//! membership in the generalized normal cone
//! `N^{u,ρ}_p X = {ξ : |ξ| = ρ, ⟨x − p, ξ⟩ ≤ u(x) − u(p) ∀x}`,
//! checks the graph-lift identification, and estimates the spherical measure
//! of restricted cones `N^u_p X / σ = N^u_p X ∩ {⟨·, σ(p)⟩ ≥ 0}` both by
//! Monte Carlo (any dimension) and exactly by arc arithmetic (dimension 2).

use std::f64::consts::{PI, TAU};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euclid::{dot, norm, sphere_area, Point, SampleStream};
use crate::montecarlo::{map_chunks, MeasureEstimate};

/// Absolute tolerance on gaps of `u(x) − ⟨x, ξ⟩` below which two points tie.
pub const TIE_TOL: f64 = 1e-9;

/// Finite configuration X ⊂ R^N with values u and optional unit directions σ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPointSet {
    dim: usize,
    points: Vec<Vec<f64>>,
    u_values: Vec<f64>,
    sigma: Option<Vec<Vec<f64>>>,
}

impl LabeledPointSet {
    pub fn new(points: Vec<Point>, u_values: Vec<f64>, sigma: Option<Vec<Point>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain(
                "point set must contain at least one point".into(),
            ));
        }
        let dim = points[0].dim();
        if points.iter().any(|p| p.dim() != dim) {
            return Err(Error::Domain("points have mixed dimensions".into()));
        }
        if u_values.len() != points.len() {
            return Err(Error::Domain(format!(
                "{} u values for {} points",
                u_values.len(),
                points.len()
            )));
        }
        if u_values.iter().any(|u| !u.is_finite()) {
            return Err(Error::Domain("u values must be finite".into()));
        }
        for i in 0..points.len() {
            for j in 0..i {
                if points[i] == points[j] {
                    return Err(Error::Domain(format!("points {j} and {i} coincide")));
                }
            }
        }
        let sigma = match sigma {
            None => None,
            Some(s) => {
                if s.len() != points.len() {
                    return Err(Error::Domain(
                        "one sigma direction per point required".into(),
                    ));
                }
                for (i, v) in s.iter().enumerate() {
                    if v.dim() != dim {
                        return Err(Error::Domain(format!("sigma {i} has wrong dimension")));
                    }
                    if (v.norm() - 1.0).abs() > 1e-12 {
                        return Err(Error::Domain(format!(
                            "sigma {i} is not a unit vector (|σ| = {})",
                            v.norm()
                        )));
                    }
                }
                Some(s.into_iter().map(Point::into_inner).collect())
            }
        };
        Ok(LabeledPointSet {
            dim,
            points: points.into_iter().map(Point::into_inner).collect(),
            u_values,
            sigma,
        })
    }

    /// Parse the whitespace-separated text format: per line N coordinates,
    /// the u value, then N sigma components. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("line {}: {t:?}: {e}", lineno + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let width = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Parse("no points in input".into()))?;
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::Parse("rows have differing column counts".into()));
        }
        if width < 3 || width % 2 == 0 {
            return Err(Error::Parse(format!(
                "expected 2N + 1 columns (coordinates, u, sigma), found {width}"
            )));
        }
        let dim = (width - 1) / 2;
        let mut points = Vec::new();
        let mut u = Vec::new();
        let mut sigma = Vec::new();
        for r in rows {
            points.push(Point::new(r[..dim].to_vec())?);
            u.push(r[dim]);
            let s = r[dim + 1..].to_vec();
            let n = norm(&s);
            // unit up to the precision of the file
            if (n - 1.0).abs() > 1e-6 {
                return Err(Error::Parse(format!("sigma {s:?} is not a unit vector")));
            }
            sigma.push(Point::new(s.iter().map(|c| c / n).collect())?);
        }
        LabeledPointSet::new(points, u, Some(sigma))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# coords..., u, sigma...\n");
        for i in 0..self.len() {
            let mut cols: Vec<String> =
                self.points[i].iter().map(|c| format!("{c:.17e}")).collect();
            cols.push(format!("{:.17e}", self.u_values[i]));
            if let Some(s) = &self.sigma {
                cols.extend(s[i].iter().map(|c| format!("{c:.17e}")));
            }
            out.push_str(&cols.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn u(&self, i: usize) -> f64 {
        self.u_values[i]
    }

    pub fn sigma(&self, i: usize) -> Option<&[f64]> {
        self.sigma.as_ref().map(|s| s[i].as_slice())
    }

    pub fn has_sigma(&self) -> bool {
        self.sigma.is_some()
    }

    /// The same configuration with u replaced.
    pub fn with_u(&self, u_values: Vec<f64>) -> Result<Self> {
        let mut s = self.clone();
        if u_values.len() != s.len() || u_values.iter().any(|u| !u.is_finite()) {
            return Err(Error::Domain(
                "u must be finite with one value per point".into(),
            ));
        }
        s.u_values = u_values;
        Ok(s)
    }
}

/// A candidate direction ξ of length ρ at a base point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeQuery {
    pub base_index: usize,
    pub direction: Vec<f64>,
    pub rho: f64,
}

impl ConeQuery {
    pub fn new(base_index: usize, direction: Vec<f64>, rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::Domain(format!("rho must be > 0, got {rho}")));
        }
        if (norm(&direction) - rho).abs() > 1e-10 {
            return Err(Error::Domain(format!(
                "|direction| = {} does not match rho = {rho}",
                norm(&direction)
            )));
        }
        Ok(ConeQuery {
            base_index,
            direction,
            rho,
        })
    }

    fn check(&self, set: &LabeledPointSet) -> Result<()> {
        if self.direction.len() != set.dim() {
            return Err(Error::Domain(format!(
                "direction has dimension {}, set has {}",
                self.direction.len(),
                set.dim()
            )));
        }
        if self.base_index >= set.len() {
            return Err(Error::Domain(format!(
                "base index {} out of range",
                self.base_index
            )));
        }
        Ok(())
    }
}

fn in_generalized_cone(set: &LabeledPointSet, p: usize, xi: &[f64]) -> bool {
    let base = set.point(p);
    let up = set.u(p);
    (0..set.len()).all(|i| {
        let x = set.point(i);
        let lhs: f64 = x
            .iter()
            .zip(base)
            .zip(xi)
            .map(|((a, b), c)| (a - b) * c)
            .sum();
        lhs <= set.u(i) - up
    })
}

/// ξ ∈ N^{u,ρ}_p X.
pub fn generalized_cone_contains(set: &LabeledPointSet, query: &ConeQuery) -> Result<bool> {
    query.check(set)?;
    Ok(in_generalized_cone(set, query.base_index, &query.direction))
}

/// Checks that `ξ ∈ N^u_p X` agrees with `(ξ, −1) ∈ N_{p̃} X̃` for the graph
/// lift `x̃ = (x, u(x))`. Always true; a false return is a bug.
pub fn lift_equivalence(set: &LabeledPointSet, query: &ConeQuery) -> Result<bool> {
    query.check(set)?;
    let direct = in_generalized_cone(set, query.base_index, &query.direction);
    let p = query.base_index;
    let lift = |i: usize| {
        let mut v = set.point(i).to_vec();
        v.push(set.u(i));
        v
    };
    let base = lift(p);
    let mut bar = query.direction.clone();
    bar.push(-1.0);
    let lifted = (0..set.len()).all(|i| {
        let x = lift(i);
        let mut acc = 0.0;
        for k in 0..x.len() {
            acc += (x[k] - base[k]) * bar[k];
        }
        acc <= 0.0
    });
    Ok(direct == lifted)
}

/// Per point: is σ(p) in the classical normal cone N_p X?
pub fn sigma_validity(set: &LabeledPointSet) -> Result<Vec<bool>> {
    if !set.has_sigma() {
        return Err(Error::Precondition("sigma directions are required".into()));
    }
    Ok((0..set.len())
        .map(|p| {
            let s = set.sigma(p).unwrap();
            let base = set.point(p);
            (0..set.len()).all(|i| {
                let d: f64 = set
                    .point(i)
                    .iter()
                    .zip(base)
                    .zip(s)
                    .map(|((a, b), c)| (a - b) * c)
                    .sum();
                d <= 0.0
            })
        })
        .collect())
}

/// Minimizer of `u(x) − ⟨x, ξ⟩` and whether the runner-up is within [`TIE_TOL`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Contact {
    pub index: usize,
    pub tie: bool,
}

pub fn argmin_contact(set: &LabeledPointSet, xi: &[f64]) -> Result<Contact> {
    if set.is_empty() {
        return Err(Error::Domain("empty point set".into()));
    }
    if xi.len() != set.dim() {
        return Err(Error::Domain("direction dimension mismatch".into()));
    }
    if !(norm(xi) > 0.0) {
        return Err(Error::Domain("direction must be nonzero".into()));
    }
    let (index, best, second) = min_two(set, xi);
    Ok(Contact {
        index,
        tie: second - best < TIE_TOL,
    })
}

fn contact_value(set: &LabeledPointSet, i: usize, xi: &[f64]) -> f64 {
    set.u(i) - dot(set.point(i), xi)
}

fn min_two(set: &LabeledPointSet, xi: &[f64]) -> (usize, f64, f64) {
    let mut best = (0usize, f64::INFINITY);
    let mut second = f64::INFINITY;
    for i in 0..set.len() {
        let v = contact_value(set, i, xi);
        if v < best.1 {
            second = best.1;
            best = (i, v);
        } else if v < second {
            second = v;
        }
    }
    (best.0, best.1, second)
}

fn require_valid_sigma(set: &LabeledPointSet) -> Result<()> {
    if set.dim() < 2 {
        return Err(Error::Precondition(
            "restricted cone measures need N >= 2".into(),
        ));
    }
    let valid = sigma_validity(set)?;
    if let Some(bad) = valid.iter().position(|v| !v) {
        return Err(Error::Precondition(format!(
            "sigma({bad}) = {:?} is not in the normal cone at point {bad} = {:?}",
            set.sigma(bad).unwrap(),
            set.point(bad)
        )));
    }
    Ok(())
}

/// Tally of one Monte-Carlo pass over the ρ-sphere.
#[derive(Debug, Clone, Copy, Default)]
struct UnionTally {
    accepted: usize,
    ties: usize,
    covered: usize,
}

/// Monte-Carlo measure of `N^u X / σ` on the sphere of radius ρ, with the
/// fraction of tied samples and the coverage count of the argmin step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnionMeasure {
    pub estimate: MeasureEstimate,
    pub sphere_measure: f64,
    pub tie_fraction: f64,
    pub coverage: f64,
}

pub fn restricted_union_measure(
    set: &LabeledPointSet,
    rho: f64,
    samples: usize,
    stream: &SampleStream,
) -> Result<UnionMeasure> {
    require_valid_sigma(set)?;
    if !(rho > 0.0) || samples == 0 {
        return Err(Error::Domain("rho > 0 and samples > 0 required".into()));
    }
    let n = set.dim();
    let tallies = map_chunks(samples, stream, |s, count| {
        let mut t = UnionTally::default();
        let mut vals = vec![0.0; set.len()];
        for _ in 0..count {
            let xi: Vec<f64> = s.unit_vector(n).into_iter().map(|c| c * rho).collect();
            let mut best = f64::INFINITY;
            for (i, v) in vals.iter_mut().enumerate() {
                *v = contact_value(set, i, &xi);
                best = best.min(*v);
            }
            if best.is_finite() {
                t.covered += 1;
            }
            let mut tied = 0;
            let mut ok = false;
            for (i, &v) in vals.iter().enumerate() {
                if v - best < TIE_TOL {
                    tied += 1;
                    ok |= dot(&xi, set.sigma(i).unwrap()) >= 0.0;
                }
            }
            if tied > 1 {
                t.ties += 1;
            }
            if ok {
                t.accepted += 1;
            }
        }
        t
    });
    let total = tallies
        .iter()
        .fold(UnionTally::default(), |a, b| UnionTally {
            accepted: a.accepted + b.accepted,
            ties: a.ties + b.ties,
            covered: a.covered + b.covered,
        });
    let sphere = sphere_area(n)? * rho.powi(n as i32 - 1);
    Ok(UnionMeasure {
        estimate: MeasureEstimate::from_hits(total.accepted, samples, sphere, stream.seed()),
        sphere_measure: sphere,
        tie_fraction: total.ties as f64 / samples as f64,
        coverage: total.covered as f64 / samples as f64,
    })
}

/// Per-point estimates of `|N^u_p X / σ|` and `|N^u_p X|` from one stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfCheck {
    pub restricted: MeasureEstimate,
    pub full: MeasureEstimate,
    pub ratio: f64,
    /// Standard error of the ratio, by the delta method.
    pub ratio_se: f64,
}

pub fn per_point_half_check(
    set: &LabeledPointSet,
    rho: f64,
    samples: usize,
    stream: &SampleStream,
) -> Result<Vec<HalfCheck>> {
    require_valid_sigma(set)?;
    if !(rho > 0.0) || samples == 0 {
        return Err(Error::Domain("rho > 0 and samples > 0 required".into()));
    }
    let n = set.dim();
    let k = set.len();
    let tallies = map_chunks(samples, stream, |s, count| {
        let mut full = vec![0usize; k];
        let mut restricted = vec![0usize; k];
        for _ in 0..count {
            let xi: Vec<f64> = s.unit_vector(n).into_iter().map(|c| c * rho).collect();
            for p in 0..k {
                if in_generalized_cone(set, p, &xi) {
                    full[p] += 1;
                    if dot(&xi, set.sigma(p).unwrap()) >= 0.0 {
                        restricted[p] += 1;
                    }
                }
            }
        }
        (full, restricted)
    });
    let sphere = sphere_area(n)? * rho.powi(n as i32 - 1);
    Ok((0..k)
        .map(|p| {
            let f: usize = tallies.iter().map(|t| t.0[p]).sum();
            let r: usize = tallies.iter().map(|t| t.1[p]).sum();
            let full = MeasureEstimate::from_hits(f, samples, sphere, stream.seed());
            let restricted = MeasureEstimate::from_hits(r, samples, sphere, stream.seed());
            let (ratio, ratio_se) = if f == 0 {
                (f64::NAN, f64::INFINITY)
            } else {
                // r | f is binomial(f, ratio) given the full-cone hits.
                let q = r as f64 / f as f64;
                (q, (q * (1.0 - q) / f as f64).sqrt())
            };
            HalfCheck {
                restricted,
                full,
                ratio,
                ratio_se,
            }
        })
        .collect())
}

/// Random points on an axis-aligned ellipsoid with semi-axes in [0.5, 1.5]
/// (so in convex position), u uniform in [0, 1] and σ the ellipsoid normals.
pub fn random_convex_configuration(
    dim: usize,
    count: usize,
    stream: &mut SampleStream,
) -> Result<LabeledPointSet> {
    if dim < 2 || count == 0 {
        return Err(Error::Domain("need dim >= 2 and at least one point".into()));
    }
    let axes: Vec<f64> = (0..dim).map(|_| 0.5 + stream.uniform()).collect();
    let mut points = Vec::with_capacity(count);
    let mut sigma = Vec::with_capacity(count);
    for _ in 0..count {
        let x: Vec<f64> = stream
            .unit_vector(dim)
            .iter()
            .zip(&axes)
            .map(|(d, a)| d * a)
            .collect();
        let g: Vec<f64> = x.iter().zip(&axes).map(|(c, a)| c / (a * a)).collect();
        let gn = norm(&g);
        sigma.push(Point::new(g.iter().map(|c| c / gn).collect())?);
        points.push(Point::new(x)?);
    }
    let u = (0..count).map(|_| stream.uniform()).collect();
    LabeledPointSet::new(points, u, Some(sigma))
}

/// A finite union of closed arcs of the circle, as sorted disjoint angle
/// intervals inside `[0, 2π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcSet {
    intervals: Vec<(f64, f64)>,
}

impl ArcSet {
    pub fn full() -> Self {
        ArcSet {
            intervals: vec![(0.0, TAU)],
        }
    }

    pub fn empty() -> Self {
        ArcSet { intervals: vec![] }
    }

    /// The arc of angles `start + t`, `t ∈ [0, len]`, wrapped into `[0, 2π]`.
    pub fn arc(start: f64, len: f64) -> Self {
        if len >= TAU {
            return Self::full();
        }
        if len < 0.0 {
            return Self::empty();
        }
        let a = start.rem_euclid(TAU);
        let b = a + len;
        if b <= TAU {
            ArcSet {
                intervals: vec![(a, b)],
            }
        } else {
            ArcSet {
                intervals: vec![(0.0, b - TAU), (a, TAU)],
            }
        }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn intersect(&self, other: &ArcSet) -> ArcSet {
        let mut out = Vec::new();
        for &(a, b) in &self.intervals {
            for &(c, d) in &other.intervals {
                let lo = a.max(c);
                let hi = b.min(d);
                if lo <= hi {
                    out.push((lo, hi));
                }
            }
        }
        ArcSet::normalized(out)
    }

    pub fn union(&self, other: &ArcSet) -> ArcSet {
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        ArcSet::normalized(all)
    }

    fn normalized(mut v: Vec<(f64, f64)>) -> ArcSet {
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (a, b) in v {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        ArcSet { intervals: out }
    }

    pub fn contains(&self, angle: f64) -> bool {
        let t = angle.rem_euclid(TAU);
        self.intervals.iter().any(|&(a, b)| a <= t && t <= b)
    }
}

/// Angles θ with `⟨d, ρ(cos θ, sin θ)⟩ ≤ c`.
fn halfplane_arc(d: &[f64], c: f64, rho: f64) -> ArcSet {
    let r = rho * norm(d);
    if r <= c {
        return ArcSet::full();
    }
    if c < -r {
        return ArcSet::empty();
    }
    let phi = d[1].atan2(d[0]);
    let alpha = (c / r).clamp(-1.0, 1.0).acos();
    ArcSet::arc(phi + alpha, TAU - 2.0 * alpha)
}

fn require_planar(set: &LabeledPointSet) -> Result<()> {
    if set.dim() != 2 {
        return Err(Error::Domain(
            "exact arc measures are only available for N = 2".into(),
        ));
    }
    Ok(())
}

/// The generalized cone `N^{u,ρ}_p X` as an exact arc set (N = 2).
pub fn generalized_cone_arcs(set: &LabeledPointSet, p: usize, rho: f64) -> Result<ArcSet> {
    require_planar(set)?;
    let base = set.point(p);
    let mut acc = ArcSet::full();
    for i in 0..set.len() {
        if i == p {
            continue;
        }
        let d = [set.point(i)[0] - base[0], set.point(i)[1] - base[1]];
        acc = acc.intersect(&halfplane_arc(&d, set.u(i) - set.u(p), rho));
    }
    Ok(acc)
}

/// The restricted cone `N^{u,ρ}_p X / σ` as an exact arc set (N = 2).
pub fn restricted_cone_arcs(set: &LabeledPointSet, p: usize, rho: f64) -> Result<ArcSet> {
    let s = set
        .sigma(p)
        .ok_or_else(|| Error::Precondition("sigma directions are required".into()))?;
    let phi = s[1].atan2(s[0]);
    let half = ArcSet::arc(phi - PI / 2.0, PI);
    Ok(generalized_cone_arcs(set, p, rho)?.intersect(&half))
}

/// Exact `|N^u X / σ|` on the circle of radius ρ (N = 2).
pub fn exact_restricted_union_measure(set: &LabeledPointSet, rho: f64) -> Result<f64> {
    require_planar(set)?;
    require_valid_sigma(set)?;
    let mut acc = ArcSet::empty();
    for p in 0..set.len() {
        acc = acc.union(&restricted_cone_arcs(set, p, rho)?);
    }
    Ok(acc.measure() * rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_point(u: [f64; 2]) -> LabeledPointSet {
        LabeledPointSet::new(
            vec![[1.0, 0.0].into(), [-1.0, 0.0].into()],
            u.to_vec(),
            Some(vec![[1.0, 0.0].into(), [-1.0, 0.0].into()]),
        )
        .unwrap()
    }

    fn singleton() -> LabeledPointSet {
        LabeledPointSet::new(
            vec![[0.3, 0.2].into()],
            vec![0.5],
            Some(vec![[0.0, 1.0].into()]),
        )
        .unwrap()
    }

    #[test]
    fn cone_membership_examples() {
        let x = two_point([0.0, 0.0]);
        let q = ConeQuery::new(0, vec![1.0, 0.0], 1.0).unwrap();
        assert!(generalized_cone_contains(&x, &q).unwrap());
        // ⟨(−2, 0), (−0.6, 0.8)⟩ = 1.2 exceeds u(x) − u(p) = 1
        let y = two_point([0.0, 1.0]);
        let q = ConeQuery::new(0, vec![-0.6, 0.8], 1.0).unwrap();
        assert!(!generalized_cone_contains(&y, &q).unwrap());
        let q = ConeQuery::new(0, vec![0.6, -0.8], 1.0).unwrap();
        assert!(singleton().len() == 1 && generalized_cone_contains(&singleton(), &q).unwrap());
    }

    #[test]
    fn query_validation() {
        assert!(ConeQuery::new(0, vec![1.0, 0.0], 2.0).is_err());
        assert!(ConeQuery::new(0, vec![1.0, 0.0], 0.0).is_err());
        let x = two_point([0.0, 0.0]);
        let q = ConeQuery::new(0, vec![1.0, 0.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            generalized_cone_contains(&x, &q),
            Err(Error::Domain(_))
        ));
        let q = ConeQuery::new(5, vec![1.0, 0.0], 1.0).unwrap();
        assert!(generalized_cone_contains(&x, &q).is_err());
    }

    #[test]
    fn point_set_rejects_bad_input() {
        assert!(LabeledPointSet::new(vec![], vec![], None).is_err());
        assert!(LabeledPointSet::new(
            vec![[0.0, 0.0].into(), [0.0, 0.0].into()],
            vec![0.0, 0.0],
            None
        )
        .is_err());
        assert!(LabeledPointSet::new(
            vec![[0.0, 0.0].into()],
            vec![0.0],
            Some(vec![[2.0, 0.0].into()])
        )
        .is_err());
    }

    #[test]
    fn lift_constant_shift() {
        let x = two_point([3.0, 3.0]);
        for k in 0..16 {
            let t = (k as f64 + 0.5) * TAU / 16.0;
            let q = ConeQuery::new(0, vec![t.cos(), t.sin()], 1.0).unwrap();
            assert!(lift_equivalence(&x, &q).unwrap());
            // constant u restores the classical condition ⟨x − p, ξ⟩ ≤ 0
            assert_eq!(generalized_cone_contains(&x, &q).unwrap(), t.cos() >= 0.0);
        }
    }

    #[test]
    fn sigma_validity_examples() {
        assert_eq!(
            sigma_validity(&two_point([0.0, 0.0])).unwrap(),
            vec![true, true]
        );
        let line = LabeledPointSet::new(
            vec![[-1.0, 0.0].into(), [0.0, 0.0].into(), [1.0, 0.0].into()],
            vec![0.0; 3],
            Some(vec![
                [-1.0, 0.0].into(),
                [1.0, 0.0].into(),
                [1.0, 0.0].into(),
            ]),
        )
        .unwrap();
        assert_eq!(sigma_validity(&line).unwrap(), vec![true, false, true]);
        assert_eq!(sigma_validity(&singleton()).unwrap(), vec![true]);
        let no_sigma = LabeledPointSet::new(vec![[0.0, 0.0].into()], vec![0.0], None).unwrap();
        assert!(sigma_validity(&no_sigma).is_err());
    }

    #[test]
    fn argmin_examples() {
        let x = two_point([0.0, 1.0]);
        assert_eq!(
            argmin_contact(&x, &[1.0, 0.0]).unwrap(),
            Contact {
                index: 0,
                tie: false
            }
        );
        let y = two_point([0.0, 0.0]);
        assert!(argmin_contact(&y, &[0.0, 1.0]).unwrap().tie);
        assert_eq!(
            argmin_contact(&singleton(), &[0.0, 1.0]).unwrap(),
            Contact {
                index: 0,
                tie: false
            }
        );
        assert!(argmin_contact(&y, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn arc_set_algebra() {
        let a = ArcSet::arc(-0.5, 1.0);
        assert_eq!(a.intervals().len(), 2);
        assert_relative_eq!(a.measure(), 1.0, epsilon = 1e-15);
        assert!(a.contains(0.0) && a.contains(TAU - 0.25) && !a.contains(1.0));
        let b = ArcSet::arc(0.0, PI);
        assert_relative_eq!(a.intersect(&b).measure(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(a.union(&b).measure(), PI + 0.5, epsilon = 1e-15);
        assert_eq!(ArcSet::full().intersect(&ArcSet::empty()).measure(), 0.0);
    }

    #[test]
    fn exact_arcs_match_analytic_values() {
        assert_relative_eq!(
            exact_restricted_union_measure(&two_point([0.0, 0.0]), 1.0).unwrap(),
            TAU,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            exact_restricted_union_measure(&two_point([0.0, 1.0]), 1.0).unwrap(),
            5.0 * PI / 3.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            exact_restricted_union_measure(&singleton(), 2.0).unwrap(),
            TAU,
            epsilon = 1e-12
        );
        let y = two_point([0.0, 1.0]);
        assert_relative_eq!(
            generalized_cone_arcs(&y, 0, 1.0).unwrap().measure(),
            4.0 * PI / 3.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            restricted_cone_arcs(&y, 0, 1.0).unwrap().measure(),
            PI,
            epsilon = 1e-12
        );
    }

    #[test]
    fn monte_carlo_matches_arcs() {
        let s = SampleStream::new(7);
        let m = restricted_union_measure(&two_point([0.0, 1.0]), 1.0, 40_000, &s).unwrap();
        assert!((m.estimate.value - 5.0 * PI / 3.0).abs() <= 3.0 * m.estimate.standard_error);
        assert_eq!(m.coverage, 1.0);
        let single = restricted_union_measure(&singleton(), 1.0, 40_000, &s).unwrap();
        assert!((single.estimate.value - PI).abs() <= 3.0 * single.estimate.standard_error);
    }

    #[test]
    fn half_check_examples() {
        let s = SampleStream::new(1);
        let flat = per_point_half_check(&two_point([0.0, 0.0]), 1.0, 20_000, &s).unwrap();
        assert!((flat[0].ratio - 1.0).abs() < 1e-12);
        let tilted = per_point_half_check(&two_point([0.0, 1.0]), 1.0, 40_000, &s).unwrap();
        assert!(
            (tilted[0].full.value - 4.0 * PI / 3.0).abs() < 3.0 * tilted[0].full.standard_error
        );
        assert!(
            (tilted[0].restricted.value - PI).abs() < 3.0 * tilted[0].restricted.standard_error
        );
        assert!((tilted[0].ratio - 0.75).abs() < 3.0 * tilted[0].ratio_se + 1e-12);
        let single = per_point_half_check(&singleton(), 1.0, 40_000, &s).unwrap();
        assert!((single[0].full.value - TAU).abs() < 1e-13);
        assert!((single[0].ratio - 0.5).abs() < 3.0 * single[0].ratio_se);
    }

    #[test]
    fn measures_refuse_invalid_sigma() {
        let bad = LabeledPointSet::new(
            vec![[-1.0, 0.0].into(), [0.0, 0.0].into(), [1.0, 0.0].into()],
            vec![0.0; 3],
            Some(vec![
                [-1.0, 0.0].into(),
                [0.0, 1.0].into(),
                [1.0, 0.0].into(),
            ]),
        )
        .unwrap();
        // the middle point has σ = (0, 1), valid for a collinear set
        assert!(restricted_union_measure(&bad, 1.0, 100, &SampleStream::new(0)).is_ok());
        let worse = LabeledPointSet::new(
            vec![[-1.0, 0.0].into(), [0.0, 0.0].into(), [1.0, 0.0].into()],
            vec![0.0; 3],
            Some(vec![
                [-1.0, 0.0].into(),
                [1.0, 0.0].into(),
                [1.0, 0.0].into(),
            ]),
        )
        .unwrap();
        let err = restricted_union_measure(&worse, 1.0, 100, &SampleStream::new(0)).unwrap_err();
        assert!(err.to_string().contains("point 1"));
    }

    #[test]
    fn text_format_round_trip() {
        let x = two_point([0.0, 1.0]);
        let y = LabeledPointSet::parse(&x.to_text()).unwrap();
        assert_eq!(x, y);
        let z = LabeledPointSet::parse("# two points\n1 0 0 1 0\n-1 0 1 -1 0 # tail\n").unwrap();
        assert_eq!(z, x);
        assert!(LabeledPointSet::parse("1 2 x\n").is_err());
    }

    #[test]
    fn random_configurations_have_valid_sigma() {
        let mut s = SampleStream::new(11);
        for dim in 2..=4 {
            let set = random_convex_configuration(dim, 12, &mut s).unwrap();
            assert_eq!(set.len(), 12);
            assert!(sigma_validity(&set).unwrap().iter().all(|&v| v));
        }
    }
}
