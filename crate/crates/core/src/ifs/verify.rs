//! Verifiers for the separation and finiteness classes of a system.
//!
//! Disjointness is decided on interval enclosures of the images of the
//! domain box, which are exact for affine maps. Sampling is used only to
//! turn a box-level "maybe" into a concrete common point.

use std::collections::HashMap;

use num::{Signed, Zero};
use serde_json::{json, Value};

use super::{
    check_cap, word_count, words_with_maps, words_with_maps_exact, AffineContraction, DomainBox,
    ExactAffine1d, IifsSpec,
};
use crate::error::{Error, Result};
use crate::metric::{min_set_dist, PointCloud};
use crate::rational::{fmt_rational, from_f64, to_f64, Rational};
use crate::report::{PropertyReport, Witness};
use crate::shift::Word;

/// Cells visited by the local-finiteness grid before giving up.
const MAX_GRID_CELLS: u64 = 20_000_000;

/// Largest parameter probed past the truncation of a family.
const FAMILY_PROBE_LIMIT: i64 = 1 << 16;

/// Image enclosure of one map or composite.
#[derive(Clone, Debug)]
enum Enclosure {
    Exact(Rational, Rational),
    Float(DomainBox),
}

impl Enclosure {
    fn of_map(f: &AffineContraction, bx: &DomainBox) -> Self {
        Enclosure::Float(f.image_box(bx))
    }

    fn of_exact(f: &ExactAffine1d, lo: &Rational, hi: &Rational) -> Self {
        let (a, b) = f.image_interval(lo, hi);
        Enclosure::Exact(a, b)
    }

    /// Gap between two enclosures; exact when both are rational intervals.
    fn gap(&self, other: &Enclosure) -> Gap {
        match (self, other) {
            (Enclosure::Exact(a, b), Enclosure::Exact(c, d)) => {
                let g = (c - b).max(a - d).max(Rational::zero());
                Gap {
                    value: to_f64(&g),
                    exact: Some(g),
                }
            }
            _ => Gap {
                value: self.as_box().gap(&other.as_box()),
                exact: None,
            },
        }
    }

    fn as_box(&self) -> DomainBox {
        match self {
            Enclosure::Exact(a, b) => DomainBox {
                bounds: vec![(to_f64(a), to_f64(b))],
            },
            Enclosure::Float(bx) => bx.clone(),
        }
    }
}

struct Gap {
    value: f64,
    exact: Option<Rational>,
}

impl Gap {
    fn is_positive(&self) -> bool {
        match &self.exact {
            Some(g) => g.is_positive(),
            None => self.value > 0.0,
        }
    }
}

/// Smallest gap over a set of pairs with the first minimizing pair.
struct MinGap {
    value: f64,
    exact: Option<Rational>,
    pair: Option<(String, String)>,
}

impl MinGap {
    fn new() -> Self {
        Self {
            value: f64::INFINITY,
            exact: None,
            pair: None,
        }
    }

    fn offer(&mut self, g: &Gap, a: &str, b: &str) {
        let better = match (&g.exact, &self.exact) {
            (Some(x), Some(y)) => x < y,
            _ => g.value < self.value,
        };
        if better || self.pair.is_none() {
            self.value = g.value;
            self.exact = g.exact.clone();
            self.pair = Some((a.to_owned(), b.to_owned()));
        }
    }

    fn decorate(&self, mut r: PropertyReport) -> PropertyReport {
        if let Some((a, b)) = &self.pair {
            r = r.with_detail("min_pair", json!([a, b]));
        }
        if let Some(e) = &self.exact {
            r = r.with_detail("margin_exact", fmt_rational(e));
        }
        r
    }
}

/// A point lying in both `f(bx)` and `g(bx)`, searched among grid points of
/// the box intersection and images of sample points of `bx`.
fn common_image_point(
    f: &AffineContraction,
    g: &AffineContraction,
    bx: &DomainBox,
) -> Option<Vec<f64>> {
    let meet = f.image_box(bx).intersection(&g.image_box(bx))?;
    let k = match bx.dim() {
        1 => 33,
        2 => 9,
        3 => 5,
        _ => 2,
    };
    let src = bx.grid_samples(k.min(5));
    let candidates = meet
        .grid_samples(k)
        .into_iter()
        .chain(src.iter().map(|x| f.apply(x)))
        .chain(src.iter().map(|x| g.apply(x)));
    for y in candidates {
        let tol = 1e-12 * (1.0 + y.iter().map(|v| v.abs()).fold(0.0, f64::max));
        if f.preimage_in_box(&y, bx, tol).is_some() && g.preimage_in_box(&y, bx, tol).is_some() {
            return Some(y);
        }
    }
    None
}

/// Exact common point of two 1-D images: the left end of the overlap.
fn common_exact_point(a: &(Rational, Rational), b: &(Rational, Rational)) -> Option<Rational> {
    let lo = (&a.0).max(&b.0);
    let hi = (&a.1).min(&b.1);
    (lo <= hi).then(|| lo.clone())
}

/// Pairwise disjointness of the first-level images `f_i(box)`.
pub fn check_non_overlapping(spec: &IifsSpec) -> PropertyReport {
    const NAME: &str = "non-overlapping";
    let bx = spec.domain_box();
    let enclosures: Vec<Enclosure> = match spec.exact() {
        Some(ex) => ex
            .maps
            .iter()
            .map(|f| Enclosure::of_exact(f, &ex.lo, &ex.hi))
            .collect(),
        None => spec
            .maps()
            .iter()
            .map(|m| Enclosure::of_map(&m.map, bx))
            .collect(),
    };
    let mut min = MinGap::new();
    let mut touching = Vec::new();
    let n = spec.len();
    for i in 0..n {
        for j in i + 1..n {
            let g = enclosures[i].gap(&enclosures[j]);
            if !g.is_positive() {
                touching.push((i, j));
            }
            min.offer(&g, &spec.maps()[i].index, &spec.maps()[j].index);
        }
    }
    let pairs = n * (n - 1) / 2;
    if touching.is_empty() {
        let margin = if pairs == 0 { 0.0 } else { min.value };
        return min
            .decorate(PropertyReport::holds(NAME, margin).with_detail("pairs_checked", pairs));
    }
    for &(i, j) in &touching {
        let (mi, mj) = (&spec.maps()[i], &spec.maps()[j]);
        let point = match (spec.exact(), &enclosures[i], &enclosures[j]) {
            (Some(_), Enclosure::Exact(a, b), Enclosure::Exact(c, d)) => {
                common_exact_point(&(a.clone(), b.clone()), &(c.clone(), d.clone()))
                    .map(|p| vec![to_f64(&p)])
            }
            _ => common_image_point(&mi.map, &mj.map, bx),
        };
        if let Some(p) = point {
            return PropertyReport::fails(
                NAME,
                0.0,
                Witness::IndexPair {
                    first: mi.index.clone(),
                    second: mj.index.clone(),
                    point: Some(p),
                },
            )
            .with_detail("pairs_checked", pairs);
        }
    }
    let (i, j) = touching[0];
    PropertyReport::inconclusive(NAME, 0.0)
        .with_detail("pairs_checked", pairs)
        .with_detail(
            "unresolved_pair",
            json!([spec.maps()[i].index, spec.maps()[j].index]),
        )
        .with_detail(
            "reason",
            "image boxes meet but no common sampled point was found",
        )
}

/// Local finiteness at grid resolution `eps`.
///
/// Finite systems always hold; the margin is the largest number of image
/// boxes meeting one grid cell. Parametric families need a declared tail
/// envelope; if that envelope shrinks below `eps/2` around its point, every
/// neighbourhood of that point meets infinitely many images.
pub fn check_locally_finite(spec: &IifsSpec, eps: f64) -> Result<PropertyReport> {
    const NAME: &str = "locally-finite";
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "grid resolution must be positive, got {eps}"
        )));
    }
    if let Some(fam) = spec.family() {
        let Some(tail) = &fam.tail else {
            return Ok(PropertyReport::inconclusive(NAME, 0.0).with_detail(
                "reason",
                "family has no closed-form tail bound on its image boxes",
            ));
        };
        let ex = spec.exact().expect("families are exact");
        let half = from_f64(eps / 2.0)?;
        let mut probes: Vec<i64> = fam.parameters().collect();
        let mut m = fam.m_start + fam.truncate as i64;
        let mut step = 1;
        while m <= FAMILY_PROBE_LIMIT {
            probes.push(m);
            m += step;
            step *= 2;
        }
        let mut prev: Option<Rational> = None;
        let mut m_star = None;
        for &m in &probes {
            let r = tail.radius.eval(m)?;
            if prev.as_ref().is_some_and(|p| &r > p) {
                return Ok(PropertyReport::inconclusive(NAME, 0.0)
                    .with_detail("reason", format!("tail radius increases at m={m}")));
            }
            let (lo, hi) = fam.member(m)?.image_interval(&ex.lo, &ex.hi);
            if lo < &tail.point - &r || hi > &tail.point + &r {
                return Ok(PropertyReport::inconclusive(NAME, 0.0).with_detail(
                    "reason",
                    format!("image at m={m} leaves the declared tail envelope"),
                ));
            }
            if m_star.is_none() && r <= half {
                m_star = Some(m);
            }
            prev = Some(r);
        }
        let y = to_f64(&tail.point);
        return Ok(match m_star {
            Some(m_star) => {
                let near = ex
                    .maps
                    .iter()
                    .filter(|f| {
                        let (lo, hi) = f.image_interval(&ex.lo, &ex.hi);
                        hi >= &tail.point - &half && lo <= &tail.point + &half
                    })
                    .count();
                PropertyReport::fails(NAME, near as f64, Witness::Point { coords: vec![y] })
                    .with_detail("m_star", m_star)
                    .with_detail("point_exact", fmt_rational(&tail.point))
                    .with_detail(
                        "reason",
                        format!("every image f_m with m >= {m_star} lies within eps/2 of the witness point"),
                    )
                    .with_detail("truncation", fam.truncate)
            }
            None => PropertyReport::inconclusive(NAME, 0.0).with_detail(
                "reason",
                format!("tail radius stays above eps/2 up to m={FAMILY_PROBE_LIMIT}"),
            ),
        });
    }
    let bx = spec.domain_box();
    let origin: Vec<f64> = bx.bounds().iter().map(|b| b.0).collect();
    let mut visited: u64 = 0;
    let mut counts: HashMap<Vec<i64>, u32> = HashMap::new();
    for m in spec.maps() {
        let img = m.map.image_box(bx);
        let ranges: Vec<(i64, i64)> = img
            .bounds()
            .iter()
            .zip(&origin)
            .map(|(&(lo, hi), &o)| {
                (
                    ((lo - o) / eps).floor() as i64,
                    ((hi - o) / eps).floor() as i64,
                )
            })
            .collect();
        let cells: u64 = ranges.iter().map(|(a, b)| (b - a + 1) as u64).product();
        visited = visited.saturating_add(cells);
        if visited > MAX_GRID_CELLS {
            return Ok(PropertyReport::holds(NAME, spec.len() as f64).with_detail(
                "reason",
                "finite index set; grid too fine to count per cell",
            ));
        }
        let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        loop {
            *counts.entry(idx.clone()).or_default() += 1;
            let mut k = 0;
            loop {
                if k == idx.len() {
                    break;
                }
                idx[k] += 1;
                if idx[k] <= ranges[k].1 {
                    break;
                }
                idx[k] = ranges[k].0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
    }
    let max = counts.values().copied().max().unwrap_or(0);
    Ok(PropertyReport::holds(NAME, max as f64)
        .with_detail("cells", counts.len())
        .with_detail("maps", spec.len()))
}

/// Disjointness of `f_ω(box)` and `f_γ(box)` for all words of length
/// `1..=depth` that are not prefixes of one another. Prefix-related pairs
/// are nested by construction and are skipped.
pub fn check_strongly_non_overlapping(
    spec: &IifsSpec,
    depth: usize,
    cap: u128,
) -> Result<PropertyReport> {
    const NAME: &str = "strongly-non-overlapping";
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    let total: u128 = (1..=depth)
        .map(|k| word_count(spec.len(), k))
        .fold(0u128, u128::saturating_add);
    check_cap(total.saturating_mul(total.saturating_sub(1)) / 2, cap).map_err(|e| match e {
        Error::CapExceeded { count, cap } => Error::InvalidArgument(format!(
            "depth too large: {count} word pairs exceed cap {cap}"
        )),
        other => other,
    })?;
    let mut words: Vec<(Word, Enclosure, Option<AffineContraction>)> = Vec::new();
    for k in 1..=depth {
        match spec.exact() {
            Some(ex) => {
                for (w, f) in words_with_maps_exact(spec, k, u128::MAX)? {
                    words.push((w, Enclosure::of_exact(&f, &ex.lo, &ex.hi), None));
                }
            }
            None => {
                for (w, f) in words_with_maps(spec, k, u128::MAX)? {
                    words.push((w, Enclosure::of_map(&f, spec.domain_box()), Some(f)));
                }
            }
        }
    }
    let mut min = MinGap::new();
    let mut pairs = 0usize;
    let mut first_touch = None;
    for a in 0..words.len() {
        for b in a + 1..words.len() {
            let (wa, wb) = (&words[a].0, &words[b].0);
            if wa.is_prefix_of(wb) || wb.is_prefix_of(wa) {
                continue;
            }
            pairs += 1;
            let g = words[a].1.gap(&words[b].1);
            if !g.is_positive() {
                let point = match (&words[a].1, &words[b].1, &words[a].2, &words[b].2) {
                    (Enclosure::Exact(p, q), Enclosure::Exact(r, s), _, _) => {
                        common_exact_point(&(p.clone(), q.clone()), &(r.clone(), s.clone()))
                            .map(|p| vec![to_f64(&p)])
                    }
                    (_, _, Some(f), Some(h)) => common_image_point(f, h, spec.domain_box()),
                    _ => None,
                };
                if let Some(p) = point {
                    return Ok(PropertyReport::fails(
                        NAME,
                        0.0,
                        Witness::WordPair {
                            first: wa.to_string(),
                            second: wb.to_string(),
                            point: Some(p),
                        },
                    )
                    .with_detail("checked_depth", depth));
                }
                first_touch.get_or_insert((wa.to_string(), wb.to_string()));
            }
            min.offer(&g, &wa.to_string(), &wb.to_string());
        }
    }
    if let Some((a, b)) = first_touch {
        return Ok(PropertyReport::inconclusive(NAME, 0.0)
            .with_detail("checked_depth", depth)
            .with_detail("unresolved_pair", json!([a, b]))
            .with_detail(
                "reason",
                "image boxes meet but no common sampled point was found",
            ));
    }
    let margin = if pairs == 0 { 0.0 } else { min.value };
    Ok(min.decorate(
        PropertyReport::holds(NAME, margin)
            .with_detail("checked_depth", depth)
            .with_detail("pairs_checked", pairs)
            .with_detail(
                "scope",
                "all incomparable word pairs up to the checked depth",
            ),
    ))
}

/// Separation constants `c_ij = min d(f_i(A), f_j(A))` on an attractor cloud.
#[derive(Clone, Debug, PartialEq)]
pub struct SscConstants {
    pub indices: Vec<String>,
    /// Symmetric matrix; diagonal entries are `None`.
    pub pairwise: Vec<Vec<Option<f64>>>,
    /// Minimum over `i ≠ j`; infinite for a single map.
    pub sep_c: f64,
    pub contraction_c: f64,
    /// `2·c·A.resolution`; each `c_ij` is exact up to this slack.
    pub slack: f64,
}

impl SscConstants {
    pub fn to_json_value(&self) -> Value {
        let fmt = |v: f64| {
            if v.is_infinite() {
                json!("+inf")
            } else {
                json!(v)
            }
        };
        json!({
            "indices": self.indices,
            "pairwise": self.pairwise,
            "sep_c": fmt(self.sep_c),
            "contraction_c": self.contraction_c,
            "slack": self.slack,
        })
    }
}

pub fn ssc_constants(spec: &IifsSpec, a: &PointCloud) -> Result<SscConstants> {
    if a.dim() != spec.dimension() {
        return Err(Error::DimensionMismatch {
            expected: spec.dimension(),
            found: a.dim(),
        });
    }
    let images: Vec<PointCloud> = spec
        .maps()
        .iter()
        .map(|m| super::apply_map(&m.map, a))
        .collect::<Result<_>>()?;
    let n = spec.len();
    let mut pairwise = vec![vec![None; n]; n];
    let mut sep_c = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            let d = min_set_dist(&images[i], &images[j])?;
            pairwise[i][j] = Some(d);
            pairwise[j][i] = Some(d);
            sep_c = sep_c.min(d);
        }
    }
    Ok(SscConstants {
        indices: spec.indices().map(str::to_owned).collect(),
        pairwise,
        sep_c,
        contraction_c: spec.contraction_c(),
        slack: 2.0 * spec.contraction_c() * a.resolution(),
    })
}

/// Strong separation on an attractor cloud as a report: holds when every
/// `c_ij` exceeds the resolution slack, fails when two images share a point.
pub fn ssc_report(spec: &IifsSpec, a: &PointCloud) -> Result<PropertyReport> {
    const NAME: &str = "ssc";
    let k = ssc_constants(spec, a)?;
    let details = k.to_json_value();
    let attach = |r: PropertyReport| {
        r.with_detail("pairwise", details["pairwise"].clone())
            .with_detail("sep_c", details["sep_c"].clone())
            .with_detail("slack", k.slack)
            .with_detail("contraction_c", k.contraction_c)
    };
    if k.sep_c.is_infinite() {
        return Ok(attach(PropertyReport::holds(NAME, 0.0)));
    }
    if k.sep_c > k.slack {
        return Ok(attach(PropertyReport::holds(NAME, k.sep_c)));
    }
    let n = spec.len();
    for i in 0..n {
        for j in i + 1..n {
            if k.pairwise[i][j] == Some(0.0) {
                let fi = super::apply_map(&spec.maps()[i].map, a)?;
                let fj = super::apply_map(&spec.maps()[j].map, a)?;
                let p = fi.iter().find(|p| fj.contains(p)).map(<[f64]>::to_vec);
                return Ok(attach(PropertyReport::fails(
                    NAME,
                    0.0,
                    Witness::IndexPair {
                        first: k.indices[i].clone(),
                        second: k.indices[j].clone(),
                        point: p,
                    },
                )));
            }
        }
    }
    Ok(attach(PropertyReport::inconclusive(NAME, k.sep_c)))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::{AffineFamily, IifsSpec, DEFAULT_CAP};
    use super::*;
    use crate::rational::{int, rat};
    use crate::report::Verdict;

    #[test]
    fn non_overlapping_examples() {
        let r = check_non_overlapping(&cantor());
        assert_eq!(r.verdict, Verdict::Holds);
        assert_eq!(r.details["margin_exact"], "1/3");
        let r = check_non_overlapping(&twin());
        assert_eq!(r.verdict, Verdict::Fails);
        assert!(
            matches!(r.witness, Some(Witness::IndexPair { ref first, ref second, .. }) if first == "1" && second == "2")
        );
        let r = check_non_overlapping(&dyadic_family(8, true));
        assert_eq!(r.verdict, Verdict::Holds);
        // closest images: [1/2^15, 1/2^14] and [1/2^13, 1/2^12]
        assert_eq!(r.details["margin_exact"], "1/16384");
    }

    #[test]
    fn touching_float_boxes_are_inconclusive_or_witnessed() {
        let half = |b: f64| AffineContraction::new(vec![vec![0.5]], vec![b], None, None).unwrap();
        let s = IifsSpec::new(
            DomainBox::new(vec![(0.0, 1.0)]).unwrap(),
            vec![("a".into(), half(0.0)), ("b".into(), half(0.5))],
        )
        .unwrap();
        // the two halves share the point 1/2
        let r = check_non_overlapping(&s);
        assert_eq!(r.verdict, Verdict::Fails);
        let g = gasket();
        assert_eq!(check_non_overlapping(&g).verdict, Verdict::Holds);
    }

    #[test]
    fn locally_finite_examples() {
        assert!(check_locally_finite(&cantor(), 0.01).unwrap().is_holds());
        assert!(check_locally_finite(&gasket(), 0.05).unwrap().is_holds());
        let r = check_locally_finite(&dyadic_family(10, true), 1e-3).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        assert_eq!(r.witness, Some(Witness::Point { coords: vec![0.0] }));
        let r = check_locally_finite(&dyadic_family(10, false), 1e-3).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(check_locally_finite(&cantor(), 0.0).is_err());
    }

    #[test]
    fn locally_finite_rejects_wrong_tail() {
        let e = crate::rational::Expr::parse("1/2^(2*m-1)").unwrap();
        let s = IifsSpec::from_family(
            int(0),
            int(1),
            AffineFamily {
                slope: e.clone(),
                intercept: e,
                m_start: 1,
                truncate: 4,
                tail: Some(super::super::TailBound {
                    point: int(0),
                    radius: crate::rational::Expr::parse("1/2^(3*m)").unwrap(),
                }),
            },
        )
        .unwrap();
        assert_eq!(
            check_locally_finite(&s, 1e-3).unwrap().verdict,
            Verdict::Inconclusive
        );
    }

    #[test]
    fn strong_non_overlap_examples() {
        let r = check_strongly_non_overlapping(&cantor(), 3, DEFAULT_CAP).unwrap();
        assert!(r.is_holds());
        assert_eq!(r.details["margin_exact"], "1/27");
        assert_eq!(r.details["checked_depth"], 3);
        let r = check_strongly_non_overlapping(&twin(), 1, DEFAULT_CAP).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        let r = check_strongly_non_overlapping(&single(rat(1, 2), int(0)), 6, DEFAULT_CAP).unwrap();
        assert!(r.is_holds());
        assert_eq!(r.details["pairs_checked"], 0);
        assert!(check_strongly_non_overlapping(&cantor(), 12, 1000).is_err());
        assert!(check_strongly_non_overlapping(&cantor(), 0, DEFAULT_CAP).is_err());
        assert!(check_strongly_non_overlapping(&gasket(), 3, DEFAULT_CAP)
            .unwrap()
            .is_holds());
    }

    #[test]
    fn ssc_examples() {
        let a = PointCloud::from_flat(1, vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0], 0.0).unwrap();
        let k = ssc_constants(&cantor(), &a).unwrap();
        assert!((k.sep_c - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(k.pairwise[0][0], None);
        assert_eq!(ssc_constants(&twin(), &a).unwrap().sep_c, 0.0);
        let s = ssc_constants(&single(rat(1, 2), int(0)), &a).unwrap();
        assert!(s.sep_c.is_infinite());
        assert_eq!(s.to_json_value()["sep_c"], "+inf");
        assert_eq!(ssc_report(&twin(), &a).unwrap().verdict, Verdict::Fails);
        assert!(ssc_report(&cantor(), &a).unwrap().is_holds());
    }
}
