//! Greatest fixed points of `F(A) = ⋃_i f_i(A)` on finite power sets, and
//! exact interval arithmetic for two infinite-domain counterexamples.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::rational::{fmt_rational, int, pow, rat, Rational};
use crate::report::{PropertyReport, Witness};

/// Largest universe accepted by [`brute_force_fixed_subsets`].
pub const BRUTE_FORCE_LIMIT: usize = 20;

pub type Subset = BTreeSet<usize>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteUniverse {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl FiniteUniverse {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::InvalidArgument("universe must be nonempty".into()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (k, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), k).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate universe element `{l}`"
                )));
            }
        }
        Ok(Self { labels, index })
    }

    /// The universe `{0, 1, …, n−1}`.
    pub fn range(n: usize) -> Result<Self> {
        Self::new((0..n).map(|k| k.to_string()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::OutsideUniverse(label.to_owned()))
    }

    pub fn full(&self) -> Subset {
        (0..self.len()).collect()
    }

    pub fn labels_of(&self, a: &Subset) -> Vec<String> {
        a.iter().map(|&i| self.labels[i].clone()).collect()
    }
}

/// Total self-maps of a finite universe, as index tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelfMapTable {
    universe_len: usize,
    names: Vec<String>,
    tables: Vec<Vec<usize>>,
}

impl SelfMapTable {
    pub fn new(universe_len: usize, maps: Vec<(String, Vec<usize>)>) -> Result<Self> {
        let mut names = Vec::with_capacity(maps.len());
        let mut tables = Vec::with_capacity(maps.len());
        for (name, t) in maps {
            if t.len() != universe_len {
                return Err(Error::InvalidArgument(format!(
                    "map `{name}` is defined on {} elements, universe has {universe_len}",
                    t.len()
                )));
            }
            if let Some(&v) = t.iter().find(|&&v| v >= universe_len) {
                return Err(Error::OutsideUniverse(format!(
                    "map `{name}` sends an element to index {v}"
                )));
            }
            names.push(name);
            tables.push(t);
        }
        Ok(Self {
            universe_len,
            names,
            tables,
        })
    }

    /// Builds tables from label pairs; every element must have an image.
    pub fn from_labels(
        universe: &FiniteUniverse,
        maps: Vec<(String, Vec<(String, String)>)>,
    ) -> Result<Self> {
        let mut out = Vec::with_capacity(maps.len());
        for (name, pairs) in maps {
            let mut t = vec![None; universe.len()];
            for (x, y) in pairs {
                t[universe.position(&x)?] = Some(universe.position(&y)?);
            }
            let t = t
                .into_iter()
                .enumerate()
                .map(|(k, v)| {
                    v.ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "map `{name}` is undefined at `{}`",
                            universe.label(k)
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            out.push((name, t));
        }
        Self::new(universe.len(), out)
    }

    pub fn universe_len(&self) -> usize {
        self.universe_len
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tables(&self) -> &[Vec<usize>] {
        &self.tables
    }

    /// `|f_k^{-1}(y)|` for every `y`.
    pub fn fibre_sizes(&self, k: usize) -> Vec<usize> {
        let mut sizes = vec![0; self.universe_len];
        for &y in &self.tables[k] {
            sizes[y] += 1;
        }
        sizes
    }

    fn image_of_all(&self, k: usize) -> Subset {
        self.tables[k].iter().copied().collect()
    }
}

/// `⋃_i f_i(A)`.
pub fn f_union(maps: &SelfMapTable, a: &Subset) -> Result<Subset> {
    if let Some(&x) = a.iter().find(|&&x| x >= maps.universe_len) {
        return Err(Error::OutsideUniverse(format!("element index {x}")));
    }
    Ok(maps
        .tables
        .iter()
        .flat_map(|t| a.iter().map(move |&x| t[x]))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TkResult {
    pub gfp: Subset,
    /// Number of strict decreases before the chain stabilized.
    pub steps: usize,
    /// `A_0 ⊇ A_1 ⊇ … ⊇ A_steps`.
    pub chain: Vec<Subset>,
    /// `F(gfp) = gfp`, checked after the fact.
    pub verified_fixed: bool,
}

/// Iterates `A_{n+1} = F(A_n)` from `A_0 = X` (or from a seed with
/// `F(A) ⊆ A`) until the chain stabilizes.
pub fn tk_gfp(maps: &SelfMapTable, seed: Option<&Subset>) -> Result<TkResult> {
    let start = match seed {
        Some(a) => {
            let img = f_union(maps, a)?;
            if !img.is_subset(a) {
                return Err(Error::InvalidArgument("seed must satisfy F(A) ⊆ A".into()));
            }
            a.clone()
        }
        None => (0..maps.universe_len).collect(),
    };
    let mut chain = vec![start];
    loop {
        let cur = chain.last().expect("nonempty chain");
        let next = f_union(maps, cur)?;
        if &next == cur {
            break;
        }
        debug_assert!(next.is_subset(cur));
        chain.push(next);
    }
    let gfp = chain.last().expect("nonempty chain").clone();
    let verified_fixed = f_union(maps, &gfp)? == gfp;
    Ok(TkResult {
        steps: chain.len() - 1,
        gfp,
        chain,
        verified_fixed,
    })
}

/// Every `A ⊆ X` with `F(A) = A`, by exhaustive enumeration of bitmasks.
pub fn brute_force_fixed_subsets(maps: &SelfMapTable) -> Result<Vec<Subset>> {
    let n = maps.universe_len;
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::UniverseTooLarge(n));
    }
    // images[x] = bitmask of {f_i(x) : i}
    let images: Vec<u32> = (0..n)
        .map(|x| maps.tables.iter().fold(0u32, |m, t| m | (1 << t[x])))
        .collect();
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << n) {
        let mut img = 0u32;
        let mut rest = mask;
        while rest != 0 {
            let x = rest.trailing_zeros() as usize;
            img |= images[x];
            rest &= rest - 1;
        }
        if img == mask {
            out.push((0..n).filter(|&x| mask >> x & 1 == 1).collect());
        }
    }
    Ok(out)
}

/// The element of `sets` containing all others, if there is one.
pub fn subset_maximum(sets: &[Subset]) -> Option<&Subset> {
    let top = sets.iter().max_by_key(|s| s.len())?;
    sets.iter().all(|s| s.is_subset(top)).then_some(top)
}

/// Pairwise disjointness of `f_i(X)` plus fibre sizes.
pub fn check_continuity_premises(maps: &SelfMapTable, universe: &FiniteUniverse) -> PropertyReport {
    const NAME: &str = "continuity-premises";
    let images: Vec<Subset> = (0..maps.tables.len())
        .map(|k| maps.image_of_all(k))
        .collect();
    let fibres: BTreeMap<String, usize> = maps
        .names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            (
                name.clone(),
                maps.fibre_sizes(k).into_iter().max().unwrap_or(0),
            )
        })
        .collect();
    let mut min_gap_count = usize::MAX;
    for i in 0..images.len() {
        for j in i + 1..images.len() {
            if let Some(&x) = images[i].intersection(&images[j]).next() {
                return PropertyReport::fails(
                    NAME,
                    0.0,
                    Witness::Element {
                        label: universe.label(x).to_owned(),
                    },
                )
                .with_detail("pair", json!([maps.names[i], maps.names[j]]))
                .with_detail("max_fibre", json!(fibres));
            }
            min_gap_count = min_gap_count.min(universe.len() - images[i].len() - images[j].len());
        }
    }
    let margin = if min_gap_count == usize::MAX {
        0
    } else {
        min_gap_count
    };
    PropertyReport::holds(NAME, margin as f64).with_detail("max_fibre", json!(fibres))
}

/// Parses `{ "universe": [...], "maps": { "name": { "x": "y", ... }, ... } }`.
pub fn parse_lattice_json(text: &str) -> Result<(FiniteUniverse, SelfMapTable)> {
    let v: Value = serde_json::from_str(text)?;
    let label = |x: &Value| match x {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(Error::InvalidArgument(format!(
            "universe element {other} must be a string or number"
        ))),
    };
    let universe = v
        .get("universe")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::InvalidArgument("`universe`: expected an array".into()))?
        .iter()
        .map(label)
        .collect::<Result<Vec<_>>>()?;
    let universe = FiniteUniverse::new(universe)?;
    let maps_obj = v
        .get("maps")
        .and_then(Value::as_object)
        .ok_or_else(|| Error::InvalidArgument("`maps`: expected an object".into()))?;
    let mut maps = Vec::with_capacity(maps_obj.len());
    for (name, table) in maps_obj {
        let table = table
            .as_object()
            .ok_or_else(|| Error::InvalidArgument(format!("`maps.{name}`: expected an object")))?;
        let pairs = table
            .iter()
            .map(|(x, y)| {
                Ok((
                    x.clone(),
                    label(y)
                        .map_err(|e| Error::InvalidArgument(format!("`maps.{name}.{x}`: {e}")))?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        maps.push((name.clone(), pairs));
    }
    let table = SelfMapTable::from_labels(&universe, maps)?;
    Ok((universe, table))
}

// ---- exact interval sets ----

/// Rational interval with open or closed ends.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    /// `None` when the interval is empty.
    pub fn new(lo: Rational, hi: Rational, lo_closed: bool, hi_closed: bool) -> Option<Self> {
        let nonempty = lo < hi || (lo == hi && lo_closed && hi_closed);
        nonempty.then_some(Self {
            lo,
            hi,
            lo_closed,
            hi_closed,
        })
    }

    pub fn closed(lo: Rational, hi: Rational) -> Option<Self> {
        Self::new(lo, hi, true, true)
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let above = if self.lo_closed {
            x >= &self.lo
        } else {
            x > &self.lo
        };
        let below = if self.hi_closed {
            x <= &self.hi
        } else {
            x < &self.hi
        };
        above && below
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let (lo, lo_closed) = match self.lo.cmp(&other.lo) {
            std::cmp::Ordering::Less => (other.lo.clone(), other.lo_closed),
            std::cmp::Ordering::Greater => (self.lo.clone(), self.lo_closed),
            std::cmp::Ordering::Equal => (self.lo.clone(), self.lo_closed && other.lo_closed),
        };
        let (hi, hi_closed) = match self.hi.cmp(&other.hi) {
            std::cmp::Ordering::Less => (self.hi.clone(), self.hi_closed),
            std::cmp::Ordering::Greater => (other.hi.clone(), other.hi_closed),
            std::cmp::Ordering::Equal => (self.hi.clone(), self.hi_closed && other.hi_closed),
        };
        Interval::new(lo, hi, lo_closed, hi_closed)
    }

    /// Image under `x ↦ slope·x + intercept` with `slope > 0`.
    pub fn affine_image(&self, slope: &Rational, intercept: &Rational) -> Interval {
        assert!(
            slope > &Rational::zero(),
            "orientation-preserving maps only"
        );
        Interval {
            lo: slope * &self.lo + intercept,
            hi: slope * &self.hi + intercept,
            lo_closed: self.lo_closed,
            hi_closed: self.hi_closed,
        }
    }

    /// Image under `x ↦ frac(x + t)` for an interval inside `[0, 1)` and
    /// `0 ≤ t < 1`: the shifted interval is split where it crosses 1.
    pub fn frac_shift(&self, t: &Rational) -> Vec<Interval> {
        let one = Rational::one();
        let shifted = self.affine_image(&one, t);
        let mut out = Vec::new();
        // part below 1
        if let Some(low) = shifted.intersect(&Interval {
            lo: shifted.lo.clone(),
            hi: one.clone(),
            lo_closed: true,
            hi_closed: false,
        }) {
            out.push(low);
        }
        // part at or above 1, wrapped
        if let Some(high) = shifted.intersect(&Interval {
            lo: one.clone(),
            hi: &one + &one,
            lo_closed: true,
            hi_closed: false,
        }) {
            out.push(high.affine_image(&one, &-&one));
        }
        out
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            fmt_rational(&self.lo),
            fmt_rational(&self.hi),
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

/// Finite union of intervals.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IntervalSet(pub Vec<Interval>);

impl IntervalSet {
    pub fn contains(&self, x: &Rational) -> bool {
        self.0.iter().any(|i| i.contains(x))
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        IntervalSet(
            self.0
                .iter()
                .flat_map(|a| other.0.iter().filter_map(move |b| a.intersect(b)))
                .collect(),
        )
    }

    pub fn frac_shift(&self, t: &Rational) -> IntervalSet {
        IntervalSet(self.0.iter().flat_map(|i| i.frac_shift(t)).collect())
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.0.iter().map(ToString::to_string).collect()
    }
}

/// `C_n = [0, 1/n] ∪ [1 − 1/n, 1)`.
pub fn frac_system_set(n: i64) -> IntervalSet {
    let inv = rat(1, n);
    IntervalSet(
        [
            Interval::closed(int(0), inv.clone()),
            Interval::new(int(1) - &inv, int(1), true, false),
        ]
        .into_iter()
        .flatten()
        .collect(),
    )
}

/// The frac-shift system `f_m(x) = frac(x + 1/m)` on `[0, 1)` with the
/// decreasing sets `C_n`: certifies that `0 ∈ f_n(C_n)` for `3 ≤ n ≤ N`,
/// that `0 ∈ ⋂_{n ≤ N} C_n`, and that `⋃_{m ≤ M} f_m({0}) = {1/m}` misses 0.
pub fn remark31_counterexample(n_max: i64, m_max: i64) -> Result<PropertyReport> {
    const NAME: &str = "frac-shift-discontinuity";
    if n_max < 3 || m_max < 2 {
        return Err(Error::InvalidArgument("need N >= 3 and M >= 2".into()));
    }
    let zero = Rational::zero();
    let one = Rational::one();
    let mut first_bad = None;
    for n in 3..=n_max {
        let c_n = frac_system_set(n);
        let x = &one - rat(1, n);
        let fx = (&x + rat(1, n)) - &one;
        let by_witness = c_n.contains(&x) && fx == zero;
        let by_image = c_n.frac_shift(&rat(1, n)).contains(&zero);
        if !(by_witness && by_image) {
            first_bad.get_or_insert(n);
        }
    }
    let mut meet = frac_system_set(3);
    for n in 4..=n_max {
        meet = meet.intersect(&frac_system_set(n));
    }
    let meet_has_zero = meet.contains(&zero);
    let image_of_zero: Vec<Rational> = (2..=m_max).map(|m| rat(1, m)).collect();
    let image_misses_zero =
        image_of_zero.iter().all(|p| p != &zero) && image_of_zero.iter().all(|p| p > &zero);
    let details = |r: PropertyReport| {
        r.with_detail("n_max", n_max)
            .with_detail("m_max", m_max)
            .with_detail(
                "witness_n3",
                json!({ "x": "2/3", "image": fmt_rational(&((rat(2, 3) + rat(1, 3)) - int(1))) }),
            )
            .with_detail("zero_in_image_of_c_n", first_bad.is_none())
            .with_detail("intersection", meet.to_strings())
            .with_detail("intersection_contains_zero", meet_has_zero)
            .with_detail(
                "image_of_zero_min",
                fmt_rational(image_of_zero.iter().min().expect("m_max >= 2")),
            )
            .with_detail("image_of_zero_excludes_zero", image_misses_zero)
    };
    if let Some(n) = first_bad {
        return Ok(details(PropertyReport::fails(
            NAME,
            0.0,
            Witness::Element {
                label: format!("n={n}"),
            },
        )));
    }
    if !meet_has_zero || !image_misses_zero {
        return Ok(details(PropertyReport::fails(
            NAME,
            0.0,
            Witness::Element { label: "0".into() },
        )));
    }
    Ok(details(PropertyReport::holds(NAME, (n_max - 2) as f64)))
}

/// `f_m(x) = (x + 1)/2^(2m−1)` on `[0, 1]`: certifies that the images
/// `[1/2^(2m−1), 1/2^(2m−2)]`, `m ≤ M`, are pairwise disjoint, that their
/// infimum is `1/2^(2M−1)`, and that no image contains 0.
pub fn remark42_counterexample(m_max: i64) -> Result<PropertyReport> {
    const NAME: &str = "dyadic-family-non-closed";
    if m_max < 2 {
        return Err(Error::InvalidArgument("need M >= 2".into()));
    }
    let unit = Interval::closed(int(0), int(1)).expect("nonempty");
    let mut images = Vec::with_capacity(m_max as usize);
    for m in 1..=m_max {
        let s = pow(&int(2), -(2 * m - 1))?;
        images.push(unit.affine_image(&s, &s));
    }
    let zero = Rational::zero();
    let mut min_gap: Option<Rational> = None;
    let mut overlap = None;
    for i in 0..images.len() {
        for j in i + 1..images.len() {
            match images[i].intersect(&images[j]) {
                Some(_) => {
                    overlap.get_or_insert((i + 1, j + 1));
                }
                None => {
                    let g = (&images[j].lo - &images[i].hi).max(&images[i].lo - &images[j].hi);
                    if min_gap.as_ref().is_none_or(|m| &g < m) {
                        min_gap = Some(g);
                    }
                }
            }
        }
    }
    let inf = images.iter().map(|i| i.lo.clone()).min().expect("nonempty");
    let expected = pow(&int(2), -(2 * m_max - 1))?;
    let zero_unattained = images.iter().all(|i| !i.contains(&zero));
    let shown: Vec<String> = images.iter().take(4).map(ToString::to_string).collect();
    let details = |r: PropertyReport| {
        r.with_detail("m_max", m_max)
            .with_detail("first_images", shown.clone())
            .with_detail("inf", fmt_rational(&inf))
            .with_detail("inf_matches", inf == expected)
            .with_detail("zero_unattained", zero_unattained)
            .with_detail("min_gap", min_gap.as_ref().map(fmt_rational))
    };
    if let Some((i, j)) = overlap {
        return Ok(details(PropertyReport::fails(
            NAME,
            0.0,
            Witness::IndexPair {
                first: i.to_string(),
                second: j.to_string(),
                point: None,
            },
        )));
    }
    if inf != expected || !zero_unattained {
        return Ok(details(PropertyReport::fails(
            NAME,
            0.0,
            Witness::Element { label: "0".into() },
        )));
    }
    let margin = crate::rational::to_f64(min_gap.as_ref().expect("M >= 2 gives a pair"));
    Ok(details(PropertyReport::holds(NAME, margin)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Verdict;

    fn set(v: &[usize]) -> Subset {
        v.iter().copied().collect()
    }

    fn constants() -> SelfMapTable {
        SelfMapTable::new(4, vec![("a".into(), vec![0; 4]), ("b".into(), vec![1; 4])]).unwrap()
    }

    #[test]
    fn union_examples() {
        let m = constants();
        assert_eq!(f_union(&m, &set(&[0, 1, 2, 3])).unwrap(), set(&[0, 1]));
        assert_eq!(f_union(&m, &set(&[])).unwrap(), set(&[]));
        let id = SelfMapTable::new(3, vec![("id".into(), vec![0, 1, 2])]).unwrap();
        assert_eq!(f_union(&id, &set(&[0, 2])).unwrap(), set(&[0, 2]));
        assert!(f_union(&id, &set(&[5])).is_err());
    }

    #[test]
    fn gfp_examples() {
        let m = constants();
        let r = tk_gfp(&m, None).unwrap();
        assert_eq!(r.gfp, set(&[0, 1]));
        assert!(r.verified_fixed);
        let id = SelfMapTable::new(3, vec![("id".into(), vec![0, 1, 2])]).unwrap();
        assert_eq!(tk_gfp(&id, None).unwrap().gfp, set(&[0, 1, 2]));
        assert_eq!(tk_gfp(&id, None).unwrap().steps, 0);
        let inc = SelfMapTable::new(3, vec![("inc".into(), vec![1, 2, 2])]).unwrap();
        let r = tk_gfp(&inc, None).unwrap();
        assert_eq!(r.gfp, set(&[2]));
        assert_eq!(r.chain, vec![set(&[0, 1, 2]), set(&[1, 2]), set(&[2])]);
        assert_eq!(tk_gfp(&id, Some(&set(&[1]))).unwrap().gfp, set(&[1]));
        assert!(tk_gfp(&inc, Some(&set(&[0]))).is_err());
    }

    #[test]
    fn brute_force_examples() {
        let id = SelfMapTable::new(2, vec![("id".into(), vec![0, 1])]).unwrap();
        let all = brute_force_fixed_subsets(&id).unwrap();
        assert_eq!(all.len(), 4);
        assert_eq!(subset_maximum(&all), Some(&set(&[0, 1])));
        let fixed = brute_force_fixed_subsets(&constants()).unwrap();
        assert_eq!(fixed, vec![set(&[]), set(&[0, 1])]);
        let inc = SelfMapTable::new(3, vec![("inc".into(), vec![1, 2, 2])]).unwrap();
        assert_eq!(
            subset_maximum(&brute_force_fixed_subsets(&inc).unwrap()),
            Some(&set(&[2]))
        );
        let big = SelfMapTable::new(21, vec![("id".into(), (0..21).collect())]).unwrap();
        assert!(matches!(
            brute_force_fixed_subsets(&big),
            Err(Error::UniverseTooLarge(21))
        ));
    }

    #[test]
    fn premises() {
        let u = FiniteUniverse::range(4).unwrap();
        assert!(check_continuity_premises(&constants(), &u).is_holds());
        let twin = SelfMapTable::new(
            4,
            vec![
                ("a".into(), vec![0, 1, 2, 3]),
                ("b".into(), vec![0, 1, 2, 3]),
            ],
        )
        .unwrap();
        let r = check_continuity_premises(&twin, &u);
        assert_eq!(r.verdict, Verdict::Fails);
        assert!(matches!(r.witness, Some(Witness::Element { .. })));
    }

    #[test]
    fn truncated_frac_system_overlaps() {
        // f_m(x) = frac(x + 1/m) on the grid {k/12}; all images are the whole grid
        let n = 12;
        let maps = (2..=4)
            .map(|m| {
                (
                    m.to_string(),
                    (0..n).map(|k| (k + n / m) % n).collect::<Vec<usize>>(),
                )
            })
            .collect();
        let t = SelfMapTable::new(n, maps).unwrap();
        assert_eq!(
            check_continuity_premises(&t, &FiniteUniverse::range(n).unwrap()).verdict,
            Verdict::Fails
        );
    }

    #[test]
    fn json_input() {
        let (u, m) = parse_lattice_json(
            r#"{ "universe": [0, 1, 2], "maps": { "1": { "0": "1", "1": "2", "2": "2" } } }"#,
        )
        .unwrap();
        assert_eq!(u.len(), 3);
        assert_eq!(u.labels_of(&tk_gfp(&m, None).unwrap().gfp), vec!["2"]);
        assert!(
            parse_lattice_json(r#"{ "universe": [0, 1], "maps": { "1": { "0": "1" } } }"#).is_err()
        );
        assert!(parse_lattice_json(
            r#"{ "universe": [0, 1], "maps": { "1": { "0": "1", "1": "5" } } }"#
        )
        .is_err());
    }

    #[test]
    fn intervals() {
        let c3 = frac_system_set(3);
        assert!(c3.contains(&rat(2, 3)));
        assert!(!c3.contains(&int(1)));
        assert!(!c3.contains(&rat(1, 2)));
        let img = c3.frac_shift(&rat(1, 3));
        assert!(img.contains(&int(0)));
        assert!(img.to_strings().iter().any(|s| s == "[0, 1/3)"));
        let open = Interval::new(int(0), int(1), false, false).unwrap();
        assert!(!open.contains(&int(0)));
        assert!(Interval::new(int(1), int(1), true, false).is_none());
    }

    #[test]
    fn frac_shift_counterexample() {
        let r = remark31_counterexample(10, 10).unwrap();
        assert!(r.is_holds(), "{}", r.to_json());
        assert_eq!(r.details["witness_n3"]["image"], "0");
        assert_eq!(r.details["image_of_zero_min"], "1/10");
        assert!(remark31_counterexample(2, 5).is_err());
    }

    #[test]
    fn dyadic_counterexample() {
        let r = remark42_counterexample(5).unwrap();
        assert!(r.is_holds());
        assert_eq!(r.details["inf"], "1/512");
        assert_eq!(r.details["first_images"][0], "[1/2, 1]");
        assert_eq!(r.details["first_images"][1], "[1/8, 1/4]");
        assert!(remark42_counterexample(1).is_err());
    }
}
