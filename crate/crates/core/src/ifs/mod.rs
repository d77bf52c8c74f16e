//! Iterated function systems of affine contractions.
//!
//! An [`IifsSpec`] is either an explicit list of indexed maps or a
//! one-dimensional parametric family `x ↦ a(m)·x + b(m)` whose infinite index
//! set is truncated to `N` members for every attractor-side computation. The
//! closed-form coefficients stay available so that checks which quantify over
//! the whole family (local finiteness) can look past the truncation.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num::{Signed, Zero};
use rayon::prelude::*;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::metric::PointCloud;
use crate::rational::{fmt_rational, parse_rational, to_f64, Expr, Rational};
use crate::shift::Word;

mod verify;

pub use verify::{
    check_locally_finite, check_non_overlapping, check_strongly_non_overlapping, ssc_constants,
    ssc_report, SscConstants,
};

/// Slack allowed when validating a declared Lipschitz bound.
pub const LIP_SLACK: f64 = 1e-12;

/// Default cap on enumerated words or word pairs.
pub const DEFAULT_CAP: u128 = 1_000_000;

/// Axis-aligned box `∏ [lo_k, hi_k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainBox {
    bounds: Vec<(f64, f64)>,
}

impl DomainBox {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidSpec(
                "box: must have at least one axis".into(),
            ));
        }
        for (k, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidSpec(format!(
                    "box[{k}]: need finite lo <= hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { bounds })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn diameter(&self) -> f64 {
        self.bounds
            .iter()
            .map(|(l, h)| (h - l) * (h - l))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains_point(&self, p: &[f64], tol: f64) -> bool {
        self.bounds
            .iter()
            .zip(p)
            .all(|(&(l, h), &x)| x >= l - tol && x <= h + tol)
    }

    pub fn contains_box(&self, other: &DomainBox, tol: f64) -> bool {
        self.bounds
            .iter()
            .zip(&other.bounds)
            .all(|(&(l, h), &(ol, oh))| ol >= l - tol && oh <= h + tol)
    }

    /// Euclidean distance between the two boxes (0 if they meet).
    pub fn gap(&self, other: &DomainBox) -> f64 {
        self.bounds
            .iter()
            .zip(&other.bounds)
            .map(|(&(l, h), &(ol, oh))| {
                let g = (ol - h).max(l - oh).max(0.0);
                g * g
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn distance_to_point(&self, p: &[f64]) -> f64 {
        self.bounds
            .iter()
            .zip(p)
            .map(|(&(l, h), &x)| {
                let g = (l - x).max(x - h).max(0.0);
                g * g
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn intersection(&self, other: &DomainBox) -> Option<DomainBox> {
        let mut bounds = Vec::with_capacity(self.dim());
        for (&(l, h), &(ol, oh)) in self.bounds.iter().zip(&other.bounds) {
            let (lo, hi) = (l.max(ol), h.min(oh));
            if lo > hi {
                return None;
            }
            bounds.push((lo, hi));
        }
        Some(DomainBox { bounds })
    }

    /// Regular grid of `k` points per axis (corners included); the center
    /// alone when `k <= 1`.
    pub fn grid_samples(&self, k: usize) -> Vec<Vec<f64>> {
        if k <= 1 {
            return vec![self.center()];
        }
        let mut out: Vec<Vec<f64>> = vec![Vec::new()];
        for &(l, h) in &self.bounds {
            let mut next = Vec::with_capacity(out.len() * k);
            for p in &out {
                for s in 0..k {
                    let mut q = p.clone();
                    q.push(l + (h - l) * s as f64 / (k - 1) as f64);
                    next.push(q);
                }
            }
            out = next;
        }
        out
    }
}

/// Affine self-map `x ↦ Mx + b` of R^d with a certified Lipschitz bound and
/// an optional lower bi-Lipschitz constant.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineContraction {
    dim: usize,
    matrix: Vec<f64>,
    offset: Vec<f64>,
    lip_bound: f64,
    bilip_lower: Option<f64>,
}

impl AffineContraction {
    /// Validates the declared bounds against the singular values of the
    /// matrix. A missing `lip_bound` is filled in from the largest singular
    /// value plus [`LIP_SLACK`].
    pub fn new(
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
        lip_bound: Option<f64>,
        bilip_lower: Option<f64>,
    ) -> Result<Self> {
        let dim = offset.len();
        if dim == 0 {
            return Err(Error::InvalidSpec(
                "offset: must have at least one entry".into(),
            ));
        }
        if matrix.len() != dim || matrix.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidSpec(format!("matrix: expected {dim}x{dim}")));
        }
        let flat: Vec<f64> = matrix.into_iter().flatten().collect();
        if flat.iter().chain(&offset).any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpec(
                "matrix/offset: entries must be finite".into(),
            ));
        }
        let (smax, smin) = singular_range(dim, &flat);
        let lip = lip_bound.unwrap_or(smax + LIP_SLACK);
        if !(0.0..1.0).contains(&lip) {
            return Err(Error::InvalidSpec(format!("lip: {lip} is not in [0, 1)")));
        }
        if smax > lip + LIP_SLACK {
            return Err(Error::InvalidSpec(format!(
                "lip: declared {lip} is below the operator norm {smax}"
            )));
        }
        if let Some(l) = bilip_lower {
            if !(l > 0.0 && l <= lip) {
                return Err(Error::InvalidSpec(format!(
                    "bilip_lower: {l} must satisfy 0 < l <= lip = {lip}"
                )));
            }
            if l > smin + LIP_SLACK {
                return Err(Error::InvalidSpec(format!(
                    "bilip_lower: declared {l} exceeds the smallest singular value {smin}"
                )));
            }
        }
        Ok(Self {
            dim,
            matrix: flat,
            offset,
            lip_bound: lip,
            bilip_lower,
        })
    }

    /// `f_λ = id`, with Lipschitz bound 1 (outside the contraction range).
    pub fn identity(dim: usize) -> Self {
        let mut matrix = vec![0.0; dim * dim];
        for k in 0..dim {
            matrix[k * dim + k] = 1.0;
        }
        Self {
            dim,
            matrix,
            offset: vec![0.0; dim],
            lip_bound: 1.0,
            bilip_lower: Some(1.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major matrix entries.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn lip_bound(&self) -> f64 {
        self.lip_bound
    }

    pub fn bilip_lower(&self) -> Option<f64> {
        self.bilip_lower
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        let rows = self.matrix.chunks_exact(d).zip(&self.offset);
        for (o, (row, b)) in out.iter_mut().zip(rows) {
            *o = row.iter().zip(x).map(|(m, v)| m * v).sum::<f64>() + b;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.apply_into(x, &mut out);
        out
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineContraction) -> AffineContraction {
        let d = self.dim;
        let mut matrix = vec![0.0; d * d];
        for r in 0..d {
            for c in 0..d {
                matrix[r * d + c] = (0..d)
                    .map(|k| self.matrix[r * d + k] * inner.matrix[k * d + c])
                    .sum();
            }
        }
        let offset = self.apply(&inner.offset);
        let bilip_lower = match (self.bilip_lower, inner.bilip_lower) {
            (Some(a), Some(b)) => Some(a * b),
            _ => None,
        };
        AffineContraction {
            dim: d,
            matrix,
            offset,
            lip_bound: self.lip_bound * inner.lip_bound,
            bilip_lower,
        }
    }

    /// Exact interval image of a box (affine maps attain their extremes at
    /// the corners, coordinate by coordinate).
    pub fn image_box(&self, bx: &DomainBox) -> DomainBox {
        let d = self.dim;
        let bounds = (0..d)
            .map(|r| {
                let (mut lo, mut hi) = (self.offset[r], self.offset[r]);
                for (c, &(l, h)) in bx.bounds().iter().enumerate() {
                    let m = self.matrix[r * d + c];
                    let (a, b) = (m * l, m * h);
                    lo += a.min(b);
                    hi += a.max(b);
                }
                (lo, hi)
            })
            .collect();
        DomainBox { bounds }
    }

    /// A point of `bx` whose image is within `tol` of `y`, if one is found
    /// by clamping the least-squares preimage into the box.
    pub fn preimage_in_box(&self, y: &[f64], bx: &DomainBox, tol: f64) -> Option<Vec<f64>> {
        let d = self.dim;
        let m = DMatrix::from_row_slice(d, d, &self.matrix);
        let rhs = DVector::from_iterator(d, y.iter().zip(&self.offset).map(|(a, b)| a - b));
        let svd = m.svd(true, true);
        let x = svd.solve(&rhs, 1e-14).ok()?;
        let x: Vec<f64> = x
            .iter()
            .zip(bx.bounds())
            .map(|(&v, &(l, h))| v.clamp(l, h))
            .collect();
        let fx = self.apply(&x);
        let err = fx
            .iter()
            .zip(y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        (err <= tol).then_some(x)
    }
}

fn singular_range(dim: usize, flat: &[f64]) -> (f64, f64) {
    if dim == 1 {
        let a = flat[0].abs();
        return (a, a);
    }
    let sv = DMatrix::from_row_slice(dim, dim, flat).singular_values();
    (sv.max(), sv.min())
}

/// `f(A)`; the image resolution is `lip(f) × A.resolution`.
pub fn apply_map(f: &AffineContraction, a: &PointCloud) -> Result<PointCloud> {
    if f.dim != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim,
            found: a.dim(),
        });
    }
    let d = f.dim;
    let mut out = vec![0.0; a.flat().len()];
    out.par_chunks_exact_mut(d)
        .zip(a.flat().par_chunks_exact(d))
        .for_each(|(o, x)| f.apply_into(x, o));
    Ok(PointCloud::from_parts(d, out, f.lip_bound * a.resolution()))
}

/// One-dimensional affine map `x ↦ slope·x + intercept` over the rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactAffine1d {
    pub slope: Rational,
    pub intercept: Rational,
}

impl ExactAffine1d {
    pub fn new(slope: Rational, intercept: Rational) -> Self {
        Self { slope, intercept }
    }

    pub fn identity() -> Self {
        Self {
            slope: Rational::from_integer(1.into()),
            intercept: Rational::zero(),
        }
    }

    pub fn apply(&self, x: &Rational) -> Rational {
        &self.slope * x + &self.intercept
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &ExactAffine1d) -> ExactAffine1d {
        ExactAffine1d {
            slope: &self.slope * &inner.slope,
            intercept: self.apply(&inner.intercept),
        }
    }

    /// The unique solution of `x = slope·x + intercept` when `slope ≠ 1`.
    pub fn fixed_point(&self) -> Option<Rational> {
        let one = Rational::from_integer(1.into());
        let denom = &one - &self.slope;
        (!denom.is_zero()).then(|| &self.intercept / denom)
    }

    /// Image of `[lo, hi]`.
    pub fn image_interval(&self, lo: &Rational, hi: &Rational) -> (Rational, Rational) {
        let (a, b) = (self.apply(lo), self.apply(hi));
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }
}

/// Rational coefficients of a one-dimensional system, aligned with
/// [`IifsSpec::maps`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExactSystem {
    pub lo: Rational,
    pub hi: Rational,
    pub maps: Vec<ExactAffine1d>,
}

/// Declared tail envelope of a parametric family: for every `m` the image
/// `f_m(box)` lies in `[point − radius(m), point + radius(m)]`, with
/// `radius` nonincreasing in `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct TailBound {
    pub point: Rational,
    pub radius: Expr,
}

/// The family `f_m(x) = slope(m)·x + intercept(m)`, `m = m_start, m_start+1, …`,
/// truncated to its first `truncate` members.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineFamily {
    pub slope: Expr,
    pub intercept: Expr,
    pub m_start: i64,
    pub truncate: usize,
    pub tail: Option<TailBound>,
}

impl AffineFamily {
    pub fn member(&self, m: i64) -> Result<ExactAffine1d> {
        Ok(ExactAffine1d::new(
            self.slope.eval(m)?,
            self.intercept.eval(m)?,
        ))
    }

    pub fn parameters(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.truncate as i64).map(move |k| self.m_start + k)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexedMap {
    pub index: String,
    pub map: AffineContraction,
}

/// A system `(X, (f_i)_{i ∈ I})` of affine contractions on a certified
/// invariant box.
#[derive(Clone, Debug, PartialEq)]
pub struct IifsSpec {
    domain_box: DomainBox,
    maps: Vec<IndexedMap>,
    exact: Option<ExactSystem>,
    family: Option<AffineFamily>,
    contraction_c: f64,
}

impl IifsSpec {
    pub fn new(domain_box: DomainBox, maps: Vec<(String, AffineContraction)>) -> Result<Self> {
        let maps = maps
            .into_iter()
            .map(|(index, map)| IndexedMap { index, map })
            .collect();
        Self::validated(domain_box, maps, None, None)
    }

    /// One-dimensional system with rational coefficients on `[lo, hi]`;
    /// enables the exact-arithmetic paths.
    pub fn exact_1d(
        lo: Rational,
        hi: Rational,
        maps: Vec<(String, ExactAffine1d)>,
    ) -> Result<Self> {
        let (floats, exact): (Vec<_>, Vec<_>) = maps
            .into_iter()
            .map(|(index, f)| {
                Ok((
                    IndexedMap {
                        index,
                        map: float_map(&f, None, None)?,
                    },
                    f,
                ))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        let domain_box = DomainBox::new(vec![(to_f64(&lo), to_f64(&hi))])?;
        Self::validated(
            domain_box,
            floats,
            Some(ExactSystem {
                lo,
                hi,
                maps: exact,
            }),
            None,
        )
    }

    pub fn from_family(lo: Rational, hi: Rational, family: AffineFamily) -> Result<Self> {
        if family.truncate == 0 {
            return Err(Error::InvalidSpec(
                "family.truncate: must be at least 1".into(),
            ));
        }
        let mut members = Vec::with_capacity(family.truncate);
        for m in family.parameters() {
            let f = family
                .member(m)
                .map_err(|e| Error::InvalidSpec(format!("family at m={m}: {e}")))?;
            members.push((m.to_string(), f));
        }
        let mut spec = Self::exact_1d(lo, hi, members)?;
        spec.family = Some(family);
        Ok(spec)
    }

    fn validated(
        domain_box: DomainBox,
        maps: Vec<IndexedMap>,
        exact: Option<ExactSystem>,
        family: Option<AffineFamily>,
    ) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidSpec(
                "maps: at least one map is required".into(),
            ));
        }
        let dim = domain_box.dim();
        let mut seen = HashSet::new();
        for (k, m) in maps.iter().enumerate() {
            if m.index.is_empty() || m.index.contains('.') {
                return Err(Error::InvalidSpec(format!(
                    "maps[{k}].index: `{}` must be nonempty without '.'",
                    m.index
                )));
            }
            if !seen.insert(m.index.clone()) {
                return Err(Error::InvalidSpec(format!(
                    "maps[{k}].index: duplicate symbol `{}`",
                    m.index
                )));
            }
            if m.map.dim() != dim {
                return Err(Error::InvalidSpec(format!(
                    "maps[{k}]: dimension {} does not match box dimension {dim}",
                    m.map.dim()
                )));
            }
        }
        match &exact {
            Some(ex) => {
                for (k, f) in ex.maps.iter().enumerate() {
                    let (lo, hi) = f.image_interval(&ex.lo, &ex.hi);
                    if lo < ex.lo || hi > ex.hi {
                        return Err(Error::InvalidSpec(format!(
                            "maps[{k}]: image [{}, {}] leaves the box [{}, {}]",
                            fmt_rational(&lo),
                            fmt_rational(&hi),
                            fmt_rational(&ex.lo),
                            fmt_rational(&ex.hi)
                        )));
                    }
                }
            }
            None => {
                let tol = 1e-12 * (1.0 + domain_box.diameter());
                for (k, m) in maps.iter().enumerate() {
                    if !domain_box.contains_box(&m.map.image_box(&domain_box), tol) {
                        return Err(Error::InvalidSpec(format!(
                            "maps[{k}]: image of the box leaves the box"
                        )));
                    }
                }
            }
        }
        let contraction_c = maps.iter().map(|m| m.map.lip_bound()).fold(0.0, f64::max);
        if contraction_c >= 1.0 {
            return Err(Error::InvalidSpec(format!(
                "contraction factor {contraction_c} is not < 1"
            )));
        }
        Ok(Self {
            domain_box,
            maps,
            exact,
            family,
            contraction_c,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SpecFile = serde_json::from_str(text)?;
        file.into_spec()
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Re-truncates a parametric family to `n` members.
    pub fn with_truncation(&self, n: usize) -> Result<Self> {
        let family = self.family.as_ref().ok_or_else(|| {
            Error::InvalidArgument("truncation only applies to parametric families".into())
        })?;
        let ex = self.exact.as_ref().expect("families are exact");
        Self::from_family(
            ex.lo.clone(),
            ex.hi.clone(),
            AffineFamily {
                truncate: n,
                ..family.clone()
            },
        )
    }

    pub fn dimension(&self) -> usize {
        self.domain_box.dim()
    }

    pub fn domain_box(&self) -> &DomainBox {
        &self.domain_box
    }

    pub fn maps(&self) -> &[IndexedMap] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn indices(&self) -> impl Iterator<Item = &str> {
        self.maps.iter().map(|m| m.index.as_str())
    }

    pub fn position(&self, letter: &str) -> Result<usize> {
        self.maps
            .iter()
            .position(|m| m.index == letter)
            .ok_or_else(|| Error::UnknownIndex(letter.to_owned()))
    }

    pub fn map(&self, letter: &str) -> Result<&AffineContraction> {
        Ok(&self.maps[self.position(letter)?].map)
    }

    /// `c = sup_i lip(f_i)` over the (truncated) maps.
    pub fn contraction_c(&self) -> f64 {
        self.contraction_c
    }

    /// Smallest declared lower bi-Lipschitz constant, if every map has one.
    pub fn bilip_lower(&self) -> Option<f64> {
        self.maps
            .iter()
            .map(|m| m.map.bilip_lower())
            .try_fold(f64::INFINITY, |acc, l| l.map(|l| acc.min(l)))
    }

    pub fn exact(&self) -> Option<&ExactSystem> {
        self.exact.as_ref()
    }

    pub fn family(&self) -> Option<&AffineFamily> {
        self.family.as_ref()
    }

    /// Number of family members in use, for parametric systems.
    pub fn truncation(&self) -> Option<usize> {
        self.family.as_ref().map(|f| f.truncate)
    }

    /// Exact contraction factor for one-dimensional rational systems.
    pub fn contraction_c_exact(&self) -> Option<Rational> {
        let ex = self.exact.as_ref()?;
        ex.maps.iter().map(|f| f.slope.abs()).max()
    }

    /// Short stable hash of the system's coefficients.
    pub fn fingerprint(&self) -> String {
        let mut text = String::new();
        for &(l, h) in self.domain_box.bounds() {
            let _ = write!(text, "[{:x},{:x}]", l.to_bits(), h.to_bits());
        }
        for m in &self.maps {
            let _ = write!(text, "|{}:", m.index);
            for v in m.map.matrix().iter().chain(m.map.offset()) {
                let _ = write!(text, "{:x},", v.to_bits());
            }
            let _ = write!(text, "{:x}", m.map.lip_bound().to_bits());
        }
        if let Some(ex) = &self.exact {
            for f in &ex.maps {
                let _ = write!(
                    text,
                    "|{}/{}",
                    fmt_rational(&f.slope),
                    fmt_rational(&f.intercept)
                );
            }
        }
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn float_map(f: &ExactAffine1d, lip: Option<f64>, bilip: Option<f64>) -> Result<AffineContraction> {
    let a = to_f64(&f.slope);
    // round the exact |slope| outward so the declared bound stays certified
    let lip = lip.unwrap_or_else(|| next_up(to_f64(&f.slope.abs())));
    AffineContraction::new(vec![vec![a]], vec![to_f64(&f.intercept)], Some(lip), bilip)
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        f64::from_bits(x.to_bits() + 1)
    }
}

/// `f_ω = f_{ω_1} ∘ … ∘ f_{ω_m}`; the empty word gives the identity.
pub fn compose_word(spec: &IifsSpec, w: &Word) -> Result<AffineContraction> {
    let mut acc = AffineContraction::identity(spec.dimension());
    for letter in w.letters() {
        acc = acc.compose(spec.map(letter)?);
    }
    Ok(acc)
}

/// Exact composite for one-dimensional rational systems.
pub fn compose_word_exact(spec: &IifsSpec, w: &Word) -> Result<ExactAffine1d> {
    let ex = spec
        .exact()
        .ok_or_else(|| Error::InvalidArgument("exact mode needs a 1-D rational system".into()))?;
    let mut acc = ExactAffine1d::identity();
    for letter in w.letters() {
        acc = acc.compose(&ex.maps[spec.position(letter)?]);
    }
    Ok(acc)
}

/// Number of words of length exactly `len` over `k` letters, saturating.
pub fn word_count(k: usize, len: usize) -> u128 {
    (0..len).fold(1u128, |acc, _| acc.saturating_mul(k as u128))
}

pub(crate) fn check_cap(count: u128, cap: u128) -> Result<()> {
    if count > cap {
        return Err(Error::CapExceeded { count, cap });
    }
    Ok(())
}

/// Guards an enumeration of all unordered pairs among `n` items.
pub fn check_word_pairs(n: usize, cap: u128) -> Result<()> {
    let n = n as u128;
    check_cap(n * n.saturating_sub(1) / 2, cap)
}

/// Every word of length `len` (lexicographic in map order) with its
/// composite map, built by extending prefixes.
pub fn words_with_maps(
    spec: &IifsSpec,
    len: usize,
    cap: u128,
) -> Result<Vec<(Word, AffineContraction)>> {
    check_cap(word_count(spec.len(), len), cap)?;
    let mut level = vec![(Word::empty(), AffineContraction::identity(spec.dimension()))];
    for _ in 0..len {
        let mut next = Vec::with_capacity(level.len() * spec.len());
        for (w, f) in &level {
            for m in spec.maps() {
                let mut w2 = w.clone();
                w2.push(m.index.clone());
                next.push((w2, f.compose(&m.map)));
            }
        }
        level = next;
    }
    Ok(level)
}

/// Exact counterpart of [`words_with_maps`].
pub fn words_with_maps_exact(
    spec: &IifsSpec,
    len: usize,
    cap: u128,
) -> Result<Vec<(Word, ExactAffine1d)>> {
    let ex = spec
        .exact()
        .ok_or_else(|| Error::InvalidArgument("exact mode needs a 1-D rational system".into()))?;
    check_cap(word_count(spec.len(), len), cap)?;
    let mut level = vec![(Word::empty(), ExactAffine1d::identity())];
    for _ in 0..len {
        let mut next = Vec::with_capacity(level.len() * spec.len());
        for (w, f) in &level {
            for (m, g) in spec.maps().iter().zip(&ex.maps) {
                let mut w2 = w.clone();
                w2.push(m.index.clone());
                next.push((w2, f.compose(g)));
            }
        }
        level = next;
    }
    Ok(level)
}

// ---- JSON spec files ----

#[derive(Deserialize)]
#[serde(untagged)]
enum Coef {
    Num(serde_json::Number),
    Str(String),
}

impl Coef {
    fn exact(&self, field: &str) -> Result<Rational> {
        let r = match self {
            Coef::Num(n) => parse_rational(&n.to_string()),
            Coef::Str(s) => Expr::parse(s).and_then(|e| e.eval(0)),
        };
        r.map_err(|e| Error::InvalidSpec(format!("{field}: {e}")))
    }

    fn float(&self, field: &str) -> Result<f64> {
        self.exact(field).map(|r| to_f64(&r))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    dimension: Option<usize>,
    #[serde(rename = "box")]
    domain_box: Vec<Vec<Coef>>,
    maps: Option<Vec<MapFile>>,
    family: Option<FamilyFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    index: String,
    matrix: Vec<Vec<Coef>>,
    offset: Vec<Coef>,
    lip: Option<Coef>,
    bilip_lower: Option<Coef>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyFile {
    kind: String,
    slope: String,
    intercept: String,
    m_start: i64,
    truncate: usize,
    tail: Option<TailFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TailFile {
    point: Coef,
    radius: String,
}

impl SpecFile {
    fn into_spec(self) -> Result<IifsSpec> {
        let mut exact_box = Vec::with_capacity(self.domain_box.len());
        for (k, axis) in self.domain_box.iter().enumerate() {
            if axis.len() != 2 {
                return Err(Error::InvalidSpec(format!("box[{k}]: expected [lo, hi]")));
            }
            exact_box.push((
                axis[0].exact(&format!("box[{k}][0]"))?,
                axis[1].exact(&format!("box[{k}][1]"))?,
            ));
        }
        let dim = exact_box.len();
        if let Some(d) = self.dimension {
            if d != dim {
                return Err(Error::InvalidSpec(format!(
                    "dimension: {d} does not match box with {dim} axes"
                )));
            }
        }
        match (self.maps, self.family) {
            (Some(_), Some(_)) => Err(Error::InvalidSpec(
                "give either `maps` or `family`, not both".into(),
            )),
            (None, None) => Err(Error::InvalidSpec("missing `maps` or `family`".into())),
            (None, Some(fam)) => {
                if fam.kind != "affine-1d" {
                    return Err(Error::InvalidSpec(format!(
                        "family.kind: unsupported `{}`",
                        fam.kind
                    )));
                }
                if dim != 1 {
                    return Err(Error::InvalidSpec(
                        "family: affine-1d needs a 1-D box".into(),
                    ));
                }
                let expr = |s: &str, f: &str| {
                    Expr::parse(s).map_err(|e| Error::InvalidSpec(format!("family.{f}: {e}")))
                };
                let tail = match fam.tail {
                    Some(t) => Some(TailBound {
                        point: t.point.exact("family.tail.point")?,
                        radius: expr(&t.radius, "tail.radius")?,
                    }),
                    None => None,
                };
                let family = AffineFamily {
                    slope: expr(&fam.slope, "slope")?,
                    intercept: expr(&fam.intercept, "intercept")?,
                    m_start: fam.m_start,
                    truncate: fam.truncate,
                    tail,
                };
                let (lo, hi) = exact_box.into_iter().next().expect("one axis");
                IifsSpec::from_family(lo, hi, family)
            }
            (Some(maps), None) => {
                if dim == 1 {
                    let mut exact = Vec::with_capacity(maps.len());
                    let mut floats = Vec::with_capacity(maps.len());
                    for (k, m) in maps.into_iter().enumerate() {
                        let field = |f: &str| format!("maps[{k}].{f}");
                        if m.matrix.len() != 1 || m.matrix[0].len() != 1 || m.offset.len() != 1 {
                            return Err(Error::InvalidSpec(format!(
                                "maps[{k}]: expected a 1x1 matrix and 1 offset"
                            )));
                        }
                        let f = ExactAffine1d::new(
                            m.matrix[0][0].exact(&field("matrix"))?,
                            m.offset[0].exact(&field("offset"))?,
                        );
                        let lip = m.lip.as_ref().map(|c| c.float(&field("lip"))).transpose()?;
                        let bilip = m
                            .bilip_lower
                            .as_ref()
                            .map(|c| c.float(&field("bilip_lower")))
                            .transpose()?;
                        if let Some(l) = lip {
                            // a float literal for 1/3 may sit just below the exact |slope|
                            if l + LIP_SLACK < to_f64(&f.slope.abs()) {
                                return Err(Error::InvalidSpec(format!(
                                    "{}: below |slope|",
                                    field("lip")
                                )));
                            }
                        }
                        let fm = float_map(
                            &f,
                            lip.map(|l| l.max(next_up(to_f64(&f.slope.abs())))),
                            bilip,
                        )
                        .map_err(|e| prefix_err(&format!("maps[{k}]"), e))?;
                        floats.push(IndexedMap {
                            index: m.index,
                            map: fm,
                        });
                        exact.push(f);
                    }
                    let (lo, hi) = exact_box.into_iter().next().expect("one axis");
                    let domain_box = DomainBox::new(vec![(to_f64(&lo), to_f64(&hi))])?;
                    IifsSpec::validated(
                        domain_box,
                        floats,
                        Some(ExactSystem {
                            lo,
                            hi,
                            maps: exact,
                        }),
                        None,
                    )
                } else {
                    let domain_box = DomainBox::new(
                        exact_box
                            .iter()
                            .map(|(l, h)| (to_f64(l), to_f64(h)))
                            .collect(),
                    )?;
                    let mut out = Vec::with_capacity(maps.len());
                    for (k, m) in maps.into_iter().enumerate() {
                        let field = |f: &str| format!("maps[{k}].{f}");
                        let matrix = m
                            .matrix
                            .iter()
                            .map(|row| {
                                row.iter()
                                    .map(|c| c.float(&field("matrix")))
                                    .collect::<Result<Vec<_>>>()
                            })
                            .collect::<Result<Vec<_>>>()?;
                        let offset = m
                            .offset
                            .iter()
                            .map(|c| c.float(&field("offset")))
                            .collect::<Result<Vec<_>>>()?;
                        let lip = m.lip.as_ref().map(|c| c.float(&field("lip"))).transpose()?;
                        let bilip = m
                            .bilip_lower
                            .as_ref()
                            .map(|c| c.float(&field("bilip_lower")))
                            .transpose()?;
                        let f = AffineContraction::new(matrix, offset, lip, bilip)
                            .map_err(|e| prefix_err(&format!("maps[{k}]"), e))?;
                        out.push((m.index, f));
                    }
                    IifsSpec::new(domain_box, out)
                }
            }
        }
    }
}

fn prefix_err(prefix: &str, e: Error) -> Error {
    match e {
        Error::InvalidSpec(msg) => Error::InvalidSpec(format!("{prefix}.{msg}")),
        other => other,
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::metric::PointCloud;
    use crate::rational::{int, rat};

    #[test]
    fn apply_map_examples() {
        let f = AffineContraction::new(vec![vec![1.0 / 3.0]], vec![0.0], None, None).unwrap();
        let a = PointCloud::from_flat(1, vec![0.0, 1.0], 0.0).unwrap();
        assert_eq!(apply_map(&f, &a).unwrap().flat(), &[0.0, 1.0 / 3.0]);
        let c = AffineContraction::new(vec![vec![0.0]], vec![0.5], None, None).unwrap();
        assert_eq!(apply_map(&c, &a).unwrap().flat(), &[0.5]);
        let g = AffineContraction::new(vec![vec![1.0 / 3.0]], vec![2.0 / 3.0], None, None).unwrap();
        let z = PointCloud::from_flat(1, vec![0.0], 0.0).unwrap();
        assert_eq!(apply_map(&g, &z).unwrap().flat(), &[2.0 / 3.0]);
        let two = PointCloud::from_flat(2, vec![0.0, 0.0], 0.0).unwrap();
        assert!(apply_map(&f, &two).is_err());
        let r = PointCloud::from_flat(1, vec![0.0, 1.0], 0.3).unwrap();
        assert!(apply_map(&f, &r).unwrap().resolution() <= f.lip_bound() * 0.3);
    }

    #[test]
    fn compose_examples() {
        let s = cantor();
        let id = compose_word(&s, &Word::empty()).unwrap();
        assert_eq!(id, AffineContraction::identity(1));
        assert_eq!(id.lip_bound(), 1.0);
        let w: Word = "1.2".parse().unwrap();
        assert_eq!(
            compose_word_exact(&s, &w).unwrap(),
            ExactAffine1d::new(rat(1, 9), rat(2, 9))
        );
        let f = compose_word(&s, &w).unwrap();
        assert!((f.matrix()[0] - 1.0 / 9.0).abs() < 1e-15);
        assert!((f.offset()[0] - 2.0 / 9.0).abs() < 1e-15);
        assert_eq!(
            compose_word(&s, &"1".parse().unwrap()).unwrap(),
            s.maps()[0].map
        );
        assert!(matches!(
            compose_word(&s, &"3".parse().unwrap()),
            Err(Error::UnknownIndex(_))
        ));
    }

    #[test]
    fn composite_lip_is_product_bound() {
        let s = cantor();
        let c = s.contraction_c();
        for (w, f) in words_with_maps(&s, 5, DEFAULT_CAP).unwrap() {
            assert!(f.lip_bound() <= c.powi(w.len() as i32));
        }
    }

    #[test]
    fn contraction_validation() {
        assert!(AffineContraction::new(vec![vec![1.0]], vec![0.0], None, None).is_err());
        assert!(AffineContraction::new(vec![vec![0.5]], vec![0.0], Some(0.4), None).is_err());
        assert!(AffineContraction::new(vec![vec![0.5]], vec![0.0], Some(0.6), Some(0.55)).is_err());
        assert!(AffineContraction::new(vec![vec![0.5]], vec![0.0], Some(0.6), Some(0.5)).is_ok());
        // rotation by 90 degrees scaled by 0.9: operator norm 0.9, Frobenius norm 1.27
        let rot = AffineContraction::new(
            vec![vec![0.0, -0.9], vec![0.9, 0.0]],
            vec![0.0, 0.0],
            None,
            Some(0.9),
        )
        .unwrap();
        assert!(rot.lip_bound() < 0.9 + 2e-12);
        assert!(AffineContraction::new(vec![vec![0.5, 0.0]], vec![0.0], None, None).is_err());
    }

    #[test]
    fn spec_validation() {
        let bad = IifsSpec::exact_1d(
            int(0),
            int(1),
            vec![("1".into(), ExactAffine1d::new(rat(1, 2), rat(3, 4)))],
        );
        assert!(matches!(bad, Err(Error::InvalidSpec(_))));
        let dup = IifsSpec::exact_1d(
            int(0),
            int(1),
            vec![
                ("1".into(), ExactAffine1d::new(rat(1, 3), int(0))),
                ("1".into(), ExactAffine1d::new(rat(1, 3), rat(2, 3))),
            ],
        );
        assert!(dup.is_err());
    }

    #[test]
    fn json_specs() {
        let text = r#"{ "dimension": 1, "box": [[0, 1]], "maps": [
            { "index": "1", "matrix": [["1/3"]], "offset": [0], "lip": 0.3333333333333333, "bilip_lower": 0.3333333333333333 },
            { "index": "2", "matrix": [["1/3"]], "offset": ["2/3"], "lip": "1/3" } ] }"#;
        let s = IifsSpec::from_json(text).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(
            s.exact().unwrap().maps[1],
            ExactAffine1d::new(rat(1, 3), rat(2, 3))
        );
        assert_eq!(s.contraction_c_exact().unwrap(), rat(1, 3));
        assert!(s.contraction_c() >= 1.0 / 3.0);
        assert_eq!(
            s.fingerprint(),
            IifsSpec::from_json(text).unwrap().fingerprint()
        );

        let fam = r#"{ "box": [[0, 1]], "family": { "kind": "affine-1d", "slope": "1/2^(2*m-1)",
            "intercept": "1/2^(2*m-1)", "m_start": 1, "truncate": 6, "tail": { "point": 0, "radius": "1/2^(2*m-2)" } } }"#;
        let f = IifsSpec::from_json(fam).unwrap();
        assert_eq!(f.len(), 6);
        assert_eq!(f.truncation(), Some(6));
        assert_eq!(f.with_truncation(9).unwrap().len(), 9);
        assert_eq!(f.maps()[1].index, "2");

        let two_d = r#"{ "dimension": 2, "box": [[0,1],[0,1]], "maps": [
            { "index": "a", "matrix": [[0.5, 0], [0, 0.5]], "offset": [0, 0], "lip": 0.5 } ] }"#;
        assert_eq!(IifsSpec::from_json(two_d).unwrap().dimension(), 2);

        let err = IifsSpec::from_json(
            r#"{ "box": [[0,1]], "maps": [ { "index": "1", "matrix": [[2]], "offset": [0] } ] }"#,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("maps[0]"), "{err}");
        assert!(IifsSpec::from_json("{ \"box\": [[0,1]] ").is_err());
        assert!(IifsSpec::from_json(r#"{ "box": [[0,1]], "maps": [], "extra": 1 }"#).is_err());
    }

    #[test]
    fn bilip_and_gasket() {
        assert_eq!(cantor().bilip_lower(), Some(1.0 / 3.0));
        assert_eq!(twin().bilip_lower(), None);
        let g = gasket();
        assert_eq!(g.dimension(), 2);
        assert_eq!(g.contraction_c(), 0.25);
    }
}
