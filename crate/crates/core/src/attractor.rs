//! Hutchinson-Barnsley iteration with certified error bounds, word fixed
//! points, and cylinder images.
//!
//! On finite clouds the image union is already closed, so `F(A)` and its
//! closure coincide and one step is the pruned union of the map images.

use nalgebra::{DMatrix, DVector};
use num::{One, Signed, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::ifs::{
    apply_map, compose_word, compose_word_exact, words_with_maps, words_with_maps_exact,
    AffineContraction, IifsSpec,
};
use crate::metric::{diameter, epsilon_prune, hausdorff_dist, Point, PointCloud};
use crate::rational::{fmt_rational, pow, to_f64, Rational};
use crate::shift::Word;

/// Largest cloud `iterate_attractor` will build unless told otherwise.
pub const DEFAULT_CLOUD_CAP: usize = 1_000_000;

/// Relative rounding allowance for float affine evaluations.
pub(crate) const ROUNDING: f64 = 8.0 * f64::EPSILON;

#[derive(Clone, Debug, PartialEq)]
pub struct AttractorApprox {
    pub cloud: PointCloud,
    pub iterations: usize,
    /// `c^n / (1 − c) · h(A_0, A_1)`.
    pub error_bound: f64,
    pub h01: f64,
    pub contraction_c: f64,
    /// `Σ_k ε_k` over the pruning schedule.
    pub pruning_slack: f64,
    pub truncation: Option<usize>,
    pub fingerprint: String,
}

impl AttractorApprox {
    /// Upper bound on `h(cloud, A)`.
    pub fn total_error(&self) -> f64 {
        self.error_bound + self.pruning_slack
    }

    /// Upper bound on the diameter of the true attractor.
    pub fn diameter_upper(&self) -> f64 {
        diameter(&self.cloud) + 2.0 * self.total_error()
    }

    pub fn sidecar_json(&self) -> Value {
        json!({
            "n": self.iterations,
            "c": self.contraction_c,
            "h01": self.h01,
            "error_bound": self.error_bound,
            "pruning_slack": self.pruning_slack,
            "truncation": self.truncation,
            "points": self.cloud.len(),
            "resolution": self.cloud.resolution(),
            "fingerprint": self.fingerprint,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopRule {
    Steps(usize),
    TargetError(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterateOptions {
    pub stop: StopRule,
    /// Pruning radius at the final step; earlier steps use `ε·c^(n−k)`.
    pub epsilon: f64,
    pub max_points: usize,
}

impl IterateOptions {
    pub fn steps(n: usize) -> Self {
        Self {
            stop: StopRule::Steps(n),
            epsilon: 0.0,
            max_points: DEFAULT_CLOUD_CAP,
        }
    }

    pub fn target_error(t: f64) -> Self {
        Self {
            stop: StopRule::TargetError(t),
            epsilon: 0.0,
            max_points: DEFAULT_CLOUD_CAP,
        }
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self { epsilon, ..self }
    }

    pub fn with_max_points(self, max_points: usize) -> Self {
        Self { max_points, ..self }
    }
}

fn image_union(spec: &IifsSpec, a: &PointCloud) -> Result<PointCloud> {
    if a.dim() != spec.dimension() {
        return Err(Error::DimensionMismatch {
            expected: spec.dimension(),
            found: a.dim(),
        });
    }
    let images: Vec<PointCloud> = spec
        .maps()
        .par_iter()
        .map(|m| apply_map(&m.map, a))
        .collect::<Result<_>>()?;
    let res = images
        .iter()
        .map(PointCloud::resolution)
        .fold(0.0, f64::max);
    PointCloud::union(&images, res)
}

/// `prune(⋃_i f_i(A), ε)`.
pub fn hb_step(spec: &IifsSpec, a: &PointCloud, eps: f64) -> Result<PointCloud> {
    epsilon_prune(&image_union(spec, a)?, eps)
}

/// Steps needed for `c^n/(1−c)·h01 ≤ target`.
fn steps_for_target(c: f64, h01: f64, target: f64) -> usize {
    let mut n = 0;
    let mut bound = h01 / (1.0 - c);
    while bound > target {
        n += 1;
        bound *= c;
    }
    n
}

/// Iterates `hb_step` from `a0` (default: the box center).
pub fn iterate_attractor(
    spec: &IifsSpec,
    a0: Option<&PointCloud>,
    opts: IterateOptions,
) -> Result<AttractorApprox> {
    let eps = opts.epsilon;
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be finite and >= 0, got {eps}"
        )));
    }
    let a0 = match a0 {
        Some(a) => {
            let tol = 1e-12 * (1.0 + spec.domain_box().diameter());
            if let Some(p) = a.iter().find(|p| !spec.domain_box().contains_point(p, tol)) {
                return Err(Error::InvalidArgument(format!(
                    "initial point {p:?} lies outside the domain box"
                )));
            }
            a.clone()
        }
        None => PointCloud::singleton(Point::new(spec.domain_box().center())?),
    };
    let c = spec.contraction_c();
    let a1 = image_union(spec, &a0)?;
    let h01 = hausdorff_dist(&a0, &a1)?;
    let n = match opts.stop {
        StopRule::Steps(n) => n,
        StopRule::TargetError(t) => {
            if !(t > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "target error must be positive, got {t}"
                )));
            }
            steps_for_target(c, h01, t)
        }
    };
    let mut cloud = a0;
    let mut slack = 0.0;
    for k in 1..=n {
        let eps_k = eps * c.powi((n - k) as i32);
        let next = if k == 1 {
            epsilon_prune(&a1, eps_k)?
        } else {
            hb_step(spec, &cloud, eps_k)?
        };
        if next.len() > opts.max_points {
            return Err(Error::CapExceeded {
                count: next.len() as u128,
                cap: opts.max_points as u128,
            });
        }
        if eps_k > 0.0 {
            slack += eps_k;
        }
        cloud = next;
    }
    Ok(AttractorApprox {
        cloud,
        iterations: n,
        error_bound: c.powi(n as i32) / (1.0 - c) * h01,
        h01,
        contraction_c: c,
        pruning_slack: slack,
        truncation: spec.truncation(),
        fingerprint: spec.fingerprint(),
    })
}

/// Fixed point of an affine map by a linear solve.
pub fn affine_fixed_point(f: &AffineContraction) -> Result<Vec<f64>> {
    let d = f.dim();
    if d == 1 {
        return Ok(vec![f.offset()[0] / (1.0 - f.matrix()[0])]);
    }
    let mut m = DMatrix::from_row_slice(d, d, f.matrix());
    m = DMatrix::identity(d, d) - m;
    let b = DVector::from_column_slice(f.offset());
    let x = m
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::InvalidArgument("map has no unique fixed point".into()))?;
    Ok(x.iter().copied().collect())
}

/// `e_ω` by Banach iteration from the box center, stopped once the step is
/// at most `tol·(1−L)/L`, which puts the iterate within `tol` of `e_ω`.
pub fn word_fixed_point(spec: &IifsSpec, w: &Word, tol: f64) -> Result<Point> {
    if w.is_empty() {
        return Err(Error::InvalidArgument(
            "the empty word has no unique fixed point".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let f = compose_word(spec, w)?;
    let lip = f.lip_bound();
    let mut x = spec.domain_box().center();
    if lip == 0.0 {
        return Point::new(f.apply(&x));
    }
    let stop = tol * (1.0 - lip) / lip;
    for _ in 0..1_000_000 {
        let y = f.apply(&x);
        let step = crate::metric::raw_dist(&x, &y);
        x = y;
        if step <= stop {
            break;
        }
    }
    Point::new(x)
}

/// `e_ω` for one-dimensional rational systems.
pub fn word_fixed_point_exact(spec: &IifsSpec, w: &Word) -> Result<Rational> {
    if w.is_empty() {
        return Err(Error::InvalidArgument(
            "the empty word has no unique fixed point".into(),
        ));
    }
    compose_word_exact(spec, w)?
        .fixed_point()
        .ok_or_else(|| Error::InvalidArgument("slope 1 composite".into()))
}

/// `{ e_ω : |ω| = m }`.
pub fn attractor_by_words(spec: &IifsSpec, m: usize, cap: u128) -> Result<PointCloud> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "word depth must be at least 1".into(),
        ));
    }
    let words = words_with_maps(spec, m, cap)?;
    let coords: Vec<f64> = words
        .par_iter()
        .map(|(_, f)| affine_fixed_point(f))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    PointCloud::from_flat(spec.dimension(), coords, 0.0)
}

/// `f_ω(A)` with a bound on its diameter.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderApprox {
    pub word: Word,
    pub cloud: PointCloud,
    /// `c^|ω| · δ(A-approx) + rounding slack`.
    pub diam_bound: f64,
}

pub fn cylinder(spec: &IifsSpec, a: &AttractorApprox, w: &Word) -> Result<CylinderApprox> {
    let f = compose_word(spec, w)?;
    let cloud = apply_map(&f, &a.cloud)?;
    let delta = diameter(&a.cloud);
    let scale = spec
        .domain_box()
        .bounds()
        .iter()
        .map(|(l, h)| l.abs().max(h.abs()))
        .fold(1.0, f64::max);
    let slack = ROUNDING * (w.len() + 1) as f64 * scale;
    let diam_bound = spec.contraction_c().powi(w.len() as i32) * delta + slack;
    Ok(CylinderApprox {
        word: w.clone(),
        cloud,
        diam_bound,
    })
}

/// Sorted, duplicate-free finite set of rationals.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExactCloud(Vec<Rational>);

impl ExactCloud {
    pub fn new(mut points: Vec<Rational>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        points.sort();
        points.dedup();
        Ok(Self(points))
    }

    pub fn points(&self) -> &[Rational] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn diameter(&self) -> Rational {
        self.0.last().expect("nonempty") - self.0.first().expect("nonempty")
    }

    pub fn to_cloud(&self) -> Result<PointCloud> {
        PointCloud::from_flat(1, self.0.iter().map(to_f64).collect(), 0.0)
    }

    fn nearest(&self, x: &Rational) -> Rational {
        let i = self.0.partition_point(|p| p < x);
        let mut best: Option<Rational> = None;
        for j in [i.wrapping_sub(1), i] {
            if let Some(p) = self.0.get(j) {
                let d = (p - x).abs();
                if best.as_ref().is_none_or(|b| &d < b) {
                    best = Some(d);
                }
            }
        }
        best.expect("nonempty")
    }

    pub fn directed_dist(&self, other: &ExactCloud) -> Rational {
        self.0
            .par_iter()
            .map(|x| other.nearest(x))
            .max()
            .expect("nonempty")
    }

    pub fn hausdorff(&self, other: &ExactCloud) -> Rational {
        self.directed_dist(other).max(other.directed_dist(self))
    }
}

/// `⋃_i f_i(A)` in exact arithmetic.
pub fn hb_step_exact(spec: &IifsSpec, a: &ExactCloud) -> Result<ExactCloud> {
    let ex = spec
        .exact()
        .ok_or_else(|| Error::InvalidArgument("exact mode needs a 1-D rational system".into()))?;
    let pts = ex
        .maps
        .iter()
        .flat_map(|f| a.points().iter().map(move |x| f.apply(x)))
        .collect();
    ExactCloud::new(pts)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactAttractor {
    pub cloud: ExactCloud,
    pub iterations: usize,
    pub h01: Rational,
    pub contraction_c: Rational,
    pub error_bound: Rational,
}

impl ExactAttractor {
    pub fn sidecar_json(&self, spec: &IifsSpec) -> Value {
        json!({
            "n": self.iterations,
            "c": fmt_rational(&self.contraction_c),
            "h01": fmt_rational(&self.h01),
            "error_bound": fmt_rational(&self.error_bound),
            "pruning_slack": "0",
            "truncation": spec.truncation(),
            "points": self.cloud.len(),
            "resolution": 0.0,
            "fingerprint": spec.fingerprint(),
        })
    }
}

/// Exact iteration without pruning; `a0` defaults to the box midpoint.
pub fn iterate_attractor_exact(
    spec: &IifsSpec,
    a0: Option<ExactCloud>,
    steps: usize,
    max_points: usize,
) -> Result<ExactAttractor> {
    let ex = spec
        .exact()
        .ok_or_else(|| Error::InvalidArgument("exact mode needs a 1-D rational system".into()))?;
    let a0 = match a0 {
        Some(a) => {
            if a.points().iter().any(|p| p < &ex.lo || p > &ex.hi) {
                return Err(Error::InvalidArgument(
                    "initial cloud leaves the domain box".into(),
                ));
            }
            a
        }
        None => ExactCloud::new(vec![(&ex.lo + &ex.hi) / Rational::from_integer(2.into())])?,
    };
    let c = spec.contraction_c_exact().expect("exact system");
    let a1 = hb_step_exact(spec, &a0)?;
    let h01 = a0.hausdorff(&a1);
    let mut cloud = a0;
    for k in 1..=steps {
        cloud = if k == 1 {
            a1.clone()
        } else {
            hb_step_exact(spec, &cloud)?
        };
        if cloud.len() > max_points {
            return Err(Error::CapExceeded {
                count: cloud.len() as u128,
                cap: max_points as u128,
            });
        }
    }
    let one = Rational::one();
    let error_bound = if h01.is_zero() {
        Rational::zero()
    } else {
        pow(&c, steps as i64)? / (&one - &c) * &h01
    };
    Ok(ExactAttractor {
        cloud,
        iterations: steps,
        h01,
        contraction_c: c,
        error_bound,
    })
}

/// `{ e_ω : |ω| = m }` in exact arithmetic.
pub fn attractor_by_words_exact(spec: &IifsSpec, m: usize, cap: u128) -> Result<ExactCloud> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "word depth must be at least 1".into(),
        ));
    }
    let pts = words_with_maps_exact(spec, m, cap)?
        .into_iter()
        .map(|(_, f)| {
            f.fixed_point()
                .ok_or_else(|| Error::InvalidArgument("slope 1 composite".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    ExactCloud::new(pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::fixtures::*;
    use crate::ifs::DEFAULT_CAP;
    use crate::metric::directed_set_dist;
    use crate::rational::{int, rat};

    fn exact(v: &[Rational]) -> ExactCloud {
        ExactCloud::new(v.to_vec()).unwrap()
    }

    #[test]
    fn hb_step_examples() {
        let s = cantor();
        let z = PointCloud::from_flat(1, vec![0.0], 0.0).unwrap();
        let a1 = hb_step(&s, &z, 0.0).unwrap();
        assert_eq!(a1.flat(), &[0.0, 2.0 / 3.0]);
        let a2 = hb_step(&s, &a1, 0.0).unwrap();
        assert_eq!(a2.len(), 4);
        let e2 = hb_step_exact(&s, &hb_step_exact(&s, &exact(&[int(0)])).unwrap()).unwrap();
        assert_eq!(e2, exact(&[int(0), rat(2, 9), rat(2, 3), rat(8, 9)]));
        let one = single(rat(1, 2), rat(1, 4));
        let p = PointCloud::from_flat(1, vec![0.0, 1.0], 0.0).unwrap();
        assert_eq!(
            hb_step(&one, &p, 0.0).unwrap(),
            apply_map(&one.maps()[0].map, &p).unwrap()
        );
    }

    #[test]
    fn iterate_examples() {
        let s = cantor();
        let z = PointCloud::from_flat(1, vec![0.0], 0.0).unwrap();
        let a = iterate_attractor(&s, Some(&z), IterateOptions::steps(10)).unwrap();
        assert!((a.h01 - 2.0 / 3.0).abs() < 1e-15);
        assert!((a.error_bound - 3f64.powi(-10)).abs() < 1e-15);
        assert_eq!(a.cloud.len(), 1024);
        let e = iterate_attractor_exact(&s, Some(exact(&[int(0)])), 10, DEFAULT_CLOUD_CAP).unwrap();
        assert_eq!(e.error_bound, rat(1, 59049));
        let fixed = single(rat(1, 2), rat(1, 4));
        let p = PointCloud::from_flat(1, vec![0.5], 0.0).unwrap();
        let r = iterate_attractor(&fixed, Some(&p), IterateOptions::steps(5)).unwrap();
        assert_eq!(r.h01, 0.0);
        assert_eq!(r.error_bound, 0.0);
        let zero = iterate_attractor(&s, Some(&z), IterateOptions::steps(0)).unwrap();
        assert_eq!(zero.cloud, z);
        assert!((zero.error_bound - 1.0).abs() < 1e-15);
        let t = iterate_attractor(&s, Some(&z), IterateOptions::target_error(1e-4)).unwrap();
        assert_eq!(t.iterations, 9);
        assert!(iterate_attractor(&s, None, IterateOptions::target_error(0.0)).is_err());
        assert!(
            iterate_attractor(&s, None, IterateOptions::steps(25).with_max_points(1000)).is_err()
        );
        let out = PointCloud::from_flat(1, vec![2.0], 0.0).unwrap();
        assert!(iterate_attractor(&s, Some(&out), IterateOptions::steps(1)).is_err());
    }

    #[test]
    fn error_bound_contracts_by_c() {
        let s = gasket();
        let a = iterate_attractor(&s, None, IterateOptions::steps(4)).unwrap();
        let b = iterate_attractor(&s, None, IterateOptions::steps(5)).unwrap();
        assert!((b.error_bound - s.contraction_c() * a.error_bound).abs() <= 1e-15 * a.error_bound);
        assert!(b.error_bound < a.error_bound);
    }

    #[test]
    fn pruned_iteration_tracks_slack() {
        let s = cantor();
        let a = iterate_attractor(&s, None, IterateOptions::steps(12).with_epsilon(1e-3)).unwrap();
        assert!(a.pruning_slack <= 1e-3 / (1.0 - s.contraction_c()) + 1e-15);
        assert!(a.cloud.len() < 4096);
        let reference = attractor_by_words(&s, 12, DEFAULT_CAP).unwrap();
        let h = hausdorff_dist(&a.cloud, &reference).unwrap();
        assert!(h <= a.total_error() + 3f64.powi(-12) + 1e-12, "{h}");
    }

    #[test]
    fn word_fixed_points() {
        let s = cantor();
        let w = |t: &str| t.parse::<Word>().unwrap();
        assert!(word_fixed_point(&s, &w("1"), 1e-12).unwrap().coords()[0].abs() <= 1e-12);
        assert!((word_fixed_point(&s, &w("2"), 1e-12).unwrap().coords()[0] - 1.0).abs() <= 1e-12);
        assert!(
            (word_fixed_point(&s, &w("1.2"), 1e-12).unwrap().coords()[0] - 0.25).abs() <= 1e-12
        );
        assert_eq!(word_fixed_point_exact(&s, &w("1.2")).unwrap(), rat(1, 4));
        assert!(word_fixed_point(&s, &Word::empty(), 1e-9).is_err());
        let g = gasket();
        let p = word_fixed_point(&g, &w("2.3"), 1e-12).unwrap();
        let q = affine_fixed_point(&compose_word(&g, &w("2.3")).unwrap()).unwrap();
        assert!(crate::metric::raw_dist(p.coords(), &q) <= 1e-12);
    }

    #[test]
    fn words_cloud_examples() {
        let s = cantor();
        let w1 = attractor_by_words(&s, 1, DEFAULT_CAP).unwrap();
        assert_eq!(w1.len(), 2);
        assert!(w1.flat()[0].abs() < 1e-15 && (w1.flat()[1] - 1.0).abs() < 1e-15);
        let e2 = attractor_by_words_exact(&s, 2, DEFAULT_CAP).unwrap();
        assert_eq!(e2, exact(&[int(0), rat(1, 4), rat(3, 4), int(1)]));
        let one = single(rat(1, 2), rat(1, 4));
        assert_eq!(
            attractor_by_words(&one, 6, DEFAULT_CAP).unwrap().flat(),
            &[0.5]
        );
        assert!(attractor_by_words(&s, 30, 1000).is_err());
    }

    #[test]
    fn cylinders() {
        let s = cantor();
        let a = iterate_attractor(&s, None, IterateOptions::steps(8)).unwrap();
        let lam = cylinder(&s, &a, &Word::empty()).unwrap();
        assert_eq!(lam.cloud, a.cloud);
        assert!((lam.diam_bound - diameter(&a.cloud)).abs() < 1e-12);
        let c1 = cylinder(&s, &a, &"1".parse().unwrap()).unwrap();
        assert!(c1.cloud.iter().all(|p| p[0] >= 0.0 && p[0] <= 1.0 / 3.0));
        let c11 = cylinder(&s, &a, &"1.1".parse().unwrap()).unwrap();
        assert!(c11.cloud.iter().all(|p| p[0] <= 1.0 / 9.0 + 1e-15));
        assert!(
            directed_set_dist(&c11.cloud, &c1.cloud).unwrap() <= 1.0 / 3.0 * 3f64.powi(-8) + 1e-12
        );
    }

    #[test]
    fn exact_hausdorff() {
        let a = exact(&[int(0), int(1)]);
        let b = exact(&[int(0)]);
        assert_eq!(a.hausdorff(&b), int(1));
        assert_eq!(b.directed_dist(&a), int(0));
        assert_eq!(a.diameter(), int(1));
    }
}
