//! The coding map `π(ω) = lim f_{[ω]_m}(a)` and per-pair checks of its
//! quantitative properties.
//!
//! Every check is stated on computed quantities: coded points carry an
//! error bound `c^m·δ(A) + slack` and shift-space distances carry exact
//! lower/upper bounds, so each inequality is tested with both error terms on
//! the safe side.

use rayon::prelude::*;
use serde_json::json;

use crate::attractor::{affine_fixed_point, AttractorApprox, ROUNDING};
use crate::error::{Error, Result};
use crate::ifs::{
    check_cap, check_strongly_non_overlapping, check_word_pairs, ssc_constants, word_count,
    words_with_maps, IifsSpec,
};
use crate::metric::{min_set_dist, raw_dist, Point, PointCloud};
use crate::rational::{from_f64, rat, to_f64, Rational};
use crate::report::{PropertyReport, Witness};
use crate::shift::{right_shift, word_metric, Word, WordPrefix};

#[derive(Clone, Debug, PartialEq)]
pub struct CodedPoint {
    pub prefix: WordPrefix,
    pub point: Point,
    pub error_bound: f64,
}

fn rounding_slack(spec: &IifsSpec, depth: usize) -> f64 {
    let scale = spec
        .domain_box()
        .bounds()
        .iter()
        .map(|(l, h)| l.abs().max(h.abs()))
        .fold(1.0, f64::max);
    ROUNDING * (depth + 2) as f64 * scale
}

/// `f_{[ω]_m}(a)`. The default base point is `e_{ω_1}`, which lies in the
/// attractor, giving the bound `c^m·δ(A)`; a caller-supplied base only lies
/// in the box, so the bound uses the box diameter instead.
pub fn code_point(
    spec: &IifsSpec,
    a: &AttractorApprox,
    w: &WordPrefix,
    base: Option<&Point>,
) -> Result<CodedPoint> {
    let m = w.depth();
    let delta = a.diameter_upper();
    let (start, spread) = match (base, w.letters().first()) {
        (Some(p), _) => {
            if p.dim() != spec.dimension() {
                return Err(Error::DimensionMismatch {
                    expected: spec.dimension(),
                    found: p.dim(),
                });
            }
            (p.coords().to_vec(), delta.max(spec.domain_box().diameter()))
        }
        (None, Some(first)) => (affine_fixed_point(spec.map(first)?)?, delta),
        (None, None) => (spec.domain_box().center(), spec.domain_box().diameter()),
    };
    let mut x = start;
    let mut y = vec![0.0; x.len()];
    for letter in w.letters().iter().rev() {
        spec.map(letter)?.apply_into(&x, &mut y);
        std::mem::swap(&mut x, &mut y);
    }
    let error_bound = spec.contraction_c().powi(m as i32) * spread + rounding_slack(spec, m);
    Ok(CodedPoint {
        prefix: w.clone(),
        point: Point::new(x)?,
        error_bound,
    })
}

/// `π ∘ F_i = f_i ∘ π` on samples `(i, ω)`: the residual must stay within
/// `eb(iω) + lip(f_i)·eb(ω)`.
pub fn check_semiconjugacy(
    spec: &IifsSpec,
    a: &AttractorApprox,
    samples: &[(String, WordPrefix)],
) -> Result<PropertyReport> {
    const NAME: &str = "semiconjugacy";
    if samples.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one sample is required".into(),
        ));
    }
    let rows = samples
        .par_iter()
        .map(|(i, w)| {
            let f = spec.map(i)?;
            let shifted = right_shift(i, w);
            let lhs = code_point(spec, a, &shifted, None)?;
            let inner = code_point(spec, a, w, None)?;
            let rhs = f.apply(inner.point.coords());
            let residual = raw_dist(lhs.point.coords(), &rhs);
            let bound = lhs.error_bound + f.lip_bound() * inner.error_bound;
            Ok((residual, bound, shifted, lhs.point))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_residual = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let margin = rows.iter().map(|r| r.1 - r.0).fold(f64::INFINITY, f64::min);
    let report = match rows.iter().zip(samples).find(|(r, _)| r.0 > r.1) {
        Some((r, (_, w))) => PropertyReport::fails(
            NAME,
            0.0,
            Witness::WordPair {
                first: r.2.to_string(),
                second: w.to_string(),
                point: Some(r.3.coords().to_vec()),
            },
        ),
        None => PropertyReport::holds(NAME, margin),
    };
    Ok(report
        .with_detail("max_residual", max_residual)
        .with_detail("samples", samples.len()))
}

/// `d(π(α), π(β)) ≤ 3·δ(A)·d_Λ⁺(α, β) + eb(α) + eb(β)` per pair, where
/// `d_Λ⁺` is the tail-corrected upper bound. Requires `c ≤ 1/3`.
pub fn check_pi_lipschitz(
    spec: &IifsSpec,
    a: &AttractorApprox,
    pairs: &[(WordPrefix, WordPrefix)],
) -> Result<PropertyReport> {
    const NAME: &str = "pi-lipschitz";
    let third = rat(1, 3);
    let ok = match spec.contraction_c_exact() {
        Some(c) => c <= third,
        None => spec.contraction_c() <= 1.0 / 3.0 + crate::ifs::LIP_SLACK,
    };
    if !ok {
        return Err(Error::HypothesisUnmet(format!(
            "contraction factor {} exceeds 1/3",
            spec.contraction_c()
        )));
    }
    if pairs.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one pair is required".into(),
        ));
    }
    let delta = a.diameter_upper();
    let rows = pairs
        .par_iter()
        .map(|(x, y)| {
            let bounds = word_metric(x, y)?;
            let px = code_point(spec, a, x, None)?;
            let py = code_point(spec, a, y, None)?;
            let d = raw_dist(px.point.coords(), py.point.coords());
            let upper = to_f64(&bounds.upper);
            let rhs = 3.0 * delta * upper + px.error_bound + py.error_bound;
            Ok((d, rhs, d / upper))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_ratio = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let margin = rows.iter().map(|r| r.1 - r.0).fold(f64::INFINITY, f64::min);
    let report = match rows.iter().zip(pairs).find(|(r, _)| r.0 > r.1) {
        Some((_, (x, y))) => PropertyReport::fails(
            NAME,
            0.0,
            Witness::WordPair {
                first: x.to_string(),
                second: y.to_string(),
                point: None,
            },
        ),
        None => PropertyReport::holds(NAME, margin),
    };
    Ok(report
        .with_detail("max_ratio", max_ratio)
        .with_detail("ratio_bound", 3.0 * delta)
        .with_detail("delta_upper", delta)
        .with_detail("pairs", pairs.len()))
}

/// All words of length `depth` with their coded points.
fn coded_words(
    spec: &IifsSpec,
    a: &AttractorApprox,
    depth: usize,
    cap: u128,
) -> Result<Vec<CodedPoint>> {
    check_cap(word_count(spec.len(), depth), cap)?;
    let words: Vec<Word> = words_with_maps(spec, depth, cap)?
        .into_iter()
        .map(|(w, _)| w)
        .collect();
    words
        .par_iter()
        .map(|w| code_point(spec, a, &WordPrefix::from(w.clone()), None))
        .collect()
}

/// Distinct prefixes of length `depth` code to points no closer than the gap
/// between their cylinder boxes `f_ω(box)`, `f_γ(box)` (both points lie in
/// their boxes by construction, so only rounding slack is allowed).
pub fn injectivity_search(
    spec: &IifsSpec,
    a: &AttractorApprox,
    depth: usize,
    cap: u128,
) -> Result<PropertyReport> {
    const NAME: &str = "injectivity";
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    let sno = check_strongly_non_overlapping(spec, depth, cap)?;
    if !sno.is_holds() {
        return Err(Error::HypothesisUnmet(format!(
            "strong non-overlap is {:?} up to depth {depth}",
            sno.verdict
        )));
    }
    if spec.len() == 1 {
        return Ok(PropertyReport::holds(NAME, 0.0).with_detail("pairs", 0));
    }
    let words = words_with_maps(spec, depth, cap)?;
    check_word_pairs(words.len(), cap)?;
    let boxes: Vec<_> = words
        .iter()
        .map(|(_, f)| f.image_box(spec.domain_box()))
        .collect();
    let coded = coded_words(spec, a, depth, cap)?;
    let slack = 2.0 * rounding_slack(spec, depth);
    let worst = (0..coded.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let (boxes, coded) = (&boxes, &coded);
            (i + 1..coded.len()).map(move |j| {
                let d = raw_dist(coded[i].point.coords(), coded[j].point.coords());
                let gap = boxes[i].gap(&boxes[j]);
                (d - (gap - slack), d, i, j)
            })
        })
        .min_by(|x, y| x.0.total_cmp(&y.0).then((x.2, x.3).cmp(&(y.2, y.3))));
    let min_distance = (0..coded.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let coded = &coded;
            (i + 1..coded.len())
                .map(move |j| raw_dist(coded[i].point.coords(), coded[j].point.coords()))
        })
        .reduce(|| f64::INFINITY, f64::min);
    let pairs = coded.len() * (coded.len() - 1) / 2;
    let report = match worst {
        Some((excess, _, i, j)) if excess < 0.0 => PropertyReport::fails(
            NAME,
            0.0,
            Witness::WordPair {
                first: coded[i].prefix.to_string(),
                second: coded[j].prefix.to_string(),
                point: Some(coded[i].point.coords().to_vec()),
            },
        ),
        _ => PropertyReport::holds(NAME, min_distance),
    };
    Ok(report
        .with_detail("pairs", pairs)
        .with_detail("depth", depth))
}

/// How the separation constant enters `δ_ε`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModulusMode {
    /// One constant `sep_c = inf_{i≠j} c_ij` for all pairs.
    Uniform,
    /// Per-word constant `c_α = inf_{n, j ≠ α_n} c_{α_n j}` of the first word.
    PerWord,
}

struct ModulusSetup {
    l: f64,
    exponent: f64,
    sep_lower: f64,
    per_letter: Vec<f64>,
    indices: Vec<String>,
    eps: Rational,
}

impl ModulusSetup {
    fn new(spec: &IifsSpec, a: &AttractorApprox, eps: &Rational) -> Result<Self> {
        let zero = rat(0, 1);
        if !(eps > &zero && eps < &rat(1, 1)) {
            return Err(Error::InvalidArgument("epsilon must lie in (0, 1)".into()));
        }
        let l = spec.bilip_lower().ok_or_else(|| {
            Error::HypothesisUnmet("every map needs a lower bi-Lipschitz constant".into())
        })?;
        let k = ssc_constants(spec, &a.cloud)?;
        // c_ij on the true attractor is at least the cloud value minus twice
        // the image of the cloud error
        let shrink = 2.0 * k.contraction_c * a.total_error() + 2.0 * rounding_slack(spec, 1);
        let per_letter: Vec<f64> = (0..spec.len())
            .map(|i| {
                k.pairwise[i]
                    .iter()
                    .flatten()
                    .copied()
                    .fold(f64::INFINITY, f64::min)
                    - shrink
            })
            .collect();
        let sep_lower = k.sep_c - shrink;
        if sep_lower <= 0.0 {
            return Err(Error::HypothesisUnmet(format!(
                "separation constant {} is not positive",
                k.sep_c
            )));
        }
        Ok(Self {
            l,
            exponent: -to_f64(eps).log(3.0),
            sep_lower,
            per_letter,
            indices: k.indices,
            eps: eps.clone(),
        })
    }

    /// `sep · l^(−log₃ ε)`, rounded down.
    fn delta(&self, sep: f64) -> f64 {
        if sep.is_infinite() {
            return f64::INFINITY;
        }
        sep * self.l.powf(self.exponent) * (1.0 - 1e-12)
    }

    fn sep_for(&self, spec: &IifsSpec, w: &WordPrefix, mode: ModulusMode) -> Result<f64> {
        match mode {
            ModulusMode::Uniform => Ok(self.sep_lower),
            ModulusMode::PerWord => {
                let mut s = f64::INFINITY;
                for letter in w.letters() {
                    s = s.min(self.per_letter[spec.position(letter)?]);
                }
                Ok(s)
            }
        }
    }
}

fn modulus_pairs(
    spec: &IifsSpec,
    setup: &ModulusSetup,
    mode: ModulusMode,
    coded: &[(CodedPoint, CodedPoint)],
) -> Result<PropertyReport> {
    const NAME: &str = "inverse-modulus";
    let rows = coded
        .par_iter()
        .map(|(x, y)| {
            let delta = setup.delta(setup.sep_for(spec, &x.prefix, mode)?);
            let d = raw_dist(x.point.coords(), y.point.coords());
            let antecedent = d < delta - (x.error_bound + y.error_bound);
            let violated = antecedent && word_metric(&x.prefix, &y.prefix)?.upper >= setup.eps;
            Ok((antecedent, violated))
        })
        .collect::<Result<Vec<_>>>()?;
    let hits = rows.iter().filter(|r| r.0).count();
    let delta_uniform = setup.delta(setup.sep_lower);
    let report = match rows.iter().position(|r| r.1) {
        Some(k) => PropertyReport::fails(
            NAME,
            0.0,
            Witness::WordPair {
                first: coded[k].0.prefix.to_string(),
                second: coded[k].1.prefix.to_string(),
                point: None,
            },
        ),
        None => PropertyReport::holds(NAME, delta_uniform),
    };
    Ok(report
        .with_detail("delta_eps", delta_uniform)
        .with_detail("sep_c_lower", setup.sep_lower)
        .with_detail("bilip_lower", setup.l)
        .with_detail("epsilon", to_f64(&setup.eps))
        .with_detail(
            "mode",
            if mode == ModulusMode::Uniform {
                "uniform"
            } else {
                "per-word"
            },
        )
        .with_detail(
            "per_letter_sep",
            json!(setup
                .per_letter
                .iter()
                .zip(&setup.indices)
                .map(|(s, i)| json!([i, s]))
                .collect::<Vec<_>>()),
        )
        .with_detail("pairs", coded.len())
        .with_detail("antecedent_hits", hits))
}

/// `d(π(α), π(β)) < δ_ε ⇒ d_Λ(α, β) < ε` on the given pairs.
pub fn inverse_modulus_check(
    spec: &IifsSpec,
    a: &AttractorApprox,
    eps: &Rational,
    pairs: &[(WordPrefix, WordPrefix)],
    mode: ModulusMode,
) -> Result<PropertyReport> {
    let setup = ModulusSetup::new(spec, a, eps)?;
    let coded = pairs
        .par_iter()
        .map(|(x, y)| Ok((code_point(spec, a, x, None)?, code_point(spec, a, y, None)?)))
        .collect::<Result<Vec<_>>>()?;
    modulus_pairs(spec, &setup, mode, &coded)
}

/// [`inverse_modulus_check`] over every ordered pair of words of length
/// `depth` (including equal words).
pub fn inverse_modulus_exhaustive(
    spec: &IifsSpec,
    a: &AttractorApprox,
    eps: &Rational,
    depth: usize,
    cap: u128,
    mode: ModulusMode,
) -> Result<PropertyReport> {
    let setup = ModulusSetup::new(spec, a, eps)?;
    let words = coded_words(spec, a, depth, cap)?;
    check_cap((words.len() as u128).pow(2), cap.saturating_mul(4))?;
    let coded: Vec<(CodedPoint, CodedPoint)> = words
        .iter()
        .flat_map(|x| words.iter().map(move |y| (x.clone(), y.clone())))
        .collect();
    modulus_pairs(spec, &setup, mode, &coded)
}

/// Converts a float epsilon to the exact rational it denotes.
pub fn epsilon_rational(eps: f64) -> Result<Rational> {
    from_f64(eps)
}

/// Splits the attractor cloud by depth-`depth` cylinder boxes and checks
/// that the groups are separated by at least the smallest box gap minus
/// twice the cloud error.
pub fn disconnectedness_probe(
    spec: &IifsSpec,
    a: &AttractorApprox,
    depth: usize,
    cap: u128,
) -> Result<PropertyReport> {
    const NAME: &str = "disconnectedness";
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    if spec.len() == 1 {
        return Ok(PropertyReport::inconclusive(NAME, 0.0)
            .with_detail("groups", 1)
            .with_detail("reason", "a single map gives one cylinder per depth"));
    }
    let sno = check_strongly_non_overlapping(spec, depth, cap)?;
    if !sno.is_holds() {
        return Err(Error::HypothesisUnmet(format!(
            "strong non-overlap is {:?} up to depth {depth}",
            sno.verdict
        )));
    }
    let words = words_with_maps(spec, depth, cap)?;
    let boxes: Vec<_> = words
        .iter()
        .map(|(_, f)| f.image_box(spec.domain_box()))
        .collect();
    let mut min_margin = f64::INFINITY;
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            min_margin = min_margin.min(boxes[i].gap(&boxes[j]));
        }
    }
    let tol = a.total_error() + a.cloud.resolution() + rounding_slack(spec, depth);
    let points: Vec<&[f64]> = a.cloud.iter().collect();
    let assignment: Vec<Option<usize>> = points
        .par_iter()
        .map(|p| {
            boxes
                .iter()
                .enumerate()
                .map(|(k, b)| (b.distance_to_point(p), k))
                .filter(|(g, _)| *g <= tol)
                .min_by(|x, y| x.0.total_cmp(&y.0))
                .map(|(_, k)| k)
        })
        .collect();
    if let Some(k) = assignment.iter().position(Option::is_none) {
        return Ok(PropertyReport::inconclusive(NAME, 0.0).with_detail(
            "reason",
            format!(
                "cloud point {:?} lies in no depth-{depth} cylinder box",
                a.cloud.point(k)
            ),
        ));
    }
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); boxes.len()];
    for (p, k) in a.cloud.iter().zip(&assignment) {
        groups[k.expect("assigned")].extend_from_slice(p);
    }
    let dim = a.cloud.dim();
    let occupied: Vec<(usize, PointCloud)> = groups
        .into_iter()
        .enumerate()
        .filter(|(_, g)| !g.is_empty())
        .map(|(k, g)| (k, PointCloud::from_parts(dim, g, a.cloud.resolution())))
        .collect();
    let mut min_gap = f64::INFINITY;
    let mut closest = (0, 0);
    for x in 0..occupied.len() {
        for y in x + 1..occupied.len() {
            let g = min_set_dist(&occupied[x].1, &occupied[y].1)?;
            if g < min_gap {
                min_gap = g;
                closest = (occupied[x].0, occupied[y].0);
            }
        }
    }
    let expected = boxes.len();
    let threshold = min_margin - 2.0 * (a.cloud.resolution() + a.total_error());
    let base = |r: PropertyReport| {
        r.with_detail("groups", occupied.len())
            .with_detail("expected_groups", expected)
            .with_detail("min_cylinder_margin", min_margin)
            .with_detail(
                "min_group_gap",
                if min_gap.is_finite() {
                    json!(min_gap)
                } else {
                    json!(null)
                },
            )
            .with_detail("depth", depth)
    };
    if occupied.len() > 1 && min_gap < threshold {
        return Ok(base(PropertyReport::fails(
            NAME,
            0.0,
            Witness::WordPair {
                first: words[closest.0].0.to_string(),
                second: words[closest.1].0.to_string(),
                point: None,
            },
        )));
    }
    if occupied.len() < expected {
        return Ok(base(PropertyReport::inconclusive(NAME, 0.0).with_detail(
            "reason",
            "cloud too coarse to populate every cylinder",
        )));
    }
    Ok(base(PropertyReport::holds(NAME, min_gap)))
}
