//! Points and finite point clouds in R^d with the Euclidean metric, set
//! diameters, the directed and symmetric Hausdorff-Pompeiu distances and
//! greedy ε-net pruning.
//!
//! A [`PointCloud`] is kept in canonical form: points sorted
//! lexicographically, with duplicates (closer than `resolution / 2`)
//! collapsed. Every operation here is a pure function, so clouds can be
//! shared freely between threads.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use kiddo::{ImmutableKdTree, SquaredEuclidean};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Above this many point pairs the nearest-neighbour queries go through a
/// k-d tree instead of a linear scan.
const TREE_PAIR_THRESHOLD: usize = 1 << 16;
/// Largest dimension the ε-net grid handles.
const GRID_MAX_DIM: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidArgument(
                "point dimension must be at least 1".into(),
            ));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        Point(vec![x])
    }
}

/// Euclidean distance between two coordinate slices of equal length.
///
/// In one dimension this is `|a - b|` computed directly; every distance in
/// the crate goes through this function so that the grid index and the
/// linear scan produce bit-identical results.
#[inline]
pub(crate) fn raw_dist(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        return (a[0] - b[0]).abs();
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn point_dist(p: &Point, q: &Point) -> Result<f64> {
    check_dim(p.dim(), q.dim())?;
    Ok(raw_dist(p.coords(), q.coords()))
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// A nonempty finite set of points of one dimension, standing in for a
/// compact set up to `resolution` (0 means the cloud is the set itself).
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    resolution: f64,
}

impl PointCloud {
    pub fn new(points: Vec<Point>, resolution: f64) -> Result<Self> {
        let dim = points.first().ok_or(Error::EmptyCloud)?.dim();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            check_dim(dim, p.dim())?;
            coords.extend_from_slice(p.coords());
        }
        Self::from_flat(dim, coords, resolution)
    }

    /// Builds a cloud from row-major coordinates (`dim` values per point).
    pub fn from_flat(dim: usize, coords: Vec<f64>, resolution: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "point dimension must be at least 1".into(),
            ));
        }
        if coords.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        if !(resolution >= 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "resolution {resolution} must be finite and >= 0"
            )));
        }
        Ok(Self::canonical(dim, coords, resolution, true))
    }

    /// Canonical form without the `resolution / 2` collapse: only exact
    /// duplicates are merged. Used for images and unions whose resolution
    /// is bookkept by the caller.
    pub(crate) fn from_parts(dim: usize, coords: Vec<f64>, resolution: f64) -> Self {
        debug_assert!(!coords.is_empty() && coords.len().is_multiple_of(dim));
        Self::canonical(dim, coords, resolution, false)
    }

    pub fn singleton(p: Point) -> Self {
        Self {
            dim: p.dim(),
            coords: normalize_zeros(p.into_coords()),
            resolution: 0.0,
        }
    }

    /// Sorts lexicographically and collapses points within `resolution / 2`.
    fn canonical(dim: usize, coords: Vec<f64>, resolution: f64, collapse: bool) -> Self {
        let coords = normalize_zeros(coords);
        let mut order: Vec<usize> = (0..coords.len() / dim).collect();
        order.par_sort_by(|&i, &j| {
            lex_cmp(
                &coords[i * dim..(i + 1) * dim],
                &coords[j * dim..(j + 1) * dim],
            )
        });
        let mut sorted = Vec::with_capacity(coords.len());
        for i in order {
            let p = &coords[i * dim..(i + 1) * dim];
            let n = sorted.len();
            if n >= dim && sorted[n - dim..] == *p {
                continue;
            }
            sorted.extend_from_slice(p);
        }
        let sorted = if collapse && resolution > 0.0 {
            greedy_net(dim, &sorted, resolution / 2.0)
        } else {
            sorted
        };
        Self {
            dim,
            coords: sorted,
            resolution,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_points(&self) -> Vec<Point> {
        self.iter().map(|c| Point(c.to_vec())).collect()
    }

    /// True if `p` is (bitwise, up to signed zero) one of the cloud's points.
    pub fn contains(&self, p: &[f64]) -> bool {
        let dim = self.dim;
        let target = normalize_zeros(p.to_vec());
        let n = self.len();
        let (mut lo, mut hi) = (0, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match lex_cmp(&self.coords[mid * dim..(mid + 1) * dim], &target) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return true,
            }
        }
        false
    }

    /// Union of several clouds of one dimension; `resolution` is the
    /// declared resolution of the result.
    pub fn union<'a>(
        clouds: impl IntoIterator<Item = &'a PointCloud>,
        resolution: f64,
    ) -> Result<Self> {
        let mut dim = None;
        let mut coords = Vec::new();
        for c in clouds {
            match dim {
                None => dim = Some(c.dim),
                Some(d) => check_dim(d, c.dim)?,
            }
            coords.extend_from_slice(&c.coords);
        }
        Ok(Self::from_parts(
            dim.ok_or(Error::EmptyCloud)?,
            coords,
            resolution,
        ))
    }

    /// Axis-aligned bounding box as `(lo, hi)` per coordinate.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        let mut bb = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for p in self.iter() {
            for (b, &x) in bb.iter_mut().zip(p) {
                b.0 = b.0.min(x);
                b.1 = b.1.max(x);
            }
        }
        bb
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# dim={} resolution={}\n", self.dim, self.resolution);
        for p in self.iter() {
            let row: Vec<String> = p.iter().map(|x| format!("{x}")).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    /// Parses the CSV point format: one point per row, comma-separated
    /// decimal fields, optional `# dim=<d> resolution=<ε>` header.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut dim: Option<usize> = None;
        let mut resolution = 0.0;
        let mut coords = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                for field in header.split_whitespace() {
                    if let Some(v) = field.strip_prefix("dim=") {
                        dim = Some(v.parse().map_err(|_| csv_err(lineno, "bad dim"))?);
                    } else if let Some(v) = field.strip_prefix("resolution=") {
                        resolution = v.parse().map_err(|_| csv_err(lineno, "bad resolution"))?;
                    }
                }
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| csv_err(lineno, "bad decimal field"))?;
            match dim {
                None => dim = Some(row.len()),
                Some(d) if d != row.len() => {
                    return Err(csv_err(
                        lineno,
                        &format!("expected {d} fields, found {}", row.len()),
                    ))
                }
                _ => {}
            }
            coords.extend(row);
        }
        Self::from_flat(dim.ok_or(Error::EmptyCloud)?, coords, resolution)
    }
}

fn csv_err(lineno: usize, msg: &str) -> Error {
    Error::InvalidArgument(format!("csv line {}: {msg}", lineno + 1))
}

fn normalize_zeros(mut v: Vec<f64>) -> Vec<f64> {
    for x in &mut v {
        *x += 0.0;
    }
    v
}

/// Greedy ε-net over points already in lexicographic order: a point is kept
/// unless a previously kept point lies within distance `eps` of it.
fn greedy_net(dim: usize, sorted: &[f64], eps: f64) -> Vec<f64> {
    let mut kept: Vec<f64> = Vec::new();
    if dim <= GRID_MAX_DIM {
        let mut cells: HashMap<[i64; GRID_MAX_DIM], Vec<usize>> = HashMap::new();
        for p in sorted.chunks_exact(dim) {
            let key = cell_key(p, eps);
            let mut covered = false;
            'search: for nb in neighbour_keys(&key, dim, 1) {
                if let Some(idx) = cells.get(&nb) {
                    for &k in idx {
                        if raw_dist(&kept[k * dim..(k + 1) * dim], p) <= eps {
                            covered = true;
                            break 'search;
                        }
                    }
                }
            }
            if !covered {
                cells.entry(key).or_default().push(kept.len() / dim);
                kept.extend_from_slice(p);
            }
        }
    } else {
        for p in sorted.chunks_exact(dim) {
            if !kept.chunks_exact(dim).any(|q| raw_dist(q, p) <= eps) {
                kept.extend_from_slice(p);
            }
        }
    }
    kept
}

fn cell_key(p: &[f64], cell: f64) -> [i64; GRID_MAX_DIM] {
    let mut key = [0i64; GRID_MAX_DIM];
    for (k, &x) in key.iter_mut().zip(p) {
        *k = (x / cell).floor() as i64;
    }
    key
}

/// All keys within Chebyshev distance `r` of `key` in the first `dim` axes.
fn neighbour_keys(key: &[i64; GRID_MAX_DIM], dim: usize, r: i64) -> Vec<[i64; GRID_MAX_DIM]> {
    let mut out = vec![*key];
    for axis in 0..dim {
        let mut next = Vec::with_capacity(out.len() * (2 * r as usize + 1));
        for k in &out {
            for off in -r..=r {
                let mut nk = *k;
                nk[axis] = nk[axis].saturating_add(off);
                next.push(nk);
            }
        }
        out = next;
    }
    out
}

/// Distance from every point of `a` to its nearest neighbour in `b`.
fn nearest_distances(a: &PointCloud, b: &PointCloud) -> Vec<f64> {
    let small = a.len().saturating_mul(b.len()) <= TREE_PAIR_THRESHOLD;
    match b.dim {
        2 if !small => tree_nearest::<2>(a, b),
        3 if !small => tree_nearest::<3>(a, b),
        _ => a
            .flat()
            .par_chunks_exact(a.dim)
            .map(|q| scan_nearest(q, b))
            .collect(),
    }
}

fn scan_nearest(q: &[f64], b: &PointCloud) -> f64 {
    if b.dim == 1 {
        // 1-D clouds are sorted
        let flat = b.flat();
        let k = flat.partition_point(|&x| x < q[0]);
        let left = k.checked_sub(1).map(|i| (q[0] - flat[i]).abs());
        let right = flat.get(k).map(|&x| (x - q[0]).abs());
        return left.into_iter().chain(right).fold(f64::INFINITY, f64::min);
    }
    b.iter()
        .map(|p| raw_dist(q, p))
        .fold(f64::INFINITY, f64::min)
}

fn tree_nearest<const K: usize>(a: &PointCloud, b: &PointCloud) -> Vec<f64> {
    let array = |p: &[f64]| -> [f64; K] { p.try_into().expect("dimension checked") };
    let pts: Vec<[f64; K]> = b.iter().map(array).collect();
    let tree: ImmutableKdTree<f64, K> = ImmutableKdTree::new_from_slice(&pts);
    a.flat()
        .par_chunks_exact(K)
        .map(|q| {
            let hit = tree.nearest_one::<SquaredEuclidean>(&array(q));
            // recompute so the tree and the scan round identically
            raw_dist(q, b.point(hit.item as usize))
        })
        .collect()
}

/// `sup_{x in A} inf_{y in B} d(x, y)`.
pub fn directed_set_dist(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    check_dim(a.dim, b.dim)?;
    Ok(nearest_distances(a, b).into_iter().fold(0.0, f64::max))
}

/// `min_{x in A} inf_{y in B} d(x, y)`: the gap between two clouds.
pub fn min_set_dist(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    check_dim(a.dim, b.dim)?;
    Ok(nearest_distances(a, b)
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

/// Hausdorff-Pompeiu distance: the larger of the two directed distances.
pub fn hausdorff_dist(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    Ok(directed_set_dist(a, b)?.max(directed_set_dist(b, a)?))
}

/// Reference implementation of the directed distance by linear scan, used
/// to check the grid index.
pub fn directed_set_dist_scan(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    check_dim(a.dim, b.dim)?;
    Ok(a.iter()
        .map(|q| {
            b.iter()
                .map(|p| raw_dist(q, p))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max))
}

/// Largest pairwise distance; 0 for a singleton.
pub fn diameter(a: &PointCloud) -> f64 {
    if a.dim == 1 {
        // sorted, so the extremes are the first and last points
        return raw_dist(a.point(0), a.point(a.len() - 1));
    }
    if a.dim == 2 {
        // the farthest pair lies on the convex hull
        let hull = hull_2d(a);
        return hull
            .iter()
            .enumerate()
            .flat_map(|(i, p)| hull[i + 1..].iter().map(move |q| raw_dist(p, q)))
            .fold(0.0, f64::max);
    }
    let n = a.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let p = a.point(i);
            (i + 1..n)
                .map(|j| raw_dist(p, a.point(j)))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Monotone-chain hull of a lexicographically sorted 2-D cloud. Collinear
/// boundary points are kept.
fn hull_2d(a: &PointCloud) -> Vec<[f64; 2]> {
    let cross = |o: &[f64; 2], p: &[f64; 2], q: &[f64; 2]| {
        (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0])
    };
    let pts: Vec<[f64; 2]> = a.iter().map(|p| [p[0], p[1]]).collect();
    if pts.len() < 3 {
        return pts;
    }
    let chain = |iter: &mut dyn Iterator<Item = &[f64; 2]>| {
        let mut h: Vec<[f64; 2]> = Vec::new();
        for p in iter {
            while h.len() >= 2 && cross(&h[h.len() - 2], &h[h.len() - 1], p) < 0.0 {
                h.pop();
            }
            h.push(*p);
        }
        h
    };
    let mut lower = chain(&mut pts.iter());
    let upper = chain(&mut pts.iter().rev());
    lower.extend(upper);
    lower
}

/// Greedy ε-net of `a` in lexicographic order. The result is a subset of
/// `a` within Hausdorff distance `eps` of it, with resolution
/// `max(a.resolution, eps)`.
pub fn epsilon_prune(a: &PointCloud, eps: f64) -> Result<PointCloud> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon {eps} must be finite and >= 0"
        )));
    }
    let coords = if eps > 0.0 {
        greedy_net(a.dim, &a.coords, eps)
    } else {
        a.coords.clone()
    };
    Ok(PointCloud {
        dim: a.dim,
        coords,
        resolution: a.resolution.max(eps),
    })
}
