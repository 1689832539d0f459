//! Top-down construction of sample paths.
//!
//! A [`PathExpansion`] fixes the coefficients `ξ_{n,k}` of one sample path
//! (from a seed, or explicitly). The path can then be evaluated anywhere as
//! a truncated basis sum. On a dyadic grid it is cheaper to refine top-down,
//! placing each midpoint from the bridge law of its segment.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::basis::{basis_eval, locate_index, locate_index_dyadic, BasisIndex};
use crate::bridge::{bridge, Conditioning};
use crate::dyadic::{DyadicRational, MAX_DYADIC_LEVEL};
use crate::error::{domain, Error, Result};
use crate::params::ProcessParams;
use crate::rng::{path_seed, CoefficientGenerator};

/// Truncation level used when none is given.
pub const DEFAULT_MAX_LEVEL: u32 = 24;
/// Deepest truncation an expansion accepts; midpoints of its finest
/// segments are still exact dyadics.
pub const MAX_EXPANSION_LEVEL: u32 = MAX_DYADIC_LEVEL - 1;
/// Finest grid that [`PathExpansion::grid_path`] will tabulate.
pub const MAX_GRID_LEVEL: u32 = 30;

#[derive(Debug, Clone)]
enum Source {
    Seeded(Box<CoefficientGenerator>),
    /// Listed coefficients; every other one is zero.
    Explicit(HashMap<BasisIndex, f64>),
}

impl Source {
    fn coefficient(&self, idx: BasisIndex) -> f64 {
        match self {
            Source::Seeded(g) => g.normal(idx.n(), idx.k()),
            Source::Explicit(map) => map.get(&idx).copied().unwrap_or(0.0),
        }
    }

    fn fill_level(&self, n: i32, out: &mut [f64]) {
        match self {
            Source::Seeded(g) => g.fill_level(n, out),
            Source::Explicit(map) => {
                for (k, slot) in out.iter_mut().enumerate() {
                    *slot = BasisIndex::new(n, k as u64)
                        .ok()
                        .and_then(|idx| map.get(&idx).copied())
                        .unwrap_or(0.0);
                }
            }
        }
    }
}

/// Midpoint law shared by every segment of one level: the bridge mean is
/// `weight * (x + z)` and the innovation scale is `std`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelBridge {
    pub weight: f64,
    pub std: f64,
}

impl LevelBridge {
    /// Midpoint law of a segment of `D_level` (length `2^-level`).
    pub fn for_level(params: &ProcessParams, level: u32) -> Self {
        let width = (-(level as f64)).exp2();
        let cond = Conditioning::midpoint(0.0, width, 1.0, 0.0)
            .expect("a dyadic segment has a strict interior midpoint");
        let stats = bridge(params, &cond);
        Self {
            weight: stats.mean,
            std: stats.std,
        }
    }

    pub fn mean(&self, x: f64, z: f64) -> f64 {
        self.weight * (x + z)
    }

    pub fn midpoint(&self, x: f64, z: f64, xi: f64) -> f64 {
        self.mean(x, z) + self.std * xi
    }
}

/// Values of a path on `D_level`, stored as `values[i] = X(i 2^-level)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    level: u32,
    values: Vec<f64>,
}

impl GridPath {
    pub fn new(level: u32, values: Vec<f64>) -> Result<Self> {
        if level > MAX_GRID_LEVEL {
            return domain(format!("grid level {level} exceeds {MAX_GRID_LEVEL}"));
        }
        if values.len() != (1usize << level) + 1 {
            return domain(format!(
                "a level-{level} grid holds {} values, got {}",
                (1usize << level) + 1,
                values.len()
            ));
        }
        Ok(Self { level, values })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Grid point `i 2^-level`.
    pub fn point(&self, i: usize) -> DyadicRational {
        DyadicRational::new(i as u64, self.level).expect("grid index within the grid")
    }

    pub fn value_at(&self, t: DyadicRational) -> Option<f64> {
        t.numer_at(self.level).map(|i| self.values[i as usize])
    }

    /// The same path on the coarser grid `D_level`.
    pub fn restrict(&self, level: u32) -> Result<Self> {
        if level > self.level {
            return domain(format!(
                "cannot restrict a level-{} grid to level {level}",
                self.level
            ));
        }
        let stride = 1usize << (self.level - level);
        Ok(Self {
            level,
            values: self.values.iter().step_by(stride).copied().collect(),
        })
    }
}

fn top_down_grid(params: &ProcessParams, source: &Source, level: u32) -> GridPath {
    let size = 1usize << level;
    let mut values = vec![0.0; size + 1];
    values[size] = basis_eval(params, BasisIndex::ROOT, 1.0).expect("root element at t = 1")
        * source.coefficient(BasisIndex::ROOT);
    let mut xi = vec![0.0; size / 2];
    for m in 0..level {
        let law = LevelBridge::for_level(params, m);
        let segments = 1usize << m;
        let stride = size >> m;
        source.fill_level(m as i32 + 1, &mut xi[..segments]);
        for (k, &noise) in xi[..segments].iter().enumerate() {
            let left = k * stride;
            let right = left + stride;
            values[left + stride / 2] = law.midpoint(values[left], values[right], noise);
        }
    }
    GridPath { level, values }
}

/// Coefficients of one sample path together with the values fixed so far
/// by top-down refinement.
///
/// Coefficients are a pure function of `(seed, n, k)`. The `materialized`
/// map only records which of them have been drawn, so refinement order
/// never changes the path.
#[derive(Debug, Clone)]
pub struct PathExpansion {
    params: ProcessParams,
    seed: u64,
    max_level: u32,
    source: Source,
    materialized: HashMap<BasisIndex, f64>,
    known: BTreeMap<DyadicRational, f64>,
}

impl PathExpansion {
    /// Expansion whose coefficients are drawn from `seed`.
    pub fn new(params: ProcessParams, seed: u64, max_level: u32) -> Result<Self> {
        Self::build(
            params,
            seed,
            max_level,
            Source::Seeded(Box::new(CoefficientGenerator::new(seed))),
        )
    }

    /// Expansion with the listed coefficients and zeros elsewhere.
    pub fn with_coefficients(
        params: ProcessParams,
        max_level: u32,
        coefficients: impl IntoIterator<Item = (BasisIndex, f64)>,
    ) -> Result<Self> {
        let map: HashMap<_, _> = coefficients.into_iter().collect();
        if let Some(idx) = map.keys().find(|idx| idx.n() < 0) {
            return domain(format!("coefficient index {idx:?} has a negative level"));
        }
        Self::build(params, 0, max_level, Source::Explicit(map))
    }

    fn build(params: ProcessParams, seed: u64, max_level: u32, source: Source) -> Result<Self> {
        if max_level > MAX_EXPANSION_LEVEL {
            return domain(format!(
                "max_level {max_level} exceeds {MAX_EXPANSION_LEVEL}"
            ));
        }
        let mut expansion = Self {
            params,
            seed,
            max_level,
            source,
            materialized: HashMap::new(),
            known: BTreeMap::new(),
        };
        let xi = expansion.materialize(BasisIndex::ROOT);
        let end = basis_eval(&params, BasisIndex::ROOT, 1.0)? * xi;
        expansion.known.insert(DyadicRational::ZERO, 0.0);
        expansion.known.insert(DyadicRational::ONE, end);
        Ok(expansion)
    }

    pub fn params(&self) -> &ProcessParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    /// `ξ_{n,k}`; repeated calls return the same value.
    pub fn coefficient(&self, idx: BasisIndex) -> f64 {
        match self.materialized.get(&idx) {
            Some(&xi) => xi,
            None => self.source.coefficient(idx),
        }
    }

    /// Draws `ξ_{n,k}` and records it.
    pub fn materialize(&mut self, idx: BasisIndex) -> f64 {
        let xi = self.coefficient(idx);
        self.materialized.insert(idx, xi);
        xi
    }

    pub fn materialized(&self) -> &HashMap<BasisIndex, f64> {
        &self.materialized
    }

    /// Path values fixed by refinement so far, keyed by dyadic time.
    pub fn known_values(&self) -> &BTreeMap<DyadicRational, f64> {
        &self.known
    }

    /// Partial sum `Σ_{n≤max_level} f_{n,k_n}(t) ξ_{n,k_n}`.
    ///
    /// Doubles are dyadic; when `t` is one of level `L <= max_level` the sum
    /// stops at `n = L`, where it is exact. Otherwise it is truncated at
    /// `max_level`, an error of order `2^(-max_level/2)`.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return domain(format!("t = {t} lies outside [0, 1]"));
        }
        let last = match DyadicRational::from_f64(t) {
            Some(d) => d.level().min(self.max_level),
            None => self.max_level,
        };
        let mut total = 0.0;
        for n in 0..=last as i32 {
            let idx = locate_index(t, n)?;
            let f = basis_eval(&self.params, idx, t)?;
            if f != 0.0 {
                total += f * self.coefficient(idx);
            }
        }
        Ok(total)
    }

    /// [`evaluate`](Self::evaluate) at an exact dyadic point. The sum stops
    /// at the point's level when that is at most `max_level`, and the value
    /// is then exact.
    pub fn evaluate_dyadic(&self, t: DyadicRational) -> Result<f64> {
        let x = t.to_f64();
        let last = t.level().min(self.max_level);
        let mut total = 0.0;
        for n in 0..=last as i32 {
            let idx = locate_index_dyadic(t, n)?;
            let f = basis_eval(&self.params, idx, x)?;
            if f != 0.0 {
                total += f * self.coefficient(idx);
            }
        }
        Ok(total)
    }

    fn check_grid_level(&self, level: u32) -> Result<()> {
        if level > self.max_level {
            return domain(format!(
                "grid level {level} exceeds max_level {}",
                self.max_level
            ));
        }
        if level > MAX_GRID_LEVEL {
            return domain(format!("grid level {level} exceeds {MAX_GRID_LEVEL}"));
        }
        Ok(())
    }

    /// The path on `D_level` by recursive midpoint refinement, `O(2^level)`.
    pub fn grid_path(&self, level: u32) -> Result<GridPath> {
        self.check_grid_level(level)?;
        Ok(top_down_grid(&self.params, &self.source, level))
    }

    /// The path on `D_level` by summing the basis at every grid point,
    /// `O(level 2^level)`.
    pub fn grid_path_naive(&self, level: u32) -> Result<GridPath> {
        self.check_grid_level(level)?;
        let values = (0..=(1u64 << level))
            .map(|i| self.evaluate_dyadic(DyadicRational::new(i, level)?))
            .collect::<Result<Vec<_>>>()?;
        GridPath::new(level, values)
    }

    /// Fixes the value at the midpoint of segment `k` of `D_level` from its
    /// bridge law and `ξ_{level+1,k}`. Both endpoints must already be known.
    pub fn refine_segment(&mut self, level: u32, k: u64) -> Result<f64> {
        if level >= self.max_level {
            return domain(format!(
                "refining level {level} needs max_level > {level}, have {}",
                self.max_level
            ));
        }
        if k >= 1u64 << level {
            return domain(format!("segment {k} does not exist at level {level}"));
        }
        let left = DyadicRational::new(k, level)?;
        let right = DyadicRational::new(k + 1, level)?;
        let mid = DyadicRational::new(2 * k + 1, level + 1)?;
        if let Some(&value) = self.known.get(&mid) {
            return Ok(value);
        }
        let endpoint = |t: DyadicRational| {
            self.known.get(&t).copied().ok_or_else(|| {
                Error::Precondition(format!(
                    "value at {t} is not known yet; refine its parent first"
                ))
            })
        };
        let (x, z) = (endpoint(left)?, endpoint(right)?);
        let xi = self.materialize(BasisIndex::new(level as i32 + 1, k)?);
        let value = LevelBridge::for_level(&self.params, level).midpoint(x, z, xi);
        self.known.insert(mid, value);
        Ok(value)
    }

    /// Refines every segment of every level below `level`.
    pub fn refine_to(&mut self, level: u32) -> Result<()> {
        for m in 0..level {
            for k in 0..1u64 << m {
                self.refine_segment(m, k)?;
            }
        }
        Ok(())
    }
}

/// Conditional mean of the process at `t` given its values on the grid:
/// linear interpolation for the Wiener process, `sinh`-weighted
/// interpolation for the Ornstein-Uhlenbeck one.
pub fn conditional_mean_path(params: &ProcessParams, grid: &GridPath, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return domain(format!("t = {t} lies outside [0, 1]"));
    }
    let scale = (grid.level as f64).exp2();
    let last = (1usize << grid.level) - 1;
    let k = ((t * scale).floor() as usize).min(last);
    let (tx, tz) = (k as f64 / scale, (k + 1) as f64 / scale);
    let (x, z) = (grid.values[k], grid.values[k + 1]);
    if t == tx {
        return Ok(x);
    }
    if t == tz {
        return Ok(z);
    }
    Ok(bridge(params, &Conditioning::new(tx, t, tz, x, z)?).mean)
}

/// A reproducible batch of independent paths on `D_level`.
///
/// Path `i` uses the seed `path_seed(base_seed, i)`, so the batch is a pure
/// function of its inputs however it is traversed.
#[derive(Debug, Clone, Copy)]
pub struct Ensemble {
    params: ProcessParams,
    level: u32,
    n_paths: u64,
    base_seed: u64,
}

impl Ensemble {
    pub fn new(params: ProcessParams, level: u32, n_paths: u64, base_seed: u64) -> Result<Self> {
        if n_paths == 0 {
            return domain("an ensemble needs at least one path");
        }
        if level > MAX_GRID_LEVEL {
            return domain(format!("grid level {level} exceeds {MAX_GRID_LEVEL}"));
        }
        Ok(Self {
            params,
            level,
            n_paths,
            base_seed,
        })
    }

    pub fn len(&self) -> u64 {
        self.n_paths
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn seed_of(&self, index: u64) -> u64 {
        path_seed(self.base_seed, index)
    }

    /// Expansion behind path `index`.
    pub fn expansion(&self, index: u64) -> PathExpansion {
        PathExpansion::new(
            self.params,
            self.seed_of(index),
            self.level.max(DEFAULT_MAX_LEVEL),
        )
        .expect("ensemble parameters were validated")
    }

    pub fn path(&self, index: u64) -> GridPath {
        let source = Source::Seeded(Box::new(CoefficientGenerator::new(self.seed_of(index))));
        top_down_grid(&self.params, &source, self.level)
    }

    pub fn iter(&self) -> impl Iterator<Item = GridPath> + '_ {
        (0..self.n_paths).map(move |i| self.path(i))
    }

    pub fn par_iter(&self) -> impl IndexedParallelIterator<Item = GridPath> + '_ {
        (0..self.n_paths as usize)
            .into_par_iter()
            .map(move |i| self.path(i as u64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::phi_eval;
    use crate::bridge::wiener_bridge;

    fn ou(gamma: f64, alpha: f64) -> ProcessParams {
        ProcessParams::ornstein_uhlenbeck(gamma, alpha).unwrap()
    }

    fn w(gamma: f64) -> ProcessParams {
        ProcessParams::wiener(gamma).unwrap()
    }

    fn d(k: u64, n: u32) -> DyadicRational {
        DyadicRational::new(k, n).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let e = PathExpansion::new(ou(1.0, 1.0), 11, 30).unwrap();
        assert_eq!(e.evaluate(0.0).unwrap(), 0.0);

        let shallow = PathExpansion::new(ou(1.0, 1.0), 11, 2).unwrap();
        for k in 0..=4 {
            let t = d(k, 2);
            assert_eq!(
                e.evaluate_dyadic(t).unwrap(),
                shallow.evaluate_dyadic(t).unwrap()
            );
            assert_eq!(
                e.evaluate(t.to_f64()).unwrap(),
                shallow.evaluate(t.to_f64()).unwrap()
            );
        }

        let p = ou(1.0, 2.0);
        let single = PathExpansion::with_coefficients(p, 20, [(BasisIndex::ROOT, 1.0)]).unwrap();
        for &t in &[0.1, 0.3337, 0.5, 1.0] {
            assert_eq!(
                single.evaluate(t).unwrap(),
                phi_eval(&p, BasisIndex::ROOT, t).unwrap()
            );
        }
    }

    #[test]
    fn grid_examples() {
        let p = ou(1.3, 0.8);
        let e = PathExpansion::new(p, 5, 12).unwrap();
        let g0 = e.grid_path(0).unwrap();
        let end = phi_eval(&p, BasisIndex::ROOT, 1.0).unwrap() * e.coefficient(BasisIndex::ROOT);
        assert_eq!(g0.values(), &[0.0, end]);

        let fine = e.grid_path(9).unwrap();
        let coarse = e.grid_path(8).unwrap();
        assert_eq!(fine.restrict(8).unwrap(), coarse);
        assert!(e.grid_path(13).is_err());

        let naive = e.grid_path_naive(9).unwrap();
        for (a, b) in fine.values().iter().zip(naive.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn refine_examples() {
        let p = w(1.0);
        let mut e =
            PathExpansion::with_coefficients(p, 10, [(BasisIndex::new(1, 0).unwrap(), 1.0)])
                .unwrap();
        assert_eq!(e.known_values()[&DyadicRational::ONE], 0.0);
        let mid = e.refine_segment(0, 0).unwrap();
        let cond = Conditioning::new(0.0, 0.5, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(mid, wiener_bridge(&p, &cond).std);
        assert_eq!(mid, 0.5);

        let p = ou(1.0, 1.5);
        let mut e = PathExpansion::with_coefficients(p, 10, [(BasisIndex::ROOT, 0.7)]).unwrap();
        let end = e.known_values()[&DyadicRational::ONE];
        let cond = Conditioning::new(0.0, 0.5, 1.0, 0.0, end).unwrap();
        assert_eq!(e.refine_segment(0, 0).unwrap(), bridge(&p, &cond).mean);

        let mut e = PathExpansion::new(ou(1.0, 1.0), 3, 10).unwrap();
        assert!(matches!(
            e.refine_segment(2, 1),
            Err(Error::Precondition(_))
        ));
        e.refine_segment(0, 0).unwrap();
        e.refine_segment(1, 1).unwrap();
        let v = e.refine_segment(2, 3).unwrap();
        assert!((v - e.evaluate_dyadic(d(7, 3)).unwrap()).abs() < 1e-12);
        assert!(e.refine_segment(10, 0).is_err());
        assert!(e.refine_segment(3, 8).is_err());
    }

    #[test]
    fn refinement_order_does_not_matter() {
        let p = ou(0.9, 2.0);
        let mut forward = PathExpansion::new(p, 99, 8).unwrap();
        forward.refine_to(6).unwrap();

        let mut shuffled = PathExpansion::new(p, 99, 8).unwrap();
        // right-first depth-first traversal
        fn visit(e: &mut PathExpansion, level: u32, k: u64, stop: u32) {
            if level == stop {
                return;
            }
            e.refine_segment(level, k).unwrap();
            visit(e, level + 1, 2 * k + 1, stop);
            visit(e, level + 1, 2 * k, stop);
        }
        visit(&mut shuffled, 0, 0, 6);
        assert_eq!(forward.materialized(), shuffled.materialized());
        assert_eq!(forward.known_values(), shuffled.known_values());

        let grid = forward.grid_path(6).unwrap();
        for (t, v) in forward.known_values() {
            assert_eq!(grid.value_at(*t), Some(*v));
        }
    }

    #[test]
    fn conditional_mean_examples() {
        let p = w(1.0);
        let grid = GridPath::new(0, vec![0.0, 1.0]).unwrap();
        assert_eq!(conditional_mean_path(&p, &grid, 0.25).unwrap(), 0.25);
        assert_eq!(conditional_mean_path(&p, &grid, 1.0).unwrap(), 1.0);

        let p = ou(1.0, 1.0);
        let m = conditional_mean_path(&p, &grid, 0.5).unwrap();
        assert!((m - 0.5f64.sinh() / 1f64.sinh()).abs() < 1e-15);
        assert!((m - 0.443_409).abs() < 1e-6);

        let e = PathExpansion::new(p, 4, 10).unwrap();
        let grid = e.grid_path(4).unwrap();
        for i in 0..=16 {
            let t = i as f64 / 16.0;
            assert_eq!(
                conditional_mean_path(&p, &grid, t).unwrap(),
                grid.values()[i]
            );
        }
    }

    #[test]
    fn conditional_mean_is_the_partial_sum() {
        // the level-N partial sum off the grid is the catenary through the knots
        let p = ou(1.0, 3.0);
        let e = PathExpansion::new(p, 21, 5).unwrap();
        let grid = e.grid_path(5).unwrap();
        for &t in &[0.013, 0.31, 0.777, 0.999] {
            let interp = conditional_mean_path(&p, &grid, t).unwrap();
            assert!((interp - e.evaluate(t).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn ensemble_is_deterministic() {
        let ens = Ensemble::new(ou(1.0, 1.0), 5, 40, 42).unwrap();
        let a: Vec<_> = ens.iter().collect();
        let b: Vec<_> = ens.par_iter().collect();
        assert_eq!(a, b);
        assert_eq!(a[3], ens.expansion(3).grid_path(5).unwrap());
        assert_ne!(a[0], a[1]);
        assert!(Ensemble::new(ou(1.0, 1.0), 5, 0, 42).is_err());
    }

    #[test]
    fn ensemble_mean_vanishes() {
        let p = ou(1.0, 1.0);
        let n = 20_000u64;
        let ens = Ensemble::new(p, 3, n, 42).unwrap();
        let mut sum = [0.0; 9];
        for path in ens.iter() {
            for (s, v) in sum.iter_mut().zip(path.values()) {
                *s += v;
            }
        }
        for (i, s) in sum.iter().enumerate() {
            let t = i as f64 / 8.0;
            let sd = crate::covariance::ou_cov_exact(&p, t, t).sqrt();
            assert!(
                (s / n as f64).abs() <= 4.0 * sd / (n as f64).sqrt() + 1e-15,
                "i = {i}"
            );
        }
    }
}
