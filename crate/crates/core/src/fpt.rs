//! Heuristic bracketing of a first passage time.
//!
//! This is a demonstrator of compact support and finite termination, not a
//! first-passage algorithm with guarantees. A path is refined top-down along
//! a left-to-right depth-first walk of the dyadic tree. A segment is split
//! when its right endpoint has reached the threshold, or when the midpoint
//! bridge law puts more than `p_cross_floor` mass above the threshold. That
//! midpoint tail is only a proxy for the probability that the bridge crosses
//! inside the segment, so with `p_cross_floor > 0` excursions between grid
//! points can be missed.

use crate::basis::BasisIndex;
use crate::dyadic::DyadicRational;
use crate::error::{domain, Result};
use crate::sampler::{GridPath, LevelBridge, PathExpansion};

/// Outcome of [`first_passage_bracket`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FptResult {
    /// `(k 2^-L, (k+1) 2^-L)` with `L = level_reached`, when a crossing was found.
    pub bracket: Option<(DyadicRational, DyadicRational)>,
    /// Deepest level the walk reached.
    pub level_reached: u32,
    /// Number of tree nodes visited, at most `2^(max_level+1) - 1`.
    pub segments_examined: u64,
}

impl FptResult {
    pub fn crossed(&self) -> bool {
        self.bracket.is_some()
    }

    /// Index `k` of the bracketing segment at `level_reached`.
    pub fn segment(&self) -> Option<u64> {
        self.bracket.map(|(lo, _)| {
            lo.numer_at(self.level_reached)
                .expect("bracket lies on its level")
        })
    }
}

struct Walk<'a> {
    expansion: &'a PathExpansion,
    laws: Vec<LevelBridge>,
    threshold: f64,
    max_level: u32,
    p_cross_floor: f64,
    examined: u64,
    deepest: u32,
}

impl Walk<'_> {
    fn should_refine(&self, level: u32, x: f64, z: f64) -> bool {
        if z >= self.threshold || self.p_cross_floor == 0.0 {
            return true;
        }
        let law = self.laws[level as usize];
        let tail = crate::bridge::BridgeStats {
            mean: law.mean(x, z),
            std: law.std,
        }
        .upper_tail(self.threshold);
        tail > self.p_cross_floor
    }

    /// Invariant on entry: `x` is below the threshold.
    fn visit(&mut self, level: u32, k: u64, x: f64, z: f64) -> Option<u64> {
        self.examined += 1;
        self.deepest = self.deepest.max(level);
        if level == self.max_level {
            return (z >= self.threshold).then_some(k);
        }
        if !self.should_refine(level, x, z) {
            return None;
        }
        let xi = self
            .expansion
            .coefficient(BasisIndex::new(level as i32 + 1, k).expect("index within range"));
        let m = self.laws[level as usize].midpoint(x, z, xi);
        // A left child whose right end reached the threshold always brackets,
        // so the right child is entered only when `m` is below it.
        self.visit(level + 1, 2 * k, x, m)
            .or_else(|| self.visit(level + 1, 2 * k + 1, m, z))
    }
}

/// Leftmost segment of `D_max_level` whose right endpoint is the first
/// examined grid value at or above `threshold`.
///
/// With `p_cross_floor = 0` every segment is refined and the result equals
/// [`scan_grid`] on the full level-`max_level` grid. With `p_cross_floor = 1`
/// only endpoints already at the threshold trigger refinement.
pub fn first_passage_bracket(
    expansion: &PathExpansion,
    threshold: f64,
    max_level: u32,
    p_cross_floor: f64,
) -> Result<FptResult> {
    if threshold.is_nan() || threshold <= 0.0 {
        return domain(format!("threshold must be positive, got {threshold}"));
    }
    if !(0.0..=1.0).contains(&p_cross_floor) {
        return domain(format!(
            "p_cross_floor must lie in [0, 1], got {p_cross_floor}"
        ));
    }
    if max_level > expansion.max_level() {
        return domain(format!(
            "max_level {max_level} exceeds the expansion's {}",
            expansion.max_level()
        ));
    }
    if max_level >= 63 {
        return domain(format!("max_level {max_level} is too deep to index"));
    }
    let params = *expansion.params();
    let laws = (0..max_level)
        .map(|m| LevelBridge::for_level(&params, m))
        .collect();
    let end = expansion.known_values()[&DyadicRational::ONE];
    let mut walk = Walk {
        expansion,
        laws,
        threshold,
        max_level,
        p_cross_floor,
        examined: 0,
        deepest: 0,
    };
    let hit = walk.visit(0, 0, 0.0, end);
    let bracket = hit
        .map(|k| {
            Ok((
                DyadicRational::new(k, max_level)?,
                DyadicRational::new(k + 1, max_level)?,
            ))
        })
        .transpose()?;
    Ok(FptResult {
        bracket,
        level_reached: if hit.is_some() {
            max_level
        } else {
            walk.deepest
        },
        segments_examined: walk.examined,
    })
}

/// Segment index `k` such that `values[k+1]` is the first grid value at or
/// above `threshold`.
pub fn scan_grid(grid: &GridPath, threshold: f64) -> Option<u64> {
    grid.values()
        .iter()
        .position(|&v| v >= threshold)
        .map(|i| i.saturating_sub(1) as u64)
}

/// Whether the bracket and the exhaustive scan of `D_max_level` disagree.
pub fn disagrees_with_scan(
    expansion: &PathExpansion,
    result: &FptResult,
    threshold: f64,
    max_level: u32,
) -> Result<bool> {
    let grid = expansion.grid_path(max_level)?;
    Ok(result.segment() != scan_grid(&grid, threshold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::phi_eval;
    use crate::params::ProcessParams;

    fn ou() -> ProcessParams {
        ProcessParams::ornstein_uhlenbeck(1.0, 1.0).unwrap()
    }

    #[test]
    fn preconditions() {
        let e = PathExpansion::new(ou(), 1, 10).unwrap();
        assert!(first_passage_bracket(&e, 0.0, 8, 0.0).is_err());
        assert!(first_passage_bracket(&e, f64::NAN, 8, 0.0).is_err());
        assert!(first_passage_bracket(&e, 1.0, 11, 0.0).is_err());
        assert!(first_passage_bracket(&e, 1.0, 8, 1.5).is_err());
        assert!(first_passage_bracket(&e, 1.0, 8, 0.5).is_ok());
    }

    #[test]
    fn negative_path_never_crosses() {
        let p = ou();
        let coeffs = (0..=6).flat_map(|n| {
            (0..BasisIndex::count_at(n)).map(move |k| (BasisIndex::new(n, k).unwrap(), -5.0))
        });
        let e = PathExpansion::with_coefficients(p, 6, coeffs).unwrap();
        let grid = e.grid_path(6).unwrap();
        assert!(grid.values()[1..].iter().all(|&v| v < 0.0));
        let r = first_passage_bracket(&e, 0.1, 6, 1.0).unwrap();
        assert!(!r.crossed());
        assert_eq!(r.segments_examined, 1);
        assert_eq!(r.level_reached, 0);
    }

    #[test]
    fn deterministic_root_is_bracketed() {
        let p = ou();
        let xi = 4.0;
        let threshold = 1.0;
        let e = PathExpansion::with_coefficients(p, 20, [(BasisIndex::ROOT, xi)]).unwrap();
        let f = |t: f64| phi_eval(&p, BasisIndex::ROOT, t).unwrap() * xi - threshold;
        let (mut a, mut b) = (0.0, 1.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if f(m) < 0.0 {
                a = m
            } else {
                b = m
            }
        }
        let root = 0.5 * (a + b);
        for level in [4, 10, 16] {
            for floor in [0.0, 0.01, 1.0] {
                let r = first_passage_bracket(&e, threshold, level, floor).unwrap();
                let (lo, hi) = r.bracket.unwrap();
                assert!(lo.to_f64() < root && root <= hi.to_f64(), "level {level}");
                assert_eq!(hi.to_f64() - lo.to_f64(), (-(level as f64)).exp2());
                assert!(e.evaluate_dyadic(lo).unwrap() < threshold);
                assert!(e.evaluate_dyadic(hi).unwrap() >= threshold);
            }
        }
    }

    #[test]
    fn full_refinement_matches_scan() {
        let p = ou();
        for seed in 0..50 {
            let e = PathExpansion::new(p, seed, 10).unwrap();
            for threshold in [0.3, 0.8] {
                let r = first_passage_bracket(&e, threshold, 10, 0.0).unwrap();
                assert!(!disagrees_with_scan(&e, &r, threshold, 10).unwrap());
                assert!(r.segments_examined < 1 << 11);
                if let Some((lo, hi)) = r.bracket {
                    assert!(e.evaluate_dyadic(lo).unwrap() < threshold);
                    assert!(e.evaluate_dyadic(hi).unwrap() >= threshold);
                }
            }
        }
    }

    #[test]
    fn finer_levels_never_cross_later() {
        let p = ou();
        for seed in 0..40 {
            let e = PathExpansion::new(p, seed, 12).unwrap();
            let mut previous: Option<f64> = None;
            for level in 2..=12 {
                let r = first_passage_bracket(&e, 0.5, level, 0.0).unwrap();
                let hi = r.bracket.map(|(_, hi)| hi.to_f64());
                if let (Some(coarse), Some(fine)) = (previous, hi) {
                    assert!(fine <= coarse);
                }
                if previous.is_some() {
                    assert!(hi.is_some(), "a coarse crossing persists on finer grids");
                }
                previous = hi.or(previous);
            }
        }
    }

    #[test]
    fn huge_threshold_never_crosses() {
        let e = PathExpansion::new(ou(), 8, 10).unwrap();
        let r = first_passage_bracket(&e, 1e6, 10, 0.0).unwrap();
        assert!(!r.crossed());
        assert_eq!(r.segments_examined, (1 << 11) - 1);
        let r = first_passage_bracket(&e, 1e6, 10, 1e-3).unwrap();
        assert_eq!(r.segments_examined, 1);
    }
}
