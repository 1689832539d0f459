//! Invariant checks run by `ouhaar verify`.
//!
//! Every check reduces to one number compared against a tolerance; a check
//! passes when `metric <= tolerance`. Counts of violations use tolerance 0.

use nalgebra::{DMatrix, SymmetricEigen};
use ouhaar::{
    basis_eval, bridge, conditional_density_check, cov_partial_sum, cov_telescoped,
    first_passage_bracket, haar_eval, head_sum, locate_index, path_seed, phi_eval, psi_eval,
    scan_grid, tail_identity, telescope_trace, BasisIndex, Conditioning, CovarianceKernel,
    DyadicRational, Ensemble, PathExpansion, ProcessParams, RecurrenceScale,
};

use crate::args::RunConfig;
use crate::commands::{empirical_covariance, process_params};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub check: &'static str,
    pub metric: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.metric <= self.tolerance
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    /// Swap in the wrong recurrence factor so the residual check must fail.
    pub corrupt_recurrence: bool,
}

type Outcome = Result<f64, CliError>;

/// A check's labels and tolerance next to the computation of its metric.
type Entry<'a> = (
    &'static str,
    &'static str,
    f64,
    Box<dyn Fn() -> Outcome + 'a>,
);

fn rel(a: f64, b: f64) -> f64 {
    let diff = (a - b).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / a.abs().max(b.abs())
    }
}

fn grid(level: u32) -> Vec<DyadicRational> {
    (0..=1u64 << level)
        .map(|k| DyadicRational::new(k, level).expect("grid point"))
        .collect()
}

/// Reproducible uniform dyadic of level at most `level`.
fn random_dyadic(seed: u64, i: u64, level: u32) -> DyadicRational {
    let numer = path_seed(seed, i) >> (64 - level);
    DyadicRational::new(numer, level).expect("numerator below 2^level")
}

fn termination(params: &ProcessParams, config: &RunConfig) -> Outcome {
    let mut nonzero = 0u32;
    for t in grid(config.level.min(8)) {
        let x = t.to_f64();
        for n in t.level() as i32 + 1..=16 {
            let k = locate_index(x, n)?.k();
            for k in k.saturating_sub(1)..=k {
                nonzero += (phi_eval(params, BasisIndex::new(n, k)?, x)? != 0.0) as u32;
            }
        }
    }
    Ok(nonzero as f64)
}

fn midpoint_bridge(params: &ProcessParams, config: &RunConfig) -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 1..=config.level.clamp(1, 12) as i32 {
        for k in 0..BasisIndex::count_at(n) {
            let idx = BasisIndex::new(n, k)?;
            let (left, right) = idx.support();
            let cond = Conditioning::midpoint(left, right, 0.0, 0.0)?;
            let phi = phi_eval(params, idx, 0.5 * (left + right))?;
            worst = worst.max(rel(phi, bridge(params, &cond).std));
        }
    }
    Ok(worst)
}

fn alpha_limit(config: &RunConfig) -> Outcome {
    let near = ProcessParams::ornstein_uhlenbeck(config.gamma, 1e-6)?;
    let mut worst: f64 = 0.0;
    for n in 0..=config.level.min(10) as i32 {
        for k in 0..BasisIndex::count_at(n) {
            let idx = BasisIndex::new(n, k)?;
            let (left, right) = idx.support();
            let (mut diff, mut peak): (f64, f64) = (0.0, 0.0);
            for j in 0..=16 {
                let t = left + (right - left) * j as f64 / 16.0;
                let psi = psi_eval(&near, idx, t)?;
                diff = diff.max((phi_eval(&near, idx, t)? - psi).abs());
                peak = peak.max(psi.abs());
            }
            worst = worst.max(diff / peak);
        }
    }
    Ok(worst)
}

fn index_support(config: &RunConfig) -> Outcome {
    let mut misses = 0u32;
    for i in 0..1000 {
        let t = (path_seed(config.seed, i) >> 11) as f64 * (-53f64).exp2();
        for n in 0..=20 {
            misses += !locate_index(t, n)?.contains(t) as u32;
        }
    }
    Ok(misses as f64)
}

fn orthonormality() -> Outcome {
    let depth = 5;
    let cells = 1u32 << (depth + 1);
    let indices: Vec<BasisIndex> = (0..=depth)
        .flat_map(|n| (0..BasisIndex::count_at(n)).map(move |k| BasisIndex::new(n, k)))
        .collect::<Result<_, _>>()?;
    // Haar functions up to `depth` are constant on cells of width 2^-(depth+1).
    let values: Vec<Vec<f64>> = indices
        .iter()
        .map(|&idx| {
            (0..cells)
                .map(|c| haar_eval(idx, (c as f64 + 0.5) / cells as f64))
                .collect::<Result<_, _>>()
        })
        .collect::<Result<_, _>>()?;
    let mut worst: f64 = 0.0;
    for (a, va) in values.iter().enumerate() {
        for (b, vb) in values.iter().enumerate() {
            let inner: f64 = va.iter().zip(vb).map(|(x, y)| x * y).sum::<f64>() / cells as f64;
            worst = worst.max((inner - (a == b) as u8 as f64).abs());
        }
    }
    Ok(worst)
}

fn tent_quadrature(config: &RunConfig) -> Outcome {
    let wiener = ProcessParams::wiener(config.gamma)?;
    let cells = 1u32 << 8;
    let width = 1.0 / cells as f64;
    let mut worst: f64 = 0.0;
    for n in 0..=6 {
        for k in 0..BasisIndex::count_at(n) {
            let idx = BasisIndex::new(n, k)?;
            let mut integral = 0.0;
            for c in 0..=cells {
                let t = c as f64 * width;
                worst =
                    worst.max((psi_eval(&wiener, idx, t)? - config.gamma.sqrt() * integral).abs());
                if c < cells {
                    integral += haar_eval(idx, t + 0.5 * width)? * width;
                }
            }
        }
    }
    Ok(worst)
}

fn bayes(params: &ProcessParams) -> Outcome {
    let mut worst: f64 = 0.0;
    for &(tx, ty, tz, x, z) in &[
        (0.0, 0.5, 1.0, 0.0, 0.3),
        (0.125, 0.2, 0.75, -0.4, 1.1),
        (0.5, 0.5625, 0.625, 2.0, -1.0),
    ] {
        let cond = Conditioning::new(tx, ty, tz, x, z)?;
        let stats = bridge(params, &cond);
        for j in -3..=3 {
            let y = stats.mean + j as f64 * stats.std;
            worst = worst.max(rel(
                stats.density(y),
                conditional_density_check(params, &cond, y)?,
            ));
        }
    }
    Ok(worst)
}

fn against_exact(
    params: &ProcessParams,
    approx: impl Fn(f64, f64) -> Result<f64, ouhaar::Error>,
) -> Outcome {
    let kernel = CovarianceKernel::new(*params);
    let points = grid(4);
    let mut worst: f64 = 0.0;
    for t in &points {
        for s in &points {
            let (x, y) = (t.to_f64(), s.to_f64());
            worst = worst.max(rel(approx(x, y)?, kernel.eval(x, y)));
        }
    }
    Ok(worst)
}

fn recurrence(params: &ProcessParams, config: &RunConfig, options: VerifyOptions) -> Outcome {
    let scale = if options.corrupt_recurrence {
        RecurrenceScale::PositivePower
    } else {
        RecurrenceScale::TailStep
    };
    let mut alphas = vec![0.1, 1.0, 10.0];
    if params.alpha() > 0.0 && !alphas.contains(&params.alpha()) {
        alphas.push(params.alpha());
    }
    let mut worst: f64 = 0.0;
    for alpha in alphas {
        let p = ProcessParams::ornstein_uhlenbeck(config.gamma, alpha)?;
        let mut i = 0;
        let mut pairs = 0;
        while pairs < 1000 {
            let a = random_dyadic(config.seed, 2 * i, 20);
            let b = random_dyadic(config.seed, 2 * i + 1, 20);
            i += 1;
            if a == b {
                continue;
            }
            let (t, s) = if a < b { (a, b) } else { (b, a) };
            let trace = telescope_trace(&p, t.to_f64(), s.to_f64())?;
            worst = worst.max(trace.max_recurrence_residual(scale));
            pairs += 1;
        }
    }
    Ok(worst)
}

fn tail() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let alpha = 10f64.powf(-2.0 + 4.0 * i as f64 / 19.0);
        let (lhs, rhs) = tail_identity(alpha)?;
        worst = worst.max(rel(lhs, rhs));
    }
    Ok(worst)
}

fn bi_infinite_head(params: &ProcessParams) -> Outcome {
    let wiener = ProcessParams::wiener(params.gamma())?;
    let mut worst: f64 = 0.0;
    for p in [wiener, *params] {
        let points = grid(3);
        for t in &points {
            for s in &points {
                let (x, y) = (t.to_f64(), s.to_f64());
                let direct =
                    basis_eval(&p, BasisIndex::ROOT, x)? * basis_eval(&p, BasisIndex::ROOT, y)?;
                worst = worst.max((head_sum(&p, x, y, 20)? - direct).abs());
            }
        }
    }
    Ok(worst)
}

fn positive_semidefinite(params: &ProcessParams) -> Outcome {
    let kernel = CovarianceKernel::new(*params);
    let points: Vec<f64> = grid(4).iter().skip(1).map(DyadicRational::to_f64).collect();
    let m = points.len();
    let matrix = DMatrix::from_fn(m, m, |i, j| kernel.eval(points[i], points[j]));
    let eigen = SymmetricEigen::new(matrix);
    let max = eigen.eigenvalues.max();
    let min = eigen.eigenvalues.min();
    Ok((-min / max).max(0.0))
}

fn grid_vs_naive(params: &ProcessParams, config: &RunConfig) -> Outcome {
    let level = config.level.min(10);
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        let e = PathExpansion::new(*params, path_seed(config.seed, i), level)?;
        let fast = e.grid_path(level)?;
        let slow = e.grid_path_naive(level)?;
        for (a, b) in fast.values().iter().zip(slow.values()) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

fn nested_grids(params: &ProcessParams, config: &RunConfig) -> Outcome {
    let level = config.level.clamp(1, 10);
    let mut mismatches = 0u32;
    for i in 0..5 {
        let e = PathExpansion::new(*params, path_seed(config.seed, i), level)?;
        mismatches += (e.grid_path(level)?.restrict(level - 1)? != e.grid_path(level - 1)?) as u32;
    }
    Ok(mismatches as f64)
}

fn monte_carlo(params: &ProcessParams, config: &RunConfig) -> Outcome {
    let points: Vec<DyadicRational> = grid(2).into_iter().skip(1).collect();
    let ensemble = Ensemble::new(*params, 2, config.n_paths.max(2), config.seed)?;
    let (empirical, se) = empirical_covariance(&ensemble, &points);
    let kernel = CovarianceKernel::new(*params);
    let g = points.len();
    let mut outside = 0u32;
    for (i, t) in points.iter().enumerate() {
        for (j, s) in points.iter().enumerate() {
            let exact = kernel.eval(t.to_f64(), s.to_f64());
            outside += ((empirical[i * g + j] - exact).abs() > 4.0 * se[i * g + j]) as u32;
        }
    }
    Ok(outside as f64 / (g * g) as f64)
}

fn fpt_scan(params: &ProcessParams, config: &RunConfig) -> Outcome {
    let level = config.level.min(10);
    let mut disagreements = 0u32;
    for i in 0..20 {
        let e = PathExpansion::new(*params, path_seed(config.seed, i), level)?;
        let result = first_passage_bracket(&e, 0.5, level, 0.0)?;
        disagreements += (result.segment() != scan_grid(&e.grid_path(level)?, 0.5)) as u32;
    }
    Ok(disagreements as f64)
}

/// Runs every check in a fixed order.
pub fn run_checks(config: &RunConfig, options: VerifyOptions) -> Result<Vec<Check>, CliError> {
    let params = process_params(config)?;
    let series_level = config.level.clamp(4, ouhaar::MAX_SERIES_LEVEL);
    let p = &params;
    let checks: Vec<Entry<'_>> = vec![
        (
            "basis",
            "finite_termination",
            0.0,
            Box::new(|| termination(p, config)),
        ),
        (
            "basis",
            "midpoint_bridge_std",
            1e-12,
            Box::new(|| midpoint_bridge(p, config)),
        ),
        (
            "basis",
            "small_alpha_limit",
            1e-5,
            Box::new(|| alpha_limit(config)),
        ),
        (
            "basis",
            "index_support",
            0.0,
            Box::new(|| index_support(config)),
        ),
        (
            "basis",
            "haar_orthonormality",
            1e-12,
            Box::new(orthonormality),
        ),
        (
            "basis",
            "tent_quadrature",
            1e-12,
            Box::new(|| tent_quadrature(config)),
        ),
        (
            "bridge",
            "markov_factorization",
            1e-10,
            Box::new(|| bayes(p)),
        ),
        (
            "covariance",
            "partial_sum_vs_exact",
            1e-10,
            Box::new(|| against_exact(p, |x, y| cov_partial_sum(p, x, y, series_level))),
        ),
        (
            "covariance",
            "telescoped_vs_exact",
            1e-10,
            Box::new(|| against_exact(p, |x, y| cov_telescoped(p, x, y))),
        ),
        (
            "covariance",
            "telescope_recurrence",
            1e-14,
            Box::new(|| recurrence(p, config, options)),
        ),
        ("covariance", "tail_identity", 1e-14, Box::new(tail)),
        (
            "covariance",
            "bi_infinite_head",
            1e-12,
            Box::new(|| bi_infinite_head(p)),
        ),
        (
            "covariance",
            "positive_semidefinite",
            1e-12,
            Box::new(|| positive_semidefinite(p)),
        ),
        (
            "sampler",
            "grid_vs_naive",
            1e-12,
            Box::new(|| grid_vs_naive(p, config)),
        ),
        (
            "sampler",
            "nested_grids",
            0.0,
            Box::new(|| nested_grids(p, config)),
        ),
        (
            "sampler",
            "monte_carlo_covariance",
            0.1,
            Box::new(|| monte_carlo(p, config)),
        ),
        (
            "fpt",
            "full_refinement_matches_scan",
            0.0,
            Box::new(|| fpt_scan(p, config)),
        ),
    ];
    checks
        .into_iter()
        .map(|(suite, check, tolerance, run)| {
            Ok(Check {
                suite,
                check,
                metric: run()?,
                tolerance,
            })
        })
        .collect()
}
