use rayon::prelude::*;

use ouhaar::{
    cov_partial_sum, cov_telescoped, disagrees_with_scan, first_passage_bracket, phi_eval,
    psi_eval, BasisIndex, CovarianceKernel, DyadicRational, Ensemble, GridPath, ProcessParams,
    MAX_SERIES_LEVEL,
};

use crate::args::{Format, RunConfig};
use crate::error::CliError;
use crate::output::{Cell, TableWriter};

/// Deepest level `basis` will dump.
pub const MAX_BASIS_DUMP_LEVEL: u32 = 12;
/// Finest grid `sample`, `cov` and `fpt` will tabulate.
pub const MAX_SAMPLE_LEVEL: u32 = 20;
/// Sample points per support in a basis dump.
const POINTS_PER_SUPPORT: u64 = 1 << 10;
/// Paths generated in parallel before their rows are written in order.
const CHUNK: usize = 1024;

pub fn process_params(config: &RunConfig) -> Result<ProcessParams, CliError> {
    Ok(ProcessParams::from_rates(config.gamma, config.alpha)?)
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn check_level(level: u32, max: u32, what: &str) -> Result<(), CliError> {
    if level > max {
        return usage(format!("--level {level} exceeds {max} for {what}"));
    }
    Ok(())
}

fn check_paths(config: &RunConfig) -> Result<(), CliError> {
    if config.n_paths == 0 {
        return usage("--paths must be at least 1");
    }
    Ok(())
}

fn table(config: &RunConfig, header: Vec<&'static str>) -> Result<TableWriter, CliError> {
    TableWriter::create(
        config.output.as_deref(),
        config.format.unwrap_or(Format::Csv),
        header,
    )
}

/// Paths `0..n` in order, generated `CHUNK` at a time in parallel.
fn for_each_chunk<T: Send>(
    n: u64,
    make: impl Fn(u64) -> T + Sync,
    mut emit: impl FnMut(u64, T) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let n = n as usize;
    for start in (0..n).step_by(CHUNK) {
        let end = (start + CHUNK).min(n);
        let items: Vec<T> = (start..end)
            .into_par_iter()
            .map(|i| make(i as u64))
            .collect();
        for (offset, item) in items.into_iter().enumerate() {
            emit((start + offset) as u64, item)?;
        }
    }
    Ok(())
}

pub fn basis(config: &RunConfig) -> Result<(), CliError> {
    check_level(config.level, MAX_BASIS_DUMP_LEVEL, "basis")?;
    let params = process_params(config)?;
    let mut out = table(config, vec!["n", "k", "t", "psi_value", "phi_value"])?;
    for n in 0..=config.level as i32 {
        for k in 0..BasisIndex::count_at(n) {
            let idx = BasisIndex::new(n, k)?;
            let points: Vec<DyadicRational> = match &config.grid {
                Some(grid) => {
                    let (left, right) = if n == 0 {
                        (DyadicRational::ZERO, DyadicRational::ONE)
                    } else {
                        let (left, _, right) = idx.dyadic_support()?;
                        (left, right)
                    };
                    grid.0
                        .iter()
                        .filter(|t| left <= **t && **t <= right)
                        .copied()
                        .collect()
                }
                None => {
                    let (level, base) = if n == 0 {
                        (10, 0)
                    } else {
                        (n as u32 + 9, k * POINTS_PER_SUPPORT)
                    };
                    (0..POINTS_PER_SUPPORT)
                        .map(|j| DyadicRational::new(base + j, level))
                        .collect::<Result<_, _>>()?
                }
            };
            for t in points {
                let x = t.to_f64();
                out.row(&[
                    Cell::Int(n as u64),
                    Cell::Int(k),
                    t.to_string().into(),
                    psi_eval(&params, idx, x)?.into(),
                    phi_eval(&params, idx, x)?.into(),
                ])?;
            }
        }
    }
    out.finish(None)
}

pub fn sample(config: &RunConfig) -> Result<(), CliError> {
    check_level(config.level, MAX_SAMPLE_LEVEL, "sample")?;
    check_paths(config)?;
    let ensemble = Ensemble::new(
        process_params(config)?,
        config.level,
        config.n_paths,
        config.seed,
    )?;
    let mut out = table(config, vec!["path_id", "t_numer", "t_level", "value"])?;
    let level = Cell::Int(config.level as u64);
    for_each_chunk(
        config.n_paths,
        |i| ensemble.path(i),
        |id, path: GridPath| {
            for (i, v) in path.values().iter().enumerate() {
                out.row(&[
                    Cell::Int(id),
                    Cell::Int(i as u64),
                    level.clone(),
                    Cell::Float(*v),
                ])?;
            }
            Ok(())
        },
    )?;
    out.finish(None)
}

/// Grid used by `cov` when `--grid` is absent.
pub fn default_cov_grid() -> Vec<DyadicRational> {
    (1..=4)
        .map(|k| DyadicRational::new(k, 2).expect("quarter points"))
        .collect()
}

/// Empirical second moments `E[X_t X_s]` of a zero-mean ensemble and their
/// standard errors, indexed `i * points.len() + j`.
pub fn empirical_covariance(
    ensemble: &Ensemble,
    points: &[DyadicRational],
) -> (Vec<f64>, Vec<f64>) {
    let level = ensemble.level();
    let index: Vec<usize> = points
        .iter()
        .map(|t| {
            t.numer_at(level)
                .expect("grid points lie on the sampled level") as usize
        })
        .collect();
    let g = points.len();
    let n = ensemble.len();
    // Chunked sums combined in a fixed order keep the result independent
    // of the thread count.
    let chunks = n.div_ceil(CHUNK as u64) as usize;
    let partial: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut sum = vec![0.0; g * g];
            let mut sq = vec![0.0; g * g];
            let start = (c * CHUNK) as u64;
            let end = (start + CHUNK as u64).min(n);
            for id in start..end {
                let path = ensemble.path(id);
                let v = path.values();
                for (i, &a) in index.iter().enumerate() {
                    for (j, &b) in index.iter().enumerate() {
                        let p = v[a] * v[b];
                        sum[i * g + j] += p;
                        sq[i * g + j] += p * p;
                    }
                }
            }
            (sum, sq)
        })
        .collect();
    let mut sum = vec![0.0; g * g];
    let mut sq = vec![0.0; g * g];
    for (s, q) in &partial {
        for c in 0..g * g {
            sum[c] += s[c];
            sq[c] += q[c];
        }
    }
    let nf = n as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let se = sq
        .iter()
        .zip(&mean)
        .map(|(q, m)| {
            if n < 2 {
                f64::NAN
            } else {
                ((q - nf * m * m).max(0.0) / (nf - 1.0) / nf).sqrt()
            }
        })
        .collect();
    (mean, se)
}

pub fn cov(config: &RunConfig) -> Result<(), CliError> {
    check_level(config.level, MAX_SERIES_LEVEL, "the covariance series")?;
    check_paths(config)?;
    let params = process_params(config)?;
    let points = config
        .grid
        .as_ref()
        .map(|g| g.0.clone())
        .unwrap_or_else(default_cov_grid);
    let sample_level = points.iter().map(DyadicRational::level).max().unwrap_or(0);
    if sample_level > MAX_SAMPLE_LEVEL {
        return usage(format!(
            "grid points finer than level {MAX_SAMPLE_LEVEL} cannot be sampled"
        ));
    }
    let kernel = CovarianceKernel::new(params);
    let ensemble = Ensemble::new(params, sample_level, config.n_paths, config.seed)?;
    let (empirical, se) = empirical_covariance(&ensemble, &points);
    let mut out = table(
        config,
        vec![
            "t",
            "s",
            "exact",
            "partial_sum_N",
            "telescoped",
            "empirical",
            "empirical_se",
        ],
    )?;
    let g = points.len();
    for (i, t) in points.iter().enumerate() {
        for (j, s) in points.iter().enumerate() {
            let (x, y) = (t.to_f64(), s.to_f64());
            out.row(&[
                t.to_string().into(),
                s.to_string().into(),
                kernel.eval(x, y).into(),
                cov_partial_sum(&params, x, y, config.level)?.into(),
                cov_telescoped(&params, x, y)?.into(),
                empirical[i * g + j].into(),
                se[i * g + j].into(),
            ])?;
        }
    }
    out.finish(None)
}

pub fn fpt(config: &RunConfig, threshold: f64, p_cross_floor: f64) -> Result<(), CliError> {
    check_level(config.level, MAX_SAMPLE_LEVEL, "fpt")?;
    check_paths(config)?;
    if !(threshold > 0.0 && threshold.is_finite()) {
        return usage(format!(
            "--threshold must be positive and finite, got {threshold}"
        ));
    }
    if !(0.0..=1.0).contains(&p_cross_floor) {
        return usage(format!(
            "--p-cross-floor must lie in [0, 1], got {p_cross_floor}"
        ));
    }
    let ensemble = Ensemble::new(
        process_params(config)?,
        config.level,
        config.n_paths,
        config.seed,
    )?;
    let level = config.level;
    let mut out = table(
        config,
        vec![
            "path_id",
            "crossed",
            "lo_numer",
            "lo_level",
            "hi_numer",
            "hi_level",
            "segments_examined",
        ],
    )?;
    let (mut crossed, mut disagreements) = (0u64, 0u64);
    for_each_chunk(
        config.n_paths,
        |i| {
            let expansion = ensemble.expansion(i);
            let result = first_passage_bracket(&expansion, threshold, level, p_cross_floor)?;
            let disagrees = disagrees_with_scan(&expansion, &result, threshold, level)?;
            Ok::<_, ouhaar::Error>((result, disagrees))
        },
        |id, outcome| {
            let (result, disagrees) = outcome?;
            crossed += result.crossed() as u64;
            disagreements += disagrees as u64;
            let bracket = match result.segment() {
                Some(k) => [k, level as u64, k + 1, level as u64].map(Cell::Int),
                None => [Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty],
            };
            let [a, b, c, d] = bracket;
            out.row(&[
                Cell::Int(id),
                result.crossed().into(),
                a,
                b,
                c,
                d,
                Cell::Int(result.segments_examined),
            ])
        },
    )?;
    let rate = disagreements as f64 / config.n_paths as f64;
    let summary = format!(
        "paths={} crossed={crossed} disagreements={disagreements} disagreement_rate={rate:?}",
        config.n_paths
    );
    out.finish(Some(&summary))
}
