//! Offline and online steps driven by a [`RunConfig`].

use std::path::Path;
use std::time::Instant;

use bsbem_core::pod::SnapshotMatrix;
use bsbem_core::problems::{AckleyModel, BurgersModel, GridSpec};
use bsbem_core::rom::{offline_from_snapshots, Surrogate};
use bsbem_core::sampling::{collocation_plan, SampleSet, UncertainInput};
use bsbem_core::{Error, Matrix};
use serde::Serialize;

use crate::config::{ProblemKind, RunConfig};
use crate::container::SurrogateFile;
use crate::error::{CliError, CliResult};
use crate::output::{fmt_f64, Table};
use crate::parallel::{self, SharedModel};
use crate::snapshots::{read_snapshots, SnapshotSet};

/// Relative tolerance (against the support width) for matching external
/// parameter values to the collocation plan.
pub const PLAN_MATCH_TOLERANCE: f64 = 1e-9;

/// A built-in model with its grid.
pub struct Problem {
    pub model: Box<SharedModel>,
    pub grid: GridSpec,
}

pub fn problem(config: &RunConfig) -> CliResult<Problem> {
    let g = &config.grid;
    match config.problem {
        ProblemKind::Ackley => {
            let m = AckleyModel::new(g.ackley_resolution)?;
            let grid = m.grid().clone();
            Ok(Problem { model: Box::new(m), grid })
        }
        ProblemKind::Burgers => {
            let m = BurgersModel::new(g.burgers_nodes, g.burgers_times, g.burgers_dt)?;
            let grid = m.grid().clone();
            Ok(Problem { model: Box::new(m), grid })
        }
        ProblemKind::External => Err(CliError::config("problem \"external\" has no built-in model")),
    }
}

/// `N_e x d` node coordinates of a grid.
pub fn grid_coordinates(grid: &GridSpec) -> Matrix {
    let rows: Vec<Vec<f64>> = (0..grid.n_nodes()).map(|i| grid.coordinates(i)).collect();
    Matrix::from_fn(rows.len(), grid.axes.len(), |i, d| rows[i][d])
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Matrix {
    let d = rows.first().map_or(0, Vec::len);
    Matrix::from_fn(rows.len(), d, |i, k| rows[i][k])
}

/// Physical collocation plan of the configured surrogate.
pub fn collocation_points(config: &RunConfig) -> CliResult<(UncertainInput, SampleSet)> {
    config.validate()?;
    let inputs = config.uncertain_input()?;
    let rom = config.rom_config(inputs.dim())?;
    let plan = collocation_plan(&rom.space()?, rom.oversample)?.mapped(&inputs)?;
    Ok((inputs, plan))
}

/// Runs the built-in problem at the collocation plan.
pub fn export(config: &RunConfig) -> CliResult<SnapshotSet> {
    let (inputs, plan) = collocation_points(config)?;
    let p = problem(config)?;
    let snapshots = parallel::snapshots(&*p.model, &plan)?;
    Ok(SnapshotSet {
        snapshots,
        times: p.model.times().to_vec(),
        parameter_names: inputs.params().iter().map(|q| q.name.clone()).collect(),
        parameters: (0..plan.len())
            .map(|s| plan.physical_point(s).expect("mapped plan").to_vec())
            .collect(),
        coordinates: Some((0..p.grid.n_nodes()).map(|i| p.grid.coordinates(i)).collect()),
    })
}

/// Checks that an external set was sampled at `plan`.
pub fn check_against_plan(set: &SnapshotSet, inputs: &UncertainInput, plan: &SampleSet, origin: &Path) -> CliResult<()> {
    let bad = |m: String| Err(CliError::format(origin, m));
    if set.parameter_names.len() != inputs.dim() {
        return bad(format!(
            "{} parameters in the snapshot set, {} in the configuration",
            set.parameter_names.len(),
            inputs.dim()
        ));
    }
    if set.parameters.len() != plan.len() {
        return bad(format!(
            "{} samples in the snapshot set, the collocation plan has {}",
            set.parameters.len(),
            plan.len()
        ));
    }
    let widths: Vec<f64> = inputs
        .params()
        .iter()
        .map(|p| {
            let (a, b) = p.marginal.support();
            b - a
        })
        .collect();
    for (s, row) in set.parameters.iter().enumerate() {
        let want = plan.physical_point(s).expect("mapped plan");
        for d in 0..row.len() {
            if !((row[d] - want[d]).abs() <= PLAN_MATCH_TOLERANCE * widths[d]) {
                return bad(format!(
                    "sample {s}, parameter {}: value {} does not match collocation point {}",
                    set.parameter_names[d], row[d], want[d]
                ));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildReport {
    pub build_hash: String,
    pub source: String,
    pub n_samples: usize,
    pub n_nodes: usize,
    pub n_times: usize,
    pub n_modes: usize,
    pub temporal_ranks: Vec<usize>,
    pub total_temporal_modes: usize,
    pub energy_ratio: f64,
    pub rank_deficient: bool,
    pub snapshot_seconds: f64,
    pub offline_seconds: f64,
    pub total_seconds: f64,
}

pub struct Built {
    pub file: SurrogateFile,
    pub report: BuildReport,
}

/// Offline stage for the configured problem or external snapshot set.
pub fn build(config: &RunConfig) -> CliResult<Built> {
    let start = Instant::now();
    let (inputs, plan) = collocation_points(config)?;
    let (snapshots, times, coordinates, source): (SnapshotMatrix, Vec<f64>, Option<Matrix>, String) =
        match config.problem {
            ProblemKind::External => {
                let path = config.snapshots.as_deref().expect("validated");
                let set = read_snapshots(path)?;
                check_against_plan(&set, &inputs, &plan, path)?;
                let coords = set.coordinates.as_deref().map(rows_to_matrix);
                (set.snapshots, set.times, coords, format!("external:{}", path.display()))
            }
            kind => {
                let p = problem(config)?;
                let s = parallel::snapshots(&*p.model, &plan)?;
                let name = format!("{kind:?}").to_lowercase();
                (s, p.model.times().to_vec(), Some(grid_coordinates(&p.grid)), name)
            }
        };
    let snapshot_seconds = start.elapsed().as_secs_f64();
    let rom = config.rom_config(inputs.dim())?;
    let t = Instant::now();
    let surrogate = offline_from_snapshots(snapshots, times, &inputs, &rom)?;
    let offline_seconds = t.elapsed().as_secs_f64();
    let report = BuildReport {
        build_hash: config.build_hash()?,
        source,
        n_samples: surrogate.n_samples,
        n_nodes: surrogate.n_nodes(),
        n_times: surrogate.n_times(),
        n_modes: surrogate.n_modes(),
        temporal_ranks: surrogate.temporal.ranks(),
        total_temporal_modes: surrogate.temporal.total_rank(),
        energy_ratio: surrogate.basis.energy_ratio,
        rank_deficient: surrogate.rank_deficient,
        snapshot_seconds,
        offline_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(Built {
        file: SurrogateFile {
            surrogate,
            build_hash: report.build_hash.clone(),
            coordinates,
        },
        report,
    })
}

fn field_header(coordinates: Option<&Matrix>, value_cols: &[&'static str]) -> Vec<&'static str> {
    const AXES: [&str; 3] = ["x", "y", "z"];
    let d = coordinates.map_or(0, |c| c.ncols());
    let mut h = vec!["node_id"];
    h.extend(AXES.iter().take(d.min(3)));
    h.push("t");
    h.extend_from_slice(value_cols);
    h
}

fn node_cells(coordinates: Option<&Matrix>, i: usize) -> Vec<String> {
    let mut cells = vec![i.to_string()];
    if let Some(c) = coordinates {
        cells.extend((0..c.ncols().min(3)).map(|d| fmt_f64(c[(i, d)])));
    }
    cells
}

/// Mean and std over the space-time grid, time-major row order.
pub fn stats_table(file: &SurrogateFile, surrogate_sha256: &str, quadrature: Option<&[usize]>) -> CliResult<Table> {
    let s = &file.surrogate;
    let stats = s.statistics(quadrature)?;
    let coords = file.coordinates.as_ref();
    let mut t = Table::new(&field_header(coords, &["mean", "std"]));
    header_comments(&mut t, &file.build_hash, s.config.seed);
    t.comment("surrogate_sha256", surrogate_sha256);
    for (j, &time) in s.times.iter().enumerate() {
        for i in 0..s.n_nodes() {
            let mut cells = node_cells(coords, i);
            cells.push(fmt_f64(time));
            cells.push(fmt_f64(stats.mean[(i, j)]));
            cells.push(fmt_f64(stats.std[(i, j)]));
            t.row(cells);
        }
    }
    Ok(t)
}

/// Comment lines common to every CSV.
pub fn header_comments(t: &mut Table, config_hash: &str, seed: u64) {
    t.comment("generator", format!("bsbem {}", env!("CARGO_PKG_VERSION")))
        .comment("config_hash", config_hash)
        .comment("seed", seed);
}

/// Whether evaluation points are physical values or unit coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    Physical,
    Unit,
}

/// Surrogate fields at `points`, one block of `N_e * N_t` rows per point.
pub fn eval_table(file: &SurrogateFile, points: &[Vec<f64>], kind: PointKind) -> CliResult<Table> {
    let s: &Surrogate = &file.surrogate;
    let coords = file.coordinates.as_ref();
    let mut t = Table::new(&[&["point"][..], &field_header(coords, &["value"])].concat());
    header_comments(&mut t, &file.build_hash, s.config.seed);
    for (k, p) in points.iter().enumerate() {
        let xi = match kind {
            PointKind::Physical => s.inputs.to_unit(p),
            PointKind::Unit => check_unit(p, s.inputs.dim()),
        }
        .map_err(|e| CliError::config(format!("point {k}: {e}")))?;
        let field = s.evaluate(&xi)?;
        for (j, &time) in s.times.iter().enumerate() {
            for i in 0..s.n_nodes() {
                let mut cells = vec![k.to_string()];
                cells.extend(node_cells(coords, i));
                cells.push(fmt_f64(time));
                cells.push(fmt_f64(field[(i, j)]));
                t.row(cells);
            }
        }
    }
    Ok(t)
}

fn check_unit(xi: &[f64], dim: usize) -> Result<Vec<f64>, Error> {
    if xi.len() != dim {
        return Err(Error::DimensionMismatch {
            context: "evaluation point",
            expected: dim,
            actual: xi.len(),
        });
    }
    if let Some(v) = xi.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::OutOfDomain(format!("unit interval (value {v})")));
    }
    Ok(xi.to_vec())
}
