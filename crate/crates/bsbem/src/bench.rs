//! Benchmarks against sampling references.
//!
//! One reference run is shared by every surrogate of a sweep. Outputs:
//! `bench_errors.csv` (one row per method and sweep value),
//! `error_series.csv` (errors per time step), `profiles.csv` (mean and std
//! along a spatial cross-section), `kde.csv` (densities at probe points)
//! and `bench_timings.toml` (wall times, kept out of the CSVs so that
//! reruns are byte-identical).

use std::path::Path;
use std::time::Instant;

use bsbem_core::baselines::{reference_design, PceExpansion, PceSettings, ReferenceStatistics};
use bsbem_core::metrics::{gaussian_kde, kde_grid, silverman_bandwidth, ErrorReport};
use bsbem_core::problems::GridSpec;
use bsbem_core::rom::{StatisticsField, Surrogate};
use bsbem_core::sampling::SampleSet;
use serde::Serialize;

use crate::config::{PerDim, ProblemKind, RunConfig, Sweep};
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, fmt_f64, write_toml, Table};
use crate::parallel;
use crate::pipeline::{build, header_comments, problem};

/// Result of one surrogate in the sweep.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub method: String,
    pub value: f64,
    pub n_samples: usize,
    pub n_modes: usize,
    pub temporal_modes: usize,
    pub rank_deficient: bool,
    pub errors: ErrorReport,
    pub offline_seconds: f64,
    pub online_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingRow {
    pub method: String,
    pub value: f64,
    pub offline_seconds: f64,
    pub online_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub config_hash: String,
    pub reference_samples: usize,
    pub reference_seconds: f64,
    pub runs: Vec<TimingRow>,
}

/// Probe location in space and time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub node: usize,
    pub time: usize,
}

pub struct BenchResult {
    pub config_hash: String,
    pub reference: ReferenceStatistics,
    pub entries: Vec<SweepEntry>,
    pub timings: Timings,
    pub errors: Table,
    pub series: Table,
    pub profiles: Table,
    pub kde: Table,
}

impl BenchResult {
    pub fn entry(&self, method: &str, value: f64) -> Option<&SweepEntry> {
        self.entries.iter().find(|e| e.method == method && e.value == value)
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        ensure_dir(dir)?;
        self.errors.write(&dir.join("bench_errors.csv"))?;
        self.series.write(&dir.join("error_series.csv"))?;
        self.profiles.write(&dir.join("profiles.csv"))?;
        self.kde.write(&dir.join("kde.csv"))?;
        write_toml(&dir.join("bench_timings.toml"), &self.timings)
    }
}

pub const ROM_METHOD: &str = "pod-bsbem";
pub const PCE_METHOD: &str = "full-pce";

fn nearest(values: &[f64], target: f64) -> usize {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
        .map_or(0, |(i, _)| i)
}

/// Node index from per-axis indices, first axis fastest.
fn node_index(grid: &GridSpec, idx: &[usize]) -> usize {
    let mut node = 0;
    for d in (0..grid.axes.len()).rev() {
        node = node * grid.axes[d].2 + idx[d];
    }
    node
}

fn probe_at(grid: &GridSpec, point: &[f64], t: f64) -> Probe {
    let idx: Vec<usize> = point.iter().enumerate().map(|(d, &x)| nearest(&grid.axis(d), x)).collect();
    Probe {
        node: node_index(grid, &idx),
        time: nearest(&grid.times, t),
    }
}

/// Density probes: two space-time points per built-in problem.
pub fn default_probes(kind: ProblemKind, grid: &GridSpec) -> Vec<Probe> {
    match kind {
        ProblemKind::Burgers => vec![probe_at(grid, &[0.57], 0.3), probe_at(grid, &[0.7], 1.0)],
        ProblemKind::Ackley => vec![probe_at(grid, &[0.0, 0.0], 0.0), probe_at(grid, &[1.0, 1.0], 0.0)],
        ProblemKind::External => Vec::new(),
    }
}

/// Cross-section nodes and time indices for `profiles.csv`: the whole
/// line at t near 0.3 and 1.0 in 1-D, the row nearest y = 0 in 2-D.
fn profile_layout(grid: &GridSpec) -> (Vec<usize>, Vec<usize>) {
    let nx = grid.axes[0].2;
    let nodes = if grid.axes.len() == 1 {
        (0..nx).collect()
    } else {
        let mut idx = vec![0; grid.axes.len()];
        for (d, slot) in idx.iter_mut().enumerate().skip(1) {
            *slot = nearest(&grid.axis(d), 0.0);
        }
        (0..nx)
            .map(|i| {
                idx[0] = i;
                node_index(grid, &idx)
            })
            .collect()
    };
    let mut times: Vec<usize> = if grid.times.len() == 1 {
        vec![0]
    } else {
        vec![nearest(&grid.times, 0.3), nearest(&grid.times, 1.0)]
    };
    times.dedup();
    (nodes, times)
}

fn sweep_config(base: &RunConfig, value: f64) -> RunConfig {
    let mut c = base.clone();
    match base.bench.sweep {
        Sweep::Eps => {
            c.rom.eps_t = value;
            c.rom.eps_s = value;
        }
        Sweep::Elements => c.rom.elements = PerDim::All(value as usize),
        Sweep::None => {}
    }
    c
}

fn sweep_name(s: Sweep) -> &'static str {
    match s {
        Sweep::Eps => "eps",
        Sweep::Elements => "elements",
        Sweep::None => "none",
    }
}

/// Runs the configured benchmark in the current thread pool.
pub fn run_bench(config: &RunConfig) -> CliResult<BenchResult> {
    config.validate()?;
    let values = config.sweep_values()?;
    if config.problem == ProblemKind::External {
        return Err(CliError::config("bench needs a built-in problem (ackley or burgers)"));
    }
    let inputs = config.uncertain_input()?;
    let p = problem(config)?;
    let b = &config.bench;
    let probes = default_probes(config.problem, &p.grid);
    let n_e = p.model.n_nodes();
    let flat: Vec<usize> = probes.iter().map(|q| q.time * n_e + q.node).collect();
    let entries_at: Vec<(usize, usize)> = probes.iter().map(|q| (q.node, q.time)).collect();

    let t = Instant::now();
    let design = reference_design(&inputs, b.reference_samples, b.reference_scheme.scheme(), config.seed)?;
    let (reference, reference_probes) = parallel::reference(&*p.model, &design, &flat)?;
    let reference_seconds = t.elapsed().as_secs_f64();

    let mut entries = Vec::new();
    let mut runs = Vec::new();
    let mut last_rom: Option<(Surrogate, StatisticsField)> = None;
    for &v in &values {
        let c = sweep_config(config, v);
        let built = build(&c)?;
        let s = built.file.surrogate;
        let t = Instant::now();
        let stats = s.statistics(None)?;
        let online = t.elapsed().as_secs_f64();
        let errors = ErrorReport::compare(ROM_METHOD, &stats, &reference.field, reference.samples, reference.seed)?;
        runs.push(TimingRow {
            method: ROM_METHOD.into(),
            value: v,
            offline_seconds: built.report.total_seconds,
            online_seconds: online,
            total_seconds: built.report.total_seconds + online,
        });
        entries.push(SweepEntry {
            method: ROM_METHOD.into(),
            value: v,
            n_samples: s.n_samples,
            n_modes: s.n_modes(),
            temporal_modes: s.temporal.total_rank(),
            rank_deficient: s.rank_deficient,
            errors,
            offline_seconds: built.report.total_seconds,
            online_seconds: online,
        });
        last_rom = Some((s, stats));
    }
    let (rom, rom_stats) = last_rom.expect("non-empty sweep");

    let mut pce: Option<(PceExpansion, StatisticsField)> = None;
    if b.pce {
        let settings = PceSettings {
            order: b.pce_order,
            oversampling: b.pce_oversampling,
            seed: config.seed.wrapping_add(1),
        };
        let t = Instant::now();
        let expansion = parallel::pce_fit(&*p.model, &inputs, &settings)?;
        let offline = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let stats = expansion.statistics();
        let online = t.elapsed().as_secs_f64();
        let errors = ErrorReport::compare(PCE_METHOD, &stats, &reference.field, reference.samples, reference.seed)?;
        let value = b.pce_order as f64;
        runs.push(TimingRow {
            method: PCE_METHOD.into(),
            value,
            offline_seconds: offline,
            online_seconds: online,
            total_seconds: offline + online,
        });
        entries.push(SweepEntry {
            method: PCE_METHOD.into(),
            value,
            n_samples: expansion.n_terms() * expansion.oversampling,
            n_modes: expansion.n_terms(),
            temporal_modes: 0,
            rank_deficient: false,
            errors,
            offline_seconds: offline,
            online_seconds: online,
        });
        pce = Some((expansion, stats));
    }

    let config_hash = config.config_hash();
    let common = |t: &mut Table| {
        header_comments(t, &config_hash, config.seed);
        t.comment("reference", format!("{} n={} seed={}", reference.scheme.as_str(), reference.samples, reference.seed));
    };

    let mut errors_table = Table::new(&[
        "method",
        "sweep",
        "value",
        "n_samples",
        "n_modes",
        "temporal_modes",
        "mean_error",
        "std_error",
        "rank_deficient",
    ]);
    common(&mut errors_table);
    let mut series = Table::new(&["method", "value", "time_index", "t", "mean_error", "std_error"]);
    common(&mut series);
    for e in &entries {
        let sweep = if e.method == PCE_METHOD { "order" } else { sweep_name(b.sweep) };
        errors_table.row(vec![
            e.method.clone(),
            sweep.into(),
            fmt_f64(e.value),
            e.n_samples.to_string(),
            e.n_modes.to_string(),
            e.temporal_modes.to_string(),
            fmt_f64(e.errors.mean_max),
            fmt_f64(e.errors.std_max),
            e.rank_deficient.to_string(),
        ]);
        for (j, t) in p.grid.times.iter().enumerate() {
            series.row(vec![
                e.method.clone(),
                fmt_f64(e.value),
                j.to_string(),
                fmt_f64(*t),
                fmt_f64(e.errors.mean_series[j]),
                fmt_f64(e.errors.std_series[j]),
            ]);
        }
    }

    let profiles = profiles_table(&p.grid, &reference.field, &rom_stats, pce.as_ref().map(|x| &x.1), &common);
    let rom_value = *values.last().expect("non-empty sweep");

    let kde = kde_table(
        &design,
        &probes,
        &p.grid,
        &reference_probes,
        &rom,
        pce.as_ref().map(|x| &x.0),
        &entries_at,
        b.kde_points,
        rom_value,
        &common,
    )?;

    Ok(BenchResult {
        timings: Timings {
            config_hash: config_hash.clone(),
            reference_samples: reference.samples,
            reference_seconds,
            runs,
        },
        config_hash,
        reference,
        entries,
        errors: errors_table,
        series,
        profiles,
        kde,
    })
}

fn profiles_table(
    grid: &GridSpec,
    reference: &StatisticsField,
    rom: &StatisticsField,
    pce: Option<&StatisticsField>,
    common: &dyn Fn(&mut Table),
) -> Table {
    let mut header = vec!["t", "x", "reference_mean", "reference_std", "rom_mean", "rom_std"];
    if pce.is_some() {
        header.extend(["pce_mean", "pce_std"]);
    }
    let mut t = Table::new(&header);
    common(&mut t);
    let (nodes, times) = profile_layout(grid);
    if grid.axes.len() > 1 {
        t.comment("cross_section", format!("y = {}", fmt_f64(grid.coordinates(nodes[0])[1])));
    }
    for &j in &times {
        for &i in &nodes {
            let mut row = vec![fmt_f64(grid.times[j]), fmt_f64(grid.coordinates(i)[0])];
            let mut fields = vec![reference, rom];
            fields.extend(pce);
            for f in fields {
                row.push(fmt_f64(f.mean[(i, j)]));
                row.push(fmt_f64(f.std[(i, j)]));
            }
            t.row(row);
        }
    }
    t
}

#[allow(clippy::too_many_arguments)]
fn kde_table(
    design: &SampleSet,
    probes: &[Probe],
    grid: &GridSpec,
    reference_values: &[Vec<f64>],
    rom: &Surrogate,
    pce: Option<&PceExpansion>,
    entries: &[(usize, usize)],
    points: usize,
    rom_value: f64,
    common: &dyn Fn(&mut Table),
) -> CliResult<Table> {
    let rom_values = transpose(parallel::map_points(design, |xi| rom.evaluate_entries(xi, entries))?, probes.len());
    let pce_values = match pce {
        Some(p) => Some(transpose(
            parallel::map_points(design, |xi| p.evaluate_entries(xi, entries))?,
            probes.len(),
        )),
        None => None,
    };
    let mut header = vec!["probe", "x", "t", "value", "reference", "rom"];
    if pce.is_some() {
        header.push("pce");
    }
    let mut t = Table::new(&header);
    common(&mut t);
    t.comment("rom_sweep_value", fmt_f64(rom_value));
    t.comment("bandwidth_rule", "silverman, 0.9 min(sd, IQR/1.34) n^(-1/5)");
    for (k, probe) in probes.iter().enumerate() {
        let h_ref = silverman_bandwidth(&reference_values[k])?;
        let values = kde_grid(&reference_values[k], h_ref, points);
        let dens_ref = gaussian_kde(&reference_values[k], &values)?;
        let dens_rom = gaussian_kde(&rom_values[k], &values)?;
        let dens_pce = match &pce_values {
            Some(v) => Some(gaussian_kde(&v[k], &values)?),
            None => None,
        };
        let mut bw = format!(
            "probe {k}: reference {} rom {}",
            fmt_f64(dens_ref.bandwidth),
            fmt_f64(dens_rom.bandwidth)
        );
        if let Some(d) = &dens_pce {
            bw.push_str(&format!(" pce {}", fmt_f64(d.bandwidth)));
        }
        t.comment("bandwidth", bw);
        let coords = grid.coordinates(probe.node);
        let x = coords.iter().map(|c| fmt_f64(*c)).collect::<Vec<_>>().join(" ");
        for (g, v) in values.iter().enumerate() {
            let mut row = vec![
                k.to_string(),
                x.clone(),
                fmt_f64(grid.times[probe.time]),
                fmt_f64(*v),
                fmt_f64(dens_ref.density[g]),
                fmt_f64(dens_rom.density[g]),
            ];
            if let Some(d) = &dens_pce {
                row.push(fmt_f64(d.density[g]));
            }
            t.row(row);
        }
    }
    Ok(t)
}

fn transpose(per_point: Vec<Vec<f64>>, n_probes: usize) -> Vec<Vec<f64>> {
    (0..n_probes).map(|k| per_point.iter().map(|v| v[k]).collect()).collect()
}
