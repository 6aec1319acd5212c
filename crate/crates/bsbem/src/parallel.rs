//! Multi-threaded model sweeps.
//!
//! Work is split into fixed-size chunks whose results are combined in
//! chunk order, so output does not depend on the thread count.

use bsbem_core::baselines::{
    accumulate_range, pce_design, pce_fit_from_samples, MomentAccumulator, PceExpansion, PceSettings,
    ReferenceStatistics,
};
use bsbem_core::pod::SnapshotMatrix;
use bsbem_core::rom::Model;
use bsbem_core::sampling::{SampleSet, UncertainInput};
use bsbem_core::{Error, Matrix};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

/// Samples per reference chunk.
pub const REFERENCE_CHUNK: usize = 1024;
/// Samples evaluated between copies into a snapshot matrix.
const SNAPSHOT_CHUNK: usize = 64;

pub type SharedModel = dyn Model + Sync;

/// Thread pool with `threads` workers; 0 means all available cores.
pub fn thread_pool(threads: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::config(format!("cannot start {threads} worker threads: {e}")))
}

fn physical(plan: &SampleSet, s: usize) -> Result<&[f64], Error> {
    plan.physical_point(s)
        .ok_or(Error::InvalidArgument("sample set has no physical points".into()))
}

/// Runs `model` at every point of `plan`, `len`-long field per point,
/// handing each chunk of fields to `sink` in order.
fn sweep(
    model: &SharedModel,
    plan: &SampleSet,
    mut sink: impl FnMut(usize, &[f64]),
) -> Result<(), Error> {
    let len = model.n_nodes() * model.times().len();
    for start in (0..plan.len()).step_by(SNAPSHOT_CHUNK) {
        let end = (start + SNAPSHOT_CHUNK).min(plan.len());
        let fields = (start..end)
            .into_par_iter()
            .map(|s| {
                let mut buf = vec![0.0; len];
                model.evaluate(physical(plan, s)?, &mut buf)?;
                Ok(buf)
            })
            .collect::<Result<Vec<_>, Error>>()?;
        for (k, f) in fields.iter().enumerate() {
            sink(start + k, f);
        }
    }
    Ok(())
}

/// Snapshot matrix at the physical points of `plan`.
pub fn snapshots(model: &SharedModel, plan: &SampleSet) -> Result<SnapshotMatrix, Error> {
    let (n_e, n_t) = (model.n_nodes(), model.times().len());
    let mut values = Matrix::zeros(n_e, plan.len() * n_t);
    sweep(model, plan, |s, field| {
        for j in 0..n_t {
            values
                .col_as_slice_mut(s * n_t + j)
                .copy_from_slice(&field[j * n_e..(j + 1) * n_e]);
        }
    })?;
    SnapshotMatrix::new(values, plan.len(), n_t)
}

/// Chaos fit with the regression runs done in parallel.
pub fn pce_fit(model: &SharedModel, inputs: &UncertainInput, settings: &PceSettings) -> Result<PceExpansion, Error> {
    let design = pce_design(inputs, settings)?;
    let (n_e, n_t) = (model.n_nodes(), model.times().len());
    let mut outputs = Matrix::zeros(design.len(), n_e * n_t);
    sweep(model, &design, |s, field| {
        for (c, v) in field.iter().enumerate() {
            outputs[(s, c)] = *v;
        }
    })?;
    pce_fit_from_samples(&design, &outputs, n_e, n_t, inputs, settings)
}

/// Reference statistics over `design`; also returns the model values at
/// flat indices `probes` (`j * N_e + i`), in design order.
pub fn reference(
    model: &SharedModel,
    design: &SampleSet,
    probes: &[usize],
) -> Result<(ReferenceStatistics, Vec<Vec<f64>>), Error> {
    let n = design.len();
    let chunks: Vec<_> = (0..n.div_ceil(REFERENCE_CHUNK))
        .into_par_iter()
        .map(|c| {
            let range = c * REFERENCE_CHUNK..((c + 1) * REFERENCE_CHUNK).min(n);
            accumulate_range(model, design, range, probes)
        })
        .collect::<Result<_, Error>>()?;
    let (n_e, n_t) = (model.n_nodes(), model.times().len());
    let mut acc = MomentAccumulator::new(n_e * n_t);
    let mut values = vec![Vec::with_capacity(n); probes.len()];
    for (part, probe_values) in &chunks {
        acc.merge(part);
        for (all, chunk) in values.iter_mut().zip(probe_values) {
            all.extend_from_slice(chunk);
        }
    }
    let stats = ReferenceStatistics::from_accumulator(
        &acc,
        n_e,
        n_t,
        design.scheme(),
        design.seed().unwrap_or_default(),
    );
    Ok((stats, values))
}

/// `f` at every unit point of `design`, in order.
pub fn map_points<T: Send>(
    design: &SampleSet,
    f: impl Fn(&[f64]) -> Result<T, Error> + Sync,
) -> Result<Vec<T>, Error> {
    (0..design.len())
        .into_par_iter()
        .map(|s| f(design.unit_point(s)))
        .collect()
}
