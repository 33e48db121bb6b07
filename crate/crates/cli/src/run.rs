//! Dispatch of a validated [`RunConfig`] to the solvers.

use std::env;
use std::fs;
use std::io::{self, Write};

use cantor_spectra_core::analysis::{
    detect_clusters, geometric_gap_threshold, participation_ratio, staircase, sweep_record,
    SweepSettings,
};
use cantor_spectra_core::tm::{tm_eigenfunction, TransferMatrix};
use cantor_spectra_core::{
    assemble_hamiltonian, build_cantor_potential, Grid, ModelParams, PiecewisePotential,
    Wavefunction,
};
use rayon::prelude::*;

use crate::config::{CommandKind, EngineChoice, PotentialSource, RunConfig};
use crate::error::CliError;
use crate::format::{parse_potential, serialize_potential};
use crate::output::Table;
use crate::plot::{
    emit_plot_script, CLUSTERS_HEADER, SPECTRUM_HEADER, STAIRCASE_HEADER, STATES_HEADER,
    SWEEP_HEADER,
};

/// Worker cap for sweeps; unset or 0 lets rayon decide.
pub const THREADS_ENV: &str = "CANTOR_SPECTRA_THREADS";

/// Runs the command and writes its output to `config.output` or stdout.
pub fn run(config: &RunConfig) -> Result<(), CliError> {
    let mut buffer = Vec::new();
    run_to(config, &mut buffer)?;
    match &config.output {
        Some(path) => fs::write(path, &buffer)
            .map_err(|e| CliError::io(format!("cannot write {}", path.display()), e)),
        None => io::stdout()
            .lock()
            .write_all(&buffer)
            .map_err(|e| CliError::io("cannot write to standard output", e)),
    }
}

/// Runs the command, writing everything it produces to `out`.
pub fn run_to(config: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let write_err = |e| CliError::io("cannot write output", e);
    if config.command == CommandKind::Plot {
        let data = config.data.as_deref().expect("validated");
        let script = emit_plot_script(config.plot_kind, data)?;
        return out.write_all(script.as_bytes()).map_err(write_err);
    }

    let potential = load_potential(&config.source)?;
    let table = match config.command {
        CommandKind::Potential => {
            return out
                .write_all(serialize_potential(&potential).as_bytes())
                .map_err(write_err);
        }
        CommandKind::Spectrum => spectrum(&potential, config)?,
        CommandKind::States => states(&potential, config)?,
        CommandKind::Staircase => staircase_table(&potential, config)?,
        CommandKind::Clusters => clusters(&potential, config)?,
        CommandKind::Sweep => sweep(&potential, config)?,
        CommandKind::Plot => unreachable!(),
    };
    table.write(config.format, out).map_err(write_err)
}

pub fn load_potential(source: &PotentialSource) -> Result<PiecewisePotential, CliError> {
    match source {
        PotentialSource::Cantor(spec) => Ok(build_cantor_potential(spec)?),
        PotentialSource::File(path) => {
            let shown = path.display().to_string();
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::config(format!("cannot read potential file {shown}: {e}"))
            })?;
            parse_potential(&text).map_err(|source| CliError::Potential {
                path: shown,
                source,
            })
        }
    }
}

fn params_and_grid(
    p: &PiecewisePotential,
    config: &RunConfig,
) -> Result<(ModelParams, Grid), CliError> {
    let params = ModelParams::new(config.mu())?;
    let grid = match config.grid {
        Some(n) => Grid::new(n)?,
        None => Grid::resolved(p, &params),
    };
    Ok((params, grid))
}

fn eigenvalues(
    p: &PiecewisePotential,
    params: &ModelParams,
    grid: &Grid,
    config: &RunConfig,
) -> Result<Vec<f64>, CliError> {
    let (lo, hi) = config.window;
    let spectrum = match config.engine {
        EngineChoice::Fd => {
            assemble_hamiltonian(p, params, grid).eigenvalues_in_range(lo, hi, config.tolerance)?
        }
        EngineChoice::Tm => {
            TransferMatrix::new(p, *params).eigenvalues(lo, hi, config.tolerance)?
        }
    };
    Ok(spectrum.eigenvalues)
}

/// Eigenstates for `energies[k]` with `k` in `picked` (ascending).
fn eigenstates(
    p: &PiecewisePotential,
    params: &ModelParams,
    grid: &Grid,
    config: &RunConfig,
    energies: &[f64],
    picked: &[usize],
) -> Result<Vec<Wavefunction>, CliError> {
    match config.engine {
        EngineChoice::Fd => {
            // All of them, so near-degenerate partners stay orthogonal.
            let all =
                assemble_hamiltonian(p, params, grid).eigenvectors(energies, config.tolerance)?;
            Ok(all
                .into_iter()
                .enumerate()
                .filter(|(k, _)| picked.binary_search(k).is_ok())
                .map(|(_, psi)| psi)
                .collect())
        }
        EngineChoice::Tm => picked
            .iter()
            .map(|&k| Ok(tm_eigenfunction(p, params, energies[k], grid.n())?))
            .collect(),
    }
}

fn spectrum(p: &PiecewisePotential, config: &RunConfig) -> Result<Table, CliError> {
    let (params, grid) = params_and_grid(p, config)?;
    let energies = eigenvalues(p, &params, &grid, config)?;
    let all: Vec<usize> = (0..energies.len()).collect();
    let states = eigenstates(p, &params, &grid, config, &energies, &all)?;
    let mut table = Table::new(&SPECTRUM_HEADER.split(',').collect::<Vec<_>>());
    for (k, (e, psi)) in energies.iter().zip(&states).enumerate() {
        table.push(vec![
            k.into(),
            (*e).into(),
            participation_ratio(psi)?.into(),
        ]);
    }
    Ok(table)
}

/// Index of the eigenvalue nearest to each requested energy, ascending and
/// without repeats.
pub fn snap(energies: &[f64], requested: &[f64]) -> Vec<usize> {
    let mut picked: Vec<usize> = requested
        .iter()
        .filter_map(|r| {
            (0..energies.len())
                .min_by(|&a, &b| (energies[a] - r).abs().total_cmp(&(energies[b] - r).abs()))
        })
        .collect();
    picked.sort_unstable();
    picked.dedup();
    picked
}

fn states(p: &PiecewisePotential, config: &RunConfig) -> Result<Table, CliError> {
    let (params, grid) = params_and_grid(p, config)?;
    let energies = eigenvalues(p, &params, &grid, config)?;
    let picked = match &config.energies {
        Some(requested) => {
            if energies.is_empty() {
                let (lo, hi) = config.window;
                return Err(CliError::MissingData(format!(
                    "no eigenvalues in ({lo}, {hi}] to snap the requested energies to"
                )));
            }
            snap(&energies, requested)
        }
        None => (0..energies.len()).collect(),
    };
    let states = eigenstates(p, &params, &grid, config, &energies, &picked)?;
    let mut table = Table::new(&STATES_HEADER.split(',').collect::<Vec<_>>());
    for (&k, psi) in picked.iter().zip(&states) {
        for (x, rho) in psi.positions().zip(psi.probability_density()) {
            let v = p.sample(x)?;
            table.push(vec![
                k.into(),
                energies[k].into(),
                x.into(),
                rho.into(),
                v.into(),
            ]);
        }
    }
    Ok(table)
}

fn staircase_table(p: &PiecewisePotential, config: &RunConfig) -> Result<Table, CliError> {
    let (params, grid) = params_and_grid(p, config)?;
    let (lo, hi) = config.window;
    let data = match config.engine {
        EngineChoice::Fd => staircase(
            &assemble_hamiltonian(p, &params, &grid),
            lo,
            hi,
            config.resolution,
        )?,
        EngineChoice::Tm => staircase(&TransferMatrix::new(p, params), lo, hi, config.resolution)?,
    };
    let mut table = Table::new(&STAIRCASE_HEADER.split(',').collect::<Vec<_>>());
    for (e, c) in data.energies.iter().zip(&data.counts) {
        table.push(vec![(*e).into(), (*c).into()]);
    }
    Ok(table)
}

fn clusters(p: &PiecewisePotential, config: &RunConfig) -> Result<Table, CliError> {
    let (params, grid) = params_and_grid(p, config)?;
    let mut energies = eigenvalues(p, &params, &grid, config)?;
    if let Some(k) = config.lowest {
        energies.truncate(k);
    }
    let threshold = config
        .threshold
        .or_else(|| geometric_gap_threshold(&energies, config.tolerance))
        .unwrap_or(1.0);
    let report = detect_clusters(&energies, threshold)?;
    let mut table = Table::new(&CLUSTERS_HEADER.split(',').collect::<Vec<_>>());
    for (label, e) in report.labels().into_iter().zip(&energies) {
        table.push(vec![label.into(), (*e).into()]);
    }
    Ok(table)
}

/// Worker count from [`THREADS_ENV`]; `None` means rayon's default.
pub fn thread_cap() -> Result<Option<usize>, CliError> {
    match env::var(THREADS_ENV) {
        Err(env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::config(format!("{THREADS_ENV}: {e}"))),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(CliError::config(format!(
                "{THREADS_ENV} must be a nonnegative integer, got `{v}`"
            ))),
        },
    }
}

fn sweep(p: &PiecewisePotential, config: &RunConfig) -> Result<Table, CliError> {
    let settings = SweepSettings {
        window: config.window,
        tolerance: config.tolerance,
        grid: config.grid.map(Grid::new).transpose()?,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::config(format!("cannot start worker threads: {e}")))?;
    let records = pool.install(|| {
        config
            .mus
            .par_iter()
            .map(|&mu| sweep_record(p, mu, &settings))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let mut table = Table::new(&SWEEP_HEADER.split(',').collect::<Vec<_>>());
    for r in &records {
        table.push(vec![
            r.mu.into(),
            r.grid_nodes.into(),
            r.count_below_zero.into(),
            r.eigenvalues.len().into(),
            r.min_eigenvalue().into(),
            r.max_eigenvalue().into(),
            r.mean_participation(10).into(),
        ]);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapping_picks_nearest_once() {
        let e = [-0.9, -0.5, -0.1];
        assert_eq!(snap(&e, &[-0.52, -0.48, 0.3]), vec![1, 2]);
        assert_eq!(snap(&[], &[0.0]), Vec::<usize>::new());
    }
}
