//! Batch front end for `ergophase_core`: model files, subcommands, result
//! serialization and the invariant suite.

pub mod args;
pub mod check;
pub mod commands;
pub mod error;
pub mod model;
pub mod output;
pub mod tolerances;

use std::path::Path;

use args::{Cli, Command, Common, Freespace};
use commands::require_model;
use error::{CliError, CliResult};
use output::{emit, envelope, Artifact};
use tolerances::Tolerances;

fn tolerances(common: &Common) -> CliResult<Tolerances> {
    match &common.tol_file {
        Some(path) => Tolerances::load(path),
        None => Ok(Tolerances::default()),
    }
}

/// Executes one parsed invocation. `argv` is recorded in the metadata file.
pub fn run(cli: Cli, argv: &[String]) -> CliResult<()> {
    let (common, artifact, warnings, failures) = dispatch(cli)?;
    emit(
        &artifact,
        common.format,
        common.out.as_deref(),
        argv,
        &warnings,
    )?;
    match failures {
        Some((failed, total)) if failed > 0 => Err(CliError::ChecksFailed { failed, total }),
        _ => Ok(()),
    }
}

type Dispatched = (Common, Artifact, Vec<String>, Option<(usize, usize)>);

fn dispatch(cli: Cli) -> CliResult<Dispatched> {
    let model_for = |common: &Common, tol: &Tolerances| require_model(common.model.as_deref(), tol);
    let done =
        |common: Common, art: Artifact, warnings: Vec<String>| Ok((common, art, warnings, None));
    match cli.command {
        Command::KdJoint {
            common,
            state,
            a,
            b,
        } => {
            let tol = tolerances(&common)?;
            let m = model_for(&common, &tol)?;
            let art = commands::kd_joint_cmd(&m, &state, &a, &b)?;
            done(common, art, m.warnings)
        }
        Command::CondApp {
            common,
            a,
            b,
            basis,
            eigenspace,
        } => {
            let tol = tolerances(&common)?;
            let m = model_for(&common, &tol)?;
            let art = commands::cond_app_cmd(&m, &tol, &a, &b, &basis, eigenspace)?;
            done(common, art, m.warnings)
        }
        Command::EvolveApp {
            common,
            a,
            b,
            n,
            grid,
            eigenspace,
        } => {
            let tol = tolerances(&common)?;
            let m = model_for(&common, &tol)?;
            let art = commands::evolve_app_cmd(&m, &tol, &a, &b, &n, &grid, eigenspace)?;
            done(common, art, m.warnings)
        }
        Command::WeakEnergy {
            common,
            a,
            b,
            n,
            grid,
        } => {
            let tol = tolerances(&common)?;
            let m = model_for(&common, &tol)?;
            let art = commands::weak_energy_cmd(&m, &tol, &a, &b, n.as_deref(), &grid)?;
            done(common, art, m.warnings)
        }
        Command::Ergodic {
            common,
            a,
            b,
            n,
            t_total,
            dt,
            eigenspace,
        } => {
            let tol = tolerances(&common)?;
            let m = model_for(&common, &tol)?;
            let art = commands::ergodic_cmd(&m, &tol, &a, &b, &n, t_total, dt, eigenspace)?;
            done(common, art, m.warnings)
        }
        Command::PartialErgodic {
            common,
            a,
            b,
            n,
            kernel,
            grid,
        } => {
            let tol = tolerances(&common)?;
            let m = model_for(&common, &tol)?;
            let art = commands::partial_ergodic_cmd(&m, &tol, &a, &b, &n, &kernel, &grid)?;
            done(common, art, m.warnings)
        }
        Command::Uncertainty {
            common,
            kernel,
            hbar,
            e_min,
            e_max,
            e_points,
        } => {
            let tol = tolerances(&common)?;
            let (hbar, warnings) = match (&common.model, hbar) {
                (_, Some(h)) => (h, Vec::new()),
                (Some(path), None) => {
                    let m = require_model(Some(path.as_path()), &tol)?;
                    (m.hbar, m.warnings)
                }
                (None, None) => (1.0, Vec::new()),
            };
            let art = commands::uncertainty_cmd(&kernel, hbar, e_min, e_max, e_points)?;
            done(common, art, warnings)
        }
        Command::Semiclassical {
            common,
            a,
            b,
            n,
            grid,
            widths,
        } => {
            let tol = tolerances(&common)?;
            let m = model_for(&common, &tol)?;
            let art = commands::semiclassical_cmd(&m, &tol, &a, &b, &n, &grid, &widths)?;
            done(common, art, m.warnings)
        }
        Command::Freespace { which } => match which {
            Freespace::Propagate {
                common,
                particle,
                p,
            } => {
                let art = commands::propagate_cmd(&particle, p)?;
                done(common, art, Vec::new())
            }
            Freespace::Tunnel {
                common,
                particle,
                v,
                e,
            } => {
                let art = commands::tunnel_cmd(&particle, v, e)?;
                done(common, art, Vec::new())
            }
        },
        Command::Check { common } => {
            let tol = tolerances(&common)?;
            let m = model_for(&common, &tol)?;
            let report = check::run_checks(&m, &tol);
            let failures = Some((report.failed(), report.checks.len()));
            let body = envelope("check", report.to_json());
            let art = Artifact::json("check", body);
            Ok((common, art, m.warnings, failures))
        }
    }
}

/// Loads a model with default tolerances; convenience for tests and benches.
pub fn load_model(path: &Path) -> CliResult<model::ModelSystem> {
    model::ModelSystem::load(path, &Tolerances::default())
}
