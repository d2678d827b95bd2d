//! Experiment drivers behind the CLI: time evolution with snapshot output,
//! the manufactured-solution EOC study and Wulff shape sampling.

use std::path::PathBuf;
use std::sync::Arc;

use crate::anisotropy::SurfaceEnergy;
use crate::config::{BcKind, DirichletPreset, InitialSpec, RunConfig};
use crate::energy::{EnergyMonitor, EnergyReport};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::integrator::{integrate, StepperConfig};
use crate::io::{
    output_path, read_snapshot_u, snapshot_filename, write_energy_csv, write_eoc_csv,
    write_eoc_table, write_snapshot_csv, write_snapshot_vtk, write_wulff_csv, EocRow, Snapshot,
};
use crate::mms::{eoc, spacetime_norms, w_of_zeta, zeta, ErrorRecord, MmsForcing, ZetaParams};
use crate::spatial::{
    apply_bc_u, cell_q, mean_curvature, rhs_values, w_field, BoundaryCondition, BoundaryData,
    FlowProblem,
};

#[derive(Debug, Clone)]
pub struct EvolveReport {
    /// Snapshot times and file stems, in order.
    pub snapshots: Vec<(f64, String)>,
    pub energy: Vec<EnergyReport>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

#[derive(Debug, Clone)]
pub struct EocReport {
    pub rows_u: Vec<EocRow>,
    pub rows_w: Vec<EocRow>,
}

fn boundary_condition(cfg: &RunConfig, params: ZetaParams) -> BoundaryCondition {
    match cfg.bc_kind {
        BcKind::Neumann => BoundaryCondition::NeumannHomogeneous,
        BcKind::Dirichlet => match cfg.dirichlet_preset {
            DirichletPreset::Zero => BoundaryCondition::zero_dirichlet(),
            DirichletPreset::MmsZeta => BoundaryCondition::Dirichlet {
                g1: BoundaryData::TimeDependent(Arc::new(move |x, y, t| zeta(&params, x, y, t))),
                g2: BoundaryData::zero(),
            },
        },
    }
}

fn initial_state(cfg: &RunConfig, grid: Grid, params: &ZetaParams) -> Result<GridFunction> {
    Ok(match &cfg.initial {
        InitialSpec::Zero => GridFunction::zeros(grid),
        InitialSpec::SineRadial => {
            GridFunction::from_fn(grid, |x, y| (3.0 * std::f64::consts::PI * x.hypot(y)).sin())
        }
        InitialSpec::MmsZeta => GridFunction::from_fn(grid, |x, y| zeta(params, x, y, 0.0)),
        InitialSpec::Csv(path) => read_snapshot_u(path, grid)?,
    })
}

fn snapshot_times(cfg: &RunConfig, t_end: f64, count: usize) -> Vec<f64> {
    let mut times = match &cfg.snapshot_times {
        Some(list) => list.clone(),
        None => (0..=count)
            .map(|k| {
                if k == count {
                    t_end
                } else {
                    k as f64 * t_end / count as f64
                }
            })
            .collect(),
    };
    if times.first() != Some(&0.0) {
        times.insert(0, 0.0);
    }
    if times.last() != Some(&t_end) {
        times.push(t_end);
    }
    times
}

/// Assemble the derived fields of one stored snapshot: `w` per the boundary
/// condition, cell `Q` (1 on the boundary) and `H` (0 on the boundary).
fn build_snapshot(problem: &FlowProblem, t: f64, values: Vec<f64>) -> Result<Snapshot> {
    let grid = *problem.grid();
    let u = GridFunction::from_values(grid, values)?;
    let w = w_field(&u, problem.energy(), problem.bc(), t)?;
    let mut q = GridFunction::from_fn(grid, |_, _| 1.0);
    let mut h = GridFunction::zeros(grid);
    for (i, j) in grid.interior() {
        q.set(i, j, cell_q(&u, i, j)?);
        h.set(i, j, mean_curvature(&u, problem.energy(), i, j)?);
    }
    Ok(Snapshot { t, u, w, q, h })
}

fn write_snapshot(cfg: &RunConfig, stem: &str, snap: &Snapshot) -> Result<()> {
    if cfg.output.csv {
        write_snapshot_csv(
            &output_path(&cfg.output.directory, &format!("{stem}.csv"))?,
            snap,
        )?;
    }
    if cfg.output.vtk {
        write_snapshot_vtk(
            &output_path(&cfg.output.directory, &format!("{stem}.vtk"))?,
            snap,
        )?;
    }
    Ok(())
}

/// Integrate the configured flow, writing snapshots at the requested times
/// plus `t = 0` and `t_end`, and the energy time series. On divergence the
/// partial outputs are kept and the last good state lands in
/// `failed_t<t>.csv`.
pub fn run_evolve(cfg: &RunConfig) -> Result<EvolveReport> {
    let domain = cfg.require_domain()?;
    let gs = cfg.require_grid()?;
    let time = cfg.require_time()?;
    let grid = Grid::from_bounds(
        domain.x_min,
        domain.x_max,
        domain.y_min,
        domain.y_max,
        gs.n1,
        gs.n2,
    )
    .map_err(|e| Error::Config(format!("[domain]/[grid]: {e}")))?;
    let params = cfg.mms.params;
    let bc = boundary_condition(cfg, params);
    let forcing: Option<Arc<dyn crate::spatial::Forcing>> = match cfg.initial {
        InitialSpec::MmsZeta => Some(Arc::new(MmsForcing::new(grid, params, cfg.energy.clone()))),
        _ => None,
    };
    let problem = FlowProblem::new(grid, cfg.energy.clone(), bc, forcing)?;

    let mut u0 = initial_state(cfg, grid, &params)?;
    apply_bc_u(problem.bc(), &mut u0, 0.0);

    let stepper = StepperConfig::new(time.tolerance, time.dt_init, time.dt_min, time.dt_max)
        .map_err(|e| Error::Config(format!("[time]: {e}")))?;
    let times = snapshot_times(cfg, time.t_end, time.snapshot_count);

    let mut monitor = EnergyMonitor::new(cfg.energy.clone());
    monitor
        .record(0.0, &u0)
        .expect("energy diagnostics of the initial state");

    let mut f = |state: &[f64], t: f64| rhs_values(&problem, state, t);
    let bc_ref = problem.bc().clone();
    let mut observer = |t: f64, state: &mut [f64], _out: &crate::integrator::StepOutcome| {
        let mut uf = GridFunction::from_values_unchecked(grid, state.to_vec());
        apply_bc_u(&bc_ref, &mut uf, t);
        state.copy_from_slice(uf.values());
        monitor
            .record(t, &uf)
            .expect("energy diagnostics of an accepted state");
    };

    let outcome = integrate(
        &mut f,
        u0.values(),
        0.0,
        time.t_end,
        &stepper,
        &times,
        &mut observer,
    );

    match outcome {
        Ok(result) => {
            let mut stems = Vec::with_capacity(result.snapshots.len());
            for (idx, (t, values)) in result.snapshots.into_iter().enumerate() {
                let snap = build_snapshot(&problem, t, values)?;
                let stem = snapshot_filename(idx, t);
                write_snapshot(cfg, &stem, &snap)?;
                stems.push((t, stem));
            }
            write_energy_csv(
                &output_path(&cfg.output.directory, "energy.csv")?,
                monitor.reports(),
            )?;
            Ok(EvolveReport {
                snapshots: stems,
                energy: monitor.reports().to_vec(),
                steps_accepted: result.steps_accepted,
                steps_rejected: result.steps_rejected,
            })
        }
        Err(failure) => {
            for (idx, (t, values)) in failure.snapshots.into_iter().enumerate() {
                if let Ok(snap) = build_snapshot(&problem, t, values) {
                    let stem = snapshot_filename(idx, t);
                    let _ = write_snapshot(cfg, &stem, &snap);
                }
            }
            let _ = write_energy_csv(
                &output_path(&cfg.output.directory, "energy.csv")?,
                monitor.reports(),
            );
            // the last good state, as plain values (derived fields may be
            // the very thing that blew up)
            let grid_fn = GridFunction::from_values_unchecked(grid, failure.last_state);
            let snap = Snapshot {
                t: failure.t,
                u: grid_fn.clone(),
                w: GridFunction::zeros(grid),
                q: GridFunction::from_fn(grid, |_, _| 1.0),
                h: GridFunction::zeros(grid),
            };
            let _ = write_snapshot_csv(
                &output_path(
                    &cfg.output.directory,
                    &format!("failed_t{:.9e}.csv", failure.t),
                )?,
                &snap,
            );
            Err(failure.error)
        }
    }
}

/// Entries `(mesh, h, record)` to EOC rows; `None` marks a diverged mesh.
/// EOC columns compare each row with the previous successful one.
pub fn build_eoc_rows(entries: &[(usize, f64, Option<ErrorRecord>)]) -> Vec<EocRow> {
    let mut rows = Vec::with_capacity(entries.len());
    let mut prev: Option<(f64, ErrorRecord)> = None;
    for (mesh, h, rec) in entries {
        match rec {
            Some(r) => {
                let eocs = prev
                    .as_ref()
                    .map(|(ph, pr)| {
                        (
                            eoc(pr.err_l1, r.err_l1, *ph, *h).ok(),
                            eoc(pr.err_l2, r.err_l2, *ph, *h).ok(),
                            eoc(pr.err_linf, r.err_linf, *ph, *h).ok(),
                        )
                    })
                    .unwrap_or((None, None, None));
                rows.push(EocRow {
                    mesh: *mesh,
                    h: *h,
                    errors: Some(*r),
                    eoc_l1: eocs.0,
                    eoc_l2: eocs.1,
                    eoc_linf: eocs.2,
                });
                prev = Some((*h, *r));
            }
            None => rows.push(EocRow {
                mesh: *mesh,
                h: *h,
                errors: None,
                eoc_l1: None,
                eoc_l2: None,
                eoc_linf: None,
            }),
        }
    }
    rows
}

/// Solve the forced problem from `u0 = zeta(., 0)` on one square mesh and
/// return the space-time error records for `u` and `w`.
pub fn eoc_single_mesh(
    energy: &SurfaceEnergy,
    params: ZetaParams,
    mesh: usize,
    t_end: f64,
    tau_levels: usize,
    stepper: &StepperConfig,
) -> Result<(ErrorRecord, ErrorRecord)> {
    let r = params.r();
    let grid = Grid::from_bounds(-r, r, -r, r, mesh, mesh)?;
    let bc = BoundaryCondition::Dirichlet {
        g1: BoundaryData::TimeDependent(Arc::new(move |x, y, t| zeta(&params, x, y, t))),
        g2: BoundaryData::zero(),
    };
    let problem = FlowProblem::new(
        grid,
        energy.clone(),
        bc,
        Some(Arc::new(MmsForcing::new(grid, params, energy.clone()))),
    )?;
    let mut u0 = GridFunction::from_fn(grid, |x, y| zeta(&params, x, y, 0.0));
    apply_bc_u(problem.bc(), &mut u0, 0.0);

    let times: Vec<f64> = (0..=tau_levels)
        .map(|k| {
            if k == tau_levels {
                t_end
            } else {
                k as f64 * t_end / tau_levels as f64
            }
        })
        .collect();

    let mut f = |state: &[f64], t: f64| rhs_values(&problem, state, t);
    let bc_ref = problem.bc().clone();
    let mut observer = |t: f64, state: &mut [f64], _out: &crate::integrator::StepOutcome| {
        let mut uf = GridFunction::from_values_unchecked(grid, state.to_vec());
        apply_bc_u(&bc_ref, &mut uf, t);
        state.copy_from_slice(uf.values());
    };
    let result = integrate(
        &mut f,
        u0.values(),
        0.0,
        t_end,
        stepper,
        &times,
        &mut observer,
    )
    .map_err(|failure| failure.error)?;

    let mut u_snaps = Vec::with_capacity(result.snapshots.len());
    let mut w_snaps = Vec::with_capacity(result.snapshots.len());
    for (t, values) in result.snapshots {
        let u = GridFunction::from_values(grid, values)?;
        let w = w_field(&u, problem.energy(), problem.bc(), t)?;
        u_snaps.push((t, u));
        w_snaps.push((t, w));
    }

    let (l1, l2, linf) = spacetime_norms(&u_snaps, |x, y, t| zeta(&params, x, y, t))?;
    let u_rec = ErrorRecord {
        h: grid.h1(),
        err_l1: l1,
        err_l2: l2,
        err_linf: linf,
    };
    let energy_for_ref = energy.clone();
    let (l1, l2, linf) = spacetime_norms(&w_snaps, move |x, y, t| {
        w_of_zeta(&energy_for_ref, &params, x, y, t)
    })?;
    let w_rec = ErrorRecord {
        h: grid.h1(),
        err_l1: l1,
        err_l2: l2,
        err_linf: linf,
    };
    Ok((u_rec, w_rec))
}

/// Run the configured mesh ladder of forced problems and emit the EOC
/// tables for `u` and `w`. A diverged mesh marks its row as failed; the
/// remaining rows are still produced.
pub fn run_eoc(cfg: &RunConfig) -> Result<EocReport> {
    let time = cfg.require_time()?;
    let params = cfg.mms.params;
    if let Some(d) = cfg.domain {
        let r = params.r();
        let ok = (d.x_min + r).abs() < 1e-12
            && (d.x_max - r).abs() < 1e-12
            && (d.y_min + r).abs() < 1e-12
            && (d.y_max - r).abs() < 1e-12;
        if !ok {
            return Err(Error::Config(format!(
                "[domain] must equal the centred square [-r, r]^2 with [mms] r = {r} for eoc runs"
            )));
        }
    }
    let stepper = StepperConfig::new(time.tolerance, time.dt_init, time.dt_min, time.dt_max)
        .map_err(|e| Error::Config(format!("[time]: {e}")))?;

    let mut entries_u = Vec::new();
    let mut entries_w = Vec::new();
    for &mesh in &cfg.mms.meshes {
        let h = 2.0 * params.r() / mesh as f64;
        match eoc_single_mesh(
            &cfg.energy,
            params,
            mesh,
            time.t_end,
            cfg.mms.tau_levels,
            &stepper,
        ) {
            Ok((u_rec, w_rec)) => {
                entries_u.push((mesh, h, Some(u_rec)));
                entries_w.push((mesh, h, Some(w_rec)));
            }
            Err(Error::Divergence { i, j, t }) => {
                eprintln!("mesh {mesh}: diverged at node ({i}, {j}), t = {t:.6e}");
                entries_u.push((mesh, h, None));
                entries_w.push((mesh, h, None));
            }
            Err(Error::StepFailure { t, dt_min }) => {
                eprintln!("mesh {mesh}: step size fell below {dt_min:.3e} at t = {t:.6e}");
                entries_u.push((mesh, h, None));
                entries_w.push((mesh, h, None));
            }
            Err(other) => return Err(other),
        }
    }

    let rows_u = build_eoc_rows(&entries_u);
    let rows_w = build_eoc_rows(&entries_w);
    write_eoc_csv(&output_path(&cfg.output.directory, "eoc_u.csv")?, &rows_u)?;
    write_eoc_table(
        &output_path(&cfg.output.directory, "eoc_u.txt")?,
        "EOC of the height function u",
        &rows_u,
    )?;
    write_eoc_csv(&output_path(&cfg.output.directory, "eoc_w.csv")?, &rows_w)?;
    write_eoc_table(
        &output_path(&cfg.output.directory, "eoc_w.txt")?,
        "EOC of the curvature field w",
        &rows_w,
    )?;
    Ok(EocReport { rows_u, rows_w })
}

/// Sample the Wulff shape cross-section and write `wulff.csv`.
pub fn run_wulff(cfg: &RunConfig) -> Result<PathBuf> {
    let points = cfg
        .energy
        .wulff_boundary(cfg.wulff_samples)
        .map_err(|e| Error::Config(format!("[wulff]: {e}")))?;
    let path = output_path(&cfg.output.directory, "wulff.csv")?;
    write_wulff_csv(&path, &points)?;
    Ok(path)
}
