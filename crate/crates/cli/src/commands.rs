//! The experiment commands. Each returns a [`Table`]; writing is separate.

use qbsim_core::energetics::{ergotropy, Basis};
use qbsim_core::lindblad::{evolve, spectrum, steady_state_with_tolerance, EvolveOptions};
use qbsim_core::meanfield::{
    classify_phase, evolve as mf_evolve, MeanFieldParams, MeanFieldState,
};
use qbsim_core::ode::{IntegratorOptions, Tolerances as OdeTolerances};
use qbsim_core::qops::build_collective_ops;
use qbsim_core::waveguide::{battery_hamiltonian, build, ground_state, ModelKind, ModelSpec};
use qbsim_core::ComplexMatrix;
use rayon::prelude::*;

use crate::config::{Command, Model, Param, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{Cell, Table};

/// Largest atom number accepted by `spectrum`.
pub const SPECTRUM_MAX_ATOMS: usize = 40;

pub fn run(cmd: Command, cfg: &RunConfig, jobs: usize) -> Result<Table> {
    match cmd {
        Command::Evolve | Command::Meanfield => cmd_evolve(cfg),
        Command::Steady => cmd_steady(cfg, jobs),
        Command::Spectrum => cmd_spectrum(cfg),
        Command::PhaseDiagram => cmd_phase_diagram(cfg, jobs),
    }
}

fn integrator_options(cfg: &RunConfig) -> IntegratorOptions {
    IntegratorOptions {
        tol: OdeTolerances {
            rtol: cfg.tolerances.rtol,
            atol: cfg.tolerances.atol,
        },
        ..IntegratorOptions::default()
    }
}

fn basis(kind: ModelKind) -> Basis {
    if kind == ModelKind::Collective {
        Basis::Dicke
    } else {
        Basis::Site
    }
}

fn kind_of(cfg: &RunConfig) -> ModelKind {
    cfg.model().kind().expect("quantum model")
}

/// Map `f` over `items` on a pool of `jobs` threads; results and the first
/// error come back in input order.
pub fn par_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Output(e.to_string()))?;
    let results: Vec<Result<R>> = pool.install(|| items.par_iter().map(&f).collect());
    results.into_iter().collect()
}

pub fn cmd_evolve(cfg: &RunConfig) -> Result<Table> {
    if cfg.model() == Model::Meanfield {
        return meanfield_trajectory(cfg);
    }
    let kind = kind_of(cfg);
    let spec = cfg.model_spec(&[])?;
    let gen = build(kind, &spec)?;
    let h_b = battery_hamiltonian(kind, &spec)?;
    let opts = EvolveOptions {
        integrator: integrator_options(cfg),
        positivity_floor: cfg.tolerances.positivity_floor,
    };
    let traj = evolve(&gen, &ground_state(kind, &spec), &cfg.time_grid(), &opts)?;
    let with_m = kind == ModelKind::Collective;
    let mut table = evolve_table(with_m);
    let magnetization = if with_m { Some(Magnetization::new(spec.n_atoms)?) } else { None };
    for (k, rho) in traj.states.iter().enumerate() {
        let rep = ergotropy(rho, &h_b, basis(kind))?.per_atom(spec.n_atoms);
        let mut row = vec![Cell::Num(traj.times[k]), rep.energy.into(), rep.ergotropy.into()];
        if let Some(m) = &magnetization {
            row.extend(m.of(rho).map(Cell::Num));
        }
        row.push(traj.trace_defect[k].into());
        row.push(traj.min_eig[k].into());
        table.push(row);
    }
    Ok(table)
}

fn evolve_table(with_m: bool) -> Table {
    let mut cols = vec!["t", "energy", "ergotropy"];
    if with_m {
        cols.extend(["mx", "my", "mz"]);
    }
    cols.extend(["trace_defect", "min_eig"]);
    Table::new(cols)
}

/// `<J_α>/N` in the Dicke basis.
struct Magnetization {
    ops: [ComplexMatrix; 3],
    n: f64,
}

impl Magnetization {
    fn new(n_atoms: usize) -> Result<Self> {
        let c = build_collective_ops(n_atoms)?;
        Ok(Magnetization {
            ops: [c.jx, c.jy, c.jz],
            n: n_atoms as f64,
        })
    }

    fn of(&self, rho: &ComplexMatrix) -> [f64; 3] {
        self.ops.each_ref().map(|j| (j * rho).trace().re / self.n)
    }
}

fn meanfield_trajectory(cfg: &RunConfig) -> Result<Table> {
    let p = cfg.meanfield_params(&[])?;
    let mut opts = integrator_options(cfg);
    // the flow is cheap; hold the conserved length to well below 1e-9
    opts.tol.rtol = opts.tol.rtol.min(1e-12);
    opts.tol.atol = opts.tol.atol.min(1e-15);
    let grid: Vec<f64> = cfg.time_grid();
    let traj = mf_evolve(&MeanFieldState::GROUND, &p, &grid, &opts)?;
    let mut table = evolve_table(true);
    for s in &traj {
        // the single-site state with Bloch vector 2m has eigenvalues 1/2 ± |m|
        let min_eig = 0.5 - s.length_sq().sqrt();
        table.push(vec![
            s.t.into(),
            s.energy().into(),
            s.ergotropy().into(),
            s.mx.into(),
            s.my.into(),
            s.mz.into(),
            0.0.into(),
            min_eig.into(),
        ]);
    }
    Ok(table)
}

struct SteadyRow {
    energy: f64,
    ergotropy: f64,
    degeneracy: usize,
    cp_flag: bool,
}

fn steady_point(cfg: &RunConfig, spec: &ModelSpec) -> Result<SteadyRow> {
    let kind = kind_of(cfg);
    let gen = build(kind, spec)?;
    let ss = steady_state_with_tolerance(&gen, cfg.tolerances.null_space)?;
    let h_b = battery_hamiltonian(kind, spec)?;
    let rep = ergotropy(&ss.rho, &h_b, basis(kind))?.per_atom(spec.n_atoms);
    Ok(SteadyRow {
        energy: rep.energy,
        ergotropy: rep.ergotropy,
        degeneracy: ss.degeneracy,
        cp_flag: gen.cp_flag(),
    })
}

pub fn cmd_steady(cfg: &RunConfig, jobs: usize) -> Result<Table> {
    let grid = cfg.grid()?;
    let rows = par_map(&grid, jobs, |point| steady_point(cfg, &cfg.model_spec(point)?))?;
    let mut cols: Vec<&str> = cfg.sweep.iter().map(|a| a.name.column()).collect();
    cols.extend(["energy", "ergotropy", "degeneracy", "cp_flag"]);
    let mut table = Table::new(cols);
    for (point, r) in grid.iter().zip(rows) {
        let mut row: Vec<Cell> = point.iter().map(|&(p, v)| sweep_cell(p, v)).collect();
        row.extend([
            r.energy.into(),
            r.ergotropy.into(),
            Cell::Int(r.degeneracy as u64),
            Cell::Bool(r.cp_flag),
        ]);
        table.push(row);
    }
    Ok(table)
}

fn sweep_cell(param: Param, v: f64) -> Cell {
    if param == Param::NAtoms {
        Cell::Int(v.round() as u64)
    } else {
        Cell::Num(v)
    }
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Table> {
    let spec = cfg.model_spec(&[])?;
    if spec.n_atoms > SPECTRUM_MAX_ATOMS {
        return Err(CliError::Size(format!(
            "spectrum is limited to {SPECTRUM_MAX_ATOMS} atoms, got {}",
            spec.n_atoms
        )));
    }
    let gen = build(ModelKind::Collective, &spec)?;
    let mut table = Table::new(["re_lambda", "im_lambda"]);
    for z in spectrum(&gen)? {
        table.push(vec![z.re.into(), z.im.into()]);
    }
    Ok(table)
}

/// Phase label of one (Ω, g) point. The ξ = 0 line is labelled
/// `degenerate` regardless of Ω.
fn phase_row(p: &MeanFieldParams) -> Result<Vec<Cell>> {
    let pt = classify_phase(p)?;
    let label = if pt.degenerate { "degenerate" } else { pt.phase.label() };
    Ok(vec![
        pt.omega.into(),
        pt.g.into(),
        Cell::Text(label.to_string()),
        pt.omega_cri.into(),
        pt.e_ss.into(),
    ])
}

pub fn cmd_phase_diagram(cfg: &RunConfig, jobs: usize) -> Result<Table> {
    let grid = cfg.grid()?;
    let rows = par_map(&grid, jobs, |point| phase_row(&cfg.meanfield_params(point)?))?;
    let mut table = Table::new(["omega", "g", "phase", "omega_cri", "e_ss"]);
    for row in rows {
        table.push(row);
    }
    // the critical line Ω = nΓ|ξ|/4 as its own series, one point per g
    let gs: Vec<f64> = match cfg.sweep.iter().find(|a| a.name == Param::G) {
        Some(axis) => axis.values(),
        None => vec![cfg.spec.g],
    };
    for g in gs {
        let mut p = cfg.meanfield_params(&[(Param::G, g)])?;
        p.omega = p.omega_cri();
        let pt = classify_phase(&p)?;
        table.push(vec![
            pt.omega_cri.into(),
            g.into(),
            Cell::Text("boundary".into()),
            pt.omega_cri.into(),
            pt.e_ss.into(),
        ]);
    }
    Ok(table)
}
