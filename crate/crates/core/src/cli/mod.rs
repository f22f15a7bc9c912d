//! Command-line front end: `cell`, `run`, `rescale` and `convergence`.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

pub use config::{parse_config, parse_config_str, ConfigError, RunConfig};
use output::{csv_row, to_json};

use crate::cross_section::{
    effective_stiffness, CellError, CorrectorDiagnostics, CrossSectionMesh, GeometricReport, MeshError,
};
use crate::dynamics::{self, DynamicsError, EnergyLedger, Trajectory};
use crate::material::MaterialSpec;
use crate::rescale::{self, Field3D, ManufacturedFamily, RescaleError};
use crate::rod::{RodError, RodMesh1D, RodState, RodSystem};

#[derive(Debug, Parser)]
#[command(name = "vkrod", version, about = "Von Kármán rod reduction: cell problem, rod dynamics, 3D rescaling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the cross-section cell problem and write the effective stiffness as JSON.
    Cell {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Integrate the rod dynamics; writes a trajectory CSV and `<out>.energy.csv`.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rescale a sampled 3D deformation into rod fields.
    Rescale {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Rod length `L` spanned by the slices.
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        /// Lamé parameters; when both are given the rotational stress `B^h` is appended.
        #[arg(long, requires = "mu")]
        lambda: Option<f64>,
        #[arg(long, requires = "lambda")]
        mu: Option<f64>,
    },
    /// Run a manufactured convergence study and write the fitted rates.
    Convergence {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("io: {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("mesh: {0}")]
    Mesh(#[from] MeshError),
    #[error("cell: {0}")]
    Cell(#[from] CellError),
    #[error("rod: {0}")]
    Rod(#[from] RodError),
    #[error("dynamics: {0}")]
    Dynamics(#[from] DynamicsError),
    #[error("rescale: {0}")]
    Rescale(#[from] RescaleError),
}

impl CliError {
    /// Process exit status; 2 is reserved for usage errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Mesh(_) => 5,
            CliError::Cell(_) => 6,
            CliError::Rod(_) => 7,
            CliError::Dynamics(_) => 8,
            CliError::Rescale(_) => 9,
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn invalid(path: &Path, violation: String) -> CliError {
    CliError::Config(ConfigError::Invalid {
        path: path.display().to_string(),
        violations: vec![violation],
    })
}

#[derive(Serialize)]
struct CellReport<'a> {
    /// Rows of `Q_eff` over `(r, κ₂, κ₃, τ)`.
    stiffness: Vec<[f64; 4]>,
    /// Moments of the normalized section.
    geometry: GeometricReport,
    /// Transformation applied to the input section.
    normalization: GeometricReport,
    coupling_ratio: f64,
    diagnostics: &'a CorrectorDiagnostics,
}

/// Writes the cell report for a parsed configuration.
pub fn cell(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let (mesh, normalization) = cfg.section.build(&cfg.base_dir)?;
    let (q, basis) = effective_stiffness(&mesh, &cfg.material_model())?;
    let m = q.matrix();
    let report = CellReport {
        stiffness: (0..4).map(|i| [m[(i, 0)], m[(i, 1)], m[(i, 2)], m[(i, 3)]]).collect(),
        geometry: mesh.moments(),
        normalization,
        coupling_ratio: q.coupling_ratio(),
        diagnostics: basis.diagnostics(),
    };
    write_file(out, &to_json(&report))
}

/// Rod system and initial state described by a configuration.
pub fn build_rod(cfg: &RunConfig, path: &Path) -> Result<(RodSystem, RodState), CliError> {
    let rod = cfg
        .rod
        .as_ref()
        .ok_or_else(|| invalid(path, "rod: required for `run`".into()))?;
    let (mesh, _) = cfg.section.build(&cfg.base_dir)?;
    let (q, _) = effective_stiffness(&mesh, &cfg.material_model())?;
    let system = RodSystem::new(RodMesh1D::new(rod.length, rod.n_elem)?, &q, rod.kirchhoff)?;
    let state = initial_state(&system, cfg)?;
    Ok((system, state))
}

fn initial_state(system: &RodSystem, cfg: &RunConfig) -> Result<RodState, CliError> {
    let mesh = system.mesh();
    let init = &cfg.initial;
    let mut state = RodState::zeros(mesh);
    state.v2 = mesh.hermite_interpolate(&init.v2);
    state.v3 = mesh.hermite_interpolate(&init.v3);
    state.vel2 = system.project_l2(&init.vel2);
    state.vel3 = system.project_l2(&init.vel3);
    if let Some(mode) = &init.mode {
        let spectrum = system.linearized_spectrum(mode.index, mode.component)?;
        let v = &spectrum.modes[mode.index - 1];
        let m = mesh.hermite_dim();
        let (v2, v3) = v.split_at(m);
        let mut peak = 0.0f64;
        for x in mesh.nodes() {
            for c in [v2, v3] {
                let y = mesh.hermite_eval(c, 0, x);
                if y.abs() > peak.abs() {
                    peak = y;
                }
            }
        }
        let scale = if peak != 0.0 { mode.amplitude / peak } else { 0.0 };
        for (s, c) in state.v2.iter_mut().zip(v2) {
            *s += scale * c;
        }
        for (s, c) in state.v3.iter_mut().zip(v3) {
            *s += scale * c;
        }
    }
    Ok(state)
}

const TRAJECTORY_HEADER: &str = "t,x1,u,v2,v3,w,vel2,vel3,N,T\n";
const LEDGER_HEADER: &str = "t,kinetic,elastic,work\n";

/// One row per snapshot and mesh node.
pub fn trajectory_csv(system: &RodSystem, traj: &Trajectory) -> String {
    let mesh = system.mesh();
    let nodes = mesh.nodes();
    let mut s = String::from(TRAJECTORY_HEADER);
    for snap in &traj.snapshots {
        let st = &snap.state;
        let z = system.pack(&st.bending(), &[st.u.as_slice(), st.w.as_slice()].concat());
        let forces = system.nodal_forces(&z);
        for (i, &x) in nodes.iter().enumerate() {
            s.push_str(&csv_row(&[
                snap.t,
                x,
                mesh.p2_eval(&st.u, 0, x),
                mesh.hermite_eval(&st.v2, 0, x),
                mesh.hermite_eval(&st.v3, 0, x),
                mesh.p2_eval(&st.w, 0, x),
                mesh.hermite_eval(&st.vel2, 0, x),
                mesh.hermite_eval(&st.vel3, 0, x),
                forces[i][0],
                forces[i][3],
            ]));
        }
    }
    s
}

pub fn ledger_csv(ledger: &EnergyLedger) -> String {
    let mut s = String::from(LEDGER_HEADER);
    for r in &ledger.rows {
        s.push_str(&csv_row(&[r.t, r.kinetic, r.elastic, r.work()]));
    }
    s
}

/// `<out>.energy.csv` next to `out`.
pub fn ledger_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".energy.csv");
    PathBuf::from(name)
}

/// Runs the dynamics and writes both artifacts. Returns the first linearized period, if defined.
pub fn run(cfg: &RunConfig, path: &Path, out: &Path) -> Result<Option<f64>, CliError> {
    let sim = cfg
        .simulation()
        .ok_or_else(|| invalid(path, "dynamics: required for `run`".into()))?;
    let (system, state) = build_rod(cfg, path)?;
    let lowest = system.linearized_spectrum(1, None)?.values[0];
    let period = (lowest > 0.0).then(|| 2.0 * std::f64::consts::PI / lowest.sqrt());
    let (traj, ledger) = dynamics::run(&system, &state, &sim, &cfg.forcing_model(), &cfg.rho_sigma())?;
    write_file(out, &trajectory_csv(&system, &traj))?;
    write_file(&ledger_path(out), &ledger_csv(&ledger))?;
    Ok(period)
}

/// Rescaled rod fields per slice, with the slice rotation generator, the axial strain fit and
/// the orthogonality defect of the rotation. With a material, `B^h` is appended.
pub fn rescale_csv(field: &Field3D, material: Option<&MaterialSpec>) -> Result<String, CliError> {
    let r = rescale::rescaled_displacements(field)?;
    let sa = rescale::slice_rotations(field)?;
    let b = match material {
        Some(spec) => Some(rescale::rotational_stress_b(field, &spec.build().map_err(RescaleError::from)?)?),
        None => None,
    };
    let mut s = String::from("x1,u,v2,v3,w,A21,A31,A32,G11_c0,G11_c2,G11_c3,orth_defect");
    if b.is_some() {
        for i in 1..=3 {
            for j in 1..=3 {
                s.push_str(&format!(",B{i}{j}"));
            }
        }
    }
    s.push('\n');
    for i in 0..r.x1.len() {
        let a = &sa.a[i];
        let rot = &sa.rotations.rotations[i];
        let defect = (rot.transpose() * rot - nalgebra::Matrix3::identity()).amax();
        let fit = sa.axial_fit[i];
        let mut row = vec![
            r.x1[i], r.u[i], r.v2[i], r.v3[i], r.w[i], a[(1, 0)], a[(2, 0)], a[(2, 1)], fit[0], fit[1], fit[2], defect,
        ];
        if let Some(b) = &b {
            for p in 0..3 {
                for q in 0..3 {
                    row.push(b[i][(p, q)]);
                }
            }
        }
        s.push_str(&csv_row(&row));
    }
    Ok(s)
}

fn threads_from_env() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("VKROD_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| invalid(Path::new("VKROD_THREADS"), format!("expected a positive integer, got `{raw}`")))?;
    // A pool may already exist when called repeatedly in one process; the first one wins.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    threads_from_env()?;
    match cli.command {
        Command::Cell { config, out } => cell(&parse_config(&config)?, &out),
        Command::Run { config, out } => {
            let cfg = parse_config(&config)?;
            if let Some(period) = run(&cfg, &config, &out)? {
                eprintln!("first linearized period: {period:.6e}");
            }
            Ok(())
        }
        Command::Rescale {
            field,
            mesh,
            out,
            length,
            lambda,
            mu,
        } => {
            let mesh = CrossSectionMesh::load(&mesh)?;
            let field = Field3D::load(&field, mesh, length)?;
            let material = lambda.zip(mu).map(|(l, m)| MaterialSpec::isotropic(l, m));
            write_file(&out, &rescale_csv(&field, material.as_ref())?)
        }
        Command::Convergence { family, out } => {
            let fam = ManufacturedFamily::load(&family)?;
            let base = family.parent().unwrap_or(Path::new("."));
            let table = fam.run(base)?;
            write_file(&out, &table.to_csv())
        }
    }
}

/// Parses `args` (including the program name), runs, and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("vkrod: {e}");
            e.exit_code()
        }
    }
}
