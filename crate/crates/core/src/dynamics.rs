//! Implicit-midpoint time integration of the transverse wave equations with slaved axial
//! and torsion fields, plus an energy ledger.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::{Profile, ProfileError, SpaceTimeField};
use crate::rod::{RodError, RodState, RodSystem};
use crate::sparse::{SparseError, SparseMatrix};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid simulation parameter `{name}`: {reason}")]
    Config { name: &'static str, reason: String },
    #[error(transparent)]
    Rod(#[from] RodError),
    #[error("invalid field: {0}")]
    Profile(#[from] ProfileError),
    #[error("linear solve failed at t = {t}: {source}")]
    Solve { t: f64, source: SparseError },
    #[error("Newton did not converge at t = {t} after {iterations} iterations (last update {update:e}); reduce dt")]
    Newton { t: f64, iterations: usize, update: f64 },
}

fn default_newton_tol() -> f64 {
    1e-12
}

fn default_newton_max() -> usize {
    25
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max")]
    pub newton_max: usize,
    #[serde(default = "default_stride")]
    pub output_stride: usize,
}

impl SimulationConfig {
    pub fn new(dt: f64, t_final: f64) -> Self {
        Self {
            dt,
            t_final,
            newton_tol: default_newton_tol(),
            newton_max: default_newton_max(),
            output_stride: default_stride(),
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |name, reason: &str| {
            Err(DynamicsError::Config {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt", "must be positive");
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return bad("t_final", "must be non-negative");
        }
        if !(self.newton_tol.is_finite() && self.newton_tol > 0.0) {
            return bad("newton_tol", "must be positive");
        }
        if self.newton_max == 0 {
            return bad("newton_max", "must be at least 1");
        }
        if self.output_stride == 0 {
            return bad("output_stride", "must be at least 1");
        }
        Ok(())
    }

    /// Number of steps; the last step is shortened to land on `t_final`.
    pub fn steps(&self) -> usize {
        let n = self.t_final / self.dt;
        let r = n.round();
        if (n - r).abs() <= 1e-9 * n.max(1.0) {
            r as usize
        } else {
            n.ceil() as usize
        }
    }
}

/// Transverse body forces. The axial component is zero by construction.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingModel {
    #[serde(default)]
    pub f2: SpaceTimeField,
    #[serde(default)]
    pub f3: SpaceTimeField,
}

/// Dissipation-channel fields entering the weak form as `(ρ_k, φ′)` and the torsion source `σ`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoSigma {
    #[serde(default)]
    pub rho2: SpaceTimeField,
    #[serde(default)]
    pub rho3: SpaceTimeField,
    #[serde(default)]
    pub sigma: SpaceTimeField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LedgerRow {
    pub t: f64,
    pub kinetic: f64,
    pub elastic: f64,
    /// Cumulative `∫∫ f·∂ₜv`.
    pub external_work: f64,
    /// Cumulative work of the `ρ` and `σ` channels.
    pub channel_work: f64,
}

impl LedgerRow {
    pub fn total_energy(&self) -> f64 {
        self.kinetic + self.elastic
    }

    pub fn work(&self) -> f64 {
        self.external_work + self.channel_work
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EnergyLedger {
    pub rows: Vec<LedgerRow>,
}

impl EnergyLedger {
    /// `max_n |E(tₙ) − E(0)| / E(0)`.
    pub fn relative_drift(&self) -> f64 {
        let Some(first) = self.rows.first() else { return 0.0 };
        let e0 = first.total_energy();
        let d = self
            .rows
            .iter()
            .map(|r| (r.total_energy() - e0).abs())
            .fold(0.0, f64::max);
        if e0 == 0.0 {
            d
        } else {
            d / e0.abs()
        }
    }

    /// `max_n |E(tₙ) − E(0) − Wₙ|`.
    pub fn balance_defect(&self) -> f64 {
        let Some(first) = self.rows.first() else { return 0.0 };
        let e0 = first.total_energy();
        self.rows
            .iter()
            .map(|r| (r.total_energy() - e0 - r.work()).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub state: RodState,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
}

/// Load vectors assembled once in space, scaled by their time profiles.
struct Loads {
    f: [(Vec<f64>, Profile); 2],
    rho: [(Vec<f64>, Profile); 2],
    sigma: Option<(Vec<f64>, Profile)>,
}

impl Loads {
    fn new(system: &RodSystem, forcing: &ForcingModel, rho_sigma: &RhoSigma) -> Result<Self, DynamicsError> {
        for field in [&forcing.f2, &forcing.f3, &rho_sigma.rho2, &rho_sigma.rho3, &rho_sigma.sigma] {
            field.validate()?;
        }
        let value = |f: &SpaceTimeField| (system.load_value(&f.space), f.time.clone());
        let slope = |f: &SpaceTimeField| (system.load_slope(&f.space), f.time.clone());
        Ok(Self {
            f: [value(&forcing.f2), value(&forcing.f3)],
            rho: [slope(&rho_sigma.rho2), slope(&rho_sigma.rho3)],
            sigma: (!rho_sigma.sigma.is_zero())
                .then(|| (system.load_p2(&rho_sigma.sigma.space), rho_sigma.sigma.time.clone())),
        })
    }

    fn concat(parts: &[(Vec<f64>, Profile); 2], t: f64) -> Vec<f64> {
        parts
            .iter()
            .flat_map(|(v, tp)| {
                let s = tp.value(t);
                v.iter().map(move |x| x * s)
            })
            .collect()
    }

    /// `(f, φ)` for `[v₂ | v₃]` test functions.
    fn external(&self, t: f64) -> Vec<f64> {
        Self::concat(&self.f, t)
    }

    /// `(ρ, φ′)`.
    fn channel(&self, t: f64) -> Vec<f64> {
        Self::concat(&self.rho, t)
    }

    fn sigma(&self, t: f64) -> Option<Vec<f64>> {
        self.sigma.as_ref().map(|(v, tp)| {
            let s = tp.value(t);
            v.iter().map(|x| x * s).collect()
        })
    }
}

struct StepWork {
    external: f64,
    channel: f64,
}

struct Integrator<'a> {
    system: &'a RodSystem,
    cfg: SimulationConfig,
    loads: Loads,
    mass: Vec<(usize, usize, f64)>,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl<'a> Integrator<'a> {
    fn new(
        system: &'a RodSystem,
        cfg: SimulationConfig,
        forcing: &ForcingModel,
        rho_sigma: &RhoSigma,
    ) -> Result<Self, DynamicsError> {
        cfg.validate()?;
        let m = system.mesh().hermite_dim();
        let mut mass = Vec::new();
        for block in 0..2 {
            for i in 0..m {
                for j in 0..m {
                    let v = system.mass()[(i, j)];
                    if v != 0.0 {
                        mass.push((block * m + i, block * m + j, 2.0 * v));
                    }
                }
            }
        }
        Ok(Self {
            system,
            cfg,
            loads: Loads::new(system, forcing, rho_sigma)?,
            mass,
        })
    }

    /// Unknowns `y = [Δ | s_mid]` with `Δ = v_{n+1} − v_n`. Equations
    /// `2M(Δ − dt·vel) + dt²(∇_v J + (ρ,φ′) − (f,φ)) = 0` and `2dt²(∇_s J + (σ,·)) = 0`
    /// at the midpoint `v_n + Δ/2`; the second row is scaled so that the Jacobian is symmetric.
    fn step(&self, state: &RodState, t: f64, dt: f64) -> Result<(RodState, StepWork), DynamicsError> {
        let sys = self.system;
        let p = sys.mesh().p2_dim();
        let nb = sys.dim_bending();
        let ns = sys.dim_static();
        let n = nb + ns;
        let v0 = state.bending();
        let vel0 = state.velocity();
        let t_mid = t + 0.5 * dt;
        let f = self.loads.external(t_mid);
        let rho = self.loads.channel(t_mid);
        let sigma = self.loads.sigma(t_mid);
        let dt2 = dt * dt;

        let mut y: Vec<f64> = vel0.iter().map(|x| dt * x).collect();
        y.extend(state.u.iter().chain(&state.w));
        // Updates are measured against the state as well as the unknowns, since the
        // increment alone can be arbitrarily small (e.g. starting from rest).
        let state_scale = max_abs(&v0).max(max_abs(&y));
        let mut converged = false;
        let mut update = f64::INFINITY;
        let mut iterations = 0;
        while iterations < self.cfg.newton_max {
            iterations += 1;
            let z: Vec<f64> = (0..n)
                .map(|i| if i < nb { v0[i] + 0.5 * y[i] } else { y[i] })
                .collect();
            let (_, g) = sys.energy_gradient(&z);
            let mdelta = sys.mass_apply(&(0..nb).map(|i| y[i] - dt * vel0[i]).collect::<Vec<_>>());
            let mut rhs = vec![0.0; n];
            for i in 0..nb {
                rhs[i] = -(2.0 * mdelta[i] + dt2 * (g[i] + rho[i] - f[i]));
            }
            for i in 0..ns {
                let src = match (&sigma, i >= p) {
                    (Some(s), true) => s[i - p],
                    _ => 0.0,
                };
                rhs[nb + i] = -2.0 * dt2 * (g[nb + i] + src);
            }
            if rhs.iter().all(|r| *r == 0.0) {
                converged = true;
                break;
            }
            let mut trips = self.mass.clone();
            let mut hess = Vec::new();
            sys.hessian_triplets(&z, &mut hess);
            trips.extend(hess.into_iter().map(|(i, j, v)| {
                let scale = match (i < nb, j < nb) {
                    (true, true) => 0.5 * dt2,
                    (false, false) => 2.0 * dt2,
                    _ => dt2,
                };
                (i, j, scale * v)
            }));
            let jac = SparseMatrix::from_triplets(n, trips);
            let delta = jac
                .solve(&[rhs], 1)
                .map_err(|source| DynamicsError::Solve { t, source })?
                .remove(0);
            for (yi, di) in y.iter_mut().zip(&delta) {
                *yi += di;
            }
            update = max_abs(&delta);
            if update <= self.cfg.newton_tol * max_abs(&y).max(state_scale) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(DynamicsError::Newton { t, iterations, update });
        }

        let m = sys.mesh().hermite_dim();
        let v1: Vec<f64> = (0..nb).map(|i| v0[i] + y[i]).collect();
        let vel1: Vec<f64> = (0..nb).map(|i| 2.0 * y[i] / dt - vel0[i]).collect();
        let s1 = sys.static_unknowns(&v1, self.loads.sigma(t + dt).as_deref());
        let mut work = StepWork {
            external: dot(&y[..nb], &f),
            channel: -dot(&y[..nb], &rho),
        };
        if let Some(s) = &sigma {
            let dw: Vec<f64> = (0..p).map(|i| s1[p + i] - state.w[i]).collect();
            work.channel -= dot(s, &dw);
        }
        let next = RodState {
            u: s1[..p].to_vec(),
            w: s1[p..].to_vec(),
            v2: v1[..m].to_vec(),
            v3: v1[m..].to_vec(),
            vel2: vel1[..m].to_vec(),
            vel3: vel1[m..].to_vec(),
        };
        Ok((next, work))
    }

    fn row(&self, t: f64, state: &RodState, external_work: f64, channel_work: f64) -> LedgerRow {
        let (kinetic, elastic) = energy(self.system, state);
        LedgerRow {
            t,
            kinetic,
            elastic,
            external_work,
            channel_work,
        }
    }
}

/// Re-solves the static fields of `state` at time `t`.
pub fn enslave(
    system: &RodSystem,
    state: &mut RodState,
    rho_sigma: &RhoSigma,
    t: f64,
) -> Result<(), DynamicsError> {
    state.check(system.mesh())?;
    let sigma = (!rho_sigma.sigma.is_zero()).then(|| {
        let s = rho_sigma.sigma.time.value(t);
        system
            .load_p2(&rho_sigma.sigma.space)
            .into_iter()
            .map(|x| x * s)
            .collect::<Vec<_>>()
    });
    let st = system.solve_static(&state.v2, &state.v3, sigma.as_deref())?;
    state.u = st.u;
    state.w = st.w;
    Ok(())
}

/// One implicit-midpoint step from time `t`. A negative `cfg.dt` is not allowed; see
/// [`step_signed`] for stepping backwards.
pub fn step(
    system: &RodSystem,
    state: &RodState,
    t: f64,
    cfg: &SimulationConfig,
    forcing: &ForcingModel,
    rho_sigma: &RhoSigma,
) -> Result<RodState, DynamicsError> {
    step_signed(system, state, t, cfg.dt, cfg, forcing, rho_sigma)
}

/// Like [`step`] with an explicit, possibly negative, timestep.
pub fn step_signed(
    system: &RodSystem,
    state: &RodState,
    t: f64,
    dt: f64,
    cfg: &SimulationConfig,
    forcing: &ForcingModel,
    rho_sigma: &RhoSigma,
) -> Result<RodState, DynamicsError> {
    state.check(system.mesh())?;
    let integ = Integrator::new(system, *cfg, forcing, rho_sigma)?;
    Ok(integ.step(state, t, dt)?.0)
}

/// Integrates from `t = 0` to `cfg.t_final`. The static fields of `initial` are re-solved first.
pub fn run(
    system: &RodSystem,
    initial: &RodState,
    cfg: &SimulationConfig,
    forcing: &ForcingModel,
    rho_sigma: &RhoSigma,
) -> Result<(Trajectory, EnergyLedger), DynamicsError> {
    let integ = Integrator::new(system, *cfg, forcing, rho_sigma)?;
    let mut state = initial.clone();
    enslave(system, &mut state, rho_sigma, 0.0)?;
    let steps = cfg.steps();
    let mut t = 0.0;
    let mut ext = 0.0;
    let mut chan = 0.0;
    let mut ledger = EnergyLedger {
        rows: vec![integ.row(t, &state, 0.0, 0.0)],
    };
    let mut traj = Trajectory {
        snapshots: vec![Snapshot { t, state: state.clone() }],
    };
    for k in 0..steps {
        let t_next = if k + 1 == steps {
            cfg.t_final
        } else {
            (k + 1) as f64 * cfg.dt
        };
        let (next, work) = integ.step(&state, t, t_next - t)?;
        state = next;
        t = t_next;
        ext += work.external;
        chan += work.channel;
        ledger.rows.push(integ.row(t, &state, ext, chan));
        if (k + 1) % cfg.output_stride == 0 || k + 1 == steps {
            traj.snapshots.push(Snapshot { t, state: state.clone() });
        }
    }
    Ok((traj, ledger))
}

/// `(½∫|∂ₜv|², ½∫ ε·Q ε)` using the state's own `u, w`.
pub fn energy(system: &RodSystem, state: &RodState) -> (f64, f64) {
    (
        system.kinetic_energy(&state.vel2, &state.vel3),
        system.elastic_energy(&state.v2, &state.v3, &state.u, &state.w),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cross_section::EffectiveStiffness;
    use crate::rod::RodMesh1D;

    fn system(n: usize) -> RodSystem {
        let q = EffectiveStiffness::diagonal(2.5, 0.2, 0.2, 0.16).unwrap();
        RodSystem::new(RodMesh1D::new(1.0, n).unwrap(), &q, true).unwrap()
    }

    #[test]
    fn zero_state_stays_zero() {
        let sys = system(6);
        let cfg = SimulationConfig::new(0.01, 0.05);
        let zero = RodState::zeros(sys.mesh());
        let next = step(&sys, &zero, 0.0, &cfg, &ForcingModel::default(), &RhoSigma::default()).unwrap();
        assert_eq!(next, zero);
        let (traj, ledger) = run(&sys, &zero, &cfg, &ForcingModel::default(), &RhoSigma::default()).unwrap();
        assert_eq!(traj.snapshots.len(), 6);
        assert!(ledger.rows.iter().all(|r| r.total_energy() == 0.0 && r.work() == 0.0));
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimulationConfig::new(0.0, 1.0);
        assert!(cfg.validate().is_err());
        cfg.dt = 0.3;
        cfg.validate().unwrap();
        assert_eq!(cfg.steps(), 4);
        cfg.dt = 0.25;
        assert_eq!(cfg.steps(), 4);
        cfg.output_stride = 0;
        assert!(cfg.validate().is_err());
    }
}
