//! Pointwise unit fields: Euler–Lagrange residual, second variation at `±n`
//! and a projected explicit gradient flow.
//!
//! The flow minimizes the band-truncated energy
//!
//! ```text
//! E(u) = Σₖ Σ n* ĉₖ(n,j)² + κ ∫ (u·n)²
//! ```
//!
//! where `ĉₖ` are the scalar-harmonic coefficients of the Cartesian component
//! `uₖ` up to the band limit. The grid carries more samples than there are
//! harmonics below the band, and the part of `uₖ` the transform cannot see
//! would otherwise cost nothing. Renormalization feeds that part, so it is
//! charged as if it sat at degree `N`: the energy adds `N(N+1)` times the
//! squared norm of `uₖ − P_N uₖ`. For band-limited fields nothing changes.
//! The nodal L² gradient of this energy is exactly `2(−Δ*_N u) + 2κ(u·n)n`,
//! so the explicit step is a genuine descent step for `dt < 1/(N(N+1))`.

use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::grid::{
    check_same_grid, dirichlet_energy_scalar_route, neg_laplacian, Grid, SampledVectorField,
    ScalarTable,
};
use crate::legendre::DegreeOrder;
use crate::par::Execution;
use crate::vsh::{eval_vsh, ModeIndex};
use crate::{n_star, Error, Result, Vec3, FOUR_PI};

/// Allowed deviation `| |u| − 1 |` for inputs declared unit.
pub const UNIT_TOLERANCE: f64 = 1e-10;

/// Allowed `|v·n|` for inputs declared tangential.
pub const TANGENT_TOLERANCE: f64 = 1e-10;

/// Relative energy increase per step that aborts the flow.
pub const ENERGY_TOLERANCE: f64 = 1e-10;

/// Distance below which a trajectory counts as sitting on `±n`.
pub const STATIONARY_DISTANCE: f64 = 1e-9;

fn check_unit(u: &SampledVectorField) -> Result<()> {
    let dev = u
        .values
        .iter()
        .map(|v| (v.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    if dev > UNIT_TOLERANCE || !dev.is_finite() {
        return Err(Error::NonUnitField(dev));
    }
    Ok(())
}

/// Rescales every sample to unit length.
pub fn normalize_pointwise(u: &SampledVectorField) -> Result<SampledVectorField> {
    let mut values = Vec::with_capacity(u.values.len());
    for v in &u.values {
        let len = v.norm();
        if !(len > 0.0 && len.is_finite()) {
            return Err(Error::Domain(format!(
                "cannot normalize a sample of length {len}"
            )));
        }
        values.push(v / len);
    }
    SampledVectorField::new(u.grid.clone(), values)
}

/// `w − (w·u)u` pointwise.
pub fn project_tangent(u: &SampledVectorField, w: &SampledVectorField) -> Result<SampledVectorField> {
    check_same_grid(&u.grid, &w.grid)?;
    let values = u
        .values
        .iter()
        .zip(&w.values)
        .map(|(a, b)| b - a * a.dot(b))
        .collect();
    SampledVectorField::new(u.grid.clone(), values)
}

/// Dirichlet energy and `−Δ*_N u` with unresolved content charged at degree `N`.
fn penalized_laplacian(
    u: &SampledVectorField,
    table: &ScalarTable,
    exec: Execution,
) -> Result<(f64, SampledVectorField)> {
    check_same_grid(&u.grid, &table.grid)?;
    let lambda = n_star(table.band);
    let mut energy = 0.0;
    let mut comps: [Vec<f64>; 3] = Default::default();
    for (k, out) in comps.iter_mut().enumerate() {
        let comp: Vec<f64> = u.values.iter().map(|v| v[k]).collect();
        let mut c = table.analyze(&comp, exec)?;
        let sq: f64 = u.grid.nodes().zip(&comp).map(|(n, x)| n.weight * x * x).sum();
        energy += lambda * sq;
        for (idx, v) in c.coeffs.iter_mut().enumerate() {
            let shift = n_star(DegreeOrder::from_index(idx).n) - lambda;
            energy += shift * *v * *v;
            *v *= shift;
        }
        let mut values = table.synthesize(&c, exec);
        for (v, x) in values.iter_mut().zip(&comp) {
            *v += lambda * x;
        }
        *out = values;
    }
    let field = SampledVectorField::from_components(u.grid.clone(), [&comps[0], &comps[1], &comps[2]])?;
    Ok((energy, field))
}

/// `L + κ(u·n)n` for a Laplacian sample `L`.
fn effective_field(
    u: &SampledVectorField,
    kappa: f64,
    lap: &SampledVectorField,
    exec: Execution,
) -> Result<SampledVectorField> {
    let grid = &u.grid;
    let values = exec.map_range(grid.len(), |k| {
        let n = grid.node(k).normal();
        lap.values[k] + n * (kappa * u.values[k].dot(&n))
    });
    SampledVectorField::new(grid.clone(), values)
}

fn cross_pointwise(u: &SampledVectorField, h: &SampledVectorField) -> Result<SampledVectorField> {
    let values = u.values.iter().zip(&h.values).map(|(a, b)| a.cross(b)).collect();
    SampledVectorField::new(u.grid.clone(), values)
}

/// `u × (−Δ*u + κ(u·n)n)` with the Laplacian truncated at `band`.
pub fn el_residual(u: &SampledVectorField, kappa: f64, band: usize) -> Result<SampledVectorField> {
    check_unit(u)?;
    u.grid.require_band(band, "Euler-Lagrange residual")?;
    let exec = Execution::default();
    let table = ScalarTable::new(u.grid.clone(), band)?;
    let lap = neg_laplacian(u, &table, exec)?;
    let h = effective_field(u, kappa, &lap, exec)?;
    cross_pointwise(u, &h)
}

/// The flow energy: truncated Dirichlet energy, the charge on unresolved
/// content, and `κ ∫ (u·n)²`.
pub fn saturated_energy(
    u: &SampledVectorField,
    kappa: f64,
    table: &ScalarTable,
    exec: Execution,
) -> Result<f64> {
    let (d, _) = penalized_laplacian(u, table, exec)?;
    Ok(d + kappa * u.normal_energy())
}

/// `∫ |∇*v|² − (κ+2) ∫ |v|²` for a tangential `v`.
///
/// This is the coefficient of `ε²` in the energy of `normalize(±n + εv)`, so it
/// equals half the second derivative in `ε`. The Dirichlet part uses the
/// largest band the grid resolves.
pub fn second_variation_normal(v: &SampledVectorField, kappa: f64) -> Result<f64> {
    let off = v
        .grid
        .nodes()
        .zip(&v.values)
        .map(|(n, w)| w.dot(&n.normal()).abs())
        .fold(0.0, f64::max);
    if off > TANGENT_TOLERANCE || !off.is_finite() {
        return Err(Error::NonTangential(off));
    }
    let dirichlet = dirichlet_energy_scalar_route(v, v.grid.max_band())?;
    Ok(dirichlet - (kappa + 2.0) * v.norm_sq())
}

/// `(‖u − n‖, ‖u + n‖) / √4π`.
pub fn distances_to_normal(u: &SampledVectorField) -> (f64, f64) {
    let (mut plus, mut minus) = (0.0, 0.0);
    for (node, v) in u.grid.nodes().zip(&u.values) {
        let n = node.normal();
        plus += node.weight * (v - n).norm_squared();
        minus += node.weight * (v + n).norm_squared();
    }
    ((plus / FOUR_PI).sqrt(), (minus / FOUR_PI).sqrt())
}

/// `normalize(n + ε √4π y⁽²⁾₁,₀)`, the unstable direction for `κ > 0`.
pub fn perturbed_normal(grid: Arc<Grid>, eps: f64) -> Result<SampledVectorField> {
    let mode = ModeIndex::new(2, 1, 0)?;
    let scale = eps * FOUR_PI.sqrt();
    let mut values = Vec::with_capacity(grid.len());
    for node in grid.nodes() {
        values.push(node.normal() + eval_vsh(mode, node.phi, node.t)? * scale);
    }
    normalize_pointwise(&SampledVectorField::new(grid, values)?)
}

#[derive(Clone, Debug)]
pub struct FlowState {
    pub field: SampledVectorField,
    pub kappa: f64,
    pub band: usize,
    pub step: usize,
    pub energy: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlowSample {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    pub dist_to_plus_n: f64,
    pub dist_to_minus_n: f64,
    pub residual_max: f64,
}

impl FlowSample {
    pub fn distance(&self) -> f64 {
        self.dist_to_plus_n.min(self.dist_to_minus_n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// Never left `±n` beyond [`STATIONARY_DISTANCE`].
    Stationary,
    /// Ended no farther from `±n` than it started.
    Returned,
    /// Ended farther from `±n` than it started.
    Escaped,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Stationary => "stationary",
            Verdict::Returned => "returned",
            Verdict::Escaped => "escaped",
        })
    }
}

/// Explicit projected gradient descent with pointwise renormalization.
pub struct FlowSolver {
    table: ScalarTable,
    exec: Execution,
    dt: f64,
    state: FlowState,
    /// Effective field of the current state.
    h: SampledVectorField,
    residual_max: f64,
}

impl FlowSolver {
    pub fn new(u0: &SampledVectorField, kappa: f64, dt: f64, band: usize, exec: Execution) -> Result<Self> {
        check_unit(u0)?;
        if !kappa.is_finite() {
            return Err(Error::InvalidParameter(format!("kappa must be finite, got {kappa}")));
        }
        if band == 0 {
            return Err(Error::InvalidParameter("flow band limit must be at least 1".into()));
        }
        let bound = 1.0 / crate::n_star(band);
        if !(dt > 0.0 && dt < bound) {
            return Err(Error::InvalidParameter(format!(
                "dt = {dt} outside the stable range (0, {bound}) for band {band}"
            )));
        }
        u0.grid.require_band(band, "gradient flow")?;
        let table = ScalarTable::with_execution(u0.grid.clone(), band, exec)?;
        let field = normalize_pointwise(u0)?;
        let h = SampledVectorField::zeros(field.grid.clone());
        let mut solver = Self {
            table,
            exec,
            dt,
            state: FlowState {
                field,
                kappa,
                band,
                step: 0,
                energy: 0.0,
            },
            h,
            residual_max: 0.0,
        };
        let (energy, h) = solver.evaluate(&solver.state.field)?;
        solver.state.energy = energy;
        solver.residual_max = cross_pointwise(&solver.state.field, &h)?.max_norm();
        solver.h = h;
        Ok(solver)
    }

    pub fn state(&self) -> &FlowState {
        &self.state
    }

    pub fn into_state(self) -> FlowState {
        self.state
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Energy and effective field of `u`.
    fn evaluate(&self, u: &SampledVectorField) -> Result<(f64, SampledVectorField)> {
        let (d, lap) = penalized_laplacian(u, &self.table, self.exec)?;
        let h = effective_field(u, self.state.kappa, &lap, self.exec)?;
        Ok((d + self.state.kappa * u.normal_energy(), h))
    }

    pub fn sample(&self) -> FlowSample {
        let (plus, minus) = distances_to_normal(&self.state.field);
        FlowSample {
            step: self.state.step,
            time: self.state.step as f64 * self.dt,
            energy: self.state.energy,
            dist_to_plus_n: plus,
            dist_to_minus_n: minus,
            residual_max: self.residual_max,
        }
    }

    /// One step `u ← normalize(u − dt·P_u(∇E))`.
    pub fn step(&mut self) -> Result<FlowSample> {
        let u = &self.state.field;
        let h = &self.h;
        let dt2 = 2.0 * self.dt;
        let values = self.exec.map_range(u.values.len(), |k| {
            let (a, g) = (u.values[k], h.values[k]);
            let moved = a - (g - a * a.dot(&g)) * dt2;
            moved / moved.norm()
        });
        let next = SampledVectorField::new(u.grid.clone(), values)?;
        let (energy, h_next) = self.evaluate(&next)?;
        let increase = energy - self.state.energy;
        let step = self.state.step + 1;
        if increase > ENERGY_TOLERANCE * self.state.energy.abs().max(1.0) {
            return Err(Error::EnergyIncrease { step, increase });
        }
        self.residual_max = cross_pointwise(&next, &h_next)?.max_norm();
        self.h = h_next;
        self.state.field = next;
        self.state.energy = energy;
        self.state.step = step;
        Ok(self.sample())
    }
}

#[derive(Clone, Debug)]
pub struct FlowSummary {
    /// Initial sample followed by one sample per step.
    pub samples: Vec<FlowSample>,
    pub final_state: FlowState,
    pub verdict: Verdict,
}

impl FlowSummary {
    pub fn initial(&self) -> &FlowSample {
        &self.samples[0]
    }

    pub fn last(&self) -> &FlowSample {
        self.samples.last().expect("at least the initial sample")
    }

    pub fn max_distance(&self) -> f64 {
        self.samples.iter().map(FlowSample::distance).fold(0.0, f64::max)
    }

    /// Writes `step,time,energy,dist_to_plus_n,dist_to_minus_n,residual_max`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.samples {
            w.serialize(s)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn verdict(samples: &[FlowSample]) -> Verdict {
    let max = samples.iter().map(FlowSample::distance).fold(0.0, f64::max);
    let first = samples[0].distance();
    let last = samples[samples.len() - 1].distance();
    if max <= STATIONARY_DISTANCE {
        Verdict::Stationary
    } else if last <= first {
        Verdict::Returned
    } else {
        Verdict::Escaped
    }
}

/// Runs `steps` explicit steps from `u0` with the default execution policy.
pub fn gradient_flow(
    u0: &SampledVectorField,
    kappa: f64,
    dt: f64,
    steps: usize,
    band: usize,
) -> Result<FlowSummary> {
    gradient_flow_with(u0, kappa, dt, steps, band, Execution::default())
}

pub fn gradient_flow_with(
    u0: &SampledVectorField,
    kappa: f64,
    dt: f64,
    steps: usize,
    band: usize,
    exec: Execution,
) -> Result<FlowSummary> {
    let mut solver = FlowSolver::new(u0, kappa, dt, band, exec)?;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(solver.sample());
    for _ in 0..steps {
        samples.push(solver.step()?);
    }
    let verdict = verdict(&samples);
    Ok(FlowSummary {
        samples,
        final_state: solver.into_state(),
        verdict,
    })
}

/// Largest pointwise `| |u| − 1 |`.
pub fn max_unit_deviation(u: &SampledVectorField) -> f64 {
    u.values
        .iter()
        .map(|v: &Vec3| (v.norm() - 1.0).abs())
        .fold(0.0, f64::max)
}
