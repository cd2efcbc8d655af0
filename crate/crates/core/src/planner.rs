//! Internal-force trajectory generation and the map from internal forces to
//! cable forces, cable directions, and carrier references.
//!
//! With the body held at a fixed pose, the stacked cable forces are
//! `f(t) = G^+ W + N lambda(t)`: the first term balances gravity and is
//! constant, the second reshapes individual cable forces inside `null(G)`.
//! Every carrier position then follows from the cable direction
//! `q_i = f_i / |f_i|` and the kinematic chain
//! `p_Ri = p_L + R b_i + q_i L_i`; with the body static the carrier velocity
//! reduces to `L_i * dq_i/dt`, so a carrier keeps moving exactly as long as
//! its cable keeps changing direction.

use nalgebra::{DVector, Unit};

use crate::error::{Error, Result};
use crate::geometry::{Rotation, UnitVec3, Vec3};
use crate::grasp::{GraspSystem, LoadModel, COLLINEARITY_TOL};
use crate::STANDARD_GRAVITY;

/// Force magnitudes at or below this are treated as a slack cable, N.
pub const EPS_TENSION: f64 = 1e-6;

/// Feasibility margins above this count as strictly positive, N.
pub const EPS_FEAS: f64 = 1e-6;

/// Default minimum pairwise phase separation for the cosine class, rad.
pub const DEFAULT_PHASE_SEPARATION: f64 = 0.3;

/// One cosine component of the internal-force signal:
/// `lambda(t) = lambda0 + amplitude * cos(frequency * t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaComponent {
    /// Offset of the cosine, N.
    pub lambda0: f64,
    /// Amplitude, N. Zero freezes the component at its offset.
    pub amplitude: f64,
    /// Angular frequency, rad/s.
    pub frequency: f64,
    /// Phase, rad.
    pub phase: f64,
}

impl LambdaComponent {
    fn value(&self, t: f64) -> f64 {
        self.lambda0 + self.amplitude * (self.frequency * t + self.phase).cos()
    }

    fn rate(&self, t: f64) -> f64 {
        -self.amplitude * self.frequency * (self.frequency * t + self.phase).sin()
    }
}

/// Parameterized internal-force signal `lambda(t)` with shared bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaTrajectory {
    components: Vec<LambdaComponent>,
    /// Inclusive bounds `(lower, upper)` each component must respect, N.
    bounds: (f64, f64),
}

impl LambdaTrajectory {
    /// Validates offsets against the bounds and amplitudes for finiteness.
    pub fn new(components: Vec<LambdaComponent>, bounds: (f64, f64)) -> Result<Self> {
        let (lo, hi) = bounds;
        if !(lo < hi) {
            return Err(Error::InvalidModel(format!(
                "internal force bounds must satisfy lower < upper, got ({lo}, {hi})"
            )));
        }
        for (k, c) in components.iter().enumerate() {
            if !(c.lambda0 >= lo && c.lambda0 <= hi) {
                return Err(Error::InvalidModel(format!(
                    "lambda0[{k}] = {} outside bounds ({lo}, {hi})",
                    c.lambda0
                )));
            }
            if !(c.amplitude >= 0.0) || !c.amplitude.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "amplitude[{k}] must be finite and non-negative, got {}",
                    c.amplitude
                )));
            }
            if !c.frequency.is_finite() || !c.phase.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "frequency/phase of component {k} must be finite"
                )));
            }
        }
        Ok(LambdaTrajectory { components, bounds })
    }

    /// The non-stop cosine class: common amplitude and frequency, distinct
    /// phases. Rejects phase pairs closer than `min_separation`.
    pub fn cosine_class(
        lambda0: f64,
        amplitude: f64,
        frequency: f64,
        phases: &[f64],
        bounds: (f64, f64),
        min_separation: f64,
    ) -> Result<Self> {
        for i in 0..phases.len() {
            for j in (i + 1)..phases.len() {
                if (phases[i] - phases[j]).abs() < min_separation {
                    return Err(Error::InvalidModel(format!(
                        "phases {i} and {j} are separated by {:.3} rad, below {min_separation}",
                        (phases[i] - phases[j]).abs()
                    )));
                }
            }
        }
        let components = phases
            .iter()
            .map(|&phase| LambdaComponent {
                lambda0,
                amplitude,
                frequency,
                phase,
            })
            .collect();
        Self::new(components, bounds)
    }

    pub fn components(&self) -> &[LambdaComponent] {
        &self.components
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// `(lambda(t), dlambda/dt(t))`.
    pub fn eval(&self, t: f64) -> (DVector<f64>, DVector<f64>) {
        let value = DVector::from_iterator(self.dim(), self.components.iter().map(|c| c.value(t)));
        let rate = DVector::from_iterator(self.dim(), self.components.iter().map(|c| c.rate(t)));
        (value, rate)
    }
}

/// Cable parameters; stiffness only matters to the elastic simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CableModel {
    /// Unstretched length, m.
    pub length: f64,
    /// Spring stiffness, N/m.
    pub stiffness: f64,
}

impl CableModel {
    pub fn new(length: f64, stiffness: f64) -> Result<Self> {
        if !(length > 0.0) || !(stiffness > 0.0) {
            return Err(Error::InvalidModel(format!(
                "cable length and stiffness must be positive, got ({length}, {stiffness})"
            )));
        }
        Ok(CableModel { length, stiffness })
    }
}

/// Wrench that the cables must balance when the body hangs statically:
/// `[0, 0, m g, 0, 0, 0]`.
pub fn static_wrench(load: &LoadModel, gravity: f64) -> DVector<f64> {
    let mut w = DVector::zeros(6);
    w[2] = load.mass * gravity;
    w
}

/// Same with the crate-wide standard gravity.
pub fn static_wrench_std(load: &LoadModel) -> DVector<f64> {
    static_wrench(load, STANDARD_GRAVITY)
}

/// Cable-force distribution `f = G^+ w + N lambda` over the pairwise basis.
pub fn distribute_forces(
    gs: &GraspSystem,
    wrench: &DVector<f64>,
    lambda: &DVector<f64>,
) -> Result<DVector<f64>> {
    if lambda.len() != gs.pair_basis().ncols() {
        return Err(Error::DimensionMismatch {
            expected: gs.pair_basis().ncols(),
            got: lambda.len(),
        });
    }
    if wrench.len() != 6 {
        return Err(Error::DimensionMismatch {
            expected: 6,
            got: wrench.len(),
        });
    }
    Ok(gs.balancing_forces(wrench) + gs.pair_basis() * lambda)
}

/// Cable-force rate `df/dt = N dlambda/dt`: internal forces are the only
/// time-varying term while the body pose is constant.
pub fn force_rate(gs: &GraspSystem, lambda_rate: &DVector<f64>) -> Result<DVector<f64>> {
    if lambda_rate.len() != gs.pair_basis().ncols() {
        return Err(Error::DimensionMismatch {
            expected: gs.pair_basis().ncols(),
            got: lambda_rate.len(),
        });
    }
    Ok(gs.pair_basis() * lambda_rate)
}

/// Tension and unit direction of a cable force: `f = T q`, with `q` pointing
/// from the anchor toward the carrier.
pub fn cable_state(force: &Vec3) -> Result<(f64, UnitVec3)> {
    let tension = force.norm();
    if tension <= EPS_TENSION {
        return Err(Error::SlackForce(tension));
    }
    Ok((tension, Unit::new_unchecked(force / tension)))
}

/// Splits the force rate into the tension rate (radial) and the direction
/// rate (tangential): `df = dT q + T dq`, with `q . dq = 0`.
pub fn q_rate(force: &Vec3, force_rate: &Vec3) -> Result<(f64, Vec3)> {
    let (tension, q) = cable_state(force)?;
    let q = q.into_inner();
    let tension_rate = q.dot(force_rate);
    let direction_rate = (force_rate - q * tension_rate) / tension;
    Ok((tension_rate, direction_rate))
}

/// Carrier position from the kinematic chain `p_L + R b_i + q L`.
pub fn carrier_pose(
    load_position: &Vec3,
    attitude: &Rotation,
    load: &LoadModel,
    q: &UnitVec3,
    cable_length: f64,
    cable: usize,
) -> Vec3 {
    load_position + attitude.rotate(&load.anchors[cable]) + q.into_inner() * cable_length
}

/// Carrier velocity when the body is static: only the cable direction moves.
pub fn carrier_velocity_static(direction_rate: &Vec3, cable_length: f64) -> Vec3 {
    direction_rate * cable_length
}

/// Per-cable margin of the gravity-balancing force component against the
/// plane spanned by the cable's two internal-force directions, N.
///
/// A strictly positive margin for every cable means the balancing force
/// cannot be absorbed by in-plane internal forces, which is the geometric
/// condition enabling non-stop carrier motion. Requires at least three
/// cables with non-collinear anchors; each cable must be touched by exactly
/// two selected pairs (a cycle selection).
pub fn feasibility_margins(gs: &GraspSystem, load: &LoadModel, gravity: f64) -> Result<Vec<f64>> {
    let n = load.cable_count();
    if n < 3 {
        return Err(Error::TooFewCables(n));
    }
    if load.anchors_collinear(COLLINEARITY_TOL) {
        return Err(Error::DegenerateGeometry(
            "anchors are collinear; the internal-force planes are undefined".into(),
        ));
    }
    let f0 = gs.balancing_forces(&static_wrench(load, gravity));
    let basis = gs.pair_basis();
    let mut margins = Vec::with_capacity(n);
    for cable in 0..n {
        let mut dirs: Vec<Vec3> = Vec::new();
        for (col, &(i, j)) in gs.pairs().pairs().iter().enumerate() {
            if i == cable || j == cable {
                dirs.push(basis.fixed_view::<3, 1>(3 * i, col).clone_owned());
            }
        }
        if dirs.len() != 2 {
            return Err(Error::DegenerateGeometry(format!(
                "cable {cable} is touched by {} selected pairs, expected 2 (cycle selection)",
                dirs.len()
            )));
        }
        let normal = dirs[0].cross(&dirs[1]);
        let norm = normal.norm();
        if norm < COLLINEARITY_TOL {
            return Err(Error::DegenerateGeometry(format!(
                "internal-force directions of cable {cable} are parallel"
            )));
        }
        let f0_i: Vec3 = f0.fixed_rows::<3>(3 * cable).clone_owned();
        margins.push((f0_i.dot(&normal) / norm).abs());
    }
    Ok(margins)
}

/// Everything needed to evaluate the planning chain at an arbitrary time.
#[derive(Debug, Clone, Copy)]
pub struct PlanInputs<'a> {
    pub grasp: &'a GraspSystem,
    pub load: &'a LoadModel,
    pub cables: &'a [CableModel],
    pub lambda: &'a LambdaTrajectory,
    pub gravity: f64,
}

impl<'a> PlanInputs<'a> {
    pub fn new(
        grasp: &'a GraspSystem,
        load: &'a LoadModel,
        cables: &'a [CableModel],
        lambda: &'a LambdaTrajectory,
        gravity: f64,
    ) -> Result<Self> {
        if cables.len() != load.cable_count() {
            return Err(Error::DimensionMismatch {
                expected: load.cable_count(),
                got: cables.len(),
            });
        }
        if lambda.dim() != grasp.pair_basis().ncols() {
            return Err(Error::DimensionMismatch {
                expected: grasp.pair_basis().ncols(),
                got: lambda.dim(),
            });
        }
        Ok(PlanInputs {
            grasp,
            load,
            cables,
            lambda,
            gravity,
        })
    }
}

/// Planned state of one cable at one instant.
#[derive(Debug, Clone)]
pub struct CableSample {
    pub force: Vec3,
    pub force_rate: Vec3,
    pub tension: f64,
    pub tension_rate: f64,
    /// Unit vector from the anchor toward the carrier.
    pub direction: Vec3,
    pub direction_rate: Vec3,
    pub carrier_position: Vec3,
    pub carrier_velocity: Vec3,
}

/// Full planning chain evaluated at one instant.
#[derive(Debug, Clone)]
pub struct PlanSample {
    pub t: f64,
    pub lambda: DVector<f64>,
    pub lambda_rate: DVector<f64>,
    pub cables: Vec<CableSample>,
}

/// Evaluates the whole chain at time `t`. Fails with [`Error::SlackCable`]
/// if any planned force magnitude drops to the slack threshold.
pub fn sample_at(inputs: &PlanInputs, t: f64) -> Result<PlanSample> {
    let (lambda, lambda_rate) = inputs.lambda.eval(t);
    let wrench = static_wrench(inputs.load, inputs.gravity);
    let stacked = distribute_forces(inputs.grasp, &wrench, &lambda)?;
    let stacked_rate = force_rate(inputs.grasp, &lambda_rate)?;

    let n = inputs.load.cable_count();
    let mut cables = Vec::with_capacity(n);
    for i in 0..n {
        let force: Vec3 = stacked.fixed_rows::<3>(3 * i).clone_owned();
        let rate: Vec3 = stacked_rate.fixed_rows::<3>(3 * i).clone_owned();
        let (tension, q) = cable_state(&force).map_err(|e| match e {
            Error::SlackForce(magnitude) => Error::SlackCable {
                cable: i,
                t,
                magnitude,
            },
            other => other,
        })?;
        let (tension_rate, direction_rate) = q_rate(&force, &rate)?;
        let position = carrier_pose(
            inputs.grasp.position(),
            inputs.grasp.attitude(),
            inputs.load,
            &q,
            inputs.cables[i].length,
            i,
        );
        let velocity = carrier_velocity_static(&direction_rate, inputs.cables[i].length);
        cables.push(CableSample {
            force,
            force_rate: rate,
            tension,
            tension_rate,
            direction: q.into_inner(),
            direction_rate,
            carrier_position: position,
            carrier_velocity: velocity,
        });
    }
    Ok(PlanSample {
        t,
        lambda,
        lambda_rate,
        cables,
    })
}

/// Time series of one cable over the whole plan.
#[derive(Debug, Clone, Default)]
pub struct PlannedCable {
    pub force: Vec<Vec3>,
    pub force_rate: Vec<Vec3>,
    pub tension: Vec<f64>,
    pub tension_rate: Vec<f64>,
    pub direction: Vec<Vec3>,
    pub direction_rate: Vec<Vec3>,
    pub position: Vec<Vec3>,
    pub velocity: Vec<Vec3>,
}

/// Planned trajectories for every cable/carrier over a time grid.
///
/// Immutable after creation; `plan` is pure, so independent plans may be
/// generated concurrently.
#[derive(Debug, Clone)]
pub struct PlannedTrajectory {
    pub times: Vec<f64>,
    pub lambda: Vec<DVector<f64>>,
    pub lambda_rate: Vec<DVector<f64>>,
    pub cables: Vec<PlannedCable>,
}

impl PlannedTrajectory {
    pub fn cable_count(&self) -> usize {
        self.cables.len()
    }

    pub fn sample_count(&self) -> usize {
        self.times.len()
    }

    /// Carrier speed of cable `i` at sample `k`, m/s.
    pub fn speed(&self, cable: usize, sample: usize) -> f64 {
        self.cables[cable].velocity[sample].norm()
    }
}

/// Uniform grid `0, dt, 2 dt, ..., ~duration` (last point within one step).
pub fn uniform_grid(duration: f64, dt: f64) -> Vec<f64> {
    let steps = (duration / dt).round().max(0.0) as usize;
    (0..=steps).map(|k| k as f64 * dt).collect()
}

/// Evaluates the planning chain on every grid point.
pub fn plan(inputs: &PlanInputs, grid: &[f64]) -> Result<PlannedTrajectory> {
    let n = inputs.load.cable_count();
    let mut out = PlannedTrajectory {
        times: Vec::with_capacity(grid.len()),
        lambda: Vec::with_capacity(grid.len()),
        lambda_rate: Vec::with_capacity(grid.len()),
        cables: vec![PlannedCable::default(); n],
    };
    for &t in grid {
        let sample = sample_at(inputs, t)?;
        out.times.push(t);
        out.lambda.push(sample.lambda);
        out.lambda_rate.push(sample.lambda_rate);
        for (cable, s) in sample.cables.into_iter().enumerate() {
            let series = &mut out.cables[cable];
            series.force.push(s.force);
            series.force_rate.push(s.force_rate);
            series.tension.push(s.tension);
            series.tension_rate.push(s.tension_rate);
            series.direction.push(s.direction);
            series.direction_rate.push(s.direction_rate);
            series.position.push(s.carrier_position);
            series.velocity.push(s.carrier_velocity);
        }
    }
    Ok(out)
}
