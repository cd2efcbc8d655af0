//! Closed-loop rigid-body simulation: load with viscous friction, massless
//! elastic cables with a unilateral (tension-only) constraint, and
//! PD-controlled double-integrator carriers tracking the planner output.
//!
//! The carrier references are evaluated analytically from the planning chain
//! at every integrator stage time; with elastic cables the rigid-cable
//! kinematics is corrected by a radial offset so that the commanded spring
//! stretch reproduces the planned tension.

use nalgebra::DVector;

use crate::analysis::CarrierKinematics;
use crate::collinearity::z_value;
use crate::error::{Error, Result};
use crate::geometry::{skew, Mat3, Rotation, Vec3};
use crate::grasp::{GraspSystem, LoadModel};
use crate::planner::{sample_at, CableModel, LambdaTrajectory, PlanInputs, PlanSample};

/// State norms above this abort the run as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Double-integrator carrier with a diagonal PD position controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarrierModel {
    /// Mass, kg.
    pub mass: f64,
    /// Proportional gain, N/m.
    pub kp: f64,
    /// Derivative gain, N s/m.
    pub kd: f64,
}

impl CarrierModel {
    pub fn new(mass: f64, kp: f64, kd: f64) -> Result<Self> {
        if !(mass > 0.0 && kp > 0.0 && kd > 0.0) {
            return Err(Error::InvalidModel(format!(
                "carrier mass and gains must be positive, got ({mass}, {kp}, {kd})"
            )));
        }
        Ok(CarrierModel { mass, kp, kd })
    }
}

/// How cable forces couple the carriers to the load.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CableMode {
    /// Massless linear springs with a slack branch below the rest length.
    Springs,
    /// The planned cable forces are applied directly to the load (ideal
    /// force sources); isolates planner correctness from spring effects.
    PlannedForces,
    /// No cable coupling at all; the load is free and carriers coast.
    Disabled,
}

/// Full simulation setup. Immutable while a run is in progress.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub load: LoadModel,
    pub cables: Vec<CableModel>,
    pub carriers: Vec<CarrierModel>,
    pub grasp: GraspSystem,
    pub lambda: LambdaTrajectory,
    /// Integrator step, s.
    pub dt: f64,
    /// Run length, s.
    pub duration: f64,
    /// Gravity, m/s^2.
    pub gravity: f64,
    /// Adds gravity and planned-cable-force feedforward to the PD law.
    pub feedforward: bool,
    pub cable_mode: CableMode,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.load.cable_count();
        if self.cables.len() != n || self.carriers.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.cables.len().min(self.carriers.len()),
            });
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidModel(format!("dt must be positive, got {}", self.dt)));
        }
        if self.duration < self.dt {
            return Err(Error::InvalidModel(
                "duration must cover at least one step".into(),
            ));
        }
        for c in &self.carriers {
            CarrierModel::new(c.mass, c.kp, c.kd)?;
        }
        for c in &self.cables {
            CableModel::new(c.length, c.stiffness)?;
        }
        if self.lambda.dim() != self.grasp.pair_basis().ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.grasp.pair_basis().ncols(),
                got: self.lambda.dim(),
            });
        }
        Ok(())
    }

    fn plan_inputs(&self) -> PlanInputs<'_> {
        PlanInputs {
            grasp: &self.grasp,
            load: &self.load,
            cables: &self.cables,
            lambda: &self.lambda,
            gravity: self.gravity,
        }
    }
}

/// Instantaneous state of the load and every carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub load_position: Vec3,
    pub load_velocity: Vec3,
    pub load_attitude: Rotation,
    /// Body-frame angular velocity, rad/s.
    pub load_angular_velocity: Vec3,
    pub carrier_position: Vec<Vec3>,
    pub carrier_velocity: Vec<Vec3>,
}

/// Time derivative of [`SimState`] at one instant.
#[derive(Debug, Clone)]
pub struct StateDerivative {
    pub load_velocity: Vec3,
    pub load_acceleration: Vec3,
    /// Attitude matrix derivative `S(R w) R`.
    pub attitude_rate: Mat3,
    /// Body-frame angular acceleration.
    pub angular_acceleration: Vec3,
    pub carrier_velocity: Vec<Vec3>,
    pub carrier_acceleration: Vec<Vec3>,
}

/// Tension-only spring force applied to the load at `anchor_world` by a
/// carrier at `carrier`: zero at or below the rest length, Hooke's law along
/// the cable beyond it.
pub fn spring_cable_force(
    anchor_world: &Vec3,
    carrier: &Vec3,
    rest_length: f64,
    stiffness: f64,
) -> Vec3 {
    let span = carrier - anchor_world;
    let distance = span.norm();
    if distance <= rest_length {
        return Vec3::zeros();
    }
    span * (stiffness * (distance - rest_length) / distance)
}

/// Carrier position/velocity reference with the radial stretch correction
/// for elastic cables: the carrier sits `tension / stiffness` beyond the
/// rest length so the spring supplies exactly the planned tension.
fn carrier_reference(
    sample: &PlanSample,
    cable: usize,
    model: &CableModel,
    anchor_world: &Vec3,
    elastic: bool,
) -> (Vec3, Vec3) {
    let s = &sample.cables[cable];
    if elastic {
        let stretched = model.length + s.tension / model.stiffness;
        let position = anchor_world + s.direction * stretched;
        let velocity = s.direction_rate * stretched + s.direction * (s.tension_rate / model.stiffness);
        (position, velocity)
    } else {
        (s.carrier_position, s.carrier_velocity)
    }
}

/// Equations of motion for the whole system at time `t`.
///
/// Load: `m a = -m g e3 - c_t v + sum f_i` and
/// `J dw = -w x (J w) - c_r w + sum S(b_i) R^T f_i` with `f_i` the
/// world-frame cable force on the load. Carriers: double integrators under
/// the PD law (optionally with gravity + planned-force feedforward) and the
/// cable reaction `-f_i`.
pub fn dynamics_rhs(state: &SimState, config: &SimConfig, t: f64) -> Result<StateDerivative> {
    let n = config.load.cable_count();
    let gravity = Vec3::z() * config.gravity;
    let rotation = state.load_attitude;

    let reference = match config.cable_mode {
        CableMode::Disabled => None,
        _ => Some(sample_at(&config.plan_inputs(), t)?),
    };

    let mut cable_forces = vec![Vec3::zeros(); n];
    if let Some(sample) = &reference {
        for i in 0..n {
            cable_forces[i] = match config.cable_mode {
                CableMode::Springs => {
                    let anchor = state.load_position + rotation.rotate(&config.load.anchors[i]);
                    spring_cable_force(
                        &anchor,
                        &state.carrier_position[i],
                        config.cables[i].length,
                        config.cables[i].stiffness,
                    )
                }
                CableMode::PlannedForces => sample.cables[i].force,
                CableMode::Disabled => unreachable!(),
            };
        }
    }

    let total_force: Vec3 = cable_forces.iter().sum();
    let load_acceleration = (-gravity * config.load.mass
        - state.load_velocity * config.load.linear_friction
        + total_force)
        / config.load.mass;

    let omega = state.load_angular_velocity;
    let mut torque = -omega.cross(&(config.load.inertia * omega)) - omega * config.load.angular_friction;
    for (i, f) in cable_forces.iter().enumerate() {
        torque += skew(&config.load.anchors[i]) * rotation.inverse_rotate(f);
    }
    let inertia_inv = config
        .load
        .inertia
        .try_inverse()
        .expect("inertia validated positive definite");
    let angular_acceleration = inertia_inv * torque;

    let mut carrier_velocity = Vec::with_capacity(n);
    let mut carrier_acceleration = Vec::with_capacity(n);
    for i in 0..n {
        carrier_velocity.push(state.carrier_velocity[i]);
        let model = &config.carriers[i];
        let mut force = -gravity * model.mass - cable_forces[i];
        if let Some(sample) = &reference {
            let anchor_eq =
                config.grasp.position() + config.grasp.attitude().rotate(&config.load.anchors[i]);
            let elastic = config.cable_mode == CableMode::Springs;
            let (p_ref, v_ref) = carrier_reference(sample, i, &config.cables[i], &anchor_eq, elastic);
            let mut control = (p_ref - state.carrier_position[i]) * model.kp
                + (v_ref - state.carrier_velocity[i]) * model.kd;
            if config.feedforward {
                control += gravity * model.mass + sample.cables[i].force;
            }
            force += control;
        }
        carrier_acceleration.push(force / model.mass);
    }

    Ok(StateDerivative {
        load_velocity: state.load_velocity,
        load_acceleration,
        attitude_rate: skew(&rotation.rotate(&omega)) * rotation.matrix(),
        angular_acceleration,
        carrier_velocity,
        carrier_acceleration,
    })
}

fn advance(base: &SimState, k: &StateDerivative, h: f64) -> SimState {
    let mut next = base.clone();
    next.t = base.t + h;
    next.load_position += k.load_velocity * h;
    next.load_velocity += k.load_acceleration * h;
    next.load_attitude =
        Rotation::from_matrix_unchecked(base.load_attitude.matrix() + k.attitude_rate * h);
    next.load_angular_velocity += k.angular_acceleration * h;
    for i in 0..base.carrier_position.len() {
        next.carrier_position[i] += k.carrier_velocity[i] * h;
        next.carrier_velocity[i] += k.carrier_acceleration[i] * h;
    }
    next
}

/// One classical RK4 step of length `dt` from `state.t`.
///
/// All states, the attitude matrix entries included, use the standard
/// weighted stage combination; the attitude is projected back onto SO(3) at
/// the end of the step. Intermediate stage attitudes drift off the manifold
/// by O(dt^2), which the dynamics tolerate as a smooth extension; keeping
/// the combination linear is what preserves the classical fourth order.
pub fn step_rk4(state: &SimState, config: &SimConfig, dt: f64) -> Result<SimState> {
    let t = state.t;
    let k1 = dynamics_rhs(state, config, t)?;
    let s2 = advance(state, &k1, dt / 2.0);
    let k2 = dynamics_rhs(&s2, config, t + dt / 2.0)?;
    let s3 = advance(state, &k2, dt / 2.0);
    let k3 = dynamics_rhs(&s3, config, t + dt / 2.0)?;
    let s4 = advance(state, &k3, dt);
    let k4 = dynamics_rhs(&s4, config, t + dt)?;

    let n = state.carrier_position.len();
    let w = dt / 6.0;
    let mut next = state.clone();
    next.t = t + dt;
    next.load_position += (k1.load_velocity
        + k2.load_velocity * 2.0
        + k3.load_velocity * 2.0
        + k4.load_velocity)
        * w;
    next.load_velocity += (k1.load_acceleration
        + k2.load_acceleration * 2.0
        + k3.load_acceleration * 2.0
        + k4.load_acceleration)
        * w;
    next.load_angular_velocity += (k1.angular_acceleration
        + k2.angular_acceleration * 2.0
        + k3.angular_acceleration * 2.0
        + k4.angular_acceleration)
        * w;
    let attitude = state.load_attitude.matrix()
        + (k1.attitude_rate + k2.attitude_rate * 2.0 + k3.attitude_rate * 2.0 + k4.attitude_rate)
            * w;
    next.load_attitude = Rotation::from_matrix_unchecked(attitude);
    next.load_attitude.orthonormalize();
    for i in 0..n {
        next.carrier_position[i] += (k1.carrier_velocity[i]
            + k2.carrier_velocity[i] * 2.0
            + k3.carrier_velocity[i] * 2.0
            + k4.carrier_velocity[i])
            * w;
        next.carrier_velocity[i] += (k1.carrier_acceleration[i]
            + k2.carrier_acceleration[i] * 2.0
            + k3.carrier_acceleration[i] * 2.0
            + k4.carrier_acceleration[i])
            * w;
    }
    Ok(next)
}

/// Initial state on the reference: load at the equilibrium pose with zero
/// twist, carriers on their reference position and velocity at `t = 0`.
pub fn initial_state(config: &SimConfig) -> Result<SimState> {
    let n = config.load.cable_count();
    let mut state = SimState {
        t: 0.0,
        load_position: *config.grasp.position(),
        load_velocity: Vec3::zeros(),
        load_attitude: *config.grasp.attitude(),
        load_angular_velocity: Vec3::zeros(),
        carrier_position: vec![Vec3::zeros(); n],
        carrier_velocity: vec![Vec3::zeros(); n],
    };
    if config.cable_mode == CableMode::Disabled {
        return Ok(state);
    }
    let sample = sample_at(&config.plan_inputs(), 0.0)?;
    let elastic = config.cable_mode == CableMode::Springs;
    for i in 0..n {
        let anchor = config.grasp.position() + config.grasp.attitude().rotate(&config.load.anchors[i]);
        let (p, v) = carrier_reference(&sample, i, &config.cables[i], &anchor, elastic);
        state.carrier_position[i] = p;
        state.carrier_velocity[i] = v;
    }
    Ok(state)
}

/// Recorded time series of a run, sampled every integrator step.
///
/// Tensions are the measured cable tensions (spring stretch in the elastic
/// mode); the internal-force signal and the direction-change outputs `z_i`
/// are the planner references at the sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSeries {
    pub times: Vec<f64>,
    pub load_position: Vec<Vec3>,
    pub load_velocity: Vec<Vec3>,
    pub load_attitude: Vec<Rotation>,
    pub load_angular_velocity: Vec<Vec3>,
    /// `[carrier][sample]`.
    pub carrier_position: Vec<Vec<Vec3>>,
    pub carrier_velocity: Vec<Vec<Vec3>>,
    /// `[cable][sample]`, N.
    pub tension: Vec<Vec<f64>>,
    pub lambda: Vec<DVector<f64>>,
    pub lambda_rate: Vec<DVector<f64>>,
    /// `[cable][sample]`.
    pub z: Vec<Vec<f64>>,
    pub target_position: Vec3,
    pub target_attitude: Rotation,
}

impl SimSeries {
    fn with_capacity(n: usize, samples: usize, config: &SimConfig) -> Self {
        SimSeries {
            times: Vec::with_capacity(samples),
            load_position: Vec::with_capacity(samples),
            load_velocity: Vec::with_capacity(samples),
            load_attitude: Vec::with_capacity(samples),
            load_angular_velocity: Vec::with_capacity(samples),
            carrier_position: vec![Vec::with_capacity(samples); n],
            carrier_velocity: vec![Vec::with_capacity(samples); n],
            tension: vec![Vec::with_capacity(samples); n],
            lambda: Vec::with_capacity(samples),
            lambda_rate: Vec::with_capacity(samples),
            z: vec![Vec::with_capacity(samples); n],
            target_position: *config.grasp.position(),
            target_attitude: *config.grasp.attitude(),
        }
    }

    pub fn sample_count(&self) -> usize {
        self.times.len()
    }

    pub fn speed(&self, carrier: usize, sample: usize) -> f64 {
        self.carrier_velocity[carrier][sample].norm()
    }
}

impl CarrierKinematics for SimSeries {
    fn times(&self) -> &[f64] {
        &self.times
    }

    fn carrier_count(&self) -> usize {
        self.carrier_position.len()
    }

    fn carrier_speed(&self, carrier: usize, sample: usize) -> f64 {
        self.speed(carrier, sample)
    }

    fn cable_tension(&self, cable: usize, sample: usize) -> f64 {
        self.tension[cable][sample]
    }

    fn lambda_rates(&self) -> &[DVector<f64>] {
        &self.lambda_rate
    }
}

fn record(series: &mut SimSeries, state: &SimState, config: &SimConfig) -> Result<()> {
    let n = config.load.cable_count();
    series.times.push(state.t);
    series.load_position.push(state.load_position);
    series.load_velocity.push(state.load_velocity);
    series.load_attitude.push(state.load_attitude);
    series.load_angular_velocity.push(state.load_angular_velocity);
    for i in 0..n {
        series.carrier_position[i].push(state.carrier_position[i]);
        series.carrier_velocity[i].push(state.carrier_velocity[i]);
    }
    match config.cable_mode {
        CableMode::Disabled => {
            let (lambda, rate) = config.lambda.eval(state.t);
            series.lambda.push(lambda);
            series.lambda_rate.push(rate);
            for i in 0..n {
                series.tension[i].push(0.0);
                series.z[i].push(0.0);
            }
        }
        _ => {
            let sample = sample_at(&config.plan_inputs(), state.t)?;
            for i in 0..n {
                let tension = match config.cable_mode {
                    CableMode::Springs => {
                        let anchor =
                            state.load_position + state.load_attitude.rotate(&config.load.anchors[i]);
                        spring_cable_force(
                            &anchor,
                            &state.carrier_position[i],
                            config.cables[i].length,
                            config.cables[i].stiffness,
                        )
                        .norm()
                    }
                    _ => sample.cables[i].tension,
                };
                series.tension[i].push(tension);
                series.z[i].push(z_value(&sample.cables[i].force, &sample.cables[i].force_rate));
            }
            series.lambda.push(sample.lambda);
            series.lambda_rate.push(sample.lambda_rate);
        }
    }
    Ok(())
}

fn check_divergence(state: &SimState) -> Result<()> {
    let mut worst = state.load_position.norm().max(state.load_velocity.norm());
    worst = worst.max(state.load_angular_velocity.norm());
    for i in 0..state.carrier_position.len() {
        worst = worst.max(state.carrier_position[i].norm());
        worst = worst.max(state.carrier_velocity[i].norm());
    }
    if !worst.is_finite() || worst > DIVERGENCE_LIMIT {
        return Err(Error::Diverged { t: state.t });
    }
    Ok(())
}

/// Runs the simulation from the reference initial state.
pub fn run(config: &SimConfig) -> Result<SimSeries> {
    let state = initial_state(config)?;
    run_from(config, state)
}

/// Runs the simulation from an explicit initial state. The run is
/// deterministic: identical configs and initial states produce bit-identical
/// series.
pub fn run_from(config: &SimConfig, initial: SimState) -> Result<SimSeries> {
    config.validate()?;
    let steps = (config.duration / config.dt).round() as usize;
    let n = config.load.cable_count();
    let mut series = SimSeries::with_capacity(n, steps + 1, config);
    let mut state = initial;
    check_divergence(&state)?;
    record(&mut series, &state, config)?;
    for _ in 0..steps {
        state = step_rk4(&state, config, config.dt)?;
        check_divergence(&state)?;
        record(&mut series, &state, config)?;
    }
    Ok(series)
}
