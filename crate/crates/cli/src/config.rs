//! Run configuration file schema and its mapping onto the core models.
//!
//! Configurations are strict JSON (unknown keys are rejected) so that typos
//! fail loudly; see `docs/config.schema.json` for the documented schema.
//! Angles in the file are roll-pitch-yaw degrees and are converted once at
//! parse time. Cable indices in configs and reports are 1-based; the
//! library API underneath is 0-based.

use std::path::Path;

use serde::Deserialize;
use slingloiter_core::geometry::{Mat3, Rotation, Vec3};
use slingloiter_core::grasp::GraspSystem;
use slingloiter_core::planner::{CableModel, LambdaComponent, LambdaTrajectory};
use slingloiter_core::simulator::{CableMode, CarrierModel, SimConfig};
use slingloiter_core::STANDARD_GRAVITY;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub load: LoadSection,
    pub cables: CableSection,
    pub carriers: CarrierSection,
    pub equilibrium: EquilibriumSection,
    pub lambda: LambdaSection,
    pub sim: SimSection,
    pub verify: VerifySection,
    /// Gravity override, m/s^2.
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    /// Seed for the cycle selection over anchor pairs (4+ cables).
    #[serde(default)]
    pub pair_seed: u64,
}

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSection {
    /// kg
    pub mass: f64,
    /// Principal moments, kg m^2.
    pub inertia_diag: [f64; 3],
    /// Body-frame attachment points, m.
    pub anchors: Vec<[f64; 3]>,
    /// N s/m
    pub friction_lin: f64,
    /// N m s/rad
    pub friction_rot: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CableSection {
    /// Rest length shared by all cables, m.
    pub length: f64,
    /// Spring stiffness, N/m.
    pub stiffness: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarrierSection {
    /// kg
    pub mass: f64,
    /// N/m
    pub kp: f64,
    /// N s/m
    pub kd: f64,
    /// Gravity + planned-cable-force feedforward in the PD law.
    #[serde(default = "default_true")]
    pub feedforward: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumSection {
    /// m
    pub position: [f64; 3],
    /// Roll, pitch, yaw in degrees.
    pub attitude_rpy: [f64; 3],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaSection {
    /// N; one entry per internal-force component.
    pub lambda0: Vec<f64>,
    /// N
    pub amplitude: Vec<f64>,
    /// rad/s
    pub frequency: Vec<f64>,
    /// rad
    pub phase: Vec<f64>,
    /// `[lower, upper]` bounds on every component, N.
    pub bounds: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    /// s
    pub dt: f64,
    /// s
    pub duration: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Carrier speed floor, m/s.
    pub v_min: f64,
    /// Direction-change output floor.
    pub z_min: f64,
}

/// Core objects built from a validated configuration.
pub struct BuiltConfig {
    pub load: slingloiter_core::grasp::LoadModel,
    pub grasp: GraspSystem,
    pub cables: Vec<CableModel>,
    pub carriers: Vec<CarrierModel>,
    pub lambda: LambdaTrajectory,
    pub gravity: f64,
    pub dt: f64,
    pub duration: f64,
    pub v_min: f64,
    pub z_min: f64,
    pub feedforward: bool,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// Expected number of internal-force components for `n` cables: none
    /// for one cable, one for two, one per cycle edge otherwise.
    pub fn expected_lambda_dim(cable_count: usize) -> usize {
        match cable_count {
            0 | 1 => 0,
            2 => 1,
            n => n,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let n = self.load.anchors.len();
        if n == 0 {
            return Err(CliError::Config("load.anchors must not be empty".into()));
        }
        let m = Self::expected_lambda_dim(n);
        for (name, len) in [
            ("lambda0", self.lambda.lambda0.len()),
            ("amplitude", self.lambda.amplitude.len()),
            ("frequency", self.lambda.frequency.len()),
            ("phase", self.lambda.phase.len()),
        ] {
            if len != m {
                return Err(CliError::Config(format!(
                    "lambda.{name} must have {m} entries for {n} anchors, got {len}"
                )));
            }
        }
        for section in [
            ("sim.dt", self.sim.dt),
            ("sim.duration", self.sim.duration),
            ("verify.v_min", self.verify.v_min),
            ("verify.z_min", self.verify.z_min),
        ] {
            if !section.1.is_finite() || section.1 < 0.0 {
                return Err(CliError::Config(format!(
                    "{} must be finite and non-negative",
                    section.0
                )));
            }
        }
        Ok(())
    }

    /// Builds all core objects; model invariant violations surface as
    /// configuration errors.
    pub fn build(&self) -> Result<BuiltConfig, CliError> {
        let anchors = self.load.anchors.iter().map(|a| Vec3::from(*a)).collect();
        let load = slingloiter_core::grasp::LoadModel::new(
            self.load.mass,
            Mat3::from_diagonal(&Vec3::from(self.load.inertia_diag)),
            anchors,
            self.load.friction_lin,
            self.load.friction_rot,
        )?;
        let attitude = Rotation::from_rpy(
            self.equilibrium.attitude_rpy[0].to_radians(),
            self.equilibrium.attitude_rpy[1].to_radians(),
            self.equilibrium.attitude_rpy[2].to_radians(),
        );
        let grasp = GraspSystem::with_default_pairs(
            &load,
            Vec3::from(self.equilibrium.position),
            attitude,
            self.pair_seed,
        )?;
        let components = self
            .lambda
            .lambda0
            .iter()
            .zip(&self.lambda.amplitude)
            .zip(&self.lambda.frequency)
            .zip(&self.lambda.phase)
            .map(|(((&lambda0, &amplitude), &frequency), &phase)| LambdaComponent {
                lambda0,
                amplitude,
                frequency,
                phase,
            })
            .collect();
        let lambda = LambdaTrajectory::new(
            components,
            (self.lambda.bounds[0], self.lambda.bounds[1]),
        )?;
        let n = load.cable_count();
        Ok(BuiltConfig {
            cables: vec![CableModel::new(self.cables.length, self.cables.stiffness)?; n],
            carriers: vec![CarrierModel::new(self.carriers.mass, self.carriers.kp, self.carriers.kd)?; n],
            load,
            grasp,
            lambda,
            gravity: self.gravity,
            dt: self.sim.dt,
            duration: self.sim.duration,
            v_min: self.verify.v_min,
            z_min: self.verify.z_min,
            feedforward: self.carriers.feedforward,
        })
    }
}

impl BuiltConfig {
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            load: self.load.clone(),
            cables: self.cables.clone(),
            carriers: self.carriers.clone(),
            grasp: self.grasp.clone(),
            lambda: self.lambda.clone(),
            dt: self.dt,
            duration: self.duration,
            gravity: self.gravity,
            feedforward: self.feedforward,
            cable_mode: CableMode::Springs,
        }
    }
}
