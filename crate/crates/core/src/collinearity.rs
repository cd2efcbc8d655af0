//! Scalar outputs that certify a planned cable force keeps changing
//! direction.
//!
//! `z(y, dy) = |dy| |y| - |dy . y|` is non-negative by Cauchy-Schwarz and
//! vanishes exactly when the force and its rate are parallel (or either is
//! zero) - the situation in which the cable direction, and with it the
//! carrier, momentarily freezes. A trajectory whose `z_i(t)` stays bounded
//! away from zero on every cable is a certificate of persistent direction
//! change.

use crate::geometry::Vec3;
use crate::planner::PlannedTrajectory;

/// Default floor below which a `z` minimum is reported as a stall.
pub const DEFAULT_Z_MIN: f64 = 1e-6;

/// `|dy| |y| - |dy . y|`, clamped at zero against floating rounding.
pub fn z_value(y: &Vec3, y_rate: &Vec3) -> f64 {
    (y_rate.norm() * y.norm() - y_rate.dot(y).abs()).max(0.0)
}

/// `|y|^2 |dy|^2 - (y . dy)^2`, the squared-norm form of the same test
/// (equal to `|y x dy|^2` by the Lagrange identity).
pub fn z_squared(y: &Vec3, y_rate: &Vec3) -> f64 {
    (y.norm_squared() * y_rate.norm_squared() - y.dot(y_rate).powi(2)).max(0.0)
}

/// Per-cable `z` series over a plan, with the grid minimum and its time.
#[derive(Debug, Clone)]
pub struct ZSeries {
    pub times: Vec<f64>,
    /// `values[cable][sample]`.
    pub values: Vec<Vec<f64>>,
    pub min: Vec<f64>,
    pub argmin_time: Vec<f64>,
}

impl ZSeries {
    /// Evaluates `z_i(t)` on every plan sample from the planned force and
    /// force rate.
    pub fn from_plan(plan: &PlannedTrajectory) -> Self {
        let n = plan.cable_count();
        let mut values = vec![Vec::with_capacity(plan.sample_count()); n];
        let mut min = vec![f64::INFINITY; n];
        let mut argmin_time = vec![0.0; n];
        for cable in 0..n {
            let series = &plan.cables[cable];
            for (k, &t) in plan.times.iter().enumerate() {
                let z = z_value(&series.force[k], &series.force_rate[k]);
                if z < min[cable] {
                    min[cable] = z;
                    argmin_time[cable] = t;
                }
                values[cable].push(z);
            }
        }
        ZSeries {
            times: plan.times.clone(),
            values,
            min,
            argmin_time,
        }
    }
}

/// Evaluates the `z` series of a plan and reports whether every cable stays
/// above `z_min` on the whole grid.
pub fn persistent_change_check(plan: &PlannedTrajectory, z_min: f64) -> (ZSeries, bool) {
    let series = ZSeries::from_plan(plan);
    let verdict = !series.min.is_empty() && series.min.iter().all(|&m| m > z_min);
    (series, verdict)
}
