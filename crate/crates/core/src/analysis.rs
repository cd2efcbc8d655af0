//! Post-hoc verification of planned or simulated runs: per-carrier speed
//! floors, degenerate internal-force patterns that stall a carrier, and
//! pose-hold quality.

use nalgebra::DVector;

use crate::geometry::{Rotation, Vec3};
use crate::grasp::PairSet;
use crate::planner::PlannedTrajectory;

/// Relative second-singular-value threshold declaring two internal-force
/// rate streams proportional over a window.
pub const PROPORTIONALITY_RTOL: f64 = 1e-9;

/// Absolute threshold on an internal-force rate sample counting as zero.
pub const RATE_ZERO_TOL: f64 = 1e-9;

/// Time series with per-carrier speeds and per-cable tensions; implemented
/// by planned trajectories and simulation series.
pub trait CarrierKinematics {
    fn times(&self) -> &[f64];
    fn carrier_count(&self) -> usize;
    fn carrier_speed(&self, carrier: usize, sample: usize) -> f64;
    fn cable_tension(&self, cable: usize, sample: usize) -> f64;
    fn lambda_rates(&self) -> &[DVector<f64>];
}

impl CarrierKinematics for PlannedTrajectory {
    fn times(&self) -> &[f64] {
        &self.times
    }

    fn carrier_count(&self) -> usize {
        self.cable_count()
    }

    fn carrier_speed(&self, carrier: usize, sample: usize) -> f64 {
        self.speed(carrier, sample)
    }

    fn cable_tension(&self, cable: usize, sample: usize) -> f64 {
        self.cables[cable].tension[sample]
    }

    fn lambda_rates(&self) -> &[DVector<f64>] {
        &self.lambda_rate
    }
}

/// Speed floor result for one carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct CarrierReport {
    pub min_speed: f64,
    pub argmin_time: f64,
    /// True when the minimum stays at or above the requested floor.
    pub non_stop: bool,
}

/// Two internal-force components proportional over the window, which forces
/// the shared cable's force rate onto a fixed line.
#[derive(Debug, Clone, PartialEq)]
pub struct Case1Flag {
    /// Indices into the internal-force components (pair-set entries).
    pub components: (usize, usize),
    pub shared_cable: usize,
    /// Proportionality ratio `rate_b = ratio * rate_a`.
    pub ratio: f64,
}

/// Both internal-force rates feeding one cable vanish at the same sample,
/// which freezes that cable's carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct Case2Flag {
    pub sample: usize,
    pub time: f64,
    pub components: (usize, usize),
    pub shared_cable: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DegenerateFlags {
    pub case1: Vec<Case1Flag>,
    pub case2: Vec<Case2Flag>,
}

impl DegenerateFlags {
    pub fn is_clean(&self) -> bool {
        self.case1.is_empty() && self.case2.is_empty()
    }
}

/// Pose-hold quality of a simulated run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseErrorReport {
    /// Largest center-of-mass deviation, m.
    pub max_position: f64,
    /// Largest geodesic attitude error, rad.
    pub max_angle: f64,
}

/// Aggregate verdict for a run.
#[derive(Debug, Clone, PartialEq)]
pub struct NonStopReport {
    /// Requested speed floor, m/s.
    pub v_min: f64,
    pub carriers: Vec<CarrierReport>,
    /// Per-cable minimum tension over the window, N.
    pub min_tension: Vec<f64>,
    pub flags: DegenerateFlags,
    pub pose: Option<PoseErrorReport>,
    /// True when every carrier keeps its speed at or above `v_min`.
    pub non_stop: bool,
}

/// Exact per-carrier speed minima over the grid and the non-stop verdict
/// against the floor `v_min`.
pub fn min_speed<S: CarrierKinematics>(series: &S, v_min: f64) -> NonStopReport {
    let times = series.times();
    let n = series.carrier_count();
    let mut carriers = Vec::with_capacity(n);
    let mut min_tension = Vec::with_capacity(n);
    for i in 0..n {
        let mut best = f64::INFINITY;
        let mut best_t = 0.0;
        let mut tension = f64::INFINITY;
        for (k, &t) in times.iter().enumerate() {
            let s = series.carrier_speed(i, k);
            if s < best {
                best = s;
                best_t = t;
            }
            tension = tension.min(series.cable_tension(i, k));
        }
        carriers.push(CarrierReport {
            min_speed: best,
            argmin_time: best_t,
            non_stop: best >= v_min,
        });
        min_tension.push(tension);
    }
    let non_stop = !carriers.is_empty() && carriers.iter().all(|c| c.non_stop);
    NonStopReport {
        v_min,
        carriers,
        min_tension,
        flags: DegenerateFlags::default(),
        pose: None,
        non_stop,
    }
}

/// Scans the internal-force rate samples for the two stall patterns.
///
/// Only component pairs that drive a common cable matter: proportional
/// streams confine that cable's force rate to a line (case 1, decided by the
/// ratio of the two singular values of the stacked 2 x K sample matrix), and
/// simultaneous zeros freeze the cable outright (case 2). Callers should
/// provide at least ten samples for the proportionality test to be
/// meaningful.
pub fn detect_degenerate(
    lambda_rates: &[DVector<f64>],
    times: &[f64],
    pairs: &PairSet,
) -> DegenerateFlags {
    debug_assert!(times.len() >= 10, "proportionality window is too short");
    let mut flags = DegenerateFlags::default();
    for (a, b, shared_cable) in pairs.adjacent_entries() {
        let mut suu = 0.0;
        let mut svv = 0.0;
        let mut suv = 0.0;
        for rate in lambda_rates {
            let u = rate[a];
            let v = rate[b];
            suu += u * u;
            svv += v * v;
            suv += u * v;
        }
        // Eigenvalues of the 2x2 Gram matrix are the squared singular values.
        let tr = suu + svv;
        let det = (suu * svv - suv * suv).max(0.0);
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        let s1_sq = (tr + disc) / 2.0;
        let s2_sq = ((tr - disc) / 2.0).max(0.0);
        if s2_sq <= PROPORTIONALITY_RTOL * PROPORTIONALITY_RTOL * s1_sq {
            let ratio = if suu > 0.0 { suv / suu } else { 0.0 };
            flags.case1.push(Case1Flag {
                components: (a, b),
                shared_cable,
                ratio,
            });
        }

        for (k, rate) in lambda_rates.iter().enumerate() {
            if rate[a].abs() < RATE_ZERO_TOL && rate[b].abs() < RATE_ZERO_TOL {
                flags.case2.push(Case2Flag {
                    sample: k,
                    time: times[k],
                    components: (a, b),
                    shared_cable,
                });
            }
        }
    }
    flags
}

/// Case-1 detection over sliding windows of `window` samples (advancing by
/// half a window), for signals that are only piecewise proportional. Flags
/// are deduplicated per component pair, keeping the first window's ratio.
pub fn detect_degenerate_windowed(
    lambda_rates: &[DVector<f64>],
    times: &[f64],
    pairs: &PairSet,
    window: usize,
) -> DegenerateFlags {
    let window = window.max(2).min(times.len());
    let mut flags = detect_degenerate(lambda_rates, times, pairs);
    flags.case1.clear();
    let mut start = 0;
    while start + window <= times.len() {
        let slice = detect_degenerate(
            &lambda_rates[start..start + window],
            &times[start..start + window],
            pairs,
        );
        for flag in slice.case1 {
            if !flags.case1.iter().any(|f| f.components == flag.components) {
                flags.case1.push(flag);
            }
        }
        if start + window == times.len() {
            break;
        }
        start = (start + window / 2).min(times.len() - window);
    }
    flags
}

/// Largest position deviation and geodesic attitude error against the
/// target pose.
pub fn pose_error(
    positions: &[Vec3],
    attitudes: &[Rotation],
    target_position: &Vec3,
    target_attitude: &Rotation,
) -> PoseErrorReport {
    let max_position = positions
        .iter()
        .map(|p| (p - target_position).norm())
        .fold(0.0_f64, f64::max);
    let max_angle = attitudes
        .iter()
        .map(|r| r.angle_to(target_attitude))
        .fold(0.0_f64, f64::max);
    PoseErrorReport {
        max_position,
        max_angle,
    }
}

/// Full verdict for a planned trajectory: speed minima plus degenerate
/// pattern flags.
pub fn analyze_plan(plan: &PlannedTrajectory, pairs: &PairSet, v_min: f64) -> NonStopReport {
    let mut report = min_speed(plan, v_min);
    report.flags = detect_degenerate(&plan.lambda_rate, &plan.times, pairs);
    report
}
