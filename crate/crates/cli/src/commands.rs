//! The five subcommands. Each returns the JSON document it prints, so the
//! integration tests can call them directly.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};
use slingloiter_core::analysis::{
    detect_degenerate, min_speed, pose_error, DegenerateFlags, NonStopReport,
};
use slingloiter_core::collinearity::persistent_change_check;
use slingloiter_core::grasp::count_hamiltonian_cycles;
use slingloiter_core::planner::{
    feasibility_margins, plan, uniform_grid, PlanInputs, PlannedTrajectory, EPS_FEAS,
};
use slingloiter_core::simulator::run;

use crate::config::{BuiltConfig, RunConfig};
use crate::csvio;
use crate::error::CliError;

/// Command-line overrides applied on top of the configuration file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub duration: Option<f64>,
    pub v_min: Option<f64>,
    pub z_min: Option<f64>,
}

impl Overrides {
    fn apply(&self, built: &mut BuiltConfig) -> Result<(), CliError> {
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(CliError::Config(format!("--dt must be positive, got {dt}")));
            }
            built.dt = dt;
        }
        if let Some(duration) = self.duration {
            if !(duration > 0.0) {
                return Err(CliError::Config(format!(
                    "--duration must be positive, got {duration}"
                )));
            }
            built.duration = duration;
        }
        if let Some(v_min) = self.v_min {
            built.v_min = v_min;
        }
        if let Some(z_min) = self.z_min {
            built.z_min = z_min;
        }
        Ok(())
    }
}

fn pairs_one_based(built: &BuiltConfig) -> Vec<[usize; 2]> {
    built
        .grasp
        .pairs()
        .pairs()
        .iter()
        .map(|&(i, j)| [i + 1, j + 1])
        .collect()
}

fn flags_json(flags: &DegenerateFlags) -> (Value, Value, usize) {
    let case1: Vec<Value> = flags
        .case1
        .iter()
        .map(|f| {
            json!({
                "components": [f.components.0 + 1, f.components.1 + 1],
                "shared_cable": f.shared_cable + 1,
                "ratio": f.ratio,
            })
        })
        .collect();
    let case2: Vec<Value> = flags
        .case2
        .iter()
        .take(100)
        .map(|f| {
            json!({
                "time": f.time,
                "sample": f.sample,
                "components": [f.components.0 + 1, f.components.1 + 1],
                "shared_cable": f.shared_cable + 1,
            })
        })
        .collect();
    (Value::Array(case1), Value::Array(case2), flags.case2.len())
}

fn report_json(report: &NonStopReport) -> Value {
    json!({
        "v_min": report.v_min,
        "carriers": report
            .carriers
            .iter()
            .map(|c| json!({
                "min_speed": c.min_speed,
                "argmin_time": c.argmin_time,
                "non_stop": c.non_stop,
            }))
            .collect::<Vec<_>>(),
        "min_tension": report.min_tension,
        "non_stop": report.non_stop,
    })
}

/// Grasp-level analysis: rank, nullity, pair selection, and the
/// feasibility margins of the balancing forces for three or more cables.
pub fn analyze(config: &RunConfig) -> Result<Value, CliError> {
    let built = config.build()?;
    let n = built.load.cable_count();
    let (margins, feasible) = if n >= 3 {
        let margins = feasibility_margins(&built.grasp, &built.load, built.gravity)?;
        let feasible = margins.iter().all(|&m| m > EPS_FEAS);
        (Some(margins), Some(feasible))
    } else {
        (None, None)
    };
    let verdict = match (n, feasible) {
        (1, _) => "non-stop impossible: a single cable admits no internal forces".to_string(),
        (2, _) => {
            "non-stop impossible: the internal force direction is fixed, so bounded internal \
             forces make the carriers stop"
                .to_string()
        }
        (_, Some(true)) => {
            "non-stop feasible: every balancing force clears its internal-force plane".to_string()
        }
        (_, Some(false)) => {
            "degenerate equilibrium: a balancing force lies in its internal-force plane"
                .to_string()
        }
        _ => unreachable!(),
    };
    let cycle_count = if n >= 3 {
        count_hamiltonian_cycles(n)
            .ok()
            .map(|c| u64::try_from(c).unwrap_or(u64::MAX))
    } else {
        None
    };
    Ok(json!({
        "command": "analyze",
        "cables": n,
        "grasp_rank": built.grasp.rank(),
        "nullity": built.grasp.nullity(),
        "pairs": pairs_one_based(&built),
        "pair_count": built.grasp.pairs().len(),
        "pairwise_rank": built.grasp.pair_rank(),
        "cycle_count": cycle_count,
        "anchors_collinear": built.load.anchors_collinear(slingloiter_core::grasp::COLLINEARITY_TOL),
        "margins": margins,
        "feasible": feasible,
        "verdict": verdict,
    }))
}

fn run_plan(built: &BuiltConfig) -> Result<PlannedTrajectory, CliError> {
    let inputs = PlanInputs::new(
        &built.grasp,
        &built.load,
        &built.cables,
        &built.lambda,
        built.gravity,
    )?;
    Ok(plan(&inputs, &uniform_grid(built.duration, built.dt))?)
}

fn plan_summary(built: &BuiltConfig, planned: &PlannedTrajectory, csv: Option<&Path>) -> Value {
    let mut report = min_speed(planned, built.v_min);
    report.flags = detect_degenerate(&planned.lambda_rate, &planned.times, built.grasp.pairs());
    let (z_series, persistent) = persistent_change_check(planned, built.z_min);
    let (case1, case2, case2_total) = flags_json(&report.flags);
    let mut value = report_json(&report);
    let obj = value.as_object_mut().unwrap();
    obj.insert("command".into(), json!("plan"));
    obj.insert("cables".into(), json!(planned.cable_count()));
    obj.insert("z_min".into(), json!(built.z_min));
    obj.insert(
        "z_per_cable".into(),
        json!(z_series
            .min
            .iter()
            .zip(&z_series.argmin_time)
            .map(|(&min, &argmin_time)| json!({"min": min, "argmin_time": argmin_time}))
            .collect::<Vec<_>>()),
    );
    obj.insert("persistent_change".into(), json!(persistent));
    obj.insert("case1".into(), case1);
    obj.insert("case2_instants".into(), case2);
    obj.insert("case2_total".into(), json!(case2_total));
    obj.insert(
        "csv".into(),
        json!(csv.map(|p| p.display().to_string())),
    );
    value
}

/// Plans the carrier trajectories and writes `plan.csv` plus
/// `plan_summary.json` into `out`.
pub fn plan_cmd(config: &RunConfig, out: &Path, overrides: Overrides) -> Result<Value, CliError> {
    let mut built = config.build()?;
    overrides.apply(&mut built)?;
    let planned = run_plan(&built)?;
    let (z_series, _) = persistent_change_check(&planned, built.z_min);

    std::fs::create_dir_all(out)?;
    let csv_path = out.join("plan.csv");
    csvio::write_plan_csv(
        &csv_path,
        &planned,
        built.grasp.position(),
        built.grasp.attitude(),
        &z_series.values,
    )?;
    let summary = plan_summary(&built, &planned, Some(&csv_path));
    csvio::write_json(&out.join("plan_summary.json"), &summary)?;
    Ok(summary)
}

/// Runs the closed-loop simulation and writes `sim.csv` plus
/// `sim_summary.json` into `out`.
pub fn simulate_cmd(
    config: &RunConfig,
    out: &Path,
    overrides: Overrides,
) -> Result<Value, CliError> {
    let mut built = config.build()?;
    overrides.apply(&mut built)?;
    let sim_config = {
        let mut c = built.sim_config();
        c.dt = built.dt;
        c.duration = built.duration;
        c
    };
    let series = run(&sim_config)?;

    let mut report = min_speed(&series, built.v_min);
    report.flags = detect_degenerate(&series.lambda_rate, &series.times, built.grasp.pairs());
    let pose = pose_error(
        &series.load_position,
        &series.load_attitude,
        &series.target_position,
        &series.target_attitude,
    );
    let z_min_per_cable: Vec<Value> = series
        .z
        .iter()
        .map(|zi| {
            let (k, min) = zi
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .unwrap();
            json!({"min": min, "argmin_time": series.times[k]})
        })
        .collect();
    let persistent = series
        .z
        .iter()
        .all(|zi| zi.iter().all(|&z| z > built.z_min));

    std::fs::create_dir_all(out)?;
    let csv_path = out.join("sim.csv");
    csvio::write_sim_csv(&csv_path, &series)?;

    let (case1, case2, case2_total) = flags_json(&report.flags);
    let mut value = report_json(&report);
    let obj = value.as_object_mut().unwrap();
    obj.insert("command".into(), json!("simulate"));
    obj.insert("cables".into(), json!(series.carrier_position.len()));
    obj.insert("z_min".into(), json!(built.z_min));
    obj.insert("z_per_cable".into(), json!(z_min_per_cable));
    obj.insert("persistent_change".into(), json!(persistent));
    obj.insert("case1".into(), case1);
    obj.insert("case2_instants".into(), case2);
    obj.insert("case2_total".into(), json!(case2_total));
    obj.insert(
        "pose_error".into(),
        json!({
            "max_position": pose.max_position,
            "max_angle_deg": pose.max_angle.to_degrees(),
        }),
    );
    obj.insert("csv".into(), json!(csv_path.display().to_string()));
    csvio::write_json(&out.join("sim_summary.json"), &value)?;
    Ok(value)
}

/// Recomputes the non-stop and persistent-direction-change verdicts from a
/// stored series.
pub fn verify_cmd(
    csv: &Path,
    config: &RunConfig,
    overrides: Overrides,
) -> Result<Value, CliError> {
    let mut built = config.build()?;
    overrides.apply(&mut built)?;
    let n = built.load.cable_count();
    let m = built.lambda.dim();
    let series = csvio::read_series_csv(csv, n, m)?;

    let mut carriers = Vec::with_capacity(n);
    let mut min_tension = Vec::with_capacity(n);
    for i in 0..n {
        let mut best = f64::INFINITY;
        let mut best_t = 0.0;
        let mut tension = f64::INFINITY;
        for (k, &t) in series.times.iter().enumerate() {
            let s = series.speed(i, k);
            if s < best {
                best = s;
                best_t = t;
            }
            tension = tension.min(series.tension[i][k]);
        }
        carriers.push(json!({
            "min_speed": best,
            "argmin_time": best_t,
            "non_stop": best >= built.v_min,
        }));
        min_tension.push(tension);
    }
    let non_stop = carriers
        .iter()
        .all(|c| c["non_stop"].as_bool().unwrap_or(false));

    let flags = detect_degenerate(&series.lambda_rate, &series.times, built.grasp.pairs());
    let (case1, case2, case2_total) = flags_json(&flags);

    let z_min_per_cable: Vec<Value> = series
        .z
        .iter()
        .map(|zi| {
            let (k, min) = zi
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .unwrap();
            json!({"min": min, "argmin_time": series.times[k]})
        })
        .collect();
    let persistent = series
        .z
        .iter()
        .all(|zi| zi.iter().all(|&z| z > built.z_min));

    Ok(json!({
        "command": "verify",
        "csv": csv.display().to_string(),
        "cables": n,
        "v_min": built.v_min,
        "z_min": built.z_min,
        "carriers": carriers,
        "min_tension": min_tension,
        "non_stop": non_stop,
        "z_per_cable": z_min_per_cable,
        "persistent_change": persistent,
        "case1": case1,
        "case2_instants": case2,
        "case2_total": case2_total,
        "pass": non_stop && persistent,
    }))
}

/// One axis of a parameter sweep: `name=start:step:stop` over an
/// internal-force parameter (`phaseK`, `amplitudeK`, `frequencyK`,
/// `lambda0K` with `K` the 1-based component index).
#[derive(Debug, Clone)]
struct SweepAxis {
    name: String,
    field: LambdaField,
    component: usize,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LambdaField {
    Phase,
    Amplitude,
    Frequency,
    Lambda0,
}

fn parse_axis(spec: &str, lambda_dim: usize) -> Result<SweepAxis, CliError> {
    let (name, range) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("sweep axis '{spec}' must look like name=start:step:stop")))?;
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "sweep axis '{spec}' must look like name=start:step:stop"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("sweep axis '{spec}': {e}")))?;
    let (start, step, stop) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || stop < start {
        return Err(CliError::Config(format!(
            "sweep axis '{spec}': need step > 0 and stop >= start"
        )));
    }
    let (field, index_str) = if let Some(rest) = name.strip_prefix("phase") {
        (LambdaField::Phase, rest)
    } else if let Some(rest) = name.strip_prefix("amplitude") {
        (LambdaField::Amplitude, rest)
    } else if let Some(rest) = name.strip_prefix("frequency") {
        (LambdaField::Frequency, rest)
    } else if let Some(rest) = name.strip_prefix("lambda0") {
        (LambdaField::Lambda0, rest)
    } else {
        return Err(CliError::Config(format!(
            "sweep axis '{name}' is not one of phaseK, amplitudeK, frequencyK, lambda0K"
        )));
    };
    let component: usize = index_str
        .parse()
        .map_err(|_| CliError::Config(format!("sweep axis '{name}': bad component index")))?;
    if component == 0 || component > lambda_dim {
        return Err(CliError::Config(format!(
            "sweep axis '{name}': component must be in 1..={lambda_dim}"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    let values = (0..count).map(|k| start + step * k as f64).collect();
    Ok(SweepAxis {
        name: name.to_string(),
        field,
        component: component - 1,
        values,
    })
}

fn patched_config(base: &RunConfig, axes: &[SweepAxis], point: &[f64]) -> RunConfig {
    let mut config = base.clone();
    for (axis, &value) in axes.iter().zip(point) {
        let target = match axis.field {
            LambdaField::Phase => &mut config.lambda.phase,
            LambdaField::Amplitude => &mut config.lambda.amplitude,
            LambdaField::Frequency => &mut config.lambda.frequency,
            LambdaField::Lambda0 => &mut config.lambda.lambda0,
        };
        target[axis.component] = value;
    }
    config
}

/// Plans every grid point of a one- or two-axis sweep (in parallel) and
/// writes one CSV row per point: the varied values, the global speed
/// minimum, the `z` minimum, and the degenerate/slack flags.
pub fn sweep_cmd(
    config: &RunConfig,
    vary: &[String],
    out: &Path,
    overrides: Overrides,
) -> Result<Value, CliError> {
    if vary.is_empty() || vary.len() > 2 {
        return Err(CliError::Config(format!(
            "sweep needs one or two --vary axes, got {}",
            vary.len()
        )));
    }
    let lambda_dim = RunConfig::expected_lambda_dim(config.load.anchors.len());
    let axes: Vec<SweepAxis> = vary
        .iter()
        .map(|spec| parse_axis(spec, lambda_dim))
        .collect::<Result<_, _>>()?;

    let mut points: Vec<Vec<f64>> = Vec::new();
    match axes.len() {
        1 => {
            for &a in &axes[0].values {
                points.push(vec![a]);
            }
        }
        _ => {
            for &a in &axes[0].values {
                for &b in &axes[1].values {
                    points.push(vec![a, b]);
                }
            }
        }
    }

    let rows: Vec<Result<Vec<f64>, CliError>> = points
        .par_iter()
        .map(|point| {
            let patched = patched_config(config, &axes, point);
            let mut built = patched.build()?;
            overrides.apply(&mut built)?;
            let mut row = point.clone();
            match run_plan(&built) {
                Ok(planned) => {
                    let mut report = min_speed(&planned, built.v_min);
                    report.flags =
                        detect_degenerate(&planned.lambda_rate, &planned.times, built.grasp.pairs());
                    let (z_series, _) = persistent_change_check(&planned, built.z_min);
                    let global_min = report
                        .carriers
                        .iter()
                        .map(|c| c.min_speed)
                        .fold(f64::INFINITY, f64::min);
                    let min_z = z_series.min.iter().copied().fold(f64::INFINITY, f64::min);
                    row.extend_from_slice(&[
                        global_min,
                        min_z,
                        if report.flags.case1.is_empty() { 0.0 } else { 1.0 },
                        if report.flags.case2.is_empty() { 0.0 } else { 1.0 },
                        0.0,
                    ]);
                    Ok(row)
                }
                Err(CliError::Slack(_)) => {
                    row.extend_from_slice(&[f64::NAN, f64::NAN, 0.0, 0.0, 1.0]);
                    Ok(row)
                }
                Err(e) => Err(e),
            }
        })
        .collect();
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_, _>>()?;

    let mut header: Vec<String> = axes.iter().map(|a| a.name.clone()).collect();
    header.extend(
        ["min_speed", "min_z", "case1", "case2", "slack"]
            .iter()
            .map(|s| s.to_string()),
    );
    std::fs::create_dir_all(out)?;
    let csv_path = out.join("sweep.csv");
    csvio::write_rows(&csv_path, &header, rows.into_iter())?;

    Ok(json!({
        "command": "sweep",
        "axes": axes.iter().map(|a| json!({"name": a.name, "points": a.values.len()})).collect::<Vec<_>>(),
        "points": points.len(),
        "csv": csv_path.display().to_string(),
    }))
}

/// `analyze` plus optional report file, used by the binary.
pub fn analyze_cmd(config: &RunConfig, out: Option<&PathBuf>) -> Result<Value, CliError> {
    let value = analyze(config)?;
    if let Some(out) = out {
        std::fs::create_dir_all(out)?;
        csvio::write_json(&out.join("analyze.json"), &value)?;
    }
    Ok(value)
}
