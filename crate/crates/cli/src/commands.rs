use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};
use std::path::Path;

use mocapvar::geometry::{CameraId, CameraModel, Point3};
use mocapvar::montecarlo::{self, Estimator, McConfig};
use mocapvar::scenario::{self, Scenario};
use mocapvar::triangulation::DEFAULT_GLS_ITERATIONS;
use mocapvar::{Covariance3, MPolicy, MeasurementGaussian};
use serde_json::{json, Value};

use crate::args::{
    EstimatorArg, ErrorMapArgs, EvalArgs, Fig4Args, Fig5Args, McCompareArgs, RingGenArgs, SelectArgs,
};
use crate::error::CliError;
use crate::output::{fmt_f64, write_bytes, Table, Timings};
use crate::scenario_file::{MPolicyEntry, ScenarioFile};

/// Angles of the pair study, radians.
pub const FIG5_ANGLES: [f64; 4] = [FRAC_PI_8, FRAC_PI_4, 3.0 * FRAC_PI_8, FRAC_PI_2];
pub const CURVE_POINTS: usize = 64;

/// What a command produced, before it is rendered.
pub struct Outcome {
    pub seed: u64,
    pub scenario_hash: Option<String>,
    pub results: Value,
    pub table: Option<Table>,
    pub timings: Timings,
    /// Output that bypasses the report entirely.
    pub raw: Option<Vec<u8>>,
}

impl Outcome {
    fn new(seed: u64, results: Value, table: Table, timings: Timings) -> Self {
        Outcome {
            seed,
            scenario_hash: None,
            results,
            table: Some(table),
            timings,
            raw: None,
        }
    }

    fn hashed(mut self, file: &ScenarioFile) -> Self {
        self.scenario_hash = Some(file.digest());
        self
    }
}

struct Loaded {
    file: ScenarioFile,
    scenario: Scenario,
    seed: u64,
}

fn load(path: &Path, seed: Option<u64>, timings: &mut Timings) -> Result<Loaded, CliError> {
    let (file, mut scenario) = timings.time("load", || ScenarioFile::load(path))?;
    if let Some(s) = seed {
        scenario.seed = s;
    }
    Ok(Loaded {
        seed: scenario.seed,
        file,
        scenario,
    })
}

fn point_in_room(scenario: &Scenario, p: [f64; 3]) -> Result<Point3, CliError> {
    let point = Point3::from(p);
    if !scenario.room.contains(&point) {
        return Err(CliError::Input(format!("point {p:?} is outside the room")));
    }
    Ok(point)
}

fn subset_ids(subset: &Option<Vec<u32>>) -> Option<Vec<CameraId>> {
    subset.as_ref().map(|ids| ids.iter().copied().map(CameraId).collect())
}

fn policy_json(policy: MPolicy) -> Value {
    match policy {
        MPolicy::Limit => json!({"mode": "limit"}),
        MPolicy::Finite(m) => json!({"mode": "finite", "m": m}),
    }
}

fn ids_json(cameras: &[&CameraModel]) -> Value {
    json!(cameras.iter().map(|c| c.id.0).collect::<Vec<_>>())
}

fn long_table(rows: &[(String, f64)]) -> Table {
    let mut t = Table::new(&["quantity", "value"]);
    for (name, value) in rows {
        t.push(vec![name.clone(), fmt_f64(*value)]);
    }
    t
}

fn cov_rows(prefix: &str, cov: &Covariance3) -> Vec<(String, f64)> {
    cov.to_row_major()
        .iter()
        .enumerate()
        .map(|(i, &v)| (format!("{prefix}_{}{}", i / 3, i % 3), v))
        .collect()
}

pub fn eval(args: &EvalArgs, seed: Option<u64>) -> Result<Outcome, CliError> {
    let mut timings = Timings::default();
    let l = load(&args.scenario, seed, &mut timings)?;
    let point = point_in_room(&l.scenario, args.point)?;
    let ids = subset_ids(&args.subset);
    let cameras = l.scenario.select(ids.as_deref())?;
    if cameras.len() < 2 {
        return Err(CliError::Numerical(format!(
            "{} camera(s) cannot triangulate a point; the fused covariance is singular",
            cameras.len()
        )));
    }
    let policy = l.scenario.m_policy;
    let (cov, views) = timings.time("compute", || -> Result<_, CliError> {
        let cov = l.scenario.fused_covariance(&cameras, &point)?;
        let views = cameras
            .iter()
            .map(|c| MeasurementGaussian::new(c, &point, policy))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((cov, views))
    })?;

    let per_camera: Vec<Value> = views
        .iter()
        .map(|v| json!({"id": v.camera_id.0, "s": v.propagated_std, "depth": v.depth}))
        .collect();
    let results = json!({
        "point": args.point,
        "cameras": ids_json(&cameras),
        "m_policy": policy_json(policy),
        "covariance": cov.to_row_major(),
        "overall_std": cov.overall_std(),
        "per_camera": per_camera,
    });

    let mut rows = cov_rows("cov", &cov);
    rows.push(("overall_std".into(), cov.overall_std()));
    for v in &views {
        rows.push((format!("s_{}", v.camera_id), v.propagated_std));
        rows.push((format!("depth_{}", v.camera_id), v.depth));
    }
    Ok(Outcome::new(l.seed, results, long_table(&rows), timings).hashed(&l.file))
}

fn estimator(arg: EstimatorArg) -> Estimator {
    match arg {
        EstimatorArg::Gls => Estimator::Gls {
            iterations: DEFAULT_GLS_ITERATIONS,
        },
        EstimatorArg::Midpoint => Estimator::Midpoint,
    }
}

pub fn mc_compare(args: &McCompareArgs, seed: Option<u64>) -> Result<Outcome, CliError> {
    let mut timings = Timings::default();
    let l = load(&args.scenario, seed, &mut timings)?;
    let point = point_in_room(&l.scenario, args.point)?;
    let ids = subset_ids(&args.subset);
    let cameras = l.scenario.select(ids.as_deref())?;
    let theory = timings.time("closed_form", || l.scenario.fused_covariance(&cameras, &point))?;
    let cfg = McConfig::new(args.trials, l.seed).with_estimator(estimator(args.estimator));
    let mc = timings.time("monte_carlo", || montecarlo::mc_covariance(&cameras, &point, &cfg))?;
    let percent = montecarlo::percent_std_difference(&mc, &theory)?;

    let results = json!({
        "point": args.point,
        "cameras": ids_json(&cameras),
        "trials": args.trials,
        "trials_used": mc.trials_used,
        "excluded": mc.excluded,
        "estimator": args.estimator,
        "theory_covariance": theory.to_row_major(),
        "sample_covariance": mc.sample_cov.to_row_major(),
        "sample_mean_error": [mc.sample_mean_error.x, mc.sample_mean_error.y, mc.sample_mean_error.z],
        "theory_std": theory.overall_std(),
        "sample_std": mc.overall_std(),
        "percent_difference": percent,
    });

    let mut rows = cov_rows("theory", &theory);
    rows.extend(cov_rows("sample", &mc.sample_cov));
    rows.push(("theory_std".into(), theory.overall_std()));
    rows.push(("sample_std".into(), mc.overall_std()));
    rows.push(("percent_difference".into(), percent));
    Ok(Outcome::new(l.seed, results, long_table(&rows), timings).hashed(&l.file))
}

pub fn fig4(args: &Fig4Args, seed: Option<u64>) -> Result<Outcome, CliError> {
    let seed = seed.unwrap_or(0);
    let mut timings = Timings::default();
    let base = scenario::ring_scenario(args.ring_size, args.radius, 0.0, args.focal, args.sigma)?;
    let rows = timings.time("compute", || {
        scenario::run_fig4(&base, &args.m_list, args.points, &McConfig::new(args.trials, seed))
    })?;

    let mut table = Table::new(&["m", "mean_percent_diff", "stderr", "points_used"]);
    for r in &rows {
        table.push(vec![
            r.m.to_string(),
            fmt_f64(r.mean_percent_diff),
            fmt_f64(r.stderr),
            r.points_used.to_string(),
        ]);
    }
    let results = json!(rows
        .iter()
        .map(|r| json!({
            "m": r.m,
            "mean_percent_diff": r.mean_percent_diff,
            "stderr": r.stderr,
            "points_used": r.points_used,
        }))
        .collect::<Vec<_>>());
    Ok(Outcome::new(seed, results, table, timings))
}

pub fn fig5(args: &Fig5Args, seed: Option<u64>) -> Result<Outcome, CliError> {
    let seed = seed.unwrap_or(0);
    let mut timings = Timings::default();
    let rows = timings.time("compute", || scenario::run_fig5(&FIG5_ANGLES, &McConfig::new(args.trials, seed)))?;

    let mut table = Table::new(&[
        "angle_rad",
        "theory_major",
        "theory_minor",
        "mc_major",
        "mc_minor",
        "theory_angle_deg",
        "mc_angle_deg",
    ]);
    let mut curves = Table::new(&["angle_rad", "curve", "index", "x", "y", "z"]);
    let mut results = Vec::new();
    for r in &rows {
        table.push(vec![
            fmt_f64(r.angle),
            fmt_f64(r.theory.axis_lengths.0),
            fmt_f64(r.theory.axis_lengths.1),
            fmt_f64(r.sample.axis_lengths.0),
            fmt_f64(r.sample.axis_lengths.1),
            fmt_f64(r.theory.major_angle_deg()),
            fmt_f64(r.sample.major_angle_deg()),
        ]);
        for (name, section) in [("theory", &r.theory), ("mc", &r.sample)] {
            for (i, q) in section.polyline(CURVE_POINTS).iter().enumerate() {
                curves.push(vec![fmt_f64(r.angle), name.into(), i.to_string(), fmt_f64(q.x), fmt_f64(q.y), fmt_f64(q.z)]);
            }
        }
        results.push(json!({
            "angle_rad": r.angle,
            "pair": [r.pair.0 .0, r.pair.1 .0],
            "theory_major": r.theory.axis_lengths.0,
            "theory_minor": r.theory.axis_lengths.1,
            "mc_major": r.sample.axis_lengths.0,
            "mc_minor": r.sample.axis_lengths.1,
            "theory_angle_deg": r.theory.major_angle_deg(),
            "mc_angle_deg": r.sample.major_angle_deg(),
            "theory_covariance": r.theory_cov.to_row_major(),
            "sample_covariance": r.mc.sample_cov.to_row_major(),
        }));
    }
    if let Some(path) = &args.curves {
        write_bytes(Some(path), &curves.to_bytes()?)?;
    }
    Ok(Outcome::new(seed, json!(results), table, timings))
}

fn summary(values: impl Iterator<Item = f64>) -> Value {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        return json!({"count": 0});
    }
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    json!({"count": v.len(), "min": min, "max": max, "mean": mean})
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn error_map(args: &ErrorMapArgs, seed: Option<u64>) -> Result<Outcome, CliError> {
    let mut timings = Timings::default();
    let l = load(&args.scenario, seed, &mut timings)?;
    let ids = subset_ids(&args.subset);
    let map = timings.time("closed_form", || scenario::error_map(&l.scenario, args.dims, ids.as_deref()))?;

    let mc = if args.with_mc {
        let cfg = McConfig::new(args.trials, l.seed);
        let mc = timings.time("monte_carlo", || scenario::error_map_mc(&l.scenario, args.dims, ids.as_deref(), &cfg))?;
        let (closed, sampled) = (timings.get("closed_form").unwrap(), timings.get("monte_carlo").unwrap());
        timings.insert("speed_ratio", sampled / closed.max(f64::MIN_POSITIVE));
        Some(mc)
    } else {
        None
    };

    let mut header = vec!["ix", "iy", "iz", "x", "y", "z", "visible", "std"];
    if mc.is_some() {
        header.push("mc_std");
    }
    let mut grid = Table::new(&header);
    for flat in 0..map.len() {
        let c = map.voxel_center(flat);
        let [nx, ny, _] = map.dims;
        let mut row = vec![
            (flat % nx).to_string(),
            ((flat / nx) % ny).to_string(),
            (flat / (nx * ny)).to_string(),
            fmt_f64(c.x),
            fmt_f64(c.y),
            fmt_f64(c.z),
            map.visible[flat].to_string(),
            opt(map.std[flat]),
        ];
        if let Some(mc) = &mc {
            row.push(opt(mc[flat]));
        }
        grid.push(row);
    }
    write_bytes(Some(&args.out), &grid.to_bytes()?)?;

    let mut results = json!({
        "dims": map.dims,
        "origin": [map.origin.x, map.origin.y, map.origin.z],
        "spacing": [map.spacing.x, map.spacing.y, map.spacing.z],
        "voxels": map.len(),
        "std": summary(map.std.iter().flatten().copied()),
    });
    if let Some(mc) = &mc {
        let diffs = map
            .std
            .iter()
            .zip(mc)
            .filter_map(|(t, s)| Some(100.0 * (s.as_ref()? - t.as_ref()?).abs() / t.as_ref()?));
        results["trials"] = json!(args.trials);
        results["mc_std"] = summary(mc.iter().flatten().copied());
        results["percent_difference"] = summary(diffs);
    }
    Ok(Outcome::new(l.seed, results, grid, timings).hashed(&l.file))
}

pub fn select(args: &SelectArgs, seed: Option<u64>) -> Result<Outcome, CliError> {
    let mut timings = Timings::default();
    let l = load(&args.scenario, seed, &mut timings)?;
    let point = point_in_room(&l.scenario, args.point)?;
    let (ranking, greedy) = timings.time("compute", || -> Result<_, CliError> {
        let greedy = scenario::greedy_select(&l.scenario, &point, args.k)?;
        Ok((scenario::rank_pairs(&l.scenario, &point)?, greedy))
    })?;

    let mut table = Table::new(&["rank", "camera_a", "camera_b", "quality"]);
    for (i, e) in ranking.entries.iter().enumerate() {
        table.push(vec![(i + 1).to_string(), e.a.to_string(), e.b.to_string(), fmt_f64(e.quality)]);
    }
    let results = json!({
        "point": args.point,
        "ranking": ranking
            .entries
            .iter()
            .map(|e| json!({"a": e.a.0, "b": e.b.0, "quality": e.quality}))
            .collect::<Vec<_>>(),
        "greedy": {
            "k": args.k,
            "cameras": greedy.cameras.iter().map(|c| c.0).collect::<Vec<_>>(),
            "stds": greedy.stds,
        },
    });
    Ok(Outcome::new(l.seed, results, table, timings).hashed(&l.file))
}

fn parse_policy(s: &str) -> Result<MPolicyEntry, CliError> {
    match s {
        "limit" => Ok(MPolicyEntry::Limit),
        "finite-default" => Ok(MPolicyEntry::FiniteDefault),
        other => match other.parse::<f64>() {
            Ok(m) if m.is_finite() && m > 0.0 => Ok(MPolicyEntry::Finite { m }),
            _ => Err(CliError::Input(format!(
                "--m-policy must be limit, finite-default or a positive number, got {other:?}"
            ))),
        },
    }
}

pub fn ring_gen(args: &RingGenArgs, seed: Option<u64>) -> Result<Outcome, CliError> {
    let seed = seed.unwrap_or(0);
    let policy = parse_policy(&args.m_policy)?;
    let file = ScenarioFile::ring(args.cameras, args.radius, args.height, args.focal, args.sigma, policy, seed)?;
    // Reject anything the loader would reject.
    file.to_scenario()?;
    let mut text = serde_json::to_string_pretty(&file).expect("scenario files always serialize");
    text.push('\n');
    Ok(Outcome {
        seed,
        scenario_hash: Some(file.digest()),
        results: Value::Null,
        table: None,
        timings: Timings::default(),
        raw: Some(text.into_bytes()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_flag() {
        assert_eq!(parse_policy("limit").unwrap(), MPolicyEntry::Limit);
        assert_eq!(parse_policy("finite-default").unwrap(), MPolicyEntry::FiniteDefault);
        assert_eq!(parse_policy("1e9").unwrap(), MPolicyEntry::Finite { m: 1e9 });
        for bad in ["0", "-3", "inf", "huge"] {
            assert!(parse_policy(bad).is_err());
        }
    }

    #[test]
    fn covariance_rows_are_row_major() {
        let cov = Covariance3::new(nalgebra::Matrix3::new(4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0)).unwrap();
        let rows = cov_rows("c", &cov);
        assert_eq!(rows[1], ("c_01".to_string(), 1.0));
        assert_eq!(rows[5], ("c_12".to_string(), 0.5));
        assert_eq!(rows[8], ("c_22".to_string(), 2.0));
    }
}
