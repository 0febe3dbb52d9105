//! Acceptance suite. Runs every criterion at its pinned tolerance and prints
//! one PASS/FAIL line each; exits non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use mocapvar::covariance::{fuse, single_view_covariance, single_view_information, Information3, MPolicy};
use mocapvar::geometry::{project, CameraModel, PixelPoint, Point3, Rotation3, Vector3};
use mocapvar::montecarlo::McConfig;
use mocapvar::scenario::{ring_scenario, run_fig4};
use mocapvar::triangulation::{triangulate_gls, triangulate_midpoint};
use mocapvar::CameraId;
use nalgebra::{Matrix2, Matrix3, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Ring parameters shared by the CLI and the analytic values.
const SIGMA: f64 = 1e-5;
const FOCAL: f64 = 0.01;
const RADIUS: f64 = 10.0;
const S: f64 = SIGMA * RADIUS / FOCAL;

struct Cli {
    dir: TempDir,
}

impl Cli {
    fn new() -> Self {
        Cli {
            dir: tempfile::tempdir().expect("temp dir"),
        }
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_string_lossy().into_owned()
    }

    /// Runs the binary; returns stdout on exit 0.
    fn run(&self, args: &[&str]) -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_mocapvar"))
            .args(args)
            .current_dir(self.dir.path())
            .output()
            .map_err(|e| e.to_string())?;
        if out.status.success() {
            Ok(out.stdout)
        } else {
            Err(format!(
                "mocapvar {} exited {:?}: {}",
                args.join(" "),
                out.status.code(),
                String::from_utf8_lossy(&out.stderr)
            ))
        }
    }

    fn json(&self, args: &[&str]) -> Result<Value, String> {
        let mut full = args.to_vec();
        full.extend(["--format", "json"]);
        serde_json::from_slice(&self.run(&full)?).map_err(|e| e.to_string())
    }

    fn ring(&self, name: &str, cameras: usize) -> Result<String, String> {
        let path = self.path(name);
        self.run(&["ring-gen", "--cameras", &cameras.to_string(), "--output", &path])?;
        Ok(path)
    }
}

fn num(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

fn fig5_pair_ellipses() -> Outcome {
    let cli = Cli::new();
    let report = cli.json(&["fig5", "--trials", "100000", "--seed", "0"])?;
    let rows = report["results"].as_array().ok_or("no rows")?;
    check(rows.len() == 4, || format!("{} rows", rows.len()))?;
    let mut worst_analytic: f64 = 0.0;
    let mut worst_mc: f64 = 0.0;
    let mut majors = Vec::new();
    for (row, angle) in rows.iter().zip([FRAC_PI_8, FRAC_PI_4, 3.0 * FRAC_PI_8, FRAC_PI_2]) {
        let (major, minor) = (num(&row["theory_major"]), num(&row["theory_minor"]));
        worst_analytic = worst_analytic
            .max((major / (S / (1.0 - angle.cos()).sqrt()) - 1.0).abs())
            .max((minor / (S / (1.0 + angle.cos()).sqrt()) - 1.0).abs());
        worst_mc = worst_mc
            .max((num(&row["mc_major"]) / major - 1.0).abs())
            .max((num(&row["mc_minor"]) / minor - 1.0).abs());
        majors.push(major);
    }
    let last = &rows[3];
    let circle = (num(&last["theory_major"]) / num(&last["theory_minor"]) - 1.0).abs();
    check(worst_analytic < 1e-9, || format!("analytic axis error {worst_analytic:e}"))?;
    check(majors.windows(2).all(|w| w[1] < w[0]), || format!("majors not decreasing: {majors:?}"))?;
    check(circle < 1e-9, || format!("pi/2 axis ratio off by {circle:e}"))?;
    check(worst_mc < 0.05, || format!("MC axis error {:.2}%", 100.0 * worst_mc))?;
    Ok(format!(
        "analytic rel err {worst_analytic:.1e}, circle err {circle:.1e}, worst MC axis err {:.2}% (N=1e5)",
        100.0 * worst_mc
    ))
}

fn fig4_camera_counts() -> Outcome {
    let cli = Cli::new();
    let report = cli.json(&["fig4", "--m-list", "2,4,16,64", "--points", "200", "--trials", "10000"])?;
    let rows = report["results"].as_array().ok_or("no rows")?;
    check(rows.len() == 4, || format!("{} rows", rows.len()))?;
    let means: Vec<f64> = rows.iter().map(|r| num(&r["mean_percent_diff"])).collect();
    for r in rows {
        check(r["points_used"].as_u64() == Some(200), || format!("points used: {}", r["points_used"]))?;
    }
    check(means.iter().all(|&m| m < 10.0), || format!("means {means:?}"))?;

    // Median over seeds, per m, at N = 1e2 and N = 1e4.
    let base = ring_scenario(256, RADIUS, 0.0, FOCAL, SIGMA).map_err(|e| e.to_string())?;
    let m_values = [2, 4, 16, 64];
    let medians = |trials: usize| -> Result<Vec<f64>, String> {
        let per_seed: Vec<Vec<f64>> = (1..=5u64)
            .map(|seed| {
                run_fig4(&base, &m_values, 40, &McConfig::new(trials, seed))
                    .map(|rows| rows.iter().map(|r| r.mean_percent_diff).collect())
                    .map_err(|e| e.to_string())
            })
            .collect::<Result<_, _>>()?;
        Ok((0..m_values.len())
            .map(|i| {
                let mut v: Vec<f64> = per_seed.iter().map(|r| r[i]).collect();
                v.sort_by(f64::total_cmp);
                v[v.len() / 2]
            })
            .collect())
    };
    let (coarse, fine) = (medians(100)?, medians(10_000)?);
    check(coarse.iter().zip(&fine).all(|(c, f)| f <= c), || {
        format!("median grew: N=1e2 {coarse:?} vs N=1e4 {fine:?}")
    })?;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join("/");
    Ok(format!(
        "means {}% for m=2/4/16/64 (200 pts, N=1e4); seed medians {} -> {}",
        fmt(&means),
        fmt(&coarse),
        fmt(&fine)
    ))
}

fn network(seed: u64) -> (Point3, Vec<CameraModel>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = common::random_target(&mut rng);
    let cams = common::random_network(&mut rng, &target, 2 + (seed as usize % 7));
    (target, cams)
}

fn oracle_equivalence() -> Outcome {
    let e = |e: mocapvar::Error| e.to_string();
    let mut worst_identity: f64 = 0.0;
    let mut worst_perm: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    for seed in 0..100u64 {
        let (p, cams) = network(7_000 + seed);
        for cam in &cams {
            for m in [1e-2, 1.0, 1e2] {
                let cov = single_view_covariance(cam, &p, MPolicy::Finite(m)).map_err(e)?;
                let info = single_view_information(cam, &p, MPolicy::Finite(m)).map_err(e)?;
                worst_identity = worst_identity.max((info.matrix() * cov.matrix() - Matrix3::identity()).amax());
            }
        }

        let infos = |policy| -> Result<Vec<Information3>, String> {
            cams.iter().map(|c| single_view_information(c, &p, policy).map_err(e)).collect()
        };
        let limit = fuse(&infos(MPolicy::Limit)?).map_err(e)?;
        let gaps: Vec<f64> = [1e4, 1e6, 1e8, 1e10]
            .iter()
            .map(|&m| Ok((fuse(&infos(MPolicy::Finite(m))?).map_err(e)?.overall_std() - limit.overall_std()).abs()))
            .collect::<Result<_, String>>()?;
        check(gaps.windows(2).all(|w| w[1] < w[0]), || format!("seed {seed}: gaps {gaps:?}"))?;
        check(gaps[3] < 1e-9 * limit.overall_std(), || format!("seed {seed}: final gap {:e}", gaps[3]))?;

        let mut shuffled = infos(MPolicy::Limit)?;
        shuffled.shuffle(&mut rng);
        let fused = fuse(&shuffled).map_err(e)?;
        worst_perm = worst_perm.max((fused.matrix() - limit.matrix()).amax() / limit.matrix().amax());
    }
    check(worst_identity < 1e-8, || format!("identity residual {worst_identity:e}"))?;
    check(worst_perm <= 1e-12, || format!("permutation difference {worst_perm:e}"))?;
    Ok(format!(
        "100 configs: |I - X*Sigma| <= {worst_identity:.1e}, convergence monotone, permutation diff {worst_perm:.1e}"
    ))
}

fn analytic_spot_values() -> Outcome {
    let cli = Cli::new();
    let file = cli.ring("ring4.json", 4)?;
    let report = cli.json(&["eval", "--scenario", &file, "--point", "0,0,0", "--subset", "0,1"])?;
    let overall = num(&report["results"]["overall_std"]);
    let err = (overall - S * 2.5f64.sqrt()).abs();
    check(err < 1e-9, || format!("overall std off by {err:e}"))?;

    // pi/4 on the 16-ring: dense inverse + eigen-decomposition oracle.
    let ring = ring_scenario(16, RADIUS, 0.0, FOCAL, SIGMA).map_err(|e| e.to_string())?;
    let pair = [&ring.cameras()[0], &ring.cameras()[2]];
    let sum = pair
        .iter()
        .map(|c| single_view_information(c, &Point3::origin(), MPolicy::Limit).map(|i| *i.matrix()))
        .try_fold(Matrix3::zeros(), |acc, m| m.map(|m| acc + m))
        .map_err(|e| e.to_string())?;
    let dense = sum.try_inverse().ok_or("singular oracle")?;
    let block = Matrix2::new(dense[(0, 0)], dense[(0, 1)], dense[(1, 0)], dense[(1, 1)]);
    let mut ev: Vec<f64> = SymmetricEigen::new(block).eigenvalues.iter().map(|v| v.sqrt() / S).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    check((ev[0] - 1.84776).abs() < 1e-5 && (ev[1] - 0.76537).abs() < 1e-5, || format!("oracle axes {ev:?}"))?;

    let fig5 = cli.json(&["fig5", "--trials", "2"])?;
    let row = &fig5["results"][1];
    let (a, b) = (num(&row["theory_major"]) / S, num(&row["theory_minor"]) / S);
    check((a - 1.84776).abs() < 1e-5 && (b - 0.76537).abs() < 1e-5, || format!("pi/4 axes {a}, {b}"))?;
    check((a - ev[0]).abs() < 1e-9 && (b - ev[1]).abs() < 1e-9, || "closed form disagrees with oracle".into())?;
    Ok(format!("s*sqrt(2.5) err {err:.1e}; pi/4 axes {a:.6}*s, {b:.6}*s"))
}

fn triangulation() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..1000u64 {
        let (p, cams) = network(20_000 + seed);
        let obs: Vec<(&CameraModel, PixelPoint)> =
            cams.iter().map(|c| (c, project(c, &p).unwrap())).collect();
        for estimate in [triangulate_midpoint(&obs), triangulate_gls(&obs, 2)] {
            worst = worst.max((estimate.map_err(|e| e.to_string())? - p).norm());
        }
    }
    check(worst < 1e-9, || format!("noiseless error {worst:e} m"))?;

    // sigma/f = 1e-3, three cameras, off-center target.
    let p = Point3::new(0.4, -0.3, 0.2);
    let cams: Vec<CameraModel> = [(10.0, 0.0, 1.0), (-3.0, 9.0, -1.0), (-6.0, -8.0, 2.0)]
        .iter()
        .enumerate()
        .map(|(i, &(x, y, z))| {
            let c = Point3::new(x, y, z);
            let r = Rotation3::look_at(&c, &Point3::origin(), &Vector3::z()).unwrap();
            CameraModel::new(CameraId(i as u32), c, r, FOCAL, SIGMA).unwrap()
        })
        .collect();
    let refs: Vec<&CameraModel> = cams.iter().collect();
    let r = mocapvar::mc_covariance(&refs, &p, &McConfig::new(100_000, 123)).map_err(|e| e.to_string())?;
    let centered = r.mean_centered_cov();
    let mut worst_z: f64 = 0.0;
    for axis in 0..3 {
        let se = (centered.matrix()[(axis, axis)] / r.trials_used as f64).sqrt();
        worst_z = worst_z.max(r.sample_mean_error[axis].abs() / se);
    }
    check(worst_z <= 3.0, || format!("bias {worst_z:.2} standard errors"))?;
    Ok(format!("noiseless max error {worst:.1e} m over 1000 configs; GLS bias {worst_z:.2} SE (N=1e5)"))
}

fn error_map_speed() -> Outcome {
    let cli = Cli::new();
    let file = cli.ring("ring16.json", 16)?;
    let grid = cli.path("grid.csv");
    let report = cli.json(&[
        "error-map", "--scenario", &file, "--dims", "10,10,10", "--out", &grid, "--with-mc", "--trials", "10000",
    ])?;
    let t = &report["timings"];
    let ratio = num(&t["speed_ratio"]);
    let voxels = report["results"]["mc_std"]["count"].as_u64().unwrap_or(0);
    check(voxels > 0, || "no voxel reconstructed by MC".into())?;
    check(ratio >= 100.0, || format!("speed ratio {ratio:.1}"))?;
    Ok(format!(
        "closed form {:.4} s vs MC {:.2} s on 1000 voxels: {ratio:.0}x",
        num(&t["closed_form"]),
        num(&t["monte_carlo"])
    ))
}

/// Report bytes up to the timings block, which is always last.
fn payload(bytes: &[u8]) -> Vec<u8> {
    let text = String::from_utf8_lossy(bytes);
    match text.find("\n  \"timings\": ") {
        Some(i) => text[..i].as_bytes().to_vec(),
        None => bytes.to_vec(),
    }
}

fn determinism() -> Outcome {
    let cli = Cli::new();
    let ring8 = cli.ring("ring8.json", 8)?;
    let (grid, curves) = (cli.path("grid.csv"), cli.path("curves.csv"));
    let commands: Vec<(&str, Vec<&str>, Option<&str>)> = vec![
        ("eval", vec!["eval", "--scenario", &ring8, "--point", "1,-2,0.5"], None),
        (
            "mc-compare",
            vec!["mc-compare", "--scenario", &ring8, "--point", "1,-2,0.5", "--trials", "3000", "--subset", "0,2,5"],
            None,
        ),
        ("fig4", vec!["fig4", "--m-list", "2,16", "--points", "8", "--trials", "300"], None),
        ("fig5", vec!["fig5", "--trials", "3000", "--curves", &curves], Some(curves.as_str())),
        (
            "error-map",
            vec!["error-map", "--scenario", &ring8, "--dims", "4,3,2", "--out", &grid, "--with-mc", "--trials", "200"],
            Some(grid.as_str()),
        ),
        ("select", vec!["select", "--scenario", &ring8, "--point", "0,1,0", "--k", "4"], None),
        ("ring-gen", vec!["ring-gen", "--cameras", "5", "--m-policy", "finite-default"], None),
    ];
    for (name, args, side_file) in &commands {
        let mut seen: Option<(Vec<u8>, Option<Vec<u8>>)> = None;
        for threads in ["1", "1", "3"] {
            let mut full = args.clone();
            full.extend(["--seed", "11", "--threads", threads]);
            let out = payload(&cli.run(&full)?);
            let side = side_file.map(|p| std::fs::read(Path::new(p)).expect("side output"));
            match &seen {
                None => seen = Some((out, side)),
                Some((first, first_side)) => {
                    check(&out == first, || format!("{name}: report differs with --threads {threads}"))?;
                    check(&side == first_side, || format!("{name}: side output differs with --threads {threads}"))?;
                }
            }
        }
    }
    Ok(format!("{} commands byte-identical across 2 runs and 1 vs 3 threads", commands.len()))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("pair-angle ellipses on the 16-camera ring", fig5_pair_ellipses),
        ("camera-count study on the 256-camera ring", fig4_camera_counts),
        ("oracle equivalence", oracle_equivalence),
        ("analytic spot values", analytic_spot_values),
        ("triangulation", triangulation),
        ("error-map speed", error_map_speed),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (title, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} PASS  {title}: {detail} [{secs:.1} s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL  {title}: {why} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
