use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use heatstore::calibration::{calibrate_gamma, calibrate_l, calibrate_l0};
use heatstore::config::RunConfig;
use heatstore::costs::TerminalSpec;
use heatstore::grid::Grid3;
use heatstore::model;
use heatstore::policy::{summarize, value_at, Simulator};
use heatstore::solver::{
    backward_recursion_with, read_snapshot, write_slice_csv, write_snapshot, CubeCollector,
    CubeMax, Snapshot, SliceSink, Tee,
};
use heatstore::validate::validate_cubes;
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{create_dir, unix_now, write_json, write_manifest, Failure, RunManifest};

pub const SNAPSHOT_FILE: &str = "cube.bin";

struct Loaded {
    cfg: RunConfig,
    grid: Grid3,
    terminal: TerminalSpec,
    hash: [u8; 32],
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    RunConfig::load(path).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

fn load(path: &Path) -> Result<Loaded, Failure> {
    let cfg = load_config(path)?;
    let validated = model::validate(cfg.model.clone())?;
    for w in validated.advisories() {
        eprintln!("advisory: {w}");
    }
    let grid = Grid3::new(&cfg.grid, &cfg.model)?;
    let terminal = TerminalSpec::new(cfg.terminal, &cfg.model)?;
    let hash = cfg.content_hash();
    Ok(Loaded {
        cfg,
        grid,
        terminal,
        hash,
    })
}

fn load_snapshot(path: &Path, run: &Loaded) -> Result<Snapshot, Failure> {
    let snap = read_snapshot(path)?;
    if snap.config_hash != run.hash {
        return Err(Failure::usage(format!(
            "snapshot {} was produced from config {}, not {}",
            path.display(),
            hex::encode(snap.config_hash),
            hex::encode(run.hash)
        )));
    }
    let g = &run.grid;
    let v = &snap.values;
    if (v.n_t, v.n_z, v.n_q) != (g.n_t, g.n_z, g.n_q) {
        return Err(Failure::usage(format!(
            "snapshot dimensions ({}, {}, {}) do not match the grid ({}, {}, {})",
            v.n_t, v.n_z, v.n_q, g.n_t, g.n_z, g.n_q
        )));
    }
    Ok(snap)
}

fn manifest(
    command: &'static str,
    config: &Path,
    run: &Loaded,
    out: &Path,
    threads: usize,
    started: (u64, Instant),
) -> RunManifest {
    RunManifest {
        command,
        config_path: config.to_path_buf(),
        config_hash: hex::encode(run.hash),
        output_dir: out.to_path_buf(),
        snapshot_path: None,
        seed: None,
        threads,
        started_unix: started.0,
        wall_clock_seconds: started.1.elapsed().as_secs_f64(),
        heatstore_version: env!("CARGO_PKG_VERSION"),
    }
}

pub fn calibrate(config: &Path) -> Result<(), Failure> {
    let mut cfg = load_config(config)?;
    let targets = cfg
        .calibration
        .clone()
        .ok_or_else(|| Failure::usage("config has no calibration block"))?;
    if targets.gamma.is_none() && targets.t1.is_none() && targets.t2.is_none() {
        return Err(Failure::usage("calibration block names no targets"));
    }
    let s = &mut cfg.model.storage;
    if let Some(g) = &targets.gamma {
        s.gamma = calibrate_gamma(g, s)?;
        if s.gamma == 0.0 {
            eprintln!("warning: calibrated gamma is 0, the storage is perfectly insulated");
        }
    }
    let gamma = s.gamma;
    if let Some(t1) = targets.t1 {
        cfg.model.seasonality.l0 = calibrate_l0(t1, gamma, &cfg.model.storage)?;
    }
    if let Some(t2) = targets.t2 {
        let l = calibrate_l(t2, cfg.model.seasonality.l0, gamma, &cfg.model.storage)?;
        let first = cfg.model.seasonality.components.first_mut().ok_or_else(|| {
            Failure::usage("t2 calibrates the seasonal amplitude, but seasonality has no components")
        })?;
        first.amplitude = l;
    }
    println!("{}", cfg.to_json_pretty());
    Ok(())
}

/// Reports on stderr roughly every tenth of the horizon.
struct Progress {
    total: usize,
    every: usize,
    start: Instant,
}

impl SliceSink for Progress {
    fn terminal(&mut self, _: &[f64]) -> heatstore::Result<()> {
        Ok(())
    }

    fn slice(&mut self, n: usize, _: &[f64], _: &[f64]) -> heatstore::Result<()> {
        let done = self.total - n;
        if done.is_multiple_of(self.every) || n == 0 {
            eprintln!(
                "solve: {done}/{} slices, {:.1}s",
                self.total,
                self.start.elapsed().as_secs_f64()
            );
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct Node {
    n: usize,
    l: usize,
    j: usize,
    t: f64,
    z: f64,
    q: f64,
}

#[derive(Serialize)]
struct SolveSummary {
    config_hash: String,
    n_t: usize,
    n_z: usize,
    n_q: usize,
    max_value: f64,
    argmax: Node,
    /// Value at t = 0, the configured z0 and a full storage.
    value_at_start: f64,
    runtime_seconds: f64,
    snapshot: &'static str,
    slices: Vec<String>,
}

fn slice_file(n: usize) -> String {
    format!("slice_{n:05}.csv")
}

pub fn solve(config: &Path, out: &Path, slices: &[usize], threads: usize) -> Result<(), Failure> {
    let started = (unix_now(), Instant::now());
    let run = load(config)?;
    let g = &run.grid;
    if let Some(bad) = slices.iter().find(|&&n| n > g.n_t) {
        return Err(Failure::usage(format!("slice {bad} is beyond N_t = {}", g.n_t)));
    }
    create_dir(out)?;

    let mut cubes = CubeCollector::new(g);
    let mut progress = Progress {
        total: g.n_t,
        every: (g.n_t / 10).max(1),
        start: Instant::now(),
    };
    backward_recursion_with(
        &run.cfg.model,
        g,
        &run.terminal,
        &mut Tee(vec![&mut cubes, &mut progress]),
    )?;
    let runtime = started.1.elapsed().as_secs_f64();
    let (values, policy) = (cubes.values, cubes.policy);

    write_snapshot(out.join(SNAPSHOT_FILE), &values, &policy, &run.hash)?;
    let mut names = Vec::new();
    for &n in slices {
        let name = slice_file(n);
        let mut w = BufWriter::new(File::create(out.join(&name))?);
        write_slice_csv(&mut w, n, g, &values, &policy)?;
        w.flush()?;
        names.push(name);
    }

    let max = CubeMax::of_cube(&values);
    let summary = SolveSummary {
        config_hash: hex::encode(run.hash),
        n_t: g.n_t,
        n_z: g.n_z,
        n_q: g.n_q,
        max_value: max.value,
        argmax: Node {
            n: max.n,
            l: max.l,
            j: max.j,
            t: g.t(max.n),
            z: g.z(max.l),
            q: g.q(max.j),
        },
        value_at_start: value_at(&values, g, 0, run.cfg.model.ou.z0, g.q_max),
        runtime_seconds: runtime,
        snapshot: SNAPSHOT_FILE,
        slices: names,
    };
    write_json(&out.join("summary.json"), &summary)?;
    println!("max V = {:.6} at (n, l, j) = ({}, {}, {}), {runtime:.1}s", max.value, max.n, max.l, max.j);
    write_manifest(&manifest("solve", config, &run, out, threads, started))
}

pub struct SimulateArgs {
    pub config: PathBuf,
    pub snapshot: PathBuf,
    pub out: PathBuf,
    pub n_paths: usize,
    pub seed: u64,
    pub trajectories: usize,
    pub q0: Option<f64>,
    pub z0: Option<f64>,
}

#[derive(Serialize)]
struct PathSummary {
    index: u64,
    total_cost: f64,
    terminal_cost: f64,
    q_final: f64,
    max_q: f64,
    /// Highest temperature in the middle half of the first seasonal period.
    #[serde(skip_serializing_if = "Option::is_none")]
    max_q_warm_season: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    file: Option<String>,
}

#[derive(Serialize)]
struct SimulateSummary {
    n_paths: usize,
    seed: u64,
    z0: f64,
    q0: f64,
    value_at_start: f64,
    mean_cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    stderr: Option<f64>,
    max_q: f64,
    /// Paths that come within half a temperature cell of q_max.
    paths_reaching_q_max: usize,
    paths: Vec<PathSummary>,
}

pub fn simulate(args: &SimulateArgs, threads: usize) -> Result<(), Failure> {
    let started = (unix_now(), Instant::now());
    if args.n_paths == 0 {
        return Err(Failure::usage("n-paths must be at least 1"));
    }
    let run = load(&args.config)?;
    let snap = load_snapshot(&args.snapshot, &run)?;
    let g = &run.grid;
    let m = &run.cfg.model;
    let q0 = args.q0.unwrap_or(g.q_max);
    let z0 = args.z0.unwrap_or(m.ou.z0);
    if !(g.q_min..=g.q_max).contains(&q0) {
        return Err(Failure::usage(format!("q0 = {q0} is outside [{}, {}]", g.q_min, g.q_max)));
    }
    create_dir(&args.out)?;

    let sim = Simulator::new(&snap.policy, m, g, &run.terminal)?;
    let warm = m
        .seasonality
        .components
        .first()
        .map(|c| (0.25 * c.period, 0.75 * c.period));
    let paths = (0..args.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let tr = sim.run_seeded(args.seed, i, z0, q0, true)?;
            let max_q = tr.steps.iter().map(|s| s.q).fold(tr.q_final, f64::max);
            Ok(PathSummary {
                index: i,
                total_cost: tr.total_cost,
                terminal_cost: tr.terminal_cost,
                q_final: tr.q_final,
                max_q,
                max_q_warm_season: warm.map(|(a, b)| tr.max_q_between(a, b)),
                file: None,
            })
        })
        .collect::<heatstore::Result<Vec<_>>>()?;

    let totals: Vec<f64> = paths.iter().map(|p| p.total_cost).collect();
    let (mean_cost, stderr) = if totals.len() > 1 {
        let e = summarize(&totals);
        (e.mean, Some(e.stderr))
    } else {
        (totals[0], None)
    };

    let mut listed: Vec<PathSummary> = Vec::new();
    for mut p in paths.iter().take(args.trajectories).map(|p| PathSummary { file: None, ..*p }) {
        let tr = sim.run_seeded(args.seed, p.index, z0, q0, true)?;
        let name = format!("path_{:05}.csv", p.index);
        let mut w = BufWriter::new(File::create(args.out.join(&name))?);
        tr.write_csv(&mut w, g.t_end)?;
        w.flush()?;
        p.file = Some(name);
        listed.push(p);
    }

    let summary = SimulateSummary {
        n_paths: args.n_paths,
        seed: args.seed,
        z0,
        q0,
        value_at_start: value_at(&snap.values, g, 0, z0, q0),
        mean_cost,
        stderr,
        max_q: paths.iter().map(|p| p.max_q).fold(f64::NEG_INFINITY, f64::max),
        paths_reaching_q_max: paths
            .iter()
            .filter(|p| p.max_q_warm_season.unwrap_or(p.max_q) >= g.q_max - 0.5 * g.dq)
            .count(),
        paths: listed,
    };
    write_json(&args.out.join("summary.json"), &summary)?;
    match stderr {
        Some(se) => println!("mean cost {mean_cost:.6} +- {se:.6} over {} paths", args.n_paths),
        None => println!("cost {mean_cost:.6} on a single path"),
    }
    let mut mf = manifest("simulate", &args.config, &run, &args.out, threads, started);
    mf.snapshot_path = Some(args.snapshot.clone());
    mf.seed = Some(args.seed);
    write_manifest(&mf)
}

pub fn validate(config: &Path, snapshot: &Path, out: Option<&Path>, threads: usize) -> Result<(), Failure> {
    let started = (unix_now(), Instant::now());
    let run = load(config)?;
    let snap = load_snapshot(snapshot, &run)?;
    let report = validate_cubes(&snap.values, &snap.policy, &run.grid, &run.cfg.model, &run.terminal)?;
    print!("{report}");
    if let Some(out) = out {
        create_dir(out)?;
        write_json(&out.join("report.json"), &report)?;
        let mut mf = manifest("validate", config, &run, out, threads, started);
        mf.snapshot_path = Some(snapshot.to_path_buf());
        write_manifest(&mf)?;
    }
    if report.all_passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed()).map(|c| c.name).collect();
        Err(Failure::check(format!("failed checks: {}", failed.join(", "))))
    }
}
