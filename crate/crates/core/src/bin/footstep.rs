use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};
use nalgebra::Vector3;

use footstep_core::config::PipelineConfig;
use footstep_core::heightmap::io::{parse_hm1, write_hm1, PoseRecord};
use footstep_core::heightmap::CameraIntrinsics;
use footstep_core::optimizer::SearchGrid;
use footstep_core::pipeline::{adjust_footstep, build_map, load_depth_dir, simulate, Scenario};
use footstep_core::records::{parse_line, ErrorRecord, FootstepInput, RetargetRecord, TrackerRecord, TrackerStream};
use footstep_core::retarget::Retargeter;
use footstep_core::swing::{plan_swing, SwingSpec};
use footstep_core::walksim::log_to_csv;
use footstep_core::Error;

#[derive(Parser)]
#[command(name = "footstep", version, about = "Footstep retargeting and terrain adaptation tools")]
struct Cli {
    /// JSON configuration document (defaults for every missing key).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the effective configuration with all defaults and exit.
    #[arg(long)]
    dump_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Tracker stream (JSON lines) to footstep commands (JSON lines).
    Retarget {
        #[arg(long, default_value = "-")]
        input: PathBuf,
        #[arg(long, default_value = "-")]
        output: PathBuf,
    },
    /// Depth frames to a fused world height map (HM1).
    Heightmap {
        #[arg(long)]
        depth_dir: PathBuf,
        /// Intrinsics for frames whose sidecar has none.
        #[arg(long)]
        intrinsics: Option<PathBuf>,
        /// JSON object mapping frame names to camera poses.
        #[arg(long)]
        poses: Option<PathBuf>,
        #[arg(long, default_value = "-")]
        output: PathBuf,
    },
    /// Moves footsteps onto steppable terrain.
    Adjust {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        footsteps: PathBuf,
        #[arg(long, default_value = "-")]
        output: PathBuf,
        /// Report candidates evaluated and wall time on stderr.
        #[arg(long)]
        bench: bool,
    },
    /// Samples a swing trajectory to CSV.
    Swing {
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        start: Vector3<f64>,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        goal: Vector3<f64>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        start_yaw: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        goal_yaw: f64,
        /// Samples per second.
        #[arg(long, default_value_t = 100.0)]
        rate: f64,
        #[arg(long, default_value = "-")]
        output: PathBuf,
    },
    /// Replays a scenario through retargeting and the walk simulator.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Step log CSV.
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_point(s: &str) -> Result<Vector3<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t}: {e}")))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [x, y, z] => Ok(Vector3::new(*x, *y, *z)),
        _ => Err("expected x,y,z".into()),
    }
}

fn read_input(path: &Path) -> Result<String, Error> {
    let mut text = String::new();
    let res = if path == Path::new("-") {
        std::io::stdin().read_to_string(&mut text).map(|_| ())
    } else {
        std::fs::File::open(path).and_then(|mut f| f.read_to_string(&mut text).map(|_| ()))
    };
    res.map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    Ok(text)
}

fn read_json<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<T, Error> {
    serde_json::from_str(&read_input(path)?).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn write_output(path: &Path, contents: &str) -> anyhow::Result<()> {
    if path == Path::new("-") {
        let mut out = std::io::stdout().lock();
        out.write_all(contents.as_bytes())?;
        out.flush()?;
    } else {
        std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn json_line(out: &mut String, value: &impl serde::Serialize) -> anyhow::Result<()> {
    out.push_str(&serde_json::to_string(value)?);
    out.push('\n');
    Ok(())
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, Error> {
    match path {
        Some(p) => PipelineConfig::from_json(&read_input(p)?),
        None => Ok(PipelineConfig::default()),
    }
}

fn cmd_retarget(config: &PipelineConfig, input: &Path, output: &Path) -> anyhow::Result<()> {
    let reader: Box<dyn BufRead> = if input == Path::new("-") {
        Box::new(BufReader::new(std::io::stdin()))
    } else {
        let file = std::fs::File::open(input).map_err(|e| Error::InvalidInput(format!("{}: {e}", input.display())))?;
        Box::new(BufReader::new(file))
    };
    let mut retargeter = Retargeter::new(config.retarget);
    let mut stream = TrackerStream::new();
    let mut out = String::new();
    for (i, line) in reader.lines().enumerate() {
        let number = i + 1;
        let line = line.map_err(|e| Error::InvalidInput(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let at_line = |e: Error| Error::Parse {
            line: number,
            message: e.to_string(),
        };
        let record: TrackerRecord = parse_line(&line, number)?;
        let sample = stream.accept(&record).map_err(at_line)?;
        let update = retargeter.push(record.side, &sample).map_err(at_line)?;
        json_line(&mut out, &RetargetRecord::from(&update))?;
    }
    write_output(output, &out)
}

fn cmd_heightmap(
    config: &PipelineConfig,
    depth_dir: &Path,
    intrinsics: Option<&Path>,
    poses: Option<&Path>,
    output: &Path,
) -> anyhow::Result<()> {
    let intrinsics: Option<CameraIntrinsics> = intrinsics.map(read_json).transpose()?;
    let poses: Option<BTreeMap<String, PoseRecord>> = poses.map(read_json).transpose()?;
    let frames = load_depth_dir(depth_dir, intrinsics.as_ref(), poses.as_ref())?;
    let map = build_map(&frames, config)?;
    write_output(output, &write_hm1(&map))
}

fn cmd_adjust(config: &PipelineConfig, map: &Path, footsteps: &Path, output: &Path, bench: bool) -> anyhow::Result<()> {
    let map = parse_hm1(&read_input(map)?)?;
    let text = read_input(footsteps)?;
    let mut inputs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: FootstepInput = parse_line(line, i + 1)?;
        if let Some(cmd) = record.footstep() {
            inputs.push(cmd);
        }
    }
    let started = Instant::now();
    let records: Vec<_> = inputs.iter().map(|c| adjust_footstep(c, &map, config)).collect();
    let elapsed = started.elapsed();
    let mut out = String::new();
    for r in &records {
        json_line(&mut out, r)?;
    }
    write_output(output, &out)?;
    if bench {
        let per_search = SearchGrid::new(&config.search, &config.foot).len();
        let candidates = per_search * records.len();
        let secs = elapsed.as_secs_f64();
        let report = serde_json::json!({
            "bench": {
                "searches": records.len(),
                "candidates_per_search": per_search,
                "candidates": candidates,
                "wall_ms": secs * 1e3,
                "candidates_per_second": if secs > 0.0 { candidates as f64 / secs } else { 0.0 },
            }
        });
        eprintln!("{report}");
    }
    Ok(())
}

fn cmd_swing(config: &PipelineConfig, spec: SwingSpec, rate: f64, output: &Path) -> anyhow::Result<()> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidInput("rate must be positive".into()).into());
    }
    let traj = plan_swing(&SwingSpec {
        params: config.swing,
        ..spec
    })?;
    if traj.wp2_below_goal {
        eprintln!(
            "{}",
            serde_json::json!({"warning": "second waypoint below goal; the foot approaches the goal from below"})
        );
    }
    let n = (traj.duration * rate).ceil().max(1.0) as usize;
    let mut out = String::from("t,x,y,z,vx,vy,vz,yaw\n");
    for i in 0..=n {
        let s = traj.sample(traj.duration * i as f64 / n as f64)?;
        let (p, v) = (s.position, s.velocity);
        writeln!(out, "{},{},{},{},{},{},{},{}", s.time, p.x, p.y, p.z, v.x, v.y, v.z, s.yaw)?;
    }
    write_output(output, &out)
}

fn cmd_simulate(config: &PipelineConfig, scenario_path: &Path, out: &Path) -> anyhow::Result<()> {
    let scenario: Scenario = read_json(scenario_path)?;
    let map = match &scenario.map {
        Some(rel) => {
            let base = scenario_path.parent().unwrap_or(Path::new("."));
            Some(parse_hm1(&read_input(&base.join(rel))?)?)
        }
        None => None,
    };
    let result = simulate(&scenario, config, map.as_ref())?;
    write_output(out, &log_to_csv(&result.log))?;
    let summary = serde_json::json!({
        "steps": result.log.len(),
        "commands_sent": result.commands_sent,
        "commands_queued": result.commands_queued,
        "adjust_failures": result.adjust_failures,
        "latency": result.stats,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = load_config(cli.config.as_deref())?;
    if cli.dump_config {
        println!("{}", config.to_json());
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(Error::InvalidInput("no subcommand given (see --help)".into()).into());
    };
    match command {
        Command::Retarget { input, output } => cmd_retarget(&config, &input, &output),
        Command::Heightmap {
            depth_dir,
            intrinsics,
            poses,
            output,
        } => cmd_heightmap(&config, &depth_dir, intrinsics.as_deref(), poses.as_deref(), &output),
        Command::Adjust {
            map,
            footsteps,
            output,
            bench,
        } => cmd_adjust(&config, &map, &footsteps, &output, bench),
        Command::Swing {
            start,
            goal,
            start_yaw,
            goal_yaw,
            rate,
            output,
        } => {
            let mut spec = SwingSpec::new(start, goal, config.swing);
            spec.initial_yaw = start_yaw;
            spec.goal_yaw = goal_yaw;
            cmd_swing(&config, spec, rate, &output)
        }
        Command::Simulate { scenario, out } => cmd_simulate(&config, &scenario, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (record, code) = match err.downcast_ref::<Error>() {
                Some(e) => (
                    ErrorRecord {
                        error: e.kind().to_string(),
                        message: e.to_string(),
                        line: match e {
                            Error::Parse { line, .. } => Some(*line),
                            _ => None,
                        },
                    },
                    2,
                ),
                None => (
                    ErrorRecord {
                        error: "internal".into(),
                        message: format!("{err:#}"),
                        line: None,
                    },
                    1,
                ),
            };
            eprintln!("{}", serde_json::to_string(&record).unwrap_or_else(|_| record.message.clone()));
            ExitCode::from(code)
        }
    }
}
