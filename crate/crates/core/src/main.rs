use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use objnav::harness::{oracle_factory, render_svg, run_suite, SuiteReport, SuiteSpec};
use objnav::scene::{generate_dataset, load_scene_dir, save_scene, vocab::structured_goal_categories};
use objnav::valuemaps::SelectorMode;
use objnav::Config;

#[derive(Parser)]
#[command(name = "objnav", version, about = "Frontier-exploration object navigation bench")]
struct Cli {
    /// TOML file with sensor, cluster, value map, planner, agent and LLM settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate scene files.
    GenScenes {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
        /// Only use goal categories with strong room cues.
        #[arg(long)]
        structured: bool,
    },
    /// Run an episode suite and write report rows plus a summary.
    Run {
        #[arg(long)]
        scenes: PathBuf,
        /// One or more of dwfe, shf, nearest, random (comma separated).
        #[arg(long, value_delimiter = ',', required = true)]
        mode: Vec<SelectorMode>,
        /// Episodes per scene.
        #[arg(long, default_value_t = 1)]
        episodes: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads (0: one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long, default_value = "report.jsonl")]
        out: PathBuf,
    },
    /// Print a stored report as a table.
    Report {
        #[arg(long = "in", default_value = "report.jsonl")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Md)]
        format: Format,
        /// Per-episode rows instead of per-mode aggregates (csv only).
        #[arg(long)]
        rows: bool,
    },
    /// Draw one episode of a stored report as SVG.
    Render {
        /// Episode id as `scene:mode:episode`.
        #[arg(long)]
        episode: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "in", default_value = "report.jsonl")]
        input: PathBuf,
        /// Scene directory; defaults to the one recorded in the report.
        #[arg(long)]
        scenes: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Md,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => Config::default(),
    };
    match cli.cmd {
        Cmd::GenScenes { seed, count, out, structured } => {
            let mut params = cfg.scenes.clone();
            if structured {
                params.goal_categories = structured_goal_categories();
            }
            let scenes = generate_dataset(seed, count, &params)?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for s in &scenes {
                save_scene(s, &out.join(format!("{}.json", s.id)))?;
            }
            println!("wrote {} scenes to {}", scenes.len(), out.display());
        }
        Cmd::Run { scenes, mode, episodes, seed, jobs, out } => {
            let set = load_scene_dir(&scenes)?;
            let spec = SuiteSpec { modes: mode, episodes_per_scene: episodes, seed, jobs };
            let mut report = run_suite(&set, &spec, &cfg, &oracle_factory(&cfg))?;
            report.summary.scenes_dir = Some(scenes.display().to_string());
            report.write(&out)?;
            print!("{}", report.to_markdown());
        }
        Cmd::Report { input, format, rows } => {
            let report = SuiteReport::load(&input)?;
            match (format, rows) {
                (Format::Csv, false) => print!("{}", report.to_csv()),
                (Format::Csv, true) => print!("{}", report.rows_csv()),
                (Format::Md, false) => print!("{}", report.to_markdown()),
                (Format::Md, true) => bail!("--rows is only available with --format csv"),
            }
        }
        Cmd::Render { episode, out, input, scenes } => {
            let report = SuiteReport::load(&input)?;
            let row = report
                .find(&episode)
                .with_context(|| format!("no episode {episode} in {}", input.display()))?;
            let dir = match scenes.or_else(|| report.summary.scenes_dir.as_ref().map(PathBuf::from)) {
                Some(d) => d,
                None => bail!("report does not record its scene directory; pass --scenes"),
            };
            let scene = find_scene(&dir, &row.scene_id)?;
            std::fs::write(&out, render_svg(row, &scene)).with_context(|| format!("writing {}", out.display()))?;
        }
    }
    Ok(())
}

fn find_scene(dir: &Path, id: &str) -> Result<objnav::scene::Scene> {
    let direct = dir.join(format!("{id}.json"));
    if direct.is_file() {
        if let Ok(s) = objnav::scene::load_scene(&direct) {
            if s.id == id {
                return Ok(s);
            }
        }
    }
    load_scene_dir(dir)?
        .into_iter()
        .find(|s| s.id == id)
        .with_context(|| format!("scene {id} not found in {}", dir.display()))
}
