// `!(v > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cobot_core::arm::KinematicChain;
use cobot_core::assets;
use cobot_core::scenarios::suite::{perturbation_sweep, run_suite, summary_table};
use cobot_core::scenarios::{run_scenario, ConditionProfile, RunConfig, TeachScript};
use cobot_core::sim::ScenarioDoc;
use cobot_service::{spawn, Engine, EventLog, ServiceOptions};

#[derive(Parser)]
#[command(
    name = "cobot",
    version,
    about = "Behavior-tree authoring and execution for a simulated robot workcell"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one tree on one scene and write a report.
    Run {
        #[arg(long)]
        tree: PathBuf,
        /// Scene file, or the name of a shipped scene (task1, task2, task3).
        #[arg(long)]
        scene: String,
        #[arg(long)]
        condition: u8,
        #[arg(long)]
        teach: Option<PathBuf>,
        /// Report path; stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run every shipped reference tree and print a summary table.
    Suite {
        /// Also run each condition 1 and 4 Task 2 tree on this many perturbed scenes.
        #[arg(long, default_value_t = 0)]
        perturbations: u64,
        #[arg(long, default_value_t = 0.05)]
        amplitude: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "task1")]
        scene: String,
        #[arg(long, default_value_t = 4)]
        condition: u8,
        #[arg(long)]
        teach: Option<PathBuf>,
        /// Tree loaded at startup.
        #[arg(long)]
        tree: Option<PathBuf>,
        /// Wall-clock milliseconds between ticks.
        #[arg(long, default_value_t = 50)]
        tick_ms: u64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Chain config file; the shipped arm when omitted.
    #[arg(long)]
    chain: Option<PathBuf>,
    #[arg(long)]
    rrt_max_iters: Option<usize>,
    /// Largest joint speed, rad/s.
    #[arg(long)]
    joint_speed: Option<f64>,
    /// Detection noise standard deviation, meters.
    #[arg(long)]
    noise: Option<f64>,
}

impl Common {
    fn chain(&self) -> Result<KinematicChain> {
        match &self.chain {
            Some(p) => Ok(KinematicChain::from_json(&read(p)?)?),
            None => Ok(assets::default_chain()),
        }
    }

    fn run_config(&self) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        if let Some(n) = self.rrt_max_iters {
            config.cell.rrt.max_extensions = n;
        }
        if let Some(v) = self.joint_speed {
            if !(v > 0.0) {
                bail!("--joint-speed must be positive");
            }
            config.cell.joint_speed = v;
        }
        if let Some(v) = self.noise {
            if !(v >= 0.0) {
                bail!("--noise must not be negative");
            }
            config.cell.noise = v;
        }
        Ok(config)
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn scene_text(scene: &str) -> Result<String> {
    let path = Path::new(scene);
    if path.exists() {
        return read(path);
    }
    assets::scene(scene)
        .map(str::to_string)
        .with_context(|| format!("{scene} is neither a file nor a shipped scene"))
}

fn profile(id: u8) -> Result<ConditionProfile> {
    ConditionProfile::by_id(id).with_context(|| format!("condition must be 1 to 4, got {id}"))
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Run {
            tree,
            scene,
            condition,
            teach,
            report,
            common,
        } => {
            let teach = teach.as_deref().map(read).transpose()?;
            let out = run_scenario(
                &common.chain()?,
                &read(&tree)?,
                &scene_text(&scene)?,
                teach.as_deref(),
                &profile(condition)?,
                common.seed,
                &common.run_config()?,
            )?;
            let text = out.to_json();
            match report {
                Some(p) => std::fs::write(&p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
                None => println!("{text}"),
            }
            if !out.success {
                std::process::exit(2);
            }
        }
        Command::Suite {
            perturbations,
            amplitude,
            common,
        } => {
            let chain = common.chain()?;
            let config = common.run_config()?;
            let rows = run_suite(&chain, common.seed, &config)?;
            print!("{}", summary_table(&rows));
            if perturbations > 0 {
                println!();
                for id in ["task2_c1", "task2_c4"] {
                    let r = assets::reference(id).expect("shipped reference");
                    let reports = perturbation_sweep(&chain, r, perturbations, amplitude, &config)?;
                    let ok = reports.iter().filter(|r| r.success).count();
                    println!("{id} on perturbed scenes: {ok}/{perturbations}");
                }
            }
        }
        Command::Serve {
            port,
            scene,
            condition,
            teach,
            tree,
            tick_ms,
            common,
        } => {
            let teach = match teach {
                Some(p) => TeachScript::parse(&read(&p)?)?,
                None => TeachScript::default(),
            };
            let options = ServiceOptions {
                tick_interval: Duration::from_millis(tick_ms),
                ..ServiceOptions::default()
            };
            let mut engine = Engine::new(
                common.chain()?,
                &ScenarioDoc::parse(&scene_text(&scene)?)?,
                &teach,
                condition,
                common.seed,
                common.run_config()?,
                EventLog::new(options.event_buffer),
            )
            .map_err(anyhow::Error::msg)?;
            if let Some(p) = tree {
                engine
                    .put_tree(&read(&p)?)
                    .map_err(|e| anyhow::anyhow!("{}: {}", e.doc.code, e.doc.message))?;
            }
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
                cobot_service::serve(listener, spawn(engine, &options)).await
            })?;
        }
    }
    Ok(())
}
