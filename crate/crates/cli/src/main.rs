use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use ltfi::analytics::{default_table, rate_airtime_table, write_analytics_csv};
use ltfi::demod::{demodulate, write_frames_csv};
use ltfi::experiment::{
    knee, random_frame, run_ed_sweep, run_link_sweep, simulate_frame, trial_rng, write_link_csv,
};
use ltfi::multicell::{build_cluster_configurations, count_histogram, write_grid_csv, Codebook};
use ltfi::phy::{read_samples_csv, write_samples_csv, Scenario};
use ltfi::x2::{fetch_codebook, ServerState, X2Server};

mod config;

#[derive(Parser)]
#[command(name = "ltfi", version, about = "LTE-U to WiFi cross-technology link simulator")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    scenario: Option<Scenario>,
    /// `lo:hi:step` in dBm.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    powers: Option<PowerRange>,
    /// Frames per power.
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// FER/SER against receive power for one scenario and ED setting.
    LinkSweep {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        theta: Option<i32>,
    },
    /// The link sweep repeated for several ED register values.
    EdSweep {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Comma-separated register values.
        #[arg(long, value_delimiter = ',')]
        thetas: Option<Vec<i32>>,
    },
    /// MAC-state samples of one random frame.
    PhyTrace {
        #[arg(long, default_value = "clear")]
        scenario: Scenario,
        #[arg(long, default_value_t = -50.0, allow_negative_numbers = true)]
        power: f64,
        #[arg(long)]
        theta: Option<i32>,
    },
    /// Decodes frames from a MAC-state sample CSV.
    Demod {
        #[arg(long)]
        input: PathBuf,
    },
    /// Proximity-set sizes over the deployment grid.
    Multicell {
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        /// Also write the codebook as JSON.
        #[arg(long)]
        codebook_out: Option<PathBuf>,
    },
    /// Data rate and WiFi airtime table.
    Analytics {
        /// Comma-separated cycle lengths in ms.
        #[arg(long, value_delimiter = ',')]
        cycles: Option<Vec<f64>>,
        /// Comma-separated duty cycles.
        #[arg(long, value_delimiter = ',')]
        duties: Option<Vec<f64>>,
        #[arg(long, default_value_t = 9)]
        max_k: u32,
    },
    /// Serves the codebook over the control channel until killed.
    X2Serve {
        #[arg(long)]
        bind: Option<SocketAddr>,
        #[arg(long)]
        codebook: Option<PathBuf>,
        #[arg(long)]
        network_id: Option<Ipv4Addr>,
    },
    /// Fetches the codebook from a running server.
    X2Fetch {
        #[arg(long)]
        server: Option<SocketAddr>,
        #[arg(long)]
        network_id: Option<Ipv4Addr>,
        #[arg(long, default_value = "ap-0")]
        ap_id: String,
        #[arg(long)]
        timeout_ms: Option<u64>,
    },
}

#[derive(Clone, Debug)]
struct PowerRange(Vec<f64>);

fn parse_range(s: &str) -> Result<PowerRange, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let [lo, hi, step] = parts[..] else {
        return Err("expected lo:hi:step".into());
    };
    if !(step > 0.0) || hi < lo {
        return Err("need lo <= hi and step > 0".into());
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok(PowerRange((0..=n).map(|i| lo + i as f64 * step).collect()))
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn apply(sweep: &mut config::SweepConfig, args: SweepArgs) {
    if let Some(s) = args.scenario {
        sweep.scenario = s;
    }
    if let Some(p) = args.powers {
        sweep.powers_dbm = p.0;
    }
    if let Some(r) = args.reps {
        sweep.repetitions = r;
    }
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let mut cfg = config::load(cli.config.as_deref())?;
    let out = cli.out.as_deref();
    match cli.cmd {
        Command::LinkSweep { sweep, theta } => {
            apply(&mut cfg.sweep, sweep);
            if let Some(t) = theta {
                cfg.sweep.theta = t;
            }
            let points = run_link_sweep(&cfg.link, &cfg.sweep.spec(cli.seed))?;
            if let Some(k) = knee(&points, 0.1) {
                log::info!("FER <= 0.1 from {k} dBm");
            }
            write_link_csv(output(out)?, &points)?;
        }
        Command::EdSweep { sweep, thetas } => {
            apply(&mut cfg.sweep, sweep);
            if let Some(t) = thetas {
                cfg.sweep.thetas = t;
            }
            let points = run_ed_sweep(&cfg.link, &cfg.sweep.spec(cli.seed), &cfg.sweep.thetas)?;
            write_link_csv(output(out)?, &points)?;
        }
        Command::PhyTrace { scenario, power, theta } => {
            let fe = cfg.link.front_end(theta.unwrap_or(cfg.sweep.theta))?;
            let mut rng = trial_rng(cli.seed, 0, 0);
            let frame = random_frame(&mut rng);
            let trial = simulate_frame(&cfg.link, scenario, power, &fe, &frame, &mut rng)?;
            log::info!(
                "frame {frame:?}, preamble at sample {}",
                trial.sent.sync_index
            );
            write_samples_csv(output(out)?, &trial.samples)?;
        }
        Command::Demod { input } => {
            let file = File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let samples = read_samples_csv(file)?;
            let frames = demodulate(&samples, &cfg.link.receiver_config()?);
            log::info!("{} frames decoded from {} samples", frames.len(), samples.len());
            write_frames_csv(output(out)?, &frames)?;
        }
        Command::Multicell { sigma, step, codebook_out } => {
            if let Some(s) = sigma {
                cfg.multicell.grid.shadowing_sigma_db = s;
            }
            if let Some(s) = step {
                cfg.multicell.grid.step_m = s;
            }
            cfg.multicell.grid.seed = cli.seed;
            let (_, plan, points) = cfg.multicell.run()?;
            for (n, count) in count_histogram(&points) {
                log::info!("{n} cells detected at {count} points");
            }
            if let Some(p) = codebook_out {
                plan.codebook.save_json(&p)?;
            }
            write_grid_csv(output(out)?, &points)?;
        }
        Command::Analytics { cycles, duties, max_k } => {
            let table = match (cycles, duties) {
                (None, None) if max_k == 9 => default_table(),
                (c, d) => rate_airtime_table(
                    &c.unwrap_or_else(|| vec![40.0, 80.0, 160.0]),
                    &d.unwrap_or_else(|| vec![0.24, 0.5, 0.9]),
                    0..=max_k,
                )?,
            };
            write_analytics_csv(output(out)?, &table)?;
        }
        Command::X2Serve { bind, codebook, network_id } => {
            let bind = bind.unwrap_or(cfg.x2.bind);
            let network_id = network_id.unwrap_or(cfg.x2.network_id);
            let codebook = match codebook.or(cfg.x2.codebook) {
                Some(p) => Codebook::load_json(&p)?,
                None => build_cluster_configurations(&cfg.multicell.deployment()?)?.codebook,
            };
            log::info!("serving {} codebook entries for {network_id}", codebook.len());
            X2Server::start(bind, ServerState::new(network_id, codebook))?.wait();
        }
        Command::X2Fetch { server, network_id, ap_id, timeout_ms } => {
            let mut client = cfg.x2.client;
            if let Some(ms) = timeout_ms {
                client.deadline = Duration::from_millis(ms);
            }
            let server = server.unwrap_or(cfg.x2.bind);
            let cb = fetch_codebook(server, &ap_id, network_id.unwrap_or(cfg.x2.network_id), &client)?;
            log::info!("fetched {} codebook entries from {server}", cb.len());
            match out {
                Some(p) => cb.save_json(p)?,
                None => bail!("x2-fetch needs --out for the codebook file"),
            }
        }
    }
    Ok(())
}
