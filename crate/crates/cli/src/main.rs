use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use redqsim::oracle::default_mathis_constant;
use redqsim::{RedVariant, TcpVariant};
use redqsim_cli::{cmd_analyze_fairness, cmd_analyze_mathis, cmd_run, cmd_sweep, cmd_validate};

#[derive(Parser)]
#[command(
    name = "redqsim",
    version,
    about = "RED variants under mixed packet sizes: simulate, sweep, validate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write one CSV row per MTU group.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Output CSV path, `-` for stdout.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "REDQSIM_SEED")]
        seed: Option<u64>,
    },
    /// Run the cross product of RED variants, TCP variants and bottleneck delays.
    Sweep {
        #[arg(long)]
        base: PathBuf,
        /// Comma-separated, e.g. RED_1,RED_2.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "RED_1,RED_2,RED_3,RED_4,RED_5"
        )]
        variants: Vec<RedVariant>,
        /// Comma-separated, e.g. reno,sack.
        #[arg(long, value_delimiter = ',', default_value = "reno,sack")]
        tcp: Vec<TcpVariant>,
        /// Comma-separated bottleneck propagation delays in milliseconds.
        #[arg(long = "delays-ms", value_delimiter = ',', default_value = "15,80")]
        delays_ms: Vec<u32>,
        #[arg(long)]
        out: PathBuf,
        /// Base seed for the per-cell seed derivation.
        #[arg(long, env = "REDQSIM_SEED")]
        seed: Option<u64>,
        /// Worker threads; defaults to the number of CPUs.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Compare the Monte Carlo inter-drop law with its closed form.
    Validate {
        #[arg(long)]
        variant: RedVariant,
        #[arg(long)]
        pb: f64,
        /// Sizes (bytes) of the packets after a drop, repeated as needed.
        #[arg(long, value_delimiter = ',', default_value = "1500")]
        sizes: Vec<u32>,
        /// Maximum packet size M, bytes.
        #[arg(long = "max-packet", default_value_t = 1500)]
        max_packet: u32,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, env = "REDQSIM_SEED", default_value_t = 1)]
        seed: u64,
    },
    /// Evaluate the analytic goodput bound or fairness gap.
    #[command(subcommand)]
    Analyze(Analyze),
}

#[derive(Subcommand)]
enum Analyze {
    /// Square-root goodput bound in bits/s.
    Mathis {
        #[arg(long)]
        mss: u32,
        #[arg(long)]
        rtt: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        c: Option<f64>,
    },
    /// Normalized gap from mss1^2/p1 = mss2^2/p2.
    Fairness {
        #[arg(long)]
        mss1: u32,
        #[arg(long)]
        p1: f64,
        #[arg(long)]
        mss2: u32,
        #[arg(long)]
        p2: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = io::stdout().lock();
    let code = match cli.command {
        Command::Run {
            scenario,
            out,
            seed,
        } => cmd_run(&scenario, &out, seed),
        Command::Sweep {
            base,
            variants,
            tcp,
            delays_ms,
            out,
            seed,
            jobs,
        } => {
            if let Some(n) = jobs {
                // Only fails if a global pool already exists, which cannot happen here.
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            cmd_sweep(&base, &variants, &tcp, &delays_ms, &out, seed)
        }
        Command::Validate {
            variant,
            pb,
            sizes,
            max_packet,
            trials,
            seed,
        } => cmd_validate(variant, pb, &sizes, max_packet, trials, seed, &mut stdout),
        Command::Analyze(Analyze::Mathis { mss, rtt, p, c }) => cmd_analyze_mathis(
            mss,
            rtt,
            p,
            c.unwrap_or_else(default_mathis_constant),
            &mut stdout,
        ),
        Command::Analyze(Analyze::Fairness { mss1, p1, mss2, p2 }) => {
            cmd_analyze_fairness(mss1, p1, mss2, p2, &mut stdout)
        }
    };
    ExitCode::from(code)
}
