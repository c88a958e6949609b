//! `pulse`: profile, partition and simulate spiking CNNs on the event-driven
//! accelerator model.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser)]
#[command(name = "pulse", version, about = "Event-driven spiking CNN accelerator simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Map the network with one core per layer and record per-layer workloads.
    Profile(ProfileArgs),
    /// Split a core budget across layers from a workload profile.
    Partition(PartitionArgs),
    /// Simulate one input and report the prediction, cycles and storage.
    Run(RunArgs),
    /// Write a random manifest, weight blobs and input image.
    GenRandom(GenArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args)]
pub struct ProfileArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Raw little-endian f32 image, `[C][H][W]`. Repeatable.
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    /// Number of samples to average; inputs are reused in order when there
    /// are fewer inputs than samples. Defaults to the input count.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Args)]
pub struct PartitionArgs {
    /// Profile written by `pulse profile`.
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long)]
    pub budget: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Args)]
pub struct RunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also run the dense reference and fail with exit code 4 on any difference.
    #[arg(long)]
    pub oracle_check: bool,
    /// Write report.json, report.csv and report.txt here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Also write every layer's output spikes to `<out-dir>/spikes/`.
    #[arg(long, requires = "out_dir")]
    pub dump_spikes: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Args)]
pub struct GenArgs {
    /// Topology such as `12x12x2-8C3-P2-4`; a random small network when omitted.
    #[arg(long)]
    pub topology: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub classes: usize,
    #[arg(long = "pop", default_value_t = 1)]
    pub pop_per_class: usize,
    #[arg(long, default_value_t = 3)]
    pub timesteps: usize,
    #[arg(long, default_value = "0.5")]
    pub beta: String,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub w_min: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub w_max: f64,
    /// Core count per compute layer, comma separated. One core each by default.
    #[arg(long, value_delimiter = ',')]
    pub nc: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub chunks: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Profile(a) => commands::profile(&a),
        Command::Partition(a) => commands::partition(&a),
        Command::Run(a) => commands::run(&a),
        Command::GenRandom(a) => commands::gen_random(&a),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
