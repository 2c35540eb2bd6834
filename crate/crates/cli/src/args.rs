use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "webrep", version, about = "Compute, rank and inspect web reputation indices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the index pipeline over a snapshot and write the results.
    Compute(ComputeArgs),
    /// Print a ranking, or its top/bottom entries, from a results file.
    Rank(RankArgs),
    /// Gather a snapshot from configured sources, optionally through a cassette.
    Collect(CollectArgs),
    /// Check a snapshot for missing and implausible values.
    Validate(ValidateArgs),
    /// Descriptive statistics of a results file, with optional plot data.
    Stats(StatsArgs),
    /// Export the embedded published index table.
    Fixture(FixtureArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PopulationModeArg {
    /// Divide by the raw student count.
    #[default]
    Formula,
    /// Divide by the min-max scaled student count.
    Text,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StdArg {
    #[default]
    Population,
    Sample,
}

#[derive(Args, Debug)]
pub struct ComputeArgs {
    /// Snapshot file (.csv or .json).
    #[arg(long, required_unless_present = "from_fixture")]
    pub input: Option<PathBuf>,
    /// Results file; statistics go to a `.stats.csv` sidecar for CSV.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Output format (default: from the output extension).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, value_enum, default_value_t)]
    pub population_mode: PopulationModeArg,
    #[arg(long = "std", value_enum, default_value_t)]
    pub std_convention: StdArg,
    /// JSON indicator set replacing the built-in one.
    #[arg(long)]
    pub indicators: Option<PathBuf>,
    /// Use the embedded published index values instead of a snapshot.
    #[arg(long, conflicts_with_all = ["input", "indicators"])]
    pub from_fixture: bool,
}

#[derive(Args, Debug)]
pub struct RankArgs {
    /// Results file with a final_index (or normalized_index) column.
    #[arg(long, required_unless_present = "from_fixture")]
    pub input: Option<PathBuf>,
    #[arg(long, value_name = "K", value_parser = clap::value_parser!(u64).range(1..))]
    pub top: Option<u64>,
    #[arg(long, value_name = "K", value_parser = clap::value_parser!(u64).range(1..))]
    pub bottom: Option<u64>,
    #[arg(long, conflicts_with = "input")]
    pub from_fixture: bool,
}

#[derive(Args, Debug)]
pub struct CollectArgs {
    /// CSV with columns name,population,host and an optional slug.
    #[arg(long)]
    pub targets: PathBuf,
    /// JSON array of source descriptors.
    #[arg(long, required_unless_present = "probe")]
    pub sources: Option<PathBuf>,
    /// Snapshot file to write.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub indicators: Option<PathBuf>,
    /// Cassette directory. Without --record or --replay requests go live
    /// and nothing is stored.
    #[arg(long)]
    pub cassette: Option<PathBuf>,
    #[arg(long, requires = "cassette", conflicts_with = "replay")]
    pub record: bool,
    #[arg(long, requires = "cassette")]
    pub replay: bool,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub parallelism: u64,
    #[arg(long, default_value = "collect")]
    pub label: String,
    /// Measure weighted TCP-connect latency into the probe indicator.
    #[arg(long)]
    pub probe: bool,
    #[arg(long, default_value = "speed_ping_ms")]
    pub probe_indicator: String,
    /// Comma-separated `location=weight` pairs (default tr=0.5 and 0.125
    /// for each of eu, us, asia, oceania).
    #[arg(long)]
    pub probe_weights: Option<String>,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub probe_attempts: u64,
    /// Milliseconds between attempts at one location.
    #[arg(long, default_value_t = 0)]
    pub probe_spread_ms: u64,
    #[arg(long, default_value_t = 80)]
    pub probe_port: u16,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub indicators: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[arg(long, required_unless_present = "from_fixture")]
    pub input: Option<PathBuf>,
    #[arg(long = "std", value_enum, default_value_t)]
    pub std_convention: StdArg,
    #[arg(long, conflicts_with = "input")]
    pub from_fixture: bool,
    /// Write histogram bins (CSV) here.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub bins: u64,
    /// Write (ordinal, value) scatter points (CSV) here.
    #[arg(long)]
    pub scatter: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FixtureArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub output: PathBuf,
}
