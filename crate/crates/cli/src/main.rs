//! Command-line front end for conclique-based goodness-of-fit testing of
//! lattice Markov random field models.

mod commands;
mod config;
mod error;
mod output;

use clap::{Parser, Subcommand};

use error::CliResult;

#[derive(Parser)]
#[command(
    name = "conclique",
    version,
    about = "Conclique-based goodness-of-fit testing for Markov random field models on lattices"
)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Build a conclique cover and label a window
    Partition(commands::partition::PartitionArgs),
    /// Simulate fields by conclique-blocked Gibbs sampling
    Simulate(commands::simulate::SimulateArgs),
    /// Fit a conditional Gaussian model
    Fit(commands::fit::FitArgs),
    /// Generalized spatial residuals and the four statistics
    Residuals(commands::residuals::ResidualsArgs),
    /// Simulate the limit null distribution and its quantiles
    NullDist(commands::nulldist::NullDistArgs),
    /// Goodness-of-fit test with fully specified parameters
    TestSimple(commands::test_simple::TestSimpleArgs),
    /// Goodness-of-fit test with estimated parameters (parametric bootstrap)
    TestComposite(commands::test_composite::TestCompositeArgs),
    /// Size study: rejection rates against the limit quantiles
    StudyTable1(commands::study::StudyTable1Args),
    /// Distance study: finite-sample vs limit statistic distributions
    StudyDistance(commands::study::StudyDistanceArgs),
    /// Power curves against a simple null
    Power(commands::study::PowerArgs),
}

fn dispatch(cli: Cli) -> CliResult<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| error::CliError::Config(format!("cannot set thread count: {e}")))?;
    }
    match cli.command {
        Commands::Partition(args) => commands::partition::run(args),
        Commands::Simulate(args) => commands::simulate::run(args),
        Commands::Fit(args) => commands::fit::run(args),
        Commands::Residuals(args) => commands::residuals::run(args),
        Commands::NullDist(args) => commands::nulldist::run(args),
        Commands::TestSimple(args) => commands::test_simple::run(args),
        Commands::TestComposite(args) => commands::test_composite::run(args),
        Commands::StudyTable1(args) => commands::study::run_table1(args),
        Commands::StudyDistance(args) => commands::study::run_distance(args),
        Commands::Power(args) => commands::study::run_power(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
