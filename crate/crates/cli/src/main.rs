mod args;
mod chart;
mod commands;
mod report;

use anyhow::Result;
use clap::Parser;

use args::{Cli, Command};

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::IdEstimate(a) => commands::id_estimate(a),
        Command::Train(a) => commands::train(a),
        Command::Detect(a) => commands::detect(a),
        Command::Evaluate(a) => commands::evaluate_cmd(a),
        Command::Benchmark(a) => commands::benchmark(a),
    }
}
