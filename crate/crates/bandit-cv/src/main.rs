use std::process::ExitCode;

use clap::Parser;

use bandit_cv::cli::{self, Cli};
use bandit_cv::Error;

fn main() -> ExitCode {
    let args = Cli::parse();
    cli::init_thread_pool();
    match cli::run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
