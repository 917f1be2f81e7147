use clap::Parser;

use necof::cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("{}", e.line());
        std::process::exit(e.exit_code());
    }
}
