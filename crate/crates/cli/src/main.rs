use clap::Parser;
use vortexlab_cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VORTEXLAB_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("vortexlab {}: {e}", cli.command.name());
        std::process::exit(e.exit_code());
    }
}
