use clap::Parser;
use modaprompt_cli::args::Cli;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    std::process::exit(modaprompt_cli::run(&cli));
}
