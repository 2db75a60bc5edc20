use clap::Parser;
use stoch_symbolic::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let code = run(&cli, &mut std::io::stdout());
    std::process::exit(code);
}
