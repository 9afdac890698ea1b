use clap::Parser;
use divprog_cli::commands::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    if let Err(e) = run(&cli, &mut stdout.lock()) {
        eprintln!("divprog: {e}");
        std::process::exit(e.exit_code());
    }
}
