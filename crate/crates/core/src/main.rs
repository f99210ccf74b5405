use clap::Parser;

use flotation::cli::{execute, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap reports usage errors with code 2 and help/version with 0
            let _ = e.print();
            std::process::exit(e.exit_code());
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    if let Err(e) = execute(&cli.command, &mut lock) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
