use clap::Parser;

use rydgate::cli::{dispatch, error_json, Cli};
use rydgate::Error;

fn main() {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => {}
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
        Err(err) => {
            eprintln!("{}", error_json(&err));
            std::process::exit(err.exit_code());
        }
    }
}
