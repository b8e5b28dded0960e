use clap::Parser;
use nnbound_cli::{exit, run, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(&cli) {
        Ok(stdout) => print!("{stdout}"),
        Err(e) => {
            eprintln!("nnbound: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
