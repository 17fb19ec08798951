use clap::Parser;
use toptail::cli::{run, Cli, ErrorReport};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
        }
        Err(e) => {
            let report = ErrorReport::from(&e);
            eprintln!("{}", serde_json::to_string(&report).unwrap_or_else(|_| format!("{e}")));
            std::process::exit(1);
        }
    }
}
