use clap::Parser;
use filament_cli::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => println!("{text}"),
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&e.record()).expect("error record serializes"));
            std::process::exit(e.exit_code());
        }
    }
}
