use clap::Parser;

fn main() {
    let cli = tumorctl::Cli::parse();
    match tumorctl::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
