use clap::Parser;

fn main() {
    let cli = regretnet::cli::Cli::parse();
    if let Err(e) = regretnet::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
