use clap::Parser;

fn main() {
    let cli = nonlocal_sharp::Cli::parse();
    if let Err(e) = nonlocal_sharp::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
