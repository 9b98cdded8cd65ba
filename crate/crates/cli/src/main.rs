use clap::Parser;

fn main() {
    let cli = bramble_cli::Cli::parse();
    std::process::exit(bramble_cli::execute(&cli));
}
