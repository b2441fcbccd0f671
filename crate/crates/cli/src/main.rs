use clap::Parser;

fn main() {
    let cli = wigner_clt_cli::Cli::parse();
    std::process::exit(wigner_clt_cli::run(&cli));
}
