use clap::Parser;

fn main() {
    let cli = latbabai::Cli::parse();
    if let Err(err) = latbabai::run(&cli) {
        eprintln!("error: {err:#}");
        std::process::exit(latbabai::exit_code(&err));
    }
}
