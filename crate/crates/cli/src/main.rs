use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = abcd_cli::Cli::parse();
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = abcd_cli::run(&cli, &mut stdout) {
        eprintln!("{}", e.to_json());
        std::process::exit(e.exit_code());
    }
}
