use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("OCCLUGEN_LOG", "info"))
        .format_timestamp_millis()
        .init();
    let code = occlugen_cli::run(occlugen_cli::Cli::parse());
    std::process::exit(code);
}
