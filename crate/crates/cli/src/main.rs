use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("LTC_LOG")).init();
    let cli = ltc_cli::Cli::parse();
    let code = match ltc_cli::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}
