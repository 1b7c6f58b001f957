fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("IDCFUSE_LOG", "warn")).init();
    std::process::exit(idcfuse_cli::run(std::env::args_os()));
}
