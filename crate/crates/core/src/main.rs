fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(v) = std::env::var("GDL_THREADS") {
        let threads = match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => {
                eprintln!("error: GDL_THREADS must be a positive integer, got `{v}`");
                std::process::exit(gdl::cli::EXIT_USAGE);
            }
        };
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            std::process::exit(gdl::cli::EXIT_USAGE);
        }
    }
    std::process::exit(gdl::cli::run(std::env::args_os()));
}
