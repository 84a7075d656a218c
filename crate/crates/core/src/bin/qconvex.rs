fn main() { std::process::exit(qconvex::cli::run()); }
