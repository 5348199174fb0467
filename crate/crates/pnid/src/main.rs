fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(pnid::cli::run_cli(&args));
}
