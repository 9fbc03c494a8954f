fn main() {
    std::process::exit(trendflow_cli::execute());
}
