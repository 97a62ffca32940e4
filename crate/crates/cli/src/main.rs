fn main() {
    std::process::exit(graph_forest_cli::run(std::env::args_os()));
}
