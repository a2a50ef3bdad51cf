fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(unlearn_dp::experiments::cli_dispatch(&args));
}
