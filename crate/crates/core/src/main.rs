fn main() {
    if let Err(e) = npe::cli::run() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
