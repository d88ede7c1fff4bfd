fn main() {
    let code = automode::cli::run(std::env::args_os(), &mut std::io::stderr());
    std::process::exit(code);
}
