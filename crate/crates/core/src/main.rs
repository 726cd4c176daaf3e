fn main() {
    let args: Vec<String> = std::env::args().collect();
    let outcome = sigmak::cli::run(&args);
    print!("{}", outcome.stdout);
    if !outcome.stderr.is_empty() {
        eprint!("{}", outcome.stderr);
    }
    std::process::exit(outcome.code);
}
