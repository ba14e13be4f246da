use std::io::Write;

fn main() {
    let outcome = fdban_cli::run(std::env::args().skip(1));
    if !outcome.stderr.is_empty() {
        eprint!("{}", outcome.stderr);
    }
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(&outcome.stdout);
    let _ = out.flush();
    std::process::exit(outcome.code);
}
