//! Acceptance suite: one line per criterion. The determinism criterion runs the
//! built `fdban` binary as a separate process.

use std::process::Command;

use fdban_cli::selftest::{run_one, NAMES};

fn exec(argv: &[String]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_fdban"))
        .args(argv)
        .env_remove("FDBAN_SEED")
        .output()
        .expect("spawn fdban");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn main() {
    let filter: Vec<u32> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    let mut ran = 0;
    for id in 1..=NAMES.len() as u32 {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let r = run_one(id, &exec);
        println!("{}", r.line());
        ran += 1;
        failed += usize::from(!r.passed);
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
