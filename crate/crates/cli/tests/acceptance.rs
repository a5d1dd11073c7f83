//! Runs every acceptance criterion and prints one PASS/FAIL line each.
//! Criteria listed in `DOCUMENTED_UNATTAINABLE` are reported but do not
//! fail the target.

use optimist_cli::acceptance::{run_all, DOCUMENTED_UNATTAINABLE};

fn main() {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let results = run_all();
    let mut unexpected = Vec::new();
    for c in &results {
        println!("{}", c.line());
        if !c.pass && !DOCUMENTED_UNATTAINABLE.contains(&c.id) {
            unexpected.push(c.id);
        }
    }
    let passed = results.iter().filter(|c| c.pass).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
