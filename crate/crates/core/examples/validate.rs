//! Runs the golden examples and the randomized property suites, one line per check.
//! `cargo run --release --example validate -- golden|properties|all [seed]`

use uwot::validate::{run, Suite};

fn main() {
    let mut args = std::env::args().skip(1);
    let suite = match args.next().as_deref() {
        Some("golden") => Suite::Golden,
        Some("properties") => Suite::Properties,
        _ => Suite::All,
    };
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(42);
    let checks = run(suite, seed, None);
    for c in &checks {
        println!("{} {:<24} {:>6.2}s  {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.seconds, c.detail);
    }
    if checks.iter().any(|c| !c.pass) {
        std::process::exit(1);
    }
}
