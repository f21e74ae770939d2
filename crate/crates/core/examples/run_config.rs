//! Drive a run from a JSON config, as the command-line tool does.
//!
//! `cargo run --example run_config -- examples/configs/markov_curve.json`

use causal_rdf::cli::{load_config, run_config, RunArgs, Units};

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/examples/configs/markov_curve.json"
        )
        .into()
    });
    let cfg = match load_config(path.as_ref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    };
    let args = RunArgs {
        config: path.into(),
        mode: None,
        out: None,
        check: true,
        seed: 1,
        units: None,
    };
    let (report, failure) = run_config(cfg, &args);
    if let Some(r) = report {
        for p in &r.points {
            let units = match r.units {
                Units::Nats => "nats",
                Units::Bits => "bits",
            };
            println!(
                "s = {:>6}: D = {:.6}, R = {:.6} {units}/symbol",
                p.s, p.d_per_symbol, p.r_per_symbol
            );
        }
        for c in &r.checks {
            println!(
                "{:<14} {} ({:.2e} vs {:.0e})",
                c.name,
                if c.passed { "pass" } else { "FAIL" },
                c.value,
                c.tolerance
            );
        }
    }
    if let Some(e) = failure {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
