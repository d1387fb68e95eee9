//! Drive a full experiment from an in-memory JSON config, the same path the
//! `metastab run` subcommand takes: trace once, evaluate the rate for every
//! (k, f), window-check, and write deterministic reports.

use metastab::cli::{run_experiment, ExperimentConfig, Overrides};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config: ExperimentConfig = serde_json::from_value(serde_json::json!({
        "schema_version": 1,
        "scheme": "browder",
        "space": {
            "dim": 2,
            "b": 1,
            "body": {"kind": "ball", "center": [0.0, 0.0], "radius": 0.5}
        },
        "operator": {"kind": "rotation", "angle_deg": 90.0, "center": [0.0, 0.0]},
        "anchor": [0.5, 0.0],
        "k_list": [0, 1, 2],
        "f_list": [
            {"kind": "identity"},
            {"kind": "plus-c", "c": 10},
            {"kind": "times-c", "c": 2}
        ],
        "budget": 2000,
        "seed": 7,
        "checks": {"projection_lemmas": true}
    }))?;

    let out = std::path::Path::new("out/example-run");
    let (report, code) = run_experiment(&config, &Overrides::default(), out)?;
    println!("exit code {code}; {} rows:", report.rows.len());
    for row in &report.rows {
        println!(
            "  {} k={} f={:<9} witness={:?} verdict={:?}",
            row.scheme, row.k, row.f, row.witness_n, row.verdict
        );
    }
    println!("\nlemma sweeps:");
    for l in &report.lemmas {
        println!(
            "  {:<24} checked={:<6} vacuous={:<6} -> {:?}",
            l.lemma, l.checked, l.vacuous, l.verdict
        );
    }
    println!("\nreports written under {}", out.display());
    Ok(())
}
