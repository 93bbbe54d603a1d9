//! A small noise sweep written as plot-ready CSV files.
//!
//! `cargo run --release --example synthetic_sweep -- out_dir`

use std::path::PathBuf;

use gsnmf::bench::{aggregate, emit_figure_data, run_sweep, Algorithm, SweepConfig};

fn main() -> gsnmf::Result<()> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("gsnmf_sweep"));
    let cfg = SweepConfig {
        m: 30,
        n: 30,
        r1: 5,
        r2: 5,
        noise_levels: vec![1e-3, 1e-2, 1e-1],
        trials: 4,
        algorithms: vec![
            Algorithm::Gspa,
            Algorithm::Gsfgm,
            Algorithm::SpaC,
            Algorithm::Nmf,
        ],
        ..SweepConfig::default()
    };
    let records = run_sweep(&cfg, None)?;
    for row in aggregate(&records) {
        println!("{row:?}");
    }
    emit_figure_data(&records, Some(&cfg), &out)?;
    println!("wrote {}", out.display());
    Ok(())
}
