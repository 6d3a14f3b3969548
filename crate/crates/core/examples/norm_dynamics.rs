//! Representation-norm statistics and the μ⁺/μ⁻ contrast ratio over
//! training, with and without the regulariser. Pass a directory to also
//! write both trace.csv files there.

use std::path::PathBuf;

use cgnn::synthetic::PlantedPartition;
use cgnn::train::{train, write_trace_csv, TrainConfig};

fn main() -> anyhow::Result<()> {
    let out_dir = std::env::args().nth(1).map(PathBuf::from);
    let mut g = PlantedPartition::default().generate()?;
    g.row_normalize_features();

    for reg_enabled in [false, true] {
        let cfg = TrainConfig { reg_enabled, epochs: 300, hidden_dim: 64, trace_every: 30, diagnostics_pairs: 4000, ..Default::default() };
        let out = train(&g, &cfg)?;
        println!("reg {}", if reg_enabled { "on" } else { "off" });
        println!("{:>6} {:>12} {:>12} {:>8}", "epoch", "norm_mean", "norm_var", "ratio");
        for r in &out.trace {
            println!("{:>6} {:>12.4} {:>12.4e} {:>8.3}", r.epoch, r.norm_mean, r.norm_var, r.ratio.unwrap_or(f64::NAN));
        }
        if let Some(dir) = &out_dir {
            std::fs::create_dir_all(dir)?;
            let name = if reg_enabled { "trace_reg.csv" } else { "trace_noreg.csv" };
            write_trace_csv(&out.trace, dir.join(name))?;
        }
    }
    Ok(())
}
