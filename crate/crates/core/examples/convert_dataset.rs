//! Writes a small graph in LINQS `.content` / `.cites` form, converts it to
//! the canonical directory layout and loads it back.

use std::fmt::Write as _;

use cgnn::dataset::{convert_linqs, load_canonical};
use cgnn::synthetic::PlantedPartition;

fn main() -> anyhow::Result<()> {
    let g = PlantedPartition { num_classes: 3, nodes_per_class: 10, num_features: 12, ..Default::default() }.generate()?;
    let tmp = tempfile::tempdir()?;
    let names = ["Theory", "Neural_Networks", "Rule_Learning"];

    let mut content = String::new();
    for i in 0..g.num_nodes() {
        let feats: Vec<String> = g.features().row(i).iter().map(|v| format!("{}", *v as u8)).collect();
        writeln!(content, "p{}\t{}\t{}", 1000 + i, feats.join("\t"), names[g.labels().unwrap()[i]])?;
    }
    let mut cites = String::new();
    for (u, v) in g.edges() {
        writeln!(cites, "p{}\tp{}", 1000 + u, 1000 + v)?;
    }
    writeln!(cites, "p1000\tmissing")?;
    std::fs::write(tmp.path().join("toy.content"), content)?;
    std::fs::write(tmp.path().join("toy.cites"), cites)?;

    let out = tmp.path().join("toy");
    let conv = convert_linqs(tmp.path().join("toy.content"), tmp.path().join("toy.cites"), &out)?;
    println!("{}", serde_json::to_string_pretty(&conv.manifest)?);
    println!("classes {:?}, dropped citations {}", conv.class_names, conv.dropped_citations);

    let back = load_canonical(&out)?;
    println!("loaded {} nodes, {} edges", back.num_nodes(), back.num_edges());
    Ok(())
}
