//! On-disk dataset layout and the LINQS plain-text importer.
//!
//! A canonical dataset directory holds:
//!
//! ```text
//! manifest.json   flat object: name, num_nodes, num_features, num_classes,
//!                 has_labels, feature_encoding ("dense-f32" | "dense-text")
//! edges.tsv       one undirected edge per line, two 0-based node ids
//! features.bin    N*F little-endian f32, row-major, no header
//! features.tsv    (instead of features.bin for "dense-text") one row per line
//! labels.tsv      optional, "node_id<TAB>class_id"
//! splits.json     optional, {"train": [...], "val": [...], "test": [...]}
//! ```

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_adjacency, Graph, NodeSplits};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureEncoding {
    #[serde(rename = "dense-f32")]
    DenseF32,
    #[serde(rename = "dense-text")]
    DenseText,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub num_nodes: usize,
    pub num_features: usize,
    pub num_classes: usize,
    pub has_labels: bool,
    pub feature_encoding: FeatureEncoding,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

fn parse_id(path: &Path, line: usize, tok: &str, n: usize) -> Result<usize> {
    let id: usize = tok
        .parse()
        .map_err(|_| parse_err(path, line, format!("bad node id {tok:?}")))?;
    if id >= n {
        return Err(parse_err(path, line, format!("node id {id} out of range (num_nodes = {n})")));
    }
    Ok(id)
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest> {
    let path = dir.join("manifest.json");
    let text = read_text(&path)?;
    serde_json::from_str(&text).map_err(|e| Error::Dataset { path, msg: e.to_string() })
}

/// Loads a canonical dataset directory into a [`Graph`].
pub fn load_canonical(dir: impl AsRef<Path>) -> Result<Graph> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    let n = manifest.num_nodes;
    let f = manifest.num_features;

    let edges_path = dir.join("edges.tsv");
    let mut edges = Vec::new();
    for (lineno, line) in read_text(&edges_path)?.lines().enumerate() {
        let line_no = lineno + 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            [] => continue,
            [u, v] => edges.push((
                parse_id(&edges_path, line_no, u, n)?,
                parse_id(&edges_path, line_no, v, n)?,
            )),
            _ => return Err(parse_err(&edges_path, line_no, "expected two node ids")),
        }
    }
    let (adjacency, self_loops) = build_adjacency(n, &edges)?;
    if self_loops > 0 {
        log::warn!("{}: dropped {self_loops} self-loop line(s)", edges_path.display());
    }

    let features = match manifest.feature_encoding {
        FeatureEncoding::DenseF32 => {
            let path = dir.join("features.bin");
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            if bytes.len() != n * f * 4 {
                return Err(Error::Dataset {
                    path,
                    msg: format!("{} bytes, expected {} ({n} x {f} f32)", bytes.len(), n * f * 4),
                });
            }
            let data = bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect();
            DenseMatrix::from_vec(n, f, data)?
        }
        FeatureEncoding::DenseText => {
            let path = dir.join("features.tsv");
            let text = read_text(&path)?;
            let mut data = Vec::with_capacity(n * f);
            let mut rows = 0;
            for (lineno, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let before = data.len();
                for tok in line.split_whitespace() {
                    let v: f64 = tok
                        .parse()
                        .map_err(|_| parse_err(&path, lineno + 1, format!("bad feature value {tok:?}")))?;
                    data.push(v);
                }
                if data.len() - before != f {
                    return Err(parse_err(
                        &path,
                        lineno + 1,
                        format!("row has {} values, expected {f}", data.len() - before),
                    ));
                }
                rows += 1;
            }
            if rows != n {
                return Err(Error::Dataset { path, msg: format!("{rows} feature rows, expected {n}") });
            }
            DenseMatrix::from_vec(n, f, data)?
        }
    };
    if !features.is_finite() {
        return Err(Error::Dataset { path: dir.to_path_buf(), msg: "non-finite feature value".into() });
    }

    let mut graph = Graph::from_adjacency(adjacency, features)?;

    let labels_path = dir.join("labels.tsv");
    if manifest.has_labels {
        let mut labels = vec![usize::MAX; n];
        for (lineno, line) in read_text(&labels_path)?.lines().enumerate() {
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks.as_slice() {
                [] => continue,
                [node, class] => {
                    let node = parse_id(&labels_path, lineno + 1, node, n)?;
                    let class: usize = class
                        .parse()
                        .map_err(|_| parse_err(&labels_path, lineno + 1, format!("bad class id {class:?}")))?;
                    if class >= manifest.num_classes {
                        return Err(parse_err(
                            &labels_path,
                            lineno + 1,
                            format!("class {class} >= num_classes {}", manifest.num_classes),
                        ));
                    }
                    labels[node] = class;
                }
                _ => return Err(parse_err(&labels_path, lineno + 1, "expected node_id and class_id")),
            }
        }
        if let Some(missing) = labels.iter().position(|&c| c == usize::MAX) {
            return Err(Error::Dataset { path: labels_path, msg: format!("node {missing} has no label") });
        }
        graph = graph.with_labels_and_classes(labels, manifest.num_classes)?;
    }

    let splits_path = dir.join("splits.json");
    if splits_path.exists() {
        let splits: NodeSplits = serde_json::from_str(&read_text(&splits_path)?)
            .map_err(|e| Error::Dataset { path: splits_path.clone(), msg: e.to_string() })?;
        graph = graph.with_splits(splits)?;
    }
    Ok(graph)
}

/// Writes `g` in canonical form. Output bytes depend only on the graph.
pub fn save_canonical(
    g: &Graph,
    dir: impl AsRef<Path>,
    name: &str,
    encoding: FeatureEncoding,
) -> Result<DatasetManifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = DatasetManifest {
        name: name.to_string(),
        num_nodes: g.num_nodes(),
        num_features: g.num_features(),
        num_classes: g.num_classes(),
        has_labels: g.labels().is_some(),
        feature_encoding: encoding,
    };

    let mut edges = String::new();
    for (u, v) in g.edges() {
        edges.push_str(&format!("{u}\t{v}\n"));
    }
    write_file(&dir.join("edges.tsv"), edges.as_bytes())?;

    match encoding {
        FeatureEncoding::DenseF32 => {
            let mut bytes = Vec::with_capacity(g.features().data().len() * 4);
            for &v in g.features().data() {
                bytes.extend_from_slice(&(v as f32).to_le_bytes());
            }
            write_file(&dir.join("features.bin"), &bytes)?;
        }
        FeatureEncoding::DenseText => {
            let mut text = String::new();
            for row in g.features().row_iter() {
                let cells: Vec<String> = row.iter().map(|v| format!("{}", *v as f32)).collect();
                text.push_str(&cells.join("\t"));
                text.push('\n');
            }
            write_file(&dir.join("features.tsv"), text.as_bytes())?;
        }
    }

    if let Some(labels) = g.labels() {
        let mut text = String::new();
        for (i, c) in labels.iter().enumerate() {
            text.push_str(&format!("{i}\t{c}\n"));
        }
        write_file(&dir.join("labels.tsv"), text.as_bytes())?;
    }
    if let Some(splits) = g.splits() {
        write_file(&dir.join("splits.json"), serde_json::to_string(splits)?.as_bytes())?;
    }

    let path = dir.join("manifest.json");
    let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    f.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Summary of a LINQS conversion.
#[derive(Debug, Clone)]
pub struct LinqsConversion {
    pub manifest: DatasetManifest,
    /// Label strings in class-id order.
    pub class_names: Vec<String>,
    /// Citation lines naming a paper absent from the content file.
    pub dropped_citations: usize,
    pub out_dir: PathBuf,
}

/// Converts `*.content` / `*.cites` files into a canonical directory.
///
/// Paper ids become dense ids in order of first appearance in the content
/// file; label strings are sorted to assign class ids.
pub fn convert_linqs(
    content_path: impl AsRef<Path>,
    cites_path: impl AsRef<Path>,
    out_dir: impl AsRef<Path>,
) -> Result<LinqsConversion> {
    let content_path = content_path.as_ref();
    let cites_path = cites_path.as_ref();

    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut label_strs: Vec<String> = Vec::new();
    let mut num_features: Option<usize> = None;
    for (lineno, line) in read_text(content_path)?.lines().enumerate() {
        let line_no = lineno + 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() < 3 {
            return Err(parse_err(content_path, line_no, "expected paper id, features and a label"));
        }
        let feats = &toks[1..toks.len() - 1];
        match num_features {
            None => num_features = Some(feats.len()),
            Some(f) if f != feats.len() => {
                return Err(parse_err(
                    content_path,
                    line_no,
                    format!("{} feature columns, expected {f}", feats.len()),
                ))
            }
            _ => {}
        }
        let row = feats
            .iter()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| parse_err(content_path, line_no, format!("bad feature value {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let next = ids.len();
        if ids.insert(toks[0].to_string(), next).is_some() {
            return Err(parse_err(content_path, line_no, format!("duplicate paper id {:?}", toks[0])));
        }
        rows.push(row);
        label_strs.push(toks[toks.len() - 1].to_string());
    }
    if rows.is_empty() {
        return Err(Error::Dataset { path: content_path.to_path_buf(), msg: "no papers found".into() });
    }

    let class_names: Vec<String> = label_strs.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let class_of: HashMap<&str, usize> = class_names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let labels: Vec<usize> = label_strs.iter().map(|s| class_of[s.as_str()]).collect();

    let mut edges = Vec::new();
    let mut dropped = 0;
    for (lineno, line) in read_text(cites_path)?.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            [] => continue,
            [cited, citing] => match (ids.get(*cited), ids.get(*citing)) {
                (Some(&u), Some(&v)) => edges.push((u, v)),
                _ => dropped += 1,
            },
            _ => return Err(parse_err(cites_path, lineno + 1, "expected cited and citing paper ids")),
        }
    }
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} citation(s) to unknown papers", cites_path.display());
    }

    let n = rows.len();
    let features = DenseMatrix::from_rows(&rows)?;
    let graph = Graph::from_edges(n, &edges, features)?.with_labels_and_classes(labels, class_names.len())?;
    let name = content_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    let out_dir = out_dir.as_ref().to_path_buf();
    let manifest = save_canonical(&graph, &out_dir, &name, FeatureEncoding::DenseF32)?;
    Ok(LinqsConversion { manifest, class_names, dropped_citations: dropped, out_dir })
}
