//! Text ingestion and export: whitespace edge lists, delimited node tables and
//! JSON split masks.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Graph, Splits};
use crate::error::GraphError;

fn read(path: &Path) -> Result<String, GraphError> {
    fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> GraphError + '_ {
    move |source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_edges(path: &Path, text: &str) -> Result<Vec<(usize, usize)>, GraphError> {
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let mut next_id = || -> Result<usize, GraphError> {
            let tok = parts.next().ok_or_else(|| GraphError::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: "expected `u v`".into(),
            })?;
            tok.parse().map_err(|_| GraphError::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: format!("`{tok}` is not a node id"),
            })
        };
        let u = next_id()?;
        let v = next_id()?;
        edges.push((u, v));
    }
    Ok(edges)
}

fn parse_number(path: &Path, line: usize, tok: &str) -> Result<f64, GraphError> {
    tok.trim().parse().map_err(|_| GraphError::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("`{tok}` is not a number"),
    })
}

/// Reads a graph from an edge list and a node table.
///
/// The node table has a header row and is comma- or tab-delimited. An `id`
/// column, when present, gives each row's node id; otherwise rows are nodes
/// `0..n` in order. The label column is removed from the features; the
/// sensitive column stays in them. Label values above 1 collapse to 1.
pub fn load_graph(
    edge_list_path: &Path,
    node_table_path: &Path,
    sensitive_column: &str,
    label_column: &str,
) -> Result<Graph, GraphError> {
    let table = read(node_table_path)?;
    let mut lines = table
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| GraphError::Parse {
        path: node_table_path.to_path_buf(),
        line: 1,
        msg: "empty node table".into(),
    })?;
    let delim = if header.contains('\t') { '\t' } else { ',' };
    let columns: Vec<String> = header.split(delim).map(|c| c.trim().to_string()).collect();
    let find = |name: &str| {
        columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| GraphError::MissingColumn(name.to_string()))
    };
    let sens_col = find(sensitive_column)?;
    let label_col = find(label_column)?;
    let id_col = columns.iter().position(|c| c.eq_ignore_ascii_case("id"));
    let feature_cols: Vec<usize> = (0..columns.len())
        .filter(|&c| c != label_col && Some(c) != id_col)
        .collect();

    let mut rows: Vec<(usize, Vec<f64>, u8)> = Vec::new();
    for (row_idx, (lineno, line)) in lines.enumerate() {
        let cells: Vec<&str> = line.split(delim).collect();
        if cells.len() != columns.len() {
            return Err(GraphError::Parse {
                path: node_table_path.to_path_buf(),
                line: lineno + 1,
                msg: format!("expected {} cells, found {}", columns.len(), cells.len()),
            });
        }
        let id = match id_col {
            Some(c) => cells[c].trim().parse().map_err(|_| GraphError::Parse {
                path: node_table_path.to_path_buf(),
                line: lineno + 1,
                msg: format!("`{}` is not a node id", cells[c]),
            })?,
            None => row_idx,
        };
        let sens = parse_number(node_table_path, lineno + 1, cells[sens_col])?;
        if sens != 0.0 && sens != 1.0 {
            return Err(GraphError::NonBinary {
                column: sensitive_column.to_string(),
                row: row_idx,
                value: cells[sens_col].trim().to_string(),
            });
        }
        let raw_label = parse_number(node_table_path, lineno + 1, cells[label_col])?;
        if raw_label < 0.0 || raw_label.fract() != 0.0 {
            return Err(GraphError::NonBinary {
                column: label_column.to_string(),
                row: row_idx,
                value: cells[label_col].trim().to_string(),
            });
        }
        let label = if raw_label >= 1.0 { 1 } else { 0 };
        let feats = feature_cols
            .iter()
            .map(|&c| parse_number(node_table_path, lineno + 1, cells[c]))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push((id, feats, label));
    }

    let n = rows.len();
    let mut features = Array2::zeros((n, feature_cols.len()));
    let mut labels = vec![0u8; n];
    let mut seen = vec![false; n];
    for (id, feats, label) in rows {
        if id >= n {
            return Err(GraphError::NodeOutOfRange { id, n });
        }
        if seen[id] {
            return Err(GraphError::Parse {
                path: node_table_path.to_path_buf(),
                line: 0,
                msg: format!("node id {id} appears twice"),
            });
        }
        seen[id] = true;
        features.row_mut(id).assign(&ndarray::Array1::from(feats));
        labels[id] = label;
    }
    let names: Vec<String> = feature_cols.iter().map(|&c| columns[c].clone()).collect();
    let sensitive_index = feature_cols.iter().position(|&c| c == sens_col).unwrap();

    let edges = parse_edges(edge_list_path, &read(edge_list_path)?)?;
    Graph::new(n, edges, features, names, sensitive_index, labels)
}

pub fn write_edge_list(g: &Graph, path: &Path) -> Result<(), GraphError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# {} nodes, {} undirected edges", g.n(), g.num_edges()).map_err(io_err(path))?;
    for (u, v) in g.edges() {
        writeln!(w, "{u} {v}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes the node table with an `id` column, all feature columns and a
/// `label` column, comma-delimited. Floats use the shortest round-trip form.
pub fn write_node_table(g: &Graph, path: &Path) -> Result<(), GraphError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let mut header = vec!["id".to_string()];
    header.extend(g.feature_names().iter().cloned());
    header.push("label".into());
    writeln!(w, "{}", header.join(",")).map_err(io_err(path))?;
    for i in 0..g.n() {
        let mut cells = vec![i.to_string()];
        cells.extend(g.features().row(i).iter().map(|v| format!("{v:?}")));
        cells.push(g.labels()[i].to_string());
        writeln!(w, "{}", cells.join(",")).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Serialize, Deserialize)]
struct MaskIds {
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
}

/// Writes masks as JSON arrays of node ids.
pub fn write_masks(splits: &Splits, path: &Path) -> Result<(), GraphError> {
    let ids = MaskIds {
        train: Splits::ids(&splits.train),
        val: Splits::ids(&splits.val),
        test: Splits::ids(&splits.test),
    };
    let text = serde_json::to_string(&ids).expect("mask ids serialize");
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_masks(path: &Path, n: usize) -> Result<Splits, GraphError> {
    let ids: MaskIds = serde_json::from_str(&read(path)?).map_err(|e| GraphError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    for &i in ids.train.iter().chain(&ids.val).chain(&ids.test) {
        if i >= n {
            return Err(GraphError::NodeOutOfRange { id: i, n });
        }
    }
    let s = Splits::from_ids(n, &ids.train, &ids.val, &ids.test);
    if !s.is_disjoint() {
        return Err(GraphError::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: "masks overlap".into(),
        });
    }
    Ok(s)
}
