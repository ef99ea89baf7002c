//! Reader and writer for the TUDataset plain-text layout.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::RealMatrix;

/// A parsed dataset with labels remapped to `0..n_classes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetBundle {
    pub name: String,
    pub graphs: Vec<Graph>,
    pub n_classes: usize,
    pub max_nodes: usize,
    pub feature_dim: usize,
    /// Original label value of each class index.
    pub class_values: Vec<i64>,
}

impl DatasetBundle {
    /// Assembles a bundle from graphs whose labels are already contiguous.
    pub fn from_graphs(name: impl Into<String>, graphs: Vec<Graph>) -> Result<Self> {
        if graphs.is_empty() {
            return Err(Error::InvalidInput("dataset has no graphs".into()));
        }
        let feature_dim = graphs[0].feature_dim();
        if graphs.iter().any(|g| g.feature_dim() != feature_dim) {
            return Err(Error::dim("graphs disagree on feature dimension"));
        }
        let n_classes = graphs.iter().map(Graph::label).max().unwrap_or(0) + 1;
        let max_nodes = graphs.iter().map(Graph::n_nodes).max().unwrap_or(0);
        Ok(Self {
            name: name.into(),
            graphs,
            n_classes,
            max_nodes,
            feature_dim,
            class_values: (0..n_classes as i64).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.graphs.iter().map(Graph::label).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseOptions {
    /// Rescale every node-attribute column to `[0, 1]` across the dataset.
    pub minmax_attributes: bool,
}

fn file_path(dir: &Path, name: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{name}_{suffix}.txt"))
}

/// Non-empty lines with their 1-based line numbers.
fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .collect())
}

fn read_optional(path: &Path) -> Result<Option<Vec<(usize, String)>>> {
    if path.exists() {
        read_lines(path).map(Some)
    } else {
        Ok(None)
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: Some(line),
        message: message.into(),
    }
}

fn parse_int(path: &Path, line: usize, s: &str) -> Result<i64> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("expected an integer, found `{s}`")))
}

fn require(path: PathBuf) -> Result<PathBuf> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(Error::Parse {
            message: "required dataset file is missing".into(),
            path,
            line: None,
        })
    }
}

/// `parse_tudataset`: reads `<dir>/<name>_*.txt`.
///
/// Node features are the one-hot node labels (classes ordered by value)
/// followed by the raw node attributes. A dataset with neither gets a single
/// constant feature per node so that amplitude encoding still sees the nodes.
pub fn parse_tudataset(dir: &Path, name: &str) -> Result<DatasetBundle> {
    parse_tudataset_with(dir, name, ParseOptions::default())
}

pub fn parse_tudataset_with(dir: &Path, name: &str, options: ParseOptions) -> Result<DatasetBundle> {
    let a_path = require(file_path(dir, name, "A"))?;
    let ind_path = require(file_path(dir, name, "graph_indicator"))?;
    let gl_path = require(file_path(dir, name, "graph_labels"))?;

    // Node → (graph, local index).
    let indicator = read_lines(&ind_path)?;
    let mut node_graph = Vec::with_capacity(indicator.len());
    let mut graph_sizes: Vec<usize> = Vec::new();
    let mut local = Vec::with_capacity(indicator.len());
    for (line, text) in &indicator {
        let g = parse_int(&ind_path, *line, text)?;
        if g < 1 {
            return Err(parse_err(&ind_path, *line, "graph ids are 1-based"));
        }
        let g = (g - 1) as usize;
        if g >= graph_sizes.len() {
            graph_sizes.resize(g + 1, 0);
        }
        local.push(graph_sizes[g]);
        graph_sizes[g] += 1;
        node_graph.push(g);
    }
    let n_nodes = node_graph.len();
    let n_graphs = graph_sizes.len();
    if let Some(empty) = graph_sizes.iter().position(|&s| s == 0) {
        return Err(Error::Parse {
            path: ind_path,
            line: None,
            message: format!("graph {} has no nodes", empty + 1),
        });
    }

    let graph_labels = read_lines(&gl_path)?;
    if graph_labels.len() != n_graphs {
        return Err(Error::Parse {
            path: gl_path,
            line: None,
            message: format!("{} labels for {n_graphs} graphs", graph_labels.len()),
        });
    }
    let raw_labels = graph_labels
        .iter()
        .map(|(l, t)| parse_int(&gl_path, *l, t))
        .collect::<Result<Vec<_>>>()?;
    let class_values: Vec<i64> = {
        let mut v = raw_labels.clone();
        v.sort_unstable();
        v.dedup();
        v
    };

    let mut adjacency: Vec<RealMatrix> = graph_sizes.iter().map(|&s| RealMatrix::zeros(s, s)).collect();
    let mut self_loops = 0usize;
    for (line, text) in read_lines(&a_path)? {
        let mut parts = text.split(',');
        let (Some(i), Some(j), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(parse_err(&a_path, line, format!("expected `i, j`, found `{text}`")));
        };
        let (i, j) = (parse_int(&a_path, line, i)?, parse_int(&a_path, line, j)?);
        let node = |v: i64| -> Result<usize> {
            if v < 1 || v as usize > n_nodes {
                Err(parse_err(&a_path, line, format!("edge references unknown node {v}")))
            } else {
                Ok((v - 1) as usize)
            }
        };
        let (i, j) = (node(i)?, node(j)?);
        if node_graph[i] != node_graph[j] {
            return Err(parse_err(&a_path, line, format!("edge joins graphs {} and {}", node_graph[i] + 1, node_graph[j] + 1)));
        }
        if i == j {
            self_loops += 1;
            continue;
        }
        let m = &mut adjacency[node_graph[i]];
        m[(local[i], local[j])] = 1.0;
        m[(local[j], local[i])] = 1.0;
    }
    if self_loops > 0 {
        log::warn!("{name}: ignored {self_loops} self-loop edges");
    }

    let per_node = |suffix: &str| -> Result<Option<(PathBuf, Vec<(usize, String)>)>> {
        let path = file_path(dir, name, suffix);
        let Some(lines) = read_optional(&path)? else {
            return Ok(None);
        };
        if lines.len() != n_nodes {
            return Err(Error::Parse {
                path,
                line: None,
                message: format!("{} rows for {n_nodes} nodes", lines.len()),
            });
        }
        Ok(Some((path, lines)))
    };

    let mut features: Vec<Vec<f64>> = vec![Vec::new(); n_nodes];
    if let Some((path, lines)) = per_node("node_labels")? {
        let values = lines
            .iter()
            .map(|(l, t)| parse_int(&path, *l, t.split(',').next().unwrap_or("")))
            .collect::<Result<Vec<_>>>()?;
        let distinct: BTreeMap<i64, usize> = {
            let mut keys = values.clone();
            keys.sort_unstable();
            keys.dedup();
            keys.into_iter().enumerate().map(|(i, k)| (k, i)).collect()
        };
        for (f, v) in features.iter_mut().zip(&values) {
            let mut one_hot = vec![0.0; distinct.len()];
            one_hot[distinct[v]] = 1.0;
            f.extend(one_hot);
        }
    }
    if let Some((path, lines)) = per_node("node_attributes")? {
        let mut width = None;
        let mut attrs = Vec::with_capacity(n_nodes);
        for (line, text) in &lines {
            let row = text
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| parse_err(&path, *line, format!("expected a real number, found `{s}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(parse_err(&path, *line, format!("expected {w} attributes, found {}", row.len())))
                }
                _ => {}
            }
            attrs.push(row);
        }
        if options.minmax_attributes {
            minmax_columns(&mut attrs);
        }
        for (f, a) in features.iter_mut().zip(attrs) {
            f.extend(a);
        }
    }
    if features.first().is_some_and(Vec::is_empty) {
        features.iter_mut().for_each(|f| f.push(1.0));
    }
    let feature_dim = features[0].len();

    let mut node_rows: Vec<Vec<f64>> = graph_sizes.iter().map(|&s| Vec::with_capacity(s * feature_dim)).collect();
    for (node, f) in features.into_iter().enumerate() {
        node_rows[node_graph[node]].extend(f);
    }
    let graphs = adjacency
        .into_iter()
        .zip(node_rows)
        .zip(&raw_labels)
        .map(|((adj, rows), raw)| {
            let n = adj.rows();
            let label = class_values.binary_search(raw).expect("label collected above");
            Graph::new(adj, RealMatrix::from_vec(n, feature_dim, rows)?, label)
        })
        .collect::<Result<Vec<_>>>()?;
    let max_nodes = graph_sizes.iter().copied().max().unwrap_or(0);
    Ok(DatasetBundle {
        name: name.to_string(),
        n_classes: class_values.len(),
        graphs,
        max_nodes,
        feature_dim,
        class_values,
    })
}

fn minmax_columns(rows: &mut [Vec<f64>]) {
    let Some(width) = rows.first().map(Vec::len) else {
        return;
    };
    for c in 0..width {
        let (lo, hi) = rows
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[c]), hi.max(r[c])));
        let span = hi - lo;
        for r in rows.iter_mut() {
            r[c] = if span > 0.0 { (r[c] - lo) / span } else { 0.0 };
        }
    }
}

/// Writes a bundle in the TUDataset layout. All node features go to
/// `node_attributes` so they reparse unchanged; any nonzero adjacency entry
/// becomes an (unweighted) edge listed in both directions.
pub fn write_tudataset(bundle: &DatasetBundle, dir: &Path) -> Result<()> {
    use std::fmt::Write;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (mut a, mut ind, mut gl, mut attrs) = (String::new(), String::new(), String::new(), String::new());
    let mut offset = 0usize;
    for (g, graph) in bundle.graphs.iter().enumerate() {
        let n = graph.n_nodes();
        for i in 0..n {
            for j in 0..n {
                if graph.adjacency()[(i, j)] != 0.0 {
                    let _ = writeln!(a, "{}, {}", offset + i + 1, offset + j + 1);
                }
            }
            let _ = writeln!(ind, "{}", g + 1);
            let row: Vec<String> = graph.node_features().row(i).iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(attrs, "{}", row.join(", "));
        }
        let _ = writeln!(gl, "{}", bundle.class_values.get(graph.label()).copied().unwrap_or(graph.label() as i64));
        offset += n;
    }
    let name = &bundle.name;
    for (suffix, body) in [("A", a), ("graph_indicator", ind), ("graph_labels", gl), ("node_attributes", attrs)] {
        let path = file_path(dir, name, suffix);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
