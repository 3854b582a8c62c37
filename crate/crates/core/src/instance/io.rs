//! JSON instance files.
//!
//! Floats are written in shortest round-trip form, so loading a saved file
//! reproduces every weight bit for bit.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::ModelParams;
use super::PlantedInstance;
use crate::error::{DksError, Result};
use crate::graph::{VertexSubset, WeightedGraph};
use crate::scalar::Scalar;

pub const FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "")]
struct InstanceFile<T: Scalar> {
    format_version: u64,
    params: ModelParams<T>,
    seed: u64,
    planted_set: Vec<usize>,
    edges: Vec<(usize, usize, T)>,
    adversary_log: Vec<(usize, usize)>,
    cross_edge_log: Vec<(usize, usize)>,
    outer_edge_log: Vec<(usize, usize)>,
}

fn json<V: Serialize + ?Sized>(v: &V) -> String {
    serde_json::to_string(v).expect("plain data always serialises")
}

fn write_list<W: Write, V: Serialize>(out: &mut W, name: &str, items: &[V], last: bool) -> std::io::Result<()> {
    write!(out, "  \"{name}\": [")?;
    for (i, item) in items.iter().enumerate() {
        write!(out, "{}\n    {}", if i == 0 { "" } else { "," }, json(item))?;
    }
    if !items.is_empty() {
        write!(out, "\n  ")?;
    }
    writeln!(out, "]{}", if last { "" } else { "," })
}

/// Writes the instance document; one edge per line.
pub fn write_instance<T: Scalar, W: Write>(instance: &PlantedInstance<T>, out: &mut W) -> Result<()> {
    let edges: Vec<(usize, usize, T)> = instance.graph.edges().collect();
    writeln!(out, "{{")?;
    writeln!(out, "  \"format_version\": {FORMAT_VERSION},")?;
    writeln!(out, "  \"params\": {},", json(&instance.params))?;
    writeln!(out, "  \"seed\": {},", instance.seed)?;
    writeln!(out, "  \"planted_set\": {},", json(instance.planted.members()))?;
    write_list(out, "edges", &edges, false)?;
    write_list(out, "adversary_log", &instance.adversary_log, false)?;
    write_list(out, "cross_edge_log", &instance.cross_edge_log, false)?;
    write_list(out, "outer_edge_log", &instance.outer_edge_log, true)?;
    writeln!(out, "}}")?;
    Ok(())
}

pub fn save_instance<T: Scalar>(instance: &PlantedInstance<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_instance(instance, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

fn check_pairs(name: &str, pairs: &[(usize, usize)], n: usize) -> Result<()> {
    for (i, &(u, v)) in pairs.iter().enumerate() {
        if u >= n || v >= n || u == v {
            return Err(DksError::parse_at(format!("{name}[{i}]"), format!("invalid pair [{u}, {v}] for n = {n}")));
        }
    }
    Ok(())
}

/// Parses an instance document, reporting the offending field on failure.
pub fn read_instance<T: Scalar>(text: &str) -> Result<PlantedInstance<T>> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| DksError::Parse {
        path: String::new(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    match value.get("format_version").and_then(|v| v.as_u64()) {
        Some(FORMAT_VERSION) => {}
        Some(found) => {
            return Err(DksError::Version {
                found,
                expected: FORMAT_VERSION,
            })
        }
        None => return Err(DksError::parse_at("format_version", "missing or not an unsigned integer")),
    }
    let mut de = serde_json::Deserializer::from_str(text);
    let file: InstanceFile<T> = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        DksError::Parse {
            path,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })?;

    let n = file.params.n;
    for (i, &(u, v, w)) in file.edges.iter().enumerate() {
        if u >= v || v >= n {
            return Err(DksError::parse_at(format!("edges[{i}]"), format!("need u < v < n, got [{u}, {v}] with n = {n}")));
        }
        if !(w > T::zero()) || !w.is_finite() {
            return Err(DksError::parse_at(format!("edges[{i}]"), format!("weight must be positive and finite, got {w}")));
        }
    }
    for (i, pair) in file.planted_set.windows(2).enumerate() {
        if pair[0] >= pair[1] {
            return Err(DksError::parse_at(format!("planted_set[{}]", i + 1), "planted_set must be strictly increasing"));
        }
    }
    if let Some(&v) = file.planted_set.last() {
        if v >= n {
            return Err(DksError::parse_at("planted_set", format!("vertex {v} outside [0, {n})")));
        }
    }
    check_pairs("adversary_log", &file.adversary_log, n)?;
    check_pairs("cross_edge_log", &file.cross_edge_log, n)?;
    check_pairs("outer_edge_log", &file.outer_edge_log, n)?;
    let graph = WeightedGraph::from_edges(n, file.edges).map_err(|e| DksError::parse_at("edges", e.to_string()))?;
    Ok(PlantedInstance {
        params: file.params,
        seed: file.seed,
        graph,
        planted: VertexSubset::new(file.planted_set),
        adversary_log: file.adversary_log,
        cross_edge_log: file.cross_edge_log,
        outer_edge_log: file.outer_edge_log,
    })
}

pub fn load_instance<T: Scalar>(path: impl AsRef<Path>) -> Result<PlantedInstance<T>> {
    read_instance(&fs::read_to_string(path)?)
}
