//! Plain-text file formats.
//!
//! # Instance / map collection
//!
//! ```text
//! <n> <m>
//! obj <i>: <label> <label> ...      one line per object, i = 0..n-1 in order
//! map <i> <j> <k>                   one per observed pair
//! <r> <c>                           k lines: local row of i, local row of j
//! ```
//!
//! `m` is 0 when the universe size is unknown. Labels are free nonnegative
//! integers naming the points; the object's size is the number of labels.
//! Every `map` line adds `(i, j)` to the map graph, even when `k = 0`.
//! Lines starting with `#` and blank lines are skipped. The writer emits
//! maps with `i < j` sorted by `(i, j)` and entries sorted by `(r, c)`;
//! reading then writing such a file reproduces it byte for byte. A reader
//! also accepts `i > j` (the block is transposed) and applies the chosen
//! [`SymmetryPolicy`] when both orientations are present.
//!
//! # Relaxed matrix
//!
//! ```text
//! relaxed <n> <N>
//! sizes <m_1> ... <m_n>
//! <N lines of N space-separated values>
//! ```
//!
//! Values are written in Rust's shortest round-trip decimal form.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::admm::IterationRecord;
use crate::error::{Error, Result};
use crate::mapcore::{BlockMapMatrix, MapGraph, PartialMapBlock, SymmetryPolicy};
use crate::synth::Instance;

/// Parsed contents of an instance file.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFile {
    /// Universe size if declared (header value nonzero).
    pub m: Option<usize>,
    pub labels: Vec<Vec<u64>>,
    pub graph: MapGraph,
    pub maps: BlockMapMatrix,
}

impl InstanceFile {
    /// Instance with local point labels `0..m_i` and unknown `m`.
    pub fn from_instance(inst: &Instance) -> Self {
        Self {
            m: None,
            labels: inst
                .truth
                .sizes()
                .iter()
                .map(|&s| (0..s as u64).collect())
                .collect(),
            graph: inst.graph.clone(),
            maps: inst.x_in.clone(),
        }
    }

    /// Ground truth: universe labels and every nonempty block of `x_gt`.
    pub fn truth_of(inst: &Instance) -> Self {
        let maps = inst.x_gt.clone();
        let graph = MapGraph::new(maps.n(), maps.binary_blocks().map(|(k, _)| k)).expect("valid pairs");
        Self {
            m: Some(inst.truth.universe_size()),
            labels: inst
                .truth
                .labels()
                .iter()
                .map(|l| l.iter().map(|&s| s as u64).collect())
                .collect(),
            graph,
            maps,
        }
    }

    /// Collection given by a binary matrix; every nonempty block is an edge.
    pub fn from_maps(maps: &BlockMapMatrix, m: Option<usize>) -> Result<Self> {
        if !maps.is_binary() {
            return Err(Error::NotBinary);
        }
        let graph = MapGraph::new(maps.n(), maps.binary_blocks().map(|(k, _)| k))?;
        Ok(Self {
            m,
            labels: maps.sizes().iter().map(|&s| (0..s as u64).collect()).collect(),
            graph,
            maps: maps.clone(),
        })
    }
}

pub fn write_instance(file: &InstanceFile) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", file.labels.len(), file.m.unwrap_or(0));
    for (i, labels) in file.labels.iter().enumerate() {
        let _ = write!(out, "obj {i}:");
        for l in labels {
            let _ = write!(out, " {l}");
        }
        out.push('\n');
    }
    for &(i, j) in file.graph.edges() {
        let block = file.maps.block(i, j);
        let pairs = block.pairs().expect("binary map");
        let _ = writeln!(out, "map {i} {j} {}", pairs.len());
        for (r, c) in pairs {
            let _ = writeln!(out, "{r} {c}");
        }
    }
    out
}

struct Lines<'a> {
    name: &'a str,
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
}

impl<'a> Lines<'a> {
    fn new(name: &'a str, text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(k, l)| (k + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#')),
        );
        Self {
            name,
            inner: it.peekable(),
        }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.inner.next().ok_or_else(|| Error::Parse {
            path: self.name.to_string(),
            line: 0,
            message: format!("unexpected end of file, expected {what}"),
        })
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.name.to_string(),
            line,
            message: message.into(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(lines: &Lines<'_>, line: usize, tok: Option<&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| lines.err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| lines.err(line, format!("invalid {what} '{tok}'")))
}

/// Parses an instance file; `name` is used in error messages.
pub fn parse_instance(name: &str, text: &str, policy: SymmetryPolicy) -> Result<InstanceFile> {
    let mut lines = Lines::new(name, text);
    let (ln, header) = lines.next("header")?;
    let mut toks = header.split_whitespace();
    let n: usize = parse_num(&lines, ln, toks.next(), "object count")?;
    let m: usize = parse_num(&lines, ln, toks.next(), "universe size")?;
    if toks.next().is_some() {
        return Err(lines.err(ln, "trailing tokens in header"));
    }
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let (ln, line) = lines.next("object line")?;
        let rest = line
            .strip_prefix("obj ")
            .ok_or_else(|| lines.err(ln, "expected 'obj <i>:'"))?;
        let (idx, list) = rest
            .split_once(':')
            .ok_or_else(|| lines.err(ln, "missing ':' after object index"))?;
        let idx: usize = parse_num(&lines, ln, Some(idx.trim()), "object index")?;
        if idx != i {
            return Err(lines.err(ln, format!("object {idx} out of order, expected {i}")));
        }
        let obj = list
            .split_whitespace()
            .map(|t| parse_num::<u64>(&lines, ln, Some(t), "label"))
            .collect::<Result<Vec<_>>>()?;
        labels.push(obj);
    }
    let sizes: Vec<usize> = labels.iter().map(Vec::len).collect();
    let mut blocks = Vec::new();
    let mut edges = Vec::new();
    let mut seen = BTreeMap::new();
    while let Some((ln, line)) = lines.inner.next() {
        let mut toks = line.split_whitespace();
        if toks.next() != Some("map") {
            return Err(lines.err(ln, "expected 'map <i> <j> <k>'"));
        }
        let i: usize = parse_num(&lines, ln, toks.next(), "object index")?;
        let j: usize = parse_num(&lines, ln, toks.next(), "object index")?;
        let k: usize = parse_num(&lines, ln, toks.next(), "entry count")?;
        if i >= n || j >= n || i == j {
            return Err(lines.err(ln, format!("invalid object pair ({i},{j})")));
        }
        if seen.insert((i, j), ln).is_some() {
            return Err(lines.err(ln, format!("map ({i},{j}) listed twice")));
        }
        let mut pairs = Vec::with_capacity(k);
        for _ in 0..k {
            let (eln, entry) = lines.next("map entry")?;
            let mut t = entry.split_whitespace();
            let r: usize = parse_num(&lines, eln, t.next(), "row")?;
            let c: usize = parse_num(&lines, eln, t.next(), "column")?;
            if t.next().is_some() {
                return Err(lines.err(eln, "expected '<r> <c>'"));
            }
            if pairs.contains(&(r, c)) {
                return Err(lines.err(eln, format!("entry ({r},{c}) repeated")));
            }
            pairs.push((r, c));
        }
        let block = PartialMapBlock::binary(sizes[i], sizes[j], pairs).map_err(|e| lines.err(ln, e.to_string()))?;
        edges.push((i, j));
        blocks.push(((i, j), block));
    }
    let maps = BlockMapMatrix::assemble_with(sizes, blocks, policy)?;
    let graph = MapGraph::new(n, edges)?;
    Ok(InstanceFile {
        m: (m > 0).then_some(m),
        labels,
        graph,
        maps,
    })
}

pub fn write_relaxed(x: &BlockMapMatrix) -> String {
    let order = x.order();
    let mut out = String::new();
    let _ = writeln!(out, "relaxed {} {}", x.n(), order);
    out.push_str("sizes");
    for s in x.sizes() {
        let _ = write!(out, " {s}");
    }
    out.push('\n');
    let dense = x.to_dense();
    for p in 0..order {
        for (q, v) in dense[p * order..(p + 1) * order].iter().enumerate() {
            if q > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_relaxed(name: &str, text: &str) -> Result<BlockMapMatrix> {
    let mut lines = Lines::new(name, text);
    let (ln, header) = lines.next("header")?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("relaxed") {
        return Err(lines.err(ln, "expected 'relaxed <n> <N>'"));
    }
    let n: usize = parse_num(&lines, ln, toks.next(), "object count")?;
    let order: usize = parse_num(&lines, ln, toks.next(), "order")?;
    let (ln, sizes_line) = lines.next("sizes line")?;
    let mut toks = sizes_line.split_whitespace();
    if toks.next() != Some("sizes") {
        return Err(lines.err(ln, "expected 'sizes ...'"));
    }
    let sizes = toks
        .map(|t| parse_num::<usize>(&lines, ln, Some(t), "size"))
        .collect::<Result<Vec<_>>>()?;
    if sizes.len() != n || sizes.iter().sum::<usize>() != order {
        return Err(lines.err(ln, "sizes disagree with header"));
    }
    let mut values = Vec::with_capacity(order * order);
    for _ in 0..order {
        let (ln, row) = lines.next("matrix row")?;
        let before = values.len();
        for t in row.split_whitespace() {
            values.push(parse_num::<f64>(&lines, ln, Some(t), "value")?);
        }
        if values.len() - before != order {
            return Err(lines.err(ln, format!("expected {order} values")));
        }
    }
    if let Some((ln, _)) = lines.inner.next() {
        return Err(lines.err(ln, "trailing content"));
    }
    BlockMapMatrix::from_dense(sizes, values)
}

pub fn spectrum_csv(spectrum: &[f64]) -> String {
    let mut out = String::from("index,eigenvalue\n");
    for (k, w) in spectrum.iter().enumerate() {
        let _ = writeln!(out, "{},{w}", k + 1);
    }
    out
}

pub fn trace_csv(trace: &[IterationRecord]) -> String {
    let mut out = String::from("iteration,feasibility,negativity,min_eigenvalue,change,identity_gap\n");
    for r in trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.iteration, r.feasibility, r.negativity, r.min_eigenvalue, r.change, r.identity_gap
        );
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn read_instance(path: &Path, policy: SymmetryPolicy) -> Result<InstanceFile> {
    parse_instance(&path.display().to_string(), &read_to_string(path)?, policy)
}

pub fn read_relaxed(path: &Path) -> Result<BlockMapMatrix> {
    parse_relaxed(&path.display().to_string(), &read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "3 0\nobj 0: 4 7\nobj 1: 1\nobj 2:\nmap 0 1 1\n1 0\nmap 0 2 0\n";

    #[test]
    fn sample_round_trips() {
        let f = parse_instance("sample", SAMPLE, SymmetryPolicy::Reject).unwrap();
        assert_eq!(f.labels, vec![vec![4, 7], vec![1], vec![]]);
        assert_eq!(f.graph.edge_count(), 2);
        assert_eq!(f.maps.get(1, 2), 1.0);
        assert_eq!(write_instance(&f), SAMPLE);
    }

    #[test]
    fn comments_and_reversed_orientation() {
        let text = "# two objects\n2 3\n\nobj 0: 0 1\nobj 1: 0 1\nmap 1 0 1\n0 1\n";
        let f = parse_instance("t", text, SymmetryPolicy::Reject).unwrap();
        assert_eq!(f.m, Some(3));
        assert_eq!(f.maps.block(0, 1).pairs().unwrap(), &[(1, 0)]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_instance("bad", "2 0\nobj 0: 1\nobj 1: 2\nmap 0 1 1\n5 0\n", SymmetryPolicy::Reject).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(parse_instance("bad", "2 0\nobj 1: 1\n", SymmetryPolicy::Reject).is_err());
        assert!(parse_instance("bad", "2 0\nobj 0: 1\n", SymmetryPolicy::Reject).is_err());
    }

    #[test]
    fn relaxed_round_trip() {
        let x = BlockMapMatrix::from_dense(vec![1, 1], vec![1.0, 0.1 + 0.2, 0.1 + 0.2, 1.0]).unwrap();
        let text = write_relaxed(&x);
        let back = parse_relaxed("x", &text).unwrap();
        assert_eq!(back, x);
        assert_eq!(write_relaxed(&back), text);
    }
}
