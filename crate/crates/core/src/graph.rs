//! Graph parameters and the immutable adjacency structure.
//!
//! Text format (UTF-8, newline-delimited, 1-based):
//!
//! ```text
//! N beta gamma variant      <- header; a bare `N` is accepted for hand-made fixtures
//! i j m                     <- one line per edge, `m` omitted when 1; i <= j
//! i i m                     <- loops (multigraph variant only)
//! ```
//!
//! Blank lines and lines starting with `#` are ignored on read.

use std::fmt::Write as _;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Chung-Lu: `q = p`.
    Cl,
    /// Simple Norros-Reittu: `q = 1 - exp(-p)`.
    Snr,
    /// Generalised random graph: `q = p / (1 + p)`.
    Grg,
    /// Multigraph Norros-Reittu: Poisson multiplicities, loops allowed.
    Mnr,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Cl, Variant::Snr, Variant::Grg, Variant::Mnr];

    pub fn is_simple(self) -> bool {
        self != Variant::Mnr
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Cl => "cl",
            Variant::Snr => "snr",
            Variant::Grg => "grg",
            Variant::Mnr => "mnr",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cl" => Ok(Variant::Cl),
            "snr" => Ok(Variant::Snr),
            "grg" => Ok(Variant::Grg),
            "mnr" => Ok(Variant::Mnr),
            other => Err(Error::InvalidParameter(format!("unknown variant `{other}`"))),
        }
    }
}

/// One member of the graph class: vertex count, `beta`, `gamma` and the variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub n: usize,
    pub beta: f64,
    pub gamma: f64,
    pub variant: Variant,
    #[serde(default)]
    pub allow_nonsubcritical: bool,
}

impl GraphSpec {
    /// Validated constructor; rejects `beta + 2 gamma >= 1`.
    pub fn new(n: usize, beta: f64, gamma: f64, variant: Variant) -> Result<Self> {
        let spec = Self { n, beta, gamma, variant, allow_nonsubcritical: false };
        spec.validate()?;
        Ok(spec)
    }

    /// Like [`GraphSpec::new`] but skips the subcritical gate.
    pub fn new_unchecked_regime(n: usize, beta: f64, gamma: f64, variant: Variant) -> Result<Self> {
        let spec = Self { n, beta, gamma, variant, allow_nonsubcritical: true };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("n = {} must be at least 2", self.n)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta = {} must be positive", self.beta)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma = {} must be positive", self.gamma)));
        }
        let sum = self.beta + 2.0 * self.gamma;
        if sum >= 1.0 && !self.allow_nonsubcritical {
            return Err(Error::NotSubcritical { beta: self.beta, gamma: self.gamma, sum });
        }
        Ok(())
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..*self }
    }

    pub fn with_variant(&self, variant: Variant) -> Self {
        Self { variant, ..*self }
    }
}

/// Immutable undirected (multi)graph on vertices `1..=n`, stored as CSR.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    mult: Vec<u32>,
    loops: Vec<u32>,
    spec: Option<GraphSpec>,
}

impl Graph {
    /// Builds a graph from `(i, j, multiplicity)` triples. Repeated pairs add up,
    /// `i == j` records loops. Zero multiplicities are dropped.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, u32)>,
    {
        let mut pairs: Vec<(u32, u32, u32)> = Vec::new();
        let mut loops = vec![0u32; n];
        for (i, j, m) in edges {
            for v in [i, j] {
                if v == 0 || v > n {
                    return Err(Error::VertexOutOfRange { vertex: v, n });
                }
            }
            if m == 0 {
                continue;
            }
            if i == j {
                loops[i - 1] += m;
            } else {
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                pairs.push((a as u32, b as u32, m));
            }
        }
        pairs.sort_unstable_by_key(|&(a, b, _)| (a, b));
        let mut merged: Vec<(u32, u32, u32)> = Vec::with_capacity(pairs.len());
        for (a, b, m) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == a && last.1 == b => last.2 += m,
                _ => merged.push((a, b, m)),
            }
        }

        let mut counts = vec![0usize; n + 1];
        for &(a, b, _) in &merged {
            counts[a as usize] += 1;
            counts[b as usize] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 1..=n {
            offsets[v] = offsets[v - 1] + counts[v];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0u32; offsets[n]];
        let mut mult = vec![0u32; offsets[n]];
        for &(a, b, m) in &merged {
            let (ai, bi) = (a as usize - 1, b as usize - 1);
            targets[fill[ai]] = b;
            mult[fill[ai]] = m;
            fill[ai] += 1;
            targets[fill[bi]] = a;
            mult[fill[bi]] = m;
            fill[bi] += 1;
        }
        for v in 0..n {
            let (lo, hi) = (offsets[v], offsets[v + 1]);
            let mut row: Vec<(u32, u32)> =
                targets[lo..hi].iter().copied().zip(mult[lo..hi].iter().copied()).collect();
            row.sort_unstable();
            for (k, (t, m)) in row.into_iter().enumerate() {
                targets[lo + k] = t;
                mult[lo + k] = m;
            }
        }
        Ok(Self { n, offsets, targets, mult, loops, spec: None })
    }

    /// Simple graph from an edge list; duplicate pairs are rejected.
    pub fn simple(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let g = Self::from_edges(n, edges.iter().map(|&(i, j)| (i, j, 1)))?;
        if !g.is_simple() {
            return Err(Error::InvalidParameter("edge list has loops or repeated pairs".into()));
        }
        Ok(g)
    }

    pub fn with_spec(mut self, spec: GraphSpec) -> Self {
        self.spec = Some(spec);
        self
    }

    pub fn spec(&self) -> Option<&GraphSpec> {
        self.spec.as_ref()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check(&self, v: usize) {
        assert!(v >= 1 && v <= self.n, "vertex {v} out of range 1..={}", self.n);
    }

    /// Distinct neighbours of `v` (loops excluded), ascending.
    pub fn neighbors(&self, v: usize) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.check(v);
        self.targets[self.offsets[v - 1]..self.offsets[v]].iter().map(|&t| t as usize)
    }

    /// `(neighbour, multiplicity)` pairs for `v`, ascending.
    pub fn neighbors_with_multiplicity(&self, v: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.check(v);
        let r = self.offsets[v - 1]..self.offsets[v];
        self.targets[r.clone()].iter().zip(&self.mult[r]).map(|(&t, &m)| (t as usize, m))
    }

    pub fn multiplicity(&self, i: usize, j: usize) -> u32 {
        if i == j {
            return self.loops(i);
        }
        self.check(i);
        self.check(j);
        let r = self.offsets[i - 1]..self.offsets[i];
        match self.targets[r.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.mult[r.start + k],
            Err(_) => 0,
        }
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.multiplicity(i, j) > 0
    }

    pub fn loops(&self, v: usize) -> u32 {
        self.check(v);
        self.loops[v - 1]
    }

    /// Number of incident edge endpoints: multiplicities count, each loop counts twice.
    pub fn degree(&self, v: usize) -> usize {
        let r = self.offsets[v - 1]..self.offsets[v];
        self.mult[r].iter().map(|&m| m as usize).sum::<usize>() + 2 * self.loops(v) as usize
    }

    /// Incident edges with each loop counted once (the offspring count of the cluster exploration).
    pub fn incident_edges(&self, v: usize) -> usize {
        self.degree(v) - self.loops(v) as usize
    }

    /// Number of distinct neighbours; equals [`Graph::degree`] on simple graphs.
    pub fn neighbor_count(&self, v: usize) -> usize {
        self.check(v);
        self.offsets[v] - self.offsets[v - 1]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (1..=self.n).map(|v| self.degree(v)).collect()
    }

    /// Number of edges counted with multiplicity, loops included.
    pub fn edge_count(&self) -> usize {
        self.mult.iter().map(|&m| m as usize).sum::<usize>() / 2
            + self.loops.iter().map(|&l| l as usize).sum::<usize>()
    }

    /// Distinct unordered pairs `i < j` that are adjacent.
    pub fn simple_edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn is_simple(&self) -> bool {
        self.mult.iter().all(|&m| m == 1) && self.loops.iter().all(|&l| l == 0)
    }

    /// `(i, j, multiplicity)` with `i < j`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        (1..=self.n).flat_map(move |i| {
            self.neighbors_with_multiplicity(i).filter(move |&(j, _)| j > i).map(move |(j, m)| (i, j, m))
        })
    }

    /// Flattens multi-edges to single edges and deletes loops.
    pub fn collapse(&self) -> Graph {
        let mut g = Graph {
            n: self.n,
            offsets: self.offsets.clone(),
            targets: self.targets.clone(),
            mult: vec![1; self.mult.len()],
            loops: vec![0; self.n],
            spec: self.spec,
        };
        if let Some(spec) = g.spec.as_mut() {
            if spec.variant == Variant::Mnr {
                spec.variant = Variant::Snr;
            }
        }
        g
    }

    /// Induced simple subgraph on `vertices` (sorted or not), relabelled `1..=len`
    /// in ascending vertex order. Returns the graph and the original labels.
    pub fn induced(&self, vertices: &[usize]) -> (Graph, Vec<usize>) {
        let mut labels = vertices.to_vec();
        labels.sort_unstable();
        labels.dedup();
        let index = |v: usize| labels.binary_search(&v).ok();
        let mut edges = Vec::new();
        for (a, &v) in labels.iter().enumerate() {
            for (w, m) in self.neighbors_with_multiplicity(v) {
                if let Some(b) = index(w) {
                    if b > a {
                        edges.push((a + 1, b + 1, m));
                    }
                }
            }
            if self.loops(v) > 0 {
                edges.push((a + 1, a + 1, self.loops(v)));
            }
        }
        let g = Graph::from_edges(labels.len(), edges).expect("relabelled vertices are in range");
        (g, labels)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match &self.spec {
            Some(s) => writeln!(out, "{} {} {} {}", self.n, s.beta, s.gamma, s.variant).unwrap(),
            None => writeln!(out, "{}", self.n).unwrap(),
        }
        let mut lines: Vec<(usize, usize, u32)> = self.edges().collect();
        lines.extend((1..=self.n).filter(|&v| self.loops(v) > 0).map(|v| (v, v, self.loops(v))));
        lines.sort_unstable_by_key(|&(i, j, _)| (i, j));
        for (i, j, m) in lines {
            if m == 1 {
                writeln!(out, "{i} {j}").unwrap();
            } else {
                writeln!(out, "{i} {j} {m}").unwrap();
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::read(text.as_bytes())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut header: Option<(usize, Option<GraphSpec>)> = None;
        let mut edges = Vec::new();
        for (k, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = k + 1;
            let body = line.trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = body.split_whitespace().collect();
            let perr = |message: String| Error::Parse { line: lineno, message };
            if header.is_none() {
                let n: usize = fields[0].parse().map_err(|e| perr(format!("bad vertex count: {e}")))?;
                let spec = match fields.len() {
                    1 => None,
                    4 => {
                        let beta: f64 = fields[1].parse().map_err(|e| perr(format!("bad beta: {e}")))?;
                        let gamma: f64 = fields[2].parse().map_err(|e| perr(format!("bad gamma: {e}")))?;
                        let variant: Variant = fields[3].parse().map_err(|e: Error| perr(e.to_string()))?;
                        Some(GraphSpec { n, beta, gamma, variant, allow_nonsubcritical: true })
                    }
                    _ => return Err(perr("header must be `N` or `N beta gamma variant`".into())),
                };
                header = Some((n, spec));
                continue;
            }
            if !(2..=3).contains(&fields.len()) {
                return Err(perr("edge line must be `i j` or `i j m`".into()));
            }
            let i: usize = fields[0].parse().map_err(|e| perr(format!("bad vertex: {e}")))?;
            let j: usize = fields[1].parse().map_err(|e| perr(format!("bad vertex: {e}")))?;
            let m: u32 = match fields.get(2) {
                Some(f) => f.parse().map_err(|e| perr(format!("bad multiplicity: {e}")))?,
                None => 1,
            };
            edges.push((i, j, m));
        }
        let (n, spec) = header.ok_or(Error::Parse { line: 0, message: "missing header".into() })?;
        let mut g = Graph::from_edges(n, edges)?;
        g.spec = spec;
        Ok(g)
    }
}
