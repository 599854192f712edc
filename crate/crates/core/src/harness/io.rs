//! JSON file formats. Bit strings list coordinate 1 first; table values run over the domain in
//! lexicographic order of that string (`x(1)…x(R)` then `z(1)…z(R)` on `Ω^R`).

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::csp::{ConstraintHypergraph, Edge, Predicate};
use crate::error::{Error, Result};
use crate::probspace::{Alphabet, BiasedSpace, FunctionTable, TableSpace};
use crate::pseudodist::{LocalDist, LocalDistributionFamily};
use crate::reduction::SseGraph;

/// Parses `text`, naming the offending field path on failure.
pub fn parse_json<T: DeserializeOwned>(text: &str, context: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Parse {
            context: if path == "." { context.to_string() } else { format!("{context} at `{path}`") },
            message: e.into_inner().to_string(),
        }
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    parse_json(&text, &path.display().to_string())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse {
        context: path.display().to_string(),
        message: e.to_string(),
    })?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn reverse_bits(i: usize, width: usize) -> usize {
    (0..width).fold(0, |acc, k| acc | (i >> k & 1) << (width - 1 - k))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceJson {
    pub r: usize,
    pub biases: Vec<f64>,
    #[serde(default = "default_alphabet")]
    pub alphabet: Alphabet,
    /// Present for `Ω^R` tables: the `⊤` probability per coordinate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leak_biases: Option<Vec<f64>>,
}

fn default_alphabet() -> Alphabet {
    Alphabet::Bit
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableJson {
    pub space: SpaceJson,
    pub values: Vec<f64>,
}

impl TableJson {
    pub fn from_table(t: &FunctionTable) -> Self {
        let space = match t.space() {
            TableSpace::Cube(s) => SpaceJson {
                r: s.coordinate_count(),
                biases: s.biases().to_vec(),
                alphabet: s.alphabet(),
                leak_biases: None,
            },
            TableSpace::Omega { bits, leaks } => SpaceJson {
                r: bits.coordinate_count(),
                biases: bits.biases().to_vec(),
                alphabet: Alphabet::Bit,
                leak_biases: Some(leaks.biases().to_vec()),
            },
        };
        let width = t.space().bit_count();
        let values = (0..t.values().len()).map(|i| t.value(reverse_bits(i, width))).collect();
        Self { space, values }
    }

    pub fn to_table(&self) -> Result<FunctionTable> {
        let s = &self.space;
        if s.biases.len() != s.r {
            return Err(Error::Shape(format!("space declares r = {} but lists {} biases", s.r, s.biases.len())));
        }
        let space = match &s.leak_biases {
            None => TableSpace::cube(BiasedSpace::new(s.biases.clone(), s.alphabet)?)?,
            Some(l) => TableSpace::omega(
                BiasedSpace::new(s.biases.clone(), Alphabet::Bit)?,
                BiasedSpace::new(l.clone(), Alphabet::Leak)?,
            )?,
        };
        let width = space.bit_count();
        if self.values.len() != 1 << width {
            return Err(Error::Shape(format!("{} values for a domain of {} points", self.values.len(), 1usize << width)));
        }
        let values = (0..self.values.len()).map(|i| self.values[reverse_bits(i, width)]).collect();
        FunctionTable::new(space, values)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredicateJson {
    pub arity: usize,
    pub accepting: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexJson {
    pub id: String,
    #[serde(default = "one")]
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeJson {
    pub vs: Vec<String>,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

/// Instance file. Weights are normalized on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceJson {
    pub predicate: PredicateJson,
    pub vertices: Vec<VertexJson>,
    pub edges: Vec<EdgeJson>,
}

fn normalize(w: Vec<f64>, what: &str) -> Result<Vec<f64>> {
    let s: f64 = w.iter().sum();
    if w.iter().any(|v| !v.is_finite() || *v < 0.0) || s <= 0.0 {
        return Err(Error::invalid(format!("{what} must be nonnegative with positive total")));
    }
    Ok(w.into_iter().map(|v| v / s).collect())
}

impl InstanceJson {
    pub fn from_instance(g: &ConstraintHypergraph) -> Self {
        let ids = g.ids();
        Self {
            predicate: PredicateJson { arity: g.arity(), accepting: g.predicate().accepting_strings() },
            vertices: ids
                .iter()
                .zip(g.vertex_weights())
                .map(|(id, w)| VertexJson { id: id.clone(), weight: *w })
                .collect(),
            edges: g
                .edges()
                .iter()
                .map(|e| EdgeJson { vs: e.vs.iter().map(|&v| ids[v].clone()).collect(), weight: e.weight })
                .collect(),
        }
    }

    pub fn to_instance(&self) -> Result<ConstraintHypergraph> {
        let predicate = Predicate::from_strings(self.predicate.arity, &self.predicate.accepting)?;
        let ids: Vec<String> = self.vertices.iter().map(|v| v.id.clone()).collect();
        let vw = normalize(self.vertices.iter().map(|v| v.weight).collect(), "vertex weights")?;
        let ew = normalize(self.edges.iter().map(|e| e.weight).collect(), "edge weights")?;
        let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(k, id)| (id.as_str(), k)).collect();
        let edges = self
            .edges
            .iter()
            .zip(ew)
            .map(|(e, weight)| {
                let vs = e
                    .vs
                    .iter()
                    .map(|id| index.get(id.as_str()).copied().ok_or_else(|| Error::UnknownVertex(id.clone())))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Edge { vs, weight })
            })
            .collect::<Result<Vec<_>>>()?;
        ConstraintHypergraph::new(ids, vw, edges, predicate)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalJson {
    pub subset: Vec<String>,
    /// Outcome string (one character per listed vertex) to probability; absent outcomes are 0.
    pub probs: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PseudoDistJson {
    pub level: usize,
    pub locals: Vec<LocalJson>,
}

impl PseudoDistJson {
    /// Writes the locals on `subsets` (vertex indices) of `theta`.
    pub fn from_family(theta: &LocalDistributionFamily, g: &ConstraintHypergraph, subsets: &[Vec<usize>]) -> Result<Self> {
        let ids = g.ids();
        let locals = subsets
            .iter()
            .map(|s| {
                let l = theta.local(s)?;
                let k = l.subset.len();
                let probs = l
                    .probs
                    .iter()
                    .enumerate()
                    .map(|(m, p)| ((0..k).map(|j| if m >> j & 1 == 1 { '1' } else { '0' }).collect(), *p))
                    .collect();
                Ok(LocalJson { subset: l.subset.iter().map(|&v| ids[v].clone()).collect(), probs })
            })
            .collect::<Result<_>>()?;
        Ok(Self { level: theta.level(), locals })
    }

    pub fn to_family(&self, g: &ConstraintHypergraph) -> Result<LocalDistributionFamily> {
        let mut locals = Vec::with_capacity(self.locals.len());
        for l in &self.locals {
            let vs = l.subset.iter().map(|id| g.vertex_index(id)).collect::<Result<Vec<_>>>()?;
            let mut order: Vec<usize> = (0..vs.len()).collect();
            order.sort_by_key(|&j| vs[j]);
            let sorted: Vec<usize> = order.iter().map(|&j| vs[j]).collect();
            let mut probs = vec![0.0; 1 << vs.len()];
            for (s, p) in &l.probs {
                let m = crate::csp::parse_bits(s, vs.len())? as usize;
                let k = order.iter().enumerate().fold(0usize, |acc, (t, &j)| acc | (m >> j & 1) << t);
                probs[k] += p;
            }
            locals.push(LocalDist::new(sorted, probs)?);
        }
        LocalDistributionFamily::from_locals(self.level, g.vertex_count(), locals)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphJson {
    pub n: usize,
    pub deg: usize,
    pub adj: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted: Option<Vec<usize>>,
}

impl GraphJson {
    pub fn from_graph(g: &SseGraph) -> Self {
        Self { n: g.n, deg: g.deg, adj: g.adj.clone(), planted: g.planted.clone() }
    }

    pub fn to_graph(&self) -> Result<SseGraph> {
        let g = SseGraph::new(self.adj.clone(), self.planted.clone())?;
        if g.n != self.n || g.deg != self.deg {
            return Err(Error::Shape(format!(
                "graph declares n = {}, deg = {} but adjacency gives n = {}, deg = {}",
                self.n, self.deg, g.n, g.deg
            )));
        }
        Ok(g)
    }
}
