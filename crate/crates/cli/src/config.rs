//! JSON model documents.
//!
//! A document names the model, gives its coupling either through a graph
//! (Fick rates or flow weights) or as explicit matrices, and carries the
//! grid, the data and default run parameters. Command line flags override
//! the `run` section.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use netsemi::gridfn::{Grid, NetworkState};
use netsemi::netmodel::{
    self, DiffusionCoupling, FickRates, FlowNetwork, NetworkGraph, TransportCoupling,
};
use serde::Deserialize;

use crate::diag::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Diffusion,
    Transport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Neumann,
    Greiner,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub model: ModelKind,
    #[serde(default)]
    pub graph: Option<GraphSpec>,
    #[serde(default)]
    pub matrices: Option<MatricesSpec>,
    #[serde(default)]
    pub sigma: Option<Vec<f64>>,
    #[serde(default)]
    pub speeds: Option<Vec<f64>>,
    pub grid: GridSpec,
    #[serde(default)]
    pub initial: Option<InitialSpec>,
    #[serde(default)]
    pub run: RunSpec,
}

/// Vertices are `0..vertices`; each edge is `[tail, head]`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
    /// Fick rates, diffusion only. Missing means all zero.
    #[serde(default)]
    pub rates: Option<RatesSpec>,
    /// Flow weights `w[vertex][edge]`, transport only. Missing means an
    /// even split among the outgoing edges of each vertex.
    #[serde(default)]
    pub w: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub xi: Option<Vec<f64>>,
    #[serde(default)]
    pub gamma: Option<Vec<f64>>,
}

/// Cross rates are `[i, j, rate]` triples.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSpec {
    pub l: Vec<f64>,
    pub r: Vec<f64>,
    #[serde(default)]
    pub l_cross: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub r_cross: Vec<(usize, usize, f64)>,
}

/// Row-major matrices: `k00..k11` for diffusion, `k` for transport.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatricesSpec {
    #[serde(default)]
    pub k00: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub k01: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub k10: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub k11: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub k: Option<Vec<Vec<f64>>>,
}

/// Uniform grid with `n` segments.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
}

/// Either one constant for every node or nodal values per edge.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    Constant { constant: f64 },
    Nodal(Vec<Vec<f64>>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    /// `[re, im]`.
    #[serde(default)]
    pub lambda: Option<(f64, f64)>,
    /// `[start, stop, count]` along the real axis.
    #[serde(default)]
    pub sweep: Option<(f64, f64, usize)>,
    #[serde(default)]
    pub time: Option<f64>,
    #[serde(default)]
    pub steps: Option<usize>,
    /// Diffusion: keep every `stride`-th step in the trajectory.
    #[serde(default)]
    pub stride: Option<usize>,
    #[serde(default)]
    pub method: Option<Method>,
    /// `[re0, re1, im0, im1]`.
    #[serde(default)]
    pub region: Option<(f64, f64, f64, f64)>,
    #[serde(default)]
    pub grid_step: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
}

pub enum Coupling {
    Diffusion(DiffusionCoupling),
    Transport(TransportCoupling),
}

impl Coupling {
    pub fn edge_count(&self) -> usize {
        match self {
            Coupling::Diffusion(dc) => dc.edge_count(),
            Coupling::Transport(tc) => tc.edge_count(),
        }
    }
}

/// A validated document.
pub struct Model {
    pub doc: Document,
    pub coupling: Coupling,
    pub grid: Grid,
    /// Coupling built from `graph` rather than given as `matrices`.
    pub from_graph: bool,
}

impl Model {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(None, format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: Document = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Failure::config(Some(path), e.into_inner().to_string())
        })?;
        build(doc)
    }

    /// The data `initial`, sampled on the grid.
    pub fn initial(&self) -> Result<NetworkState<f64>, Failure> {
        let m = self.coupling.edge_count();
        match &self.doc.initial {
            None => Err(Failure::config(Some("initial".into()), "missing; this command needs data".into())),
            Some(InitialSpec::Constant { constant }) => {
                if !constant.is_finite() {
                    return Err(Failure::config(Some("initial.constant".into()), "must be finite".into()));
                }
                Ok(NetworkState::constant(self.grid.clone(), m, *constant))
            }
            Some(InitialSpec::Nodal(rows)) => {
                if rows.len() != m {
                    return Err(Failure::config(
                        Some("initial".into()),
                        format!("has {} edges, expected {m}", rows.len()),
                    ));
                }
                for (j, row) in rows.iter().enumerate() {
                    if row.len() != self.grid.len() {
                        return Err(Failure::config(
                            Some(format!("initial[{j}]")),
                            format!("has {} values, expected {}", row.len(), self.grid.len()),
                        ));
                    }
                    if let Some(i) = row.iter().position(|v| !v.is_finite()) {
                        return Err(Failure::config(Some(format!("initial[{j}][{i}]")), "must be finite".into()));
                    }
                }
                NetworkState::new(self.grid.clone(), rows.clone()).map_err(Failure::from)
            }
        }
    }
}

fn matrix(rows: &[Vec<f64>], m: usize, path: &str) -> Result<DMatrix<f64>, Failure> {
    if rows.len() != m {
        return Err(Failure::config(
            Some(path.into()),
            format!("has {} rows, expected {m}", rows.len()),
        ));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != m {
            return Err(Failure::config(
                Some(format!("{path}[{i}]")),
                format!("has {} entries, expected {m}", row.len()),
            ));
        }
    }
    Ok(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
}

fn per_edge(v: &Option<Vec<f64>>, m: usize, path: &str) -> Result<Vec<f64>, Failure> {
    match v {
        None => Ok(vec![1.0; m]),
        Some(v) if v.len() == m => Ok(v.clone()),
        Some(v) => Err(Failure::config(
            Some(path.into()),
            format!("has length {}, expected {m}", v.len()),
        )),
    }
}

fn not_allowed(present: bool, path: &str, model: &str) -> Result<(), Failure> {
    if present {
        return Err(Failure::config(Some(path.into()), format!("not allowed for the {model} model")));
    }
    Ok(())
}

fn build(doc: Document) -> Result<Model, Failure> {
    if doc.grid.n == 0 {
        return Err(Failure::config(Some("grid.n".into()), "must be at least 1".into()));
    }
    let grid = Grid::uniform(doc.grid.n).map_err(Failure::from)?;
    let (coupling, from_graph) = match (&doc.graph, &doc.matrices) {
        (Some(_), Some(_)) => {
            return Err(Failure::config(
                Some("matrices".into()),
                "`graph` and `matrices` are mutually exclusive".into(),
            ))
        }
        (None, None) => {
            return Err(Failure::config(None, "one of `graph` or `matrices` is required".into()))
        }
        (Some(g), None) => (from_graph(&doc, g)?, true),
        (None, Some(mx)) => (from_matrices(&doc, mx)?, false),
    };
    Ok(Model {
        doc,
        coupling,
        grid,
        from_graph,
    })
}

fn graph(g: &GraphSpec) -> Result<NetworkGraph, Failure> {
    for (e, &(t, h)) in g.edges.iter().enumerate() {
        if t >= g.vertices || h >= g.vertices {
            return Err(Failure::config(
                Some(format!("graph.edges[{e}]")),
                format!("vertex out of range 0..{}", g.vertices),
            ));
        }
    }
    NetworkGraph::new(g.vertices, &g.edges).map_err(Failure::from)
}

fn from_graph(doc: &Document, g: &GraphSpec) -> Result<Coupling, Failure> {
    let net = graph(g)?;
    let m = net.edge_count();
    match doc.model {
        ModelKind::Diffusion => {
            not_allowed(doc.speeds.is_some(), "speeds", "diffusion")?;
            not_allowed(g.w.is_some(), "graph.w", "diffusion")?;
            not_allowed(g.xi.is_some(), "graph.xi", "diffusion")?;
            not_allowed(g.gamma.is_some(), "graph.gamma", "diffusion")?;
            let sigma = per_edge(&doc.sigma, m, "sigma")?;
            let rates = match &g.rates {
                None => FickRates::zero(m),
                Some(r) => {
                    let cross = |v: &[(usize, usize, f64)], key: &str| -> Result<BTreeMap<_, _>, Failure> {
                        let mut out = BTreeMap::new();
                        for (n, &(i, j, rate)) in v.iter().enumerate() {
                            if i >= m || j >= m {
                                return Err(Failure::config(
                                    Some(format!("graph.rates.{key}[{n}]")),
                                    format!("edge out of range 0..{m}"),
                                ));
                            }
                            out.insert((i, j), rate);
                        }
                        Ok(out)
                    };
                    FickRates {
                        l: r.l.clone(),
                        r: r.r.clone(),
                        l_cross: cross(&r.l_cross, "l_cross")?,
                        r_cross: cross(&r.r_cross, "r_cross")?,
                    }
                }
            };
            let dc = netmodel::build_diffusion_coupling(&net, &rates, sigma).map_err(Failure::from)?;
            Ok(Coupling::Diffusion(dc))
        }
        ModelKind::Transport => {
            not_allowed(doc.sigma.is_some(), "sigma", "transport")?;
            not_allowed(g.rates.is_some(), "graph.rates", "transport")?;
            let sinks = netmodel::detect_sinks(&net);
            let mut flow = FlowNetwork::uniform(net);
            flow.c = per_edge(&doc.speeds, m, "speeds")?;
            flow.xi = per_edge(&g.xi, m, "graph.xi")?;
            flow.gamma = per_edge(&g.gamma, m, "graph.gamma")?;
            if let Some(w) = &g.w {
                let n = g.vertices;
                if w.len() != n {
                    return Err(Failure::config(Some("graph.w".into()), format!("has {} rows, expected {n}", w.len())));
                }
                for (v, row) in w.iter().enumerate() {
                    if row.len() != m {
                        return Err(Failure::config(
                            Some(format!("graph.w[{v}]")),
                            format!("has {} entries, expected {m}", row.len()),
                        ));
                    }
                }
                flow.w = DMatrix::from_fn(n, m, |v, e| w[v][e]);
            }
            if !sinks.is_empty() {
                return Err(Failure::from(netsemi::Error::SinkPresent(sinks)));
            }
            let tc = netmodel::build_transport_coupling(&flow).map_err(Failure::from)?;
            Ok(Coupling::Transport(tc))
        }
    }
}

fn from_matrices(doc: &Document, mx: &MatricesSpec) -> Result<Coupling, Failure> {
    match doc.model {
        ModelKind::Diffusion => {
            not_allowed(doc.speeds.is_some(), "speeds", "diffusion")?;
            not_allowed(mx.k.is_some(), "matrices.k", "diffusion")?;
            let rows = |v: &Option<Vec<Vec<f64>>>, key: &str| {
                v.as_ref()
                    .map(|r| r.len())
                    .ok_or_else(|| Failure::config(Some(format!("matrices.{key}")), "missing".into()))
            };
            let m = rows(&mx.k00, "k00")?;
            let get = |v: &Option<Vec<Vec<f64>>>, key: &str| -> Result<DMatrix<f64>, Failure> {
                let r = v
                    .as_ref()
                    .ok_or_else(|| Failure::config(Some(format!("matrices.{key}")), "missing".into()))?;
                matrix(r, m, &format!("matrices.{key}"))
            };
            let sigma = per_edge(&doc.sigma, m, "sigma")?;
            let dc = DiffusionCoupling::new(
                get(&mx.k00, "k00")?,
                get(&mx.k01, "k01")?,
                get(&mx.k10, "k10")?,
                get(&mx.k11, "k11")?,
                sigma,
            )
            .map_err(Failure::from)?;
            Ok(Coupling::Diffusion(dc))
        }
        ModelKind::Transport => {
            not_allowed(doc.sigma.is_some(), "sigma", "transport")?;
            for (v, key) in [(&mx.k00, "k00"), (&mx.k01, "k01"), (&mx.k10, "k10"), (&mx.k11, "k11")] {
                not_allowed(v.is_some(), &format!("matrices.{key}"), "transport")?;
            }
            let k = mx
                .k
                .as_ref()
                .ok_or_else(|| Failure::config(Some("matrices.k".into()), "missing".into()))?;
            let m = k.len();
            let speeds = per_edge(&doc.speeds, m, "speeds")?;
            let tc = TransportCoupling::new(matrix(k, m, "matrices.k")?, speeds).map_err(Failure::from)?;
            Ok(Coupling::Transport(tc))
        }
    }
}
