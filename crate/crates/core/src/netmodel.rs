//! Network graphs and the boundary-coupling matrices built from them.
//!
//! Edge `e` runs from `tail(e)` (the point `x = 0`) to `head(e)` (`x = 1`).
//! Diffusion couplings come from Fick-type exchange rates across shared
//! vertices; transport couplings come from a flow-distribution matrix at
//! the vertices. Both models also accept arbitrary matrices that do not
//! come from any graph.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::{Error, Result};

/// Absolute per-column tolerance of [`check_conservation_condition`].
pub const CONSERVATION_TOL: f64 = 1e-12;

/// Tolerance on the per-vertex flow distribution sums.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Directed multigraph with at least one edge and no isolated vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkGraph {
    n: usize,
    tail: Vec<usize>,
    head: Vec<usize>,
}

impl NetworkGraph {
    pub fn new(vertex_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::InvalidGraph("graph needs at least one edge".into()));
        }
        let mut touched = vec![false; vertex_count];
        for (e, &(t, h)) in edges.iter().enumerate() {
            if t >= vertex_count || h >= vertex_count {
                return Err(Error::InvalidGraph(format!(
                    "edge {e} references vertex outside 0..{vertex_count}"
                )));
            }
            touched[t] = true;
            touched[h] = true;
        }
        if let Some(v) = touched.iter().position(|&t| !t) {
            return Err(Error::InvalidGraph(format!("vertex {v} is isolated")));
        }
        Ok(Self {
            n: vertex_count,
            tail: edges.iter().map(|e| e.0).collect(),
            head: edges.iter().map(|e| e.1).collect(),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.tail.len()
    }

    pub fn tail(&self, edge: usize) -> usize {
        self.tail[edge]
    }

    pub fn head(&self, edge: usize) -> usize {
        self.head[edge]
    }

    pub fn has_loops(&self) -> bool {
        self.tail.iter().zip(&self.head).any(|(t, h)| t == h)
    }

    /// Outgoing incidence `Φ⁻` (n×m): entry `(v, e)` is 1 when `e` leaves `v`.
    pub fn outgoing_incidence(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.edge_count(), |v, e| f64::from(self.tail[e] == v))
    }

    /// Incoming incidence `Φ⁺` (n×m): entry `(v, e)` is 1 when `e` enters `v`.
    pub fn incoming_incidence(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.edge_count(), |v, e| f64::from(self.head[e] == v))
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.tail.iter().filter(|&&t| t == v).count()
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.head.iter().filter(|&&h| h == v).count()
    }
}

/// Fick exchange rates of the diffusion model.
///
/// `l[i]`, `r[i]` are outflow rates of edge `i` at its tail and head.
/// `l_cross[(i, j)]` is the inflow rate into edge `i` at its tail coming
/// from edge `j`; `r_cross[(i, j)]` the same at the head of `i`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FickRates {
    pub l: Vec<f64>,
    pub r: Vec<f64>,
    pub l_cross: BTreeMap<(usize, usize), f64>,
    pub r_cross: BTreeMap<(usize, usize), f64>,
}

impl FickRates {
    pub fn zero(m: usize) -> Self {
        Self {
            l: vec![0.0; m],
            r: vec![0.0; m],
            ..Self::default()
        }
    }
}

/// Transport network data: flow distribution `w` (n×m), tail and head
/// coefficients `ξ`, `γ`, and edge speeds.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowNetwork {
    pub graph: NetworkGraph,
    pub w: DMatrix<f64>,
    pub xi: Vec<f64>,
    pub gamma: Vec<f64>,
    pub c: Vec<f64>,
}

impl FlowNetwork {
    /// Unit coefficients, unit speeds and an even split of the flow at each
    /// vertex among its outgoing edges.
    pub fn uniform(graph: NetworkGraph) -> Self {
        let (n, m) = (graph.vertex_count(), graph.edge_count());
        let w = DMatrix::from_fn(n, m, |v, e| {
            if graph.tail(e) == v {
                1.0 / graph.out_degree(v) as f64
            } else {
                0.0
            }
        });
        Self {
            graph,
            w,
            xi: vec![1.0; m],
            gamma: vec![1.0; m],
            c: vec![1.0; m],
        }
    }

    /// Checks shapes, positivity of the coefficients, and that at every
    /// vertex with outgoing edges the weights of those edges sum to one.
    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.graph.vertex_count(), self.graph.edge_count());
        if self.w.shape() != (n, m) {
            return Err(Error::InvalidFlow(format!(
                "w has shape {:?}, expected ({n}, {m})",
                self.w.shape()
            )));
        }
        for (name, v) in [("xi", &self.xi), ("gamma", &self.gamma), ("speeds", &self.c)] {
            if v.len() != m {
                return Err(Error::InvalidFlow(format!("{name} has length {}, expected {m}", v.len())));
            }
            if let Some(j) = v.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::InvalidFlow(format!("{name}[{j}] must be positive")));
            }
        }
        for v in 0..n {
            for e in 0..m {
                let x = self.w[(v, e)];
                if !(x >= 0.0 && x.is_finite()) {
                    return Err(Error::InvalidFlow(format!("w[{v}][{e}] = {x} must be nonnegative")));
                }
                if x != 0.0 && self.graph.tail(e) != v {
                    return Err(Error::InvalidFlow(format!(
                        "w[{v}][{e}] is nonzero but edge {e} does not leave vertex {v}"
                    )));
                }
            }
            if self.graph.out_degree(v) > 0 {
                let s: f64 = (0..m).map(|e| self.w[(v, e)]).sum();
                if (s - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(Error::InvalidFlow(format!(
                        "flow weights at vertex {v} sum to {s}, expected 1"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Diffusion boundary coupling `∂ₓu(0) = K⁰⁰u(0) + K⁰¹u(1)`,
/// `∂ₓu(1) = K¹⁰u(0) + K¹¹u(1)` together with the diffusion coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionCoupling {
    pub k00: DMatrix<f64>,
    pub k01: DMatrix<f64>,
    pub k10: DMatrix<f64>,
    pub k11: DMatrix<f64>,
    pub sigma: Vec<f64>,
}

impl DiffusionCoupling {
    pub fn new(
        k00: DMatrix<f64>,
        k01: DMatrix<f64>,
        k10: DMatrix<f64>,
        k11: DMatrix<f64>,
        sigma: Vec<f64>,
    ) -> Result<Self> {
        let m = sigma.len();
        if m == 0 {
            return Err(Error::InvalidCoupling("at least one edge is required".into()));
        }
        for (name, k) in [("k00", &k00), ("k01", &k01), ("k10", &k10), ("k11", &k11)] {
            if k.shape() != (m, m) {
                return Err(Error::InvalidCoupling(format!(
                    "{name} has shape {:?}, expected ({m}, {m})",
                    k.shape()
                )));
            }
            if k.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidCoupling(format!("{name} has non-finite entries")));
            }
        }
        if let Some(j) = sigma.iter().position(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidCoupling(format!("sigma[{j}] must be positive")));
        }
        Ok(Self { k00, k01, k10, k11, sigma })
    }

    /// Pure Neumann coupling (all blocks zero).
    pub fn neumann(sigma: Vec<f64>) -> Self {
        let m = sigma.len();
        let z = DMatrix::zeros(m, m);
        Self {
            k00: z.clone(),
            k01: z.clone(),
            k10: z.clone(),
            k11: z,
            sigma,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.sigma.len()
    }

    /// Block `Kʳˢ` for `r, s ∈ {0, 1}`.
    pub fn block(&self, r: usize, s: usize) -> &DMatrix<f64> {
        match (r, s) {
            (0, 0) => &self.k00,
            (0, 1) => &self.k01,
            (1, 0) => &self.k10,
            (1, 1) => &self.k11,
            _ => panic!("block index ({r}, {s}) out of range"),
        }
    }

    /// The full 2m×2m coupling matrix `[[K⁰⁰, K⁰¹], [K¹⁰, K¹¹]]`.
    pub fn full_matrix(&self) -> DMatrix<f64> {
        let m = self.edge_count();
        let mut k = DMatrix::zeros(2 * m, 2 * m);
        k.view_mut((0, 0), (m, m)).copy_from(&self.k00);
        k.view_mut((0, m), (m, m)).copy_from(&self.k01);
        k.view_mut((m, 0), (m, m)).copy_from(&self.k10);
        k.view_mut((m, m), (m, m)).copy_from(&self.k11);
        k
    }
}

/// Transport boundary coupling `u(0) = Ku(1)` with edge speeds `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportCoupling {
    pub k: DMatrix<f64>,
    pub c: Vec<f64>,
}

impl TransportCoupling {
    pub fn new(k: DMatrix<f64>, c: Vec<f64>) -> Result<Self> {
        let m = c.len();
        if m == 0 {
            return Err(Error::InvalidCoupling("at least one edge is required".into()));
        }
        if k.shape() != (m, m) {
            return Err(Error::InvalidCoupling(format!(
                "k has shape {:?}, expected ({m}, {m})",
                k.shape()
            )));
        }
        if k.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidCoupling("k has non-finite entries".into()));
        }
        if let Some(j) = c.iter().position(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidCoupling(format!("speed c[{j}] must be positive")));
        }
        Ok(Self { k, c })
    }

    pub fn edge_count(&self) -> usize {
        self.c.len()
    }

    /// Same speeds, entrywise modulus of `K`.
    pub fn modulus(&self) -> Self {
        Self {
            k: self.k.abs(),
            c: self.c.clone(),
        }
    }
}

/// Builds the diffusion coupling of a loop-free graph from Fick rates.
///
/// The vertex through which `l_cross[(i, j)]` acts is the tail of edge `i`,
/// and for `r_cross[(i, j)]` it is the head of `i`; whether that vertex is
/// the tail or the head of `j` picks the block.
pub fn build_diffusion_coupling(
    g: &NetworkGraph,
    rates: &FickRates,
    sigma: Vec<f64>,
) -> Result<DiffusionCoupling> {
    let m = g.edge_count();
    if g.has_loops() {
        return Err(Error::InvalidGraph("Fick coupling requires a graph without loops".into()));
    }
    if rates.l.len() != m || rates.r.len() != m {
        return Err(Error::InconsistentRates(format!("l and r must have length {m}")));
    }
    if sigma.len() != m {
        return Err(Error::InvalidCoupling(format!("sigma must have length {m}")));
    }
    let check_rate = |name: &str, x: f64| {
        if x >= 0.0 && x.is_finite() {
            Ok(())
        } else {
            Err(Error::InconsistentRates(format!("{name} = {x} must be nonnegative")))
        }
    };
    let mut k00 = DMatrix::zeros(m, m);
    let mut k01 = DMatrix::zeros(m, m);
    let mut k10 = DMatrix::zeros(m, m);
    let mut k11 = DMatrix::zeros(m, m);
    for i in 0..m {
        check_rate("l", rates.l[i])?;
        check_rate("r", rates.r[i])?;
        k00[(i, i)] = rates.l[i];
        k11[(i, i)] = -rates.r[i];
    }
    for (&(i, j), &rate) in &rates.l_cross {
        check_cross(m, i, j)?;
        check_rate("l_cross", rate)?;
        if rate == 0.0 {
            continue;
        }
        if rates.r_cross.get(&(i, j)).is_some_and(|&x| x != 0.0) {
            return Err(Error::InconsistentRates(format!(
                "both l_cross and r_cross are nonzero for edges ({i}, {j})"
            )));
        }
        let v = g.tail(i);
        if v == g.tail(j) {
            k00[(i, j)] = -rate;
        } else if v == g.head(j) {
            k01[(i, j)] = -rate;
        } else {
            return Err(Error::InconsistentRates(format!(
                "l_cross({i}, {j}): tail of edge {i} is not incident to edge {j}"
            )));
        }
    }
    for (&(i, j), &rate) in &rates.r_cross {
        check_cross(m, i, j)?;
        check_rate("r_cross", rate)?;
        if rate == 0.0 {
            continue;
        }
        let v = g.head(i);
        if v == g.tail(j) {
            k10[(i, j)] = rate;
        } else if v == g.head(j) {
            k11[(i, j)] = rate;
        } else {
            return Err(Error::InconsistentRates(format!(
                "r_cross({i}, {j}): head of edge {i} is not incident to edge {j}"
            )));
        }
    }
    DiffusionCoupling::new(k00, k01, k10, k11, sigma)
}

fn check_cross(m: usize, i: usize, j: usize) -> Result<()> {
    if i >= m || j >= m {
        return Err(Error::InconsistentRates(format!("cross rate ({i}, {j}) out of range")));
    }
    if i == j {
        return Err(Error::InconsistentRates(format!("cross rate ({i}, {i}) on the diagonal")));
    }
    Ok(())
}

/// Vertices with at least one incoming and no outgoing edge.
pub fn detect_sinks(g: &NetworkGraph) -> Vec<usize> {
    (0..g.vertex_count())
        .filter(|&v| g.in_degree(v) > 0 && g.out_degree(v) == 0)
        .collect()
}

/// Builds `K = Ξ⁻¹C⁻¹BΓC` with the line-graph adjacency `B` weighted by
/// the flow distribution: `k[j][k] = w[tail j][j] · [head k = tail j] ·
/// γₖcₖ / (ξⱼcⱼ)`.
pub fn build_transport_coupling(fnet: &FlowNetwork) -> Result<TransportCoupling> {
    fnet.validate()?;
    let sinks = detect_sinks(&fnet.graph);
    if !sinks.is_empty() {
        return Err(Error::SinkPresent(sinks));
    }
    let g = &fnet.graph;
    let m = g.edge_count();
    let k = DMatrix::from_fn(m, m, |j, k| {
        let v = g.tail(j);
        if g.head(k) == v {
            fnet.w[(v, j)] * fnet.gamma[k] * fnet.c[k] / (fnet.xi[j] * fnet.c[j])
        } else {
            0.0
        }
    });
    TransportCoupling::new(k, fnet.c.clone())
}

/// Column sums `κⱼ = Σᵢ kᵢⱼ`.
pub fn kappa_column_sums(tc: &TransportCoupling) -> Vec<f64> {
    tc.k.column_iter().map(|c| c.sum()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservationCheck {
    pub conserved: bool,
    /// `tail[j] = Σᵢ σᵢ(K¹⁰ − K⁰⁰)ᵢⱼ`, the mass flux per unit `uⱼ(0)`.
    pub tail: Vec<f64>,
    /// `head[j] = Σᵢ σᵢ(K¹¹ − K⁰¹)ᵢⱼ`, the mass flux per unit `uⱼ(1)`.
    pub head: Vec<f64>,
}

/// Total mass `Σᵢ∫uᵢ` is conserved by the diffusion flow for all data
/// exactly when both residual vectors vanish.
pub fn check_conservation_condition(dc: &DiffusionCoupling) -> ConservationCheck {
    let m = dc.edge_count();
    let col = |a: &DMatrix<f64>, b: &DMatrix<f64>, j: usize| -> f64 {
        (0..m).map(|i| dc.sigma[i] * (a[(i, j)] - b[(i, j)])).sum()
    };
    let tail: Vec<f64> = (0..m).map(|j| col(&dc.k10, &dc.k00, j)).collect();
    let head: Vec<f64> = (0..m).map(|j| col(&dc.k11, &dc.k01, j)).collect();
    let conserved = tail.iter().chain(&head).all(|x| x.abs() <= CONSERVATION_TOL);
    ConservationCheck { conserved, tail, head }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineGraphMode {
    /// Edge `j → k` when `head(j) = tail(k)`.
    Directed,
    /// Edges adjacent when they share at least one vertex.
    Undirected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineGraph {
    /// Vertices of the line graph are the edges of the original graph.
    pub vertex_count: usize,
    /// Directed edges `(from, to)`; in undirected mode each adjacent pair
    /// appears once with `from < to`.
    pub edges: Vec<(usize, usize)>,
    /// Transposed adjacency: entry `(k, j)` is 1 when `j → k`.
    pub adjacency: DMatrix<f64>,
}

pub fn line_graph(g: &NetworkGraph, mode: LineGraphMode) -> LineGraph {
    let m = g.edge_count();
    let mut adjacency = DMatrix::zeros(m, m);
    let mut edges = Vec::new();
    match mode {
        LineGraphMode::Directed => {
            for j in 0..m {
                for k in 0..m {
                    if g.head(j) == g.tail(k) {
                        adjacency[(k, j)] = 1.0;
                        edges.push((j, k));
                    }
                }
            }
        }
        LineGraphMode::Undirected => {
            for j in 0..m {
                for k in j + 1..m {
                    let ends_j = [g.tail(j), g.head(j)];
                    if ends_j.contains(&g.tail(k)) || ends_j.contains(&g.head(k)) {
                        adjacency[(k, j)] = 1.0;
                        adjacency[(j, k)] = 1.0;
                        edges.push((j, k));
                    }
                }
            }
        }
    }
    LineGraph {
        vertex_count: m,
        edges,
        adjacency,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path2() -> NetworkGraph {
        // e0: 0 -> 1, e1: 1 -> 2
        NetworkGraph::new(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn graph_rejects_isolated_vertex_and_empty() {
        assert!(NetworkGraph::new(3, &[(0, 1)]).is_err());
        assert!(NetworkGraph::new(1, &[]).is_err());
        assert!(NetworkGraph::new(2, &[(0, 2)]).is_err());
    }

    #[test]
    fn fick_two_edges_joined_at_a_vertex() {
        let g = path2();
        let mut rates = FickRates::zero(2);
        rates.r[0] = 1.0;
        rates.l[1] = 0.25;
        rates.l_cross.insert((1, 0), 1.0);
        let dc = build_diffusion_coupling(&g, &rates, vec![1.0, 1.0]).unwrap();
        assert_eq!(dc.k11[(0, 0)], -1.0);
        assert_eq!(dc.k00[(1, 1)], 0.25);
        // shared vertex is the head of edge 0
        assert_eq!(dc.k01[(1, 0)], -1.0);
        assert_eq!(dc.k00[(1, 0)], 0.0);
    }

    #[test]
    fn fick_zero_rates_give_zero_coupling() {
        let dc = build_diffusion_coupling(&path2(), &FickRates::zero(2), vec![1.0; 2]).unwrap();
        assert_eq!(dc, DiffusionCoupling::neumann(vec![1.0; 2]));
    }

    #[test]
    fn fick_single_edge_source_form() {
        let g = NetworkGraph::new(2, &[(0, 1)]).unwrap();
        let rates = FickRates {
            l: vec![0.7],
            r: vec![1.3],
            ..FickRates::default()
        };
        let dc = build_diffusion_coupling(&g, &rates, vec![1.0]).unwrap();
        assert_eq!(dc.k00[(0, 0)], 0.7);
        assert_eq!(dc.k11[(0, 0)], -1.3);
        assert_eq!(dc.k01[(0, 0)], 0.0);
        assert_eq!(dc.k10[(0, 0)], 0.0);
    }

    #[test]
    fn fick_rejects_rates_across_unshared_vertices() {
        // e0: 0 -> 1, e1: 2 -> 3
        let g = NetworkGraph::new(4, &[(0, 1), (2, 3)]).unwrap();
        let mut rates = FickRates::zero(2);
        rates.r_cross.insert((0, 1), 0.5);
        assert!(matches!(
            build_diffusion_coupling(&g, &rates, vec![1.0; 2]),
            Err(Error::InconsistentRates(_))
        ));
    }

    #[test]
    fn fick_rejects_both_cross_rates_and_loops() {
        // antiparallel edges share both endpoints
        let g = NetworkGraph::new(2, &[(0, 1), (1, 0)]).unwrap();
        let mut rates = FickRates::zero(2);
        rates.l_cross.insert((0, 1), 0.5);
        rates.r_cross.insert((0, 1), 0.5);
        assert!(matches!(
            build_diffusion_coupling(&g, &rates, vec![1.0; 2]),
            Err(Error::InconsistentRates(_))
        ));
        let looped = NetworkGraph::new(1, &[(0, 0)]).unwrap();
        assert!(build_diffusion_coupling(&looped, &FickRates::zero(1), vec![1.0]).is_err());
    }

    #[test]
    fn transport_single_loop() {
        let g = NetworkGraph::new(1, &[(0, 0)]).unwrap();
        let tc = build_transport_coupling(&FlowNetwork::uniform(g)).unwrap();
        assert_eq!(tc.k, DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn transport_two_cycle_with_speeds() {
        let g = NetworkGraph::new(2, &[(0, 1), (1, 0)]).unwrap();
        let mut fnet = FlowNetwork::uniform(g);
        fnet.c = vec![1.0, 2.0];
        let tc = build_transport_coupling(&fnet).unwrap();
        assert_eq!(tc.k, DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.5, 0.0]));
        assert_eq!(kappa_column_sums(&tc), vec![0.5, 2.0]);
    }

    #[test]
    fn transport_split_at_vertex() {
        // e0: 0 -> 1, e1: 1 -> 0, e2: 1 -> 0
        let g = NetworkGraph::new(2, &[(0, 1), (1, 0), (1, 0)]).unwrap();
        let mut fnet = FlowNetwork::uniform(g);
        fnet.w[(1, 1)] = 0.3;
        fnet.w[(1, 2)] = 0.7;
        let tc = build_transport_coupling(&fnet).unwrap();
        assert!((tc.k[(1, 0)] - 0.3).abs() < 1e-15);
        assert!((tc.k[(2, 0)] - 0.7).abs() < 1e-15);
        assert!((kappa_column_sums(&tc)[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn transport_rejects_sinks_and_bad_weights() {
        let g = NetworkGraph::new(2, &[(0, 1)]).unwrap();
        assert_eq!(detect_sinks(&g), vec![1]);
        assert_eq!(
            build_transport_coupling(&FlowNetwork::uniform(g)),
            Err(Error::SinkPresent(vec![1]))
        );
        let g = NetworkGraph::new(2, &[(0, 1), (1, 0), (1, 0)]).unwrap();
        let mut fnet = FlowNetwork::uniform(g);
        fnet.w[(1, 1)] = 0.6;
        assert!(matches!(fnet.validate(), Err(Error::InvalidFlow(_))));
        fnet.w[(1, 1)] = 0.5;
        fnet.w[(0, 1)] = 0.1;
        assert!(matches!(fnet.validate(), Err(Error::InvalidFlow(_))));
    }

    #[test]
    fn sinks() {
        assert!(detect_sinks(&NetworkGraph::new(1, &[(0, 0)]).unwrap()).is_empty());
        assert!(detect_sinks(&NetworkGraph::new(3, &[(0, 1), (1, 2), (2, 0)]).unwrap()).is_empty());
    }

    #[test]
    fn kappa_examples() {
        let tc = TransportCoupling::new(DMatrix::from_element(1, 1, 1.0), vec![1.0]).unwrap();
        assert_eq!(kappa_column_sums(&tc), vec![1.0]);
    }

    #[test]
    fn conservation_examples() {
        assert!(check_conservation_condition(&DiffusionCoupling::neumann(vec![1.0; 3])).conserved);
        let mut dc = DiffusionCoupling::neumann(vec![1.0]);
        dc.k00[(0, 0)] = 0.4;
        let chk = check_conservation_condition(&dc);
        assert!(!chk.conserved);
        assert_eq!(chk.tail, vec![-0.4]);
        assert_eq!(chk.head, vec![0.0]);
    }

    #[test]
    fn fick_couplings_with_symmetric_exchange_conserve_mass() {
        // e0: 0 -> 1, e1: 1 -> 2; exchange across vertex 1 at equal rates
        // and no outflow to the outside world.
        let g = path2();
        let mut rates = FickRates::zero(2);
        rates.r[0] = 0.8;
        rates.l[1] = 0.8;
        rates.r_cross.insert((0, 1), 0.8);
        rates.l_cross.insert((1, 0), 0.8);
        let dc = build_diffusion_coupling(&g, &rates, vec![1.0, 1.0]).unwrap();
        assert!(check_conservation_condition(&dc).conserved);
    }

    #[test]
    fn line_graph_examples() {
        let lg = line_graph(&NetworkGraph::new(1, &[(0, 0)]).unwrap(), LineGraphMode::Directed);
        assert_eq!(lg.adjacency, DMatrix::from_element(1, 1, 1.0));
        let lg = line_graph(
            &NetworkGraph::new(2, &[(0, 1), (1, 0)]).unwrap(),
            LineGraphMode::Directed,
        );
        assert_eq!(lg.adjacency, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let g = NetworkGraph::new(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let lg = line_graph(&g, LineGraphMode::Directed);
        let nonzero: Vec<_> = (0..3)
            .flat_map(|r| (0..3).map(move |c| (r, c)))
            .filter(|&(r, c)| lg.adjacency[(r, c)] != 0.0)
            .collect();
        assert_eq!(nonzero, vec![(1, 0), (2, 1)]);
        let lg = line_graph(&g, LineGraphMode::Undirected);
        assert_eq!(lg.edges, vec![(0, 1), (1, 2)]);
        assert_eq!(lg.adjacency, lg.adjacency.transpose());
    }
}
