//! Simple undirected graphs with stable edge numbering, and the Barabási–Albert generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SnmError};

/// An undirected simple graph. Edges are numbered `0..d` in insertion order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    // per vertex: (neighbor, edge id), in edge insertion order
    adjacency: Vec<Vec<(usize, usize)>>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphJson> for Graph {
    type Error = SnmError;
    fn try_from(g: GraphJson) -> Result<Self> {
        Graph::new(g.n, g.edges.into_iter().map(|[u, v]| (u, v)))
    }
}

impl From<Graph> for GraphJson {
    fn from(g: Graph) -> Self {
        GraphJson {
            n: g.n,
            edges: g.edges.iter().map(|&(u, v)| [u, v]).collect(),
        }
    }
}

impl Graph {
    /// Builds a graph, rejecting self-loops, duplicate edges and out-of-range endpoints.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Graph {
            n,
            edges: Vec::new(),
            adjacency: vec![Vec::new(); n],
        };
        for (u, v) in edges {
            g.push_edge(u, v)?;
        }
        Ok(g)
    }

    fn push_edge(&mut self, u: usize, v: usize) -> Result<()> {
        if u >= self.n || v >= self.n {
            return Err(invalid(format!("edge ({u}, {v}) references a vertex >= {}", self.n)));
        }
        if u == v {
            return Err(invalid(format!("self-loop at vertex {u}")));
        }
        if self.has_edge(u, v) {
            return Err(invalid(format!("duplicate edge ({u}, {v})")));
        }
        let id = self.edges.len();
        self.edges.push((u, v));
        self.adjacency[u].push((v, id));
        self.adjacency[v].push((u, id));
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let (a, b) = if self.adjacency[u].len() <= self.adjacency[v].len() {
            (u, v)
        } else {
            (v, u)
        };
        self.adjacency[a].iter().any(|&(w, _)| w == b)
    }

    /// Sorted ids of the edges incident to `v`.
    pub fn incident_edges(&self, v: usize) -> Vec<usize> {
        let mut ids: Vec<usize> = self.adjacency[v].iter().map(|&(_, e)| e).collect();
        ids.sort_unstable();
        ids
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[v].iter().map(|&(w, _)| w)
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        Graph::new(n, edges).expect("complete graph is simple")
    }

    pub fn path(n: usize) -> Self {
        Graph::new(n, (1..n).map(|v| (v - 1, v))).expect("path graph is simple")
    }
}

/// Parameters of the preferential-attachment generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BarabasiAlbert {
    /// Final vertex count.
    pub n: usize,
    /// Edges added by each arriving vertex.
    pub attach: usize,
    /// Size of the complete seed graph; `attach + 1` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core: Option<usize>,
    pub seed: u64,
}

impl BarabasiAlbert {
    pub fn new(n: usize, attach: usize, seed: u64) -> Self {
        Self { n, attach, core: None, seed }
    }

    pub fn with_core(mut self, core: usize) -> Self {
        self.core = Some(core);
        self
    }

    pub fn core_size(&self) -> usize {
        self.core.unwrap_or(self.attach + 1)
    }

    /// Edge count the generator will produce: `C(core, 2) + (n - core) * attach`.
    pub fn expected_edges(&self) -> usize {
        let c = self.core_size();
        c * (c - 1) / 2 + (self.n - c) * self.attach
    }

    /// Grows the graph from a complete seed graph. Each new vertex picks `attach`
    /// distinct targets with probability proportional to current degree; a target
    /// already chosen in the same step is rejected and redrawn.
    pub fn generate(&self) -> Result<Graph> {
        let core = self.core_size();
        if self.attach == 0 {
            return Err(invalid("attach must be >= 1"));
        }
        if core <= self.attach {
            return Err(invalid(format!(
                "seed graph of {core} vertices cannot supply {} distinct targets",
                self.attach
            )));
        }
        if self.n < core {
            return Err(invalid(format!(
                "n = {} is smaller than the seed graph ({core} vertices)",
                self.n
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut g = Graph::complete(core);
        g.n = self.n;
        g.adjacency.resize(self.n, Vec::new());
        // every edge contributes both endpoints; uniform draws from this list are degree-proportional
        let mut endpoints: Vec<usize> = g.edges.iter().flat_map(|&(u, v)| [u, v]).collect();
        for v in core..self.n {
            let mut targets: Vec<usize> = Vec::with_capacity(self.attach);
            while targets.len() < self.attach {
                let t = endpoints[rng.random_range(0..endpoints.len())];
                if !targets.contains(&t) {
                    targets.push(t);
                }
            }
            for &t in &targets {
                g.push_edge(t, v)?;
                endpoints.push(t);
                endpoints.push(v);
            }
        }
        Ok(g)
    }
}
