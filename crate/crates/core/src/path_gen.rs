//! Probabilistic roadmap and the diverse candidate-path set.
//!
//! Candidates come from repeated breadth-first search: after each path is
//! found, one interior vertex of it is removed from the roadmap and the
//! search is run again. Removals accumulate, so later paths avoid every
//! vertex removed before them.

use std::collections::VecDeque;

use log::warn;
use nalgebra::Vector2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PlanError, Result};
use crate::sim_world::stream_rng;

/// Stream id reserved for roadmap sampling.
const PRM_STREAM: u64 = 0xfffe;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            min: [0.0, 0.0],
            max: [5.0, 5.0],
        }
    }
}

impl Bounds {
    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        (0..2).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn diagonal(&self) -> f64 {
        Vector2::new(self.max[0] - self.min[0], self.max[1] - self.min[1]).norm()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector2<f64> {
        Vector2::new(
            rng.random_range(self.min[0]..=self.max[0]),
            rng.random_range(self.min[1]..=self.max[1]),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

/// Undirected roadmap. Vertex 0 is the start and vertex 1 the goal.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadMap {
    pub vertices: Vec<Vector2<f64>>,
    pub edges: Vec<Edge>,
    adjacency: Vec<Vec<usize>>,
}

pub const START: usize = 0;
pub const GOAL: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrmParams {
    pub n_vertices: usize,
    pub connect_radius: f64,
    pub max_attempts: usize,
}

impl Default for PrmParams {
    fn default() -> Self {
        Self {
            n_vertices: 80,
            connect_radius: 1.1,
            max_attempts: 50,
        }
    }
}

impl RoadMap {
    /// Connects every pair of vertices no farther apart than `radius`.
    pub fn from_vertices(vertices: Vec<Vector2<f64>>, radius: f64) -> Self {
        let n = vertices.len();
        let mut edges = Vec::new();
        let mut adjacency = vec![Vec::new(); n];
        for a in 0..n {
            for b in (a + 1)..n {
                let length = (vertices[a] - vertices[b]).norm();
                if length <= radius && length > 0.0 {
                    edges.push(Edge { a, b, length });
                    adjacency[a].push(b);
                    adjacency[b].push(a);
                }
            }
        }
        Self {
            vertices,
            edges,
            adjacency,
        }
    }

    /// Roadmap over explicit vertices and edges; edge endpoints must be
    /// distinct, in range, and not coincident.
    pub fn from_edges(vertices: Vec<Vector2<f64>>, pairs: &[(usize, usize)]) -> Result<Self> {
        let n = vertices.len();
        let mut edges = Vec::new();
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in pairs {
            if a >= n || b >= n || a == b {
                return Err(PlanError::InvalidArgument(format!("bad roadmap edge ({a}, {b})")));
            }
            let length = (vertices[a] - vertices[b]).norm();
            if length <= 0.0 {
                return Err(PlanError::InvalidArgument(format!("zero-length roadmap edge ({a}, {b})")));
            }
            edges.push(Edge { a, b, length });
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        Ok(Self {
            vertices,
            edges,
            adjacency,
        })
    }

    /// Joins `v` to its nearest sampled vertex (not start or goal) if it
    /// has no edge yet.
    fn link_if_isolated(&mut self, v: usize) {
        if !self.adjacency[v].is_empty() {
            return;
        }
        let p = self.vertices[v];
        let Some((u, length)) = (GOAL + 1..self.vertices.len())
            .map(|u| (u, (self.vertices[u] - p).norm()))
            .filter(|(_, d)| *d > 0.0)
            .min_by(|x, y| x.1.total_cmp(&y.1))
        else {
            return;
        };
        self.edges.push(Edge {
            a: v.min(u),
            b: v.max(u),
            length,
        });
        for (x, y) in [(v, u), (u, v)] {
            let adj = &mut self.adjacency[x];
            let at = adj.partition_point(|w| *w < y);
            adj.insert(at, y);
        }
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Fewest-hop path, exploring neighbours in ascending id so ties go to
    /// lower ids. Vertices flagged in `removed` are skipped.
    pub fn bfs(&self, start: usize, goal: usize, removed: &[bool]) -> Option<Vec<usize>> {
        let n = self.vertices.len();
        if removed[start] || removed[goal] {
            return None;
        }
        let mut parent = vec![usize::MAX; n];
        parent[start] = start;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            if v == goal {
                let mut path = vec![goal];
                let mut cur = goal;
                while cur != start {
                    cur = parent[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for &w in &self.adjacency[v] {
                if !removed[w] && parent[w] == usize::MAX {
                    parent[w] = v;
                    queue.push_back(w);
                }
            }
        }
        None
    }

    pub fn nearest_vertex(&self, p: &Vector2<f64>) -> usize {
        let mut best = 0;
        for (i, v) in self.vertices.iter().enumerate() {
            if (v - p).norm() < (self.vertices[best] - p).norm() {
                best = i;
            }
        }
        best
    }
}

/// Samples a roadmap with `start` and `goal` as vertices 0 and 1 and
/// `n_vertices - 2` uniform vertices, regenerating until the two are
/// connected. An isolated start or goal is joined to its nearest sampled
/// vertex.
pub fn build_prm(
    bounds: &Bounds,
    params: &PrmParams,
    seed: u64,
    start: Vector2<f64>,
    goal: Vector2<f64>,
) -> Result<RoadMap> {
    if params.n_vertices < 2 {
        return Err(PlanError::InvalidArgument("roadmap needs at least 2 vertices".into()));
    }
    if !(params.connect_radius > 0.0) {
        return Err(PlanError::InvalidArgument("connect radius must be positive".into()));
    }
    for attempt in 0..params.max_attempts.max(1) {
        let mut rng = stream_rng(seed, PRM_STREAM, attempt as u64);
        let mut vertices = vec![start, goal];
        vertices.extend((2..params.n_vertices).map(|_| bounds.sample(&mut rng)));
        let mut map = RoadMap::from_vertices(vertices, params.connect_radius);
        // The robot may start outside the sampled region.
        map.link_if_isolated(START);
        map.link_if_isolated(GOAL);
        let removed = vec![false; map.vertices.len()];
        if map.bfs(START, GOAL, &removed).is_some() {
            return Ok(map);
        }
    }
    Err(PlanError::Disconnected {
        attempts: params.max_attempts.max(1),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePath {
    pub id: usize,
    pub vertex_seq: Vec<usize>,
    pub waypoints: Vec<Vector2<f64>>,
    pub actions: Vec<Vector2<f64>>,
}

impl CandidatePath {
    pub fn from_vertices(id: usize, map: &RoadMap, vertex_seq: Vec<usize>) -> Self {
        let waypoints: Vec<Vector2<f64>> = vertex_seq.iter().map(|v| map.vertices[*v]).collect();
        let actions = waypoints.windows(2).map(|w| w[1] - w[0]).collect();
        Self {
            id,
            vertex_seq,
            waypoints,
            actions,
        }
    }

    /// Candidate made directly from an action list, starting at `origin`.
    pub fn from_actions(id: usize, origin: Vector2<f64>, actions: Vec<Vector2<f64>>) -> Self {
        let mut waypoints = vec![origin];
        for a in &actions {
            let last = *waypoints.last().unwrap();
            waypoints.push(last + a);
        }
        Self {
            id,
            vertex_seq: Vec::new(),
            waypoints,
            actions,
        }
    }

    pub fn horizon(&self) -> usize {
        self.actions.len()
    }

    pub fn length(&self) -> f64 {
        self.actions.iter().map(|a| a.norm()).sum()
    }
}

/// Up to `count` distinct start-goal paths, ids from 1.
pub fn diverse_paths(map: &RoadMap, start: usize, goal: usize, count: usize) -> Result<Vec<CandidatePath>> {
    if count == 0 {
        return Err(PlanError::InvalidArgument("path count must be at least 1".into()));
    }
    let mut removed = vec![false; map.vertices.len()];
    let first = map.bfs(start, goal, &removed).ok_or(PlanError::Disconnected { attempts: 1 })?;
    let mut seqs = vec![first];
    while seqs.len() < count {
        let prev = seqs.last().unwrap();
        let mut next = None;
        // Middle vertex first, then alternate outwards.
        let mid = prev.len() / 2;
        for k in 0..2 * prev.len() {
            let offset = k.div_ceil(2) as isize * if k % 2 == 1 { -1 } else { 1 };
            let idx = mid as isize + offset;
            if idx < 1 || idx as usize >= prev.len() - 1 {
                continue;
            }
            let v = prev[idx as usize];
            removed[v] = true;
            match map.bfs(start, goal, &removed) {
                Some(p) if !seqs.contains(&p) => {
                    next = Some(p);
                    break;
                }
                _ => removed[v] = false,
            }
        }
        match next {
            Some(p) => seqs.push(p),
            None => {
                warn!("found only {} of {count} diverse paths", seqs.len());
                break;
            }
        }
    }
    Ok(seqs
        .into_iter()
        .enumerate()
        .map(|(i, s)| CandidatePath::from_vertices(i + 1, map, s))
        .collect())
}
