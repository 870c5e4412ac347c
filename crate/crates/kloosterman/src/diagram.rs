//! Diagrams attached to admissible Weyl elements: the vertex grid I_w split
//! into two-block components, directed numbered edges with dotted edges
//! between components, and minimal-path enumeration with vertex
//! classification.
//!
//! Between two components the topmost dotted edge has no target vertex (its
//! target row would exceed the next component's height); such an edge
//! carries a missing-endpoint tag and the absent factor counts as one. The
//! final dotted edge out of the rightmost component has no target either.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::weyl::{EndpointRule, Vertex, WeylElement};

/// One two-block component of the diagram. Component `level` holds the
/// vertices of I_level; components are laid out left to right by decreasing
/// level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagramBlock {
    /// The level q with vertex set I_q.
    pub level: usize,
    /// Height κ_q: rows 1..=κ_q.
    pub height: u32,
    /// Column range κ_q ..= κ_{q+1}−1.
    pub col_lo: u32,
    pub col_hi: u32,
    /// 0 for the leftmost component (largest level).
    pub layout: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Horizontal,
    Vertical,
    /// The extra edge into the corner (κ_q, κ_q) of a component.
    Entry,
    Dotted,
}

/// A directed numbered edge. `src` is absent only for entry edges, `dst`
/// only for dotted edges without a target vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub src: Option<Vertex>,
    pub dst: Option<Vertex>,
    pub number: u32,
    pub kind: EdgeKind,
    /// Layout position of the component the edge belongs to.
    pub layout: usize,
}

impl Edge {
    pub fn is_dotted(&self) -> bool {
        self.kind == EdgeKind::Dotted
    }
}

/// E_i (plain) and E'_i (dotted) in their summation order.
#[derive(Debug, Clone)]
pub struct EdgeSets {
    /// Plain edges by number, ordered left component first, then top to
    /// bottom and left to right.
    pub plain: BTreeMap<u32, Vec<Edge>>,
    /// Dotted edges by number, ordered from bottom to top.
    pub dotted: BTreeMap<u32, Vec<Edge>>,
}

/// Classification of a path vertex by the directions of its two adjacent
/// edges (the position of the neighbor relative to the vertex).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexClass {
    /// right + down
    Rd,
    /// left + up
    Lu,
    /// left + down
    Ld,
    /// right + up
    Ru,
    /// left + right
    Lr,
    /// down + up
    Du,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Dir {
    Left,
    Right,
    Up,
    Down,
}

fn classify(a: Dir, b: Dir) -> VertexClass {
    use Dir::*;
    let pair = if a <= b { (a, b) } else { (b, a) };
    match pair {
        (Right, Down) => VertexClass::Rd,
        (Left, Up) => VertexClass::Lu,
        (Left, Down) => VertexClass::Ld,
        (Right, Up) => VertexClass::Ru,
        (Left, Right) => VertexClass::Lr,
        (Up, Down) => VertexClass::Du,
        other => panic!("impossible adjacent edge directions {other:?}"),
    }
}

/// A minimal (monotone) path with per-vertex classification.
#[derive(Debug, Clone)]
pub struct MinimalPath {
    pub vertices: Vec<Vertex>,
    pub classes: Vec<VertexClass>,
}

/// The modified diagram of an admissible Weyl element with ≥ 2 blocks.
#[derive(Debug, Clone)]
pub struct Diagram {
    blocks: Vec<DiagramBlock>,
    plain: Vec<Edge>,
    dotted: Vec<Edge>,
}

/// Builds the directed numbered diagram of `w`.
pub fn build_diagram(w: &WeylElement) -> Result<Diagram> {
    let n_blocks = w.composition().n_blocks();
    if n_blocks < 2 {
        return Err(Error::SingleBlock);
    }
    let dim = w.dimension();
    let mut blocks = Vec::new();
    let mut plain = Vec::new();
    let mut dotted = Vec::new();
    for q in (1..n_blocks).rev() {
        let layout = n_blocks - 1 - q;
        let height = w.composition().kappa(q);
        let col_lo = height;
        let col_hi = w.composition().kappa(q + 1) - 1;
        blocks.push(DiagramBlock {
            level: q,
            height,
            col_lo,
            col_hi,
            layout,
        });
        for i in 1..=height {
            for j in col_lo..col_hi {
                plain.push(Edge {
                    src: Some(Vertex::new(i, j)),
                    dst: Some(Vertex::new(i, j + 1)),
                    number: j + 1,
                    kind: EdgeKind::Horizontal,
                    layout,
                });
            }
        }
        for i in 2..=height {
            for j in col_lo..=col_hi {
                plain.push(Edge {
                    src: Some(Vertex::new(i, j)),
                    dst: Some(Vertex::new(i - 1, j)),
                    number: i - 1,
                    kind: EdgeKind::Vertical,
                    layout,
                });
            }
        }
        plain.push(Edge {
            src: None,
            dst: Some(Vertex::new(height, height)),
            number: height,
            kind: EdgeKind::Entry,
            layout,
        });
        let number = dim - height;
        if q >= 2 {
            let prev_height = w.composition().kappa(q - 1);
            for i in 1..=(prev_height + 1) {
                let dst = if i <= prev_height {
                    Some(Vertex::new(i, prev_height))
                } else {
                    None
                };
                dotted.push(Edge {
                    src: Some(Vertex::new(i, col_hi)),
                    dst,
                    number,
                    kind: EdgeKind::Dotted,
                    layout,
                });
            }
        } else {
            dotted.push(Edge {
                src: Some(Vertex::new(1, col_hi)),
                dst: None,
                number,
                kind: EdgeKind::Dotted,
                layout,
            });
        }
    }
    Ok(Diagram {
        blocks,
        plain,
        dotted,
    })
}

impl Diagram {
    pub fn blocks(&self) -> &[DiagramBlock] {
        &self.blocks
    }

    pub fn vertex_count(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| (b.height * (b.col_hi - b.col_lo + 1)) as usize)
            .sum()
    }

    pub fn plain_edges(&self) -> &[Edge] {
        &self.plain
    }

    pub fn dotted_edges(&self) -> &[Edge] {
        &self.dotted
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.block_of(v).is_some()
    }

    pub fn block_of(&self, v: Vertex) -> Option<&DiagramBlock> {
        self.blocks
            .iter()
            .find(|b| v.i >= 1 && v.i <= b.height && v.j >= b.col_lo && v.j <= b.col_hi)
    }

    /// The numbered edge sets in their summation order.
    pub fn edge_sets(&self) -> EdgeSets {
        let mut plain: BTreeMap<u32, Vec<Edge>> = BTreeMap::new();
        for e in &self.plain {
            plain.entry(e.number).or_default().push(e.clone());
        }
        for edges in plain.values_mut() {
            edges.sort_by_key(|e| {
                // the entry edge comes from above the corner
                let (row, col) = match (e.kind, e.src) {
                    (EdgeKind::Entry, _) => {
                        let d = e.dst.unwrap();
                        (d.i + 1, d.j)
                    }
                    (_, Some(s)) => (s.i, s.j),
                    _ => unreachable!("plain edges have a source"),
                };
                (e.layout, std::cmp::Reverse(row), col)
            });
        }
        let mut dotted: BTreeMap<u32, Vec<Edge>> = BTreeMap::new();
        for e in &self.dotted {
            dotted.entry(e.number).or_default().push(e.clone());
        }
        for edges in dotted.values_mut() {
            edges.sort_by_key(|e| e.src.unwrap().i); // bottom to top
        }
        EdgeSets { plain, dotted }
    }

    /// All minimal monotone paths from `from` to `to` within one component,
    /// classified under the endpoint rule. Empty when no monotone path
    /// exists.
    pub fn minimal_paths(
        &self,
        from: Vertex,
        to: Vertex,
        rule: EndpointRule,
    ) -> Result<Vec<MinimalPath>> {
        let bf = self
            .block_of(from)
            .ok_or(Error::UnknownVertex { i: from.i, j: from.j })?;
        let bt = self
            .block_of(to)
            .ok_or(Error::UnknownVertex { i: to.i, j: to.j })?;
        if bf.level != bt.level {
            return Err(Error::DifferentBlocks);
        }
        if to.i < from.i {
            return Ok(Vec::new());
        }
        let (first_dir, last_dir) = match rule {
            EndpointRule::X => (Dir::Down, Dir::Right),
            EndpointRule::Y => (Dir::Left, Dir::Right),
            EndpointRule::Z => (Dir::Down, Dir::Left),
            EndpointRule::W => (Dir::Down, Dir::Up),
        };
        let col_step: i64 = if to.j >= from.j { 1 } else { -1 };
        let mut paths = Vec::new();
        let mut current = vec![from];
        enumerate(to, col_step, &mut current, &mut |vertices: &[Vertex]| {
            let mut classes = Vec::with_capacity(vertices.len());
            for (idx, &v) in vertices.iter().enumerate() {
                let din = if idx == 0 {
                    first_dir
                } else {
                    dir_toward(v, vertices[idx - 1])
                };
                let dout = if idx + 1 == vertices.len() {
                    last_dir
                } else {
                    dir_toward(v, vertices[idx + 1])
                };
                classes.push(classify(din, dout));
            }
            paths.push(MinimalPath {
                vertices: vertices.to_vec(),
                classes,
            });
        });
        Ok(paths)
    }

    /// DOT rendering of the modified diagram: vertex labels "i,j", edge
    /// labels the numbers, dotted style for the dotted edges.
    pub fn to_dot(&self) -> String {
        let mut out =
            String::from("digraph diagram {\n  rankdir=TB;\n  node [shape=plaintext];\n");
        let vid = |v: Vertex| format!("v{}_{}", v.i, v.j);
        for b in &self.blocks {
            for i in 1..=b.height {
                for j in b.col_lo..=b.col_hi {
                    let v = Vertex::new(i, j);
                    out.push_str(&format!("  {} [label=\"{},{}\"];\n", vid(v), v.i, v.j));
                }
            }
        }
        let mut anon = 0usize;
        let mut body = String::new();
        for e in self.plain.iter().chain(self.dotted.iter()) {
            let mut endpoint = |v: Option<Vertex>, body: &mut String| match v {
                Some(v) => vid(v),
                None => {
                    anon += 1;
                    let id = format!("x{anon}");
                    body.push_str(&format!("  {id} [shape=point, style=invis];\n"));
                    id
                }
            };
            let s = endpoint(e.src, &mut body);
            let d = endpoint(e.dst, &mut body);
            let style = if e.is_dotted() { ", style=dotted" } else { "" };
            body.push_str(&format!("  {s} -> {d} [label=\"{}\"{style}];\n", e.number));
        }
        out.push_str(&body);
        out.push_str("}\n");
        out
    }
}

fn dir_toward(from: Vertex, to: Vertex) -> Dir {
    if to.i == from.i + 1 {
        Dir::Up
    } else if to.i + 1 == from.i {
        Dir::Down
    } else if to.j == from.j + 1 {
        Dir::Right
    } else if to.j + 1 == from.j {
        Dir::Left
    } else {
        panic!("vertices are not adjacent: {from} {to}");
    }
}

fn enumerate(
    to: Vertex,
    col_step: i64,
    current: &mut Vec<Vertex>,
    emit: &mut impl FnMut(&[Vertex]),
) {
    let v = *current.last().unwrap();
    if v == to {
        emit(current);
        return;
    }
    if v.i < to.i {
        current.push(Vertex::new(v.i + 1, v.j));
        enumerate(to, col_step, current, emit);
        current.pop();
    }
    if v.j != to.j {
        let nj = (v.j as i64 + col_step) as u32;
        current.push(Vertex::new(v.i, nj));
        enumerate(to, col_step, current, emit);
        current.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weyl::make_admissible;

    fn v(i: u32, j: u32) -> Vertex {
        Vertex::new(i, j)
    }

    #[test]
    fn gl2_diagram() {
        let w = make_admissible(&[1, 1]).unwrap();
        let d = build_diagram(&w).unwrap();
        assert_eq!(d.vertex_count(), 1);
        let sets = d.edge_sets();
        assert_eq!(sets.plain[&1].len(), 1);
        assert_eq!(sets.plain[&1][0].kind, EdgeKind::Entry);
        assert_eq!(sets.dotted[&1].len(), 1);
        assert_eq!(sets.dotted[&1][0].src, Some(v(1, 1)));
        assert_eq!(sets.dotted[&1][0].dst, None);
    }

    #[test]
    fn single_block_rejected() {
        let w = make_admissible(&[3]).unwrap();
        assert_eq!(build_diagram(&w).unwrap_err(), Error::SingleBlock);
    }

    #[test]
    fn w0_diagram_edges() {
        let w = make_admissible(&[2, 3]).unwrap();
        let d = build_diagram(&w).unwrap();
        assert_eq!(d.vertex_count(), 6);
        let sets = d.edge_sets();
        // E_3: horizontal edges into column 3, top row first
        let e3: Vec<_> = sets.plain[&3]
            .iter()
            .map(|e| (e.src.unwrap(), e.dst.unwrap()))
            .collect();
        assert_eq!(e3, vec![(v(2, 2), v(2, 3)), (v(1, 2), v(1, 3))]);
        // E_1: three downward edges, left to right
        let e1: Vec<_> = sets.plain[&1]
            .iter()
            .map(|e| (e.src.unwrap(), e.dst.unwrap()))
            .collect();
        assert_eq!(
            e1,
            vec![(v(2, 2), v(1, 2)), (v(2, 3), v(1, 3)), (v(2, 4), v(1, 4))]
        );
        // entry edge numbered 2
        assert_eq!(sets.plain[&2].len(), 1);
        assert_eq!(sets.plain[&2][0].kind, EdgeKind::Entry);
        assert_eq!(sets.plain[&2][0].dst, Some(v(2, 2)));
        // E_4 and the dotted edge numbered 3
        let e4: Vec<_> = sets.plain[&4]
            .iter()
            .map(|e| (e.src.unwrap(), e.dst.unwrap()))
            .collect();
        assert_eq!(e4, vec![(v(2, 3), v(2, 4)), (v(1, 3), v(1, 4))]);
        assert_eq!(sets.dotted.len(), 1);
        assert_eq!(sets.dotted[&3][0].src, Some(v(1, 4)));
        assert_eq!(sets.dotted[&3][0].dst, None);
    }

    #[test]
    fn w2_diagram_blocks_and_dotted() {
        let w = make_admissible(&[2, 2, 2]).unwrap();
        let d = build_diagram(&w).unwrap();
        assert_eq!(d.vertex_count(), 12);
        assert_eq!(d.blocks().len(), 2);
        // leftmost component is level 2 with columns 4..5 and height 4
        assert_eq!(d.blocks()[0].level, 2);
        assert_eq!(d.blocks()[0].height, 4);
        assert_eq!((d.blocks()[0].col_lo, d.blocks()[0].col_hi), (4, 5));
        assert_eq!(d.blocks()[1].level, 1);
        let sets = d.edge_sets();
        // dotted edges numbered 2 between the components, bottom to top
        let e2: Vec<_> = sets.dotted[&2]
            .iter()
            .map(|e| (e.src.unwrap(), e.dst))
            .collect();
        assert_eq!(
            e2,
            vec![
                (v(1, 5), Some(v(1, 2))),
                (v(2, 5), Some(v(2, 2))),
                (v(3, 5), None),
            ]
        );
        // final dotted edge numbered 4
        assert_eq!(sets.dotted[&4].len(), 1);
        assert_eq!(sets.dotted[&4][0].src, Some(v(1, 3)));
        assert_eq!(sets.dotted[&4][0].dst, None);
        // entry edges numbered 4 (left component) and 2 (right component)
        assert!(sets.plain[&4]
            .iter()
            .any(|e| e.kind == EdgeKind::Entry && e.dst == Some(v(4, 4))));
        assert!(sets.plain[&2]
            .iter()
            .any(|e| e.kind == EdgeKind::Entry && e.dst == Some(v(2, 2))));
    }

    #[test]
    fn plain_edge_count_two_block() {
        for (k, rest) in [(1u32, 1u32), (2, 3), (3, 2), (1, 4), (4, 1), (2, 2)] {
            let w = make_admissible(&[k, rest]).unwrap();
            let d = build_diagram(&w).unwrap();
            let n = k + rest - 1; // diagram of w_{k, n+1-k} in GL_{n+1}
            let grid_edges = d
                .plain_edges()
                .iter()
                .filter(|e| e.kind != EdgeKind::Entry)
                .count() as u32;
            assert_eq!(grid_edges, k * (n - k) + (k - 1) * (n + 1 - k));
        }
    }

    #[test]
    fn w0_paths_y_rule() {
        let w = make_admissible(&[2, 3]).unwrap();
        let d = build_diagram(&w).unwrap();
        let paths = d.minimal_paths(v(1, 2), v(2, 4), EndpointRule::Y).unwrap();
        assert_eq!(paths.len(), 3);
        for p in &paths {
            assert_eq!(p.vertices.len(), 4);
            assert_eq!(p.vertices[0], v(1, 2));
            assert_eq!(p.vertices[3], v(2, 4));
        }
    }

    #[test]
    fn w0_paths_z_rule_single() {
        let w = make_admissible(&[2, 3]).unwrap();
        let d = build_diagram(&w).unwrap();
        let paths = d.minimal_paths(v(1, 2), v(2, 2), EndpointRule::Z).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].classes, vec![VertexClass::Du, VertexClass::Ld]);
    }

    #[test]
    fn single_vertex_path() {
        let w = make_admissible(&[2, 3]).unwrap();
        let d = build_diagram(&w).unwrap();
        for rule in [
            EndpointRule::X,
            EndpointRule::Y,
            EndpointRule::Z,
            EndpointRule::W,
        ] {
            let paths = d.minimal_paths(v(1, 3), v(1, 3), rule).unwrap();
            assert_eq!(paths.len(), 1);
            assert_eq!(paths[0].vertices, vec![v(1, 3)]);
        }
        // the X rule classifies a lone vertex as right+down
        let paths = d.minimal_paths(v(1, 4), v(1, 4), EndpointRule::X).unwrap();
        assert_eq!(paths[0].classes, vec![VertexClass::Rd]);
    }

    #[test]
    fn cross_block_paths_rejected() {
        let w = make_admissible(&[2, 2, 2]).unwrap();
        let d = build_diagram(&w).unwrap();
        assert_eq!(
            d.minimal_paths(v(1, 2), v(1, 4), EndpointRule::X)
                .unwrap_err(),
            Error::DifferentBlocks
        );
    }

    #[test]
    fn x_rule_counts_are_binomial() {
        fn binom(n: u64, k: u64) -> u64 {
            let mut r = 1u64;
            for t in 0..k.min(n - k) {
                r = r * (n - t) / (t + 1);
            }
            r
        }
        for k in 1..=4u32 {
            for rest in 1..=4u32 {
                if k + rest > 5 {
                    continue;
                }
                let w = make_admissible(&[k, rest]).unwrap();
                let d = build_diagram(&w).unwrap();
                let n = k + rest - 1;
                for i in 1..=(n + 1 - k) {
                    for j in 1..=k {
                        let from = v(1, k + i - 1);
                        let to = v(j, n);
                        let paths = d.minimal_paths(from, to, EndpointRule::X).unwrap();
                        let dr = (to.i - from.i) as u64;
                        let dc = to.j.abs_diff(from.j) as u64;
                        assert_eq!(paths.len() as u64, binom(dr + dc, dr));
                    }
                }
            }
        }
    }

    #[test]
    fn edge_partition_complete() {
        for blocks in [vec![2u32, 3], vec![2, 2, 2], vec![1, 1, 1], vec![3, 1, 2]] {
            let w = make_admissible(&blocks).unwrap();
            let d = build_diagram(&w).unwrap();
            let sets = d.edge_sets();
            let total: usize = sets.plain.values().map(|v| v.len()).sum::<usize>()
                + sets.dotted.values().map(|v| v.len()).sum::<usize>();
            assert_eq!(total, d.plain_edges().len() + d.dotted_edges().len());
        }
    }

    #[test]
    fn dot_output() {
        let w = make_admissible(&[2, 3]).unwrap();
        let d = build_diagram(&w).unwrap();
        let dot = d.to_dot();
        assert!(dot.contains("v1_2 -> v1_3 [label=\"3\"]"));
        assert!(dot.contains("style=dotted"));
    }
}
