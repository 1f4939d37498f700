use std::collections::VecDeque;
use std::fmt::Write as _;

use super::{CellGenotype, CellType, OperationKind};

/// Directed edge of a cell graph. `op` is `None` for the edges that feed the
/// concatenation output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DagEdge {
    pub from: usize,
    pub to: usize,
    pub op: Option<OperationKind>,
}

/// Graph view of a cell: inputs 0 and 1, intermediate nodes `2..B+2`, and the
/// output node `B + 2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellDag {
    pub cell_type: CellType,
    pub blocks: usize,
    pub edges: Vec<DagEdge>,
}

impl CellDag {
    pub fn from_cell(cell: &CellGenotype) -> Self {
        let blocks = cell.blocks.len();
        let output = blocks + 2;
        let mut edges: Vec<DagEdge> = cell
            .edges()
            .map(|(from, to, op)| DagEdge {
                from,
                to,
                op: Some(op),
            })
            .collect();
        edges.extend((2..output).map(|from| DagEdge {
            from,
            to: output,
            op: None,
        }));
        CellDag {
            cell_type: cell.cell_type,
            blocks,
            edges,
        }
    }

    pub fn node_count(&self) -> usize {
        self.blocks + 3
    }

    pub fn output_node(&self) -> usize {
        self.blocks + 2
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.edges.iter().filter(|e| e.to == node).count()
    }

    /// Kahn's algorithm, lowest-index ready node first. `None` on a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.node_count();
        let mut indegree = vec![0usize; n];
        for e in &self.edges {
            indegree[e.to] += 1;
        }
        let mut ready: VecDeque<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = Vec::new();
            for e in self.edges.iter().filter(|e| e.from == v) {
                indegree[e.to] -= 1;
                if indegree[e.to] == 0 {
                    next.push(e.to);
                }
            }
            next.sort_unstable();
            next.dedup();
            ready.extend(next);
            ready.make_contiguous().sort_unstable();
        }
        (order.len() == n).then_some(order)
    }

    fn node_name(&self, node: usize) -> String {
        match node {
            0 => "in0".to_string(),
            1 => "in1".to_string(),
            n if n == self.output_node() => "out".to_string(),
            n => format!("c_{}", n - 2),
        }
    }

    /// Graphviz rendering; edge labels are operation names.
    pub fn to_dot(&self) -> String {
        let mut dot = String::new();
        writeln!(dot, "digraph {} {{", self.cell_type).unwrap();
        writeln!(dot, "  rankdir=LR;").unwrap();
        for node in 0..self.node_count() {
            let shape = if node < 2 || node == self.output_node() {
                "box"
            } else {
                "ellipse"
            };
            writeln!(dot, "  \"{}\" [shape={shape}];", self.node_name(node)).unwrap();
        }
        for e in &self.edges {
            let (from, to) = (self.node_name(e.from), self.node_name(e.to));
            match e.op {
                Some(op) => writeln!(dot, "  \"{from}\" -> \"{to}\" [label=\"{op}\"];").unwrap(),
                None => writeln!(dot, "  \"{from}\" -> \"{to}\";").unwrap(),
            }
        }
        dot.push_str("}\n");
        dot
    }
}

impl CellGenotype {
    pub fn to_dag(&self) -> CellDag {
        CellDag::from_cell(self)
    }
}
