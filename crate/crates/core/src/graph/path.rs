use thiserror::Error;

use super::{Instance, Layer, ORIGIN};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("a path must visit at least one center")]
    Empty,
    #[error("vertex {0} is not a first-layer center")]
    NotFirstLayer(usize),
    #[error("vertex {0} is visited twice")]
    Repeated(usize),
    #[error("no first-layer arc ({0}, {1})")]
    MissingArc(usize, usize),
    #[error("path has {0} arcs, limit is {1}")]
    TooLong(usize, usize),
}

/// An elementary first-layer path `o -> i_1 -> ... -> i_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    nodes: Vec<usize>,
    arcs: Vec<usize>,
    length_bits: u64,
}

impl Path {
    /// Builds the path visiting `nodes` (origin excluded) in order.
    pub fn new(inst: &Instance, nodes: Vec<usize>) -> Result<Path, PathError> {
        if nodes.is_empty() {
            return Err(PathError::Empty);
        }
        if nodes.len() > inst.arc_limit() {
            return Err(PathError::TooLong(nodes.len(), inst.arc_limit()));
        }
        let mut arcs = Vec::with_capacity(nodes.len());
        let mut length = 0.0;
        let mut prev = ORIGIN;
        for (i, &v) in nodes.iter().enumerate() {
            if v >= inst.vertices().len() || inst.vertex(v).layer != Layer::First {
                return Err(PathError::NotFirstLayer(v));
            }
            if nodes[..i].contains(&v) {
                return Err(PathError::Repeated(v));
            }
            let a = inst.find_arc(prev, v).ok_or(PathError::MissingArc(prev, v))?;
            length += inst.arc(a).length;
            arcs.push(a);
            prev = v;
        }
        Ok(Path {
            nodes,
            arcs,
            length_bits: f64::to_bits(length),
        })
    }

    /// Visited first-layer centers, in order (the origin is implicit).
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn arcs(&self) -> &[usize] {
        &self.arcs
    }

    /// Total length in km.
    pub fn length(&self) -> f64 {
        f64::from_bits(self.length_bits)
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn last(&self) -> usize {
        *self.nodes.last().expect("paths are nonempty")
    }

    pub fn visits(&self, v: usize) -> bool {
        self.nodes.contains(&v)
    }

    pub fn uses_arc(&self, a: usize) -> bool {
        self.arcs.contains(&a)
    }

    /// Human-readable form such as `o-a-b`.
    pub fn display(&self, inst: &Instance) -> String {
        std::iter::once(ORIGIN)
            .chain(self.nodes.iter().copied())
            .map(|v| inst.vertex(v).id.as_str())
            .collect::<Vec<_>>()
            .join("-")
    }
}
