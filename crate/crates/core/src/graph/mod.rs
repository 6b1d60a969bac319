//! Two-layer instances: the origin, first-layer destinations served by the
//! origin's own fleet, and second-layer destinations reached by outsourcing
//! from a first-layer center.

mod generate;
mod path;

pub use generate::{
    generate_instance, instance_from_records, partition_layers, random_od_records, GenerateError,
    GeneratorParams, LayerPartition, OdRecord, PartitionError,
};
pub use path::{Path, PathError};

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Vertex index of the origin; destinations are numbered from 1.
pub const ORIGIN: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layer {
    Origin,
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleType {
    pub id: u32,
    #[serde(rename = "capacity_m3")]
    pub capacity: f64,
    #[serde(rename = "cost_per_km")]
    pub unit_cost: f64,
}

/// The four vehicle types used throughout the experiments: capacities in m³
/// and costs in CNY/km.
pub fn table3_fleet() -> Vec<VehicleType> {
    [(65.0, 4.1), (90.0, 4.7), (130.0, 6.5), (175.0, 7.5)]
        .iter()
        .enumerate()
        .map(|(i, &(capacity, unit_cost))| VehicleType {
            id: i as u32 + 1,
            capacity,
            unit_cost,
        })
        .collect()
}

/// Outsourcing rate of the experiments, CNY per (km·m³).
pub const TABLE3_OUTSOURCE_RATE: f64 = 0.06;

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: String,
    pub layer: Layer,
    pub demand: f64,
    pub position: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArcKind {
    FirstLayer,
    CrossLayer { outsource_rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
    pub length: f64,
    pub kind: ArcKind,
}

impl Arc {
    pub fn is_first_layer(&self) -> bool {
        matches!(self.kind, ArcKind::FirstLayer)
    }

    pub fn outsource_rate(&self) -> Option<f64> {
        match self.kind {
            ArcKind::CrossLayer { outsource_rate } => Some(outsource_rate),
            ArcKind::FirstLayer => None,
        }
    }
}

/// Unvalidated instance description; field names follow the JSON schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInstance {
    pub origin: String,
    pub nodes: Vec<RawNode>,
    pub arcs: Vec<RawArc>,
    pub fleet: Vec<VehicleType>,
    pub arc_limit: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawNode {
    pub id: String,
    pub layer: u8,
    pub demand: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawArc {
    pub tail: String,
    pub head: String,
    pub length_km: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outsource_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error("first-layer node {0} has no direct arc from the origin")]
    MissingDirectArc(String),
    #[error("second-layer node {0} has no first-layer in-neighbor")]
    OrphanSecondLayer(String),
    #[error("node {0} has a negative or non-finite demand")]
    NegativeDemand(String),
    #[error("arc ({0}, {1}) has a non-positive length")]
    NonPositiveLength(String, String),
    #[error("unknown node id {0}")]
    UnknownNode(String),
    #[error("duplicate node id {0}")]
    DuplicateNode(String),
    #[error("duplicate arc ({0}, {1})")]
    DuplicateArc(String, String),
    #[error("node {0} has invalid layer {1} (expected 1 or 2)")]
    InvalidLayer(String, u8),
    #[error("arc ({0}, {1}) does not connect origin/layer 1 to layer 1, or layer 1 to layer 2")]
    InvalidArcEndpoints(String, String),
    #[error("cross-layer arc ({0}, {1}) needs a positive outsource_rate")]
    MissingOutsourceRate(String, String),
    #[error("first-layer arc ({0}, {1}) must not carry an outsource_rate")]
    UnexpectedOutsourceRate(String, String),
    #[error("invalid fleet: {0}")]
    InvalidFleet(String),
    #[error("arc_limit must be a positive integer")]
    ZeroArcLimit,
    #[error("node {0} has positive demand but is unreachable from the origin")]
    Unreachable(String),
    #[error("the first layer is empty while demand exists")]
    EmptyFirstLayer,
}

/// All violations found while validating a [`RawInstance`].
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationErrors(pub Vec<InstanceError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid instance: ")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl ValidationErrors {
    pub fn contains(&self, e: &InstanceError) -> bool {
        self.0.contains(e)
    }
}

/// A validated, indexed instance. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    vertices: Vec<Vertex>,
    arcs: Vec<Arc>,
    fleet: Vec<VehicleType>,
    arc_limit: usize,
    out_arcs: Vec<Vec<usize>>,
    in_arcs: Vec<Vec<usize>>,
    arc_lookup: HashMap<(usize, usize), usize>,
    total_demand: f64,
}

impl Instance {
    pub fn origin_id(&self) -> &str {
        &self.vertices[ORIGIN].id
    }

    /// Origin first, then destinations in input order.
    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> &Vertex {
        &self.vertices[v]
    }

    pub fn vertex_by_id(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.id == id)
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc(&self, a: usize) -> &Arc {
        &self.arcs[a]
    }

    pub fn find_arc(&self, tail: usize, head: usize) -> Option<usize> {
        self.arc_lookup.get(&(tail, head)).copied()
    }

    pub fn out_arcs(&self, v: usize) -> &[usize] {
        &self.out_arcs[v]
    }

    pub fn in_arcs(&self, v: usize) -> &[usize] {
        &self.in_arcs[v]
    }

    pub fn fleet(&self) -> &[VehicleType] {
        &self.fleet
    }

    pub fn arc_limit(&self) -> usize {
        self.arc_limit
    }

    /// `w_o`: everything shipped leaves the origin.
    pub fn total_demand(&self) -> f64 {
        self.total_demand
    }

    pub fn demand(&self, v: usize) -> f64 {
        self.vertices[v].demand
    }

    pub fn first_layer(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertices.len()).filter(|&v| self.vertices[v].layer == Layer::First)
    }

    pub fn second_layer(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertices.len()).filter(|&v| self.vertices[v].layer == Layer::Second)
    }

    pub fn first_layer_arcs(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.arcs.len()).filter(|&a| self.arcs[a].is_first_layer())
    }

    pub fn cross_layer_arcs(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.arcs.len()).filter(|&a| !self.arcs[a].is_first_layer())
    }

    /// Returns a copy with a different path-length limit.
    pub fn with_arc_limit(&self, arc_limit: usize) -> Instance {
        let mut inst = self.clone();
        inst.arc_limit = arc_limit.max(1);
        inst
    }

    /// Returns a copy with the demand of `v` replaced.
    pub fn with_demand(&self, v: usize, demand: f64) -> Result<Instance, ValidationErrors> {
        let mut raw = self.to_raw();
        raw.nodes[v - 1].demand = demand;
        validate_instance(&raw)
    }

    pub fn to_raw(&self) -> RawInstance {
        RawInstance {
            origin: self.vertices[ORIGIN].id.clone(),
            nodes: self.vertices[1..]
                .iter()
                .map(|v| RawNode {
                    id: v.id.clone(),
                    layer: if v.layer == Layer::First { 1 } else { 2 },
                    demand: v.demand,
                })
                .collect(),
            arcs: self
                .arcs
                .iter()
                .map(|a| RawArc {
                    tail: self.vertices[a.tail].id.clone(),
                    head: self.vertices[a.head].id.clone(),
                    length_km: a.length,
                    outsource_rate: a.outsource_rate(),
                })
                .collect(),
            fleet: self.fleet.clone(),
            arc_limit: self.arc_limit,
        }
    }

    pub(crate) fn set_positions(&mut self, positions: &[(f64, f64)]) {
        for (v, &p) in self.vertices.iter_mut().zip(positions) {
            v.position = Some(p);
        }
    }
}

fn validate_fleet(fleet: &[VehicleType]) -> Option<InstanceError> {
    if fleet.is_empty() {
        return Some(InstanceError::InvalidFleet("fleet is empty".into()));
    }
    for (i, k) in fleet.iter().enumerate() {
        if k.id as usize != i + 1 {
            return Some(InstanceError::InvalidFleet(format!(
                "vehicle ids must be 1..{} in order, found {} at position {}",
                fleet.len(),
                k.id,
                i + 1
            )));
        }
        if !(k.capacity > 0.0 && k.capacity.is_finite()) || !(k.unit_cost > 0.0 && k.unit_cost.is_finite()) {
            return Some(InstanceError::InvalidFleet(format!(
                "vehicle type {} needs positive capacity and cost",
                k.id
            )));
        }
        if i > 0 && fleet[i - 1].capacity >= k.capacity {
            return Some(InstanceError::InvalidFleet(
                "capacities must be strictly ascending".into(),
            ));
        }
    }
    None
}

/// Checks the structural rules of a two-layer instance and builds its
/// adjacency indexes. Collects every violation instead of stopping at the
/// first.
pub fn validate_instance(raw: &RawInstance) -> Result<Instance, ValidationErrors> {
    let mut errs = Vec::new();
    if let Some(e) = validate_fleet(&raw.fleet) {
        errs.push(e);
    }
    if raw.arc_limit == 0 {
        errs.push(InstanceError::ZeroArcLimit);
    }

    let mut vertices = vec![Vertex {
        id: raw.origin.clone(),
        layer: Layer::Origin,
        demand: 0.0,
        position: None,
    }];
    let mut index: HashMap<&str, usize> = HashMap::new();
    index.insert(raw.origin.as_str(), ORIGIN);
    for n in &raw.nodes {
        let layer = match n.layer {
            1 => Layer::First,
            2 => Layer::Second,
            other => {
                errs.push(InstanceError::InvalidLayer(n.id.clone(), other));
                Layer::First
            }
        };
        if !(n.demand >= 0.0 && n.demand.is_finite()) {
            errs.push(InstanceError::NegativeDemand(n.id.clone()));
        }
        if index.insert(n.id.as_str(), vertices.len()).is_some() {
            errs.push(InstanceError::DuplicateNode(n.id.clone()));
        }
        vertices.push(Vertex {
            id: n.id.clone(),
            layer,
            demand: n.demand,
            position: None,
        });
    }

    let nv = vertices.len();
    let mut arcs = Vec::with_capacity(raw.arcs.len());
    let mut arc_lookup = HashMap::new();
    for a in &raw.arcs {
        let (Some(&t), Some(&h)) = (index.get(a.tail.as_str()), index.get(a.head.as_str())) else {
            for id in [&a.tail, &a.head] {
                if !index.contains_key(id.as_str()) {
                    errs.push(InstanceError::UnknownNode(id.clone()));
                }
            }
            continue;
        };
        if !(a.length_km > 0.0 && a.length_km.is_finite()) {
            errs.push(InstanceError::NonPositiveLength(a.tail.clone(), a.head.clone()));
        }
        let (tl, hl) = (vertices[t].layer, vertices[h].layer);
        let kind = match (tl, hl) {
            (Layer::Origin | Layer::First, Layer::First) => {
                if a.outsource_rate.is_some() {
                    errs.push(InstanceError::UnexpectedOutsourceRate(a.tail.clone(), a.head.clone()));
                }
                ArcKind::FirstLayer
            }
            (Layer::First, Layer::Second) => match a.outsource_rate {
                Some(r) if r > 0.0 && r.is_finite() => ArcKind::CrossLayer { outsource_rate: r },
                _ => {
                    errs.push(InstanceError::MissingOutsourceRate(a.tail.clone(), a.head.clone()));
                    ArcKind::CrossLayer { outsource_rate: 0.0 }
                }
            },
            _ => {
                errs.push(InstanceError::InvalidArcEndpoints(a.tail.clone(), a.head.clone()));
                continue;
            }
        };
        if t == h {
            errs.push(InstanceError::InvalidArcEndpoints(a.tail.clone(), a.head.clone()));
            continue;
        }
        if arc_lookup.insert((t, h), arcs.len()).is_some() {
            errs.push(InstanceError::DuplicateArc(a.tail.clone(), a.head.clone()));
            continue;
        }
        arcs.push(Arc {
            tail: t,
            head: h,
            length: a.length_km,
            kind,
        });
    }

    let mut out_arcs = vec![Vec::new(); nv];
    let mut in_arcs = vec![Vec::new(); nv];
    for (i, a) in arcs.iter().enumerate() {
        out_arcs[a.tail].push(i);
        in_arcs[a.head].push(i);
    }

    let has_first = vertices.iter().any(|v| v.layer == Layer::First);
    let total_demand: f64 = vertices.iter().map(|v| v.demand).sum();
    if !has_first && total_demand > 0.0 {
        errs.push(InstanceError::EmptyFirstLayer);
    }
    for (v, vert) in vertices.iter().enumerate() {
        match vert.layer {
            Layer::First if !arc_lookup.contains_key(&(ORIGIN, v)) => {
                errs.push(InstanceError::MissingDirectArc(vert.id.clone()));
            }
            Layer::Second if in_arcs[v].is_empty() => {
                errs.push(InstanceError::OrphanSecondLayer(vert.id.clone()));
            }
            _ => {}
        }
    }
    // Reachability: second-layer orphans are already reported above.
    let mut seen = HashSet::from([ORIGIN]);
    let mut stack = vec![ORIGIN];
    while let Some(v) = stack.pop() {
        for &a in &out_arcs[v] {
            if seen.insert(arcs[a].head) {
                stack.push(arcs[a].head);
            }
        }
    }
    for (v, vert) in vertices.iter().enumerate() {
        if vert.demand > 0.0 && !seen.contains(&v) && !in_arcs[v].is_empty() {
            errs.push(InstanceError::Unreachable(vert.id.clone()));
        }
    }

    if !errs.is_empty() {
        return Err(ValidationErrors(errs));
    }
    Ok(Instance {
        vertices,
        arcs,
        fleet: raw.fleet.clone(),
        arc_limit: raw.arc_limit,
        out_arcs,
        in_arcs,
        arc_lookup,
        total_demand,
    })
}

/// Outcome of the triangle-inequality check over first-layer arcs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriangleCheck {
    pub holds: bool,
    /// A violating `(i, k, j)`: `l_ij > l_ik + l_kj`.
    pub witness: Option<(usize, usize, usize)>,
}

/// Verifies `l_ij <= l_ik + l_kj` for all first-layer arcs `(i,j)`, `(i,k)`,
/// `(k,j)`.
pub fn check_triangle(inst: &Instance) -> TriangleCheck {
    for (a, arc) in inst.arcs.iter().enumerate() {
        if !arc.is_first_layer() {
            continue;
        }
        let (i, j) = (arc.tail, arc.head);
        for &b in inst.out_arcs(i) {
            let ik = inst.arc(b);
            if b == a || !ik.is_first_layer() {
                continue;
            }
            let k = ik.head;
            if let Some(c) = inst.find_arc(k, j) {
                let detour = ik.length + inst.arc(c).length;
                if arc.length > detour + 1e-9 * arc.length.max(1.0) {
                    return TriangleCheck {
                        holds: false,
                        witness: Some((i, k, j)),
                    };
                }
            }
        }
    }
    TriangleCheck {
        holds: true,
        witness: None,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    fn node(id: &str, layer: u8, demand: f64) -> RawNode {
        RawNode {
            id: id.into(),
            layer,
            demand,
        }
    }

    fn arc(t: &str, h: &str, l: f64, rate: Option<f64>) -> RawArc {
        RawArc {
            tail: t.into(),
            head: h.into(),
            length_km: l,
            outsource_rate: rate,
        }
    }

    /// The small hand-built instance used across unit tests.
    pub(crate) fn t1_raw() -> RawInstance {
        RawInstance {
            origin: "o".into(),
            nodes: vec![node("a", 1, 50.0), node("b", 1, 40.0), node("z", 2, 10.0)],
            arcs: vec![
                arc("o", "a", 100.0, None),
                arc("o", "b", 100.0, None),
                arc("a", "b", 60.0, None),
                arc("b", "a", 60.0, None),
                arc("a", "z", 200.0, Some(0.06)),
                arc("b", "z", 250.0, Some(0.06)),
            ],
            fleet: table3_fleet(),
            arc_limit: 3,
        }
    }

    pub(crate) fn t1() -> Instance {
        validate_instance(&t1_raw()).unwrap()
    }

    #[test]
    fn t1_is_valid_with_total_demand() {
        let inst = t1();
        assert_eq!(inst.total_demand(), 100.0);
        assert_eq!(inst.first_layer().count(), 2);
        assert_eq!(inst.second_layer().count(), 1);
        assert_eq!(inst.out_arcs(ORIGIN).len(), 2);
    }

    #[test]
    fn missing_direct_arc() {
        let mut raw = t1_raw();
        raw.arcs.remove(1);
        let err = validate_instance(&raw).unwrap_err();
        assert!(err.contains(&InstanceError::MissingDirectArc("b".into())));
    }

    #[test]
    fn orphan_second_layer() {
        let mut raw = t1_raw();
        raw.arcs.truncate(4);
        let err = validate_instance(&raw).unwrap_err();
        assert!(err.contains(&InstanceError::OrphanSecondLayer("z".into())));
    }

    #[test]
    fn negative_demand_and_bad_length() {
        let mut raw = t1_raw();
        raw.nodes[0].demand = -1.0;
        raw.arcs[2].length_km = 0.0;
        let err = validate_instance(&raw).unwrap_err();
        assert!(err.contains(&InstanceError::NegativeDemand("a".into())));
        assert!(err.contains(&InstanceError::NonPositiveLength("a".into(), "b".into())));
    }

    #[test]
    fn outsource_rate_placement() {
        let mut raw = t1_raw();
        raw.arcs[4].outsource_rate = None;
        raw.arcs[0].outsource_rate = Some(0.06);
        let err = validate_instance(&raw).unwrap_err();
        assert!(err.contains(&InstanceError::MissingOutsourceRate("a".into(), "z".into())));
        assert!(err.contains(&InstanceError::UnexpectedOutsourceRate("o".into(), "a".into())));
    }

    #[test]
    fn fleet_must_ascend() {
        let mut raw = t1_raw();
        raw.fleet.swap(0, 1);
        raw.fleet[0].id = 1;
        raw.fleet[1].id = 2;
        assert!(matches!(
            validate_instance(&raw).unwrap_err().0[0],
            InstanceError::InvalidFleet(_)
        ));
    }

    #[test]
    fn second_to_first_arc_rejected() {
        let mut raw = t1_raw();
        raw.arcs.push(arc("z", "a", 10.0, None));
        assert!(validate_instance(&raw)
            .unwrap_err()
            .contains(&InstanceError::InvalidArcEndpoints("z".into(), "a".into())));
    }

    #[test]
    fn t1_satisfies_triangle() {
        assert!(check_triangle(&t1()).holds);
    }

    #[test]
    fn triangle_violation_has_witness() {
        let raw = RawInstance {
            origin: "o".into(),
            nodes: vec![node("a", 1, 1.0), node("b", 1, 1.0)],
            arcs: vec![
                arc("o", "a", 10.0, None),
                arc("a", "b", 10.0, None),
                arc("o", "b", 100.0, None),
            ],
            fleet: table3_fleet(),
            arc_limit: 3,
        };
        let inst = validate_instance(&raw).unwrap();
        let c = check_triangle(&inst);
        assert!(!c.holds);
        let (i, k, j) = c.witness.unwrap();
        assert_eq!(
            (inst.vertex(i).id.as_str(), inst.vertex(k).id.as_str(), inst.vertex(j).id.as_str()),
            ("o", "a", "b")
        );
    }

    #[test]
    fn star_is_vacuously_triangular() {
        let raw = RawInstance {
            origin: "o".into(),
            nodes: vec![node("a", 1, 1.0), node("b", 1, 1.0)],
            arcs: vec![arc("o", "a", 10.0, None), arc("o", "b", 100.0, None)],
            fleet: table3_fleet(),
            arc_limit: 3,
        };
        assert!(check_triangle(&validate_instance(&raw).unwrap()).holds);
    }
}
