use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{
    table3_fleet, validate_instance, Instance, RawArc, RawInstance, RawNode, ValidationErrors,
    VehicleType, TABLE3_OUTSOURCE_RATE,
};

/// One origin-destination demand record.
#[derive(Debug, Clone, PartialEq)]
pub struct OdRecord {
    pub destination: String,
    /// m³
    pub demand: f64,
    /// km from the origin
    pub distance: f64,
    pub position: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerPartition {
    pub first: Vec<String>,
    pub second: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PartitionError {
    #[error("no OD records to partition")]
    Empty,
    #[error("theta {0} is outside [0, 1]")]
    ThetaOutOfRange(f64),
    #[error("partition leaves the first layer empty while the second layer is not")]
    InvalidPartition,
}

fn top_count(theta: f64, n: usize) -> usize {
    ((theta * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Splits destinations into the two layers. A destination is outsourced
/// (second layer) when it ranks within the top `ceil(theta * N)` both by
/// ascending demand and by descending distance; ties break on the id.
pub fn partition_layers(records: &[OdRecord], theta: f64) -> Result<LayerPartition, PartitionError> {
    if records.is_empty() {
        return Err(PartitionError::Empty);
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(PartitionError::ThetaOutOfRange(theta));
    }
    let top = top_count(theta, records.len());
    let mut by_demand: Vec<&OdRecord> = records.iter().collect();
    by_demand.sort_by(|a, b| a.demand.total_cmp(&b.demand).then_with(|| a.destination.cmp(&b.destination)));
    let mut by_distance: Vec<&OdRecord> = records.iter().collect();
    by_distance.sort_by(|a, b| b.distance.total_cmp(&a.distance).then_with(|| a.destination.cmp(&b.destination)));
    let small: HashSet<&str> = by_demand[..top].iter().map(|r| r.destination.as_str()).collect();
    let far: HashSet<&str> = by_distance[..top].iter().map(|r| r.destination.as_str()).collect();

    let (second, first): (Vec<&OdRecord>, Vec<&OdRecord>) = records
        .iter()
        .partition(|r| small.contains(r.destination.as_str()) && far.contains(r.destination.as_str()));
    if first.is_empty() && !second.is_empty() {
        return Err(PartitionError::InvalidPartition);
    }
    Ok(LayerPartition {
        first: first.into_iter().map(|r| r.destination.clone()).collect(),
        second: second.into_iter().map(|r| r.destination.clone()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    /// First-layer size (ignored when `theta` is set; then `n1 + n2` is the
    /// destination count).
    pub n1: usize,
    pub n2: usize,
    /// Side of the square in which all centers are placed, km.
    pub area_km: f64,
    /// When set, layers come from [`partition_layers`] instead of `n1`/`n2`.
    pub theta: Option<f64>,
    /// First-layer centers closer than this are linked both ways.
    pub first_layer_radius_km: f64,
    /// Each second-layer center is linked from its nearest first-layer centers.
    pub second_layer_fanin: usize,
    pub fleet: Vec<VehicleType>,
    pub outsource_rate: f64,
    pub demand_range: (f64, f64),
    pub arc_limit: usize,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            n1: 6,
            n2: 6,
            area_km: 2500.0,
            theta: None,
            first_layer_radius_km: 500.0,
            second_layer_fanin: 3,
            fleet: table3_fleet(),
            outsource_rate: TABLE3_OUTSOURCE_RATE,
            demand_range: (5.0, 90.0),
            arc_limit: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error("invalid generator parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Invalid(#[from] ValidationErrors),
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt().max(1e-6)
}

/// Draws `n` destinations uniformly in the square, with the origin also
/// placed uniformly. Returns the origin position and the records.
pub fn random_od_records(seed: u64, n: usize, params: &GeneratorParams) -> ((f64, f64), Vec<OdRecord>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = params.area_km;
    let origin = (rng.gen_range(0.0..side), rng.gen_range(0.0..side));
    let (dlo, dhi) = params.demand_range;
    let records = (0..n)
        .map(|i| {
            let pos = (rng.gen_range(0.0..side), rng.gen_range(0.0..side));
            let demand = if dhi > dlo { rng.gen_range(dlo..dhi) } else { dlo };
            OdRecord {
                destination: format!("D{:03}", i + 1),
                demand: (demand * 100.0).round() / 100.0,
                distance: dist(origin, pos),
                position: Some(pos),
            }
        })
        .collect();
    (origin, records)
}

/// Builds a Euclidean two-layer instance over positioned records and a
/// layer assignment.
pub fn instance_from_records(
    origin: (f64, f64),
    records: &[OdRecord],
    partition: &LayerPartition,
    params: &GeneratorParams,
) -> Result<Instance, GenerateError> {
    if params.second_layer_fanin == 0 {
        return Err(GenerateError::Params("second_layer_fanin must be >= 1".into()));
    }
    let pos_of = |r: &OdRecord| {
        r.position
            .ok_or_else(|| GenerateError::Params(format!("record {} has no position", r.destination)))
    };
    let find = |id: &String| records.iter().find(|r| &r.destination == id);
    let mut first: Vec<(&OdRecord, (f64, f64))> = Vec::new();
    for id in &partition.first {
        let r = find(id).ok_or_else(|| GenerateError::Params(format!("unknown destination {id}")))?;
        first.push((r, pos_of(r)?));
    }
    let mut second: Vec<(&OdRecord, (f64, f64))> = Vec::new();
    for id in &partition.second {
        let r = find(id).ok_or_else(|| GenerateError::Params(format!("unknown destination {id}")))?;
        second.push((r, pos_of(r)?));
    }

    let mut nodes = Vec::new();
    let mut arcs = Vec::new();
    let mut positions = vec![origin];
    // Destinations keep their record order; layers are attached per record.
    for r in records {
        let layer = if partition.first.contains(&r.destination) {
            1
        } else if partition.second.contains(&r.destination) {
            2
        } else {
            continue;
        };
        nodes.push(RawNode {
            id: r.destination.clone(),
            layer,
            demand: r.demand,
        });
        positions.push(pos_of(r)?);
    }
    for (r, p) in &first {
        arcs.push(RawArc {
            tail: "o".into(),
            head: r.destination.clone(),
            length_km: dist(origin, *p),
            outsource_rate: None,
        });
    }
    for (ri, pi) in &first {
        for (rj, pj) in &first {
            if ri.destination != rj.destination {
                let d = dist(*pi, *pj);
                if d < params.first_layer_radius_km {
                    arcs.push(RawArc {
                        tail: ri.destination.clone(),
                        head: rj.destination.clone(),
                        length_km: d,
                        outsource_rate: None,
                    });
                }
            }
        }
    }
    for (rs, ps) in &second {
        let mut near: Vec<(f64, usize)> = first.iter().enumerate().map(|(i, (_, p))| (dist(*p, *ps), i)).collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(d, i) in near.iter().take(params.second_layer_fanin) {
            arcs.push(RawArc {
                tail: first[i].0.destination.clone(),
                head: rs.destination.clone(),
                length_km: d,
                outsource_rate: Some(params.outsource_rate),
            });
        }
    }
    let raw = RawInstance {
        origin: "o".into(),
        nodes,
        arcs,
        fleet: params.fleet.clone(),
        arc_limit: params.arc_limit,
    };
    let mut inst = validate_instance(&raw)?;
    inst.set_positions(&positions);
    Ok(inst)
}

/// Reproducible synthetic instance: uniform placement, Euclidean lengths,
/// uniform demands.
pub fn generate_instance(seed: u64, params: &GeneratorParams) -> Result<Instance, GenerateError> {
    if params.second_layer_fanin == 0 {
        return Err(GenerateError::Params("second_layer_fanin must be >= 1".into()));
    }
    let total = params.n1 + params.n2;
    let partition_of = |records: &[OdRecord]| -> Result<LayerPartition, GenerateError> {
        match params.theta {
            Some(theta) => Ok(partition_layers(records, theta)?),
            None => {
                if params.n1 == 0 {
                    return Err(GenerateError::Params("n1 must be >= 1".into()));
                }
                let ids: Vec<String> = records.iter().map(|r| r.destination.clone()).collect();
                Ok(LayerPartition {
                    first: ids[..params.n1].to_vec(),
                    second: ids[params.n1..].to_vec(),
                })
            }
        }
    };
    let (origin, records) = random_od_records(seed, total, params);
    let partition = partition_of(&records)?;
    instance_from_records(origin, &records, &partition, params)
}
