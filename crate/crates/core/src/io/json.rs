use crate::error::{Error, Result};
use crate::model::{Commodity, Edge, Instance, StateSpace};
use crate::scalar::{cast, Scalar};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeDto {
    pub id: String,
    pub tail: String,
    pub head: String,
    pub slope: Vec<f64>,
    pub offset: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommodityDto {
    pub source: String,
    pub target: String,
    pub demand: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_edges: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceDto {
    pub states: Vec<String>,
    pub prior: Vec<f64>,
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeDto>,
    pub commodities: Vec<CommodityDto>,
}

impl InstanceDto {
    pub fn from_instance<T: Scalar>(instance: &Instance<T>) -> Self {
        let f = |v: &[T]| v.iter().map(|&x| x.to_f64_lossy()).collect::<Vec<f64>>();
        InstanceDto {
            states: instance.states.states.clone(),
            prior: f(&instance.states.prior),
            vertices: instance.vertices.clone(),
            edges: instance
                .edges
                .iter()
                .map(|e| EdgeDto {
                    id: e.id.clone(),
                    tail: instance.vertices[e.tail].clone(),
                    head: instance.vertices[e.head].clone(),
                    slope: f(&e.slope),
                    offset: f(&e.offset),
                })
                .collect(),
            commodities: instance
                .commodities
                .iter()
                .map(|c| CommodityDto {
                    source: instance.vertices[c.source].clone(),
                    target: instance.vertices[c.target].clone(),
                    demand: c.demand.to_f64_lossy(),
                    allowed_edges: c
                        .allowed_edges
                        .as_ref()
                        .map(|l| l.iter().map(|&e| instance.edges[e].id.clone()).collect()),
                })
                .collect(),
        }
    }

    pub fn to_instance<T: Scalar>(&self) -> Result<Instance<T>> {
        let vertex = |name: &str| {
            self.vertices
                .iter()
                .position(|v| v == name)
                .ok_or_else(|| Error::Malformed(format!("unknown vertex `{name}`")))
        };
        let conv = |v: &[f64]| v.iter().map(|&x| cast::<f64, T>(x)).collect::<Vec<T>>();
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            edges.push(Edge {
                id: e.id.clone(),
                tail: vertex(&e.tail)?,
                head: vertex(&e.head)?,
                slope: conv(&e.slope),
                offset: conv(&e.offset),
            });
        }
        let mut commodities = Vec::with_capacity(self.commodities.len());
        for c in &self.commodities {
            let allowed_edges = match &c.allowed_edges {
                None => None,
                Some(ids) => {
                    let mut idx = Vec::with_capacity(ids.len());
                    for id in ids {
                        idx.push(
                            self.edges
                                .iter()
                                .position(|e| &e.id == id)
                                .ok_or_else(|| Error::Malformed(format!("unknown edge `{id}`")))?,
                        );
                    }
                    Some(idx)
                }
            };
            commodities.push(Commodity {
                source: vertex(&c.source)?,
                target: vertex(&c.target)?,
                demand: cast(c.demand),
                allowed_edges,
            });
        }
        Instance::new(
            self.vertices.clone(),
            edges,
            commodities,
            StateSpace {
                states: self.states.clone(),
                prior: conv(&self.prior),
            },
        )
    }
}

pub fn instance_from_json<T: Scalar>(text: &str) -> Result<Instance<T>> {
    let dto: InstanceDto = serde_json::from_str(text)?;
    dto.to_instance()
}

pub fn instance_to_json<T: Scalar>(instance: &Instance<T>) -> String {
    serde_json::to_string_pretty(&InstanceDto::from_instance(instance)).expect("instance serializes")
}
