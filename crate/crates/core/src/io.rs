//! JSON documents: economy catalogs, plan requests and search results.
//!
//! Documents reference materials and products by name; ids are assigned by
//! array position.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::economy::{
    Byproduct, Demand, Economy, InputSlot, MaterialId, Overhead, ProductId, ProductSpec, RawMaterial, Supplier,
};
use crate::error::{Diagnostic, Error};
use crate::lca::{PlanetaryBounds, Weights};
use crate::search::{
    search_beam, search_exhaustive, search_greedy, search_mcts, MctsParams, Objective, SearchResult,
    DEFAULT_EXHAUSTIVE_CAP,
};

pub const SCHEMA_VERSION: &str = "circloop/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomyDocument {
    pub schema_version: String,
    pub raw_materials: Vec<MaterialDoc>,
    pub products: Vec<ProductDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialDoc {
    pub name: String,
    pub unit: String,
    pub base_time: f64,
    pub base_climate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductDoc {
    pub name: String,
    pub level: u32,
    pub features: Vec<String>,
    pub inputs: Vec<InputDoc>,
    #[serde(default)]
    pub byproducts: Vec<ByproductDoc>,
    #[serde(default)]
    pub overhead: OverheadDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDoc {
    pub quantity: f64,
    pub supplier: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ByproductDoc {
    pub material: String,
    pub quantity: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverheadDoc {
    pub time: f64,
    pub climate: f64,
}

impl EconomyDocument {
    /// Resolves names and validates. Diagnostics are all-or-nothing.
    pub fn to_economy(&self) -> Result<Economy, Error> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::UnknownSchema(self.schema_version.clone()));
        }
        let mut diags = Vec::new();
        let material_ids: HashMap<&str, MaterialId> = self
            .raw_materials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.name.as_str(), MaterialId(i)))
            .collect();
        let mut product_ids: HashMap<&str, ProductId> = HashMap::new();
        for (i, p) in self.products.iter().enumerate() {
            if product_ids.insert(p.name.as_str(), ProductId(i)).is_some() {
                diags.push(Diagnostic::new(format!("products[{i}]"), format!("duplicate name {:?}", p.name)));
            }
        }

        let raw_materials = self
            .raw_materials
            .iter()
            .enumerate()
            .map(|(i, m)| RawMaterial {
                id: MaterialId(i),
                name: m.name.clone(),
                unit: m.unit.clone(),
                base_time: m.base_time,
                base_climate: m.base_climate,
            })
            .collect();

        let mut products = Vec::with_capacity(self.products.len());
        for (i, p) in self.products.iter().enumerate() {
            let mut inputs = Vec::with_capacity(p.inputs.len());
            for (s, input) in p.inputs.iter().enumerate() {
                let resolved = if p.level == 0 {
                    material_ids.get(input.supplier.as_str()).map(|&m| Supplier::Material(m))
                } else {
                    product_ids.get(input.supplier.as_str()).map(|&q| Supplier::Product(q))
                };
                match resolved {
                    Some(default_supplier) => inputs.push(InputSlot {
                        slot_index: s,
                        quantity: input.quantity,
                        default_supplier,
                    }),
                    None => diags.push(Diagnostic::new(
                        format!("products[{i}] ({}) inputs[{s}]", p.name),
                        format!(
                            "unknown {} {:?}",
                            if p.level == 0 { "raw material" } else { "product" },
                            input.supplier
                        ),
                    )),
                }
            }
            let mut byproducts = Vec::with_capacity(p.byproducts.len());
            for (b, bp) in p.byproducts.iter().enumerate() {
                match material_ids.get(bp.material.as_str()) {
                    Some(&material) => byproducts.push(Byproduct {
                        material,
                        quantity: bp.quantity,
                    }),
                    None => diags.push(Diagnostic::new(
                        format!("products[{i}] ({}) byproducts[{b}]", p.name),
                        format!("unknown raw material {:?}", bp.material),
                    )),
                }
            }
            products.push(ProductSpec {
                id: ProductId(i),
                name: p.name.clone(),
                level: p.level,
                features: p.features.iter().cloned().collect::<BTreeSet<_>>(),
                inputs,
                byproducts,
                direct_overhead: Overhead {
                    time: p.overhead.time,
                    climate: p.overhead.climate,
                },
            });
        }
        if !diags.is_empty() {
            return Err(Error::Invalid(diags));
        }
        Economy::new(raw_materials, products, self.schema_version.clone())
    }

    pub fn from_economy(economy: &Economy) -> Self {
        Self {
            schema_version: economy.schema_version().to_string(),
            raw_materials: economy
                .raw_materials()
                .iter()
                .map(|m| MaterialDoc {
                    name: m.name.clone(),
                    unit: m.unit.clone(),
                    base_time: m.base_time,
                    base_climate: m.base_climate,
                })
                .collect(),
            products: economy
                .products()
                .iter()
                .map(|p| ProductDoc {
                    name: p.name.clone(),
                    level: p.level,
                    features: p.features.iter().cloned().collect(),
                    inputs: p
                        .inputs
                        .iter()
                        .map(|s| InputDoc {
                            quantity: s.quantity,
                            supplier: economy.supplier_name(s.default_supplier).to_string(),
                        })
                        .collect(),
                    byproducts: p
                        .byproducts
                        .iter()
                        .map(|b| ByproductDoc {
                            material: economy.material_name(b.material).to_string(),
                            quantity: b.quantity,
                        })
                        .collect(),
                    overhead: OverheadDoc {
                        time: p.direct_overhead.time,
                        climate: p.direct_overhead.climate,
                    },
                })
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("economy document serializes");
        s.push('\n');
        s
    }

    /// SHA-256 over the compact canonical serialization.
    pub fn schema_hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("economy document serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

pub fn parse_economy(text: &str) -> Result<Economy, Error> {
    EconomyDocument::from_json(text)?.to_economy()
}

pub fn serialize_economy(economy: &Economy) -> String {
    EconomyDocument::from_economy(economy).to_json()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanDocument {
    pub demand: Vec<DemandDoc>,
    pub weights: WeightsDoc,
    #[serde(default)]
    pub bounds: BoundsDoc,
    pub algorithm: AlgorithmDoc,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub reuse_credit: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandDoc {
    pub product: String,
    pub units: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsDoc {
    pub time: f64,
    pub climate: f64,
    #[serde(default)]
    pub materials: MaterialWeights,
}

/// Either one weight for every material or a per-material map (absent = 0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaterialWeights {
    Uniform(f64),
    PerMaterial(BTreeMap<String, f64>),
}

impl Default for MaterialWeights {
    fn default() -> Self {
        MaterialWeights::Uniform(0.0)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub climate: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub materials: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum AlgorithmDoc {
    Exhaustive {
        #[serde(default = "default_cap")]
        cap: u64,
    },
    Greedy {
        #[serde(default = "default_max_steps")]
        max_steps: usize,
    },
    Beam {
        width: usize,
    },
    Mcts {
        budget: usize,
        #[serde(default = "default_exploration")]
        exploration: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rollout_depth: Option<usize>,
    },
}

fn default_cap() -> u64 {
    DEFAULT_EXHAUSTIVE_CAP
}

fn default_max_steps() -> usize {
    1000
}

fn default_exploration() -> f64 {
    1.4
}

impl AlgorithmDoc {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmDoc::Exhaustive { .. } => "exhaustive",
            AlgorithmDoc::Greedy { .. } => "greedy",
            AlgorithmDoc::Beam { .. } => "beam",
            AlgorithmDoc::Mcts { .. } => "mcts",
        }
    }

    pub fn mcts_params(&self, seed: u64) -> Option<MctsParams> {
        match *self {
            AlgorithmDoc::Mcts {
                budget,
                exploration,
                rollout_depth,
            } => Some(MctsParams {
                exploration,
                rollout_depth,
                budget,
                seed,
            }),
            _ => None,
        }
    }
}

/// A plan document resolved against an economy.
#[derive(Clone, Debug)]
pub struct Plan {
    pub demand: Demand,
    pub weights: Weights,
    pub bounds: PlanetaryBounds,
    pub algorithm: AlgorithmDoc,
    pub seed: u64,
    pub reuse_credit: bool,
}

fn lookup_material(economy: &Economy, name: &str, what: &str) -> Result<MaterialId, Error> {
    economy
        .material_id(name)
        .ok_or_else(|| Error::InvalidParams(format!("{what} references unknown material {name:?}")))
}

impl PlanDocument {
    pub fn resolve(&self, economy: &Economy) -> Result<Plan, Error> {
        let entries = self
            .demand
            .iter()
            .map(|d| {
                economy
                    .product_id(&d.product)
                    .map(|p| (p, d.units))
                    .ok_or_else(|| Error::InvalidDemand(format!("unknown product {:?}", d.product)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let demand = Demand::new(economy, entries)?;

        let r = economy.material_count();
        let materials = match &self.weights.materials {
            MaterialWeights::Uniform(w) => vec![*w; r],
            MaterialWeights::PerMaterial(map) => {
                let mut out = vec![0.0; r];
                for (name, w) in map {
                    out[lookup_material(economy, name, "weights")?.0] = *w;
                }
                out
            }
        };
        let weights = Weights {
            time: self.weights.time,
            climate: self.weights.climate,
            materials,
        };
        weights.validate()?;

        let mut bounds = PlanetaryBounds::unbounded(r);
        bounds.max_time = self.bounds.time;
        bounds.max_climate = self.bounds.climate;
        for (name, cap) in &self.bounds.materials {
            bounds.max_materials[lookup_material(economy, name, "bounds")?.0] = Some(*cap);
        }
        bounds.validate()?;

        Ok(Plan {
            demand,
            weights,
            bounds,
            algorithm: self.algorithm.clone(),
            seed: self.seed,
            reuse_credit: self.reuse_credit,
        })
    }
}

impl Plan {
    pub fn objective(&self) -> Objective {
        Objective {
            weights: self.weights.clone(),
            bounds: self.bounds.clone(),
            reuse_credit: self.reuse_credit,
            audit: false,
        }
    }

    /// Runs the configured algorithm. `workers` only affects mcts.
    pub fn run(&self, economy: &Economy, workers: usize, audit: bool) -> Result<SearchResult, Error> {
        let mut objective = self.objective();
        objective.audit = audit;
        match &self.algorithm {
            AlgorithmDoc::Exhaustive { cap } => search_exhaustive(economy, &self.demand, &objective, *cap),
            AlgorithmDoc::Greedy { max_steps } => search_greedy(economy, &self.demand, &objective, *max_steps),
            AlgorithmDoc::Beam { width } => search_beam(economy, &self.demand, &objective, *width),
            AlgorithmDoc::Mcts { .. } => {
                let params = self.algorithm.mcts_params(self.seed).expect("mcts variant");
                search_mcts(economy, &self.demand, &objective, &params, workers)
            }
        }
    }
}

pub fn parse_plan(text: &str) -> Result<PlanDocument, Error> {
    Ok(serde_json::from_str(text)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoveDoc {
    pub owner: String,
    pub slot: usize,
    pub from: String,
    pub to: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantityDoc {
    pub material: String,
    pub quantity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImpactDoc {
    pub time: f64,
    pub climate: f64,
    pub materials: Vec<QuantityDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationDoc {
    pub indicator: String,
    pub value: f64,
    pub bound: f64,
    pub excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationDoc {
    pub impact: ImpactDoc,
    pub score: f64,
    pub feasible: bool,
    pub violations: Vec<ViolationDoc>,
    pub total_violation: f64,
}

/// Serialized [`SearchResult`]. `wall_time_ms` is the only field that varies
/// between identical runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub moves: Vec<MoveDoc>,
    pub evaluation: EvaluationDoc,
    pub circularity: f64,
    pub nodes: u64,
    pub wall_time_ms: f64,
    pub algorithm: String,
    pub seed: u64,
    pub workers: usize,
    pub schema_hash: String,
    pub plan: PlanDocument,
}

impl ResultDocument {
    pub fn build(
        economy: &Economy,
        economy_doc: &EconomyDocument,
        plan_doc: &PlanDocument,
        result: &SearchResult,
        circularity: f64,
        workers: usize,
    ) -> Self {
        let eval = &result.evaluation;
        Self {
            moves: result
                .moves
                .iter()
                .map(|m| MoveDoc {
                    owner: economy.product_name(m.owner).to_string(),
                    slot: m.slot,
                    from: economy.product_name(m.from).to_string(),
                    to: economy.product_name(m.to).to_string(),
                })
                .collect(),
            evaluation: EvaluationDoc {
                impact: ImpactDoc {
                    time: eval.impact.time,
                    climate: eval.impact.climate,
                    materials: eval
                        .impact
                        .materials
                        .iter()
                        .enumerate()
                        .map(|(i, &q)| QuantityDoc {
                            material: economy.material_name(MaterialId(i)).to_string(),
                            quantity: q,
                        })
                        .collect(),
                },
                score: eval.score,
                feasible: eval.feasibility.feasible,
                violations: eval
                    .feasibility
                    .violations
                    .iter()
                    .map(|v| ViolationDoc {
                        indicator: v.indicator.label(economy),
                        value: v.value,
                        bound: v.bound,
                        excess: v.excess,
                    })
                    .collect(),
                total_violation: eval.total_violation,
            },
            circularity,
            nodes: result.nodes,
            wall_time_ms: result.wall_time.as_secs_f64() * 1e3,
            algorithm: result.algorithm.to_string(),
            seed: plan_doc.seed,
            workers,
            schema_hash: economy_doc.schema_hash(),
            plan: plan_doc.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result document serializes");
        s.push('\n');
        s
    }

    /// Resolves the move list against `economy`.
    pub fn moves(&self, economy: &Economy) -> Result<Vec<crate::search::Move>, Error> {
        let product = |name: &str| {
            economy
                .product_id(name)
                .ok_or_else(|| Error::InvalidParams(format!("result references unknown product {name:?}")))
        };
        self.moves
            .iter()
            .map(|m| {
                Ok(crate::search::Move {
                    owner: product(&m.owner)?,
                    slot: m.slot,
                    from: product(&m.from)?,
                    to: product(&m.to)?,
                })
            })
            .collect()
    }
}
