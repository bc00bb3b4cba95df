//! Seeded random economy generator.

use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::io::{ByproductDoc, EconomyDocument, InputDoc, MaterialDoc, OverheadDoc, ProductDoc, SCHEMA_VERSION};

#[derive(Clone, Debug, PartialEq)]
pub struct GenParams {
    pub seed: u64,
    pub materials: usize,
    /// Composite levels above the raw-material wrappers.
    pub levels: usize,
    pub per_level: usize,
    /// Products per feature class (the last class of a level may be smaller).
    pub class_size: usize,
    pub max_inputs: usize,
    /// Probability that a composite product releases one byproduct.
    pub byproduct_prob: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            seed: 1,
            materials: 4,
            levels: 3,
            per_level: 4,
            class_size: 2,
            max_inputs: 3,
            byproduct_prob: 0.0,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<(), Error> {
        let fail = |msg: &str| Err(Error::InvalidParams(msg.into()));
        if self.materials == 0 {
            return fail("at least one raw material is required");
        }
        if self.levels > 0 && self.per_level == 0 {
            return fail("per-level must be >= 1 when levels >= 1");
        }
        if self.class_size == 0 {
            return fail("class-size must be >= 1");
        }
        if self.max_inputs == 0 {
            return fail("max-inputs must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.byproduct_prob) {
            return fail("byproduct probability must lie in [0, 1]");
        }
        Ok(())
    }
}

const QUANTITY: std::ops::RangeInclusive<f64> = 0.5..=4.0;
const BASE_IMPACT: std::ops::RangeInclusive<f64> = 0.1..=10.0;
const BYPRODUCT: std::ops::RangeInclusive<f64> = 0.1..=2.0;

/// Deterministic layered economy: level 0 wraps each material, level `l`
/// products draw their first input from level `l - 1` and the rest from any
/// lower level.
pub fn generate(params: &GenParams) -> Result<EconomyDocument, Error> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let raw_materials: Vec<MaterialDoc> = (0..params.materials)
        .map(|i| MaterialDoc {
            name: format!("m{i}"),
            unit: "kg".into(),
            base_time: rng.gen_range(BASE_IMPACT),
            base_climate: rng.gen_range(BASE_IMPACT),
        })
        .collect();

    let mut products: Vec<ProductDoc> = (0..params.materials)
        .map(|i| ProductDoc {
            name: format!("r{i}"),
            level: 0,
            features: vec![format!("raw-{}", i / params.class_size)],
            inputs: vec![InputDoc {
                quantity: 1.0,
                supplier: format!("m{i}"),
            }],
            byproducts: vec![],
            overhead: OverheadDoc::default(),
        })
        .collect();

    let mut previous_level: Vec<usize> = (0..params.materials).collect();
    for level in 1..=params.levels {
        let lower = products.len();
        let mut this_level = Vec::with_capacity(params.per_level);
        for j in 0..params.per_level {
            let n_inputs = rng.gen_range(1..=params.max_inputs).min(lower);
            let first = *previous_level.choose(&mut rng).expect("previous level is non-empty");
            let mut suppliers = vec![first];
            let mut pool: Vec<usize> = (0..lower).filter(|&p| p != first).collect();
            pool.shuffle(&mut rng);
            suppliers.extend(pool.into_iter().take(n_inputs - 1));
            let inputs = suppliers
                .iter()
                .map(|&s| InputDoc {
                    quantity: rng.gen_range(QUANTITY),
                    supplier: products[s].name.clone(),
                })
                .collect();
            let byproducts = if rng.gen_bool(params.byproduct_prob) {
                vec![ByproductDoc {
                    material: format!("m{}", rng.gen_range(0..params.materials)),
                    quantity: rng.gen_range(BYPRODUCT),
                }]
            } else {
                vec![]
            };
            this_level.push(products.len());
            products.push(ProductDoc {
                name: format!("p{level}_{j}"),
                level: level as u32,
                features: vec![format!("f{level}-{}", j / params.class_size)],
                inputs,
                byproducts,
                overhead: OverheadDoc::default(),
            });
        }
        previous_level = this_level;
    }

    Ok(EconomyDocument {
        schema_version: SCHEMA_VERSION.into(),
        raw_materials,
        products,
    })
}

/// Layered chain of `links` levels with two same-feature products per level.
/// `a_l` uses `a_{l-1}` plus `extra_inputs` raw wrappers; `b_l` mirrors it
/// over `b_{l-1}`. Quantities are 1 so impacts stay linear in depth.
pub fn generate_chain(links: usize, materials: usize, extra_inputs: usize, seed: u64) -> Result<EconomyDocument, Error> {
    if links == 0 || materials < 2 {
        return Err(Error::InvalidParams("a chain needs >= 1 link and >= 2 materials".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw_materials: Vec<MaterialDoc> = (0..materials)
        .map(|i| MaterialDoc {
            name: format!("m{i}"),
            unit: "kg".into(),
            base_time: rng.gen_range(BASE_IMPACT),
            base_climate: rng.gen_range(BASE_IMPACT),
        })
        .collect();
    // wrappers pair up into classes of two
    let mut products: Vec<ProductDoc> = (0..materials)
        .map(|i| ProductDoc {
            name: format!("r{i}"),
            level: 0,
            features: vec![format!("raw-{}", i / 2)],
            inputs: vec![InputDoc {
                quantity: 1.0,
                supplier: format!("m{i}"),
            }],
            byproducts: vec![],
            overhead: OverheadDoc::default(),
        })
        .collect();
    for level in 1..=links {
        for side in ["a", "b"] {
            let mut inputs = vec![InputDoc {
                quantity: 1.0,
                supplier: if level == 1 {
                    "r0".into()
                } else {
                    format!("{side}{}", level - 1)
                },
            }];
            for _ in 0..extra_inputs {
                inputs.push(InputDoc {
                    quantity: 1.0,
                    supplier: format!("r{}", rng.gen_range(0..materials)),
                });
            }
            products.push(ProductDoc {
                name: format!("{side}{level}"),
                level: level as u32,
                features: vec![format!("link-{level}")],
                inputs,
                byproducts: vec![],
                overhead: OverheadDoc::default(),
            });
        }
    }
    Ok(EconomyDocument {
        schema_version: SCHEMA_VERSION.into(),
        raw_materials,
        products,
    })
}
