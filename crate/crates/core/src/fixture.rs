//! Small hand-built economies used by tests, examples and the acceptance suite.

use std::collections::BTreeSet;

use crate::economy::{Economy, InputSlot, MaterialId, Overhead, ProductId, ProductSpec, RawMaterial, Supplier};
use crate::io::{parse_economy, SCHEMA_VERSION};

/// Six-product micro-economy: S, RS, PL wrap steel, recycled steel and
/// plastic; gears G (2 S) and GR (2 RS) share a feature class; box B uses one
/// gear and three PL.
pub const MICRO_JSON: &str = include_str!("../fixtures/micro.json");

/// Demand one B, unit weights, climate capped at 12, exhaustive search.
pub const MICRO_PLAN_JSON: &str = include_str!("../fixtures/micro_plan.json");

pub fn micro_economy() -> Economy {
    parse_economy(MICRO_JSON).expect("fixture is valid")
}

/// The micro-economy with G releasing 0.5 steel per unit.
pub fn micro_with_byproduct(material: &str, quantity: f64) -> Economy {
    let text = MICRO_JSON.replace(
        r#""inputs": [{ "quantity": 2.0, "supplier": "S" }] }"#,
        &format!(
            r#""inputs": [{{ "quantity": 2.0, "supplier": "S" }}], "byproducts": [{{ "material": "{material}", "quantity": {quantity:?} }}] }}"#
        ),
    );
    parse_economy(&text).expect("fixture is valid")
}

fn raw(id: usize, name: &str, time: f64, climate: f64) -> RawMaterial {
    RawMaterial {
        id: MaterialId(id),
        name: name.into(),
        unit: "kg".into(),
        base_time: time,
        base_climate: climate,
    }
}

fn features(tags: &[&str]) -> BTreeSet<String> {
    tags.iter().map(|s| s.to_string()).collect()
}

fn wrapper(id: usize, name: &str, feature: &str, material: usize) -> ProductSpec {
    ProductSpec {
        id: ProductId(id),
        name: name.into(),
        level: 0,
        features: features(&[feature]),
        inputs: vec![InputSlot {
            slot_index: 0,
            quantity: 1.0,
            default_supplier: Supplier::Material(MaterialId(material)),
        }],
        byproducts: vec![],
        direct_overhead: Overhead::default(),
    }
}

fn composite(id: usize, name: &str, level: u32, feature: &str, inputs: &[(f64, usize)]) -> ProductSpec {
    ProductSpec {
        id: ProductId(id),
        name: name.into(),
        level,
        features: features(&[feature]),
        inputs: inputs
            .iter()
            .enumerate()
            .map(|(i, &(quantity, p))| InputSlot {
                slot_index: i,
                quantity,
                default_supplier: Supplier::Product(ProductId(p)),
            })
            .collect(),
        byproducts: vec![],
        direct_overhead: Overhead::default(),
    }
}

/// One material with zero base impacts.
pub fn zero_impact_material() -> Economy {
    Economy::new(vec![raw(0, "air", 0.0, 0.0)], vec![wrapper(0, "A", "air", 0)], SCHEMA_VERSION).unwrap()
}

/// Instance where greedy descent gets stuck. T uses X0 (Y0 + Z0 = 8 hours);
/// X1 uses V0 (7.5) or V1 (5). Greedy and width-1 beam both settle at 6
/// (X0 with Y1 + Z1) while the optimum is 5 (X1 with V1). Score by time only.
pub fn greedy_trap() -> Economy {
    let materials = vec![
        raw(0, "y0", 4.0, 0.0),
        raw(1, "y1", 3.0, 0.0),
        raw(2, "z0", 4.0, 0.0),
        raw(3, "z1", 3.0, 0.0),
        raw(4, "v0", 7.5, 0.0),
        raw(5, "v1", 5.0, 0.0),
    ];
    let products = vec![
        wrapper(0, "Y0", "y", 0),
        wrapper(1, "Y1", "y", 1),
        wrapper(2, "Z0", "z", 2),
        wrapper(3, "Z1", "z", 3),
        wrapper(4, "V0", "v", 4),
        wrapper(5, "V1", "v", 5),
        composite(6, "X0", 1, "x", &[(1.0, 0), (1.0, 2)]),
        composite(7, "X1", 1, "x", &[(1.0, 4)]),
        composite(8, "T", 2, "t", &[(1.0, 6)]),
    ];
    Economy::new(materials, products, SCHEMA_VERSION).unwrap()
}

/// Single-input chain `C1 <- C2 <- ... <- Cn` over a steel/recycled wrapper
/// pair; `C1` takes the steel wrapper by default.
pub fn single_input_chain(n: usize) -> Economy {
    let materials = vec![raw(0, "steel", 2.0, 5.0), raw(1, "recycled_steel", 1.0, 1.0)];
    let mut products = vec![wrapper(0, "S", "steel", 0), wrapper(1, "RS", "steel", 1)];
    for i in 1..=n {
        let supplier = if i == 1 { 0 } else { i };
        products.push(composite(i + 1, &format!("C{i}"), i as u32, &format!("c{i}"), &[(1.0, supplier)]));
    }
    Economy::new(materials, products, SCHEMA_VERSION).unwrap()
}
