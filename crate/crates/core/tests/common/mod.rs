//! Independent oracles for the integration tests. They work on a plain copy
//! of the supplier choices and share no code with the library's caches.

#![allow(dead_code)]

use std::collections::BTreeSet;

use circloop::economy::{Configuration, Demand, Economy, ProductId, Supplier};
use circloop::gen::{generate, GenParams};

/// `Some(product)` or `None` for a raw-material slot.
pub type Choices = Vec<Vec<Option<usize>>>;

pub fn choices_of(economy: &Economy, config: &Configuration) -> Choices {
    economy
        .products()
        .iter()
        .map(|p| config.slots(p.id).iter().map(|s| s.product().map(|q| q.0)).collect())
        .collect()
}

/// Tree expansion without sharing: `(time, climate, materials)` of one unit.
pub fn naive_lca(economy: &Economy, choices: &Choices, p: usize) -> (f64, f64, Vec<f64>) {
    let spec = &economy.products()[p];
    let mut time = spec.direct_overhead.time;
    let mut climate = spec.direct_overhead.climate;
    let mut materials = vec![0.0; economy.material_count()];
    for (slot, input) in spec.inputs.iter().enumerate() {
        let q = input.quantity;
        match choices[p][slot] {
            Some(child) => {
                let (t, c, m) = naive_lca(economy, choices, child);
                time += q * t;
                climate += q * c;
                for (a, b) in materials.iter_mut().zip(m) {
                    *a += q * b;
                }
            }
            None => {
                let Supplier::Material(m) = input.default_supplier else { unreachable!() };
                let raw = &economy.raw_materials()[m.0];
                time += q * raw.base_time;
                climate += q * raw.base_climate;
                materials[m.0] += q;
            }
        }
    }
    (time, climate, materials)
}

pub fn naive_bits(economy: &Economy, choices: &Choices, p: usize) -> BTreeSet<usize> {
    let spec = &economy.products()[p];
    let mut out = BTreeSet::new();
    for (slot, input) in spec.inputs.iter().enumerate() {
        if input.quantity <= 0.0 {
            continue;
        }
        match choices[p][slot] {
            Some(child) => out.extend(naive_bits(economy, choices, child)),
            None => {
                let Supplier::Material(m) = input.default_supplier else { unreachable!() };
                out.insert(m.0);
            }
        }
    }
    out
}

pub fn reachable(choices: &Choices, demand: &Demand) -> BTreeSet<usize> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<usize> = demand.products().map(|p| p.0).collect();
    while let Some(p) = stack.pop() {
        if seen.insert(p) {
            stack.extend(choices[p].iter().flatten().copied());
        }
    }
    seen
}

/// `(owner, slot, to)` for every legal rebinding, from first principles.
pub fn oracle_moves(economy: &Economy, choices: &Choices, demand: &Demand) -> Vec<(usize, usize, usize)> {
    let products = economy.products();
    let mut out = Vec::new();
    for owner in reachable(choices, demand) {
        for (slot, chosen) in choices[owner].iter().enumerate() {
            let Some(from) = *chosen else { continue };
            for to in 0..products.len() {
                if to != from && products[to].features == products[from].features && products[to].level < products[owner].level {
                    out.push((owner, slot, to));
                }
            }
        }
    }
    out
}

/// Move-sequence count at `depth` by cloning the choices at every edge.
pub fn clone_perft(economy: &Economy, choices: &Choices, demand: &Demand, depth: usize) -> u64 {
    if depth == 0 {
        return 1;
    }
    oracle_moves(economy, choices, demand)
        .into_iter()
        .map(|(owner, slot, to)| {
            let mut next = choices.clone();
            next[owner][slot] = Some(to);
            clone_perft(economy, &next, demand, depth - 1)
        })
        .sum()
}

/// Demand on the first product of the top level.
pub fn top_demand(economy: &Economy) -> Demand {
    let top = economy.products().iter().map(|p| p.level).max().unwrap();
    let p = economy.products().iter().find(|p| p.level == top).unwrap().id;
    Demand::single(economy, p, 1.0).unwrap()
}

/// Demand on every product of the top level.
pub fn all_top_demand(economy: &Economy) -> Demand {
    let top = economy.products().iter().map(|p| p.level).max().unwrap();
    let entries: Vec<(ProductId, f64)> = economy
        .products()
        .iter()
        .filter(|p| p.level == top)
        .map(|p| (p.id, 1.0))
        .collect();
    Demand::new(economy, entries).unwrap()
}

pub fn gen_economy(params: &GenParams) -> Economy {
    generate(params).unwrap().to_economy().unwrap()
}
