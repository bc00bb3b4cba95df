//! Static economy catalog (raw materials, products, recipes) and the mutable
//! supplier [`Configuration`] that search operates on.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Diagnostic, Error};

/// Absolute tolerance for floating-point comparisons across the crate.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MaterialId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProductId(pub usize);

impl fmt::Display for MaterialId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}", self.0)
    }
}

impl fmt::Display for ProductId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawMaterial {
    pub id: MaterialId,
    pub name: String,
    pub unit: String,
    /// Labour hours per unit extracted.
    pub base_time: f64,
    /// kgCO2e per unit extracted.
    pub base_climate: f64,
}

/// What an input slot draws from. Only level-0 products take a raw material.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Supplier {
    Material(MaterialId),
    Product(ProductId),
}

impl Supplier {
    pub fn product(self) -> Option<ProductId> {
        match self {
            Supplier::Product(p) => Some(p),
            Supplier::Material(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InputSlot {
    pub slot_index: usize,
    /// Units of supplier consumed per unit of the owning product.
    pub quantity: f64,
    pub default_supplier: Supplier,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Byproduct {
    pub material: MaterialId,
    /// Units released per unit of the owning product.
    pub quantity: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overhead {
    pub time: f64,
    pub climate: f64,
}

impl Overhead {
    pub fn is_zero(&self) -> bool {
        self.time == 0.0 && self.climate == 0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductSpec {
    pub id: ProductId,
    pub name: String,
    pub level: u32,
    pub features: BTreeSet<String>,
    pub inputs: Vec<InputSlot>,
    pub byproducts: Vec<Byproduct>,
    pub direct_overhead: Overhead,
}

impl ProductSpec {
    /// The wrapped raw material of a well-formed level-0 product.
    pub fn wrapped_material(&self) -> Option<MaterialId> {
        match (self.level, self.inputs.as_slice()) {
            (0, [slot]) => match slot.default_supplier {
                Supplier::Material(m) => Some(m),
                Supplier::Product(_) => None,
            },
            _ => None,
        }
    }
}

/// Immutable catalog of raw materials and product recipes.
///
/// Construct through [`Economy::new`] (validated) or
/// [`Economy::from_parts_unchecked`] followed by [`validate`].
#[derive(Clone, Debug)]
pub struct Economy {
    raw_materials: Vec<RawMaterial>,
    products: Vec<ProductSpec>,
    schema_version: String,
    /// Products grouped by identical feature set, each class sorted by id.
    classes: Vec<Vec<ProductId>>,
    class_of: Vec<usize>,
    product_by_name: HashMap<String, ProductId>,
    material_by_name: HashMap<String, MaterialId>,
}

impl PartialEq for Economy {
    fn eq(&self, other: &Self) -> bool {
        self.raw_materials == other.raw_materials
            && self.products == other.products
            && self.schema_version == other.schema_version
    }
}

impl Economy {
    pub fn new(
        raw_materials: Vec<RawMaterial>,
        products: Vec<ProductSpec>,
        schema_version: impl Into<String>,
    ) -> Result<Self, Error> {
        let economy = Self::from_parts_unchecked(raw_materials, products, schema_version);
        let diagnostics = validate(&economy);
        if diagnostics.is_empty() {
            Ok(economy)
        } else {
            Err(Error::Invalid(diagnostics))
        }
    }

    pub fn from_parts_unchecked(
        raw_materials: Vec<RawMaterial>,
        products: Vec<ProductSpec>,
        schema_version: impl Into<String>,
    ) -> Self {
        let mut by_features: BTreeMap<&BTreeSet<String>, Vec<ProductId>> = BTreeMap::new();
        for (idx, p) in products.iter().enumerate() {
            by_features.entry(&p.features).or_default().push(ProductId(idx));
        }
        let mut classes: Vec<Vec<ProductId>> = by_features.into_values().collect();
        classes.sort_by_key(|c| c[0]);
        let mut class_of = vec![0; products.len()];
        for (ci, class) in classes.iter().enumerate() {
            for p in class {
                class_of[p.0] = ci;
            }
        }
        let product_by_name = products
            .iter()
            .enumerate()
            .map(|(i, p)| (p.name.clone(), ProductId(i)))
            .collect();
        let material_by_name = raw_materials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.name.clone(), MaterialId(i)))
            .collect();
        Self {
            raw_materials,
            products,
            schema_version: schema_version.into(),
            classes,
            class_of,
            product_by_name,
            material_by_name,
        }
    }

    pub fn raw_materials(&self) -> &[RawMaterial] {
        &self.raw_materials
    }

    pub fn products(&self) -> &[ProductSpec] {
        &self.products
    }

    pub fn schema_version(&self) -> &str {
        &self.schema_version
    }

    /// Number of raw materials (the width of material vectors and bitsets).
    pub fn material_count(&self) -> usize {
        self.raw_materials.len()
    }

    pub fn product_count(&self) -> usize {
        self.products.len()
    }

    pub fn product(&self, id: ProductId) -> Result<&ProductSpec, Error> {
        self.products.get(id.0).ok_or(Error::UnknownProduct(id))
    }

    pub fn material(&self, id: MaterialId) -> Result<&RawMaterial, Error> {
        self.raw_materials.get(id.0).ok_or(Error::UnknownMaterial(id))
    }

    pub fn product_id(&self, name: &str) -> Option<ProductId> {
        self.product_by_name.get(name).copied()
    }

    pub fn material_id(&self, name: &str) -> Option<MaterialId> {
        self.material_by_name.get(name).copied()
    }

    pub fn product_name(&self, id: ProductId) -> &str {
        &self.products[id.0].name
    }

    pub fn material_name(&self, id: MaterialId) -> &str {
        &self.raw_materials[id.0].name
    }

    pub fn supplier_name(&self, supplier: Supplier) -> &str {
        match supplier {
            Supplier::Material(m) => self.material_name(m),
            Supplier::Product(p) => self.product_name(p),
        }
    }

    /// All products sharing `id`'s feature set (including `id`), ascending.
    pub fn feature_class(&self, id: ProductId) -> &[ProductId] {
        &self.classes[self.class_of[id.0]]
    }

    pub fn same_features(&self, a: ProductId, b: ProductId) -> bool {
        self.class_of[a.0] == self.class_of[b.0]
    }

    /// Products ordered by (level, id); suppliers always precede their users.
    pub fn topological_order(&self) -> Vec<ProductId> {
        let mut order: Vec<ProductId> = (0..self.products.len()).map(ProductId).collect();
        order.sort_by_key(|p| (self.products[p.0].level, p.0));
        order
    }
}

/// Feature-equivalent alternatives to `id`, excluding `id`, ascending by id.
pub fn substitutes(economy: &Economy, id: ProductId) -> Result<Vec<ProductId>, Error> {
    economy.product(id)?;
    Ok(economy
        .feature_class(id)
        .iter()
        .copied()
        .filter(|&p| p != id)
        .collect())
}

fn finite_nonneg(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

/// Checks every catalog invariant. Returns an empty list iff the economy is valid.
pub fn validate(economy: &Economy) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let materials = &economy.raw_materials;
    let products = &economy.products;

    let mut seen = HashMap::new();
    for (i, m) in materials.iter().enumerate() {
        let loc = format!("material {}", m.name);
        if m.id.0 != i {
            out.push(Diagnostic::new(&loc, format!("id {} is not dense (expected {i})", m.id.0)));
        }
        if let Some(prev) = seen.insert(m.name.as_str(), i) {
            out.push(Diagnostic::new(&loc, format!("duplicate name (also material #{prev})")));
        }
        if !finite_nonneg(m.base_time) {
            out.push(Diagnostic::new(&loc, "base_time must be finite and >= 0"));
        }
        if !finite_nonneg(m.base_climate) {
            out.push(Diagnostic::new(&loc, "base_climate must be finite and >= 0"));
        }
    }

    let mut seen = HashMap::new();
    for (i, p) in products.iter().enumerate() {
        let loc = format!("product {}", p.name);
        if p.id.0 != i {
            out.push(Diagnostic::new(&loc, format!("id {} is not dense (expected {i})", p.id.0)));
        }
        if let Some(prev) = seen.insert(p.name.as_str(), i) {
            out.push(Diagnostic::new(&loc, format!("duplicate name (also product #{prev})")));
        }
        if p.features.is_empty() {
            out.push(Diagnostic::new(&loc, "empty feature set"));
        }
        if !finite_nonneg(p.direct_overhead.time) || !finite_nonneg(p.direct_overhead.climate) {
            out.push(Diagnostic::new(&loc, "overhead must be finite and >= 0"));
        }
        for b in &p.byproducts {
            if b.material.0 >= materials.len() {
                out.push(Diagnostic::new(&loc, format!("byproduct references unknown material {}", b.material)));
            }
            if !finite_nonneg(b.quantity) {
                out.push(Diagnostic::new(&loc, "byproduct quantity must be finite and >= 0"));
            }
        }
        for (s, slot) in p.inputs.iter().enumerate() {
            if slot.slot_index != s {
                out.push(Diagnostic::new(&loc, format!("slot {s} has slot_index {}", slot.slot_index)));
            }
            if !finite_nonneg(slot.quantity) {
                out.push(Diagnostic::new(&loc, format!("slot {s}: quantity must be finite and >= 0")));
            }
        }

        if p.level == 0 {
            let wraps_one = matches!(
                p.inputs.as_slice(),
                [InputSlot { quantity, default_supplier: Supplier::Material(m), .. }]
                    if *quantity == 1.0 && m.0 < materials.len()
            );
            if !wraps_one {
                out.push(Diagnostic::new(&loc, "level-0 must wrap exactly one raw material"));
            }
            continue;
        }
        for (s, slot) in p.inputs.iter().enumerate() {
            match slot.default_supplier {
                Supplier::Material(_) => out.push(Diagnostic::new(
                    &loc,
                    format!("slot {s}: only level-0 products may take a raw material"),
                )),
                Supplier::Product(q) => match products.get(q.0) {
                    None => out.push(Diagnostic::new(&loc, format!("slot {s}: unknown supplier {q}"))),
                    Some(sup) if sup.level >= p.level => out.push(Diagnostic::new(
                        &loc,
                        format!(
                            "level violation at slot {s}: supplier {} has level {} >= {}",
                            sup.name, sup.level, p.level
                        ),
                    )),
                    Some(_) => {}
                },
            }
        }
    }

    if let Some(cycle_member) = find_cycle(products) {
        out.push(Diagnostic::new(
            format!("product {}", products[cycle_member].name),
            "default-supplier graph contains a cycle",
        ));
    }
    out
}

/// Kahn's algorithm over default product edges; independent of the level rule.
fn find_cycle(products: &[ProductSpec]) -> Option<usize> {
    let n = products.len();
    let mut indegree = vec![0usize; n];
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, p) in products.iter().enumerate() {
        for slot in &p.inputs {
            if let Supplier::Product(q) = slot.default_supplier {
                if q.0 < n {
                    indegree[i] += 1;
                    users[q.0].push(i);
                }
            }
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut done = 0;
    while let Some(i) = ready.pop() {
        done += 1;
        for &u in &users[i] {
            indegree[u] -= 1;
            if indegree[u] == 0 {
                ready.push(u);
            }
        }
    }
    (done < n).then(|| (0..n).find(|&i| indegree[i] > 0).unwrap())
}

/// Units demanded per product.
#[derive(Clone, Debug, PartialEq)]
pub struct Demand {
    entries: BTreeMap<ProductId, f64>,
}

impl Demand {
    pub fn new(
        economy: &Economy,
        entries: impl IntoIterator<Item = (ProductId, f64)>,
    ) -> Result<Self, Error> {
        let mut map = BTreeMap::new();
        for (p, units) in entries {
            economy.product(p)?;
            if !finite_nonneg(units) {
                return Err(Error::InvalidDemand(format!(
                    "units for {} must be finite and >= 0",
                    economy.product_name(p)
                )));
            }
            *map.entry(p).or_insert(0.0) += units;
        }
        if map.is_empty() {
            return Err(Error::InvalidDemand("demand has no entries".into()));
        }
        Ok(Self { entries: map })
    }

    pub fn single(economy: &Economy, product: ProductId, units: f64) -> Result<Self, Error> {
        Self::new(economy, [(product, units)])
    }

    pub fn entries(&self) -> impl Iterator<Item = (ProductId, f64)> + '_ {
        self.entries.iter().map(|(&p, &u)| (p, u))
    }

    pub fn products(&self) -> impl Iterator<Item = ProductId> + '_ {
        self.entries.keys().copied()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            entries: self.entries.iter().map(|(&p, &u)| (p, u * factor)).collect(),
        }
    }
}

/// Current supplier for every input slot of every product.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    chosen: Vec<Vec<Supplier>>,
    version: u64,
}

impl Configuration {
    /// Every slot bound to its default supplier.
    pub fn default_for(economy: &Economy) -> Self {
        Self {
            chosen: economy
                .products()
                .iter()
                .map(|p| p.inputs.iter().map(|s| s.default_supplier).collect())
                .collect(),
            version: 0,
        }
    }

    pub fn supplier(&self, owner: ProductId, slot: usize) -> Supplier {
        self.chosen[owner.0][slot]
    }

    pub fn slots(&self, owner: ProductId) -> &[Supplier] {
        &self.chosen[owner.0]
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub(crate) fn set_supplier(&mut self, owner: ProductId, slot: usize, supplier: Supplier) {
        self.chosen[owner.0][slot] = supplier;
    }

    pub(crate) fn set_version(&mut self, version: u64) {
        self.version = version;
    }

    /// Same supplier choices, ignoring the version stamp.
    pub fn same_choices(&self, other: &Self) -> bool {
        self.chosen == other.chosen
    }

    /// Slot-level invariants: each chosen supplier shares the default's feature
    /// set and sits at a strictly lower level than its owner.
    pub fn audit(&self, economy: &Economy) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for p in economy.products() {
            let loc = format!("product {}", p.name);
            let Some(chosen) = self.chosen.get(p.id.0) else {
                out.push(Diagnostic::new(&loc, "missing from configuration"));
                continue;
            };
            if chosen.len() != p.inputs.len() {
                out.push(Diagnostic::new(&loc, "slot count mismatch"));
                continue;
            }
            for (slot, (&c, spec)) in chosen.iter().zip(&p.inputs).enumerate() {
                match (c, spec.default_supplier) {
                    (Supplier::Material(a), Supplier::Material(b)) if a == b => {}
                    (Supplier::Product(y), Supplier::Product(x)) => {
                        if !economy.same_features(x, y) {
                            out.push(Diagnostic::new(&loc, format!("slot {slot}: feature mismatch")));
                        }
                        if economy.products()[y.0].level >= p.level {
                            out.push(Diagnostic::new(&loc, format!("slot {slot}: level violation")));
                        }
                    }
                    _ => out.push(Diagnostic::new(&loc, format!("slot {slot}: supplier kind changed"))),
                }
            }
        }
        out
    }
}

/// Products transitively required by `demand` under `config`, ascending by id.
pub fn demand_closure(economy: &Economy, config: &Configuration, demand: &Demand) -> Vec<ProductId> {
    let mut seen = vec![false; economy.product_count()];
    let mut stack: Vec<ProductId> = demand.products().collect();
    while let Some(p) = stack.pop() {
        if std::mem::replace(&mut seen[p.0], true) {
            continue;
        }
        for s in config.slots(p) {
            if let Supplier::Product(q) = *s {
                if !seen[q.0] {
                    stack.push(q);
                }
            }
        }
    }
    seen.iter()
        .enumerate()
        .filter_map(|(i, &s)| s.then_some(ProductId(i)))
        .collect()
}
