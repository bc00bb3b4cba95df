//! Sustainability bitboards: one bit per raw material marking transitive
//! material content, maintained incrementally as suppliers change. Also the
//! byproduct reuse matching used for circularity reporting.

use std::collections::BTreeSet;
use std::fmt;

use crate::economy::{Configuration, Demand, Economy, MaterialId, ProductId, Supplier};
use crate::error::Error;
use crate::search::Move;

const WORD_BITS: usize = 64;

/// Fixed-width bitset over raw-material ids. Bits past `width` stay zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MaterialBitset {
    words: Vec<u64>,
    width: usize,
}

impl MaterialBitset {
    pub fn empty(width: usize) -> Self {
        Self {
            words: vec![0; width.div_ceil(WORD_BITS)],
            width,
        }
    }

    pub fn singleton(width: usize, bit: usize) -> Self {
        let mut b = Self::empty(width);
        b.insert(bit);
        b
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn insert(&mut self, bit: usize) {
        assert!(bit < self.width, "bit {bit} out of range for width {}", self.width);
        self.words[bit / WORD_BITS] |= 1 << (bit % WORD_BITS);
    }

    pub fn contains(&self, bit: usize) -> bool {
        bit < self.width && self.words[bit / WORD_BITS] >> (bit % WORD_BITS) & 1 == 1
    }

    pub fn union_with(&mut self, other: &Self) {
        debug_assert_eq!(self.width, other.width);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn is_superset(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == *b)
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                (w != 0).then(|| {
                    let bit = w.trailing_zeros() as usize;
                    w &= w - 1;
                    i * WORD_BITS + bit
                })
            })
        })
    }

    /// Whether unused high bits of the last word are clear.
    pub fn is_normalized(&self) -> bool {
        match (self.width % WORD_BITS, self.words.last()) {
            (0, _) | (_, None) => true,
            (used, Some(&last)) => last >> used == 0,
        }
    }
}

impl fmt::Debug for MaterialBitset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0b")?;
        for bit in (0..self.width).rev() {
            write!(f, "{}", u8::from(self.contains(bit)))?;
        }
        Ok(())
    }
}

/// OR of chosen children's bitsets; level-0 products yield a single bit.
fn compose_bits(economy: &Economy, config: &Configuration, table: &[MaterialBitset], p: ProductId) -> MaterialBitset {
    let mut out = MaterialBitset::empty(economy.material_count());
    for (slot, s) in economy.products()[p.0].inputs.iter().zip(config.slots(p)) {
        match *s {
            Supplier::Material(m) if slot.quantity > 0.0 => out.insert(m.0),
            Supplier::Material(_) => {}
            Supplier::Product(q) if slot.quantity > 0.0 => out.union_with(&table[q.0]),
            Supplier::Product(_) => {}
        }
    }
    out
}

/// Recursive union over chosen suppliers, computed from scratch.
pub fn bitset_from_scratch(
    economy: &Economy,
    config: &Configuration,
    product: ProductId,
) -> Result<MaterialBitset, Error> {
    economy.product(product)?;
    fn go(economy: &Economy, config: &Configuration, p: ProductId) -> MaterialBitset {
        let mut out = MaterialBitset::empty(economy.material_count());
        for (slot, s) in economy.products()[p.0].inputs.iter().zip(config.slots(p)) {
            if slot.quantity <= 0.0 {
                continue;
            }
            match *s {
                Supplier::Material(m) => out.insert(m.0),
                Supplier::Product(q) => out.union_with(&go(economy, config, q)),
            }
        }
        out
    }
    Ok(go(economy, config, product))
}

/// Reverse edges under a configuration: for each supplier product, the
/// `(owner, slot)` pairs currently bound to it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Users {
    by_supplier: Vec<Vec<(ProductId, usize)>>,
}

impl Users {
    pub fn build(economy: &Economy, config: &Configuration) -> Self {
        let mut by_supplier = vec![Vec::new(); economy.product_count()];
        for p in economy.products() {
            for (slot, s) in config.slots(p.id).iter().enumerate() {
                if let Supplier::Product(q) = *s {
                    by_supplier[q.0].push((p.id, slot));
                }
            }
        }
        Self { by_supplier }
    }

    pub fn of(&self, supplier: ProductId) -> &[(ProductId, usize)] {
        &self.by_supplier[supplier.0]
    }

    pub(crate) fn rebind(&mut self, owner: ProductId, slot: usize, from: ProductId, to: ProductId) {
        let list = &mut self.by_supplier[from.0];
        let pos = list
            .iter()
            .position(|&e| e == (owner, slot))
            .expect("reverse edge present");
        list.remove(pos);
        let list = &mut self.by_supplier[to.0];
        let pos = list.partition_point(|&e| e < (owner, slot));
        list.insert(pos, (owner, slot));
    }
}

/// Per-product bitsets stamped with the configuration version they describe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitsetTable {
    bits: Vec<MaterialBitset>,
    version: u64,
}

impl BitsetTable {
    pub fn build(economy: &Economy, config: &Configuration) -> Self {
        let mut bits = vec![MaterialBitset::empty(economy.material_count()); economy.product_count()];
        for p in economy.topological_order() {
            bits[p.0] = compose_bits(economy, config, &bits, p);
        }
        Self {
            bits,
            version: config.version(),
        }
    }

    pub fn get(&self, product: ProductId) -> &MaterialBitset {
        &self.bits[product.0]
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn entries(&self) -> &[MaterialBitset] {
        &self.bits
    }

    /// Refreshes after `mv` has been applied to `config` (whose version must
    /// be exactly one past the table's). Recomputes the owner, then walks
    /// reverse edges in level order, cutting off at unchanged bitsets.
    ///
    /// Returns the changed products with their previous bitsets, ascending by
    /// (level, id).
    pub fn update_on_move(
        &mut self,
        economy: &Economy,
        config: &Configuration,
        users: &Users,
        mv: &Move,
    ) -> Result<Vec<(ProductId, MaterialBitset)>, Error> {
        if config.version() != self.version + 1 {
            return Err(Error::StaleVersion {
                table: self.version,
                config: config.version(),
            });
        }
        let mut changed = Vec::new();
        let mut pending = BTreeSet::new();
        pending.insert((economy.products()[mv.owner.0].level, mv.owner));
        while let Some((_, p)) = pending.pop_first() {
            let fresh = compose_bits(economy, config, &self.bits, p);
            if fresh == self.bits[p.0] {
                continue;
            }
            changed.push((p, std::mem::replace(&mut self.bits[p.0], fresh)));
            for &(user, _) in users.of(p) {
                pending.insert((economy.products()[user.0].level, user));
            }
        }
        self.version = config.version();
        Ok(changed)
    }

    pub(crate) fn restore(&mut self, saved: Vec<(ProductId, MaterialBitset)>, version: u64) {
        for (p, b) in saved {
            self.bits[p.0] = b;
        }
        self.version = version;
    }
}

/// Per-material outcome of matching byproduct supply against extraction.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialReuse {
    pub material: MaterialId,
    pub gross: f64,
    pub supply: f64,
    pub reused: f64,
    pub net: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReuseReport {
    pub materials: Vec<MaterialReuse>,
    /// Total reused over total byproduct supply; 0 when nothing is supplied.
    pub circularity: f64,
}

impl ReuseReport {
    pub fn net_extraction(&self) -> Vec<f64> {
        self.materials.iter().map(|m| m.net).collect()
    }
}

/// Production units per product: demand plus what users consume, accumulated
/// top-down over chosen suppliers.
pub fn production_units(economy: &Economy, config: &Configuration, demand: &Demand) -> Vec<f64> {
    let mut units = vec![0.0; economy.product_count()];
    for (p, u) in demand.entries() {
        units[p.0] += u;
    }
    for p in economy.topological_order().into_iter().rev() {
        let u = units[p.0];
        if u == 0.0 {
            continue;
        }
        for (slot, s) in economy.products()[p.0].inputs.iter().zip(config.slots(p)) {
            if let Supplier::Product(q) = *s {
                units[q.0] += u * slot.quantity;
            }
        }
    }
    units
}

/// Greedy per-material matching of byproduct supply against gross
/// raw-material extraction.
pub fn reuse_match(economy: &Economy, config: &Configuration, demand: &Demand) -> ReuseReport {
    let units = production_units(economy, config, demand);
    let r = economy.material_count();
    let mut gross = vec![0.0; r];
    let mut supply = vec![0.0; r];
    for p in economy.products() {
        let u = units[p.id.0];
        if u == 0.0 {
            continue;
        }
        for (slot, s) in p.inputs.iter().zip(config.slots(p.id)) {
            if let Supplier::Material(m) = *s {
                gross[m.0] += u * slot.quantity;
            }
        }
        for b in &p.byproducts {
            supply[b.material.0] += u * b.quantity;
        }
    }
    let materials: Vec<MaterialReuse> = (0..r)
        .map(|i| {
            let reused = supply[i].min(gross[i]);
            MaterialReuse {
                material: MaterialId(i),
                gross: gross[i],
                supply: supply[i],
                reused,
                net: gross[i] - reused,
            }
        })
        .collect();
    let total_supply: f64 = supply.iter().sum();
    let circularity = if total_supply > 0.0 {
        (materials.iter().map(|m| m.reused).sum::<f64>() / total_supply).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ReuseReport { materials, circularity }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economy::demand_closure;
    use crate::fixture;
    use crate::lca::total_impact;

    fn bits(width: usize, ones: &[usize]) -> MaterialBitset {
        let mut b = MaterialBitset::empty(width);
        for &i in ones {
            b.insert(i);
        }
        b
    }

    #[test]
    fn bitset_basics() {
        let mut a = bits(130, &[0, 64, 129]);
        assert_eq!(a.words().len(), 3);
        assert_eq!(a.count_ones(), 3);
        assert!(a.contains(129) && !a.contains(128) && !a.contains(500));
        assert_eq!(a.iter_ones().collect::<Vec<_>>(), vec![0, 64, 129]);
        assert!(a.is_normalized());
        a.union_with(&bits(130, &[5]));
        assert!(a.is_superset(&bits(130, &[5, 64])));
        assert!(!bits(130, &[5]).is_superset(&a));
        assert_eq!(format!("{:?}", bits(3, &[0, 2])), "0b101");
    }

    #[test]
    #[should_panic]
    fn insert_out_of_range_panics() {
        bits(3, &[3]);
    }

    #[test]
    fn fixture_from_scratch() {
        let e = fixture::micro_economy();
        let c = Configuration::default_for(&e);
        let id = |n| e.product_id(n).unwrap();
        assert_eq!(bitset_from_scratch(&e, &c, id("B")).unwrap(), bits(3, &[0, 2]));
        assert_eq!(bitset_from_scratch(&e, &c, id("PL")).unwrap(), bits(3, &[2]));
        let mut moved = c.clone();
        moved.set_supplier(id("B"), 0, Supplier::Product(id("GR")));
        assert_eq!(bitset_from_scratch(&e, &moved, id("B")).unwrap(), bits(3, &[1, 2]));
        assert!(bitset_from_scratch(&e, &c, ProductId(9)).is_err());
    }

    fn apply(e: &Economy, c: &mut Configuration, users: &mut Users, mv: Move) {
        c.set_supplier(mv.owner, mv.slot, Supplier::Product(mv.to));
        c.set_version(c.version() + 1);
        users.rebind(mv.owner, mv.slot, mv.from, mv.to);
        let _ = e;
    }

    #[test]
    fn update_changes_only_owner_in_fixture() {
        let e = fixture::micro_economy();
        let id = |n| e.product_id(n).unwrap();
        let mut c = Configuration::default_for(&e);
        let mut users = Users::build(&e, &c);
        let mut table = BitsetTable::build(&e, &c);
        let mv = Move {
            owner: id("B"),
            slot: 0,
            from: id("G"),
            to: id("GR"),
        };
        apply(&e, &mut c, &mut users, mv);
        let changed = table.update_on_move(&e, &c, &users, &mv).unwrap();
        assert_eq!(changed, vec![(id("B"), bits(3, &[0, 2]))]);
        assert_eq!(table.get(id("B")), &bits(3, &[1, 2]));
        assert_eq!(table, BitsetTable::build(&e, &c));
    }

    #[test]
    fn identical_content_substitute_stops_immediately() {
        // G2 has the same recipe as G, so swapping yields the same bits.
        let e = fixture::micro_economy();
        let mut products = e.products().to_vec();
        let mut g2 = products[3].clone();
        g2.id = ProductId(6);
        g2.name = "G2".into();
        products.push(g2);
        let e = Economy::new(e.raw_materials().to_vec(), products, "circloop/1").unwrap();
        let id = |n| e.product_id(n).unwrap();
        let mut c = Configuration::default_for(&e);
        let mut users = Users::build(&e, &c);
        let mut table = BitsetTable::build(&e, &c);
        let mv = Move {
            owner: id("B"),
            slot: 0,
            from: id("G"),
            to: id("G2"),
        };
        apply(&e, &mut c, &mut users, mv);
        assert!(table.update_on_move(&e, &c, &users, &mv).unwrap().is_empty());
        assert_eq!(table.version(), c.version());
    }

    #[test]
    fn deep_chain_propagates_to_every_ancestor() {
        let e = fixture::single_input_chain(100);
        let mut c = Configuration::default_for(&e);
        let mut users = Users::build(&e, &c);
        let mut table = BitsetTable::build(&e, &c);
        let c1 = e.product_id("C1").unwrap();
        let mv = Move {
            owner: c1,
            slot: 0,
            from: e.product_id("S").unwrap(),
            to: e.product_id("RS").unwrap(),
        };
        apply(&e, &mut c, &mut users, mv);
        let changed = table.update_on_move(&e, &c, &users, &mv).unwrap();
        assert_eq!(changed.len(), 100);
        let names: BTreeSet<String> = changed.iter().map(|(p, _)| e.product_name(*p).to_string()).collect();
        assert_eq!(names, (1..=100).map(|i| format!("C{i}")).collect());
        for p in e.products() {
            assert_eq!(table.get(p.id), &bitset_from_scratch(&e, &c, p.id).unwrap());
        }
    }

    #[test]
    fn stale_table_is_rejected() {
        let e = fixture::micro_economy();
        let id = |n| e.product_id(n).unwrap();
        let mut c = Configuration::default_for(&e);
        let mut users = Users::build(&e, &c);
        let mut table = BitsetTable::build(&e, &c);
        let mv = Move {
            owner: id("B"),
            slot: 0,
            from: id("G"),
            to: id("GR"),
        };
        // no version bump: the table cannot tell this is a new state
        c.set_supplier(mv.owner, 0, Supplier::Product(mv.to));
        users.rebind(mv.owner, 0, mv.from, mv.to);
        assert!(matches!(
            table.update_on_move(&e, &c, &users, &mv),
            Err(Error::StaleVersion { .. })
        ));
    }

    #[test]
    fn reuse_fixture_example() {
        let e = fixture::micro_with_byproduct("steel", 0.5);
        let c = Configuration::default_for(&e);
        let b = e.product_id("B").unwrap();
        let d = Demand::single(&e, b, 1.0).unwrap();
        let units = production_units(&e, &c, &d);
        assert_eq!(units[e.product_id("G").unwrap().0], 1.0);
        let r = reuse_match(&e, &c, &d);
        let steel = &r.materials[0];
        assert_eq!((steel.gross, steel.supply, steel.reused, steel.net), (2.0, 0.5, 0.5, 1.5));
        assert_eq!(r.circularity, 1.0);
    }

    #[test]
    fn reuse_without_byproducts() {
        let e = fixture::micro_economy();
        let c = Configuration::default_for(&e);
        let d = Demand::single(&e, e.product_id("B").unwrap(), 1.0).unwrap();
        let r = reuse_match(&e, &c, &d);
        assert_eq!(r.circularity, 0.0);
        for m in &r.materials {
            assert_eq!(m.net, m.gross);
            assert_eq!(m.reused, 0.0);
        }
        // gross extraction equals the material part of the impact vector
        let impact = total_impact(&e, &c, &d).unwrap();
        assert_eq!(r.materials.iter().map(|m| m.gross).collect::<Vec<_>>(), impact.materials);
    }

    #[test]
    fn reuse_of_unextracted_material() {
        // recycled_steel is never extracted under the default configuration
        let e = fixture::micro_with_byproduct("recycled_steel", 0.5);
        let c = Configuration::default_for(&e);
        let d = Demand::single(&e, e.product_id("B").unwrap(), 1.0).unwrap();
        let r = reuse_match(&e, &c, &d);
        assert_eq!(r.materials[1].supply, 0.5);
        assert_eq!(r.materials[1].reused, 0.0);
        assert!(r.circularity < 1.0);
        assert_eq!(r.circularity, 0.0);
        assert_eq!(demand_closure(&e, &c, &d).len(), 4);
    }
}
