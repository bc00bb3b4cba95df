//! Move generation, make/unmake with incremental LCA and bitset updates, and
//! the search algorithms over supplier configurations.

mod beam;
mod exhaustive;
mod greedy;
mod mcts;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::time::Duration;

pub use beam::search_beam;
pub use exhaustive::{search_exhaustive, DEFAULT_EXHAUSTIVE_CAP};
pub use greedy::search_greedy;
pub use mcts::{search_mcts, MctsParams};

use crate::bitset::{bitset_from_scratch, reuse_match, BitsetTable, MaterialBitset, Users};
use crate::economy::{demand_closure, Configuration, Demand, Economy, ProductId, Supplier, TOLERANCE};
use crate::error::Error;
use crate::lca::{
    check_bounds, lca_apply_replacement, scalarize, FeasibilityReport, LcaMemo, LcaTable, LcaVector, PlanetaryBounds,
    Weights,
};

/// Replace the supplier bound at `(owner, slot)`: `from` becomes `to`.
///
/// Field order gives the lexicographic move ordering used for tie-breaks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Move {
    pub owner: ProductId,
    pub slot: usize,
    pub from: ProductId,
    pub to: ProductId,
}

/// Previous LCA vectors of patched products, packed as
/// `[time, climate, materials..]` per product.
#[derive(Debug, Default)]
struct SavedLca {
    ids: Vec<ProductId>,
    values: Vec<f64>,
}

impl SavedLca {
    #[inline]
    fn save(&mut self, p: ProductId, row: &[f64]) {
        self.ids.push(p);
        self.values.extend_from_slice(row);
    }

    fn restore(self, table: &mut LcaTable) {
        let width = table.width();
        for (p, chunk) in self.ids.iter().zip(self.values.chunks_exact(width)).rev() {
            table.row_mut(*p).copy_from_slice(chunk);
        }
    }
}

/// Saved state for reverting one [`SearchState::apply_move`].
#[derive(Debug)]
#[must_use = "an applied move can only be reverted with its token"]
pub struct UndoToken {
    mv: Move,
    id: u64,
    prev_version: u64,
    saved_lca: SavedLca,
    saved_bits: Vec<(ProductId, MaterialBitset)>,
}

impl UndoToken {
    pub fn mv(&self) -> &Move {
        &self.mv
    }

    /// Products whose bitset changed when the move was applied.
    pub fn changed_bitsets(&self) -> impl Iterator<Item = ProductId> + '_ {
        self.saved_bits.iter().map(|(p, _)| *p)
    }
}

/// What a plan optimizes: scalarization weights, caps, and whether byproduct
/// reuse reduces the material indicators. `audit` makes every search state
/// re-check its caches from scratch after each apply and undo.
#[derive(Clone, Debug, PartialEq)]
pub struct Objective {
    pub weights: Weights,
    pub bounds: PlanetaryBounds,
    pub reuse_credit: bool,
    pub audit: bool,
}

impl Objective {
    pub fn new(weights: Weights, bounds: PlanetaryBounds) -> Self {
        Self {
            weights,
            bounds,
            reuse_credit: false,
            audit: false,
        }
    }

    pub fn validate(&self, economy: &Economy) -> Result<(), Error> {
        self.weights.validate()?;
        self.bounds.validate()?;
        let r = economy.material_count();
        for len in [self.weights.materials.len(), self.bounds.max_materials.len()] {
            if len != r {
                return Err(Error::DimensionMismatch { expected: r, actual: len });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub impact: LcaVector,
    pub score: f64,
    pub feasibility: FeasibilityReport,
    /// Sum of excesses over violated caps; zero iff feasible.
    pub total_violation: f64,
}

impl Evaluation {
    fn from_impact(impact: LcaVector, objective: &Objective) -> Result<Self, Error> {
        let score = scalarize(&impact, &objective.weights)?;
        let feasibility = check_bounds(&impact, &objective.bounds)?;
        let total_violation = feasibility.total_excess();
        Ok(Self {
            impact,
            score,
            feasibility,
            total_violation,
        })
    }

    pub fn feasible(&self) -> bool {
        self.feasibility.feasible
    }
}

fn cmp_tol(a: f64, b: f64) -> Ordering {
    if (a - b).abs() <= TOLERANCE {
        Ordering::Equal
    } else {
        a.total_cmp(&b)
    }
}

/// Search ordering without the move-list tie-break: feasible before
/// infeasible, then lower score, then lower total violation.
pub fn rank_evaluations(a: &Evaluation, b: &Evaluation) -> Ordering {
    b.feasible()
        .cmp(&a.feasible())
        .then_with(|| cmp_tol(a.score, b.score))
        .then_with(|| cmp_tol(a.total_violation, b.total_violation))
}

/// Full ordering: [`rank_evaluations`], then the lexicographically smaller
/// canonical move list.
pub fn compare_candidates(a: &Evaluation, a_moves: &[Move], b: &Evaluation, b_moves: &[Move]) -> Ordering {
    rank_evaluations(a, b).then_with(|| a_moves.cmp(b_moves))
}

/// From-scratch evaluation of `config` against `demand`.
pub fn evaluate(
    economy: &Economy,
    config: &Configuration,
    demand: &Demand,
    objective: &Objective,
) -> Result<Evaluation, Error> {
    let mut memo = LcaMemo::new();
    let mut impact = LcaVector::zeros(economy.material_count());
    for (p, units) in demand.entries() {
        impact.axpy(units, &memo.get(economy, config, p)?);
    }
    if objective.reuse_credit {
        impact.materials = reuse_match(economy, config, demand).net_extraction();
    }
    Evaluation::from_impact(impact, objective)
}

/// Eligible suppliers for a slot currently bound to `current`: its feature
/// class restricted to levels below the owner, ascending by id.
fn slot_options<'a>(economy: &'a Economy, owner: ProductId, current: ProductId) -> impl Iterator<Item = ProductId> + 'a {
    let level = economy.products()[owner.0].level;
    economy
        .feature_class(current)
        .iter()
        .copied()
        .filter(move |q| economy.products()[q.0].level < level)
}

/// One move per (reachable slot, eligible substitute), ordered by
/// (owner, slot, target).
pub fn legal_moves(economy: &Economy, config: &Configuration, demand: &Demand) -> Vec<Move> {
    let mut out = Vec::new();
    for owner in demand_closure(economy, config, demand) {
        for (slot, s) in config.slots(owner).iter().enumerate() {
            let Supplier::Product(from) = *s else { continue };
            out.extend(
                slot_options(economy, owner, from)
                    .filter(|&to| to != from)
                    .map(|to| Move { owner, slot, from, to }),
            );
        }
    }
    out
}

/// Slots of every product reachable from `demand` under some choice of
/// eligible suppliers, restricted to slots with at least one alternative;
/// ordered by (owner level, owner id, slot).
pub fn potential_slots(economy: &Economy, demand: &Demand) -> Vec<(ProductId, usize)> {
    let mut seen = vec![false; economy.product_count()];
    let mut stack: Vec<ProductId> = demand.products().collect();
    let mut slots = Vec::new();
    while let Some(p) = stack.pop() {
        if std::mem::replace(&mut seen[p.0], true) {
            continue;
        }
        for (slot, input) in economy.products()[p.0].inputs.iter().enumerate() {
            let Supplier::Product(x) = input.default_supplier else { continue };
            let mut options = 0;
            for q in slot_options(economy, p, x) {
                options += 1;
                stack.push(q);
            }
            if options > 1 {
                slots.push((p, slot));
            }
        }
    }
    slots.sort_by_key(|&(p, s)| (economy.products()[p.0].level, p, s));
    slots
}

/// Mutable search state: a configuration plus incrementally maintained
/// per-product LCA vectors, material bitsets and reverse edges.
#[derive(Clone, Debug)]
pub struct SearchState<'e> {
    economy: &'e Economy,
    demand: Demand,
    config: Configuration,
    users: Users,
    lca: LcaTable,
    bits: BitsetTable,
    undo_stack: Vec<u64>,
    next_token: u64,
    audit: bool,
}

impl<'e> SearchState<'e> {
    /// State at the default configuration.
    pub fn new(economy: &'e Economy, demand: Demand) -> Self {
        Self::with_config(economy, demand, Configuration::default_for(economy))
    }

    pub fn with_config(economy: &'e Economy, demand: Demand, config: Configuration) -> Self {
        let lca = LcaTable::build(economy, &config);
        Self {
            economy,
            demand,
            users: Users::build(economy, &config),
            bits: BitsetTable::build(economy, &config),
            config,
            lca,
            undo_stack: Vec::new(),
            next_token: 0,
            audit: false,
        }
    }

    /// When set, every apply/undo is checked against from-scratch recomputation.
    pub fn set_audit(&mut self, on: bool) {
        self.audit = on;
    }

    pub fn economy(&self) -> &'e Economy {
        self.economy
    }

    pub fn demand(&self) -> &Demand {
        &self.demand
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn bitsets(&self) -> &BitsetTable {
        &self.bits
    }

    /// Cached impact of one unit of `product`.
    pub fn lca(&self, product: ProductId) -> LcaVector {
        self.lca.vector(product)
    }

    pub fn lca_table(&self) -> &LcaTable {
        &self.lca
    }

    pub fn depth(&self) -> usize {
        self.undo_stack.len()
    }

    pub fn legal_moves(&self) -> Vec<Move> {
        legal_moves(self.economy, &self.config, &self.demand)
    }

    fn check_legal(&self, mv: &Move) -> Result<(), Error> {
        let e = self.economy;
        let owner = e.product(mv.owner)?;
        e.product(mv.to)?;
        e.product(mv.from)?;
        if mv.slot >= owner.inputs.len() {
            return Err(Error::IllegalMove(format!("{} has no slot {}", owner.name, mv.slot)));
        }
        if self.config.supplier(mv.owner, mv.slot) != Supplier::Product(mv.from) {
            return Err(Error::IllegalMove(format!(
                "{}.slot{} is not bound to {}",
                owner.name,
                mv.slot,
                e.product_name(mv.from)
            )));
        }
        if mv.to == mv.from || !e.same_features(mv.from, mv.to) {
            return Err(Error::IllegalMove(format!(
                "{} is not a substitute for {}",
                e.product_name(mv.to),
                e.product_name(mv.from)
            )));
        }
        if e.products()[mv.to.0].level >= owner.level {
            return Err(Error::IllegalMove(format!(
                "{} (level {}) cannot supply {} (level {})",
                e.product_name(mv.to),
                e.products()[mv.to.0].level,
                owner.name,
                owner.level
            )));
        }
        Ok(())
    }

    /// Rebinds one slot and patches the cached LCA vectors of the owner and
    /// its transitive users, then refreshes bitsets. The state is untouched
    /// if the move is illegal.
    pub fn apply_move(&mut self, mv: Move) -> Result<UndoToken, Error> {
        self.check_legal(&mv)?;
        let e = self.economy;
        let prev_version = self.config.version();
        let q = e.products()[mv.owner.0].inputs[mv.slot].quantity;

        self.config.set_supplier(mv.owner, mv.slot, Supplier::Product(mv.to));
        self.config.set_version(prev_version + 1);
        self.users.rebind(mv.owner, mv.slot, mv.from, mv.to);

        let parent = self.lca.vector(mv.owner);
        let patched = lca_apply_replacement(&parent, q, &self.lca.vector(mv.from), &self.lca.vector(mv.to))?;
        let w = self.lca.width();
        let mut saved_lca = SavedLca {
            ids: Vec::with_capacity(16),
            values: Vec::with_capacity(16 * w),
        };
        saved_lca.save(mv.owner, self.lca.row(mv.owner));
        self.lca.set(mv.owner, &patched);
        let mut delta: Vec<f64> = self
            .lca
            .row(mv.owner)
            .iter()
            .zip(std::iter::once(&parent.time).chain([&parent.climate]).chain(&parent.materials))
            .map(|(new, old)| new - old)
            .collect();

        // deltas are merged per user and flushed in (level, id) order; a lone
        // user with nothing else pending is patched directly
        let mut pending: BTreeMap<(u32, ProductId), Vec<f64>> = BTreeMap::new();
        let mut current = mv.owner;
        let mut nonzero = delta.iter().any(|&d| d != 0.0);
        loop {
            if nonzero {
                let users = self.users.of(current);
                if let ([(user, slot)], true) = (users, pending.is_empty()) {
                    let (user, slot) = (*user, *slot);
                    let q = e.products()[user.0].inputs[slot].quantity;
                    let row = self.lca.row_mut(user);
                    saved_lca.save(user, row);
                    for (r, d) in row.iter_mut().zip(delta.iter_mut()) {
                        *d *= q;
                        *r += *d;
                    }
                    nonzero = q != 0.0;
                    current = user;
                    continue;
                }
                for &(user, slot) in users {
                    let q = e.products()[user.0].inputs[slot].quantity;
                    let acc = pending
                        .entry((e.products()[user.0].level, user))
                        .or_insert_with(|| vec![0.0; w]);
                    for (a, d) in acc.iter_mut().zip(&delta) {
                        *a += q * d;
                    }
                }
            }
            let Some(((_, next), d)) = pending.pop_first() else { break };
            let row = self.lca.row_mut(next);
            saved_lca.save(next, row);
            for (r, d) in row.iter_mut().zip(&d) {
                *r += d;
            }
            nonzero = d.iter().any(|&x| x != 0.0);
            current = next;
            delta = d;
        }

        let saved_bits = self.bits.update_on_move(e, &self.config, &self.users, &mv)?;

        let id = self.next_token;
        self.next_token += 1;
        self.undo_stack.push(id);
        let token = UndoToken {
            mv,
            id,
            prev_version,
            saved_lca,
            saved_bits,
        };
        if self.audit {
            self.run_audit()?;
        }
        Ok(token)
    }

    /// Reverts the most recent un-undone apply.
    pub fn undo_move(&mut self, token: UndoToken) -> Result<(), Error> {
        if self.undo_stack.last() != Some(&token.id) {
            return Err(Error::UndoOutOfOrder { token: token.id });
        }
        self.undo_stack.pop();
        let mv = token.mv;
        self.config.set_supplier(mv.owner, mv.slot, Supplier::Product(mv.from));
        self.config.set_version(token.prev_version);
        self.users.rebind(mv.owner, mv.slot, mv.to, mv.from);
        token.saved_lca.restore(&mut self.lca);
        self.bits.restore(token.saved_bits, token.prev_version);
        if self.audit {
            self.run_audit()?;
        }
        Ok(())
    }

    /// Compares every cache against from-scratch recomputation.
    pub fn run_audit(&self) -> Result<(), Error> {
        let e = self.economy;
        let diags = self.config.audit(e);
        if let Some(d) = diags.first() {
            return Err(Error::Audit(d.to_string()));
        }
        let mut memo = LcaMemo::new();
        for p in e.products() {
            let fresh = memo.get(e, &self.config, p.id)?;
            let diff = fresh.max_abs_diff(&self.lca.vector(p.id));
            if diff > TOLERANCE {
                return Err(Error::Audit(format!("lca of {} off by {diff:e}", p.name)));
            }
            if bitset_from_scratch(e, &self.config, p.id)? != *self.bits.get(p.id) {
                return Err(Error::Audit(format!("bitset of {} differs", p.name)));
            }
        }
        if Users::build(e, &self.config) != self.users {
            return Err(Error::Audit("reverse edges out of sync".into()));
        }
        Ok(())
    }

    /// Demand-weighted impact from the cached vectors.
    pub fn impact(&self) -> LcaVector {
        let mut impact = LcaVector::zeros(self.economy.material_count());
        for (p, units) in self.demand.entries() {
            self.lca.accumulate(p, units, &mut impact);
        }
        impact
    }

    pub fn evaluate(&self, objective: &Objective) -> Result<Evaluation, Error> {
        let mut impact = self.impact();
        if objective.reuse_credit {
            impact.materials = reuse_match(self.economy, &self.config, &self.demand).net_extraction();
        }
        Evaluation::from_impact(impact, objective)
    }

    /// Difference from the default configuration on reachable slots, sorted
    /// by (owner, slot).
    pub fn canonical_moves(&self) -> Vec<Move> {
        canonical_moves(self.economy, &self.config, &self.demand)
    }
}

pub fn canonical_moves(economy: &Economy, config: &Configuration, demand: &Demand) -> Vec<Move> {
    let mut out = Vec::new();
    for owner in demand_closure(economy, config, demand) {
        for (slot, (input, s)) in economy.products()[owner.0].inputs.iter().zip(config.slots(owner)).enumerate() {
            if let (Supplier::Product(from), Supplier::Product(to)) = (input.default_supplier, *s) {
                if from != to {
                    out.push(Move { owner, slot, from, to });
                }
            }
        }
    }
    out
}

/// Number of legal move sequences of exactly `depth` moves, by make/unmake.
pub fn perft(state: &mut SearchState<'_>, depth: u32) -> Result<u64, Error> {
    if depth == 0 {
        return Ok(1);
    }
    let moves = state.legal_moves();
    if depth == 1 {
        return Ok(moves.len() as u64);
    }
    let mut count = 0;
    for mv in moves {
        let token = state.apply_move(mv)?;
        count += perft(state, depth - 1)?;
        state.undo_move(token)?;
    }
    Ok(count)
}

/// Applies `moves` in order to the default configuration.
pub fn replay(economy: &Economy, demand: &Demand, moves: &[Move]) -> Result<Configuration, Error> {
    let mut state = SearchState::new(economy, demand.clone());
    for &mv in moves {
        // tokens are dropped: the replayed state is kept
        let _ = state.apply_move(mv)?;
    }
    Ok(state.config)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    /// Moves from the default configuration, sorted by (owner, slot).
    pub moves: Vec<Move>,
    pub evaluation: Evaluation,
    /// Configurations evaluated.
    pub nodes: u64,
    pub wall_time: Duration,
    pub algorithm: &'static str,
    pub seed: u64,
}

impl SearchResult {
    /// Builds a result whose evaluation is recomputed from scratch on the
    /// replayed move list, so replaying always reproduces it.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn finish(
        economy: &Economy,
        demand: &Demand,
        objective: &Objective,
        moves: Vec<Move>,
        nodes: u64,
        started: std::time::Instant,
        algorithm: &'static str,
        seed: u64,
    ) -> Result<Self, Error> {
        let config = replay(economy, demand, &moves)?;
        let evaluation = evaluate(economy, &config, demand, objective)?;
        Ok(Self {
            moves,
            evaluation,
            nodes,
            wall_time: started.elapsed(),
            algorithm,
            seed,
        })
    }

    /// Equal apart from wall time.
    pub fn same_outcome(&self, other: &Self) -> bool {
        self.moves == other.moves
            && self.evaluation == other.evaluation
            && self.nodes == other.nodes
            && self.algorithm == other.algorithm
            && self.seed == other.seed
    }
}

/// Tracks the best (evaluation, canonical moves) pair seen so far.
#[derive(Debug)]
pub(crate) struct Incumbent {
    pub evaluation: Evaluation,
    pub moves: Vec<Move>,
}

impl Incumbent {
    pub fn from_state(state: &SearchState<'_>, objective: &Objective) -> Result<Self, Error> {
        Ok(Self {
            evaluation: state.evaluate(objective)?,
            moves: state.canonical_moves(),
        })
    }

    /// Offers the state's evaluation; returns true if it became the incumbent.
    pub fn offer(&mut self, state: &SearchState<'_>, evaluation: Evaluation) -> bool {
        let better = match rank_evaluations(&evaluation, &self.evaluation) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => {
                let moves = state.canonical_moves();
                if moves < self.moves {
                    self.moves = moves;
                    self.evaluation = evaluation;
                }
                return false;
            }
        };
        if better {
            self.moves = state.canonical_moves();
            self.evaluation = evaluation;
        }
        better
    }
}
