use std::time::Instant;

use crate::economy::{Demand, Economy, ProductId, Supplier};
use crate::error::Error;

use super::{slot_options, Incumbent, Move, Objective, SearchResult, SearchState};

pub const DEFAULT_EXHAUSTIVE_CAP: u64 = 1_000_000;

struct Enumerator<'s, 'e> {
    state: &'s mut SearchState<'e>,
    objective: &'s Objective,
    expanded: Vec<bool>,
    pending: Vec<(ProductId, usize)>,
    best: Option<Incumbent>,
    nodes: u64,
    cap: u64,
}

impl Enumerator<'_, '_> {
    /// Pushes `p`'s product slots so they pop in slot order. Returns how many.
    fn expand(&mut self, p: ProductId) -> usize {
        if std::mem::replace(&mut self.expanded[p.0], true) {
            return 0;
        }
        let before = self.pending.len();
        let inputs = &self.state.economy().products()[p.0].inputs;
        for (slot, input) in inputs.iter().enumerate().rev() {
            if matches!(input.default_supplier, Supplier::Product(_)) {
                self.pending.push((p, slot));
            }
        }
        self.pending.len() - before
    }

    fn leaf(&mut self) -> Result<(), Error> {
        self.nodes += 1;
        if self.nodes > self.cap {
            return Err(Error::CapExceeded { cap: self.cap });
        }
        let evaluation = self.state.evaluate(self.objective)?;
        match &mut self.best {
            Some(best) => {
                best.offer(self.state, evaluation);
            }
            None => {
                self.best = Some(Incumbent {
                    evaluation,
                    moves: self.state.canonical_moves(),
                })
            }
        }
        Ok(())
    }

    /// Decides pending slots top-down; a supplier's slots become pending only
    /// once some decision makes it reachable, so every leaf is a distinct
    /// reachable assignment.
    fn search(&mut self) -> Result<(), Error> {
        let Some((owner, slot)) = self.pending.pop() else {
            return self.leaf();
        };
        let economy = self.state.economy();
        let Supplier::Product(default) = economy.products()[owner.0].inputs[slot].default_supplier else {
            unreachable!("only product slots are pending")
        };
        for option in slot_options(economy, owner, default) {
            let token = if option == default {
                None
            } else {
                Some(self.state.apply_move(Move {
                    owner,
                    slot,
                    from: default,
                    to: option,
                })?)
            };
            let was_expanded = self.expanded[option.0];
            let pushed = self.expand(option);
            // on error the enumerator is abandoned, so skip the restore
            self.search()?;
            self.pending.truncate(self.pending.len() - pushed);
            self.expanded[option.0] = was_expanded;
            if let Some(token) = token {
                self.state.undo_move(token)?;
            }
        }
        self.pending.push((owner, slot));
        Ok(())
    }
}

/// Enumerates every reachable assignment and returns the global optimum
/// under the evaluation ordering. Fails once more than `cap` assignments
/// have been visited.
pub fn search_exhaustive(
    economy: &Economy,
    demand: &Demand,
    objective: &Objective,
    cap: u64,
) -> Result<SearchResult, Error> {
    objective.validate(economy)?;
    let started = Instant::now();
    let mut state = SearchState::new(economy, demand.clone());
    state.set_audit(objective.audit);
    let mut e = Enumerator {
        state: &mut state,
        objective,
        expanded: vec![false; economy.product_count()],
        pending: Vec::new(),
        best: None,
        nodes: 0,
        cap,
    };
    let roots: Vec<ProductId> = demand.products().collect();
    for p in roots.into_iter().rev() {
        e.expand(p);
    }
    e.search()?;
    let nodes = e.nodes;
    let best = e.best.expect("at least one assignment");
    SearchResult::finish(economy, demand, objective, best.moves, nodes, started, "exhaustive", 0)
}
