use std::collections::HashSet;
use std::time::Instant;

use crate::economy::{Demand, Economy, ProductId, Supplier};
use crate::error::Error;

use super::{compare_candidates, potential_slots, slot_options, Evaluation, Move, Objective, SearchResult, SearchState};

struct Candidate {
    /// Chosen supplier per processed slot, in processing order.
    choice: Vec<ProductId>,
    evaluation: Evaluation,
    moves: Vec<Move>,
}

/// Beam search over supplier assignments. Slots of every potentially
/// reachable product are decided suppliers-first; after each slot only the
/// `width` best partial assignments (remaining slots at default) survive.
pub fn search_beam(economy: &Economy, demand: &Demand, objective: &Objective, width: usize) -> Result<SearchResult, Error> {
    if width == 0 {
        return Err(Error::InvalidParams("beam width must be >= 1".into()));
    }
    objective.validate(economy)?;
    let started = Instant::now();
    let slots = potential_slots(economy, demand);
    let defaults: Vec<ProductId> = slots
        .iter()
        .map(|&(p, s)| match economy.products()[p.0].inputs[s].default_supplier {
            Supplier::Product(q) => q,
            Supplier::Material(_) => unreachable!("potential slots are product slots"),
        })
        .collect();
    let closure = PotentialClosure::new(economy, demand, &slots);
    let mut state = SearchState::new(economy, demand.clone());
    state.set_audit(objective.audit);
    let mut nodes = 1;
    let mut beam = vec![Candidate {
        choice: Vec::new(),
        evaluation: state.evaluate(objective)?,
        moves: Vec::new(),
    }];

    for (i, &(owner, _)) in slots.iter().enumerate() {
        let default = defaults[i];
        let options: Vec<ProductId> = std::iter::once(default)
            .chain(slot_options(economy, owner, default).filter(|&q| q != default))
            .collect();
        let mut next = Vec::with_capacity(beam.len() * options.len());
        let mut seen = HashSet::new();
        for parent in &beam {
            for &option in &options {
                let mut choice = parent.choice.clone();
                choice.push(option);
                closure.canonicalize(&mut choice, &defaults);
                if !seen.insert(choice.clone()) {
                    continue;
                }
                let mut tokens = Vec::new();
                for (j, &to) in choice.iter().enumerate() {
                    if to != defaults[j] {
                        let (owner, slot) = slots[j];
                        tokens.push(state.apply_move(Move {
                            owner,
                            slot,
                            from: defaults[j],
                            to,
                        })?);
                    }
                }
                let evaluation = state.evaluate(objective)?;
                let moves = state.canonical_moves();
                for token in tokens.into_iter().rev() {
                    state.undo_move(token)?;
                }
                nodes += 1;
                next.push(Candidate {
                    choice,
                    evaluation,
                    moves,
                });
            }
        }
        // stable: among equal candidates the earlier (default-first) survives
        next.sort_by(|a, b| compare_candidates(&a.evaluation, &a.moves, &b.evaluation, &b.moves));
        next.truncate(width);
        beam = next;
    }

    // sorted best-first
    let best = beam.into_iter().next().expect("beam is never empty");
    SearchResult::finish(economy, demand, objective, best.moves, nodes, started, "beam", 0)
}

/// Which products can still be reached from demand once a prefix of the
/// decision slots is fixed and the rest may take any option.
struct PotentialClosure<'e> {
    economy: &'e Economy,
    roots: Vec<ProductId>,
    /// Per product: `(slot, decision index)` for slots beam decides.
    decided: Vec<Vec<(usize, usize)>>,
}

impl<'e> PotentialClosure<'e> {
    fn new(economy: &'e Economy, demand: &Demand, slots: &[(ProductId, usize)]) -> Self {
        let mut decided = vec![Vec::new(); economy.product_count()];
        for (i, &(p, s)) in slots.iter().enumerate() {
            decided[p.0].push((s, i));
        }
        Self {
            economy,
            roots: demand.products().collect(),
            decided,
        }
    }

    /// Resets choices whose owner no completion can reach, so that
    /// candidates differing only there compare equal.
    fn canonicalize(&self, choice: &mut [ProductId], defaults: &[ProductId]) {
        let e = self.economy;
        let mut seen = vec![false; e.product_count()];
        let mut stack = self.roots.clone();
        while let Some(p) = stack.pop() {
            if std::mem::replace(&mut seen[p.0], true) {
                continue;
            }
            for (slot, input) in e.products()[p.0].inputs.iter().enumerate() {
                let Supplier::Product(x) = input.default_supplier else { continue };
                match self.decided[p.0].iter().find(|&&(s, _)| s == slot) {
                    Some(&(_, i)) if i < choice.len() => stack.push(choice[i]),
                    Some(_) => stack.extend(slot_options(e, p, x)),
                    None => stack.push(x),
                }
            }
        }
        for (p, decisions) in self.decided.iter().enumerate() {
            if !seen[p] {
                for &(_, i) in decisions {
                    if i < choice.len() {
                        choice[i] = defaults[i];
                    }
                }
            }
        }
    }
}
