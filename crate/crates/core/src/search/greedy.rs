use std::cmp::Ordering;
use std::time::Instant;

use crate::economy::{Demand, Economy};
use crate::error::Error;

use super::{compare_candidates, rank_evaluations, Evaluation, Move, Objective, SearchResult, SearchState};

/// Steepest descent: applies the best strictly-improving single move until
/// none exists or `max_steps` moves have been made.
pub fn search_greedy(
    economy: &Economy,
    demand: &Demand,
    objective: &Objective,
    max_steps: usize,
) -> Result<SearchResult, Error> {
    objective.validate(economy)?;
    let started = Instant::now();
    let mut state = SearchState::new(economy, demand.clone());
    state.set_audit(objective.audit);
    let mut current = state.evaluate(objective)?;
    let mut nodes = 1;

    for _ in 0..max_steps {
        let mut best: Option<(Move, Evaluation, Vec<Move>)> = None;
        for mv in state.legal_moves() {
            let token = state.apply_move(mv)?;
            let eval = state.evaluate(objective)?;
            nodes += 1;
            let moves = state.canonical_moves();
            state.undo_move(token)?;
            let replace = match &best {
                None => true,
                Some((_, b_eval, b_moves)) => compare_candidates(&eval, &moves, b_eval, b_moves) == Ordering::Less,
            };
            if replace {
                best = Some((mv, eval, moves));
            }
        }
        match best {
            Some((mv, eval, _)) if rank_evaluations(&eval, &current) == Ordering::Less => {
                // the descent never backtracks, so tokens are not kept
                let _ = state.apply_move(mv)?;
                current = eval;
            }
            _ => break,
        }
    }

    SearchResult::finish(economy, demand, objective, state.canonical_moves(), nodes, started, "greedy", 0)
}
