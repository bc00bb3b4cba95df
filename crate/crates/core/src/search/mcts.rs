//! Single-player UCT over supplier configurations.
//!
//! Tree nodes are configurations reached by move sequences from the root,
//! edges are legal moves. Each iteration selects by UCB1, expands one
//! untried move, then plays uniformly random legal moves up to the rollout
//! depth. The value of an iteration is the best value seen along it. The
//! search returns the best configuration ever evaluated.

use std::cmp::Ordering;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::economy::{Demand, Economy};
use crate::error::Error;

use super::{compare_candidates, potential_slots, Evaluation, Incumbent, Move, Objective, SearchResult, SearchState};

#[derive(Clone, Debug, PartialEq)]
pub struct MctsParams {
    /// UCB1 exploration constant.
    pub exploration: f64,
    /// Random moves per rollout; `None` means the number of mutable slots.
    pub rollout_depth: Option<usize>,
    /// Iterations per worker.
    pub budget: usize,
    pub seed: u64,
}

impl MctsParams {
    pub fn new(budget: usize, seed: u64) -> Self {
        Self {
            exploration: 1.4,
            rollout_depth: None,
            budget,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.budget < 1 {
            return Err(Error::InvalidParams("mcts budget must be >= 1".into()));
        }
        if !(self.exploration.is_finite() && self.exploration >= 0.0) {
            return Err(Error::InvalidParams("mcts exploration must be finite and >= 0".into()));
        }
        Ok(())
    }
}

struct Node {
    mv: Option<Move>,
    children: Vec<usize>,
    untried: Vec<Move>,
    visits: u64,
    total: f64,
}

impl Node {
    fn new(mv: Option<Move>, untried: Vec<Move>) -> Self {
        Self {
            mv,
            children: Vec::new(),
            untried,
            visits: 0,
            total: 0.0,
        }
    }
}

/// Maps an evaluation into (0, 2]: feasible values exceed 1, infeasible ones
/// do not, and lower normalized score is higher within each class.
fn value(evaluation: &Evaluation, norm: f64) -> f64 {
    let s = (evaluation.score / norm).max(0.0);
    let base = 1.0 / (1.0 + s);
    if evaluation.feasible() {
        1.0 + base
    } else {
        base
    }
}

struct Worker<'s, 'e> {
    state: SearchState<'e>,
    objective: &'s Objective,
    rng: ChaCha8Rng,
    nodes: u64,
    best: Incumbent,
    norm: f64,
}

impl Worker<'_, '_> {
    fn visit(&mut self) -> Result<f64, Error> {
        let evaluation = self.state.evaluate(self.objective)?;
        self.nodes += 1;
        let v = value(&evaluation, self.norm);
        self.best.offer(&self.state, evaluation);
        Ok(v)
    }

    fn run(&mut self, params: &MctsParams, depth: usize) -> Result<(), Error> {
        let mut tree = vec![Node::new(None, self.state.legal_moves())];
        for _ in 0..params.budget {
            let mut path = vec![0usize];
            let mut tokens = Vec::new();

            // selection
            let mut node = 0;
            while tree[node].untried.is_empty() && !tree[node].children.is_empty() {
                let ln_n = (tree[node].visits.max(1) as f64).ln();
                let mut chosen = tree[node].children[0];
                let mut chosen_ucb = f64::NEG_INFINITY;
                for &c in &tree[node].children {
                    let child = &tree[c];
                    let ucb = if child.visits == 0 {
                        f64::INFINITY
                    } else {
                        child.total / child.visits as f64
                            + params.exploration * (ln_n / child.visits as f64).sqrt()
                    };
                    if ucb > chosen_ucb {
                        chosen = c;
                        chosen_ucb = ucb;
                    }
                }
                tokens.push(self.state.apply_move(tree[chosen].mv.expect("non-root"))?);
                node = chosen;
                path.push(node);
            }

            // expansion
            let mut best_value = if tree[node].untried.is_empty() {
                self.visit()?
            } else {
                let k = self.rng.gen_range(0..tree[node].untried.len());
                let mv = tree[node].untried.swap_remove(k);
                tokens.push(self.state.apply_move(mv)?);
                let v = self.visit()?;
                let child = tree.len();
                tree.push(Node::new(Some(mv), self.state.legal_moves()));
                tree[node].children.push(child);
                path.push(child);
                v
            };

            // rollout
            for _ in 0..depth {
                let moves = self.state.legal_moves();
                if moves.is_empty() {
                    break;
                }
                let mv = moves[self.rng.gen_range(0..moves.len())];
                tokens.push(self.state.apply_move(mv)?);
                best_value = best_value.max(self.visit()?);
            }

            for token in tokens.into_iter().rev() {
                self.state.undo_move(token)?;
            }
            for &n in &path {
                tree[n].visits += 1;
                tree[n].total += best_value;
            }
        }
        Ok(())
    }
}

fn run_worker(
    economy: &Economy,
    demand: &Demand,
    objective: &Objective,
    params: &MctsParams,
    seed: u64,
) -> Result<(Incumbent, u64), Error> {
    let mut state = SearchState::new(economy, demand.clone());
    state.set_audit(objective.audit);
    let root = Incumbent::from_state(&state, objective)?;
    let norm = if root.evaluation.score > 0.0 {
        root.evaluation.score
    } else {
        1.0
    };
    let depth = params
        .rollout_depth
        .unwrap_or_else(|| potential_slots(economy, demand).len());
    let mut worker = Worker {
        state,
        objective,
        rng: ChaCha8Rng::seed_from_u64(seed),
        nodes: 1,
        best: root,
        norm,
    };
    worker.run(params, depth)?;
    Ok((worker.best, worker.nodes))
}

/// Root-parallel UCT. Worker `i` uses seed `params.seed + i`; the merged
/// result is the best incumbent, ties going to the lowest worker index.
pub fn search_mcts(
    economy: &Economy,
    demand: &Demand,
    objective: &Objective,
    params: &MctsParams,
    workers: usize,
) -> Result<SearchResult, Error> {
    params.validate()?;
    objective.validate(economy)?;
    if workers == 0 {
        return Err(Error::InvalidParams("workers must be >= 1".into()));
    }
    let started = Instant::now();
    let outcomes: Vec<Result<(Incumbent, u64), Error>> = if workers == 1 {
        vec![run_worker(economy, demand, objective, params, params.seed)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|i| {
                    let seed = params.seed.wrapping_add(i as u64);
                    scope.spawn(move || run_worker(economy, demand, objective, params, seed))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("mcts worker panicked"))
                .collect()
        })
    };

    let mut best: Option<Incumbent> = None;
    let mut nodes = 0;
    for outcome in outcomes {
        let (candidate, n) = outcome?;
        nodes += n;
        let replace = match &best {
            None => true,
            Some(b) => {
                compare_candidates(&candidate.evaluation, &candidate.moves, &b.evaluation, &b.moves) == Ordering::Less
            }
        };
        if replace {
            best = Some(candidate);
        }
    }
    let best = best.expect("at least one worker");
    SearchResult::finish(economy, demand, objective, best.moves, nodes, started, "mcts", params.seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;
    use crate::lca::{PlanetaryBounds, Weights};
    use crate::search::{rank_evaluations, search_exhaustive};

    fn fixture_setup() -> (Economy, Objective) {
        let e = fixture::micro_economy();
        let obj = Objective::new(Weights::uniform(3, 1.0), PlanetaryBounds::unbounded(3).with_climate(12.0));
        (e, obj)
    }

    #[test]
    fn finds_fixture_optimum() {
        let (e, obj) = fixture_setup();
        let d = Demand::single(&e, e.product_id("B").unwrap(), 1.0).unwrap();
        let r = search_mcts(&e, &d, &obj, &MctsParams::new(100, 42), 1).unwrap();
        let oracle = search_exhaustive(&e, &d, &obj, 100).unwrap();
        assert_eq!(r.evaluation, oracle.evaluation);
        assert_eq!(r.moves, oracle.moves);
        assert_eq!(r.seed, 42);
    }

    #[test]
    fn budget_one_never_worse_than_default() {
        let (e, obj) = fixture_setup();
        let d = Demand::single(&e, e.product_id("B").unwrap(), 1.0).unwrap();
        let r = search_mcts(&e, &d, &obj, &MctsParams::new(1, 7), 1).unwrap();
        let default = crate::search::evaluate(&e, &crate::economy::Configuration::default_for(&e), &d, &obj).unwrap();
        assert_ne!(rank_evaluations(&r.evaluation, &default), Ordering::Greater);
    }

    #[test]
    fn deterministic_given_seed() {
        let e = fixture::greedy_trap();
        let d = Demand::single(&e, e.product_id("T").unwrap(), 1.0).unwrap();
        let obj = Objective::new(Weights::uniform(6, 1.0), PlanetaryBounds::unbounded(6));
        let p = MctsParams::new(37, 9);
        let a = search_mcts(&e, &d, &obj, &p, 1).unwrap();
        let b = search_mcts(&e, &d, &obj, &p, 1).unwrap();
        assert!(a.same_outcome(&b));
        let a = search_mcts(&e, &d, &obj, &p, 3).unwrap();
        let b = search_mcts(&e, &d, &obj, &p, 3).unwrap();
        assert!(a.same_outcome(&b));
    }

    #[test]
    fn escapes_greedy_trap() {
        let e = fixture::greedy_trap();
        let d = Demand::single(&e, e.product_id("T").unwrap(), 1.0).unwrap();
        let obj = Objective::new(
            Weights {
                time: 1.0,
                climate: 0.0,
                materials: vec![0.0; 6],
            },
            PlanetaryBounds::unbounded(6),
        );
        let r = search_mcts(&e, &d, &obj, &MctsParams::new(300, 1), 1).unwrap();
        assert_eq!(r.evaluation.score, 5.0);
    }

    #[test]
    fn invalid_params() {
        let (e, obj) = fixture_setup();
        let d = Demand::single(&e, e.product_id("B").unwrap(), 1.0).unwrap();
        assert!(search_mcts(&e, &d, &obj, &MctsParams::new(0, 1), 1).is_err());
        let mut p = MctsParams::new(5, 1);
        p.exploration = -1.0;
        assert!(search_mcts(&e, &d, &obj, &p, 1).is_err());
        assert!(search_mcts(&e, &d, &obj, &MctsParams::new(5, 1), 0).is_err());
    }

    #[test]
    fn value_orders_feasible_first() {
        let obj = Objective::new(Weights::uniform(0, 1.0), PlanetaryBounds::unbounded(0).with_climate(1.0));
        let mk = |t: f64, c: f64| Evaluation::from_impact(crate::lca::LcaVector::new(t, c, vec![]), &obj).unwrap();
        let feasible_bad = mk(1000.0, 0.0);
        let infeasible_good = mk(0.0, 2.0);
        assert!(value(&feasible_bad, 1.0) > value(&infeasible_good, 1.0));
        assert!(value(&mk(1.0, 0.0), 1.0) > value(&mk(2.0, 0.0), 1.0));
    }
}
