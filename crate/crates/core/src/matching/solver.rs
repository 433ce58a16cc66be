//! Iterated deferred acceptance for the assignment game with externalities.
//!
//! Each outer iteration freezes the current matching, rebuilds every pair's
//! preference list under it (which channels are open to the pair, and which
//! of those beat what its users already have), then runs a deferred
//! acceptance pass: pairs propose down their lists, and the network keeps a
//! proposal only if its offloaded size beats every held link it would
//! displace. Displaced pairs resume proposing where they left off. The outer
//! loop stops once a pass leaves the matching unchanged.

use std::collections::{HashSet, VecDeque};

use thiserror::Error;

use super::utility::open_links;
use super::{utilities, CandidateSet, Matching, Occupancy};
use crate::scenario::PairId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    pub max_outer_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_outer_iterations: 100,
        }
    }
}

/// Temporal matching produced by one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub iteration: usize,
    pub proposals: usize,
    pub u_net: f64,
    pub matching: Matching,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub matching: Matching,
    /// Number of distinct temporal matchings produced, at least 1.
    pub iterations: usize,
    pub trace: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonConvergence {
    /// Highest total offloaded size seen along the way.
    pub best: Matching,
    pub best_u_net: f64,
    pub iterations: usize,
    /// A previously seen matching came back; otherwise the iteration cap was hit.
    pub cycled: bool,
    pub trace: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("matching did not converge after {} iterations (cycle: {})", .0.iterations, .0.cycled)]
    NotConverged(Box<NonConvergence>),
}

pub fn solve(candidates: &CandidateSet, opts: &SolveOptions) -> Result<Solution, SolveError> {
    let mut current = Matching::new();
    let mut seen: HashSet<Matching> = HashSet::from([current.clone()]);
    let mut trace: Vec<TraceStep> = Vec::new();
    let mut best = (current.clone(), 0.0);

    for iteration in 1..=opts.max_outer_iterations.max(1) {
        let (next, proposals) = deferred_acceptance_pass(candidates, &current);
        if next == current {
            return Ok(Solution {
                matching: current,
                iterations: trace.len().max(1),
                trace,
            });
        }
        let u_net = utilities(candidates, &next)
            .expect("solver only builds candidate matchings")
            .u_net;
        if u_net > best.1 {
            best = (next.clone(), u_net);
        }
        trace.push(TraceStep {
            iteration,
            proposals,
            u_net,
            matching: next.clone(),
        });
        if !seen.insert(next.clone()) {
            return Err(non_convergence(best, trace, true));
        }
        current = next;
    }
    Err(non_convergence(best, trace, false))
}

fn non_convergence(best: (Matching, f64), trace: Vec<TraceStep>, cycled: bool) -> SolveError {
    SolveError::NotConverged(Box::new(NonConvergence {
        best: best.0,
        best_u_net: best.1,
        iterations: trace.len(),
        cycled,
        trace,
    }))
}

/// One outer iteration. Returns the new temporal matching and the number of
/// proposals made.
fn deferred_acceptance_pass(candidates: &CandidateSet, current: &Matching) -> (Matching, usize) {
    let frozen = Occupancy::new(candidates, current).expect("solver only builds candidate matchings");
    let n = candidates.pairs().len();

    // Preference lists under the frozen matching, truncated to options that
    // strictly improve on what the pair's users already have.
    let lists: Vec<Vec<usize>> = (0..n)
        .map(|p| {
            let pair = PairId(p);
            let reservation = frozen.reservation(candidates, pair);
            open_links(pair, candidates, current, &frozen)
                .into_iter()
                .filter(|&i| candidates.links()[i].utility() > reservation)
                .collect()
        })
        .collect();

    let mut held = frozen;
    let mut next = vec![0usize; n];
    let mut queue: VecDeque<PairId> = (0..n).filter(|&p| !lists[p].is_empty()).map(PairId).collect();
    let mut proposals = 0;

    while let Some(pair) = queue.pop_front() {
        let list = &lists[pair.0];
        while next[pair.0] < list.len() {
            let idx = list[next[pair.0]];
            next[pair.0] += 1;
            proposals += 1;
            let link = &candidates.links()[idx];
            if !held.network_prefers(candidates, link) {
                continue;
            }
            for displaced in held.conflicts(link) {
                held.remove(candidates, displaced);
                queue.push_back(displaced);
            }
            held.remove(candidates, pair);
            held.place(candidates, idx);
            break;
        }
    }
    (held.to_matching(candidates), proposals)
}
