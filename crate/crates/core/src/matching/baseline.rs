//! Comparators: a random feasible assignment and the brute-force optimum.

use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{objective, CandidateSet, Matching};
use crate::scenario::{ChannelId, PairId, UserId};

pub const EXHAUSTIVE_MAX_PAIRS: usize = 10;
pub const EXHAUSTIVE_MAX_CHANNELS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExhaustiveError {
    #[error("instance too large for exhaustive search: {pairs} pairs x {channels} channels (cap {EXHAUSTIVE_MAX_PAIRS} x {EXHAUSTIVE_MAX_CHANNELS})")]
    TooLarge { pairs: usize, channels: usize },
}

/// Context-blind partner selection: visits every enumerated pair in a seeded
/// random order and commits a pair whenever both users are still unpartnered.
/// The committed pair then takes a uniformly random free channel among its
/// candidates; if none is left, both users stay on the cellular tier.
pub fn solve_random(candidates: &CandidateSet, seed: u64) -> Matching {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<PairId> = (0..candidates.pairs().len()).map(PairId).collect();
    order.shuffle(&mut rng);

    let mut matching = Matching::new();
    let mut busy: HashSet<UserId> = HashSet::new();
    for pair in order {
        let members = candidates.pair(pair);
        if busy.contains(&members.tx) || busy.contains(&members.rx) {
            continue;
        }
        busy.insert(members.tx);
        busy.insert(members.rx);
        let free: Vec<ChannelId> = candidates
            .links_of(pair)
            .map(|l| l.channel)
            .filter(|&c| matching.pair_on(c).is_none())
            .collect();
        if let Some(&c) = free.choose(&mut rng) {
            matching.assign(pair, c).expect("channel checked free");
        }
    }
    matching
}

/// Enumerates every feasible matching and returns one with the largest
/// objective. Among equal objectives the lexicographically smallest sorted
/// list of `(pair, channel)` links wins.
pub fn solve_exhaustive(candidates: &CandidateSet) -> Result<(Matching, f64), ExhaustiveError> {
    let pairs = candidates.active_pairs();
    let channels = candidates.channels();
    if pairs.len() > EXHAUSTIVE_MAX_PAIRS || channels.len() > EXHAUSTIVE_MAX_CHANNELS {
        return Err(ExhaustiveError::TooLarge {
            pairs: pairs.len(),
            channels: channels.len(),
        });
    }

    let mut search = Search {
        candidates,
        pairs: &pairs,
        current: Vec::new(),
        used_channels: HashSet::new(),
        used_users: HashSet::new(),
        best: (Vec::new(), 0.0),
    };
    search.visit(0);
    let (links, _) = search.best;
    let matching = Matching::from_links(links).expect("search keeps matchings one-to-one");
    let value = objective(&matching, candidates).expect("search only uses candidate links");
    Ok((matching, value))
}

struct Search<'a> {
    candidates: &'a CandidateSet,
    pairs: &'a [PairId],
    current: Vec<(PairId, ChannelId)>,
    used_channels: HashSet<ChannelId>,
    used_users: HashSet<UserId>,
    best: (Vec<(PairId, ChannelId)>, f64),
}

impl Search<'_> {
    fn visit(&mut self, depth: usize) {
        if depth == self.pairs.len() {
            self.offer();
            return;
        }
        let pair = self.pairs[depth];
        let members = *self.candidates.pair(pair);
        if !self.used_users.contains(&members.tx) && !self.used_users.contains(&members.rx) {
            let channels: Vec<ChannelId> = self.candidates.links_of(pair).map(|l| l.channel).collect();
            for c in channels {
                if self.used_channels.contains(&c) {
                    continue;
                }
                self.current.push((pair, c));
                self.used_channels.insert(c);
                self.used_users.insert(members.tx);
                self.used_users.insert(members.rx);
                self.visit(depth + 1);
                self.used_users.remove(&members.tx);
                self.used_users.remove(&members.rx);
                self.used_channels.remove(&c);
                self.current.pop();
            }
        }
        self.visit(depth + 1);
    }

    fn offer(&mut self) {
        // Sum in ascending pair order, the same order `objective` uses.
        let value: f64 = self
            .current
            .iter()
            .map(|&(p, c)| self.candidates.link(p, c).expect("candidate").offload_score)
            .sum();
        let better = value > self.best.1 || (value == self.best.1 && self.current < self.best.0);
        if better {
            self.best = (self.current.clone(), value);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{solve, CandidateLink, SolveOptions};
    use super::*;
    use crate::scenario::D2DPair;

    fn pair(tx: usize, rx: usize) -> D2DPair {
        D2DPair {
            tx: UserId(tx),
            rx: UserId(rx),
            distance: 0.01,
            relative_speed: 0.0,
        }
    }

    fn link(p: usize, tx: usize, rx: usize, c: usize, x: f64) -> CandidateLink {
        CandidateLink::from_scores(PairId(p), UserId(tx), UserId(rx), ChannelId(c), 1.0, x, x, x)
    }

    fn grid(x: [[f64; 2]; 2]) -> CandidateSet {
        CandidateSet::new(
            vec![pair(0, 1), pair(2, 3)],
            vec![
                link(0, 0, 1, 0, x[0][0]),
                link(0, 0, 1, 1, x[0][1]),
                link(1, 2, 3, 0, x[1][0]),
                link(1, 2, 3, 1, x[1][1]),
            ],
        )
    }

    /// All 7 matchings of a complete 2x2 instance, written out.
    fn brute_2x2(x: [[f64; 2]; 2]) -> f64 {
        [
            0.0,
            x[0][0],
            x[0][1],
            x[1][0],
            x[1][1],
            x[0][0] + x[1][1],
            x[0][1] + x[1][0],
        ]
        .into_iter()
        .fold(f64::MIN, f64::max)
    }

    #[test]
    fn exhaustive_single() {
        let c = CandidateSet::new(vec![pair(0, 1)], vec![link(0, 0, 1, 0, 2.0)]);
        let (m, v) = solve_exhaustive(&c).unwrap();
        assert_eq!(m, Matching::from_links([(PairId(0), ChannelId(0))]).unwrap());
        assert_eq!(v, 2.0);
    }

    #[test]
    fn exhaustive_diagonal_2x2() {
        let x = [[3.0, 1.0], [2.0, 4.0]];
        assert_eq!(brute_2x2(x), 7.0);
        let (m, v) = solve_exhaustive(&grid(x)).unwrap();
        assert_eq!(v, 7.0);
        assert_eq!(
            m,
            Matching::from_links([(PairId(0), ChannelId(0)), (PairId(1), ChannelId(1))]).unwrap()
        );
    }

    #[test]
    fn exhaustive_tie_prefers_lexicographically_smallest() {
        let x = [[1.0, 1.0], [1.0, 1.0]];
        let (m, v) = solve_exhaustive(&grid(x)).unwrap();
        assert_eq!(v, 2.0);
        assert_eq!(m.channel_of(PairId(0)), Some(ChannelId(0)));
    }

    #[test]
    fn exhaustive_respects_shared_users() {
        let c = CandidateSet::new(
            vec![pair(0, 1), pair(1, 0)],
            vec![link(0, 0, 1, 0, 3.0), link(1, 1, 0, 1, 4.0)],
        );
        let (m, v) = solve_exhaustive(&c).unwrap();
        assert_eq!(v, 4.0);
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn exhaustive_size_guard() {
        let pairs: Vec<D2DPair> = (0..11).map(|k| pair(2 * k, 2 * k + 1)).collect();
        let links = (0..11).map(|k| link(k, 2 * k, 2 * k + 1, 0, 1.0)).collect();
        let c = CandidateSet::new(pairs, links);
        assert_eq!(
            solve_exhaustive(&c),
            Err(ExhaustiveError::TooLarge { pairs: 11, channels: 1 })
        );
    }

    #[test]
    fn random_empty_and_trivial() {
        assert!(solve_random(&CandidateSet::new(vec![pair(0, 1)], vec![]), 3).is_empty());
        let c = CandidateSet::new(vec![pair(0, 1)], vec![link(0, 0, 1, 0, 2.0)]);
        assert_eq!(
            solve_random(&c, 3),
            solve(&c, &SolveOptions::default()).unwrap().matching
        );
    }

    #[test]
    fn random_partner_without_channel_stays_cellular() {
        // 0->1 has no feasible channel; whenever it is drawn before 1->0,
        // users 0 and 1 are committed to each other and nothing is matched.
        let c = CandidateSet::new(vec![pair(0, 1), pair(1, 0)], vec![link(1, 1, 0, 0, 1.0)]);
        let sizes: HashSet<usize> = (0..32).map(|seed| solve_random(&c, seed).len()).collect();
        assert_eq!(sizes, HashSet::from([0, 1]));
    }

    #[test]
    fn random_is_seeded() {
        let c = grid([[1.0, 2.0], [3.0, 4.0]]);
        for seed in 0..20 {
            let m = solve_random(&c, seed);
            assert_eq!(m, solve_random(&c, seed));
            m.validate(&c).unwrap();
            assert_eq!(m.len(), 2);
        }
    }
}
