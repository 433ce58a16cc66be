//! Channel / D2D-pair assignment.
//!
//! The two sides are the uplink channels (whose preferences are the
//! network's: bigger offloaded size wins) and the candidate D2D pairs
//! (which prefer higher expected goodput `p_consistent * rate`). A matching
//! is one-to-one between channels and pairs, and additionally never uses the
//! same D2D user in two matched pairs.

mod baseline;
mod candidates;
mod solver;
mod stability;
mod utility;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::scenario::{ChannelId, PairId};

pub use baseline::{solve_exhaustive, solve_random, ExhaustiveError, EXHAUSTIVE_MAX_CHANNELS, EXHAUSTIVE_MAX_PAIRS};
pub use candidates::{build_candidates, CandidateLink, CandidateSet};
pub use solver::{solve, NonConvergence, Solution, SolveError, SolveOptions, TraceStep};
pub use stability::{is_stable, BlockingPair};
pub use utility::{objective, preference_list, utilities, UtilityContext};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchingError {
    #[error("channel {0:?} is already assigned")]
    ChannelTaken(ChannelId),
    #[error("pair {0:?} is already assigned")]
    PairTaken(PairId),
    #[error("pair {pair:?} on channel {channel:?} is not a feasible candidate link")]
    NotACandidate { pair: PairId, channel: ChannelId },
    #[error("pairs {0:?} and {1:?} share a D2D user")]
    SharedUser(PairId, PairId),
}

/// Partial one-to-one map between D2D pairs and channels, stored in both
/// directions so `channel_of(p) == Some(c)` iff `pair_on(c) == Some(p)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Matching {
    channel_of: BTreeMap<PairId, ChannelId>,
    pair_of: BTreeMap<ChannelId, PairId>,
}

impl Matching {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_links(links: impl IntoIterator<Item = (PairId, ChannelId)>) -> Result<Self, MatchingError> {
        let mut m = Matching::new();
        for (p, c) in links {
            m.assign(p, c)?;
        }
        Ok(m)
    }

    pub fn assign(&mut self, pair: PairId, channel: ChannelId) -> Result<(), MatchingError> {
        if self.pair_of.contains_key(&channel) {
            return Err(MatchingError::ChannelTaken(channel));
        }
        if self.channel_of.contains_key(&pair) {
            return Err(MatchingError::PairTaken(pair));
        }
        self.channel_of.insert(pair, channel);
        self.pair_of.insert(channel, pair);
        Ok(())
    }

    pub fn release(&mut self, pair: PairId) -> Option<ChannelId> {
        let c = self.channel_of.remove(&pair)?;
        self.pair_of.remove(&c);
        Some(c)
    }

    pub fn channel_of(&self, pair: PairId) -> Option<ChannelId> {
        self.channel_of.get(&pair).copied()
    }

    pub fn pair_on(&self, channel: ChannelId) -> Option<PairId> {
        self.pair_of.get(&channel).copied()
    }

    pub fn len(&self) -> usize {
        self.channel_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channel_of.is_empty()
    }

    /// Matched `(pair, channel)` links in ascending pair order.
    pub fn links(&self) -> impl Iterator<Item = (PairId, ChannelId)> + '_ {
        self.channel_of.iter().map(|(&p, &c)| (p, c))
    }

    /// Both directions agree and each side appears at most once.
    pub fn is_mirror_consistent(&self) -> bool {
        self.channel_of.len() == self.pair_of.len()
            && self.channel_of.iter().all(|(p, c)| self.pair_of.get(c) == Some(p))
    }

    /// Every link is a candidate and no D2D user is used twice.
    pub fn validate(&self, candidates: &CandidateSet) -> Result<(), MatchingError> {
        let mut users = BTreeMap::new();
        for (p, c) in self.links() {
            if candidates.link(p, c).is_none() {
                return Err(MatchingError::NotACandidate { pair: p, channel: c });
            }
            let pair = candidates.pair(p);
            for u in [pair.tx, pair.rx] {
                if let Some(&other) = users.get(&u) {
                    return Err(MatchingError::SharedUser(other, p));
                }
                users.insert(u, p);
            }
        }
        Ok(())
    }
}

/// Who holds which channel and which D2D user under some matching.
#[derive(Debug, Clone, Default)]
struct Occupancy {
    /// pair -> index into `CandidateSet::links`
    link_of: BTreeMap<PairId, usize>,
    on_channel: BTreeMap<ChannelId, PairId>,
    on_user: BTreeMap<crate::scenario::UserId, PairId>,
}

impl Occupancy {
    fn new(candidates: &CandidateSet, matching: &Matching) -> Result<Self, MatchingError> {
        matching.validate(candidates)?;
        let mut occ = Occupancy::default();
        for (p, c) in matching.links() {
            let idx = candidates.link_index(p, c).expect("validated");
            occ.place(candidates, idx);
        }
        Ok(occ)
    }

    fn place(&mut self, candidates: &CandidateSet, idx: usize) {
        let link = &candidates.links()[idx];
        self.link_of.insert(link.pair, idx);
        self.on_channel.insert(link.channel, link.pair);
        self.on_user.insert(link.tx, link.pair);
        self.on_user.insert(link.rx, link.pair);
    }

    fn remove(&mut self, candidates: &CandidateSet, pair: PairId) -> Option<usize> {
        let idx = self.link_of.remove(&pair)?;
        let link = &candidates.links()[idx];
        self.on_channel.remove(&link.channel);
        self.on_user.remove(&link.tx);
        self.on_user.remove(&link.rx);
        Some(idx)
    }

    fn held_link<'c>(&self, candidates: &'c CandidateSet, pair: PairId) -> Option<&'c CandidateLink> {
        self.link_of.get(&pair).map(|&i| &candidates.links()[i])
    }

    /// Held pairs other than `link.pair` that would have to give way for
    /// `link` to be established: the occupant of its channel and any pair
    /// using one of its users. Sorted, deduplicated.
    fn conflicts(&self, link: &CandidateLink) -> Vec<PairId> {
        let mut out: Vec<PairId> = [
            self.on_channel.get(&link.channel),
            self.on_user.get(&link.tx),
            self.on_user.get(&link.rx),
        ]
        .into_iter()
        .flatten()
        .copied()
        .filter(|&p| p != link.pair)
        .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Total offloaded size of the links `link` would displace, 0 if none.
    fn displaced_size(&self, candidates: &CandidateSet, link: &CandidateLink) -> f64 {
        self.conflicts(link)
            .into_iter()
            .filter_map(|p| self.held_link(candidates, p))
            .map(|l| l.offload_size)
            .sum()
    }

    /// Swapping in `link` strictly raises the network's total offloaded size.
    fn network_prefers(&self, candidates: &CandidateSet, link: &CandidateLink) -> bool {
        link.offload_size > self.displaced_size(candidates, link)
    }

    /// Best goodput any member of `pair` currently enjoys, 0 if both are idle.
    fn reservation(&self, candidates: &CandidateSet, pair: PairId) -> f64 {
        let members = candidates.pair(pair);
        [members.tx, members.rx]
            .iter()
            .filter_map(|u| self.on_user.get(u))
            .filter_map(|&p| self.held_link(candidates, p))
            .map(|l| l.utility())
            .fold(0.0, f64::max)
    }

    fn to_matching(&self, candidates: &CandidateSet) -> Matching {
        let mut m = Matching::new();
        for (&p, &idx) in &self.link_of {
            m.assign(p, candidates.links()[idx].channel)
                .expect("occupancy keeps channels exclusive");
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assign_rejects_double_use() {
        let mut m = Matching::new();
        m.assign(PairId(0), ChannelId(1)).unwrap();
        assert_eq!(
            m.assign(PairId(1), ChannelId(1)),
            Err(MatchingError::ChannelTaken(ChannelId(1)))
        );
        assert_eq!(
            m.assign(PairId(0), ChannelId(2)),
            Err(MatchingError::PairTaken(PairId(0)))
        );
        assert!(m.is_mirror_consistent());
        assert_eq!(m.release(PairId(0)), Some(ChannelId(1)));
        assert!(m.is_empty());
        assert_eq!(m.pair_on(ChannelId(1)), None);
    }
}
