use std::collections::BTreeMap;

use super::{CandidateSet, Matching, MatchingError, Occupancy};
use crate::scenario::{ChannelId, PairId};

/// Both sides' utilities evaluated under one matching.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityContext {
    /// Total offloaded size over matched links.
    pub u_net: f64,
    /// Goodput `p_consistent * rate` of each matched pair.
    pub u_d2d: BTreeMap<PairId, f64>,
    pub evaluated_under: Matching,
}

pub fn utilities(candidates: &CandidateSet, matching: &Matching) -> Result<UtilityContext, MatchingError> {
    matching.validate(candidates)?;
    let mut u_net = 0.0;
    let mut u_d2d = BTreeMap::new();
    for (p, c) in matching.links() {
        let link = candidates.link(p, c).expect("validated");
        u_net += link.offload_size;
        u_d2d.insert(p, link.utility());
    }
    Ok(UtilityContext {
        u_net,
        u_d2d,
        evaluated_under: matching.clone(),
    })
}

/// Channels open to `pair` under `matching`, best goodput first (ties by
/// ascending channel id).
///
/// A channel is open if it is the pair's current channel, or if the network
/// would accept the pair there given everything else in `matching`: its
/// offloaded size must beat the combined size of the links it would
/// displace (the channel's occupant and any link sharing one of the pair's
/// users).
pub fn preference_list(
    pair: PairId,
    candidates: &CandidateSet,
    matching: &Matching,
) -> Result<Vec<ChannelId>, MatchingError> {
    let occ = Occupancy::new(candidates, matching)?;
    Ok(open_links(pair, candidates, matching, &occ)
        .into_iter()
        .map(|i| candidates.links()[i].channel)
        .collect())
}

pub(super) fn open_links(pair: PairId, candidates: &CandidateSet, matching: &Matching, occ: &Occupancy) -> Vec<usize> {
    let own = matching.channel_of(pair);
    let mut open: Vec<usize> = candidates
        .link_indices_of(pair)
        .iter()
        .copied()
        .filter(|&i| {
            let link = &candidates.links()[i];
            Some(link.channel) == own || occ.network_prefers(candidates, link)
        })
        .collect();
    open.sort_by(|&a, &b| {
        let (la, lb) = (&candidates.links()[a], &candidates.links()[b]);
        lb.utility().total_cmp(&la.utility()).then(la.channel.cmp(&lb.channel))
    });
    open
}

/// Expected offloaded traffic summed over matched links.
pub fn objective(matching: &Matching, candidates: &CandidateSet) -> Result<f64, MatchingError> {
    let mut total = 0.0;
    for (p, c) in matching.links() {
        let link = candidates
            .link(p, c)
            .ok_or(MatchingError::NotACandidate { pair: p, channel: c })?;
        total += link.offload_score;
    }
    Ok(total)
}
