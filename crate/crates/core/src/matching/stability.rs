use super::{CandidateSet, Matching, MatchingError, Occupancy};
use crate::scenario::{ChannelId, PairId};

/// A (channel, pair) combination both sides strictly prefer to the current matching.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockingPair {
    pub channel: ChannelId,
    pub pair: PairId,
    /// Goodput gain over the best link the pair's users currently have.
    pub pair_margin: f64,
    /// Net change in the network's total offloaded size.
    pub network_margin: f64,
}

/// Lists every blocking combination, holding the rest of the matching fixed.
///
/// `(channel, pair)` blocks when the pair's goodput there beats what each of
/// its users has now (0 for an idle user), and its offloaded size beats the
/// combined size of the matched links it would displace: the channel's
/// occupant (0 if empty) and any link using one of its users.
pub fn is_stable(matching: &Matching, candidates: &CandidateSet) -> Result<(bool, Vec<BlockingPair>), MatchingError> {
    let occ = Occupancy::new(candidates, matching)?;
    let blocking: Vec<BlockingPair> = candidates
        .links()
        .iter()
        .filter(|l| matching.channel_of(l.pair) != Some(l.channel))
        .filter_map(|l| {
            let pair_margin = l.utility() - occ.reservation(candidates, l.pair);
            let network_margin = l.offload_size - occ.displaced_size(candidates, l);
            (pair_margin > 0.0 && network_margin > 0.0).then_some(BlockingPair {
                channel: l.channel,
                pair: l.pair,
                pair_margin,
                network_margin,
            })
        })
        .collect();
    Ok((blocking.is_empty(), blocking))
}
