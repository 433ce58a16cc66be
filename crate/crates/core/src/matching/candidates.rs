use std::collections::HashMap;

use crate::config::SimConfig;
use crate::consistency::{consistency_probability, expected_interaction_time, is_consistent};
use crate::radio::{FadingField, LinkGains, LinkRadio, PathLoss};
use crate::scenario::{enumerate_pairs, ChannelId, D2DPair, PairId, Point, Scenario, UserId};

/// One feasible (pair, channel) combination and its derived scores.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateLink {
    pub pair: PairId,
    pub tx: UserId,
    pub rx: UserId,
    pub channel: ChannelId,
    pub radio: LinkRadio,
    pub p_consistent: f64,
    /// Expected interaction time, capped at the session horizon.
    pub interaction_time: f64,
    /// Expected offloaded traffic `p_consistent * rate * interaction_time`.
    pub offload_score: f64,
    /// Bits the network moves off the cellular tier: the transmitter's
    /// demand, capped by what the link can carry before the users separate.
    pub offload_size: f64,
}

impl CandidateLink {
    /// The pair's utility: expected goodput `p_consistent * rate`.
    pub fn utility(&self) -> f64 {
        self.p_consistent * self.radio.rate
    }

    pub fn rate(&self) -> f64 {
        self.radio.rate
    }

    /// A link built directly from its scores, for hand-made instances.
    #[allow(clippy::too_many_arguments)]
    pub fn from_scores(
        pair: PairId,
        tx: UserId,
        rx: UserId,
        channel: ChannelId,
        p_consistent: f64,
        rate: f64,
        offload_score: f64,
        offload_size: f64,
    ) -> Self {
        CandidateLink {
            pair,
            tx,
            rx,
            channel,
            radio: LinkRadio {
                p_d2d_max: 0.0,
                sinr_bs: 0.0,
                sinr_d2d: 0.0,
                rate,
                coverage_radius: 0.0,
            },
            p_consistent,
            interaction_time: 0.0,
            offload_score,
            offload_size,
        }
    }
}

/// Every enumerated pair plus the subset of (pair, channel) links that meet
/// all side constraints, sorted by `(pair, channel)`.
#[derive(Debug, Clone, Default)]
pub struct CandidateSet {
    pairs: Vec<D2DPair>,
    links: Vec<CandidateLink>,
    index: HashMap<(PairId, ChannelId), usize>,
    by_pair: Vec<Vec<usize>>,
}

impl CandidateSet {
    /// Links must reference pairs by index into `pairs` and agree on members.
    pub fn new(pairs: Vec<D2DPair>, mut links: Vec<CandidateLink>) -> Self {
        links.sort_by_key(|l| (l.pair, l.channel));
        links.dedup_by_key(|l| (l.pair, l.channel));
        let mut by_pair = vec![Vec::new(); pairs.len()];
        let mut index = HashMap::with_capacity(links.len());
        for (i, l) in links.iter().enumerate() {
            let p = &pairs[l.pair.0];
            assert!(
                p.tx == l.tx && p.rx == l.rx,
                "link members disagree with pair {:?}",
                l.pair
            );
            index.insert((l.pair, l.channel), i);
            by_pair[l.pair.0].push(i);
        }
        CandidateSet {
            pairs,
            links,
            index,
            by_pair,
        }
    }

    pub fn pairs(&self) -> &[D2DPair] {
        &self.pairs
    }

    pub fn pair(&self, id: PairId) -> &D2DPair {
        &self.pairs[id.0]
    }

    pub fn links(&self) -> &[CandidateLink] {
        &self.links
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn link(&self, pair: PairId, channel: ChannelId) -> Option<&CandidateLink> {
        self.link_index(pair, channel).map(|i| &self.links[i])
    }

    pub(crate) fn link_index(&self, pair: PairId, channel: ChannelId) -> Option<usize> {
        self.index.get(&(pair, channel)).copied()
    }

    pub(crate) fn link_indices_of(&self, pair: PairId) -> &[usize] {
        &self.by_pair[pair.0]
    }

    pub fn links_of(&self, pair: PairId) -> impl Iterator<Item = &CandidateLink> {
        self.by_pair[pair.0].iter().map(|&i| &self.links[i])
    }

    /// Pairs with at least one feasible channel, ascending.
    pub fn active_pairs(&self) -> Vec<PairId> {
        (0..self.pairs.len())
            .filter(|&p| !self.by_pair[p].is_empty())
            .map(PairId)
            .collect()
    }

    /// Distinct channels appearing in some link, ascending.
    pub fn channels(&self) -> Vec<ChannelId> {
        let mut cs: Vec<ChannelId> = self.links.iter().map(|l| l.channel).collect();
        cs.sort();
        cs.dedup();
        cs
    }
}

/// Enumerates nearby pairs, evaluates every (pair, channel) combination and
/// keeps those meeting the base-station SINR, D2D SINR and consistency
/// constraints.
pub fn build_candidates(scenario: &Scenario, cfg: &SimConfig) -> CandidateSet {
    let pairs = enumerate_pairs(scenario, cfg.max_pair_distance());
    let path_loss = PathLoss::from_config(cfg);
    let fading = FadingField::from_config(cfg);
    let mut links = Vec::new();

    for (j, pair) in pairs.iter().enumerate() {
        let tx = scenario.user(pair.tx);
        let rx = scenario.user(pair.rx);
        let Ok(d2d_to_bs) = path_loss.gain(tx.position.distance(Point::ORIGIN), None) else {
            continue;
        };
        let Ok(direct) = path_loss.gain(pair.distance, fading.factor(pair.tx, pair.rx)) else {
            continue;
        };
        for cell in &scenario.cellular {
            let Ok(cell_to_bs) = path_loss.gain(cell.position.norm(), None) else {
                continue;
            };
            let Ok(cell_to_d2d) = path_loss.gain(cell.position.distance(rx.position), None) else {
                continue;
            };
            let gains = LinkGains {
                cell_to_bs,
                d2d_to_bs,
                direct,
                cell_to_d2d,
            };
            let radio = LinkRadio::evaluate(&gains, cell.tx_power, cfg);
            if !radio.meets_sinr_constraints(cfg.gamma, cfg.alpha) {
                continue;
            }
            let p = consistency_probability(radio.coverage_radius, pair.relative_speed, tx.demand, radio.rate);
            if !is_consistent(p, cfg.p_threshold) {
                continue;
            }
            let t = expected_interaction_time(radio.coverage_radius, pair.relative_speed).min(cfg.session_horizon);
            links.push(CandidateLink {
                pair: PairId(j),
                tx: pair.tx,
                rx: pair.rx,
                channel: cell.channel,
                radio,
                p_consistent: p,
                interaction_time: t,
                offload_score: p * radio.rate * t,
                offload_size: tx.demand.min(radio.rate * t),
            });
        }
    }
    CandidateSet::new(pairs, links)
}
