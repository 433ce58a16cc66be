//! The single-cell world: incumbent cellular users (one per uplink channel),
//! D2D-capable users with positions, velocities and demands, and the
//! proximity-based pair enumeration.
//!
//! The base station sits at the origin. Channel `i` is owned by cellular
//! user `i`, so the cell is fully loaded by construction.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SimConfig;
use crate::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;

    fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }
}

/// Index of a D2D-capable user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UserId(pub usize);

/// Index of an uplink channel, equal to the index of its incumbent cellular user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChannelId(pub usize);

/// Index into the list returned by [`enumerate_pairs`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairId(pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellularUser {
    pub id: usize,
    pub position: Point,
    pub tx_power: f64,
    pub channel: ChannelId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct D2DUser {
    pub id: UserId,
    pub position: Point,
    pub velocity: Point,
    /// Transaction size in bits.
    pub demand: f64,
}

/// Ordered transmitter/receiver combination of two nearby D2D users.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct D2DPair {
    pub tx: UserId,
    pub rx: UserId,
    pub distance: f64,
    /// `|v_tx - v_rx|`.
    pub relative_speed: f64,
}

impl D2DPair {
    pub fn shares_user(&self, other: &D2DPair) -> bool {
        self.tx == other.tx || self.tx == other.rx || self.rx == other.tx || self.rx == other.rx
    }

    pub fn involves(&self, user: UserId) -> bool {
        self.tx == user || self.rx == user
    }
}

/// Immutable snapshot of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub cellular: Vec<CellularUser>,
    pub d2d: Vec<D2DUser>,
}

impl Scenario {
    pub fn num_channels(&self) -> usize {
        self.cellular.len()
    }

    pub fn cellular_on(&self, channel: ChannelId) -> &CellularUser {
        &self.cellular[channel.0]
    }

    pub fn user(&self, id: UserId) -> &D2DUser {
        &self.d2d[id.0]
    }
}

fn uniform_in_disk(rng: &mut impl Rng, radius: f64) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let phi = 2.0 * PI * rng.random::<f64>();
    Point::new(r * phi.cos(), r * phi.sin())
}

/// Draws a world from `cfg`. Same config, same scenario.
pub fn generate_scenario(cfg: &SimConfig) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);

    let cellular = (0..cfg.num_channels)
        .map(|i| CellularUser {
            id: i,
            position: uniform_in_disk(&mut rng, cfg.cell_radius),
            tx_power: cfg.cellular_tx_power,
            channel: ChannelId(i),
        })
        .collect();

    let [dmin, dmax] = cfg.demand_range;
    let d2d = (0..cfg.num_d2d_users)
        .map(|j| {
            let position = uniform_in_disk(&mut rng, cfg.cell_radius);
            let heading = 2.0 * PI * rng.random::<f64>();
            let speed = cfg.v_max * rng.random::<f64>();
            let demand = dmin + (dmax - dmin) * rng.random::<f64>();
            let velocity = if speed == 0.0 {
                Point::ORIGIN
            } else {
                Point::new(speed * heading.cos(), speed * heading.sin())
            };
            D2DUser {
                id: UserId(j),
                position,
                velocity,
                demand,
            }
        })
        .collect();

    Scenario { cellular, d2d }
}

/// All ordered `(tx, rx)` combinations of distinct users no further apart
/// than `max_distance`, sorted by `(tx, rx)`.
pub fn enumerate_pairs(scenario: &Scenario, max_distance: f64) -> Vec<D2DPair> {
    let users = &scenario.d2d;
    let mut pairs = Vec::new();
    for a in users {
        for b in users {
            if a.id == b.id {
                continue;
            }
            let distance = a.position.distance(b.position);
            if distance <= max_distance {
                pairs.push(D2DPair {
                    tx: a.id,
                    rx: b.id,
                    distance,
                    relative_speed: (a.velocity - b.velocity).norm(),
                });
            }
        }
    }
    pairs
}

#[derive(Debug, Error)]
pub enum ScenarioCsvError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("row {row}: {reason}")]
    Row { row: usize, reason: String },
}

pub const SCENARIO_CSV_HEADER: [&str; 8] = ["kind", "id", "x", "y", "vx", "vy", "demand", "power"];

/// Writes one row per user: cellular users first, then D2D users.
/// Fields that do not apply to a kind are written as zero.
pub fn write_scenario_csv(scenario: &Scenario, out: impl Write) -> Result<(), ScenarioCsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCENARIO_CSV_HEADER)?;
    for c in &scenario.cellular {
        w.write_record([
            "cellular".to_string(),
            c.id.to_string(),
            fmt_f64(c.position.x),
            fmt_f64(c.position.y),
            fmt_f64(0.0),
            fmt_f64(0.0),
            fmt_f64(0.0),
            fmt_f64(c.tx_power),
        ])?;
    }
    for d in &scenario.d2d {
        w.write_record([
            "d2d".to_string(),
            d.id.0.to_string(),
            fmt_f64(d.position.x),
            fmt_f64(d.position.y),
            fmt_f64(d.velocity.x),
            fmt_f64(d.velocity.y),
            fmt_f64(d.demand),
            fmt_f64(0.0),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct ScenarioRow {
    kind: String,
    id: usize,
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    demand: f64,
    power: f64,
}

/// Reads a dump written by [`write_scenario_csv`]. Ids of each kind must be
/// `0..n` in order.
pub fn read_scenario_csv(input: impl Read) -> Result<Scenario, ScenarioCsvError> {
    let mut r = csv::Reader::from_reader(input);
    let mut cellular = Vec::new();
    let mut d2d = Vec::new();
    for (i, rec) in r.deserialize::<ScenarioRow>().enumerate() {
        let row = rec?;
        let bad = |reason: String| ScenarioCsvError::Row { row: i + 1, reason };
        match row.kind.as_str() {
            "cellular" => {
                if row.id != cellular.len() {
                    return Err(bad(format!("expected cellular id {}, got {}", cellular.len(), row.id)));
                }
                if !(row.power > 0.0) {
                    return Err(bad("cellular tx power must be > 0".into()));
                }
                cellular.push(CellularUser {
                    id: row.id,
                    position: Point::new(row.x, row.y),
                    tx_power: row.power,
                    channel: ChannelId(row.id),
                });
            }
            "d2d" => {
                if row.id != d2d.len() {
                    return Err(bad(format!("expected d2d id {}, got {}", d2d.len(), row.id)));
                }
                if !(row.demand > 0.0) {
                    return Err(bad("demand must be > 0".into()));
                }
                d2d.push(D2DUser {
                    id: UserId(row.id),
                    position: Point::new(row.x, row.y),
                    velocity: Point::new(row.vx, row.vy),
                    demand: row.demand,
                });
            }
            other => return Err(bad(format!("unknown kind `{other}`"))),
        }
    }
    Ok(Scenario { cellular, d2d })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn user(id: usize, x: f64, y: f64) -> D2DUser {
        D2DUser {
            id: UserId(id),
            position: Point::new(x, y),
            velocity: Point::ORIGIN,
            demand: 1.0,
        }
    }

    fn only_d2d(users: Vec<D2DUser>) -> Scenario {
        Scenario {
            cellular: vec![],
            d2d: users,
        }
    }

    #[test]
    fn same_seed_same_world() {
        let cfg = SimConfig {
            rng_seed: 7,
            ..SimConfig::default()
        };
        assert_eq!(generate_scenario(&cfg), generate_scenario(&cfg));
        let other = SimConfig {
            rng_seed: 8,
            ..cfg.clone()
        };
        assert_ne!(generate_scenario(&cfg), generate_scenario(&other));
    }

    #[test]
    fn no_d2d_users() {
        let cfg = SimConfig {
            num_d2d_users: 0,
            ..SimConfig::default()
        };
        let s = generate_scenario(&cfg);
        assert!(s.d2d.is_empty());
        assert_eq!(s.cellular.len(), cfg.num_channels);
    }

    #[test]
    fn zero_vmax_means_static_users() {
        let cfg = SimConfig {
            v_max: 0.0,
            ..SimConfig::default()
        };
        let s = generate_scenario(&cfg);
        assert!(s.d2d.iter().all(|u| u.velocity == Point::ORIGIN));
    }

    #[test]
    fn full_load_channel_per_user() {
        let s = generate_scenario(&SimConfig::default());
        for (i, c) in s.cellular.iter().enumerate() {
            assert_eq!(c.id, i);
            assert_eq!(c.channel, ChannelId(i));
        }
    }

    #[test]
    fn pairs_out_of_range() {
        let s = only_d2d(vec![user(0, 0.0, 0.0), user(1, 0.5, 0.0)]);
        assert!(enumerate_pairs(&s, 0.1).is_empty());
    }

    #[test]
    fn pairs_both_directions() {
        let s = only_d2d(vec![user(0, 0.0, 0.0), user(1, 0.01, 0.0)]);
        let pairs = enumerate_pairs(&s, 0.05);
        assert_eq!(pairs.len(), 2);
        assert_eq!((pairs[0].tx, pairs[0].rx), (UserId(0), UserId(1)));
        assert_eq!((pairs[1].tx, pairs[1].rx), (UserId(1), UserId(0)));
        assert!((pairs[0].distance - 0.01).abs() < 1e-15);
    }

    #[test]
    fn four_close_users_give_twelve_pairs() {
        let s = only_d2d(vec![
            user(0, 0.0, 0.0),
            user(1, 0.01, 0.0),
            user(2, 0.0, 0.01),
            user(3, 0.01, 0.01),
        ]);
        // 4 * 3 ordered combinations
        assert_eq!(enumerate_pairs(&s, 0.05).len(), 12);
    }

    #[test]
    fn relative_speed_is_vector_difference() {
        let mut a = user(0, 0.0, 0.0);
        let mut b = user(1, 0.01, 0.0);
        a.velocity = Point::new(1.0, 0.0);
        b.velocity = Point::new(-1.0, 0.0);
        let pairs = enumerate_pairs(&only_d2d(vec![a, b]), 0.05);
        assert!((pairs[0].relative_speed - 2.0).abs() < 1e-15);
    }

    #[test]
    fn csv_dump_reads_back_exactly() {
        let cfg = SimConfig {
            num_channels: 7,
            num_d2d_users: 9,
            rng_seed: 3,
            ..SimConfig::default()
        };
        let s = generate_scenario(&cfg);
        let mut buf = Vec::new();
        write_scenario_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("kind,id,x,y,vx,vy,demand,power\n"));
        assert_eq!(text.lines().count(), 1 + 7 + 9);
        assert_eq!(read_scenario_csv(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn csv_rejects_unknown_kind() {
        let text = "kind,id,x,y,vx,vy,demand,power\nrelay,0,0,0,0,0,1,1\n";
        assert!(matches!(
            read_scenario_csv(text.as_bytes()),
            Err(ScenarioCsvError::Row { row: 1, .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn generated_world_respects_bounds(seed in any::<u64>(), vmax in 0.0f64..5.0, radius in 0.1f64..10.0) {
            let cfg = SimConfig {
                rng_seed: seed,
                v_max: vmax,
                cell_radius: radius,
                num_channels: 20,
                num_d2d_users: 40,
                ..SimConfig::default()
            };
            let s = generate_scenario(&cfg);
            for c in &s.cellular {
                prop_assert!(c.position.norm() <= radius * (1.0 + 1e-12));
            }
            for u in &s.d2d {
                prop_assert!(u.position.norm() <= radius * (1.0 + 1e-12));
                prop_assert!(u.velocity.norm() <= vmax * (1.0 + 1e-12));
                prop_assert!(u.demand >= cfg.demand_min() && u.demand <= cfg.demand_max());
            }
        }

        #[test]
        fn pair_enumeration_symmetric_and_sorted(seed in any::<u64>()) {
            let cfg = SimConfig { rng_seed: seed, num_d2d_users: 60, ..SimConfig::default() };
            let s = generate_scenario(&cfg);
            let pairs = enumerate_pairs(&s, cfg.max_pair_distance());
            for w in pairs.windows(2) {
                prop_assert!((w[0].tx, w[0].rx) < (w[1].tx, w[1].rx));
            }
            for p in &pairs {
                prop_assert!(p.tx != p.rx);
                prop_assert!(p.distance <= cfg.max_pair_distance());
                prop_assert!(pairs.iter().any(|q| q.tx == p.rx && q.rx == p.tx));
            }
        }
    }
}
