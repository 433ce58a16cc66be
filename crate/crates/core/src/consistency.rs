//! Mobility-aware link reliability.
//!
//! Two users with relative speed `V` cross each other's coverage disk of
//! radius `R` along a chord at angle `theta ~ U(-pi/2, pi/2)` from the
//! diameter. A transaction of `S` bits at rate `C` completes iff the chord
//! is traversed no faster than `S / C`.
//!
//! Co-moving users (`V == 0`) never separate; their interaction time is
//! `f64::INFINITY`.

use std::f64::consts::{FRAC_2_PI, PI};

/// Arguments of the consistency model for one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyInput {
    pub coverage_radius: f64,
    pub relative_speed: f64,
    pub demand_bits: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyResult {
    pub p_consistent: f64,
    /// Mean over the crossing angle; infinite for co-moving users.
    pub expected_interaction_time: f64,
}

impl ConsistencyInput {
    pub fn evaluate(&self) -> ConsistencyResult {
        ConsistencyResult {
            p_consistent: consistency_probability(
                self.coverage_radius,
                self.relative_speed,
                self.demand_bits,
                self.rate,
            ),
            expected_interaction_time: expected_interaction_time(self.coverage_radius, self.relative_speed),
        }
    }
}

/// Time spent inside range when crossing at angle `theta`: `2 R cos(theta) / V`.
pub fn interaction_time(radius: f64, speed: f64, theta: f64) -> f64 {
    if speed == 0.0 {
        return f64::INFINITY;
    }
    2.0 * radius * theta.cos() / speed
}

/// `E[2 R cos(theta) / V] = 4 R / (pi V)` for `theta ~ U(-pi/2, pi/2)`.
pub fn expected_interaction_time(radius: f64, speed: f64) -> f64 {
    if speed == 0.0 {
        return f64::INFINITY;
    }
    4.0 * radius / (PI * speed)
}

/// Probability that the transaction finishes before the users separate:
/// `(2/pi) acos(min(V S / (2 R C), 1))`.
pub fn consistency_probability(radius: f64, speed: f64, demand_bits: f64, rate: f64) -> f64 {
    if speed == 0.0 {
        return 1.0;
    }
    if rate <= 0.0 {
        return 0.0;
    }
    let a = speed * demand_bits / (2.0 * radius * rate);
    if a <= 0.0 {
        return 1.0;
    }
    if a >= 1.0 || !a.is_finite() {
        return 0.0;
    }
    (FRAC_2_PI * a.acos()).clamp(0.0, 1.0)
}

/// Strictly above the threshold.
pub fn is_consistent(p: f64, p_threshold: f64) -> bool {
    p > p_threshold
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_3;

    #[test]
    fn interaction_time_cases() {
        assert_eq!(interaction_time(1.0, 2.0, 0.0), 1.0);
        assert!((interaction_time(1.0, 1.0, FRAC_PI_3) - 1.0).abs() < 1e-15);
        assert_eq!(interaction_time(1.0, 0.0, 0.3), f64::INFINITY);
    }

    #[test]
    fn expected_interaction_time_cases() {
        assert!((expected_interaction_time(PI, 4.0) - 1.0).abs() < 1e-15);
        assert!((expected_interaction_time(1.0, 1.0) - 1.2732395447351628).abs() < 1e-15);
        assert_eq!(expected_interaction_time(1.0, 0.0), f64::INFINITY);
    }

    #[test]
    fn probability_closed_form_points() {
        // a = V S / (2 R C)
        assert_eq!(consistency_probability(1.0, 0.0, 1.0, 1.0), 1.0);
        assert_eq!(consistency_probability(1.0, 2.0, 1.0, 1.0), 0.0);
        let half = consistency_probability(1.0, 2f64.sqrt(), 1.0, 1.0);
        assert!((half - 0.5).abs() < 1e-12, "{half}");
        let two_thirds = consistency_probability(1.0, 1.0, 1.0, 1.0);
        assert!((two_thirds - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn probability_edge_regimes() {
        assert_eq!(consistency_probability(1.0, 1.0, 1.0, 0.0), 0.0);
        assert_eq!(consistency_probability(1.0, 0.0, 1.0, 0.0), 1.0);
        assert_eq!(consistency_probability(1.0, 1e300, 1e300, 1e-300), 0.0);
    }

    #[test]
    fn threshold_is_strict() {
        assert!(is_consistent(0.9, 0.5));
        assert!(!is_consistent(0.5, 0.5));
        assert!(!is_consistent(0.0, 0.1));
    }

    #[test]
    fn evaluate_bundles_both() {
        let r = ConsistencyInput {
            coverage_radius: 1.0,
            relative_speed: 1.0,
            demand_bits: 1.0,
            rate: 1.0,
        }
        .evaluate();
        assert!((r.p_consistent - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.expected_interaction_time - 4.0 / PI).abs() < 1e-15);
    }
}
