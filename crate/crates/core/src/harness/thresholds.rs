//! Pinned acceptance thresholds, shared by the drivers and the test suite.
//!
//! Bump [`THRESHOLDS_VERSION`] whenever a value changes; every run record
//! carries it.

pub const THRESHOLDS_VERSION: &str = "1";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Threshold {
    pub id: &'static str,
    pub value: f64,
    pub meaning: &'static str,
}

const fn t(id: &'static str, value: f64, meaning: &'static str) -> Threshold {
    Threshold { id, value, meaning }
}

pub const THRESHOLDS: &[Threshold] = &[
    t("identity_rel", 1e-12, "exact discrete identities, relative"),
    t("c1_mc_sigmas", 3.0, "Monte-Carlo c¹ oracle, standard errors"),
    t("c1_divergence_r2", 0.99, "min R² of c¹ against log(1/ε) in d = 2"),
    t("self_consistency_rel", 1e-8, "assembled vs direct Y, relative"),
    t("noise_slope_tol", 0.15, "white-noise regularity slope tolerance"),
    t("x1_slope_tol", 0.15, "X₁ regularity slope tolerance"),
    t("y_slope_min_2d", -0.15, "min Y regularity slope, d = 2"),
    t("y_slope_min_3d", -0.65, "min Y regularity slope, d = 3"),
    t("cauchy_max_inversions", 1.0, "allowed growing pairs in the Y study"),
    t("gamma_inverse_rel", 1e-8, "‖Φ(Γv) - v‖ / ‖v‖"),
    t("defect_gap", 0.3, "min naive minus sharp growth exponent"),
    t("mass_drift", 1e-8, "modified-mass relative drift over unit time"),
    t("energy_order_min", 1.7, "min energy-drift order under dt halving"),
    t("mild_order", 2.0, "target mild-residual order"),
    t("mild_order_rel_tol", 0.25, "relative tolerance on the mild order"),
    t("mild_linear", 1e-8, "mild residual of the linear flow"),
    t("strichartz_free_rel", 0.05, "CN free quotient vs exact phases"),
    t("strichartz_spread", 4.0, "max/min Strichartz quotient over j"),
    t("dt_stability_rel", 0.10, "relative change under dt halving, 1D"),
    t("energy_quadratic_ratio", 0.10, "quadratic / |linear| fit coefficient"),
];

/// Value of a pinned threshold.
///
/// # Panics
/// On an unknown id, which is a programming error.
pub fn threshold(id: &str) -> f64 {
    THRESHOLDS
        .iter()
        .find(|t| t.id == id)
        .unwrap_or_else(|| panic!("no threshold named {id}"))
        .value
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_unique() {
        for (i, a) in THRESHOLDS.iter().enumerate() {
            assert!(THRESHOLDS[i + 1..].iter().all(|b| b.id != a.id), "{}", a.id);
        }
        assert_eq!(threshold("defect_gap"), 0.3);
    }
}
