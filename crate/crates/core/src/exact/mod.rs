//! Closed forms, recursions, bounds and limit predictions.

mod counts;
mod increasing;
mod moments;

pub use counts::{
    big_to_f64, overlap_count_closed_form, overlap_counts, overlap_profile_entry, path_count, path_count_u128,
    CountReport,
};
pub use increasing::{
    corollary_law, corollary_mass, expected_increasing_count, expected_increasing_count_exact, gamma_ratio,
    increasing_envelope_pmf, increasing_window_prediction, pair_increasing_closed_form, solve_b_f, tv_bound, Centering,
    CorollaryLaw, CorollarySide, GammaRatio, IncreasingPrediction, TvBound,
};
pub use moments::{
    expected_open_count, expected_theta, lln_limit, q_recursion, survival_limit, survival_lower_bound,
    theta_second_moment, variance_bound_open, MomentReport, SurvivalCurve,
};
