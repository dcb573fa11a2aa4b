//! Feature risk curves: sweep one feature across its percentiles over an
//! evaluation set while querying the model directly.

pub mod balance;
pub mod blind_spot;
pub mod curve;
pub mod export;

pub use balance::{balance_eval_set, balanced_indices};
pub use blind_spot::flag_blind_spot_players;
pub use curve::{compute_percentile_grid, feature_risk_curve, CurvePoint, GridPoint, RiskCurve, DEFAULT_POINTS};
pub use export::{export_curve, read_curve_csv, render_svg, write_curve_csv, CurveFormat};
