//! Numerical thresholds shared across the crate. Change them here and only here.

/// ‖v‖² below which a (max-normalized) vector is treated as zero.
pub const ZERO_VECTOR_NORM_SQR: f64 = 1e-300;

/// Condition-number cap (‖m‖∞·‖m⁻¹‖∞) for the 3×3 inverse.
pub const CONDITION_CAP: f64 = 1e12;

/// Acceptance threshold for "is a projector" on inputs handed to `involution_from_projector`.
pub const PROJECTOR_CHECK: f64 = 1e-9;

/// Relative spectral separation |τa − τb| / max(τa, τb) below which a pair is degenerate.
pub const DEGENERATE_TAU_REL: f64 = 1e-9;

/// Integration constant magnitude (after normalizing max |a| = 1) treated as exactly zero.
pub const ZERO_CONSTANT: f64 = 1e-12;

/// Structural checks (M² = I, ρ hermitian, trace, purity) on analytic paths.
pub const STRUCTURAL: f64 = 1e-10;

/// Imprint detection threshold on ρ22.
pub const IMPRINT_PEAK_THRESHOLD: f64 = 0.5;

/// Minimal peak separation, in grid cells, for two imprints to count as resolved.
pub const MIN_PEAK_SEPARATION_CELLS: usize = 3;

/// Relative tail magnitude allowed at the edge of a quadrature grid.
pub const AREA_TAIL_REL: f64 = 1e-8;

/// Margin, in units of the longest duration, that defines "late time".
pub const LATE_TIME_MARGIN: f64 = 40.0;

/// Oracle: trace drift that aborts integration.
pub const ORACLE_TRACE_DRIFT: f64 = 1e-6;

/// Oracle: relative per-step field change that raises a step warning.
pub const ORACLE_STEP_WARNING: f64 = 0.1;
