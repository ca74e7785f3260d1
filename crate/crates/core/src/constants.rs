//! Reference values frozen from `scripts/relu_grid_error.py`, an independent
//! 50-digit brute-force evaluation of the ReLU interpolants.

/// Grid size used for the max-error measurements below.
pub const RELU_GRID_POINTS: usize = 10_001;

/// Max |p_50(x) - max(0, x)| over the uniform grid on [-1, 1], where p_50 is
/// the degree-50 first-kind-node interpolant of ReLU.
pub const RELU_GRID_ERROR_D50: f64 = 0.005_853_994_902_021_377;

/// Same measurement for degrees 10, 20, ..., 100 (rounded to 7 significant digits).
pub const RELU_GRID_ERROR_SWEEP: [(usize, f64); 10] = [
    (10, 0.027_311_1),
    (20, 0.014_238_2),
    (30, 0.009_635_8),
    (40, 0.007_283_0),
    (50, 0.005_854_0),
    (60, 0.004_893_9),
    (70, 0.004_204_3),
    (80, 0.003_685_2),
    (90, 0.003_280_1),
    (100, 0.002_955_3),
];
