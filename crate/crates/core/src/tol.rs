//! Tolerances used by runtime consistency checks, the verification suite and
//! the acceptance tests. Chosen for degree-3/4 jet round-off at coefficient
//! magnitudes up to one; reports quote them verbatim.

/// Symmetry of the Chern coefficients in their lower indices.
pub const GAMMA_SYMMETRY: f64 = 1e-10;
/// `N^i_j = Gamma^i_jk y^k`.
pub const NONLINEAR_FROM_GAMMA: f64 = 1e-8;
/// Almost-metric-compatibility of the Chern connection.
pub const COMPATIBILITY: f64 = 1e-8;
/// Antisymmetry of the hh-curvature in its last two indices.
pub const R4_ANTISYMMETRY: f64 = 1e-8;
/// Symmetry of the contracted curvature `R_ik`.
pub const RIK_SYMMETRY: f64 = 1e-7;
/// `R_ik l^k = 0`; recorded on the frame, not fatal.
pub const RIK_ELL: f64 = 1e-7;
/// Flag denominator below which a flag vector counts as degenerate.
pub const FLAG_DENOMINATOR: f64 = 1e-10;
/// Rejection threshold when sampling random flag vectors.
pub const SAMPLE_DENOMINATOR: f64 = 1e-6;
/// Flag curvature of the constant-curvature Riemannian charts.
pub const RIEMANNIAN_REDUCTION: f64 = 1e-6;
/// Spread of flag curvature over flag vectors for Numata metrics.
pub const NUMATA_SPREAD: f64 = 1e-5;
/// Agreement between the pipeline and the Numata closed form.
pub const NUMATA_MATCH: f64 = 1e-5;
/// y-independence of the prolonged one-dimensional curvature.
pub const BRIDGE_Y_SPREAD: f64 = 1e-9;
/// Agreement between the prolonged closed form and the Schwarzian route.
pub const BRIDGE_ROUTES: f64 = 1e-8;
/// Constancy and target agreement of the constant-curvature family.
pub const CONSTANT_K: f64 = 1e-7;
/// The arctangent representative of the constant-curvature family.
pub const ARCTAN_K: f64 = 1e-9;
/// Schwarzian of a Moebius map.
pub const MOBIUS_KERNEL: f64 = 1e-10;
/// Schwarzian composition cocycle.
pub const COCYCLE: f64 = 1e-8;
/// Jet-vs-finite-difference agreement on smooth test functions.
pub const JET_FD: f64 = 1e-5;
/// Jet-vs-finite-difference agreement on the pipeline audit.
pub const FD_AUDIT: f64 = 1e-4;
/// Homogeneity residuals of F and g.
pub const HOMOGENEITY: f64 = 1e-11;
/// |phi'| below which a map point counts as critical.
pub const CRITICAL_POINT: f64 = 1e-12;
/// Allowed deviation of a Moebius determinant from +/-1.
pub const DETERMINANT: f64 = 1e-12;
