//! Bundled verification suite.
//!
//! Every property group runs on reproducible random samples (ChaCha8 streams
//! derived from one master seed) and reports its worst residual against a
//! pinned tolerance from [`crate::tol`]. The suite is what `verify` runs from
//! the command line and what the acceptance tests assert group by group.

pub mod gen;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::connection::{check_compatibility, chern_gamma};
use crate::curvature::hh_curvature;
use crate::error::Result;
use crate::fd;
use crate::jet::Jet;
use crate::metric::Metric;
use crate::numata::NumataData;
use crate::oracle::RiemannOracle;
use crate::schwarz::{
    cocycle_residual, constant_curvature_map, phi_from_f, theorem_bridge, Interval,
    Orientation,
};
use crate::tol;

/// Sample counts per group; the defaults match the acceptance criteria.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyOptions {
    pub seed: u64,
    pub jets_vs_fd_samples: usize,
    pub homogeneity_samples: usize,
    pub chern_samples: usize,
    pub reduction_samples: usize,
    pub numata_samples: usize,
    pub bridge_samples: usize,
    pub schwarzian_samples: usize,
    pub constant_k_samples: usize,
    pub audit_samples: usize,
    /// Flag vectors per scalar-curvature check.
    pub flag_samples: usize,
    /// A user-declared metric to run the config group on, if any.
    #[serde(skip)]
    pub config_metric: Option<Metric>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 0,
            jets_vs_fd_samples: 50,
            homogeneity_samples: 100,
            chern_samples: 500,
            reduction_samples: 100,
            numata_samples: 100,
            bridge_samples: 100,
            schwarzian_samples: 100,
            constant_k_samples: 50,
            audit_samples: 50,
            flag_samples: 12,
            config_metric: None,
        }
    }
}

/// One property group's outcome.
#[derive(Debug, Clone, Serialize)]
pub struct GroupReport {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub worst_residual: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl GroupReport {
    fn from_residual(name: &str, cases: usize, worst: f64, tolerance: f64, detail: String) -> Self {
        GroupReport {
            name: name.to_string(),
            passed: worst <= tolerance,
            cases,
            worst_residual: worst,
            tolerance,
            detail,
        }
    }

    fn failed(name: &str, tolerance: f64, detail: String) -> Self {
        GroupReport {
            name: name.to_string(),
            passed: false,
            cases: 0,
            worst_residual: f64::INFINITY,
            tolerance,
            detail,
        }
    }
}

/// Whole-suite outcome; serializes deterministically.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub groups: Vec<GroupReport>,
    pub passed: bool,
}

fn group_rng(seed: u64, group: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ group.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Mixed absolute/relative agreement used by the finite-difference audits.
fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1.0f64.max(a.abs()).max(b.abs())
}

/// Run every group and collect the report.
pub fn run_suite(options: &VerifyOptions) -> VerifyReport {
    let mut groups = vec![
        jets_vs_fd(options),
        homogeneity(options),
        chern_axioms(options),
        riemannian_reduction(options),
        numata_scalar_curvature(options),
        bridge_group(options),
        schwarzian_identities(options),
        constant_curvature_family(options),
        derivative_audit(options),
    ];
    if options.config_metric.is_some() {
        groups.push(config_metric_checks(options));
    }
    let passed = groups.iter().all(|g| g.passed);
    VerifyReport {
        seed: options.seed,
        groups,
        passed,
    }
}

/// Jet-extracted derivatives of random smooth expressions against the
/// central-difference oracle, all orders up to three.
pub fn jets_vs_fd(options: &VerifyOptions) -> GroupReport {
    let name = "jets_vs_finite_differences";
    let mut rng = group_rng(options.seed, 1);
    let mut run = || -> Result<(usize, f64)> {
        let mut worst = 0.0f64;
        let mut cases = 0;
        for _ in 0..options.jets_vs_fd_samples {
            let dim = rng.random_range(1..=3usize);
            let expr = gen::random_smooth_expr(dim, &mut rng);
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.6..0.6)).collect();
            let seeds: Vec<Jet> = x
                .iter()
                .enumerate()
                .map(|(i, &v)| Jet::variable(dim, 3, i, v))
                .collect();
            let jet = expr.eval_jet(&seeds)?;
            for alpha in gen::multi_indices_up_to(dim, 3) {
                let exact = jet.derivative_value(&alpha)?;
                let numeric = fd::central_derivative(
                    |p| expr.eval(p).unwrap_or(f64::NAN),
                    &x,
                    &alpha,
                    None,
                );
                worst = worst.max(rel_gap(exact, numeric));
                cases += 1;
            }
        }
        Ok((cases, worst))
    };
    match run() {
        Ok((cases, worst)) => GroupReport::from_residual(
            name,
            cases,
            worst,
            tol::JET_FD,
            "jet derivatives vs central differences, |alpha| <= 3".into(),
        ),
        Err(e) => GroupReport::failed(name, tol::JET_FD, e.to_string()),
    }
}

/// `F(x, ly) = l F(x, y)` and `g(x, ly) = g(x, y)` on random specs.
pub fn homogeneity(options: &VerifyOptions) -> GroupReport {
    let name = "homogeneity";
    let mut rng = group_rng(options.seed, 2);
    let mut run = || -> Result<(usize, f64)> {
        let mut worst = 0.0f64;
        let mut cases = 0;
        for _ in 0..options.homogeneity_samples {
            let n = rng.random_range(2..=3usize);
            let metric = gen::random_metric(n, &mut rng)?;
            let x = gen::random_point(n, &mut rng);
            let y = gen::random_direction(n, &mut rng);
            let lambda = rng.random_range(0.2..8.0);
            let rep = metric.check_homogeneity(&x, &y, lambda)?;
            worst = worst.max(rep.norm_residual).max(rep.g_residual);
            cases += 1;
        }
        Ok((cases, worst))
    };
    match run() {
        Ok((cases, worst)) => GroupReport::from_residual(
            name,
            cases,
            worst,
            tol::HOMOGENEITY,
            "degree-1 homogeneity of F, degree-0 of g".into(),
        ),
        Err(e) => GroupReport::failed(name, tol::HOMOGENEITY, e.to_string()),
    }
}

/// Chern-connection defining requirements on random specs: lower-index
/// symmetry and almost-metric-compatibility (`chern_gamma` itself enforces
/// them; this group records the worst residuals it sees).
pub fn chern_axioms(options: &VerifyOptions) -> GroupReport {
    let name = "chern_axioms";
    let mut rng = group_rng(options.seed, 3);
    let mut run = || -> Result<(usize, f64, f64)> {
        let mut worst_sym = 0.0f64;
        let mut worst_compat = 0.0f64;
        let mut cases = 0;
        for _ in 0..options.chern_samples {
            let n = rng.random_range(2..=3usize);
            let metric = gen::random_metric(n, &mut rng)?;
            let x = gen::random_point(n, &mut rng);
            let y = gen::random_direction(n, &mut rng);
            let frame = chern_gamma(&metric, &x, &y)?;
            worst_sym = worst_sym.max(frame.gamma_symmetry_residual);
            worst_compat = worst_compat.max(frame.compatibility_residual);
            let dx = gen::random_direction(n, &mut rng);
            let dy = gen::random_direction(n, &mut rng);
            worst_compat = worst_compat.max(check_compatibility(&metric, &x, &y, &dx, &dy)?);
            cases += 1;
        }
        Ok((cases, worst_sym, worst_compat))
    };
    match run() {
        Ok((cases, sym, compat)) => {
            // scale both residuals by their own tolerance so one number decides
            let worst = (sym / tol::GAMMA_SYMMETRY).max(compat / tol::COMPATIBILITY);
            GroupReport {
                name: name.to_string(),
                passed: worst <= 1.0,
                cases,
                worst_residual: sym.max(compat),
                tolerance: tol::GAMMA_SYMMETRY.max(tol::COMPATIBILITY),
                detail: format!(
                    "gamma symmetry {sym:.3e} (tol {:.0e}), compatibility {compat:.3e} (tol {:.0e})",
                    tol::GAMMA_SYMMETRY,
                    tol::COMPATIBILITY
                ),
            }
        }
        Err(e) => GroupReport::failed(name, tol::COMPATIBILITY, e.to_string()),
    }
}

/// Flag curvature of the constant-curvature charts and of random Riemannian
/// metrics against the independent sectional-curvature oracle.
pub fn riemannian_reduction(options: &VerifyOptions) -> GroupReport {
    let name = "riemannian_reduction";
    let mut rng = group_rng(options.seed, 4);
    let mut run = || -> Result<(usize, f64)> {
        let mut worst = 0.0f64;
        let mut cases = 0;
        let sphere = gen::sphere_chart()?;
        let hyperbolic = gen::hyperbolic_chart()?;
        for _ in 0..options.reduction_samples {
            let x = [rng.random_range(-0.7..0.7), rng.random_range(-0.7..0.7)];
            let y = gen::random_direction(2, &mut rng);
            let frame = hh_curvature(&sphere, &x, &y)?;
            let v = gen::admissible_flag_vector(&frame, &mut rng)?;
            worst = worst.max((frame.flag_curvature(&v)? - 1.0).abs());

            let frame = hh_curvature(&hyperbolic, &x, &y)?;
            let v = gen::admissible_flag_vector(&frame, &mut rng)?;
            worst = worst.max((frame.flag_curvature(&v)? + 1.0).abs());
            cases += 2;
        }
        // random metrics against the oracle (fewer samples; each needs a
        // finite-difference Riemann tensor)
        for _ in 0..options.reduction_samples / 5 {
            let n = 2;
            let metric = gen::random_riemannian(n, &mut rng)?;
            let oracle = RiemannOracle::new(&metric)?;
            let x = gen::random_point(n, &mut rng);
            let y = gen::random_direction(n, &mut rng);
            let frame = hh_curvature(&metric, &x, &y)?;
            let v = gen::admissible_flag_vector(&frame, &mut rng)?;
            let flag = frame.flag_curvature(&v)?;
            let sect = oracle.sectional(&x, &y, &v)?;
            worst = worst.max((flag - sect).abs());
            cases += 1;
        }
        Ok((cases, worst))
    };
    match run() {
        Ok((cases, worst)) => GroupReport::from_residual(
            name,
            cases,
            worst,
            tol::RIEMANNIAN_REDUCTION,
            "sphere/hyperbolic charts at +/-1 and random metrics vs sectional oracle".into(),
        ),
        Err(e) => GroupReport::failed(name, tol::RIEMANNIAN_REDUCTION, e.to_string()),
    }
}

/// Numata metrics are of scalar curvature and the fitted scalar matches the
/// closed form.
pub fn numata_scalar_curvature(options: &VerifyOptions) -> GroupReport {
    let name = "numata_scalar_curvature";
    let mut rng = group_rng(options.seed, 5);
    let mut run = || -> Result<(usize, f64, f64)> {
        let mut worst_spread = 0.0f64;
        let mut worst_match = 0.0f64;
        let mut cases = 0;
        for _ in 0..options.numata_samples {
            let n = rng.random_range(2..=3usize);
            let f = gen::random_potential(n, &mut rng);
            let data = NumataData::new(n, f)?;
            let x = gen::random_point(n, &mut rng);
            let y = gen::random_direction(n, &mut rng);
            let rep = data.verify_scalar_flag(&x, &y, options.flag_samples, &mut rng)?;
            worst_spread = worst_spread.max(rep.pipeline.spread);
            worst_match = worst_match.max(rep.difference);
            cases += 1;
        }
        Ok((cases, worst_spread, worst_match))
    };
    match run() {
        Ok((cases, spread, diff)) => {
            let worst = (spread / tol::NUMATA_SPREAD).max(diff / tol::NUMATA_MATCH);
            GroupReport {
                name: name.to_string(),
                passed: worst <= 1.0,
                cases,
                worst_residual: spread.max(diff),
                tolerance: tol::NUMATA_SPREAD.max(tol::NUMATA_MATCH),
                detail: format!(
                    "flag spread {spread:.3e} (tol {:.0e}), closed-form gap {diff:.3e} (tol {:.0e})",
                    tol::NUMATA_SPREAD,
                    tol::NUMATA_MATCH
                ),
            }
        }
        Err(e) => GroupReport::failed(name, tol::NUMATA_SPREAD, e.to_string()),
    }
}

/// The 1D prolongation: y-independence of the closed form and agreement with
/// the Schwarzian route on both cones.
pub fn bridge_group(options: &VerifyOptions) -> GroupReport {
    let name = "theorem_bridge";
    let mut rng = group_rng(options.seed, 6);
    let mut run = || -> Result<(usize, f64, f64)> {
        let mut worst_spread = 0.0f64;
        let mut worst_routes = 0.0f64;
        let mut cases = 0;
        let domain = Interval::new(-0.8, 0.8).unwrap();
        let y_samples = [0.01, 0.1, 1.0, 10.0, 100.0];
        for _ in 0..options.bridge_samples {
            let f = gen::random_potential(1, &mut rng);
            let x = rng.random_range(-0.7..0.7);
            let bridge = theorem_bridge(&f, domain, x, &y_samples)?;
            for cone in [&bridge.plus, &bridge.minus] {
                worst_spread = worst_spread.max(cone.y_spread);
                worst_routes = worst_routes.max(cone.route_difference);
            }
            cases += 1;
        }
        Ok((cases, worst_spread, worst_routes))
    };
    match run() {
        Ok((cases, spread, routes)) => {
            let worst = (spread / tol::BRIDGE_Y_SPREAD).max(routes / tol::BRIDGE_ROUTES);
            GroupReport {
                name: name.to_string(),
                passed: worst <= 1.0,
                cases,
                worst_residual: spread.max(routes),
                tolerance: tol::BRIDGE_ROUTES,
                detail: format!(
                    "y-spread {spread:.3e} (tol {:.0e}), route gap {routes:.3e} (tol {:.0e})",
                    tol::BRIDGE_Y_SPREAD,
                    tol::BRIDGE_ROUTES
                ),
            }
        }
        Err(e) => GroupReport::failed(name, tol::BRIDGE_ROUTES, e.to_string()),
    }
}

/// The Schwarzian kernel (Moebius maps) and the composition cocycle.
pub fn schwarzian_identities(options: &VerifyOptions) -> GroupReport {
    let name = "schwarzian_identities";
    let mut rng = group_rng(options.seed, 7);
    let mut run = || -> Result<(usize, f64, f64)> {
        let mut worst_kernel = 0.0f64;
        let mut worst_cocycle = 0.0f64;
        let mut cases = 0;
        for _ in 0..options.schwarzian_samples {
            let map = gen::random_moebius(&mut rng)?;
            let x = rng.random_range(map.domain().lo..map.domain().hi);
            worst_kernel = worst_kernel.max(map.schwarzian(x)?.abs());
            cases += 1;
        }
        for _ in 0..options.schwarzian_samples {
            let (outer, inner) = gen::random_composable_pair(&mut rng)?;
            let x = rng.random_range(inner.domain().lo..inner.domain().hi);
            worst_cocycle = worst_cocycle.max(cocycle_residual(&outer, &inner, x)?);
            cases += 1;
        }
        Ok((cases, worst_kernel, worst_cocycle))
    };
    match run() {
        Ok((cases, kernel, cocycle)) => {
            let worst = (kernel / tol::MOBIUS_KERNEL).max(cocycle / tol::COCYCLE);
            GroupReport {
                name: name.to_string(),
                passed: worst <= 1.0,
                cases,
                worst_residual: kernel.max(cocycle),
                tolerance: tol::COCYCLE,
                detail: format!(
                    "Moebius kernel {kernel:.3e} (tol {:.0e}), cocycle {cocycle:.3e} (tol {:.0e})",
                    tol::MOBIUS_KERNEL,
                    tol::COCYCLE
                ),
            }
        }
        Err(e) => GroupReport::failed(name, tol::COCYCLE, e.to_string()),
    }
}

/// The constant-curvature solution family reproduces its target curvature,
/// and the arctangent representative gives K = 1.
pub fn constant_curvature_family(options: &VerifyOptions) -> GroupReport {
    let name = "constant_curvature_family";
    let mut rng = group_rng(options.seed, 8);
    let mut run = || -> Result<(usize, f64)> {
        let mut worst = 0.0f64;
        let mut cases = 0;
        for _ in 0..options.constant_k_samples {
            let (k, map) = gen::random_constant_curvature_map(&mut rng)?;
            for x in map.domain().grid(9) {
                worst = worst.max((map.curvature(x)? - k).abs());
            }
            cases += 1;
        }
        Ok((cases, worst))
    };
    let arctan_check = || -> Result<f64> {
        let map = constant_curvature_map(1.0, 1.0, 0.0, 0.0, 1.0, Interval::new(-1.0, 1.0)?)?;
        let mut worst = 0.0f64;
        for x in map.domain().grid(17) {
            worst = worst.max((map.curvature(x)? - 1.0).abs());
        }
        Ok(worst)
    };
    match (run(), arctan_check()) {
        (Ok((cases, worst)), Ok(arctan_worst)) => {
            let scaled = (worst / tol::CONSTANT_K).max(arctan_worst / tol::ARCTAN_K);
            GroupReport {
                name: name.to_string(),
                passed: scaled <= 1.0,
                cases: cases + 1,
                worst_residual: worst.max(arctan_worst),
                tolerance: tol::CONSTANT_K,
                detail: format!(
                    "family deviation {worst:.3e} (tol {:.0e}), arctan case {arctan_worst:.3e} (tol {:.0e})",
                    tol::CONSTANT_K,
                    tol::ARCTAN_K
                ),
            }
        }
        (Err(e), _) | (_, Err(e)) => GroupReport::failed(name, tol::CONSTANT_K, e.to_string()),
    }
}

/// Audits the pipeline's jet-extracted derivatives against the
/// finite-difference oracle: fundamental tensor, Cartan tensor, mixed
/// `F^2` derivatives, the horizontal derivative of Gamma, potential
/// derivatives and map derivatives.
pub fn derivative_audit(options: &VerifyOptions) -> GroupReport {
    let name = "derivative_audit";
    let mut rng = group_rng(options.seed, 9);
    let mut run = || -> Result<(usize, f64)> {
        let mut worst = 0.0f64;
        let mut cases = 0;
        for sample in 0..options.audit_samples {
            let n = 2;
            let metric = gen::random_metric(n, &mut rng)?;
            let x = gen::random_point(n, &mut rng);
            let y = gen::random_direction(n, &mut rng);
            let frame = metric.tensor_frame(&x, &y)?;

            // g_ij against the FD Hessian of F^2/2 in y
            for i in 0..n {
                for j in 0..n {
                    let mut alpha = vec![0usize; n];
                    alpha[i] += 1;
                    alpha[j] += 1;
                    let numeric = fd::central_derivative(
                        |yy| 0.5 * metric.norm(&x, yy).map(|f| f * f).unwrap_or(f64::NAN),
                        &y,
                        &alpha,
                        None,
                    );
                    worst = worst.max(rel_gap(frame.g[(i, j)], numeric));
                    cases += 1;
                }
            }
            // Cartan tensor against the FD third derivative (one index triple
            // per sample keeps the audit cheap)
            let i = sample % n;
            let mut alpha = vec![0usize; n];
            alpha[i] += 2;
            alpha[(i + 1) % n] += 1;
            let numeric = fd::central_derivative(
                |yy| 0.25 * metric.norm(&x, yy).map(|f| f * f).unwrap_or(f64::NAN),
                &y,
                &alpha,
                None,
            );
            let exact = if i == (i + 1) % n {
                frame.cartan[(i, i, i)]
            } else {
                frame.cartan[(i, i, (i + 1) % n)]
            };
            worst = worst.max(rel_gap(exact, numeric));
            cases += 1;

            // horizontal derivative of Gamma against outer differences of the
            // degree-3 connection route
            let base = chern_gamma(&metric, &x, &y)?;
            let h = f64::EPSILON.powf(1.0 / 3.0);
            for k in 0..n {
                let hk = h * (1.0 + x[k].abs());
                let mut xp = x.clone();
                xp[k] += hk;
                let plus = chern_gamma(&metric, &xp, &y)?;
                xp[k] -= 2.0 * hk;
                let minus = chern_gamma(&metric, &xp, &y)?;
                let mut dg_dx = (plus.gamma[(0, 0, 1)] - minus.gamma[(0, 0, 1)]) / (2.0 * hk);
                for m in 0..n {
                    let hm = h * (1.0 + y[m].abs());
                    let mut yp = y.clone();
                    yp[m] += hm;
                    let plus = chern_gamma(&metric, &x, &yp)?;
                    yp[m] -= 2.0 * hm;
                    let minus = chern_gamma(&metric, &x, &yp)?;
                    let dgamma_dy = (plus.gamma[(0, 0, 1)] - minus.gamma[(0, 0, 1)]) / (2.0 * hm);
                    dg_dx -= base.nonlinear[(m, k)] * dgamma_dy;
                }
                // same quantity from the degree-4 pipeline
                let pipeline = crate::connection::Pipeline::new(&metric, &x, &y, 4, true)?;
                let jet = &pipeline.gamma[1]; // Gamma^0_01
                let grad = jet.gradient();
                let mut exact = grad[k];
                for m in 0..n {
                    exact -= base.nonlinear[(m, k)] * grad[n + m];
                }
                worst = worst.max(rel_gap(exact, dg_dx));
                cases += 1;
            }

            // potential derivatives and map derivatives
            let f = gen::random_potential(1, &mut rng);
            let x1 = rng.random_range(-0.6..0.6);
            let map = phi_from_f(&f, Orientation::Preserving, Interval::new(-0.8, 0.8)?)?;
            let (_, d1, d2, d3) = map.derivatives(x1)?;
            for (order, exact) in [(1usize, d1), (2, d2), (3, d3)] {
                let numeric = fd::central_derivative(
                    |p| map.phi().eval(p).unwrap_or(f64::NAN),
                    &[x1],
                    &[order],
                    None,
                );
                worst = worst.max(rel_gap(exact, numeric));
                cases += 1;
            }
        }
        Ok((cases, worst))
    };
    match run() {
        Ok((cases, worst)) => GroupReport::from_residual(
            name,
            cases,
            worst,
            tol::FD_AUDIT,
            "pipeline derivatives vs finite differences".into(),
        ),
        Err(e) => GroupReport::failed(name, tol::FD_AUDIT, e.to_string()),
    }
}

/// Frame and connection checks on a metric supplied through the config file;
/// domain violations (e.g. an inadmissible Randers one-form) fail the group.
pub fn config_metric_checks(options: &VerifyOptions) -> GroupReport {
    let name = "config_metric";
    let Some(metric) = options.config_metric.as_ref() else {
        return GroupReport::failed(name, tol::COMPATIBILITY, "no metric configured".into());
    };
    let mut rng = group_rng(options.seed, 10);
    let n = metric.dim();
    let mut run = || -> Result<(usize, f64)> {
        let mut worst = 0.0f64;
        let mut cases = 0;
        for _ in 0..20 {
            let x = gen::random_point(n, &mut rng);
            let y = gen::random_direction(n, &mut rng);
            let frame = metric.tensor_frame(&x, &y)?;
            let ell = frame.ell.to_vec();
            worst = worst.max((frame.g_form(&ell, &ell) - 1.0).abs());
            if n >= 2 {
                let conn = chern_gamma(&metric, &x, &y)?;
                worst = worst.max(conn.compatibility_residual);
            } else {
                let conn = chern_gamma(&metric, &x, &y)?;
                worst = worst.max(conn.nonlinear_residual);
            }
            cases += 1;
        }
        Ok((cases, worst))
    };
    match run() {
        Ok((cases, worst)) => GroupReport::from_residual(
            name,
            cases,
            worst,
            tol::COMPATIBILITY,
            format!("frame and connection checks on the {} config metric", metric.family().name()),
        ),
        Err(e) => GroupReport::failed(name, tol::COMPATIBILITY, e.to_string()),
    }
}
