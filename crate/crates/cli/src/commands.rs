//! Command implementations. Grid and point sweeps evaluate in parallel;
//! report rows keep the declared point/direction order regardless of the
//! execution schedule, and per-point RNG streams are derived from the master
//! seed so reports are reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use finsler_core::curvature::hh_curvature;
use finsler_core::metric::Metric;
use finsler_core::numata::NumataData;
use finsler_core::schwarz::{phi_from_f, CircleMap, Interval, Orientation};
use finsler_core::tol;
use finsler_core::Error;

use crate::config::{DirectionSpec, RunOptions};

/// One (x, y, v) evaluation. The closed-form column is filled for Numata
/// families only; the flag vector is empty on the 1D Schwarzian route.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureRow {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub v: Vec<f64>,
    pub k_pipeline: Option<f64>,
    pub k_closed_form: Option<f64>,
    pub abs_diff: Option<f64>,
    pub status: String,
}

impl CurvatureRow {
    pub fn columns(dim: usize) -> Vec<String> {
        let mut cols = Vec::new();
        for i in 1..=dim {
            cols.push(format!("x{i}"));
        }
        for i in 1..=dim {
            cols.push(format!("y{i}"));
        }
        for i in 1..=dim {
            cols.push(format!("v{i}"));
        }
        cols.extend(
            ["k_pipeline", "k_closed_form", "abs_diff", "status"]
                .iter()
                .map(|s| s.to_string()),
        );
        cols
    }

    pub fn cells(&self, dim: usize) -> Vec<String> {
        let mut cells = Vec::new();
        for i in 0..dim {
            cells.push(crate::report::cell(self.x.get(i).copied()));
        }
        for i in 0..dim {
            cells.push(crate::report::cell(self.y.get(i).copied()));
        }
        for i in 0..dim {
            cells.push(crate::report::cell(self.v.get(i).copied()));
        }
        cells.push(crate::report::cell(self.k_pipeline));
        cells.push(crate::report::cell(self.k_closed_form));
        cells.push(crate::report::cell(self.abs_diff));
        cells.push(self.status.clone());
        cells
    }
}

fn task_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn random_unit_direction<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut y: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let len = y.iter().map(|c| c * c).sum::<f64>().sqrt();
        if len < 1e-2 {
            continue;
        }
        for c in &mut y {
            *c /= len;
        }
        return y;
    }
}

/// Curvature rows over the given points; shared by `curvature` (explicit
/// points) and `sweep` (grid points).
pub fn curvature_rows(
    metric: &Metric,
    points: &[Vec<f64>],
    directions: &DirectionSpec,
    options: &RunOptions,
) -> Vec<CurvatureRow> {
    let rows: Vec<Vec<CurvatureRow>> = points
        .par_iter()
        .enumerate()
        .map(|(index, x)| {
            let mut rng = task_rng(options.seed, index);
            let dirs: Vec<Vec<f64>> = match directions {
                DirectionSpec::Explicit(list) => list.clone(),
                DirectionSpec::Random(count) => (0..*count)
                    .map(|_| random_unit_direction(metric.dim(), &mut rng))
                    .collect(),
            };
            let mut rows = Vec::new();
            for y in &dirs {
                point_rows(metric, x, y, options, &mut rng, &mut rows);
            }
            rows
        })
        .collect();
    rows.into_iter().flatten().collect()
}

fn error_row(x: &[f64], y: &[f64], err: &Error) -> CurvatureRow {
    CurvatureRow {
        x: x.to_vec(),
        y: y.to_vec(),
        v: Vec::new(),
        k_pipeline: None,
        k_closed_form: None,
        abs_diff: None,
        status: err.code().to_string(),
    }
}

fn point_rows(
    metric: &Metric,
    x: &[f64],
    y: &[f64],
    options: &RunOptions,
    rng: &mut ChaCha8Rng,
    rows: &mut Vec<CurvatureRow>,
) {
    if metric.dim() == 1 {
        rows.push(one_dim_row(metric, x, y, options));
        return;
    }
    let frame = match hh_curvature(metric, x, y) {
        Ok(frame) => frame,
        Err(e) => {
            rows.push(error_row(x, y, &e));
            return;
        }
    };
    let closed_form = metric
        .potential()
        .map(|f| NumataData::new(metric.dim(), f.clone())?.flag_curvature(x, y))
        .transpose();
    let closed_form = match closed_form {
        Ok(k) => k,
        Err(e) => {
            rows.push(error_row(x, y, &e));
            return;
        }
    };
    let ell = frame.tensors.ell.to_vec();
    let mut emitted = 0usize;
    let mut attempts = 0usize;
    while emitted < options.samples && attempts < options.samples * 200 {
        attempts += 1;
        let v = random_unit_direction(metric.dim(), rng);
        let denom = frame.tensors.g_form(&v, &v) - frame.tensors.g_form(&ell, &v).powi(2);
        if denom < tol::SAMPLE_DENOMINATOR {
            continue;
        }
        match frame.flag_curvature(&v) {
            Ok(k) => {
                let abs_diff = closed_form.map(|c| (k - c).abs());
                let status = match abs_diff {
                    Some(d) if d > options.tolerance => "tolerance_exceeded".to_string(),
                    _ => "ok".to_string(),
                };
                rows.push(CurvatureRow {
                    x: x.to_vec(),
                    y: y.to_vec(),
                    v,
                    k_pipeline: Some(k),
                    k_closed_form: closed_form,
                    abs_diff,
                    status,
                });
                emitted += 1;
            }
            Err(e) => {
                rows.push(error_row(x, y, &e));
                return;
            }
        }
    }
}

/// One-dimensional metrics bypass the flag pipeline: the pipeline column
/// carries the Schwarzian-route value and the row is marked `schwarz_route`.
fn one_dim_row(metric: &Metric, x: &[f64], y: &[f64], options: &RunOptions) -> CurvatureRow {
    let Some(f) = metric.potential() else {
        return error_row(x, y, &Error::OneDimensional);
    };
    let run = || -> Result<(f64, f64), Error> {
        let data = NumataData::new(1, f.clone())?;
        let closed = data.flag_curvature(x, y)?;
        let orientation = if y[0] > 0.0 {
            Orientation::Preserving
        } else {
            Orientation::Reversing
        };
        let domain = Interval::new(x[0] - 1e-3, x[0] + 1e-3)?;
        let map = phi_from_f(f, orientation, domain)?;
        Ok((map.curvature(x[0])?, closed))
    };
    match run() {
        Ok((schwarz_k, closed)) => {
            let abs_diff = (schwarz_k - closed).abs();
            CurvatureRow {
                x: x.to_vec(),
                y: y.to_vec(),
                v: Vec::new(),
                k_pipeline: Some(schwarz_k),
                k_closed_form: Some(closed),
                abs_diff: Some(abs_diff),
                status: if abs_diff > options.tolerance {
                    "tolerance_exceeded".to_string()
                } else {
                    "schwarz_route".to_string()
                },
            }
        }
        Err(e) => error_row(x, y, &e),
    }
}

/// One sample point of the 1D route.
#[derive(Debug, Clone, Serialize)]
pub struct SchwarzRow {
    pub x: f64,
    pub phi_prime: Option<f64>,
    pub schwarzian: Option<f64>,
    pub k: Option<f64>,
    /// |K - target| in constant-curvature mode.
    pub deviation: Option<f64>,
    pub status: String,
}

impl SchwarzRow {
    pub fn columns() -> Vec<String> {
        ["x", "phi_prime", "schwarzian", "k", "deviation", "status"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    pub fn cells(&self) -> Vec<String> {
        vec![
            crate::report::cell(Some(self.x)),
            crate::report::cell(self.phi_prime),
            crate::report::cell(self.schwarzian),
            crate::report::cell(self.k),
            crate::report::cell(self.deviation),
            self.status.clone(),
        ]
    }
}

pub fn schwarz_rows(
    map: &CircleMap,
    target: Option<f64>,
    points: &[f64],
    options: &RunOptions,
) -> Vec<SchwarzRow> {
    points
        .iter()
        .map(|&x| match map.point(x) {
            Ok(p) => {
                let deviation = target.map(|t| (p.curvature - t).abs());
                let status = match deviation {
                    Some(d) if d > options.tolerance => "tolerance_exceeded".to_string(),
                    _ => "ok".to_string(),
                };
                SchwarzRow {
                    x,
                    phi_prime: Some(p.phi_prime),
                    schwarzian: Some(p.schwarzian),
                    k: Some(p.curvature),
                    deviation,
                    status,
                }
            }
            Err(e) => SchwarzRow {
                x,
                phi_prime: None,
                schwarzian: None,
                k: None,
                deviation: None,
                status: e.code().to_string(),
            },
        })
        .collect()
}
