//! Linearization of the flow: Jacobians in both charts, 4×4 eigenvalues
//! from the characteristic quartic, and the Lyapunov-center period.

use std::f64::consts::PI;

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{RotatedState4, State4};
use crate::error::{Error, Result};

/// Which chart a Jacobian was evaluated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Chart {
    Original,
    Rotated,
}

/// A base point tagged with its chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChartPoint {
    Original(State4),
    Rotated(RotatedState4),
}

impl ChartPoint {
    pub fn chart(&self) -> Chart {
        match self {
            ChartPoint::Original(_) => Chart::Original,
            ChartPoint::Rotated(_) => Chart::Rotated,
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        match self {
            ChartPoint::Original(s) => s.to_array(),
            ChartPoint::Rotated(r) => r.to_array(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian4 {
    pub entries: Matrix4<f64>,
    pub chart: Chart,
    pub base_point: ChartPoint,
}

/// Analytic Jacobian of the chart's vector field at `point`.
pub fn jacobian_at(point: ChartPoint) -> Jacobian4 {
    let entries = match point {
        ChartPoint::Original(s) => {
            let State4 { u, a, b, .. } = s;
            let u2 = u * u;
            Matrix4::new(
                0.0, 1.0, 0.0, 0.0,
                -(a * a + b * b - 0.25), 0.0, -2.0 * a * u, -2.0 * b * u,
                2.0 * u * b, 0.0, -1.0, u2,
                -2.0 * u * a, 0.0, -u2, 1.0,
            )
        }
        ChartPoint::Rotated(r) => {
            let RotatedState4 { u, abar, bbar, .. } = r;
            let u2 = u * u;
            Matrix4::new(
                0.0, 1.0, 0.0, 0.0,
                0.25 - abar * abar - bbar * bbar, 0.0, -2.0 * abar * u, -2.0 * bbar * u,
                -2.0 * u * bbar, 0.0, 0.0, -(1.0 + u2),
                2.0 * u * abar, 0.0, u2 - 1.0, 0.0,
            )
        }
    };
    Jacobian4 {
        entries,
        chart: point.chart(),
        base_point: point,
    }
}

/// Eigen-data of a real 4×4 matrix.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub eigenvalues: [Complex64; 4],
    /// Unit eigenvectors, one per eigenvalue.
    pub eigenvectors: [[Complex64; 4]; 4],
    /// `‖(M - λI)x‖` for each pair.
    pub residuals: [f64; 4],
    /// `μ > 0` when `±μ` are both real eigenvalues.
    pub hyperbolic_pair: Option<f64>,
    /// `ω > 0` when `±iω` are both eigenvalues.
    pub elliptic_pair: Option<f64>,
}

/// Relative threshold used to call an eigenvalue real or purely imaginary.
pub const CLASSIFY_TOL: f64 = 1e-9;

/// Residual tolerance, relative to the Frobenius norm of the matrix.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-10;

/// Monic characteristic polynomial coefficients `[c0, c1, c2, c3]` of
/// `λ⁴ + c3 λ³ + c2 λ² + c1 λ + c0`, by Faddeev-LeVerrier.
pub fn characteristic_coefficients(m: &Matrix4<f64>) -> [f64; 4] {
    let id = Matrix4::<f64>::identity();
    let m1 = *m;
    let c3 = -m1.trace();
    let m2 = m * (m1 + id * c3);
    let c2 = -m2.trace() / 2.0;
    let m3 = m * (m2 + id * c2);
    let c1 = -m3.trace() / 3.0;
    let m4 = m * (m3 + id * c1);
    let c0 = -m4.trace() / 4.0;
    [c0, c1, c2, c3]
}

fn poly_eval(c: &[f64; 4], z: Complex64) -> (Complex64, Complex64) {
    // Horner for p and p'.
    let mut p = Complex64::new(1.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for k in (0..4).rev() {
        dp = dp * z + p;
        p = p * z + c[k];
    }
    (p, dp)
}

/// Aberth-Ehrlich iteration on the monic quartic.
fn quartic_roots(c: &[f64; 4]) -> [Complex64; 4] {
    let bound = 1.0 + c.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let mut z: [Complex64; 4] =
        std::array::from_fn(|k| Complex64::from_polar(bound * 0.5 + 0.1, 0.4 + k as f64 * PI / 2.0));
    for _ in 0..2000 {
        let mut worst = 0.0_f64;
        for k in 0..4 {
            let (p, dp) = poly_eval(c, z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..4 {
                if j != k {
                    let d = z[k] - z[j];
                    if d.norm() > 0.0 {
                        s += 1.0 / d;
                    }
                }
            }
            let step = ratio / (1.0 - ratio * s);
            if step.is_finite() {
                z[k] -= step;
                worst = worst.max(step.norm() / z[k].norm().max(1.0));
            }
        }
        if worst < 1e-16 {
            break;
        }
    }
    z
}

/// Smallest singular value of `M - λI` and its right singular vector.
fn null_pair(m: &Matrix4<f64>, lambda: Complex64) -> (f64, [Complex64; 4]) {
    let shifted: Matrix4<Complex64> =
        m.map(|x| Complex64::new(x, 0.0)) - Matrix4::<Complex64>::identity() * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let (idx, sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bs), (i, s)| if *s < bs { (i, *s) } else { (bi, bs) });
    let row = v_t.row(idx);
    (sigma, std::array::from_fn(|j| row[j].conj()))
}

/// A root of multiplicity `m` is a simple root of `p^{(m-1)}`; Newton on that derivative.
fn refine_multiple(c: &[f64; 4], z0: Complex64, m: usize) -> Complex64 {
    // Coefficients of the monic quartic in ascending order, differentiated m-1 times.
    let mut q: Vec<f64> = vec![c[0], c[1], c[2], c[3], 1.0];
    for _ in 1..m {
        q = q.iter().enumerate().skip(1).map(|(k, a)| k as f64 * a).collect();
    }
    let eval = |z: Complex64| {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for a in q.iter().rev() {
            dp = dp * z + p;
            p = p * z + a;
        }
        (p, dp)
    };
    let mut z = z0;
    for _ in 0..50 {
        let (p, dp) = eval(z);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        if !step.is_finite() {
            break;
        }
        z -= step;
        if step.norm() <= 1e-16 * z.norm().max(1.0) {
            break;
        }
    }
    z
}

fn polish(c: &[f64; 4], z: Complex64) -> Complex64 {
    let (p, dp) = poly_eval(c, z);
    if dp.norm() > 1e-8 * z.norm().max(1.0) {
        let step = p / dp;
        if step.is_finite() && step.norm() < 1e-3 * z.norm().max(1.0) {
            return z - step;
        }
    }
    z
}

/// Eigenvalues of a real 4×4 matrix from its characteristic quartic.
///
/// Roots come from an Aberth iteration, get one Newton polish, and clustered
/// roots (numerically split multiple roots) are replaced by their mean when that
/// lowers the eigenvector residual. Fails with `ConvergenceFailure` if any
/// residual exceeds `1e-10 ‖M‖_F`.
pub fn eigenvalues_4x4(m: &Matrix4<f64>) -> Result<SpectrumReport> {
    let c = characteristic_coefficients(m);
    let mut roots = quartic_roots(&c);
    for r in roots.iter_mut() {
        *r = polish(&c, *r);
    }

    // Multiple roots: replace clusters by their centroid when it helps.
    let scale = m.norm().max(1e-300);
    let cluster_radius = 1e-3 * scale.max(1.0);
    let mut assigned = [false; 4];
    for i in 0..4 {
        if assigned[i] {
            continue;
        }
        let members: Vec<usize> = (i..4)
            .filter(|&j| !assigned[j] && (roots[j] - roots[i]).norm() < cluster_radius)
            .collect();
        for &j in &members {
            assigned[j] = true;
        }
        if members.len() > 1 {
            let mean = members.iter().map(|&j| roots[j]).sum::<Complex64>() / members.len() as f64;
            let mean = refine_multiple(&c, mean, members.len());
            let before = members
                .iter()
                .map(|&j| null_pair(m, roots[j]).0)
                .fold(0.0_f64, f64::max);
            let after = null_pair(m, mean).0;
            if after <= before {
                for &j in &members {
                    roots[j] = mean;
                }
            }
        }
    }

    // Real matrix: snap near-real roots onto the axis.
    for r in roots.iter_mut() {
        if r.im.abs() <= CLASSIFY_TOL * r.norm().max(1.0) {
            r.im = 0.0;
        }
    }
    roots.sort_by(|x, y| {
        (x.re, x.im)
            .partial_cmp(&(y.re, y.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut residuals = [0.0; 4];
    let mut eigenvectors = [[Complex64::new(0.0, 0.0); 4]; 4];
    for k in 0..4 {
        let (sigma, vec) = null_pair(m, roots[k]);
        residuals[k] = sigma;
        eigenvectors[k] = vec;
    }
    let worst = residuals.iter().cloned().fold(0.0_f64, f64::max);
    if !(worst <= EIGEN_RESIDUAL_TOL * m.norm()) {
        return Err(Error::ConvergenceFailure { residual: worst });
    }

    Ok(SpectrumReport {
        hyperbolic_pair: find_pair(&roots, true),
        elliptic_pair: find_pair(&roots, false),
        eigenvalues: roots,
        eigenvectors,
        residuals,
    })
}

fn find_pair(roots: &[Complex64; 4], real: bool) -> Option<f64> {
    let tol = |z: &Complex64| CLASSIFY_TOL * z.norm().max(1.0);
    roots
        .iter()
        .filter(|z| {
            if real {
                z.im == 0.0 && z.re > tol(z)
            } else {
                z.re.abs() <= tol(z) && z.im > tol(z)
            }
        })
        .find_map(|z| {
            let target = -*z;
            roots
                .iter()
                .any(|w| (w - target).norm() <= 1e3 * tol(z))
                .then(|| if real { z.re } else { z.im })
        })
}

/// Limiting period `2π/ω` of the Lyapunov family attached to `±iω`.
pub fn lyapunov_period(sr: &SpectrumReport) -> Result<f64> {
    sr.elliptic_pair
        .map(|omega| 2.0 * PI / omega)
        .ok_or(Error::NoEllipticPair)
}

/// Report for an arbitrary list of eigenvalues, for callers that already know them.
pub fn spectrum_from_eigenvalues(eigenvalues: [Complex64; 4]) -> SpectrumReport {
    SpectrumReport {
        hyperbolic_pair: find_pair(&eigenvalues, true),
        elliptic_pair: find_pair(&eigenvalues, false),
        eigenvalues,
        eigenvectors: [[Complex64::new(0.0, 0.0); 4]; 4],
        residuals: [0.0; 4],
    }
}

/// The matrix `C`: rotated-chart Jacobian at the center `(1, 0, 1/2, 0)`.
pub fn center_linearization() -> Jacobian4 {
    jacobian_at(ChartPoint::Rotated(RotatedState4::new(1.0, 0.0, 0.5, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{p_plus, to_rotated};

    #[test]
    fn matrix_c_matches_display() {
        let c = center_linearization().entries;
        let expected = Matrix4::new(
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, -1.0, 0.0,
            0.0, 0.0, 0.0, -2.0,
            1.0, 0.0, 0.0, 0.0,
        );
        assert_eq!(c, expected);
        let via_rotation =
            jacobian_at(ChartPoint::Rotated(to_rotated(&p_plus()))).entries;
        assert!((via_rotation - expected).abs().max() < 1e-15);
    }

    #[test]
    fn original_chart_at_origin() {
        let j = jacobian_at(ChartPoint::Original(State4::ZERO)).entries;
        assert_eq!(j[(1, 0)], 0.25);
        assert_eq!(j[(2, 2)], -1.0);
        assert_eq!(j[(3, 3)], 1.0);
        assert_eq!(j[(0, 0)], 0.0);
        assert_eq!(j[(1, 1)], 0.0);
    }

    #[test]
    fn quartic_of_c() {
        let c = characteristic_coefficients(&center_linearization().entries);
        assert_eq!(c, [-2.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn identity_spectrum() {
        let sr = eigenvalues_4x4(&Matrix4::identity()).unwrap();
        for z in sr.eigenvalues {
            assert!((z - 1.0).norm() < 1e-12, "{z}");
        }
        assert!(sr.elliptic_pair.is_none());
        assert!(matches!(lyapunov_period(&sr), Err(Error::NoEllipticPair)));
    }

    #[test]
    fn simple_periods() {
        let one = spectrum_from_eigenvalues([
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(3.0, 0.0),
            Complex64::new(-3.0, 0.0),
        ]);
        assert!((lyapunov_period(&one).unwrap() - 2.0 * PI).abs() < 1e-15);
        assert_eq!(one.hyperbolic_pair, Some(3.0));
        let two = spectrum_from_eigenvalues([
            Complex64::new(0.0, 2.0),
            Complex64::new(0.0, -2.0),
            Complex64::new(0.0, 2.0),
            Complex64::new(0.0, -2.0),
        ]);
        assert!((lyapunov_period(&two).unwrap() - PI).abs() < 1e-15);
    }
}
