//! Small symmetric eigen-solvers.
//!
//! Eigenvalues are returned in descending order. Every eigenvector is
//! oriented so that its first component that is not negligible is positive,
//! which makes the decomposition deterministic when eigenvalues tie.

use nalgebra::{Matrix3, Vector2, Vector3};

const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEigen3 {
    pub values: [f64; 3],
    /// Unit eigenvectors, column `k` pairs with `values[k]`.
    pub vectors: Matrix3<f64>,
}

impl SymEigen3 {
    pub fn vector(&self, k: usize) -> Vector3<f64> {
        self.vectors.column(k).into_owned()
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }

    pub fn min(&self) -> f64 {
        self.values[2]
    }

    /// Rebuilds `V f(Λ) Vᵀ`.
    pub fn compose(&self, f: impl Fn(f64) -> f64) -> Matrix3<f64> {
        let mut out = Matrix3::zeros();
        for k in 0..3 {
            let v = self.vector(k);
            out += f(self.values[k]) * v * v.transpose();
        }
        out
    }
}

/// Cyclic Jacobi eigen-decomposition of a symmetric 3×3 matrix.
///
/// Only the upper triangle is read.
pub fn sym_eigen3(m: &Matrix3<f64>) -> SymEigen3 {
    let mut a = symmetrize_upper(m);
    let mut v = Matrix3::<f64>::identity();
    let scale = a.norm();

    if scale > 0.0 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            let off = (a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2)).sqrt();
            if off <= JACOBI_TOL * scale {
                break;
            }
            for (p, q) in [(0, 1), (0, 2), (1, 2)] {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let mut vectors = Matrix3::zeros();
    let mut values = [0.0; 3];
    for (k, &i) in order.iter().enumerate() {
        values[k] = a[(i, i)];
        vectors.set_column(k, &orient3(v.column(i).into_owned()));
    }
    SymEigen3 { values, vectors }
}

fn rotate(a: &mut Matrix3<f64>, v: &mut Matrix3<f64>, p: usize, q: usize, c: f64, s: f64) {
    // A' = Jᵀ A J with J the Givens rotation in the (p, q) plane.
    let mut j = Matrix3::<f64>::identity();
    j[(p, p)] = c;
    j[(q, q)] = c;
    j[(p, q)] = s;
    j[(q, p)] = -s;
    *a = j.transpose() * *a * j;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    *v *= j;
}

/// Closed-form eigen-decomposition of the symmetric 2×2 matrix `[[a, b], [b, c]]`.
pub fn sym_eigen2(a: f64, b: f64, c: f64) -> ([f64; 2], [Vector2<f64>; 2]) {
    let mean = 0.5 * (a + c);
    let half_diff = 0.5 * (a - c);
    let radius = half_diff.hypot(b);
    let hi = mean + radius;
    let lo = mean - radius;

    let major = if radius == 0.0 {
        Vector2::new(1.0, 0.0)
    } else if half_diff >= 0.0 {
        // Pick the better-conditioned of the two equivalent forms.
        Vector2::new(half_diff + radius, b).normalize()
    } else {
        Vector2::new(b, radius - half_diff).normalize()
    };
    let major = orient2(major);
    let minor = orient2(Vector2::new(-major.y, major.x));
    ([hi, lo], [major, minor])
}

pub(crate) fn orient3(v: Vector3<f64>) -> Vector3<f64> {
    match v.iter().find(|x| x.abs() > 1e-12) {
        Some(&x) if x < 0.0 => -v,
        _ => v,
    }
}

pub(crate) fn orient2(v: Vector2<f64>) -> Vector2<f64> {
    match v.iter().find(|x| x.abs() > 1e-12) {
        Some(&x) if x < 0.0 => -v,
        _ => v,
    }
}

pub(crate) fn symmetrize_upper(m: &Matrix3<f64>) -> Matrix3<f64> {
    let mut s = *m;
    for i in 0..3 {
        for j in (i + 1)..3 {
            s[(j, i)] = m[(i, j)];
        }
    }
    s
}

pub(crate) fn symmetrize(m: &Matrix3<f64>) -> Matrix3<f64> {
    0.5 * (m + m.transpose())
}
