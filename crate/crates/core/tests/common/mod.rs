#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use reflecta::linalg::{Matrix, SymMatrix, Vector};
use reflecta::quadric::{Ellipsoid, ProjLine};
use reflecta::rng::{indexed_rng, unit_vector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    indexed_rng(seed, 0)
}

pub fn v(x: &[f64]) -> Vector {
    Vector::from_column_slice(x)
}

pub fn random_rotation<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    let cols: Vec<Vector> = (0..n).map(|_| unit_vector(rng, n)).collect();
    Matrix::from_columns(&cols).qr().q()
}

/// `k` eigenvalues in `[0.2, 5]` with pairwise relative gaps of at least 15%.
pub fn separated_eigenvalues<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    loop {
        let mut a: Vec<f64> = (0..k).map(|_| 0.2 * 25f64.powf(rng.random::<f64>())).collect();
        a.sort_by(f64::total_cmp);
        if a.windows(2).all(|w| w[1] / w[0] > 1.15) {
            return a;
        }
    }
}

/// Ellipsoid with eigenvalue group sizes `mult`, random eigenvalues and a
/// random rotation (or axis-aligned with fixed eigenvalues `1, 1/4, 1/9, ...`).
pub fn grouped_ellipsoid<R: Rng>(rng: &mut R, mult: &[usize], random: bool) -> Ellipsoid {
    let n: usize = mult.iter().sum();
    let vals = if random {
        separated_eigenvalues(rng, mult.len())
    } else {
        (1..=mult.len()).map(|i| 1.0 / (i * i) as f64).collect()
    };
    let diag: Vec<f64> = mult
        .iter()
        .zip(&vals)
        .flat_map(|(&m, &a)| std::iter::repeat_n(a, m))
        .collect();
    let d = Matrix::from_diagonal(&Vector::from_vec(diag));
    let q = if random { random_rotation(rng, n) } else { Matrix::identity(n, n) };
    Ellipsoid::centered(SymMatrix::new(&q * d * q.transpose()).unwrap()).unwrap()
}

/// Ellipsoid with distinct random eigenvalues, random rotation and center.
pub fn random_ellipsoid<R: Rng>(rng: &mut R, n: usize) -> Ellipsoid {
    let e = grouped_ellipsoid(rng, &vec![1; n], true);
    let c = unit_vector(rng, n) * rng.random::<f64>();
    Ellipsoid::new(c, e.form().clone()).unwrap()
}

pub fn random_line<R: Rng>(rng: &mut R, n: usize) -> ProjLine {
    ProjLine::new(&unit_vector(rng, n)).unwrap()
}

/// Unit vector orthogonal to `u`.
pub fn random_orthogonal<R: Rng>(rng: &mut R, u: &Vector) -> Vector {
    loop {
        let w = unit_vector(rng, u.len());
        let p = &w - u * u.dot(&w);
        if p.norm() > 1e-3 {
            return p.normalize();
        }
    }
}
