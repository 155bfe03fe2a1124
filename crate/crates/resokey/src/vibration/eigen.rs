//! Small dense symmetric eigenproblems and inverse chain construction.
//!
//! Systems here have at most a handful of degrees of freedom, so a cyclic
//! Jacobi sweep gives machine-precision eigenpairs without pulling in a
//! linear-algebra dependency. The inverse direction (building a grounded
//! spring-mass chain with a prescribed spectrum) runs Lanczos on the diagonal
//! eigenvalue matrix to produce a Jacobi tridiagonal, then peels masses and
//! stiffnesses off the tridiagonal row by row.

/// Dense symmetric matrix stored by rows.
pub type Matrix = Vec<Vec<f64>>;

pub fn zeros(n: usize) -> Matrix {
    vec![vec![0.0; n]; n]
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues ascending and the matching eigenvectors as columns of
/// the returned matrix (`vectors[row][col]`, column `r` pairs with value `r`).
pub fn symmetric_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.len();
    let mut a = a.clone();
    let mut v = zeros(n);
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    let off = |a: &Matrix| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    s += a[p][q] * a[p][q];
                }
            }
        }
        s
    };
    let scale: f64 = a
        .iter()
        .flat_map(|r| r.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);

    for _sweep in 0..64 {
        if off(&a) <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[i][i]).collect();
    let mut vectors = zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[row][col] = v[row][src];
        }
    }
    (values, vectors)
}

/// Lanczos tridiagonalization of `diag(eigenvalues)` started from `weights`.
///
/// Returns the Jacobi matrix `(diagonal, off_diagonal)` whose spectrum is the
/// given eigenvalue list and whose first-row eigenvector components are
/// proportional to the (normalized) weights. Full reorthogonalization keeps
/// the tiny problem exact to machine precision. Off-diagonal entries are
/// strictly positive; a vanishing one means the weights degenerate.
pub fn lanczos_jacobi(eigenvalues: &[f64], weights: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = eigenvalues.len();
    assert_eq!(n, weights.len());
    let norm: f64 = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    if norm == 0.0 {
        return None;
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    basis.push(weights.iter().map(|w| w / norm).collect());

    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n.saturating_sub(1));

    for step in 0..n {
        let q = basis[step].clone();
        let mut r: Vec<f64> = (0..n).map(|i| eigenvalues[i] * q[i]).collect();
        let a: f64 = r.iter().zip(&q).map(|(x, y)| x * y).sum();
        alpha.push(a);
        for (x, y) in r.iter_mut().zip(&q) {
            *x -= a * y;
        }
        if step + 1 == n {
            break;
        }
        // Two Gram-Schmidt passes against the whole basis.
        for _ in 0..2 {
            for b in &basis {
                let proj: f64 = r.iter().zip(b).map(|(x, y)| x * y).sum();
                for (x, y) in r.iter_mut().zip(b) {
                    *x -= proj * y;
                }
            }
        }
        let b: f64 = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if b < 1e-12 {
            return None;
        }
        beta.push(b);
        basis.push(r.iter().map(|x| x / b).collect());
    }
    Some((alpha, beta))
}

/// A grounded spring-mass chain recovered from a Jacobi matrix.
#[derive(Debug, Clone)]
pub struct ChainRealization {
    pub masses: Vec<f64>,
    pub stiffnesses: Vec<f64>,
}

/// Decompose a Jacobi matrix (diagonal `d`, positive off-diagonal `e`) into a
/// grounded chain: index 0 carries the ground spring, index n-1 is the free
/// end. Fails when the matrix does not correspond to positive stiffnesses.
pub fn chain_from_jacobi(d: &[f64], e: &[f64]) -> Option<ChainRealization> {
    let n = d.len();
    assert_eq!(e.len(), n - 1);
    let mut masses = vec![0.0; n];
    let mut springs = vec![0.0; n]; // springs[0] grounds element 0; springs[i] couples i-1 and i
    masses[n - 1] = 1.0;

    // Free-end row: d[n-1] = s_{n-1} / m_{n-1}.
    let mut coupling_above = d[n - 1] * masses[n - 1];
    if coupling_above <= 0.0 {
        return None;
    }
    springs[n - 1] = coupling_above;

    for i in (0..n - 1).rev() {
        // Off-diagonal row: |A[i][i+1]| = s_{i+1} / sqrt(m_i m_{i+1}).
        let m = (coupling_above / e[i]).powi(2) / masses[i + 1];
        if !m.is_finite() || m <= 0.0 {
            return None;
        }
        masses[i] = m;
        // Diagonal row: d[i] = (s_i + s_{i+1}) / m_i.
        let s = d[i] * m - coupling_above;
        if s <= 1e-9 * d[i] * m {
            return None;
        }
        springs[i] = s;
        coupling_above = s;
    }

    Some(ChainRealization {
        masses,
        stiffnesses: springs,
    })
}
