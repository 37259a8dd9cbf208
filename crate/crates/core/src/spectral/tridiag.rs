//! Eigenvalue kernels for symmetric tridiagonal matrices: implicit-shift QL
//! for the whole spectrum and Sturm-sequence bisection for single edge
//! eigenvalues.

use crate::ensembles::TridiagonalMatrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 60;

/// All eigenvalues (ascending) by the root-free (Pal–Walker–Kahan) variant
/// of implicit QL, which works on squared off-diagonals and needs no square
/// roots in the inner loop. The matrix is scaled to unit norm first.
pub fn ql_eigenvalues(t: &TridiagonalMatrix) -> Result<Vec<f64>> {
    let n = t.len();
    let scale = t.norm_bound();
    if scale == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut d: Vec<f64> = t.diag.iter().map(|x| x / scale).collect();
    let mut e2: Vec<f64> = t
        .offdiag
        .iter()
        .map(|x| (x / scale) * (x / scale))
        .collect();
    e2.push(0.0);
    let eps2 = f64::EPSILON * f64::EPSILON;
    let safmin = f64::MIN_POSITIVE;

    let mut l = 0;
    let mut sweeps = 0;
    while l < n {
        let mut m = l;
        while m + 1 < n {
            if e2[m] <= eps2 * (d[m] * d[m + 1]).abs() + safmin {
                e2[m] = 0.0;
                break;
            }
            m += 1;
        }
        if m == l {
            l += 1;
            sweeps = 0;
            continue;
        }
        if m == l + 1 {
            let (r1, r2) = eig2(d[l], e2[l].sqrt(), d[l + 1]);
            d[l] = r1;
            d[l + 1] = r2;
            e2[l] = 0.0;
            l += 2;
            sweeps = 0;
            continue;
        }
        sweeps += 1;
        if sweeps > MAX_SWEEPS {
            return Err(Error::NoConvergence { index: l });
        }
        // Wilkinson-type shift from the leading 2×2 block.
        let p0 = d[l];
        let rte = e2[l].sqrt();
        let mut sigma = (d[l + 1] - p0) / (2.0 * rte);
        let r = sigma.hypot(1.0);
        sigma = p0 - rte / (sigma + r.copysign(sigma));

        let (mut c, mut s) = (1.0, 0.0);
        let mut gamma = d[m] - sigma;
        let mut p = gamma * gamma;
        for i in (l..m).rev() {
            let bb = e2[i];
            let r = p + bb;
            if i + 1 != m {
                e2[i + 1] = s * r;
            }
            let oldc = c;
            c = p / r;
            s = bb / r;
            let oldgam = gamma;
            let alpha = d[i];
            gamma = c * (alpha - sigma) - s * oldgam;
            d[i + 1] = oldgam + (alpha - gamma);
            p = if c != 0.0 {
                gamma * gamma / c
            } else {
                oldc * bb
            };
        }
        e2[l] = s * p;
        d[l] = sigma + gamma;
    }
    for x in &mut d {
        *x *= scale;
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Eigenvalues (larger first) of the symmetric 2×2 matrix [[a, b], [b, c]].
fn eig2(a: f64, b: f64, c: f64) -> (f64, f64) {
    let sm = a + c;
    let adf = (a - c).abs();
    let ab = (2.0 * b).abs();
    let (acmx, acmn) = if a.abs() > c.abs() { (a, c) } else { (c, a) };
    let rt = if adf > ab {
        adf * (1.0 + (ab / adf).powi(2)).sqrt()
    } else if adf < ab {
        ab * (1.0 + (adf / ab).powi(2)).sqrt()
    } else {
        ab * std::f64::consts::SQRT_2
    };
    if sm < 0.0 {
        let rt1 = 0.5 * (sm - rt);
        (rt1, (acmx / rt1) * acmn - (b / rt1) * b)
    } else if sm > 0.0 {
        let rt1 = 0.5 * (sm + rt);
        (rt1, (acmx / rt1) * acmn - (b / rt1) * b)
    } else {
        (0.5 * rt, -0.5 * rt)
    }
}

/// Number of eigenvalues strictly below `x` (negative pivots of the LDLᵀ
/// factorization of T − x).
pub fn count_below(t: &TridiagonalMatrix, x: f64) -> usize {
    let n = t.len();
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut q = t.diag[0] - x;
    for i in 0..n {
        if i > 0 {
            let b = t.offdiag[i - 1];
            q = (t.diag[i] - x) - b * b / q;
        }
        if q == 0.0 {
            q = -tiny;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The k-th largest eigenvalue (k = 1 is λ₁) by bisection on the Sturm
/// count, to full double precision.
pub fn kth_largest(t: &TridiagonalMatrix, k: usize) -> Result<f64> {
    let n = t.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "eigenvalue rank {k} outside 1..={n}"
        )));
    }
    let bound = t.norm_bound();
    let (mut lo, mut hi) = (-bound - f64::MIN_POSITIVE, bound + f64::MIN_POSITIVE);
    // Invariant: count_below(lo) ≤ n − k < count_below(hi).
    let target = n - k;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(hi);
        }
        if count_below(t, mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

pub fn largest_eigenvalue(t: &TridiagonalMatrix) -> f64 {
    kth_largest(t, 1).expect("non-empty matrix")
}

/// Solves (T − σI)x = rhs in place by Gaussian elimination with partial
/// pivoting. Exactly zero pivots are nudged to `eps·‖T‖`, which is what
/// inverse iteration wants.
pub(crate) fn shifted_solve(t: &TridiagonalMatrix, sigma: f64, rhs: &mut [f64]) {
    let n = t.len();
    let nudge = f64::EPSILON * t.norm_bound().max(f64::MIN_POSITIVE);
    // Row i of the factor holds (diag, super1, super2) after elimination.
    let mut d: Vec<f64> = t.diag.iter().map(|a| a - sigma).collect();
    let mut du: Vec<f64> = t.offdiag.clone();
    du.push(0.0);
    let mut du2 = vec![0.0; n];
    let dl = &t.offdiag;
    // Forward elimination, tracking pivots.
    let mut mult = vec![0.0; n];
    let mut swapped = vec![false; n];
    for i in 0..n.saturating_sub(1) {
        let sub = dl[i];
        if d[i].abs() >= sub.abs() {
            if d[i] == 0.0 {
                d[i] = nudge;
            }
            let f = sub / d[i];
            mult[i] = f;
            d[i + 1] -= f * du[i];
            // du2[i] stays 0
        } else {
            // Swap rows i and i+1.
            let f = d[i] / sub;
            mult[i] = f;
            swapped[i] = true;
            d[i] = sub;
            let tmp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = tmp - f * d[i + 1];
            du2[i] = du[i + 1];
            du[i + 1] *= -f;
        }
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = nudge;
    }
    // Apply the row operations to rhs.
    for i in 0..n.saturating_sub(1) {
        if swapped[i] {
            let tmp = rhs[i];
            rhs[i] = rhs[i + 1];
            rhs[i + 1] = tmp - mult[i] * rhs[i + 1];
        } else {
            rhs[i + 1] -= mult[i] * rhs[i];
        }
    }
    // Back substitution with the upper factor (bandwidth 2).
    for i in (0..n).rev() {
        let mut x = rhs[i];
        if i + 1 < n {
            x -= du[i] * rhs[i + 1];
        }
        if i + 2 < n {
            x -= du2[i] * rhs[i + 2];
        }
        rhs[i] = x / d[i];
    }
}
