//! Randomized truncated SVD.
//!
//! A Gaussian test block of width `k + oversample` is pushed through the
//! operator, then refined by subspace (power) iteration: at least
//! `min_power_iters` rounds, continuing until the leading `k` singular value
//! estimates stop moving (relative to the largest) or `max_power_iters` is
//! reached. The final projected problem is a small square matrix that is
//! decomposed with one-sided Jacobi rotations.
//!
//! Output is deterministic for a fixed seed: every reduction runs in a fixed
//! order on a single thread, so the same input, rank and seed give bitwise
//! identical factors on the same build and machine.

use ndarray::{s, Array1, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::LinearOperator;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct SvdOptions {
    pub oversample: usize,
    pub min_power_iters: usize,
    pub max_power_iters: usize,
    /// Stop once every leading triplet has `‖A vᵢ − σᵢ uᵢ‖ ≤ tol · σ₁`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions {
            oversample: 10,
            min_power_iters: 4,
            max_power_iters: 300,
            tol: 1e-10,
            seed: 0,
        }
    }
}

/// Rank-`k` factorization `A ≈ U diag(S) Vᵀ`.
///
/// Columns of `u` and `v` are orthonormal; `s` is non-increasing and
/// non-negative. Each column of `u` is signed so its largest-magnitude entry
/// is positive, with `v` flipped to match.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: Array2<f64>,
    pub s: Array1<f64>,
    pub v: Array2<f64>,
    pub k: usize,
    pub power_iterations: usize,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Array2<f64> {
        let us = &self.u * &self.s.view().insert_axis(Axis(0));
        us.dot(&self.v.t())
    }
}

pub fn truncated_svd<A: LinearOperator + ?Sized>(a: &A, k: usize, seed: u64) -> Result<SvdResult> {
    let opts = SvdOptions {
        seed,
        ..SvdOptions::default()
    };
    truncated_svd_with(a, k, &opts)
}

pub fn truncated_svd_with<A: LinearOperator + ?Sized>(
    a: &A,
    k: usize,
    opts: &SvdOptions,
) -> Result<SvdResult> {
    let (m, n) = a.shape();
    let max_rank = m.min(n);
    if k == 0 || k > max_rank {
        return Err(Error::RankTooLarge { k, max: max_rank });
    }
    if !a.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    let width = (k + opts.oversample).min(max_rank);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let omega = gaussian_block(n, width, &mut rng);
    // Bases are kept as rows (width x dim) so each vector is contiguous.
    let mut q_rows = a.apply(&omega).reversed_axes().as_standard_layout().into_owned();
    orthonormalize_rows(&mut q_rows, &mut rng);

    let mut iters = 0;
    let (z_rows, small) = loop {
        let w = a.apply_transpose(&q_rows.t().to_owned());
        let mut z_rows = w.reversed_axes().as_standard_layout().into_owned();
        let r = orthonormalize_rows(&mut z_rows, &mut rng);
        let small = jacobi_svd(&r);

        // A Zᵀ seeds the next round and also gives the residuals
        // A vᵢ − σᵢ uᵢ of the current leading triplets.
        let az = a.apply(&z_rows.t().to_owned());
        let scale = small.s[0].max(f64::MIN_POSITIVE);
        let av = az.dot(&small.u.slice(s![.., ..k]));
        let us = q_rows.t().dot(&small.v.slice(s![.., ..k])) * small.s.slice(s![..k]);
        let settled = (&av - &us)
            .columns()
            .into_iter()
            .all(|c| c.dot(&c).sqrt() <= opts.tol * scale);
        if (iters >= opts.min_power_iters && settled) || iters >= opts.max_power_iters {
            break (z_rows, small);
        }
        iters += 1;

        q_rows = az.reversed_axes().as_standard_layout().into_owned();
        orthonormalize_rows(&mut q_rows, &mut rng);
    };

    // Qᵀ A = (Z R)ᵀ and R = X S Yᵀ, so A ≈ (Q Y) S (Z X)ᵀ.
    let mut u = q_rows.t().dot(&small.v.slice(s![.., ..k]));
    let mut v = z_rows.t().dot(&small.u.slice(s![.., ..k]));
    let s = small.s.slice(s![..k]).to_owned();

    for j in 0..k {
        let col = u.column(j);
        let mut best = 0;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            u.column_mut(j).mapv_inplace(|x| -x);
            v.column_mut(j).mapv_inplace(|x| -x);
        }
    }

    Ok(SvdResult {
        u,
        s,
        v,
        k,
        power_iterations: iters,
    })
}

fn gaussian_block(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let values: Vec<f64> = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    Array2::from_shape_vec((rows, cols), values).expect("shape matches length")
}

/// Gram-Schmidt with reorthogonalization over the rows of `vecs`, in place.
///
/// Returns the upper-triangular `R` with `vecsᵀ(before) = vecsᵀ(after) · R`.
/// A row that is numerically dependent on the previous ones is replaced by
/// a random unit vector orthogonal to them and gets a zero diagonal in `R`.
fn orthonormalize_rows(vecs: &mut Array2<f64>, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let (count, dim) = vecs.dim();
    let mut r = Array2::<f64>::zeros((count, count));
    let scale = vecs
        .rows()
        .into_iter()
        .map(|row| row.dot(&row).sqrt())
        .fold(0.0, f64::max);
    let floor = 64.0 * f64::EPSILON * scale.max(f64::MIN_POSITIVE);

    for j in 0..count {
        for _ in 0..2 {
            for i in 0..j {
                let c = vecs.row(i).dot(&vecs.row(j));
                r[[i, j]] += c;
                let (done, mut rest) = vecs.view_mut().split_at(Axis(0), j);
                rest.row_mut(0).scaled_add(-c, &done.row(i));
            }
        }
        let nrm = vecs.row(j).dot(&vecs.row(j)).sqrt();
        if nrm > floor {
            vecs.row_mut(j).mapv_inplace(|x| x / nrm);
            r[[j, j]] = nrm;
            continue;
        }
        // Dependent direction: substitute a random orthogonal unit vector.
        loop {
            let fresh: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
            vecs.row_mut(j).assign(&Array1::from(fresh));
            for _ in 0..2 {
                for i in 0..j {
                    let c = vecs.row(i).dot(&vecs.row(j));
                    let (done, mut rest) = vecs.view_mut().split_at(Axis(0), j);
                    rest.row_mut(0).scaled_add(-c, &done.row(i));
                }
            }
            let nrm = vecs.row(j).dot(&vecs.row(j)).sqrt();
            if nrm > 1e-8 {
                vecs.row_mut(j).mapv_inplace(|x| x / nrm);
                break;
            }
        }
    }
    r
}

/// Full SVD of a small square matrix: `m = u diag(s) vᵀ`, `s` sorted
/// descending, `u` and `v` orthogonal.
pub(crate) struct SmallSvd {
    pub u: Array2<f64>,
    pub s: Array1<f64>,
    pub v: Array2<f64>,
}

/// One-sided (Hestenes) Jacobi: rotate column pairs of `m` until all
/// columns are mutually orthogonal. The rotated columns are `U S`, the
/// accumulated rotations are `V`.
pub(crate) fn jacobi_svd(m: &Array2<f64>) -> SmallSvd {
    let (rows, n) = m.dim();
    // column-major working copies
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| m.column(j).to_vec()).collect();
    let mut rot: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|x| x * x).sum();
                let beta: f64 = cols[q].iter().map(|x| x * x).sum();
                let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut rot, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));

    let largest = order.first().map_or(0.0, |&i| norms[i]);
    let cutoff = (rows.max(n) as f64) * f64::EPSILON * largest;
    let mut u = Array2::<f64>::zeros((rows, n));
    let mut v = Array2::<f64>::zeros((n, n));
    let mut s = Array1::<f64>::zeros(n);
    let mut missing = Vec::new();
    for (out, &j) in order.iter().enumerate() {
        s[out] = norms[j];
        for i in 0..n {
            v[[i, out]] = rot[j][i];
        }
        if norms[j] > cutoff && norms[j] > 0.0 {
            for i in 0..rows {
                u[[i, out]] = cols[j][i] / norms[j];
            }
        } else {
            missing.push(out);
        }
    }
    complete_basis(&mut u, &missing);
    SmallSvd { u, s, v }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Fills the listed columns of `u` with unit vectors orthogonal to all other
/// columns, drawing candidates from the standard basis.
fn complete_basis(u: &mut Array2<f64>, missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let (rows, n) = u.dim();
    let mut filled: Vec<usize> = (0..n).filter(|j| !missing.contains(j)).collect();
    let mut candidate = 0;
    for &target in missing {
        while candidate < rows {
            let mut v = Array1::<f64>::zeros(rows);
            v[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for &j in &filled {
                    let c = u.column(j).dot(&v);
                    v.scaled_add(-c, &u.column(j));
                }
            }
            let nrm = v.dot(&v).sqrt();
            if nrm > 1e-8 {
                u.column_mut(target).assign(&(v / nrm));
                filled.push(target);
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn assert_orthonormal(m: &Array2<f64>) {
        let g = m.t().dot(m);
        for ((i, j), &x) in g.indexed_iter() {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((x - want).abs() < 1e-10, "gram[{i},{j}] = {x}");
        }
    }

    #[test]
    fn identity() {
        let eye = Array2::<f64>::eye(5);
        let r = truncated_svd(&eye, 5, 0).unwrap();
        for &s in r.s.iter() {
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert_orthonormal(&r.u);
        assert_orthonormal(&r.v);
    }

    #[test]
    fn diagonal_rank_two() {
        let d = array![[3.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]];
        let r = truncated_svd(&d, 2, 7).unwrap();
        assert!((r.s[0] - 3.0).abs() < 1e-12);
        assert!((r.s[1] - 2.0).abs() < 1e-12);
        let rec = r.reconstruct();
        let want = array![[3.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 0.0]];
        for (a, b) in rec.iter().zip(want.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        // sign convention: largest entry of each u column is positive
        for col in r.u.columns() {
            let best = col.iter().cloned().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(best > 0.0);
        }
    }

    #[test]
    fn rank_errors() {
        let d = Array2::<f64>::eye(3);
        assert!(matches!(truncated_svd(&d, 0, 0), Err(Error::RankTooLarge { .. })));
        assert!(matches!(truncated_svd(&d, 4, 0), Err(Error::RankTooLarge { .. })));
        let mut bad = Array2::<f64>::eye(3);
        bad[[0, 1]] = f64::INFINITY;
        assert!(matches!(truncated_svd(&bad, 1, 0), Err(Error::NonFiniteInput)));
    }

    #[test]
    fn zero_matrix_still_orthonormal() {
        let z = Array2::<f64>::zeros((6, 4));
        let r = truncated_svd(&z, 3, 1).unwrap();
        assert!(r.s.iter().all(|&s| s == 0.0));
        assert_orthonormal(&r.u);
        assert_orthonormal(&r.v);
    }

    #[test]
    fn rank_deficient_input() {
        // rank 1, ask for 3
        let a = array![[1.0, 2.0, 3.0, 4.0], [2.0, 4.0, 6.0, 8.0], [0.5, 1.0, 1.5, 2.0], [1.0, 2.0, 3.0, 4.0]];
        let r = truncated_svd(&a, 3, 3).unwrap();
        assert!(r.s[1].abs() < 1e-10 && r.s[2].abs() < 1e-10);
        assert_orthonormal(&r.u);
        assert_orthonormal(&r.v);
        for (x, y) in r.reconstruct().iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let a = Array2::from_shape_fn((30, 20), |(i, j)| ((i * 7 + j * 13) % 11) as f64 - 5.0);
        let r1 = truncated_svd(&a, 4, 42).unwrap();
        let r2 = truncated_svd(&a, 4, 42).unwrap();
        assert_eq!(r1.s, r2.s);
        assert_eq!(r1.u, r2.u);
        assert_eq!(r1.v, r2.v);
    }

    #[test]
    fn jacobi_small() {
        let m = array![[4.0, 0.0], [3.0, -5.0]];
        let r = jacobi_svd(&m);
        // MᵀM = [[25, -15], [-15, 25]] has eigenvalues 40 and 10
        let s1 = 40.0f64.sqrt();
        let s2 = 10.0f64.sqrt();
        assert!((r.s[0] - s1).abs() < 1e-12, "{} vs {s1}", r.s[0]);
        assert!((r.s[1] - s2).abs() < 1e-12);
        let rec = (&r.u * &r.s.view().insert_axis(Axis(0))).dot(&r.v.t());
        for (a, b) in rec.iter().zip(m.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
