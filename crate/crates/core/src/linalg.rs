//! Small dense complex linear algebra used by the rate computations.

use crate::error::{Error, Result};
use crate::{CMatrix, C64};

/// log2 det of a Hermitian positive-definite matrix via Cholesky.
pub fn log2_det_hpd(a: &CMatrix) -> Result<f64> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension(format!("log-det of {}x{} matrix", n, a.ncols())));
    }
    let mut l = CMatrix::zeros(n, n);
    let mut log_det = 0.0;
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d.is_nan() || d <= 0.0 || !d.is_finite() {
            return Err(Error::Numeric(format!("matrix not positive definite (pivot {j} = {d:e})")));
        }
        let djj = d.sqrt();
        l[(j, j)] = C64::new(djj, 0.0);
        log_det += d.log2();
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(log_det)
}

/// `log2 det(I + K^-1 H H^H v)` for diagonal noise covariance `K`.
pub fn mutual_information(h: &CMatrix, noise_diag: &[f64], input_var: f64) -> Result<f64> {
    if noise_diag.len() != h.nrows() {
        return Err(Error::Dimension(format!(
            "{} noise variances for {} rows",
            noise_diag.len(),
            h.nrows()
        )));
    }
    let mut cov = h * h.adjoint() * C64::new(input_var, 0.0);
    let mut noise_log = 0.0;
    for (i, &k) in noise_diag.iter().enumerate() {
        if k.is_nan() || k <= 0.0 {
            return Err(Error::Numeric(format!("noise variance {k} on row {i}")));
        }
        cov[(i, i)] += k;
        noise_log += k.log2();
    }
    Ok(log2_det_hpd(&cov)? - noise_log)
}

/// `log2 det(I + diag(d1, d2) G)` where `G` is the Gram matrix of two rows.
///
/// Closed form of the 2x2 case; this is the hot path of the schedulers.
pub fn two_row_log2_det(g11: f64, g22: f64, g12_sq: f64, d1: f64, d2: f64) -> f64 {
    let det = 1.0 + d1 * g11 + d2 * g22 + d1 * d2 * (g11 * g22 - g12_sq).max(0.0);
    det.log2()
}

/// Orthonormal basis of the column space of `g` (numerical rank with
/// relative tolerance `rel_tol`).
pub fn column_space_basis(g: &CMatrix, rel_tol: f64) -> CMatrix {
    if g.ncols() == 0 || g.nrows() == 0 {
        return CMatrix::zeros(g.nrows(), 0);
    }
    let svd = g.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return CMatrix::zeros(g.nrows(), 0);
    }
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > rel_tol * smax)
        .map(|(i, _)| i)
        .collect();
    CMatrix::from_fn(g.nrows(), keep.len(), |r, c| u[(r, keep[c])])
}

/// Mutual information of `y = D x + G u + v`, `v ~ CN(0, I)`, `x ~ CN(0, snr I)`,
/// when the interference `u` is removed by projecting onto the orthogonal
/// complement of `span(G)`. Any exact interference-cancelling combination of the
/// rows yields this same value.
pub fn zf_mutual_information(desired: &CMatrix, interference: &CMatrix, snr: f64) -> Result<f64> {
    if desired.nrows() != interference.nrows() {
        return Err(Error::Dimension(format!(
            "desired has {} rows, interference {}",
            desired.nrows(),
            interference.nrows()
        )));
    }
    let basis = column_space_basis(interference, 1e-10);
    let projected = desired - &basis * (basis.adjoint() * desired);
    let n = desired.ncols();
    let mut gram = projected.adjoint() * &projected * C64::new(snr, 0.0);
    for i in 0..n {
        gram[(i, i)] += 1.0;
    }
    log2_det_hpd(&gram)
}

/// Orthonormal basis of the orthogonal complement of the orthonormal columns `q`.
pub fn orthogonal_complement(q: &CMatrix) -> CMatrix {
    let n = q.nrows();
    let mut basis: Vec<crate::CVector> = q.column_iter().map(|c| c.into_owned()).collect();
    let start = basis.len();
    for i in 0..n {
        if basis.len() == n {
            break;
        }
        let mut v = crate::CVector::zeros(n);
        v[i] = C64::new(1.0, 0.0);
        // two passes of Gram-Schmidt keep the basis orthonormal to working precision
        for _ in 0..2 {
            for b in &basis {
                let c = b.dotc(&v);
                v -= b * c;
            }
        }
        let norm = v.norm();
        if norm > 0.5 {
            basis.push(v / C64::new(norm, 0.0));
        }
    }
    CMatrix::from_fn(n, basis.len() - start, |r, c| basis[start + c][r])
}

/// Zero-forcing mutual information with coloured noise.
///
/// Rows observe `D x + G w + Z e` with `x ~ CN(0, data_var I)`, arbitrary
/// interference `w` and `e ~ CN(0, noise_var I)`. The interference span is
/// projected out and the remaining rows are decoded jointly.
pub fn zf_mutual_information_colored(
    desired: &CMatrix,
    interference: &CMatrix,
    noise: &CMatrix,
    data_var: f64,
    noise_var: f64,
) -> Result<f64> {
    let rows = desired.nrows();
    if interference.nrows() != rows || noise.nrows() != rows {
        return Err(Error::Dimension("row counts of desired, interference and noise differ".into()));
    }
    let u = orthogonal_complement(&column_space_basis(interference, 1e-10));
    if u.ncols() == 0 {
        return Ok(0.0);
    }
    let zu = u.adjoint() * noise;
    let du = u.adjoint() * desired;
    let noise_cov = &zu * zu.adjoint() * C64::new(noise_var, 0.0);
    let total = &noise_cov + &du * du.adjoint() * C64::new(data_var, 0.0);
    Ok(log2_det_hpd(&total)? - log2_det_hpd(&noise_cov)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_normal, substream};

    fn random(rows: usize, cols: usize, seed: u64) -> CMatrix {
        let mut rng = substream(seed, 0xAB, 0);
        CMatrix::from_fn(rows, cols, |_, _| complex_normal(&mut rng, 1.0))
    }

    #[test]
    fn cholesky_log_det_matches_lu_determinant() {
        for seed in 0..20 {
            let h = random(4, 4, seed);
            let a = &h * h.adjoint() + CMatrix::identity(4, 4);
            let lu = a.clone().determinant().re.log2();
            assert!((log2_det_hpd(&a).unwrap() - lu).abs() < 1e-9);
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = CMatrix::from_diagonal_element(2, 2, C64::new(-1.0, 0.0));
        assert!(matches!(log2_det_hpd(&a), Err(Error::Numeric(_))));
    }

    #[test]
    fn two_row_closed_form_matches_general_route() {
        let h = random(2, 3, 5);
        let (d1, d2) = (3.0, 0.7);
        let g = &h * h.adjoint();
        let fast = two_row_log2_det(g[(0, 0)].re, g[(1, 1)].re, g[(0, 1)].norm_sqr(), d1, d2);
        let slow = mutual_information(&h, &[1.0 / d1, 1.0 / d2], 1.0).unwrap();
        assert!((fast - slow).abs() < 1e-10);
    }

    #[test]
    fn zf_without_interference_is_plain_mutual_information() {
        let d = random(3, 2, 9);
        let none = CMatrix::zeros(3, 0);
        let zf = zf_mutual_information(&d, &none, 4.0).unwrap();
        let direct = mutual_information(&d.adjoint(), &[1.0, 1.0], 4.0).unwrap();
        assert!((zf - direct).abs() < 1e-9);
    }

    #[test]
    fn zf_equals_explicit_cancellation() {
        // rows: y1 = a.x + v1, y2 = u + v2, y3 = b.x + c u + v3
        let a = random(1, 2, 1);
        let b = random(1, 2, 2);
        let c = complex_normal(&mut substream(3, 0, 0), 1.0);
        let mut d = CMatrix::zeros(3, 2);
        d.row_mut(0).copy_from(&a);
        d.row_mut(2).copy_from(&b);
        let g = CMatrix::from_column_slice(3, 1, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), c]);
        let zf = zf_mutual_information(&d, &g, 10.0).unwrap();
        // cancel: [y1 ; y3 - c y2] with noise diag(1, 1 + |c|^2)
        let mut h = CMatrix::zeros(2, 2);
        h.row_mut(0).copy_from(&a);
        h.row_mut(1).copy_from(&b);
        let explicit = mutual_information(&h, &[1.0, 1.0 + c.norm_sqr()], 10.0).unwrap();
        assert!((zf - explicit).abs() < 1e-9, "{zf} vs {explicit}");
    }

    #[test]
    fn complement_is_orthonormal_and_orthogonal() {
        let g = random(6, 2, 41);
        let q = column_space_basis(&g, 1e-10);
        let u = orthogonal_complement(&q);
        assert_eq!(u.ncols(), 4);
        assert!((u.adjoint() * &u - CMatrix::identity(4, 4)).norm() < 1e-12);
        assert!((u.adjoint() * &g).norm() < 1e-12);
    }

    #[test]
    fn colored_zf_with_white_noise_matches_white_version() {
        let d = random(5, 2, 42);
        let g = random(5, 2, 43);
        let white = zf_mutual_information(&d, &g, 3.0).unwrap();
        let colored = zf_mutual_information_colored(&d, &g, &CMatrix::identity(5, 5), 6.0, 2.0).unwrap();
        assert!((white - colored).abs() < 1e-9);
    }

    #[test]
    fn colored_zf_matches_whitened_direct_formula() {
        // no interference: log det(I + v K^-1 D D^H) with K = s Z Z^H
        let d = random(3, 2, 44);
        let z = random(3, 4, 45);
        let k = &z * z.adjoint() * C64::new(0.5, 0.0);
        let direct = log2_det_hpd(&(&k + &d * d.adjoint() * C64::new(2.0, 0.0))).unwrap() - log2_det_hpd(&k).unwrap();
        let got = zf_mutual_information_colored(&d, &CMatrix::zeros(3, 0), &z, 2.0, 0.5).unwrap();
        assert!((direct - got).abs() < 1e-9);
    }
}
