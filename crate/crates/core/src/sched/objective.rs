//! Scheduling objectives.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{log2_det_hpd, two_row_log2_det};
use crate::rng::complex_normal;
use crate::{CMatrix, CVector, C64};

/// Channel geometry of a candidate two-user session seen from user `m`.
///
/// `own = h_m[t_m(i)]`, `eaves = h_n[t_m(i)]`, `partner_eaves = h_m[t_n(j)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionGeometry {
    pub own_sq: f64,
    pub eaves_sq: f64,
    /// `|h_m^H h_n|^2` over the two vectors in the slot of packet `i`.
    pub cross_sq: f64,
    /// `||h_n[t_m(i)]||^2 + ||h_m[t_n(j)]||^2`.
    pub norm_sum: f64,
}

impl SessionGeometry {
    pub fn new(own: &CVector, eaves: &CVector, partner_eaves: &CVector) -> Result<Self> {
        if own.len() != eaves.len() || own.len() != partner_eaves.len() {
            return Err(Error::Dimension("session channels differ in length".into()));
        }
        let eaves_sq = eaves.norm_squared();
        Ok(SessionGeometry {
            own_sq: own.norm_squared(),
            eaves_sq,
            cross_sq: own.dotc(eaves).norm_sqr(),
            norm_sum: eaves_sq + partner_eaves.norm_squared(),
        })
    }

    /// `log2 det(I + K_z^-1 H H^H P/M)` for a given round-2 gain `|f|^2`.
    pub fn rate_given_gain(&self, f_sq: f64, p: f64, n0: f64, antennas: usize) -> f64 {
        let d = p / (antennas as f64 * n0);
        if self.norm_sum <= 0.0 {
            return (1.0 + d * self.own_sq).log2();
        }
        let u = 2.0 * f_sq / self.norm_sum;
        two_row_log2_det(self.own_sq, self.eaves_sq, self.cross_sq, d, d * u / (1.0 + u))
    }
}

/// Monte Carlo estimate of `E_f log2 det(I + K_z^-1 H H^H P/2)` with
/// `f ~ CN(0, 1)`.
pub fn expected_session_rate<R: Rng + ?Sized>(
    geometry: &SessionGeometry,
    p: f64,
    n0: f64,
    antennas: usize,
    f_samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if f_samples == 0 {
        return Err(Error::Usage("f_samples must be positive".into()));
    }
    let total: f64 = (0..f_samples)
        .map(|_| geometry.rate_given_gain(complex_normal(rng, 1.0).norm_sqr(), p, n0, antennas))
        .sum();
    Ok(total / f_samples as f64)
}

/// Round-1-only rate `log2(1 + P/(M N0) ||h||^2)`.
pub fn round1_rate(h: &CVector, p: f64, n0: f64) -> f64 {
    (1.0 + p / (h.len() as f64 * n0) * h.norm_squared()).log2()
}

/// `E log2(1 + P/(M N0) ||h||^2)` for `h ~ CN(0, I_M)`.
///
/// Integrating by parts against the Gamma(M, 1) survival function `S` gives
/// `int c S(x) / (1 + c x) dx`; with `x = e^u` the integrand is smooth at any
/// SNR, so plain Simpson's rule is accurate.
pub fn fresh_packet_rate(antennas: usize, p: f64, n0: f64) -> f64 {
    let m = antennas as f64;
    let c = p / (m * n0);
    let survival = |x: f64| {
        let mut term = 1.0;
        let mut acc = 1.0;
        for k in 1..antennas {
            term *= x / k as f64;
            acc += term;
        }
        acc * (-x).exp()
    };
    let (lo, hi) = (-40.0, (m + 60.0 + 12.0 * m.sqrt()).ln());
    let n = 8000;
    let h = (hi - lo) / n as f64;
    let mut acc = 0.0;
    for k in 0..=n {
        let x = (lo + k as f64 * h).exp();
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * c * x / (1.0 + c * x) * survival(x);
    }
    acc * h / 3.0 / std::f64::consts::LN_2
}

/// Heuristic objective `log2 det(I + H~ H~^H P/M)` with rows
/// `h_m` and `h_e / sqrt(1 + ||h_e||^2)` for each eavesdropper `e`.
pub fn heuristic_objective(own: &CVector, eavesdroppers: &[&CVector], p: f64, n0: f64) -> f64 {
    let m = own.len();
    let snr = p / (m as f64 * n0);
    if eavesdroppers.len() == 1 {
        let e = eavesdroppers[0];
        let scale = 1.0 / (1.0 + e.norm_squared());
        return two_row_log2_det(
            own.norm_squared(),
            e.norm_squared() * scale,
            own.dotc(e).norm_sqr() * scale,
            snr,
            snr,
        );
    }
    let rows = 1 + eavesdroppers.len();
    let h = CMatrix::from_fn(rows, m, |r, c| {
        if r == 0 {
            own[c].conj()
        } else {
            let e = eavesdroppers[r - 1];
            e[c].conj() / (1.0 + e.norm_squared()).sqrt()
        }
    });
    let mut g = &h * h.adjoint() * C64::new(snr, 0.0);
    for i in 0..rows {
        g[(i, i)] += 1.0;
    }
    log2_det_hpd(&g).expect("identity plus Gram matrix is positive definite")
}

/// Best single eavesdropper for a round-1 packet of `user` sent over a slot
/// with channels `channels` (column `n` = user `n`). Lowest index wins ties.
pub fn select_eavesdropper(channels: &CMatrix, user: usize, p: f64, n0: f64) -> Result<usize> {
    check_users(channels, user, 2)?;
    let own = channels.column(user).into_owned();
    let mut best = (f64::NEG_INFINITY, usize::MAX);
    for n in (0..channels.ncols()).filter(|&n| n != user) {
        let e = channels.column(n).into_owned();
        let v = heuristic_objective(&own, &[&e], p, n0);
        if v > best.0 {
            best = (v, n);
        }
    }
    Ok(best.1)
}

/// Best eavesdropper pair `(n1 < n2)` by the three-row heuristic.
pub fn select_eavesdropper_pair(channels: &CMatrix, user: usize, p: f64, n0: f64) -> Result<(usize, usize)> {
    check_users(channels, user, 3)?;
    let l = channels.ncols();
    let own = channels.column(user).into_owned();
    let cols: Vec<CVector> = (0..l).map(|n| channels.column(n).into_owned()).collect();
    let mut best = (f64::NEG_INFINITY, (usize::MAX, usize::MAX));
    for a in (0..l).filter(|&a| a != user) {
        for b in (a + 1..l).filter(|&b| b != user) {
            let v = heuristic_objective(&own, &[&cols[a], &cols[b]], p, n0);
            if v > best.0 {
                best = (v, (a, b));
            }
        }
    }
    Ok(best.1)
}

/// Round-3 eavesdropper for a degree-2 slot intended for `pair`: the user
/// `q` maximizing the summed heuristic of both intended users over the
/// antennas active in that slot.
pub fn select_round3_eavesdropper(channels: &CMatrix, active: usize, pair: (usize, usize), p: f64, n0: f64) -> Result<usize> {
    let l = channels.ncols();
    if l < 3 || pair.0 >= l || pair.1 >= l || pair.0 == pair.1 {
        return Err(Error::Usage(format!("invalid pair {pair:?} among {l} users")));
    }
    if active == 0 || active > channels.nrows() {
        return Err(Error::Dimension(format!("{active} active antennas")));
    }
    let sub = |u: usize| CVector::from_fn(active, |r, _| channels[(r, u)]);
    let (gm, gn) = (sub(pair.0), sub(pair.1));
    let mut best = (f64::NEG_INFINITY, usize::MAX);
    for q in (0..l).filter(|&q| q != pair.0 && q != pair.1) {
        let gq = sub(q);
        let v = heuristic_objective(&gm, &[&gq], p, n0) + heuristic_objective(&gn, &[&gq], p, n0);
        if v > best.0 {
            best = (v, q);
        }
    }
    Ok(best.1)
}

fn check_users(channels: &CMatrix, user: usize, needed: usize) -> Result<()> {
    if channels.ncols() < needed {
        return Err(Error::Usage(format!("need at least {needed} users, have {}", channels.ncols())));
    }
    if user >= channels.ncols() {
        return Err(Error::Usage(format!("user {user} out of range")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mutual_information;
    use crate::rng::{complex_normal_vector, substream};

    fn cv(v: &[(f64, f64)]) -> CVector {
        CVector::from_iterator(v.len(), v.iter().map(|&(a, b)| C64::new(a, b)))
    }

    #[test]
    fn geometry_rate_matches_explicit_determinant() {
        let mut rng = substream(5, 0x10, 0);
        for _ in 0..30 {
            let own = complex_normal_vector(&mut rng, 2, 1.0);
            let eaves = complex_normal_vector(&mut rng, 2, 1.0);
            let partner = complex_normal_vector(&mut rng, 2, 1.0);
            let f = complex_normal(&mut rng, 1.0);
            let g = SessionGeometry::new(&own, &eaves, &partner).unwrap();
            let s = g.norm_sum;
            let scale = (2.0f64).sqrt() * f / s.sqrt();
            let h = CMatrix::from_fn(2, 2, |r, c| if r == 0 { own[c].conj() } else { scale * eaves[c].conj() });
            let k = [1.0, 1.0 + 2.0 * f.norm_sqr() / s];
            let want = mutual_information(&h, &k, 50.0).unwrap();
            assert!((g.rate_given_gain(f.norm_sqr(), 100.0, 1.0, 2) - want).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_eavesdropper_channels_fall_back_to_round1() {
        let own = cv(&[(1.0, 0.5), (-0.3, 0.2)]);
        let z = CVector::zeros(2);
        let g = SessionGeometry::new(&own, &z, &z).unwrap();
        let mut rng = substream(1, 0, 0);
        let r = expected_session_rate(&g, 10.0, 1.0, 2, 10, &mut rng).unwrap();
        assert!((r - round1_rate(&own, 10.0, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn fresh_rate_small_snr_limit() {
        // log2(1 + c x) ~ c x / ln 2 and E x = M
        let r = fresh_packet_rate(2, 1e-6, 1.0);
        assert!((r - 1e-6 / std::f64::consts::LN_2).abs() < 1e-11);
    }

    #[test]
    fn single_eavesdropper_is_trivial_for_two_users() {
        let mut rng = substream(3, 0, 0);
        let h = crate::channel::sample_iid(2, 2, 0, &mut rng).unwrap();
        assert_eq!(select_eavesdropper(h.entries(), 0, 10.0, 1.0).unwrap(), 1);
        assert_eq!(select_eavesdropper(h.entries(), 1, 10.0, 1.0).unwrap(), 0);
        let one = crate::channel::sample_iid(2, 1, 0, &mut rng).unwrap();
        assert!(select_eavesdropper(one.entries(), 0, 10.0, 1.0).is_err());
    }

    #[test]
    fn orthogonal_eavesdropper_beats_colinear_one() {
        let own = cv(&[(1.0, 0.0), (0.0, 0.0)]);
        let colinear = cv(&[(1.0, 0.0), (0.0, 0.0)]);
        let orthogonal = cv(&[(0.0, 0.0), (1.0, 0.0)]);
        let h = CMatrix::from_columns(&[own, colinear, orthogonal]);
        assert_eq!(select_eavesdropper(&h, 0, 100.0, 1.0).unwrap(), 2);
    }

    #[test]
    fn two_row_heuristic_matches_generic_path() {
        let mut rng = substream(9, 0, 0);
        let own = complex_normal_vector(&mut rng, 3, 1.0);
        let e = complex_normal_vector(&mut rng, 3, 1.0);
        let fast = heuristic_objective(&own, &[&e], 30.0, 1.0);
        let h = CMatrix::from_fn(2, 3, |r, c| {
            if r == 0 {
                own[c].conj()
            } else {
                e[c].conj() / (1.0 + e.norm_squared()).sqrt()
            }
        });
        let slow = mutual_information(&h, &[1.0, 1.0], 10.0).unwrap();
        assert!((fast - slow).abs() < 1e-10);
    }
}
