//! Small dense complex-matrix helpers shared by the Lie-group layer.
//!
//! Everything operates on `DMatrix<Complex<f64>>`; the group dimensions in
//! this crate are tiny (1..4), so plain dense algorithms are both accurate
//! and fast enough for the integrator's inner loop.

use nalgebra::DMatrix;
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn frob_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frob_dist(a: &CMat, b: &CMat) -> f64 {
    frob_norm(&(a - b))
}

pub fn conj_transpose(m: &CMat) -> CMat {
    m.adjoint()
}

/// 1-norm (maximum absolute column sum), used to pick the scaling power.
fn one_norm(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling-and-squaring with a diagonal [6/6] Padé
/// approximant. For the scaled norm bound of 1/2 used here the Padé error
/// is far below 1e-15, which is plenty for the 1..4-dimensional matrices
/// this crate works with.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    let norm = one_norm(a);
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let x = a * C64::new(1.0 / f64::powi(2.0, s as i32), 0.0);

    // [6/6] Padé: N(x) ≈ sum c_k x^k, exp(x) ≈ N(x) / N(-x).
    let c = pade6_coefficients();
    let mut term = identity(n);
    let mut num = identity(n) * C64::new(c[0], 0.0);
    let mut den = identity(n) * C64::new(c[0], 0.0);
    for (k, &ck) in c.iter().enumerate().skip(1) {
        term = &term * &x;
        num += &term * C64::new(ck, 0.0);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        den += &term * C64::new(sign * ck, 0.0);
    }
    let mut e = den
        .lu()
        .solve(&num)
        .expect("Padé denominator is invertible for scaled input");
    for _ in 0..s {
        e = &e * &e;
    }
    e
}

fn pade6_coefficients() -> [f64; 7] {
    // c_k = (2m - k)! m! / ((2m)! (m - k)! k!) with m = 6.
    let mut c = [0.0; 7];
    c[0] = 1.0;
    let m = 6.0;
    for k in 1..7 {
        let kf = k as f64;
        c[k] = c[k - 1] * (m - kf + 1.0) / ((2.0 * m - kf + 1.0) * kf);
    }
    c
}

/// Principal matrix logarithm for matrices near the identity.
///
/// Inverse scaling-and-squaring: Denman–Beavers square roots until
/// ‖M − I‖ is small, then the Mercator series. Intended for holonomies of
/// small loops; callers must not pass matrices with eigenvalues on the
/// negative real axis far from 1.
pub fn logm_near_identity(m: &CMat) -> CMat {
    let n = m.nrows();
    let mut a = m.clone();
    let mut sqrts = 0u32;
    while frob_norm(&(&a - identity(n))) > 0.25 && sqrts < 20 {
        a = sqrtm_db(&a);
        sqrts += 1;
    }
    let e = &a - identity(n);
    let mut term = e.clone();
    let mut log = e.clone();
    for k in 2..60 {
        term = &term * &e;
        let coeff = if k % 2 == 0 { -1.0 } else { 1.0 } / k as f64;
        let upd = &term * C64::new(coeff, 0.0);
        log += &upd;
        if frob_norm(&term) < 1e-18 {
            break;
        }
    }
    log * C64::new(f64::powi(2.0, sqrts as i32), 0.0)
}

/// Denman–Beavers iteration for the principal square root.
fn sqrtm_db(m: &CMat) -> CMat {
    let n = m.nrows();
    let mut y = m.clone();
    let mut z = identity(n);
    for _ in 0..60 {
        let y_inv = y.clone().try_inverse().expect("sqrtm: singular iterate");
        let z_inv = z.clone().try_inverse().expect("sqrtm: singular iterate");
        let y_next = (&y + z_inv) * C64::new(0.5, 0.0);
        let z_next = (&z + y_inv) * C64::new(0.5, 0.0);
        let delta = frob_dist(&y_next, &y);
        y = y_next;
        z = z_next;
        if delta < 1e-16 {
            break;
        }
    }
    y
}

/// Unitary polar factor by the Newton iteration `U ← (U + U^{-†})/2`.
/// Converges quadratically for matrices close to the unitary group, which
/// is the only regime in which the drift-repair projection calls it.
pub fn polar_unitary(m: &CMat) -> CMat {
    let mut u = m.clone();
    for _ in 0..40 {
        let inv_adj = u
            .adjoint()
            .try_inverse()
            .expect("polar: singular iterate");
        let next = (&u + inv_adj) * C64::new(0.5, 0.0);
        let delta = frob_dist(&next, &u);
        u = next;
        if delta < 1e-15 {
            break;
        }
    }
    u
}

pub fn determinant(m: &CMat) -> C64 {
    m.clone().determinant()
}

pub fn trace(m: &CMat) -> C64 {
    m.trace()
}

pub fn try_inverse(m: &CMat) -> Option<CMat> {
    m.clone().try_inverse()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn su2_generator() -> CMat {
        // i * sigma_1
        CMat::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, 0.0),
            ],
        )
    }

    #[test]
    fn expm_matches_scalar_exponential() {
        let a = CMat::from_row_slice(1, 1, &[C64::new(0.3, -1.2)]);
        let e = expm(&a);
        let expected = C64::new(0.3, -1.2).exp();
        assert!((e[(0, 0)] - expected).norm() < 1e-14);
    }

    #[test]
    fn expm_log_roundtrip() {
        let x = su2_generator() * C64::new(0.4, 0.0);
        let g = expm(&x);
        let back = logm_near_identity(&g);
        assert!(frob_dist(&back, &x) < 1e-12);
    }

    #[test]
    fn polar_projects_back_to_unitary() {
        let x = su2_generator() * C64::new(0.9, 0.0);
        let mut g = expm(&x);
        // Inject drift.
        g[(0, 0)] += C64::new(1e-6, -2e-6);
        let u = polar_unitary(&g);
        let residual = frob_dist(&(u.adjoint() * &u), &identity(2));
        assert!(residual < 1e-13);
    }

    #[test]
    fn expm_additive_for_commuting_arguments() {
        let x = su2_generator();
        let a = expm(&(x.clone() * C64::new(0.3, 0.0)));
        let b = expm(&(x.clone() * C64::new(0.5, 0.0)));
        let ab = expm(&(x * C64::new(0.8, 0.0)));
        assert!(frob_dist(&(a * b), &ab) < 1e-13);
    }
}
