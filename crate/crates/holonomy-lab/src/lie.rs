//! Matrix Lie groups and algebras.
//!
//! Supports U(1), SU(2), SO(3) and GL(n, R) through a common dense-matrix
//! representation. Group elements carry their [`GroupSpec`] tag and are kept
//! on the group manifold by a drift-repair projection (polar decomposition
//! for the unitary/orthogonal groups, phase normalization for U(1)) whenever
//! floating-point composition pushes the membership residual above 1e-10.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{self, C64, CMat};

pub const MEMBERSHIP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupKind {
    U1,
    Su2,
    So3,
    GlN(usize),
}

/// The structure group of a bundle; matrix dimension and base field are
/// determined by the kind, so malformed combinations cannot be constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GroupSpec {
    pub kind: GroupKind,
}

impl GroupSpec {
    pub const U1: GroupSpec = GroupSpec { kind: GroupKind::U1 };
    pub const SU2: GroupSpec = GroupSpec { kind: GroupKind::Su2 };
    pub const SO3: GroupSpec = GroupSpec { kind: GroupKind::So3 };

    pub fn gl(n: usize) -> GroupSpec {
        assert!(n >= 1, "GL(n) needs n >= 1");
        GroupSpec { kind: GroupKind::GlN(n) }
    }

    pub fn matrix_dim(&self) -> usize {
        match self.kind {
            GroupKind::U1 => 1,
            GroupKind::Su2 => 2,
            GroupKind::So3 => 3,
            GroupKind::GlN(n) => n,
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self.kind, GroupKind::U1 | GroupKind::Su2)
    }

    /// Real dimension of the Lie algebra.
    pub fn algebra_dim(&self) -> usize {
        match self.kind {
            GroupKind::U1 => 1,
            GroupKind::Su2 => 3,
            GroupKind::So3 => 3,
            GroupKind::GlN(n) => n * n,
        }
    }

    /// A fixed basis of the Lie algebra as matrices.
    pub fn algebra_basis(&self) -> Vec<AlgebraElement> {
        match self.kind {
            GroupKind::U1 => {
                let m = CMat::from_row_slice(1, 1, &[C64::new(0.0, 1.0)]);
                vec![AlgebraElement { spec: *self, m }]
            }
            GroupKind::Su2 => {
                // i*sigma_k / 2
                let half_i = C64::new(0.0, 0.5);
                let s1 = CMat::from_row_slice(
                    2,
                    2,
                    &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
                );
                let s2 = CMat::from_row_slice(
                    2,
                    2,
                    &[C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
                );
                let s3 = CMat::from_row_slice(
                    2,
                    2,
                    &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0)],
                );
                [s1, s2, s3]
                    .into_iter()
                    .map(|s| AlgebraElement { spec: *self, m: s * half_i })
                    .collect()
            }
            GroupKind::So3 => {
                let mut basis = Vec::with_capacity(3);
                for k in 0..3 {
                    let mut m = CMat::zeros(3, 3);
                    let (i, j) = [(1, 2), (2, 0), (0, 1)][k];
                    m[(i, j)] = C64::new(-1.0, 0.0);
                    m[(j, i)] = C64::new(1.0, 0.0);
                    basis.push(AlgebraElement { spec: *self, m });
                }
                basis
            }
            GroupKind::GlN(n) => {
                let mut basis = Vec::with_capacity(n * n);
                for i in 0..n {
                    for j in 0..n {
                        let mut m = CMat::zeros(n, n);
                        m[(i, j)] = C64::new(1.0, 0.0);
                        basis.push(AlgebraElement { spec: *self, m });
                    }
                }
                basis
            }
        }
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            GroupKind::U1 => write!(f, "U1"),
            GroupKind::Su2 => write!(f, "SU2"),
            GroupKind::So3 => write!(f, "SO3"),
            GroupKind::GlN(n) => write!(f, "GL{n}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum LieError {
    #[error("group spec mismatch: {left} vs {right}")]
    SpecMismatch { left: GroupSpec, right: GroupSpec },
    #[error("matrix is not a member of {spec} (residual {residual:.3e})")]
    Membership { spec: GroupSpec, residual: f64 },
    #[error("matrix dimension {found} does not match {spec}")]
    Dimension { spec: GroupSpec, found: usize },
}

fn check_same_spec(a: GroupSpec, b: GroupSpec) -> Result<(), LieError> {
    if a != b {
        Err(LieError::SpecMismatch { left: a, right: b })
    } else {
        Ok(())
    }
}

/// A group element, stored as a dense square matrix over C.
/// Real groups keep zero imaginary parts.
#[derive(Debug, Clone)]
pub struct GroupElement {
    pub spec: GroupSpec,
    pub m: CMat,
}

impl GroupElement {
    pub fn identity(spec: GroupSpec) -> GroupElement {
        GroupElement { spec, m: linalg::identity(spec.matrix_dim()) }
    }

    pub fn new(spec: GroupSpec, m: CMat) -> Result<GroupElement, LieError> {
        if m.nrows() != spec.matrix_dim() || m.ncols() != spec.matrix_dim() {
            return Err(LieError::Dimension { spec, found: m.nrows() });
        }
        let g = GroupElement { spec, m };
        let residual = g.membership_residual();
        if residual > MEMBERSHIP_TOL {
            return Err(LieError::Membership { spec, residual });
        }
        Ok(g)
    }

    /// Construct, projecting back onto the group if the residual is out of
    /// tolerance. Used by composite operations to absorb floating drift.
    pub fn new_projected(spec: GroupSpec, m: CMat) -> GroupElement {
        let mut g = GroupElement { spec, m };
        if g.membership_residual() > MEMBERSHIP_TOL {
            g.project();
        }
        g
    }

    /// Distance from the defining constraints of the group, in Frobenius norm.
    pub fn membership_residual(&self) -> f64 {
        let n = self.spec.matrix_dim();
        match self.spec.kind {
            GroupKind::U1 => (self.m[(0, 0)].norm() - 1.0).abs(),
            GroupKind::Su2 => {
                let unitary = linalg::frob_dist(&(self.m.adjoint() * &self.m), &linalg::identity(n));
                let det = (linalg::determinant(&self.m) - C64::new(1.0, 0.0)).norm();
                unitary.max(det)
            }
            GroupKind::So3 => {
                let im: f64 = self.m.iter().map(|z| z.im.abs()).sum();
                let orth = linalg::frob_dist(&(self.m.transpose() * &self.m), &linalg::identity(n));
                let det = (linalg::determinant(&self.m) - C64::new(1.0, 0.0)).norm();
                im.max(orth).max(det)
            }
            GroupKind::GlN(_) => {
                let im: f64 = self.m.iter().map(|z| z.im.abs()).sum();
                if linalg::determinant(&self.m).norm() > 1e-12 {
                    im
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Project back onto the group manifold.
    pub fn project(&mut self) {
        match self.spec.kind {
            GroupKind::U1 => {
                let z = self.m[(0, 0)];
                if z.norm() > 0.0 {
                    self.m[(0, 0)] = z / z.norm();
                }
            }
            GroupKind::Su2 => {
                let mut u = linalg::polar_unitary(&self.m);
                // Pull the determinant phase back to 1.
                let det = linalg::determinant(&u);
                let phase = det.arg() / 2.0;
                u *= C64::new(0.0, -phase).exp();
                self.m = u;
            }
            GroupKind::So3 => {
                let real = self.m.map(|z| C64::new(z.re, 0.0));
                self.m = linalg::polar_unitary(&real).map(|z| C64::new(z.re, 0.0));
            }
            GroupKind::GlN(_) => {
                self.m = self.m.map(|z| C64::new(z.re, 0.0));
            }
        }
    }

    pub fn inverse(&self) -> GroupElement {
        let inv = match self.spec.kind {
            GroupKind::U1 | GroupKind::Su2 => self.m.adjoint(),
            GroupKind::So3 => self.m.transpose(),
            GroupKind::GlN(_) => linalg::try_inverse(&self.m).expect("GL element is invertible"),
        };
        GroupElement { spec: self.spec, m: inv }
    }

    pub fn dist(&self, other: &GroupElement) -> f64 {
        linalg::frob_dist(&self.m, &other.m)
    }

    /// Random element obtained as exp of a random algebra element with
    /// coefficients in [-scale, scale].
    pub fn random(spec: GroupSpec, rng: &mut ChaCha8Rng, scale: f64) -> GroupElement {
        group_exp(&AlgebraElement::random(spec, rng, scale))
    }
}

/// A Lie-algebra element tagged with the spec of its group.
#[derive(Debug, Clone)]
pub struct AlgebraElement {
    pub spec: GroupSpec,
    pub m: CMat,
}

impl AlgebraElement {
    pub fn zero(spec: GroupSpec) -> AlgebraElement {
        AlgebraElement { spec, m: CMat::zeros(spec.matrix_dim(), spec.matrix_dim()) }
    }

    pub fn new(spec: GroupSpec, m: CMat) -> Result<AlgebraElement, LieError> {
        if m.nrows() != spec.matrix_dim() || m.ncols() != spec.matrix_dim() {
            return Err(LieError::Dimension { spec, found: m.nrows() });
        }
        let x = AlgebraElement { spec, m };
        let residual = x.membership_residual();
        if residual > MEMBERSHIP_TOL {
            return Err(LieError::Membership { spec, residual });
        }
        Ok(x)
    }

    pub fn new_projected(spec: GroupSpec, m: CMat) -> AlgebraElement {
        let mut x = AlgebraElement { spec, m };
        if x.membership_residual() > MEMBERSHIP_TOL {
            x.project();
        }
        x
    }

    pub fn membership_residual(&self) -> f64 {
        match self.spec.kind {
            GroupKind::U1 => self.m[(0, 0)].re.abs(),
            GroupKind::Su2 => {
                let anti = linalg::frob_norm(&(self.m.adjoint() + &self.m));
                let tr = linalg::trace(&self.m).norm();
                anti.max(tr)
            }
            GroupKind::So3 => {
                let im: f64 = self.m.iter().map(|z| z.im.abs()).sum();
                let anti = linalg::frob_norm(&(self.m.transpose() + &self.m));
                im.max(anti)
            }
            GroupKind::GlN(_) => self.m.iter().map(|z| z.im.abs()).sum(),
        }
    }

    pub fn project(&mut self) {
        match self.spec.kind {
            GroupKind::U1 => {
                self.m[(0, 0)] = C64::new(0.0, self.m[(0, 0)].im);
            }
            GroupKind::Su2 => {
                let n = 2;
                let mut a = (&self.m - self.m.adjoint()) * C64::new(0.5, 0.0);
                let tr = linalg::trace(&a) / C64::new(n as f64, 0.0);
                for i in 0..n {
                    a[(i, i)] -= tr;
                }
                self.m = a;
            }
            GroupKind::So3 => {
                let real = self.m.map(|z| C64::new(z.re, 0.0));
                self.m = (&real - real.transpose()) * C64::new(0.5, 0.0);
            }
            GroupKind::GlN(_) => {
                self.m = self.m.map(|z| C64::new(z.re, 0.0));
            }
        }
    }

    pub fn norm(&self) -> f64 {
        linalg::frob_norm(&self.m)
    }

    pub fn dist(&self, other: &AlgebraElement) -> f64 {
        linalg::frob_dist(&self.m, &other.m)
    }

    pub fn scaled(&self, c: f64) -> AlgebraElement {
        AlgebraElement { spec: self.spec, m: &self.m * C64::new(c, 0.0) }
    }

    pub fn add(&self, other: &AlgebraElement) -> Result<AlgebraElement, LieError> {
        check_same_spec(self.spec, other.spec)?;
        Ok(AlgebraElement { spec: self.spec, m: &self.m + &other.m })
    }

    pub fn sub(&self, other: &AlgebraElement) -> Result<AlgebraElement, LieError> {
        check_same_spec(self.spec, other.spec)?;
        Ok(AlgebraElement { spec: self.spec, m: &self.m - &other.m })
    }

    /// Linear combination of the fixed algebra basis.
    pub fn from_coefficients(spec: GroupSpec, coeffs: &[f64]) -> AlgebraElement {
        let basis = spec.algebra_basis();
        assert_eq!(coeffs.len(), basis.len(), "coefficient count must match algebra dimension");
        let mut m = CMat::zeros(spec.matrix_dim(), spec.matrix_dim());
        for (c, b) in coeffs.iter().zip(basis.iter()) {
            m += &b.m * C64::new(*c, 0.0);
        }
        AlgebraElement { spec, m }
    }

    pub fn random(spec: GroupSpec, rng: &mut ChaCha8Rng, scale: f64) -> AlgebraElement {
        let dim = spec.algebra_dim();
        let coeffs: Vec<f64> = (0..dim).map(|_| rng.gen_range(-scale..scale)).collect();
        AlgebraElement::from_coefficients(spec, &coeffs)
    }
}

/// Group multiplication; re-projects when drift accumulates.
pub fn group_mul(a: &GroupElement, b: &GroupElement) -> Result<GroupElement, LieError> {
    check_same_spec(a.spec, b.spec)?;
    Ok(GroupElement::new_projected(a.spec, &a.m * &b.m))
}

/// Matrix exponential, with closed forms on su(2) and so(3) and
/// scaling-and-squaring Padé otherwise.
pub fn group_exp(x: &AlgebraElement) -> GroupElement {
    let m = match x.spec.kind {
        GroupKind::U1 => {
            let mut m = CMat::zeros(1, 1);
            m[(0, 0)] = x.m[(0, 0)].exp();
            m
        }
        GroupKind::Su2 => {
            // X^2 = -theta^2 I for traceless anti-Hermitian X.
            let theta = (linalg::frob_norm(&x.m).powi(2) / 2.0).sqrt();
            if theta < 1e-300 {
                linalg::identity(2)
            } else {
                linalg::identity(2) * C64::new(theta.cos(), 0.0)
                    + &x.m * C64::new(theta.sin() / theta, 0.0)
            }
        }
        GroupKind::So3 => {
            let theta = (linalg::frob_norm(&x.m).powi(2) / 2.0).sqrt();
            if theta < 1e-300 {
                linalg::identity(3)
            } else {
                // Rodrigues: I + sin(t)/t X + (1-cos(t))/t^2 X^2
                let x2 = &x.m * &x.m;
                linalg::identity(3)
                    + &x.m * C64::new(theta.sin() / theta, 0.0)
                    + x2 * C64::new((1.0 - theta.cos()) / (theta * theta), 0.0)
            }
        }
        GroupKind::GlN(_) => linalg::expm(&x.m),
    };
    GroupElement::new_projected(x.spec, m)
}

/// Principal logarithm back into the algebra. Closed form for su(2)/so(3)
/// away from the cut, series-based fallback otherwise. Intended for group
/// elements reachable from the identity without crossing the cut (small
/// holonomies, drift diagnostics).
pub fn group_log(g: &GroupElement) -> AlgebraElement {
    let m = match g.spec.kind {
        GroupKind::U1 => {
            let mut m = CMat::zeros(1, 1);
            m[(0, 0)] = C64::new(0.0, g.m[(0, 0)].arg());
            m
        }
        GroupKind::Su2 => {
            let cos_t = (linalg::trace(&g.m).re / 2.0).clamp(-1.0, 1.0);
            let theta = cos_t.acos();
            let anti = (&g.m - g.m.adjoint()) * C64::new(0.5, 0.0);
            if theta < 1e-8 {
                anti
            } else if theta.sin().abs() < 1e-8 {
                // Near the cut; fall back to the generic series.
                linalg::logm_near_identity(&g.m)
            } else {
                anti * C64::new(theta / theta.sin(), 0.0)
            }
        }
        GroupKind::So3 => {
            let cos_t = ((linalg::trace(&g.m).re - 1.0) / 2.0).clamp(-1.0, 1.0);
            let theta = cos_t.acos();
            let anti = (&g.m - g.m.transpose()) * C64::new(0.5, 0.0);
            if theta < 1e-8 {
                anti
            } else if theta.sin().abs() < 1e-8 {
                linalg::logm_near_identity(&g.m)
            } else {
                anti * C64::new(theta / theta.sin(), 0.0)
            }
        }
        GroupKind::GlN(_) => linalg::logm_near_identity(&g.m),
    };
    AlgebraElement::new_projected(g.spec, m)
}

/// Adjoint action `Ad(g) x = g x g^{-1}`.
pub fn adjoint(g: &GroupElement, x: &AlgebraElement) -> Result<AlgebraElement, LieError> {
    check_same_spec(g.spec, x.spec)?;
    let m = &g.m * &x.m * g.inverse().m;
    Ok(AlgebraElement::new_projected(g.spec, m))
}

/// Lie bracket `[x, y] = xy - yx`.
pub fn bracket(x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement, LieError> {
    check_same_spec(x.spec, y.spec)?;
    let m = &x.m * &y.m - &y.m * &x.m;
    Ok(AlgebraElement::new_projected(x.spec, m))
}

/// The left action of `G × G` on `G`: `conj(g, h) k = h k g^{-1}`.
/// On the diagonal it restricts to ordinary conjugation.
pub fn generalized_conjugation(
    g: &GroupElement,
    h: &GroupElement,
    k: &GroupElement,
) -> Result<GroupElement, LieError> {
    check_same_spec(g.spec, h.spec)?;
    check_same_spec(g.spec, k.spec)?;
    let m = &h.m * &k.m * g.inverse().m;
    Ok(GroupElement::new_projected(g.spec, m))
}

/// A finite-dimensional representation (V, rho) with its derived
/// Lie-algebra representation.
#[derive(Clone)]
pub struct Representation {
    pub spec: GroupSpec,
    pub dim_v: usize,
    on_group: Arc<dyn Fn(&GroupElement) -> CMat + Send + Sync>,
    on_algebra: Arc<dyn Fn(&AlgebraElement) -> CMat + Send + Sync>,
}

impl Representation {
    pub fn new(
        spec: GroupSpec,
        dim_v: usize,
        on_group: Arc<dyn Fn(&GroupElement) -> CMat + Send + Sync>,
        on_algebra: Arc<dyn Fn(&AlgebraElement) -> CMat + Send + Sync>,
    ) -> Representation {
        Representation { spec, dim_v, on_group, on_algebra }
    }

    /// The defining representation: matrices act on themselves.
    pub fn fundamental(spec: GroupSpec) -> Representation {
        Representation {
            spec,
            dim_v: spec.matrix_dim(),
            on_group: Arc::new(|g: &GroupElement| g.m.clone()),
            on_algebra: Arc::new(|x: &AlgebraElement| x.m.clone()),
        }
    }

    /// The adjoint representation on the algebra, in the fixed basis.
    pub fn adjoint_rep(spec: GroupSpec) -> Representation {
        let basis = spec.algebra_basis();
        let dim = basis.len();
        let basis_g = basis.clone();
        let gram = gram_inverse(&basis);
        let gram_a = gram.clone();
        let basis_a = basis.clone();
        Representation {
            spec,
            dim_v: dim,
            on_group: Arc::new(move |g: &GroupElement| {
                let mut m = CMat::zeros(dim, dim);
                for (j, b) in basis_g.iter().enumerate() {
                    let ad = adjoint(g, b).expect("same spec");
                    let coords = project_coords(&basis_g, &gram, &ad);
                    for i in 0..dim {
                        m[(i, j)] = C64::new(coords[i], 0.0);
                    }
                }
                m
            }),
            on_algebra: Arc::new(move |x: &AlgebraElement| {
                let mut m = CMat::zeros(dim, dim);
                for (j, b) in basis_a.iter().enumerate() {
                    let br = bracket(x, b).expect("same spec");
                    let coords = project_coords(&basis_a, &gram_a, &br);
                    for i in 0..dim {
                        m[(i, j)] = C64::new(coords[i], 0.0);
                    }
                }
                m
            }),
        }
    }

    /// U(1) charge-k representation on C.
    pub fn u1_charge(k: i64) -> Representation {
        Representation {
            spec: GroupSpec::U1,
            dim_v: 1,
            on_group: Arc::new(move |g: &GroupElement| {
                let theta = g.m[(0, 0)].arg();
                CMat::from_row_slice(1, 1, &[C64::new(0.0, k as f64 * theta).exp()])
            }),
            on_algebra: Arc::new(move |x: &AlgebraElement| {
                CMat::from_row_slice(1, 1, &[x.m[(0, 0)] * C64::new(k as f64, 0.0)])
            }),
        }
    }

    pub fn apply_group(&self, g: &GroupElement) -> CMat {
        (self.on_group)(g)
    }

    pub fn apply_algebra(&self, x: &AlgebraElement) -> CMat {
        (self.on_algebra)(x)
    }

    /// Sampled homomorphism and exp-compatibility residuals.
    pub fn validate(&self, rng: &mut ChaCha8Rng, samples: usize) -> (f64, f64) {
        let mut hom = 0.0f64;
        let mut compat = 0.0f64;
        for _ in 0..samples {
            let g = GroupElement::random(self.spec, rng, 1.0);
            let h = GroupElement::random(self.spec, rng, 1.0);
            let gh = group_mul(&g, &h).expect("same spec");
            let lhs = self.apply_group(&gh);
            let rhs = self.apply_group(&g) * self.apply_group(&h);
            hom = hom.max(linalg::frob_dist(&lhs, &rhs));

            let x = AlgebraElement::random(self.spec, rng, 0.8);
            let lhs = self.apply_group(&group_exp(&x));
            let rhs = linalg::expm(&self.apply_algebra(&x));
            compat = compat.max(linalg::frob_dist(&lhs, &rhs));
        }
        (hom, compat)
    }
}

/// Real inner product <a, b> = Re tr(a^† b) between algebra basis elements,
/// inverted once so adjoint coordinates drop out of a small solve.
fn gram_inverse(basis: &[AlgebraElement]) -> DMatrix<f64> {
    let dim = basis.len();
    let mut gram = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            gram[(i, j)] = (basis[i].m.adjoint() * &basis[j].m).trace().re;
        }
    }
    gram.try_inverse().expect("algebra basis is linearly independent")
}

fn project_coords(basis: &[AlgebraElement], gram_inv: &DMatrix<f64>, x: &AlgebraElement) -> Vec<f64> {
    let dim = basis.len();
    let mut rhs = DMatrix::<f64>::zeros(dim, 1);
    for i in 0..dim {
        rhs[(i, 0)] = (basis[i].m.adjoint() * &x.m).trace().re;
    }
    let coords = gram_inv * rhs;
    (0..dim).map(|i| coords[(i, 0)]).collect()
}
