//! Wilson loops and generalized Wilson loops for BF-pairs via iterated
//! Chen integrals.
//!
//! The pulled-back insertion at simplex time `t` is
//! `b(t) = rho_alg( Ad(hol(0,t)^{-1}) B_{gamma(t)}(gamma'(t)) )`, and the
//! `n`-th series term is the simplex quadrature of
//! `tr_V[ b(t_1) ... b(t_n) rho(hol)^{-1} ]` with `t_1 <= ... <= t_n`,
//! following the orientation conventions of the base-geometry layer.
//! Summed over all orders `n >= 1`, the series telescopes (as the Volterra
//! expansion of the lift equation) to
//! `tr_V rho(hol_{A+B})^{-1} - tr_V rho(hol_A)^{-1}`; see [`dyson_oracle`].
//! On groups with real characters — SU(2), SO(3) — the whole series equals
//! the plain Wilson loop of `A + B`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bundle::{
    AdjointForm, BundleError, BundlePoint, GaugeTransformation, LocalConnection,
};
use crate::geometry::{boundary_faces, GeometryError, LoopFamily, SampledCurve, SimplexGrid};
use crate::lie::{adjoint, bracket, AlgebraElement, GroupElement, LieError, Representation};
use crate::linalg::{self, C64, CMat};
use crate::transport::{
    holonomy, max_curvature_on_family, parallel_transport, reference_point, LoopVariation,
    TransportCache, TransportError, FD_VARIATION, FLATNESS_TOL,
};

/// Cost guard for the truncated series.
pub const MAX_ORDER: usize = 8;

#[derive(Debug, Error)]
pub enum ChenError {
    #[error("unsupported B-form degree {degree} (supported: 1, 2)")]
    UnsupportedDegree { degree: usize },
    #[error("series order {order} exceeds the cost guard {max}")]
    OrderTooLarge { order: usize, max: usize },
    #[error("connection is not flat (sampled curvature {max_curvature:.3e})")]
    NotFlat { max_curvature: f64 },
    #[error("B does not satisfy the covariant Maurer-Cartan equation (residual {residual:.3e})")]
    NotMaurerCartan { residual: f64 },
    #[error("B is not covariantly closed (residual {residual:.3e})")]
    NotCovClosed { residual: f64 },
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Lie(#[from] LieError),
}

/// A connection together with an adjoint-valued form of degree 1 or 2.
#[derive(Clone)]
pub struct BfPair {
    pub a: LocalConnection,
    pub b: AdjointForm,
}

impl BfPair {
    pub fn new(a: LocalConnection, b: AdjointForm) -> Result<BfPair, ChenError> {
        if b.degree != 1 && b.degree != 2 {
            return Err(ChenError::UnsupportedDegree { degree: b.degree });
        }
        Ok(BfPair { a, b })
    }

    pub fn deg_b(&self) -> usize {
        self.b.degree
    }

    /// The gauge-transformed pair `(A, B)^sigma`.
    pub fn gauge_transformed(&self, sigma: &GaugeTransformation) -> BfPair {
        BfPair {
            a: crate::bundle::apply_gauge_to_connection(&self.a, sigma),
            b: self.b.gauge_transformed(sigma),
        }
    }
}

/// Truncated generalized Wilson loop: term `n` is the `n`-th summand of the
/// iterated-integral series, term 0 the plain Wilson loop.
#[derive(Debug, Clone)]
pub struct WilsonSeries {
    pub loop_id: String,
    pub order: usize,
    pub terms: Vec<C64>,
    pub partial_sums: Vec<C64>,
}

/// Quadrature nodes per simplex axis for the order-`n` term.
pub fn nodes_for_order(n: usize) -> usize {
    if n <= 3 {
        24
    } else {
        12
    }
}

/// `W_rho(A; gamma; p) = tr_V rho(hol_A(gamma; p))`.
pub fn wilson_loop(
    a: &LocalConnection,
    rep: &Representation,
    looped: &SampledCurve,
    p: &BundlePoint,
    step: f64,
) -> Result<C64, ChenError> {
    let hol = holonomy(a, looped, p, step)?;
    Ok(linalg::trace(&rep.apply_group(&hol)))
}

/// The pulled-back adjoint form at simplex time `t` with the given tangent
/// arguments: `rho_alg( Ad(hol(0,t)^{-1}) omega_{gamma(t)}(args) )`.
pub fn pulled_back_form(
    cache: &TransportCache,
    omega: &AdjointForm,
    rep: &Representation,
    t: f64,
    args: &[&[f64]],
) -> Result<CMat, ChenError> {
    Ok(rep.apply_algebra(&pulled_back_algebra(cache, omega, t, args)?))
}

/// Same, before the representation: a Lie-algebra value.
pub fn pulled_back_algebra(
    cache: &TransportCache,
    omega: &AdjointForm,
    t: f64,
    args: &[&[f64]],
) -> Result<AlgebraElement, ChenError> {
    let lift = cache.transport_to(t)?;
    let value = omega.eval(lift.chart, &lift.x, args);
    Ok(adjoint(&lift.fiber.inverse(), &value)?)
}

/// Insertion `b(t)` contracted with the loop velocity (deg B = 1 case).
fn velocity_insertion(
    cache: &TransportCache,
    looped: &SampledCurve,
    b: &AdjointForm,
    rep: &Representation,
    t: f64,
) -> Result<CMat, ChenError> {
    let cp = looped.point_at(t);
    pulled_back_form(cache, b, rep, t, &[&cp.v])
}

/// `∫_{0 <= t_1 <= ... <= t_n <= upper} b(t_1) ... b(t_n) dt`, by iterated
/// Gauss-Legendre with variable upper bounds.
fn iterated_integral(
    level: usize,
    upper: f64,
    nodes: &[f64],
    weights: &[f64],
    dim: usize,
    b: &mut dyn FnMut(f64) -> Result<CMat, ChenError>,
) -> Result<CMat, ChenError> {
    if level == 0 {
        return Ok(linalg::identity(dim));
    }
    let mut acc = CMat::zeros(dim, dim);
    for (node, weight) in nodes.iter().zip(weights) {
        let t = upper * node;
        let w = upper * weight;
        let inner = iterated_integral(level - 1, t, nodes, weights, dim, b)?;
        let bt = b(t)?;
        acc += inner * bt * C64::new(w, 0.0);
    }
    Ok(acc)
}

/// The `n`-th summand of the generalized Wilson loop for `deg B = 1`
/// (a scalar; `n(deg B - 1) = 0`).
pub fn gen_wilson_term(
    pair: &BfPair,
    rep: &Representation,
    looped: &SampledCurve,
    n: usize,
    step: f64,
) -> Result<C64, ChenError> {
    if pair.deg_b() != 1 {
        return Err(ChenError::UnsupportedDegree { degree: pair.deg_b() });
    }
    if n > MAX_ORDER {
        return Err(ChenError::OrderTooLarge { order: n, max: MAX_ORDER });
    }
    let cache = TransportCache::new(&pair.a, looped, step)?;
    gen_wilson_term_cached(pair, rep, looped, &cache, n)
}

/// Order-`n` term at an explicit quadrature resolution.
pub fn gen_wilson_term_with_nodes(
    pair: &BfPair,
    rep: &Representation,
    looped: &SampledCurve,
    n: usize,
    nodes: usize,
    step: f64,
) -> Result<C64, ChenError> {
    if pair.deg_b() != 1 {
        return Err(ChenError::UnsupportedDegree { degree: pair.deg_b() });
    }
    let cache = TransportCache::new(&pair.a, looped, step)?;
    gen_wilson_term_cached_res(pair, rep, looped, &cache, n, nodes)
}

fn gen_wilson_term_cached(
    pair: &BfPair,
    rep: &Representation,
    looped: &SampledCurve,
    cache: &TransportCache,
    n: usize,
) -> Result<C64, ChenError> {
    gen_wilson_term_cached_res(pair, rep, looped, cache, n, nodes_for_order(n))
}

fn gen_wilson_term_cached_res(
    pair: &BfPair,
    rep: &Representation,
    looped: &SampledCurve,
    cache: &TransportCache,
    n: usize,
    res: usize,
) -> Result<C64, ChenError> {
    if n == 0 {
        return Ok(linalg::trace(&rep.apply_group(cache.holonomy())));
    }
    let (nodes, weights) = crate::geometry::simplex::gauss_legendre_unit(res);
    let mut b = |t: f64| velocity_insertion(cache, looped, &pair.b, rep, t);
    let integral = iterated_integral(n, 1.0, &nodes, &weights, rep.dim_v, &mut b)?;
    let rho_inv = rep.apply_group(&cache.holonomy().inverse());
    Ok(linalg::trace(&(integral * rho_inv)))
}

/// Terms `0..=order` of the generalized Wilson loop and their partial sums.
pub fn gen_wilson_series(
    pair: &BfPair,
    rep: &Representation,
    looped: &SampledCurve,
    loop_id: &str,
    order: usize,
    step: f64,
) -> Result<WilsonSeries, ChenError> {
    if pair.deg_b() != 1 {
        return Err(ChenError::UnsupportedDegree { degree: pair.deg_b() });
    }
    if order > MAX_ORDER {
        return Err(ChenError::OrderTooLarge { order, max: MAX_ORDER });
    }
    let cache = TransportCache::new(&pair.a, looped, step)?;
    let mut terms = Vec::with_capacity(order + 1);
    let mut partial_sums = Vec::with_capacity(order + 1);
    let mut sum = C64::new(0.0, 0.0);
    for n in 0..=order {
        let term = gen_wilson_term_cached(pair, rep, looped, &cache, n)?;
        sum += term;
        terms.push(term);
        partial_sums.push(sum);
    }
    Ok(WilsonSeries { loop_id: loop_id.to_string(), order, terms, partial_sums })
}

/// The exact value the truncated series converges to, computed through the
/// transport module: the Volterra expansion of the lift equation gives
/// `sum_{n >= 1} term_n = tr_V rho(hol_{A+B}^{-1}) - tr_V rho(hol_A^{-1})`,
/// so with the order-0 Wilson term the oracle is
/// `tr_V rho(hol_{A+B}^{-1}) - tr_V rho(hol_A^{-1}) + W_rho(A)`.
/// On groups with real characters (SU(2), SO(3)) the correction cancels and
/// the oracle equals `W_rho(A + B)`.
pub fn dyson_oracle(
    pair: &BfPair,
    rep: &Representation,
    looped: &SampledCurve,
    step: f64,
) -> Result<C64, ChenError> {
    if pair.deg_b() != 1 {
        return Err(ChenError::UnsupportedDegree { degree: pair.deg_b() });
    }
    let shifted = pair.a.plus(&pair.b.as_connection_summand());
    let p = reference_point(&shifted, looped, 0.0)?;
    let hol_shifted = holonomy(&shifted, looped, &p, step)?;
    let hol_base = holonomy(&pair.a, looped, &p, step)?;
    let inv_shifted = linalg::trace(&rep.apply_group(&hol_shifted.inverse()));
    let inv_base = linalg::trace(&rep.apply_group(&hol_base.inverse()));
    let w_base = linalg::trace(&rep.apply_group(&hol_base));
    Ok(inv_shifted - inv_base + w_base)
}

/// `W_rho(A + B)` itself, for the acceptance comparison.
pub fn wilson_of_shifted_connection(
    pair: &BfPair,
    rep: &Representation,
    looped: &SampledCurve,
    step: f64,
) -> Result<C64, ChenError> {
    let shifted = pair.a.plus(&pair.b.as_connection_summand());
    let p = reference_point(&shifted, looped, 0.0)?;
    wilson_loop(&shifted, rep, looped, &p, step)
}

/// Degree-2 term evaluation against supplied loop variations: the order-`n`
/// summand is an `n`-form on loop space; `n <= 2`.
pub fn gen_wilson_term_deg2(
    pair: &BfPair,
    rep: &Representation,
    looped: &SampledCurve,
    n: usize,
    variations: &[LoopVariation],
    step: f64,
) -> Result<C64, ChenError> {
    if pair.deg_b() != 2 {
        return Err(ChenError::UnsupportedDegree { degree: pair.deg_b() });
    }
    assert!(n >= 1 && n <= 2, "degree-2 terms are evaluated for n <= 2 only");
    assert_eq!(variations.len(), n, "an n-form needs n variation arguments");
    let cache = TransportCache::new(&pair.a, looped, step)?;
    let rho_inv = rep.apply_group(&cache.holonomy().inverse());
    let res = nodes_for_order(n);

    let insertion = |t: f64, field: &LoopVariation| -> Result<CMat, ChenError> {
        let cp = looped.point_at(t);
        let x_dir = (field.field)(t);
        pulled_back_form(&cache, &pair.b, rep, t, &[&cp.v, &x_dir])
    };

    match n {
        1 => {
            let grid = SimplexGrid::new(1, res)?;
            let mut acc = C64::new(0.0, 0.0);
            let mut err: Option<ChenError> = None;
            grid.foreach_node(|ts, w| {
                if err.is_some() {
                    return;
                }
                match insertion(ts[0], &variations[0]) {
                    Ok(m) => acc += linalg::trace(&(m * &rho_inv)) * C64::new(w, 0.0),
                    Err(e) => err = Some(e),
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            Ok(acc)
        }
        _ => {
            // sign from sorting dt_1 ∧ theta_1 ∧ dt_2 ∧ theta_2 into
            // (dt_1 ∧ dt_2) ∧ (theta_1 ∧ theta_2)
            let reorder_sign = -1.0;
            let grid = SimplexGrid::new(2, res)?;
            let mut acc = C64::new(0.0, 0.0);
            let mut err: Option<ChenError> = None;
            grid.foreach_node(|ts, w| {
                if err.is_some() {
                    return;
                }
                let value = (|| -> Result<C64, ChenError> {
                    let b1x1 = insertion(ts[0], &variations[0])?;
                    let b2x2 = insertion(ts[1], &variations[1])?;
                    let b1x2 = insertion(ts[0], &variations[1])?;
                    let b2x1 = insertion(ts[1], &variations[0])?;
                    let antisym = linalg::trace(&(b1x1 * b2x2 * &rho_inv))
                        - linalg::trace(&(b1x2 * b2x1 * &rho_inv));
                    Ok(antisym * C64::new(w, 0.0))
                })();
                match value {
                    Ok(v) => acc += v,
                    Err(e) => err = Some(e),
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            Ok(acc * C64::new(reorder_sign, 0.0))
        }
    }
}

/// Sampled residual of the covariant Maurer-Cartan equation
/// `d_A B + (1/2)[B, B]` for a degree-1 form.
pub fn maurer_cartan_residual(
    pair: &BfPair,
    rng: &mut ChaCha8Rng,
    samples: usize,
) -> Result<f64, ChenError> {
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let (chart, x) = (pair.a.bundle.sampler)(rng);
        let res = mc_value(pair, chart, &x, &[1.0, 0.0], &[0.0, 1.0])?;
        worst = worst.max(res.norm());
    }
    Ok(worst)
}

fn mc_value(
    pair: &BfPair,
    chart: usize,
    x: &[f64],
    u: &[f64],
    v: &[f64],
) -> Result<AlgebraElement, ChenError> {
    let dab = cov_differential(pair, chart, x, u, v)?;
    let half_bb = bracket(&pair.b.eval(chart, x, &[u]), &pair.b.eval(chart, x, &[v]))?;
    Ok(dab.add(&half_bb)?)
}

/// `d_A B(u, v) = dB(u, v) + [A(u), B(v)] - [A(v), B(u)]` for degree-1 `B`,
/// with `dB` by central differences.
pub fn cov_differential(
    pair: &BfPair,
    chart: usize,
    x: &[f64],
    u: &[f64],
    v: &[f64],
) -> Result<AlgebraElement, ChenError> {
    let h = crate::bundle::FD_STEP;
    let shift = |dir: &[f64], sign: f64| -> Vec<f64> {
        x.iter().zip(dir).map(|(xi, di)| xi + sign * h * di).collect()
    };
    let du = pair
        .b
        .eval(chart, &shift(u, 1.0), &[v])
        .sub(&pair.b.eval(chart, &shift(u, -1.0), &[v]))?
        .scaled(1.0 / (2.0 * h));
    let dv = pair
        .b
        .eval(chart, &shift(v, 1.0), &[u])
        .sub(&pair.b.eval(chart, &shift(v, -1.0), &[u]))?
        .scaled(1.0 / (2.0 * h));
    let db = du.sub(&dv)?;
    let a_u = pair.a.eval(chart, x, u);
    let a_v = pair.a.eval(chart, x, v);
    let comm = bracket(&a_u, &pair.b.eval(chart, x, &[v]))?
        .sub(&bracket(&a_v, &pair.b.eval(chart, x, &[u]))?)?;
    Ok(db.add(&comm)?)
}

/// Local constancy of the truncated series under the flat + Maurer-Cartan
/// hypotheses: `max_s |S_N(gamma_s) - S_N(gamma_0)|` across a homotopy.
pub fn local_constancy_check(
    pair: &BfPair,
    rep: &Representation,
    family: &LoopFamily,
    order: usize,
    rng: &mut ChaCha8Rng,
    step: f64,
) -> Result<f64, ChenError> {
    if pair.deg_b() != 1 {
        return Err(ChenError::UnsupportedDegree { degree: pair.deg_b() });
    }
    let max_f = max_curvature_on_family(&pair.a, family, 8);
    if max_f > FLATNESS_TOL {
        return Err(ChenError::NotFlat { max_curvature: max_f });
    }
    let mc = maurer_cartan_residual(pair, rng, 32)?;
    if mc > FLATNESS_TOL.max(1e-8) {
        return Err(ChenError::NotMaurerCartan { residual: mc });
    }
    family.validate(1e-8)?;
    series_deviation_across_family(pair, rep, family, order, step)
}

/// `max_s |S_N(gamma_s) - S_N(gamma_0)|` with no hypothesis validation;
/// used directly for contrapositive controls.
pub fn series_deviation_across_family(
    pair: &BfPair,
    rep: &Representation,
    family: &LoopFamily,
    order: usize,
    step: f64,
) -> Result<f64, ChenError> {
    let base = gen_wilson_series(pair, rep, &family.slice(0.0), "s0", order, step)?;
    let s0 = *base.partial_sums.last().unwrap();
    let mut worst = 0.0f64;
    for k in 1..=family.grid_s {
        let s = k as f64 / family.grid_s as f64;
        let series = gen_wilson_series(pair, rep, &family.slice(s), "s", order, step)?;
        worst = worst.max((*series.partial_sums.last().unwrap() - s0).norm());
    }
    Ok(worst)
}

fn richardson_scalar(
    mut f: impl FnMut(f64) -> Result<C64, ChenError>,
    eps: f64,
) -> Result<C64, ChenError> {
    let d = |e: f64, f: &mut dyn FnMut(f64) -> Result<C64, ChenError>| {
        Ok::<_, ChenError>((f(e)? - f(-e)?) / C64::new(2.0 * e, 0.0))
    };
    let d1 = d(eps, &mut f)?;
    let d2 = d(eps / 2.0, &mut f)?;
    Ok(d2 * C64::new(4.0 / 3.0, 0.0) - d1 * C64::new(1.0 / 3.0, 0.0))
}

/// Discrete closedness of the low-order summands under `F_A = 0`,
/// `d_A B = 0`: for `deg B = 1` the summands are functions on loop space,
/// so the residual is the larger of the two directional difference
/// quotients `|D_{s_i} term_n|` across a two-parameter family; returns one
/// residual per order `0..=max_n`.
pub fn wilson_closedness_check(
    pair: &BfPair,
    rep: &Representation,
    two_param: &(dyn Fn(f64, f64) -> SampledCurve + Sync),
    max_n: usize,
    rng: &mut ChaCha8Rng,
    step: f64,
    fd_eps: f64,
) -> Result<Vec<f64>, ChenError> {
    assert!(max_n <= 2, "closedness is checked for the n <= 2 summands only");
    let fam = LoopFamily::new({
        let f = &two_param;
        let c = f(0.0, 0.0);
        move |_| c.clone()
    })
    .with_grid(1, 16);
    let max_f = max_curvature_on_family(&pair.a, &fam, 1);
    if max_f > FLATNESS_TOL {
        return Err(ChenError::NotFlat { max_curvature: max_f });
    }
    if pair.deg_b() == 1 {
        let mut worst_cov = 0.0f64;
        for _ in 0..32 {
            let (chart, x) = (pair.a.bundle.sampler)(rng);
            let d = cov_differential(pair, chart, &x, &[1.0, 0.0], &[0.0, 1.0])?;
            worst_cov = worst_cov.max(d.norm());
        }
        if worst_cov > 1e-8 {
            return Err(ChenError::NotCovClosed { residual: worst_cov });
        }
    }

    let mut residuals = Vec::with_capacity(max_n + 1);
    for n in 0..=max_n {
        let mut worst = 0.0f64;
        for dir in 0..2 {
            let d = richardson_scalar(
                |eps| {
                    let (s1, s2) = if dir == 0 { (eps, 0.0) } else { (0.0, eps) };
                    let curve = two_param(s1, s2);
                    if n == 0 {
                        let p = reference_point(&pair.a, &curve, 0.0)?;
                        wilson_loop(&pair.a, rep, &curve, &p, step)
                    } else {
                        gen_wilson_term(pair, rep, &curve, n, step)
                    }
                },
                fd_eps,
            )?;
            worst = worst.max(d.norm());
        }
        residuals.push(worst);
    }
    Ok(residuals)
}

/// Discrete exterior derivative of the `n = 1` summand for `deg B = 2`
/// (a 1-form on loop space): antisymmetrized difference quotients over the
/// two family parameters.
pub fn closedness_deg2_n1(
    pair: &BfPair,
    rep: &Representation,
    two_param: &(dyn Fn(f64, f64) -> SampledCurve + Sync),
    step: f64,
) -> Result<f64, ChenError> {
    if pair.deg_b() != 2 {
        return Err(ChenError::UnsupportedDegree { degree: pair.deg_b() });
    }
    let eps = 1e-3;
    // variation fields of the family at (s1, s2), by finite differences
    let field = |dir: usize, s1: f64, s2: f64| -> LoopVariation {
        let base_plus = if dir == 0 {
            two_param(s1 + eps, s2)
        } else {
            two_param(s1, s2 + eps)
        };
        let base_minus = if dir == 0 {
            two_param(s1 - eps, s2)
        } else {
            two_param(s1, s2 - eps)
        };
        LoopVariation {
            field: std::sync::Arc::new(move |t: f64| {
                let xp = base_plus.point_at(t).x;
                let xm = base_minus.point_at(t).x;
                xp.iter().zip(&xm).map(|(p, m)| (p - m) / (2.0 * eps)).collect()
            }),
            vertical: None,
        }
    };
    // theta(d_j) evaluated at parameter point (s1, s2)
    let theta = |j: usize, s1: f64, s2: f64| -> Result<C64, ChenError> {
        let curve = two_param(s1, s2);
        let x_j = field(j, s1, s2);
        gen_wilson_term_deg2(pair, rep, &curve, 1, std::slice::from_ref(&x_j), step)
    };
    // d theta (d_0, d_1) = D_0[theta(d_1)] - D_1[theta(d_0)]
    let d0 = richardson_scalar(|e| theta(1, e, 0.0), eps)?;
    let d1 = richardson_scalar(|e| theta(0, 0.0, e), eps)?;
    Ok((d0 - d1).norm())
}

/// Infinitesimal BF-shift invariance (lowest orders): under the shift
/// `B -> B + eps d_A tau` with `F_A = 0` and `d_A B = 0`, the low-order
/// summands are unchanged to first order in `eps` (a degree-0 change by an
/// exact form vanishes). Returns the max FD derivative over `n = 1, 2`.
pub fn bf_shift_invariance_check(
    pair: &BfPair,
    rep: &Representation,
    tau: &AdjointForm,
    looped: &SampledCurve,
    step: f64,
) -> Result<f64, ChenError> {
    assert_eq!(tau.degree, 0, "the shift direction is a (deg B - 1)-form");
    if pair.deg_b() != 1 {
        return Err(ChenError::UnsupportedDegree { degree: pair.deg_b() });
    }
    let fam = LoopFamily::new({
        let c = looped.clone();
        move |_| c.clone()
    })
    .with_grid(1, 16);
    let max_f = max_curvature_on_family(&pair.a, &fam, 1);
    if max_f > FLATNESS_TOL {
        return Err(ChenError::NotFlat { max_curvature: max_f });
    }

    // d_A tau as a degree-1 adjoint form
    let a = pair.a.clone();
    let tau_c = tau.clone();
    let mut d_tau = AdjointForm::new(pair.a.bundle.clone(), 1);
    for chart in 0..pair.a.bundle.atlas.charts.len() {
        let a = a.clone();
        let tau_c = tau_c.clone();
        d_tau.set_chart(
            chart,
            std::sync::Arc::new(move |x: &[f64], args: &[&[f64]]| {
                let u = args[0];
                let h = crate::bundle::FD_STEP;
                let xp: Vec<f64> = x.iter().zip(u).map(|(xi, ui)| xi + h * ui).collect();
                let xm: Vec<f64> = x.iter().zip(u).map(|(xi, ui)| xi - h * ui).collect();
                let dt = tau_c
                    .eval(chart, &xp, &[])
                    .sub(&tau_c.eval(chart, &xm, &[]))
                    .expect("same spec")
                    .scaled(1.0 / (2.0 * h));
                let comm =
                    bracket(&a.eval(chart, x, u), &tau_c.eval(chart, x, &[])).expect("same spec");
                dt.add(&comm).expect("same spec")
            }),
        );
    }

    let mut worst = 0.0f64;
    let eps = 1e-3;
    for n in 1..=2usize {
        let value = |e: f64| -> Result<C64, ChenError> {
            let shifted = BfPair {
                a: pair.a.clone(),
                b: sum_forms(&pair.b, &d_tau.scaled(e)),
            };
            gen_wilson_term(&shifted, rep, looped, n, step)
        };
        let d = (value(eps)? - value(-eps)?) / C64::new(2.0 * eps, 0.0);
        worst = worst.max(d.norm());
    }
    Ok(worst)
}

fn sum_forms(a: &AdjointForm, b: &AdjointForm) -> AdjointForm {
    assert_eq!(a.degree, b.degree);
    let mut out = AdjointForm::new(a.bundle.clone(), a.degree);
    for chart in 0..a.bundle.atlas.charts.len() {
        let a = a.clone();
        let b = b.clone();
        out.set_chart(
            chart,
            std::sync::Arc::new(move |x: &[f64], args: &[&[f64]]| {
                a.eval(chart, x, args).add(&b.eval(chart, x, args)).expect("same spec")
            }),
        );
    }
    out
}

/// Boundary-face reduction table: compares the order-`n` integrand
/// restricted to the face `alpha` against the order-`(n-1)`-type integrand
/// predicted by the composition identities (prepend the bare insertion at
/// the base point for `alpha = 0`; merge the repeated-time insertions for
/// interior `alpha`; append the bare insertion after `rho(hol)^{-1}` for
/// `alpha = n`). Returns one residual per face.
pub fn boundary_face_reduction(
    pair: &BfPair,
    rep: &Representation,
    looped: &SampledCurve,
    n: usize,
    step: f64,
) -> Result<Vec<(usize, f64)>, ChenError> {
    if pair.deg_b() != 1 {
        return Err(ChenError::UnsupportedDegree { degree: pair.deg_b() });
    }
    assert!((2..=3).contains(&n), "face reduction is tabulated for n = 2, 3");
    let cache = TransportCache::new(&pair.a, looped, step)?;
    let rho_inv = rep.apply_group(&cache.holonomy().inverse());
    let res = nodes_for_order(n);

    let insert = |t: f64| velocity_insertion(&cache, looped, &pair.b, rep, t);
    let bare = |t: f64| -> Result<CMat, ChenError> {
        let cp = looped.point_at(t);
        let value = pair.b.eval(cp.chart, &cp.x, &[&cp.v]);
        Ok(rep.apply_algebra(&value))
    };

    let mut table = Vec::new();
    for face in boundary_faces(n) {
        let grid = SimplexGrid::new(n - 1, res)?;
        let mut lhs = C64::new(0.0, 0.0);
        let mut rhs = C64::new(0.0, 0.0);
        let mut failure: Option<ChenError> = None;
        grid.foreach_node(|s, w| {
            if failure.is_some() {
                return;
            }
            let outcome = (|| -> Result<(), ChenError> {
                let t = face.embed(s);
                // literal integrand on the face
                let mut prod = linalg::identity(rep.dim_v);
                for &ti in &t {
                    prod *= insert(ti)?;
                }
                lhs += linalg::trace(&(prod * &rho_inv)) * C64::new(w, 0.0);

                // predicted reduced integrand
                let predicted = match face.alpha {
                    0 => {
                        let mut m = bare(0.0)?;
                        for &si in s {
                            m *= insert(si)?;
                        }
                        linalg::trace(&(m * &rho_inv))
                    }
                    alpha if alpha == n => {
                        let mut m = linalg::identity(rep.dim_v);
                        for &si in s {
                            m *= insert(si)?;
                        }
                        linalg::trace(&(m * &rho_inv * bare(1.0)?))
                    }
                    alpha => {
                        let mut m = linalg::identity(rep.dim_v);
                        for (i, &si) in s.iter().enumerate() {
                            let factor = insert(si)?;
                            if i + 1 == alpha {
                                m *= &factor * &factor;
                            } else {
                                m *= factor;
                            }
                        }
                        linalg::trace(&(m * &rho_inv))
                    }
                };
                rhs += predicted * C64::new(w, 0.0);
                Ok(())
            })();
            if let Err(e) = outcome {
                failure = Some(e);
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        table.push((face.alpha, (lhs - rhs).norm()));
    }
    Ok(table)
}

/// Gauge equivariance of the pulled-back form (sampled): the pulled-back
/// form of `(A, omega)^sigma` equals the base-point conjugate of the
/// pulled-back form of `(A, omega)`.
pub fn covgauge_equivariance(
    a: &LocalConnection,
    omega: &AdjointForm,
    sigma: &GaugeTransformation,
    looped: &SampledCurve,
    samples: usize,
    step: f64,
) -> Result<f64, ChenError> {
    let a_sigma = crate::bundle::apply_gauge_to_connection(a, sigma);
    let omega_sigma = omega.gauge_transformed(sigma);
    let cache = TransportCache::new(a, looped, step)?;
    let cache_sigma = TransportCache::new(&a_sigma, looped, step)?;
    let start = looped.point_at(0.0);
    let sigma0 = sigma.eval(start.chart, &start.x);

    let mut worst = 0.0f64;
    for k in 0..samples {
        let t = (k as f64 + 0.5) / samples as f64;
        let cp = looped.point_at(t);
        let lhs = pulled_back_algebra(&cache_sigma, &omega_sigma, t, &[&cp.v])?;
        let base = pulled_back_algebra(&cache, omega, t, &[&cp.v])?;
        let rhs = adjoint(&sigma0.inverse(), &base)?;
        worst = worst.max(lhs.dist(&rhs));
    }
    Ok(worst)
}

/// Commuting-square identity at a fixed flat connection: the covariant
/// differential of the pulled-back 0-form equals the pulled-back covariant
/// differential, realized by loop-space finite differences.
pub fn covgauge_commute(
    a: &LocalConnection,
    omega: &AdjointForm,
    looped: &SampledCurve,
    variations: &[LoopVariation],
    t_eval: f64,
    step: f64,
) -> Result<f64, ChenError> {
    assert_eq!(omega.degree, 0, "the commuting-square check uses a 0-form");
    let fam = LoopFamily::new({
        let c = looped.clone();
        move |_| c.clone()
    })
    .with_grid(1, 16);
    let max_f = max_curvature_on_family(a, &fam, 1);
    if max_f > FLATNESS_TOL {
        return Err(ChenError::NotFlat { max_curvature: max_f });
    }

    let cache = TransportCache::new(a, looped, step)?;
    let base_hat = pulled_back_algebra(&cache, omega, t_eval, &[])?;
    let start = looped.point_at(0.0);

    let mut worst = 0.0f64;
    for variation in variations {
        let field = variation.field.clone();
        // LHS: D_X omega_hat + [A(X(0)), omega_hat]
        let d_hat = {
            let d = |e: f64| -> Result<CMat, ChenError> {
                let curve_eps = crate::transport::deformed_curve(looped, &field, e);
                let cache_eps = TransportCache::new(a, &curve_eps, step)?;
                Ok(pulled_back_algebra(&cache_eps, omega, t_eval, &[])?.m)
            };
            let d1 = (d(FD_VARIATION)? - d(-FD_VARIATION)?)
                * C64::new(1.0 / (2.0 * FD_VARIATION), 0.0);
            let d2 = (d(FD_VARIATION / 2.0)? - d(-FD_VARIATION / 2.0)?)
                * C64::new(1.0 / FD_VARIATION, 0.0);
            d2 * C64::new(4.0 / 3.0, 0.0) - d1 * C64::new(1.0 / 3.0, 0.0)
        };
        let a_x0 = a.eval(start.chart, &start.x, &(variation.field)(0.0));
        let lhs = AlgebraElement {
            spec: a.bundle.group,
            m: d_hat + &a_x0.m * &base_hat.m - &base_hat.m * &a_x0.m,
        };

        // RHS: Ad(hol(0,t)^{-1}) [ D_{X(t)} omega + [A(X(t)), omega] ]
        let cp = looped.point_at(t_eval);
        let x_dir = (variation.field)(t_eval);
        let h = crate::bundle::FD_STEP;
        let shift = |sign: f64| -> Vec<f64> {
            cp.x.iter().zip(&x_dir).map(|(xi, di)| xi + sign * h * di).collect()
        };
        let d_omega = omega
            .eval(cp.chart, &shift(1.0), &[])
            .sub(&omega.eval(cp.chart, &shift(-1.0), &[]))?
            .scaled(1.0 / (2.0 * h));
        let comm = bracket(&a.eval(cp.chart, &cp.x, &x_dir), &omega.eval(cp.chart, &cp.x, &[]))?;
        let cov = d_omega.add(&comm)?;
        let lift = cache.transport_to(t_eval)?;
        let rhs = adjoint(&lift.fiber.inverse(), &cov)?;

        worst = worst.max(lhs.dist(&rhs));
    }
    Ok(worst)
}

/// Consistency of simplex segment transports:
/// `hol(0, t_j) = hol(t_i, t_j) hol(0, t_i)` with independently integrated
/// factors; max residual over sampled `(t_i, t_j)` pairs.
pub fn segment_transport_consistency(
    a: &LocalConnection,
    looped: &SampledCurve,
    rng: &mut ChaCha8Rng,
    samples: usize,
    step: f64,
) -> Result<f64, ChenError> {
    let cache = TransportCache::new(a, looped, step)?;
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let ti = rng.gen_range(0.05..0.5);
        let tj = rng.gen_range(ti + 0.1..1.0);
        let pi = reference_point(a, looped, ti)?;
        let pj = reference_point(a, looped, tj)?;
        let mid = parallel_transport(a, looped, ti, tj, &pi, &pj, step)?;
        let g_i = cache.transport_to(ti)?.fiber.clone();
        let g_j = cache.transport_to(tj)?.fiber.clone();
        let composed = crate::lie::group_mul(&mid, &g_i)?;
        worst = worst.max(composed.dist(&g_j));
    }
    Ok(worst)
}

/// Invariances of the Wilson loop map: base-point independence and gauge
/// invariance, sampled.
pub struct WilsonInvarianceReport {
    pub basepoint_residual: f64,
    pub gauge_residual: f64,
}

pub fn wilson_invariances(
    a: &LocalConnection,
    sigma: &GaugeTransformation,
    rep: &Representation,
    loops: &[SampledCurve],
    rng: &mut ChaCha8Rng,
    samples_per_loop: usize,
    step: f64,
) -> Result<WilsonInvarianceReport, ChenError> {
    let a_sigma = crate::bundle::apply_gauge_to_connection(a, sigma);
    let mut base_worst = 0.0f64;
    let mut gauge_worst = 0.0f64;
    for looped in loops {
        let p = reference_point(a, looped, 0.0)?;
        let w = wilson_loop(a, rep, looped, &p, step)?;
        for _ in 0..samples_per_loop {
            let g = GroupElement::random(a.bundle.group, rng, 1.0);
            let w_g = wilson_loop(a, rep, looped, &p.act(&g)?, step)?;
            base_worst = base_worst.max((w_g - w).norm());
        }
        let w_sigma = wilson_loop(&a_sigma, rep, looped, &p, step)?;
        gauge_worst = gauge_worst.max((w_sigma - w).norm());
    }
    Ok(WilsonInvarianceReport { basepoint_residual: base_worst, gauge_residual: gauge_worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{group_exp, GroupSpec};
    use crate::presets::*;
    use crate::transport::DEFAULT_STEP;
    use rand::SeedableRng;
    use std::f64::consts::TAU;
    use std::sync::Arc;

    fn su2_fund() -> Representation {
        Representation::fundamental(GroupSpec::SU2)
    }

    #[test]
    fn wilson_loop_of_trivial_connection_is_dimension() {
        let tp = trivial_preset(punctured_plane_atlas(), GroupSpec::SU2);
        let looped = circle_loop(tp.bundle.atlas.clone(), 1.0, 1, 0.0);
        let p = reference_point(&tp.connection, &looped, 0.0).unwrap();
        let w = wilson_loop(&tp.connection, &su2_fund(), &looped, &p, DEFAULT_STEP).unwrap();
        assert!((w - C64::new(2.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn wilson_loop_character_closed_form() {
        // flat angle with xi = c * (i sigma_3 / 2): hol = exp(-2 pi c i s3/2),
        // trace = 2 cos(pi c)
        let c = 0.37;
        let basis = GroupSpec::SU2.algebra_basis();
        let fa = flat_angle_preset(basis[2].scaled(c));
        let looped = circle_loop(fa.bundle.atlas.clone(), 1.0, 1, 0.0);
        let p = reference_point(&fa.connection, &looped, 0.0).unwrap();
        let w = wilson_loop(&fa.connection, &su2_fund(), &looped, &p, DEFAULT_STEP).unwrap();
        let expected = 2.0 * (std::f64::consts::PI * c).cos();
        assert!((w - C64::new(expected, 0.0)).norm() < 1e-9, "w = {w}");
    }

    #[test]
    fn wilson_invariance_report() {
        let rp = random_polynomial_preset(GroupSpec::SU2, 71, 3, 0.8);
        let sigma = random_polynomial_gauge(rp.bundle.clone(), 72, 2, 0.5);
        let loops = vec![
            circle_loop(rp.bundle.atlas.clone(), 1.0, 1, 0.0),
            random_trig_loop(rp.bundle.atlas.clone(), 73, 1.0),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(74);
        let report = wilson_invariances(
            &rp.connection,
            &sigma,
            &su2_fund(),
            &loops,
            &mut rng,
            20,
            DEFAULT_STEP,
        )
        .unwrap();
        assert!(report.basepoint_residual < 1e-9, "basepoint {:.3e}", report.basepoint_residual);
        assert!(report.gauge_residual < 1e-7, "gauge {:.3e}", report.gauge_residual);
    }

    #[test]
    fn pulled_back_form_reductions() {
        // trivial A: no conjugation; zero tangent args -> zero matrix
        let tp = trivial_preset(punctured_plane_atlas(), GroupSpec::SU2);
        let looped = circle_loop(tp.bundle.atlas.clone(), 1.0, 1, 0.0);
        let omega = random_polynomial_1form(tp.bundle.clone(), 75, 2, 0.5);
        let cache = TransportCache::new(&tp.connection, &looped, DEFAULT_STEP).unwrap();
        let rep = su2_fund();
        let t = 0.4;
        let cp = looped.point_at(t);
        let direct = rep.apply_algebra(&omega.eval(cp.chart, &cp.x, &[&cp.v]));
        let pulled = pulled_back_form(&cache, &omega, &rep, t, &[&cp.v]).unwrap();
        assert!(linalg::frob_dist(&direct, &pulled) < 1e-10);

        let zero_args = pulled_back_form(&cache, &omega, &rep, t, &[&[0.0, 0.0][..]]).unwrap();
        assert!(linalg::frob_norm(&zero_args) < 1e-14);

        // abelian: conjugation drops even with a nontrivial connection
        let fa = flat_angle_preset(AlgebraElement::from_coefficients(GroupSpec::U1, &[0.9]));
        let looped_u1 = circle_loop(fa.bundle.atlas.clone(), 1.0, 1, 0.0);
        let omega_u1 = u1_closed_1form(fa.bundle.clone(), 0.7, 76);
        let cache_u1 = TransportCache::new(&fa.connection, &looped_u1, DEFAULT_STEP).unwrap();
        let rep_u1 = Representation::fundamental(GroupSpec::U1);
        let cp = looped_u1.point_at(0.3);
        let direct = rep_u1.apply_algebra(&omega_u1.eval(cp.chart, &cp.x, &[&cp.v]));
        let pulled = pulled_back_form(&cache_u1, &omega_u1, &rep_u1, 0.3, &[&cp.v]).unwrap();
        assert!(linalg::frob_dist(&direct, &pulled) < 1e-12);
    }

    #[test]
    fn term_zero_b_and_homogeneity() {
        let rp = random_polynomial_preset(GroupSpec::SU2, 81, 2, 0.6);
        let looped = circle_loop(rp.bundle.atlas.clone(), 1.0, 1, 0.0);
        let zero_b = AdjointForm::zero(rp.bundle.clone(), 1);
        let pair = BfPair::new(rp.connection.clone(), zero_b).unwrap();
        for n in 1..=3 {
            let term = gen_wilson_term(&pair, &su2_fund(), &looped, n, DEFAULT_STEP).unwrap();
            assert!(term.norm() < 1e-14, "n = {n}");
        }

        // term_n(c B) = c^n term_n(B)
        let b = random_polynomial_1form(rp.bundle.clone(), 82, 2, 0.4);
        let c = 1.7;
        let pair1 = BfPair::new(rp.connection.clone(), b.clone()).unwrap();
        let pair2 = BfPair::new(rp.connection.clone(), b.scaled(c)).unwrap();
        for n in 1..=2 {
            let t1 = gen_wilson_term(&pair1, &su2_fund(), &looped, n, DEFAULT_STEP).unwrap();
            let t2 = gen_wilson_term(&pair2, &su2_fund(), &looped, n, DEFAULT_STEP).unwrap();
            assert!((t2 - t1 * C64::new(c.powi(n as i32), 0.0)).norm() < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn abelian_first_term_closed_form() {
        // trivial A on the circle-like loop, B = beta dphi: term_1 = 2 pi tr rho_alg(beta)
        let tp = trivial_preset(punctured_plane_atlas(), GroupSpec::U1);
        let beta = 0.42;
        let b = u1_closed_1form(tp.bundle.clone(), beta, 0);
        // remove the polynomial df part for an exact closed form: use seed
        // with zero-amplitude polynomial instead
        let mut pure_angle = AdjointForm::new(tp.bundle.clone(), 1);
        pure_angle.set_chart(
            0,
            Arc::new(move |x: &[f64], args: &[&[f64]]| {
                let u = args[0];
                let r2 = x[0] * x[0] + x[1] * x[1];
                AlgebraElement::from_coefficients(
                    GroupSpec::U1,
                    &[beta * (-x[1] * u[0] + x[0] * u[1]) / r2],
                )
            }),
        );
        drop(b);
        let looped = circle_loop(tp.bundle.atlas.clone(), 1.3, 1, 0.2);
        let pair = BfPair::new(tp.connection.clone(), pure_angle).unwrap();
        let rep = Representation::fundamental(GroupSpec::U1);
        let t1 = gen_wilson_term(&pair, &rep, &looped, 1, DEFAULT_STEP).unwrap();
        // rho_alg(i beta) integrated over one turn: 2 pi i beta
        let expected = C64::new(0.0, TAU * beta);
        assert!((t1 - expected).norm() < 1e-10, "t1 = {t1}");
    }

    #[test]
    fn dyson_series_converges_to_shifted_wilson_loop() {
        let rp = random_polynomial_preset(GroupSpec::SU2, 91, 2, 0.5);
        let looped = circle_loop(rp.bundle.atlas.clone(), 1.0, 1, 0.0);
        // scale B so that max_t |B(gamma'(t))| = 0.3
        let raw = random_polynomial_1form(rp.bundle.clone(), 92, 2, 0.5);
        let mut max_b: f64 = 0.0;
        for k in 0..=64 {
            let cp = looped.point_at(k as f64 / 64.0);
            max_b = max_b.max(raw.eval(cp.chart, &cp.x, &[&cp.v]).norm());
        }
        let b = raw.scaled(0.3 / max_b);
        let pair = BfPair::new(rp.connection.clone(), b).unwrap();
        let rep = su2_fund();
        let order = 4;
        let series =
            gen_wilson_series(&pair, &rep, &looped, "dyson", order, DEFAULT_STEP).unwrap();
        let w_shifted =
            wilson_of_shifted_connection(&pair, &rep, &looped, DEFAULT_STEP).unwrap();
        let oracle = dyson_oracle(&pair, &rep, &looped, DEFAULT_STEP).unwrap();
        // on SU(2) the inverse-holonomy trace equals the Wilson loop
        assert!((oracle - w_shifted).norm() < 1e-9, "oracle {oracle} vs W(A+B) {w_shifted}");

        let mut prev = f64::INFINITY;
        for (n, partial) in series.partial_sums.iter().enumerate() {
            let residual = (*partial - w_shifted).norm();
            assert!(residual < prev, "residual not decreasing at n = {n}: {residual:.3e}");
            prev = residual;
        }
        assert!(prev < 2e-4, "order-{order} residual {prev:.3e}");
        // term 0 is the plain Wilson loop
        let p = reference_point(&rp.connection, &looped, 0.0).unwrap();
        let w0 = wilson_loop(&rp.connection, &rep, &looped, &p, DEFAULT_STEP).unwrap();
        assert!((series.terms[0] - w0).norm() < 1e-12);
    }

    #[test]
    fn series_is_gauge_invariant_termwise() {
        let rp = random_polynomial_preset(GroupSpec::SU2, 101, 2, 0.5);
        let looped = circle_loop(rp.bundle.atlas.clone(), 1.0, 1, 0.0);
        let b = random_polynomial_1form(rp.bundle.clone(), 102, 2, 0.3);
        let pair = BfPair::new(rp.connection.clone(), b).unwrap();
        let sigma = random_polynomial_gauge(rp.bundle.clone(), 103, 2, 0.5);
        let pair_sigma = pair.gauge_transformed(&sigma);
        let rep = su2_fund();
        for n in 0..=2 {
            let t = gen_wilson_term(&pair, &rep, &looped, n, DEFAULT_STEP).unwrap();
            let t_sigma = gen_wilson_term(&pair_sigma, &rep, &looped, n, DEFAULT_STEP).unwrap();
            assert!((t - t_sigma).norm() < 1e-7, "term {n}: {:.3e}", (t - t_sigma).norm());
        }
    }

    #[test]
    fn local_constancy_flat_abelian() {
        let fa = flat_angle_preset(AlgebraElement::from_coefficients(GroupSpec::U1, &[0.6]));
        let b = u1_closed_1form(fa.bundle.clone(), 0.3, 111);
        let pair = BfPair::new(fa.connection.clone(), b).unwrap();
        let rep = Representation::fundamental(GroupSpec::U1);
        let family = trig_radius_family(fa.bundle.atlas.clone(), 112, 1.0).with_grid(8, 64);
        let mut rng = ChaCha8Rng::seed_from_u64(113);
        let dev =
            local_constancy_check(&pair, &rep, &family, 3, &mut rng, DEFAULT_STEP).unwrap();
        assert!(dev < 1e-5, "deviation {dev:.3e}");

        // dB != 0 control: rejected by validation, and the raw deviation is
        // far from constant
        let bad = BfPair::new(
            fa.connection.clone(),
            u1_nonclosed_1form(fa.bundle.clone(), 0.4),
        )
        .unwrap();
        assert!(matches!(
            local_constancy_check(&bad, &rep, &family, 3, &mut rng, DEFAULT_STEP),
            Err(ChenError::NotMaurerCartan { .. })
        ));
        let raw_dev =
            series_deviation_across_family(&bad, &rep, &family, 3, DEFAULT_STEP).unwrap();
        assert!(raw_dev > 10.0 * dev.max(1e-5), "control deviation {raw_dev:.3e}");
    }

    #[test]
    fn closedness_of_low_orders() {
        let fa = flat_angle_preset(AlgebraElement::from_coefficients(GroupSpec::U1, &[0.5]));
        let b = u1_closed_1form(fa.bundle.clone(), 0.25, 121);
        let pair = BfPair::new(fa.connection.clone(), b).unwrap();
        let rep = Representation::fundamental(GroupSpec::U1);
        let family = two_param_trig_family(fa.bundle.atlas.clone(), 122, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let residuals = wilson_closedness_check(
            &pair,
            &rep,
            &family,
            2,
            &mut rng,
            DEFAULT_STEP,
            FD_VARIATION,
        )
        .unwrap();
        for (n, r) in residuals.iter().enumerate() {
            assert!(*r < 1e-4, "order {n} residual {r:.3e}");
        }

        // non-closed B rejected
        let bad = BfPair::new(
            fa.connection.clone(),
            u1_nonclosed_1form(fa.bundle.clone(), 0.4),
        )
        .unwrap();
        assert!(matches!(
            wilson_closedness_check(&bad, &rep, &family, 1, &mut rng, DEFAULT_STEP, FD_VARIATION),
            Err(ChenError::NotCovClosed { .. })
        ));
    }

    #[test]
    fn deg2_term_evaluation_and_closedness() {
        let fa = flat_angle_preset(AlgebraElement::from_coefficients(GroupSpec::SU2, &[0.0, 0.0, 0.4]));
        let b2 = polynomial_2form(fa.bundle.clone(), 131, 0.4);
        let pair = BfPair::new(fa.connection.clone(), b2).unwrap();
        let rep = su2_fund();
        let looped = circle_loop(fa.bundle.atlas.clone(), 1.0, 1, 0.0);
        let x1 = LoopVariation { field: trig_variation_field(132, 1.0), vertical: None };
        let x2 = LoopVariation { field: trig_variation_field(133, 1.0), vertical: None };

        // multilinearity: zero variation annihilates, scaling is linear
        let zero = LoopVariation {
            field: Arc::new(|_| vec![0.0, 0.0]),
            vertical: None,
        };
        let v0 = gen_wilson_term_deg2(&pair, &rep, &looped, 1, std::slice::from_ref(&zero), DEFAULT_STEP)
            .unwrap();
        assert!(v0.norm() < 1e-14);
        let v1 = gen_wilson_term_deg2(&pair, &rep, &looped, 1, std::slice::from_ref(&x1), DEFAULT_STEP)
            .unwrap();
        let x1_scaled = LoopVariation {
            field: {
                let f = x1.field.clone();
                Arc::new(move |t: f64| f(t).iter().map(|c| 2.5 * c).collect())
            },
            vertical: None,
        };
        let v1s = gen_wilson_term_deg2(
            &pair,
            &rep,
            &looped,
            1,
            std::slice::from_ref(&x1_scaled),
            DEFAULT_STEP,
        )
        .unwrap();
        assert!((v1s - v1 * C64::new(2.5, 0.0)).norm() < 1e-10);

        // antisymmetry of the n = 2 value
        let v12 = gen_wilson_term_deg2(&pair, &rep, &looped, 2, &[x1, x2], DEFAULT_STEP).unwrap();
        let x1b = LoopVariation { field: trig_variation_field(132, 1.0), vertical: None };
        let x2b = LoopVariation { field: trig_variation_field(133, 1.0), vertical: None };
        let v21 = gen_wilson_term_deg2(&pair, &rep, &looped, 2, &[x2b, x1b], DEFAULT_STEP).unwrap();
        assert!((v12 + v21).norm() < 1e-10, "antisymmetry: {v12} vs {v21}");
    }

    #[test]
    fn boundary_face_table() {
        // abelian, trivial A, closed B -> all faces match the reduction
        let tp = trivial_preset(punctured_plane_atlas(), GroupSpec::U1);
        let b = u1_closed_1form(tp.bundle.clone(), 0.35, 141);
        let pair = BfPair::new(tp.connection.clone(), b).unwrap();
        let rep = Representation::fundamental(GroupSpec::U1);
        let looped = circle_loop(tp.bundle.atlas.clone(), 1.0, 1, 0.0);
        for n in 2..=3 {
            for (alpha, residual) in
                boundary_face_reduction(&pair, &rep, &looped, n, DEFAULT_STEP).unwrap()
            {
                assert!(residual < 1e-6, "n = {n}, face {alpha}: residual {residual:.3e}");
            }
        }

        // non-abelian with a nontrivial connection
        let rp = random_polynomial_preset(GroupSpec::SU2, 142, 2, 0.5);
        let b = random_polynomial_1form(rp.bundle.clone(), 143, 2, 0.4);
        let pair = BfPair::new(rp.connection.clone(), b).unwrap();
        let looped = circle_loop(rp.bundle.atlas.clone(), 1.0, 1, 0.0);
        for (alpha, residual) in
            boundary_face_reduction(&pair, &su2_fund(), &looped, 2, DEFAULT_STEP).unwrap()
        {
            assert!(residual < 1e-6, "face {alpha}: residual {residual:.3e}");
        }

        // B = 0: all residuals vanish
        let zero = BfPair::new(
            rp.connection.clone(),
            AdjointForm::zero(rp.bundle.clone(), 1),
        )
        .unwrap();
        for (_, residual) in
            boundary_face_reduction(&zero, &su2_fund(), &looped, 2, DEFAULT_STEP).unwrap()
        {
            assert!(residual < 1e-14);
        }
    }

    #[test]
    fn covgauge_checks() {
        // (i): sampled equivariance of the pulled-back form
        let rp = random_polynomial_preset(GroupSpec::SU2, 151, 2, 0.6);
        let omega = random_polynomial_1form(rp.bundle.clone(), 152, 2, 0.5);
        let sigma = random_polynomial_gauge(rp.bundle.clone(), 153, 2, 0.5);
        let looped = circle_loop(rp.bundle.atlas.clone(), 1.0, 1, 0.0);
        let res =
            covgauge_equivariance(&rp.connection, &omega, &sigma, &looped, 32, DEFAULT_STEP)
                .unwrap();
        assert!(res < 1e-7, "covgauge (i) residual {res:.3e}");

        // (ii): commuting square at a fixed flat connection, 0-form omega
        let basis = GroupSpec::SU2.algebra_basis();
        let fa = flat_angle_preset(basis[2].scaled(0.5));
        let omega0 = polynomial_0form(fa.bundle.clone(), 154, 0.6);
        let looped = circle_loop(fa.bundle.atlas.clone(), 1.0, 1, 0.0);
        let variations: Vec<LoopVariation> = (0..4)
            .map(|k| LoopVariation { field: trig_variation_field(155 + k, 1.0), vertical: None })
            .collect();
        let res = covgauge_commute(&fa.connection, &omega0, &looped, &variations, 0.55, DEFAULT_STEP)
            .unwrap();
        assert!(res < 1e-4, "covgauge (ii) residual {res:.3e}");
    }

    #[test]
    fn segment_transports_compose() {
        let rp = random_polynomial_preset(GroupSpec::SU2, 161, 3, 0.9);
        let looped = random_trig_loop(rp.bundle.atlas.clone(), 162, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(163);
        let res = segment_transport_consistency(&rp.connection, &looped, &mut rng, 25, DEFAULT_STEP)
            .unwrap();
        assert!(res < 1e-8, "segment composition residual {res:.3e}");
    }

    #[test]
    fn degree_and_order_guards() {
        let tp = trivial_preset(punctured_plane_atlas(), GroupSpec::SU2);
        let b3 = AdjointForm::zero(tp.bundle.clone(), 3);
        assert!(matches!(
            BfPair::new(tp.connection.clone(), b3),
            Err(ChenError::UnsupportedDegree { degree: 3 })
        ));
        let b1 = AdjointForm::zero(tp.bundle.clone(), 1);
        let pair = BfPair::new(tp.connection.clone(), b1).unwrap();
        let looped = circle_loop(tp.bundle.atlas.clone(), 1.0, 1, 0.0);
        assert!(matches!(
            gen_wilson_series(&pair, &su2_fund(), &looped, "x", 9, DEFAULT_STEP),
            Err(ChenError::OrderTooLarge { .. })
        ));
    }
}

#[cfg(test)]
mod more_tests {
    use super::*;
    use crate::lie::GroupSpec;
    use crate::presets::*;
    use crate::transport::DEFAULT_STEP;

    #[test]
    fn bf_shift_leaves_low_orders_invariant() {
        // flat SU(2) background, covariantly closed B, tau a 0-form
        let basis = GroupSpec::SU2.algebra_basis();
        let fa = flat_angle_preset(basis[2].scaled(0.4));
        // B proportional to the same commuting frame and closed: d_A B = 0
        let mut b = AdjointForm::new(fa.bundle.clone(), 1);
        {
            let xi = basis[2].clone();
            b.set_chart(
                0,
                std::sync::Arc::new(move |x: &[f64], args: &[&[f64]]| {
                    let u = args[0];
                    let r2 = x[0] * x[0] + x[1] * x[1];
                    xi.scaled(0.2 * (-x[1] * u[0] + x[0] * u[1]) / r2)
                }),
            );
        }
        let pair = BfPair::new(fa.connection.clone(), b).unwrap();
        let rep = Representation::fundamental(GroupSpec::SU2);
        let tau = polynomial_0form(fa.bundle.clone(), 171, 0.5);
        let looped = circle_loop(fa.bundle.atlas.clone(), 1.0, 1, 0.0);
        let worst = bf_shift_invariance_check(&pair, &rep, &tau, &looped, DEFAULT_STEP).unwrap();
        assert!(worst < 1e-4, "shift derivative {worst:.3e}");
    }

    #[test]
    fn deg2_n1_summand_is_closed() {
        // deg B = 2 on a 2-dimensional base: d_A B vanishes identically,
        // so with flat A the n = 1 summand is a closed 1-form on loop space
        let basis = GroupSpec::SU2.algebra_basis();
        let fa = flat_angle_preset(basis[2].scaled(0.3));
        let b2 = polynomial_2form(fa.bundle.clone(), 181, 0.4);
        let pair = BfPair::new(fa.connection.clone(), b2).unwrap();
        let rep = Representation::fundamental(GroupSpec::SU2);
        let family = two_param_trig_family(fa.bundle.atlas.clone(), 182, 1.0);
        let residual = closedness_deg2_n1(&pair, &rep, &family, DEFAULT_STEP).unwrap();
        assert!(residual < 1e-4, "deg-2 n=1 closedness residual {residual:.3e}");
    }

    // In even base dimensions only the oddly-indexed summands of the series
    // are expected to be closed; a full check needs the n = 3 summand as a
    // form on loop space, which is out of scope. The n = 1 (odd) case is
    // covered by deg2_n1_summand_is_closed above.
    #[test]
    #[ignore = "odd-index subseries beyond n = 1 not evaluated as loop-space forms"]
    fn odd_index_subseries_closedness_stub() {}
}
