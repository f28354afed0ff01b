//! Horizontal lifts, parallel transport and holonomy.
//!
//! The lift solves `g' = -A_U(gamma') g` in the local trivialization with a
//! commutator-free fourth-order Lie-group integrator (two exponentials per
//! step, Gauss nodes), so group membership is preserved to machine
//! precision. Step boundaries are aligned with curve breakpoints; chart
//! switches insert the transition factor `g -> t_{UV}^{-1} g` at the seam.
//!
//! The sign convention is fixed once: horizontality `A(p') = 0` in the
//! trivialization `p(t) = s_U(gamma(t)) g(t)` forces `g' = -A_U(gamma') g`,
//! and transports are read off as `hol = h_q^{-1} g(t)` for
//! `q = s_U(gamma(t)) h_q`. All closed-form oracles in the tests are
//! derived under this convention.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bundle::{
    curvature, BundleError, BundlePoint, GaugeTransformation, LocalConnection, division_map,
};
use crate::geometry::{GeometryError, LoopFamily, SampledCurve};
use crate::lie::{group_mul, group_exp, AlgebraElement, GroupElement, LieError};

pub const DEFAULT_STEP: f64 = 1e-3;
/// Loop-space finite differences: variation amplitude, one Richardson level.
pub const FD_VARIATION: f64 = 1e-4;
/// Admission threshold separating analytically flat presets from noise.
pub const FLATNESS_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("base point is off the curve (distance {dist:.3e})")]
    BasePointOffCurve { dist: f64 },
    #[error("parameter order violated: s = {s} must be < t = {t}")]
    ParameterOrder { s: f64, t: f64 },
    #[error("curve is not a loop (gap {dist:.3e})")]
    NotALoop { dist: f64 },
    #[error("connection is not flat (sampled curvature {max_curvature:.3e})")]
    NotFlat { max_curvature: f64 },
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Lie(#[from] LieError),
}

/// Result of a horizontal lift: the transport value, the sampled lift trace
/// and integrator statistics.
pub struct TransportResult {
    pub value: GroupElement,
    pub trace: Vec<(f64, BundlePoint)>,
    pub steps: usize,
    pub max_membership_residual: f64,
}

// Gauss nodes and combination weights of the two-exponential
// commutator-free fourth-order scheme.
const SQRT3: f64 = 1.732_050_807_568_877_2;
const C1: f64 = 0.5 - SQRT3 / 6.0;
const C2: f64 = 0.5 + SQRT3 / 6.0;
const ALPHA: f64 = 0.25 + SQRT3 / 6.0;
const BETA: f64 = 0.25 - SQRT3 / 6.0;

struct LiftRun {
    end: BundlePoint,
    steps: usize,
    max_drift: f64,
    trace: Vec<(f64, BundlePoint)>,
}

/// Integrate the lift ODE along `curve` over `[t0, t1]`, starting from
/// `start` (which must lie over `curve(t0)`), recording the trace when
/// `record` is set.
fn lift_curve(
    a: &LocalConnection,
    curve: &SampledCurve,
    t0: f64,
    t1: f64,
    start: &BundlePoint,
    h: f64,
    record: bool,
) -> Result<LiftRun, TransportError> {
    let eps = 1e-12;
    let first_seg = curve
        .segments
        .iter()
        .find(|s| s.t1 > t0 + eps || (t0 >= 1.0 - eps && s.t1 >= 1.0 - eps))
        .ok_or(GeometryError::ChartGap { t: t0 })?;

    // Align the start point with the curve in the first segment's chart.
    let p0 = start.to_chart(first_seg.chart)?;
    let (x_start, _) = (first_seg.eval)(t0);
    let dist = curve.atlas.point_distance(first_seg.chart, &x_start, p0.chart, &p0.x)?;
    if dist > 1e-8 {
        return Err(TransportError::BasePointOffCurve { dist });
    }

    let mut chart = first_seg.chart;
    let mut g = p0.fiber.clone();
    let mut steps = 0usize;
    let mut max_drift = 0.0f64;
    let mut trace = Vec::new();
    if record {
        trace.push((t0, BundlePoint::new(a.bundle.clone(), chart, x_start.clone(), g.clone())));
    }

    for seg in &curve.segments {
        let lo = seg.t0.max(t0);
        let hi = seg.t1.min(t1);
        if hi <= lo + eps {
            continue;
        }
        // Chart switch at the seam.
        if seg.chart != chart {
            let (x_here, _) = (seg.eval)(lo);
            let x_in_old = curve.atlas.change_coords(seg.chart, chart, &x_here)?;
            let t_trans = a.bundle.transition(chart, seg.chart, &x_in_old)?;
            g = group_mul(&t_trans.inverse(), &g)?;
            chart = seg.chart;
        }
        let n = ((hi - lo) / h).ceil().max(1.0) as usize;
        let hs = (hi - lo) / n as f64;
        for k in 0..n {
            let tau = lo + k as f64 * hs;
            let m1 = coefficient(a, seg, chart, tau + C1 * hs);
            let m2 = coefficient(a, seg, chart, tau + C2 * hs);
            let xa = m1.scaled(hs * ALPHA).add(&m2.scaled(hs * BETA))?;
            let xb = m1.scaled(hs * BETA).add(&m2.scaled(hs * ALPHA))?;
            let raw = group_exp(&xb).m * group_exp(&xa).m * &g.m;
            let candidate = GroupElement { spec: g.spec, m: raw };
            max_drift = max_drift.max(candidate.membership_residual());
            g = GroupElement::new_projected(g.spec, candidate.m);
            steps += 1;
            if record {
                let (x, _) = (seg.eval)(tau + hs);
                trace.push((tau + hs, BundlePoint::new(a.bundle.clone(), chart, x, g.clone())));
            }
        }
    }

    let t_end_seg = curve
        .segments
        .iter()
        .rev()
        .find(|s| s.t0 < t1 - eps || (t1 <= eps && s.t0 <= eps))
        .ok_or(GeometryError::ChartGap { t: t1 })?;
    let (x_end, _) = (t_end_seg.eval)(t1);
    let end = BundlePoint::new(a.bundle.clone(), chart, x_end, g);
    Ok(LiftRun { end, steps, max_drift, trace })
}

fn coefficient(
    a: &LocalConnection,
    seg: &crate::geometry::Segment,
    chart: usize,
    t: f64,
) -> AlgebraElement {
    let (x, v) = (seg.eval)(t);
    a.eval(chart, &x, &v).scaled(-1.0)
}

/// Unique horizontal lift of `curve` based at `p`, integrated to `t_end`.
pub fn horizontal_lift(
    a: &LocalConnection,
    curve: &SampledCurve,
    p: &BundlePoint,
    t_end: f64,
    step: f64,
) -> Result<TransportResult, TransportError> {
    if !(t_end > 0.0 && t_end <= 1.0) {
        return Err(TransportError::ParameterOrder { s: 0.0, t: t_end });
    }
    let run = lift_curve(a, curve, 0.0, t_end, p, step, true)?;
    // value: hol with q = the chart reference at the endpoint
    let value = run.end.fiber.clone();
    Ok(TransportResult {
        value,
        trace: run.trace,
        steps: run.steps,
        max_membership_residual: run.max_drift,
    })
}

/// Parallel transport `hol^A(gamma; s, t)(p, q)`: the unique group element
/// with `lift_{p, [s,t]}(t) = q · hol`.
pub fn parallel_transport(
    a: &LocalConnection,
    curve: &SampledCurve,
    s: f64,
    t: f64,
    p: &BundlePoint,
    q: &BundlePoint,
    step: f64,
) -> Result<GroupElement, TransportError> {
    if s >= t {
        return Err(TransportError::ParameterOrder { s, t });
    }
    let run = lift_curve(a, curve, s, t, p, step, false)?;
    let q_dist = q.base_distance(&run.end)?;
    if q_dist > 1e-8 {
        return Err(TransportError::BasePointOffCurve { dist: q_dist });
    }
    Ok(division_map(q, &run.end)?)
}

/// Holonomy of a loop based at `p`: `phi_P(p, lift(1))`.
pub fn holonomy(
    a: &LocalConnection,
    looped: &SampledCurve,
    p: &BundlePoint,
    step: f64,
) -> Result<GroupElement, TransportError> {
    if !looped.is_loop(1e-8) {
        let s = looped.start();
        let e = looped.end();
        let dist = looped
            .atlas
            .point_distance(s.chart, &s.x, e.chart, &e.x)
            .unwrap_or(f64::INFINITY);
        return Err(TransportError::NotALoop { dist });
    }
    let run = lift_curve(a, looped, 0.0, 1.0, p, step, false)?;
    Ok(division_map(p, &run.end)?)
}

/// Residuals of the structure-group and gauge-group equivariance laws, for
/// a loop `gamma`, intermediate parameter `t`, points `p` over `gamma(0)`
/// and `q` over `gamma(t)`, and offsets `g`, `h`.
pub struct EquivarianceResiduals {
    /// `hol(gamma; p g) = g^{-1} hol(gamma; p) g`
    pub liehol: f64,
    /// `hol_{A^sigma}(gamma; p) = g_sigma(p)^{-1} hol_A(gamma; p) g_sigma(p)`
    pub gaugehol: f64,
    /// `hol(gamma; t)(p g, q h) = h^{-1} hol(p, q) g`
    pub liepartr: f64,
    /// `hol_{A^sigma}(gamma; t)(p, q) = g_sigma(q)^{-1} hol_A(p, q) g_sigma(p)`
    pub gaugepartr: f64,
    /// same two laws for the translated transport over `[s, t]`
    pub liepartr_translated: f64,
    pub gaugepartr_translated: f64,
}

impl EquivarianceResiduals {
    pub fn sup(&self) -> f64 {
        self.liehol
            .max(self.gaugehol)
            .max(self.liepartr)
            .max(self.gaugepartr)
            .max(self.liepartr_translated)
            .max(self.gaugepartr_translated)
    }
}

#[allow(clippy::too_many_arguments)]
pub fn check_equivariance_laws(
    a: &LocalConnection,
    sigma: &GaugeTransformation,
    looped: &SampledCurve,
    s: f64,
    t: f64,
    p: &BundlePoint,
    q: &BundlePoint,
    g: &GroupElement,
    h: &GroupElement,
    step: f64,
) -> Result<EquivarianceResiduals, TransportError> {
    let a_sigma = crate::bundle::apply_gauge_to_connection(a, sigma);

    // holonomy laws at base p
    let hol_p = holonomy(a, looped, p, step)?;
    let hol_pg = holonomy(a, looped, &p.act(g)?, step)?;
    let conj = group_mul(&group_mul(&g.inverse(), &hol_p)?, g)?;
    let liehol = hol_pg.dist(&conj);

    let hol_sigma = holonomy(&a_sigma, looped, p, step)?;
    let gs_p = sigma.canonical_at(p)?;
    let conj_sigma = group_mul(&group_mul(&gs_p.inverse(), &hol_p)?, &gs_p)?;
    let gaugehol = hol_sigma.dist(&conj_sigma);

    // transport laws over [0, t]
    let base = parallel_transport(a, looped, 0.0, t, p, q, step)?;
    let offset = parallel_transport(a, looped, 0.0, t, &p.act(g)?, &q.act(h)?, step)?;
    let expected = group_mul(&group_mul(&h.inverse(), &base)?, g)?;
    let liepartr = offset.dist(&expected);

    let base_sigma = parallel_transport(&a_sigma, looped, 0.0, t, p, q, step)?;
    let gs_q = sigma.canonical_at(q)?;
    let expected_sigma = group_mul(&group_mul(&gs_q.inverse(), &base)?, &gs_p)?;
    let gaugepartr = base_sigma.dist(&expected_sigma);

    // translated transport over [s, t], base points on the curve
    let ps = reference_point(a, looped, s)?;
    let qt = reference_point(a, looped, t)?;
    let base_st = parallel_transport(a, looped, s, t, &ps, &qt, step)?;
    let offset_st = parallel_transport(a, looped, s, t, &ps.act(g)?, &qt.act(h)?, step)?;
    let expected_st = group_mul(&group_mul(&h.inverse(), &base_st)?, g)?;
    let liepartr_translated = offset_st.dist(&expected_st);

    let sigma_st = parallel_transport(&a_sigma, looped, s, t, &ps, &qt, step)?;
    let gs_ps = sigma.canonical_at(&ps)?;
    let gs_qt = sigma.canonical_at(&qt)?;
    let expected_sigma_st = group_mul(&group_mul(&gs_qt.inverse(), &base_st)?, &gs_ps)?;
    let gaugepartr_translated = sigma_st.dist(&expected_sigma_st);

    Ok(EquivarianceResiduals {
        liehol,
        gaugehol,
        liepartr,
        gaugepartr,
        liepartr_translated,
        gaugepartr_translated,
    })
}

/// Chart reference point of the bundle over `curve(t)`.
pub fn reference_point(
    a: &LocalConnection,
    curve: &SampledCurve,
    t: f64,
) -> Result<BundlePoint, TransportError> {
    let cp = curve.point_at(t);
    Ok(BundlePoint::reference(a.bundle.clone(), cp.chart, cp.x))
}

/// Residuals of the composition and inversion laws:
/// `hol(gamma2 o gamma1; p1, p3) = hol(gamma2; p2, p3) hol(gamma1; p1, p2)`
/// and `hol(gamma^{-1}; q, p) = hol(gamma; p, q)^{-1}`.
pub fn composition_residuals(
    a: &LocalConnection,
    gamma1: &SampledCurve,
    gamma2: &SampledCurve,
    p1: &BundlePoint,
    p2: &BundlePoint,
    p3: &BundlePoint,
    step: f64,
) -> Result<(f64, f64), TransportError> {
    let composite = crate::geometry::concat(gamma1, gamma2)?;
    let lhs = parallel_transport(a, &composite, 0.0, 1.0, p1, p3, step)?;
    let h1 = parallel_transport(a, gamma1, 0.0, 1.0, p1, p2, step)?;
    let h2 = parallel_transport(a, gamma2, 0.0, 1.0, p2, p3, step)?;
    let rhs = group_mul(&h2, &h1)?;
    let comp = lhs.dist(&rhs);

    let reversed = crate::geometry::reverse(gamma1);
    let inv = parallel_transport(a, &reversed, 0.0, 1.0, p2, p1, step)?;
    let direct = parallel_transport(a, gamma1, 0.0, 1.0, p1, p2, step)?;
    let invr = inv.dist(&direct.inverse());
    Ok((comp, invr))
}

/// Boundary-restriction checks: transport from `t = 0+` is the identity
/// gauge transformation; transport over the full interval with `q = p`
/// equals the holonomy.
pub struct BoundaryReport {
    pub t0_residual: f64,
    pub holonomy_residual: f64,
}

pub fn boundary_restriction_check(
    a: &LocalConnection,
    loops: &[SampledCurve],
    step: f64,
) -> Result<BoundaryReport, TransportError> {
    let mut t0_worst = 0.0f64;
    let mut hol_worst = 0.0f64;
    for looped in loops {
        let p = reference_point(a, looped, 0.0)?;
        let near_zero = parallel_transport(a, looped, 0.0, 1e-9, &p, &p, step)?;
        t0_worst = t0_worst.max(near_zero.dist(&GroupElement::identity(a.bundle.group)));

        let full = parallel_transport(a, looped, 0.0, 1.0, &p, &p, step)?;
        let hol = holonomy(a, looped, &p, step)?;
        hol_worst = hol_worst.max(full.dist(&hol));
    }
    Ok(BoundaryReport { t0_residual: t0_worst, holonomy_residual: hol_worst })
}

/// Max sampled curvature norm along the slices of a family.
pub fn max_curvature_on_family(
    a: &LocalConnection,
    family: &LoopFamily,
    samples: usize,
) -> f64 {
    let mut worst = 0.0f64;
    let dirs = [[1.0, 0.0], [0.0, 1.0]];
    for k in 0..=samples {
        let s = k as f64 / samples as f64;
        let c = family.slice(s);
        for j in 0..=8 {
            let t = j as f64 / 8.0;
            let cp = c.point_at(t);
            if cp.x.len() < 2 {
                continue;
            }
            let f = curvature(a, cp.chart, &cp.x, &dirs[0], &dirs[1]);
            worst = worst.max(f.norm());
        }
    }
    worst
}

/// Holonomy deviation across a homotopy family of loops for a flat
/// connection. The base point follows the A-horizontal lift of the
/// basepoint curve `s -> gamma_s(0)` when `moving_basepoint` is set;
/// otherwise the degenerate variant keeps `p` fixed (valid only when the
/// basepoints coincide).
pub fn flat_homotopy_invariance(
    a: &LocalConnection,
    family: &LoopFamily,
    moving_basepoint: bool,
    step: f64,
) -> Result<f64, TransportError> {
    let max_f = max_curvature_on_family(a, family, 16);
    if max_f > FLATNESS_TOL {
        return Err(TransportError::NotFlat { max_curvature: max_f });
    }
    family.validate(1e-8)?;

    let base = family.slice(0.0);
    let p0 = reference_point(a, &base, 0.0)?;
    let hol0 = holonomy(a, &base, &p0, step)?;

    // A-horizontal lift along the basepoint curve c(s) = gamma_s(0).
    let atlas = base.atlas.clone();
    let fam = family.clone();
    let basepoint_curve = SampledCurve::single(atlas, p0.chart, move |s: f64| {
        let x = fam.slice(s).point_at(0.0).x;
        let ds = 1e-6;
        let sp = (s + ds).min(1.0);
        let sm = (s - ds).max(0.0);
        let xp = fam.slice(sp).point_at(0.0).x;
        let xm = fam.slice(sm).point_at(0.0).x;
        let v: Vec<f64> =
            xp.iter().zip(&xm).map(|(p, m)| (p - m) / (sp - sm)).collect();
        (x, v)
    });

    let mut worst = 0.0f64;
    let n = family.grid_s;
    for k in 1..=n {
        let s = k as f64 / n as f64;
        let slice = family.slice(s);
        let p_s = if moving_basepoint {
            let run = lift_curve(a, &basepoint_curve, 0.0, s, &p0, step, false)?;
            run.end
        } else {
            p0.clone()
        };
        let hol_s = holonomy(a, &slice, &p_s, step)?;
        worst = worst.max(hol_s.dist(&hol0));
    }
    Ok(worst)
}

/// A variation of a loop: a vector field along it (in the chart coordinates
/// the curve uses at each parameter) plus an optional vertical direction at
/// the base point.
pub struct LoopVariation {
    pub field: Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
    pub vertical: Option<AlgebraElement>,
}

/// Curve deformed along a variation field: coordinates shifted by
/// `eps * X(t)`, velocities by the matching time derivative of the field.
pub fn deformed_curve(
    curve: &SampledCurve,
    field: &Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
    eps: f64,
) -> SampledCurve {
    let mut segments = Vec::with_capacity(curve.segments.len());
    for seg in &curve.segments {
        let eval = seg.eval.clone();
        let field = field.clone();
        segments.push(crate::geometry::Segment {
            t0: seg.t0,
            t1: seg.t1,
            chart: seg.chart,
            eval: Arc::new(move |t: f64| {
                let (x, v) = eval(t);
                let dx = field(t);
                let dh = 1e-6;
                let dxp = field(t + dh);
                let dxm = field(t - dh);
                let x_new: Vec<f64> = x.iter().zip(&dx).map(|(xi, di)| xi + eps * di).collect();
                let v_new: Vec<f64> = v
                    .iter()
                    .zip(dxp.iter().zip(&dxm))
                    .map(|(vi, (p, m))| vi + eps * (p - m) / (2.0 * dh))
                    .collect();
                (x_new, v_new)
            }),
        });
    }
    SampledCurve {
        atlas: curve.atlas.clone(),
        segments,
        samples_per_segment: curve.samples_per_segment,
    }
}

/// Central difference with one Richardson level of `f(eps)` at 0.
fn fd_richardson(
    mut f: impl FnMut(f64) -> Result<crate::linalg::CMat, TransportError>,
    eps: f64,
) -> Result<crate::linalg::CMat, TransportError> {
    let two = |e: f64, f: &mut dyn FnMut(f64) -> Result<crate::linalg::CMat, TransportError>| {
        let plus = f(e)?;
        let minus = f(-e)?;
        Ok::<_, TransportError>((plus - minus) * crate::linalg::C64::new(1.0 / (2.0 * e), 0.0))
    };
    let d1 = two(eps, &mut f)?;
    let d2 = two(eps / 2.0, &mut f)?;
    Ok(d2 * crate::linalg::C64::new(4.0 / 3.0, 0.0) - d1 * crate::linalg::C64::new(1.0 / 3.0, 0.0))
}

/// Residual of the horizontality equation for the holonomy:
/// `D_X hol + A_p(X_p) hol - hol A_p(X_p)`, right-translated back into the
/// Lie algebra. Vanishes along any variation when `A` is flat.
pub fn horizontality_residual(
    a: &LocalConnection,
    looped: &SampledCurve,
    variation: &LoopVariation,
    step: f64,
) -> Result<AlgebraElement, TransportError> {
    let spec = a.bundle.group;
    let p0 = reference_point(a, looped, 0.0)?;
    let hol0 = holonomy(a, looped, &p0, step)?;

    let field = variation.field.clone();
    let vertical = variation.vertical.clone();
    let d_hol = fd_richardson(
        |eps| {
            let curve_eps = deformed_curve(looped, &field, eps);
            let mut p_eps = reference_point(a, &curve_eps, 0.0)?;
            if let Some(xi) = &vertical {
                p_eps = p_eps.act(&group_exp(&xi.scaled(eps)))?;
            }
            Ok(holonomy(a, &curve_eps, &p_eps, step)?.m)
        },
        FD_VARIATION,
    )?;

    // A_p(X_p): base-point motion with fixed (reference) fiber coordinate,
    // plus the vertical direction.
    let start = looped.point_at(0.0);
    let x_dir = (variation.field)(0.0);
    let mut a_p = a.eval(start.chart, &start.x, &x_dir);
    if let Some(xi) = &variation.vertical {
        a_p = a_p.add(xi)?;
    }

    let residual_matrix = d_hol + &a_p.m * &hol0.m - &hol0.m * &a_p.m;
    let in_algebra = residual_matrix * hol0.inverse().m;
    Ok(AlgebraElement { spec, m: in_algebra })
}

/// Residual of the horizontality equation for the parallel transport over
/// `[0, t]`: `D_X hol + (ev^*A)(X) hol - hol (ev_0^*A)(X)`.
pub fn flat_transport_intertwine(
    a: &LocalConnection,
    curve: &SampledCurve,
    t: f64,
    variations: &[LoopVariation],
    step: f64,
) -> Result<f64, TransportError> {
    let fam = LoopFamily::new({
        let c = curve.clone();
        move |_| c.clone()
    })
    .with_grid(1, 16);
    let max_f = max_curvature_on_family(a, &fam, 1);
    if max_f > FLATNESS_TOL {
        return Err(TransportError::NotFlat { max_curvature: max_f });
    }

    let mut worst = 0.0f64;
    for variation in variations {
        let field = variation.field.clone();
        let p0 = reference_point(a, curve, 0.0)?;
        let q0 = reference_point(a, curve, t)?;
        let hol = parallel_transport(a, curve, 0.0, t, &p0, &q0, step)?;

        let d_hol = fd_richardson(
            |eps| {
                let curve_eps = deformed_curve(curve, &field, eps);
                let p_eps = reference_point(a, &curve_eps, 0.0)?;
                let q_eps = reference_point(a, &curve_eps, t)?;
                Ok(parallel_transport(a, &curve_eps, 0.0, t, &p_eps, &q_eps, step)?.m)
            },
            FD_VARIATION,
        )?;

        let start = curve.point_at(0.0);
        let at_t = curve.point_at(t);
        let a_p = a.eval(start.chart, &start.x, &(variation.field)(0.0));
        let a_q = a.eval(at_t.chart, &at_t.x, &(variation.field)(t));
        let residual = d_hol + &a_q.m * &hol.m - &hol.m * &a_p.m;
        worst = worst.max(crate::linalg::frob_norm(&residual));
    }
    Ok(worst)
}

/// Sampled equivariance of the map `A -> (parallel transport as a
/// generalized gauge transformation)` under the gauge-group action: the
/// residual of `Theta(A^sigma) = Phi(sigma) · Theta(A)` at random
/// `(loop, t, fiber offsets)`, which is the translated gauge law
/// pointwise. Includes the `t = 1, q = p` holonomy specialization.
pub struct GaugeEquivarianceReport {
    pub samples: usize,
    pub max_residual: f64,
}

pub fn equivariant_transport_report(
    a: &LocalConnection,
    sigma: &GaugeTransformation,
    loops: &[SampledCurve],
    rng: &mut ChaCha8Rng,
    samples_per_loop: usize,
    step: f64,
) -> Result<GaugeEquivarianceReport, TransportError> {
    let a_sigma = crate::bundle::apply_gauge_to_connection(a, sigma);
    let mut worst = 0.0f64;
    let mut count = 0usize;
    for looped in loops {
        for _ in 0..samples_per_loop {
            let t = rng.gen_range(0.3..1.0);
            let g = GroupElement::random(a.bundle.group, rng, 1.0);
            let h = GroupElement::random(a.bundle.group, rng, 1.0);
            let p = reference_point(a, looped, 0.0)?.act(&g)?;
            let q = reference_point(a, looped, t)?.act(&h)?;
            let lhs = parallel_transport(&a_sigma, looped, 0.0, t, &p, &q, step)?;
            let base = parallel_transport(a, looped, 0.0, t, &p, &q, step)?;
            let gs_p = sigma.canonical_at(&p)?;
            let gs_q = sigma.canonical_at(&q)?;
            let rhs = group_mul(&group_mul(&gs_q.inverse(), &base)?, &gs_p)?;
            worst = worst.max(lhs.dist(&rhs));
            count += 1;

            // holonomy specialization (t = 1, q = p)
            let hol_lhs = holonomy(&a_sigma, looped, &p, step)?;
            let hol_base = holonomy(a, looped, &p, step)?;
            let hol_rhs = group_mul(&group_mul(&gs_p.inverse(), &hol_base)?, &gs_p)?;
            worst = worst.max(hol_lhs.dist(&hol_rhs));
            count += 1;
        }
    }
    Ok(GaugeEquivarianceReport { samples: count, max_residual: worst })
}

/// Holonomies of a batch of loops at their chart reference points,
/// evaluated in parallel; results come back in input order.
pub fn batch_holonomy(
    a: &LocalConnection,
    loops: &[SampledCurve],
    step: f64,
) -> Result<Vec<GroupElement>, TransportError> {
    use rayon::prelude::*;
    loops
        .par_iter()
        .map(|looped| {
            let p = reference_point(a, looped, 0.0)?;
            holonomy(a, looped, &p, step)
        })
        .collect()
}

/// Parallel transports over `[0, t]` for a batch of `(loop, t)` pairs at
/// chart reference points, in parallel, results in input order.
pub fn batch_transport(
    a: &LocalConnection,
    cases: &[(SampledCurve, f64)],
    step: f64,
) -> Result<Vec<GroupElement>, TransportError> {
    use rayon::prelude::*;
    cases
        .par_iter()
        .map(|(curve, t)| {
            let p = reference_point(a, curve, 0.0)?;
            let q = reference_point(a, curve, *t)?;
            parallel_transport(a, curve, 0.0, *t, &p, &q, step)
        })
        .collect()
}

/// Reference lift of a whole loop, cached on the integrator grid so the
/// transport `g(t) = hol^A(gamma; 0, t)` at arbitrary `t` costs one short
/// integration from the nearest grid point below.
pub struct TransportCache {
    a: LocalConnection,
    curve: SampledCurve,
    trace: Vec<(f64, BundlePoint)>,
    step: f64,
    hol: GroupElement,
}

impl TransportCache {
    pub fn new(
        a: &LocalConnection,
        curve: &SampledCurve,
        step: f64,
    ) -> Result<TransportCache, TransportError> {
        let p = reference_point(a, curve, 0.0)?;
        let run = lift_curve(a, curve, 0.0, 1.0, &p, step, true)?;
        let hol = division_map(&p, &run.end)?;
        Ok(TransportCache { a: a.clone(), curve: curve.clone(), trace: run.trace, step, hol })
    }

    /// Holonomy of the cached loop at the chart reference point.
    pub fn holonomy(&self) -> &GroupElement {
        &self.hol
    }

    /// Lift point over `curve(t)`: its fiber is the transport
    /// `hol^A(gamma; 0, t)` read at the chart reference.
    pub fn transport_to(&self, t: f64) -> Result<BundlePoint, TransportError> {
        let idx = match self
            .trace
            .binary_search_by(|(ti, _)| ti.partial_cmp(&t).unwrap())
        {
            Ok(i) => return Ok(self.trace[i].1.clone()),
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let (t0, ref p0) = self.trace[idx];
        let run = lift_curve(&self.a, &self.curve, t0, t, p0, self.step, false)?;
        Ok(run.end)
    }
}

/// Transport refinement diagnostics: residuals of the step-`h` and
/// step-`h/2` values against a reference at `h/16`.
pub fn refinement_residuals(
    a: &LocalConnection,
    curve: &SampledCurve,
    t: f64,
    p: &BundlePoint,
    q: &BundlePoint,
    h: f64,
) -> Result<(f64, f64), TransportError> {
    let coarse = parallel_transport(a, curve, 0.0, t, p, q, h)?;
    let halved = parallel_transport(a, curve, 0.0, t, p, q, h / 2.0)?;
    let reference = parallel_transport(a, curve, 0.0, t, p, q, h / 16.0)?;
    Ok((coarse.dist(&reference), halved.dist(&reference)))
}
