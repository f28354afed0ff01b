//! Principal G-bundles via transition cocycles, local connection forms,
//! gauge transformations, curvature, the division map and generalized gauge
//! transformations with their star product.
//!
//! Bundles over the same base share the atlas and its chart decomposition,
//! so the fibred product of two bundles reduces to pairs of fiber
//! coordinates over one base point. A bundle point `(U, x, g)` stands for
//! `s_U(x) · g` with `s_U` the chart's reference section; chart change maps
//! it to `(V, x', t_{UV}(x)^{-1} g)`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{Atlas, GeometryError};
use crate::lie::{
    adjoint, bracket, generalized_conjugation, group_log, group_mul, AlgebraElement, GroupElement,
    GroupSpec, LieError,
};
use crate::linalg::{self, C64};

pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("points lie over different base points (distance {dist:.3e})")]
    BaseMismatch { dist: f64 },
    #[error("points belong to different bundles: {left} vs {right}")]
    BundleMismatch { left: String, right: String },
    #[error("morphism is not equivariant (sampled residual {residual:.3e})")]
    NotEquivariant { residual: f64 },
    #[error("star product undefined: target of the first factor is {target}, source of the second is {src}")]
    CompositionMismatch { target: String, src: String },
    #[error("small holonomy loop left chart {chart}")]
    LoopLeftChart { chart: usize },
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

type TransitionFn = Arc<dyn Fn(&[f64]) -> GroupElement + Send + Sync>;
type PointSampler = Arc<dyn Fn(&mut ChaCha8Rng) -> (usize, Vec<f64>) + Send + Sync>;

/// Principal G-bundle described by its transition cocycle on a fixed atlas.
/// Transition `t_{UV}` is evaluated in chart-U coordinates; identity and
/// inverse transitions are implied.
#[derive(Clone)]
pub struct PrincipalBundle {
    pub id: String,
    pub atlas: Arc<Atlas>,
    pub group: GroupSpec,
    transitions: BTreeMap<(usize, usize), TransitionFn>,
    /// Draws random base points for sampled invariant checks.
    pub sampler: PointSampler,
}

impl PrincipalBundle {
    pub fn new(
        id: &str,
        atlas: Arc<Atlas>,
        group: GroupSpec,
        sampler: PointSampler,
    ) -> PrincipalBundle {
        PrincipalBundle {
            id: id.to_string(),
            atlas,
            group,
            transitions: BTreeMap::new(),
            sampler,
        }
    }

    /// Register `t_{UV}` (given in chart-U coordinates); the inverse
    /// transition is implied.
    pub fn add_transition(&mut self, u: usize, v: usize, t: TransitionFn) {
        self.transitions.insert((u, v), t);
    }

    pub fn transition(&self, u: usize, v: usize, x_in_u: &[f64]) -> Result<GroupElement, BundleError> {
        if u == v {
            return Ok(GroupElement::identity(self.group));
        }
        if let Some(t) = self.transitions.get(&(u, v)) {
            return Ok(t(x_in_u));
        }
        if let Some(t) = self.transitions.get(&(v, u)) {
            let x_in_v = self.atlas.change_coords(u, v, x_in_u)?;
            return Ok(t(&x_in_v).inverse());
        }
        // No registered transition: the cocycle is trivial on this overlap.
        Ok(GroupElement::identity(self.group))
    }

    /// Max cocycle residual `t_UV t_VU - e` and `t_UU - e` over sampled
    /// points; with three or more charts also `t_UV t_VW - t_UW`.
    pub fn cocycle_residual(&self, rng: &mut ChaCha8Rng, samples: usize) -> Result<f64, BundleError> {
        let e = GroupElement::identity(self.group);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let (chart, x) = (self.sampler)(rng);
            worst = worst.max(self.transition(chart, chart, &x)?.dist(&e));
            for v in 0..self.atlas.charts.len() {
                if v == chart {
                    continue;
                }
                let x_in_v = match self.atlas.change_coords(chart, v, &x) {
                    Ok(y) => y,
                    Err(_) => continue,
                };
                if self.atlas.margin(v, &x_in_v) <= 0.0 {
                    continue;
                }
                let tuv = self.transition(chart, v, &x)?;
                let tvu = self.transition(v, chart, &x_in_v)?;
                worst = worst.max(group_mul(&tuv, &tvu)?.dist(&e));
                for w in 0..self.atlas.charts.len() {
                    if w == chart || w == v {
                        continue;
                    }
                    let x_in_w = match self.atlas.change_coords(chart, w, &x) {
                        Ok(y) => y,
                        Err(_) => continue,
                    };
                    if self.atlas.margin(w, &x_in_w) <= 0.0 {
                        continue;
                    }
                    let tvw = self.transition(v, w, &x_in_v)?;
                    let tuw = self.transition(chart, w, &x)?;
                    worst = worst.max(group_mul(&tuv, &tvw)?.dist(&tuw));
                }
            }
        }
        Ok(worst)
    }

    pub fn same_bundle(&self, other: &PrincipalBundle) -> bool {
        self.id == other.id
    }
}

/// Point of the total space in local data: `p = s_U(x) · fiber`.
#[derive(Clone)]
pub struct BundlePoint {
    pub bundle: Arc<PrincipalBundle>,
    pub chart: usize,
    pub x: Vec<f64>,
    pub fiber: GroupElement,
}

impl BundlePoint {
    pub fn new(bundle: Arc<PrincipalBundle>, chart: usize, x: Vec<f64>, fiber: GroupElement) -> BundlePoint {
        BundlePoint { bundle, chart, x, fiber }
    }

    pub fn reference(bundle: Arc<PrincipalBundle>, chart: usize, x: Vec<f64>) -> BundlePoint {
        let fiber = GroupElement::identity(bundle.group);
        BundlePoint { bundle, chart, x, fiber }
    }

    /// Right action `p · g`.
    pub fn act(&self, g: &GroupElement) -> Result<BundlePoint, BundleError> {
        Ok(BundlePoint {
            bundle: self.bundle.clone(),
            chart: self.chart,
            x: self.x.clone(),
            fiber: group_mul(&self.fiber, g)?,
        })
    }

    /// Chart change `(U, x, g) -> (V, x', t_{UV}(x)^{-1} g)`.
    pub fn to_chart(&self, v: usize) -> Result<BundlePoint, BundleError> {
        if v == self.chart {
            return Ok(self.clone());
        }
        let x_v = self.bundle.atlas.change_coords(self.chart, v, &self.x)?;
        let t = self.bundle.transition(self.chart, v, &self.x)?;
        Ok(BundlePoint {
            bundle: self.bundle.clone(),
            chart: v,
            x: x_v,
            fiber: group_mul(&t.inverse(), &self.fiber)?,
        })
    }

    pub fn base_distance(&self, other: &BundlePoint) -> Result<f64, BundleError> {
        Ok(self
            .bundle
            .atlas
            .point_distance(self.chart, &self.x, other.chart, &other.x)?)
    }
}

/// Division map `phi_P(p, q)`: the unique `g` with `q = p · g`; in a common
/// chart it is `g^{-1} h`.
pub fn division_map(p: &BundlePoint, q: &BundlePoint) -> Result<GroupElement, BundleError> {
    if !p.bundle.same_bundle(&q.bundle) {
        return Err(BundleError::BundleMismatch {
            left: p.bundle.id.clone(),
            right: q.bundle.id.clone(),
        });
    }
    let q_aligned = q.to_chart(p.chart)?;
    let dist = p.base_distance(&q_aligned)?;
    if dist > 1e-8 {
        return Err(BundleError::BaseMismatch { dist });
    }
    group_mul(&p.fiber.inverse(), &q_aligned.fiber).map_err(Into::into)
}

type ConnFn = Arc<dyn Fn(&[f64], &[f64]) -> AlgebraElement + Send + Sync>;
type ConnDerivFn = Arc<dyn Fn(&[f64], &[f64], &[f64]) -> AlgebraElement + Send + Sync>;

/// Local connection form: per chart a linear map from tangent coordinates
/// to the Lie algebra, with an optional analytic exterior derivative.
#[derive(Clone)]
pub struct LocalConnection {
    pub bundle: Arc<PrincipalBundle>,
    charts: BTreeMap<usize, ConnFn>,
    analytic_d: BTreeMap<usize, ConnDerivFn>,
}

impl LocalConnection {
    pub fn new(bundle: Arc<PrincipalBundle>) -> LocalConnection {
        LocalConnection { bundle, charts: BTreeMap::new(), analytic_d: BTreeMap::new() }
    }

    pub fn zero(bundle: Arc<PrincipalBundle>) -> LocalConnection {
        let group = bundle.group;
        let n_charts = bundle.atlas.charts.len();
        let mut conn = LocalConnection::new(bundle);
        for c in 0..n_charts {
            conn.set_chart(c, Arc::new(move |_: &[f64], _: &[f64]| AlgebraElement::zero(group)));
            conn.set_analytic_d(
                c,
                Arc::new(move |_: &[f64], _: &[f64], _: &[f64]| AlgebraElement::zero(group)),
            );
        }
        conn
    }

    pub fn set_chart(&mut self, chart: usize, a: ConnFn) {
        self.charts.insert(chart, a);
    }

    pub fn set_analytic_d(&mut self, chart: usize, d: ConnDerivFn) {
        self.analytic_d.insert(chart, d);
    }

    /// `A_U(x)(u)`.
    pub fn eval(&self, chart: usize, x: &[f64], u: &[f64]) -> AlgebraElement {
        match self.charts.get(&chart) {
            Some(a) => a(x, u),
            None => AlgebraElement::zero(self.bundle.group),
        }
    }

    /// `dA_U(x)(u, v)`; analytic when registered, central finite differences
    /// with step [`FD_STEP`] otherwise.
    pub fn d_eval(&self, chart: usize, x: &[f64], u: &[f64], v: &[f64]) -> AlgebraElement {
        if let Some(d) = self.analytic_d.get(&chart) {
            return d(x, u, v);
        }
        let h = FD_STEP;
        let shift = |dir: &[f64], sign: f64| -> Vec<f64> {
            x.iter().zip(dir).map(|(xi, di)| xi + sign * h * di).collect()
        };
        // dA(u, v) = D_u A(.)(v) - D_v A(.)(u)
        let du = self
            .eval(chart, &shift(u, 1.0), v)
            .sub(&self.eval(chart, &shift(u, -1.0), v))
            .expect("same spec")
            .scaled(1.0 / (2.0 * h));
        let dv = self
            .eval(chart, &shift(v, 1.0), u)
            .sub(&self.eval(chart, &shift(v, -1.0), u))
            .expect("same spec")
            .scaled(1.0 / (2.0 * h));
        du.sub(&dv).expect("same spec")
    }

    /// Pointwise sum `A + B` where `B` is an adjoint 1-form given through
    /// the same interface (used for the BF Dyson oracle).
    pub fn plus(&self, other: &LocalConnection) -> LocalConnection {
        let mut out = LocalConnection::new(self.bundle.clone());
        let keys: Vec<usize> =
            self.charts.keys().chain(other.charts.keys()).copied().collect();
        for chart in keys {
            let a = self.clone();
            let b = other.clone();
            out.set_chart(
                chart,
                Arc::new(move |x: &[f64], u: &[f64]| {
                    a.eval(chart, x, u).add(&b.eval(chart, x, u)).expect("same spec")
                }),
            );
            if self.analytic_d.contains_key(&chart) && other.analytic_d.contains_key(&chart) {
                let a = self.clone();
                let b = other.clone();
                out.set_analytic_d(
                    chart,
                    Arc::new(move |x: &[f64], u: &[f64], v: &[f64]| {
                        a.d_eval(chart, x, u, v).add(&b.d_eval(chart, x, u, v)).expect("same spec")
                    }),
                );
            }
        }
        out
    }

    /// Overlap compatibility residual
    /// `A_V - Ad(t_UV^{-1}) A_U - t_UV^{-1} d t_UV` over sampled points.
    pub fn overlap_residual(&self, rng: &mut ChaCha8Rng, samples: usize) -> Result<f64, BundleError> {
        let atlas = &self.bundle.atlas;
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let (u_chart, x) = (self.bundle.sampler)(rng);
            for v_chart in 0..atlas.charts.len() {
                if v_chart == u_chart {
                    continue;
                }
                let x_v = match atlas.change_coords(u_chart, v_chart, &x) {
                    Ok(y) => y,
                    Err(_) => continue,
                };
                if atlas.margin(v_chart, &x_v) <= 0.0 {
                    continue;
                }
                let t = self.bundle.transition(u_chart, v_chart, &x)?;
                for dir in 0..atlas.dim {
                    let mut u_vec = vec![0.0; atlas.dim];
                    u_vec[dir] = 1.0;
                    let u_in_v = atlas.change_velocity(u_chart, v_chart, &x, &u_vec)?;
                    let lhs = self.eval(v_chart, &x_v, &u_in_v);
                    let a_u = self.eval(u_chart, &x, &u_vec);
                    let ad = adjoint(&t.inverse(), &a_u)?;
                    let pure = transition_pure_gauge(&self.bundle, u_chart, v_chart, &x, &u_vec)?;
                    let rhs = ad.add(&pure)?;
                    worst = worst.max(lhs.dist(&rhs));
                }
            }
        }
        Ok(worst)
    }
}

/// `t_{UV}^{-1} D_u t_{UV}` at `x` by central differences.
fn transition_pure_gauge(
    bundle: &Arc<PrincipalBundle>,
    u_chart: usize,
    v_chart: usize,
    x: &[f64],
    u: &[f64],
) -> Result<AlgebraElement, BundleError> {
    let h = FD_STEP;
    let xp: Vec<f64> = x.iter().zip(u).map(|(xi, ui)| xi + h * ui).collect();
    let xm: Vec<f64> = x.iter().zip(u).map(|(xi, ui)| xi - h * ui).collect();
    let tp = bundle.transition(u_chart, v_chart, &xp)?;
    let tm = bundle.transition(u_chart, v_chart, &xm)?;
    let t = bundle.transition(u_chart, v_chart, x)?;
    let dt = (&tp.m - &tm.m) * C64::new(1.0 / (2.0 * h), 0.0);
    let m = t.inverse().m * dt;
    Ok(AlgebraElement::new_projected(bundle.group, m))
}

type GaugeFn = Arc<dyn Fn(&[f64]) -> GroupElement + Send + Sync>;
type GaugeDerivFn = Arc<dyn Fn(&[f64], &[f64]) -> linalg::CMat + Send + Sync>;

/// Gauge transformation in local data: `sigma(s_U(x)) = s_U(x) · sigma_U(x)`.
#[derive(Clone)]
pub struct GaugeTransformation {
    pub bundle: Arc<PrincipalBundle>,
    charts: BTreeMap<usize, GaugeFn>,
    analytic_d: BTreeMap<usize, GaugeDerivFn>,
}

impl GaugeTransformation {
    pub fn new(bundle: Arc<PrincipalBundle>) -> GaugeTransformation {
        GaugeTransformation { bundle, charts: BTreeMap::new(), analytic_d: BTreeMap::new() }
    }

    pub fn identity(bundle: Arc<PrincipalBundle>) -> GaugeTransformation {
        let group = bundle.group;
        let n_charts = bundle.atlas.charts.len();
        let mut g = GaugeTransformation::new(bundle);
        for c in 0..n_charts {
            g.set_chart(c, Arc::new(move |_: &[f64]| GroupElement::identity(group)));
            let n = group.matrix_dim();
            g.set_analytic_d(c, Arc::new(move |_: &[f64], _: &[f64]| linalg::CMat::zeros(n, n)));
        }
        g
    }

    pub fn set_chart(&mut self, chart: usize, s: GaugeFn) {
        self.charts.insert(chart, s);
    }

    pub fn set_analytic_d(&mut self, chart: usize, d: GaugeDerivFn) {
        self.analytic_d.insert(chart, d);
    }

    pub fn eval(&self, chart: usize, x: &[f64]) -> GroupElement {
        match self.charts.get(&chart) {
            Some(s) => s(x),
            None => GroupElement::identity(self.bundle.group),
        }
    }

    /// Directional derivative `D_u sigma_U` as a raw matrix.
    pub fn d_eval(&self, chart: usize, x: &[f64], u: &[f64]) -> linalg::CMat {
        if let Some(d) = self.analytic_d.get(&chart) {
            return d(x, u);
        }
        let h = FD_STEP;
        let xp: Vec<f64> = x.iter().zip(u).map(|(xi, ui)| xi + h * ui).collect();
        let xm: Vec<f64> = x.iter().zip(u).map(|(xi, ui)| xi - h * ui).collect();
        (self.eval(chart, &xp).m - self.eval(chart, &xm).m) * C64::new(1.0 / (2.0 * h), 0.0)
    }

    /// The canonical `G`-valued function `g_sigma(p)`: for `p = s_U(x) h`
    /// it is `h^{-1} sigma_U(x) h`.
    pub fn canonical_at(&self, p: &BundlePoint) -> Result<GroupElement, BundleError> {
        let s = self.eval(p.chart, &p.x);
        let h = &p.fiber;
        group_mul(&group_mul(&h.inverse(), &s)?, h).map_err(Into::into)
    }

    /// Apply to a bundle point: `sigma(s_U(x) h) = s_U(x) sigma_U(x) h`.
    pub fn apply(&self, p: &BundlePoint) -> Result<BundlePoint, BundleError> {
        let s = self.eval(p.chart, &p.x);
        Ok(BundlePoint {
            bundle: p.bundle.clone(),
            chart: p.chart,
            x: p.x.clone(),
            fiber: group_mul(&s, &p.fiber)?,
        })
    }

    /// Overlap equivariance residual `sigma_V - t^{-1} sigma_U t`.
    pub fn overlap_residual(&self, rng: &mut ChaCha8Rng, samples: usize) -> Result<f64, BundleError> {
        let atlas = &self.bundle.atlas;
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let (u_chart, x) = (self.bundle.sampler)(rng);
            for v_chart in 0..atlas.charts.len() {
                if v_chart == u_chart {
                    continue;
                }
                let x_v = match atlas.change_coords(u_chart, v_chart, &x) {
                    Ok(y) => y,
                    Err(_) => continue,
                };
                if atlas.margin(v_chart, &x_v) <= 0.0 {
                    continue;
                }
                let t = self.bundle.transition(u_chart, v_chart, &x)?;
                let lhs = self.eval(v_chart, &x_v);
                let rhs = group_mul(&group_mul(&t.inverse(), &self.eval(u_chart, &x))?, &t)?;
                worst = worst.max(lhs.dist(&rhs));
            }
        }
        Ok(worst)
    }
}

/// `A^sigma = Ad(sigma^{-1}) A + sigma^{-1} d sigma` in local data.
pub fn apply_gauge_to_connection(a: &LocalConnection, sigma: &GaugeTransformation) -> LocalConnection {
    let mut out = LocalConnection::new(a.bundle.clone());
    for chart in 0..a.bundle.atlas.charts.len() {
        let a = a.clone();
        let sigma = sigma.clone();
        out.set_chart(
            chart,
            Arc::new(move |x: &[f64], u: &[f64]| {
                let s = sigma.eval(chart, x);
                let base = adjoint(&s.inverse(), &a.eval(chart, x, u)).expect("same spec");
                let ds = sigma.d_eval(chart, x, u);
                let pure = AlgebraElement::new_projected(s.spec, s.inverse().m * ds);
                base.add(&pure).expect("same spec")
            }),
        );
    }
    out
}

/// Curvature `F(u, v) = dA(u, v) + [A(u), A(v)]` at a point.
pub fn curvature(
    a: &LocalConnection,
    chart: usize,
    x: &[f64],
    u: &[f64],
    v: &[f64],
) -> AlgebraElement {
    let da = a.d_eval(chart, x, u, v);
    let comm = bracket(&a.eval(chart, x, u), &a.eval(chart, x, v)).expect("same spec");
    da.add(&comm).expect("same spec")
}

/// Independent curvature estimator: transport around the parallelogram
/// spanned by `eps·u`, `eps·v` with a plain fixed-step RK4 (deliberately not
/// the Lie-group integrator it cross-checks), then `-log(hol)/eps^2`.
/// Returns the estimate together with the `eps` used.
pub fn curvature_small_loop(
    a: &LocalConnection,
    chart: usize,
    x: &[f64],
    u: &[f64],
    v: &[f64],
    eps: f64,
) -> Result<(AlgebraElement, f64), BundleError> {
    // centered on x, so the estimate matches F(x) to second order in eps
    let corners: [Vec<f64>; 5] = {
        let add = |du: f64, dv: f64| -> Vec<f64> {
            x.iter()
                .enumerate()
                .map(|(i, xi)| xi + eps * ((du - 0.5) * u[i] + (dv - 0.5) * v[i]))
                .collect()
        };
        [add(0.0, 0.0), add(1.0, 0.0), add(1.0, 1.0), add(0.0, 1.0), add(0.0, 0.0)]
    };
    for c in &corners {
        if a.bundle.atlas.margin(chart, c) <= 0.0 {
            return Err(BundleError::LoopLeftChart { chart });
        }
    }

    let group = a.bundle.group;
    let n = group.matrix_dim();
    let mut g = linalg::identity(n);
    let substeps = 64usize;
    for w in corners.windows(2) {
        let (p0, p1) = (&w[0], &w[1]);
        let dir: Vec<f64> = p1.iter().zip(p0).map(|(b, a)| b - a).collect();
        let h = 1.0 / substeps as f64;
        let coeff = |s: f64| -> linalg::CMat {
            let xt: Vec<f64> = p0.iter().zip(&dir).map(|(a, d)| a + s * d).collect();
            -&a.eval(chart, &xt, &dir).m
        };
        for k in 0..substeps {
            let s0 = k as f64 * h;
            // classical RK4 on g' = M(s) g
            let k1 = coeff(s0) * &g;
            let k2 = coeff(s0 + 0.5 * h) * (&g + &k1 * C64::new(0.5 * h, 0.0));
            let k3 = coeff(s0 + 0.5 * h) * (&g + &k2 * C64::new(0.5 * h, 0.0));
            let k4 = coeff(s0 + h) * (&g + &k3 * C64::new(h, 0.0));
            g += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4)
                * C64::new(h / 6.0, 0.0);
        }
    }
    let hol = GroupElement::new_projected(group, g);
    let log = group_log(&hol);
    Ok((log.scaled(-1.0 / (eps * eps)), eps))
}

type FormFn = Arc<dyn Fn(&[f64], &[&[f64]]) -> AlgebraElement + Send + Sync>;

/// Basic form of adjoint type on the bundle: per chart a multilinear,
/// antisymmetric map from `degree` tangent vectors to the Lie algebra,
/// glueing as `B_V = Ad(t_UV^{-1}) B_U`.
#[derive(Clone)]
pub struct AdjointForm {
    pub bundle: Arc<PrincipalBundle>,
    pub degree: usize,
    charts: BTreeMap<usize, FormFn>,
}

impl AdjointForm {
    pub fn new(bundle: Arc<PrincipalBundle>, degree: usize) -> AdjointForm {
        AdjointForm { bundle, degree, charts: BTreeMap::new() }
    }

    pub fn zero(bundle: Arc<PrincipalBundle>, degree: usize) -> AdjointForm {
        let group = bundle.group;
        let n_charts = bundle.atlas.charts.len();
        let mut form = AdjointForm::new(bundle, degree);
        for c in 0..n_charts {
            form.set_chart(c, Arc::new(move |_: &[f64], _: &[&[f64]]| AlgebraElement::zero(group)));
        }
        form
    }

    pub fn set_chart(&mut self, chart: usize, f: FormFn) {
        self.charts.insert(chart, f);
    }

    pub fn eval(&self, chart: usize, x: &[f64], args: &[&[f64]]) -> AlgebraElement {
        assert_eq!(args.len(), self.degree, "argument count must match the form degree");
        match self.charts.get(&chart) {
            Some(f) => f(x, args),
            None => AlgebraElement::zero(self.bundle.group),
        }
    }

    pub fn scaled(&self, c: f64) -> AdjointForm {
        let mut out = AdjointForm::new(self.bundle.clone(), self.degree);
        for chart in self.charts.keys().copied().collect::<Vec<_>>() {
            let me = self.clone();
            out.set_chart(
                chart,
                Arc::new(move |x: &[f64], args: &[&[f64]]| me.eval(chart, x, args).scaled(c)),
            );
        }
        out
    }

    /// A degree-1 adjoint form reinterpreted through the connection
    /// interface so it can be added to a connection (`A + B`).
    pub fn as_connection_summand(&self) -> LocalConnection {
        assert_eq!(self.degree, 1);
        let mut out = LocalConnection::new(self.bundle.clone());
        for chart in self.charts.keys().copied().collect::<Vec<_>>() {
            let me = self.clone();
            out.set_chart(
                chart,
                Arc::new(move |x: &[f64], u: &[f64]| me.eval(chart, x, &[u])),
            );
        }
        out
    }

    /// `sigma^* B = Ad(sigma^{-1}) B` in local data.
    pub fn gauge_transformed(&self, sigma: &GaugeTransformation) -> AdjointForm {
        let mut out = AdjointForm::new(self.bundle.clone(), self.degree);
        for chart in 0..self.bundle.atlas.charts.len() {
            let me = self.clone();
            let sigma = sigma.clone();
            out.set_chart(
                chart,
                Arc::new(move |x: &[f64], args: &[&[f64]]| {
                    let s = sigma.eval(chart, x);
                    adjoint(&s.inverse(), &me.eval(chart, x, args)).expect("same spec")
                }),
            );
        }
        out
    }

    /// Overlap residual `B_V - Ad(t_UV^{-1}) B_U` over sampled points and
    /// coordinate directions.
    pub fn overlap_residual(&self, rng: &mut ChaCha8Rng, samples: usize) -> Result<f64, BundleError> {
        let atlas = &self.bundle.atlas;
        let dim = atlas.dim;
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let (u_chart, x) = (self.bundle.sampler)(rng);
            for v_chart in 0..atlas.charts.len() {
                if v_chart == u_chart {
                    continue;
                }
                let x_v = match atlas.change_coords(u_chart, v_chart, &x) {
                    Ok(y) => y,
                    Err(_) => continue,
                };
                if atlas.margin(v_chart, &x_v) <= 0.0 {
                    continue;
                }
                let t = self.bundle.transition(u_chart, v_chart, &x)?;
                // coordinate directions, pushed forward
                let dirs: Vec<Vec<f64>> = (0..dim)
                    .map(|d| {
                        let mut u = vec![0.0; dim];
                        u[d] = 1.0;
                        u
                    })
                    .collect();
                let mut combos: Vec<Vec<usize>> = Vec::new();
                match self.degree {
                    1 => combos.extend((0..dim).map(|i| vec![i])),
                    2 => {
                        for i in 0..dim {
                            for j in (i + 1)..dim {
                                combos.push(vec![i, j]);
                            }
                        }
                    }
                    _ => combos.push((0..self.degree.min(dim)).collect()),
                }
                for combo in combos {
                    let args_u: Vec<&[f64]> = combo.iter().map(|&i| dirs[i].as_slice()).collect();
                    let pushed: Vec<Vec<f64>> = combo
                        .iter()
                        .map(|&i| atlas.change_velocity(u_chart, v_chart, &x, &dirs[i]))
                        .collect::<Result<_, _>>()?;
                    let args_v: Vec<&[f64]> = pushed.iter().map(|p| p.as_slice()).collect();
                    let lhs = self.eval(v_chart, &x_v, &args_v);
                    let rhs = adjoint(&t.inverse(), &self.eval(u_chart, &x, &args_u))?;
                    worst = worst.max(lhs.dist(&rhs));
                }
            }
        }
        Ok(worst)
    }
}

// ---------------------------------------------------------------------------
// Generalized gauge transformations
// ---------------------------------------------------------------------------

/// Fiber-preserving equivariant morphism `P1 -> P2` over a common atlas,
/// described by where reference sections go:
/// `sigma(s^1_U(x)) = s^2_U(x) · rep_U(x)`.
#[derive(Clone)]
pub struct BundleMorphism {
    pub source: Arc<PrincipalBundle>,
    pub target: Arc<PrincipalBundle>,
    charts: BTreeMap<usize, GaugeFn>,
}

impl BundleMorphism {
    pub fn new(source: Arc<PrincipalBundle>, target: Arc<PrincipalBundle>) -> BundleMorphism {
        BundleMorphism { source, target, charts: BTreeMap::new() }
    }

    pub fn set_chart(&mut self, chart: usize, rep: GaugeFn) {
        self.charts.insert(chart, rep);
    }

    pub fn eval(&self, chart: usize, x: &[f64]) -> GroupElement {
        match self.charts.get(&chart) {
            Some(r) => r(x),
            None => GroupElement::identity(self.source.group),
        }
    }

    pub fn apply(&self, p: &BundlePoint) -> Result<BundlePoint, BundleError> {
        let rep = self.eval(p.chart, &p.x);
        Ok(BundlePoint {
            bundle: self.target.clone(),
            chart: p.chart,
            x: p.x.clone(),
            fiber: group_mul(&rep, &p.fiber)?,
        })
    }

    /// Sampled residual of fiber-preservation + equivariance across chart
    /// overlaps: `rep_V = (t^2_{UV})^{-1} rep_U t^1_{UV}`.
    pub fn equivariance_residual(
        &self,
        rng: &mut ChaCha8Rng,
        samples: usize,
    ) -> Result<f64, BundleError> {
        let atlas = &self.source.atlas;
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let (u_chart, x) = (self.source.sampler)(rng);
            for v_chart in 0..atlas.charts.len() {
                if v_chart == u_chart {
                    continue;
                }
                let x_v = match atlas.change_coords(u_chart, v_chart, &x) {
                    Ok(y) => y,
                    Err(_) => continue,
                };
                if atlas.margin(v_chart, &x_v) <= 0.0 {
                    continue;
                }
                let t1 = self.source.transition(u_chart, v_chart, &x)?;
                let t2 = self.target.transition(u_chart, v_chart, &x)?;
                let lhs = self.eval(v_chart, &x_v);
                let rhs = group_mul(&group_mul(&t2.inverse(), &self.eval(u_chart, &x))?, &t1)?;
                worst = worst.max(lhs.dist(&rhs));
            }
        }
        Ok(worst)
    }
}

/// Generalized gauge transformation `K in C^inf(P1 ⊙ P2, G)^{G×G}`, stored
/// by its value on reference sections: `k_U(x) = K(s^1_U(x), s^2_U(x))`.
/// The full map is recovered by equivariance:
/// `K(s^1 g, s^2 h) = h^{-1} k_U(x) g`.
#[derive(Clone)]
pub struct GenGauge {
    pub source: Arc<PrincipalBundle>,
    pub target: Arc<PrincipalBundle>,
    charts: BTreeMap<usize, GaugeFn>,
}

impl GenGauge {
    pub fn new(source: Arc<PrincipalBundle>, target: Arc<PrincipalBundle>) -> GenGauge {
        GenGauge { source, target, charts: BTreeMap::new() }
    }

    /// The identity generalized gauge transformation of `P` (the inverse of
    /// the division map): `k_U ≡ e`.
    pub fn identity(bundle: Arc<PrincipalBundle>) -> GenGauge {
        let group = bundle.group;
        let n_charts = bundle.atlas.charts.len();
        let mut k = GenGauge::new(bundle.clone(), bundle);
        for c in 0..n_charts {
            k.set_chart(c, Arc::new(move |_: &[f64]| GroupElement::identity(group)));
        }
        k
    }

    pub fn set_chart(&mut self, chart: usize, k: GaugeFn) {
        self.charts.insert(chart, k);
    }

    pub fn eval_local(&self, chart: usize, x: &[f64]) -> GroupElement {
        match self.charts.get(&chart) {
            Some(k) => k(x),
            None => GroupElement::identity(self.source.group),
        }
    }

    /// Full `K(p1, p2)` for points over the same base.
    pub fn eval(&self, p1: &BundlePoint, p2: &BundlePoint) -> Result<GroupElement, BundleError> {
        let p2_aligned = p2.to_chart(p1.chart)?;
        let dist = p1.base_distance(&p2_aligned)?;
        if dist > 1e-8 {
            return Err(BundleError::BaseMismatch { dist });
        }
        let k = self.eval_local(p1.chart, &p1.x);
        // K(s g, s~ h) = h^{-1} k g
        group_mul(&group_mul(&p2_aligned.fiber.inverse(), &k)?, &p1.fiber).map_err(Into::into)
    }

    /// Star product `K23 ⋆ K12`: local representatives multiply.
    pub fn star(k23: &GenGauge, k12: &GenGauge) -> Result<GenGauge, BundleError> {
        if !k12.target.same_bundle(&k23.source) {
            return Err(BundleError::CompositionMismatch {
                target: k12.target.id.clone(),
                src: k23.source.id.clone(),
            });
        }
        let mut out = GenGauge::new(k12.source.clone(), k23.target.clone());
        for chart in 0..out.source.atlas.charts.len() {
            let a = k23.clone();
            let b = k12.clone();
            out.set_chart(
                chart,
                Arc::new(move |x: &[f64]| {
                    group_mul(&a.eval_local(chart, x), &b.eval_local(chart, x)).expect("same spec")
                }),
            );
        }
        Ok(out)
    }

    /// Inverse for the star product: source/target swapped, local
    /// representative inverted.
    pub fn star_inverse(&self) -> GenGauge {
        let mut out = GenGauge::new(self.target.clone(), self.source.clone());
        for chart in 0..out.source.atlas.charts.len() {
            let me = self.clone();
            out.set_chart(chart, Arc::new(move |x: &[f64]| me.eval_local(chart, x).inverse()));
        }
        out
    }

    /// The bundle morphism `sigma_K(p1) = p2 · K(p1, p2)`.
    pub fn to_morphism(&self) -> BundleMorphism {
        let mut m = BundleMorphism::new(self.source.clone(), self.target.clone());
        for chart in 0..self.source.atlas.charts.len() {
            let me = self.clone();
            m.set_chart(chart, Arc::new(move |x: &[f64]| me.eval_local(chart, x)));
        }
        m
    }

    /// `K_sigma(p1, p2) = phi_{P2}(p2, sigma(p1))`, after validating
    /// equivariance of the morphism by sampling.
    pub fn from_morphism(
        sigma: &BundleMorphism,
        rng: &mut ChaCha8Rng,
        samples: usize,
    ) -> Result<GenGauge, BundleError> {
        let residual = sigma.equivariance_residual(rng, samples)?;
        if residual > 1e-8 {
            return Err(BundleError::NotEquivariant { residual });
        }
        let mut k = GenGauge::new(sigma.source.clone(), sigma.target.clone());
        for chart in 0..k.source.atlas.charts.len() {
            let sigma = sigma.clone();
            k.set_chart(chart, Arc::new(move |x: &[f64]| sigma.eval(chart, x)));
        }
        Ok(k)
    }

    /// Restriction to the diagonal of `P ⊙ P`: the associated equivariant
    /// map `g_K(p) = K(p, p)` as a gauge transformation.
    pub fn diagonal_restriction(&self) -> GaugeTransformation {
        let mut g = GaugeTransformation::new(self.source.clone());
        for chart in 0..self.source.atlas.charts.len() {
            let me = self.clone();
            g.set_chart(chart, Arc::new(move |x: &[f64]| me.eval_local(chart, x)));
        }
        g
    }

    /// Rebuild `K(p, q) = phi_P(p, q)^{-1} k(p)` from an equivariant map
    /// given as a gauge transformation.
    pub fn from_equivariant_map(k: &GaugeTransformation) -> GenGauge {
        let mut out = GenGauge::new(k.bundle.clone(), k.bundle.clone());
        for chart in 0..out.source.atlas.charts.len() {
            let k = k.clone();
            out.set_chart(chart, Arc::new(move |x: &[f64]| k.eval(chart, x)));
        }
        out
    }

    /// Overlap consistency residual `k_V - (t^2)^{-1} k_U t^1`.
    pub fn overlap_residual(&self, rng: &mut ChaCha8Rng, samples: usize) -> Result<f64, BundleError> {
        self.to_morphism().equivariance_residual(rng, samples)
    }

    /// Sampled equivariance of the reconstructed full map:
    /// `K(p g, q h) = conj(g^{-1}, h^{-1}) K(p, q)`.
    pub fn equivariance_residual_full(
        &self,
        rng: &mut ChaCha8Rng,
        samples: usize,
    ) -> Result<f64, BundleError> {
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let (chart, x) = (self.source.sampler)(rng);
            let g = GroupElement::random(self.source.group, rng, 1.0);
            let h = GroupElement::random(self.source.group, rng, 1.0);
            let p = BundlePoint::reference(self.source.clone(), chart, x.clone());
            let q = BundlePoint::reference(self.target.clone(), chart, x.clone());
            let base = self.eval(&p, &q)?;
            let lhs = self.eval(&p.act(&g)?, &q.act(&h)?)?;
            let rhs = generalized_conjugation(&g.inverse(), &h.inverse(), &base)?;
            worst = worst.max(lhs.dist(&rhs));
        }
        Ok(worst)
    }
}
