//! Named atlases, bundles, connections, curves, loop families and
//! adjoint-form presets used by tests, the acceptance suite and scenario
//! files.
//!
//! Bundled atlases: `circle` (1 periodic chart), `torus` (1 periodic chart),
//! `punctured-plane` (1 chart minus a disc around the origin), `sphere`
//! (2 stereographic charts glued by `z -> 1/z`). Bundle/connection presets:
//! `trivial`, `flat-angle(xi)`, `monopole(q)`, `random-polynomial(seed,
//! degree)`.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bundle::{AdjointForm, GaugeTransformation, LocalConnection, PrincipalBundle};
use crate::geometry::{auto_itinerary, Atlas, Chart, GeometryError, LoopFamily, SampledCurve};
use crate::lie::{AlgebraElement, GroupElement, GroupSpec};
use crate::linalg::{C64, CMat};

/// Inner radius of the punctured-plane chart; loops must stay outside.
pub const PUNCTURE_RADIUS: f64 = 0.05;
/// Stereographic charts cover `|z| < SPHERE_CHART_RADIUS`; margins tie at
/// the equator `|z| = 1`.
pub const SPHERE_CHART_RADIUS: f64 = 3.0;

pub fn circle_atlas() -> Arc<Atlas> {
    Arc::new(Atlas::new(
        "circle",
        1,
        vec![Chart { id: 0, margin: Arc::new(|_| 1.0), periods: vec![Some(TAU)] }],
    ))
}

pub fn torus_atlas() -> Arc<Atlas> {
    Arc::new(Atlas::new(
        "torus",
        2,
        vec![Chart { id: 0, margin: Arc::new(|_| 1.0), periods: vec![Some(TAU), Some(TAU)] }],
    ))
}

pub fn punctured_plane_atlas() -> Arc<Atlas> {
    Arc::new(Atlas::new(
        "punctured-plane",
        2,
        vec![Chart {
            id: 0,
            margin: Arc::new(|x: &[f64]| (x[0] * x[0] + x[1] * x[1]).sqrt() - PUNCTURE_RADIUS),
            periods: vec![None, None],
        }],
    ))
}

pub fn sphere_atlas() -> Arc<Atlas> {
    let margin = |x: &[f64]| SPHERE_CHART_RADIUS - (x[0] * x[0] + x[1] * x[1]).sqrt();
    let mut atlas = Atlas::new(
        "sphere",
        2,
        vec![
            Chart { id: 0, margin: Arc::new(margin), periods: vec![None, None] },
            Chart { id: 1, margin: Arc::new(margin), periods: vec![None, None] },
        ],
    );
    // z -> 1/z in complex coordinates, both directions.
    let inv = |x: &[f64]| -> Vec<f64> {
        let r2 = x[0] * x[0] + x[1] * x[1];
        vec![x[0] / r2, -x[1] / r2]
    };
    atlas.add_change(0, 1, Arc::new(inv));
    atlas.add_change(1, 0, Arc::new(inv));
    Arc::new(atlas)
}

pub fn atlas_by_name(name: &str) -> Option<Arc<Atlas>> {
    match name {
        "circle" => Some(circle_atlas()),
        "torus" => Some(torus_atlas()),
        "punctured-plane" => Some(punctured_plane_atlas()),
        "sphere" => Some(sphere_atlas()),
        _ => None,
    }
}

fn sampler_for(atlas: &Arc<Atlas>) -> Arc<dyn Fn(&mut ChaCha8Rng) -> (usize, Vec<f64>) + Send + Sync> {
    match atlas.name.as_str() {
        "circle" => Arc::new(|rng: &mut ChaCha8Rng| (0, vec![rng.gen_range(0.0..TAU)])),
        "torus" => {
            Arc::new(|rng: &mut ChaCha8Rng| (0, vec![rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU)]))
        }
        "sphere" => Arc::new(|rng: &mut ChaCha8Rng| {
            let chart = rng.gen_range(0..2usize);
            let r = rng.gen_range(0.2..1.5);
            let phi = rng.gen_range(0.0..TAU);
            (chart, vec![r * phi.cos(), r * phi.sin()])
        }),
        // punctured plane and anything else planar
        _ => Arc::new(|rng: &mut ChaCha8Rng| {
            let r = rng.gen_range(0.3..1.5);
            let phi = rng.gen_range(0.0..TAU);
            (0, vec![r * phi.cos(), r * phi.sin()])
        }),
    }
}

/// A bundle together with a compatible connection.
#[derive(Clone)]
pub struct BundleConnection {
    pub bundle: Arc<PrincipalBundle>,
    pub connection: LocalConnection,
}

/// Trivial cocycle, zero connection on the named atlas.
pub fn trivial_preset(atlas: Arc<Atlas>, group: GroupSpec) -> BundleConnection {
    let sampler = sampler_for(&atlas);
    let bundle = Arc::new(PrincipalBundle::new(
        &format!("trivial-{}-{}", atlas.name, group),
        atlas,
        group,
        sampler,
    ));
    let connection = LocalConnection::zero(bundle.clone());
    BundleConnection { bundle, connection }
}

/// Flat angle connection `A = xi dphi` on the punctured plane; `xi` a fixed
/// algebra element, so `dA = 0` and `[A, A] = 0`.
pub fn flat_angle_preset(xi: AlgebraElement) -> BundleConnection {
    let atlas = punctured_plane_atlas();
    let sampler = sampler_for(&atlas);
    let bundle = Arc::new(PrincipalBundle::new(
        &format!("flat-angle-{}", xi.spec),
        atlas,
        xi.spec,
        sampler,
    ));
    let mut connection = LocalConnection::new(bundle.clone());
    let xi_c = xi.clone();
    connection.set_chart(
        0,
        Arc::new(move |x: &[f64], u: &[f64]| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            xi_c.scaled((-x[1] * u[0] + x[0] * u[1]) / r2)
        }),
    );
    let spec = xi.spec;
    connection.set_analytic_d(
        0,
        Arc::new(move |_: &[f64], _: &[f64], _: &[f64]| AlgebraElement::zero(spec)),
    );
    BundleConnection { bundle, connection }
}

/// Magnetic monopole of integer charge `q` on the sphere: U(1) cocycle
/// `t_01 = e^{-i q phi}` with chart potentials
/// `A_c = i q (-y dx + x dy) / (1 + r^2)` in each stereographic chart.
pub fn monopole_preset(charge: i64) -> BundleConnection {
    let atlas = sphere_atlas();
    let sampler = sampler_for(&atlas);
    let mut bundle =
        PrincipalBundle::new(&format!("monopole-{charge}"), atlas, GroupSpec::U1, sampler);
    bundle.add_transition(
        0,
        1,
        Arc::new(move |x: &[f64]| {
            let phi = x[1].atan2(x[0]);
            GroupElement::new_projected(
                GroupSpec::U1,
                CMat::from_row_slice(1, 1, &[C64::new(0.0, -(charge as f64) * phi).exp()]),
            )
        }),
    );
    let bundle = Arc::new(bundle);
    let mut connection = LocalConnection::new(bundle.clone());
    for chart in 0..2 {
        connection.set_chart(
            chart,
            Arc::new(move |x: &[f64], u: &[f64]| {
                let r2 = x[0] * x[0] + x[1] * x[1];
                AlgebraElement::from_coefficients(
                    GroupSpec::U1,
                    &[charge as f64 * (-x[1] * u[0] + x[0] * u[1]) / (1.0 + r2)],
                )
            }),
        );
        connection.set_analytic_d(
            chart,
            Arc::new(move |x: &[f64], u: &[f64], v: &[f64]| {
                let r2 = x[0] * x[0] + x[1] * x[1];
                let area = u[0] * v[1] - u[1] * v[0];
                AlgebraElement::from_coefficients(
                    GroupSpec::U1,
                    &[2.0 * charge as f64 / ((1.0 + r2) * (1.0 + r2)) * area],
                )
            }),
        );
    }
    BundleConnection { bundle, connection }
}

/// Analytic curvature of the monopole preset (abelian: `F = dA`).
pub fn monopole_curvature(charge: i64, x: &[f64], u: &[f64], v: &[f64]) -> AlgebraElement {
    let r2 = x[0] * x[0] + x[1] * x[1];
    let area = u[0] * v[1] - u[1] * v[0];
    AlgebraElement::from_coefficients(
        GroupSpec::U1,
        &[2.0 * charge as f64 / ((1.0 + r2) * (1.0 + r2)) * area],
    )
}

/// Bivariate polynomial with dense coefficient grid.
#[derive(Clone)]
pub struct Poly2 {
    /// coefficient of x^i y^j at c[i][j]
    pub c: Vec<Vec<f64>>,
}

impl Poly2 {
    pub fn random(rng: &mut ChaCha8Rng, degree: usize, scale: f64) -> Poly2 {
        let c = (0..=degree)
            .map(|i| {
                (0..=degree)
                    .map(|j| {
                        if i + j <= degree {
                            rng.gen_range(-scale..scale)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        Poly2 { c }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let mut acc = 0.0;
        let mut xi = 1.0;
        for row in &self.c {
            let mut yj = 1.0;
            for coeff in row {
                acc += coeff * xi * yj;
                yj *= y;
            }
            xi *= x;
        }
        acc
    }

    pub fn dx(&self) -> Poly2 {
        let n = self.c.len();
        let mut c = vec![vec![0.0; self.c[0].len()]; n];
        for i in 1..n {
            for j in 0..self.c[i].len() {
                c[i - 1][j] = self.c[i][j] * i as f64;
            }
        }
        Poly2 { c }
    }

    pub fn dy(&self) -> Poly2 {
        let m = self.c[0].len();
        let mut c = vec![vec![0.0; m]; self.c.len()];
        for i in 0..self.c.len() {
            for j in 1..m {
                c[i][j - 1] = self.c[i][j] * j as f64;
            }
        }
        Poly2 { c }
    }
}

/// Random polynomial connection on the punctured plane (trivial cocycle):
/// `A = A_x dx + A_y dy`, algebra-valued polynomial coefficients, with the
/// analytic exterior derivative registered.
pub fn random_polynomial_preset(
    group: GroupSpec,
    seed: u64,
    degree: usize,
    scale: f64,
) -> BundleConnection {
    let atlas = punctured_plane_atlas();
    let sampler = sampler_for(&atlas);
    let bundle = Arc::new(PrincipalBundle::new(
        &format!("random-polynomial-{group}-{seed}"),
        atlas,
        group,
        sampler,
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = group.algebra_dim();
    let ax: Vec<Poly2> = (0..dim).map(|_| Poly2::random(&mut rng, degree, scale)).collect();
    let ay: Vec<Poly2> = (0..dim).map(|_| Poly2::random(&mut rng, degree, scale)).collect();
    let dax_dy: Vec<Poly2> = ax.iter().map(|p| p.dy()).collect();
    let day_dx: Vec<Poly2> = ay.iter().map(|p| p.dx()).collect();

    let mut connection = LocalConnection::new(bundle.clone());
    {
        let (ax, ay) = (ax.clone(), ay.clone());
        connection.set_chart(
            0,
            Arc::new(move |x: &[f64], u: &[f64]| {
                let coeffs: Vec<f64> = ax
                    .iter()
                    .zip(&ay)
                    .map(|(px, py)| px.eval(x[0], x[1]) * u[0] + py.eval(x[0], x[1]) * u[1])
                    .collect();
                AlgebraElement::from_coefficients(group, &coeffs)
            }),
        );
    }
    connection.set_analytic_d(
        0,
        Arc::new(move |x: &[f64], u: &[f64], v: &[f64]| {
            let area = u[0] * v[1] - u[1] * v[0];
            let coeffs: Vec<f64> = day_dx
                .iter()
                .zip(&dax_dy)
                .map(|(pyx, pxy)| (pyx.eval(x[0], x[1]) - pxy.eval(x[0], x[1])) * area)
                .collect();
            AlgebraElement::from_coefficients(group, &coeffs)
        }),
    );
    BundleConnection { bundle, connection }
}

/// Random polynomial gauge transformation `sigma = exp(xi(x))` on a
/// single-chart bundle.
pub fn random_polynomial_gauge(
    bundle: Arc<PrincipalBundle>,
    seed: u64,
    degree: usize,
    scale: f64,
) -> GaugeTransformation {
    let group = bundle.group;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = group.algebra_dim();
    let polys: Vec<Poly2> = (0..dim).map(|_| Poly2::random(&mut rng, degree, scale)).collect();
    let mut sigma = GaugeTransformation::new(bundle);
    sigma.set_chart(
        0,
        Arc::new(move |x: &[f64]| {
            let coeffs: Vec<f64> = polys.iter().map(|p| p.eval(x[0], x[1])).collect();
            crate::lie::group_exp(&AlgebraElement::from_coefficients(group, &coeffs))
        }),
    );
    sigma
}

/// Height function `cos(theta)` of a stereographic chart point.
pub fn sphere_height(chart: usize, x: &[f64]) -> f64 {
    let r2 = x[0] * x[0] + x[1] * x[1];
    match chart {
        0 => (1.0 - r2) / (1.0 + r2),
        _ => (r2 - 1.0) / (1.0 + r2),
    }
}

/// Global U(1) gauge transformation on the sphere: `sigma = exp(i p(h))`
/// with `p` a cubic in the height `h = cos(theta)`; automatically satisfies
/// the overlap equivariance since `h` is chart-consistent and U(1) abelian.
pub fn sphere_height_gauge(bundle: Arc<PrincipalBundle>, seed: u64) -> GaugeTransformation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeff: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut sigma = GaugeTransformation::new(bundle);
    for chart in 0..2 {
        let coeff = coeff.clone();
        sigma.set_chart(
            chart,
            Arc::new(move |x: &[f64]| {
                let h = sphere_height(chart, x);
                let theta = coeff[0] + h * (coeff[1] + h * (coeff[2] + h * coeff[3]));
                GroupElement::new_projected(
                    GroupSpec::U1,
                    CMat::from_row_slice(1, 1, &[C64::new(0.0, theta).exp()]),
                )
            }),
        );
    }
    sigma
}

// ---------------------------------------------------------------------------
// Curves and families
// ---------------------------------------------------------------------------

/// Circle of given radius and winding number around the puncture, starting
/// at angle `phase`.
pub fn circle_loop(atlas: Arc<Atlas>, radius: f64, winding: i32, phase: f64) -> SampledCurve {
    SampledCurve::single(atlas, 0, move |t| {
        let a = phase + TAU * winding as f64 * t;
        let da = TAU * winding as f64;
        (
            vec![radius * a.cos(), radius * a.sin()],
            vec![-radius * da * a.sin(), radius * da * a.cos()],
        )
    })
}

/// Circular arc from angle `a0` to `a1` at fixed radius.
pub fn circle_arc(atlas: Arc<Atlas>, radius: f64, a0: f64, a1: f64) -> SampledCurve {
    SampledCurve::single(atlas, 0, move |t| {
        let a = a0 + (a1 - a0) * t;
        let da = a1 - a0;
        (
            vec![radius * a.cos(), radius * a.sin()],
            vec![-radius * da * a.sin(), radius * da * a.cos()],
        )
    })
}

/// Smooth random winding-1 loop around the puncture:
/// `r(t) = r0 (1 + sum_k a_k cos(2 pi k t + b_k))` with small harmonics.
pub fn random_trig_loop(atlas: Arc<Atlas>, seed: u64, base_radius: f64) -> SampledCurve {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let harmonics: Vec<(f64, f64, f64)> = (1..=3)
        .map(|k| (k as f64, rng.gen_range(-0.15..0.15), rng.gen_range(0.0..TAU)))
        .collect();
    let phase = rng.gen_range(0.0..TAU);
    SampledCurve::single(atlas, 0, move |t| {
        let mut r = base_radius;
        let mut dr = 0.0;
        for &(k, a, b) in &harmonics {
            r += base_radius * a * (TAU * k * t + b).cos();
            dr -= base_radius * a * TAU * k * (TAU * k * t + b).sin();
        }
        let ang = phase + TAU * t;
        let dang = TAU;
        (
            vec![r * ang.cos(), r * ang.sin()],
            vec![
                dr * ang.cos() - r * dang * ang.sin(),
                dr * ang.sin() + r * dang * ang.cos(),
            ],
        )
    })
}

/// Smooth random open arc in the punctured plane.
pub fn random_trig_arc(atlas: Arc<Atlas>, seed: u64) -> SampledCurve {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r0 = rng.gen_range(0.6..1.2);
    let span = rng.gen_range(1.0..4.5);
    let a0 = rng.gen_range(0.0..TAU);
    let wobble = rng.gen_range(-0.2..0.2);
    SampledCurve::single(atlas, 0, move |t| {
        let a = a0 + span * t;
        let r = r0 * (1.0 + wobble * (3.0 * t).sin());
        let dr = r0 * wobble * 3.0 * (3.0 * t).cos();
        (
            vec![r * a.cos(), r * a.sin()],
            vec![dr * a.cos() - r * span * a.sin(), dr * a.sin() + r * span * a.cos()],
        )
    })
}

/// Latitude loop at polar angle `theta` on the sphere, traversed `winding`
/// times in the `+phi` direction. Lives in chart 0 below the equator's
/// margin tie, chart 1 above.
pub fn latitude_loop(atlas: Arc<Atlas>, theta: f64, winding: i32) -> SampledCurve {
    if theta <= PI / 2.0 {
        let r = (theta / 2.0).tan();
        circle_loop(atlas, r, winding, 0.0)
    } else {
        // chart 1: z1 = cot(theta/2) e^{-i phi}
        let r = 1.0 / (theta / 2.0).tan();
        let w = winding as f64;
        SampledCurve::single(atlas, 1, move |t| {
            let a = -TAU * w * t;
            let da = -TAU * w;
            (
                vec![r * a.cos(), r * a.sin()],
                vec![-r * da * a.sin(), r * da * a.cos()],
            )
        })
    }
}

/// Meridian great circle through both poles: down the meridian at `phi0`,
/// back up at `phi0 + pi`. Charts are assigned automatically, switching at
/// the equator.
pub fn meridian_loop(atlas: Arc<Atlas>, phi0: f64) -> Result<SampledCurve, GeometryError> {
    // polar angle along the curve and the azimuth of each half
    let theta_of = move |t: f64| -> (f64, f64, f64) {
        if t <= 0.5 {
            (2.0 * PI * t, 2.0 * PI, phi0)
        } else {
            (2.0 * PI * (1.0 - t), -2.0 * PI, phi0 + PI)
        }
    };
    auto_itinerary(
        atlas.clone(),
        move |chart: usize, t: f64| {
            let (theta, dtheta, phi) = theta_of(t);
            match chart {
                0 => {
                    let half = theta / 2.0;
                    if half.cos().abs() < 1e-3 {
                        return None; // too close to the south pole for chart 0
                    }
                    let r = half.tan();
                    if r.abs() > 10.0 {
                        return None;
                    }
                    let dr = 0.5 * dtheta / (half.cos() * half.cos());
                    Some((vec![r * phi.cos(), r * phi.sin()], vec![dr * phi.cos(), dr * phi.sin()]))
                }
                _ => {
                    let half = theta / 2.0;
                    if half.sin().abs() < 1e-3 {
                        return None; // too close to the north pole for chart 1
                    }
                    let r = 1.0 / half.tan();
                    if r.abs() > 10.0 {
                        return None;
                    }
                    let dr = -0.5 * dtheta / (half.sin() * half.sin());
                    // z1 = cot(theta/2) e^{-i phi}
                    Some((
                        vec![r * (-phi).cos(), r * (-phi).sin()],
                        vec![dr * (-phi).cos(), dr * (-phi).sin()],
                    ))
                }
            }
        },
        512,
    )
}

/// Straight winding loop `(theta_1, theta_2) = 2 pi t (m, n)` on the torus.
pub fn torus_loop(atlas: Arc<Atlas>, m: i32, n: i32) -> SampledCurve {
    SampledCurve::single(atlas, 0, move |t| {
        (
            vec![TAU * m as f64 * t, TAU * n as f64 * t],
            vec![TAU * m as f64, TAU * n as f64],
        )
    })
}

/// Family of winding-1 circles with radius interpolating `r0 -> r1`.
pub fn radius_family(atlas: Arc<Atlas>, r0: f64, r1: f64) -> LoopFamily {
    LoopFamily::new(move |s| circle_loop(atlas.clone(), r0 + (r1 - r0) * s, 1, 0.0))
}

/// Family of winding-1 loops deforming a base circle by a shape parameter;
/// every slice is homotopic to the base circle inside the punctured plane.
pub fn trig_radius_family(atlas: Arc<Atlas>, seed: u64, r0: f64) -> LoopFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b1 = rng.gen_range(0.0..TAU);
    let b2 = rng.gen_range(0.0..TAU);
    LoopFamily::new(move |s| {
        let atlas = atlas.clone();
        SampledCurve::single(atlas, 0, move |t| {
            let shape = 1.0 + 0.25 * s * (TAU * t + b1).cos() + 0.1 * s * (2.0 * TAU * t + b2).cos();
            let dshape_dt =
                -0.25 * s * TAU * (TAU * t + b1).sin() - 0.1 * s * 2.0 * TAU * (2.0 * TAU * t + b2).sin();
            let r = r0 * shape;
            let dr = r0 * dshape_dt;
            let a = TAU * t;
            (
                vec![r * a.cos(), r * a.sin()],
                vec![dr * a.cos() - r * TAU * a.sin(), dr * a.sin() + r * TAU * a.cos()],
            )
        })
    })
}

/// Family of winding-1 loops all through the fixed point `(r0, 0)`; the
/// deformation vanishes at the base point, so the degenerate
/// fixed-base-point transport variant applies.
pub fn fixed_base_trig_family(atlas: Arc<Atlas>, seed: u64, r0: f64) -> LoopFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = rng.gen_range(0.0..TAU);
    LoopFamily::new(move |s| {
        let atlas = atlas.clone();
        SampledCurve::single(atlas, 0, move |t| {
            let bump = (PI * t).sin().powi(2);
            let dbump = 2.0 * (PI * t).sin() * (PI * t).cos() * PI;
            let wig = 0.3 * s * (TAU * t + b).cos();
            let dwig = -0.3 * s * TAU * (TAU * t + b).sin();
            let r = r0 * (1.0 + bump * wig);
            let dr = r0 * (dbump * wig + bump * dwig);
            let a = TAU * t;
            (
                vec![r * a.cos(), r * a.sin()],
                vec![dr * a.cos() - r * TAU * a.sin(), dr * a.sin() + r * TAU * a.cos()],
            )
        })
    })
}

/// Family whose small-`s` slices are fine but whose large-`s` slices dip
/// inside the puncture; used to show ChartGap rejection.
pub fn puncture_crossing_family(atlas: Arc<Atlas>) -> LoopFamily {
    LoopFamily::new(move |s| circle_loop(atlas.clone(), 0.5 - 0.49 * s, 1, 0.0))
}

/// Family of latitude loops sweeping polar angle; on the monopole bundle the
/// enclosed flux changes with `s`, so it serves as the non-flat control.
pub fn latitude_family(atlas: Arc<Atlas>, theta0: f64, theta1: f64) -> LoopFamily {
    LoopFamily::new(move |s| latitude_loop(atlas.clone(), theta0 + (theta1 - theta0) * s, 1))
}

/// Two-parameter loop family for discrete exterior-derivative checks:
/// independent shape deformations along `s1` and `s2`.
pub fn two_param_trig_family(
    atlas: Arc<Atlas>,
    seed: u64,
    r0: f64,
) -> impl Fn(f64, f64) -> SampledCurve + Send + Sync + Clone {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b1 = rng.gen_range(0.0..TAU);
    let b2 = rng.gen_range(0.0..TAU);
    move |s1: f64, s2: f64| {
        let atlas = atlas.clone();
        SampledCurve::single(atlas, 0, move |t| {
            let shape = 1.0 + 0.2 * s1 * (TAU * t + b1).cos() + 0.2 * s2 * (2.0 * TAU * t + b2).sin();
            let dshape =
                -0.2 * s1 * TAU * (TAU * t + b1).sin() + 0.2 * s2 * 2.0 * TAU * (2.0 * TAU * t + b2).cos();
            let r = r0 * shape;
            let dr = r0 * dshape;
            let a = TAU * t;
            (
                vec![r * a.cos(), r * a.sin()],
                vec![dr * a.cos() - r * TAU * a.sin(), dr * a.sin() + r * TAU * a.cos()],
            )
        })
    }
}

/// Smooth variation field along a loop in chart coordinates, vanishing
/// nowhere in particular; used for loop-space finite differences.
pub fn trig_variation_field(seed: u64, amplitude: f64) -> Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ax = rng.gen_range(-1.0..1.0);
    let ay = rng.gen_range(-1.0..1.0);
    let bx = rng.gen_range(0.0..TAU);
    let by = rng.gen_range(0.0..TAU);
    Arc::new(move |t: f64| {
        vec![
            amplitude * (ax * (TAU * t + bx).cos()),
            amplitude * (ay * (TAU * t + by).sin() + 0.3 * ax),
        ]
    })
}

/// Variation field that sweeps area (radial push), the control direction
/// for curvature-sensitive checks.
pub fn radial_variation_field(amplitude: f64) -> Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync> {
    Arc::new(move |t: f64| {
        let a = TAU * t;
        vec![amplitude * a.cos(), amplitude * a.sin()]
    })
}

// ---------------------------------------------------------------------------
// Adjoint-form presets (BF data)
// ---------------------------------------------------------------------------

/// Random polynomial adjoint-valued 1-form on a single-chart bundle.
pub fn random_polynomial_1form(
    bundle: Arc<PrincipalBundle>,
    seed: u64,
    degree: usize,
    scale: f64,
) -> AdjointForm {
    let group = bundle.group;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = group.algebra_dim();
    let bx: Vec<Poly2> = (0..dim).map(|_| Poly2::random(&mut rng, degree, scale)).collect();
    let by: Vec<Poly2> = (0..dim).map(|_| Poly2::random(&mut rng, degree, scale)).collect();
    let mut form = AdjointForm::new(bundle, 1);
    form.set_chart(
        0,
        Arc::new(move |x: &[f64], args: &[&[f64]]| {
            let u = args[0];
            let coeffs: Vec<f64> = bx
                .iter()
                .zip(&by)
                .map(|(px, py)| px.eval(x[0], x[1]) * u[0] + py.eval(x[0], x[1]) * u[1])
                .collect();
            AlgebraElement::from_coefficients(group, &coeffs)
        }),
    );
    form
}

/// Closed abelian 1-form `B = i (c dphi + df)`, `f` polynomial: `dB = 0`.
pub fn u1_closed_1form(bundle: Arc<PrincipalBundle>, angle_coeff: f64, seed: u64) -> AdjointForm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = Poly2::random(&mut rng, 2, 0.1);
    let fx = f.dx();
    let fy = f.dy();
    let mut form = AdjointForm::new(bundle, 1);
    form.set_chart(
        0,
        Arc::new(move |x: &[f64], args: &[&[f64]]| {
            let u = args[0];
            let r2 = x[0] * x[0] + x[1] * x[1];
            let dphi = (-x[1] * u[0] + x[0] * u[1]) / r2;
            let df = fx.eval(x[0], x[1]) * u[0] + fy.eval(x[0], x[1]) * u[1];
            AlgebraElement::from_coefficients(GroupSpec::U1, &[angle_coeff * dphi + df])
        }),
    );
    form
}

/// Non-closed abelian control form `B = i c x dy` (`dB = i c dx∧dy != 0`).
pub fn u1_nonclosed_1form(bundle: Arc<PrincipalBundle>, scale: f64) -> AdjointForm {
    let mut form = AdjointForm::new(bundle, 1);
    form.set_chart(
        0,
        Arc::new(move |x: &[f64], args: &[&[f64]]| {
            AlgebraElement::from_coefficients(GroupSpec::U1, &[scale * x[0] * args[0][1]])
        }),
    );
    form
}

/// Adjoint-valued 2-form `B = xi g(x) dx∧dy` on a planar chart.
pub fn polynomial_2form(bundle: Arc<PrincipalBundle>, seed: u64, scale: f64) -> AdjointForm {
    let group = bundle.group;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = group.algebra_dim();
    let polys: Vec<Poly2> = (0..dim).map(|_| Poly2::random(&mut rng, 2, scale)).collect();
    let mut form = AdjointForm::new(bundle, 2);
    form.set_chart(
        0,
        Arc::new(move |x: &[f64], args: &[&[f64]]| {
            let (u, v) = (args[0], args[1]);
            let area = u[0] * v[1] - u[1] * v[0];
            let coeffs: Vec<f64> = polys.iter().map(|p| p.eval(x[0], x[1]) * area).collect();
            AlgebraElement::from_coefficients(group, &coeffs)
        }),
    );
    form
}

/// Adjoint-valued 0-form (a section of ad P) with polynomial coefficients.
pub fn polynomial_0form(bundle: Arc<PrincipalBundle>, seed: u64, scale: f64) -> AdjointForm {
    let group = bundle.group;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = group.algebra_dim();
    let polys: Vec<Poly2> = (0..dim).map(|_| Poly2::random(&mut rng, 2, scale)).collect();
    let mut form = AdjointForm::new(bundle, 0);
    form.set_chart(
        0,
        Arc::new(move |x: &[f64], _: &[&[f64]]| {
            let coeffs: Vec<f64> = polys.iter().map(|p| p.eval(x[0], x[1])).collect();
            AlgebraElement::from_coefficients(group, &coeffs)
        }),
    );
    form
}


#[cfg(test)]
mod bundle_point_tests {
    use super::*;
    use crate::bundle::BundlePoint;
    use crate::lie::group_mul;
    use rand::SeedableRng;

    #[test]
    fn monopole_bundle_point_chart_roundtrip() {
        let mp = monopole_preset(3);
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..40 {
            let r = rng.gen_range(0.5..1.8);
            let phi = rng.gen_range(0.0..TAU);
            let x = vec![r * phi.cos(), r * phi.sin()];
            let g = GroupElement::random(GroupSpec::U1, &mut rng, 1.0);
            let p = BundlePoint::new(mp.bundle.clone(), 0, x, g.clone());
            let back = p.to_chart(1).unwrap().to_chart(0).unwrap();
            assert!(back.fiber.dist(&g) < 1e-10);
            assert!(p.base_distance(&back).unwrap() < 1e-10);
        }
    }

    #[test]
    fn gauge_group_embeds_into_gen_gauge_groupoid() {
        // composition of gauge transformations maps to the star product
        let rp = random_polynomial_preset(GroupSpec::SU2, 191, 2, 0.6);
        let s1 = random_polynomial_gauge(rp.bundle.clone(), 192, 2, 0.5);
        let s2 = random_polynomial_gauge(rp.bundle.clone(), 193, 2, 0.5);
        let k1 = crate::bundle::GenGauge::from_equivariant_map(&s1.clone());
        let k2 = crate::bundle::GenGauge::from_equivariant_map(&s2.clone());
        let star = crate::bundle::GenGauge::star(&k1, &k2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(194);
        for _ in 0..25 {
            let (chart, x) = (rp.bundle.sampler)(&mut rng);
            // (s1 o s2) acting on reference sections composes local reps
            let composed = group_mul(&s1.eval(chart, &x), &s2.eval(chart, &x)).unwrap();
            assert!(star.eval_local(chart, &x).dist(&composed) < 1e-10);
        }
    }
}
