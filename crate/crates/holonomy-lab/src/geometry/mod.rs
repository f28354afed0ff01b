//! Chart-based base manifolds and piecewise-smooth curves.
//!
//! An [`Atlas`] is a set of charts with coordinate-change maps on overlaps;
//! curves carry an explicit chart itinerary (one chart per segment), so
//! lifts and transports are deterministic. Loop families realize homotopies
//! as maps `s -> loop`.

pub mod simplex;

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

pub use simplex::{
    boundary_faces, foreach_simplex_node, simplex_integrate, simplex_integrate_pivot, BoundaryFace,
    SimplexGrid,
};

pub const CONTINUITY_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("curve endpoints do not match (distance {dist:.3e})")]
    EndpointMismatch { dist: f64 },
    #[error("no chart covers the curve at parameter {t}")]
    ChartGap { t: f64 },
    #[error("quadrature needs at least 2 nodes per axis, got {got}")]
    ResolutionTooSmall { got: usize },
    #[error("no coordinate change registered from chart {from} to chart {to}")]
    MissingChange { from: usize, to: usize },
    #[error("point is outside the domain of chart {chart}")]
    OutsideChart { chart: usize },
    #[error("curve is not a loop (gap {dist:.3e})")]
    NotALoop { dist: f64 },
}

type CoordMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type MarginFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// One coordinate chart: a domain predicate expressed as a signed margin
/// (positive inside, larger = deeper inside).
#[derive(Clone)]
pub struct Chart {
    pub id: usize,
    pub margin: MarginFn,
    /// Coordinate periods, for charts with periodic coordinates (e.g. the
    /// circle); `None` entries are non-periodic directions.
    pub periods: Vec<Option<f64>>,
}

/// Chart-based manifold. Coordinate changes are registered per ordered pair
/// and must be mutually inverse on overlaps.
#[derive(Clone)]
pub struct Atlas {
    pub name: String,
    pub dim: usize,
    pub charts: Vec<Chart>,
    changes: BTreeMap<(usize, usize), CoordMap>,
}

impl Atlas {
    pub fn new(name: &str, dim: usize, charts: Vec<Chart>) -> Atlas {
        Atlas { name: name.to_string(), dim, charts, changes: BTreeMap::new() }
    }

    pub fn add_change(&mut self, from: usize, to: usize, map: CoordMap) {
        self.changes.insert((from, to), map);
    }

    pub fn change_coords(&self, from: usize, to: usize, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
        if from == to {
            return Ok(x.to_vec());
        }
        let map = self
            .changes
            .get(&(from, to))
            .ok_or(GeometryError::MissingChange { from, to })?;
        Ok(map(x))
    }

    /// Push a velocity through the coordinate change by a central-difference
    /// Jacobian (step 1e-6).
    pub fn change_velocity(
        &self,
        from: usize,
        to: usize,
        x: &[f64],
        v: &[f64],
    ) -> Result<Vec<f64>, GeometryError> {
        if from == to {
            return Ok(v.to_vec());
        }
        let h = 1e-6;
        let mut out = vec![0.0; self.dim];
        for (j, vj) in v.iter().enumerate() {
            if *vj == 0.0 {
                continue;
            }
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            let fp = self.change_coords(from, to, &xp)?;
            let fm = self.change_coords(from, to, &xm)?;
            for i in 0..self.dim {
                out[i] += vj * (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        Ok(out)
    }

    /// Distance between two points given in (possibly different) charts,
    /// honoring periodic coordinates. Comparison happens in chart `ca`.
    pub fn point_distance(
        &self,
        ca: usize,
        xa: &[f64],
        cb: usize,
        xb: &[f64],
    ) -> Result<f64, GeometryError> {
        let xb_in_a = self.change_coords(cb, ca, xb)?;
        let periods = &self.charts[ca].periods;
        let mut d2 = 0.0;
        for i in 0..self.dim {
            let mut di = xa[i] - xb_in_a[i];
            if let Some(p) = periods[i] {
                di -= (di / p).round() * p;
            }
            d2 += di * di;
        }
        Ok(d2.sqrt())
    }

    pub fn margin(&self, chart: usize, x: &[f64]) -> f64 {
        (self.charts[chart].margin)(x)
    }
}

/// Point on a curve: chart, coordinates, velocity in chart coordinates.
#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub chart: usize,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

type SegmentEval = Arc<dyn Fn(f64) -> (Vec<f64>, Vec<f64>) + Send + Sync>;

/// One smooth piece of a curve, evaluated in a fixed chart. The evaluator
/// takes the *global* curve parameter.
#[derive(Clone)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub chart: usize,
    pub eval: SegmentEval,
}

/// Piecewise-smooth parametric curve `[0, 1] -> M` with an explicit chart
/// itinerary.
#[derive(Clone)]
pub struct SampledCurve {
    pub atlas: Arc<Atlas>,
    pub segments: Vec<Segment>,
    pub samples_per_segment: usize,
}

impl SampledCurve {
    pub fn new(atlas: Arc<Atlas>, segments: Vec<Segment>) -> SampledCurve {
        assert!(!segments.is_empty());
        SampledCurve { atlas, segments, samples_per_segment: 32 }
    }

    /// Single-segment curve on one chart.
    pub fn single(
        atlas: Arc<Atlas>,
        chart: usize,
        eval: impl Fn(f64) -> (Vec<f64>, Vec<f64>) + Send + Sync + 'static,
    ) -> SampledCurve {
        SampledCurve::new(
            atlas,
            vec![Segment { t0: 0.0, t1: 1.0, chart, eval: Arc::new(eval) }],
        )
    }

    pub fn constant(atlas: Arc<Atlas>, chart: usize, x: Vec<f64>) -> SampledCurve {
        let dim = x.len();
        SampledCurve::single(atlas, chart, move |_| (x.clone(), vec![0.0; dim]))
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut bps: Vec<f64> = self.segments.iter().map(|s| s.t0).collect();
        bps.push(1.0);
        bps
    }

    fn segment_index(&self, t: f64) -> usize {
        if t >= 1.0 {
            return self.segments.len() - 1;
        }
        match self
            .segments
            .binary_search_by(|s| s.t0.partial_cmp(&t).unwrap())
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => {
                if t < self.segments[i - 1].t1 {
                    i - 1
                } else {
                    i.min(self.segments.len() - 1)
                }
            }
        }
    }

    pub fn point_at(&self, t: f64) -> CurvePoint {
        let seg = &self.segments[self.segment_index(t)];
        let (x, v) = (seg.eval)(t);
        CurvePoint { chart: seg.chart, x, v }
    }

    pub fn start(&self) -> CurvePoint {
        self.point_at(0.0)
    }

    pub fn end(&self) -> CurvePoint {
        self.point_at(1.0)
    }

    pub fn is_loop(&self, tol: f64) -> bool {
        let a = self.start();
        let b = self.end();
        match self.atlas.point_distance(a.chart, &a.x, b.chart, &b.x) {
            Ok(d) => d <= tol,
            Err(_) => false,
        }
    }

    /// Largest coordinate jump across segment boundaries (after mapping to a
    /// common chart). Piecewise smoothness demands this be ~0.
    pub fn continuity_residual(&self) -> Result<f64, GeometryError> {
        let mut worst = 0.0f64;
        for w in self.segments.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let (xa, _) = (a.eval)(a.t1);
            let (xb, _) = (b.eval)(b.t0);
            let d = self.atlas.point_distance(a.chart, &xa, b.chart, &xb)?;
            worst = worst.max(d);
        }
        Ok(worst)
    }

    /// Domain margins along the itinerary; errors if any sampled point falls
    /// outside its declared chart.
    pub fn check_chart_cover(&self) -> Result<(), GeometryError> {
        for seg in &self.segments {
            for k in 0..=self.samples_per_segment {
                let t = seg.t0 + (seg.t1 - seg.t0) * k as f64 / self.samples_per_segment as f64;
                let (x, _) = (seg.eval)(t);
                if self.atlas.margin(seg.chart, &x) <= 0.0 {
                    return Err(GeometryError::ChartGap { t });
                }
            }
        }
        Ok(())
    }
}

/// Composite `(gamma2 o gamma1)(t)` traced as `gamma1(2t)` then
/// `gamma2(2t - 1)`, with a breakpoint at 1/2.
pub fn concat(g1: &SampledCurve, g2: &SampledCurve) -> Result<SampledCurve, GeometryError> {
    let e1 = g1.end();
    let s2 = g2.start();
    let dist = g1.atlas.point_distance(e1.chart, &e1.x, s2.chart, &s2.x)?;
    if dist > CONTINUITY_TOL {
        return Err(GeometryError::EndpointMismatch { dist });
    }
    let mut segments = Vec::new();
    for seg in &g1.segments {
        let eval = seg.eval.clone();
        segments.push(Segment {
            t0: seg.t0 / 2.0,
            t1: seg.t1 / 2.0,
            chart: seg.chart,
            eval: Arc::new(move |t: f64| {
                let (x, v) = eval(2.0 * t);
                (x, v.iter().map(|c| 2.0 * c).collect())
            }),
        });
    }
    for seg in &g2.segments {
        let eval = seg.eval.clone();
        segments.push(Segment {
            t0: 0.5 + seg.t0 / 2.0,
            t1: 0.5 + seg.t1 / 2.0,
            chart: seg.chart,
            eval: Arc::new(move |t: f64| {
                let (x, v) = eval(2.0 * t - 1.0);
                (x, v.iter().map(|c| 2.0 * c).collect())
            }),
        });
    }
    Ok(SampledCurve {
        atlas: g1.atlas.clone(),
        segments,
        samples_per_segment: g1.samples_per_segment,
    })
}

/// Parameter-reversed curve `t -> gamma(1 - t)` with negated velocities.
pub fn reverse(g: &SampledCurve) -> SampledCurve {
    let mut segments = Vec::with_capacity(g.segments.len());
    for seg in g.segments.iter().rev() {
        let eval = seg.eval.clone();
        segments.push(Segment {
            t0: 1.0 - seg.t1,
            t1: 1.0 - seg.t0,
            chart: seg.chart,
            eval: Arc::new(move |t: f64| {
                let (x, v) = eval(1.0 - t);
                (x, v.iter().map(|c| -c).collect())
            }),
        });
    }
    SampledCurve { atlas: g.atlas.clone(), segments, samples_per_segment: g.samples_per_segment }
}

/// A one-parameter family of loops (a homotopy), `s in [0, 1]` indexing the
/// family. Slices must be valid loops.
#[derive(Clone)]
pub struct LoopFamily {
    slice_fn: Arc<dyn Fn(f64) -> SampledCurve + Send + Sync>,
    pub grid_s: usize,
    pub grid_t: usize,
}

impl LoopFamily {
    pub fn new(slice_fn: impl Fn(f64) -> SampledCurve + Send + Sync + 'static) -> LoopFamily {
        LoopFamily { slice_fn: Arc::new(slice_fn), grid_s: 64, grid_t: 256 }
    }

    pub fn with_grid(mut self, grid_s: usize, grid_t: usize) -> LoopFamily {
        self.grid_s = grid_s;
        self.grid_t = grid_t;
        self
    }

    pub fn slice(&self, s: f64) -> SampledCurve {
        (self.slice_fn)(s)
    }

    pub fn validate(&self, tol: f64) -> Result<(), GeometryError> {
        for k in 0..=self.grid_s {
            let s = k as f64 / self.grid_s as f64;
            let c = self.slice(s);
            c.check_chart_cover()?;
            if !c.is_loop(tol) {
                let a = c.start();
                let b = c.end();
                let dist = c.atlas.point_distance(a.chart, &a.x, b.chart, &b.x)?;
                return Err(GeometryError::NotALoop { dist });
            }
        }
        Ok(())
    }
}

/// Build the chart itinerary for a curve given per-chart candidate
/// evaluations: at each scan point the chart with the largest positive
/// margin wins, ties broken by lowest chart id. Crossing parameters are
/// refined by bisection on the margin difference.
pub fn auto_itinerary(
    atlas: Arc<Atlas>,
    eval_in_chart: impl Fn(usize, f64) -> Option<(Vec<f64>, Vec<f64>)> + Send + Sync + 'static,
    scan: usize,
) -> Result<SampledCurve, GeometryError> {
    let eval = Arc::new(eval_in_chart);
    let n_charts = atlas.charts.len();
    let best = |t: f64| -> Option<usize> {
        let mut winner: Option<(usize, f64)> = None;
        for c in 0..n_charts {
            if let Some((x, _)) = eval(c, t) {
                let m = atlas.margin(c, &x);
                if m > 0.0 {
                    match winner {
                        Some((_, wm)) if wm >= m => {}
                        _ => winner = Some((c, m)),
                    }
                }
            }
        }
        winner.map(|(c, _)| c)
    };

    let mut cuts: Vec<(f64, usize)> = Vec::new();
    let mut prev = best(0.0).ok_or(GeometryError::ChartGap { t: 0.0 })?;
    cuts.push((0.0, prev));
    for k in 1..=scan {
        let t = k as f64 / scan as f64;
        let cur = best(t).ok_or(GeometryError::ChartGap { t })?;
        if cur != prev {
            // refine crossing in (t - 1/scan, t)
            let (mut lo, mut hi) = (t - 1.0 / scan as f64, t);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                match best(mid) {
                    Some(c) if c == prev => lo = mid,
                    Some(_) => hi = mid,
                    None => return Err(GeometryError::ChartGap { t: mid }),
                }
            }
            cuts.push((hi, cur));
            prev = cur;
        }
    }

    let mut segments = Vec::new();
    for (i, (t0, chart)) in cuts.iter().enumerate() {
        let t1 = if i + 1 < cuts.len() { cuts[i + 1].0 } else { 1.0 };
        let chart = *chart;
        let eval = eval.clone();
        segments.push(Segment {
            t0: *t0,
            t1,
            chart,
            eval: Arc::new(move |t: f64| eval(chart, t).expect("point left its chart")),
        });
    }
    Ok(SampledCurve::new(atlas, segments))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane() -> Arc<Atlas> {
        Arc::new(Atlas::new(
            "plane",
            2,
            vec![Chart { id: 0, margin: Arc::new(|_| 1.0), periods: vec![None, None] }],
        ))
    }

    fn quarter_circle(start_angle: f64) -> SampledCurve {
        SampledCurve::single(plane(), 0, move |t| {
            use std::f64::consts::FRAC_PI_2;
            let a = start_angle + FRAC_PI_2 * t;
            (vec![a.cos(), a.sin()], vec![-FRAC_PI_2 * a.sin(), FRAC_PI_2 * a.cos()])
        })
    }

    #[test]
    fn concat_traces_both_pieces() {
        let c1 = quarter_circle(0.0);
        let c2 = quarter_circle(std::f64::consts::FRAC_PI_2);
        let half = concat(&c1, &c2).unwrap();
        // pointwise equality with the half circle
        for k in 0..=40 {
            let t = k as f64 / 40.0;
            let p = half.point_at(t);
            let a = std::f64::consts::PI * t;
            assert!((p.x[0] - a.cos()).abs() < 1e-12 && (p.x[1] - a.sin()).abs() < 1e-12);
        }
        assert!(half.continuity_residual().unwrap() < 1e-12);
    }

    #[test]
    fn concat_with_constant_is_stationary_after_half() {
        let c1 = quarter_circle(0.0);
        let e = c1.end();
        let cst = SampledCurve::constant(plane(), 0, e.x.clone());
        let c = concat(&c1, &cst).unwrap();
        let p = c.point_at(0.75);
        assert!((p.x[0] - e.x[0]).abs() < 1e-14 && (p.x[1] - e.x[1]).abs() < 1e-14);
    }

    #[test]
    fn concat_rejects_mismatched_endpoints() {
        let c1 = quarter_circle(0.0);
        let c2 = quarter_circle(2.0);
        assert!(matches!(concat(&c1, &c2), Err(GeometryError::EndpointMismatch { .. })));
    }

    #[test]
    fn concat_with_reverse_is_a_loop() {
        let c = quarter_circle(0.3);
        let loopc = concat(&c, &reverse(&c)).unwrap();
        assert!(loopc.is_loop(1e-12));
    }

    #[test]
    fn reverse_is_an_involution() {
        let c = quarter_circle(0.1);
        let rr = reverse(&reverse(&c));
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            let a = c.point_at(t);
            let b = rr.point_at(t);
            assert!((a.x[0] - b.x[0]).abs() < 1e-12);
            assert!((a.v[1] - b.v[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn reverse_straight_segment() {
        let c = SampledCurve::single(plane(), 0, |t| (vec![t, 0.0], vec![1.0, 0.0]));
        let r = reverse(&c);
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            let p = r.point_at(t);
            assert!((p.x[0] - (1.0 - t)).abs() < 1e-14);
            assert!((p.v[0] + 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn periodic_distance_identifies_full_turns() {
        use std::f64::consts::TAU;
        let circle = Arc::new(Atlas::new(
            "circle",
            1,
            vec![Chart { id: 0, margin: Arc::new(|_| 1.0), periods: vec![Some(TAU)] }],
        ));
        let d = circle.point_distance(0, &[0.1], 0, &[0.1 + TAU]).unwrap();
        assert!(d < 1e-12);
    }
}
