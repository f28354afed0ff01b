//! Quadrature over the standard simplex and its oriented boundary faces.
//!
//! The simplex is `Δ_n = {0 <= t_1 <= ... <= t_n <= 1}`, oriented by
//! `dt_1 ∧ ... ∧ dt_n`. Integration uses iterated 1-D Gauss–Legendre rules
//! with variable upper bounds, matching the iterated-bounds convention
//! `∫_0^1 dt_n ∫_0^{t_n} dt_{n-1} ... ∫_0^{t_2} dt_1`.

use super::GeometryError;

/// Gauss–Legendre nodes/weights on [0, 1], found by Newton iteration on the
/// Legendre polynomial.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Initial guess on [-1, 1].
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map to [0, 1]; reverse order so nodes ascend.
        nodes[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Quadrature description of `Δ_n` with the standard (+1) orientation.
#[derive(Clone)]
pub struct SimplexGrid {
    pub n: usize,
    pub resolution: usize,
    pub orientation_sign: f64,
    nodes_1d: Vec<f64>,
    weights_1d: Vec<f64>,
}

impl SimplexGrid {
    pub fn new(n: usize, resolution: usize) -> Result<SimplexGrid, GeometryError> {
        if resolution < 2 {
            return Err(GeometryError::ResolutionTooSmall { got: resolution });
        }
        let (nodes_1d, weights_1d) = gauss_legendre_unit(resolution);
        Ok(SimplexGrid { n, resolution, orientation_sign: 1.0, nodes_1d, weights_1d })
    }

    /// Visit every quadrature node `(t_1..t_n)` with its weight.
    pub fn foreach_node(&self, mut f: impl FnMut(&[f64], f64)) {
        let mut ts = vec![0.0; self.n];
        self.recurse(self.n, 1.0, 1.0, &mut ts, &mut f);
    }

    fn recurse(
        &self,
        level: usize,
        upper: f64,
        weight: f64,
        ts: &mut [f64],
        f: &mut impl FnMut(&[f64], f64),
    ) {
        if level == 0 {
            f(ts, weight);
            return;
        }
        for k in 0..self.resolution {
            let t = upper * self.nodes_1d[k];
            let w = upper * self.weights_1d[k];
            ts[level - 1] = t;
            self.recurse(level - 1, t, weight * w, ts, f);
        }
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let mut acc = 0.0;
        self.foreach_node(|ts, w| acc += w * f(ts));
        acc * self.orientation_sign
    }

    pub fn volume(&self) -> f64 {
        self.integrate(|_| 1.0)
    }
}

/// `∫_{Δ_n} f dvol` by iterated Gauss–Legendre with `resolution` nodes per
/// axis.
pub fn simplex_integrate(
    n: usize,
    resolution: usize,
    f: impl Fn(&[f64]) -> f64,
) -> Result<f64, GeometryError> {
    Ok(SimplexGrid::new(n, resolution)?.integrate(f))
}

/// Visitor form used by matrix-valued integrands.
pub fn foreach_simplex_node(
    n: usize,
    resolution: usize,
    f: impl FnMut(&[f64], f64),
) -> Result<(), GeometryError> {
    SimplexGrid::new(n, resolution)?.foreach_node(f);
    Ok(())
}

/// Fubini-permuted evaluation: integrate `t_pivot` outermost, the lower
/// block `t_1..t_{pivot-1}` over the simplex scaled to `[0, t_pivot]` and
/// the upper block `t_{pivot+1}..t_n` over the "anti-simplex"
/// `t_pivot <= t_{pivot+1} <= ... <= t_n <= 1`.
pub fn simplex_integrate_pivot(
    n: usize,
    pivot: usize,
    resolution: usize,
    f: impl Fn(&[f64]) -> f64,
) -> Result<f64, GeometryError> {
    assert!(pivot >= 1 && pivot <= n);
    if resolution < 2 {
        return Err(GeometryError::ResolutionTooSmall { got: resolution });
    }
    let (nodes, weights) = gauss_legendre_unit(resolution);
    let mut ts = vec![0.0; n];
    let mut acc = 0.0;

    // recursive descending-upper-bound block for the lower indices
    fn lower_block(
        level: usize,
        upper: f64,
        weight: f64,
        ts: &mut [f64],
        nodes: &[f64],
        weights: &[f64],
        upper_cb: &mut dyn FnMut(&mut [f64], f64),
    ) {
        if level == 0 {
            upper_cb(ts, weight);
            return;
        }
        for k in 0..nodes.len() {
            let t = upper * nodes[k];
            let w = upper * weights[k];
            ts[level - 1] = t;
            lower_block(level - 1, t, weight * w, ts, nodes, weights, upper_cb);
        }
    }

    // recursive ascending block: t_{i+1} in [lo, 1], t_{i+2} in [t_{i+1}, 1]...
    #[allow(clippy::too_many_arguments)]
    fn upper_block(
        idx: usize,
        n: usize,
        lo: f64,
        weight: f64,
        ts: &mut [f64],
        nodes: &[f64],
        weights: &[f64],
        f: &dyn Fn(&[f64]) -> f64,
        acc: &mut f64,
    ) {
        if idx == n {
            *acc += weight * f(ts);
            return;
        }
        let span = 1.0 - lo;
        for k in 0..nodes.len() {
            let t = lo + span * nodes[k];
            let w = span * weights[k];
            ts[idx] = t;
            upper_block(idx + 1, n, t, weight * w, ts, nodes, weights, f, acc);
        }
    }

    for k in 0..resolution {
        let tp = nodes[k];
        let wp = weights[k];
        ts[pivot - 1] = tp;
        let mut with_lower = |ts: &mut [f64], w_low: f64| {
            upper_block(pivot, n, tp, wp * w_low, ts, &nodes, &weights, &f, &mut acc);
        };
        let mut ts_local = ts.clone();
        lower_block(pivot - 1, tp, 1.0, &mut ts_local, &nodes, &weights, &mut with_lower);
    }
    Ok(acc)
}

/// One oriented boundary face of `Δ_n`.
pub struct BoundaryFace {
    pub alpha: usize,
    pub sign: f64,
    embed: Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl BoundaryFace {
    /// Embed a point of `Δ_{n-1}` into the face.
    pub fn embed(&self, s: &[f64]) -> Vec<f64> {
        (self.embed)(s)
    }
}

/// The `n + 1` boundary faces of `Δ_n` with orientation signs `(-1)^{α+1}`:
/// face `α = 0` is `t_1 = 0`, faces `α = 1..n-1` are `t_α = t_{α+1}`
/// (the coordinate `s_α` is doubled), face `α = n` is `t_n = 1`.
pub fn boundary_faces(n: usize) -> Vec<BoundaryFace> {
    assert!(n >= 1);
    let mut faces = Vec::with_capacity(n + 1);
    for alpha in 0..=n {
        let sign = if (alpha + 1) % 2 == 0 { 1.0 } else { -1.0 };
        let embed: Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync> = if alpha == 0 {
            Box::new(move |s: &[f64]| {
                let mut t = Vec::with_capacity(s.len() + 1);
                t.push(0.0);
                t.extend_from_slice(s);
                t
            })
        } else if alpha == n {
            Box::new(move |s: &[f64]| {
                let mut t = Vec::with_capacity(s.len() + 1);
                t.extend_from_slice(s);
                t.push(1.0);
                t
            })
        } else {
            Box::new(move |s: &[f64]| {
                let mut t = Vec::with_capacity(s.len() + 1);
                t.extend_from_slice(&s[..alpha]);
                t.push(s[alpha - 1]);
                t.extend_from_slice(&s[alpha..]);
                t
            })
        };
        faces.push(BoundaryFace { alpha, sign, embed });
    }
    faces
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product::<f64>().max(1.0)
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre_unit(6);
        for k in 0..=11 {
            let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k)).sum();
            let expected = 1.0 / (k as f64 + 1.0);
            assert!((got - expected).abs() < 1e-14, "degree {k}");
        }
    }

    #[test]
    fn simplex_volumes_are_inverse_factorials() {
        for n in 1..=5 {
            let vol = simplex_integrate(n, 8, |_| 1.0).unwrap();
            assert!((vol - 1.0 / factorial(n)).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn iterated_bounds_example() {
        // f = t1 t2 over the triangle: 1/8
        let got = simplex_integrate(2, 12, |t| t[0] * t[1]).unwrap();
        assert!((got - 0.125).abs() < 1e-13);
    }

    #[test]
    fn resolution_guard() {
        assert!(matches!(
            simplex_integrate(2, 1, |_| 1.0),
            Err(GeometryError::ResolutionTooSmall { .. })
        ));
    }

    #[test]
    fn fubini_pivot_agrees() {
        let f = |t: &[f64]| (1.3 * t[0]).sin() + t[1] * t[2] + t[2].powi(3);
        let base = simplex_integrate(3, 16, f).unwrap();
        for pivot in 1..=3 {
            let alt = simplex_integrate_pivot(3, pivot, 16, f).unwrap();
            assert!((base - alt).abs() < 1e-8, "pivot {pivot}: {base} vs {alt}");
        }
    }

    #[test]
    fn face_signs_for_low_dimensions() {
        let f1 = boundary_faces(1);
        assert_eq!(f1.len(), 2);
        assert_eq!((f1[0].alpha, f1[0].sign as i32), (0, -1));
        assert_eq!((f1[1].alpha, f1[1].sign as i32), (1, 1));
        assert_eq!(f1[0].embed(&[]), vec![0.0]);
        assert_eq!(f1[1].embed(&[]), vec![1.0]);

        let f2 = boundary_faces(2);
        let signs: Vec<i32> = f2.iter().map(|f| f.sign as i32).collect();
        assert_eq!(signs, vec![-1, 1, -1]);
        assert_eq!(f2[1].embed(&[0.3]), vec![0.3, 0.3]);
    }

    #[test]
    fn discrete_stokes_on_triangle() {
        // omega = t1 dt2, d omega = dt1 ∧ dt2.
        let lhs = simplex_integrate(2, 12, |_| 1.0).unwrap();
        let mut rhs = 0.0;
        for face in boundary_faces(2) {
            // pull back omega = t1 dt2 along s -> embed(s)
            let h = 1e-6;
            let pull = |s: f64| {
                let t = face.embed(&[s]);
                let tp = face.embed(&[s + h]);
                let tm = face.embed(&[s - h]);
                let dt2 = (tp[1] - tm[1]) / (2.0 * h);
                t[0] * dt2
            };
            let (x, w) = gauss_legendre_unit(12);
            let integral: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * pull(*xi)).sum();
            rhs += face.sign * integral;
        }
        assert!((lhs - rhs).abs() < 1e-6, "{lhs} vs {rhs}");
    }
}
