//! Closed curves and their arclength tabulation.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

/// Shape of the core curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CurveKind {
    Circle { radius: f64 },
    Ellipse { a: f64, b: f64 },
    Sampled { points: Vec<Vec3> },
    /// Flat product S¹(R) × fiber: a periodic straight line with zero curvature.
    Cylinder { radius: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub kind: CurveKind,
    /// Ambient dimension, 2 or 3. The fiber has dimension `ambient_dim - 1`.
    pub ambient_dim: usize,
    /// Number of arclength nodes.
    pub ns: usize,
}

impl CurveSpec {
    pub fn circle(radius: f64, ambient_dim: usize, ns: usize) -> Self {
        CurveSpec { kind: CurveKind::Circle { radius }, ambient_dim, ns }
    }

    pub fn ellipse(a: f64, b: f64, ambient_dim: usize, ns: usize) -> Self {
        CurveSpec { kind: CurveKind::Ellipse { a, b }, ambient_dim, ns }
    }

    pub fn cylinder(radius: f64, ambient_dim: usize, ns: usize) -> Self {
        CurveSpec { kind: CurveKind::Cylinder { radius }, ambient_dim, ns }
    }

    pub fn codim(&self) -> usize {
        self.ambient_dim - 1
    }

    pub fn is_flat_product(&self) -> bool {
        matches!(self.kind, CurveKind::Cylinder { .. })
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.ambient_dim) {
            return Err(Error::Curve(format!("ambient dimension {} not in {{2,3}}", self.ambient_dim)));
        }
        if self.ns < 16 {
            return Err(Error::Curve(format!("need at least 16 arclength nodes, got {}", self.ns)));
        }
        match &self.kind {
            CurveKind::Circle { radius } | CurveKind::Cylinder { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::Curve(format!("degenerate radius {radius}")));
                }
            }
            CurveKind::Ellipse { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a > 0.0 && *b > 0.0) {
                    return Err(Error::Curve(format!("degenerate semi-axes {a}, {b}")));
                }
            }
            CurveKind::Sampled { points } => {
                if points.len() < 8 {
                    return Err(Error::Curve(format!("need at least 8 samples, got {}", points.len())));
                }
                if self.ambient_dim == 2 && points.iter().any(|p| p[2] != 0.0) {
                    return Err(Error::Curve("planar curve has nonzero third coordinate".into()));
                }
            }
        }
        Ok(())
    }
}

/// A closed curve tabulated at equally spaced arclength nodes.
#[derive(Clone, Debug)]
pub struct ArclengthCurve {
    pub length: f64,
    pub s: Vec<f64>,
    pub position: Vec<Vec3>,
    pub tangent: Vec<Vec3>,
    /// Derivative of the unit tangent with respect to arclength.
    pub dtangent: Vec<Vec3>,
    pub planar: bool,
}

trait Parametric {
    fn d0(&self, t: f64) -> Vec3;
    fn d1(&self, t: f64) -> Vec3;
    fn d2(&self, t: f64) -> Vec3;
}

struct Ellipse {
    a: f64,
    b: f64,
}

impl Parametric for Ellipse {
    fn d0(&self, t: f64) -> Vec3 {
        [self.a * t.cos(), self.b * t.sin(), 0.0]
    }
    fn d1(&self, t: f64) -> Vec3 {
        [-self.a * t.sin(), self.b * t.cos(), 0.0]
    }
    fn d2(&self, t: f64) -> Vec3 {
        [-self.a * t.cos(), -self.b * t.sin(), 0.0]
    }
}

/// Trigonometric interpolant through periodic samples, parameter t ∈ [0, 2π).
struct Trig {
    // (k, cos coefficient, sin coefficient) per component
    modes: Vec<(f64, Vec3, Vec3)>,
    mean: Vec3,
}

impl Trig {
    fn new(points: &[Vec3]) -> Self {
        let m = points.len();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        let mut coef = vec![vec![Complex::new(0.0, 0.0); m]; 3];
        for (c, buf) in coef.iter_mut().enumerate() {
            for (j, p) in points.iter().enumerate() {
                buf[j] = Complex::new(p[c], 0.0);
            }
            fft.process(buf);
        }
        let mf = m as f64;
        let mean = [coef[0][0].re / mf, coef[1][0].re / mf, coef[2][0].re / mf];
        let mut modes = Vec::new();
        for k in 1..=(m - 1) / 2 {
            let mut a = [0.0; 3];
            let mut b = [0.0; 3];
            for c in 0..3 {
                a[c] = 2.0 * coef[c][k].re / mf;
                b[c] = -2.0 * coef[c][k].im / mf;
            }
            modes.push((k as f64, a, b));
        }
        if m % 2 == 0 {
            // Nyquist term kept as a cosine with half weight on both sides
            let k = m / 2;
            let mut a = [0.0; 3];
            for c in 0..3 {
                a[c] = coef[c][k].re / mf;
            }
            modes.push((k as f64, a, [0.0; 3]));
        }
        Trig { modes, mean }
    }

    fn eval(&self, t: f64, order: u32) -> Vec3 {
        let mut out = if order == 0 { self.mean } else { [0.0; 3] };
        let shift = order as f64 * PI / 2.0;
        for (k, a, b) in &self.modes {
            let (s, c) = (k * t + shift).sin_cos();
            let kp = k.powi(order as i32);
            for i in 0..3 {
                out[i] += kp * (a[i] * c + b[i] * s);
            }
        }
        out
    }
}

impl Parametric for Trig {
    fn d0(&self, t: f64) -> Vec3 {
        self.eval(t, 0)
    }
    fn d1(&self, t: f64) -> Vec3 {
        self.eval(t, 1)
    }
    fn d2(&self, t: f64) -> Vec3 {
        self.eval(t, 2)
    }
}

pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn scale(a: &Vec3, f: f64) -> Vec3 {
    [a[0] * f, a[1] * f, a[2] * f]
}

pub(crate) fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

struct ArcTable<'a> {
    curve: &'a dyn Parametric,
    panels: usize,
    gx: Vec<f64>,
    gw: Vec<f64>,
    cumulative: Vec<f64>,
}

impl<'a> ArcTable<'a> {
    fn new(curve: &'a dyn Parametric, panels: usize) -> Self {
        let (gx, gw) = gauss_legendre(16);
        let mut t = ArcTable { curve, panels, gx, gw, cumulative: vec![0.0; panels + 1] };
        let h = 2.0 * PI / panels as f64;
        for p in 0..panels {
            let piece = t.integrate(p as f64 * h, (p + 1) as f64 * h);
            t.cumulative[p + 1] = t.cumulative[p] + piece;
        }
        t
    }

    fn speed(&self, t: f64) -> f64 {
        norm(&self.curve.d1(t))
    }

    fn integrate(&self, a: f64, b: f64) -> f64 {
        let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
        self.gx.iter().zip(&self.gw).map(|(x, w)| w * self.speed(c + r * x)).sum::<f64>() * r
    }

    fn length(&self) -> f64 {
        self.cumulative[self.panels]
    }

    fn arclength(&self, t: f64) -> f64 {
        let h = 2.0 * PI / self.panels as f64;
        let p = ((t / h).floor() as usize).min(self.panels - 1);
        self.cumulative[p] + self.integrate(p as f64 * h, t)
    }

    fn invert(&self, s: f64) -> f64 {
        let mut t = s / self.length() * 2.0 * PI;
        for _ in 0..60 {
            let dt = (self.arclength(t) - s) / self.speed(t);
            t -= dt;
            if dt.abs() < 1e-15 {
                break;
            }
        }
        t
    }
}

fn tabulate(curve: &dyn Parametric, ns: usize, planar: bool) -> Result<ArclengthCurve> {
    let table = ArcTable::new(curve, 128);
    let length = table.length();
    if !(length.is_finite() && length > 1e-12) {
        return Err(Error::Curve("degenerate zero-length curve".into()));
    }
    let mut out = ArclengthCurve {
        length,
        s: Vec::with_capacity(ns),
        position: Vec::with_capacity(ns),
        tangent: Vec::with_capacity(ns),
        dtangent: Vec::with_capacity(ns),
        planar,
    };
    for j in 0..ns {
        let s = length * j as f64 / ns as f64;
        let t = table.invert(s);
        let d1 = curve.d1(t);
        let d2 = curve.d2(t);
        let sp = norm(&d1);
        if sp < 1e-12 {
            return Err(Error::Curve(format!("curve is singular near parameter {t}")));
        }
        let tangent = scale(&d1, 1.0 / sp);
        let along = dot(&d1, &d2);
        let dt = scale(&sub(&scale(&d2, sp * sp), &scale(&d1, along)), 1.0 / sp.powi(4));
        out.s.push(s);
        out.position.push(curve.d0(t));
        out.tangent.push(tangent);
        out.dtangent.push(dt);
    }
    Ok(out)
}

impl CurveSpec {
    /// Tabulates the curve at `ns` equally spaced arclength nodes.
    pub fn tabulate(&self) -> Result<ArclengthCurve> {
        self.validate()?;
        let ns = self.ns;
        match &self.kind {
            CurveKind::Circle { radius } => {
                let r = *radius;
                let length = 2.0 * PI * r;
                let mut c = ArclengthCurve {
                    length,
                    s: vec![],
                    position: vec![],
                    tangent: vec![],
                    dtangent: vec![],
                    planar: true,
                };
                for j in 0..ns {
                    let s = length * j as f64 / ns as f64;
                    let (sn, cs) = (s / r).sin_cos();
                    c.s.push(s);
                    c.position.push([r * cs, r * sn, 0.0]);
                    c.tangent.push([-sn, cs, 0.0]);
                    c.dtangent.push([-cs / r, -sn / r, 0.0]);
                }
                Ok(c)
            }
            CurveKind::Cylinder { radius } => {
                let length = 2.0 * PI * radius;
                let s: Vec<f64> = (0..ns).map(|j| length * j as f64 / ns as f64).collect();
                Ok(ArclengthCurve {
                    length,
                    position: s.iter().map(|&x| [x, 0.0, 0.0]).collect(),
                    tangent: vec![[1.0, 0.0, 0.0]; ns],
                    dtangent: vec![[0.0; 3]; ns],
                    s,
                    planar: true,
                })
            }
            CurveKind::Ellipse { a, b } => tabulate(&Ellipse { a: *a, b: *b }, ns, true),
            CurveKind::Sampled { points } => {
                let mut pts = points.clone();
                let spacing: Vec<f64> =
                    pts.windows(2).map(|w| norm(&sub(&w[1], &w[0]))).collect();
                let mut sorted = spacing.clone();
                sorted.sort_by(f64::total_cmp);
                let median = sorted[sorted.len() / 2];
                if median <= 1e-14 {
                    return Err(Error::Curve("degenerate zero-length curve".into()));
                }
                let gap = norm(&sub(&pts[0], pts.last().unwrap()));
                if gap < 1e-12 * median.max(1.0) {
                    pts.pop();
                } else if gap > 10.0 * median {
                    return Err(Error::Curve(format!(
                        "sample set is not closed: end gap {gap:.3e} vs median spacing {median:.3e}"
                    )));
                }
                let planar = pts.iter().all(|p| p[2] == 0.0);
                tabulate(&Trig::new(&pts), ns, planar)
            }
        }
    }
}
