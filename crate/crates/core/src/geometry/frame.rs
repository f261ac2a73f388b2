//! Normal frames along the core curve.

use serde::{Deserialize, Serialize};

use super::curve::{add, cross, dot, norm, scale, sub, ArclengthCurve, CurveSpec, Vec3};
use crate::error::{Error, Result};
use crate::fourier::PeriodicLine;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FrameChoice {
    #[default]
    Parallel,
    Frenet,
}

/// Ambient Riemann tensor in the adapted orthonormal frame (index 0 is the tangent).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AmbientCurvature {
    #[default]
    Flat,
    /// Constant sectional curvature K: R_abcd = K(δ_ac δ_bd − δ_ad δ_bc).
    Constant { sectional: f64 },
}

impl AmbientCurvature {
    pub fn riemann(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        match self {
            AmbientCurvature::Flat => 0.0,
            AmbientCurvature::Constant { sectional } => {
                let k = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
                sectional * (k(a, c) * k(b, d) - k(a, d) * k(b, c))
            }
        }
    }

    pub fn is_flat(&self) -> bool {
        match self {
            AmbientCurvature::Flat => true,
            AmbientCurvature::Constant { sectional } => *sectional == 0.0,
        }
    }
}

/// Arclength-tabulated frame {T, ν_1, …, ν_codim} with curvature and connection data.
#[derive(Clone, Debug)]
pub struct FermiFrame {
    pub curve: ArclengthCurve,
    pub choice: FrameChoice,
    pub codim: usize,
    /// `normals[j][α]`
    pub normals: Vec<Vec<Vec3>>,
    /// `kappa[j][α] = ⟨T', ν_α⟩`
    pub kappa: Vec<Vec<f64>>,
    /// `connection[j][σ * codim + α] = ⟨ν_σ, ν_α'⟩`
    pub connection: Vec<Vec<f64>>,
    pub curvature: AmbientCurvature,
    /// Rotation angle picked up by parallel transport over one period, before correction.
    pub closure_defect: f64,
    pub orthonormality_residual: f64,
}

impl FermiFrame {
    pub fn ns(&self) -> usize {
        self.curve.s.len()
    }

    pub fn length(&self) -> f64 {
        self.curve.length
    }

    pub fn max_abs_kappa(&self) -> f64 {
        self.kappa
            .iter()
            .map(|k| k.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn has_connection(&self) -> bool {
        self.connection.iter().flatten().any(|c| *c != 0.0)
    }

    /// Whether κ and the connection coefficients are constant along the curve (to `tol`).
    pub fn is_uniform(&self, tol: f64) -> bool {
        let k0 = &self.kappa[0];
        let c0 = &self.connection[0];
        self.kappa.iter().all(|k| k.iter().zip(k0).all(|(a, b)| (a - b).abs() <= tol))
            && self.connection.iter().all(|c| c.iter().zip(c0).all(|(a, b)| (a - b).abs() <= tol))
    }
}

fn rot90(t: &Vec3) -> Vec3 {
    [-t[1], t[0], 0.0]
}

fn residual(t: &Vec3, normals: &[Vec3]) -> f64 {
    let mut all = vec![*t];
    all.extend_from_slice(normals);
    let mut r: f64 = 0.0;
    for i in 0..all.len() {
        for j in 0..all.len() {
            let target = if i == j { 1.0 } else { 0.0 };
            r = r.max((dot(&all[i], &all[j]) - target).abs());
        }
    }
    r
}

fn unit(v: Vec3) -> Vec3 {
    scale(&v, 1.0 / norm(&v))
}

/// Any unit vector orthogonal to `t`.
fn perpendicular(t: &Vec3) -> Vec3 {
    let mut e = [0.0; 3];
    let i = (0..3).min_by(|&a, &b| t[a].abs().total_cmp(&t[b].abs())).unwrap();
    e[i] = 1.0;
    unit(sub(&e, &scale(t, dot(&e, t))))
}

/// Double-reflection transport of `r` from node j to node j + 1.
fn reflect_step(x0: &Vec3, t0: &Vec3, r0: &Vec3, x1: &Vec3, t1: &Vec3) -> Vec3 {
    let v1 = sub(x1, x0);
    let c1 = dot(&v1, &v1);
    if c1 < 1e-300 {
        return *r0;
    }
    let rl = sub(r0, &scale(&v1, 2.0 * dot(&v1, r0) / c1));
    let tl = sub(t0, &scale(&v1, 2.0 * dot(&v1, t0) / c1));
    let v2 = sub(t1, &tl);
    let c2 = dot(&v2, &v2);
    if c2 < 1e-300 {
        return rl;
    }
    sub(&rl, &scale(&v2, 2.0 * dot(&v2, &rl) / c2))
}

/// Builds the tabulated frame for `spec`.
pub fn build_frame(spec: &CurveSpec, choice: FrameChoice, curvature: AmbientCurvature) -> Result<FermiFrame> {
    let curve = spec.tabulate()?;
    let ns = curve.s.len();
    let codim = spec.codim();
    let mut closure_defect = 0.0;
    let mut twist = 0.0;

    let kappa_norm: Vec<f64> = curve.dtangent.iter().map(norm).collect();
    if choice == FrameChoice::Frenet {
        if let Some(j) = kappa_norm.iter().position(|k| *k < 1e-8) {
            return Err(Error::Curve(format!(
                "Frenet frame undefined: curvature vanishes near s = {:.6}",
                curve.s[j]
            )));
        }
    }

    let normals: Vec<Vec<Vec3>> = if codim == 1 {
        curve.tangent.iter().map(|t| vec![rot90(t)]).collect()
    } else if curve.planar {
        curve.tangent.iter().map(|t| vec![rot90(t), [0.0, 0.0, 1.0]]).collect()
    } else if choice == FrameChoice::Frenet {
        curve
            .tangent
            .iter()
            .zip(&curve.dtangent)
            .map(|(t, dt)| {
                let n = unit(*dt);
                vec![n, cross(t, &n)]
            })
            .collect()
    } else {
        let t0 = curve.tangent[0];
        let first = if kappa_norm[0] > 1e-10 { unit(curve.dtangent[0]) } else { perpendicular(&t0) };
        let mut r = vec![first; ns];
        for j in 0..ns - 1 {
            let next = reflect_step(
                &curve.position[j],
                &curve.tangent[j],
                &r[j],
                &curve.position[j + 1],
                &curve.tangent[j + 1],
            );
            let t1 = curve.tangent[j + 1];
            r[j + 1] = unit(sub(&next, &scale(&t1, dot(&next, &t1))));
        }
        let end = reflect_step(&curve.position[ns - 1], &curve.tangent[ns - 1], &r[ns - 1], &curve.position[0], &t0);
        let b0 = cross(&t0, &first);
        closure_defect = dot(&end, &b0).atan2(dot(&end, &first));
        if closure_defect.abs() > 1e-12 {
            twist = -closure_defect / curve.length;
        }
        (0..ns)
            .map(|j| {
                let t = curve.tangent[j];
                let b = cross(&t, &r[j]);
                let psi = twist * curve.s[j];
                let (sn, cs) = psi.sin_cos();
                let n1 = add(&scale(&r[j], cs), &scale(&b, sn));
                vec![n1, cross(&t, &n1)]
            })
            .collect()
    };

    let kappa: Vec<Vec<f64>> = (0..ns)
        .map(|j| normals[j].iter().map(|n| dot(&curve.dtangent[j], n)).collect())
        .collect();

    let connection = if codim == 1 || curve.planar {
        vec![vec![0.0; codim * codim]; ns]
    } else if choice == FrameChoice::Parallel {
        // only the uniform twist survives: ⟨ν_2, ν_1'⟩ = twist
        vec![vec![0.0, -twist, twist, 0.0]; ns]
    } else {
        let line = PeriodicLine::new(ns, curve.length);
        let mut dn = vec![vec![[0.0; 3]; codim]; ns];
        for a in 0..codim {
            for c in 0..3 {
                let comp: Vec<f64> = normals.iter().map(|n| n[a][c]).collect();
                for (j, d) in line.derivative(&comp).into_iter().enumerate() {
                    dn[j][a][c] = d;
                }
            }
        }
        (0..ns)
            .map(|j| {
                let mut c = vec![0.0; codim * codim];
                // antisymmetrize the spectral estimate
                for s in 0..codim {
                    for a in 0..codim {
                        c[s * codim + a] = 0.5 * (dot(&normals[j][s], &dn[j][a]) - dot(&normals[j][a], &dn[j][s]));
                    }
                }
                c
            })
            .collect()
    };

    let orthonormality_residual =
        (0..ns).map(|j| residual(&curve.tangent[j], &normals[j])).fold(0.0, f64::max);
    if orthonormality_residual > 1e-12 {
        return Err(Error::Curve(format!("frame orthonormality residual {orthonormality_residual:.3e}")));
    }

    Ok(FermiFrame {
        curve,
        choice,
        codim,
        normals,
        kappa,
        connection,
        curvature,
        closure_defect,
        orthonormality_residual,
    })
}
