//! Dirichlet spectra of the unit fiber, analytic and discrete.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::TubeGrid;
use crate::operators::{assemble_vertical, Term};

use super::bessel::{bessel_j, bessel_j_zeros};

/// Which fiber ground eigenvalue and state renormalize the family.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Renorm {
    Analytic,
    #[default]
    Discrete,
}

impl Renorm {
    pub fn name(self) -> &'static str {
        match self {
            Renorm::Analytic => "analytic",
            Renorm::Discrete => "discrete",
        }
    }
}

/// One eigenvalue level: J_ν zero number k for the disk, index k for the interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberLevel {
    pub value: f64,
    pub nu: u32,
    pub k: usize,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiberSpectrum {
    pub codim: usize,
    /// Eigenvalues repeated by multiplicity, ascending.
    pub values: Vec<f64>,
    pub levels: Vec<FiberLevel>,
}

/// Lowest `count` Dirichlet eigenvalues of the unit interval (−1,1) or the unit disk.
pub fn fiber_spectrum(codim: usize, count: usize) -> Result<FiberSpectrum> {
    let mut levels = Vec::new();
    match codim {
        1 => {
            for k in 0..count {
                let v = ((k + 1) as f64 * PI / 2.0).powi(2);
                levels.push(FiberLevel { value: v, nu: (k % 2) as u32, k, multiplicity: 1 });
            }
        }
        2 => {
            // Weyl: N(λ) ≈ λ/4 on the unit disk
            let bound = 4.0 * count as f64 + 50.0;
            let mut nu = 0u32;
            loop {
                let first = bessel_j_zeros(nu, 1)?[0];
                if first * first > bound {
                    break;
                }
                let mut n = 4;
                let zs = loop {
                    let zs = bessel_j_zeros(nu, n)?;
                    if zs[n - 1].powi(2) > bound {
                        break zs;
                    }
                    n *= 2;
                };
                for (k, z) in zs.iter().enumerate() {
                    if z * z <= bound {
                        levels.push(FiberLevel { value: z * z, nu, k: k + 1, multiplicity: if nu == 0 { 1 } else { 2 } });
                    }
                }
                nu += 1;
            }
            levels.sort_by(|a, b| a.value.total_cmp(&b.value));
        }
        d => return Err(Error::Unsupported(format!("fiber codimension {d}"))),
    }
    let mut values = Vec::new();
    let mut kept = Vec::new();
    for l in levels {
        if values.len() >= count {
            break;
        }
        for _ in 0..l.multiplicity {
            values.push(l.value);
        }
        kept.push(l);
    }
    values.truncate(count);
    Ok(FiberSpectrum { codim, values, levels: kept })
}

/// Analytic ground eigenvalue: (π/2)² or j₀,₁².
pub fn lambda0(codim: usize) -> Result<f64> {
    Ok(fiber_spectrum(codim, 1)?.values[0])
}

/// Normalized analytic ground state U₀ at a fiber point.
pub fn ground_state(codim: usize, w: [f64; 2]) -> Result<f64> {
    match codim {
        1 => Ok((PI * w[0] / 2.0).cos()),
        2 => {
            let j = bessel_j_zeros(0, 1)?[0];
            let r = (w[0] * w[0] + w[1] * w[1]).sqrt();
            Ok(bessel_j(0, j * r) / (PI.sqrt() * bessel_j(1, j).abs()))
        }
        d => Err(Error::Unsupported(format!("fiber codimension {d}"))),
    }
}

/// Normalized analytic interval eigenfunction number k on (−1,1).
pub fn interval_mode(k: usize, w: f64) -> f64 {
    ((k + 1) as f64 * PI * (w + 1.0) / 2.0).sin()
}

/// Eigenpairs of the discrete fiber Dirichlet Laplacian.
#[derive(Clone, Debug)]
pub struct DiscreteFiber {
    pub values: Vec<f64>,
    /// Nodal eigenvectors on the fiber unknowns, unit in the fiber quadrature.
    pub vectors: Vec<Vec<f64>>,
}

pub fn discrete_fiber_spectrum(grid: &Arc<TubeGrid>) -> Result<DiscreteFiber> {
    let v = assemble_vertical(grid);
    let block = match &v.terms[..] {
        [Term::Fiber(b)] => b[0].to_dense(),
        _ => return Err(Error::Grid("vertical operator has an unexpected form".into())),
    };
    let nf = grid.fiber.len();
    let eig = SymmetricEigen::new(block);
    let mut order: Vec<usize> = (0..nf).collect();
    order.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));
    let mut values = Vec::with_capacity(nf);
    let mut vectors = Vec::with_capacity(nf);
    for (n, &c) in order.iter().enumerate() {
        values.push(eig.eigenvalues[c]);
        let mut u: Vec<f64> = (0..nf).map(|i| eig.eigenvectors[(i, c)] / grid.fiber.weight(i).sqrt()).collect();
        if n == 0 && u.iter().enumerate().map(|(i, x)| x * grid.fiber.weight(i)).sum::<f64>() < 0.0 {
            u.iter_mut().for_each(|x| *x = -*x);
        }
        vectors.push(u);
    }
    Ok(DiscreteFiber { values, vectors })
}

/// λ₀ and the nodal fiber ground state on the unknowns under the chosen convention.
pub fn ground_pair(grid: &Arc<TubeGrid>, renorm: Renorm) -> Result<(f64, Vec<f64>)> {
    match renorm {
        Renorm::Discrete => {
            let f = discrete_fiber_spectrum(grid)?;
            Ok((f.values[0], f.vectors[0].clone()))
        }
        Renorm::Analytic => {
            let d = grid.fiber.codim();
            let u0 = grid.fiber.interior.iter().map(|&n| ground_state(d, grid.fiber.nodes[n])).collect::<Result<Vec<_>>>()?;
            Ok((lambda0(d)?, u0))
        }
    }
}
