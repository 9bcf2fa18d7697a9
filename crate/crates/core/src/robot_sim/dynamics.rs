//! Planar serial chain of uniform slender rods, pivoted at one end, with
//! the center of mass at mid-length and inertia `mL²/12` about it.

use nalgebra::{DMatrix, DVector};

use crate::synthesis::PlantModel;

/// Lengths and masses of a planar chain of uniform rods.
#[derive(Debug, Clone, Copy)]
pub struct Links<'a> {
    pub length: &'a [f64],
    pub mass: &'a [f64],
}

impl<'a> Links<'a> {
    pub fn of(model: &'a PlantModel, use_measured: bool) -> Self {
        if use_measured {
            Links {
                length: &model.measured_length,
                mass: &model.measured_mass,
            }
        } else {
            Links {
                length: &model.length,
                mass: &model.mass,
            }
        }
    }

    fn n(&self) -> usize {
        self.length.len()
    }

    /// Lever arm of link `j` in the velocity of the center of mass of link `i` (`j ≤ i`).
    fn arm(&self, i: usize, j: usize) -> f64 {
        if j < i {
            self.length[j]
        } else {
            0.5 * self.length[i]
        }
    }
}

/// Absolute angle differences `φ_j − φ_k` with `φ_j = θ_1 + … + θ_j`.
fn abs_angles(q: &[f64]) -> Vec<f64> {
    q.iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// Mass matrix of the chain.
pub fn chain_mass_matrix(links: Links<'_>, q: &[f64]) -> DMatrix<f64> {
    let n = links.n();
    let phi = abs_angles(q);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let inertia = links.mass[i] * links.length[i].powi(2) / 12.0;
        for a in 0..=i {
            for b in 0..=a {
                // J_a · J_b for the center of mass of link i.
                let mut dot = 0.0;
                for j in a..=i {
                    for k in b..=i {
                        dot += links.arm(i, j) * links.arm(i, k) * (phi[j] - phi[k]).cos();
                    }
                }
                m[(a, b)] += links.mass[i] * dot + inertia;
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            m[(b, a)] = m[(a, b)];
        }
    }
    m
}

/// `∂M/∂θ_c` for every joint `c`.
pub fn chain_mass_partials(links: Links<'_>, q: &[f64]) -> Vec<DMatrix<f64>> {
    let n = links.n();
    let phi = abs_angles(q);
    let mut out = vec![DMatrix::zeros(n, n); n];
    for (c, dm) in out.iter_mut().enumerate() {
        for i in 0..n {
            for a in 0..=i {
                for b in 0..=a {
                    let mut d = 0.0;
                    for j in a..=i {
                        for k in b..=i {
                            let dj = (c <= j) as i32 - (c <= k) as i32;
                            if dj != 0 {
                                d -= links.arm(i, j) * links.arm(i, k) * (phi[j] - phi[k]).sin() * dj as f64;
                            }
                        }
                    }
                    dm[(a, b)] += links.mass[i] * d;
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                dm[(b, a)] = dm[(a, b)];
            }
        }
    }
    out
}

/// `Ṁ = Σ_c (∂M/∂θ_c) θ̇_c`.
pub fn chain_mass_rate(links: Links<'_>, q: &[f64], qd: &[f64]) -> DMatrix<f64> {
    let partials = chain_mass_partials(links, q);
    let n = links.n();
    partials
        .iter()
        .zip(qd)
        .fold(DMatrix::zeros(n, n), |acc, (dm, v)| acc + dm * *v)
}

/// `f_non = −C(q, q̇) q̇` with `C` from the Christoffel symbols of `M`:
/// `(Cq̇)_k = Σ_{ij} (∂M_kj/∂θ_i − ½ ∂M_ij/∂θ_k) q̇_i q̇_j`.
pub fn chain_nonlinear_forces(links: Links<'_>, q: &[f64], qd: &[f64]) -> DVector<f64> {
    let partials = chain_mass_partials(links, q);
    let n = links.n();
    let qd_v = DVector::from_column_slice(qd);
    let m_dot = partials
        .iter()
        .zip(qd)
        .fold(DMatrix::zeros(n, n), |acc, (dm, v)| acc + dm * *v);
    let mut h = &m_dot * &qd_v;
    for (k, dm) in partials.iter().enumerate() {
        h[k] -= 0.5 * qd_v.dot(&(dm * &qd_v));
    }
    -h
}

pub fn mass_matrix(model: &PlantModel, q: &[f64], use_measured: bool) -> DMatrix<f64> {
    chain_mass_matrix(Links::of(model, use_measured), q)
}

pub fn nonlinear_forces(model: &PlantModel, q: &[f64], qd: &[f64], use_measured: bool) -> DVector<f64> {
    chain_nonlinear_forces(Links::of(model, use_measured), q, qd)
}

pub fn mass_matrix_rate(model: &PlantModel, q: &[f64], qd: &[f64], use_measured: bool) -> DMatrix<f64> {
    chain_mass_rate(Links::of(model, use_measured), q, qd)
}
