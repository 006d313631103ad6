//! Brute-force evolution by Hermitian eigendecomposition.
//!
//! `H = V Λ V†` is computed once; any later time is then exact,
//! `ρ(gt) = V e^{−iΛgt} V† ρ(0) V e^{iΛgt} V†`. Every Hamiltonian this crate
//! builds for the oracle is real symmetric, which gets a real orthogonal
//! eigenbasis and real matrix products; complex Hermitian input goes through
//! the general path.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::closed_form::{InversionTrace, Provenance};
use crate::error::{Error, Result};
use crate::fock::ModeDistribution;
use crate::hamiltonian::{TripartiteDims, TripartiteOperator, EXCITED};
use crate::numeric::NeumaierSum;
use crate::state::TripartiteState;

/// Hermiticity tolerance, relative to the largest entry of `H`.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianSource {
    FullH,
    ExpandedH,
    RwaH,
    Other,
}

#[derive(Clone, Debug)]
enum Eigenbasis {
    Real(DMatrix<f64>),
    Complex(DMatrix<C64>),
}

/// Spectral decomposition of a Hermitian Hamiltonian on the tripartite space.
#[derive(Clone, Debug)]
pub struct SpectralPropagator {
    eigenvalues: DVector<f64>,
    basis: Eigenbasis,
    source: HamiltonianSource,
    dims: TripartiteDims,
}

/// Full eigendecomposition. Rejects non-Hermitian input.
pub fn diagonalize(h: &TripartiteOperator, source: HamiltonianSource) -> Result<SpectralPropagator> {
    let scale = h.matrix().iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let deviation = h.hermiticity_deviation();
    if deviation > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { deviation });
    }
    let (eigenvalues, basis) = if h.is_real() {
        let eig = SymmetricEigen::new(h.matrix().map(|z| z.re));
        (eig.eigenvalues, Eigenbasis::Real(eig.eigenvectors))
    } else {
        let eig = SymmetricEigen::new(h.matrix().clone());
        (eig.eigenvalues, Eigenbasis::Complex(eig.eigenvectors))
    };
    Ok(SpectralPropagator { eigenvalues, basis, source, dims: h.dims() })
}

impl SpectralPropagator {
    pub fn eigenvalues(&self) -> &[f64] {
        self.eigenvalues.as_slice()
    }

    pub fn source(&self) -> HamiltonianSource {
        self.source
    }

    pub fn dims(&self) -> TripartiteDims {
        self.dims
    }

    pub fn eigenvectors(&self) -> DMatrix<C64> {
        match &self.basis {
            Eigenbasis::Real(v) => v.map(|x| C64::new(x, 0.0)),
            Eigenbasis::Complex(v) => v.clone(),
        }
    }

    /// `max |VΛV† − H|`.
    pub fn reconstruction_error(&self, h: &TripartiteOperator) -> f64 {
        let v = self.eigenvectors();
        let lambda = DMatrix::from_diagonal(&self.eigenvalues.map(|l| C64::new(l, 0.0)));
        (&v * lambda * v.adjoint() - h.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |V†V − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let v = self.eigenvectors();
        let n = v.ncols();
        (v.adjoint() * &v - DMatrix::<C64>::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Moves `rho0` into the eigenbasis once so that many times can be
    /// evaluated cheaply.
    pub fn prepare(&self, rho0: &TripartiteState) -> Result<PreparedEvolution<'_>> {
        if rho0.dims() != self.dims {
            return Err(Error::DimensionMismatch { expected: self.dims.dim(), actual: rho0.dims().dim() });
        }
        let rho = rho0.to_dense();
        let sigma_z =
            DVector::from_fn(self.dims.dim(), |i, _| if self.dims.labels(i).0 == EXCITED { 1.0 } else { -1.0 });
        let frame = match &self.basis {
            Eigenbasis::Real(v) if rho.iter().all(|z| z.im == 0.0) => {
                let rho_re = rho.map(|z| z.re);
                let rho_eig = v.transpose() * rho_re * v;
                let sz = v.transpose() * DMatrix::from_diagonal(&sigma_z) * v;
                // W(t) = Σ_jk ρ̃_jk σ̃_kj cos((λ_j − λ_k)t)
                let weights = rho_eig.component_mul(&sz);
                Frame::Real { rho_eig, weights }
            }
            _ => {
                let v = self.eigenvectors();
                let rho_eig = v.adjoint() * rho * &v;
                let sz = v.adjoint() * DMatrix::from_diagonal(&sigma_z.map(|x| C64::new(x, 0.0))) * &v;
                // W(t) = φ† M φ with M_jk = ρ̃_jk σ̃_kj and φ_k = e^{iλ_k t}
                let weights = rho_eig.component_mul(&sz.transpose());
                Frame::Complex { rho_eig, weights }
            }
        };
        Ok(PreparedEvolution { prop: self, frame, mass: rho0.trace().re })
    }
}

#[derive(Clone, Debug)]
enum Frame {
    Real { rho_eig: DMatrix<f64>, weights: DMatrix<f64> },
    Complex { rho_eig: DMatrix<C64>, weights: DMatrix<C64> },
}

/// Initial state held in the eigenbasis of a [`SpectralPropagator`].
#[derive(Clone, Debug)]
pub struct PreparedEvolution<'a> {
    prop: &'a SpectralPropagator,
    frame: Frame,
    mass: f64,
}

impl PreparedEvolution<'_> {
    /// `Tr ρ(0)`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Full density matrix at `gt`, back in the number basis.
    pub fn state_at(&self, gt: f64) -> Result<TripartiteState> {
        let lambda = &self.prop.eigenvalues;
        let n = lambda.len();
        let dense = match (&self.frame, &self.prop.basis) {
            (Frame::Real { rho_eig, .. }, Eigenbasis::Real(v)) => {
                let (s, c): (Vec<f64>, Vec<f64>) = lambda.iter().map(|l| (l * gt).sin_cos()).unzip();
                // e^{−i(λ_j − λ_k)t} = (c_j c_k + s_j s_k) − i(s_j c_k − c_j s_k)
                let re = DMatrix::from_fn(n, n, |j, k| rho_eig[(j, k)] * (c[j] * c[k] + s[j] * s[k]));
                let im = DMatrix::from_fn(n, n, |j, k| -rho_eig[(j, k)] * (s[j] * c[k] - c[j] * s[k]));
                let vt = v.transpose();
                let out_re = v * re * &vt;
                let out_im = v * im * &vt;
                DMatrix::from_fn(n, n, |i, j| C64::new(out_re[(i, j)], out_im[(i, j)]))
            }
            (Frame::Complex { rho_eig, .. }, _) => {
                let phase: Vec<C64> = lambda.iter().map(|l| C64::from_polar(1.0, -l * gt)).collect();
                let evolved = DMatrix::from_fn(n, n, |j, k| rho_eig[(j, k)] * phase[j] * phase[k].conj());
                let v = self.prop.eigenvectors();
                &v * evolved * v.adjoint()
            }
            (Frame::Real { .. }, Eigenbasis::Complex(_)) => unreachable!("real frame implies real basis"),
        };
        TripartiteState::from_dense(dense, self.prop.dims)
    }

    /// `Tr[σ_z ρ(gt)]` without leaving the eigenbasis.
    pub fn inversion_at(&self, gt: f64) -> Result<f64> {
        let lambda = &self.prop.eigenvalues;
        match &self.frame {
            Frame::Real { weights, .. } => {
                let (s, c): (Vec<f64>, Vec<f64>) = lambda.iter().map(|l| (l * gt).sin_cos()).unzip();
                let c = DVector::from_vec(c);
                let s = DVector::from_vec(s);
                // cos((λ_j − λ_k)t) = c_j c_k + s_j s_k
                Ok(c.dot(&(weights * &c)) + s.dot(&(weights * &s)))
            }
            Frame::Complex { weights, .. } => {
                let phi = DVector::from_iterator(lambda.len(), lambda.iter().map(|l| C64::from_polar(1.0, l * gt)));
                let w = phi.dotc(&(weights * &phi));
                if w.im.abs() > crate::state::IMAG_RESIDUE_TOL {
                    return Err(Error::NumericalIntegrity(format!("oracle inversion has imaginary part {:e}", w.im)));
                }
                Ok(w.re)
            }
        }
    }

    pub fn inversion_trace(&self, gt_grid: &[f64]) -> Result<InversionTrace> {
        let values = gt_grid.iter().map(|&t| self.inversion_at(t)).collect::<Result<Vec<_>>>()?;
        Ok(InversionTrace { times: gt_grid.to_vec(), values, provenance: Provenance::Oracle, retained_mass: self.mass })
    }
}

/// `e^{−iH gt} ρ₀ e^{iH gt}`.
pub fn oracle_evolve(prop: &SpectralPropagator, rho0: &TripartiteState, gt: f64) -> Result<TripartiteState> {
    prop.prepare(rho0)?.state_at(gt)
}

/// `W = Tr[σ_z ρ]`, refusing states with a significant imaginary residue.
pub fn inversion_from_density(rho: &TripartiteState) -> Result<f64> {
    rho.inversion()
}

/// Initial `|e⟩⟨e| ⊗ ρ_v ⊗ ρ_f` on the oracle space for these distributions:
/// the field gets one level above the distribution's cutoff so that every
/// populated `|e, m, n⟩` keeps its partner `|g, m, n+1⟩`.
pub fn oracle_initial_state(field0: &ModeDistribution, vib0: &ModeDistribution) -> Result<TripartiteState> {
    TripartiteState::product_excited(field0, vib0, oracle_dims(field0, vib0))
}

pub fn oracle_dims(field0: &ModeDistribution, vib0: &ModeDistribution) -> TripartiteDims {
    TripartiteDims::new(vib0.cutoff(), field0.cutoff() + 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub max_abs: f64,
    pub rms: f64,
    pub argmax_gt: f64,
}

/// Pointwise deviation statistics between two traces on the same grid.
pub fn compare_traces(a: &InversionTrace, b: &InversionTrace) -> Result<DeviationReport> {
    if a.times.len() != b.times.len() {
        return Err(Error::GridMismatch(format!("{} vs {} samples", a.times.len(), b.times.len())));
    }
    if let Some((i, _)) = a.times.iter().zip(&b.times).enumerate().find(|(_, (x, y))| x != y) {
        return Err(Error::GridMismatch(format!("sample {i}: {} vs {}", a.times[i], b.times[i])));
    }
    let mut max_abs = 0.0;
    let mut argmax_gt = a.times.first().copied().unwrap_or(0.0);
    let mut sq = NeumaierSum::new();
    for ((t, x), y) in a.times.iter().zip(&a.values).zip(&b.values) {
        let d = (x - y).abs();
        sq.add(d * d);
        if d > max_abs {
            max_abs = d;
            argmax_gt = *t;
        }
    }
    let rms = if a.times.is_empty() { 0.0 } else { (sq.value() / a.times.len() as f64).sqrt() };
    Ok(DeviationReport { max_abs, rms, argmax_gt })
}
