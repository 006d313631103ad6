//! Density matrices on the spin ⊗ vibration ⊗ field space.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::ModeDistribution;
use crate::hamiltonian::{TripartiteDims, TripartiteOperator, EXCITED, GROUND};
use crate::numeric::{max_abs, NeumaierSum};

/// Largest imaginary residue tolerated when reading off a real expectation.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    /// One spin ⊗ field block per vibrational level, indexed
    /// `s·(N_f+1) + n`. Valid whenever the state has no vibrational
    /// coherences.
    VibBlocks(Vec<DMatrix<C64>>),
    Dense(DMatrix<C64>),
}

/// Joint density operator. Uses the crate-wide basis ordering of
/// [`TripartiteDims`].
#[derive(Clone, Debug, PartialEq)]
pub struct TripartiteState {
    dims: TripartiteDims,
    storage: Storage,
}

impl TripartiteState {
    /// `|e⟩⟨e| ⊗ ρ_v ⊗ ρ_f` with diagonal mode states, embedded into `dims`.
    pub fn product_excited(field: &ModeDistribution, vib: &ModeDistribution, dims: TripartiteDims) -> Result<Self> {
        if vib.cutoff() > dims.n_vib {
            return Err(Error::DimensionMismatch { expected: dims.vib_dim(), actual: vib.cutoff() + 1 });
        }
        if field.cutoff() > dims.n_field {
            return Err(Error::DimensionMismatch { expected: dims.field_dim(), actual: field.cutoff() + 1 });
        }
        let fd = dims.field_dim();
        let blocks = (0..dims.vib_dim())
            .map(|m| {
                let mut b = DMatrix::zeros(2 * fd, 2 * fd);
                let pm = vib.get(m);
                for n in 0..fd {
                    let i = EXCITED * fd + n;
                    b[(i, i)] = C64::new(pm * field.get(n), 0.0);
                }
                b
            })
            .collect();
        Ok(Self { dims, storage: Storage::VibBlocks(blocks) })
    }

    pub(crate) fn from_vib_blocks(dims: TripartiteDims, blocks: Vec<DMatrix<C64>>) -> Self {
        debug_assert_eq!(blocks.len(), dims.vib_dim());
        Self { dims, storage: Storage::VibBlocks(blocks) }
    }

    pub fn from_dense(matrix: DMatrix<C64>, dims: TripartiteDims) -> Result<Self> {
        if matrix.nrows() != dims.dim() || matrix.ncols() != dims.dim() {
            return Err(Error::DimensionMismatch { expected: dims.dim(), actual: matrix.nrows() });
        }
        Ok(Self { dims, storage: Storage::Dense(matrix) })
    }

    pub fn dims(&self) -> TripartiteDims {
        self.dims
    }

    /// Whether the state is held as per-vibrational-level blocks.
    pub fn is_block_diagonal(&self) -> bool {
        matches!(self.storage, Storage::VibBlocks(_))
    }

    /// Spin ⊗ field block of vibrational level `m`, if stored by blocks.
    pub fn vib_block(&self, m: usize) -> Option<&DMatrix<C64>> {
        match &self.storage {
            Storage::VibBlocks(b) => b.get(m),
            Storage::Dense(_) => None,
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::VibBlocks(blocks) => {
                let d = self.dims;
                let fd = d.field_dim();
                let mut out = DMatrix::zeros(d.dim(), d.dim());
                for (m, b) in blocks.iter().enumerate() {
                    for s1 in 0..2 {
                        for n1 in 0..fd {
                            for s2 in 0..2 {
                                for n2 in 0..fd {
                                    out[(d.index(s1, m, n1), d.index(s2, m, n2))] = b[(s1 * fd + n1, s2 * fd + n2)];
                                }
                            }
                        }
                    }
                }
                out
            }
        }
    }

    /// `⟨s₁,m₁,n₁|ρ|s₂,m₂,n₂⟩`.
    pub fn element(&self, bra: (usize, usize, usize), ket: (usize, usize, usize)) -> C64 {
        match &self.storage {
            Storage::Dense(m) => m[(self.dims.index(bra.0, bra.1, bra.2), self.dims.index(ket.0, ket.1, ket.2))],
            Storage::VibBlocks(blocks) => {
                if bra.1 != ket.1 {
                    return C64::new(0.0, 0.0);
                }
                let fd = self.dims.field_dim();
                blocks[bra.1][(bra.0 * fd + bra.2, ket.0 * fd + ket.2)]
            }
        }
    }

    fn diagonal(&self) -> Vec<C64> {
        let d = self.dims;
        (0..d.dim())
            .map(|i| {
                let (s, m, n) = d.labels(i);
                self.element((s, m, n), (s, m, n))
            })
            .collect()
    }

    pub fn trace(&self) -> C64 {
        let diag = self.diagonal();
        C64::new(NeumaierSum::total(diag.iter().map(|z| z.re)), NeumaierSum::total(diag.iter().map(|z| z.im)))
    }

    /// `Tr[σ_z ρ]`. Fails if the imaginary residue exceeds
    /// [`IMAG_RESIDUE_TOL`].
    pub fn inversion(&self) -> Result<f64> {
        let d = self.dims;
        let mut re = NeumaierSum::new();
        let mut im = NeumaierSum::new();
        for (i, z) in self.diagonal().into_iter().enumerate() {
            let sign = if d.labels(i).0 == EXCITED { 1.0 } else { -1.0 };
            re.add(sign * z.re);
            im.add(sign * z.im);
        }
        if im.value().abs() > IMAG_RESIDUE_TOL {
            return Err(Error::NumericalIntegrity(format!("Tr[sigma_z rho] has imaginary residue {:e}", im.value())));
        }
        Ok(re.value())
    }

    /// Populations of the vibrational levels `0..=N_v`.
    pub fn vib_marginal(&self) -> Vec<f64> {
        let d = self.dims;
        let diag = self.diagonal();
        let mut out = vec![NeumaierSum::new(); d.vib_dim()];
        for (i, z) in diag.iter().enumerate() {
            out[d.labels(i).1].add(z.re);
        }
        out.into_iter().map(|s| s.value()).collect()
    }

    /// Distribution of the total excitation `n + s`, indices `0..=N_f+1`.
    pub fn excitation_distribution(&self) -> Vec<f64> {
        let d = self.dims;
        let diag = self.diagonal();
        let mut out = vec![NeumaierSum::new(); d.field_dim() + 1];
        for (i, z) in diag.iter().enumerate() {
            let (s, _, n) = d.labels(i);
            out[n + s].add(z.re);
        }
        out.into_iter().map(|s| s.value()).collect()
    }

    /// `Tr[ρ²]`.
    pub fn purity(&self) -> f64 {
        let sq = |m: &DMatrix<C64>| NeumaierSum::total(m.iter().map(|z| z.norm_sqr()));
        match &self.storage {
            Storage::Dense(m) => sq(m),
            Storage::VibBlocks(b) => NeumaierSum::total(b.iter().map(sq)),
        }
    }

    /// `Tr[Oρ]`.
    pub fn expectation(&self, op: &TripartiteOperator) -> Result<C64> {
        if op.dims() != self.dims {
            return Err(Error::DimensionMismatch { expected: self.dims.dim(), actual: op.dims().dim() });
        }
        let rho = self.to_dense();
        let o = op.matrix();
        let mut re = NeumaierSum::new();
        let mut im = NeumaierSum::new();
        // Tr[Oρ] = Σ_ij O_ij ρ_ji
        for j in 0..rho.ncols() {
            for i in 0..rho.nrows() {
                let z = o[(i, j)] * rho[(j, i)];
                re.add(z.re);
                im.add(z.im);
            }
        }
        Ok(C64::new(re.value(), im.value()))
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        match &self.storage {
            Storage::Dense(m) => max_abs((m - m.adjoint()).iter()),
            Storage::VibBlocks(b) => b.iter().map(|m| max_abs((m - m.adjoint()).iter())).fold(0.0, f64::max),
        }
    }

    /// Smallest eigenvalue of the (Hermitian part of the) density matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let min_of = |m: &DMatrix<C64>| {
            let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
            SymmetricEigen::new(h).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
        };
        match &self.storage {
            Storage::Dense(m) => min_of(m),
            Storage::VibBlocks(b) => b.iter().map(min_of).fold(f64::INFINITY, f64::min),
        }
    }

    /// Off-diagonal atomic block `⟨e, m, n₁|ρ|g, m, n₂⟩` entries are exposed
    /// through [`element`](Self::element); this is the total weight of the
    /// `|e⟩⟨g|` coherences, `Σ |ρ_eg|`.
    pub fn atomic_coherence_weight(&self) -> f64 {
        let d = self.dims;
        let mut s = NeumaierSum::new();
        for i in 0..d.dim() {
            let (si, mi, ni) = d.labels(i);
            if si != EXCITED {
                continue;
            }
            for j in 0..d.dim() {
                let (sj, mj, nj) = d.labels(j);
                if sj == GROUND {
                    s.add(self.element((si, mi, ni), (sj, mj, nj)).norm());
                }
            }
        }
        s.value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_populations, number_populations, ModeTruncation};

    #[test]
    fn product_state_observables() {
        let f = coherent_populations(1.0, ModeTruncation::for_mean(1.0)).unwrap();
        let v = number_populations(2, 3).unwrap();
        let dims = TripartiteDims::new(3, f.cutoff() + 1);
        let rho = TripartiteState::product_excited(&f, &v, dims).unwrap();
        assert!((rho.trace().re - f.retained_mass()).abs() < 1e-15);
        assert!((rho.inversion().unwrap() - f.retained_mass()).abs() < 1e-15);
        assert_eq!(rho.vib_marginal()[2], rho.trace().re);
        assert_eq!(rho.to_dense(), TripartiteState::from_dense(rho.to_dense(), dims).unwrap().to_dense());
        let dense = TripartiteState::from_dense(rho.to_dense(), dims).unwrap();
        assert_eq!(dense.inversion().unwrap(), rho.inversion().unwrap());
        assert!((dense.purity() - rho.purity()).abs() < 1e-15);
    }

    #[test]
    fn ground_and_mixed_inversion() {
        let dims = TripartiteDims::new(1, 1);
        let mut g = DMatrix::zeros(dims.dim(), dims.dim());
        let i = dims.index(GROUND, 1, 0);
        g[(i, i)] = C64::new(1.0, 0.0);
        assert_eq!(TripartiteState::from_dense(g, dims).unwrap().inversion().unwrap(), -1.0);
        let mixed = DMatrix::identity(dims.dim(), dims.dim()) / C64::new(dims.dim() as f64, 0.0);
        assert_eq!(TripartiteState::from_dense(mixed, dims).unwrap().inversion().unwrap(), 0.0);
    }

    #[test]
    fn imaginary_residue_is_rejected() {
        let dims = TripartiteDims::new(0, 0);
        let mut m = DMatrix::zeros(2, 2);
        m[(1, 1)] = C64::new(1.0, 1e-6);
        let err = TripartiteState::from_dense(m, dims).unwrap().inversion().unwrap_err();
        assert!(matches!(err, Error::NumericalIntegrity(_)));
    }

    #[test]
    fn embedding_checks_dimensions() {
        let f = number_populations(3, 3).unwrap();
        let v = number_populations(0, 0).unwrap();
        assert!(TripartiteState::product_excited(&f, &v, TripartiteDims::new(0, 2)).is_err());
    }
}
