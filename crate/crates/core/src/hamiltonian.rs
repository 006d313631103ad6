//! Hamiltonians on the truncated spin ⊗ vibration ⊗ field space.
//!
//! Units: ħ = 1 and every energy is expressed in units of the ion-field
//! coupling `g`, so matrices returned here are `H/g` and evolve in the scaled
//! time `gt`.
//!
//! Basis ordering is fixed crate-wide: the flat index of `|s, m, n⟩` is
//! `s·(N_v+1)(N_f+1) + m·(N_f+1) + n`, with `s = 0` the ground state `|g⟩`
//! and `s = 1` the excited state `|e⟩`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, TruncationSpec};
use crate::numeric::max_abs;

/// Carrier and field frequency used when no other hierarchy is requested.
pub const DEFAULT_OPTICAL_FREQ: f64 = 500.0;
/// Trap frequency used when no other hierarchy is requested.
pub const DEFAULT_TRAP_FREQ: f64 = 50.0;

pub const GROUND: usize = 0;
pub const EXCITED: usize = 1;

/// Physical parameters. `nu`, `omega` and `omega0` are in units of `g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub g: f64,
    pub eta: f64,
    pub nu: f64,
    pub omega: f64,
    pub omega0: f64,
}

impl SystemParams {
    pub fn new(g: f64, eta: f64, nu: f64, omega: f64, omega0: f64) -> Result<Self> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name, reason: format!("{v} must be > 0") })
            }
        };
        positive("g", g)?;
        positive("nu", nu)?;
        positive("omega", omega)?;
        positive("omega0", omega0)?;
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::InvalidParameter { name: "eta", reason: format!("{eta} must be >= 0") });
        }
        Ok(Self { g, eta, nu, omega, omega0 })
    }

    /// Carrier resonance with the default hierarchy ω = ω₀ = 500g, ν = 50g.
    pub fn carrier(eta: f64) -> Result<Self> {
        Self::new(1.0, eta, DEFAULT_TRAP_FREQ, DEFAULT_OPTICAL_FREQ, DEFAULT_OPTICAL_FREQ)
    }

    /// ω₀ − ω in units of g.
    pub fn detuning(&self) -> f64 {
        self.omega0 - self.omega
    }

    /// Effective coupling `1 − η²(1+2m)/2` of vibrational level `m`.
    pub fn coupling_factor(&self, m: usize) -> f64 {
        coupling_factor(self.eta, m as f64)
    }
}

pub(crate) fn coupling_factor(eta: f64, m: f64) -> f64 {
    1.0 - eta * eta * (1.0 + 2.0 * m) / 2.0
}

/// Cutoffs of a spin ⊗ vib ⊗ field space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripartiteDims {
    pub n_vib: usize,
    pub n_field: usize,
}

impl TripartiteDims {
    pub fn new(n_vib: usize, n_field: usize) -> Self {
        Self { n_vib, n_field }
    }

    pub fn vib_dim(&self) -> usize {
        self.n_vib + 1
    }

    pub fn field_dim(&self) -> usize {
        self.n_field + 1
    }

    pub fn dim(&self) -> usize {
        2 * self.vib_dim() * self.field_dim()
    }

    #[inline]
    pub fn index(&self, s: usize, m: usize, n: usize) -> usize {
        s * self.vib_dim() * self.field_dim() + m * self.field_dim() + n
    }

    /// Inverse of [`index`](Self::index).
    pub fn labels(&self, flat: usize) -> (usize, usize, usize) {
        let block = self.vib_dim() * self.field_dim();
        (flat / block, (flat % block) / self.field_dim(), flat % self.field_dim())
    }
}

impl From<TruncationSpec> for TripartiteDims {
    fn from(t: TruncationSpec) -> Self {
        Self::new(t.n_vib, t.n_field)
    }
}

/// Dense operator on the tripartite space.
#[derive(Clone, Debug, PartialEq)]
pub struct TripartiteOperator {
    matrix: DMatrix<C64>,
    dims: TripartiteDims,
}

impl TripartiteOperator {
    pub fn from_matrix(matrix: DMatrix<C64>, dims: TripartiteDims) -> Result<Self> {
        if matrix.nrows() != dims.dim() || matrix.ncols() != dims.dim() {
            return Err(Error::DimensionMismatch { expected: dims.dim(), actual: matrix.nrows() });
        }
        Ok(Self { matrix, dims })
    }

    /// `spin ⊗ vib ⊗ field`.
    pub fn product(spin: &DMatrix<C64>, vib: &DMatrix<C64>, field: &DMatrix<C64>) -> Self {
        let dims = TripartiteDims::new(vib.nrows() - 1, field.nrows() - 1);
        Self { matrix: spin.kronecker(&vib.kronecker(field)), dims }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn dims(&self) -> TripartiteDims {
        self.dims
    }

    pub fn get(&self, bra: (usize, usize, usize), ket: (usize, usize, usize)) -> C64 {
        self.matrix[(self.dims.index(bra.0, bra.1, bra.2), self.dims.index(ket.0, ket.1, ket.2))]
    }

    /// `max |H − H†|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        max_abs((&self.matrix - self.matrix.adjoint()).iter())
    }

    pub fn is_real(&self) -> bool {
        self.matrix.iter().all(|z| z.im == 0.0)
    }

    /// `σ_z = |e⟩⟨e| − |g⟩⟨g|`.
    pub fn sigma_z(dims: TripartiteDims) -> Self {
        Self::diagonal(dims, |s, _, _| if s == EXCITED { 1.0 } else { -1.0 })
    }

    /// `a†a` on the vibrational factor.
    pub fn vib_number(dims: TripartiteDims) -> Self {
        Self::diagonal(dims, |_, m, _| m as f64)
    }

    /// `b†b` on the field factor.
    pub fn field_number(dims: TripartiteDims) -> Self {
        Self::diagonal(dims, |_, _, n| n as f64)
    }

    /// Total excitation `b†b + σ₊σ₋`.
    pub fn excitation_number(dims: TripartiteDims) -> Self {
        Self::diagonal(dims, |s, _, n| (n + s) as f64)
    }

    fn diagonal(dims: TripartiteDims, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut matrix = DMatrix::zeros(dims.dim(), dims.dim());
        for i in 0..dims.dim() {
            let (s, m, n) = dims.labels(i);
            matrix[(i, i)] = C64::new(f(s, m, n), 0.0);
        }
        Self { matrix, dims }
    }
}

/// Operator on spin ⊗ vibration only (the sideband Hamiltonians). Flat index
/// `s·(N_v+1) + m`.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteOperator {
    matrix: DMatrix<C64>,
    n_vib: usize,
}

impl BipartiteOperator {
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn n_vib(&self) -> usize {
        self.n_vib
    }

    pub fn get(&self, bra: (usize, usize), ket: (usize, usize)) -> C64 {
        let d = self.n_vib + 1;
        self.matrix[(bra.0 * d + bra.1, ket.0 * d + ket.1)]
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        max_abs((&self.matrix - self.matrix.adjoint()).iter())
    }
}

pub(crate) fn sigma_plus() -> DMatrix<C64> {
    let mut s = DMatrix::zeros(2, 2);
    s[(EXCITED, GROUND)] = C64::new(1.0, 0.0);
    s
}

pub(crate) fn sigma_minus() -> DMatrix<C64> {
    sigma_plus().adjoint()
}

fn sigma_x() -> DMatrix<C64> {
    sigma_plus() + sigma_minus()
}

fn sigma_z_2() -> DMatrix<C64> {
    let mut s = DMatrix::zeros(2, 2);
    s[(EXCITED, EXCITED)] = C64::new(1.0, 0.0);
    s[(GROUND, GROUND)] = C64::new(-1.0, 0.0);
    s
}

fn field_quadrature(n_field: usize) -> DMatrix<C64> {
    let b = fock::annihilation(n_field).into_matrix();
    &b + b.adjoint()
}

fn free_hamiltonian(params: &SystemParams, dims: TripartiteDims) -> DMatrix<C64> {
    let mut h = DMatrix::zeros(dims.dim(), dims.dim());
    for i in 0..dims.dim() {
        let (s, m, n) = dims.labels(i);
        let spin = if s == EXCITED { 0.5 } else { -0.5 };
        h[(i, i)] = C64::new(params.nu * m as f64 + params.omega * n as f64 + params.omega0 * spin, 0.0);
    }
    h
}

/// `ν a†a + ω b†b + (ω₀/2)σ_z + (σ₊+σ₋)(b†+b) cos η(a†+a)` with the exact
/// cosine operator.
pub fn build_full_hamiltonian(params: &SystemParams, trunc: &TruncationSpec) -> Result<TripartiteOperator> {
    let dims = TripartiteDims::from(*trunc);
    let cos = fock::cosine_position(params.eta, trunc.n_vib)?;
    let coupling = TripartiteOperator::product(&sigma_x(), cos.matrix(), &field_quadrature(trunc.n_field));
    let matrix = free_hamiltonian(params, dims) + coupling.into_matrix();
    Ok(TripartiteOperator { matrix, dims })
}

/// Interaction-only part of the full Hamiltonian with the exact cosine.
pub fn build_full_interaction(params: &SystemParams, trunc: &TruncationSpec) -> Result<TripartiteOperator> {
    let cos = fock::cosine_position(params.eta, trunc.n_vib)?;
    Ok(TripartiteOperator::product(&sigma_x(), cos.matrix(), &field_quadrature(trunc.n_field)))
}

/// `[1 − η²(1+2a†a)/2 − η²(a†²+a²)/2](σ₊+σ₋)(b†+b)`.
pub fn build_expanded_interaction(params: &SystemParams, trunc: &TruncationSpec) -> TripartiteOperator {
    let poly = fock::expanded_cosine(params.eta, trunc.n_vib);
    TripartiteOperator::product(&sigma_x(), poly.matrix(), &field_quadrature(trunc.n_field))
}

/// Carrier-resonance interaction-picture Hamiltonian
/// `[1 − η²(1+2a†a)/2](σ₋b† + σ₊b)`.
///
/// Checks at build time that every nonzero entry connects states with the
/// same vibrational number and the same total excitation `n + s`, which is
/// `[H, a†a] = [H, b†b + σ₊σ₋] = 0` for diagonal operators.
pub fn build_carrier_rwa_interaction(params: &SystemParams, trunc: &TruncationSpec) -> Result<TripartiteOperator> {
    if params.omega0 != params.omega {
        return Err(Error::ResonanceViolation { omega0: params.omega0, omega: params.omega });
    }
    let dims = TripartiteDims::from(*trunc);
    let mut matrix = DMatrix::zeros(dims.dim(), dims.dim());
    for m in 0..=dims.n_vib {
        let f = params.coupling_factor(m);
        for n in 0..dims.n_field {
            // ⟨e,m,n| σ₊b |g,m,n+1⟩ = √(n+1)
            let v = C64::new(f * ((n + 1) as f64).sqrt(), 0.0);
            let e = dims.index(EXCITED, m, n);
            let g = dims.index(GROUND, m, n + 1);
            matrix[(e, g)] = v;
            matrix[(g, e)] = v;
        }
    }
    for (idx, z) in matrix.iter().enumerate() {
        if *z == C64::new(0.0, 0.0) {
            continue;
        }
        // column-major storage
        let (row, col) = (idx % dims.dim(), idx / dims.dim());
        let (s1, m1, n1) = dims.labels(row);
        let (s2, m2, n2) = dims.labels(col);
        if m1 != m2 || n1 + s1 != n2 + s2 {
            return Err(Error::NumericalIntegrity(format!(
                "carrier Hamiltonian entry ({row}, {col}) breaks a conserved quantity"
            )));
        }
    }
    Ok(TripartiteOperator { matrix, dims })
}

/// Red sideband `iΩ(σ₊a − σ₋a†)` on spin ⊗ vibration.
pub fn build_red_sideband(rabi: f64, n_vib: usize) -> Result<BipartiteOperator> {
    sideband(rabi, n_vib, false)
}

/// Blue sideband `iΩ(σ₊a† − σ₋a)` on spin ⊗ vibration.
pub fn build_blue_sideband(rabi: f64, n_vib: usize) -> Result<BipartiteOperator> {
    sideband(rabi, n_vib, true)
}

fn sideband(rabi: f64, n_vib: usize, blue: bool) -> Result<BipartiteOperator> {
    if !(rabi.is_finite() && rabi > 0.0) {
        return Err(Error::InvalidParameter { name: "rabi", reason: format!("{rabi} must be > 0") });
    }
    let a = fock::annihilation(n_vib).into_matrix();
    let ad = a.adjoint();
    let (raise, lower) = if blue { (&ad, &a) } else { (&a, &ad) };
    let h = (sigma_plus().kronecker(raise) - sigma_minus().kronecker(lower)) * C64::new(0.0, rabi);
    Ok(BipartiteOperator { matrix: h, n_vib })
}

/// `σ_z` on a bare two-level system, ordered (g, e).
pub fn sigma_z() -> DMatrix<C64> {
    sigma_z_2()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trunc(n_vib: usize, n_field: usize) -> TruncationSpec {
        TruncationSpec::new(n_field, n_vib, 1e-10).unwrap()
    }

    fn commutator_norm(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        max_abs((a * b - b * a).iter())
    }

    const E: usize = EXCITED;
    const G: usize = GROUND;

    #[test]
    fn index_roundtrip() {
        let d = TripartiteDims::new(3, 4);
        assert_eq!(d.dim(), 40);
        for i in 0..d.dim() {
            let (s, m, n) = d.labels(i);
            assert_eq!(d.index(s, m, n), i);
        }
        assert_eq!(d.index(1, 0, 0), 20);
        assert_eq!(d.index(0, 1, 0), 5);
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::new(0.0, 0.1, 1.0, 1.0, 1.0).is_err());
        assert!(SystemParams::new(1.0, -0.1, 1.0, 1.0, 1.0).is_err());
        let p = SystemParams::carrier(0.02).unwrap();
        assert_eq!(p.detuning(), 0.0);
        assert_eq!((p.omega, p.nu), (500.0, 50.0));
    }

    #[test]
    fn full_hamiltonian_at_zero_eta() {
        let p = SystemParams::carrier(0.0).unwrap();
        let t = trunc(3, 4);
        let h = build_full_interaction(&p, &t).unwrap();
        let expected = TripartiteOperator::product(&sigma_x(), &DMatrix::identity(4, 4), &field_quadrature(4));
        assert_eq!(h.matrix(), expected.matrix());
    }

    #[test]
    fn full_hamiltonian_vacuum_coupling() {
        let p = SystemParams::carrier(0.1).unwrap();
        let t = trunc(40, 3);
        let h = build_full_hamiltonian(&p, &t).unwrap();
        let el = h.get((E, 0, 0), (G, 0, 1));
        assert!((el.re - (-0.005f64).exp()).abs() < 1e-8);
        assert_eq!(el.im, 0.0);
        // diagonal carries the free energies
        let d = h.get((E, 2, 3), (E, 2, 3)).re;
        assert!((d - (50.0 * 2.0 + 500.0 * 3.0 + 250.0)).abs() < 1e-9);
    }

    #[test]
    fn builders_are_hermitian() {
        let p = SystemParams::carrier(0.2).unwrap();
        let t = trunc(20, 20);
        assert!(build_full_hamiltonian(&p, &t).unwrap().hermiticity_deviation() < 1e-12);
        assert!(build_expanded_interaction(&p, &t).hermiticity_deviation() < 1e-12);
        assert!(build_carrier_rwa_interaction(&p, &t).unwrap().hermiticity_deviation() < 1e-12);
        assert!(build_red_sideband(0.3, 10).unwrap().hermiticity_deviation() < 1e-12);
        assert!(build_blue_sideband(0.3, 10).unwrap().hermiticity_deviation() < 1e-12);
    }

    #[test]
    fn expanded_equals_full_at_zero_eta() {
        let p = SystemParams::carrier(0.0).unwrap();
        let t = trunc(5, 5);
        let a = build_expanded_interaction(&p, &t);
        let b = build_full_interaction(&p, &t).unwrap();
        assert_eq!(a.matrix(), b.matrix());
    }

    #[test]
    fn expanded_vibrational_structure() {
        let p = SystemParams::carrier(0.1).unwrap();
        let t = trunc(6, 3);
        let h = build_expanded_interaction(&p, &t);
        let d = h.dims();
        for i in 0..d.dim() {
            for j in 0..d.dim() {
                let (_, m1, _) = d.labels(i);
                let (_, m2, _) = d.labels(j);
                let dm = m1.abs_diff(m2);
                if dm != 0 && dm != 2 {
                    assert_eq!(h.matrix()[(i, j)], C64::new(0.0, 0.0));
                }
            }
        }
        assert_ne!(h.get((E, 0, 0), (G, 2, 1)), C64::new(0.0, 0.0));
    }

    /// Max entry of expanded minus exact interaction over vib levels ≤ N_v/2.
    fn lower_half_residual(eta: f64, n_vib: usize) -> f64 {
        let p = SystemParams::carrier(eta).unwrap();
        let t = trunc(n_vib, 4);
        let a = build_expanded_interaction(&p, &t);
        let b = build_full_interaction(&p, &t).unwrap();
        let d = a.dims();
        let mut worst: f64 = 0.0;
        for i in 0..d.dim() {
            for j in 0..d.dim() {
                let (_, m1, _) = d.labels(i);
                let (_, m2, _) = d.labels(j);
                if m1 <= n_vib / 2 && m2 <= n_vib / 2 {
                    worst = worst.max((a.matrix()[(i, j)] - b.matrix()[(i, j)]).norm());
                }
            }
        }
        worst
    }

    // residual / (η⁴ N_v²), fitted once over η√N_v ≤ 0.3 (observed 0.131..0.141)
    // and frozen with headroom.
    const EXPANSION_RESIDUAL_COEFF: f64 = 0.2;

    #[test]
    fn expansion_residual_regression_bound() {
        for &(eta, n_vib) in &[(0.05, 30), (0.02, 30), (0.05, 20), (0.03, 16), (0.01, 40)] {
            let eta: f64 = eta;
            assert!(eta * (n_vib as f64).sqrt() <= 0.3);
            let r = lower_half_residual(eta, n_vib);
            let bound = EXPANSION_RESIDUAL_COEFF * eta.powi(4) * (n_vib * n_vib) as f64;
            assert!(r <= bound, "eta {eta} N_v {n_vib}: {r:e}");
        }
    }

    #[test]
    fn rwa_matrix_element() {
        let p = SystemParams::carrier(0.02).unwrap();
        let h = build_carrier_rwa_interaction(&p, &trunc(6, 4)).unwrap();
        let el = h.get((E, 4, 0), (G, 4, 1)).re;
        assert!((el - (1.0 - 0.0004 * 9.0 / 2.0)).abs() < 1e-15);
        assert!((el - 0.99820).abs() < 1e-12);
    }

    #[test]
    fn rwa_zero_eta_is_jaynes_cummings() {
        let p = SystemParams::carrier(0.0).unwrap();
        let t = trunc(2, 5);
        let h = build_carrier_rwa_interaction(&p, &t).unwrap();
        let b = fock::annihilation(5).into_matrix();
        let jc = TripartiteOperator::product(&sigma_minus(), &DMatrix::identity(3, 3), &b.adjoint()).into_matrix()
            + TripartiteOperator::product(&sigma_plus(), &DMatrix::identity(3, 3), &b).into_matrix();
        assert_eq!(h.matrix(), &jc);
    }

    #[test]
    fn rwa_conserves_vib_and_excitation() {
        let p = SystemParams::carrier(0.05).unwrap();
        let t = trunc(6, 7);
        let h = build_carrier_rwa_interaction(&p, &t).unwrap();
        let d = h.dims();
        let vib = TripartiteOperator::vib_number(d);
        let exc = TripartiteOperator::excitation_number(d);
        assert!(commutator_norm(h.matrix(), vib.matrix()) < 1e-12);
        assert!(commutator_norm(h.matrix(), exc.matrix()) < 1e-12);
        // the full Hamiltonian does not conserve vibrational number
        let full = build_full_hamiltonian(&p, &t).unwrap();
        assert!(commutator_norm(full.matrix(), vib.matrix()) > 1e-4);
    }

    #[test]
    fn rwa_requires_resonance() {
        let p = SystemParams::new(1.0, 0.02, 50.0, 500.0, 501.0).unwrap();
        assert_eq!(
            build_carrier_rwa_interaction(&p, &trunc(2, 2)).unwrap_err(),
            Error::ResonanceViolation { omega0: 501.0, omega: 500.0 }
        );
    }

    #[test]
    fn sidebands() {
        let red = build_red_sideband(0.7, 4).unwrap();
        assert_eq!(red.get((E, 0), (G, 1)), C64::new(0.0, 0.7));
        assert_eq!(red.get((G, 1), (E, 0)), C64::new(0.0, -0.7));
        let blue = build_blue_sideband(0.7, 4).unwrap();
        assert_eq!(blue.get((E, 1), (G, 0)), C64::new(0.0, 0.7));
        // blue sideband conserves s − m; red conserves s + m
        let d = 5;
        for i in 0..2 * d {
            for j in 0..2 * d {
                let (s1, m1) = (i / d, i % d);
                let (s2, m2) = (j / d, j % d);
                if blue.matrix()[(i, j)] != C64::new(0.0, 0.0) {
                    assert_eq!(s1 as i64 - m1 as i64, s2 as i64 - m2 as i64);
                }
                if red.matrix()[(i, j)] != C64::new(0.0, 0.0) {
                    assert_eq!(s1 + m1, s2 + m2);
                }
            }
        }
        assert!(build_red_sideband(0.0, 3).is_err());
    }
}
