//! Truncated Fock-space building blocks for a single bosonic mode.
//!
//! Populations are always diagonal number-basis weights `p_0..=p_N`. The
//! truncated tail is never folded back in: a distribution may carry slightly
//! less than unit mass, and that deficit is what [`ModeDistribution::tail_mass`]
//! reports.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

/// Levels computed above the requested cutoff and then discarded when
/// exponentiating the position quadrature.
pub const COSINE_PADDING: usize = 10;

/// Default tail-mass tolerance ε.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

/// Poisson tail bound used to pick a cutoff for a coherent state:
/// `⌈mean + 8√mean + 10⌉`.
pub fn default_cutoff(mean: f64) -> usize {
    (mean + 8.0 * mean.sqrt() + 10.0).ceil() as usize
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    Number,
    Coherent,
    Thermal,
    Custom,
}

/// Cutoff and tail tolerance for one mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeTruncation {
    pub cutoff: usize,
    pub tail_tol: f64,
}

impl ModeTruncation {
    pub fn new(cutoff: usize, tail_tol: f64) -> Result<Self> {
        check_tail_tol(tail_tol)?;
        Ok(Self { cutoff, tail_tol })
    }

    /// Cutoff from [`default_cutoff`] with the default tolerance.
    pub fn for_mean(mean: f64) -> Self {
        Self { cutoff: default_cutoff(mean), tail_tol: DEFAULT_TAIL_TOL }
    }
}

/// Fock cutoffs of the field (`n_field`) and vibrational (`n_vib`) modes,
/// plus the tail tolerance shared by both.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationSpec {
    pub n_field: usize,
    pub n_vib: usize,
    pub tail_tol: f64,
}

impl TruncationSpec {
    pub fn new(n_field: usize, n_vib: usize, tail_tol: f64) -> Result<Self> {
        check_tail_tol(tail_tol)?;
        Ok(Self { n_field, n_vib, tail_tol })
    }

    /// Default cutoffs for coherent states of the given means, checked
    /// against the tolerance.
    pub fn for_coherent(nbar: f64, mbar: f64, tail_tol: f64) -> Result<Self> {
        let spec = Self::new(default_cutoff(nbar), default_cutoff(mbar), tail_tol)?;
        coherent_populations(nbar, spec.field())?;
        coherent_populations(mbar, spec.vib())?;
        Ok(spec)
    }

    pub fn field(&self) -> ModeTruncation {
        ModeTruncation { cutoff: self.n_field, tail_tol: self.tail_tol }
    }

    pub fn vib(&self) -> ModeTruncation {
        ModeTruncation { cutoff: self.n_vib, tail_tol: self.tail_tol }
    }
}

fn check_tail_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "tail_tol", reason: format!("{tol} is not in (0, 1)") })
    }
}

fn check_mean(mean: f64) -> Result<()> {
    if mean.is_finite() && mean >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "mean", reason: format!("{mean} must be finite and >= 0") })
    }
}

/// Diagonal number-basis populations of one bosonic mode.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeDistribution {
    populations: Vec<f64>,
    kind: DistributionKind,
    mean: f64,
}

impl ModeDistribution {
    /// Arbitrary populations. Entries must be non-negative with total mass
    /// at most one.
    pub fn custom(populations: Vec<f64>) -> Result<Self> {
        if populations.is_empty() {
            return Err(Error::InvalidParameter { name: "populations", reason: "empty".into() });
        }
        if let Some(p) = populations.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidParameter {
                name: "populations",
                reason: format!("entry {p} is negative or not finite"),
            });
        }
        let mass = NeumaierSum::total(populations.iter().copied());
        if mass > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter {
                name: "populations",
                reason: format!("total mass {mass} exceeds 1"),
            });
        }
        let mean = NeumaierSum::total(populations.iter().enumerate().map(|(k, p)| k as f64 * p));
        Ok(Self { populations, kind: DistributionKind::Custom, mean })
    }

    pub fn populations(&self) -> &[f64] {
        &self.populations
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    /// Nominal mean quanta (the generating parameter, not the truncated
    /// first moment).
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn cutoff(&self) -> usize {
        self.populations.len() - 1
    }

    pub fn get(&self, k: usize) -> f64 {
        self.populations.get(k).copied().unwrap_or(0.0)
    }

    pub fn retained_mass(&self) -> f64 {
        NeumaierSum::total(self.populations.iter().copied())
    }

    pub fn tail_mass(&self) -> f64 {
        (1.0 - self.retained_mass()).max(0.0)
    }

    /// First moment of the retained populations.
    pub fn truncated_mean(&self) -> f64 {
        NeumaierSum::total(self.populations.iter().enumerate().map(|(k, p)| k as f64 * p))
    }
}

/// Poisson weights `e^{-n̄} n̄^k / k!` up to the cutoff.
pub fn coherent_populations(mean: f64, trunc: ModeTruncation) -> Result<ModeDistribution> {
    check_mean(mean)?;
    let populations: Vec<f64> = if mean == 0.0 {
        (0..=trunc.cutoff).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect()
    } else {
        let ln_mean = mean.ln();
        let mut ln_fact = 0.0;
        (0..=trunc.cutoff)
            .map(|k| {
                if k > 0 {
                    ln_fact += (k as f64).ln();
                }
                (k as f64 * ln_mean - mean - ln_fact).exp()
            })
            .collect()
    };
    finish(populations, DistributionKind::Coherent, mean, trunc)
}

/// Geometric weights `n̄^k / (1+n̄)^{k+1}`, left unnormalized on the
/// truncated space.
pub fn thermal_populations(mean: f64, trunc: ModeTruncation) -> Result<ModeDistribution> {
    check_mean(mean)?;
    let ratio = mean / (1.0 + mean);
    let head = 1.0 / (1.0 + mean);
    let populations = (0..=trunc.cutoff).map(|k| head * ratio.powi(k as i32)).collect();
    finish(populations, DistributionKind::Thermal, mean, trunc)
}

/// Fock state `|k⟩` on levels `0..=cutoff`.
pub fn number_populations(level: usize, cutoff: usize) -> Result<ModeDistribution> {
    if level > cutoff {
        return Err(Error::OutOfRange { level, cutoff });
    }
    let mut populations = vec![0.0; cutoff + 1];
    populations[level] = 1.0;
    Ok(ModeDistribution { populations, kind: DistributionKind::Number, mean: level as f64 })
}

fn finish(populations: Vec<f64>, kind: DistributionKind, mean: f64, trunc: ModeTruncation) -> Result<ModeDistribution> {
    let dist = ModeDistribution { populations, kind, mean };
    let retained = dist.retained_mass();
    if retained < 1.0 - trunc.tail_tol {
        return Err(Error::Truncation { mean, cutoff: trunc.cutoff, retained, tol: trunc.tail_tol });
    }
    Ok(dist)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorLabel {
    Annihilation,
    Creation,
    Number,
    CosinePosition,
    /// Second-order Lamb-Dicke polynomial standing in for the cosine.
    ExpandedCosine,
    Identity,
}

/// Dense operator on one truncated mode, levels `0..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeOperator {
    matrix: DMatrix<C64>,
    label: OperatorLabel,
}

impl ModeOperator {
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn label(&self) -> OperatorLabel {
        self.label
    }

    pub fn cutoff(&self) -> usize {
        self.matrix.nrows() - 1
    }

    /// Conjugate transpose. The adjoint of an annihilator is labelled as a
    /// creator and vice versa.
    pub fn adjoint(&self) -> ModeOperator {
        let label = match self.label {
            OperatorLabel::Annihilation => OperatorLabel::Creation,
            OperatorLabel::Creation => OperatorLabel::Annihilation,
            other => other,
        };
        ModeOperator { matrix: self.matrix.adjoint(), label }
    }
}

pub fn annihilation(cutoff: usize) -> ModeOperator {
    ModeOperator { matrix: real_to_complex(&ladder(cutoff)), label: OperatorLabel::Annihilation }
}

pub fn creation(cutoff: usize) -> ModeOperator {
    annihilation(cutoff).adjoint()
}

pub fn number(cutoff: usize) -> ModeOperator {
    let diag = nalgebra::DVector::from_fn(cutoff + 1, |k, _| C64::new(k as f64, 0.0));
    ModeOperator { matrix: DMatrix::from_diagonal(&diag), label: OperatorLabel::Number }
}

pub fn identity(cutoff: usize) -> ModeOperator {
    ModeOperator { matrix: DMatrix::identity(cutoff + 1, cutoff + 1), label: OperatorLabel::Identity }
}

/// `cos(η(a + a†))` by spectral decomposition of the position quadrature.
///
/// The quadrature is diagonalized on `cutoff + COSINE_PADDING` levels and the
/// padding is discarded afterwards. Even so, rows and columns within roughly
/// `√cutoff` of the top carry truncation error; only the lower levels match
/// the infinite-dimensional operator.
pub fn cosine_position(eta: f64, cutoff: usize) -> Result<ModeOperator> {
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::InvalidParameter { name: "eta", reason: format!("{eta} must be >= 0") });
    }
    let dim = cutoff + 1;
    if eta == 0.0 {
        return Ok(ModeOperator { matrix: DMatrix::identity(dim, dim), label: OperatorLabel::CosinePosition });
    }
    let a = ladder(cutoff + COSINE_PADDING);
    let quadrature = (&a + a.transpose()) * eta;
    let eig = SymmetricEigen::new(quadrature);
    let v = &eig.eigenvectors;
    let cos_diag = eig.eigenvalues.map(f64::cos);
    let full = v * DMatrix::from_diagonal(&cos_diag) * v.transpose();
    let mut block = full.view((0, 0), (dim, dim)).into_owned();
    // exact symmetry
    for i in 0..dim {
        for j in (i + 1)..dim {
            let s = 0.5 * (block[(i, j)] + block[(j, i)]);
            block[(i, j)] = s;
            block[(j, i)] = s;
        }
    }
    Ok(ModeOperator { matrix: real_to_complex(&block), label: OperatorLabel::CosinePosition })
}

/// `1 − η²(1 + 2a†a)/2 − η²(a†² + a²)/2`, the cosine to second order in η.
pub fn expanded_cosine(eta: f64, cutoff: usize) -> ModeOperator {
    let dim = cutoff + 1;
    let eta2 = eta * eta;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for k in 0..dim {
        m[(k, k)] = 1.0 - eta2 * (1.0 + 2.0 * k as f64) / 2.0;
        if k + 2 < dim {
            // ⟨k|a²|k+2⟩ = √((k+1)(k+2))
            let v = -eta2 * ((k + 1) as f64 * (k + 2) as f64).sqrt() / 2.0;
            m[(k, k + 2)] = v;
            m[(k + 2, k)] = v;
        }
    }
    ModeOperator { matrix: real_to_complex(&m), label: OperatorLabel::ExpandedCosine }
}

fn ladder(cutoff: usize) -> DMatrix<f64> {
    let dim = cutoff + 1;
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    for k in 1..dim {
        a[(k - 1, k)] = (k as f64).sqrt();
    }
    a
}

pub(crate) fn real_to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|x| C64::new(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn annihilation_entries() {
        let a = annihilation(2);
        let m = a.matrix();
        for i in 0..3 {
            for j in 0..3 {
                let expected = match (i, j) {
                    (0, 1) => 1.0,
                    (1, 2) => 2f64.sqrt(),
                    _ => 0.0,
                };
                assert_eq!(m[(i, j)], C64::new(expected, 0.0));
            }
        }
        assert_eq!(a.label(), OperatorLabel::Annihilation);
    }

    #[test]
    fn number_from_ladder() {
        let a = annihilation(3);
        let n = a.adjoint().matrix() * a.matrix();
        let expected = number(3);
        for i in 0..4 {
            for j in 0..4 {
                assert!((n[(i, j)] - expected.matrix()[(i, j)]).norm() < 1e-15);
            }
            assert_eq!(expected.matrix()[(i, i)].re, i as f64);
        }
    }

    #[test]
    fn truncated_commutator() {
        let n = 6;
        let a = annihilation(n).into_matrix();
        let ad = creation(n).into_matrix();
        let comm = &a * &ad - &ad * &a;
        for i in 0..=n {
            for j in 0..=n {
                let expected = if i != j {
                    0.0
                } else if i < n {
                    1.0
                } else {
                    -(n as f64)
                };
                assert!((comm[(i, j)].re - expected).abs() < 1e-12);
                assert_eq!(comm[(i, j)].im, 0.0);
            }
        }
    }

    #[test]
    fn creation_is_exact_adjoint() {
        let a = annihilation(9);
        assert_eq!(creation(9).matrix(), &a.matrix().adjoint());
        assert_eq!(creation(9).label(), OperatorLabel::Creation);
    }

    #[test]
    fn vacuum_coherent_state() {
        let d = coherent_populations(0.0, ModeTruncation::new(5, 1e-10).unwrap()).unwrap();
        assert_eq!(d.populations(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(d.kind(), DistributionKind::Coherent);
    }

    #[test]
    fn coherent_mean_four() {
        let d = coherent_populations(4.0, ModeTruncation::for_mean(4.0)).unwrap();
        // direct pmf: e^-4 and e^-4 * 4^4 / 24
        let p0 = (-4.0f64).exp();
        let p4 = p0 * 256.0 / 24.0;
        assert!((d.get(0) - p0).abs() < 1e-15);
        assert!((d.get(4) - p4).abs() < 1e-15);
        assert!((d.get(0) - 0.0183156).abs() < 1e-7);
        assert!((d.get(4) - 0.195367).abs() < 1e-6);
    }

    #[test]
    fn coherent_tail_near_sixty() {
        // Poisson(25) tail beyond the cutoff, summed to 40 digits offline:
        // 8.5642283e-10 past 60, 5.1974125e-11 past 63.
        let loose = coherent_populations(25.0, ModeTruncation::new(60, 1e-9).unwrap()).unwrap();
        assert!((loose.tail_mass() - 8.5642283e-10).abs() < 1e-13);
        assert!(matches!(
            coherent_populations(25.0, ModeTruncation::new(60, 1e-10).unwrap()),
            Err(Error::Truncation { cutoff: 60, .. })
        ));
        let d = coherent_populations(25.0, ModeTruncation::new(63, 1e-10).unwrap()).unwrap();
        assert!(d.retained_mass() >= 1.0 - 1e-10);
        assert!((d.tail_mass() - 5.1974125e-11).abs() < 1e-13);
        // default cutoff ⌈25 + 40 + 10⌉ = 75
        let d = coherent_populations(25.0, ModeTruncation::for_mean(25.0)).unwrap();
        assert_eq!(d.cutoff(), 75);
        assert!(d.tail_mass() < 1e-13);
    }

    #[test]
    fn coherent_cutoff_too_small() {
        let err = coherent_populations(25.0, ModeTruncation::new(30, 1e-10).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Truncation { cutoff: 30, .. }));
    }

    #[test]
    fn number_states() {
        let d = number_populations(0, 5).unwrap();
        assert_eq!(d.populations(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let d = number_populations(3, 5).unwrap();
        assert_eq!(d.get(3), 1.0);
        assert_eq!(d.mean(), 3.0);
        assert_eq!(d.truncated_mean(), 3.0);
        assert_eq!(number_populations(6, 5).unwrap_err(), Error::OutOfRange { level: 6, cutoff: 5 });
    }

    #[test]
    fn thermal_states() {
        let d = thermal_populations(0.0, ModeTruncation::new(4, 1e-10).unwrap()).unwrap();
        assert_eq!(d.populations(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
        let d = thermal_populations(1.0, ModeTruncation::new(40, 1e-10).unwrap()).unwrap();
        assert_eq!(d.get(0), 0.5);
        assert_eq!(d.get(2), 0.125);
        // tail of a geometric series is reported, not renormalized away
        assert!((d.tail_mass() - 0.5f64.powi(41)).abs() < 1e-15);
        assert!(matches!(
            thermal_populations(1.0, ModeTruncation::new(10, 1e-10).unwrap()),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn custom_validation() {
        assert!(ModeDistribution::custom(vec![0.5, -0.1]).is_err());
        assert!(ModeDistribution::custom(vec![0.7, 0.7]).is_err());
        let d = ModeDistribution::custom(vec![0.25, 0.75]).unwrap();
        assert_eq!(d.mean(), 0.75);
        assert_eq!(d.kind(), DistributionKind::Custom);
    }

    #[test]
    fn cosine_at_zero_eta_is_identity() {
        let c = cosine_position(0.0, 7).unwrap();
        assert_eq!(c.matrix(), &DMatrix::<C64>::identity(8, 8));
    }

    /// Taylor series Σ (-1)^j X^{2j} / (2j)! summed on a generously padded
    /// space, independent of the spectral route.
    fn taylor_cosine(eta: f64, cutoff: usize) -> DMatrix<f64> {
        let big = cutoff + 60;
        let a = ladder(big);
        let x = (&a + a.transpose()) * eta;
        let x2 = &x * &x;
        let mut term = DMatrix::<f64>::identity(big + 1, big + 1);
        let mut sum = term.clone();
        for j in 1..40 {
            term = -(&term * &x2) / ((2 * j - 1) as f64 * (2 * j) as f64);
            sum += &term;
        }
        sum.view((0, 0), (cutoff + 1, cutoff + 1)).into_owned()
    }

    #[test]
    fn cosine_vacuum_element() {
        let c = cosine_position(0.1, 40).unwrap();
        let expected = (-0.005f64).exp();
        assert!((c.matrix()[(0, 0)].re - expected).abs() < 1e-8);
        assert!((expected - 0.9950125).abs() < 1e-7);
        let taylor = taylor_cosine(0.1, 40);
        assert!((taylor[(0, 0)] - expected).abs() < 1e-12);
        // low block agrees with the series
        for i in 0..20 {
            for j in 0..20 {
                assert!((c.matrix()[(i, j)].re - taylor[(i, j)]).abs() < 1e-9, "({i},{j})");
            }
        }
    }

    #[test]
    fn cosine_hermitian_and_bounded() {
        for &(eta, n) in &[(0.05, 30), (0.2, 20), (1.0, 25)] {
            let c = cosine_position(eta, n).unwrap();
            let m = c.matrix();
            assert!(max_abs(&(m - m.adjoint())) == 0.0);
            let real = m.map(|z| z.re);
            let eig = SymmetricEigen::new(real);
            for &l in eig.eigenvalues.iter() {
                assert!(l.abs() <= 1.0 + 1e-12, "eigenvalue {l}");
            }
        }
    }

    #[test]
    fn expansion_residual_is_fourth_order() {
        let (eta, n) = (0.05f64, 30usize);
        let c = cosine_position(eta, n).unwrap();
        let p = expanded_cosine(eta, n);
        let half = n / 2;
        let diff = (c.matrix() - p.matrix()).view((0, 0), (half + 1, half + 1)).into_owned();
        let res = max_abs(&diff);
        assert!(res <= eta.powi(4) * (n * n) as f64, "residual {res}");
        // and it really is fourth order: halving eta shrinks it ~16x
        let c2 = cosine_position(eta / 2.0, n).unwrap();
        let p2 = expanded_cosine(eta / 2.0, n);
        let res2 = max_abs(&(c2.matrix() - p2.matrix()).view((0, 0), (half + 1, half + 1)).into_owned());
        let ratio = res / res2;
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn expanded_cosine_structure() {
        let p = expanded_cosine(0.1, 6);
        let m = p.matrix();
        for i in 0..7usize {
            for j in 0..7usize {
                let d = i.abs_diff(j);
                if d != 0 && d != 2 {
                    assert_eq!(m[(i, j)], C64::new(0.0, 0.0));
                }
            }
        }
        assert!((m[(0, 0)].re - (1.0 - 0.005)).abs() < 1e-15);
    }
}
