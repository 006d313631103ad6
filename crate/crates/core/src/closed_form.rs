//! Analytic dynamics of the carrier-resonance intensity-dependent
//! Jaynes-Cummings model.
//!
//! The interaction `[1 − η²(1+2a†a)/2](σ₋b† + σ₊b)` conserves the vibrational
//! number `m` and the excitation `n + s`, so the dynamics splits into 2×2
//! Rabi problems `|e, m, n⟩ ↔ |g, m, n+1⟩` with frequency
//! `Ω(m, n) = [1 − η²(1+2m)/2]√(n+1)` (units of g). Everything here is built
//! from that table.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{ModeDistribution, TruncationSpec};
use crate::hamiltonian::{coupling_factor, SystemParams, TripartiteDims, TripartiteOperator, EXCITED, GROUND};
use crate::numeric::NeumaierSum;
use crate::state::TripartiteState;

/// Slack allowed above the retained mass when checking `|W| ≤ mass`.
pub const BOUND_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    DoubleSum,
    PoissonClosed,
    Oracle,
}

/// Sampled population inversion `W(gt)`.
#[derive(Clone, Debug, PartialEq)]
pub struct InversionTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub provenance: Provenance,
    /// Initial population mass kept by the truncation; `W(0)` equals this for
    /// an excited-state preparation.
    pub retained_mass: f64,
}

impl InversionTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Upper bound on the error from the discarded tail.
    pub fn tail_bound(&self) -> f64 {
        (1.0 - self.retained_mass).max(0.0)
    }

    /// Sample spacing of a uniform trace.
    pub fn step(&self) -> Option<f64> {
        (self.times.len() >= 2).then(|| self.times[1] - self.times[0])
    }

    /// Verifies `|W| ≤ retained mass` at every sample.
    pub fn check_bounds(&self) -> Result<()> {
        let limit = self.retained_mass + BOUND_SLACK;
        match self.values.iter().zip(&self.times).find(|(w, _)| w.is_nan() || w.abs() > limit) {
            Some((w, t)) => Err(Error::NumericalIntegrity(format!(
                "|W({t})| = {} exceeds the retained mass {}",
                w.abs(),
                self.retained_mass
            ))),
            None => Ok(()),
        }
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidParameter { name: "gt_grid", reason: "times must be finite and >= 0".into() });
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter { name: "gt_grid", reason: "times must be nondecreasing".into() });
    }
    Ok(())
}

/// Default grid spacing `min(0.05, π/(20·Ω_max))`, with `Ω_max` the largest
/// `|Ω(m, n)|` over the retained levels.
pub fn default_step(eta: f64, n_vib: usize, n_field: usize) -> f64 {
    let fmax = (0..=n_vib).map(|m| coupling_factor(eta, m as f64).abs()).fold(0.0, f64::max);
    let omega_max = fmax * ((n_field + 1) as f64).sqrt();
    if omega_max == 0.0 {
        0.05
    } else {
        (std::f64::consts::PI / (20.0 * omega_max)).min(0.05)
    }
}

/// Closed-form propagator on a truncated space, with the frequency table
/// `Ω(m, n)` for `0 ≤ m ≤ N_v`, `0 ≤ n ≤ N_f` cached.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedFormPropagator {
    params: SystemParams,
    trunc: TruncationSpec,
    freq: Vec<f64>,
}

impl ClosedFormPropagator {
    /// Fails when `η²(1+2N_v)/2 ≥ 1`: the effective coupling of the top
    /// vibrational level would not be positive.
    pub fn new(params: SystemParams, trunc: TruncationSpec) -> Result<Self> {
        if params.omega0 != params.omega {
            return Err(Error::ResonanceViolation { omega0: params.omega0, omega: params.omega });
        }
        let top = params.eta * params.eta * (1.0 + 2.0 * trunc.n_vib as f64) / 2.0;
        if top >= 1.0 {
            return Err(Error::ExpansionInvalid { value: top, m: trunc.n_vib as f64 });
        }
        let mut freq = Vec::with_capacity((trunc.n_vib + 1) * (trunc.n_field + 1));
        for m in 0..=trunc.n_vib {
            let f = params.coupling_factor(m);
            for n in 0..=trunc.n_field {
                freq.push(f * ((n + 1) as f64).sqrt());
            }
        }
        Ok(Self { params, trunc, freq })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn truncation(&self) -> &TruncationSpec {
        &self.trunc
    }

    /// `Ω(m, n)` in units of g.
    #[inline]
    pub fn frequency(&self, m: usize, n: usize) -> f64 {
        self.freq[m * (self.trunc.n_field + 1) + n]
    }
}

fn check_time(gt: f64) -> Result<()> {
    if gt.is_finite() && gt >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "gt", reason: format!("{gt} must be finite and >= 0") })
    }
}

/// Dense `U(gt) = C_{m;n+1}|e⟩⟨e| + C_{m;n}|g⟩⟨g| − iS_{m;n+1}b|e⟩⟨g| − ib†S_{m;n+1}|g⟩⟨e|`
/// on the propagator's truncated space.
///
/// The transition `|e, m, N_f⟩ ↔ |g, m, N_f+1⟩` leaves the space, so `U` is
/// unitary only on the subspace without field level `N_f`.
pub fn evolution_operator(prop: &ClosedFormPropagator, gt: f64) -> Result<TripartiteOperator> {
    check_time(gt)?;
    let dims = TripartiteDims::from(prop.trunc);
    let mut u = DMatrix::zeros(dims.dim(), dims.dim());
    for m in 0..=dims.n_vib {
        for n in 0..=dims.n_field {
            let (sin, cos) = (prop.frequency(m, n) * gt).sin_cos();
            let e = dims.index(EXCITED, m, n);
            u[(e, e)] = C64::new(cos, 0.0);
            let g = dims.index(GROUND, m, n);
            u[(g, g)] = if n == 0 { C64::new(1.0, 0.0) } else { C64::new((prop.frequency(m, n - 1) * gt).cos(), 0.0) };
            if n < dims.n_field {
                // S_{m;n+1} b |g, n+1⟩ = sin(Ω t) |n⟩ and b† S_{m;n+1} |n⟩ = sin(Ω t) |n+1⟩
                let up = dims.index(GROUND, m, n + 1);
                u[(e, up)] = C64::new(0.0, -sin);
                u[(up, e)] = C64::new(0.0, -sin);
            }
        }
    }
    TripartiteOperator::from_matrix(u, dims)
}

/// Evolved joint state from `|e⟩⟨e| ⊗ ρ_f(0) ⊗ ρ_v(0)` with diagonal mode
/// states.
///
/// The result lives on `(N_v, N_f + 1)` with `N_v`, `N_f` the cutoffs of the
/// input distributions, so every populated `|e, m, n⟩` keeps its partner
/// `|g, m, n+1⟩` and the trace is conserved exactly. It is stored as one
/// spin ⊗ field block per vibrational level.
pub fn evolve_density(
    field0: &ModeDistribution,
    vib0: &ModeDistribution,
    prop: &ClosedFormPropagator,
    gt: f64,
) -> Result<TripartiteState> {
    check_time(gt)?;
    if vib0.cutoff() > prop.trunc.n_vib {
        return Err(Error::OutOfRange { level: vib0.cutoff(), cutoff: prop.trunc.n_vib });
    }
    if field0.cutoff() > prop.trunc.n_field {
        return Err(Error::OutOfRange { level: field0.cutoff(), cutoff: prop.trunc.n_field });
    }
    let dims = TripartiteDims::new(vib0.cutoff(), field0.cutoff() + 1);
    let fd = dims.field_dim();
    let blocks = (0..=dims.n_vib)
        .map(|m| {
            let pm = vib0.get(m);
            let mut b = DMatrix::zeros(2 * fd, 2 * fd);
            for n in 0..=field0.cutoff() {
                let p = pm * field0.get(n);
                if p == 0.0 {
                    continue;
                }
                let (sin, cos) = (prop.frequency(m, n) * gt).sin_cos();
                let e = EXCITED * fd + n;
                let g = GROUND * fd + n + 1;
                b[(e, e)] = C64::new(p * cos * cos, 0.0);
                b[(g, g)] = C64::new(p * sin * sin, 0.0);
                b[(e, g)] = C64::new(0.0, p * cos * sin);
                b[(g, e)] = C64::new(0.0, -p * cos * sin);
            }
            b
        })
        .collect();
    Ok(TripartiteState::from_vib_blocks(dims, blocks))
}

/// `W(gt) = Σ_{m,n} ρᵛ_mm ρᶠ_nn cos(2[1 − η²(1+2m)/2]√(n+1) gt)` over the
/// retained levels, outer sum over `m`, inner over `n`, compensated.
pub fn inversion_double_sum(
    field0: &ModeDistribution,
    vib0: &ModeDistribution,
    eta: f64,
    gt_grid: &[f64],
) -> Result<InversionTrace> {
    check_grid(gt_grid)?;
    let mut terms = Vec::new();
    for (m, &pm) in vib0.populations().iter().enumerate() {
        let f = 2.0 * coupling_factor(eta, m as f64);
        for (n, &pn) in field0.populations().iter().enumerate() {
            let w = pm * pn;
            if w != 0.0 {
                terms.push((w, f * ((n + 1) as f64).sqrt()));
            }
        }
    }
    let values = gt_grid
        .iter()
        .map(|&t| {
            let mut acc = NeumaierSum::new();
            for &(w, freq) in &terms {
                acc.add(w * (freq * t).cos());
            }
            acc.value()
        })
        .collect();
    Ok(InversionTrace {
        times: gt_grid.to_vec(),
        values,
        provenance: Provenance::DoubleSum,
        retained_mass: vib0.retained_mass() * field0.retained_mass(),
    })
}

/// Single field term of the resummed inversion for a coherent vibrational
/// state of mean `mbar`:
/// `exp{−m̄[1 − cos(2η²√(n+1) gt)]} · cos{2(1 − η²/2)√(n+1) gt − m̄ sin(2η²√(n+1) gt)}`.
pub fn resummed_term(n: usize, mbar: f64, eta: f64, gt: f64) -> f64 {
    let root = ((n + 1) as f64).sqrt();
    let (sin_b, cos_b) = (2.0 * eta * eta * root * gt).sin_cos();
    (-mbar * (1.0 - cos_b)).exp() * (2.0 * (1.0 - eta * eta / 2.0) * root * gt - mbar * sin_b).cos()
}

/// Envelope factor `exp{−m̄[1 − cos(2η²√(n+1) gt)]}` of [`resummed_term`].
pub fn resummed_envelope(n: usize, mbar: f64, eta: f64, gt: f64) -> f64 {
    let root = ((n + 1) as f64).sqrt();
    (-mbar * (1.0 - (2.0 * eta * eta * root * gt).cos())).exp()
}

/// `W(gt) = Σ_n ρᶠ_nn w_n(gt)` with the vibrational Poisson sum done
/// analytically.
pub fn inversion_poisson_closed(
    field0: &ModeDistribution,
    mbar: f64,
    eta: f64,
    gt_grid: &[f64],
) -> Result<InversionTrace> {
    check_grid(gt_grid)?;
    if !(mbar.is_finite() && mbar >= 0.0) {
        return Err(Error::InvalidParameter { name: "mbar", reason: format!("{mbar} must be >= 0") });
    }
    let values = gt_grid
        .iter()
        .map(|&t| {
            let mut acc = NeumaierSum::new();
            for (n, &p) in field0.populations().iter().enumerate() {
                if p != 0.0 {
                    acc.add(p * resummed_term(n, mbar, eta, t));
                }
            }
            acc.value()
        })
        .collect();
    Ok(InversionTrace {
        times: gt_grid.to_vec(),
        values,
        provenance: Provenance::PoissonClosed,
        retained_mass: field0.retained_mass(),
    })
}

/// `Σ_m ρᵛ_mm exp(i·2√(l+1)η² m gt)`: the vibrational phase sum multiplying
/// the Rabi carrier when the field starts in `|l⟩`. Its modulus has period
/// `π/(η²√(l+1))` in `gt`.
pub fn vib_phase_sum(vib0: &ModeDistribution, eta: f64, field_level: usize, gt: f64) -> C64 {
    let rate = 2.0 * ((field_level + 1) as f64).sqrt() * eta * eta;
    let mut re = NeumaierSum::new();
    let mut im = NeumaierSum::new();
    for (m, &p) in vib0.populations().iter().enumerate() {
        let (s, c) = (rate * m as f64 * gt).sin_cos();
        re.add(p * c);
        im.add(p * s);
    }
    C64::new(re.value(), im.value())
}
