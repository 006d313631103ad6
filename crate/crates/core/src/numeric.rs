//! Small numerical helpers shared across modules.

/// Neumaier's compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }

    pub fn total<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
        let mut s = Self::new();
        for x in iter {
            s.add(x);
        }
        s.value()
    }
}

/// Uniform grid `0, step, 2·step, …` up to and including `gt_max` (within
/// half a step of rounding). Samples are `i·step`, never accumulated.
pub fn uniform_grid(gt_max: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0 && gt_max >= 0.0);
    let count = (gt_max / step + 1e-9).floor() as usize;
    (0..=count).map(|i| i as f64 * step).collect()
}

/// Largest absolute entry.
pub fn max_abs<'a, I>(values: I) -> f64
where
    I: IntoIterator<Item = &'a num_complex::Complex64>,
{
    values.into_iter().map(|z| z.norm()).fold(0.0, f64::max)
}
