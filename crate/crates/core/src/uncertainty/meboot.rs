use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Trimming proportion for the tail extension.
pub const TRIM: f64 = 0.10;

/// The maximum entropy density built around an ordered sample.
#[derive(Debug, Clone, PartialEq)]
pub struct MebootParts {
    pub sorted: Vec<f64>,
    /// Permutation sorting the input: `sorted[r] = x[order[r]]`.
    pub order: Vec<usize>,
    /// `T + 1` interval knots `z_0..z_T`.
    pub knots: Vec<f64>,
    /// Per-interval offsets that make each interval mean equal its target.
    pub shifts: Vec<f64>,
}

impl MebootParts {
    pub fn new(x: &[f64]) -> Result<Self> {
        let t = x.len();
        if t < 3 {
            return Err(Error::TooShort { needed: 3, got: t });
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let mut order: Vec<usize> = (0..t).collect();
        order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
        let sorted: Vec<f64> = order.iter().map(|&i| x[i]).collect();

        let mut diffs: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
        diffs.sort_by(f64::total_cmp);
        let cut = (diffs.len() as f64 * TRIM).floor() as usize;
        let kept = &diffs[cut..diffs.len() - cut];
        let m_trm = kept.iter().sum::<f64>() / kept.len() as f64;

        let mut knots = Vec::with_capacity(t + 1);
        knots.push(sorted[0] - m_trm);
        knots.extend(sorted.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        knots.push(sorted[t - 1] + m_trm);

        let mut shifts = vec![0.0; t];
        shifts[0] = 0.5 * m_trm;
        shifts[t - 1] = -0.5 * m_trm;
        Ok(MebootParts {
            sorted,
            order,
            knots,
            shifts,
        })
    }

    /// Piecewise-linear quantile with interval shifts, for `u` in [0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        let t = self.sorted.len();
        let pos = u * t as f64;
        let i = (pos.floor() as usize).min(t - 1);
        let frac = pos - i as f64;
        self.knots[i] + frac * (self.knots[i + 1] - self.knots[i]) + self.shifts[i]
    }

    pub fn draw(&self, rng: &mut Rng) -> Vec<f64> {
        let t = self.sorted.len();
        if self.sorted[0] == self.sorted[t - 1] {
            let mut out = vec![0.0; t];
            for (r, &i) in self.order.iter().enumerate() {
                out[i] = self.sorted[r];
            }
            return out;
        }
        let mut q: Vec<f64> = (0..t).map(|_| self.quantile(rng.random::<f64>())).collect();
        q.sort_by(f64::total_cmp);
        let mut out = vec![0.0; t];
        for (r, &i) in self.order.iter().enumerate() {
            out[i] = q[r];
        }
        out
    }
}

/// One maximum entropy bootstrap replicate of `x`.
pub fn meboot(x: &[f64], seed: u64) -> Result<Vec<f64>> {
    meboot_with(x, &mut rng::rng(seed))
}

pub fn meboot_with(x: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
    Ok(MebootParts::new(x)?.draw(rng))
}
