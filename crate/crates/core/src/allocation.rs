//! Water-filling power allocation over subcarriers.
//!
//! Powers are normalised to unit mean, so Σ P_i = N.

use serde::Serialize;

use crate::{Error, Result};

/// Per-carrier SNRs γ_i = SNR·|H[i]|².
#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierSnrs(Vec<f64>);

impl SubcarrierSnrs {
    pub fn new(gammas: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = gammas.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(Error::Parameter { name: "gamma", value: bad, reason: "carrier SNRs must be finite and nonnegative" });
        }
        Ok(SubcarrierSnrs(gammas))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerAllocation {
    pub powers: Vec<f64>,
    /// Threshold γ₀; carriers below it get no power.
    pub cutoff: f64,
}

impl PowerAllocation {
    pub fn water_level(&self) -> f64 {
        self.cutoff.recip()
    }
}

/// Water-filling by a scan over the ascending-sorted positive gammas.
///
/// With the active set starting at sorted index i, the threshold is
/// γ₀ = (M − i)/(N + Σ_{j≥i} 1/γ_j) where M counts positive gammas; the
/// first i with sorted[i−1] ≤ γ₀ < sorted[i] (sorted[−1] = 0) is taken.
pub fn waterfill(gammas: &SubcarrierSnrs) -> Result<PowerAllocation> {
    let g = gammas.as_slice();
    let n = g.len();
    let mut order: Vec<usize> = (0..n).filter(|&i| g[i] > 0.0).collect();
    if order.is_empty() {
        return Err(Error::NoUsableCarrier);
    }
    order.sort_by(|&a, &b| g[a].total_cmp(&g[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| g[i]).collect();
    let m = sorted.len();

    // suffix[i] = Σ_{j≥i} 1/sorted[j]
    let mut suffix = vec![0.0; m + 1];
    for i in (0..m).rev() {
        suffix[i] = suffix[i + 1] + sorted[i].recip();
    }

    let mut cutoff = 0.0;
    for i in 0..m {
        cutoff = (m - i) as f64 / (n as f64 + suffix[i]);
        let below = if i == 0 { 0.0 } else { sorted[i - 1] };
        if below <= cutoff && cutoff < sorted[i] {
            break;
        }
    }

    let level = cutoff.recip();
    let mut powers = vec![0.0; n];
    for &i in &order {
        powers[i] = (level - g[i].recip()).max(0.0);
    }
    Ok(PowerAllocation { powers, cutoff })
}

/// Effective SNRs P_i·γ_i.
pub fn apply_allocation(gammas: &[f64], powers: &[f64]) -> Result<Vec<f64>> {
    if gammas.len() != powers.len() {
        return Err(Error::LengthMismatch { expected: gammas.len(), actual: powers.len() });
    }
    Ok(gammas.iter().zip(powers).map(|(g, p)| g * p).collect())
}
