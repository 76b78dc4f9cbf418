//! Basis-function families and the normalized regressor rows of the
//! forcing term.
//!
//! Five families are supported:
//!
//! * Gaussian, `exp(-h_i (s - c_i)^2)`, global support;
//! * truncated Gaussian, `exp(-(h_i / 2) (s - c_i)^2)` cut off above
//!   `c_i + theta_i` with `theta_i = kappa / sqrt(h_i)`;
//! * mollifier-like, `exp(-1 / (1 - r^2))` for `r = |a_i (s - c_i)| < 1`;
//! * Wendland polynomials `(1 - r)_+^k p_k(r)` for `k = 2..=8`.
//!
//! Centers are equispaced in time, so geometric in phase. Gaussian-type
//! families use squared-gap widths `h_i`, compact families reciprocal-gap
//! widths `a_i`.

use std::fmt;

use crate::error::{DmpError, Result};
use crate::phase::PhaseConfig;

/// Truncation multiplier used when none is supplied.
pub const DEFAULT_TRUNC_KAPPA: f64 = 3.0;

/// Default overlap parameter for every family.
pub const DEFAULT_OVERLAP: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisFamily {
    Gaussian,
    TruncatedGaussian { kappa: f64 },
    Mollifier,
    /// Wendland function of order `k`, `2 <= k <= 8`.
    Wendland(u8),
}

impl BasisFamily {
    pub fn truncated_gaussian() -> Self {
        BasisFamily::TruncatedGaussian {
            kappa: DEFAULT_TRUNC_KAPPA,
        }
    }

    pub fn wendland(k: u8) -> Result<Self> {
        let family = BasisFamily::Wendland(k);
        family.validate()?;
        Ok(family)
    }

    /// Every family used in the benchmark sweeps: Gaussian, truncated
    /// Gaussian, mollifier and the seven Wendland orders.
    pub fn all() -> Vec<BasisFamily> {
        let mut families = vec![
            BasisFamily::Gaussian,
            BasisFamily::truncated_gaussian(),
            BasisFamily::Mollifier,
        ];
        families.extend((2..=8).map(BasisFamily::Wendland));
        families
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BasisFamily::TruncatedGaussian { kappa } if !(kappa.is_finite() && kappa > 0.0) => {
                Err(DmpError::invalid("trunc_kappa", format!("must be positive, got {kappa}")))
            }
            BasisFamily::Wendland(k) if !(2..=8).contains(&k) => {
                Err(DmpError::invalid("wendland order", format!("must be in 2..=8, got {k}")))
            }
            _ => Ok(()),
        }
    }

    /// Compactly supported families vanish outside a bounded interval.
    pub fn is_compact(&self) -> bool {
        matches!(self, BasisFamily::Mollifier | BasisFamily::Wendland(_))
    }

    /// Stable textual tag: `gaussian`, `truncated_gaussian`, `mollifier`,
    /// `wendland_<k>`.
    pub fn tag(&self) -> String {
        match self {
            BasisFamily::Gaussian => "gaussian".into(),
            BasisFamily::TruncatedGaussian { .. } => "truncated_gaussian".into(),
            BasisFamily::Mollifier => "mollifier".into(),
            BasisFamily::Wendland(k) => format!("wendland_{k}"),
        }
    }

    /// Parses a tag produced by [`BasisFamily::tag`]; `kappa` is only used by
    /// the truncated Gaussian.
    pub fn from_tag(tag: &str, kappa: f64) -> Result<Self> {
        let family = match tag {
            "gaussian" => BasisFamily::Gaussian,
            "truncated_gaussian" | "truncated-gaussian" => BasisFamily::TruncatedGaussian { kappa },
            "mollifier" => BasisFamily::Mollifier,
            other => {
                let k = other
                    .strip_prefix("wendland_")
                    .or_else(|| other.strip_prefix("wendland-"))
                    .and_then(|k| k.parse::<u8>().ok())
                    .ok_or_else(|| DmpError::invalid("basis", format!("unknown family `{other}`")))?;
                BasisFamily::Wendland(k)
            }
        };
        family.validate()?;
        Ok(family)
    }

    pub fn kappa(&self) -> Option<f64> {
        match *self {
            BasisFamily::TruncatedGaussian { kappa } => Some(kappa),
            _ => None,
        }
    }
}

impl fmt::Display for BasisFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

/// Support of one basis function in phase coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub lower: f64,
    pub upper: f64,
    /// The truncated Gaussian keeps its cutoff point; compact families are open.
    pub upper_closed: bool,
}

impl Support {
    pub fn contains(&self, s: f64) -> bool {
        s > self.lower && (s < self.upper || (self.upper_closed && s == self.upper))
    }

    /// True when the two supports share an interval of positive length
    /// inside `[lo, hi]`.
    pub fn overlaps_within(&self, other: &Support, lo: f64, hi: f64) -> bool {
        self.lower.max(other.lower).max(lo) < self.upper.min(other.upper).min(hi)
    }
}

/// Centers `c_i = exp(-alpha * i * T / N)`, `i = 0..=N`.
pub fn make_centers(n: usize, alpha: f64, horizon: f64) -> Result<Vec<f64>> {
    PhaseConfig::new(alpha, 1.0, horizon)?;
    if n == 0 {
        return Ok(vec![1.0]);
    }
    Ok((0..=n)
        .map(|i| (-alpha * i as f64 * horizon / n as f64).exp())
        .collect())
}

/// Widths for `centers`: `h_i = h / (c_{i+1} - c_i)^2` with the last copied
/// for Gaussian-type families, `a_i = h / |c_i - c_{i-1}|` with the first
/// copied for compact families.
pub fn make_widths(family: BasisFamily, centers: &[f64], overlap: f64) -> Result<Vec<f64>> {
    family.validate()?;
    if !(overlap.is_finite() && overlap > 0.0) {
        return Err(DmpError::invalid("overlap", format!("must be positive, got {overlap}")));
    }
    if centers.len() < 2 {
        return Err(DmpError::invalid("centers", "at least two centers are needed"));
    }
    let gaps = centers
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let gap = (w[1] - w[0]).abs();
            if gap == 0.0 {
                Err(DmpError::DuplicateCenters { index: i })
            } else {
                Ok(gap)
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let widths = if family.is_compact() {
        std::iter::once(overlap / gaps[0])
            .chain(gaps.iter().map(|g| overlap / g))
            .collect()
    } else {
        let last = overlap / (gaps[gaps.len() - 1] * gaps[gaps.len() - 1]);
        gaps.iter()
            .map(|g| overlap / (g * g))
            .chain(std::iter::once(last))
            .collect()
    };
    Ok(widths)
}

fn wendland(k: u8, r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    let q = 1.0 - r;
    match k {
        2 => q.powi(2),
        3 => q.powi(3),
        4 => q.powi(4) * (4.0 * r + 1.0),
        5 => q.powi(5) * (5.0 * r + 1.0),
        6 => q.powi(6) * (35.0 * r * r + 18.0 * r + 3.0),
        7 => q.powi(7) * (16.0 * r * r + 7.0 * r + 1.0),
        8 => q.powi(8) * (((32.0 * r + 25.0) * r + 8.0) * r + 1.0),
        _ => unreachable!("wendland order validated at construction"),
    }
}

/// A family together with its centers, widths and overlap parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    family: BasisFamily,
    centers: Vec<f64>,
    widths: Vec<f64>,
    overlap: f64,
    biased: bool,
}

impl BasisSet {
    /// `n + 1` basis functions spread over the phase range of `phase`.
    pub fn new(
        family: BasisFamily,
        n: usize,
        phase: &PhaseConfig,
        overlap: f64,
        biased: bool,
    ) -> Result<Self> {
        phase.validate()?;
        let centers = make_centers(n, phase.alpha, phase.horizon)?;
        let widths = if n == 0 {
            // Single basis: widen it to the whole phase range.
            let gap = 1.0 - phase.final_phase();
            let w = if family.is_compact() {
                overlap / (2.0 * gap)
            } else {
                overlap / (gap * gap)
            };
            vec![w]
        } else {
            make_widths(family, &centers, overlap)?
        };
        Self::from_parts(family, centers, widths, overlap, biased)
    }

    /// Rebuilds a set from stored centers and widths, checking invariants.
    pub fn from_parts(
        family: BasisFamily,
        centers: Vec<f64>,
        widths: Vec<f64>,
        overlap: f64,
        biased: bool,
    ) -> Result<Self> {
        family.validate()?;
        if centers.is_empty() {
            return Err(DmpError::invalid("centers", "empty basis"));
        }
        if centers.len() != widths.len() {
            return Err(DmpError::DimensionMismatch {
                expected: centers.len(),
                found: widths.len(),
            });
        }
        if centers.iter().any(|c| !(c.is_finite() && *c > 0.0 && *c <= 1.0)) {
            return Err(DmpError::invalid("centers", "centers must lie in (0, 1]"));
        }
        if let Some(i) = centers.windows(2).position(|w| w[1] >= w[0]) {
            return Err(DmpError::invalid(
                "centers",
                format!("centers must be strictly decreasing (index {i})"),
            ));
        }
        if widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(DmpError::invalid("widths", "widths must be positive"));
        }
        if !(overlap.is_finite() && overlap > 0.0) {
            return Err(DmpError::invalid("overlap", format!("must be positive, got {overlap}")));
        }
        Ok(BasisSet {
            family,
            centers,
            widths,
            overlap,
            biased,
        })
    }

    pub fn family(&self) -> BasisFamily {
        self.family
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn overlap(&self) -> f64 {
        self.overlap
    }

    pub fn biased(&self) -> bool {
        self.biased
    }

    /// Number of basis functions, `N + 1`.
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Length of a regressor row: `N + 1`, or `2 (N + 1)` with biases.
    pub fn row_len(&self) -> usize {
        if self.biased {
            2 * self.len()
        } else {
            self.len()
        }
    }

    /// Same centers and widths with the bias terms switched on or off.
    pub fn with_bias(&self, biased: bool) -> Self {
        BasisSet {
            biased,
            ..self.clone()
        }
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(DmpError::IndexOutOfRange {
                index: i,
                len: self.len(),
            })
        }
    }

    /// Truncation offset `theta_i` (truncated Gaussian only).
    pub fn truncation(&self, i: usize) -> Option<f64> {
        self.family.kappa().map(|k| k / self.widths[i].sqrt())
    }

    #[inline]
    pub(crate) fn value(&self, i: usize, s: f64) -> f64 {
        let c = self.centers[i];
        let w = self.widths[i];
        match self.family {
            BasisFamily::Gaussian => (-w * (s - c) * (s - c)).exp(),
            BasisFamily::TruncatedGaussian { kappa } => {
                if s - c <= kappa / w.sqrt() {
                    (-0.5 * w * (s - c) * (s - c)).exp()
                } else {
                    0.0
                }
            }
            BasisFamily::Mollifier => {
                let r = (w * (s - c)).abs();
                if r < 1.0 {
                    (-1.0 / (1.0 - r * r)).exp()
                } else {
                    0.0
                }
            }
            BasisFamily::Wendland(k) => wendland(k, (w * (s - c)).abs()),
        }
    }

    /// Value of basis function `i` at phase `s`.
    pub fn eval(&self, i: usize, s: f64) -> Result<f64> {
        self.check_index(i)?;
        Ok(self.value(i, s))
    }

    pub fn support_interval(&self, i: usize) -> Result<Support> {
        self.check_index(i)?;
        Ok(self.support(i))
    }

    pub(crate) fn support(&self, i: usize) -> Support {
        let c = self.centers[i];
        let w = self.widths[i];
        match self.family {
            BasisFamily::Gaussian => Support {
                lower: f64::NEG_INFINITY,
                upper: f64::INFINITY,
                upper_closed: false,
            },
            BasisFamily::TruncatedGaussian { kappa } => Support {
                lower: f64::NEG_INFINITY,
                upper: c + kappa / w.sqrt(),
                upper_closed: true,
            },
            BasisFamily::Mollifier | BasisFamily::Wendland(_) => Support {
                lower: c - 1.0 / w,
                upper: c + 1.0 / w,
                upper_closed: false,
            },
        }
    }

    /// Half-bandwidth of the normal-equations matrix on the phase range
    /// `[lo, hi]`: the largest index distance between two basis functions
    /// whose supports overlap there.
    pub fn bandwidth_on(&self, lo: f64, hi: f64) -> usize {
        let n = self.len();
        let supports: Vec<Support> = (0..n).map(|i| self.support(i)).collect();
        let mut band = 0;
        for i in 0..n {
            for j in (i + band + 1)..n {
                if supports[i].overlaps_within(&supports[j], lo, hi) {
                    band = j - i;
                }
            }
        }
        if self.biased {
            // The bias block pairs every weight with every bias.
            self.row_len() - 1
        } else {
            band
        }
    }

    /// Sum of all basis values at `s`.
    pub fn denominator(&self, s: f64) -> f64 {
        (0..self.len()).map(|i| self.value(i, s)).sum()
    }

    /// Writes the regressor row at `s` into `row` (length [`Self::row_len`]).
    ///
    /// Unbiased rows hold `psi_i(s) s / sum_j psi_j(s)`; biased rows append
    /// `psi_i(s) / sum_j psi_j(s)`, so `f(s) = row . [w; b]`.
    pub fn forcing_row_into(&self, s: f64, row: &mut [f64]) -> Result<()> {
        let n = self.len();
        debug_assert_eq!(row.len(), self.row_len());
        let mut total = 0.0;
        for (i, slot) in row[..n].iter_mut().enumerate() {
            let v = self.value(i, s);
            *slot = v;
            total += v;
        }
        if !(total > 0.0) {
            return Err(DmpError::DegenerateCoverage { phase: s });
        }
        if self.biased {
            let (w, b) = row.split_at_mut(n);
            for (wi, bi) in w.iter_mut().zip(b.iter_mut()) {
                *bi = *wi / total;
                *wi = *bi * s;
            }
        } else {
            for v in row.iter_mut() {
                *v = *v / total * s;
            }
        }
        Ok(())
    }

    pub fn forcing_row(&self, s: f64) -> Result<Vec<f64>> {
        let mut row = vec![0.0; self.row_len()];
        self.forcing_row_into(s, &mut row)?;
        Ok(row)
    }
}
