//! Nice M-estimator losses.

use crate::error::{bail, Result};
#[cfg(not(feature = "parallel"))]
#[allow(unused_imports)]
use crate::float::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    Lp,
    Huber,
    L1L2,
    Fair,
}

/// A loss `M` with growth exponent `p` and lower-growth constant `c_m`, i.e.
/// `c_m * a/b <= M(a)/M(b) <= (a/b)^p` for `a >= b > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    pub kind: LossKind,
    pub p: f64,
    pub c_m: f64,
    /// Huber threshold or Fair scale; ignored by the other kinds.
    pub param: f64,
}

impl LossSpec {
    /// `M(x) = |x|^p`, `p` in `[1, 2]`.
    pub fn lp(p: f64) -> Result<Self> {
        if !(1.0..=2.0).contains(&p) {
            bail!(InvalidParameter, "Lp exponent {p} outside [1, 2]");
        }
        Ok(LossSpec { kind: LossKind::Lp, p, c_m: 1.0, param: 0.0 })
    }

    pub fn huber(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            bail!(InvalidParameter, "Huber threshold must be positive, got {tau}");
        }
        Ok(LossSpec { kind: LossKind::Huber, p: 2.0, c_m: 0.5, param: tau })
    }

    pub fn l1l2() -> Self {
        let mut l = LossSpec { kind: LossKind::L1L2, p: 2.0, c_m: 1.0, param: 0.0 };
        l.c_m = l.numeric_c_m();
        l
    }

    pub fn fair(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            bail!(InvalidParameter, "Fair scale must be positive, got {c}");
        }
        let mut l = LossSpec { kind: LossKind::Fair, p: 2.0, c_m: 1.0, param: c };
        l.c_m = l.numeric_c_m();
        Ok(l)
    }

    /// True for the growth-2 class (Huber, L1-L2, Fair, and `|x|^2`).
    pub fn is_m2(&self) -> bool {
        self.kind != LossKind::Lp
    }

    /// All supported losses are convex.
    pub fn is_convex(&self) -> bool {
        true
    }

    /// `M(x)`. Callers are responsible for finiteness; see [`m_value`].
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        let a = x.abs();
        match self.kind {
            LossKind::Lp => {
                if self.p == 1.0 {
                    a
                } else if self.p == 2.0 {
                    a * a
                } else {
                    a.powf(self.p)
                }
            }
            LossKind::Huber => {
                let tau = self.param;
                if a <= tau {
                    a * a / (2.0 * tau)
                } else {
                    a - tau / 2.0
                }
            }
            // 2(sqrt(1 + x^2/2) - 1) without cancellation near 0
            LossKind::L1L2 => a * a / ((1.0 + a * a / 2.0).sqrt() + 1.0),
            LossKind::Fair => {
                let c = self.param;
                let u = a / c;
                let g = if u < 1e-3 {
                    u * u * (0.5 - u * (1.0 / 3.0 - u * (0.25 - u / 5.0)))
                } else {
                    u - u.ln_1p()
                };
                c * c * g
            }
        }
    }

    /// `M'(x)`, odd in `x`. For `Lp` with `p = 1` the value at 0 is 0.
    pub fn derivative(&self, x: f64) -> f64 {
        let a = x.abs();
        let s = if x < 0.0 { -1.0 } else { 1.0 };
        let d = match self.kind {
            LossKind::Lp => {
                if a == 0.0 {
                    0.0
                } else {
                    self.p * a.powf(self.p - 1.0)
                }
            }
            LossKind::Huber => {
                if a <= self.param {
                    a / self.param
                } else {
                    1.0
                }
            }
            LossKind::L1L2 => a / (1.0 + a * a / 2.0).sqrt(),
            LossKind::Fair => a / (1.0 + a / self.param),
        };
        s * d
    }

    /// `M'(|r|) / (2|r|)` with `|r|` floored at `floor`: the reweighting used by
    /// IRLS and majorize-minimize steps.
    pub fn irls_weight(&self, r: f64, floor: f64) -> f64 {
        let a = r.abs().max(floor);
        match self.kind {
            LossKind::Lp => 0.5 * self.p * a.powf(self.p - 2.0),
            LossKind::Huber => {
                if a <= self.param {
                    0.5 / self.param
                } else {
                    0.5 / a
                }
            }
            LossKind::L1L2 => 0.5 / (1.0 + a * a / 2.0).sqrt(),
            LossKind::Fair => 0.5 / (1.0 + a / self.param),
        }
    }

    /// Smallest observed `M(a) b / (M(b) a)` over a log grid of
    /// `1e-6 <= b <= a <= 1e6`, capped at 1.
    pub fn numeric_c_m(&self) -> f64 {
        const POINTS: usize = 241;
        let grid: [f64; POINTS] = core::array::from_fn(|i| {
            let e = -6.0 + 12.0 * (i as f64) / ((POINTS - 1) as f64);
            10f64.powf(e)
        });
        let vals: [f64; POINTS] = core::array::from_fn(|i| self.value(grid[i]) / grid[i]);
        let mut best: f64 = 1.0;
        for bi in 0..POINTS {
            for ai in bi..POINTS {
                // M(a)/a divided by M(b)/b
                best = best.min(vals[ai] / vals[bi]);
            }
        }
        best
    }
}

/// `M(x)`, rejecting non-finite input.
pub fn m_value(loss: &LossSpec, x: f64) -> Result<f64> {
    if !x.is_finite() {
        bail!(Domain, "loss evaluated at non-finite {x}");
    }
    Ok(loss.value(x))
}
