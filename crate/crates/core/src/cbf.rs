//! Discrete-time barrier function on HTO and the per-unit admissible current
//! region it induces.
//!
//! Substituting the Euler stepper into `h(x(t+1)) >= (1 - alpha) h(x(t))`
//! gives a cubic inequality in the applied current,
//! `k1 u^3 - k2 u^2 + k3 u + k4 >= 0`, whose coefficients depend only on the
//! current state. [`nonneg_region`] intersects its nonnegative region with a
//! box, producing at most two closed intervals.

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use crate::config::ElectrolyzerParams;
use crate::plant::{self, ElectrolyzerState};
use crate::roots;

/// Barrier value `hto_max - hto`; nonnegative exactly on the safe set.
pub fn safe_value(p: &ElectrolyzerParams, s: &ElectrolyzerState) -> f64 {
    p.hto_max - plant::hto(p, s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CbfCoefficients {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k41: f64,
    pub k42: f64,
}

impl CbfCoefficients {
    pub fn k4(&self) -> f64 {
        self.k41 - self.k42
    }

    /// Polynomial in descending powers.
    pub fn polynomial(&self) -> [f64; 4] {
        [self.k1, -self.k2, self.k3, self.k4()]
    }

    /// Largest coefficient magnitude; the reference for relative tolerances.
    pub fn scale(&self) -> f64 {
        self.k1.abs().max(self.k2.abs()).max(self.k3.abs()).max(self.k4().abs())
    }
}

pub fn cbf_coefficients(
    p: &ElectrolyzerParams,
    s: &ElectrolyzerState,
    t_a: f64,
    alpha: f64,
    dt: f64,
) -> CbfCoefficients {
    let t = s.t_ele;
    let t_h = plant::hto_temperature(p, t);
    // Cooled temperature, expressed on the HTO temperature scale.
    let a = plant::hto_temperature(p, t - dt / (p.r_th * p.c_th) * (t - t_a));
    let b = dt / p.c_th * plant::resistance(p, t);
    let c = s.n_sep_g + s.n_sep_l * dt / p.tau_sep_l;
    let gas_volume = p.pressure * p.v_sep_g / p.gas_const;
    let d = p.eta_f * f64::from(p.n_cell) * dt / (2.0 * p.z_h * p.faraday) * s.n_sep_g * t_h / gas_volume;
    CbfCoefficients {
        k1: b * d,
        k2: b * c,
        k3: a * d,
        k41: (1.0 - alpha) * t_h * s.n_sep_g + alpha * p.hto_max * gas_volume,
        k42: a * c,
    }
}

#[inline]
pub fn cubic_value(c: &CbfCoefficients, u: f64) -> f64 {
    roots::eval(c.polynomial(), u)
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo <= self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, u: f64) -> bool {
        self.lo <= u && u <= self.hi
    }

    pub fn clamp(&self, u: f64) -> f64 {
        u.clamp(self.lo, self.hi)
    }
}

/// Union of at most two disjoint closed intervals, sorted ascending.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleSet {
    pub intervals: ArrayVec<Interval, 2>,
}

impl AdmissibleSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(iv: Interval) -> Self {
        let mut intervals = ArrayVec::new();
        if !iv.is_empty() {
            intervals.push(iv);
        }
        Self { intervals }
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Smallest admissible current.
    pub fn u_minus(&self) -> Option<f64> {
        self.intervals.first().map(|iv| iv.lo)
    }

    pub fn u_max(&self) -> Option<f64> {
        self.intervals.last().map(|iv| iv.hi)
    }

    pub fn contains(&self, u: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(u))
    }

    /// Closest admissible point; equidistant candidates resolve to the
    /// smaller current.
    pub fn nearest(&self, u: f64) -> Option<f64> {
        let mut best: Option<(f64, f64)> = None;
        for iv in &self.intervals {
            let x = iv.clamp(u);
            let d = (x - u).abs();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((x, d));
            }
        }
        best.map(|(x, _)| x)
    }

    /// Index of the interval holding `u`.
    pub fn interval_of(&self, u: f64) -> Option<usize> {
        self.intervals.iter().position(|iv| iv.contains(u))
    }
}

/// Subset of `bounds` on which the cubic is nonnegative.
///
/// Interior boundaries are real roots of the cubic, moved inward where
/// rounding left them on the negative side so that every returned
/// non-degenerate endpoint satisfies `cubic_value >= 0`. Isolated tangency
/// points are kept as degenerate intervals when the cubic there is at least
/// `-tol * scale`.
pub fn nonneg_region(c: &CbfCoefficients, bounds: Interval, tol: f64) -> AdmissibleSet {
    if bounds.is_empty() {
        return AdmissibleSet::empty();
    }
    let poly = c.polynomial();
    let scale = c.scale();
    if scale == 0.0 {
        return AdmissibleSet::single(bounds);
    }
    let slack = tol * scale;
    let f = |u: f64| roots::eval(poly, u);

    if bounds.lo == bounds.hi {
        return if f(bounds.lo) >= -slack {
            AdmissibleSet::single(bounds)
        } else {
            AdmissibleSet::empty()
        };
    }

    let inner: ArrayVec<f64, 3> = roots::real_roots(poly)
        .into_iter()
        .filter(|&r| r > bounds.lo && r < bounds.hi)
        .collect();
    let mut cuts: ArrayVec<f64, 5> = ArrayVec::new();
    cuts.push(bounds.lo);
    cuts.extend(inner.iter().copied());
    cuts.push(bounds.hi);

    let mut kept: Vec<Interval> = Vec::with_capacity(3);
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        if f(mid) > 0.0 {
            match kept.last_mut() {
                Some(last) if last.hi == w[0] => last.hi = w[1],
                _ => kept.push(Interval::new(w[0], w[1])),
            }
        }
    }

    for iv in &mut kept {
        let mid = 0.5 * (iv.lo + iv.hi);
        if f(iv.lo) < 0.0 {
            iv.lo = first_nonneg(&f, iv.lo, mid);
        }
        if f(iv.hi) < 0.0 {
            iv.hi = first_nonneg(&f, iv.hi, mid);
        }
    }

    // Tangency points and boundary touches left out by the sign test.
    let mut touches: ArrayVec<f64, 5> = ArrayVec::new();
    for &x in &cuts {
        let covered = kept.iter().any(|iv| iv.contains(x));
        if !covered && f(x) >= -slack {
            touches.push(x);
        }
    }
    for x in touches {
        kept.push(Interval::new(x, x));
    }
    kept.sort_by(|a, b| a.lo.total_cmp(&b.lo));

    if kept.len() > 2 {
        kept.retain(|iv| iv.lo < iv.hi);
    }
    let mut out = AdmissibleSet::empty();
    for iv in kept.into_iter().take(2) {
        out.intervals.push(iv);
    }
    out
}

/// Walk from `from` (negative) toward `toward` (positive) and return the
/// point closest to `from` with a nonnegative value.
fn first_nonneg(f: &impl Fn(f64) -> f64, from: f64, toward: f64) -> f64 {
    let (mut bad, mut good) = (from, toward);
    for _ in 0..200 {
        let mid = 0.5 * (bad + good);
        if mid == bad || mid == good {
            break;
        }
        if f(mid) >= 0.0 {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}
