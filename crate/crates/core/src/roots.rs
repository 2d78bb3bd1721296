//! Real roots of polynomials of degree at most three.
//!
//! Coefficients are ordered from the highest power down: `[c3, c2, c1, c0]`.
//! The cubic case uses the trigonometric or Cardano closed form on the
//! depressed cubic followed by a Newton polish. When the discriminant is
//! within a relative `1e-12` of zero the closed form is unreliable, and roots
//! are instead bracketed on the monotone pieces between critical points and
//! bisected.

use arrayvec::ArrayVec;

pub type Roots = ArrayVec<f64, 3>;

/// Leading coefficients below this fraction of the largest are treated as zero.
pub const DEGENERATE_REL: f64 = 1e-14;
const DISCRIMINANT_REL: f64 = 1e-12;

#[inline]
pub fn eval(c: [f64; 4], x: f64) -> f64 {
    ((c[0] * x + c[1]) * x + c[2]) * x + c[3]
}

#[inline]
fn eval_derivative(c: [f64; 4], x: f64) -> f64 {
    (3.0 * c[0] * x + 2.0 * c[1]) * x + c[2]
}

/// Sum of absolute term magnitudes at `x`; the natural rounding scale of `eval`.
#[inline]
pub fn magnitude(c: [f64; 4], x: f64) -> f64 {
    let ax = x.abs();
    ((c[0].abs() * ax + c[1].abs()) * ax + c[2].abs()) * ax + c[3].abs()
}

fn coefficient_scale(c: [f64; 4]) -> f64 {
    c.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// All distinct real roots, sorted ascending. An identically zero polynomial
/// has no isolated roots and returns an empty list.
pub fn real_roots(c: [f64; 4]) -> Roots {
    let scale = coefficient_scale(c);
    if scale == 0.0 || !scale.is_finite() {
        return Roots::new();
    }
    if c[0].abs() < DEGENERATE_REL * scale {
        return quadratic_roots(c[1], c[2], c[3], scale);
    }
    cubic_roots(c)
}

/// Roots of `a x^2 + b x + c`, dropping to the linear or constant case when
/// the leading coefficients are negligible against `scale`.
pub fn quadratic_roots(a: f64, b: f64, c: f64, scale: f64) -> Roots {
    let mut out = Roots::new();
    if a.abs() < DEGENERATE_REL * scale {
        if b.abs() >= DEGENERATE_REL * scale {
            out.push(-c / b);
        }
        return out;
    }
    let disc = b * b - 4.0 * a * c;
    let norm = (b * b).max((4.0 * a * c).abs());
    if disc.abs() <= DISCRIMINANT_REL * norm {
        out.push(-b / (2.0 * a));
    } else if disc > 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        let mut r = [q / a, if q != 0.0 { c / q } else { 0.0 }];
        r.sort_by(f64::total_cmp);
        out.push(r[0]);
        if r[1] != r[0] {
            out.push(r[1]);
        }
    }
    out
}

fn cubic_roots(c: [f64; 4]) -> Roots {
    let b = c[1] / c[0];
    let cc = c[2] / c[0];
    let d = c[3] / c[0];
    let shift = b / 3.0;
    let p = cc - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * cc / 3.0 + d;
    let disc = -(4.0 * p * p * p + 27.0 * q * q);
    let norm = 4.0 * p.abs().powi(3) + 27.0 * q * q;

    let mut out = Roots::new();
    if norm == 0.0 {
        out.push(-shift);
        return polish_all(c, out);
    }
    if disc.abs() <= DISCRIMINANT_REL * norm {
        return real_roots_bracketed(c);
    }
    if disc > 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        for k in 0..3 {
            let t = m * (theta - 2.0 * std::f64::consts::PI * f64::from(k) / 3.0).cos();
            out.push(t - shift);
        }
    } else {
        let s = (q * q / 4.0 + p * p * p / 27.0).sqrt();
        let a = -q.signum() * (q.abs() / 2.0 + s).cbrt();
        let t = if a != 0.0 { a - p / (3.0 * a) } else { 0.0 };
        out.push(t - shift);
    }
    polish_all(c, out)
}

fn polish(c: [f64; 4], mut x: f64) -> f64 {
    let mut fx = eval(c, x).abs();
    for _ in 0..6 {
        let d = eval_derivative(c, x);
        if d == 0.0 || fx == 0.0 {
            break;
        }
        let next = x - eval(c, x) / d;
        let fn_ = eval(c, next).abs();
        if !(fn_ < fx) {
            break;
        }
        x = next;
        fx = fn_;
    }
    x
}

fn polish_all(c: [f64; 4], roots: Roots) -> Roots {
    let mut v: Roots = roots.into_iter().map(|r| polish(c, r)).collect();
    v.sort_by(f64::total_cmp);
    dedup(v)
}

fn dedup(v: Roots) -> Roots {
    let mut out = Roots::new();
    for r in v {
        match out.last() {
            Some(&prev) if (r - prev).abs() <= 1e-12 * (1.0 + r.abs()) => {}
            _ => out.push(r),
        }
    }
    out
}

/// Bracketing fallback: split the real line at the critical points, bisect
/// every monotone piece with a sign change, and keep critical points where
/// the polynomial touches zero.
pub fn real_roots_bracketed(c: [f64; 4]) -> Roots {
    let scale = coefficient_scale(c);
    if scale == 0.0 {
        return Roots::new();
    }
    if c[0].abs() < DEGENERATE_REL * scale {
        return quadratic_roots(c[1], c[2], c[3], scale);
    }
    let bound = 1.0 + c[1].abs().max(c[2].abs()).max(c[3].abs()) / c[0].abs();
    let crit = quadratic_roots(3.0 * c[0], 2.0 * c[1], c[2], scale);

    let mut points: ArrayVec<f64, 4> = ArrayVec::new();
    points.push(-bound);
    for &x in &crit {
        if x > -bound && x < bound {
            points.push(x);
        }
    }
    points.push(bound);

    let mut out = Roots::new();
    for w in points.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (mut flo, fhi) = (eval(c, lo), eval(c, hi));
        if flo == 0.0 {
            push_unique(&mut out, lo);
            continue;
        }
        if fhi == 0.0 || flo.signum() == fhi.signum() {
            continue;
        }
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = eval(c, mid);
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        let root = if eval(c, lo).abs() <= eval(c, hi).abs() { lo } else { hi };
        push_unique(&mut out, root);
    }
    for &x in &crit {
        if eval(c, x).abs() <= 1e-12 * magnitude(c, x) {
            push_unique(&mut out, x);
        }
    }
    if eval(c, bound) == 0.0 {
        push_unique(&mut out, bound);
    }
    let mut v = out;
    v.sort_by(f64::total_cmp);
    polish_all(c, v)
}

fn push_unique(out: &mut Roots, x: f64) {
    if out.iter().all(|&r| (r - x).abs() > 1e-12 * (1.0 + x.abs())) && !out.is_full() {
        out.push(x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn from_roots(k: f64, r: &[f64]) -> [f64; 4] {
        // k (x - r0)(x - r1)(x - r2)
        let (a, b, c) = (r[0], r[1], r[2]);
        [k, -k * (a + b + c), k * (a * b + a * c + b * c), -k * a * b * c]
    }

    fn assert_roots(got: &Roots, want: &[f64], tol: f64) {
        assert_eq!(got.len(), want.len(), "got {got:?}, want {want:?}");
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= tol * (1.0 + w.abs()), "got {got:?}, want {want:?}");
        }
    }

    #[test]
    fn three_distinct_roots() {
        let c = from_roots(2.0, &[-1.0, 0.5, 3.0]);
        assert_roots(&real_roots(c), &[-1.0, 0.5, 3.0], 1e-12);
        assert_roots(&real_roots_bracketed(c), &[-1.0, 0.5, 3.0], 1e-12);
    }

    #[test]
    fn single_real_root() {
        // (x - 2)(x^2 + 1)
        let c = [1.0, -2.0, 1.0, -2.0];
        assert_roots(&real_roots(c), &[2.0], 1e-14);
    }

    #[test]
    fn double_and_triple_roots() {
        let c = from_roots(1.0, &[1.0, 1.0, 4.0]);
        assert_roots(&real_roots(c), &[1.0, 4.0], 1e-7);
        let c = from_roots(1.0, &[2.0, 2.0, 2.0]);
        assert_roots(&real_roots(c), &[2.0], 1e-5);
    }

    #[test]
    fn lower_degrees() {
        assert_roots(&real_roots([0.0, 1.0, -3.0, 2.0]), &[1.0, 2.0], 1e-14);
        assert_roots(&real_roots([0.0, 0.0, 2.0, -1.0]), &[0.5], 1e-15);
        assert!(real_roots([0.0, 0.0, 0.0, 5.0]).is_empty());
        assert!(real_roots([0.0; 4]).is_empty());
        assert!(real_roots([0.0, 1.0, 0.0, 1.0]).is_empty());
    }

    #[test]
    fn badly_scaled_cubic() {
        // Coefficient magnitudes seen in CBF constraints: tiny cubic term,
        // roots spread over several decades.
        let c = from_roots(3.8e-10, &[1.7, 42.0, 2100.0]);
        let got = real_roots(c);
        assert_eq!(got.len(), 3);
        for r in &got {
            assert!(eval(c, *r).abs() <= 1e-12 * magnitude(c, *r));
        }
    }

    proptest! {
        #[test]
        fn roots_of_products(
            k in prop_oneof![-1e3f64..-1e-6, 1e-6f64..1e3],
            mut r in proptest::collection::vec(-50.0f64..50.0, 3),
        ) {
            r.sort_by(f64::total_cmp);
            prop_assume!(r[1] - r[0] > 1e-3 && r[2] - r[1] > 1e-3);
            let c = from_roots(k, &r);
            let got = real_roots(c);
            prop_assert_eq!(got.len(), 3);
            for (g, w) in got.iter().zip(&r) {
                prop_assert!((g - w).abs() <= 1e-7 * (1.0 + w.abs()));
            }
        }

        #[test]
        fn closed_form_agrees_with_bracketing(
            c in proptest::collection::vec(-10.0f64..10.0, 4),
        ) {
            let c = [c[0], c[1], c[2], c[3]];
            prop_assume!(c[0].abs() > 1e-3);
            let a = real_roots(c);
            let b = real_roots_bracketed(c);
            // Near-double roots may merge in one method; compare residuals instead.
            for r in a.iter().chain(b.iter()) {
                prop_assert!(eval(c, *r).abs() <= 1e-9 * magnitude(c, *r));
            }
            // Every sign change is found by both.
            for roots in [&a, &b] {
                let mut prev = f64::NEG_INFINITY;
                for &r in roots.iter() {
                    prop_assert!(r > prev);
                    prev = r;
                }
            }
            let sign_changes = |roots: &Roots| roots.iter().filter(|&&r| {
                let h = 1e-6 * (1.0 + r.abs());
                eval(c, r - h).signum() != eval(c, r + h).signum()
            }).count();
            prop_assert_eq!(sign_changes(&a), sign_changes(&b));
        }
    }
}
