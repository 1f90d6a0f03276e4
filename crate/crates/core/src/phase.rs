//! Exact reduction of `m * t / b` modulo 1.
//!
//! Perturbation terms have frequencies `alpha = m * 2*pi / b` with an integer
//! multiple `m` that can be far beyond `2^53`. Evaluating `sin(alpha * t)`
//! through a rounded product would lose every digit of the phase, so the phase
//! is reduced exactly from the binary expansions of `m`, `t` and `b`.

const TWO_POW_50: f64 = 1125899906842624.0;

/// Fractional part of `m * t / b` in `[0, 1)`, for integer-valued `m >= 0`,
/// finite `t` and `b > 0`.
pub fn cycle_fraction(m: f64, t: f64, b: f64) -> f64 {
    debug_assert!(m >= 0.0 && m.fract() == 0.0 && b > 0.0);
    if m == 0.0 || t == 0.0 {
        return 0.0;
    }
    if (m * t / b).abs() < TWO_POW_50 {
        return dd_fraction(m, t, b);
    }
    let r = exact_fraction(m, t.abs(), b);
    if t < 0.0 && r != 0.0 {
        let s = 1.0 - r;
        if s >= 1.0 { 0.0 } else { s }
    } else {
        r
    }
}

/// The same phase folded into `[-1/2, 1/2)`, which keeps small phases
/// accurate when converted to an angle.
pub fn centered_cycle_fraction(m: f64, t: f64, b: f64) -> f64 {
    let f = cycle_fraction(m, t, b);
    if f >= 0.5 { f - 1.0 } else { f }
}

/// `(sin, cos)` of `2*pi*c` for a centered cycle fraction `c`.
pub fn turn_sin_cos(c: f64) -> (f64, f64) {
    (std::f64::consts::TAU * c).sin_cos()
}

// m*t = p + e exactly; p = q*b + r exactly; the quotient is q + (r + e)/b.
fn dd_fraction(m: f64, t: f64, b: f64) -> f64 {
    let p = m * t;
    let e = m.mul_add(t, -p);
    let q = p / b;
    let r = (-q).mul_add(b, p);
    let lo = (r + e) / b;
    let f = (q - q.floor()) + lo;
    let f = f - f.floor();
    if f >= 1.0 { 0.0 } else { f }
}

fn decompose(x: f64) -> (u64, i32) {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut mant, mut e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    let tz = mant.trailing_zeros();
    mant >>= tz;
    e += tz as i32;
    (mant, e)
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow2_mod(mut s: u32, m: u64) -> u64 {
    let mut result = 1 % m;
    let mut base = 2 % m;
    while s > 0 {
        if s & 1 == 1 {
            result = mul_mod(result, base, m);
        }
        base = mul_mod(base, base, m);
        s >>= 1;
    }
    result
}

fn scale_pow2(mut x: f64, mut k: i32) -> f64 {
    while k > 1000 {
        x *= 2f64.powi(-1000);
        k -= 1000;
    }
    x * 2f64.powi(-k)
}

fn exact_fraction(m: f64, t: f64, b: f64) -> f64 {
    let (mm, em) = decompose(m);
    let (mt, et) = decompose(t);
    let (mb, eb) = decompose(b);
    let p = mm as u128 * mt as u128;
    let s = em + et - eb;
    if s >= 0 {
        let r = mul_mod((p % mb as u128) as u64, pow2_mod(s as u32, mb), mb);
        return r as f64 / mb as f64;
    }
    let k = (-s) as u32;
    let bits_b = 64 - mb.leading_zeros();
    if k + bits_b >= 127 {
        return scale_pow2(p as f64 / mb as f64, k as i32);
    }
    let d = (mb as u128) << k;
    let r = p % d;
    r as f64 / d as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_phases() {
        assert_eq!(cycle_fraction(1.0, 0.5, 1.0), 0.5);
        assert_eq!(cycle_fraction(3.0, 1.0, 2.0), 0.5);
        assert_eq!(cycle_fraction(2.0, -0.25, 1.0), 0.5);
        assert_eq!(cycle_fraction(5.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn integer_periods_vanish() {
        let b = std::f64::consts::TAU;
        assert_eq!(cycle_fraction(1e30, b, b), 0.0);
        assert_eq!(cycle_fraction(1e30, 3.0 * b, b), 0.0);
    }

    #[test]
    fn huge_multiple_matches_exact_arithmetic() {
        // m = 2^80, t = 0.75, b = 1: m*t is an integer, phase 0.
        let m = 2f64.powi(80);
        assert_eq!(cycle_fraction(m, 0.75, 1.0), 0.0);
        // 2^70 + 3 * 2^20 is exactly representable and congruent to 1 mod 3.
        let m = 2f64.powi(70) + 3.0 * 2f64.powi(20);
        let f = cycle_fraction(m, 1.0, 3.0);
        // 2^70 mod 3 = 1, so the fraction is 1/3.
        assert!((f - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn negative_times_reflect() {
        let m = 2f64.powi(70) + 3.0 * 2f64.powi(20);
        let f = cycle_fraction(m, -1.0, 3.0);
        assert!((f - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn centered_range() {
        let c = centered_cycle_fraction(1.0, 0.75, 1.0);
        assert_eq!(c, -0.25);
    }
}
