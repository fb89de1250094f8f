//! Exact decimal digits of π and e.
//!
//! π comes from the unbounded streaming spigot (Gibbons 2006 form): the
//! state is a linear fractional transformation held as big integers, and
//! a digit is emitted whenever the image of the remaining tail pins it
//! down. The residue term swings negative between emissions, so the
//! state is signed and divisions floor rather than truncate. e comes
//! from the factorial series e − 2 = Σ_{k≥2} 1/k!, evaluated backwards
//! in scaled integer arithmetic.
//!
//! Both produce *exact* digits, not rounded float prefixes. Cost grows
//! quadratically with the digit count, which is why callers cap request
//! lengths.

use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint, Sign};

/// Floor division for a positive divisor; `/` on `BigInt` truncates
/// toward zero, which disagrees on negative numerators.
fn div_floor(a: BigInt, b: &BigInt) -> BigInt {
    let q = &a / b;
    if (a % b).sign() == Sign::Minus {
        q - 1
    } else {
        q
    }
}

/// Raw spigot output: the integer digit first (3), then the fractional
/// digits 1, 4, 1, 5, ...
pub(crate) fn pi_spigot_raw(n: usize) -> Vec<u8> {
    let mut digits = Vec::with_capacity(n);
    let mut q = BigInt::from(1);
    let mut r = BigInt::from(0);
    let mut t = BigInt::from(1);
    let mut k = BigInt::from(1);
    let mut m = BigInt::from(3);
    let mut l = BigInt::from(3);
    while digits.len() < n {
        // the digit is safe to emit once it no longer depends on the
        // unknown tail: 4q + r − t < m·t
        if &q * 4 + &r - &t < &m * &t {
            digits.push(u8::try_from(&m).expect("emitted digit is 0..=9"));
            let next_m = div_floor((&q * 3 + &r) * 10, &t) - &m * 10;
            r = (&r - &m * &t) * 10;
            q *= 10;
            m = next_m;
        } else {
            let tl = &t * &l;
            let next_m = div_floor(&q * (&k * 7 + 2) + &r * &l, &tl);
            r = (&q * 2 + &r) * &l;
            t = tl;
            q *= &k;
            k += 1u32;
            m = next_m;
            l += 2u32;
        }
    }
    digits
}

/// First `n` fractional digits of π: 1, 4, 1, 5, 9, ...
pub(crate) fn pi_fractional(n: usize) -> Vec<u8> {
    let mut raw = pi_spigot_raw(n + 1);
    raw.remove(0);
    raw
}

/// First `n` fractional digits of e: 7, 1, 8, 2, 8, ...
///
/// Evaluates P·(e − 2) with P = 10^(n+guard) through the backward
/// recurrence x_k = (P + x_{k+1}) / k, truncating at the first factorial
/// beyond the working precision. Each truncated division is off by less
/// than one unit and later divisions shrink the error, so a handful of
/// guard digits suffice; the result is recomputed at higher guard until
/// two runs agree, which rules out a carry sneaking across the cut.
pub(crate) fn e_fractional(n: usize) -> Vec<u8> {
    let mut guard = 12usize;
    let mut last = e_fractional_with_guard(n, guard);
    loop {
        guard += 12;
        let next = e_fractional_with_guard(n, guard);
        if next == last {
            return next;
        }
        last = next;
    }
}

fn e_fractional_with_guard(n: usize, guard: usize) -> Vec<u8> {
    let scale = BigUint::from(10u32).pow((n + guard) as u32);
    // smallest K with (K+1)! outweighing the scale, so the dropped tail
    // is below one unit of the guarded precision
    let mut k = 2u64;
    let mut factorial = BigUint::from(2u32);
    while factorial <= scale {
        k += 1;
        factorial *= k;
    }
    let mut acc = BigUint::from(0u32);
    for divisor in (2..=k).rev() {
        acc = (acc + &scale) / divisor;
    }
    // acc ≈ scale · 0.718... : exactly n + guard digits long
    let text = acc.to_str_radix(10);
    debug_assert_eq!(text.len(), n + guard);
    text.bytes().take(n).map(|b| b - b'0').collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    // reference prefixes frozen from an independent arbitrary-precision
    // computation before this module was written
    const PI_100: &str = "1415926535897932384626433832795028841971693993751058209749445923078164062862089986280348253421170679";
    const E_100: &str = "7182818284590452353602874713526624977572470936999595749669676277240766303535475945713821785251664274";

    fn to_digits(s: &str) -> Vec<u8> {
        s.bytes().map(|b| b - b'0').collect()
    }

    #[test]
    fn spigot_emits_the_integer_digit_first() {
        assert_eq!(
            pi_spigot_raw(20),
            vec![3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8, 9, 7, 9, 3, 2, 3, 8, 4]
        );
    }

    #[test]
    fn pi_fractional_matches_reference_prefix() {
        assert_eq!(pi_fractional(100), to_digits(PI_100));
    }

    #[test]
    fn e_fractional_matches_reference_prefix() {
        assert_eq!(e_fractional(100), to_digits(E_100));
    }

    #[test]
    fn short_requests_are_prefixes_of_long_ones() {
        assert_eq!(pi_fractional(40), pi_fractional(400)[..40]);
        assert_eq!(e_fractional(40), e_fractional(400)[..40]);
    }

    #[test]
    fn zero_length_requests_are_empty() {
        assert!(pi_fractional(0).is_empty());
        assert!(e_fractional(0).is_empty());
    }
}
