//! GF(2^8) arithmetic over the polynomial x^8 + x^4 + x^3 + x^2 + 1.
//!
//! Log/antilog tables are built once on first use. The field element
//! `ALPHA` = x is primitive for this modulus, so exp/log cover all 255
//! nonzero elements.

use std::sync::OnceLock;

/// Reduction polynomial, bit i = coefficient of x^i (0x11D).
pub const POLY: u16 = 0x11D;

/// Order of the multiplicative group.
pub const GROUP_ORDER: usize = 255;

struct Tables {
    /// exp[i] = alpha^i for i in 0..510 (doubled to skip a mod).
    exp: [u8; 510],
    /// log[a] for a in 1..=255; log[0] is a poisoned sentinel.
    log: [u16; 256],
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut exp = [0u8; 510];
        let mut log = [0u16; 256];
        let mut acc: u16 = 1;
        for i in 0..GROUP_ORDER {
            exp[i] = acc as u8;
            log[acc as usize] = i as u16;
            acc <<= 1;
            if acc & 0x100 != 0 {
                acc ^= POLY;
            }
        }
        for i in GROUP_ORDER..510 {
            exp[i] = exp[i - GROUP_ORDER];
        }
        log[0] = u16::MAX;
        Tables { exp, log }
    })
}

pub fn add(a: u8, b: u8) -> u8 {
    a ^ b
}

pub fn mul(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        return 0;
    }
    let t = tables();
    t.exp[t.log[a as usize] as usize + t.log[b as usize] as usize]
}

/// alpha^i for any non-negative exponent.
pub fn alpha_pow(i: usize) -> u8 {
    tables().exp[i % GROUP_ORDER]
}

/// Discrete log base alpha. Panics on zero, which has none.
pub fn log(a: u8) -> usize {
    assert!(a != 0, "log of zero");
    tables().log[a as usize] as usize
}

pub fn inv(a: u8) -> u8 {
    assert!(a != 0, "inverse of zero");
    let t = tables();
    t.exp[GROUP_ORDER - t.log[a as usize] as usize]
}

pub fn div(a: u8, b: u8) -> u8 {
    assert!(b != 0, "division by zero");
    if a == 0 {
        return 0;
    }
    let t = tables();
    t.exp[t.log[a as usize] as usize + GROUP_ORDER - t.log[b as usize] as usize]
}

/// Evaluate a polynomial (coefficients low-order first) at x.
pub fn poly_eval(coeffs: &[u8], x: u8) -> u8 {
    let mut acc = 0u8;
    for &c in coeffs.iter().rev() {
        acc = add(mul(acc, x), c);
    }
    acc
}
