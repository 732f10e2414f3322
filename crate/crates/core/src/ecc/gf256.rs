//! GF(2^8) arithmetic with the primitive polynomial x^8 + x^4 + x^3 + x^2 + 1.

/// Primitive polynomial including the x^8 term.
pub const PRIMITIVE_POLY: u16 = 0x11D;

pub(crate) struct Tables {
    pub exp: [u8; 512],
    pub log: [u8; 256],
}

const fn build() -> Tables {
    let mut exp = [0u8; 512];
    let mut log = [0u8; 256];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x as u8;
        log[x as usize] = i as u8;
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= PRIMITIVE_POLY;
        }
        i += 1;
    }
    while i < 512 {
        exp[i] = exp[i - 255];
        i += 1;
    }
    Tables { exp, log }
}

pub(crate) static TABLES: Tables = build();

/// α^n for any n ≥ 0.
#[inline]
pub fn exp(n: usize) -> u8 {
    TABLES.exp[n % 255]
}

/// Discrete log of a nonzero element.
#[inline]
pub fn log(a: u8) -> usize {
    debug_assert!(a != 0);
    TABLES.log[a as usize] as usize
}

#[inline]
pub fn mul(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        0
    } else {
        TABLES.exp[TABLES.log[a as usize] as usize + TABLES.log[b as usize] as usize]
    }
}

/// Multiplicative inverse; panics on zero.
#[inline]
pub fn inv(a: u8) -> u8 {
    assert!(a != 0, "zero has no inverse in GF(256)");
    TABLES.exp[255 - TABLES.log[a as usize] as usize]
}

#[inline]
pub fn div(a: u8, b: u8) -> u8 {
    assert!(b != 0, "division by zero in GF(256)");
    if a == 0 {
        0
    } else {
        TABLES.exp[TABLES.log[a as usize] as usize + 255 - TABLES.log[b as usize] as usize]
    }
}

/// `a^n` with `0^0 = 1`.
pub fn pow(a: u8, n: usize) -> u8 {
    if n == 0 {
        1
    } else if a == 0 {
        0
    } else {
        exp(log(a) * n)
    }
}
