//! Shortened Reed-Solomon (204,188) over GF(2^8), t = 8.
//!
//! The code is the DVB outer code: the (255,239) code with generator
//! roots alpha^0 .. alpha^15, shortened by 51 leading zero bytes that are
//! never transmitted. Decoding runs syndromes, Berlekamp-Massey, a Chien
//! search and Forney's formula; a root landing in the virtual (shortened)
//! prefix or a locator/root count mismatch is reported as a decode
//! failure rather than a miscorrection.

use super::gf256 as gf;
use super::FecError;

pub const RS_N: usize = 204;
pub const RS_K: usize = 188;
pub const RS_T: usize = 8;
const MOTHER_N: usize = 255;
const PARITY: usize = RS_N - RS_K;

/// g(x) = prod_{i=0..15} (x - alpha^i), coefficients low-order first,
/// degree 16 (leading coefficient 1).
fn generator() -> [u8; PARITY + 1] {
    let mut g = [0u8; PARITY + 1];
    g[0] = 1;
    let mut deg = 0;
    for i in 0..PARITY {
        let root = gf::alpha_pow(i);
        // g *= (x + root)
        deg += 1;
        for j in (1..=deg).rev() {
            g[j] = gf::add(g[j - 1], gf::mul(g[j], root));
        }
        g[0] = gf::mul(g[0], root);
    }
    g
}

/// Systematic encode: returns message followed by 16 parity bytes.
pub fn rs_encode(msg: &[u8]) -> Result<Vec<u8>, FecError> {
    if msg.len() != RS_K {
        return Err(FecError::Length {
            what: "RS message bytes",
            got: msg.len(),
            want: RS_K,
        });
    }
    let g = generator();
    // Polynomial long division of msg(x) * x^16 by g(x); the remainder
    // is the parity. Work high-order first over a scratch register.
    let mut rem = [0u8; PARITY];
    for &m in msg {
        let feedback = gf::add(m, rem[0]);
        for j in 0..PARITY - 1 {
            rem[j] = gf::add(rem[j + 1], gf::mul(feedback, g[PARITY - 1 - j]));
        }
        rem[PARITY - 1] = gf::mul(feedback, g[0]);
    }
    let mut out = Vec::with_capacity(RS_N);
    out.extend_from_slice(msg);
    out.extend_from_slice(&rem);
    Ok(out)
}

/// Decode result: the corrected message and how many byte errors were fixed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RsDecoded {
    pub message: Vec<u8>,
    pub corrected: usize,
}

/// Decode one 204-byte word. More than 8 byte errors usually trips one of
/// the internal consistency checks and surfaces as `DecodeFailure`;
/// miscorrection to a different valid codeword is possible but rare.
pub fn rs_decode(word: &[u8]) -> Result<RsDecoded, FecError> {
    if word.len() != RS_N {
        return Err(FecError::Length {
            what: "RS codeword bytes",
            got: word.len(),
            want: RS_N,
        });
    }
    // Syndromes S_i = r(alpha^i). Byte j of the word is the coefficient
    // of x^(203-j) (the 51 shortened coefficients above are zero).
    let mut synd = [0u8; PARITY];
    let mut all_zero = true;
    for i in 0..PARITY {
        let x = gf::alpha_pow(i);
        let mut acc = 0u8;
        for &b in word {
            acc = gf::add(gf::mul(acc, x), b);
        }
        synd[i] = acc;
        all_zero &= acc == 0;
    }
    if all_zero {
        return Ok(RsDecoded {
            message: word[..RS_K].to_vec(),
            corrected: 0,
        });
    }

    // Berlekamp-Massey: find the error locator Lambda(x).
    let mut lambda = vec![1u8];
    let mut prev = vec![1u8];
    let mut l = 0usize;
    let mut m = 1usize;
    let mut b = 1u8;
    for n in 0..PARITY {
        let mut delta = synd[n];
        for i in 1..=l.min(lambda.len() - 1) {
            delta = gf::add(delta, gf::mul(lambda[i], synd[n - i]));
        }
        if delta == 0 {
            m += 1;
        } else if 2 * l <= n {
            let t = lambda.clone();
            let coef = gf::div(delta, b);
            lambda.resize(lambda.len().max(prev.len() + m), 0);
            for (i, &p) in prev.iter().enumerate() {
                lambda[i + m] = gf::add(lambda[i + m], gf::mul(coef, p));
            }
            l = n + 1 - l;
            prev = t;
            b = delta;
            m = 1;
        } else {
            let coef = gf::div(delta, b);
            lambda.resize(lambda.len().max(prev.len() + m), 0);
            for (i, &p) in prev.iter().enumerate() {
                lambda[i + m] = gf::add(lambda[i + m], gf::mul(coef, p));
            }
            m += 1;
        }
    }
    while lambda.last() == Some(&0) {
        lambda.pop();
    }
    let num_errors = lambda.len() - 1;
    if num_errors == 0 || num_errors > RS_T {
        return Err(FecError::DecodeFailure("error locator degree out of range"));
    }

    // Chien search over the mother-code positions. The coefficient of
    // x^e lives at byte index 203-e, so only e <= 203 is a real position.
    let mut positions = Vec::with_capacity(num_errors);
    for e in 0..MOTHER_N {
        let x_inv = gf::alpha_pow(MOTHER_N - e); // alpha^{-e}
        if gf::poly_eval(&lambda, x_inv) == 0 {
            if e > RS_N - 1 {
                return Err(FecError::DecodeFailure("error located in shortened prefix"));
            }
            positions.push(e);
        }
    }
    if positions.len() != num_errors {
        return Err(FecError::DecodeFailure("locator roots do not match degree"));
    }

    // Forney: Omega(x) = S(x) Lambda(x) mod x^16, magnitudes from
    // e_j = X_j * Omega(X_j^{-1}) / Lambda'(X_j^{-1}).
    let mut omega = vec![0u8; PARITY];
    for i in 0..PARITY {
        for j in 0..lambda.len().min(i + 1) {
            omega[i] = gf::add(omega[i], gf::mul(synd[i - j], lambda[j]));
        }
    }
    let mut corrected = word.to_vec();
    for &e in &positions {
        let x = gf::alpha_pow(e);
        let x_inv = gf::alpha_pow(MOTHER_N - e);
        // Formal derivative of Lambda keeps odd-degree terms only.
        let mut dlam = 0u8;
        let mut xpow = 1u8;
        for d in (1..lambda.len()).step_by(2) {
            // xpow = x_inv^{d-1}
            dlam = gf::add(dlam, gf::mul(lambda[d], xpow));
            xpow = gf::mul(xpow, gf::mul(x_inv, x_inv));
        }
        if dlam == 0 {
            return Err(FecError::DecodeFailure("degenerate locator derivative"));
        }
        let mag = gf::mul(x, gf::div(gf::poly_eval(&omega, x_inv), dlam));
        if mag == 0 {
            return Err(FecError::DecodeFailure("zero error magnitude"));
        }
        corrected[RS_N - 1 - e] = gf::add(corrected[RS_N - 1 - e], mag);
    }

    // Re-check the syndromes of the corrected word.
    for i in 0..PARITY {
        let x = gf::alpha_pow(i);
        let mut acc = 0u8;
        for &b in &corrected {
            acc = gf::add(gf::mul(acc, x), b);
        }
        if acc != 0 {
            return Err(FecError::DecodeFailure("post-correction syndrome nonzero"));
        }
    }
    Ok(RsDecoded {
        message: corrected[..RS_K].to_vec(),
        corrected: positions.len(),
    })
}
