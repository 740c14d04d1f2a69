//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants of degree 3, 5, 7, 9 or 13, selected by the 1-norm
//! (Higham 2005).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;

const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
];
const THETA_13: f64 = 5.371_920_351_148_152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Largest number of squarings accepted before declaring overflow.
const MAX_SQUARINGS: i32 = 1000;

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `e^{tA}`.
pub fn expm(a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::invalid(format!("expm needs a square matrix, got {}x{}", a.nrows(), a.ncols())));
    }
    if !t.is_finite() || a.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("expm input has non-finite entries"));
    }
    let n = a.nrows();
    if t == 0.0 || n == 0 {
        return Ok(DMatrix::identity(n, n));
    }
    let ta = a * t;
    let norm = one_norm(&ta);
    if !norm.is_finite() {
        return Err(Error::ExpmOverflow(norm));
    }

    for &(m, theta) in &THETA {
        if norm <= theta {
            return pade(&ta, m);
        }
    }

    let s = if norm > THETA_13 { (norm / THETA_13).log2().ceil() as i32 } else { 0 };
    if s > MAX_SQUARINGS {
        return Err(Error::ExpmOverflow(norm));
    }
    let scaled = ta * 2f64.powi(-s);
    let mut r = pade(&scaled, 13)?;
    for _ in 0..s {
        r = &r * &r;
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::ExpmOverflow(norm));
    }
    Ok(r)
}

fn pade(a: &DMatrix<f64>, m: usize) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let (u, v) = match m {
        13 => {
            let b = &B13;
            let a4 = &a2 * &a2;
            let a6 = &a4 * &a2;
            let w1 = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
            let w = &a6 * w1 + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1];
            let z1 = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
            let v = &a6 * z1 + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
            (a * w, v)
        }
        _ => {
            let b: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                9 => &B9,
                _ => unreachable!("unsupported Padé degree {m}"),
            };
            // odd part U = A * sum b[2k+1] A^{2k}, even part V = sum b[2k] A^{2k}
            let mut power = id.clone();
            let mut odd = &id * b[1];
            let mut even = &id * b[0];
            for k in 1..=m / 2 {
                power = &power * &a2;
                odd += &power * b[2 * k + 1];
                even += &power * b[2 * k];
            }
            (a * odd, even)
        }
    };
    linalg::solve(&v - &u, &(&v + &u), "Padé denominator")
}
