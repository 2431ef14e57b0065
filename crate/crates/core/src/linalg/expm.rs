use super::{lu::Lu, CMatrix, LinalgError, Tolerance};

/// Default cap on `‖A‖₁` accepted by [`expm`].
pub const DEFAULT_EXPM_NORM_BOUND: f64 = 1.0e4;

const THETA_13: f64 = 5.371_920_351_148_152;

const PADE_13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

pub fn expm(a: &CMatrix) -> Result<CMatrix, LinalgError> {
    expm_bounded(a, DEFAULT_EXPM_NORM_BOUND)
}

/// Scaling and squaring with the degree-13 Padé approximant.
pub fn expm_bounded(a: &CMatrix, bound: f64) -> Result<CMatrix, LinalgError> {
    let n = a.n();
    let norm = a.norm_one();
    if !norm.is_finite() || norm > bound {
        return Err(LinalgError::Overflow { norm, bound });
    }
    if norm == 0.0 {
        return Ok(CMatrix::identity(n));
    }
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let a = a.scale_re(0.5f64.powi(squarings));

    let b = &PADE_13;
    let ident = CMatrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let lin = |c6: f64, c4: f64, c2: f64, c0: f64| -> CMatrix {
        let mut m = &(&a6.scale_re(c6) + &a4.scale_re(c4)) + &a2.scale_re(c2);
        if c0 != 0.0 {
            m = &m + &ident.scale_re(c0);
        }
        m
    };
    let u_inner = &(&a6 * &lin(b[13], b[11], b[9], 0.0)) + &lin(b[7], b[5], b[3], b[1]);
    let u = &a * &u_inner;
    let v = &(&a6 * &lin(b[12], b[10], b[8], 0.0)) + &lin(b[6], b[4], b[2], b[0]);

    let denom = &v - &u;
    let numer = &v + &u;
    let tiny = Tolerance {
        abs: f64::MIN_POSITIVE,
        rel: 0.0,
    };
    let mut r = Lu::factor(&denom, tiny)?.solve(&numer);
    for _ in 0..squarings {
        r = &r * &r;
    }
    if !r.is_finite() {
        return Err(LinalgError::Overflow { norm, bound });
    }
    Ok(r)
}
