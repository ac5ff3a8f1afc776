//! Inlinable sine/cosine for the integrator hot loop.
//!
//! Cody-Waite reduction by pi/2 followed by the fdlibm minimax kernels on
//! `[-pi/4, pi/4]`. Accurate to about one ulp for `|x| < 2^19 * pi/2`; larger
//! arguments fall back to the platform routines. The reduction and kernels are
//! exactly odd (sine) and even (cosine) in `x`, so reflected trajectories stay
//! bit-identical to their originals.

#![allow(clippy::excessive_precision)]

const FRAC_2_PI: f64 = std::f64::consts::FRAC_2_PI;
// pi/2 split into a 33-bit head and its tail.
const PIO2_HI: f64 = 1.570_796_326_734_125_614_17e+00;
const PIO2_LO: f64 = 6.077_100_506_506_192_249_32e-11;
const ROUND_MAGIC: f64 = 6_755_399_441_055_744.0; // 1.5 * 2^52

const S1: f64 = -1.666_666_666_666_663_243_48e-01;
const S2: f64 = 8.333_333_333_322_489_461_24e-03;
const S3: f64 = -1.984_126_982_985_794_931_34e-04;
const S4: f64 = 2.755_731_370_707_006_767_89e-06;
const S5: f64 = -2.505_076_025_340_686_341_95e-08;
const S6: f64 = 1.589_690_995_211_550_102_21e-10;

const C1: f64 = 4.166_666_666_666_660_190_37e-02;
const C2: f64 = -1.388_888_888_887_410_957_49e-03;
const C3: f64 = 2.480_158_728_947_672_941_78e-05;
const C4: f64 = -2.755_731_435_139_066_330_35e-07;
const C5: f64 = 2.087_572_321_298_174_827_90e-09;
const C6: f64 = -1.135_964_755_778_819_482_65e-11;

#[inline(always)]
fn kernel_sin(x: f64) -> f64 {
    let z = x * x;
    let v = z * x;
    let r = S2 + z * (S3 + z * (S4 + z * (S5 + z * S6)));
    x + v * (S1 + z * r)
}

#[inline(always)]
fn kernel_cos(x: f64) -> f64 {
    let z = x * x;
    let r = z * (C1 + z * (C2 + z * (C3 + z * (C4 + z * (C5 + z * C6)))));
    let hz = 0.5 * z;
    let w = 1.0 - hz;
    w + (((1.0 - w) - hz) + z * r)
}

/// Largest magnitude handled by [`sin_cos_reduced`].
pub const REDUCE_LIMIT: f64 = 823_550.0;

/// `(sin x, cos x)` for `|x| < REDUCE_LIMIT`; branch-free so that lane loops
/// vectorize.
#[inline(always)]
pub fn sin_cos_reduced(x: f64) -> (f64, f64) {
    // Round-half-even to an integer without a libm call; symmetric in sign.
    let k = (x * FRAC_2_PI + ROUND_MAGIC) - ROUND_MAGIC;
    let r = (x - k * PIO2_HI) - k * PIO2_LO;
    let s = kernel_sin(r);
    let c = kernel_cos(r);
    let q = k as i64 as u64;
    // Odd quadrants swap the kernels; quadrants 2,3 negate sine and 1,2 negate cosine.
    let swap = (q & 1).wrapping_neg();
    let (sb, cb) = (s.to_bits(), c.to_bits());
    let sin_bits = (sb & !swap) | (cb & swap);
    let cos_bits = (cb & !swap) | (sb & swap);
    let sin_sign = (q & 2) << 62;
    let cos_sign = (q.wrapping_add(1) & 2) << 62;
    (
        f64::from_bits(sin_bits ^ sin_sign),
        f64::from_bits(cos_bits ^ cos_sign),
    )
}

/// Returns `(sin x, cos x)`.
#[inline(always)]
pub fn sin_cos(x: f64) -> (f64, f64) {
    if x.abs() < REDUCE_LIMIT {
        sin_cos_reduced(x)
    } else {
        x.sin_cos()
    }
}
