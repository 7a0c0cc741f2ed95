//! Exponentially scaled modified Bessel functions `I0e`, `I1e` and the
//! scaled second derivative of `I0`.
//!
//! Chebyshev expansions from Cephes (S. L. Moshier).

const BESSI0_COEFFS_A: [f64; 30] = [
    -4.415_341_646_479_339_5E-18,
    3.330_794_518_822_238_4E-17,
    -2.431_279_846_547_955E-16,
    1.715_391_285_555_133E-15,
    -1.168_533_287_799_345_1E-14,
    7.676_185_498_604_936E-14,
    -4.856_446_783_111_929E-13,
    2.955_052_663_129_64E-12,
    -1.726_826_291_441_556E-11,
    9.675_809_035_373_237E-11,
    -5.189_795_601_635_263E-10,
    2.659_823_724_682_386_6E-9,
    -1.300_025_009_986_248E-8,
    6.046_995_022_541_919E-8,
    -2.670_793_853_940_612E-7,
    1.117_387_539_120_103_7E-6,
    -4.416_738_358_458_750_5E-6,
    1.644_844_807_072_889_6E-5,
    -5.754_195_010_082_104E-5,
    1.885_028_850_958_416_5E-4,
    -5.763_755_745_385_824E-4,
    1.639_475_616_941_335_7E-3,
    -4.324_309_995_050_576E-3,
    1.054_646_039_459_499_8E-2,
    -2.373_741_480_589_947E-2,
    4.930_528_423_967_071E-2,
    -9.490_109_704_804_764E-2,
    1.716_209_015_222_087_7E-1,
    -3.046_826_723_431_984E-1,
    6.767_952_744_094_761E-1,
];

const BESSI0_COEFFS_B: [f64; 25] = [
    -7.233_180_487_874_754E-18,
    -4.830_504_485_944_182E-18,
    4.465_621_420_296_76E-17,
    3.461_222_867_697_461E-17,
    -2.827_623_980_516_583_6E-16,
    -3.425_485_619_677_219E-16,
    1.772_560_133_056_526_3E-15,
    3.811_680_669_352_622_4E-15,
    -9.554_846_698_828_307E-15,
    -4.150_569_347_287_222E-14,
    1.540_086_217_521_41E-14,
    3.852_778_382_742_142_6E-13,
    7.180_124_451_383_666E-13,
    -1.794_178_531_506_806_2E-12,
    -1.321_581_184_044_771_3E-11,
    -3.149_916_527_963_241_6E-11,
    1.188_914_710_784_643_9E-11,
    4.940_602_388_224_97E-10,
    3.396_232_025_708_386_5E-9,
    2.266_668_990_498_178E-8,
    2.048_918_589_469_063_8E-7,
    2.891_370_520_834_756_7E-6,
    6.889_758_346_916_825E-5,
    3.369_116_478_255_694_3E-3,
    8.044_904_110_141_088E-1,
];

const BESSI1_COEFFS_A: [f64; 29] = [
    2.777_914_112_761_046_4E-18,
    -2.111_421_214_358_166E-17,
    1.553_631_957_736_200_5E-16,
    -1.105_596_947_735_386_2E-15,
    7.600_684_294_735_408E-15,
    -5.042_185_504_727_912E-14,
    3.223_793_365_945_575E-13,
    -1.983_974_397_764_943_6E-12,
    1.173_618_629_889_090_1E-11,
    -6.663_489_723_502_027E-11,
    3.625_590_281_552_117E-10,
    -1.887_249_751_722_829_4E-9,
    9.381_537_386_495_773E-9,
    -4.445_059_128_796_328E-8,
    2.003_294_753_552_135_3E-7,
    -8.568_720_264_695_455E-7,
    3.470_251_308_137_678_5E-6,
    -1.327_316_365_603_943_6E-5,
    4.781_565_107_550_054E-5,
    -1.617_608_158_258_967_4E-4,
    5.122_859_561_685_758E-4,
    -1.513_572_450_631_253_2E-3,
    4.156_422_944_312_888E-3,
    -1.056_408_489_462_619_7E-2,
    2.472_644_903_062_651_6E-2,
    -5.294_598_120_809_499E-2,
    1.026_436_586_898_471E-1,
    -1.764_165_183_578_340_6E-1,
    2.525_871_864_436_336_5E-1,
];

#[allow(clippy::unreadable_literal)]
#[allow(clippy::excessive_precision)]
const BESSI1_COEFFS_B: [f64; 25] = [
    7.51729631084210481353E-18,
    4.41434832307170791151E-18,
    -4.65030536848935832153E-17,
    -3.20952592199342395980E-17,
    2.96262899764595013876E-16,
    3.30820231092092828324E-16,
    -1.88035477551078244854E-15,
    -3.81440307243700780478E-15,
    1.04202769841288027642E-14,
    4.27244001671195135429E-14,
    -2.10154184277266431302E-14,
    -4.08355111109219731823E-13,
    -7.19855177624590851209E-13,
    2.03562854414708950722E-12,
    1.41258074366137813316E-11,
    3.25260358301548823856E-11,
    -1.89749581235054123450E-11,
    -5.58974346219658380687E-10,
    -3.83538038596423702205E-9,
    -2.63146884688951950684E-8,
    -2.51223623787020892529E-7,
    -3.88256480887769039346E-6,
    -1.10588938762623716291E-4,
    -9.76109749136146840777E-3,
    7.78576235018280120474E-1,
];

fn chbevl(x: f64, coeffs: &[f64]) -> f64 {
    let mut b0 = coeffs[0];
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for c in &coeffs[1..] {
        b2 = b1;
        b1 = b0;
        b0 = x.mul_add(b1, *c) - b2;
    }
    0.5 * (b0 - b2)
}

/// `e^{-x} I0(x)` for `x >= 0`.
pub fn i0e(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x <= 8.0 {
        chbevl(x / 2.0 - 2.0, &BESSI0_COEFFS_A)
    } else {
        chbevl(32.0 / x - 2.0, &BESSI0_COEFFS_B) / x.sqrt()
    }
}

/// `e^{-x} I1(x)` for `x >= 0`.
pub fn i1e(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x <= 8.0 {
        chbevl(x / 2.0 - 2.0, &BESSI1_COEFFS_A) * x
    } else {
        chbevl(32.0 / x - 2.0, &BESSI1_COEFFS_B) / x.sqrt()
    }
}

/// `e^{-x} I0''(x)`, using `I0'' = I0 - I1/x` away from the origin.
pub fn i0pp_e(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x >= 1.0 {
        return i0e(x) - i1e(x) / x;
    }
    // sum_{n>=1} 2n(2n-1) (x/2)^{2n-2} / (4 (n!)^2)
    let h2 = 0.25 * x * x;
    let mut term = 0.5; // n = 1
    let mut sum = term;
    for n in 2..40 {
        let nf = n as f64;
        term *= h2 * (2.0 * nf - 1.0) / ((nf - 1.0) * (2.0 * nf - 3.0) * nf);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum * (-x).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    // Power series oracle, fine for moderate x.
    fn i0_series(x: f64) -> f64 {
        let h2 = 0.25 * x * x;
        let (mut t, mut s) = (1.0, 1.0);
        for n in 1..200 {
            t *= h2 / (n as f64 * n as f64);
            s += t;
        }
        s
    }

    fn i1_series(x: f64) -> f64 {
        let h2 = 0.25 * x * x;
        let (mut t, mut s) = (0.5 * x, 0.5 * x);
        for n in 1..200 {
            t *= h2 / (n as f64 * (n + 1) as f64);
            s += t;
        }
        s
    }

    #[test]
    fn values_at_origin() {
        assert_eq!(i0e(0.0), 1.0);
        assert_eq!(i1e(0.0), 0.0);
        assert!((i0pp_e(0.0) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn matches_power_series() {
        for &x in &[0.01, 0.3, 1.0, 2.5, 7.9, 8.1, 12.0, 20.0, 35.0] {
            let e = (-x as f64).exp();
            let r0 = i0e(x) / (i0_series(x) * e);
            let r1 = i1e(x) / (i1_series(x) * e);
            assert!((r0 - 1.0).abs() < 1e-14, "I0 at {x}: {r0}");
            assert!((r1 - 1.0).abs() < 1e-14, "I1 at {x}: {r1}");
        }
    }

    #[test]
    fn second_derivative_branches_agree() {
        // I0'' = I0 - I1/x on both sides of the switch-over point.
        for &x in &[0.2, 0.6, 0.99, 1.0, 1.01, 3.0] {
            let e = (-x as f64).exp();
            let exact = (i0_series(x) - i1_series(x) / x) * e;
            assert!((i0pp_e(x) - exact).abs() < 1e-14 * exact.max(1.0), "x={x}");
        }
    }

    #[test]
    fn large_argument_asymptotics() {
        // e^{-x} I_nu(x) ~ (2 pi x)^{-1/2} (1 - (4nu^2 - 1)/(8x))
        let x = 1e4;
        let lead = 1.0 / (2.0 * std::f64::consts::PI * x).sqrt();
        assert!((i0e(x) / (lead * (1.0 + 1.0 / (8.0 * x))) - 1.0).abs() < 1e-8);
        assert!((i1e(x) / (lead * (1.0 - 3.0 / (8.0 * x))) - 1.0).abs() < 1e-8);
    }
}
