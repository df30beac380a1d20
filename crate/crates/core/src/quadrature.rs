//! Adaptive Gauss–Kronrod (7/15) quadrature and the `(ln x)^{1+eps}`
//! integrals and tail sums built on it.

use crate::error::{invalid, Result};
use crate::sparse::check_epsilon;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights on XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_DEPTH: u32 = 48;

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, (kron - gauss).abs() * h)
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: (f64, f64), tol: f64, depth: u32) -> f64 {
    let (val, err) = whole;
    if err <= tol || depth >= MAX_DEPTH || b - a <= f64::EPSILON * a.abs().max(1.0) {
        return val;
    }
    let m = 0.5 * (a + b);
    let left = gk15(f, a, m);
    let right = gk15(f, m, b);
    adapt(f, a, m, left, 0.5 * tol, depth + 1) + adapt(f, m, b, right, 0.5 * tol, depth + 1)
}

/// Integrates `f` over `[a, b]` to roughly `rel_tol` relative accuracy.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let whole = gk15(&f, a, b);
    let tol = (rel_tol * whole.0.abs()).max(f64::MIN_POSITIVE);
    adapt(&f, a, b, whole, tol, 0)
}

#[inline]
pub(crate) fn log_power(x: f64, epsilon: f64) -> f64 {
    let l = x.ln();
    if l <= 0.0 {
        0.0
    } else {
        l.powf(1.0 + epsilon)
    }
}

/// `∫_a^b (ln x)^{1+eps} dx` for `1 <= a <= b`.
pub fn integral_log_power(a: f64, b: f64, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if !(a >= 1.0) || !(b >= a) || !b.is_finite() {
        return Err(invalid(format!("integral bounds need 1 <= a <= b, got a={a}, b={b}")));
    }
    // Tolerance is two orders tighter than the 1e-8 contract; the K15 error
    // estimate is itself pessimistic.
    Ok(integrate(|x| log_power(x, epsilon), a, b, 1e-10))
}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn unit_integral(i: u64, epsilon: f64) -> f64 {
    integrate(|x| log_power(x, epsilon), i as f64, (i + 1) as f64, 1e-12)
}

/// `Σ_{i=1}^{k-1} 1 / ∫_i^k (ln x)^{1+eps} dx`.
pub fn tail_sum_before(k: u64, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if k < 2 {
        return Err(invalid(format!("tail_sum_before needs k >= 2, got {k}")));
    }
    // Accumulate ∫_i^k downward from i = k - 1 so no large integrals are subtracted.
    let mut inner = Compensated::default();
    let mut total = Compensated::default();
    for i in (1..k).rev() {
        inner.add(unit_integral(i, epsilon));
        total.add(1.0 / inner.value());
    }
    Ok(total.value())
}

/// A truncated tail sum together with a certified bound on what was cut off.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailSum {
    pub value: f64,
    /// Upper bound on `Σ_{i > i_max}` of the same summand; `None` when no
    /// finite bound applies (`k = 1` with `i_max < 4`).
    pub truncation_bound: Option<f64>,
}

/// `Σ_{i=k+1}^{i_max} 1 / ∫_k^i (ln x)^{1+eps} dx`, the finite part of the
/// forward tail sum, plus a majorant for the omitted `i > i_max` terms.
///
/// The majorant uses `∫_k^i ≥ (i-k)(ln k)^{1+eps}` for `i <= k^2` and
/// `∫_k^i ≥ i (ln i)^{1+eps} / 2^{2+eps}` for `i > k^2`, the latter summed by
/// comparison with `∫ dx / (x (ln x)^{1+eps}) = 1 / (eps (ln x)^eps)`.
pub fn tail_sum_after(k: u64, i_max: u64, epsilon: f64) -> Result<TailSum> {
    check_epsilon(epsilon)?;
    if k < 1 || i_max <= k {
        return Err(invalid(format!("tail_sum_after needs i_max > k >= 1, got k={k}, i_max={i_max}")));
    }
    let mut inner = Compensated::default();
    let mut total = Compensated::default();
    for i in k..i_max {
        inner.add(unit_integral(i, epsilon));
        total.add(1.0 / inner.value());
    }
    Ok(TailSum {
        value: total.value(),
        truncation_bound: tail_majorant(k, i_max, epsilon),
    })
}

fn tail_majorant(k: u64, i_max: u64, epsilon: f64) -> Option<f64> {
    let far = |from: u64| 2f64.powf(2.0 + epsilon) / (epsilon * (from as f64).ln().powf(epsilon));
    let k_sq = k.checked_mul(k)?;
    if i_max >= k_sq {
        return (i_max >= 4).then(|| far(i_max));
    }
    // k >= 2 here, so ln k > 0.
    let mut mid = Compensated::default();
    for i in (i_max + 1)..=k_sq {
        mid.add(1.0 / (i - k) as f64);
    }
    Some(mid.value() / (k as f64).ln().powf(1.0 + epsilon) + far(k_sq.max(4)))
}
