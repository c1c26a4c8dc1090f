//! Bessel functions of the first kind for the small order catalogue the
//! limit formulas need, Γ at half-integers, the Fourier transform of a ball
//! indicator and the Schafheitlin integral.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature;

/// Orders accepted by [`bessel_j`].
pub const SUPPORTED_ORDERS: [f64; 6] = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5];

const SMALL_ARGUMENT: f64 = 1e-4;
const SERIES_CUTOFF: f64 = 2.0;

/// Γ(z) for integers and half-integers in [1/2, 6].
pub fn gamma_fn(z: f64) -> Result<f64> {
    let twice = 2.0 * z;
    if !(0.5..=6.0).contains(&z) || twice.fract() != 0.0 {
        return Err(Error::ArgumentUnsupported(z));
    }
    let (mut value, mut arg) = if twice as u64 % 2 == 0 {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    while arg < z {
        value *= arg;
        arg += 1.0;
    }
    Ok(value)
}

fn check_order(nu: f64) -> Result<()> {
    if SUPPORTED_ORDERS.contains(&nu) {
        Ok(())
    } else {
        Err(Error::OrderUnsupported(nu))
    }
}

/// Σ_k (−r²/4)^k Γ(ν+1) / (k! Γ(k+ν+1)), i.e. Γ(ν+1)(2/r)^ν J_ν(r).
fn normalized_series(nu: f64, r: f64) -> f64 {
    let q = -0.25 * r * r;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn half_integer_closed_form(nu: f64, r: f64) -> f64 {
    let (s, c) = r.sin_cos();
    let pre = (2.0 / (PI * r)).sqrt();
    match (2.0 * nu) as u32 {
        1 => pre * s,
        3 => pre * (s / r - c),
        5 => pre * ((3.0 / (r * r) - 1.0) * s - 3.0 * c / r),
        _ => unreachable!("order checked by caller"),
    }
}

/// Miller backward recurrence normalised by J_0 + 2 Σ J_{2k} = 1.
fn integer_order_miller(n: usize, r: f64) -> f64 {
    let top = (n as f64).max(r);
    let mut m = (top + 20.0 + (40.0 * top).sqrt()) as usize;
    m += m % 2;
    let mut next = 0.0;
    let mut cur = 1e-30;
    let mut sum = 0.0;
    let mut ans = 0.0;
    let mut k = m;
    loop {
        if k == n {
            ans = cur;
        }
        if k % 2 == 0 {
            sum += if k == 0 { cur } else { 2.0 * cur };
        }
        if k == 0 {
            break;
        }
        let prev = (2.0 * k as f64 / r) * cur - next;
        next = cur;
        cur = prev;
        k -= 1;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            sum *= 1e-250;
            ans *= 1e-250;
        }
    }
    ans / sum
}

/// J_ν(r) for ν in [`SUPPORTED_ORDERS`] and r ≥ 0.
pub fn bessel_j(nu: f64, r: f64) -> Result<f64> {
    check_order(nu)?;
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::ArgumentUnsupported(r));
    }
    if r == 0.0 {
        return Ok(if nu == 0.0 { 1.0 } else { 0.0 });
    }
    let lead = (0.5 * r).powf(nu) / gamma_fn(nu + 1.0)?;
    if r < SMALL_ARGUMENT {
        return Ok(lead * (1.0 - r * r / (4.0 * (nu + 1.0))));
    }
    if r < SERIES_CUTOFF {
        return Ok(lead * normalized_series(nu, r));
    }
    if nu.fract() != 0.0 {
        Ok(half_integer_closed_form(nu, r))
    } else {
        Ok(integer_order_miller(nu as usize, r))
    }
}

/// 2^{n/2} Γ(n/2+1) J_{n/2}(r) / r^{n/2}, equal to 1 at r = 0.
///
/// This is the Fourier transform of the unit-ball indicator divided by the
/// ball volume, the radial profile of every limit formula.
pub fn ball_profile(n: usize, r: f64) -> Result<f64> {
    let nu = n as f64 / 2.0;
    check_order(nu)?;
    if !(r >= 0.0) {
        return Err(Error::ArgumentUnsupported(r));
    }
    if r < SMALL_ARGUMENT {
        return Ok(1.0 - r * r / (4.0 * (nu + 1.0)));
    }
    if r < SERIES_CUTOFF {
        return Ok(normalized_series(nu, r));
    }
    Ok(2f64.powf(nu) * gamma_fn(nu + 1.0)? * bessel_j(nu, r)? / r.powf(nu))
}

/// Volume π^{n/2}/Γ(n/2+1) of the unit ball in ℝⁿ.
pub fn unit_ball_volume(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    PI.powf(half) / gamma_fn(half + 1.0).expect("dimension within catalogue")
}

/// Fourier transform ∫_{B_γ} e^{−i y·x} dx = γⁿ (2π)^{n/2} (γ|y|)^{−n/2} J_{n/2}(γ|y|).
pub fn ball_indicator_hat(n: usize, radius: f64, y: &[f64]) -> Result<f64> {
    if n != 2 && n != 3 {
        return Err(Error::DimensionUnsupported(n));
    }
    if !(radius > 0.0) {
        return Err(Error::ArgumentUnsupported(radius));
    }
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let volume = unit_ball_volume(n) * radius.powi(n as i32);
    Ok(volume * ball_profile(n, radius * norm)?)
}

/// Closed form ∫₀^∞ r^{−2} J²_{n/2}(r) dr = 4/((n²−1)π).
pub fn schafheitlin(n: usize) -> f64 {
    assert!(n >= 2, "Schafheitlin formula needs n >= 2");
    let nf = n as f64;
    4.0 / ((nf * nf - 1.0) * PI)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchafheitlinCheck {
    pub closed_form: f64,
    pub quadrature: f64,
    /// Analytic envelope estimate of the part beyond the cutoff.
    pub tail: f64,
    pub cutoff: f64,
}

impl SchafheitlinCheck {
    pub fn abs_diff(&self) -> f64 {
        (self.closed_form - self.quadrature).abs()
    }
}

/// Numerical value of the Schafheitlin integral: Gauss–Legendre on [0, 1],
/// unit panels up to r = 200 and the asymptotic envelope beyond.
pub fn schafheitlin_quadrature(n: usize) -> Result<SchafheitlinCheck> {
    let nu = n as f64 / 2.0;
    check_order(nu)?;
    let cutoff = 200.0;
    let f = |r: f64| {
        let j = bessel_j(nu, r).expect("order checked");
        j * j / (r * r)
    };
    let head = quadrature::composite(0.0, 1.0, 1, 30).integrate(f);
    let body = quadrature::composite(1.0, cutoff, 199, 16).integrate(f);
    let phase = nu * PI / 2.0 + PI / 4.0;
    let tail = 1.0 / (2.0 * PI * cutoff * cutoff)
        - (2.0 * cutoff - 2.0 * phase).sin() / (2.0 * PI * cutoff.powi(3));
    Ok(SchafheitlinCheck {
        closed_form: schafheitlin(n),
        quadrature: head + body + tail,
        tail,
        cutoff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Series with exact term recursion and compensated summation, used only
    /// as a reference. Accurate for moderate r where cancellation is mild.
    fn reference_series(nu: f64, r: f64) -> f64 {
        let mut term = (0.5 * r).powf(nu) / gamma_fn(nu + 1.0).unwrap();
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for k in 0..50 {
            if k > 0 {
                let kf = k as f64;
                term *= -0.25 * r * r / (kf * (kf + nu));
            }
            let y = term - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        sum
    }

    /// Bessel's integral J_n(r) = (1/π)∫₀^π cos(nτ − r sin τ) dτ, integer n.
    fn integral_representation(n: usize, r: f64) -> f64 {
        let rule = quadrature::composite(0.0, PI, 200, 20);
        rule.integrate(|t| (n as f64 * t - r * t.sin()).cos()) / PI
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma_fn(2.0).unwrap(), 1.0);
        assert_eq!(gamma_fn(3.0).unwrap(), 2.0);
        assert!((gamma_fn(2.5).unwrap() - 3.0 * PI.sqrt() / 4.0).abs() < 1e-15);
        assert!((gamma_fn(2.5).unwrap() - 1.329_340_388_179_137).abs() < 1e-14);
        assert!((gamma_fn(6.0).unwrap() - 120.0).abs() < 1e-12);
        assert!(gamma_fn(0.25).is_err());
        assert!(gamma_fn(7.0).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let j = bessel_j(1.5, PI).unwrap();
        assert!((j - 2f64.sqrt() / PI).abs() < 1e-15);
        assert!((j - 0.450_158).abs() < 1e-6);
        assert!(bessel_j(0.5, PI).unwrap().abs() < 1e-15);
        let r = 1e-3;
        assert!((bessel_j(1.0, r).unwrap() - r / 2.0).abs() < r.powi(3));
        assert!(matches!(bessel_j(0.75, 1.0), Err(Error::OrderUnsupported(_))));
    }

    #[test]
    fn matches_reference_series() {
        for &nu in &SUPPORTED_ORDERS {
            for i in 1..=80 {
                let r = 0.1 * i as f64;
                let got = bessel_j(nu, r).unwrap();
                let want = reference_series(nu, r);
                let scale = want.abs().max(1e-3);
                assert!(
                    (got - want).abs() <= 1e-12 * scale,
                    "nu={nu} r={r}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn integer_orders_match_integral_representation() {
        for n in [0usize, 1, 2] {
            for i in 1..=100 {
                let r = 2.0 * i as f64;
                let got = bessel_j(n as f64, r).unwrap();
                let want = integral_representation(n, r);
                assert!((got - want).abs() < 1e-13, "n={n} r={r}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn first_zeros() {
        assert!(bessel_j(0.0, 2.404_825_557_695_773).unwrap().abs() < 1e-14);
        assert!(bessel_j(1.0, 3.831_705_970_207_512).unwrap().abs() < 1e-14);
        assert!(bessel_j(1.5, 4.493_409_457_909_064).unwrap().abs() < 1e-14);
    }

    #[test]
    fn branch_continuity() {
        for &nu in &SUPPORTED_ORDERS {
            for edge in [SMALL_ARGUMENT, SERIES_CUTOFF] {
                let lo = bessel_j(nu, edge * (1.0 - 1e-12)).unwrap();
                let hi = bessel_j(nu, edge).unwrap();
                // The step in r alone moves J by about ν·1e-12 relative.
                assert!((lo - hi).abs() <= 1e-11 * hi.abs());
            }
        }
    }

    #[test]
    fn recurrence_residual() {
        for i in 0..=999 {
            let r = 0.1 + i as f64 * 0.0999;
            let res1 = bessel_j(0.0, r).unwrap() + bessel_j(2.0, r).unwrap()
                - 2.0 / r * bessel_j(1.0, r).unwrap();
            let res3 = bessel_j(0.5, r).unwrap() + bessel_j(2.5, r).unwrap()
                - 3.0 / r * bessel_j(1.5, r).unwrap();
            assert!(res1.abs() <= 1e-10 && res3.abs() <= 1e-10, "r={r}");
        }
    }

    #[test]
    fn ball_profile_small_argument() {
        for n in [2, 3] {
            for r in [1e-3, 1e-5] {
                assert!((ball_profile(n, r).unwrap() - 1.0).abs() < 1e-6);
            }
            let r = 3.7;
            let nu = n as f64 / 2.0;
            let direct = 2f64.powf(nu) * gamma_fn(nu + 1.0).unwrap() * bessel_j(nu, r).unwrap()
                / r.powf(nu);
            assert!((ball_profile(n, r).unwrap() - direct).abs() < 1e-14);
        }
    }

    /// ∫_{B_γ} cos(y·x) dx by polar/spherical quadrature.
    fn ball_hat_quadrature(n: usize, radius: f64, y: f64) -> f64 {
        let radial = quadrature::composite(0.0, radius, 40, 20);
        match n {
            2 => {
                let angle = quadrature::composite(0.0, PI, 40, 20);
                2.0 * radial.integrate(|r| r * angle.integrate(|t| (y * r * t.cos()).cos()))
            }
            3 => {
                let polar = quadrature::composite(-1.0, 1.0, 40, 20);
                2.0 * PI * radial.integrate(|r| r * r * polar.integrate(|c| (y * r * c).cos()))
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn ball_indicator_hat_values() {
        let v = ball_indicator_hat(3, 1.0, &[0.0, 0.0, 0.0]).unwrap();
        assert!((v - 4.0 * PI / 3.0).abs() < 1e-14);
        let z = ball_indicator_hat(2, 1.0, &[3.831_705_970_207_512, 0.0]).unwrap();
        assert!(z.abs() < 1e-13);
        let got = ball_indicator_hat(3, 2.0, &[0.6, 0.0, 0.8]).unwrap();
        let want = ball_hat_quadrature(3, 2.0, 1.0);
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        let got = ball_indicator_hat(2, 1.5, &[1.0, 2.0]).unwrap();
        let want = ball_hat_quadrature(2, 1.5, 5f64.sqrt());
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn ball_indicator_plancherel() {
        // (2π)^{-n} ∫ |χ̂_{B_γ}|² dy = |B_γ|; radial quadrature to r = 400
        // plus the envelope tail of J².
        for n in [2usize, 3] {
            let gamma = 1.3;
            let big = 400.0;
            let rule = quadrature::composite(0.0, big, 800, 16);
            let surface = n as f64 * unit_ball_volume(n);
            let integral = rule.integrate(|s| {
                let v = ball_indicator_hat(n, gamma, &[s]).unwrap();
                surface * s.powi(n as i32 - 1) * v * v
            });
            let vol = unit_ball_volume(n) * gamma.powi(n as i32);
            // |χ̂|² r^{n-1} ≈ (2π)^n γ^n · (2/(π γ r²))·½ r^{...}: envelope average.
            let tail = surface * (2.0 * PI).powi(n as i32) * gamma.powi(n as i32 - 1)
                / (PI * big);
            let total = (integral + tail) / (2.0 * PI).powi(n as i32);
            assert!((total - vol).abs() < 1e-4 * vol, "n={n}: {total} vs {vol}");
        }
    }

    #[test]
    fn schafheitlin_closed_forms() {
        assert!((schafheitlin(3) - 1.0 / (2.0 * PI)).abs() < 1e-16);
        assert!((schafheitlin(3) - 0.159_154_9).abs() < 1e-7);
        assert!((schafheitlin(2) - 0.424_413_2).abs() < 1e-7);
        for n in [2, 3] {
            let check = schafheitlin_quadrature(n).unwrap();
            assert!(check.abs_diff() < 1e-6, "n={n}: {check:?}");
        }
    }

    proptest! {
        #[test]
        fn half_integer_closed_forms_agree_with_series(r in 0.05f64..6.0) {
            for nu in [0.5, 1.5, 2.5] {
                let closed = half_integer_closed_form(nu, r);
                let series = reference_series(nu, r);
                prop_assert!((closed - series).abs() <= 1e-11 * series.abs().max(1e-2));
            }
        }

        #[test]
        fn profile_bounded_by_one(r in 0.0f64..150.0) {
            for n in [2usize, 3] {
                prop_assert!(ball_profile(n, r).unwrap().abs() <= 1.0 + 1e-14);
            }
        }
    }
}
