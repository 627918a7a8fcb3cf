//! Standard normal CDF, quantile, and bivariate normal rectangle
//! probabilities.
//!
//! `phi` follows the cephes `ndtr` rational approximations for erf/erfc.
//! `phi_inv` is Wichura's PPND16 rational approximation (absolute error
//! below 1e-15 on (0,1)). `bvn_cdf` ports Genz's Gauss-Legendre algorithm
//! for bivariate normal probabilities (Drezner-Wesolowsky method with the
//! high-correlation Taylor branch), good to about 5e-16.

use crate::error::{Error, Result};

const SQRT1_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
const MAXLOG: f64 = 7.09782712893383996732e2;

// cephes erf coefficients, |x| < 1
const T: [f64; 5] = [
    9.60497373987051638749e0,
    9.00260197203842689217e1,
    2.23200534594684319226e3,
    7.00332514112805075473e3,
    5.55923013010394962768e4,
];
const U: [f64; 5] = [
    3.35617141647503099647e1,
    5.21357949780152679795e2,
    4.59432382970980127987e3,
    2.26290000613890934246e4,
    4.92673942608635921086e4,
];

// cephes erfc coefficients, 1 <= x < 8
const P: [f64; 9] = [
    2.46196981473530512524e-10,
    5.64189564831068821977e-1,
    7.46321056442269912687e0,
    4.86371970985681366614e1,
    1.96520832956077098242e2,
    5.26445194995477358631e2,
    9.34528527171957607540e2,
    1.02755188689515710272e3,
    5.57535335369399327526e2,
];
const Q: [f64; 8] = [
    1.32281951154744992508e1,
    8.67072140885989742329e1,
    3.54937778887819891062e2,
    9.75708501743205489753e2,
    1.82390916687909736289e3,
    2.24633760818710981792e3,
    1.65666309194161350182e3,
    5.57535340817727675546e2,
];

// cephes erfc coefficients, x >= 8
const R: [f64; 6] = [
    5.64189583547755073984e-1,
    1.27536670759978104416e0,
    5.01905042251180477414e0,
    6.16021097993053585195e0,
    7.40974269950448939160e0,
    2.97886665372100240670e0,
];
const S: [f64; 6] = [
    2.26052863220117276590e0,
    9.39603524938001434673e0,
    1.20489539808096656605e1,
    1.70814450747565897222e1,
    9.60896809063285878198e0,
    3.36907645100081516050e0,
];

fn polevl(x: f64, coef: &[f64]) -> f64 {
    coef.iter().fold(0.0, |acc, &c| acc * x + c)
}

fn p1evl(x: f64, coef: &[f64]) -> f64 {
    coef.iter().fold(1.0, |acc, &c| acc * x + c)
}

fn erf(x: f64) -> f64 {
    if x.abs() > 1.0 {
        return 1.0 - erfc(x);
    }
    let z = x * x;
    x * polevl(z, &T) / p1evl(z, &U)
}

fn erfc(a: f64) -> f64 {
    let x = a.abs();
    if x < 1.0 {
        return 1.0 - erf(a);
    }
    let z = -a * a;
    if z < -MAXLOG {
        return if a < 0.0 { 2.0 } else { 0.0 };
    }
    let z = z.exp();
    let y = if x < 8.0 {
        z * polevl(x, &P) / p1evl(x, &Q)
    } else {
        z * polevl(x, &R) / p1evl(x, &S)
    };
    if a < 0.0 {
        2.0 - y
    } else {
        y
    }
}

/// Standard normal CDF.
pub fn phi(x: f64) -> f64 {
    let t = x * SQRT1_2;
    let z = t.abs();
    if z < SQRT1_2 {
        0.5 + 0.5 * erf(t)
    } else if t > 0.0 {
        1.0 - 0.5 * erfc(z)
    } else {
        0.5 * erfc(z)
    }
}

// PPND16 coefficients (Wichura, AS 241)
const PI_A: [f64; 8] = [
    2.5090809287301226727e3,
    3.3430575583588128105e4,
    6.7265770927008700853e4,
    4.5921953931549871457e4,
    1.3731693765509461125e4,
    1.9715909503065514427e3,
    1.3314166789178437745e2,
    3.3871328727963666080e0,
];
const PI_B: [f64; 8] = [
    5.2264952788528545610e3,
    2.8729085735721942674e4,
    3.9307895800092710610e4,
    2.1213794301586595867e4,
    5.3941960214247511077e3,
    6.8718700749205790830e2,
    4.2313330701600911252e1,
    1.0,
];
const PI_C: [f64; 8] = [
    7.74545014278341407640e-4,
    2.27238449892691845833e-2,
    2.41780725177450611770e-1,
    1.27045825245236838258e0,
    3.64784832476320460504e0,
    5.76949722146069140550e0,
    4.63033784615654529590e0,
    1.42343711074968357734e0,
];
const PI_D: [f64; 8] = [
    1.05075007164441684324e-9,
    5.47593808499534494600e-4,
    1.51986665636164571966e-2,
    1.48103976427480074590e-1,
    6.89767334985100004550e-1,
    1.67638483018380384940e0,
    2.05319162663775882187e0,
    1.0,
];
const PI_E: [f64; 8] = [
    2.01033439929228813265e-7,
    2.71155556874348757815e-5,
    1.24266094738807843860e-3,
    2.65321895265761230930e-2,
    2.96560571828504891230e-1,
    1.78482653991729133580e0,
    5.46378491116411436990e0,
    6.65790464350110377720e0,
];
const PI_F: [f64; 8] = [
    2.04426310338993978564e-15,
    1.42151175831644588870e-7,
    1.84631831751005468180e-5,
    7.86869131145613259100e-4,
    1.48753612908506148525e-2,
    1.36929880922735805310e-1,
    5.99832206555887937690e-1,
    1.0,
];

/// Standard normal quantile function on (0, 1).
pub fn phi_inv(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "phi_inv argument {p} outside [0,1]"
        )));
    }
    if p == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if p == 1.0 {
        return Ok(f64::INFINITY);
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return Ok(q * polevl(r, &PI_A) / polevl(r, &PI_B));
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        r -= 1.6;
        polevl(r, &PI_C) / polevl(r, &PI_D)
    } else {
        r -= 5.0;
        polevl(r, &PI_E) / polevl(r, &PI_F)
    };
    Ok(if q < 0.0 { -x } else { x })
}

// Gauss-Legendre half-rules from Genz's bivariate normal code: the
// symmetric nodes are reconstructed by evaluating at (1 - x) and (1 + x).
const GL_6: [(f64, f64); 3] = [
    (0.1713244923791705, -0.9324695142031522),
    (0.3607615730481384, -0.6612093864662647),
    (0.4679139345726904, -0.2386191860831970),
];
const GL_12: [(f64, f64); 6] = [
    (0.04717533638651177, -0.9815606342467191),
    (0.1069393259953183, -0.9041172563704750),
    (0.1600783285433464, -0.7699026741943050),
    (0.2031674267230659, -0.5873179542866171),
    (0.2334925365383547, -0.3678314989981802),
    (0.2491470458134029, -0.1252334085114692),
];
const GL_20: [(f64, f64); 10] = [
    (0.01761400713915212, -0.9931285991850949),
    (0.04060142980038694, -0.9639719272779138),
    (0.06267204833410906, -0.9122344282513259),
    (0.08327674157670475, -0.8391169718222188),
    (0.1019301198172404, -0.7463319064601508),
    (0.1181945319615184, -0.6360536807265150),
    (0.1316886384491766, -0.5108670019508271),
    (0.1420961093183821, -0.3737060887154196),
    (0.1491729864726037, -0.2277858511416451),
    (0.1527533871307259, -0.07652652113349733),
];

fn quadrature(rho_abs: f64) -> &'static [(f64, f64)] {
    if rho_abs < 0.3 {
        &GL_6
    } else if rho_abs < 0.75 {
        &GL_12
    } else {
        &GL_20
    }
}

/// Upper-tail probability P(X > dh, Y > dk) for standard bivariate normal
/// variables with correlation `r`.
fn bvnd(dh: f64, dk: f64, r: f64) -> f64 {
    let h = dh;
    let mut k = dk;
    let mut hk = h * k;
    let quad = quadrature(r.abs());
    let mut bvn = 0.0;

    if r.abs() < 0.925 {
        if r.abs() > 0.0 {
            let hs = (h * h + k * k) / 2.0;
            let asr = 0.5 * r.asin();
            for &(w, x) in quad {
                for is in [-1.0, 1.0] {
                    let sn = (asr * (is * x + 1.0)).sin();
                    bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
                }
            }
            bvn *= asr / TWO_PI;
        }
        bvn + phi(-h) * phi(-k)
    } else {
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        if r.abs() < 1.0 {
            let a_s = (1.0 - r) * (1.0 + r);
            let mut a = a_s.sqrt();
            let b_s = (h - k) * (h - k);
            let c = (4.0 - hk) / 8.0;
            let d = (12.0 - hk) / 16.0;
            let asr = -0.5 * (b_s / a_s + hk);
            if asr > -100.0 {
                bvn = a
                    * asr.exp()
                    * (1.0 - c * (b_s - a_s) * (1.0 - d * b_s / 5.0) / 3.0
                        + c * d * a_s * a_s / 5.0);
            }
            if -hk < 100.0 {
                let b = b_s.sqrt();
                bvn -= (-0.5 * hk).exp()
                    * TWO_PI.sqrt()
                    * phi(-b / a)
                    * b
                    * (1.0 - c * b_s * (1.0 - d * b_s / 5.0) / 3.0);
            }
            a /= 2.0;
            for &(w, x) in quad {
                for is in [-1.0, 1.0] {
                    let xs = (a * (is * x + 1.0)).powi(2);
                    let rs = (1.0 - xs).sqrt();
                    let asr = -0.5 * (b_s / xs + hk);
                    if asr > -100.0 {
                        bvn += a
                            * w
                            * asr.exp()
                            * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs
                                - (1.0 + c * xs * (1.0 + d * xs)));
                    }
                }
            }
            bvn = -bvn / TWO_PI;
        }
        if r > 0.0 {
            bvn + phi(-h.max(k))
        } else {
            bvn = -bvn;
            if k > h {
                bvn += phi(k) - phi(h);
            }
            bvn
        }
    }
}

/// P(X <= h, Y <= k) for standard bivariate normal variables with
/// correlation `rho`, `|rho| < 1`.
pub fn bvn_cdf(h: f64, k: f64, rho: f64) -> Result<f64> {
    if !rho.is_finite() || rho.abs() >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "bvn_cdf correlation {rho} must satisfy |rho| < 1"
        )));
    }
    if h == f64::NEG_INFINITY || k == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if h == f64::INFINITY {
        return Ok(phi(k));
    }
    if k == f64::INFINITY {
        return Ok(phi(h));
    }
    Ok(bvnd(-h, -k, rho).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn phi_reference_values() {
        assert!((phi(0.0) - 0.5).abs() < 1e-15);
        assert!((phi(1.0) - 0.8413447460685429).abs() < 1e-12);
        assert!((phi(-1.96) - 0.024997895148220435).abs() < 1e-12);
        assert!((phi(6.0) - 0.9999999990134124).abs() < 1e-14);
    }

    #[test]
    fn phi_inv_roundtrip() {
        for i in 1..999 {
            let p = i as f64 / 1000.0;
            let x = phi_inv(p).unwrap();
            assert!((phi(x) - p).abs() < 1e-12, "p={p}");
        }
        // deep tails
        for &p in &[1e-10, 1e-6, 1.0 - 1e-6] {
            let x = phi_inv(p).unwrap();
            assert!((phi(x) - p).abs() / p.min(1.0 - p) < 1e-8, "p={p}");
        }
    }

    #[test]
    fn phi_inv_rejects_outside_unit_interval() {
        assert!(phi_inv(-0.1).is_err());
        assert!(phi_inv(1.1).is_err());
    }

    #[test]
    fn bvn_independence_factorizes() {
        for &(h, k) in &[(0.0, 0.0), (1.2, -0.7), (-2.0, 0.5)] {
            let got = bvn_cdf(h, k, 0.0).unwrap();
            assert!((got - phi(h) * phi(k)).abs() < 1e-14, "h={h} k={k}");
        }
    }

    #[test]
    fn bvn_orthant_identity_at_origin() {
        for &rho in &[-0.9, -0.24, -0.1, 0.0, 0.1, 0.24, 0.6, 0.925, 0.99] {
            let got = bvn_cdf(0.0, 0.0, rho).unwrap();
            let want = 0.25 + rho.asin() / (2.0 * PI);
            assert!((got - want).abs() < 1e-13, "rho={rho}: {got} vs {want}");
        }
    }

    #[test]
    fn bvn_symmetry_and_monotonicity() {
        let a = bvn_cdf(0.3, -1.1, 0.5).unwrap();
        let b = bvn_cdf(-1.1, 0.3, 0.5).unwrap();
        assert!((a - b).abs() < 1e-14);
        // increasing in each argument
        assert!(bvn_cdf(0.5, 0.5, 0.4).unwrap() > bvn_cdf(0.2, 0.5, 0.4).unwrap());
    }

    #[test]
    fn bvn_reduces_to_margin_at_infinity() {
        let got = bvn_cdf(f64::INFINITY, 0.7, 0.3).unwrap();
        assert!((got - phi(0.7)).abs() < 1e-14);
    }

    /// Two-dimensional Gauss-Legendre quadrature of the bivariate normal
    /// density over (-8, h] x (-8, k], used as an independent oracle.
    fn bvn_quadrature(h: f64, k: f64, rho: f64) -> f64 {
        // 64 panels per axis, 12-point rule per panel
        let nodes_weights = |a: f64, b: f64| -> Vec<(f64, f64)> {
            let mut out = Vec::new();
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for &(w, x) in &GL_12 {
                out.push((half * w, mid + half * x));
                out.push((half * w, mid - half * x));
            }
            out
        };
        let panels = |lo: f64, hi: f64| -> Vec<(f64, f64)> {
            let n = 64;
            let mut pts = Vec::new();
            for i in 0..n {
                let a = lo + (hi - lo) * i as f64 / n as f64;
                let b = lo + (hi - lo) * (i + 1) as f64 / n as f64;
                pts.extend(nodes_weights(a, b));
            }
            pts
        };
        let det = 1.0 - rho * rho;
        let norm = 1.0 / (TWO_PI * det.sqrt());
        let xs = panels(-8.0, h);
        let ys = panels(-8.0, k);
        let mut total = 0.0;
        for &(wx, x) in &xs {
            for &(wy, y) in &ys {
                let q = (x * x - 2.0 * rho * x * y + y * y) / det;
                total += wx * wy * norm * (-0.5 * q).exp();
            }
        }
        total
    }

    #[test]
    fn bvn_matches_quadrature_oracle() {
        for &(h, k, rho) in &[
            (0.5, -0.3, 0.6),
            (1.0, 1.0, -0.24),
            (-0.7, 0.2, 0.24),
            (0.0, 1.5, 0.95),
            (-1.0, -1.0, -0.95),
        ] {
            let got = bvn_cdf(h, k, rho).unwrap();
            let want = bvn_quadrature(h, k, rho);
            assert!(
                (got - want).abs() < 1e-7,
                "h={h} k={k} rho={rho}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn bvn_rejects_degenerate_correlation() {
        assert!(bvn_cdf(0.0, 0.0, 1.0).is_err());
        assert!(bvn_cdf(0.0, 0.0, -1.0).is_err());
    }
}
