//! The Airy function `Ai` and its derivative on the complex plane.
//!
//! Two representations are combined:
//!
//! * the entire Maclaurin pair, `Ai(z) = Ai(0) f(z) + Ai'(0) g(z)` with
//!
//!   ```text
//!   f(z) = sum_k a_k z^{3k},   a_0 = 1,  a_k = a_{k-1} / ((3k-1)(3k)),
//!   g(z) = sum_k b_k z^{3k+1}, b_0 = 1,  b_k = b_{k-1} / ((3k)(3k+1)),
//!   ```
//!
//!   used for `|z| <= 9.5`. Near the positive real axis the sum cancels
//!   down from terms of size `e^{+2|zeta|}` (with `zeta = (2/3) z^{3/2}`)
//!   to a result of size `e^{-|zeta|}`, so plain doubles lose up to
//!   `e^{2 Re zeta} * eps` — already `1e-5` at `z = 7`. The series is
//!   therefore accumulated in double-double arithmetic (roughly 31
//!   significant digits), which keeps the relative error below `1e-13`
//!   out to the switch radius;
//!
//! * the Poincare expansion for `|z| > 9.5`, `|arg z| <= 2.35`,
//!
//!   ```text
//!   Ai(z)  ~  e^{-zeta} / (2 sqrt(pi) z^{1/4}) * sum_k (-1)^k u_k zeta^{-k},
//!   Ai'(z) ~ -e^{-zeta} z^{1/4} / (2 sqrt(pi)) * sum_k (-1)^k v_k zeta^{-k},
//!   u_{k+1} = u_k (3k + 5/2)(3k + 3/2)(3k + 1/2) / (54 (k+1)(k + 1/2)),
//!   v_k = u_k (6k + 1) / (1 - 6k),
//!   ```
//!
//!   truncated at the smallest term (at most 40 terms); at the switch
//!   radius the optimal-truncation error is `~e^{-2 |zeta|} < 1e-16`
//!   relative.
//!
//! Beyond the sector `|arg z| <= 2.35` the series is used at any radius:
//! there `Ai` is not exponentially small, so the double-double headroom
//! covers every evaluation the crate performs (the wall layer stays inside
//! `|arg z| < pi/2`).

use crate::C;

/// `Ai(0) = 3^{-2/3} / Gamma(2/3)`.
pub const AI_ZERO: f64 = 0.355_028_053_887_817_2;
/// `Ai'(0) = -3^{-1/3} / Gamma(1/3)`.
pub const AIP_ZERO: f64 = -0.258_819_403_792_806_8;

/// Radius of the series / asymptotic switch.
const SWITCH_RADIUS: f64 = 9.5;
/// Largest `|arg z|` on which the single-exponential expansion is used.
const SWITCH_ARG: f64 = 2.35;

// Double-double splits of the series coefficients.
const C1: Dd = Dd {
    hi: 0.355_028_053_887_817_2,
    lo: 2.052_336_324_362_12e-17,
};
const C2: Dd = Dd {
    hi: -0.258_819_403_792_806_8,
    lo: 2.522_243_111_610_832e-17,
};

/// `Ai(z)` and `Ai'(z)` together.
pub fn airy_ai_both(z: C) -> (C, C) {
    if z.norm() <= SWITCH_RADIUS || z.arg().abs() > SWITCH_ARG {
        series(z)
    } else {
        asymptotic(z)
    }
}

/// `Ai(z)`.
///
/// ```
/// use rotorflow::airy::airy_ai;
/// use rotorflow::C;
/// let ai = airy_ai(C::new(1.0, 0.0));
/// assert!((ai.re - 0.13529241631288142).abs() < 1e-13 && ai.im == 0.0);
/// ```
pub fn airy_ai(z: C) -> C {
    airy_ai_both(z).0
}

/// `Ai'(z)`.
pub fn airy_ai_prime(z: C) -> C {
    airy_ai_both(z).1
}

// ---------------------------------------------------------------------------
// Double-double scalars: an unevaluated sum hi + lo with |lo| <= ulp(hi)/2.

#[derive(Clone, Copy, Default)]
struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    Dd {
        hi: s,
        lo: (a - (s - bb)) + (b - bb),
    }
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

#[inline]
fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    Dd {
        hi: p,
        lo: a.mul_add(b, -p),
    }
}

impl Dd {
    #[inline]
    fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.hi, o.hi);
        quick_two_sum(s.hi, s.lo + self.lo + o.lo)
    }

    #[inline]
    fn mul(self, o: Dd) -> Dd {
        let p = two_prod(self.hi, o.hi);
        quick_two_sum(p.hi, p.lo + self.hi * o.lo + self.lo * o.hi)
    }

    #[inline]
    fn scale(self, b: f64) -> Dd {
        let p = two_prod(self.hi, b);
        quick_two_sum(p.hi, p.lo + self.lo * b)
    }

    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    /// Full-accuracy quotient by a double. A rounded-reciprocal multiply
    /// would inject an ulp of relative error into every series term and
    /// forfeit the extended precision.
    #[inline]
    fn div_f64(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let p = two_prod(q1, b);
        let s = two_sum(self.hi, -p.hi);
        let q2 = (s.hi + (s.lo - p.lo + self.lo)) / b;
        quick_two_sum(q1, q2)
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

#[derive(Clone, Copy, Default)]
struct Cdd {
    re: Dd,
    im: Dd,
}

impl Cdd {
    #[inline]
    fn from_c(z: C) -> Cdd {
        Cdd {
            re: Dd::from(z.re),
            im: Dd::from(z.im),
        }
    }

    #[inline]
    fn add(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re.add(o.re),
            im: self.im.add(o.im),
        }
    }

    #[inline]
    fn mul(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re.mul(o.re).add(self.im.mul(o.im).neg()),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }

    #[inline]
    fn scale(self, b: f64) -> Cdd {
        Cdd {
            re: self.re.scale(b),
            im: self.im.scale(b),
        }
    }

    #[inline]
    fn scale_dd(self, b: Dd) -> Cdd {
        Cdd {
            re: self.re.mul(b),
            im: self.im.mul(b),
        }
    }

    #[inline]
    fn div_f64(self, b: f64) -> Cdd {
        Cdd {
            re: self.re.div_f64(b),
            im: self.im.div_f64(b),
        }
    }

    #[inline]
    fn to_c(self) -> C {
        C::new(self.re.to_f64(), self.im.to_f64())
    }

    /// Cheap magnitude estimate for stopping tests.
    #[inline]
    fn mag(self) -> f64 {
        self.re.hi.abs() + self.im.hi.abs()
    }
}

// ---------------------------------------------------------------------------

fn series(z: C) -> (C, C) {
    if z.norm() == 0.0 {
        return (C::new(AI_ZERO, 0.0), C::new(AIP_ZERO, 0.0));
    }
    let zdd = Cdd::from_c(z);
    let z3 = zdd.mul(zdd).mul(zdd);
    // Running terms t_k = a_k z^{3k}, u_k = b_k z^{3k+1}. The derivative
    // series reuse them through f'(z) = (1/z) sum_k (3k) t_k and
    // g'(z) = (1/z) sum_k (3k + 1) u_k, so all four cancelling sums are
    // accumulated in double-double and only the final quotient by z is done
    // in plain doubles.
    let mut t = Cdd::from_c(C::new(1.0, 0.0));
    let mut u = zdd;
    let mut f = t;
    let mut g = u;
    let mut sfp = Cdd::default();
    let mut sgp = u;
    for k in 1..300 {
        let kf = k as f64;
        t = t.mul(z3).div_f64((3.0 * kf - 1.0) * (3.0 * kf));
        u = u.mul(z3).div_f64((3.0 * kf) * (3.0 * kf + 1.0));
        f = f.add(t);
        g = g.add(u);
        sfp = sfp.add(t.scale(3.0 * kf));
        sgp = sgp.add(u.scale(3.0 * kf + 1.0));
        if t.mag() + u.mag() < 1e-34 * (f.mag() + g.mag()) {
            break;
        }
    }
    let ai = f.scale_dd(C1).add(g.scale_dd(C2)).to_c();
    let aip_num = sfp.scale_dd(C1).add(sgp.scale_dd(C2)).to_c();
    (ai, aip_num / z)
}

fn asymptotic(z: C) -> (C, C) {
    let sq = z.sqrt();
    let zeta = z * sq * (2.0 / 3.0);
    let z14 = sq.sqrt();
    let neg_inv_zeta = -zeta.inv();
    let mut s = C::new(1.0, 0.0);
    let mut sp = C::new(1.0, 0.0);
    let mut uk = 1.0_f64;
    let mut pow = C::new(1.0, 0.0);
    let mut prev = f64::INFINITY;
    for k in 0..40 {
        let kf = k as f64;
        uk *= (3.0 * kf + 2.5) * (3.0 * kf + 1.5) * (3.0 * kf + 0.5)
            / (54.0 * (kf + 1.0) * (kf + 0.5));
        pow *= neg_inv_zeta;
        let term = pow * uk;
        let mag = term.norm();
        if mag > prev {
            // Divergence onset: truncate at the smallest term.
            break;
        }
        prev = mag;
        s += term;
        let vk = uk * (6.0 * kf + 7.0) / (-6.0 * kf - 5.0);
        sp += pow * vk;
        if mag < 1e-17 * s.norm() {
            break;
        }
    }
    let pref = (-zeta).exp() * (0.5 / std::f64::consts::PI.sqrt());
    (pref / z14 * s, -pref * z14 * sp)
}
