//! Double-double evaluation of `M (1 - e^{-k t})`, written without calling
//! any libm routine so it shares no code path with the implementation.

#[derive(Debug, Clone, Copy)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    Dd { hi: s, lo: err }
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    Dd { hi: p, lo: a.mul_add(b, -p) }
}

impl Dd {
    pub const fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.hi, o.hi);
        let t = two_sum(self.lo, o.lo);
        let u = quick_two_sum(s.hi, s.lo + t.hi);
        quick_two_sum(u.hi, u.lo + t.lo)
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = two_prod(self.hi, o.hi);
        quick_two_sum(p.hi, p.lo + (self.hi * o.lo + self.lo * o.hi))
    }

    pub fn div_f64(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let p = two_prod(q1, b);
        let r = (self.hi - p.hi - p.lo + self.lo) / b;
        quick_two_sum(q1, r)
    }

    pub fn scale_pow2(self, e: i32) -> Dd {
        let f = 2f64.powi(e);
        Dd { hi: self.hi * f, lo: self.lo * f }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

const LN2: Dd = Dd { hi: 0.693_147_180_559_945_3, lo: 2.319_046_813_846_299_6e-17 };

/// `sum_{n>=1} x^n / n!` for small `|x|`.
fn expm1_series(x: Dd) -> Dd {
    let mut term = x;
    let mut sum = x;
    for n in 2..60 {
        term = term.mul(x).div_f64(n as f64);
        sum = sum.add(term);
        if term.hi.abs() < 1e-36 * sum.hi.abs() {
            break;
        }
    }
    sum
}

/// `1 - e^{-x}` for `x >= 0`.
pub fn one_minus_exp_neg(x: Dd) -> Dd {
    if x.hi == 0.0 {
        return Dd::from(0.0);
    }
    if x.hi < 0.5 {
        return expm1_series(x.neg()).neg();
    }
    // e^{-x} = 2^{-n} e^{-r}, x = n ln2 + r.
    let n = (x.hi / LN2.hi).round();
    let r = x.sub(LN2.mul(Dd::from(n)));
    let e = Dd::from(1.0).add(expm1_series(r.neg())).scale_pow2(-(n as i32));
    Dd::from(1.0).sub(e)
}

/// `M (1 - e^{-k t})` with `k t` formed exactly.
pub fn learning_curve(m: f64, k: f64, t: u32) -> f64 {
    let kt = two_prod(k, t as f64);
    Dd::from(m).mul(one_minus_exp_neg(kt)).to_f64()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}
