//! Built-in target functions on `[0, 1]^d` with derivatives and norm bounds.
//!
//! All targets except `product` depend on the first coordinate only. Norm
//! bounds are for `[0, 1]^d` with the Euclidean distance in the Hölder
//! quotient; a norm is the sup of all derivatives up to order `k` plus the
//! `s`-Hölder seminorm of the order-`k` derivatives.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Builtin {
    /// `0.7`
    Const,
    /// `x_1`
    Linear,
    /// `|x_1 - 1/3|`
    AbsShift,
    /// `sqrt(|x_1 - 1/2|)`
    SqrtAbs,
    /// `x_1^2`
    Square,
    /// `sin(π x_1)`
    SinPi,
    /// `x_1 x_2 ... x_d`
    Product,
}

impl Builtin {
    pub const ALL: [Builtin; 7] = [
        Builtin::Const,
        Builtin::Linear,
        Builtin::AbsShift,
        Builtin::SqrtAbs,
        Builtin::Square,
        Builtin::SinPi,
        Builtin::Product,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Const => "const",
            Builtin::Linear => "linear",
            Builtin::AbsShift => "abs-shift",
            Builtin::SqrtAbs => "sqrt-abs",
            Builtin::Square => "square",
            Builtin::SinPi => "sin-pi",
            Builtin::Product => "product",
        }
    }

    pub fn eval(self, x: &[f64]) -> f64 {
        let x1 = x[0];
        match self {
            Builtin::Const => 0.7,
            Builtin::Linear => x1,
            Builtin::AbsShift => (x1 - 1.0 / 3.0).abs(),
            Builtin::SqrtAbs => (x1 - 0.5).abs().sqrt(),
            Builtin::Square => x1 * x1,
            Builtin::SinPi => (PI * x1).sin(),
            Builtin::Product => x.iter().product(),
        }
    }

    /// `D^α f(x)`, or `None` where the target is not that smooth.
    pub fn derivative(self, alpha: &[usize], x: &[f64]) -> Option<f64> {
        let order: usize = alpha.iter().sum();
        if order == 0 {
            return Some(self.eval(x));
        }
        let only_first = alpha.iter().skip(1).all(|&a| a == 0);
        let j = alpha[0];
        match self {
            Builtin::Const => Some(0.0),
            Builtin::Linear => Some(if only_first && j == 1 { 1.0 } else { 0.0 }),
            Builtin::AbsShift | Builtin::SqrtAbs => None,
            Builtin::Square => Some(match (only_first, j) {
                (false, _) => 0.0,
                (true, 1) => 2.0 * x[0],
                (true, 2) => 2.0,
                _ => 0.0,
            }),
            Builtin::SinPi => Some(if only_first {
                PI.powi(j as i32) * (PI * x[0] + j as f64 * PI / 2.0).sin()
            } else {
                0.0
            }),
            Builtin::Product => Some(if alpha.iter().all(|&a| a <= 1) {
                x.iter().zip(alpha).filter(|(_, &a)| a == 0).map(|(v, _)| v).product()
            } else {
                0.0
            }),
        }
    }

    /// Upper bound on the `C^{k,s}` norm over `[0, 1]^d`, or `None` if the
    /// target is not in that class.
    pub fn cks_norm_bound(self, d: usize, k: usize, s: f64) -> Option<f64> {
        if !(0.0..=1.0).contains(&s) || d == 0 {
            return None;
        }
        match self {
            Builtin::Const => Some(0.7),
            Builtin::Linear => Some(if k == 0 { 2.0 } else { 1.0 }),
            Builtin::AbsShift => (k == 0).then_some(2.0 / 3.0 + 1.0),
            Builtin::SqrtAbs => (k == 0 && s <= 0.5).then_some(FRAC_1_SQRT_2 + 1.0),
            Builtin::Square => Some(match k {
                0 => 3.0,
                1 => 4.0,
                _ => 2.0,
            }),
            Builtin::SinPi => {
                let top = PI.powi(k as i32);
                Some(top + if s > 0.0 { PI * top } else { 2.0 * top })
            }
            Builtin::Product => {
                let free = d.saturating_sub(k);
                let seminorm = match (free, s > 0.0) {
                    (0, _) => 0.0,
                    (_, false) => 1.0,
                    (m, true) => (m as f64).sqrt(),
                };
                Some(1.0 + seminorm)
            }
        }
    }

    /// Upper bound on the `s`-Hölder norm (`k = 0`).
    pub fn holder_norm_bound(self, d: usize, s: f64) -> Option<f64> {
        self.cks_norm_bound(d, 0, s)
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Builtin::ALL.into_iter().find(|b| b.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Builtin::ALL.iter().map(|b| b.name()).collect();
            Error::invalid(format!("unknown target '{s}', expected one of {}", names.join(", ")))
        })
    }
}
