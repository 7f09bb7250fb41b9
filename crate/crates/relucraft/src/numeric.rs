//! Correctly rounded summation of floating-point terms.
//!
//! Neuron pre-activations are computed as the correctly rounded value of the
//! exact sum of the rounded products `w_i x_i` and the bias. This makes the
//! result independent of term order, so terms that cancel exactly in pairs
//! (as in the multiplication gadgets) give exactly zero.

/// Exact running sum kept as non-overlapping partials (Shewchuk).
#[derive(Clone, Debug, Default)]
pub struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        ExactSum::default()
    }

    pub fn clear(&mut self) {
        self.partials.clear();
    }

    pub fn add(&mut self, mut x: f64) {
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    /// The exact sum rounded to nearest, ties to even.
    pub fn value(&self) -> f64 {
        let p = &self.partials;
        let Some(&top) = p.last() else {
            return 0.0;
        };
        let mut hi = top;
        let mut lo = 0.0;
        let mut k = p.len() - 1;
        while k > 0 {
            k -= 1;
            let x = hi;
            let y = p[k];
            hi = x + y;
            lo = y - (hi - x);
            if lo != 0.0 {
                break;
            }
        }
        if k > 0 && ((lo < 0.0 && p[k - 1] < 0.0) || (lo > 0.0 && p[k - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }
}

/// Correctly rounded sum of `terms`.
pub fn exact_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = ExactSum::new();
    for t in terms {
        acc.add(t);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cancels_regardless_of_order() {
        let t = [0.1, 1e16, -0.1, 3.0, -1e16, -3.0];
        assert_eq!(exact_sum(t), 0.0);
        assert_eq!(exact_sum([1e100, 1.0, -1e100]), 1.0);
    }

    #[test]
    fn rounds_to_nearest_even() {
        // 1 + 2^-53 is a tie between 1 and 1 + 2^-52; the even neighbour is 1
        assert_eq!(exact_sum([1.0, 2f64.powi(-53)]), 1.0);
        assert_eq!(exact_sum([1.0, 2f64.powi(-53), 2f64.powi(-80)]), 1.0 + 2f64.powi(-52));
        assert_eq!(exact_sum([0.1, 0.2]), 0.1 + 0.2);
        assert_eq!(exact_sum(std::iter::empty()), 0.0);
    }
}
