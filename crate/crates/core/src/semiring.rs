//! Semirings for evaluating derivation forests.

/// A commutative semiring over derivation weights.
pub trait Semiring: Clone {
    type V: Copy + std::fmt::Debug;
    fn zero() -> Self::V;
    fn one() -> Self::V;
    fn plus(a: Self::V, b: Self::V) -> Self::V;
    fn times(a: Self::V, b: Self::V) -> Self::V;
}

/// `log(exp(a) + exp(b))` without overflow.
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Log-sum-exp of a slice.
pub fn log_sum(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Sum-product in log space.
#[derive(Clone, Copy, Debug)]
pub struct LogSum;

impl Semiring for LogSum {
    type V = f64;
    fn zero() -> f64 {
        f64::NEG_INFINITY
    }
    fn one() -> f64 {
        0.0
    }
    fn plus(a: f64, b: f64) -> f64 {
        log_add(a, b)
    }
    fn times(a: f64, b: f64) -> f64 {
        a + b
    }
}

/// Number of derivations.
#[derive(Clone, Copy, Debug)]
pub struct Count;

impl Semiring for Count {
    type V = u128;
    fn zero() -> u128 {
        0
    }
    fn one() -> u128 {
        1
    }
    fn plus(a: u128, b: u128) -> u128 {
        a + b
    }
    fn times(a: u128, b: u128) -> u128 {
        a * b
    }
}

/// Scores closer than this are treated as tied.
pub const TIE_EPS: f64 = 1e-12;

/// A Viterbi score with tie-break keys.
///
/// Ties on the log score are broken by the smaller sum of arc head
/// positions, then by the smaller total arc length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scored {
    pub score: f64,
    pub head_sum: i64,
    pub len_sum: i64,
}

impl Scored {
    pub const NONE: Scored = Scored { score: f64::NEG_INFINITY, head_sum: 0, len_sum: 0 };

    pub fn new(score: f64) -> Self {
        Scored { score, head_sum: 0, len_sum: 0 }
    }

    /// Score of a single arc event.
    pub fn arc(score: f64, head: usize, dep: usize) -> Self {
        Scored { score, head_sum: head as i64, len_sum: head.abs_diff(dep) as i64 }
    }

    /// True if `self` should be preferred over `other`.
    pub fn beats(&self, other: &Scored) -> bool {
        if other.score == f64::NEG_INFINITY {
            return self.score > f64::NEG_INFINITY;
        }
        if self.score == f64::NEG_INFINITY {
            return false;
        }
        let tol = TIE_EPS * self.score.abs().max(other.score.abs()).max(1.0);
        if (self.score - other.score).abs() > tol {
            return self.score > other.score;
        }
        (self.head_sum, self.len_sum) < (other.head_sum, other.len_sum)
    }
}

/// Max-product with deterministic tie-breaking.
#[derive(Clone, Copy, Debug)]
pub struct MaxTie;

impl Semiring for MaxTie {
    type V = Scored;
    fn zero() -> Scored {
        Scored::NONE
    }
    fn one() -> Scored {
        Scored::new(0.0)
    }
    fn plus(a: Scored, b: Scored) -> Scored {
        if b.beats(&a) {
            b
        } else {
            a
        }
    }
    fn times(a: Scored, b: Scored) -> Scored {
        Scored { score: a.score + b.score, head_sum: a.head_sum + b.head_sum, len_sum: a.len_sum + b.len_sum }
    }
}
