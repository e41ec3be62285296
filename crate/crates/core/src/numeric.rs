//! Small numerical helpers shared across modules.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Compensated sum of a slice.
pub fn compensated_sum(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<KahanSum>().value()
}

/// `expm1(z) / z`, continuous at zero.
#[inline]
pub fn exprel(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 + z * (0.5 + z / 6.0)
    } else {
        z.exp_m1() / z
    }
}

/// Derivative of [`exprel`].
pub fn exprel_deriv(z: f64) -> f64 {
    if z.abs() < 0.5 {
        // sum_{j>=0} (j+1) z^j / (j+2)!
        let mut term = 0.5; // (j+1)/(j+2)! at j = 0
        let mut sum = term;
        let mut fact = 2.0; // (j+2)!
        let mut zp = 1.0;
        for j in 1..40 {
            zp *= z;
            fact *= (j + 2) as f64;
            term = (j + 1) as f64 * zp / fact;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        let e = z.exp();
        (z * e - e + 1.0) / (z * z)
    }
}

/// Natural log of the Beta function.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}
