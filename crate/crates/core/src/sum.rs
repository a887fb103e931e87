/// Neumaier-compensated running sum, accumulated in call order.
///
/// Plain accumulation of ~1e5 unit-scale terms leaves ~1e-12 of noise in the
/// average, enough to swamp second-order finite-difference truncation at
/// h ~ 1e-5. The compensation keeps the result deterministic for a fixed order.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_low_bits() {
        let mut s = NeumaierSum::default();
        for v in [1.0, 1e100, 1.0, -1e100] {
            s.add(v);
        }
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn many_small_terms() {
        let mut s = NeumaierSum::default();
        let mut plain = 0.0f64;
        for _ in 0..1_000_000 {
            s.add(0.1);
            plain += 0.1;
        }
        assert!((s.value() - 100_000.0).abs() < 1e-9);
        assert!((plain - 100_000.0).abs() > (s.value() - 100_000.0).abs());
    }
}
