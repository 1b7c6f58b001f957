//! Information fusion pools: how the two dendritic channels are coupled into
//! a single internal activity.

/// Couples weighted channel inputs into the internal activity `U`.
///
/// The associated constants give the arithmetic cost of one evaluation and
/// feed the operation counters.
pub trait FusionPool {
    const MULTIPLICATIONS: u64;
    const ADDITIONS: u64;

    fn internal_activity(
        &self,
        weight_a: f64,
        channel_a: f64,
        weight_b: f64,
        channel_b: f64,
    ) -> f64;
}

/// Additive coupling, `U = 1 + wA*HA + wB*HB`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AdditivePool;

impl FusionPool for AdditivePool {
    const MULTIPLICATIONS: u64 = 2;
    const ADDITIONS: u64 = 2;

    #[inline]
    fn internal_activity(
        &self,
        weight_a: f64,
        channel_a: f64,
        weight_b: f64,
        channel_b: f64,
    ) -> f64 {
        1.0 + weight_a * channel_a + weight_b * channel_b
    }
}

/// Multiplicative coupling with a level factor,
/// `U = (1 + wA*HA) * (1 + wB*HB) + sigma`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MultiplicativePool {
    pub level_factor: f64,
}

impl FusionPool for MultiplicativePool {
    const MULTIPLICATIONS: u64 = 3;
    const ADDITIONS: u64 = 3;

    #[inline]
    fn internal_activity(
        &self,
        weight_a: f64,
        channel_a: f64,
        weight_b: f64,
        channel_b: f64,
    ) -> f64 {
        (1.0 + weight_a * channel_a) * (1.0 + weight_b * channel_b) + self.level_factor
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn additive_activity() {
        assert_eq!(
            AdditivePool.internal_activity(0.25, 0.4, 0.75, 0.8),
            1.0 + 0.1 + 0.6000000000000001
        );
        assert_eq!(AdditivePool.internal_activity(0.5, 0.0, 0.5, 0.0), 1.0);
    }

    #[test]
    fn multiplicative_with_zero_image() {
        // Image A all zero: HA reduces to the linking term R.
        let pool = MultiplicativePool { level_factor: 0.0 };
        let (wa, wb, r, sb) = (0.3, 0.7, 0.4, 0.9);
        let u = pool.internal_activity(wa, 0.0 + r, wb, sb + r);
        assert!((u - (1.0 + wa * r) * (1.0 + wb * (sb + r))).abs() < 1e-15);

        let shifted = MultiplicativePool { level_factor: 0.25 };
        assert_eq!(shifted.internal_activity(0.0, 1.0, 0.0, 1.0), 1.25);
    }
}
