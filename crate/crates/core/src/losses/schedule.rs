use crate::Error;

/// Per-epoch latent `ν` and push weight `μ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub nu: Vec<f64>,
    pub mu: Vec<f64>,
}

impl Schedule {
    /// Geometric `ν` from `nu_start` to `nu_end`, linear `μ` from `mu0` to 0.
    ///
    /// With a single epoch the start values are used.
    pub fn new(epochs: usize, nu_start: f64, nu_end: f64, mu0: f64) -> Result<Self, Error> {
        if epochs == 0 {
            return Err(Error::InvalidArgument("schedule needs at least one epoch".into()));
        }
        if !(nu_start > 0.0 && nu_end > 0.0) || !nu_start.is_finite() || !nu_end.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "ν endpoints must be positive, got {nu_start} and {nu_end}"
            )));
        }
        if !(mu0 >= 0.0) {
            return Err(Error::InvalidArgument(format!("μ₀ must be nonnegative, got {mu0}")));
        }
        if epochs == 1 {
            return Ok(Self {
                nu: vec![nu_start],
                mu: vec![mu0],
            });
        }
        let last = (epochs - 1) as f64;
        let ratio = (nu_end / nu_start).ln();
        let mut nu: Vec<f64> = (0..epochs)
            .map(|e| {
                if nu_start == nu_end {
                    nu_start
                } else {
                    nu_start * (ratio * e as f64 / last).exp()
                }
            })
            .collect();
        nu[0] = nu_start;
        nu[epochs - 1] = nu_end;
        let mu = (0..epochs).map(|e| mu0 * (1.0 - e as f64 / last)).collect();
        Ok(Self { nu, mu })
    }

    pub fn epochs(&self) -> usize {
        self.nu.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_shape() {
        let s = Schedule::new(5, 0.001, 100.0, 1.0).unwrap();
        assert_eq!(s.nu[0], 0.001);
        assert_eq!(s.nu[4], 100.0);
        let r: Vec<f64> = s.nu.windows(2).map(|w| w[1] / w[0]).collect();
        assert!(r.iter().all(|x| (x - r[0]).abs() < 1e-9 * r[0]));
        assert_eq!(s.mu, vec![1.0, 0.75, 0.5, 0.25, 0.0]);
    }

    #[test]
    fn flat_when_endpoints_match() {
        let s = Schedule::new(7, 0.001, 0.001, 0.0).unwrap();
        assert!(s.nu.iter().all(|&v| v == 0.001));
        assert!(s.mu.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_epoch_uses_start() {
        let s = Schedule::new(1, 0.5, 10.0, 2.0).unwrap();
        assert_eq!((s.nu[0], s.mu[0]), (0.5, 2.0));
        assert!(Schedule::new(0, 1.0, 1.0, 1.0).is_err());
        assert!(Schedule::new(3, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn monotone_sequences() {
        let s = Schedule::new(50, 0.001, 10.0, 3.0).unwrap();
        assert!(s.nu.windows(2).all(|w| w[1] > w[0]));
        assert!(s.mu.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*s.mu.last().unwrap(), 0.0);
    }
}
