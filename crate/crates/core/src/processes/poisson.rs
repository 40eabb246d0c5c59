use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::measure::PointConfiguration;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

/// Homogeneous Poisson process of the given intensity (per unit volume).
pub fn sample_poisson<R: Rng + ?Sized>(intensity: f64, domain: &Domain, rng: &mut R) -> Result<PointConfiguration> {
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(Error::InvalidParameter(format!("Poisson intensity {intensity}")));
    }
    let mean = intensity * domain.area();
    let count = Poisson::new(mean)
        .map_err(|e| Error::InvalidParameter(format!("Poisson mean {mean}: {e}")))?
        .sample(rng) as usize;
    let d = domain.dim();
    let (lo, hi) = domain.bounding_box();
    let mut out = PointConfiguration::empty(d);
    let mut x = vec![0.0; d];
    while out.len() < count {
        for k in 0..d {
            x[k] = lo[k] + (hi[k] - lo[k]) * rng.random::<f64>();
        }
        if domain.contains_unchecked(&x) {
            out.push(&x);
        }
    }
    Ok(out)
}
