use rayon::prelude::*;

use crate::combine::{ranking_statistic, Method};
use crate::error::{Error, Result};
use crate::genmodel::StudyDesign;
use crate::statdist::{central_sf, stream_id, RngStream};

pub(crate) const MIN_DRAWS: usize = 1000;

/// Draws below this many exceedances are extrapolated with a χ²₁ tail.
const TAIL_COUNT: usize = 100;

const CHUNK: usize = 1 << 16;

/// Lane reserved for calibration streams.
pub(crate) const CALIBRATION_LANE: u16 = u16::MAX;

/// Empirical null law of the random-effects statistic for a fixed set of
/// study sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct NullCalibration {
    sorted: Vec<f64>,
}

impl NullCalibration {
    pub fn new(designs: &[StudyDesign], draws: usize, seed: u64) -> Result<Self> {
        if designs.is_empty() {
            return Err(Error::Empty("calibration needs at least one study"));
        }
        if draws < MIN_DRAWS {
            return Err(Error::domain(format!("calibration needs at least {MIN_DRAWS} draws")));
        }
        let var: Vec<f64> = designs.iter().map(|d| 1.0 / d.n_cases as f64).collect();
        let sd: Vec<f64> = var.iter().map(|v| v.sqrt()).collect();
        let n_chunks = draws.div_ceil(CHUNK);
        let chunks: Vec<Vec<f64>> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let len = CHUNK.min(draws - c * CHUNK);
                let mut rng = RngStream::new(seed, stream_id(c as u64, CALIBRATION_LANE));
                let mut b = vec![0.0; sd.len()];
                (0..len)
                    .map(|_| {
                        for (bs, s) in b.iter_mut().zip(&sd) {
                            *bs = s * rng.normal();
                        }
                        ranking_statistic(Method::MetaRandom, &b, &var)
                    })
                    .collect()
            })
            .collect();
        let mut sorted: Vec<f64> = chunks.concat();
        sorted.par_sort_unstable_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn draws(&self) -> usize {
        self.sorted.len()
    }

    /// Estimated P(W > x) under the null. Past the `TAIL_COUNT`-th largest
    /// draw the empirical tail is continued proportionally to χ²₁.
    pub fn sf(&self, x: f64) -> f64 {
        let n = self.sorted.len();
        let anchor = self.sorted[n - TAIL_COUNT.min(n)];
        let above = |y: f64| (n - self.sorted.partition_point(|&v| v <= y)) as f64 / n as f64;
        if x <= anchor {
            return above(x);
        }
        let base = above(anchor);
        let ref_anchor = central_sf(anchor, 1);
        if ref_anchor <= 0.0 {
            return 0.0;
        }
        base * central_sf(x, 1) / ref_anchor
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_study_matches_chi_square() {
        let designs = StudyDesign::equal(1, 300).unwrap();
        let cal = NullCalibration::new(&designs, 200_000, 3).unwrap();
        for x in [0.1, 1.0, 3.84, 6.63] {
            let want: f64 = central_sf(x, 1);
            let se = (want * (1.0 - want) / 200_000.0).sqrt();
            assert!((cal.sf(x) - want).abs() < 5.0 * se, "x={x}");
        }
        assert!(cal.sf(40.0) > 0.0 && cal.sf(40.0) < 1e-8);
    }

    #[test]
    fn tail_is_continuous_and_decreasing() {
        let designs = StudyDesign::equal(5, 400).unwrap();
        let cal = NullCalibration::new(&designs, 100_000, 1).unwrap();
        let mut last = 1.0;
        for i in 0..400 {
            let v = cal.sf(i as f64 * 0.1);
            assert!(v <= last);
            last = v;
        }
    }
}
