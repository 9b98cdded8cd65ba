//! Naive Bayes pixel classifier over independent RGB channel histograms.

use serde::{Deserialize, Serialize};

use super::VisionError;

pub const BINS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PixelClass {
    NonFlower = 0,
    Flower = 1,
}

/// Class-conditional channel histograms and class priors.
///
/// `hist[c][k][v]` is P(channel k = v | class c) with `c` indexed by
/// [`PixelClass`] and channels ordered r, g, b.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawColorModel", into = "RawColorModel")]
pub struct ColorModel {
    hist: [[Vec<f64>; 3]; 2],
    prior: [f64; 2],
    /// Per-channel log-likelihood ratios, flower over non-flower.
    llr: [Vec<f64>; 3],
    prior_llr: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawColorModel {
    hist: [[Vec<f64>; 3]; 2],
    prior: [f64; 2],
}

impl TryFrom<RawColorModel> for ColorModel {
    type Error = VisionError;

    fn try_from(raw: RawColorModel) -> Result<Self, Self::Error> {
        ColorModel::from_parts(raw.hist, raw.prior)
    }
}

impl From<ColorModel> for RawColorModel {
    fn from(m: ColorModel) -> Self {
        RawColorModel {
            hist: m.hist,
            prior: m.prior,
        }
    }
}

impl ColorModel {
    /// Builds a model from explicit probabilities. Each histogram must have
    /// 256 strictly positive bins summing to 1, and the priors must sum to 1.
    pub fn from_parts(hist: [[Vec<f64>; 3]; 2], prior: [f64; 2]) -> Result<Self, VisionError> {
        for h in hist.iter().flatten() {
            let sum: f64 = h.iter().sum();
            if h.len() != BINS || (sum - 1.0).abs() > 1e-9 || h.iter().any(|&p| !(p > 0.0)) {
                return Err(VisionError::InvalidModel(
                    "histograms need 256 positive bins summing to 1".into(),
                ));
            }
        }
        if prior.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (prior[0] + prior[1] - 1.0).abs() > 1e-9 {
            return Err(VisionError::InvalidModel("priors must sum to 1".into()));
        }
        let mut model = Self {
            hist,
            prior,
            llr: Default::default(),
            prior_llr: 0.0,
        };
        model.refresh();
        Ok(model)
    }

    /// Uniform channel histograms for both classes.
    pub fn uniform(prior_flower: f64) -> Self {
        let u = vec![1.0 / BINS as f64; BINS];
        let h = [u.clone(), u.clone(), u];
        Self::from_parts([h.clone(), h], [1.0 - prior_flower, prior_flower]).expect("uniform model is valid")
    }

    fn refresh(&mut self) {
        let (n, f) = (PixelClass::NonFlower as usize, PixelClass::Flower as usize);
        for k in 0..3 {
            self.llr[k] = (0..BINS)
                .map(|v| self.hist[f][k][v].ln() - self.hist[n][k][v].ln())
                .collect();
        }
        self.prior_llr = self.prior[f].ln() - self.prior[n].ln();
    }

    pub fn prior(&self, class: PixelClass) -> f64 {
        self.prior[class as usize]
    }

    /// P(channel = value | class), channel 0..3 for r, g, b.
    pub fn likelihood(&self, class: PixelClass, channel: usize, value: u8) -> f64 {
        self.hist[class as usize][channel][value as usize]
    }

    /// log P(c) + log P(r|c) + log P(g|c) + log P(b|c) for both classes,
    /// indexed by [`PixelClass`].
    pub fn log_joint(&self, r: u8, g: u8, b: u8) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.prior[c].ln()
                + self.hist[c][0][r as usize].ln()
                + self.hist[c][1][g as usize].ln()
                + self.hist[c][2][b as usize].ln();
        }
        out
    }

    /// Log posterior odds of flower over non-flower.
    #[inline]
    pub fn log_odds(&self, r: u8, g: u8, b: u8) -> f64 {
        self.partial_odds(r, g) + self.llr[2][b as usize]
    }

    /// Prior and r, g terms of [`Self::log_odds`], summed in the same order
    /// so table construction reproduces per-pixel results bit for bit.
    #[inline]
    pub(crate) fn partial_odds(&self, r: u8, g: u8) -> f64 {
        self.prior_llr + self.llr[0][r as usize] + self.llr[1][g as usize]
    }

    #[inline]
    pub(crate) fn blue_llr(&self) -> &[f64] {
        &self.llr[2]
    }
}

/// Histogram estimation with add-one smoothing; priors are class frequencies.
pub fn train_color_model(pixels: &[([u8; 3], PixelClass)]) -> Result<ColorModel, VisionError> {
    let mut counts = [[[0u64; BINS]; 3]; 2];
    let mut totals = [0u64; 2];
    for (rgb, class) in pixels {
        let c = *class as usize;
        totals[c] += 1;
        for k in 0..3 {
            counts[c][k][rgb[k] as usize] += 1;
        }
    }
    if totals[0] == 0 || totals[1] == 0 {
        return Err(VisionError::MissingClass);
    }
    let total = (totals[0] + totals[1]) as f64;
    let hist = [0, 1].map(|c| {
        [0, 1, 2].map(|k| {
            let denom = (totals[c] + BINS as u64) as f64;
            counts[c][k].iter().map(|&n| (n + 1) as f64 / denom).collect::<Vec<_>>()
        })
    });
    let prior = [totals[0] as f64 / total, totals[1] as f64 / total];
    ColorModel::from_parts(hist, prior)
}

/// Argmax of the class posterior. Exact ties go to non-flower.
#[inline]
pub fn classify_rgb(model: &ColorModel, r: u8, g: u8, b: u8) -> PixelClass {
    if model.log_odds(r, g, b) > 0.0 {
        PixelClass::Flower
    } else {
        PixelClass::NonFlower
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn red_green() -> ColorModel {
        let mut px = vec![([255, 0, 0], PixelClass::Flower); 100];
        px.extend(vec![([0, 255, 0], PixelClass::NonFlower); 100]);
        train_color_model(&px).unwrap()
    }

    #[test]
    fn laplace_smoothing() {
        let m = red_green();
        assert!((m.likelihood(PixelClass::Flower, 0, 255) - 101.0 / 356.0).abs() < 1e-15);
        assert!((m.likelihood(PixelClass::NonFlower, 0, 255) - 1.0 / 356.0).abs() < 1e-15);
        assert_eq!(m.prior(PixelClass::Flower), 0.5);
    }

    #[test]
    fn missing_class() {
        let px = vec![([1, 2, 3], PixelClass::Flower); 4];
        assert_eq!(train_color_model(&px), Err(VisionError::MissingClass));
    }

    #[test]
    fn ties_and_zero_prior_are_non_flower() {
        let m = ColorModel::uniform(0.5);
        assert_eq!(classify_rgb(&m, 10, 200, 30), PixelClass::NonFlower);
        let m = ColorModel::uniform(0.0);
        assert_eq!(classify_rgb(&m, 255, 255, 255), PixelClass::NonFlower);
    }

    #[test]
    fn red_pixel_by_hand() {
        // Flower saw only (255, 0, 0): 0.5 · 101/356 · 1/356 · 1/356.
        // Non-flower saw only (0, 255, 0): 0.5 · 1/356 · 1/356 · 1/356.
        let m = red_green();
        let flower: f64 = 0.5 * (101.0 / 356.0) * (1.0 / 356.0) * (1.0 / 356.0);
        let non: f64 = 0.5 * (1.0 / 356.0) * (1.0 / 356.0) * (1.0 / 356.0);
        let lj = m.log_joint(255, 30, 40);
        assert!((lj[1] - flower.ln()).abs() < 1e-12);
        assert!((lj[0] - non.ln()).abs() < 1e-12);
        assert_eq!(classify_rgb(&m, 255, 30, 40), PixelClass::Flower);
    }
}
