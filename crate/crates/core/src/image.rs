//! Real-valued raster images with intensities in `[0, 1]`.

use crate::error::{Error, Result};

/// Clamps `v` into the unit interval.
#[inline]
pub fn clamp_unit(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// A row-major raster with 1 or 3 interleaved channels.
///
/// Every stored value is finite and lies in `[0, 1]`. 8-bit sources are
/// divided by 255 and 16-bit sources by 65535 when loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl PixelImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height, channels)?;
        if data.len() != width * height * channels {
            return Err(Error::invalid(format!(
                "data length {} does not match {}x{}x{}",
                data.len(),
                width,
                height,
                channels
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!(
                "intensity {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        check_dims(width, height, channels)?;
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::invalid(format!("intensity {value} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        })
    }

    /// Builds an image by evaluating `f(x, y, c)` for every sample; results
    /// are clamped into `[0, 1]` (NaN becomes 0).
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        check_dims(width, height, channels)?;
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(sanitize(f(x, y, c)));
                }
            }
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Constructs from data the caller has already clamped.
    pub(crate) fn from_parts(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        debug_assert!(data.iter().all(|v| (0.0..=1.0).contains(v)));
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    /// Applies `f` to every sample, clamping the result into `[0, 1]`.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        let data = self.data.iter().map(|&v| sanitize(f(v))).collect();
        Self::from_parts(self.width, self.height, self.channels, data)
    }

    /// Rec. 601 luma of a 3-channel image; 1-channel images are returned as is.
    pub fn luminance(&self) -> Self {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| clamp_unit(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]))
            .collect();
        Self::from_parts(self.width, self.height, 1, data)
    }

    /// Replicates a single channel into three; 3-channel images are cloned.
    pub fn to_rgb(&self) -> Self {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        Self::from_parts(self.width, self.height, 3, data)
    }

    /// Extracts channel `c` as a 1-channel image.
    pub fn channel(&self, c: usize) -> Result<Self> {
        if c >= self.channels {
            return Err(Error::invalid(format!(
                "channel {c} out of range for {}-channel image",
                self.channels
            )));
        }
        let data = self
            .data
            .iter()
            .skip(c)
            .step_by(self.channels)
            .copied()
            .collect();
        Ok(Self::from_parts(self.width, self.height, 1, data))
    }

    /// Quantizes to 8 bits with round-half-away-from-zero.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize_u8(v)).collect()
    }
}

#[inline]
pub fn quantize_u8(v: f64) -> u8 {
    (clamp_unit(v) * 255.0).round() as u8
}

#[inline]
pub fn quantize_u16(v: f64) -> u16 {
    (clamp_unit(v) * 65535.0).round() as u16
}

#[inline]
fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        clamp_unit(v)
    }
}

fn check_dims(width: usize, height: usize, channels: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::invalid(format!(
            "image dimensions must be positive, got {width}x{height}"
        )));
    }
    if channels != 1 && channels != 3 {
        return Err(Error::invalid(format!(
            "channel count must be 1 or 3, got {channels}"
        )));
    }
    Ok(())
}

/// Bilinear resampling with pixel centers at `(i + 0.5) / n`
/// (align-corners false). Samples beyond the border clamp to the edge.
pub fn resample_bilinear(img: &PixelImage, target_w: usize, target_h: usize) -> Result<PixelImage> {
    if target_w == 0 || target_h == 0 {
        return Err(Error::invalid(format!(
            "target dimensions must be positive, got {target_w}x{target_h}"
        )));
    }
    if (target_w, target_h) == img.dims() {
        return Ok(img.clone());
    }
    let ch = img.channels;
    let xs = axis_weights(img.width, target_w);
    let ys = axis_weights(img.height, target_h);
    let mut data = Vec::with_capacity(target_w * target_h * ch);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            for c in 0..ch {
                let top = img.get(x0, y0, c) * (1.0 - fx) + img.get(x1, y0, c) * fx;
                let bottom = img.get(x0, y1, c) * (1.0 - fx) + img.get(x1, y1, c) * fx;
                data.push(clamp_unit(top * (1.0 - fy) + bottom * fy));
            }
        }
    }
    Ok(PixelImage::from_parts(target_w, target_h, ch, data))
}

fn axis_weights(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    let max = (src - 1) as f64;
    (0..dst)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, max);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

/// Bilinear sample at index-space coordinates (pixel `i` sits at `i`),
/// clamping outside the raster.
#[inline]
pub(crate) fn sample_bilinear(img: &PixelImage, x: f64, y: f64, c: usize) -> f64 {
    let xm = (img.width - 1) as f64;
    let ym = (img.height - 1) as f64;
    let x = x.clamp(0.0, xm);
    let y = y.clamp(0.0, ym);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(img.width - 1);
    let y1 = (y0 + 1).min(img.height - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let top = img.get(x0, y0, c) * (1.0 - fx) + img.get(x1, y0, c) * fx;
    let bottom = img.get(x0, y1, c) * (1.0 - fx) + img.get(x1, y1, c) * fx;
    top * (1.0 - fy) + bottom * fy
}
