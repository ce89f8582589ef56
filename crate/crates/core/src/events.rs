//! Event-camera streams: CSV parsing, windowed accumulation into polarity
//! images, and red/blue rendering.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::PixelImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventRecord {
    /// Timestamp in microseconds.
    pub t: i64,
    pub x: u32,
    pub y: u32,
    /// +1 (ON) or -1 (OFF).
    pub polarity: i8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolarityImage {
    width: usize,
    height: usize,
    values: Vec<i8>,
}

impl PolarityImage {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![0; width * height],
        }
    }

    pub fn new(width: usize, height: usize, values: Vec<i8>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::invalid("polarity buffer length mismatch"));
        }
        if values.iter().any(|v| !(-1..=1).contains(v)) {
            return Err(Error::invalid("polarity values must be in {-1, 0, 1}"));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> i8 {
        self.values[y * self.width + x]
    }
}

/// How events falling on one pixel inside a window are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Sign of the summed polarities.
    #[default]
    NetSum,
    /// Polarity of the last event in the window.
    LatestWins,
}

/// Color painted where no event fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventBackground {
    #[default]
    Gray,
    Black,
    White,
}

impl EventBackground {
    pub fn rgb(self) -> [f64; 3] {
        match self {
            EventBackground::Gray => [0.5; 3],
            EventBackground::Black => [0.0; 3],
            EventBackground::White => [1.0; 3],
        }
    }
}

/// Parses `t,x,y,p` lines. `p = 0` is read as OFF (-1). A first line whose
/// first field is not numeric is treated as a header. Blank lines are skipped.
pub fn parse_event_stream<R: BufRead>(
    source: R,
    sensor_width: usize,
    sensor_height: usize,
) -> Result<Vec<EventRecord>> {
    let mut events = Vec::new();
    let mut last_t = i64::MIN;
    let mut warned = false;
    for (idx, line) in source.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if idx == 0 && fields[0].parse::<f64>().is_err() {
            continue;
        }
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 4 fields `t,x,y,p`, found {}", fields.len()),
            });
        }
        let num = |i: usize, what: &str| -> Result<i64> {
            fields[i].parse::<i64>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid {what} `{}`", fields[i]),
            })
        };
        let t = num(0, "timestamp")?;
        let x = num(1, "x")?;
        let y = num(2, "y")?;
        let polarity = match num(3, "polarity")? {
            1 => 1,
            0 | -1 => -1,
            other => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("polarity must be 1, 0 or -1, got {other}"),
                })
            }
        };
        if x < 0 || y < 0 || x as usize >= sensor_width || y as usize >= sensor_height {
            return Err(Error::Parse {
                line: lineno,
                message: format!(
                    "coordinate ({x}, {y}) outside {sensor_width}x{sensor_height} sensor"
                ),
            });
        }
        if t < last_t && !warned {
            log::warn!("event timestamps decrease at line {lineno} ({t} < {last_t})");
            warned = true;
        }
        last_t = last_t.max(t);
        events.push(EventRecord {
            t,
            x: x as u32,
            y: y as u32,
            polarity,
        });
    }
    Ok(events)
}

/// Writes events as headerless `t,x,y,p` lines.
pub fn write_event_stream<W: Write>(events: &[EventRecord], mut out: W) -> std::io::Result<()> {
    for e in events {
        writeln!(out, "{},{},{},{}", e.t, e.x, e.y, e.polarity)?;
    }
    Ok(())
}

/// Raw per-pixel polarity sums over `[t0, t1)`. Events outside the raster
/// are ignored.
pub fn window_sums(events: &[EventRecord], t0: i64, t1: i64, width: usize, height: usize) -> Vec<i64> {
    let mut sums = vec![0i64; width * height];
    for e in events.iter().filter(|e| e.t >= t0 && e.t < t1) {
        let (x, y) = (e.x as usize, e.y as usize);
        if x < width && y < height {
            sums[y * width + x] += i64::from(e.polarity);
        }
    }
    sums
}

/// Net-sum accumulation: each pixel is the sign of its summed polarities.
pub fn accumulate(
    events: &[EventRecord],
    t0: i64,
    t1: i64,
    width: usize,
    height: usize,
) -> Result<PolarityImage> {
    accumulate_with(events, t0, t1, width, height, Aggregation::NetSum)
}

pub fn accumulate_with(
    events: &[EventRecord],
    t0: i64,
    t1: i64,
    width: usize,
    height: usize,
    mode: Aggregation,
) -> Result<PolarityImage> {
    if t0 >= t1 {
        return Err(Error::invalid(format!("empty window [{t0}, {t1})")));
    }
    let values = match mode {
        Aggregation::NetSum => window_sums(events, t0, t1, width, height)
            .into_iter()
            .map(|s| s.signum() as i8)
            .collect(),
        Aggregation::LatestWins => {
            let mut latest: Vec<(i64, i8)> = vec![(i64::MIN, 0); width * height];
            for e in events.iter().filter(|e| e.t >= t0 && e.t < t1) {
                let (x, y) = (e.x as usize, e.y as usize);
                if x < width && y < height {
                    let slot = &mut latest[y * width + x];
                    if e.t >= slot.0 {
                        *slot = (e.t, e.polarity);
                    }
                }
            }
            latest.into_iter().map(|(_, p)| p).collect()
        }
    };
    Ok(PolarityImage {
        width,
        height,
        values,
    })
}

/// Paints +1 red, -1 blue, and silent pixels mid-gray.
pub fn polarity_to_color(p: &PolarityImage) -> PixelImage {
    polarity_to_color_with(p, EventBackground::Gray)
}

pub fn polarity_to_color_with(p: &PolarityImage, background: EventBackground) -> PixelImage {
    let bg = background.rgb();
    let data = p
        .values
        .iter()
        .flat_map(|&v| match v {
            1 => [1.0, 0.0, 0.0],
            -1 => [0.0, 0.0, 1.0],
            _ => bg,
        })
        .collect();
    PixelImage::from_parts(p.width, p.height, 3, data)
}

/// Stores a polarity image as a 1-channel frame: -1 → 0, 0 → 0.5, +1 → 1.
pub fn encode_polarity(p: &PolarityImage) -> PixelImage {
    let data = p.values.iter().map(|&v| (f64::from(v) + 1.0) / 2.0).collect();
    PixelImage::from_parts(p.width, p.height, 1, data)
}

/// Inverse of [`encode_polarity`], thresholding at 0.25 and 0.75 so that
/// resampled or quantized frames still decode. 3-channel inputs are reduced
/// to luminance first.
pub fn decode_polarity(img: &PixelImage) -> PolarityImage {
    let single = img.luminance();
    let values = single
        .data()
        .iter()
        .map(|&v| {
            if v > 0.75 {
                1
            } else if v < 0.25 {
                -1
            } else {
                0
            }
        })
        .collect();
    PolarityImage {
        width: img.width(),
        height: img.height(),
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(t: i64, x: u32, y: u32, polarity: i8) -> EventRecord {
        EventRecord { t, x, y, polarity }
    }

    #[test]
    fn parses_on_and_off() {
        let got = parse_event_stream("100,3,4,1\n100,3,4,0\n101,3,4,-1\n".as_bytes(), 8, 8).unwrap();
        assert_eq!(got, vec![ev(100, 3, 4, 1), ev(100, 3, 4, -1), ev(101, 3, 4, -1)]);
    }

    #[test]
    fn header_is_skipped() {
        let got = parse_event_stream("t,x,y,p\n5,0,0,1\n".as_bytes(), 1, 1).unwrap();
        assert_eq!(got, vec![ev(5, 0, 0, 1)]);
    }

    #[test]
    fn arity_error_names_line() {
        let err = parse_event_stream("1,0,0,1\n100,3\n".as_bytes(), 8, 8).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn out_of_sensor_is_error() {
        assert!(matches!(
            parse_event_stream("1,8,0,1\n".as_bytes(), 8, 8),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(parse_event_stream("1,0,0,2\n".as_bytes(), 8, 8).is_err());
        assert!(parse_event_stream("1,a,0,1\n".as_bytes(), 8, 8).is_err());
    }

    #[test]
    fn decreasing_timestamps_are_kept_in_order() {
        let got = parse_event_stream("5,0,0,1\n3,0,0,1\n".as_bytes(), 1, 1).unwrap();
        assert_eq!(got[0].t, 5);
        assert_eq!(got[1].t, 3);
    }

    #[test]
    fn accumulate_examples() {
        let empty = accumulate(&[], 0, 10, 5, 5).unwrap();
        assert!(empty.values().iter().all(|&v| v == 0));

        let one = accumulate(&[ev(1, 3, 4, 1)], 0, 10, 5, 5).unwrap();
        for y in 0..5 {
            for x in 0..5 {
                assert_eq!(one.get(x, y), if (x, y) == (3, 4) { 1 } else { 0 });
            }
        }

        let cancel = accumulate(&[ev(1, 3, 4, 1), ev(2, 3, 4, -1)], 0, 10, 5, 5).unwrap();
        assert_eq!(cancel.get(3, 4), 0);

        // window is half-open
        let edge = accumulate(&[ev(10, 0, 0, 1)], 0, 10, 1, 1).unwrap();
        assert_eq!(edge.get(0, 0), 0);
        assert!(accumulate(&[], 5, 5, 1, 1).is_err());
    }

    #[test]
    fn latest_wins_differs_from_net_sum() {
        let events = [ev(1, 0, 0, 1), ev(2, 0, 0, 1), ev(3, 0, 0, -1)];
        assert_eq!(accumulate(&events, 0, 10, 1, 1).unwrap().get(0, 0), 1);
        let latest = accumulate_with(&events, 0, 10, 1, 1, Aggregation::LatestWins).unwrap();
        assert_eq!(latest.get(0, 0), -1);
    }

    #[test]
    fn rendering() {
        let zero = PolarityImage::zeros(3, 2);
        let img = polarity_to_color(&zero);
        assert!(img.data().iter().all(|&v| v == 0.5));

        let p = PolarityImage::new(2, 1, vec![1, -1]).unwrap();
        let img = polarity_to_color(&p);
        assert_eq!(img.pixel(0, 0), &[1.0, 0.0, 0.0]);
        assert_eq!(img.pixel(1, 0), &[0.0, 0.0, 1.0]);
        let black = polarity_to_color_with(&PolarityImage::zeros(1, 1), EventBackground::Black);
        assert_eq!(black.pixel(0, 0), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn encode_decode_round_trip() {
        let p = PolarityImage::new(3, 1, vec![1, 0, -1]).unwrap();
        assert_eq!(decode_polarity(&encode_polarity(&p)), p);
    }

    fn arb_events() -> impl Strategy<Value = Vec<EventRecord>> {
        proptest::collection::vec(
            (0i64..1000, 0u32..6, 0u32..5, prop_oneof![Just(1i8), Just(-1i8)])
                .prop_map(|(t, x, y, p)| ev(t, x, y, p)),
            0..200,
        )
    }

    proptest! {
        #[test]
        fn negation_swaps_red_and_blue(events in arb_events()) {
            let flipped: Vec<_> = events.iter().map(|e| EventRecord { polarity: -e.polarity, ..*e }).collect();
            let a = polarity_to_color(&accumulate(&events, 0, 1000, 6, 5).unwrap());
            let b = polarity_to_color(&accumulate(&flipped, 0, 1000, 6, 5).unwrap());
            for (pa, pb) in a.data().chunks(3).zip(b.data().chunks(3)) {
                prop_assert_eq!(pa[0], pb[2]);
                prop_assert_eq!(pa[2], pb[0]);
                prop_assert_eq!(pa[1], pb[1]);
            }
        }

        #[test]
        fn window_sums_are_additive(events in arb_events(), t0 in 0i64..300, mid in 300i64..600, t1 in 600i64..1001) {
            let whole = window_sums(&events, t0, t1, 6, 5);
            let left = window_sums(&events, t0, mid, 6, 5);
            let right = window_sums(&events, mid, t1, 6, 5);
            let joined: Vec<i64> = left.iter().zip(&right).map(|(a, b)| a + b).collect();
            prop_assert_eq!(&whole, &joined);
            let img = accumulate(&events, t0, t1, 6, 5).unwrap();
            let signs: Vec<i8> = joined.iter().map(|s| s.signum() as i8).collect();
            prop_assert_eq!(img.values(), signs.as_slice());
        }

        #[test]
        fn csv_round_trip(mut events in arb_events()) {
            events.sort_by_key(|e| e.t);
            let mut buf = Vec::new();
            write_event_stream(&events, &mut buf).unwrap();
            let parsed = parse_event_stream(buf.as_slice(), 6, 5).unwrap();
            prop_assert_eq!(&parsed, &events);
            let mut again = Vec::new();
            write_event_stream(&parsed, &mut again).unwrap();
            prop_assert_eq!(buf, again);
        }
    }
}
