use crate::pixbuf::Frame;

/// Binary foreground mask, one flag per pixel (true = foreground).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForegroundMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl ForegroundMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Option<Self> {
        (bits.len() == width * height).then_some(Self {
            width,
            height,
            bits,
        })
    }

    /// Any nonzero sample of a single-channel frame counts as foreground.
    /// Color frames are thresholded on their first channel.
    pub fn from_frame(frame: &Frame) -> Self {
        let bits = frame
            .samples()
            .chunks_exact(frame.channels())
            .map(|px| px[0] != 0)
            .collect();
        Self {
            width: frame.width(),
            height: frame.height(),
            bits,
        }
    }

    /// P5-ready frame with foreground = 255, background = 0.
    pub fn to_frame(&self) -> Frame {
        let samples = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        Frame::new(self.width.max(1), self.height.max(1), 1, samples).expect("mask geometry")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Bounds-checked lookup on signed coordinates; outside the raster is
    /// background.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.bits[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Translated copy on a canvas of the same size; pixels shifted off the
    /// raster are dropped.
    pub fn translated(&self, dx: i64, dy: i64) -> Self {
        let mut out = Self::new(self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx >= 0 && ny >= 0 && (nx as usize) < self.width && (ny as usize) < self.height
                    {
                        out.set(nx as usize, ny as usize, true);
                    }
                }
            }
        }
        out
    }

    /// Pixelwise union with another mask of the same size.
    pub fn union_with(&mut self, other: &Self) {
        assert_eq!((self.width, self.height), (other.width, other.height));
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }
}
