//! Pixel rendering of encoded tensors.

use super::observe::EncodedTensor;
use super::tile::*;

const GRID_LINE: [u8; 3] = [40, 40, 40];
const BLACK: [u8; 3] = [0, 0, 0];

/// 8-bit RGB image, row-major, three bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize) -> Self {
        RgbImage {
            width,
            height,
            data: vec![0; width * height * 3],
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    fn put(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Encodes the image as an 8-bit RGB PNG.
    pub fn to_png(&self) -> Vec<u8> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width as u32, self.height as u32);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut writer = enc.write_header().expect("in-memory PNG header");
            writer.write_image_data(&self.data).expect("in-memory PNG body");
        }
        out
    }
}

fn color_of(id: u8) -> [u8; 3] {
    Color::from_id(id).unwrap_or(Color::Grey).rgb()
}

fn halve(c: [u8; 3]) -> [u8; 3] {
    [c[0] / 2, c[1] / 2, c[2] / 2]
}

/// Colour of one pixel inside a tile; (u, v) is the pixel centre in [0, 1].
fn shade(cell: Cell, u: f64, v: f64, line: bool) -> [u8; 3] {
    let bg = if line { GRID_LINE } else { BLACK };
    let color = color_of(cell.color);
    let frame = |w: f64| u < w || v < w || u > 1.0 - w || v > 1.0 - w;
    match cell.object {
        OBJ_UNSEEN => BLACK,
        OBJ_EMPTY => bg,
        OBJ_WALL => Color::Grey.rgb(),
        OBJ_FLOOR => {
            if line {
                GRID_LINE
            } else {
                halve(color)
            }
        }
        OBJ_GOAL | OBJ_LAVA => color,
        OBJ_DOOR => match cell.state {
            0 => {
                if frame(0.12) {
                    color
                } else {
                    bg
                }
            }
            1 => color,
            _ => {
                if (u - 0.5).abs() < 0.1 && (v - 0.5).abs() < 0.2 {
                    BLACK
                } else {
                    color
                }
            }
        },
        OBJ_KEY => {
            let shaft = (u - 0.5).abs() < 0.09 && v > 0.3 && v < 0.85;
            let head = (u - 0.5).powi(2) + (v - 0.25).powi(2) < 0.03;
            let tooth = v > 0.65 && v < 0.78 && u > 0.5 && u < 0.72;
            if shaft || head || tooth {
                color
            } else {
                bg
            }
        }
        OBJ_BALL => {
            if (u - 0.5).powi(2) + (v - 0.5).powi(2) < 0.1 {
                color
            } else {
                bg
            }
        }
        OBJ_BOX => {
            let inner = u > 0.1 && v > 0.1 && u < 0.9 && v < 0.9;
            let rim = inner && !(u > 0.2 && v > 0.2 && u < 0.8 && v < 0.8);
            let lid = inner && (v - 0.5).abs() < 0.05;
            if rim || lid {
                color
            } else {
                bg
            }
        }
        OBJ_AGENT => {
            // Triangle pointing east in the local frame, then rotated.
            let (a, b) = match cell.state % 4 {
                0 => (u, v),
                1 => (v, 1.0 - u),
                2 => (1.0 - u, 1.0 - v),
                _ => (1.0 - v, u),
            };
            let inside = a > 0.12 && a < 0.88 && (b - 0.5).abs() < 0.38 * (0.88 - a) / 0.76;
            if inside {
                Color::Red.rgb()
            } else {
                bg
            }
        }
        _ => BLACK,
    }
}

/// Paints every cell as a `tile_size x tile_size` block.
pub fn render_rgb(tensor: &EncodedTensor, tile_size: usize) -> RgbImage {
    let tile_size = tile_size.max(1);
    let mut img = RgbImage::new(tensor.width * tile_size, tensor.height * tile_size);
    let ts = tile_size as f64;
    for cy in 0..tensor.height {
        for cx in 0..tensor.width {
            let cell = tensor.get(cx, cy);
            for py in 0..tile_size {
                for px in 0..tile_size {
                    let u = (px as f64 + 0.5) / ts;
                    let v = (py as f64 + 0.5) / ts;
                    let line = px == 0 || py == 0;
                    img.put(cx * tile_size + px, cy * tile_size + py, shade(cell, u, v, line));
                }
            }
        }
    }
    img
}
