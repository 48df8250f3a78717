//! Bit/symbol mapping for BPSK through 64QAM.
//!
//! Labels are read MSB-first. Rectangular constellations put the in-phase
//! bits before the quadrature bits and Gray-code each axis independently.
//! 32QAM is a 6x6 cross with a fixed quasi-Gray table (see [`CROSS32`]).

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Positions within this distance of a decision boundary (in grid units,
/// where neighbouring points are 2 apart) are treated as exact ties.
const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModScheme {
    #[serde(rename = "BPSK")]
    Bpsk,
    #[serde(rename = "QPSK")]
    Qpsk,
    #[serde(rename = "8QAM")]
    Qam8,
    #[serde(rename = "16QAM")]
    Qam16,
    #[serde(rename = "32QAM")]
    Qam32,
    #[serde(rename = "64QAM")]
    Qam64,
}

impl ModScheme {
    pub const ALL: [ModScheme; 6] = [
        ModScheme::Bpsk,
        ModScheme::Qpsk,
        ModScheme::Qam8,
        ModScheme::Qam16,
        ModScheme::Qam32,
        ModScheme::Qam64,
    ];

    pub fn bits_per_symbol(self) -> usize {
        self.index() + 1
    }

    pub fn order(self) -> usize {
        1 << self.bits_per_symbol()
    }

    /// Position in [`ModScheme::ALL`]; also used to key RNG streams.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ModScheme::Bpsk => "BPSK",
            ModScheme::Qpsk => "QPSK",
            ModScheme::Qam8 => "8QAM",
            ModScheme::Qam16 => "16QAM",
            ModScheme::Qam32 => "32QAM",
            ModScheme::Qam64 => "64QAM",
        }
    }

    pub fn constellation(self) -> &'static Constellation {
        static TABLES: OnceLock<Vec<Constellation>> = OnceLock::new();
        &TABLES.get_or_init(|| ModScheme::ALL.iter().map(|&s| Constellation::build(s)).collect())
            [self.index()]
    }
}

impl fmt::Display for ModScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase().replace(['-', '_'], "");
        let scheme = match key.as_str() {
            "BPSK" => ModScheme::Bpsk,
            "QPSK" | "4QAM" | "QAM4" => ModScheme::Qpsk,
            "8QAM" | "QAM8" => ModScheme::Qam8,
            "16QAM" | "QAM16" => ModScheme::Qam16,
            "32QAM" | "QAM32" => ModScheme::Qam32,
            "64QAM" | "QAM64" => ModScheme::Qam64,
            _ => return Err(Error::UnknownScheme(s.to_string())),
        };
        Ok(scheme)
    }
}

/// 32QAM cross labels. Rows run from Q=+5 down to Q=−5, columns from
/// I=−5 to I=+5 in steps of 2; `None` marks the removed corners.
/// Adjacent points differ in one bit except on four of the 52 edges.
#[rustfmt::skip]
pub const CROSS32: [[Option<u8>; 6]; 6] = [
    [None,          Some(0b10001), Some(0b00001), Some(0b01001), Some(0b11001), None         ],
    [Some(0b10010), Some(0b10000), Some(0b00000), Some(0b01000), Some(0b11000), Some(0b11010)],
    [Some(0b10110), Some(0b10100), Some(0b00100), Some(0b01100), Some(0b11100), Some(0b11110)],
    [Some(0b10111), Some(0b10101), Some(0b00101), Some(0b01101), Some(0b11101), Some(0b11111)],
    [Some(0b10011), Some(0b00011), Some(0b00111), Some(0b01111), Some(0b01011), Some(0b11011)],
    [None,          Some(0b00010), Some(0b00110), Some(0b01110), Some(0b01010), None         ],
];

#[derive(Debug, Clone)]
enum Grid {
    Rect { bits_i: u32, bits_q: u32 },
    Cross,
}

/// Unit-energy point set indexed by label.
#[derive(Debug, Clone)]
pub struct Constellation {
    scheme: ModScheme,
    points: Vec<Complex64>,
    /// Distance from grid units (odd integers) to unit energy.
    scale: f64,
    grid: Grid,
}

fn gray(k: u32) -> u32 {
    k ^ (k >> 1)
}

fn gray_inverse(mut g: u32) -> u32 {
    let mut k = 0;
    while g != 0 {
        k ^= g;
        g >>= 1;
    }
    k
}

fn level(k: u32, levels: u32) -> f64 {
    2.0 * k as f64 - (levels as f64 - 1.0)
}

/// Gray label of the nearest level on one axis; exact ties go to the lower label.
fn slice_axis(v: f64, bits: u32) -> u32 {
    if bits == 0 {
        return 0;
    }
    let levels = 1u32 << bits;
    let u = (v + (levels as f64 - 1.0)) / 2.0;
    let top = (levels - 1) as f64;
    if u.is_nan() || u <= 0.0 {
        return gray(0);
    }
    if u >= top {
        return gray(levels - 1);
    }
    let lo = u.floor();
    let frac = u - lo;
    let lo = lo as u32;
    let k = if (frac - 0.5).abs() <= TIE_EPS / 2.0 {
        if gray(lo) < gray(lo + 1) {
            lo
        } else {
            lo + 1
        }
    } else if frac < 0.5 {
        lo
    } else {
        lo + 1
    };
    gray(k)
}

impl Constellation {
    fn build(scheme: ModScheme) -> Self {
        let (grid, raw): (Grid, Vec<(f64, f64)>) = match scheme {
            ModScheme::Qam32 => {
                let mut raw = vec![(0.0, 0.0); 32];
                for (row, labels) in CROSS32.iter().enumerate() {
                    for (col, label) in labels.iter().enumerate() {
                        if let Some(label) = label {
                            raw[*label as usize] = (level(col as u32, 6), level(5 - row as u32, 6));
                        }
                    }
                }
                (Grid::Cross, raw)
            }
            _ => {
                let (bits_i, bits_q) = match scheme {
                    ModScheme::Bpsk => (1, 0),
                    ModScheme::Qpsk => (1, 1),
                    ModScheme::Qam8 => (2, 1),
                    ModScheme::Qam16 => (2, 2),
                    ModScheme::Qam64 => (3, 3),
                    ModScheme::Qam32 => unreachable!(),
                };
                let raw = (0..1u32 << (bits_i + bits_q))
                    .map(|label| {
                        let li = label >> bits_q;
                        let lq = label & ((1 << bits_q) - 1);
                        let x = level(gray_inverse(li), 1 << bits_i);
                        let y = if bits_q == 0 { 0.0 } else { level(gray_inverse(lq), 1 << bits_q) };
                        (x, y)
                    })
                    .collect();
                (Grid::Rect { bits_i, bits_q }, raw)
            }
        };
        let energy = raw.iter().map(|(x, y)| x * x + y * y).sum::<f64>() / raw.len() as f64;
        let scale = energy.sqrt().recip();
        let points = raw.iter().map(|&(x, y)| Complex64::new(x * scale, y * scale)).collect();
        Constellation { scheme, points, scale, grid }
    }

    pub fn scheme(&self) -> ModScheme {
        self.scheme
    }

    /// Points indexed by label.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, label: u32) -> Complex64 {
        self.points[label as usize]
    }

    /// Label of the nearest point, ties going to the lowest label.
    pub fn decide(&self, y: Complex64) -> u32 {
        match self.grid {
            Grid::Rect { bits_i, bits_q } => {
                let li = slice_axis(y.re / self.scale, bits_i);
                let lq = slice_axis(y.im / self.scale, bits_q);
                (li << bits_q) | lq
            }
            Grid::Cross => self.decide_exhaustive(y),
        }
    }

    /// Nearest point by scanning every label in ascending order.
    pub fn decide_exhaustive(&self, y: Complex64) -> u32 {
        let v = y / self.scale;
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (label, p) in self.points.iter().enumerate() {
            let d = (v - p / self.scale).norm_sqr();
            if d < best_d - TIE_EPS {
                best = label as u32;
                best_d = d;
            }
        }
        best
    }

    /// One row per point: label bits, in-phase, quadrature.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let bps = self.scheme.bits_per_symbol();
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["label", "i", "q"])?;
        for (label, p) in self.points.iter().enumerate() {
            w.write_record([format!("{label:0bps$b}"), format!("{:.12}", p.re), format!("{:.12}", p.im)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Packs `bits` (MSB first) into an integer label.
pub fn bits_to_label(bits: &[bool]) -> u32 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as u32)
}

/// Appends the `width` low bits of `label`, MSB first.
pub fn push_label_bits(label: u32, width: usize, out: &mut Vec<bool>) {
    out.extend((0..width).rev().map(|i| (label >> i) & 1 == 1));
}

/// Symbols with the scheme that produced each one; `None` marks a
/// disabled carrier that carries a zero symbol.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SymbolVector {
    values: Vec<Complex64>,
    schemes: Vec<Option<ModScheme>>,
}

impl SymbolVector {
    pub fn from_parts(values: Vec<Complex64>, schemes: Vec<Option<ModScheme>>) -> Result<Self> {
        if values.len() != schemes.len() {
            return Err(Error::LengthMismatch { expected: values.len(), actual: schemes.len() });
        }
        if let Some(bad) = values.iter().find(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Parameter { name: "symbol", value: bad.norm(), reason: "symbols must be finite" });
        }
        Ok(SymbolVector { values, schemes })
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn schemes(&self) -> &[Option<ModScheme>] {
        &self.schemes
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }
}

pub fn modulate(bits: &[bool], scheme: ModScheme) -> Result<SymbolVector> {
    let bps = scheme.bits_per_symbol();
    if bits.len() % bps != 0 {
        return Err(Error::BitLength { len: bits.len(), bits_per_symbol: bps });
    }
    let c = scheme.constellation();
    let values: Vec<_> = bits.chunks_exact(bps).map(|g| c.point(bits_to_label(g))).collect();
    let schemes = vec![Some(scheme); values.len()];
    Ok(SymbolVector { values, schemes })
}

pub fn demodulate(symbols: &[Complex64], scheme: ModScheme) -> Vec<bool> {
    let bps = scheme.bits_per_symbol();
    let c = scheme.constellation();
    let mut bits = Vec::with_capacity(symbols.len() * bps);
    for &y in symbols {
        push_label_bits(c.decide(y), bps, &mut bits);
    }
    bits
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bpsk_is_antipodal() {
        let s = modulate(&[false, true], ModScheme::Bpsk).unwrap();
        assert_eq!(s.values(), &[Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)]);
        assert_eq!(demodulate(&[Complex64::new(-0.3, 0.0)], ModScheme::Bpsk), vec![false]);
    }

    #[test]
    fn qpsk_zero_label_is_lower_left() {
        let s = modulate(&[false, false], ModScheme::Qpsk).unwrap();
        let want = Complex64::new(-1.0, -1.0) / 2f64.sqrt();
        assert!((s.values()[0] - want).norm() < 1e-15);
    }

    #[test]
    fn rejects_ragged_bits() {
        assert!(matches!(
            modulate(&[true; 5], ModScheme::Qam16),
            Err(Error::BitLength { len: 5, bits_per_symbol: 4 })
        ));
    }

    #[test]
    fn gray_round_trip() {
        for k in 0..64 {
            assert_eq!(gray_inverse(gray(k)), k);
        }
    }

    #[test]
    fn names_parse_back() {
        for s in ModScheme::ALL {
            assert_eq!(s.name().parse::<ModScheme>().unwrap(), s);
        }
        assert!("128QAM".parse::<ModScheme>().is_err());
    }

    #[test]
    fn csv_dump_has_one_row_per_point() {
        let mut buf = Vec::new();
        ModScheme::Qam8.constellation().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert!(text.starts_with("label,i,q\n000,"));
    }
}
