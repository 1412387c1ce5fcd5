//! Phantom layout: thin bright lines, isolated points and a block on a dark
//! background, plus the probe regions the quality metrics read.
//!
//! The plain-text form has one feature per line; `#` starts a comment and
//! all coordinates are zero-based `row col`:
//!
//! ```text
//! size <height> <width>
//! hline <row> <col> <len>          # horizontal 1-pixel line
//! vline <row> <col> <len>          # vertical 1-pixel line
//! dline <row> <col> <len>          # diagonal going down-right
//! point <row> <col>
//! block <row> <col> <height> <width>
//! background <row> <col> <height> <width>
//! edge_band <width>
//! ```
//!
//! The line-contrast probe is the first `hline` with the rows directly above
//! and below it. The edge probe is the left edge of the first `block`: two
//! bands of `edge_band` columns on either side, excluding the block's first
//! column.

use std::collections::HashSet;
use std::fmt::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

impl Rect {
    pub fn new(row: usize, col: usize, height: usize, width: usize) -> Self {
        Self {
            row,
            col,
            height,
            width,
        }
    }

    pub fn pixels(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.height * self.width);
        for r in self.row..self.row + self.height {
            for c in self.col..self.col + self.width {
                out.push((r, c));
            }
        }
        out
    }

    pub fn area(&self) -> usize {
        self.height * self.width
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Line {
    Horizontal { row: usize, col: usize, len: usize },
    Vertical { row: usize, col: usize, len: usize },
    Diagonal { row: usize, col: usize, len: usize },
}

impl Line {
    pub fn pixels(&self) -> Vec<(usize, usize)> {
        match *self {
            Line::Horizontal { row, col, len } => (0..len).map(|k| (row, col + k)).collect(),
            Line::Vertical { row, col, len } => (0..len).map(|k| (row + k, col)).collect(),
            Line::Diagonal { row, col, len } => (0..len).map(|k| (row + k, col + k)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhantomGeometry {
    pub height: usize,
    pub width: usize,
    pub lines: Vec<Line>,
    pub points: Vec<(usize, usize)>,
    pub blocks: Vec<Rect>,
    pub background: Rect,
    pub edge_band: usize,
}

/// Pixel sets read by the line-contrast measure.
#[derive(Debug, Clone)]
pub struct ContrastProbe {
    pub line: Vec<(usize, usize)>,
    pub above: Vec<(usize, usize)>,
    pub below: Vec<(usize, usize)>,
}

/// Pixel sets read by the edge measures.
#[derive(Debug, Clone)]
pub struct EdgeProbe {
    pub outside: Vec<(usize, usize)>,
    pub inside: Vec<(usize, usize)>,
}

impl PhantomGeometry {
    /// Default layout, laid out on a 128-pixel grid and scaled to `size`
    /// (a multiple of 32, at least 64).
    pub fn standard(size: usize) -> Result<Self> {
        if size < 64 || !size.is_multiple_of(32) {
            return Err(Error::InvalidArgument(format!(
                "standard phantom size must be a multiple of 32 and >= 64, got {size}"
            )));
        }
        let s = |v: usize| v * size / 128;
        let mut points = Vec::new();
        for r in [28, 40, 52, 64] {
            for c in [76, 88, 100, 112] {
                points.push((s(r), s(c)));
            }
        }
        let g = PhantomGeometry {
            height: size,
            width: size,
            lines: vec![
                Line::Horizontal { row: s(16), col: s(8), len: s(112) },
                Line::Vertical { row: s(24), col: s(64), len: s(48) },
                Line::Diagonal { row: s(24), col: s(8), len: s(48) },
            ],
            points,
            blocks: vec![Rect::new(s(80), s(80), s(32), s(32))],
            background: Rect::new(s(80), s(8), s(40), s(40)),
            edge_band: 3,
        };
        g.validate()?;
        Ok(g)
    }

    /// Every pixel drawn at the bright level.
    pub fn feature_pixels(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self.lines.iter().flat_map(|l| l.pixels()).collect();
        out.extend(self.points.iter().copied());
        out.extend(self.blocks.iter().flat_map(|b| b.pixels()));
        out
    }

    pub fn contrast_probe(&self) -> Result<ContrastProbe> {
        let (row, col, len) = self
            .lines
            .iter()
            .find_map(|l| match *l {
                Line::Horizontal { row, col, len } => Some((row, col, len)),
                _ => None,
            })
            .ok_or_else(|| Error::InvalidArgument("geometry has no horizontal line".into()))?;
        if row == 0 || row + 1 >= self.height {
            return Err(Error::InvalidArgument("contrast line touches the image border".into()));
        }
        let span = |r: usize| (col..col + len).map(|c| (r, c)).collect::<Vec<_>>();
        Ok(ContrastProbe {
            line: span(row),
            above: span(row - 1),
            below: span(row + 1),
        })
    }

    pub fn edge_probe(&self) -> Result<EdgeProbe> {
        let block = self
            .blocks
            .first()
            .ok_or_else(|| Error::InvalidArgument("geometry has no block".into()))?;
        let band = self.edge_band;
        if band == 0 || block.col < band || block.width < band + 1 {
            return Err(Error::InvalidArgument("edge bands do not fit around the block".into()));
        }
        let rect = |c0: usize| Rect::new(block.row, c0, block.height, band).pixels();
        Ok(EdgeProbe {
            outside: rect(block.col - band),
            inside: rect(block.col + 1),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.height == 0 || self.width == 0 {
            return bad("phantom size must be positive".into());
        }
        let inside = |&(r, c): &(usize, usize)| r < self.height && c < self.width;
        let mut features = HashSet::new();
        for p in self.feature_pixels() {
            if !inside(&p) {
                return bad(format!("feature pixel {p:?} outside the phantom"));
            }
            if !features.insert(p) {
                return bad(format!("features overlap at {p:?}"));
            }
        }
        let background = self.background.pixels();
        if background.is_empty() {
            return bad("background region is empty".into());
        }
        for p in &background {
            if !inside(p) {
                return bad(format!("background pixel {p:?} outside the phantom"));
            }
            if features.contains(p) {
                return bad(format!("background region overlaps a feature at {p:?}"));
            }
        }
        if !self.lines.iter().any(|l| matches!(l, Line::Horizontal { .. })) {
            return bad("geometry needs a horizontal line for the contrast probe".into());
        }
        let edge = self.edge_probe()?;
        for p in edge.outside.iter().chain(&edge.inside) {
            if !inside(p) {
                return bad(format!("edge band pixel {p:?} outside the phantom"));
            }
        }
        if edge.outside.len() < 2 {
            return bad("edge bands need at least 2 pixels".into());
        }
        if edge.outside.iter().any(|p| features.contains(p)) {
            return bad("outer edge band crosses a feature".into());
        }
        let contrast = self.contrast_probe()?;
        if contrast.line.iter().chain(&contrast.above).chain(&contrast.below).any(|p| !inside(p)) {
            return bad("contrast probe leaves the phantom".into());
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut size = None;
        let mut lines = Vec::new();
        let mut points = Vec::new();
        let mut blocks = Vec::new();
        let mut background = None;
        let mut edge_band = 3;
        for (no, raw) in text.lines().enumerate() {
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut tokens = content.split_whitespace();
            let key = tokens.next().unwrap();
            let nums: Vec<usize> = tokens
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Format(format!("line {}: bad number in {raw:?}", no + 1)))?;
            let want = |n: usize| {
                if nums.len() == n {
                    Ok(())
                } else {
                    Err(Error::Format(format!(
                        "line {}: {key} takes {n} values, got {}",
                        no + 1,
                        nums.len()
                    )))
                }
            };
            match key {
                "size" => {
                    want(2)?;
                    size = Some((nums[0], nums[1]));
                }
                "hline" | "vline" | "dline" => {
                    want(3)?;
                    let (row, col, len) = (nums[0], nums[1], nums[2]);
                    lines.push(match key {
                        "hline" => Line::Horizontal { row, col, len },
                        "vline" => Line::Vertical { row, col, len },
                        _ => Line::Diagonal { row, col, len },
                    });
                }
                "point" => {
                    want(2)?;
                    points.push((nums[0], nums[1]));
                }
                "block" | "background" => {
                    want(4)?;
                    let rect = Rect::new(nums[0], nums[1], nums[2], nums[3]);
                    if key == "block" {
                        blocks.push(rect);
                    } else {
                        background = Some(rect);
                    }
                }
                "edge_band" => {
                    want(1)?;
                    edge_band = nums[0];
                }
                other => {
                    return Err(Error::Format(format!("line {}: unknown key {other:?}", no + 1)))
                }
            }
        }
        let (height, width) = size.ok_or_else(|| Error::Format("missing size line".into()))?;
        let background = background.ok_or_else(|| Error::Format("missing background line".into()))?;
        let g = PhantomGeometry {
            height,
            width,
            lines,
            points,
            blocks,
            background,
            edge_band,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "size {} {}", self.height, self.width).unwrap();
        for l in &self.lines {
            let (key, row, col, len) = match *l {
                Line::Horizontal { row, col, len } => ("hline", row, col, len),
                Line::Vertical { row, col, len } => ("vline", row, col, len),
                Line::Diagonal { row, col, len } => ("dline", row, col, len),
            };
            writeln!(out, "{key} {row} {col} {len}").unwrap();
        }
        for (r, c) in &self.points {
            writeln!(out, "point {r} {c}").unwrap();
        }
        for b in &self.blocks {
            writeln!(out, "block {} {} {} {}", b.row, b.col, b.height, b.width).unwrap();
        }
        let bg = &self.background;
        writeln!(out, "background {} {} {} {}", bg.row, bg.col, bg.height, bg.width).unwrap();
        writeln!(out, "edge_band {}", self.edge_band).unwrap();
        out
    }
}
