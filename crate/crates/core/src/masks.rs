//! Nagao-Matsuyama sub-regions of the 5×5 and 7×7 filtering windows.
//!
//! Region 1 is the central block (3×3 or 5×5). The outer ring of the window
//! is split into eight disjoint oriented regions, numbered clockwise from
//! north. Only the N and NE regions are written out by hand; the other six
//! are 90° rotations of them. The nine regions tile the window exactly.
//!
//! ```text
//!   window 5           window 7
//!   9 2 2 3 3          9 9 2 2 2 3 3
//!   9 1 1 1 4          9 1 1 1 1 1 3
//!   8 1 1 1 4          8 1 1 1 1 1 4
//!   8 1 1 1 5          8 1 1 1 1 1 4
//!   7 7 6 6 5          8 1 1 1 1 1 4
//!                      7 1 1 1 1 1 5
//!                      7 7 6 6 6 5 5
//! ```

use std::collections::HashSet;
use std::fmt::Write;
use std::sync::OnceLock;

use crate::error::{invalid, Result};

pub type Offset = (i32, i32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Window {
    W5,
    W7,
}

impl Window {
    pub fn from_side(side: usize) -> Result<Self> {
        match side {
            5 => Ok(Window::W5),
            7 => Ok(Window::W7),
            other => invalid(format!("window must be 5 or 7, got {other}")),
        }
    }

    pub fn side(&self) -> usize {
        match self {
            Window::W5 => 5,
            Window::W7 => 7,
        }
    }

    pub fn radius(&self) -> usize {
        self.side() / 2
    }
}

/// One sub-region of a window: offsets relative to the window center.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask {
    region_id: u8,
    offsets: Vec<Offset>,
}

impl RegionMask {
    pub fn new(region_id: u8, offsets: Vec<Offset>) -> Self {
        Self { region_id, offsets }
    }

    pub fn region_id(&self) -> u8 {
        self.region_id
    }

    pub fn offsets(&self) -> &[Offset] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// The same region turned 90° clockwise about the window center.
    pub fn rotated_cw(&self, region_id: u8) -> RegionMask {
        let offsets = self.offsets.iter().map(|&(r, c)| (c, -r)).collect();
        RegionMask::new(region_id, offsets)
    }

    pub fn offset_set(&self) -> HashSet<Offset> {
        self.offsets.iter().copied().collect()
    }
}

// Hand-authored seeds for the rotation construction.
const W5_NORTH: [Offset; 2] = [(-2, -1), (-2, 0)];
const W5_NORTH_EAST: [Offset; 2] = [(-2, 1), (-2, 2)];
const W7_NORTH: [Offset; 3] = [(-3, -1), (-3, 0), (-3, 1)];
const W7_NORTH_EAST: [Offset; 3] = [(-3, 2), (-3, 3), (-2, 3)];

fn build(window: Window) -> [RegionMask; 9] {
    let (north, north_east): (&[Offset], &[Offset]) = match window {
        Window::W5 => (&W5_NORTH, &W5_NORTH_EAST),
        Window::W7 => (&W7_NORTH, &W7_NORTH_EAST),
    };
    let inner = window.radius() as i32 - 1;
    let mut central = Vec::new();
    for r in -inner..=inner {
        for c in -inner..=inner {
            central.push((r, c));
        }
    }
    let n = RegionMask::new(2, north.to_vec());
    let ne = RegionMask::new(3, north_east.to_vec());
    let e = n.rotated_cw(4);
    let se = ne.rotated_cw(5);
    let s = e.rotated_cw(6);
    let sw = se.rotated_cw(7);
    let w = s.rotated_cw(8);
    let nw = sw.rotated_cw(9);
    let masks = [RegionMask::new(1, central), n, ne, e, se, s, sw, w, nw];

    // The nine regions must be disjoint and tile the window.
    let radius = window.radius() as i32;
    let mut seen = HashSet::new();
    for m in &masks {
        for &(r, c) in m.offsets() {
            assert!(r.abs() <= radius && c.abs() <= radius, "offset outside window");
            assert!(seen.insert((r, c)), "regions overlap at ({r}, {c})");
        }
    }
    assert_eq!(seen.len(), window.side() * window.side());
    masks
}

/// The nine sub-region masks of `window`, region 1 first.
pub fn nm_masks(window: Window) -> &'static [RegionMask; 9] {
    static W5: OnceLock<[RegionMask; 9]> = OnceLock::new();
    static W7: OnceLock<[RegionMask; 9]> = OnceLock::new();
    match window {
        Window::W5 => W5.get_or_init(|| build(Window::W5)),
        Window::W7 => W7.get_or_init(|| build(Window::W7)),
    }
}

/// Region id of every window cell, one row per line.
pub fn render_mask_table(window: Window) -> String {
    let side = window.side();
    let radius = window.radius() as i32;
    let mut grid = vec![0u8; side * side];
    for m in nm_masks(window) {
        for &(r, c) in m.offsets() {
            grid[((r + radius) as usize) * side + (c + radius) as usize] = m.region_id();
        }
    }
    let mut out = String::new();
    for row in grid.chunks(side) {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", cells.join(" ")).unwrap();
    }
    out
}
