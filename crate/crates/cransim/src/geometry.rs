//! Hexagonal grid geometry with toroidal wrap-around.
//!
//! Cells are pointy-top hexagons of a given circumradius placed on a spiral
//! (center, then concentric rings). The composite footprint is wrapped by
//! the six translations of the enclosing hexagonal cluster so that every
//! point sees a toroidal interference field: distances are always measured
//! to the nearest image.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Axial-coordinate neighbor directions (pointy-top convention).
const AXIAL_DIRS: [(i32, i32); 6] = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)];

/// Number of cells in a full hexagonal cluster with `rings` rings.
pub fn cluster_size(rings: usize) -> usize {
    1 + 3 * rings * (rings + 1)
}

/// Smallest ring count whose full cluster holds at least `count` cells.
pub fn rings_for(count: usize) -> usize {
    let mut n = 0;
    while cluster_size(n) < count {
        n += 1;
    }
    n
}

/// Axial coordinates of the first `count` cells of the hex spiral
/// (center first, then ring 1, ring 2, ...).
pub fn hex_spiral(count: usize) -> Vec<(i32, i32)> {
    let mut cells = Vec::with_capacity(count);
    cells.push((0, 0));
    let mut ring = 1;
    while cells.len() < count {
        // Walk the ring starting from the cell `ring` steps in direction 4.
        let mut q = AXIAL_DIRS[4].0 * ring as i32;
        let mut r = AXIAL_DIRS[4].1 * ring as i32;
        for dir in AXIAL_DIRS {
            for _ in 0..ring {
                if cells.len() == count {
                    return cells;
                }
                cells.push((q, r));
                q += dir.0;
                r += dir.1;
            }
        }
        ring += 1;
    }
    cells
}

/// Cartesian position of an axial coordinate for inter-site distance `isd`.
pub fn axial_to_xy<S: Scalar>(q: i32, r: i32, isd: S) -> [S; 2] {
    let qf = S::of(q as f64);
    let rf = S::of(r as f64);
    let half = S::of(0.5);
    let sq3h = S::of(3f64.sqrt() / 2.0);
    [isd * (qf + rf * half), isd * rf * sq3h]
}

/// Rotate an axial vector by 60 degrees.
fn rotate60(q: i32, r: i32) -> (i32, i32) {
    (-r, q + r)
}

/// Test whether `p` lies inside a pointy-top hexagon centered at `center`
/// with the given circumradius (boundary inclusive).
pub fn point_in_hex<S: Scalar>(p: [S; 2], center: [S; 2], circumradius: S) -> bool {
    let x = (p[0] - center[0]).abs();
    let y = (p[1] - center[1]).abs();
    let sq3 = S::of(3f64.sqrt());
    let half_w = sq3 * circumradius / S::of(2.0);
    x <= half_w && y <= circumradius - x / sq3
}

/// Hexagonal layout with wrap-around translations.
#[derive(Debug, Clone)]
pub struct HexLayout<S> {
    pub rrh_count: usize,
    pub circumradius: S,
    /// Distance between adjacent cell centers (`sqrt(3) * circumradius`).
    pub inter_site: S,
    /// The six non-trivial translations that tile the composite footprint.
    pub translations: Vec<[S; 2]>,
}

impl<S: Scalar> HexLayout<S> {
    pub fn new(rrh_count: usize, circumradius: S) -> Result<Self> {
        if rrh_count == 0 {
            return Err(Error::invalid_config("rrh_count must be at least 1"));
        }
        if !(circumradius > S::zero()) {
            return Err(Error::invalid_config("circumradius must be positive"));
        }
        let inter_site = S::of(3f64.sqrt()) * circumradius;
        let n = rings_for(rrh_count) as i32;
        // The cluster with n rings tiles the plane under the translation
        // (2n+1, -n) and its 60-degree rotations.
        let (mut q, mut r) = (2 * n + 1, -n);
        let mut translations = Vec::with_capacity(6);
        for _ in 0..6 {
            translations.push(axial_to_xy(q, r, inter_site));
            let rot = rotate60(q, r);
            q = rot.0;
            r = rot.1;
        }
        Ok(HexLayout {
            rrh_count,
            circumradius,
            inter_site,
            translations,
        })
    }

    /// Cell-center positions for the layout's spiral.
    pub fn cell_positions(&self) -> Vec<[S; 2]> {
        hex_spiral(self.rrh_count)
            .into_iter()
            .map(|(q, r)| axial_to_xy(q, r, self.inter_site))
            .collect()
    }

    /// Distance from `a` to the nearest image of `b` under the wrap.
    pub fn wrap_distance(&self, a: [S; 2], b: [S; 2]) -> S {
        let mut best = dist(a, b);
        for t in &self.translations {
            let d = dist(a, [b[0] + t[0], b[1] + t[1]]);
            if d < best {
                best = d;
            }
        }
        best
    }

    /// Canonical representative of `p`: the image closest to the origin.
    /// Iterates in case `p` sits several lattice periods out.
    pub fn canonical(&self, p: [S; 2]) -> [S; 2] {
        let mut best = p;
        let mut best_d = norm(p);
        loop {
            let mut improved = false;
            for t in &self.translations {
                let cand = [best[0] - t[0], best[1] - t[1]];
                let d = norm(cand);
                if d < best_d {
                    best = cand;
                    best_d = d;
                    improved = true;
                }
            }
            if !improved {
                return best;
            }
        }
    }
}

pub fn dist<S: Scalar>(a: [S; 2], b: [S; 2]) -> S {
    norm([a[0] - b[0], a[1] - b[1]])
}

pub fn norm<S: Scalar>(p: [S; 2]) -> S {
    (p[0] * p[0] + p[1] * p[1]).sqrt()
}
