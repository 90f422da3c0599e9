//! Honeycomb torus carrying one Majorana mode per site.
//!
//! Plaquette centres form a triangular lattice addressed by integer
//! coordinates `(a, b)` along the basis vectors `e1 = (1, 0)` and
//! `e2 = (1/2, sqrt(3)/2)`. The colour of the plaquette at `(a, b)` is
//! `(a - b) mod 3`. A unit cell holds the three plaquettes at offsets
//! `(c, 0)` for `c = 0, 1, 2` and is repeated along the colour-preserving
//! vectors `T1 = (1, 1)` and `T2 = (-1, 2)`. Honeycomb sites are the
//! triangles of the plaquette lattice and honeycomb edges are its bonds.
//!
//! Index layout (all incidence maps are closed-form in the anchor plaquette):
//! - plaquette `p = 3 * cell + colour`, `cell = y * l1 + x`
//! - site `2 * p + k`, `k = 0` for the up-triangle `{v, v+e1, v+e2}` anchored at
//!   plaquette `p` (position `v`), `k = 1` for the down-triangle
//!   `{v+e1, v+e2, v+e1+e2}`
//! - edge `3 * p + d` joining `v` to `v + (1,0)`, `v + (0,1)` or `v + (-1,1)`

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::gf2::{BitVec, Basis};

/// Plaquette colour class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Color {
    A,
    B,
    C,
}

impl Color {
    pub const ALL: [Color; 3] = [Color::A, Color::B, Color::C];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Color {
        Self::ALL[i % 3]
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Color::A => "A",
            Color::B => "B",
            Color::C => "C",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Color {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(Color::A),
            "B" | "b" => Ok(Color::B),
            "C" | "c" => Ok(Color::C),
            other => Err(CoreError::UnknownColor(other.to_string())),
        }
    }
}

/// A honeycomb edge: the two sites it joins, the two plaquettes it borders
/// and the two same-colour plaquettes flipped by its bilinear.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub sites: [usize; 2],
    pub borders: [usize; 2],
    pub flips: [usize; 2],
}

#[derive(Clone, Debug)]
pub struct CodeLattice {
    l1: usize,
    l2: usize,
    plaquette_sites: Vec<[usize; 6]>,
    site_plaquettes: Vec<[usize; 3]>,
    site_edges: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    plaquette_star: Vec<[usize; 6]>,
    stabilizers: OnceLock<Basis>,
}

const UP: usize = 0;
const DOWN: usize = 1;

impl CodeLattice {
    /// Builds the `l1 x l2` torus. Both dimensions must be at least 2.
    pub fn new(l1: usize, l2: usize) -> Result<Self, CoreError> {
        if l1 < 2 || l2 < 2 {
            return Err(CoreError::LatticeTooSmall { l1, l2 });
        }
        let num_plaquettes = 3 * l1 * l2;
        let mut lattice = CodeLattice {
            l1,
            l2,
            plaquette_sites: Vec::with_capacity(num_plaquettes),
            site_plaquettes: vec![[0; 3]; 2 * num_plaquettes],
            site_edges: vec![[usize::MAX; 3]; 2 * num_plaquettes],
            edges: Vec::with_capacity(3 * num_plaquettes),
            plaquette_star: Vec::new(),
            stabilizers: OnceLock::new(),
        };

        for p in 0..num_plaquettes {
            let (a, b) = lattice.plaquette_coords(p);
            // cyclic order around the hexagon
            let hex = [
                lattice.site_at(UP, a, b),
                lattice.site_at(DOWN, a - 1, b),
                lattice.site_at(UP, a - 1, b),
                lattice.site_at(DOWN, a - 1, b - 1),
                lattice.site_at(UP, a, b - 1),
                lattice.site_at(DOWN, a, b - 1),
            ];
            lattice.plaquette_sites.push(hex);
        }

        for s in 0..2 * num_plaquettes {
            let (a, b) = lattice.plaquette_coords(s / 2);
            let corners = if s % 2 == UP {
                [(a, b), (a + 1, b), (a, b + 1)]
            } else {
                [(a + 1, b), (a, b + 1), (a + 1, b + 1)]
            };
            let mut ps = corners.map(|(a, b)| lattice.plaquette_at(a, b));
            ps.sort_by_key(|&p| p % 3);
            lattice.site_plaquettes[s] = ps;
        }

        for p in 0..num_plaquettes {
            let (a, b) = lattice.plaquette_coords(p);
            let specs = [
                // (other end, site pair, apex pair)
                ((a + 1, b), [lattice.site_at(UP, a, b), lattice.site_at(DOWN, a, b - 1)], [(a, b + 1), (a + 1, b - 1)]),
                ((a, b + 1), [lattice.site_at(UP, a, b), lattice.site_at(DOWN, a - 1, b)], [(a + 1, b), (a - 1, b + 1)]),
                ((a - 1, b + 1), [lattice.site_at(UP, a - 1, b), lattice.site_at(DOWN, a - 1, b)], [(a - 1, b), (a, b + 1)]),
            ];
            for (other, sites, apex) in specs {
                let e = lattice.edges.len();
                lattice.edges.push(Edge {
                    sites,
                    borders: [p, lattice.plaquette_at(other.0, other.1)],
                    flips: apex.map(|(a, b)| lattice.plaquette_at(a, b)),
                });
                for s in sites {
                    let slot = lattice.site_edges[s].iter().position(|&x| x == usize::MAX);
                    match slot {
                        Some(k) => lattice.site_edges[s][k] = e,
                        None => return Err(CoreError::DegenerateLattice { l1, l2 }),
                    }
                }
            }
        }

        let mut star: Vec<Vec<usize>> = vec![Vec::with_capacity(6); num_plaquettes];
        for (e, edge) in lattice.edges.iter().enumerate() {
            for &p in &edge.flips {
                star[p].push(e);
            }
        }
        lattice.plaquette_star = star
            .into_iter()
            .map(|v| <[usize; 6]>::try_from(v).map_err(|_| CoreError::DegenerateLattice { l1, l2 }))
            .collect::<Result<_, _>>()?;

        lattice.check_geometry()?;
        Ok(lattice)
    }

    fn check_geometry(&self) -> Result<(), CoreError> {
        let bad = || CoreError::DegenerateLattice { l1: self.l1, l2: self.l2 };
        for hex in &self.plaquette_sites {
            let mut s = hex.to_vec();
            s.sort_unstable();
            s.dedup();
            if s.len() != 6 {
                return Err(bad());
            }
        }
        for edge in &self.edges {
            if edge.flips[0] == edge.flips[1] || edge.borders[0] == edge.borders[1] {
                return Err(bad());
            }
        }
        Ok(())
    }

    /// Canonical coordinates of a plaquette centre.
    pub fn plaquette_coords(&self, p: usize) -> (i64, i64) {
        let c = (p % 3) as i64;
        let cell = p / 3;
        let x = (cell % self.l1) as i64;
        let y = (cell / self.l1) as i64;
        (x - y + c, x + 2 * y)
    }

    /// Plaquette index at arbitrary (unwrapped) coordinates.
    pub fn plaquette_at(&self, a: i64, b: i64) -> usize {
        let c = (a - b).rem_euclid(3);
        let y = (b - a + c) / 3;
        let x = a - c + y;
        let x = x.rem_euclid(self.l1 as i64) as usize;
        let y = y.rem_euclid(self.l2 as i64) as usize;
        3 * (y * self.l1 + x) + c as usize
    }

    fn site_at(&self, kind: usize, a: i64, b: i64) -> usize {
        2 * self.plaquette_at(a, b) + kind
    }

    pub fn l1(&self) -> usize {
        self.l1
    }

    pub fn l2(&self) -> usize {
        self.l2
    }

    /// Number of Majorana sites, `6 * l1 * l2`.
    pub fn num_sites(&self) -> usize {
        self.site_plaquettes.len()
    }

    pub fn num_plaquettes(&self) -> usize {
        self.plaquette_sites.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn plaquette_color(&self, p: usize) -> Color {
        Color::from_index(p % 3)
    }

    /// Unit cell `(x, y)` holding plaquette `p`.
    pub fn plaquette_cell(&self, p: usize) -> (usize, usize) {
        let cell = p / 3;
        (cell % self.l1, cell / self.l1)
    }

    pub fn plaquette_index(&self, x: usize, y: usize, color: Color) -> usize {
        3 * ((y % self.l2) * self.l1 + (x % self.l1)) + color.index()
    }

    /// Boundary sites of a plaquette in cyclic order.
    pub fn plaquette_sites(&self, p: usize) -> &[usize; 6] {
        &self.plaquette_sites[p]
    }

    /// The three plaquettes containing a site, ordered A, B, C.
    pub fn site_plaquettes(&self, s: usize) -> &[usize; 3] {
        &self.site_plaquettes[s]
    }

    pub fn site_edges(&self, s: usize) -> &[usize; 3] {
        &self.site_edges[s]
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Colour of the plaquette pair flipped by an edge's bilinear.
    pub fn edge_color(&self, e: usize) -> Color {
        self.plaquette_color(self.edges[e].flips[0])
    }

    /// Edges whose bilinear flips plaquette `p`.
    pub fn plaquette_star(&self, p: usize) -> &[usize; 6] {
        &self.plaquette_star[p]
    }

    pub fn plaquettes_of_color(&self, color: Color) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_plaquettes()).filter(move |&p| self.plaquette_color(p) == color)
    }

    pub fn edges_of_color(&self, color: Color) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_edges()).filter(move |&e| self.edge_color(e) == color)
    }

    /// Row-reduced basis of the plaquette-support matrix.
    pub fn stabilizer_basis(&self) -> &Basis {
        self.stabilizers.get_or_init(|| {
            let n = self.num_sites();
            let rows: Vec<BitVec> =
                self.plaquette_sites.iter().map(|hex| BitVec::from_indices(n, hex.iter().copied())).collect();
            Basis::from_rows(n, rows.iter())
        })
    }
}
