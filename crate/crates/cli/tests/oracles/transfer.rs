//! Strip transfer matrices and phenomenological renormalization: the
//! critical coupling is where `M / xi_M` agrees between two strip widths.
//!
//! Sites sit on a square grid `(x, y)` periodic in `x` with width `m`; the
//! triangular lattice adds the `(x, y)-(x+1, y+1)` diagonal. Rows are bit
//! masks, bit `x` set meaning spin `-1`.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lattice {
    SquareIsing,
    TriangularIsing,
    /// Three-spin products on every triangle.
    BaxterWu,
}

fn rot(s: u32, m: u32) -> u32 {
    // bit x of the result is bit x+1 of s
    ((s >> 1) | (s << (m - 1))) & ((1 << m) - 1)
}

/// Number of unsatisfied terms between consecutive rows, out of `terms`.
fn frustrated(lattice: Lattice, m: u32, a: u32, b: u32) -> (u32, u32) {
    match lattice {
        Lattice::SquareIsing => ((a ^ rot(a, m)).count_ones() + (a ^ b).count_ones(), 2 * m),
        Lattice::TriangularIsing => {
            ((a ^ rot(a, m)).count_ones() + (a ^ b).count_ones() + (a ^ rot(b, m)).count_ones(), 3 * m)
        }
        Lattice::BaxterWu => {
            let up = a ^ rot(a, m) ^ rot(b, m);
            let down = a ^ b ^ rot(b, m);
            (up.count_ones() + down.count_ones(), 2 * m)
        }
    }
}

struct Transfer {
    dim: usize,
    /// `k[new * dim + old]`
    k: Vec<f64>,
}

impl Transfer {
    fn new(lattice: Lattice, m: u32, beta: f64) -> Self {
        let dim = 1usize << m;
        let (_, terms) = frustrated(lattice, m, 0, 0);
        // weight relative to the fully satisfied row pair
        let table: Vec<f64> = (0..=terms).map(|f| (-2.0 * beta * f as f64).exp()).collect();
        let mut k = vec![0.0; dim * dim];
        for new in 0..dim {
            for old in 0..dim {
                k[new * dim + old] = table[frustrated(lattice, m, old as u32, new as u32).0 as usize];
            }
        }
        Transfer { dim, k }
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (row, o) in self.k.chunks_exact(self.dim).zip(out.iter_mut()) {
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }
}

/// Sector of a group of global spin flips: each element is a flip mask and
/// the character it carries.
struct Sector {
    flips: Vec<(u32, f64)>,
}

impl Sector {
    fn project(&self, v: &mut [f64]) {
        let src = v.to_vec();
        for (s, x) in v.iter_mut().enumerate() {
            *x = self.flips.iter().map(|&(g, chi)| chi * src[s ^ g as usize]).sum::<f64>() / self.flips.len() as f64;
        }
    }
}

/// Leading eigenvalue of `t^steps` inside a sector, by power iteration.
fn leading(t: &Transfer, steps: usize, sector: &Sector) -> f64 {
    let dim = t.dim;
    // deterministic, generic start
    let mut v: Vec<f64> = (0..dim).map(|i| 1.0 + ((i as f64 * 0.618_033_988_7).fract() - 0.5) * 0.3).collect();
    sector.project(&mut v);
    let mut w = vec![0.0; dim];
    let mut lambda = 0.0;
    for _ in 0..5000 {
        let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm0);
        for _ in 0..steps {
            t.apply(&v, &mut w);
            std::mem::swap(&mut v, &mut w);
        }
        sector.project(&mut v);
        let next = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (next - lambda).abs() <= 1e-13 * next {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// `m / xi_m` with `xi_m` in rows: `m * ln(lambda_0 / lambda_1)` per row.
pub fn scaled_gap(lattice: Lattice, m: u32, beta: f64) -> f64 {
    let t = Transfer::new(lattice, m, beta);
    let all = (1u32 << m) - 1;
    let (steps, even, odd) = match lattice {
        Lattice::SquareIsing | Lattice::TriangularIsing => (
            1,
            Sector { flips: vec![(0, 1.0), (all, 1.0)] },
            Sector { flips: vec![(0, 1.0), (all, -1.0)] },
        ),
        Lattice::BaxterWu => {
            assert_eq!(m % 3, 0, "strip width must be a multiple of 3");
            // sublattices repeat every three rows
            let mask = |skip: u32| (0..m).filter(|x| x % 3 != skip).fold(0u32, |acc, x| acc | 1 << x);
            let (g0, g1, g2) = (mask(0), mask(1), mask(2));
            (
                3,
                Sector { flips: vec![(0, 1.0), (g0, 1.0), (g1, 1.0), (g2, 1.0)] },
                Sector { flips: vec![(0, 1.0), (g0, 1.0), (g1, -1.0), (g2, -1.0)] },
            )
        }
    };
    let l0 = leading(&t, steps, &even);
    let l1 = leading(&t, steps, &odd);
    m as f64 * (l0 / l1).ln() / steps as f64
}

/// Coupling where the scaled gaps of widths `a` and `b` coincide, by
/// bisection within `[lo, hi]`.
pub fn critical_beta(lattice: Lattice, a: u32, b: u32, lo: f64, hi: f64) -> f64 {
    let g = |beta: f64| scaled_gap(lattice, a, beta) - scaled_gap(lattice, b, beta);
    let (mut lo, mut hi) = (lo, hi);
    let mut glo = g(lo);
    assert!(glo * g(hi) < 0.0, "no crossing in [{lo}, {hi}]");
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm * glo > 0.0 {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
