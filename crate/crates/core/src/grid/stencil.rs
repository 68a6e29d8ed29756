use serde::{Deserialize, Serialize};

use super::GridSpec;

/// Set of grid offsets used to sample point pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stencil {
    /// Offsets `s e` for `s` in `1, 2, 4, .., n/2` and `e` a nonzero vector
    /// with entries in `{-1, 0, 1}` (one of each `+-e` pair): 4 directions in
    /// 2D, 13 in 3D.
    #[default]
    Dyadic,
    /// Every offset up to sign: all point pairs of the grid.
    Full,
}

fn canonical(o: &[isize; 3], d: usize) -> bool {
    o[..d].iter().find(|&&v| v != 0).is_some_and(|&v| v > 0)
}

impl Stencil {
    pub fn offsets(&self, grid: &GridSpec) -> Vec<[isize; 3]> {
        let d = grid.d();
        let n = grid.n() as isize;
        let mut out = Vec::new();
        match self {
            Stencil::Dyadic => {
                let mut dirs = Vec::new();
                let range = |a: usize| if a < d { -1..=1 } else { 0..=0 };
                for x in range(0) {
                    for y in range(1) {
                        for z in range(2) {
                            let o = [x, y, z];
                            if canonical(&o, d) {
                                dirs.push(o);
                            }
                        }
                    }
                }
                let mut s = 1;
                while s <= n / 2 {
                    for e in &dirs {
                        out.push([s * e[0], s * e[1], s * e[2]]);
                    }
                    s *= 2;
                }
            }
            Stencil::Full => {
                let half = n / 2;
                let range = |a: usize| if a < d { (1 - half)..=half } else { 0..=0 };
                for x in range(0) {
                    for y in range(1) {
                        for z in range(2) {
                            let o = [x, y, z];
                            if canonical(&o, d) {
                                out.push(o);
                            }
                        }
                    }
                }
            }
        }
        out
    }
}
