use rayon::prelude::*;

use super::{alpha_rank_test, bvp_matrix_test, mobius_consistency, q_roots, RootSet, SpectralError};

pub const MAX_SCAN_CELLS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ScanFlags {
    pub r_zero: bool,
    pub repeated: bool,
}

impl ScanFlags {
    pub fn is_degenerate(&self) -> bool {
        self.r_zero || self.repeated
    }

    /// `ok`, or the set flags joined by `|`.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.r_zero {
            parts.push("r_zero");
        }
        if self.repeated {
            parts.push("repeated");
        }
        if parts.is_empty() {
            "ok".to_string()
        } else {
            parts.join("|")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanCell {
    pub r: f64,
    pub length: f64,
    /// NaN when the roots repeat.
    pub mobius: f64,
    pub sigma_min: f64,
    pub sigma5: f64,
    pub flags: ScanFlags,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    /// Row-major in `r`: all lengths for the first `r`, then the next.
    pub cells: Vec<ScanCell>,
    pub nr: usize,
    pub nl: usize,
    /// Minima over cells without flags; infinite when there are none.
    pub min_mobius: f64,
    pub min_sigma_min: f64,
    pub min_sigma5: f64,
    pub degenerate: usize,
}

fn grid(range: (f64, f64), n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![range.0],
        _ => (0..n)
            .map(|i| range.0 + i as f64 * (range.1 - range.0) / (n - 1) as f64)
            .collect(),
    }
}

fn cell(roots: &RootSet, length: f64) -> ScanCell {
    let flags = ScanFlags {
        r_zero: roots.r == 0.0,
        repeated: !roots.is_distinct(),
    };
    ScanCell {
        r: roots.r,
        length,
        mobius: mobius_consistency(roots, length).unwrap_or(f64::NAN),
        sigma_min: alpha_rank_test(roots, length).sigma_min,
        sigma5: bvp_matrix_test(roots, length),
        flags,
    }
}

/// Möbius residual, `sigma_min` and `sigma_5` on the uniform grid
/// `r_i = r0 + i (r1 - r0) / (nr - 1)`, `L_j` likewise.
///
/// Cells run in parallel on the current rayon pool; the output order does
/// not depend on it.
pub fn spectral_scan(
    r_range: (f64, f64),
    l_range: (f64, f64),
    nr: usize,
    nl: usize,
) -> Result<ScanResult, SpectralError> {
    let finite = [r_range.0, r_range.1, l_range.0, l_range.1].iter().all(|v| v.is_finite());
    if !finite {
        return Err(SpectralError::Argument("scan ranges must be finite"));
    }
    if nr.saturating_mul(nl) > MAX_SCAN_CELLS {
        return Err(SpectralError::Argument("scan grid exceeds 10^7 cells"));
    }
    let rs: Vec<RootSet> = grid(r_range, nr).into_par_iter().map(q_roots).collect();
    let ls = grid(l_range, nl);
    let cells: Vec<ScanCell> = (0..rs.len() * ls.len())
        .into_par_iter()
        .map(|k| cell(&rs[k / ls.len()], ls[k % ls.len()]))
        .collect();
    let clean = || cells.iter().filter(|c| !c.flags.is_degenerate());
    let min_of = |f: fn(&ScanCell) -> f64| clean().map(f).fold(f64::INFINITY, f64::min);
    Ok(ScanResult {
        min_mobius: min_of(|c| c.mobius),
        min_sigma_min: min_of(|c| c.sigma_min),
        min_sigma5: min_of(|c| c.sigma5),
        degenerate: cells.iter().filter(|c| c.flags.is_degenerate()).count(),
        cells,
        nr,
        nl,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_range_gives_empty_result() {
        let s = spectral_scan((-1.0, 1.0), (1.0, 2.0), 0, 10).unwrap();
        assert!(s.cells.is_empty());
        assert_eq!(s.min_sigma5, f64::INFINITY);
    }

    #[test]
    fn small_scan_is_ordered_and_flags_zero() {
        let s = spectral_scan((-1.0, 1.0), (1.0, 3.0), 3, 4).unwrap();
        assert_eq!(s.cells.len(), 12);
        assert_eq!(s.cells[4].r, 0.0);
        assert!(s.cells[4].flags.r_zero);
        assert_eq!(s.cells[5].length, 1.0 + 2.0 / 3.0);
        assert_eq!(s.degenerate, 4);
        assert!(s.min_mobius > 1e-6 && s.min_sigma_min > 1e-8 && s.min_sigma5 > 1e-8);
    }

    #[test]
    fn sigma5_is_even_in_r() {
        let s = spectral_scan((-1.5, 1.5), (0.5, 6.0), 6, 5).unwrap();
        for i in 0..3 {
            for j in 0..5 {
                let a = s.cells[i * 5 + j].sigma5;
                let b = s.cells[(5 - i) * 5 + j].sigma5;
                assert!((a - b).abs() <= 1e-10 * a.max(1e-300), "{a} {b}");
            }
        }
    }

    #[test]
    fn oversized_grid_is_rejected() {
        assert!(spectral_scan((0.0, 1.0), (0.0, 1.0), 10_000, 10_000).is_err());
        assert!(spectral_scan((0.0, f64::NAN), (0.0, 1.0), 2, 2).is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(ScanFlags::default().label(), "ok");
        assert_eq!(ScanFlags { r_zero: true, repeated: true }.label(), "r_zero|repeated");
    }
}
