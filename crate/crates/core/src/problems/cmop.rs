//! ZDT and DTLZ benchmark families.
//!
//! Definitions follow the canonical published forms. ZDT5 uses the
//! normalized objective scaling common in Python toolkits so its IGD values
//! are on the same scale as the continuous families.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ProblemError;

/// Length of the leading ZDT5 substring.
pub const ZDT5_HEAD_BITS: usize = 30;
/// Length of every trailing ZDT5 substring.
pub const ZDT5_TAIL_BITS: usize = 5;

const DTLZ_OBJECTIVES: usize = 3;
const DTLZ4_ALPHA: f64 = 100.0;

/// Disconnected ZDT3 front segments in `f1`.
const ZDT3_SEGMENTS: [(f64, f64); 5] = [
    (0.0, 0.083_001_534_9),
    (0.182_228_728_0, 0.257_762_363_4),
    (0.409_313_674_8, 0.453_882_104_1),
    (0.618_396_794_4, 0.652_511_703_8),
    (0.823_331_798_3, 0.851_832_865_4),
];

/// Intervals of `f1`/`f2` on which the DTLZ7 surface is nondominated.
const DTLZ7_INTERVALS: [(f64, f64); 2] = [(0.0, 0.251_411_836_0), (0.631_626_530_7, 0.859_400_856_6)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Zdt1,
    Zdt2,
    Zdt3,
    Zdt4,
    Zdt5,
    Zdt6,
    Dtlz1,
    Dtlz2,
    Dtlz3,
    Dtlz4,
    Dtlz5,
    Dtlz6,
    Dtlz7,
}

impl Family {
    pub const ALL: [Family; 13] = [
        Family::Zdt1,
        Family::Zdt2,
        Family::Zdt3,
        Family::Zdt4,
        Family::Zdt5,
        Family::Zdt6,
        Family::Dtlz1,
        Family::Dtlz2,
        Family::Dtlz3,
        Family::Dtlz4,
        Family::Dtlz5,
        Family::Dtlz6,
        Family::Dtlz7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Zdt1 => "zdt1",
            Family::Zdt2 => "zdt2",
            Family::Zdt3 => "zdt3",
            Family::Zdt4 => "zdt4",
            Family::Zdt5 => "zdt5",
            Family::Zdt6 => "zdt6",
            Family::Dtlz1 => "dtlz1",
            Family::Dtlz2 => "dtlz2",
            Family::Dtlz3 => "dtlz3",
            Family::Dtlz4 => "dtlz4",
            Family::Dtlz5 => "dtlz5",
            Family::Dtlz6 => "dtlz6",
            Family::Dtlz7 => "dtlz7",
        }
    }

    pub fn is_zdt(self) -> bool {
        matches!(
            self,
            Family::Zdt1 | Family::Zdt2 | Family::Zdt3 | Family::Zdt4 | Family::Zdt5 | Family::Zdt6
        )
    }

    /// Number of objectives: two for ZDT, three for DTLZ.
    pub fn objectives(self) -> usize {
        if self.is_zdt() {
            2
        } else {
            DTLZ_OBJECTIVES
        }
    }

    pub fn is_binary(self) -> bool {
        self == Family::Zdt5
    }

    /// Toolkit default dimension (bits for ZDT5).
    pub fn default_n_var(self) -> usize {
        match self {
            Family::Zdt1 | Family::Zdt2 | Family::Zdt3 => 30,
            Family::Zdt4 | Family::Zdt6 => 10,
            Family::Zdt5 => ZDT5_HEAD_BITS + 10 * ZDT5_TAIL_BITS,
            Family::Dtlz1 => DTLZ_OBJECTIVES + 4,
            Family::Dtlz7 => DTLZ_OBJECTIVES + 19,
            _ => DTLZ_OBJECTIVES + 9,
        }
    }

    /// Checks that `n_var` is a usable dimension for this family.
    pub fn check_n_var(self, n_var: usize) -> Result<(), ProblemError> {
        let ok = match self {
            Family::Zdt5 => n_var > ZDT5_HEAD_BITS && (n_var - ZDT5_HEAD_BITS) % ZDT5_TAIL_BITS == 0,
            f if f.is_zdt() => n_var >= 2,
            _ => n_var >= DTLZ_OBJECTIVES,
        };
        if ok {
            Ok(())
        } else {
            Err(ProblemError::InvalidInstance(format!(
                "{} does not support n_var = {n_var}",
                self.name()
            )))
        }
    }

    /// Per-variable box for real-coded families; `None` for ZDT5.
    pub fn variable_bounds(self, n_var: usize) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Family::Zdt5 => None,
            Family::Zdt4 => {
                let mut lower = vec![-5.0; n_var];
                let mut upper = vec![5.0; n_var];
                lower[0] = 0.0;
                upper[0] = 1.0;
                Some((lower, upper))
            }
            _ => Some((vec![0.0; n_var], vec![1.0; n_var])),
        }
    }

    /// Evaluates a real-coded family. `x` must already be within bounds.
    pub fn evaluate_real(self, x: &[f64]) -> Vec<f64> {
        match self {
            Family::Zdt1 => zdt_convex(x, |f1, g| 1.0 - (f1 / g).sqrt()),
            Family::Zdt2 => zdt_convex(x, |f1, g| 1.0 - (f1 / g).powi(2)),
            Family::Zdt3 => zdt_convex(x, |f1, g| {
                1.0 - (f1 / g).sqrt() - (f1 / g) * (10.0 * PI * f1).sin()
            }),
            Family::Zdt4 => {
                let f1 = x[0];
                let g = 1.0
                    + 10.0 * (x.len() - 1) as f64
                    + x[1..]
                        .iter()
                        .map(|v| v * v - 10.0 * (4.0 * PI * v).cos())
                        .sum::<f64>();
                vec![f1, g * (1.0 - (f1 / g).sqrt())]
            }
            Family::Zdt6 => {
                let f1 = 1.0 - (-4.0 * x[0]).exp() * (6.0 * PI * x[0]).sin().powi(6);
                let tail = x[1..].iter().sum::<f64>() / (x.len() - 1) as f64;
                let g = 1.0 + 9.0 * tail.powf(0.25);
                vec![f1, g * (1.0 - (f1 / g).powi(2))]
            }
            Family::Zdt5 => unreachable!("zdt5 is bit-coded"),
            Family::Dtlz1 => {
                let (head, tail) = x.split_at(DTLZ_OBJECTIVES - 1);
                dtlz_linear(head, dtlz_multimodal_g(tail))
            }
            Family::Dtlz2 => {
                let (head, tail) = x.split_at(DTLZ_OBJECTIVES - 1);
                dtlz_spherical(head, dtlz_sphere_g(tail), 1.0)
            }
            Family::Dtlz3 => {
                let (head, tail) = x.split_at(DTLZ_OBJECTIVES - 1);
                dtlz_spherical(head, dtlz_multimodal_g(tail), 1.0)
            }
            Family::Dtlz4 => {
                let (head, tail) = x.split_at(DTLZ_OBJECTIVES - 1);
                dtlz_spherical(head, dtlz_sphere_g(tail), DTLZ4_ALPHA)
            }
            Family::Dtlz5 | Family::Dtlz6 => {
                let (head, tail) = x.split_at(DTLZ_OBJECTIVES - 1);
                let g = if self == Family::Dtlz5 {
                    dtlz_sphere_g(tail)
                } else {
                    tail.iter().map(|v| v.powf(0.1)).sum()
                };
                let mut theta = Vec::with_capacity(head.len());
                theta.push(head[0]);
                theta.extend(head[1..].iter().map(|v| (1.0 + 2.0 * g * v) / (2.0 * (1.0 + g))));
                dtlz_spherical(&theta, g, 1.0)
            }
            Family::Dtlz7 => {
                let (head, tail) = x.split_at(DTLZ_OBJECTIVES - 1);
                let g = 1.0 + 9.0 / tail.len() as f64 * tail.iter().sum::<f64>();
                dtlz7_objectives(head, g)
            }
        }
    }

    /// Evaluates ZDT5 on its bit string.
    pub fn evaluate_bits(self, bits: &[bool]) -> Vec<f64> {
        debug_assert_eq!(self, Family::Zdt5);
        let substrings = zdt5_substrings(bits.len());
        let head_ones = bits[..ZDT5_HEAD_BITS].iter().filter(|b| **b).count() as f64;
        let f1 = 1.0 + head_ones;
        let g: f64 = bits[ZDT5_HEAD_BITS..]
            .chunks(ZDT5_TAIL_BITS)
            .map(|chunk| {
                let ones = chunk.iter().filter(|b| **b).count();
                if ones < ZDT5_TAIL_BITS {
                    2.0 + ones as f64
                } else {
                    1.0
                }
            })
            .sum();
        let f2 = g / f1;
        let tail = (substrings - 1) as f64;
        vec![
            (f1 - 1.0) / (ZDT5_HEAD_BITS as f64),
            (f2 - tail / 31.0) / (tail - tail / 31.0),
        ]
    }

    /// Samples the analytic Pareto front.
    ///
    /// Two-objective fronts return exactly `n_points` points, evenly spaced in
    /// `f1` over the (possibly disconnected) front domain. Three-objective
    /// simplex and sphere fronts use the largest uniform simplex lattice with
    /// at most `n_points` points; DTLZ7 samples a grid over its nondominated
    /// intervals.
    pub fn reference_front(self, n_var: usize, n_points: usize) -> Vec<Vec<f64>> {
        let n_points = n_points.max(2);
        match self {
            Family::Zdt1 | Family::Zdt4 => linspace(0.0, 1.0, n_points)
                .map(|t| vec![t, 1.0 - t.sqrt()])
                .collect(),
            Family::Zdt2 => linspace(0.0, 1.0, n_points).map(|t| vec![t, 1.0 - t * t]).collect(),
            Family::Zdt3 => {
                let total: f64 = ZDT3_SEGMENTS.iter().map(|(a, b)| b - a).sum();
                let front: Vec<Vec<f64>> = linspace(0.0, total, n_points)
                    .map(|s| {
                        let f1 = map_into_segments(s, &ZDT3_SEGMENTS);
                        vec![f1, 1.0 - f1.sqrt() - f1 * (10.0 * PI * f1).sin()]
                    })
                    .collect();
                crate::metrics::nondominated_points(&front)
            }
            Family::Zdt5 => {
                let tail = (zdt5_substrings(n_var) - 1) as f64;
                linspace(0.0, 1.0, n_points)
                    .map(|t| {
                        let f1 = 1.0 + 30.0 * t;
                        let f2 = tail / f1;
                        vec![t, (f2 - tail / 31.0) / (tail - tail / 31.0)]
                    })
                    .collect()
            }
            Family::Zdt6 => {
                let lo = 0.280_775_319_1;
                linspace(lo, 1.0, n_points).map(|t| vec![t, 1.0 - t * t]).collect()
            }
            Family::Dtlz1 => simplex_lattice(n_points)
                .into_iter()
                .map(|w| w.into_iter().map(|v| 0.5 * v).collect())
                .collect(),
            Family::Dtlz2 | Family::Dtlz3 | Family::Dtlz4 => simplex_lattice(n_points)
                .into_iter()
                .map(|w| {
                    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
                    w.into_iter().map(|v| v / norm).collect()
                })
                .collect(),
            Family::Dtlz5 | Family::Dtlz6 => linspace(0.0, PI / 2.0, n_points)
                .map(|t| {
                    let c = t.cos() * std::f64::consts::FRAC_1_SQRT_2;
                    vec![c, c, t.sin()]
                })
                .collect(),
            Family::Dtlz7 => {
                let side = ((n_points as f64).sqrt().floor() as usize).max(2);
                let total: f64 = DTLZ7_INTERVALS.iter().map(|(a, b)| b - a).sum();
                let axis: Vec<f64> = linspace(0.0, total, side)
                    .map(|s| map_into_segments(s, &DTLZ7_INTERVALS))
                    .collect();
                let mut front = Vec::with_capacity(side * side);
                for &a in &axis {
                    for &b in &axis {
                        front.push(dtlz7_objectives(&[a, b], 1.0));
                    }
                }
                crate::metrics::nondominated_points(&front)
            }
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        Family::ALL
            .into_iter()
            .find(|f| f.name() == lower)
            .ok_or_else(|| ProblemError::UnknownFamily(s.to_string()))
    }
}

/// Number of ZDT5 substrings (head plus tails) for a genome of `n_bits`.
pub fn zdt5_substrings(n_bits: usize) -> usize {
    1 + (n_bits - ZDT5_HEAD_BITS) / ZDT5_TAIL_BITS
}

fn zdt_convex(x: &[f64], h: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let f1 = x[0];
    let g = 1.0 + 9.0 / (x.len() - 1) as f64 * x[1..].iter().sum::<f64>();
    vec![f1, g * h(f1, g)]
}

fn dtlz_sphere_g(tail: &[f64]) -> f64 {
    tail.iter().map(|v| (v - 0.5).powi(2)).sum()
}

fn dtlz_multimodal_g(tail: &[f64]) -> f64 {
    100.0
        * (tail.len() as f64
            + tail
                .iter()
                .map(|v| (v - 0.5).powi(2) - (20.0 * PI * (v - 0.5)).cos())
                .sum::<f64>())
}

fn dtlz_linear(head: &[f64], g: f64) -> Vec<f64> {
    let m = head.len() + 1;
    (0..m)
        .map(|i| {
            let mut f = 0.5 * (1.0 + g);
            f *= head[..m - 1 - i].iter().product::<f64>();
            if i > 0 {
                f *= 1.0 - head[m - 1 - i];
            }
            f
        })
        .collect()
}

fn dtlz_spherical(theta: &[f64], g: f64, alpha: f64) -> Vec<f64> {
    let m = theta.len() + 1;
    (0..m)
        .map(|i| {
            let mut f = 1.0 + g;
            f *= theta[..m - 1 - i]
                .iter()
                .map(|t| (t.powf(alpha) * PI / 2.0).cos())
                .product::<f64>();
            if i > 0 {
                f *= (theta[m - 1 - i].powf(alpha) * PI / 2.0).sin();
            }
            f
        })
        .collect()
}

fn dtlz7_objectives(head: &[f64], g: f64) -> Vec<f64> {
    let m = head.len() + 1;
    let h = m as f64
        - head
            .iter()
            .map(|f| f / (1.0 + g) * (1.0 + (3.0 * PI * f).sin()))
            .sum::<f64>();
    let mut out = head.to_vec();
    out.push((1.0 + g) * h);
    out
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + step * i as f64 })
}

/// Maps an arc-length position onto a union of disjoint intervals.
fn map_into_segments(mut s: f64, segments: &[(f64, f64)]) -> f64 {
    for &(a, b) in segments {
        let len = b - a;
        if s <= len {
            return a + s;
        }
        s -= len;
    }
    segments.last().map(|&(_, b)| b).unwrap_or(0.0)
}

/// Uniform lattice on the 3-simplex with the largest partition count whose
/// size stays within `max_points`.
fn simplex_lattice(max_points: usize) -> Vec<Vec<f64>> {
    let mut h = 1usize;
    while (h + 3) * (h + 2) / 2 <= max_points {
        h += 1;
    }
    let mut out = Vec::with_capacity((h + 2) * (h + 1) / 2);
    for i in 0..=h {
        for j in 0..=(h - i) {
            let k = h - i - j;
            out.push(vec![i as f64 / h as f64, j as f64 / h as f64, k as f64 / h as f64]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zdt1_origin() {
        let f = Family::Zdt1.evaluate_real(&[0.0; 30]);
        assert_eq!(f, vec![0.0, 1.0]);
    }

    #[test]
    fn zdt5_optimum_lies_on_front() {
        // All tail substrings saturated gives g = m - 1.
        let mut bits = vec![false; 80];
        for b in bits.iter_mut().skip(30) {
            *b = true;
        }
        let f = Family::Zdt5.evaluate_bits(&bits);
        assert_eq!(f[0], 0.0);
        assert!((f[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zdt5_dimension_rules() {
        assert!(Family::Zdt5.check_n_var(50).is_ok());
        assert!(Family::Zdt5.check_n_var(80).is_ok());
        assert!(Family::Zdt5.check_n_var(52).is_err());
        assert_eq!(zdt5_substrings(50), 5);
    }

    #[test]
    fn simplex_lattice_size() {
        assert_eq!(simplex_lattice(1000).len(), 990);
        assert_eq!(simplex_lattice(91).len(), 91);
    }

    #[test]
    fn dtlz_optimum_hits_front() {
        // Position variables at 0.5 zero the distance function.
        let mut x = vec![0.5; 12];
        x[0] = 0.3;
        x[1] = 0.7;
        let f = Family::Dtlz2.evaluate_real(&x);
        let norm: f64 = f.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        let f = Family::Dtlz1.evaluate_real(&[0.3, 0.7, 0.5, 0.5, 0.5, 0.5, 0.5]);
        assert!((f.iter().sum::<f64>() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert!("zdt9".parse::<Family>().is_err());
    }
}
