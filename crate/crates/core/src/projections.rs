//! Analog architectures and the projection onto each feasible set.
//!
//! Every architecture pairs a connectivity pattern (fully connected, array of
//! subarrays, dynamic array of subarrays) with an element technology. The
//! projection is the only architecture-specific step of the hybrid design.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};

/// Modulus tolerance used by the membership predicates.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// Maximum modulus reachable by a double phase shifter.
pub const DPS_MAX_MODULUS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Connectivity {
    FullyConnected,
    /// Each RF chain drives at most `l_max` consecutive subarrays.
    AoSA {
        l_max: usize,
    },
    /// Each subarray is driven by at most `l_max` RF chains.
    DAoSA {
        l_max: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Element {
    /// Continuous phase shifter.
    Ups,
    /// `n_bits` quantized phase shifter.
    Qps { n_bits: u32 },
    /// Switch plus inverter, values `{-1, +1}`.
    Si,
    /// On/off switch, values `{0, 1}`.
    Switch,
    /// One antenna per RF chain and vice versa.
    AntennaSelection,
    /// Double phase shifter, modulus at most 2.
    Dps,
}

impl Element {
    /// Elements whose projection can map an entry to zero.
    fn admits_zero(self) -> bool {
        matches!(
            self,
            Element::Switch | Element::Dps | Element::AntennaSelection
        )
    }

    /// Nearest point of the element set to `z`.
    pub fn project(self, z: Complex64) -> Complex64 {
        match self {
            Element::Ups => {
                let r = z.norm();
                if r == 0.0 {
                    c(1.0, 0.0)
                } else {
                    z / r
                }
            }
            Element::Qps { n_bits } => {
                if z == Complex64::default() {
                    return c(1.0, 0.0);
                }
                let levels = 1i64 << n_bits;
                let step = 2.0 * PI / levels as f64;
                let k = (z.arg() / step).round() as i64;
                qps_point(k.rem_euclid(levels) as u64, n_bits)
            }
            Element::Si => {
                if z.re >= 0.0 {
                    c(1.0, 0.0)
                } else {
                    c(-1.0, 0.0)
                }
            }
            Element::Switch | Element::AntennaSelection => {
                if z.re >= 0.5 {
                    c(1.0, 0.0)
                } else {
                    c(0.0, 0.0)
                }
            }
            Element::Dps => {
                let r = z.norm();
                if r > DPS_MAX_MODULUS {
                    z * (DPS_MAX_MODULUS / r)
                } else {
                    z
                }
            }
        }
    }

    /// Whether `z` belongs to the element set.
    pub fn contains(self, z: Complex64) -> bool {
        match self {
            Element::Ups => (z.norm() - 1.0).abs() <= MEMBERSHIP_TOL,
            Element::Qps { n_bits } => {
                (0..1u64 << n_bits).any(|k| (z - qps_point(k, n_bits)).norm() <= MEMBERSHIP_TOL)
            }
            Element::Si => z == c(1.0, 0.0) || z == c(-1.0, 0.0),
            Element::Switch | Element::AntennaSelection => z == c(1.0, 0.0) || z == c(0.0, 0.0),
            Element::Dps => z.norm() <= DPS_MAX_MODULUS + MEMBERSHIP_TOL,
        }
    }

    /// Finite candidate set, for elements that have one.
    pub fn candidates(self) -> Option<Vec<Complex64>> {
        match self {
            Element::Qps { n_bits } => {
                Some((0..1u64 << n_bits).map(|k| qps_point(k, n_bits)).collect())
            }
            Element::Si => Some(vec![c(1.0, 0.0), c(-1.0, 0.0)]),
            Element::Switch | Element::AntennaSelection => Some(vec![c(0.0, 0.0), c(1.0, 0.0)]),
            Element::Ups | Element::Dps => None,
        }
    }
}

/// Grid point `exp(j 2 pi k / 2^n_bits)`.
pub fn qps_point(k: u64, n_bits: u32) -> Complex64 {
    let levels = (1u64 << n_bits) as f64;
    Complex64::from_polar(1.0, 2.0 * PI * k as f64 / levels)
}

/// An analog precoder architecture: connectivity times element technology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Architecture {
    pub connectivity: Connectivity,
    pub element: Element,
    /// Number of subarrays; `None` means one per RF chain.
    pub n_subarrays: Option<usize>,
}

impl Architecture {
    pub fn fully_connected(element: Element) -> Self {
        Architecture {
            connectivity: Connectivity::FullyConnected,
            element,
            n_subarrays: None,
        }
    }

    pub fn aosa(element: Element, l_max: usize) -> Self {
        Architecture {
            connectivity: Connectivity::AoSA { l_max },
            element,
            n_subarrays: None,
        }
    }

    pub fn daosa(element: Element, l_max: usize) -> Self {
        Architecture {
            connectivity: Connectivity::DAoSA { l_max },
            element,
            n_subarrays: None,
        }
    }

    pub fn with_subarrays(mut self, n_subarrays: usize) -> Self {
        self.n_subarrays = Some(n_subarrays);
        self
    }

    pub fn subarrays(&self, n_rf: usize) -> usize {
        self.n_subarrays.unwrap_or(n_rf)
    }

    pub fn l_max(&self) -> Option<usize> {
        match self.connectivity {
            Connectivity::FullyConnected => None,
            Connectivity::AoSA { l_max } | Connectivity::DAoSA { l_max } => Some(l_max),
        }
    }

    /// Checks the architecture against an `n_tx x n_rf` analog matrix.
    pub fn validate(&self, n_tx: usize, n_rf: usize) -> Result<()> {
        if let Element::Qps { n_bits } = self.element {
            if !(1..=16).contains(&n_bits) {
                return Err(Error::config(
                    "architecture",
                    format!("QPS resolution {n_bits} bits is outside 1..=16"),
                ));
            }
        }
        match self.connectivity {
            Connectivity::FullyConnected => {
                if self.element == Element::AntennaSelection && n_rf > n_tx {
                    return Err(Error::config(
                        "architecture",
                        format!("antenna selection needs N_RF ({n_rf}) <= N_tx ({n_tx})"),
                    ));
                }
                Ok(())
            }
            Connectivity::AoSA { l_max } | Connectivity::DAoSA { l_max } => {
                if self.element == Element::AntennaSelection {
                    return Err(Error::config(
                        "architecture",
                        "antenna selection is only defined for fully connected arrays",
                    ));
                }
                let n_sa = self.subarrays(n_rf);
                if n_sa == 0 || !n_tx.is_multiple_of(n_sa) {
                    return Err(Error::config(
                        "architecture",
                        format!("{n_sa} subarrays do not evenly divide N_tx = {n_tx}"),
                    ));
                }
                let bound = match self.connectivity {
                    Connectivity::AoSA { .. } => n_sa,
                    _ => n_rf,
                };
                if l_max == 0 || l_max > bound {
                    return Err(Error::config(
                        "architecture",
                        format!("l_max = {l_max} must lie in 1..={bound}"),
                    ));
                }
                if matches!(self.connectivity, Connectivity::DAoSA { .. }) && n_sa * l_max < n_rf {
                    return Err(Error::config(
                        "architecture",
                        format!("{n_sa} subarrays x l_max {l_max} cannot give each of {n_rf} RF chains a subarray"),
                    ));
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Ups => write!(f, "ups"),
            Element::Qps { n_bits } => write!(f, "qps{n_bits}"),
            Element::Si => write!(f, "si"),
            Element::Switch => write!(f, "switch"),
            Element::AntennaSelection => write!(f, "as"),
            Element::Dps => write!(f, "dps"),
        }
    }
}

impl FromStr for Element {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let el = match s.as_str() {
            "ups" | "sps" => Element::Ups,
            "si" => Element::Si,
            "switch" | "swi" => Element::Switch,
            "as" => Element::AntennaSelection,
            "dps" => Element::Dps,
            other => {
                let bits = other
                    .strip_prefix("qps")
                    .and_then(|b| b.parse::<u32>().ok())
                    .ok_or_else(|| {
                        Error::config("architecture", format!("unknown element `{other}`"))
                    })?;
                Element::Qps { n_bits: bits }
            }
        };
        Ok(el)
    }
}

impl Connectivity {
    pub fn label(&self) -> &'static str {
        match self {
            Connectivity::FullyConnected => "fc",
            Connectivity::AoSA { .. } => "aosa",
            Connectivity::DAoSA { .. } => "daosa",
        }
    }
}

impl fmt::Display for Architecture {
    /// Labels look like `fc-ups`, `fc-qps3`, `daosa-dps:2` or `aosa-ups:1@8`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.connectivity.label(), self.element)?;
        if let Some(l) = self.l_max() {
            write!(f, ":{l}")?;
        }
        if let Some(n) = self.n_subarrays {
            write!(f, "@{n}")?;
        }
        Ok(())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::config("architecture", format!("cannot parse `{s}`: {why}"));
        let s_lower = s.trim().to_ascii_lowercase();
        let (body, n_subarrays) = match s_lower.split_once('@') {
            Some((b, n)) => (
                b,
                Some(
                    n.parse::<usize>()
                        .map_err(|_| bad("subarray count is not an integer"))?,
                ),
            ),
            None => (s_lower.as_str(), None),
        };
        let (body, l_max) = match body.split_once(':') {
            Some((b, l)) => (
                b,
                Some(
                    l.parse::<usize>()
                        .map_err(|_| bad("l_max is not an integer"))?,
                ),
            ),
            None => (body, None),
        };
        let (conn, elem) = body
            .split_once('-')
            .ok_or_else(|| bad("expected <connectivity>-<element>"))?;
        let element: Element = elem.parse()?;
        let connectivity = match (conn, l_max) {
            ("fc", None) => Connectivity::FullyConnected,
            ("fc", Some(_)) => return Err(bad("fully connected arrays take no l_max")),
            ("aosa", l) => Connectivity::AoSA {
                l_max: l.unwrap_or(1),
            },
            ("daosa", Some(l)) => Connectivity::DAoSA { l_max: l },
            ("daosa", None) => return Err(bad("daosa needs an explicit l_max, e.g. daosa-ups:2")),
            _ => return Err(bad("connectivity must be fc, aosa or daosa")),
        };
        Ok(Architecture {
            connectivity,
            element,
            n_subarrays,
        })
    }
}

impl TryFrom<String> for Architecture {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Architecture> for String {
    fn from(a: Architecture) -> String {
        a.to_string()
    }
}

/// Projects `x` onto the feasible analog set of `arch`.
///
/// Members of the set are returned unchanged.
pub fn project(x: &CMatrix, arch: &Architecture) -> CMatrix {
    if is_member(x, arch) {
        return x.clone();
    }
    match (arch.connectivity, arch.element) {
        (Connectivity::FullyConnected, Element::AntennaSelection) => project_antenna_selection(x),
        (Connectivity::FullyConnected, el) => project_elementwise(x, el),
        (Connectivity::AoSA { .. }, _) => project_aosa(x, arch),
        (Connectivity::DAoSA { .. }, _) => project_daosa(x, arch),
    }
}

/// Entrywise nearest point of the element set (fully connected arrays).
pub fn project_elementwise(x: &CMatrix, element: Element) -> CMatrix {
    x.map(|z| element.project(z))
}

/// Greedy antenna selection.
///
/// Columns are visited in descending order of their largest real part; each
/// takes the unclaimed row with the largest real part.
pub fn project_antenna_selection(x: &CMatrix) -> CMatrix {
    let (rows, cols) = x.shape();
    let best = |j: usize| {
        x.column(j)
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| best(b).total_cmp(&best(a)));
    let mut claimed = vec![false; rows];
    let mut out = CMatrix::zeros(rows, cols);
    for j in order {
        let pick =
            (0..rows)
                .filter(|&i| !claimed[i])
                .fold(None, |acc: Option<usize>, i| match acc {
                    Some(b) if x[(b, j)].re >= x[(i, j)].re => Some(b),
                    _ => Some(i),
                });
        if let Some(i) = pick {
            claimed[i] = true;
            out[(i, j)] = c(1.0, 0.0);
        }
    }
    out
}

fn block_l1(x: &CMatrix, j: usize, s: usize, size: usize) -> f64 {
    x.view((s * size, j), (size, 1))
        .iter()
        .map(|z| z.norm())
        .sum()
}

/// First block of the kept window in each column of an AoSA projection.
///
/// The window spans `l_max` consecutive subarrays and maximizes the summed
/// l1 norm; ties go to the lowest starting block.
pub fn aosa_support(x: &CMatrix, arch: &Architecture) -> Vec<usize> {
    let (n_tx, n_rf) = x.shape();
    let n_sa = arch.subarrays(n_rf);
    let size = n_tx / n_sa;
    let l_max = arch.l_max().unwrap_or(n_sa).clamp(1, n_sa);
    (0..n_rf)
        .map(|j| {
            let norms: Vec<f64> = (0..n_sa).map(|s| block_l1(x, j, s, size)).collect();
            let mut best = (0, f64::NEG_INFINITY);
            for start in 0..=n_sa - l_max {
                let sum: f64 = norms[start..start + l_max].iter().sum();
                if sum > best.1 {
                    best = (start, sum);
                }
            }
            best.0
        })
        .collect()
}

pub fn project_aosa(x: &CMatrix, arch: &Architecture) -> CMatrix {
    let (n_tx, n_rf) = x.shape();
    let n_sa = arch.subarrays(n_rf);
    let size = n_tx / n_sa;
    let l_max = arch.l_max().unwrap_or(n_sa).clamp(1, n_sa);
    let starts = aosa_support(x, arch);
    let mut out = CMatrix::zeros(n_tx, n_rf);
    for (j, start) in starts.into_iter().enumerate() {
        for i in start * size..(start + l_max) * size {
            out[(i, j)] = arch.element.project(x[(i, j)]);
        }
    }
    out
}

fn block_l2(x: &CMatrix, j: usize, s: usize, size: usize) -> f64 {
    x.view((s * size, j), (size, 1)).norm()
}

/// Active `(subarray, column)` links of a DAoSA projection, `active[s][j]`.
///
/// Each subarray keeps its `l_max` strongest columns (Euclidean norm over the
/// block). Columns left without any subarray then take over their strongest
/// block from the weakest column that holds at least two blocks.
pub fn daosa_support(x: &CMatrix, arch: &Architecture) -> Vec<Vec<bool>> {
    let (n_tx, n_rf) = x.shape();
    let n_sa = arch.subarrays(n_rf);
    let size = n_tx / n_sa;
    let l_max = arch.l_max().unwrap_or(n_rf).clamp(1, n_rf);
    let norms: Vec<Vec<f64>> = (0..n_sa)
        .map(|s| (0..n_rf).map(|j| block_l2(x, j, s, size)).collect())
        .collect();
    let mut active = vec![vec![false; n_rf]; n_sa];
    for s in 0..n_sa {
        let mut order: Vec<usize> = (0..n_rf).collect();
        order.sort_by(|&a, &b| norms[s][b].total_cmp(&norms[s][a]));
        for &j in order.iter().take(l_max) {
            active[s][j] = true;
        }
    }

    let blocks_of = |active: &Vec<Vec<bool>>, j: usize| (0..n_sa).filter(|&s| active[s][j]).count();
    for j in 0..n_rf {
        if blocks_of(&active, j) > 0 {
            continue;
        }
        let mut by_strength: Vec<usize> = (0..n_sa).collect();
        by_strength.sort_by(|&a, &b| norms[b][j].total_cmp(&norms[a][j]));
        for s in by_strength {
            let victim = (0..n_rf)
                .filter(|&c| active[s][c] && blocks_of(&active, c) >= 2)
                .min_by(|&a, &b| norms[s][a].total_cmp(&norms[s][b]));
            if let Some(v) = victim {
                active[s][v] = false;
                active[s][j] = true;
                break;
            }
        }
    }
    active
}

pub fn project_daosa(x: &CMatrix, arch: &Architecture) -> CMatrix {
    let (n_tx, n_rf) = x.shape();
    let n_sa = arch.subarrays(n_rf);
    let size = n_tx / n_sa;
    let active = daosa_support(x, arch);
    let mut out = CMatrix::zeros(n_tx, n_rf);
    for (s, row) in active.iter().enumerate() {
        for (j, _) in row.iter().enumerate().filter(|(_, &on)| on) {
            for i in s * size..(s + 1) * size {
                out[(i, j)] = arch.element.project(x[(i, j)]);
            }
        }
    }
    out
}

/// Set-membership predicate for the feasible analog set of `arch`.
pub fn is_member(x: &CMatrix, arch: &Architecture) -> bool {
    let (n_tx, n_rf) = x.shape();
    let el = arch.element;
    let zero = Complex64::default();
    let entries_ok = x.iter().all(|&z| z == zero || el.contains(z));
    if !entries_ok {
        return false;
    }
    match arch.connectivity {
        Connectivity::FullyConnected => {
            if el == Element::AntennaSelection {
                let col_ok = x
                    .column_iter()
                    .all(|col| col.iter().filter(|&&z| z != zero).count() == 1);
                let row_ok = x
                    .row_iter()
                    .all(|row| row.iter().filter(|&&z| z != zero).count() <= 1);
                col_ok && row_ok
            } else {
                el.admits_zero() || x.iter().all(|&z| z != zero)
            }
        }
        Connectivity::AoSA { l_max } | Connectivity::DAoSA { l_max } => {
            let n_sa = arch.subarrays(n_rf);
            if n_sa == 0 || n_tx % n_sa != 0 {
                return false;
            }
            let size = n_tx / n_sa;
            // Block (s, j) status: None if fully zero, Some(full) otherwise.
            let status = |s: usize, j: usize| {
                let blk = x.view((s * size, j), (size, 1));
                let nz = blk.iter().filter(|&&z| z != zero).count();
                (nz > 0).then_some(nz == size)
            };
            let mut active = vec![vec![false; n_rf]; n_sa];
            for s in 0..n_sa {
                for j in 0..n_rf {
                    match status(s, j) {
                        None => {}
                        Some(full) => {
                            if !full && !el.admits_zero() {
                                return false;
                            }
                            active[s][j] = true;
                        }
                    }
                }
            }
            let col_active = |j: usize| (0..n_sa).filter(|&s| active[s][j]).collect::<Vec<_>>();
            if !el.admits_zero() && (0..n_rf).any(|j| col_active(j).is_empty()) {
                return false;
            }
            match arch.connectivity {
                Connectivity::AoSA { .. } => (0..n_rf).all(|j| {
                    let blocks = col_active(j);
                    match (blocks.first(), blocks.last()) {
                        (Some(lo), Some(hi)) => hi - lo < l_max,
                        _ => true,
                    }
                }),
                _ => active
                    .iter()
                    .all(|row| row.iter().filter(|&&on| on).count() <= l_max),
            }
        }
    }
}
