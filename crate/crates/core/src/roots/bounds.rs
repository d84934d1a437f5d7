//! The bound formulas for `Z(m, n)`.

use crate::model::CurvePower;
use std::fmt;

/// Parameter regions of the bound theorems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    /// odd `m`, `0 <= n < m - 1`
    D1,
    /// odd `m`, `m - 1 <= n < 2m - 1`
    D2,
    /// odd `m`, `n >= 2m - 1`
    D3,
    /// even `m`, `0 <= n < m`
    D4,
    /// even `m`, `m <= n < 2m - 2`
    D5,
    /// even `m`, `n >= 2m - 2`
    D6,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl Region {
    /// Label of the theorem clause covering the region, e.g. `D₂∪D₃`.
    pub fn clause_label(self) -> &'static str {
        match self {
            Region::D1 => "D₁",
            Region::D2 | Region::D3 => "D₂∪D₃",
            Region::D4 => "D₄",
            Region::D5 | Region::D6 => "D₅∪D₆",
        }
    }
}

pub fn classify(m: CurvePower, n: u32) -> Region {
    let (m, n) = (m.get(), n);
    if m % 2 == 1 {
        if n + 1 < m {
            Region::D1
        } else if n + 1 < 2 * m {
            Region::D2
        } else {
            Region::D3
        }
    } else if n < m {
        Region::D4
    } else if n + 2 < 2 * m {
        Region::D5
    } else {
        Region::D6
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundPair {
    pub lower: i64,
    pub upper: i64,
    pub region: Region,
    /// Where each number came from.
    pub source: String,
    /// Inconsistencies between the stated formulas, never silently repaired.
    pub findings: Vec<String>,
}

impl BoundPair {
    pub fn is_consistent(&self) -> bool {
        self.lower <= self.upper
    }
}

fn fl(a: i64) -> i64 {
    a.div_euclid(2)
}

fn delta(n: i64) -> i64 {
    if n % 2 == 1 {
        0
    } else {
        -1
    }
}

/// Bounds exactly as the two theorems state them; `lower` is `None` where
/// no lower bound is stated (even `m`, `n > 2m`).
pub fn theorem_bounds(m: CurvePower, n: u32) -> (Option<i64>, i64) {
    let (mm, n) = (m.get() as i64, n as i64);
    let d = delta(n);
    let region = classify(m, n as u32);
    if m.is_odd() {
        let k = (mm - 1) / 2;
        match region {
            Region::D1 => {
                let twice_up = fl(n + 3) * fl(n + 5) + 2 * (fl(n + 2) * fl(n + 4) - 2);
                let lo = fl(n) * fl(n + 6) + fl(n - 1) + 2;
                (Some(lo), half(twice_up))
            }
            _ => {
                let lo = 2 * (k + 1) * fl(n) + d - (k - 1) * (k - 1) + 2;
                let up = if region == Region::D2 {
                    half(fl(n + 3) * fl(n + 5) + 2 * ((2 * k + 1) * fl(n) - (k - 1) * (k - 1)))
                } else {
                    (2 * k + 1) * (2 * fl(n) + d) + k * (5 - 3 * k) + 1
                };
                (Some(lo), up)
            }
        }
    } else {
        let k = mm / 2;
        match region {
            Region::D4 => {
                let p = fl(n);
                let q = fl(n - 1);
                let up = 4 * p * p + (6 * d + 11) * p + half(d * (5 * d + 17)) + 4;
                let lo = half(p * (p + 3) + q * (q + 7)) + 3;
                (Some(lo), up)
            }
            _ => {
                let up = (3 * k + 1) * fl(n - 1) + k * fl(n) - k * (k - 5) - 1;
                let lo = if region == Region::D5 {
                    Some((k + 2) * fl(n - 1) + k * fl(n) - k * (k - 3) + 1)
                } else if n == 2 * mm - 2 {
                    Some(3 * k * k + 4 * k - 3)
                } else if n == 2 * mm - 1 {
                    Some(3 * k * k + 5 * k - 2)
                } else if n == 2 * mm {
                    Some(3 * k * k + 6 * k - 2)
                } else {
                    None
                };
                (lo, up)
            }
        }
    }
}

fn half(x: i64) -> i64 {
    debug_assert!(x % 2 == 0, "bound formula produced a half-integer");
    x.div_euclid(2)
}

/// The three-case upper bound from the proof for `D4`, keyed on
/// `2[(n-1)/2]` versus `m/2 - 1`.
pub fn d4_proof_upper(m: CurvePower, n: u32) -> Option<i64> {
    if classify(m, n) != Region::D4 {
        return None;
    }
    let (k, n) = (m.get() as i64 / 2, n as i64);
    let d = delta(n);
    let lhs = 2 * fl(n - 1);
    Some(match lhs.cmp(&(k - 1)) {
        std::cmp::Ordering::Less => theorem_bounds(m, n as u32).1,
        std::cmp::Ordering::Equal => k * k + half((7 - 2 * d) * k - 3 - 4 * d),
        std::cmp::Ordering::Greater => (4 * k + 1) * fl(n) + (3 * k + 1) * d - k * (k - 5) - 1,
    })
}

/// Values stated by the corollary, `(lower, upper)` when available.
pub fn corollary_values(m: CurvePower, n: u32) -> Option<(i64, i64)> {
    let (mm, ni) = (m.get(), n as i64);
    let d = delta(ni);
    match (mm, n) {
        (1, n) if n >= 1 => Some((n as i64, n as i64)),
        (2, 1) => Some((3, 3)),
        (2, 2) => Some((4, 4)),
        (3, _) => Some((4 * fl(ni) + 2 + d, 6 * fl(ni) + 3 * (1 + d))),
        (2, _) if n >= 2 => Some((3 * (fl(ni) + 1) + 2 * d, 5 * fl(ni) + 4 * d + 3)),
        _ => None,
    }
}

/// Region-appropriate bounds, with the corollary's exact values taking
/// precedence where it states them. Disagreements are listed in `findings`.
#[allow(non_snake_case)]
pub fn bound_Z(m: CurvePower, n: u32) -> BoundPair {
    let region = classify(m, n);
    let (lo, up) = theorem_bounds(m, n);
    let mut findings = Vec::new();
    let mut source = format!("theorem {region}");
    let mut lower = match lo {
        Some(l) => l,
        None => {
            // Z(m, n) is nondecreasing in n, so the last stated value carries over.
            let carried = theorem_bounds(m, 2 * m.get()).0.expect("stated at n = 2m");
            source.push_str("; lower carried from n=2m");
            carried
        }
    };
    let mut upper = up;
    if n == 0 && m.is_odd() && region == Region::D1 {
        findings.push(format!(
            "m={}, n=0: the lower-bound formula uses the floor [(n-1)/2] = -1",
            m.get()
        ));
    }
    if let Some((cl, cu)) = corollary_values(m, n) {
        let exact = matches!((m.get(), n), (1, _) | (2, 1) | (2, 2));
        if exact || (m.get() == 2 && lo.is_none()) {
            if (cl, cu) != (lower, upper) {
                findings.push(format!(
                    "m={}, n={n}: theorem gives ({lower}, {upper}), corollary gives ({cl}, {cu}); using the corollary",
                    m.get()
                ));
            }
            lower = cl;
            upper = cu;
            source = format!("corollary (region {region})");
        } else if (cl, cu) != (lower, upper) {
            findings.push(format!(
                "m={}, n={n}: corollary bounds ({cl}, {cu}) differ from theorem ({lower}, {upper})",
                m.get()
            ));
        }
    }
    let floor_claim = match n {
        1 if m.get() >= 3 => Some(2),
        2 if m.get() >= 5 => Some(6),
        _ => None,
    };
    if let Some(c) = floor_claim {
        if lower < c {
            findings.push(format!(
                "m={}, n={n}: corollary claims Z >= {c}, theorem lower bound is {lower}; keeping {lower}",
                m.get()
            ));
        }
    }
    if let Some(p) = d4_proof_upper(m, n) {
        if p != upper {
            findings.push(format!(
                "m={}, n={n}: proof case split gives upper {p}, statement gives {upper}",
                m.get()
            ));
        }
    }
    if upper < 0 {
        findings.push(format!("m={}, n={n}: negative upper bound {upper}", m.get()));
    }
    if lower > upper {
        findings.push(format!("m={}, n={n}: lower {lower} exceeds upper {upper}", m.get()));
    }
    BoundPair {
        lower,
        upper,
        region,
        source,
        findings,
    }
}
