//! Unit propagation over partially decided topology binaries.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{log2_ceil, sos1_bit};
use crate::topology::{with_witness_fluxes, TopologyAssignment};

/// A binary decision the search can branch on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum Decision {
    Used {
        slot: usize,
    },
    Fixed {
        slot: usize,
    },
    /// Encoding bit `bit` of parent selector `C^d_{·slot}`.
    Selector {
        d: usize,
        slot: usize,
        bit: usize,
    },
    Direction,
    /// Bit `bit` of the grid cell holding coordinate `axis` (0 = x) of link
    /// vector `d` of `slot` at the first sample.
    Block {
        d: usize,
        slot: usize,
        axis: usize,
        bit: usize,
    },
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Decision::Used { slot } => write!(f, "U_{slot}"),
            Decision::Fixed { slot } => write!(f, "F_{slot}"),
            Decision::Selector { d, slot, bit } => write!(f, "C{d}_{slot}.bit{bit}"),
            Decision::Direction => write!(f, "D"),
            Decision::Block { d, slot, axis, bit } => {
                write!(
                    f,
                    "block_d{}{d}_{slot}.bit{bit}",
                    if axis == 0 { "x" } else { "y" }
                )
            }
        }
    }
}

/// Topology binaries, each decided or open. Vectors are indexed by
/// `slot - 1`; selector bits follow the logarithmic SOS1 encoding of the
/// model, so member `j` of `C^d_{·i}` is selectable when every decided bit
/// `b` equals [`sos1_bit`]`(j, b)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PartialAssignment {
    pub k: usize,
    pub used: Vec<Option<bool>>,
    pub fixed: Vec<Option<bool>>,
    pub selector_bits: Vec<[Vec<Option<bool>>; 2]>,
    pub direction: Option<bool>,
}

impl PartialAssignment {
    /// Nothing decided.
    pub fn new(k: usize) -> Self {
        assert!((2..=63).contains(&k), "slot count {k} outside 2..=63");
        PartialAssignment {
            k,
            used: vec![None; k],
            fixed: vec![None; k],
            selector_bits: (1..=k)
                .map(|i| [vec![None; log2_ceil(i)], vec![None; log2_ceil(i)]])
                .collect(),
            direction: None,
        }
    }

    /// Every bit of `topo` decided.
    pub fn from_topology(topo: &TopologyAssignment) -> Self {
        let mut p = PartialAssignment::new(topo.k);
        for i in 1..=topo.k {
            p.used[i - 1] = Some(topo.u[i - 1]);
            p.fixed[i - 1] = Some(topo.f[i - 1]);
            for (d, sel) in [&topo.c1[i - 1], &topo.c2[i - 1]].into_iter().enumerate() {
                let member = sel.iter().position(|&b| b).unwrap_or(0);
                for (b, bit) in p.selector_bits[i - 1][d].iter_mut().enumerate() {
                    *bit = Some(sos1_bit(member, b) == 1.0);
                }
            }
        }
        p.direction = Some(topo.d);
        p
    }

    pub fn get(&self, decision: Decision) -> Option<bool> {
        match decision {
            Decision::Used { slot } => self.used[slot - 1],
            Decision::Fixed { slot } => self.fixed[slot - 1],
            Decision::Selector { d, slot, bit } => self.selector_bits[slot - 1][d - 1][bit],
            Decision::Direction => self.direction,
            Decision::Block { .. } => None,
        }
    }

    /// Decide a topology binary. Block decisions are not stored here.
    pub fn set(&mut self, decision: Decision, value: bool) {
        let slot = match decision {
            Decision::Used { slot } => &mut self.used[slot - 1],
            Decision::Fixed { slot } => &mut self.fixed[slot - 1],
            Decision::Selector { d, slot, bit } => &mut self.selector_bits[slot - 1][d - 1][bit],
            Decision::Direction => &mut self.direction,
            Decision::Block { .. } => panic!("block decisions live outside the topology"),
        };
        *slot = Some(value);
    }

    /// Members of `C^d_{·i}` allowed by the decided bits alone.
    fn bit_candidates(&self, d: usize, i: usize) -> u64 {
        let bits = &self.selector_bits[i - 1][d - 1];
        (0..i)
            .filter(|&j| {
                bits.iter()
                    .enumerate()
                    .all(|(b, v)| v.is_none_or(|v| v == (sos1_bit(j, b) == 1.0)))
            })
            .fold(0, |m, j| m | 1 << j)
    }

    /// Whether `topo` (including its direction bit) agrees with every
    /// decided bit.
    pub fn admits(&self, topo: &TopologyAssignment) -> bool {
        let full = PartialAssignment::from_topology(topo);
        let agree = |a: &[Option<bool>], b: &[Option<bool>]| {
            a.iter().zip(b).all(|(x, y)| x.is_none() || x == y)
        };
        topo.k == self.k
            && agree(&self.used, &full.used)
            && agree(&self.fixed, &full.fixed)
            && self
                .selector_bits
                .iter()
                .zip(&full.selector_bits)
                .all(|(a, b)| agree(&a[0], &b[0]) && agree(&a[1], &b[1]))
            && (self.direction.is_none() || self.direction == full.direction)
    }
}

/// A propagated assignment together with the parent candidates it leaves.
#[derive(Clone, Debug, PartialEq)]
pub struct Extended {
    pub assignment: PartialAssignment,
    /// Bit masks over `j = 0..i` per slot and selector.
    candidates: Vec<[u64; 2]>,
}

impl Extended {
    /// Parents still possible for selector `d` of slot `i`.
    pub fn candidates(&self, d: usize, i: usize) -> Vec<usize> {
        let m = self.candidates[i - 1][d - 1];
        (0..i).filter(|&j| m >> j & 1 == 1).collect()
    }

    /// The decided topology with witness fluxes, once every structural bit
    /// is decided. The direction bit defaults to clockwise when open.
    pub fn topology(&self) -> Option<TopologyAssignment> {
        let a = &self.assignment;
        if a.used.iter().chain(&a.fixed).any(Option::is_none) {
            return None;
        }
        let mut t = TopologyAssignment::empty(a.k);
        for i in 1..=a.k {
            t.u[i - 1] = a.used[i - 1]?;
            t.f[i - 1] = a.fixed[i - 1]?;
            for d in 1..=2 {
                let m = self.candidates[i - 1][d - 1];
                if m.count_ones() != 1 {
                    return None;
                }
                let j = m.trailing_zeros() as usize;
                let sel = if d == 1 {
                    &mut t.c1[i - 1]
                } else {
                    &mut t.c2[i - 1]
                };
                sel.iter_mut().enumerate().for_each(|(x, b)| *b = x == j);
            }
        }
        t.d = a.direction.unwrap_or(false);
        with_witness_fluxes(t)
    }
}

/// Outcome of [`propagate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Propagation {
    Extended(Extended),
    Conflict(String),
}

impl Propagation {
    pub fn is_conflict(&self) -> bool {
        matches!(self, Propagation::Conflict(_))
    }
}

struct State {
    a: PartialAssignment,
    cand: Vec<[u64; 2]>,
    changed: bool,
}

impl State {
    fn decide(
        bit: &mut Option<bool>,
        value: bool,
        what: impl FnOnce() -> String,
    ) -> Result<bool, String> {
        match *bit {
            Some(v) if v == value => Ok(false),
            Some(_) => Err(what()),
            None => {
                *bit = Some(value);
                Ok(true)
            }
        }
    }

    fn used(&mut self, i: usize, v: bool) -> Result<(), String> {
        let c = Self::decide(&mut self.a.used[i - 1], v, || {
            format!("U_{i} must be {}", u8::from(v))
        })?;
        self.changed |= c;
        Ok(())
    }

    fn fixed(&mut self, i: usize, v: bool) -> Result<(), String> {
        let c = Self::decide(&mut self.a.fixed[i - 1], v, || {
            format!("F_{i} must be {}", u8::from(v))
        })?;
        self.changed |= c;
        Ok(())
    }

    fn restrict(&mut self, d: usize, i: usize, mask: u64) -> Result<(), String> {
        let old = self.cand[i - 1][d - 1];
        let new = old & mask;
        if new == 0 {
            return Err(format!(
                "selector C{d} of slot {i} has no admissible parent"
            ));
        }
        if new != old {
            self.cand[i - 1][d - 1] = new;
            self.changed = true;
        }
        Ok(())
    }

    fn nonzero(&self, i: usize) -> u64 {
        (self.cand[i - 1][0] | self.cand[i - 1][1]) & !1
    }

    fn round(&mut self) -> Result<(), String> {
        let k = self.a.k;
        self.used(1, true)?;
        self.used(k, true)?;
        self.fixed(1, false)?;
        for i in 2..=k {
            // 1 - F_i <= U_i
            if self.a.used[i - 1] == Some(false) {
                self.fixed(i, true)?;
            }
            if self.a.fixed[i - 1] == Some(false) {
                self.used(i, true)?;
            }
            // C^d_0i = F_i
            match self.a.fixed[i - 1] {
                Some(true) => {
                    self.restrict(1, i, 1)?;
                    self.restrict(2, i, 1)?;
                }
                Some(false) => {
                    self.restrict(1, i, !1)?;
                    self.restrict(2, i, !1)?;
                }
                None => {}
            }
            for d in 1..=2 {
                let m = self.cand[i - 1][d - 1];
                if m == 1 {
                    self.fixed(i, true)?;
                } else if m & 1 == 0 {
                    self.fixed(i, false)?;
                }
            }
            // C^d_ji <= U_j
            let unused = (1..i)
                .filter(|&j| self.a.used[j - 1] == Some(false))
                .fold(0u64, |m, j| m | 1 << j);
            self.restrict(1, i, !unused)?;
            self.restrict(2, i, !unused)?;
            // the two parents of a movable node differ
            for d in 1..=2 {
                let m = self.cand[i - 1][d - 1];
                if m.count_ones() == 1 && m != 1 {
                    self.restrict(3 - d, i, !m)?;
                }
            }
            let parents = self.nonzero(i);
            if parents.count_ones() < 2 {
                self.fixed(i, true)?;
            } else if parents.count_ones() == 2 && self.a.fixed[i - 1] == Some(false) {
                for j in (1..i).filter(|&j| parents >> j & 1 == 1) {
                    self.used(j, true)?;
                }
            }
        }
        self.reachability()?;
        self.sync_bits()
    }

    /// Optimistic flux tests: a used slot must be able to reach slot `K`
    /// along possible links, and a movable slot must be able to reach the
    /// motor through possibly movable parents. Open slots failing a test
    /// are decided the other way.
    fn reachability(&mut self) -> Result<(), String> {
        let k = self.a.k;
        let link = |s: &State, j: usize, i: usize| {
            s.nonzero(i) >> j & 1 == 1 && s.a.used[i - 1] != Some(false)
        };
        let mut reaches = vec![false; k + 1];
        reaches[k] = true;
        for j in (1..k).rev() {
            reaches[j] = (j + 1..=k).any(|i| reaches[i] && link(self, j, i));
        }
        for j in 1..k {
            if !reaches[j] {
                if self.a.used[j - 1] == Some(true) {
                    return Err(format!(
                        "slot {j} is used but cannot reach the end-effector"
                    ));
                }
                self.used(j, false)?;
            }
        }
        let mut driven = vec![false; k + 1];
        driven[1] = true;
        for i in 2..=k {
            driven[i] = (1..i).any(|j| {
                driven[j] && self.a.fixed[j - 1] != Some(true) && self.nonzero(i) >> j & 1 == 1
            });
        }
        for i in 2..=k {
            if !driven[i] {
                if self.a.fixed[i - 1] == Some(false) {
                    return Err(format!(
                        "slot {i} is movable but cannot be driven by the motor"
                    ));
                }
                self.fixed(i, true)?;
            }
        }
        Ok(())
    }

    /// Narrow candidates to the decided bits and decide every bit on which
    /// all remaining candidates agree.
    fn sync_bits(&mut self) -> Result<(), String> {
        for i in 2..=self.a.k {
            for d in 1..=2 {
                let m = self.a.bit_candidates(d, i);
                self.restrict(d, i, m)?;
                let m = self.cand[i - 1][d - 1];
                for b in 0..log2_ceil(i) {
                    let values: Vec<bool> = (0..i)
                        .filter(|&j| m >> j & 1 == 1)
                        .map(|j| sos1_bit(j, b) == 1.0)
                        .collect();
                    if values.iter().all(|&v| v == values[0]) {
                        let c = State::decide(
                            &mut self.a.selector_bits[i - 1][d - 1][b],
                            values[0],
                            || format!("selector bit C{d}_{i}.bit{b} contradicts its candidates"),
                        )?;
                        self.changed |= c;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Fixed point of the topology implications over `fixed`: the state rules
/// on slots 1 and `K`, `1 − F_i ≤ U_i`, `C^d_0i = F_i`, `C^d_ji ≤ U_j`,
/// distinct parents, the selector encodings and optimistic reachability in
/// both flux networks.
///
/// Never reports a conflict for an assignment that some member of
/// [`enumerate_topologies`](crate::topology::enumerate_topologies) admits.
pub fn propagate(fixed: &PartialAssignment) -> Propagation {
    let k = fixed.k;
    let mut s = State {
        a: fixed.clone(),
        cand: vec![[0, 0]; k],
        changed: true,
    };
    for i in 1..=k {
        let all = (1u64 << i) - 1;
        s.cand[i - 1] = [all, all];
    }
    // slot 1 has no selector rows; keep its candidate set at {0}
    s.cand[0] = [1, 1];
    while s.changed {
        s.changed = false;
        if let Err(reason) = s.round() {
            return Propagation::Conflict(reason);
        }
    }
    Propagation::Extended(Extended {
        assignment: s.a,
        candidates: s.cand,
    })
}
