//! The d.c.e. set `D` as a journal of membership changes, and the c.e.
//! Lachlan set `A` derived from it.
//!
//! Every element of `D` changes membership at most twice: it may be
//! enumerated once and later extracted once. The number of changes an
//! element has seen by stage `s` is its *change count*; membership is the
//! change count mod 2. When an element's count reaches 2, the code
//! `pair_code(x, s_first)` of its first entry enters `A`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Direction of a single membership change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChangeKind {
    Enumerate,
    Extract,
}

impl fmt::Display for ChangeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChangeKind::Enumerate => "Enumerate",
            ChangeKind::Extract => "Extract",
        })
    }
}

impl FromStr for ChangeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Enumerate" => Ok(ChangeKind::Enumerate),
            "Extract" => Ok(ChangeKind::Extract),
            other => Err(format!("unknown change kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChangeEvent {
    pub element: u64,
    pub stage: u64,
    pub kind: ChangeKind,
}

impl fmt::Display for ChangeEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CHG {} {} {}", self.stage, self.element, self.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SetsError {
    #[error("element {element} already changed twice")]
    ThirdChange { element: u64 },
    #[error("{kind} of element {element} does not flip its membership")]
    WrongKind { element: u64, kind: ChangeKind },
    #[error("stage {stage} precedes the last recorded change at stage {last}")]
    StaleStage { stage: u64, last: u64 },
    #[error("cannot restore to segment: element {element} already changed twice and disagrees")]
    Unrestorable { element: u64 },
}

/// Cantor pairing `(x + s)(x + s + 1)/2 + s`.
pub fn pair_code(x: u64, s: u64) -> u64 {
    let t = x + s;
    t * (t + 1) / 2 + s
}

/// Inverse of [`pair_code`].
pub fn unpair_code(code: u64) -> (u64, u64) {
    // Largest t with t(t+1)/2 <= code.
    let mut t = ((((8 * code as u128 + 1) as f64).sqrt() as u64).saturating_sub(1)) / 2;
    while (t + 1) * (t + 2) / 2 <= code {
        t += 1;
    }
    while t * (t + 1) / 2 > code {
        t -= 1;
    }
    let s = code - t * (t + 1) / 2;
    (t - s, s)
}

/// A finite binary string, stored sparsely as its length and the sorted
/// positions of its 1-bits.
///
/// Oracle segments in this crate can be very long (the Lachlan set is
/// indexed by pair codes) while having only a handful of 1-bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BinarySegment {
    len: u64,
    ones: Vec<u64>,
}

impl BinarySegment {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a segment from explicit bits, most significant position first.
    pub fn from_bits(bits: &[bool]) -> Self {
        let ones = bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i as u64)
            .collect();
        Self {
            len: bits.len() as u64,
            ones,
        }
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse_bits(s: &str) -> Option<Self> {
        let bits: Option<Vec<bool>> = s
            .chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect();
        bits.map(|b| Self::from_bits(&b))
    }

    /// Sparse constructor; `ones` must be strictly increasing and below `len`.
    pub fn from_ones(len: u64, ones: Vec<u64>) -> Option<Self> {
        let sorted = ones.windows(2).all(|w| w[0] < w[1]);
        let bounded = ones.last().is_none_or(|&last| last < len);
        (sorted && bounded).then_some(Self { len, ones })
    }

    /// The restriction `X ↾ len` of a set given by its members.
    pub fn restrict(members: &BTreeSet<u64>, len: u64) -> Self {
        Self {
            len,
            ones: members.range(..len).copied().collect(),
        }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn ones(&self) -> &[u64] {
        &self.ones
    }

    pub fn bit(&self, i: u64) -> Option<bool> {
        (i < self.len).then(|| self.ones.binary_search(&i).is_ok())
    }

    /// Whether `self` is an initial segment of the set with these members.
    pub fn is_prefix_of_set(&self, members: &BTreeSet<u64>) -> bool {
        let mut below = members.range(..self.len);
        let mut ones = self.ones.iter();
        loop {
            match (below.next(), ones.next()) {
                (None, None) => return true,
                (Some(a), Some(b)) if a == b => continue,
                _ => return false,
            }
        }
    }

    /// Whether `self` is an initial segment of `other`.
    pub fn is_prefix_of(&self, other: &BinarySegment) -> bool {
        if self.len > other.len {
            return false;
        }
        let cut = other.ones.partition_point(|&p| p < self.len);
        other.ones[..cut] == self.ones[..]
    }

    /// One of the two is a prefix of the other.
    pub fn comparable(&self, other: &BinarySegment) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    /// Sparse text form `len:p1,p2,…` (`len:-` when there are no 1-bits).
    pub fn to_sparse(&self) -> String {
        if self.ones.is_empty() {
            format!("{}:-", self.len)
        } else {
            let ones: Vec<String> = self.ones.iter().map(u64::to_string).collect();
            format!("{}:{}", self.len, ones.join(","))
        }
    }

    pub fn parse_sparse(s: &str) -> Option<Self> {
        let (len, rest) = s.split_once(':')?;
        let len = len.parse().ok()?;
        let ones = if rest == "-" {
            Vec::new()
        } else {
            rest.split(',')
                .map(|p| p.parse().ok())
                .collect::<Option<Vec<u64>>>()?
        };
        Self::from_ones(len, ones)
    }
}

impl fmt::Display for BinarySegment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sparse())
    }
}

/// One element of `A`: `code = pair_code(x, s_first)` entered at `stage`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LachlanEntry {
    pub stage: u64,
    pub code: u64,
    pub element: u64,
    pub first_stage: u64,
}

impl fmt::Display for LachlanEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "LCH {} {} {} {}",
            self.stage, self.code, self.element, self.first_stage
        )
    }
}

/// The Lachlan set, maintained incrementally as `D` changes.
#[derive(Debug, Clone, Default)]
pub struct LachlanView {
    entries: Vec<LachlanEntry>,
    codes: BTreeSet<u64>,
}

impl LachlanView {
    pub fn entries(&self) -> &[LachlanEntry] {
        &self.entries
    }

    /// Current members of `A`.
    pub fn codes(&self) -> &BTreeSet<u64> {
        &self.codes
    }

    pub fn contains(&self, code: u64) -> bool {
        self.codes.contains(&code)
    }

    /// Members of `A_s`.
    pub fn codes_at(&self, s: u64) -> BTreeSet<u64> {
        self.entries
            .iter()
            .take_while(|e| e.stage <= s)
            .map(|e| e.code)
            .collect()
    }

    fn push(&mut self, entry: LachlanEntry) {
        self.codes.insert(entry.code);
        self.entries.push(entry);
    }

    /// Recomputes `A_s` from a raw event list, ignoring any incremental state.
    pub fn recompute(events: &[ChangeEvent], s: u64) -> BTreeSet<u64> {
        let mut first: HashMap<u64, u64> = HashMap::new();
        let mut out = BTreeSet::new();
        for ev in events.iter().filter(|e| e.stage <= s) {
            match first.get(&ev.element) {
                None => {
                    first.insert(ev.element, ev.stage);
                }
                Some(&s0) => {
                    out.insert(pair_code(ev.element, s0));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct ElementLog {
    first: Option<u64>,
    second: Option<u64>,
}

impl ElementLog {
    fn count_at(&self, s: u64) -> u8 {
        self.first.is_some_and(|t| t <= s) as u8 + self.second.is_some_and(|t| t <= s) as u8
    }

    fn count(&self) -> u8 {
        self.first.is_some() as u8 + self.second.is_some() as u8
    }
}

/// The journal of `D`.
#[derive(Debug, Clone, Default)]
pub struct ChangeHistory {
    events: Vec<ChangeEvent>,
    log: HashMap<u64, ElementLog>,
    members: BTreeSet<u64>,
    lachlan: LachlanView,
}

impl ChangeHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn events(&self) -> &[ChangeEvent] {
        &self.events
    }

    /// Current members of `D`.
    pub fn members(&self) -> &BTreeSet<u64> {
        &self.members
    }

    pub fn lachlan(&self) -> &LachlanView {
        &self.lachlan
    }

    pub fn last_stage(&self) -> Option<u64> {
        self.events.last().map(|e| e.stage)
    }

    /// `D_s(x)`.
    pub fn membership(&self, x: u64, s: u64) -> bool {
        self.change_count(x, s) % 2 == 1
    }

    /// `D_s^♯(x)`.
    pub fn change_count(&self, x: u64, s: u64) -> u8 {
        self.log.get(&x).map_or(0, |l| l.count_at(s))
    }

    /// Change count over the whole journal so far.
    pub fn total_changes(&self, x: u64) -> u8 {
        self.log.get(&x).map_or(0, ElementLog::count)
    }

    pub fn first_entry(&self, x: u64) -> Option<u64> {
        self.log.get(&x).and_then(|l| l.first)
    }

    pub fn is_member(&self, x: u64) -> bool {
        self.members.contains(&x)
    }

    /// Appends one change. Returns the Lachlan entry when this was the
    /// element's second change.
    pub fn apply_change(
        &mut self,
        x: u64,
        kind: ChangeKind,
        s: u64,
    ) -> Result<Option<LachlanEntry>, SetsError> {
        if let Some(last) = self.last_stage() {
            if s < last {
                return Err(SetsError::StaleStage { stage: s, last });
            }
        }
        let log = self.log.get(&x).copied().unwrap_or_default();
        match (log.count(), kind) {
            (2, _) => return Err(SetsError::ThirdChange { element: x }),
            (0, ChangeKind::Enumerate) | (1, ChangeKind::Extract) => {}
            _ => return Err(SetsError::WrongKind { element: x, kind }),
        }
        if let Some(first) = log.first {
            // One change per element per stage.
            if s <= first {
                return Err(SetsError::StaleStage {
                    stage: s,
                    last: first,
                });
            }
        }
        self.events.push(ChangeEvent {
            element: x,
            stage: s,
            kind,
        });
        let entry = self.log.entry(x).or_default();
        match kind {
            ChangeKind::Enumerate => {
                entry.first = Some(s);
                self.members.insert(x);
                Ok(None)
            }
            ChangeKind::Extract => {
                entry.second = Some(s);
                self.members.remove(&x);
                let first_stage = log.first.expect("extract follows an enumerate");
                let lch = LachlanEntry {
                    stage: s,
                    code: pair_code(x, first_stage),
                    element: x,
                    first_stage,
                };
                self.lachlan.push(lch);
                Ok(Some(lch))
            }
        }
    }

    /// `D_s ↾ len`.
    pub fn segment_at(&self, len: u64, s: u64) -> BinarySegment {
        if self.last_stage().is_none_or(|last| last <= s) {
            return BinarySegment::restrict(&self.members, len);
        }
        let mut ones: Vec<u64> = self
            .log
            .iter()
            .filter(|(&x, l)| x < len && l.count_at(s) == 1)
            .map(|(&x, _)| x)
            .collect();
        ones.sort_unstable();
        BinarySegment::from_ones(len, ones).expect("sorted and bounded")
    }

    /// False iff some `x < |σ|` has `D_s(x) ≠ σ(x)` and `D_s^♯(x) = 2`.
    ///
    /// A disagreeing element with count 2 is a non-member, so only the
    /// 1-bits of `σ` need to be inspected.
    pub fn restorable_to(&self, sigma: &BinarySegment, s: u64) -> bool {
        sigma.ones().iter().all(|&x| self.change_count(x, s) != 2)
    }

    /// Changes needed to make `D ↾ |σ| = σ`, in increasing element order.
    pub fn restoration_plan(
        &self,
        sigma: &BinarySegment,
    ) -> Result<Vec<(u64, ChangeKind)>, SetsError> {
        let mut plan: Vec<(u64, ChangeKind)> = Vec::new();
        for &x in sigma.ones() {
            match self.total_changes(x) {
                0 => plan.push((x, ChangeKind::Enumerate)),
                1 => {}
                _ => return Err(SetsError::Unrestorable { element: x }),
            }
        }
        let wanted: BTreeSet<u64> = sigma.ones().iter().copied().collect();
        plan.extend(
            self.members
                .range(..sigma.len())
                .filter(|x| !wanted.contains(x))
                .map(|&x| (x, ChangeKind::Extract)),
        );
        plan.sort_by_key(|&(x, _)| x);
        Ok(plan)
    }

    /// Restores `D` to extend `σ` at stage `s` with the minimal change set.
    pub fn restore_to(
        &mut self,
        sigma: &BinarySegment,
        s: u64,
    ) -> Result<Vec<(u64, ChangeKind)>, SetsError> {
        let plan = self.restoration_plan(sigma)?;
        for &(x, kind) in &plan {
            self.apply_change(x, kind, s)?;
        }
        Ok(plan)
    }
}
