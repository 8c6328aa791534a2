//! Splits byte streams into alternating text and binary regions.
//!
//! Rules are applied once each, in order, merging adjacent same-kind runs
//! after every rule:
//!
//! 1. classify each byte and group into runs;
//! 2. demote text runs shorter than [`MIN_TEXT_RUN`] to binary;
//! 3. bridge binary gaps of at most [`MAX_BRIDGE_GAP`] bytes between text runs;
//! 4. absorb binary runs shorter than [`MIN_BINARY_RUN`] that touch text.

pub const MIN_TEXT_RUN: usize = 64;
pub const MAX_BRIDGE_GAP: usize = 8;
pub const MIN_BINARY_RUN: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegionKind {
    Binary = 0,
    Text = 1,
}

impl RegionKind {
    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Self::Binary),
            1 => Some(Self::Text),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Region {
    pub kind: RegionKind,
    pub offset: usize,
    pub len: usize,
}

impl Region {
    pub fn end(&self) -> usize {
        self.offset + self.len
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.end()
    }
}

/// Printable ASCII plus tab, LF and CR.
pub fn is_text_byte(b: u8) -> bool {
    matches!(b, 32..=126 | 9 | 10 | 13)
}

pub fn segment(data: &[u8]) -> Vec<Region> {
    let mut runs = classify_runs(data);
    for r in runs.iter_mut() {
        if r.kind == RegionKind::Text && r.len < MIN_TEXT_RUN {
            r.kind = RegionKind::Binary;
        }
    }
    runs = merge(runs);

    relabel(&mut runs, |prev, r, next| {
        r.len <= MAX_BRIDGE_GAP && prev == Some(RegionKind::Text) && next == Some(RegionKind::Text)
    });
    runs = merge(runs);

    relabel(&mut runs, |prev, r, next| {
        r.len < MIN_BINARY_RUN && (prev == Some(RegionKind::Text) || next == Some(RegionKind::Text))
    });
    merge(runs)
}

fn classify_runs(data: &[u8]) -> Vec<Region> {
    let mut runs: Vec<Region> = Vec::new();
    for (i, &b) in data.iter().enumerate() {
        let kind = if is_text_byte(b) {
            RegionKind::Text
        } else {
            RegionKind::Binary
        };
        match runs.last_mut() {
            Some(last) if last.kind == kind => last.len += 1,
            _ => runs.push(Region { kind, offset: i, len: 1 }),
        }
    }
    runs
}

/// Relabels binary runs to text where `rule(prev_kind, run, next_kind)`
/// holds. Neighbours are judged on the labels from before this pass.
fn relabel(runs: &mut [Region], rule: impl Fn(Option<RegionKind>, &Region, Option<RegionKind>) -> bool) {
    let kinds: Vec<RegionKind> = runs.iter().map(|r| r.kind).collect();
    for (i, r) in runs.iter_mut().enumerate() {
        let prev = i.checked_sub(1).map(|j| kinds[j]);
        let next = kinds.get(i + 1).copied();
        if r.kind == RegionKind::Binary && rule(prev, r, next) {
            r.kind = RegionKind::Text;
        }
    }
}

fn merge(runs: Vec<Region>) -> Vec<Region> {
    let mut out: Vec<Region> = Vec::with_capacity(runs.len());
    for r in runs {
        match out.last_mut() {
            Some(last) if last.kind == r.kind => last.len += r.len,
            _ => out.push(r),
        }
    }
    out
}
