//! Per-satellite successive interference cancellation with two-level capture.
//!
//! With the power levels from [`crate::power`], the SINR test `Γ ≥ γ` reduces
//! to a combinatorial rule on the residual contents of a slot:
//!
//! * one replica left: it is decoded,
//! * exactly one strong and one weak replica: the strong one is decoded,
//!   cancelled, and the weak one follows,
//! * anything else (two of the same level, three or more): nothing.
//!
//! Decoding a user cancels all of its replicas, which may unlock other slots.
//! The rule is monotone under replica removal, so the fixed point does not
//! depend on the order in which slots are visited.

use crate::frame::FrameRealization;
use crate::power::PowerLevel;

/// A residual replica: `(user id, power label)`.
pub type Replica = (u32, PowerLevel);

/// Users that can be decoded from a slot right now, strongest first.
pub fn slot_resolvable(residual: &[Replica]) -> Vec<u32> {
    match resolvable(residual) {
        Some((u, None)) => vec![u],
        Some((a, Some(b))) => vec![a, b],
        None => Vec::new(),
    }
}

fn resolvable(residual: &[Replica]) -> Option<(u32, Option<u32>)> {
    match *residual {
        [(u, _)] => Some((u, None)),
        [(a, PowerLevel::Strong), (b, PowerLevel::Weak)]
        | [(b, PowerLevel::Weak), (a, PowerLevel::Strong)] => Some((a, Some(b))),
        _ => None,
    }
}

/// Set of decoded user ids over a frame's user universe `0..m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedSet {
    mask: Vec<bool>,
    count: usize,
}

impl DecodedSet {
    pub fn empty(n_users: usize) -> Self {
        Self {
            mask: vec![false; n_users],
            count: 0,
        }
    }

    pub fn from_ids(n_users: usize, ids: impl IntoIterator<Item = usize>) -> Self {
        let mut set = Self::empty(n_users);
        for id in ids {
            set.insert(id);
        }
        set
    }

    /// Returns false if `user` was already present.
    pub fn insert(&mut self, user: usize) -> bool {
        let fresh = !self.mask[user];
        if fresh {
            self.mask[user] = true;
            self.count += 1;
        }
        fresh
    }

    pub fn contains(&self, user: usize) -> bool {
        self.mask[user]
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Size of the user universe.
    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(u, &d)| d.then_some(u))
    }

    pub(crate) fn mask(&self) -> &[bool] {
        &self.mask
    }
}

/// The frame as seen by one satellite, with decoded replicas removed.
#[derive(Debug, Clone)]
pub struct SatelliteView<'a> {
    frame: &'a FrameRealization,
    slots: Vec<Vec<Replica>>,
    decoded: DecodedSet,
    surviving: Vec<bool>,
    n_surviving: usize,
}

impl<'a> SatelliteView<'a> {
    /// Builds the erasure-filtered view of `frame` at `satellite`.
    pub fn new(frame: &'a FrameRealization, satellite: usize) -> Self {
        assert!(
            satellite < frame.n_satellites(),
            "satellite {satellite} out of range (k = {})",
            frame.n_satellites()
        );
        let m = frame.n_users();
        let mut slots = vec![Vec::new(); frame.n_slots];
        let mut surviving = vec![false; m];
        for (u, tx) in frame.users.iter().enumerate() {
            if frame.is_erased(satellite, u) {
                continue;
            }
            surviving[u] = true;
            for (s, p) in tx.replicas() {
                slots[s as usize].push((u as u32, p));
            }
        }
        let n_surviving = surviving.iter().filter(|&&s| s).count();
        Self {
            frame,
            slots,
            decoded: DecodedSet::empty(m),
            surviving,
            n_surviving,
        }
    }

    pub fn slot(&self, slot: usize) -> &[Replica] {
        &self.slots[slot]
    }

    pub fn decoded(&self) -> &DecodedSet {
        &self.decoded
    }

    pub fn is_surviving(&self, user: usize) -> bool {
        self.surviving[user]
    }

    pub fn n_surviving(&self) -> usize {
        self.n_surviving
    }

    fn cancel(&mut self, user: u32) {
        if !self.decoded.insert(user as usize) {
            return;
        }
        for &s in &self.frame.users[user as usize].slots {
            let residual = &mut self.slots[s as usize];
            if let Some(pos) = residual.iter().position(|&(u, _)| u == user) {
                residual.swap_remove(pos);
            }
        }
    }

    /// Resolves `slot` if possible and cancels the decoded users. Returns the
    /// number of newly decoded users.
    pub fn resolve_slot(&mut self, slot: usize) -> usize {
        match resolvable(&self.slots[slot]) {
            Some((first, second)) => {
                self.cancel(first);
                if let Some(second) = second {
                    self.cancel(second);
                    2
                } else {
                    1
                }
            }
            None => 0,
        }
    }

    /// Runs up to `max_passes` full passes over `order`, stopping early after
    /// a pass that decodes nothing. Returns the number of passes run.
    pub fn run(&mut self, order: &[usize], max_passes: usize) -> usize {
        let mut passes = 0;
        while passes < max_passes {
            passes += 1;
            let mut progress = 0;
            for &s in order {
                progress += self.resolve_slot(s);
            }
            if progress == 0 || self.decoded.len() == self.n_surviving {
                break;
            }
        }
        passes
    }

    pub fn into_decoded(self) -> DecodedSet {
        self.decoded
    }
}

/// Decodes satellite `satellite` of `frame`, visiting slots in index order.
pub fn sic_decode(frame: &FrameRealization, satellite: usize, max_iters: usize) -> DecodedSet {
    let order: Vec<usize> = (0..frame.n_slots).collect();
    sic_decode_with_order(frame, satellite, max_iters, &order)
}

/// As [`sic_decode`], with an explicit slot-visiting order.
pub fn sic_decode_with_order(
    frame: &FrameRealization,
    satellite: usize,
    max_iters: usize,
    order: &[usize],
) -> DecodedSet {
    let mut view = SatelliteView::new(frame, satellite);
    view.run(order, max_iters);
    view.into_decoded()
}
