use std::collections::BTreeMap;
use std::fmt;

use super::{NetError, NodeId, PetriNet};

/// Multiset of places. Zero entries are never stored, so equal markings compare equal.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Marking(BTreeMap<NodeId, u32>);

impl Marking {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(p: NodeId) -> Self {
        let mut m = Self::new();
        m.add(p, 1);
        m
    }

    pub fn get(&self, p: NodeId) -> u32 {
        self.0.get(&p).copied().unwrap_or(0)
    }

    pub fn add(&mut self, p: NodeId, n: u32) {
        if n > 0 {
            *self.0.entry(p).or_insert(0) += n;
        }
    }

    /// Removes up to `n` tokens and returns how many were missing.
    pub fn take(&mut self, p: NodeId, n: u32) -> u32 {
        let have = self.get(p);
        if have > n {
            self.0.insert(p, have - n);
        } else {
            self.0.remove(&p);
        }
        n.saturating_sub(have)
    }

    pub fn total(&self) -> u64 {
        self.0.values().map(|v| u64::from(*v)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, u32)> + '_ {
        self.0.iter().map(|(p, n)| (*p, *n))
    }

    /// `self ≥ other` componentwise.
    pub fn covers(&self, other: &Marking) -> bool {
        other.iter().all(|(p, n)| self.get(p) >= n)
    }
}

impl FromIterator<(NodeId, u32)> for Marking {
    fn from_iter<I: IntoIterator<Item = (NodeId, u32)>>(iter: I) -> Self {
        let mut m = Marking::new();
        for (p, n) in iter {
            m.add(p, n);
        }
        m
    }
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, (p, n)) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            if n == 1 {
                write!(f, "#{}", p.0)?;
            } else {
                write!(f, "#{}^{}", p.0, n)?;
            }
        }
        write!(f, "]")
    }
}

pub(crate) fn is_enabled(net: &PetriNet, m: &Marking, t: NodeId) -> bool {
    net.is_transition(t) && net.preset(t).iter().all(|p| m.get(*p) >= 1)
}

pub(crate) fn enabled(net: &PetriNet, m: &Marking) -> Vec<NodeId> {
    net.transitions()
        .filter(|t| is_enabled(net, m, *t))
        .collect()
}

pub(crate) fn fire_unchecked(net: &PetriNet, m: &Marking, t: NodeId) -> Marking {
    let mut next = m.clone();
    for p in net.preset(t) {
        next.take(*p, 1);
    }
    for p in net.postset(t) {
        next.add(*p, 1);
    }
    next
}

pub(crate) fn fire(net: &PetriNet, m: &Marking, t: NodeId) -> Result<Marking, NetError> {
    if !is_enabled(net, m, t) {
        return Err(NetError::NotEnabled(net.name(t).to_owned()));
    }
    Ok(fire_unchecked(net, m, t))
}
