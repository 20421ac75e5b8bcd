//! Vertex state machine and message algebra for the BSP validator.
//!
//! A vertex tracks one [`Status`] per shape label. Messages are merged per
//! (destination, label) with an associative, commutative operator: both
//! operands are decomposed into (validate, ds, oks, fs) components, unioned
//! componentwise, and renormalized, so homogeneous merges keep their pure
//! form and mixed merges become [`Msg::Combined`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::wgraph::EntityId;
use crate::wshex::ast::ShapeLabel;

/// A dependency on a neighbor: "node must conform to label, reached over
/// property".
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dep {
    pub node: EntityId,
    pub property: EntityId,
    pub label: ShapeLabel,
}

impl Dep {
    pub fn new(node: EntityId, property: EntityId, label: ShapeLabel) -> Self {
        Dep {
            node,
            property,
            label,
        }
    }
}

impl fmt::Display for Dep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.node, self.property, self.label)
    }
}

/// Validation status of one (vertex, label) pair.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Status {
    #[default]
    Undefined,
    Ok,
    Failed(String),
    Pending,
    WaitingFor {
        ds: BTreeSet<Dep>,
        oks: BTreeSet<Dep>,
        fs: BTreeSet<Dep>,
    },
}

impl Status {
    /// Whether the status is final (never changes once reached).
    pub fn is_resolved(&self) -> bool {
        matches!(self, Status::Ok | Status::Failed(_))
    }

    /// Short kind name for histograms and reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Status::Undefined => "undefined",
            Status::Ok => "ok",
            Status::Failed(_) => "failed",
            Status::Pending => "pending",
            Status::WaitingFor { .. } => "waiting",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Failed(reason) => write!(f, "failed: {reason}"),
            Status::WaitingFor { ds, oks, fs } => write!(
                f,
                "waiting ({} deps, {} ok, {} failed)",
                ds.len(),
                oks.len(),
                fs.len()
            ),
            other => f.write_str(other.kind()),
        }
    }
}

/// A message addressed to one label of one vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Msg {
    /// Request to validate the label at the destination.
    Validate,
    /// Dependencies the destination must wait for.
    WaitFor(BTreeSet<Dep>),
    /// Dependencies that resolved: succeeded (`oks`) or failed (`fs`).
    Checked {
        oks: BTreeSet<Dep>,
        fs: BTreeSet<Dep>,
    },
    /// Canonical merge of heterogeneous messages.
    Combined {
        validate: bool,
        ds: BTreeSet<Dep>,
        oks: BTreeSet<Dep>,
        fs: BTreeSet<Dep>,
    },
}

/// Componentwise decomposition of a message.
pub(crate) struct MsgParts {
    pub validate: bool,
    pub ds: BTreeSet<Dep>,
    pub oks: BTreeSet<Dep>,
    pub fs: BTreeSet<Dep>,
}

impl Msg {
    pub(crate) fn into_parts(self) -> MsgParts {
        match self {
            Msg::Validate => MsgParts {
                validate: true,
                ds: BTreeSet::new(),
                oks: BTreeSet::new(),
                fs: BTreeSet::new(),
            },
            Msg::WaitFor(ds) => MsgParts {
                validate: false,
                ds,
                oks: BTreeSet::new(),
                fs: BTreeSet::new(),
            },
            Msg::Checked { oks, fs } => MsgParts {
                validate: false,
                ds: BTreeSet::new(),
                oks,
                fs,
            },
            Msg::Combined {
                validate,
                ds,
                oks,
                fs,
            } => MsgParts {
                validate,
                ds,
                oks,
                fs,
            },
        }
    }

    /// Rebuild the canonical message for the given components: pure forms
    /// when only one component is present, `Combined` otherwise. Total over
    /// arbitrary components so that merging stays a semilattice; the
    /// validator never produces a dep reported both ok and failed, because a
    /// report reflects the target's status at one scan.
    pub(crate) fn from_parts(p: MsgParts) -> Msg {
        let has_checked = !(p.oks.is_empty() && p.fs.is_empty());
        match (p.validate, !p.ds.is_empty(), has_checked) {
            (true, false, false) => Msg::Validate,
            (false, true, false) => Msg::WaitFor(p.ds),
            (false, false, true) => Msg::Checked {
                oks: p.oks,
                fs: p.fs,
            },
            _ => Msg::Combined {
                validate: p.validate,
                ds: p.ds,
                oks: p.oks,
                fs: p.fs,
            },
        }
    }
}

impl fmt::Display for Msg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn set(f: &mut fmt::Formatter<'_>, deps: &BTreeSet<Dep>) -> fmt::Result {
            f.write_str("{")?;
            for (i, d) in deps.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{d}")?;
            }
            f.write_str("}")
        }
        match self {
            Msg::Validate => f.write_str("validate"),
            Msg::WaitFor(ds) => {
                f.write_str("wait-for ")?;
                set(f, ds)
            }
            Msg::Checked { oks, fs } => {
                f.write_str("checked ok=")?;
                set(f, oks)?;
                f.write_str(" failed=")?;
                set(f, fs)
            }
            Msg::Combined {
                validate,
                ds,
                oks,
                fs,
            } => {
                write!(f, "combined validate={validate} ds=")?;
                set(f, ds)?;
                f.write_str(" ok=")?;
                set(f, oks)?;
                f.write_str(" failed=")?;
                set(f, fs)
            }
        }
    }
}

/// Merge two messages for the same (vertex, label).
pub fn merge_msg(a: Msg, b: Msg) -> Msg {
    let (mut pa, pb) = (a.into_parts(), b.into_parts());
    pa.validate |= pb.validate;
    pa.ds.extend(pb.ds);
    pa.oks.extend(pb.oks);
    pa.fs.extend(pb.fs);
    Msg::from_parts(pa)
}

/// Messages addressed to one vertex, keyed by shape label.
pub type MsgMap = BTreeMap<ShapeLabel, Msg>;

/// Merge two message maps destined for the same vertex.
pub fn merge_msg_maps(mut a: MsgMap, b: MsgMap) -> MsgMap {
    for (label, msg) in b {
        match a.remove(&label) {
            Some(prev) => {
                a.insert(label, merge_msg(prev, msg));
            }
            None => {
                a.insert(label, msg);
            }
        }
    }
    a
}
