//! Process discovery with free-choice synthesis rules.
//!
//! The miner grows a sound, free-choice workflow net one activity at a time.
//! Each iteration projects the event log onto the activities placed so far,
//! narrows the net to the nodes that lie between the causal predecessors and
//! successors of the next activity, applies rule-derived patterns inside that
//! region and keeps the candidate with the best fitness/precision trade-off.
//!
//! The order in which activities are added is pluggable: frequency based, or
//! breadth/depth first over the directly-follows graph, starting from either
//! end of the log.
//!
//! ```
//! use synthminer::log::EventLog;
//! use synthminer::miner::{discover, DiscoveryConfig};
//!
//! let log = EventLog::from_variants([(vec!["a", "b", "c"], 3)]);
//! let (net, report) = discover(&log, &DiscoveryConfig::default()).unwrap();
//! assert_eq!(report.iterations.len(), 3);
//! assert!(net.visible_labels().len() == 3);
//! ```

pub mod candidates;
pub mod linalg;
pub mod log;
pub mod miner;
pub mod net;
pub mod ordering;
pub mod quality;
pub mod rational;
pub mod reduction;
pub mod rules;

pub use crate::log::{ActivityLabel, EventLog, Trace};
pub use crate::net::{NodeId, NodeKind, PetriNet, WorkflowNet};
pub use crate::rational::Rational;
