//! HashTag vector MDS codes, parity splitting into locally repairable and
//! locally regenerating codes, and repair planning with a seek/transfer cost
//! model that picks between local-only and local+global repair.

pub mod code;
pub mod costmodel;
pub mod error;
pub mod gf;
pub mod linalg;
pub mod locality;
pub mod repair;
pub mod storage;

pub use code::{decode, generate_code, verify_mds, verify_mds_blocks, CodeSpec, Codeword, DataBlock, LinearCode, MdsVerdict, NodeRole};
pub use error::{Error, Result};
pub use gf::{FieldElem, FieldSpec};
pub use linalg::GfMatrix;
pub use costmodel::{choose_strategy, coalesce_reads, estimate_time, CostModel};
pub use locality::{distance_bound, singleton_bound, split, verify_distance, LocalCode, LocalitySpec};
pub use repair::{bounds, execute, plan_local, plan_msr, plan_parity, plan_search, RepairPlan, Strategy};
pub use storage::{AnyCode, Manifest};
