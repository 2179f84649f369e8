//! Self-instructed repair of hardware security weaknesses in RTL.
//!
//! A model first writes debugging instructions for a CWE from reference
//! vulnerable/secure pairs, then applies them to unseen vulnerable snippets.
//! Repairs are validated with structural security checks.

pub mod corpus;
pub mod pipeline;
pub mod prompt;
pub mod provider;
pub mod report;
pub mod rtlcheck;
