//! Cross-camera person re-identification with personal, social and
//! environmental constraints.
//!
//! Tracks leaving camera a are matched one-to-one with tracks entering
//! camera b by minimizing a quadratic objective over binary match
//! indicators. Linear terms score single hypotheses (appearance, preferred
//! speed, gate transitions, and with a known topology the speed along the
//! interpolated unobserved path). Quadratic terms score pairs of hypotheses
//! (spatial and social grouping, collision avoidance).
//!
//! ```no_run
//! use pse_reid::pipeline::{run_pipeline, RunConfig};
//!
//! let rc = RunConfig {
//!     scenario: "scenario.json".into(),
//!     out_dir: "out".into(),
//!     ..RunConfig::default()
//! };
//! let summary = run_pipeline(&rc).unwrap();
//! println!("F = {:?}", summary.fscore);
//! ```

mod error;

pub mod appearance;
pub mod evaluation;
pub mod motioncosts;
pub mod objective;
pub mod pipeline;
pub mod solvers;
pub mod synth;
pub mod topology;
pub mod trackdata;
pub mod transitions;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use objective::{assemble_cost_model, loss, Assignment, CostModel, Weights};
pub use trackdata::{Hypothesis, Scenario, Track};
