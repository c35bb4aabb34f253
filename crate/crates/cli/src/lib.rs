//! Scenario files, figure presets, CSV/JSON output and the verification
//! suite behind the `lambda-soliton` command.

pub mod output;
pub mod presets;
pub mod run;
pub mod scenario;
pub mod verify;
