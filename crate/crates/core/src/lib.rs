//! Qutrit contextuality simulation and analysis on the 13-ray Yu-Oh set.

pub mod dataset;
pub mod detection;
pub mod diagnostics;
pub mod error;
pub mod exact;
pub mod fit;
pub mod graph;
pub mod memory;
pub mod qutrit;
pub mod rays;
pub mod report;
pub mod sim;
pub mod stats;

pub use error::*;
pub use qutrit::{Outcome, QutritState};
pub use rays::RayId;
pub use sim::{run_campaign, Campaign, CampaignOptions, NoiseConfig};
