//! Simulation and control stack for a single-synergy robot hand fitted with an
//! optical marker-pin tactile fingertip.
//!
//! The crate is split along the sensorimotor pipeline:
//!
//! * [`tactile_sim`] deforms the 5×9 marker-pin membrane under an edge stimulus
//!   and renders the internal camera image.
//! * [`imaging`] holds the image pipeline (adaptive threshold, subsample/crop)
//!   and the SSIM contact-deformation measure.
//! * [`posenet`] generates labelled contact datasets and trains a from-scratch
//!   convolutional regressor for edge pose.
//! * [`control`] models the one-degree-of-actuation hand as a plant and runs the
//!   proportional set-point-increment controllers.
//! * [`harness`] wires everything into reproducible experiment runs.

pub mod control;
pub mod error;
pub mod harness;
pub mod imaging;
pub mod posenet;
pub mod seed;
pub mod tactile_sim;

pub use error::{Error, Result};
