//! Tourist-recommendation dialogue engine.
//!
//! Visitor utterances are classified into information categories by
//! optimal-transport sentence similarity over word vectors, a finite-state
//! dialogue steers the visitor toward a recommended spot, and every robot
//! reply carries an expression event for the face.

pub mod attractions;
pub mod dialogue;
pub mod embeddings;
pub mod expression;
pub mod intent;
pub mod service;
pub mod similarity;
