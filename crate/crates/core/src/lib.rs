//! QoS-aware service composition: QoS scaling, associative classification
//! into QoS levels, semantic link matching over a concept taxonomy, and
//! greedy composite selection with alternatives and runtime replacement.

mod bitset;

pub mod bench;
pub mod cba;
pub mod composer;
pub mod engine;
pub mod io;
pub mod leveling;
pub mod ontology;
pub mod qos;
pub mod report;
