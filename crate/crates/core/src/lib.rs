//! A deterministic mini-MapReduce engine and a spiking cortical network
//! simulated on top of it.
//!
//! * [`engine`]: generic map / combine / shuffle / reduce runtime with job
//!   chaining and injected task kills.
//! * [`simjob`]: the network simulation as one MapReduce job per millisecond.
//! * [`oracle`]: a plain sequential simulator that must agree with the
//!   engine bit for bit.
//! * [`neuron`], [`network`], [`rng`]: the model itself.

pub mod analysis;
pub mod cli;
pub mod engine;
pub mod network;
pub mod neuron;
pub mod oracle;
pub mod rng;
pub mod simjob;
pub mod spikes;
