pub mod channel;
pub mod codec;
pub mod controller;
pub mod overhead;
pub mod posture;
pub mod rng;
pub mod sim;
pub mod symbols;
pub mod tensor;
pub mod weights;
