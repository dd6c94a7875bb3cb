pub mod assembly;
pub mod catalog;
pub mod circuit;
pub mod combin;
pub mod css;
pub mod decoder;
pub mod gadget;
pub mod gf2;
pub mod io;
pub mod noise;
pub mod pauli;
pub mod steane_qec;
pub mod synth;
pub mod tableau;
pub mod verify;
