pub mod calibrate;
pub mod cli;
pub mod contour;
pub mod mask;
pub mod mog;
pub mod omega;
pub mod pipeline;
pub mod pixbuf;
pub mod synth;
