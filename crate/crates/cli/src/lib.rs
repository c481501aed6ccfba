//! IO, file formats and command drivers for `contour-crf`.

pub mod commands;
pub mod formats;
pub mod imageio;
