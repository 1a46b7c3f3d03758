//! Periodic convolution operators, their Fourier symbols, and the
//! soft-thresholding proximal map.

mod fft;
mod kernel;
mod prox;

pub use fft::{apply_otf, fft_plan, kernel_otf, Fft2d, Otf};
pub use kernel::{adjoint_conv, conv_periodic, make_diff_bank, Kernel, KernelBank};
pub use prox::{soft_threshold, soft_threshold_grid};
