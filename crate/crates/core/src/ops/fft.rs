//! 2D FFTs over row-major grids and kernel transfer functions.
//!
//! Forward transform convention: `X(kr, kc) = sum x(i, j) exp(-2 pi i (kr i / H + kc j / W))`,
//! inverse normalized by `1 / (H W)`. Plans are cached per `(height, width)`.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::kernel::Kernel;
use crate::error::{Error, Result};
use crate::grid::Grid;

pub struct Fft2d {
    height: usize,
    width: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2d")
            .field("height", &self.height)
            .field("width", &self.width)
            .finish()
    }
}

impl Fft2d {
    fn new(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2d {
            height,
            width,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn forward(&self, g: &Grid) -> Vec<Complex64> {
        debug_assert_eq!(g.dims(), self.dims());
        let mut buf: Vec<Complex64> = g.as_slice().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.row_fwd, &self.col_fwd);
        buf
    }

    /// Inverse transform, keeping the real part.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> Grid {
        self.transform(&mut spectrum, &self.row_inv, &self.col_inv);
        let norm = 1.0 / (self.height * self.width) as f64;
        let values = spectrum.into_iter().map(|c| c.re * norm).collect();
        Grid::from_vec(self.height, self.width, values).expect("finite inverse transform")
    }

    fn transform(&self, buf: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        let (h, w) = (self.height, self.width);
        rows.process(buf);
        if h > 1 {
            let mut t = vec![Complex64::default(); h * w];
            transpose(buf, &mut t, h, w);
            cols.process(&mut t);
            transpose(&t, buf, w, h);
        }
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    for i in 0..rows {
        for j in 0..cols {
            dst[j * rows + i] = src[i * cols + j];
        }
    }
}

type PlanCache = RwLock<HashMap<(usize, usize), Arc<Fft2d>>>;

/// Shared 2D FFT plan for the given dimensions.
pub fn fft_plan(height: usize, width: usize) -> Arc<Fft2d> {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(plan) = cache.read().expect("fft cache poisoned").get(&(height, width)) {
        return Arc::clone(plan);
    }
    let mut guard = cache.write().expect("fft cache poisoned");
    Arc::clone(
        guard
            .entry((height, width))
            .or_insert_with(|| Arc::new(Fft2d::new(height, width))),
    )
}

/// Fourier symbol of a periodic correlation operator on an `H x W` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Otf {
    height: usize,
    width: usize,
    values: Vec<Complex64>,
}

impl Otf {
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Symbol at row frequency `kr`, column frequency `kc`.
    pub fn at(&self, kr: usize, kc: usize) -> Complex64 {
        self.values[kr * self.width + kc]
    }

    /// `|K^(w)|^2` per frequency bin.
    pub fn power(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.norm_sqr()).collect()
    }
}

pub fn kernel_otf(k: &Kernel, height: usize, width: usize) -> Result<Otf> {
    if k.side() > height.min(width) {
        return Err(Error::arg(format!(
            "{}x{} kernel does not fit a {}x{} grid",
            k.side(),
            k.side(),
            height,
            width
        )));
    }
    // Correlation with taps k(a, b) has symbol sum k(a, b) exp(+2 pi i (a kr / H + b kc / W)),
    // i.e. the conjugate DFT of the taps wrapped onto the grid.
    let mut placed = Grid::zeros(height, width);
    for (a, b, t) in k.support() {
        let i = a.rem_euclid(height as isize) as usize;
        let j = b.rem_euclid(width as isize) as usize;
        placed[(i, j)] += t;
    }
    let values = fft_plan(height, width)
        .forward(&placed)
        .into_iter()
        .map(|c| c.conj())
        .collect();
    Ok(Otf {
        height,
        width,
        values,
    })
}

pub fn apply_otf(img: &Grid, otf: &Otf) -> Result<Grid> {
    if img.dims() != otf.dims() {
        return Err(Error::Shape {
            expected: otf.dims(),
            actual: img.dims(),
        });
    }
    let plan = fft_plan(img.height(), img.width());
    let mut spec = plan.forward(img);
    for (s, o) in spec.iter_mut().zip(&otf.values) {
        *s *= o;
    }
    Ok(plan.inverse_real(spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{conv_periodic, make_diff_bank};
    use std::f64::consts::PI;

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed;
        move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        }
    }

    #[test]
    fn delta_symbol_is_one() {
        let otf = kernel_otf(&Kernel::delta(2), 6, 8).unwrap();
        for c in otf.values() {
            assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn diff_x_closed_form_symbol() {
        let (h, w) = (4, 8);
        let otf = kernel_otf(&Kernel::diff_x(1), h, w).unwrap();
        assert_eq!(otf.at(0, 0), Complex64::new(0.0, 0.0));
        for kr in 0..h {
            for kc in 0..w {
                let expect = Complex64::from_polar(1.0, 2.0 * PI * kc as f64 / w as f64) - 1.0;
                assert!((otf.at(kr, kc) - expect).norm() < 1e-14);
            }
        }
        let peak = otf.power().into_iter().fold(0.0, f64::max);
        assert!((peak - 4.0).abs() < 1e-14);
        assert!((otf.at(0, w / 2).norm_sqr() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn kernel_too_large() {
        assert!(kernel_otf(&Kernel::delta(2), 4, 8).is_err());
        assert!(kernel_otf(&Kernel::delta(2), 5, 5).is_ok());
    }

    #[test]
    fn fft_route_matches_direct() {
        let mut rnd = lcg(11);
        for &(h, w, r) in &[(8, 8, 2), (7, 5, 1), (1, 9, 0), (32, 17, 3), (12, 32, 2)] {
            let img = Grid::from_fn(h, w, |_, _| rnd());
            let side = 2 * r + 1;
            let k = Kernel::new(r, (0..side * side).map(|_| rnd()).collect()).unwrap();
            let direct = conv_periodic(&img, &k);
            let spectral = apply_otf(&img, &kernel_otf(&k, h, w).unwrap()).unwrap();
            assert!(direct.sub(&spectral).unwrap().norm_inf() < 1e-10, "{h}x{w}");
        }
    }

    #[test]
    fn plans_are_shared() {
        let a = fft_plan(10, 12);
        let b = fft_plan(10, 12);
        assert!(Arc::ptr_eq(&a, &b));
    }

    #[test]
    fn roundtrip_transform() {
        let mut rnd = lcg(5);
        let g = Grid::from_fn(9, 6, |_, _| rnd());
        let plan = fft_plan(9, 6);
        let back = plan.inverse_real(plan.forward(&g));
        assert!(back.sub(&g).unwrap().norm_inf() < 1e-14);
        let bank = make_diff_bank(2, 1).unwrap();
        let _ = kernel_otf(&bank.kernels()[1], 9, 6).unwrap();
    }
}
