use crate::error::{Error, Result};
use crate::grid::Grid;

/// A `(2R+1) x (2R+1)` stencil anchored at its center tap.
///
/// Taps are applied as a correlation: `(K u)(i, j) = sum_{a,b} k(a, b) u(i + a, j + b)`
/// with offsets `a, b` in `-R..=R` and periodic wrap at the image border.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    radius: usize,
    taps: Vec<f64>,
}

impl Kernel {
    pub fn new(radius: usize, taps: Vec<f64>) -> Result<Self> {
        let side = 2 * radius + 1;
        if taps.len() != side * side {
            return Err(Error::arg(format!(
                "radius {radius} kernel needs {} taps, got {}",
                side * side,
                taps.len()
            )));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::arg("kernel taps must be finite"));
        }
        Ok(Kernel { radius, taps })
    }

    pub fn zeros(radius: usize) -> Self {
        let side = 2 * radius + 1;
        Kernel {
            radius,
            taps: vec![0.0; side * side],
        }
    }

    /// Identity stencil: a single unit tap at the anchor.
    pub fn delta(radius: usize) -> Self {
        let mut k = Kernel::zeros(radius);
        k.set(0, 0, 1.0);
        k
    }

    /// Forward difference along columns: `u(i, j+1) - u(i, j)`.
    pub fn diff_x(radius: usize) -> Self {
        assert!(radius >= 1);
        let mut k = Kernel::zeros(radius);
        k.set(0, 0, -1.0);
        k.set(0, 1, 1.0);
        k
    }

    /// Forward difference along rows: `u(i+1, j) - u(i, j)`.
    pub fn diff_y(radius: usize) -> Self {
        assert!(radius >= 1);
        let mut k = Kernel::zeros(radius);
        k.set(0, 0, -1.0);
        k.set(1, 0, 1.0);
        k
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    /// Row-major taps, `side * side` entries.
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn taps_mut(&mut self) -> &mut [f64] {
        &mut self.taps
    }

    /// Tap at row offset `a`, column offset `b` from the anchor.
    pub fn get(&self, a: isize, b: isize) -> f64 {
        let r = self.radius as isize;
        self.taps[((a + r) as usize) * self.side() + (b + r) as usize]
    }

    pub fn set(&mut self, a: isize, b: isize, value: f64) {
        let r = self.radius as isize;
        let side = self.side();
        self.taps[((a + r) as usize) * side + (b + r) as usize] = value;
    }

    /// Nonzero taps as `(row offset, column offset, value)`.
    pub(crate) fn support(&self) -> impl Iterator<Item = (isize, isize, f64)> + '_ {
        let r = self.radius as isize;
        let side = self.side();
        self.taps
            .iter()
            .enumerate()
            .filter(|(_, &t)| t != 0.0)
            .map(move |(idx, &t)| ((idx / side) as isize - r, (idx % side) as isize - r, t))
    }
}

/// Ordered family of kernels sharing one radius.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBank {
    kernels: Vec<Kernel>,
}

impl KernelBank {
    pub fn new(kernels: Vec<Kernel>) -> Result<Self> {
        let first = kernels
            .first()
            .ok_or_else(|| Error::arg("kernel bank must hold at least one kernel"))?;
        if kernels.iter().any(|k| k.radius() != first.radius()) {
            return Err(Error::arg("all kernels in a bank must share one radius"));
        }
        Ok(KernelBank { kernels })
    }

    pub fn width(&self) -> usize {
        self.kernels.len()
    }

    pub fn radius(&self) -> usize {
        self.kernels[0].radius()
    }

    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Kernel> {
        self.kernels.iter()
    }

    pub fn into_kernels(self) -> Vec<Kernel> {
        self.kernels
    }
}

/// Alternating `diff_x, diff_y, diff_x, ...` bank of `m` kernels with radius `radius`.
pub fn make_diff_bank(m: usize, radius: usize) -> Result<KernelBank> {
    if m == 0 || !m.is_multiple_of(2) {
        return Err(Error::arg(format!(
            "difference bank width must be even and positive, got {m}"
        )));
    }
    if radius == 0 {
        return Err(Error::arg("difference stencil needs radius >= 1"));
    }
    let kernels = (0..m)
        .map(|idx| {
            if idx % 2 == 0 {
                Kernel::diff_x(radius)
            } else {
                Kernel::diff_y(radius)
            }
        })
        .collect();
    KernelBank::new(kernels)
}

/// Periodic correlation of `img` with the stencil `k`.
pub fn conv_periodic(img: &Grid, k: &Kernel) -> Grid {
    stencil(img, k, 1)
}

/// Adjoint of [`conv_periodic`]: correlation with the 180-degree rotated stencil.
pub fn adjoint_conv(img: &Grid, k: &Kernel) -> Grid {
    stencil(img, k, -1)
}

fn stencil(img: &Grid, k: &Kernel, sign: isize) -> Grid {
    let (h, w) = img.dims();
    let mut out = Grid::zeros(h, w);
    let src = img.as_slice();
    let dst = out.as_mut_slice();
    for (a, b, t) in k.support() {
        let di = (sign * a).rem_euclid(h as isize) as usize;
        let dj = (sign * b).rem_euclid(w as isize) as usize;
        for i in 0..h {
            let si = (i + di) % h;
            let row_src = &src[si * w..(si + 1) * w];
            let row_dst = &mut dst[i * w..(i + 1) * w];
            for (j, d) in row_dst.iter_mut().enumerate() {
                let sj = if j + dj >= w { j + dj - w } else { j + dj };
                *d += t * row_src[sj];
            }
        }
    }
    out
}
