//! Test problems: the 2-D shaw problem, separable Gaussian blur of synthetic
//! images, the seeded noise model, error metrics and PGM export.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::Mat;

/// Variant of the shaw kernel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShawKernel {
    /// `(cos s + cos t)² (sin u / u)²`, `u = π(sin s + sin t)`.
    #[default]
    Canonical,
    /// `(cos σ + sin τ)² (sin ξ / ξ)²`, `ξ = π(sin σ + cos τ)` with `τ` the
    /// row and `σ` the column abscissa. Kept for side-by-side comparison.
    Displayed,
}

/// Midpoint grid `tᵢ = −π/2 + (i + ½) h`, `h = π/n`.
pub fn shaw_grid(n: usize) -> Vec<f64> {
    let h = PI / n as f64;
    (0..n).map(|i| -PI / 2.0 + (i as f64 + 0.5) * h).collect()
}

fn sinc2(u: f64) -> f64 {
    if u == 0.0 {
        1.0
    } else {
        (u.sin() / u).powi(2)
    }
}

fn check_shaw_order(n: usize) -> Result<()> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::dim(format!("shaw needs an even n >= 4, got {n}")));
    }
    Ok(())
}

/// `n × n` midpoint-rule discretization of the shaw kernel on `[−π/2, π/2]`.
pub fn shaw_matrix(n: usize) -> Result<Mat> {
    shaw_matrix_with(n, ShawKernel::Canonical)
}

pub fn shaw_matrix_with(n: usize, kernel: ShawKernel) -> Result<Mat> {
    check_shaw_order(n)?;
    let h = PI / n as f64;
    let t = shaw_grid(n);
    let (sin, cos): (Vec<f64>, Vec<f64>) = t.iter().map(|x| (x.sin(), x.cos())).unzip();
    Ok(Mat::from_fn(n, n, |i, j| match kernel {
        ShawKernel::Canonical => {
            let u = PI * (sin[i] + sin[j]);
            h * (cos[i] + cos[j]).powi(2) * sinc2(u)
        }
        ShawKernel::Displayed => {
            let xi = PI * (sin[j] + cos[i]);
            h * (cos[j] + sin[i]).powi(2) * sinc2(xi)
        }
    }))
}

/// Shaw solution shifted by one: `2e^{−6(t−0.8)²} + e^{−2(t+0.5)²} + 1`.
pub fn shaw_true_solution(n: usize) -> Result<Vec<f64>> {
    check_shaw_order(n)?;
    Ok(shaw_grid(n)
        .into_iter()
        .map(|t| 2.0 * (-6.0 * (t - 0.8).powi(2)).exp() + (-2.0 * (t + 0.5).powi(2)).exp() + 1.0)
        .collect())
}

/// Symmetric banded Toeplitz Gaussian blur with first row
/// `zⱼ = exp(−j²/(2σ²)) / (σ√(2π))` for `j < band`.
pub fn blur_matrix(n: usize, band: usize, sigma: f64) -> Result<Mat> {
    if band == 0 || band > n {
        return Err(Error::dim(format!("band must lie in 1..={n}, got {band}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let c = 1.0 / (sigma * (2.0 * PI).sqrt());
    let z: Vec<f64> = (0..band)
        .map(|j| c * (-((j * j) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    Ok(Mat::from_fn(n, n, |i, j| {
        z.get(i.abs_diff(j)).copied().unwrap_or(0.0)
    }))
}

/// Default blur parameters of the deblurring experiments.
pub const BLUR_BAND: usize = 5;
pub const BLUR_SIGMA: f64 = 1.5;

/// SplitMix64 generator; the noise stream is defined in terms of it so that
/// any implementation reproduces the same perturbation for a given seed.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform double strictly inside `(0, 1)`: `((x >> 11) + ½) / 2⁵³`.
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    /// Fills `count` standard normals with Box–Muller on consecutive uniform
    /// pairs `(u₁, u₂)`: `√(−2 ln u₁)·cos 2πu₂`, then `·sin 2πu₂`.
    pub fn normals(&mut self, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count + 1);
        while out.len() < count {
            let u1 = self.next_open01();
            let u2 = self.next_open01();
            let r = (-2.0 * u1.ln()).sqrt();
            let theta = 2.0 * PI * u2;
            out.push(r * theta.cos());
            out.push(r * theta.sin());
        }
        out.truncate(count);
        out
    }
}

/// Exact data, perturbed data and the size of the perturbation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NoisySetup {
    pub b_exact: Mat,
    pub b_noisy: Mat,
    /// `‖E‖_F`
    pub eps: f64,
    pub noise_level: f64,
    pub seed: u64,
}

/// Adds white Gaussian noise scaled to `‖E‖_F = ν ‖B̂‖_F`.
///
/// `E₀` is drawn row-major from [`SplitMix64::normals`] seeded with `seed`.
pub fn add_noise(b_exact: &Mat, nu: f64, seed: u64) -> Result<NoisySetup> {
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(Error::Domain(format!("noise level must be >= 0, got {nu}")));
    }
    if nu == 0.0 {
        return Ok(NoisySetup {
            b_exact: b_exact.clone(),
            b_noisy: b_exact.clone(),
            eps: 0.0,
            noise_level: 0.0,
            seed,
        });
    }
    let bnorm = b_exact.frobenius_norm();
    if bnorm == 0.0 {
        return Err(Error::Degenerate(
            "cannot scale noise relative to zero data".into(),
        ));
    }
    let (rows, cols) = b_exact.shape();
    let e0 = Mat::from_vec(rows, cols, SplitMix64::new(seed).normals(rows * cols))?;
    let e = e0.scale(nu * bnorm / e0.frobenius_norm());
    Ok(NoisySetup {
        b_noisy: b_exact + &e,
        b_exact: b_exact.clone(),
        eps: e.frobenius_norm(),
        noise_level: nu,
        seed,
    })
}

/// Synthetic test images.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageKind {
    /// Binary QR-code-like pattern with modules of `⌈n/25⌉` pixels.
    Checker,
    /// Bright piecewise-constant shapes on a dark background.
    Blocks,
    /// Row `i` has the constant value `i/(n−1)`.
    Gradient,
}

pub fn synthetic_image(kind: ImageKind, n: usize) -> Result<Mat> {
    if n < 8 {
        return Err(Error::dim(format!("synthetic images need n >= 8, got {n}")));
    }
    Ok(match kind {
        ImageKind::Checker => qr_like(n),
        ImageKind::Blocks => satellite_like(n),
        ImageKind::Gradient => Mat::from_fn(n, n, |i, _| i as f64 / (n - 1) as f64),
    })
}

fn qr_like(n: usize) -> Mat {
    let module = n.div_ceil(25);
    let m = n.div_ceil(module);
    // one light module of quiet zone on every side
    let inner = m.saturating_sub(2);
    let mut rng = SplitMix64::new(0x5152_436F_6465);
    let mut dark = vec![vec![false; m]; m];
    for row in dark.iter_mut().take(m - 1).skip(1) {
        for cell in row.iter_mut().take(m - 1).skip(1) {
            *cell = rng.next_u64() >> 63 == 1;
        }
    }
    if inner >= 15 {
        let corners = [(1, 1), (1, m - 8), (m - 8, 1)];
        for &(r0, c0) in &corners {
            // clear separator ring, then draw 7x7 finder
            let (c_lo, c_hi) = ((c0 - 1).max(1), (c0 + 8).min(m - 1));
            for row in &mut dark[(r0 - 1).max(1)..(r0 + 8).min(m - 1)] {
                row[c_lo..c_hi].fill(false);
            }
            for r in 0..7 {
                for c in 0..7 {
                    let ring = r == 0 || r == 6 || c == 0 || c == 6;
                    let core = (2..=4).contains(&r) && (2..=4).contains(&c);
                    dark[r0 + r][c0 + c] = ring || core;
                }
            }
        }
    }
    Mat::from_fn(n, n, |i, j| {
        if dark[i / module][j / module] {
            0.0
        } else {
            1.0
        }
    })
}

fn satellite_like(n: usize) -> Mat {
    let f = |x: f64| (x * n as f64).round() as usize;
    let c = n as f64 / 2.0;
    // body, two panels, antenna disc
    let body = (f(0.40), f(0.60), f(0.38), f(0.62));
    let panel_l = (f(0.45), f(0.55), f(0.08), f(0.34));
    let panel_r = (f(0.45), f(0.55), f(0.66), f(0.92));
    let radius = 0.07 * n as f64;
    let inside = |r: (usize, usize, usize, usize), i: usize, j: usize| {
        i >= r.0 && i < r.1 && j >= r.2 && j < r.3
    };
    Mat::from_fn(n, n, |i, j| {
        let (y, x) = (i as f64 + 0.5, j as f64 + 0.5);
        if inside(body, i, j) {
            1.0
        } else if inside(panel_l, i, j) || inside(panel_r, i, j) {
            0.6
        } else if ((y - (c - 0.22 * n as f64)).powi(2) + (x - c).powi(2)).sqrt() <= radius {
            0.8
        } else {
            0.0
        }
    })
}

/// `‖x − x_true‖_F / ‖x_true‖_F`
pub fn relative_error(x: &Mat, x_true: &Mat) -> Result<f64> {
    if x.shape() != x_true.shape() {
        return Err(Error::dim("solution and reference differ in shape"));
    }
    let denom = x_true.frobenius_norm();
    if denom == 0.0 {
        return Err(Error::Domain("reference solution is zero".into()));
    }
    Ok((x - x_true).frobenius_norm() / denom)
}

/// A complete test problem: Kronecker factors, truth and noisy data.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub name: String,
    pub k1_factor: Mat,
    pub k2_factor: Mat,
    pub x_true: Mat,
    pub setup: NoisySetup,
}

impl ProblemInstance {
    /// `B̂ = K⁽¹⁾ X̂ K⁽²⁾ᵀ` plus seeded noise of level `nu`.
    pub fn from_parts(
        name: impl Into<String>,
        k1_factor: Mat,
        k2_factor: Mat,
        x_true: Mat,
        nu: f64,
        seed: u64,
    ) -> Result<Self> {
        let b_exact = k1_factor.matmul(&x_true)?.matmul_t(&k2_factor);
        let setup = add_noise(&b_exact, nu, seed)?;
        Ok(ProblemInstance {
            name: name.into(),
            k1_factor,
            k2_factor,
            x_true,
            setup,
        })
    }

    /// 2-D shaw problem with `X̂ = x̂ x̂ᵀ`.
    pub fn shaw2d(n: usize, nu: f64, seed: u64) -> Result<Self> {
        let k = shaw_matrix(n)?;
        let x = Mat::column(&shaw_true_solution(n)?);
        let x_true = x.matmul_t(&x);
        ProblemInstance::from_parts("shaw2d", k.clone(), k, x_true, nu, seed)
    }

    /// Separable Gaussian blur (`band = 5`, `σ = 1.5`) of a synthetic image.
    pub fn blur(n: usize, image: ImageKind, nu: f64, seed: u64) -> Result<Self> {
        let k = blur_matrix(n, BLUR_BAND, BLUR_SIGMA)?;
        let x_true = synthetic_image(image, n)?;
        ProblemInstance::from_parts("blur", k.clone(), k, x_true, nu, seed)
    }
}

/// Encodes a matrix as an 8-bit binary PGM (P5), mapping `[min, max]`
/// linearly onto `[0, 255]`; a constant matrix renders as 128.
pub fn encode_pgm(img: &Mat) -> Vec<u8> {
    let (rows, cols) = img.shape();
    let (lo, hi) = img
        .as_slice()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.extend(img.as_slice().iter().map(|&v| {
        if hi > lo {
            ((v - lo) / (hi - lo) * 255.0).round().clamp(0.0, 255.0) as u8
        } else {
            128
        }
    }));
    out
}

pub fn write_pgm(img: &Mat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

/// Decodes an 8-bit P5 image into a matrix of raw gray levels `0..=255`.
pub fn decode_pgm(bytes: &[u8]) -> Result<Mat> {
    let bad = |m: &str| Error::Parse {
        path: "<pgm>".into(),
        message: m.to_string(),
    };
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields
            .push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not ASCII"))?);
    }
    if fields[0] != "P5" {
        return Err(bad("not a binary PGM"));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (cols, rows, maxval) = (parse(fields[1])?, parse(fields[2])?, parse(fields[3])?);
    if maxval != 255 {
        return Err(bad("only 8-bit images are supported"));
    }
    let data = &bytes[pos + 1..];
    if data.len() != rows * cols {
        return Err(bad("pixel count does not match header"));
    }
    Mat::from_vec(rows, cols, data.iter().map(|&b| b as f64).collect())
}
